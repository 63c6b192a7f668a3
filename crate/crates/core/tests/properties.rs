//! Property tests for the physical and algebraic invariants the modules
//! promise: convexity and conservation in the plant model, monotonicity and
//! symmetry of the angle law, ordering guarantees of the network, and
//! order-independence of the analytics.

use proptest::prelude::*;

use roomflow_core::controller::{clamp_command, compute_angle, ControlRequest};
use roomflow_core::metrics::{self, DEFAULT_AHU_SETPOINT_F};
use roomflow_core::scenario::{run_scenario, OccupancySpec, Scenario};
use roomflow_core::thermal::{
    step_room, volumetric_flow, DuctAir, PhysicalConstants, RoomState,
};
use roomflow_core::wsn::{
    sample, EventQueue, LinkId, NetLink, NodeId, NoiseModel, Payload, SensorReading, SimTime,
};

fn constants() -> PhysicalConstants {
    PhysicalConstants::default()
}

fn room(temperature_c: f64, volume_m3: f64) -> RoomState {
    RoomState {
        temperature_c,
        volume_m3,
        occupants: 0,
    }
}

fn duct(temperature_c: f64, speed_m_per_min: f64) -> DuctAir {
    DuctAir {
        temperature_c,
        speed_m_per_min,
    }
}

proptest! {
    // Zero flow, zero gains: the temperature does not move at all.
    #[test]
    fn closed_damper_is_an_exact_fixpoint(
        t0 in -10.0f64..40.0,
        k_out in -10.0f64..40.0,
        dt in 0.25f64..2.0,
    ) {
        let state = room(t0, 150.0);
        let next = step_room(&state, 0.0, &duct(k_out, 100.0), &constants(), 0.0, dt).unwrap();
        prop_assert_eq!(next.temperature_c, t0);
    }

    // With no gains the step is a convex combination of room and duct air.
    #[test]
    fn step_stays_between_room_and_duct(
        t0 in -10.0f64..40.0,
        k_out in -10.0f64..40.0,
        alpha in 0.0f64..89.9,
        speed in 0.0f64..500.0,
        volume in 10.0f64..500.0,
        dt in 0.25f64..2.0,
    ) {
        let state = room(t0, volume);
        let next = step_room(&state, alpha, &duct(k_out, speed), &constants(), 0.0, dt).unwrap();
        let low = t0.min(k_out);
        let high = t0.max(k_out);
        prop_assert!(next.temperature_c >= low && next.temperature_c <= high,
            "T' = {} outside [{low}, {high}]", next.temperature_c);
    }

    // Constant angle, no gains, duct colder than the room: strictly
    // decreasing, bounded below by the duct temperature, and equal to the
    // closed form K_out + (T0 − K_out)(1 − f)^n while unsaturated.
    #[test]
    fn constant_angle_converges_on_the_closed_form(
        t0 in 20.0f64..35.0,
        k_out in 5.0f64..15.0,
        alpha in 0.5f64..45.0,
        volume in 50.0f64..400.0,
        steps in 1usize..60,
    ) {
        let d = duct(k_out, 100.0);
        let c = constants();
        let flow = volumetric_flow(alpha, &d, &c).unwrap();
        let fraction = flow * 1.0 / volume;
        prop_assume!(fraction < 1.0);

        let mut state = room(t0, volume);
        let mut previous = t0;
        for n in 1..=steps {
            state = step_room(&state, alpha, &d, &c, 0.0, 1.0).unwrap();
            prop_assert!(state.temperature_c < previous);
            prop_assert!(state.temperature_c > k_out);
            previous = state.temperature_c;

            let closed = k_out + (t0 - k_out) * (1.0 - fraction).powi(n as i32);
            let scale = closed.abs().max(1.0);
            prop_assert!((state.temperature_c - closed).abs() <= 1e-9 * scale,
                "n = {n}: {} vs closed form {closed}", state.temperature_c);
        }
    }

    // Opening the damper further always admits more air.
    #[test]
    fn flow_is_strictly_increasing_in_angle(
        lower in 0.1f64..88.0,
        gap in 0.1f64..1.9,
        speed in 1.0f64..500.0,
    ) {
        let upper = (lower + gap).min(89.9);
        let d = duct(12.8, speed);
        let low = volumetric_flow(lower, &d, &constants()).unwrap();
        let high = volumetric_flow(upper, &d, &constants()).unwrap();
        prop_assert!(high > low, "flow({upper}) = {high} <= flow({lower}) = {low}");
    }

    // Negating both temperature differences leaves the angle bit-identical:
    // the law depends on their ratio only.
    #[test]
    fn angle_law_is_antisymmetric_in_the_differences(
        k_in in 10.0f64..30.0,
        want in 0.5f64..10.0,
        extra in 0.1f64..10.0,
        dt in 1.0f64..60.0,
        speed in 10.0f64..200.0,
        volume in 50.0f64..400.0,
    ) {
        // Duct past the target on the same side, so both directions are feasible.
        let drive = want + extra;
        let c = constants();
        let cooling = compute_angle(k_in - want, k_in, k_in - drive, dt, speed, volume, &c);
        let heating = compute_angle(k_in + want, k_in, k_in + drive, dt, speed, volume, &c);
        prop_assert_eq!(cooling.unwrap(), heating.unwrap());
    }

    // tan(α) grows with the remaining error and shrinks with more time,
    // faster duct air, or a larger damper plate.
    #[test]
    fn angle_law_monotonicity(
        k_in in 20.0f64..30.0,
        want in 0.5f64..5.0,
        dt in 2.0f64..40.0,
        speed in 20.0f64..150.0,
        volume in 50.0f64..400.0,
        factor in 1.05f64..3.0,
    ) {
        let c = constants();
        let k_out = 12.0;
        prop_assume!(k_in - want * factor > k_out + 0.5);
        let tan_of = |result: Result<f64, _>| result.unwrap().to_radians().tan();

        let base = tan_of(compute_angle(k_in - want, k_in, k_out, dt, speed, volume, &c));
        let more_error =
            tan_of(compute_angle(k_in - want * factor, k_in, k_out, dt, speed, volume, &c));
        prop_assert!(more_error > base);

        let more_time =
            tan_of(compute_angle(k_in - want, k_in, k_out, dt * factor, speed, volume, &c));
        prop_assert!(more_time < base);

        let faster_air =
            tan_of(compute_angle(k_in - want, k_in, k_out, dt, speed * factor, volume, &c));
        prop_assert!(faster_air < base);

        let bigger_plate = PhysicalConstants {
            damper_side_m: c.damper_side_m * factor,
            ..c
        };
        let larger_area =
            tan_of(compute_angle(k_in - want, k_in, k_out, dt, speed, volume, &bigger_plate));
        prop_assert!(larger_area < base);
    }

    // Clamping never leaves [0, max] and saturates exactly when it changes
    // the value.
    #[test]
    fn clamp_is_sound(alpha in -90.0f64..120.0, max_alpha in 1.0f64..89.0) {
        let command = clamp_command(alpha, max_alpha, 0.0);
        prop_assert!(command.alpha_deg >= 0.0 && command.alpha_deg <= max_alpha);
        prop_assert_eq!(command.saturated, command.alpha_deg != alpha);
    }

    // Quantized samples are exact multiples of the step, within half a step
    // of the true value.
    #[test]
    fn quantization_lands_on_the_grid(
        value in -50.0f64..50.0,
        step in 0.01f64..1.0,
    ) {
        let noise = NoiseModel { std_dev_c: 0.0, quantization_c: step };
        let mut rng = rand::rngs::mock::StepRng::new(0, 0);
        let quantized = sample(value, &noise, &mut rng);
        prop_assert!((quantized - value).abs() <= step / 2.0 + 1e-12);
        let multiples = quantized / step;
        prop_assert!((multiples - multiples.round()).abs() < 1e-9);
    }

    // With jitter 0 a link never reorders: per-link delivery order equals
    // send order, whatever the latencies and interleaving.
    #[test]
    fn links_without_jitter_preserve_send_order(
        room_latency in 0.0f64..3.0,
        duct_latency in 0.0f64..3.0,
        sends in 2usize..40,
    ) {
        let mut queue = EventQueue::new();
        let mut rng = rand::rngs::mock::StepRng::new(0, 0);
        let links = [
            (LinkId::RoomSensor, NetLink { latency_min: room_latency, ..NetLink::default() }),
            (LinkId::DuctSensor, NetLink { latency_min: duct_latency, ..NetLink::default() }),
        ];
        for i in 0..sends {
            for (link_id, link) in &links {
                let reading = SensorReading {
                    node_id: NodeId::RoomSensor,
                    measured_c: 20.0,
                    sampled_at_min: i as f64,
                    sequence: i as u64,
                };
                queue.send(*link_id, link, Payload::Reading(reading), SimTime::from_min(i as f64), &mut rng);
            }
        }
        let delivered = queue.advance(SimTime::from_min(1e6));
        for link_id in [LinkId::RoomSensor, LinkId::DuctSensor] {
            let sequences: Vec<u64> = delivered
                .iter()
                .filter(|event| event.link_id == link_id)
                .map(|event| event.sequence)
                .collect();
            let mut sorted = sequences.clone();
            sorted.sort_unstable();
            prop_assert_eq!(&sequences, &sorted, "link {:?} reordered", link_id);
            prop_assert_eq!(sequences.len(), sends);
        }
    }

    // NT is algebraically the set point minus supply minus ΔT.
    #[test]
    fn nt_identity_holds_per_record(
        supply in 30.0f64..60.0,
        delta in -5.0f64..25.0,
        setpoint in 40.0f64..70.0,
    ) {
        let record = plant_record(1000.0, 10_000.0, supply, supply + delta);
        let direct = metrics::nt(&record, setpoint);
        let derived = setpoint - supply - metrics::delta_t(&record);
        prop_assert!((direct - derived).abs() <= 1e-12 * direct.abs().max(derived.abs()).max(1.0));
    }

    // For fixed power and flow, KFG strictly falls as ΔT grows.
    #[test]
    fn kfg_falls_with_delta_t(
        power in 100.0f64..5000.0,
        flow in 1000.0f64..40_000.0,
        delta in 0.5f64..20.0,
        gap in 0.1f64..10.0,
    ) {
        let small = metrics::kfg(&plant_record(power, flow, 45.0, 45.0 + delta)).unwrap();
        let large = metrics::kfg(&plant_record(power, flow, 45.0, 45.0 + delta + gap)).unwrap();
        prop_assert!(large < small);
    }
}

fn plant_record(power_kw: f64, flow_gpm: f64, supply_f: f64, return_f: f64) -> metrics::PlantRecord {
    metrics::PlantRecord {
        timestamp: chrono::NaiveDate::from_ymd_opt(2025, 3, 1)
            .unwrap()
            .and_hms_opt(8, 0, 0)
            .unwrap(),
        power_kw,
        flow_gpm,
        supply_f,
        return_f,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // A full run is a pure function of the scenario, seed included.
    #[test]
    fn runs_are_reproducible(seed in any::<u64>(), loss in 0.0f64..0.5) {
        let mut scenario = small_scenario();
        scenario.seed = seed;
        scenario.network.actuator_link.loss_probability = loss;
        scenario.network.room_sensor.std_dev_c = 0.05;
        let first = run_scenario(&scenario);
        let second = run_scenario(&scenario);
        prop_assert_eq!(first, second);
    }

    // Exactly one trace row per controller period.
    #[test]
    fn trace_length_equals_horizon(horizon in 5u32..30) {
        let mut scenario = small_scenario();
        scenario.horizon_min = horizon;
        prop_assert_eq!(run_scenario(&scenario).trace.len(), horizon as usize);
    }

    // Aggregations do not care about record order: bit-identical results.
    #[test]
    fn aggregations_are_permutation_invariant(seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let records = metrics::synth::generate_plant_log(&metrics::synth::SynthConfig::new(200, 5));
        let mut shuffled = records.clone();
        shuffled.shuffle(&mut rand::rngs::StdRng::seed_from_u64(seed));

        let hourly_a = metrics::hourly_kfg(&records).unwrap();
        let hourly_b = metrics::hourly_kfg(&shuffled).unwrap();
        prop_assert_eq!(hourly_a, hourly_b);

        let edges: Vec<f64> = (0..=10).map(|i| 2.0 * f64::from(i)).collect();
        let surface_a =
            metrics::kfg_surface(&records, &[-20.0, 0.0, 20.0], &edges, DEFAULT_AHU_SETPOINT_F)
                .unwrap();
        let surface_b =
            metrics::kfg_surface(&shuffled, &[-20.0, 0.0, 20.0], &edges, DEFAULT_AHU_SETPOINT_F)
                .unwrap();
        prop_assert_eq!(surface_a, surface_b);
    }
}

fn small_scenario() -> Scenario {
    Scenario {
        room: RoomState {
            temperature_c: 26.0,
            volume_m3: 120.0,
            occupants: 1,
        },
        misc_gain_w: 50.0,
        duct: DuctAir {
            temperature_c: 12.8,
            speed_m_per_min: 100.0,
        },
        constants: PhysicalConstants::default(),
        request: ControlRequest {
            target_temperature_c: 22.0,
            deadline_min: 5.0,
        },
        occupancy: OccupancySpec::Random {
            arrival_rate_per_hour: 20.0,
            departure_rate_per_hour: 20.0,
            max_occupants: 4,
        },
        network: Default::default(),
        horizon_min: 12,
        dt_min: 1.0,
        seed: 0,
        max_alpha_deg: 45.0,
        tolerance_c: 0.2,
        angle_model: Default::default(),
    }
}

// The reference cooldown approaches the target monotonically: |T − target|
// never grows from one controller tick to the next.
#[test]
fn reference_cooldown_approach_is_monotone() {
    let scenario = roomflow_core::parse_scenario(include_str!(
        "../../../scenarios/cooldown_150m3.scenario"
    ))
    .expect("shipped scenario parses");
    let result = run_scenario(&scenario);
    let mut previous = f64::INFINITY;
    for row in &result.trace {
        let error = (row.true_temp_c - 21.0).abs();
        assert!(
            error <= previous + 1e-12,
            "error grew at t = {}: {error} > {previous}",
            row.t_min
        );
        previous = error;
    }
}
