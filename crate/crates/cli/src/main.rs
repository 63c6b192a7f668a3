//! `roomflow` — run airflow-control scenarios and plant-efficiency analytics.
//!
//! Exit codes: 0 success, 1 internal or partial failure, 2 input validation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};

use roomflow_core::metrics::{self, synth};
use roomflow_core::scenario::{
    self, parse_scenario, run_scenario, write_event_log_csv, write_summary, write_trace_csv,
};

#[derive(Parser)]
#[command(name = "roomflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file; write trace.csv and summary.txt.
    Run(RunArgs),
    /// Run every *.scenario file in a directory, one output subdir per file.
    Sweep(SweepArgs),
    /// Compute hourly and (NT, ΔT)-binned KFG tables from a plant log.
    Metrics(MetricsArgs),
    /// Generate a synthetic plant operations log.
    GenLog(GenLogArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML).
    scenario: PathBuf,
    /// Output directory.
    #[arg(long, env = "ROOMFLOW_OUT", default_value = "out")]
    out: PathBuf,
    /// Replace the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write events.csv with every network transmission.
    #[arg(long)]
    event_log: bool,
    /// Suppress the summary line on stdout.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Directory of *.scenario files.
    dir: PathBuf,
    #[arg(long, env = "ROOMFLOW_OUT", default_value = "out")]
    out: PathBuf,
    /// Worker threads; results are identical for any value.
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
    #[arg(long)]
    event_log: bool,
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct MetricsArgs {
    /// Plant log CSV (header: timestamp,power_kw,flow_gpm,supply_f,return_f).
    log: PathBuf,
    #[arg(long, env = "ROOMFLOW_OUT", default_value = "out")]
    out: PathBuf,
    /// AHU chilled-water set point (°F) for NT.
    #[arg(long, default_value_t = metrics::DEFAULT_AHU_SETPOINT_F)]
    setpoint_f: f64,
    /// NT bin edges, comma separated, strictly increasing.
    #[arg(long, default_value = "-6,-4,-2,0,2,4,6,8,10,12")]
    nt_bins: String,
    /// ΔT bin edges, comma separated, strictly increasing.
    #[arg(long, default_value = "0,2,4,6,8,10,12,14,16,18,20")]
    dt_bins: String,
}

#[derive(Args)]
struct GenLogArgs {
    /// Output CSV path.
    #[arg(long, default_value = "plant_log.csv")]
    out: PathBuf,
    #[arg(long, default_value_t = 720)]
    records: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Minutes between log rows.
    #[arg(long, default_value_t = 120)]
    interval_min: u32,
}

enum CliError {
    /// Bad input: missing files, unparseable scenarios or logs. Exit 2.
    Validation(String),
    /// Anything else: I/O failures, partial sweep failures. Exit 1.
    Internal(String),
}

impl CliError {
    fn validation(message: impl Into<String>) -> Self {
        CliError::Validation(message.into())
    }

    fn internal(message: impl Into<String>) -> Self {
        CliError::Internal(message.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Metrics(args) => cmd_metrics(&args),
        Command::GenLog(args) => cmd_gen_log(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn load_scenario(path: &Path, seed_override: Option<u64>) -> Result<scenario::Scenario, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|err| CliError::validation(format!("cannot read {}: {err}", path.display())))?;
    let mut scenario = parse_scenario(&text)
        .map_err(|err| CliError::validation(format!("{}: {err}", path.display())))?;
    if let Some(seed) = seed_override {
        scenario.seed = seed;
    }
    Ok(scenario)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|err| CliError::internal(format!("cannot write {}: {err}", path.display())))
}

fn run_one(
    scenario_path: &Path,
    out_dir: &Path,
    seed_override: Option<u64>,
    event_log: bool,
    quiet: bool,
) -> Result<(), CliError> {
    let scenario = load_scenario(scenario_path, seed_override)?;
    let result = run_scenario(&scenario);
    fs::create_dir_all(out_dir)
        .map_err(|err| CliError::internal(format!("cannot create {}: {err}", out_dir.display())))?;
    write_file(&out_dir.join("trace.csv"), &write_trace_csv(&result.trace))?;
    write_file(&out_dir.join("summary.txt"), &write_summary(&result.summary))?;
    if event_log {
        write_file(&out_dir.join("events.csv"), &write_event_log_csv(&result.events))?;
    }
    if !quiet {
        println!(
            "{}: target_met={} final_temp_c={} saturation_count={} dropped_messages={}",
            scenario_path.display(),
            result.summary.target_met,
            roomflow_core::fmt::sig6(result.summary.final_temp_c),
            result.summary.saturation_count,
            result.summary.dropped_messages,
        );
    }
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    run_one(&args.scenario, &args.out, args.seed, args.event_log, args.quiet)
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let entries = fs::read_dir(&args.dir)
        .map_err(|err| CliError::validation(format!("cannot read {}: {err}", args.dir.display())))?;
    let mut scenario_paths: Vec<PathBuf> = entries
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|path| path.extension().is_some_and(|ext| ext == "scenario"))
        .collect();
    scenario_paths.sort();
    if scenario_paths.is_empty() {
        if !args.quiet {
            println!("no *.scenario files in {}", args.dir.display());
        }
        return Ok(());
    }

    let workers = args.parallelism.clamp(1, scenario_paths.len());
    let next = Mutex::new(0usize);
    let failures = Mutex::new(Vec::<String>::new());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = {
                    let mut guard = next.lock().expect("queue lock");
                    let index = *guard;
                    *guard += 1;
                    index
                };
                let Some(path) = scenario_paths.get(index) else {
                    break;
                };
                let stem = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| format!("scenario_{index}"));
                let out_dir = args.out.join(&stem);
                if let Err(error) = run_one(path, &out_dir, None, args.event_log, args.quiet) {
                    let message = match error {
                        CliError::Validation(m) | CliError::Internal(m) => m,
                    };
                    failures.lock().expect("failure lock").push(message);
                }
            });
        }
    });

    let failures = failures.into_inner().expect("failure lock");
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::internal(format!(
            "{} of {} scenarios failed:\n  {}",
            failures.len(),
            scenario_paths.len(),
            failures.join("\n  ")
        )))
    }
}

fn parse_edges(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|field| {
            field
                .trim()
                .parse::<f64>()
                .map_err(|_| CliError::validation(format!("{what}: bad edge `{field}`")))
        })
        .collect()
}

fn cmd_metrics(args: &MetricsArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.log)
        .map_err(|err| CliError::validation(format!("cannot read {}: {err}", args.log.display())))?;
    let parsed = metrics::parse_plant_log(&text)
        .map_err(|err| CliError::validation(format!("{}: {err}", args.log.display())))?;
    let nt_edges = parse_edges(&args.nt_bins, "--nt-bins")?;
    let dt_edges = parse_edges(&args.dt_bins, "--dt-bins")?;

    fs::create_dir_all(&args.out)
        .map_err(|err| CliError::internal(format!("cannot create {}: {err}", args.out.display())))?;

    let hourly = match metrics::hourly_kfg(&parsed.records) {
        Ok(slots) => metrics::write_hourly_csv(&slots),
        Err(metrics::MetricsError::EmptyInput) => "hour,mean_kfg,count\n".to_string(),
        Err(err) => return Err(CliError::internal(err.to_string())),
    };
    write_file(&args.out.join("hourly_kfg.csv"), &hourly)?;

    let surface = metrics::kfg_surface(&parsed.records, &nt_edges, &dt_edges, args.setpoint_f)
        .map_err(|err| CliError::validation(err.to_string()))?;
    write_file(&args.out.join("kfg_surface.csv"), &metrics::write_surface_csv(&surface))?;
    write_file(&args.out.join("rejects.txt"), &metrics::write_rejects_report(&parsed))?;

    println!(
        "{}: {} records, {} rejected; tables in {}",
        args.log.display(),
        parsed.records.len(),
        parsed.rejects.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_gen_log(args: &GenLogArgs) -> Result<(), CliError> {
    let mut config = synth::SynthConfig::new(args.records, args.seed);
    config.interval_min = args.interval_min;
    let records = synth::generate_plant_log(&config);
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|err| {
                CliError::internal(format!("cannot create {}: {err}", parent.display()))
            })?;
        }
    }
    write_file(&args.out, &metrics::write_plant_log_csv(&records))?;
    println!("wrote {} records to {}", records.len(), args.out.display());
    Ok(())
}
