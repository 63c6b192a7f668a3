//! Locale-independent numeric formatting for emitted files.

/// Format with 6 significant digits, plain decimal notation. Output is
/// byte-stable for identical inputs, which is what the determinism contract
/// on trace and table files rests on.
pub fn sig6(value: f64) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let magnitude = value.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{value:.decimals$}")
}
