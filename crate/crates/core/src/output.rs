//! Plain-text serialization helpers shared by the drivers and the CLI.

/// Formats a float with 17 significant digits in scientific notation.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}
