//! Number formatting shared by every CSV and JSON artifact.

/// Significant digits kept when serializing reals.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds `x` to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    if x == 0.0 {
        return 0.0;
    }
    let s = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let rounded: f64 = s.parse().expect("formatted float parses");
    // normalise -0 to 0
    if rounded == 0.0 {
        0.0
    } else {
        rounded
    }
}

/// Formats a real with 12 significant digits in the shortest form that
/// round-trips to the rounded value.
pub fn fmt_real(x: f64) -> String {
    format!("{}", round_sig(x))
}

pub fn fmt_opt_real(x: Option<f64>) -> String {
    x.map(fmt_real).unwrap_or_default()
}
