//! Fixed-precision number formatting shared by every emitted file.
//!
//! All numbers are written with at most 7 significant digits and a `.`
//! decimal separator, independent of locale.

/// Round to 7 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.6e}").parse().unwrap_or(x)
}

/// Shortest decimal representation of `x` rounded to 7 significant digits.
pub fn sig7(x: f64) -> String {
    let r = round_sig(x);
    if r == 0.0 {
        // drop the sign of negative zero
        return "0".to_string();
    }
    format!("{r}")
}
