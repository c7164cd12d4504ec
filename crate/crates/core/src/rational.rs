//! Formatting and parsing helpers for exact beat arithmetic.

use num_rational::Ratio;
use num_traits::Zero;

/// Exact beat quantity. One beat is a quarter note.
pub type Beats = Ratio<i64>;

/// Formats a rational in fraction form: `"3"` for integers, `"3/2"` otherwise.
pub fn fraction_string(r: Beats) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `"3"` or `"3/2"` into a rational. Whitespace is not accepted.
pub fn parse_fraction(s: &str) -> Option<Beats> {
    match s.split_once('/') {
        None => s.parse::<i64>().ok().map(Beats::from_integer),
        Some((n, d)) => {
            let n: i64 = n.parse().ok()?;
            let d: i64 = d.parse().ok()?;
            if d == 0 {
                None
            } else {
                Some(Beats::new(n, d))
            }
        }
    }
}

/// Exact decimal expansion when the reduced denominator is of the form
/// 2^a * 5^b, otherwise `None`.
pub fn decimal_string(r: Beats) -> Option<String> {
    let mut den = *r.denom();
    let mut pow2 = 0u32;
    let mut pow5 = 0u32;
    while den % 2 == 0 {
        den /= 2;
        pow2 += 1;
    }
    while den % 5 == 0 {
        den /= 5;
        pow5 += 1;
    }
    if den != 1 {
        return None;
    }
    // Scale to 10^k with k = max(pow2, pow5).
    let k = pow2.max(pow5);
    let scale = 10i64.checked_pow(k)? / r.denom();
    let scaled = r.numer().checked_mul(scale)?;
    if k == 0 {
        return Some(scaled.to_string());
    }
    let sign = if scaled < 0 { "-" } else { "" };
    let abs = scaled.unsigned_abs();
    let int = abs / 10u64.pow(k);
    let frac = abs % 10u64.pow(k);
    let mut frac_s = format!("{frac:0width$}", width = k as usize);
    while frac_s.ends_with('0') {
        frac_s.pop();
    }
    if frac_s.is_empty() {
        Some(format!("{sign}{int}"))
    } else {
        Some(format!("{sign}{int}.{frac_s}"))
    }
}

/// Rational as `f64`, for the signal-side code that leaves exact arithmetic.
pub fn to_f64(r: Beats) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Zero beats.
pub fn zero() -> Beats {
    Beats::zero()
}
