//! Number formatting shared by the CSV writers.

use std::fmt::Write as _;

/// Format like C's `%.9e`: nine decimals, signed exponent of at least two
/// digits (`-1.250000000e-03`).
pub fn sci(value: f64) -> String {
    let mut out = String::with_capacity(16);
    push_sci(&mut out, value);
    out
}

pub fn push_sci(out: &mut String, value: f64) {
    if value.is_nan() {
        out.push_str("nan");
        return;
    }
    if value.is_infinite() {
        out.push_str(if value > 0.0 { "inf" } else { "-inf" });
        return;
    }
    let raw = format!("{value:.9e}");
    let (mantissa, exponent) = raw.split_once('e').expect("exponent present");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    let sign = if exponent < 0 { '-' } else { '+' };
    let _ = write!(out, "{mantissa}e{sign}{:02}", exponent.abs());
}

/// Join values as one CSV row of `%.9e` fields.
pub fn csv_row(values: impl IntoIterator<Item = f64>) -> String {
    let mut line = String::new();
    for (i, v) in values.into_iter().enumerate() {
        if i > 0 {
            line.push(',');
        }
        push_sci(&mut line, v);
    }
    line
}
