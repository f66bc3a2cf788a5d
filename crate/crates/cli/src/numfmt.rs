//! Number parsing and fixed-precision formatting shared by all file formats.

/// Parses a decimal, treating a trailing `%` as "divide by 100".
pub fn parse_number(cell: &str) -> Option<f64> {
    let cell = cell.trim();
    let (body, percent) = match cell.strip_suffix('%') {
        Some(b) => (b.trim_end(), true),
        None => (cell, false),
    };
    // unicode minus sign, as typed in many reports
    let body = body.replace('\u{2212}', "-");
    // scaling in the exponent keeps "66.06%" exactly equal to 0.6606
    let v: f64 = if percent {
        if body.contains(['e', 'E']) {
            body.parse::<f64>().ok()? / 100.0
        } else {
            format!("{body}e-2").parse().ok()?
        }
    } else {
        body.parse().ok()?
    };
    v.is_finite().then_some(v)
}

/// Formats `x` with six significant digits, positional notation for
/// magnitudes in `[1e-5, 1e10)` and scientific notation otherwise.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..10).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

/// `x` rounded to six significant digits.
pub fn round6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}
