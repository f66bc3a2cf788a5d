//! Shared inputs for the criterion benches.

use std::f64::consts::PI;

use liquidyn_core::TimeSeries;

/// Fifteen annual samples of a three-cycle signal, shaped like a short
/// GDP-growth record.
pub fn annual_cycle_series() -> TimeSeries {
    let values = (0..15)
        .map(|i| {
            let t = i as f64;
            0.04 + 0.03 * (2.0 * PI * t / 3.5).cos()
                + 0.02 * (2.0 * PI * t / 4.7).sin()
                + 0.05 * (2.0 * PI * t / 14.0).cos()
        })
        .collect();
    TimeSeries::annual(2010.0, values).expect("finite series")
}
