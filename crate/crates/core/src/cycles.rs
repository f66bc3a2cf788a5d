//! Harmonic decomposition of short annual series and the cyclical force
//! F_GDP(t) it reconstructs.
//!
//! A fit removes the trend, ranks the Fourier frequencies of the sample by
//! periodogram power, keeps the strongest `k` bins and refines their cosine
//! and sine amplitudes jointly by least squares. Off-grid periods are
//! reported through parabolic interpolation of the periodogram peak.

use std::cmp::Ordering;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CycleError {
    #[error("series has {len} values; at least {min} are needed")]
    TooShort { len: usize, min: usize },
    #[error("{k} components need at least {min} samples, series has {len}")]
    TooManyComponents { k: usize, len: usize, min: usize },
    #[error("series value at index {index} is not finite")]
    NonFinite { index: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("least squares solve failed: {0}")]
    Solve(&'static str),
}

/// Evenly spaced series; sample `i` sits at `start + i·step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub start: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(start: f64, step: f64, values: Vec<f64>) -> Result<Self, CycleError> {
        if !(step.is_finite() && step > 0.0) {
            return Err(CycleError::InvalidArgument("step must be finite and > 0"));
        }
        if !start.is_finite() {
            return Err(CycleError::InvalidArgument("start must be finite"));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(CycleError::NonFinite { index });
        }
        Ok(TimeSeries {
            start,
            step,
            values,
        })
    }

    /// Annual series starting at `start`.
    pub fn annual(start: f64, values: Vec<f64>) -> Result<Self, CycleError> {
        Self::new(start, 1.0, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    pub fn end(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }
}

/// One harmonic `a·cos(ωt) + b·sin(ωt)`.
///
/// `phase` is φ in `amplitude·cos(ωt − φ)`, i.e. `atan2(b, a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicComponent {
    pub a: f64,
    pub b: f64,
    /// Angular frequency in radians per year.
    pub omega: f64,
    /// `2π / omega`, in years.
    pub period: f64,
    pub phase: f64,
    /// Mean-square contribution of the component.
    pub power: f64,
    /// Period at the interpolated periodogram peak (equals `period` for
    /// hand-built components).
    pub peak_period: f64,
}

impl HarmonicComponent {
    pub fn new(a: f64, b: f64, omega: f64) -> Self {
        let period = 2.0 * PI / omega;
        HarmonicComponent {
            a,
            b,
            omega,
            period,
            phase: b.atan2(a),
            power: 0.5 * (a * a + b * b),
            peak_period: period,
        }
    }

    pub fn from_period(a: f64, b: f64, period: f64) -> Self {
        Self::new(a, b, 2.0 * PI / period)
    }

    pub fn amplitude(&self) -> f64 {
        self.a.hypot(self.b)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let x = self.omega * t;
        self.a * x.cos() + self.b * x.sin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detrend {
    #[default]
    Mean,
    Linear,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FitOptions {
    pub detrend: Detrend,
}

/// Trend baseline plus harmonic components sorted by descending power.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HarmonicModel {
    pub trend_mean: f64,
    pub trend_slope: f64,
    pub trend_origin: f64,
    pub components: Vec<HarmonicComponent>,
    /// Mean-square power of the detrended series.
    pub total_power: f64,
    /// Mean-square power left after the harmonic fit.
    pub residual_power: f64,
}

impl HarmonicModel {
    pub fn from_components(components: Vec<HarmonicComponent>) -> Self {
        HarmonicModel {
            components,
            ..HarmonicModel::default()
        }
    }

    pub fn trend(&self, t: f64) -> f64 {
        self.trend_mean + self.trend_slope * (t - self.trend_origin)
    }

    /// Components of both models in one model (trends are not combined).
    pub fn concat(&self, other: &HarmonicModel) -> HarmonicModel {
        let mut components = self.components.clone();
        components.extend_from_slice(&other.components);
        HarmonicModel::from_components(components)
    }

    /// Every amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> HarmonicModel {
        let mut out = self.clone();
        for c in &mut out.components {
            let peak = c.peak_period;
            *c = HarmonicComponent::new(c.a * factor, c.b * factor, c.omega);
            c.peak_period = peak;
        }
        out
    }
}

/// `A·sin(ωt + φ) + B·cos(ωt + φ)`.
pub fn eval_trig(a: f64, b: f64, omega: f64, phi: f64, t: f64) -> f64 {
    let x = omega * t + phi;
    a * x.sin() + b * x.cos()
}

/// Cyclical force at `t`: the harmonic sum without the trend.
pub fn reconstruct(model: &HarmonicModel, t: f64) -> f64 {
    model.components.iter().map(|c| c.eval(t)).sum()
}

/// Mean absolute cyclical force over `n` evenly spaced points of `[t0, t1]`
/// (both endpoints included).
pub fn mean_impact(model: &HarmonicModel, t0: f64, t1: f64, n: usize) -> Result<f64, CycleError> {
    if !t0.is_finite() || !t1.is_finite() || t1 <= t0 {
        return Err(CycleError::InvalidArgument("t1 must exceed t0"));
    }
    if n < 2 {
        return Err(CycleError::InvalidArgument("n must be at least 2"));
    }
    let h = (t1 - t0) / (n - 1) as f64;
    let sum: f64 = (0..n)
        .map(|i| reconstruct(model, t0 + i as f64 * h).abs())
        .sum();
    Ok(sum / n as f64)
}

/// Periodogram value `|Σ y_i e^{-iωt_i}|² / n` at the given angular
/// frequency.
pub fn periodogram_power(times: &[f64], detrended: &[f64], omega: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (&t, &y) in times.iter().zip(detrended) {
        let x = omega * t;
        re += y * x.cos();
        im -= y * x.sin();
    }
    (re * re + im * im) / detrended.len() as f64
}

pub fn fit_harmonics(series: &TimeSeries, k: usize) -> Result<HarmonicModel, CycleError> {
    fit_harmonics_with(series, k, FitOptions::default())
}

pub fn fit_harmonics_with(
    series: &TimeSeries,
    k: usize,
    options: FitOptions,
) -> Result<HarmonicModel, CycleError> {
    let n = series.len();
    if n < 4 {
        return Err(CycleError::TooShort { len: n, min: 4 });
    }
    let min = 2 * k + 2;
    if n < min {
        return Err(CycleError::TooManyComponents { k, len: n, min });
    }
    let times = series.times();
    let nf = n as f64;

    let trend_origin = times.iter().sum::<f64>() / nf;
    let trend_mean = series.values.iter().sum::<f64>() / nf;
    let trend_slope = match options.detrend {
        Detrend::Mean => 0.0,
        Detrend::Linear => {
            let sxx: f64 = times.iter().map(|t| (t - trend_origin).powi(2)).sum();
            let sxy: f64 = times
                .iter()
                .zip(&series.values)
                .map(|(t, y)| (t - trend_origin) * (y - trend_mean))
                .sum();
            sxy / sxx
        }
    };
    let detrended: Vec<f64> = times
        .iter()
        .zip(&series.values)
        .map(|(t, y)| y - trend_mean - trend_slope * (t - trend_origin))
        .collect();
    let total_power = detrended.iter().map(|y| y * y).sum::<f64>() / nf;

    let mut model = HarmonicModel {
        trend_mean,
        trend_slope,
        trend_origin,
        components: Vec::new(),
        total_power,
        residual_power: total_power,
    };

    let scale = series
        .values
        .iter()
        .fold(1.0_f64, |m, v| m.max(v.abs()));
    if detrended.iter().all(|y| y.abs() <= 1e-12 * scale) || k == 0 {
        return Ok(model);
    }

    // Fourier grid: j / (n·step) cycles per year. Bin 0 and the Nyquist bin
    // are never selected; their powers still feed peak interpolation.
    let span = nf * series.step;
    let omega_of = |j: usize| 2.0 * PI * j as f64 / span;
    let max_bin = n / 2;
    let powers: Vec<f64> = (0..=max_bin)
        .map(|j| periodogram_power(&times, &detrended, omega_of(j)))
        .collect();
    let selectable = (n - 1) / 2;
    let mut bins: Vec<usize> = (1..=selectable).collect();
    bins.sort_by(|&i, &j| {
        powers[j]
            .partial_cmp(&powers[i])
            .unwrap_or(Ordering::Equal)
            .then(i.cmp(&j))
    });
    let noise_floor = 1e-12 * total_power * nf;
    let chosen: Vec<usize> = bins
        .into_iter()
        .take(k)
        .filter(|&j| powers[j] > noise_floor)
        .collect();
    if chosen.is_empty() {
        return Ok(model);
    }

    let design = DMatrix::from_fn(n, 2 * chosen.len(), |row, col| {
        let x = omega_of(chosen[col / 2]) * times[row];
        if col % 2 == 0 {
            x.cos()
        } else {
            x.sin()
        }
    });
    let rhs = DVector::from_column_slice(&detrended);
    let coeffs = design
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(CycleError::Solve)?;
    let fitted = &design * &coeffs;
    model.residual_power = (&rhs - &fitted).norm_squared() / nf;

    let mut components: Vec<HarmonicComponent> = chosen
        .iter()
        .enumerate()
        .map(|(idx, &j)| {
            let mut c = HarmonicComponent::new(coeffs[2 * idx], coeffs[2 * idx + 1], omega_of(j));
            c.power = times.iter().map(|&t| c.eval(t).powi(2)).sum::<f64>() / nf;
            c.peak_period = span / (j as f64 + peak_offset(&powers, j));
            c
        })
        .collect();
    components.sort_by(|x, y| {
        y.power
            .partial_cmp(&x.power)
            .unwrap_or(Ordering::Equal)
            .then(x.omega.partial_cmp(&y.omega).unwrap_or(Ordering::Equal))
    });
    model.components = components;
    Ok(model)
}

/// Parabolic vertex offset of a periodogram peak at bin `j`, in bins,
/// clamped to ±0.5.
fn peak_offset(powers: &[f64], j: usize) -> f64 {
    if j == 0 || j + 1 >= powers.len() {
        return 0.0;
    }
    let (l, c, r) = (powers[j - 1], powers[j], powers[j + 1]);
    let denom = l - 2.0 * c + r;
    if denom >= 0.0 || !denom.is_finite() {
        return 0.0;
    }
    (0.5 * (l - r) / denom).clamp(-0.5, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planted() -> TimeSeries {
        let values = (0..56)
            .map(|t| {
                let t = t as f64;
                0.05 * (2.0 * PI * t / 4.0).cos() + 0.02 * (2.0 * PI * t / 7.0).sin()
            })
            .collect();
        TimeSeries::annual(0.0, values).unwrap()
    }

    #[test]
    fn eval_trig_examples() {
        assert_eq!(eval_trig(0.0, 0.0, 1.3, 0.2, 7.0), 0.0);
        assert!((eval_trig(1.0, 0.0, 1.0, 0.0, PI / 2.0) - 1.0).abs() < 1e-15);
        let omega = 2.0 * PI / 3.5;
        // sin(x) and cos(x) at x = ω·2 + 0.1, evaluated independently
        let x: f64 = 4.0 * PI / 3.5 + 0.1;
        let expected = 0.3 * x.sin() + 0.4 * x.cos();
        assert!((eval_trig(0.3, 0.4, omega, 0.1, 2.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn planted_two_harmonics_recovered() {
        let model = fit_harmonics(&planted(), 2).unwrap();
        assert_eq!(model.components.len(), 2);
        let c4 = &model.components[0];
        let c7 = &model.components[1];
        assert!((c4.period - 4.0).abs() < 1e-12);
        assert!((c7.period - 7.0).abs() < 1e-12);
        assert!((c4.a - 0.05).abs() < 1e-6 && c4.b.abs() < 1e-6);
        assert!(c7.a.abs() < 1e-6 && (c7.b - 0.02).abs() < 1e-6);
        assert!((c4.peak_period - 4.0).abs() < 1e-9);
        assert!(model.residual_power < 1e-20);
    }

    #[test]
    fn constant_series_has_no_components() {
        let s = TimeSeries::annual(2010.0, vec![0.1; 15]).unwrap();
        let m = fit_harmonics(&s, 3).unwrap();
        assert!((m.trend_mean - 0.1).abs() < 1e-15);
        assert!(m.components.is_empty());
    }

    #[test]
    fn too_many_components() {
        let s = TimeSeries::annual(0.0, vec![1.0, 2.0, 0.5, 3.0, 1.0, 2.0]).unwrap();
        assert!(matches!(
            fit_harmonics(&s, 3),
            Err(CycleError::TooManyComponents { min: 8, .. })
        ));
        let s = TimeSeries::annual(0.0, vec![1.0, 2.0, 0.5]).unwrap();
        assert!(matches!(fit_harmonics(&s, 1), Err(CycleError::TooShort { .. })));
    }

    #[test]
    fn off_grid_peak_is_interpolated_towards_true_period() {
        // 3.5-year cycle in 15 annual samples falls between bins 4 and 5
        let values: Vec<f64> = (0..15)
            .map(|t| (2.0 * PI * t as f64 / 3.5).cos())
            .collect();
        let s = TimeSeries::annual(2010.0, values).unwrap();
        let m = fit_harmonics(&s, 1).unwrap();
        let c = m.components[0];
        let grid_step = 15.0 / 4.0 - 15.0 / 5.0;
        assert!((c.peak_period - 3.5).abs() < (c.period - 3.5).abs() + 1e-12);
        assert!((c.peak_period - 3.5).abs() < grid_step);
    }

    #[test]
    fn linear_detrend_removes_slope() {
        let values: Vec<f64> = (0..20)
            .map(|t| 2.0 + 0.3 * t as f64 + 0.1 * (2.0 * PI * t as f64 / 5.0).cos())
            .collect();
        let s = TimeSeries::annual(0.0, values).unwrap();
        let m = fit_harmonics_with(
            &s,
            1,
            FitOptions {
                detrend: Detrend::Linear,
            },
        )
        .unwrap();
        assert!((m.components[0].period - 5.0).abs() < 1e-12);
        // slope is estimated on the sampled cosine too, so not exactly 0.3
        assert!((m.trend_slope - 0.3).abs() < 1e-2);
    }

    #[test]
    fn reconstruct_examples() {
        assert_eq!(reconstruct(&HarmonicModel::default(), 3.0), 0.0);
        let single = HarmonicModel::from_components(vec![HarmonicComponent::new(1.0, 0.0, 2.0 * PI)]);
        assert_eq!(reconstruct(&single, 0.0), 1.0);
        let two = HarmonicModel::from_components(vec![
            HarmonicComponent::from_period(0.05, 0.0, 4.0),
            HarmonicComponent::from_period(0.0, 0.02, 7.0),
        ]);
        let t: f64 = 3.25;
        let expected = 0.05 * (2.0 * PI * t / 4.0).cos() + 0.02 * (2.0 * PI * t / 7.0).sin();
        assert!((reconstruct(&two, t) - expected).abs() < 1e-15);
    }

    #[test]
    fn mean_impact_examples() {
        assert_eq!(mean_impact(&HarmonicModel::default(), 0.0, 1.0, 10).unwrap(), 0.0);
        let single = HarmonicModel::from_components(vec![HarmonicComponent::new(1.0, 0.0, 2.0 * PI)]);
        let m = mean_impact(&single, 0.0, 1.0, 100_001).unwrap();
        assert!((m - 2.0 / PI).abs() < 1e-3);
        assert!(mean_impact(&single, 1.0, 1.0, 10).is_err());
        assert!(mean_impact(&single, 0.0, 1.0, 1).is_err());
    }

    #[test]
    fn phase_convention() {
        let c = HarmonicComponent::new(0.3, 0.4, 1.1);
        let t = 0.7;
        let via_phase = c.amplitude() * (c.omega * t - c.phase).cos();
        assert!((c.eval(t) - via_phase).abs() < 1e-15);
        assert!((c.period - 2.0 * PI / c.omega).abs() < 1e-12);
    }
}
