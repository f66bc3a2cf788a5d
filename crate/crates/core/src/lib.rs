//! Balance-equation engine for liquidity flows and systemic risk.
//!
//! The engine evaluates a scalar balance between destabilising drivers
//! (stochastic shock, inertia-weighted velocity change, internal tension and
//! cyclical forcing) and compensating forces (price pressure, diffused
//! liquidity, risk premium, CDS spread, systemic beta and a residual term ε):
//!
//! ```text
//! shock + rho·(dv_dt + internal_tension + cyclical_force)
//!     = −pressure + stickiness·diffusion + risk_premium + cds + beta + epsilon
//! ```
//!
//! Modules:
//!
//! * [`model`]: the balance algebra, ε calibration and ε disaggregation.
//! * [`indicators`]: derivation of parameters from raw indicator series.
//! * [`cycles`]: harmonic fitting and the cyclical force.
//! * [`stochastic`]: seeded Wiener paths and shock series.
//! * [`scenario`]: scenario application, one-at-a-time sensitivity,
//!   dynamic ε(t) and Monte Carlo summaries.

pub mod cycles;
pub mod indicators;
pub mod model;
pub mod scenario;
pub mod stochastic;

pub use cycles::{HarmonicComponent, HarmonicModel, TimeSeries};
pub use indicators::{DatedSeries, IndicatorBundle};
pub use model::{BalanceResult, EpsilonBreakdown, ParamId, ParameterSet};
pub use scenario::{Perturbation, Scenario, SensitivityReport, Side, Target};
pub use stochastic::{ShockConfig, WienerPath};
