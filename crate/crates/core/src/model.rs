//! Balance algebra: LHS/RHS evaluation, imbalance, ε calibration and the
//! disaggregation of ε into its economic subcomponents.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("parameter `{field}` is not finite ({value})")]
    NonFinite { field: &'static str, value: f64 },
    #[error("parameter `{field}` = {value} violates `{constraint}`")]
    Invariant {
        field: &'static str,
        value: f64,
        constraint: &'static str,
    },
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
}

/// Identifier of a single [`ParameterSet`] field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamId {
    Rho,
    DvDt,
    InternalTension,
    Velocity,
    Pressure,
    Stickiness,
    Diffusion,
    Shock,
    RiskPremium,
    Cds,
    Beta,
    CyclicalForce,
    Epsilon,
}

impl ParamId {
    pub const ALL: [ParamId; 13] = [
        ParamId::Rho,
        ParamId::DvDt,
        ParamId::InternalTension,
        ParamId::Velocity,
        ParamId::Pressure,
        ParamId::Stickiness,
        ParamId::Diffusion,
        ParamId::Shock,
        ParamId::RiskPremium,
        ParamId::Cds,
        ParamId::Beta,
        ParamId::CyclicalForce,
        ParamId::Epsilon,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamId::Rho => "rho",
            ParamId::DvDt => "dv_dt",
            ParamId::InternalTension => "internal_tension",
            ParamId::Velocity => "velocity",
            ParamId::Pressure => "pressure",
            ParamId::Stickiness => "stickiness",
            ParamId::Diffusion => "diffusion",
            ParamId::Shock => "shock",
            ParamId::RiskPremium => "risk_premium",
            ParamId::Cds => "cds",
            ParamId::Beta => "beta",
            ParamId::CyclicalForce => "cyclical_force",
            ParamId::Epsilon => "epsilon",
        }
    }
}

impl fmt::Display for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParamId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ParamId::ALL
            .iter()
            .copied()
            .find(|id| id.name() == s)
            .ok_or_else(|| ModelError::UnknownParameter(s.to_string()))
    }
}

/// The thirteen scalar inputs of the balance equation.
///
/// All values are dimensionless decimals: percentages are converted at
/// ingestion (an inflation of 1.9% is stored as `0.019`).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ParameterSet {
    /// Market inertia ρ, the inverse of relative volatility. Must be > 0.
    pub rho: f64,
    /// Change of money velocity per period.
    pub dv_dt: f64,
    /// Structural tension, taken verbatim from the Gini coefficient.
    pub internal_tension: f64,
    /// Money velocity (turns per year). Reported only; not part of the balance.
    pub velocity: f64,
    /// Price pressure (inflation rate). Enters the right-hand side negated.
    pub pressure: f64,
    /// Stickiness μ (credit-to-GDP share), multiplies `diffusion`.
    pub stickiness: f64,
    /// Liquidity diffusion (LCR).
    pub diffusion: f64,
    /// Stochastic shock term in fixed-scalar mode.
    pub shock: f64,
    pub risk_premium: f64,
    pub cds: f64,
    pub beta: f64,
    /// Cyclical force F_GDP(t).
    pub cyclical_force: f64,
    /// Residual closure term ε.
    pub epsilon: f64,
}

impl ParameterSet {
    /// The calibrated reference parameters for Georgia (2010–2024 data,
    /// 2024 point values).
    pub fn reference_baseline() -> Self {
        ParameterSet {
            rho: 0.7421,
            dv_dt: -0.23,
            internal_tension: 0.36,
            velocity: 3.46,
            pressure: 0.019,
            stickiness: 0.6606,
            diffusion: 1.0,
            shock: 1.3475,
            risk_premium: 0.0835,
            cds: 0.0298,
            beta: 1.2,
            cyclical_force: 0.07577,
            epsilon: 0.4547,
        }
    }

    pub fn get(&self, id: ParamId) -> f64 {
        match id {
            ParamId::Rho => self.rho,
            ParamId::DvDt => self.dv_dt,
            ParamId::InternalTension => self.internal_tension,
            ParamId::Velocity => self.velocity,
            ParamId::Pressure => self.pressure,
            ParamId::Stickiness => self.stickiness,
            ParamId::Diffusion => self.diffusion,
            ParamId::Shock => self.shock,
            ParamId::RiskPremium => self.risk_premium,
            ParamId::Cds => self.cds,
            ParamId::Beta => self.beta,
            ParamId::CyclicalForce => self.cyclical_force,
            ParamId::Epsilon => self.epsilon,
        }
    }

    pub fn set(&mut self, id: ParamId, value: f64) {
        let slot = match id {
            ParamId::Rho => &mut self.rho,
            ParamId::DvDt => &mut self.dv_dt,
            ParamId::InternalTension => &mut self.internal_tension,
            ParamId::Velocity => &mut self.velocity,
            ParamId::Pressure => &mut self.pressure,
            ParamId::Stickiness => &mut self.stickiness,
            ParamId::Diffusion => &mut self.diffusion,
            ParamId::Shock => &mut self.shock,
            ParamId::RiskPremium => &mut self.risk_premium,
            ParamId::Cds => &mut self.cds,
            ParamId::Beta => &mut self.beta,
            ParamId::CyclicalForce => &mut self.cyclical_force,
            ParamId::Epsilon => &mut self.epsilon,
        };
        *slot = value;
    }

    pub fn with(mut self, id: ParamId, value: f64) -> Self {
        self.set(id, value);
        self
    }

    /// The composite diffusion term μ·∇²v.
    pub fn diffusion_term(&self) -> f64 {
        self.stickiness * self.diffusion
    }

    /// Checks finiteness of every field and the sign constraints.
    pub fn validate(&self) -> Result<(), ModelError> {
        for id in ParamId::ALL {
            let value = self.get(id);
            if !value.is_finite() {
                return Err(ModelError::NonFinite {
                    field: id.name(),
                    value,
                });
            }
        }
        if self.rho <= 0.0 {
            return Err(ModelError::Invariant {
                field: "rho",
                value: self.rho,
                constraint: "rho > 0",
            });
        }
        for (id, constraint) in [
            (ParamId::Stickiness, "stickiness >= 0"),
            (ParamId::Diffusion, "diffusion >= 0"),
            (ParamId::Cds, "cds >= 0"),
            (ParamId::Beta, "beta >= 0"),
        ] {
            let value = self.get(id);
            if value < 0.0 {
                return Err(ModelError::Invariant {
                    field: id.name(),
                    value,
                    constraint,
                });
            }
        }
        Ok(())
    }
}

fn check_finite(field: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonFinite { field, value })
    }
}

/// Left-hand side: `shock + rho·(dv_dt + internal_tension + cyclical_force)`.
pub fn eval_lhs(p: &ParameterSet) -> Result<f64, ModelError> {
    p.validate()?;
    Ok(lhs_unchecked(p))
}

/// Right-hand side without ε:
/// `−pressure + stickiness·diffusion + risk_premium + cds + beta`.
pub fn eval_rhs_partial(p: &ParameterSet) -> Result<f64, ModelError> {
    p.validate()?;
    Ok(rhs_partial_unchecked(p))
}

pub fn eval_rhs(p: &ParameterSet, eps: f64) -> Result<f64, ModelError> {
    check_finite("epsilon", eps)?;
    Ok(eval_rhs_partial(p)? + eps)
}

/// The ε that balances the equation exactly: `lhs − rhs_partial`.
pub fn required_epsilon(p: &ParameterSet) -> Result<f64, ModelError> {
    p.validate()?;
    Ok(lhs_unchecked(p) - rhs_partial_unchecked(p))
}

/// `rhs − lhs` at the supplied ε.
pub fn imbalance(p: &ParameterSet, eps: f64) -> Result<f64, ModelError> {
    Ok(eval_rhs(p, eps)? - lhs_unchecked(p))
}

fn lhs_unchecked(p: &ParameterSet) -> f64 {
    p.shock + p.rho * (p.dv_dt + p.internal_tension + p.cyclical_force)
}

fn rhs_partial_unchecked(p: &ParameterSet) -> f64 {
    -p.pressure + p.stickiness * p.diffusion + p.risk_premium + p.cds + p.beta
}

/// One evaluation of the balance at a supplied ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceResult {
    pub lhs: f64,
    pub rhs_partial: f64,
    /// The ε the right-hand side was evaluated with.
    pub epsilon: f64,
    pub rhs: f64,
    pub imbalance: f64,
    pub epsilon_required: f64,
}

impl BalanceResult {
    pub fn evaluate(p: &ParameterSet, eps: f64) -> Result<Self, ModelError> {
        p.validate()?;
        check_finite("epsilon", eps)?;
        let lhs = lhs_unchecked(p);
        let rhs_partial = rhs_partial_unchecked(p);
        let rhs = rhs_partial + eps;
        Ok(BalanceResult {
            lhs,
            rhs_partial,
            epsilon: eps,
            rhs,
            imbalance: rhs - lhs,
            epsilon_required: lhs - rhs_partial,
        })
    }

    /// Evaluates at the set's own ε.
    pub fn at_own_epsilon(p: &ParameterSet) -> Result<Self, ModelError> {
        Self::evaluate(p, p.epsilon)
    }

    /// True when the supplied ε has the magnitude of the balancing ε but the
    /// opposite sign, i.e. the equation only closes after a sign flip.
    pub fn epsilon_sign_mismatch(&self, tolerance: f64) -> bool {
        self.imbalance.abs() > tolerance
            && self.epsilon_required != 0.0
            && (self.epsilon + self.epsilon_required).abs() <= tolerance
    }
}

/// Subcomponents of the residual term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonComponent {
    ShadowEconomy,
    MoneyTransfers,
    GeopoliticalShock,
    StateInfluence,
    ForeignAid,
    EconomicInertia,
}

impl EpsilonComponent {
    pub const ALL: [EpsilonComponent; 6] = [
        EpsilonComponent::ShadowEconomy,
        EpsilonComponent::MoneyTransfers,
        EpsilonComponent::GeopoliticalShock,
        EpsilonComponent::StateInfluence,
        EpsilonComponent::ForeignAid,
        EpsilonComponent::EconomicInertia,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EpsilonComponent::ShadowEconomy => "shadow_economy",
            EpsilonComponent::MoneyTransfers => "money_transfers",
            EpsilonComponent::GeopoliticalShock => "geopolitical_shock",
            EpsilonComponent::StateInfluence => "state_influence",
            EpsilonComponent::ForeignAid => "foreign_aid",
            EpsilonComponent::EconomicInertia => "economic_inertia",
        }
    }

    /// Calibrated contribution of the component to the reference ε.
    pub fn reference_contribution(self) -> f64 {
        match self {
            EpsilonComponent::ShadowEconomy => 0.1479,
            EpsilonComponent::MoneyTransfers => 0.11832,
            EpsilonComponent::GeopoliticalShock => 0.08874,
            EpsilonComponent::StateInfluence => 0.04733,
            EpsilonComponent::ForeignAid => 0.02958,
            EpsilonComponent::EconomicInertia => 0.02284,
        }
    }

    /// Fixed share of ε: contribution over the sum of all contributions.
    pub fn share(self) -> f64 {
        self.reference_contribution() / reference_contribution_total()
    }
}

/// Sum of the calibrated contributions (0.45471).
pub fn reference_contribution_total() -> f64 {
    EpsilonComponent::ALL
        .iter()
        .map(|c| c.reference_contribution())
        .sum()
}

/// ε split into its subcomponents, in [`EpsilonComponent::ALL`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonBreakdown {
    pub epsilon: f64,
    pub components: Vec<(EpsilonComponent, f64)>,
}

impl EpsilonBreakdown {
    pub fn get(&self, component: EpsilonComponent) -> f64 {
        self.components
            .iter()
            .find(|(c, _)| *c == component)
            .map(|(_, v)| *v)
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.components.iter().map(|(_, v)| v).sum()
    }
}

pub fn decompose_epsilon(eps: f64) -> Result<EpsilonBreakdown, ModelError> {
    check_finite("epsilon", eps)?;
    Ok(EpsilonBreakdown {
        epsilon: eps,
        components: EpsilonComponent::ALL
            .iter()
            .map(|&c| (c, eps * c.share()))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stress() -> ParameterSet {
        ParameterSet {
            shock: 2.2,
            dv_dt: -0.35,
            internal_tension: 0.45,
            cyclical_force: 0.04,
            stickiness: 0.78,
            risk_premium: 0.105,
            cds: 0.045,
            beta: 1.6,
            pressure: 0.055,
            ..ParameterSet::reference_baseline()
        }
    }

    fn unit_rho() -> ParameterSet {
        ParameterSet {
            rho: 1.0,
            ..ParameterSet::default()
        }
    }

    #[test]
    fn lhs_examples() {
        let lhs = eval_lhs(&ParameterSet::reference_baseline()).unwrap();
        assert!((lhs - 1.5002).abs() < 1e-4, "{lhs}");
        assert_eq!(eval_lhs(&unit_rho()).unwrap(), 0.0);
        let lhs = eval_lhs(&stress()).unwrap();
        assert!((lhs - 2.3039).abs() < 1e-4, "{lhs}");
    }

    #[test]
    fn rhs_partial_examples() {
        let base = eval_rhs_partial(&ParameterSet::reference_baseline()).unwrap();
        assert!((base - 1.9549).abs() < 1e-12, "{base}");
        assert_eq!(eval_rhs_partial(&unit_rho()).unwrap(), 0.0);
        let s = eval_rhs_partial(&stress()).unwrap();
        assert!((s - 2.4750).abs() < 1e-12, "{s}");
    }

    #[test]
    fn rhs_examples() {
        let s = eval_rhs(&stress(), 0.4547).unwrap();
        assert!((s - 2.9297).abs() < 1e-4);
        let base = ParameterSet::reference_baseline();
        assert_eq!(
            eval_rhs(&base, 0.0).unwrap(),
            eval_rhs_partial(&base).unwrap()
        );
        let b = eval_rhs(&base, 0.4547).unwrap();
        assert!((b - 2.4096).abs() < 1e-12);
    }

    #[test]
    fn required_epsilon_examples() {
        let s = required_epsilon(&stress()).unwrap();
        assert!((s + 0.1711).abs() < 2e-4, "{s}");
        let b = required_epsilon(&ParameterSet::reference_baseline()).unwrap();
        assert!((b + 0.4547).abs() < 1e-4, "{b}");
        // lhs == rhs_partial: shock 1, beta 1
        let p = ParameterSet {
            shock: 1.0,
            beta: 1.0,
            ..unit_rho()
        };
        assert_eq!(required_epsilon(&p).unwrap(), 0.0);
    }

    #[test]
    fn imbalance_examples() {
        let s = imbalance(&stress(), 0.4547).unwrap();
        assert!((s - 0.6258).abs() < 2e-4);
        let base = ParameterSet::reference_baseline();
        let eps = required_epsilon(&base).unwrap();
        assert!(imbalance(&base, eps).unwrap().abs() < 1e-12);
        assert!(imbalance(&base, -0.4547).unwrap().abs() < 1e-4);
    }

    #[test]
    fn non_finite_field_is_named() {
        let p = ParameterSet::reference_baseline().with(ParamId::Cds, f64::NAN);
        match eval_lhs(&p) {
            Err(ModelError::NonFinite { field, .. }) => assert_eq!(field, "cds"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            eval_rhs(&ParameterSet::reference_baseline(), f64::INFINITY),
            Err(ModelError::NonFinite { field: "epsilon", .. })
        ));
    }

    #[test]
    fn invariant_violations() {
        let p = ParameterSet::reference_baseline().with(ParamId::Rho, 0.0);
        assert!(matches!(
            p.validate(),
            Err(ModelError::Invariant { field: "rho", .. })
        ));
        let p = ParameterSet::reference_baseline().with(ParamId::Beta, -0.1);
        assert!(matches!(
            p.validate(),
            Err(ModelError::Invariant { field: "beta", .. })
        ));
    }

    #[test]
    fn param_names_round_trip() {
        for id in ParamId::ALL {
            assert_eq!(id.name().parse::<ParamId>().unwrap(), id);
        }
        assert!("gamma".parse::<ParamId>().is_err());
    }

    #[test]
    fn epsilon_table_reproduced() {
        let d = decompose_epsilon(0.4547).unwrap();
        for c in EpsilonComponent::ALL {
            assert!(
                (d.get(c) - c.reference_contribution()).abs() < 1e-4,
                "{}",
                c.name()
            );
        }
        assert!((d.total() - 0.4547).abs() < 1e-9);
        let shares: f64 = EpsilonComponent::ALL.iter().map(|c| c.share()).sum();
        assert!((shares - 1.0).abs() < 1e-4);
    }

    #[test]
    fn epsilon_breakdown_zero_and_doubled() {
        let z = decompose_epsilon(0.0).unwrap();
        assert!(z.components.iter().all(|(_, v)| *v == 0.0));
        let d = decompose_epsilon(0.90942).unwrap();
        let mut sum = 0.0;
        for c in EpsilonComponent::ALL {
            assert!((d.get(c) - 2.0 * c.reference_contribution()).abs() < 1e-12);
            sum += d.get(c);
        }
        assert!((sum - 0.90942).abs() < 1e-9);
        assert!(decompose_epsilon(f64::NAN).is_err());
    }

    #[test]
    fn sign_mismatch_flag() {
        let base = ParameterSet::reference_baseline();
        let r = BalanceResult::evaluate(&base, 0.4547).unwrap();
        assert!(r.epsilon_sign_mismatch(1e-4));
        let r = BalanceResult::evaluate(&base, -0.4547).unwrap();
        assert!(!r.epsilon_sign_mismatch(1e-4));
        let r = BalanceResult::evaluate(&stress(), 0.4547).unwrap();
        assert!(!r.epsilon_sign_mismatch(1e-4));
    }
}
