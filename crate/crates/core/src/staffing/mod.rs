//! Staffing rules for delay-probability and abandonment-fraction targets,
//! plus a simulation-driven search for the smallest adequate integer `c`.

mod abandon;
mod delay;
mod empirical;

pub use abandon::{alpha_derivative, alpha_of_c, staff_abandon_fluid_bound, staff_abandon_implicit, AbandonOptions};
pub use delay::{
    bivariate_delay_at, delay_probability, deterministic_delay_at, staff_delay, staff_delay_bivariate,
    staff_delay_deterministic, DelayRule,
};
pub use empirical::{staff_empirical, EmpiricalError, EmpiricalMetric, SimBudget};

use serde::{Deserialize, Serialize};

use crate::model::{ParamError, RegimeTag, Workload};
use crate::probability::{inverse_survival, positive_part_moments, NormalParams};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StaffingError {
    #[error("target epsilon must lie strictly between 0 and 1, got {0}")]
    BadTarget(f64),
    #[error("no real staffing level: discriminant {discriminant:e} < 0")]
    Infeasible { discriminant: f64 },
    #[error("no root of the squared equation satisfies the original one")]
    SpuriousRoots,
    #[error("variance of Q - S is not positive ({0:e})")]
    DegenerateVariance(f64),
    #[error("variance closure fails at c = {c}: lambda/theta + U_A c <= 0 with U_A = {u_a}")]
    VarianceClosure { c: f64, u_a: f64 },
    #[error("staffing level {0} is not positive")]
    NonPositive(f64),
    #[error("abandonment stays above target up to c = {c_max} (alpha = {alpha_at_max})")]
    BracketExhausted { c_max: f64, alpha_at_max: f64 },
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("{0}")]
    Numerical(String),
}

/// Target for `P(Q >= S)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct DelayTarget(f64);

/// Target for the long-run abandonment fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct AbandonTarget(f64);

macro_rules! target_impl {
    ($t:ident) => {
        impl $t {
            pub fn new(epsilon: f64) -> Result<Self, StaffingError> {
                if epsilon > 0.0 && epsilon < 1.0 {
                    Ok(Self(epsilon))
                } else {
                    Err(StaffingError::BadTarget(epsilon))
                }
            }

            pub fn epsilon(self) -> f64 {
                self.0
            }

            /// Upper-tail standard normal quantile `z` with `P(Z > z) = epsilon`.
            pub fn z(self) -> f64 {
                inverse_survival(self.0).expect("epsilon checked on construction")
            }
        }

        impl TryFrom<f64> for $t {
            type Error = StaffingError;
            fn try_from(epsilon: f64) -> Result<Self, StaffingError> {
                Self::new(epsilon)
            }
        }

        impl From<$t> for f64 {
            fn from(t: $t) -> f64 {
                t.0
            }
        }
    };
}

target_impl!(DelayTarget);
target_impl!(AbandonTarget);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    FluidDeterministic,
    BivariateNormal,
    AbandonImplicit,
    AbandonFluidBound,
    EmpiricalSim,
}

/// Which closed forms to use. `Auto` tries underloaded first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeChoice {
    #[default]
    Auto,
    Underloaded,
    Overloaded,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Diagnostics {
    /// Metric predicted by the method's own model at `c_real`, `floor` and `ceil`.
    pub predicted_at_real: Option<f64>,
    pub predicted_at_floor: Option<f64>,
    pub predicted_at_ceil: Option<f64>,
    /// Residual of the equation actually solved, metric minus target.
    pub equation_residual: Option<f64>,
    pub regime_consistent: bool,
    pub iterations: Option<u32>,
    pub bracket: Option<(f64, f64)>,
    /// 95% interval of a simulated metric.
    pub confidence_interval: Option<(f64, f64)>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaffingAnswer {
    pub method: Method,
    pub c_real: f64,
    pub c_int: u64,
    #[serde(rename = "regime")]
    pub regime_assumed: RegimeTag,
    pub diagnostics: Diagnostics,
    /// Solution under the other regime's formulas, when one was computed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alternative: Option<Box<StaffingAnswer>>,
}

impl StaffingAnswer {
    fn new(method: Method, c_real: f64, regime_assumed: RegimeTag, w: &Workload) -> Result<Self, StaffingError> {
        if !(c_real > 0.0 && c_real.is_finite()) {
            return Err(StaffingError::NonPositive(c_real));
        }
        let regime_consistent = regime_matches(regime_assumed, w.regime_at(c_real).tag);
        Ok(Self {
            method,
            c_real,
            c_int: c_real.ceil() as u64,
            regime_assumed,
            diagnostics: Diagnostics {
                regime_consistent,
                ..Diagnostics::default()
            },
            alternative: None,
        })
    }

    /// Fills the floor/real/ceil predictions from `metric`.
    fn predict_with<F: Fn(f64) -> Option<f64>>(mut self, metric: F) -> Self {
        let floor = self.c_real.floor();
        self.diagnostics.predicted_at_real = metric(self.c_real);
        self.diagnostics.predicted_at_floor = if floor > 0.0 { metric(floor) } else { None };
        self.diagnostics.predicted_at_ceil = metric(self.c_real.ceil());
        self
    }

    fn note(mut self, note: impl Into<String>) -> Self {
        self.diagnostics.notes.push(note.into());
        self
    }
}

/// Critical counts as consistent with either regime.
fn regime_matches(assumed: RegimeTag, actual: RegimeTag) -> bool {
    actual == RegimeTag::Critical || assumed == actual
}

/// Moments of `(Q - S)+` and `(S - Q)+` under a normal `Q - S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExcessMoments {
    pub mean_excess: f64,
    pub var_excess: f64,
    pub mean_idle: f64,
    pub var_idle: f64,
}

pub fn excess_moments(q_star: f64, s_star: f64, v_qq: f64, v_ss: f64, v_qs: f64) -> Result<ExcessMoments, StaffingError> {
    let var = v_qq + v_ss - 2.0 * v_qs;
    if !(var > 0.0) {
        return Err(StaffingError::DegenerateVariance(var));
    }
    let d = NormalParams::from_variance(q_star - s_star, var).map_err(|e| StaffingError::Numerical(e.to_string()))?;
    let excess = positive_part_moments(d);
    let idle = positive_part_moments(d.negated());
    Ok(ExcessMoments {
        mean_excess: excess.mean,
        var_excess: excess.variance,
        mean_idle: idle.mean,
        var_idle: idle.variance,
    })
}

/// Shorthand shared by the solvers.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Rates {
    lambda: f64,
    mu: f64,
    theta: f64,
    p: f64,
    gamma: f64,
    kappa: f64,
}

impl Rates {
    fn of(w: &Workload) -> Self {
        Self {
            lambda: w.lambda(),
            mu: w.mu(),
            theta: w.theta(),
            p: w.p(),
            gamma: w.gamma(),
            kappa: w.kappa().value(),
        }
    }

    /// `gamma p mu / (gamma + p mu)^2`, the per-server scale of `v_ss`.
    fn charge_variance(&self) -> f64 {
        let d = self.gamma + self.p * self.mu;
        self.gamma * self.p * self.mu / (d * d)
    }

    /// `v_qs / v_ss` in overload.
    fn covariance_ratio(&self) -> f64 {
        (self.gamma + self.theta + self.p * self.mu - self.mu) / (self.theta + self.gamma + self.p * self.mu)
    }
}

/// Roots of `a x^2 + b x + c0 = 0`, larger first, in a cancellation-safe form.
fn quadratic_roots(a: f64, b: f64, c0: f64) -> Result<(f64, f64), StaffingError> {
    let disc = b * b - 4.0 * a * c0;
    if disc < 0.0 {
        return Err(StaffingError::Infeasible { discriminant: disc });
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c0 / q) };
    Ok((r1.max(r2), r1.min(r2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn targets_reject_out_of_range() {
        for eps in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(DelayTarget::new(eps).is_err());
            assert!(AbandonTarget::new(eps).is_err());
        }
        assert!((DelayTarget::new(0.05).unwrap().z() - 1.6449).abs() < 1e-4);
    }

    #[test]
    fn target_json_round_trip() {
        let t: DelayTarget = serde_json::from_str("0.05").unwrap();
        assert_eq!(serde_json::to_string(&t).unwrap(), "0.05");
        assert!(serde_json::from_str::<AbandonTarget>("1.0").is_err());
    }

    #[test]
    fn symmetric_excess_moments() {
        let m = excess_moments(10.0, 10.0, 3.0, 2.0, 0.5).unwrap();
        let sigma = 4f64.sqrt();
        assert!((m.mean_excess - sigma / (2.0 * PI).sqrt()).abs() < 1e-12);
        assert!((m.mean_excess - m.mean_idle).abs() < 1e-15);
    }

    #[test]
    fn overloaded_excess_moments() {
        let m = excess_moments(100.0, 200.0 / 3.0, 100.0, 200.0 / 9.0, 40.0 / 3.0).unwrap();
        assert!((m.mean_excess - 100.0 / 3.0).abs() < 1e-3);
        assert!(m.mean_idle < 1e-3);
    }

    #[test]
    fn deep_underload_has_no_excess() {
        let m = excess_moments(10.0, 100.0, 10.0, 5.0, 0.0).unwrap();
        assert!(m.mean_excess < 1e-5 * 15f64.sqrt());
    }

    #[test]
    fn degenerate_variance_rejected() {
        assert!(matches!(
            excess_moments(1.0, 1.0, 1.0, 1.0, 1.0),
            Err(StaffingError::DegenerateVariance(_))
        ));
    }

    #[test]
    fn quadratic_roots_are_ordered() {
        let (hi, lo) = quadratic_roots(1.0, -3.0, 2.0).unwrap();
        assert_eq!((hi, lo), (2.0, 1.0));
        assert!(matches!(quadratic_roots(1.0, 0.0, 1.0), Err(StaffingError::Infeasible { .. })));
    }

    proptest::proptest! {
        #[test]
        fn excess_identity(m in -50.0..50.0f64, v in 0.1..100.0f64) {
            let e = excess_moments(m, 0.0, v, 0.0, 0.0).unwrap();
            proptest::prop_assert!((e.mean_excess - e.mean_idle - m).abs() < 1e-10);
            proptest::prop_assert!(e.var_excess >= 0.0 && e.var_idle >= 0.0);
        }
    }
}
