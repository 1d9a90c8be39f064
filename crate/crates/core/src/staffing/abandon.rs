use serde::{Deserialize, Serialize};

use super::{AbandonTarget, Method, Rates, StaffingAnswer, StaffingError};
use crate::model::{RegimeTag, Workload};
use crate::probability::{cdf, expected_positive_part, pdf, NormalParams};
use crate::roots::decreasing_root;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbandonOptions {
    /// Give up if the bracket has to grow past this many servers.
    pub c_max: f64,
    /// Required `|alpha(c) - epsilon|`.
    pub tolerance: f64,
    pub max_iter: u32,
}

impl Default for AbandonOptions {
    fn default() -> Self {
        Self {
            c_max: 1e9,
            tolerance: 1e-10,
            max_iter: 200,
        }
    }
}

/// Mean, variance and variance slope of the overloaded excess `Q - S` at `c`.
fn excess_law(r: &Rates, c: f64) -> (f64, f64, f64) {
    let u_a = r.charge_variance() * (1.0 - 2.0 * r.covariance_ratio());
    let m = r.lambda / r.theta - r.mu * r.kappa / r.theta * c;
    (m, r.lambda / r.theta + u_a * c, u_a)
}

/// Abandonment fraction `(theta/lambda) E[(Q - S)+]` with `Q - S` normal
/// under the overloaded closures.
pub fn alpha_of_c(w: &Workload, c: f64) -> Result<f64, StaffingError> {
    let r = Rates::of(w);
    let (m, var, u_a) = excess_law(&r, c);
    if !(var > 0.0) {
        return Err(StaffingError::VarianceClosure { c, u_a });
    }
    let d = NormalParams::from_variance(m, var).map_err(|e| StaffingError::Numerical(e.to_string()))?;
    Ok(r.theta / r.lambda * expected_positive_part(d))
}

/// `d alpha / d c`, negative wherever `alpha` is defined.
pub fn alpha_derivative(w: &Workload, c: f64) -> Result<f64, StaffingError> {
    let r = Rates::of(w);
    let (m, var, u_a) = excess_law(&r, c);
    if !(var > 0.0) {
        return Err(StaffingError::VarianceClosure { c, u_a });
    }
    let sigma = var.sqrt();
    let a = m / sigma;
    let dm = -r.mu * r.kappa / r.theta;
    let dsigma = u_a / (2.0 * sigma);
    Ok(r.theta / r.lambda * (dsigma * pdf(a) + dm * cdf(a)))
}

/// Fluid lower bound `lambda (gamma + p mu)(1 - epsilon) / (gamma mu)`.
pub fn staff_abandon_fluid_bound(w: &Workload, target: AbandonTarget) -> Result<StaffingAnswer, StaffingError> {
    let r = Rates::of(w);
    let c = r.lambda * (1.0 - target.epsilon()) / (r.mu * r.kappa);
    Ok(StaffingAnswer::new(Method::AbandonFluidBound, c, RegimeTag::Overloaded, w)?
        .predict_with(|x| alpha_of_c(w, x).ok())
        .note("fluid lower bound; every valid staffing level is at least this"))
}

/// Root of `alpha(c) = epsilon`, bracketed from the fluid bound upward by
/// doubling and then refined by Newton-safeguarded bisection.
pub fn staff_abandon_implicit(
    w: &Workload,
    target: AbandonTarget,
    options: AbandonOptions,
) -> Result<StaffingAnswer, StaffingError> {
    let r = Rates::of(w);
    let eps = target.epsilon();
    let g = |c: f64| alpha_of_c(w, c).map(|a| a - eps).unwrap_or(f64::NAN);
    let mut lo = r.lambda * (1.0 - eps) / (r.mu * r.kappa);

    let (_, _, u_a) = excess_law(&r, lo);
    // With U_A < 0 the variance closure only holds below c_sigma.
    let c_sigma = if u_a < 0.0 { r.lambda / r.theta / -u_a } else { f64::INFINITY };
    if lo >= c_sigma {
        return Err(StaffingError::VarianceClosure { c: lo, u_a });
    }
    if c_sigma.is_finite() {
        let (m_end, _, _) = excess_law(&r, c_sigma);
        let alpha_end = r.theta / r.lambda * m_end.max(0.0);
        if alpha_end >= eps {
            return Err(StaffingError::VarianceClosure { c: c_sigma, u_a });
        }
    }
    let mut hi = lo;
    loop {
        hi = (2.0 * hi).min(c_sigma * (1.0 - 1e-9));
        if hi > options.c_max {
            let alpha_at_max = alpha_of_c(w, options.c_max).unwrap_or(f64::NAN);
            return Err(StaffingError::BracketExhausted { c_max: options.c_max, alpha_at_max });
        }
        if g(hi) < 0.0 {
            break;
        }
        lo = hi;
    }
    let root = decreasing_root(
        g,
        |c| alpha_derivative(w, c).ok(),
        lo,
        hi,
        options.tolerance,
        options.max_iter,
    )
    .map_err(|e| StaffingError::Numerical(e.to_string()))?;

    let mut answer = StaffingAnswer::new(Method::AbandonImplicit, root.x, RegimeTag::Overloaded, w)?
        .predict_with(|x| alpha_of_c(w, x).ok());
    answer.diagnostics.equation_residual = Some(root.value);
    answer.diagnostics.iterations = Some(root.iterations);
    answer.diagnostics.bracket = Some(root.bracket);
    if !answer.diagnostics.regime_consistent {
        answer = answer.note(
            "root lies above the offered load, where abandonment is negligible; \
             delay-probability staffing (staff_delay_bivariate) governs",
        );
    }
    Ok(answer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(lambda: f64, mu: f64, theta: f64, p: f64, gamma: f64) -> Workload {
        Workload::new(lambda, mu, theta, p, gamma).unwrap()
    }

    fn t(eps: f64) -> AbandonTarget {
        AbandonTarget::new(eps).unwrap()
    }

    #[test]
    fn alpha_examples() {
        assert!((alpha_of_c(&w(80.0, 1.0, 1.0, 0.5, 10.0), 76.73).unwrap() - 0.10).abs() < 5e-4);
        assert!((alpha_of_c(&w(100.0, 0.5, 1.0, 0.5, 0.5), 320.04).unwrap() - 0.01).abs() < 5e-5);
        let near_zero = alpha_of_c(&w(80.0, 1.0, 1.0, 0.5, 10.0), 1e-9).unwrap();
        assert!((near_zero - 1.0).abs() < 1e-6, "{near_zero}");
    }

    #[test]
    fn fluid_bound_examples() {
        let a = staff_abandon_fluid_bound(&w(80.0, 1.0, 1.0, 0.5, 10.0), t(0.10)).unwrap();
        assert!((a.c_real - 75.6).abs() < 1e-9);
        assert_eq!(a.c_int, 76);
        let b = staff_abandon_fluid_bound(&w(100.0, 0.5, 1.0, 0.5, 0.5), t(0.05)).unwrap();
        assert!((b.c_real - 285.0).abs() < 1e-9);
        let c = staff_abandon_fluid_bound(&w(100.0, 0.5, 1.0, 0.5, 0.5), t(1.0 - 1e-9)).unwrap();
        assert!(c.c_real < 1e-6);
    }

    #[test]
    fn implicit_examples() {
        let a = staff_abandon_implicit(&w(80.0, 1.0, 1.0, 0.5, 10.0), t(0.10), AbandonOptions::default()).unwrap();
        assert!((a.c_real - 76.73).abs() < 0.005, "{}", a.c_real);
        assert!(a.diagnostics.equation_residual.unwrap().abs() < 1e-8);
        assert!(a.diagnostics.regime_consistent);
        let b = staff_abandon_implicit(&w(120.0, 1.0, 1.0, 0.5, 0.1), t(0.01), AbandonOptions::default()).unwrap();
        assert!((b.c_real - 786.16).abs() < 0.005, "{}", b.c_real);
    }

    #[test]
    fn implicit_root_above_offered_load_is_flagged() {
        let a = staff_abandon_implicit(&w(100.0, 0.5, 1.0, 0.5, 0.5), t(0.01), AbandonOptions::default()).unwrap();
        assert!((a.c_real - 320.04).abs() < 0.005);
        assert!(!a.diagnostics.regime_consistent);
        assert!(!a.diagnostics.notes.is_empty());
    }

    #[test]
    fn recovers_precomputed_root() {
        let wl = w(60.0, 2.0, 0.5, 0.3, 1.5);
        let c0 = 31.7;
        let eps = alpha_of_c(&wl, c0).unwrap();
        let a = staff_abandon_implicit(&wl, t(eps), AbandonOptions::default()).unwrap();
        assert!((a.c_real - c0).abs() < 1e-6, "{}", a.c_real);
    }

    #[test]
    fn tiny_c_max_exhausts_bracket() {
        let opts = AbandonOptions { c_max: 80.0, ..AbandonOptions::default() };
        let err = staff_abandon_implicit(&w(80.0, 1.0, 1.0, 0.5, 10.0), t(0.01), opts).unwrap_err();
        assert!(matches!(err, StaffingError::BracketExhausted { .. }));
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let wl = w(100.0, 0.5, 1.0, 0.5, 0.5);
        for c in [200.0, 280.0, 320.0] {
            let h = 1e-4;
            let fd = (alpha_of_c(&wl, c + h).unwrap() - alpha_of_c(&wl, c - h).unwrap()) / (2.0 * h);
            assert!((alpha_derivative(&wl, c).unwrap() - fd).abs() < 1e-8);
        }
    }

    fn overloaded_draw() -> impl Strategy<Value = (Workload, f64)> {
        (10.0..300.0f64, 0.2..5.0f64, 0.2..5.0f64, 0.05..1.0f64, 0.2..10.0f64, 0.01..0.3f64)
            .prop_map(|(l, m, th, p, g, e)| (w(l, m, th, p, g), e))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn alpha_strictly_decreasing((wl, _eps) in overloaded_draw(), f1 in 0.1..1.0f64, f2 in 0.1..1.0f64) {
            let load = wl.offered_load();
            let (c1, c2) = (load * f1.min(f2), load * f1.max(f2) + 1e-3 * load);
            if let (Ok(a1), Ok(a2)) = (alpha_of_c(&wl, c1), alpha_of_c(&wl, c2)) {
                prop_assert!(a2 < a1, "alpha({c2}) = {a2} >= alpha({c1}) = {a1}");
            }
        }

        #[test]
        fn implicit_at_least_fluid_bound((wl, eps) in overloaded_draw()) {
            let bound = staff_abandon_fluid_bound(&wl, t(eps)).unwrap();
            if let Ok(a) = staff_abandon_implicit(&wl, t(eps), AbandonOptions::default()) {
                prop_assert!(a.c_real >= bound.c_real);
                prop_assert!(a.diagnostics.equation_residual.unwrap().abs() < 1e-8);
            }
        }
    }
}
