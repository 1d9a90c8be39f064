use serde::{Deserialize, Serialize};

use super::{quadratic_roots, Method, Rates, RegimeChoice, StaffingAnswer, StaffingError, DelayTarget};
use crate::diffusion::stationary_moments;
use crate::fluid::fixed_point;
use crate::model::{RegimeTag, Workload};
use crate::probability::survival;

/// `P(Q >= S)` for jointly normal `(Q, S)`: `survival((s* - q*) / sd(Q - S))`.
pub fn delay_probability(q_star: f64, s_star: f64, v_qq: f64, v_ss: f64, v_qs: f64) -> Result<f64, StaffingError> {
    let var = v_qq + v_ss - 2.0 * v_qs;
    if !(var > 0.0) {
        return Err(StaffingError::DegenerateVariance(var));
    }
    Ok(survival((s_star - q_star) / var.sqrt()))
}

/// Delay probability with deterministic servers and Poisson-scale queue noise.
pub fn deterministic_delay_at(w: &Workload, c: f64) -> Result<f64, StaffingError> {
    let fp = fixed_point(&w.with_servers(c)?);
    Ok(survival((fp.s_star - fp.q_star) / fp.q_star.sqrt()))
}

/// Delay probability from the stationary diffusion moments at `c`.
pub fn bivariate_delay_at(w: &Workload, c: f64) -> Result<f64, StaffingError> {
    let m = stationary_moments(&w.with_servers(c)?).map_err(|e| StaffingError::Numerical(e.to_string()))?;
    delay_probability(m.q_star, m.s_star, m.v_qq, m.v_ss, m.v_qs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DelayRule {
    /// Server pool treated as deterministic.
    Deterministic,
    /// Queue and server pool jointly normal with covariance.
    Bivariate,
}

impl DelayRule {
    fn method(self) -> Method {
        match self {
            DelayRule::Deterministic => Method::FluidDeterministic,
            DelayRule::Bivariate => Method::BivariateNormal,
        }
    }

    fn predict(self, w: &Workload, c: f64) -> Option<f64> {
        match self {
            DelayRule::Deterministic => deterministic_delay_at(w, c).ok(),
            DelayRule::Bivariate => bivariate_delay_at(w, c).ok(),
        }
    }
}

pub fn staff_delay_deterministic(
    w: &Workload,
    target: DelayTarget,
    regime: RegimeChoice,
) -> Result<StaffingAnswer, StaffingError> {
    staff_delay(w, target, DelayRule::Deterministic, regime)
}

pub fn staff_delay_bivariate(
    w: &Workload,
    target: DelayTarget,
    regime: RegimeChoice,
) -> Result<StaffingAnswer, StaffingError> {
    staff_delay(w, target, DelayRule::Bivariate, regime)
}

/// Staffing for `P(Q >= S) = epsilon`. With `Auto` the underloaded formula
/// is tried first and kept if its answer is underloaded; otherwise the
/// overloaded formula is tried. If neither is self-consistent the
/// underloaded answer is returned flagged, with the other attached.
pub fn staff_delay(
    w: &Workload,
    target: DelayTarget,
    rule: DelayRule,
    regime: RegimeChoice,
) -> Result<StaffingAnswer, StaffingError> {
    match regime {
        RegimeChoice::Underloaded => underloaded(w, target, rule),
        RegimeChoice::Overloaded => overloaded(w, target, rule),
        RegimeChoice::Auto => {
            let ul = underloaded(w, target, rule);
            if matches!(&ul, Ok(a) if a.diagnostics.regime_consistent) {
                return ul;
            }
            let ol = overloaded(w, target, rule);
            match (ul, ol) {
                (ul, Ok(ol)) if ol.diagnostics.regime_consistent => {
                    let mut ol = ol;
                    ol.alternative = ul.ok().map(Box::new);
                    Ok(ol)
                }
                (Ok(ul), ol) => {
                    let mut ul = ul.note("neither regime's formula gives a self-consistent answer");
                    match ol {
                        Ok(ol) => ul.alternative = Some(Box::new(ol)),
                        Err(e) => ul = ul.note(format!("overloaded formula: {e}")),
                    }
                    Ok(ul)
                }
                (Err(e), Ok(ol)) => Ok(ol.note(format!("underloaded formula: {e}"))),
                (Err(e), Err(_)) => Err(e),
            }
        }
    }
}

fn underloaded(w: &Workload, target: DelayTarget, rule: DelayRule) -> Result<StaffingAnswer, StaffingError> {
    let r = Rates::of(w);
    let z = target.z();
    let load = r.lambda / r.mu;
    let charging = r.lambda * r.p / r.gamma;
    let spread = match rule {
        DelayRule::Deterministic => load,
        DelayRule::Bivariate => load + charging,
    };
    let c = charging + load + z * spread.sqrt();
    let mut answer = StaffingAnswer::new(rule.method(), c, RegimeTag::Underloaded, w)?
        .predict_with(|x| rule.predict(w, x));
    answer.diagnostics.equation_residual = Some(survival((c - charging - load) / spread.sqrt()) - target.epsilon());
    Ok(answer)
}

fn overloaded(w: &Workload, target: DelayTarget, rule: DelayRule) -> Result<StaffingAnswer, StaffingError> {
    let r = Rates::of(w);
    let z = target.z();
    let (mu_k, lambda, theta) = (r.mu * r.kappa, r.lambda, r.theta);
    // Both rules solve (mu kappa c - lambda)/theta = z sqrt(lambda/theta + slope c).
    let slope = match rule {
        // Variance q* = lambda/theta + kappa (1 - mu/theta) c.
        DelayRule::Deterministic => r.kappa * (1.0 - r.mu / theta),
        DelayRule::Bivariate => {
            r.kappa * (1.0 - r.mu / theta) - 2.0 * r.charge_variance() * r.covariance_ratio()
        }
    };
    let variance = |c: f64| lambda / theta + slope * c;
    let (hi, lo) = quadratic_roots(
        mu_k * mu_k,
        -(2.0 * mu_k * lambda + z * z * theta * theta * slope),
        lambda * lambda - z * z * theta * lambda,
    )?;
    let satisfies = |c: f64| {
        let v = variance(c);
        if !(v > 0.0 && c > 0.0) {
            return false;
        }
        let lhs = (mu_k * c - lambda) / theta;
        let rhs = z * v.sqrt();
        (lhs - rhs).abs() <= 1e-8 * (1.0 + lhs.abs())
    };
    let (c, which) = if satisfies(hi) {
        (hi, "larger")
    } else if satisfies(lo) {
        (lo, "smaller")
    } else {
        return Err(StaffingError::SpuriousRoots);
    };
    let mut answer = StaffingAnswer::new(rule.method(), c, RegimeTag::Overloaded, w)?
        .predict_with(|x| rule.predict(w, x))
        .note(format!("{which} root of the overloaded quadratic"));
    let v = variance(c);
    if v <= 0.0 {
        return Err(StaffingError::DegenerateVariance(v));
    }
    answer.diagnostics.equation_residual =
        Some(survival((mu_k * c - lambda) / theta / v.sqrt()) - target.epsilon());
    Ok(answer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(lambda: f64, mu: f64, theta: f64, p: f64, gamma: f64) -> Workload {
        Workload::new(lambda, mu, theta, p, gamma).unwrap()
    }

    fn t(eps: f64) -> DelayTarget {
        DelayTarget::new(eps).unwrap()
    }

    #[test]
    fn deterministic_underloaded_examples() {
        let a = staff_delay_deterministic(&w(80.0, 1.0, 1.0, 0.5, 0.1), t(0.05), RegimeChoice::Auto).unwrap();
        assert!((a.c_real - 494.71).abs() < 0.005, "{}", a.c_real);
        assert_eq!(a.c_int, 495);
        assert_eq!(a.regime_assumed, RegimeTag::Underloaded);
        assert!(a.diagnostics.regime_consistent);
        let b = staff_delay_deterministic(&w(80.0, 10.0, 1.0, 0.5, 0.5), t(0.10), RegimeChoice::Auto).unwrap();
        assert!((b.c_real - 91.62).abs() < 0.005, "{}", b.c_real);
    }

    #[test]
    fn median_target_is_fluid_point() {
        let a = staff_delay_deterministic(&w(80.0, 1.0, 1.0, 0.5, 0.1), t(0.5), RegimeChoice::Underloaded).unwrap();
        assert!((a.c_real - 480.0).abs() < 1e-9);
    }

    #[test]
    fn bivariate_underloaded_examples() {
        let a = staff_delay_bivariate(&w(80.0, 1.0, 1.0, 0.5, 0.1), t(0.05), RegimeChoice::Auto).unwrap();
        assert!((a.c_real - 516.04).abs() < 0.005, "{}", a.c_real);
        let b = staff_delay_bivariate(&w(100.0, 10.0, 1.0, 0.5, 0.5), t(0.10), RegimeChoice::Auto).unwrap();
        assert!((b.c_real - 123.44).abs() < 0.005, "{}", b.c_real);
        assert!((b.diagnostics.predicted_at_real.unwrap() - 0.10).abs() < 1e-8);
    }

    #[test]
    fn no_charging_is_square_root_staffing() {
        let a = staff_delay_bivariate(&w(50.0, 2.0, 1.0, 0.0, 1.0), t(0.05), RegimeChoice::Auto).unwrap();
        assert!((a.c_real - (25.0 + t(0.05).z() * 5.0)).abs() < 1e-9);
    }

    #[test]
    fn overloaded_delay_on_overloaded_system() {
        let d = delay_probability(100.0, 200.0 / 3.0, 100.0, 200.0 / 9.0, 40.0 / 3.0).unwrap();
        assert!((d - 0.9997).abs() < 1e-4, "{d}");
    }

    #[test]
    fn equal_means_give_one_half() {
        assert_eq!(delay_probability(7.0, 7.0, 3.0, 1.0, 0.2).unwrap(), 0.5);
        assert!(delay_probability(7.0, 7.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn high_target_lands_in_overload() {
        // epsilon > 1/2 asks for fewer servers than the offered load.
        let wl = w(100.0, 1.0, 2.0, 0.5, 1.0);
        for rule in [DelayRule::Deterministic, DelayRule::Bivariate] {
            let a = staff_delay(&wl, t(0.9), rule, RegimeChoice::Auto).unwrap();
            assert_eq!(a.regime_assumed, RegimeTag::Overloaded);
            assert!(a.diagnostics.regime_consistent);
            assert!(a.diagnostics.equation_residual.unwrap().abs() < 1e-9);
            assert!(a.alternative.is_some());
        }
    }

    #[test]
    fn forced_overload_for_low_target_is_flagged() {
        let wl = w(100.0, 1.0, 2.0, 0.5, 1.0);
        let a = staff_delay_bivariate(&wl, t(0.05), RegimeChoice::Overloaded).unwrap();
        assert!(!a.diagnostics.regime_consistent);
    }

    #[test]
    fn deterministic_overload_pre_squaring() {
        let wl = w(100.0, 1.0, 2.0, 0.5, 1.0);
        let a = staff_delay_deterministic(&wl, t(0.8), RegimeChoice::Overloaded).unwrap();
        let pred = deterministic_delay_at(&wl, a.c_real).unwrap();
        assert!((pred - 0.8).abs() < 1e-9, "{pred}");
    }

    proptest! {
        #[test]
        fn bivariate_covers_deterministic(
            lambda in 1.0..500.0f64, mu in 0.1..10.0f64, p in 0.0..1.0f64,
            gamma in 0.1..10.0f64, eps in 0.001..0.499f64,
        ) {
            let wl = w(lambda, mu, 1.0, p, gamma);
            let det = staff_delay_deterministic(&wl, t(eps), RegimeChoice::Underloaded).unwrap();
            let biv = staff_delay_bivariate(&wl, t(eps), RegimeChoice::Underloaded).unwrap();
            prop_assert!(biv.c_real >= det.c_real);
        }

        #[test]
        fn underloaded_bivariate_is_consistent(
            lambda in 1.0..500.0f64, mu in 0.1..10.0f64, p in 0.0..1.0f64,
            gamma in 0.1..10.0f64, eps in 0.001..0.499f64,
        ) {
            let wl = w(lambda, mu, 1.0, p, gamma);
            let a = staff_delay_bivariate(&wl, t(eps), RegimeChoice::Auto).unwrap();
            prop_assert_eq!(a.regime_assumed, RegimeTag::Underloaded);
            prop_assert!((a.diagnostics.predicted_at_real.unwrap() - eps).abs() < 1e-8);
        }

        #[test]
        fn overloaded_roots_solve_their_equation(
            lambda in 10.0..500.0f64, mu in 0.1..5.0f64, theta in 0.1..5.0f64,
            p in 0.05..1.0f64, gamma in 0.1..5.0f64, eps in 0.51..0.99f64,
        ) {
            let wl = w(lambda, mu, theta, p, gamma);
            for rule in [DelayRule::Deterministic, DelayRule::Bivariate] {
                if let Ok(a) = staff_delay(&wl, t(eps), rule, RegimeChoice::Overloaded) {
                    prop_assert!(a.diagnostics.equation_residual.unwrap().abs() < 1e-8);
                }
            }
        }
    }
}
