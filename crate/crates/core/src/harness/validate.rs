//! Self-check suite: fixed points, closed forms against the Lyapunov solve,
//! and simulation against the exact truncated chain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::diffusion::{
    closed_forms, coupled_v_qq, covariance_sign_thresholds, jacobian_sigma, lyapunov_residual, solve_lyapunov,
    Matrix2,
};
use crate::fluid::{fixed_point, FixedPoint};
use crate::model::{ModelParams, RegimeTag};
use crate::probability::{inverse_survival, survival};
use crate::simulator::{
    replicate_runs, stationary_oracle_auto, Metric, ReplicationSummary, SimConfig, StopRule,
};

/// Builds the diffusion matrix checked against the closed forms.
pub type SigmaBuilder = fn(&ModelParams, &FixedPoint) -> Matrix2;

pub fn default_sigma(params: &ModelParams, fp: &FixedPoint) -> Matrix2 {
    jacobian_sigma(params, fp).1
}

#[derive(Debug, Clone, Copy)]
pub struct ValidationOptions {
    /// Random parameter draws per regime for the closed-form checks.
    pub draws: usize,
    pub customers: u64,
    pub replications: usize,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub sigma: SigmaBuilder,
}

impl ValidationOptions {
    pub fn quick() -> Self {
        Self {
            draws: 200,
            customers: 20_000,
            replications: 20,
            seed: 7,
            jobs: None,
            sigma: default_sigma,
        }
    }

    pub fn full() -> Self {
        Self {
            draws: 1000,
            customers: 100_000,
            replications: 30,
            ..Self::quick()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// Small configurations whose exact chain is cheap to solve.
pub const ORACLE_CONFIGS: [(f64, f64, f64, f64, f64, f64); 3] = [
    (2.0, 1.0, 1.0, 0.5, 1.0, 2.0),
    (5.0, 1.0, 0.5, 0.3, 1.0, 4.0),
    (6.0, 2.0, 1.5, 0.8, 0.6, 5.0),
];

pub fn run_validation(options: &ValidationOptions) -> ValidationReport {
    let mut checks = vec![fixed_point_check(), quantile_check(), threshold_check()];
    checks.extend(lyapunov_checks(options));
    checks.extend(oracle_checks(options));
    ValidationReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

fn fixed_point_check() -> Check {
    let cases = [
        ((100.0, 5.0, 1.0, 0.1, 0.5, 100.0), (20.0, 80.0, RegimeTag::Underloaded)),
        ((100.0, 1.0, 1.0, 0.5, 1.0, 100.0), (100.0, 200.0 / 3.0, RegimeTag::Overloaded)),
        ((100.0, 1.0, 1.0, 0.5, 1.0, 150.0), (100.0, 100.0, RegimeTag::Critical)),
    ];
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for ((l, m, t, p, g, c), (q, s, tag)) in cases {
        let fp = fixed_point(&ModelParams::new(l, m, t, p, g, c).expect("valid"));
        worst = worst.max((fp.q_star - q).abs()).max((fp.s_star - s).abs());
        ok &= fp.regime.tag == tag;
    }
    check("fixed-points", ok && worst < 1e-9, format!("max error {worst:e}"))
}

fn quantile_check() -> Check {
    let grid = [1e-6, 1e-3, 0.01, 0.05, 0.1, 0.5];
    let worst = grid
        .iter()
        .map(|&e| (survival(inverse_survival(e).expect("in range")) - e).abs())
        .fold(0.0, f64::max);
    check("quantile-round-trip", worst < 1e-9, format!("max error {worst:e}"))
}

fn threshold_check() -> Check {
    let t = covariance_sign_thresholds(12.0, 0.2, 0.3, 1.0, 10.0);
    let ok = (t.mu_neg - 1.7143).abs() < 1e-4 && (t.mu_ol - 1.875).abs() < 1e-12;
    check("covariance-thresholds", ok, format!("mu_neg {:.6}, mu_ol {:.6}", t.mu_neg, t.mu_ol))
}

/// Random draw in the requested regime.
pub fn draw_params<R: Rng>(rng: &mut R, overloaded: bool) -> ModelParams {
    loop {
        let lambda = rng.random_range(1.0..200.0);
        let mu = rng.random_range(0.1..10.0);
        let theta = rng.random_range(0.1..10.0);
        let p = rng.random_range(0.0..1.0);
        let gamma = rng.random_range(0.1..10.0);
        let load = lambda / mu + lambda * p / gamma;
        let c = if overloaded {
            load * rng.random_range(0.3..0.95)
        } else {
            load * rng.random_range(1.05..2.0)
        };
        if let Ok(params) = ModelParams::new(lambda, mu, theta, p, gamma, c) {
            return params;
        }
    }
}

fn lyapunov_checks(options: &ValidationOptions) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut out = Vec::new();
    for (label, overloaded) in [("underloaded", false), ("overloaded", true)] {
        let mut worst_closed: f64 = 0.0;
        let mut worst_residual: f64 = 0.0;
        let mut failures = 0;
        for _ in 0..options.draws {
            let params = draw_params(&mut rng, overloaded);
            let fp = fixed_point(&params);
            let j = jacobian_sigma(&params, &fp).0;
            let sigma = (options.sigma)(&params, &fp);
            let Ok(v) = solve_lyapunov(&j, &sigma) else {
                failures += 1;
                continue;
            };
            let closed = closed_forms(&params, &fp);
            let scale = v.a11.abs().max(v.a22.abs());
            let gaps = [
                (v.a22 - closed.v_ss).abs() / scale,
                (v.a12 - closed.v_qs).abs() / scale,
                (v.a11 - coupled_v_qq(&params, &fp, v.a12)).abs() / scale,
            ];
            worst_closed = gaps.into_iter().fold(worst_closed, f64::max);
            let residual = lyapunov_residual(&j, &v, &sigma).max_abs() / sigma.max_abs();
            worst_residual = worst_residual.max(residual);
        }
        out.push(check(
            &format!("lyapunov-closed-form-{label}"),
            failures == 0 && worst_closed < 1e-9,
            format!("{} draws, max relative gap {worst_closed:e}, {failures} solve failures", options.draws),
        ));
        out.push(check(
            &format!("lyapunov-residual-{label}"),
            failures == 0 && worst_residual < 1e-10,
            format!("max residual / |Sigma| {worst_residual:e}"),
        ));
    }
    out
}

fn oracle_checks(options: &ValidationOptions) -> Vec<Check> {
    let mut out = Vec::new();
    for (i, &(l, m, t, p, g, c)) in ORACLE_CONFIGS.iter().enumerate() {
        let name = format!("oracle-{l}-{m}-{t}-{p}-{g}-{c}");
        let params = ModelParams::new(l, m, t, p, g, c).expect("valid");
        let exact = match stationary_oracle_auto(&params) {
            Ok(d) => d,
            Err(e) => {
                out.push(check(&name, false, format!("oracle failed: {e}")));
                continue;
            }
        };
        let config = SimConfig::new(&params, StopRule::Customers(options.customers))
            .expect("integer servers")
            .with_seed(options.seed.wrapping_add(i as u64));
        let runs = match replicate_runs(&config, options.replications, options.jobs) {
            Ok(r) => r,
            Err(e) => {
                out.push(check(&name, false, format!("simulation failed: {e}")));
                continue;
            }
        };
        let conserved = runs
            .iter()
            .all(|r| r.customers_conserved() && r.charging_conserved() && r.servers_conserved);
        let balanced = runs.iter().all(|r| r.flow_imbalance(l) < 0.01);
        out.push(check(
            &format!("conservation-{l}-{m}-{t}-{p}-{g}-{c}"),
            conserved && balanced,
            format!("counts and servers conserved: {conserved}; flow balance within 1%: {balanced}"),
        ));
        let summary = ReplicationSummary::from_runs(&runs);
        let mut ok = true;
        let mut detail = Vec::new();
        for (metric, truth) in [
            (Metric::DelayProbability, exact.metrics.delay_probability),
            (Metric::AbandonmentFraction, exact.metrics.abandonment_fraction),
        ] {
            let s = summary.metric(metric);
            let se = s.standard_error(runs.len()).unwrap_or(f64::NAN);
            let z = (s.mean - truth) / se;
            ok &= z.abs() <= 3.0;
            detail.push(format!("{metric:?}: sim {:.5} exact {truth:.5} ({z:+.2} SE)", s.mean));
        }
        out.push(check(&name, ok, format!("{}; tail mass {:.1e}", detail.join(", "), exact.tail_mass)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_sim(sigma: SigmaBuilder) -> ValidationOptions {
        ValidationOptions {
            draws: 100,
            sigma,
            ..ValidationOptions::quick()
        }
    }

    #[test]
    fn closed_form_checks_pass() {
        let checks = lyapunov_checks(&no_sim(default_sigma));
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
    }

    /// Off-diagonal written as `-mu x` instead of `p mu x`.
    fn transcribed_sigma(params: &ModelParams, fp: &FixedPoint) -> Matrix2 {
        let s = default_sigma(params, fp);
        let x = if fp.regime.tag.uses_underloaded_formulas() { fp.q_star } else { fp.s_star };
        let off = -params.mu() * x;
        Matrix2::new(s.a11, off, off, s.a22)
    }

    #[test]
    fn transcription_bug_is_caught() {
        let checks = lyapunov_checks(&no_sim(transcribed_sigma));
        assert!(checks.iter().any(|c| c.name.starts_with("lyapunov-closed-form") && !c.passed));
    }

    #[test]
    fn analytic_checks_pass() {
        assert!(fixed_point_check().passed);
        assert!(quantile_check().passed);
        assert!(threshold_check().passed);
    }
}
