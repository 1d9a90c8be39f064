//! Exact stationary distribution of the truncated CTMC.
//!
//! States are grouped into levels by queue length `q` with phase `s`. Every
//! transition moves the level by at most one, so the chain is block
//! tridiagonal and linear level reduction solves it with one
//! `(c + 1) x (c + 1)` factorisation per level.

use nalgebra::DMatrix;
use serde::Serialize;

use super::engine::SimModel;
use crate::model::ModelParams;

pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-8;
/// Cap on `levels * (c + 1)^3`, roughly the flop count of the solve.
pub const MAX_WORK: f64 = 2e10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("oracle needs an integer server count >= 1, got c = {0}")]
    NonIntegerServers(f64),
    #[error("truncation at q = {q_max} leaves tail mass {tail:.3e} above {tolerance:.1e}")]
    TailMass { q_max: u32, tail: f64, tolerance: f64 },
    #[error("state space with c = {c}, q_max = {q_max} exceeds the solver budget")]
    TooLarge { c: u32, q_max: u32 },
    #[error("singular level block at q = {0}")]
    Singular(u32),
}

/// Stationary expectations under the truncated chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleMetrics {
    /// `P(Q >= S)`, the delay probability seen by arrivals (PASTA).
    pub delay_probability: f64,
    /// `P(Q + 1 >= S)`.
    pub delay_probability_post_arrival: f64,
    pub mean_excess: f64,
    pub abandonment_fraction: f64,
    pub mean_q: f64,
    pub mean_s: f64,
    pub var_q: f64,
    pub var_s: f64,
    pub cov_qs: f64,
    pub mean_idle: f64,
    pub var_excess: f64,
    pub var_idle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryDistribution {
    pub c: u32,
    pub q_max: u32,
    pub tail_mass: f64,
    /// `probs[q][s]`.
    pub probs: Vec<Vec<f64>>,
    pub metrics: OracleMetrics,
}

impl StationaryDistribution {
    pub fn prob(&self, q: u32, s: u32) -> f64 {
        self.probs[q as usize][s as usize]
    }
}

pub fn stationary_oracle(params: &ModelParams, q_max: u32) -> Result<StationaryDistribution, OracleError> {
    stationary_oracle_with(params, q_max, DEFAULT_TAIL_TOLERANCE)
}

/// Picks a truncation level from the fluid scale and raises it until the
/// tail mass passes.
pub fn stationary_oracle_auto(params: &ModelParams) -> Result<StationaryDistribution, OracleError> {
    let scale = (params.lambda() / params.mu()).max(params.lambda() / params.theta());
    let mut q_max = (params.c() + scale + 12.0 * scale.sqrt() + 20.0).ceil() as u32;
    loop {
        match stationary_oracle(params, q_max) {
            Err(OracleError::TailMass { .. }) => q_max = q_max.saturating_mul(2),
            other => return other,
        }
    }
}

pub fn stationary_oracle_with(
    params: &ModelParams,
    q_max: u32,
    tolerance: f64,
) -> Result<StationaryDistribution, OracleError> {
    let model = SimModel::from_params(params).map_err(|_| OracleError::NonIntegerServers(params.c()))?;
    let c = model.c;
    let phases = c as usize + 1;
    if (f64::from(q_max) + 1.0) * (phases as f64).powi(3) > MAX_WORK {
        return Err(OracleError::TooLarge { c, q_max });
    }
    let blocks = LevelBlocks { model, q_max };

    // R[q] maps pi_{q-1} to pi_q; index 0 unused.
    let mut rates: Vec<DMatrix<f64>> = vec![DMatrix::zeros(0, 0); q_max as usize + 1];
    let mut m = blocks.local(q_max);
    for q in (1..=q_max).rev() {
        // R_q M_q = -A_up(q - 1), solved through the transpose.
        let rhs = -blocks.up(q - 1).transpose();
        let r_t = m.transpose().lu().solve(&rhs).ok_or(OracleError::Singular(q))?;
        let r = r_t.transpose();
        m = blocks.local(q - 1) + &r * blocks.down(q);
        rates[q as usize] = r;
    }

    // pi_0 M_0 = 0: replace one equation with a normalisation.
    let mut a = m.transpose();
    for j in 0..phases {
        a[(phases - 1, j)] = 1.0;
    }
    let mut b = nalgebra::DVector::zeros(phases);
    b[phases - 1] = 1.0;
    let pi0 = a.lu().solve(&b).ok_or(OracleError::Singular(0))?;

    let mut levels: Vec<Vec<f64>> = Vec::with_capacity(q_max as usize + 1);
    let mut current = pi0.transpose();
    levels.push(current.iter().copied().collect());
    for r in rates.iter().skip(1) {
        current = &current * r;
        levels.push(current.iter().copied().collect());
    }
    let total: f64 = levels.iter().flatten().sum();
    for level in &mut levels {
        for x in level.iter_mut() {
            *x = (*x / total).max(0.0);
        }
    }
    let tail_mass: f64 = levels[q_max as usize].iter().sum();
    if tail_mass > tolerance {
        return Err(OracleError::TailMass { q_max, tail: tail_mass, tolerance });
    }
    let metrics = metrics_of(&levels, &model);
    Ok(StationaryDistribution {
        c,
        q_max,
        tail_mass,
        probs: levels,
        metrics,
    })
}

struct LevelBlocks {
    model: SimModel,
    q_max: u32,
}

impl LevelBlocks {
    fn phases(&self) -> usize {
        self.model.c as usize + 1
    }

    fn up(&self, q: u32) -> DMatrix<f64> {
        let n = self.phases();
        if q < self.q_max {
            DMatrix::from_diagonal_element(n, n, self.model.lambda)
        } else {
            DMatrix::zeros(n, n)
        }
    }

    fn down(&self, q: u32) -> DMatrix<f64> {
        let n = self.phases();
        let mut d = DMatrix::zeros(n, n);
        let m = &self.model;
        for s in 0..=m.c {
            let busy = f64::from(q.min(s));
            let waiting = f64::from(q.saturating_sub(s));
            let i = s as usize;
            d[(i, i)] += m.mu * busy * (1.0 - m.p) + m.theta * waiting;
            if s > 0 {
                d[(i, i - 1)] += m.mu * busy * m.p;
            }
        }
        d
    }

    fn local(&self, q: u32) -> DMatrix<f64> {
        let n = self.phases();
        let mut l = DMatrix::zeros(n, n);
        let m = &self.model;
        for s in 0..=m.c {
            let i = s as usize;
            let busy = f64::from(q.min(s));
            let waiting = f64::from(q.saturating_sub(s));
            let ret = m.gamma * f64::from(m.c - s);
            if s < m.c {
                l[(i, i + 1)] = ret;
            }
            let arrival = if q < self.q_max { m.lambda } else { 0.0 };
            l[(i, i)] = -(arrival + m.mu * busy + m.theta * waiting + ret);
        }
        l
    }
}

fn metrics_of(levels: &[Vec<f64>], model: &SimModel) -> OracleMetrics {
    let mut e = [0.0; 11];
    for (q, level) in levels.iter().enumerate() {
        let q = q as u32;
        for (s, &pr) in level.iter().enumerate() {
            let s = s as u32;
            let (qf, sf) = (f64::from(q), f64::from(s));
            let excess = f64::from(q.saturating_sub(s));
            let idle = f64::from(s.saturating_sub(q));
            e[0] += pr * f64::from(u8::from(q >= s));
            e[1] += pr * f64::from(u8::from(q + 1 >= s));
            e[2] += pr * qf;
            e[3] += pr * sf;
            e[4] += pr * qf * qf;
            e[5] += pr * sf * sf;
            e[6] += pr * qf * sf;
            e[7] += pr * excess;
            e[8] += pr * excess * excess;
            e[9] += pr * idle;
            e[10] += pr * idle * idle;
        }
    }
    OracleMetrics {
        delay_probability: e[0],
        delay_probability_post_arrival: e[1],
        mean_excess: e[7],
        abandonment_fraction: model.theta * e[7] / model.lambda,
        mean_q: e[2],
        mean_s: e[3],
        var_q: e[4] - e[2] * e[2],
        var_s: e[5] - e[3] * e[3],
        cov_qs: e[6] - e[2] * e[3],
        mean_idle: e[9],
        var_excess: e[8] - e[7] * e[7],
        var_idle: e[10] - e[9] * e[9],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Erlang-A by birth-death recursion: p = 0 keeps every server active.
    fn erlang_a(lambda: f64, mu: f64, theta: f64, c: u32, q_max: u32) -> Vec<f64> {
        let mut w = vec![1.0];
        for q in 1..=q_max {
            let death = mu * f64::from(q.min(c)) + theta * f64::from(q.saturating_sub(c));
            w.push(w[q as usize - 1] * lambda / death);
        }
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    }

    #[test]
    fn reduces_to_erlang_a_without_charging() {
        let params = ModelParams::new(12.0, 1.0, 0.7, 0.0, 2.0, 10.0).unwrap();
        let d = stationary_oracle(&params, 80).unwrap();
        let bd = erlang_a(12.0, 1.0, 0.7, 10, 80);
        for (q, &expected) in bd.iter().enumerate() {
            let got: f64 = d.probs[q].iter().sum();
            assert!((got - expected).abs() < 1e-12, "q={q}: {got} vs {expected}");
            assert!((d.prob(q as u32, 10) - expected).abs() < 1e-12);
        }
        let delay: f64 = bd.iter().skip(10).sum();
        assert!((d.metrics.delay_probability - delay).abs() < 1e-12);
        assert!(d.metrics.var_s.abs() < 1e-12);
    }

    #[test]
    fn servers_stay_active_when_nearly_idle() {
        let params = ModelParams::new(1e-6, 1.0, 1.0, 0.5, 1.0, 5.0).unwrap();
        let d = stationary_oracle(&params, 10).unwrap();
        assert!((d.metrics.mean_s - 5.0).abs() < 1e-5);
    }

    #[test]
    fn global_balance_holds() {
        let params = ModelParams::new(8.0, 1.0, 0.5, 0.4, 1.5, 9.0).unwrap();
        let d = stationary_oracle(&params, 70).unwrap();
        let total: f64 = d.probs.iter().flatten().sum();
        assert!((total - 1.0).abs() < 1e-12);
        // Customer flow: lambda (1 - P(Q = q_max)) = mu E[min(Q,S)] + theta E[(Q-S)+].
        let busy: f64 = d
            .probs
            .iter()
            .enumerate()
            .flat_map(|(q, l)| l.iter().enumerate().map(move |(s, &pr)| pr * q.min(s) as f64))
            .sum();
        let out = busy + 0.5 * d.metrics.mean_excess;
        assert!((8.0 * (1.0 - d.tail_mass) - out).abs() < 1e-9);
        // Server flow: p mu E[min(Q,S)] = gamma E[c - S].
        assert!((0.4 * busy - 1.5 * (9.0 - d.metrics.mean_s)).abs() < 1e-9);
    }

    #[test]
    fn tight_truncation_is_reported() {
        let params = ModelParams::new(20.0, 1.0, 0.5, 0.2, 1.0, 10.0).unwrap();
        assert!(matches!(stationary_oracle(&params, 15), Err(OracleError::TailMass { .. })));
        assert!(stationary_oracle_auto(&params).is_ok());
    }

    #[test]
    fn oversized_state_space_is_refused() {
        let params = ModelParams::new(20.0, 1.0, 0.5, 0.2, 1.0, 3000.0).unwrap();
        assert!(matches!(stationary_oracle(&params, 4000), Err(OracleError::TooLarge { .. })));
    }

    #[test]
    fn overloaded_moments_match_reference() {
        // Reference values from an independent sparse solve.
        let params = ModelParams::new(100.0, 1.0, 1.0, 0.5, 1.0, 100.0).unwrap();
        let d = stationary_oracle_auto(&params).unwrap();
        assert!((d.metrics.mean_q - 100.0).abs() < 1e-3, "{}", d.metrics.mean_q);
        assert!((d.metrics.mean_s - 66.6668).abs() < 1e-3, "{}", d.metrics.mean_s);
        assert!((d.metrics.var_s - 22.2226).abs() < 1e-3, "{}", d.metrics.var_s);
    }
}
