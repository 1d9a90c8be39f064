use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Method, StaffingAnswer};
use crate::model::{RegimeTag, Workload};
use crate::simulator::{replicate, DelayObservation, Metric, MetricSummary, SimConfig, StopRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmpiricalMetric {
    Delay,
    Abandonment,
}

impl EmpiricalMetric {
    fn metric(self) -> Metric {
        match self {
            EmpiricalMetric::Delay => Metric::DelayProbability,
            EmpiricalMetric::Abandonment => Metric::AbandonmentFraction,
        }
    }
}

/// Simulation effort per candidate `c` and for the whole search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimBudget {
    pub customers: u64,
    pub replications: usize,
    /// Distinct staffing levels that may be simulated.
    pub max_evaluations: u32,
    pub seed: u64,
    pub warmup: f64,
    pub jobs: Option<usize>,
    pub delay_observation: DelayObservation,
}

impl Default for SimBudget {
    fn default() -> Self {
        Self {
            customers: 100_000,
            replications: 10,
            max_evaluations: 40,
            seed: 2024,
            warmup: 0.2,
            jobs: None,
            delay_observation: DelayObservation::PreArrival,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmpiricalError {
    #[error("target epsilon must lie strictly between 0 and 1, got {0}")]
    BadTarget(f64),
    #[error(
        "simulation budget of {evaluations} staffing levels spent; \
         best bracket: failing {failing:?}, passing {passing:?}"
    )]
    Budget {
        evaluations: u32,
        failing: Option<u64>,
        passing: Option<u64>,
    },
    #[error("simulation failed at c = {c}: {message}")]
    Simulation { c: u64, message: String },
}

struct Search<'a> {
    w: &'a Workload,
    metric: EmpiricalMetric,
    budget: SimBudget,
    cache: BTreeMap<u64, MetricSummary>,
    failing: Option<u64>,
    passing: Option<u64>,
    eps: f64,
}

impl Search<'_> {
    fn estimate(&mut self, c: u64) -> Result<MetricSummary, EmpiricalError> {
        if let Some(s) = self.cache.get(&c) {
            return Ok(*s);
        }
        if self.cache.len() as u32 >= self.budget.max_evaluations {
            return Err(EmpiricalError::Budget {
                evaluations: self.cache.len() as u32,
                failing: self.failing,
                passing: self.passing,
            });
        }
        let sim_err = |message: String| EmpiricalError::Simulation { c, message };
        let params = self.w.with_servers(c as f64).map_err(|e| sim_err(e.to_string()))?;
        // Common random numbers: every candidate reuses the same seed.
        let config = SimConfig::new(&params, StopRule::Customers(self.budget.customers))
            .and_then(|cfg| cfg.with_warmup(self.budget.warmup))
            .map_err(|e| sim_err(e.to_string()))?
            .with_seed(self.budget.seed)
            .with_delay_observation(self.budget.delay_observation);
        let summary = replicate(&config, self.budget.replications, self.budget.jobs).map_err(|e| sim_err(e.to_string()))?;
        let m = summary.metric(self.metric.metric());
        self.cache.insert(c, m);
        Ok(m)
    }

    fn passes(&mut self, c: u64) -> Result<bool, EmpiricalError> {
        let ok = self.estimate(c)?.mean <= self.eps;
        if ok {
            self.passing = Some(self.passing.map_or(c, |p| p.min(c)));
        } else {
            self.failing = Some(self.failing.map_or(c, |f| f.max(c)));
        }
        Ok(ok)
    }
}

/// Smallest integer `c` whose replicated mean metric is at most `epsilon`.
/// Grows a bracket exponentially from `start` and then bisects, relying on
/// the metric being nonincreasing in `c`.
pub fn staff_empirical(
    w: &Workload,
    metric: EmpiricalMetric,
    epsilon: f64,
    budget: SimBudget,
    start: u64,
) -> Result<StaffingAnswer, EmpiricalError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(EmpiricalError::BadTarget(epsilon));
    }
    let mut search = Search {
        w,
        metric,
        budget,
        cache: BTreeMap::new(),
        failing: None,
        passing: None,
        eps: epsilon,
    };
    let start = start.max(1);
    let (mut lo, mut hi) = if search.passes(start)? {
        // Walk down until a failing level or c = 1.
        let mut step = 1;
        let mut hi = start;
        loop {
            if hi == 1 {
                break (0, 1);
            }
            let next = hi.saturating_sub(step).max(1);
            if search.passes(next)? {
                hi = next;
                step *= 2;
            } else {
                break (next, hi);
            }
        }
    } else {
        let mut step = 1;
        let mut lo = start;
        loop {
            let next = lo + step;
            if search.passes(next)? {
                break (lo, next);
            }
            lo = next;
            step *= 2;
        }
    };
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if search.passes(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    let at = search.cache[&hi];
    let regime = w.regime_at(hi as f64).tag;
    let mut answer = StaffingAnswer::new(Method::EmpiricalSim, hi as f64, regime, w)
        .expect("search returns c >= 1");
    let d = &mut answer.diagnostics;
    d.predicted_at_real = Some(at.mean);
    d.predicted_at_ceil = Some(at.mean);
    d.predicted_at_floor = search.cache.get(&lo).map(|s| s.mean);
    d.equation_residual = Some(at.mean - epsilon);
    d.iterations = Some(search.cache.len() as u32);
    d.bracket = Some((lo as f64, hi as f64));
    d.confidence_interval = at.half_width.map(|h| (at.mean - h, at.mean + h));
    d.notes.push(format!(
        "{} replications of {} customers per level, seed {}",
        budget.replications, budget.customers, budget.seed
    ));
    if regime == RegimeTag::Critical {
        d.notes.push("staffing equals the offered load".into());
    }
    Ok(answer)
}
