use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::engine::{run, EventCounts, SimConfig, SimResult};
use super::stats::{TimeAverages, TimeIntegrals};

/// Per-replication quantity summarised across replications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    MeanQ,
    MeanS,
    VarQ,
    VarS,
    CovQs,
    MeanExcess,
    MeanIdle,
    VarExcess,
    VarIdle,
    DelayProbability,
    AbandonmentFraction,
}

impl Metric {
    pub const ALL: [Metric; 11] = [
        Metric::MeanQ,
        Metric::MeanS,
        Metric::VarQ,
        Metric::VarS,
        Metric::CovQs,
        Metric::MeanExcess,
        Metric::MeanIdle,
        Metric::VarExcess,
        Metric::VarIdle,
        Metric::DelayProbability,
        Metric::AbandonmentFraction,
    ];

    pub fn of(self, r: &SimResult) -> f64 {
        let a = &r.time_averages;
        match self {
            Metric::MeanQ => a.mean_q,
            Metric::MeanS => a.mean_s,
            Metric::VarQ => a.var_q,
            Metric::VarS => a.var_s,
            Metric::CovQs => a.cov_qs,
            Metric::MeanExcess => a.mean_excess,
            Metric::MeanIdle => a.mean_idle,
            Metric::VarExcess => a.var_excess,
            Metric::VarIdle => a.var_idle,
            Metric::DelayProbability => r.delay_probability,
            Metric::AbandonmentFraction => r.abandonment_fraction,
        }
    }
}

/// Mean over replications with a normal 95% half-width. `std` and
/// `half_width` are absent for a single replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: Option<f64>,
    pub half_width: Option<f64>,
}

impl MetricSummary {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        if xs.len() < 2 {
            return Self {
                mean,
                std: None,
                half_width: None,
            };
        }
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        let std = var.sqrt();
        Self {
            mean,
            std: Some(std),
            half_width: Some(1.96 * std / n.sqrt()),
        }
    }

    /// Standard error of the mean.
    pub fn standard_error(&self, replications: usize) -> Option<f64> {
        self.std.map(|s| s / (replications as f64).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryBand {
    pub t: Vec<f64>,
    pub q_mean: Vec<f64>,
    pub q_half_width: Vec<f64>,
    pub s_mean: Vec<f64>,
    pub s_half_width: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationSummary {
    pub seed: u64,
    pub replications: usize,
    pub metrics: BTreeMap<Metric, MetricSummary>,
    /// Moments from the time integrals of all windows combined.
    pub pooled: TimeAverages,
    pub pooled_counts: EventCounts,
    pub pooled_delay_probability: f64,
    pub pooled_abandonment_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band: Option<TrajectoryBand>,
}

impl ReplicationSummary {
    pub fn from_runs(runs: &[SimResult]) -> Self {
        assert!(!runs.is_empty(), "summary needs at least one replication");
        let metrics = Metric::ALL
            .iter()
            .map(|&m| {
                let xs: Vec<f64> = runs.iter().map(|r| m.of(r)).collect();
                (m, MetricSummary::from_samples(&xs))
            })
            .collect();
        let mut integrals = TimeIntegrals::default();
        let mut counts = EventCounts::default();
        let mut delays = 0u64;
        for r in runs {
            integrals.merge(&r.integrals);
            counts.merge(&r.window_counts);
            delays += r.delay_events;
        }
        let arrivals = counts.arrivals as f64;
        Self {
            seed: runs[0].seed,
            replications: runs.len(),
            metrics,
            pooled: integrals.averages(),
            pooled_counts: counts,
            pooled_delay_probability: delays as f64 / arrivals,
            pooled_abandonment_fraction: counts.abandonments as f64 / arrivals,
            band: trajectory_band(runs),
        }
    }

    pub fn metric(&self, m: Metric) -> MetricSummary {
        self.metrics[&m]
    }
}

/// Pointwise mean and half-width over the grid prefix shared by every run.
fn trajectory_band(runs: &[SimResult]) -> Option<TrajectoryBand> {
    let paths: Vec<_> = runs.iter().map(|r| r.trajectory.as_ref()).collect::<Option<_>>()?;
    let len = paths.iter().map(|p| p.len()).min()?;
    let mut band = TrajectoryBand {
        t: Vec::with_capacity(len),
        q_mean: Vec::with_capacity(len),
        q_half_width: Vec::with_capacity(len),
        s_mean: Vec::with_capacity(len),
        s_half_width: Vec::with_capacity(len),
    };
    for k in 0..len {
        let q: Vec<f64> = paths.iter().map(|p| f64::from(p[k].q)).collect();
        let s: Vec<f64> = paths.iter().map(|p| f64::from(p[k].s)).collect();
        let (qs, ss) = (MetricSummary::from_samples(&q), MetricSummary::from_samples(&s));
        band.t.push(paths[0][k].t);
        band.q_mean.push(qs.mean);
        band.q_half_width.push(qs.half_width.unwrap_or(0.0));
        band.s_mean.push(ss.mean);
        band.s_half_width.push(ss.half_width.unwrap_or(0.0));
    }
    Some(band)
}

#[derive(Debug, thiserror::Error)]
pub enum ReplicateError {
    #[error("need at least one replication")]
    NoReplications,
    #[error("could not build worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// Runs replications `0..reps` of `config` in parallel. Results come back in
/// replication order, so output does not depend on `jobs`.
pub fn replicate_runs(config: &SimConfig, reps: usize, jobs: Option<usize>) -> Result<Vec<SimResult>, ReplicateError> {
    if reps == 0 {
        return Err(ReplicateError::NoReplications);
    }
    let work = || {
        (0..reps as u64)
            .into_par_iter()
            .map(|i| run(&config.clone().with_replication(i)))
            .collect::<Vec<_>>()
    };
    match jobs {
        Some(n) => Ok(rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build()?.install(work)),
        None => Ok(work()),
    }
}

pub fn replicate(config: &SimConfig, reps: usize, jobs: Option<usize>) -> Result<ReplicationSummary, ReplicateError> {
    Ok(ReplicationSummary::from_runs(&replicate_runs(config, reps, jobs)?))
}
