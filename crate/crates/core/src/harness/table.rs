use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sweep::SweepPoint;
use crate::model::Workload;
use crate::staffing::{
    staff_abandon_fluid_bound, staff_abandon_implicit, staff_delay_bivariate, staff_delay_deterministic,
    staff_empirical, AbandonOptions, AbandonTarget, DelayTarget, EmpiricalMetric, RegimeChoice, SimBudget,
    StaffingAnswer, StaffingError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TableKind {
    Delay,
    Abandonment,
}

pub const TABLE_HEADER: [&str; 12] = [
    "lambda", "mu", "theta", "p", "gamma", "epsilon", "c_sim", "c_fluid", "pct_fluid", "c_diff", "pct_diff", "status",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub point: SweepPoint,
    pub c_sim: Option<u64>,
    pub c_fluid: Option<f64>,
    pub c_diff: Option<f64>,
    pub status: String,
}

impl TableRow {
    pub fn pct_fluid(&self) -> Option<f64> {
        Some(100.0 * self.c_fluid? / self.c_sim? as f64)
    }

    pub fn pct_diff(&self) -> Option<f64> {
        Some(100.0 * self.c_diff? / self.c_sim? as f64)
    }
}

/// Benchmark configurations for delay targets: three loads, each with a
/// light-charging, slow-charging and fast-service variant.
pub fn benchmark_delay_points() -> Vec<SweepPoint> {
    let mut rows = Vec::new();
    for lambda in [80.0, 100.0, 120.0] {
        for (mu, p, gamma, epsilon) in [(1.0, 0.1, 0.5, 0.01), (1.0, 0.5, 0.1, 0.05), (10.0, 0.5, 0.5, 0.10)] {
            rows.push((lambda, mu, 1.0, p, gamma, epsilon));
        }
    }
    indexed(rows)
}

/// Benchmark configurations for abandonment targets.
pub fn benchmark_abandonment_points() -> Vec<SweepPoint> {
    let mut rows = Vec::new();
    for (lambda, mu, gamma) in [(80.0, 1.0, 10.0), (100.0, 0.5, 0.5), (120.0, 1.0, 0.1)] {
        for epsilon in [0.01, 0.05, 0.10] {
            rows.push((lambda, mu, 1.0, 0.5, gamma, epsilon));
        }
    }
    indexed(rows)
}

fn indexed(rows: Vec<(f64, f64, f64, f64, f64, f64)>) -> Vec<SweepPoint> {
    rows.into_iter()
        .enumerate()
        .map(|(index, (lambda, mu, theta, p, gamma, epsilon))| SweepPoint {
            index,
            lambda,
            mu,
            theta,
            p,
            gamma,
            epsilon,
        })
        .collect()
}

/// Analytic columns always; `c_sim` only when a simulation budget is given.
/// Solver failures land in `status` rather than aborting the table.
pub fn compute_row(point: &SweepPoint, kind: TableKind, sim: Option<&SimBudget>) -> TableRow {
    let mut status = Vec::new();
    let workload = match Workload::new(point.lambda, point.mu, point.theta, point.p, point.gamma) {
        Ok(w) => w,
        Err(e) => {
            return TableRow {
                point: *point,
                c_sim: None,
                c_fluid: None,
                c_diff: None,
                status: format!("invalid parameters: {e}"),
            }
        }
    };
    let mut take = |label: &str, answer: Result<StaffingAnswer, StaffingError>| match answer {
        Ok(a) => {
            if !a.diagnostics.regime_consistent {
                status.push(format!("{label}: regime-inconsistent"));
            }
            Some(a.c_real)
        }
        Err(e) => {
            status.push(format!("{label}: {e}"));
            None
        }
    };
    let (c_fluid, c_diff, metric) = match kind {
        TableKind::Delay => {
            let target = DelayTarget::new(point.epsilon);
            let fluid = target.clone().and_then(|t| staff_delay_deterministic(&workload, t, RegimeChoice::Auto));
            let diff = target.and_then(|t| staff_delay_bivariate(&workload, t, RegimeChoice::Auto));
            (take("c_fluid", fluid), take("c_diff", diff), EmpiricalMetric::Delay)
        }
        TableKind::Abandonment => {
            let target = AbandonTarget::new(point.epsilon);
            let fluid = target.clone().and_then(|t| staff_abandon_fluid_bound(&workload, t));
            let diff = target.and_then(|t| staff_abandon_implicit(&workload, t, AbandonOptions::default()));
            (take("c_fluid", fluid), take("c_diff", diff), EmpiricalMetric::Abandonment)
        }
    };
    let c_sim = sim.and_then(|budget| {
        let start = c_diff.or(c_fluid).map_or(1, |c| c.ceil() as u64);
        match staff_empirical(&workload, metric, point.epsilon, *budget, start) {
            Ok(a) => Some(a.c_int),
            Err(e) => {
                status.push(format!("c_sim: {e}"));
                None
            }
        }
    });
    TableRow {
        point: *point,
        c_sim,
        c_fluid,
        c_diff,
        status: if status.is_empty() { "ok".into() } else { status.join("; ") },
    }
}

/// Rows in input order regardless of completion order.
pub fn build_table(points: &[SweepPoint], kind: TableKind, sim: Option<&SimBudget>) -> Vec<TableRow> {
    points.par_iter().map(|p| compute_row(p, kind, sim)).collect()
}

/// Shortest round-trip decimals, or fixed `digits` decimals for staffing
/// and percentage columns when given.
pub fn write_table<W: Write>(rows: &[TableRow], out: W, digits: Option<usize>) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TABLE_HEADER)?;
    let exact = |x: f64| x.to_string();
    let fixed = |x: Option<f64>| match (x, digits) {
        (None, _) => String::new(),
        (Some(x), Some(d)) => format!("{x:.d$}"),
        (Some(x), None) => x.to_string(),
    };
    for r in rows {
        let p = &r.point;
        w.write_record([
            exact(p.lambda),
            exact(p.mu),
            exact(p.theta),
            exact(p.p),
            exact(p.gamma),
            exact(p.epsilon),
            r.c_sim.map_or(String::new(), |c| c.to_string()),
            fixed(r.c_fluid),
            fixed(r.pct_fluid()),
            fixed(r.c_diff),
            fixed(r.pct_diff()),
            r.status.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
