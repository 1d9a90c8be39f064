//! Replicated simulation of an overloaded system, compared with the fluid
//! and diffusion predictions.

use erlangs::diffusion::stationary_moments;
use erlangs::model::ModelParams;
use erlangs::simulator::{replicate, Metric, ReplicationSummary, SimConfig, StopRule};

pub fn run() -> Result<ReplicationSummary, Box<dyn std::error::Error>> {
    let params = ModelParams::new(100.0, 1.0, 1.0, 0.5, 1.0, 100.0)?;
    let config = SimConfig::new(&params, StopRule::Customers(20_000))?.with_seed(11);
    let summary = replicate(&config, 8, None)?;
    let m = stationary_moments(&params)?;
    for (metric, predicted) in [
        (Metric::MeanQ, m.q_star),
        (Metric::MeanS, m.s_star),
        (Metric::VarQ, m.v_qq),
        (Metric::VarS, m.v_ss),
        (Metric::CovQs, m.v_qs),
    ] {
        let s = summary.metric(metric);
        println!("{metric:?}: {:9.3} +- {:6.3}   diffusion {predicted:9.3}", s.mean, s.half_width.unwrap_or(f64::NAN));
    }
    println!("P(delay) {:.4}", summary.pooled_delay_probability);
    Ok(summary)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run().map(|_| ())
}
