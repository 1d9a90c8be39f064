//! Solves the truncated chain exactly and checks one short simulation
//! against it.

use erlangs::model::ModelParams;
use erlangs::simulator::{replicate, stationary_oracle_auto, Metric, SimConfig, StopRule};

pub fn run() -> Result<(f64, f64), Box<dyn std::error::Error>> {
    let params = ModelParams::new(6.0, 2.0, 1.5, 0.8, 0.6, 5.0)?;
    let exact = stationary_oracle_auto(&params)?;
    println!("truncated at q={} (tail mass {:.1e})", exact.q_max, exact.tail_mass);
    println!("P(delay)={:.5}  P(abandon)={:.5}", exact.metrics.delay_probability, exact.metrics.abandonment_fraction);

    let config = SimConfig::new(&params, StopRule::Customers(20_000))?.with_seed(3);
    let sim = replicate(&config, 10, None)?;
    let d = sim.metric(Metric::DelayProbability);
    println!("simulated P(delay)={:.5} +- {:.5}", d.mean, d.half_width.unwrap_or(f64::NAN));
    Ok((exact.metrics.delay_probability, d.mean))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run().map(|_| ())
}
