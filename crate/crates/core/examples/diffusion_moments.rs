//! Stationary diffusion moments on both sides of the load boundary.

use erlangs::diffusion::{stationary_moments, MomentSet};
use erlangs::model::ModelParams;

pub fn run() -> Result<Vec<MomentSet>, Box<dyn std::error::Error>> {
    let sets = [
        ModelParams::new(100.0, 5.0, 1.0, 0.1, 0.5, 100.0)?,
        ModelParams::new(100.0, 1.0, 1.0, 0.5, 1.0, 100.0)?,
    ];
    let mut out = Vec::new();
    for params in &sets {
        let m = stationary_moments(params)?;
        println!(
            "{:8}  q*={:8.3} s*={:8.3}  v_qq={:8.3} v_ss={:8.3} v_qs={:8.3}",
            m.regime.to_string(),
            m.q_star,
            m.s_star,
            m.v_qq,
            m.v_ss,
            m.v_qs
        );
        for w in &m.warnings {
            println!("  warning: {w}");
        }
        out.push(m);
    }
    Ok(out)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run().map(|_| ())
}
