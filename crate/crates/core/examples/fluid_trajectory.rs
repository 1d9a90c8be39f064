//! Integrates the fluid ODE from an empty queue with every server active
//! and prints how fast it settles on the fixed point.

use erlangs::fluid::{default_step, fixed_point, integrate, FluidState};
use erlangs::model::ModelParams;

pub fn run() -> Result<f64, Box<dyn std::error::Error>> {
    let params = ModelParams::new(100.0, 1.0, 1.0, 0.5, 1.0, 100.0)?;
    let fp = fixed_point(&params);
    let traj = integrate(&params, FluidState::new(0.0, 100.0), 50.0, default_step(&params))?;
    for (t, x) in traj.times.iter().zip(&traj.states).step_by(traj.len() / 10) {
        println!("t={t:6.2}  q={:8.3}  s={:8.3}", x.q, x.s);
    }
    let gap = traj.terminal().distance(&fp.state());
    println!("fixed point ({:.3}, {:.3}) {}, distance at t=50: {gap:.2e}", fp.q_star, fp.s_star, fp.regime.tag);
    Ok(gap)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run().map(|_| ())
}
