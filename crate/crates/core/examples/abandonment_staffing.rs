//! Abandonment staffing: the fluid bound next to the diffusion answer.

use erlangs::model::Workload;
use erlangs::staffing::{
    alpha_of_c, staff_abandon_fluid_bound, staff_abandon_implicit, AbandonOptions, AbandonTarget,
};

pub fn run() -> Result<Vec<(f64, f64)>, Box<dyn std::error::Error>> {
    let w = Workload::new(80.0, 1.0, 1.0, 0.5, 10.0)?;
    let mut out = Vec::new();
    for eps in [0.01, 0.05, 0.10] {
        let target = AbandonTarget::new(eps)?;
        let fluid = staff_abandon_fluid_bound(&w, target)?;
        let diff = staff_abandon_implicit(&w, target, AbandonOptions::default())?;
        println!(
            "eps={eps:.2}  fluid {:7.2}  diffusion {:7.2}  alpha(c)={:.4}{}",
            fluid.c_real,
            diff.c_real,
            alpha_of_c(&w, diff.c_real)?,
            if diff.diagnostics.regime_consistent { "" } else { "  (above offered load)" }
        );
        out.push((fluid.c_real, diff.c_real));
    }
    Ok(out)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run().map(|_| ())
}
