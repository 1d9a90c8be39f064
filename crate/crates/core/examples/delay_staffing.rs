//! Delay-probability staffing under both server-pool models.

use erlangs::model::Workload;
use erlangs::staffing::{staff_delay, DelayRule, DelayTarget, RegimeChoice, StaffingAnswer};

pub fn run() -> Result<Vec<StaffingAnswer>, Box<dyn std::error::Error>> {
    let mut out = Vec::new();
    for (lambda, mu, p, gamma) in [(80.0, 1.0, 0.1, 0.5), (100.0, 10.0, 0.5, 0.5)] {
        let w = Workload::new(lambda, mu, 1.0, p, gamma)?;
        let target = DelayTarget::new(0.05)?;
        for rule in [DelayRule::Deterministic, DelayRule::Bivariate] {
            let a = staff_delay(&w, target, rule, RegimeChoice::Auto)?;
            println!(
                "lambda={lambda} mu={mu} p={p} gamma={gamma}  {rule:?}: c={:.2} -> {} ({})",
                a.c_real, a.c_int, a.regime_assumed
            );
            out.push(a);
        }
    }
    Ok(out)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run().map(|_| ())
}
