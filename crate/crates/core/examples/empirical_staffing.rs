//! Smallest integer staffing meeting a delay target by simulation search.

use erlangs::model::Workload;
use erlangs::staffing::{staff_empirical, EmpiricalMetric, SimBudget, StaffingAnswer};

pub fn run() -> Result<StaffingAnswer, Box<dyn std::error::Error>> {
    let w = Workload::new(10.0, 1.0, 1.0, 0.2, 1.0)?;
    let budget = SimBudget {
        customers: 20_000,
        replications: 6,
        ..SimBudget::default()
    };
    let a = staff_empirical(&w, EmpiricalMetric::Delay, 0.2, budget, 12)?;
    println!("c = {}  bracket {:?}", a.c_int, a.diagnostics.bracket);
    if let Some(ci) = a.diagnostics.confidence_interval {
        println!("P(delay) at c in {ci:?}");
    }
    Ok(a)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run().map(|_| ())
}
