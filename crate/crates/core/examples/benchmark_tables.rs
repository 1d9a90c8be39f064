//! Analytic columns of the two benchmark staffing tables.
//! Pass `--with-sim` to also run the simulation search (minutes).

use erlangs::harness::{
    benchmark_abandonment_points, benchmark_delay_points, build_table, write_table, TableKind, TableRow,
};
use erlangs::staffing::SimBudget;

pub fn run(with_sim: bool) -> Result<Vec<TableRow>, Box<dyn std::error::Error>> {
    let budget = with_sim.then(SimBudget::default);
    let mut all = Vec::new();
    for (kind, points) in [
        (TableKind::Delay, benchmark_delay_points()),
        (TableKind::Abandonment, benchmark_abandonment_points()),
    ] {
        let rows = build_table(&points, kind, budget.as_ref());
        println!("{kind:?}");
        write_table(&rows, std::io::stdout(), Some(2))?;
        all.extend(rows);
    }
    Ok(all)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run(std::env::args().any(|a| a == "--with-sim")).map(|_| ())
}
