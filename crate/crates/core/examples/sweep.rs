//! Cartesian sweep over arrival rate and charging probability.

use erlangs::harness::{build_table, write_table, SweepGrid, TableKind};

pub fn run() -> Result<usize, Box<dyn std::error::Error>> {
    let grid = SweepGrid {
        lambda: vec![50.0, 100.0, 200.0],
        mu: vec![1.0],
        theta: vec![1.0],
        p: vec![0.0, 0.25, 0.5],
        gamma: vec![0.5],
        epsilon: vec![0.05],
    };
    let points = grid.points(1000)?;
    let rows = build_table(&points, TableKind::Delay, None);
    write_table(&rows, std::io::stdout(), Some(2))?;
    Ok(rows.len())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run().map(|_| ())
}
