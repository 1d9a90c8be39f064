//! Experiment plumbing shared by the command line and the examples:
//! parameter sweeps, staffing comparison tables and the self-check suite.

pub mod sweep;
pub mod table;
pub mod validate;

pub use sweep::{SweepError, SweepGrid, SweepPoint};
pub use table::{
    benchmark_abandonment_points, benchmark_delay_points, build_table, compute_row, write_table, TableKind, TableRow,
    TABLE_HEADER,
};
pub use validate::{default_sigma, run_validation, Check, SigmaBuilder, ValidationOptions, ValidationReport};
