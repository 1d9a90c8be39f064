//! Analysis and simulation of the multi-server queue with abandonment whose
//! servers leave for a charging period after a random subset of service
//! completions.
//!
//! * [`model`]: parameters, validation, load regimes.
//! * [`probability`]: normal distribution kernel and positive-part moments.
//! * [`fluid`]: fluid ODE, RK4 integration, fixed points.
//! * [`diffusion`]: Jacobian, diffusion matrix, Lyapunov solve, stationary moments.
//! * [`simulator`]: exact CTMC simulation, replications, truncated-chain oracle.
//! * [`staffing`]: delay and abandonment staffing rules, empirical search.
//! * [`harness`]: sweeps, staffing tables, self-check suite.
//! * [`cli`]: the `erlangs` command line.

pub mod cli;
pub mod diffusion;
pub mod fluid;
pub mod harness;
pub mod model;
pub mod probability;
pub mod roots;
pub mod simulator;
pub mod staffing;
