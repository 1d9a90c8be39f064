//! Runs every example's `run()` so the examples stay in step with the library.

#[allow(dead_code)]
#[path = "../examples/fluid_trajectory.rs"]
mod fluid_trajectory;
#[allow(dead_code)]
#[path = "../examples/diffusion_moments.rs"]
mod diffusion_moments;
#[allow(dead_code)]
#[path = "../examples/covariance_window.rs"]
mod covariance_window;
#[allow(dead_code)]
#[path = "../examples/simulate.rs"]
mod simulate;
#[allow(dead_code)]
#[path = "../examples/exact_oracle.rs"]
mod exact_oracle;
#[allow(dead_code)]
#[path = "../examples/delay_staffing.rs"]
mod delay_staffing;
#[allow(dead_code)]
#[path = "../examples/abandonment_staffing.rs"]
mod abandonment_staffing;
#[allow(dead_code)]
#[path = "../examples/empirical_staffing.rs"]
mod empirical_staffing;
#[allow(dead_code)]
#[path = "../examples/benchmark_tables.rs"]
mod benchmark_tables;
#[allow(dead_code)]
#[path = "../examples/sweep.rs"]
mod sweep;
#[allow(dead_code)]
#[path = "../examples/self_check.rs"]
mod self_check;

#[test]
fn fluid_settles() {
    assert!(fluid_trajectory::run().unwrap() < 1e-3);
}

#[test]
fn moments_cover_both_regimes() {
    let sets = diffusion_moments::run().unwrap();
    assert_eq!(sets[0].v_qs, 0.0);
    assert!((sets[1].v_qq - 100.0).abs() < 1e-9);
}

#[test]
fn covariance_changes_sign() {
    let rows = covariance_window::run().unwrap();
    assert!(rows.iter().any(|&(_, v)| v < 0.0));
    assert!(rows.iter().any(|&(_, v)| v > 0.0));
}

#[test]
fn simulation_near_fluid() {
    let s = simulate::run().unwrap();
    let q = s.metric(erlangs::simulator::Metric::MeanQ).mean;
    assert!((q - 100.0).abs() < 3.0, "{q}");
}

#[test]
fn oracle_matches_simulation() {
    let (exact, sim) = exact_oracle::run().unwrap();
    assert!((exact - sim).abs() < 0.02, "{exact} vs {sim}");
}

#[test]
fn delay_staffing_bivariate_needs_more() {
    let a = delay_staffing::run().unwrap();
    assert!(a[1].c_real >= a[0].c_real);
    assert!(a[3].c_real >= a[2].c_real);
}

#[test]
fn abandonment_fluid_below_diffusion() {
    for (fluid, diff) in abandonment_staffing::run().unwrap() {
        assert!(fluid < diff);
    }
}

#[test]
fn empirical_search_terminates() {
    let a = empirical_staffing::run().unwrap();
    assert!(a.c_int >= 10 && a.c_int <= 25, "{}", a.c_int);
}

#[test]
fn benchmark_tables_have_eighteen_rows() {
    assert_eq!(benchmark_tables::run(false).unwrap().len(), 18);
}

#[test]
fn sweep_rows() {
    assert_eq!(sweep::run().unwrap(), 9);
}

#[test]
fn self_check_passes() {
    assert!(self_check::run().passed);
}
