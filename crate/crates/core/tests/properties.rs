use erlangs::cli::output::to_canonical_json;
use erlangs::diffusion::stationary_moments;
use erlangs::model::ModelParams;
use erlangs::simulator::{run, SimConfig, StopRule};
use proptest::prelude::*;

fn small_system() -> impl Strategy<Value = ModelParams> {
    (0.5..20.0f64, 0.2..5.0f64, 0.1..5.0f64, 0.0..=1.0f64, 0.1..5.0f64, 1u32..15)
        .prop_map(|(l, m, t, p, g, c)| ModelParams::new(l, m, t, p, g, c as f64).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simulation_conserves(params in small_system(), seed in any::<u64>()) {
        let config = SimConfig::new(&params, StopRule::Customers(2_000)).unwrap().with_seed(seed).recording_events();
        let r = run(&config);
        prop_assert!(r.customers_conserved());
        prop_assert!(r.charging_conserved());
        prop_assert!(r.servers_conserved);
        let c = params.c() as u32;
        for e in r.events.as_deref().unwrap() {
            prop_assert!(e.s <= c);
        }
        prop_assert!(r.delay_probability >= 0.0 && r.delay_probability <= 1.0);
        prop_assert!(r.abandonment_fraction >= 0.0 && r.abandonment_fraction <= 1.0);
    }

    #[test]
    fn simulation_is_deterministic(params in small_system(), seed in any::<u64>()) {
        let config = SimConfig::new(&params, StopRule::Customers(500)).unwrap().with_seed(seed);
        prop_assert_eq!(run(&config), run(&config));
    }

    #[test]
    fn moments_json_is_canonical(params in small_system()) {
        let m = stationary_moments(&params).unwrap();
        let text = to_canonical_json(&m).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(to_canonical_json(&parsed).unwrap(), text);
    }
}
