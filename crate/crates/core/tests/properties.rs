use proptest::prelude::*;

use qbm::decoherence::{closed_form_thermal_initial, closed_form_zero_t_initial, AttenuationSeries, Regime};
use qbm::scenario::{fmt_e, ScenarioConfig};
use qbm::wigner::CatSpec;
use qbm::{BathSpec, OscillatorSpec, ThermalSpec};

proptest! {
    #[test]
    fn closed_forms_are_bounded_and_start_at_one(
        gamma in 1e-3f64..2.0,
        kt in 0.0f64..1e3,
        d in 0.0f64..20.0,
        sigma in 0.05f64..5.0,
        t in 0.0f64..10.0,
    ) {
        let bath = BathSpec::ohmic(gamma, 1.0);
        let osc = OscillatorSpec::new(1.0, 1.0, 1.0);
        let th = ThermalSpec::new(kt);
        let cat = CatSpec::new(d, sigma);
        for f in [closed_form_zero_t_initial, closed_form_thermal_initial] {
            let a = f(&bath, &osc, &th, &cat, t).unwrap().a;
            prop_assert!((0.0..=1.0).contains(&a), "a = {a}");
            prop_assert_eq!(f(&bath, &osc, &th, &cat, 0.0).unwrap().a, 1.0);
        }
    }

    #[test]
    fn wider_separation_decoheres_faster(
        kt in 1e-2f64..1e3,
        d in 0.1f64..10.0,
        extra in 0.0f64..10.0,
        sigma in 0.1f64..3.0,
        t in 1e-3f64..5.0,
    ) {
        let bath = BathSpec::ohmic(0.1, 1.0);
        let osc = OscillatorSpec::free_particle(1.0, 1.0);
        let th = ThermalSpec::new(kt);
        for f in [closed_form_zero_t_initial, closed_form_thermal_initial] {
            let near = f(&bath, &osc, &th, &CatSpec::new(d, sigma), t).unwrap().a;
            let far = f(&bath, &osc, &th, &CatSpec::new(d + extra, sigma), t).unwrap().a;
            prop_assert!(far <= near, "d={d}: {near} vs d={}: {far}", d + extra);
        }
    }

    #[test]
    fn decaying_series_has_no_invariant_violations(rate in 1e-3f64..10.0, n in 3usize..40) {
        let times: Vec<f64> = (0..n).map(|k| k as f64 * 0.1).collect();
        let a: Vec<f64> = times.iter().map(|t| (-rate * t * t).exp()).collect();
        let series = AttenuationSeries::new(times, a, Regime::ThermalInitial).unwrap();
        prop_assert!(series.invariant_violations(1e-12).is_empty());
    }

    #[test]
    fn csv_numbers_round_trip(x in prop::num::f64::NORMAL | prop::num::f64::ZERO) {
        let s = fmt_e(x);
        let back: f64 = s.parse().unwrap();
        let scale = x.abs().max(f64::MIN_POSITIVE);
        prop_assert!((back - x).abs() <= 1e-12 * scale, "{x} -> {s}");
    }

    #[test]
    fn config_survives_serialization(seed in 0..=i64::MAX as u64, kt in 0.1f64..100.0, gamma in 0.01f64..2.0, nq in 16usize..512) {
        let text = format!(
            "seed = {seed}\n[bath]\nkind = \"ohmic\"\ngamma = {gamma:?}\n[thermal]\nkt = {kt:?}\n[grid]\nnq = {nq}\n\
             [[run]]\nname = \"c\"\nmode = \"coefficients\"\nt_final = 1.0\n"
        );
        let cfg = ScenarioConfig::parse(&text).unwrap();
        let again = ScenarioConfig::parse(&cfg.to_toml().unwrap()).unwrap();
        prop_assert_eq!(cfg, again);
    }
}
