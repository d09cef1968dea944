use gfq_core::scaling::{default_c_grid, delta_exponent_audit, DEFAULT_TOL};
use gfq_core::variance::builtin_models;
use gfq_core::{solve_delta, Regime, VarianceFunction, VarianceModel};
use proptest::prelude::*;

#[test]
fn fbm_closed_form() {
    for h in [0.3, 0.5, 0.7, 0.9] {
        let m = VarianceModel::fbm(h).unwrap();
        for c in [0.01, 1.0, 100.0] {
            let s = solve_delta(&m, c, DEFAULT_TOL).unwrap();
            let exact = c.powf(1.0 / (h - 1.0));
            assert!(((s.delta - exact) / exact).abs() <= 1e-9, "H={h} c={c}: {} vs {exact}", s.delta);
            assert!(s.residual.abs() <= DEFAULT_TOL);
        }
    }
}

#[test]
fn exponent_audits() {
    for m in builtin_models() {
        for regime in [Regime::Heavy, Regime::Light] {
            let a = delta_exponent_audit(&m, regime, &default_c_grid(regime)).unwrap();
            assert!(a.passed, "{m} {regime}: slope {} expected {}", a.slope, a.expected);
        }
    }
}

proptest! {
    #[test]
    fn identity_and_monotone(mi in 0usize..6, logc in prop::collection::vec(-4.0f64..4.0, 2..12)) {
        let m = builtin_models()[mi];
        let mut cs: Vec<f64> = logc.iter().map(|l| 10f64.powf(*l)).collect();
        cs.sort_by(f64::total_cmp);
        cs.dedup_by(|a, b| (*a / *b - 1.0).abs() < 1e-6);
        let ds: Vec<f64> = cs
            .iter()
            .map(|&c| {
                let s = solve_delta(&m, c, DEFAULT_TOL).unwrap();
                assert!((c * s.delta / m.sigma(s.delta) - 1.0).abs() <= DEFAULT_TOL);
                s.delta
            })
            .collect();
        prop_assert!(ds.windows(2).all(|w| w[1] < w[0]), "{:?} -> {:?}", cs, ds);
    }
}
