use fpt_core::asym::{const_nonneg_tau, const_rho, const_tau, const_tau_ladder, convergence_table, AsymOptions};
use fpt_core::exact::{exp_moment_rho_exact, exp_moment_tau_exact, SeriesOptions};
use fpt_core::oracle::{expdiff_oracle, srw_oracle};
use fpt_core::walk::{estimate_exp_moment_direct, estimate_exp_overshoot_tilted, Sequential};
use fpt_core::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_series_reproduce_the_simple_walk_oracle(p in 0.55f64..0.95, frac in 0.05f64..0.9) {
        let r = -(2.0 * (p * (1.0 - p)).sqrt()).ln();
        let a = frac * r;
        let spec = IncrementSpec::lattice([(1.0, p), (-1.0, 1.0 - p)]).unwrap();
        let rep = srw_oracle(p, a, 20_000).unwrap();
        let opts = SeriesOptions::default();
        let tau = exp_moment_tau_exact(&spec, a, 0.0, &opts).unwrap().value;
        let rho = exp_moment_rho_exact(&spec, a, 0.0, &opts).unwrap().value;
        let (o_tau, o_rho) = (rep.series("exp_a_tau").unwrap().value, rep.series("exp_a_rho").unwrap().value);
        prop_assert!((tau - o_tau).abs() <= 1e-9 * o_tau, "{tau} vs {o_tau}");
        prop_assert!((rho - o_rho).abs() <= 1e-9 * o_rho, "{rho} vs {o_rho}");
    }

    #[test]
    fn ladder_route_agrees_with_the_nonnegative_formula(w0 in 0.05f64..0.8, w1 in 0.1f64..1.0, w2 in 0.0f64..1.0, frac in 0.05f64..0.9) {
        let total = w0 + w1 + w2;
        let spec = IncrementSpec::lattice([(0.0, w0 / total), (1.0, w1 / total), (2.0, w2 / total)]).unwrap();
        let a = frac * -(w0 / total).ln();
        let direct = const_nonneg_tau(&spec, a).unwrap();
        let ladder = const_tau_ladder(&spec, a, &AsymOptions::default(), &Sequential).unwrap();
        prop_assert!((direct.value - ladder.value).abs() <= 1e-9 * direct.value, "{direct:?} {ladder:?}");
    }
}

#[test]
fn exponential_difference_series_match_the_closed_forms() {
    let rep = expdiff_oracle(1.0, 2.0, 0.05, 10_000).unwrap();
    let spec = IncrementSpec::exp_difference(1.0, 2.0).unwrap();
    let cfg = McConfig::default().with_paths(100_000).with_seed(3);
    let rho = estimate_exp_moment_direct(&spec, 0.05, 0.0, Quantity::Rho, &cfg, &Sequential).unwrap();
    let o = rep.series("exp_a_rho").unwrap().value;
    assert!((rho.mean - o).abs() < 4.0 * rho.std_error, "{rho:?} vs {o}");
    let tau = estimate_exp_moment_direct(&spec, 0.05, 0.0, Quantity::Tau, &cfg, &Sequential).unwrap();
    let o = rep.get("exp_a_tau").unwrap();
    assert!((tau.mean - o).abs() < 4.0 * tau.std_error, "{tau:?} vs {o}");
}

#[test]
fn exponential_difference_tau_constant_is_the_overshoot_limit() {
    // Under the tilt the ladder height is Exp(alpha + gamma), so the constant is (alpha + gamma) / alpha.
    let spec = IncrementSpec::exp_difference(1.0, 2.0).unwrap();
    let opts = AsymOptions { mc: McConfig::default().with_paths(200_000), ..Default::default() };
    let c = const_tau(&spec, 0.1, &opts, &Sequential).unwrap();
    let exact = 1.0 + c.gamma;
    assert!((c.gamma - 0.300_856_424_033_551_7).abs() < 1e-9);
    assert!((c.value - exact).abs() < 4.0 * c.combined_se, "{c:?}");
    let over = estimate_exp_overshoot_tilted(&spec, 0.1, 50.0 / c.gamma, &opts.mc, &Sequential).unwrap();
    assert!((over.mean - exact).abs() < 4.0 * over.std_error, "{over:?}");
}

#[test]
fn simple_walk_rho_table_converges_to_its_constant() {
    let spec = IncrementSpec::lattice([(1.0, 0.8), (-1.0, 0.2)]).unwrap();
    let c = const_rho(&spec, 0.1, &AsymOptions::default(), &Sequential).unwrap();
    let xs: Vec<f64> = (0..=40).map(f64::from).collect();
    let t = convergence_table(&spec, 0.1, Quantity::Rho, &xs, &AsymOptions::default(), &Sequential).unwrap();
    assert_eq!(t.constant.value, c.value);
    assert!(t.rows.last().unwrap().rel_gap < 1e-9, "{:?}", t.rows.last());
    assert_eq!(t.bounded_from, Some(0.0));
}
