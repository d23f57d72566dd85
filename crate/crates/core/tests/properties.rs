use std::collections::BTreeMap;

use fpt_core::exact::{exp_moment_rho_exact, exp_moment_tau_exact, k_of, pmf_power, v_of, SeriesOptions};
use fpt_core::walk::{simulate_functionals, Sequential};
use fpt_core::*;
use proptest::prelude::*;

/// Integer-valued laws with both signs present and positive drift.
fn drifting_lattice() -> impl Strategy<Value = IncrementSpec> {
    prop::collection::vec((-3i32..=3, 0.05f64..1.0), 2..5).prop_filter_map("needs drift up and down steps", |atoms| {
        let mut merged: BTreeMap<i32, f64> = BTreeMap::new();
        for (v, w) in atoms {
            *merged.entry(v).or_default() += w;
        }
        let total: f64 = merged.values().sum();
        let mean: f64 = merged.iter().map(|(v, w)| *v as f64 * w / total).sum();
        let (lo, hi) = (*merged.keys().next()?, *merged.keys().last()?);
        (lo < 0 && hi > 0 && mean > 0.05)
            .then(|| IncrementSpec::lattice(merged.into_iter().map(|(v, w)| (v as f64, w / total))).ok())
            .flatten()
    })
}

fn any_spec() -> impl Strategy<Value = IncrementSpec> {
    prop_oneof![
        drifting_lattice(),
        (0.2f64..3.0, 0.1f64..2.0).prop_map(|(alpha, extra)| IncrementSpec::exp_difference(alpha, alpha + extra).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn laplace_transform_is_convex(spec in any_spec(), t in 0.0f64..1.0, u in 0.0f64..1.0) {
        let sup = spec.domain_sup().min(5.0) * 0.999;
        let (t, u) = (t * sup, u * sup);
        let f = |s: f64| spec.laplace(s).unwrap().value();
        prop_assert!(f(0.5 * (t + u)) <= 0.5 * (f(t) + f(u)) + 1e-12);
    }

    #[test]
    fn derivative_matches_finite_differences(spec in any_spec(), t in 0.05f64..0.9) {
        let t = t * spec.domain_sup().min(5.0);
        let h = 1e-5;
        let f = |s: f64| spec.laplace(s).unwrap().value();
        let fd = (f(t + h) - f(t - h)) / (2.0 * h);
        let d = spec.laplace_left_derivative(t).unwrap();
        prop_assert!((fd - d).abs() <= 1e-6 * (1.0 + d.abs()), "{fd} vs {d}");
    }

    #[test]
    fn tilted_transform_is_a_shifted_ratio(spec in any_spec(), frac in 0.05f64..0.95, t in 0.0f64..0.5) {
        let cd = critical_data(&spec).unwrap();
        let a = frac * cd.r;
        let tp = gamma_of(&spec, a).unwrap();
        let tilted = tilt_spec(&spec, &tp).unwrap();
        let t = t * (spec.domain_sup() - tp.gamma()).min(2.0);
        let lhs = tilted.laplace(t).unwrap().value();
        let rhs = a.exp() * spec.laplace(tp.gamma() + t).unwrap().value();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs, "{lhs} vs {rhs}");
        prop_assert!((tilted.laplace(0.0).unwrap().value() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_increases_with_a(spec in any_spec(), f1 in 0.0f64..1.0, f2 in 0.0f64..1.0) {
        let cd = critical_data(&spec).unwrap();
        let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
        let g_lo = gamma_of(&spec, lo * cd.r).unwrap().gamma();
        let g_hi = gamma_of(&spec, hi * cd.r).unwrap().gamma();
        prop_assert!(g_lo <= g_hi + 1e-9);
        prop_assert!(g_hi <= cd.gamma0.unwrap() + 1e-9);
    }

    #[test]
    fn finiteness_is_monotone_and_ordered(spec in any_spec(), f1 in 0.0f64..1.5, f2 in 0.0f64..1.5) {
        let cd = critical_data(&spec).unwrap();
        let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
        let c_lo = classify(&spec, lo * cd.r).unwrap();
        let c_hi = classify(&spec, hi * cd.r).unwrap();
        for q in Quantity::ALL {
            prop_assert!(c_lo.is_finite(q) || !c_hi.is_finite(q));
        }
        for c in [&c_lo, &c_hi] {
            prop_assert!(!c.is_finite(Quantity::Rho) || c.is_finite(Quantity::N));
            prop_assert!(!c.is_finite(Quantity::N) || c.is_finite(Quantity::Tau));
        }
    }

    #[test]
    fn convolution_powers_conserve_mass(spec in drifting_lattice(), n in 1u64..60) {
        let span = spec.lattice_structure().span().unwrap();
        let t = pmf_power(&spec, n, -200.0 * span, 200.0 * span, 0.0).unwrap();
        let inside: f64 = t.probs.iter().sum();
        prop_assert!((inside + t.below + t.above - 1.0).abs() < 1e-12);
    }

    #[test]
    fn passage_moment_matches_the_ladder_generating_function(spec in drifting_lattice(), frac in 0.1f64..0.8) {
        // E exp(a tau) = 1 + (exp(a) - 1) exp(K(a)) with K(a) = sum_n exp(a n) P{S_n <= 0} / n.
        let cd = critical_data(&spec).unwrap();
        let a = frac * cd.r;
        let opts = SeriesOptions::default();
        let tau = exp_moment_tau_exact(&spec, a, 0.0, &opts).unwrap();
        let k = k_of(&spec, a, &opts).unwrap();
        let rhs = 1.0 + a.exp_m1() * k.value.exp();
        // Near-zero drift can exhaust the term budget; the reported tail bounds then carry the error.
        let tol = 1e-9 * rhs + tau.tail_bound + a.exp_m1() * k.value.exp() * k.tail_bound.exp_m1();
        prop_assert!((tau.value - rhs).abs() <= tol, "{} vs {rhs} (tol {tol})", tau.value);
    }

    #[test]
    fn last_exit_series_is_finite_below_the_critical_exponent(spec in drifting_lattice(), frac in 0.1f64..0.8) {
        let cd = critical_data(&spec).unwrap();
        let a = frac * cd.r;
        prop_assert!(classify(&spec, a).unwrap().is_finite(Quantity::Rho));
        let v = v_of(&spec, a, 0.0, &SeriesOptions::default()).unwrap();
        prop_assert!(!v.diverged && v.value.is_finite());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn path_functionals_are_ordered(spec in any_spec(), x in 0.0f64..4.0, seed in any::<u64>()) {
        let run = simulate_functionals(&spec, x, &McConfig::default().with_paths(2_000).with_seed(seed), &Sequential).unwrap();
        for p in run.paths.iter().filter(|p| !p.truncated) {
            prop_assert!(p.tau - 1 <= p.n_visits && p.n_visits <= p.rho, "{p:?}");
        }
    }
}

#[test]
fn nonnegative_walks_identify_the_three_functionals() {
    let spec = IncrementSpec::lattice([(0.0, 0.3), (1.0, 0.5), (2.5, 0.2)]).unwrap();
    let run = simulate_functionals(&spec, 3.0, &McConfig::default().with_paths(5_000), &Sequential).unwrap();
    for p in &run.paths {
        assert_eq!(p.tau - 1, p.n_visits);
        assert_eq!(p.n_visits, p.rho);
    }
}

#[test]
fn last_exit_series_diverges_at_the_critical_exponent() {
    for spec in [
        IncrementSpec::lattice([(1.0, 0.7), (-1.0, 0.3)]).unwrap(),
        IncrementSpec::lattice([(2.0, 0.6), (-1.0, 0.4)]).unwrap(),
    ] {
        let cd = critical_data(&spec).unwrap();
        assert!(!classify(&spec, cd.r).unwrap().is_finite(Quantity::Rho));
        let v = v_of(&spec, cd.r, 0.0, &SeriesOptions::default()).unwrap();
        assert!(v.diverged, "{v:?}");
    }
}

#[test]
fn exact_rho_moment_is_the_v_route() {
    let spec = IncrementSpec::lattice([(1.0, 0.8), (-1.0, 0.2)]).unwrap();
    let rho = exp_moment_rho_exact(&spec, 0.1, 0.0, &SeriesOptions::default()).unwrap();
    assert!((rho.value - 1.284_168_934_297_415_6).abs() < 1e-11, "{rho:?}");
}
