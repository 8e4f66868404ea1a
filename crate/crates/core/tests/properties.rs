use conflate_core::conflation::{conflate_discrete, conflate_grid, ConflationForm, ConflationResult};
use conflate_core::diagnostics::{
    characteristic_fn, max_information_loss, mlr_delta, proportionality_check, symmetric_grid,
};
use conflate_core::dyadic::{
    default_window, discretize, mu_j_of, oracle_conflation_with, tv_cells, DyadicConvention, OracleOptions, MAX_CELLS,
    WINDOW_TAIL,
};
use conflate_core::fusion::blue_estimate;
use conflate_core::quadrature::integrate_with_breaks;
use conflate_core::sampler::sample_agree_discrete;
use conflate_core::{conflate, Distribution, DistributionSpec as S};
use proptest::prelude::*;

fn continuous() -> impl Strategy<Value = S> {
    prop_oneof![
        (-3.0..3.0f64, 0.2..4.0f64).prop_map(|(m, v)| S::normal(m, v)),
        (0.3..3.0f64).prop_map(S::exponential),
        (0.3..3.0f64).prop_map(|s| S::Laplace { scale: s }),
        (1.0..5.0f64, 0.5..3.0f64).prop_map(|(a, b)| S::Gamma { alpha: a, beta: b }),
        (-1.0..1.0f64, 0.3..2.0f64).prop_map(|(l, s)| S::Cauchy { loc: l, scale: s }),
    ]
}

fn discrete() -> impl Strategy<Value = S> {
    prop_oneof![
        (0.5..6.0f64).prop_map(|l| S::Poisson { lambda: l }),
        (1u64..12, 0.1..0.9f64).prop_map(|(n, p)| S::Binomial { n, p }),
        (0.1..0.9f64).prop_map(|p| S::Geometric { p }),
        prop::collection::vec(0.05..1.0f64, 8).prop_map(|w| {
            let t: f64 = w.iter().sum();
            S::pmf(w.iter().enumerate().map(|(k, m)| (k as f64, m / t)))
        }),
    ]
}

/// Inputs of one closure family.
fn closure_family() -> impl Strategy<Value = Vec<S>> {
    let n = 2usize..=3;
    prop_oneof![
        prop::collection::vec((0.05..0.95f64).prop_map(S::bernoulli), n.clone()),
        prop::collection::vec((0.1..0.9f64).prop_map(|p| S::Geometric { p }), n.clone()),
        prop::collection::vec((1u64..40).prop_map(|n| S::DiscreteUniform { n }), n.clone()),
        prop::collection::vec(
            (0.5..3.0f64, 2u64..100).prop_map(|(a, n)| S::Zipf { alpha: a, n }),
            n.clone()
        ),
        prop::collection::vec((3.5..6.0f64).prop_map(|a| S::Zeta { alpha: a }), n.clone()),
        prop::collection::vec(
            (1.0..5.0f64, 0.5..3.0f64).prop_map(|(a, b)| S::Gamma { alpha: a, beta: b }),
            n.clone()
        ),
        prop::collection::vec(
            (1.0..5.0f64, 1.0..5.0f64).prop_map(|(a, b)| S::Beta { alpha: a, beta: b }),
            n.clone()
        ),
        prop::collection::vec(
            (-1.0..0.0f64, 1.0..2.0f64).prop_map(|(a, b)| S::uniform(a, b)),
            n.clone()
        ),
        prop::collection::vec((0.3..3.0f64).prop_map(|s| S::Laplace { scale: s }), n.clone()),
        prop::collection::vec(
            (2.0..4.0f64, 0.5..2.0f64).prop_map(|(a, b)| S::Pareto { alpha: a, beta: b }),
            n.clone()
        ),
        prop::collection::vec((0.3..3.0f64).prop_map(S::exponential), n.clone()),
        prop::collection::vec((-2.0..2.0f64, 0.2..4.0f64).prop_map(|(m, v)| S::normal(m, v)), n),
    ]
}

fn pmf_on(weights: &[f64]) -> S {
    let t: f64 = weights.iter().sum();
    S::pmf(weights.iter().enumerate().map(|(k, w)| (k as f64, w / t)))
}

fn atoms(spec: &S) -> Vec<(f64, f64)> {
    Distribution::new(spec.clone()).unwrap().atoms(1e-15).unwrap().0
}

fn closed(r: &ConflationResult) -> S {
    match &r.form {
        ConflationForm::ClosedForm(s) => s.clone(),
        _ => panic!("expected a closed form, got {}", r.to_json()),
    }
}

fn params(s: &S) -> Vec<f64> {
    let v = serde_json::to_value(s).unwrap();
    v["params"]
        .as_object()
        .map(|o| o.values().filter_map(|x| x.as_f64()).collect())
        .unwrap_or_default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn conflation_ignores_input_order(a in continuous(), b in continuous(), c in discrete(), d in discrete(), mode in 0..3u8) {
        let specs = match mode {
            0 => vec![a, b],
            1 => vec![c, d],
            _ => vec![a, c, d],
        };
        if let Ok(r) = conflate(&specs) {
            let reference = r.to_json();
            let mut rotated = specs.clone();
            for _ in 0..specs.len() {
                rotated.rotate_left(1);
                prop_assert_eq!(conflate(&rotated).unwrap().to_json(), reference.clone());
            }
            let mut reversed = specs.clone();
            reversed.reverse();
            prop_assert_eq!(conflate(&reversed).unwrap().to_json(), reference);
        }
    }

    #[test]
    fn closed_forms_are_associative(specs in closure_family()) {
        let mut specs = specs;
        if specs.len() < 3 {
            specs.push(specs[1].clone());
        }
        let inner = closed(&conflate(&specs[1..]).unwrap());
        let nested = closed(&conflate(&[specs[0].clone(), inner]).unwrap());
        let flat = closed(&conflate(&specs).unwrap());
        prop_assert_eq!(nested.family(), flat.family());
        for (x, y) in params(&nested).iter().zip(params(&flat)) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(y.abs()), "{nested:?} vs {flat:?}");
        }
    }

    #[test]
    fn closed_forms_agree_with_engines(specs in closure_family()) {
        let r = conflate(&specs).unwrap();
        let spec = closed(&r);
        let q = Distribution::new(spec.clone()).unwrap();
        if spec.is_discrete() {
            let e = conflate_discrete(&specs).unwrap();
            let a = conflate_core::DiscretePmf::new(atoms(&e.to_spec()), 0.0).unwrap();
            let b = conflate_core::DiscretePmf::new(atoms(&spec), 0.0).unwrap();
            prop_assert!(a.tv(&b) <= 1e-10);
            prop_assert!((e.norm_constant / r.norm_constant - 1.0).abs() <= 1e-8);
        } else {
            let g = conflate_grid(&specs, None).unwrap();
            let ConflationForm::Grid(grid) = &g.form else { unreachable!() };
            let xs = grid.points();
            let d: Vec<f64> = xs.iter().zip(grid.values()).map(|(&x, &v)| (v - q.eval(x)).abs()).collect();
            let tv = 0.5 * xs.windows(2).zip(d.windows(2)).map(|(x, d)| 0.5 * (x[1] - x[0]) * (d[0] + d[1])).sum::<f64>();
            prop_assert!(tv <= 1e-3, "tv {tv}");
            prop_assert!((g.norm_constant / r.norm_constant - 1.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn superadditivity_of_products(m in prop::collection::vec(prop::collection::vec(0.0..1.0f64, 6), 2..5)) {
        let prod_of_sums: f64 = m.iter().map(|row| row.iter().sum::<f64>()).product();
        let sum_of_prods: f64 = (0..6).map(|k| m.iter().map(|row| row[k]).product::<f64>()).sum();
        prop_assert!(prod_of_sums >= sum_of_prods * (1.0 - 1e-15));
    }

    #[test]
    fn discrete_diagnostics_single_out_the_conflation(
        w1 in prop::collection::vec(0.05..1.0f64, 8),
        w2 in prop::collection::vec(0.05..1.0f64, 8),
        noise in prop::collection::vec(-0.3..0.3f64, 8),
    ) {
        let specs = [pmf_on(&w1), pmf_on(&w2)];
        let q = conflate(&specs).unwrap().to_spec();
        let info = max_information_loss(&q, &specs).unwrap();
        prop_assert!(info.attains_bound, "{info:?}");
        prop_assert!((info.max_loss - info.bound).abs() <= 1e-9);
        let qa = atoms(&q);
        let cand_w: Vec<f64> = qa.iter().zip(&noise).map(|(a, e)| a.1 * (1.0 + e)).collect();
        let cand = pmf_on(&cand_w);
        let other = max_information_loss(&cand, &specs).unwrap();
        prop_assert!(other.max_loss >= info.bound - 1e-9);
        prop_assert!(mlr_delta(&q, &specs).unwrap().delta <= mlr_delta(&cand, &specs).unwrap().delta + 1e-12);
        prop_assert!(proportionality_check(&q, &specs, 1e-9).unwrap().proportional);
        if noise.iter().any(|e| e.abs() > 1e-3) {
            prop_assert!(!proportionality_check(&cand, &specs, 1e-9).unwrap().proportional);
            prop_assert!(other.max_loss > info.bound);
        }
    }

    #[test]
    fn characteristic_functions_are_hermitian(spec in prop_oneof![continuous(), discrete()]) {
        let ts = symmetric_grid(5.0, 41);
        let c = characteristic_fn(&spec, &ts).unwrap();
        prop_assert!((c.value(20).re - 1.0).abs() <= 1e-9 && c.value(20).im.abs() <= 1e-9);
        for i in 0..20 {
            prop_assert!((c.value(i) - c.value(40 - i).conj()).norm() <= 1e-9);
        }
    }

    #[test]
    fn continuous_densities_integrate_to_one(spec in continuous()) {
        let d = Distribution::new(spec).unwrap();
        let (lo, hi) = d.support().hull();
        let m = d.median();
        let total = integrate_with_breaks(|x| d.eval(x), lo, hi, &[m], 1e-12, 1e-12).value;
        prop_assert!((total - 1.0).abs() <= 1e-8, "{total}");
        let (a, b) = (d.quantile(0.2), d.quantile(0.7));
        let part = integrate_with_breaks(|x| d.eval(x), a, b, &[], 1e-13, 1e-12).value;
        prop_assert!((part - d.interval_prob(a, b).unwrap()).abs() <= 1e-8);
    }

    #[test]
    fn discrete_masses_sum_to_one(spec in discrete()) {
        let (atoms, tail) = Distribution::new(spec).unwrap().atoms(1e-12).unwrap();
        prop_assert!(tail < 1e-12);
        prop_assert!((atoms.iter().map(|a| a.1).sum::<f64>() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn blue_is_scale_consistent(
        obs in prop::collection::vec(-10.0..10.0f64, 2..6),
        vars in prop::collection::vec(0.1..10.0f64, 6),
        c in 0.01..100.0f64,
    ) {
        let vars = &vars[..obs.len()];
        let a = blue_estimate(&obs, vars).unwrap();
        let scaled: Vec<f64> = vars.iter().map(|v| v * c).collect();
        let b = blue_estimate(&obs, &scaled).unwrap();
        prop_assert!((a.value - b.value).abs() <= 1e-12 * (1.0 + a.value.abs()));
        prop_assert!((b.variance / (c * a.variance) - 1.0).abs() <= 1e-12);
        prop_assert!((a.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn specs_round_trip_through_json(spec in prop_oneof![continuous(), discrete()]) {
        let text = serde_json::to_string(&spec).unwrap();
        let back: S = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, spec);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn conflation_matches_the_dyadic_oracle(a in continuous(), b in continuous()) {
        let specs = [a, b];
        let r = conflate(&specs).unwrap();
        let q = r.distribution().unwrap();
        let dists: Vec<Distribution> = specs.iter().map(|s| Distribution::new(s.clone()).unwrap()).collect();
        let (window, _) = default_window(&dists, WINDOW_TAIL);
        // Heavy tails widen the window; use the finest level whose cells fit.
        let j = (0..=12u32).rev().find(|&j| (window.1 - window.0) * 2f64.powi(j as i32) < MAX_CELLS as f64 - 2.0).unwrap();
        prop_assert!(j >= 8, "window {window:?}");
        let mu = mu_j_of(&dists, j, window, DyadicConvention::RightClosed).unwrap();
        let cells = discretize(&q, j, window, DyadicConvention::RightClosed).unwrap();
        let tv = tv_cells(&mu.masses, &cells);
        prop_assert!(tv <= 0.01, "{tv}");
    }

    #[test]
    fn dyadic_masses_decrease(a in continuous(), b in prop_oneof![continuous(), discrete()]) {
        let dists = vec![Distribution::new(a).unwrap(), Distribution::new(b).unwrap()];
        if dists.iter().any(|d| d.is_discrete()) && !dists.iter().all(|d| d.is_discrete()) {
            return Ok(());
        }
        let r = oracle_conflation_with(&dists, &OracleOptions { j_max: 12, tv_tol: 0.0, ..Default::default() }).unwrap();
        prop_assert!(r.monotonicity_ok);
        for w in r.mass_sequence.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn sampler_is_deterministic(p in 0.1..0.9f64, q in 0.1..0.9f64, seed in any::<u64>()) {
        let specs = [S::bernoulli(p), S::bernoulli(q)];
        let a = sample_agree_discrete(&specs, 500, seed, 1_000_000).unwrap();
        let b = sample_agree_discrete(&specs, 500, seed, 1_000_000).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
