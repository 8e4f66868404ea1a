use std::f64::consts::PI;

use super::*;
use crate::quadrature::integrate;

fn d(s: &DistributionSpec) -> Distribution {
    Distribution::new(s.clone()).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn std_normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / 2f64.sqrt())
}

#[test]
fn bernoulli_pair() {
    let specs = [
        DistributionSpec::bernoulli(1.0 / 3.0),
        DistributionSpec::bernoulli(0.25),
    ];
    let r = conflate(&specs).unwrap();
    assert_eq!(r.engine, Engine::ClosedForm);
    let q = r.distribution().unwrap();
    assert!(close(q.eval(0.0), 6.0 / 7.0, 1e-12));
    assert!(close(q.eval(1.0), 1.0 / 7.0, 1e-12));
    assert!(close(r.norm_constant, 7.0 / 12.0, 1e-12));

    let r = conflate_discrete(&specs).unwrap();
    let ConflationForm::Discrete(p) = &r.form else { panic!() };
    assert!(close(p.mass(0.0), 6.0 / 7.0, 1e-12) && close(p.mass(1.0), 1.0 / 7.0, 1e-12));
    assert!(close(r.norm_constant, 7.0 / 12.0, 1e-12));
    assert_eq!(p.tail_bound(), 0.0);
}

#[test]
fn binomial_poisson() {
    let specs = [
        DistributionSpec::Binomial { n: 2, p: 1.0 / 3.0 },
        DistributionSpec::Poisson { lambda: 5.0 },
    ];
    let r = conflate(&specs).unwrap();
    assert_eq!(r.engine, Engine::DiscreteProduct);
    let ConflationForm::Discrete(p) = &r.form else { panic!() };
    assert_eq!(p.len(), 3);
    for (x, m) in [(0.0, 8.0 / 73.0), (1.0, 40.0 / 73.0), (2.0, 25.0 / 73.0)] {
        assert!(close(p.mass(x), m, 1e-12), "{x}: {}", p.mass(x));
    }
    // sum_k C(2,k) (1/3)^k (2/3)^(2-k) e^-5 5^k / k!
    let z = (-5f64).exp() * (4.0 / 9.0 + 4.0 / 9.0 * 5.0 + 1.0 / 9.0 * 12.5);
    assert!(close(r.norm_constant / z, 1.0, 1e-12));
}

#[test]
fn disjoint_atoms_are_undefined() {
    let specs = [DistributionSpec::pmf([(0.0, 1.0)]), DistributionSpec::pmf([(1.0, 1.0)])];
    let e = conflate(&specs).unwrap_err();
    assert_eq!(e, Error::ConflationUndefined("no common atoms".into()));
    assert!(e.is_nonexistence());
    assert!(!compatible(&specs));
    assert!(matches!(conflate_discrete(&specs), Err(Error::ConflationUndefined(_))));
}

#[test]
fn compatibility_predicate() {
    let n = DistributionSpec::normal(3.0, 0.5);
    for other in [
        DistributionSpec::pmf([(17.0, 1.0)]),
        DistributionSpec::uniform(-9.0, -8.0),
        DistributionSpec::Poisson { lambda: 2.0 },
        DistributionSpec::Cauchy { loc: 0.0, scale: 1.0 },
    ] {
        assert!(compatible(&[n.clone(), other]));
    }
    assert!(!compatible(&[
        DistributionSpec::uniform(0.0, 1.0),
        DistributionSpec::uniform(2.0, 3.0)
    ]));
    assert!(compatible(&[
        DistributionSpec::Geometric { p: 0.5 },
        DistributionSpec::pmf([(2.0, 1.0)])
    ]));
    assert!(!compatible(&[
        DistributionSpec::Geometric { p: 0.5 },
        DistributionSpec::pmf([(-2.0, 1.0)])
    ]));
    assert!(!compatible(&[
        DistributionSpec::bernoulli(0.5),
        DistributionSpec::pmf([(0.5, 1.0)])
    ]));
}

#[test]
fn normal_times_exponential_is_shifted_truncated_normal() {
    let specs = [DistributionSpec::normal(0.0, 1.0), DistributionSpec::exponential(1.0)];
    let r = conflate(&specs).unwrap();
    assert_eq!(r.engine, Engine::GridQuadrature);
    assert!(r.warnings.is_empty(), "{:?}", r.warnings);
    let q = r.distribution().unwrap();
    // phi(x + 1) / P(Z > 1) on x > 0
    let tail = std_normal_sf(1.0);
    for x in [0.0f64, 0.1, 0.5, 1.0, 2.0, 4.0] {
        let want = (-(x + 1.0) * (x + 1.0) / 2.0).exp() / (2.0 * PI).sqrt() / tail;
        assert!(close(q.eval(x), want, 1e-6), "{x}: {} vs {want}", q.eval(x));
    }
    assert!(close(r.norm_constant, 0.5f64.exp() * tail, 1e-9));
}

#[test]
fn cauchy_pair_has_finite_variance() {
    let c = DistributionSpec::Cauchy { loc: 0.0, scale: 1.0 };
    let r = conflate(&[c.clone(), c]).unwrap();
    assert_eq!(r.engine, Engine::GridQuadrature);
    let z = integrate(
        |x| (1.0 + x * x).powi(-2) / (PI * PI),
        f64::NEG_INFINITY,
        f64::INFINITY,
        1e-15,
        1e-13,
    )
    .value;
    assert!(close(r.norm_constant, z, 1e-6));
    let c2 = 1.0
        / integrate(
            |x| (1.0 + x * x).powi(-2),
            f64::NEG_INFINITY,
            f64::INFINITY,
            1e-15,
            1e-13,
        )
        .value;
    assert!(close(c2, 2.0 / PI, 1e-10));
    let q = r.distribution().unwrap();
    for x in [0.0f64, 0.3, 1.0, 5.0, 30.0] {
        let want = c2 * (1.0 + x * x).powi(-2);
        assert!(close(q.eval(x), want, 1e-7 * want.max(1e-3)), "{x}");
    }
    let (m, v) = r.moments().unwrap();
    let var = integrate(
        |x| c2 * x * x * (1.0 + x * x).powi(-2),
        f64::NEG_INFINITY,
        f64::INFINITY,
        1e-15,
        1e-12,
    )
    .value;
    assert!(close(m, 0.0, 1e-6), "{m}");
    assert!(close(v, var, 1e-3) && close(var, 1.0, 1e-9), "{v} {var}");
}

#[test]
fn non_integrable_product_reports_concentration() {
    let b = DistributionSpec::Beta { alpha: 0.5, beta: 1.0 };
    let r = conflate(&[b.clone(), b]).unwrap();
    assert!(r.has_warning(NON_INTEGRABLE_PRODUCT), "{:?}", r.warnings);
    assert!(r.has_warning(CLOSED_FORM_FALLBACK));
    let x = r.concentration.unwrap();
    assert!((0.0..=0.01).contains(&x), "{x}");
    assert_eq!(r.norm_constant, f64::INFINITY);
    let back = ConflationResult::from_json(&r.to_json()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn gamma_rule_falls_back_when_alpha_is_not_positive() {
    let specs = [
        DistributionSpec::Gamma { alpha: 0.3, beta: 1.0 },
        DistributionSpec::Gamma { alpha: 0.4, beta: 2.0 },
    ];
    let r = conflate(&specs).unwrap();
    assert!(r.has_warning(CLOSED_FORM_FALLBACK));
    assert!(r.has_warning(NON_INTEGRABLE_PRODUCT));
    // alpha = 0.2 is still integrable and stays in closed form
    let specs = [
        DistributionSpec::Gamma { alpha: 0.5, beta: 1.0 },
        DistributionSpec::Gamma { alpha: 0.7, beta: 1.0 },
    ];
    let r = conflate(&specs).unwrap();
    let DistributionSpec::Gamma { alpha, beta } = r.to_spec() else {
        panic!()
    };
    assert!(close(alpha, 0.2, 1e-15) && beta == 0.5);
    let g = conflate_grid(&specs, None).unwrap();
    assert!(!g.has_warning(NON_INTEGRABLE_PRODUCT), "{:?}", g.warnings);
    let z = integrate(
        |x| d(&specs[0]).eval(x) * d(&specs[1]).eval(x),
        0.0,
        f64::INFINITY,
        0.0,
        1e-12,
    )
    .value;
    assert!(close(g.norm_constant / z, 1.0, 1e-6), "{} {z}", g.norm_constant);
    assert!(close(r.norm_constant / z, 1.0, 1e-10), "{} {z}", r.norm_constant);
}

#[test]
fn documented_closed_forms() {
    let r = conflate(&[DistributionSpec::normal(1.0, 1.0), DistributionSpec::normal(2.0, 4.0)]).unwrap();
    assert_eq!(r.engine, Engine::ClosedForm);
    assert_eq!(r.to_spec(), DistributionSpec::normal(1.2, 0.8));

    let r = conflate(&[
        DistributionSpec::uniform(0.0, 1.0),
        DistributionSpec::uniform(-0.1, 1.0),
    ])
    .unwrap();
    assert_eq!(r.to_spec(), DistributionSpec::uniform(0.0, 1.0));
    assert!(close(r.moments().unwrap().0, 0.5, 1e-12));
    assert!(close(r.norm_constant, 1.0 / 1.1, 1e-14));

    let g = DistributionSpec::Geometric { p: 0.5 };
    let r = conflate(&[g.clone(), g.clone()]).unwrap();
    assert_eq!(r.to_spec(), DistributionSpec::Geometric { p: 0.75 });
    let gd = d(&g);
    let q = r.distribution().unwrap();
    let z: f64 = (0..200).map(|k| gd.eval(k as f64).powi(2)).sum();
    for k in 0..20 {
        let k = k as f64;
        assert!(close(q.eval(k), gd.eval(k).powi(2) / z, 1e-15));
    }
    assert!(close(r.norm_constant, z, 1e-15));

    let r = conflate(&[
        DistributionSpec::Poisson { lambda: 2.0 },
        DistributionSpec::Poisson { lambda: 3.0 },
    ])
    .unwrap();
    assert_eq!(r.to_spec(), DistributionSpec::Cmp { lambda: 6.0, nu: 2 });
    let q = r.distribution().unwrap();
    let w: Vec<f64> = (0..60)
        .map(|k| (1..=k).fold(1.0, |acc, i| acc * 6.0 / (i as f64 * i as f64)))
        .collect();
    let zw: f64 = w.iter().sum();
    for (k, wk) in w.iter().enumerate().take(20) {
        assert!(close(q.eval(k as f64), wk / zw, 1e-14));
    }
}

#[test]
fn uniform_rule_rejects_disjoint_supports() {
    let e = conflate(&[DistributionSpec::uniform(0.0, 1.0), DistributionSpec::uniform(2.0, 3.0)]).unwrap_err();
    assert!(matches!(e, Error::Incompatible(_)));
    let e = conflate(&[DistributionSpec::uniform(0.0, 1.0), DistributionSpec::uniform(1.0, 3.0)]).unwrap_err();
    assert!(matches!(e, Error::Incompatible(_)));
    let e = conflate(&[
        DistributionSpec::uniform(0.0, 1.0),
        DistributionSpec::normal(0.0, 1.0),
        DistributionSpec::exponential(1.0),
        DistributionSpec::uniform(-3.0, -2.0),
    ])
    .unwrap_err();
    assert!(e.is_nonexistence());
}

#[test]
fn truncated_rules() {
    let inf = f64::INFINITY;
    let t = DistributionSpec::truncated(DistributionSpec::normal(0.0, 1.0), 0.0, inf);
    let r = conflate_truncated(&[t.clone(), t.clone()]).unwrap();
    assert_eq!(r.engine, Engine::ClosedForm);
    assert_eq!(
        r.to_spec(),
        DistributionSpec::truncated(DistributionSpec::normal(0.0, 0.5), 0.0, inf)
    );
    let g = conflate_grid(&[t.clone(), t], None).unwrap();
    let (q, gq) = (r.distribution().unwrap(), g.distribution().unwrap());
    for x in [0.0, 0.2, 0.7, 1.5, 3.0] {
        assert!(close(q.eval(x), gq.eval(x), 1e-6), "{x}");
    }
    assert!(close(r.norm_constant / g.norm_constant, 1.0, 1e-8));

    let a = DistributionSpec::truncated(DistributionSpec::exponential(1.0), 0.0, 2.0);
    let b = DistributionSpec::truncated(DistributionSpec::exponential(1.0), 1.0, 3.0);
    let r = conflate(&[a.clone(), b.clone()]).unwrap();
    assert_eq!(
        r.to_spec(),
        DistributionSpec::truncated(DistributionSpec::exponential(0.5), 1.0, 2.0)
    );
    let g = conflate_grid(&[a.clone(), b.clone()], None).unwrap();
    let (q, gq) = (r.distribution().unwrap(), g.distribution().unwrap());
    for x in [1.0, 1.1, 1.5, 1.9, 2.0] {
        assert!(close(q.eval(x), gq.eval(x), 1e-6), "{x}");
    }
    // e^-2x / (e^-2 - e^-4) * 2 on [1, 2]
    let want = 2.0 * (-3.0f64).exp() / ((-2.0f64).exp() - (-4.0f64).exp());
    assert!(close(q.eval(1.5), want, 1e-12));

    let c = DistributionSpec::truncated(DistributionSpec::exponential(1.0), 0.0, 1.0);
    let e = DistributionSpec::truncated(DistributionSpec::exponential(1.0), 2.0, 3.0);
    assert!(matches!(conflate_truncated(&[c, e]), Err(Error::Incompatible(_))));
    assert!(conflate_truncated(&[a, DistributionSpec::exponential(1.0)]).is_err());
}

#[test]
fn mixed_inputs_weight_atoms_by_density() {
    let r = conflate(&[
        DistributionSpec::normal(0.0, 1.0),
        DistributionSpec::bernoulli(1.0 / 3.0),
    ])
    .unwrap();
    assert_eq!(r.engine, Engine::DiscreteProduct);
    assert!(r.has_warning(MIXED_KINDS));
    let ConflationForm::Discrete(p) = &r.form else { panic!() };
    let e = (-0.5f64).exp();
    assert!(close(p.mass(0.0), 2.0 / (2.0 + e), 1e-14));
    assert!(close(p.mass(1.0), e / (2.0 + e), 1e-14));
}

#[test]
fn single_input_is_identity() {
    for s in [
        DistributionSpec::normal(0.0, 1.0),
        DistributionSpec::pmf([(1.0, 0.25), (2.0, 0.75)]),
        DistributionSpec::Poisson { lambda: 2.5 },
    ] {
        let r = conflate(std::slice::from_ref(&s)).unwrap();
        assert_eq!(r.to_spec(), s);
        assert_eq!(r.norm_constant, 1.0);
    }
    assert_eq!(conflate(&[]).unwrap_err(), Error::EmptyInput);
}

#[test]
fn grid_engine_matches_normal_closed_form() {
    let specs = [DistributionSpec::normal(1.0, 1.0), DistributionSpec::normal(2.0, 4.0)];
    let r = conflate_grid(&specs, None).unwrap();
    let q = r.distribution().unwrap();
    let exact = d(&DistributionSpec::normal(1.2, 0.8));
    let mut worst = 0f64;
    for i in 0..=2000 {
        let x = -4.0 + 10.0 * i as f64 / 2000.0;
        worst = worst.max((q.eval(x) - exact.eval(x)).abs());
    }
    assert!(worst < 1e-6, "{worst}");
    let closed = conflate(&specs).unwrap();
    assert!(close(r.norm_constant / closed.norm_constant, 1.0, 1e-8));
}

#[test]
fn user_grid_is_used_as_given() {
    let pts: Vec<f64> = (0..=400).map(|i| -6.0 + 12.0 * i as f64 / 400.0).collect();
    let specs = [DistributionSpec::normal(0.0, 1.0), DistributionSpec::normal(0.0, 1.0)];
    let r = conflate_grid(&specs, Some(&pts)).unwrap();
    let ConflationForm::Grid(g) = &r.form else { panic!() };
    assert_eq!(g.points(), &pts[..]);
    assert!(close(g.norm(), 1.0, 1e-12));
    assert!(close(r.norm_constant, 1.0 / (2.0 * PI.sqrt()), 1e-4));
    assert!(conflate_grid(&specs, Some(&[1.0, 0.0])).is_err());
}

#[test]
fn permutation_gives_identical_json() {
    let sets = [
        vec![
            DistributionSpec::normal(1.0, 1.0),
            DistributionSpec::normal(2.0, 4.0),
            DistributionSpec::normal(-0.5, 0.3),
        ],
        vec![
            DistributionSpec::Binomial { n: 2, p: 1.0 / 3.0 },
            DistributionSpec::Poisson { lambda: 5.0 },
            DistributionSpec::pmf([(0.0, 0.2), (1.0, 0.3), (2.0, 0.5)]),
        ],
        vec![
            DistributionSpec::Cauchy { loc: 0.0, scale: 1.0 },
            DistributionSpec::normal(0.3, 2.0),
            DistributionSpec::exponential(1.5),
        ],
    ];
    for set in sets {
        let base = conflate(&set).unwrap().to_json();
        let mut rev = set.clone();
        rev.reverse();
        assert_eq!(conflate(&rev).unwrap().to_json(), base);
        rev.rotate_left(1);
        assert_eq!(conflate(&rev).unwrap().to_json(), base);
    }
}

#[test]
fn json_round_trip_and_layout() {
    let r = conflate(&[
        DistributionSpec::pmf([(0.0, 0.5), (1.0, 0.5)]),
        DistributionSpec::bernoulli(0.25),
    ])
    .unwrap();
    let j = r.to_json();
    assert!(
        j.starts_with("{\"engine\":\"discrete_product\",\"form\":{\"atoms\":[[0.0,0.75],[1.0,0.25]],\"kind\":\"pmf\"}"),
        "{j}"
    );
    assert!(j.ends_with('\n'));
    assert_eq!(ConflationResult::from_json(&j).unwrap(), r);
    let csv = r.to_csv(10).unwrap();
    assert_eq!(csv, "x,mass\n0,0.75\n1,0.25\n");
}

#[test]
fn chi_square_scaling_is_n_times_x() {
    let ks = [3u32, 5, 6];
    let n = ks.len() as f64;
    let specs: Vec<DistributionSpec> = ks.iter().map(|&k| DistributionSpec::ChiSquare { k }).collect();
    let q = conflate_grid(&specs, None).unwrap().distribution().unwrap();
    let dof = ks.iter().sum::<u32>() - 2 * ks.len() as u32 + 2;
    let chi = d(&DistributionSpec::ChiSquare { k: dof });
    let (mut scaled_up, mut scaled_down) = (0f64, 0f64);
    for i in 1..200 {
        let y = i as f64 * 0.1;
        // density of nX at y, and of X/n at y
        scaled_up = scaled_up.max((q.eval(y / n) / n - chi.eval(y)).abs());
        scaled_down = scaled_down.max((q.eval(y * n) * n - chi.eval(y)).abs());
    }
    assert!(scaled_up < 1e-6, "{scaled_up}");
    assert!(scaled_down > 1e-2, "{scaled_down}");
}
