use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use symhull::envelope::*;
use symhull::majorization::{birkhoff, majorizes, transport_matrix};
use symhull::model::{Cmp, ConicModel, LinExpr, Sense};
use symhull::solvers::solve_lp;

/// Recursive McCormick as an explicit LP over all partial products.
fn mccormick_lp(x: &[f64], cube: &Hypercube) -> f64 {
    let (a, b) = (cube.lower, cube.upper);
    let mut m = ConicModel::new("mc");
    let mut prev: LinExpr = LinExpr::constant(x[0]);
    let (mut lo, mut hi) = (a, b);
    for (k, &xk) in x.iter().enumerate().skip(1) {
        let w = m.free_var(format!("w{k}"));
        let rows = [
            (lo, a, Cmp::Ge),
            (hi, b, Cmp::Ge),
            (hi, a, Cmp::Le),
            (lo, b, Cmp::Le),
        ];
        for (r, (pb, xb, cmp)) in rows.into_iter().enumerate() {
            // w ⋛ pb·x_k + xb·prev − pb·xb
            let mut e = LinExpr::from(w);
            e.add_scaled(&prev, -xb);
            m.add_row(format!("m{k}_{r}"), e, cmp, pb * xk - pb * xb);
        }
        let c = [lo * a, lo * b, hi * a, hi * b];
        lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prev = w.into();
    }
    m.set_objective(Sense::Minimize, prev);
    solve_lp(&m.seal().unwrap()).unwrap().report.objective
}

#[test]
fn envelope_exact_at_every_vertex() {
    for n in 1..=6 {
        for (a, b) in [(2.0, 4.0), (-2.0, 3.0), (-1.0, 1.0)] {
            let c = Hypercube::new(a, b, n).unwrap();
            for v in c.vertices() {
                let e = multilinear_envelope(&v, &c).unwrap();
                assert!((e - product(&v)).abs() < 1e-9 * product(&v).abs().max(1.0), "{v:?}");
            }
        }
    }
}

#[test]
fn interval_mccormick_matches_lp_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 2..=6 {
        for (a, b) in [(2.0, 4.0), (-2.0, 3.0), (-1.0, 1.0), (0.5, 1.5)] {
            let c = Hypercube::new(a, b, n).unwrap();
            for _ in 0..10 {
                let x = c.sample(&mut rng);
                let dp = mccormick_relax(&x, &c).unwrap();
                let lp = mccormick_lp(&x, &c);
                assert!((dp - lp).abs() < 1e-8 * lp.abs().max(1.0), "{x:?}: {dp} vs {lp}");
            }
        }
    }
}

#[test]
fn gap_table_shapes() {
    let pos = envelope_table(&Hypercube::new(2.0, 4.0, 10).unwrap(), 9, 2024).unwrap();
    assert!(pos.iter().all(|r| r.gap >= -1e-9));
    let avg = pos.iter().map(|r| r.percent_gap).sum::<f64>() / 9.0;
    assert!(avg > 30.0 && avg < 85.0, "{avg}");
    let mixed = envelope_table(&Hypercube::new(-2.0, 3.0, 10).unwrap(), 9, 2024).unwrap();
    assert!(mixed.iter().all(|r| r.gap >= -1e-9));
    assert!(mixed.iter().map(|r| r.gap).sum::<f64>() > 0.0);
}

#[test]
fn facet_cuts_on_random_points() {
    let c = Hypercube::new(2.0, 4.0, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let x = c.sample(&mut rng);
        let cut = facet_from_point(&x, &c, product).unwrap();
        let env = multilinear_envelope(&x, &c).unwrap();
        assert!((cut.eval(&x) - env).abs() < 1e-7, "{} vs {env}", cut.eval(&x));
        for v in c.vertices() {
            assert!(cut.eval(&v) <= product(&v) + 1e-7);
        }
    }
}

#[test]
fn tied_point_is_rejected() {
    let c = Hypercube::new(2.0, 4.0, 3).unwrap();
    assert!(facet_from_point(&[3.0, 3.0, 2.5], &c, product).is_err());
}

#[test]
fn birkhoff_of_envelope_transport() {
    let c = Hypercube::new(2.0, 4.0, 5).unwrap();
    let x = [2.3, 3.9, 2.8, 3.1, 3.55];
    let u = vertex_envelope(product, &x, &c).unwrap().u;
    let s = transport_matrix(&u, &x).unwrap();
    let d = birkhoff(&s).unwrap();
    assert!(d.reconstruct(5).max_abs_diff(s.matrix()) <= 1e-12);
    assert!(d.weights.len() <= 25);
}

fn point_in(lo: f64, hi: f64, n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn envelope_underestimates_product(x in point_in(-2.0, 3.0, 5)) {
        let c = Hypercube::new(-2.0, 3.0, 5).unwrap();
        prop_assert!(multilinear_envelope(&x, &c).unwrap() <= product(&x) + 1e-9);
    }

    #[test]
    fn envelope_midpoint_convexity(x in point_in(-2.0, 3.0, 4), y in point_in(-2.0, 3.0, 4)) {
        let c = Hypercube::new(-2.0, 3.0, 4).unwrap();
        let mid: Vec<f64> = x.iter().zip(&y).map(|(p, q)| 0.5 * (p + q)).collect();
        let e = |v: &[f64]| multilinear_envelope(v, &c).unwrap();
        prop_assert!(e(&mid) <= 0.5 * (e(&x) + e(&y)) + 1e-8);
    }

    #[test]
    fn envelope_dominates_mccormick(x in point_in(2.0, 4.0, 6)) {
        let c = Hypercube::new(2.0, 4.0, 6).unwrap();
        prop_assert!(multilinear_envelope(&x, &c).unwrap() >= mccormick_relax(&x, &c).unwrap() - 1e-9);
    }

    #[test]
    fn envelope_equals_mccormick_on_signed_unit_box(x in point_in(-1.0, 1.0, 4)) {
        let c = Hypercube::new(-1.0, 1.0, 4).unwrap();
        let e = multilinear_envelope(&x, &c).unwrap();
        prop_assert!((e - mccormick_relax(&x, &c).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn schur_point_majorizes_input(x in point_in(1.0, 6.0, 7)) {
        let c = Hypercube::new(1.0, 6.0, 7).unwrap();
        prop_assert!(majorizes(&schur_point(&x, &c).unwrap(), &x).unwrap());
    }

    #[test]
    fn envelope_is_permutation_invariant(x in point_in(2.0, 4.0, 5)) {
        let c = Hypercube::new(2.0, 4.0, 5).unwrap();
        let mut r = x.clone();
        r.reverse();
        let (e1, e2) = (multilinear_envelope(&x, &c).unwrap(), multilinear_envelope(&r, &c).unwrap());
        prop_assert!((e1 - e2).abs() <= 1e-9 * e1.abs());
    }

    #[test]
    fn positive_box_envelope_is_schur_value(x in point_in(2.0, 5.0, 4)) {
        let c = Hypercube::new(2.0, 5.0, 4).unwrap();
        let e = multilinear_envelope(&x, &c).unwrap();
        let s = schur_envelope_value(product, &x, &c).unwrap();
        prop_assert!((e - s).abs() <= 1e-9 * s);
    }
}
