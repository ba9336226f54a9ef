use proptest::prelude::*;
use symhull::ksupport::*;
use symhull::linalg::*;
use symhull::majorization::*;
use symhull::matrixhull::*;
use symhull::model::lp_format::{export_lp, parse_lp};
use symhull::model::sdpa::SdpaProblem;
use symhull::model::{
    bitonic_network, emit_majorization, emit_sorting_majorization, Cmp, ConicModel, LinExpr, Sense,
};
use symhull::solvers::solve_lp;
use symhull::transport::*;

fn vec_in(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    n.prop_flat_map(|n| prop::collection::vec(-5.0..5.0f64, n))
}

fn vec_and_k() -> impl Strategy<Value = (Vec<f64>, usize)> {
    vec_in(3..=9).prop_flat_map(|x| {
        let n = x.len();
        (Just(x), 2..n)
    })
}

fn sym_matrix(n: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-3.0..3.0f64, n * n).prop_map(move |v| {
        let m = Matrix::from_row_major(n, n, v).unwrap();
        symmetrize(&m)
    })
}

/// Every K-sparse vector with unit entries of one sign pattern on a support.
fn sparse_units(n: usize, k: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        for signs in 0u32..(1 << k) {
            let mut v = vec![0.0; n];
            let mut b = 0;
            for (i, vi) in v.iter_mut().enumerate() {
                if mask & (1 << i) != 0 {
                    *vi = if signs & (1 << b) != 0 { -1.0 } else { 1.0 } / (k as f64).sqrt();
                    b += 1;
                }
            }
            out.push(v);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ksupport_paths_agree((x, k) in vec_and_k()) {
        let a = c_norm(&x, k, BaseNorm::L2).unwrap();
        let b = k_support_norm(&x, k).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
    }

    #[test]
    fn ksupport_sandwich((x, k) in vec_and_k()) {
        let c = c_norm(&x, k, BaseNorm::L2).unwrap();
        prop_assert!(c >= norm2(&x) - 1e-12);
        prop_assert!(c >= norm1(&x) / (k as f64).sqrt() - 1e-12);
        prop_assert!(c <= norm1(&x) + 1e-12);
    }

    #[test]
    fn ksupport_is_a_norm((x, k) in vec_and_k(), s in -3.0..3.0f64, y_seed in prop::collection::vec(-5.0..5.0f64, 9)) {
        let y = &y_seed[..x.len()];
        for norm in [BaseNorm::L2, BaseNorm::Linf, BaseNorm::Lp(3.0)] {
            let cx = c_norm(&x, k, norm).unwrap();
            let scaled: Vec<f64> = x.iter().map(|v| s * v).collect();
            prop_assert!((c_norm(&scaled, k, norm).unwrap() - s.abs() * cx).abs() <= 1e-9 * cx.max(1.0));
            let sum: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
            prop_assert!(c_norm(&sum, k, norm).unwrap() <= cx + c_norm(y, k, norm).unwrap() + 1e-9);
        }
    }

    #[test]
    fn ksupport_symmetry((x, k) in vec_and_k()) {
        let mut flipped: Vec<f64> = x.iter().rev().map(|v| -v).collect();
        flipped.rotate_left(1);
        let a = c_norm(&x, k, BaseNorm::L2).unwrap();
        prop_assert!((a - c_norm(&flipped, k, BaseNorm::L2).unwrap()).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn dual_pairing_holds((x, k) in vec_and_k(), b in prop::collection::vec(-2.0..2.0f64, 9)) {
        let beta = &b[..x.len()];
        for norm in [BaseNorm::L2, BaseNorm::Linf, BaseNorm::Lp(1.5)] {
            let lhs = dot(beta, &x);
            let rhs = c_norm(&x, k, norm).unwrap() * c_dual_norm(beta, k, norm).unwrap();
            prop_assert!(lhs <= rhs + 1e-9);
        }
    }

    #[test]
    fn cut_is_tight_and_valid(x in prop::collection::vec(-5.0..5.0f64, 6), k in 2usize..5) {
        let c = c_norm(&x, k, BaseNorm::L2).unwrap();
        prop_assume!(c > 1.0 + 1e-6);
        let cut = separating_hyperplane(&x, k, BaseNorm::L2).unwrap();
        prop_assert!((dot(&cut.coefficients, &x) - c).abs() < 1e-9 * c);
        prop_assert!(c_dual_norm(&cut.coefficients, k, BaseNorm::L2).unwrap() <= 1.0 + 1e-9);
        for v in sparse_units(6, k) {
            prop_assert!(dot(&cut.coefficients, &v) <= cut.rhs + 1e-9);
        }
    }

    #[test]
    fn min_norm_point_weakly_majorizes((x, k) in vec_and_k()) {
        let u = sparsity_min_norm(&x, k, BaseNorm::L2).unwrap();
        let abs: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        prop_assert!(weakly_majorizes(&u, &abs).unwrap());
        prop_assert!(u[k..].iter().all(|&v| v == 0.0));
        prop_assert!(u.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn split_window_condition((x, k) in vec_and_k()) {
        let cert = sparsity_certificate(&x, k, BaseNorm::L2).unwrap();
        prop_assert_eq!(ksupport_split(&x, k).unwrap(), k - cert.i_x);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn averages_are_majorized(x in vec_in(2..=8)) {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        prop_assert!(majorizes(&x, &vec![mean; x.len()]).unwrap());
        prop_assert!(majorizes(&x, &x).unwrap());
    }

    #[test]
    fn permutations_stay_in_permutahedron(x in vec_in(2..=8), shift in 0usize..8) {
        let mut p = x.clone();
        p.rotate_left(shift % x.len());
        prop_assert!(in_permutahedron(&p, &x).unwrap());
    }

    #[test]
    fn transport_and_birkhoff(x in vec_in(2..=7), w in prop::collection::vec(0.01..1.0f64, 7)) {
        // A doubly stochastic average of permutations of u gives a point it majorizes.
        let n = x.len();
        let u = sort_descending(&x);
        let total: f64 = w[..n].iter().sum();
        let mut y = vec![0.0; n];
        for (s, wi) in w[..n].iter().enumerate() {
            for i in 0..n {
                y[i] += wi / total * u[(i + s) % n];
            }
        }
        prop_assert!(majorizes(&u, &y).unwrap());
        let s = transport_matrix(&u, &y).unwrap();
        let back = s.matrix().matvec(&u);
        for (a, b) in back.iter().zip(&y) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        let d = birkhoff(&s).unwrap();
        prop_assert!(d.reconstruct(n).max_abs_diff(s.matrix()) <= 1e-12);
        prop_assert!(d.weights.len() <= n * n);
        prop_assert!((d.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transport_closed_forms(w in prop::collection::vec(0.0..3.0f64, 2..=6)) {
        let n = w.len();
        let ww = outer(&w);
        let s = sort_descending(&w);
        for p in 1..=n {
            for q in 1..=n {
                let r = p * q;
                let lp = h_primal(&ww, p, q, r).unwrap();
                let closed = h_closed_block(&w, p, q).unwrap();
                prop_assert!((lp - closed).abs() < 1e-8 * closed.max(1.0));
                let cert = dual_certificate_block(&s, p, q).unwrap();
                prop_assert!(cert.max_violation(&outer(&s)) <= 1e-12);
                prop_assert!((cert.objective(p, q, r) - closed).abs() < 1e-8 * closed.max(1.0));
            }
        }
        for r in 1..=n {
            let closed = h_closed_diag(&w, r).unwrap();
            prop_assert!((h_primal(&ww, 1, 1, r).unwrap() - closed).abs() < 1e-8 * closed.max(1.0));
            prop_assert!((h_dual(&ww, 1, 1, r).unwrap() - closed).abs() < 1e-8 * closed.max(1.0));
            let cert = dual_certificate_diag(&s, r).unwrap();
            prop_assert!(cert.max_violation(&outer(&s)) <= 1e-12);
            prop_assert!((cert.objective(1, 1, r) - closed).abs() < 1e-8 * closed.max(1.0));
        }
    }

    #[test]
    fn eigen_reconstructs(m in (2usize..7).prop_flat_map(sym_matrix)) {
        let e = sym_eigen(&m).unwrap();
        prop_assert!(reconstruct(&e).max_abs_diff(&m) < 1e-10);
        prop_assert!((e.values.iter().sum::<f64>() - m.trace()).abs() < 1e-10);
        prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        let sv = singular_values(&m).unwrap();
        let abs_eig = sort_descending(&e.values.iter().map(|v| v.abs()).collect::<Vec<_>>());
        for (a, b) in sv.iter().zip(&abs_eig) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn profile_unsorts(x in vec_in(1..=9)) {
        let p = sorted_profile(&x).unwrap();
        prop_assert_eq!(p.unsort(&p.descending), x.clone());
        prop_assert!(p.abs_descending.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn spectral_hull_matches_vector_oracle(m in (2usize..6).prop_flat_map(sym_matrix), k in 1usize..3) {
        let sv = singular_values(&m).unwrap();
        let k = k.min(sv.len());
        let linf = norm_inf(&sv).max(norm1(&sv) / k as f64);
        prop_assume!((linf - 1.0).abs() > 1e-6);
        prop_assert_eq!(hiriart_membership(&m, k, 1.0).unwrap(), linf <= 1.0);
    }

    #[test]
    fn eigen_hull_is_rotation_invariant(d in prop::collection::vec(-1.0..1.0f64, 4), t in 0.0..6.3f64) {
        let (c, s) = (t.cos(), t.sin());
        let q = Matrix::from_rows(&[
            vec![c, -s, 0.0, 0.0],
            vec![s, c, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ]).unwrap();
        let rotated = symmetrize(&q.matmul(&Matrix::from_diag(&d)).matmul(&q.transpose()));
        let oracle = |v: &[f64]| membership(v, 2, BaseNorm::L2, 1.0);
        let a = eig_hull_membership(&Matrix::from_diag(&d), oracle).unwrap();
        let b = eig_hull_membership(&rotated, oracle).unwrap();
        let cd = c_norm(&d, 2, BaseNorm::L2).unwrap();
        prop_assume!((cd - 1.0).abs() > 1e-6);
        prop_assert_eq!(a, b);
    }
}

fn random_lp(seed: &[f64]) -> ConicModel {
    let mut m = ConicModel::new("prop");
    let x: Vec<_> = (0..4).map(|i| m.add_var(format!("x{i}"), -seed[i].abs() - 1.0, seed[i + 4].abs() + 1.0)).collect();
    for r in 0..3 {
        let mut e = LinExpr::zero();
        for (i, &xi) in x.iter().enumerate() {
            e.add_term(xi, seed[8 + 4 * r + i]);
        }
        let cmp = [Cmp::Le, Cmp::Ge, Cmp::Eq][r];
        let rhs = if cmp == Cmp::Eq { 0.0 } else if cmp == Cmp::Le { 10.0 } else { -10.0 };
        m.add_row(format!("r{r}"), e, cmp, rhs);
    }
    let mut obj = LinExpr::sum(x.iter().copied());
    obj.add_term(x[0], seed[20]);
    obj.constant = seed[21];
    m.set_objective(if seed[22] > 0.0 { Sense::Maximize } else { Sense::Minimize }, obj);
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lp_text_round_trips(seed in prop::collection::vec(-3.0..3.0f64, 23)) {
        let m = random_lp(&seed);
        let text = export_lp(&m).unwrap();
        let back = parse_lp(&text).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(export_lp(&back).unwrap(), text);
    }

    #[test]
    fn sdpa_text_round_trips_and_keeps_value(seed in prop::collection::vec(-3.0..3.0f64, 23)) {
        let m = random_lp(&seed);
        let sense = m.sense;
        let p = SdpaProblem::from_model(&m).unwrap();
        prop_assert_eq!(&SdpaProblem::parse(&p.to_text()).unwrap(), &p);
        let direct = solve_lp(&m.clone().seal().unwrap()).unwrap();
        let rebuilt = solve_lp(&p.to_model("back").seal().unwrap()).unwrap();
        prop_assert_eq!(direct.report.status, rebuilt.report.status);
        if direct.report.status == symhull::Status::Optimal {
            let flip = if sense == Sense::Maximize { -1.0 } else { 1.0 };
            let want = flip * (direct.report.objective - m.objective.constant);
            prop_assert!((rebuilt.report.objective - want).abs() < 1e-7 * want.abs().max(1.0));
        }
    }

    #[test]
    fn majorization_forms_agree(n in 3usize..=6, c in prop::collection::vec(-1.0..1.0f64, 6), x in prop::collection::vec(-2.0..2.0f64, 6)) {
        let u = sort_descending(&x[..n]);
        let value = |sortnet: bool| {
            let mut m = ConicModel::new("maj");
            let y: Vec<_> = (0..n).map(|i| m.free_var(format!("y{i}"))).collect();
            let ue: Vec<LinExpr> = u.iter().map(|&v| LinExpr::constant(v)).collect();
            let ye: Vec<LinExpr> = y.iter().map(|&v| v.into()).collect();
            if sortnet {
                emit_sorting_majorization(&mut m, &ue, &ye, &bitonic_network(n), "s").unwrap();
            } else {
                emit_majorization(&mut m, &ue, &ye, false, "d").unwrap();
            }
            let mut obj = LinExpr::zero();
            for i in 0..n {
                obj.add_term(y[i], c[i]);
            }
            m.set_objective(Sense::Maximize, obj);
            solve_lp(&m.seal().unwrap()).unwrap().report.objective
        };
        // Oracle: a linear objective over the permutahedron pairs sorted c with sorted u.
        let cs = sort_descending(&c[..n]);
        let want: f64 = cs.iter().zip(&u).map(|(a, b)| a * b).sum();
        prop_assert!((value(false) - want).abs() < 1e-7);
        prop_assert!((value(true) - want).abs() < 1e-7);
    }
}
