//! Timing benchmarks for the symhull kernels.

use criterion::{BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;
use symhull::envelope::{mccormick_relax, multilinear_envelope, Hypercube};
use symhull::ksupport::{c_norm, k_support_norm};
use symhull::linalg::sym_eigen;
use symhull::majorization::{birkhoff, transport_matrix};
use symhull::model::{emit_permutahedron, ConicModel, LinExpr, Sense};
use symhull::solvers::solve_lp;
use symhull::spca::{exact_spca, pitprops_instance, solve_relaxation};
use symhull::{BaseNorm, ConicSettings, MajorizationForm, Matrix, RelaxationKind};

pub fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Maximize a fixed linear objective over the permutahedron of `u`.
pub fn permutahedron_lp(u: &[f64], form: MajorizationForm) -> ConicModel {
    let n = u.len();
    let mut sorted = u.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut m = ConicModel::new("perm");
    let uv: Vec<LinExpr> = sorted.iter().map(|&v| LinExpr::constant(v)).collect();
    let xv: Vec<_> = (0..n).map(|i| m.free_var(format!("x{i}"))).collect();
    let xe: Vec<LinExpr> = xv.iter().map(|&v| v.into()).collect();
    emit_permutahedron(&mut m, &uv, &xe, form, "p").expect("equal lengths");
    let mut obj = LinExpr::zero();
    for (i, &v) in xv.iter().enumerate() {
        obj.add_term(v, (i as f64 * 0.7).sin());
    }
    m.set_objective(Sense::Maximize, obj);
    m
}

fn norms(c: &mut Criterion) {
    let mut g = c.benchmark_group("cnorm");
    for n in [100, 1000, 10000] {
        let x = random_vector(n, 1);
        g.bench_with_input(BenchmarkId::new("l2", n), &x, |b, x| b.iter(|| c_norm(black_box(x), 10, BaseNorm::L2)));
        g.bench_with_input(BenchmarkId::new("ksupport", n), &x, |b, x| b.iter(|| k_support_norm(black_box(x), 10)));
    }
    g.finish();
}

fn majorization(c: &mut Criterion) {
    let mut g = c.benchmark_group("permutahedron_lp");
    for n in [8, 16, 32] {
        let u = random_vector(n, 2);
        for form in [MajorizationForm::Dual, MajorizationForm::SortNet] {
            let model = permutahedron_lp(&u, form).seal().expect("valid model");
            g.bench_with_input(BenchmarkId::new(format!("{form:?}"), n), &model, |b, m| b.iter(|| solve_lp(m)));
        }
    }
    g.finish();

    let u = random_vector(8, 3);
    let mut x = u.clone();
    let mean = x.iter().sum::<f64>() / 8.0;
    x.iter_mut().for_each(|v| *v = 0.5 * *v + 0.5 * mean);
    c.bench_function("transport_birkhoff_8", |b| {
        b.iter(|| birkhoff(&transport_matrix(black_box(&u), black_box(&x)).unwrap()))
    });
}

fn envelopes(c: &mut Criterion) {
    let cube = Hypercube::new(2.0, 4.0, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = cube.sample(&mut rng);
    c.bench_function("envelope_lp_8", |b| b.iter(|| multilinear_envelope(black_box(&x), &cube)));
    c.bench_function("mccormick_8", |b| b.iter(|| mccormick_relax(black_box(&x), &cube)));
}

fn linalg(c: &mut Criterion) {
    let n = 40;
    let v = random_vector(n * n, 5);
    let a = Matrix::from_row_major(n, n, v).unwrap();
    let s = a.transpose().matmul(&a);
    c.bench_function("jacobi_eigen_40", |b| b.iter(|| sym_eigen(black_box(&s))));
}

fn spca(c: &mut Criterion) {
    let inst = pitprops_instance(5).unwrap();
    c.bench_function("exact_pitprops_k5", |b| b.iter(|| exact_spca(black_box(&inst))));
    let mut g = c.benchmark_group("relaxation_pitprops_k3");
    g.sample_size(10);
    let inst = pitprops_instance(3).unwrap();
    let settings = ConicSettings::with_tol(1e-6);
    for kind in [RelaxationKind::D, RelaxationKind::Diagonal] {
        g.bench_function(kind.as_str(), |b| {
            b.iter(|| solve_relaxation(&inst, kind, MajorizationForm::Dual, &settings))
        });
    }
    g.finish();
}

pub fn benchmarks(c: &mut Criterion) {
    norms(c);
    majorization(c);
    envelopes(c);
    linalg(c);
    spca(c);
}
