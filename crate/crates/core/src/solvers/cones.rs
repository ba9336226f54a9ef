use crate::linalg::jacobi;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Euclidean projection of `(t, z)` onto `‖z‖ ≤ t`, in place.
pub fn project_soc(v: &mut [f64]) {
    let t = v[0];
    let nz = v[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
    if nz <= t {
        return;
    }
    if nz <= -t {
        v.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    let a = 0.5 * (t + nz);
    v[0] = a;
    let f = a / nz;
    for x in &mut v[1..] {
        *x *= f;
    }
}

/// Number of svec entries for a `dim × dim` block.
pub(crate) fn svec_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// Column-major lower triangle, off-diagonals scaled by √2.
pub(crate) fn svec_index(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i >= j { (i, j) } else { (j, i) };
    j * dim - j * (j + 1) / 2 + i
}

pub(crate) fn svec_to_dense(v: &[f64], dim: usize, out: &mut [f64]) {
    for j in 0..dim {
        for i in j..dim {
            let x = v[svec_index(dim, i, j)];
            let x = if i == j { x } else { x / SQRT2 };
            out[i * dim + j] = x;
            out[j * dim + i] = x;
        }
    }
}

/// Projection of an svec onto the PSD cone, in place.
pub fn project_psd_svec(v: &mut [f64], dim: usize) {
    if dim == 1 {
        v[0] = v[0].max(0.0);
        return;
    }
    let mut m = vec![0.0; dim * dim];
    svec_to_dense(v, dim, &mut m);
    let eig = jacobi(&m, dim, true);
    if eig.values.iter().all(|&l| l >= 0.0) {
        return;
    }
    m.iter_mut().for_each(|x| *x = 0.0);
    for (k, &lam) in eig.values.iter().enumerate() {
        if lam <= 0.0 {
            break;
        }
        for i in 0..dim {
            let qi = eig.vectors[(i, k)] * lam;
            for j in 0..=i {
                m[i * dim + j] += qi * eig.vectors[(j, k)];
            }
        }
    }
    for j in 0..dim {
        for i in j..dim {
            let x = m[i * dim + j];
            v[svec_index(dim, i, j)] = if i == j { x } else { x * SQRT2 };
        }
    }
}
