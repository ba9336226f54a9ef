//! Sparse PCA: instances, the exact support-enumeration oracle, convex relaxations and gap reports.

mod relax;

pub use relax::{build_relaxation, solve_relaxation, Relaxation, RelaxationHandles, RelaxationSolution, SymVars};

use crate::error::{check_finite, Error, Result};
use crate::linalg::{sym_eigen, sym_eigenvalues, Matrix};
use crate::model::MajorizationForm;
use crate::solvers::{ConicSettings, Status};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq)]
pub struct SpcaInstance {
    sigma: Matrix,
    k: usize,
    provenance: String,
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    n: usize,
    #[serde(rename = "K")]
    k: usize,
    sigma: Vec<f64>,
    #[serde(default)]
    provenance: String,
}

impl SpcaInstance {
    pub fn new(sigma: Matrix, k: usize, provenance: impl Into<String>) -> Result<Self> {
        if !sigma.is_square() {
            return Err(Error::input("covariance matrix must be square"));
        }
        check_finite("sigma", sigma.as_slice())?;
        if !sigma.is_symmetric() {
            return Err(Error::input("covariance matrix must be exactly symmetric"));
        }
        let n = sigma.rows();
        if !(1 < k && k < n) {
            return Err(Error::input(format!("K must satisfy 1 < K < n, got K={k}, n={n}")));
        }
        let scale = sigma.frobenius();
        let lo = sym_eigenvalues(&sigma)?.last().copied().unwrap_or(0.0);
        if lo < -1e-8 * scale {
            return Err(Error::input(format!("covariance matrix is not PSD (min eigenvalue {lo:.3e})")));
        }
        Ok(SpcaInstance { sigma, k, provenance: provenance.into() })
    }

    pub fn sigma(&self) -> &Matrix {
        &self.sigma
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.sigma.rows()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Same matrix, different cardinality.
    pub fn with_k(&self, k: usize) -> Result<Self> {
        SpcaInstance::new(self.sigma.clone(), k, self.provenance.clone())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: InstanceJson =
            serde_json::from_str(text).map_err(|e| Error::input(format!("instance JSON: {e}")))?;
        if raw.sigma.len() != raw.n * raw.n {
            return Err(Error::input(format!(
                "sigma has {} entries, expected n² = {}",
                raw.sigma.len(),
                raw.n * raw.n
            )));
        }
        let provenance = if raw.provenance.is_empty() { "file".to_string() } else { raw.provenance };
        SpcaInstance::new(Matrix::from_row_major(raw.n, raw.n, raw.sigma)?, raw.k, provenance)
    }

    pub fn to_json(&self) -> String {
        let raw = InstanceJson {
            n: self.n(),
            k: self.k,
            sigma: self.sigma.as_slice().to_vec(),
            provenance: self.provenance.clone(),
        };
        serde_json::to_string_pretty(&raw).expect("instance serializes")
    }
}

const PITPROPS_TEXT: &str = include_str!("../../data/pitprops.txt");
const PITPROPS_SHA256: &str = "089c3fca053ec983ab12134f747bd138e32b7b3b44f400f78969079bcf8f35ef";

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses the bundled lower-triangle format after verifying its checksum.
pub fn pitprops_from_text(text: &str) -> Result<Matrix> {
    let digest = sha256_hex(text.as_bytes());
    if digest != PITPROPS_SHA256 {
        return Err(Error::Data(format!("pitprops checksum mismatch ({digest})")));
    }
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(|v| v.parse::<f64>()).collect::<std::result::Result<_, _>>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Data(format!("pitprops: {e}")))?;
    let n = rows.len();
    let mut m = Matrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != i + 1 {
            return Err(Error::Data(format!("pitprops row {} has {} entries", i + 1, row.len())));
        }
        for (j, &v) in row.iter().enumerate() {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// The 13-variable pitprops correlation matrix.
pub fn load_pitprops() -> Result<Matrix> {
    pitprops_from_text(PITPROPS_TEXT)
}

/// Reads and verifies a pitprops data file from disk.
pub fn load_pitprops_file(path: &Path) -> Result<Matrix> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    pitprops_from_text(&text)
}

pub fn pitprops_instance(k: usize) -> Result<SpcaInstance> {
    SpcaInstance::new(load_pitprops()?, k, "pitprops")
}

/// `round(n/6)` with halves rounded up, kept at least 2.
pub fn default_cardinality(n: usize) -> usize {
    ((n + 3) / 6).max(2)
}

/// Weights `λ_i ~ U(0, 1)` and directions `v_i ~ N(0, I)`, `i ≤ m = ⌈nU⌉`.
pub fn random_factors(n: usize, seed: u64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = ((n as f64 * rng.random::<f64>()).ceil() as usize).clamp(1, n);
    let mut weights = Vec::with_capacity(m);
    let mut dirs = Vec::with_capacity(m);
    for _ in 0..m {
        dirs.push((0..n).map(|_| rng.sample(StandardNormal)).collect());
        weights.push(rng.random());
    }
    (weights, dirs)
}

/// `Σ = Σ_i λ_i v_i v_iᵀ` from [`random_factors`], `K = round(n/6)`.
pub fn random_instance(n: usize, seed: u64) -> Result<SpcaInstance> {
    if n < 4 {
        return Err(Error::input(format!("random instances need n ≥ 4, got {n}")));
    }
    let (weights, dirs) = random_factors(n, seed);
    let mut sigma = Matrix::zeros(n, n);
    for (lambda, v) in weights.iter().zip(&dirs) {
        for i in 0..n {
            for j in 0..=i {
                sigma[(i, j)] += lambda * v[i] * v[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            sigma[(j, i)] = sigma[(i, j)];
        }
    }
    SpcaInstance::new(sigma, default_cardinality(n), format!("random:{n},{seed}"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactSolution {
    pub value: f64,
    /// 0-based, ascending, exactly K indices.
    pub support: Vec<usize>,
    pub x: Vec<f64>,
}

pub const EXACT_BUDGET: u128 = 10_000_000;

pub fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    let mut c: u128 = 1;
    for i in 0..k as u128 {
        c = c.saturating_mul(n as u128 - i) / (i + 1);
    }
    c
}

/// Best K-sparse unit vector by enumerating every support.
pub fn exact_spca(inst: &SpcaInstance) -> Result<ExactSolution> {
    let (n, k) = (inst.n(), inst.k());
    let count = binomial(n, k);
    if count > EXACT_BUDGET {
        return Err(Error::Budget(format!("C({n},{k}) = {count} supports exceeds {EXACT_BUDGET}")));
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let top = sym_eigenvalues(&inst.sigma.principal(&idx))?[0];
        if best.as_ref().is_none_or(|b| top > b.0) {
            best = Some((top, idx.clone()));
        }
        // Next combination in lexicographic order.
        let Some(pos) = (0..k).rev().find(|&p| idx[p] < n - k + p) else { break };
        idx[pos] += 1;
        for q in pos + 1..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
    let (_, support) = best.expect("at least one support");
    let eig = sym_eigen(&inst.sigma.principal(&support))?;
    let mut x = vec![0.0; n];
    for (a, &i) in support.iter().enumerate() {
        x[i] = eig.vectors[(a, 0)];
    }
    let norm = crate::linalg::norm2(&x);
    let lead = x.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
    let sign = if lead < 0.0 { -1.0 } else { 1.0 };
    x.iter_mut().for_each(|v| *v *= sign / norm);
    Ok(ExactSolution { value: inst.sigma.quad_form(&x), support, x })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelaxationKind {
    D,
    B,
    Rowsum,
    Diagonal,
    TwoStep,
    Submatrix,
    T,
}

impl RelaxationKind {
    pub const ALL: [RelaxationKind; 7] = [
        RelaxationKind::D,
        RelaxationKind::B,
        RelaxationKind::Rowsum,
        RelaxationKind::Diagonal,
        RelaxationKind::TwoStep,
        RelaxationKind::Submatrix,
        RelaxationKind::T,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RelaxationKind::D => "D",
            RelaxationKind::B => "B",
            RelaxationKind::Rowsum => "rowsum",
            RelaxationKind::Diagonal => "diag",
            RelaxationKind::TwoStep => "2step",
            RelaxationKind::Submatrix => "submat",
            RelaxationKind::T => "T",
        }
    }
}

impl fmt::Display for RelaxationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for RelaxationKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl FromStr for RelaxationKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        RelaxationKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::input(format!("unknown relaxation '{s}' (use D|B|rowsum|diag|2step|submat|T)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapEntry {
    pub kind: RelaxationKind,
    pub value: f64,
    pub status: Status,
    /// `None` when the D bound is already tight.
    pub gap_closed: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub n: usize,
    pub k: usize,
    pub z_star: f64,
    pub z_d: f64,
    pub d_status: Status,
    pub entries: Vec<GapEntry>,
}

/// Below this difference the D bound counts as tight and gaps are undefined.
pub const TIGHT_GAP: f64 = 1e-6;

pub fn gap_closed(z_d: f64, z_relax: f64, z_star: f64) -> Option<f64> {
    (z_d - z_star > TIGHT_GAP).then(|| 100.0 * (z_d - z_relax) / (z_d - z_star))
}

pub fn gap_report(
    inst: &SpcaInstance,
    kinds: &[RelaxationKind],
    form: MajorizationForm,
    settings: &ConicSettings,
) -> Result<GapReport> {
    let exact = exact_spca(inst)?;
    let d = solve_relaxation(inst, RelaxationKind::D, form, settings)?;
    let mut entries = Vec::new();
    for &kind in kinds {
        let sol = if kind == RelaxationKind::D { d.clone() } else { solve_relaxation(inst, kind, form, settings)? };
        entries.push(GapEntry {
            kind,
            value: sol.report.objective,
            status: sol.report.status,
            gap_closed: gap_closed(d.report.objective, sol.report.objective, exact.value),
            seconds: sol.report.seconds,
        });
    }
    Ok(GapReport {
        n: inst.n(),
        k: inst.k(),
        z_star: exact.value,
        z_d: d.report.objective,
        d_status: d.report.status,
        entries,
    })
}

impl GapReport {
    pub const CSV_HEADER: &'static str = "K,kind,zStar,zD,zKind,gapClosed,seconds";

    pub fn csv_rows(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|e| {
                let gap = e.gap_closed.map_or("undefined".to_string(), |g| format!("{g:.2}"));
                format!(
                    "{},{},{:.4},{:.4},{:.4},{},{:.2}",
                    self.k, e.kind, self.z_star, self.z_d, e.value, gap, e.seconds
                )
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pitprops_shape() {
        let m = load_pitprops().unwrap();
        assert_eq!(m.rows(), 13);
        assert!(m.diag().iter().all(|&d| d == 1.0));
        assert!(m.is_symmetric());
    }

    #[test]
    fn corrupt_data_is_rejected() {
        let bad = PITPROPS_TEXT.replace("0.954", "0.955");
        assert!(matches!(pitprops_from_text(&bad), Err(Error::Data(_))));
        assert!(matches!(load_pitprops_file(Path::new("/nonexistent/pitprops.txt")), Err(Error::Data(_))));
    }

    #[test]
    fn cardinality_rounding() {
        assert_eq!(default_cardinality(30), 5);
        assert_eq!(default_cardinality(15), 3);
        assert_eq!(default_cardinality(8), 2);
        assert_eq!(default_cardinality(9), 2);
        assert_eq!(default_cardinality(33), 6);
    }

    #[test]
    fn kind_names_round_trip() {
        for k in RelaxationKind::ALL {
            assert_eq!(k.as_str().parse::<RelaxationKind>().unwrap(), k);
        }
        assert!("X".parse::<RelaxationKind>().is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(13, 6), 1716);
        assert_eq!(binomial(30, 8), 5_852_925);
        assert_eq!(binomial(5, 5), 1);
    }
}
