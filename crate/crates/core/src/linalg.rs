//! Dense complex linear algebra shared by every module.
//!
//! Everything is a square `DMatrix<Complex64>`. Composite indices follow the
//! Kronecker convention: `(a, b) -> a * dim_b + b`, so the first tensor factor
//! is the slow index.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Residual tolerance for algebraic identities.
pub const TOL: f64 = 1e-9;
/// Residual tolerance for constructions that are exact up to rounding.
pub const EXACT_TOL: f64 = 1e-12;
/// Relative threshold for rank and eigenvalue-gap decisions.
pub const RANK_TOL: f64 = 1e-8;
/// Values within this factor of `RANK_TOL` (either side) make a rank decision ambiguous.
pub const AMBIGUITY_FACTOR: f64 = 100.0;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(n: usize) -> CMatrix {
    CMatrix::zeros(n, n)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[cr(0.0), c(0.0, -1.0), c(0.0, 1.0), cr(0.0)])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(-1.0)])
}

pub fn hadamard() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[cr(s), cr(s), cr(s), cr(-s)])
}

/// Diagonal matrix with real entries.
pub fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        values.len(),
        values.iter().map(|&v| cr(v)),
    ))
}

/// Standard basis vector `|i>` in dimension `n`.
pub fn ket(n: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[i] = cr(1.0);
    v
}

/// `|v><v|`.
pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// Matrix unit `|i><j|`.
pub fn matrix_unit(n: usize, i: usize, j: usize) -> CMatrix {
    let mut m = zeros(n);
    m[(i, j)] = cr(1.0);
    m
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Trace inner product `Tr(A* B)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// `(A - A*) / 2i`, so that `A = Re(A) + i Im(A)` with both parts Hermitian.
pub fn antihermitian_part(a: &CMatrix) -> CMatrix {
    (a - a.adjoint()) * c(0.0, -0.5)
}

pub fn is_hermitian(a: &CMatrix, tol: f64) -> bool {
    frobenius(&(a - a.adjoint())) <= tol * a.nrows().max(1) as f64
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = zeros(n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub fn eigenvalues_hermitian(m: &CMatrix) -> Vec<f64> {
    hermitian_eigen(m).0
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn spectral_map(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let n = m.nrows();
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        let fv = f(v);
        for i in 0..n {
            scaled[(i, j)] *= fv;
        }
    }
    scaled * vectors.adjoint()
}

/// Square root of a positive semidefinite matrix; eigenvalues in `(-tol, 0)` are clamped.
pub fn psd_sqrt(m: &CMatrix, tol: f64) -> Result<CMatrix> {
    let (values, _) = hermitian_eigen(m);
    if let Some(&lowest) = values.first() {
        if lowest < -tol {
            return Err(Error::SquareRootFailure { eigenvalue: lowest });
        }
    }
    Ok(spectral_map(m, |v| v.max(0.0).sqrt()))
}

/// Largest singular value.
pub fn operator_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Sum of singular values.
pub fn trace_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().sum()
}

/// Trace norm of a Hermitian matrix via its spectrum.
pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    eigenvalues_hermitian(m).iter().map(|v| v.abs()).sum()
}

/// Which factor of a bipartition to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    A,
    B,
}

/// Partial trace over the complement of `keep` in `C^dim_a ⊗ C^dim_b`.
pub fn partial_trace(m: &CMatrix, dim_a: usize, dim_b: usize, keep: Side) -> Result<CMatrix> {
    let n = dim_a * dim_b;
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.nrows(),
        });
    }
    Ok(match keep {
        Side::A => CMatrix::from_fn(dim_a, dim_a, |i, j| {
            (0..dim_b).map(|k| m[(i * dim_b + k, j * dim_b + k)]).sum()
        }),
        Side::B => CMatrix::from_fn(dim_b, dim_b, |i, j| {
            (0..dim_a).map(|k| m[(k * dim_b + i, k * dim_b + j)]).sum()
        }),
    })
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`.
pub fn fidelity(rho: &CMatrix, sigma: &CMatrix) -> f64 {
    let s = spectral_map(rho, |v| v.max(0.0).sqrt());
    let inner = &s * sigma * &s;
    let root: f64 = eigenvalues_hermitian(&inner)
        .iter()
        .map(|v| v.max(0.0).sqrt())
        .sum();
    root * root
}

/// Groups ascending eigenvalues into clusters of (numerically) equal values.
///
/// Consecutive values whose gap is below `RANK_TOL * scale` share a cluster.
/// A gap inside the ambiguity band around that threshold is an error.
pub fn cluster_sorted(values: &[f64], context: &'static str) -> Result<Vec<std::ops::Range<usize>>> {
    if values.is_empty() {
        return Ok(Vec::new());
    }
    let scale = values
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
        .max(1.0);
    let threshold = RANK_TOL * scale;
    let mut clusters = Vec::new();
    let mut start = 0;
    for i in 1..values.len() {
        let gap = values[i] - values[i - 1];
        if gap > threshold / AMBIGUITY_FACTOR && gap < threshold * AMBIGUITY_FACTOR {
            return Err(Error::RankAmbiguity {
                context,
                value: gap,
                threshold,
            });
        }
        if gap >= threshold * AMBIGUITY_FACTOR {
            clusters.push(start..i);
            start = i;
        }
    }
    clusters.push(start..values.len());
    Ok(clusters)
}

/// Numerical rank of a PSD spectrum relative to its largest value, with ambiguity detection.
pub fn psd_rank(values: &[f64], context: &'static str) -> Result<usize> {
    psd_rank_with_floor(values, 0.0, context)
}

/// As [`psd_rank`], but the reference scale is at least `floor`; use when the
/// matrix has a known natural scale, so an all-roundoff spectrum reads as rank 0.
pub fn psd_rank_with_floor(values: &[f64], floor: f64, context: &'static str) -> Result<usize> {
    let scale = values.iter().cloned().fold(floor, f64::max);
    if scale <= 0.0 {
        return Ok(0);
    }
    let threshold = RANK_TOL * scale;
    let mut rank = 0;
    for &v in values {
        if v > threshold / AMBIGUITY_FACTOR && v < threshold * AMBIGUITY_FACTOR {
            return Err(Error::RankAmbiguity {
                context,
                value: v,
                threshold,
            });
        }
        if v >= threshold * AMBIGUITY_FACTOR {
            rank += 1;
        }
    }
    Ok(rank)
}

// Random matrices. All randomness flows through caller-provided RNGs.

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub fn random_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(n, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let norm = v.norm();
    v / cr(norm)
}

/// Haar-random unitary (QR of a Ginibre matrix with phase correction).
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let qr = ginibre(n, n, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { cr(1.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    hermitian_part(&ginibre(n, n, rng))
}

/// Random density matrix of the given rank (Ginibre-induced measure).
pub fn random_density<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(n, rank.max(1), rng);
    let d = &g * g.adjoint();
    let tr = d.trace().re;
    d / cr(tr)
}

/// Row-major JSON form of a square complex matrix: `{dim, re, im}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&CMatrix> for MatrixJson {
    fn from(m: &CMatrix) -> Self {
        let dim = m.nrows();
        let rows = |f: fn(&Complex64) -> f64| {
            (0..dim)
                .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        MatrixJson {
            dim,
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }
}

impl TryFrom<MatrixJson> for CMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        let well_formed = j.re.len() == j.dim
            && j.im.len() == j.dim
            && j.re.iter().chain(j.im.iter()).all(|r| r.len() == j.dim);
        if !well_formed {
            return Err(Error::Config(format!(
                "matrix rows do not match declared dim {}",
                j.dim
            )));
        }
        let m = CMatrix::from_fn(j.dim, j.dim, |r, s| c(j.re[r][s], j.im[r][s]));
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Config("matrix has non-finite entries".into()));
        }
        Ok(m)
    }
}

/// Serde adapter for a single matrix in the `{dim, re, im}` schema.
pub mod serde_matrix {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        CMatrix::try_from(j).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for a list of matrices.
pub mod serde_matrix_vec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ms: &[CMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
        let js: Vec<MatrixJson> = ms.iter().map(MatrixJson::from).collect();
        js.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<CMatrix>, D::Error> {
        let js = Vec::<MatrixJson>::deserialize(d)?;
        js.into_iter()
            .map(|j| CMatrix::try_from(j).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Serde adapter for a complex vector as `{re, im}`.
pub mod serde_vector {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct VectorJson {
        re: Vec<f64>,
        im: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(v: &CVector, s: S) -> std::result::Result<S::Ok, S::Error> {
        VectorJson {
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CVector, D::Error> {
        let j = VectorJson::deserialize(d)?;
        if j.re.len() != j.im.len() {
            return Err(serde::de::Error::custom("re/im length mismatch"));
        }
        Ok(CVector::from_iterator(
            j.re.len(),
            j.re.iter().zip(&j.im).map(|(&a, &b)| c(a, b)),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn partial_trace_of_product_recovers_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_density(2, 2, &mut rng);
        let b = random_density(3, 3, &mut rng);
        let ab = kron(&a, &b);
        assert!(frobenius(&(partial_trace(&ab, 2, 3, Side::A).unwrap() - &a)) < 1e-14);
        assert!(frobenius(&(partial_trace(&ab, 2, 3, Side::B).unwrap() - &b)) < 1e-14);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = random_density(4, 4, &mut rng);
        let s = psd_sqrt(&d, TOL).unwrap();
        assert!(frobenius(&(&s * &s - &d)) < 1e-13);
        assert!(psd_sqrt(&diag(&[1.0, -0.1]), TOL).is_err());
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(5, &mut rng);
        assert!(frobenius(&(u.adjoint() * &u - identity(5))) < 1e-12);
    }

    #[test]
    fn clustering_flags_ambiguous_gaps() {
        let ok = cluster_sorted(&[0.0, 1e-14, 1.0, 1.0, 2.0], "test").unwrap();
        assert_eq!(ok, vec![0..2, 2..4, 4..5]);
        assert!(matches!(
            cluster_sorted(&[0.0, 1e-8, 1.0], "test"),
            Err(Error::RankAmbiguity { .. })
        ));
    }

    #[test]
    fn fidelity_of_pure_states_is_overlap() {
        let p0 = projector(&ket(2, 0));
        let plus = projector(&(hadamard() * ket(2, 0)));
        assert!((fidelity(&p0, &plus) - 0.5).abs() < 1e-12);
        assert!((fidelity(&p0, &p0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matrix_json_round_trip() {
        let m = pauli_y();
        let j = MatrixJson::from(&m);
        assert_eq!(j.dim, 2);
        assert_eq!(j.im[0][1], -1.0);
        assert_eq!(CMatrix::try_from(j).unwrap(), m);
    }
}
