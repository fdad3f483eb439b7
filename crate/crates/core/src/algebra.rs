//! Concrete unital *-subalgebras of `M_n(C)`.
//!
//! An algebra is stored as a basis orthonormal under `<X, Y> = Tr(X* Y)`,
//! together with the generators it was built from (used for serialization
//! and for commutant computations, since commuting with a generating set
//! and its adjoints is the same as commuting with the whole algebra).

use std::collections::VecDeque;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, cluster_sorted, commutator, cr, frobenius, hermitian_eigen, hs_inner, identity,
    operator_norm, psd_rank, CMatrix, MatrixJson, Side, RANK_TOL, TOL,
};

#[derive(Debug, Clone)]
pub struct StarAlgebra {
    ambient_dim: usize,
    basis: Vec<CMatrix>,
    generators: Vec<CMatrix>,
}

/// Adds the component of `candidate` orthogonal to `basis`, if it is numerically new.
fn extend_orthonormal(basis: &mut Vec<CMatrix>, candidate: &CMatrix) -> Option<usize> {
    // candidates are expected at unit scale; anything below the rank threshold is rounding noise
    let norm = frobenius(candidate);
    if norm < RANK_TOL {
        return None;
    }
    let mut v = candidate / cr(norm);
    // two passes of modified Gram-Schmidt
    for _ in 0..2 {
        for b in basis.iter() {
            let coeff = hs_inner(b, &v);
            v -= b * coeff;
        }
    }
    let residual = frobenius(&v);
    if residual > RANK_TOL {
        basis.push(v / cr(residual));
        Some(basis.len() - 1)
    } else {
        None
    }
}

impl StarAlgebra {
    /// The full matrix algebra `M_n`.
    pub fn full(n: usize) -> Self {
        let basis: Vec<CMatrix> = (0..n)
            .flat_map(|i| (0..n).map(move |j| linalg::matrix_unit(n, i, j)))
            .collect();
        StarAlgebra {
            ambient_dim: n,
            generators: basis.clone(),
            basis,
        }
    }

    /// `C * I`.
    pub fn scalars(n: usize) -> Self {
        StarAlgebra {
            ambient_dim: n,
            basis: vec![identity(n) / cr((n as f64).sqrt())],
            generators: Vec::new(),
        }
    }

    /// The maximal abelian algebra of diagonal matrices.
    pub fn diagonal(n: usize) -> Self {
        let basis: Vec<CMatrix> = (0..n).map(|i| linalg::matrix_unit(n, i, i)).collect();
        StarAlgebra {
            ambient_dim: n,
            generators: basis.clone(),
            basis,
        }
    }

    /// Wraps a set already known to span a unital *-algebra; the span is orthonormalized.
    pub fn from_spanning_set(ambient_dim: usize, elements: &[CMatrix]) -> Result<Self> {
        let mut basis = Vec::new();
        for e in elements {
            check_dim(e, ambient_dim)?;
            extend_orthonormal(&mut basis, e);
        }
        Ok(StarAlgebra {
            ambient_dim,
            generators: basis.clone(),
            basis,
        })
    }

    /// `A ⊗ I_m` acting on `C^n ⊗ C^m`.
    pub fn tensor_identity(&self, m: usize) -> Self {
        let id = identity(m);
        let s = cr((m as f64).sqrt());
        StarAlgebra {
            ambient_dim: self.ambient_dim * m,
            basis: self.basis.iter().map(|b| linalg::kron(b, &id) / s).collect(),
            generators: self.generators.iter().map(|g| linalg::kron(g, &id)).collect(),
        }
    }

    /// `I_m ⊗ A` acting on `C^m ⊗ C^n`.
    pub fn identity_tensor(m: usize, alg: &StarAlgebra) -> Self {
        let id = identity(m);
        let s = cr((m as f64).sqrt());
        StarAlgebra {
            ambient_dim: alg.ambient_dim * m,
            basis: alg.basis.iter().map(|b| linalg::kron(&id, b) / s).collect(),
            generators: alg.generators.iter().map(|g| linalg::kron(&id, g)).collect(),
        }
    }

    /// Block-diagonal direct sum `A_1 ⊕ A_2 ⊕ ...`.
    pub fn direct_sum(parts: &[StarAlgebra]) -> Self {
        let n: usize = parts.iter().map(|p| p.ambient_dim).sum();
        let mut basis = Vec::new();
        let mut offset = 0;
        for p in parts {
            for b in &p.basis {
                let mut m = linalg::zeros(n);
                m.view_mut((offset, offset), (p.ambient_dim, p.ambient_dim))
                    .copy_from(b);
                basis.push(m);
            }
            offset += p.ambient_dim;
        }
        StarAlgebra {
            ambient_dim: n,
            generators: basis.clone(),
            basis,
        }
    }

    /// `U A U*`.
    pub fn conjugate(&self, u: &CMatrix) -> Self {
        let ud = u.adjoint();
        StarAlgebra {
            ambient_dim: self.ambient_dim,
            basis: self.basis.iter().map(|b| u * b * &ud).collect(),
            generators: self.generators.iter().map(|g| u * g * &ud).collect(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Dimension of the algebra as a complex vector space.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    /// Generators plus their adjoints, or the basis when no generators are recorded.
    pub fn generating_set(&self) -> Vec<CMatrix> {
        let src = if self.generators.is_empty() {
            &self.basis
        } else {
            &self.generators
        };
        let mut out = Vec::with_capacity(2 * src.len());
        for g in src {
            out.push(g.clone());
            if !linalg::is_hermitian(g, TOL) {
                out.push(g.adjoint());
            }
        }
        out
    }

    /// Hermitian spanning set: real and imaginary parts of the basis.
    pub fn hermitian_basis(&self) -> Vec<CMatrix> {
        let mut out = Vec::new();
        for b in &self.basis {
            for h in [linalg::hermitian_part(b), linalg::antihermitian_part(b)] {
                extend_orthonormal(&mut out, &h);
            }
        }
        out
    }

    pub fn coefficients(&self, x: &CMatrix) -> Vec<Complex64> {
        self.basis.iter().map(|b| hs_inner(b, x)).collect()
    }

    pub fn from_coefficients(&self, coeffs: &[Complex64]) -> CMatrix {
        let mut m = linalg::zeros(self.ambient_dim);
        for (b, &c) in self.basis.iter().zip(coeffs) {
            m += b * c;
        }
        m
    }

    /// Orthogonal projection onto the span of the basis.
    pub fn project(&self, x: &CMatrix) -> CMatrix {
        self.from_coefficients(&self.coefficients(x))
    }

    /// Frobenius distance from `x` to the algebra.
    pub fn residual(&self, x: &CMatrix) -> f64 {
        frobenius(&(x - self.project(x)))
    }

    pub fn contains(&self, x: &CMatrix, tol: f64) -> bool {
        self.residual(x) <= tol * frobenius(x).max(1.0)
    }

    /// Random element with standard complex Gaussian coefficients.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> CMatrix {
        let coeffs: Vec<Complex64> = (0..self.dim())
            .map(|_| linalg::c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        self.from_coefficients(&coeffs)
    }

    /// Random self-adjoint element.
    pub fn random_hermitian<R: Rng + ?Sized>(&self, rng: &mut R) -> CMatrix {
        linalg::hermitian_part(&self.random_element(rng))
    }

    /// Random effect `0 <= E <= I`, obtained by affinely rescaling a random self-adjoint element.
    pub fn random_effect<R: Rng + ?Sized>(&self, rng: &mut R) -> CMatrix {
        effect_from_hermitian(&self.random_hermitian(rng))
    }

    /// Largest residual among the structural invariants: unit, products, adjoints.
    pub fn closure_residual(&self) -> f64 {
        let mut worst = self.residual(&identity(self.ambient_dim));
        for a in &self.basis {
            worst = worst.max(self.residual(&a.adjoint()));
            for b in &self.basis {
                worst = worst.max(self.residual(&(a * b)));
            }
        }
        worst
    }

    pub fn is_abelian(&self) -> bool {
        center(self).dim() == self.dim()
    }

    pub fn is_factor(&self) -> bool {
        center(self).dim() == 1
    }

    /// Whether two algebras have the same span.
    pub fn same_span(&self, other: &StarAlgebra, tol: f64) -> bool {
        self.ambient_dim == other.ambient_dim
            && self.dim() == other.dim()
            && other.basis.iter().all(|b| self.residual(b) <= tol)
    }

    /// Largest commutator norm between any two basis elements.
    pub fn max_self_commutator(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.basis.iter().enumerate() {
            for b in &self.basis[i + 1..] {
                worst = worst.max(frobenius(&commutator(a, b)));
            }
        }
        worst
    }
}

/// Rescales a self-adjoint matrix affinely into an effect with spectrum spanning `[0, 1]`.
pub fn effect_from_hermitian(h: &CMatrix) -> CMatrix {
    let n = h.nrows();
    let values = linalg::eigenvalues_hermitian(h);
    let (lo, hi) = (values[0], values[n - 1]);
    if hi - lo < TOL {
        return identity(n) * cr(0.5);
    }
    (linalg::hermitian_part(h) - identity(n) * cr(lo)) / cr(hi - lo)
}

fn check_dim(m: &CMatrix, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.nrows(),
        });
    }
    Ok(())
}

/// Smallest unital *-subalgebra of `M_ambient_dim` containing `generators`.
///
/// Breadth-first: every new basis element is multiplied on the left by every
/// generator (and adjoint); the span of all words is closed once the queue drains.
pub fn generate_algebra(generators: &[CMatrix], ambient_dim: usize) -> Result<StarAlgebra> {
    for g in generators {
        check_dim(g, ambient_dim)?;
    }
    let mut letters: Vec<CMatrix> = Vec::new();
    for g in generators {
        let norm = frobenius(g);
        if norm == 0.0 {
            continue;
        }
        let g = g / cr(norm);
        if !linalg::is_hermitian(&g, TOL) {
            letters.push(g.adjoint());
        }
        letters.push(g);
    }
    let mut basis: Vec<CMatrix> = Vec::new();
    extend_orthonormal(&mut basis, &identity(ambient_dim));
    let mut queue = VecDeque::new();
    for l in &letters {
        if let Some(i) = extend_orthonormal(&mut basis, l) {
            queue.push_back(i);
        }
    }
    let cap = ambient_dim * ambient_dim;
    while let Some(i) = queue.pop_front() {
        if basis.len() >= cap {
            break;
        }
        let current = basis[i].clone();
        for l in &letters {
            if let Some(j) = extend_orthonormal(&mut basis, &(l * &current)) {
                queue.push_back(j);
            }
        }
    }
    Ok(StarAlgebra {
        ambient_dim,
        basis,
        generators: generators.to_vec(),
    })
}

/// `vec(G X - X G)` as a matrix acting on column-major `vec(X)`.
fn commutator_superoperator(g: &CMatrix) -> CMatrix {
    let n = g.nrows();
    let id = identity(n);
    linalg::kron(&id, g) - linalg::kron(&g.transpose(), &id)
}

/// Null space of a PSD Gram-type matrix, as eigenvectors (columns) for the zero cluster.
///
/// Generators are normalized, so the spectrum has unit scale even when every
/// generator is central and the matrix is pure roundoff.
fn psd_null_space(m: &CMatrix, context: &'static str) -> Result<Vec<nalgebra::DVector<Complex64>>> {
    let (values, vectors) = hermitian_eigen(m);
    let rank = linalg::psd_rank_with_floor(&values, 1.0, context)?;
    let nullity = values.len() - rank;
    Ok((0..nullity).map(|j| vectors.column(j).into_owned()).collect())
}

/// `{X : X G = G X for all G in alg}`.
pub fn commutant(alg: &StarAlgebra) -> Result<StarAlgebra> {
    let n = alg.ambient_dim;
    let mut gram = linalg::zeros(n * n);
    for g in alg.generating_set() {
        let norm = frobenius(&g);
        if norm == 0.0 {
            continue;
        }
        let l = commutator_superoperator(&(g / cr(norm)));
        gram += l.adjoint() * &l;
    }
    let null = psd_null_space(&gram, "commutant")?;
    let elements: Vec<CMatrix> = null
        .iter()
        .map(|v| CMatrix::from_column_slice(n, n, v.as_slice()))
        .collect();
    StarAlgebra::from_spanning_set(n, &elements)
}

/// `alg ∩ commutant(alg)`, solved in the algebra's own coordinates.
pub fn center(alg: &StarAlgebra) -> StarAlgebra {
    let k = alg.dim();
    let gens = alg.generating_set();
    let mut gram = linalg::zeros(k);
    for g in &gens {
        let comms: Vec<CMatrix> = alg.basis.iter().map(|b| commutator(g, b)).collect();
        for i in 0..k {
            for j in i..k {
                let v = hs_inner(&comms[i], &comms[j]);
                gram[(i, j)] += v;
                if i != j {
                    gram[(j, i)] += v.conj();
                }
            }
        }
    }
    let (values, vectors) = hermitian_eigen(&gram);
    let scale = values.iter().cloned().fold(0.0, f64::max).max(1.0);
    let elements: Vec<CMatrix> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= RANK_TOL * scale)
        .map(|(j, _)| {
            let coeffs: Vec<Complex64> = vectors.column(j).iter().cloned().collect();
            alg.from_coefficients(&coeffs)
        })
        .collect();
    StarAlgebra::from_spanning_set(alg.ambient_dim, &elements)
        .expect("center elements share the ambient dimension")
}

/// True iff every basis element of `a` commutes with every basis element of `b`.
pub fn kinematic_independence(a: &StarAlgebra, b: &StarAlgebra) -> Result<bool> {
    kinematic_independence_with_tol(a, b, TOL)
}

pub fn kinematic_independence_with_tol(a: &StarAlgebra, b: &StarAlgebra, tol: f64) -> Result<bool> {
    if a.ambient_dim != b.ambient_dim {
        return Err(Error::DimensionMismatch {
            expected: a.ambient_dim,
            found: b.ambient_dim,
        });
    }
    Ok(max_cross_commutator(a, b) <= tol)
}

/// Largest `|[A, B]|_F` over basis pairs.
pub fn max_cross_commutator(a: &StarAlgebra, b: &StarAlgebra) -> f64 {
    let mut worst: f64 = 0.0;
    for x in &a.basis {
        for y in &b.basis {
            worst = worst.max(frobenius(&commutator(x, y)));
        }
    }
    worst
}

/// Outcome of a C*-independence test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub independent: bool,
    /// Largest relative defect `1 - |AB| / (|A| |B|)` observed.
    pub worst_defect: f64,
    pub samples: usize,
    pub projection_pairs: usize,
}

/// Tests `|AB| = |A| |B|` for commuting algebras on random elements and on all
/// pairs of minimal projections.
pub fn cstar_independence(
    a: &StarAlgebra,
    b: &StarAlgebra,
    samples: usize,
    seed: u64,
) -> Result<IndependenceReport> {
    if a.ambient_dim != b.ambient_dim {
        return Err(Error::DimensionMismatch {
            expected: a.ambient_dim,
            found: b.ambient_dim,
        });
    }
    let comm = max_cross_commutator(a, b);
    if comm > TOL {
        return Err(Error::NonCommuting { commutator: comm });
    }
    let defect = |x: &CMatrix, y: &CMatrix| {
        let denom = operator_norm(x) * operator_norm(y);
        if denom == 0.0 {
            0.0
        } else {
            (1.0 - operator_norm(&(x * y)) / denom).abs()
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = a.random_element(&mut rng);
        let y = b.random_element(&mut rng);
        worst = worst.max(defect(&x, &y));
    }
    let pa = wedderburn_decompose(a)?.minimal_projections();
    let pb = wedderburn_decompose(b)?.minimal_projections();
    for p in &pa {
        for q in &pb {
            worst = worst.max(defect(p, q));
        }
    }
    Ok(IndependenceReport {
        independent: worst <= TOL,
        worst_defect: worst,
        samples,
        projection_pairs: pa.len() * pb.len(),
    })
}

/// One simple summand `M_dim ⊗ I_multiplicity`.
#[derive(Debug, Clone)]
pub struct Block {
    pub dim: usize,
    pub multiplicity: usize,
    /// `ambient × (dim * multiplicity)` isometry; `W* X W = x ⊗ I` for algebra elements.
    pub isometry: CMatrix,
}

/// Wedderburn structure: the algebra is unitarily `⊕_k M_{n_k} ⊗ I_{m_k}`.
#[derive(Debug, Clone)]
pub struct BlockStructure {
    pub ambient_dim: usize,
    pub blocks: Vec<Block>,
}

impl BlockStructure {
    /// The change of basis `[W_1 | W_2 | ...]`.
    pub fn unitary(&self) -> CMatrix {
        let mut u = linalg::zeros(self.ambient_dim);
        let mut col = 0;
        for b in &self.blocks {
            let w = b.isometry.ncols();
            u.view_mut((0, col), (self.ambient_dim, w))
                .copy_from(&b.isometry);
            col += w;
        }
        u
    }

    /// `Σ n_k²`.
    pub fn algebra_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim * b.dim).sum()
    }

    /// Block images `x_k` of an algebra element `X = ⊕ x_k ⊗ I`.
    pub fn components(&self, x: &CMatrix) -> Vec<CMatrix> {
        self.blocks
            .iter()
            .map(|b| {
                let inner = b.isometry.adjoint() * x * &b.isometry;
                linalg::partial_trace(&inner, b.dim, b.multiplicity, Side::A)
                    .expect("block dimensions are consistent")
                    / cr(b.multiplicity as f64)
            })
            .collect()
    }

    /// Reduced densities `d_k = Tr_mult(W_k* D W_k)`, so that `Tr(D X) = Σ Tr(d_k x_k)`.
    pub fn compress(&self, density: &CMatrix) -> Vec<CMatrix> {
        self.blocks
            .iter()
            .map(|b| {
                let inner = b.isometry.adjoint() * density * &b.isometry;
                linalg::partial_trace(&inner, b.dim, b.multiplicity, Side::A)
                    .expect("block dimensions are consistent")
            })
            .collect()
    }

    /// `Σ W_k (x_k ⊗ I) W_k*`.
    pub fn assemble(&self, parts: &[CMatrix]) -> CMatrix {
        let mut out = linalg::zeros(self.ambient_dim);
        for (b, x) in self.blocks.iter().zip(parts) {
            let lifted = linalg::kron(x, &identity(b.multiplicity));
            out += &b.isometry * lifted * b.isometry.adjoint();
        }
        out
    }

    /// Trace-preserving conditional expectation onto the algebra.
    pub fn conditional_expectation(&self, density: &CMatrix) -> CMatrix {
        let parts: Vec<CMatrix> = self
            .compress(density)
            .into_iter()
            .zip(&self.blocks)
            .map(|(d, b)| d / cr(b.multiplicity as f64))
            .collect();
        self.assemble(&parts)
    }

    /// Central projections, one per block.
    pub fn central_projections(&self) -> Vec<CMatrix> {
        self.blocks
            .iter()
            .map(|b| &b.isometry * b.isometry.adjoint())
            .collect()
    }

    /// `W_k (e_ii ⊗ I) W_k*` for every block and diagonal matrix unit.
    pub fn minimal_projections(&self) -> Vec<CMatrix> {
        let mut out = Vec::new();
        for b in &self.blocks {
            for i in 0..b.dim {
                let e = linalg::kron(
                    &linalg::matrix_unit(b.dim, i, i),
                    &identity(b.multiplicity),
                );
                out.push(&b.isometry * e * b.isometry.adjoint());
            }
        }
        out
    }

    /// Worst deviation of a conjugated basis element from the `⊕ x_k ⊗ I` shape.
    pub fn residual(&self, alg: &StarAlgebra) -> f64 {
        alg.basis()
            .iter()
            .map(|x| frobenius(&(x - self.assemble(&self.components(x)))))
            .fold(0.0, f64::max)
    }
}

const DECOMPOSE_ATTEMPTS: u64 = 6;

fn random_real_combination(elements: &[CMatrix], rng: &mut ChaCha8Rng) -> CMatrix {
    let n = elements[0].nrows();
    let mut h = linalg::zeros(n);
    for e in elements {
        let r: f64 = rng.sample(StandardNormal);
        h += e * cr(r);
    }
    h
}

/// Eigenvector columns of `h` grouped by clustered eigenvalue.
fn eigen_clusters(h: &CMatrix, context: &'static str) -> Result<Vec<CMatrix>> {
    let (values, vectors) = hermitian_eigen(h);
    let clusters = cluster_sorted(&values, context)?;
    Ok(clusters
        .into_iter()
        .map(|r| vectors.columns(r.start, r.len()).into_owned())
        .collect())
}

/// Finite-dimensional structure theorem, computed numerically.
///
/// Minimal central projections come from the spectrum of a generic central
/// self-adjoint element. Inside each central block a generic self-adjoint
/// element yields the diagonal matrix units, and compressed algebra elements
/// supply the off-diagonal partial isometries used to align the multiplicity
/// spaces.
pub fn wedderburn_decompose(alg: &StarAlgebra) -> Result<BlockStructure> {
    let z = center(alg);
    let zh = z.hermitian_basis();
    let mut last_err = None;
    for attempt in 0..DECOMPOSE_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5745_4444 + attempt);
        let h = random_real_combination(&zh, &mut rng);
        let central = match eigen_clusters(&h, "central projections") {
            Ok(c) if c.len() == z.dim() => c,
            Ok(c) => {
                last_err = Some(Error::Numerical(format!(
                    "found {} central clusters for a {}-dimensional center",
                    c.len(),
                    z.dim()
                )));
                continue;
            }
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let mut blocks = Vec::with_capacity(central.len());
        let mut failed = None;
        for q in &central {
            match decompose_central_block(alg, q, &mut rng) {
                Ok(b) => blocks.push(b),
                Err(e) => {
                    failed = Some(e);
                    break;
                }
            }
        }
        if let Some(e) = failed {
            last_err = Some(e);
            continue;
        }
        let structure = BlockStructure {
            ambient_dim: alg.ambient_dim(),
            blocks,
        };
        if structure.algebra_dim() != alg.dim() {
            last_err = Some(Error::Numerical(format!(
                "block dimensions sum to {} but the algebra has dimension {}",
                structure.algebra_dim(),
                alg.dim()
            )));
            continue;
        }
        let residual = structure.residual(alg);
        if residual > TOL.sqrt() {
            last_err = Some(Error::Numerical(format!(
                "block residual {residual:e} after decomposition"
            )));
            continue;
        }
        return Ok(structure);
    }
    Err(last_err.unwrap_or_else(|| Error::Numerical("decomposition failed".into())))
}

fn decompose_central_block(alg: &StarAlgebra, q: &CMatrix, rng: &mut ChaCha8Rng) -> Result<Block> {
    let rank = q.ncols();
    let qd = q.adjoint();
    let compressed: Vec<CMatrix> = alg.basis().iter().map(|b| &qd * b * q).collect();

    let k = compressed.len();
    let gram = CMatrix::from_fn(k, k, |i, j| hs_inner(&compressed[i], &compressed[j]));
    let block_dim_sq = psd_rank(&linalg::eigenvalues_hermitian(&gram), "block dimension")?;
    let n = (block_dim_sq as f64).sqrt().round() as usize;
    if n * n != block_dim_sq || n == 0 || rank % n != 0 {
        return Err(Error::Numerical(format!(
            "central block of rank {rank} carries a {block_dim_sq}-dimensional algebra"
        )));
    }
    let m = rank / n;

    let mut herm = Vec::with_capacity(2 * k);
    for c in &compressed {
        herm.push(linalg::hermitian_part(c));
        herm.push(linalg::antihermitian_part(c));
    }
    let h = random_real_combination(&herm, rng);
    let minimal = eigen_clusters(&h, "minimal projections")?;
    if minimal.len() != n || minimal.iter().any(|f| f.ncols() != m) {
        return Err(Error::Numerical(format!(
            "expected {n} minimal projections of rank {m} in a central block"
        )));
    }

    let first = &minimal[0];
    let mut aligned = Vec::with_capacity(n);
    aligned.push(first.clone());
    for f in &minimal[1..] {
        // E_1 C E_i is proportional to the matrix unit e_1i ⊗ I for some C in the algebra.
        let best = compressed
            .iter()
            .map(|c| first.adjoint() * c * f)
            .max_by(|x, y| frobenius(x).total_cmp(&frobenius(y)))
            .expect("block algebra is nonempty");
        let scale = frobenius(&best) / (m as f64).sqrt();
        if scale < RANK_TOL {
            return Err(Error::Numerical(
                "no partial isometry links two minimal projections".into(),
            ));
        }
        let t = best / cr(scale);
        aligned.push(f * t.adjoint());
    }

    let mut columns = linalg::CMatrix::zeros(rank, rank);
    for (i, g) in aligned.iter().enumerate() {
        for s in 0..m {
            columns.set_column(i * m + s, &g.column(s));
        }
    }
    Ok(Block {
        dim: n,
        multiplicity: m,
        isometry: q * columns,
    })
}

/// JSON form of an algebra: its generator list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgebraJson {
    pub ambient_dim: usize,
    pub generators: Vec<MatrixJson>,
}

impl From<&StarAlgebra> for AlgebraJson {
    fn from(a: &StarAlgebra) -> Self {
        AlgebraJson {
            ambient_dim: a.ambient_dim,
            generators: a.generators.iter().map(MatrixJson::from).collect(),
        }
    }
}

impl TryFrom<AlgebraJson> for StarAlgebra {
    type Error = Error;

    fn try_from(j: AlgebraJson) -> Result<Self> {
        let gens = j
            .generators
            .into_iter()
            .map(CMatrix::try_from)
            .collect::<Result<Vec<_>>>()?;
        generate_algebra(&gens, j.ambient_dim)
    }
}

impl Serialize for StarAlgebra {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        AlgebraJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for StarAlgebra {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        StarAlgebra::try_from(AlgebraJson::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}
