//! States, effects and completely positive operations.
//!
//! A state is a density matrix `D` acting as `A -> Tr(D A)`. Channels are
//! Kraus families: the Heisenberg action is `A -> Σ K_i* A K_i` and the
//! Schrödinger action is `D -> Σ K_i D K_i*`, renormalized for selective
//! operations.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{wedderburn_decompose, StarAlgebra};
use crate::error::{Error, Result};
use crate::linalg::{
    self, cr, frobenius, identity, kron, psd_sqrt, CMatrix, CVector, MatrixJson, Side, EXACT_TOL,
    TOL,
};

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    density: CMatrix,
}

impl State {
    /// Validates Hermiticity, positivity and unit trace within `TOL`.
    pub fn new(density: CMatrix) -> Result<Self> {
        if density.nrows() != density.ncols() || density.nrows() == 0 {
            return Err(Error::InvalidState("density must be square and nonempty".into()));
        }
        if density.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entries".into()));
        }
        if !linalg::is_hermitian(&density, TOL) {
            return Err(Error::InvalidState("density is not Hermitian".into()));
        }
        let tr = density.trace();
        if (tr.re - 1.0).abs() > TOL || tr.im.abs() > TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let lowest = linalg::eigenvalues_hermitian(&density)[0];
        if lowest < -TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {lowest:e}"
            )));
        }
        Ok(State {
            density: linalg::hermitian_part(&density),
        })
    }

    /// Vector state `|v><v| / <v, v>`.
    pub fn pure(v: &CVector) -> Self {
        let n = v.norm();
        let u = v / cr(n);
        State {
            density: linalg::projector(&u),
        }
    }

    pub fn maximally_mixed(n: usize) -> Self {
        State {
            density: identity(n) / cr(n as f64),
        }
    }

    /// Diagonal state with the given probability weights.
    pub fn diagonal(weights: &[f64]) -> Result<Self> {
        State::new(linalg::diag(weights))
    }

    /// Convex combination `Σ w_i ρ_i`.
    pub fn mixture(parts: &[(f64, &State)]) -> Result<Self> {
        let n = parts
            .first()
            .map(|(_, s)| s.dim())
            .ok_or_else(|| Error::InvalidState("empty mixture".into()))?;
        let mut d = linalg::zeros(n);
        for (w, s) in parts {
            if s.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: s.dim(),
                });
            }
            d += &s.density * cr(*w);
        }
        State::new(d)
    }

    pub fn density(&self) -> &CMatrix {
        &self.density
    }

    pub fn dim(&self) -> usize {
        self.density.nrows()
    }

    /// `ρ(A) = Tr(D A)`.
    pub fn expect(&self, a: &CMatrix) -> Complex64 {
        // Tr(D A) = Σ_ij D_ij A_ji
        let n = self.dim();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.density[(i, j)] * a[(j, i)];
            }
        }
        acc
    }

    /// Product state on `C^n ⊗ C^m`.
    pub fn tensor(&self, other: &State) -> State {
        State {
            density: kron(&self.density, &other.density),
        }
    }

    /// `Tr(D²)`.
    pub fn purity(&self) -> f64 {
        linalg::hs_inner(&self.density, &self.density).re
    }

    /// Frobenius distance between densities.
    pub fn distance_hs(&self, other: &State) -> f64 {
        frobenius(&(&self.density - &other.density))
    }

    /// `ρ_U = U ρ U*`, the unitarily transported state.
    pub fn transported(&self, u: &CMatrix) -> State {
        State {
            density: u * &self.density * u.adjoint(),
        }
    }

    pub(crate) fn from_density_unchecked(density: CMatrix) -> Self {
        State {
            density: linalg::hermitian_part(&density),
        }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> State {
        State::from_density_unchecked(linalg::random_density(n, n, rng))
    }

    pub fn random_pure<R: Rng + ?Sized>(n: usize, rng: &mut R) -> State {
        State::pure(&linalg::random_unit_vector(n, rng))
    }
}

impl From<State> for MatrixJson {
    fn from(s: State) -> Self {
        MatrixJson::from(&s.density)
    }
}

impl TryFrom<MatrixJson> for State {
    type Error = Error;
    fn try_from(j: MatrixJson) -> Result<Self> {
        State::new(CMatrix::try_from(j)?)
    }
}

impl Serialize for State {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(&self.density).serialize(s)
    }
}

impl<'de> Deserialize<'de> for State {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        State::try_from(MatrixJson::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// A positive operator below the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Effect {
    matrix: CMatrix,
}

impl Effect {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !linalg::is_hermitian(&matrix, TOL) {
            return Err(Error::InvalidEffect("not Hermitian".into()));
        }
        let values = linalg::eigenvalues_hermitian(&matrix);
        let (lo, hi) = (values[0], values[values.len() - 1]);
        if lo < -TOL || hi > 1.0 + TOL {
            return Err(Error::InvalidEffect(format!(
                "spectrum [{lo}, {hi}] leaves [0, 1]"
            )));
        }
        Ok(Effect {
            matrix: linalg::hermitian_part(&matrix),
        })
    }

    /// Like [`Effect::new`], additionally requiring membership in `alg`.
    pub fn in_algebra(matrix: CMatrix, alg: &StarAlgebra) -> Result<Self> {
        if !alg.contains(&matrix, TOL) {
            return Err(Error::InvalidEffect(format!(
                "membership residual {:e} in owning algebra",
                alg.residual(&matrix)
            )));
        }
        Effect::new(matrix)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `I - E`.
    pub fn complement(&self) -> Effect {
        Effect {
            matrix: identity(self.dim()) - &self.matrix,
        }
    }

    /// `|E² - E|_F`.
    pub fn projection_residual(&self) -> f64 {
        frobenius(&(&self.matrix * &self.matrix - &self.matrix))
    }
}

/// A completely positive map given by Kraus operators.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    kraus: Vec<CMatrix>,
    selective: bool,
}

impl Channel {
    /// Validates `Σ K_i* K_i <= I` and classifies the operation as (non)selective.
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        let n = kraus
            .first()
            .ok_or_else(|| Error::InvalidChannel("empty Kraus family".into()))?
            .ncols();
        let mut sum = linalg::zeros(n);
        for k in &kraus {
            if k.ncols() != n || k.nrows() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: k.nrows(),
                });
            }
            sum += k.adjoint() * k;
        }
        let top = *linalg::eigenvalues_hermitian(&sum).last().unwrap();
        if top > 1.0 + TOL {
            return Err(Error::InvalidChannel(format!(
                "Σ K*K has eigenvalue {top} > 1"
            )));
        }
        let selective = frobenius(&(sum - identity(n))) > TOL;
        Ok(Channel { kraus, selective })
    }

    pub fn identity(n: usize) -> Self {
        Channel {
            kraus: vec![identity(n)],
            selective: false,
        }
    }

    /// Single-Kraus channel `D -> U D U*`.
    pub fn unitary(u: &CMatrix) -> Result<Self> {
        let n = u.nrows();
        let r = frobenius(&(u.adjoint() * u - identity(n)));
        if r > TOL {
            return Err(Error::InvalidChannel(format!("not unitary (residual {r:e})")));
        }
        Ok(Channel {
            kraus: vec![u.clone()],
            selective: false,
        })
    }

    /// Random nonselective channel with `rank` Kraus operators (Haar isometry).
    pub fn random<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> Self {
        let u = linalg::random_unitary(n * rank, rng);
        let kraus = (0..rank)
            .map(|j| u.view((j * n, 0), (n, n)).into_owned())
            .collect();
        Channel {
            kraus,
            selective: false,
        }
    }

    pub(crate) fn from_kraus_unchecked(kraus: Vec<CMatrix>, selective: bool) -> Self {
        Channel { kraus, selective }
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn dim(&self) -> usize {
        self.kraus[0].nrows()
    }

    pub fn is_selective(&self) -> bool {
        self.selective
    }

    /// `T(I) = Σ K_i* K_i`.
    pub fn identity_image(&self) -> CMatrix {
        let mut s = linalg::zeros(self.dim());
        for k in &self.kraus {
            s += k.adjoint() * k;
        }
        s
    }

    /// `Σ K_i* A K_i`.
    pub fn heisenberg(&self, a: &CMatrix) -> Result<CMatrix> {
        self.check_dim(a.nrows())?;
        let mut out = linalg::zeros(self.dim());
        for k in &self.kraus {
            let kd = k.adjoint();
            sandwich_into(&mut out, &kd, a);
        }
        Ok(out)
    }

    /// `Σ K_i D K_i*` without normalization.
    pub fn apply_density(&self, d: &CMatrix) -> Result<CMatrix> {
        self.check_dim(d.nrows())?;
        let mut out = linalg::zeros(self.dim());
        for k in &self.kraus {
            sandwich_into(&mut out, k, d);
        }
        Ok(out)
    }

    /// Normalized Schrödinger action; fails with `NullOutcome` when `ρ(T(I)) <= TOL`.
    pub fn schrodinger(&self, rho: &State) -> Result<State> {
        let out = self.apply_density(rho.density())?;
        let p = out.trace().re;
        if p <= TOL {
            return Err(Error::NullOutcome { probability: p });
        }
        if self.selective {
            Ok(State::from_density_unchecked(out / cr(p)))
        } else {
            Ok(State::from_density_unchecked(out))
        }
    }

    /// `self ∘ inner` in the Schrödinger picture: apply `inner` first.
    pub fn compose(&self, inner: &Channel) -> Result<Channel> {
        self.check_dim(inner.dim())?;
        let mut kraus = Vec::with_capacity(self.kraus.len() * inner.kraus.len());
        for k in &self.kraus {
            for l in &inner.kraus {
                kraus.push(k * l);
            }
        }
        Ok(Channel {
            kraus,
            selective: self.selective || inner.selective,
        })
    }

    /// `T ⊗ id_m`, acting on the first factor of `C^n ⊗ C^m`.
    pub fn tensor_identity(&self, m: usize) -> Channel {
        let id = identity(m);
        Channel {
            kraus: self.kraus.iter().map(|k| kron(k, &id)).collect(),
            selective: self.selective,
        }
    }

    /// `id_m ⊗ T`, acting on the second factor of `C^m ⊗ C^n`.
    pub fn identity_tensor(m: usize, t: &Channel) -> Channel {
        let id = identity(m);
        Channel {
            kraus: t.kraus.iter().map(|k| kron(&id, k)).collect(),
            selective: t.selective,
        }
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: n,
            });
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct ChannelJson {
    kraus: Vec<MatrixJson>,
    selective: bool,
}

impl Serialize for Channel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ChannelJson {
            kraus: self.kraus.iter().map(MatrixJson::from).collect(),
            selective: self.selective,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Channel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = ChannelJson::deserialize(d)?;
        let kraus = j
            .kraus
            .into_iter()
            .map(CMatrix::try_from)
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        Channel::new(kraus).map_err(serde::de::Error::custom)
    }
}

/// `out += K M K*`; permutation-like `K` (at most one nonzero per column on
/// average) is handled entrywise, which matters for the 64-dimensional broadcasters.
fn sandwich_into(out: &mut CMatrix, k: &CMatrix, m: &CMatrix) {
    let n = k.nrows();
    let zero = Complex64::new(0.0, 0.0);
    let nonzero: Vec<(usize, usize, Complex64)> = k
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != zero)
        .map(|(idx, v)| (idx % n, idx / n, *v))
        .collect();
    if nonzero.len() <= k.ncols() {
        for &(i, j, v) in &nonzero {
            for &(i2, j2, v2) in &nonzero {
                out[(i, i2)] += v * m[(j, j2)] * v2.conj();
            }
        }
    } else {
        *out += k * m * k.adjoint();
    }
}

pub fn heisenberg_apply(t: &Channel, a: &CMatrix) -> Result<CMatrix> {
    t.heisenberg(a)
}

pub fn schrodinger_apply(t: &Channel, rho: &State) -> Result<State> {
    t.schrodinger(rho)
}

/// Ideal two-outcome measurement `A -> PAP + (I-P)A(I-P)`.
pub fn make_luders(p: &CMatrix) -> Result<Channel> {
    let residual = frobenius(&(p * p - p)) + frobenius(&(p - p.adjoint()));
    if residual > TOL {
        return Err(Error::NotAProjection { residual });
    }
    let n = p.nrows();
    let q = identity(n) - p;
    let kraus: Vec<CMatrix> = [p.clone(), q]
        .into_iter()
        .filter(|k| frobenius(k) > TOL)
        .collect();
    Ok(Channel::from_kraus_unchecked(kraus, false))
}

/// Unsharp two-outcome measurement `A -> E^½ A E^½ + (I-E)^½ A (I-E)^½`.
pub fn make_pov(e: &Effect) -> Result<Channel> {
    make_nonselective(&[e.clone(), e.complement()])
}

/// Nonselective operation with Kraus operators `E_i^½` for a resolution of the identity.
pub fn make_nonselective(effects: &[Effect]) -> Result<Channel> {
    let n = effects
        .first()
        .ok_or_else(|| Error::IncompleteResolution {
            residual: f64::INFINITY,
        })?
        .dim();
    let mut sum = linalg::zeros(n);
    for e in effects {
        if e.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: e.dim(),
            });
        }
        sum += e.matrix();
    }
    let residual = frobenius(&(sum - identity(n)));
    if residual > TOL {
        return Err(Error::IncompleteResolution { residual });
    }
    let kraus = effects
        .iter()
        .map(|e| psd_sqrt(e.matrix(), TOL))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|k| frobenius(k) > EXACT_TOL)
        .collect();
    Ok(Channel::from_kraus_unchecked(kraus, false))
}

fn check_same_dim(rho: &State, omega: &State, alg: &StarAlgebra) -> Result<()> {
    for d in [rho.dim(), omega.dim()] {
        if d != alg.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: alg.ambient_dim(),
                found: d,
            });
        }
    }
    Ok(())
}

/// Functional norm `sup{|ρ(A) - ω(A)| : A ∈ alg, |A| <= 1}`.
///
/// Computed as `Σ_k |d_k - d'_k|_1` over the Wedderburn blocks, where `d_k` are
/// the block-reduced densities.
pub fn state_distance(rho: &State, omega: &State, alg: &StarAlgebra) -> Result<f64> {
    check_same_dim(rho, omega, alg)?;
    let blocks = wedderburn_decompose(alg)?;
    let diff = rho.density() - omega.density();
    Ok(blocks
        .compress(&diff)
        .iter()
        .map(linalg::trace_norm_hermitian)
        .sum::<f64>()
        .min(2.0))
}

/// `1 - |ρ - ω|² / 4`.
pub fn transition_probability(rho: &State, omega: &State, alg: &StarAlgebra) -> Result<f64> {
    let d = state_distance(rho, omega, alg)?;
    Ok(1.0 - 0.25 * d * d)
}

/// Transition probability on the full matrix algebra, without a decomposition.
pub fn transition_probability_full(rho: &State, omega: &State) -> f64 {
    let d = linalg::trace_norm_hermitian(&(rho.density() - omega.density())).min(2.0);
    1.0 - 0.25 * d * d
}

/// The state of `alg` represented by `rho`, as its conditional expectation onto `alg`.
pub fn restrict_to_algebra(rho: &State, alg: &StarAlgebra) -> Result<State> {
    if rho.dim() != alg.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: alg.ambient_dim(),
            found: rho.dim(),
        });
    }
    let blocks = wedderburn_decompose(alg)?;
    Ok(State::from_density_unchecked(
        blocks.conditional_expectation(rho.density()),
    ))
}

/// Unique product state with marginals `omega` on `a` and `rho` on `b`, on the
/// tensor composite `a ⊗ b`.
pub fn product_state(
    omega: &State,
    a: &StarAlgebra,
    rho: &State,
    b: &StarAlgebra,
) -> Result<State> {
    let left = restrict_to_algebra(omega, a)?;
    let right = restrict_to_algebra(rho, b)?;
    Ok(left.tensor(&right))
}

/// A declared tensor split `C^dim_a ⊗ C^dim_b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bipartition {
    pub dim_a: usize,
    pub dim_b: usize,
}

impl Bipartition {
    pub fn new(dim_a: usize, dim_b: usize) -> Self {
        Bipartition { dim_a, dim_b }
    }

    pub fn symmetric(d: usize) -> Self {
        Bipartition { dim_a: d, dim_b: d }
    }

    pub fn total(&self) -> usize {
        self.dim_a * self.dim_b
    }

    /// `A ⊗ I`.
    pub fn lift_a(&self, a: &CMatrix) -> CMatrix {
        kron(a, &identity(self.dim_b))
    }

    /// `I ⊗ B`.
    pub fn lift_b(&self, b: &CMatrix) -> CMatrix {
        kron(&identity(self.dim_a), b)
    }

    /// Alice's full local algebra `M_a ⊗ I`.
    pub fn algebra_a(&self) -> StarAlgebra {
        StarAlgebra::full(self.dim_a).tensor_identity(self.dim_b)
    }

    /// Bob's full local algebra `I ⊗ M_b`.
    pub fn algebra_b(&self) -> StarAlgebra {
        StarAlgebra::identity_tensor(self.dim_a, &StarAlgebra::full(self.dim_b))
    }
}

/// Marginal on one factor (partial trace over the other).
pub fn restrict(rho: &State, bip: Bipartition, side: Side) -> Result<State> {
    let d = linalg::partial_trace(rho.density(), bip.dim_a, bip.dim_b, side)?;
    Ok(State::from_density_unchecked(d))
}

/// True iff `T(B) = B` for every basis element of `b`.
pub fn conveys_no_info(t: &Channel, b: &StarAlgebra) -> Result<bool> {
    Ok(max_signal(t, b)? <= TOL)
}

/// `max_B |T(B) - B|_F` over the basis of `b`; nonselective channels only.
pub fn max_signal(t: &Channel, b: &StarAlgebra) -> Result<f64> {
    if t.is_selective() {
        return Err(Error::SelectiveChannel);
    }
    let mut worst: f64 = 0.0;
    for x in b.basis() {
        worst = worst.max(frobenius(&(t.heisenberg(x)? - x)));
    }
    Ok(worst)
}

/// `σ = Σ λ_i α_i ⊗ β_i`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparableDecomposition {
    pub weights: Vec<f64>,
    pub components: Vec<(State, State)>,
}

impl SeparableDecomposition {
    pub fn new(weights: Vec<f64>, components: Vec<(State, State)>) -> Result<Self> {
        if weights.len() != components.len() || weights.is_empty() {
            return Err(Error::InvalidState(
                "weights and components must be nonempty and of equal length".into(),
            ));
        }
        if weights.iter().any(|&w| w < 0.0) || (weights.iter().sum::<f64>() - 1.0).abs() > TOL {
            return Err(Error::InvalidState("weights must be a probability vector".into()));
        }
        let (da, db) = (components[0].0.dim(), components[0].1.dim());
        if components.iter().any(|(a, b)| a.dim() != da || b.dim() != db) {
            return Err(Error::InvalidState("components have mixed dimensions".into()));
        }
        Ok(SeparableDecomposition {
            weights,
            components,
        })
    }

    pub fn bipartition(&self) -> Bipartition {
        Bipartition::new(self.components[0].0.dim(), self.components[0].1.dim())
    }

    pub fn to_state(&self) -> State {
        let bip = self.bipartition();
        let mut d = linalg::zeros(bip.total());
        for (w, (a, b)) in self.weights.iter().zip(&self.components) {
            d += kron(a.density(), b.density()) * cr(*w);
        }
        State::from_density_unchecked(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, hadamard, ket, pauli_x, pauli_z, projector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn plus() -> CVector {
        hadamard() * ket(2, 0)
    }

    #[test]
    fn heisenberg_examples() {
        let x = pauli_x();
        assert_eq!(Channel::identity(2).heisenberg(&x).unwrap(), x);
        let p = projector(&ket(2, 0));
        let t = make_luders(&p).unwrap();
        assert!(frobenius(&t.heisenberg(&x).unwrap()) < EXACT_TOL);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = linalg::random_unitary(2, &mut rng);
        let t = Channel::unitary(&u).unwrap();
        let expected = u.adjoint() * &x * &u;
        assert!(frobenius(&(t.heisenberg(&x).unwrap() - expected)) < EXACT_TOL);
    }

    #[test]
    fn schrodinger_examples() {
        let mixed = State::maximally_mixed(2);
        let dephase = make_luders(&projector(&ket(2, 0))).unwrap();
        let out = dephase.schrodinger(&mixed).unwrap();
        assert!(out.distance_hs(&mixed) < EXACT_TOL);

        let p = projector(&ket(2, 0));
        let selective = Channel::new(vec![p.clone()]).unwrap();
        assert!(selective.is_selective());
        let rho = State::pure(&plus());
        assert!((rho.expect(&selective.identity_image()).re - 0.5).abs() < EXACT_TOL);
        let out = selective.schrodinger(&rho).unwrap();
        assert!(out.distance_hs(&State::pure(&ket(2, 0))) < EXACT_TOL);

        let orth = State::pure(&ket(2, 1));
        assert!(matches!(
            selective.schrodinger(&orth),
            Err(Error::NullOutcome { .. })
        ));
    }

    #[test]
    fn luders_examples() {
        let id = make_luders(&identity(2)).unwrap();
        assert_eq!(id.kraus().len(), 1);
        assert!(frobenius(&(id.kraus()[0].clone() - identity(2))) < EXACT_TOL);
        let zero = make_luders(&linalg::zeros(2)).unwrap();
        assert_eq!(zero.kraus().len(), 1);
        assert!(frobenius(&(zero.kraus()[0].clone() - identity(2))) < EXACT_TOL);
        let dephase = make_luders(&projector(&ket(2, 0))).unwrap();
        let out = dephase.schrodinger(&State::pure(&plus())).unwrap();
        assert!(out.distance_hs(&State::maximally_mixed(2)) < EXACT_TOL);
        assert!(matches!(
            make_luders(&pauli_x()),
            Err(Error::NotAProjection { .. })
        ));
    }

    #[test]
    fn pov_examples() {
        let p = projector(&ket(2, 0));
        let pov = make_pov(&Effect::new(p.clone()).unwrap()).unwrap();
        let luders = make_luders(&p).unwrap();
        let x = pauli_x();
        assert!(
            frobenius(&(pov.heisenberg(&x).unwrap() - luders.heisenberg(&x).unwrap()))
                < EXACT_TOL
        );

        let half = make_pov(&Effect::new(identity(2) * cr(0.5)).unwrap()).unwrap();
        for k in half.kraus() {
            assert!(frobenius(&(k - identity(2) * cr(0.5f64.sqrt()))) < EXACT_TOL);
        }
        assert!(frobenius(&(half.heisenberg(&x).unwrap() - &x)) < EXACT_TOL);

        // E = diag(0.9, 0.1): off-diagonal entries scale by 2 * sqrt(0.9 * 0.1) = 0.6
        let e = Effect::new(diag(&[0.9, 0.1])).unwrap();
        let t = make_pov(&e).unwrap();
        assert!(frobenius(&(t.heisenberg(&x).unwrap() - &x * cr(0.6))) < EXACT_TOL);
    }

    #[test]
    fn nonselective_examples() {
        let id = make_nonselective(&[Effect::new(identity(2)).unwrap()]).unwrap();
        assert!(frobenius(&(id.heisenberg(&pauli_x()).unwrap() - pauli_x())) < EXACT_TOL);
        let p = projector(&ket(2, 0));
        let pe = Effect::new(p.clone()).unwrap();
        let t = make_nonselective(&[pe.clone(), pe.complement()]).unwrap();
        let l = make_luders(&p).unwrap();
        let y = linalg::pauli_y();
        assert!(frobenius(&(t.heisenberg(&y).unwrap() - l.heisenberg(&y).unwrap())) < EXACT_TOL);
        let e = Effect::new(diag(&[0.3, 0.8])).unwrap();
        assert!(matches!(
            make_nonselective(&[e.clone()]),
            Err(Error::IncompleteResolution { .. })
        ));
        let pov = make_pov(&e).unwrap();
        let ns = make_nonselective(&[e.clone(), e.complement()]).unwrap();
        assert_eq!(pov, ns);
    }

    #[test]
    fn effects_are_validated() {
        assert!(Effect::new(diag(&[1.2, 0.0])).is_err());
        assert!(Effect::new(pauli_x()).is_err());
        let diag_alg = StarAlgebra::diagonal(2);
        assert!(Effect::in_algebra(projector(&plus()), &diag_alg).is_err());
        assert!(Effect::in_algebra(diag(&[0.2, 0.7]), &diag_alg).is_ok());
    }

    #[test]
    fn distance_examples() {
        let m2 = StarAlgebra::full(2);
        let zero = State::pure(&ket(2, 0));
        let one = State::pure(&ket(2, 1));
        let p = State::pure(&plus());
        assert!(state_distance(&zero, &zero, &m2).unwrap().abs() < EXACT_TOL);
        assert!((state_distance(&zero, &one, &m2).unwrap() - 2.0).abs() < EXACT_TOL);
        assert!((state_distance(&zero, &p, &m2).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        // on the diagonal subalgebra |0> and |+> differ only through their populations
        let d = StarAlgebra::diagonal(2);
        assert!((state_distance(&zero, &p, &d).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transition_probability_examples() {
        let m2 = StarAlgebra::full(2);
        let zero = State::pure(&ket(2, 0));
        let p = State::pure(&plus());
        assert!((transition_probability(&zero, &p, &m2).unwrap() - 0.5).abs() < 1e-12);
        assert!((transition_probability(&zero, &zero, &m2).unwrap() - 1.0).abs() < 1e-12);
        let one = State::pure(&ket(2, 1));
        assert!(transition_probability(&zero, &one, &m2).unwrap().abs() < 1e-12);
    }

    #[test]
    fn product_and_restrict_examples() {
        let m2 = StarAlgebra::full(2);
        let mm = State::maximally_mixed(2);
        let prod = product_state(&mm, &m2, &mm, &m2).unwrap();
        assert!(prod.distance_hs(&State::maximally_mixed(4)) < EXACT_TOL);

        let zero = State::pure(&ket(2, 0));
        let p = State::pure(&plus());
        let prod = product_state(&zero, &m2, &p, &m2).unwrap();
        let expected = kron(zero.density(), p.density());
        assert!(frobenius(&(prod.density() - expected)) < EXACT_TOL);
        let bip = Bipartition::symmetric(2);
        assert!(restrict(&prod, bip, Side::A).unwrap().distance_hs(&zero) < EXACT_TOL);
        assert!(restrict(&prod, bip, Side::B).unwrap().distance_hs(&p) < EXACT_TOL);

        // product on a subalgebra uses the compressed representative
        let d = StarAlgebra::diagonal(2);
        let prod = product_state(&p, &d, &zero, &m2).unwrap();
        let expected = kron(&(identity(2) * cr(0.5)), zero.density());
        assert!(frobenius(&(prod.density() - expected)) < EXACT_TOL);

        let bell = (kron_vec2(0, 0) + kron_vec2(1, 1)) / cr(2f64.sqrt());
        let marg = restrict(&State::pure(&bell), bip, Side::B).unwrap();
        assert!(marg.distance_hs(&State::maximally_mixed(2)) < EXACT_TOL);

        let one = State::pure(&ket(2, 1));
        let mix = State::mixture(&[(0.5, &zero.tensor(&zero)), (0.5, &one.tensor(&one))]).unwrap();
        let half = State::mixture(&[(0.5, &zero), (0.5, &one)]).unwrap();
        assert!(restrict(&mix, bip, Side::A).unwrap().distance_hs(&half) < EXACT_TOL);
    }

    fn kron_vec2(a: usize, b: usize) -> CVector {
        linalg::kron_vec(&ket(2, a), &ket(2, b))
    }

    #[test]
    fn no_info_examples() {
        let bip = Bipartition::symmetric(2);
        let b = bip.algebra_b();
        let e = Effect::new(bip.lift_a(&diag(&[0.7, 0.2]))).unwrap();
        assert!(conveys_no_info(&make_pov(&e).unwrap(), &b).unwrap());

        let t = make_luders(&bip.lift_a(&projector(&ket(2, 0)))).unwrap();
        let with_x = crate::algebra::generate_algebra(&[bip.lift_a(&pauli_x())], 4).unwrap();
        assert!(!conveys_no_info(&t, &with_x).unwrap());
        let xa = bip.lift_a(&pauli_x());
        assert!(frobenius(&t.heisenberg(&xa).unwrap()) < EXACT_TOL);

        assert!(conveys_no_info(&Channel::identity(4), &StarAlgebra::full(4)).unwrap());
        let selective = Channel::new(vec![bip.lift_a(&projector(&ket(2, 0)))]).unwrap();
        assert!(matches!(
            conveys_no_info(&selective, &b),
            Err(Error::SelectiveChannel)
        ));
    }

    #[test]
    fn channel_json_round_trip() {
        let t = make_luders(&projector(&ket(2, 0))).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        let back: Channel = serde_json::from_str(&s).unwrap();
        assert_eq!(t, back);
        let z = State::pure(&ket(2, 0));
        let s = serde_json::to_string(&z).unwrap();
        assert!(s.contains("\"dim\":2"));
        assert_eq!(serde_json::from_str::<State>(&s).unwrap(), z);
        let _ = pauli_z();
    }
}
