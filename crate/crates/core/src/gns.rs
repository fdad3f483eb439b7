//! GNS representations, irreducibility, ambiguous mixtures and Schmidt forms.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{commutant, wedderburn_decompose, StarAlgebra};
use crate::error::{Error, Result};
use crate::linalg::{
    self, commutator, cr, frobenius, hermitian_eigen, CMatrix, CVector, MatrixJson, EXACT_TOL, TOL,
};
use crate::states::{Bipartition, State};

/// `(π_ρ, H_ρ, Ω_ρ)` for a state on a concrete algebra.
///
/// The carrier is the algebra modulo the null space of `<A, B> = ρ(A* B)`,
/// written in coordinates where that form is the standard inner product.
#[derive(Debug, Clone)]
pub struct GnsTriple {
    pub carrier_dim: usize,
    /// `π(B_j)` for each basis element `B_j` of the algebra.
    pub rep: Vec<CMatrix>,
    pub cyclic: CVector,
    algebra: StarAlgebra,
    /// Algebra coefficients -> carrier vector (the quotient map).
    embed: CMatrix,
    /// Carrier vector -> coefficients of a representative in the algebra.
    lift: CMatrix,
}

impl GnsTriple {
    pub fn algebra(&self) -> &StarAlgebra {
        &self.algebra
    }

    fn coeff_vector(&self, x: &CMatrix) -> CVector {
        CVector::from_vec(self.algebra.coefficients(x))
    }

    /// `π(X)` for any element of the algebra.
    pub fn represent(&self, x: &CMatrix) -> CMatrix {
        let coeffs = self.algebra.coefficients(x);
        let mut out = linalg::zeros(self.carrier_dim);
        for (p, c) in self.rep.iter().zip(coeffs) {
            out += p * c;
        }
        out
    }

    /// The class `[X]` of an algebra element in the carrier, i.e. `π(X) Ω`.
    pub fn vector_of(&self, x: &CMatrix) -> CVector {
        &self.embed * self.coeff_vector(x)
    }

    /// An algebra element `X` with `[X] = v`.
    pub fn element_of(&self, v: &CVector) -> CMatrix {
        let coeffs = &self.lift * v;
        self.algebra.from_coefficients(coeffs.as_slice())
    }

    /// Worst residual of `π` being a *-homomorphism on basis pairs.
    pub fn homomorphism_residual(&self) -> f64 {
        let basis = self.algebra.basis();
        let mut worst: f64 = 0.0;
        for (i, a) in basis.iter().enumerate() {
            worst = worst.max(frobenius(&(self.represent(&a.adjoint()) - self.rep[i].adjoint())));
            for (j, b) in basis.iter().enumerate() {
                let lhs = self.represent(&(a * b));
                worst = worst.max(frobenius(&(lhs - &self.rep[i] * &self.rep[j])));
            }
        }
        worst
    }

    /// `max_j |ρ(B_j) - <Ω, π(B_j) Ω>|`.
    pub fn state_residual(&self, rho: &State) -> f64 {
        self.algebra
            .basis()
            .iter()
            .zip(&self.rep)
            .map(|(b, p)| {
                let v = self.cyclic.dotc(&(p * &self.cyclic));
                (rho.expect(b) - v).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Dimension of `span{π(B_j) Ω}`; equals `carrier_dim` for a cyclic vector.
    pub fn cyclic_span_dim(&self) -> usize {
        let vectors: Vec<CVector> = self.rep.iter().map(|p| p * &self.cyclic).collect();
        let k = vectors.len();
        let gram = CMatrix::from_fn(k, k, |i, j| vectors[i].dotc(&vectors[j]));
        linalg::psd_rank(&linalg::eigenvalues_hermitian(&gram), "cyclic span").unwrap_or(0)
    }
}

#[derive(Serialize)]
struct GnsJson {
    carrier_dim: usize,
    rep: Vec<MatrixJson>,
    #[serde(with = "linalg::serde_vector")]
    cyclic: CVector,
}

impl Serialize for GnsTriple {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GnsJson {
            carrier_dim: self.carrier_dim,
            rep: self.rep.iter().map(MatrixJson::from).collect(),
            cyclic: self.cyclic.clone(),
        }
        .serialize(s)
    }
}

pub fn gns_construct(alg: &StarAlgebra, rho: &State) -> Result<GnsTriple> {
    if rho.dim() != alg.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: alg.ambient_dim(),
            found: rho.dim(),
        });
    }
    let basis = alg.basis();
    let k = basis.len();
    let gram = CMatrix::from_fn(k, k, |i, j| rho.expect(&(basis[i].adjoint() * &basis[j])));
    let (values, vectors) = hermitian_eigen(&gram);
    let rank = linalg::psd_rank(&values, "GNS form")?;
    if rank == 0 {
        return Err(Error::Numerical("GNS form vanishes identically".into()));
    }
    let kept: Vec<usize> = (k - rank..k).collect();

    // embed = Λ^½ V_r*, lift = V_r Λ^{-½}
    let mut embed = CMatrix::zeros(rank, k);
    let mut lift = CMatrix::zeros(k, rank);
    for (row, &col) in kept.iter().enumerate() {
        let s = values[col].sqrt();
        for j in 0..k {
            embed[(row, j)] = vectors[(j, col)].conj() * s;
            lift[(j, row)] = vectors[(j, col)] / s;
        }
    }

    let rep = basis
        .iter()
        .map(|a| {
            // left multiplication by `a` in basis coordinates
            let mut left = CMatrix::zeros(k, k);
            for (j, b) in basis.iter().enumerate() {
                let c = alg.coefficients(&(a * b));
                for (i, ci) in c.into_iter().enumerate() {
                    left[(i, j)] = ci;
                }
            }
            &embed * left * &lift
        })
        .collect();

    let id_coeffs = CVector::from_vec(alg.coefficients(&linalg::identity(alg.ambient_dim())));
    let cyclic = &embed * id_coeffs;
    Ok(GnsTriple {
        carrier_dim: rank,
        rep,
        cyclic,
        algebra: alg.clone(),
        embed,
        lift,
    })
}

/// True iff the commutant of `π(alg)` in the carrier is one-dimensional.
pub fn is_irreducible(g: &GnsTriple) -> Result<bool> {
    if g.carrier_dim == 1 {
        return Ok(true);
    }
    let image = StarAlgebra::from_spanning_set(g.carrier_dim, &g.rep)?;
    Ok(commutant(&image)?.dim() == 1)
}

/// Purity of the state `rho` restricted to `alg`: its block-reduced densities are
/// supported in exactly one Wedderburn block, with rank one there.
pub fn is_pure_on(rho: &State, alg: &StarAlgebra) -> Result<bool> {
    let blocks = wedderburn_decompose(alg)?;
    let parts = blocks.compress(rho.density());
    let supported: Vec<&CMatrix> = parts.iter().filter(|d| d.trace().re > TOL).collect();
    if supported.len() != 1 {
        return Ok(false);
    }
    let values = linalg::eigenvalues_hermitian(supported[0]);
    let second = if values.len() >= 2 {
        values[values.len() - 2]
    } else {
        0.0
    };
    Ok(second <= TOL)
}

/// Two equal-weight decompositions of one mixed state into distinct pure states.
#[derive(Debug, Clone, Serialize)]
pub struct AmbiguousMixture {
    pub omega1: State,
    pub omega2: State,
    pub omega_plus: State,
    pub omega_minus: State,
    /// Orthonormal carrier vectors `x_1 = Ω`, `x_2`.
    #[serde(with = "linalg::serde_vector")]
    pub x1: CVector,
    #[serde(with = "linalg::serde_vector")]
    pub x2: CVector,
    /// Projections onto `x_1` and `2^{-½}(x_1 + x_2)` in the carrier.
    #[serde(with = "linalg::serde_matrix")]
    pub p1: CMatrix,
    #[serde(with = "linalg::serde_matrix")]
    pub p_plus: CMatrix,
    /// Ambient vectors realizing `ω_1`, `ω_2`.
    #[serde(with = "linalg::serde_vector")]
    pub phi1: CVector,
    #[serde(with = "linalg::serde_vector")]
    pub phi2: CVector,
    #[serde(skip)]
    pub gns: Option<GnsTriple>,
}

impl AmbiguousMixture {
    /// `½(ω_1 + ω_2)`.
    pub fn mixture(&self) -> State {
        State::mixture(&[(0.5, &self.omega1), (0.5, &self.omega2)])
            .expect("components share a dimension")
    }

    /// `|½(ω_1 + ω_2) - ½(ω_+ + ω_-)|_F`.
    pub fn mixture_residual(&self) -> f64 {
        let a = (self.omega1.density() + self.omega2.density()) * cr(0.5);
        let b = (self.omega_plus.density() + self.omega_minus.density()) * cr(0.5);
        frobenius(&(a - b))
    }

    pub fn states(&self) -> [&State; 4] {
        [
            &self.omega1,
            &self.omega2,
            &self.omega_plus,
            &self.omega_minus,
        ]
    }

    pub fn ambient_dim(&self) -> usize {
        self.phi1.len()
    }

    /// `φ_± = 2^{-½}(φ_1 ± φ_2)`.
    pub fn phi_plus_minus(&self) -> (CVector, CVector) {
        let s = cr(std::f64::consts::FRAC_1_SQRT_2);
        ((&self.phi1 + &self.phi2) * s, (&self.phi1 - &self.phi2) * s)
    }

    /// Qubit realization: `ω_1,2 = |0>, |1>` and `ω_± = |±>` on `M_2`.
    pub fn qubit() -> Self {
        from_orthonormal_pair(&StarAlgebra::full(2), &linalg::ket(2, 0), &linalg::ket(2, 1))
            .expect("computational basis states of M_2 form an ambiguous pair")
    }
}

fn assemble_mixture(
    g: GnsTriple,
    psi: &CVector,
    x2: CVector,
) -> Result<AmbiguousMixture> {
    let x1 = g.cyclic.clone();
    let overlap = x1.dotc(&x2).norm();
    if overlap > TOL || (x2.norm() - 1.0).abs() > TOL {
        return Err(Error::Numerical(format!(
            "carrier vectors are not orthonormal (overlap {overlap:e})"
        )));
    }
    let phi1 = g.element_of(&x1) * psi;
    let phi2 = g.element_of(&x2) * psi;
    let s = cr(std::f64::consts::FRAC_1_SQRT_2);
    let xp = (&x1 + &x2) * s;
    let phi_p = (&phi1 + &phi2) * s;
    let phi_m = (&phi1 - &phi2) * s;
    Ok(AmbiguousMixture {
        omega1: State::pure(&phi1),
        omega2: State::pure(&phi2),
        omega_plus: State::pure(&phi_p),
        omega_minus: State::pure(&phi_m),
        p1: linalg::projector(&x1),
        p_plus: linalg::projector(&xp),
        x1,
        x2,
        phi1,
        phi2,
        gns: Some(g),
    })
}

/// Builds the mixture from two orthonormal ambient vectors whose vector states
/// are pure on `alg` and lie in the same irreducible block.
pub fn from_orthonormal_pair(
    alg: &StarAlgebra,
    phi1: &CVector,
    phi2: &CVector,
) -> Result<AmbiguousMixture> {
    let rho = State::pure(phi1);
    let g = gns_construct(alg, &rho)?;
    // find X in alg with X φ_1 = φ_2 by least squares over the basis
    let n = alg.ambient_dim();
    let k = alg.dim();
    let mut system = CMatrix::zeros(n, k);
    for (j, b) in alg.basis().iter().enumerate() {
        system.set_column(j, &(b * phi1));
    }
    let svd = system.svd(true, true);
    let coeffs = svd
        .solve(phi2, EXACT_TOL)
        .map_err(|e| Error::Numerical(e.to_string()))?;
    let x = alg.from_coefficients(coeffs.as_slice());
    let miss = (&x * phi1 - phi2).norm();
    if miss > TOL {
        return Err(Error::Numerical(format!(
            "second vector is not reachable from the first within the algebra (residual {miss:e})"
        )));
    }
    let x2 = g.vector_of(&x);
    assemble_mixture(g, phi1, x2)
}

/// Pure-state search budget before the deterministic eigenvector fallback.
pub const PURE_STATE_ATTEMPTS: usize = 1000;
/// Minimum `|ρ([A, B])|` accepted as a witness.
pub const COMMUTATOR_WITNESS: f64 = 1e-6;

/// Constructs an ambiguous mixture on a nonabelian algebra.
///
/// Picks the basis pair with the largest commutator, searches for a pure state
/// `ρ` with `ρ([A, B]) ≠ 0`, and splits the GNS carrier of `ρ` into `x_1 = Ω`
/// and an orthogonal unit vector `x_2`.
pub fn ambiguous_mixture(alg: &StarAlgebra, seed: u64) -> Result<AmbiguousMixture> {
    let basis = alg.basis();
    let mut best = (0.0, 0, 0);
    for i in 0..basis.len() {
        for j in i + 1..basis.len() {
            let c = frobenius(&commutator(&basis[i], &basis[j]));
            if c > best.0 {
                best = (c, i, j);
            }
        }
    }
    if best.0 <= TOL {
        return Err(Error::AbelianAlgebra);
    }
    let comm = commutator(&basis[best.1], &basis[best.2]);
    let blocks = wedderburn_decompose(alg)?;
    let comm_parts = blocks.components(&comm);

    // a vector state W_k (v ⊗ e_0) is pure on the algebra
    let lift = |k: usize, v: &CVector| -> CVector {
        let b = &blocks.blocks[k];
        let e0 = linalg::ket(b.multiplicity, 0);
        &b.isometry * linalg::kron_vec(v, &e0)
    };
    let witness = |k: usize, v: &CVector| -> f64 { v.dotc(&(&comm_parts[k] * v)).norm() };

    let mut found = None;
    for trial in 0..PURE_STATE_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let k = rng.random_range(0..blocks.blocks.len());
        let v = linalg::random_unit_vector(blocks.blocks[k].dim, &mut rng);
        if witness(k, &v) > COMMUTATOR_WITNESS {
            found = Some(lift(k, &v));
            break;
        }
    }
    if found.is_none() {
        // eigenvectors of i[A, B] inside each block
        let mut top = (0.0, None);
        for (k, c) in comm_parts.iter().enumerate() {
            let ic = c * Complex64::new(0.0, 1.0);
            let (values, vectors) = hermitian_eigen(&ic);
            for (j, &v) in values.iter().enumerate() {
                if v.abs() > top.0 {
                    top = (v.abs(), Some(lift(k, &vectors.column(j).into_owned())));
                }
            }
        }
        if top.0 > COMMUTATOR_WITNESS {
            found = top.1;
        }
    }
    let psi = found.ok_or_else(|| {
        Error::SearchFailed(format!(
            "no pure state separates the commutator (|[A,B]|_F = {:e}) after {} random trials and the eigenvector scan",
            best.0, PURE_STATE_ATTEMPTS
        ))
    })?;

    let rho = State::pure(&psi);
    let g = gns_construct(alg, &rho)?;
    if g.carrier_dim < 2 {
        return Err(Error::Numerical(
            "GNS carrier of a commutator witness is one-dimensional".into(),
        ));
    }
    // x_2: the carrier basis vector least aligned with Ω, orthonormalized against it
    let omega = g.cyclic.clone();
    let x2 = (0..g.carrier_dim)
        .map(|i| {
            let e = linalg::ket(g.carrier_dim, i);
            let v = &e - &omega * omega.dotc(&e);
            let n = v.norm();
            (n, v)
        })
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(n, v)| v / cr(n))
        .expect("carrier is nonempty");
    assemble_mixture(g, &psi, x2)
}

/// `Ψ = Σ a_k g_k ⊗ f_k` with `a_k > 0` descending.
#[derive(Debug, Clone, Serialize)]
pub struct SchmidtDecomposition {
    pub coefficients: Vec<f64>,
    #[serde(skip)]
    pub left: Vec<CVector>,
    #[serde(skip)]
    pub right: Vec<CVector>,
}

impl SchmidtDecomposition {
    pub fn reconstruct(&self) -> CVector {
        let n = self.left[0].len() * self.right[0].len();
        let mut out = CVector::zeros(n);
        for ((a, g), f) in self.coefficients.iter().zip(&self.left).zip(&self.right) {
            out += linalg::kron_vec(g, f) * cr(*a);
        }
        out
    }
}

pub fn schmidt_decompose(psi: &CVector, bip: Bipartition) -> Result<SchmidtDecomposition> {
    if psi.len() != bip.total() {
        return Err(Error::DimensionMismatch {
            expected: bip.total(),
            found: psi.len(),
        });
    }
    let m = CMatrix::from_fn(bip.dim_a, bip.dim_b, |a, b| psi[a * bip.dim_b + b]);
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V*");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let mut out = SchmidtDecomposition {
        coefficients: Vec::new(),
        left: Vec::new(),
        right: Vec::new(),
    };
    for i in order {
        let s = svd.singular_values[i];
        if s <= EXACT_TOL {
            continue;
        }
        out.coefficients.push(s);
        out.left.push(u.column(i).into_owned());
        out.right.push(v_t.row(i).transpose());
    }
    Ok(out)
}

/// Random state of an algebra, drawn as a random ambient density (mixed) or a random
/// vector inside one Wedderburn block (pure on the algebra).
pub fn random_state_on<R: Rng + ?Sized>(
    alg: &StarAlgebra,
    pure: bool,
    rng: &mut R,
) -> Result<State> {
    if !pure {
        return Ok(State::random(alg.ambient_dim(), rng));
    }
    let blocks = wedderburn_decompose(alg)?;
    let k = rng.random_range(0..blocks.blocks.len());
    let b = &blocks.blocks[k];
    let v = linalg::random_unit_vector(b.dim, rng);
    let w = linalg::random_unit_vector(b.multiplicity, rng);
    Ok(State::pure(&(&b.isometry * linalg::kron_vec(&v, &w))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ket, kron_vec};

    #[test]
    fn gns_of_pure_state_on_m2_is_the_defining_representation() {
        let alg = StarAlgebra::full(2);
        let rho = State::pure(&ket(2, 0));
        let g = gns_construct(&alg, &rho).unwrap();
        assert_eq!(g.carrier_dim, 2);
        assert!(g.state_residual(&rho) < 1e-12);
        assert!(g.homomorphism_residual() < 1e-10);
        // intertwiner: V|i> = π(E_i0) Ω maps the defining rep onto π
        let mut v = CMatrix::zeros(2, 2);
        for i in 0..2 {
            let col = g.vector_of(&linalg::matrix_unit(2, i, 0));
            v.set_column(i, &col);
        }
        assert!(frobenius(&(v.adjoint() * &v - linalg::identity(2))) < 1e-12);
        for b in alg.basis() {
            assert!(frobenius(&(&v * b - g.represent(b) * &v)) < 1e-12);
        }
        assert!(is_irreducible(&g).unwrap());
    }

    #[test]
    fn gns_of_maximally_mixed_m2_is_left_regular() {
        let alg = StarAlgebra::full(2);
        let rho = State::maximally_mixed(2);
        let g = gns_construct(&alg, &rho).unwrap();
        assert_eq!(g.carrier_dim, 4);
        assert_eq!(g.cyclic_span_dim(), 4);
        let image = StarAlgebra::from_spanning_set(4, &g.rep).unwrap();
        assert_eq!(commutant(&image).unwrap().dim(), 4);
        assert!(!is_irreducible(&g).unwrap());
    }

    #[test]
    fn gns_of_point_mass_is_one_dimensional() {
        let alg = StarAlgebra::diagonal(3);
        let rho = State::pure(&ket(3, 1));
        let g = gns_construct(&alg, &rho).unwrap();
        assert_eq!(g.carrier_dim, 1);
        assert!(is_irreducible(&g).unwrap());
        assert!(g.state_residual(&rho) < 1e-12);
    }

    #[test]
    fn ambiguous_mixture_on_m2() {
        let mix = ambiguous_mixture(&StarAlgebra::full(2), 7).unwrap();
        assert!(mix.mixture_residual() < 1e-9);
        assert!(mix.mixture().distance_hs(&State::maximally_mixed(2)) < 1e-9);
        let p1 = transition_full(&mix.omega1, &mix.omega2);
        assert!(p1.abs() < 1e-9);
        assert!((transition_full(&mix.omega1, &mix.omega_plus) - 0.5).abs() < 1e-9);

        let q = AmbiguousMixture::qubit();
        assert!(q.omega1.distance_hs(&State::pure(&ket(2, 0))) < 1e-12);
        assert!(q.omega2.distance_hs(&State::pure(&ket(2, 1))) < 1e-12);
        let plus = linalg::hadamard() * ket(2, 0);
        assert!(q.omega_plus.distance_hs(&State::pure(&plus)) < 1e-12);
    }

    fn transition_full(a: &State, b: &State) -> f64 {
        crate::states::transition_probability_full(a, b)
    }

    #[test]
    fn ambiguous_mixture_rejects_abelian_algebras() {
        assert!(matches!(
            ambiguous_mixture(&StarAlgebra::diagonal(3), 1),
            Err(Error::AbelianAlgebra)
        ));
    }

    #[test]
    fn ambiguous_mixture_lands_in_the_noncommutative_block() {
        let alg = StarAlgebra::direct_sum(&[StarAlgebra::full(2), StarAlgebra::scalars(1)]);
        let mix = ambiguous_mixture(&alg, 3).unwrap();
        assert!(mix.mixture_residual() < 1e-9);
        for s in mix.states() {
            assert!(s.density()[(2, 2)].norm() < 1e-12);
            assert!(is_pure_on(s, &alg).unwrap());
        }
    }

    #[test]
    fn schmidt_examples() {
        let bip = Bipartition::symmetric(2);
        let prod = kron_vec(&ket(2, 0), &(linalg::hadamard() * ket(2, 1)));
        let s = schmidt_decompose(&prod, bip).unwrap();
        assert_eq!(s.coefficients.len(), 1);
        assert!((s.coefficients[0] - 1.0).abs() < 1e-12);

        let bell = (kron_vec(&ket(2, 0), &ket(2, 0)) + kron_vec(&ket(2, 1), &ket(2, 1)))
            / cr(2f64.sqrt());
        let s = schmidt_decompose(&bell, bip).unwrap();
        assert_eq!(s.coefficients.len(), 2);
        for a in &s.coefficients {
            assert!((a - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        }
        assert!((s.reconstruct() - bell).norm() < 1e-12);
    }

    #[test]
    fn schmidt_matches_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let psi = linalg::random_unit_vector(9, &mut rng);
        let s = schmidt_decompose(&psi, Bipartition::symmetric(3)).unwrap();
        assert!((s.reconstruct() - &psi).norm() < 1e-10);
        // oracle: eigenvalues of the reduced density are the squared coefficients
        let reduced = linalg::partial_trace(&linalg::projector(&psi), 3, 3, linalg::Side::A).unwrap();
        let mut ev: Vec<f64> = linalg::eigenvalues_hermitian(&reduced);
        ev.reverse();
        for (a, e) in s.coefficients.iter().zip(ev) {
            assert!((a * a - e).abs() < 1e-12);
        }
        for w in s.coefficients.windows(2) {
            assert!(w[0] >= w[1]);
        }
        for i in 0..s.left.len() {
            for j in 0..s.left.len() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((s.left[i].dotc(&s.left[j]).re - expect).abs() < 1e-12);
                assert!((s.right[i].dotc(&s.right[j]).re - expect).abs() < 1e-12);
            }
        }
    }
}
