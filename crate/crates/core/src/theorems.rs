//! Executable checks: no-signaling vs commutation, classical and commuting
//! broadcasting, and a numerical search for broadcasting channels.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{kinematic_independence_with_tol, max_cross_commutator, StarAlgebra};
use crate::error::{Error, Result};
use crate::linalg::{
    self, commutator, cr, frobenius, hermitian_eigen, identity, kron, CMatrix, MatrixJson,
    Side, TOL,
};
use crate::ansatz::{complete_isometry, IsometryAnsatz};
use crate::optimize::minimize_with_gradient;
use crate::states::{make_pov, max_signal, transition_probability_full, Channel, Effect, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Numerical evidence rather than a decision (searches).
    Evidence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub label: String,
    pub matrix: MatrixJson,
}

impl Witness {
    pub fn new(label: impl Into<String>, m: &CMatrix) -> Self {
        Witness {
            label: label.into(),
            matrix: MatrixJson::from(m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub verdict: Verdict,
    pub residuals: BTreeMap<String, f64>,
    pub witnesses: Vec<Witness>,
    pub seed: u64,
    pub trials: usize,
}

impl CheckReport {
    pub fn new(check: &str, seed: u64, trials: usize) -> Self {
        CheckReport {
            check: check.to_string(),
            verdict: Verdict::Pass,
            residuals: BTreeMap::new(),
            witnesses: Vec::new(),
            seed,
            trials,
        }
    }

    pub fn residual(&self, name: &str) -> Option<f64> {
        self.residuals.get(name).copied()
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.residuals.insert(name.to_string(), value);
    }

    pub fn flag(&mut self, name: &str, value: bool) {
        self.set(name, if value { 1.0 } else { 0.0 });
    }

    /// Failed reports carry a witness and every residual is finite.
    pub fn is_well_formed(&self) -> bool {
        (self.verdict != Verdict::Fail || !self.witnesses.is_empty())
            && self.residuals.values().all(|v| v.is_finite())
    }
}

/// Checks both directions of "no effect in `a` signals to `b` iff `a` and `b` commute".
///
/// Commuting pairs: `trials` random effects of `a` must leave every element of `b`
/// fixed under the induced nonselective operation. Noncommuting pairs: a witness
/// effect is built from a spectral projection of a self-adjoint element of `a`
/// that fails to commute with some self-adjoint `B` in `b`.
pub fn check_nosignaling_equivalence(
    a: &StarAlgebra,
    b: &StarAlgebra,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<CheckReport> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: a.ambient_dim(),
            found: b.ambient_dim(),
        });
    }
    let mut report = CheckReport::new("nosignal", seed, trials);
    let independent = kinematic_independence_with_tol(a, b, tol)?;
    report.flag("kinematically_independent", independent);
    report.set("commutator", max_cross_commutator(a, b));

    let signaling = if independent {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        let mut worst_effect = None;
        for _ in 0..trials {
            let e = Effect::in_algebra(a.random_effect(&mut rng), a)?;
            let s = max_signal(&make_pov(&e)?, b)?;
            if s > worst {
                worst = s;
                worst_effect = Some(e);
            }
        }
        report.set("max_signal", worst);
        if worst > tol {
            if let Some(e) = worst_effect {
                report.witnesses.push(Witness::new("effect", e.matrix()));
            }
        }
        worst > tol
    } else {
        let w = signaling_witness(a, b)?;
        report.set("double_commutator", w.double_commutator);
        report.set("max_signal", w.signal);
        report.witnesses.push(Witness::new("effect", w.effect.matrix()));
        report.witnesses.push(Witness::new("observable", &w.observable));
        report.witnesses.push(Witness::new("signal", &w.shifted));
        w.signal > tol
    };
    report.flag("signaling_detected", signaling);
    report.verdict = if signaling != independent {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(report)
}

/// An effect `E` of one algebra and a self-adjoint `B` of another with `T_E(B) != B`.
#[derive(Debug, Clone)]
pub struct SignalingWitness {
    pub effect: Effect,
    pub observable: CMatrix,
    /// `T_E(B) - B`.
    pub shifted: CMatrix,
    pub signal: f64,
    /// `|[E^½, [E^½, B]]|_F`.
    pub double_commutator: f64,
}

fn evaluate_witness(e: Effect, bm: &CMatrix) -> Result<SignalingWitness> {
    let t = make_pov(&e)?;
    let shifted = t.heisenberg(bm)? - bm;
    let root = linalg::psd_sqrt(e.matrix(), TOL)?;
    let dc = frobenius(&commutator(&root, &commutator(&root, bm)));
    Ok(SignalingWitness {
        effect: e,
        observable: bm.clone(),
        signal: frobenius(&shifted),
        shifted,
        double_commutator: dc,
    })
}

/// Builds the best signaling witness for a noncommuting pair of algebras.
pub fn signaling_witness(a: &StarAlgebra, b: &StarAlgebra) -> Result<SignalingWitness> {
    let ha = a.hermitian_basis();
    let hb = b.hermitian_basis();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, x) in ha.iter().enumerate() {
        for (j, y) in hb.iter().enumerate() {
            pairs.push((frobenius(&commutator(x, y)), i, j));
        }
    }
    pairs.sort_by(|p, q| q.0.total_cmp(&p.0));
    let mut best: Option<SignalingWitness> = None;
    for &(norm, i, j) in pairs.iter().take(4) {
        if norm <= TOL {
            break;
        }
        let (x, y) = (&ha[i], &hb[j]);
        let mut candidates = vec![Effect::new(crate::algebra::effect_from_hermitian(x))?];
        // spectral projections of x lie in a; one of them fails to commute with y
        let (values, vectors) = hermitian_eigen(x);
        if let Ok(clusters) = linalg::cluster_sorted(&values, "spectral projection") {
            for r in clusters {
                let mut p = linalg::zeros(x.nrows());
                for k in r {
                    p += linalg::projector(&vectors.column(k).into_owned());
                }
                candidates.push(Effect::new(p)?);
            }
        }
        for e in candidates {
            let w = evaluate_witness(e, y)?;
            if best.as_ref().is_none_or(|b| w.signal > b.signal) {
                best = Some(w);
            }
        }
    }
    best.ok_or(Error::NonCommuting { commutator: 0.0 })
}

/// Broadcaster on `C^x ⊗ C^x` with Kraus family `|x,x><x,y|`.
///
/// In the Heisenberg picture it sends a function `h(x, y)` to `h(x, x)`.
pub fn classical_broadcaster(x_size: usize) -> Channel {
    let n = x_size * x_size;
    let mut kraus = Vec::with_capacity(n);
    for x in 0..x_size {
        for y in 0..x_size {
            let mut k = linalg::zeros(n);
            k[(x * x_size + x, x * x_size + y)] = cr(1.0);
            kraus.push(k);
        }
    }
    Channel::new(kraus).expect("classical broadcaster is trace preserving")
}

/// Permutation channel `(x, y) -> (x, x + y mod x_size)`; clones from ready point 0.
pub fn reversible_classical_clone(x_size: usize) -> Channel {
    let n = x_size * x_size;
    let mut u = linalg::zeros(n);
    for x in 0..x_size {
        for y in 0..x_size {
            u[(x * x_size + (x + y) % x_size, x * x_size + y)] = cr(1.0);
        }
    }
    Channel::unitary(&u).expect("permutation matrices are unitary")
}

/// Largest trace-norm deviation of either output marginal of `T*(ρ ⊗ σ)` from `ρ`.
pub fn broadcast_residual(t: &Channel, rho: &State, sigma: &State) -> Result<f64> {
    let n = rho.dim();
    let out = t.apply_density(&kron(rho.density(), sigma.density()))?;
    let mut worst: f64 = 0.0;
    for side in [Side::A, Side::B] {
        let m = linalg::partial_trace(&out, n, n, side)?;
        worst = worst.max(linalg::trace_norm_hermitian(&(m - rho.density())));
    }
    Ok(worst)
}

/// `min_side F(marginal, ρ)` for `T*(ρ ⊗ σ)`.
pub fn broadcast_fidelity(t: &Channel, rho: &State, sigma: &State) -> Result<f64> {
    let n = rho.dim();
    let out = t.apply_density(&kron(rho.density(), sigma.density()))?;
    let mut worst: f64 = 1.0;
    for side in [Side::A, Side::B] {
        let m = linalg::partial_trace(&out, n, n, side)?;
        worst = worst.min(linalg::fidelity(rho.density(), &m));
    }
    Ok(worst)
}

/// Broadcasts two commuting densities by running the classical broadcaster in a
/// common eigenbasis.
pub fn broadcast_commuting(d0: &State, d1: &State) -> Result<Channel> {
    let n = d0.dim();
    if d1.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: d1.dim(),
        });
    }
    let comm = frobenius(&commutator(d0.density(), d1.density()));
    if comm > TOL {
        return Err(Error::NonCommuting { commutator: comm });
    }
    let u = common_eigenbasis(d0.density(), d1.density())?;
    let uu = kron(&u, &u);
    let kraus = classical_broadcaster(n)
        .kraus()
        .iter()
        .map(|k| &uu * k * uu.adjoint())
        .collect();
    let t = Channel::new(kraus)?;
    let ready = State::pure(&linalg::ket(n, 0));
    for d in [d0, d1] {
        let r = broadcast_residual(&t, d, &ready)?;
        if r > TOL {
            return Err(Error::Numerical(format!(
                "commuting broadcaster misses a marginal by {r:e}"
            )));
        }
    }
    Ok(t)
}

/// Unitary whose columns diagonalize both commuting Hermitian matrices.
fn common_eigenbasis(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let scale = 1.0 + frobenius(a) + frobenius(b);
    let mut worst = f64::INFINITY;
    for t in [0.618_033_988_749_895, 1.324_717_957_244_746, 2.718_281_828_459_045] {
        let (_, u) = hermitian_eigen(&(a + b * cr(t)));
        let off = |m: &CMatrix| {
            let d = u.adjoint() * m * &u;
            let mut s = 0.0;
            for i in 0..d.nrows() {
                for j in 0..d.ncols() {
                    if i != j {
                        s += d[(i, j)].norm_sqr();
                    }
                }
            }
            s.sqrt()
        };
        let r = off(a).max(off(b));
        if r <= TOL * scale {
            return Ok(u);
        }
        worst = worst.min(r);
    }
    Err(Error::Numerical(format!(
        "simultaneous diagonalization left off-diagonal mass {worst:e}"
    )))
}

/// Parameters of the broadcasting-channel search.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SearchConfig {
    pub ansatz_rank: usize,
    pub restarts: usize,
    pub iterations: u64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            ansatz_rank: 4,
            restarts: 20,
            iterations: 400,
            seed: 0,
        }
    }
}

/// Search ansatz: an isometry `C^n -> C^r ⊗ C^n ⊗ C^n` defined on the inputs
/// `|j> ⊗ |0>` (the only vectors the fixed ready state reaches). Completing it to
/// a full isometry yields a trace-preserving channel on `C^n ⊗ C^n`.
#[derive(Debug, Clone, Copy)]
pub struct BroadcastAnsatz {
    pub n: usize,
    pub rank: usize,
    iso: IsometryAnsatz,
}

impl BroadcastAnsatz {
    pub fn new(n: usize, rank: usize) -> Self {
        BroadcastAnsatz {
            n,
            rank,
            iso: IsometryAnsatz::new(rank * n * n, n),
        }
    }

    pub fn num_params(&self) -> usize {
        self.iso.num_params()
    }

    /// Summed squared Frobenius distance of the four output marginals from
    /// their targets, with its gradient.
    pub fn cost_and_gradient(&self, params: &[f64], targets: &[&CMatrix]) -> (f64, Vec<f64>) {
        let (n, big) = (self.n, self.n * self.n);
        let pt = self.iso.eval(params);
        let v = &pt.v;
        let mut cost = 0.0;
        let mut gamma = CMatrix::zeros(v.nrows(), n);
        for target in targets {
            let vx = v * *target;
            let y = &vx * v.adjoint();
            let mut out = linalg::zeros(big);
            for j in 0..self.rank {
                out += y.view((j * big, j * big), (big, big));
            }
            let da = linalg::partial_trace(&out, n, n, Side::A).expect("square") - *target;
            let db = linalg::partial_trace(&out, n, n, Side::B).expect("square") - *target;
            cost += da.norm_squared() + db.norm_squared();
            let g = kron(&da, &identity(n)) + kron(&identity(n), &db);
            for j in 0..self.rank {
                let block = &g * vx.rows(j * big, big) * cr(2.0);
                let mut rows = gamma.rows_mut(j * big, big);
                rows += block;
            }
        }
        (cost, self.iso.pullback(&pt, &gamma))
    }

    pub fn cost(&self, params: &[f64], targets: &[&CMatrix]) -> f64 {
        self.cost_and_gradient(params, targets).0
    }

    /// The trace-preserving channel on `C^n ⊗ C^n` realized by `params`.
    pub fn channel(&self, params: &[f64]) -> Channel {
        let (n, big) = (self.n, self.n * self.n);
        let v_sub = self.iso.eval(params).v;
        let extended = complete_isometry(&v_sub, big);
        // columns of the full isometry: input |j,0> gets column j of the ansatz
        let mut order: Vec<usize> = Vec::with_capacity(big);
        let mut spare = n;
        for col in 0..big {
            if col % n == 0 {
                order.push(col / n);
            } else {
                order.push(spare);
                spare += 1;
            }
        }
        let full = CMatrix::from_fn(extended.nrows(), big, |i, j| extended[(i, order[j])]);
        let kraus = (0..self.rank)
            .map(|j| full.rows(j * big, big).into_owned())
            .collect();
        Channel::from_kraus_unchecked(kraus, false)
    }
}

/// Searches trace-preserving channels on `C^n ⊗ C^n` for one that broadcasts both
/// `rho0` and `rho1` from the ready state `|0>`.
///
/// The optimizer minimizes the summed squared Frobenius distance of the four
/// marginals from their targets; the report records the Uhlmann fidelity of the
/// best channel, the transition probabilities `p` and `p²`, and the monotonicity
/// check on the best channel's outputs.
pub fn no_broadcast_search(rho0: &State, rho1: &State, cfg: SearchConfig) -> Result<CheckReport> {
    let n = rho0.dim();
    if rho1.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rho1.dim(),
        });
    }
    let ready = State::pure(&linalg::ket(n, 0));
    let targets = [rho0.density(), rho1.density()];
    let ansatz = BroadcastAnsatz::new(n, cfg.ansatz_rank);

    let runs: Vec<(f64, Vec<f64>)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|restart| {
            let x0 = gaussian_start(ansatz.num_params(), cfg.seed, restart as u64);
            let f = |p: &[f64]| ansatz.cost(p, &targets);
            let g = |p: &[f64]| ansatz.cost_and_gradient(p, &targets).1;
            let m = minimize_with_gradient(&f, &g, x0, cfg.iterations, 1e-24);
            (m.cost, m.param)
        })
        .collect();

    let mut report = CheckReport::new("no-broadcast-search", cfg.seed, cfg.restarts);
    report.verdict = Verdict::Evidence;
    let mut best: Option<(f64, Channel)> = None;
    let mut surrogate = f64::INFINITY;
    for (cost, param) in &runs {
        let t = ansatz.channel(param);
        let fid = broadcast_fidelity(&t, rho0, &ready)?.min(broadcast_fidelity(&t, rho1, &ready)?);
        surrogate = surrogate.min(*cost);
        if best.as_ref().is_none_or(|b| fid > b.0) {
            best = Some((fid, t));
        }
    }
    let p = transition_probability_full(rho0, rho1);
    report.set("p", p);
    report.set("p_squared", p * p);
    report.set(
        "p_with_ready",
        transition_probability_full(&rho0.tensor(&ready), &rho1.tensor(&ready)),
    );
    report.set(
        "p_tensor_square",
        transition_probability_full(&rho0.tensor(rho0), &rho1.tensor(rho1)),
    );
    report.set("best_surrogate", surrogate);
    if let Some((fid, t)) = best {
        report.set("best_fidelity", fid);
        report.set("fidelity_gap", 1.0 - fid);
        let out0 = t.schrodinger(&rho0.tensor(&ready))?;
        let out1 = t.schrodinger(&rho1.tensor(&ready))?;
        let p_out = transition_probability_full(&out0, &out1);
        report.set("p_outputs", p_out);
        report.set("monotonicity_defect", (p - p_out).max(0.0));
        for (i, k) in t.kraus().iter().enumerate() {
            report.witnesses.push(Witness::new(format!("kraus[{i}]"), k));
        }
    }
    Ok(report)
}

/// Standard normal start vector for restart `stream` of a seeded search.
pub(crate) fn gaussian_start(len: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..len)
        .map(|_| rand::Rng::sample(&mut rng, rand_distr::StandardNormal))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, hadamard, ket, pauli_x, pauli_z};

    #[test]
    fn tensor_factors_do_not_signal() {
        let a = StarAlgebra::full(2).tensor_identity(2);
        let b = StarAlgebra::identity_tensor(2, &StarAlgebra::full(2));
        let r = check_nosignaling_equivalence(&a, &b, 25, 1, TOL).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.residual("max_signal").unwrap() < 1e-9);
        assert!(r.is_well_formed());
    }

    #[test]
    fn same_algebra_signals() {
        let m2 = StarAlgebra::full(2);
        let r = check_nosignaling_equivalence(&m2, &m2, 10, 1, TOL).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.residual("max_signal").unwrap() > 0.1);
        assert!(r.residual("double_commutator").unwrap() > 0.1);

        // E = (I + X)/2 against B = Z
        let e = Effect::new((identity(2) + pauli_x()) * cr(0.5)).unwrap();
        let w = evaluate_witness(e, &pauli_z()).unwrap();
        assert!(w.signal > 0.1);
    }

    #[test]
    fn scalars_never_signal() {
        let r =
            check_nosignaling_equivalence(&StarAlgebra::scalars(3), &StarAlgebra::full(3), 5, 2, TOL)
                .unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.residual("signaling_detected"), Some(0.0));
    }

    #[test]
    fn classical_broadcaster_copies_marginals() {
        let t = classical_broadcaster(2);
        let rho = State::diagonal(&[0.3, 0.7]).unwrap();
        for sigma in [State::pure(&ket(2, 1)), State::maximally_mixed(2)] {
            assert!(broadcast_residual(&t, &rho, &sigma).unwrap() < 1e-12);
        }
        let point = State::pure(&ket(2, 1));
        let out = t.schrodinger(&point.tensor(&State::pure(&ket(2, 0)))).unwrap();
        assert!(out.distance_hs(&point.tensor(&point)) < 1e-12);
    }

    #[test]
    fn classical_broadcaster_multiplies_functions() {
        let t = classical_broadcaster(3);
        let f = [0.2, -1.0, 3.0];
        let g = [1.5, 0.5, -2.0];
        let lhs = t.heisenberg(&kron(&diag(&f), &diag(&g))).unwrap();
        let fg: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a * b).collect();
        assert!(frobenius(&(lhs - kron(&diag(&fg), &identity(3)))) < 1e-12);
    }

    #[test]
    fn classical_broadcaster_forgets_the_ready_state() {
        let t = classical_broadcaster(2);
        let a = t.apply_density(&kron(&diag(&[1.0, 0.0]), &diag(&[1.0, 0.0]))).unwrap();
        let b = t.apply_density(&kron(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0]))).unwrap();
        assert!(frobenius(&(a - b)) < 1e-15);
    }

    #[test]
    fn reversible_clone_permutation() {
        let t = reversible_classical_clone(2);
        let u = &t.kraus()[0];
        assert_eq!(u[(0, 0)], cr(1.0));
        assert_eq!(u[(3, 2)], cr(1.0));
        let inverse = Channel::unitary(&u.adjoint()).unwrap();
        let round = inverse.compose(&t).unwrap();
        assert!(frobenius(&(&round.kraus()[0] - identity(4))) < 1e-15);
        let rho = State::diagonal(&[0.25, 0.75]).unwrap();
        let ready = State::pure(&ket(2, 0));
        assert!(broadcast_residual(&t, &rho, &ready).unwrap() < 1e-12);
    }

    #[test]
    fn commuting_broadcast() {
        let d0 = State::diagonal(&[1.0, 0.0]).unwrap();
        let d1 = State::diagonal(&[0.0, 1.0]).unwrap();
        let t = broadcast_commuting(&d0, &d1).unwrap();
        let ready = State::pure(&ket(2, 0));
        let out = t.schrodinger(&d1.tensor(&ready)).unwrap();
        assert!(out.distance_hs(&d1.tensor(&d1)) < 1e-12);

        let d0 = State::diagonal(&[0.5, 0.5]).unwrap();
        let d1 = State::diagonal(&[0.9, 0.1]).unwrap();
        let t = broadcast_commuting(&d0, &d1).unwrap();
        for d in [&d0, &d1] {
            assert!(broadcast_residual(&t, d, &ready).unwrap() < 1e-9);
        }

        // rotated commuting pair
        let h = hadamard();
        let t = broadcast_commuting(&d1.transported(&h), &d0.transported(&h)).unwrap();
        assert!(broadcast_residual(&t, &d1.transported(&h), &ready).unwrap() < 1e-9);

        let plus = State::pure(&(hadamard() * ket(2, 0)));
        assert!(matches!(
            broadcast_commuting(&State::pure(&ket(2, 0)), &plus),
            Err(Error::NonCommuting { .. })
        ));
    }

    #[test]
    fn broadcast_ansatz_channels_are_trace_preserving() {
        let ans = BroadcastAnsatz::new(2, 3);
        let t = ans.channel(&gaussian_start(ans.num_params(), 3, 0));
        assert!(frobenius(&(t.identity_image() - identity(4))) < 1e-12);
        assert!(Channel::new(t.kraus().to_vec()).is_ok());
    }

    #[test]
    fn broadcast_gradient_matches_finite_differences() {
        let ans = BroadcastAnsatz::new(2, 2);
        let r0 = State::diagonal(&[0.7, 0.3]).unwrap();
        let r1 = State::pure(&(hadamard() * ket(2, 0)));
        let targets = [r0.density(), r1.density()];
        let p = gaussian_start(ans.num_params(), 4, 0);
        let (cost, grad) = ans.cost_and_gradient(&p, &targets);
        let numeric = crate::optimize::numerical_gradient(&|x: &[f64]| ans.cost(x, &targets), &p);
        for (a, b) in grad.iter().zip(&numeric) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
        // the cost agrees with the completed channel's marginals
        let t = ans.channel(&p);
        let ready = State::pure(&ket(2, 0));
        let mut direct = 0.0;
        for r in [&r0, &r1] {
            let out = t.apply_density(&kron(r.density(), ready.density())).unwrap();
            for side in [Side::A, Side::B] {
                direct += (linalg::partial_trace(&out, 2, 2, side).unwrap() - r.density()).norm_squared();
            }
        }
        assert!((cost - direct).abs() < 1e-12);
    }

    #[test]
    fn search_broadcasts_orthogonal_pair() {
        let cfg = SearchConfig {
            ansatz_rank: 2,
            restarts: 4,
            iterations: 300,
            seed: 5,
        };
        let r = no_broadcast_search(&State::pure(&ket(2, 0)), &State::pure(&ket(2, 1)), cfg).unwrap();
        assert!(r.residual("best_fidelity").unwrap() > 1.0 - 1e-6, "{r:?}");
        assert!(r.residual("p").unwrap().abs() < 1e-12);
    }
}
