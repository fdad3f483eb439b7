//! Declarative scenarios: a TOML file names a checker, its parameters and the
//! expected outcome; running it yields a [`RunReport`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{generate_algebra, StarAlgebra};
use crate::bitcommit::{
    self, build_commit_states, chsh_max_two_qubit, chsh_value, optimize_chsh, singlet,
    AttackConfig, AttackMode, CommitmentPair, ObservablePair, Transcript,
};
use crate::classical::{conditional_update, flow_automorphism, gelfand_transform, Measure};
use crate::error::{Error, Result};
use crate::gns::{self, ambiguous_mixture, gns_construct, is_irreducible, is_pure_on, AmbiguousMixture};
use crate::linalg::{self, commutator, frobenius, hadamard, ket, kron, CMatrix};
use crate::states::{Bipartition, State};
use crate::theorems::{
    broadcast_commuting, broadcast_residual, check_nosignaling_equivalence,
    classical_broadcaster, no_broadcast_search, reversible_classical_clone, CheckReport,
    SearchConfig, Verdict, Witness,
};

/// Recognized checker ids.
pub const CHECKERS: [&str; 11] = [
    "nosignal",
    "broadcast-classical",
    "broadcast-commuting",
    "no-broadcast-search",
    "gns",
    "ambiguous-mixture",
    "bitcommit-honest",
    "bitcommit-epr",
    "bitcommit-separable-search",
    "chsh",
    "classical-update",
];

/// Checker parameters. Each checker reads the subset it needs; unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algebra: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ansatz_rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bit: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lie: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_sizes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bound {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accept: Option<bool>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub residuals: BTreeMap<String, Bound>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub checker: String,
    /// The claim this scenario exercises, in words.
    #[serde(default)]
    pub claim: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub expect: Expect,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Scenario::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Checks the checker id and documented parameter ranges.
    pub fn validate(&self) -> Result<()> {
        if !CHECKERS.contains(&self.checker.as_str()) {
            return Err(Error::UnknownChecker(self.checker.clone()));
        }
        let p = &self.params;
        let bad = |what: &str| Err(Error::Config(format!("{}: {what}", self.name)));
        if let Some(d) = &p.dims {
            if d.is_empty() || d.iter().any(|&x| x == 0) || d.iter().product::<usize>() > 16 {
                return bad("dims must be positive with product at most 16");
            }
        }
        if let Some(x) = &p.x_sizes {
            if x.iter().any(|&v| v == 0 || v > 12) {
                return bad("x_sizes must lie in 1..=12");
            }
        }
        if p.rounds.is_some_and(|r| r == 0 || r > 1_000_000) {
            return bad("rounds must lie in 1..=1000000");
        }
        if p.epsilon.is_some_and(|e| !(e > 0.0 && e < 0.5)) {
            return bad("epsilon must lie in (0, 0.5)");
        }
        if p.restarts.is_some_and(|r| r == 0 || r > 1000) {
            return bad("restarts must lie in 1..=1000");
        }
        if p.iterations.is_some_and(|i| i > 100_000) {
            return bad("iterations must be at most 100000");
        }
        if p.components.is_some_and(|c| c == 0 || c > 16) {
            return bad("components must lie in 1..=16");
        }
        if p.ansatz_rank.is_some_and(|r| r == 0 || r > 16) {
            return bad("ansatz_rank must lie in 1..=16");
        }
        if p.trials.is_some_and(|t| t > 100_000) {
            return bad("trials must be at most 100000");
        }
        if p.bit.is_some_and(|b| b > 1) {
            return bad("bit must be 0 or 1");
        }
        if p.tol.is_some_and(|t| !(t > 0.0 && t < 1.0)) {
            return bad("tol must lie in (0, 1)");
        }
        Ok(())
    }
}

/// Built-in scenarios, in declaration order.
pub const BUNDLED: [(&str, &str); 30] = [
    ("nosignal-tensor-factors", include_str!("../scenarios/nosignal-tensor-factors.toml")),
    ("nosignal-same-algebra", include_str!("../scenarios/nosignal-same-algebra.toml")),
    ("nosignal-scalars", include_str!("../scenarios/nosignal-scalars.toml")),
    ("nosignal-conjugated", include_str!("../scenarios/nosignal-conjugated.toml")),
    ("broadcast-classical", include_str!("../scenarios/broadcast-classical.toml")),
    ("broadcast-commuting-orthogonal", include_str!("../scenarios/broadcast-commuting-orthogonal.toml")),
    ("broadcast-commuting-mixed", include_str!("../scenarios/broadcast-commuting-mixed.toml")),
    ("broadcast-commuting-noncommuting", include_str!("../scenarios/broadcast-commuting-noncommuting.toml")),
    ("no-broadcast-zero-plus", include_str!("../scenarios/no-broadcast-zero-plus.toml")),
    ("no-broadcast-orthogonal", include_str!("../scenarios/no-broadcast-orthogonal.toml")),
    ("no-broadcast-commuting", include_str!("../scenarios/no-broadcast-commuting.toml")),
    ("gns-m2", include_str!("../scenarios/gns-m2.toml")),
    ("gns-m2-plus-c", include_str!("../scenarios/gns-m2-plus-c.toml")),
    ("gns-m3", include_str!("../scenarios/gns-m3.toml")),
    ("gns-d3", include_str!("../scenarios/gns-d3.toml")),
    ("ambiguous-mixture-m2", include_str!("../scenarios/ambiguous-mixture-m2.toml")),
    ("ambiguous-mixture-m2-plus-c", include_str!("../scenarios/ambiguous-mixture-m2-plus-c.toml")),
    ("ambiguous-mixture-m2-x-i2", include_str!("../scenarios/ambiguous-mixture-m2-x-i2.toml")),
    ("ambiguous-mixture-d3", include_str!("../scenarios/ambiguous-mixture-d3.toml")),
    ("bitcommit-honest-0", include_str!("../scenarios/bitcommit-honest-0.toml")),
    ("bitcommit-honest-1", include_str!("../scenarios/bitcommit-honest-1.toml")),
    ("bitcommit-lying", include_str!("../scenarios/bitcommit-lying.toml")),
    ("bitcommit-epr-0", include_str!("../scenarios/bitcommit-epr-0.toml")),
    ("bitcommit-epr-1", include_str!("../scenarios/bitcommit-epr-1.toml")),
    ("bitcommit-separable-search", include_str!("../scenarios/bitcommit-separable-search.toml")),
    ("bitcommit-entangled-sanity", include_str!("../scenarios/bitcommit-entangled-sanity.toml")),
    ("chsh-singlet", include_str!("../scenarios/chsh-singlet.toml")),
    ("chsh-product-sweep", include_str!("../scenarios/chsh-product-sweep.toml")),
    ("chsh-commitment", include_str!("../scenarios/chsh-commitment.toml")),
    ("classical-update", include_str!("../scenarios/classical-update.toml")),
];

pub fn bundled_scenarios() -> Result<Vec<Scenario>> {
    BUNDLED.iter().map(|(_, text)| Scenario::from_toml(text)).collect()
}

pub fn bundled_scenario(name: &str) -> Option<Result<Scenario>> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| Scenario::from_toml(text))
}

/// Parses an algebra description: direct summands joined by `+`, each one of
/// `M<n>` (full), `D<n>` (diagonal), `C` (scalars on a 1-dim space),
/// `S<n>` (scalars on an n-dim space), `M<n>xI<m>` or `I<m>xM<n>`.
pub fn parse_algebra(spec: &str) -> Result<StarAlgebra> {
    let num = |s: &str| -> Result<usize> {
        s.parse::<usize>()
            .ok()
            .filter(|&n| (1..=16).contains(&n))
            .ok_or_else(|| Error::Config(format!("bad size `{s}` in algebra `{spec}`")))
    };
    let term = |t: &str| -> Result<StarAlgebra> {
        let t = t.trim();
        if t == "C" {
            return Ok(StarAlgebra::scalars(1));
        }
        if let Some((l, r)) = t.split_once('x') {
            return match (l.split_at(1), r.split_at(1)) {
                (("M", n), ("I", m)) => Ok(StarAlgebra::full(num(n)?).tensor_identity(num(m)?)),
                (("I", m), ("M", n)) => Ok(StarAlgebra::identity_tensor(num(m)?, &StarAlgebra::full(num(n)?))),
                _ => Err(Error::Config(format!("bad tensor term `{t}`"))),
            };
        }
        match t.split_at(1) {
            ("M", n) => Ok(StarAlgebra::full(num(n)?)),
            ("D", n) => Ok(StarAlgebra::diagonal(num(n)?)),
            ("S", n) => Ok(StarAlgebra::scalars(num(n)?)),
            _ => Err(Error::Config(format!("unknown algebra term `{t}`"))),
        }
    };
    if spec.trim().is_empty() {
        return Err(Error::Config("empty algebra description".into()));
    }
    let parts = spec.split('+').map(term).collect::<Result<Vec<_>>>()?;
    let alg = if parts.len() == 1 {
        parts.into_iter().next().expect("one part")
    } else {
        StarAlgebra::direct_sum(&parts)
    };
    if alg.ambient_dim() > 16 {
        return Err(Error::Config(format!("algebra `{spec}` exceeds ambient dimension 16")));
    }
    Ok(alg)
}

/// Algebras used by the bundled sweeps, with their descriptions.
pub const BUNDLED_ALGEBRAS: [&str; 10] = ["M2", "M3", "M2+C", "M2xI2", "I2xM2", "M2+M2", "M2+D2", "D3", "S2", "D2+S2"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Payload {
    Check(CheckReport),
    Transcript(Transcript),
}

impl Payload {
    pub fn residual(&self, name: &str) -> Option<f64> {
        match self {
            Payload::Check(r) => r.residual(name),
            Payload::Transcript(t) => match name {
                "agreement_rate" => Some(t.agreement_rate),
                "threshold" => Some(t.threshold),
                _ => t.residuals.get(name).copied(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    Config,
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunError {
    pub kind: ErrorKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: Scenario,
    pub tool_version: String,
    pub seed: u64,
    /// Whether the outcome matched every expectation of the scenario.
    pub matched: bool,
    pub mismatches: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Payload>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<RunError>,
    /// Excluded from the canonical form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_ms: Option<f64>,
}

impl RunReport {
    /// Process exit code: 0 matched, 1 mismatch, 2 configuration error, 3 numerical error.
    pub fn exit_code(&self) -> i32 {
        match &self.error {
            Some(RunError { kind: ErrorKind::Config, .. }) => 2,
            Some(RunError { kind: ErrorKind::Numerical, .. }) => 3,
            None if self.matched => 0,
            None => 1,
        }
    }

    /// JSON without the wall-clock field: identical for identical (scenario, seed, version).
    pub fn canonical_json(&self) -> String {
        let mut c = self.clone();
        c.wall_clock_ms = None;
        serde_json::to_string_pretty(&c).expect("reports serialize")
    }
}

fn classify(e: &Error) -> ErrorKind {
    match e {
        Error::Config(_) | Error::UnknownChecker(_) => ErrorKind::Config,
        _ => ErrorKind::Numerical,
    }
}

pub fn run_scenario(scenario: &Scenario) -> RunReport {
    let start = Instant::now();
    let outcome = scenario.validate().and_then(|_| dispatch(scenario));
    let mut report = RunReport {
        scenario: scenario.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: scenario.seed,
        matched: false,
        mismatches: Vec::new(),
        payload: None,
        error: None,
        wall_clock_ms: None,
    };
    match outcome {
        Ok(payload) => {
            report.mismatches = compare(&scenario.expect, &payload);
            report.matched = report.mismatches.is_empty();
            report.payload = Some(payload);
        }
        Err(e) => {
            report.mismatches.push(format!("error: {e}"));
            report.error = Some(RunError {
                kind: classify(&e),
                message: e.to_string(),
            });
        }
    }
    report.wall_clock_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    report
}

fn compare(expect: &Expect, payload: &Payload) -> Vec<String> {
    let mut out = Vec::new();
    match payload {
        Payload::Check(r) => {
            if let Some(v) = expect.verdict {
                if v != r.verdict {
                    out.push(format!("verdict {:?}, expected {:?}", r.verdict, v));
                }
            } else if r.verdict == Verdict::Fail {
                out.push("verdict Fail with no expectation".into());
            }
            if expect.accept.is_some() {
                out.push("`accept` expectation on a check report".into());
            }
        }
        Payload::Transcript(t) => {
            if let Some(a) = expect.accept {
                if a != t.accept {
                    out.push(format!("accept {}, expected {}", t.accept, a));
                }
            }
            if expect.verdict.is_some() {
                out.push("`verdict` expectation on a transcript".into());
            }
        }
    }
    for (name, bound) in &expect.residuals {
        match payload.residual(name) {
            None => out.push(format!("residual `{name}` missing")),
            Some(v) => {
                if bound.min.is_some_and(|m| !(v >= m)) {
                    out.push(format!("{name} = {v:e} below {:e}", bound.min.unwrap_or_default()));
                }
                if bound.max.is_some_and(|m| !(v <= m)) {
                    out.push(format!("{name} = {v:e} above {:e}", bound.max.unwrap_or_default()));
                }
            }
        }
    }
    out
}

fn dispatch(s: &Scenario) -> Result<Payload> {
    let p = &s.params;
    match s.checker.as_str() {
        "nosignal" => run_nosignal(p, s.seed).map(Payload::Check),
        "broadcast-classical" => run_broadcast_classical(p, s.seed).map(Payload::Check),
        "broadcast-commuting" => run_broadcast_commuting(p, s.seed).map(Payload::Check),
        "no-broadcast-search" => run_no_broadcast(p, s.seed).map(Payload::Check),
        "gns" => run_gns(p, s.seed).map(Payload::Check),
        "ambiguous-mixture" => run_ambiguous(p, s.seed).map(Payload::Check),
        "bitcommit-honest" => run_commit_honest(p, s.seed).map(Payload::Transcript),
        "bitcommit-epr" => run_commit_epr(p, s.seed).map(Payload::Transcript),
        "bitcommit-separable-search" => run_separable(p, s.seed).map(Payload::Check),
        "chsh" => run_chsh(p, s.seed).map(Payload::Check),
        "classical-update" => run_classical(p, s.seed).map(Payload::Check),
        other => Err(Error::UnknownChecker(other.to_string())),
    }
}

fn dims(p: &Params, default: &[usize]) -> Vec<usize> {
    p.dims.clone().unwrap_or_else(|| default.to_vec())
}

fn run_nosignal(p: &Params, seed: u64) -> Result<CheckReport> {
    let tol = p.tol.unwrap_or(linalg::TOL);
    let trials = p.trials.unwrap_or(25);
    let pair = p.pair.as_deref().unwrap_or("tensor-factors");
    let two = |d: Vec<usize>| -> Result<(usize, usize)> {
        match d[..] {
            [a, b] => Ok((a, b)),
            [a] => Ok((a, a)),
            _ => Err(Error::Config("dims must list one or two sizes".into())),
        }
    };
    let (a, b) = match pair {
        "tensor-factors" | "conjugated" => {
            let (da, db) = two(dims(p, &[2, 2]))?;
            let a = StarAlgebra::full(da).tensor_identity(db);
            let b = StarAlgebra::identity_tensor(da, &StarAlgebra::full(db));
            if pair == "conjugated" {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let u = linalg::random_unitary(da * db, &mut rng);
                (a, b.conjugate(&u))
            } else {
                (a, b)
            }
        }
        "same" => {
            let (d, _) = two(dims(p, &[2]))?;
            (StarAlgebra::full(d), StarAlgebra::full(d))
        }
        "scalars" => {
            let (d, _) = two(dims(p, &[2]))?;
            (StarAlgebra::scalars(d), StarAlgebra::full(d))
        }
        other => return Err(Error::Config(format!("unknown pair `{other}`"))),
    };
    check_nosignaling_equivalence(&a, &b, trials, seed, tol)
}

fn random_probability<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let t: f64 = w.iter().sum();
    w.into_iter().map(|x| x / t).collect()
}

fn run_broadcast_classical(p: &Params, seed: u64) -> Result<CheckReport> {
    let tol = p.tol.unwrap_or(linalg::EXACT_TOL);
    let sizes = p.x_sizes.clone().unwrap_or_else(|| (2..=8).collect());
    let trials = p.trials.unwrap_or(100);
    let mut report = CheckReport::new("broadcast-classical", seed, trials * sizes.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut marginal, mut heisenberg, mut reversible): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for &x in &sizes {
        let t = classical_broadcaster(x);
        let clone = reversible_classical_clone(x);
        let ready_point = State::pure(&ket(x, 0));
        for trial in 0..trials {
            // every fourth input is a point mass, the rest are mixed
            let rho = if trial % 4 == 0 {
                State::pure(&ket(x, rng.random_range(0..x)))
            } else {
                State::diagonal(&random_probability(x, &mut rng))?
            };
            let sigma = State::diagonal(&random_probability(x, &mut rng))?;
            marginal = marginal.max(broadcast_residual(&t, &rho, &sigma)?);
            reversible = reversible.max(broadcast_residual(&clone, &rho, &ready_point)?);
        }
        // T(f ⊗ g) = fg ⊗ I on the basis of indicator functions
        for i in 0..x {
            for j in 0..x {
                let lhs = t.heisenberg(&kron(&linalg::matrix_unit(x, i, i), &linalg::matrix_unit(x, j, j)))?;
                let fg = if i == j { linalg::matrix_unit(x, i, i) } else { linalg::zeros(x) };
                heisenberg = heisenberg.max(frobenius(&(lhs - kron(&fg, &linalg::identity(x)))));
            }
        }
    }
    // two inputs with one output: the broadcaster forgets the ready state
    let t2 = classical_broadcaster(2);
    let out_a = t2.apply_density(&kron(&linalg::diag(&[1.0, 0.0]), &linalg::diag(&[1.0, 0.0])))?;
    let out_b = t2.apply_density(&kron(&linalg::diag(&[1.0, 0.0]), &linalg::diag(&[0.0, 1.0])))?;
    report.set("marginal", marginal);
    report.set("heisenberg_identity", heisenberg);
    report.set("reversible_clone", reversible);
    report.set("collision_distance", frobenius(&(out_a - out_b)));
    let ok = marginal <= tol && heisenberg <= tol && reversible <= tol;
    report.verdict = if ok { Verdict::Pass } else { Verdict::Fail };
    if !ok {
        report.witnesses.push(Witness::new("broadcaster-kraus[0]", &t2.kraus()[0]));
    }
    Ok(report)
}

fn commuting_states(name: &str) -> Result<(State, State)> {
    let plus = hadamard() * ket(2, 0);
    Ok(match name {
        "orthogonal" => (State::diagonal(&[1.0, 0.0])?, State::diagonal(&[0.0, 1.0])?),
        "mixed-diagonal" => (State::diagonal(&[0.5, 0.5])?, State::diagonal(&[0.9, 0.1])?),
        "rotated" => {
            let h = hadamard();
            (
                State::diagonal(&[0.3, 0.7])?.transported(&h),
                State::diagonal(&[0.9, 0.1])?.transported(&h),
            )
        }
        "zero-plus" => (State::pure(&ket(2, 0)), State::pure(&plus)),
        other => return Err(Error::Config(format!("unknown state pair `{other}`"))),
    })
}

fn run_broadcast_commuting(p: &Params, seed: u64) -> Result<CheckReport> {
    let tol = p.tol.unwrap_or(linalg::TOL);
    let (d0, d1) = commuting_states(p.states.as_deref().unwrap_or("mixed-diagonal"))?;
    let mut report = CheckReport::new("broadcast-commuting", seed, 1);
    report.set("commutator", frobenius(&commutator(d0.density(), d1.density())));
    match broadcast_commuting(&d0, &d1) {
        Ok(t) => {
            let ready = State::pure(&ket(d0.dim(), 0));
            let r = broadcast_residual(&t, &d0, &ready)?.max(broadcast_residual(&t, &d1, &ready)?);
            report.set("marginal", r);
            report.verdict = if r <= tol { Verdict::Pass } else { Verdict::Fail };
            if r > tol {
                report.witnesses.push(Witness::new("kraus[0]", &t.kraus()[0]));
            }
        }
        Err(Error::NonCommuting { .. }) => {
            report.verdict = Verdict::Fail;
            report
                .witnesses
                .push(Witness::new("commutator", &commutator(d0.density(), d1.density())));
        }
        Err(e) => return Err(e),
    }
    Ok(report)
}

fn run_no_broadcast(p: &Params, seed: u64) -> Result<CheckReport> {
    let (r0, r1) = match p.states.as_deref().unwrap_or("zero-plus") {
        "commuting-mixed" => commuting_states("mixed-diagonal")?,
        other => commuting_states(other)?,
    };
    let defaults = SearchConfig::default();
    let cfg = SearchConfig {
        ansatz_rank: p.ansatz_rank.unwrap_or(defaults.ansatz_rank),
        restarts: p.restarts.unwrap_or(defaults.restarts),
        iterations: p.iterations.unwrap_or(defaults.iterations),
        seed,
    };
    no_broadcast_search(&r0, &r1, cfg)
}

fn run_gns(p: &Params, seed: u64) -> Result<CheckReport> {
    let tol = p.tol.unwrap_or(1e-10);
    let alg = parse_algebra(p.algebra.as_deref().unwrap_or("M2"))?;
    let trials = p.trials.unwrap_or(100);
    let mut report = CheckReport::new("gns", seed, trials);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut state_res, mut hom_res): (f64, f64) = (0.0, 0.0);
    let (mut cyclic_fail, mut purity_mismatch, mut rank_mismatch) = (0usize, 0usize, 0usize);
    for trial in 0..trials {
        // alternate pure-on-algebra vector states, random mixed states and low-rank states
        let rho = match trial % 3 {
            0 => gns::random_state_on(&alg, true, &mut rng)?,
            1 => State::random(alg.ambient_dim(), &mut rng),
            _ => State::new(linalg::random_density(alg.ambient_dim(), 1 + trial % 2, &mut rng))?,
        };
        let g = gns_construct(&alg, &rho)?;
        state_res = state_res.max(g.state_residual(&rho));
        hom_res = hom_res.max(g.homomorphism_residual());
        if g.cyclic_span_dim() != g.carrier_dim {
            cyclic_fail += 1;
        }
        if is_irreducible(&g)? != is_pure_on(&rho, &alg)? {
            purity_mismatch += 1;
        }
        if g.carrier_dim != brute_force_gns_rank(&alg, &rho) {
            rank_mismatch += 1;
        }
    }
    report.set("state", state_res);
    report.set("homomorphism", hom_res);
    report.set("cyclicity_failures", cyclic_fail as f64);
    report.set("purity_mismatches", purity_mismatch as f64);
    report.set("rank_mismatches", rank_mismatch as f64);
    let ok = state_res <= tol && hom_res <= tol.sqrt() && cyclic_fail + purity_mismatch + rank_mismatch == 0;
    report.verdict = if ok { Verdict::Pass } else { Verdict::Fail };
    if !ok {
        report.witnesses.push(Witness::new("algebra-basis[0]", &alg.basis()[0]));
    }
    Ok(report)
}

/// Rank of `[ρ(B_i* B_j)]` by singular values, independent of the eigen-based path.
pub fn brute_force_gns_rank(alg: &StarAlgebra, rho: &State) -> usize {
    let b = alg.basis();
    let gram = CMatrix::from_fn(b.len(), b.len(), |i, j| rho.expect(&(b[i].adjoint() * &b[j])));
    let sv = gram.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > 1e-8 * top).count()
}

fn run_ambiguous(p: &Params, seed: u64) -> Result<CheckReport> {
    let tol = p.tol.unwrap_or(linalg::TOL);
    let alg = parse_algebra(p.algebra.as_deref().unwrap_or("M2"))?;
    let mut report = CheckReport::new("ambiguous-mixture", seed, 1);
    report.set("self_commutator", alg.max_self_commutator());
    match ambiguous_mixture(&alg, seed) {
        Ok(mix) => {
            let states = mix.states();
            let mut distinct = f64::INFINITY;
            let mut impure = 0usize;
            for i in 0..4 {
                if !is_pure_on(states[i], &alg)? {
                    impure += 1;
                }
                for j in i + 1..4 {
                    distinct = distinct.min(states[i].distance_hs(states[j]));
                }
            }
            report.set("mixture", mix.mixture_residual());
            report.set("min_pairwise_distance", distinct);
            report.set("impure_components", impure as f64);
            let ok = mix.mixture_residual() <= tol && impure == 0 && distinct > tol;
            report.verdict = if ok { Verdict::Pass } else { Verdict::Fail };
            report.witnesses.push(Witness::new("mixture", mix.mixture().density()));
        }
        Err(Error::AbelianAlgebra) => {
            report.verdict = Verdict::Fail;
            for (i, b) in alg.basis().iter().enumerate() {
                report.witnesses.push(Witness::new(format!("abelian-basis[{i}]"), b));
            }
        }
        Err(e) => return Err(e),
    }
    Ok(report)
}

fn commitment_pair(p: &Params, seed: u64) -> Result<CommitmentPair> {
    let mix = match p.algebra.as_deref() {
        None | Some("qubit") => AmbiguousMixture::qubit(),
        Some(spec) => ambiguous_mixture(&parse_algebra(spec)?, seed)?,
    };
    Ok(build_commit_states(&mix))
}

fn run_commit_honest(p: &Params, seed: u64) -> Result<Transcript> {
    let pair = commitment_pair(p, seed)?;
    let bit = p.bit.unwrap_or(0);
    let rounds = p.rounds.unwrap_or(1000);
    let eps = p.epsilon.unwrap_or(0.01);
    if p.lie.unwrap_or(false) {
        bitcommit::run_lying(&pair, bit, rounds, eps, seed)
    } else {
        bitcommit::run_honest(&pair, bit, rounds, eps, seed)
    }
}

fn run_commit_epr(p: &Params, seed: u64) -> Result<Transcript> {
    let pair = commitment_pair(p, seed)?;
    bitcommit::run_epr_attack(
        &pair,
        p.bit.unwrap_or(0),
        p.rounds.unwrap_or(1000),
        p.epsilon.unwrap_or(0.01),
        seed,
    )
}

fn run_separable(p: &Params, seed: u64) -> Result<CheckReport> {
    let pair = commitment_pair(p, seed)?;
    let mode = match p.mode.as_deref().unwrap_or("separable") {
        "separable" => AttackMode::Separable,
        "entangled" => AttackMode::Entangled,
        "single-target" => AttackMode::SingleTarget,
        other => return Err(Error::Config(format!("unknown attack mode `{other}`"))),
    };
    let mut report = bitcommit::separable_attack_search(
        &pair,
        AttackConfig {
            components: p.components.unwrap_or(4),
            restarts: p.restarts.unwrap_or(20),
            iterations: p.iterations.unwrap_or(400),
            seed,
            mode,
        },
    )?;
    report.set("concealment", pair.concealment_residual()?);
    Ok(report)
}

fn random_bloch<R: Rng>(rng: &mut R) -> CMatrix {
    let v: [f64; 3] = std::array::from_fn(|_| rng.sample(rand_distr::StandardNormal));
    ObservablePair::bloch(v)
}

fn run_chsh(p: &Params, seed: u64) -> Result<CheckReport> {
    let tol = p.tol.unwrap_or(linalg::TOL);
    let which = p.states.as_deref().unwrap_or("singlet");
    let mut report = CheckReport::new("chsh", seed, 1);
    let tsirelson = 2.0 * 2f64.sqrt();
    match which {
        "singlet" => {
            let (a, b) = ObservablePair::singlet_optimal();
            let v = chsh_value(&singlet(), &a, &b)?;
            report.set("chsh", v);
            report.set("tsirelson_gap", (v - tsirelson).abs());
            report.set("oracle", chsh_max_two_qubit(&singlet())?);
            report.verdict = if (v - tsirelson).abs() <= 1e-6 { Verdict::Pass } else { Verdict::Fail };
            if report.verdict == Verdict::Fail {
                report.witnesses.push(Witness::new("state", singlet().density()));
            }
        }
        "product-sweep" => {
            let trials = p.trials.unwrap_or(10_000);
            report.trials = trials;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst: f64 = 0.0;
            let mut witness = None;
            for _ in 0..trials {
                let s = State::random(2, &mut rng).tensor(&State::random(2, &mut rng));
                let a = ObservablePair::new(random_bloch(&mut rng), random_bloch(&mut rng))?;
                let b = ObservablePair::new(random_bloch(&mut rng), random_bloch(&mut rng))?;
                let v = chsh_value(&s, &a, &b)?;
                if v > worst {
                    worst = v;
                    witness = Some(s);
                }
            }
            report.set("chsh_max", worst);
            report.verdict = if worst <= 2.0 + tol { Verdict::Pass } else { Verdict::Fail };
            if report.verdict == Verdict::Fail {
                if let Some(s) = witness {
                    report.witnesses.push(Witness::new("state", s.density()));
                }
            }
        }
        "commitment" => {
            let pair = commitment_pair(p, seed)?;
            let restarts = p.restarts.unwrap_or(8);
            report.trials = restarts;
            let bip = Bipartition::symmetric(pair.mu.dim());
            let mut worst: f64 = 0.0;
            for (name, rho) in [("rho0", &pair.rho0), ("rho1", &pair.rho1)] {
                let (v, _, _) = optimize_chsh(rho, bip, restarts, p.iterations.unwrap_or(200), seed)?;
                report.set(&format!("chsh_{name}"), v);
                if rho.dim() == 4 {
                    report.set(&format!("oracle_{name}"), chsh_max_two_qubit(rho)?);
                }
                worst = worst.max(v);
            }
            report.set("chsh_max", worst);
            report.verdict = if worst <= 2.0 + tol { Verdict::Pass } else { Verdict::Fail };
            if report.verdict == Verdict::Fail {
                report.witnesses.push(Witness::new("rho0", pair.rho0.density()));
            }
        }
        other => return Err(Error::Config(format!("unknown CHSH state set `{other}`"))),
    }
    Ok(report)
}

fn run_classical(p: &Params, seed: u64) -> Result<CheckReport> {
    let tol = p.tol.unwrap_or(1e-10);
    let trials = p.trials.unwrap_or(1000);
    let mut report = CheckReport::new("classical-update", seed, trials);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bayes: f64 = 0.0;
    for _ in 0..trials {
        let n = rng.random_range(2..=8);
        let mu = Measure::new(random_probability(n, &mut rng))?;
        let mut event: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
        if event.is_empty() {
            event.push(rng.random_range(0..n));
        }
        let g: Vec<f64> = (0..n).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        let via_algebra = conditional_update(&mu, &event, &g)?;
        // elementary Bayes: E[g | event] = Σ_{x in event} μ(x) g(x) / μ(event)
        let mass: f64 = event.iter().map(|&x| mu.weights()[x]).sum();
        let direct = event.iter().map(|&x| mu.weights()[x] * g[x]).sum::<f64>() / mass;
        bayes = bayes.max((via_algebra - direct).abs());
    }
    let mut gelfand: f64 = 0.0;
    let h = linalg::random_hermitian(4, &mut rng);
    for alg in [
        StarAlgebra::diagonal(4),
        generate_algebra(&[linalg::pauli_x()], 2)?,
        generate_algebra(&[h], 4)?,
    ] {
        gelfand = gelfand.max(gelfand_transform(&alg)?.round_trip_residual());
    }
    let (p1, p2) = ([1, 2, 3, 0], [2, 0, 3, 1]);
    let composed = flow_automorphism(&p1)?.compose(&flow_automorphism(&p2)?)?;
    let p12: Vec<usize> = p2.iter().map(|&x| p1[x]).collect();
    let flow = frobenius(&(&composed.kraus()[0] - &flow_automorphism(&p12)?.kraus()[0]));
    report.set("bayes", bayes);
    report.set("gelfand_round_trip", gelfand);
    report.set("flow_group_law", flow);
    let ok = bayes <= tol && gelfand <= tol && flow <= tol;
    report.verdict = if ok { Verdict::Pass } else { Verdict::Fail };
    if !ok {
        report.witnesses.push(Witness::new("flow", &composed.kraus()[0]));
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Markdown,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "markdown" | "md" => Ok(Format::Markdown),
            other => Err(Error::Config(format!("unknown format `{other}`"))),
        }
    }
}

pub fn render_markdown(report: &RunReport) -> String {
    let mut s = String::new();
    let sc = &report.scenario;
    let _ = writeln!(s, "## {}\n", sc.name);
    let _ = writeln!(s, "- checker: `{}`", sc.checker);
    if !sc.claim.is_empty() {
        let _ = writeln!(s, "- claim: {}", sc.claim);
    }
    let _ = writeln!(s, "- seed: {}", report.seed);
    let _ = writeln!(s, "- tool version: {}", report.tool_version);
    let status = if report.matched { "MATCH" } else { "MISMATCH" };
    match &report.payload {
        Some(Payload::Check(r)) => {
            let _ = writeln!(s, "- verdict: {:?} ({status})", r.verdict);
        }
        Some(Payload::Transcript(t)) => {
            let _ = writeln!(
                s,
                "- verdict: {} with agreement {:.4} against threshold {:.4} ({status})",
                if t.accept { "accept" } else { "reject" },
                t.agreement_rate,
                t.threshold
            );
        }
        None => {
            let _ = writeln!(s, "- verdict: error ({status})");
        }
    }
    if let Some(e) = &report.error {
        let _ = writeln!(s, "- error ({:?}): {}", e.kind, e.message);
    }
    for m in &report.mismatches {
        let _ = writeln!(s, "- mismatch: {m}");
    }
    let residuals: Option<&BTreeMap<String, f64>> = match &report.payload {
        Some(Payload::Check(r)) => Some(&r.residuals),
        Some(Payload::Transcript(t)) => Some(&t.residuals),
        None => None,
    };
    if let Some(res) = residuals.filter(|r| !r.is_empty()) {
        let _ = writeln!(s, "\n| residual | value |\n|---|---|");
        for (k, v) in res {
            let _ = writeln!(s, "| {k} | {v:.6e} |");
        }
    }
    s.push('\n');
    s
}

pub fn render(reports: &[RunReport], format: Format) -> String {
    match format {
        Format::Json => {
            if reports.len() == 1 {
                serde_json::to_string_pretty(&reports[0]).expect("reports serialize") + "\n"
            } else {
                serde_json::to_string_pretty(reports).expect("reports serialize") + "\n"
            }
        }
        Format::Markdown => reports.iter().map(render_markdown).collect(),
    }
}

/// Writes rendered reports to `path` atomically (temporary file, then rename),
/// or to stdout when `path` is `None`.
pub fn emit_report(reports: &[RunReport], format: Format, path: Option<&Path>) -> Result<()> {
    let text = render(reports, format);
    match path {
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }
        Some(p) => write_atomic(p, &text),
    }
}

pub fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("`{}` is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenarios_parse_and_cover_every_checker() {
        let all = bundled_scenarios().unwrap();
        assert_eq!(all.len(), BUNDLED.len());
        for (s, (name, _)) in all.iter().zip(BUNDLED.iter()) {
            assert_eq!(&s.name, name);
            assert!(!s.claim.is_empty(), "{name} has no claim");
        }
        for id in CHECKERS {
            assert!(all.iter().any(|s| s.checker == id), "no scenario for {id}");
        }
    }

    #[test]
    fn unknown_keys_and_checkers_are_config_errors() {
        let bad_key = "name = \"x\"\nchecker = \"gns\"\n[params]\nbogus = 1\n";
        assert!(matches!(Scenario::from_toml(bad_key), Err(Error::Config(_))));
        let bad_checker = "name = \"x\"\nchecker = \"nope\"\n";
        assert!(matches!(Scenario::from_toml(bad_checker), Err(Error::UnknownChecker(_))));
        let out_of_range = "name = \"x\"\nchecker = \"gns\"\n[params]\nepsilon = 0.9\n";
        assert!(matches!(Scenario::from_toml(out_of_range), Err(Error::Config(_))));
    }

    #[test]
    fn algebra_descriptions() {
        assert_eq!(parse_algebra("M2").unwrap().dim(), 4);
        assert_eq!(parse_algebra("M2+C").unwrap().dim(), 5);
        assert_eq!(parse_algebra("M2xI2").unwrap().ambient_dim(), 4);
        assert_eq!(parse_algebra("D3").unwrap().dim(), 3);
        assert_eq!(parse_algebra("D2+S2").unwrap().dim(), 3);
        assert!(parse_algebra("Q2").is_err());
        assert!(parse_algebra("M9+M9").is_err());
        for spec in BUNDLED_ALGEBRAS {
            assert!(parse_algebra(spec).is_ok(), "{spec}");
        }
    }

    #[test]
    fn chsh_singlet_scenario() {
        let s = bundled_scenario("chsh-singlet").unwrap().unwrap();
        let r = run_scenario(&s);
        assert_eq!(r.exit_code(), 0, "{:?}", r.mismatches);
        let v = r.payload.unwrap().residual("chsh").unwrap();
        assert!((v - 2.0 * 2f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn markdown_lists_every_residual() {
        let s = bundled_scenario("nosignal-tensor-factors").unwrap().unwrap();
        let r = run_scenario(&s);
        let md = render_markdown(&r);
        assert!(md.contains("- verdict: Pass (MATCH)"));
        if let Some(Payload::Check(c)) = &r.payload {
            for k in c.residuals.keys() {
                assert!(md.contains(&format!("| {k} |")));
            }
        }
    }
}
