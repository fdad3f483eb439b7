//! Classical mechanics on finite sample spaces as abelian algebras.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{wedderburn_decompose, StarAlgebra};
use crate::error::{Error, Result};
use crate::linalg::{self, cr, frobenius, hermitian_eigen, CMatrix, CVector, TOL};
use crate::states::{Channel, State};

/// A finite set of labelled points and its algebra of functions (diagonal matrices).
#[derive(Debug, Clone)]
pub struct FinitePhaseSpace {
    pub points: Vec<String>,
    pub algebra: StarAlgebra,
}

impl FinitePhaseSpace {
    pub fn new(points: Vec<String>) -> Self {
        let n = points.len();
        FinitePhaseSpace {
            points,
            algebra: StarAlgebra::diagonal(n),
        }
    }

    pub fn with_size(n: usize) -> Self {
        FinitePhaseSpace::new((0..n).map(|i| i.to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The multiplication operator of a function.
    pub fn function(&self, f: &[f64]) -> Result<CMatrix> {
        if f.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: f.len(),
            });
        }
        Ok(linalg::diag(f))
    }

    pub fn indicator(&self, event: &[usize]) -> Result<CMatrix> {
        let mut chi = vec![0.0; self.len()];
        for &i in event {
            if i >= self.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.len(),
                    found: i + 1,
                });
            }
            chi[i] = 1.0;
        }
        Ok(linalg::diag(&chi))
    }
}

impl Serialize for FinitePhaseSpace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.points.serialize(s)
    }
}

impl<'de> Deserialize<'de> for FinitePhaseSpace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(FinitePhaseSpace::new(Vec::<String>::deserialize(d)?))
    }
}

/// A probability vector over the points of a phase space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Measure {
    weights: Vec<f64>,
}

impl Measure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidMeasure("no points".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < -TOL) {
            return Err(Error::InvalidMeasure(format!("weight {w} is negative or not finite")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > TOL {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}")));
        }
        Ok(Measure { weights })
    }

    pub fn uniform(n: usize) -> Self {
        Measure {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn point(n: usize, i: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[i] = 1.0;
        Measure { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// The diagonal density `D` with `Tr(D f) = Σ μ(x) f(x)`.
    pub fn to_state(&self) -> State {
        State::diagonal(&self.weights).expect("measure weights form a probability vector")
    }
}

impl TryFrom<Vec<f64>> for Measure {
    type Error = Error;

    fn try_from(w: Vec<f64>) -> Result<Self> {
        Measure::new(w)
    }
}

impl From<Measure> for Vec<f64> {
    fn from(m: Measure) -> Self {
        m.weights
    }
}

/// Post-measurement expectation `ρ(χ g χ) / ρ(χ)` of the function `g` after
/// learning that the event occurred.
pub fn conditional_update(mu: &Measure, event: &[usize], g: &[f64]) -> Result<f64> {
    let space = FinitePhaseSpace::with_size(mu.len());
    let chi = space.indicator(event)?;
    let gm = space.function(g)?;
    let rho = mu.to_state();
    let p = rho.expect(&chi).re;
    if p <= TOL {
        return Err(Error::ZeroProbabilityEvent { probability: p });
    }
    Ok(rho.expect(&(&chi * gm * &chi)).re / p)
}

/// The unitary channel of a permutation: `U|p> = |perm(p)>`, so the Heisenberg
/// action sends the function `f` to `f ∘ perm`.
pub fn flow_automorphism(perm: &[usize]) -> Result<Channel> {
    let n = perm.len();
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::NotABijection(n));
        }
        seen[p] = true;
    }
    let mut u = linalg::zeros(n);
    for (i, &p) in perm.iter().enumerate() {
        u[(p, i)] = cr(1.0);
    }
    Channel::unitary(&u)
}

/// The function representation of an abelian algebra.
#[derive(Debug, Clone)]
pub struct GelfandTransform {
    pub space: FinitePhaseSpace,
    /// Minimal projections, one per point, ordered by their first supported ambient index.
    pub projections: Vec<CMatrix>,
    /// Columns span the ranges of the projections in point order; `U* A U` is diagonal.
    pub unitary: CMatrix,
    algebra: StarAlgebra,
}

impl GelfandTransform {
    /// `Â(x) = Tr(P_x A) / Tr(P_x)`, the value of `A` at the pure state `x`.
    pub fn transform(&self, a: &CMatrix) -> Vec<Complex64> {
        self.projections
            .iter()
            .map(|p| (p * a).trace() / p.trace())
            .collect()
    }

    pub fn inverse(&self, values: &[Complex64]) -> CMatrix {
        let mut out = linalg::zeros(self.algebra.ambient_dim());
        for (p, v) in self.projections.iter().zip(values) {
            out += p * *v;
        }
        out
    }

    /// `max |A - inverse(transform(A))|_F` over the algebra basis.
    pub fn round_trip_residual(&self) -> f64 {
        self.algebra
            .basis()
            .iter()
            .map(|b| frobenius(&(self.inverse(&self.transform(b)) - b)))
            .fold(0.0, f64::max)
    }

    /// The point-evaluation state of point `x`.
    pub fn point_state(&self, x: usize) -> State {
        let p = &self.projections[x];
        State::new(p / p.trace()).expect("normalized projection")
    }
}

pub fn gelfand_transform(abelian: &StarAlgebra) -> Result<GelfandTransform> {
    let commutator = abelian.max_self_commutator();
    if commutator > TOL {
        return Err(Error::NotAbelian { commutator });
    }
    let blocks = wedderburn_decompose(abelian)?;
    let mut projections = blocks.central_projections();
    let first = |p: &CMatrix| (0..p.nrows()).find(|&i| p[(i, i)].re > 0.5 / p.nrows() as f64);
    projections.sort_by_key(|p| first(p));

    let mut columns: Vec<CVector> = Vec::new();
    for p in &projections {
        let (values, vectors) = hermitian_eigen(p);
        for (k, &v) in values.iter().enumerate() {
            if v > 0.5 {
                let mut col = vectors.column(k).into_owned();
                // fix the phase: largest-magnitude entry real and positive
                let (_, pivot) = col
                    .iter()
                    .enumerate()
                    .fold((0.0, 0), |acc, (i, z)| if z.norm() > acc.0 + 1e-12 { (z.norm(), i) } else { acc });
                let phase = col[pivot] / col[pivot].norm();
                col /= phase;
                columns.push(col);
            }
        }
    }
    let unitary = CMatrix::from_columns(&columns);
    Ok(GelfandTransform {
        space: FinitePhaseSpace::with_size(projections.len()),
        projections,
        unitary,
        algebra: abelian.clone(),
    })
}
