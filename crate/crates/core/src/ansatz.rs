//! Smooth parameterization of isometries, used by the channel searches.
//!
//! A real vector holds the real and imaginary parts of a `rows × cols` matrix `A`;
//! the isometry is `V = A (A* A)^{-½}`. Any `A` of full column rank works, so the
//! optimizer moves freely while every iterate stays an exact isometry.

use crate::linalg::{c, hermitian_eigen, CMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IsometryAnsatz {
    pub rows: usize,
    pub cols: usize,
}

/// An evaluated isometry together with what the gradient pullback needs.
#[derive(Debug, Clone)]
pub struct IsometryPoint {
    pub v: CMatrix,
    a: CMatrix,
    inv_root: CMatrix,
    eigvecs: CMatrix,
    eigvals: Vec<f64>,
}

impl IsometryAnsatz {
    pub fn new(rows: usize, cols: usize) -> Self {
        assert!(rows >= cols, "an isometry needs rows >= cols");
        IsometryAnsatz { rows, cols }
    }

    pub fn num_params(&self) -> usize {
        2 * self.rows * self.cols
    }

    pub fn eval(&self, params: &[f64]) -> IsometryPoint {
        let half = self.rows * self.cols;
        debug_assert_eq!(params.len(), 2 * half);
        let a = CMatrix::from_fn(self.rows, self.cols, |i, j| {
            let k = j * self.rows + i;
            c(params[k], params[half + k])
        });
        let gram = a.adjoint() * &a;
        let (eigvals, eigvecs) = hermitian_eigen(&gram);
        let eigvals: Vec<f64> = eigvals.into_iter().map(|v| v.max(1e-300)).collect();
        let mut scaled = eigvecs.clone();
        for (j, &l) in eigvals.iter().enumerate() {
            let s = 1.0 / l.sqrt();
            for i in 0..self.cols {
                scaled[(i, j)] *= s;
            }
        }
        let inv_root = scaled * eigvecs.adjoint();
        let v = &a * &inv_root;
        IsometryPoint {
            v,
            a,
            inv_root,
            eigvecs,
            eigvals,
        }
    }

    /// Parameter gradient from `Γ`, where the cost varies as `dC = 2 Re Tr(Γ* dV)`.
    pub fn pullback(&self, pt: &IsometryPoint, gamma: &CMatrix) -> Vec<f64> {
        let n = self.cols;
        // derivative of S^{-½} in the eigenbasis of S uses divided differences of x^{-½}
        let k = gamma.adjoint() * &pt.a;
        let kt = pt.eigvecs.adjoint() * k * &pt.eigvecs;
        let mut q = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let (li, lj) = (pt.eigvals[i], pt.eigvals[j]);
                let l = if (li - lj).abs() <= 1e-12 * li.max(lj) {
                    -0.5 * li.powf(-1.5)
                } else {
                    (li.powf(-0.5) - lj.powf(-0.5)) / (li - lj)
                };
                q[(i, j)] = kt[(i, j)] * l;
            }
        }
        let r = &pt.eigvecs * q * pt.eigvecs.adjoint();
        let psi = gamma * &pt.inv_root + &pt.a * (&r + r.adjoint());
        let half = self.rows * self.cols;
        let mut out = vec![0.0; 2 * half];
        for j in 0..self.cols {
            for i in 0..self.rows {
                let idx = j * self.rows + i;
                out[idx] = 2.0 * psi[(i, j)].re;
                out[half + idx] = 2.0 * psi[(i, j)].im;
            }
        }
        out
    }
}

/// Extends an isometry `v` (`rows × k`) to `rows × cols` by appending an
/// orthonormal basis of part of the complement of its range.
pub fn complete_isometry(v: &CMatrix, cols: usize) -> CMatrix {
    let rows = v.nrows();
    let mut columns: Vec<crate::linalg::CVector> =
        (0..v.ncols()).map(|j| v.column(j).into_owned()).collect();
    let mut e = 0;
    while columns.len() < cols && e < rows {
        let mut x = crate::linalg::ket(rows, e);
        e += 1;
        for _ in 0..2 {
            for q in &columns {
                let p = q.dotc(&x);
                x -= q * p;
            }
        }
        let norm = x.norm();
        if norm > 1e-6 {
            columns.push(x / crate::linalg::cr(norm));
        }
    }
    CMatrix::from_columns(&columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, identity};
    use crate::optimize::numerical_gradient;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_params(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| rand::Rng::sample(&mut rng, rand_distr::StandardNormal))
            .collect()
    }

    #[test]
    fn produces_isometries() {
        let ans = IsometryAnsatz::new(6, 3);
        let pt = ans.eval(&random_params(ans.num_params(), 1));
        assert!(frobenius(&(pt.v.adjoint() * &pt.v - identity(3))) < 1e-12);
        let full = complete_isometry(&pt.v, 5);
        assert_eq!(full.ncols(), 5);
        assert!(frobenius(&(full.adjoint() * &full - identity(5))) < 1e-12);
    }

    #[test]
    fn pullback_matches_finite_differences() {
        let ans = IsometryAnsatz::new(5, 2);
        let target = CMatrix::from_fn(5, 2, |i, j| c(i as f64 - 1.0, j as f64 * 0.5 - 0.2));
        // C = |V - target|_F^2, so Γ = V - target
        let f = |p: &[f64]| (ans.eval(p).v - &target).norm_squared();
        let p = random_params(ans.num_params(), 2);
        let pt = ans.eval(&p);
        let analytic = ans.pullback(&pt, &(&pt.v - &target));
        let numeric = numerical_gradient(&f, &p);
        for (a, b) in analytic.iter().zip(&numeric) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }
}
