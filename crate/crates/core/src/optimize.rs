//! Thin wrapper over argmin's L-BFGS with finite-difference gradients.

use argmin::core::{CostFunction, Error as ArgminError, Executor, Gradient, State as _};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;

struct Problem<'a, F, G> {
    f: &'a F,
    g: &'a G,
}

impl<F: Fn(&[f64]) -> f64, G> Problem<'_, F, G> {
    fn eval(&self, p: &[f64]) -> Result<f64, ArgminError> {
        let v = (self.f)(p);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(anyhow::anyhow!("objective is not finite"))
        }
    }
}

impl<F: Fn(&[f64]) -> f64, G> CostFunction for Problem<'_, F, G> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> Result<f64, ArgminError> {
        self.eval(p)
    }
}

impl<F: Fn(&[f64]) -> f64, G: Fn(&[f64]) -> Vec<f64>> Gradient for Problem<'_, F, G> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, p: &Self::Param) -> Result<Vec<f64>, ArgminError> {
        Ok((self.g)(p))
    }
}

/// Central-difference gradient of `f`.
pub fn numerical_gradient<F: Fn(&[f64]) -> f64>(f: &F, p: &[f64]) -> Vec<f64> {
    let cost = |x: &Vec<f64>| -> Result<f64, ArgminError> { Ok(f(x)) };
    let grad = finitediff::vec::central_diff(&cost)(&p.to_vec());
    grad.expect("cost closure is infallible")
}

/// Outcome of a local minimization.
#[derive(Debug, Clone)]
pub struct Minimum {
    pub param: Vec<f64>,
    pub cost: f64,
    pub iterations: u64,
}

const CHUNK: u64 = 40;

/// Minimizes `f` from `x0` for at most `iterations` L-BFGS steps.
///
/// Runs in chunks so that a line-search failure late in the run keeps the best
/// point found so far instead of discarding it.
pub fn minimize<F: Fn(&[f64]) -> f64>(f: &F, x0: Vec<f64>, iterations: u64, target: f64) -> Minimum {
    let g = |p: &[f64]| numerical_gradient(f, p);
    minimize_with_gradient(f, &g, x0, iterations, target)
}

/// As [`minimize`], with a caller-supplied gradient.
pub fn minimize_with_gradient<F, G>(
    f: &F,
    g: &G,
    x0: Vec<f64>,
    iterations: u64,
    target: f64,
) -> Minimum
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let mut best = Minimum {
        cost: f(&x0),
        param: x0,
        iterations: 0,
    };
    while best.iterations < iterations && best.cost > target {
        let chunk = CHUNK.min(iterations - best.iterations);
        let solver = LBFGS::new(MoreThuenteLineSearch::new(), 8)
            .with_tolerance_grad(0.0)
            .and_then(|s| s.with_tolerance_cost(0.0))
            .expect("zero tolerances are valid");
        let start = best.param.clone();
        let run = Executor::new(Problem { f, g }, solver)
            .configure(|s| s.param(start).max_iters(chunk).target_cost(target))
            .run();
        let Ok(mut res) = run else { break };
        let used = res.state().get_iter().max(1);
        best.iterations += used;
        let cost = res.state().get_best_cost();
        let Some(param) = res.state.take_best_param() else {
            break;
        };
        let improved = cost < best.cost - 1e-14 * best.cost.abs().max(1.0);
        if cost < best.cost {
            best.cost = cost;
            best.param = param;
        }
        if !improved || used < chunk {
            break;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = minimize(&f, vec![-1.2, 1.0], 500, 1e-14);
        assert!(m.cost < 1e-8, "cost {}", m.cost);
    }
}
