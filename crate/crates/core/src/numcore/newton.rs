//! Damped Newton iteration with a halving line search.

use alloc::vec::Vec;

use super::linalg::{norm2, Lu, Matrix};
use crate::{Error, Result};

pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 50;
/// Jacobians with a 1-norm condition estimate above this are singular.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Step acceptance: ‖Δx‖ ≤ step_tol·(1 + ‖x‖).
    pub step_tol: f64,
    pub max_condition: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: NEWTON_TOL, max_iter: NEWTON_MAX_ITER, step_tol: 1e-9, max_condition: MAX_CONDITION }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonSolution {
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

pub fn newton<R, J>(mut residual: R, mut jacobian: J, x0: &[f64], opts: NewtonOptions) -> Result<NewtonSolution>
where
    R: FnMut(&[f64]) -> Result<Vec<f64>>,
    J: FnMut(&[f64]) -> Result<Matrix>,
{
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite Newton guess".into()));
    }
    let mut x = x0.to_vec();
    let mut fx = residual(&x)?;
    let mut fnorm = norm2(&fx);
    for it in 0..opts.max_iter {
        let jac = jacobian(&x)?;
        let lu = match Lu::factor(&jac) {
            Ok(lu) => lu,
            Err(_) if fnorm <= opts.tol => return Ok(NewtonSolution { x, residual: fnorm, iterations: it }),
            Err(e) => return Err(e),
        };
        let cond = lu.condition(&jac);
        if cond > opts.max_condition {
            if fnorm <= opts.tol {
                return Ok(NewtonSolution { x, residual: fnorm, iterations: it });
            }
            return Err(Error::SingularJacobian { condition: cond });
        }
        let neg: Vec<f64> = fx.iter().map(|v| -v).collect();
        let dx = lu.solve(&neg);
        let step_norm = norm2(&dx);
        if fnorm <= opts.tol && step_norm <= opts.step_tol * (1.0 + norm2(&x)) {
            return Ok(NewtonSolution { x, residual: fnorm, iterations: it });
        }
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + lambda * d).collect();
            if let Ok(ft) = residual(&trial) {
                let tn = norm2(&ft);
                if tn.is_finite() && (tn < fnorm || tn <= opts.tol) {
                    x = trial;
                    fx = ft;
                    fnorm = tn;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            if fnorm <= opts.tol {
                return Ok(NewtonSolution { x, residual: fnorm, iterations: it + 1 });
            }
            return Err(Error::NewtonNonConvergence { residual: fnorm });
        }
        if fnorm <= opts.tol && lambda * step_norm <= opts.step_tol * (1.0 + norm2(&x)) {
            return Ok(NewtonSolution { x, residual: fnorm, iterations: it + 1 });
        }
    }
    if fnorm <= opts.tol {
        Ok(NewtonSolution { x, residual: fnorm, iterations: opts.max_iter })
    } else {
        Err(Error::NewtonNonConvergence { residual: fnorm })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn scalar(f: impl Fn(f64) -> f64 + Copy, df: impl Fn(f64) -> f64 + Copy, x0: f64) -> Result<NewtonSolution> {
        newton(
            move |x: &[f64]| Ok(vec![f(x[0])]),
            move |x: &[f64]| Ok(Matrix::from_rows(&[&[df(x[0])]])),
            &[x0],
            NewtonOptions::default(),
        )
    }

    #[test]
    fn spec_examples() {
        let s = scalar(|x| x * x - 1.0, |x| 2.0 * x, 0.7).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-14);
        let s = scalar(|x| x, |_| 1.0, 5.0).unwrap();
        assert_eq!(s.x[0], 0.0);
        assert_eq!(s.iterations, 1);
        let lam = 0.3;
        let s = scalar(move |x| (x + lam) * (x + lam) - 1.0, move |x| 2.0 * (x + lam), -1.5).unwrap();
        assert!((s.x[0] + 1.3).abs() < 1e-13);
    }

    #[test]
    fn singular_reported() {
        let r = scalar(|x| x * x + 1.0, |x| 2.0 * x, 0.0);
        assert!(matches!(r, Err(Error::SingularJacobian { .. })));
    }
}
