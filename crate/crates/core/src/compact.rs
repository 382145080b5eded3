//! Compactification s = g_α(τ) = tanh(ατ/2) of the rate-parametrised system
//! into an autonomous flow on ℝⁿ × [−1, 1] with invariant limit subspaces
//! S± = {s = ±1}.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::equilibria::{Branch, EquilibriumRecord};
use crate::numcore::{eigen, norm2, EigenDecomposition, Matrix};
use crate::systems::{ExternalInput, FrozenSystem};
use crate::{Error, Result};

/// Roundoff allowance beyond |s| = 1 before s is clipped back.
pub const S_CLIP: f64 = 1e-15;
/// x-part norm below which the extra eigenvector counts as normal to S±.
pub const NORMAL_TOL: f64 = 1e-8;

pub fn g_alpha(alpha: f64, tau: f64) -> f64 {
    if tau == f64::INFINITY {
        1.0
    } else if tau == f64::NEG_INFINITY {
        -1.0
    } else {
        (0.5 * alpha * tau).tanh()
    }
}

/// Inverse of g_α; ±∞ at s = ±1.
pub fn h_alpha(alpha: f64, s: f64) -> f64 {
    if s >= 1.0 {
        f64::INFINITY
    } else if s <= -1.0 {
        f64::NEG_INFINITY
    } else {
        2.0 * s.atanh() / alpha
    }
}

pub fn h_alpha_derivative(alpha: f64, s: f64) -> f64 {
    if s.abs() >= 1.0 {
        f64::INFINITY
    } else {
        2.0 / (alpha * (1.0 - s) * (1.0 + s))
    }
}

/// α = ½·min{ρ, −Re(l₁)/r}, or ρ/2 without a leading sink eigenvalue.
pub fn choose_alpha(rho: f64, r: f64, l1: Option<f64>) -> f64 {
    match l1 {
        Some(l) if l < 0.0 => 0.5 * rho.min(-l / r),
        _ => 0.5 * rho,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Past,
    Future,
}

impl Side {
    pub fn s(&self) -> f64 {
        match self {
            Side::Past => -1.0,
            Side::Future => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompactifiedSystem {
    pub frozen: FrozenSystem,
    pub input: ExternalInput,
    pub r: f64,
    pub alpha: f64,
}

impl CompactifiedSystem {
    pub fn new(frozen: FrozenSystem, input: ExternalInput, r: f64, alpha: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("rate r = {r} must be positive")));
        }
        if frozen.d() != input.d() {
            return Err(Error::Dimension(format!("system expects d = {}, input has {}", frozen.d(), input.d())));
        }
        let rho = input.rho();
        if !(alpha > 0.0 && alpha <= rho) {
            return Err(Error::AlphaWindow { alpha, rho });
        }
        Ok(CompactifiedSystem { frozen, input, r, alpha })
    }

    pub fn n(&self) -> usize {
        self.frozen.n()
    }

    pub fn rho(&self) -> f64 {
        self.input.rho()
    }

    pub fn tau_of(&self, s: f64) -> f64 {
        h_alpha(self.alpha, s)
    }

    pub fn s_of(&self, tau: f64) -> f64 {
        g_alpha(self.alpha, tau)
    }

    /// Λ_α(s): Λ(h_α(s)) inside, λ± on S±.
    pub fn glued_input(&self, s: f64) -> Result<Vec<f64>> {
        self.input.value(self.tau_of(clip(s)))
    }

    /// dΛ_α/ds = Λ'(h_α(s))·h_α'(s); on S± the analytic limit 0 (α < ρ).
    pub fn glued_input_derivative(&self, s: f64) -> Result<Vec<f64>> {
        let s = clip(s);
        if s.abs() >= 1.0 {
            if self.alpha >= self.rho() {
                return Err(Error::AlphaWindow { alpha: self.alpha, rho: self.rho() });
            }
            return Ok(vec![0.0; self.input.d()]);
        }
        let dh = h_alpha_derivative(self.alpha, s);
        let d = self.input.derivative(self.tau_of(s))?;
        // Λ' underflows to 0 long before h' overflows, keep 0·∞ out
        Ok(d.into_iter().map(|v| if v == 0.0 { 0.0 } else { v * dh }).collect())
    }

    /// (x', s') at `point = [x, s]`.
    pub fn rhs_into(&self, point: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.n();
        let s = point[n];
        let mut p = Vec::with_capacity(n + self.input.d());
        p.extend_from_slice(&point[..n]);
        p.extend(self.glued_input(s)?);
        self.frozen.eval_point(&p, &mut out[..n])?;
        out[..n].iter_mut().for_each(|v| *v /= self.r);
        let sc = clip(s);
        out[n] = if sc.abs() >= 1.0 { 0.0 } else { 0.5 * self.alpha * (1.0 - sc) * (1.0 + sc) };
        Ok(())
    }

    pub fn rhs(&self, point: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n() + 1];
        self.rhs_into(point, &mut out)?;
        Ok(out)
    }

    /// Block Jacobian [[∂f/∂x / r, (∂f/∂λ · dΛ_α/ds) / r], [0, −αs]].
    pub fn jacobian(&self, point: &[f64]) -> Result<Matrix> {
        let n = self.n();
        let s = clip(point[n]);
        let lam = self.glued_input(s)?;
        let (jx, jl) = self.frozen.jacobians(&point[..n], &lam)?;
        let dl = self.glued_input_derivative(s)?;
        let col = jl.mul_vec(&dl);
        let mut j = Matrix::zeros(n + 1, n + 1);
        for i in 0..n {
            for k in 0..n {
                j[(i, k)] = jx[(i, k)] / self.r;
            }
            j[(i, n)] = col[i] / self.r;
        }
        j[(n, n)] = -self.alpha * s;
        Ok(j)
    }

    /// Lifts an equilibrium of the past or future limit system onto S∓/S±.
    pub fn lift_equilibrium(&self, base: &EquilibriumRecord, side: Side) -> Result<LiftedEquilibrium> {
        if !base.is_hyperbolic() {
            return Err(Error::NonHyperbolic);
        }
        let limit = match side {
            Side::Past => self.input.past_limit(),
            Side::Future => self.input.future_limit(),
        };
        let f = self.frozen.eval(&base.x, &limit)?;
        if norm2(&f) > 1e-8 * (1.0 + norm2(&base.x)) {
            return Err(Error::Precondition(format!(
                "point is not an equilibrium of the {} limit system (‖f‖ = {:e})",
                if side == Side::Past { "past" } else { "future" },
                norm2(&f)
            )));
        }
        let n = self.n();
        let mut point = base.x.clone();
        point.push(side.s());
        let jac = self.jacobian(&point)?;
        let eig = eigen(&jac)?;
        let q = -self.alpha * side.s();
        // the transverse direction: largest s-weight among eigenvalues near q
        let mut extra = 0;
        let mut best = -1.0;
        for k in 0..eig.dim() {
            let v = &eig.vectors[k];
            let vn: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            let w = v[n].norm() / vn - (eig.values[k].re - q).abs() - eig.values[k].im.abs();
            if w > best {
                best = w;
                extra = k;
            }
        }
        let mut v = eig.real_vector(extra);
        if v[n] < 0.0 {
            v.iter_mut().for_each(|c| *c = -*c);
        }
        let vn = norm2(&v);
        v.iter_mut().for_each(|c| *c /= vn);
        let x_part = norm2(&v[..n]);
        let base_re: Vec<f64> = base.eigen.real_parts().iter().map(|l| l / self.r).collect();
        let same_side: Vec<f64> = base_re.iter().copied().filter(|l| (*l < 0.0) == (q < 0.0)).collect();
        let v_is_leading = same_side.iter().all(|l| q.abs() < l.abs());
        Ok(LiftedEquilibrium {
            base: base.clone(),
            side,
            point,
            eigen: eig,
            extra_index: extra,
            extra_vector: v,
            v_normal_to_s: x_part <= NORMAL_TOL,
            v_is_leading,
        })
    }

    /// (x, g_α(τ)) along a moving-equilibrium branch. Branches that reach
    /// τ = ±∞ already end in the limit points (e±, ±1).
    pub fn critical_manifold_sample(&self, branch: &Branch) -> Vec<(Vec<f64>, f64)> {
        let mut out = Vec::with_capacity(branch.len() + 2);
        for p in &branch.points {
            if let Some(tau) = p.tau {
                out.push((p.record.x.clone(), self.s_of(tau)));
            }
        }
        out
    }
}

fn clip(s: f64) -> f64 {
    if s > 1.0 && s - 1.0 <= S_CLIP {
        1.0
    } else if s < -1.0 && -1.0 - s <= S_CLIP {
        -1.0
    } else {
        s.clamp(-1.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftedEquilibrium {
    pub base: EquilibriumRecord,
    pub side: Side,
    /// (x, ±1)
    pub point: Vec<f64>,
    pub eigen: EigenDecomposition,
    /// Index of the eigenvalue ∓α transverse to S±.
    pub extra_index: usize,
    /// Unit extra eigenvector with positive s-component.
    pub extra_vector: Vec<f64>,
    pub v_normal_to_s: bool,
    pub v_is_leading: bool,
}

impl LiftedEquilibrium {
    pub fn extra_value(&self) -> f64 {
        self.eigen.values[self.extra_index].re
    }

    /// Number of lifted eigenvalues with positive real part.
    pub fn unstable_dimension(&self) -> usize {
        self.eigen.real_parts().iter().filter(|v| **v > 0.0).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::find_equilibrium;

    fn cs(r: f64, alpha: f64) -> CompactifiedSystem {
        let f = FrozenSystem::parse(1, 1, &["(x1+lam1)^2 - 1"], &[]).unwrap();
        let input = ExternalInput::tanh(0.0, 3.0, 1.0, 0.8).unwrap();
        CompactifiedSystem::new(f, input, r, alpha).unwrap()
    }

    #[test]
    fn g_h_examples() {
        assert_eq!(g_alpha(1.0, 0.0), 0.0);
        for a in [0.1, 0.7, 3.0] {
            assert!((h_alpha(a, g_alpha(a, 2.5)) - 2.5).abs() < 1e-12);
        }
        assert_eq!(g_alpha(2.0, f64::INFINITY), 1.0);
        assert!((g_alpha(2.0, 40.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn choose_alpha_examples() {
        assert_eq!(choose_alpha(1.0, 1.0, None), 0.5);
        assert_eq!(choose_alpha(1.0, 1.0, Some(-2.0)), 0.5);
        assert_eq!(choose_alpha(1.0, 8.0, Some(-2.0)), 0.125);
    }

    #[test]
    fn rhs_on_limit_subspaces() {
        let c = cs(2.0, 0.4);
        let up = c.rhs(&[0.5, 1.0]).unwrap();
        assert_eq!(up[1], 0.0);
        assert_eq!(up[0], ((0.5f64 + 3.0).powi(2) - 1.0) / 2.0);
        let down = c.rhs(&[0.5, -1.0]).unwrap();
        assert_eq!(down[1], 0.0);
        assert_eq!(down[0], (0.25 - 1.0) / 2.0);
        let mid = cs(1.0, 0.5).rhs(&[0.0, 0.0]).unwrap();
        assert_eq!(mid[1], 0.25);
    }

    #[test]
    fn jacobian_examples() {
        let c = cs(1.0, 0.4);
        let j = c.jacobian(&[-4.0, 1.0]).unwrap();
        assert_eq!(j[(0, 1)], 0.0);
        assert_eq!(j[(1, 1)], -0.4);
        assert_eq!(j[(0, 0)], -2.0);
        let j = c.jacobian(&[-2.0, 0.0]).unwrap();
        assert_eq!(j[(1, 1)], 0.0);
        assert_eq!(j[(1, 0)], 0.0);
    }

    #[test]
    fn lift_examples() {
        let c = cs(1.0, 0.5);
        let e_plus = find_equilibrium(&c.frozen, &[3.0], &[-4.0]).unwrap();
        let l = c.lift_equilibrium(&e_plus, Side::Future).unwrap();
        let mut re = l.eigen.real_parts();
        re.sort_by(f64::total_cmp);
        assert!((re[0] + 2.0).abs() < 1e-12 && (re[1] + 0.5).abs() < 1e-12);
        assert!(l.v_normal_to_s && l.v_is_leading);
        assert!((l.extra_vector[1] - 1.0).abs() < 1e-12);

        let eta = find_equilibrium(&c.frozen, &[3.0], &[-2.0]).unwrap();
        let l = c.lift_equilibrium(&eta, Side::Future).unwrap();
        let re = l.eigen.real_parts();
        assert!((re[0] - 2.0).abs() < 1e-12 && (re[1] + 0.5).abs() < 1e-12);

        let e_minus = find_equilibrium(&c.frozen, &[0.0], &[-1.0]).unwrap();
        let l = c.lift_equilibrium(&e_minus, Side::Past).unwrap();
        assert_eq!(l.unstable_dimension(), 1);
        assert!((l.extra_value() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn alpha_window() {
        let f = FrozenSystem::parse(1, 1, &["x1"], &[]).unwrap();
        let input = ExternalInput::tanh(0.0, 1.0, 1.0, 0.8).unwrap();
        assert!(CompactifiedSystem::new(f.clone(), input.clone(), 1.0, 0.9).is_err());
        let edge = CompactifiedSystem::new(f, input, 1.0, 0.8).unwrap();
        assert!(matches!(edge.jacobian(&[0.0, 1.0]), Err(Error::AlphaWindow { .. })));
    }
}
