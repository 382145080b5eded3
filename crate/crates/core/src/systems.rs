//! Frozen systems f(x, λ), external inputs Λ(τ) with limits λ± and decay
//! coefficient ρ, parameter paths, and the rate-parametrised system
//! x' = f(x, Λ(τ)) / r.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::compact::{g_alpha, h_alpha, h_alpha_derivative};
use crate::expr::Expr;
use crate::numcore::Matrix;
use crate::tipping::reparam::SigmaReparam;
use crate::{Error, Result};

pub fn state_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

pub fn input_names(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("lam{i}")).collect()
}

/// The autonomous system ẋ = f(x, λ) for fixed λ ∈ ℝᵈ.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenSystem {
    n: usize,
    d: usize,
    components: Vec<Expr>,
    sources: Vec<String>,
}

impl FrozenSystem {
    /// Parses the n component expressions over `x1..xn, lam1..lamd` and the
    /// named constants, which are substituted immediately.
    pub fn parse(n: usize, d: usize, sources: &[&str], constants: &[(&str, f64)]) -> Result<Self> {
        if sources.len() != n {
            return Err(Error::Dimension(format!("{} component expressions for n = {n}", sources.len())));
        }
        if n == 0 {
            return Err(Error::Dimension("state dimension must be positive".into()));
        }
        let mut names: Vec<String> = state_names(n);
        names.extend(input_names(d));
        names.extend(constants.iter().map(|(k, _)| k.to_string()));
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let values: Vec<f64> = constants.iter().map(|(_, v)| *v).collect();
        let mut components = Vec::with_capacity(n);
        for src in sources {
            components.push(Expr::parse(src, &refs)?.bind_trailing(n + d, &values));
        }
        Ok(FrozenSystem { n, d, components, sources: sources.iter().map(|s| s.to_string()).collect() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    /// f at the concatenated point `[x, λ]`.
    pub fn eval_point(&self, point: &[f64], out: &mut [f64]) -> Result<()> {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(point)?;
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64], lambda: &[f64]) -> Result<Vec<f64>> {
        let point = self.point(x, lambda);
        let mut out = vec![0.0; self.n];
        self.eval_point(&point, &mut out)?;
        Ok(out)
    }

    fn point(&self, x: &[f64], lambda: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(lambda.len(), self.d);
        let mut p = Vec::with_capacity(self.n + self.d);
        p.extend_from_slice(x);
        p.extend_from_slice(lambda);
        p
    }

    /// (∂f/∂x, ∂f/∂λ) from dual-number evaluation.
    pub fn jacobians(&self, x: &[f64], lambda: &[f64]) -> Result<(Matrix, Matrix)> {
        let point = self.point(x, lambda);
        let mut jx = Matrix::zeros(self.n, self.n);
        let mut jl = Matrix::zeros(self.n, self.d);
        let mut grad = vec![0.0; self.n + self.d];
        for (i, c) in self.components.iter().enumerate() {
            c.eval_grad(&point, &mut grad)?;
            for j in 0..self.n {
                jx[(i, j)] = grad[j];
            }
            for j in 0..self.d {
                jl[(i, j)] = grad[self.n + j];
            }
        }
        Ok((jx, jl))
    }

    pub fn jacobian_x(&self, x: &[f64], lambda: &[f64]) -> Result<Matrix> {
        Ok(self.jacobians(x, lambda)?.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputComponent {
    /// λ⁻ + (λ⁺ − λ⁻)(1 + tanh(στ/2))/2
    Tanh { minus: f64, plus: f64, steepness: f64 },
    /// λ⁰ + A·sech(τ/w); both limits equal λ⁰.
    SechPulse { base: f64, amplitude: f64, width: f64 },
    /// Expression in `tau` with declared limits.
    User { expr: Expr, source: String, minus: f64, plus: f64 },
}

impl InputComponent {
    pub fn user(source: &str, minus: f64, plus: f64, constants: &[(&str, f64)]) -> Result<Self> {
        let mut names = vec!["tau"];
        names.extend(constants.iter().map(|(k, _)| *k));
        let values: Vec<f64> = constants.iter().map(|(_, v)| *v).collect();
        let expr = Expr::parse(source, &names)?.bind_trailing(1, &values);
        Ok(InputComponent::User { expr, source: source.to_string(), minus, plus })
    }

    pub fn limits(&self) -> (f64, f64) {
        match self {
            InputComponent::Tanh { minus, plus, .. } => (*minus, *plus),
            InputComponent::SechPulse { base, .. } => (*base, *base),
            InputComponent::User { minus, plus, .. } => (*minus, *plus),
        }
    }

    pub fn value(&self, tau: f64) -> Result<f64> {
        if tau == f64::INFINITY {
            return Ok(self.limits().1);
        }
        if tau == f64::NEG_INFINITY {
            return Ok(self.limits().0);
        }
        Ok(match self {
            InputComponent::Tanh { minus, plus, steepness } => {
                minus + (plus - minus) * 0.5 * (1.0 + (0.5 * steepness * tau).tanh())
            }
            InputComponent::SechPulse { base, amplitude, width } => base + amplitude / (tau / width).cosh(),
            InputComponent::User { expr, .. } => expr.eval(&[tau])?,
        })
    }

    pub fn derivative(&self, tau: f64) -> Result<f64> {
        if !tau.is_finite() {
            return Ok(0.0);
        }
        Ok(match self {
            InputComponent::Tanh { minus, plus, steepness } => {
                let c = (0.5 * steepness * tau).cosh();
                (plus - minus) * 0.25 * steepness / (c * c)
            }
            InputComponent::SechPulse { amplitude, width, .. } => {
                let v = tau / width;
                -amplitude / width * v.tanh() / v.cosh()
            }
            InputComponent::User { expr, .. } => expr.eval_dual(&[tau])?.partials[0],
        })
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            InputComponent::Tanh { minus, plus, steepness } => {
                minus.is_finite() && plus.is_finite() && steepness.is_finite() && *steepness > 0.0
            }
            InputComponent::SechPulse { base, amplitude, width } => {
                base.is_finite() && amplitude.is_finite() && width.is_finite() && *width > 0.0
            }
            InputComponent::User { expr, minus, plus, .. } => {
                minus.is_finite() && plus.is_finite() && expr.max_variable().is_none_or(|v| v == 0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("malformed input component {self:?}")))
        }
    }
}

/// Result of the numerical limit/decay verification.
#[derive(Debug, Clone, PartialEq)]
pub struct InputCheck {
    pub t_check: f64,
    /// Largest |Λ(±T) − λ±| / (1 + |λ±|).
    pub limit_error: f64,
    /// Largest ratio |Λ'(T)|e^{ρT} / (|Λ'(T/2)|e^{ρT/2}) over components and both ends.
    pub decay_ratio: f64,
}

/// Λ(τ) with declared limits and decay coefficient ρ, optionally composed
/// with a σ time change (then Λ̃(τ) = Λ(σ(τ)) with decay coefficient ερ).
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalInput {
    components: Vec<InputComponent>,
    rho: f64,
    warp: Option<SigmaReparam>,
}

pub const T_CHECK_FACTOR: f64 = 40.0;
const LIMIT_TOL: f64 = 1e-8;
const DECAY_RATIO_MAX: f64 = 0.5;

impl ExternalInput {
    pub fn new(components: Vec<InputComponent>, rho: f64) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Dimension("input needs at least one component".into()));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("decay coefficient ρ = {rho} must be positive")));
        }
        for c in &components {
            c.validate()?;
        }
        Ok(ExternalInput { components, rho, warp: None })
    }

    pub fn tanh(minus: f64, plus: f64, steepness: f64, rho: f64) -> Result<Self> {
        ExternalInput::new(vec![InputComponent::Tanh { minus, plus, steepness }], rho)
    }

    pub fn d(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[InputComponent] {
        &self.components
    }

    /// Decay coefficient of this input (ε·ρ for a warped input).
    pub fn rho(&self) -> f64 {
        match &self.warp {
            Some(s) => s.eps() * self.rho,
            None => self.rho,
        }
    }

    pub fn warp(&self) -> Option<&SigmaReparam> {
        self.warp.as_ref()
    }

    /// The same input read through σ: Λ̃(τ) = Λ(σ(τ)).
    pub fn reparametrized(&self, sigma: SigmaReparam) -> Result<Self> {
        if self.warp.is_some() {
            return Err(Error::InvalidParameter("input is already reparametrized".into()));
        }
        Ok(ExternalInput { components: self.components.clone(), rho: self.rho, warp: Some(sigma) })
    }

    pub fn past_limit(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.limits().0).collect()
    }

    pub fn future_limit(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.limits().1).collect()
    }

    fn inner_time(&self, tau: f64) -> f64 {
        match (&self.warp, tau.is_finite()) {
            (Some(s), true) => s.eval(tau),
            _ => tau,
        }
    }

    /// Λ(τ); τ = ±∞ returns λ± exactly.
    pub fn value(&self, tau: f64) -> Result<Vec<f64>> {
        let t = self.inner_time(tau);
        self.components.iter().map(|c| c.value(t)).collect()
    }

    pub fn value_into(&self, tau: f64, out: &mut [f64]) -> Result<()> {
        let t = self.inner_time(tau);
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.value(t)?;
        }
        Ok(())
    }

    /// Λ'(τ) (zero at τ = ±∞).
    pub fn derivative(&self, tau: f64) -> Result<Vec<f64>> {
        let t = self.inner_time(tau);
        let chain = match (&self.warp, tau.is_finite()) {
            (Some(s), true) => s.derivative(tau),
            _ => 1.0,
        };
        self.components.iter().map(|c| Ok(c.derivative(t)? * chain)).collect()
    }

    /// Numerical check of the declared limits and decay coefficient at
    /// T_check = 40/ρ.
    pub fn verify(&self) -> Result<InputCheck> {
        let rho = self.rho();
        let t = T_CHECK_FACTOR / rho;
        let lp = self.future_limit();
        let lm = self.past_limit();
        let vp = self.value(t)?;
        let vm = self.value(-t)?;
        let mut limit_error: f64 = 0.0;
        for i in 0..self.d() {
            limit_error = limit_error.max((vp[i] - lp[i]).abs() / (1.0 + lp[i].abs()));
            limit_error = limit_error.max((vm[i] - lm[i]).abs() / (1.0 + lm[i].abs()));
        }
        if limit_error > LIMIT_TOL {
            return Err(Error::InputCheck(format!(
                "Λ(±{t}) misses the declared limits by {limit_error:e} (relative)"
            )));
        }
        let mut decay_ratio: f64 = 0.0;
        for sign in [1.0, -1.0] {
            let far = self.derivative(sign * t)?;
            let near = self.derivative(sign * 0.5 * t)?;
            for i in 0..self.d() {
                let a = far[i].abs() * (rho * t).exp();
                let b = near[i].abs() * (0.5 * rho * t).exp();
                let ratio = if a == 0.0 {
                    0.0
                } else if b == 0.0 {
                    f64::INFINITY
                } else {
                    a / b
                };
                decay_ratio = decay_ratio.max(ratio);
            }
        }
        if decay_ratio > DECAY_RATIO_MAX {
            return Err(Error::InputCheck(format!(
                "‖Λ'(τ)‖e^(ρ|τ|) does not decay on [T/2, T] (ratio {decay_ratio:.3}); declared ρ = {rho} is not below the input's decay rate"
            )));
        }
        Ok(InputCheck { t_check: t, limit_error, decay_ratio })
    }
}

/// A compact set of parameter values: the trace of an input on an interval
/// or an explicit curve u ∈ [0, 1] → ℝᵈ.
#[derive(Debug, Clone, PartialEq)]
pub enum ParameterPath {
    OfInput { input: ExternalInput, interval: (f64, f64) },
    Curve { components: Vec<Expr> },
}

impl ParameterPath {
    pub fn of_input(input: ExternalInput, interval: (f64, f64)) -> Result<Self> {
        if !(interval.0 <= interval.1) || interval.0 == f64::INFINITY || interval.1 == f64::NEG_INFINITY {
            return Err(Error::InvalidParameter(format!("bad path interval {interval:?}")));
        }
        Ok(ParameterPath::OfInput { input, interval })
    }

    /// Curve from d expressions in `u`.
    pub fn curve(sources: &[&str]) -> Result<Self> {
        let components = sources.iter().map(|s| Expr::parse(s, &["u"])).collect::<Result<Vec<_>>>()?;
        Ok(ParameterPath::Curve { components })
    }

    /// Straight segment between two parameter values.
    pub fn segment(from: &[f64], to: &[f64]) -> Self {
        let components = from
            .iter()
            .zip(to)
            .map(|(a, b)| {
                use crate::expr::{BinOp, Node};
                use alloc::boxed::Box;
                let slope = Expr {
                    node: Node::Binary(BinOp::Mul, Box::new(Expr::num(b - a)), Box::new(Expr::var(0))),
                    offset: 0,
                };
                Expr { node: Node::Binary(BinOp::Add, Box::new(Expr::num(*a)), Box::new(slope)), offset: 0 }
            })
            .collect();
        ParameterPath::Curve { components }
    }

    pub fn dim(&self) -> usize {
        match self {
            ParameterPath::OfInput { input, .. } => input.d(),
            ParameterPath::Curve { components } => components.len(),
        }
    }

    /// α of the compactifying coordinate used on infinite intervals.
    pub fn grid_alpha(&self) -> Option<f64> {
        match self {
            ParameterPath::OfInput { input, interval } if !(interval.0.is_finite() && interval.1.is_finite()) => {
                Some(0.5 * input.rho())
            }
            _ => None,
        }
    }

    /// Range of the continuation parameter u.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            ParameterPath::OfInput { interval, .. } => match self.grid_alpha() {
                Some(a) => (g_alpha(a, interval.0), g_alpha(a, interval.1)),
                None => *interval,
            },
            ParameterPath::Curve { .. } => (0.0, 1.0),
        }
    }

    /// τ belonging to path parameter u (None for explicit curves).
    pub fn tau_at(&self, u: f64) -> Option<f64> {
        match self {
            ParameterPath::OfInput { .. } => Some(match self.grid_alpha() {
                Some(a) => h_alpha(a, u),
                None => u,
            }),
            ParameterPath::Curve { .. } => None,
        }
    }

    pub fn u_of_tau(&self, tau: f64) -> Option<f64> {
        match self {
            ParameterPath::OfInput { .. } => Some(match self.grid_alpha() {
                Some(a) => g_alpha(a, tau),
                None => tau,
            }),
            ParameterPath::Curve { .. } => None,
        }
    }

    /// λ(u) and dλ/du.
    pub fn point(&self, u: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        match self {
            ParameterPath::OfInput { input, .. } => match self.grid_alpha() {
                Some(a) => {
                    let tau = h_alpha(a, u);
                    let lam = input.value(tau)?;
                    if !tau.is_finite() {
                        return Ok((lam, vec![0.0; input.d()]));
                    }
                    let dh = h_alpha_derivative(a, u);
                    let dl = input.derivative(tau)?.into_iter().map(|v| v * dh).collect();
                    Ok((lam, dl))
                }
                None => Ok((input.value(u)?, input.derivative(u)?)),
            },
            ParameterPath::Curve { components } => {
                let mut lam = Vec::with_capacity(components.len());
                let mut dl = Vec::with_capacity(components.len());
                for c in components {
                    let d = c.eval_dual(&[u])?;
                    lam.push(d.value);
                    dl.push(d.partials[0]);
                }
                Ok((lam, dl))
            }
        }
    }

    /// `m` samples uniform in u; duplicates (within 1e-9 of the sampled
    /// extent) are removed keeping first occurrences.
    pub fn trace(&self, m: usize) -> Result<Vec<Vec<f64>>> {
        if m < 2 {
            return Err(Error::InvalidParameter("trace_path needs m ≥ 2".into()));
        }
        let (u0, u1) = self.domain();
        let mut pts = Vec::with_capacity(m);
        for k in 0..m {
            let u = if k + 1 == m { u1 } else { u0 + (u1 - u0) * k as f64 / (m - 1) as f64 };
            pts.push(self.point(u)?.0);
        }
        Ok(dedup_points(pts))
    }
}

pub fn dedup_points(pts: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let d = pts.first().map_or(0, Vec::len);
    let mut extent: f64 = 0.0;
    for j in 0..d {
        let lo = pts.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max);
        extent = extent.max(hi - lo);
    }
    let tol = 1e-9 * (1.0 + extent);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(pts.len());
    for p in pts {
        if !out.iter().any(|q| q.iter().zip(&p).all(|(a, b)| (a - b).abs() <= tol)) {
            out.push(p);
        }
    }
    out
}

/// x' = f(x, Λ(τ)) / r.
#[derive(Debug, Clone, PartialEq)]
pub struct NonautonomousSystem {
    pub frozen: FrozenSystem,
    pub input: ExternalInput,
    pub r: f64,
}

impl NonautonomousSystem {
    pub fn new(frozen: FrozenSystem, input: ExternalInput, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("rate r = {r} must be positive")));
        }
        if frozen.d() != input.d() {
            return Err(Error::Dimension(format!("system expects d = {}, input has {}", frozen.d(), input.d())));
        }
        Ok(NonautonomousSystem { frozen, input, r })
    }

    pub fn rhs(&self, tau: f64, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.frozen.n()];
        self.rhs_into(tau, x, &mut out)?;
        Ok(out)
    }

    pub fn rhs_into(&self, tau: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.frozen.n();
        let mut point = vec![0.0; n + self.frozen.d()];
        point[..n].copy_from_slice(x);
        self.input.value_into(tau, &mut point[n..])?;
        self.frozen.eval_point(&point, out)?;
        out.iter_mut().for_each(|v| *v /= self.r);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> FrozenSystem {
        FrozenSystem::parse(1, 1, &["(x1+lam1)^2 - 1"], &[]).unwrap()
    }

    #[test]
    fn input_examples() {
        let i = ExternalInput::tanh(0.0, 2.0, 1.0, 0.5).unwrap();
        assert_eq!(i.value(0.0).unwrap(), vec![1.0]);
        assert_eq!(i.value(f64::INFINITY).unwrap(), vec![2.0]);
        let p = ExternalInput::new(vec![InputComponent::SechPulse { base: 0.0, amplitude: 3.0, width: 1.0 }], 0.5)
            .unwrap();
        assert_eq!(p.value(0.0).unwrap(), vec![3.0]);
        assert_eq!(p.value(f64::NEG_INFINITY).unwrap(), vec![0.0]);
    }

    #[test]
    fn rhs_examples() {
        let input = ExternalInput::tanh(0.0, 2.0, 1.0, 0.5).unwrap();
        let s = NonautonomousSystem::new(quad(), input.clone(), 1.0).unwrap();
        assert_eq!(s.rhs(0.0, &[0.0]).unwrap(), vec![0.0]);
        let s = NonautonomousSystem::new(quad(), input.clone(), 2.0).unwrap();
        assert_eq!(s.rhs(0.0, &[0.0]).unwrap(), vec![0.0]);
        let lin = FrozenSystem::parse(1, 1, &["x1"], &[]).unwrap();
        let s = NonautonomousSystem::new(lin, input, 0.5).unwrap();
        assert_eq!(s.rhs(1.3, &[3.0]).unwrap(), vec![6.0]);
    }

    #[test]
    fn constants_are_bound() {
        let f = FrozenSystem::parse(1, 1, &["k*x1 + lam1"], &[("k", -2.0)]).unwrap();
        assert_eq!(f.eval(&[1.0], &[0.5]).unwrap(), vec![-1.5]);
        let (jx, jl) = f.jacobians(&[1.0], &[0.5]).unwrap();
        assert_eq!((jx[(0, 0)], jl[(0, 0)]), (-2.0, 1.0));
        assert!(matches!(
            FrozenSystem::parse(1, 1, &["q*x1"], &[]),
            Err(Error::UnknownIdentifier { .. })
        ));
    }

    #[test]
    fn decay_check() {
        assert!(ExternalInput::tanh(0.0, 3.0, 1.0, 0.8).unwrap().verify().is_ok());
        assert!(ExternalInput::tanh(0.0, 3.0, 1.0, 0.95).unwrap().verify().is_ok());
        assert!(ExternalInput::tanh(0.0, 3.0, 1.0, 1.0).unwrap().verify().is_err());
        assert!(ExternalInput::tanh(0.0, 3.0, 1.0, 1.5).unwrap().verify().is_err());
        // constant input: derivative vanishes identically
        assert!(ExternalInput::tanh(1.0, 1.0, 1.0, 0.5).unwrap().verify().is_ok());
        let user = InputComponent::user("2*tanh(tau)", -2.0, 2.0, &[]).unwrap();
        assert!(ExternalInput::new(vec![user.clone()], 1.5).unwrap().verify().is_ok());
        assert!(ExternalInput::new(vec![user], 2.5).unwrap().verify().is_err());
        let wrong = InputComponent::user("2*tanh(tau)", -2.0, 1.0, &[]).unwrap();
        assert!(ExternalInput::new(vec![wrong], 1.0).unwrap().verify().is_err());
    }

    #[test]
    fn trace_examples() {
        let c = ParameterPath::curve(&["u"]).unwrap();
        assert_eq!(c.trace(3).unwrap(), vec![vec![0.0], vec![0.5], vec![1.0]]);
        let p = ParameterPath::of_input(ExternalInput::tanh(0.0, 2.0, 1.0, 0.5).unwrap(), (f64::NEG_INFINITY, f64::INFINITY))
            .unwrap();
        let t = p.trace(101).unwrap();
        assert_eq!(t.first().unwrap(), &vec![0.0]);
        assert_eq!(t.last().unwrap(), &vec![2.0]);
    }
}
