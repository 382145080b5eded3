//! Equilibria of the frozen system, their stability class, and natural
//! continuation along parameter paths with fold detection.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::numcore::{dist2, eigen, newton, norm2, EigenDecomposition, Lu, NewtonOptions};
use crate::systems::{ExternalInput, FrozenSystem, ParameterPath};
use crate::{Error, Result};

pub const HYPERBOLICITY_TOL: f64 = 1e-6;
pub const FOLD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityClass {
    Sink,
    /// Saddle with this many unstable directions.
    Saddle(usize),
    Source,
    NonHyperbolic,
}

impl StabilityClass {
    pub fn label(&self) -> alloc::string::String {
        match self {
            StabilityClass::Sink => "sink".into(),
            StabilityClass::Saddle(k) => format!("saddle{k}"),
            StabilityClass::Source => "source".into(),
            StabilityClass::NonHyperbolic => "nonhyperbolic".into(),
        }
    }
}

pub fn classify(eig: &EigenDecomposition, hyperbolicity_tol: f64) -> StabilityClass {
    let re = eig.real_parts();
    if re.iter().any(|v| v.abs() < hyperbolicity_tol) {
        return StabilityClass::NonHyperbolic;
    }
    let unstable = re.iter().filter(|v| **v > 0.0).count();
    match unstable {
        0 => StabilityClass::Sink,
        k if k == re.len() => StabilityClass::Source,
        k => StabilityClass::Saddle(k),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumRecord {
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
    pub eigen: EigenDecomposition,
    pub class: StabilityClass,
    pub residual: f64,
}

impl EquilibriumRecord {
    pub fn unstable_dimension(&self) -> usize {
        self.eigen.real_parts().iter().filter(|v| **v > 0.0).count()
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.class != StabilityClass::NonHyperbolic
    }

    /// Hyperbolic with exactly one unstable direction: a candidate regular
    /// edge state (a 1-D source qualifies).
    pub fn is_edge_candidate(&self) -> bool {
        self.is_hyperbolic() && self.unstable_dimension() == 1
    }

    pub fn is_sink(&self) -> bool {
        self.class == StabilityClass::Sink
    }

    /// Index of the (unique) unstable eigenvalue, if the record is an edge candidate.
    pub fn unstable_index(&self) -> Option<usize> {
        if !self.is_edge_candidate() {
            return None;
        }
        // eigenvalues are sorted by descending real part
        self.eigen.is_real(0).then_some(0)
    }

    /// Real unit eigenvector of the unstable direction.
    pub fn unstable_vector(&self) -> Option<Vec<f64>> {
        self.unstable_index().map(|i| self.eigen.real_vector(i))
    }
}

/// Builds the record for a point already known to be an equilibrium.
pub fn record_at(frozen: &FrozenSystem, x: &[f64], lambda: &[f64], hyperbolicity_tol: f64) -> Result<EquilibriumRecord> {
    let jx = frozen.jacobian_x(x, lambda)?;
    let eig = eigen(&jx)?;
    let class = classify(&eig, hyperbolicity_tol);
    let residual = norm2(&frozen.eval(x, lambda)?);
    Ok(EquilibriumRecord { x: x.to_vec(), lambda: lambda.to_vec(), eigen: eig, class, residual })
}

pub fn find_equilibrium(frozen: &FrozenSystem, lambda: &[f64], guess: &[f64]) -> Result<EquilibriumRecord> {
    find_equilibrium_with(frozen, lambda, guess, NewtonOptions::default(), HYPERBOLICITY_TOL)
}

pub fn find_equilibrium_with(
    frozen: &FrozenSystem,
    lambda: &[f64],
    guess: &[f64],
    opts: NewtonOptions,
    hyperbolicity_tol: f64,
) -> Result<EquilibriumRecord> {
    if guess.len() != frozen.n() || lambda.len() != frozen.d() {
        return Err(Error::Dimension(format!(
            "guess/λ of length {}/{} for n = {}, d = {}",
            guess.len(),
            lambda.len(),
            frozen.n(),
            frozen.d()
        )));
    }
    if guess.iter().chain(lambda).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite equilibrium guess".into()));
    }
    let sol = newton(|x| frozen.eval(x, lambda), |x| frozen.jacobian_x(x, lambda), guess, opts)?;
    record_at(frozen, &sol.x, lambda, hyperbolicity_tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchEnd {
    PathEnd,
    Fold,
    ClassChange,
    NewtonFailure,
}

impl BranchEnd {
    pub fn label(&self) -> &'static str {
        match self {
            BranchEnd::PathEnd => "path_end",
            BranchEnd::Fold => "fold",
            BranchEnd::ClassChange => "class_change",
            BranchEnd::NewtonFailure => "newton_failure",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    /// Continuation parameter (path u, or g_α(τ) for moving equilibria).
    pub u: f64,
    /// τ for input-driven branches.
    pub tau: Option<f64>,
    pub record: EquilibriumRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    /// Ordered by increasing u.
    pub points: Vec<BranchPoint>,
    /// Annotation of the low-u and high-u ends.
    pub start: BranchEnd,
    pub end: BranchEnd,
    pub class: StabilityClass,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationOptions {
    /// Largest step as a fraction of the path-parameter range.
    pub max_step_fraction: f64,
    /// Steps below this terminate continuation (bisection resolution).
    pub fold_tol: f64,
    /// Largest accepted ‖Δx‖ relative to 1 + ‖x‖.
    pub max_dx: f64,
    pub hyperbolicity_tol: f64,
    pub newton: NewtonOptions,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            max_step_fraction: 0.01,
            fold_tol: FOLD_TOL,
            max_dx: 0.05,
            hyperbolicity_tol: HYPERBOLICITY_TOL,
            newton: NewtonOptions::default(),
        }
    }
}

enum Attempt {
    Accepted(EquilibriumRecord),
    NoRoot,
    OtherClass(StabilityClass),
    TooFar,
}

struct Walker<'a> {
    frozen: &'a FrozenSystem,
    path: &'a ParameterPath,
    opts: ContinuationOptions,
}

impl Walker<'_> {
    /// dx/du = −(∂f/∂x)⁻¹ ∂f/∂λ · dλ/du
    fn tangent(&self, rec: &EquilibriumRecord, dl: &[f64]) -> Result<Vec<f64>> {
        let (jx, jl) = self.frozen.jacobians(&rec.x, &rec.lambda)?;
        let rhs: Vec<f64> = jl.mul_vec(dl).into_iter().map(|v| -v).collect();
        Ok(Lu::factor(&jx).map(|lu| lu.solve(&rhs)).unwrap_or_else(|_| vec![0.0; rec.x.len()]))
    }

    /// Tangent predictor first; near folds the predictor overshoots, so a
    /// rejected prediction is retried from the previous state.
    fn attempt(&self, from: &EquilibriumRecord, tangent: &[f64], du: f64, u: f64) -> Result<Attempt> {
        let (lam, _) = self.path.point(u)?;
        let pred: Vec<f64> = from.x.iter().zip(tangent).map(|(x, t)| x + du * t).collect();
        if pred.iter().all(|v| v.is_finite()) {
            if let a @ Attempt::Accepted(_) = self.correct(from, &lam, &pred)? {
                return Ok(a);
            }
        }
        self.correct(from, &lam, &from.x)
    }

    fn correct(&self, from: &EquilibriumRecord, lam: &[f64], guess: &[f64]) -> Result<Attempt> {
        let rec = match find_equilibrium_with(self.frozen, lam, guess, self.opts.newton, self.opts.hyperbolicity_tol) {
            Ok(r) => r,
            Err(e) if e.is_numerical() => return Ok(Attempt::NoRoot),
            Err(e) => return Err(e),
        };
        if dist2(&rec.x, &from.x) > self.opts.max_dx * (1.0 + norm2(&from.x)) {
            return Ok(Attempt::TooFar);
        }
        if rec.class != from.class {
            return Ok(Attempt::OtherClass(rec.class));
        }
        Ok(Attempt::Accepted(rec))
    }

    /// Walks from `seed` at `u0` toward `u1` (either direction).
    fn walk(&self, seed: EquilibriumRecord, u0: f64, u1: f64) -> Result<(Vec<(f64, EquilibriumRecord)>, BranchEnd)> {
        let span = (u1 - u0).abs();
        let dir = if u1 >= u0 { 1.0 } else { -1.0 };
        let mut out = vec![(u0, seed)];
        if span == 0.0 {
            return Ok((out, BranchEnd::PathEnd));
        }
        let h_max = self.opts.max_step_fraction * span;
        let mut h = h_max;
        let mut failed_once = false;
        let mut last_failure;
        loop {
            let (u, rec) = out.last().expect("non-empty");
            let (u, rec) = (*u, rec.clone());
            if (u1 - u) * dir <= 0.0 {
                return Ok((out, BranchEnd::PathEnd));
            }
            let remaining = (u1 - u).abs();
            let step = h.min(remaining);
            let u_next = if step == remaining { u1 } else { u + dir * step };
            let (_, dl) = self.path.point(u)?;
            let tangent = self.tangent(&rec, &dl)?;
            match self.attempt(&rec, &tangent, u_next - u, u_next)? {
                Attempt::Accepted(next) => {
                    out.push((u_next, next));
                    if !failed_once {
                        h = (h * 1.5).min(h_max);
                    }
                }
                other => {
                    last_failure = other;
                    failed_once = true;
                    // the failed step brackets the end of the branch
                    if step <= self.opts.fold_tol {
                        break;
                    }
                    h = 0.5 * step;
                }
            }
        }
        let last = &out.last().expect("non-empty").1;
        let scale = last.eigen.dim() as f64 * (1.0 + last.eigen.values.iter().map(|v| v.norm()).fold(0.0, f64::max));
        let near_singular = last.eigen.min_abs_real() < 1e-3 * scale;
        let end = match last_failure {
            Attempt::NoRoot | Attempt::TooFar | Attempt::OtherClass(StabilityClass::NonHyperbolic) if near_singular => {
                BranchEnd::Fold
            }
            Attempt::OtherClass(_) if near_singular => BranchEnd::Fold,
            Attempt::OtherClass(_) => BranchEnd::ClassChange,
            _ => BranchEnd::NewtonFailure,
        };
        Ok((out, end))
    }
}

/// Natural-parameter continuation from a seed at the start of the path's
/// domain to its end.
pub fn continue_branch(frozen: &FrozenSystem, seed: &EquilibriumRecord, path: &ParameterPath, opts: ContinuationOptions) -> Result<Branch> {
    let (u0, u1) = path.domain();
    continue_between(frozen, seed, path, u0, (u0, u1), opts)
}

/// Continues from a seed at `u_seed` in both directions across `range`.
pub fn continue_between(
    frozen: &FrozenSystem,
    seed: &EquilibriumRecord,
    path: &ParameterPath,
    u_seed: f64,
    range: (f64, f64),
    opts: ContinuationOptions,
) -> Result<Branch> {
    if path.dim() != frozen.d() {
        return Err(Error::Dimension(format!("path has d = {}, system expects {}", path.dim(), frozen.d())));
    }
    let (lam, _) = path.point(u_seed)?;
    let start = find_equilibrium_with(frozen, &lam, &seed.x, opts.newton, opts.hyperbolicity_tol)?;
    if !start.is_hyperbolic() {
        return Err(Error::NonHyperbolic);
    }
    let walker = Walker { frozen, path, opts };
    let (lo, hi) = (range.0.min(range.1), range.0.max(range.1));
    let (mut back, start_end) = walker.walk(start.clone(), u_seed, lo)?;
    let (fwd, end) = walker.walk(start.clone(), u_seed, hi)?;
    back.reverse();
    back.pop();
    back.extend(fwd);
    let points = back
        .into_iter()
        .map(|(u, record)| BranchPoint { u, tau: path.tau_at(u), record })
        .collect();
    Ok(Branch { points, start: start_end, end, class: start.class })
}

/// The branch e(Λ(τ)) (or η(Λ(τ))) over all τ, parametrised by u = g_α(τ)
/// with α = ρ/2, so the grid clusters logarithmically toward τ = ±∞ and the
/// endpoints, when reached, are the limit equilibria at λ±.
pub fn moving_equilibrium(
    frozen: &FrozenSystem,
    input: &ExternalInput,
    seed: &EquilibriumRecord,
    tau_seed: f64,
    opts: ContinuationOptions,
) -> Result<Branch> {
    let path = ParameterPath::of_input(input.clone(), (f64::NEG_INFINITY, f64::INFINITY))?;
    let u_seed = path.u_of_tau(tau_seed).expect("input path");
    continue_between(frozen, seed, &path, u_seed, (-1.0, 1.0), opts)
}

impl Branch {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> &BranchPoint {
        &self.points[0]
    }

    pub fn last(&self) -> &BranchPoint {
        self.points.last().expect("branch has a seed record")
    }

    /// Range of u covered.
    pub fn u_range(&self) -> (f64, f64) {
        (self.first().u, self.last().u)
    }

    /// Maximal τ interval I (for input-driven branches).
    pub fn interval(&self) -> Option<(f64, f64)> {
        Some((self.first().tau?, self.last().tau?))
    }

    /// Record at τ = −∞ if the branch reaches the past limit.
    pub fn past_limit(&self) -> Option<&EquilibriumRecord> {
        (self.first().tau == Some(f64::NEG_INFINITY)).then(|| &self.first().record)
    }

    pub fn future_limit(&self) -> Option<&EquilibriumRecord> {
        (self.last().tau == Some(f64::INFINITY)).then(|| &self.last().record)
    }

    pub fn covers_u(&self, u: f64) -> bool {
        let (a, b) = self.u_range();
        u >= a && u <= b
    }

    /// Linear interpolation of x in u (None outside the covered range).
    pub fn interpolate_u(&self, u: f64) -> Option<Vec<f64>> {
        if !self.covers_u(u) {
            return None;
        }
        let k = self.points.partition_point(|p| p.u <= u);
        if k == 0 {
            return Some(self.first().record.x.clone());
        }
        if k >= self.points.len() {
            return Some(self.last().record.x.clone());
        }
        let (a, b) = (&self.points[k - 1], &self.points[k]);
        let w = if b.u > a.u { (u - a.u) / (b.u - a.u) } else { 0.0 };
        Some(a.record.x.iter().zip(&b.record.x).map(|(p, q)| p + w * (q - p)).collect())
    }

    /// Equilibrium on this branch at parameter λ, polished by Newton from
    /// the interpolated state at `u`.
    pub fn state_at(&self, frozen: &FrozenSystem, u: f64, lambda: &[f64]) -> Result<Vec<f64>> {
        let guess = self.interpolate_u(u).ok_or(Error::BranchTruncated)?;
        let sol = newton(|x| frozen.eval(x, lambda), |x| frozen.jacobian_x(x, lambda), &guess, NewtonOptions::default())?;
        Ok(sol.x)
    }

    /// e(Λ(τ)) for a branch built by [`moving_equilibrium`] on `input`.
    pub fn state_at_tau(&self, frozen: &FrozenSystem, input: &ExternalInput, tau: f64) -> Result<Vec<f64>> {
        let u = crate::compact::g_alpha(0.5 * input.rho(), tau);
        let lambda = input.value(tau)?;
        self.state_at(frozen, u, &lambda)
    }
}
