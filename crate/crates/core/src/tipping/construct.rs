//! Builds an input Λ̃ = Λ∘σ that tips at a prescribed rate r* from a
//! forward threshold instability of Λ.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::vec::Vec;

use super::critical::{classify_from_outcomes, Classification};
use super::{RateRun, SigmaReparam, TippingProblem, CONNECT_TOL};
use crate::equilibria::{find_equilibrium, Branch};
use crate::manifolds::{frozen_threshold, pullback_attractor, signed_distance, threshold_sections, Outcome, ThresholdOptions};
use crate::numcore::dist2;
use crate::systems::ExternalInput;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstructOptions {
    pub r_star: f64,
    /// Half-width of the square neighbourhood 𝒩 around the scan pair.
    pub half_width: f64,
    /// Samples per axis of 𝒩.
    pub grid: usize,
    /// Default: half of min(max Δ, −min Δ) over 𝒩.
    pub delta_target: Option<f64>,
    pub eps_start: f64,
    pub eps_floor: f64,
    pub connect_tol: f64,
    pub max_bisections: usize,
}

impl Default for ConstructOptions {
    fn default() -> Self {
        ConstructOptions {
            r_star: 1.0,
            half_width: 0.5,
            grid: 21,
            delta_target: None,
            eps_start: 0.5,
            eps_floor: 1e-4,
            connect_tol: CONNECT_TOL,
            max_bisections: 200,
        }
    }
}

/// The three numerical bounds of the construction at one ε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProofBounds {
    pub eps: f64,
    /// sup over τ ≤ 0 of ‖x(τ) − e(Λ̃(τ))‖.
    pub pullback: f64,
    /// max over sampled τ ≥ ε of the distance from Θ(τ) to θ(Λ̃(τ)).
    pub threshold: f64,
    /// ‖x(0) − x(ε)‖.
    pub continuity: f64,
}

impl ProofBounds {
    fn max(self, o: ProofBounds) -> ProofBounds {
        ProofBounds {
            eps: self.eps,
            pullback: self.pullback.max(o.pullback),
            threshold: self.threshold.max(o.threshold),
            continuity: self.continuity.max(o.continuity),
        }
    }

    pub fn hold(&self, delta: f64) -> bool {
        let third = delta / 3.0;
        self.pullback <= third && self.threshold <= third && self.continuity <= third
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    /// Position along the segment from the +δ pair (0) to the −δ pair (1).
    pub theta: f64,
    pub tau_alpha: f64,
    pub tau_beta: f64,
    pub d_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstructedInput {
    pub input: ExternalInput,
    pub tau_alpha: f64,
    pub tau_beta: f64,
    pub eps: f64,
    pub delta_target: f64,
    /// (min, max) of Δ_Λ over the sampled 𝒩.
    pub delta_range: (f64, f64),
    pub pair_plus: (f64, f64),
    pub pair_minus: (f64, f64),
    pub eps_history: Vec<ProofBounds>,
    pub trace: Vec<TraceEntry>,
    pub d_s: f64,
    /// Run at the constructed input and its minimal distance to η⁺.
    pub run: RateRun,
    pub eta_min_distance: f64,
    /// Runs at the two ends of the final bisection interval.
    pub perturbed: (RateRun, RateRun),
    pub classification: Classification,
}

struct Ctx<'a> {
    problem: &'a TippingProblem,
    sink: &'a Branch,
    edge: &'a Branch,
    eta_index: usize,
    r: f64,
}

impl Ctx<'_> {
    fn sink_at(&self, tau: f64) -> Result<Vec<f64>> {
        self.sink.state_at_tau(&self.problem.frozen, &self.problem.input, tau)
    }

    fn edge_at(&self, tau: f64) -> Result<Vec<f64>> {
        self.edge.state_at_tau(&self.problem.frozen, &self.problem.input, tau)
    }

    /// Δ_Λ(τ₁, τ₂) = d_s(e(Λ(τ₁)), θ(Λ(τ₂))).
    fn delta_lambda(&self, t1: f64, t2: f64) -> Result<f64> {
        let f = &self.problem.frozen;
        let lam = self.problem.input.value(t2)?;
        let rec = find_equilibrium(f, &lam, &self.edge_at(t2)?)?;
        let th = frozen_threshold(f, &rec, 0.0, ThresholdOptions::default())?;
        Ok(signed_distance(&self.sink_at(t1)?, &th))
    }

    fn warped(&self, pair: (f64, f64), eps: f64) -> Result<(TippingProblem, SigmaReparam)> {
        let sigma = SigmaReparam::new(pair.0, pair.1, eps)?;
        let input = self.problem.input.reparametrized(sigma)?;
        Ok((self.problem.with_input(input), sigma))
    }

    /// d_s(x(ε), Θ(ε)) for Λ̃ with the given pair, plus the proof bounds.
    fn evaluate(&self, pair: (f64, f64), eps: f64, with_bounds: bool) -> Result<(f64, Option<ProofBounds>)> {
        let (p, sigma) = self.warped(pair, eps)?;
        let cs = p.compactified(self.r)?;
        let f = &p.frozen;
        let eta = &p.edges[self.eta_index];
        let s_stop = cs.s_of(2.0 * eps);
        let pb = pullback_attractor(&cs, &p.e_minus, p.seed_delta(), s_stop, p.opts.ode)?;
        if pb.blowup {
            return Err(Error::Construction("pullback attractor blew up before τ = ε".into()));
        }
        let x_eps = pb.x_at(eps).ok_or_else(|| Error::Construction("pullback attractor does not reach τ = ε".into()))?;
        let theta_eps = threshold_sections(&cs, eta, p.opts.tail_delta.unwrap_or(1e-6), &[eps], 1, p.opts.ode)?;
        let th_point = theta_eps[0].first().cloned().ok_or_else(|| Error::Construction("Θ(ε) section is empty".into()))?;
        // orientation of θ(Λ̃(ε)) = θ(Λ(τ_β))
        let lam_b = self.problem.input.value(sigma.eval(eps))?;
        let rec_b = find_equilibrium(f, &lam_b, &self.edge_at(sigma.eval(eps))?)?;
        let normal = frozen_threshold(f, &rec_b, 0.0, ThresholdOptions::default())?.normals[0].clone();
        let d_s: f64 = x_eps.iter().zip(&th_point).zip(&normal).map(|((a, b), c)| (a - b) * c).sum();
        if !with_bounds {
            return Ok((d_s, None));
        }

        let mut pullback: f64 = 0.0;
        let tr = &pb.trajectory;
        let last = tr.times.partition_point(|t| *t <= 0.0);
        let stride = (last / 400).max(1);
        let mut ks: Vec<usize> = (0..last).step_by(stride).collect();
        if last > 0 {
            ks.push(last - 1);
        }
        for k in ks {
            let e = self.sink_at(sigma.eval(tr.times[k]))?;
            pullback = pullback.max(dist2(&tr.states[k][..e.len()], &e));
        }
        if let Some(x0) = pb.x_at(0.0) {
            pullback = pullback.max(dist2(&x0, &self.sink_at(sigma.eval(0.0))?));
        }
        let continuity = dist2(&pb.x_at(0.0).unwrap_or_else(|| x_eps.clone()), &x_eps);

        let rho = self.problem.input.rho();
        let taus: Vec<f64> = [0.0, 1.0, 4.0, 16.0, 64.0].iter().map(|j| eps + j / rho).collect();
        let tail_delta = p.opts.tail_delta.unwrap_or(1e-6);
        let sections = threshold_sections(&cs, eta, tail_delta, &taus, 1, p.opts.ode)?;
        let mut threshold: f64 = 0.0;
        for (k, (tau, sec)) in taus.iter().zip(&sections).enumerate() {
            let edge = self.edge_at(sigma.eval(*tau))?;
            threshold = threshold.max(match sec.first() {
                Some(q) => dist2(q, &edge),
                // past the seed Θ lies within the seed radius of η⁺
                None if k > 0 => tail_delta + dist2(&eta.x, &edge),
                None => return Err(Error::Construction(format!("Θ section at τ = {tau} is empty"))),
            });
        }
        Ok((d_s, Some(ProofBounds { eps, pullback, threshold, continuity })))
    }
}

fn lerp(a: (f64, f64), b: (f64, f64), t: f64) -> (f64, f64) {
    (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1))
}

/// Point on the segment from `from` (Δ ≈ 0) to `to` where Δ_Λ = target.
fn hit_level(ctx: &Ctx<'_>, from: (f64, f64), to: (f64, f64), target: f64) -> Result<(f64, f64)> {
    let g = |t: f64| -> Result<f64> {
        let p = lerp(from, to, t);
        Ok(ctx.delta_lambda(p.0, p.1)? - target)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    let g_lo = g(lo)?;
    if g_lo * g(hi)? > 0.0 {
        return Err(Error::Construction(format!("Δ_Λ does not reach {target} on the segment")));
    }
    for _ in 0..80 {
        let m = 0.5 * (lo + hi);
        if (g(m)? < 0.0) == (g_lo < 0.0) {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok(lerp(from, to, 0.5 * (lo + hi)))
}

/// Searches (τ_α, τ_β, ε) such that the pullback attractor of e⁻ under
/// Λ̃ = Λ∘σ at rate r* lands on the threshold Θ(ε), i.e. connects to η⁺.
pub fn construct_tipping_input(
    problem: &TippingProblem,
    sink: &Branch,
    edge: &Branch,
    eta_index: usize,
    pair: (f64, f64),
    opts: &ConstructOptions,
) -> Result<ConstructedInput> {
    let n = problem.frozen.n();
    if n != 1 {
        return Err(Error::NotSupportedExplicitly { n });
    }
    if eta_index >= problem.edges.len() {
        return Err(Error::InvalidParameter(format!("edge index {eta_index} out of range")));
    }
    if !(pair.0 < pair.1) {
        return Err(Error::Precondition("scan pair needs τ_a < τ_b".into()));
    }
    if !(opts.r_star > 0.0) {
        return Err(Error::InvalidParameter("r* must be positive".into()));
    }
    let ctx = Ctx { problem, sink, edge, eta_index, r: opts.r_star };

    // Δ_Λ over 𝒩 ∩ {τ₁ < τ₂}
    let w = opts.half_width;
    let m = opts.grid.max(3);
    let step = 2.0 * w / (m - 1) as f64;
    let (mut lo, mut hi) = ((0.0, pair), (0.0, pair));
    let mut first = true;
    for i in 0..m {
        for j in 0..m {
            let p = (pair.0 - w + i as f64 * step, pair.1 - w + j as f64 * step);
            if p.0 >= p.1 {
                continue;
            }
            let v = ctx.delta_lambda(p.0, p.1)?;
            if !v.is_finite() {
                continue;
            }
            if first || v < lo.0 {
                lo = (v, p);
            }
            if first || v > hi.0 {
                hi = (v, p);
            }
            first = false;
        }
    }
    if !(hi.0 > 0.0 && lo.0 < 0.0) {
        return Err(Error::Precondition(format!(
            "no forward threshold instability in the neighbourhood: Δ_Λ ∈ [{}, {}]",
            lo.0, hi.0
        )));
    }
    let reach = hi.0.min(-lo.0);
    let delta = opts.delta_target.unwrap_or(0.5 * reach);
    if !(delta > 0.0 && delta < reach) {
        return Err(Error::Construction(format!(
            "δ_target = {delta} not attainable: Δ_Λ over the neighbourhood spans [{}, {}]",
            lo.0, hi.0
        )));
    }
    let centre = pair;
    let pair_plus = hit_level(&ctx, centre, hi.1, delta)?;
    let pair_minus = hit_level(&ctx, centre, lo.1, -delta)?;

    // shrink ε until the three bounds hold at both ends of the segment
    let gap = (pair_plus.1 - pair_plus.0).min(pair_minus.1 - pair_minus.0);
    let mut eps = opts.eps_start.min(0.5 * gap.sqrt());
    let mut history = Vec::new();
    loop {
        let (_, bp) = ctx.evaluate(pair_plus, eps, true)?;
        let (_, bm) = ctx.evaluate(pair_minus, eps, true)?;
        let b = bp.expect("bounds requested").max(bm.expect("bounds requested"));
        history.push(b);
        if b.hold(delta) {
            break;
        }
        eps *= 0.5;
        if eps < opts.eps_floor {
            let third = delta / 3.0;
            let mut failed = Vec::new();
            if b.pullback > third {
                failed.push(format!("pullback deviation {:e}", b.pullback));
            }
            if b.threshold > third {
                failed.push(format!("threshold deviation {:e}", b.threshold));
            }
            if b.continuity > third {
                failed.push(format!("continuity gap {:e}", b.continuity));
            }
            return Err(Error::Construction(format!("ε floor {} reached; bounds above δ/3 = {third:e}: {}", opts.eps_floor, failed.join(", "))));
        }
    }

    // bisection on the sign of d_s along the segment
    let mut trace = Vec::new();
    let mut eval = |t: f64| -> Result<f64> {
        let p = lerp(pair_plus, pair_minus, t);
        let (d, _) = ctx.evaluate(p, eps, false)?;
        trace.push(TraceEntry { theta: t, tau_alpha: p.0, tau_beta: p.1, d_s: d });
        Ok(d)
    };
    let (mut a, mut b) = (0.0, 1.0);
    let (da, db) = (eval(a)?, eval(b)?);
    if !(da > 0.0 && db < 0.0) {
        return Err(Error::Construction(format!("d_s does not change sign along the segment ({da:e} at the +δ pair, {db:e} at the −δ pair)")));
    }
    let mut t_star = 0.5;
    let mut d_star = f64::INFINITY;
    for _ in 0..opts.max_bisections {
        t_star = 0.5 * (a + b);
        d_star = eval(t_star)?;
        if d_star.abs() <= opts.connect_tol {
            break;
        }
        if d_star > 0.0 {
            a = t_star;
        } else {
            b = t_star;
        }
        if b - a <= f64::EPSILON {
            break;
        }
    }
    let star = lerp(pair_plus, pair_minus, t_star);
    let (p_star, _) = ctx.warped(star, eps)?;
    let run = p_star.run(opts.r_star)?;
    let eta_min_distance = run.edge_min[eta_index];
    // the ends of the final interval carry opposite signs of d_s
    let (pa, _) = ctx.warped(lerp(pair_plus, pair_minus, a), eps)?;
    let (pb, _) = ctx.warped(lerp(pair_plus, pair_minus, b), eps)?;
    let run_a = pa.run(opts.r_star)?;
    let run_b = pb.run(opts.r_star)?;
    let classification = classify_from_outcomes(&p_star, opts.r_star, Some(eta_index), &run_b, &run_a)?;
    Ok(ConstructedInput {
        input: p_star.input.clone(),
        tau_alpha: star.0,
        tau_beta: star.1,
        eps,
        delta_target: delta,
        delta_range: (lo.0, hi.0),
        pair_plus,
        pair_minus,
        eps_history: history,
        trace,
        d_s: d_star,
        run,
        eta_min_distance,
        perturbed: (run_a, run_b),
        classification,
    })
}

impl ConstructedInput {
    /// Outcomes at the +d_s and −d_s ends of the final interval.
    pub fn perturbed_outcomes(&self) -> (Outcome, Outcome) {
        (self.perturbed.0.outcome, self.perturbed.1.outcome)
    }
}
