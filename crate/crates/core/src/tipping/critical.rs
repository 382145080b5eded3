//! Critical-rate search by outcome bisection, η⁺ identification and the
//! edge-tail classification of the tipping.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::string::String;
use alloc::format;
use alloc::vec::Vec;

use super::{RateRun, TippingProblem};
use crate::equilibria::EquilibriumRecord;
use crate::manifolds::{default_seed_delta, edge_tails, hausdorff_distance, EdgeTail, Outcome};
use crate::numcore::{left_eigenvector, norm2};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegenerateReason {
    /// An edge tail blows up.
    DivergentTail,
    /// An edge tail is neither captured nor divergent by T_max.
    UnresolvedTail,
    /// Upper and lower tails coincide.
    IdenticalTails,
    /// The near-critical run never came within η_capture of a saddle.
    NoEdgeState,
    /// Unresolved outcomes on both sides of the bracket.
    Unresolved,
}

impl DegenerateReason {
    pub fn label(&self) -> &'static str {
        match self {
            DegenerateReason::DivergentTail => "divergent tail",
            DegenerateReason::UnresolvedTail => "unresolved tail",
            DegenerateReason::IdenticalTails => "identical tails",
            DegenerateReason::NoEdgeState => "no regular edge state identified",
            DegenerateReason::Unresolved => "unresolved",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Reversible,
    Irreversible,
    Degenerate(DegenerateReason),
    NoTippingFound,
}

impl Verdict {
    pub fn label(&self) -> String {
        match self {
            Verdict::Reversible => "Reversible".into(),
            Verdict::Irreversible => "Irreversible".into(),
            Verdict::Degenerate(r) => format!("Degenerate({})", r.label()),
            Verdict::NoTippingFound => "NoTippingFound".into(),
        }
    }
}

/// One refined outcome change.
#[derive(Debug, Clone, PartialEq)]
pub struct Bracket {
    /// Final bisection interval; its endpoints carry different outcomes.
    pub lo: (f64, Outcome),
    pub hi: (f64, Outcome),
    pub r_c: f64,
    /// Runs at r_c − tol_r and r_c + tol_r.
    pub below: RateRun,
    pub above: RateRun,
    /// Run at r_c, used to identify η⁺.
    pub mid: RateRun,
    /// Index into the problem's edge candidates.
    pub eta_index: Option<usize>,
    /// min ‖x − η⁺‖ over the r_c ± tol_r runs (connection evidence).
    pub eta_min_distance: Option<f64>,
    pub bisection_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalRateReport {
    pub r_range: (f64, f64),
    pub tol_r: f64,
    pub coarse: Vec<(f64, Outcome)>,
    pub brackets: Vec<Bracket>,
    /// Outcome changes dropped because only the approach side changed and
    /// no edge state was nearby.
    pub discarded: Vec<(f64, f64)>,
}

impl CriticalRateReport {
    pub fn critical_rates(&self) -> Vec<f64> {
        self.brackets.iter().map(|b| b.r_c).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub r_c: f64,
    pub eta: Option<EquilibriumRecord>,
    pub tails: Option<(EdgeTail, EdgeTail)>,
    /// Branch (±1) of W^u(η⁺) followed for r > r_c and for r < r_c.
    pub upper_branch: Option<i8>,
    pub lower_branch: Option<i8>,
    pub below_outcome: Outcome,
    pub above_outcome: Outcome,
    /// Hausdorff distance between the upper and lower tail samples.
    pub tail_distance: Option<f64>,
    /// Each side's outcome equals the outcome of the tail it follows.
    pub correspondence: bool,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TippingReport {
    pub critical: CriticalRateReport,
    pub classifications: Vec<Classification>,
    pub verdict: Verdict,
}

fn geometric(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    let m = m.max(2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..m).map(|k| (a + (b - a) * k as f64 / (m - 1) as f64).exp()).collect()
}

fn side_only(a: &Outcome, b: &Outcome) -> bool {
    a != b && a.same_attractor(b) && a.attractor().is_some()
}

/// Edge candidate passed within η_capture with maximal dwell (ties go to the
/// closer approach).
/// With `late_only`, proximity counts only once the input has settled near λ⁺;
/// a side flip caused by a transient near miss is not a connection to η⁺.
fn identify_eta(problem: &TippingProblem, run: &RateRun, late_only: bool) -> Option<usize> {
    let d = if late_only { &run.edge_min_late } else { &run.edge_min };
    (0..problem.edges.len())
        .filter(|&k| d[k] <= problem.opts.eta_capture)
        .max_by(|&a, &b| run.edge_dwell[a].total_cmp(&run.edge_dwell[b]).then(run.edge_min[b].total_cmp(&run.edge_min[a])))
}

/// Coarse geometric scan over [r_lo, r_hi], bisection of every outcome
/// change down to tol_r, then runs at r_c ± tol_r and r_c.
pub fn find_critical_rate(problem: &TippingProblem, r_lo: f64, r_hi: f64, tol_r: f64) -> Result<CriticalRateReport> {
    if !(r_lo > 0.0 && r_hi > r_lo && tol_r > 0.0) {
        return Err(Error::InvalidParameter(format!("rate range needs 0 < r_lo < r_hi and tol_r > 0 (got [{r_lo}, {r_hi}], {tol_r})")));
    }
    let grid = geometric(r_lo, r_hi, problem.opts.coarse_points);
    let mut coarse = Vec::with_capacity(grid.len());
    for &r in &grid {
        coarse.push((r, problem.outcome(r)?));
    }
    find_critical_rate_in(problem, coarse, (r_lo, r_hi), tol_r)
}

/// Refines every outcome change of an already evaluated coarse scan.
pub fn find_critical_rate_in(problem: &TippingProblem, coarse: Vec<(f64, Outcome)>, r_range: (f64, f64), tol_r: f64) -> Result<CriticalRateReport> {
    let mut brackets = Vec::new();
    let mut discarded = Vec::new();
    for w in coarse.windows(2) {
        let ((a, oa), (b, ob)) = (w[0], w[1]);
        if oa == ob {
            continue;
        }
        for bracket in refine(problem, (a, oa), (b, ob), tol_r)? {
            if side_only(&bracket.lo.1, &bracket.hi.1) && bracket.eta_index.is_none() {
                discarded.push((bracket.lo.0, bracket.hi.0));
                continue;
            }
            brackets.push(bracket);
        }
    }
    Ok(CriticalRateReport { r_range, tol_r, coarse, brackets, discarded })
}

/// Bisects one outcome change; a third outcome met on the way splits the
/// interval and both changes are refined.
fn refine(problem: &TippingProblem, lo: (f64, Outcome), hi: (f64, Outcome), tol_r: f64) -> Result<Vec<Bracket>> {
    let (mut lo, mut hi) = (lo, hi);
    let mut steps = 0;
    while hi.0 - lo.0 > tol_r {
        let m = 0.5 * (lo.0 + hi.0);
        let om = problem.outcome(m)?;
        steps += 1;
        if om == lo.1 {
            lo = (m, om);
        } else if om == hi.1 {
            hi = (m, om);
        } else {
            let mut out = refine(problem, lo, (m, om), tol_r)?;
            out.extend(refine(problem, (m, om), hi, tol_r)?);
            return Ok(out);
        }
    }
    let r_c = 0.5 * (lo.0 + hi.0);
    let below = problem.run((r_c - tol_r).max(0.5 * lo.0))?;
    let above = problem.run(r_c + tol_r)?;
    let mid = problem.run(r_c)?;
    let eta_index = identify_eta(problem, &mid, side_only(&lo.1, &hi.1));
    let eta_min_distance = eta_index.map(|k| below.edge_min[k].min(above.edge_min[k]));
    Ok(alloc::vec![Bracket { lo, hi, r_c, below, above, mid, eta_index, eta_min_distance, bisection_steps: steps }])
}

/// Left unstable eigenvector of the edge state, scaled so w·v_u > 0.
fn unstable_left(problem: &TippingProblem, eta: &EquilibriumRecord) -> Result<Vec<f64>> {
    let vu = eta.unstable_vector().ok_or_else(|| Error::Precondition("η⁺ needs one real unstable direction".into()))?;
    let j = problem.frozen.jacobian_x(&eta.x, &eta.lambda)?;
    let mut w = left_eigenvector(&j, eta.eigen.values[0].re, &vu);
    let s: f64 = w.iter().zip(&vu).map(|(a, b)| a * b).sum();
    let nw = norm2(&w) * s.signum();
    w.iter_mut().for_each(|c| *c /= nw);
    Ok(w)
}

/// Edge tails of η⁺ and the verdict, from near-critical runs on either side.
pub fn classify_from_outcomes(problem: &TippingProblem, r_c: f64, eta_index: Option<usize>, below: &RateRun, above: &RateRun) -> Result<Classification> {
    let mut c = Classification {
        r_c,
        eta: None,
        tails: None,
        upper_branch: None,
        lower_branch: None,
        below_outcome: below.outcome,
        above_outcome: above.outcome,
        tail_distance: None,
        correspondence: false,
        verdict: Verdict::Degenerate(DegenerateReason::NoEdgeState),
    };
    if matches!(below.outcome, Outcome::Unresolved { .. }) && matches!(above.outcome, Outcome::Unresolved { .. }) {
        c.verdict = Verdict::Degenerate(DegenerateReason::Unresolved);
        return Ok(c);
    }
    let Some(k) = eta_index else {
        return Ok(c);
    };
    let eta = problem.edges[k].clone();
    let delta = problem.opts.tail_delta.unwrap_or_else(|| default_seed_delta(&eta.x));
    let mut om = problem.opts.omega;
    om.record_spacing = 0.01;
    let (plus, minus) = edge_tails(&problem.frozen, &eta, &problem.catalogue, delta, om)?;

    // which branch each side leaves along; fall back to matching outcomes
    let w = unstable_left(problem, &eta)?;
    let radius = problem.opts.eta_capture;
    let by_outcome = |o: &Outcome| -> Option<i8> {
        match (plus.run.outcome == *o, minus.run.outcome == *o) {
            (true, false) => Some(1),
            (false, true) => Some(-1),
            _ => None,
        }
    };
    let upper = above.exit_branch(k, &w, radius).or_else(|| by_outcome(&above.outcome));
    let lower = below.exit_branch(k, &w, radius).or_else(|| by_outcome(&below.outcome));
    let tail = |b: i8| if b > 0 { &plus } else { &minus };

    let tail_distance = match (upper, lower) {
        (Some(u), Some(l)) if u == l => Some(0.0),
        _ if plus.sample.points.is_empty() || minus.sample.points.is_empty() => None,
        _ => Some(hausdorff_distance(&plus.sample.points, &minus.sample.points)?),
    };
    c.correspondence = match (upper, lower) {
        (Some(u), Some(l)) => u != l && tail(u).run.outcome == above.outcome && tail(l).run.outcome == below.outcome,
        _ => false,
    };
    let outcomes = [plus.run.outcome, minus.run.outcome];
    c.verdict = if outcomes.iter().any(|o| *o == Outcome::Divergent) {
        Verdict::Degenerate(DegenerateReason::DivergentTail)
    } else if outcomes.iter().any(|o| matches!(o, Outcome::Unresolved { .. })) {
        Verdict::Degenerate(DegenerateReason::UnresolvedTail)
    } else if tail_distance.is_some_and(|d| d <= problem.opts.identical_tol) {
        Verdict::Degenerate(DegenerateReason::IdenticalTails)
    } else if outcomes[0].same_attractor(&outcomes[1]) {
        Verdict::Reversible
    } else {
        Verdict::Irreversible
    };
    c.eta = Some(eta);
    c.upper_branch = upper;
    c.lower_branch = lower;
    c.tail_distance = tail_distance;
    c.tails = Some((plus, minus));
    Ok(c)
}

/// Classifies every bracket of a critical-rate report.
pub fn classify_tipping(problem: &TippingProblem, critical: CriticalRateReport) -> Result<TippingReport> {
    let mut classifications = Vec::with_capacity(critical.brackets.len());
    for b in &critical.brackets {
        classifications.push(classify_from_outcomes(problem, b.r_c, b.eta_index, &b.below, &b.above)?);
    }
    let verdict = classifications.first().map_or(Verdict::NoTippingFound, |c| c.verdict);
    Ok(TippingReport { critical, classifications, verdict })
}
