//! Tracking diagnostics, threshold-instability scans, critical-rate search,
//! edge-tail classification and the reparametrised-input construction.

pub mod construct;
pub mod critical;
pub mod diagram;
pub mod reparam;
pub mod scan;
pub mod tracking;

use alloc::vec::Vec;

use crate::compact::{choose_alpha, g_alpha, CompactifiedSystem};
use crate::equilibria::{moving_equilibrium, Branch, ContinuationOptions, EquilibriumRecord};
use crate::manifolds::{classify_omega_limit, default_seed_delta, pullback_attractor, AttractorCatalogue, OmegaOptions, OmegaRun, Outcome, PullbackAttractor};
use crate::numcore::{dist2, OdeOptions};
use crate::systems::{ExternalInput, FrozenSystem};
use crate::{Error, Result};

pub use construct::{construct_tipping_input, ConstructOptions, ConstructedInput, ProofBounds, TraceEntry};
pub use critical::{classify_from_outcomes, classify_tipping, find_critical_rate, find_critical_rate_in, Bracket, Classification, CriticalRateReport, DegenerateReason, TippingReport, Verdict};
pub use diagram::{diagram_point, tipping_diagram, DiagramRow};
pub use reparam::SigmaReparam;
pub use scan::{scan_forward_threshold_instability, scan_threshold_instability, InstabilityScan, ScanOptions};
pub use tracking::{check_tracking, TrackingReport, TrackingSample, TrackingSource};

/// s beyond which the future limit system takes over.
pub const S_HAND: f64 = 1.0 - 1e-6;
pub const ETA_CAPTURE: f64 = 1e-2;
pub const COARSE_POINTS: usize = 64;
pub const IDENTICAL_TAILS_TOL: f64 = 1e-4;
pub const CONNECT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TippingOptions {
    /// Pullback seed offset (default 1e-6·(1 + ‖e⁻‖)).
    pub seed_delta: Option<f64>,
    /// Edge-tail seed offset (default 1e-6·(1 + ‖η⁺‖)).
    pub tail_delta: Option<f64>,
    pub alpha: Option<f64>,
    pub s_hand: f64,
    pub ode: OdeOptions,
    pub omega: OmegaOptions,
    pub eta_capture: f64,
    pub coarse_points: usize,
    pub identical_tol: f64,
}

impl Default for TippingOptions {
    fn default() -> Self {
        TippingOptions {
            seed_delta: None,
            tail_delta: None,
            alpha: None,
            s_hand: S_HAND,
            ode: OdeOptions::default(),
            omega: OmegaOptions::default(),
            eta_capture: ETA_CAPTURE,
            coarse_points: COARSE_POINTS,
            identical_tol: IDENTICAL_TAILS_TOL,
        }
    }
}

/// Everything a rate sweep needs: f, Λ, the past sink e⁻, the catalogue of
/// future sinks and the candidate edge states of the future limit system.
#[derive(Debug, Clone, PartialEq)]
pub struct TippingProblem {
    pub frozen: FrozenSystem,
    pub input: ExternalInput,
    pub e_minus: EquilibriumRecord,
    pub catalogue: AttractorCatalogue,
    pub edges: Vec<EquilibriumRecord>,
    /// Moving edge states η(Λ(τ)) continued back from each candidate (None
    /// where continuation fails, e.g. at a fold).
    pub edge_paths: Vec<Option<Branch>>,
    pub opts: TippingOptions,
}

fn moving_edges(frozen: &FrozenSystem, input: &ExternalInput, edges: &[EquilibriumRecord]) -> Vec<Option<Branch>> {
    edges
        .iter()
        .map(|e| moving_equilibrium(frozen, input, e, f64::INFINITY, ContinuationOptions::default()).ok())
        .collect()
}

/// One pullback run at a fixed rate, handed over to the future limit system.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRun {
    pub r: f64,
    pub alpha: f64,
    pub outcome: Outcome,
    /// State at handover (None if the pullback blew up first).
    pub x_hand: Option<Vec<f64>>,
    pub t_hand: f64,
    /// Minimal distance to each edge candidate: to the moving edge state
    /// η(Λ(τ)) before handover, to η⁺ after.
    pub edge_min: Vec<f64>,
    /// Time spent within η_capture of each edge candidate, same metric.
    pub edge_dwell: Vec<f64>,
    /// edge_min restricted to samples from `late_from` on.
    pub edge_min_late: Vec<f64>,
    /// Index of the first path sample where the input is within η_capture of
    /// its future limit.
    pub late_from: usize,
    pub omega: Option<OmegaRun>,
    /// (time, x) along the pullback and then the future limit system; time
    /// continues from τ at handover.
    pub path: Vec<(f64, Vec<f64>)>,
    /// Per edge candidate, its position at each path sample.
    pub edge_track: Vec<Vec<Option<Vec<f64>>>>,
}

/// Time between recorded path samples after handover.
pub const PATH_SPACING: f64 = 0.05;

impl RateRun {
    pub fn edge_distances(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        self.path.iter().zip(&self.edge_track[k]).map(|(p, e)| e.as_ref().map_or(f64::INFINITY, |e| dist2(&p.1, e)))
    }

    /// Time spent within `radius` of edge candidate `k`.
    pub fn dwell_near(&self, k: usize, radius: f64) -> f64 {
        let d: Vec<f64> = self.edge_distances(k).collect();
        (1..d.len())
            .filter(|&i| d[i - 1] <= radius && d[i] <= radius)
            .map(|i| self.path[i].0 - self.path[i - 1].0)
            .sum()
    }

    /// Which branch of W^u(η) the run leaves along: the sign of w·(x − η)
    /// at the first exit from the ball of `radius` after closest approach.
    pub fn exit_branch(&self, k: usize, w: &[f64], radius: f64) -> Option<i8> {
        let d: Vec<f64> = self.edge_distances(k).collect();
        let (i_min, d_min) = d.iter().copied().enumerate().min_by(|a, b| a.1.total_cmp(&b.1))?;
        if d_min > radius {
            return None;
        }
        let i = (i_min..d.len()).find(|&i| d[i] >= radius)?;
        let e = self.edge_track[k][i].as_ref()?;
        let off: f64 = self.path[i].1.iter().zip(e).zip(w).map(|((a, b), c)| (a - b) * c).sum();
        Some(if off >= 0.0 { 1 } else { -1 })
    }
}

impl TippingProblem {
    pub fn new(
        frozen: FrozenSystem,
        input: ExternalInput,
        e_minus: EquilibriumRecord,
        catalogue: AttractorCatalogue,
        edges: Vec<EquilibriumRecord>,
        opts: TippingOptions,
    ) -> Result<Self> {
        if !e_minus.is_sink() {
            return Err(Error::Precondition("e⁻ must be a hyperbolic sink".into()));
        }
        if catalogue.is_empty() {
            return Err(Error::Precondition("the future limit system has no catalogued sink".into()));
        }
        if let Some(a) = opts.alpha {
            if !(a > 0.0 && a < input.rho()) {
                return Err(Error::AlphaWindow { alpha: a, rho: input.rho() });
            }
        }
        for e in &edges {
            if !e.is_edge_candidate() {
                return Err(Error::Precondition("edge candidates need exactly one unstable direction".into()));
            }
        }
        let edge_paths = moving_edges(&frozen, &input, &edges);
        Ok(TippingProblem { frozen, input, e_minus, catalogue, edges, edge_paths, opts })
    }

    pub fn with_input(&self, input: ExternalInput) -> Self {
        let edge_paths = moving_edges(&self.frozen, &input, &self.edges);
        TippingProblem { input, edge_paths, ..self.clone() }
    }

    pub fn future_limit(&self) -> &[f64] {
        &self.catalogue.lambda
    }

    /// Leading eigenvalue of the slowest catalogued sink.
    pub fn leading_sink_eigenvalue(&self) -> f64 {
        self.catalogue.entries.iter().map(|e| e.record.eigen.values[0].re).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn alpha_for(&self, r: f64) -> f64 {
        self.opts.alpha.unwrap_or_else(|| choose_alpha(self.input.rho(), r, Some(self.leading_sink_eigenvalue())))
    }

    pub fn compactified(&self, r: f64) -> Result<CompactifiedSystem> {
        CompactifiedSystem::new(self.frozen.clone(), self.input.clone(), r, self.alpha_for(r))
    }

    pub fn seed_delta(&self) -> f64 {
        self.opts.seed_delta.unwrap_or_else(|| default_seed_delta(&self.e_minus.x))
    }

    pub fn pullback(&self, r: f64) -> Result<PullbackAttractor> {
        let cs = self.compactified(r)?;
        pullback_attractor(&cs, &self.e_minus, self.seed_delta(), self.opts.s_hand, self.opts.ode)
    }

    /// Position of edge candidate k at time τ of a run: η⁺ once handed over,
    /// the moving edge state η(Λ(τ)) before.
    fn edge_position(&self, k: usize, tau: f64, handed_over: bool) -> Option<Vec<f64>> {
        if handed_over {
            return Some(self.edges[k].x.clone());
        }
        match &self.edge_paths[k] {
            Some(b) => b.interpolate_u(g_alpha(0.5 * self.input.rho(), tau)),
            None => Some(self.edges[k].x.clone()),
        }
    }

    /// Pullback attractor to s_hand, then ω-limit classification of the
    /// handover state in the future limit system.
    pub fn run(&self, r: f64) -> Result<RateRun> {
        let pb = self.pullback(r)?;
        let n = self.frozen.n();
        let alpha = self.alpha_for(r);
        let tr = &pb.trajectory;
        let mut path: Vec<(f64, Vec<f64>)> = Vec::with_capacity(2 * tr.len());
        for (k, seg) in tr.dense.iter().enumerate() {
            path.push((tr.times[k], tr.states[k][..n].to_vec()));
            let mid = seg.t0 + 0.5 * seg.h;
            path.push((mid, seg.eval(mid)[..n].to_vec()));
        }
        path.push((tr.t_end(), tr.x_end()[..n].to_vec()));
        let n_pull = path.len();
        let t_hand = tr.t_end();
        let (x_hand, s_hand) = pb.end_state();
        let reached = s_hand >= self.opts.s_hand - 1e-12;
        let mut outcome;
        let mut omega = None;
        if pb.blowup || !reached || x_hand.iter().any(|v| !v.is_finite()) {
            outcome = if pb.blowup { Outcome::Divergent } else { Outcome::Unresolved { recurrent: false } };
        } else {
            let mut om = self.opts.omega;
            om.record_spacing = PATH_SPACING;
            let run = classify_omega_limit(&self.frozen, &x_hand, &self.catalogue, om)?;
            for (t, p) in run.path_times.iter().zip(&run.path).skip(1) {
                path.push((t_hand + t, p.clone()));
            }
            outcome = run.outcome;
            omega = Some(run);
        }
        // approach side from the entry into the ball of the final stay
        if let Outcome::Attractor { index, side } = &mut outcome {
            let e = &self.catalogue.entries[*index];
            let mut i = path.len();
            while i > 0 && dist2(&path[i - 1].1, &e.record.x) < e.capture_radius {
                i -= 1;
            }
            *side = match (&e.side_vector, i) {
                (_, 0) | (None, _) => 0,
                (Some(w), i) => {
                    let k = i.min(path.len() - 1);
                    let p: f64 = path[k].1.iter().zip(&e.record.x).zip(w).map(|((a, b), c)| (a - b) * c).sum();
                    if p > 0.0 {
                        1
                    } else if p < 0.0 {
                        -1
                    } else {
                        0
                    }
                }
            };
        }
        // first sample from which Λ(τ) stays within η_capture of λ⁺
        let lam_plus = self.future_limit();
        let late_from = path
            .iter()
            .rposition(|(t, _)| *t < t_hand && self.input.value(*t).map_or(true, |l| dist2(&l, lam_plus) > self.opts.eta_capture))
            .map_or(0, |i| i + 1);
        let edge_track: Vec<Vec<Option<Vec<f64>>>> = (0..self.edges.len())
            .map(|k| path.iter().enumerate().map(|(i, p)| self.edge_position(k, p.0, i >= n_pull)).collect())
            .collect();
        let mut run = RateRun {
            r,
            alpha,
            outcome,
            x_hand: reached.then_some(x_hand),
            t_hand,
            edge_min: Vec::new(),
            edge_dwell: Vec::new(),
            edge_min_late: Vec::new(),
            late_from,
            omega,
            path,
            edge_track,
        };
        run.edge_min = (0..self.edges.len()).map(|k| run.edge_distances(k).fold(f64::INFINITY, f64::min)).collect();
        run.edge_min_late = (0..self.edges.len()).map(|k| run.edge_distances(k).skip(late_from).fold(f64::INFINITY, f64::min)).collect();
        run.edge_dwell = (0..self.edges.len()).map(|k| run.dwell_near(k, self.opts.eta_capture)).collect();
        Ok(run)
    }

    /// Outcome at rate r; numerical failures count as unresolved.
    pub fn outcome(&self, r: f64) -> Result<Outcome> {
        match self.run(r) {
            Ok(run) => Ok(run.outcome),
            Err(e) if e.is_numerical() => Ok(Outcome::Unresolved { recurrent: false }),
            Err(e) => Err(e),
        }
    }
}
