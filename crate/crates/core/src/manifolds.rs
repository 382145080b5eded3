//! Invariant manifolds of the compactified and limit systems: the pullback
//! attractor as the unstable manifold of ẽ⁻, threshold sections from the
//! stable manifold of η̃⁺, frozen thresholds and edge tails. Also signed
//! and Hausdorff distances and ω-limit classification.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::compact::{CompactifiedSystem, LiftedEquilibrium, Side};
use crate::equilibria::EquilibriumRecord;
use crate::numcore::{dist2, dot, integrate, left_eigenvector, norm2, EventFn, OdeOptions, Solver, Termination, Trajectory};
use crate::systems::FrozenSystem;
use crate::{Error, Result};

pub const MIN_SEED_DELTA: f64 = 1e-8;
pub const MAX_SEED_DELTA: f64 = 1e-3;
pub const DEFAULT_CAPTURE_RADIUS: f64 = 1e-3;
pub const DWELL_FACTOR: f64 = 20.0;
pub const DEFAULT_T_MAX: f64 = 1e4;
pub const RECURRENCE_TOL: f64 = 1e-3;

/// δ = 1e-6·(1 + ‖equilibrium‖)
pub fn default_seed_delta(x: &[f64]) -> f64 {
    1e-6 * (1.0 + norm2(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifoldKind {
    UnstableOfPastSink,
    StableOfEdgeState,
    EdgeTailUpper,
    EdgeTailLower,
    FrozenThreshold,
}

impl ManifoldKind {
    pub fn label(&self) -> &'static str {
        match self {
            ManifoldKind::UnstableOfPastSink => "unstable_of_past_sink",
            ManifoldKind::StableOfEdgeState => "stable_of_edge_state",
            ManifoldKind::EdgeTailUpper => "edge_tail_upper",
            ManifoldKind::EdgeTailLower => "edge_tail_lower",
            ManifoldKind::FrozenThreshold => "frozen_threshold",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldSample {
    pub kind: ManifoldKind,
    pub points: Vec<Vec<f64>>,
    /// τ, t or arclength per point, depending on the kind.
    pub times: Vec<f64>,
    /// Orientation field for thresholds (one unit normal per point).
    pub normals: Vec<Vec<f64>>,
    pub seed_offset: f64,
    pub owner: Vec<f64>,
    /// Set for local-linear thresholds (n ≥ 3).
    pub validity_radius: Option<f64>,
}

impl ManifoldSample {
    pub fn flip_orientation(&mut self) {
        for n in &mut self.normals {
            n.iter_mut().for_each(|v| *v = -*v);
        }
    }

    pub fn flipped(&self) -> Self {
        let mut s = self.clone();
        s.flip_orientation();
        s
    }
}

/// Unstable manifold of ẽ⁻: the pullback attractor x^[r](τ, e⁻).
#[derive(Debug, Clone, PartialEq)]
pub struct PullbackAttractor {
    pub sample: ManifoldSample,
    /// Compactified trajectory in (x, s); its time coordinate equals τ.
    pub trajectory: Trajectory,
    pub lifted: LiftedEquilibrium,
    pub blowup: bool,
}

impl PullbackAttractor {
    /// x at time τ from the dense output.
    pub fn x_at(&self, tau: f64) -> Option<Vec<f64>> {
        let mut p = self.trajectory.interpolate(tau)?;
        p.pop();
        Some(p)
    }

    pub fn tau_range(&self) -> (f64, f64) {
        (self.trajectory.times[0], self.trajectory.t_end())
    }

    pub fn end_state(&self) -> (Vec<f64>, f64) {
        let p = self.trajectory.x_end();
        let n = p.len() - 1;
        (p[..n].to_vec(), p[n])
    }
}

pub fn check_seed_delta(delta: f64) -> Result<()> {
    if !(MIN_SEED_DELTA..=MAX_SEED_DELTA).contains(&delta) {
        return Err(Error::InvalidParameter(format!(
            "seed offset δ = {delta:e} outside [{MIN_SEED_DELTA:e}, {MAX_SEED_DELTA:e}]"
        )));
    }
    Ok(())
}

/// Seeds at (e⁻, −1) + δ·v_u (s increasing) and integrates the compactified
/// flow until s ≥ s_stop or blowup.
pub fn pullback_attractor(cs: &CompactifiedSystem, e_minus: &EquilibriumRecord, delta: f64, s_stop: f64, ode: OdeOptions) -> Result<PullbackAttractor> {
    check_seed_delta(delta)?;
    if !e_minus.is_sink() {
        return Err(Error::Precondition("pullback attractor needs a hyperbolic sink of the past limit system".into()));
    }
    if !(s_stop > -1.0 && s_stop <= 1.0) {
        return Err(Error::InvalidParameter(format!("s_stop = {s_stop} outside (−1, 1]")));
    }
    let lifted = cs.lift_equilibrium(e_minus, Side::Past)?;
    if lifted.unstable_dimension() != 1 {
        return Err(Error::SeedFailure("lifted past sink must have exactly one unstable direction".into()));
    }
    let n = cs.n();
    let v = &lifted.extra_vector;
    let seed: Vec<f64> = lifted.point.iter().zip(v).map(|(p, q)| p + delta * q).collect();
    let tau0 = cs.tau_of(seed[n]);
    // an s_stop of 1 is never reached in finite time: run to where s rounds to 1
    let s_target = s_stop.min(1.0 - f64::EPSILON);
    let tau_end = cs.tau_of(s_target) + 1.0;
    let mut ev = |_t: f64, p: &[f64]| p[n] - s_target;
    let mut events: [EventFn<'_>; 1] = [&mut ev];
    let traj = integrate(|_t, p, out| cs.rhs_into(p, out), &seed, tau0, tau_end, ode, &mut events)?;
    let blowup = traj.termination == Termination::Blowup;
    let sample = ManifoldSample {
        kind: ManifoldKind::UnstableOfPastSink,
        points: traj.states.clone(),
        times: traj.times.clone(),
        normals: Vec::new(),
        seed_offset: delta,
        owner: lifted.point.clone(),
        validity_radius: None,
    };
    Ok(PullbackAttractor { sample, trajectory: traj, lifted, blowup })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdOptions {
    pub delta: Option<f64>,
    pub t_max: f64,
    pub ode: OdeOptions,
    /// Polyline vertex spacing cap for n = 2.
    pub max_spacing: f64,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        ThresholdOptions { delta: None, t_max: 1e3, ode: OdeOptions::default(), max_spacing: 0.02 }
    }
}

fn edge_vectors(frozen: &FrozenSystem, edge: &EquilibriumRecord) -> Result<(Vec<f64>, Vec<f64>)> {
    let vu = edge
        .unstable_vector()
        .ok_or_else(|| Error::Precondition("threshold needs a saddle with exactly one real unstable direction".into()))?;
    let j = frozen.jacobian_x(&edge.x, &edge.lambda)?;
    let mu = edge.eigen.values[0].re;
    let mut w = left_eigenvector(&j, mu, &vu);
    let wn = norm2(&w);
    w.iter_mut().for_each(|c| *c /= wn);
    Ok((vu, w))
}

/// The frozen threshold θ(λ) = W^s(η(λ)): the point itself for n = 1, a
/// curve from backward integration for n = 2. The normal field points to
/// the side of the unstable eigenvector.
pub fn frozen_threshold(frozen: &FrozenSystem, edge: &EquilibriumRecord, arclength: f64, opts: ThresholdOptions) -> Result<ManifoldSample> {
    let n = frozen.n();
    if n >= 3 {
        return Err(Error::NotSupportedExplicitly { n });
    }
    let (vu, w) = edge_vectors(frozen, edge)?;
    let delta = opts.delta.unwrap_or_else(|| default_seed_delta(&edge.x));
    let mut sample = ManifoldSample {
        kind: ManifoldKind::FrozenThreshold,
        points: vec![edge.x.clone()],
        times: vec![0.0],
        normals: vec![w.clone()],
        seed_offset: delta,
        owner: edge.x.clone(),
        validity_radius: None,
    };
    if n == 1 || arclength <= 0.0 {
        return Ok(sample);
    }
    let vs = edge.eigen.real_vector(1);
    let lam = edge.lambda.clone();
    let mut arms: Vec<Vec<(f64, Vec<f64>)>> = Vec::with_capacity(2);
    for sign in [-1.0, 1.0] {
        let seed: Vec<f64> = edge.x.iter().zip(&vs).map(|(x, v)| x + sign * delta * v).chain([delta]).collect();
        let mut ev = |_t: f64, p: &[f64]| p[n] - arclength;
        let mut events: [EventFn<'_>; 1] = [&mut ev];
        let traj = integrate(
            |_t, p, out| {
                frozen.eval_point(&[&p[..n], &lam[..]].concat(), &mut out[..n])?;
                let speed = norm2(&out[..n]);
                out[..n].iter_mut().for_each(|v| *v = -*v);
                out[n] = speed;
                Ok(())
            },
            &seed,
            0.0,
            opts.t_max,
            opts.ode,
            &mut events,
        )?;
        // resample to bounded spacing so segment projection stays accurate
        let mut arm: Vec<(f64, Vec<f64>)> = Vec::new();
        for k in 0..traj.len() {
            if k > 0 {
                let gap = traj.states[k][n] - traj.states[k - 1][n];
                let pieces = (gap / opts.max_spacing).ceil().max(1.0) as usize;
                for j in 1..pieces {
                    let t = traj.times[k - 1] + (traj.times[k] - traj.times[k - 1]) * j as f64 / pieces as f64;
                    let p = traj.dense[k - 1].eval(t);
                    arm.push((p[n], p[..n].to_vec()));
                }
            }
            let p = &traj.states[k];
            arm.push((p[n], p[..n].to_vec()));
        }
        arms.push(arm);
    }
    let (minus, plus) = (arms.remove(0), arms.remove(0));
    let mut points = Vec::new();
    let mut times = Vec::new();
    for (s, p) in minus.into_iter().rev() {
        points.push(p);
        times.push(-s);
    }
    points.push(edge.x.clone());
    times.push(0.0);
    for (s, p) in plus {
        points.push(p);
        times.push(s);
    }
    // normals: tangent rotated by 90°, sign fixed once by the unstable side
    let m = points.len();
    let mut normals = Vec::with_capacity(m);
    for k in 0..m {
        let (a, b) = (k.saturating_sub(1), (k + 1).min(m - 1));
        let t = [points[b][0] - points[a][0], points[b][1] - points[a][1]];
        let tn = (t[0] * t[0] + t[1] * t[1]).sqrt();
        normals.push(vec![-t[1] / tn, t[0] / tn]);
    }
    let mid = times.iter().position(|t| *t == 0.0).unwrap_or(0);
    if dot(&normals[mid], &vu) < 0.0 {
        normals.iter_mut().for_each(|nv| nv.iter_mut().for_each(|v| *v = -*v));
    }
    sample.points = points;
    sample.times = times;
    sample.normals = normals;
    Ok(sample)
}

/// Tangent hyperplane of W^s(η) at η with normal the left unstable
/// eigenvector; the validity radius is where the linearisation error of f
/// reaches 10 %.
pub fn local_linear_threshold(frozen: &FrozenSystem, edge: &EquilibriumRecord) -> Result<ManifoldSample> {
    let (vu, w) = edge_vectors(frozen, edge)?;
    let j = frozen.jacobian_x(&edge.x, &edge.lambda)?;
    let mut directions = vec![vu];
    for k in 1..edge.eigen.dim() {
        if edge.eigen.is_real(k) {
            directions.push(edge.eigen.real_vector(k));
        }
    }
    let mut radius: f64 = 1.0 + norm2(&edge.x);
    for d in &directions {
        let mut r = radius;
        while r > 1e-12 {
            let x: Vec<f64> = edge.x.iter().zip(d).map(|(a, b)| a + r * b).collect();
            let f = frozen.eval(&x, &edge.lambda)?;
            let lin: Vec<f64> = j.mul_vec(d).iter().map(|v| v * r).collect();
            if dist2(&f, &lin) <= 0.1 * norm2(&lin) {
                break;
            }
            r *= 0.5;
        }
        radius = radius.min(r);
    }
    Ok(ManifoldSample {
        kind: ManifoldKind::FrozenThreshold,
        points: vec![edge.x.clone()],
        times: vec![0.0],
        normals: vec![w],
        seed_offset: 0.0,
        owner: edge.x.clone(),
        validity_radius: Some(radius),
    })
}

/// Explicit threshold for n ≤ 2, local-linear otherwise.
pub fn threshold_or_linear(frozen: &FrozenSystem, edge: &EquilibriumRecord, arclength: f64, opts: ThresholdOptions) -> Result<ManifoldSample> {
    match frozen_threshold(frozen, edge, arclength, opts) {
        Err(Error::NotSupportedExplicitly { .. }) => local_linear_threshold(frozen, edge),
        other => other,
    }
}

/// Signed distance to a sampled oriented threshold; +∞ outside the sampled
/// tubular neighbourhood.
pub fn signed_distance(x: &[f64], threshold: &ManifoldSample) -> f64 {
    let pts = &threshold.points;
    if pts.len() == 1 {
        let d: Vec<f64> = x.iter().zip(&pts[0]).map(|(a, b)| a - b).collect();
        return dot(&d, &threshold.normals[0]);
    }
    let mut best = f64::INFINITY;
    let mut best_k = 0;
    let mut best_t = 0.0;
    for k in 0..pts.len() - 1 {
        let (a, b) = (&pts[k], &pts[k + 1]);
        let ab: Vec<f64> = b.iter().zip(a).map(|(p, q)| p - q).collect();
        let ax: Vec<f64> = x.iter().zip(a).map(|(p, q)| p - q).collect();
        let l2 = dot(&ab, &ab);
        let t = if l2 > 0.0 { (dot(&ax, &ab) / l2).clamp(0.0, 1.0) } else { 0.0 };
        let foot: Vec<f64> = a.iter().zip(&ab).map(|(p, q)| p + t * q).collect();
        let d = dist2(x, &foot);
        if d < best {
            best = d;
            best_k = k;
            best_t = t;
        }
    }
    if best == 0.0 {
        return 0.0;
    }
    let at_end = (best_k == 0 && best_t == 0.0) || (best_k == pts.len() - 2 && best_t == 1.0);
    if at_end {
        return f64::INFINITY;
    }
    let (na, nb) = (&threshold.normals[best_k], &threshold.normals[best_k + 1]);
    let normal: Vec<f64> = na.iter().zip(nb).map(|(p, q)| (1.0 - best_t) * p + best_t * q).collect();
    let a = &pts[best_k];
    let b = &pts[best_k + 1];
    let foot: Vec<f64> = a.iter().zip(b).map(|(p, q)| p + best_t * (q - p)).collect();
    let d: Vec<f64> = x.iter().zip(&foot).map(|(p, q)| p - q).collect();
    if dot(&d, &normal) < 0.0 {
        -best
    } else {
        best
    }
}

/// d(A, B) = sup_a inf_b ‖a − b‖
pub fn hausdorff_semi(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(a.iter()
        .map(|p| b.iter().map(|q| dist2(p, q)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max))
}

pub fn hausdorff_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    Ok(hausdorff_semi(a, b)?.max(hausdorff_semi(b, a)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogueEntry {
    pub record: EquilibriumRecord,
    pub capture_radius: f64,
    pub dwell: f64,
    /// Left eigenvector of a real, simple leading eigenvalue; fixes the
    /// approach side.
    pub side_vector: Option<Vec<f64>>,
}

/// Sinks of the future limit system with capture balls.
#[derive(Debug, Clone, PartialEq)]
pub struct AttractorCatalogue {
    pub lambda: Vec<f64>,
    pub entries: Vec<CatalogueEntry>,
}

impl AttractorCatalogue {
    pub fn new(frozen: &FrozenSystem, lambda: &[f64], sinks: Vec<EquilibriumRecord>, capture_radius: f64) -> Result<Self> {
        let mut entries: Vec<CatalogueEntry> = Vec::with_capacity(sinks.len());
        for rec in sinks {
            if !rec.is_sink() {
                return Err(Error::Precondition(format!("catalogue entry at {:?} is not a hyperbolic sink", rec.x)));
            }
            if entries.iter().any(|e| dist2(&e.record.x, &rec.x) < 1e-8 * (1.0 + norm2(&rec.x))) {
                continue;
            }
            let l1 = rec.eigen.values[0];
            let dwell = DWELL_FACTOR / l1.re.abs();
            let simple = rec.eigen.dim() == 1 || (rec.eigen.values[1].re - l1.re).abs() > 1e-6 * (1.0 + l1.re.abs());
            let side_vector = if l1.im == 0.0 && simple {
                let j = frozen.jacobian_x(&rec.x, lambda)?;
                Some(left_eigenvector(&j, l1.re, &rec.eigen.real_vector(0)))
            } else {
                None
            };
            entries.push(CatalogueEntry { record: rec, capture_radius, dwell, side_vector });
        }
        for i in 0..entries.len() {
            for j in 0..i {
                let gap = dist2(&entries[i].record.x, &entries[j].record.x);
                if gap <= entries[i].capture_radius + entries[j].capture_radius {
                    return Err(Error::Precondition(format!("capture balls of sinks {j} and {i} overlap")));
                }
            }
        }
        Ok(AttractorCatalogue { lambda: lambda.to_vec(), entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Index of the catalogued sink at `x`, if any.
    pub fn index_of(&self, x: &[f64]) -> Option<usize> {
        self.entries.iter().position(|e| dist2(&e.record.x, x) <= e.capture_radius)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Captured by catalogued sink `index`, approaching from `side` (±1, or
    /// 0 when the approach direction is not defined).
    Attractor { index: usize, side: i8 },
    Divergent,
    Unresolved { recurrent: bool },
}

impl Outcome {
    pub fn attractor(&self) -> Option<usize> {
        match self {
            Outcome::Attractor { index, .. } => Some(*index),
            _ => None,
        }
    }

    pub fn same_attractor(&self, other: &Outcome) -> bool {
        match (self, other) {
            (Outcome::Attractor { index: a, .. }, Outcome::Attractor { index: b, .. }) => a == b,
            (Outcome::Divergent, Outcome::Divergent) => true,
            (Outcome::Unresolved { .. }, Outcome::Unresolved { .. }) => true,
            _ => false,
        }
    }

    pub fn label(&self) -> alloc::string::String {
        match self {
            Outcome::Attractor { index, side } => format!("sink{index}{}", match side {
                1 => "+",
                -1 => "-",
                _ => "",
            }),
            Outcome::Divergent => "divergent".into(),
            Outcome::Unresolved { recurrent: true } => "unresolved(recurrent)".into(),
            Outcome::Unresolved { recurrent: false } => "unresolved".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaOptions {
    pub t_max: f64,
    pub ode: OdeOptions,
    /// Sample spacing of the stored path (0 keeps no path).
    pub record_spacing: f64,
}

impl Default for OmegaOptions {
    fn default() -> Self {
        OmegaOptions { t_max: DEFAULT_T_MAX, ode: OdeOptions::default(), record_spacing: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmegaRun {
    pub outcome: Outcome,
    pub t_final: f64,
    pub x_final: Vec<f64>,
    /// Per watched point: minimal distance and time spent within `watch_radius`.
    pub watch_min: Vec<f64>,
    pub watch_dwell: Vec<f64>,
    /// Times a trajectory left a capture ball during its dwell.
    pub capture_exits: usize,
    pub path: Vec<Vec<f64>>,
    pub path_times: Vec<f64>,
}

/// Integrates the frozen system at `lambda` from `x0` until capture (entry
/// into a ball followed by a full dwell inside), blowup, or t_max.
pub fn classify_omega_limit(
    frozen: &FrozenSystem,
    x0: &[f64],
    catalogue: &AttractorCatalogue,
    opts: OmegaOptions,
) -> Result<OmegaRun> {
    classify_watching(frozen, x0, catalogue, opts, &[], 0.0)
}

pub fn classify_watching(
    frozen: &FrozenSystem,
    x0: &[f64],
    catalogue: &AttractorCatalogue,
    opts: OmegaOptions,
    watch: &[Vec<f64>],
    watch_radius: f64,
) -> Result<OmegaRun> {
    let n = frozen.n();
    let lam = catalogue.lambda.clone();
    let mut point = vec![0.0; n + lam.len()];
    point[n..].copy_from_slice(&lam);
    let field = move |_t: f64, x: &[f64], out: &mut [f64]| {
        let mut p = point.clone();
        p[..n].copy_from_slice(x);
        frozen.eval_point(&p, out)
    };
    let mut solver = Solver::new(field, 0.0, x0, opts.ode)?;
    let mut watch_min: Vec<f64> = watch.iter().map(|w| dist2(w, x0)).collect();
    let mut watch_dwell = vec![0.0; watch.len()];
    let mut path = Vec::new();
    let mut path_times = Vec::new();
    let mut coarse: Vec<(f64, Vec<f64>)> = vec![(0.0, x0.to_vec())];
    let mut next_record = 0.0;
    // (sink, entry time, entry state) of the current stay in a capture ball
    let mut inside: Option<(usize, f64, Vec<f64>)> = None;
    let mut exits = 0;
    let mut t_prev = 0.0;
    loop {
        let t = solver.t();
        let x = solver.x().to_vec();
        if opts.record_spacing > 0.0 && t >= next_record {
            path.push(x.clone());
            path_times.push(t);
            next_record = t + opts.record_spacing;
        }
        if t - coarse.last().expect("seeded").0 >= 1.0 {
            coarse.push((t, x.clone()));
        }
        for (k, w) in watch.iter().enumerate() {
            let d = dist2(w, &x);
            watch_min[k] = watch_min[k].min(d);
            if d < watch_radius {
                watch_dwell[k] += t - t_prev;
            }
        }
        t_prev = t;
        if let Some((k, _, _)) = &inside {
            let k = *k;
            let e = &catalogue.entries[k];
            if dist2(&e.record.x, &x) >= e.capture_radius {
                exits += 1;
                inside = None;
            }
        }
        if inside.is_none() {
            inside = catalogue.index_of(&x).map(|k| (k, t, x.clone()));
        }
        if let Some((k, t_in, x_in)) = &inside {
            let (k, t_in) = (*k, *t_in);
            let e = &catalogue.entries[k];
            if t - t_in >= e.dwell {
                // side of approach, read off at the ball entry
                let side = match &e.side_vector {
                    Some(w) => {
                        let d: Vec<f64> = x_in.iter().zip(&e.record.x).map(|(a, b)| a - b).collect();
                        let p = dot(w, &d);
                        if p > 0.0 {
                            1
                        } else if p < 0.0 {
                            -1
                        } else {
                            0
                        }
                    }
                    None => 0,
                };
                if opts.record_spacing > 0.0 {
                    path.push(x.clone());
                    path_times.push(t);
                }
                return Ok(OmegaRun {
                    outcome: Outcome::Attractor { index: k, side },
                    t_final: t,
                    x_final: x,
                    watch_min,
                    watch_dwell,
                    capture_exits: exits,
                    path,
                    path_times,
                });
            }
        }
        let blown = norm2(&x) > opts.ode.blowup_norm;
        if blown || t >= opts.t_max || solver.steps() >= opts.ode.max_steps {
            let outcome = if blown {
                Outcome::Divergent
            } else {
                Outcome::Unresolved { recurrent: recurrent(&coarse) }
            };
            return Ok(OmegaRun { outcome, t_final: t, x_final: x, watch_min, watch_dwell, capture_exits: exits, path, path_times });
        }
        solver.step(opts.t_max)?;
    }
}

/// The final sample comes back within RECURRENCE_TOL of a sample at least
/// ten time units older.
fn recurrent(coarse: &[(f64, Vec<f64>)]) -> bool {
    let Some((t_end, x_end)) = coarse.last() else {
        return false;
    };
    coarse.iter().any(|(t, x)| t_end - t >= 10.0 && dist2(x, x_end) < RECURRENCE_TOL)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTail {
    /// +1 for the seed η + δv_u, −1 for η − δv_u.
    pub branch: i8,
    pub sample: ManifoldSample,
    pub run: OmegaRun,
}

/// Both branches of W^u(η⁺) in the future limit system.
pub fn edge_tails(
    frozen: &FrozenSystem,
    eta_plus: &EquilibriumRecord,
    catalogue: &AttractorCatalogue,
    delta: f64,
    opts: OmegaOptions,
) -> Result<(EdgeTail, EdgeTail)> {
    check_seed_delta(delta)?;
    let vu = eta_plus
        .unstable_vector()
        .ok_or_else(|| Error::Precondition("η⁺ must be a saddle with one real unstable direction".into()))?;
    let mut opts = opts;
    if opts.record_spacing <= 0.0 {
        opts.record_spacing = 0.01;
    }
    let tail = |sign: f64| -> Result<EdgeTail> {
        let seed: Vec<f64> = eta_plus.x.iter().zip(&vu).map(|(x, v)| x + sign * delta * v).collect();
        let run = classify_omega_limit(frozen, &seed, catalogue, opts)?;
        let times = run.path_times.clone();
        let sample = ManifoldSample {
            kind: if sign > 0.0 { ManifoldKind::EdgeTailUpper } else { ManifoldKind::EdgeTailLower },
            points: run.path.clone(),
            times,
            normals: Vec::new(),
            seed_offset: delta,
            owner: eta_plus.x.clone(),
            validity_radius: None,
        };
        Ok(EdgeTail { branch: sign as i8, sample, run })
    };
    Ok((tail(1.0)?, tail(-1.0)?))
}

/// Sections Θ^[r](τ) of the stable manifold of η̃⁺, one list of x-points
/// per requested τ. Seeds sit on a half circle of radius δ in the lifted
/// stable eigenspace on the s < 1 side; each is integrated backward and cut
/// at s = g_α(τ).
pub fn threshold_sections(cs: &CompactifiedSystem, eta_plus: &EquilibriumRecord, delta: f64, taus: &[f64], seeds: usize, ode: OdeOptions) -> Result<Vec<Vec<Vec<f64>>>> {
    check_seed_delta(delta)?;
    if !eta_plus.is_edge_candidate() {
        return Err(Error::Precondition("η⁺ must have exactly one unstable direction".into()));
    }
    let lifted = cs.lift_equilibrium(eta_plus, Side::Future)?;
    let n = cs.n();
    let targets: Vec<f64> = taus.iter().map(|t| cs.s_of(*t)).collect();
    let s_min = targets.iter().copied().fold(1.0, f64::min);
    // stable x-directions of the base saddle, plus the normal direction
    let mut stable_x: Vec<Vec<f64>> = Vec::new();
    for k in 0..eta_plus.eigen.dim() {
        if eta_plus.eigen.values[k].re < 0.0 && eta_plus.eigen.is_real(k) {
            stable_x.push(eta_plus.eigen.real_vector(k));
        }
    }
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    if stable_x.is_empty() {
        dirs.push(lifted.extra_vector.iter().map(|v| -v).collect());
    } else {
        let count = seeds.max(1);
        for vx in &stable_x {
            for j in 0..count {
                let phi = core::f64::consts::PI * (j as f64 + 0.5) / count as f64;
                let mut d: Vec<f64> = vx.iter().map(|v| v * phi.cos()).collect();
                d.push(0.0);
                for (a, b) in d.iter_mut().zip(&lifted.extra_vector) {
                    *a -= phi.sin() * b;
                }
                dirs.push(d);
            }
        }
    }
    let mut out = vec![Vec::new(); taus.len()];
    for d in dirs {
        let seed: Vec<f64> = lifted.point.iter().zip(&d).map(|(p, q)| p + delta * q).collect();
        if seed[n] >= 1.0 {
            continue;
        }
        let mut ev = |_t: f64, p: &[f64]| p[n] - (s_min - 1e-9).max(-1.0);
        let mut events: [EventFn<'_>; 1] = [&mut ev];
        let mut o = ode;
        o.blowup_norm = o.blowup_norm.max(1e3);
        let span = cs.tau_of(seed[n]) - cs.tau_of(s_min) + 10.0 * cs.r;
        let traj = integrate(
            |_t, p, dp| {
                cs.rhs_into(p, dp)?;
                dp.iter_mut().for_each(|v| *v = -*v);
                Ok(())
            },
            &seed,
            0.0,
            span.max(1.0),
            o,
            &mut events,
        )?;
        for (k, s_t) in targets.iter().enumerate() {
            // s decreases along the backward orbit
            if let Some(t) = traj.first_crossing(n, *s_t) {
                if let Some(mut p) = traj.interpolate(t) {
                    p.pop();
                    out[k].push(p);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::find_equilibrium;

    #[test]
    fn hausdorff_examples() {
        let a = vec![vec![0.0], vec![1.0]];
        let b = vec![vec![0.0]];
        assert_eq!(hausdorff_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(hausdorff_distance(&[vec![0.0]], &[vec![3.0]]).unwrap(), 3.0);
        assert_eq!(hausdorff_distance(&a, &b).unwrap(), 1.0);
        assert!(matches!(hausdorff_distance(&a, &[]), Err(Error::EmptySet)));
    }

    #[test]
    fn one_d_threshold() {
        let f = FrozenSystem::parse(1, 1, &["(x1+lam1)^2 - 1"], &[]).unwrap();
        let eta = find_equilibrium(&f, &[0.0], &[0.9]).unwrap();
        let th = frozen_threshold(&f, &eta, 1.0, ThresholdOptions::default()).unwrap();
        assert_eq!(th.points, vec![vec![1.0]]);
        assert!(th.normals[0][0] > 0.0);
        assert!((signed_distance(&[0.5], &th) + 0.5).abs() < 1e-12);
        assert_eq!(signed_distance(&[1.0], &th), 0.0);
        assert!((signed_distance(&[0.5], &th.flipped()) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn planar_linear_saddle() {
        let f = FrozenSystem::parse(2, 1, &["x1", "-x2"], &[]).unwrap();
        let eta = find_equilibrium(&f, &[0.0], &[0.0, 0.0]).unwrap();
        let th = frozen_threshold(&f, &eta, 2.0, ThresholdOptions::default()).unwrap();
        for p in &th.points {
            assert!(p[0].abs() < 1e-12);
        }
        let lo = th.points.first().unwrap()[1];
        let hi = th.points.last().unwrap()[1];
        assert!(lo < -1.99 && hi > 1.99);
        let d = signed_distance(&[0.3, 0.5], &th);
        assert!((d - 0.3).abs() < 1e-12);
        assert!((signed_distance(&[-0.3, -0.5], &th) + 0.3).abs() < 1e-12);
        assert_eq!(signed_distance(&[0.3, 7.0], &th), f64::INFINITY);
        let zero = frozen_threshold(&f, &eta, 0.0, ThresholdOptions::default()).unwrap();
        assert_eq!(zero.points.len(), 1);
    }

    #[test]
    fn omega_limit_examples() {
        let f = FrozenSystem::parse(1, 1, &["(x1+lam1)^2 - 1"], &[]).unwrap();
        let lam = [3.0];
        let sink = find_equilibrium(&f, &lam, &[-4.0]).unwrap();
        let cat = AttractorCatalogue::new(&f, &lam, vec![sink], DEFAULT_CAPTURE_RADIUS).unwrap();
        let r = classify_omega_limit(&f, &[-4.0], &cat, OmegaOptions::default()).unwrap();
        assert_eq!(r.outcome.attractor(), Some(0));
        let r = classify_omega_limit(&f, &[-1.9], &cat, OmegaOptions::default()).unwrap();
        assert_eq!(r.outcome, Outcome::Divergent);
        let r = classify_omega_limit(&f, &[-2.1], &cat, OmegaOptions::default()).unwrap();
        assert_eq!(r.outcome, Outcome::Attractor { index: 0, side: 1 });
        assert_eq!(r.capture_exits, 0);
    }

    #[test]
    fn cubic_tails() {
        let f = FrozenSystem::parse(1, 1, &["x1 - x1^3 + 0*lam1"], &[]).unwrap();
        let lam = [0.0];
        let sinks = vec![find_equilibrium(&f, &lam, &[1.1]).unwrap(), find_equilibrium(&f, &lam, &[-1.1]).unwrap()];
        let cat = AttractorCatalogue::new(&f, &lam, sinks, DEFAULT_CAPTURE_RADIUS).unwrap();
        let eta = find_equilibrium(&f, &lam, &[0.1]).unwrap();
        let (up, down) = edge_tails(&f, &eta, &cat, 1e-6, OmegaOptions::default()).unwrap();
        assert_eq!(up.run.outcome.attractor(), Some(0));
        assert_eq!(down.run.outcome.attractor(), Some(1));
    }
}
