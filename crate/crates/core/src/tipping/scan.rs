//! Threshold-instability scans: signed distance of the sink at one path
//! point to the threshold anchored at another.

use alloc::vec;
use alloc::vec::Vec;

use crate::equilibria::{find_equilibrium, Branch};
use crate::manifolds::{classify_omega_limit, signed_distance, threshold_or_linear, AttractorCatalogue, ManifoldSample, OmegaOptions, DEFAULT_CAPTURE_RADIUS};
use crate::numcore::dist2;
use crate::systems::{ExternalInput, FrozenSystem, ParameterPath};
use crate::{Error, Result};
use crate::manifolds::ThresholdOptions;

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOptions {
    /// Grid points per axis.
    pub m: usize,
    /// +1 or −1; −1 flips the orientation convention of θ.
    pub orientation: f64,
    /// Arclength of each sampled threshold arm (n = 2).
    pub arclength: f64,
    pub threshold: ThresholdOptions,
    /// Classify both sides of θ(λ_b) for the first detected pair.
    pub basin_check: bool,
    /// Extra guesses for sinks when cataloguing attractors at λ_b.
    pub extra_sink_seeds: Vec<Vec<f64>>,
    pub omega: OmegaOptions,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            m: 61,
            orientation: 1.0,
            arclength: 3.0,
            threshold: ThresholdOptions::default(),
            basin_check: true,
            extra_sink_seeds: Vec::new(),
            omega: OmegaOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstabilityScan {
    /// true for the (τ₁, τ₂) scan along an input.
    pub forward: bool,
    /// Grid coordinates: u along the path, or τ.
    pub axis: Vec<f64>,
    /// values[i][j] = d_s(e(·ᵢ), θ(·ⱼ)); NaN where undefined (τ₁ ≥ τ₂, or
    /// outside the sampled threshold).
    pub values: Vec<Vec<f64>>,
    /// Zero crossings between adjacent finite values of opposite sign.
    pub pairs: Vec<(f64, f64)>,
    pub unstable: bool,
    pub basin_unstable: bool,
}

impl InstabilityScan {
    pub fn finite_range(&self) -> Option<(f64, f64)> {
        let mut it = self.values.iter().flatten().copied().filter(|v| v.is_finite());
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))))
    }
}

fn linspace(a: f64, b: f64, m: usize) -> Vec<f64> {
    if m <= 1 {
        return vec![a];
    }
    (0..m).map(|k| a + (b - a) * k as f64 / (m - 1) as f64).collect()
}

/// Strict sign changes between horizontal and vertical grid neighbours,
/// located by linear interpolation.
fn sign_change_pairs(axis: &[f64], values: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let m = axis.len();
    let mut pairs = Vec::new();
    let mut push = |v0: f64, v1: f64, p0: (f64, f64), p1: (f64, f64)| {
        if v0.is_finite() && v1.is_finite() && ((v0 < 0.0 && v1 > 0.0) || (v0 > 0.0 && v1 < 0.0)) {
            let t = v0 / (v0 - v1);
            pairs.push((p0.0 + t * (p1.0 - p0.0), p0.1 + t * (p1.1 - p0.1)));
        }
    };
    for i in 0..m {
        for j in 0..m {
            let v = values[i][j];
            if i + 1 < m {
                push(v, values[i + 1][j], (axis[i], axis[j]), (axis[i + 1], axis[j]));
            }
            if j + 1 < m {
                push(v, values[i][j + 1], (axis[i], axis[j]), (axis[i], axis[j + 1]));
            }
        }
    }
    pairs
}

fn oriented(mut th: ManifoldSample, orientation: f64) -> ManifoldSample {
    if orientation < 0.0 {
        th.flip_orientation();
    }
    th
}

/// Do the two sides of θ at the edge state `eta` lie in different basins?
fn basin_unstable_at(frozen: &FrozenSystem, eta: &crate::equilibria::EquilibriumRecord, sink_guesses: &[Vec<f64>], th: &ManifoldSample, opts: &ScanOptions) -> Result<bool> {
    let lam = eta.lambda.clone();
    let mut sinks = Vec::new();
    for g in sink_guesses {
        if let Ok(rec) = find_equilibrium(frozen, &lam, g) {
            if rec.is_sink() && !sinks.iter().any(|s: &crate::equilibria::EquilibriumRecord| dist2(&s.x, &rec.x) < 1e-8) {
                sinks.push(rec);
            }
        }
    }
    if sinks.len() < 2 {
        return Ok(false);
    }
    let cat = AttractorCatalogue::new(frozen, &lam, sinks, DEFAULT_CAPTURE_RADIUS)?;
    let nrm = &th.normals[th.points.iter().position(|p| p == &eta.x).unwrap_or(0)];
    let side = |sign: f64| -> Result<Option<usize>> {
        let x: Vec<f64> = eta.x.iter().zip(nrm).map(|(a, b)| a + sign * 1e-4 * b).collect();
        Ok(classify_omega_limit(frozen, &x, &cat, opts.omega)?.outcome.attractor())
    };
    Ok(match (side(1.0)?, side(-1.0)?) {
        (Some(a), Some(b)) => a != b,
        _ => false,
    })
}

/// d_s(e(λ₁), θ(λ₂)) on an m × m grid over the common range of both
/// branches along `path`.
pub fn scan_threshold_instability(frozen: &FrozenSystem, path: &ParameterPath, sink: &Branch, edge: &Branch, opts: &ScanOptions) -> Result<InstabilityScan> {
    let (a0, a1) = sink.u_range();
    let (b0, b1) = edge.u_range();
    let (lo, hi) = (a0.max(b0), a1.min(b1));
    if !(hi >= lo) {
        return Err(Error::Precondition("sink and edge branches do not overlap on the path".into()));
    }
    let axis = linspace(lo, hi, opts.m);
    let mut sinks = Vec::with_capacity(axis.len());
    let mut ths = Vec::with_capacity(axis.len());
    let mut edges = Vec::with_capacity(axis.len());
    for &u in &axis {
        let (lam, _) = path.point(u)?;
        sinks.push(sink.state_at(frozen, u, &lam)?);
        let x = edge.state_at(frozen, u, &lam)?;
        let rec = find_equilibrium(frozen, &lam, &x)?;
        ths.push(oriented(threshold_or_linear(frozen, &rec, opts.arclength, opts.threshold)?, opts.orientation));
        edges.push(rec);
    }
    let values: Vec<Vec<f64>> = sinks.iter().map(|e| ths.iter().map(|th| finite_or_nan(signed_distance(e, th))).collect()).collect();
    finish(frozen, false, axis, values, &sinks, &edges, &ths, opts)
}

/// Δ_Λ(τ₁, τ₂) = d_s(e(Λ(τ₁)), θ(Λ(τ₂))) on the triangle τ₁ < τ₂ of an
/// m × m grid over [τ_lo, τ_hi].
pub fn scan_forward_threshold_instability(
    frozen: &FrozenSystem,
    input: &ExternalInput,
    sink: &Branch,
    edge: &Branch,
    tau_range: (f64, f64),
    opts: &ScanOptions,
) -> Result<InstabilityScan> {
    let (t0, t1) = tau_range;
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::InvalidParameter("forward scan needs a finite τ range with τ_lo < τ_hi".into()));
    }
    let axis = linspace(t0, t1, opts.m);
    let mut sinks = Vec::with_capacity(axis.len());
    let mut ths = Vec::with_capacity(axis.len());
    let mut edges = Vec::with_capacity(axis.len());
    for &t in &axis {
        sinks.push(sink.state_at_tau(frozen, input, t)?);
        let lam = input.value(t)?;
        let x = edge.state_at_tau(frozen, input, t)?;
        let rec = find_equilibrium(frozen, &lam, &x)?;
        ths.push(oriented(threshold_or_linear(frozen, &rec, opts.arclength, opts.threshold)?, opts.orientation));
        edges.push(rec);
    }
    let m = axis.len();
    let mut values = vec![vec![f64::NAN; m]; m];
    for i in 0..m {
        for j in i + 1..m {
            values[i][j] = finite_or_nan(signed_distance(&sinks[i], &ths[j]));
        }
    }
    finish(frozen, true, axis, values, &sinks, &edges, &ths, opts)
}

fn finite_or_nan(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::NAN
    }
}

fn finish(
    frozen: &FrozenSystem,
    forward: bool,
    axis: Vec<f64>,
    values: Vec<Vec<f64>>,
    sinks: &[Vec<f64>],
    edges: &[crate::equilibria::EquilibriumRecord],
    ths: &[ManifoldSample],
    opts: &ScanOptions,
) -> Result<InstabilityScan> {
    let pairs = sign_change_pairs(&axis, &values);
    let unstable = !pairs.is_empty();
    let mut basin_unstable = false;
    if unstable && opts.basin_check {
        // the grid column nearest to the first pair's λ_b / τ_b
        let b = pairs[0].1;
        let j = (0..axis.len()).min_by(|&p, &q| (axis[p] - b).abs().total_cmp(&(axis[q] - b).abs())).unwrap_or(0);
        let mut guesses = vec![sinks[j].clone()];
        guesses.extend(opts.extra_sink_seeds.iter().cloned());
        basin_unstable = basin_unstable_at(frozen, &edges[j], &guesses, &ths[j], opts)?;
    }
    Ok(InstabilityScan { forward, axis, values, pairs, unstable, basin_unstable })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{continue_branch, find_equilibrium, moving_equilibrium, ContinuationOptions};

    fn quad() -> FrozenSystem {
        FrozenSystem::parse(1, 1, &["(x1+lam1)^2 - 1"], &[]).unwrap()
    }

    fn path_scan(lmax: f64) -> InstabilityScan {
        let f = quad();
        let path = ParameterPath::segment(&[0.0], &[lmax]);
        let e = find_equilibrium(&f, &[0.0], &[-1.0]).unwrap();
        let h = find_equilibrium(&f, &[0.0], &[1.0]).unwrap();
        let opts = ContinuationOptions::default();
        let sb = continue_branch(&f, &e, &path, opts).unwrap();
        let eb = continue_branch(&f, &h, &path, opts).unwrap();
        scan_threshold_instability(&f, &path, &sb, &eb, &ScanOptions { m: 21, ..Default::default() }).unwrap()
    }

    #[test]
    fn affine_distance_on_path() {
        let s = path_scan(3.0);
        for (i, a) in s.axis.iter().enumerate() {
            for (j, b) in s.axis.iter().enumerate() {
                let expect = 3.0 * b - 3.0 * a - 2.0;
                assert!((s.values[i][j] - expect).abs() < 1e-9);
            }
        }
        assert!(s.unstable);
        assert!(!path_scan(1.0).unstable);
    }

    #[test]
    fn forward_scan_dichotomy() {
        let f = quad();
        let run = |input: ExternalInput| {
            let lm = input.past_limit()[0];
            let e = find_equilibrium(&f, &[lm], &[-1.0 - lm]).unwrap();
            let h = find_equilibrium(&f, &[lm], &[1.0 - lm]).unwrap();
            let sb = moving_equilibrium(&f, &input, &e, f64::NEG_INFINITY, ContinuationOptions::default()).unwrap();
            let eb = moving_equilibrium(&f, &input, &h, f64::NEG_INFINITY, ContinuationOptions::default()).unwrap();
            scan_forward_threshold_instability(&f, &input, &sb, &eb, (-8.0, 8.0), &ScanOptions { m: 41, ..Default::default() }).unwrap()
        };
        let up = run(ExternalInput::tanh(0.0, 3.0, 1.0, 0.8).unwrap());
        assert!(up.unstable);
        let down = run(ExternalInput::tanh(3.0, 0.0, 1.0, 0.8).unwrap());
        assert!(!down.unstable);
        let flat = run(ExternalInput::tanh(1.0, 1.0, 1.0, 0.8).unwrap());
        assert!(!flat.unstable);
        for v in flat.values.iter().flatten().filter(|v| v.is_finite()) {
            assert!((v + 2.0).abs() < 1e-9);
        }
    }
}
