//! δ-close and end-point tracking of a moving sink.

use alloc::format;
use alloc::vec::Vec;

use super::TippingOptions;
use crate::compact::{choose_alpha, h_alpha, CompactifiedSystem};
use crate::equilibria::Branch;
use crate::manifolds::{classify_omega_limit, default_seed_delta, pullback_attractor, AttractorCatalogue, Outcome};
use crate::numcore::{dist2, integrate, Termination};
use crate::systems::{ExternalInput, FrozenSystem, NonautonomousSystem};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum TrackingSource {
    /// The pullback attractor of e⁻ (I = ℝ).
    FromEMinus,
    FromPoint { x0: Vec<f64>, tau0: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingReport {
    pub r: f64,
    pub delta: f64,
    /// Sampled τ interval before handover, cut at the end of the branch when
    /// it stops short of the future limit (a fold).
    pub interval: (f64, f64),
    /// The branch reaches the future limit system.
    pub reaches_future: bool,
    pub sup_deviation: f64,
    pub end_outcome: Outcome,
    pub delta_close: bool,
    pub end_point: bool,
    /// Samples along the nonautonomous part.
    pub samples: Vec<TrackingSample>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingSample {
    pub tau: f64,
    pub x: Vec<f64>,
    /// e(Λ(τ))
    pub e: Vec<f64>,
    pub distance: f64,
}

/// Integrates the solution, samples its distance to the moving sink and
/// classifies where it ends up. A branch ending at a fold is tracked on its
/// semi-infinite interval only; end-point tracking then fails by definition.
pub fn check_tracking(
    frozen: &FrozenSystem,
    input: &ExternalInput,
    branch: &Branch,
    catalogue: &AttractorCatalogue,
    r: f64,
    delta: f64,
    source: &TrackingSource,
    opts: &TippingOptions,
) -> Result<TrackingReport> {
    if !(r > 0.0 && delta > 0.0) {
        return Err(Error::InvalidParameter("tracking needs r > 0 and δ > 0".into()));
    }
    let e_plus = branch.future_limit();
    let tau_end_branch = branch.interval().map_or(f64::INFINITY, |i| i.1);
    let l1 = e_plus.or(branch.past_limit()).map(|e| e.eigen.values[0].re);
    let alpha = opts.alpha.unwrap_or_else(|| choose_alpha(input.rho(), r, l1));
    let n = frozen.n();

    // (τ, x) samples of the nonautonomous part, ending at the handover
    let mut pts: Vec<(f64, Vec<f64>)> = Vec::new();
    let blowup;
    match source {
        TrackingSource::FromEMinus => {
            let e_minus = branch.past_limit().ok_or(Error::BranchTruncated)?;
            let cs = CompactifiedSystem::new(frozen.clone(), input.clone(), r, alpha)?;
            let delta_seed = opts.seed_delta.unwrap_or_else(|| default_seed_delta(&e_minus.x));
            let pb = pullback_attractor(&cs, e_minus, delta_seed, opts.s_hand, opts.ode)?;
            blowup = pb.blowup;
            let tr = &pb.trajectory;
            for (k, seg) in tr.dense.iter().enumerate() {
                pts.push((tr.times[k], tr.states[k][..n].to_vec()));
                let mid = seg.t0 + 0.5 * seg.h;
                pts.push((mid, seg.eval(mid)[..n].to_vec()));
            }
            pts.push((tr.t_end(), tr.x_end()[..n].to_vec()));
        }
        TrackingSource::FromPoint { x0, tau0 } => {
            if x0.len() != n {
                return Err(Error::Dimension(format!("x0 has {} entries, system has n = {n}", x0.len())));
            }
            let sys = NonautonomousSystem::new(frozen.clone(), input.clone(), r)?;
            let tau_end = h_alpha(alpha, opts.s_hand).max(*tau0 + 1.0);
            let tr = integrate(|t, x, out| sys.rhs_into(t, x, out), x0, *tau0, tau_end, opts.ode, &mut [])?;
            blowup = tr.termination == Termination::Blowup;
            for (k, seg) in tr.dense.iter().enumerate() {
                pts.push((tr.times[k], tr.states[k].clone()));
                let mid = seg.t0 + 0.5 * seg.h;
                pts.push((mid, seg.eval(mid)));
            }
            pts.push((tr.t_end(), tr.x_end().to_vec()));
        }
    }

    let mut samples = Vec::with_capacity(pts.len());
    let mut sup: f64 = 0.0;
    for (tau, x) in &pts {
        if *tau > tau_end_branch {
            break;
        }
        let e = match branch.state_at_tau(frozen, input, *tau) {
            Ok(e) => e,
            Err(_) => continue,
        };
        let d = dist2(x, &e);
        sup = sup.max(d);
        samples.push(TrackingSample { tau: *tau, x: x.clone(), e, distance: d });
    }
    let interval = (pts[0].0, pts[pts.len() - 1].0.min(tau_end_branch));
    let end_outcome = if blowup {
        Outcome::Divergent
    } else {
        let x_hand = &pts[pts.len() - 1].1;
        let mut om = opts.omega;
        om.record_spacing = 0.05;
        let run = classify_omega_limit(frozen, x_hand, catalogue, om)?;
        // the tail in the future limit system still counts toward the sup
        if let Some(e_plus) = e_plus {
            for p in &run.path {
                sup = sup.max(dist2(p, &e_plus.x));
            }
        }
        run.outcome
    };
    let target = e_plus.and_then(|e| catalogue.index_of(&e.x));
    let end_point = target.is_some() && end_outcome.attractor() == target;
    if blowup {
        sup = f64::INFINITY;
    }
    Ok(TrackingReport { r, delta, interval, reaches_future: e_plus.is_some(), sup_deviation: sup, end_outcome, delta_close: sup < delta, end_point, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{find_equilibrium, moving_equilibrium, ContinuationOptions};

    fn setup(lmax: f64) -> (FrozenSystem, ExternalInput, Branch, AttractorCatalogue) {
        let f = FrozenSystem::parse(1, 1, &["(x1+lam1)^2 - 1"], &[]).unwrap();
        let input = ExternalInput::tanh(0.0, lmax, 1.0, 0.8).unwrap();
        let seed = find_equilibrium(&f, &[0.0], &[-1.0]).unwrap();
        let br = moving_equilibrium(&f, &input, &seed, f64::NEG_INFINITY, ContinuationOptions::default()).unwrap();
        let sink = find_equilibrium(&f, &[lmax], &[-1.0 - lmax]).unwrap();
        let cat = AttractorCatalogue::new(&f, &[lmax], alloc::vec![sink], 1e-3).unwrap();
        (f, input, br, cat)
    }

    #[test]
    fn slow_ramp_tracks() {
        let (f, input, br, cat) = setup(3.0);
        let rep = check_tracking(&f, &input, &br, &cat, 0.01, 0.1, &TrackingSource::FromEMinus, &TippingOptions::default()).unwrap();
        assert!(rep.delta_close && rep.end_point, "{rep:?}");
    }

    #[test]
    fn fast_ramp_tips() {
        let (f, input, br, cat) = setup(3.0);
        let rep = check_tracking(&f, &input, &br, &cat, 20.0, 0.1, &TrackingSource::FromEMinus, &TippingOptions::default()).unwrap();
        assert!(!rep.end_point);
        assert_eq!(rep.end_outcome, Outcome::Divergent);
    }

    #[test]
    fn fold_branch_tracks_up_to_the_fold() {
        let f = FrozenSystem::parse(1, 1, &["lam1 - x1^2"], &[]).unwrap();
        let input = ExternalInput::tanh(1.0, -1.0, 1.0, 0.8).unwrap();
        let seed = find_equilibrium(&f, &[1.0], &[1.0]).unwrap();
        let br = moving_equilibrium(&f, &input, &seed, f64::NEG_INFINITY, ContinuationOptions::default()).unwrap();
        assert!(br.future_limit().is_none());
        let cat = AttractorCatalogue::new(&f, &[-1.0], alloc::vec![], 1e-3).unwrap();
        let rep = check_tracking(&f, &input, &br, &cat, 0.01, 0.1, &TrackingSource::FromEMinus, &TippingOptions::default()).unwrap();
        assert!(!rep.reaches_future && !rep.end_point);
        assert!(rep.interval.1 < 1.0, "{:?}", rep.interval);
        assert_eq!(rep.end_outcome, Outcome::Divergent);
    }

    #[test]
    fn constant_input_stays() {
        let (f, _, _, _) = setup(3.0);
        let input = ExternalInput::tanh(0.5, 0.5, 1.0, 0.8).unwrap();
        let seed = find_equilibrium(&f, &[0.5], &[-1.5]).unwrap();
        let br = moving_equilibrium(&f, &input, &seed, 0.0, ContinuationOptions::default()).unwrap();
        let cat = AttractorCatalogue::new(&f, &[0.5], alloc::vec![seed], 1e-3).unwrap();
        for r in [0.1, 1.0, 10.0] {
            let rep = check_tracking(&f, &input, &br, &cat, r, 0.1, &TrackingSource::FromEMinus, &TippingOptions::default()).unwrap();
            assert!(rep.sup_deviation <= 1e-5, "{}", rep.sup_deviation);
            assert!(rep.delta_close && rep.end_point);
        }
    }
}
