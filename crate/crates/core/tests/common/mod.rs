#![allow(dead_code)]

use ratekit_core::equilibria::{find_equilibrium, moving_equilibrium, Branch, ContinuationOptions, EquilibriumRecord};
use ratekit_core::manifolds::{AttractorCatalogue, DEFAULT_CAPTURE_RADIUS};
use ratekit_core::systems::{ExternalInput, FrozenSystem, InputComponent};
use ratekit_core::tipping::{TippingOptions, TippingProblem};

pub struct Case {
    pub problem: TippingProblem,
    pub sink: Branch,
    pub edge: Branch,
}

fn case(f: FrozenSystem, input: ExternalInput, e_guess: &[f64], sinks_plus: &[&[f64]], edge_plus: &[f64]) -> Case {
    let lm = input.past_limit();
    let lp = input.future_limit();
    let e_minus = find_equilibrium(&f, &lm, e_guess).unwrap();
    let opts = ContinuationOptions::default();
    let sink = moving_equilibrium(&f, &input, &e_minus, f64::NEG_INFINITY, opts).unwrap();
    let eta: EquilibriumRecord = find_equilibrium(&f, &lp, edge_plus).unwrap();
    let edge = moving_equilibrium(&f, &input, &eta, f64::INFINITY, opts).unwrap();
    let sinks = sinks_plus.iter().map(|g| find_equilibrium(&f, &lp, g).unwrap()).collect();
    let cat = AttractorCatalogue::new(&f, &lp, sinks, DEFAULT_CAPTURE_RADIUS).unwrap();
    let problem = TippingProblem::new(f, input, e_minus, cat, vec![eta], TippingOptions::default()).unwrap();
    Case { problem, sink, edge }
}

pub fn sn1d(lmax: f64) -> Case {
    let f = FrozenSystem::parse(1, 1, &["(x1+lam1)^2 - 1"], &[]).unwrap();
    let input = ExternalInput::tanh(0.0, lmax, 1.0, 0.8).unwrap();
    case(f, input, &[-1.0], &[&[-1.0 - lmax]], &[1.0 - lmax])
}

pub fn cubic1d() -> Case {
    let f = FrozenSystem::parse(1, 1, &["(x1+lam1) - (x1+lam1)^3"], &[]).unwrap();
    let input = ExternalInput::tanh(0.0, 2.0, 1.0, 0.8).unwrap();
    case(f, input, &[-1.0], &[&[-3.0], &[-1.0]], &[-2.0])
}

pub fn planar() -> Case {
    let (cx, cy) = (0.3f64.cos(), 0.3f64.sin());
    let consts = [("cx", cx), ("cy", cy), ("mu", 0.5)];
    let u = "(x1 - cx*lam1)";
    let v = "(x2 - cy*lam1)";
    let r2 = format!("({u}^2 + {v}^2)");
    let f1 = format!("(1 - {r2})*{u} - {v}*(mu - {v})");
    let f2 = format!("(1 - {r2})*{v} + {u}*(mu - {v})");
    let f = FrozenSystem::parse(2, 1, &[&f1, &f2], &consts).unwrap();
    let input = ExternalInput::tanh(0.0, 3.0, 1.0, 0.8).unwrap();
    let pt = |th: f64, l: f64| [th.cos() + cx * l, th.sin() + cy * l];
    let pi = std::f64::consts::PI;
    case(f, input, &pt(pi / 6.0, 0.0), &[&pt(pi / 6.0, 3.0)], &pt(5.0 * pi / 6.0, 3.0))
}

pub fn sn_pulse() -> Case {
    let f = FrozenSystem::parse(1, 1, &["(x1+lam1)^2 - 1"], &[]).unwrap();
    let input = ExternalInput::new(vec![InputComponent::SechPulse { base: 0.0, amplitude: 4.0, width: 1.0 }], 0.8).unwrap();
    case(f, input, &[-1.0], &[&[-1.0]], &[1.0])
}
