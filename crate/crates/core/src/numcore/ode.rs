//! Dormand–Prince 5(4) with the 4th-order continuous extension, sign-change
//! events located by bisection on the dense output, and blowup detection.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use super::linalg::norm2;
use crate::{Error, Result};

pub const DEFAULT_RTOL: f64 = 1e-9;
pub const DEFAULT_ATOL: f64 = 1e-11;
pub const DEFAULT_BLOWUP: f64 = 1e6;
/// Width to which event times are bisected.
pub const EVENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub blowup_norm: f64,
    pub h_max: f64,
    pub max_steps: usize,
    /// Disables error control and takes steps of exactly this size.
    pub fixed_step: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: DEFAULT_RTOL,
            atol: DEFAULT_ATOL,
            blowup_norm: DEFAULT_BLOWUP,
            h_max: f64::INFINITY,
            max_steps: 5_000_000,
            fixed_step: None,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(rtol: f64, atol: f64) -> Self {
        OdeOptions { rtol, atol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Reached the requested end time.
    TimeLimit,
    /// Event function with this index changed sign.
    Event(usize),
    Blowup,
    StepLimit,
}

// Butcher tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// dense output
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Continuous extension of one accepted step on [t0, t0 + h].
#[derive(Debug, Clone, PartialEq)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    coef: [Vec<f64>; 5],
}

impl DenseStep {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        let th = if self.h == 0.0 { 0.0 } else { (t - self.t0) / self.h };
        let th1 = 1.0 - th;
        let [c1, c2, c3, c4, c5] = &self.coef;
        for i in 0..out.len() {
            out[i] = c1[i] + th * (c2[i] + th1 * (c3[i] + th * (c4[i] + th1 * c5[i])));
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.coef[0].len()];
        self.eval_into(t, &mut out);
        out
    }

    pub fn component(&self, t: f64, i: usize) -> f64 {
        let th = if self.h == 0.0 { 0.0 } else { (t - self.t0) / self.h };
        let th1 = 1.0 - th;
        let c = &self.coef;
        c[0][i] + th * (c[1][i] + th1 * (c[2][i] + th * (c[3][i] + th1 * c[4][i])))
    }
}

/// Step-by-step driver; [`integrate`] is built on it.
pub struct Solver<F> {
    f: F,
    n: usize,
    t: f64,
    x: Vec<f64>,
    k: [Vec<f64>; 7],
    y: Vec<f64>,
    y_new: Vec<f64>,
    h: f64,
    opts: OdeOptions,
    steps: usize,
    last: Option<DenseStep>,
}

impl<F> Solver<F>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    pub fn new(mut f: F, t0: f64, x0: &[f64], opts: OdeOptions) -> Result<Self> {
        if !(opts.rtol > 0.0 && opts.atol > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        if x0.iter().any(|v| !v.is_finite()) || !t0.is_finite() {
            return Err(Error::InvalidParameter("non-finite initial state".into()));
        }
        let n = x0.len();
        let mut k: [Vec<f64>; 7] = core::array::from_fn(|_| vec![0.0; n]);
        f(t0, x0, &mut k[0])?;
        if k[0].iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteDerivative { t: t0 });
        }
        let mut s = Solver {
            f,
            n,
            t: t0,
            x: x0.to_vec(),
            k,
            y: vec![0.0; n],
            y_new: vec![0.0; n],
            h: 0.0,
            opts,
            steps: 0,
            last: None,
        };
        s.h = match opts.fixed_step {
            Some(h) if h > 0.0 => h,
            Some(_) => return Err(Error::InvalidParameter("fixed step must be positive".into())),
            None => s.initial_step()?,
        };
        Ok(s)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Derivative at the current state.
    pub fn dx(&self) -> &[f64] {
        &self.k[0]
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn last_dense(&self) -> Option<&DenseStep> {
        self.last.as_ref()
    }

    pub fn take_dense(&mut self) -> Option<DenseStep> {
        self.last.take()
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.opts.atol + self.opts.rtol * a.abs().max(b.abs())
    }

    fn initial_step(&mut self) -> Result<f64> {
        let n = self.n.max(1) as f64;
        let (mut d0, mut d1) = (0.0, 0.0);
        for i in 0..self.n {
            let sc = self.scale(self.x[i], self.x[i]);
            d0 += (self.x[i] / sc).powi(2);
            d1 += (self.k[0][i] / sc).powi(2);
        }
        let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(self.opts.h_max);
        for i in 0..self.n {
            self.y[i] = self.x[i] + h0 * self.k[0][i];
        }
        let (t, y) = (self.t + h0, core::mem::take(&mut self.y));
        let mut f1 = vec![0.0; self.n];
        let ok = (self.f)(t, &y, &mut f1).is_ok();
        self.y = y;
        let mut d2 = 0.0;
        if ok {
            for i in 0..self.n {
                let sc = self.scale(self.x[i], self.x[i]);
                d2 += ((f1[i] - self.k[0][i]) / sc).powi(2);
            }
            d2 = (d2 / n).sqrt() / h0;
        } else {
            return Ok(h0 * 1e-3);
        }
        let m = d1.max(d2);
        let h1 = if m <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / m).powf(0.2) };
        Ok((100.0 * h0).min(h1).min(self.opts.h_max))
    }

    /// Runs the seven stages for step size h from the current state. Returns
    /// the scaled error norm, or None if a stage produced an invalid value.
    fn attempt(&mut self, h: f64) -> Result<Option<f64>> {
        let n = self.n;
        let t = self.t;
        macro_rules! stage {
            ($idx:expr, $c:expr, [$($j:expr => $a:expr),*]) => {{
                for i in 0..n {
                    self.y[i] = self.x[i] + h * (0.0 $(+ $a * self.k[$j][i])*);
                }
                let (head, tail) = self.k.split_at_mut($idx);
                let _ = head;
                if (self.f)(t + $c * h, &self.y, &mut tail[0]).is_err()
                    || tail[0].iter().any(|v| !v.is_finite())
                {
                    return Ok(None);
                }
            }};
        }
        stage!(1, C2, [0 => A21]);
        stage!(2, C3, [0 => A31, 1 => A32]);
        stage!(3, C4, [0 => A41, 1 => A42, 2 => A43]);
        stage!(4, C5, [0 => A51, 1 => A52, 2 => A53, 3 => A54]);
        stage!(5, 1.0, [0 => A61, 1 => A62, 2 => A63, 3 => A64, 4 => A65]);
        for i in 0..n {
            self.y_new[i] = self.x[i]
                + h * (A71 * self.k[0][i] + A73 * self.k[2][i] + A74 * self.k[3][i] + A75 * self.k[4][i]
                    + A76 * self.k[5][i]);
        }
        if self.y_new.iter().any(|v| !v.is_finite()) {
            return Ok(None);
        }
        {
            let (head, tail) = self.k.split_at_mut(6);
            let _ = head;
            if (self.f)(t + h, &self.y_new, &mut tail[0]).is_err() {
                return Ok(None);
            }
        }
        let mut err = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * self.k[0][i] + E3 * self.k[2][i] + E4 * self.k[3][i] + E5 * self.k[4][i]
                    + E6 * self.k[5][i]
                    + E7 * self.k[6][i]);
            let sc = self.scale(self.x[i], self.y_new[i]);
            err += (e / sc).powi(2);
        }
        Ok(Some((err / n.max(1) as f64).sqrt()))
    }

    /// Takes one accepted step that does not pass `t_limit`.
    pub fn step(&mut self, t_limit: f64) -> Result<&DenseStep> {
        if t_limit <= self.t {
            return Err(Error::InvalidParameter("step limit not ahead of current time".into()));
        }
        let mut rejected = false;
        loop {
            let mut h = self.h.min(self.opts.h_max);
            let remaining = t_limit - self.t;
            let clipped = h >= remaining - 1e-9 * h;
            if clipped {
                h = remaining;
            }
            if h < 16.0 * f64::EPSILON * self.t.abs().max(1e-300) || h <= 0.0 {
                return Err(Error::StepUnderflow { t: self.t });
            }
            let outcome = self.attempt(h)?;
            let fixed = self.opts.fixed_step.is_some();
            match outcome {
                None => {
                    if fixed {
                        return Err(Error::NonFiniteDerivative { t: self.t });
                    }
                    self.h = 0.25 * h;
                    rejected = true;
                    continue;
                }
                Some(err) if !fixed && err > 1.0 => {
                    let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                    self.h = h * fac;
                    rejected = true;
                    continue;
                }
                Some(err) => {
                    if self.k[6].iter().any(|v| !v.is_finite()) {
                        return Err(Error::NonFiniteDerivative { t: self.t + h });
                    }
                    self.finish_step(h);
                    if !fixed {
                        let mut fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                        if rejected {
                            fac = fac.min(1.0);
                        }
                        // a step clipped to the limit says little about the next one
                        let base = if clipped { self.h.max(h) } else { h };
                        self.h = base * fac;
                    }
                    self.steps += 1;
                    return Ok(self.last.as_ref().expect("dense step just stored"));
                }
            }
        }
    }

    fn finish_step(&mut self, h: f64) {
        let n = self.n;
        let mut c: [Vec<f64>; 5] = core::array::from_fn(|_| vec![0.0; n]);
        for i in 0..n {
            let ydiff = self.y_new[i] - self.x[i];
            let bspl = h * self.k[0][i] - ydiff;
            c[0][i] = self.x[i];
            c[1][i] = ydiff;
            c[2][i] = bspl;
            c[3][i] = ydiff - h * self.k[6][i] - bspl;
            c[4][i] = h
                * (D1 * self.k[0][i] + D3 * self.k[2][i] + D4 * self.k[3][i] + D5 * self.k[4][i]
                    + D6 * self.k[5][i]
                    + D7 * self.k[6][i]);
        }
        self.last = Some(DenseStep { t0: self.t, h, coef: c });
        self.t += h;
        core::mem::swap(&mut self.x, &mut self.y_new);
        self.k.swap(0, 6);
    }

    /// Overwrites the current state (used for clamping onto invariant sets).
    pub fn set_state(&mut self, x: &[f64]) -> Result<()> {
        self.x.copy_from_slice(x);
        (self.f)(self.t, &self.x, &mut self.k[0])?;
        if self.k[0].iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteDerivative { t: self.t });
        }
        Ok(())
    }

    pub fn max_steps(&self) -> usize {
        self.opts.max_steps
    }

    pub fn blowup_norm(&self) -> f64 {
        self.opts.blowup_norm
    }
}

/// Accepted-step samples plus the dense output of every step.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub dense: Vec<DenseStep>,
    pub termination: Termination,
    /// Order of the continuous extension.
    pub dense_order: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("trajectory has at least the initial point")
    }

    pub fn x_end(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least the initial point")
    }

    fn segment(&self, t: f64) -> Option<usize> {
        if self.dense.is_empty() || t < self.times[0] || t > self.t_end() {
            return None;
        }
        let idx = self.times.partition_point(|&s| s <= t);
        Some(idx.saturating_sub(1).min(self.dense.len() - 1))
    }

    /// Dense-output state at `t` (None outside the covered interval).
    pub fn interpolate(&self, t: f64) -> Option<Vec<f64>> {
        if self.dense.is_empty() {
            return (self.times.first() == Some(&t)).then(|| self.states[0].clone());
        }
        if t == self.t_end() {
            return Some(self.x_end().to_vec());
        }
        self.segment(t).map(|i| self.dense[i].eval(t))
    }

    /// First time at which component `i` crosses `value`, located on the
    /// dense output by bisection.
    pub fn first_crossing(&self, i: usize, value: f64) -> Option<f64> {
        for (k, seg) in self.dense.iter().enumerate() {
            let a = self.states[k][i] - value;
            let b = self.states[k + 1][i] - value;
            if a == 0.0 {
                return Some(self.times[k]);
            }
            if a * b <= 0.0 {
                let (mut lo, mut hi) = (seg.t0, self.times[k + 1]);
                let fa = a;
                while hi - lo > EVENT_TOL * hi.abs().max(1.0) {
                    let mid = 0.5 * (lo + hi);
                    let fm = seg.component(mid, i) - value;
                    if fm == 0.0 {
                        return Some(mid);
                    }
                    if (fm < 0.0) == (fa < 0.0) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Some(0.5 * (lo + hi));
            }
        }
        None
    }
}

/// Event function g(t, x); integration stops at its first sign change.
pub type EventFn<'a> = &'a mut dyn FnMut(f64, &[f64]) -> f64;

/// Integrates `x' = field(t, x)` from `t0` to `t_end > t0`.
pub fn integrate<F>(
    field: F,
    x0: &[f64],
    t0: f64,
    t_end: f64,
    opts: OdeOptions,
    events: &mut [EventFn<'_>],
) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    if !(t_end > t0) {
        return Err(Error::InvalidParameter("integration end must exceed start".into()));
    }
    let mut solver = Solver::new(field, t0, x0, opts)?;
    let mut traj = Trajectory {
        times: vec![t0],
        states: vec![x0.to_vec()],
        dense: Vec::new(),
        termination: Termination::TimeLimit,
        dense_order: 4,
    };
    let mut g_prev: Vec<f64> = events.iter_mut().map(|g| g(t0, x0)).collect();
    if norm2(x0) > opts.blowup_norm {
        traj.termination = Termination::Blowup;
        return Ok(traj);
    }
    while t_end - solver.t() > 4.0 * f64::EPSILON * t_end.abs().max(1.0) {
        if solver.steps() >= opts.max_steps {
            traj.termination = Termination::StepLimit;
            return Ok(traj);
        }
        solver.step(t_end)?;
        let seg = solver.take_dense().expect("step stores dense output");
        let t1 = solver.t();
        let x1 = solver.x().to_vec();
        // earliest event in this step
        let mut hit: Option<(f64, usize)> = None;
        for (k, g) in events.iter_mut().enumerate() {
            let g1 = g(t1, &x1);
            let g0 = g_prev[k];
            if g0 != 0.0 && (g1 == 0.0 || (g0 < 0.0) != (g1 < 0.0)) {
                let (mut lo, mut hi) = (seg.t0, t1);
                let mut buf = vec![0.0; x1.len()];
                while hi - lo > EVENT_TOL * hi.abs().max(1.0) {
                    let mid = 0.5 * (lo + hi);
                    seg.eval_into(mid, &mut buf);
                    let gm = g(mid, &buf);
                    if gm != 0.0 && (gm < 0.0) == (g0 < 0.0) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                if hit.is_none_or(|(t, _)| hi < t) {
                    hit = Some((hi, k));
                }
            }
            g_prev[k] = g1;
        }
        if let Some((te, k)) = hit {
            let xe = seg.eval(te);
            traj.times.push(te);
            traj.states.push(xe);
            traj.dense.push(seg);
            traj.termination = Termination::Event(k);
            return Ok(traj);
        }
        traj.times.push(t1);
        traj.states.push(x1);
        traj.dense.push(seg);
        if norm2(solver.x()) > opts.blowup_norm {
            traj.termination = Termination::Blowup;
            return Ok(traj);
        }
    }
    Ok(traj)
}
