//! Acceptance criteria 1 to 12, one PASS/FAIL line each.
//!
//! Oracles are independent of the engine where possible: closed forms for
//! the quadratic family, and a fixed-step classical RK4 on hand-written
//! right-hand sides in place of the adaptive pair and the expression DSL.
//! Criteria listed in `KNOWN_RED` fail as stated; the run checks that they
//! still fail for the recorded reason, and that every other criterion passes.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use ratekit::builtins::builtin;
use ratekit::model::{load, Model, Setup};
use ratekit::scenario::{ComponentDef, Num, Scenario};
use ratekit_core::compact::{CompactifiedSystem, Side};
use ratekit_core::equilibria::{continue_branch, find_equilibrium, ContinuationOptions};
use ratekit_core::expr::Expr;
use ratekit_core::manifolds::{hausdorff_distance, threshold_sections, Outcome};
use ratekit_core::numcore::{eigen, integrate, Matrix, OdeOptions};
use ratekit_core::systems::ParameterPath;
use ratekit_core::tipping::{
    check_tracking, classify_tipping, construct_tipping_input, find_critical_rate, scan_forward_threshold_instability, scan_threshold_instability,
    ConstructOptions, ScanOptions, SigmaReparam, TippingProblem, TippingReport, TrackingSource,
};

// ---- pinned tolerances ----

/// Criterion 1: eigenvalues and extra-vector x-part.
const TOL_LIFT: f64 = 1e-8;
/// Criterion 2: pullback vs deep-past integration, sup norm.
const TOL_PULLBACK: f64 = 1e-4;
/// Criteria 3 and 4: δ of δ-close tracking.
const DELTA_TRACK: f64 = 0.1;
/// Criterion 5: bisection vs dense grid.
const TOL_RC: f64 = 2e-4;
/// Criterion 5: dense grid step in r.
const GRID_STEP: f64 = 1e-4;
/// Criterion 5: runtime budget per scenario.
const RC_BUDGET: Duration = Duration::from_secs(60);
/// Criterion 9: closest approach to η⁺.
const TOL_ETA: f64 = 1e-3;
/// Criterion 10: σ endpoints.
const TOL_SIGMA: f64 = 1e-12;
/// Criterion 11: endpoint error ratio when halving the tolerance.
const ORDER_RATIO: f64 = 8.0;

/// Criteria that fail as stated, with the part expected to fail.
const KNOWN_RED: [(u8, &str, &str); 2] = [
    (
        9,
        "eta_plus_distance",
        "the construction connects to Θ only to d_s ≈ 2e-7 at τ = ε, and the warped input settles on λ⁺ at rate ε; \
         reaching 1e-3 of η⁺ itself would need d_s ≈ 1e-59, far below double precision",
    ),
    (
        11,
        "order_tolerance_halving",
        "error-controlled steps make the endpoint error proportional to the tolerance, so halving it gains a factor \
         of about 2, never 8; halving a fixed step gains 2^5",
    ),
];

struct Report {
    failed: Vec<&'static str>,
    notes: Vec<String>,
}

impl Report {
    fn new() -> Self {
        Report { failed: Vec::new(), notes: Vec::new() }
    }

    fn check(&mut self, part: &'static str, ok: bool, note: String) {
        if !ok {
            self.failed.push(part);
        }
        self.notes.push(format!("{part} {} ({note})", if ok { "ok" } else { "FAILED" }));
    }
}

// ---- oracle integrator ----

/// Classical RK4 from t0 to t1 with step about h; `watch` sees every step
/// and stops the run by returning false.
fn rk4<F>(f: &F, x0: &[f64], t0: f64, t1: f64, h: f64, mut watch: impl FnMut(f64, &[f64]) -> bool) -> Vec<f64>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let steps = ((t1 - t0) / h).ceil().max(1.0) as usize;
    let h = (t1 - t0) / steps as f64;
    let mut x = x0.to_vec();
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let k1 = f(t, &x);
        let y: Vec<f64> = x.iter().zip(&k1).map(|(a, b)| a + 0.5 * h * b).collect();
        let k2 = f(t + 0.5 * h, &y);
        let y: Vec<f64> = x.iter().zip(&k2).map(|(a, b)| a + 0.5 * h * b).collect();
        let k3 = f(t + 0.5 * h, &y);
        let y: Vec<f64> = x.iter().zip(&k3).map(|(a, b)| a + h * b).collect();
        let k4 = f(t + h, &y);
        for i in 0..x.len() {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if !watch(t + h, &x) {
            break;
        }
    }
    x
}

fn ramp(lmax: f64, tau: f64) -> f64 {
    0.5 * lmax * (1.0 + (0.5 * tau).tanh())
}

fn quad_rhs(lmax: f64, r: f64) -> impl Fn(f64, &[f64]) -> Vec<f64> {
    move |t, x| {
        let y = x[0] + ramp(lmax, t);
        vec![(y * y - 1.0) / r]
    }
}

fn cubic_rhs(lmax: f64, r: f64) -> impl Fn(f64, &[f64]) -> Vec<f64> {
    move |t, x| {
        let y = x[0] + ramp(lmax, t);
        vec![(y - y * y * y) / r]
    }
}

const CX: f64 = 0.955336489125606;
const CY: f64 = 0.29552020666133955;
const MU: f64 = 0.5;

/// Planar excitable system frozen at λ.
fn planar_frozen(lam: f64, x: &[f64]) -> Vec<f64> {
    let (u, v) = (x[0] - CX * lam, x[1] - CY * lam);
    let q = 1.0 - (u * u + v * v);
    vec![q * u - v * (MU - v), q * v + u * (MU - v)]
}

/// Where a trajectory ends up.
#[derive(Debug, Clone, Copy, PartialEq)]
enum End {
    Sink(usize),
    Divergent,
    Unresolved,
}

/// Long direct integration until capture in one of `sinks` (radius 1e-3),
/// blowup past 1e3, or t_max.
fn fate<F: Fn(f64, &[f64]) -> Vec<f64>>(f: &F, x0: &[f64], t0: f64, t_max: f64, h: f64, sinks: &[Vec<f64>], settle: f64) -> End {
    let mut end = End::Unresolved;
    rk4(f, x0, t0, t_max, h, |t, x| {
        if x.iter().any(|v| !v.is_finite() || v.abs() > 1e3) {
            end = End::Divergent;
            return false;
        }
        if t >= settle {
            if let Some(k) = sinks.iter().position(|s| dist(s, x) < 1e-3) {
                end = End::Sink(k);
                return false;
            }
        }
        true
    });
    end
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

// ---- shared engine runs ----

fn problem(name: &str) -> (Model, Setup, TippingProblem) {
    let (model, setup) = load(&builtin(name).unwrap()).unwrap();
    let p = setup.problem(&model).unwrap();
    (model, setup, p)
}

struct Classified {
    report: TippingReport,
    elapsed: Duration,
    problem: TippingProblem,
}

/// find_critical_rate + classify_tipping per builtin, computed once.
fn classified(name: &'static str) -> &'static Classified {
    static CACHE: OnceLock<std::sync::Mutex<BTreeMap<&'static str, &'static Classified>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(c) = cache.lock().unwrap().get(name) {
        return c;
    }
    let (_, _, p) = problem(name);
    let s = builtin(name).unwrap();
    let t = Instant::now();
    let crit = find_critical_rate(&p, s.rates.r_lo, s.rates.r_hi, s.rates.tol_r).unwrap();
    let report = classify_tipping(&p, crit).unwrap();
    let c: &'static Classified = Box::leak(Box::new(Classified { report, elapsed: t.elapsed(), problem: p }));
    cache.lock().unwrap().insert(name, c);
    c
}

// ---- criteria ----

fn c1_compactification() -> Report {
    let mut rep = Report::new();
    let (model, setup, p) = problem("sn1d");
    let alpha = 0.5 * model.input.rho();
    let mut rng = StdRng::seed_from_u64(1);
    let cs = CompactifiedSystem::new(model.frozen.clone(), model.input.clone(), 1.0, alpha).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let x: f64 = rng.gen_range(-10.0..10.0);
        for s in [-1.0, 1.0] {
            worst = worst.max(cs.rhs(&[x, s]).unwrap()[1].abs());
        }
    }
    rep.check("s_field_zero", worst == 0.0, format!("max |s'| on S± = {worst:e}"));
    // l = 2(x + λ) at the three equilibria
    let cases = [(&setup.e_minus, Side::Past, -2.0), (&p.catalogue.entries[0].record, Side::Future, -2.0), (&setup.edges[0], Side::Future, 2.0)];
    let (mut xpart, mut eig_err): (f64, f64) = (0.0, 0.0);
    for r in [0.1, 1.0, 10.0] {
        let cs = CompactifiedSystem::new(model.frozen.clone(), model.input.clone(), r, alpha).unwrap();
        for (rec, side, l) in cases {
            let lifted = cs.lift_equilibrium(rec, side).unwrap();
            xpart = xpart.max(lifted.extra_vector[0].abs());
            let mut want = [l / r, -alpha * side.s()];
            let mut got: Vec<f64> = lifted.eigen.values.iter().map(|v| v.re).collect();
            want.sort_by(f64::total_cmp);
            got.sort_by(f64::total_cmp);
            let im = lifted.eigen.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
            eig_err = eig_err.max(im).max((got[0] - want[0]).abs()).max((got[1] - want[1]).abs());
        }
    }
    rep.check("extra_vector_normal", xpart <= TOL_LIFT, format!("max x-part {xpart:e}"));
    rep.check("lifted_spectrum", eig_err <= TOL_LIFT, format!("max eigenvalue error {eig_err:e}"));
    rep
}

fn c2_pullback() -> Report {
    let mut rep = Report::new();
    let (model, _, p) = problem("sn1d");
    let rho = model.input.rho();
    let (lo, hi) = (-30.0 / rho, 30.0 / rho);
    for r in [0.1, 1.0] {
        // the seeded run, continued past handover in the future limit system
        let run = p.run(r).unwrap();
        let path: Vec<&(f64, Vec<f64>)> = run.path.iter().filter(|(t, _)| *t >= lo && *t <= hi).collect();
        let (t0, t1) = (run.path[0].0, run.path[run.path.len() - 1].0);
        let f = quad_rhs(3.0, r);
        let h = 1e-3 * r.min(1.0);
        // e⁻ far enough back that Λ(τ₀) = λ⁻ to round-off
        let mut x = rk4(&f, &[-1.0], lo - 40.0, lo, h, |_, _| true);
        let mut t = lo;
        // before the seed time the seeded solution sits at its seed
        let mut sup = (run.path[0].1[0] - x[0]).abs();
        for (tau, xm) in path {
            x = rk4(&f, &x, t, *tau, h, |_, _| true);
            t = *tau;
            sup = sup.max((xm[0] - x[0]).abs());
        }
        let covered = t1 >= hi;
        rep.check(
            if r < 0.5 { "r=0.1" } else { "r=1" },
            covered && sup <= TOL_PULLBACK,
            format!("sup {sup:.3e} on [{lo:.1}, {hi:.1}], seeded run covers [{t0:.1}, {t1:.1}]"),
        );
    }
    rep
}

fn c3_tracking() -> Report {
    let mut rep = Report::new();
    let rates = [0.1, 0.05, 0.025];
    for (name, part) in [("sn1d", "sn1d"), ("planar-excitable", "planar")] {
        let (model, setup, _) = problem(name);
        let mut sups = Vec::new();
        let mut close = true;
        for r in rates {
            let t = check_tracking(&model.frozen, &model.input, &setup.sink_branch, &setup.catalogue, r, DELTA_TRACK, &TrackingSource::FromEMinus, &setup.opts).unwrap();
            close &= t.delta_close && t.end_point;
            sups.push(t.sup_deviation);
        }
        let mono = sups.windows(2).all(|w| w[1] < w[0]);
        rep.check(part, close && mono, format!("sup {:?}", sups.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>()));
    }
    // oracle: distance of the deep-past solution to the moving sink −1 − Λ(τ)
    let mut sups = Vec::new();
    for r in rates {
        let mut sup: f64 = 0.0;
        rk4(&quad_rhs(3.0, r), &[-1.0], -80.0, 80.0, 1e-3, |t, x| {
            sup = sup.max((x[0] + 1.0 + ramp(3.0, t)).abs());
            true
        });
        sups.push(sup);
    }
    let ok = sups.iter().all(|s| *s < DELTA_TRACK) && sups.windows(2).all(|w| w[1] < w[0]);
    rep.check("sn1d_oracle", ok, format!("sup {:?}", sups.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>()));
    rep
}

fn c4_threshold_tracking() -> Report {
    let mut rep = Report::new();
    let (model, setup, p) = problem("sn1d");
    let taus = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let mut table: Vec<Vec<f64>> = Vec::new();
    for r in [0.1, 0.05, 0.025] {
        let cs = p.compactified(r).unwrap();
        let secs = threshold_sections(&cs, &setup.edges[0], 1e-6, &taus, 1, p.opts.ode).unwrap();
        let row: Vec<f64> = taus
            .iter()
            .zip(&secs)
            .map(|(tau, sec)| {
                // θ(Λ(τ)) = {1 − Λ(τ)}
                let theta = vec![vec![1.0 - model.input.value(*tau).unwrap()[0]]];
                if sec.is_empty() { f64::INFINITY } else { hausdorff_distance(sec, &theta).unwrap() }
            })
            .collect();
        table.push(row);
    }
    for (k, tau) in taus.iter().enumerate() {
        let col: Vec<f64> = table.iter().map(|row| row[k]).collect();
        let ok = col.iter().all(|v| v.is_finite()) && col.windows(2).all(|w| w[1] < w[0]);
        let part: &'static str = ["tau=-2", "tau=-1", "tau=0", "tau=1", "tau=2"][k];
        rep.check(part, ok, format!("τ = {tau}: {:?}", col.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>()));
    }
    rep
}

/// r where the deep-past solution's fate changes: a step-1e-2 pass over
/// [0.5, 10] locates the cell, then the step-1e-4 grid over that cell and
/// its neighbours gives the estimate (midpoint of the flipping step).
fn grid_rc<F, G>(rhs: G, sinks: &[Vec<f64>], x0: f64) -> Option<(f64, usize)>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
    G: Fn(f64) -> F,
{
    let end = |r: f64| fate(&rhs(r), &[x0], -60.0, 200.0, 0.01, sinks, 60.0);
    let coarse: Vec<f64> = (0..=950).map(|k| 0.5 + 0.01 * k as f64).collect();
    let mut prev = end(coarse[0]);
    let mut cell = None;
    for w in coarse.windows(2) {
        let e = end(w[1]);
        if e != prev {
            cell = Some(w[0]);
            break;
        }
        prev = e;
    }
    let a = cell? - 0.01;
    let m = (0.03 / GRID_STEP).round() as usize;
    let fine: Vec<(f64, End)> = (0..=m).map(|k| a + GRID_STEP * k as f64).map(|r| (r, end(r))).collect();
    let flips: Vec<f64> = fine.windows(2).filter(|w| w[0].1 != w[1].1).map(|w| 0.5 * (w[0].0 + w[1].0)).collect();
    (flips.len() == 1).then(|| (flips[0], fine.len()))
}

fn c5_critical_rate() -> Report {
    let mut rep = Report::new();
    // quadratic: exact connection at r = 4/(λmax − 2) = 4
    let sinks = vec![vec![-4.0]];
    let g = grid_rc(|r| quad_rhs(3.0, r), &sinks, -1.0);
    let c = classified("sn1d");
    let rc = c.report.critical.critical_rates();
    match g {
        Some((rg, n)) => {
            let ok = rc.len() == 1 && (rc[0] - rg).abs() <= TOL_RC && c.elapsed <= RC_BUDGET;
            rep.check(
                "sn1d",
                ok,
                format!("bisection {rc:?}, grid {rg:.5} ({n} fine points), exact 4, {:.1}s", c.elapsed.as_secs_f64()),
            );
            rep.check("sn1d_grid_vs_exact", (rg - 4.0).abs() <= GRID_STEP, format!("grid {rg:.6}"));
        }
        None => rep.check("sn1d", false, "oracle grid found no single flip".into()),
    }
    let sinks = vec![vec![-3.0], vec![-1.0]];
    let g = grid_rc(|r| cubic_rhs(2.0, r), &sinks, -1.0);
    let c = classified("cubic1d");
    let rc = c.report.critical.critical_rates();
    match g {
        Some((rg, n)) => {
            let ok = rc.len() == 1 && (rc[0] - rg).abs() <= TOL_RC && c.elapsed <= RC_BUDGET;
            rep.check("cubic1d", ok, format!("bisection {rc:?}, grid {rg:.5} ({n} fine points), {:.1}s", c.elapsed.as_secs_f64()));
        }
        None => rep.check("cubic1d", false, "oracle grid found no single flip".into()),
    }
    rep
}

/// Fates of η⁺ ± 1e-6 v_u under the future limit system, by RK4.
fn oracle_tails(name: &str, eta: &[f64]) -> (Vec<Vec<f64>>, [End; 2]) {
    let (f, sinks, v): (Box<dyn Fn(f64, &[f64]) -> Vec<f64>>, Vec<Vec<f64>>, Vec<f64>) = match name {
        "sn1d" => (Box::new(|_, x: &[f64]| vec![(x[0] + 3.0).powi(2) - 1.0]), vec![vec![-4.0]], vec![1.0]),
        "cubic1d" => (Box::new(|_, x: &[f64]| {
            let y = x[0] + 2.0;
            vec![y - y * y * y]
        }), vec![vec![-3.0], vec![-1.0]], vec![1.0]),
        _ => {
            let th = std::f64::consts::PI / 6.0;
            let sink = vec![th.cos() + 3.0 * CX, th.sin() + 3.0 * CY];
            // unstable direction from a finite-difference Jacobian
            let h = 1e-6;
            let mut j = [[0.0; 2]; 2];
            for c in 0..2 {
                let mut a = eta.to_vec();
                let mut b = eta.to_vec();
                a[c] += h;
                b[c] -= h;
                let (fa, fb) = (planar_frozen(3.0, &a), planar_frozen(3.0, &b));
                for r in 0..2 {
                    j[r][c] = (fa[r] - fb[r]) / (2.0 * h);
                }
            }
            let (tr, det) = (j[0][0] + j[1][1], j[0][0] * j[1][1] - j[0][1] * j[1][0]);
            let mu = 0.5 * tr + (0.25 * tr * tr - det).sqrt();
            let v = if j[0][1].abs() > 1e-12 { vec![j[0][1], mu - j[0][0]] } else { vec![mu - j[1][1], j[1][0]] };
            let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
            (Box::new(|_, x: &[f64]| planar_frozen(3.0, x)), vec![sink], vec![v[0] / n, v[1] / n])
        }
    };
    let tail = |sign: f64| {
        let x0: Vec<f64> = eta.iter().zip(&v).map(|(a, b)| a + sign * 1e-6 * b).collect();
        fate(&f, &x0, 0.0, 2000.0, 0.005, &sinks, 0.0)
    };
    (sinks.clone(), [tail(1.0), tail(-1.0)])
}

/// Engine outcome as a point (None for divergent or unresolved).
fn engine_sink(p: &TippingProblem, o: &Outcome) -> Option<Vec<f64>> {
    o.attractor().map(|i| p.catalogue.entries[i].record.x.clone())
}

fn oracle_sink(sinks: &[Vec<f64>], e: End) -> Option<Vec<f64>> {
    match e {
        End::Sink(k) => Some(sinks[k].clone()),
        _ => None,
    }
}

fn same_point(a: &Option<Vec<f64>>, b: &Option<Vec<f64>>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => dist(a, b) < 1e-2,
        (None, None) => true,
        _ => false,
    }
}

fn c6_classification() -> Report {
    let mut rep = Report::new();
    for (name, part, want) in [
        ("cubic1d", "cubic1d", "Irreversible"),
        ("planar-excitable", "planar", "Reversible"),
        ("sn1d", "sn1d", "Degenerate(divergent tail)"),
    ] {
        let c = classified(name);
        let cls = &c.report.classifications;
        if cls.len() != 1 || cls[0].eta.is_none() {
            rep.check(part, false, format!("{} classifications", cls.len()));
            continue;
        }
        let cl = &cls[0];
        let eta = cl.eta.as_ref().unwrap();
        let (sinks, ends) = oracle_tails(name, &eta.x);
        let oracle_verdict = if ends.iter().any(|e| *e == End::Divergent) {
            "Degenerate(divergent tail)"
        } else if ends[0] != ends[1] {
            "Irreversible"
        } else {
            "Reversible"
        };
        // engine tails against oracle tails, as unordered pairs
        let (a, b) = cl.tails.as_ref().unwrap();
        let (ea, eb) = (engine_sink(&c.problem, &a.run.outcome), engine_sink(&c.problem, &b.run.outcome));
        let (oa, ob) = (oracle_sink(&sinks, ends[0]), oracle_sink(&sinks, ends[1]));
        let tails_agree = (same_point(&ea, &oa) && same_point(&eb, &ob)) || (same_point(&ea, &ob) && same_point(&eb, &oa));
        let got = cl.verdict.label();
        rep.check(part, got == want && oracle_verdict == want && tails_agree, format!("engine {got}, oracle tails {ends:?} → {oracle_verdict}"));
    }
    rep
}

fn c7_correspondence() -> Report {
    let mut rep = Report::new();
    for (name, part) in [("sn1d", "sn1d"), ("cubic1d", "cubic1d"), ("planar-excitable", "planar")] {
        let c = classified(name);
        let mut ok = !c.report.classifications.is_empty();
        let mut note = String::new();
        for cl in &c.report.classifications {
            let Some(eta) = &cl.eta else {
                ok = false;
                continue;
            };
            let (sinks, ends) = oracle_tails(name, &eta.x);
            let (below, above) = (engine_sink(&c.problem, &cl.below_outcome), engine_sink(&c.problem, &cl.above_outcome));
            let (o0, o1) = (oracle_sink(&sinks, ends[0]), oracle_sink(&sinks, ends[1]));
            let matched = (same_point(&below, &o0) && same_point(&above, &o1)) || (same_point(&below, &o1) && same_point(&above, &o0));
            ok &= matched && cl.correspondence;
            note = format!("r_c − tol → {}, r_c + tol → {}, oracle tails {ends:?}", cl.below_outcome.label(), cl.above_outcome.label());
        }
        rep.check(part, ok, note);
    }
    rep
}

fn sn1d_scenario(lmax: f64, reversed: bool) -> Scenario {
    let mut s = builtin("sn1d").unwrap().with_constant("lmax", lmax).unwrap();
    if reversed {
        s.input.components[0] = ComponentDef::Tanh { minus: Num::from("lmax"), plus: Num::from(0.0), steepness: Num::from(1.0) };
        s.seeds.sink = vec![Num::from("-1 - lmax")];
        s.seeds.future_sinks = vec![vec![Num::from(-1.0)]];
        s.seeds.edges = vec![vec![Num::from(1.0)]];
    }
    s
}

fn c8_scans() -> Report {
    let mut rep = Report::new();
    let (model, _, _) = problem("sn1d");
    let f = &model.frozen;
    let m = 61;
    let e0 = find_equilibrium(f, &[0.0], &[-1.0]).unwrap();
    let h0 = find_equilibrium(f, &[0.0], &[1.0]).unwrap();
    let mut flip_ok = true;
    let mut closed_form: f64 = 0.0;
    let mut seen = Vec::new();
    for k in 0..=40 {
        let lmax = 1.0 + 0.05 * k as f64;
        let path = ParameterPath::segment(&[0.0], &[lmax]);
        let sb = continue_branch(f, &e0, &path, ContinuationOptions::default()).unwrap();
        let eb = continue_branch(f, &h0, &path, ContinuationOptions::default()).unwrap();
        let scan = scan_threshold_instability(f, &path, &sb, &eb, &ScanOptions { m, basin_check: false, ..ScanOptions::default() }).unwrap();
        for (i, a) in scan.axis.iter().enumerate() {
            for (j, b) in scan.axis.iter().enumerate() {
                // Δ = λ₂ − λ₁ − 2 with λ = u·λmax
                closed_form = closed_form.max((scan.values[i][j] - (lmax * (b - a) - 2.0)).abs());
            }
        }
        let resolution = lmax / (m - 1) as f64;
        if (lmax - 2.0).abs() > resolution {
            flip_ok &= scan.unstable == (lmax > 2.0);
        }
        seen.push((lmax, scan.unstable));
    }
    let first = seen.iter().find(|(_, u)| *u).map(|(l, _)| *l);
    rep.check("flip_at_2", flip_ok, format!("first unstable λmax on the 0.05 grid: {first:?}"));
    rep.check("closed_form", closed_form <= 1e-9, format!("max |Δ − (λ₂ − λ₁ − 2)| = {closed_form:e}"));
    for (reversed, part, want) in [(false, "increasing_ramp", true), (true, "time_reversed", false)] {
        let s = sn1d_scenario(3.0, reversed);
        let (model, setup) = load(&s).unwrap();
        let edge = setup.edge_branches[0].as_ref().unwrap();
        let scan = scan_forward_threshold_instability(&model.frozen, &model.input, &setup.sink_branch, edge, (-4.0, 4.0), &ScanOptions::default()).unwrap();
        rep.check(part, scan.unstable == want, format!("forward_threshold_unstable = {}", scan.unstable));
    }
    rep
}

fn c9_construction() -> Report {
    let mut rep = Report::new();
    let (model, setup, p) = problem("sn1d");
    let edge = setup.edge_branches[0].as_ref().unwrap();
    let scan = scan_forward_threshold_instability(&model.frozen, &model.input, &setup.sink_branch, edge, (-4.0, 4.0), &ScanOptions::default()).unwrap();
    let pair = scan.pairs.iter().copied().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    let ci = construct_tipping_input(&p, &setup.sink_branch, edge, 0, pair, &ConstructOptions { r_star: 1.0, ..ConstructOptions::default() }).unwrap();
    let (o_plus, o_minus) = ci.perturbed_outcomes();
    rep.check("perturbations_split", !o_plus.same_attractor(&o_minus), format!("{} / {}", o_plus.label(), o_minus.label()));
    // oracle run under Λ̃; the warped input settles at rate ε, so start far back
    let input = ci.input.clone();
    let f = move |t: f64, x: &[f64]| {
        let y = x[0] + input.value(t).unwrap()[0];
        vec![y * y - 1.0]
    };
    let t0 = -60.0 / ci.eps - 60.0;
    let (mut to_eta, mut to_edge) = (f64::INFINITY, f64::INFINITY);
    rk4(&f, &[-1.0], t0, 200.0 / ci.eps, 0.005, |t, x| {
        if x[0].abs() > 1e3 {
            return false;
        }
        to_eta = to_eta.min((x[0] + 2.0).abs());
        to_edge = to_edge.min((x[0] - (1.0 - ci.input.value(t).unwrap()[0])).abs());
        true
    });
    rep.check(
        "eta_plus_distance",
        to_eta <= TOL_ETA,
        format!("min |x − η⁺| = {to_eta:.3e}; engine run {:.3e} to the moving edge, oracle {to_edge:.3e}; ε = {}", ci.eta_min_distance, ci.eps),
    );
    rep
}

fn c10_sigma() -> Report {
    let mut rep = Report::new();
    let mut rng = StdRng::seed_from_u64(10);
    let (mut ends, mut slope, mut tails): (f64, f64, f64) = (0.0, f64::INFINITY, 0.0);
    for _ in 0..100 {
        let ta: f64 = rng.gen_range(-10.0..10.0);
        let gap: f64 = rng.gen_range(0.01..20.0);
        let eps = rng.gen_range(0.01..0.99) * gap.sqrt();
        let tb = ta + gap;
        let s = SigmaReparam::new(ta, tb, eps).unwrap();
        ends = ends.max((s.eval(0.0) - ta).abs()).max((s.eval(eps) - tb).abs());
        let (lo, hi) = (-5.0 * eps - 1.0, 6.0 * eps + 1.0);
        for k in 0..10_000 {
            let t = lo + (hi - lo) * k as f64 / 9_999.0;
            slope = slope.min(s.derivative(t));
            if t <= 0.0 {
                tails = tails.max((s.eval(t) - (ta + eps * t)).abs()).max((s.derivative(t) - eps).abs());
            } else if t >= eps {
                tails = tails.max((s.eval(t) - (tb + eps * (t - eps))).abs()).max((s.derivative(t) - eps).abs());
            }
        }
    }
    rep.check("endpoints", ends <= TOL_SIGMA, format!("max endpoint error {ends:e}"));
    rep.check("monotone", slope > 0.0, format!("min σ' = {slope:e}"));
    rep.check("linear_tails", tails <= 1e-12 * 40.0, format!("max tail deviation {tails:e}"));
    rep
}

fn c11_kernels() -> Report {
    let mut rep = Report::new();
    let mut rng = StdRng::seed_from_u64(11);
    // AD against central differences
    let exprs = [
        "x1*sin(x2) + exp(-x1^2)",
        "tanh(x1 - 2*x2)^3 + sech(x2)",
        "(x1 + x2)^2 - 1",
        "ln(2 + cos(x1*x2)) / (1 + x2^2)",
        "sqrt(1 + x1^2) * tan(0.5*x2) + abs(x1 - 3)",
        "(x1 - x1^3) + 0.5*x2",
    ];
    let mut ad: f64 = 0.0;
    for src in exprs {
        let e = Expr::parse(src, &["x1", "x2"]).unwrap();
        for _ in 0..200 {
            let p = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let d = e.eval_dual(&p).unwrap();
            for i in 0..2 {
                let h = 1e-6;
                let (mut a, mut b) = (p, p);
                a[i] += h;
                b[i] -= h;
                let fd = (e.eval(&a).unwrap() - e.eval(&b).unwrap()) / (2.0 * h);
                ad = ad.max((d.partials[i] - fd).abs() / (1.0 + fd.abs()));
            }
        }
    }
    rep.check("ad_vs_fd", ad <= 1e-6, format!("max relative gap {ad:e}"));

    // integrator order on ẋ = −x, literally: halve the tolerance
    let endpoint_error = |o: OdeOptions| {
        let tr = integrate(
            |_t, x, dx| {
                dx[0] = -x[0];
                Ok(())
            },
            &[1.0],
            0.0,
            1.0,
            o,
            &mut [],
        )
        .unwrap();
        (tr.x_end()[0] - (-1.0f64).exp()).abs()
    };
    let tol = 1e-8;
    let ratio = endpoint_error(OdeOptions::with_tol(tol, tol)) / endpoint_error(OdeOptions::with_tol(0.5 * tol, 0.5 * tol));
    rep.check("order_tolerance_halving", ratio >= ORDER_RATIO, format!("error ratio {ratio:.2} at tol {tol:e}"));
    let fixed = |h: f64| endpoint_error(OdeOptions { fixed_step: Some(h), ..OdeOptions::default() });
    let fr = fixed(0.1) / fixed(0.05);
    rep.check("order_fixed_step_halving", fr >= ORDER_RATIO, format!("error ratio {fr:.1}"));

    // eigen trace / determinant
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.gen_range(1..=6);
        let a = Matrix::from_fn(n, n, |_, _| rng.gen_range(-5.0..5.0));
        let ev = eigen(&a).unwrap();
        let tr: f64 = ev.values.iter().map(|v| v.re).sum();
        let (mut pr, mut pi) = (1.0, 0.0);
        for v in &ev.values {
            (pr, pi) = (pr * v.re - pi * v.im, pr * v.im + pi * v.re);
        }
        let scale = a.norm_fro().max(1.0);
        worst = worst.max((tr - a.trace()).abs() / scale).max((pr - a.determinant()).abs() / scale.powi(n as i32)).max(pi.abs() / scale.powi(n as i32));
    }
    rep.check("eigen_trace_det", worst <= 1e-9, format!("max scaled gap {worst:e}"));

    // Hausdorff axioms
    let set = |rng: &mut StdRng| -> Vec<Vec<f64>> { (0..rng.gen_range(1..8)).map(|_| vec![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]).collect() };
    let mut ok = true;
    for _ in 0..200 {
        let (a, b, c) = (set(&mut rng), set(&mut rng), set(&mut rng));
        let d = |x: &Vec<Vec<f64>>, y: &Vec<Vec<f64>>| hausdorff_distance(x, y).unwrap();
        ok &= d(&a, &a) == 0.0 && d(&a, &b) >= 0.0 && d(&a, &b) == d(&b, &a) && d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12;
    }
    rep.check("hausdorff_axioms", ok, "identity, symmetry, triangle on 200 triples".into());
    rep
}

fn run_cli(args: &[&str], out: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_ratekit")).args(args).arg("--out").arg(out).output().expect("ratekit runs").status.code().unwrap_or(-1)
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .map(|rd| rd.filter_map(|e| e.ok()).map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())).collect())
        .unwrap_or_default()
}

fn c12_determinism() -> Report {
    let mut rep = Report::new();
    let tmp = tempfile::tempdir().unwrap();
    for name in ratekit::builtins::names() {
        let s = builtin(name).unwrap();
        let cmd = s.analysis.map_or("validate", |a| a.name());
        let target = format!("builtin:{name}");
        let (a, b) = (tmp.path().join(format!("{name}-a")), tmp.path().join(format!("{name}-b")));
        let codes = (run_cli(&[cmd, &target], &a), run_cli(&[cmd, &target], &b));
        let (fa, fb) = (files(&a), files(&b));
        let part: &'static str = Box::leak(name.to_string().into_boxed_str());
        rep.check(part, codes == (0, 0) && !fa.is_empty() && fa == fb, format!("{cmd}: exit {codes:?}, {} files", fa.len()));
    }
    // the diagram must not depend on the thread count either
    let (a, b) = (tmp.path().join("diagram-1"), tmp.path().join("diagram-4"));
    let codes = (run_cli(&["diagram", "builtin:sn1d", "--jobs", "1"], &a), run_cli(&["diagram", "builtin:sn1d", "--jobs", "4"], &b));
    let (fa, fb) = (files(&a), files(&b));
    rep.check("diagram_jobs", codes == (0, 0) && !fa.is_empty() && fa == fb, format!("exit {codes:?}, {} files", fa.len()));
    rep
}

type Criterion = (u8, &'static str, fn() -> Report);

const CRITERIA: [Criterion; 12] = [
    (1, "compactification", c1_compactification),
    (2, "pullback attractor", c2_pullback),
    (3, "δ-close tracking", c3_tracking),
    (4, "threshold tracking", c4_threshold_tracking),
    (5, "critical rate vs dense grid", c5_critical_rate),
    (6, "classification", c6_classification),
    (7, "tail correspondence", c7_correspondence),
    (8, "threshold-instability scans", c8_scans),
    (9, "input construction", c9_construction),
    (10, "σ family", c10_sigma),
    (11, "kernel properties", c11_kernels),
    (12, "determinism", c12_determinism),
];

fn main() {
    // `cargo test -- NAME` style filters select criteria by number or name
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected = |id: u8, name: &str| filters.is_empty() || filters.iter().any(|f| f == "acceptance" || *f == id.to_string() || name.contains(f.as_str()));
    let mut unexpected = Vec::new();
    for (id, name, run) in CRITERIA {
        if !selected(id, name) {
            continue;
        }
        let t = Instant::now();
        // a panic counts as a failure of the whole criterion
        let rep = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default();
            let mut r = Report::new();
            r.check("panic", false, msg);
            r
        });
        let pass = rep.failed.is_empty();
        println!(
            "criterion {id:>2} {} {name} [{:.1}s]: {}",
            if pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            rep.notes.join("; ")
        );
        match KNOWN_RED.iter().find(|k| k.0 == id) {
            Some((_, part, why)) => {
                println!("             known red: {why}");
                if rep.failed != [*part] {
                    unexpected.push(format!("criterion {id}: expected exactly `{part}` to fail, got {:?}", rep.failed));
                }
            }
            None if !pass => unexpected.push(format!("criterion {id}: {:?} failed", rep.failed)),
            None => {}
        }
    }
    if !unexpected.is_empty() {
        for u in &unexpected {
            eprintln!("unexpected: {u}");
        }
        std::process::exit(1);
    }
}
