//! The analyses behind each subcommand. Each writes its reports into the
//! output directory and returns the paths written.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use ratekit_core::equilibria::{Branch, EquilibriumRecord, HYPERBOLICITY_TOL};
use ratekit_core::manifolds::{Outcome, DEFAULT_T_MAX, DWELL_FACTOR, MAX_SEED_DELTA, MIN_SEED_DELTA};
use ratekit_core::numcore::ode::DEFAULT_BLOWUP;
use ratekit_core::systems::T_CHECK_FACTOR;
use ratekit_core::tipping::diagram::WARM_FACTOR;
use ratekit_core::tipping::{
    check_tracking, classify_tipping, construct_tipping_input, diagram_point, find_critical_rate, scan_forward_threshold_instability, Bracket,
    Classification, ConstructOptions, CriticalRateReport, DiagramRow, InstabilityScan, RateRun, ScanOptions, TippingProblem, TrackingSource,
    CONNECT_TOL, IDENTICAL_TAILS_TOL, PATH_SPACING, S_HAND,
};
use serde_json::{json, Value};

use crate::model::{load, Model, Setup};
use crate::output::{nums, num, opt_num, to_value, Cell, Csv, OutDir};
use crate::scenario::Scenario;
use crate::svg::{heat_map, LinePlot, Series};
use crate::{diag, CliError};

/// Grid points per diagram work unit. Fixed, so the warm-start chain (and
/// therefore the output) does not depend on the thread count.
pub const DIAGRAM_CHUNK: usize = 4;

pub struct Run<'a> {
    pub scenario: &'a Scenario,
    pub out: &'a Path,
    pub expect_tipping: bool,
}

fn engine() -> Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "ode_solver": "Dormand-Prince 5(4), adaptive",
        "s_hand": num(S_HAND),
        "path_spacing": num(PATH_SPACING),
        "identical_tails_tol": num(IDENTICAL_TAILS_TOL),
        "connect_tol": num(CONNECT_TOL),
        "hyperbolicity_tol": num(HYPERBOLICITY_TOL),
        "omega_t_max": num(DEFAULT_T_MAX),
        "dwell_factor": num(DWELL_FACTOR),
        "blowup_norm": num(DEFAULT_BLOWUP),
        "seed_delta_window": [num(MIN_SEED_DELTA), num(MAX_SEED_DELTA)],
        "input_check_factor": num(T_CHECK_FACTOR),
        "diagram_warm_factor": num(WARM_FACTOR),
        "diagram_chunk": DIAGRAM_CHUNK,
    })
}

/// Caveats that hold for every run.
pub const ASSUMPTIONS: [&str; 2] = [
    "f is taken to be C1 in (x, lambda); smoothness is only checked at sampled points",
    "limits and decay of the input are verified numerically at T = 40/rho, not proven",
];

/// Resolved configuration embedded in every report.
pub fn config(command: &str, s: &Scenario) -> Value {
    json!({ "command": command, "scenario": to_value(s), "engine": engine(), "assumptions": ASSUMPTIONS })
}

fn outcome(o: &Outcome) -> Value {
    json!(o.label())
}

fn record(e: &EquilibriumRecord) -> Value {
    json!({
        "x": nums(&e.x),
        "lambda": nums(&e.lambda),
        "class": e.class.label(),
        "eigenvalues": e.eigen.values.iter().map(|v| json!([num(v.re), num(v.im)])).collect::<Vec<_>>(),
        "residual": num(e.residual),
    })
}

fn branch(b: &Branch) -> Value {
    let iv = b.interval();
    json!({
        "points": b.len(),
        "start": b.start.label(),
        "end": b.end.label(),
        "class": b.class.label(),
        "tau_interval": iv.map(|(a, c)| json!([num(a), num(c)])),
        "reaches_past": b.past_limit().is_some(),
        "reaches_future": b.future_limit().is_some(),
    })
}

fn setup_summary(model: &Model, setup: &Setup) -> Value {
    json!({
        "input_check": {
            "t_check": num(model.input_check.t_check),
            "limit_error": num(model.input_check.limit_error),
            "decay_ratio": num(model.input_check.decay_ratio),
        },
        "lambda_minus": nums(&model.input.past_limit()),
        "lambda_plus": nums(&model.input.future_limit()),
        "e_minus": record(&setup.e_minus),
        "sink_branch": branch(&setup.sink_branch),
        "catalogue": setup.catalogue.entries.iter().map(|c| json!({
            "sink": record(&c.record),
            "capture_radius": num(c.capture_radius),
            "dwell": num(c.dwell),
            "side_vector": c.side_vector.as_deref().map(nums),
        })).collect::<Vec<_>>(),
        "edges": setup.edges.iter().zip(&setup.edge_branches).map(|(e, b)| json!({
            "edge": record(e),
            "branch": b.as_ref().map(branch),
        })).collect::<Vec<_>>(),
    })
}

fn rate_run(run: &RateRun) -> Value {
    json!({
        "r": num(run.r),
        "alpha": num(run.alpha),
        "outcome": outcome(&run.outcome),
        "t_hand": num(run.t_hand),
        "x_hand": run.x_hand.as_deref().map(nums),
        "edge_min": nums(&run.edge_min),
        "edge_min_late": nums(&run.edge_min_late),
        "edge_dwell": nums(&run.edge_dwell),
        "capture_exits": run.omega.as_ref().map_or(0, |o| o.capture_exits),
    })
}

fn bracket(b: &Bracket) -> Value {
    json!({
        "r_c": num(b.r_c),
        "lo": { "r": num(b.lo.0), "outcome": outcome(&b.lo.1) },
        "hi": { "r": num(b.hi.0), "outcome": outcome(&b.hi.1) },
        "eta_index": b.eta_index,
        "eta_min_distance": opt_num(b.eta_min_distance),
        "bisection_steps": b.bisection_steps,
        "below": rate_run(&b.below),
        "above": rate_run(&b.above),
        "mid": rate_run(&b.mid),
    })
}

fn critical(c: &CriticalRateReport) -> Value {
    json!({
        "r_range": [num(c.r_range.0), num(c.r_range.1)],
        "tol_r": num(c.tol_r),
        "critical_rates": nums(&c.critical_rates()),
        "brackets": c.brackets.iter().map(bracket).collect::<Vec<_>>(),
        "discarded": c.discarded.iter().map(|(a, b)| json!([num(*a), num(*b)])).collect::<Vec<_>>(),
        "coarse": c.coarse.iter().map(|(r, o)| json!({ "r": num(*r), "outcome": outcome(o) })).collect::<Vec<_>>(),
    })
}

fn classification(c: &Classification) -> Value {
    json!({
        "r_c": num(c.r_c),
        "verdict": c.verdict.label(),
        "eta": c.eta.as_ref().map(record),
        "upper_branch": c.upper_branch,
        "lower_branch": c.lower_branch,
        "below_outcome": outcome(&c.below_outcome),
        "above_outcome": outcome(&c.above_outcome),
        "tail_distance": opt_num(c.tail_distance),
        "correspondence": c.correspondence,
        "tails": c.tails.as_ref().map(|(a, b)| [a, b].iter().map(|t| json!({
            "branch": t.branch,
            "outcome": outcome(&t.run.outcome),
            "t_final": num(t.run.t_final),
            "x_final": nums(&t.run.x_final),
            "capture_exits": t.run.capture_exits,
        })).collect::<Vec<_>>()),
    })
}

fn coarse_csv(c: &CriticalRateReport) -> Csv {
    let mut csv = Csv::new(&["r", "outcome", "attractor"]);
    for (r, o) in &c.coarse {
        csv.row(vec![(*r).into(), o.label().into(), o.attractor().map_or(-1, |i| i as i64).into()]);
    }
    csv
}

fn coarse_svg(title: &str, c: &CriticalRateReport) -> String {
    let code = |o: &Outcome| match o {
        Outcome::Attractor { index, side } => *index as f64 + 0.25 * *side as f64,
        Outcome::Divergent => -1.0,
        Outcome::Unresolved { .. } => -2.0,
    };
    let mut series = vec![Series { name: "outcome".into(), points: c.coarse.iter().map(|(r, o)| (*r, code(o))).collect(), scatter: true }];
    for (k, b) in c.brackets.iter().enumerate() {
        series.push(Series { name: format!("r_c #{k}"), points: vec![(b.r_c, -2.0), (b.r_c, c.coarse.iter().map(|(_, o)| code(o)).fold(0.0, f64::max))], scatter: false });
    }
    LinePlot { title: title.into(), xlabel: "rate r".into(), ylabel: "sink index (±0.25 side); -1 divergent".into(), log_x: true, series }.render()
}

fn require_edge(setup: &Setup) -> Result<&Branch, CliError> {
    match setup.edge_branches.first() {
        Some(Some(b)) => Ok(b),
        Some(None) => Err(CliError::Numerical("the moving edge state could not be continued back from η⁺".into())),
        None => Err(CliError::Validation("this analysis needs an edge seed".into())),
    }
}

fn fixed_rate(s: &Scenario, what: &str) -> Result<f64, CliError> {
    s.rates.r.ok_or_else(|| CliError::Validation(format!("{what} needs rates.r")))
}

pub fn validate(s: &Scenario) -> Result<Value, CliError> {
    let (model, setup) = load(s)?;
    if !setup.catalogue.is_empty() {
        setup.problem(&model)?;
    }
    Ok(json!({ "config": config("validate", s), "setup": setup_summary(&model, &setup) }))
}

pub fn track(run: &Run) -> Result<Vec<PathBuf>, CliError> {
    let s = run.scenario;
    let (model, setup) = load(s)?;
    let r = fixed_rate(s, "track")?;
    let rep = check_tracking(&model.frozen, &model.input, &setup.sink_branch, &setup.catalogue, r, s.numerics.delta, &TrackingSource::FromEMinus, &setup.opts)?;
    let n = model.frozen.n();
    let mut out = OutDir::new(run.out)?;
    out.json(
        "tracking_report.json",
        &json!({
            "config": config("track", s),
            "setup": setup_summary(&model, &setup),
            "r": num(r),
            "delta": num(rep.delta),
            "interval": [num(rep.interval.0), num(rep.interval.1)],
            "reaches_future": rep.reaches_future,
            "sup_deviation": num(rep.sup_deviation),
            "delta_close": rep.delta_close,
            "end_point": rep.end_point,
            "end_outcome": outcome(&rep.end_outcome),
            "samples": rep.samples.len(),
        }),
    )?;
    let mut header = vec!["tau".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend((1..=n).map(|i| format!("e{i}")));
    header.push("distance".into());
    let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&hdr);
    for p in &rep.samples {
        let mut row: Vec<Cell> = vec![p.tau.into()];
        row.extend(p.x.iter().map(|v| Cell::F(*v)));
        row.extend(p.e.iter().map(|v| Cell::F(*v)));
        row.push(p.distance.into());
        csv.row(row);
    }
    out.csv("tracking.csv", &csv)?;
    let plot = LinePlot {
        title: format!("{}: tracking at r = {r}", s.name),
        xlabel: "τ".into(),
        ylabel: "x1".into(),
        log_x: false,
        series: vec![
            Series { name: "solution x1".into(), points: rep.samples.iter().map(|p| (p.tau, p.x[0])).collect(), scatter: false },
            Series { name: "moving sink e1".into(), points: rep.samples.iter().map(|p| (p.tau, p.e[0])).collect(), scatter: false },
        ],
    };
    out.svg("tracking.svg", &plot.render())?;
    diag::info("tracking", json!({ "sup_deviation": num(rep.sup_deviation), "delta_close": rep.delta_close, "end_point": rep.end_point }));
    Ok(out.written)
}

fn scan_options(model: &Model) -> Result<ScanOptions, CliError> {
    let s = &model.scenario;
    let extra = s.seeds.future_sinks.iter().map(|g| g.iter().map(|v| v.eval(model.constants())).collect()).collect::<Result<Vec<Vec<f64>>, _>>()?;
    Ok(ScanOptions { m: s.numerics.scan.m, orientation: s.numerics.scan.orientation, extra_sink_seeds: extra, ..ScanOptions::default() })
}

fn run_scan(model: &Model, setup: &Setup) -> Result<InstabilityScan, CliError> {
    let sc = &model.scenario.numerics.scan;
    let edge = require_edge(setup)?;
    Ok(scan_forward_threshold_instability(&model.frozen, &model.input, &setup.sink_branch, edge, (sc.tau_lo, sc.tau_hi), &scan_options(model)?)?)
}

fn scan_json(scan: &InstabilityScan) -> Value {
    json!({
        "forward": scan.forward,
        "axis": [num(scan.axis[0]), num(scan.axis[scan.axis.len() - 1])],
        "m": scan.axis.len(),
        "pairs": scan.pairs.iter().map(|(a, b)| json!([num(*a), num(*b)])).collect::<Vec<_>>(),
        "unstable": scan.unstable,
        "basin_unstable": scan.basin_unstable,
        "finite_range": scan.finite_range().map(|(a, b)| json!([num(a), num(b)])),
    })
}

pub fn scan(run: &Run) -> Result<Vec<PathBuf>, CliError> {
    let s = run.scenario;
    let (model, setup) = load(s)?;
    let scan = run_scan(&model, &setup)?;
    let mut out = OutDir::new(run.out)?;
    let mut csv = Csv::new(&["tau1", "tau2", "delta"]);
    for (i, a) in scan.axis.iter().enumerate() {
        for (j, b) in scan.axis.iter().enumerate() {
            csv.row(vec![(*a).into(), (*b).into(), scan.values[i][j].into()]);
        }
    }
    out.csv("instability_scan.csv", &csv)?;
    out.svg("scan.svg", &heat_map(&format!("{}: threshold instability", s.name), "τ1 (sink)", "τ2 (threshold)", &scan.axis, &scan.values, &scan.pairs))?;
    out.json("scan_report.json", &json!({ "config": config("scan", s), "scan": scan_json(&scan) }))?;
    diag::info("scan", json!({ "pairs": scan.pairs.len(), "unstable": scan.unstable }));
    Ok(out.written)
}

fn no_tipping(run: &Run, crit: &CriticalRateReport) -> Result<(), CliError> {
    if run.expect_tipping && crit.brackets.is_empty() {
        return Err(CliError::NoTipping(format!("no critical rate in [{}, {}]", crit.r_range.0, crit.r_range.1)));
    }
    Ok(())
}

fn search(s: &Scenario) -> Result<(Model, Setup, TippingProblem, CriticalRateReport), CliError> {
    let (model, setup) = load(s)?;
    let problem = setup.problem(&model)?;
    let crit = find_critical_rate(&problem, s.rates.r_lo, s.rates.r_hi, s.rates.tol_r)?;
    for b in &crit.brackets {
        diag::info("critical_rate", json!({ "r_c": num(b.r_c), "below": outcome(&b.lo.1), "above": outcome(&b.hi.1) }));
    }
    Ok((model, setup, problem, crit))
}

pub fn find_rc(run: &Run) -> Result<Vec<PathBuf>, CliError> {
    let s = run.scenario;
    let (model, setup, _, crit) = search(s)?;
    let mut out = OutDir::new(run.out)?;
    out.json("tipping_report.json", &json!({ "config": config("find-rc", s), "setup": setup_summary(&model, &setup), "critical": critical(&crit) }))?;
    out.csv("rate_outcomes.csv", &coarse_csv(&crit))?;
    out.svg("rate_outcomes.svg", &coarse_svg(&format!("{}: outcome against rate", s.name), &crit))?;
    no_tipping(run, &crit)?;
    Ok(out.written)
}

pub fn classify(run: &Run) -> Result<Vec<PathBuf>, CliError> {
    let s = run.scenario;
    let (model, setup, problem, crit) = search(s)?;
    let no_tip = no_tipping(run, &crit);
    let rep = classify_tipping(&problem, crit)?;
    let mut out = OutDir::new(run.out)?;
    out.json(
        "tipping_report.json",
        &json!({
            "config": config("classify", s),
            "setup": setup_summary(&model, &setup),
            "critical": critical(&rep.critical),
            "classifications": rep.classifications.iter().map(classification).collect::<Vec<_>>(),
            "verdict": rep.verdict.label(),
        }),
    )?;
    let n = model.frozen.n();
    let mut header = vec!["r_c_index".to_string(), "branch".into(), "t".into()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&hdr);
    for (k, c) in rep.classifications.iter().enumerate() {
        if let Some((a, b)) = &c.tails {
            for t in [a, b] {
                for (time, p) in t.sample.times.iter().zip(&t.sample.points) {
                    let mut row: Vec<Cell> = vec![k.into(), (t.branch as i64).into(), (*time).into()];
                    row.extend(p.iter().map(|v| Cell::F(*v)));
                    csv.row(row);
                }
            }
        }
    }
    out.csv("edge_tails.csv", &csv)?;
    out.csv("rate_outcomes.csv", &coarse_csv(&rep.critical))?;
    out.svg("rate_outcomes.svg", &coarse_svg(&format!("{}: outcome against rate", s.name), &rep.critical))?;
    diag::info("verdict", json!({ "verdict": rep.verdict.label() }));
    no_tip?;
    Ok(out.written)
}

pub fn construct_input(run: &Run) -> Result<Vec<PathBuf>, CliError> {
    let s = run.scenario;
    let (model, setup) = load(s)?;
    let problem = setup.problem(&model)?;
    let scan = run_scan(&model, &setup)?;
    // the pair with the latest τ_b: the threshold has settled most there
    let pair = match scan.pairs.iter().copied().max_by(|a, b| a.1.total_cmp(&b.1)) {
        Some(p) => p,
        None => return Err(CliError::NoTipping("the scan found no threshold instability, so there is nothing to construct from".into())),
    };
    let c = &s.numerics.construct;
    let opts = ConstructOptions {
        r_star: s.rates.r.unwrap_or(1.0),
        half_width: c.half_width,
        grid: c.grid,
        delta_target: c.delta_target,
        eps_start: c.eps_start,
        eps_floor: c.eps_floor,
        ..ConstructOptions::default()
    };
    let edge = require_edge(&setup)?;
    let ci = construct_tipping_input(&problem, &setup.sink_branch, edge, 0, pair, &opts)?;
    let (op, om) = ci.perturbed_outcomes();
    let mut out = OutDir::new(run.out)?;
    out.json(
        "construct_report.json",
        &json!({
            "config": config("construct-input", s),
            "scan": scan_json(&scan),
            "pair": [num(pair.0), num(pair.1)],
            "r_star": num(opts.r_star),
            "tau_alpha": num(ci.tau_alpha),
            "tau_beta": num(ci.tau_beta),
            "eps": num(ci.eps),
            "delta_target": num(ci.delta_target),
            "delta_range": [num(ci.delta_range.0), num(ci.delta_range.1)],
            "pair_plus": [num(ci.pair_plus.0), num(ci.pair_plus.1)],
            "pair_minus": [num(ci.pair_minus.0), num(ci.pair_minus.1)],
            "d_s": num(ci.d_s),
            "eta_min_distance": num(ci.eta_min_distance),
            "outcome": outcome(&ci.run.outcome),
            "perturbed_outcomes": [outcome(&op), outcome(&om)],
            "eps_history": ci.eps_history.iter().map(|b| json!({
                "eps": num(b.eps),
                "pullback": num(b.pullback),
                "threshold": num(b.threshold),
                "continuity": num(b.continuity),
                "hold": b.hold(ci.delta_target),
            })).collect::<Vec<_>>(),
            "trace": ci.trace.iter().map(|t| json!({
                "theta": num(t.theta), "tau_alpha": num(t.tau_alpha), "tau_beta": num(t.tau_beta), "d_s": num(t.d_s),
            })).collect::<Vec<_>>(),
            "classification": classification(&ci.classification),
        }),
    )?;
    let d = model.frozen.d();
    let mut header = vec!["tau".to_string()];
    header.extend((1..=d).map(|i| format!("lambda{i}")));
    header.extend((1..=d).map(|i| format!("lambda{i}_constructed")));
    let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&hdr);
    let (lo, hi) = (s.numerics.scan.tau_lo.min(ci.tau_alpha) - 4.0, s.numerics.scan.tau_hi.max(ci.tau_beta) + 4.0);
    let m = 801;
    let mut orig = Vec::with_capacity(m);
    let mut warped = Vec::with_capacity(m);
    for k in 0..m {
        let tau = lo + (hi - lo) * k as f64 / (m - 1) as f64;
        let a = model.input.value(tau)?;
        let b = ci.input.value(tau)?;
        orig.push((tau, a[0]));
        warped.push((tau, b[0]));
        let mut row: Vec<Cell> = vec![tau.into()];
        row.extend(a.iter().chain(&b).map(|v| Cell::F(*v)));
        csv.row(row);
    }
    out.csv("constructed_input.csv", &csv)?;
    let plot = LinePlot {
        title: format!("{}: constructed input at r* = {}", s.name, opts.r_star),
        xlabel: "τ".into(),
        ylabel: "λ1".into(),
        log_x: false,
        series: vec![
            Series { name: "Λ".into(), points: orig, scatter: false },
            Series { name: "Λ∘σ".into(), points: warped, scatter: false },
        ],
    };
    out.svg("constructed_input.svg", &plot.render())?;
    diag::info("constructed", json!({ "eps": num(ci.eps), "d_s": num(ci.d_s), "outcome": outcome(&ci.run.outcome) }));
    Ok(out.written)
}

fn diagram_chunk(s: &Scenario, parameter: &str, grid: &[f64]) -> Vec<DiagramRow> {
    let mut rows: Vec<DiagramRow> = Vec::with_capacity(grid.len());
    for &p in grid {
        let warm = rows.last().and_then(|r| (r.r_c.len() == 1).then(|| r.r_c[0]));
        let built = s.with_constant(parameter, p).and_then(|sp| {
            let (model, setup) = load(&sp)?;
            setup.problem(&model)
        });
        let row = match built {
            Ok(problem) => diagram_point(&problem, p, (s.rates.r_lo, s.rates.r_hi), s.rates.tol_r, warm),
            Err(e) => DiagramRow { p, r_c: Vec::new(), verdicts: Vec::new(), error: Some(e.to_string()), warm_started: false },
        };
        if let Some(e) = &row.error {
            diag::warn("diagram_point_failed", json!({ "p": num(p), "message": e }));
        }
        rows.push(row);
    }
    rows
}

pub fn diagram(run: &Run, jobs: Option<usize>) -> Result<Vec<PathBuf>, CliError> {
    let s = run.scenario;
    let sweep = s.sweep.as_ref().ok_or_else(|| CliError::Validation("diagram needs a sweep".into()))?;
    // fail early on a malformed scenario rather than once per grid point
    Model::build(s)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Numerical(format!("thread pool: {e}")))?;
    let rows: Vec<DiagramRow> =
        pool.install(|| sweep.grid.par_chunks(DIAGRAM_CHUNK).map(|chunk| diagram_chunk(s, &sweep.parameter, chunk)).collect::<Vec<_>>().concat());
    let mut out = OutDir::new(run.out)?;
    let mut csv = Csv::new(&[&sweep.parameter, "k", "r_c", "verdict", "warm_started", "error"]);
    let mut pts = Vec::new();
    for row in &rows {
        if row.r_c.is_empty() {
            let v = row.verdicts.first().map_or(String::new(), |v| v.label());
            csv.row(vec![row.p.into(), (-1i64).into(), f64::NAN.into(), v.into(), (row.warm_started as i64).into(), row.error.clone().unwrap_or_default().into()]);
        }
        for (k, r) in row.r_c.iter().enumerate() {
            let v = row.verdicts.get(k).map_or(String::new(), |v| v.label());
            csv.row(vec![row.p.into(), k.into(), (*r).into(), v.into(), (row.warm_started as i64).into(), "".into()]);
            pts.push((row.p, *r));
        }
    }
    out.csv("diagram.csv", &csv)?;
    let plot = LinePlot {
        title: format!("{}: critical rate against {}", s.name, sweep.parameter),
        xlabel: sweep.parameter.clone(),
        ylabel: "r_c".into(),
        log_x: false,
        series: vec![Series { name: "r_c".into(), points: pts, scatter: true }],
    };
    out.svg("diagram.svg", &plot.render())?;
    let any = rows.iter().any(|r| !r.r_c.is_empty());
    out.json(
        "diagram_report.json",
        &json!({
            "config": config("diagram", s),
            "rows": rows.iter().map(|r| json!({
                "p": num(r.p),
                "r_c": nums(&r.r_c),
                "verdicts": r.verdicts.iter().map(|v| v.label()).collect::<Vec<_>>(),
                "warm_started": r.warm_started,
                "error": r.error,
            })).collect::<Vec<_>>(),
        }),
    )?;
    if run.expect_tipping && !any {
        return Err(CliError::NoTipping("no critical rate at any sweep point".into()));
    }
    Ok(out.written)
}
