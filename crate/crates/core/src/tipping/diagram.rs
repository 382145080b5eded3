//! R-tipping diagrams: critical rates against a sweep parameter.

use alloc::string::String;
use alloc::format;
use alloc::vec::Vec;

use super::critical::{classify_tipping, find_critical_rate, find_critical_rate_in, Verdict};
use super::TippingProblem;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagramRow {
    pub p: f64,
    pub r_c: Vec<f64>,
    pub verdicts: Vec<Verdict>,
    /// Set when the point failed; the sweep carries on.
    pub error: Option<String>,
    /// The bracket came from the neighbouring point rather than a coarse scan.
    pub warm_started: bool,
}

/// Factor around the neighbour's r_c tried first when warm starting.
pub const WARM_FACTOR: f64 = 1.5;

/// One point of the diagram. With `warm` (the neighbour's single critical
/// rate) the bracket [r/1.5, 1.5 r] is tried first; the full coarse scan is
/// the fallback when its ends show no outcome change.
pub fn diagram_point(problem: &TippingProblem, p: f64, r_range: (f64, f64), tol_r: f64, warm: Option<f64>) -> DiagramRow {
    let attempt = || -> Result<(Vec<f64>, Vec<Verdict>, bool)> {
        if let Some(r0) = warm {
            let (a, b) = ((r0 / WARM_FACTOR).max(r_range.0), (r0 * WARM_FACTOR).min(r_range.1));
            if b > a {
                let (oa, ob) = (problem.outcome(a)?, problem.outcome(b)?);
                if oa != ob {
                    let crit = find_critical_rate_in(problem, alloc::vec![(a, oa), (b, ob)], r_range, tol_r)?;
                    if crit.brackets.len() == 1 {
                        let rep = classify_tipping(problem, crit)?;
                        return Ok((rep.critical.critical_rates(), rep.classifications.iter().map(|c| c.verdict).collect(), true));
                    }
                }
            }
        }
        let crit = find_critical_rate(problem, r_range.0, r_range.1, tol_r)?;
        let rep = classify_tipping(problem, crit)?;
        let mut verdicts: Vec<Verdict> = rep.classifications.iter().map(|c| c.verdict).collect();
        if verdicts.is_empty() {
            verdicts.push(Verdict::NoTippingFound);
        }
        Ok((rep.critical.critical_rates(), verdicts, false))
    };
    match attempt() {
        Ok((r_c, verdicts, warm_started)) => DiagramRow { p, r_c, verdicts, error: None, warm_started },
        Err(e) => DiagramRow { p, r_c: Vec::new(), verdicts: Vec::new(), error: Some(format!("{e}")), warm_started: false },
    }
}

/// Sequential sweep; `build` makes the problem at each grid value. Each
/// point warm starts from its predecessor when that had one critical rate.
pub fn tipping_diagram<F>(grid: &[f64], mut build: F, r_range: (f64, f64), tol_r: f64) -> Vec<DiagramRow>
where
    F: FnMut(f64) -> Result<TippingProblem>,
{
    let mut rows: Vec<DiagramRow> = Vec::with_capacity(grid.len());
    for &p in grid {
        let warm = rows.last().and_then(|r| (r.r_c.len() == 1).then(|| r.r_c[0]));
        let row = match build(p) {
            Ok(problem) => diagram_point(&problem, p, r_range, tol_r, warm),
            Err(e) => DiagramRow { p, r_c: Vec::new(), verdicts: Vec::new(), error: Some(format!("{e}")), warm_started: false },
        };
        rows.push(row);
    }
    rows
}
