//! Scenario files: JSON with expression strings in the core DSL.

use std::collections::BTreeMap;

use ratekit_core::expr::Expr;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A number, or an expression over the scenario constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Num {
    Value(f64),
    Expr(String),
}

// Goes through `Value`: derived untagged enums cannot read numbers when
// serde_json keeps arbitrary precision.
impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::Number(n) => n.as_f64().map(Num::Value).ok_or_else(|| serde::de::Error::custom("number out of range")),
            serde_json::Value::String(s) => Ok(Num::Expr(s)),
            other => Err(serde::de::Error::custom(format!("expected a number or an expression string, got {other}"))),
        }
    }
}

impl From<f64> for Num {
    fn from(v: f64) -> Self {
        Num::Value(v)
    }
}

impl From<&str> for Num {
    fn from(s: &str) -> Self {
        Num::Expr(s.to_string())
    }
}

impl Num {
    pub fn eval(&self, constants: &BTreeMap<String, f64>) -> Result<f64, CliError> {
        match self {
            Num::Value(v) => Ok(*v),
            Num::Expr(src) => {
                let names: Vec<&str> = constants.keys().map(String::as_str).collect();
                let values: Vec<f64> = constants.values().copied().collect();
                let e = Expr::parse(src, &names).map_err(|e| CliError::Validation(format!("`{src}`: {e}")))?;
                e.eval(&values).map_err(|e| CliError::Validation(format!("`{src}`: {e}")))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDef {
    pub n: usize,
    pub d: usize,
    /// One expression per state component, in x1..xn and lam1..lamd.
    pub f: Vec<String>,
    #[serde(default)]
    pub constants: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ComponentDef {
    Tanh { minus: Num, plus: Num, steepness: Num },
    SechPulse { base: Num, amplitude: Num, width: Num },
    /// Expression in `tau` and the constants.
    User { expr: String, minus: Num, plus: Num },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDef {
    /// Declared exponential decay rate of Λ'.
    pub rho: f64,
    pub components: Vec<ComponentDef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    /// Guess for the sink e⁻ of the past limit system.
    pub sink: Vec<Num>,
    /// Guesses for the sinks of the future limit system. Empty means the
    /// future end of the moving sink, when it gets there.
    #[serde(default)]
    pub future_sinks: Vec<Vec<Num>>,
    /// Guesses for edge states of the future limit system.
    #[serde(default)]
    pub edges: Vec<Vec<Num>>,
}

fn default_r_lo() -> f64 {
    1e-2
}
fn default_r_hi() -> f64 {
    1e2
}
fn default_tol_r() -> f64 {
    1e-5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rates {
    /// Fixed rate for track and construct-input.
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default = "default_r_lo")]
    pub r_lo: f64,
    #[serde(default = "default_r_hi")]
    pub r_hi: f64,
    #[serde(default = "default_tol_r")]
    pub tol_r: f64,
}

impl Default for Rates {
    fn default() -> Self {
        Rates { r: None, r_lo: default_r_lo(), r_hi: default_r_hi(), tol_r: default_tol_r() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    /// Name of a constant of the system.
    pub parameter: String,
    pub grid: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    Track,
    Scan,
    FindRc,
    Classify,
    ConstructInput,
    Diagram,
}

impl Analysis {
    pub fn name(self) -> &'static str {
        match self {
            Analysis::Track => "track",
            Analysis::Scan => "scan",
            Analysis::FindRc => "find-rc",
            Analysis::Classify => "classify",
            Analysis::ConstructInput => "construct-input",
            Analysis::Diagram => "diagram",
        }
    }
}

fn default_rtol() -> f64 {
    ratekit_core::numcore::ode::DEFAULT_RTOL
}
fn default_atol() -> f64 {
    ratekit_core::numcore::ode::DEFAULT_ATOL
}
fn default_delta() -> f64 {
    0.1
}
fn default_capture() -> f64 {
    ratekit_core::manifolds::DEFAULT_CAPTURE_RADIUS
}
fn default_eta_capture() -> f64 {
    ratekit_core::tipping::ETA_CAPTURE
}
fn default_coarse() -> usize {
    ratekit_core::tipping::COARSE_POINTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanDef {
    pub tau_lo: f64,
    pub tau_hi: f64,
    pub m: usize,
    /// +1 or −1.
    pub orientation: f64,
}

impl Default for ScanDef {
    fn default() -> Self {
        ScanDef { tau_lo: -4.0, tau_hi: 4.0, m: 61, orientation: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructDef {
    pub half_width: f64,
    pub grid: usize,
    #[serde(default)]
    pub delta_target: Option<f64>,
    pub eps_start: f64,
    pub eps_floor: f64,
}

impl Default for ConstructDef {
    fn default() -> Self {
        let c = ratekit_core::tipping::ConstructOptions::default();
        ConstructDef { half_width: c.half_width, grid: c.grid, delta_target: c.delta_target, eps_start: c.eps_start, eps_floor: c.eps_floor }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    /// Compactification exponent; chosen per rate when absent.
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Pullback seed offset; 1e-6·(1 + ‖e⁻‖) when absent.
    #[serde(default)]
    pub seed_delta: Option<f64>,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
    /// δ of δ-close tracking.
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_capture")]
    pub capture_radius: f64,
    #[serde(default = "default_eta_capture")]
    pub eta_capture: f64,
    #[serde(default = "default_coarse")]
    pub coarse_points: usize,
    #[serde(default)]
    pub scan: ScanDef,
    #[serde(default)]
    pub construct: ConstructDef,
}

impl Default for Numerics {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all numerics fields have defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub system: SystemDef,
    pub input: InputDef,
    pub seeds: Seeds,
    #[serde(default)]
    pub rates: Rates,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    /// Analysis the scenario is meant for; informational.
    #[serde(default)]
    pub analysis: Option<Analysis>,
    #[serde(default)]
    pub numerics: Numerics,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("scenario: {e}")))
    }

    /// Copy with one constant replaced (sweeps).
    pub fn with_constant(&self, name: &str, value: f64) -> Result<Self, CliError> {
        let mut s = self.clone();
        match s.system.constants.get_mut(name) {
            Some(v) => *v = value,
            None => return Err(CliError::Validation(format!("sweep parameter `{name}` is not a constant of the system"))),
        }
        Ok(s)
    }

    /// Structural checks that need no numerics.
    pub fn validate(&self) -> Result<(), CliError> {
        let v = |m: String| Err(CliError::Validation(m));
        let sys = &self.system;
        if sys.n == 0 || sys.d == 0 {
            return v("system needs n ≥ 1 and d ≥ 1".into());
        }
        if sys.f.len() != sys.n {
            return v(format!("system has n = {} but {} component expressions", sys.n, sys.f.len()));
        }
        if self.input.components.len() != sys.d {
            return v(format!("system has d = {} but the input has {} components", sys.d, self.input.components.len()));
        }
        if !(self.input.rho > 0.0) {
            return v(format!("input decay rate ρ = {} must be positive", self.input.rho));
        }
        if self.seeds.sink.len() != sys.n {
            return v(format!("sink seed has {} entries, n = {}", self.seeds.sink.len(), sys.n));
        }
        for (what, list) in [("future sink", &self.seeds.future_sinks), ("edge", &self.seeds.edges)] {
            for s in list {
                if s.len() != sys.n {
                    return v(format!("{what} seed has {} entries, n = {}", s.len(), sys.n));
                }
            }
        }
        if let Some(a) = self.numerics.alpha {
            if !(a > 0.0 && a < self.input.rho) {
                return v(format!(
                    "α = {a} is outside the compactification window 0 < α < ρ = {}; the limit systems are not attached smoothly",
                    self.input.rho
                ));
            }
        }
        if let Some(d) = self.numerics.seed_delta {
            ratekit_core::manifolds::check_seed_delta(d).map_err(|e| CliError::Validation(e.to_string()))?;
        }
        let r = &self.rates;
        if !(r.r_lo > 0.0 && r.r_hi > r.r_lo) {
            return v(format!("rate range needs 0 < r_lo < r_hi (got [{}, {}])", r.r_lo, r.r_hi));
        }
        if !(r.tol_r > 0.0) {
            return v(format!("tol_r = {} must be positive", r.tol_r));
        }
        if let Some(x) = r.r {
            if !(x > 0.0) {
                return v(format!("rate r = {x} must be positive"));
            }
        }
        if let Some(sw) = &self.sweep {
            if !sys.constants.contains_key(&sw.parameter) {
                return v(format!("sweep parameter `{}` is not a constant of the system", sw.parameter));
            }
            if sw.grid.is_empty() {
                return v("sweep grid is empty".into());
            }
        }
        let sc = &self.numerics.scan;
        if !(sc.tau_hi > sc.tau_lo) || sc.m < 2 || sc.orientation.abs() != 1.0 {
            return v("scan needs τ_lo < τ_hi, m ≥ 2 and orientation ±1".into());
        }
        if !(self.numerics.delta > 0.0) {
            return v("tracking δ must be positive".into());
        }
        Ok(())
    }
}
