//! Scenario → engine objects.

use std::collections::BTreeMap;

use ratekit_core::equilibria::{find_equilibrium, moving_equilibrium, Branch, ContinuationOptions, EquilibriumRecord};
use ratekit_core::manifolds::{AttractorCatalogue, OmegaOptions};
use ratekit_core::numcore::{dist2, OdeOptions};
use ratekit_core::systems::{ExternalInput, FrozenSystem, InputCheck, InputComponent};
use ratekit_core::tipping::{TippingOptions, TippingProblem};

use crate::scenario::{ComponentDef, Num, Scenario};
use crate::CliError;

fn validation(e: ratekit_core::Error) -> CliError {
    CliError::Validation(e.to_string())
}

/// System and input, checked but without any equilibrium work.
#[derive(Debug, Clone)]
pub struct Model {
    pub scenario: Scenario,
    pub frozen: FrozenSystem,
    pub input: ExternalInput,
    pub input_check: InputCheck,
}

impl Model {
    pub fn build(scenario: &Scenario) -> Result<Model, CliError> {
        scenario.validate()?;
        let consts = &scenario.system.constants;
        let pairs: Vec<(&str, f64)> = consts.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        let sources: Vec<&str> = scenario.system.f.iter().map(String::as_str).collect();
        let frozen = FrozenSystem::parse(scenario.system.n, scenario.system.d, &sources, &pairs).map_err(validation)?;
        let mut comps = Vec::with_capacity(scenario.input.components.len());
        for c in &scenario.input.components {
            comps.push(match c {
                ComponentDef::Tanh { minus, plus, steepness } => {
                    InputComponent::Tanh { minus: minus.eval(consts)?, plus: plus.eval(consts)?, steepness: steepness.eval(consts)? }
                }
                ComponentDef::SechPulse { base, amplitude, width } => {
                    InputComponent::SechPulse { base: base.eval(consts)?, amplitude: amplitude.eval(consts)?, width: width.eval(consts)? }
                }
                ComponentDef::User { expr, minus, plus } => {
                    InputComponent::user(expr, minus.eval(consts)?, plus.eval(consts)?, &pairs).map_err(validation)?
                }
            });
        }
        let input = ExternalInput::new(comps, scenario.input.rho).map_err(validation)?;
        let input_check = input.verify().map_err(validation)?;
        Ok(Model { scenario: scenario.clone(), frozen, input, input_check })
    }

    pub fn constants(&self) -> &BTreeMap<String, f64> {
        &self.scenario.system.constants
    }

    fn point(&self, seed: &[Num]) -> Result<Vec<f64>, CliError> {
        seed.iter().map(|v| v.eval(self.constants())).collect()
    }

    pub fn options(&self) -> TippingOptions {
        let nm = &self.scenario.numerics;
        let ode = OdeOptions::with_tol(nm.rtol, nm.atol);
        TippingOptions {
            alpha: nm.alpha,
            seed_delta: nm.seed_delta,
            ode,
            omega: OmegaOptions { ode, ..OmegaOptions::default() },
            eta_capture: nm.eta_capture,
            coarse_points: nm.coarse_points,
            ..TippingOptions::default()
        }
    }

    /// Equilibria, branches and the catalogue.
    pub fn setup(&self) -> Result<Setup, CliError> {
        let f = &self.frozen;
        let lm = self.input.past_limit();
        let lp = self.input.future_limit();
        let cont = ContinuationOptions::default();
        let seeds = &self.scenario.seeds;

        let e_minus = find_equilibrium(f, &lm, &self.point(&seeds.sink)?)
            .map_err(|e| CliError::Numerical(format!("no equilibrium near the sink seed at λ⁻: {e}")))?;
        if !e_minus.is_sink() {
            return Err(CliError::Numerical(format!("the equilibrium {:?} found from the sink seed is a {}, not a sink", e_minus.x, e_minus.class.label())));
        }
        let sink_branch = moving_equilibrium(f, &self.input, &e_minus, f64::NEG_INFINITY, cont)?;

        let mut sinks: Vec<EquilibriumRecord> = Vec::new();
        for g in &seeds.future_sinks {
            let rec = find_equilibrium(f, &lp, &self.point(g)?)
                .map_err(|e| CliError::Numerical(format!("no equilibrium near a future sink seed: {e}")))?;
            if !rec.is_sink() {
                return Err(CliError::Numerical(format!("future sink seed converged to a {} at {:?}", rec.class.label(), rec.x)));
            }
            sinks.push(rec);
        }
        if seeds.future_sinks.is_empty() {
            if let Some(e) = sink_branch.future_limit() {
                sinks.push(e.clone());
            }
        }
        let catalogue = AttractorCatalogue::new(f, &lp, sinks, self.scenario.numerics.capture_radius)?;

        let mut edges = Vec::new();
        for g in &seeds.edges {
            let rec = find_equilibrium(f, &lp, &self.point(g)?)
                .map_err(|e| CliError::Numerical(format!("no equilibrium near an edge seed: {e}")))?;
            if !rec.is_edge_candidate() {
                return Err(CliError::Numerical(format!("edge seed converged to a {} at {:?}, not a one-sided saddle", rec.class.label(), rec.x)));
            }
            if !edges.iter().any(|e: &EquilibriumRecord| dist2(&e.x, &rec.x) < 1e-8) {
                edges.push(rec);
            }
        }
        let edge_branches = edges.iter().map(|e| moving_equilibrium(f, &self.input, e, f64::INFINITY, cont).ok()).collect();
        Ok(Setup { e_minus, sink_branch, catalogue, edges, edge_branches, opts: self.options() })
    }
}

#[derive(Debug, Clone)]
pub struct Setup {
    pub e_minus: EquilibriumRecord,
    /// e(Λ(τ)) continued from τ = −∞.
    pub sink_branch: Branch,
    pub catalogue: AttractorCatalogue,
    pub edges: Vec<EquilibriumRecord>,
    /// η(Λ(τ)) continued back from each edge at τ = +∞.
    pub edge_branches: Vec<Option<Branch>>,
    pub opts: TippingOptions,
}

impl Setup {
    pub fn problem(&self, model: &Model) -> Result<TippingProblem, CliError> {
        TippingProblem::new(model.frozen.clone(), model.input.clone(), self.e_minus.clone(), self.catalogue.clone(), self.edges.clone(), self.opts)
            .map_err(CliError::from)
    }
}

/// Scenario, model and setup in one go.
pub fn load(scenario: &Scenario) -> Result<(Model, Setup), CliError> {
    let model = Model::build(scenario)?;
    let setup = model.setup()?;
    Ok((model, setup))
}
