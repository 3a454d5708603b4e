//! Network power-density objective, constraint evaluation, and the penalty
//! fitness driving the optimizer.

use crate::config::{ScenarioConfig, ValidatedScenario};
use crate::geometry::KernelTable;
use crate::harvest;
use crate::perf::{self, PerformanceReport};
use crate::{Error, Result};

/// The optimizer's decision triplet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionVector {
    /// BS transmit power (W).
    pub tx_power_w: f64,
    /// BS density (m^-2).
    pub lambda_b: f64,
    /// eta for time switching, nu for the power-splitting modes.
    pub split: f64,
}

/// Signed constraint slacks; a slack <= 0 means the constraint holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityReport {
    /// tau_d / tau_d0 - 1.
    pub c1_downlink: f64,
    /// tau_u / tau_u0 - 1.
    pub c1_uplink: f64,
    /// Transmit power box violation.
    pub c2_power: f64,
    /// Split factor box violation.
    pub c3_split: f64,
    /// CDF_h(h0) - mu.
    pub c4_harvest: f64,
    /// BS density box violation.
    pub c5_density: f64,
    /// m_min - lambda_u / lambda_b.
    pub users_per_bs: f64,
    pub feasible: bool,
    /// Network power density Lambda (W/m^2).
    pub objective: f64,
}

pub const FEASIBILITY_TOL: f64 = 1e-9;

impl FeasibilityReport {
    pub fn slacks(&self) -> [(&'static str, f64); 7] {
        [
            ("c1_downlink", self.c1_downlink),
            ("c1_uplink", self.c1_uplink),
            ("c2_power", self.c2_power),
            ("c3_split", self.c3_split),
            ("c4_harvest", self.c4_harvest),
            ("c5_density", self.c5_density),
            ("users_per_bs", self.users_per_bs),
        ]
    }
}

/// Full outcome of evaluating one decision.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub decision: DecisionVector,
    pub perf: PerformanceReport,
    /// CDF_h at the scenario's h0.
    pub cdf_at_h0: f64,
    pub report: FeasibilityReport,
}

/// Overwrite the decision variables of a scenario configuration.
pub fn apply_decision(base: &ScenarioConfig, dv: &DecisionVector) -> ScenarioConfig {
    let mut cfg = base.clone();
    cfg.radio.tx_power_w = dv.tx_power_w;
    cfg.population.lambda_b = dv.lambda_b;
    cfg.mode = cfg.mode.with_split(dv.split);
    cfg
}

/// Mean power per unit surface consumed by the network (W/m^2), with the
/// raw (uncapped) utilization ratio: overload is the penalty terms' job.
pub fn objective_value(scen: &ValidatedScenario, perf: &PerformanceReport) -> f64 {
    let e = &scen.energy;
    let r = &scen.radio;
    scen.population.lambda_b
        * (e.q1_w + perf.u_d * (e.q2_w + e.q3 * (r.tx_power_w - r.tx_power_min_w)))
}

/// Evaluate every constraint of the configured scenario.
pub fn check_feasibility(
    scen: &ValidatedScenario,
    perf: &PerformanceReport,
    cdf_at_h0: f64,
) -> FeasibilityReport {
    let r = &scen.radio;
    let p = &scen.population;
    let split = scen.mode.split();
    let c1_downlink = perf.u_d - 1.0;
    let c1_uplink = perf.u_u - 1.0;
    let c2_power = (r.tx_power_min_w - r.tx_power_w).max(r.tx_power_w - r.tx_power_max_w);
    let c3_split = (-split).max(split - 1.0);
    let c4_harvest = cdf_at_h0 - scen.qos.outage_cap;
    let c5_density = (-p.lambda_b).max(p.lambda_b - p.lambda_b_max);
    let users_per_bs = p.min_users_per_bs - p.lambda_u / p.lambda_b;
    let feasible = [
        c1_downlink,
        c1_uplink,
        c2_power,
        c3_split,
        c4_harvest,
        c5_density,
        users_per_bs,
    ]
    .iter()
    .all(|&s| s <= FEASIBILITY_TOL);
    FeasibilityReport {
        c1_downlink,
        c1_uplink,
        c2_power,
        c3_split,
        c4_harvest,
        c5_density,
        users_per_bs,
        feasible,
        objective: objective_value(scen, perf),
    }
}

/// Run the full model for one decision applied to a base scenario.
pub fn evaluate_decision(base: &ScenarioConfig, dv: &DecisionVector) -> Result<Evaluation> {
    let scen = crate::config::validate(apply_decision(base, dv))?;
    let table = KernelTable::build(scen.population.lambda_b)?;
    let perf = perf::evaluate_with_table(&scen, &table)?;
    let profile = harvest::build_profile(&scen, &perf, &table)?;
    let cdf_at_h0 = harvest::cdf_h(&profile, scen.qos.h0_w);
    let report = check_feasibility(&scen, &perf, cdf_at_h0);
    Ok(Evaluation {
        decision: *dv,
        perf,
        cdf_at_h0,
        report,
    })
}

/// Penalty weights of the fitness function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyWeights {
    /// Uplink utilization hinge weight.
    pub k1: f64,
    /// Harvest outage hinge weight.
    pub k2: f64,
    /// Downlink utilization hinge weight.
    pub k3: f64,
}

impl Default for PenaltyWeights {
    fn default() -> Self {
        PenaltyWeights {
            k1: 1000.0,
            k2: 5000.0,
            k3: 1000.0,
        }
    }
}

/// Recommended weight magnitude: the maximum value the objective can take
/// over the decision box.
pub fn default_weight_scale(scen: &ScenarioConfig) -> f64 {
    scen.population.lambda_b_max
        * (scen.energy.q1_w
            + scen.energy.q2_w
            + scen.energy.q3 * (scen.radio.tx_power_max_w - scen.radio.tx_power_min_w))
}

/// Penalty-method fitness of an evaluated decision.
///
/// The harvest term defaults to the hinge `+k2 (CDF_h - mu)^+`, growing with
/// the degree of violation. The verbatim compatibility mode reproduces the
/// printed `-k2 [CDF_h - mu]^-` term instead (which rewards violation and
/// penalizes satisfaction; retained for reproduction audits only).
pub fn fitness_value(scen: &ValidatedScenario, eval: &Evaluation, weights: &PenaltyWeights) -> f64 {
    let hinge = |x: f64| x.max(0.0);
    let harvest_term = if scen.compat.verbatim_penalty {
        -weights.k2 * (eval.report.c4_harvest).min(0.0)
    } else {
        weights.k2 * hinge(eval.report.c4_harvest)
    };
    eval.report.objective
        + weights.k1 * hinge(eval.report.c1_uplink)
        + harvest_term
        + weights.k3 * hinge(eval.report.c1_downlink)
}

/// Fitness score of a decision, mapping model failures (non-convergence,
/// divergent integrals) to a large finite penalty so a search can continue.
pub fn fitness_or_penalty(
    base: &ScenarioConfig,
    dv: &DecisionVector,
    weights: &PenaltyWeights,
) -> (f64, Option<Evaluation>) {
    match evaluate_decision(base, dv) {
        Ok(eval) => {
            let scen = crate::config::validate(apply_decision(base, dv)).expect("validated above");
            (fitness_value(&scen, &eval, weights), Some(eval))
        }
        Err(Error::NonConvergence { .. }) | Err(Error::Divergence(_)) | Err(Error::Quadrature { .. }) => {
            (1e6 * default_weight_scale(base), None)
        }
        Err(e) => {
            // Validation failures mean the decision decoder is broken;
            // surface them loudly instead of hiding them in a penalty.
            panic!("decision evaluation failed structurally: {e}");
        }
    }
}
