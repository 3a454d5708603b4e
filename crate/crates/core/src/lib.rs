//! Analytic performance model and energy-optimal configuration search for
//! SWIPT cellular networks, with a Monte Carlo validation simulator.
//!
//! The model treats base stations and user terminals as independent planar
//! Poisson point processes. IoT terminals harvest RF energy (time-switching
//! or power-splitting receivers) while broadband and IoT traffic share base
//! station time under generalized processor sharing. The crate computes
//! mean per-bit delays through an interference fixed point, the harvested
//! power distribution, and searches for the cheapest network configuration
//! (transmit power, base station density, split factor) under QoS
//! constraints with a penalty-fitness genetic algorithm and a grid-search
//! baseline.

pub mod cli;
pub mod config;
pub mod geometry;
pub mod harvest;
pub mod objective;
pub mod perf;
pub mod quad;
pub mod sim;
pub mod solver;

pub use config::{validate, ScenarioConfig, ValidatedScenario};
pub use perf::PerformanceReport;

/// Crate-wide error type.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// One or more scenario invariants are violated. Lists every offending
    /// field so a config file can be fixed in one pass.
    #[error("invalid scenario:\n{}", .0.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n"))]
    Validation(Vec<Violation>),

    /// Argument outside the documented domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature failed over [{a}, {b}]: error estimate {estimate:e} above tolerance {tolerance:e}")]
    Quadrature {
        a: f64,
        b: f64,
        estimate: f64,
        tolerance: f64,
    },

    /// Integrand grew without bound (capacity collapsing to zero on the
    /// integration support).
    #[error("divergent integral: {0}")]
    Divergence(String),

    /// The delay fixed point did not settle within the iteration budget.
    #[error("fixed point did not converge: last delay {last_tau:e} s/bit, residual {residual:e} after {iterations} iterations")]
    NonConvergence {
        last_tau: f64,
        residual: f64,
        iterations: usize,
    },

    /// Harvest profile cannot be built (degenerate cell population).
    #[error("infeasible harvest profile: {0}")]
    InfeasibleProfile(String),

    /// Configuration file could not be parsed.
    #[error("config error: {0}")]
    Config(String),

    /// Simulation input rejected before any replication ran.
    #[error("simulation config error: {0}")]
    SimConfig(String),
}

/// A single validation failure: which field, and what is wrong with it.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
