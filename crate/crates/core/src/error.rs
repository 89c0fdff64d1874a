use thiserror::Error;

/// Errors surfaced by the engine and the analysis layer.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// The requested population is smaller than the protocol supports.
    #[error("population of {n} agent(s) is below the required minimum of {min}")]
    PopulationTooSmall { n: usize, min: usize },

    /// An event referenced an agent outside the population.
    #[error("agent id {id} is out of range for a population of {n}")]
    AgentOutOfRange { id: usize, n: usize },

    /// An event paired an agent with itself.
    #[error("interaction initiator and responder must differ (both were {id})")]
    SelfInteraction { id: usize },

    /// The population-size knowledge `m` must be at least 2.
    #[error("size knowledge m must be at least 2 (got {m})")]
    InvalidKnowledge { m: u32 },

    /// A run was requested with a zero step budget.
    #[error("max_steps must be at least 1")]
    ZeroStepBudget,

    /// An epidemic target set was empty or larger than the population.
    #[error("epidemic target size {n_prime} is invalid for a population of {n}")]
    InvalidTarget { n_prime: usize, n: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
