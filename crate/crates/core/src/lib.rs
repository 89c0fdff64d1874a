//! Simulation and analysis toolkit for population protocols.
//!
//! A population is a set of `n` anonymous finite-state agents. At every step
//! a uniformly random ordered pair of agents interacts, and a protocol's
//! transition function rewrites the two participating states. This crate
//! provides:
//!
//! - [`engine`] — the execution core: scheduler, configurations, run loop,
//!   and per-step observers;
//! - [`pll`] — a leader-election protocol that stabilizes in logarithmic
//!   parallel time using logarithmically many states per agent;
//! - [`pll_sym`] — its fully symmetric variant (role-free transitions with
//!   coin statuses carried by followers);
//! - [`baseline`] — the classic two-state election used both as a fallback
//!   inside the backup stage and as a linear-time comparison point;
//! - [`epidemic`] — one-way infection dynamics over a sub-population;
//! - [`analysis`] — stabilization measurements, survivor histograms,
//!   bound checks, runtime predicates, invariant observers, and an
//!   exhaustive closure verifier for small populations.
//!
//! All randomness flows through [`rng::RandomSource`], a fixed deterministic
//! generator: a `(seed, stream)` pair reproduces a run bit for bit.

pub mod analysis;
pub mod baseline;
pub mod engine;
pub mod epidemic;
mod error;
pub mod pll;
pub mod pll_sym;
pub mod rng;
pub mod view;

pub use error::{Error, Result};
