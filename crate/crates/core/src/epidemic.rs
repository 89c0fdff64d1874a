//! One-way epidemic over a sub-population.
//!
//! A target set `V'` and a source member start with only the source
//! infected. Whenever an interaction touches an infected agent, every
//! participant that belongs to `V'` becomes infected; infection is never
//! lost. The completion step is the first step index `t` at which the whole
//! target is infected, counting the state after the `t`-th interaction as
//! step `t` and the initial state as step 0.

use crate::engine::{draw_interaction, AgentId, InteractionEvent};
use crate::error::{Error, Result};
use crate::rng::RandomSource;

/// Infection bookkeeping for one epidemic.
#[derive(Debug, Clone)]
pub struct EpidemicState {
    in_target: Vec<bool>,
    infected: Vec<bool>,
    infected_count: usize,
    target_size: usize,
    source: AgentId,
    completed_at: Option<u64>,
}

impl EpidemicState {
    /// Epidemic over an explicit target set with `source` as the first
    /// infected member.
    pub fn new(n: usize, target: &[AgentId], source: AgentId) -> Result<Self> {
        if target.is_empty() || target.len() > n {
            return Err(Error::InvalidTarget {
                n_prime: target.len(),
                n,
            });
        }
        let mut in_target = vec![false; n];
        for id in target {
            if id.0 >= n {
                return Err(Error::AgentOutOfRange { id: id.0, n });
            }
            in_target[id.0] = true;
        }
        let target_size = in_target.iter().filter(|b| **b).count();
        if source.0 >= n || !in_target[source.0] {
            return Err(Error::AgentOutOfRange { id: source.0, n });
        }
        let mut infected = vec![false; n];
        infected[source.0] = true;
        let completed_at = (target_size == 1).then_some(0);
        Ok(Self {
            in_target,
            infected,
            infected_count: 1,
            target_size,
            source,
            completed_at,
        })
    }

    /// Epidemic over the first `n_prime` agents, seeded at agent 0. Under a
    /// uniform scheduler any subset of the same size behaves identically.
    pub fn head_subset(n: usize, n_prime: usize) -> Result<Self> {
        if n_prime == 0 || n_prime > n {
            return Err(Error::InvalidTarget { n_prime, n });
        }
        let target: Vec<AgentId> = (0..n_prime).map(AgentId).collect();
        Self::new(n, &target, AgentId(0))
    }

    /// Fold one interaction into the infected set.
    pub fn observe(&mut self, event: &InteractionEvent) {
        if self.completed_at.is_some() {
            return;
        }
        let (u, v) = (event.initiator.0, event.responder.0);
        if !(self.infected[u] || self.infected[v]) {
            return;
        }
        for w in [u, v] {
            if self.in_target[w] && !self.infected[w] {
                self.infected[w] = true;
                self.infected_count += 1;
            }
        }
        if self.infected_count == self.target_size {
            self.completed_at = Some(event.step + 1);
        }
    }

    pub fn source(&self) -> AgentId {
        self.source
    }

    pub fn is_infected(&self, id: AgentId) -> bool {
        self.infected[id.0]
    }

    pub fn infected_count(&self) -> usize {
        self.infected_count
    }

    pub fn target_size(&self) -> usize {
        self.target_size
    }

    pub fn is_complete(&self) -> bool {
        self.completed_at.is_some()
    }

    /// First step at which the whole target was infected.
    pub fn completed_at(&self) -> Option<u64> {
        self.completed_at
    }
}

/// Result of driving one epidemic to completion or to a step budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpidemicOutcome {
    Completed { step: u64 },
    TimedOut { steps: u64, infected: usize },
}

impl EpidemicOutcome {
    pub fn completion_step(&self) -> Option<u64> {
        match self {
            EpidemicOutcome::Completed { step } => Some(*step),
            EpidemicOutcome::TimedOut { .. } => None,
        }
    }
}

/// Run the pure infection dynamics over the first `n_prime` of `n` agents
/// and report the completion step, or a timeout after `max_steps`.
pub fn simulate_epidemic(
    n: usize,
    n_prime: usize,
    rng: &mut RandomSource,
    max_steps: u64,
) -> Result<EpidemicOutcome> {
    let mut epidemic = EpidemicState::head_subset(n, n_prime)?;
    if let Some(step) = epidemic.completed_at() {
        return Ok(EpidemicOutcome::Completed { step });
    }
    for t in 0..max_steps {
        let event = draw_interaction(rng, n, t)?;
        epidemic.observe(&event);
        if let Some(step) = epidemic.completed_at() {
            return Ok(EpidemicOutcome::Completed { step });
        }
    }
    Ok(EpidemicOutcome::TimedOut {
        steps: max_steps,
        infected: epidemic.infected_count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_target_completes_immediately() {
        let mut rng = RandomSource::new(1);
        let outcome = simulate_epidemic(10, 1, &mut rng, 100).unwrap();
        assert_eq!(outcome, EpidemicOutcome::Completed { step: 0 });
    }

    #[test]
    fn rejects_bad_target_sizes() {
        let mut rng = RandomSource::new(1);
        assert!(simulate_epidemic(10, 0, &mut rng, 10).is_err());
        assert!(simulate_epidemic(10, 11, &mut rng, 10).is_err());
    }

    #[test]
    fn infection_is_monotone_and_source_stays_infected() {
        let n = 40;
        let mut epidemic = EpidemicState::head_subset(n, 30).unwrap();
        let mut rng = RandomSource::new(9);
        let mut last = epidemic.infected_count();
        for t in 0..20_000 {
            let event = draw_interaction(&mut rng, n, t).unwrap();
            epidemic.observe(&event);
            assert!(epidemic.infected_count() >= last);
            assert!(epidemic.is_infected(epidemic.source()));
            last = epidemic.infected_count();
            if epidemic.is_complete() {
                break;
            }
        }
        assert!(epidemic.is_complete(), "epidemic should finish well within budget");
    }

    #[test]
    fn full_population_meets_tail_bound_at_small_scale() {
        // Whole-population epidemic at n = 50 with t = 3 n ln n: the tail
        // bound n e^{-t/n} = n^{-2} makes timeouts essentially impossible.
        let n = 50usize;
        let t = (3.0 * n as f64 * (n as f64).ln()).floor() as u64;
        let budget = 2 * t;
        for trial in 0..200 {
            let mut rng = RandomSource::with_stream(123, trial);
            let outcome = simulate_epidemic(n, n, &mut rng, budget).unwrap();
            assert!(outcome.completion_step().is_some(), "trial {trial} timed out");
        }
    }

    #[test]
    fn half_target_is_slower_than_full_population() {
        // Median completion over 1000 trials: infecting a 50-agent subset
        // embedded in 100 agents takes longer than infecting all 100.
        let trials = 1000u64;
        let mut half = Vec::new();
        let mut full = Vec::new();
        for trial in 0..trials {
            let mut rng = RandomSource::with_stream(77, trial);
            match simulate_epidemic(100, 50, &mut rng, 1_000_000).unwrap() {
                EpidemicOutcome::Completed { step } => half.push(step),
                EpidemicOutcome::TimedOut { .. } => panic!("half-target trial timed out"),
            }
            let mut rng = RandomSource::with_stream(78, trial);
            match simulate_epidemic(100, 100, &mut rng, 1_000_000).unwrap() {
                EpidemicOutcome::Completed { step } => full.push(step),
                EpidemicOutcome::TimedOut { .. } => panic!("full-target trial timed out"),
            }
        }
        half.sort_unstable();
        full.sort_unstable();
        let median_half = half[half.len() / 2];
        let median_full = full[full.len() / 2];
        assert!(
            median_half > median_full,
            "median {median_half} should exceed {median_full}"
        );
    }
}
