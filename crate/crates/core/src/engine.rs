//! Execution core: scheduler, configurations, and the run loop.
//!
//! A protocol is a pure transition system over agent states. The scheduler
//! picks an ordered `(initiator, responder)` pair uniformly at random among
//! all `n(n-1)` ordered pairs at every step; the transition function rewrites
//! exactly those two slots. "Parallel time" is steps divided by `n`.

use std::fmt;
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::rng::RandomSource;

/// Index of one agent within the population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentId(pub usize);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// What an agent reports to the outside world.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Output {
    Leader,
    Follower,
}

/// One scheduler pick: an ordered pair of distinct agents at a given step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InteractionEvent {
    pub initiator: AgentId,
    pub responder: AgentId,
    pub step: u64,
}

/// A population protocol: states, one initial state, a pure pairwise
/// transition, and an output map.
pub trait Protocol {
    type State: Clone + PartialEq + Eq + Hash + fmt::Debug;

    /// The state every agent holds before the first interaction.
    fn initial_state(&self) -> Self::State;

    /// Next states for an ordered `(initiator, responder)` pair. Must be a
    /// pure function of the pair.
    fn transition(&self, initiator: &Self::State, responder: &Self::State)
        -> (Self::State, Self::State);

    fn output(&self, state: &Self::State) -> Output;

    /// Full finite state space, when the protocol can enumerate it.
    fn state_space(&self) -> Option<Vec<Self::State>> {
        None
    }

    /// Smallest population the protocol is defined for.
    fn min_population(&self) -> usize {
        2
    }

    /// Stage number for protocols with phased execution, `None` otherwise.
    fn epoch_of(&self, _state: &Self::State) -> Option<u8> {
        None
    }
}

/// Draw one interaction uniformly among all `n(n-1)` ordered pairs.
///
/// The draw maps a single unbiased integer below `n(n-1)` to a pair, so
/// every ordered pair has probability exactly `1/(n(n-1))`.
pub fn draw_interaction(rng: &mut RandomSource, n: usize, step: u64) -> Result<InteractionEvent> {
    if n < 2 {
        return Err(Error::PopulationTooSmall { n, min: 2 });
    }
    let n64 = n as u64;
    let k = rng.next_below(n64 * (n64 - 1));
    let initiator = (k / (n64 - 1)) as usize;
    let mut responder = (k % (n64 - 1)) as usize;
    if responder >= initiator {
        responder += 1;
    }
    Ok(InteractionEvent {
        initiator: AgentId(initiator),
        responder: AgentId(responder),
        step,
    })
}

/// The states of all agents at a step, plus a cached leader count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration<S> {
    states: Vec<S>,
    step: u64,
    leaders: usize,
}

impl<S: Clone> Configuration<S> {
    /// All agents in the protocol's initial state.
    pub fn initial<P>(protocol: &P, n: usize) -> Result<Self>
    where
        P: Protocol<State = S>,
    {
        if n < protocol.min_population() {
            return Err(Error::PopulationTooSmall {
                n,
                min: protocol.min_population(),
            });
        }
        let states = vec![protocol.initial_state(); n];
        Ok(Self::from_states(protocol, states))
    }

    /// Wrap an explicit state vector, recomputing the cached leader count.
    pub fn from_states<P>(protocol: &P, states: Vec<S>) -> Self
    where
        P: Protocol<State = S>,
    {
        let leaders = states
            .iter()
            .filter(|s| protocol.output(s) == Output::Leader)
            .count();
        Self {
            states,
            step: 0,
            leaders,
        }
    }

    pub fn population(&self) -> usize {
        self.states.len()
    }

    /// Number of interactions applied so far.
    pub fn step(&self) -> u64 {
        self.step
    }

    /// Cached count of agents whose output is `Leader`.
    pub fn leader_count(&self) -> usize {
        self.leaders
    }

    pub fn state(&self, id: AgentId) -> &S {
        &self.states[id.0]
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    /// Apply one interaction in place: only the two participating slots may
    /// change, the step counter advances, and the leader cache is updated.
    pub fn apply<P>(&mut self, protocol: &P, event: &InteractionEvent) -> Result<()>
    where
        P: Protocol<State = S>,
    {
        let n = self.states.len();
        let (i, r) = (event.initiator.0, event.responder.0);
        if i >= n {
            return Err(Error::AgentOutOfRange { id: i, n });
        }
        if r >= n {
            return Err(Error::AgentOutOfRange { id: r, n });
        }
        if i == r {
            return Err(Error::SelfInteraction { id: i });
        }
        let (new_i, new_r) = protocol.transition(&self.states[i], &self.states[r]);
        let before = leader_bit(protocol, &self.states[i]) + leader_bit(protocol, &self.states[r]);
        let after = leader_bit(protocol, &new_i) + leader_bit(protocol, &new_r);
        self.states[i] = new_i;
        self.states[r] = new_r;
        self.leaders = self.leaders + after - before;
        self.step += 1;
        Ok(())
    }
}

fn leader_bit<P: Protocol>(protocol: &P, s: &P::State) -> usize {
    usize::from(protocol.output(s) == Output::Leader)
}

/// Pure form of one interaction: returns the successor configuration.
pub fn step<P: Protocol>(
    config: &Configuration<P::State>,
    event: &InteractionEvent,
    protocol: &P,
) -> Result<Configuration<P::State>> {
    let mut next = config.clone();
    next.apply(protocol, event)?;
    Ok(next)
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopKind {
    /// The stop condition held; `RunOutcome::step` is the step where it
    /// first held.
    Condition,
    /// The step budget ran out before the condition held. Not an error.
    Exhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOutcome {
    pub kind: StopKind,
    pub step: u64,
}

impl RunOutcome {
    pub fn stopped(&self) -> bool {
        self.kind == StopKind::Condition
    }
}

/// Per-step hook invoked after each applied interaction with the event, the
/// two fresh participant states, and the cached leader count.
pub trait Observer<S> {
    fn on_step(&mut self, event: &InteractionEvent, initiator: &S, responder: &S, leaders: usize);
}

/// Observer that does nothing.
pub struct NoObserver;

impl<S> Observer<S> for NoObserver {
    fn on_step(&mut self, _: &InteractionEvent, _: &S, _: &S, _: usize) {}
}

impl<S, O: Observer<S> + ?Sized> Observer<S> for &mut O {
    fn on_step(&mut self, event: &InteractionEvent, s0: &S, s1: &S, leaders: usize) {
        (**self).on_step(event, s0, s1, leaders);
    }
}

impl<S, A: Observer<S>, B: Observer<S>> Observer<S> for (A, B) {
    fn on_step(&mut self, event: &InteractionEvent, s0: &S, s1: &S, leaders: usize) {
        self.0.on_step(event, s0, s1, leaders);
        self.1.on_step(event, s0, s1, leaders);
    }
}

/// Default step budget for a population of `n`: generous against the
/// expected logarithmic parallel time, small enough to bound runaways.
pub fn default_max_steps(n: usize) -> u64 {
    500 * n as u64 * u64::from(ceil_log2(n).max(1))
}

/// `⌈log2 n⌉` for `n ≥ 1`.
pub fn ceil_log2(n: usize) -> u32 {
    (n as u64).next_power_of_two().trailing_zeros()
}

/// Steps divided by population size.
pub fn parallel_time(steps: u64, n: usize) -> f64 {
    assert!(n >= 1, "population must be non-empty");
    steps as f64 / n as f64
}

/// Drive `config` forward until `stop` holds or `max_steps` interactions ran.
///
/// The stop condition is evaluated on the starting configuration and then
/// after every step; the observer fires once per applied interaction.
pub fn run<P, F, O>(
    protocol: &P,
    config: &mut Configuration<P::State>,
    rng: &mut RandomSource,
    max_steps: u64,
    mut stop: F,
    observer: &mut O,
) -> Result<RunOutcome>
where
    P: Protocol,
    F: FnMut(&Configuration<P::State>) -> bool,
    O: Observer<P::State>,
{
    if max_steps == 0 {
        return Err(Error::ZeroStepBudget);
    }
    if stop(config) {
        return Ok(RunOutcome {
            kind: StopKind::Condition,
            step: config.step(),
        });
    }
    let n = config.population();
    for _ in 0..max_steps {
        let event = draw_interaction(rng, n, config.step())?;
        config.apply(protocol, &event)?;
        observer.on_step(
            &event,
            config.state(event.initiator),
            config.state(event.responder),
            config.leader_count(),
        );
        if stop(config) {
            return Ok(RunOutcome {
                kind: StopKind::Condition,
                step: config.step(),
            });
        }
    }
    Ok(RunOutcome {
        kind: StopKind::Exhausted,
        step: config.step(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::{Baseline, BaselineState};

    #[test]
    fn draw_rejects_tiny_population() {
        let mut rng = RandomSource::new(1);
        assert_eq!(
            draw_interaction(&mut rng, 1, 0),
            Err(Error::PopulationTooSmall { n: 1, min: 2 })
        );
    }

    #[test]
    fn draw_pair_is_distinct() {
        let mut rng = RandomSource::new(3);
        for _ in 0..1000 {
            let e = draw_interaction(&mut rng, 2, 0).unwrap();
            assert_ne!(e.initiator, e.responder);
        }
    }

    #[test]
    fn draw_two_agents_is_balanced() {
        // With n = 2 the two ordered pairs must each appear with frequency
        // 1/2 within 3 standard deviations of the binomial count.
        let draws = 100_000u64;
        let mut rng = RandomSource::new(11);
        let mut forward = 0u64;
        for _ in 0..draws {
            let e = draw_interaction(&mut rng, 2, 0).unwrap();
            if e.initiator.0 == 0 {
                forward += 1;
            }
        }
        let mean = draws as f64 / 2.0;
        let sigma = (draws as f64 * 0.25).sqrt();
        assert!(
            (forward as f64 - mean).abs() <= 3.0 * sigma,
            "forward pair count {forward} outside 3 sigma of {mean}"
        );
    }

    #[test]
    fn draw_chi_square_uniform_over_ordered_pairs() {
        // n = 4: 12 ordered pairs, 10^6 draws. Chi-square with 11 degrees
        // of freedom; 31.2641 is the 0.999 quantile.
        let n = 4usize;
        let draws = 1_000_000u64;
        let mut counts = vec![0u64; n * n];
        let mut rng = RandomSource::new(2024);
        for _ in 0..draws {
            let e = draw_interaction(&mut rng, n, 0).unwrap();
            counts[e.initiator.0 * n + e.responder.0] += 1;
        }
        let expected = draws as f64 / (n * (n - 1)) as f64;
        let mut chi2 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    assert_eq!(counts[i * n + j], 0);
                    continue;
                }
                let d = counts[i * n + j] as f64 - expected;
                chi2 += d * d / expected;
            }
        }
        assert!(chi2 < 31.2641, "chi-square statistic {chi2} too large");
    }

    #[test]
    fn pair_frequencies_within_five_sigma_for_small_n() {
        let draws = 1_000_000u64;
        for n in [2usize, 3, 5, 8] {
            let mut counts = vec![0u64; n * n];
            let mut rng = RandomSource::new(77 + n as u64);
            for _ in 0..draws {
                let e = draw_interaction(&mut rng, n, 0).unwrap();
                counts[e.initiator.0 * n + e.responder.0] += 1;
            }
            let p = 1.0 / (n * (n - 1)) as f64;
            let mean = draws as f64 * p;
            let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let c = counts[i * n + j] as f64;
                    assert!(
                        (c - mean).abs() <= 5.0 * sigma,
                        "pair ({i},{j}) at n={n}: count {c} vs mean {mean}"
                    );
                }
            }
        }
    }

    #[test]
    fn step_applies_transition_to_participants_only() {
        let protocol = Baseline;
        let config = Configuration::initial(&protocol, 6).unwrap();
        let event = InteractionEvent {
            initiator: AgentId(2),
            responder: AgentId(3),
            step: 0,
        };
        let next = step(&config, &event, &protocol).unwrap();
        for id in 0..6 {
            if id == 2 || id == 3 {
                continue;
            }
            assert_eq!(next.state(AgentId(id)), config.state(AgentId(id)));
        }
        assert_eq!(next.step(), 1);
        assert_eq!(next.leader_count(), 5);
    }

    #[test]
    fn step_two_leaders_demotes_responder() {
        let protocol = Baseline;
        let config = Configuration::initial(&protocol, 2).unwrap();
        let event = InteractionEvent {
            initiator: AgentId(0),
            responder: AgentId(1),
            step: 0,
        };
        let next = step(&config, &event, &protocol).unwrap();
        assert_eq!(next.state(AgentId(0)), &BaselineState { leader: true });
        assert_eq!(next.state(AgentId(1)), &BaselineState { leader: false });
    }

    #[test]
    fn step_no_rule_is_identity() {
        let protocol = Baseline;
        let followers = vec![BaselineState { leader: false }; 2];
        let config = Configuration::from_states(&protocol, followers);
        let event = InteractionEvent {
            initiator: AgentId(0),
            responder: AgentId(1),
            step: 0,
        };
        let next = step(&config, &event, &protocol).unwrap();
        assert_eq!(next.states(), config.states());
        assert_eq!(next.leader_count(), 0);
    }

    #[test]
    fn step_checks_bounds() {
        let protocol = Baseline;
        let config = Configuration::initial(&protocol, 3).unwrap();
        let event = InteractionEvent {
            initiator: AgentId(0),
            responder: AgentId(9),
            step: 0,
        };
        assert_eq!(
            step(&config, &event, &protocol),
            Err(Error::AgentOutOfRange { id: 9, n: 3 })
        );
    }

    #[test]
    fn run_baseline_pair_stops_after_first_interaction() {
        let protocol = Baseline;
        let mut config = Configuration::initial(&protocol, 2).unwrap();
        let mut rng = RandomSource::new(5);
        let outcome = run(
            &protocol,
            &mut config,
            &mut rng,
            1000,
            |c| c.leader_count() == 1,
            &mut NoObserver,
        )
        .unwrap();
        assert_eq!(outcome.kind, StopKind::Condition);
        assert_eq!(outcome.step, 1);
    }

    #[test]
    fn run_reports_exhaustion_distinctly() {
        let protocol = Baseline;
        let mut config = Configuration::initial(&protocol, 4).unwrap();
        let mut rng = RandomSource::new(5);
        let outcome = run(
            &protocol,
            &mut config,
            &mut rng,
            3,
            |_| false,
            &mut NoObserver,
        )
        .unwrap();
        assert_eq!(outcome.kind, StopKind::Exhausted);
        assert_eq!(outcome.step, 3);
    }

    #[test]
    fn run_mean_stop_time_matches_pairwise_elimination() {
        // Pairwise elimination from all-leaders takes
        // sum_{k=2..n} n(n-1)/(k(k-1)) = (n-1)^2 steps in expectation,
        // i.e. roughly n parallel time; the mean over 200 trials must fall
        // in the [n/4, 4n] parallel-time window around it.
        let protocol = Baseline;
        let n = 256usize;
        let trials = 200u64;
        let mut total_steps = 0u64;
        for trial in 0..trials {
            let mut config = Configuration::initial(&protocol, n).unwrap();
            let mut rng = RandomSource::with_stream(900, trial);
            let outcome = run(
                &protocol,
                &mut config,
                &mut rng,
                10_000_000,
                |c| c.leader_count() == 1,
                &mut NoObserver,
            )
            .unwrap();
            assert!(outcome.stopped());
            total_steps += outcome.step;
        }
        let mean_pt = parallel_time(total_steps, n) / trials as f64;
        assert!(mean_pt >= n as f64 / 4.0 && mean_pt <= 4.0 * n as f64);
        let analytic_pt = ((n - 1) * (n - 1)) as f64 / n as f64;
        assert!(
            (mean_pt - analytic_pt).abs() < 0.2 * analytic_pt,
            "mean parallel time {mean_pt} far from analytic {analytic_pt}"
        );
    }

    #[test]
    fn parallel_time_examples() {
        assert_eq!(parallel_time(6400, 64), 100.0);
        assert_eq!(parallel_time(0, 10), 0.0);
        let n = 100u64;
        let steps = (21.0 * n as f64 * (n as f64).ln()).floor() as u64;
        let pt = parallel_time(steps, n as usize);
        let target = 21.0 * (n as f64).ln();
        assert!(pt <= target && pt > target - 1.0 / n as f64 - 1e-9);
    }

    #[test]
    fn default_budget_formula() {
        assert_eq!(default_max_steps(2), 500 * 2);
        assert_eq!(default_max_steps(64), 500 * 64 * 6);
        assert_eq!(default_max_steps(1000), 500 * 1000 * 10);
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(1024), 10);
        assert_eq!(ceil_log2(1025), 11);
    }
}
