//! Measurement and statistical verification on top of the engine.
//!
//! Everything here is deterministic given a master seed: independent trials
//! draw their generator from `(master_seed, trial_index)` and results are
//! merged by trial index, so the `jobs` level never changes any output.

pub mod closure;
pub mod invariants;
pub mod predicates;

use serde::Serialize;

use crate::engine::{
    self, parallel_time, Configuration, NoObserver, Observer, Protocol, StopKind,
};
use crate::epidemic::{simulate_epidemic, EpidemicOutcome};
use crate::pll::{self, Params, Pll, StateCount};
use crate::rng::RandomSource;
use crate::Result;

/// One sampled point of a leader-count trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrajectoryPoint {
    pub step: u64,
    pub leaders: usize,
}

/// Outcome of one stabilization trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilizationReport {
    pub seed: u64,
    pub stream: u64,
    pub n: usize,
    pub converged: bool,
    /// First step at which exactly one leader remained.
    pub convergence_step: Option<u64>,
    /// Steps actually executed (equals the convergence step when converged).
    pub steps_run: u64,
    /// Convergence step over `n`; falls back to the executed steps when the
    /// trial timed out.
    pub parallel_time: f64,
    /// Leader counts sampled every `⌈n/4⌉` steps, plus first and last step.
    pub leader_trajectory: Vec<TrajectoryPoint>,
    /// First step at which any agent reached epoch `e` (index `e - 1`);
    /// all `None` for protocols without staged execution.
    pub epoch_entry_steps: [Option<u64>; 4],
}

struct StabilizationObserver<'a, P: Protocol> {
    protocol: &'a P,
    sample_every: u64,
    trajectory: Vec<TrajectoryPoint>,
    epoch_entries: [Option<u64>; 4],
    max_epoch: u8,
}

impl<'a, P: Protocol> StabilizationObserver<'a, P> {
    fn new(protocol: &'a P, config: &Configuration<P::State>) -> Self {
        let n = config.population() as u64;
        let mut epoch_entries = [None; 4];
        let mut max_epoch = 0;
        if let Some(e) = protocol.epoch_of(config.state(crate::engine::AgentId(0))) {
            max_epoch = e;
            for past in 1..=e {
                epoch_entries[(past - 1) as usize] = Some(0);
            }
        }
        Self {
            protocol,
            sample_every: n.div_ceil(4).max(1),
            trajectory: vec![TrajectoryPoint {
                step: 0,
                leaders: config.leader_count(),
            }],
            epoch_entries,
            max_epoch,
        }
    }
}

impl<'a, P: Protocol> Observer<P::State> for StabilizationObserver<'a, P> {
    fn on_step(
        &mut self,
        event: &crate::engine::InteractionEvent,
        s0: &P::State,
        s1: &P::State,
        leaders: usize,
    ) {
        let step = event.step + 1;
        if step % self.sample_every == 0 {
            self.trajectory.push(TrajectoryPoint { step, leaders });
        }
        for s in [s0, s1] {
            if let Some(e) = self.protocol.epoch_of(s) {
                while self.max_epoch < e {
                    self.max_epoch += 1;
                    self.epoch_entries[(self.max_epoch - 1) as usize] = Some(step);
                }
            }
        }
    }
}

/// Run one trial until the leader count first reaches one (the convergence
/// marker: the count never grows and never reaches zero), or until
/// `max_steps`.
pub fn measure_stabilization<P: Protocol>(
    protocol: &P,
    n: usize,
    seed: u64,
    stream: u64,
    max_steps: u64,
) -> Result<StabilizationReport> {
    let mut config = Configuration::initial(protocol, n)?;
    let mut rng = RandomSource::with_stream(seed, stream);
    let mut observer = StabilizationObserver::new(protocol, &config);
    let outcome = engine::run(
        protocol,
        &mut config,
        &mut rng,
        max_steps,
        |c| c.leader_count() == 1,
        &mut observer,
    )?;
    let converged = outcome.kind == StopKind::Condition;
    let steps_run = config.step();
    let mut trajectory = observer.trajectory;
    if trajectory.last().map(|p| p.step) != Some(steps_run) {
        trajectory.push(TrajectoryPoint {
            step: steps_run,
            leaders: config.leader_count(),
        });
    }
    Ok(StabilizationReport {
        seed,
        stream,
        n,
        converged,
        convergence_step: converged.then_some(outcome.step),
        steps_run,
        parallel_time: parallel_time(steps_run, n),
        leader_trajectory: trajectory,
        epoch_entry_steps: observer.epoch_entries,
    })
}

/// Leader counts after running the election for exactly the quick-phase
/// horizon, across many trials.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SurvivorHistogram {
    pub n: usize,
    pub m: u32,
    pub trials: u64,
    pub horizon_steps: u64,
    /// `counts[i]` = trials that ended the horizon with exactly `i` leaders.
    pub counts: Vec<u64>,
}

impl SurvivorHistogram {
    pub fn empirical_p(&self, leaders: usize) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        self.counts.get(leaders).copied().unwrap_or(0) as f64 / self.trials as f64
    }

    pub fn max_observed(&self) -> usize {
        self.counts
            .iter()
            .rposition(|&c| c > 0)
            .unwrap_or(0)
    }
}

/// Steps after which the first-epoch game has finished with high
/// probability: `⌊21 · n · ln n⌋`.
pub fn quick_phase_horizon(n: usize) -> u64 {
    (21.0 * n as f64 * (n as f64).ln()).floor() as u64
}

/// Analytic tail bound on exactly `i ≥ 2` survivors of the geometric
/// streak game: `2^(1-i)`. The game never eliminates everyone, so `i = 0`
/// has probability zero and `i = 1` carries no bound.
pub fn survivor_bound(leaders: usize) -> Option<f64> {
    (leaders >= 2).then(|| (2.0f64).powi(1 - leaders as i32))
}

/// Allowance added to an analytic bound before comparing an empirical
/// frequency against it: at least 0.05, or three binomial standard
/// deviations at the bound when trials are few.
pub fn bound_slack(bound: f64, trials: u64) -> f64 {
    let p = bound.clamp(0.0, 1.0);
    let sigma = (p * (1.0 - p) / trials.max(1) as f64).sqrt();
    (3.0 * sigma).max(0.05)
}

/// Sample the election's leader count at the quick-phase horizon over
/// `trials` independent runs.
pub fn survivor_histogram(
    n: usize,
    m: u32,
    trials: u64,
    master_seed: u64,
    jobs: usize,
) -> Result<SurvivorHistogram> {
    let params = Params::from_m(m)?;
    let probe = Pll::new(params);
    Configuration::initial(&probe, n)?;
    let horizon = quick_phase_horizon(n);
    let leader_counts = run_trials(trials, jobs, |trial| {
        let protocol = Pll::new(params);
        let mut config = Configuration::initial(&protocol, n).expect("validated above");
        let mut rng = RandomSource::with_stream(master_seed, trial);
        engine::run(
            &protocol,
            &mut config,
            &mut rng,
            horizon.max(1),
            |_| false,
            &mut NoObserver,
        )
        .expect("validated population");
        config.leader_count()
    });
    let mut counts = vec![0u64; n + 1];
    for c in leader_counts {
        counts[c] += 1;
    }
    Ok(SurvivorHistogram {
        n,
        m,
        trials,
        horizon_steps: horizon,
        counts,
    })
}

/// Empirical check of the epidemic completion bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpidemicBoundReport {
    pub n: usize,
    pub n_prime: usize,
    pub t: u64,
    /// Step budget `2·⌈n/n'⌉·t`.
    pub budget_steps: u64,
    pub trials: u64,
    /// Trials that did not infect the whole target within the budget.
    pub failures: u64,
    pub empirical_rate: f64,
    /// Tail bound `n · e^(-t/n)` on the failure probability.
    pub analytic_bound: f64,
}

impl EpidemicBoundReport {
    /// Empirical rate within the analytic bound plus statistical slack.
    pub fn passes(&self) -> bool {
        self.empirical_rate <= self.analytic_bound + bound_slack(self.analytic_bound, self.trials)
    }
}

/// Default epidemic time parameter, `⌊3 · n · ln n⌋`, which puts the
/// analytic failure bound at `n^(-2)`.
pub fn default_epidemic_t(n: usize) -> u64 {
    (3.0 * n as f64 * (n as f64).ln()).floor() as u64
}

/// Run `trials` epidemics over the first `n_prime` of `n` agents and count
/// how many fail to finish within `2·⌈n/n'⌉·t` steps.
pub fn epidemic_bound_check(
    n: usize,
    n_prime: usize,
    trials: u64,
    t: u64,
    master_seed: u64,
    jobs: usize,
) -> Result<EpidemicBoundReport> {
    // validate the geometry once before fanning out
    {
        let mut rng = RandomSource::new(0);
        simulate_epidemic(n, n_prime, &mut rng, 1)?;
    }
    let budget = 2 * (n as u64).div_ceil(n_prime as u64) * t;
    let failures = run_trials(trials, jobs, |trial| {
        let mut rng = RandomSource::with_stream(master_seed, trial);
        match simulate_epidemic(n, n_prime, &mut rng, budget.max(1)).expect("validated geometry") {
            EpidemicOutcome::Completed { .. } => 0u64,
            EpidemicOutcome::TimedOut { .. } => 1u64,
        }
    })
    .into_iter()
    .sum::<u64>();
    Ok(EpidemicBoundReport {
        n,
        n_prime,
        t,
        budget_steps: budget,
        trials,
        failures,
        empirical_rate: if trials == 0 {
            0.0
        } else {
            failures as f64 / trials as f64
        },
        analytic_bound: n as f64 * (-(t as f64) / n as f64).exp(),
    })
}

/// Exhaustive state counts for each size knowledge in `ms`.
pub fn count_states_report(ms: &[u32]) -> Result<Vec<StateCount>> {
    ms.iter()
        .map(|&m| Ok(pll::count_states(&Params::from_m(m)?)))
        .collect()
}

/// Run trials to convergence and return the configuration at the first
/// step with a single leader. Streams that time out are skipped; at most
/// `10 * count` streams are tried.
pub fn converged_configurations<P: Protocol>(
    protocol: &P,
    n: usize,
    count: u64,
    master_seed: u64,
    max_steps: u64,
) -> Result<Vec<Vec<P::State>>> {
    let mut out = Vec::new();
    let mut stream = 0u64;
    while (out.len() as u64) < count && stream < count.saturating_mul(10).max(10) {
        let mut config = Configuration::initial(protocol, n)?;
        let mut rng = RandomSource::with_stream(master_seed, stream);
        let outcome = engine::run(
            protocol,
            &mut config,
            &mut rng,
            max_steps,
            |c| c.leader_count() == 1,
            &mut NoObserver,
        )?;
        if outcome.kind == StopKind::Condition {
            out.push(config.states().to_vec());
        }
        stream += 1;
    }
    Ok(out)
}

/// Map trial indices through `run_one`, optionally across threads.
///
/// Results are merged by trial index, so the output is identical for every
/// `jobs` value; each trial must derive all randomness from its index.
pub fn run_trials<T, F>(trials: u64, jobs: usize, run_one: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    if trials == 0 {
        return Vec::new();
    }
    let jobs = jobs.clamp(1, trials.min(256) as usize);
    if jobs == 1 {
        return (0..trials).map(run_one).collect();
    }
    let chunk = trials.div_ceil(jobs as u64);
    let mut chunks: Vec<Vec<T>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..jobs as u64)
            .map(|j| {
                let run_one = &run_one;
                scope.spawn(move || {
                    let lo = j * chunk;
                    let hi = ((j + 1) * chunk).min(trials);
                    (lo..hi).map(run_one).collect::<Vec<T>>()
                })
            })
            .collect();
        chunks = handles
            .into_iter()
            .map(|h| h.join().expect("trial worker panicked"))
            .collect();
    });
    chunks.into_iter().flatten().collect()
}
