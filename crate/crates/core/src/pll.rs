//! Leader election with logarithmically many states per agent.
//!
//! Every agent starts as a leader. A first meeting splits the population
//! into *candidates* (which compete for leadership) and *timers* (which
//! drive a shared count-up clock). The clock partitions an execution into
//! four epochs, each synchronized by a color wave that spreads epidemically:
//!
//! 1. quick elimination — every candidate leader plays a geometric coin
//!    game; only the longest head streak survives;
//! 2. and 3. tournament — surviving leaders draw uniform nonces bit by bit;
//!    only the largest nonce survives (run twice with fresh nonces);
//! 4. backup — leaders climb a level ladder on clock ticks, the highest
//!    level spreads and demotes stragglers, and two leaders that still meet
//!    resolve on the spot.
//!
//! With size knowledge `m ≥ log2 n` the caps below keep each epoch long
//! enough for the relevant epidemic to finish, and one leader remains after
//! logarithmic parallel time in expectation. The number of distinct agent
//! states grows linearly in `m`.

use serde::Serialize;

use crate::engine::{Output, Protocol};
use crate::error::{Error, Result};

/// Highest epoch; the backup stage never ends.
pub const EPOCH_MAX: u8 = 4;

/// Protocol constants derived from the population-size knowledge `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Params {
    m: u32,
    level_cap: u32,
    count_cap: u32,
    nonce_bits: u32,
}

impl Params {
    /// Derive all caps from `m`: level caps `5m`, timer modulus `41m`, and
    /// `⌈(2/3)·log2 m⌉` nonce bits per tournament.
    pub fn from_m(m: u32) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidKnowledge { m });
        }
        Ok(Self {
            m,
            level_cap: 5 * m,
            count_cap: 41 * m,
            nonce_bits: nonce_bits_for(m),
        })
    }

    /// Parameters for a concrete population, using `m = max(2, ⌈log2 n⌉)`.
    pub fn for_population(n: usize) -> Self {
        Self::from_m(suggest_m(n)).expect("suggested m is at least 2")
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Cap on the quick-elimination and backup level ladders (`5m`).
    pub fn level_cap(&self) -> u32 {
        self.level_cap
    }

    /// Timer modulus (`41m`); one full cycle emits one clock tick.
    pub fn count_cap(&self) -> u32 {
        self.count_cap
    }

    /// Number of coin flips per tournament nonce.
    pub fn nonce_bits(&self) -> u32 {
        self.nonce_bits
    }

    /// Number of distinct nonce values, `2^nonce_bits`.
    pub fn nonce_values(&self) -> u32 {
        1 << self.nonce_bits
    }
}

/// Smallest `p` with `8^p ≥ m²`, i.e. `⌈(2/3)·log2 m⌉` in exact integer
/// arithmetic (floating point would misround the boundary cases).
fn nonce_bits_for(m: u32) -> u32 {
    let target = u128::from(m) * u128::from(m);
    let mut p = 0;
    let mut pow = 1u128;
    while pow < target {
        pow *= 8;
        p += 1;
    }
    p
}

/// Default size knowledge for a population of `n`: `max(2, ⌈log2 n⌉)`.
pub fn suggest_m(n: usize) -> u32 {
    crate::engine::ceil_log2(n).max(2)
}

/// Role an agent acquires at its first meeting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    /// Has not interacted yet.
    Unassigned,
    /// Competes for leadership; carries the per-epoch game variables.
    Candidate,
    /// Drives the shared clock; carries the count-up timer.
    Timer,
}

/// Per-group variables; the active variant is pinned by `(status, epoch)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupVars {
    /// Unassigned agents carry nothing extra.
    None,
    /// Timers count interactions modulo the timer cap.
    Timer { count: u32 },
    /// Epoch-1 candidates: head streak and whether the streak has ended.
    Quick { level: u32, done: bool },
    /// Epoch-2/3 candidates: nonce under construction and bits appended.
    Tournament { nonce: u32, bits: u32 },
    /// Epoch-4 candidates: backup level ladder.
    Backup { level: u32 },
}

/// Full per-agent state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PllState {
    pub leader: bool,
    /// Transient: raised while an interaction is being evaluated when the
    /// agent's clock wrapped or it adopted a fresh color, cleared at the
    /// start of the next interaction it participates in.
    pub tick: bool,
    pub status: Status,
    /// Current stage, 1 through [`EPOCH_MAX`]; never decreases.
    pub epoch: u8,
    /// Last epoch whose group variables were initialized.
    pub init: u8,
    /// Synchronization color, mod 3.
    pub color: u8,
    pub group: GroupVars,
}

impl PllState {
    /// Group variables are consistent with `(status, epoch)`.
    pub fn group_consistent(&self) -> bool {
        match self.status {
            Status::Unassigned => {
                self.epoch == 1 && matches!(self.group, GroupVars::None)
            }
            Status::Timer => matches!(self.group, GroupVars::Timer { .. }),
            Status::Candidate => match self.epoch {
                1 => matches!(self.group, GroupVars::Quick { .. }),
                2 | 3 => matches!(self.group, GroupVars::Tournament { .. }),
                4 => matches!(self.group, GroupVars::Backup { .. }),
                _ => false,
            },
        }
    }
}

/// The protocol, instantiated for concrete [`Params`].
#[derive(Debug, Clone)]
pub struct Pll {
    params: Params,
}

impl Pll {
    pub fn new(params: Params) -> Self {
        Self { params }
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    /// First phase: a meeting of two unassigned agents makes the initiator a
    /// candidate (still a leader, about to flip coins) and the responder a
    /// timer follower; an unassigned agent meeting a decided one joins as a
    /// candidate follower that skips the coin game.
    pub fn assign_status(&self, a0: &mut PllState, a1: &mut PllState) {
        match (a0.status, a1.status) {
            (Status::Unassigned, Status::Unassigned) => {
                a0.status = Status::Candidate;
                a0.group = GroupVars::Quick {
                    level: 0,
                    done: false,
                };
                a0.leader = true;
                a1.status = Status::Timer;
                a1.group = GroupVars::Timer { count: 0 };
                a1.leader = false;
            }
            (Status::Unassigned, _) => join_as_late_candidate(a0),
            (_, Status::Unassigned) => join_as_late_candidate(a1),
            _ => {}
        }
    }

    /// Clock phase: every timer advances its count; a wrap moves the timer
    /// to the next color and raises its tick. Afterwards the fresher color
    /// spreads: an agent exactly one color behind its partner adopts the
    /// partner's color, raises its tick, and (if a timer) restarts counting.
    pub fn count_up(&self, a0: &mut PllState, a1: &mut PllState) {
        let cap = self.params.count_cap;
        for a in [&mut *a0, &mut *a1] {
            if let GroupVars::Timer { count } = &mut a.group {
                *count = (*count + 1) % cap;
                if *count == 0 {
                    a.color = (a.color + 1) % 3;
                    a.tick = true;
                }
            }
        }
        if a1.color == (a0.color + 1) % 3 {
            adopt_color(a0, a1.color);
        } else if a0.color == (a1.color + 1) % 3 {
            adopt_color(a1, a0.color);
        }
    }

    /// Epoch-1 game. A leader still flipping treats an interaction with a
    /// follower as a coin flip: initiating counts as heads (extend the
    /// streak, saturating at the cap), responding as tails (stop flipping).
    /// Candidates that both stopped then race: the lower streak drops out
    /// of the leadership and copies the higher one, spreading the maximum.
    pub fn quick_elimination(&self, a0: &mut PllState, a1: &mut PllState) {
        let cap = self.params.level_cap;
        if a0.leader && !a1.leader {
            if let GroupVars::Quick { level, done: false } = &mut a0.group {
                *level = (*level + 1).min(cap);
            }
        } else if a1.leader && !a0.leader {
            if let GroupVars::Quick { done, .. } = &mut a1.group {
                *done = true;
            }
        }
        if a0.status == Status::Candidate && a1.status == Status::Candidate {
            if let (
                GroupVars::Quick {
                    level: l0,
                    done: true,
                },
                GroupVars::Quick {
                    level: l1,
                    done: true,
                },
            ) = (a0.group, a1.group)
            {
                if l0 < l1 {
                    a0.leader = false;
                    a0.group = GroupVars::Quick {
                        level: l1,
                        done: true,
                    };
                } else if l1 < l0 {
                    a1.leader = false;
                    a1.group = GroupVars::Quick {
                        level: l0,
                        done: true,
                    };
                }
            }
        }
    }

    /// Epoch-2/3 game. A leader that still owes nonce bits appends its role
    /// bit (0 as initiator, 1 as responder). Once both candidates hold
    /// complete nonces the larger one wins and spreads; the smaller drops
    /// out of the leadership.
    pub fn tournament(&self, a0: &mut PllState, a1: &mut PllState) {
        let phi = self.params.nonce_bits;
        if a0.leader && !a1.leader {
            if let GroupVars::Tournament { nonce, bits } = &mut a0.group {
                if *bits < phi {
                    *nonce *= 2;
                    *bits = (*bits + 1).min(phi);
                }
            }
        } else if a1.leader && !a0.leader {
            if let GroupVars::Tournament { nonce, bits } = &mut a1.group {
                if *bits < phi {
                    *nonce = 2 * *nonce + 1;
                    *bits = (*bits + 1).min(phi);
                }
            }
        }
        if a0.status == Status::Candidate && a1.status == Status::Candidate {
            if let (
                GroupVars::Tournament {
                    nonce: r0,
                    bits: b0,
                },
                GroupVars::Tournament {
                    nonce: r1,
                    bits: b1,
                },
            ) = (a0.group, a1.group)
            {
                if b0 == phi && b1 == phi {
                    if r0 < r1 {
                        a0.leader = false;
                        a0.group = GroupVars::Tournament { nonce: r1, bits: b0 };
                    } else if r1 < r0 {
                        a1.leader = false;
                        a1.group = GroupVars::Tournament { nonce: r0, bits: b1 };
                    }
                }
            }
        }
    }

    /// Epoch-4 game. A leader initiator whose tick was raised in this very
    /// interaction climbs one backup level when facing a follower (its coin
    /// flip for this clock cycle; responding is tails and does nothing).
    /// The highest level spreads through candidates and demotes stragglers;
    /// if both participants still lead after that, the responder yields.
    pub fn back_up(&self, a0: &mut PllState, a1: &mut PllState) {
        let cap = self.params.level_cap;
        if a0.tick && a0.leader && !a1.leader {
            if let GroupVars::Backup { level } = &mut a0.group {
                *level = (*level + 1).min(cap);
            }
        }
        if a0.status == Status::Candidate && a1.status == Status::Candidate {
            if let (GroupVars::Backup { level: l0 }, GroupVars::Backup { level: l1 }) =
                (a0.group, a1.group)
            {
                if l0 < l1 {
                    a0.group = GroupVars::Backup { level: l1 };
                    a0.leader = false;
                } else if l1 < l0 {
                    a1.group = GroupVars::Backup { level: l0 };
                    a1.leader = false;
                }
            }
        }
        if a0.leader && a1.leader {
            a1.leader = false;
        }
    }
}

/// An unassigned agent meeting a decided one becomes a candidate follower
/// that never flips coins.
fn join_as_late_candidate(a: &mut PllState) {
    a.status = Status::Candidate;
    a.group = GroupVars::Quick {
        level: 0,
        done: true,
    };
    a.leader = false;
}

fn adopt_color(a: &mut PllState, color: u8) {
    a.color = color;
    a.tick = true;
    if let GroupVars::Timer { count } = &mut a.group {
        *count = 0;
    }
}

impl Protocol for Pll {
    type State = PllState;

    fn initial_state(&self) -> PllState {
        PllState {
            leader: true,
            tick: false,
            status: Status::Unassigned,
            epoch: 1,
            init: 1,
            color: 0,
            group: GroupVars::None,
        }
    }

    /// One interaction, phase by phase: status assignment, tick reset, the
    /// clock, epoch advancement (tick raisers move up, then both
    /// participants meet at the maximum), group-variable initialization for
    /// freshly entered epochs, and finally the game of the shared epoch.
    fn transition(&self, s0: &PllState, s1: &PllState) -> (PllState, PllState) {
        let (mut a0, mut a1) = (*s0, *s1);
        self.assign_status(&mut a0, &mut a1);
        a0.tick = false;
        a1.tick = false;
        self.count_up(&mut a0, &mut a1);
        for a in [&mut a0, &mut a1] {
            if a.tick {
                a.epoch = (a.epoch + 1).min(EPOCH_MAX);
            }
        }
        let shared = a0.epoch.max(a1.epoch);
        a0.epoch = shared;
        a1.epoch = shared;
        for a in [&mut a0, &mut a1] {
            if a.epoch > a.init {
                if a.status == Status::Candidate {
                    match a.epoch {
                        2 | 3 => a.group = GroupVars::Tournament { nonce: 0, bits: 0 },
                        4 => a.group = GroupVars::Backup { level: 0 },
                        _ => {}
                    }
                }
                a.init = a.epoch;
            }
        }
        debug_assert!((1..=EPOCH_MAX).contains(&shared));
        match shared {
            1 => self.quick_elimination(&mut a0, &mut a1),
            2 | 3 => self.tournament(&mut a0, &mut a1),
            _ => self.back_up(&mut a0, &mut a1),
        }
        (a0, a1)
    }

    fn output(&self, s: &PllState) -> Output {
        if s.leader {
            Output::Leader
        } else {
            Output::Follower
        }
    }

    fn state_space(&self) -> Option<Vec<PllState>> {
        Some(enumerate_states(&self.params))
    }

    fn epoch_of(&self, state: &PllState) -> Option<u8> {
        Some(state.epoch)
    }
}

/// Materialize every state consistent with the `(status, epoch)` ↔ group
/// pinning: unassigned states sit in epoch 1 with no extras, timers carry a
/// count in any epoch, candidates carry the group of their epoch. The
/// remaining common variables range freely over their domains.
pub fn enumerate_states(params: &Params) -> Vec<PllState> {
    let mut out = Vec::new();
    let bools = [false, true];
    for leader in bools {
        for tick in bools {
            for init in 1..=EPOCH_MAX {
                for color in 0..3u8 {
                    let base = |status, epoch, group| PllState {
                        leader,
                        tick,
                        status,
                        epoch,
                        init,
                        color,
                        group,
                    };
                    out.push(base(Status::Unassigned, 1, GroupVars::None));
                    for epoch in 1..=EPOCH_MAX {
                        for count in 0..params.count_cap() {
                            out.push(base(Status::Timer, epoch, GroupVars::Timer { count }));
                        }
                    }
                    for level in 0..=params.level_cap() {
                        for done in bools {
                            out.push(base(Status::Candidate, 1, GroupVars::Quick { level, done }));
                        }
                    }
                    for epoch in [2, 3] {
                        for nonce in 0..params.nonce_values() {
                            for bits in 0..=params.nonce_bits() {
                                out.push(base(
                                    Status::Candidate,
                                    epoch,
                                    GroupVars::Tournament { nonce, bits },
                                ));
                            }
                        }
                    }
                    for level in 0..=params.level_cap() {
                        out.push(base(Status::Candidate, 4, GroupVars::Backup { level }));
                    }
                }
            }
        }
    }
    out
}

/// Exhaustive state count, grouped by role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StateCount {
    pub m: u32,
    pub total: u64,
    pub unassigned: u64,
    pub timer: u64,
    pub quick: u64,
    pub tournament: u64,
    pub backup: u64,
}

/// Count states by exhaustive enumeration.
pub fn count_states(params: &Params) -> StateCount {
    let mut count = StateCount {
        m: params.m(),
        total: 0,
        unassigned: 0,
        timer: 0,
        quick: 0,
        tournament: 0,
        backup: 0,
    };
    for state in enumerate_states(params) {
        count.total += 1;
        match state.group {
            GroupVars::None => count.unassigned += 1,
            GroupVars::Timer { .. } => count.timer += 1,
            GroupVars::Quick { .. } => count.quick += 1,
            GroupVars::Tournament { .. } => count.tournament += 1,
            GroupVars::Backup { .. } => count.backup += 1,
        }
    }
    count
}
