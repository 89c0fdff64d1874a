//! Symmetric variant of the election protocol.
//!
//! A symmetric protocol may not use the initiator/responder roles when the
//! two states are equal: `p = q` must imply `p' = q'`. The base protocol
//! breaks symmetry in exactly two places, and each gets a role-free
//! replacement here:
//!
//! - *status assignment* becomes a two-letter dance. Unassigned pairs prime
//!   each other, primed pairs reset, and a mixed pair finally splits into a
//!   candidate and a timer;
//! - *coin flips* move into the followers. Every follower carries a coin
//!   status; pairs of equal fresh/stirred coins toggle, and a fresh/stirred
//!   pair anneals into one permanent heads face and one tails face, keeping
//!   the two face counts exactly equal forever. A leader flips by reading
//!   the face of the follower it meets (faces are never consumed), so the
//!   flips stay independent and exactly fair.
//!
//! The only remaining role use, the backup rule that demotes the responder
//! of a leader pair, demotes the smaller state under the derived total
//! order instead, and does nothing when the states are identical.
//!
//! Populations of two are rejected: two agents would prime and reset each
//! other forever without ever electing anything.

use crate::engine::{Output, Protocol};
use crate::pll::{GroupVars, Params, EPOCH_MAX};

/// Status for the symmetric dance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SymStatus {
    /// Has not met anyone, or was reset by a primed partner.
    Unassigned,
    /// Met another unassigned agent; ready to split on the next mixed meeting.
    Primed,
    Candidate,
    Timer,
}

/// Coin status carried by every follower.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coin {
    /// Initial coin of a fresh follower.
    Fresh,
    /// Toggled form of `Fresh`.
    Stirred,
    /// Permanent heads face.
    Heads,
    /// Permanent tails face.
    Tails,
}

/// Full per-agent state of the symmetric variant. The derived `Ord` is the
/// canonical total order used by the backup tie-break.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymState {
    pub leader: bool,
    pub tick: bool,
    pub status: SymStatus,
    pub epoch: u8,
    pub init: u8,
    pub color: u8,
    /// Present exactly on followers.
    pub coin: Option<Coin>,
    pub group: GroupVars,
}

impl SymState {
    /// Group variables match `(status, epoch)` and the coin is carried by
    /// followers only.
    pub fn structurally_consistent(&self) -> bool {
        let group_ok = match self.status {
            SymStatus::Unassigned | SymStatus::Primed => {
                self.epoch == 1 && matches!(self.group, GroupVars::None)
            }
            SymStatus::Timer => matches!(self.group, GroupVars::Timer { .. }),
            SymStatus::Candidate => match self.epoch {
                1 => matches!(self.group, GroupVars::Quick { .. }),
                2 | 3 => matches!(self.group, GroupVars::Tournament { .. }),
                4 => matches!(self.group, GroupVars::Backup { .. }),
                _ => false,
            },
        };
        group_ok && (self.coin.is_some() != self.leader)
    }
}

/// The symmetric protocol, instantiated for concrete [`Params`].
#[derive(Debug, Clone)]
pub struct PllSym {
    params: Params,
}

impl PllSym {
    pub fn new(params: Params) -> Self {
        Self { params }
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    /// Role-free status assignment: unassigned pairs prime, primed pairs
    /// reset, a mixed pair splits (the unassigned side becomes the playing
    /// candidate, the primed side the timer), and any undecided agent
    /// meeting a decided one joins as a candidate follower.
    pub fn sym_assign_status(&self, a0: &mut SymState, a1: &mut SymState) {
        use SymStatus::*;
        match (a0.status, a1.status) {
            (Unassigned, Unassigned) => {
                a0.status = Primed;
                a1.status = Primed;
            }
            (Primed, Primed) => {
                a0.status = Unassigned;
                a1.status = Unassigned;
            }
            (Unassigned, Primed) => split_pair(a0, a1),
            (Primed, Unassigned) => split_pair(a1, a0),
            (Unassigned | Primed, _) => join_as_late_candidate(a0),
            (_, Unassigned | Primed) => join_as_late_candidate(a1),
            _ => {}
        }
    }

    /// Coin dance between two followers: equal fresh or stirred coins
    /// toggle together; a fresh/stirred pair anneals into permanent faces,
    /// the fresh side showing heads. Faces are inert.
    pub fn sym_coin_mix(&self, a0: &mut SymState, a1: &mut SymState) {
        if a0.leader || a1.leader {
            return;
        }
        match (a0.coin, a1.coin) {
            (Some(Coin::Fresh), Some(Coin::Fresh)) => {
                a0.coin = Some(Coin::Stirred);
                a1.coin = Some(Coin::Stirred);
            }
            (Some(Coin::Stirred), Some(Coin::Stirred)) => {
                a0.coin = Some(Coin::Fresh);
                a1.coin = Some(Coin::Fresh);
            }
            (Some(Coin::Fresh), Some(Coin::Stirred)) => {
                a0.coin = Some(Coin::Heads);
                a1.coin = Some(Coin::Tails);
            }
            (Some(Coin::Stirred), Some(Coin::Fresh)) => {
                a0.coin = Some(Coin::Tails);
                a1.coin = Some(Coin::Heads);
            }
            _ => {}
        }
    }

    /// Clock phase, identical to the asymmetric protocol.
    pub fn count_up(&self, a0: &mut SymState, a1: &mut SymState) {
        let cap = self.params.count_cap();
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

    /// Epoch-1 game with coin reads: a leader still flipping that meets a
    /// follower showing heads extends its streak, tails stops it, and a
    /// fresh or stirred coin means no flip happens this interaction.
    pub fn quick_elimination(&self, a0: &mut SymState, a1: &mut SymState) {
        let cap = self.params.level_cap();
        let flip = |me: &mut SymState, other_face: Option<bool>| {
            if let GroupVars::Quick { level, done } = &mut me.group {
                if !*done {
                    match other_face {
                        Some(true) => *level = (*level + 1).min(cap),
                        Some(false) => *done = true,
                        None => {}
                    }
                }
            }
        };
        if a0.leader && !a1.leader {
            flip(a0, coin_face(a1));
        } else if a1.leader && !a0.leader {
            flip(a1, coin_face(a0));
        }
        if a0.status == SymStatus::Candidate && a1.status == SymStatus::Candidate {
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
                    demote(a0);
                    a0.group = GroupVars::Quick {
                        level: l1,
                        done: true,
                    };
                } else if l1 < l0 {
                    demote(a1);
                    a1.group = GroupVars::Quick {
                        level: l0,
                        done: true,
                    };
                }
            }
        }
    }

    /// Epoch-2/3 game with coin reads: heads appends a 0 bit, tails a 1 bit,
    /// fresh or stirred coins append nothing.
    pub fn tournament(&self, a0: &mut SymState, a1: &mut SymState) {
        let phi = self.params.nonce_bits();
        let flip = |me: &mut SymState, other_face: Option<bool>| {
            if let GroupVars::Tournament { nonce, bits } = &mut me.group {
                if *bits < phi {
                    match other_face {
                        Some(true) => {
                            *nonce *= 2;
                            *bits += 1;
                        }
                        Some(false) => {
                            *nonce = 2 * *nonce + 1;
                            *bits += 1;
                        }
                        None => {}
                    }
                }
            }
        };
        if a0.leader && !a1.leader {
            flip(a0, coin_face(a1));
        } else if a1.leader && !a0.leader {
            flip(a1, coin_face(a0));
        }
        if a0.status == SymStatus::Candidate && a1.status == SymStatus::Candidate {
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
                        demote(a0);
                        a0.group = GroupVars::Tournament { nonce: r1, bits: b0 };
                    } else if r1 < r0 {
                        demote(a1);
                        a1.group = GroupVars::Tournament { nonce: r0, bits: b1 };
                    }
                }
            }
        }
    }

    /// Epoch-4 game: a ticked leader climbs when the follower it meets shows
    /// heads; the highest level spreads and demotes; and two surviving
    /// leaders resolve by demoting the smaller state under the canonical
    /// order (identical states stay untouched, as symmetry requires).
    pub fn back_up(&self, a0: &mut SymState, a1: &mut SymState) {
        let cap = self.params.level_cap();
        let climb = |me: &mut SymState, other_face: Option<bool>| {
            if me.tick && other_face == Some(true) {
                if let GroupVars::Backup { level } = &mut me.group {
                    *level = (*level + 1).min(cap);
                }
            }
        };
        if a0.leader && !a1.leader {
            climb(a0, coin_face(a1));
        } else if a1.leader && !a0.leader {
            climb(a1, coin_face(a0));
        }
        if a0.status == SymStatus::Candidate && a1.status == SymStatus::Candidate {
            if let (GroupVars::Backup { level: l0 }, GroupVars::Backup { level: l1 }) =
                (a0.group, a1.group)
            {
                if l0 < l1 {
                    a0.group = GroupVars::Backup { level: l1 };
                    demote(a0);
                } else if l1 < l0 {
                    a1.group = GroupVars::Backup { level: l0 };
                    demote(a1);
                }
            }
        }
        if a0.leader && a1.leader {
            match (*a0).cmp(a1) {
                std::cmp::Ordering::Less => demote(a0),
                std::cmp::Ordering::Greater => demote(a1),
                std::cmp::Ordering::Equal => {}
            }
        }
    }
}

/// Heads/tails reading of a follower's coin; fresh and stirred coins carry
/// no flip.
fn coin_face(a: &SymState) -> Option<bool> {
    match a.coin {
        Some(Coin::Heads) => Some(true),
        Some(Coin::Tails) => Some(false),
        _ => None,
    }
}

/// A leader leaving the leadership becomes a follower with a fresh coin.
/// Agents that already follow keep their coin: faces must never vanish, or
/// the heads/tails balance would break.
fn demote(a: &mut SymState) {
    if a.leader {
        a.leader = false;
        a.coin = Some(Coin::Fresh);
    }
}

/// Mixed dance pair: the unassigned side starts playing, the primed side
/// starts timing.
fn split_pair(unassigned: &mut SymState, primed: &mut SymState) {
    unassigned.status = SymStatus::Candidate;
    unassigned.group = GroupVars::Quick {
        level: 0,
        done: false,
    };
    unassigned.leader = true;
    unassigned.coin = None;
    primed.status = SymStatus::Timer;
    primed.group = GroupVars::Timer { count: 0 };
    demote(primed);
}

fn join_as_late_candidate(a: &mut SymState) {
    a.status = SymStatus::Candidate;
    a.group = GroupVars::Quick {
        level: 0,
        done: true,
    };
    demote(a);
}

fn adopt_color(a: &mut SymState, color: u8) {
    a.color = color;
    a.tick = true;
    if let GroupVars::Timer { count } = &mut a.group {
        *count = 0;
    }
}

impl Protocol for PllSym {
    type State = SymState;

    fn initial_state(&self) -> SymState {
        SymState {
            leader: true,
            tick: false,
            status: SymStatus::Unassigned,
            epoch: 1,
            init: 1,
            color: 0,
            coin: None,
            group: GroupVars::None,
        }
    }

    fn transition(&self, s0: &SymState, s1: &SymState) -> (SymState, SymState) {
        let (mut a0, mut a1) = (*s0, *s1);
        self.sym_assign_status(&mut a0, &mut a1);
        self.sym_coin_mix(&mut a0, &mut a1);
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
                if a.status == SymStatus::Candidate {
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

    fn output(&self, s: &SymState) -> Output {
        if s.leader {
            Output::Leader
        } else {
            Output::Follower
        }
    }

    fn state_space(&self) -> Option<Vec<SymState>> {
        Some(enumerate_states(&self.params))
    }

    /// Two agents would prime and reset each other forever.
    fn min_population(&self) -> usize {
        3
    }

    fn epoch_of(&self, state: &SymState) -> Option<u8> {
        Some(state.epoch)
    }
}

/// Materialize every structurally consistent state: group variables pinned
/// by `(status, epoch)`, coins on followers only, the remaining common
/// variables free.
pub fn enumerate_states(params: &Params) -> Vec<SymState> {
    let mut out = Vec::new();
    let bools = [false, true];
    let coins = [Coin::Fresh, Coin::Stirred, Coin::Heads, Coin::Tails];
    for leader in bools {
        let coin_options: Vec<Option<Coin>> = if leader {
            vec![None]
        } else {
            coins.iter().copied().map(Some).collect()
        };
        for coin in coin_options {
            for tick in bools {
                for init in 1..=EPOCH_MAX {
                    for color in 0..3u8 {
                        let base = |status, epoch, group| SymState {
                            leader,
                            tick,
                            status,
                            epoch,
                            init,
                            color,
                            coin,
                            group,
                        };
                        out.push(base(SymStatus::Unassigned, 1, GroupVars::None));
                        out.push(base(SymStatus::Primed, 1, GroupVars::None));
                        for epoch in 1..=EPOCH_MAX {
                            for count in 0..params.count_cap() {
                                out.push(base(SymStatus::Timer, epoch, GroupVars::Timer { count }));
                            }
                        }
                        for level in 0..=params.level_cap() {
                            for done in bools {
                                out.push(base(
                                    SymStatus::Candidate,
                                    1,
                                    GroupVars::Quick { level, done },
                                ));
                            }
                        }
                        for epoch in [2, 3] {
                            for nonce in 0..params.nonce_values() {
                                for bits in 0..=params.nonce_bits() {
                                    out.push(base(
                                        SymStatus::Candidate,
                                        epoch,
                                        GroupVars::Tournament { nonce, bits },
                                    ));
                                }
                            }
                        }
                        for level in 0..=params.level_cap() {
                            out.push(base(SymStatus::Candidate, 4, GroupVars::Backup { level }));
                        }
                    }
                }
            }
        }
    }
    out
}
