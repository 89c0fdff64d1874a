//! Uniform read access to protocol states for the analysis layer.
//!
//! Both election protocols share the same synchronization skeleton (colors,
//! epochs, timers, per-epoch game variables); the analysis predicates and
//! invariant observers are written once against this trait.

use crate::pll::{GroupVars, PllState, Status};
use crate::pll_sym::{Coin, SymState, SymStatus};

/// Broad role classification, ignoring protocol-specific sub-states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Still in the status-assignment dance.
    Undecided,
    Candidate,
    Timer,
}

pub trait AgentView {
    fn is_leader(&self) -> bool;
    fn color(&self) -> u8;
    fn epoch(&self) -> u8;
    fn init(&self) -> u8;
    fn role(&self) -> Role;
    fn timer_count(&self) -> Option<u32>;
    /// `(level, done)` for epoch-1 candidates.
    fn quick_vars(&self) -> Option<(u32, bool)>;
    /// `(nonce, bits)` for epoch-2/3 candidates.
    fn tournament_vars(&self) -> Option<(u32, u32)>;
    fn backup_level(&self) -> Option<u32>;
    /// Coin status for followers of the symmetric variant.
    fn coin(&self) -> Option<Coin>;
    /// Whole-state structural consistency.
    fn consistent(&self) -> bool;
}

fn group_projections(group: &GroupVars) -> (Option<u32>, Option<(u32, bool)>, Option<(u32, u32)>, Option<u32>) {
    match *group {
        GroupVars::None => (None, None, None, None),
        GroupVars::Timer { count } => (Some(count), None, None, None),
        GroupVars::Quick { level, done } => (None, Some((level, done)), None, None),
        GroupVars::Tournament { nonce, bits } => (None, None, Some((nonce, bits)), None),
        GroupVars::Backup { level } => (None, None, None, Some(level)),
    }
}

impl AgentView for PllState {
    fn is_leader(&self) -> bool {
        self.leader
    }

    fn color(&self) -> u8 {
        self.color
    }

    fn epoch(&self) -> u8 {
        self.epoch
    }

    fn init(&self) -> u8 {
        self.init
    }

    fn role(&self) -> Role {
        match self.status {
            Status::Unassigned => Role::Undecided,
            Status::Candidate => Role::Candidate,
            Status::Timer => Role::Timer,
        }
    }

    fn timer_count(&self) -> Option<u32> {
        group_projections(&self.group).0
    }

    fn quick_vars(&self) -> Option<(u32, bool)> {
        group_projections(&self.group).1
    }

    fn tournament_vars(&self) -> Option<(u32, u32)> {
        group_projections(&self.group).2
    }

    fn backup_level(&self) -> Option<u32> {
        group_projections(&self.group).3
    }

    fn coin(&self) -> Option<Coin> {
        None
    }

    fn consistent(&self) -> bool {
        self.group_consistent()
    }
}

impl AgentView for SymState {
    fn is_leader(&self) -> bool {
        self.leader
    }

    fn color(&self) -> u8 {
        self.color
    }

    fn epoch(&self) -> u8 {
        self.epoch
    }

    fn init(&self) -> u8 {
        self.init
    }

    fn role(&self) -> Role {
        match self.status {
            SymStatus::Unassigned | SymStatus::Primed => Role::Undecided,
            SymStatus::Candidate => Role::Candidate,
            SymStatus::Timer => Role::Timer,
        }
    }

    fn timer_count(&self) -> Option<u32> {
        group_projections(&self.group).0
    }

    fn quick_vars(&self) -> Option<(u32, bool)> {
        group_projections(&self.group).1
    }

    fn tournament_vars(&self) -> Option<(u32, u32)> {
        group_projections(&self.group).2
    }

    fn backup_level(&self) -> Option<u32> {
        group_projections(&self.group).3
    }

    fn coin(&self) -> Option<Coin> {
        self.coin
    }

    fn consistent(&self) -> bool {
        self.structurally_consistent()
    }
}
