//! Constant-space leader election: every agent starts as a leader and one
//! leader yields whenever two leaders meet. Stabilizes in linear parallel
//! time; used as the slow comparison point and mirrored by the last-resort
//! rule of the backup stage.

use crate::engine::{Output, Protocol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BaselineState {
    pub leader: bool,
}

pub struct Baseline;

impl Protocol for Baseline {
    type State = BaselineState;

    fn initial_state(&self) -> BaselineState {
        BaselineState { leader: true }
    }

    fn transition(&self, s0: &BaselineState, s1: &BaselineState) -> (BaselineState, BaselineState) {
        if s0.leader && s1.leader {
            (*s0, BaselineState { leader: false })
        } else {
            (*s0, *s1)
        }
    }

    fn output(&self, s: &BaselineState) -> Output {
        if s.leader {
            Output::Leader
        } else {
            Output::Follower
        }
    }

    fn state_space(&self) -> Option<Vec<BaselineState>> {
        Some(vec![
            BaselineState { leader: true },
            BaselineState { leader: false },
        ])
    }
}
