//! Discrete action vocabulary and fixed-length action blocks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of actions predicted per model call.
pub const DEFAULT_BLOCK_LEN: usize = 4;

/// Rotation applied by a single turn action, in degrees.
pub const TURN_DEGREES: i32 = 15;

/// Translation applied by a single forward action, in meters.
pub const FORWARD_METERS: f64 = 0.25;

/// One of the four discrete navigation actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum ActionId {
    Stop = 0,
    TurnLeft = 1,
    TurnRight = 2,
    Forward = 3,
}

impl ActionId {
    pub const ALL: [ActionId; 4] = [Self::Stop, Self::TurnLeft, Self::TurnRight, Self::Forward];
    pub const COUNT: usize = 4;

    /// The same action seen in a mirror: left and right turns swap.
    pub fn mirrored(self) -> Self {
        match self {
            Self::TurnLeft => Self::TurnRight,
            Self::TurnRight => Self::TurnLeft,
            a => a,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Self> {
        Self::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::InvalidAction(i.to_string()))
    }

    /// Canonical name used in prompts and logs.
    pub fn display_name(self) -> &'static str {
        match self {
            Self::Stop => "stop",
            Self::TurnLeft => "turn_left_15",
            Self::TurnRight => "turn_right_15",
            Self::Forward => "move_forward_25cm",
        }
    }

    /// Longer description used in the system text.
    pub fn description(self) -> &'static str {
        match self {
            Self::Stop => "stop",
            Self::TurnLeft => "turn left 15 degrees",
            Self::TurnRight => "turn right 15 degrees",
            Self::Forward => "move forward 25 cm",
        }
    }
}

/// Human-readable name of an action.
pub fn action_display(a: ActionId) -> &'static str {
    a.display_name()
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl FromStr for ActionId {
    type Err = Error;

    /// Accepts either the integer id or the display name.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(i) = s.parse::<usize>() {
            return Self::from_index(i);
        }
        Self::ALL
            .into_iter()
            .find(|a| a.display_name() == s)
            .ok_or_else(|| Error::InvalidAction(s.to_string()))
    }
}

impl TryFrom<u8> for ActionId {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        Self::from_index(v as usize)
    }
}

impl From<ActionId> for u8 {
    fn from(a: ActionId) -> u8 {
        a as u8
    }
}

/// A fixed-length run of actions in which everything after the first stop is also stop.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<ActionId>", into = "Vec<ActionId>")]
pub struct ActionBlock(Vec<ActionId>);

impl ActionBlock {
    /// Builds a block, rejecting sequences that violate the stop-suffix rule.
    pub fn new(actions: Vec<ActionId>) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::BlockLength { expected: 1, got: 0 });
        }
        if !satisfies_stop_suffix(&actions) {
            return Err(Error::InvalidAction(format!(
                "non-stop action after stop in {:?}",
                actions.iter().map(|a| a.index()).collect::<Vec<_>>()
            )));
        }
        Ok(Self(actions))
    }

    /// Builds a block of an exact length.
    pub fn with_len(actions: Vec<ActionId>, n_a: usize) -> Result<Self> {
        if actions.len() != n_a {
            return Err(Error::BlockLength { expected: n_a, got: actions.len() });
        }
        Self::new(actions)
    }

    /// Forces the stop-suffix rule: every action after the first stop becomes stop.
    pub fn from_raw(mut actions: Vec<ActionId>) -> Self {
        if let Some(first) = actions.iter().position(|&a| a == ActionId::Stop) {
            for a in &mut actions[first..] {
                *a = ActionId::Stop;
            }
        }
        Self(actions)
    }

    pub fn stop(n_a: usize) -> Self {
        Self(vec![ActionId::Stop; n_a])
    }

    pub fn actions(&self) -> &[ActionId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> Vec<u8> {
        self.0.iter().map(|&a| a.into()).collect()
    }
}

impl TryFrom<Vec<ActionId>> for ActionBlock {
    type Error = Error;

    fn try_from(v: Vec<ActionId>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ActionBlock> for Vec<ActionId> {
    fn from(b: ActionBlock) -> Self {
        b.0
    }
}

pub(crate) fn satisfies_stop_suffix(actions: &[ActionId]) -> bool {
    match actions.iter().position(|&a| a == ActionId::Stop) {
        Some(i) => actions[i..].iter().all(|&a| a == ActionId::Stop),
        None => true,
    }
}

/// Parses a whitespace-separated list of integer action ids.
pub fn parse_action_list(s: &str) -> Result<Vec<ActionId>> {
    s.split_whitespace().map(ActionId::from_str).collect()
}

pub fn format_action_list(actions: &[ActionId]) -> String {
    actions
        .iter()
        .map(|a| a.index().to_string())
        .collect::<Vec<_>>()
        .join(" ")
}
