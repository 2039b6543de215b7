//! Scripted misbehaviour for simulation runs.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::claim::Address;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultMode {
    #[default]
    Honest,
    /// Receipt issued, pair never registered.
    DropRequests,
    /// Pair registered under a different topic.
    CorruptTopic,
    /// Pair registered, bytes never stored or replicated.
    DropReplicas,
}

impl FaultMode {
    pub const ALL: [FaultMode; 4] =
        [FaultMode::Honest, FaultMode::DropRequests, FaultMode::CorruptTopic, FaultMode::DropReplicas];

    pub fn as_str(self) -> &'static str {
        match self {
            FaultMode::Honest => "honest",
            FaultMode::DropRequests => "drop_requests",
            FaultMode::CorruptTopic => "corrupt_topic",
            FaultMode::DropReplicas => "drop_replicas",
        }
    }
}

impl fmt::Display for FaultMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FaultMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| format!("unknown fault mode {s:?}"))
    }
}

/// Which requests a fault applies to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultTrigger {
    Always,
    Probability(f64),
    Clients(BTreeSet<Address>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultProfile {
    pub mode: FaultMode,
    pub trigger: FaultTrigger,
}

impl Default for FaultProfile {
    fn default() -> Self {
        Self::honest()
    }
}

impl FaultProfile {
    pub fn honest() -> Self {
        Self { mode: FaultMode::Honest, trigger: FaultTrigger::Always }
    }

    pub fn always(mode: FaultMode) -> Self {
        Self { mode, trigger: FaultTrigger::Always }
    }

    pub fn with_probability(mode: FaultMode, p: f64) -> Self {
        Self { mode, trigger: FaultTrigger::Probability(p.clamp(0.0, 1.0)) }
    }

    pub fn is_honest(&self) -> bool {
        self.mode == FaultMode::Honest
    }

    /// Decides whether the request from `client` is tampered with.
    /// Honest profiles never consume randomness.
    pub fn triggers<R: Rng>(&self, client: &Address, rng: &mut R) -> bool {
        if self.is_honest() {
            return false;
        }
        match &self.trigger {
            FaultTrigger::Always => true,
            FaultTrigger::Probability(p) => rng.gen_bool(p.clamp(0.0, 1.0)),
            FaultTrigger::Clients(set) => set.contains(client),
        }
    }
}
