//! Scenario files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::cost::ActivityStats;
use crate::publisher::FaultMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadSpec {
    /// Distinct article URLs.
    pub n_topics: usize,
    pub issues_per_client: usize,
    /// Seconds between a client's successive article views.
    pub fetch_interval: u64,
    /// Views per client after issuance ends.
    pub fetch_rounds: usize,
    /// Interactions per minute per topic; paces issuance.
    pub interaction_rate: f64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        Self { n_topics: 30, issues_per_client: 5, fetch_interval: 10, fetch_rounds: 1, interaction_rate: 4.2 }
    }
}

/// Workload shaped after a news page's daily activity: one topic per daily
/// post, paced at the per-post interaction rate spread over a day.
pub fn replay_facebook_workload(stats: &ActivityStats) -> WorkloadSpec {
    WorkloadSpec {
        n_topics: stats.posts_per_page_day.max(0.0) as usize,
        interaction_rate: stats.interactions_per_post_day.max(0.0) / 1440.0,
        ..WorkloadSpec::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSpec {
    /// Index of the misbehaving publisher.
    pub publisher: usize,
    pub mode: FaultMode,
    #[serde(default = "always")]
    pub probability: f64,
}

fn always() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub n_clients: usize,
    /// Client `i` issues through publisher `i % n_publishers`; zero means direct issuance.
    pub n_publishers: usize,
    pub threshold: usize,
    pub max_wait: u64,
    pub copies: usize,
    /// Hard cap on simulated seconds.
    pub duration: u64,
    /// Take every client node offline when measuring availability.
    pub creators_offline: bool,
    /// Re-issue fault-affected claims through a publisher with no complaints.
    pub recovery: bool,
    /// Ledger refuses transactions during `[start, end)`.
    pub ledger_outage: Option<[u64; 2]>,
    pub workload: WorkloadSpec,
    pub faults: Vec<FaultSpec>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_clients: 60,
            n_publishers: 3,
            threshold: 100,
            max_wait: 1800,
            copies: 3,
            duration: 7 * 86_400,
            creators_offline: true,
            recovery: false,
            ledger_outage: None,
            workload: WorkloadSpec::default(),
            faults: Vec::new(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if self.n_clients == 0 {
            return bad("n_clients must be positive");
        }
        if self.threshold == 0 || self.copies == 0 {
            return bad("threshold and copies must be positive");
        }
        let w = &self.workload;
        if w.n_topics == 0 || w.fetch_interval == 0 || !(w.interaction_rate > 0.0) {
            return bad("workload rates must be positive");
        }
        for f in &self.faults {
            if f.publisher >= self.n_publishers {
                return bad("fault names a publisher that does not exist");
            }
            if !(0.0..=1.0).contains(&f.probability) {
                return bad("fault probability must lie in [0, 1]");
            }
        }
        if let Some([start, end]) = self.ledger_outage {
            if start >= end {
                return bad("ledger_outage must be [start, end) with start < end");
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, SimError> {
        let config: Self = toml::from_str(text).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = fs::read_to_string(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn min_threshold(&self) -> usize {
        if self.n_publishers == 0 { 1 } else { self.threshold }
    }
}
