//! Seeded multi-node scenarios.
//!
//! One tick is one simulated second. Every random choice flows from the
//! scenario seed, so equal seeds give equal traces and equal reports. The
//! runner checks protocol invariants as it goes and stops with
//! [`SimError::InvariantViolation`] at the first broken one.

mod config;
mod metrics;

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::claim::{AnnotationBody, Claim, Identity};
use crate::client::{self, AuditResult, ClientError, Whitelist};
use crate::deployment::Deployment;
use crate::ledger::ChainConfig;
use crate::link::ContentLink;
use crate::publisher::{FaultMode, FaultProfile, PublisherConfig};
use crate::receipt::IssuanceReceipt;
use crate::store::{NodeId, ReplicationPolicy};
use crate::Timestamp;

pub use config::{replay_facebook_workload, FaultSpec, ScenarioConfig, WorkloadSpec};
pub use metrics::MetricsReport;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error("invariant violated at event {event}: {message}")]
    InvariantViolation { event: usize, message: String },
    #[error("i/o: {0}")]
    Io(String),
}

/// The audit outcome a correct auditor must report for a request that had `fault` injected.
pub fn expected_audit(fault: Option<FaultMode>) -> AuditResult {
    match fault {
        None | Some(FaultMode::Honest) => AuditResult::Ok,
        Some(FaultMode::DropRequests) => AuditResult::RequestDrop,
        Some(FaultMode::CorruptTopic) => AuditResult::RequestCorruption,
        Some(FaultMode::DropReplicas) => AuditResult::ReplicaDrop,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub link: ContentLink,
    pub publisher: String,
    pub client: usize,
    /// Ground truth from the publisher's fault log.
    pub injected: Option<FaultMode>,
    pub observed: AuditResult,
    pub issued_at: Timestamp,
    pub deadline: Timestamp,
    pub detected_at: Timestamp,
    /// Audit of a recovery re-issue rather than the original request.
    pub recovery: bool,
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub report: MetricsReport,
    pub audits: Vec<AuditRecord>,
    pub trace: Vec<String>,
}

struct SimClient {
    identity: Identity,
    node: NodeId,
}

struct Tracked {
    client: usize,
    publisher: usize,
    claim: Claim,
    receipt: IssuanceReceipt,
    issued_at: Timestamp,
    audited: bool,
    recovery: bool,
}

struct Runner {
    config: ScenarioConfig,
    rng: ChaCha8Rng,
    world: Deployment,
    clients: Vec<SimClient>,
    whitelist: Whitelist,
    urls: Vec<String>,
    tracked: Vec<Tracked>,
    issued_links: BTreeSet<ContentLink>,
    audits: Vec<AuditRecord>,
    complaints: Vec<Claim>,
    trace: Vec<String>,
    fetch_views: u64,
}

/// Runs `config` to completion.
pub fn run(config: &ScenarioConfig) -> Result<SimOutcome, SimError> {
    config.validate()?;
    let mut runner = Runner::new(config.clone())?;
    runner.main_phase()?;
    runner.finish()
}

impl Runner {
    fn new(config: ScenarioConfig) -> Result<Self, SimError> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut world = Deployment::new(ChainConfig::default());
        for p in 0..config.n_publishers {
            let identity = Identity::generate(&mut rng);
            let pc = PublisherConfig {
                threshold: config.threshold,
                max_wait: config.max_wait,
                replication: ReplicationPolicy { copies: config.copies },
                ..PublisherConfig::new(identity, format!("publisher-{p}"))
            };
            let fault = config
                .faults
                .iter()
                .find(|f| f.publisher == p)
                .map(|f| FaultProfile::with_probability(f.mode, f.probability))
                .unwrap_or_default();
            world
                .add_publisher(pc, fault, rng.gen())
                .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        }
        let clients: Vec<SimClient> = (0..config.n_clients)
            .map(|i| SimClient { identity: Identity::generate(&mut rng), node: NodeId::new(format!("client-{i}")) })
            .collect();
        for c in &clients {
            world.add_client_node(&c.node);
        }
        world.add_client_node(&NodeId::new("viewer"));
        let whitelist = clients.iter().map(|c| c.identity.address()).collect();
        let urls = (0..config.workload.n_topics).map(|k| format!("https://news.example/article/{k}")).collect();
        Ok(Self {
            config,
            rng,
            world,
            clients,
            whitelist,
            urls,
            tracked: Vec::new(),
            issued_links: BTreeSet::new(),
            audits: Vec::new(),
            complaints: Vec::new(),
            trace: Vec::new(),
            fetch_views: 0,
        })
    }

    fn violation(&self, message: String) -> SimError {
        SimError::InvariantViolation { event: self.trace.len(), message }
    }

    fn log(&mut self, line: String) {
        self.trace.push(format!("t={} {line}", self.world.now()));
    }

    fn main_phase(&mut self) -> Result<(), SimError> {
        if !self.world.settle(self.config.duration) {
            return Err(self.violation("publisher registrations never confirmed".into()));
        }
        let start = self.world.now() + 1;
        let w = self.config.workload.clone();

        // issuance schedule: every (client, k) pair once, in random order, paced
        // at the aggregate interaction rate
        let mut issues: Vec<usize> =
            (0..self.clients.len()).flat_map(|c| std::iter::repeat(c).take(w.issues_per_client)).collect();
        issues.shuffle(&mut self.rng);
        let per_second = w.interaction_rate * w.n_topics as f64 / 60.0;
        let schedule: Vec<(Timestamp, usize)> = issues
            .into_iter()
            .enumerate()
            .map(|(j, c)| (start + (j as f64 / per_second).floor() as Timestamp, c))
            .collect();
        let issue_end = schedule.last().map(|(t, _)| *t).unwrap_or(start);
        let mut fetches: Vec<(Timestamp, usize)> = (0..w.fetch_rounds)
            .flat_map(|r| (0..self.clients.len()).map(move |c| (issue_end + (r as u64 + 1) * w.fetch_interval, c)))
            .collect();
        fetches.sort();

        let (mut next_issue, mut next_fetch) = (0, 0);
        let limit = self.config.duration;
        loop {
            let t = self.world.now() + 1;
            if t > limit {
                return Err(self.violation(format!("run did not drain within {limit} s")));
            }
            if let Some([a, b]) = self.config.ledger_outage {
                self.world.ledger.set_online(!(a..b).contains(&t));
            }
            self.world.tick_to(t);
            while next_issue < schedule.len() && schedule[next_issue].0 <= t {
                self.issue(schedule[next_issue].1)?;
                next_issue += 1;
            }
            while next_fetch < fetches.len() && fetches[next_fetch].0 <= t {
                self.fetch(fetches[next_fetch].1)?;
                next_fetch += 1;
            }
            self.audit_due()?;
            let drained = next_issue == schedule.len()
                && next_fetch == fetches.len()
                && self.tracked.iter().all(|r| r.audited)
                && self.world.ledger.pending_count() == 0
                && self.world.publishers().iter().all(|p| p.queue_depth() == 0);
            if drained {
                return Ok(());
            }
        }
    }

    fn issue(&mut self, c: usize) -> Result<(), SimError> {
        let topic = self.rng.gen_range(0..self.urls.len());
        let body = if self.rng.gen_bool(0.5) {
            AnnotationBody::Verdict(self.rng.gen())
        } else {
            AnnotationBody::Text(format!("note {} from client {c}", self.tracked.len()))
        };
        let now = self.world.now();
        let client = &self.clients[c];
        let mut claim = client::create_annotation(&client.identity, &self.urls[topic], body, now)
            .map_err(|e| self.violation(format!("claim creation failed: {e}")))?;
        if self.issued_links.contains(&claim.link().expect("signed claim has a link")) {
            // same verdict on the same page in the same second; say something new instead
            let text = AnnotationBody::Text(format!("note {} from client {c}", self.tracked.len()));
            claim = client::create_annotation(&client.identity, &self.urls[topic], text, now)
                .map_err(|e| self.violation(format!("claim creation failed: {e}")))?;
        }
        let link = claim.link().expect("signed claim has a link");
        if self.config.n_publishers == 0 {
            let (identity, node) = (client.identity.clone(), client.node.clone());
            client::submit_direct(&identity, &claim, &mut self.world.store, &node, &mut self.world.ledger, now)
                .map_err(|e| self.violation(format!("direct issuance failed: {e}")))?;
            self.issued_links.insert(link.clone());
            self.log(format!("issue client={c} direct link={link}"));
            return Ok(());
        }
        let p = c % self.config.n_publishers;
        let endpoint = self.world.publishers()[p].endpoint().to_string();
        let node = client.node.clone();
        let receipt = self
            .world
            .issue_via_publisher(&node, &claim, &endpoint, None)
            .map_err(|e| self.violation(format!("issuance via {endpoint} failed: {e}")))?;
        self.issued_links.insert(link.clone());
        self.log(format!("issue client={c} publisher={p} link={link}"));
        self.tracked.push(Tracked {
            client: c,
            publisher: p,
            claim,
            receipt,
            issued_at: now,
            audited: false,
            recovery: false,
        });
        Ok(())
    }

    fn fetch(&mut self, c: usize) -> Result<(), SimError> {
        let topic = self.rng.gen_range(0..self.urls.len());
        let node = self.clients[c].node.clone();
        match self.world.verify_topic(&self.urls[topic], &self.whitelist, &node) {
            Ok(report) => {
                let n = report.accepted_annotations().count();
                self.fetch_views += 1;
                self.log(format!("fetch client={c} topic={topic} accepted={n}"));
            }
            Err(ClientError::LedgerUnavailable) => self.log(format!("fetch client={c} topic={topic} ledger-down")),
            Err(e) => return Err(self.violation(format!("verification failed: {e}"))),
        }
        Ok(())
    }

    fn audit_due(&mut self) -> Result<(), SimError> {
        let now = self.world.now();
        for i in 0..self.tracked.len() {
            if self.tracked[i].audited || self.tracked[i].receipt.deadline > now {
                continue;
            }
            let observed = match self.world.audit(&self.tracked[i].receipt) {
                Ok(r) => r,
                // retried on the next tick
                Err(ClientError::LedgerUnavailable) => continue,
                Err(e) => return Err(self.violation(format!("audit failed: {e}"))),
            };
            let t = &self.tracked[i];
            let publisher = &self.world.publishers()[t.publisher];
            let link = t.receipt.link();
            let injected = publisher.request(&link).and_then(|r| r.fault);
            let record = AuditRecord {
                link: link.clone(),
                publisher: publisher.endpoint().to_string(),
                client: t.client,
                injected,
                observed,
                issued_at: t.issued_at,
                deadline: t.receipt.deadline,
                detected_at: now,
                recovery: t.recovery,
            };
            self.tracked[i].audited = true;
            self.log(format!("audit link={link} result={}", observed.as_str()));
            if observed != expected_audit(injected) {
                let msg = format!(
                    "receipt {link} from {} audited as {} but ground truth is {:?}",
                    record.publisher,
                    observed.as_str(),
                    injected
                );
                return Err(self.violation(msg));
            }
            self.audits.push(record);
            if observed.is_fault() {
                self.complain(i)?;
            }
        }
        Ok(())
    }

    fn complain(&mut self, i: usize) -> Result<(), SimError> {
        let c = self.tracked[i].client;
        let receipt = self.tracked[i].receipt.clone();
        let (identity, node) = (self.clients[c].identity.clone(), self.clients[c].node.clone());
        let publisher = self.world.publishers()[self.tracked[i].publisher].fault_profile().clone();
        if publisher.is_honest() {
            return Err(self.violation(format!("complaint against honest publisher for {}", receipt.link())));
        }
        let filed = self
            .world
            .complain(&identity, &node, &receipt)
            .map_err(|e| self.violation(format!("filing complaint failed: {e}")))?;
        self.log(format!("complaint client={c} link={} fault={}", receipt.link(), filed.fault.as_str()));
        self.complaints.push(filed.claim);
        Ok(())
    }

    /// Share of `links` fetchable from online nodes while client nodes are down.
    fn availability(&mut self, links: &[ContentLink]) -> Option<f64> {
        if links.is_empty() {
            return None;
        }
        let creators: Vec<NodeId> = self.clients.iter().map(|c| c.node.clone()).collect();
        if self.config.creators_offline {
            for n in &creators {
                let _ = self.world.store.set_online(n, false);
            }
        }
        let viewer = NodeId::new("viewer");
        let ok = links
            .iter()
            .filter(|l| {
                let holders: Vec<NodeId> = self.world.store.holders(l).into_iter().filter(|h| *h != viewer).collect();
                self.world.store.fetch_from(&holders, l).is_ok()
            })
            .count();
        for n in &creators {
            let _ = self.world.store.set_online(n, true);
        }
        Some(ok as f64 / links.len() as f64)
    }

    fn faulty_links(&self) -> Vec<ContentLink> {
        self.audits.iter().filter(|a| !a.recovery && a.observed.is_fault()).map(|a| a.link.clone()).collect()
    }

    fn recover(&mut self) -> Result<u64, SimError> {
        let honest: Vec<usize> = (0..self.world.publishers().len())
            .filter(|&p| {
                let addr = self.world.publishers()[p].address();
                self.world.ledger.complaints_against(&addr).is_empty()
            })
            .collect();
        let bad = self.faulty_links();
        let faulty: Vec<usize> = (0..self.tracked.len())
            .filter(|&i| !self.tracked[i].recovery && bad.contains(&self.tracked[i].receipt.link()))
            .collect();
        if faulty.is_empty() {
            return Ok(0);
        }
        let Some(&target) = honest.first() else {
            return Err(self.violation("no publisher without complaints is left for recovery".into()));
        };
        let endpoint = self.world.publishers()[target].endpoint().to_string();
        for &i in &faulty {
            let c = self.tracked[i].client;
            let claim = self.tracked[i].claim.clone();
            let node = self.clients[c].node.clone();
            let now = self.world.now();
            let receipt = self
                .world
                .issue_via_publisher(&node, &claim, &endpoint, None)
                .map_err(|e| self.violation(format!("recovery re-issue failed: {e}")))?;
            self.log(format!("reissue client={c} publisher={target} link={}", receipt.link()));
            self.tracked.push(Tracked {
                client: c,
                publisher: target,
                claim,
                receipt,
                issued_at: now,
                audited: false,
                recovery: true,
            });
        }
        let last_deadline = self.tracked.iter().map(|t| t.receipt.deadline).max().unwrap_or(0);
        self.world.tick_to(last_deadline);
        if !self.world.settle(self.config.duration) {
            return Err(self.violation("recovery issuance never settled".into()));
        }
        self.audit_due()?;
        Ok(faulty.len() as u64)
    }

    fn finish(mut self) -> Result<SimOutcome, SimError> {
        // let complaints confirm, then have a third party judge each one
        if !self.world.settle(self.config.duration) {
            return Err(self.violation("complaints never confirmed".into()));
        }
        let mut complaints_valid = 0;
        for complaint in self.complaints.clone() {
            match self.world.validate_complaint(&complaint) {
                Ok(v) if v.is_valid() => complaints_valid += 1,
                Ok(v) => return Err(self.violation(format!("filed complaint judged invalid: {v:?}"))),
                Err(e) => return Err(self.violation(format!("complaint validation failed: {e}"))),
            }
        }

        let all: Vec<ContentLink> = self.tracked.iter().map(|t| t.receipt.link()).collect();
        let faulty = self.faulty_links();
        let faulty_before = self.availability(&faulty);
        let mut availability = self.availability(&all).unwrap_or(1.0);
        let (mut faulty_after, mut recovered) = (faulty_before, 0);
        if self.config.recovery {
            recovered = self.recover()?;
            faulty_after = self.availability(&faulty);
            availability = self.availability(&all).unwrap_or(1.0);
        }

        // final read of every topic by a fresh viewer
        let viewer = NodeId::new("viewer");
        let mut verified = BTreeSet::new();
        for k in 0..self.urls.len() {
            let url = self.urls[k].clone();
            let report = self
                .world
                .verify_topic(&url, &self.whitelist, &viewer)
                .map_err(|e| self.violation(format!("final verification failed: {e}")))?;
            verified.extend(report.accepted_annotations().map(|c| c.link.clone()));
        }
        let claims_verified_ok = verified.intersection(&self.issued_links).count() as u64;

        let txs: Vec<_> = self.world.ledger.confirmed().iter().filter(|t| t.kind == "register_claims").collect();
        let ledger_tx_count = txs.len() as u64;
        let total_fees_usd: f64 = txs.iter().map(|t| t.fee_usd).sum();
        let claims_issued = self.issued_links.len() as u64;
        let stats: Vec<_> = self.world.publishers().iter().map(|p| p.stats()).collect();
        let failed_flushes: u64 = stats.iter().map(|s| s.failed_flushes).sum();
        let timeout_flushes: u64 = stats.iter().map(|s| s.timeout_flushes).sum();

        let requests_total = claims_issued + recovered;
        let bound = requests_total.div_ceil(self.config.min_threshold() as u64) + failed_flushes + timeout_flushes;
        if ledger_tx_count > bound {
            return Err(self.violation(format!("{ledger_tx_count} registration transactions exceed the bound {bound}")));
        }
        if claims_verified_ok > claims_issued {
            return Err(self.violation("more claims verified than issued".into()));
        }
        for p in self.world.publishers() {
            if p.fault_profile().is_honest() && p.stats().pairs_flushed != p.stats().accepted {
                let msg = format!("{} flushed {} pairs for {} receipts", p.endpoint(), p.stats().pairs_flushed, p.stats().accepted);
                return Err(self.violation(msg));
            }
        }

        let faulty_audits: Vec<&AuditRecord> = self.audits.iter().filter(|a| a.observed.is_fault()).collect();
        let faults_injected: u64 = self.world.publishers().iter().map(|p| p.fault_log().count() as u64).sum();
        let max_detection_delay_s = faulty_audits.iter().map(|a| a.detected_at - a.deadline).max().unwrap_or(0);
        let mean_detection_latency_s = if faulty_audits.is_empty() {
            0.0
        } else {
            faulty_audits.iter().map(|a| (a.detected_at - a.issued_at) as f64).sum::<f64>() / faulty_audits.len() as f64
        };

        let report = MetricsReport {
            seed: self.config.seed,
            claims_issued,
            claims_verified_ok,
            ledger_tx_count,
            total_fees_usd,
            per_claim_fee_usd: if claims_issued > 0 { total_fees_usd / claims_issued as f64 } else { 0.0 },
            receipts_audited: self.audits.len() as u64,
            faults_injected,
            faults_detected: faulty_audits.len() as u64,
            complaints_filed: self.complaints.len() as u64,
            complaints_valid,
            max_detection_delay_s,
            mean_detection_latency_s,
            availability_ratio: availability,
            faulty_availability_before: faulty_before,
            faulty_availability_after: faulty_after,
            recovered_claims: recovered,
            failed_flushes,
            timeout_flushes,
            fetch_views: self.fetch_views,
            sim_seconds: self.world.now(),
        };
        Ok(SimOutcome { report, audits: self.audits, trace: self.trace })
    }
}
