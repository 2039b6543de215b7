//! One process hosting the store network, the ledger and any number of
//! publishers under a single simulated clock.
//!
//! This is what the CLI's embedded mode persists between invocations and what
//! the HTTP services and the scenario runner drive.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::claim::{AnnotationBody, Claim, ClaimUid, Identity, Topic};
use crate::client::{self, AuditResult, ClientError, TopicReport, Whitelist};
use crate::ledger::{ChainConfig, Ledger, LedgerRecord, TxHandle, TxStatus};
use crate::publisher::{FaultProfile, LocalChannel, PublisherConfig, PublisherError, PublisherNode};
use crate::receipt::IssuanceReceipt;
use crate::store::{NodeId, StoreNetwork};
use crate::Timestamp;

/// How a client gets a claim onto the ledger.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssuancePath {
    Direct,
    Publisher(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueOutcome {
    Record { record: LedgerRecord, fee_usd: f64 },
    Receipt(IssuanceReceipt),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Issued {
    pub claim: Claim,
    pub outcome: IssueOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiledComplaint {
    pub claim: Claim,
    pub fault: AuditResult,
    pub tx: TxHandle,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Deployment {
    now: Timestamp,
    pub store: StoreNetwork,
    pub ledger: Ledger,
    publishers: Vec<PublisherNode>,
}

impl Deployment {
    pub fn new(chain: ChainConfig) -> Self {
        Self { now: 0, store: StoreNetwork::new(), ledger: Ledger::new(chain), publishers: Vec::new() }
    }

    pub fn now(&self) -> Timestamp {
        self.now
    }

    /// Adds a store node for a client. Existing nodes are left as they are.
    pub fn add_client_node(&mut self, id: &NodeId) {
        if self.store.node(id).is_none() {
            self.store.add_node(id.clone());
        }
    }

    /// Starts a publisher and submits its registration. The registration
    /// becomes visible once the ledger confirms it.
    pub fn add_publisher(
        &mut self,
        config: PublisherConfig,
        fault: FaultProfile,
        seed: u64,
    ) -> Result<usize, PublisherError> {
        let node = PublisherNode::new(config, fault, seed)?;
        self.add_client_node(&node.node_id());
        node.register_self(&mut self.ledger, self.now)?;
        self.publishers.push(node);
        Ok(self.publishers.len() - 1)
    }

    pub fn publishers(&self) -> &[PublisherNode] {
        &self.publishers
    }

    pub fn publisher_mut(&mut self, index: usize) -> Option<&mut PublisherNode> {
        self.publishers.get_mut(index)
    }

    /// Split borrow of one publisher together with the shared store and ledger.
    ///
    /// # Panics
    /// If `index` is out of range.
    pub fn parts(&mut self, index: usize) -> (&mut PublisherNode, &mut StoreNetwork, &mut Ledger) {
        (&mut self.publishers[index], &mut self.store, &mut self.ledger)
    }

    pub fn publisher_index(&self, endpoint: &str) -> Option<usize> {
        self.publishers.iter().position(|p| p.endpoint() == endpoint)
    }

    /// Moves the clock forward one second at a time, confirming due ledger
    /// transactions and giving every publisher a chance to flush.
    pub fn tick_to(&mut self, t: Timestamp) {
        while self.now < t {
            self.now += 1;
            self.store.advance_to(self.now);
            self.ledger.advance_to(self.now);
            for p in &mut self.publishers {
                let _ = p.tick(&mut self.store, &mut self.ledger, self.now);
            }
        }
    }

    pub fn advance(&mut self, seconds: u64) {
        self.tick_to(self.now + seconds);
    }

    /// Runs until every publisher queue is empty and no transaction is pending,
    /// or `limit` seconds have passed. Returns whether it settled.
    pub fn settle(&mut self, limit: u64) -> bool {
        let end = self.now + limit;
        loop {
            let idle = self.ledger.pending_count() == 0 && self.publishers.iter().all(|p| p.queue_depth() == 0);
            if idle {
                return true;
            }
            if self.now >= end {
                return false;
            }
            self.tick_to(self.now + 1);
        }
    }

    pub fn issue_direct(&mut self, identity: &Identity, node: &NodeId, claim: &Claim) -> Result<(LedgerRecord, f64), ClientError> {
        let issue = client::submit_direct(identity, claim, &mut self.store, node, &mut self.ledger, self.now)?;
        if let TxStatus::Pending { confirm_at } = self.ledger.status(issue.handle)? {
            self.tick_to(confirm_at);
        }
        let fee = match self.ledger.status(issue.handle)? {
            TxStatus::Confirmed(c) => c.fee_usd,
            TxStatus::Pending { .. } => unreachable!("clock passed the confirmation second"),
        };
        let record = client::direct_record(&self.ledger, &issue).expect("confirmed transaction has its record");
        Ok((record, fee))
    }

    /// Keeps a local copy on the creator's node and sends the claim to `endpoint`.
    pub fn issue_via_publisher(
        &mut self,
        node: &NodeId,
        claim: &Claim,
        endpoint: &str,
        token: Option<&str>,
    ) -> Result<IssuanceReceipt, ClientError> {
        let entry = self
            .ledger
            .publisher_by_endpoint(endpoint)
            .cloned()
            .ok_or_else(|| ClientError::PublisherNotRegistered(endpoint.to_string()))?;
        self.store.put(node, &claim.to_canonical_bytes()?)?;
        let index = self.publisher_index(endpoint).ok_or_else(|| ClientError::PublisherUnreachable(endpoint.to_string()))?;
        let mut channel = LocalChannel {
            node: &mut self.publishers[index],
            store: &mut self.store,
            ledger: &mut self.ledger,
            now: self.now,
            token: token.map(str::to_string),
        };
        client::issue_via_publisher(claim, &entry, &mut channel)
    }

    pub fn issue(&mut self, identity: &Identity, node: &NodeId, claim: Claim, path: &IssuancePath) -> Result<Issued, ClientError> {
        let outcome = match path {
            IssuancePath::Direct => {
                let (record, fee_usd) = self.issue_direct(identity, node, &claim)?;
                IssueOutcome::Record { record, fee_usd }
            }
            IssuancePath::Publisher(endpoint) => IssueOutcome::Receipt(self.issue_via_publisher(node, &claim, endpoint, None)?),
        };
        Ok(Issued { claim, outcome })
    }

    pub fn annotate(
        &mut self,
        identity: &Identity,
        node: &NodeId,
        url: &str,
        body: AnnotationBody,
        path: &IssuancePath,
    ) -> Result<Issued, ClientError> {
        let claim = client::create_annotation(identity, url, body, self.now)?;
        self.issue(identity, node, claim, path)
    }

    /// Issues a revocation of `target` under `topic`, or under the topic the
    /// target is registered with when `topic` is `None`.
    pub fn revoke(
        &mut self,
        identity: &Identity,
        node: &NodeId,
        target: ClaimUid,
        topic: Option<Topic>,
        path: &IssuancePath,
    ) -> Result<Issued, ClientError> {
        let topic = match topic {
            Some(t) => t,
            None => *self
                .ledger
                .topics_for_link(&target.link())
                .first()
                .ok_or_else(|| ClientError::UnknownTarget(target.to_hex()))?,
        };
        let claim = client::create_revocation(identity, target, topic, self.now)?;
        self.issue(identity, node, claim, path)
    }

    pub fn verify_topic(&mut self, url: &str, whitelist: &Whitelist, viewer: &NodeId) -> Result<TopicReport, ClientError> {
        client::verify_topic(url, whitelist, &mut self.store, viewer, &self.ledger)
    }

    pub fn audit(&mut self, receipt: &IssuanceReceipt) -> Result<AuditResult, ClientError> {
        client::audit_receipt(receipt, &self.ledger, &mut self.store, self.now)
    }

    /// Audits `receipt` and, when a fault is observed, files a complaint.
    pub fn complain(&mut self, identity: &Identity, node: &NodeId, receipt: &IssuanceReceipt) -> Result<FiledComplaint, ClientError> {
        let fault = self.audit(receipt)?;
        let claim = client::build_complaint(identity, receipt.clone(), fault, self.now)?;
        let tx = client::file_complaint(identity, &claim, &mut self.store, node, &mut self.ledger, self.now)?;
        Ok(FiledComplaint { claim, fault, tx })
    }

    /// Third-party judgement of a complaint at the current time.
    pub fn validate_complaint(&mut self, complaint: &Claim) -> Result<client::ComplaintVerdict, ClientError> {
        client::validate_complaint(complaint, &self.ledger, &mut self.store, self.now)
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, serde_json::to_vec(self).map_err(io::Error::other)?)?;
        fs::rename(tmp, path)
    }

    pub fn load(path: &Path) -> io::Result<Self> {
        let bytes = fs::read(path)?;
        serde_json::from_slice(&bytes).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}
