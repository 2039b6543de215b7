//! The publisher daemon's state machine.
//!
//! A [`PublisherNode`] owns no store or ledger; every operation borrows the
//! shared [`StoreNetwork`] and [`Ledger`] so one process can host several
//! publishers under a single simulated clock.

mod fault;

use std::collections::{BTreeMap, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha3::{Digest, Sha3_256};
use thiserror::Error;

use crate::claim::{Address, Claim, Identity, Topic};
use crate::client::{ChannelError, IssuanceChannel};
use crate::ledger::{Ledger, LedgerError, TxHandle};
use crate::link::ContentLink;
use crate::receipt::IssuanceReceipt;
use crate::store::{NodeId, ReplicationPolicy, StoreError, StoreNetwork};
use crate::Timestamp;

pub use fault::{FaultMode, FaultProfile, FaultTrigger};

pub const DAY: u64 = 86_400;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PublisherError {
    #[error("publisher is offline")]
    Offline,
    #[error("client {0} is not authorized")]
    Unauthorized(Address),
    #[error("client {0} exceeded the rate limit")]
    RateLimited(Address),
    #[error("invalid claim: {0}")]
    InvalidClaim(String),
    #[error("store failure: {0}")]
    Store(#[from] StoreError),
    #[error("ledger rejected the transaction: {0}")]
    LedgerRejection(#[from] LedgerError),
    #[error("invalid publisher config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuthMode {
    #[default]
    Open,
    Token,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PublisherConfig {
    pub identity: Identity,
    /// Registered endpoint; doubles as the publisher's store node id.
    pub endpoint: String,
    pub threshold: usize,
    /// Longest a queued request may wait before a timeout flush, in seconds.
    pub max_wait: u64,
    pub replication: ReplicationPolicy,
    pub pin_duration: u64,
    pub auth_mode: AuthMode,
    /// Requests per second per client; 0 disables the limit.
    pub rate_limit: u32,
    /// Slack added to receipt deadlines beyond max_wait plus confirmation delay.
    pub deadline_margin: u64,
}

impl Default for PublisherConfig {
    fn default() -> Self {
        Self {
            identity: Identity::from_seed([1; 32]).expect("constant seed is a valid key"),
            endpoint: "publisher-0".into(),
            threshold: 100,
            max_wait: 1800,
            replication: ReplicationPolicy::default(),
            pin_duration: 30 * DAY,
            auth_mode: AuthMode::Open,
            rate_limit: 0,
            deadline_margin: 1500,
        }
    }
}

impl PublisherConfig {
    pub fn new(identity: Identity, endpoint: impl Into<String>) -> Self {
        Self { identity, endpoint: endpoint.into(), ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), PublisherError> {
        if self.threshold == 0 {
            return Err(PublisherError::InvalidConfig("threshold must be at least 1".into()));
        }
        if self.replication.copies == 0 {
            return Err(PublisherError::InvalidConfig("replication.copies must be at least 1".into()));
        }
        if self.endpoint.trim().is_empty() {
            return Err(PublisherError::InvalidConfig("endpoint must not be empty".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, PublisherError> {
        let config: Self = toml::from_str(text).map_err(|e| PublisherError::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }
}

/// One request accepted into the batch queue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueuedRequest {
    pub topic: Topic,
    pub link: ContentLink,
    pub client: Address,
    pub received_at: Timestamp,
}

/// Per-request bookkeeping kept for audits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestRecord {
    pub receipt: IssuanceReceipt,
    pub client: Address,
    pub received_at: Timestamp,
    pub tx: Option<TxHandle>,
    /// Ground truth: the fault injected into this request, if any.
    pub fault: Option<FaultMode>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublisherStats {
    pub received: u64,
    pub accepted: u64,
    pub rejected: u64,
    pub flushes: u64,
    pub timeout_flushes: u64,
    pub failed_flushes: u64,
    pub pairs_flushed: u64,
    pub replicas_placed: u64,
    pub insufficient_peers: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicationOutcome {
    /// Copies now held, counting the origin.
    pub placed: usize,
    pub requested: usize,
    pub insufficient_peers: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PublisherNode {
    config: PublisherConfig,
    fault: FaultProfile,
    online: bool,
    queue: VecDeque<QueuedRequest>,
    requests: BTreeMap<ContentLink, RequestRecord>,
    tokens: BTreeMap<String, Address>,
    /// Request counts per client within the current second.
    window: (Timestamp, BTreeMap<Address, u32>),
    stats: PublisherStats,
    rng: ChaCha8Rng,
}

impl PublisherNode {
    pub fn new(config: PublisherConfig, fault: FaultProfile, seed: u64) -> Result<Self, PublisherError> {
        config.validate()?;
        Ok(Self {
            config,
            fault,
            online: true,
            queue: VecDeque::new(),
            requests: BTreeMap::new(),
            tokens: BTreeMap::new(),
            window: (0, BTreeMap::new()),
            stats: PublisherStats::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn honest(config: PublisherConfig) -> Result<Self, PublisherError> {
        Self::new(config, FaultProfile::honest(), 0)
    }

    pub fn config(&self) -> &PublisherConfig {
        &self.config
    }

    pub fn address(&self) -> Address {
        self.config.identity.address()
    }

    pub fn endpoint(&self) -> &str {
        &self.config.endpoint
    }

    pub fn node_id(&self) -> NodeId {
        NodeId::new(self.config.endpoint.clone())
    }

    pub fn fault_profile(&self) -> &FaultProfile {
        &self.fault
    }

    pub fn is_online(&self) -> bool {
        self.online
    }

    pub fn set_online(&mut self, online: bool) {
        self.online = online;
    }

    pub fn stats(&self) -> PublisherStats {
        self.stats
    }

    pub fn queue_depth(&self) -> usize {
        self.queue.len()
    }

    pub fn requests(&self) -> impl Iterator<Item = &RequestRecord> {
        self.requests.values()
    }

    pub fn request(&self, link: &ContentLink) -> Option<&RequestRecord> {
        self.requests.get(link)
    }

    /// Ground-truth log of requests that had a fault injected.
    pub fn fault_log(&self) -> impl Iterator<Item = &RequestRecord> {
        self.requests.values().filter(|r| r.fault.is_some())
    }

    /// Issues an access token for `client` under token authentication.
    pub fn grant_token(&mut self, client: Address) -> String {
        let mut h = Sha3_256::new();
        h.update(self.config.identity.seed());
        h.update(client.0);
        let token = hex::encode(&h.finalize()[..16]);
        self.tokens.insert(token.clone(), client);
        token
    }

    /// Withdraws every token issued to `client`.
    pub fn deactivate(&mut self, client: &Address) {
        self.tokens.retain(|_, owner| owner != client);
    }

    pub fn register_self(&self, ledger: &mut Ledger, now: Timestamp) -> Result<TxHandle, PublisherError> {
        let id = &self.config.identity;
        Ok(ledger.register_publisher(id.address(), &self.config.endpoint, id.public_key().clone(), now)?)
    }

    fn authorize(&mut self, client: &Address, token: Option<&str>, now: Timestamp) -> Result<(), PublisherError> {
        if self.config.auth_mode == AuthMode::Token && token.and_then(|t| self.tokens.get(t)) != Some(client) {
            return Err(PublisherError::Unauthorized(*client));
        }
        if self.config.rate_limit > 0 {
            if self.window.0 != now {
                self.window = (now, BTreeMap::new());
            }
            let count = self.window.1.entry(*client).or_default();
            *count += 1;
            if *count > self.config.rate_limit {
                // authenticated abusers lose their account, open mode can only refuse
                if self.config.auth_mode == AuthMode::Token {
                    self.deactivate(client);
                }
                return Err(PublisherError::RateLimited(*client));
            }
        }
        Ok(())
    }

    /// Accepts a signed claim from `client` and returns a signed receipt.
    ///
    /// The claim is stored, pinned and replicated before the receipt is
    /// signed. When the queue reaches the threshold it is flushed in the
    /// same call; a failed flush leaves the queue intact for [`tick`](Self::tick).
    pub fn handle_issuance(
        &mut self,
        store: &mut StoreNetwork,
        ledger: &mut Ledger,
        claim: &Claim,
        client: &Address,
        token: Option<&str>,
        now: Timestamp,
    ) -> Result<IssuanceReceipt, PublisherError> {
        if !self.online {
            return Err(PublisherError::Offline);
        }
        self.stats.received += 1;
        let result = self.accept(store, ledger, claim, client, token, now);
        match &result {
            Ok(_) => self.stats.accepted += 1,
            Err(_) => self.stats.rejected += 1,
        }
        let receipt = result?;
        if self.queue.len() >= self.config.threshold {
            let _ = self.flush(store, ledger, now);
        }
        Ok(receipt)
    }

    fn accept(
        &mut self,
        store: &mut StoreNetwork,
        ledger: &Ledger,
        claim: &Claim,
        client: &Address,
        token: Option<&str>,
        now: Timestamp,
    ) -> Result<IssuanceReceipt, PublisherError> {
        self.authorize(client, token, now)?;
        let topic = claim.topic.ok_or_else(|| PublisherError::InvalidClaim("claim has no topic".into()))?;
        if !claim.verify_signature().unwrap_or(false) {
            return Err(PublisherError::InvalidClaim("creator signature does not verify".into()));
        }
        let bytes = claim.to_canonical_bytes().map_err(|e| PublisherError::InvalidClaim(e.to_string()))?;

        let fault = self.fault.triggers(client, &mut self.rng).then_some(self.fault.mode);
        let link = if fault == Some(FaultMode::DropReplicas) {
            ContentLink::of(&bytes)
        } else {
            let link = store.put(&self.node_id(), &bytes)?;
            store.pin(&self.node_id(), &link, self.config.pin_duration)?;
            let peers = self.peers(store, ledger);
            self.replicate(store, &bytes, &peers);
            link
        };

        let receipt_topic = topic;
        let queued_topic = match fault {
            Some(FaultMode::CorruptTopic) => corrupt(topic),
            _ => topic,
        };
        if fault != Some(FaultMode::DropRequests) {
            self.queue.push_back(QueuedRequest { topic: queued_topic, link: link.clone(), client: *client, received_at: now });
        }

        let deadline = now + self.config.max_wait + ledger.config().confirmation_delay + self.config.deadline_margin;
        let mut digest = [0u8; 32];
        digest.copy_from_slice(link.digest());
        let receipt = IssuanceReceipt::new(digest, receipt_topic, self.address(), deadline)
            .sign(&self.config.identity)
            .expect("publisher signs its own receipts");
        self.requests.insert(
            link,
            RequestRecord { receipt: receipt.clone(), client: *client, received_at: now, tx: None, fault },
        );
        Ok(receipt)
    }

    /// Online store nodes of the other active publishers.
    pub fn peers(&self, store: &StoreNetwork, ledger: &Ledger) -> Vec<NodeId> {
        ledger
            .active_publishers()
            .filter(|p| p.address != self.address())
            .map(|p| NodeId::new(p.endpoint.clone()))
            .filter(|id| store.is_online(id))
            .collect()
    }

    /// Places copies of `bytes` on up to `copies - 1` peers chosen uniformly
    /// at random without replacement. Placement is idempotent.
    pub fn replicate(&mut self, store: &mut StoreNetwork, bytes: &[u8], peers: &[NodeId]) -> ReplicationOutcome {
        let requested = self.config.replication.copies;
        let mut candidates: Vec<&NodeId> = peers.iter().filter(|p| **p != self.node_id()).collect();
        candidates.shuffle(&mut self.rng);
        let mut placed = 1;
        for peer in candidates {
            if placed >= requested {
                break;
            }
            let ok = store
                .put(peer, bytes)
                .and_then(|link| store.pin(peer, &link, self.config.pin_duration))
                .is_ok();
            if ok {
                placed += 1;
                self.stats.replicas_placed += 1;
            }
        }
        let insufficient_peers = placed < requested;
        if insufficient_peers {
            self.stats.insufficient_peers += 1;
        }
        ReplicationOutcome { placed, requested, insufficient_peers }
    }

    fn flush_due(&self, now: Timestamp) -> bool {
        self.queue.len() >= self.config.threshold
            || self.queue.front().is_some_and(|q| now.saturating_sub(q.received_at) >= self.config.max_wait)
    }

    /// Flushes when the queue is full or its oldest entry has waited `max_wait`.
    pub fn tick(
        &mut self,
        store: &mut StoreNetwork,
        ledger: &mut Ledger,
        now: Timestamp,
    ) -> Result<Option<TxHandle>, PublisherError> {
        if !self.online || !self.flush_due(now) {
            return Ok(None);
        }
        if self.queue.len() < self.config.threshold {
            self.stats.timeout_flushes += 1;
        }
        self.flush(store, ledger, now)
    }

    /// Registers every queued pair in one transaction and stores a signed
    /// batch manifest. On ledger rejection the queue is left untouched.
    pub fn flush(
        &mut self,
        store: &mut StoreNetwork,
        ledger: &mut Ledger,
        now: Timestamp,
    ) -> Result<Option<TxHandle>, PublisherError> {
        if self.queue.is_empty() {
            return Ok(None);
        }
        let pairs: Vec<(Topic, ContentLink)> = self.queue.iter().map(|q| (q.topic, q.link.clone())).collect();
        let handle = match ledger.register_claims(self.address(), pairs.clone(), now) {
            Ok(h) => h,
            Err(e) => {
                self.stats.failed_flushes += 1;
                return Err(e.into());
            }
        };
        for q in self.queue.drain(..) {
            if let Some(r) = self.requests.get_mut(&q.link) {
                r.tx = Some(handle);
            }
        }
        self.stats.flushes += 1;
        self.stats.pairs_flushed += pairs.len() as u64;

        let manifest = Claim::batch(self.address(), pairs, now)
            .sign(&self.config.identity)
            .expect("publisher signs its own manifests");
        if let Ok(bytes) = manifest.to_canonical_bytes() {
            // the manifest is a courtesy record; losing it does not lose any request
            if let Ok(link) = store.put(&self.node_id(), &bytes) {
                let _ = store.pin(&self.node_id(), &link, self.config.pin_duration);
            }
        }
        Ok(Some(handle))
    }

    /// Serves bytes for `link` from the local store only, re-verifying the digest.
    pub fn serve_claim(&self, store: &mut StoreNetwork, link: &ContentLink) -> Result<Vec<u8>, PublisherError> {
        if !self.online {
            return Err(PublisherError::Offline);
        }
        Ok(store.get_local(&self.node_id(), link)?)
    }
}

/// A topic that is guaranteed to differ from `topic`.
fn corrupt(topic: Topic) -> Topic {
    Topic(Sha3_256::digest(topic.0).into())
}

/// In-process transport to a publisher hosted alongside the client.
pub struct LocalChannel<'a> {
    pub node: &'a mut PublisherNode,
    pub store: &'a mut StoreNetwork,
    pub ledger: &'a mut Ledger,
    pub now: Timestamp,
    pub token: Option<String>,
}

impl IssuanceChannel for LocalChannel<'_> {
    fn request_issuance(&mut self, claim: &Claim) -> Result<IssuanceReceipt, ChannelError> {
        self.node
            .handle_issuance(self.store, self.ledger, claim, &claim.creator_id, self.token.as_deref(), self.now)
            .map_err(|e| match e {
                PublisherError::Offline => ChannelError::Unreachable(self.node.endpoint().to_string()),
                other => ChannelError::Rejected(other.to_string()),
            })
    }
}
