//! Deterministic simulation of the registry contracts.
//!
//! Transactions enter a FIFO admission queue and are assigned a confirmation
//! second at submission: `submitted_at + confirmation_delay`, pushed later
//! whenever that second already holds `max_tx_per_second` confirmations.
//! [`Ledger::advance_to`] applies every transaction whose second has come, in
//! queue order, so registry state is a pure function of the submission schedule.

mod config;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::claim::{Address, PublicKey, Topic};
use crate::link::ContentLink;
use crate::Timestamp;

pub use config::{ChainConfig, GasModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LedgerError {
    #[error("ledger is unavailable")]
    Unavailable,
    #[error("insufficient funds: {address} has {available:.6} USD, needs {required:.6} USD")]
    InsufficientFunds { address: Address, available: f64, required: f64 },
    #[error("malformed transaction: {0}")]
    MalformedTransaction(String),
    #[error("publisher {0} is already registered")]
    AlreadyRegistered(Address),
    #[error("unknown publisher {0}")]
    UnknownPublisher(Address),
    #[error("unknown transaction {0}")]
    UnknownTransaction(TxHandle),
    #[error("invalid chain config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TxHandle(pub u64);

impl fmt::Display for TxHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tx#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerRecord {
    pub link: ContentLink,
    pub issuer: Address,
    pub timestamp: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PublisherStatus {
    Active,
    Retired,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublisherEntry {
    pub address: Address,
    pub endpoint: String,
    pub certificate: PublicKey,
    pub status: PublisherStatus,
    pub registered_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TxKind {
    RegisterClaims { pairs: Vec<(Topic, ContentLink)> },
    RegisterPublisher { endpoint: String, certificate: PublicKey },
    RetirePublisher,
    FileComplaint { publisher: Address, complaint: ContentLink },
}

impl TxKind {
    pub fn label(&self) -> &'static str {
        match self {
            TxKind::RegisterClaims { .. } => "register_claims",
            TxKind::RegisterPublisher { .. } => "register_publisher",
            TxKind::RetirePublisher => "retire_publisher",
            TxKind::FileComplaint { .. } => "file_complaint",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transaction {
    pub sender: Address,
    pub kind: TxKind,
    pub gas_used: u64,
    /// Gwei per gas.
    pub gas_price: f64,
    pub submitted_at: Timestamp,
}

impl Transaction {
    pub fn fee_usd(&self, config: &ChainConfig) -> f64 {
        config.fee_usd(self.gas_used, self.gas_price)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PendingTx {
    handle: TxHandle,
    tx: Transaction,
    confirm_at: Timestamp,
    fee_usd: f64,
}

/// One applied transaction, as kept in the confirmation log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfirmedTx {
    pub handle: TxHandle,
    pub sender: Address,
    pub kind: String,
    pub pairs: usize,
    pub gas_used: u64,
    pub fee_usd: f64,
    pub submitted_at: Timestamp,
    pub confirmed_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TxStatus {
    Pending { confirm_at: Timestamp },
    Confirmed(ConfirmedTx),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ledger {
    config: ChainConfig,
    now: Timestamp,
    online: bool,
    next_handle: u64,
    pending: VecDeque<PendingTx>,
    /// Second currently being filled and how many confirmations it holds.
    slot: (Timestamp, u32),
    log: Vec<ConfirmedTx>,
    handles: BTreeMap<TxHandle, usize>,
    annotations: BTreeMap<Topic, Vec<LedgerRecord>>,
    link_topics: BTreeMap<ContentLink, BTreeSet<Topic>>,
    publishers: Vec<PublisherEntry>,
    complaints: BTreeMap<Address, Vec<ContentLink>>,
    balances: BTreeMap<Address, f64>,
}

impl Default for Ledger {
    fn default() -> Self {
        Self::new(ChainConfig::default())
    }
}

impl Ledger {
    pub fn new(config: ChainConfig) -> Self {
        Self {
            config,
            now: 0,
            online: true,
            next_handle: 0,
            pending: VecDeque::new(),
            slot: (0, 0),
            log: Vec::new(),
            handles: BTreeMap::new(),
            annotations: BTreeMap::new(),
            link_topics: BTreeMap::new(),
            publishers: Vec::new(),
            complaints: BTreeMap::new(),
            balances: BTreeMap::new(),
        }
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn now(&self) -> Timestamp {
        self.now
    }

    pub fn is_online(&self) -> bool {
        self.online
    }

    /// Takes the ledger offline: submissions fail until it comes back.
    /// Already-queued transactions still confirm on schedule.
    pub fn set_online(&mut self, online: bool) {
        self.online = online;
    }

    pub fn fund(&mut self, address: Address, usd: f64) {
        *self.balances.entry(address).or_default() += usd;
    }

    pub fn balance(&self, address: &Address) -> f64 {
        self.balances.get(address).copied().unwrap_or_default()
    }

    /// Builds a transaction with gas from the configured model at the default price.
    pub fn build_tx(&self, sender: Address, kind: TxKind, submitted_at: Timestamp) -> Transaction {
        let gas = &self.config.gas;
        let gas_used = match &kind {
            TxKind::RegisterClaims { pairs } => gas.register_claims(pairs.len()),
            TxKind::RegisterPublisher { .. } => gas.register_publisher,
            TxKind::RetirePublisher => gas.retire_publisher,
            TxKind::FileComplaint { .. } => gas.file_complaint,
        };
        Transaction { sender, kind, gas_used, gas_price: self.config.default_gas_price, submitted_at }
    }

    fn pending_fees(&self, sender: &Address) -> f64 {
        self.pending.iter().filter(|p| p.tx.sender == *sender).map(|p| p.fee_usd).sum()
    }

    fn pending_registration(&self, address: &Address) -> bool {
        self.pending
            .iter()
            .any(|p| p.tx.sender == *address && matches!(p.tx.kind, TxKind::RegisterPublisher { .. }))
    }

    fn is_active_publisher(&self, address: &Address) -> bool {
        self.publisher(address).is_some_and(|p| p.status == PublisherStatus::Active)
    }

    fn validate(&self, tx: &Transaction) -> Result<f64, LedgerError> {
        if !self.online {
            return Err(LedgerError::Unavailable);
        }
        if tx.gas_used == 0 || !(tx.gas_price > 0.0) {
            return Err(LedgerError::MalformedTransaction("gas and gas price must be positive".into()));
        }
        match &tx.kind {
            TxKind::RegisterClaims { pairs } if pairs.is_empty() => {
                return Err(LedgerError::MalformedTransaction("no claims to register".into()))
            }
            TxKind::RegisterPublisher { endpoint, certificate } => {
                if endpoint.is_empty() {
                    return Err(LedgerError::MalformedTransaction("empty endpoint".into()));
                }
                if certificate.address() != tx.sender {
                    return Err(LedgerError::MalformedTransaction("certificate does not belong to sender".into()));
                }
                if self.is_active_publisher(&tx.sender) || self.pending_registration(&tx.sender) {
                    return Err(LedgerError::AlreadyRegistered(tx.sender));
                }
            }
            TxKind::RetirePublisher if !self.is_active_publisher(&tx.sender) => {
                return Err(LedgerError::UnknownPublisher(tx.sender))
            }
            TxKind::FileComplaint { publisher, .. } => {
                if self.publisher(publisher).is_none() && !self.pending_registration(publisher) {
                    return Err(LedgerError::UnknownPublisher(*publisher));
                }
            }
            _ => {}
        }
        let fee = tx.fee_usd(&self.config);
        if self.config.balances_enabled {
            let available = self.balance(&tx.sender) - self.pending_fees(&tx.sender);
            if available < fee {
                return Err(LedgerError::InsufficientFunds { address: tx.sender, available, required: fee });
            }
        }
        Ok(fee)
    }

    /// Admits `tx` and schedules its confirmation.
    pub fn submit(&mut self, tx: Transaction) -> Result<TxHandle, LedgerError> {
        let fee_usd = self.validate(&tx)?;
        let arrival = tx.submitted_at.max(self.now);
        let earliest = arrival + self.config.confirmation_delay;
        let (second, count) = self.slot;
        self.slot = if earliest > second {
            (earliest, 1)
        } else if count < self.config.max_tx_per_second {
            (second, count + 1)
        } else {
            (second + 1, 1)
        };
        let handle = TxHandle(self.next_handle);
        self.next_handle += 1;
        self.pending.push_back(PendingTx { handle, tx, confirm_at: self.slot.0, fee_usd });
        Ok(handle)
    }

    pub fn register_claims(
        &mut self,
        sender: Address,
        pairs: Vec<(Topic, ContentLink)>,
        now: Timestamp,
    ) -> Result<TxHandle, LedgerError> {
        let tx = self.build_tx(sender, TxKind::RegisterClaims { pairs }, now);
        self.submit(tx)
    }

    pub fn register_publisher(
        &mut self,
        sender: Address,
        endpoint: &str,
        certificate: PublicKey,
        now: Timestamp,
    ) -> Result<TxHandle, LedgerError> {
        let tx = self.build_tx(sender, TxKind::RegisterPublisher { endpoint: endpoint.into(), certificate }, now);
        self.submit(tx)
    }

    pub fn retire_publisher(&mut self, sender: Address, now: Timestamp) -> Result<TxHandle, LedgerError> {
        let tx = self.build_tx(sender, TxKind::RetirePublisher, now);
        self.submit(tx)
    }

    pub fn file_complaint(
        &mut self,
        sender: Address,
        publisher: Address,
        complaint: ContentLink,
        now: Timestamp,
    ) -> Result<TxHandle, LedgerError> {
        let tx = self.build_tx(sender, TxKind::FileComplaint { publisher, complaint }, now);
        self.submit(tx)
    }

    /// Applies every transaction due by `now`. Returns how many were confirmed.
    pub fn advance_to(&mut self, now: Timestamp) -> usize {
        let mut applied = 0;
        while self.pending.front().is_some_and(|p| p.confirm_at <= now) {
            let p = self.pending.pop_front().expect("front exists");
            self.apply(p);
            applied += 1;
        }
        self.now = self.now.max(now);
        applied
    }

    /// Advances the clock until `handle` is confirmed.
    pub fn wait_for(&mut self, handle: TxHandle) -> Result<ConfirmedTx, LedgerError> {
        match self.status(handle)? {
            TxStatus::Confirmed(c) => Ok(c),
            TxStatus::Pending { confirm_at } => {
                self.advance_to(confirm_at);
                match self.status(handle)? {
                    TxStatus::Confirmed(c) => Ok(c),
                    TxStatus::Pending { .. } => unreachable!("advanced past confirmation"),
                }
            }
        }
    }

    pub fn status(&self, handle: TxHandle) -> Result<TxStatus, LedgerError> {
        if let Some(&i) = self.handles.get(&handle) {
            return Ok(TxStatus::Confirmed(self.log[i].clone()));
        }
        self.pending
            .iter()
            .find(|p| p.handle == handle)
            .map(|p| TxStatus::Pending { confirm_at: p.confirm_at })
            .ok_or(LedgerError::UnknownTransaction(handle))
    }

    fn apply(&mut self, p: PendingTx) {
        let PendingTx { handle, tx, confirm_at, fee_usd } = p;
        let mut pairs = 0;
        match &tx.kind {
            TxKind::RegisterClaims { pairs: list } => {
                pairs = list.len();
                for (topic, link) in list {
                    self.annotations.entry(*topic).or_default().push(LedgerRecord {
                        link: link.clone(),
                        issuer: tx.sender,
                        timestamp: confirm_at,
                    });
                    self.link_topics.entry(link.clone()).or_default().insert(*topic);
                }
            }
            TxKind::RegisterPublisher { endpoint, certificate } => {
                // a retired publisher may come back under the same address
                if let Some(entry) = self.publishers.iter_mut().find(|e| e.address == tx.sender) {
                    entry.endpoint = endpoint.clone();
                    entry.certificate = certificate.clone();
                    entry.status = PublisherStatus::Active;
                } else {
                    self.publishers.push(PublisherEntry {
                        address: tx.sender,
                        endpoint: endpoint.clone(),
                        certificate: certificate.clone(),
                        status: PublisherStatus::Active,
                        registered_at: confirm_at,
                    });
                }
            }
            TxKind::RetirePublisher => {
                if let Some(entry) = self.publishers.iter_mut().find(|e| e.address == tx.sender) {
                    entry.status = PublisherStatus::Retired;
                }
            }
            TxKind::FileComplaint { publisher, complaint } => {
                self.complaints.entry(*publisher).or_default().push(complaint.clone());
            }
        }
        if self.config.balances_enabled {
            *self.balances.entry(tx.sender).or_default() -= fee_usd;
        }
        self.handles.insert(handle, self.log.len());
        self.log.push(ConfirmedTx {
            handle,
            sender: tx.sender,
            kind: tx.kind.label().to_string(),
            pairs,
            gas_used: tx.gas_used,
            fee_usd,
            submitted_at: tx.submitted_at,
            confirmed_at: confirm_at,
        });
    }

    /// Confirmed records for `topic`, in confirmation order. Free to call.
    pub fn get_claim_links(&self, topic: &Topic) -> &[LedgerRecord] {
        self.annotations.get(topic).map(Vec::as_slice).unwrap_or_default()
    }

    /// Every topic under which `link` has been registered.
    pub fn topics_for_link(&self, link: &ContentLink) -> Vec<Topic> {
        self.link_topics.get(link).map(|s| s.iter().copied().collect()).unwrap_or_default()
    }

    pub fn topics(&self) -> impl Iterator<Item = &Topic> {
        self.annotations.keys()
    }

    /// Registered publishers in registration order.
    pub fn list_publishers(&self) -> &[PublisherEntry] {
        &self.publishers
    }

    pub fn active_publishers(&self) -> impl Iterator<Item = &PublisherEntry> {
        self.publishers.iter().filter(|p| p.status == PublisherStatus::Active)
    }

    pub fn publisher(&self, address: &Address) -> Option<&PublisherEntry> {
        self.publishers.iter().find(|p| p.address == *address)
    }

    pub fn publisher_by_endpoint(&self, endpoint: &str) -> Option<&PublisherEntry> {
        self.publishers.iter().find(|p| p.endpoint == endpoint)
    }

    pub fn complaints_against(&self, publisher: &Address) -> &[ContentLink] {
        self.complaints.get(publisher).map(Vec::as_slice).unwrap_or_default()
    }

    pub fn confirmed(&self) -> &[ConfirmedTx] {
        &self.log
    }

    pub fn pending_count(&self) -> usize {
        self.pending.len()
    }

    /// Confirmation second of the last queued transaction, if any.
    pub fn last_scheduled(&self) -> Option<Timestamp> {
        self.pending.back().map(|p| p.confirm_at)
    }

    /// Text snapshot of the annotation registry: one `topic link issuer timestamp` line per record.
    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        for (topic, records) in &self.annotations {
            for r in records {
                out.push_str(&format!("{} {} {} {}\n", topic.to_hex(), r.link, r.issuer, r.timestamp));
            }
        }
        out
    }
}
