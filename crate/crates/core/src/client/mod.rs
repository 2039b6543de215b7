//! Creator, issuer, verifier and viewer roles.

mod audit;
mod verify;

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::claim::{Address, AnnotationBody, Claim, ClaimError, ClaimUid, Identity, Topic};
use crate::ledger::{Ledger, LedgerError, LedgerRecord, PublisherEntry, PublisherStatus, TxHandle};
use crate::link::ContentLink;
use crate::receipt::IssuanceReceipt;
use crate::store::{NodeId, StoreError, StoreNetwork};
use crate::Timestamp;

pub use crate::receipt::AuditResult;
pub use audit::{audit_receipt, build_complaint, file_complaint, publisher_nodes, validate_complaint, ComplaintVerdict};
pub use verify::{verify_topic, PipelineCounters, TopicReport, VerifiedClaim, Verdict};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClientError {
    #[error(transparent)]
    Claim(#[from] ClaimError),
    #[error("annotation body is empty")]
    EmptyBody,
    #[error("claim must be signed before issuance")]
    Unsigned,
    #[error("claim has no topic to register under")]
    MissingTopic,
    #[error("store failure: {0}")]
    StoreFailure(#[from] StoreError),
    #[error("ledger rejected the transaction: {0}")]
    LedgerRejection(LedgerError),
    #[error("ledger is unavailable")]
    LedgerUnavailable,
    #[error("publisher {0} is not an active registered publisher")]
    PublisherNotRegistered(String),
    #[error("publisher {0} is unreachable")]
    PublisherUnreachable(String),
    #[error("publisher rejected the request: {0}")]
    PublisherRejected(String),
    #[error("bad receipt: {0}")]
    BadReceipt(String),
    #[error("receipt deadline {deadline} not reached (now {now})")]
    DeadlineNotReached { deadline: Timestamp, now: Timestamp },
    #[error("complaints require a fault, not `ok`")]
    InvalidFault,
    #[error("no registered claim {0} to revoke; give its topic explicitly")]
    UnknownTarget(String),
}

impl From<LedgerError> for ClientError {
    fn from(e: LedgerError) -> Self {
        match e {
            LedgerError::Unavailable => ClientError::LedgerUnavailable,
            other => ClientError::LedgerRejection(other),
        }
    }
}

/// Creator addresses whose claims a viewer is willing to see.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Whitelist {
    allowed: BTreeSet<Address>,
}

impl Whitelist {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, address: &Address) -> bool {
        self.allowed.contains(address)
    }

    pub fn add(&mut self, address: Address) -> bool {
        self.allowed.insert(address)
    }

    pub fn remove(&mut self, address: &Address) -> bool {
        self.allowed.remove(address)
    }

    pub fn len(&self) -> usize {
        self.allowed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.allowed.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Address> {
        self.allowed.iter()
    }

    /// One address per line; blank lines and `#` comments are ignored.
    pub fn load(path: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut list = Self::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let addr = line.parse().map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
            list.add(addr);
        }
        Ok(list)
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        let body: String = self.allowed.iter().map(|a| format!("{a}\n")).collect();
        fs::write(path, body)
    }
}

impl FromIterator<Address> for Whitelist {
    fn from_iter<I: IntoIterator<Item = Address>>(iter: I) -> Self {
        Self { allowed: iter.into_iter().collect() }
    }
}

/// Signed annotation about `url` created and issued by `identity` itself.
pub fn create_annotation(
    identity: &Identity,
    url: &str,
    body: AnnotationBody,
    now: Timestamp,
) -> Result<Claim, ClientError> {
    if matches!(&body, AnnotationBody::Text(t) if t.trim().is_empty()) {
        return Err(ClientError::EmptyBody);
    }
    let claim = Claim::annotation(identity.address(), identity.address(), url, body, now)?;
    Ok(claim.sign(identity)?)
}

/// Signed revocation of `target`, filed under the target's own topic.
pub fn create_revocation(
    identity: &Identity,
    target: ClaimUid,
    topic: Topic,
    now: Timestamp,
) -> Result<Claim, ClientError> {
    let claim = Claim::revocation(identity.address(), identity.address(), target, topic, now);
    Ok(claim.sign(identity)?)
}

/// A direct issuance whose registration transaction is queued on the ledger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectIssue {
    pub handle: TxHandle,
    pub topic: Topic,
    pub link: ContentLink,
    pub issuer: Address,
}

/// Stores the claim on `node` and submits a one-pair registration paid by `identity`.
pub fn submit_direct(
    identity: &Identity,
    claim: &Claim,
    store: &mut StoreNetwork,
    node: &NodeId,
    ledger: &mut Ledger,
    now: Timestamp,
) -> Result<DirectIssue, ClientError> {
    if !claim.is_signed() {
        return Err(ClientError::Unsigned);
    }
    let topic = claim.topic.ok_or(ClientError::MissingTopic)?;
    let link = store.put(node, &claim.to_canonical_bytes()?)?;
    let handle = ledger.register_claims(identity.address(), vec![(topic, link.clone())], now)?;
    Ok(DirectIssue { handle, topic, link, issuer: identity.address() })
}

/// The confirmed record for a direct issuance, if it has been applied.
pub fn direct_record(ledger: &Ledger, issue: &DirectIssue) -> Option<LedgerRecord> {
    let confirmed_at = match ledger.status(issue.handle).ok()? {
        crate::ledger::TxStatus::Confirmed(c) => c.confirmed_at,
        crate::ledger::TxStatus::Pending { .. } => return None,
    };
    ledger
        .get_claim_links(&issue.topic)
        .iter()
        .find(|r| r.link == issue.link && r.issuer == issue.issuer && r.timestamp == confirmed_at)
        .cloned()
}

/// Stores the claim, registers it in a one-pair transaction and waits for
/// confirmation (advancing the ledger clock).
pub fn issue_direct(
    identity: &Identity,
    claim: &Claim,
    store: &mut StoreNetwork,
    node: &NodeId,
    ledger: &mut Ledger,
) -> Result<LedgerRecord, ClientError> {
    let issue = submit_direct(identity, claim, store, node, ledger, ledger.now())?;
    ledger.wait_for(issue.handle)?;
    Ok(direct_record(ledger, &issue).expect("confirmed transaction has its record"))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChannelError {
    #[error("unreachable: {0}")]
    Unreachable(String),
    #[error("rejected: {0}")]
    Rejected(String),
}

/// Transport to a publisher's issuance endpoint.
pub trait IssuanceChannel {
    fn request_issuance(&mut self, claim: &Claim) -> Result<IssuanceReceipt, ChannelError>;
}

/// Sends a signed claim to `publisher` and checks the receipt it returns.
///
/// The receipt is refused unless its digest names this claim, its topic is
/// the claim's topic, and it is signed by the certificate `publisher`
/// registered on the ledger.
pub fn issue_via_publisher(
    claim: &Claim,
    publisher: &PublisherEntry,
    channel: &mut dyn IssuanceChannel,
) -> Result<IssuanceReceipt, ClientError> {
    if !claim.is_signed() {
        return Err(ClientError::Unsigned);
    }
    claim.topic.ok_or(ClientError::MissingTopic)?;
    if publisher.status != PublisherStatus::Active {
        return Err(ClientError::PublisherNotRegistered(publisher.endpoint.clone()));
    }
    let receipt = channel.request_issuance(claim).map_err(|e| match e {
        ChannelError::Unreachable(_) => ClientError::PublisherUnreachable(publisher.endpoint.clone()),
        ChannelError::Rejected(why) => ClientError::PublisherRejected(why),
    })?;
    check_receipt(&receipt, claim, publisher)?;
    Ok(receipt)
}

pub fn check_receipt(receipt: &IssuanceReceipt, claim: &Claim, publisher: &PublisherEntry) -> Result<(), ClientError> {
    if receipt.request_digest != claim.uid()?.0 {
        return Err(ClientError::BadReceipt("digest does not match the claim".into()));
    }
    if Some(receipt.topic) != claim.topic {
        return Err(ClientError::BadReceipt("topic does not match the claim".into()));
    }
    if receipt.publisher != publisher.address {
        return Err(ClientError::BadReceipt("receipt names a different publisher".into()));
    }
    if !receipt.verify(&publisher.certificate) {
        return Err(ClientError::BadReceipt("signature does not verify under the registered certificate".into()));
    }
    Ok(())
}
