//! Receipt audits and the complaint flow.

use serde::{Deserialize, Serialize};

use super::ClientError;
use crate::claim::{Claim, ClaimError, Identity, Payload};
use crate::ledger::{Ledger, TxHandle};
use crate::receipt::{AuditResult, IssuanceReceipt};
use crate::store::{NodeId, StoreNetwork};
use crate::Timestamp;

/// Store nodes of every registered publisher, the only holders an audit may use.
pub fn publisher_nodes(ledger: &Ledger) -> Vec<NodeId> {
    ledger.list_publishers().iter().map(|p| NodeId::new(p.endpoint.clone())).collect()
}

/// Checks whether the publisher kept the promise made in `receipt`.
///
/// The creator is assumed offline: availability is judged only against
/// publisher nodes, never the creator's own copy.
pub fn audit_receipt(
    receipt: &IssuanceReceipt,
    ledger: &Ledger,
    store: &mut StoreNetwork,
    now: Timestamp,
) -> Result<AuditResult, ClientError> {
    if now < receipt.deadline {
        return Err(ClientError::DeadlineNotReached { deadline: receipt.deadline, now });
    }
    if !ledger.is_online() {
        return Err(ClientError::LedgerUnavailable);
    }
    let link = receipt.link();
    if !ledger.get_claim_links(&receipt.topic).iter().any(|r| r.link == link) {
        return Ok(if ledger.topics_for_link(&link).is_empty() {
            AuditResult::RequestDrop
        } else {
            AuditResult::RequestCorruption
        });
    }
    match store.fetch_from(&publisher_nodes(ledger), &link) {
        Ok(_) => Ok(AuditResult::Ok),
        Err(_) => Ok(AuditResult::ReplicaDrop),
    }
}

/// Signed complaint carrying `receipt` as evidence of `fault`.
pub fn build_complaint(
    identity: &Identity,
    receipt: IssuanceReceipt,
    fault: AuditResult,
    now: Timestamp,
) -> Result<Claim, ClientError> {
    let claim = Claim::complaint(identity.address(), receipt, fault, now).map_err(|e| match e {
        ClaimError::InvalidFault => ClientError::InvalidFault,
        other => other.into(),
    })?;
    Ok(claim.sign(identity)?)
}

/// Stores the complaint on `node` and indexes it under the accused publisher.
pub fn file_complaint(
    identity: &Identity,
    complaint: &Claim,
    store: &mut StoreNetwork,
    node: &NodeId,
    ledger: &mut Ledger,
    now: Timestamp,
) -> Result<TxHandle, ClientError> {
    let Payload::Complaint(payload) = &complaint.payload else {
        return Err(ClaimError::Malformed("not a complaint claim".into()).into());
    };
    if !complaint.is_signed() {
        return Err(ClientError::Unsigned);
    }
    let link = store.put(node, &complaint.to_canonical_bytes()?)?;
    Ok(ledger.file_complaint(identity.address(), payload.receipt.publisher, link, now)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "reason", rename_all = "snake_case")]
pub enum ComplaintVerdict {
    Valid,
    Invalid(String),
}

impl ComplaintVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, ComplaintVerdict::Valid)
    }
}

/// Third-party judgement of a complaint: the complaint must be properly
/// signed, its receipt must verify under the accused publisher's registered
/// certificate, and a fresh audit must observe the claimed fault.
pub fn validate_complaint(
    complaint: &Claim,
    ledger: &Ledger,
    store: &mut StoreNetwork,
    now: Timestamp,
) -> Result<ComplaintVerdict, ClientError> {
    let invalid = |why: &str| Ok(ComplaintVerdict::Invalid(why.to_string()));
    let Payload::Complaint(payload) = &complaint.payload else {
        return invalid("not a complaint");
    };
    if !complaint.verify_signature().unwrap_or(false) {
        return invalid("complaint signature does not verify");
    }
    let Some(publisher) = ledger.publisher(&payload.receipt.publisher) else {
        return invalid("receipt names an unregistered publisher");
    };
    if !payload.receipt.verify(&publisher.certificate) {
        return invalid("receipt signature does not verify under the registered certificate");
    }
    match audit_receipt(&payload.receipt, ledger, store, now) {
        Ok(observed) if observed == payload.fault => Ok(ComplaintVerdict::Valid),
        Ok(observed) => Ok(ComplaintVerdict::Invalid(format!(
            "claimed {} but audit observes {}",
            payload.fault.as_str(),
            observed.as_str()
        ))),
        Err(ClientError::DeadlineNotReached { .. }) => invalid("receipt deadline has not passed"),
        Err(e) => Err(e),
    }
}
