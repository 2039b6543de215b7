//! Verifiable-credential shaped JSON documents for claims.
//!
//! The binary canonical form governs signatures and UIDs; documents exist for
//! import/export and HTTP bodies. Importing a document rebuilds the exact
//! claim, and a signed document's `id` must name the rebuilt claim's UID.

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    AnnotationPayload, BatchPayload, Claim, ClaimError, ClaimKind, ComplaintPayload, Payload, RevocationPayload,
    Signature, WebAnnotation,
};
use crate::claim::{Address, Topic};
use crate::link::ContentLink;
use crate::receipt::{IssuanceReceipt, ReceiptDocument};

pub const PROOF_TYPE: &str = "EcdsaSecp256k1RecoverySignature2020";
const CREDENTIALS_CONTEXT: &str = "https://www.w3.org/2018/credentials/v1";
const ID_PREFIX: &str = "urn:claim:";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClaimDocument {
    #[serde(rename = "@context")]
    pub context: Vec<String>,
    /// `urn:claim:<uid>` for signed claims; absent otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(rename = "type")]
    pub types: Vec<String>,
    pub issuer: Address,
    pub issuance_date: String,
    pub credential_subject: ClaimSubject,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proof: Option<ClaimProof>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClaimSubject {
    pub kind: ClaimKind,
    pub creator: Address,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<Topic>,
    pub created_at: u64,
    pub payload: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClaimProof {
    #[serde(rename = "type")]
    pub kind: String,
    pub creator: Address,
    pub signature_value: String,
}

#[derive(Serialize, Deserialize)]
struct BatchEntry {
    topic: Topic,
    link: ContentLink,
}

fn rfc3339(secs: u64) -> String {
    i64::try_from(secs)
        .ok()
        .and_then(|s| DateTime::<Utc>::from_timestamp(s, 0))
        .map(|d| d.to_rfc3339_opts(SecondsFormat::Secs, true))
        .unwrap_or_default()
}

fn malformed(e: impl std::fmt::Display) -> ClaimError {
    ClaimError::Malformed(format!("claim document: {e}"))
}

impl Claim {
    pub fn to_document(&self) -> Result<ClaimDocument, ClaimError> {
        let payload = match &self.payload {
            Payload::Annotation(a) => serde_json::to_value(a.to_web_annotation()),
            Payload::Batch(b) => serde_json::to_value(
                b.entries
                    .iter()
                    .map(|(topic, link)| BatchEntry { topic: *topic, link: link.clone() })
                    .collect::<Vec<_>>(),
            ),
            Payload::Revocation(r) => Ok(serde_json::json!({ "target": r.target })),
            Payload::Complaint(c) => Ok(serde_json::json!({
                "fault": c.fault,
                "receipt": c.receipt.to_document(),
            })),
        }
        .map_err(malformed)?;
        let kind = self.kind();
        let mut kind_type = kind.token().to_string();
        kind_type[..1].make_ascii_uppercase();
        Ok(ClaimDocument {
            context: vec![CREDENTIALS_CONTEXT.into(), super::ANNOTATION_CONTEXT.into()],
            id: if self.is_signed() { Some(format!("{ID_PREFIX}{}", self.uid()?)) } else { None },
            types: vec!["VerifiableCredential".into(), format!("{kind_type}Claim")],
            issuer: self.issuer_id,
            issuance_date: rfc3339(self.created_at),
            credential_subject: ClaimSubject {
                kind,
                creator: self.creator_id,
                topic: self.topic,
                created_at: self.created_at,
                payload,
            },
            proof: self.creator_signature.as_ref().map(|s| ClaimProof {
                kind: PROOF_TYPE.into(),
                creator: self.creator_id,
                signature_value: s.to_hex(),
            }),
        })
    }

    pub fn from_document(doc: &ClaimDocument) -> Result<Self, ClaimError> {
        let subject = &doc.credential_subject;
        let payload = match subject.kind {
            ClaimKind::Annotation => {
                let web: WebAnnotation = serde_json::from_value(subject.payload.clone()).map_err(malformed)?;
                Payload::Annotation(AnnotationPayload::from_web_annotation(web)?)
            }
            ClaimKind::Batch => {
                let entries: Vec<BatchEntry> = serde_json::from_value(subject.payload.clone()).map_err(malformed)?;
                Payload::Batch(BatchPayload { entries: entries.into_iter().map(|e| (e.topic, e.link)).collect() })
            }
            ClaimKind::Revocation => {
                let target = subject
                    .payload
                    .get("target")
                    .cloned()
                    .ok_or(ClaimError::MissingField("target"))?;
                Payload::Revocation(RevocationPayload { target: serde_json::from_value(target).map_err(malformed)? })
            }
            ClaimKind::Complaint => {
                let fault = subject.payload.get("fault").cloned().ok_or(ClaimError::MissingField("fault"))?;
                let receipt = subject.payload.get("receipt").cloned().ok_or(ClaimError::MissingField("receipt"))?;
                let receipt: ReceiptDocument = serde_json::from_value(receipt).map_err(malformed)?;
                Payload::Complaint(ComplaintPayload {
                    fault: serde_json::from_value(fault).map_err(malformed)?,
                    receipt: IssuanceReceipt::from_document(&receipt)?,
                })
            }
        };
        let creator_signature = match &doc.proof {
            Some(p) if p.creator != subject.creator => {
                return Err(malformed("proof creator differs from subject creator"))
            }
            Some(p) => Some(Signature::from_hex(&p.signature_value)?),
            None => None,
        };
        let claim = Claim {
            creator_id: subject.creator,
            issuer_id: doc.issuer,
            topic: subject.topic,
            created_at: subject.created_at,
            payload,
            creator_signature,
        };
        claim.check_fields()?;
        if doc.issuance_date != rfc3339(claim.created_at) {
            return Err(malformed("issuanceDate disagrees with createdAt"));
        }
        let expected_id = if claim.is_signed() { Some(format!("{ID_PREFIX}{}", claim.uid()?)) } else { None };
        if doc.id != expected_id {
            return Err(malformed("id does not match the claim's uid"));
        }
        Ok(claim)
    }

    pub fn to_json(&self) -> Result<String, ClaimError> {
        serde_json::to_string_pretty(&self.to_document()?).map_err(malformed)
    }

    pub fn from_json(text: &str) -> Result<Self, ClaimError> {
        let doc: ClaimDocument = serde_json::from_str(text).map_err(malformed)?;
        Self::from_document(&doc)
    }
}
