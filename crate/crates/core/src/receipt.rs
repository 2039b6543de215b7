//! Publisher receipts and audit outcomes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha3::{Digest, Sha3_256};

use crate::claim::{Address, ClaimError, Identity, PublicKey, Signature, Topic};
use crate::codec::{FrameReader, FrameWriter};
use crate::link::ContentLink;
use crate::Timestamp;

const RECEIPT_MAGIC: &[u8] = b"DRCPT/1";

/// A publisher's signed promise to register `(topic, link)` and serve the bytes
/// by `deadline`, where `link` is derived from `request_digest`.
#[derive(Clone, PartialEq, Eq)]
pub struct IssuanceReceipt {
    /// SHA3-256 of the canonical claim bytes, which is also the claim UID.
    pub request_digest: [u8; 32],
    pub topic: Topic,
    pub publisher: Address,
    pub deadline: Timestamp,
    pub publisher_signature: Option<Signature>,
}

impl IssuanceReceipt {
    pub fn new(request_digest: [u8; 32], topic: Topic, publisher: Address, deadline: Timestamp) -> Self {
        Self { request_digest, topic, publisher, deadline, publisher_signature: None }
    }

    /// Content link of the claim this receipt covers.
    pub fn link(&self) -> ContentLink {
        ContentLink::from_sha3_digest(self.request_digest)
    }

    fn write_unsigned(&self) -> FrameWriter {
        let mut w = FrameWriter::new(RECEIPT_MAGIC);
        w.text(&hex::encode(self.request_digest))
            .text(&self.topic.to_hex())
            .text(&self.publisher.to_string())
            .text(&self.deadline.to_string());
        w
    }

    pub fn signing_digest(&self) -> [u8; 32] {
        Sha3_256::digest(self.write_unsigned().finish()).into()
    }

    pub fn to_canonical_bytes(&self) -> Vec<u8> {
        let mut w = self.write_unsigned();
        if let Some(sig) = &self.publisher_signature {
            w.field(&sig.0);
        }
        w.finish()
    }

    pub fn from_canonical_bytes(bytes: &[u8]) -> Result<Self, ClaimError> {
        let bad = |e: crate::codec::FrameError| ClaimError::Malformed(format!("receipt: {e}"));
        let mut r = FrameReader::new(bytes, RECEIPT_MAGIC).map_err(bad)?;
        let mut request_digest = [0u8; 32];
        hex::decode_to_slice(r.text().map_err(bad)?, &mut request_digest)
            .map_err(|e| ClaimError::Malformed(format!("receipt digest: {e}")))?;
        let topic = r.text().map_err(bad)?.parse()?;
        let publisher = r.text().map_err(bad)?.parse()?;
        let deadline = r.decimal().map_err(bad)?;
        let publisher_signature = if r.is_empty() {
            None
        } else {
            Some(Signature(r.field().map_err(bad)?.to_vec()))
        };
        r.end().map_err(bad)?;
        Ok(Self { request_digest, topic, publisher, deadline, publisher_signature })
    }

    /// Signs as `identity`, which must be the named publisher.
    pub fn sign(mut self, identity: &Identity) -> Result<Self, ClaimError> {
        if identity.address() != self.publisher {
            return Err(ClaimError::IdentityMismatch {
                expected: self.publisher,
                actual: identity.address(),
            });
        }
        self.publisher_signature = Some(identity.sign_digest(&self.signing_digest()));
        Ok(self)
    }

    /// True iff the signature was produced by `certificate` and that key's
    /// address is the publisher named in the receipt.
    pub fn verify(&self, certificate: &PublicKey) -> bool {
        let Some(sig) = &self.publisher_signature else {
            return false;
        };
        match sig.recover(&self.signing_digest()) {
            Ok(key) => key == *certificate && key.address() == self.publisher,
            Err(_) => false,
        }
    }

    pub fn to_document(&self) -> ReceiptDocument {
        ReceiptDocument {
            kind: "IssuanceReceipt".into(),
            request_digest: hex::encode(self.request_digest),
            link: self.link().to_string(),
            topic: self.topic,
            publisher: self.publisher,
            deadline: self.deadline,
            proof: self.publisher_signature.as_ref().map(|s| ReceiptProof {
                kind: crate::claim::PROOF_TYPE.into(),
                signature_value: s.to_hex(),
            }),
        }
    }

    pub fn from_document(doc: &ReceiptDocument) -> Result<Self, ClaimError> {
        let mut request_digest = [0u8; 32];
        hex::decode_to_slice(&doc.request_digest, &mut request_digest)
            .map_err(|e| ClaimError::Malformed(format!("receipt digest: {e}")))?;
        let receipt = Self {
            request_digest,
            topic: doc.topic,
            publisher: doc.publisher,
            deadline: doc.deadline,
            publisher_signature: doc
                .proof
                .as_ref()
                .map(|p| Signature::from_hex(&p.signature_value))
                .transpose()?,
        };
        if receipt.link().to_string() != doc.link {
            return Err(ClaimError::Malformed("receipt link does not match its digest".into()));
        }
        Ok(receipt)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("receipt documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, ClaimError> {
        let doc: ReceiptDocument =
            serde_json::from_str(text).map_err(|e| ClaimError::Malformed(format!("receipt document: {e}")))?;
        Self::from_document(&doc)
    }
}

impl fmt::Debug for IssuanceReceipt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IssuanceReceipt")
            .field("link", &self.link())
            .field("topic", &self.topic)
            .field("publisher", &self.publisher)
            .field("deadline", &self.deadline)
            .field("signed", &self.publisher_signature.is_some())
            .finish()
    }
}

impl Serialize for IssuanceReceipt {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_document().serialize(s)
    }
}

impl<'de> Deserialize<'de> for IssuanceReceipt {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = ReceiptDocument::deserialize(d)?;
        Self::from_document(&doc).map_err(serde::de::Error::custom)
    }
}

/// Receipt rendered as a signed document in the same layout as claim documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReceiptDocument {
    #[serde(rename = "type")]
    pub kind: String,
    pub request_digest: String,
    pub link: String,
    pub topic: Topic,
    pub publisher: Address,
    pub deadline: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proof: Option<ReceiptProof>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReceiptProof {
    #[serde(rename = "type")]
    pub kind: String,
    pub signature_value: String,
}

/// Outcome of auditing a receipt after its deadline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditResult {
    Ok,
    /// Nothing was registered for the claim.
    RequestDrop,
    /// The link was registered, but only under another topic.
    RequestCorruption,
    /// Registered, but no publisher serves the bytes.
    ReplicaDrop,
}

impl AuditResult {
    pub const ALL: [AuditResult; 4] =
        [AuditResult::Ok, AuditResult::RequestDrop, AuditResult::RequestCorruption, AuditResult::ReplicaDrop];

    pub fn as_str(self) -> &'static str {
        match self {
            AuditResult::Ok => "ok",
            AuditResult::RequestDrop => "request_drop",
            AuditResult::RequestCorruption => "request_corruption",
            AuditResult::ReplicaDrop => "replica_drop",
        }
    }

    pub fn is_fault(self) -> bool {
        self != AuditResult::Ok
    }
}

impl fmt::Display for AuditResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AuditResult {
    type Err = ClaimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| ClaimError::Malformed(format!("unknown audit result {s:?}")))
    }
}
