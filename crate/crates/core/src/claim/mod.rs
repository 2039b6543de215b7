//! Claim envelopes.
//!
//! A claim carries one of four payloads (annotation, batch manifest, revocation,
//! complaint) plus creator, issuer, optional topic and creation time. The
//! canonical byte form is a length-prefixed frame in fixed field order:
//!
//! ```text
//! "DCLAIM/1" kind creator_id issuer_id topic created_at payload [signature]
//! ```
//!
//! Text fields are UTF-8, integers decimal, the topic is hex (empty when
//! absent). The creator signs SHA3-256 of the frame without the signature
//! field; the claim UID is SHA3-256 of the full frame, which makes it equal to
//! the digest of the claim's content link.

mod document;
mod identity;
mod topic;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha3::{Digest, Sha3_256};
use thiserror::Error;

use crate::codec::{FrameError, FrameReader, FrameWriter};
use crate::link::ContentLink;
use crate::receipt::{AuditResult, IssuanceReceipt};
use crate::Timestamp;

pub use document::{ClaimDocument, ClaimProof, ClaimSubject, PROOF_TYPE};
pub use identity::{Address, Identity, PublicKey, Signature, SIGNATURE_LEN};
pub use topic::{normalize_url, topic_of, Topic};

const CLAIM_MAGIC: &[u8] = b"DCLAIM/1";
const ANNOTATION_CONTEXT: &str = "http://www.w3.org/ns/anno.jsonld";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClaimError {
    #[error("missing field `{0}` required by this claim kind")]
    MissingField(&'static str),
    #[error("field `{0}` is not allowed for this claim kind")]
    UnexpectedField(&'static str),
    #[error("claim creator is {expected} but signing identity is {actual}")]
    IdentityMismatch { expected: Address, actual: Address },
    #[error("claim is already signed")]
    AlreadySigned,
    #[error("claim is not signed")]
    Unsigned,
    #[error("malformed signature: {0}")]
    MalformedSignature(String),
    #[error("invalid url {0}")]
    InvalidUrl(String),
    #[error("annotation topic does not match its target url")]
    TopicMismatch,
    #[error("complaints must name a fault, not `ok`")]
    InvalidFault,
    #[error("bytes are parseable but not in canonical form")]
    NonCanonical,
    #[error("malformed claim: {0}")]
    Malformed(String),
}

impl From<FrameError> for ClaimError {
    fn from(e: FrameError) -> Self {
        ClaimError::Malformed(e.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClaimKind {
    Annotation,
    Batch,
    Revocation,
    Complaint,
}

impl ClaimKind {
    pub const ALL: [ClaimKind; 4] =
        [ClaimKind::Annotation, ClaimKind::Batch, ClaimKind::Revocation, ClaimKind::Complaint];

    pub fn token(self) -> &'static str {
        match self {
            ClaimKind::Annotation => "annotation",
            ClaimKind::Batch => "batch",
            ClaimKind::Revocation => "revocation",
            ClaimKind::Complaint => "complaint",
        }
    }

    /// Annotation and revocation claims live under a topic; the others never do.
    pub fn requires_topic(self) -> bool {
        matches!(self, ClaimKind::Annotation | ClaimKind::Revocation)
    }
}

impl fmt::Display for ClaimKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for ClaimKind {
    type Err = ClaimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.token() == s)
            .ok_or_else(|| ClaimError::Malformed(format!("unknown claim kind {s:?}")))
    }
}

/// Content digest of a full signed claim.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClaimUid(pub [u8; 32]);

impl ClaimUid {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn link(&self) -> ContentLink {
        ContentLink::from_sha3_digest(self.0)
    }
}

impl fmt::Display for ClaimUid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for ClaimUid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ClaimUid({})", &self.to_hex()[..12])
    }
}

impl FromStr for ClaimUid {
    type Err = ClaimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).map_err(|e| ClaimError::Malformed(format!("uid {s:?}: {e}")))?;
        Ok(ClaimUid(out))
    }
}

impl Serialize for ClaimUid {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for ClaimUid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// What an annotation says about its target.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnnotationBody {
    /// True/false classification of the page.
    Verdict(bool),
    /// Free-text comment, stored byte-for-byte.
    Text(String),
}

impl AnnotationBody {
    fn purpose(&self) -> &'static str {
        match self {
            AnnotationBody::Verdict(_) => "assessing",
            AnnotationBody::Text(_) => "commenting",
        }
    }

    fn value(&self) -> String {
        match self {
            AnnotationBody::Verdict(v) => v.to_string(),
            AnnotationBody::Text(t) => t.clone(),
        }
    }
}

impl fmt::Display for AnnotationBody {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnnotationBody::Verdict(v) => write!(f, "verdict:{v}"),
            AnnotationBody::Text(t) => f.write_str(t),
        }
    }
}

/// W3C Web Annotation layout embedded verbatim as the annotation payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct WebAnnotation {
    #[serde(rename = "@context")]
    context: String,
    #[serde(rename = "type")]
    kind: String,
    motivation: String,
    target: String,
    body: WebAnnotationBody,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WebAnnotationBody {
    #[serde(rename = "type")]
    kind: String,
    value: String,
    purpose: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationPayload {
    pub target: String,
    pub body: AnnotationBody,
}

impl AnnotationPayload {
    pub(crate) fn to_web_annotation(&self) -> WebAnnotation {
        WebAnnotation {
            context: ANNOTATION_CONTEXT.into(),
            kind: "Annotation".into(),
            motivation: self.body.purpose().into(),
            target: self.target.clone(),
            body: WebAnnotationBody {
                kind: "TextualBody".into(),
                value: self.body.value(),
                purpose: self.body.purpose().into(),
            },
        }
    }

    pub(crate) fn from_web_annotation(doc: WebAnnotation) -> Result<Self, ClaimError> {
        if doc.context != ANNOTATION_CONTEXT || doc.kind != "Annotation" || doc.body.kind != "TextualBody" {
            return Err(ClaimError::Malformed("not a textual web annotation".into()));
        }
        let body = match doc.body.purpose.as_str() {
            "assessing" => match doc.body.value.as_str() {
                "true" => AnnotationBody::Verdict(true),
                "false" => AnnotationBody::Verdict(false),
                other => return Err(ClaimError::Malformed(format!("verdict must be true/false, got {other:?}"))),
            },
            "commenting" => AnnotationBody::Text(doc.body.value),
            other => return Err(ClaimError::Malformed(format!("unknown annotation purpose {other:?}"))),
        };
        if doc.motivation != body.purpose() {
            return Err(ClaimError::Malformed("motivation and body purpose disagree".into()));
        }
        Ok(Self { target: doc.target, body })
    }

    fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(&self.to_web_annotation()).expect("annotation always serializes")
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self, ClaimError> {
        let doc: WebAnnotation = serde_json::from_slice(bytes)
            .map_err(|e| ClaimError::Malformed(format!("annotation document: {e}")))?;
        Self::from_web_annotation(doc)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchPayload {
    pub entries: Vec<(Topic, ContentLink)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevocationPayload {
    pub target: ClaimUid,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplaintPayload {
    pub receipt: IssuanceReceipt,
    pub fault: AuditResult,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Annotation(AnnotationPayload),
    Batch(BatchPayload),
    Revocation(RevocationPayload),
    Complaint(ComplaintPayload),
}

impl Payload {
    pub fn kind(&self) -> ClaimKind {
        match self {
            Payload::Annotation(_) => ClaimKind::Annotation,
            Payload::Batch(_) => ClaimKind::Batch,
            Payload::Revocation(_) => ClaimKind::Revocation,
            Payload::Complaint(_) => ClaimKind::Complaint,
        }
    }

    fn to_bytes(&self) -> Vec<u8> {
        match self {
            Payload::Annotation(a) => a.to_bytes(),
            Payload::Batch(b) => {
                let mut w = FrameWriter::new(b"");
                w.text(&b.entries.len().to_string());
                for (topic, link) in &b.entries {
                    w.text(&topic.to_hex()).text(&link.to_string());
                }
                w.finish()
            }
            Payload::Revocation(r) => {
                let mut w = FrameWriter::new(b"");
                w.text(&r.target.to_hex());
                w.finish()
            }
            Payload::Complaint(c) => {
                let mut w = FrameWriter::new(b"");
                w.text(c.fault.as_str()).field(&c.receipt.to_canonical_bytes());
                w.finish()
            }
        }
    }

    fn from_bytes(kind: ClaimKind, bytes: &[u8]) -> Result<Self, ClaimError> {
        Ok(match kind {
            ClaimKind::Annotation => Payload::Annotation(AnnotationPayload::from_bytes(bytes)?),
            ClaimKind::Batch => {
                let mut r = FrameReader::new(bytes, b"")?;
                let n = r.decimal()?;
                let mut entries = Vec::new();
                for _ in 0..n {
                    let topic = r.text()?.parse()?;
                    let link = r
                        .text()?
                        .parse()
                        .map_err(|e: crate::link::LinkParseError| ClaimError::Malformed(e.to_string()))?;
                    entries.push((topic, link));
                }
                r.end()?;
                Payload::Batch(BatchPayload { entries })
            }
            ClaimKind::Revocation => {
                let mut r = FrameReader::new(bytes, b"")?;
                let target = r.text()?.parse()?;
                r.end()?;
                Payload::Revocation(RevocationPayload { target })
            }
            ClaimKind::Complaint => {
                let mut r = FrameReader::new(bytes, b"")?;
                let fault: AuditResult = r.text()?.parse()?;
                let receipt = IssuanceReceipt::from_canonical_bytes(r.field()?)?;
                r.end()?;
                Payload::Complaint(ComplaintPayload { receipt, fault })
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Claim {
    pub creator_id: Address,
    /// Who pays for the ledger registration. Not covered by any issuer signature.
    pub issuer_id: Address,
    pub topic: Option<Topic>,
    pub created_at: Timestamp,
    pub payload: Payload,
    pub creator_signature: Option<Signature>,
}

impl Claim {
    /// Unsigned annotation about `url`. The topic is derived from the URL.
    pub fn annotation(
        creator: Address,
        issuer: Address,
        url: &str,
        body: AnnotationBody,
        created_at: Timestamp,
    ) -> Result<Self, ClaimError> {
        let topic = Topic::of_url(url)?;
        Ok(Self {
            creator_id: creator,
            issuer_id: issuer,
            topic: Some(topic),
            created_at,
            payload: Payload::Annotation(AnnotationPayload { target: url.trim().to_string(), body }),
            creator_signature: None,
        })
    }

    pub fn revocation(creator: Address, issuer: Address, target: ClaimUid, topic: Topic, created_at: Timestamp) -> Self {
        Self {
            creator_id: creator,
            issuer_id: issuer,
            topic: Some(topic),
            created_at,
            payload: Payload::Revocation(RevocationPayload { target }),
            creator_signature: None,
        }
    }

    pub fn batch(publisher: Address, entries: Vec<(Topic, ContentLink)>, created_at: Timestamp) -> Self {
        Self {
            creator_id: publisher,
            issuer_id: publisher,
            topic: None,
            created_at,
            payload: Payload::Batch(BatchPayload { entries }),
            creator_signature: None,
        }
    }

    pub fn complaint(
        creator: Address,
        receipt: IssuanceReceipt,
        fault: AuditResult,
        created_at: Timestamp,
    ) -> Result<Self, ClaimError> {
        if !fault.is_fault() {
            return Err(ClaimError::InvalidFault);
        }
        Ok(Self {
            creator_id: creator,
            issuer_id: creator,
            topic: None,
            created_at,
            payload: Payload::Complaint(ComplaintPayload { receipt, fault }),
            creator_signature: None,
        })
    }

    pub fn kind(&self) -> ClaimKind {
        self.payload.kind()
    }

    pub fn is_signed(&self) -> bool {
        self.creator_signature.is_some()
    }

    fn check_fields(&self) -> Result<(), ClaimError> {
        match (self.kind().requires_topic(), self.topic.is_some()) {
            (true, false) => return Err(ClaimError::MissingField("topic")),
            (false, true) => return Err(ClaimError::UnexpectedField("topic")),
            _ => {}
        }
        match &self.payload {
            Payload::Annotation(a) => {
                if a.target.is_empty() {
                    return Err(ClaimError::MissingField("target"));
                }
                if Some(Topic::of_url(&a.target)?) != self.topic {
                    return Err(ClaimError::TopicMismatch);
                }
            }
            Payload::Batch(b) if b.entries.is_empty() => return Err(ClaimError::MissingField("entries")),
            Payload::Complaint(c) if !c.fault.is_fault() => return Err(ClaimError::InvalidFault),
            _ => {}
        }
        Ok(())
    }

    fn write_unsigned(&self) -> Result<FrameWriter, ClaimError> {
        self.check_fields()?;
        let mut w = FrameWriter::new(CLAIM_MAGIC);
        w.text(self.kind().token())
            .text(&self.creator_id.to_string())
            .text(&self.issuer_id.to_string())
            .text(&self.topic.map(|t| t.to_hex()).unwrap_or_default())
            .text(&self.created_at.to_string())
            .field(&self.payload.to_bytes());
        Ok(w)
    }

    /// Canonical bytes of everything the creator signs.
    pub fn unsigned_bytes(&self) -> Result<Vec<u8>, ClaimError> {
        Ok(self.write_unsigned()?.finish())
    }

    /// Canonical bytes of the full envelope, signature included when present.
    pub fn to_canonical_bytes(&self) -> Result<Vec<u8>, ClaimError> {
        let mut w = self.write_unsigned()?;
        if let Some(sig) = &self.creator_signature {
            w.field(&sig.0);
        }
        Ok(w.finish())
    }

    /// Parses canonical bytes. Anything that would not re-serialize to the
    /// same bytes is rejected.
    pub fn from_canonical_bytes(bytes: &[u8]) -> Result<Self, ClaimError> {
        let mut r = FrameReader::new(bytes, CLAIM_MAGIC)?;
        let kind: ClaimKind = r.text()?.parse()?;
        let creator_id = r.text()?.parse()?;
        let issuer_id = r.text()?.parse()?;
        let topic = match r.text()? {
            "" => None,
            hex => Some(hex.parse()?),
        };
        let created_at = r.decimal()?;
        let payload = Payload::from_bytes(kind, r.field()?)?;
        let creator_signature = if r.is_empty() { None } else { Some(Signature(r.field()?.to_vec())) };
        r.end()?;
        let claim = Self { creator_id, issuer_id, topic, created_at, payload, creator_signature };
        if claim.to_canonical_bytes()? != bytes {
            return Err(ClaimError::NonCanonical);
        }
        Ok(claim)
    }

    pub fn signing_digest(&self) -> Result<[u8; 32], ClaimError> {
        Ok(Sha3_256::digest(self.unsigned_bytes()?).into())
    }

    /// Signs as the creator. The identity must own `creator_id`.
    pub fn sign(mut self, identity: &Identity) -> Result<Self, ClaimError> {
        if identity.address() != self.creator_id {
            return Err(ClaimError::IdentityMismatch { expected: self.creator_id, actual: identity.address() });
        }
        if self.creator_signature.is_some() {
            return Err(ClaimError::AlreadySigned);
        }
        let digest = self.signing_digest()?;
        self.creator_signature = Some(identity.sign_digest(&digest));
        Ok(self)
    }

    /// True iff the signature recovers to the key whose address is `creator_id`.
    pub fn verify_signature(&self) -> Result<bool, ClaimError> {
        let sig = self.creator_signature.as_ref().ok_or(ClaimError::Unsigned)?;
        let key = sig.recover(&self.signing_digest()?)?;
        Ok(key.address() == self.creator_id)
    }

    pub fn uid(&self) -> Result<ClaimUid, ClaimError> {
        Ok(ClaimUid(Sha3_256::digest(self.to_canonical_bytes()?).into()))
    }

    pub fn link(&self) -> Result<ContentLink, ClaimError> {
        Ok(self.uid()?.link())
    }

    pub fn annotation_payload(&self) -> Option<&AnnotationPayload> {
        match &self.payload {
            Payload::Annotation(a) => Some(a),
            _ => None,
        }
    }

    pub fn revocation_target(&self) -> Option<ClaimUid> {
        match &self.payload {
            Payload::Revocation(r) => Some(r.target),
            _ => None,
        }
    }
}
