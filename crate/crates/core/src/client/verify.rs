//! The ordered verification pipeline.
//!
//! Steps run cheapest first: content-digest checks on fetch, then the
//! whitelist, then creator signatures, then revocations. A claim only
//! reaches a step if it survived every earlier one.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{ClientError, Whitelist};
use crate::claim::{Claim, ClaimKind, ClaimUid, Topic};
use crate::ledger::{Ledger, LedgerRecord};
use crate::link::ContentLink;
use crate::store::{NodeId, StoreNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accepted,
    Filtered,
    BadSignature,
    Revoked,
    IntegrityFailed,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Accepted => "accepted",
            Verdict::Filtered => "filtered",
            Verdict::BadSignature => "bad_signature",
            Verdict::Revoked => "revoked",
            Verdict::IntegrityFailed => "integrity_failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifiedClaim {
    pub link: ContentLink,
    pub record: LedgerRecord,
    /// `None` when the bytes could not be fetched or parsed.
    pub claim: Option<Claim>,
    pub verdict: Verdict,
}

/// How much work each pipeline stage did.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineCounters {
    pub records: usize,
    pub duplicates: usize,
    pub fetched: usize,
    pub integrity_failed: usize,
    pub filtered: usize,
    pub whitelist_survivors: usize,
    pub signature_checks: usize,
    pub bad_signatures: usize,
    pub revoked: usize,
    pub accepted: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicReport {
    pub topic: Topic,
    /// One entry per distinct link, in ledger order.
    pub claims: Vec<VerifiedClaim>,
    pub counters: PipelineCounters,
}

impl TopicReport {
    pub fn accepted(&self) -> impl Iterator<Item = &VerifiedClaim> {
        self.claims.iter().filter(|c| c.verdict == Verdict::Accepted)
    }

    /// Accepted annotations, the list a viewer actually reads.
    pub fn accepted_annotations(&self) -> impl Iterator<Item = &VerifiedClaim> {
        self.accepted()
            .filter(|c| c.claim.as_ref().is_some_and(|cl| cl.kind() == ClaimKind::Annotation))
    }
}

/// Runs the four verification steps over every claim registered for `url`.
///
/// Bytes are fetched through `viewer`'s store node. A link whose bytes are
/// unavailable, fail the digest check, or do not parse as a claim whose
/// topic matches is reported as `IntegrityFailed` rather than aborting.
pub fn verify_topic(
    url: &str,
    whitelist: &Whitelist,
    store: &mut StoreNetwork,
    viewer: &NodeId,
    ledger: &Ledger,
) -> Result<TopicReport, ClientError> {
    if !ledger.is_online() {
        return Err(ClientError::LedgerUnavailable);
    }
    let topic = Topic::of_url(url)?;
    let mut counters = PipelineCounters::default();
    let mut seen = BTreeSet::new();
    let mut claims = Vec::new();

    // step 1: ledger query plus digest-checked fetch
    for record in ledger.get_claim_links(&topic) {
        counters.records += 1;
        if !seen.insert(record.link.clone()) {
            counters.duplicates += 1;
            continue;
        }
        let parsed = store
            .get(viewer, &record.link)
            .ok()
            .and_then(|bytes| Claim::from_canonical_bytes(&bytes).ok())
            .filter(|c| c.topic == Some(topic));
        let verdict = match parsed {
            Some(_) => {
                counters.fetched += 1;
                Verdict::Accepted
            }
            None => {
                counters.integrity_failed += 1;
                Verdict::IntegrityFailed
            }
        };
        claims.push(VerifiedClaim { link: record.link.clone(), record: record.clone(), claim: parsed, verdict });
    }

    // step 2: whitelist
    for vc in claims.iter_mut().filter(|c| c.verdict == Verdict::Accepted) {
        let claim = vc.claim.as_ref().expect("fetched claims are parsed");
        if whitelist.contains(&claim.creator_id) {
            counters.whitelist_survivors += 1;
        } else {
            vc.verdict = Verdict::Filtered;
            counters.filtered += 1;
        }
    }

    // step 3: creator signatures
    for vc in claims.iter_mut().filter(|c| c.verdict == Verdict::Accepted) {
        let claim = vc.claim.as_ref().expect("fetched claims are parsed");
        counters.signature_checks += 1;
        if !claim.verify_signature().unwrap_or(false) {
            vc.verdict = Verdict::BadSignature;
            counters.bad_signatures += 1;
        }
    }

    // step 4: revocations. A surviving revocation is signed by its creator,
    // so it takes effect only against claims by that same creator.
    let mut revoked_by: BTreeMap<ClaimUid, BTreeSet<_>> = BTreeMap::new();
    for vc in claims.iter().filter(|c| c.verdict == Verdict::Accepted) {
        let claim = vc.claim.as_ref().expect("fetched claims are parsed");
        if let Some(target) = claim.revocation_target() {
            revoked_by.entry(target).or_default().insert(claim.creator_id);
        }
    }
    for vc in claims.iter_mut().filter(|c| c.verdict == Verdict::Accepted) {
        let claim = vc.claim.as_ref().expect("fetched claims are parsed");
        if claim.uid().ok().and_then(|u| revoked_by.get(&u)).is_some_and(|creators| creators.contains(&claim.creator_id)) {
            vc.verdict = Verdict::Revoked;
            counters.revoked += 1;
        }
    }

    counters.accepted = claims.iter().filter(|c| c.verdict == Verdict::Accepted).count();
    Ok(TopicReport { topic, claims, counters })
}
