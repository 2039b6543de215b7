//! Censorship-resistant web annotations.
//!
//! Claims are signed envelopes stored in a content-addressed network and indexed
//! by topic on an append-only ledger. Publishers batch registrations into single
//! ledger transactions, hand out signed receipts, and can be held to account
//! through complaints when they drop, corrupt, or fail to replicate requests.
//!
//! The crate is organised by role:
//!
//! * [`claim`]: identities, topics, claim envelopes and their canonical bytes.
//! * [`link`] / [`store`]: self-describing content links and the replicated store.
//! * [`ledger`]: deterministic sequencer with the annotation and publisher registries.
//! * [`client`]: creation, issuance, the verification pipeline, audits and complaints.
//! * [`publisher`]: the batching publisher node.
//! * [`deployment`]: an embedded world wiring store, ledger and publishers together.
//! * [`sim`]: seeded multi-node scenarios with fault injection.
//! * [`cost`]: the annual operating-cost model.
//! * [`service`]: HTTP+JSON routers for the client and publisher daemons.

pub mod claim;
mod codec;
pub mod client;
pub mod cost;
pub mod deployment;
pub mod ledger;
pub mod link;
pub mod publisher;
pub mod receipt;
pub mod service;
pub mod sim;
pub mod store;

pub use claim::{
    topic_of, Address, AnnotationBody, Claim, ClaimError, ClaimKind, ClaimUid, Identity, Payload,
    PublicKey, Topic,
};
pub use client::{AuditResult, ClientError, VerifiedClaim, Verdict, Whitelist};
pub use deployment::Deployment;
pub use ledger::{ChainConfig, Ledger, LedgerError, LedgerRecord, TxHandle};
pub use link::ContentLink;
pub use publisher::{FaultMode, FaultProfile, PublisherConfig, PublisherNode};
pub use receipt::IssuanceReceipt;
pub use store::{NodeId, StoreError, StoreNetwork};

/// Simulated time in whole seconds.
pub type Timestamp = u64;
