//! Content-addressed claim storage across simulated nodes.
//!
//! Every node keeps a blob map keyed by [`ContentLink`]. A global provider
//! index stands in for a DHT. Reads are always verified: bytes whose digest
//! does not match the requested link are discarded and the next holder is
//! tried, so a byzantine holder can cause a miss but never a bad read.
//!
//! Unpinned blobs are evicted least-recently-used first when a node has a
//! byte capacity, and [`StoreNetwork::collect_garbage`] drops everything whose
//! pin has lapsed.

mod dump;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::link::ContentLink;
use crate::Timestamp;

pub use dump::{dump_node, restore_node};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NodeId({})", self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StoreError {
    #[error("node {0} is offline")]
    NodeOffline(NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("content {0} not found on any online node")]
    NotFound(ContentLink),
    #[error("content {0} only available from holders serving corrupted bytes")]
    IntegrityViolation(ContentLink),
    #[error("content of {size} bytes exceeds node capacity {capacity}")]
    TooLarge { size: u64, capacity: u64 },
    #[error("i/o: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicationPolicy {
    /// Total copies including the origin; at least one.
    pub copies: usize,
}

impl Default for ReplicationPolicy {
    fn default() -> Self {
        Self { copies: 3 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Blob {
    #[serde(with = "hex_bytes")]
    bytes: Vec<u8>,
    last_used: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoreNode {
    id: NodeId,
    online: bool,
    /// Serves a corrupted copy to remote fetchers. Simulation only.
    byzantine: bool,
    capacity: Option<u64>,
    blobs: BTreeMap<ContentLink, Blob>,
    /// Pin expiry times.
    pins: BTreeMap<ContentLink, Timestamp>,
    used_bytes: u64,
    access_clock: u64,
}

impl StoreNode {
    fn new(id: NodeId) -> Self {
        Self {
            id,
            online: true,
            byzantine: false,
            capacity: None,
            blobs: BTreeMap::new(),
            pins: BTreeMap::new(),
            used_bytes: 0,
            access_clock: 0,
        }
    }

    pub fn id(&self) -> &NodeId {
        &self.id
    }

    pub fn is_online(&self) -> bool {
        self.online
    }

    pub fn holds(&self, link: &ContentLink) -> bool {
        self.blobs.contains_key(link)
    }

    pub fn used_bytes(&self) -> u64 {
        self.used_bytes
    }

    pub fn blob_count(&self) -> usize {
        self.blobs.len()
    }

    pub fn links(&self) -> impl Iterator<Item = &ContentLink> {
        self.blobs.keys()
    }

    pub fn is_pinned(&self, link: &ContentLink, now: Timestamp) -> bool {
        self.pins.get(link).is_some_and(|&until| until > now)
    }

    fn touch(&mut self, link: &ContentLink) -> Option<&[u8]> {
        self.access_clock += 1;
        let tick = self.access_clock;
        self.blobs.get_mut(link).map(|b| {
            b.last_used = tick;
            b.bytes.as_slice()
        })
    }

    /// Bytes as this node would hand them to a remote peer.
    fn serve(&mut self, link: &ContentLink) -> Option<Vec<u8>> {
        let byzantine = self.byzantine;
        let mut bytes = self.touch(link)?.to_vec();
        if byzantine {
            match bytes.first_mut() {
                Some(b) => *b ^= 0x01,
                None => bytes.push(0),
            }
        }
        Some(bytes)
    }
}

/// Counters for observing fetch behaviour in tests and the harness.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchStats {
    pub local_hits: u64,
    pub remote_fetches: u64,
    pub integrity_violations: u64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StoreNetwork {
    nodes: BTreeMap<NodeId, StoreNode>,
    providers: BTreeMap<ContentLink, BTreeSet<NodeId>>,
    now: Timestamp,
    stats: FetchStats,
}

impl StoreNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: impl Into<NodeId>) -> &mut StoreNode {
        let id = id.into();
        self.nodes.entry(id.clone()).or_insert_with(|| StoreNode::new(id))
    }

    pub fn node(&self, id: &NodeId) -> Option<&StoreNode> {
        self.nodes.get(id)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.keys()
    }

    fn node_mut(&mut self, id: &NodeId) -> Result<&mut StoreNode, StoreError> {
        self.nodes.get_mut(id).ok_or_else(|| StoreError::UnknownNode(id.clone()))
    }

    fn online_node_mut(&mut self, id: &NodeId) -> Result<&mut StoreNode, StoreError> {
        let node = self.node_mut(id)?;
        if !node.online {
            return Err(StoreError::NodeOffline(id.clone()));
        }
        Ok(node)
    }

    pub fn set_online(&mut self, id: &NodeId, online: bool) -> Result<(), StoreError> {
        self.node_mut(id)?.online = online;
        Ok(())
    }

    pub fn is_online(&self, id: &NodeId) -> bool {
        self.nodes.get(id).is_some_and(|n| n.online)
    }

    pub fn set_byzantine(&mut self, id: &NodeId, byzantine: bool) -> Result<(), StoreError> {
        self.node_mut(id)?.byzantine = byzantine;
        Ok(())
    }

    pub fn set_capacity(&mut self, id: &NodeId, capacity: Option<u64>) -> Result<(), StoreError> {
        self.node_mut(id)?.capacity = capacity;
        self.enforce_capacity(id, None);
        Ok(())
    }

    pub fn now(&self) -> Timestamp {
        self.now
    }

    pub fn advance_to(&mut self, now: Timestamp) {
        self.now = self.now.max(now);
    }

    pub fn stats(&self) -> FetchStats {
        self.stats
    }

    /// Online nodes currently holding `link`, in id order.
    pub fn holders(&self, link: &ContentLink) -> Vec<NodeId> {
        self.providers
            .get(link)
            .into_iter()
            .flatten()
            .filter(|id| self.is_online(id))
            .cloned()
            .collect()
    }

    /// Stores `content` on `node` and returns its link. Idempotent.
    pub fn put(&mut self, node: &NodeId, content: &[u8]) -> Result<ContentLink, StoreError> {
        let link = ContentLink::of(content);
        self.insert(node, link.clone(), content.to_vec())?;
        Ok(link)
    }

    fn insert(&mut self, node_id: &NodeId, link: ContentLink, bytes: Vec<u8>) -> Result<(), StoreError> {
        let node = self.online_node_mut(node_id)?;
        if let Some(cap) = node.capacity {
            if bytes.len() as u64 > cap {
                return Err(StoreError::TooLarge { size: bytes.len() as u64, capacity: cap });
            }
        }
        node.access_clock += 1;
        let tick = node.access_clock;
        if let Some(existing) = node.blobs.get_mut(&link) {
            existing.last_used = tick;
        } else {
            node.used_bytes += bytes.len() as u64;
            node.blobs.insert(link.clone(), Blob { bytes, last_used: tick });
            self.providers.entry(link.clone()).or_default().insert(node_id.clone());
        }
        self.enforce_capacity(node_id, Some(&link));
        Ok(())
    }

    /// Evicts least-recently-used unpinned blobs until the node fits its capacity.
    fn enforce_capacity(&mut self, node_id: &NodeId, keep: Option<&ContentLink>) {
        let now = self.now;
        let Some(node) = self.nodes.get_mut(node_id) else { return };
        let Some(cap) = node.capacity else { return };
        while node.used_bytes > cap {
            let victim = node
                .blobs
                .iter()
                .filter(|(l, _)| Some(*l) != keep && !node.is_pinned(l, now))
                .min_by_key(|(_, b)| b.last_used)
                .map(|(l, _)| l.clone());
            let Some(victim) = victim else { break };
            Self::remove_blob(node, &mut self.providers, &victim);
        }
    }

    fn remove_blob(
        node: &mut StoreNode,
        providers: &mut BTreeMap<ContentLink, BTreeSet<NodeId>>,
        link: &ContentLink,
    ) {
        if let Some(blob) = node.blobs.remove(link) {
            node.used_bytes -= blob.bytes.len() as u64;
        }
        node.pins.remove(link);
        if let Some(set) = providers.get_mut(link) {
            set.remove(&node.id);
            if set.is_empty() {
                providers.remove(link);
            }
        }
    }

    /// Retrieves `link` on behalf of `node`: served locally when cached,
    /// otherwise fetched from any online holder and cached at `node`.
    pub fn get(&mut self, node: &NodeId, link: &ContentLink) -> Result<Vec<u8>, StoreError> {
        let local = self.online_node_mut(node)?;
        if let Some(bytes) = local.touch(link) {
            let bytes = bytes.to_vec();
            if link.matches(&bytes) {
                self.stats.local_hits += 1;
                return Ok(bytes);
            }
        }
        let candidates: Vec<NodeId> = self.holders(link).into_iter().filter(|h| h != node).collect();
        let bytes = self.fetch_verified(&candidates, link)?;
        self.insert(node, link.clone(), bytes.clone())?;
        Ok(bytes)
    }

    /// Retrieves `link` from one of `candidates` without caching it anywhere.
    pub fn fetch_from(&mut self, candidates: &[NodeId], link: &ContentLink) -> Result<Vec<u8>, StoreError> {
        self.fetch_verified(candidates, link)
    }

    fn fetch_verified(&mut self, candidates: &[NodeId], link: &ContentLink) -> Result<Vec<u8>, StoreError> {
        let mut corrupted = false;
        for id in candidates {
            let Some(holder) = self.nodes.get_mut(id) else { continue };
            if !holder.online {
                continue;
            }
            let Some(bytes) = holder.serve(link) else { continue };
            self.stats.remote_fetches += 1;
            if link.matches(&bytes) {
                return Ok(bytes);
            }
            self.stats.integrity_violations += 1;
            corrupted = true;
        }
        if corrupted {
            Err(StoreError::IntegrityViolation(link.clone()))
        } else {
            Err(StoreError::NotFound(link.clone()))
        }
    }

    /// Bytes held by `node` itself, with no network fallback.
    pub fn get_local(&mut self, node: &NodeId, link: &ContentLink) -> Result<Vec<u8>, StoreError> {
        let local = self.online_node_mut(node)?;
        match local.touch(link) {
            Some(bytes) if link.matches(bytes) => {
                let bytes = bytes.to_vec();
                self.stats.local_hits += 1;
                Ok(bytes)
            }
            _ => Err(StoreError::NotFound(link.clone())),
        }
    }

    /// Keeps `link` on `node` for at least `duration` seconds, fetching it first if needed.
    pub fn pin(&mut self, node: &NodeId, link: &ContentLink, duration: u64) -> Result<(), StoreError> {
        self.get(node, link)?;
        let until = self.now.saturating_add(duration);
        let n = self.online_node_mut(node)?;
        let entry = n.pins.entry(link.clone()).or_insert(until);
        *entry = (*entry).max(until);
        Ok(())
    }

    /// Drops every blob on `node` that is not under an active pin. Returns the number evicted.
    pub fn collect_garbage(&mut self, node_id: &NodeId) -> Result<usize, StoreError> {
        let now = self.now;
        let node = self.node_mut(node_id)?;
        let victims: Vec<ContentLink> = node.blobs.keys().filter(|l| !node.is_pinned(l, now)).cloned().collect();
        let node = self.nodes.get_mut(node_id).expect("checked above");
        for link in &victims {
            Self::remove_blob(node, &mut self.providers, link);
        }
        Ok(victims.len())
    }

    /// Removes a blob outright, pinned or not. Used to script replica loss.
    pub fn drop_blob(&mut self, node_id: &NodeId, link: &ContentLink) -> Result<bool, StoreError> {
        let node = self.node_mut(node_id)?;
        let had = node.holds(link);
        let node = self.nodes.get_mut(node_id).expect("checked above");
        Self::remove_blob(node, &mut self.providers, link);
        Ok(had)
    }
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        hex::decode(String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests;
