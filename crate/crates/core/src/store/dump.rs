//! Blob dump/restore as a directory of files named by rendered link.

use std::fs;
use std::path::Path;

use super::{NodeId, StoreError, StoreNetwork};
use crate::link::ContentLink;

fn io(e: std::io::Error) -> StoreError {
    StoreError::Io(e.to_string())
}

/// Writes every blob held by `node` into `dir`. Returns the number written.
pub fn dump_node(store: &StoreNetwork, node: &NodeId, dir: &Path) -> Result<usize, StoreError> {
    let n = store.node(node).ok_or_else(|| StoreError::UnknownNode(node.clone()))?;
    fs::create_dir_all(dir).map_err(io)?;
    for (link, blob) in &n.blobs {
        fs::write(dir.join(link.to_string()), &blob.bytes).map_err(io)?;
    }
    Ok(n.blobs.len())
}

/// Loads blobs from `dir` into `node`. Files whose name is not a link, or whose
/// content does not hash to their name, are skipped. Returns the number restored.
pub fn restore_node(store: &mut StoreNetwork, node: &NodeId, dir: &Path) -> Result<usize, StoreError> {
    let mut restored = 0;
    let mut entries: Vec<_> = fs::read_dir(dir).map_err(io)?.collect::<Result<_, _>>().map_err(io)?;
    entries.sort_by_key(|e| e.file_name());
    for entry in entries {
        let Ok(link) = entry.file_name().to_string_lossy().parse::<ContentLink>() else { continue };
        let bytes = fs::read(entry.path()).map_err(io)?;
        if !link.matches(&bytes) {
            continue;
        }
        store.put(node, &bytes)?;
        restored += 1;
    }
    Ok(restored)
}
