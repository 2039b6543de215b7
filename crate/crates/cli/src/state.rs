//! The on-disk state directory used by embedded mode.
//!
//! ```text
//! <state>/world.json       store, ledger, publishers and the clock
//! <state>/cli.toml         defaults written by `init`
//! <state>/key              default identity (hex seed)
//! <state>/whitelist.txt    default whitelist, one address per line
//! <state>/receipts/        receipts handed out by publishers, by claim uid
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use dclaims_core::client::Whitelist;
use dclaims_core::{Deployment, Identity, IssuanceReceipt, NodeId};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Where the ledger lives. Only the in-process ledger is implemented.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LedgerMode {
    #[default]
    Embedded,
}

/// Persisted defaults; every field can be overridden per command.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub key_path: Option<PathBuf>,
    pub ledger: LedgerMode,
    pub publisher_endpoint: Option<String>,
    pub whitelist_path: Option<PathBuf>,
}

#[derive(Clone)]
pub struct StateDir {
    root: PathBuf,
    pub config: CliConfig,
}

impl StateDir {
    pub fn open(root: PathBuf) -> CliResult<Self> {
        let path = root.join("cli.toml");
        let config = match fs::read_to_string(&path) {
            Ok(text) => toml::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => CliConfig::default(),
            Err(e) => return Err(CliError::io(path.display().to_string(), e)),
        };
        Ok(Self { root, config })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn create(&self) -> CliResult<()> {
        fs::create_dir_all(self.root.join("receipts")).map_err(|e| CliError::io(self.root.display().to_string(), e))
    }

    pub fn save_config(&self) -> CliResult<()> {
        let path = self.root.join("cli.toml");
        let text = toml::to_string(&self.config).map_err(|e| CliError::Invalid(e.to_string()))?;
        fs::write(&path, text).map_err(|e| CliError::io(path.display().to_string(), e))
    }

    pub fn world_path(&self) -> PathBuf {
        self.root.join("world.json")
    }

    pub fn load_world(&self) -> CliResult<Deployment> {
        let path = self.world_path();
        if !path.exists() {
            return Err(CliError::MissingWorld(path));
        }
        Deployment::load(&path).map_err(|e| CliError::io(path.display().to_string(), e))
    }

    pub fn save_world(&self, world: &Deployment) -> CliResult<()> {
        let path = self.world_path();
        world.save(&path).map_err(|e| CliError::io(path.display().to_string(), e))
    }

    pub fn key_path(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.config.key_path.clone())
            .unwrap_or_else(|| self.root.join("key"))
    }

    pub fn load_key(&self, flag: Option<&Path>) -> CliResult<Identity> {
        let path = self.key_path(flag);
        if !path.exists() {
            return Err(CliError::MissingKey(path));
        }
        Identity::load(&path).map_err(|e| CliError::io(path.display().to_string(), e))
    }

    pub fn whitelist_path(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.config.whitelist_path.clone())
            .unwrap_or_else(|| self.root.join("whitelist.txt"))
    }

    /// The stored whitelist, or just `own` when none has been saved yet.
    pub fn load_whitelist(&self, flag: Option<&Path>, own: Option<&Identity>) -> CliResult<Whitelist> {
        let path = self.whitelist_path(flag);
        if path.exists() {
            Whitelist::load(&path).map_err(|e| CliError::io(path.display().to_string(), e))
        } else {
            Ok(own.map(|id| id.address()).into_iter().collect())
        }
    }

    pub fn save_whitelist(&self, flag: Option<&Path>, whitelist: &Whitelist) -> CliResult<()> {
        let path = self.whitelist_path(flag);
        whitelist.save(&path).map_err(|e| CliError::io(path.display().to_string(), e))
    }

    pub fn save_receipt(&self, receipt: &IssuanceReceipt) -> CliResult<PathBuf> {
        let dir = self.root.join("receipts");
        fs::create_dir_all(&dir).map_err(|e| CliError::io(dir.display().to_string(), e))?;
        let path = dir.join(format!("{}.json", hex_digest(receipt)));
        fs::write(&path, receipt.to_json()).map_err(|e| CliError::io(path.display().to_string(), e))?;
        Ok(path)
    }

    pub fn receipts(&self) -> CliResult<Vec<IssuanceReceipt>> {
        let dir = self.root.join("receipts");
        let Ok(entries) = fs::read_dir(&dir) else {
            return Ok(Vec::new());
        };
        let mut paths: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
        paths.sort();
        paths.iter().map(|p| read_receipt(p)).collect()
    }
}

fn hex_digest(receipt: &IssuanceReceipt) -> String {
    receipt.request_digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn read_receipt(path: &Path) -> CliResult<IssuanceReceipt> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    Ok(IssuanceReceipt::from_json(&text)?)
}

/// Store node that holds a client's own copies.
pub fn client_node(identity: &Identity) -> NodeId {
    NodeId::new(format!("client-{}", identity.address()))
}
