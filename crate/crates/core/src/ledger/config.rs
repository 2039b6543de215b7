use std::path::Path;

use serde::{Deserialize, Serialize};

use super::LedgerError;

/// Gas charged per transaction kind.
///
/// Claim registration is affine in the number of pairs. The defaults put a
/// 100-pair batch at 21,000 + 100 × 1,110.66 = 132,066 gas, which at 3 gwei
/// and 631 USD/ETH is 0.25 USD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GasModel {
    pub base: f64,
    pub per_pair: f64,
    pub register_publisher: u64,
    pub file_complaint: u64,
    pub retire_publisher: u64,
}

impl Default for GasModel {
    fn default() -> Self {
        Self {
            base: 21_000.0,
            per_pair: 1_110.66,
            register_publisher: 90_000,
            file_complaint: 60_000,
            retire_publisher: 30_000,
        }
    }
}

impl GasModel {
    pub fn register_claims(&self, pairs: usize) -> u64 {
        (self.base + self.per_pair * pairs as f64).round() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainConfig {
    pub max_tx_per_second: u32,
    /// Seconds from submission to confirmation.
    pub confirmation_delay: u64,
    /// USD per whole currency unit.
    pub eth_fiat_rate: f64,
    /// Nano-units (gwei) per gas.
    pub default_gas_price: f64,
    pub balances_enabled: bool,
    pub gas: GasModel,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            max_tx_per_second: 20,
            confirmation_delay: 300,
            eth_fiat_rate: 631.0,
            default_gas_price: 3.0,
            balances_enabled: false,
            gas: GasModel::default(),
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<(), LedgerError> {
        let ok = self.max_tx_per_second > 0
            && self.confirmation_delay > 0
            && self.eth_fiat_rate > 0.0
            && self.default_gas_price > 0.0
            && self.gas.base >= 0.0
            && self.gas.per_pair >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(LedgerError::InvalidConfig("rates, delays and prices must be positive".into()))
        }
    }

    /// USD fee for `gas_used` at `gas_price` gwei.
    pub fn fee_usd(&self, gas_used: u64, gas_price: f64) -> f64 {
        gas_used as f64 * gas_price * 1e-9 * self.eth_fiat_rate
    }

    pub fn from_toml_str(text: &str) -> Result<Self, LedgerError> {
        let cfg: Self = toml::from_str(text).map_err(|e| LedgerError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, LedgerError> {
        let text = std::fs::read_to_string(path).map_err(|e| LedgerError::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibrated_batch_gas() {
        assert_eq!(GasModel::default().register_claims(100), 132_066);
        assert_eq!(GasModel::default().register_claims(1), 22_111);
    }

    #[test]
    fn calibrated_batch_fee_is_a_quarter_dollar() {
        let cfg = ChainConfig::default();
        let fee = cfg.fee_usd(132_066, 3.0);
        assert!((fee - 0.25).abs() < 1e-5, "{fee}");
    }

    #[test]
    fn partial_toml_keeps_defaults() {
        let cfg = ChainConfig::from_toml_str("confirmation_delay = 60\n[gas]\nper_pair = 2000.0\n").unwrap();
        assert_eq!(cfg.confirmation_delay, 60);
        assert_eq!(cfg.max_tx_per_second, 20);
        assert_eq!(cfg.gas.per_pair, 2000.0);
        assert_eq!(cfg.gas.base, 21_000.0);
    }

    #[test]
    fn rejects_non_positive() {
        assert!(ChainConfig::from_toml_str("max_tx_per_second = 0").is_err());
        assert!(ChainConfig::from_toml_str("eth_fiat_rate = -1.0").is_err());
    }
}
