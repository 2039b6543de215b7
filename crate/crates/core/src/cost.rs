//! Annual operating cost of one publisher serving one news page.
//!
//! Every function here is pure and linear in its price inputs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ledger::{ChainConfig, GasModel};

/// Bundled activity statistics and prices.
pub const DEFAULTS_TOML: &str = include_str!("../fixtures/cost_defaults.toml");

const DAYS_PER_YEAR: f64 = 365.0;
const MONTHS_PER_YEAR: u32 = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("interaction rate must be positive")]
    ZeroRate,
    #[error("invalid cost parameters: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityStats {
    pub posts_per_page_day: f64,
    pub interactions_per_post_day: f64,
    pub interactions_per_page_day: f64,
    pub avg_comment_chars: f64,
    pub followers_per_page: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub claim_size_bytes: f64,
    pub storage_price_gb_month: f64,
    pub bytes_per_gb: f64,
    pub server_annual_usd: f64,
    pub server_rps: f64,
    pub batch_size: u32,
    pub gas_price_gwei: f64,
    pub eth_usd: f64,
    pub tx_fee_usd: f64,
    pub interaction_rate_per_min: f64,
    /// Share of page followers expected to use the system.
    pub user_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct CostFile {
    stats: ActivityStats,
    params: CostParams,
}

impl Default for ActivityStats {
    fn default() -> Self {
        defaults().0
    }
}

impl Default for CostParams {
    fn default() -> Self {
        defaults().1
    }
}

fn defaults() -> (ActivityStats, CostParams) {
    let file: CostFile = toml::from_str(DEFAULTS_TOML).expect("bundled cost fixture parses");
    (file.stats, file.params)
}

/// Parses a `[stats]` + `[params]` file. Missing keys fall back to the bundled values.
pub fn parse_cost_file(text: &str) -> Result<(ActivityStats, CostParams), CostError> {
    let mut base: toml::Table = toml::from_str(DEFAULTS_TOML).expect("bundled cost fixture parses");
    let overlay: toml::Table = toml::from_str(text).map_err(|e| CostError::Invalid(e.to_string()))?;
    for (section, values) in overlay {
        match (base.get_mut(&section), values) {
            (Some(toml::Value::Table(dst)), toml::Value::Table(src)) => dst.extend(src),
            (_, v) => {
                base.insert(section, v);
            }
        }
    }
    let file: CostFile = toml::Value::Table(base).try_into().map_err(|e: toml::de::Error| CostError::Invalid(e.to_string()))?;
    file.params.validate()?;
    Ok((file.stats, file.params))
}

impl CostParams {
    pub fn validate(&self) -> Result<(), CostError> {
        if self.batch_size == 0 {
            return Err(CostError::Invalid("batch_size must be at least 1".into()));
        }
        let nonneg = [
            self.claim_size_bytes,
            self.storage_price_gb_month,
            self.server_annual_usd,
            self.server_rps,
            self.gas_price_gwei,
            self.eth_usd,
            self.tx_fee_usd,
            self.interaction_rate_per_min,
            self.user_fraction,
        ];
        if nonneg.iter().any(|v| !v.is_finite() || *v < 0.0) || self.bytes_per_gb <= 0.0 {
            return Err(CostError::Invalid("prices and rates must be finite and nonnegative".into()));
        }
        Ok(())
    }

    /// Fee of a full batch transaction under `gas`, using these prices.
    pub fn gas_model_fee(&self, gas: &GasModel) -> f64 {
        let chain = ChainConfig { eth_fiat_rate: self.eth_usd, ..ChainConfig::default() };
        chain.fee_usd(gas.register_claims(self.batch_size as usize), self.gas_price_gwei)
    }

    pub fn per_claim_fee(&self) -> f64 {
        self.tx_fee_usd / self.batch_size as f64
    }
}

pub fn ethereum_annual_cost(stats: &ActivityStats, params: &CostParams) -> f64 {
    stats.interactions_per_page_day / params.batch_size as f64 * params.tx_fee_usd * DAYS_PER_YEAR
}

pub fn batch_fill_minutes(interaction_rate_per_min: f64, batch_size: u32) -> Result<f64, CostError> {
    if interaction_rate_per_min <= 0.0 {
        return Err(CostError::ZeroRate);
    }
    Ok(batch_size as f64 / interaction_rate_per_min)
}

/// Storage bill when a month's ingest is added every month and everything
/// stored so far is billed again each month.
pub fn storage_annual_cost(stats: &ActivityStats, params: &CostParams) -> f64 {
    let days_per_month = DAYS_PER_YEAR / MONTHS_PER_YEAR as f64;
    let monthly_gb = stats.interactions_per_page_day * params.claim_size_bytes * days_per_month / params.bytes_per_gb;
    (1..=MONTHS_PER_YEAR).map(|m| m as f64 * monthly_gb * params.storage_price_gb_month).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServerPlan {
    pub servers: u64,
    /// Infinite when no interactions arrive.
    pub articles_per_server: f64,
}

pub fn servers_needed(stats: &ActivityStats, params: &CostParams) -> Result<ServerPlan, CostError> {
    if params.server_rps <= 0.0 {
        return Err(CostError::Invalid("server_rps must be positive".into()));
    }
    let articles_per_server = if params.interaction_rate_per_min > 0.0 {
        params.server_rps * 60.0 / params.interaction_rate_per_min
    } else {
        f64::INFINITY
    };
    let servers = ((stats.posts_per_page_day / articles_per_server).ceil() as u64).max(1);
    Ok(ServerPlan { servers, articles_per_server })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub storage_usd_year: f64,
    pub compute_usd_year: f64,
    pub ethereum_usd_year: f64,
    pub total_usd_year: f64,
    pub per_1000_claims_usd: f64,
    pub per_user_usd: f64,
    pub user_base: f64,
    pub per_claim_fee_usd: f64,
    pub batch_fill_minutes: f64,
    pub servers: ServerPlan,
    pub notes: Vec<String>,
}

pub fn summarize(stats: &ActivityStats, params: &CostParams) -> Result<CostReport, CostError> {
    params.validate()?;
    let storage = storage_annual_cost(stats, params);
    let servers = servers_needed(stats, params)?;
    let compute = servers.servers as f64 * params.server_annual_usd;
    let ethereum = ethereum_annual_cost(stats, params);
    let total = storage + compute + ethereum;
    let annual_claims = stats.interactions_per_page_day * DAYS_PER_YEAR;
    let user_base = params.user_fraction * stats.followers_per_page;
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
    let fill = batch_fill_minutes(params.interaction_rate_per_min, params.batch_size).unwrap_or(f64::INFINITY);

    let mut notes = vec![
        format!(
            "storage bills the cumulative stored volume each month ({} B per claim, {} B per GB)",
            params.claim_size_bytes, params.bytes_per_gb
        ),
        format!("per-user cost divides by {user_base:.0} users, {}% of page followers", params.user_fraction * 100.0),
    ];
    let gas_fee = params.gas_model_fee(&GasModel::default());
    notes.push(format!("batch transaction fee from the gas model: {gas_fee:.9} USD (configured {:.9})", params.tx_fee_usd));
    if fill.is_finite() {
        notes.push(format!("a batch of {} fills in {fill:.1} min", params.batch_size));
    }

    Ok(CostReport {
        storage_usd_year: storage,
        compute_usd_year: compute,
        ethereum_usd_year: ethereum,
        total_usd_year: total,
        per_1000_claims_usd: ratio(total, annual_claims / 1000.0),
        per_user_usd: ratio(total, user_base),
        user_base,
        per_claim_fee_usd: params.per_claim_fee(),
        batch_fill_minutes: fill,
        servers,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn bundled_defaults_load() {
        let s = ActivityStats::default();
        let p = CostParams::default();
        assert_eq!(s.interactions_per_page_day, 303_637.0);
        assert_eq!(p.batch_size, 100);
        assert_eq!(p.claim_size_bytes, 30_720.0);
    }

    #[test]
    fn ethereum_cost_and_linearity() {
        let s = ActivityStats::default();
        let mut p = CostParams::default();
        // 303637 / 100 * 0.25 * 365
        assert!(close(ethereum_annual_cost(&s, &p), 277_068.762_5, 1e-6));
        let base = ethereum_annual_cost(&s, &p);
        p.batch_size = 1;
        assert!(close(ethereum_annual_cost(&s, &p), base * 100.0, 1e-6));
        let zero = ActivityStats { interactions_per_page_day: 0.0, ..s };
        assert_eq!(ethereum_annual_cost(&zero, &p), 0.0);
    }

    #[test]
    fn batch_fill() {
        assert!(close(batch_fill_minutes(4.2, 100).unwrap(), 23.809_523_8, 1e-6));
        assert!(close(batch_fill_minutes(4.2, 1).unwrap(), 0.238_095_2, 1e-6));
        assert!(close(batch_fill_minutes(6073.0 / 1440.0, 100).unwrap(), 23.711_510_0, 1e-6));
        assert_eq!(batch_fill_minutes(0.0, 100), Err(CostError::ZeroRate));
    }

    #[test]
    fn storage_cost() {
        let s = ActivityStats::default();
        let p = CostParams::default();
        // 78 * 303637 * 30720 * (365/12) / 1e9 * 0.10, evaluated independently
        assert!(close(storage_annual_cost(&s, &p), 2213.003_620, 1e-3));
        let zero = ActivityStats { interactions_per_page_day: 0.0, ..s };
        assert_eq!(storage_annual_cost(&zero, &p), 0.0);
        let double = CostParams { claim_size_bytes: p.claim_size_bytes * 2.0, ..p };
        assert!(close(storage_annual_cost(&s, &double), 2.0 * storage_annual_cost(&s, &p), 1e-9));
    }

    #[test]
    fn servers() {
        let s = ActivityStats::default();
        let p = CostParams::default();
        let plan = servers_needed(&s, &p).unwrap();
        assert_eq!(plan.servers, 1);
        assert!(close(plan.articles_per_server, 357.142_857, 1e-5));
        let idle = CostParams { interaction_rate_per_min: 0.0, ..p };
        let plan = servers_needed(&s, &idle).unwrap();
        assert_eq!(plan.servers, 1);
        assert!(plan.articles_per_server.is_infinite());
    }

    #[test]
    fn summary_matches_components() {
        let r = summarize(&ActivityStats::default(), &CostParams::default()).unwrap();
        assert_eq!(r.total_usd_year, r.storage_usd_year + r.compute_usd_year + r.ethereum_usd_year);
        assert_eq!(r.compute_usd_year, 1880.0);
        assert_eq!(r.per_claim_fee_usd, 0.0025);
        assert_eq!(r.user_base, 270_000.0);
        assert!(close(r.per_user_usd, r.total_usd_year / 270_000.0, 1e-12));
        assert!(close(r.per_1000_claims_usd, 2.537, 1e-3));
    }

    #[test]
    fn all_zero_costs() {
        let s = ActivityStats {
            posts_per_page_day: 0.0,
            interactions_per_post_day: 0.0,
            interactions_per_page_day: 0.0,
            avg_comment_chars: 0.0,
            followers_per_page: 0.0,
        };
        let p = CostParams { server_annual_usd: 0.0, ..CostParams::default() };
        let r = summarize(&s, &p).unwrap();
        assert_eq!(r.total_usd_year, 0.0);
        assert_eq!(r.per_1000_claims_usd, 0.0);
        assert_eq!(r.per_user_usd, 0.0);
    }

    #[test]
    fn gas_model_reproduces_table_fee() {
        let p = CostParams::default();
        assert!(close(p.gas_model_fee(&GasModel::default()), p.tx_fee_usd, 1e-6));
    }

    #[test]
    fn partial_override_file() {
        let (s, p) = parse_cost_file("[params]\nbatch_size = 10\n").unwrap();
        assert_eq!(p.batch_size, 10);
        assert_eq!(p.tx_fee_usd, 0.25);
        assert_eq!(s.posts_per_page_day, 50.0);
        assert!(parse_cost_file("[params]\nbatch_size = 0\n").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn doubling_prices_doubles_costs(k in 0.1f64..10.0) {
                let s = ActivityStats::default();
                let p = CostParams::default();
                let scaled = CostParams {
                    storage_price_gb_month: p.storage_price_gb_month * k,
                    server_annual_usd: p.server_annual_usd * k,
                    tx_fee_usd: p.tx_fee_usd * k,
                    ..p
                };
                let a = summarize(&s, &p).unwrap();
                let b = summarize(&s, &scaled).unwrap();
                prop_assert!((b.total_usd_year - k * a.total_usd_year).abs() < 1e-6 * b.total_usd_year.max(1.0));
                prop_assert!((b.storage_usd_year - k * a.storage_usd_year).abs() < 1e-6);
                prop_assert!((b.ethereum_usd_year - k * a.ethereum_usd_year).abs() < 1e-6 * b.ethereum_usd_year);
            }
        }
    }
}
