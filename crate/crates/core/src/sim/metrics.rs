//! Run metrics and their CSV rendering.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub seed: u64,
    pub claims_issued: u64,
    pub claims_verified_ok: u64,
    /// Confirmed claim-registration transactions.
    pub ledger_tx_count: u64,
    pub total_fees_usd: f64,
    pub per_claim_fee_usd: f64,
    pub receipts_audited: u64,
    pub faults_injected: u64,
    pub faults_detected: u64,
    pub complaints_filed: u64,
    pub complaints_valid: u64,
    /// Worst gap between a faulty receipt's deadline and its detection, in seconds.
    pub max_detection_delay_s: u64,
    /// Mean time from issuance to detection over faulty receipts, in seconds.
    pub mean_detection_latency_s: f64,
    /// Share of receipted claims retrievable with creators offline, at the end of the run.
    pub availability_ratio: f64,
    /// The same share over fault-affected claims only, before and after recovery.
    pub faulty_availability_before: Option<f64>,
    pub faulty_availability_after: Option<f64>,
    pub recovered_claims: u64,
    pub failed_flushes: u64,
    pub timeout_flushes: u64,
    pub fetch_views: u64,
    pub sim_seconds: u64,
}

fn ratio(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

impl MetricsReport {
    /// Metric name and formatted value, in report order.
    pub fn rows(&self) -> Vec<(&'static str, String)> {
        vec![
            ("seed", self.seed.to_string()),
            ("claims_issued", self.claims_issued.to_string()),
            ("claims_verified_ok", self.claims_verified_ok.to_string()),
            ("ledger_tx_count", self.ledger_tx_count.to_string()),
            ("total_fees_usd", format!("{:.9}", self.total_fees_usd)),
            ("per_claim_fee_usd", format!("{:.9}", self.per_claim_fee_usd)),
            ("receipts_audited", self.receipts_audited.to_string()),
            ("faults_injected", self.faults_injected.to_string()),
            ("faults_detected", self.faults_detected.to_string()),
            ("complaints_filed", self.complaints_filed.to_string()),
            ("complaints_valid", self.complaints_valid.to_string()),
            ("max_detection_delay_s", self.max_detection_delay_s.to_string()),
            ("mean_detection_latency_s", format!("{:.3}", self.mean_detection_latency_s)),
            ("availability_ratio", format!("{:.6}", self.availability_ratio)),
            ("faulty_availability_before", ratio(self.faulty_availability_before)),
            ("faulty_availability_after", ratio(self.faulty_availability_after)),
            ("recovered_claims", self.recovered_claims.to_string()),
            ("failed_flushes", self.failed_flushes.to_string()),
            ("timeout_flushes", self.timeout_flushes.to_string()),
            ("fetch_views", self.fetch_views.to_string()),
            ("sim_seconds", self.sim_seconds.to_string()),
        ]
    }

    /// Two-column `metric,value` CSV with fixed float formatting.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["metric", "value"]).expect("in-memory write");
        for (k, v) in self.rows() {
            w.write_record([k, v.as_str()]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.rows() {
            writeln!(f, "{k:<28} {}", if v.is_empty() { "-" } else { &v })?;
        }
        Ok(())
    }
}
