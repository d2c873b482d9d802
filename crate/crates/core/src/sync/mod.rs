//! Correlation-based packet detection and two-stage CFO estimation.

mod cfo;
mod detect;
mod metric;

pub use cfo::{coarse_cfo, estimate_cfo, fine_cfo, CfoEstimate, CfoResult};
pub use detect::{detect_packet, fine_timing, scan_stream, FineTiming};
pub use metric::{direct_sums, metric_series, timing_metric, SlidingCorrelator};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Trigger level on M(tau). A packet at 1 dB SNR peaks near 0.3 and its
/// rising edge must cross early enough for the peak search; noise-only
/// windows (M roughly exponential with mean 1/L) do cross now and then, and
/// those triggers are discarded by the LTS check.
pub const DEFAULT_THRESHOLD: f64 = 0.1;

/// A packet's normalized LTS correlation is near 1 (about 0.75 at 1 dB
/// SNR); noise alone stays far below one half.
pub const DEFAULT_LTS_CONFIRM: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyncConfig {
    /// Correlation window L.
    pub corr_window: usize,
    pub detect_threshold: f64,
    pub use_90pct_refine: bool,
    /// Coarse CFO span P.
    pub coarse_span: usize,
    pub fine_enabled: bool,
    /// Minimum normalized LTS correlation for a trigger to count as a
    /// packet (needs the fine stage; 0 disables the check).
    pub lts_confirm: f64,
}

impl Default for SyncConfig {
    fn default() -> Self {
        SyncConfig {
            corr_window: 80,
            detect_threshold: DEFAULT_THRESHOLD,
            use_90pct_refine: true,
            coarse_span: 144,
            fine_enabled: true,
            lts_confirm: DEFAULT_LTS_CONFIRM,
        }
    }
}

impl SyncConfig {
    pub fn validate(&self, spec: &crate::phy::PreambleSpec) -> Result<()> {
        if !(self.detect_threshold > 0.0 && self.detect_threshold < 1.0) {
            return Err(invalid(format!(
                "detect threshold {} outside (0, 1)",
                self.detect_threshold
            )));
        }
        if !(0.0..1.0).contains(&self.lts_confirm) {
            return Err(invalid(format!(
                "lts_confirm {} outside [0, 1)",
                self.lts_confirm
            )));
        }
        if self.corr_window == 0 || self.corr_window > spec.stf_len {
            return Err(invalid(format!(
                "correlation window {} must be in 1..={}",
                self.corr_window, spec.stf_len
            )));
        }
        if self.coarse_span <= spec.sts_len
            || self.coarse_span % spec.sts_len != 0
            || self.coarse_span > spec.stf_len - spec.sts_len
        {
            return Err(invalid(format!(
                "coarse span {} must be a multiple of {} in ({}, {}]",
                self.coarse_span,
                spec.sts_len,
                spec.sts_len,
                spec.stf_len - spec.sts_len
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub detected: bool,
    /// Coarse start estimate from the timing metric.
    pub tau_hat: Option<usize>,
    pub metric_peak: f64,
    /// Start refined by LTS cross-correlation.
    pub fine_tau: Option<usize>,
}

impl DetectionResult {
    pub fn none(metric_peak: f64) -> Self {
        DetectionResult {
            detected: false,
            tau_hat: None,
            metric_peak,
            fine_tau: None,
        }
    }

    /// Best available start estimate.
    pub fn start(&self) -> Option<usize> {
        self.fine_tau.or(self.tau_hat)
    }
}
