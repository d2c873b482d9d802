use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::SyncConfig;
use crate::channel::rotate;
use crate::error::{invalid, Result};
use crate::phy::PreambleSpec;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfoEstimate {
    pub hz: f64,
    /// The correlation was exactly zero, so the estimate is a placeholder 0.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfoResult {
    pub coarse_hz: f64,
    pub fine_hz: f64,
    pub total_hz: f64,
    pub degenerate: bool,
}

/// `sum_{n=start}^{start+count-1} conj(y_n) y_{n+lag}` turned into Hz.
fn lag_estimate(y: &[C64], start: usize, count: usize, lag: usize, rate: f64) -> CfoEstimate {
    let lambda: C64 = (start..start + count)
        .map(|n| y[n].conj() * y[n + lag])
        .sum();
    if lambda.norm() == 0.0 {
        return CfoEstimate {
            hz: 0.0,
            degenerate: true,
        };
    }
    CfoEstimate {
        hz: rate * lambda.arg() / (2.0 * PI * lag as f64),
        degenerate: false,
    }
}

/// Coarse CFO from adjacent STS pairs: `P - l_S` lag-`l_S` products starting
/// at `tau_s`. Range `+/- fs / (2 l_S)`.
pub fn coarse_cfo(
    y: &[C64],
    tau_s: usize,
    spec: &PreambleSpec,
    cfg: &SyncConfig,
) -> Result<CfoEstimate> {
    let l = spec.sts_len;
    if cfg.coarse_span <= l || tau_s + cfg.coarse_span > y.len() {
        return Err(invalid(format!(
            "coarse window [{tau_s}, {}) exceeds buffer of {}",
            tau_s + cfg.coarse_span,
            y.len()
        )));
    }
    Ok(lag_estimate(
        y,
        tau_s,
        cfg.coarse_span - l,
        l,
        spec.sample_rate,
    ))
}

/// Fine CFO from the two LTS copies: `L_L - l_L` lag-`l_L` products starting
/// at `tau_l`, on a signal already corrected by the coarse estimate.
/// Range `+/- fs / (2 l_L)`.
pub fn fine_cfo(y_corrected: &[C64], tau_l: usize, spec: &PreambleSpec) -> Result<CfoEstimate> {
    let l = spec.lts_len;
    if tau_l + spec.ltf_len > y_corrected.len() {
        return Err(invalid(format!(
            "fine window [{tau_l}, {}) exceeds buffer of {}",
            tau_l + spec.ltf_len,
            y_corrected.len()
        )));
    }
    Ok(lag_estimate(
        y_corrected,
        tau_l,
        spec.ltf_len - l,
        l,
        spec.sample_rate,
    ))
}

/// Coarse estimate, compensation, fine estimate; the total is their sum.
pub fn estimate_cfo(
    y: &[C64],
    tau_s: usize,
    spec: &PreambleSpec,
    cfg: &SyncConfig,
) -> Result<CfoResult> {
    let coarse = coarse_cfo(y, tau_s, spec, cfg)?;
    let (fine_hz, fine_degenerate) = if cfg.fine_enabled {
        let end = tau_s + spec.stf_len + spec.ltf_len;
        if end > y.len() {
            return Err(invalid(format!(
                "LTF ends at {end}, buffer holds {}",
                y.len()
            )));
        }
        let corrected = rotate(&y[tau_s..end], -coarse.hz, spec.sample_rate);
        let f = fine_cfo(&corrected, spec.stf_len, spec)?;
        (f.hz, f.degenerate)
    } else {
        (0.0, false)
    };
    Ok(CfoResult {
        coarse_hz: coarse.hz,
        fine_hz,
        total_hz: coarse.hz + fine_hz,
        degenerate: coarse.degenerate || fine_degenerate,
    })
}
