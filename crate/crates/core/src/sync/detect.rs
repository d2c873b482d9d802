use super::{coarse_cfo, metric_series, DetectionResult, SyncConfig};
use crate::channel::rotate;
use crate::phy::PreambleSpec;
use crate::C64;

/// Half-width of the fine-timing search around the expected first LTS.
const FINE_SEARCH: usize = 32;

fn argmax(m: &[f64]) -> usize {
    // first index of the maximum
    let mut best = 0;
    for (i, &v) in m.iter().enumerate() {
        if v > m[best] {
            best = i;
        }
    }
    best
}

/// Midpoint of the nearest samples at or below 90% of the peak on either
/// side of `peak_at`.
fn refine_90(m: &[f64], peak_at: usize) -> usize {
    let level = 0.9 * m[peak_at];
    let left = (0..=peak_at).rev().find(|&i| m[i] <= level).unwrap_or(0);
    let right = (peak_at..m.len())
        .find(|&i| m[i] <= level)
        .unwrap_or(m.len() - 1);
    (left + right).div_ceil(2)
}

/// Outcome of the LTS cross-correlation stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FineTiming {
    pub start: usize,
    /// `(|c(p)| + |c(p+l_L)|) / (|lts| (|y_p| + |y_{p+l_L}|))` at the chosen
    /// position; 1 for a clean packet, small for noise (Cauchy-Schwarz bound).
    pub score: f64,
}

/// LTS cross-correlation timing around a coarse start `tau`.
///
/// The signal is first derotated by the coarse CFO. For each candidate
/// first-LTS position `p`, the score is `|c(p)| + |c(p + l_L)|` with `c` the
/// correlation against the known LTS; this peaks only where both LTS copies
/// line up, i.e. at the earlier of the two single-LTS peaks. Ties go to the
/// earlier sample.
pub fn fine_timing(
    y: &[C64],
    tau: usize,
    spec: &PreambleSpec,
    cfg: &SyncConfig,
) -> Option<FineTiming> {
    let l_l = spec.lts_len;
    let first_lts = spec.stf_len + (spec.ltf_len - 2 * l_l);
    let centre = tau + first_lts;
    // clipped so the estimated start cannot precede the buffer
    let lo = centre.saturating_sub(FINE_SEARCH).max(first_lts);
    let hi = (centre + FINE_SEARCH).min(y.len().checked_sub(2 * l_l)?);
    if lo > hi {
        return None;
    }
    let cfo = if tau + cfg.coarse_span <= y.len() {
        coarse_cfo(y, tau, spec, cfg).map(|e| e.hz).unwrap_or(0.0)
    } else {
        0.0
    };
    let seg = rotate(&y[lo..hi + 2 * l_l], -cfo, spec.sample_rate);
    let corr = |p: usize| -> f64 {
        seg[p..p + l_l]
            .iter()
            .zip(&spec.lts)
            .map(|(v, s)| s.conj() * v)
            .sum::<C64>()
            .norm()
    };
    let scores: Vec<f64> = (0..=hi - lo).map(|p| corr(p) + corr(p + l_l)).collect();
    let best = argmax(&scores);
    let energy = |p: usize| {
        seg[p..p + l_l]
            .iter()
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    let lts_norm = spec.lts.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let denom = lts_norm * (energy(best) + energy(best + l_l));
    Some(FineTiming {
        start: lo + best - first_lts,
        score: if denom > 0.0 {
            scores[best] / denom
        } else {
            0.0
        },
    })
}

/// Peak of M over `span` positions from `from`. While the maximum sits in
/// the last `guard` positions the metric is still rising (typically a noise
/// trigger just ahead of a packet), so the search moves forward.
fn track_peak(m: &[f64], from: usize, span: usize, guard: usize) -> usize {
    let mut i = from;
    loop {
        let end = (i + span).min(m.len());
        let j = i + argmax(&m[i..end]);
        if end == m.len() || j + guard < end || j == i {
            return j;
        }
        i = j;
    }
}

/// `None` when the LTS check rejects the trigger.
fn locate(
    y: &[C64],
    m: &[f64],
    peak_at: usize,
    spec: &PreambleSpec,
    cfg: &SyncConfig,
) -> Option<DetectionResult> {
    let tau = if cfg.use_90pct_refine {
        refine_90(m, peak_at)
    } else {
        peak_at
    };
    let fine = if cfg.fine_enabled {
        fine_timing(y, tau, spec, cfg)
    } else {
        None
    };
    if cfg.fine_enabled && cfg.lts_confirm > 0.0 && fine.is_none_or(|f| f.score < cfg.lts_confirm) {
        return None;
    }
    Some(DetectionResult {
        detected: true,
        tau_hat: Some(tau),
        metric_peak: m[peak_at],
        fine_tau: fine.map(|f| f.start),
    })
}

/// Detects the first packet in `y`.
///
/// The first position where M(tau) reaches the threshold triggers the
/// search; the peak is taken over the following `L_S` positions, then
/// refined. Searching only after the trigger matters: behind a packet the
/// second window loses energy before the first and M(tau) can exceed 1.
pub fn detect_packet(y: &[C64], spec: &PreambleSpec, cfg: &SyncConfig) -> DetectionResult {
    let m = metric_series(y, cfg.corr_window);
    match scan(y, &m, spec, cfg, 1).pop() {
        Some(r) => r,
        None => DetectionResult::none(m.iter().copied().fold(0.0, f64::max)),
    }
}

/// Streaming detection of every packet in `y`. After each detection,
/// scanning resumes one NDP length after the estimated start; a trigger
/// rejected by the LTS check resumes at the next position.
pub fn scan_stream(y: &[C64], spec: &PreambleSpec, cfg: &SyncConfig) -> Vec<DetectionResult> {
    let m = metric_series(y, cfg.corr_window);
    scan(y, &m, spec, cfg, usize::MAX)
}

fn scan(
    y: &[C64],
    m: &[f64],
    spec: &PreambleSpec,
    cfg: &SyncConfig,
    limit: usize,
) -> Vec<DetectionResult> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < m.len() && out.len() < limit {
        if m[i] < cfg.detect_threshold {
            i += 1;
            continue;
        }
        let peak_at = track_peak(m, i, spec.stf_len, cfg.corr_window);
        match locate(y, m, peak_at, spec, cfg) {
            Some(r) => {
                let start = r.start().unwrap_or(peak_at);
                out.push(r);
                i = (start + spec.ndp_len()).max(i + 1);
            }
            None => i += 1,
        }
    }
    out
}

#[cfg(test)]
mod test {
    use super::*;

    #[test]
    fn refine_finds_midpoint_of_triangle() {
        let m: Vec<f64> = (0..41)
            .map(|i| 1.0 - (i as f64 - 20.0).abs() / 20.0)
            .collect();
        assert_eq!(refine_90(&m, 20), 20);
        // asymmetric: left edge at 18, right edge at 23 -> 20.5 -> 21
        let mut m2 = m.clone();
        m2[21] = 0.95;
        m2[22] = 0.95;
        m2[23] = 0.5;
        assert_eq!(refine_90(&m2, 20), 21);
    }

    #[test]
    fn argmax_prefers_first() {
        assert_eq!(argmax(&[0.1, 0.5, 0.5, 0.2]), 1);
    }
}
