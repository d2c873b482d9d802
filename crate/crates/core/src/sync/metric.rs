use std::collections::VecDeque;

use crate::error::{invalid, Result};
use crate::C64;

/// `(Lambda_tau, P_tau)` computed term by term.
pub fn direct_sums(y: &[C64], tau: usize, l: usize) -> (C64, f64) {
    let mut lambda = C64::new(0.0, 0.0);
    let mut p = 0.0;
    for i in 0..l {
        let b = y[tau + i + l];
        lambda += y[tau + i].conj() * b;
        p += b.norm_sqr();
    }
    (lambda, p)
}

fn metric_from(lambda: C64, p: f64, floor: f64) -> f64 {
    if p <= floor {
        0.0
    } else {
        lambda.norm_sqr() / (p * p)
    }
}

/// `M(tau) = |Lambda_tau|^2 / P_tau^2`, zero when `P_tau = 0`.
pub fn timing_metric(y: &[C64], tau: usize, l: usize) -> Result<f64> {
    if l == 0 || tau + 2 * l > y.len() {
        return Err(invalid(format!(
            "window tau={tau}, L={l} exceeds buffer of {}",
            y.len()
        )));
    }
    let (lambda, p) = direct_sums(y, tau, l);
    Ok(metric_from(lambda, p, 0.0))
}

/// Streaming O(1)-per-sample update of `Lambda` and `P` over the last `2L`
/// samples.
#[derive(Debug, Clone)]
pub struct SlidingCorrelator {
    l: usize,
    buf: VecDeque<C64>,
    lambda: C64,
    p: f64,
    p_max: f64,
}

impl SlidingCorrelator {
    pub fn new(l: usize) -> Self {
        assert!(l > 0, "correlation window must be positive");
        SlidingCorrelator {
            l,
            buf: VecDeque::with_capacity(2 * l),
            lambda: C64::new(0.0, 0.0),
            p: 0.0,
            p_max: 0.0,
        }
    }

    /// Feeds one sample. Once `2L` samples are buffered, returns the sums
    /// for the window that starts `2L - 1` samples back.
    pub fn push(&mut self, x: C64) -> Option<(C64, f64)> {
        let l = self.l;
        if self.buf.len() == 2 * l {
            let old = self.buf.pop_front().unwrap();
            // y_{tau+L-1} leaves the second half and enters the first
            let mid = self.buf[l - 1];
            self.lambda += mid.conj() * x - old.conj() * mid;
            self.p += x.norm_sqr() - mid.norm_sqr();
            self.buf.push_back(x);
        } else {
            self.buf.push_back(x);
            if self.buf.len() < 2 * l {
                return None;
            }
            let (a, b) = self.buf.as_slices();
            let all: Vec<C64> = a.iter().chain(b).copied().collect();
            let (lambda, p) = direct_sums(&all, 0, l);
            self.lambda = lambda;
            self.p = p;
        }
        self.p_max = self.p_max.max(self.p);
        Some((self.lambda, self.p))
    }

    /// Metric for the current window. Energies below `1e-12` of the largest
    /// seen are treated as zero so cancellation residue after a signal has
    /// passed cannot masquerade as correlation.
    pub fn metric(&self) -> f64 {
        metric_from(self.lambda, self.p, 1e-12 * self.p_max)
    }
}

/// `M(tau)` for every `tau` in `0..=len-2L` (empty if the buffer is short).
pub fn metric_series(y: &[C64], l: usize) -> Vec<f64> {
    let mut c = SlidingCorrelator::new(l);
    y.iter()
        .filter_map(|&x| c.push(x).map(|_| c.metric()))
        .collect()
}
