use std::f64::consts::PI;

use super::Waveform;
use crate::error::{invalid, Result};
use crate::C64;

pub const DEFAULT_TAPS: usize = 49;

/// Hamming-windowed sinc low-pass with cutoff at `0.5 / factor` cycles per
/// sample and unit DC gain. `taps` must be odd so the group delay
/// `(taps - 1) / 2` is a whole number of samples.
pub fn design_lowpass(factor: usize, taps: usize) -> Result<Vec<f64>> {
    if factor == 0 {
        return Err(invalid("resampling factor must be >= 1"));
    }
    if taps == 0 || taps % 2 == 0 {
        return Err(invalid(format!("filter tap count {taps} must be odd")));
    }
    if taps == 1 {
        return Ok(vec![1.0]);
    }
    let d = (taps - 1) as f64 / 2.0;
    let mut h: Vec<f64> = (0..taps)
        .map(|m| {
            let x = (m as f64 - d) / factor as f64;
            let sinc = if x == 0.0 {
                1.0
            } else {
                (PI * x).sin() / (PI * x)
            };
            let w = 0.54 - 0.46 * (2.0 * PI * m as f64 / (taps - 1) as f64).cos();
            sinc * w
        })
        .collect();
    let sum: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= sum);
    Ok(h)
}

/// Interpolation/decimation pair sharing one delay-compensated FIR.
#[derive(Debug, Clone, PartialEq)]
pub struct Resampler {
    factor: usize,
    taps: Vec<f64>,
}

impl Resampler {
    pub fn new(factor: usize, taps: usize) -> Result<Self> {
        Ok(Resampler {
            factor,
            taps: design_lowpass(factor, taps)?,
        })
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// `sum h^2`: the variance gain the filter applies to white noise.
    pub fn noise_gain(&self) -> f64 {
        self.taps.iter().map(|h| h * h).sum()
    }

    /// Zero-stuff by `factor` and filter (gain `factor` restores amplitude).
    pub fn up(&self, x: &[C64]) -> Vec<C64> {
        let f = self.factor;
        if f == 1 {
            return x.to_vec();
        }
        let d = (self.taps.len() - 1) / 2;
        let gain = f as f64;
        (0..x.len() * f)
            .map(|n| {
                // u[i] is nonzero only for i = f*j, so only taps with
                // (n + d - m) % f == 0 contribute.
                let mut acc = C64::new(0.0, 0.0);
                let mut m = (n + d) % f;
                while m < self.taps.len() && m <= n + d {
                    let i = n + d - m;
                    let j = i / f;
                    if j < x.len() {
                        acc += x[j] * self.taps[m];
                    }
                    m += f;
                }
                acc * gain
            })
            .collect()
    }

    /// Anti-alias filter, then keep every `factor`-th sample starting at 0.
    pub fn down(&self, x: &[C64]) -> Vec<C64> {
        let f = self.factor;
        if f == 1 {
            return x.to_vec();
        }
        let d = (self.taps.len() - 1) as isize / 2;
        let n_out = x.len().div_ceil(f);
        (0..n_out)
            .map(|k| {
                let c = (k * f) as isize + d;
                let mut acc = C64::new(0.0, 0.0);
                for (m, &h) in self.taps.iter().enumerate() {
                    let i = c - m as isize;
                    if i >= 0 && (i as usize) < x.len() {
                        acc += x[i as usize] * h;
                    }
                }
                acc
            })
            .collect()
    }
}

pub fn oversample(w: &Waveform, factor: usize, filter_taps: usize) -> Result<Waveform> {
    let r = Resampler::new(factor, filter_taps)?;
    Ok(Waveform {
        samples: r.up(&w.samples),
        sample_rate: w.sample_rate * factor as f64,
        oversample_factor: w.oversample_factor * factor,
    })
}

pub fn downsample(w: &Waveform, factor: usize, filter_taps: usize) -> Result<Waveform> {
    let r = Resampler::new(factor, filter_taps)?;
    if w.oversample_factor % factor != 0 {
        return Err(invalid(format!(
            "cannot decimate a x{} waveform by {factor}",
            w.oversample_factor
        )));
    }
    Ok(Waveform {
        samples: r.down(&w.samples),
        sample_rate: w.sample_rate / factor as f64,
        oversample_factor: w.oversample_factor / factor,
    })
}

/// Error vector magnitude of `test` against `reference`, in dB.
pub fn evm_db(reference: &[C64], test: &[C64]) -> f64 {
    let err: f64 = reference
        .iter()
        .zip(test)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    let sig: f64 = reference.iter().map(|a| a.norm_sqr()).sum();
    10.0 * (err / sig).log10()
}
