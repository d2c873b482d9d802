//! Preamble synthesis and OFDM primitives for the 1 MHz S1G mode.

mod ofdm;
mod resample;
pub mod wavefile;

pub use ofdm::{dft, idft, SpectrumSymbol};
pub use resample::{design_lowpass, downsample, evm_db, oversample, Resampler, DEFAULT_TAPS};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::seed::splitmix64;
use crate::C64;

/// Samples in a null data packet at 1 MHz: 14 OFDM symbols of 40 samples.
pub const NDP_LEN: usize = 560;

/// Default oversampling factor of the transmit/receive chain.
pub const DEFAULT_OVERSAMPLE: usize = 4;

/// Complex baseband samples with their rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub samples: Vec<C64>,
    /// Hz.
    pub sample_rate: f64,
    /// Ratio of `sample_rate` to the 1 MHz symbol-level rate.
    pub oversample_factor: usize,
}

impl Waveform {
    pub fn new(samples: Vec<C64>, sample_rate: f64, oversample_factor: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid("waveform has no samples"));
        }
        if !(sample_rate > 0.0) || oversample_factor == 0 {
            return Err(invalid(format!(
                "bad rate {sample_rate} Hz / oversample factor {oversample_factor}"
            )));
        }
        Ok(Waveform {
            samples,
            sample_rate,
            oversample_factor,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean `|x|^2` over all samples.
    pub fn power(&self) -> f64 {
        mean_power(&self.samples)
    }

    pub(crate) fn with_samples(&self, samples: Vec<C64>) -> Waveform {
        Waveform {
            samples,
            sample_rate: self.sample_rate,
            oversample_factor: self.oversample_factor,
        }
    }
}

pub fn mean_power(x: &[C64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64
}

/// All 1 MHz preamble constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreambleSpec {
    pub n_subcarriers: usize,
    /// Hz.
    pub subcarrier_spacing: f64,
    pub cp_len: usize,
    /// Hz.
    pub sample_rate: f64,
    pub sts: Vec<C64>,
    pub lts: Vec<C64>,
    pub stf_len: usize,
    pub sts_len: usize,
    pub ltf_len: usize,
    pub lts_len: usize,
    pub sig_symbols: usize,
    /// One bit per occupied SIG subcarrier per symbol.
    pub sig_bits: Vec<u8>,
}

/// STS occupied bins of the 16-point short symbol (DC empty).
const STS_BINS: [usize; 8] = [1, 2, 3, 4, 12, 13, 14, 15];
/// SIG occupied bins of the 32-point symbol: +/-1 .. +/-13.
const SIG_BINS: [usize; 26] = [
    1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 19, 20, 21, 22, 23, 24, 25, 26, 27, 28, 29, 30, 31,
];
const STS_SEED: u64 = 0x5354_5331;
const LTS_SEED: u64 = 0x4C54_5331;

fn qpsk_fill(n: usize, bins: &[usize], seed: u64) -> Vec<C64> {
    let mut state = seed;
    let mut spec = vec![C64::new(0.0, 0.0); n];
    let a = std::f64::consts::FRAC_1_SQRT_2;
    for &k in bins {
        let r = splitmix64(&mut state);
        let re = if r & 1 == 0 { a } else { -a };
        let im = if r & 2 == 0 { a } else { -a };
        spec[k] = C64::new(re, im);
    }
    spec
}

fn unit_power(x: Vec<C64>) -> Vec<C64> {
    let g = 1.0 / mean_power(&x).sqrt();
    x.into_iter().map(|v| v * g).collect()
}

/// Bits from the `x^7 + x^4 + 1` sequence with an all-ones start state.
pub fn lfsr_bits(n: usize) -> Vec<u8> {
    let mut reg = 0x7Fu8;
    (0..n)
        .map(|_| {
            let b = ((reg >> 6) ^ (reg >> 3)) & 1;
            reg = ((reg << 1) | b) & 0x7F;
            b
        })
        .collect()
}

impl Default for PreambleSpec {
    fn default() -> Self {
        let sts = unit_power(idft(&qpsk_fill(16, &STS_BINS, STS_SEED), 16).unwrap());
        let lts_bins: Vec<usize> = (1..=26).chain(38..64).collect();
        let lts = unit_power(idft(&qpsk_fill(64, &lts_bins, LTS_SEED), 64).unwrap());
        PreambleSpec {
            n_subcarriers: 32,
            subcarrier_spacing: 31_250.0,
            cp_len: 8,
            sample_rate: 1_000_000.0,
            sts,
            lts,
            stf_len: 160,
            sts_len: 16,
            ltf_len: 160,
            lts_len: 64,
            sig_symbols: 6,
            sig_bits: lfsr_bits(6 * SIG_BINS.len()),
        }
    }
}

impl PreambleSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(invalid(format!("preamble spec: {m}")));
        if self.sts.len() != self.sts_len || self.lts.len() != self.lts_len {
            return fail(format!(
                "sequence lengths {}/{} do not match sts_len/lts_len {}/{}",
                self.sts.len(),
                self.lts.len(),
                self.sts_len,
                self.lts_len
            ));
        }
        if self.stf_len != 10 * self.sts_len {
            return fail("stf_len must be 10 sts_len".into());
        }
        if self.ltf_len != 32 + 2 * self.lts_len || self.lts_len < 32 {
            return fail("ltf_len must be 32 + 2 lts_len".into());
        }
        if self.n_subcarriers != 32 || self.cp_len != 8 || self.sig_symbols != 6 {
            return fail(
                "only the 1 MHz numerology (N=32, CP=8, 6 SIG symbols) is supported".into(),
            );
        }
        let spacing = self.sample_rate / self.n_subcarriers as f64;
        if (spacing - self.subcarrier_spacing).abs() > 1e-6 {
            return fail(format!(
                "subcarrier spacing {} != fs/N = {spacing}",
                self.subcarrier_spacing
            ));
        }
        for (name, seq) in [("sts", &self.sts), ("lts", &self.lts)] {
            let p = mean_power(seq);
            if (p - 1.0).abs() > 1e-9 {
                return fail(format!("{name} mean power {p} is not 1"));
            }
        }
        if self.sig_bits.len() != self.sig_symbols * SIG_BINS.len()
            || self.sig_bits.iter().any(|&b| b > 1)
        {
            return fail(format!(
                "sig_bits must hold {} binary values",
                self.sig_symbols * SIG_BINS.len()
            ));
        }
        if self.ndp_len() != NDP_LEN {
            return fail(format!("NDP length {} != {NDP_LEN}", self.ndp_len()));
        }
        Ok(())
    }

    pub fn ndp_len(&self) -> usize {
        self.stf_len + self.ltf_len + self.sig_symbols * (self.n_subcarriers + self.cp_len)
    }

    /// Largest CFO the coarse stage resolves: `fs / (2 l_S)`.
    pub fn coarse_range_hz(&self) -> f64 {
        self.sample_rate / (2.0 * self.sts_len as f64)
    }

    /// Largest residual the fine stage resolves: `fs / (2 l_L)`.
    pub fn fine_range_hz(&self) -> f64 {
        self.sample_rate / (2.0 * self.lts_len as f64)
    }
}

/// Builds `[STF | LTF1 | SIG]` at 1 MHz.
pub fn generate_ndp(spec: &PreambleSpec) -> Result<Waveform> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.ndp_len());
    for _ in 0..spec.stf_len / spec.sts_len {
        out.extend_from_slice(&spec.sts);
    }
    let guard = spec.ltf_len - 2 * spec.lts_len;
    out.extend_from_slice(&spec.lts[spec.lts_len - guard..]);
    out.extend_from_slice(&spec.lts);
    out.extend_from_slice(&spec.lts);

    let n = spec.n_subcarriers;
    // 26 unit-magnitude bins through a 1/N IDFT give mean power 26/N^2.
    let gain = (n as f64 * n as f64 / SIG_BINS.len() as f64).sqrt();
    for bits in spec.sig_bits.chunks(SIG_BINS.len()) {
        let mut sym = vec![C64::new(0.0, 0.0); n];
        for (&k, &b) in SIG_BINS.iter().zip(bits) {
            sym[k] = C64::new(if b == 1 { -gain } else { gain }, 0.0);
        }
        let x = idft(&sym, n)?;
        out.extend_from_slice(&x[n - spec.cp_len..]);
        out.extend_from_slice(&x);
    }
    Waveform::new(out, spec.sample_rate, 1)
}

#[cfg(test)]
mod test {
    use super::*;

    #[test]
    fn default_spec_is_valid() {
        let s = PreambleSpec::default();
        s.validate().unwrap();
        assert_eq!(s.ndp_len(), 560);
        assert_eq!(s.coarse_range_hz(), 31_250.0);
        assert_eq!(s.fine_range_hz(), 7_812.5);
    }

    #[test]
    fn ndp_structure() {
        let s = PreambleSpec::default();
        let w = generate_ndp(&s).unwrap();
        assert_eq!(w.len(), NDP_LEN);
        let x = &w.samples;
        for n in 0..144 {
            assert_eq!(x[n], x[n + 16]);
        }
        for n in 0..96 {
            assert_eq!(x[160 + n], x[160 + n + 64]);
        }
        // each SIG symbol starts with its own tail
        for s in 0..6 {
            let base = 320 + 40 * s;
            for i in 0..8 {
                assert_eq!(x[base + i], x[base + 32 + i]);
            }
        }
        for s in 0..6 {
            let body = &x[320 + 40 * s + 8..320 + 40 * (s + 1)];
            assert!((mean_power(body) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn ndp_is_deterministic() {
        let s = PreambleSpec::default();
        assert_eq!(generate_ndp(&s).unwrap(), generate_ndp(&s).unwrap());
    }

    #[test]
    fn lfsr_period_is_127() {
        let b = lfsr_bits(254);
        assert_eq!(b[..127], b[127..]);
        assert_eq!(b.iter().take(127).filter(|&&v| v == 1).count(), 64);
    }

    #[test]
    fn rejects_wrong_sequence_length() {
        let mut s = PreambleSpec::default();
        s.sts.pop();
        assert!(generate_ndp(&s).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let s = PreambleSpec::default();
        let js = serde_json::to_string(&s).unwrap();
        let back: PreambleSpec = serde_json::from_str(&js).unwrap();
        assert_eq!(back, s);
    }
}
