//! Transmission impairments and the transmit/receive chain.
//!
//! The chain used for every simulated packet is: oversample, multipath,
//! CFO, placement in the (oversampled) stream, AWGN over the whole stream,
//! receive filter, downsample to 1 MHz. Placing the packet before the noise
//! is added keeps the noise floor identical inside and outside the packet.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::phy::{generate_ndp, mean_power, PreambleSpec, Resampler, Waveform};
use crate::seed;
use crate::C64;

const STREAM_FADING: u64 = 1;
const STREAM_NOISE: u64 = 2;
const MAX_DELAY_NS: f64 = 10_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tap {
    pub delay_ns: f64,
    pub power_db: f64,
}

/// Tapped delay line. Powers are normalized to sum to 0 dB when used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FadingProfile {
    pub taps: Vec<Tap>,
    /// Draw each tap as a complex Gaussian; otherwise gains are
    /// deterministic `sqrt(power)` with zero phase.
    #[serde(default = "yes")]
    pub rayleigh: bool,
}

fn yes() -> bool {
    true
}

impl FadingProfile {
    /// Single deterministic unit tap.
    pub fn identity() -> Self {
        FadingProfile {
            taps: vec![Tap {
                delay_ns: 0.0,
                power_db: 0.0,
            }],
            rayleigh: false,
        }
    }

    /// Single Rayleigh tap (flat fading).
    pub fn flat_rayleigh() -> Self {
        FadingProfile {
            rayleigh: true,
            ..Self::identity()
        }
    }

    /// Indoor stand-in: 9 taps, 10 ns apart, -4.3 dB per tap. At 4 MHz every
    /// delay rounds to zero, so this acts as per-packet flat Rayleigh fading.
    pub fn model_b() -> Self {
        FadingProfile {
            taps: (0..9)
                .map(|k| Tap {
                    delay_ns: 10.0 * k as f64,
                    power_db: -4.3 * k as f64,
                })
                .collect(),
            rayleigh: true,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: FadingProfile = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.taps.is_empty() {
            return Err(invalid("fading profile has no taps"));
        }
        for t in &self.taps {
            if !(0.0..=MAX_DELAY_NS).contains(&t.delay_ns) || !t.power_db.is_finite() {
                return Err(invalid(format!(
                    "tap {t:?}: delay must be within 0..=10 us and power finite"
                )));
            }
        }
        Ok(())
    }

    /// Linear tap powers scaled to sum to one.
    pub fn normalized_powers(&self) -> Vec<f64> {
        let lin: Vec<f64> = self
            .taps
            .iter()
            .map(|t| 10f64.powf(t.power_db / 10.0))
            .collect();
        let total: f64 = lin.iter().sum();
        lin.into_iter().map(|p| p / total).collect()
    }

    /// Per-packet channel: `(delay in samples at sample_rate, gain)`.
    pub fn draw(&self, sample_rate: f64, seed: u64) -> Result<Vec<(usize, C64)>> {
        self.validate()?;
        let mut rng = seed::rng(seed, STREAM_FADING);
        Ok(self
            .taps
            .iter()
            .zip(self.normalized_powers())
            .map(|(t, p)| {
                let delay = (t.delay_ns * 1e-9 * sample_rate).round() as usize;
                let g = if self.rayleigh {
                    let s = (p / 2.0).sqrt();
                    C64::new(
                        s * rng.sample::<f64, _>(StandardNormal),
                        s * rng.sample::<f64, _>(StandardNormal),
                    )
                } else {
                    C64::new(p.sqrt(), 0.0)
                };
                (delay, g)
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "profile")]
pub enum Fading {
    /// No fading and no noise.
    Identity,
    AwgnOnly,
    Multipath(FadingProfile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub snr_db: f64,
    pub cfo_hz: f64,
    /// Packet start in 1 MHz samples.
    pub timing_offset: usize,
    pub fading: Fading,
    pub seed: u64,
}

/// Linear convolution with the drawn taps, truncated to the input length.
pub fn apply_multipath(w: &Waveform, profile: &FadingProfile, seed: u64) -> Result<Waveform> {
    let h = profile.draw(w.sample_rate, seed)?;
    Ok(w.with_samples(convolve_taps(&w.samples, &h)))
}

fn convolve_taps(x: &[C64], h: &[(usize, C64)]) -> Vec<C64> {
    let mut y = vec![C64::new(0.0, 0.0); x.len()];
    for &(d, g) in h {
        for n in d..x.len() {
            y[n] += g * x[n - d];
        }
    }
    y
}

/// `y_n = x_n exp(j 2 pi cfo n / rate)` at the waveform's own rate.
pub fn apply_cfo(w: &Waveform, cfo_hz: f64) -> Waveform {
    w.with_samples(rotate(&w.samples, cfo_hz, w.sample_rate))
}

pub(crate) fn rotate(x: &[C64], cfo_hz: f64, rate: f64) -> Vec<C64> {
    let step = 2.0 * PI * cfo_hz / rate;
    x.iter()
        .enumerate()
        .map(|(n, &v)| v * C64::from_polar(1.0, step * n as f64))
        .collect()
}

fn noise(len: usize, variance: f64, seed: u64) -> Vec<C64> {
    let mut rng = seed::rng(seed, STREAM_NOISE);
    let s = (variance / 2.0).sqrt();
    (0..len)
        .map(|_| {
            C64::new(
                s * rng.sample::<f64, _>(StandardNormal),
                s * rng.sample::<f64, _>(StandardNormal),
            )
        })
        .collect()
}

/// Circular complex Gaussian noise at `power / 10^(snr/10)` where `power` is
/// measured over `w`. An infinite SNR returns the input.
pub fn add_awgn(w: &Waveform, snr_db: f64, seed: u64) -> Waveform {
    if snr_db == f64::INFINITY {
        return w.clone();
    }
    let var = w.power() / 10f64.powf(snr_db / 10.0);
    let n = noise(w.len(), var, seed);
    w.with_samples(w.samples.iter().zip(n).map(|(a, b)| a + b).collect())
}

/// Places `w` at `offset` inside `total_len` samples and adds noise over the
/// whole buffer, referenced to the power of `w`.
pub fn embed_in_noise(
    w: &Waveform,
    offset: usize,
    total_len: usize,
    snr_db: f64,
    seed: u64,
) -> Result<Waveform> {
    if offset + w.len() > total_len {
        return Err(invalid(format!(
            "packet of {} samples at {offset} does not fit in {total_len}",
            w.len()
        )));
    }
    let mut buf = vec![C64::new(0.0, 0.0); total_len];
    buf[offset..offset + w.len()].copy_from_slice(&w.samples);
    let mut out = w.with_samples(buf);
    if snr_db != f64::INFINITY {
        let var = w.power() / 10f64.powf(snr_db / 10.0);
        for (y, n) in out.samples.iter_mut().zip(noise(total_len, var, seed)) {
            *y += n;
        }
    }
    Ok(out)
}

/// The full simulated link for NDPs of one preamble spec.
#[derive(Debug, Clone)]
pub struct Link {
    spec: PreambleSpec,
    resampler: Resampler,
    ndp_os: Vec<C64>,
    ref_power: f64,
}

impl Link {
    pub fn new(spec: PreambleSpec, oversample: usize, taps: usize) -> Result<Self> {
        let ndp = generate_ndp(&spec)?;
        let resampler = Resampler::new(oversample, taps)?;
        let ndp_os = resampler.up(&ndp.samples);
        let ref_power = mean_power(&resampler.down(&ndp_os));
        Ok(Link {
            spec,
            resampler,
            ndp_os,
            ref_power,
        })
    }

    pub fn spec(&self) -> &PreambleSpec {
        &self.spec
    }

    pub fn oversample(&self) -> usize {
        self.resampler.factor()
    }

    /// Mean power of the clean, unfaded NDP after the receive chain. SNR is
    /// referenced to this value, so fading changes the instantaneous SNR.
    pub fn reference_power(&self) -> f64 {
        self.ref_power
    }

    /// Noise variance at 1 MHz (after the receive filter) for `snr_db`.
    pub fn noise_variance(&self, snr_db: f64) -> f64 {
        self.ref_power / 10f64.powf(snr_db / 10.0)
    }

    /// Oversampled packet after fading and CFO, before placement.
    pub fn impaired_packet(&self, cfg: &ChannelConfig) -> Result<Vec<C64>> {
        let rate = self.spec.sample_rate * self.oversample() as f64;
        let faded = match &cfg.fading {
            Fading::Multipath(p) => convolve_taps(&self.ndp_os, &p.draw(rate, cfg.seed)?),
            Fading::Identity | Fading::AwgnOnly => self.ndp_os.clone(),
        };
        Ok(rotate(&faded, cfg.cfo_hz, rate))
    }

    /// 1 MHz receive stream of `total_len` samples with the packet starting
    /// at `packet_at` (or noise only).
    pub fn render(
        &self,
        cfg: &ChannelConfig,
        packet_at: Option<usize>,
        total_len: usize,
    ) -> Result<Vec<C64>> {
        if !cfg.snr_db.is_finite() && cfg.fading != Fading::Identity {
            return Err(invalid(format!("snr {} dB is not finite", cfg.snr_db)));
        }
        let f = self.oversample();
        let mut os = vec![C64::new(0.0, 0.0); total_len * f];
        if let Some(at) = packet_at {
            if at >= total_len {
                return Err(invalid(format!(
                    "packet start {at} beyond stream of {total_len}"
                )));
            }
            let pkt = self.impaired_packet(cfg)?;
            let start = at * f;
            for (d, s) in os[start..].iter_mut().zip(&pkt) {
                *d = *s;
            }
        }
        if cfg.fading != Fading::Identity {
            let var = self.noise_variance(cfg.snr_db) / self.resampler.noise_gain();
            let n_os = noise(os.len(), var, cfg.seed);
            for (y, n) in os.iter_mut().zip(n_os) {
                *y += n;
            }
        }
        Ok(self.resampler.down(&os))
    }

    /// `render` with the packet at `cfg.timing_offset`.
    pub fn transmit(&self, cfg: &ChannelConfig, total_len: usize) -> Result<Waveform> {
        let y = self.render(cfg, Some(cfg.timing_offset), total_len)?;
        Waveform::new(y, self.spec.sample_rate, 1)
    }
}
