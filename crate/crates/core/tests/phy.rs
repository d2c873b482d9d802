use halow_core::phy::*;
use halow_core::C64;
use proptest::prelude::*;

fn cvec(v: &[(f64, f64)]) -> Vec<C64> {
    v.iter().map(|&(a, b)| C64::new(a, b)).collect()
}

proptest! {
    #[test]
    fn parseval_holds(v in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..48)) {
        let x = cvec(&v);
        let n = x.len();
        let y = idft(&x, n).unwrap();
        let time: f64 = y.iter().map(|s| s.norm_sqr()).sum();
        let freq: f64 = x.iter().map(|s| s.norm_sqr()).sum::<f64>() / n as f64;
        prop_assert!((time - freq).abs() < 1e-9);
    }

    #[test]
    fn dft_inverts_idft(v in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..48)) {
        let x = cvec(&v);
        let back = dft(&idft(&x, x.len()).unwrap(), x.len()).unwrap();
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).norm() < 1e-9);
        }
    }
}

#[test]
fn dft_length_is_checked() {
    assert!(idft(&[C64::new(1.0, 0.0); 4], 8).is_err());
    assert!(dft(&[C64::new(1.0, 0.0); 4], 3).is_err());
}

#[test]
fn tone_survives_resampling() {
    // 100 kHz tone at 1 MHz, up by 4 and back down
    let n = 400;
    let f = 100e3 / 1e6;
    let x: Vec<C64> = (0..n)
        .map(|i| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * f * i as f64))
        .collect();
    let w = Waveform::new(x.clone(), 1e6, 1).unwrap();
    let up = oversample(&w, 4, DEFAULT_TAPS).unwrap();
    // the oversampled tone sits at 25 kHz per sample of the fast clock
    for i in 100..1500 {
        let expect = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * f * i as f64 / 4.0);
        assert!((up.samples[i] - expect).norm() < 0.01, "sample {i}");
    }
    let down = downsample(&up, 4, DEFAULT_TAPS).unwrap();
    for i in 30..n - 30 {
        assert!((down.samples[i].norm() - 1.0).abs() < 0.01);
        assert!((down.samples[i] - x[i]).norm() < 0.01);
    }
}

#[test]
fn ndp_round_trip_evm() {
    let spec = PreambleSpec::default();
    let ndp = generate_ndp(&spec).unwrap();
    let r = Resampler::new(4, DEFAULT_TAPS).unwrap();
    let back = r.down(&r.up(&ndp.samples));
    let whole = evm_db(&ndp.samples, &back);
    assert!(whole < -25.0, "full NDP EVM {whole:.1} dB");
    // the STF occupies only the inner bins and clears the filter edge
    let stf = evm_db(&ndp.samples[16..144], &back[16..144]);
    assert!(stf < -40.0, "STF EVM {stf:.1} dB");
}

#[test]
fn noise_gain_matches_filtered_white_noise() {
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;
    let r = Resampler::new(4, DEFAULT_TAPS).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let x: Vec<C64> = (0..400_000)
        .map(|_| {
            C64::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            )
        })
        .collect();
    let y = r.down(&x);
    let ratio = mean_power(&y[20..y.len() - 20]) / mean_power(&x) / r.noise_gain();
    assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
}

#[test]
fn stf_and_lts_are_band_limited() {
    let spec = PreambleSpec::default();
    let s = dft(&spec.sts, 16).unwrap();
    for k in [0, 5, 6, 7, 8, 9, 10, 11] {
        assert!(s[k].norm() < 1e-12, "STS bin {k}");
    }
    let l = dft(&spec.lts, 64).unwrap();
    assert!(l[0].norm() < 1e-12);
    for (k, v) in l.iter().enumerate().take(38).skip(27) {
        assert!(v.norm() < 1e-12, "LTS bin {k}");
    }
}

#[test]
fn wavefile_round_trip_and_errors() {
    let spec = PreambleSpec::default();
    let w = generate_ndp(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("ndp.wv");
    wavefile::write(&p, &w).unwrap();
    let back = wavefile::read(&p).unwrap().unwrap();
    assert_eq!(back.len(), w.len());
    for (a, b) in w.samples.iter().zip(&back.samples) {
        assert!((a - b).norm() < 1e-6);
    }

    std::fs::write(&p, b"").unwrap();
    assert!(wavefile::read(&p).unwrap().is_none());

    let mut bytes = wavefile::encode(&w);
    bytes[0] = b'X';
    assert!(matches!(
        wavefile::decode(&bytes),
        Err(halow_core::CoreError::Format(_))
    ));
    let bytes = wavefile::encode(&w);
    assert!(wavefile::decode(&bytes[..bytes.len() - 3]).is_err());
}
