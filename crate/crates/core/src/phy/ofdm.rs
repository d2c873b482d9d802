use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::C64;

/// One frequency-domain OFDM symbol `X_k`.
pub type SpectrumSymbol = Vec<C64>;

fn check_len(len: usize, n: usize) -> Result<()> {
    if n == 0 || len != n {
        return Err(invalid(format!("expected {n} values, got {len}")));
    }
    Ok(())
}

/// `x_n = (1/N) sum_k X_k exp(j 2 pi k n / N)`.
pub fn idft(sym: &[C64], n: usize) -> Result<Vec<C64>> {
    check_len(sym.len(), n)?;
    Ok(direct(sym, 1.0, 1.0 / n as f64))
}

/// `Y_k = sum_n y_n exp(-j 2 pi k n / N)`.
pub fn dft(seg: &[C64], n: usize) -> Result<Vec<C64>> {
    check_len(seg.len(), n)?;
    Ok(direct(seg, -1.0, 1.0))
}

fn direct(x: &[C64], sign: f64, scale: f64) -> Vec<C64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let s: C64 = x
                .iter()
                .enumerate()
                .map(|(m, &v)| {
                    // reduce k*m mod n first to keep the angle small
                    let ang = sign * 2.0 * PI * ((k * m) % n) as f64 / n as f64;
                    v * C64::from_polar(1.0, ang)
                })
                .sum();
            s * scale
        })
        .collect()
}
