//! Central finite-difference comparison of analytic gradients.

use ndarray::{ArrayD, IxDyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::network::{Network, Weights};

/// Step used for central differences.
pub const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    /// Largest relative error over all parameters.
    pub max_rel_param: f64,
    /// Largest relative error over all input elements.
    pub max_rel_input: f64,
    pub checked: usize,
}

impl GradCheck {
    pub fn max_rel(&self) -> f64 {
        self.max_rel_param.max(self.max_rel_input)
    }
}

/// `|a - n| / max(|a|, |n|, 1e-3)`; the floor keeps near-zero gradients from
/// producing meaningless ratios.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3)
}

fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize], min_abs: f64) -> ArrayD<f64> {
    ArrayD::from_shape_simple_fn(IxDyn(shape), || loop {
        let v: f64 = rng.random_range(-1.0..1.0);
        if v.abs() >= min_abs {
            break v;
        }
    })
}

/// Checks every parameter and input gradient of `net` on a random batch.
///
/// The scalar objective is `sum(r * net(x))` for a random projection `r`, so
/// the upstream gradient is exactly `r`. Inputs are kept at least `0.05`
/// away from zero so ReLU kinks are not straddled by the difference step.
pub fn check_network(net: &Network, batch: usize, seed: u64) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w: Weights<f64> = net.init_weights(rng.random());
    let mut in_shape = vec![batch];
    in_shape.extend_from_slice(net.input_shape());
    let mut out_shape = vec![batch];
    out_shape.extend_from_slice(net.output_shape());
    let mut x = random_tensor(&mut rng, &in_shape, 0.05);
    let r = random_tensor(&mut rng, &out_shape, 0.0);

    let objective = |w: &Weights<f64>, x: &ArrayD<f64>| -> Result<f64> {
        let y = net.forward(w, x)?;
        Ok((&y * &r).sum())
    };

    let (_, tape) = net.forward_cached(&w, &x)?;
    let (grads, dx) = net.backward(&w, &tape, &r)?;

    let mut report = GradCheck {
        max_rel_param: 0.0,
        max_rel_input: 0.0,
        checked: 0,
    };
    for li in 0..w.num_layers() {
        for ti in 0..w.layer(li).len() {
            for ei in 0..w.layer(li)[ti].len() {
                let orig = w.layer(li)[ti].as_slice().unwrap()[ei];
                w.layer_mut(li)[ti].as_slice_mut().unwrap()[ei] = orig + FD_STEP;
                let up = objective(&w, &x)?;
                w.layer_mut(li)[ti].as_slice_mut().unwrap()[ei] = orig - FD_STEP;
                let down = objective(&w, &x)?;
                w.layer_mut(li)[ti].as_slice_mut().unwrap()[ei] = orig;
                let numeric = (up - down) / (2.0 * FD_STEP);
                let analytic = grads.layer(li)[ti].as_slice().unwrap()[ei];
                report.max_rel_param = report.max_rel_param.max(rel_err(analytic, numeric));
                report.checked += 1;
            }
        }
    }
    for ei in 0..x.len() {
        let orig = x.as_slice().unwrap()[ei];
        x.as_slice_mut().unwrap()[ei] = orig + FD_STEP;
        let up = objective(&w, &x)?;
        x.as_slice_mut().unwrap()[ei] = orig - FD_STEP;
        let down = objective(&w, &x)?;
        x.as_slice_mut().unwrap()[ei] = orig;
        let numeric = (up - down) / (2.0 * FD_STEP);
        let analytic = dx.as_slice().unwrap()[ei];
        report.max_rel_input = report.max_rel_input.max(rel_err(analytic, numeric));
        report.checked += 1;
    }
    Ok(report)
}
