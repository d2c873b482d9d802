//! Mini-batch training loop.

use ndarray::Axis;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adam::{Adam, AdamConfig};
use crate::error::{shape_err, NnError, Result};
use crate::loss::mse_loss;
use crate::network::{Network, Weights};
use crate::{Real, Tensor};

/// Inputs `[n, input_shape..]` paired with targets `[n, output_shape..]`.
#[derive(Debug, Clone)]
pub struct Samples<F> {
    inputs: Tensor<F>,
    targets: Tensor<F>,
}

impl<F: Real> Samples<F> {
    pub fn new(inputs: Tensor<F>, targets: Tensor<F>) -> Result<Self> {
        if inputs.ndim() == 0 || targets.ndim() == 0 || inputs.shape()[0] != targets.shape()[0] {
            return Err(shape_err(
                "samples: inputs and targets must share the leading axis",
                inputs.shape(),
                targets.shape(),
            ));
        }
        Ok(Samples { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.shape()[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn inputs(&self) -> &Tensor<F> {
        &self.inputs
    }

    pub fn targets(&self) -> &Tensor<F> {
        &self.targets
    }

    fn gather(&self, idx: &[usize]) -> (Tensor<F>, Tensor<F>) {
        (
            self.inputs.select(Axis(0), idx),
            self.targets.select(Axis(0), idx),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub batch: usize,
    pub epochs: usize,
    /// Seeds the per-epoch shuffle.
    pub seed: u64,
    pub adam: AdamConfig,
    /// Stop after this many epochs without a validation improvement and
    /// return the best weights. `None` trains for exactly `epochs`.
    #[serde(default)]
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch: 32,
            epochs: 100,
            seed: 0,
            adam: AdamConfig::default(),
            patience: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<F> {
    pub weights: Weights<F>,
    pub history: Vec<EpochStats>,
    /// Epoch whose weights were returned (the last one unless early stopping
    /// kicked in).
    pub selected_epoch: usize,
}

/// Mean loss over `data`, evaluated in chunks of `batch`.
pub fn evaluate_loss<F: Real>(
    net: &Network,
    w: &Weights<F>,
    data: &Samples<F>,
    batch: usize,
) -> Result<f64> {
    let n = data.len();
    if n == 0 {
        return Ok(0.0);
    }
    let idx: Vec<usize> = (0..n).collect();
    let mut total = 0.0;
    for chunk in idx.chunks(batch.max(1)) {
        let (x, t) = data.gather(chunk);
        let p = net.forward(w, &x)?;
        let (l, _) = mse_loss(&p, &t)?;
        total += l.to_f64().unwrap() * chunk.len() as f64;
    }
    Ok(total / n as f64)
}

/// Trains `init` on `train_set` with shuffled mini-batches and Adam.
/// `sink` is called once per finished epoch.
pub fn train<F: Real>(
    net: &Network,
    init: Weights<F>,
    train_set: &Samples<F>,
    val_set: Option<&Samples<F>>,
    cfg: &TrainConfig,
    mut sink: impl FnMut(&EpochStats),
) -> Result<TrainOutcome<F>> {
    if train_set.is_empty() {
        return Err(NnError::InvalidArgument("training set is empty".into()));
    }
    if cfg.batch == 0 {
        return Err(NnError::InvalidArgument(
            "batch size must be positive".into(),
        ));
    }
    if cfg.patience.is_some() && val_set.is_none() {
        return Err(NnError::InvalidArgument(
            "early stopping needs a validation set".into(),
        ));
    }
    let mut w = init;
    let mut opt = Adam::new(cfg.adam, &w)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, Weights<F>)> = None;
    let mut selected_epoch = 0;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for (bi, chunk) in order.chunks(cfg.batch).enumerate() {
            let (x, t) = train_set.gather(chunk);
            let (p, tape) = net.forward_cached(&w, &x)?;
            let (loss, grad) = mse_loss(&p, &t)?;
            let loss = loss.to_f64().unwrap();
            if !loss.is_finite() {
                return Err(NnError::NonFinite { epoch, batch: bi });
            }
            let (g, _) = net.backward(&w, &tape, &grad)?;
            opt.update(&mut w, &g);
            sum += loss * chunk.len() as f64;
        }
        let train_loss = sum / train_set.len() as f64;
        let val_loss = match val_set {
            Some(v) => Some(evaluate_loss(net, &w, v, cfg.batch)?),
            None => None,
        };
        let stats = EpochStats {
            epoch,
            train_loss,
            val_loss,
        };
        sink(&stats);
        history.push(stats);
        selected_epoch = epoch;

        if let (Some(patience), Some(vl)) = (cfg.patience, val_loss) {
            let improved = best.as_ref().is_none_or(|(b, _, _)| vl < *b);
            if improved {
                best = Some((vl, epoch, w.clone()));
            } else if epoch - best.as_ref().unwrap().1 >= patience {
                break;
            }
        }
    }

    if let Some((_, epoch, bw)) = best {
        w = bw;
        selected_epoch = epoch;
    }
    Ok(TrainOutcome {
        weights: w,
        history,
        selected_epoch,
    })
}
