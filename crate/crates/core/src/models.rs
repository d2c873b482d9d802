//! The learned synchronizers and their input/output conventions.
//!
//! * 1D-CNN packet detector over a block of `B` amplitudes, fed as 4 channels.
//! * ReLU DNN CFO estimator over the 160 STF phases.
//! * LSTM/GRU CFO estimator over the STF phases split into 10 STSs of 16.

use std::f64::consts::PI;
use std::path::Path;

use halow_nn::{Checkpoint, LayerSpec, Network, Samples, TrainConfig, Weights};
use ndarray::{Array2, ArrayD, IxDyn};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, CoreError, Result};

/// Block lengths the detector is defined for.
pub const BLOCK_LENS: [usize; 6] = [40, 80, 160, 320, 800, 1600];
pub const DETECTOR_CHANNELS: usize = 4;
/// Half an STS.
pub const FIRST_FILTER_LEN: usize = 8;
pub const STF_SAMPLES: usize = 160;
pub const RNN_UNITS: usize = 30;
pub const RNN_FEATURES: usize = 16;
pub const RNN_STEPS: usize = 10;
/// Half the subcarrier spacing: CFO targets are `f_off / CFO_SCALE_HZ`.
pub const CFO_SCALE_HZ: f64 = 15_625.0;
/// Decoded CFO is clamped to `+/- CFO_SATURATION * CFO_SCALE_HZ` for every
/// head.
pub const CFO_SATURATION: f64 = 1.0;
/// Detector outputs below this mean "no packet start in the block".
pub const NO_PACKET_THRESHOLD: f64 = -0.5;

const INFER_CHUNK: usize = 1024;

/// How a block of `B` samples becomes 4 input channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelMap {
    /// Sample `n` goes to channel `n mod 4`, position `n / 4`.
    #[default]
    Polyphase,
    /// Channel `c` holds samples `c B/4 .. (c+1) B/4`.
    Contiguous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Lstm,
    Gru,
}

/// Architecture choice; determines the network and the data conventions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Detector {
        block_len: usize,
        #[serde(default)]
        channel_map: ChannelMap,
    },
    CfoDnn,
    CfoRnn {
        cell: CellKind,
    },
}

impl ModelSpec {
    /// Stable name stored in checkpoints as `model_kind`.
    pub fn kind_name(&self) -> &'static str {
        match self {
            ModelSpec::Detector { .. } => "detector",
            ModelSpec::CfoDnn => "cfo_dnn",
            ModelSpec::CfoRnn {
                cell: CellKind::Lstm,
            } => "cfo_lstm",
            ModelSpec::CfoRnn {
                cell: CellKind::Gru,
            } => "cfo_gru",
        }
    }

    pub fn block_len(&self) -> Option<usize> {
        match self {
            ModelSpec::Detector { block_len, .. } => Some(*block_len),
            _ => None,
        }
    }

    pub fn is_detector(&self) -> bool {
        matches!(self, ModelSpec::Detector { .. })
    }

    pub fn network(&self) -> Result<Network> {
        match *self {
            ModelSpec::Detector { block_len, .. } => detector_network(block_len),
            ModelSpec::CfoDnn => Ok(cfo_dnn_network()),
            ModelSpec::CfoRnn { cell } => Ok(cfo_rnn_network(cell)),
        }
    }

    /// Width of one record this model consumes.
    pub fn input_len(&self) -> usize {
        self.block_len().unwrap_or(STF_SAMPLES)
    }
}

/// conv(F=8, 4->9) relu conv(F=3, 9->5) relu dense(->3) relu dense(->1).
///
/// Fails unless the conv widths come out as `B/4 - 7` and `B/4 - 9`.
pub fn detector_network(block_len: usize) -> Result<Network> {
    if !BLOCK_LENS.contains(&block_len) {
        return Err(invalid(format!(
            "block length {block_len} not in {BLOCK_LENS:?}"
        )));
    }
    let w = block_len / DETECTOR_CHANNELS;
    let flat = 5 * (w - 9);
    let net = Network::new(
        vec![DETECTOR_CHANNELS, w],
        vec![
            LayerSpec::Conv1d {
                filter_len: FIRST_FILTER_LEN,
                in_channels: DETECTOR_CHANNELS,
                out_channels: 9,
            },
            LayerSpec::Relu,
            LayerSpec::Conv1d {
                filter_len: 3,
                in_channels: 9,
                out_channels: 5,
            },
            LayerSpec::Relu,
            LayerSpec::Dense {
                inputs: flat,
                outputs: 3,
            },
            LayerSpec::Relu,
            LayerSpec::Dense {
                inputs: 3,
                outputs: 1,
            },
        ],
    )?;
    let audit = [(2, vec![9, w - 7]), (4, vec![5, w - 9])];
    for (i, want) in audit {
        if net.layer_input_shape(i) != want.as_slice() {
            return Err(invalid(format!(
                "detector shape audit: layer {i} sees {:?}, expected {want:?}",
                net.layer_input_shape(i)
            )));
        }
    }
    Ok(net)
}

/// 160 -> 32 -> 64 -> 16 -> 1 with ReLU between layers.
pub fn cfo_dnn_network() -> Network {
    let d = |i, o| LayerSpec::Dense {
        inputs: i,
        outputs: o,
    };
    Network::new(
        vec![STF_SAMPLES],
        vec![
            d(STF_SAMPLES, 32),
            LayerSpec::Relu,
            d(32, 64),
            LayerSpec::Relu,
            d(64, 16),
            LayerSpec::Relu,
            d(16, 1),
        ],
    )
    .expect("fixed architecture")
}

/// Recurrent layer (30 units, 10 steps of 16) -> dense 5 -> relu -> dense 1.
pub fn cfo_rnn_network(cell: CellKind) -> Network {
    let rec = match cell {
        CellKind::Lstm => LayerSpec::Lstm {
            units: RNN_UNITS,
            features: RNN_FEATURES,
            steps: RNN_STEPS,
        },
        CellKind::Gru => LayerSpec::Gru {
            units: RNN_UNITS,
            features: RNN_FEATURES,
            steps: RNN_STEPS,
        },
    };
    Network::new(
        vec![RNN_STEPS, RNN_FEATURES],
        vec![
            rec,
            LayerSpec::Dense {
                inputs: RNN_UNITS,
                outputs: 5,
            },
            LayerSpec::Relu,
            LayerSpec::Dense {
                inputs: 5,
                outputs: 1,
            },
        ],
    )
    .expect("fixed architecture")
}

/// Start-label <-> regression-target mapping for one block length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelCodec {
    block_len: usize,
}

impl LabelCodec {
    pub fn new(block_len: usize) -> Result<Self> {
        if block_len == 0 {
            return Err(invalid("block length must be positive"));
        }
        Ok(LabelCodec { block_len })
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// `None` (no start) encodes as -1, a start `t` as `t / B`.
    pub fn encode(&self, start: Option<usize>) -> Result<f64> {
        match start {
            None => Ok(-1.0),
            Some(t) if t < self.block_len => Ok(t as f64 / self.block_len as f64),
            Some(t) => Err(invalid(format!(
                "start {t} outside block of {}",
                self.block_len
            ))),
        }
    }

    pub fn decode(&self, v: f64) -> Option<usize> {
        if v.is_nan() || v < NO_PACKET_THRESHOLD {
            return None;
        }
        let t = (v * self.block_len as f64).round();
        Some(t.clamp(0.0, (self.block_len - 1) as f64) as usize)
    }
}

/// RMS-normalized block laid out as `[4, B/4]` (row-major).
pub fn detector_input(block: &[f32], map: ChannelMap) -> Vec<f32> {
    let b = block.len();
    let w = b / DETECTOR_CHANNELS;
    let ms = block.iter().map(|&v| v as f64 * v as f64).sum::<f64>() / b.max(1) as f64;
    let g = if ms > 0.0 {
        (1.0 / ms.sqrt()) as f32
    } else {
        0.0
    };
    let mut out = vec![0.0; DETECTOR_CHANNELS * w];
    for c in 0..DETECTOR_CHANNELS {
        for p in 0..w {
            let n = match map {
                ChannelMap::Polyphase => p * DETECTOR_CHANNELS + c,
                ChannelMap::Contiguous => c * w + p,
            };
            out[c * w + p] = block[n] * g;
        }
    }
    out
}

/// Phases in `(-pi, pi]` scaled to `(-1, 1]`.
pub fn phase_input(phases: &[f32]) -> Vec<f32> {
    let s = (1.0 / PI) as f32;
    phases.iter().map(|&p| p * s).collect()
}

pub fn cfo_target(hz: f64) -> f64 {
    hz / CFO_SCALE_HZ
}

pub fn cfo_decode(v: f64) -> f64 {
    v.clamp(-CFO_SATURATION, CFO_SATURATION) * CFO_SCALE_HZ
}

fn check_len(spec: &ModelSpec, len: usize) -> Result<()> {
    if len != spec.input_len() {
        return Err(invalid(format!(
            "{} expects records of {} values, got {len}",
            spec.kind_name(),
            spec.input_len()
        )));
    }
    Ok(())
}

fn input_row(spec: &ModelSpec, values: &[f32]) -> Vec<f32> {
    match spec {
        ModelSpec::Detector { channel_map, .. } => detector_input(values, *channel_map),
        _ => phase_input(values),
    }
}

fn batch_tensor(spec: &ModelSpec, net: &Network, rows: &[&[f32]]) -> Result<ArrayD<f32>> {
    let mut shape = vec![rows.len()];
    shape.extend_from_slice(net.input_shape());
    let mut data = Vec::with_capacity(rows.len() * spec.input_len());
    for r in rows {
        check_len(spec, r.len())?;
        data.extend(input_row(spec, r));
    }
    Ok(ArrayD::from_shape_vec(IxDyn(&shape), data).expect("row sizes checked"))
}

/// Training tensors: inputs normalized exactly as at inference, targets
/// from `target` (a start label for detectors, Hz for CFO heads).
pub fn training_view(spec: &ModelSpec, rows: &[(&[f32], f64)]) -> Result<Samples<f32>> {
    let net = spec.network()?;
    let inputs: Vec<&[f32]> = rows.iter().map(|r| r.0).collect();
    let x = batch_tensor(spec, &net, &inputs)?;
    let mut t = Vec::with_capacity(rows.len());
    for &(_, label) in rows {
        t.push(target_for(spec, label)? as f32);
    }
    let t = Array2::from_shape_vec((rows.len(), 1), t)
        .expect("one target per row")
        .into_dyn();
    Ok(Samples::new(x, t)?)
}

/// Regression target for a record label (`-1` or a start for detectors).
pub fn target_for(spec: &ModelSpec, label: f64) -> Result<f64> {
    match spec {
        ModelSpec::Detector { block_len, .. } => {
            let codec = LabelCodec::new(*block_len)?;
            if label < 0.0 {
                codec.encode(None)
            } else {
                codec.encode(Some(label as usize))
            }
        }
        _ => Ok(cfo_target(label)),
    }
}

/// A network with weights and the conventions it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    spec: ModelSpec,
    network: Network,
    weights: Weights<f32>,
}

impl TrainedModel {
    pub fn new(spec: ModelSpec, weights: Weights<f32>) -> Result<Self> {
        let network = spec.network()?;
        if weights.param_count() != network.param_count() {
            return Err(CoreError::ModelMismatch(format!(
                "{} needs {} parameters, weights hold {}",
                spec.kind_name(),
                network.param_count(),
                weights.param_count()
            )));
        }
        Ok(TrainedModel {
            spec,
            network,
            weights,
        })
    }

    /// Freshly initialized (untrained) model.
    pub fn init(spec: ModelSpec, seed: u64) -> Result<Self> {
        let network = spec.network()?;
        let weights = network.init_weights(seed);
        Ok(TrainedModel {
            spec,
            network,
            weights,
        })
    }

    pub fn zeroed(spec: ModelSpec) -> Result<Self> {
        let network = spec.network()?;
        let weights = network.zero_weights();
        Ok(TrainedModel {
            spec,
            network,
            weights,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn weights(&self) -> &Weights<f32> {
        &self.weights
    }

    /// Raw network outputs for `rows`, batched.
    pub fn raw_outputs(&self, rows: &[&[f32]]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(rows.len());
        for chunk in rows.chunks(INFER_CHUNK) {
            let x = batch_tensor(&self.spec, &self.network, chunk)?;
            let y = self.network.forward(&self.weights, &x)?;
            out.extend(y.iter().map(|&v| v as f64));
        }
        Ok(out)
    }

    /// Packet start per block (`None` = no start in the block).
    pub fn detect(&self, blocks: &[&[f32]]) -> Result<Vec<Option<usize>>> {
        let ModelSpec::Detector { block_len, .. } = self.spec else {
            return Err(CoreError::ModelMismatch(format!(
                "{} is not a packet detector",
                self.spec.kind_name()
            )));
        };
        let codec = LabelCodec::new(block_len)?;
        Ok(self
            .raw_outputs(blocks)?
            .into_iter()
            .map(|v| codec.decode(v))
            .collect())
    }

    /// CFO in Hz per STF phase vector.
    pub fn estimate_cfo(&self, phases: &[&[f32]]) -> Result<Vec<f64>> {
        if self.spec.is_detector() {
            return Err(CoreError::ModelMismatch(
                "a packet detector cannot estimate CFO".into(),
            ));
        }
        Ok(self
            .raw_outputs(phases)?
            .into_iter()
            .map(cfo_decode)
            .collect())
    }

    /// Trains from `init` and wraps the result.
    pub fn fit(
        spec: ModelSpec,
        init_seed: u64,
        train_set: &Samples<f32>,
        val_set: Option<&Samples<f32>>,
        cfg: &TrainConfig,
        sink: impl FnMut(&halow_nn::EpochStats),
    ) -> Result<(Self, halow_nn::TrainOutcome<f32>)> {
        let model = TrainedModel::init(spec, init_seed)?;
        let outcome = halow_nn::train(
            &model.network,
            model.weights.clone(),
            train_set,
            val_set,
            cfg,
            sink,
        )?;
        let trained = TrainedModel::new(spec, outcome.weights.clone())?;
        Ok((trained, outcome))
    }

    /// Checkpoint carrying `model_kind`, `block_len` and the full spec.
    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint::new(self.network.clone(), self.weights.clone())
            .with_meta("model_kind", self.spec.kind_name())
            .with_meta("block_len", self.spec.block_len())
            .with_meta(
                "model",
                serde_json::to_value(self.spec).expect("spec serializes"),
            )
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self> {
        let spec: ModelSpec = match ck.metadata.get("model") {
            Some(v) => serde_json::from_value(v.clone())
                .map_err(|e| CoreError::Format(format!("checkpoint model spec: {e}")))?,
            None => return Err(CoreError::Format("checkpoint has no model spec".into())),
        };
        let kind = ck.metadata.get("model_kind").and_then(|v| v.as_str());
        if kind != Some(spec.kind_name()) {
            return Err(CoreError::ModelMismatch(format!(
                "model_kind {kind:?} disagrees with spec {}",
                spec.kind_name()
            )));
        }
        let block = ck.metadata.get("block_len").and_then(|v| v.as_u64());
        if block.map(|b| b as usize) != spec.block_len() {
            return Err(CoreError::ModelMismatch(format!(
                "block_len {block:?} disagrees with spec {:?}",
                spec.block_len()
            )));
        }
        if ck.network != spec.network()? {
            return Err(CoreError::ModelMismatch(format!(
                "stored architecture is not the {} architecture",
                spec.kind_name()
            )));
        }
        TrainedModel::new(spec, ck.weights)
    }

    /// Writes the manifest at `path` and the blob beside it. `extra` lands in
    /// the manifest metadata (seeds, hyperparameters, ...).
    pub fn save(&self, path: &Path, extra: &[(&str, serde_json::Value)]) -> Result<()> {
        let mut ck = self.to_checkpoint();
        for (k, v) in extra {
            ck = ck.with_meta(k, v.clone());
        }
        ck.save(path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        TrainedModel::from_checkpoint(Checkpoint::load(path)?)
    }

    /// Loads and insists on a particular spec (e.g. the block length of the
    /// data about to be scored).
    pub fn load_expecting(path: &Path, want: &ModelSpec) -> Result<Self> {
        let m = TrainedModel::load(path)?;
        if m.spec != *want {
            return Err(CoreError::ModelMismatch(format!(
                "checkpoint holds {:?}, expected {want:?}",
                m.spec
            )));
        }
        Ok(m)
    }
}

#[cfg(test)]
mod test {
    use super::*;

    #[test]
    fn polyphase_layout() {
        let b: Vec<f32> = (0..8).map(|v| v as f32).collect();
        let rms = (b.iter().map(|v| v * v).sum::<f32>() / 8.0).sqrt();
        let x = detector_input(&b, ChannelMap::Polyphase);
        let expect = [0., 4., 1., 5., 2., 6., 3., 7.];
        for (a, e) in x.iter().zip(expect) {
            assert!((a - e / rms).abs() < 1e-6);
        }
        let x = detector_input(&b, ChannelMap::Contiguous);
        for (a, e) in x.iter().zip(0..8) {
            assert!((a - e as f32 / rms).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_block_stays_zero() {
        assert!(detector_input(&[0.0; 40], ChannelMap::Polyphase)
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn codec_edges() {
        let c = LabelCodec::new(40).unwrap();
        assert_eq!(c.decode(-1.0), None);
        assert_eq!(c.decode(-0.5), Some(0));
        assert_eq!(c.decode(0.0), Some(0));
        assert_eq!(c.decode(2.0), Some(39));
        assert_eq!(c.decode(f64::NAN), None);
        assert!(c.encode(Some(40)).is_err());
    }
}
