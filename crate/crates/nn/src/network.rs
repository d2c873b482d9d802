//! Sequential networks, their weights and the forward/backward drivers.

use ndarray::{ArrayD, IxDyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, NnError, Result};
use crate::layers::{self, Cache, LayerSpec};
use crate::{Real, Tensor};

/// A validated stack of layers with a fixed per-sample input shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawNetwork", into = "RawNetwork")]
pub struct Network {
    input_shape: Vec<usize>,
    layers: Vec<LayerSpec>,
    shapes: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    input_shape: Vec<usize>,
    layers: Vec<LayerSpec>,
}

impl TryFrom<RawNetwork> for Network {
    type Error = NnError;
    fn try_from(raw: RawNetwork) -> Result<Self> {
        Network::new(raw.input_shape, raw.layers)
    }
}

impl From<Network> for RawNetwork {
    fn from(n: Network) -> Self {
        RawNetwork {
            input_shape: n.input_shape,
            layers: n.layers,
        }
    }
}

impl Network {
    pub fn new(input_shape: Vec<usize>, layers: Vec<LayerSpec>) -> Result<Self> {
        if input_shape.is_empty() || input_shape.iter().any(|&d| d == 0) {
            return Err(NnError::InvalidArgument(format!(
                "input shape {input_shape:?} must be non-empty with positive dims"
            )));
        }
        let mut shapes = vec![input_shape.clone()];
        for layer in &layers {
            let next = layer.output_shape(shapes.last().unwrap())?;
            shapes.push(next);
        }
        Ok(Network {
            input_shape,
            layers,
            shapes,
        })
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn output_shape(&self) -> &[usize] {
        self.shapes.last().unwrap()
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    /// Per-sample input shape of layer `i`.
    pub fn layer_input_shape(&self, i: usize) -> &[usize] {
        &self.shapes[i]
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .flat_map(|l| l.param_shapes())
            .map(|(_, s)| s.iter().product::<usize>())
            .sum()
    }

    /// Uniform `±sqrt(1/fan_in)` for every tensor; LSTM forget-gate input
    /// bias starts at 1 (recurrent bias stays at 0 there).
    pub fn init_weights<F: Real>(&self, seed: u64) -> Weights<F> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = self
            .layers
            .iter()
            .map(|layer| {
                let bound = (1.0 / layer.fan_in() as f64).sqrt();
                let mut tensors: Vec<Tensor<F>> = layer
                    .param_shapes()
                    .into_iter()
                    .map(|(_, shape)| {
                        ArrayD::from_shape_simple_fn(IxDyn(&shape), || {
                            F::lit(rng.random_range(-bound..bound))
                        })
                    })
                    .collect();
                if let LayerSpec::Lstm { units, .. } = *layer {
                    tensors[2]
                        .slice_mut(ndarray::s![units..2 * units])
                        .fill(F::one());
                    tensors[3]
                        .slice_mut(ndarray::s![units..2 * units])
                        .fill(F::zero());
                }
                tensors
            })
            .collect();
        Weights { params }
    }

    pub fn zero_weights<F: Real>(&self) -> Weights<F> {
        let params = self
            .layers
            .iter()
            .map(|l| {
                l.param_shapes()
                    .into_iter()
                    .map(|(_, s)| ArrayD::zeros(IxDyn(&s)))
                    .collect()
            })
            .collect();
        Weights { params }
    }

    fn check_weights<F: Real>(&self, w: &Weights<F>) -> Result<()> {
        if w.params.len() != self.layers.len() {
            return Err(shape_err(
                "weights layer count",
                &[self.layers.len()],
                &[w.params.len()],
            ));
        }
        for (layer, tensors) in self.layers.iter().zip(&w.params) {
            let shapes = layer.param_shapes();
            if shapes.len() != tensors.len() {
                return Err(shape_err(
                    "tensors per layer",
                    &[shapes.len()],
                    &[tensors.len()],
                ));
            }
            for ((name, s), t) in shapes.iter().zip(tensors) {
                if t.shape() != s.as_slice() {
                    return Err(shape_err(name, s, t.shape()));
                }
            }
        }
        Ok(())
    }

    fn check_input<F: Real>(&self, x: &Tensor<F>) -> Result<()> {
        if x.ndim() < 1 || &x.shape()[1..] != self.input_shape.as_slice() {
            let mut expected = vec![0];
            expected.extend_from_slice(&self.input_shape);
            return Err(shape_err("network input [batch, ..]", &expected, x.shape()));
        }
        Ok(())
    }

    /// Inference pass; `x` has shape `[batch, input_shape..]`.
    pub fn forward<F: Real>(&self, w: &Weights<F>, x: &Tensor<F>) -> Result<Tensor<F>> {
        self.check_weights(w)?;
        self.check_input(x)?;
        let mut h = x.clone();
        for (layer, p) in self.layers.iter().zip(&w.params) {
            h = layers::forward(layer, p, &h, false)?.0;
        }
        Ok(h)
    }

    /// Forward pass that records what the backward pass needs.
    pub fn forward_cached<F: Real>(
        &self,
        w: &Weights<F>,
        x: &Tensor<F>,
    ) -> Result<(Tensor<F>, Tape<F>)> {
        self.check_weights(w)?;
        self.check_input(x)?;
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for (layer, p) in self.layers.iter().zip(&w.params) {
            let (y, cache) = layers::forward(layer, p, &h, true)?;
            caches.push(cache.expect("cache requested"));
            h = y;
        }
        Ok((
            h,
            Tape {
                caches,
                batch: x.shape()[0],
            },
        ))
    }

    /// Backpropagates `grad_out` (d loss / d output). Returns parameter
    /// gradients and the gradient with respect to the network input.
    pub fn backward<F: Real>(
        &self,
        w: &Weights<F>,
        tape: &Tape<F>,
        grad_out: &Tensor<F>,
    ) -> Result<(Weights<F>, Tensor<F>)> {
        let mut expected = vec![tape.batch];
        expected.extend_from_slice(self.output_shape());
        if grad_out.shape() != expected.as_slice() {
            return Err(shape_err("output gradient", &expected, grad_out.shape()));
        }
        let mut grads = vec![Vec::new(); self.layers.len()];
        let mut g = grad_out.clone();
        for i in (0..self.layers.len()).rev() {
            let (pg, dx) = layers::backward(&self.layers[i], &w.params[i], &tape.caches[i], &g)?;
            grads[i] = pg;
            g = dx;
        }
        Ok((Weights { params: grads }, g))
    }
}

/// Intermediate values recorded by [`Network::forward_cached`].
pub struct Tape<F> {
    caches: Vec<Cache<F>>,
    batch: usize,
}

/// Learnable tensors grouped by layer, in the order of
/// [`LayerSpec::param_shapes`].
#[derive(Debug, Clone, PartialEq)]
pub struct Weights<F> {
    pub(crate) params: Vec<Vec<Tensor<F>>>,
}

impl<F: Real> Weights<F> {
    pub fn layer(&self, i: usize) -> &[Tensor<F>] {
        &self.params[i]
    }

    pub fn layer_mut(&mut self, i: usize) -> &mut [Tensor<F>] {
        &mut self.params[i]
    }

    pub fn tensors(&self) -> impl Iterator<Item = &Tensor<F>> {
        self.params.iter().flatten()
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Tensor<F>> {
        self.params.iter_mut().flatten()
    }

    pub fn num_layers(&self) -> usize {
        self.params.len()
    }

    pub fn param_count(&self) -> usize {
        self.tensors().map(|t| t.len()).sum()
    }

    pub fn zeros_like(&self) -> Self {
        Weights {
            params: self
                .params
                .iter()
                .map(|l| l.iter().map(|t| ArrayD::zeros(t.raw_dim())).collect())
                .collect(),
        }
    }

    pub fn cast<G: Real>(&self) -> Weights<G> {
        Weights {
            params: self
                .params
                .iter()
                .map(|l| {
                    l.iter()
                        .map(|t| t.mapv(|v| G::from_f64(v.to_f64().unwrap()).unwrap()))
                        .collect()
                })
                .collect(),
        }
    }

    /// All values in storage order (layer, tensor, row-major element).
    pub fn to_flat(&self) -> Vec<F> {
        self.tensors()
            .flat_map(|t| t.as_standard_layout().iter().copied().collect::<Vec<_>>())
            .collect()
    }

    pub fn from_flat(net: &Network, values: &[F]) -> Result<Self> {
        let mut w = net.zero_weights::<F>();
        let total = w.param_count();
        if values.len() != total {
            return Err(shape_err(
                "flat parameter vector",
                &[total],
                &[values.len()],
            ));
        }
        let mut off = 0;
        for t in w.tensors_mut() {
            let n = t.len();
            t.as_slice_mut()
                .unwrap()
                .copy_from_slice(&values[off..off + n]);
            off += n;
        }
        Ok(w)
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lstm_net() -> Network {
        Network::new(
            vec![10, 16],
            vec![
                LayerSpec::Lstm {
                    units: 30,
                    features: 16,
                    steps: 10,
                },
                LayerSpec::Dense {
                    inputs: 30,
                    outputs: 5,
                },
                LayerSpec::Relu,
                LayerSpec::Dense {
                    inputs: 5,
                    outputs: 1,
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn rejects_inconsistent_stack() {
        let err = Network::new(
            vec![8],
            vec![LayerSpec::Dense {
                inputs: 9,
                outputs: 1,
            }],
        );
        assert!(matches!(err, Err(NnError::ShapeMismatch { .. })));
    }

    #[test]
    fn init_is_bounded_and_sets_forget_bias() {
        let net = lstm_net();
        let w: Weights<f64> = net.init_weights(3);
        let bound = (1.0f64 / 30.0).sqrt();
        assert!(w.layer(0)[0].iter().all(|v| v.abs() <= bound));
        assert!(w.layer(0)[2]
            .slice(ndarray::s![30..60])
            .iter()
            .all(|&v| v == 1.0));
        assert!(w.layer(0)[3]
            .slice(ndarray::s![30..60])
            .iter()
            .all(|&v| v == 0.0));
        let dense_bound = (1.0f64 / 5.0).sqrt();
        assert!(w.layer(3)[0].iter().all(|v| v.abs() <= dense_bound));
        assert_eq!(w.param_count(), net.param_count());
    }

    #[test]
    fn init_is_seeded() {
        let net = lstm_net();
        let a: Weights<f32> = net.init_weights(11);
        let b: Weights<f32> = net.init_weights(11);
        let c: Weights<f32> = net.init_weights(12);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn flat_round_trip() {
        let net = lstm_net();
        let w: Weights<f32> = net.init_weights(1);
        let back = Weights::from_flat(&net, &w.to_flat()).unwrap();
        assert_eq!(w, back);
        assert!(Weights::<f32>::from_flat(&net, &[0.0; 3]).is_err());
    }

    #[test]
    fn json_round_trip_revalidates() {
        let net = lstm_net();
        let js = serde_json::to_string(&net).unwrap();
        let back: Network = serde_json::from_str(&js).unwrap();
        assert_eq!(net, back);
        let broken = js.replace("\"outputs\":5", "\"outputs\":6");
        assert!(serde_json::from_str::<Network>(&broken).is_err());
    }

    #[test]
    fn forward_checks_input_shape() {
        let net = lstm_net();
        let w: Weights<f32> = net.init_weights(0);
        let bad = ArrayD::<f32>::zeros(IxDyn(&[2, 160]));
        assert!(net.forward(&w, &bad).is_err());
        let good = ArrayD::<f32>::zeros(IxDyn(&[2, 10, 16]));
        assert_eq!(net.forward(&w, &good).unwrap().shape(), &[2, 1]);
    }
}
