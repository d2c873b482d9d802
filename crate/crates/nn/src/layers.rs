//! Layer descriptions and their forward/backward kernels.
//!
//! Shapes handed to the kernels always carry a leading batch axis. Per-sample
//! shapes are:
//!
//! | layer    | input                     | output          |
//! |----------|---------------------------|-----------------|
//! | dense    | anything, flattened       | `[outputs]`     |
//! | conv1d   | `[in_channels, width]`    | `[out_channels, width - filter_len + 1]` |
//! | lstm/gru | `steps * features` values | `[units]` (last hidden state) |
//! | relu/tanh| anything                  | same            |
//!
//! Parameter layout follows the usual `W x + b` convention with gate blocks
//! stacked along the first axis (`i, f, g, o` for LSTM, `r, z, n` for GRU).

use ndarray::{s, Array2, Array3, ArrayD, ArrayView2, Axis, Ix1, Ix2, IxDyn, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, NnError, Result};
use crate::Real;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Dense {
        inputs: usize,
        outputs: usize,
    },
    Relu,
    Tanh,
    /// Valid cross-correlation with stride 1 and no padding.
    Conv1d {
        filter_len: usize,
        in_channels: usize,
        out_channels: usize,
    },
    Lstm {
        units: usize,
        features: usize,
        steps: usize,
    },
    Gru {
        units: usize,
        features: usize,
        steps: usize,
    },
}

impl LayerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Relu => "relu",
            LayerSpec::Tanh => "tanh",
            LayerSpec::Conv1d { .. } => "conv1d",
            LayerSpec::Lstm { .. } => "lstm",
            LayerSpec::Gru { .. } => "gru",
        }
    }

    fn check_positive(&self) -> Result<()> {
        let dims: &[usize] = match self {
            LayerSpec::Dense { inputs, outputs } => &[*inputs, *outputs],
            LayerSpec::Relu | LayerSpec::Tanh => &[],
            LayerSpec::Conv1d {
                filter_len,
                in_channels,
                out_channels,
            } => &[*filter_len, *in_channels, *out_channels],
            LayerSpec::Lstm {
                units,
                features,
                steps,
            }
            | LayerSpec::Gru {
                units,
                features,
                steps,
            } => &[*units, *features, *steps],
        };
        if dims.iter().any(|&d| d == 0) {
            return Err(NnError::InvalidArgument(format!(
                "{} layer has a zero dimension: {:?}",
                self.name(),
                self
            )));
        }
        Ok(())
    }

    /// Per-sample output shape for a given per-sample input shape.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        self.check_positive()?;
        let numel: usize = input.iter().product();
        match *self {
            LayerSpec::Dense { inputs, outputs } => {
                if numel != inputs {
                    return Err(shape_err("dense input", &[inputs], input));
                }
                Ok(vec![outputs])
            }
            LayerSpec::Relu | LayerSpec::Tanh => Ok(input.to_vec()),
            LayerSpec::Conv1d {
                filter_len,
                in_channels,
                out_channels,
            } => {
                if input.len() != 2 || input[0] != in_channels || input[1] < filter_len {
                    return Err(shape_err(
                        "conv1d input [channels, width >= filter_len]",
                        &[in_channels, filter_len],
                        input,
                    ));
                }
                Ok(vec![out_channels, input[1] - filter_len + 1])
            }
            LayerSpec::Lstm {
                units,
                features,
                steps,
            }
            | LayerSpec::Gru {
                units,
                features,
                steps,
            } => {
                if numel != features * steps {
                    return Err(shape_err("recurrent input", &[steps, features], input));
                }
                Ok(vec![units])
            }
        }
    }

    /// Names and shapes of the learnable tensors, in storage order.
    pub fn param_shapes(&self) -> Vec<(&'static str, Vec<usize>)> {
        match *self {
            LayerSpec::Dense { inputs, outputs } => {
                vec![("weight", vec![outputs, inputs]), ("bias", vec![outputs])]
            }
            LayerSpec::Relu | LayerSpec::Tanh => Vec::new(),
            LayerSpec::Conv1d {
                filter_len,
                in_channels,
                out_channels,
            } => vec![
                ("weight", vec![out_channels, in_channels, filter_len]),
                ("bias", vec![out_channels]),
            ],
            LayerSpec::Lstm {
                units, features, ..
            } => recurrent_shapes(4, units, features),
            LayerSpec::Gru {
                units, features, ..
            } => recurrent_shapes(3, units, features),
        }
    }

    /// Fan-in used for the uniform initialization bound `sqrt(1 / fan_in)`.
    /// Recurrent layers use the hidden size.
    pub fn fan_in(&self) -> usize {
        match *self {
            LayerSpec::Dense { inputs, .. } => inputs,
            LayerSpec::Relu | LayerSpec::Tanh => 1,
            LayerSpec::Conv1d {
                filter_len,
                in_channels,
                ..
            } => filter_len * in_channels,
            LayerSpec::Lstm { units, .. } | LayerSpec::Gru { units, .. } => units,
        }
    }
}

fn recurrent_shapes(
    gates: usize,
    units: usize,
    features: usize,
) -> Vec<(&'static str, Vec<usize>)> {
    vec![
        ("w_ih", vec![gates * units, features]),
        ("w_hh", vec![gates * units, units]),
        ("b_ih", vec![gates * units]),
        ("b_hh", vec![gates * units]),
    ]
}

pub(crate) enum Cache<F> {
    Dense {
        input: Array2<F>,
        in_shape: Vec<usize>,
    },
    Relu {
        input: ArrayD<F>,
    },
    Tanh {
        output: ArrayD<F>,
    },
    Conv1d {
        cols: Array2<F>,
        in_shape: Vec<usize>,
    },
    Recurrent(RecurrentCache<F>),
}

pub(crate) struct RecurrentCache<F> {
    x2: Array2<F>,
    in_shape: Vec<usize>,
    /// Hidden states h_0 (zeros) .. h_T.
    hs: Vec<Array2<F>>,
    /// LSTM cell states c_0 .. c_T; empty for GRU.
    cs: Vec<Array2<F>>,
    /// Gate activations per step.
    acts: Vec<Array2<F>>,
    /// LSTM: tanh(c_t). GRU: the recurrent part of the candidate, W_hn h + b_hn.
    aux: Vec<Array2<F>>,
}

fn view2<F: Real>(t: &ArrayD<F>) -> ArrayView2<'_, F> {
    t.view()
        .into_dimensionality::<Ix2>()
        .expect("rank-2 parameter")
}

fn flatten2<F: Real>(x: &ArrayD<F>, rows: usize, cols: usize) -> Array2<F> {
    x.as_standard_layout()
        .into_owned()
        .into_shape_with_order((rows, cols))
        .expect("element count checked by caller")
}

/// Matrix products may come back column-major; reshapes need row-major.
fn standard<F: Real, D: ndarray::Dimension>(x: ndarray::Array<F, D>) -> ndarray::Array<F, D> {
    if x.is_standard_layout() {
        x
    } else {
        x.as_standard_layout().into_owned()
    }
}

fn unflatten<F: Real>(x: Array2<F>, shape: &[usize]) -> ArrayD<F> {
    standard(x)
        .into_shape_with_order(IxDyn(shape))
        .expect("element count checked by caller")
}

#[inline]
fn sigmoid<F: Real>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

pub(crate) fn forward<F: Real>(
    spec: &LayerSpec,
    params: &[ArrayD<F>],
    x: &ArrayD<F>,
    keep_cache: bool,
) -> Result<(ArrayD<F>, Option<Cache<F>>)> {
    let batch = x.shape()[0];
    let sample_shape = &x.shape()[1..];
    let out_sample = spec.output_shape(sample_shape)?;
    let mut out_shape = vec![batch];
    out_shape.extend_from_slice(&out_sample);

    match *spec {
        LayerSpec::Dense { inputs, outputs } => {
            let x2 = flatten2(x, batch, inputs);
            let w = view2(&params[0]);
            let b = params[1].view().into_dimensionality::<Ix1>().unwrap();
            let mut y = x2.dot(&w.t());
            y += &b;
            debug_assert_eq!(y.ncols(), outputs);
            let cache = keep_cache.then(|| Cache::Dense {
                input: x2,
                in_shape: x.shape().to_vec(),
            });
            Ok((y.into_dyn(), cache))
        }
        LayerSpec::Relu => {
            let y = x.mapv(|v| if v > F::zero() { v } else { F::zero() });
            Ok((y, keep_cache.then(|| Cache::Relu { input: x.clone() })))
        }
        LayerSpec::Tanh => {
            let y = x.mapv(|v| v.tanh());
            let cache = keep_cache.then(|| Cache::Tanh { output: y.clone() });
            Ok((y, cache))
        }
        LayerSpec::Conv1d {
            filter_len,
            in_channels,
            out_channels,
        } => {
            let width = sample_shape[1];
            let k_out = width - filter_len + 1;
            let cols = im2col(x, batch, in_channels, width, filter_len);
            let wmat = params[0]
                .view()
                .into_shape_with_order((out_channels, in_channels * filter_len))
                .unwrap();
            let b = params[1].view().into_dimensionality::<Ix1>().unwrap();
            let mut y2 = cols.dot(&wmat.t());
            y2 += &b;
            // [batch*K, ch_o] -> [batch, ch_o, K]
            let y = standard(y2)
                .into_shape_with_order((batch, k_out, out_channels))
                .unwrap()
                .permuted_axes([0, 2, 1])
                .as_standard_layout()
                .into_owned()
                .into_dyn();
            let cache = keep_cache.then(|| Cache::Conv1d {
                cols,
                in_shape: x.shape().to_vec(),
            });
            Ok((y, cache))
        }
        LayerSpec::Lstm {
            units,
            features,
            steps,
        } => {
            let (y, cache) = lstm_forward(params, x, batch, units, features, steps);
            Ok((y.into_dyn(), keep_cache.then_some(Cache::Recurrent(cache))))
        }
        LayerSpec::Gru {
            units,
            features,
            steps,
        } => {
            let (y, cache) = gru_forward(params, x, batch, units, features, steps);
            Ok((y.into_dyn(), keep_cache.then_some(Cache::Recurrent(cache))))
        }
    }
}

/// Returns parameter gradients (same layout as `params`) and the input gradient.
pub(crate) fn backward<F: Real>(
    spec: &LayerSpec,
    params: &[ArrayD<F>],
    cache: &Cache<F>,
    grad_out: &ArrayD<F>,
) -> Result<(Vec<ArrayD<F>>, ArrayD<F>)> {
    let batch = grad_out.shape()[0];
    match (spec, cache) {
        (&LayerSpec::Dense { outputs, .. }, Cache::Dense { input, in_shape }) => {
            let g2 = flatten2(grad_out, batch, outputs);
            let w = view2(&params[0]);
            let dw = g2.t().dot(input);
            let db = g2.sum_axis(Axis(0));
            let dx = g2.dot(&w);
            Ok((vec![dw.into_dyn(), db.into_dyn()], unflatten(dx, in_shape)))
        }
        (LayerSpec::Relu, Cache::Relu { input }) => {
            let mut dx = grad_out.clone();
            Zip::from(&mut dx).and(input).for_each(|d, &x| {
                if x <= F::zero() {
                    *d = F::zero();
                }
            });
            Ok((Vec::new(), dx))
        }
        (LayerSpec::Tanh, Cache::Tanh { output }) => {
            let mut dx = grad_out.clone();
            Zip::from(&mut dx)
                .and(output)
                .for_each(|d, &y| *d = *d * (F::one() - y * y));
            Ok((Vec::new(), dx))
        }
        (
            &LayerSpec::Conv1d {
                filter_len,
                in_channels,
                out_channels,
            },
            Cache::Conv1d { cols, in_shape },
        ) => {
            let width = in_shape[2];
            let k_out = width - filter_len + 1;
            // [batch, ch_o, K] -> [batch*K, ch_o]
            let g2 = grad_out
                .view()
                .into_shape_with_order((batch, out_channels, k_out))
                .unwrap()
                .permuted_axes([0, 2, 1])
                .as_standard_layout()
                .into_owned()
                .into_shape_with_order((batch * k_out, out_channels))
                .unwrap();
            let wmat = params[0]
                .view()
                .into_shape_with_order((out_channels, in_channels * filter_len))
                .unwrap();
            let dw = standard(g2.t().dot(cols))
                .into_shape_with_order(IxDyn(&[out_channels, in_channels, filter_len]))
                .unwrap();
            let db = g2.sum_axis(Axis(0)).into_dyn();
            let dcols = standard(g2.dot(&wmat));
            let dx = col2im(&dcols, batch, in_channels, width, filter_len);
            Ok((vec![dw, db], dx.into_dyn()))
        }
        (
            &LayerSpec::Lstm {
                units,
                features,
                steps,
            },
            Cache::Recurrent(c),
        ) => Ok(lstm_backward(
            params, c, grad_out, batch, units, features, steps,
        )),
        (
            &LayerSpec::Gru {
                units,
                features,
                steps,
            },
            Cache::Recurrent(c),
        ) => Ok(gru_backward(
            params, c, grad_out, batch, units, features, steps,
        )),
        _ => Err(NnError::InvalidArgument(format!(
            "cache does not belong to a {} layer",
            spec.name()
        ))),
    }
}

fn im2col<F: Real>(
    x: &ArrayD<F>,
    batch: usize,
    channels: usize,
    width: usize,
    filter_len: usize,
) -> Array2<F> {
    let k_out = width - filter_len + 1;
    let xs = x.as_standard_layout();
    let src = xs.as_slice().unwrap();
    let row_len = channels * filter_len;
    let mut cols = Array2::<F>::zeros((batch * k_out, row_len));
    let dst = cols.as_slice_mut().unwrap();
    for b in 0..batch {
        for k in 0..k_out {
            let row = &mut dst[(b * k_out + k) * row_len..][..row_len];
            for c in 0..channels {
                let start = (b * channels + c) * width + k;
                row[c * filter_len..][..filter_len]
                    .copy_from_slice(&src[start..start + filter_len]);
            }
        }
    }
    cols
}

fn col2im<F: Real>(
    dcols: &Array2<F>,
    batch: usize,
    channels: usize,
    width: usize,
    filter_len: usize,
) -> Array3<F> {
    let k_out = width - filter_len + 1;
    let row_len = channels * filter_len;
    let src = dcols.as_slice().unwrap();
    let mut dx = Array3::<F>::zeros((batch, channels, width));
    let dst = dx.as_slice_mut().unwrap();
    for b in 0..batch {
        for k in 0..k_out {
            let row = &src[(b * k_out + k) * row_len..][..row_len];
            for c in 0..channels {
                let start = (b * channels + c) * width + k;
                for (d, &g) in dst[start..start + filter_len]
                    .iter_mut()
                    .zip(&row[c * filter_len..][..filter_len])
                {
                    *d += g;
                }
            }
        }
    }
    dx
}

fn recurrent_inputs<F: Real>(
    params: &[ArrayD<F>],
    x: &ArrayD<F>,
    batch: usize,
    features: usize,
    steps: usize,
) -> (Array2<F>, Array3<F>) {
    let x2 = flatten2(x, batch * steps, features);
    let gates = params[0].shape()[0];
    let mut xw = x2.dot(&view2(&params[0]).t());
    xw += &params[2].view().into_dimensionality::<Ix1>().unwrap();
    let xw = standard(xw)
        .into_shape_with_order((batch, steps, gates))
        .unwrap();
    (x2, xw)
}

fn lstm_forward<F: Real>(
    params: &[ArrayD<F>],
    x: &ArrayD<F>,
    batch: usize,
    u: usize,
    features: usize,
    steps: usize,
) -> (Array2<F>, RecurrentCache<F>) {
    let (x2, xw) = recurrent_inputs(params, x, batch, features, steps);
    let w_hh = view2(&params[1]);
    let b_hh = params[3].view().into_dimensionality::<Ix1>().unwrap();

    let mut hs = vec![Array2::<F>::zeros((batch, u))];
    let mut cs = vec![Array2::<F>::zeros((batch, u))];
    let mut acts = Vec::with_capacity(steps);
    let mut aux = Vec::with_capacity(steps);
    for t in 0..steps {
        let h_prev = &hs[t];
        let mut a = standard(h_prev.dot(&w_hh.t()));
        a += &xw.slice(s![.., t, ..]);
        a += &b_hh;
        let c_prev = &cs[t];
        let mut c = Array2::<F>::zeros((batch, u));
        let mut tc = Array2::<F>::zeros((batch, u));
        let mut h = Array2::<F>::zeros((batch, u));
        for b in 0..batch {
            let row = a.row_mut(b).into_slice().unwrap();
            for j in 0..u {
                let i = sigmoid(row[j]);
                let f = sigmoid(row[u + j]);
                let g = row[2 * u + j].tanh();
                let o = sigmoid(row[3 * u + j]);
                row[j] = i;
                row[u + j] = f;
                row[2 * u + j] = g;
                row[3 * u + j] = o;
                let cn = f * c_prev[[b, j]] + i * g;
                let t_c = cn.tanh();
                c[[b, j]] = cn;
                tc[[b, j]] = t_c;
                h[[b, j]] = o * t_c;
            }
        }
        acts.push(a);
        aux.push(tc);
        cs.push(c);
        hs.push(h);
    }
    let out = hs[steps].clone();
    let cache = RecurrentCache {
        x2,
        in_shape: x.shape().to_vec(),
        hs,
        cs,
        acts,
        aux,
    };
    (out, cache)
}

fn lstm_backward<F: Real>(
    params: &[ArrayD<F>],
    cache: &RecurrentCache<F>,
    grad_out: &ArrayD<F>,
    batch: usize,
    u: usize,
    _features: usize,
    steps: usize,
) -> (Vec<ArrayD<F>>, ArrayD<F>) {
    let w_ih = view2(&params[0]);
    let w_hh = view2(&params[1]);
    let mut dh = flatten2(grad_out, batch, u);
    let mut dc = Array2::<F>::zeros((batch, u));
    let mut dxw = Array3::<F>::zeros((batch, steps, 4 * u));
    let mut dw_hh = Array2::<F>::zeros((4 * u, u));
    let one = F::one();
    for t in (0..steps).rev() {
        let a = &cache.acts[t];
        let tc = &cache.aux[t];
        let c_prev = &cache.cs[t];
        let mut da = Array2::<F>::zeros((batch, 4 * u));
        for b in 0..batch {
            let ar = a.row(b);
            let dar = da.row_mut(b).into_slice().unwrap();
            for j in 0..u {
                let (i, f, g, o) = (ar[j], ar[u + j], ar[2 * u + j], ar[3 * u + j]);
                let t_c = tc[[b, j]];
                let dhv = dh[[b, j]];
                let dct = dc[[b, j]] + dhv * o * (one - t_c * t_c);
                dar[j] = dct * g * i * (one - i);
                dar[u + j] = dct * c_prev[[b, j]] * f * (one - f);
                dar[2 * u + j] = dct * i * (one - g * g);
                dar[3 * u + j] = dhv * t_c * o * (one - o);
                dc[[b, j]] = dct * f;
            }
        }
        dw_hh += &da.t().dot(&cache.hs[t]);
        dh = da.dot(&w_hh);
        dxw.slice_mut(s![.., t, ..]).assign(&da);
    }
    recurrent_param_grads(cache, dxw, dw_hh, None, &w_ih, batch, steps)
}

fn gru_forward<F: Real>(
    params: &[ArrayD<F>],
    x: &ArrayD<F>,
    batch: usize,
    u: usize,
    features: usize,
    steps: usize,
) -> (Array2<F>, RecurrentCache<F>) {
    let (x2, xw) = recurrent_inputs(params, x, batch, features, steps);
    let w_hh = view2(&params[1]);
    let b_hh = params[3].view().into_dimensionality::<Ix1>().unwrap();

    let mut hs = vec![Array2::<F>::zeros((batch, u))];
    let mut acts = Vec::with_capacity(steps);
    let mut aux = Vec::with_capacity(steps);
    let one = F::one();
    for t in 0..steps {
        let h_prev = &hs[t];
        let mut hw = h_prev.dot(&w_hh.t());
        hw += &b_hh;
        let xt = xw.slice(s![.., t, ..]);
        let mut a = Array2::<F>::zeros((batch, 3 * u));
        let mut hn = Array2::<F>::zeros((batch, u));
        let mut h = Array2::<F>::zeros((batch, u));
        for b in 0..batch {
            for j in 0..u {
                let r = sigmoid(xt[[b, j]] + hw[[b, j]]);
                let z = sigmoid(xt[[b, u + j]] + hw[[b, u + j]]);
                let hnv = hw[[b, 2 * u + j]];
                let n = (xt[[b, 2 * u + j]] + r * hnv).tanh();
                a[[b, j]] = r;
                a[[b, u + j]] = z;
                a[[b, 2 * u + j]] = n;
                hn[[b, j]] = hnv;
                h[[b, j]] = (one - z) * n + z * h_prev[[b, j]];
            }
        }
        acts.push(a);
        aux.push(hn);
        hs.push(h);
    }
    let out = hs[steps].clone();
    let cache = RecurrentCache {
        x2,
        in_shape: x.shape().to_vec(),
        hs,
        cs: Vec::new(),
        acts,
        aux,
    };
    (out, cache)
}

fn gru_backward<F: Real>(
    params: &[ArrayD<F>],
    cache: &RecurrentCache<F>,
    grad_out: &ArrayD<F>,
    batch: usize,
    u: usize,
    _features: usize,
    steps: usize,
) -> (Vec<ArrayD<F>>, ArrayD<F>) {
    let w_ih = view2(&params[0]);
    let w_hh = view2(&params[1]);
    let mut dh = flatten2(grad_out, batch, u);
    let mut dxw = Array3::<F>::zeros((batch, steps, 3 * u));
    let mut dw_hh = Array2::<F>::zeros((3 * u, u));
    let mut db_hh = ndarray::Array1::<F>::zeros(3 * u);
    let one = F::one();
    for t in (0..steps).rev() {
        let a = &cache.acts[t];
        let hn = &cache.aux[t];
        let h_prev = &cache.hs[t];
        let mut dx_part = Array2::<F>::zeros((batch, 3 * u));
        let mut dh_part = Array2::<F>::zeros((batch, 3 * u));
        let mut dh_direct = Array2::<F>::zeros((batch, u));
        for b in 0..batch {
            for j in 0..u {
                let (r, z, n) = (a[[b, j]], a[[b, u + j]], a[[b, 2 * u + j]]);
                let hp = h_prev[[b, j]];
                let dhv = dh[[b, j]];
                let dn = dhv * (one - z);
                let dz = dhv * (hp - n);
                let dan = dn * (one - n * n);
                let dar = dan * hn[[b, j]] * r * (one - r);
                let daz = dz * z * (one - z);
                dx_part[[b, j]] = dar;
                dx_part[[b, u + j]] = daz;
                dx_part[[b, 2 * u + j]] = dan;
                dh_part[[b, j]] = dar;
                dh_part[[b, u + j]] = daz;
                dh_part[[b, 2 * u + j]] = dan * r;
                dh_direct[[b, j]] = dhv * z;
            }
        }
        dw_hh += &dh_part.t().dot(h_prev);
        db_hh += &dh_part.sum_axis(Axis(0));
        dh = dh_direct + dh_part.dot(&w_hh);
        dxw.slice_mut(s![.., t, ..]).assign(&dx_part);
    }
    recurrent_param_grads(cache, dxw, dw_hh, Some(db_hh), &w_ih, batch, steps)
}

/// Shared tail of the recurrent backward passes. When `db_hh` is `None` the
/// recurrent bias receives the same gradient as the input bias (LSTM).
fn recurrent_param_grads<F: Real>(
    cache: &RecurrentCache<F>,
    dxw: Array3<F>,
    dw_hh: Array2<F>,
    db_hh: Option<ndarray::Array1<F>>,
    w_ih: &ArrayView2<'_, F>,
    batch: usize,
    steps: usize,
) -> (Vec<ArrayD<F>>, ArrayD<F>) {
    let gates = dxw.shape()[2];
    let dxw2 = standard(dxw)
        .into_shape_with_order((batch * steps, gates))
        .unwrap();
    let dw_ih = dxw2.t().dot(&cache.x2);
    let db_ih = dxw2.sum_axis(Axis(0));
    let db_hh = db_hh.unwrap_or_else(|| db_ih.clone());
    let dx = dxw2.dot(w_ih);
    (
        vec![
            dw_ih.into_dyn(),
            dw_hh.into_dyn(),
            db_ih.into_dyn(),
            db_hh.into_dyn(),
        ],
        unflatten(dx, &cache.in_shape),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, ArrayD};

    fn zeros_params(spec: &LayerSpec) -> Vec<ArrayD<f64>> {
        spec.param_shapes()
            .into_iter()
            .map(|(_, s)| ArrayD::zeros(IxDyn(&s)))
            .collect()
    }

    #[test]
    fn relu_clamps_negatives() {
        let x = array![[-1.0, 0.0, 2.0]].into_dyn();
        let (y, _) = forward(&LayerSpec::Relu, &[], &x, false).unwrap();
        assert_eq!(y, array![[0.0, 0.0, 2.0]].into_dyn());
    }

    #[test]
    fn identity_dense_passes_input_through() {
        let spec = LayerSpec::Dense {
            inputs: 3,
            outputs: 3,
        };
        let params = vec![
            ArrayD::from_shape_vec(IxDyn(&[3, 3]), vec![1., 0., 0., 0., 1., 0., 0., 0., 1.])
                .unwrap(),
            ArrayD::zeros(IxDyn(&[3])),
        ];
        let x = array![[0.5, -2.0, 7.0], [1.0, 2.0, 3.0]].into_dyn();
        let (y, _) = forward(&spec, &params, &x, false).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn conv_output_width_is_valid_width() {
        let spec = LayerSpec::Conv1d {
            filter_len: 8,
            in_channels: 4,
            out_channels: 9,
        };
        assert_eq!(spec.output_shape(&[4, 10]).unwrap(), vec![9, 3]);
        assert_eq!(spec.output_shape(&[4, 400]).unwrap(), vec![9, 393]);
        assert!(spec.output_shape(&[4, 7]).is_err());
        assert!(spec.output_shape(&[3, 10]).is_err());
    }

    #[test]
    fn conv_matches_direct_cross_correlation() {
        let spec = LayerSpec::Conv1d {
            filter_len: 2,
            in_channels: 2,
            out_channels: 1,
        };
        // weight[0, c, f]
        let params = vec![
            ArrayD::from_shape_vec(IxDyn(&[1, 2, 2]), vec![1.0, 2.0, -1.0, 0.5]).unwrap(),
            ArrayD::from_elem(IxDyn(&[1]), 0.25),
        ];
        let x =
            ArrayD::<f64>::from_shape_vec(IxDyn(&[1, 2, 3]), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
                .unwrap();
        let (y, _) = forward(&spec, &params, &x, false).unwrap();
        // k=0: 1*1 + 2*2 + (-1)*4 + 0.5*5 + 0.25 = 3.75
        // k=1: 1*2 + 2*3 + (-1)*5 + 0.5*6 + 0.25 = 6.25
        assert_eq!(y.shape(), &[1, 1, 2]);
        assert!((y[[0, 0, 0]] - 3.75).abs() < 1e-12);
        assert!((y[[0, 0, 1]] - 6.25).abs() < 1e-12);
    }

    #[test]
    fn zero_lstm_and_gru_give_zero_state() {
        for spec in [
            LayerSpec::Lstm {
                units: 5,
                features: 3,
                steps: 4,
            },
            LayerSpec::Gru {
                units: 5,
                features: 3,
                steps: 4,
            },
        ] {
            let params = zeros_params(&spec);
            let x = ArrayD::from_shape_fn(IxDyn(&[2, 4, 3]), |i| (i[1] as f64) - 1.3 * i[2] as f64);
            let (y, _) = forward(&spec, &params, &x, false).unwrap();
            assert_eq!(y.shape(), &[2, 5]);
            assert!(y.iter().all(|&v| v == 0.0), "{}", spec.name());
        }
    }

    #[test]
    fn recurrent_accepts_flat_input() {
        let spec = LayerSpec::Lstm {
            units: 2,
            features: 16,
            steps: 10,
        };
        assert_eq!(spec.output_shape(&[160]).unwrap(), vec![2]);
        assert!(spec.output_shape(&[159]).is_err());
    }

    #[test]
    fn zero_dimensions_rejected() {
        let spec = LayerSpec::Dense {
            inputs: 0,
            outputs: 1,
        };
        assert!(matches!(
            spec.output_shape(&[0]),
            Err(NnError::InvalidArgument(_))
        ));
    }
}
