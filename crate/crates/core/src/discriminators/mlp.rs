//! Fully connected ReLU network with a sigmoid output, trained with Adam on
//! binary cross-entropy.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::standardizer::Standardizer;
use super::{sigmoid, softplus, Discriminator};
use crate::error::{McdError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Start the output layer at zero so the untrained network predicts 0.5.
    pub zero_init_output: bool,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden: vec![64, 64],
            learning_rate: 1e-3,
            epochs: 200,
            batch_size: 64,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            zero_init_output: false,
        }
    }
}

impl MlpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(McdError::InvalidArgument(
                "learning rate must be positive".into(),
            ));
        }
        if self.epochs == 0 {
            return Err(McdError::InvalidArgument("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(McdError::InvalidArgument("batch size must be >= 1".into()));
        }
        if self.hidden.contains(&0) {
            return Err(McdError::InvalidArgument(
                "hidden layers must be nonempty".into(),
            ));
        }
        if !((0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.adam_eps > 0.0)
        {
            return Err(McdError::InvalidArgument("invalid Adam constants".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Dense {
    /// `fan_in x fan_out`
    w: Array2<f64>,
    b: Array1<f64>,
}

/// Weight and bias gradients of one layer.
type LayerGrad = (Array2<f64>, Array1<f64>);

/// Network weights without the input standardization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    layers: Vec<Dense>,
}

struct Forward {
    /// Inputs to each layer; `inputs[0]` is the batch itself.
    inputs: Vec<Array2<f64>>,
    logits: Array1<f64>,
}

impl Network {
    /// He-normal initialization; the last layer is zero when `zero_output`.
    pub fn init(
        input_width: usize,
        hidden: &[usize],
        zero_output: bool,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut sizes = vec![input_width];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, s)| {
                let (fan_in, fan_out) = (s[0], s[1]);
                let w = if i == last && zero_output {
                    Array2::zeros((fan_in, fan_out))
                } else {
                    let normal =
                        Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive sd");
                    Array2::from_shape_simple_fn((fan_in, fan_out), || normal.sample(rng))
                };
                Dense {
                    w,
                    b: Array1::zeros(fan_out),
                }
            })
            .collect();
        Network { layers }
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].w.nrows()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Parameters flattened layer by layer as `(W row-major, b)`.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
        out
    }

    pub fn set_flat_params(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.param_count() {
            return Err(McdError::ShapeMismatch(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                theta.len()
            )));
        }
        let mut off = 0;
        for l in &mut self.layers {
            for v in l.w.iter_mut().chain(l.b.iter_mut()) {
                *v = theta[off];
                off += 1;
            }
        }
        Ok(())
    }

    fn forward(&self, x: ArrayView2<f64>) -> Forward {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut a = x.to_owned();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let mut out = a.dot(&l.w) + &l.b;
            if i < last {
                out.mapv_inplace(|v| v.max(0.0));
            }
            inputs.push(a);
            a = out;
        }
        Forward {
            inputs,
            logits: a.column(0).to_owned(),
        }
    }

    pub fn logits(&self, x: ArrayView2<f64>) -> Array1<f64> {
        self.forward(x).logits
    }

    /// Mean binary cross-entropy with logits.
    pub fn loss(&self, x: ArrayView2<f64>, z: &[u8]) -> f64 {
        bce(&self.logits(x), z)
    }

    /// Mean loss and its gradient in the layout of [`Network::flat_params`].
    pub fn loss_and_gradient(&self, x: ArrayView2<f64>, z: &[u8]) -> (f64, Vec<f64>) {
        let (loss, grads) = self.backprop(x, z);
        let mut flat = Vec::with_capacity(self.param_count());
        for (gw, gb) in &grads {
            flat.extend(gw.iter());
            flat.extend(gb.iter());
        }
        (loss, flat)
    }

    fn backprop(&self, x: ArrayView2<f64>, z: &[u8]) -> (f64, Vec<LayerGrad>) {
        let fwd = self.forward(x);
        let n = z.len() as f64;
        let loss = bce(&fwd.logits, z);
        let mut delta: Array2<f64> = fwd
            .logits
            .iter()
            .zip(z)
            .map(|(&s, &zi)| (sigmoid(s) - zi as f64) / n)
            .collect::<Array1<f64>>()
            .insert_axis(Axis(1));
        let mut grads = vec![(Array2::zeros((0, 0)), Array1::zeros(0)); self.layers.len()];
        for i in (0..self.layers.len()).rev() {
            let a = &fwd.inputs[i];
            grads[i] = (a.t().dot(&delta), delta.sum_axis(Axis(0)));
            if i > 0 {
                let mut back = delta.dot(&self.layers[i].w.t());
                // the input to layer i is relu output of layer i-1
                back.zip_mut_with(a, |d, &act| {
                    if act <= 0.0 {
                        *d = 0.0
                    }
                });
                delta = back;
            }
        }
        (loss, grads)
    }
}

fn bce(logits: &Array1<f64>, z: &[u8]) -> f64 {
    logits
        .iter()
        .zip(z)
        .map(|(&s, &zi)| softplus(s) - if zi == 1 { s } else { 0.0 })
        .sum::<f64>()
        / z.len() as f64
}

/// Decaying moments of inactive units otherwise sit in the subnormal range,
/// where arithmetic is orders of magnitude slower.
#[inline]
fn flush_subnormal(v: f64) -> f64 {
    if v.abs() < f64::MIN_POSITIVE {
        0.0
    } else {
        v
    }
}

struct Adam {
    m: Vec<(Array2<f64>, Array1<f64>)>,
    v: Vec<(Array2<f64>, Array1<f64>)>,
    t: i32,
}

impl Adam {
    fn new(net: &Network) -> Self {
        let zeros: Vec<_> = net
            .layers
            .iter()
            .map(|l| (Array2::zeros(l.w.raw_dim()), Array1::zeros(l.b.len())))
            .collect();
        Adam {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    fn step(&mut self, net: &mut Network, grads: &[(Array2<f64>, Array1<f64>)], p: &MlpParams) {
        self.t += 1;
        let c1 = 1.0 - p.beta1.powi(self.t);
        let c2 = 1.0 - p.beta2.powi(self.t);
        let lr = p.learning_rate;
        let update = |param: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = flush_subnormal(p.beta1 * *m + (1.0 - p.beta1) * g);
            *v = flush_subnormal(p.beta2 * *v + (1.0 - p.beta2) * g * g);
            *param -= lr * (*m / c1) / ((*v / c2).sqrt() + p.adam_eps);
        };
        for (i, layer) in net.layers.iter_mut().enumerate() {
            let (gw, gb) = &grads[i];
            let (mw, mb) = &mut self.m[i];
            let (vw, vb) = &mut self.v[i];
            ndarray::Zip::from(&mut layer.w)
                .and(mw)
                .and(vw)
                .and(gw)
                .for_each(|w, m, v, &g| update(w, m, v, g));
            ndarray::Zip::from(&mut layer.b)
                .and(mb)
                .and(vb)
                .and(gb)
                .for_each(|b, m, v, &g| update(b, m, v, g));
        }
    }
}

/// Fitted MLP discriminator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    standardizer: Standardizer,
    network: Network,
}

impl MlpModel {
    /// Untrained network on identity-standardized inputs.
    pub fn initialize(params: &MlpParams, input_width: usize, seed: u64) -> Result<Self> {
        params.validate()?;
        if input_width == 0 {
            return Err(McdError::InvalidArgument("input width must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(MlpModel {
            standardizer: Standardizer::identity(input_width),
            network: Network::init(
                input_width,
                &params.hidden,
                params.zero_init_output,
                &mut rng,
            ),
        })
    }

    pub fn fit(params: &MlpParams, w: ArrayView2<f64>, z: &[u8], seed: u64) -> Result<Self> {
        params.validate()?;
        if w.nrows() != z.len() || z.is_empty() {
            return Err(McdError::ShapeMismatch(format!(
                "{} rows but {} labels",
                w.nrows(),
                z.len()
            )));
        }
        let standardizer = Standardizer::fit(w)?;
        let xs = standardizer.transform(w)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut network = Network::init(
            xs.ncols(),
            &params.hidden,
            params.zero_init_output,
            &mut rng,
        );
        let mut adam = Adam::new(&network);
        let mut order: Vec<usize> = (0..z.len()).collect();
        let mut zb = Vec::with_capacity(params.batch_size);
        for _ in 0..params.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(params.batch_size) {
                let xb = xs.select(Axis(0), batch);
                zb.clear();
                zb.extend(batch.iter().map(|&i| z[i]));
                let (_, grads) = network.backprop(xb.view(), &zb);
                adam.step(&mut network, &grads, params);
            }
        }
        Ok(MlpModel {
            standardizer,
            network,
        })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn standardizer(&self) -> &Standardizer {
        &self.standardizer
    }
}

impl Discriminator for MlpModel {
    fn input_width(&self) -> usize {
        self.network.input_width()
    }

    fn predict_proba(&self, w: ArrayView1<f64>) -> Result<f64> {
        let x = self.standardizer.transform_row(w)?;
        Ok(sigmoid(
            self.network.logits(x.insert_axis(Axis(0)).view())[0],
        ))
    }

    fn predict_proba_batch(&self, w: ArrayView2<f64>) -> Result<Array1<f64>> {
        let x = self.standardizer.transform(w)?;
        Ok(self.network.logits(x.view()).mapv(sigmoid))
    }
}
