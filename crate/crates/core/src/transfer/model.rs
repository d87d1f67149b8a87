//! A one-hidden-layer network split into a feature block and a head.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sparse input row: `(column, value)` pairs with nonzero values.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub x: Vec<(u32, f64)>,
    pub y: bool,
}

impl Sample {
    pub fn from_dense(x: &[f64], y: bool) -> Self {
        Sample {
            x: x.iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i as u32, *v))
                .collect(),
            y,
        }
    }
}

/// `h = relu(W x + b)`. `weights` is stored input-major: column `j` of `W`
/// is `weights[j * hidden .. (j + 1) * hidden]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureBlock {
    pub inputs: usize,
    pub hidden: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl FeatureBlock {
    /// Uniform Glorot initialization.
    pub fn random(inputs: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let a = (6.0 / (inputs + hidden) as f64).sqrt();
        FeatureBlock {
            inputs,
            hidden,
            weights: (0..inputs * hidden).map(|_| rng.random_range(-a..a)).collect(),
            bias: vec![0.01; hidden],
        }
    }

    /// `W = I`, `b = 0`: passes nonnegative inputs through unchanged.
    pub fn identity(inputs: usize) -> Self {
        let mut weights = vec![0.0; inputs * inputs];
        for j in 0..inputs {
            weights[j * inputs + j] = 1.0;
        }
        FeatureBlock {
            inputs,
            hidden: inputs,
            weights,
            bias: vec![0.0; inputs],
        }
    }

    fn pre_activation(&self, x: &[(u32, f64)], out: &mut [f64]) {
        out.copy_from_slice(&self.bias);
        for &(j, v) in x {
            let col = &self.weights[j as usize * self.hidden..(j as usize + 1) * self.hidden];
            for (o, w) in out.iter_mut().zip(col) {
                *o += v * w;
            }
        }
    }

    pub fn forward(&self, x: &[(u32, f64)]) -> Vec<f64> {
        let mut h = vec![0.0; self.hidden];
        self.pre_activation(x, &mut h);
        h.iter_mut().for_each(|v| *v = v.max(0.0));
        h
    }
}

/// `p = sigmoid(w · h + b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadBlock {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl HeadBlock {
    pub fn zeros(hidden: usize) -> Self {
        HeadBlock {
            weights: vec![0.0; hidden],
            bias: 0.0,
        }
    }

    fn logit(&self, h: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(h).map(|(w, v)| w * v).sum::<f64>()
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainMeta {
    /// Domain the parameters were last fitted on.
    pub domain: String,
    /// Domain the feature block was first trained on.
    pub origin: String,
    pub seed: u64,
    pub epochs: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictorModel {
    pub feature: FeatureBlock,
    pub head: HeadBlock,
    pub meta: TrainMeta,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Sgd {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl PredictorModel {
    pub fn score(&self, x: &[(u32, f64)]) -> f64 {
        sigmoid(self.head.logit(&self.feature.forward(x)))
    }

    pub fn scores(&self, data: &[Sample]) -> Vec<f64> {
        data.iter().map(|s| self.score(&s.x)).collect()
    }

    /// Mini-batch gradient descent on mean binary cross-entropy. With
    /// `train_features` false the feature block is left bit-for-bit intact.
    pub(crate) fn fit(&mut self, data: &[Sample], sgd: Sgd, train_features: bool, rng: &mut ChaCha8Rng) {
        let hidden = self.feature.hidden;
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut pre = vec![0.0; hidden];
        let mut h = vec![0.0; hidden];
        let mut g_head = vec![0.0; hidden];
        let mut g_fbias = vec![0.0; hidden];
        // Per-sample hidden deltas, applied after the batch so every sample in
        // a batch sees the same parameters.
        let mut deltas: Vec<(usize, Vec<f64>)> = Vec::new();
        for _ in 0..sgd.epochs {
            order.shuffle(rng);
            for batch in order.chunks(sgd.batch_size.max(1)) {
                g_head.iter_mut().for_each(|v| *v = 0.0);
                g_fbias.iter_mut().for_each(|v| *v = 0.0);
                let mut g_bias = 0.0;
                deltas.clear();
                for &i in batch {
                    let s = &data[i];
                    self.feature.pre_activation(&s.x, &mut pre);
                    for (hv, p) in h.iter_mut().zip(&pre) {
                        *hv = p.max(0.0);
                    }
                    let dz = sigmoid(self.head.logit(&h)) - if s.y { 1.0 } else { 0.0 };
                    g_bias += dz;
                    for (g, hv) in g_head.iter_mut().zip(&h) {
                        *g += dz * hv;
                    }
                    if train_features {
                        let dh: Vec<f64> = (0..hidden)
                            .map(|k| if pre[k] > 0.0 { dz * self.head.weights[k] } else { 0.0 })
                            .collect();
                        for (g, d) in g_fbias.iter_mut().zip(&dh) {
                            *g += d;
                        }
                        deltas.push((i, dh));
                    }
                }
                let step = sgd.learning_rate / batch.len() as f64;
                if train_features {
                    for (i, dh) in &deltas {
                        for &(j, v) in &data[*i].x {
                            let col = &mut self.feature.weights[j as usize * hidden..(j as usize + 1) * hidden];
                            for (w, d) in col.iter_mut().zip(dh) {
                                *w -= step * d * v;
                            }
                        }
                    }
                    for (b, g) in self.feature.bias.iter_mut().zip(&g_fbias) {
                        *b -= step * g;
                    }
                }
                for (w, g) in self.head.weights.iter_mut().zip(&g_head) {
                    *w -= step * g;
                }
                self.head.bias -= step * g_bias;
            }
        }
    }
}

/// Deterministic per-job generator: the same `(seed, tag)` always yields the
/// same stream regardless of scheduling.
pub(crate) fn job_rng(seed: u64, tag: &str) -> ChaCha8Rng {
    // FNV-1a over the tag, folded into the seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(seed ^ h)
}
