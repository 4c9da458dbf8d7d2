//! Two end-to-end pipelines on bundled synthetic data: one epoch of
//! logistic-regression training and a two-layer network's inference. Each
//! comes with a cleartext fixed-point oracle that rounds at the same points
//! as the shared computation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::engine::Engine;
use crate::error::Result;
use crate::netsim::NetStats;
use crate::ring::RingConfig;
use crate::tensor::{ShareTensor, Tensor};

/// Seed of the bundled datasets; independent of the engine seed.
pub const DATA_SEED: u64 = 0x5eed_da7a;

pub const LR_SAMPLES: usize = 200;
pub const LR_FEATURES: usize = 8;
pub const LR_BATCH: usize = 20;
pub const LR_RATE: f64 = 0.5;

pub const NN_SAMPLES: usize = 100;
pub const NN_LAYERS: [usize; 3] = [8, 16, 4];

/// Separable-with-noise binary labels over features in `[-1, 1]`.
pub fn lr_dataset() -> (Tensor, Tensor) {
    let mut rng = ChaCha8Rng::seed_from_u64(DATA_SEED);
    let w: Vec<f64> = (0..LR_FEATURES).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let mut x = Vec::with_capacity(LR_SAMPLES * LR_FEATURES);
    let mut y = Vec::with_capacity(LR_SAMPLES);
    for _ in 0..LR_SAMPLES {
        let row: Vec<f64> = (0..LR_FEATURES).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let score: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + rng.gen_range(-0.2..0.2);
        y.push(if score > 0.0 { 1.0 } else { 0.0 });
        x.extend(row);
    }
    (Tensor::new([LR_SAMPLES, LR_FEATURES], x).expect("sized"), Tensor::new([LR_SAMPLES], y).expect("sized"))
}

/// Inputs and a random model: `(x, w1, b1, w2, b2)`.
pub fn nn_dataset() -> [Tensor; 5] {
    let mut rng = ChaCha8Rng::seed_from_u64(DATA_SEED + 1);
    let [i, h, o] = NN_LAYERS;
    let mut t = |dims: &[usize], r: f64| {
        let n = dims.iter().product();
        Tensor::new(dims, (0..n).map(|_| rng.gen_range(-r..r)).collect()).expect("sized")
    };
    [t(&[NN_SAMPLES, i], 1.0), t(&[i, h], 0.5), t(&[h], 0.1), t(&[h, o], 0.5), t(&[o], 0.1)]
}

#[derive(Clone, Debug, Serialize)]
pub struct LrReport {
    pub weights: Vec<f64>,
    pub oracle: Vec<f64>,
    pub max_abs_diff: f64,
    /// Fraction of training rows the learned weights classify correctly.
    pub train_accuracy: f64,
    #[serde(skip)]
    pub stats: NetStats,
}

#[derive(Clone, Debug, Serialize)]
pub struct NnReport {
    pub predictions: Vec<usize>,
    pub oracle: Vec<usize>,
    pub agreement: f64,
    #[serde(skip)]
    pub stats: NetStats,
}

/// One epoch of minibatch SGD with the piecewise logistic, data from client
/// 0. Stats cover the training steps only.
pub fn lr_demo(e: &mut Engine) -> Result<LrReport> {
    let (x, y) = lr_dataset();
    let sx = ShareTensor::input(e, 0, &x)?;
    let sy = ShareTensor::input(e, 0, &y)?;
    let before = e.stats();
    let mut w = ShareTensor::zeros(e, [LR_FEATURES])?;
    let scale = LR_RATE / LR_BATCH as f64;
    for start in (0..LR_SAMPLES).step_by(LR_BATCH) {
        let rows: Vec<usize> = (start..start + LR_BATCH).collect();
        let xb = sx.take(&rows, 0)?;
        let yb = sy.take(&rows, 0)?;
        let z = xb.dot(e, &w)?;
        let p = z.map(e, |e, v| e.logistic_piecewise(v))?;
        let g = xb.transpose(None)?.dot(e, &p.sub(&yb)?)?;
        w = w.sub(&g.mul_scalar(e, scale)?)?;
    }
    let stats = NetStats::diff(&before, &e.stats());
    let weights = w.reveal(e)?.data;
    let oracle = lr_oracle(e.ring(), &x, &y)?;
    let max_abs_diff = weights.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let correct = (0..LR_SAMPLES)
        .filter(|&i| {
            let s: f64 = (0..LR_FEATURES).map(|j| x.data[i * LR_FEATURES + j] * weights[j]).sum();
            (s > 0.0) == (y.data[i] > 0.5)
        })
        .count();
    Ok(LrReport { weights, oracle, max_abs_diff, train_accuracy: correct as f64 / LR_SAMPLES as f64, stats })
}

/// `relu(x w1 + b1) w2 + b2` with inputs from client 0 and the model from
/// client 1; the arg max per row is revealed to client 0.
pub fn nn_demo(e: &mut Engine) -> Result<NnReport> {
    let [x, w1, b1, w2, b2] = nn_dataset();
    let sx = ShareTensor::input(e, 0, &x)?;
    let model = [&w1, &b1, &w2, &b2].map(|t| ShareTensor::input(e, 1, t));
    let [sw1, sb1, sw2, sb2] = model;
    let (sw1, sb1, sw2, sb2) = (sw1?, sb1?, sw2?, sb2?);
    let before = e.stats();
    let h = sx.dot(e, &sw1)?.add(&sb1)?;
    let h = h.map(e, |e, v| e.relu(v))?;
    let o = h.dot(e, &sw2)?.add(&sb2)?;
    let idx = o.argmax(e, Some(1))?;
    let stats = NetStats::diff(&before, &e.stats());
    let predictions: Vec<usize> = idx.reveal(e)?.data.iter().map(|v| v.round() as usize).collect();
    let oracle = nn_oracle(e.ring(), &x, &w1, &b1, &w2, &b2)?;
    let same = predictions.iter().zip(&oracle).filter(|(a, b)| a == b).count();
    Ok(NnReport { agreement: same as f64 / NN_SAMPLES as f64, predictions, oracle, stats })
}

/// Signed fixed-point integers with round-to-nearest rescaling.
struct Fixed {
    d: u32,
}

impl Fixed {
    fn encode(&self, cfg: RingConfig, t: &Tensor) -> Result<Vec<i128>> {
        t.data.iter().map(|v| Ok(cfg.ring().to_signed(cfg.encode_raw(*v)?))).collect()
    }

    fn rescale(&self, v: i128) -> i128 {
        (v + (1 << (self.d - 1))) >> self.d
    }

    /// `a (m x k) . b (k x p)`, rescaled once per output.
    fn matmul(&self, a: &[i128], b: &[i128], m: usize, k: usize, p: usize) -> Vec<i128> {
        let mut out = vec![0i128; m * p];
        for i in 0..m {
            for j in 0..p {
                let s: i128 = (0..k).map(|l| a[i * k + l] * b[l * p + j]).sum();
                out[i * p + j] = self.rescale(s);
            }
        }
        out
    }

    fn decode(&self, v: i128) -> f64 {
        v as f64 / 2f64.powi(self.d as i32)
    }
}

fn lr_oracle(cfg: RingConfig, x: &Tensor, y: &Tensor) -> Result<Vec<f64>> {
    let f = Fixed { d: cfg.d };
    let (xs, ys) = (f.encode(cfg, x)?, f.encode(cfg, y)?);
    let one = 1i128 << cfg.d;
    let scale = cfg.ring().to_signed(cfg.encode_raw(LR_RATE / LR_BATCH as f64)?);
    let mut w = vec![0i128; LR_FEATURES];
    for start in (0..LR_SAMPLES).step_by(LR_BATCH) {
        let xb = &xs[start * LR_FEATURES..(start + LR_BATCH) * LR_FEATURES];
        let z = f.matmul(xb, &w, LR_BATCH, LR_FEATURES, 1);
        let r: Vec<i128> =
            z.iter().zip(&ys[start..start + LR_BATCH]).map(|(z, y)| (z + one / 2).clamp(0, one) - y).collect();
        let mut xt = vec![0i128; LR_BATCH * LR_FEATURES];
        for i in 0..LR_BATCH {
            for j in 0..LR_FEATURES {
                xt[j * LR_BATCH + i] = xb[i * LR_FEATURES + j];
            }
        }
        let g = f.matmul(&xt, &r, LR_FEATURES, LR_BATCH, 1);
        for (w, g) in w.iter_mut().zip(g) {
            *w -= f.rescale(g * scale);
        }
    }
    Ok(w.into_iter().map(|v| f.decode(v)).collect())
}

fn nn_oracle(cfg: RingConfig, x: &Tensor, w1: &Tensor, b1: &Tensor, w2: &Tensor, b2: &Tensor) -> Result<Vec<usize>> {
    let f = Fixed { d: cfg.d };
    let [i, h, o] = NN_LAYERS;
    let hid = f.matmul(&f.encode(cfg, x)?, &f.encode(cfg, w1)?, NN_SAMPLES, i, h);
    let b1 = f.encode(cfg, b1)?;
    let hid: Vec<i128> = hid.iter().enumerate().map(|(k, v)| (v + b1[k % h]).max(0)).collect();
    let out = f.matmul(&hid, &f.encode(cfg, w2)?, NN_SAMPLES, h, o);
    let b2 = f.encode(cfg, b2)?;
    Ok((0..NN_SAMPLES)
        .map(|r| {
            let row: Vec<i128> = (0..o).map(|c| out[r * o + c] + b2[c]).collect();
            // first maximum wins
            (0..o).fold(0, |best, c| if row[c] > row[best] { c } else { best })
        })
        .collect())
}
