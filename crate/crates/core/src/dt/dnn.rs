//! Feed-forward regression baseline for the twin's channel estimator.

use crate::error::{Error, Result};
use crate::rl::mlp::{Adam, Mlp};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DnnRegressor {
    pub net: Mlp,
    x_mean: Vec<f64>,
    x_std: Vec<f64>,
    y_mean: f64,
    y_std: f64,
}

const BATCH: usize = 32;

fn standardize(cols: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = cols.clone().count().max(1) as f64;
    let m = cols.clone().sum::<f64>() / n;
    let v = cols.map(|c| (c - m) * (c - m)).sum::<f64>() / n;
    (m, if v > 1e-24 { v.sqrt() } else { 1.0 })
}

impl DnnRegressor {
    /// Two tanh hidden layers trained with Adam on mean squared error over
    /// standardised inputs and targets. Runs at least `epochs` passes and at
    /// least `min_steps` minibatch updates, whichever is longer.
    pub fn fit<R: Rng + ?Sized>(x: &[Vec<f64>], y: &[f64], hidden: usize, epochs: usize, min_steps: usize, lr: f64, rng: &mut R) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::InsufficientData { needed: 1, have: x.len().min(y.len()) });
        }
        let dim = x[0].len();
        let (mut x_mean, mut x_std) = (Vec::with_capacity(dim), Vec::with_capacity(dim));
        for d in 0..dim {
            let (m, s) = standardize(x.iter().map(|r| r[d]));
            x_mean.push(m);
            x_std.push(s);
        }
        let (y_mean, y_std) = standardize(y.iter().copied());
        let xs: Vec<Vec<f64>> = x.iter().map(|r| r.iter().enumerate().map(|(d, v)| (v - x_mean[d]) / x_std[d]).collect()).collect();
        let ys: Vec<f64> = y.iter().map(|v| (v - y_mean) / y_std).collect();
        let mut net = Mlp::new(&[dim, hidden, hidden, 1], 0.1, rng);
        let mut opt = Adam::new(net.num_params(), lr);
        let mut idx: Vec<usize> = (0..xs.len()).collect();
        let mut grad = vec![0.0; net.num_params()];
        let per_epoch = xs.len().div_ceil(BATCH);
        let epochs = epochs.max(min_steps.div_ceil(per_epoch));
        for _ in 0..epochs {
            idx.shuffle(rng);
            let mut epoch_loss = 0.0;
            for chunk in idx.chunks(BATCH) {
                grad.iter_mut().for_each(|g| *g = 0.0);
                let inv = 1.0 / chunk.len() as f64;
                for &i in chunk {
                    let tr = net.forward_trace(&xs[i]);
                    let e = tr.output()[0] - ys[i];
                    epoch_loss += e * e;
                    net.backward(&tr, &[2.0 * inv * e], &mut grad);
                }
                opt.step(&mut net.params, &grad);
            }
            if !epoch_loss.is_finite() || !net.is_finite() {
                return Err(Error::Diverged("regressor loss is not finite".into()));
            }
        }
        Ok(DnnRegressor { net, x_mean, x_std, y_mean, y_std })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let xs: Vec<f64> = x.iter().enumerate().map(|(d, v)| (v - self.x_mean[d]) / self.x_std[d]).collect();
        self.net.forward(&xs)[0] * self.y_std + self.y_mean
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64, (i * i) as f64 % 7.0]).collect();
        let y = vec![4.2; 50];
        let d = DnnRegressor::fit(&x, &y, 8, 100, 0, 1e-2, &mut rng).unwrap();
        for r in &x {
            assert!((d.predict(r) - 4.2).abs() < 0.042);
        }
    }

    #[test]
    fn smooth_field_training_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<Vec<f64>> = (0..500).map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]).collect();
        let f = |p: &[f64]| 10.0 + (3.0 * p[0]).sin() + p[1] * p[1];
        let y: Vec<f64> = x.iter().map(|p| f(p)).collect();
        let d = DnnRegressor::fit(&x, &y, 32, 200, 0, 3e-3, &mut rng).unwrap();
        let err: f64 = x.iter().zip(&y).map(|(p, t)| ((d.predict(p) - t) / t).abs()).sum::<f64>() / 500.0;
        assert!(err < 0.05, "relative error {err}");
    }

    #[test]
    fn empty_data_is_an_error() {
        assert!(DnnRegressor::fit(&[], &[], 4, 1, 0, 1e-3, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
