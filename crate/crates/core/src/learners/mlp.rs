//! Fully connected ReLU network with a softmax output, trained by minibatch
//! SGD with momentum on cross-entropy.
//!
//! Batch order is drawn from the seed each epoch, so unlike the forest and
//! the SVM the fitted network depends on training row positions.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::scaler::Scaler;
use super::{check_dim, masked_softmax, Classifier, LabeledMatrix, Proba};
use crate::error::{Error, Result};
use crate::model::NUM_CLASSES;
use crate::seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch: usize,
    /// Standardize features before training.
    pub standardize: bool,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden: vec![64, 64],
            lr: 1e-3,
            momentum: 0.9,
            epochs: 200,
            batch: 32,
            standardize: true,
        }
    }
}

/// Layer sizes plus a flat parameter vector: for each layer the weight
/// matrix (outputs x inputs, row-major) followed by the biases.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    sizes: Vec<usize>,
    params: Vec<f64>,
    /// Output units taking part in the softmax.
    mask: Vec<bool>,
}

impl Network {
    /// He-initialized network; the last layer uses `sqrt(1 / fan_in)`.
    pub fn new(sizes: &[usize], seed: u64) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidParams(format!("invalid layer sizes {sizes:?}")));
        }
        let mut rng = seed::rng(seed);
        let mut params = Vec::new();
        for l in 0..sizes.len() - 1 {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let gain = if l + 2 == sizes.len() { 1.0 } else { 2.0 };
            let normal = Normal::new(0.0, (gain / fan_in as f64).sqrt()).expect("positive sd");
            params.extend((0..fan_in * fan_out).map(|_| normal.sample(&mut rng)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        let outputs = *sizes.last().unwrap();
        Ok(Network {
            sizes: sizes.to_vec(),
            params,
            mask: vec![true; outputs],
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::DimMismatch {
                expected: self.params.len(),
                got: params.len(),
            });
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn set_mask(&mut self, mask: &[bool]) -> Result<()> {
        if mask.len() != self.mask.len() || !mask.iter().any(|m| *m) {
            return Err(Error::InvalidParams("output mask must match outputs and keep one unit".into()));
        }
        self.mask.copy_from_slice(mask);
        Ok(())
    }

    fn layer_offsets(&self) -> Vec<usize> {
        let mut offsets = vec![0];
        for l in 0..self.sizes.len() - 1 {
            let last = *offsets.last().unwrap();
            offsets.push(last + self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1]);
        }
        offsets
    }

    /// Activations of every layer; the last entry holds the raw logits.
    fn forward(&self, x: &[f64], offsets: &[usize]) -> Vec<Vec<f64>> {
        let layers = self.sizes.len() - 1;
        let mut acts = Vec::with_capacity(layers + 1);
        acts.push(x.to_vec());
        for l in 0..layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[offsets[l]..offsets[l] + n_in * n_out];
            let b = &self.params[offsets[l] + n_in * n_out..offsets[l + 1]];
            let input = &acts[l];
            let mut out: Vec<f64> = w
                .chunks(n_in)
                .zip(b)
                .map(|(row, bias)| bias + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            if l + 1 < layers {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(out);
        }
        acts
    }

    fn softmax(&self, logits: &[f64]) -> Vec<f64> {
        let max = logits
            .iter()
            .zip(&self.mask)
            .filter(|(_, m)| **m)
            .map(|(v, _)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits
            .iter()
            .zip(&self.mask)
            .map(|(v, m)| if *m { (v - max).exp() } else { 0.0 })
            .collect();
        let total: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / total).collect()
    }

    /// Output distribution for one input.
    pub fn output(&self, x: &[f64]) -> Vec<f64> {
        let offsets = self.layer_offsets();
        let acts = self.forward(x, &offsets);
        self.softmax(acts.last().unwrap())
    }

    /// Adds the gradient of one sample's cross-entropy to `grad`; returns the loss.
    fn backprop(&self, x: &[f64], label: usize, offsets: &[usize], grad: &mut [f64]) -> f64 {
        let acts = self.forward(x, offsets);
        let layers = self.sizes.len() - 1;
        let p = self.softmax(&acts[layers]);
        let loss = -p[label].max(f64::MIN_POSITIVE).ln();
        let mut delta: Vec<f64> = p.clone();
        delta[label] -= 1.0;
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let input = &acts[l];
            let (gw, gb) = grad[offsets[l]..offsets[l + 1]].split_at_mut(n_in * n_out);
            for (o, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                gb[o] += d;
                for (g, a) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(input) {
                    *g += d * a;
                }
            }
            if l == 0 {
                break;
            }
            let w = &self.params[offsets[l]..offsets[l] + n_in * n_out];
            let mut next = vec![0.0; n_in];
            for (o, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                for (n, wv) in next.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                    *n += d * wv;
                }
            }
            for (n, a) in next.iter_mut().zip(input) {
                if *a <= 0.0 {
                    *n = 0.0;
                }
            }
            delta = next;
        }
        loss
    }

    /// Mean cross-entropy over `data` and its gradient with respect to [`Network::params`].
    pub fn loss_and_gradient(&self, data: &LabeledMatrix) -> Result<(f64, Vec<f64>)> {
        self.batch_gradient(data, &(0..data.len()).collect::<Vec<_>>())
    }

    fn batch_gradient(&self, data: &LabeledMatrix, batch: &[usize]) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::EmptyData);
        }
        check_dim(self.sizes[0], data.row(batch[0]))?;
        let offsets = self.layer_offsets();
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        for &i in batch {
            loss += self.backprop(data.row(i), data.label(i), &offsets, &mut grad);
        }
        let n = batch.len() as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        Ok((loss / n, grad))
    }

    /// Mean cross-entropy over `data`.
    pub fn loss(&self, data: &LabeledMatrix) -> f64 {
        let offsets = self.layer_offsets();
        let total: f64 = (0..data.len())
            .map(|i| {
                let acts = self.forward(data.row(i), &offsets);
                let p = self.softmax(acts.last().unwrap());
                -p[data.label(i)].max(f64::MIN_POSITIVE).ln()
            })
            .sum();
        total / data.len().max(1) as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    pub params: MlpParams,
    pub(crate) dim: usize,
    pub(crate) scaler: Option<Scaler>,
    pub(crate) network: Network,
    /// Training-set loss after each epoch.
    pub loss_history: Vec<f64>,
}

impl MlpModel {
    pub fn fit(data: &LabeledMatrix, params: &MlpParams, seed: u64) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyData);
        }
        if !(params.lr > 0.0 && (0.0..1.0).contains(&params.momentum) && params.batch > 0) {
            return Err(Error::InvalidParams("lr > 0, 0 <= momentum < 1 and batch > 0 required".into()));
        }
        let dim = data.dim();
        let scaler = params.standardize.then(|| Scaler::fit(data));
        let train = match &scaler {
            Some(s) => s.transform_matrix(data),
            None => data.clone(),
        };
        let mut sizes = vec![dim];
        sizes.extend(&params.hidden);
        sizes.push(NUM_CLASSES);
        let mut network = Network::new(&sizes, seed::derive_named(seed, "mlp-init"))?;
        network.set_mask(&data.classes_present())?;

        let mut velocity = vec![0.0; network.params.len()];
        let mut order: Vec<usize> = (0..train.len()).collect();
        let mut rng = seed::rng(seed::derive_named(seed, "mlp-batches"));
        let mut loss_history = Vec::with_capacity(params.epochs);
        for _ in 0..params.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(params.batch) {
                let (_, grad) = network.batch_gradient(&train, batch)?;
                for ((w, v), g) in network.params.iter_mut().zip(&mut velocity).zip(&grad) {
                    *v = params.momentum * *v - params.lr * g;
                    *w += *v;
                }
            }
            let loss = network.loss(&train);
            if !loss.is_finite() || network.params.iter().any(|w| !w.is_finite()) {
                return Err(Error::Diverged(loss));
            }
            loss_history.push(loss);
        }
        Ok(MlpModel {
            params: params.clone(),
            dim,
            scaler,
            network,
            loss_history,
        })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }
}

impl Classifier for MlpModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Proba> {
        check_dim(self.dim, x)?;
        let z = match &self.scaler {
            Some(s) => s.transform(x),
            None => x.to_vec(),
        };
        let offsets = self.network.layer_offsets();
        let acts = self.network.forward(&z, &offsets);
        Ok(masked_softmax(acts.last().unwrap(), &self.network.mask))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn xor() -> LabeledMatrix {
        LabeledMatrix::from_rows([
            (vec![0.0, 0.0], 0),
            (vec![1.0, 1.0], 0),
            (vec![0.0, 1.0], 1),
            (vec![1.0, 0.0], 1),
        ])
        .unwrap()
    }

    #[test]
    fn solves_xor() {
        let data = xor();
        let params = MlpParams {
            epochs: 2000,
            ..Default::default()
        };
        let model = MlpModel::fit(&data, &params, 7).unwrap();
        for i in 0..data.len() {
            assert_eq!(model.predict(data.row(i)).unwrap(), data.label(i));
        }
        let p = model.predict_proba(&[0.0, 0.0]).unwrap();
        assert_eq!(p[2..], [0.0; 5]);
    }

    #[test]
    fn zero_epochs_gives_valid_distribution() {
        let params = MlpParams {
            epochs: 0,
            ..Default::default()
        };
        let a = MlpModel::fit(&xor(), &params, 1).unwrap();
        let b = MlpModel::fit(&xor(), &params, 1).unwrap();
        let c = MlpModel::fit(&xor(), &params, 2).unwrap();
        let pa = a.predict_proba(&[0.3, 0.9]).unwrap();
        assert!((pa.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(pa, b.predict_proba(&[0.3, 0.9]).unwrap());
        assert_ne!(pa, c.predict_proba(&[0.3, 0.9]).unwrap());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = seed::rng(3);
        let mut data = LabeledMatrix::new(4);
        for i in 0..6 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            data.push(&x, i % 3).unwrap();
        }
        let mut net = Network::new(&[4, 5, 4, 3], 11).unwrap();
        let (_, analytic) = net.loss_and_gradient(&data).unwrap();
        let base = net.params().to_vec();
        let eps = 1e-5;
        let mut worst: f64 = 0.0;
        for k in 0..base.len() {
            let mut p = base.clone();
            p[k] = base[k] + eps;
            net.set_params(&p).unwrap();
            let up = net.loss(&data);
            p[k] = base[k] - eps;
            net.set_params(&p).unwrap();
            let down = net.loss(&data);
            let numeric = (up - down) / (2.0 * eps);
            let rel = (analytic[k] - numeric).abs() / analytic[k].abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(rel);
        }
        assert!(worst <= 1e-4, "max relative error {worst}");
    }

    #[test]
    fn loss_decreases_over_windows() {
        let mut rng = seed::rng(5);
        let mut data = LabeledMatrix::new(3);
        for i in 0..90 {
            let c = i % 3;
            let x: Vec<f64> = (0..3).map(|d| if d == c { 2.0 } else { 0.0 } + rng.random_range(-0.5..0.5)).collect();
            data.push(&x, c).unwrap();
        }
        let model = MlpModel::fit(&data, &MlpParams::default(), 0).unwrap();
        let means: Vec<f64> = model.loss_history.chunks(10).map(|w| w.iter().sum::<f64>() / w.len() as f64).collect();
        assert!(means.windows(2).all(|w| w[1] <= w[0]), "{means:?}");
    }

    #[test]
    fn empty_and_wrong_dim() {
        assert!(matches!(
            MlpModel::fit(&LabeledMatrix::new(2), &MlpParams::default(), 0),
            Err(Error::EmptyData)
        ));
        let model = MlpModel::fit(&xor(), &MlpParams { epochs: 1, ..Default::default() }, 0).unwrap();
        assert!(matches!(model.predict(&[1.0]), Err(Error::DimMismatch { .. })));
    }
}
