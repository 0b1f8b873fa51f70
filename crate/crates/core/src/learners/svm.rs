//! One-vs-rest soft-margin SVM trained with SMO.
//!
//! Each binary machine solves the C-SVC dual with second-order working set
//! selection (Fan, Chen and Lin) until the maximal KKT violation drops below
//! `tol`. Class probabilities are a softmax over the machines' decision
//! values: a calibration approximation that preserves the argmax.
//!
//! Training uses the distinct (row, label) pairs in a content-defined order,
//! so neither row order nor repeated rows change the fitted model.

use std::collections::VecDeque;
use std::rc::Rc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scaler::Scaler;
use super::{check_dim, masked_softmax, Classifier, LabeledMatrix, Proba};
use crate::error::{Error, Result};
use crate::model::NUM_CLASSES;

const TAU: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Rbf,
    Linear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmParams {
    pub kernel: Kernel,
    pub c: f64,
    /// RBF width; `None` means `1 / (dim * var(features))` on the training data.
    pub gamma: Option<f64>,
    /// KKT violation tolerance.
    pub tol: f64,
    /// Standardize features before training.
    pub standardize: bool,
    pub max_iter: usize,
    /// Kernel row cache budget per binary machine.
    pub cache_mb: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            kernel: Kernel::Rbf,
            c: 1.0,
            gamma: None,
            tol: 1e-3,
            standardize: true,
            max_iter: 10_000_000,
            cache_mb: 128,
        }
    }
}

impl SvmParams {
    pub fn linear() -> Self {
        SvmParams {
            kernel: Kernel::Linear,
            ..Default::default()
        }
    }
}

fn kernel_value(kernel: Kernel, gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    match kernel {
        Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
        Kernel::Rbf => {
            let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            (-gamma * d2).exp()
        }
    }
}

/// Kernel rows computed on demand with FIFO eviction.
struct KernelRows<'a> {
    data: &'a LabeledMatrix,
    kernel: Kernel,
    gamma: f64,
    rows: Vec<Option<Rc<[f64]>>>,
    order: VecDeque<usize>,
    capacity: usize,
}

impl<'a> KernelRows<'a> {
    fn new(data: &'a LabeledMatrix, kernel: Kernel, gamma: f64, cache_mb: usize) -> Self {
        let n = data.len();
        let per_row = (n * std::mem::size_of::<f64>()).max(1);
        let capacity = ((cache_mb << 20) / per_row).max(2);
        KernelRows {
            data,
            kernel,
            gamma,
            rows: vec![None; n],
            order: VecDeque::new(),
            capacity,
        }
    }

    fn row(&mut self, i: usize) -> Rc<[f64]> {
        if let Some(r) = &self.rows[i] {
            return r.clone();
        }
        let xi = self.data.row(i);
        let r: Rc<[f64]> = (0..self.data.len())
            .map(|j| kernel_value(self.kernel, self.gamma, xi, self.data.row(j)))
            .collect();
        if self.order.len() >= self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.rows[old] = None;
            }
        }
        self.order.push_back(i);
        self.rows[i] = Some(r.clone());
        r
    }
}

struct BinarySolution {
    alpha: Vec<f64>,
    rho: f64,
}

fn solve_binary(data: &LabeledMatrix, y: &[f64], params: &SvmParams, gamma: f64) -> BinarySolution {
    let n = y.len();
    let c = params.c;
    let mut kr = KernelRows::new(data, params.kernel, gamma, params.cache_mb);
    let qd: Vec<f64> = (0..n)
        .map(|i| kernel_value(params.kernel, gamma, data.row(i), data.row(i)))
        .collect();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;

    for _ in 0..params.max_iter {
        // Maximal violating index on the "up" side.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            let in_up = if y[t] > 0.0 { !upper(alpha[t]) } else { !lower(alpha[t]) };
            if in_up && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let Some(i) = i_sel else { break };
        let ki = kr.row(i);

        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut obj_min = f64::INFINITY;
        for t in 0..n {
            let in_low = if y[t] > 0.0 { !lower(alpha[t]) } else { !upper(alpha[t]) };
            if !in_low {
                continue;
            }
            let yg = y[t] * grad[t];
            gmax2 = gmax2.max(yg);
            let grad_diff = gmax + yg;
            if grad_diff > 0.0 {
                let quad = qd[i] + qd[t] - 2.0 * ki[t];
                let quad = if quad > 0.0 { quad } else { TAU };
                let obj = -(grad_diff * grad_diff) / quad;
                if obj <= obj_min {
                    obj_min = obj;
                    j_sel = Some(t);
                }
            }
        }
        let Some(j) = j_sel else { break };
        if gmax + gmax2 < params.tol {
            break;
        }
        let kj = kr.row(j);

        let (old_ai, old_aj) = (alpha[i], alpha[j]);
        let qij = y[i] * y[j] * ki[j];
        if y[i] != y[j] {
            let quad = qd[i] + qd[j] + 2.0 * qij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = qd[i] + qd[j] - 2.0 * qij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (dai, daj) = (alpha[i] - old_ai, alpha[j] - old_aj);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * ki[t] * dai + y[j] * kj[t] * daj);
        }
    }

    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 { sum_free / free as f64 } else { (ub + lb) / 2.0 };
    BinarySolution { alpha, rho }
}

/// One binary machine: `f(x) = sum_i coef_i K(sv_i, x) - rho`.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Machine {
    pub(crate) class: usize,
    pub(crate) rho: f64,
    pub(crate) coef: Vec<f64>,
    /// Support vectors, row-major.
    pub(crate) support: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel {
    pub params: SvmParams,
    pub(crate) dim: usize,
    pub(crate) gamma: f64,
    pub(crate) scaler: Option<Scaler>,
    pub(crate) machines: Vec<Machine>,
}

impl SvmModel {
    /// The seed is accepted for interface uniformity; SMO here is deterministic.
    pub fn fit(data: &LabeledMatrix, params: &SvmParams, _seed: u64) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyData);
        }
        let present = data.classes_present();
        if present.iter().filter(|p| **p).count() < 2 {
            return Err(Error::SingleClass);
        }
        if !data.all_finite() {
            return Err(Error::InvalidParams("features must be finite".into()));
        }
        if !(params.c > 0.0 && params.tol > 0.0) {
            return Err(Error::InvalidParams("C and tol must be positive".into()));
        }
        let canonical = data.canonical().dedup_canonical();
        let scaler = params.standardize.then(|| Scaler::fit(&canonical));
        let train = match &scaler {
            Some(s) => s.transform_matrix(&canonical),
            None => canonical,
        };
        let dim = train.dim();
        let gamma = match params.gamma {
            Some(g) if g > 0.0 => g,
            Some(g) => return Err(Error::InvalidParams(format!("gamma {g} must be positive"))),
            None => {
                let count = (train.len() * dim) as f64;
                let mean = train.rows().flatten().sum::<f64>() / count;
                let var = train.rows().flatten().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
                1.0 / (dim as f64 * if var > 0.0 { var } else { 1.0 })
            }
        };
        let classes: Vec<usize> = (0..NUM_CLASSES).filter(|&c| present[c]).collect();
        let machines = classes
            .par_iter()
            .map(|&class| {
                let y: Vec<f64> = train
                    .labels()
                    .iter()
                    .map(|&l| if l == class { 1.0 } else { -1.0 })
                    .collect();
                let sol = solve_binary(&train, &y, params, gamma);
                let mut coef = Vec::new();
                let mut support = Vec::new();
                for (i, a) in sol.alpha.iter().enumerate() {
                    if *a > 0.0 {
                        coef.push(a * y[i]);
                        support.extend_from_slice(train.row(i));
                    }
                }
                Machine {
                    class,
                    rho: sol.rho,
                    coef,
                    support,
                }
            })
            .collect();
        Ok(SvmModel {
            params: params.clone(),
            dim,
            gamma,
            scaler,
            machines,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Raw one-vs-rest decision values, indexed by class id (absent classes are NaN).
    pub fn decision_values(&self, x: &[f64]) -> Result<[f64; NUM_CLASSES]> {
        check_dim(self.dim, x)?;
        let z = match &self.scaler {
            Some(s) => s.transform(x),
            None => x.to_vec(),
        };
        let mut out = [f64::NAN; NUM_CLASSES];
        for m in &self.machines {
            let f: f64 = m
                .coef
                .iter()
                .zip(m.support.chunks(self.dim))
                .map(|(c, sv)| c * kernel_value(self.params.kernel, self.gamma, sv, &z))
                .sum();
            out[m.class] = f - m.rho;
        }
        Ok(out)
    }
}

impl Classifier for SvmModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Proba> {
        let d = self.decision_values(x)?;
        let mask = d.map(|v| !v.is_nan());
        Ok(masked_softmax(&d, &mask))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::argmax;

    fn separable() -> LabeledMatrix {
        let mut m = LabeledMatrix::new(2);
        for i in 0..20 {
            let t = i as f64 * 0.3;
            m.push(&[t, 2.0 + 0.5 * (i % 3) as f64], 0).unwrap();
            m.push(&[t + 0.2, -2.0 - 0.4 * (i % 4) as f64], 3).unwrap();
        }
        m
    }

    #[test]
    fn linear_kernel_separates_training_set() {
        let m = separable();
        let svm = SvmModel::fit(&m, &SvmParams::linear(), 0).unwrap();
        for i in 0..m.len() {
            assert_eq!(svm.predict(m.row(i)).unwrap(), m.label(i));
        }
        let p = svm.predict_proba(&[0.0, 0.0]).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(p[1], 0.0);
    }

    #[test]
    fn rbf_kernel_fits_rings() {
        let mut m = LabeledMatrix::new(2);
        for k in 0..40 {
            let a = k as f64 * std::f64::consts::TAU / 40.0;
            m.push(&[0.5 * a.cos(), 0.5 * a.sin()], 1).unwrap();
            m.push(&[2.0 * a.cos(), 2.0 * a.sin()], 2).unwrap();
        }
        let svm = SvmModel::fit(
            &m,
            &SvmParams {
                c: 10.0,
                ..Default::default()
            },
            0,
        )
        .unwrap();
        let correct = (0..m.len()).filter(|&i| svm.predict(m.row(i)).unwrap() == m.label(i)).count();
        assert_eq!(correct, m.len());
    }

    #[test]
    fn single_class_and_empty_rejected() {
        let m = LabeledMatrix::from_rows([(vec![0.0], 2), (vec![1.0], 2)]).unwrap();
        assert!(matches!(SvmModel::fit(&m, &SvmParams::default(), 0), Err(Error::SingleClass)));
        assert!(matches!(
            SvmModel::fit(&LabeledMatrix::new(1), &SvmParams::default(), 0),
            Err(Error::EmptyData)
        ));
    }

    #[test]
    fn duplicated_rows_give_identical_predictions() {
        let m = separable();
        let doubled = m.select(&(0..m.len()).chain(0..m.len()).collect::<Vec<_>>());
        let a = SvmModel::fit(&m, &SvmParams::linear(), 0).unwrap();
        let b = SvmModel::fit(&doubled, &SvmParams::linear(), 0).unwrap();
        for gx in -10..=30 {
            for gy in -20..=20 {
                let x = [gx as f64 * 0.25, gy as f64 * 0.25];
                assert_eq!(a.predict(&x).unwrap(), b.predict(&x).unwrap(), "at {x:?}");
            }
        }
    }

    #[test]
    fn row_order_does_not_matter() {
        let m = separable();
        let mut idx: Vec<usize> = (0..m.len()).rev().collect();
        idx.rotate_left(11);
        let a = SvmModel::fit(&m, &SvmParams::default(), 0).unwrap();
        let b = SvmModel::fit(&m.select(&idx), &SvmParams::default(), 0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn small_cache_matches_large_cache() {
        let m = separable();
        let small = SvmParams {
            cache_mb: 0,
            ..Default::default()
        };
        let a = SvmModel::fit(&m, &SvmParams::default(), 0).unwrap();
        let b = SvmModel::fit(&m, &small, 0).unwrap();
        assert_eq!(a.machines, b.machines);
        assert_eq!(argmax(&a.predict_proba(&[1.0, 1.0]).unwrap()), argmax(&b.predict_proba(&[1.0, 1.0]).unwrap()));
    }
}
