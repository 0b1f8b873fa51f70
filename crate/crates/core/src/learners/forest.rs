//! Random forest of Gini-split CART trees on bootstrap resamples.
//!
//! Training rows are first put in canonical (content) order, so the fitted
//! forest depends only on the multiset of rows, the parameters and the seed.
//! Tree `t` draws from its own stream derived from `(seed, t)`, which keeps
//! the result independent of how trees are scheduled across threads.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{argmax, check_dim, Classifier, LabeledMatrix, Proba};
use crate::error::{Error, Result};
use crate::model::NUM_CLASSES;
use crate::seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestParams {
    pub trees: usize,
    /// `None` grows trees until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features tried per split; `None` means `floor(sqrt(dim))`.
    pub features_per_split: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 100,
            max_depth: None,
            min_leaf: 1,
            features_per_split: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Node {
    Leaf(Proba),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Tree {
    pub(crate) nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> &Proba {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(p) => return p,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomForest {
    pub params: ForestParams,
    pub(crate) dim: usize,
    pub(crate) trees: Vec<Tree>,
}

fn gini_weighted(counts: &[usize; NUM_CLASSES], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let sq: f64 = counts.iter().map(|&c| (c as f64) * (c as f64)).sum();
    n - sq / n
}

struct Builder<'a, R: Rng> {
    data: &'a LabeledMatrix,
    params: &'a ForestParams,
    mtry: usize,
    rng: R,
    nodes: Vec<Node>,
}

impl<R: Rng> Builder<'_, R> {
    fn leaf(&mut self, counts: &[usize; NUM_CLASSES], n: usize) -> usize {
        let p = counts.map(|c| c as f64 / n as f64);
        self.nodes.push(Node::Leaf(p));
        self.nodes.len() - 1
    }

    /// Best (weighted child impurity, threshold) for one feature.
    fn best_split_on(&self, samples: &mut [usize], feature: usize) -> Option<(f64, f64)> {
        let data = self.data;
        samples.sort_by(|&a, &b| data.row(a)[feature].total_cmp(&data.row(b)[feature]));
        let n = samples.len();
        let mut right = [0usize; NUM_CLASSES];
        for &s in samples.iter() {
            right[data.label(s)] += 1;
        }
        let mut left = [0usize; NUM_CLASSES];
        let mut best: Option<(f64, f64)> = None;
        let min_leaf = self.params.min_leaf.max(1);
        for k in 0..n - 1 {
            let l = data.label(samples[k]);
            left[l] += 1;
            right[l] -= 1;
            let (a, b) = (data.row(samples[k])[feature], data.row(samples[k + 1])[feature]);
            if a == b || k + 1 < min_leaf || n - k - 1 < min_leaf {
                continue;
            }
            let score = gini_weighted(&left, k + 1) + gini_weighted(&right, n - k - 1);
            if best.is_none_or(|(s, _)| score < s) {
                let mid = a + (b - a) / 2.0;
                let threshold = if mid < b { mid } else { a };
                best = Some((score, threshold));
            }
        }
        best
    }

    fn grow(&mut self, samples: &mut [usize], depth: usize) -> usize {
        let n = samples.len();
        let mut counts = [0usize; NUM_CLASSES];
        for &s in samples.iter() {
            counts[self.data.label(s)] += 1;
        }
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_capped = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_capped || n < 2 * self.params.min_leaf.max(1) {
            return self.leaf(&counts, n);
        }

        let dim = self.data.dim();
        // Features are tried in a random order; the first `mtry` are always
        // evaluated, later ones only until some valid split turns up.
        let order = sample(&mut self.rng, dim, dim).into_vec();
        let mut best: Option<(f64, usize, f64)> = None;
        for (tried, &f) in order.iter().enumerate() {
            if tried >= self.mtry && best.is_some() {
                break;
            }
            if let Some((score, thr)) = self.best_split_on(samples, f) {
                if best.is_none_or(|(s, _, _)| score < s) {
                    best = Some((score, f, thr));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            return self.leaf(&counts, n);
        };

        let data = self.data;
        samples.sort_by(|&a, &b| data.row(a)[feature].total_cmp(&data.row(b)[feature]));
        let split = samples.partition_point(|&s| data.row(s)[feature] <= threshold);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf([0.0; NUM_CLASSES]));
        let (lo, hi) = samples.split_at_mut(split);
        let left = self.grow(lo, depth + 1);
        let right = self.grow(hi, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

fn validate(data: &LabeledMatrix, params: &ForestParams) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    if params.trees == 0 {
        return Err(Error::InvalidParams("forest needs at least one tree".into()));
    }
    if !data.all_finite() {
        return Err(Error::InvalidParams("features must be finite".into()));
    }
    Ok(())
}

impl RandomForest {
    pub fn fit(data: &LabeledMatrix, params: &ForestParams, seed: u64) -> Result<Self> {
        Ok(Self::fit_inner(data, params, seed)?.0)
    }

    /// Fits the forest and also returns its out-of-bag error after each tree
    /// (entry `t` uses trees `0..=t`). Rows never out of bag so far are
    /// skipped; the entry is NaN while no row has an out-of-bag vote.
    pub fn fit_with_oob(data: &LabeledMatrix, params: &ForestParams, seed: u64) -> Result<(Self, Vec<f64>)> {
        let (forest, data, in_bag) = Self::fit_inner(data, params, seed)?;
        let mut votes = vec![[0.0; NUM_CLASSES]; data.len()];
        let mut curve = Vec::with_capacity(forest.trees.len());
        for (tree, bag) in forest.trees.iter().zip(&in_bag) {
            for (i, v) in votes.iter_mut().enumerate() {
                if !bag[i] {
                    for (acc, p) in v.iter_mut().zip(tree.predict(data.row(i))) {
                        *acc += p;
                    }
                }
            }
            let (mut wrong, mut seen) = (0usize, 0usize);
            for (i, v) in votes.iter().enumerate() {
                if v.iter().any(|&x| x > 0.0) {
                    seen += 1;
                    wrong += usize::from(argmax(v) != data.label(i));
                }
            }
            curve.push(if seen == 0 { f64::NAN } else { wrong as f64 / seen as f64 });
        }
        Ok((forest, curve))
    }

    fn fit_inner(data: &LabeledMatrix, params: &ForestParams, seed: u64) -> Result<(Self, LabeledMatrix, Vec<Vec<bool>>)> {
        validate(data, params)?;
        let data = data.canonical();
        let dim = data.dim();
        let mtry = params
            .features_per_split
            .unwrap_or_else(|| (dim as f64).sqrt().floor() as usize)
            .clamp(1, dim.max(1));
        let n = data.len();
        let built: Vec<(Tree, Vec<bool>)> = (0..params.trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = seed::rng(seed::derive(seed, t as u64));
                let mut samples: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                let mut in_bag = vec![false; n];
                for &s in &samples {
                    in_bag[s] = true;
                }
                let mut b = Builder {
                    data: &data,
                    params,
                    mtry,
                    rng,
                    nodes: Vec::new(),
                };
                b.grow(&mut samples, 0);
                (Tree { nodes: b.nodes }, in_bag)
            })
            .collect();
        let (trees, in_bag): (Vec<_>, Vec<_>) = built.into_iter().unzip();
        Ok((
            RandomForest {
                params: params.clone(),
                dim,
                trees,
            },
            data,
            in_bag,
        ))
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }
}

impl Classifier for RandomForest {
    fn dim(&self) -> usize {
        self.dim
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Proba> {
        check_dim(self.dim, x)?;
        let mut p = [0.0; NUM_CLASSES];
        for t in &self.trees {
            for (acc, v) in p.iter_mut().zip(t.predict(x)) {
                *acc += v;
            }
        }
        let total: f64 = p.iter().sum();
        for v in &mut p {
            *v /= total;
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use rand_distr::{Distribution, Normal};

    use super::*;

    pub(crate) fn blobs(seed: u64) -> LabeledMatrix {
        let mut rng = seed::rng(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut m = LabeledMatrix::new(2);
        for i in 0..200 {
            let label = i % 2;
            let cx = if label == 0 { 0.0 } else { 4.0 };
            m.push(&[cx + noise.sample(&mut rng), noise.sample(&mut rng)], label).unwrap();
        }
        m
    }

    #[test]
    fn single_class_predicts_that_class() {
        let m = LabeledMatrix::from_rows([(vec![0.0, 1.0], 4), (vec![2.0, 3.0], 4)]).unwrap();
        let f = RandomForest::fit(&m, &ForestParams::default(), 1).unwrap();
        for x in [[0.0, 0.0], [100.0, -5.0]] {
            let p = f.predict_proba(&x).unwrap();
            assert_eq!(p[4], 1.0);
            assert_eq!(f.predict(&x).unwrap(), 4);
        }
    }

    #[test]
    fn separated_blobs_fit_perfectly() {
        let m = blobs(5);
        let f = RandomForest::fit(&m, &ForestParams::default(), 3).unwrap();
        let correct = (0..m.len()).filter(|&i| f.predict(m.row(i)).unwrap() == m.label(i)).count();
        assert_eq!(correct, m.len());
    }

    #[test]
    fn same_seed_same_forest() {
        let m = blobs(6);
        let a = RandomForest::fit(&m, &ForestParams::default(), 9).unwrap();
        let b = RandomForest::fit(&m, &ForestParams::default(), 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn row_order_does_not_matter() {
        let m = blobs(7);
        let mut idx: Vec<usize> = (0..m.len()).collect();
        idx.reverse();
        idx.rotate_left(37);
        let a = RandomForest::fit(&m, &ForestParams::default(), 2).unwrap();
        let b = RandomForest::fit(&m.select(&idx), &ForestParams::default(), 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn depth_limit_and_errors() {
        let m = blobs(8);
        let stump = ForestParams {
            trees: 3,
            max_depth: Some(1),
            ..Default::default()
        };
        let f = RandomForest::fit(&m, &stump, 0).unwrap();
        assert!(f.trees.iter().all(|t| t.nodes.len() <= 3));
        assert!(matches!(
            RandomForest::fit(&LabeledMatrix::new(2), &ForestParams::default(), 0),
            Err(Error::EmptyData)
        ));
        assert!(matches!(f.predict(&[1.0]), Err(Error::DimMismatch { .. })));
    }

    #[test]
    fn min_leaf_is_respected() {
        let m = blobs(10);
        let params = ForestParams {
            trees: 5,
            min_leaf: 20,
            ..Default::default()
        };
        let f = RandomForest::fit(&m, &params, 0).unwrap();
        // Every leaf covers at least 20 bootstrap rows, so probabilities are multiples of 1/n >= 20.
        for t in &f.trees {
            for node in &t.nodes {
                if let Node::Leaf(p) = node {
                    let nonzero: Vec<f64> = p.iter().copied().filter(|v| *v > 0.0).collect();
                    assert!(nonzero.iter().all(|v| *v >= 1.0 / 400.0));
                }
            }
        }
    }
}
