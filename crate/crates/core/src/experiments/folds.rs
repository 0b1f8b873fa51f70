use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::model::{Dataset, SurgemeClass, NUM_CLASSES};
use crate::seed;

/// Train and test segment indices of one fold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Trial-grouped, class-balanced k-fold split of a dataset's segments.
pub fn stratified_folds(ds: &Dataset, k: usize, seed: u64) -> Result<Vec<Fold>> {
    let labels: Vec<SurgemeClass> = ds.segments.iter().map(|s| s.label).collect();
    let groups: Vec<&str> = ds.segments.iter().map(|s| s.trial_id.as_str()).collect();
    grouped_folds(&labels, &groups, k, seed)
}

/// Assigns whole groups to folds so that every fold's per-class counts stay
/// as even as grouping allows. With one item per group the per-class counts
/// of any two folds differ by at most one.
///
/// Groups are visited largest first (ties in seeded random order); each goes
/// to the fold where it collides least with items of its own classes, then
/// to the smallest fold, then to the lowest fold index.
pub fn grouped_folds(labels: &[SurgemeClass], groups: &[&str], k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::InvalidParams(format!("need at least 2 folds, got {k}")));
    }
    if labels.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut counts = [0usize; NUM_CLASSES];
    for l in labels {
        counts[l.id()] += 1;
    }
    for (c, &n) in counts.iter().enumerate() {
        if n > 0 && n < k {
            return Err(Error::TooFewPerClass {
                class: c,
                count: n,
                folds: k,
            });
        }
    }
    let mut by_group: BTreeMap<&str, (Vec<usize>, [usize; NUM_CLASSES])> = BTreeMap::new();
    for (i, (l, g)) in labels.iter().zip(groups).enumerate() {
        let e = by_group.entry(g).or_insert_with(|| (Vec::new(), [0; NUM_CLASSES]));
        e.0.push(i);
        e.1[l.id()] += 1;
    }
    if by_group.len() < k {
        return Err(Error::TooFewGroups {
            groups: by_group.len(),
            folds: k,
        });
    }
    let mut order: Vec<_> = by_group.into_values().collect();
    order.shuffle(&mut seed::rng(seed));
    // Singletons are visited class by class so round-robin balancing applies.
    order.sort_by_key(|(items, hist)| {
        (
            std::cmp::Reverse(items.len()),
            hist.iter().position(|&h| h > 0).unwrap_or(0),
        )
    });
    let mut fold_counts = vec![[0usize; NUM_CLASSES]; k];
    let mut fold_sizes = vec![0usize; k];
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (items, hist) in order {
        let best = (0..k)
            .min_by_key(|&f| {
                let clash: usize = hist.iter().zip(&fold_counts[f]).map(|(h, c)| h * c).sum();
                (clash, fold_sizes[f], f)
            })
            .expect("k >= 2");
        for c in 0..NUM_CLASSES {
            fold_counts[best][c] += hist[c];
        }
        fold_sizes[best] += items.len();
        members[best].extend(items);
    }
    let n = labels.len();
    Ok(members
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            let mut is_test = vec![false; n];
            test.iter().for_each(|&i| is_test[i] = true);
            let train = (0..n).filter(|&i| !is_test[i]).collect();
            Fold { train, test }
        })
        .collect())
}
