use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::NUM_CLASSES;

/// Dense row-major feature matrix with a class id per row.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledMatrix {
    data: Vec<f64>,
    labels: Vec<usize>,
    dim: usize,
}

impl LabeledMatrix {
    pub fn new(dim: usize) -> Self {
        LabeledMatrix {
            data: Vec::new(),
            labels: Vec::new(),
            dim,
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: impl IntoIterator<Item = (R, usize)>) -> Result<Self> {
        let mut rows = rows.into_iter().peekable();
        let dim = rows.peek().map(|(r, _)| r.as_ref().len()).unwrap_or(0);
        let mut m = LabeledMatrix::new(dim);
        for (row, label) in rows {
            m.push(row.as_ref(), label)?;
        }
        Ok(m)
    }

    pub fn push(&mut self, row: &[f64], label: usize) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: row.len(),
            });
        }
        if label >= NUM_CLASSES {
            return Err(Error::InvalidParams(format!("class id {label} outside 0..{NUM_CLASSES}")));
        }
        self.data.extend_from_slice(row);
        self.labels.push(label);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.len()).map(move |i| self.row(i))
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_counts(&self) -> [usize; NUM_CLASSES] {
        let mut c = [0; NUM_CLASSES];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }

    pub fn classes_present(&self) -> [bool; NUM_CLASSES] {
        self.class_counts().map(|c| c > 0)
    }

    pub(crate) fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Rows ordered by (label, values); the order depends only on row content.
    pub(crate) fn canonical(&self) -> LabeledMatrix {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| {
            self.labels[a].cmp(&self.labels[b]).then_with(|| {
                self.row(a)
                    .iter()
                    .zip(self.row(b))
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| *o != Ordering::Equal)
                    .unwrap_or(Ordering::Equal)
            })
        });
        self.select(&idx)
    }

    /// Drops repeated (row, label) pairs from a canonically ordered matrix.
    pub(crate) fn dedup_canonical(&self) -> LabeledMatrix {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| i == 0 || self.labels[i] != self.labels[i - 1] || self.row(i) != self.row(i - 1))
            .collect();
        self.select(&keep)
    }

    pub fn select(&self, indices: &[usize]) -> LabeledMatrix {
        let mut m = LabeledMatrix::new(self.dim);
        m.data.reserve(indices.len() * self.dim);
        for &i in indices {
            m.data.extend_from_slice(self.row(i));
            m.labels.push(self.labels[i]);
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_checks_dim_and_label() {
        let mut m = LabeledMatrix::new(2);
        m.push(&[1.0, 2.0], 3).unwrap();
        assert!(matches!(m.push(&[1.0], 0), Err(Error::DimMismatch { .. })));
        assert!(m.push(&[1.0, 2.0], 7).is_err());
        assert_eq!(m.len(), 1);
        assert_eq!(m.class_counts()[3], 1);
    }

    #[test]
    fn canonical_order_ignores_input_order() {
        let a = LabeledMatrix::from_rows([(vec![2.0, 1.0], 1), (vec![0.5, 3.0], 0), (vec![1.0, 1.0], 1)]).unwrap();
        let b = a.select(&[2, 0, 1]);
        assert_eq!(a.canonical(), b.canonical());
        assert_eq!(a.canonical().labels(), &[0, 1, 1]);
    }

    #[test]
    fn dedup_keeps_distinct_rows() {
        let a = LabeledMatrix::from_rows([(vec![1.0], 1), (vec![1.0], 0), (vec![1.0], 1), (vec![2.0], 1)]).unwrap();
        let d = a.canonical().dedup_canonical();
        assert_eq!(d.len(), 3);
        assert_eq!(d.labels(), &[0, 1, 1]);
    }
}
