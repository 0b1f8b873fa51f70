use serde::{Deserialize, Serialize};

use super::LabeledMatrix;

/// Per-feature standardization fitted on training rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Scaler {
    pub fn fit(data: &LabeledMatrix) -> Self {
        let n = data.len().max(1) as f64;
        let dim = data.dim();
        let mut mean = vec![0.0; dim];
        for row in data.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for row in data.rows() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Scaler { mean, scale }
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    pub fn transform_matrix(&self, data: &LabeledMatrix) -> LabeledMatrix {
        let mut out = LabeledMatrix::new(data.dim());
        for i in 0..data.len() {
            out.push(&self.transform(data.row(i)), data.label(i))
                .expect("dimension preserved by transform");
        }
        out
    }
}
