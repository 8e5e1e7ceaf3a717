//! Labeled binary datasets and their mixed binary + continuous extension.
//!
//! Labels are stored 0-based. File formats and the CLI present them 1-based.

use ndarray::{Array2, ArrayView1, Axis};

use crate::error::{Error, Result};

/// `n` instances of `d` binary features with observed (possibly noisy) labels
/// and, for simulated or gold-annotated data, the true labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    k: usize,
    x: Array2<u8>,
    y_observed: Vec<usize>,
    y_true: Option<Vec<usize>>,
}

impl LabeledDataset {
    /// Builds a dataset, checking that every feature is 0/1 and every label is in `0..k`.
    pub fn new(
        x: Array2<u8>,
        y_observed: Vec<usize>,
        y_true: Option<Vec<usize>>,
        k: usize,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("class count must be positive".into()));
        }
        let n = x.nrows();
        if y_observed.len() != n {
            return Err(Error::ShapeMismatch {
                what: "observed labels",
                expected: n,
                found: y_observed.len(),
            });
        }
        for ((row, col), &value) in x.indexed_iter() {
            if value > 1 {
                return Err(Error::InvalidFeature { row, col, value });
            }
        }
        check_labels(&y_observed, k)?;
        if let Some(y_true) = &y_true {
            if y_true.len() != n {
                return Err(Error::ShapeMismatch {
                    what: "true labels",
                    expected: n,
                    found: y_true.len(),
                });
            }
            check_labels(y_true, k)?;
        }
        let x = if x.is_standard_layout() {
            x
        } else {
            x.as_standard_layout().into_owned()
        };
        Ok(Self {
            k,
            x,
            y_observed,
            y_true,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn x(&self) -> &Array2<u8> {
        &self.x
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, u8> {
        self.x.row(i)
    }

    /// Row `i` as a contiguous slice.
    pub fn row_slice(&self, i: usize) -> &[u8] {
        let d = self.d();
        &self.x.as_slice().expect("standard layout")[i * d..(i + 1) * d]
    }

    pub fn y_observed(&self) -> &[usize] {
        &self.y_observed
    }

    pub fn y_true(&self) -> Option<&[usize]> {
        self.y_true.as_deref()
    }

    /// Returns a copy with the observed labels replaced.
    pub fn with_observed(&self, y_observed: Vec<usize>) -> Result<Self> {
        Self::new(self.x.clone(), y_observed, self.y_true.clone(), self.k)
    }

    /// Returns a copy with the true labels replaced (or dropped).
    pub fn with_true(&self, y_true: Option<Vec<usize>>) -> Result<Self> {
        Self::new(self.x.clone(), self.y_observed.clone(), y_true, self.k)
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let x = self.x.select(Axis(0), indices);
        let y_observed = indices.iter().map(|&i| self.y_observed[i]).collect();
        let y_true = self
            .y_true
            .as_ref()
            .map(|y| indices.iter().map(|&i| y[i]).collect());
        Self {
            k: self.k,
            x,
            y_observed,
            y_true,
        }
    }

    /// Applies `perm` (old class -> new class) to both label sequences.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        Self {
            k: self.k,
            x: self.x.clone(),
            y_observed: self.y_observed.iter().map(|&y| perm[y]).collect(),
            y_true: self
                .y_true
                .as_ref()
                .map(|y| y.iter().map(|&v| perm[v]).collect()),
        }
    }
}

fn check_labels(labels: &[usize], k: usize) -> Result<()> {
    match labels.iter().position(|&y| y >= k) {
        Some(row) => Err(Error::InvalidLabel {
            row,
            label: labels[row] + 1,
            k,
        }),
        None => Ok(()),
    }
}

/// A [`LabeledDataset`] together with `d2` real-valued features per instance.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedDataset {
    binary: LabeledDataset,
    z: Array2<f64>,
}

impl MixedDataset {
    /// `z` must have one row per instance and finite entries. `d2 = 0` is allowed
    /// and makes every mixed routine coincide with its binary counterpart.
    pub fn new(binary: LabeledDataset, z: Array2<f64>) -> Result<Self> {
        if z.nrows() != binary.n() {
            return Err(Error::ShapeMismatch {
                what: "continuous feature rows",
                expected: binary.n(),
                found: z.nrows(),
            });
        }
        if let Some(((row, col), _)) = z.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteFeature { row, col });
        }
        Ok(Self { binary, z })
    }

    pub fn binary(&self) -> &LabeledDataset {
        &self.binary
    }

    pub fn z(&self) -> &Array2<f64> {
        &self.z
    }

    pub fn n(&self) -> usize {
        self.binary.n()
    }

    pub fn d1(&self) -> usize {
        self.binary.d()
    }

    pub fn d2(&self) -> usize {
        self.z.ncols()
    }

    pub fn k(&self) -> usize {
        self.binary.k()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            binary: self.binary.subset(indices),
            z: self.z.select(Axis(0), indices),
        }
    }

    /// Population mean and standard deviation of every continuous column;
    /// a constant column reports a standard deviation of 1.
    pub fn column_stats(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n().max(1) as f64;
        self.z
            .columns()
            .into_iter()
            .map(|col| {
                let mean = col.sum() / n;
                let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                (mean, if var > 0.0 { var.sqrt() } else { 1.0 })
            })
            .unzip()
    }

    /// `(z - mean) / sd` column by column.
    pub fn standardize_with(&self, mean: &[f64], sd: &[f64]) -> Result<Self> {
        if mean.len() != self.d2() || sd.len() != self.d2() {
            return Err(Error::ShapeMismatch {
                what: "standardization columns",
                expected: self.d2(),
                found: mean.len().min(sd.len()),
            });
        }
        if sd.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidParams("scales must be positive".into()));
        }
        let mut z = self.z.clone();
        for (j, mut col) in z.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|v| (v - mean[j]) / sd[j]);
        }
        Ok(Self {
            binary: self.binary.clone(),
            z,
        })
    }

    /// Column-wise z-scoring with this dataset's own [`MixedDataset::column_stats`].
    pub fn standardized(&self) -> Self {
        let (mean, sd) = self.column_stats();
        self.standardize_with(&mean, &sd).expect("own statistics fit")
    }
}
