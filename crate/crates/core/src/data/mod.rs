//! MNIST ingestion: IDX parsing, class filtering, block-mean pooling,
//! stratified train/test split and client partitioning.

mod idx;
mod partition;
mod preprocess;

pub use idx::{load_idx_pair, parse_idx, read_idx_file, RawDataset};
pub use partition::{partition, prepare, split_and_partition, stratified_subsample, DataConfig, Partition, PartitionMode, PreparedData, Split};
pub use preprocess::{preprocess, ProcessedDataset, POOL_COLS, POOL_ROWS};

use crate::error::{Error, Result};

/// Row-major feature matrix with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    dim: usize,
    n_classes: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
}

impl Samples {
    pub fn new(dim: usize, n_classes: usize) -> Self {
        Samples {
            dim,
            n_classes,
            features: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn push(&mut self, features: &[f64], label: usize) -> Result<()> {
        if features.len() != self.dim {
            return Err(Error::data(format!(
                "sample has {} features, expected {}",
                features.len(),
                self.dim
            )));
        }
        if label >= self.n_classes {
            return Err(Error::data(format!(
                "label {label} outside {} classes",
                self.n_classes
            )));
        }
        self.features.extend_from_slice(features);
        self.labels.push(label);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn features(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Copies the listed rows, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Samples {
        let mut out = Samples::new(self.dim, self.n_classes);
        for &i in rows {
            out.features.extend_from_slice(self.features(i));
            out.labels.push(self.labels[i]);
        }
        out
    }

    /// Concatenates shards in order.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a Samples>) -> Result<Samples> {
        let mut iter = parts.into_iter();
        let first = iter.next().ok_or_else(|| Error::data("nothing to concatenate"))?;
        let mut out = first.clone();
        for p in iter {
            if p.dim != out.dim || p.n_classes != out.n_classes {
                return Err(Error::data("concatenating incompatible sample sets"));
            }
            out.features.extend_from_slice(&p.features);
            out.labels.extend_from_slice(&p.labels);
        }
        Ok(out)
    }

    /// Row indices grouped by class.
    pub fn by_class(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.n_classes];
        for (i, &l) in self.labels.iter().enumerate() {
            groups[l].push(i);
        }
        groups
    }
}
