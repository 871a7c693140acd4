use super::{RawDataset, Samples};
use crate::error::{Error, Result};

/// Pooling grid: 4 rows by 2 columns of block means, each block 7 x 14 pixels.
pub const POOL_ROWS: usize = 4;
pub const POOL_COLS: usize = 2;

/// Pooled features with labels remapped onto `0..class_set.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedDataset {
    pub samples: Samples,
    /// Retained digits; digit `class_set[k]` becomes label `k`.
    pub class_set: Vec<u8>,
}

/// Filters to `class_set` and average-pools each image into a
/// `POOL_ROWS x POOL_COLS` grid of block means scaled by `1/255`.
///
/// Feature `r * POOL_COLS + c` is the block in grid row `r`, column `c`.
pub fn preprocess(raw: &RawDataset, class_set: &[u8]) -> Result<ProcessedDataset> {
    if class_set.is_empty() {
        return Err(Error::data("empty class set"));
    }
    let mut seen = [false; 10];
    for &d in class_set {
        if d > 9 || std::mem::replace(&mut seen[d as usize], true) {
            return Err(Error::data(format!("invalid or repeated class {d} in {class_set:?}")));
        }
    }
    if !raw.rows.is_multiple_of(POOL_ROWS) || !raw.cols.is_multiple_of(POOL_COLS) {
        return Err(Error::data(format!(
            "{}x{} images do not tile into a {POOL_ROWS}x{POOL_COLS} grid",
            raw.rows, raw.cols
        )));
    }
    let (bh, bw) = (raw.rows / POOL_ROWS, raw.cols / POOL_COLS);
    let denom = 255.0 * (bh * bw) as f64;
    let mut samples = Samples::new(POOL_ROWS * POOL_COLS, class_set.len());
    let mut features = [0.0; POOL_ROWS * POOL_COLS];
    for i in 0..raw.len() {
        let Some(label) = class_set.iter().position(|&d| d == raw.labels[i]) else {
            continue;
        };
        let img = raw.image(i);
        for (k, f) in features.iter_mut().enumerate() {
            let (r0, c0) = ((k / POOL_COLS) * bh, (k % POOL_COLS) * bw);
            let sum: u32 = (r0..r0 + bh)
                .flat_map(|r| img[r * raw.cols + c0..r * raw.cols + c0 + bw].iter())
                .map(|&p| p as u32)
                .sum();
            *f = sum as f64 / denom;
        }
        samples.push(&features, label)?;
    }
    if samples.is_empty() {
        return Err(Error::data(format!("no samples with classes {class_set:?}")));
    }
    Ok(ProcessedDataset {
        samples,
        class_set: class_set.to_vec(),
    })
}
