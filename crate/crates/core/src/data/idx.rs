use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use crate::error::{Error, Result};

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

/// Images and labels exactly as stored in an IDX pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub rows: usize,
    pub cols: usize,
    /// `n * rows * cols` intensities, image-major.
    pub pixels: Vec<u8>,
    pub labels: Vec<u8>,
}

impl RawDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let size = self.rows * self.cols;
        &self.pixels[i * size..(i + 1) * size]
    }
}

fn ingest_err(offset: usize, reason: impl Into<String>) -> Error {
    Error::Ingestion {
        offset,
        reason: reason.into(),
    }
}

fn be_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| ingest_err(offset, format!("truncated while reading {what}")))
}

fn check_magic(bytes: &[u8], expected: u32, what: &str) -> Result<()> {
    let magic = be_u32(bytes, 0, "magic number")?;
    if magic != expected {
        return Err(ingest_err(
            0,
            format!("{what} file has magic {magic:#010x}, expected {expected:#010x}"),
        ));
    }
    Ok(())
}

/// Parses an image file (magic `0x00000803`) and a label file (`0x00000801`).
pub fn parse_idx(images: &[u8], labels: &[u8]) -> Result<RawDataset> {
    check_magic(images, IMAGE_MAGIC, "image")?;
    let n = be_u32(images, 4, "image count")? as usize;
    let rows = be_u32(images, 8, "row count")? as usize;
    let cols = be_u32(images, 12, "column count")? as usize;
    let body = n
        .checked_mul(rows)
        .and_then(|x| x.checked_mul(cols))
        .ok_or_else(|| ingest_err(4, "image dimensions overflow"))?;
    if images.len() < 16 + body {
        return Err(ingest_err(
            images.len(),
            format!("image payload truncated: expected {} bytes", 16 + body),
        ));
    }
    if images.len() > 16 + body {
        return Err(ingest_err(16 + body, "trailing bytes after image payload"));
    }

    check_magic(labels, LABEL_MAGIC, "label")?;
    let n_labels = be_u32(labels, 4, "label count")? as usize;
    if n_labels != n {
        return Err(ingest_err(4, format!("{n_labels} labels for {n} images")));
    }
    if labels.len() < 8 + n {
        return Err(ingest_err(
            labels.len(),
            format!("label payload truncated: expected {} bytes", 8 + n),
        ));
    }
    if labels.len() > 8 + n {
        return Err(ingest_err(8 + n, "trailing bytes after label payload"));
    }
    let label_bytes = labels[8..].to_vec();
    if let Some(pos) = label_bytes.iter().position(|&l| l > 9) {
        return Err(ingest_err(8 + pos, format!("label {} is not a digit", label_bytes[pos])));
    }
    Ok(RawDataset {
        rows,
        cols,
        pixels: images[16..].to_vec(),
        labels: label_bytes,
    })
}

/// Reads a raw or gzip-compressed IDX file. `name.gz` is tried when `name`
/// is absent.
pub fn read_idx_file(path: &Path) -> Result<Vec<u8>> {
    let actual = if path.exists() {
        path.to_path_buf()
    } else {
        let mut gz = path.as_os_str().to_owned();
        gz.push(".gz");
        gz.into()
    };
    let bytes = fs::read(&actual).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", actual.display())))
    })?;
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(bytes.as_slice()).read_to_end(&mut out)?;
        Ok(out)
    } else {
        Ok(bytes)
    }
}

/// Loads `{prefix}-images-idx3-ubyte` and `{prefix}-labels-idx1-ubyte`
/// (optionally gzipped) from `dir`; `prefix` is `train` or `t10k`.
pub fn load_idx_pair(dir: &Path, prefix: &str) -> Result<RawDataset> {
    let images = read_idx_file(&dir.join(format!("{prefix}-images-idx3-ubyte")))?;
    let labels = read_idx_file(&dir.join(format!("{prefix}-labels-idx1-ubyte")))?;
    parse_idx(&images, &labels)
}
