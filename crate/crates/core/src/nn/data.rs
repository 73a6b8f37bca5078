//! MNIST IDX ingestion and synthetic Gaussian blobs.

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::RngStream;

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;
const MNIST_CLASSES: usize = 10;

/// Inputs as rows of `x`, one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPart {
    pub x: Array2<f64>,
    pub y: Vec<usize>,
}

impl DataPart {
    pub fn new(x: Array2<f64>, y: Vec<usize>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Shape {
                expected: x.nrows(),
                actual: y.len(),
            });
        }
        Ok(DataPart { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// Rows at `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> DataPart {
        DataPart {
            x: self.x.select(ndarray::Axis(0), idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
        }
    }

    /// Random subset of `n` rows (all rows if `n >= len`).
    pub fn subsample(&self, n: usize, stream: &RngStream) -> DataPart {
        if n >= self.len() {
            return self.clone();
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut stream.rng());
        idx.truncate(n);
        idx.sort_unstable();
        self.select(&idx)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: DataPart,
    pub test: DataPart,
    pub n_classes: usize,
}

impl DatasetSplit {
    pub fn new(train: DataPart, test: DataPart, n_classes: usize) -> Result<Self> {
        if train.dim() != test.dim() {
            return Err(Error::Shape {
                expected: train.dim(),
                actual: test.dim(),
            });
        }
        if let Some(&bad) = train.y.iter().chain(&test.y).find(|&&l| l >= n_classes) {
            return Err(Error::InvalidParameter(format!("label {bad} outside [0, {n_classes})")));
        }
        Ok(DatasetSplit { train, test, n_classes })
    }

    pub fn n_train(&self) -> usize {
        self.train.len()
    }

    pub fn n_test(&self) -> usize {
        self.test.len()
    }

    pub fn input_dim(&self) -> usize {
        self.train.dim()
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let raw = fs::read(path).map_err(io_err)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice()).read_to_end(&mut out).map_err(io_err)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], offset: usize, kind: &'static str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format {
            kind,
            offset: offset as u64,
            message: "header truncated".into(),
        })
}

fn payload<'a>(bytes: &'a [u8], start: usize, len: usize, kind: &'static str) -> Result<&'a [u8]> {
    if bytes.len() < start + len {
        return Err(Error::Format {
            kind,
            offset: bytes.len() as u64,
            message: format!("payload truncated: expected {len} bytes after offset {start}"),
        });
    }
    if bytes.len() > start + len {
        return Err(Error::Format {
            kind,
            offset: (start + len) as u64,
            message: "trailing bytes after payload".into(),
        });
    }
    Ok(&bytes[start..])
}

/// Decode an IDX image file (magic `0x00000803`) into rows of pixels scaled
/// to `[0, 1]`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<Array2<f64>> {
    const KIND: &str = "idx images";
    let magic = be_u32(bytes, 0, KIND)?;
    if magic != IMAGE_MAGIC {
        return Err(Error::Format {
            kind: KIND,
            offset: 0,
            message: format!("bad magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}"),
        });
    }
    let n = be_u32(bytes, 4, KIND)? as usize;
    let rows = be_u32(bytes, 8, KIND)? as usize;
    let cols = be_u32(bytes, 12, KIND)? as usize;
    let dim = rows * cols;
    let data = payload(bytes, 16, n * dim, KIND)?;
    let pixels = data.iter().map(|&p| p as f64 / 255.0).collect();
    Ok(Array2::from_shape_vec((n, dim), pixels).expect("payload length checked"))
}

/// Decode an IDX label file (magic `0x00000801`); labels must be digits.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<usize>> {
    const KIND: &str = "idx labels";
    let magic = be_u32(bytes, 0, KIND)?;
    if magic != LABEL_MAGIC {
        return Err(Error::Format {
            kind: KIND,
            offset: 0,
            message: format!("bad magic {magic:#010x}, expected {LABEL_MAGIC:#010x}"),
        });
    }
    let n = be_u32(bytes, 4, KIND)? as usize;
    let data = payload(bytes, 8, n, KIND)?;
    data.iter()
        .enumerate()
        .map(|(i, &l)| {
            if (l as usize) < MNIST_CLASSES {
                Ok(l as usize)
            } else {
                Err(Error::Format {
                    kind: KIND,
                    offset: 8 + i as u64,
                    message: format!("label {l} outside 0..{MNIST_CLASSES}"),
                })
            }
        })
        .collect()
}

/// Load an image/label IDX pair; gzip-compressed files are detected by their
/// magic bytes.
pub fn load_mnist_idx(image_path: impl AsRef<Path>, label_path: impl AsRef<Path>) -> Result<DataPart> {
    let x = parse_idx_images(&read_bytes(image_path.as_ref())?)?;
    let y = parse_idx_labels(&read_bytes(label_path.as_ref())?)?;
    if x.nrows() != y.len() {
        return Err(Error::Format {
            kind: "idx labels",
            offset: 4,
            message: format!("{} labels for {} images", y.len(), x.nrows()),
        });
    }
    DataPart::new(x, y)
}

fn find_file(dir: &Path, stem: &str) -> Result<std::path::PathBuf> {
    for name in [format!("{stem}.gz"), stem.to_string()] {
        let p = dir.join(name);
        if p.exists() {
            return Ok(p);
        }
    }
    Err(Error::Io {
        path: dir.join(stem),
        source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file (plain or .gz)"),
    })
}

/// Load the standard four-file MNIST layout from `dir`
/// (`train-images-idx3-ubyte[.gz]` and friends).
pub fn load_mnist_dir(dir: impl AsRef<Path>) -> Result<DatasetSplit> {
    let dir = dir.as_ref();
    let train = load_mnist_idx(
        find_file(dir, "train-images-idx3-ubyte")?,
        find_file(dir, "train-labels-idx1-ubyte")?,
    )?;
    let test = load_mnist_idx(
        find_file(dir, "t10k-images-idx3-ubyte")?,
        find_file(dir, "t10k-labels-idx1-ubyte")?,
    )?;
    DatasetSplit::new(train, test, MNIST_CLASSES)
}

/// Class-conditional Gaussian clusters: centers drawn from `N(0, 9 I)`, points
/// from `N(center, spread^2 I)`. Train and test sets each hold `n` points,
/// `n / n_classes` per class, in shuffled order.
pub fn synthetic_blobs(n: usize, dim: usize, n_classes: usize, spread: f64, stream: &RngStream) -> Result<DatasetSplit> {
    if n_classes < 2 || dim == 0 {
        return Err(Error::InvalidParameter("need at least two classes and one input dimension".into()));
    }
    if n == 0 || !n.is_multiple_of(n_classes) {
        return Err(Error::InvalidParameter(format!(
            "n = {n} must be a positive multiple of n_classes = {n_classes}"
        )));
    }
    if !(spread >= 0.0 && spread.is_finite()) {
        return Err(Error::domain("spread", spread, "spread >= 0"));
    }
    let mut rng = stream.rng();
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let centers: Vec<Vec<f64>> = (0..n_classes).map(|_| (0..dim).map(|_| 3.0 * normal()).collect()).collect();
    let part = |sub: u64| {
        let mut rng = stream.substream(sub).rng();
        let mut labels: Vec<usize> = (0..n).map(|i| i % n_classes).collect();
        labels.shuffle(&mut rng);
        let mut x = Array2::zeros((n, dim));
        for (mut row, &c) in x.rows_mut().into_iter().zip(&labels) {
            for (v, m) in row.iter_mut().zip(&centers[c]) {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v = m + spread * z;
            }
        }
        DataPart { x, y: labels }
    };
    let train = part(1);
    let test = part(2);
    DatasetSplit::new(train, test, n_classes)
}
