use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::net::Matrix;
use crate::error::{io_error, Error, Result};

/// Features in `[0, 1]` with one class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub classes: usize,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if features.rows != labels.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} labels", features.rows),
                got: format!("{} labels", labels.len()),
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::LabelOutOfRange { label, classes });
        }
        Ok(Dataset {
            features,
            labels,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes,
        }
    }

    /// Shuffles with `seed` and holds out `test_fraction` of the rows.
    pub fn split(&self, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(0.0..1.0).contains(&test_fraction) {
            return Err(Error::OutOfDomain {
                what: "test fraction",
                value: test_fraction,
                range: "[0, 1)",
            });
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_test = (self.len() as f64 * test_fraction).round() as usize;
        let (test, train) = idx.split_at(n_test);
        Ok((self.subset(train), self.subset(test)))
    }
}

/// Where a training run gets its data.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// IDX image and label files, optionally truncated to the first `limit`
    /// samples.
    Idx {
        images: PathBuf,
        labels: PathBuf,
        limit: Option<usize>,
    },
    /// Isotropic Gaussian clusters in the plane.
    Blobs {
        classes: usize,
        samples: usize,
        noise: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRef {
    pub source: DataSource,
    pub test_fraction: f64,
    /// Seed of the train/test shuffle, independent of the training seed so
    /// every run of a comparison sees the same split.
    pub split_seed: u64,
}

impl DatasetRef {
    pub fn blobs(classes: usize, samples: usize, noise: f64, seed: u64) -> Self {
        DatasetRef {
            source: DataSource::Blobs {
                classes,
                samples,
                noise,
                seed,
            },
            test_fraction: 0.25,
            split_seed: 0,
        }
    }

    pub fn idx(
        images: impl Into<PathBuf>,
        labels: impl Into<PathBuf>,
        limit: Option<usize>,
    ) -> Self {
        DatasetRef {
            source: DataSource::Idx {
                images: images.into(),
                labels: labels.into(),
                limit,
            },
            test_fraction: 0.2,
            split_seed: 0,
        }
    }

    pub fn load(&self) -> Result<(Dataset, Dataset)> {
        let data = match &self.source {
            DataSource::Idx {
                images,
                labels,
                limit,
            } => load_idx_dataset(images, labels, *limit)?,
            &DataSource::Blobs {
                classes,
                samples,
                noise,
                seed,
            } => blobs(classes, samples, noise, seed)?,
        };
        data.split(self.test_fraction, self.split_seed)
    }
}

/// `samples` points around `classes` centres spaced evenly on the unit
/// circle, with Gaussian noise of standard deviation `noise`, then min-max
/// scaled into `[0, 1]`.
pub fn blobs(classes: usize, samples: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if classes < 2 || samples < classes {
        return Err(Error::InvalidConfig(format!(
            "blobs need >= 2 classes and at least one sample per class, got {classes} classes, {samples} samples"
        )));
    }
    let bad_noise =
        || Error::InvalidConfig(format!("blob noise must be finite and >= 0, got {noise}"));
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(bad_noise());
    }
    let normal = Normal::new(0.0, noise).map_err(|_| bad_noise())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(samples * 2);
    let mut labels = Vec::with_capacity(samples);
    for _ in 0..samples {
        let c = rng.random_range(0..classes);
        let angle = 2.0 * PI * c as f64 / classes as f64;
        data.push(angle.cos() + normal.sample(&mut rng));
        data.push(angle.sin() + normal.sample(&mut rng));
        labels.push(c);
    }
    let mut features = Matrix::from_vec(samples, 2, data)?;
    min_max_scale(&mut features);
    Dataset::new(features, labels, classes)
}

fn min_max_scale(m: &mut Matrix) {
    for c in 0..m.cols {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for r in 0..m.rows {
            let v = m.get(r, c);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let span = if hi > lo { hi - lo } else { 1.0 };
        for r in 0..m.rows {
            let v = &mut m.row_mut(r)[c];
            *v = (*v - lo) / span;
        }
    }
}

/// An unsigned-byte IDX array.
#[derive(Debug, Clone, PartialEq)]
pub struct IdxArray {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

const IDX_UBYTE: u8 = 0x08;

/// Parses the IDX container: two zero bytes, a type byte (only 0x08,
/// unsigned byte, is accepted), the dimension count, big-endian `u32`
/// sizes, then the raw data.
pub fn parse_idx(bytes: &[u8], path: &Path) -> Result<IdxArray> {
    let bad = |reason: String| Error::Idx {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < 4 {
        return Err(bad(format!(
            "{} bytes is shorter than the magic number",
            bytes.len()
        )));
    }
    if bytes[0] != 0 || bytes[1] != 0 {
        return Err(bad(format!(
            "magic must start with two zero bytes, got {:02x}{:02x}",
            bytes[0], bytes[1]
        )));
    }
    if bytes[2] != IDX_UBYTE {
        return Err(bad(format!(
            "unsupported element type 0x{:02x}; only unsigned bytes",
            bytes[2]
        )));
    }
    let ndims = usize::from(bytes[3]);
    let header = 4 + 4 * ndims;
    if ndims == 0 || bytes.len() < header {
        return Err(bad(format!("truncated header for {ndims} dimensions")));
    }
    let dims: Vec<usize> = bytes[4..header]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]) as usize)
        .collect();
    let expected = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
    let body = &bytes[header..];
    if expected != Some(body.len()) {
        return Err(bad(format!(
            "dimensions {dims:?} need {expected:?} data bytes, found {}",
            body.len()
        )));
    }
    Ok(IdxArray {
        dims,
        data: body.to_vec(),
    })
}

pub fn read_idx(path: &Path) -> Result<IdxArray> {
    let bytes = fs::read(path).map_err(io_error(path))?;
    parse_idx(&bytes, path)
}

pub fn encode_idx(array: &IdxArray) -> Result<Vec<u8>> {
    if array.dims.is_empty() || array.dims.len() > 255 {
        return Err(Error::InvalidConfig(format!(
            "IDX needs 1..=255 dimensions, got {}",
            array.dims.len()
        )));
    }
    let mut out = vec![0, 0, IDX_UBYTE, array.dims.len() as u8];
    for &d in &array.dims {
        let d = u32::try_from(d)
            .map_err(|_| Error::InvalidConfig(format!("IDX dimension {d} exceeds u32")))?;
        out.extend_from_slice(&d.to_be_bytes());
    }
    out.extend_from_slice(&array.data);
    Ok(out)
}

pub fn write_idx(path: &Path, array: &IdxArray) -> Result<()> {
    fs::write(path, encode_idx(array)?).map_err(io_error(path))
}

/// Loads an image file (`n x rows x cols`) and a label file (`n`), scaling
/// pixels to `[0, 1]`. Labels must lie in `0..10`.
pub fn load_idx_dataset(images: &Path, labels: &Path, limit: Option<usize>) -> Result<Dataset> {
    let img = read_idx(images)?;
    let lab = read_idx(labels)?;
    if img.dims.len() < 2 {
        return Err(Error::Idx {
            path: images.to_path_buf(),
            reason: format!(
                "expected an n x rows x cols image array, got dims {:?}",
                img.dims
            ),
        });
    }
    if lab.dims.len() != 1 || lab.dims[0] != img.dims[0] {
        return Err(Error::Idx {
            path: labels.to_path_buf(),
            reason: format!(
                "label dims {:?} do not match {} images",
                lab.dims, img.dims[0]
            ),
        });
    }
    let dim: usize = img.dims[1..].iter().product();
    let n = limit.map_or(img.dims[0], |l| l.min(img.dims[0]));
    let features = img.data[..n * dim]
        .iter()
        .map(|&p| f64::from(p) / 255.0)
        .collect();
    let labels = lab.data[..n].iter().map(|&l| usize::from(l)).collect();
    Dataset::new(Matrix::from_vec(n, dim, features)?, labels, 10)
}

pub const DIGIT_SIDE: usize = 28;

// Seven-segment endpoints on a unit box (x right, y down): a b c d e f g.
const SEGMENTS: [((f64, f64), (f64, f64)); 7] = [
    ((0.0, 0.0), (1.0, 0.0)),
    ((1.0, 0.0), (1.0, 0.5)),
    ((1.0, 0.5), (1.0, 1.0)),
    ((0.0, 1.0), (1.0, 1.0)),
    ((0.0, 0.5), (0.0, 1.0)),
    ((0.0, 0.0), (0.0, 0.5)),
    ((0.0, 0.5), (1.0, 0.5)),
];

const DIGIT_SEGMENTS: [u8; 10] = [
    0b011_1111, // 0: a b c d e f
    0b000_0110, // 1: b c
    0b101_1011, // 2: a b d e g
    0b100_1111, // 3: a b c d g
    0b110_0110, // 4: b c f g
    0b110_1101, // 5: a c d f g
    0b111_1101, // 6: a c d e f g
    0b000_0111, // 7: a b c
    0b111_1111, // 8
    0b110_1111, // 9: a b c d f g
];

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let t = (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    let (qx, qy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - qx).powi(2) + (p.1 - qy).powi(2)).sqrt()
}

/// Renders `n` 28x28 seven-segment digit images with random placement,
/// size, slant, stroke width, dropped-out stroke ends and pixel noise.
/// Returns the image and label arrays in IDX layout.
pub fn synthetic_digits(n: usize, seed: u64) -> (IdxArray, IdxArray) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = DIGIT_SIDE;
    let mut pixels = Vec::with_capacity(n * side * side);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let digit = rng.random_range(0..10u8);
        let width = rng.random_range(8.0..13.0);
        let height = rng.random_range(14.0..20.0);
        let x0 = rng.random_range(4.0..(side as f64 - 4.0 - width));
        let y0 = rng.random_range(3.0..(side as f64 - 3.0 - height));
        let slant = rng.random_range(-0.25..0.25);
        let stroke = rng.random_range(1.0..2.2);
        let ink = rng.random_range(0.7..1.0);
        let place = |(u, v): (f64, f64)| {
            (
                x0 + u * width + slant * (1.0 - v) * height * 0.3,
                y0 + v * height,
            )
        };
        let segs: Vec<((f64, f64), (f64, f64))> = (0..7)
            .filter(|s| DIGIT_SEGMENTS[usize::from(digit)] & (1 << s) != 0)
            .map(|s| {
                let (a, b) = SEGMENTS[s];
                // jitter the ends so strokes don't always meet cleanly
                let j = |p: (f64, f64), rng: &mut ChaCha8Rng| {
                    let (x, y) = place(p);
                    (
                        x + rng.random_range(-0.8..0.8),
                        y + rng.random_range(-0.8..0.8),
                    )
                };
                (j(a, &mut rng), j(b, &mut rng))
            })
            .collect();
        for py in 0..side {
            for px in 0..side {
                let p = (px as f64 + 0.5, py as f64 + 0.5);
                let d = segs
                    .iter()
                    .map(|&(a, b)| segment_distance(p, a, b))
                    .fold(f64::INFINITY, f64::min);
                let stroke_val = ink * (1.0 - ((d - stroke) / 1.2).clamp(0.0, 1.0));
                let noise = rng.random_range(0.0..0.12);
                pixels.push((255.0 * (stroke_val + noise).min(1.0)).round() as u8);
            }
        }
        labels.push(digit);
    }
    (
        IdxArray {
            dims: vec![n, side, side],
            data: pixels,
        },
        IdxArray {
            dims: vec![n],
            data: labels,
        },
    )
}

/// Writes [`synthetic_digits`] as `images.idx3-ubyte` and
/// `labels.idx1-ubyte` under `dir`, returning both paths.
pub fn write_synthetic_digits(dir: &Path, n: usize, seed: u64) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(io_error(dir))?;
    let (images, labels) = synthetic_digits(n, seed);
    let image_path = dir.join("images.idx3-ubyte");
    let label_path = dir.join("labels.idx1-ubyte");
    write_idx(&image_path, &images)?;
    write_idx(&label_path, &labels)?;
    Ok((image_path, label_path))
}
