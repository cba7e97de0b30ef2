//! Datasets: IDX (MNIST) and CIFAR-10 binary loaders, a synthetic binary
//! task, stratified subsampling and one-hot targets.
//!
//! Inputs are stored as `features x N` with one sample per column. Pixel
//! bytes are divided by 255, so loaded inputs lie in `[0, 1]`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::SeededRng;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

pub const CIFAR_IMAGE_BYTES: usize = 3072;
pub const CIFAR_RECORD_BYTES: usize = CIFAR_IMAGE_BYTES + 1;
pub const CIFAR_CLASSES: usize = 10;
pub const MNIST_CLASSES: usize = 10;

/// Within-class standard deviation of the synthetic clusters.
pub const SYNTHETIC_NOISE_STD: f64 = 0.1;

/// RNG stream reserved for dataset generation and subsampling.
const DATA_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    /// `features x N`.
    pub inputs: Matrix,
    /// `outputs x N`: a single 0/1 row for binary tasks, one-hot otherwise.
    pub targets: Matrix,
    pub labels: Vec<usize>,
    pub classes: usize,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        inputs: Matrix,
        targets: Matrix,
        labels: Vec<usize>,
        classes: usize,
    ) -> Result<Self> {
        let n = inputs.cols();
        if targets.cols() != n || labels.len() != n {
            return Err(Error::invalid(format!(
                "{n} input columns, {} target columns, {} labels",
                targets.cols(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
            return Err(Error::invalid(format!("label {bad} out of range for {classes} classes")));
        }
        Ok(Dataset {
            name: name.into(),
            inputs,
            targets,
            labels,
            classes,
        })
    }

    /// Binary dataset: targets are the labels as a `1 x N` row.
    pub fn binary(name: impl Into<String>, inputs: Matrix, labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("empty dataset"));
        }
        let targets = Matrix::from_vec(1, labels.len(), labels.iter().map(|&y| y as f64).collect())?;
        Self::new(name, inputs, targets, labels, 2)
    }

    /// Multi-class dataset with one-hot targets.
    pub fn multiclass(name: impl Into<String>, inputs: Matrix, labels: Vec<usize>, classes: usize) -> Result<Self> {
        let targets = one_hot(&labels, classes)?;
        Self::new(name, inputs, targets, labels, classes)
    }

    pub fn len(&self) -> usize {
        self.inputs.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn features(&self) -> usize {
        self.inputs.rows()
    }

    pub fn output_width(&self) -> usize {
        self.targets.rows()
    }

    pub fn is_binary(&self) -> bool {
        self.targets.rows() == 1
    }

    /// Dataset made of the given sample columns, in order.
    pub fn select(&self, columns: &[usize]) -> Result<Dataset> {
        let labels = columns
            .iter()
            .map(|&c| self.labels.get(c).copied().ok_or_else(|| Error::invalid(format!("sample {c} out of range"))))
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(
            self.name.clone(),
            self.inputs.select_columns(columns)?,
            self.targets.select_columns(columns)?,
            labels,
            self.classes,
        )
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }
}

/// `k x N` matrix with a single 1 per column at the label's row.
pub fn one_hot(labels: &[usize], k: usize) -> Result<Matrix> {
    if k == 0 || labels.is_empty() {
        return Err(Error::invalid("one_hot needs k >= 1 and at least one label"));
    }
    let n = labels.len();
    let mut m = Matrix::zeros(k, n);
    for (i, &y) in labels.iter().enumerate() {
        if y >= k {
            return Err(Error::invalid(format!("label {y} out of range for {k} classes")));
        }
        m.set(y, i, 1.0);
    }
    Ok(m)
}

/// Transposes `n` row-major byte images of `features` bytes into a
/// `features x n` matrix scaled by 1/255.
fn images_to_columns(pixels: &[u8], n: usize, features: usize) -> Result<Matrix> {
    let mut data = vec![0.0; features * n];
    for (i, image) in pixels.chunks_exact(features).enumerate() {
        for (p, &b) in image.iter().enumerate() {
            data[p * n + i] = f64::from(b) / 255.0;
        }
    }
    Matrix::from_vec(features, n, data)
}

fn read_be_u32(bytes: &[u8], offset: usize, file: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format {
            file: file.to_string(),
            offset: bytes.len() as u64,
            detail: format!("truncated header, need {} bytes", offset + 4),
        })
}

fn check_magic(bytes: &[u8], expected: u32, file: &str) -> Result<()> {
    let magic = read_be_u32(bytes, 0, file)?;
    if magic != expected {
        return Err(Error::Format {
            file: file.to_string(),
            offset: 0,
            detail: format!("bad magic number 0x{magic:08x}, expected 0x{expected:08x}"),
        });
    }
    Ok(())
}

/// Parsed IDX image file: `(count, rows, cols, pixel bytes)`.
pub fn parse_idx_images(bytes: &[u8], file: &str) -> Result<(usize, usize, usize, Vec<u8>)> {
    check_magic(bytes, IDX_IMAGES_MAGIC, file)?;
    let n = read_be_u32(bytes, 4, file)? as usize;
    let rows = read_be_u32(bytes, 8, file)? as usize;
    let cols = read_be_u32(bytes, 12, file)? as usize;
    let body = &bytes[16..];
    let expected = n
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .ok_or_else(|| Error::Format {
            file: file.to_string(),
            offset: 4,
            detail: format!("header dimensions {n}x{rows}x{cols} overflow"),
        })?;
    if body.len() < expected {
        return Err(Error::Format {
            file: file.to_string(),
            offset: bytes.len() as u64,
            detail: format!("truncated image data, expected {expected} pixel bytes, found {}", body.len()),
        });
    }
    if body.len() > expected {
        return Err(Error::Format {
            file: file.to_string(),
            offset: (16 + expected) as u64,
            detail: format!("{} trailing bytes after image data", body.len() - expected),
        });
    }
    Ok((n, rows, cols, body.to_vec()))
}

pub fn parse_idx_labels(bytes: &[u8], file: &str) -> Result<Vec<u8>> {
    check_magic(bytes, IDX_LABELS_MAGIC, file)?;
    let n = read_be_u32(bytes, 4, file)? as usize;
    let body = &bytes[8..];
    if body.len() != n {
        return Err(Error::Format {
            file: file.to_string(),
            offset: if body.len() < n { bytes.len() } else { 8 + n } as u64,
            detail: format!("header declares {n} labels, file holds {}", body.len()),
        });
    }
    Ok(body.to_vec())
}

/// MNIST-style dataset from an IDX image file and an IDX label file.
pub fn load_mnist_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();
    let images = fs::read(images_path)?;
    let labels = fs::read(labels_path)?;
    mnist_from_idx_bytes(
        &images,
        &labels,
        &images_path.display().to_string(),
        &labels_path.display().to_string(),
    )
}

pub fn mnist_from_idx_bytes(images: &[u8], labels: &[u8], images_name: &str, labels_name: &str) -> Result<Dataset> {
    let (n, rows, cols, pixels) = parse_idx_images(images, images_name)?;
    let raw_labels = parse_idx_labels(labels, labels_name)?;
    if raw_labels.len() != n {
        return Err(Error::Format {
            file: labels_name.to_string(),
            offset: 4,
            detail: format!("{} labels for {n} images", raw_labels.len()),
        });
    }
    if n == 0 || rows * cols == 0 {
        return Err(Error::Format {
            file: images_name.to_string(),
            offset: 4,
            detail: "empty image set".into(),
        });
    }
    let labels = raw_labels
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            if usize::from(y) < MNIST_CLASSES {
                Ok(usize::from(y))
            } else {
                Err(Error::Format {
                    file: labels_name.to_string(),
                    offset: (8 + i) as u64,
                    detail: format!("label {y} out of range 0-9"),
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let inputs = images_to_columns(&pixels, n, rows * cols)?;
    Dataset::multiclass("mnist", inputs, labels, MNIST_CLASSES)
}

/// Quantizes inputs in `[0, 1]` back to bytes.
fn columns_to_bytes(inputs: &Matrix) -> Result<Vec<u8>> {
    let (features, n) = inputs.shape();
    let mut out = vec![0u8; features * n];
    for p in 0..features {
        for (i, &v) in inputs.row(p).iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("input value {v} outside [0, 1]")));
            }
            out[i * features + p] = (v * 255.0).round() as u8;
        }
    }
    Ok(out)
}

/// Encodes a dataset as IDX image and label bytes with `rows x cols` images.
pub fn encode_mnist_idx(data: &Dataset, rows: usize, cols: usize) -> Result<(Vec<u8>, Vec<u8>)> {
    if rows * cols != data.features() {
        return Err(Error::invalid(format!(
            "{rows}x{cols} images need {} features, dataset has {}",
            rows * cols,
            data.features()
        )));
    }
    let n = data.len() as u32;
    let mut images = Vec::with_capacity(16 + data.len() * data.features());
    for v in [IDX_IMAGES_MAGIC, n, rows as u32, cols as u32] {
        images.extend_from_slice(&v.to_be_bytes());
    }
    images.extend(columns_to_bytes(&data.inputs)?);

    let mut labels = Vec::with_capacity(8 + data.len());
    labels.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    labels.extend_from_slice(&n.to_be_bytes());
    for &y in &data.labels {
        let byte = u8::try_from(y).map_err(|_| Error::invalid(format!("label {y} does not fit a byte")))?;
        labels.push(byte);
    }
    Ok((images, labels))
}

pub fn write_mnist_idx(
    data: &Dataset,
    rows: usize,
    cols: usize,
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<()> {
    let (images, labels) = encode_mnist_idx(data, rows, cols)?;
    fs::write(images_path, images)?;
    fs::write(labels_path, labels)?;
    Ok(())
}

/// CIFAR-10 dataset from one or more binary batch files, concatenated in the
/// order given.
pub fn load_cifar10_bin<P: AsRef<Path>>(paths: &[P]) -> Result<Dataset> {
    if paths.is_empty() {
        return Err(Error::invalid("no CIFAR-10 batch files given"));
    }
    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    for path in paths {
        let path = path.as_ref();
        let bytes = fs::read(path)?;
        parse_cifar10_records(&bytes, &path.display().to_string(), &mut pixels, &mut labels)?;
    }
    let n = labels.len();
    let inputs = images_to_columns(&pixels, n, CIFAR_IMAGE_BYTES)?;
    Dataset::multiclass("cifar10", inputs, labels, CIFAR_CLASSES)
}

pub fn cifar10_from_bytes(bytes: &[u8], file: &str) -> Result<Dataset> {
    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    parse_cifar10_records(bytes, file, &mut pixels, &mut labels)?;
    let inputs = images_to_columns(&pixels, labels.len(), CIFAR_IMAGE_BYTES)?;
    Dataset::multiclass("cifar10", inputs, labels, CIFAR_CLASSES)
}

fn parse_cifar10_records(bytes: &[u8], file: &str, pixels: &mut Vec<u8>, labels: &mut Vec<usize>) -> Result<()> {
    if bytes.is_empty() || bytes.len() % CIFAR_RECORD_BYTES != 0 {
        return Err(Error::Format {
            file: file.to_string(),
            offset: (bytes.len() - bytes.len() % CIFAR_RECORD_BYTES) as u64,
            detail: format!(
                "length {} is not a positive multiple of the {CIFAR_RECORD_BYTES}-byte record size",
                bytes.len()
            ),
        });
    }
    for (r, record) in bytes.chunks_exact(CIFAR_RECORD_BYTES).enumerate() {
        let label = usize::from(record[0]);
        if label >= CIFAR_CLASSES {
            return Err(Error::Format {
                file: file.to_string(),
                offset: (r * CIFAR_RECORD_BYTES) as u64,
                detail: format!("label {label} out of range 0-9"),
            });
        }
        labels.push(label);
        pixels.extend_from_slice(&record[1..]);
    }
    Ok(())
}

/// Encodes a 3072-feature dataset as CIFAR-10 binary records.
pub fn encode_cifar10_bin(data: &Dataset) -> Result<Vec<u8>> {
    if data.features() != CIFAR_IMAGE_BYTES {
        return Err(Error::invalid(format!(
            "CIFAR-10 records hold {CIFAR_IMAGE_BYTES} features, dataset has {}",
            data.features()
        )));
    }
    let pixels = columns_to_bytes(&data.inputs)?;
    let mut out = Vec::with_capacity(data.len() * CIFAR_RECORD_BYTES);
    for (image, &y) in pixels.chunks_exact(CIFAR_IMAGE_BYTES).zip(&data.labels) {
        out.push(u8::try_from(y).map_err(|_| Error::invalid(format!("label {y} does not fit a byte")))?);
        out.extend_from_slice(image);
    }
    Ok(out)
}

/// Two Gaussian clusters in `[0, 1]^features`, clipped, whose centers sit at
/// `0.5 -/+ separation/2` along a random unit direction. Samples alternate
/// between class 0 and class 1.
pub fn synthetic_binary(n_per_class: usize, features: usize, separation: f64, seed: u64) -> Result<Dataset> {
    if n_per_class == 0 || features == 0 {
        return Err(Error::invalid("synthetic data needs at least one sample per class and one feature"));
    }
    if !separation.is_finite() || separation < 0.0 {
        return Err(Error::invalid(format!("separation must be finite and >= 0, got {separation}")));
    }
    let mut rng = SeededRng::with_stream(seed, DATA_STREAM);
    let mut direction: Vec<f64> = (0..features).map(|_| rng.standard_normal()).collect();
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in &mut direction {
        *v /= norm;
    }

    let n = 2 * n_per_class;
    let mut data = vec![0.0; features * n];
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 2;
        let offset = if class == 0 { -0.5 * separation } else { 0.5 * separation };
        for (p, &d) in direction.iter().enumerate() {
            let v = 0.5 + offset * d + SYNTHETIC_NOISE_STD * rng.standard_normal();
            data[p * n + i] = v.clamp(0.0, 1.0);
        }
        labels.push(class);
    }
    Dataset::binary("synthetic", Matrix::from_vec(features, n, data)?, labels)
}

/// Stratified sample of `n` columns without replacement.
///
/// Each class receives its proportional share rounded down, and the remaining
/// slots go to the classes with the largest fractional remainders (lowest
/// class index first on ties). Chosen columns keep their original order, so
/// `n == N` returns the dataset unchanged.
pub fn subsample(data: &Dataset, n: usize, seed: u64) -> Result<Dataset> {
    let total = data.len();
    if n > total {
        return Err(Error::invalid(format!("cannot draw {n} samples from {total}")));
    }
    if n == 0 {
        return Err(Error::invalid("subsample size must be positive"));
    }
    let counts = data.class_counts();
    let mut quotas: Vec<usize> = counts.iter().map(|&c| c * n / total).collect();
    let mut remainders: Vec<(usize, usize)> = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| (c * n % total, k))
        .collect();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let missing = n - quotas.iter().sum::<usize>();
    for &(_, k) in remainders.iter().take(missing) {
        quotas[k] += 1;
    }

    let mut rng = SeededRng::with_stream(seed, DATA_STREAM);
    let mut chosen = Vec::with_capacity(n);
    for (k, &quota) in quotas.iter().enumerate() {
        let mut members: Vec<usize> = (0..total).filter(|&i| data.labels[i] == k).collect();
        rng.shuffle(&mut members);
        chosen.extend_from_slice(&members[..quota]);
    }
    chosen.sort_unstable();
    data.select(&chosen)
}
