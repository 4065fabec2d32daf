//! Per-class PCA models and the least-reconstruction-error classifier.
//!
//! A model stores the class mean and an orthonormal basis of the top `k`
//! principal directions of the centred training data. When the dimension
//! exceeds the sample count the directions are recovered from the
//! eigenvectors of the `n x n` Gram matrix, otherwise from the covariance.
//! Bases are re-orthonormalized and given a fixed sign (first nonzero
//! coordinate positive) so fits are reproducible bit for bit.
//!
//! # Model file
//!
//! All integers and floats little-endian:
//!
//! ```text
//! magic    8 bytes  "DCPCAv01"
//! classes  u32
//! d        u64
//! repeat classes times:  label_len u32, label UTF-8 bytes, k u64
//! repeat classes times:  mean d x f64, basis k x d x f64 (row per component)
//! ```

use std::io::{self, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::raster::{pad_to, GrayImage, RasterError};

const MAGIC: &[u8; 8] = b"DCPCAv01";

/// Side of the square crops fed to the classifier.
pub const CROP_SIDE: usize = 192;

#[derive(Debug, Error)]
pub enum PcaError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("k = {k} outside 1..={max}")]
    KTooLarge { k: usize, max: usize },
    #[error("centred data has rank below k = {0}")]
    RankDeficient(usize),
    #[error("expected dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("classifier has no fitted models")]
    NotFitted,
    #[error("a classifier needs at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("malformed model file: {0}")]
    MalformedModel(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    d: usize,
    mean: Vec<f64>,
    basis: Vec<Vec<f64>>,
}

/// Largest admissible `k` for `n` samples of dimension `d`.
pub fn max_components(n: usize, d: usize) -> usize {
    n.saturating_sub(1).min(d)
}

/// `min(64, n - 1)`.
pub fn default_k(n: usize) -> usize {
    64.min(n.saturating_sub(1)).max(1)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_dim(expected: usize, got: usize) -> Result<(), PcaError> {
    if expected == got {
        Ok(())
    } else {
        Err(PcaError::DimensionMismatch { expected, got })
    }
}

pub fn fit(samples: &[Vec<f64>], k: usize) -> Result<PcaModel, PcaError> {
    let n = samples.len();
    if n < 2 {
        return Err(PcaError::TooFewSamples(n));
    }
    let d = samples[0].len();
    for s in samples {
        check_dim(d, s.len())?;
    }
    let max = max_components(n, d);
    if k == 0 || k > max {
        return Err(PcaError::KTooLarge { k, max });
    }
    let mut mean = vec![0.0; d];
    for s in samples {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let x = DMatrix::from_fn(n, d, |i, j| samples[i][j] - mean[j]);

    let mut directions: Vec<Vec<f64>> = if d > n {
        let gram = &x * x.transpose();
        let eig = SymmetricEigen::new(gram);
        let order = descending(eig.eigenvalues.as_slice());
        let top = eig.eigenvalues[order[0]].max(0.0);
        let mut out = Vec::with_capacity(k);
        for &i in order.iter().take(k) {
            let lambda = eig.eigenvalues[i];
            if !(lambda > top * 1e-12 * n as f64) || lambda <= 0.0 {
                return Err(PcaError::RankDeficient(k));
            }
            let u = eig.eigenvectors.column(i);
            let v = x.tr_mul(&u) / lambda.sqrt();
            out.push(v.as_slice().to_vec());
        }
        out
    } else {
        let cov = x.tr_mul(&x);
        let eig = SymmetricEigen::new(cov);
        let order = descending(eig.eigenvalues.as_slice());
        let top = eig.eigenvalues[order[0]].max(0.0);
        let mut out = Vec::with_capacity(k);
        for &i in order.iter().take(k) {
            let lambda = eig.eigenvalues[i];
            if !(lambda > top * 1e-12 * d as f64) || lambda <= 0.0 {
                return Err(PcaError::RankDeficient(k));
            }
            out.push(eig.eigenvectors.column(i).as_slice().to_vec());
        }
        out
    };
    orthonormalize(&mut directions).map_err(|_| PcaError::RankDeficient(k))?;
    for v in &mut directions {
        if v.iter().find(|&&c| c != 0.0).is_some_and(|&c| c < 0.0) {
            v.iter_mut().for_each(|c| *c = -*c);
        }
    }
    Ok(PcaModel {
        d,
        mean,
        basis: directions,
    })
}

fn descending(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

/// Two passes of modified Gram-Schmidt.
fn orthonormalize(vs: &mut [Vec<f64>]) -> Result<(), ()> {
    for _ in 0..2 {
        for i in 0..vs.len() {
            let (done, rest) = vs.split_at_mut(i);
            let v = &mut rest[0];
            for u in done.iter() {
                let c = dot(u, v);
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= c * b);
            }
            let norm = dot(v, v).sqrt();
            if !(norm > 1e-300) {
                return Err(());
            }
            v.iter_mut().for_each(|a| *a /= norm);
        }
    }
    Ok(())
}

impl PcaModel {
    /// Build a model from stored parts; rows of `basis` must be length `mean.len()`.
    pub fn from_parts(mean: Vec<f64>, basis: Vec<Vec<f64>>) -> Result<Self, PcaError> {
        let d = mean.len();
        for b in &basis {
            check_dim(d, b.len())?;
        }
        Ok(Self { d, mean, basis })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.basis.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// Model restricted to its first `k` components.
    pub fn truncated(&self, k: usize) -> Self {
        Self {
            d: self.d,
            mean: self.mean.clone(),
            basis: self.basis[..k.min(self.k())].to_vec(),
        }
    }

    pub fn reduce(&self, x: &[f64]) -> Result<Vec<f64>, PcaError> {
        check_dim(self.d, x.len())?;
        let centred: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        Ok(self.basis.iter().map(|b| dot(b, &centred)).collect())
    }

    pub fn reconstruct(&self, coeffs: &[f64]) -> Result<Vec<f64>, PcaError> {
        check_dim(self.k(), coeffs.len())?;
        let mut out = self.mean.clone();
        for (c, b) in coeffs.iter().zip(&self.basis) {
            out.iter_mut().zip(b).for_each(|(o, v)| *o += c * v);
        }
        Ok(out)
    }

    /// Squared L2 distance between `x` and its reconstruction.
    pub fn reconstruction_error(&self, x: &[f64]) -> Result<f64, PcaError> {
        let r = self.reconstruct(&self.reduce(x)?)?;
        Ok(x.iter().zip(&r).map(|(a, b)| (a - b) * (a - b)).sum())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub index: usize,
    pub label: String,
    /// Squared L2 reconstruction error per class, declaration order.
    pub errors: Vec<f64>,
    /// The same errors divided by `d`.
    pub mse: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PcaClassifier {
    labels: Vec<String>,
    models: Vec<PcaModel>,
}

impl PcaClassifier {
    pub fn new(classes: Vec<(String, PcaModel)>) -> Result<Self, PcaError> {
        if classes.len() < 2 {
            return Err(PcaError::TooFewClasses(classes.len()));
        }
        let d = classes[0].1.d;
        for (_, m) in &classes {
            check_dim(d, m.d)?;
        }
        let (labels, models) = classes.into_iter().unzip();
        Ok(Self { labels, models })
    }

    /// Fit one model per class; `k = None` uses [`default_k`] per class.
    pub fn fit(classes: &[(String, Vec<Vec<f64>>)], k: Option<usize>) -> Result<Self, PcaError> {
        let fitted = classes
            .iter()
            .map(|(label, samples)| {
                let k = k.unwrap_or_else(|| default_k(samples.len()));
                fit(samples, k).map(|m| (label.clone(), m))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(fitted)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn models(&self) -> &[PcaModel] {
        &self.models
    }

    pub fn d(&self) -> Option<usize> {
        self.models.first().map(|m| m.d)
    }

    /// Least reconstruction error wins; ties go to the class declared first.
    pub fn classify(&self, x: &[f64]) -> Result<Classification, PcaError> {
        if self.models.is_empty() {
            return Err(PcaError::NotFitted);
        }
        let errors = self
            .models
            .iter()
            .map(|m| m.reconstruction_error(x))
            .collect::<Result<Vec<_>, _>>()?;
        let mut index = 0;
        for (i, &e) in errors.iter().enumerate() {
            if e < errors[index] {
                index = i;
            }
        }
        let d = x.len() as f64;
        Ok(Classification {
            index,
            label: self.labels[index].clone(),
            mse: errors.iter().map(|e| e / d).collect(),
            errors,
        })
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), PcaError> {
        let d = self.d().ok_or(PcaError::NotFitted)?;
        w.write_all(MAGIC)?;
        w.write_all(&(self.models.len() as u32).to_le_bytes())?;
        w.write_all(&(d as u64).to_le_bytes())?;
        for (label, m) in self.labels.iter().zip(&self.models) {
            w.write_all(&(label.len() as u32).to_le_bytes())?;
            w.write_all(label.as_bytes())?;
            w.write_all(&(m.k() as u64).to_le_bytes())?;
        }
        for m in &self.models {
            for v in m.mean.iter().chain(m.basis.iter().flatten()) {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, PcaError> {
        let bad = |m: &str| PcaError::MalformedModel(m.to_string());
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
        if &magic != MAGIC {
            return Err(bad("bad magic"));
        }
        let classes = read_u32(&mut r)? as usize;
        let d = read_u64(&mut r)? as usize;
        if !(2..=1 << 16).contains(&classes) || !(1..=1 << 28).contains(&d) {
            return Err(bad("implausible class count or dimension"));
        }
        let mut table = Vec::with_capacity(classes);
        for _ in 0..classes {
            let len = read_u32(&mut r)? as usize;
            if len > 1 << 16 {
                return Err(bad("label too long"));
            }
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf).map_err(|_| bad("truncated label"))?;
            let label = String::from_utf8(buf).map_err(|_| bad("label is not UTF-8"))?;
            let k = read_u64(&mut r)? as usize;
            if k == 0 || k > d {
                return Err(bad("invalid k"));
            }
            table.push((label, k));
        }
        let mut read_vec = |n: usize| -> Result<Vec<f64>, PcaError> {
            let mut bytes = vec![0u8; n * 8];
            r.read_exact(&mut bytes).map_err(|_| bad("truncated payload"))?;
            Ok(bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect())
        };
        let mut fitted = Vec::with_capacity(classes);
        for (label, k) in table {
            let mean = read_vec(d)?;
            let basis = (0..k).map(|_| read_vec(d)).collect::<Result<Vec<_>, _>>()?;
            fitted.push((label, PcaModel { d, mean, basis }));
        }
        Self::new(fitted)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PcaError> {
        let f = std::fs::File::create(path)?;
        self.write_to(io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PcaError> {
        let f = std::fs::File::open(path)?;
        Self::read_from(io::BufReader::new(f))
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, PcaError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|_| PcaError::MalformedModel("truncated header".into()))?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, PcaError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|_| PcaError::MalformedModel("truncated header".into()))?;
    Ok(u64::from_le_bytes(b))
}

/// Pad a crop to `side x side` with white and scale intensities to [0, 1].
pub fn image_to_vector(img: &GrayImage, side: usize) -> Result<Vec<f64>, PcaError> {
    let padded = pad_to(img, side, side, 255)?;
    Ok(padded.data().iter().map(|&v| v as f64 / 255.0).collect())
}
