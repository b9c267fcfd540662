//! PCA front end: fit on training vectors, project to `d` components, and
//! min-max scale each component into `[0, 1]` for detuning encoding.
//!
//! Components are the leading eigenvectors of the sample covariance
//! (denominator `n - 1`), ordered by descending eigenvalue. Eigenvector sign
//! is arbitrary, so each component is normalized to make its
//! largest-magnitude entry positive; this keeps cached embeddings
//! reproducible across fits.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{Array1, Array2};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const MODEL_MAGIC: &[u8; 4] = b"QRPC";
const MODEL_VERSION: u32 = 1;

/// Fitted PCA basis. `components` is `M x d` with eigenvector columns.
#[derive(Debug, Clone)]
pub struct PcaModel {
    pub mean: Array1<f64>,
    pub components: Array2<f64>,
    /// Leading eigenvalues, descending. Not persisted; empty after load.
    pub explained_variance: Vec<f64>,
}

/// Per-component training min/max used to map projections into `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentScaler {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.ncols()
    }
}

/// Fit a `d`-component PCA on the given training vectors.
pub fn fit_pca(train_vectors: &[Vec<f64>], d: usize) -> Result<PcaModel> {
    let n = train_vectors.len();
    if n < 2 {
        return Err(Error::Dimension("pca needs at least two samples".into()));
    }
    let m = train_vectors[0].len();
    if d == 0 || d > m {
        return Err(Error::Dimension(format!("d = {d} out of range for M = {m}")));
    }
    if d > n - 1 {
        return Err(Error::Dimension(format!(
            "d = {d} exceeds sample rank bound {} (n = {n})",
            n - 1
        )));
    }
    if train_vectors.iter().any(|v| v.len() != m) {
        return Err(Error::Dimension("training vectors have mixed lengths".into()));
    }

    let mut mean = Array1::<f64>::zeros(m);
    for v in train_vectors {
        for (s, &x) in mean.iter_mut().zip(v) {
            *s += x;
        }
    }
    mean.mapv_inplace(|s| s / n as f64);

    let mut centered = Array2::<f64>::zeros((n, m));
    for (i, v) in train_vectors.iter().enumerate() {
        for (j, &x) in v.iter().enumerate() {
            centered[(i, j)] = x - mean[j];
        }
    }
    let cov = centered.t().dot(&centered) / (n as f64 - 1.0);

    // Dense symmetric eigendecomposition; M is small (784 for MNIST).
    let cov_na = nalgebra::DMatrix::from_fn(m, m, |r, c| cov[(r, c)]);
    let eig = nalgebra::SymmetricEigen::new(cov_na);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut components = Array2::<f64>::zeros((m, d));
    let mut explained_variance = Vec::with_capacity(d);
    for (k, &idx) in order.iter().take(d).enumerate() {
        explained_variance.push(eig.eigenvalues[idx]);
        let col = eig.eigenvectors.column(idx);
        // Deterministic sign: largest-magnitude entry positive.
        let mut pivot = 0;
        for j in 1..m {
            if col[j].abs() > col[pivot].abs() {
                pivot = j;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..m {
            components[(j, k)] = sign * col[j];
        }
    }

    Ok(PcaModel {
        mean,
        components,
        explained_variance,
    })
}

/// Project one vector: `z = U_d^T (y - mean)`.
pub fn project(model: &PcaModel, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != model.input_dim() {
        return Err(Error::Dimension(format!(
            "project input has length {}, model expects {}",
            y.len(),
            model.input_dim()
        )));
    }
    let centered = Array1::from_iter(y.iter().zip(&model.mean).map(|(a, b)| a - b));
    Ok(model.components.t().dot(&centered).to_vec())
}

/// Reconstruct from a projection: `mean + U_d z`.
pub fn reconstruct(model: &PcaModel, z: &[f64]) -> Result<Vec<f64>> {
    if z.len() != model.n_components() {
        return Err(Error::Dimension("reconstruct input has wrong length".into()));
    }
    let z = Array1::from_iter(z.iter().copied());
    Ok((&model.mean + &model.components.dot(&z)).to_vec())
}

/// Fit the per-component min-max scaler on training projections.
pub fn fit_scaler(train_projections: &[Vec<f64>]) -> Result<ComponentScaler> {
    let first = train_projections
        .first()
        .ok_or_else(|| Error::Dimension("scaler needs at least one projection".into()))?;
    let d = first.len();
    let mut mins = vec![f64::INFINITY; d];
    let mut maxs = vec![f64::NEG_INFINITY; d];
    for z in train_projections {
        if z.len() != d {
            return Err(Error::Dimension("projections have mixed lengths".into()));
        }
        for k in 0..d {
            mins[k] = mins[k].min(z[k]);
            maxs[k] = maxs[k].max(z[k]);
        }
    }
    Ok(ComponentScaler { mins, maxs })
}

impl ComponentScaler {
    /// Map a projection into `[0, 1]^d`, clamping values outside the training
    /// range. A degenerate component (`max == min`) maps to 0.5.
    pub fn scale(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.mins.len() {
            return Err(Error::Dimension("scale input has wrong length".into()));
        }
        Ok(z.iter()
            .enumerate()
            .map(|(k, &v)| {
                let range = self.maxs[k] - self.mins[k];
                if range == 0.0 {
                    0.5
                } else {
                    ((v - self.mins[k]) / range).clamp(0.0, 1.0)
                }
            })
            .collect())
    }
}

/// Serialize model + scaler to the versioned binary layout: magic, version,
/// `M`, `d`, then little-endian f64 runs for mean (`M`), components
/// (column-major, `M * d`), mins (`d`), maxs (`d`).
pub fn encode_model(model: &PcaModel, scaler: &ComponentScaler) -> Result<Vec<u8>> {
    let (m, d) = (model.input_dim(), model.n_components());
    if scaler.mins.len() != d {
        return Err(Error::Dimension("scaler does not match model width".into()));
    }
    let mut out = Vec::with_capacity(16 + 8 * (m + m * d + 2 * d));
    out.extend_from_slice(MODEL_MAGIC);
    out.write_u32::<LittleEndian>(MODEL_VERSION)?;
    out.write_u32::<LittleEndian>(m as u32)?;
    out.write_u32::<LittleEndian>(d as u32)?;
    for &v in model.mean.iter() {
        out.write_f64::<LittleEndian>(v)?;
    }
    for k in 0..d {
        for j in 0..m {
            out.write_f64::<LittleEndian>(model.components[(j, k)])?;
        }
    }
    for &v in &scaler.mins {
        out.write_f64::<LittleEndian>(v)?;
    }
    for &v in &scaler.maxs {
        out.write_f64::<LittleEndian>(v)?;
    }
    Ok(out)
}

pub fn decode_model(bytes: &[u8]) -> Result<(PcaModel, ComponentScaler)> {
    let mut r = bytes;
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MODEL_MAGIC {
        return Err(Error::Format("not a pca model file".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != MODEL_VERSION {
        return Err(Error::Format(format!("unsupported pca model version {version}")));
    }
    let m = r.read_u32::<LittleEndian>()? as usize;
    let d = r.read_u32::<LittleEndian>()? as usize;
    let mut mean = vec![0.0; m];
    r.read_f64_into::<LittleEndian>(&mut mean)?;
    let mut components = Array2::<f64>::zeros((m, d));
    for k in 0..d {
        let mut col = vec![0.0; m];
        r.read_f64_into::<LittleEndian>(&mut col)?;
        for j in 0..m {
            components[(j, k)] = col[j];
        }
    }
    let mut mins = vec![0.0; d];
    let mut maxs = vec![0.0; d];
    r.read_f64_into::<LittleEndian>(&mut mins)?;
    r.read_f64_into::<LittleEndian>(&mut maxs)?;
    Ok((
        PcaModel {
            mean: Array1::from_vec(mean),
            components,
            explained_variance: Vec::new(),
        },
        ComponentScaler { mins, maxs },
    ))
}

/// Write the model file and return the SHA-256 of its bytes; the hash keys
/// embedding caches to the exact basis that produced them.
pub fn save_model(path: &Path, model: &PcaModel, scaler: &ComponentScaler) -> Result<[u8; 32]> {
    let bytes = encode_model(model, scaler)?;
    let mut f = File::create(path)?;
    f.write_all(&bytes)?;
    Ok(Sha256::digest(&bytes).into())
}

pub fn load_model(path: &Path) -> Result<(PcaModel, ComponentScaler, [u8; 32])> {
    let mut bytes = Vec::new();
    File::open(path)
        .map_err(|e| Error::Format(format!("cannot open {}: {e}", path.display())))?
        .read_to_end(&mut bytes)?;
    let (model, scaler) = decode_model(&bytes)?;
    Ok((model, scaler, Sha256::digest(&bytes).into()))
}
