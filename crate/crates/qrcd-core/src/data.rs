//! MNIST ingestion and speckle-noise synthesis.
//!
//! Images are parsed from the standard IDX format, corrupted with
//! multiplicative speckle noise `y = clip(x * (1 + sigma * g), 0, 1)` with
//! `g ~ N(0, 1)`, and flattened into `[0, 1]` vectors. The noise stream is
//! pinned for reproducibility: per image, a ChaCha8 generator seeded with
//! `derive_seed(seed, "noise", [index])` yields 53-bit uniforms in `(0, 1]`
//! that are turned into normals by the Box-Muller transform, consumed in
//! pairs. Identical `NoiseSpec` therefore gives bit-identical noisy data on
//! any platform.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::RngCore;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from};

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
/// Dataset pairs file: magic + version + counts + interleaved clean/noisy rows.
const DATASET_MAGIC: &[u8; 4] = b"QRDV";
const DATASET_VERSION: u32 = 1;

/// A set of grayscale images with pixels in `[0, 1]`, stored flattened
/// row-major.
#[derive(Debug, Clone)]
pub struct ImageSet {
    pub images: Vec<Vec<f64>>,
    pub height: usize,
    pub width: usize,
}

impl ImageSet {
    pub fn count(&self) -> usize {
        self.images.len()
    }

    /// Pixels per image.
    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }
}

/// One clean/noisy vector pair, both of length `M` with entries in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct NoisyPair {
    pub clean: Vec<f64>,
    pub noisy: Vec<f64>,
    pub index: usize,
}

/// Speckle-noise parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Standard deviation of the multiplicative Gaussian factor.
    pub sigma: f64,
    pub seed: u64,
}

/// Parse an IDX image file (big-endian magic 2051, count, rows, cols, then
/// `count * rows * cols` unsigned bytes). Pixels are scaled by 1/255.
pub fn parse_idx_images(bytes: &[u8]) -> Result<ImageSet> {
    if bytes.len() < 16 {
        return Err(Error::Format(format!(
            "idx header truncated: {} bytes",
            bytes.len()
        )));
    }
    let word = |i: usize| u32::from_be_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
    let magic = word(0);
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::Format(format!(
            "bad idx magic 0x{magic:08x}, expected 0x{IDX_IMAGES_MAGIC:08x}"
        )));
    }
    let count = word(1) as usize;
    let rows = word(2) as usize;
    let cols = word(3) as usize;
    let expected = 16 + count * rows * cols;
    if bytes.len() < expected {
        return Err(Error::Format(format!(
            "idx payload truncated: got {} bytes, header implies {}",
            bytes.len(),
            expected
        )));
    }
    let mut images = Vec::with_capacity(count);
    let m = rows * cols;
    for i in 0..count {
        let start = 16 + i * m;
        images.push(bytes[start..start + m].iter().map(|&b| f64::from(b) / 255.0).collect());
    }
    Ok(ImageSet {
        images,
        height: rows,
        width: cols,
    })
}

/// Read and parse an IDX image file from disk.
pub fn load_idx_images(path: &Path) -> Result<ImageSet> {
    let mut bytes = Vec::new();
    File::open(path)
        .map_err(|e| Error::Format(format!("cannot open {}: {e}", path.display())))?
        .read_to_end(&mut bytes)?;
    parse_idx_images(&bytes)
}

/// Serialize an image set back to IDX bytes (pixels quantized to u8).
pub fn write_idx_images(set: &ImageSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + set.count() * set.pixel_count());
    out.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    out.extend_from_slice(&(set.count() as u32).to_be_bytes());
    out.extend_from_slice(&(set.height as u32).to_be_bytes());
    out.extend_from_slice(&(set.width as u32).to_be_bytes());
    for img in &set.images {
        out.extend(img.iter().map(|&p| (p * 255.0).round().clamp(0.0, 255.0) as u8));
    }
    out
}

/// Standard normals from the pinned per-image stream: ChaCha8 uniforms in
/// `(0, 1]` fed through Box-Muller, pairs consumed in order.
pub struct GaussianStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    /// Stream for image `index` under noise seed `seed`.
    pub fn for_image(seed: u64, index: usize) -> Self {
        GaussianStream {
            rng: rng_from(derive_seed(seed, "noise", &[index as u64])),
            spare: None,
        }
    }

    fn uniform_open_closed(&mut self) -> f64 {
        // 53-bit mantissa, shifted into (0, 1].
        ((self.rng.next_u64() >> 11) as f64 + 1.0) * (1.0 / 9_007_199_254_740_992.0)
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform_open_closed();
        let u2 = self.uniform_open_closed();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// Corrupt every image with multiplicative speckle noise and clip to `[0, 1]`.
///
/// Each image owns an independent generator stream, so the operation is
/// order-free and deterministic for a fixed `NoiseSpec`.
pub fn apply_speckle(clean: &ImageSet, spec: &NoiseSpec) -> Result<Vec<NoisyPair>> {
    if spec.sigma < 0.0 {
        return Err(Error::Config(format!("sigma must be >= 0, got {}", spec.sigma)));
    }
    Ok(clean
        .images
        .iter()
        .enumerate()
        .map(|(index, img)| {
            let mut stream = GaussianStream::for_image(spec.seed, index);
            let noisy = img
                .iter()
                .map(|&p| (p * (1.0 + spec.sigma * stream.next_normal())).clamp(0.0, 1.0))
                .collect();
            NoisyPair {
                clean: img.clone(),
                noisy,
                index,
            }
        })
        .collect())
}

/// First `n_train` pairs of the training pool and first `n_test` of the test
/// pool, in file order. The pools come from different source files, so the
/// subsets are disjoint by construction.
pub fn take_subsets(
    train_pool: &[NoisyPair],
    test_pool: &[NoisyPair],
    n_train: usize,
    n_test: usize,
) -> Result<(Vec<NoisyPair>, Vec<NoisyPair>)> {
    if train_pool.len() < n_train {
        return Err(Error::Format(format!(
            "training pool has {} images, need {n_train}",
            train_pool.len()
        )));
    }
    if test_pool.len() < n_test {
        return Err(Error::Format(format!(
            "test pool has {} images, need {n_test}",
            test_pool.len()
        )));
    }
    Ok((train_pool[..n_train].to_vec(), test_pool[..n_test].to_vec()))
}

/// Write pairs to the versioned binary dataset format.
pub fn write_pairs(path: &Path, pairs: &[NoisyPair], height: usize, width: usize) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(DATASET_MAGIC)?;
    w.write_u32::<LittleEndian>(DATASET_VERSION)?;
    w.write_u64::<LittleEndian>(pairs.len() as u64)?;
    w.write_u64::<LittleEndian>((height * width) as u64)?;
    w.write_u32::<LittleEndian>(height as u32)?;
    w.write_u32::<LittleEndian>(width as u32)?;
    for pair in pairs {
        w.write_u64::<LittleEndian>(pair.index as u64)?;
        for &v in &pair.clean {
            w.write_f64::<LittleEndian>(v)?;
        }
        for &v in &pair.noisy {
            w.write_f64::<LittleEndian>(v)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read pairs from the dataset format. Returns `(pairs, height, width)`.
pub fn read_pairs(path: &Path) -> Result<(Vec<NoisyPair>, usize, usize)> {
    let mut r = File::open(path)
        .map_err(|e| Error::Format(format!("cannot open {}: {e}", path.display())))?;
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != DATASET_MAGIC {
        return Err(Error::Format(format!(
            "{} is not a dataset file (magic {:?})",
            path.display(),
            magic
        )));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != DATASET_VERSION {
        return Err(Error::Format(format!("unsupported dataset version {version}")));
    }
    let count = r.read_u64::<LittleEndian>()? as usize;
    let m = r.read_u64::<LittleEndian>()? as usize;
    let height = r.read_u32::<LittleEndian>()? as usize;
    let width = r.read_u32::<LittleEndian>()? as usize;
    if height * width != m {
        return Err(Error::Format("dataset header dimensions inconsistent".into()));
    }
    let mut pairs = Vec::with_capacity(count);
    for _ in 0..count {
        let index = r.read_u64::<LittleEndian>()? as usize;
        let mut clean = vec![0.0; m];
        let mut noisy = vec![0.0; m];
        r.read_f64_into::<LittleEndian>(&mut clean)?;
        r.read_f64_into::<LittleEndian>(&mut noisy)?;
        pairs.push(NoisyPair { clean, noisy, index });
    }
    Ok((pairs, height, width))
}

/// Write a grayscale image grid as binary PGM (P5, maxval 255).
///
/// `cells` is a row-major grid of flattened `[0, 1]` images, `rows * cols`
/// entries of `height * width` pixels each.
pub fn write_pgm_grid(
    path: &Path,
    cells: &[&[f64]],
    rows: usize,
    cols: usize,
    height: usize,
    width: usize,
) -> Result<()> {
    if cells.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "grid wants {} cells, got {}",
            rows * cols,
            cells.len()
        )));
    }
    for cell in cells {
        if cell.len() != height * width {
            return Err(Error::Dimension("grid cell has wrong pixel count".into()));
        }
    }
    let (grid_h, grid_w) = (rows * height, cols * width);
    let mut bytes = vec![0u8; grid_h * grid_w];
    for (i, cell) in cells.iter().enumerate() {
        let (r0, c0) = ((i / cols) * height, (i % cols) * width);
        for r in 0..height {
            for c in 0..width {
                bytes[(r0 + r) * grid_w + c0 + c] =
                    (cell[r * width + c] * 255.0).round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{grid_w} {grid_h}\n255\n")?;
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx_bytes(count: u32, rows: u32, cols: u32, pixels: &[u8]) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
        b.extend_from_slice(&count.to_be_bytes());
        b.extend_from_slice(&rows.to_be_bytes());
        b.extend_from_slice(&cols.to_be_bytes());
        b.extend_from_slice(pixels);
        b
    }

    #[test]
    fn parses_tiny_idx() {
        let set = parse_idx_images(&idx_bytes(1, 2, 2, &[0, 255, 128, 0])).unwrap();
        assert_eq!(set.count(), 1);
        assert_eq!(set.height, 2);
        assert_eq!(set.width, 2);
        assert_eq!(set.images[0], vec![0.0, 1.0, 128.0 / 255.0, 0.0]);
    }

    #[test]
    fn rejects_wrong_magic() {
        let mut b = idx_bytes(1, 1, 1, &[7]);
        b[3] = 0x01; // label-file magic 0x00000801
        assert!(matches!(parse_idx_images(&b), Err(Error::Format(_))));
    }

    #[test]
    fn rejects_truncated_payload() {
        let b = idx_bytes(2, 2, 2, &[1, 2, 3]); // 8 bytes promised, 3 given
        assert!(matches!(parse_idx_images(&b), Err(Error::Format(_))));
    }

    #[test]
    fn idx_round_trip_is_exact() {
        let set = ImageSet {
            images: vec![
                (0..9).map(|i| f64::from(i * 30) / 255.0).collect(),
                (0..9).map(|i| f64::from(255 - i * 20) / 255.0).collect(),
            ],
            height: 3,
            width: 3,
        };
        let back = parse_idx_images(&write_idx_images(&set)).unwrap();
        assert_eq!(back.images, set.images);
    }

    #[test]
    fn zero_sigma_is_identity() {
        let set = ImageSet {
            images: vec![vec![0.1, 0.5, 0.9, 1.0]],
            height: 2,
            width: 2,
        };
        let pairs = apply_speckle(&set, &NoiseSpec { sigma: 0.0, seed: 3 }).unwrap();
        assert_eq!(pairs[0].noisy, pairs[0].clean);
    }

    #[test]
    fn zero_pixels_stay_zero() {
        let set = ImageSet {
            images: vec![vec![0.0; 16]],
            height: 4,
            width: 4,
        };
        let pairs = apply_speckle(&set, &NoiseSpec { sigma: 5.0, seed: 3 }).unwrap();
        assert!(pairs[0].noisy.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn noise_is_deterministic_per_spec() {
        let set = ImageSet {
            images: vec![vec![0.4; 32], vec![0.6; 32]],
            height: 4,
            width: 8,
        };
        let spec = NoiseSpec { sigma: 0.7, seed: 11 };
        let a = apply_speckle(&set, &spec).unwrap();
        let b = apply_speckle(&set, &spec).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.noisy, y.noisy);
        }
        let c = apply_speckle(&set, &NoiseSpec { sigma: 0.7, seed: 12 }).unwrap();
        assert_ne!(a[0].noisy, c[0].noisy);
    }

    #[test]
    fn preclip_speckle_statistics_match_model() {
        // 10^6 pixels of value 0.5 at sigma = 0.7: the pre-clip product
        // 0.5 * (1 + 0.7 g) has mean 0.5 and std 0.35.
        let n = 1_000_000;
        let mut stream = GaussianStream::for_image(99, 0);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let v = 0.5 * (1.0 + 0.7 * stream.next_normal());
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / n as f64;
        let std = (sum_sq / n as f64 - mean * mean).sqrt();
        assert!((mean - 0.5).abs() < 0.002, "mean {mean}");
        assert!((std - 0.35).abs() < 0.01, "std {std}");
    }

    #[test]
    fn speckle_matches_clipped_stream() {
        let set = ImageSet {
            images: vec![(0..25).map(|i| f64::from(i) / 24.0).collect()],
            height: 5,
            width: 5,
        };
        let spec = NoiseSpec { sigma: 0.7, seed: 5 };
        let pairs = apply_speckle(&set, &spec).unwrap();
        let mut stream = GaussianStream::for_image(5, 0);
        for (p, &clean) in pairs[0].noisy.iter().zip(&set.images[0]) {
            let expect = (clean * (1.0 + 0.7 * stream.next_normal())).clamp(0.0, 1.0);
            assert_eq!(*p, expect);
        }
    }

    #[test]
    fn subsets_take_first_in_order() {
        let mk = |n: usize| -> Vec<NoisyPair> {
            (0..n)
                .map(|index| NoisyPair {
                    clean: vec![index as f64],
                    noisy: vec![index as f64],
                    index,
                })
                .collect()
        };
        let (train, test) = take_subsets(&mk(50), &mk(30), 10, 4).unwrap();
        assert_eq!(train.len(), 10);
        assert_eq!(test.len(), 4);
        assert_eq!(train[9].index, 9);

        let (empty, _) = take_subsets(&mk(5), &mk(5), 0, 1).unwrap();
        assert!(empty.is_empty());

        assert!(take_subsets(&mk(5), &mk(5), 6, 1).is_err());
    }

    #[test]
    fn pairs_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.qrdv");
        let pairs = vec![
            NoisyPair {
                clean: vec![0.0, 0.25, 0.5, 1.0],
                noisy: vec![0.1, 0.2, 0.3, 0.4],
                index: 7,
            },
            NoisyPair {
                clean: vec![1.0; 4],
                noisy: vec![0.9; 4],
                index: 8,
            },
        ];
        write_pairs(&path, &pairs, 2, 2).unwrap();
        let (back, h, w) = read_pairs(&path).unwrap();
        assert_eq!((h, w), (2, 2));
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].clean, pairs[0].clean);
        assert_eq!(back[0].noisy, pairs[0].noisy);
        assert_eq!(back[1].index, 8);
    }

    #[test]
    fn pgm_grid_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.pgm");
        let a = vec![0.0, 1.0, 0.5, 0.25];
        let b = vec![1.0; 4];
        write_pgm_grid(&path, &[&a, &b], 1, 2, 2, 2).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let header = b"P5\n4 2\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        // Row-major grid: first row is a's first row then b's first row.
        assert_eq!(&bytes[header.len()..], &[0, 255, 255, 255, 128, 64, 255, 255]);
    }
}
