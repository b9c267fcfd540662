//! Reconstruction quality metrics: MSE, global SSIM, and thresholded
//! Tenengrad sharpness.
//!
//! SSIM uses whole-image statistics (single window, data range 1) rather
//! than a sliding Gaussian window, and Tenengrad is computed on intensities
//! rescaled to `[0, 255]`; library implementations that window or scale
//! differently will not match these values. Aggregates use the population
//! standard deviation.

use crate::error::{Error, Result};

/// Per-set aggregates as mean plus population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub mse_mean: f64,
    pub mse_std: f64,
    pub ssim_mean: f64,
    pub ssim_std: f64,
    pub teng_mean: f64,
    pub teng_std: f64,
    pub n_images: usize,
}

/// Mean squared error over pixels.
pub fn mse(x: &[f64], x_hat: &[f64]) -> Result<f64> {
    if x.len() != x_hat.len() {
        return Err(Error::Dimension(format!(
            "mse operands differ: {} vs {}",
            x.len(),
            x_hat.len()
        )));
    }
    let m = x.len() as f64;
    Ok(x.iter().zip(x_hat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / m)
}

/// Global structural similarity with `c1 = (0.01 * Lr)^2`, `c2 = (0.03 * Lr)^2`
/// and data range `Lr = 1`. Whole-image means, variances and covariance;
/// population normalization.
pub fn ssim(x: &[f64], x_hat: &[f64]) -> Result<f64> {
    if x.len() != x_hat.len() || x.is_empty() {
        return Err(Error::Dimension(format!(
            "ssim operands differ or empty: {} vs {}",
            x.len(),
            x_hat.len()
        )));
    }
    const C1: f64 = 0.01 * 0.01;
    const C2: f64 = 0.03 * 0.03;
    let m = x.len() as f64;
    let mu_x = x.iter().sum::<f64>() / m;
    let mu_y = x_hat.iter().sum::<f64>() / m;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    let mut cov = 0.0;
    for (&a, &b) in x.iter().zip(x_hat) {
        let (da, db) = (a - mu_x, b - mu_y);
        var_x += da * da;
        var_y += db * db;
        cov += da * db;
    }
    var_x /= m;
    var_y /= m;
    cov /= m;
    Ok(((2.0 * mu_x * mu_y + C1) * (2.0 * cov + C2))
        / ((mu_x * mu_x + mu_y * mu_y + C1) * (var_x + var_y + C2)))
}

/// Thresholded Tenengrad sharpness of one image.
///
/// The image is rescaled to `[0, 255]`, convolved with the 3x3 Sobel kernels
/// over the valid interior (no padding), and the squared gradient magnitudes
/// exceeding `threshold` are summed and divided by the full pixel count.
pub fn teng(pixels: &[f64], height: usize, width: usize, threshold: f64) -> Result<f64> {
    if pixels.len() != height * width {
        return Err(Error::Dimension("teng pixel count mismatch".into()));
    }
    if height < 3 || width < 3 {
        return Err(Error::Dimension(format!(
            "teng needs at least 3x3, got {height}x{width}"
        )));
    }
    let at = |r: usize, c: usize| pixels[r * width + c] * 255.0;
    let mut sum = 0.0;
    for r in 1..height - 1 {
        for c in 1..width - 1 {
            let gx = at(r - 1, c + 1) + 2.0 * at(r, c + 1) + at(r + 1, c + 1)
                - at(r - 1, c - 1)
                - 2.0 * at(r, c - 1)
                - at(r + 1, c - 1);
            let gy = at(r + 1, c - 1) + 2.0 * at(r + 1, c) + at(r + 1, c + 1)
                - at(r - 1, c - 1)
                - 2.0 * at(r - 1, c)
                - at(r - 1, c + 1);
            let g_sq = gx * gx + gy * gy;
            if g_sq.sqrt() > threshold {
                sum += g_sq;
            }
        }
    }
    Ok(sum / (height * width) as f64)
}

/// Evaluate a set of `(reference, reconstruction)` pairs. MSE and SSIM
/// compare the pair; Tenengrad scores the reconstruction alone.
pub fn evaluate_set(
    pairs: &[(&[f64], &[f64])],
    height: usize,
    width: usize,
    teng_threshold: f64,
) -> Result<MetricReport> {
    if pairs.is_empty() {
        return Err(Error::Dimension("evaluate_set needs at least one pair".into()));
    }
    let mut mses = Vec::with_capacity(pairs.len());
    let mut ssims = Vec::with_capacity(pairs.len());
    let mut tengs = Vec::with_capacity(pairs.len());
    for (reference, reconstruction) in pairs {
        mses.push(mse(reference, reconstruction)?);
        ssims.push(ssim(reference, reconstruction)?);
        tengs.push(teng(reconstruction, height, width, teng_threshold)?);
    }
    let (mse_mean, mse_std) = mean_std(&mses);
    let (ssim_mean, ssim_std) = mean_std(&ssims);
    let (teng_mean, teng_std) = mean_std(&tengs);
    Ok(MetricReport {
        mse_mean,
        mse_std,
        ssim_mean,
        ssim_std,
        teng_mean,
        teng_std,
        n_images: pairs.len(),
    })
}

/// Mean and population standard deviation (divide by n).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
