//! PSNR computation, improvement deltas, and wall-clock timing.

use std::time::Instant;

use crate::raster::{GrayImage, RasterError};

/// One benchmark cell: a (sample, patch size) pair with its PSNR numbers.
/// `elapsed_ms` is wall-clock and therefore excluded from deterministic
/// CSV reports.
#[derive(Debug, Clone, PartialEq)]
pub struct PsnrReport {
    pub sample_id: String,
    pub patch_size: usize,
    pub psnr_noisy_db: f64,
    pub psnr_denoised_db: f64,
    pub improvement_db: f64,
    pub elapsed_ms: f64,
}

/// Peak signal-to-noise ratio in dB: `10 * log10(max_value^2 / MSE)`.
/// Identical images have zero MSE and report the infinity sentinel.
pub fn psnr(reference: &GrayImage, test: &GrayImage) -> Result<f64, RasterError> {
    if !test.same_dims(reference.width(), reference.height()) {
        return Err(RasterError::DimensionMismatch(
            reference.width(),
            reference.height(),
            test.width(),
            test.height(),
        ));
    }
    let mut sum = 0.0f64;
    for (&a, &b) in reference.data().iter().zip(test.data()) {
        let d = a - b;
        sum += d * d;
    }
    let mse = sum / reference.pixel_count() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    let peak = reference.max_value();
    Ok(10.0 * (peak * peak / mse).log10())
}

/// PSNR gained by denoising: `psnr(gt, denoised) - psnr(gt, noisy)`.
///
/// Infinity sentinels propagate: a perfect restoration of a noisy input
/// reports +inf, a denoiser that corrupts a clean input reports -inf, and
/// two perfect inputs report 0 (nothing to improve).
pub fn improvement(
    gt: &GrayImage,
    noisy: &GrayImage,
    denoised: &GrayImage,
) -> Result<f64, RasterError> {
    let after = psnr(gt, denoised)?;
    let before = psnr(gt, noisy)?;
    if after.is_infinite() && before.is_infinite() {
        return Ok(0.0);
    }
    Ok(after - before)
}

/// Runs `f`, returning its result and the elapsed wall-clock milliseconds
/// from a monotonic clock.
pub fn time_op<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let result = f();
    (result, start.elapsed().as_secs_f64() * 1e3)
}
