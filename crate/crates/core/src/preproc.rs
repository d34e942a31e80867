//! Pre-processing before region extraction: histogram-based intensity
//! clustering (suppresses sensor jitter so edges come out clean) followed by
//! Canny salient-edge detection.
//!
//! Canny runs the standard pipeline: Gaussian smoothing, 3x3 Sobel
//! gradients, non-maximum suppression, then double-threshold hysteresis
//! with 8-connected tracking. Borders are handled by clamping so no phantom
//! edges appear at the frame.

use thiserror::Error;

use crate::raster::{EdgeMap, GrayImage};

#[derive(Debug, Error)]
pub enum PreprocError {
    #[error("bins must be at least 1")]
    ZeroBins,
    #[error("gaussian_sigma must be positive (got {0})")]
    BadSigma(f64),
    #[error("thresholds must satisfy 0 <= low <= high (got low {low}, high {high})")]
    BadThresholds { low: f64, high: f64 },
}

/// Histogram clustering parameters: the number of equal-width bins
/// partitioning `[0, max_value]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HistogramClusterParams {
    bins: usize,
}

impl HistogramClusterParams {
    pub fn new(bins: usize) -> Result<Self, PreprocError> {
        if bins == 0 {
            return Err(PreprocError::ZeroBins);
        }
        Ok(Self { bins })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }
}

impl Default for HistogramClusterParams {
    fn default() -> Self {
        Self { bins: 32 }
    }
}

/// Canny parameters. When `relative_thresholds` is set, `low_threshold` and
/// `high_threshold` are fractions of the image's maximum gradient magnitude,
/// which adapts the detector across depth ranges; otherwise they are
/// absolute gradient magnitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CannyParams {
    gaussian_sigma: f64,
    low_threshold: f64,
    high_threshold: f64,
    relative_thresholds: bool,
}

impl CannyParams {
    pub fn new(
        gaussian_sigma: f64,
        low_threshold: f64,
        high_threshold: f64,
        relative_thresholds: bool,
    ) -> Result<Self, PreprocError> {
        if gaussian_sigma.is_nan() || gaussian_sigma <= 0.0 {
            return Err(PreprocError::BadSigma(gaussian_sigma));
        }
        if low_threshold.is_nan()
            || high_threshold.is_nan()
            || low_threshold < 0.0
            || high_threshold < low_threshold
        {
            return Err(PreprocError::BadThresholds {
                low: low_threshold,
                high: high_threshold,
            });
        }
        Ok(Self {
            gaussian_sigma,
            low_threshold,
            high_threshold,
            relative_thresholds,
        })
    }

    pub fn gaussian_sigma(&self) -> f64 {
        self.gaussian_sigma
    }

    pub fn low_threshold(&self) -> f64 {
        self.low_threshold
    }

    pub fn high_threshold(&self) -> f64 {
        self.high_threshold
    }

    pub fn relative_thresholds(&self) -> bool {
        self.relative_thresholds
    }
}

impl Default for CannyParams {
    fn default() -> Self {
        Self {
            gaussian_sigma: 1.4,
            low_threshold: 0.1,
            high_threshold: 0.3,
            relative_thresholds: true,
        }
    }
}

/// Replaces every sample by the mean of the samples falling in its histogram
/// bin. Bins are equal-width intervals over `[0, max_value]`; the output has
/// at most `bins` distinct values and the operation is idempotent.
pub fn histogram_cluster(img: &GrayImage, params: &HistogramClusterParams) -> GrayImage {
    let bins = params.bins();
    let max = img.max_value();
    let bin_of = |v: f64| -> usize {
        let idx = (v * bins as f64 / max) as usize;
        idx.min(bins - 1)
    };

    let mut sums = vec![0.0f64; bins];
    let mut counts = vec![0usize; bins];
    let mut lo = vec![f64::INFINITY; bins];
    let mut hi = vec![f64::NEG_INFINITY; bins];
    for &v in img.data() {
        let b = bin_of(v);
        sums[b] += v;
        counts[b] += 1;
        lo[b] = lo[b].min(v);
        hi[b] = hi[b].max(v);
    }
    // A bin of identical samples has that value as its exact mean; taking
    // it directly avoids summation round-off and makes clustering exactly
    // idempotent.
    let means: Vec<f64> = (0..bins)
        .map(|b| {
            if counts[b] == 0 {
                0.0
            } else if lo[b] == hi[b] {
                lo[b]
            } else {
                sums[b] / counts[b] as f64
            }
        })
        .collect();

    let data = img.data().iter().map(|&v| means[bin_of(v)]).collect();
    GrayImage::new(img.width(), img.height(), data, img.max_value())
        .expect("bin means stay within the bin's sample range")
}

/// Standard Canny edge extraction. Output edges are thin: non-maximum
/// suppression breaks plateau ties so no 2-wide ridge survives along the
/// gradient direction.
pub fn canny_edges(img: &GrayImage, params: &CannyParams) -> EdgeMap {
    let (w, h) = img.dims();
    // Work on min-subtracted samples: gradients are unchanged and constant
    // shifts of the input cancel exactly instead of perturbing plateau ties.
    let min = img.data().iter().cloned().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = img
        .data()
        .iter()
        .map(|&v| v - min)
        .collect();
    let blurred = gaussian_blur(&shifted, w, h, params.gaussian_sigma());
    let (gx, gy) = sobel(&blurred, w, h);
    let mag: Vec<f64> = gx
        .iter()
        .zip(&gy)
        .map(|(&x, &y)| x.hypot(y))
        .collect();

    let (low, high) = if params.relative_thresholds() {
        let gmax = mag.iter().cloned().fold(0.0f64, f64::max);
        (params.low_threshold() * gmax, params.high_threshold() * gmax)
    } else {
        (params.low_threshold(), params.high_threshold())
    };

    let thinned = non_maximum_suppression(&mag, &gx, &gy, w, h);
    hysteresis(&thinned, w, h, low, high)
}

/// Separable Gaussian smoothing with clamped borders.
fn gaussian_blur(img: &[f64], w: usize, h: usize, sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as isize;
    let mut kernel = Vec::with_capacity(2 * radius as usize + 1);
    for i in -radius..=radius {
        kernel.push((-(i * i) as f64 / (2.0 * sigma * sigma)).exp());
    }
    let norm: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= norm;
    }

    let mut horiz = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (ki, &kv) in kernel.iter().enumerate() {
                let sx = (x as isize + ki as isize - radius).clamp(0, w as isize - 1) as usize;
                acc += img[y * w + sx] * kv;
            }
            horiz[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (ki, &kv) in kernel.iter().enumerate() {
                let sy = (y as isize + ki as isize - radius).clamp(0, h as isize - 1) as usize;
                acc += horiz[sy * w + x] * kv;
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// 3x3 Sobel gradients with clamped borders.
fn sobel(buf: &[f64], w: usize, h: usize) -> (Vec<f64>, Vec<f64>) {
    let at = |x: isize, y: isize| -> f64 {
        let cx = x.clamp(0, w as isize - 1) as usize;
        let cy = y.clamp(0, h as isize - 1) as usize;
        buf[cy * w + cx]
    };
    let mut gx = vec![0.0f64; w * h];
    let mut gy = vec![0.0f64; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let tl = at(x - 1, y - 1);
            let tc = at(x, y - 1);
            let tr = at(x + 1, y - 1);
            let ml = at(x - 1, y);
            let mr = at(x + 1, y);
            let bl = at(x - 1, y + 1);
            let bc = at(x, y + 1);
            let br = at(x + 1, y + 1);
            let i = y as usize * w + x as usize;
            gx[i] = (tr + 2.0 * mr + br) - (tl + 2.0 * ml + bl);
            gy[i] = (bl + 2.0 * bc + br) - (tl + 2.0 * tc + tr);
        }
    }
    (gx, gy)
}

/// Keeps only pixels that are local maxima along the quantized gradient
/// direction. Plateaus keep exactly one pixel: the candidate must strictly
/// exceed its "before" neighbor and be >= its "after" neighbor.
fn non_maximum_suppression(mag: &[f64], gx: &[f64], gy: &[f64], w: usize, h: usize) -> Vec<f64> {
    let at = |x: isize, y: isize| -> f64 {
        let cx = x.clamp(0, w as isize - 1) as usize;
        let cy = y.clamp(0, h as isize - 1) as usize;
        mag[cy * w + cx]
    };
    let mut out = vec![0.0f64; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            let m = mag[i];
            if m == 0.0 {
                continue;
            }
            let mut angle = gy[i].atan2(gx[i]).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            // (before, after) neighbors along the gradient direction
            let (before, after) = if !(22.5..157.5).contains(&angle) {
                (at(x - 1, y), at(x + 1, y))
            } else if angle < 67.5 {
                (at(x - 1, y - 1), at(x + 1, y + 1))
            } else if angle < 112.5 {
                (at(x, y - 1), at(x, y + 1))
            } else {
                (at(x + 1, y - 1), at(x - 1, y + 1))
            };
            if m > before && m >= after {
                out[i] = m;
            }
        }
    }
    out
}

/// Double-threshold hysteresis: strong pixels seed an 8-connected flood over
/// pixels at or above the low threshold.
fn hysteresis(thinned: &[f64], w: usize, h: usize, low: f64, high: f64) -> EdgeMap {
    let mut flags = vec![false; w * h];
    let mut stack = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if thinned[i] >= high && thinned[i] > 0.0 && !flags[i] {
                flags[i] = true;
                stack.push((x, y));
                while let Some((cx, cy)) = stack.pop() {
                    for dy in -1isize..=1 {
                        for dx in -1isize..=1 {
                            if dx == 0 && dy == 0 {
                                continue;
                            }
                            let nx = cx as isize + dx;
                            let ny = cy as isize + dy;
                            if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                                continue;
                            }
                            let ni = ny as usize * w + nx as usize;
                            if !flags[ni] && thinned[ni] >= low && thinned[ni] > 0.0 {
                                flags[ni] = true;
                                stack.push((nx as usize, ny as usize));
                            }
                        }
                    }
                }
            }
        }
    }
    EdgeMap::new(w, h, flags).expect("dimensions come from the input image")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(w: usize, h: usize, data: Vec<f64>) -> GrayImage {
        GrayImage::new(w, h, data, 255.0).unwrap()
    }

    #[test]
    fn cluster_keeps_samples_already_at_bin_means() {
        let input = img(2, 2, vec![10.0, 10.0, 200.0, 200.0]);
        let out = histogram_cluster(&input, &HistogramClusterParams::new(2).unwrap());
        assert_eq!(out.data(), &[10.0, 10.0, 200.0, 200.0]);
    }

    #[test]
    fn cluster_replaces_samples_with_bin_means() {
        // bins over [0,255]: [0,127.5) and [127.5,255]; means 25 and 225.
        let input = img(4, 1, vec![0.0, 50.0, 200.0, 250.0]);
        let out = histogram_cluster(&input, &HistogramClusterParams::new(2).unwrap());
        assert_eq!(out.data(), &[25.0, 25.0, 225.0, 225.0]);
    }

    #[test]
    fn single_bin_collapses_to_global_mean() {
        let input = img(2, 2, vec![0.0, 10.0, 20.0, 30.0]);
        let out = histogram_cluster(&input, &HistogramClusterParams::new(1).unwrap());
        assert!(out.data().iter().all(|&v| v == 15.0));
    }

    #[test]
    fn cluster_preserves_dimensions() {
        let input = img(3, 5, (0..15).map(|v| v as f64).collect());
        let out = histogram_cluster(&input, &HistogramClusterParams::default());
        assert_eq!(out.dims(), (3, 5));
    }

    #[test]
    fn canny_constant_image_has_no_edges() {
        let input = GrayImage::constant(16, 16, 99.0, 255.0).unwrap();
        let edges = canny_edges(&input, &CannyParams::default());
        assert_eq!(edges.edge_count(), 0);
    }

    #[test]
    fn canny_step_yields_single_vertical_line() {
        // Left half 0, right half 255; the edge should be one thin vertical
        // line at the step column (+-1), spanning the full image height.
        let w = 16;
        let h = 12;
        let step = w / 2;
        let input = GrayImage::from_fn(w, h, 255.0, |x, _| if x < step { 0.0 } else { 255.0 })
            .unwrap();
        let params = CannyParams::new(1.0, 20.0, 60.0, false).unwrap();
        let edges = canny_edges(&input, &params);

        let mut cols = std::collections::BTreeSet::new();
        let mut rows = std::collections::BTreeSet::new();
        for y in 0..h {
            let mut per_row = 0;
            for x in 0..w {
                if edges.is_edge(x, y) {
                    cols.insert(x);
                    rows.insert(y);
                    per_row += 1;
                }
            }
            assert_eq!(per_row, 1, "row {y} should hold exactly one edge pixel");
        }
        assert_eq!(cols.len(), 1, "edge must be a single column, got {cols:?}");
        let col = *cols.iter().next().unwrap();
        assert!(
            (col as isize - step as isize).unsigned_abs() <= 1,
            "edge column {col} not within 1 of step {step}"
        );
        assert_eq!(rows.len(), h, "edge must span the full height");
    }

    #[test]
    fn canny_subthreshold_bump_is_suppressed() {
        // A lone 10-unit bump produces Sobel magnitude well below the
        // absolute low threshold of 200, so nothing survives hysteresis.
        let mut data = vec![100.0f64; 15 * 15];
        data[7 * 15 + 7] = 110.0;
        let input = img(15, 15, data);
        let params = CannyParams::new(1.0, 200.0, 400.0, false).unwrap();
        let edges = canny_edges(&input, &params);
        assert_eq!(edges.edge_count(), 0);
    }

    #[test]
    fn canny_is_invariant_to_constant_shift() {
        let base = GrayImage::from_fn(20, 14, 255.0, |x, y| {
            if (x / 5 + y / 4) % 2 == 0 {
                40.0
            } else {
                160.0
            }
        })
        .unwrap();
        let shifted = GrayImage::from_fn(20, 14, 255.0, |x, y| base.get(x, y) + 30.0).unwrap();
        let params = CannyParams::default();
        assert_eq!(
            canny_edges(&base, &params).flags(),
            canny_edges(&shifted, &params).flags()
        );
    }

    #[test]
    fn step_edge_component_is_connected_full_height() {
        let w = 24;
        let h = 17;
        let input =
            GrayImage::from_fn(w, h, 255.0, |x, _| if x < 12 { 10.0 } else { 240.0 }).unwrap();
        let edges = canny_edges(&input, &CannyParams::default());

        // flood fill from the topmost edge pixel, 8-connected
        let start = (0..w * h).find(|&i| edges.flags()[i]).expect("some edge");
        let mut seen = vec![false; w * h];
        seen[start] = true;
        let mut stack = vec![(start % w, start / w)];
        while let Some((x, y)) = stack.pop() {
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    let nx = x as isize + dx;
                    let ny = y as isize + dy;
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let ni = ny as usize * w + nx as usize;
                    if edges.flags()[ni] && !seen[ni] {
                        seen[ni] = true;
                        stack.push((nx as usize, ny as usize));
                    }
                }
            }
        }
        let ys: std::collections::BTreeSet<usize> = (0..w * h)
            .filter(|&i| seen[i])
            .map(|i| i / w)
            .collect();
        assert!(ys.contains(&0) && ys.contains(&(h - 1)));
    }

    #[test]
    fn rejects_bad_params() {
        assert!(HistogramClusterParams::new(0).is_err());
        assert!(CannyParams::new(0.0, 0.1, 0.3, true).is_err());
        assert!(CannyParams::new(1.0, 0.5, 0.3, true).is_err());
        assert!(CannyParams::new(1.0, -0.1, 0.3, true).is_err());
    }
}
