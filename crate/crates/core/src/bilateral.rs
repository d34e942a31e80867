//! Edge-gated joint bilateral filtering.
//!
//! Each output sample is the normalized window sum
//! `(1/k_p) * sum_q depth(q) * f(||p-q||) * g(|guide(p)-guide(q)|)` with
//! Gaussian kernels `f` (spatial) and `g` (range over the guide image).
//! Pixels near a salient edge and pixels inside the inpainting target are
//! passed through untouched: the first preserves distinct structures, the
//! second leaves unknown samples to the inpainting stage. Target pixels are
//! also excluded from every window sum so garbage never diffuses outward.

use thiserror::Error;

use crate::raster::{EdgeMap, GrayImage, RasterError, TargetMask};

#[derive(Debug, Error)]
pub enum BilateralError {
    #[error("sigma_s must be positive (got {0})")]
    BadSigmaS(f64),
    #[error("sigma_r must be positive (got {0})")]
    BadSigmaR(f64),
    #[error("radius must be at least 1")]
    ZeroRadius,
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Filter parameters. `radius` is the half-width of the square window;
/// `edge_skip_dist` is the Chebyshev distance from an edge pixel within
/// which samples are passed through unfiltered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilateralParams {
    sigma_s: f64,
    sigma_r: f64,
    radius: usize,
    edge_skip_dist: usize,
}

impl BilateralParams {
    pub fn new(
        sigma_s: f64,
        sigma_r: f64,
        radius: usize,
        edge_skip_dist: usize,
    ) -> Result<Self, BilateralError> {
        if sigma_s.is_nan() || sigma_s <= 0.0 {
            return Err(BilateralError::BadSigmaS(sigma_s));
        }
        if sigma_r.is_nan() || sigma_r <= 0.0 {
            return Err(BilateralError::BadSigmaR(sigma_r));
        }
        if radius == 0 {
            return Err(BilateralError::ZeroRadius);
        }
        Ok(Self {
            sigma_s,
            sigma_r,
            radius,
            edge_skip_dist,
        })
    }

    /// Defaults for an image with the given dynamic range: sigma_s 3 px,
    /// sigma_r a tenth of the range, radius 2*sigma_s, skip distance 1.
    pub fn defaults_for(max_value: f64) -> Self {
        let sigma_s = 3.0;
        Self {
            sigma_s,
            sigma_r: 0.1 * max_value,
            radius: (2.0 * sigma_s).ceil() as usize,
            edge_skip_dist: 1,
        }
    }

    pub fn sigma_s(&self) -> f64 {
        self.sigma_s
    }

    pub fn sigma_r(&self) -> f64 {
        self.sigma_r
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn edge_skip_dist(&self) -> usize {
        self.edge_skip_dist
    }
}

/// Counters for pixels the filter left untouched.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BilateralStats {
    /// Pixels within `edge_skip_dist` of a salient edge.
    pub edge_skipped: usize,
    /// Pixels inside the target mask (owned by inpainting).
    pub masked: usize,
    /// Pixels whose whole window was masked (normalizer was zero).
    pub empty_window: usize,
}

/// Applies the edge-gated joint bilateral filter.
///
/// The window is clipped at image borders and the normalizer `k_p`
/// renormalizes automatically; no border samples are invented. With
/// `guide == depth` this is the classic bilateral filter.
pub fn joint_bilateral(
    depth: &GrayImage,
    guide: &GrayImage,
    edges: &EdgeMap,
    params: &BilateralParams,
    mask: &TargetMask,
) -> Result<(GrayImage, BilateralStats), BilateralError> {
    let (w, h) = depth.dims();
    if !guide.same_dims(w, h) {
        return Err(RasterError::DimensionMismatch(w, h, guide.width(), guide.height()).into());
    }
    if !edges.same_dims(w, h) {
        return Err(RasterError::DimensionMismatch(w, h, edges.width(), edges.height()).into());
    }
    if !mask.same_dims(w, h) {
        return Err(RasterError::DimensionMismatch(w, h, mask.width(), mask.height()).into());
    }

    let near_edge = dilate_chebyshev(edges, params.edge_skip_dist());
    let r = params.radius() as isize;
    let spatial = spatial_kernel(params.radius(), params.sigma_s());
    let inv_2sr2 = 1.0 / (2.0 * params.sigma_r() * params.sigma_r());

    let mut stats = BilateralStats::default();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if mask.flags()[i] {
                stats.masked += 1;
                out.push(depth.get(x, y));
                continue;
            }
            if near_edge[i] {
                stats.edge_skipped += 1;
                out.push(depth.get(x, y));
                continue;
            }
            let gp = guide.get(x, y);
            let mut num = 0.0f64;
            let mut k = 0.0f64;
            for dy in -r..=r {
                let qy = y as isize + dy;
                if qy < 0 || qy >= h as isize {
                    continue;
                }
                for dx in -r..=r {
                    let qx = x as isize + dx;
                    if qx < 0 || qx >= w as isize {
                        continue;
                    }
                    let qi = qy as usize * w + qx as usize;
                    if mask.flags()[qi] {
                        continue;
                    }
                    let f = spatial[(dy + r) as usize * (2 * r as usize + 1) + (dx + r) as usize];
                    let dg = gp - guide.data()[qi];
                    let g = (-(dg * dg) * inv_2sr2).exp();
                    let wgt = f * g;
                    num += depth.data()[qi] * wgt;
                    k += wgt;
                }
            }
            if k == 0.0 {
                stats.empty_window += 1;
                out.push(depth.get(x, y));
            } else {
                out.push(num / k);
            }
        }
    }
    let img = GrayImage::new(w, h, out, depth.max_value())?;
    Ok((img, stats))
}

fn spatial_kernel(radius: usize, sigma_s: f64) -> Vec<f64> {
    let side = 2 * radius + 1;
    let inv = 1.0 / (2.0 * sigma_s * sigma_s);
    let mut k = Vec::with_capacity(side * side);
    for dy in -(radius as isize)..=radius as isize {
        for dx in -(radius as isize)..=radius as isize {
            let d2 = (dx * dx + dy * dy) as f64;
            k.push((-d2 * inv).exp());
        }
    }
    k
}

/// Marks every pixel within Chebyshev distance `dist` of an edge pixel.
/// Separable: a horizontal max-run pass followed by a vertical one.
fn dilate_chebyshev(edges: &EdgeMap, dist: usize) -> Vec<bool> {
    let (w, h) = edges.dims();
    if dist == 0 {
        return edges.flags().to_vec();
    }
    let d = dist as isize;
    let mut horiz = vec![false; w * h];
    for y in 0..h {
        for x in 0..w as isize {
            let lo = (x - d).max(0) as usize;
            let hi = ((x + d) as usize).min(w - 1);
            horiz[y * w + x as usize] = (lo..=hi).any(|sx| edges.flags()[y * w + sx]);
        }
    }
    let mut out = vec![false; w * h];
    for y in 0..h as isize {
        let lo = (y - d).max(0) as usize;
        let hi = ((y + d) as usize).min(h - 1);
        for x in 0..w {
            out[y as usize * w + x] = (lo..=hi).any(|sy| horiz[sy * w + x]);
        }
    }
    out
}
