//! Priority-driven exemplar inpainting with region-constrained patch search.
//!
//! The driver follows the isophote-guided scheme: every fill-front pixel
//! gets a priority `P(p) = C(p) * (D(p) + epsilon)`, the top-priority patch
//! is filled from the best-matching source patch, and confidence propagates
//! to the copied pixels. The twist over the classic scheme is the candidate
//! constraint: source patches must come from the same edge-bounded region
//! as the target, so depth from one surface never leaks into another. Every
//! iteration is recorded in an audit trail that makes the constraint
//! checkable after the fact.

use thiserror::Error;

use crate::raster::{GrayImage, PixelCoord, RasterError, TargetMask};
use crate::regions::RegionLabelMap;

#[derive(Debug, Error)]
pub enum InpaintError {
    #[error("patch size must be odd (got {0})")]
    EvenPatch(usize),
    #[error("patch size must be at least 3 (got {0})")]
    TinyPatch(usize),
    #[error("alpha must be positive (got {0})")]
    BadAlpha(f64),
    #[error("epsilon_d must be positive (got {0})")]
    BadEpsilon(f64),
    #[error("region starved: no candidate patch for target ({x}, {y}) even after dropping the region constraint")]
    RegionStarved { x: usize, y: usize },
    #[error("mask covers the whole image: nothing known to inpaint from")]
    NoKnownPixels,
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Square patch window; the side must be odd so the center is well defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchSpec {
    size: usize,
}

impl PatchSpec {
    pub fn new(size: usize) -> Result<Self, InpaintError> {
        if size.is_multiple_of(2) {
            return Err(InpaintError::EvenPatch(size));
        }
        if size < 3 {
            return Err(InpaintError::TinyPatch(size));
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Half-width: the patch spans `center +- half` in both axes.
    pub fn half(&self) -> usize {
        self.size / 2
    }

    pub fn area(&self) -> usize {
        self.size * self.size
    }
}

/// Per-pixel confidence values in `[0, 1]`: 1 for known pixels, 0 for the
/// target region, updated as patches are filled.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ConfidenceMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.values[y * self.width + x]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Overwrites one confidence value; used when a patch is filled.
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        debug_assert!(x < self.width && y < self.height);
        assert!(
            (0.0..=1.0).contains(&value),
            "confidence {value} outside [0, 1]"
        );
        self.values[y * self.width + x] = value;
    }
}

/// The evolving boundary of the target region: target pixels with at least
/// one known 4-neighbor, in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FillFront {
    pixels: Vec<PixelCoord>,
}

impl FillFront {
    pub fn pixels(&self) -> &[PixelCoord] {
        &self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

/// One inpainting iteration, auditable after the run: the region labels of
/// target and source must match unless `fallback` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct InpaintAuditRecord {
    pub target_center: PixelCoord,
    pub source_center: PixelCoord,
    pub priority: f64,
    pub distance: f64,
    pub region_label: u32,
    pub fallback: bool,
}

/// Driver knobs. `search_radius` bounds the candidate scan to a Chebyshev
/// window around the target (None = exhaustive full-image scan, the
/// correctness reference).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InpaintOptions {
    pub patch: PatchSpec,
    pub alpha: f64,
    pub epsilon_d: f64,
    pub search_radius: Option<usize>,
}

impl InpaintOptions {
    pub fn new(patch: PatchSpec, alpha: f64, epsilon_d: f64) -> Result<Self, InpaintError> {
        if alpha.is_nan() || alpha <= 0.0 {
            return Err(InpaintError::BadAlpha(alpha));
        }
        if epsilon_d.is_nan() || epsilon_d <= 0.0 {
            return Err(InpaintError::BadEpsilon(epsilon_d));
        }
        Ok(Self {
            patch,
            alpha,
            epsilon_d,
            search_radius: None,
        })
    }

    pub fn with_search_radius(mut self, radius: Option<usize>) -> Self {
        self.search_radius = radius;
        self
    }
}

/// Result of a completed inpainting run: the filled image, one audit record
/// per iteration, and the count of fill-front pixels whose normal was
/// degenerate (isolated single-pixel fronts).
#[derive(Debug, Clone)]
pub struct InpaintResult {
    pub image: GrayImage,
    pub audit: Vec<InpaintAuditRecord>,
    pub degenerate_normals: usize,
}

/// Best source patch found for one target: center, mean-SSD distance, and
/// whether the region constraint had to be dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestPatch {
    pub center: PixelCoord,
    pub distance: f64,
    pub fallback: bool,
}

/// Confidence is 0 inside the target region and 1 everywhere else.
pub fn init_confidence(mask: &TargetMask) -> ConfidenceMap {
    ConfidenceMap {
        width: mask.width(),
        height: mask.height(),
        values: mask
            .flags()
            .iter()
            .map(|&t| if t { 0.0 } else { 1.0 })
            .collect(),
    }
}

/// Mean confidence of the known pixels in the patch around `p`, with the
/// full patch area as denominator even when the window is clipped at the
/// border. Always in `[0, 1]`.
pub fn confidence_term(
    p: PixelCoord,
    conf: &ConfidenceMap,
    mask: &TargetMask,
    patch: &PatchSpec,
) -> f64 {
    let half = patch.half() as isize;
    let (w, h) = mask.dims();
    let mut sum = 0.0;
    for dy in -half..=half {
        let qy = p.y as isize + dy;
        if qy < 0 || qy >= h as isize {
            continue;
        }
        for dx in -half..=half {
            let qx = p.x as isize + dx;
            if qx < 0 || qx >= w as isize {
                continue;
            }
            if !mask.is_target(qx as usize, qy as usize) {
                sum += conf.get(qx as usize, qy as usize);
            }
        }
    }
    sum / patch.area() as f64
}

/// Isophote strength flowing into the front at `p`: `|grad_perp . n| / alpha`.
///
/// The image gradient is taken at the known pixel nearest `p`, using central
/// differences restricted to known pixels (one-sided where only one side is
/// known). The front normal comes from central differences of the mask
/// indicator; a zero mask gradient (isolated single-pixel front) falls back
/// to the (1, 0) direction.
pub fn data_term(p: PixelCoord, img: &GrayImage, mask: &TargetMask, alpha: f64) -> f64 {
    data_term_impl(p, img, mask, alpha).0
}

pub(crate) fn data_term_impl(
    p: PixelCoord,
    img: &GrayImage,
    mask: &TargetMask,
    alpha: f64,
) -> (f64, bool) {
    let k = nearest_known_pixel(p, mask);
    let (gx, gy) = known_gradient(k, img, mask);
    // isophote direction: the gradient rotated 90 degrees
    let (ix, iy) = (-gy, gx);

    let (w, h) = mask.dims();
    let m = |x: isize, y: isize| -> f64 {
        let cx = x.clamp(0, w as isize - 1) as usize;
        let cy = y.clamp(0, h as isize - 1) as usize;
        if mask.is_target(cx, cy) {
            1.0
        } else {
            0.0
        }
    };
    let nx = (m(p.x as isize + 1, p.y as isize) - m(p.x as isize - 1, p.y as isize)) / 2.0;
    let ny = (m(p.x as isize, p.y as isize + 1) - m(p.x as isize, p.y as isize - 1)) / 2.0;
    let norm = (nx * nx + ny * ny).sqrt();
    let (nx, ny, degenerate) = if norm == 0.0 {
        (1.0, 0.0, true)
    } else {
        (nx / norm, ny / norm, false)
    };

    ((ix * nx + iy * ny).abs() / alpha, degenerate)
}

/// Fill-order priority: `C(p) * (D(p) + epsilon_d)`. The epsilon keeps
/// priorities strictly positive on flat images so the confidence term still
/// drives an onion-peel ordering.
pub fn priority(
    p: PixelCoord,
    conf: &ConfidenceMap,
    img: &GrayImage,
    mask: &TargetMask,
    patch: &PatchSpec,
    alpha: f64,
    epsilon_d: f64,
) -> f64 {
    confidence_term(p, conf, mask, patch) * (data_term(p, img, mask, alpha) + epsilon_d)
}

/// Target pixels with at least one known in-bounds 4-neighbor, row-major.
pub fn fill_front(mask: &TargetMask) -> FillFront {
    let (w, h) = mask.dims();
    let mut pixels = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !mask.is_target(x, y) {
                continue;
            }
            let known = (x > 0 && !mask.is_target(x - 1, y))
                || (x + 1 < w && !mask.is_target(x + 1, y))
                || (y > 0 && !mask.is_target(x, y - 1))
                || (y + 1 < h && !mask.is_target(x, y + 1));
            if known {
                pixels.push(PixelCoord::new(x, y));
            }
        }
    }
    FillFront { pixels }
}

/// Mean squared sample difference between the patches at `a` and `b`,
/// averaged over the pixels of `a`'s patch that are in bounds and known.
/// Returns infinity when no such pixel exists. The patch at `b` must be
/// fully in bounds and fully known.
pub fn patch_distance(
    a: PixelCoord,
    b: PixelCoord,
    img: &GrayImage,
    mask: &TargetMask,
    patch: &PatchSpec,
) -> f64 {
    let half = patch.half() as isize;
    let (w, h) = img.dims();
    debug_assert!(
        b.x as isize - half >= 0
            && b.y as isize - half >= 0
            && b.x + patch.half() < w
            && b.y + patch.half() < h,
        "source patch out of bounds"
    );
    let mut sum = 0.0f64;
    let mut count = 0usize;
    for dy in -half..=half {
        let ay = a.y as isize + dy;
        if ay < 0 || ay >= h as isize {
            continue;
        }
        for dx in -half..=half {
            let ax = a.x as isize + dx;
            if ax < 0 || ax >= w as isize {
                continue;
            }
            if mask.is_target(ax as usize, ay as usize) {
                continue;
            }
            let bv = img.get((b.x as isize + dx) as usize, (b.y as isize + dy) as usize);
            debug_assert!(
                !mask.is_target((b.x as isize + dx) as usize, (b.y as isize + dy) as usize),
                "source patch touches the target mask"
            );
            let d = img.get(ax as usize, ay as usize) - bv;
            sum += d * d;
            count += 1;
        }
    }
    if count == 0 {
        f64::INFINITY
    } else {
        sum / count as f64
    }
}

/// Finds the candidate patch center minimizing [`patch_distance`].
///
/// Candidates are scanned in row-major order (ties keep the earliest) and
/// must (i) lie fully in bounds, (ii) be fully known, and (iii) share the
/// target's region label. If the region yields no candidate the constraint
/// is dropped and the scan retried (flagged as fallback); a windowed scan
/// additionally widens to the full image before giving up.
pub fn find_best_patch(
    target: PixelCoord,
    img: &GrayImage,
    mask: &TargetMask,
    labels: &RegionLabelMap,
    patch: &PatchSpec,
    search_radius: Option<usize>,
) -> Result<BestPatch, InpaintError> {
    let (w, h) = img.dims();
    if !labels.same_dims(w, h) || !mask.same_dims(w, h) {
        return Err(RasterError::DimensionMismatch(w, h, labels.width(), labels.height()).into());
    }

    // Known-pixel offsets of the target patch and their samples; identical
    // for every candidate, so the scan only varies the source side.
    let half = patch.half() as isize;
    let mut offsets: Vec<(isize, isize, f64)> = Vec::with_capacity(patch.area());
    for dy in -half..=half {
        let ay = target.y as isize + dy;
        if ay < 0 || ay >= h as isize {
            continue;
        }
        for dx in -half..=half {
            let ax = target.x as isize + dx;
            if ax < 0 || ax >= w as isize {
                continue;
            }
            if !mask.is_target(ax as usize, ay as usize) {
                offsets.push((dx, dy, img.get(ax as usize, ay as usize)));
            }
        }
    }

    let target_label = labels.label(target.x, target.y);

    let attempts: &[(Option<usize>, bool)] = if search_radius.is_some() {
        &[
            (search_radius, true),
            (search_radius, false),
            (None, false),
        ]
    } else {
        &[(None, true), (None, false)]
    };

    for (attempt, &(window, constrained)) in attempts.iter().enumerate() {
        if let Some(best) = scan_candidates(
            target,
            &offsets,
            img,
            mask,
            labels,
            patch,
            window,
            constrained.then_some(target_label),
        ) {
            return Ok(BestPatch {
                center: best.0,
                distance: best.1,
                fallback: attempt > 0,
            });
        }
    }
    Err(InpaintError::RegionStarved {
        x: target.x,
        y: target.y,
    })
}

/// Row-major argmin over valid candidate centers; `sum > best_sum` aborts a
/// candidate early, which cannot change the argmin or the tie-break.
#[allow(clippy::too_many_arguments)]
fn scan_candidates(
    target: PixelCoord,
    offsets: &[(isize, isize, f64)],
    img: &GrayImage,
    mask: &TargetMask,
    labels: &RegionLabelMap,
    patch: &PatchSpec,
    window: Option<usize>,
    required_label: Option<u32>,
) -> Option<(PixelCoord, f64)> {
    let (w, h) = img.dims();
    let half = patch.half();
    if w < patch.size() || h < patch.size() {
        return None;
    }

    let (x0, x1, y0, y1) = match window {
        Some(r) => (
            target.x.saturating_sub(r).max(half),
            (target.x + r).min(w - 1 - half),
            target.y.saturating_sub(r).max(half),
            (target.y + r).min(h - 1 - half),
        ),
        None => (half, w - 1 - half, half, h - 1 - half),
    };
    if x0 > x1 || y0 > y1 {
        return None;
    }

    // mask prefix sums over the patch-expanded candidate window, so the
    // fully-known test is O(1) per candidate
    let rx0 = x0 - half;
    let ry0 = y0 - half;
    let rw = x1 + half - rx0 + 1;
    let rh = y1 + half - ry0 + 1;
    let prefix = windowed_prefix(mask, rx0, ry0, rw, rh);

    let mut best: Option<(PixelCoord, f64)> = None;
    let mut best_sum = f64::INFINITY;
    for qy in y0..=y1 {
        for qx in x0..=x1 {
            if let Some(label) = required_label {
                if labels.label(qx, qy) != label {
                    continue;
                }
            }
            if rect_count(&prefix, rw, qx - half - rx0, qy - half - ry0, patch.size()) != 0 {
                continue;
            }
            let mut sum = 0.0f64;
            let mut aborted = false;
            for &(dx, dy, tv) in offsets {
                let sv = img.get(
                    (qx as isize + dx) as usize,
                    (qy as isize + dy) as usize,
                );
                let d = tv - sv;
                sum += d * d;
                if sum > best_sum {
                    aborted = true;
                    break;
                }
            }
            if aborted {
                continue;
            }
            // offsets can be empty only if the whole target patch is
            // unknown; every candidate then ties at distance infinity and
            // the first in scan order wins.
            let dist = if offsets.is_empty() {
                f64::INFINITY
            } else {
                sum / offsets.len() as f64
            };
            if best.is_none() || sum < best_sum {
                best = Some((PixelCoord::new(qx, qy), dist));
                best_sum = sum;
            }
        }
    }
    best
}

/// Fills the target region. Each iteration picks the top-priority front
/// pixel (row-major tie-break), copies the best source patch into the still
/// unknown pixels of the target patch, propagates the center's confidence
/// to them, and clears them from the mask. Known pixels are never modified
/// and the loop clears at least one pixel per iteration, so it terminates.
pub fn inpaint(
    img: &GrayImage,
    mask: &TargetMask,
    labels: &RegionLabelMap,
    options: &InpaintOptions,
) -> Result<InpaintResult, InpaintError> {
    let (w, h) = img.dims();
    if !mask.same_dims(w, h) {
        return Err(RasterError::DimensionMismatch(w, h, mask.width(), mask.height()).into());
    }
    if !labels.same_dims(w, h) {
        return Err(RasterError::DimensionMismatch(w, h, labels.width(), labels.height()).into());
    }
    if options.alpha.is_nan() || options.alpha <= 0.0 {
        return Err(InpaintError::BadAlpha(options.alpha));
    }
    if options.epsilon_d.is_nan() || options.epsilon_d <= 0.0 {
        return Err(InpaintError::BadEpsilon(options.epsilon_d));
    }

    let mut working = img.clone();
    let mut mask = mask.clone();
    let mut conf = init_confidence(&mask);
    let mut audit = Vec::new();
    let mut degenerate_normals = 0usize;
    let patch = options.patch;
    let half = patch.half() as isize;

    // The front is maintained incrementally and priorities are cached:
    // a priority is a pure function of image/mask/confidence state within
    // Chebyshev distance max(half, 2) of its pixel, so after a fill only
    // the pixels in that halo around the patch need recomputation. Results
    // are bit-identical to recomputing everything each iteration.
    let mut front: std::collections::BTreeSet<PixelCoord> =
        fill_front(&mask).pixels().iter().copied().collect();
    let mut prio_cache = vec![f64::NAN; w * h];
    let mut conf_cache = vec![0.0f64; w * h];
    let mut cache_ok = vec![false; w * h];
    let halo = (patch.half()).max(2) as isize;

    while mask.target_count() > 0 {
        if front.is_empty() {
            return Err(InpaintError::NoKnownPixels);
        }

        // top-priority front pixel; strict > keeps the row-major earliest
        let mut chosen = *front.iter().next().expect("nonempty front");
        let mut chosen_priority = f64::NEG_INFINITY;
        let mut chosen_conf = 0.0;
        for &p in front.iter() {
            let i = p.y * w + p.x;
            if !cache_ok[i] {
                let c = confidence_term(p, &conf, &mask, &patch);
                let (d, degenerate) = data_term_impl(p, &working, &mask, options.alpha);
                if degenerate {
                    degenerate_normals += 1;
                }
                prio_cache[i] = c * (d + options.epsilon_d);
                conf_cache[i] = c;
                cache_ok[i] = true;
            }
            if prio_cache[i] > chosen_priority {
                chosen_priority = prio_cache[i];
                chosen = p;
                chosen_conf = conf_cache[i];
            }
        }

        let best = find_best_patch(
            chosen,
            &working,
            &mask,
            labels,
            &patch,
            options.search_radius,
        )?;

        for dy in -half..=half {
            let ty = chosen.y as isize + dy;
            if ty < 0 || ty >= h as isize {
                continue;
            }
            for dx in -half..=half {
                let tx = chosen.x as isize + dx;
                if tx < 0 || tx >= w as isize {
                    continue;
                }
                let (tx, ty) = (tx as usize, ty as usize);
                if !mask.is_target(tx, ty) {
                    continue;
                }
                let sv = working.get(
                    (best.center.x as isize + dx) as usize,
                    (best.center.y as isize + dy) as usize,
                );
                working.set(tx, ty, sv);
                conf.set(tx, ty, chosen_conf);
                mask.clear(tx, ty);
            }
        }

        // refresh front membership in the patch rect plus one ring, and
        // invalidate cached priorities in the dependency halo
        let fx0 = (chosen.x as isize - half - 1).max(0) as usize;
        let fx1 = ((chosen.x as isize + half + 1) as usize).min(w - 1);
        let fy0 = (chosen.y as isize - half - 1).max(0) as usize;
        let fy1 = ((chosen.y as isize + half + 1) as usize).min(h - 1);
        for y in fy0..=fy1 {
            for x in fx0..=fx1 {
                let is_front = mask.is_target(x, y)
                    && ((x > 0 && !mask.is_target(x - 1, y))
                        || (x + 1 < w && !mask.is_target(x + 1, y))
                        || (y > 0 && !mask.is_target(x, y - 1))
                        || (y + 1 < h && !mask.is_target(x, y + 1)));
                let p = PixelCoord::new(x, y);
                if is_front {
                    front.insert(p);
                } else {
                    front.remove(&p);
                }
            }
        }
        let ix0 = (chosen.x as isize - half - halo).max(0) as usize;
        let ix1 = ((chosen.x as isize + half + halo) as usize).min(w - 1);
        let iy0 = (chosen.y as isize - half - halo).max(0) as usize;
        let iy1 = ((chosen.y as isize + half + halo) as usize).min(h - 1);
        for y in iy0..=iy1 {
            for x in ix0..=ix1 {
                cache_ok[y * w + x] = false;
            }
        }

        audit.push(InpaintAuditRecord {
            target_center: chosen,
            source_center: best.center,
            priority: chosen_priority,
            distance: best.distance,
            region_label: labels.label(chosen.x, chosen.y),
            fallback: best.fallback,
        });
    }

    Ok(InpaintResult {
        image: working,
        audit,
        degenerate_normals,
    })
}

/// Nearest known pixel by exact Euclidean distance, ties resolved in
/// row-major order. `p` itself wins when it is already known.
fn nearest_known_pixel(p: PixelCoord, mask: &TargetMask) -> PixelCoord {
    if !mask.is_target(p.x, p.y) {
        return p;
    }
    let (w, h) = mask.dims();
    let mut best: Option<(usize, PixelCoord)> = None;
    let max_r = w.max(h);
    for r in 1..=max_r {
        if let Some((d2, _)) = best {
            if r * r > d2 {
                break;
            }
        }
        let xi = p.x as isize;
        let yi = p.y as isize;
        let ri = r as isize;
        let mut consider = |cx: isize, cy: isize| {
            if cx < 0 || cy < 0 || cx >= w as isize || cy >= h as isize {
                return;
            }
            if mask.is_target(cx as usize, cy as usize) {
                return;
            }
            let dx = (cx - xi).unsigned_abs();
            let dy = (cy - yi).unsigned_abs();
            let cand_d2 = dx * dx + dy * dy;
            let cand = PixelCoord::new(cx as usize, cy as usize);
            match best {
                Some((d2, q)) if (cand_d2, cand) >= (d2, q) => {}
                _ => best = Some((cand_d2, cand)),
            }
        };
        for cx in (xi - ri)..=(xi + ri) {
            consider(cx, yi - ri);
            consider(cx, yi + ri);
        }
        for cy in (yi - ri + 1)..(yi + ri) {
            consider(xi - ri, cy);
            consider(xi + ri, cy);
        }
    }
    best.map(|(_, q)| q).unwrap_or(p)
}

/// Central differences over known pixels only; one-sided when a neighbor is
/// unknown or out of bounds, zero when both sides are unavailable.
fn known_gradient(k: PixelCoord, img: &GrayImage, mask: &TargetMask) -> (f64, f64) {
    let (w, h) = img.dims();
    let valid = |x: isize, y: isize| -> Option<f64> {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            return None;
        }
        if mask.is_target(x as usize, y as usize) {
            return None;
        }
        Some(img.get(x as usize, y as usize))
    };
    let center = img.get(k.x, k.y);
    let axis = |a: Option<f64>, b: Option<f64>| -> f64 {
        match (a, b) {
            (Some(l), Some(r)) => (r - l) / 2.0,
            (None, Some(r)) => r - center,
            (Some(l), None) => center - l,
            (None, None) => 0.0,
        }
    };
    let gx = axis(
        valid(k.x as isize - 1, k.y as isize),
        valid(k.x as isize + 1, k.y as isize),
    );
    let gy = axis(
        valid(k.x as isize, k.y as isize - 1),
        valid(k.x as isize, k.y as isize + 1),
    );
    (gx, gy)
}

/// 2D prefix sums of the mask flags over the rectangle at (rx0, ry0) of
/// size rw x rh, laid out (rw+1) x (rh+1).
fn windowed_prefix(mask: &TargetMask, rx0: usize, ry0: usize, rw: usize, rh: usize) -> Vec<u32> {
    let w = mask.width();
    let mut p = vec![0u32; (rw + 1) * (rh + 1)];
    for y in 0..rh {
        let mut row = 0u32;
        for x in 0..rw {
            row += mask.flags()[(ry0 + y) * w + rx0 + x] as u32;
            p[(y + 1) * (rw + 1) + (x + 1)] = p[y * (rw + 1) + (x + 1)] + row;
        }
    }
    p
}

#[inline]
fn rect_count(prefix: &[u32], rw: usize, x: usize, y: usize, side: usize) -> u32 {
    let stride = rw + 1;
    let (x1, y1) = (x + side, y + side);
    prefix[y1 * stride + x1] + prefix[y * stride + x]
        - prefix[y * stride + x1]
        - prefix[y1 * stride + x]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::EdgeMap;
    use crate::regions::label_regions;

    fn mask_from(w: usize, h: usize, targets: &[(usize, usize)]) -> TargetMask {
        let mut flags = vec![false; w * h];
        for &(x, y) in targets {
            flags[y * w + x] = true;
        }
        TargetMask::new(w, h, flags).unwrap()
    }

    fn single_region(w: usize, h: usize) -> RegionLabelMap {
        label_regions(&EdgeMap::empty(w, h).unwrap(), 1)
    }

    #[test]
    fn init_confidence_zero_on_target() {
        let mask = mask_from(2, 1, &[(0, 0)]);
        let conf = init_confidence(&mask);
        assert_eq!(conf.values(), &[0.0, 1.0]);

        let empty = TargetMask::empty(3, 3).unwrap();
        assert!(init_confidence(&empty).values().iter().all(|&v| v == 1.0));

        let full = TargetMask::new(2, 2, vec![true; 4]).unwrap();
        assert!(init_confidence(&full).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn confidence_term_counts_known_fraction() {
        // 3x3 patch with 5 target pixels, 4 known at confidence 1 -> 4/9
        let mask = mask_from(8, 8, &[(4, 4), (5, 4), (4, 5), (5, 5), (3, 4)]);
        let conf = init_confidence(&mask);
        let patch = PatchSpec::new(3).unwrap();
        let c = confidence_term(PixelCoord::new(4, 4), &conf, &mask, &patch);
        assert!((c - 4.0 / 9.0).abs() < 1e-12, "got {c}");
    }

    #[test]
    fn confidence_term_full_patch_known_is_one() {
        let mask = mask_from(9, 9, &[(0, 0)]);
        let conf = init_confidence(&mask);
        let patch = PatchSpec::new(3).unwrap();
        let c = confidence_term(PixelCoord::new(5, 5), &conf, &mask, &patch);
        assert_eq!(c, 1.0);
    }

    #[test]
    fn confidence_term_inside_target_is_zero() {
        let mut targets = Vec::new();
        for y in 2..7 {
            for x in 2..7 {
                targets.push((x, y));
            }
        }
        let mask = mask_from(9, 9, &targets);
        let conf = init_confidence(&mask);
        let patch = PatchSpec::new(3).unwrap();
        assert_eq!(
            confidence_term(PixelCoord::new(4, 4), &conf, &mask, &patch),
            0.0
        );
    }

    #[test]
    fn data_term_constant_image_is_zero() {
        let img = GrayImage::constant(8, 8, 77.0, 255.0).unwrap();
        let mask = mask_from(8, 8, &[(4, 4), (4, 5)]);
        assert_eq!(data_term(PixelCoord::new(4, 4), &img, &mask, 255.0), 0.0);
    }

    #[test]
    fn data_term_front_parallel_to_step_is_zero() {
        // Vertical step at x=3; target band covers columns {4, 5} so the
        // front runs parallel to the step. Hand-derivation: for p = (4, 3)
        // the nearest known pixel is (3, 3); gx there is one-sided
        // I(3,3) - I(2,3) = 255, gy = 0, so the isophote is (0, 255). The
        // mask gradient at p is horizontal, normal (1, 0). Dot product 0.
        let img =
            GrayImage::from_fn(8, 8, 255.0, |x, _| if x < 3 { 0.0 } else { 255.0 }).unwrap();
        let targets: Vec<(usize, usize)> = (0..8).flat_map(|y| [(4, y), (5, y)]).collect();
        let mask = mask_from(8, 8, &targets);
        let d = data_term(PixelCoord::new(4, 3), &img, &mask, 255.0);
        assert_eq!(d, 0.0);
    }

    #[test]
    fn data_term_front_perpendicular_to_step_is_maximal() {
        // Vertical step at x=4, horizontal target band rows {4, 5}: the
        // front runs across the step, normal vertical. Hand-derivation for
        // p = (4, 4): nearest known pixel is (4, 3); gx central over known
        // pixels = (I(5,3) - I(3,3)) / 2 = 127.5, gy one-sided
        // I(4,3) - I(4,2) = 0. Isophote = (0, 127.5). Mask gradient at p:
        // nx = 0, ny = 1/2 -> normal (0, 1). |dot| = 127.5, D = 0.5.
        let img =
            GrayImage::from_fn(8, 8, 255.0, |x, _| if x < 4 { 0.0 } else { 255.0 }).unwrap();
        let targets: Vec<(usize, usize)> = (0..8).flat_map(|x| [(x, 4), (x, 5)]).collect();
        let mask = mask_from(8, 8, &targets);
        let d = data_term(PixelCoord::new(4, 4), &img, &mask, 255.0);
        assert!((d - 0.5).abs() < 1e-12, "got {d}");
    }

    #[test]
    fn data_term_single_pixel_front_uses_default_normal() {
        // isolated target pixel: mask gradient vanishes, normal defaults to
        // (1, 0), so D picks up the horizontal isophote component.
        let img = GrayImage::from_fn(8, 8, 255.0, |_, y| (y * 30) as f64).unwrap();
        let mask = mask_from(8, 8, &[(4, 4)]);
        let (d, degenerate) = data_term_impl(PixelCoord::new(4, 4), &img, &mask, 255.0);
        assert!(degenerate);
        // nearest known is (4, 3) (row-major tie-break): gx = 0, gy = 30
        // via the one-sided difference; isophote = (-30, 0);
        // |dot with (1,0)| = 30 -> D = 30/255
        assert!((d - 30.0 / 255.0).abs() < 1e-6, "got {d}");
    }

    #[test]
    fn priority_examples() {
        let patch = PatchSpec::new(3).unwrap();
        // C = 0 patch: fully inside target -> priority 0 regardless of D
        let mut targets = Vec::new();
        for y in 1..8 {
            for x in 1..8 {
                targets.push((x, y));
            }
        }
        let mask = mask_from(9, 9, &targets);
        let conf = init_confidence(&mask);
        let img = GrayImage::from_fn(9, 9, 255.0, |x, _| (x * 20) as f64).unwrap();
        let p = PixelCoord::new(4, 4);
        assert_eq!(priority(p, &conf, &img, &mask, &patch, 255.0, 1e-3), 0.0);

        // constant image (D = 0) with C = 0.5 -> priority exactly 5e-4.
        // The 8 known patch cells carry confidence 0.5625 = 9/16 (exact in
        // binary), so C = 8 * 0.5625 / 9 = 0.5.
        let img2 = GrayImage::constant(5, 5, 9.0, 255.0).unwrap();
        let mask2 = mask_from(5, 5, &[(2, 2)]);
        let mut conf2 = init_confidence(&mask2);
        for y in 0..5 {
            for x in 0..5 {
                if !mask2.is_target(x, y) {
                    conf2.set(x, y, 0.5625);
                }
            }
        }
        let c = confidence_term(PixelCoord::new(2, 2), &conf2, &mask2, &patch);
        assert_eq!(c, 0.5);
        let pr = priority(PixelCoord::new(2, 2), &conf2, &img2, &mask2, &patch, 255.0, 1e-3);
        assert_eq!(pr, 0.5 * 1e-3);

        // the multiplicative form itself: C = 1, D = 1, eps 1e-3 -> 1.001
        assert!((1.0f64 * (1.0 + 1e-3) - 1.001).abs() < 1e-12);
    }

    #[test]
    fn fill_front_examples() {
        assert!(fill_front(&TargetMask::empty(4, 4).unwrap()).is_empty());

        let single = mask_from(5, 5, &[(2, 2)]);
        let front = fill_front(&single);
        assert_eq!(front.pixels(), &[PixelCoord::new(2, 2)]);

        // 4x4 solid block inside 8x8: every block pixel with a block-external
        // 4-neighbor, i.e. the 12 perimeter pixels
        let mut targets = Vec::new();
        for y in 2..6 {
            for x in 2..6 {
                targets.push((x, y));
            }
        }
        let mask = mask_from(8, 8, &targets);
        let front = fill_front(&mask);
        assert_eq!(front.len(), 12);
        for p in front.pixels() {
            assert!(mask.is_target(p.x, p.y));
            assert!(p.x == 2 || p.x == 5 || p.y == 2 || p.y == 5);
        }
    }

    #[test]
    fn patch_distance_examples() {
        let patch = PatchSpec::new(3).unwrap();
        // identical fully-valid patches -> 0
        let img = GrayImage::from_fn(10, 4, 255.0, |x, y| ((x % 5) * 10 + y) as f64).unwrap();
        let mask = TargetMask::empty(10, 4).unwrap();
        let d = patch_distance(
            PixelCoord::new(1, 1),
            PixelCoord::new(6, 1),
            &img,
            &mask,
            &patch,
        );
        assert_eq!(d, 0.0);

        // hand-computed mean SSD: valid a-pixels [10, 20] vs [13, 24]
        let data_a = vec![
            0.0, 0.0, 0.0, 0.0, 0.0, 0.0, //
            0.0, 10.0, 20.0, 0.0, 13.0, 24.0, //
            0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        ];
        let img2 = GrayImage::new(6, 3, data_a, 255.0).unwrap();
        // a-patch at (1,1): mask everything except (1,1) and (2,1); the
        // source patch at (4,1) must stay fully known
        let mut flags = vec![true; 18];
        flags[6 + 1] = false;
        flags[6 + 2] = false;
        for y in 0..3 {
            for x in 3..6 {
                flags[y * 6 + x] = false;
            }
        }
        let mask2 = TargetMask::new(6, 3, flags).unwrap();
        let d2 = patch_distance(
            PixelCoord::new(1, 1),
            PixelCoord::new(4, 1),
            &img2,
            &mask2,
            &patch,
        );
        assert!((d2 - 12.5).abs() < 1e-12, "got {d2}");

        // no valid pixels in the a-patch -> infinity
        let mut flags3 = vec![false; 18];
        for y in 0..3 {
            for x in 0..3 {
                flags3[y * 6 + x] = true;
            }
        }
        let mask3 = TargetMask::new(6, 3, flags3).unwrap();
        let d3 = patch_distance(
            PixelCoord::new(1, 1),
            PixelCoord::new(4, 1),
            &img2,
            &mask3,
            &patch,
        );
        assert!(d3.is_infinite());
    }

    #[test]
    fn find_best_patch_prefers_exact_match() {
        // Periodic texture guarantees an exact copy of the target's context.
        let img = GrayImage::from_fn(12, 6, 255.0, |x, y| ((x % 4) * 20 + y * 3) as f64).unwrap();
        let mask = mask_from(12, 6, &[(2, 2)]);
        let labels = single_region(12, 6);
        let patch = PatchSpec::new(3).unwrap();
        let best =
            find_best_patch(PixelCoord::new(2, 2), &img, &mask, &labels, &patch, None).unwrap();
        assert_eq!(best.distance, 0.0);
        assert!(!best.fallback);
        // the exact-match center shares x-phase with the target
        assert_eq!(best.center.x % 4, 2);
        assert_eq!(best.center.y, 2);
    }

    #[test]
    fn find_best_patch_ties_break_row_major() {
        // constant image: every candidate has distance 0; earliest wins
        let img = GrayImage::constant(9, 9, 50.0, 255.0).unwrap();
        let mask = mask_from(9, 9, &[(4, 4)]);
        let labels = single_region(9, 9);
        let patch = PatchSpec::new(3).unwrap();
        let best =
            find_best_patch(PixelCoord::new(4, 4), &img, &mask, &labels, &patch, None).unwrap();
        // first candidate whose 3x3 patch avoids (4,4): scan order starts at
        // (1,1), whose patch spans (0..2,0..2) -- valid immediately
        assert_eq!(best.center, PixelCoord::new(1, 1));
        assert_eq!(best.distance, 0.0);
    }

    #[test]
    fn find_best_patch_respects_region_constraint() {
        // Two regions split by a vertical edge at x=8 in a 16x16 image.
        // The best global match sits in the right region; the left-region
        // match must win anyway.
        let mut edge_flags = vec![false; 16 * 16];
        for y in 0..16 {
            edge_flags[y * 16 + 8] = true;
        }
        let edges = EdgeMap::new(16, 16, edge_flags).unwrap();
        let labels = label_regions(&edges, 1);

        // left region: gentle vertical gradient; right region: exact copy of
        // the target context (so globally it would win with distance 0)
        let img = GrayImage::from_fn(16, 16, 255.0, |x, y| {
            if x < 8 {
                (y * 10 + x) as f64
            } else if (10..=14).contains(&x) && (2..=6).contains(&y) {
                // plant the context of the hole at (3,4) shifted: copy of
                // rows around it
                ((y + 2) * 10 + (x - 9)) as f64
            } else {
                200.0
            }
        })
        .unwrap();
        let mask = mask_from(16, 16, &[(3, 4)]);
        let patch = PatchSpec::new(3).unwrap();

        let constrained =
            find_best_patch(PixelCoord::new(3, 4), &img, &mask, &labels, &patch, None).unwrap();
        assert!(!constrained.fallback);
        assert!(
            labels.label(constrained.center.x, constrained.center.y) == labels.label(3, 4),
            "candidate must stay in the target's region"
        );

        // independent exhaustive oracle over left-region candidates
        let mut best_oracle: Option<(f64, PixelCoord)> = None;
        for qy in 1..15 {
            for qx in 1..15 {
                if labels.label(qx, qy) != labels.label(3, 4) {
                    continue;
                }
                let mut ok = true;
                for dy in -1i32..=1 {
                    for dx in -1i32..=1 {
                        let sx = (qx as i32 + dx) as usize;
                        let sy = (qy as i32 + dy) as usize;
                        if mask.is_target(sx, sy) {
                            ok = false;
                        }
                    }
                }
                if !ok {
                    continue;
                }
                let d = patch_distance(
                    PixelCoord::new(3, 4),
                    PixelCoord::new(qx, qy),
                    &img,
                    &mask,
                    &patch,
                );
                if best_oracle.is_none_or(|(bd, _)| d < bd) {
                    best_oracle = Some((d, PixelCoord::new(qx, qy)));
                }
            }
        }
        assert_eq!(constrained.center, best_oracle.unwrap().1);
    }

    #[test]
    fn find_best_patch_falls_back_when_region_starved() {
        // The target's region is a corner pocket {(0,0), (1,0), (0,1)} (the
        // absorbed edge pixels tie toward the pocket's smaller label). No
        // 3x3 patch center in that region is fully in bounds, so the search
        // must drop the region constraint and flag the fallback.
        let edges = EdgeMap::new(8, 8, {
            let mut f = vec![false; 64];
            f[1] = true; // (1,0)
            f[8] = true; // (0,1)
            f[9] = true; // (1,1)
            f
        })
        .unwrap();
        let labels = label_regions(&edges, 1);
        assert_eq!(labels.region_count(), 2);
        let img = GrayImage::constant(8, 8, 31.0, 255.0).unwrap();
        let mask = mask_from(8, 8, &[(0, 0)]);
        let patch = PatchSpec::new(3).unwrap();
        let best =
            find_best_patch(PixelCoord::new(0, 0), &img, &mask, &labels, &patch, None).unwrap();
        assert!(best.fallback);
        assert_ne!(
            labels.label(best.center.x, best.center.y),
            labels.label(0, 0)
        );
    }

    #[test]
    fn inpaint_empty_mask_is_identity() {
        let img = GrayImage::from_fn(6, 6, 255.0, |x, y| (x + y) as f64).unwrap();
        let mask = TargetMask::empty(6, 6).unwrap();
        let labels = single_region(6, 6);
        let options = InpaintOptions::new(PatchSpec::new(3).unwrap(), 255.0, 1e-3).unwrap();
        let result = inpaint(&img, &mask, &labels, &options).unwrap();
        assert_eq!(result.image, img);
        assert!(result.audit.is_empty());
    }

    #[test]
    fn inpaint_single_hole_in_constant_image() {
        let img = GrayImage::constant(7, 7, 120.0, 255.0).unwrap();
        let mask = mask_from(7, 7, &[(3, 3)]);
        let labels = single_region(7, 7);
        let options = InpaintOptions::new(PatchSpec::new(3).unwrap(), 255.0, 1e-3).unwrap();
        let result = inpaint(&img, &mask, &labels, &options).unwrap();
        assert!(result.image.data().iter().all(|&v| v == 120.0));
        assert_eq!(result.audit.len(), 1);
        assert_eq!(result.audit[0].distance, 0.0);
    }

    #[test]
    fn inpaint_clears_mask_and_respects_regions() {
        // 12x12, two regions, 3x3 hole in the left region
        let mut edge_flags = vec![false; 12 * 12];
        for y in 0..12 {
            edge_flags[y * 12 + 7] = true;
        }
        let edges = EdgeMap::new(12, 12, edge_flags).unwrap();
        let labels = label_regions(&edges, 1);
        let img = GrayImage::from_fn(12, 12, 255.0, |x, y| {
            if x < 7 {
                (20 + (y % 3) * 5) as f64
            } else {
                (200 - (y % 4) as i32 * 7) as f64
            }
        })
        .unwrap();
        let mut targets = Vec::new();
        for y in 4..7 {
            for x in 2..5 {
                targets.push((x, y));
            }
        }
        let mask = mask_from(12, 12, &targets);
        let options = InpaintOptions::new(PatchSpec::new(3).unwrap(), 255.0, 1e-3).unwrap();
        let result = inpaint(&img, &mask, &labels, &options).unwrap();

        // final mask empty is implied by returning; verify known pixels
        // untouched and audit region-consistent
        for y in 0..12 {
            for x in 0..12 {
                if !mask.is_target(x, y) {
                    assert_eq!(result.image.get(x, y), img.get(x, y));
                }
            }
        }
        for rec in &result.audit {
            assert!(!rec.fallback);
            assert_eq!(
                labels.label(rec.source_center.x, rec.source_center.y),
                labels.label(rec.target_center.x, rec.target_center.y)
            );
        }
        assert!(!result.audit.is_empty());
    }

    #[test]
    fn inpaint_whole_image_mask_errors() {
        let img = GrayImage::constant(5, 5, 10.0, 255.0).unwrap();
        let mask = TargetMask::new(5, 5, vec![true; 25]).unwrap();
        let labels = single_region(5, 5);
        let options = InpaintOptions::new(PatchSpec::new(3).unwrap(), 255.0, 1e-3).unwrap();
        assert!(matches!(
            inpaint(&img, &mask, &labels, &options),
            Err(InpaintError::NoKnownPixels)
        ));
    }

    #[test]
    fn patch_spec_validation() {
        assert!(PatchSpec::new(4).is_err());
        assert!(PatchSpec::new(1).is_err());
        assert!(PatchSpec::new(5).is_ok());
    }

    #[test]
    fn windowed_search_matches_full_scan_when_window_covers_image() {
        let img = GrayImage::from_fn(10, 10, 255.0, |x, y| ((x * 7 + y * 3) % 97) as f64).unwrap();
        let mask = mask_from(10, 10, &[(5, 5)]);
        let labels = single_region(10, 10);
        let patch = PatchSpec::new(3).unwrap();
        let full =
            find_best_patch(PixelCoord::new(5, 5), &img, &mask, &labels, &patch, None).unwrap();
        let windowed = find_best_patch(
            PixelCoord::new(5, 5),
            &img,
            &mask,
            &labels,
            &patch,
            Some(100),
        )
        .unwrap();
        assert_eq!(full.center, windowed.center);
        assert_eq!(full.distance, windowed.distance);
    }
}
