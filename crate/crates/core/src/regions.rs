//! Edge-bounded region segmentation. Non-edge pixels are grouped into
//! 4-connected components; edge pixels are then absorbed into the region of
//! their nearest non-edge pixel so every pixel carries a label. Regions
//! gate both the bilateral filter's skip logic upstream and the inpainting
//! patch search downstream.
//!
//! 4-connectivity is deliberate: the thin 8-connected ridges Canny emits
//! only separate 4-connected components.

use crate::raster::{EdgeMap, PixelCoord, RasterError};

/// Per-pixel region labels. Labels are compacted to `0..region_count` in
/// row-major first-appearance order, so identical inputs always produce
/// identical label values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionLabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    region_count: u32,
}

impl RegionLabelMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn label(&self, x: usize, y: usize) -> u32 {
        debug_assert!(x < self.width && y < self.height);
        self.labels[y * self.width + x]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn region_count(&self) -> u32 {
        self.region_count
    }

    pub fn same_dims(&self, width: usize, height: usize) -> bool {
        self.width == width && self.height == height
    }
}

/// True iff `p` and `q` carry the same region label.
pub fn same_region(
    labels: &RegionLabelMap,
    p: PixelCoord,
    q: PixelCoord,
) -> Result<bool, RasterError> {
    for c in [p, q] {
        if c.x >= labels.width() || c.y >= labels.height() {
            return Err(RasterError::OutOfBounds {
                x: c.x,
                y: c.y,
                width: labels.width(),
                height: labels.height(),
            });
        }
    }
    Ok(labels.label(p.x, p.y) == labels.label(q.x, q.y))
}

/// Partitions the image into edge-bounded regions.
///
/// Non-edge pixels are labeled by 4-connected components; each edge pixel
/// then takes the label of its nearest non-edge pixel (exact Euclidean
/// distance, ties broken by the smallest label). Regions smaller than
/// `min_region_px` are merged into their largest 4-adjacent neighbor so
/// speckle does not starve the patch search; pass 1 to disable merging.
/// An all-edge map degenerates to a single region labeled 0.
pub fn label_regions(edges: &EdgeMap, min_region_px: usize) -> RegionLabelMap {
    let (w, h) = edges.dims();
    let n = w * h;

    const UNLABELED: u32 = u32::MAX;
    let mut labels = vec![UNLABELED; n];
    let mut count: u32 = 0;

    // 4-connected components over the non-edge set, row-major seed order.
    let mut stack = Vec::new();
    for start in 0..n {
        if edges.flags()[start] || labels[start] != UNLABELED {
            continue;
        }
        let label = count;
        count += 1;
        labels[start] = label;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let x = i % w;
            let y = i / w;
            let mut visit = |nx: usize, ny: usize| {
                let ni = ny * w + nx;
                if !edges.flags()[ni] && labels[ni] == UNLABELED {
                    labels[ni] = label;
                    stack.push(ni);
                }
            };
            if x > 0 {
                visit(x - 1, y);
            }
            if x + 1 < w {
                visit(x + 1, y);
            }
            if y > 0 {
                visit(x, y - 1);
            }
            if y + 1 < h {
                visit(x, y + 1);
            }
        }
    }

    if count == 0 {
        // All-edge map: one region covering everything.
        return RegionLabelMap {
            width: w,
            height: h,
            labels: vec![0; n],
            region_count: 1,
        };
    }

    // Absorb edge pixels into the nearest non-edge pixel's region.
    let assigned: Vec<u32> = (0..n)
        .map(|i| {
            if !edges.flags()[i] {
                return labels[i];
            }
            nearest_non_edge_label(edges, &labels, i % w, i / w)
        })
        .collect();
    let mut labels = assigned;

    if min_region_px > 1 {
        merge_tiny_regions(&mut labels, w, h, count, min_region_px);
    }

    let region_count = compact_labels(&mut labels);
    RegionLabelMap {
        width: w,
        height: h,
        labels,
        region_count,
    }
}

/// Expanding Chebyshev ring search for the nearest non-edge pixel; exact
/// squared Euclidean distances keep the comparison integer and ties
/// deterministic (smallest label wins).
fn nearest_non_edge_label(edges: &EdgeMap, labels: &[u32], x: usize, y: usize) -> u32 {
    let (w, h) = edges.dims();
    let mut best: Option<(usize, u32)> = None; // (dist2, label)
    let max_r = w.max(h);
    for r in 1..=max_r {
        if let Some((d2, _)) = best {
            if r * r > d2 {
                break;
            }
        }
        let xi = x as isize;
        let yi = y as isize;
        let ri = r as isize;
        let mut consider = |cx: isize, cy: isize| {
            if cx < 0 || cy < 0 || cx >= w as isize || cy >= h as isize {
                return;
            }
            let i = cy as usize * w + cx as usize;
            if edges.flags()[i] {
                return;
            }
            let dx = (cx - xi).unsigned_abs();
            let dy = (cy - yi).unsigned_abs();
            let d2 = dx * dx + dy * dy;
            let cand = (d2, labels[i]);
            if best.is_none_or(|b| cand < b) {
                best = Some(cand);
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
    best.expect("at least one non-edge pixel exists").1
}

/// Repeatedly merges the smallest undersized region into its largest
/// 4-adjacent neighbor until every region meets the size floor.
fn merge_tiny_regions(labels: &mut [u32], w: usize, h: usize, count: u32, min_px: usize) {
    loop {
        let mut sizes = vec![0usize; count as usize];
        for &l in labels.iter() {
            sizes[l as usize] += 1;
        }
        let live = sizes.iter().filter(|&&s| s > 0).count();
        if live <= 1 {
            return;
        }
        // smallest undersized region, ties to the smaller label
        let victim = (0..count as usize)
            .filter(|&l| sizes[l] > 0 && sizes[l] < min_px)
            .min_by_key(|&l| (sizes[l], l));
        let Some(victim) = victim else { return };
        let victim = victim as u32;

        let mut neighbor_sizes = vec![false; count as usize];
        for y in 0..h {
            for x in 0..w {
                if labels[y * w + x] != victim {
                    continue;
                }
                let mut look = |nx: usize, ny: usize| {
                    let l = labels[ny * w + nx];
                    if l != victim {
                        neighbor_sizes[l as usize] = true;
                    }
                };
                if x > 0 {
                    look(x - 1, y);
                }
                if x + 1 < w {
                    look(x + 1, y);
                }
                if y > 0 {
                    look(x, y - 1);
                }
                if y + 1 < h {
                    look(x, y + 1);
                }
            }
        }
        let target = (0..count as usize)
            .filter(|&l| neighbor_sizes[l])
            .max_by_key(|&l| (sizes[l], std::cmp::Reverse(l)));
        let Some(target) = target else { return };
        let target = target as u32;
        for l in labels.iter_mut() {
            if *l == victim {
                *l = target;
            }
        }
    }
}

/// Debug rendering: labels scaled across `[0, max_value]` so the partition
/// is visible in any graymap viewer.
pub fn labels_to_image(labels: &RegionLabelMap, max_value: f64) -> crate::raster::GrayImage {
    let n = labels.region_count().max(1) as f64;
    let data = labels
        .labels()
        .iter()
        .map(|&l| {
            if labels.region_count() <= 1 {
                0.0
            } else {
                (l as f64 / (n - 1.0) * max_value).round()
            }
        })
        .collect();
    crate::raster::GrayImage::new(labels.width(), labels.height(), data, max_value)
        .expect("scaled labels stay in range")
}

/// Renumbers labels to `0..k` in row-major first-appearance order.
fn compact_labels(labels: &mut [u32]) -> u32 {
    let mut remap = std::collections::HashMap::new();
    let mut next: u32 = 0;
    for l in labels.iter_mut() {
        let new = *remap.entry(*l).or_insert_with(|| {
            let v = next;
            next += 1;
            v
        });
        *l = new;
    }
    next
}
