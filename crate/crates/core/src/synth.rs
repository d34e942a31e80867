//! Seeded synthetic depth scenes used by the benchmark harness, the tests,
//! and the browser demo. Scenes are piecewise-smooth: a background ramp
//! plus a few rectangles and a disk at distinct depths, mimicking the
//! planar-surfaces-plus-occlusions structure of indoor RGB-D frames.
//!
//! All samples are integers in [20, 250] so that PGM round trips are exact
//! and additive noise at benchmark scale can never clamp a sample to the
//! hole sentinel 0.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::raster::GrayImage;

/// Deterministic piecewise-smooth depth scene.
pub fn depth_scene(width: usize, height: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // background: gentle diagonal ramp within [90, 150]
    let ramp_span = 60.0;
    let flip = rng.random_bool(0.5);
    let mut data: Vec<f64> = (0..width * height)
        .map(|i| {
            let x = (i % width) as f64 / width.max(2) as f64;
            let y = (i / width) as f64 / height.max(2) as f64;
            let t = if flip { x + (1.0 - y) } else { x + y } / 2.0;
            (90.0 + ramp_span * t).round()
        })
        .collect();

    // a few occluding rectangles at nearer or farther depths
    let rects = 2 + rng.random_range(0..3);
    for _ in 0..rects {
        let rw = rng.random_range(width / 6..(width / 2).max(width / 6 + 1)).clamp(1, width);
        let rh = rng
            .random_range(height / 6..(height / 2).max(height / 6 + 1))
            .clamp(1, height);
        let rx = rng.random_range(0..width - rw + 1);
        let ry = rng.random_range(0..height - rh + 1);
        let depth = rng.random_range(20..=250) as f64;
        for y in ry..ry + rh {
            for x in rx..rx + rw {
                data[y * width + x] = depth;
            }
        }
    }

    // one disk, skipped when the frame is too small to hold it
    let r = (width.min(height) / 6).max(2);
    if width > 2 * r && height > 2 * r {
        let cx = rng.random_range(r..width - r) as isize;
        let cy = rng.random_range(r..height - r) as isize;
        let depth = rng.random_range(20..=250) as f64;
        let r2 = (r * r) as isize;
        for y in 0..height as isize {
            for x in 0..width as isize {
                if (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r2 {
                    data[y as usize * width + x as usize] = depth;
                }
            }
        }
    }

    GrayImage::new(width, height, data, 255.0).expect("generated samples stay in range")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenes_are_deterministic() {
        assert_eq!(depth_scene(32, 24, 7), depth_scene(32, 24, 7));
        assert_ne!(depth_scene(32, 24, 7), depth_scene(32, 24, 8));
    }

    #[test]
    fn samples_are_integers_away_from_the_sentinel() {
        for seed in 0..5 {
            let scene = depth_scene(48, 40, seed);
            for &v in scene.data() {
                assert_eq!(v, v.round());
                assert!((20.0..=250.0).contains(&v), "sample {v} out of band");
            }
        }
    }

    #[test]
    fn degenerate_sizes_do_not_panic() {
        for (w, h) in [(1, 1), (2, 2), (3, 7), (7, 3), (11, 11)] {
            for seed in 0..20 {
                let scene = depth_scene(w, h, seed);
                assert_eq!(scene.dims(), (w, h));
            }
        }
    }
}
