//! Browser demo bindings. Three interactive operations over seeded
//! synthetic depth scenes:
//!
//! 1. [`degrade_preview`] – generate a scene and its degraded version
//!    (instant feedback while dragging the noise sliders).
//! 2. [`structure_preview`] – show the salient edges and the edge-bounded
//!    regions the current preprocessing parameters produce.
//! 3. [`restore`] – run the full pipeline and report PSNR numbers.
//!
//! All images cross the boundary as RGBA byte buffers sized for
//! `putImageData`.

use wasm_bindgen::prelude::*;

use depthdenoise::bench::{degrade, NoiseKind, NoiseSpec};
use depthdenoise::config::PipelineConfig;
use depthdenoise::metrics::psnr;
use depthdenoise::pipeline::denoise;
use depthdenoise::preproc::{canny_edges, histogram_cluster};
use depthdenoise::raster::{EdgeMap, GrayImage, TargetMask};
use depthdenoise::regions::{label_regions, RegionLabelMap};
use depthdenoise::synth::depth_scene;

fn gray_to_rgba(img: &GrayImage) -> Vec<u8> {
    let scale = 255.0 / img.max_value();
    let mut out = Vec::with_capacity(img.pixel_count() * 4);
    for &v in img.data() {
        let g = (v * scale).round().clamp(0.0, 255.0) as u8;
        out.extend_from_slice(&[g, g, g, 255]);
    }
    out
}

/// Degraded view: holes tinted red so they stand out from dark depth.
fn degraded_to_rgba(img: &GrayImage, mask: &TargetMask) -> Vec<u8> {
    let scale = 255.0 / img.max_value();
    let mut out = Vec::with_capacity(img.pixel_count() * 4);
    for (i, &v) in img.data().iter().enumerate() {
        if mask.flags()[i] {
            out.extend_from_slice(&[170, 40, 40, 255]);
        } else {
            let g = (v * scale).round().clamp(0.0, 255.0) as u8;
            out.extend_from_slice(&[g, g, g, 255]);
        }
    }
    out
}

/// Edge pixels drawn green over the grayscale base.
fn edges_to_rgba(img: &GrayImage, edges: &EdgeMap) -> Vec<u8> {
    let scale = 255.0 / img.max_value();
    let mut out = Vec::with_capacity(img.pixel_count() * 4);
    for (i, &v) in img.data().iter().enumerate() {
        if edges.flags()[i] {
            out.extend_from_slice(&[40, 220, 90, 255]);
        } else {
            let g = (v * scale).round().clamp(0.0, 255.0) as u8;
            out.extend_from_slice(&[g, g, g, 255]);
        }
    }
    out
}

/// Region labels mapped onto a repeating palette.
fn labels_to_rgba(labels: &RegionLabelMap) -> Vec<u8> {
    const PALETTE: [[u8; 3]; 10] = [
        [66, 135, 245],
        [245, 166, 66],
        [105, 201, 114],
        [209, 96, 189],
        [240, 222, 95],
        [93, 205, 219],
        [237, 106, 90],
        [148, 120, 222],
        [181, 222, 120],
        [222, 143, 181],
    ];
    let mut out = Vec::with_capacity(labels.labels().len() * 4);
    for &l in labels.labels() {
        let c = PALETTE[l as usize % PALETTE.len()];
        out.extend_from_slice(&[c[0], c[1], c[2], 255]);
    }
    out
}

fn noise_spec(hole_fraction: f64, blob_size: usize, gaussian_sigma: f64, seed: u64) -> NoiseSpec {
    NoiseSpec {
        kind: NoiseKind::Both,
        hole_fraction,
        hole_blob_size: blob_size,
        gaussian_sigma,
        rng_seed: seed,
    }
}

fn demo_config(bins: usize, sigma_s: f64, sigma_r: f64, patch_size: usize) -> PipelineConfig {
    PipelineConfig {
        bins,
        sigma_s,
        sigma_r: if sigma_r > 0.0 { Some(sigma_r) } else { None },
        patch_size,
        // keep the browser responsive on larger scenes
        search_radius: Some(48),
        ..PipelineConfig::default()
    }
}

/// Ground truth plus degraded view of a synthetic scene.
#[wasm_bindgen]
pub struct Preview {
    width: usize,
    height: usize,
    gt: Vec<u8>,
    noisy: Vec<u8>,
    hole_pixels: usize,
}

#[wasm_bindgen]
impl Preview {
    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn gt_rgba(&self) -> Vec<u8> {
        self.gt.clone()
    }

    pub fn noisy_rgba(&self) -> Vec<u8> {
        self.noisy.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn hole_pixels(&self) -> usize {
        self.hole_pixels
    }
}

/// Operation 1: synthesize a seeded scene and degrade it.
#[wasm_bindgen]
pub fn degrade_preview(
    width: usize,
    height: usize,
    scene_seed: u64,
    hole_fraction: f64,
    blob_size: usize,
    gaussian_sigma: f64,
    noise_seed: u64,
) -> Result<Preview, JsError> {
    let gt = depth_scene(width, height, scene_seed);
    let spec = noise_spec(hole_fraction, blob_size, gaussian_sigma, noise_seed);
    let (noisy, mask) = degrade(&gt, &spec).map_err(|e| JsError::new(&e.to_string()))?;
    Ok(Preview {
        width,
        height,
        gt: gray_to_rgba(&gt),
        noisy: degraded_to_rgba(&noisy, &mask),
        hole_pixels: mask.target_count(),
    })
}

/// Salient edges and the regions they bound.
#[wasm_bindgen]
pub struct Structure {
    width: usize,
    height: usize,
    edges: Vec<u8>,
    regions: Vec<u8>,
    region_count: u32,
    edge_pixels: usize,
}

#[wasm_bindgen]
impl Structure {
    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn edges_rgba(&self) -> Vec<u8> {
        self.edges.clone()
    }

    pub fn regions_rgba(&self) -> Vec<u8> {
        self.regions.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn region_count(&self) -> u32 {
        self.region_count
    }

    #[wasm_bindgen(getter)]
    pub fn edge_pixels(&self) -> usize {
        self.edge_pixels
    }
}

/// Operation 2: preprocessing view — cluster, extract edges, label regions.
#[wasm_bindgen]
pub fn structure_preview(
    width: usize,
    height: usize,
    scene_seed: u64,
    bins: usize,
    canny_sigma: f64,
) -> Result<Structure, JsError> {
    let gt = depth_scene(width, height, scene_seed);
    let config = PipelineConfig {
        bins: bins.max(1),
        canny_sigma: canny_sigma.max(0.1),
        ..PipelineConfig::default()
    };
    let clustered = histogram_cluster(
        &gt,
        &config.cluster_params().map_err(|e| JsError::new(&e.to_string()))?,
    );
    let edges = canny_edges(
        &clustered,
        &config.canny_params().map_err(|e| JsError::new(&e.to_string()))?,
    );
    let labels = label_regions(&edges, config.min_region_px);
    Ok(Structure {
        width,
        height,
        edge_pixels: edges.edge_count(),
        edges: edges_to_rgba(&gt, &edges),
        region_count: labels.region_count(),
        regions: labels_to_rgba(&labels),
    })
}

/// Full pipeline result with PSNR numbers against the known ground truth.
#[wasm_bindgen]
pub struct Restoration {
    width: usize,
    height: usize,
    noisy: Vec<u8>,
    denoised: Vec<u8>,
    edges: Vec<u8>,
    stats: String,
}

#[wasm_bindgen]
impl Restoration {
    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn noisy_rgba(&self) -> Vec<u8> {
        self.noisy.clone()
    }

    pub fn denoised_rgba(&self) -> Vec<u8> {
        self.denoised.clone()
    }

    pub fn edges_rgba(&self) -> Vec<u8> {
        self.edges.clone()
    }

    /// JSON: psnr_noisy_db, psnr_denoised_db, improvement_db, iterations,
    /// regions, hole_pixels.
    pub fn stats_json(&self) -> String {
        self.stats.clone()
    }
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn restore(
    width: usize,
    height: usize,
    scene_seed: u64,
    hole_fraction: f64,
    blob_size: usize,
    gaussian_sigma: f64,
    noise_seed: u64,
    bins: usize,
    sigma_s: f64,
    sigma_r: f64,
    patch_size: usize,
) -> Result<Restoration, JsError> {
    run_restore(
        width, height, scene_seed, hole_fraction, blob_size, gaussian_sigma, noise_seed, bins,
        sigma_s, sigma_r, patch_size,
    )
    .map_err(|e| JsError::new(&e))
}

/// Operation 3 behind a plain-Rust seam so the host-side tests can drive it
/// without a JS runtime.
#[allow(clippy::too_many_arguments)]
fn run_restore(
    width: usize,
    height: usize,
    scene_seed: u64,
    hole_fraction: f64,
    blob_size: usize,
    gaussian_sigma: f64,
    noise_seed: u64,
    bins: usize,
    sigma_s: f64,
    sigma_r: f64,
    patch_size: usize,
) -> Result<Restoration, String> {
    let gt = depth_scene(width, height, scene_seed);
    let spec = noise_spec(hole_fraction, blob_size, gaussian_sigma, noise_seed);
    let (noisy, mask) = degrade(&gt, &spec).map_err(|e| e.to_string())?;
    let config = demo_config(bins, sigma_s, sigma_r, patch_size);

    let out = denoise(&noisy, None, None, &config).map_err(|e| e.to_string())?;

    let psnr_noisy = psnr(&gt, &noisy).map_err(|e| e.to_string())?;
    let psnr_denoised = psnr(&gt, &out.image).map_err(|e| e.to_string())?;
    let stats = format!(
        "{{\"psnr_noisy_db\":{:.3},\"psnr_denoised_db\":{:.3},\"improvement_db\":{:.3},\
         \"iterations\":{},\"regions\":{},\"hole_pixels\":{}}}",
        psnr_noisy,
        psnr_denoised,
        psnr_denoised - psnr_noisy,
        out.audit.len(),
        out.labels.region_count(),
        mask.target_count(),
    );

    Ok(Restoration {
        width,
        height,
        noisy: degraded_to_rgba(&noisy, &mask),
        denoised: gray_to_rgba(&out.image),
        edges: edges_to_rgba(&out.image, &out.edges),
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rgba_buffers_have_canvas_layout() {
        let img = depth_scene(24, 16, 1);
        let rgba = gray_to_rgba(&img);
        assert_eq!(rgba.len(), 24 * 16 * 4);
        assert!(rgba.chunks(4).all(|px| px[3] == 255));
        let px = &rgba[..4];
        assert_eq!(px[0], px[1]);
        assert_eq!(px[1], px[2]);
    }

    #[test]
    fn restore_reports_positive_improvement() {
        let restoration =
            run_restore(48, 40, 5, 0.05, 5, 2.5, 42, 32, 3.0, 0.0, 5).expect("pipeline runs");
        assert_eq!(restoration.width, 48);
        assert_eq!(restoration.noisy.len(), 48 * 40 * 4);
        assert_eq!(restoration.denoised.len(), 48 * 40 * 4);
        let stats = restoration.stats;
        let improvement: f64 = stats
            .split("\"improvement_db\":")
            .nth(1)
            .and_then(|s| s.split(',').next())
            .and_then(|s| s.parse().ok())
            .unwrap();
        assert!(improvement > 0.0, "stats: {stats}");
    }

    #[test]
    fn degraded_view_tints_holes() {
        let gt = depth_scene(30, 30, 2);
        let spec = noise_spec(0.1, 4, 0.0, 7);
        let (noisy, mask) = degrade(&gt, &spec).unwrap();
        let rgba = degraded_to_rgba(&noisy, &mask);
        let first_hole = mask.flags().iter().position(|&f| f).unwrap();
        assert_eq!(&rgba[first_hole * 4..first_hole * 4 + 3], &[170, 40, 40]);
    }
}
