//! Full restoration pipeline: histogram clustering, salient-edge
//! extraction, region labeling, edge-gated joint bilateral filtering, and
//! region-constrained exemplar inpainting, in that order. The bilateral
//! stage runs only on known pixels; the target region is owned entirely by
//! the inpainting stage that follows it.

use thiserror::Error;

use crate::bilateral::{joint_bilateral, BilateralError, BilateralStats};
use crate::config::{ConfigError, GuideMode, PipelineConfig};
use crate::inpaint::{inpaint, InpaintAuditRecord, InpaintError};
use crate::preproc::{canny_edges, histogram_cluster};
use crate::raster::{detect_target_mask, GrayImage, RasterError, TargetMask};
use crate::regions::{label_regions, RegionLabelMap};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Bilateral(#[from] BilateralError),
    #[error(transparent)]
    Inpaint(#[from] InpaintError),
    #[error("guide mode rgb-gray requires a guide image")]
    GuideRequired,
}

/// Everything a run produces besides the restored image: the audit trail,
/// the intermediate rasters for inspection, and diagnostics counters.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub image: GrayImage,
    pub audit: Vec<InpaintAuditRecord>,
    pub mask: TargetMask,
    pub edges: crate::raster::EdgeMap,
    pub labels: RegionLabelMap,
    pub bilateral_stats: BilateralStats,
    pub degenerate_normals: usize,
}

/// Runs the whole pipeline on a depth image.
///
/// `guide` supplies the bilateral range term and the edge-extraction input
/// when the config selects rgb-gray mode; `extra_mask` is OR-ed into the
/// sentinel-detected target mask.
pub fn denoise(
    depth: &GrayImage,
    guide: Option<&GrayImage>,
    extra_mask: Option<&TargetMask>,
    config: &PipelineConfig,
) -> Result<PipelineOutput, PipelineError> {
    config.validate()?;
    let mask = detect_target_mask(depth, config.sentinel, extra_mask)?;

    let guide_img: &GrayImage = match config.guide_mode {
        GuideMode::Depth => depth,
        GuideMode::RgbGray => guide.ok_or(PipelineError::GuideRequired)?,
    };
    if !guide_img.same_dims(depth.width(), depth.height()) {
        return Err(RasterError::DimensionMismatch(
            depth.width(),
            depth.height(),
            guide_img.width(),
            guide_img.height(),
        )
        .into());
    }

    let clustered = histogram_cluster(guide_img, &config.cluster_params()?);
    let edges = canny_edges(&clustered, &config.canny_params()?);
    let labels = label_regions(&edges, config.min_region_px);

    let params = config.bilateral_params(depth.max_value())?;
    let (filtered, bilateral_stats) = joint_bilateral(depth, guide_img, &edges, &params, &mask)?;

    let result = inpaint(&filtered, &mask, &labels, &config.inpaint_options()?)?;

    Ok(PipelineOutput {
        image: result.image,
        audit: result.audit,
        mask,
        edges,
        labels,
        bilateral_stats,
        degenerate_normals: result.degenerate_normals,
    })
}
