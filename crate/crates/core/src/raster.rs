//! Raster containers: grayscale depth images, binary target masks, and edge
//! maps. All buffers are row-major and dimension-checked at construction.

use thiserror::Error;

/// Errors raised by raster construction and dimension checks.
#[derive(Debug, Error)]
pub enum RasterError {
    #[error("image dimensions must be at least 1x1 (got {width}x{height})")]
    EmptyDimensions { width: usize, height: usize },
    #[error("data length {len} does not match {width}x{height} = {expected}")]
    DataLength {
        len: usize,
        width: usize,
        height: usize,
        expected: usize,
    },
    #[error("sample {value} at index {index} out of range [0, {max_value}]")]
    SampleOutOfRange {
        index: usize,
        value: f64,
        max_value: f64,
    },
    #[error("max_value must be a positive finite number (got {0})")]
    BadMaxValue(f64),
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("coordinate ({x}, {y}) out of bounds for {width}x{height}")]
    OutOfBounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },
}

/// A pixel location. Ordering is row-major (`y` first, then `x`), which is
/// the tie-break order used throughout the inpainting driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PixelCoord {
    pub x: usize,
    pub y: usize,
}

impl PixelCoord {
    pub fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

impl PartialOrd for PixelCoord {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PixelCoord {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

/// Grayscale raster of scalar intensity/depth samples in `[0, max_value]`.
///
/// Samples are stored as `f64` so intermediate filter arithmetic stays
/// real-valued; quantization back to integers happens only on save.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    max_value: f64,
    data: Vec<f64>,
}

impl GrayImage {
    /// Builds an image, validating every invariant: non-empty dimensions,
    /// matching data length, and samples within `[0, max_value]`.
    pub fn new(
        width: usize,
        height: usize,
        data: Vec<f64>,
        max_value: f64,
    ) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::EmptyDimensions { width, height });
        }
        if !max_value.is_finite() || max_value <= 0.0 {
            return Err(RasterError::BadMaxValue(max_value));
        }
        let expected = width * height;
        if data.len() != expected {
            return Err(RasterError::DataLength {
                len: data.len(),
                width,
                height,
                expected,
            });
        }
        for (index, &value) in data.iter().enumerate() {
            if !(value >= 0.0 && value <= max_value) {
                return Err(RasterError::SampleOutOfRange {
                    index,
                    value,
                    max_value,
                });
            }
        }
        Ok(Self {
            width,
            height,
            max_value,
            data,
        })
    }

    /// Constant image filled with `value`.
    pub fn constant(
        width: usize,
        height: usize,
        value: f64,
        max_value: f64,
    ) -> Result<Self, RasterError> {
        Self::new(width, height, vec![value; width * height], max_value)
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        max_value: f64,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, RasterError> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data, max_value)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn max_value(&self) -> f64 {
        self.max_value
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn pixel_count(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    /// Clamped fetch: out-of-range coordinates are clamped to the border.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }

    pub fn in_bounds(&self, x: usize, y: usize) -> bool {
        x < self.width && y < self.height
    }

    pub fn same_dims(&self, width: usize, height: usize) -> bool {
        self.width == width && self.height == height
    }

    /// Overwrites one sample. Used by the inpainting driver when copying
    /// source patches; the value must respect the range invariant.
    pub(crate) fn set(&mut self, x: usize, y: usize, value: f64) {
        debug_assert!(x < self.width && y < self.height);
        debug_assert!(
            value >= 0.0 && value <= self.max_value,
            "sample {value} out of range [0, {}]",
            self.max_value
        );
        self.data[y * self.width + x] = value;
    }
}

/// Binary raster marking the unknown/noisy pixels to be inpainted.
///
/// Immutable to library users except through the inpainting driver, which
/// clears flags as target pixels are filled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetMask {
    width: usize,
    height: usize,
    flags: Vec<bool>,
    target_count: usize,
}

impl TargetMask {
    pub fn new(width: usize, height: usize, flags: Vec<bool>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::EmptyDimensions { width, height });
        }
        let expected = width * height;
        if flags.len() != expected {
            return Err(RasterError::DataLength {
                len: flags.len(),
                width,
                height,
                expected,
            });
        }
        let target_count = flags.iter().filter(|&&f| f).count();
        Ok(Self {
            width,
            height,
            flags,
            target_count,
        })
    }

    /// All-false mask of the given dimensions.
    pub fn empty(width: usize, height: usize) -> Result<Self, RasterError> {
        Self::new(width, height, vec![false; width * height])
    }

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
    pub fn is_target(&self, x: usize, y: usize) -> bool {
        debug_assert!(x < self.width && y < self.height);
        self.flags[y * self.width + x]
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    /// Number of pixels still flagged as target.
    pub fn target_count(&self) -> usize {
        self.target_count
    }

    pub fn is_empty(&self) -> bool {
        self.target_count == 0
    }

    pub fn same_dims(&self, width: usize, height: usize) -> bool {
        self.width == width && self.height == height
    }

    /// Clears a target flag. Intended for the inpainting driver.
    pub fn clear(&mut self, x: usize, y: usize) {
        debug_assert!(x < self.width && y < self.height);
        let i = y * self.width + x;
        if self.flags[i] {
            self.flags[i] = false;
            self.target_count -= 1;
        }
    }
}

/// Binary raster marking salient-edge pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap {
    width: usize,
    height: usize,
    flags: Vec<bool>,
}

impl EdgeMap {
    pub fn new(width: usize, height: usize, flags: Vec<bool>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::EmptyDimensions { width, height });
        }
        let expected = width * height;
        if flags.len() != expected {
            return Err(RasterError::DataLength {
                len: flags.len(),
                width,
                height,
                expected,
            });
        }
        Ok(Self {
            width,
            height,
            flags,
        })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self, RasterError> {
        Self::new(width, height, vec![false; width * height])
    }

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
    pub fn is_edge(&self, x: usize, y: usize) -> bool {
        debug_assert!(x < self.width && y < self.height);
        self.flags[y * self.width + x]
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn edge_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn same_dims(&self, width: usize, height: usize) -> bool {
        self.width == width && self.height == height
    }
}

/// Flags every pixel whose depth sample equals `sentinel`, OR-ed with an
/// optional extra mask. This is how the unknown/noisy target region is
/// identified: sentinel-valued samples are the conventional "no depth" code.
pub fn detect_target_mask(
    depth: &GrayImage,
    sentinel: f64,
    extra: Option<&TargetMask>,
) -> Result<TargetMask, RasterError> {
    if let Some(extra) = extra {
        if !extra.same_dims(depth.width(), depth.height()) {
            return Err(RasterError::DimensionMismatch(
                depth.width(),
                depth.height(),
                extra.width(),
                extra.height(),
            ));
        }
    }
    let flags = depth
        .data()
        .iter()
        .enumerate()
        .map(|(i, &v)| v == sentinel || extra.is_some_and(|m| m.flags()[i]))
        .collect();
    TargetMask::new(depth.width(), depth.height(), flags)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_mismatched_data_length() {
        let err = GrayImage::new(2, 2, vec![0.0; 3], 255.0).unwrap_err();
        assert!(matches!(err, RasterError::DataLength { len: 3, .. }));
    }

    #[test]
    fn rejects_empty_dimensions() {
        assert!(GrayImage::new(0, 4, vec![], 255.0).is_err());
        assert!(TargetMask::new(3, 0, vec![]).is_err());
    }

    #[test]
    fn rejects_out_of_range_sample() {
        let err = GrayImage::new(2, 1, vec![10.0, 300.0], 255.0).unwrap_err();
        assert!(matches!(
            err,
            RasterError::SampleOutOfRange { index: 1, .. }
        ));
        // NaN samples fail the range check too.
        assert!(GrayImage::new(1, 1, vec![f64::NAN], 255.0).is_err());
    }

    #[test]
    fn pixel_coord_orders_row_major() {
        let a = PixelCoord::new(5, 1);
        let b = PixelCoord::new(0, 2);
        assert!(a < b);
        assert!(PixelCoord::new(1, 2) < PixelCoord::new(2, 2));
    }

    #[test]
    fn detect_mask_matches_sentinel() {
        let depth = GrayImage::new(2, 2, vec![0.0, 10.0, 0.0, 20.0], 255.0).unwrap();
        let mask = detect_target_mask(&depth, 0.0, None).unwrap();
        assert_eq!(mask.flags(), &[true, false, true, false]);
        assert_eq!(mask.target_count(), 2);
    }

    #[test]
    fn detect_mask_ors_extra() {
        let depth = GrayImage::new(2, 1, vec![5.0, 5.0], 255.0).unwrap();
        let extra = TargetMask::new(2, 1, vec![false, true]).unwrap();
        let mask = detect_target_mask(&depth, 0.0, Some(&extra)).unwrap();
        assert_eq!(mask.flags(), &[false, true]);
    }

    #[test]
    fn detect_mask_no_holes() {
        let depth = GrayImage::new(2, 2, vec![1.0, 2.0, 3.0, 4.0], 255.0).unwrap();
        let mask = detect_target_mask(&depth, 0.0, None).unwrap();
        assert!(mask.is_empty());
    }

    #[test]
    fn detect_mask_rejects_dim_mismatch() {
        let depth = GrayImage::new(2, 2, vec![0.0; 4], 255.0).unwrap();
        let extra = TargetMask::empty(3, 2).unwrap();
        assert!(detect_target_mask(&depth, 0.0, Some(&extra)).is_err());
    }

    #[test]
    fn mask_clear_updates_count() {
        let mut mask = TargetMask::new(2, 1, vec![true, true]).unwrap();
        mask.clear(0, 0);
        assert_eq!(mask.target_count(), 1);
        mask.clear(0, 0); // idempotent
        assert_eq!(mask.target_count(), 1);
    }
}
