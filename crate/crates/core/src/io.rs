//! Image and mask file I/O.
//!
//! Portable graymaps (P2 ascii, P5 binary) are parsed and written here so
//! round trips are bit-exact and fixtures stay hand-writable. PNG is
//! supported as a lossless compressed alternative via the `image` crate.

use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::raster::{GrayImage, RasterError, TargetMask};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: malformed header: {detail}")]
    MalformedHeader { path: String, detail: String },
    #[error("{path}: sample out of range: {value} exceeds declared max {max_value}")]
    SampleOutOfRange {
        path: String,
        value: u32,
        max_value: u32,
    },
    #[error("{path}: truncated pixel data (expected {expected} samples, got {got})")]
    Truncated {
        path: String,
        expected: usize,
        got: usize,
    },
    #[error("{path}: unsupported format (expected PGM P2/P5 or grayscale PNG)")]
    UnsupportedFormat { path: String },
    #[error("{path}: {source}")]
    Png {
        path: String,
        source: image::ImageError,
    },
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Graymap flavor for [`save_pgm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmFormat {
    /// Binary samples (P5), 1 byte per sample up to max 255, 2 bytes
    /// big-endian above.
    Binary,
    /// Ascii decimal samples (P2).
    Ascii,
}

/// Loads a grayscale image, dispatching on the file's magic bytes.
///
/// Supported: PGM P2/P5 and single-channel PNG. `max_value` is taken from
/// the PGM header (or the PNG bit depth) and every sample is validated
/// against it.
pub fn load_gray_image(path: impl AsRef<Path>) -> Result<GrayImage, IoError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| IoError::Io {
        path: display(path),
        source,
    })?;
    match bytes.get(..2) {
        Some(b"P2") | Some(b"P5") => parse_pgm(&bytes, path),
        Some([0x89, b'P']) => load_png(&bytes, path),
        _ => Err(IoError::UnsupportedFormat { path: display(path) }),
    }
}

/// Saves a grayscale image; `.png` extension selects PNG, anything else
/// gets a binary PGM. Samples are rounded to the nearest integer and
/// clamped to `[0, max_value]` — this is the only place quantization
/// happens in the pipeline.
pub fn save_gray_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<(), IoError> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("png") => save_png(img, path),
        _ => save_pgm(img, path, PgmFormat::Binary),
    }
}

/// Writes a portable graymap in the requested flavor.
pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>, format: PgmFormat) -> Result<(), IoError> {
    let path = path.as_ref();
    let maxval = img.max_value().round() as u32;
    let maxval = maxval.clamp(1, 65535);
    let mut out = Vec::with_capacity(img.pixel_count() * 2 + 32);
    let magic = match format {
        PgmFormat::Binary => "P5",
        PgmFormat::Ascii => "P2",
    };
    write!(out, "{}\n{} {}\n{}\n", magic, img.width(), img.height(), maxval).expect("vec write");
    match format {
        PgmFormat::Binary => {
            for &v in img.data() {
                let q = quantize(v, maxval);
                if maxval > 255 {
                    out.extend_from_slice(&(q as u16).to_be_bytes());
                } else {
                    out.push(q as u8);
                }
            }
        }
        PgmFormat::Ascii => {
            for (i, &v) in img.data().iter().enumerate() {
                let q = quantize(v, maxval);
                let sep = if i % img.width() == img.width() - 1 {
                    '\n'
                } else {
                    ' '
                };
                write!(out, "{}{}", q, sep).expect("vec write");
            }
        }
    }
    fs::write(path, out).map_err(|source| IoError::Io {
        path: display(path),
        source,
    })
}

/// Loads a mask file: any supported grayscale raster, nonzero = target.
pub fn load_mask(path: impl AsRef<Path>) -> Result<TargetMask, IoError> {
    let img = load_gray_image(path)?;
    let flags = img.data().iter().map(|&v| v != 0.0).collect();
    Ok(TargetMask::new(img.width(), img.height(), flags)?)
}

/// Saves a mask as a binary graymap: target pixels at 255, others at 0.
pub fn save_mask(mask: &TargetMask, path: impl AsRef<Path>) -> Result<(), IoError> {
    let data = mask
        .flags()
        .iter()
        .map(|&f| if f { 255.0 } else { 0.0 })
        .collect();
    let img = GrayImage::new(mask.width(), mask.height(), data, 255.0)?;
    save_pgm(&img, path, PgmFormat::Binary)
}

fn quantize(v: f64, maxval: u32) -> u32 {
    (v.round() as i64).clamp(0, maxval as i64) as u32
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

/// Whitespace- and comment-aware token scanner over PGM header/ascii bytes.
struct Tokens<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn skip_ws_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn next_u32(&mut self) -> Option<u32> {
        self.skip_ws_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return None;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()?
            .parse()
            .ok()
    }
}

fn parse_pgm(bytes: &[u8], path: &Path) -> Result<GrayImage, IoError> {
    let binary = &bytes[..2] == b"P5";
    let header_err = |detail: &str| IoError::MalformedHeader {
        path: display(path),
        detail: detail.to_string(),
    };

    let mut tok = Tokens::new(&bytes[2..]);
    let width = tok.next_u32().ok_or_else(|| header_err("missing width"))? as usize;
    let height = tok.next_u32().ok_or_else(|| header_err("missing height"))? as usize;
    let maxval = tok.next_u32().ok_or_else(|| header_err("missing maxval"))?;
    if maxval == 0 || maxval > 65535 {
        return Err(header_err(&format!("maxval {maxval} outside [1, 65535]")));
    }
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| header_err("dimension overflow"))?;

    let mut data = Vec::with_capacity(expected);
    if binary {
        // Exactly one whitespace byte separates the header from the payload.
        let payload_start = 2 + tok.pos + 1;
        if payload_start > bytes.len() {
            return Err(IoError::Truncated {
                path: display(path),
                expected,
                got: 0,
            });
        }
        let payload = &bytes[payload_start..];
        let bytes_per = if maxval > 255 { 2 } else { 1 };
        if payload.len() < expected * bytes_per {
            return Err(IoError::Truncated {
                path: display(path),
                expected,
                got: payload.len() / bytes_per,
            });
        }
        for i in 0..expected {
            let v = if bytes_per == 2 {
                u16::from_be_bytes([payload[2 * i], payload[2 * i + 1]]) as u32
            } else {
                payload[i] as u32
            };
            if v > maxval {
                return Err(IoError::SampleOutOfRange {
                    path: display(path),
                    value: v,
                    max_value: maxval,
                });
            }
            data.push(v as f64);
        }
    } else {
        for _ in 0..expected {
            let v = tok.next_u32().ok_or_else(|| IoError::Truncated {
                path: display(path),
                expected,
                got: data.len(),
            })?;
            if v > maxval {
                return Err(IoError::SampleOutOfRange {
                    path: display(path),
                    value: v,
                    max_value: maxval,
                });
            }
            data.push(v as f64);
        }
    }

    Ok(GrayImage::new(width, height, data, maxval as f64)?)
}

fn load_png(bytes: &[u8], path: &Path) -> Result<GrayImage, IoError> {
    let decoded = image::load_from_memory_with_format(bytes, image::ImageFormat::Png).map_err(
        |source| IoError::Png {
            path: display(path),
            source,
        },
    )?;
    let (img, maxval) = match decoded {
        image::DynamicImage::ImageLuma16(img) => {
            let (w, h) = img.dimensions();
            let data = img.into_raw().into_iter().map(|v| v as f64).collect();
            (
                GrayImage::new(w as usize, h as usize, data, 65535.0)?,
                65535.0,
            )
        }
        other => {
            let img = other.into_luma8();
            let (w, h) = img.dimensions();
            let data = img.into_raw().into_iter().map(|v| v as f64).collect();
            (GrayImage::new(w as usize, h as usize, data, 255.0)?, 255.0)
        }
    };
    let _ = maxval;
    Ok(img)
}

fn save_png(img: &GrayImage, path: &Path) -> Result<(), IoError> {
    let maxval = img.max_value().round() as u32;
    let w = img.width() as u32;
    let h = img.height() as u32;
    let result = if maxval > 255 {
        let buf: Vec<u16> = img
            .data()
            .iter()
            .map(|&v| quantize(v, maxval) as u16)
            .collect();
        let buf =
            image::ImageBuffer::<image::Luma<u16>, _>::from_raw(w, h, buf).expect("sized buffer");
        buf.save(path)
    } else {
        let buf: Vec<u8> = img
            .data()
            .iter()
            .map(|&v| quantize(v, maxval) as u8)
            .collect();
        let buf =
            image::ImageBuffer::<image::Luma<u8>, _>::from_raw(w, h, buf).expect("sized buffer");
        buf.save(path)
    };
    result.map_err(|source| IoError::Png {
        path: display(path),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn decodes_hand_written_p2() {
        let dir = tmp();
        let path = dir.path().join("a.pgm");
        fs::write(&path, "P2\n2 2\n255\n0 255\n128 7\n").unwrap();
        let img = load_gray_image(&path).unwrap();
        assert_eq!(img.dims(), (2, 2));
        assert_eq!(img.data(), &[0.0, 255.0, 128.0, 7.0]);
        assert_eq!(img.max_value(), 255.0);
    }

    #[test]
    fn decodes_minimal_1x1() {
        let dir = tmp();
        let path = dir.path().join("min.pgm");
        fs::write(&path, "P2\n1 1\n255\n0\n").unwrap();
        let img = load_gray_image(&path).unwrap();
        assert_eq!(img.dims(), (1, 1));
        assert_eq!(img.data(), &[0.0]);
    }

    #[test]
    fn rejects_sample_above_declared_max() {
        let dir = tmp();
        let path = dir.path().join("bad.pgm");
        fs::write(&path, "P2\n2 1\n255\n100 300\n").unwrap();
        let err = load_gray_image(&path).unwrap_err();
        assert!(matches!(err, IoError::SampleOutOfRange { value: 300, .. }));
    }

    #[test]
    fn rejects_missing_file() {
        let err = load_gray_image("/nonexistent/nope.pgm").unwrap_err();
        assert!(matches!(err, IoError::Io { .. }));
    }

    #[test]
    fn rejects_truncated_binary() {
        let dir = tmp();
        let path = dir.path().join("trunc.pgm");
        fs::write(&path, b"P5\n4 4\n255\n\x01\x02".as_slice()).unwrap();
        let err = load_gray_image(&path).unwrap_err();
        assert!(matches!(err, IoError::Truncated { expected: 16, .. }));
    }

    #[test]
    fn rejects_unknown_magic() {
        let dir = tmp();
        let path = dir.path().join("who.pgm");
        fs::write(&path, "P7\nwat").unwrap();
        assert!(matches!(
            load_gray_image(&path).unwrap_err(),
            IoError::UnsupportedFormat { .. }
        ));
    }

    #[test]
    fn round_trips_binary_pgm() {
        let dir = tmp();
        let path = dir.path().join("rt.pgm");
        let img = GrayImage::new(2, 1, vec![5.0, 250.0], 255.0).unwrap();
        save_pgm(&img, &path, PgmFormat::Binary).unwrap();
        assert_eq!(load_gray_image(&path).unwrap(), img);
    }

    #[test]
    fn round_trips_ascii_pgm() {
        let dir = tmp();
        let path = dir.path().join("rt2.pgm");
        let img = GrayImage::new(3, 2, vec![0.0, 1.0, 2.0, 253.0, 254.0, 255.0], 255.0).unwrap();
        save_pgm(&img, &path, PgmFormat::Ascii).unwrap();
        assert_eq!(load_gray_image(&path).unwrap(), img);
    }

    #[test]
    fn round_trips_16bit_pgm() {
        let dir = tmp();
        let path = dir.path().join("deep.pgm");
        let img = GrayImage::new(2, 1, vec![0.0, 65535.0], 65535.0).unwrap();
        save_pgm(&img, &path, PgmFormat::Binary).unwrap();
        assert_eq!(load_gray_image(&path).unwrap(), img);
    }

    #[test]
    fn round_trips_png() {
        let dir = tmp();
        let path = dir.path().join("rt.png");
        let img = GrayImage::new(4, 3, (0..12).map(|v| v as f64 * 20.0).collect(), 255.0).unwrap();
        save_gray_image(&img, &path).unwrap();
        assert_eq!(load_gray_image(&path).unwrap(), img);
    }

    #[test]
    fn round_trips_large_all_zero() {
        // 752x520 is the frame size quoted for the runtime benchmark.
        let dir = tmp();
        let path = dir.path().join("big.pgm");
        let img = GrayImage::constant(752, 520, 0.0, 255.0).unwrap();
        save_gray_image(&img, &path).unwrap();
        let back = load_gray_image(&path).unwrap();
        assert_eq!(back.pixel_count(), 391_040);
        assert_eq!(back, img);
    }

    #[test]
    fn save_to_unwritable_path_fails() {
        let img = GrayImage::constant(2, 2, 0.0, 255.0).unwrap();
        let err = save_gray_image(&img, "/nonexistent-dir/x.pgm").unwrap_err();
        assert!(matches!(err, IoError::Io { .. }));
    }

    #[test]
    fn mask_round_trip_nonzero_is_target() {
        let dir = tmp();
        let path = dir.path().join("m.pgm");
        let mask = TargetMask::new(2, 2, vec![true, false, false, true]).unwrap();
        save_mask(&mask, &path).unwrap();
        assert_eq!(load_mask(&path).unwrap(), mask);
    }

    #[test]
    fn header_comments_are_skipped() {
        let dir = tmp();
        let path = dir.path().join("c.pgm");
        fs::write(&path, "P2\n# gimp likes comments\n2 1\n# more\n10\n3 10\n").unwrap();
        let img = load_gray_image(&path).unwrap();
        assert_eq!(img.data(), &[3.0, 10.0]);
        assert_eq!(img.max_value(), 10.0);
    }
}
