//! Pipeline configuration: every tunable parameter in one place, loadable
//! from a flat `key=value` file with strict unknown-key rejection.
//! Precedence is CLI flags > config file > defaults.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::bilateral::BilateralParams;
use crate::inpaint::{InpaintOptions, PatchSpec};
use crate::preproc::{CannyParams, HistogramClusterParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: expected key=value, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: invalid value for {key}: {detail}")]
    BadValue {
        line: usize,
        key: String,
        detail: String,
    },
    #[error("field {field}: {detail}")]
    Invariant { field: String, detail: String },
}

/// Which image supplies the bilateral range term and the edge-extraction
/// input: the depth image itself or an RGB guide converted to grayscale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GuideMode {
    #[default]
    Depth,
    RgbGray,
}

impl GuideMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            GuideMode::Depth => "depth",
            GuideMode::RgbGray => "rgb-gray",
        }
    }
}

/// All tunable pipeline parameters.
///
/// `sigma_r` and `radius` are optional: when unset they resolve per image
/// to a tenth of the dynamic range and `ceil(2 * sigma_s)` respectively.
/// `search_radius` None means exhaustive patch search.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub bins: usize,
    pub canny_sigma: f64,
    pub canny_low: f64,
    pub canny_high: f64,
    pub canny_relative: bool,
    pub sigma_s: f64,
    pub sigma_r: Option<f64>,
    pub radius: Option<usize>,
    pub edge_skip_dist: usize,
    pub patch_size: usize,
    pub alpha: f64,
    pub epsilon_d: f64,
    pub min_region_px: usize,
    pub sentinel: f64,
    pub guide_mode: GuideMode,
    pub search_radius: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            bins: 32,
            canny_sigma: 1.4,
            canny_low: 0.1,
            canny_high: 0.3,
            canny_relative: true,
            sigma_s: 3.0,
            sigma_r: None,
            radius: None,
            edge_skip_dist: 1,
            patch_size: 5,
            alpha: 255.0,
            epsilon_d: 1e-3,
            min_region_px: 9,
            sentinel: 0.0,
            guide_mode: GuideMode::Depth,
            search_radius: None,
        }
    }
}

impl PipelineConfig {
    /// Checks every nested invariant by building the typed parameter sets.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.cluster_params()?;
        self.canny_params()?;
        self.bilateral_params(255.0)?;
        self.patch_spec()?;
        self.inpaint_options()?;
        Ok(())
    }

    pub fn cluster_params(&self) -> Result<HistogramClusterParams, ConfigError> {
        HistogramClusterParams::new(self.bins).map_err(|e| ConfigError::Invariant {
            field: "bins".into(),
            detail: e.to_string(),
        })
    }

    pub fn canny_params(&self) -> Result<CannyParams, ConfigError> {
        CannyParams::new(
            self.canny_sigma,
            self.canny_low,
            self.canny_high,
            self.canny_relative,
        )
        .map_err(|e| ConfigError::Invariant {
            field: "canny".into(),
            detail: e.to_string(),
        })
    }

    /// Resolves the bilateral parameters against an image's dynamic range.
    pub fn bilateral_params(&self, max_value: f64) -> Result<BilateralParams, ConfigError> {
        let sigma_r = self.sigma_r.unwrap_or(0.1 * max_value);
        let radius = self
            .radius
            .unwrap_or_else(|| (2.0 * self.sigma_s).ceil().max(1.0) as usize);
        BilateralParams::new(self.sigma_s, sigma_r, radius, self.edge_skip_dist).map_err(|e| {
            ConfigError::Invariant {
                field: "bilateral".into(),
                detail: e.to_string(),
            }
        })
    }

    pub fn patch_spec(&self) -> Result<PatchSpec, ConfigError> {
        PatchSpec::new(self.patch_size).map_err(|e| ConfigError::Invariant {
            field: "patch.size".into(),
            detail: e.to_string(),
        })
    }

    pub fn inpaint_options(&self) -> Result<InpaintOptions, ConfigError> {
        let patch = self.patch_spec()?;
        InpaintOptions::new(patch, self.alpha, self.epsilon_d)
            .map(|o| o.with_search_radius(self.search_radius))
            .map_err(|e| ConfigError::Invariant {
                field: "inpaint".into(),
                detail: e.to_string(),
            })
    }

    /// Canonical `key=value` listing; the verbose dump and the config hash
    /// both derive from it.
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "bins={}", self.bins);
        let _ = writeln!(s, "canny.sigma={}", self.canny_sigma);
        let _ = writeln!(s, "canny.low={}", self.canny_low);
        let _ = writeln!(s, "canny.high={}", self.canny_high);
        let _ = writeln!(s, "canny.relative={}", self.canny_relative);
        let _ = writeln!(s, "bilateral.sigma_s={}", self.sigma_s);
        match self.sigma_r {
            Some(v) => {
                let _ = writeln!(s, "bilateral.sigma_r={v}");
            }
            None => {
                let _ = writeln!(s, "bilateral.sigma_r=auto");
            }
        }
        match self.radius {
            Some(v) => {
                let _ = writeln!(s, "bilateral.radius={v}");
            }
            None => {
                let _ = writeln!(s, "bilateral.radius=auto");
            }
        }
        let _ = writeln!(s, "bilateral.edge_skip={}", self.edge_skip_dist);
        let _ = writeln!(s, "patch.size={}", self.patch_size);
        let _ = writeln!(s, "alpha={}", self.alpha);
        let _ = writeln!(s, "epsilon_d={}", self.epsilon_d);
        let _ = writeln!(s, "min_region_px={}", self.min_region_px);
        let _ = writeln!(s, "sentinel={}", self.sentinel);
        let _ = writeln!(s, "guide={}", self.guide_mode.as_str());
        let _ = writeln!(
            s,
            "search_radius={}",
            self.search_radius.map_or(0, |r| r)
        );
        s
    }

    /// FNV-1a hash of the canonical listing; printed in verbose mode so a
    /// run can be reproduced exactly.
    pub fn hash(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in self.to_key_values().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }

    /// Applies one `key=value` assignment. `line` is used in diagnostics.
    pub fn set(&mut self, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        let bad = |detail: &str| ConfigError::BadValue {
            line,
            key: key.to_string(),
            detail: detail.to_string(),
        };
        match key {
            "bins" => self.bins = parse(value).ok_or_else(|| bad("expected positive integer"))?,
            "canny.sigma" => {
                self.canny_sigma = parse(value).ok_or_else(|| bad("expected number"))?
            }
            "canny.low" => self.canny_low = parse(value).ok_or_else(|| bad("expected number"))?,
            "canny.high" => {
                self.canny_high = parse(value).ok_or_else(|| bad("expected number"))?
            }
            "canny.relative" => {
                self.canny_relative = parse(value).ok_or_else(|| bad("expected true/false"))?
            }
            "bilateral.sigma_s" => {
                self.sigma_s = parse(value).ok_or_else(|| bad("expected number"))?
            }
            "bilateral.sigma_r" => {
                self.sigma_r = if value == "auto" {
                    None
                } else {
                    Some(parse(value).ok_or_else(|| bad("expected number or auto"))?)
                }
            }
            "bilateral.radius" => {
                self.radius = if value == "auto" {
                    None
                } else {
                    Some(parse(value).ok_or_else(|| bad("expected integer or auto"))?)
                }
            }
            "bilateral.edge_skip" => {
                self.edge_skip_dist = parse(value).ok_or_else(|| bad("expected integer"))?
            }
            "patch.size" => {
                let size: usize = parse(value).ok_or_else(|| bad("expected integer"))?;
                PatchSpec::new(size).map_err(|e| bad(&e.to_string()))?;
                self.patch_size = size;
            }
            "alpha" => self.alpha = parse(value).ok_or_else(|| bad("expected number"))?,
            "epsilon_d" => self.epsilon_d = parse(value).ok_or_else(|| bad("expected number"))?,
            "min_region_px" => {
                self.min_region_px = parse(value).ok_or_else(|| bad("expected integer"))?
            }
            "sentinel" => self.sentinel = parse(value).ok_or_else(|| bad("expected number"))?,
            "guide" => {
                self.guide_mode = match value {
                    "depth" => GuideMode::Depth,
                    "rgb-gray" => GuideMode::RgbGray,
                    _ => return Err(bad("expected depth or rgb-gray")),
                }
            }
            "search_radius" => {
                let r: usize = parse(value).ok_or_else(|| bad("expected integer (0 = full)"))?;
                self.search_radius = if r == 0 { None } else { Some(r) };
            }
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }
}

fn parse<T: std::str::FromStr>(value: &str) -> Option<T> {
    value.trim().parse().ok()
}

/// Loads a config file over the defaults; `None` means defaults only.
/// Unknown keys are rejected and parse errors name the offending line.
pub fn load_config(path: Option<&Path>) -> Result<PipelineConfig, ConfigError> {
    let mut config = PipelineConfig::default();
    let Some(path) = path else {
        return Ok(config);
    };
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                text: trimmed.to_string(),
            });
        };
        config.set(key.trim(), value.trim(), line)?;
    }
    config.validate()?;
    Ok(config)
}
