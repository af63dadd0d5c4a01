//! Tunables for boundary correction and unsupervised detection.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::similarity::SimilarityUnit;

/// A frame count that is either fixed or derived from the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Setting {
    Fixed(usize),
    Auto,
}

impl Setting {
    pub fn fixed(self) -> Option<usize> {
        match self {
            Setting::Fixed(v) => Some(v),
            Setting::Auto => None,
        }
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Setting::Auto);
        }
        s.parse()
            .map(Setting::Fixed)
            .map_err(|_| Error::InvalidValue(format!("expected an integer or `auto`, got `{s}`")))
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Setting::Fixed(v) => write!(f, "{v}"),
            Setting::Auto => f.write_str("auto"),
        }
    }
}

pub const DEFAULT_B_WIN: usize = 16;
pub const DEFAULT_B_SEG: usize = 4;
pub const DEFAULT_DTW_WINDOW: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionConfig {
    /// Window around each boundary, in frames.
    pub b_win: Setting,
    /// Sub-segment length inside the window, in frames.
    pub b_seg: Setting,
    pub cosine_unit: SimilarityUnit,
    pub dtw_unit: SimilarityUnit,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        Self {
            b_win: Setting::Fixed(DEFAULT_B_WIN),
            b_seg: Setting::Fixed(DEFAULT_B_SEG),
            cosine_unit: SimilarityUnit::Flatten,
            dtw_unit: SimilarityUnit::Flatten,
            max_iterations: 16,
            seed: 0,
        }
    }
}

impl CorrectionConfig {
    pub fn with_window(b_win: usize, b_seg: usize) -> Self {
        Self {
            b_win: Setting::Fixed(b_win),
            b_seg: Setting::Fixed(b_seg),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig(
                "max_iterations must be positive".into(),
            ));
        }
        if self.cosine_unit == SimilarityUnit::ScalarSeries {
            return Err(Error::InvalidConfig(
                "scalar-series comparison only applies to single frames".into(),
            ));
        }
        if let Setting::Fixed(0) = self.b_seg {
            return Err(Error::InvalidConfig("b_seg must be positive".into()));
        }
        if let Setting::Fixed(w) = self.b_win {
            if w == 0 || w % 2 != 0 {
                return Err(Error::InvalidConfig(format!(
                    "b_win must be even and positive, got {w}"
                )));
            }
        }
        if let (Setting::Fixed(w), Setting::Fixed(s)) = (self.b_win, self.b_seg) {
            if w < 2 * s || w % s != 0 {
                return Err(Error::InvalidConfig(format!(
                    "b_win ({w}) must be at least twice and a multiple of b_seg ({s})"
                )));
            }
        }
        Ok(())
    }
}

/// How consecutive frames are compared with DTW during detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DtwUnit {
    /// Each frame's `D` values form a 1-D series.
    ScalarSeries,
    /// Euclidean distance between the two frames.
    MeanFrame,
    /// DTW between the `k` frames ending at `i` and frame `i + 1`.
    Window(usize),
}

impl FromStr for DtwUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scalar" | "scalar-series" => Ok(DtwUnit::ScalarSeries),
            "mean" | "meanframe" | "mean-frame" => Ok(DtwUnit::MeanFrame),
            other => other
                .strip_prefix("window:")
                .and_then(|k| k.parse().ok())
                .filter(|&k: &usize| k > 0)
                .map(DtwUnit::Window)
                .ok_or_else(|| Error::InvalidValue(format!("unknown DTW unit `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectConfig {
    /// Minimum gap between detected boundaries; also the merge radius.
    pub b_intrv: Setting,
    pub num_classes: usize,
    /// Optional seeded random projection to this many dimensions.
    pub dim_reduce: Option<usize>,
    pub dtw_unit: DtwUnit,
    pub seed: u64,
    pub kmeans_restarts: usize,
}

impl DetectConfig {
    pub fn new(num_classes: usize, b_intrv: Setting) -> Self {
        Self {
            b_intrv,
            num_classes,
            dim_reduce: None,
            dtw_unit: DtwUnit::Window(DEFAULT_DTW_WINDOW),
            seed: 0,
            kmeans_restarts: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::InvalidConfig(
                "num_classes must be at least 2".into(),
            ));
        }
        if self.b_intrv == Setting::Fixed(0) {
            return Err(Error::InvalidConfig("b_intrv must be at least 1".into()));
        }
        if self.dim_reduce == Some(0) {
            return Err(Error::InvalidConfig(
                "dim_reduce target must be positive".into(),
            ));
        }
        if self.kmeans_restarts == 0 {
            return Err(Error::InvalidConfig(
                "kmeans_restarts must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_setting() {
        assert_eq!("auto".parse::<Setting>().unwrap(), Setting::Auto);
        assert_eq!("AUTO".parse::<Setting>().unwrap(), Setting::Auto);
        assert_eq!("70".parse::<Setting>().unwrap(), Setting::Fixed(70));
        assert!("-3".parse::<Setting>().is_err());
    }

    #[test]
    fn correction_defaults_are_valid() {
        let cfg = CorrectionConfig::default();
        assert_eq!(cfg.b_win, Setting::Fixed(16));
        assert_eq!(cfg.b_seg, Setting::Fixed(4));
        cfg.validate().unwrap();
        assert!(CorrectionConfig::with_window(12, 8).validate().is_err());
        assert!(CorrectionConfig::with_window(6, 4).validate().is_err());
        assert!(CorrectionConfig::with_window(15, 5).validate().is_err());
        CorrectionConfig::with_window(8, 4).validate().unwrap();
    }

    #[test]
    fn detect_validation() {
        assert!(DetectConfig::new(1, Setting::Auto).validate().is_err());
        assert!(DetectConfig::new(3, Setting::Fixed(0)).validate().is_err());
        DetectConfig::new(3, Setting::Fixed(70)).validate().unwrap();
    }

    #[test]
    fn parse_dtw_unit() {
        assert_eq!("scalar".parse::<DtwUnit>().unwrap(), DtwUnit::ScalarSeries);
        assert_eq!("window:5".parse::<DtwUnit>().unwrap(), DtwUnit::Window(5));
        assert!("window:0".parse::<DtwUnit>().is_err());
    }
}
