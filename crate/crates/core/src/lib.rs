//! Similarity-driven temporal segmentation of frame-wise feature sequences.
//!
//! The crate works on videos given as per-frame feature vectors and offers:
//!
//! - [`correct`]: moves the boundaries of an existing frame-wise prediction
//!   onto the frames where the features actually change,
//! - [`detect`]: finds boundaries with no prediction and no training,
//! - [`postprocess`]: sliding-window smoothing and frame-wise voting,
//! - [`metrics`]: accuracy, edit score, segmental F1@k and boundary F1,
//! - [`io`]: NPY features, label/mapping files and reports,
//! - [`synth`]: piecewise-constant synthetic videos with known boundaries.

pub mod config;
pub mod correct;
pub mod detect;
pub mod error;
pub mod io;
pub mod metrics;
pub mod postprocess;
pub mod sequence;
pub mod similarity;
pub mod synth;

pub use config::{CorrectionConfig, DetectConfig, DtwUnit, Setting};
pub use error::{Error, Result};
pub use io::{ClassMapping, Orientation};
pub use metrics::{EvalOptions, EvalResult};
pub use sequence::{
    boundaries_of, from_boundaries, to_timeline, BoundarySet, FeatureSequence, FrameBlock,
    LabelSequence, Segment, SegmentTimeline,
};
pub use similarity::{Metric, SimilarityUnit};
