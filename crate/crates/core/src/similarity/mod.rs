//! Similarity and grouping kernels shared by boundary correction and
//! unsupervised detection.

mod dtw;
mod kmeans;
mod transition;

use std::fmt;
use std::str::FromStr;

pub use dtw::{dtw, dtw_series, euclidean};
pub use kmeans::{kmeans, ClusterAssignment, KMeansOptions};
pub use transition::transition_index;

use crate::error::{Error, Result};
use crate::sequence::FrameBlock;

/// How a block of frames is reduced before comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimilarityUnit {
    /// Concatenate the frames row-major into one vector.
    Flatten,
    /// Average the frames into one `D`-vector.
    MeanFrame,
    /// Treat a single frame's `D` values as a 1-D series.
    ScalarSeries,
}

impl FromStr for SimilarityUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flatten" => Ok(Self::Flatten),
            "mean" | "meanframe" | "mean-frame" => Ok(Self::MeanFrame),
            "scalar" | "scalar-series" => Ok(Self::ScalarSeries),
            other => Err(Error::InvalidValue(format!(
                "unknown similarity unit `{other}`"
            ))),
        }
    }
}

impl fmt::Display for SimilarityUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Flatten => "flatten",
            Self::MeanFrame => "mean-frame",
            Self::ScalarSeries => "scalar-series",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Cosine,
    Dtw,
}

/// Cosine similarity with a flag for zero-norm inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cosine {
    pub value: f64,
    /// Set when either vector has zero norm; `value` is then 0.
    pub degenerate: bool,
}

pub fn cosine_flagged(a: &[f64], b: &[f64]) -> Cosine {
    assert_eq!(a.len(), b.len(), "cosine of vectors with different lengths");
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Cosine {
            value: 0.0,
            degenerate: true,
        };
    }
    Cosine {
        value: (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0),
        degenerate: false,
    }
}

/// `dot(a, b) / (|a| |b|)`; zero-norm inputs give 0.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    cosine_flagged(a, b).value
}

/// Compares two frame blocks. Low cosine and high DTW both mean dissimilar.
pub fn block_similarity(
    left: FrameBlock<'_>,
    right: FrameBlock<'_>,
    unit: SimilarityUnit,
    metric: Metric,
) -> Result<f64> {
    if left.is_empty() || right.is_empty() {
        return Err(Error::EmptySequence);
    }
    if left.dim() != right.dim() {
        return Err(Error::DimMismatch {
            expected: left.dim(),
            found: right.dim(),
        });
    }
    if unit == SimilarityUnit::ScalarSeries && (left.frames() != 1 || right.frames() != 1) {
        return Err(Error::InvalidValue(
            "scalar-series comparison needs single-frame blocks".into(),
        ));
    }
    match (metric, unit) {
        (Metric::Cosine, SimilarityUnit::Flatten | SimilarityUnit::ScalarSeries) => {
            if left.frames() != right.frames() {
                return Err(Error::LengthMismatch {
                    expected: left.frames(),
                    found: right.frames(),
                });
            }
            Ok(cosine(left.flat(), right.flat()))
        }
        (Metric::Cosine, SimilarityUnit::MeanFrame) => {
            Ok(cosine(&left.mean_frame(), &right.mean_frame()))
        }
        (Metric::Dtw, SimilarityUnit::ScalarSeries) => dtw_series(left.row(0), right.row(0)),
        (Metric::Dtw, _) => {
            let a: Vec<&[f64]> = left.rows().collect();
            let b: Vec<&[f64]> = right.rows().collect();
            dtw(&a, &b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_examples() {
        let v = [0.3, -2.0, 1.5];
        assert!((cosine(&v, &v) - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]), 0.0);
        // 1/sqrt(2) from dot = 1, norms sqrt(2) and 1
        let expected = 1.0 / (2.0f64.sqrt() * 1.0);
        assert!((cosine(&[1.0, 1.0], &[1.0, 0.0]) - expected).abs() < 1e-12);
        assert!((expected - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-8);
    }

    #[test]
    fn zero_vector_is_flagged() {
        let c = cosine_flagged(&[0.0, 0.0], &[1.0, 2.0]);
        assert_eq!(c.value, 0.0);
        assert!(c.degenerate);
        assert!(!cosine_flagged(&[1.0], &[2.0]).degenerate);
    }

    #[test]
    fn block_examples() {
        let data = [1.0, 2.0, 3.0, 4.0];
        let block = FrameBlock::new(&data, 2);
        assert!(
            (block_similarity(block, block, SimilarityUnit::Flatten, Metric::Cosine).unwrap()
                - 1.0)
                .abs()
                < 1e-12
        );
        assert_eq!(
            block_similarity(block, block, SimilarityUnit::Flatten, Metric::Dtw).unwrap(),
            0.0
        );
        assert_eq!(
            block_similarity(block, block, SimilarityUnit::MeanFrame, Metric::Dtw).unwrap(),
            0.0
        );

        let l = [1.0, 0.0];
        let r = [0.0, 1.0];
        let (l, r) = (FrameBlock::new(&l, 2), FrameBlock::new(&r, 2));
        assert_eq!(
            block_similarity(l, r, SimilarityUnit::Flatten, Metric::Cosine).unwrap(),
            0.0
        );
    }

    #[test]
    fn block_errors() {
        let long = [1.0, 2.0, 3.0, 4.0];
        let short = [1.0, 2.0];
        let (long, short) = (FrameBlock::new(&long, 2), FrameBlock::new(&short, 2));
        assert!(matches!(
            block_similarity(long, short, SimilarityUnit::Flatten, Metric::Cosine),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(block_similarity(long, short, SimilarityUnit::ScalarSeries, Metric::Dtw).is_err());
        // mean-frame and DTW accept unequal lengths
        assert!(block_similarity(long, short, SimilarityUnit::MeanFrame, Metric::Cosine).is_ok());
        assert!(block_similarity(long, short, SimilarityUnit::Flatten, Metric::Dtw).is_ok());
    }

    #[test]
    fn scalar_series_dtw_on_single_frames() {
        let a = [1.0, 2.0, 3.0];
        let b = [1.0, 2.0, 2.0];
        let v = block_similarity(
            FrameBlock::new(&a, 3),
            FrameBlock::new(&b, 3),
            SimilarityUnit::ScalarSeries,
            Metric::Dtw,
        )
        .unwrap();
        assert_eq!(v, 1.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn cosine_bounded(pair in (1usize..16).prop_flat_map(|n| (
                prop::collection::vec(-1e3f64..1e3, n),
                prop::collection::vec(-1e3f64..1e3, n),
            ))) {
                let c = cosine(&pair.0, &pair.1);
                prop_assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&c));
            }

            #[test]
            fn dtw_symmetric(
                a in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 1..10),
                b in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 1..10),
            ) {
                prop_assert_eq!(dtw(&a, &b).unwrap(), dtw(&b, &a).unwrap());
                prop_assert_eq!(dtw(&a, &a).unwrap(), 0.0);
            }
        }
    }
}
