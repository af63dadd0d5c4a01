//! Unsupervised boundary detection.
//!
//! Three detectors look at consecutive frames of a feature sequence with no
//! prediction to start from:
//!
//! * k-means over all frames, a boundary wherever the cluster id changes;
//! * cosine similarity between neighbouring frames, keeping the positions
//!   that score below the mean;
//! * DTW cost between neighbouring frames, keeping the positions that score
//!   above the mean.
//!
//! Each proposal set is thinned so kept boundaries are at least `b_intrv`
//! frames apart, then the three sets are merged and boundaries closer than
//! `b_intrv` are replaced by their rounded mean.
//!
//! The score series and the clustering do not depend on `b_intrv`, so
//! [`propose`] computes them once and [`RawProposals::resolve`] can be
//! called for as many thresholds as needed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::{DetectConfig, DtwUnit, Setting};
use crate::error::{Error, Result};
use crate::sequence::{BoundarySet, FeatureSequence, LabelSequence};
use crate::similarity::{block_similarity, kmeans, KMeansOptions, Metric, SimilarityUnit};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    Below,
    Above,
}

/// Score between frame `i` and frame `i + 1`, for every `i < T - 1`.
pub fn frame_scores(
    feat: &FeatureSequence,
    metric: Metric,
    unit: SimilarityUnit,
) -> Result<Vec<f64>> {
    if feat.frames() < 2 {
        return Err(Error::InvalidValue("need at least two frames".into()));
    }
    (0..feat.frames() - 1)
        .map(|i| block_similarity(feat.block(i..i + 1), feat.block(i + 1..i + 2), unit, metric))
        .collect()
}

/// DTW between the `k` frames ending at `i` (clipped at the start of the
/// sequence) and frame `i + 1`.
///
/// After a change at frame `b` the score is largest at `i = b - 1` and
/// decays over the next `k - 1` positions, so the leftmost above-mean
/// position sits on the change.
pub fn window_dtw_scores(feat: &FeatureSequence, k: usize) -> Result<Vec<f64>> {
    if feat.frames() < 2 {
        return Err(Error::InvalidValue("need at least two frames".into()));
    }
    if k == 0 {
        return Err(Error::InvalidValue(
            "window must be at least one frame".into(),
        ));
    }
    (0..feat.frames() - 1)
        .map(|i| {
            let left = feat.block((i + 1).saturating_sub(k)..i + 1);
            let right = feat.block(i + 1..i + 2);
            block_similarity(left, right, SimilarityUnit::Flatten, Metric::Dtw)
        })
        .collect()
}

pub fn dtw_scores(feat: &FeatureSequence, unit: DtwUnit) -> Result<Vec<f64>> {
    match unit {
        DtwUnit::ScalarSeries => frame_scores(feat, Metric::Dtw, SimilarityUnit::ScalarSeries),
        DtwUnit::MeanFrame => frame_scores(feat, Metric::Dtw, SimilarityUnit::MeanFrame),
        DtwUnit::Window(k) => window_dtw_scores(feat, k),
    }
}

/// Score index `i` becomes boundary `i + 1`; comparison with the mean is strict.
pub fn mean_filter(scores: &[f64], keep: Keep) -> BoundarySet {
    if scores.is_empty() {
        return BoundarySet::empty();
    }
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    let kept = scores
        .iter()
        .enumerate()
        .filter(|&(_, &s)| match keep {
            Keep::Below => s < mean,
            Keep::Above => s > mean,
        })
        .map(|(i, _)| i + 1)
        .collect();
    BoundarySet::new(kept).expect("increasing by construction")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterProposal {
    pub bounds: BoundarySet,
    /// Cluster id per frame, numbered by first occurrence.
    pub labels: Vec<usize>,
    /// Some cluster ended up empty (e.g. constant features).
    pub degenerate: bool,
}

/// k-means over all frames; a boundary wherever the cluster id changes.
pub fn cluster_bounds(
    feat: &FeatureSequence,
    num_classes: usize,
    seed: u64,
) -> Result<ClusterProposal> {
    cluster_bounds_with(feat, num_classes, &KMeansOptions::seeded(seed))
}

fn cluster_bounds_with(
    feat: &FeatureSequence,
    num_classes: usize,
    opts: &KMeansOptions,
) -> Result<ClusterProposal> {
    let ca = kmeans(feat.as_slice(), feat.dim(), num_classes, opts)?;
    let bounds = ca
        .labels
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] != w[1])
        .map(|(i, _)| i + 1)
        .collect();
    Ok(ClusterProposal {
        bounds: BoundarySet::new(bounds).expect("increasing by construction"),
        degenerate: ca.is_degenerate(),
        labels: ca.labels,
    })
}

/// Greedy from the left: a boundary survives when it is at least `b_intrv`
/// frames after the last survivor. The first boundary always survives.
pub fn remove_close(bounds: &BoundarySet, b_intrv: usize) -> BoundarySet {
    let mut kept: Vec<usize> = Vec::with_capacity(bounds.len());
    for b in bounds.iter() {
        if kept.last().is_none_or(|&last| b - last >= b_intrv) {
            kept.push(b);
        }
    }
    BoundarySet::new(kept).expect("subset of an increasing set")
}

/// Union of the sets, with every maximal chain of boundaries closer than
/// `b_intrv` replaced by its rounded mean.
pub fn merge_mean(sets: &[&BoundarySet], b_intrv: usize) -> BoundarySet {
    let mut all: Vec<usize> = sets.iter().flat_map(|s| s.iter()).collect();
    all.sort_unstable();
    let mut merged = Vec::new();
    let mut group: Vec<usize> = Vec::new();
    for b in all {
        if group.last().is_some_and(|&last| b - last >= b_intrv) {
            merged.push(rounded_mean(&group));
            group.clear();
        }
        group.push(b);
    }
    if !group.is_empty() {
        merged.push(rounded_mean(&group));
    }
    BoundarySet::from_unsorted(merged)
}

fn rounded_mean(values: &[usize]) -> usize {
    (values.iter().sum::<usize>() as f64 / values.len() as f64).round() as usize
}

/// Largest consecutive gap seen by any proposal set with at least two
/// boundaries, clamped to `[2, T / 2]`; `T / 8` when no set qualifies.
pub fn auto_b_intrv(sets: &[&BoundarySet], frames: usize) -> usize {
    let widest = sets
        .iter()
        .filter(|s| s.len() >= 2)
        .filter_map(|s| s.gaps().into_iter().max())
        .max();
    match widest {
        Some(gap) => gap.min(frames / 2).max(2),
        None => (frames / 8).max(1),
    }
}

/// Score series and clustering for one video, before any thresholding.
#[derive(Debug, Clone, PartialEq)]
pub struct RawProposals {
    pub frames: usize,
    pub cosine_scores: Vec<f64>,
    pub dtw_scores: Vec<f64>,
    pub cluster: ClusterProposal,
}

/// Per-method boundaries for one resolved threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodProposals {
    pub b_intrv: usize,
    /// After the mean filter, before `remove_close`.
    pub cosine_candidates: BoundarySet,
    pub dtw_candidates: BoundarySet,
    pub cosine_bounds: BoundarySet,
    pub dtw_bounds: BoundarySet,
    pub cluster_bounds: BoundarySet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub boundaries: BoundarySet,
    pub proposals: MethodProposals,
    pub raw: RawProposals,
}

impl Detection {
    /// Frame labels where each detected segment carries its majority cluster id.
    pub fn segment_labels(&self) -> LabelSequence {
        segment_labels(&self.boundaries, &self.raw.cluster.labels)
    }
}

impl RawProposals {
    pub fn resolve(&self, b_intrv: Setting) -> (BoundarySet, MethodProposals) {
        let cosine_candidates = mean_filter(&self.cosine_scores, Keep::Below);
        let dtw_candidates = mean_filter(&self.dtw_scores, Keep::Above);
        let b_intrv = match b_intrv {
            Setting::Fixed(v) => v,
            Setting::Auto => auto_b_intrv(
                &[&cosine_candidates, &dtw_candidates, &self.cluster.bounds],
                self.frames,
            ),
        };
        let cluster_bounds = remove_close(&self.cluster.bounds, b_intrv);
        let cosine_bounds = remove_close(&cosine_candidates, b_intrv);
        let dtw_bounds = remove_close(&dtw_candidates, b_intrv);
        let merged = merge_mean(&[&cosine_bounds, &dtw_bounds, &cluster_bounds], b_intrv);
        (
            merged,
            MethodProposals {
                b_intrv,
                cosine_candidates,
                dtw_candidates,
                cosine_bounds,
                dtw_bounds,
                cluster_bounds,
            },
        )
    }
}

/// Computes the threshold-independent part of detection.
pub fn propose(feat: &FeatureSequence, cfg: &DetectConfig) -> Result<RawProposals> {
    cfg.validate()?;
    if feat.frames() < 2.max(cfg.num_classes) {
        return Err(Error::TooFewPoints {
            points: feat.frames(),
            clusters: cfg.num_classes.max(2),
        });
    }
    let projected;
    let feat = match cfg.dim_reduce {
        Some(target) => {
            projected = random_projection(feat, target, cfg.seed);
            &projected
        }
        None => feat,
    };
    let opts = KMeansOptions {
        restarts: cfg.kmeans_restarts,
        ..KMeansOptions::seeded(cfg.seed)
    };
    Ok(RawProposals {
        frames: feat.frames(),
        cluster: cluster_bounds_with(feat, cfg.num_classes, &opts)?,
        cosine_scores: frame_scores(feat, Metric::Cosine, SimilarityUnit::Flatten)?,
        dtw_scores: dtw_scores(feat, cfg.dtw_unit)?,
    })
}

pub fn detect(feat: &FeatureSequence, cfg: &DetectConfig) -> Result<Detection> {
    let raw = propose(feat, cfg)?;
    let (boundaries, proposals) = raw.resolve(cfg.b_intrv);
    Ok(Detection {
        boundaries,
        proposals,
        raw,
    })
}

/// Seeded Gaussian projection of every frame to `target` dimensions,
/// scaled by `1 / sqrt(target)`.
pub fn random_projection(feat: &FeatureSequence, target: usize, seed: u64) -> FeatureSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0 / (target as f64).sqrt()).expect("positive std");
    let dim = feat.dim();
    let weights: Vec<f64> = (0..dim * target).map(|_| normal.sample(&mut rng)).collect();
    let mut values = Vec::with_capacity(feat.frames() * target);
    for t in 0..feat.frames() {
        let row = feat.row(t);
        for j in 0..target {
            let w = &weights[j * dim..(j + 1) * dim];
            values.push(row.iter().zip(w).map(|(x, y)| x * y).sum());
        }
    }
    FeatureSequence::new(feat.frames(), target, values).expect("finite projection of finite input")
}

/// Labels every segment between consecutive boundaries with the most
/// frequent cluster id inside it (ties to the smaller id).
pub fn segment_labels(bounds: &BoundarySet, cluster_labels: &[usize]) -> LabelSequence {
    let k = cluster_labels.iter().max().map_or(1, |m| m + 1);
    let mut out = Vec::with_capacity(cluster_labels.len());
    let mut start = 0;
    let ends = bounds.iter().chain(std::iter::once(cluster_labels.len()));
    for end in ends {
        let mut counts = vec![0usize; k];
        cluster_labels[start..end]
            .iter()
            .for_each(|&c| counts[c] += 1);
        let best = (0..k)
            .max_by_key(|&c| (counts[c], std::cmp::Reverse(c)))
            .unwrap_or(0);
        out.extend(std::iter::repeat_n(best, end - start));
        start = end;
    }
    LabelSequence::new(out, k).expect("ids below k")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, Means, SegmentLengths, SynthSpec};

    fn bs(v: &[usize]) -> BoundarySet {
        BoundarySet::new(v.to_vec()).unwrap()
    }

    fn constant(frames: usize) -> FeatureSequence {
        FeatureSequence::from_rows(&vec![[0.5, -1.0, 2.0]; frames]).unwrap()
    }

    fn step(frames: usize, at: usize) -> FeatureSequence {
        let rows: Vec<[f64; 3]> = (0..frames)
            .map(|t| {
                if t <= at {
                    [1.0, 0.2, -0.4]
                } else {
                    [-0.5, 1.0, 0.3]
                }
            })
            .collect();
        FeatureSequence::from_rows(&rows).unwrap()
    }

    #[test]
    fn scores_on_constant_features() {
        let f = constant(10);
        let cos = frame_scores(&f, Metric::Cosine, SimilarityUnit::Flatten).unwrap();
        assert_eq!(cos.len(), 9);
        assert!(cos.iter().all(|&c| (c - 1.0).abs() < 1e-12));
        for unit in [
            DtwUnit::ScalarSeries,
            DtwUnit::MeanFrame,
            DtwUnit::Window(3),
        ] {
            assert!(dtw_scores(&f, unit).unwrap().iter().all(|&d| d == 0.0));
        }
    }

    #[test]
    fn scores_locate_a_step() {
        // frames 0..=6 share one vector, frames 7.. another
        let f = step(15, 6);
        let cos = frame_scores(&f, Metric::Cosine, SimilarityUnit::Flatten).unwrap();
        let argmin = (0..cos.len())
            .min_by(|&a, &b| cos[a].total_cmp(&cos[b]))
            .unwrap();
        assert_eq!(argmin, 6);
        for unit in [DtwUnit::ScalarSeries, DtwUnit::MeanFrame] {
            let d = dtw_scores(&f, unit).unwrap();
            let argmax = (0..d.len()).max_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap();
            assert_eq!(argmax, 6);
            assert!(d.iter().enumerate().all(|(i, &v)| (i == 6) == (v > 0.0)));
        }
    }

    #[test]
    fn two_frames_give_one_score() {
        assert_eq!(
            frame_scores(&step(2, 0), Metric::Cosine, SimilarityUnit::Flatten)
                .unwrap()
                .len(),
            1
        );
        assert!(frame_scores(&constant(1), Metric::Cosine, SimilarityUnit::Flatten).is_err());
    }

    #[test]
    fn mean_filter_examples() {
        // mean 0.75, only index 2 is below
        assert_eq!(mean_filter(&[1.0, 1.0, 0.0, 1.0], Keep::Below), bs(&[3]));
        assert!(mean_filter(&[2.0; 5], Keep::Below).is_empty());
        assert!(mean_filter(&[2.0; 5], Keep::Above).is_empty());
        // mean 3, only index 2 is above
        assert_eq!(mean_filter(&[0.0, 0.0, 9.0], Keep::Above), bs(&[3]));
    }

    #[test]
    fn remove_close_examples() {
        assert_eq!(remove_close(&bs(&[10, 12, 50]), 20), bs(&[10, 50]));
        assert!(remove_close(&bs(&[]), 5).is_empty());
        assert_eq!(remove_close(&bs(&[5, 25, 45]), 20), bs(&[5, 25, 45]));
    }

    #[test]
    fn merge_mean_examples() {
        assert_eq!(
            merge_mean(&[&bs(&[98]), &bs(&[102]), &bs(&[])], 20),
            bs(&[100])
        );
        let s = bs(&[10, 60, 200]);
        assert_eq!(merge_mean(&[&s, &s, &s], 20), s);
        assert_eq!(
            merge_mean(&[&bs(&[10]), &bs(&[200]), &bs(&[])], 20),
            bs(&[10, 200])
        );
    }

    #[test]
    fn auto_b_intrv_examples() {
        let cos = bs(&[10, 50, 80]); // max gap 40
        let dtw = bs(&[5, 60, 70]); // 55
        let clu = bs(&[20, 50]); // 30
        assert_eq!(auto_b_intrv(&[&cos, &dtw, &clu], 1000), 55);
        let only = bs(&[10, 20, 50]);
        assert_eq!(auto_b_intrv(&[&only, &bs(&[7]), &bs(&[])], 1000), 30);
        assert_eq!(auto_b_intrv(&[&bs(&[]), &bs(&[3]), &bs(&[])], 400), 50);
        // clamped to T / 2
        assert_eq!(auto_b_intrv(&[&bs(&[1, 99])], 100), 50);
    }

    #[test]
    fn cluster_bounds_cases() {
        let f = step(20, 9);
        assert_eq!(cluster_bounds(&f, 2, 0).unwrap().bounds, bs(&[10]));

        let c = cluster_bounds(&constant(12), 2, 0).unwrap();
        assert!(c.degenerate);

        let v = generate(&SynthSpec {
            dim: 4,
            lengths: SegmentLengths::Explicit(vec![15, 20, 25]),
            means: Means::Sampled { separation: 1.0 },
            noise_sigma: 0.0,
            seed: 11,
        })
        .unwrap();
        assert_eq!(
            cluster_bounds(&v.features, 3, 0).unwrap().bounds,
            bs(&[15, 35])
        );
        assert!(cluster_bounds(&constant(2), 3, 0).is_err());
    }

    #[test]
    fn detects_clean_five_segments() {
        let v = generate(&SynthSpec {
            dim: 8,
            lengths: SegmentLengths::Explicit(vec![100; 5]),
            means: Means::Sampled { separation: 1.0 },
            noise_sigma: 0.0,
            seed: 5,
        })
        .unwrap();
        let cfg = DetectConfig::new(5, Setting::Fixed(50));
        let d = detect(&v.features, &cfg).unwrap();
        assert_eq!(d.boundaries, bs(&[100, 200, 300, 400]));
        assert_eq!(d, detect(&v.features, &cfg).unwrap());
    }

    #[test]
    fn constant_features_do_not_crash() {
        let d = detect(&constant(60), &DetectConfig::new(3, Setting::Auto)).unwrap();
        assert!(d.boundaries.len() <= 1);
        assert!(d.raw.cluster.degenerate);
    }

    #[test]
    fn resolve_auto_uses_candidates() {
        let f = step(40, 19);
        let raw = propose(&f, &DetectConfig::new(2, Setting::Auto)).unwrap();
        let (_, p) = raw.resolve(Setting::Auto);
        assert!(p.b_intrv >= 2 && p.b_intrv <= 20);
    }

    #[test]
    fn projection_is_seeded() {
        let f = step(10, 4);
        let a = random_projection(&f, 2, 3);
        assert_eq!(a.dim(), 2);
        assert_eq!(a, random_projection(&f, 2, 3));
        assert_ne!(a, random_projection(&f, 2, 4));
    }

    #[test]
    fn segment_labels_take_majority() {
        let labels = segment_labels(&bs(&[3]), &[0, 0, 1, 1, 1, 0]);
        assert_eq!(labels.as_slice(), &[0, 0, 0, 1, 1, 1]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn boundary_set() -> impl Strategy<Value = BoundarySet> {
            prop::collection::btree_set(1usize..500, 0..40)
                .prop_map(|s| BoundarySet::new(s.into_iter().collect()).unwrap())
        }

        proptest! {
            #[test]
            fn thinned_gaps_respect_threshold(
                a in boundary_set(), b in boundary_set(), c in boundary_set(), gap in 1usize..60,
            ) {
                let r = remove_close(&a, gap);
                prop_assert!(r.gaps().iter().all(|&g| g >= gap));
                prop_assert_eq!(r.as_slice().first(), a.as_slice().first());
                let m = merge_mean(&[&a, &b, &c], gap);
                prop_assert!(m.gaps().iter().all(|&g| g >= gap));
            }
        }
    }
}
