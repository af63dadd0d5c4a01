//! Supervised boundary correction.
//!
//! Each boundary of an existing frame-wise prediction is revisited on the
//! feature sequence. A window of `b_win` frames around it is cut into
//! `b_seg`-frame sub-segments and three detectors vote on which sub-segment
//! holds the transition:
//!
//! * cosine similarity between consecutive sub-segments (lowest wins),
//! * DTW cost between consecutive sub-segments (highest wins),
//! * two-way k-means over the window frames, read through
//!   [`transition_index`] on the per-segment majority cluster.
//!
//! The window is cut down to the span of the proposals and the procedure
//! repeats until the window is no wider than `b_seg`. A last two-way
//! clustering over the remaining frames picks the corrected frame.
//!
//! Windows are clamped to the midpoints between neighbouring boundaries, so
//! corrections never overlap, never merge segments and never change the
//! order or classes of segments.

use std::ops::Range;

use crate::config::{CorrectionConfig, Setting, DEFAULT_B_SEG, DEFAULT_B_WIN};
use crate::error::{Error, Result};
use crate::sequence::{boundaries_of, BoundarySet, FeatureSequence, LabelSequence};
use crate::similarity::{
    block_similarity, kmeans, transition_index, KMeansOptions, Metric, SimilarityUnit,
};

/// The part of the feature sequence still under consideration for one boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowState {
    pub start: usize,
    pub end: usize,
    pub segment_size: usize,
}

impl WindowState {
    pub fn width(&self) -> usize {
        self.end - self.start
    }

    pub fn segments(&self) -> usize {
        self.width() / self.segment_size
    }

    fn segment(&self, j: usize) -> Range<usize> {
        let s = self.start + j * self.segment_size;
        s..s + self.segment_size
    }
}

/// Segment indices proposed in one iteration, relative to that iteration's window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterationProposals {
    pub window: WindowState,
    pub cosine: usize,
    pub dtw: usize,
    /// `None` when the clustering showed no `0 -> 1` transition.
    pub cluster: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryCorrection {
    pub original: usize,
    pub corrected: usize,
    /// Neighbour-clamped window that the label rewrite may touch.
    pub extent: Range<usize>,
    pub iterations: usize,
    pub proposals: Vec<IterationProposals>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CorrectionReport {
    pub b_win: usize,
    pub b_seg: usize,
    pub boundaries: Vec<BoundaryCorrection>,
}

impl CorrectionReport {
    pub fn moved(&self) -> usize {
        self.boundaries
            .iter()
            .filter(|b| b.original != b.corrected)
            .count()
    }
}

/// Window parameters from the spread of boundary gaps: `b_win` is the
/// max/min gap ratio (clamped to `[4, 64]`, even) and `b_seg` is `b_win`
/// divided by its smallest divisor above one.
///
/// Fewer than two boundaries fall back to the fixed defaults.
pub fn auto_window_params(bounds: &BoundarySet) -> (usize, usize) {
    let gaps = bounds.gaps();
    let (Some(&max), Some(&min)) = (gaps.iter().max(), gaps.iter().min()) else {
        return (DEFAULT_B_WIN, DEFAULT_B_SEG);
    };
    let ratio = (max as f64 / min as f64).round() as usize;
    let mut b_win = ratio.clamp(4, 64);
    b_win -= b_win % 2;
    (b_win, segment_size_for(b_win))
}

fn segment_size_for(b_win: usize) -> usize {
    let divisor = (2..=b_win)
        .find(|d| b_win.is_multiple_of(*d))
        .unwrap_or(b_win);
    let mut b_seg = (b_win / divisor).max(2);
    while b_seg > 1 && !b_win.is_multiple_of(b_seg) {
        b_seg -= 1;
    }
    b_seg
}

fn resolve_window(cfg: &CorrectionConfig, bounds: &BoundarySet) -> Result<(usize, usize)> {
    let (auto_win, auto_seg) = auto_window_params(bounds);
    let b_win = cfg.b_win.fixed().unwrap_or(auto_win);
    let b_seg = match cfg.b_seg {
        Setting::Fixed(s) => s,
        Setting::Auto if cfg.b_win == Setting::Auto => auto_seg,
        Setting::Auto => segment_size_for(b_win),
    };
    CorrectionConfig::with_window(b_win, b_seg).validate()?;
    Ok((b_win, b_seg))
}

/// Corrects a single boundary of `labels`. The returned record carries the
/// corrected frame; labels are not modified.
pub fn correct_boundary(
    feat: &FeatureSequence,
    labels: &LabelSequence,
    boundary: usize,
    cfg: &CorrectionConfig,
) -> Result<BoundaryCorrection> {
    check_paired(feat, labels)?;
    cfg.validate()?;
    let bounds = boundaries_of(labels)?;
    let k = bounds
        .as_slice()
        .binary_search(&boundary)
        .map_err(|_| Error::NotABoundary(boundary))?;
    let (b_win, b_seg) = resolve_window(cfg, &bounds)?;
    correct_nth(feat, bounds.as_slice(), k, b_win, b_seg, cfg)
}

/// Corrects every boundary of `labels` and rewrites the frames around them.
pub fn correct_all(
    feat: &FeatureSequence,
    labels: &LabelSequence,
    cfg: &CorrectionConfig,
) -> Result<(LabelSequence, CorrectionReport)> {
    check_paired(feat, labels)?;
    cfg.validate()?;
    let bounds = boundaries_of(labels)?;
    let (b_win, b_seg) = resolve_window(cfg, &bounds)?;

    let mut report = CorrectionReport {
        b_win,
        b_seg,
        boundaries: Vec::with_capacity(bounds.len()),
    };
    let src = labels.as_slice();
    let mut out = src.to_vec();
    for k in 0..bounds.len() {
        let rec = correct_nth(feat, bounds.as_slice(), k, b_win, b_seg, cfg)?;
        let (left, right) = (src[rec.original - 1], src[rec.original]);
        out[rec.extent.start..rec.corrected].fill(left);
        out[rec.corrected..rec.extent.end].fill(right);
        report.boundaries.push(rec);
    }
    Ok((labels.with_labels(out)?, report))
}

fn check_paired(feat: &FeatureSequence, labels: &LabelSequence) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::EmptySequence);
    }
    if feat.frames() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: feat.frames(),
            found: labels.len(),
        });
    }
    Ok(())
}

/// Initial window for the `k`-th boundary: `b_win` frames centred on it,
/// clamped to the midpoints towards its neighbours and trimmed to a whole
/// number of `b_seg` segments.
fn initial_window(
    bounds: &[usize],
    k: usize,
    frames: usize,
    b_win: usize,
    b_seg: usize,
) -> WindowState {
    let b = bounds[k];
    let lo_limit = if k > 0 { (bounds[k - 1] + b) / 2 } else { 0 };
    let hi_limit = bounds.get(k + 1).map_or(frames, |&next| (b + next) / 2);
    let mut start = b.saturating_sub(b_win / 2).max(lo_limit);
    let mut end = (b + b_win / 2).min(hi_limit);
    while !(end - start).is_multiple_of(b_seg) {
        if b - start > end - b {
            start += 1;
        } else {
            end -= 1;
        }
    }
    WindowState {
        start,
        end,
        segment_size: b_seg,
    }
}

fn correct_nth(
    feat: &FeatureSequence,
    bounds: &[usize],
    k: usize,
    b_win: usize,
    b_seg: usize,
    cfg: &CorrectionConfig,
) -> Result<BoundaryCorrection> {
    let original = bounds[k];
    let initial = initial_window(bounds, k, feat.frames(), b_win, b_seg);
    let mut rec = BoundaryCorrection {
        original,
        corrected: original,
        extent: initial.start..initial.end,
        iterations: 0,
        proposals: Vec::new(),
    };
    if initial.width() < 2 * b_seg || initial.start >= original || initial.end <= original {
        return Ok(rec);
    }

    let mut win = initial;
    while win.width() > b_seg && rec.iterations < cfg.max_iterations {
        rec.iterations += 1;
        let m = win.segments();
        if m < 2 {
            match finer_segment_size(win) {
                Some(s) => {
                    win.segment_size = s;
                    continue;
                }
                None => break,
            }
        }

        let proposals = propose(feat, win, cfg)?;
        let lo = proposals
            .cosine
            .min(proposals.dtw)
            .min(proposals.cluster.unwrap_or(usize::MAX));
        let hi = proposals
            .cosine
            .max(proposals.dtw)
            .max(proposals.cluster.unwrap_or(0));
        rec.proposals.push(proposals);

        let shrunk = WindowState {
            start: win.segment(lo.saturating_sub(1)).start,
            end: win.segment(hi).end,
            segment_size: win.segment_size,
        };
        if shrunk.width() < win.width() {
            win = shrunk;
        } else if m >= 3 {
            win.start += win.segment_size;
            win.end -= win.segment_size;
        } else {
            // two segments that keep proposing each other: re-cut finer
            match finer_segment_size(win) {
                Some(s) => win.segment_size = s,
                None => break,
            }
        }
    }

    if let Some(idx) = cluster_transition(feat, win.start..win.end, cfg.seed)? {
        rec.corrected = win.start + idx;
    }
    Ok(rec)
}

/// Largest divisor of the window width below the current segment size.
fn finer_segment_size(win: WindowState) -> Option<usize> {
    let width = win.width();
    (1..win.segment_size.min(width))
        .rev()
        .find(|s| width.is_multiple_of(*s))
}

fn propose(
    feat: &FeatureSequence,
    win: WindowState,
    cfg: &CorrectionConfig,
) -> Result<IterationProposals> {
    let m = win.segments();
    let mut cos_best = (1, f64::INFINITY);
    let mut dtw_best = (1, f64::NEG_INFINITY);
    for j in 1..m {
        let left = feat.block(win.segment(j - 1));
        let right = feat.block(win.segment(j));
        let c = block_similarity(left, right, cfg.cosine_unit, Metric::Cosine)?;
        let d = block_similarity(left, right, dtw_unit(cfg.dtw_unit), Metric::Dtw)?;
        if c < cos_best.1 {
            cos_best = (j, c);
        }
        if d > dtw_best.1 {
            dtw_best = (j, d);
        }
    }

    let frames = feat.block(win.start..win.end);
    let ca = kmeans(
        frames.flat(),
        feat.dim(),
        2,
        &KMeansOptions::seeded(cfg.seed),
    )?;
    let mut per_segment: Vec<usize> = ca
        .labels
        .chunks_exact(win.segment_size)
        .map(majority_bit)
        .collect();
    if per_segment[0] == 1 {
        per_segment.iter_mut().for_each(|b| *b = 1 - *b);
    }

    Ok(IterationProposals {
        window: win,
        cosine: cos_best.0,
        dtw: dtw_best.0,
        cluster: transition_index(&per_segment),
    })
}

fn dtw_unit(unit: SimilarityUnit) -> SimilarityUnit {
    // scalar-series only makes sense for single frames; blocks use frame sequences
    match unit {
        SimilarityUnit::ScalarSeries => SimilarityUnit::Flatten,
        other => other,
    }
}

/// Majority of a 0/1 slice; ties go to the value seen first.
fn majority_bit(bits: &[usize]) -> usize {
    let ones = bits.iter().filter(|&&b| b == 1).count();
    let zeros = bits.len() - ones;
    match ones.cmp(&zeros) {
        std::cmp::Ordering::Greater => 1,
        std::cmp::Ordering::Less => 0,
        std::cmp::Ordering::Equal => bits[0],
    }
}

fn cluster_transition(
    feat: &FeatureSequence,
    range: Range<usize>,
    seed: u64,
) -> Result<Option<usize>> {
    if range.len() < 2 {
        return Ok(None);
    }
    let frames = feat.block(range);
    let ca = kmeans(frames.flat(), feat.dim(), 2, &KMeansOptions::seeded(seed))?;
    Ok(transition_index(&ca.labels))
}
