//! Frame accuracy, segmental edit score, segmental F1@k and boundary F1.
//!
//! Every score is a percentage in `[0, 100]`. Corpus scores come from
//! per-video [`VideoTally`] values combined in input order, so the result
//! does not depend on how the tallies were computed.

use std::fmt;

use crate::error::{Error, Result};
use crate::sequence::{boundaries_of, to_timeline, BoundarySet, LabelSequence, Segment};

/// IoU thresholds reported by [`evaluate`], in report order.
pub const F1_THRESHOLDS: [f64; 3] = [0.10, 0.25, 0.50];
pub const DEFAULT_BOUNDARY_TOLERANCE: usize = 5;

fn check_lengths(pred: &LabelSequence, gt: &LabelSequence) -> Result<()> {
    if pred.len() != gt.len() {
        return Err(Error::LengthMismatch {
            expected: gt.len(),
            found: pred.len(),
        });
    }
    if gt.is_empty() {
        return Err(Error::EmptySequence);
    }
    Ok(())
}

pub fn frame_accuracy(pred: &LabelSequence, gt: &LabelSequence) -> Result<f64> {
    check_lengths(pred, gt)?;
    Ok(100.0 * correct_frames(pred, gt) as f64 / gt.len() as f64)
}

fn correct_frames(pred: &LabelSequence, gt: &LabelSequence) -> usize {
    pred.as_slice()
        .iter()
        .zip(gt.as_slice())
        .filter(|(p, g)| p == g)
        .count()
}

/// Unit-cost Levenshtein distance.
pub fn levenshtein(a: &[usize], b: &[usize]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn kept_segments(labels: &LabelSequence, ignore: &[usize]) -> Result<Vec<Segment>> {
    Ok(to_timeline(labels)?
        .segments()
        .iter()
        .filter(|s| !ignore.contains(&s.class))
        .copied()
        .collect())
}

pub fn edit_score(pred: &LabelSequence, gt: &LabelSequence) -> Result<f64> {
    edit_score_ignoring(pred, gt, &[])
}

/// Segments of ignored classes are dropped before comparing; neighbours of a
/// dropped segment are not merged.
pub fn edit_score_ignoring(
    pred: &LabelSequence,
    gt: &LabelSequence,
    ignore: &[usize],
) -> Result<f64> {
    let p: Vec<usize> = kept_segments(pred, ignore)?
        .iter()
        .map(|s| s.class)
        .collect();
    let g: Vec<usize> = kept_segments(gt, ignore)?.iter().map(|s| s.class).collect();
    let longest = p.len().max(g.len());
    if longest == 0 {
        return Ok(100.0);
    }
    let dist = levenshtein(&p, &g) as f64;
    Ok((100.0 * (1.0 - dist / longest as f64)).max(0.0))
}

/// True/false positive and false negative counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Tally {
    /// `2PR / (P + R)` as a percentage. Nothing on either side counts as
    /// full agreement; otherwise `P + R = 0` gives 0.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            return 100.0;
        }
        100.0 * (2 * self.tp) as f64 / denom as f64
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl std::ops::Add for Tally {
    type Output = Tally;

    fn add(self, o: Tally) -> Tally {
        Tally {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
        }
    }
}

impl std::iter::Sum for Tally {
    fn sum<I: Iterator<Item = Tally>>(iter: I) -> Tally {
        iter.fold(Tally::default(), |a, b| a + b)
    }
}

/// How predicted segments are paired with ground-truth segments.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum SegmentMatching {
    /// Largest possible number of one-to-one same-class pairs with IoU at
    /// or above the threshold.
    #[default]
    Maximum,
    /// Each predicted segment, in order, takes its best-IoU ground-truth
    /// segment of the same class if that one is still free.
    Greedy,
}

fn iou(a: &Segment, b: &Segment) -> f64 {
    let inter = a.end.min(b.end).saturating_sub(a.start.max(b.start));
    let union = a.end.max(b.end) - a.start.min(b.start);
    inter as f64 / union as f64
}

pub fn segment_tally(
    pred: &LabelSequence,
    gt: &LabelSequence,
    threshold: f64,
    matching: SegmentMatching,
    ignore: &[usize],
) -> Result<Tally> {
    check_lengths(pred, gt)?;
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidValue(format!(
            "IoU threshold {threshold} outside (0, 1)"
        )));
    }
    let p = kept_segments(pred, ignore)?;
    let g = kept_segments(gt, ignore)?;
    let tp = match matching {
        SegmentMatching::Maximum => {
            let edges: Vec<Vec<usize>> = p
                .iter()
                .map(|ps| {
                    (0..g.len())
                        .filter(|&j| g[j].class == ps.class && iou(ps, &g[j]) >= threshold)
                        .collect()
                })
                .collect();
            max_matching(&edges, g.len())
        }
        SegmentMatching::Greedy => {
            let mut used = vec![false; g.len()];
            let mut tp = 0;
            for ps in &p {
                let best = (0..g.len())
                    .filter(|&j| g[j].class == ps.class)
                    .map(|j| (j, iou(ps, &g[j])))
                    .fold(None, |acc: Option<(usize, f64)>, (j, v)| match acc {
                        Some((_, bv)) if bv >= v => acc,
                        _ => Some((j, v)),
                    });
                if let Some((j, v)) = best {
                    if v >= threshold && !used[j] {
                        used[j] = true;
                        tp += 1;
                    }
                }
            }
            tp
        }
    };
    Ok(Tally {
        tp,
        fp: p.len() - tp,
        fn_: g.len() - tp,
    })
}

/// Maximum bipartite matching by augmenting paths; `edges[i]` lists the
/// right vertices adjacent to left vertex `i`.
fn max_matching(edges: &[Vec<usize>], right: usize) -> usize {
    fn augment(
        i: usize,
        edges: &[Vec<usize>],
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for &j in &edges[i] {
            if seen[j] {
                continue;
            }
            seen[j] = true;
            if owner[j].is_none_or(|k| augment(k, edges, seen, owner)) {
                owner[j] = Some(i);
                return true;
            }
        }
        false
    }
    let mut owner = vec![None; right];
    let mut size = 0;
    for i in 0..edges.len() {
        let mut seen = vec![false; right];
        if augment(i, edges, &mut seen, &mut owner) {
            size += 1;
        }
    }
    size
}

pub fn f1_at(pred: &LabelSequence, gt: &LabelSequence, iou_threshold: f64) -> Result<f64> {
    Ok(segment_tally(pred, gt, iou_threshold, SegmentMatching::Maximum, &[])?.f1())
}

/// Each predicted boundary, left to right, takes the nearest free
/// ground-truth boundary within `tolerance` frames; ties go to the earlier one.
pub fn boundary_tally(pred: &BoundarySet, gt: &BoundarySet, tolerance: usize) -> Tally {
    let g = gt.as_slice();
    let mut used = vec![false; g.len()];
    let mut tp = 0;
    for p in pred.iter() {
        let hit = (0..g.len())
            .filter(|&j| !used[j] && g[j].abs_diff(p) <= tolerance)
            .min_by_key(|&j| g[j].abs_diff(p));
        if let Some(j) = hit {
            used[j] = true;
            tp += 1;
        }
    }
    Tally {
        tp,
        fp: pred.len() - tp,
        fn_: g.len() - tp,
    }
}

pub fn boundary_f1(pred: &BoundarySet, gt: &BoundarySet, tolerance: usize) -> f64 {
    boundary_tally(pred, gt, tolerance).f1()
}

/// How arbitrary predicted ids are turned into ground-truth classes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum LabelMatching {
    /// One-to-one, maximising total frame overlap.
    #[default]
    Hungarian,
    /// Each id takes the class it overlaps most; several ids may share one.
    Greedy,
}

/// Frame overlap between predicted id `i` and ground-truth class `j`.
pub fn overlap_matrix(pred: &LabelSequence, gt: &LabelSequence) -> Result<Vec<Vec<usize>>> {
    check_lengths(pred, gt)?;
    let mut m = vec![vec![0; gt.class_count()]; pred.class_count()];
    for (&p, &g) in pred.as_slice().iter().zip(gt.as_slice()) {
        m[p][g] += 1;
    }
    Ok(m)
}

/// Ground-truth class for every predicted id; `None` when left unassigned.
pub fn label_mapping(
    pred: &LabelSequence,
    gt: &LabelSequence,
    how: LabelMatching,
) -> Result<Vec<Option<usize>>> {
    let overlap = overlap_matrix(pred, gt)?;
    Ok(match how {
        LabelMatching::Hungarian => max_weight_assignment(&overlap),
        LabelMatching::Greedy => overlap
            .iter()
            .map(|row| {
                let top = row.iter().copied().max()?;
                (top > 0).then(|| row.iter().position(|&v| v == top).unwrap())
            })
            .collect(),
    })
}

/// Relabels `pred` with ground-truth classes. Ids left unassigned become
/// class `gt.class_count()`, so the result has one extra class.
pub fn hungarian_label_match(pred: &LabelSequence, gt: &LabelSequence) -> Result<LabelSequence> {
    match_labels(pred, gt, LabelMatching::Hungarian)
}

pub fn match_labels(
    pred: &LabelSequence,
    gt: &LabelSequence,
    how: LabelMatching,
) -> Result<LabelSequence> {
    let map = label_mapping(pred, gt, how)?;
    let unmatched = gt.class_count();
    let labels = pred
        .as_slice()
        .iter()
        .map(|&p| map[p].unwrap_or(unmatched))
        .collect();
    LabelSequence::new(labels, unmatched + 1)
}

/// Row-to-column assignment maximising the summed weight. Every row gets a
/// column when there are at least as many columns, and vice versa.
pub fn max_weight_assignment(weights: &[Vec<usize>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    if rows <= cols {
        let cost: Vec<Vec<i64>> = weights
            .iter()
            .map(|r| r.iter().map(|&w| -(w as i64)).collect())
            .collect();
        hungarian(&cost).into_iter().map(Some).collect()
    } else {
        let cost: Vec<Vec<i64>> = (0..cols)
            .map(|c| (0..rows).map(|r| -(weights[r][c] as i64)).collect())
            .collect();
        let mut out = vec![None; rows];
        for (c, r) in hungarian(&cost).into_iter().enumerate() {
            out[r] = Some(c);
        }
        out
    }
}

/// Minimum-cost assignment for `n <= m`; returns the column of each row.
fn hungarian(cost: &[Vec<i64>]) -> Vec<usize> {
    const INF: i64 = i64::MAX / 4;
    let n = cost.len();
    let m = cost[0].len();
    debug_assert!(n <= m);
    // 1-based; column 0 is a sentinel
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![INF; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        while j0 != 0 {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
        }
    }
    let mut col_of = vec![0; n];
    for j in 1..=m {
        if owner[j] != 0 {
            col_of[owner[j] - 1] = j - 1;
        }
    }
    col_of
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalOptions {
    pub boundary_tolerance: usize,
    /// Classes left out of edit, F1 and boundary scoring. Accuracy counts
    /// every frame.
    pub ignore: Vec<usize>,
    pub matching: SegmentMatching,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            boundary_tolerance: DEFAULT_BOUNDARY_TOLERANCE,
            ignore: Vec::new(),
            matching: SegmentMatching::Maximum,
        }
    }
}

/// Everything needed to combine one video into a corpus score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VideoTally {
    pub frames: usize,
    pub correct: usize,
    pub edit: f64,
    pub segments: [Tally; 3],
    pub boundaries: Tally,
}

pub fn tally(pred: &LabelSequence, gt: &LabelSequence, opts: &EvalOptions) -> Result<VideoTally> {
    check_lengths(pred, gt)?;
    let mut segments = [Tally::default(); 3];
    for (slot, &thr) in segments.iter_mut().zip(&F1_THRESHOLDS) {
        *slot = segment_tally(pred, gt, thr, opts.matching, &opts.ignore)?;
    }
    Ok(VideoTally {
        frames: gt.len(),
        correct: correct_frames(pred, gt),
        edit: edit_score_ignoring(pred, gt, &opts.ignore)?,
        segments,
        boundaries: boundary_tally(
            &kept_boundaries(pred, &opts.ignore)?,
            &kept_boundaries(gt, &opts.ignore)?,
            opts.boundary_tolerance,
        ),
    })
}

/// Boundaries with at least one side outside the ignored classes.
fn kept_boundaries(labels: &LabelSequence, ignore: &[usize]) -> Result<BoundarySet> {
    let all = boundaries_of(labels)?;
    if ignore.is_empty() {
        return Ok(all);
    }
    let l = labels.as_slice();
    let kept = all
        .iter()
        .filter(|&b| !(ignore.contains(&l[b - 1]) && ignore.contains(&l[b])))
        .collect();
    BoundarySet::new(kept)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult {
    pub acc: f64,
    pub edit: f64,
    pub f1_10: f64,
    pub f1_25: f64,
    pub f1_50: f64,
    pub boundary_f1: f64,
}

impl EvalResult {
    /// Accuracy is frame-weighted, edit is the mean over videos, F1 scores
    /// come from summed tallies.
    pub fn from_tallies(tallies: &[VideoTally]) -> Result<Self> {
        if tallies.is_empty() {
            return Err(Error::NothingToEvaluate);
        }
        let frames: usize = tallies.iter().map(|t| t.frames).sum();
        let correct: usize = tallies.iter().map(|t| t.correct).sum();
        let seg = |k: usize| tallies.iter().map(|t| t.segments[k]).sum::<Tally>().f1();
        Ok(Self {
            acc: 100.0 * correct as f64 / frames as f64,
            edit: tallies.iter().map(|t| t.edit).sum::<f64>() / tallies.len() as f64,
            f1_10: seg(0),
            f1_25: seg(1),
            f1_50: seg(2),
            boundary_f1: tallies.iter().map(|t| t.boundaries).sum::<Tally>().f1(),
        })
    }

    /// Report fields in order, with their machine-readable keys.
    pub fn fields(&self) -> [(&'static str, f64); 6] {
        [
            ("acc", self.acc),
            ("edit", self.edit),
            ("f1_10", self.f1_10),
            ("f1_25", self.f1_25),
            ("f1_50", self.f1_50),
            ("boundary_f1", self.boundary_f1),
        ]
    }

    /// Composite used to compare runs: mean of all six fields.
    pub fn average(&self) -> f64 {
        self.fields().iter().map(|(_, v)| v).sum::<f64>() / 6.0
    }

    /// `key=value` lines with four decimals.
    pub fn to_key_values(&self) -> String {
        self.fields()
            .iter()
            .map(|(k, v)| format!("{k}={v:.4}\n"))
            .collect()
    }
}

impl fmt::Display for EvalResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Acc {:.1}  Edit {:.1}  F1@{{10,25,50}} {:.1} {:.1} {:.1}  BF1 {:.1}",
            self.acc, self.edit, self.f1_10, self.f1_25, self.f1_50, self.boundary_f1
        )
    }
}

pub fn evaluate(
    pred: &LabelSequence,
    gt: &LabelSequence,
    opts: &EvalOptions,
) -> Result<EvalResult> {
    EvalResult::from_tallies(&[tally(pred, gt, opts)?])
}

/// Corpus score over `(prediction, ground truth)` pairs.
pub fn evaluate_batch<'a, I>(pairs: I, opts: &EvalOptions) -> Result<EvalResult>
where
    I: IntoIterator<Item = (&'a LabelSequence, &'a LabelSequence)>,
{
    let tallies = pairs
        .into_iter()
        .map(|(p, g)| tally(p, g, opts))
        .collect::<Result<Vec<_>>>()?;
    EvalResult::from_tallies(&tallies)
}
