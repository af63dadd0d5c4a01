//! Frame-wise and segment-wise views of a video.
//!
//! A video is a [`FeatureSequence`] (one feature vector per frame) paired
//! with a [`LabelSequence`] (one class id per frame). Boundaries follow the
//! half-open convention: a boundary at `i` means frame `i` starts a new
//! segment, so every boundary lies in `[1, T - 1]`.

use std::ops::Range;

use crate::error::{Error, Result};

/// Row-major `T x D` matrix of finite per-frame features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    frames: usize,
    dim: usize,
    values: Vec<f64>,
}

impl FeatureSequence {
    pub fn new(frames: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if frames == 0 || dim == 0 {
            return Err(Error::EmptySequence);
        }
        if values.len() != frames * dim {
            return Err(Error::LengthMismatch {
                expected: frames * dim,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(Self {
            frames,
            dim,
            values,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptySequence)?;
        let dim = first.as_ref().len();
        let mut values = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), dim, values)
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn row(&self, frame: usize) -> &[f64] {
        &self.values[frame * self.dim..(frame + 1) * self.dim]
    }

    /// Contiguous frames `[range.start, range.end)`.
    pub fn block(&self, range: Range<usize>) -> FrameBlock<'_> {
        assert!(range.start <= range.end && range.end <= self.frames);
        FrameBlock {
            dim: self.dim,
            data: &self.values[range.start * self.dim..range.end * self.dim],
        }
    }

    pub fn transposed(&self) -> Self {
        let mut values = vec![0.0; self.values.len()];
        for t in 0..self.frames {
            for d in 0..self.dim {
                values[d * self.frames + t] = self.values[t * self.dim + d];
            }
        }
        Self {
            frames: self.dim,
            dim: self.frames,
            values,
        }
    }
}

/// A borrowed run of consecutive frames.
#[derive(Debug, Clone, Copy)]
pub struct FrameBlock<'a> {
    dim: usize,
    data: &'a [f64],
}

impl<'a> FrameBlock<'a> {
    pub fn new(data: &'a [f64], dim: usize) -> Self {
        assert!(dim > 0 && data.len().is_multiple_of(dim));
        Self { dim, data }
    }

    pub fn frames(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// All frames concatenated row-major.
    pub fn flat(&self) -> &'a [f64] {
        self.data
    }

    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &'a [f64]> + 'a {
        self.data.chunks_exact(self.dim)
    }

    pub fn mean_frame(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim];
        for row in self.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        let n = self.frames().max(1) as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }
}

/// Per-frame class ids, each below `class_count`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelSequence {
    labels: Vec<usize>,
    class_count: usize,
}

impl LabelSequence {
    pub fn new(labels: Vec<usize>, class_count: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
            return Err(Error::InvalidValue(format!(
                "label {bad} out of range for {class_count} classes"
            )));
        }
        Ok(Self {
            labels,
            class_count,
        })
    }

    /// Uses `max + 1` as the class count.
    pub fn from_labels(labels: Vec<usize>) -> Self {
        let class_count = labels.iter().max().map_or(0, |m| m + 1);
        Self {
            labels,
            class_count,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.labels
    }

    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Self> {
        Self::new(labels, self.class_count)
    }

    /// Class of each maximal constant run, in order.
    pub fn run_classes(&self) -> Vec<usize> {
        let mut runs: Vec<usize> = Vec::new();
        for &l in &self.labels {
            if runs.last() != Some(&l) {
                runs.push(l);
            }
        }
        runs
    }
}

/// Strictly increasing frame indices where a new segment starts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct BoundarySet {
    indices: Vec<usize>,
}

impl BoundarySet {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.first() == Some(&0) {
            return Err(Error::InvalidValue("boundary at frame 0".into()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidValue(
                "boundaries must be strictly increasing".into(),
            ));
        }
        Ok(Self { indices })
    }

    /// Sorts, deduplicates and drops frame 0.
    pub fn from_unsorted(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        indices.retain(|&i| i > 0);
        Self { indices }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.indices
    }

    pub fn check_within(&self, frames: usize) -> Result<()> {
        match self.indices.last() {
            Some(&last) if last >= frames => Err(Error::InvalidValue(format!(
                "boundary {last} outside [1, {})",
                frames
            ))),
            _ => Ok(()),
        }
    }

    /// Gaps between consecutive boundaries.
    pub fn gaps(&self) -> Vec<usize> {
        self.indices.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Segment {
    pub class: usize,
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Run-length view of a label sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentTimeline {
    segments: Vec<Segment>,
}

impl SegmentTimeline {
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn frames(&self) -> usize {
        self.segments.last().map_or(0, |s| s.end)
    }
}

pub fn to_timeline(labels: &LabelSequence) -> Result<SegmentTimeline> {
    let first = *labels.as_slice().first().ok_or(Error::EmptySequence)?;
    let mut segments = vec![Segment {
        class: first,
        start: 0,
        end: 1,
    }];
    for (t, &l) in labels.as_slice().iter().enumerate().skip(1) {
        let last = segments.last_mut().unwrap();
        if l == last.class {
            last.end = t + 1;
        } else {
            segments.push(Segment {
                class: l,
                start: t,
                end: t + 1,
            });
        }
    }
    Ok(SegmentTimeline { segments })
}

pub fn boundaries_of(labels: &LabelSequence) -> Result<BoundarySet> {
    if labels.is_empty() {
        return Err(Error::EmptySequence);
    }
    let indices = labels
        .as_slice()
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] != w[1])
        .map(|(i, _)| i + 1)
        .collect();
    Ok(BoundarySet { indices })
}

/// Inverse of [`boundaries_of`]: segment `k` covers frames up to the `k`-th boundary.
pub fn from_boundaries(
    bounds: &BoundarySet,
    segment_classes: &[usize],
    frames: usize,
    class_count: usize,
) -> Result<LabelSequence> {
    if segment_classes.len() != bounds.len() + 1 {
        return Err(Error::LengthMismatch {
            expected: bounds.len() + 1,
            found: segment_classes.len(),
        });
    }
    if frames == 0 {
        return Err(Error::EmptySequence);
    }
    bounds.check_within(frames)?;
    let mut labels = Vec::with_capacity(frames);
    let mut start = 0;
    for (k, &class) in segment_classes.iter().enumerate() {
        let end = bounds.as_slice().get(k).copied().unwrap_or(frames);
        labels.extend(std::iter::repeat_n(class, end - start));
        start = end;
    }
    LabelSequence::new(labels, class_count)
}
