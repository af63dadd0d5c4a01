//! Frame-wise voting over several predictions and sliding-window smoothing.

use crate::config::Setting;
use crate::error::{Error, Result};
use crate::sequence::{boundaries_of, LabelSequence};

pub const DEFAULT_S_WIN: usize = 16;

/// Two or more predictions of the same video.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    sources: Vec<LabelSequence>,
    trusted: usize,
}

impl PredictionSet {
    /// The last source is trusted when every source disagrees.
    pub fn new(sources: Vec<LabelSequence>) -> Result<Self> {
        let trusted = sources.len().saturating_sub(1);
        Self::with_trusted(sources, trusted)
    }

    pub fn with_trusted(sources: Vec<LabelSequence>, trusted: usize) -> Result<Self> {
        if sources.len() < 2 {
            return Err(Error::InvalidValue(format!(
                "voting needs at least 2 predictions, got {}",
                sources.len()
            )));
        }
        if trusted >= sources.len() {
            return Err(Error::InvalidValue(format!(
                "trusted source {trusted} out of range for {} sources",
                sources.len()
            )));
        }
        let first = &sources[0];
        for s in &sources[1..] {
            if s.len() != first.len() {
                return Err(Error::LengthMismatch {
                    expected: first.len(),
                    found: s.len(),
                });
            }
            if s.class_count() != first.class_count() {
                return Err(Error::InvalidValue(
                    "predictions disagree on the class count".into(),
                ));
            }
        }
        Ok(Self { sources, trusted })
    }

    pub fn sources(&self) -> &[LabelSequence] {
        &self.sources
    }

    pub fn trusted(&self) -> usize {
        self.trusted
    }
}

/// Frame-wise majority vote.
///
/// A class with strictly more votes than any other wins. Otherwise the
/// trusted source's class wins if it is among the most voted, and failing
/// that the most voted class of the lowest-indexed source.
pub fn vote(preds: &PredictionSet) -> LabelSequence {
    let first = &preds.sources[0];
    let mut counts = vec![0usize; first.class_count()];
    let mut out = Vec::with_capacity(first.len());
    for t in 0..first.len() {
        counts.iter_mut().for_each(|c| *c = 0);
        for s in &preds.sources {
            counts[s.as_slice()[t]] += 1;
        }
        let top = counts.iter().copied().max().unwrap_or(0);
        let leaders = counts.iter().filter(|&&c| c == top).count();
        let trusted_class = preds.sources[preds.trusted].as_slice()[t];
        let winner = if leaders == 1 {
            counts.iter().position(|&c| c == top).unwrap()
        } else if counts[trusted_class] == top {
            trusted_class
        } else {
            preds
                .sources
                .iter()
                .map(|s| s.as_slice()[t])
                .find(|&c| counts[c] == top)
                .unwrap()
        };
        out.push(winner);
    }
    first.with_labels(out).expect("winners are input classes")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmoothConfig {
    pub s_win: Setting,
    /// Frames both windows advance per step; `None` means `s_win`.
    pub stride: Option<usize>,
}

impl Default for SmoothConfig {
    fn default() -> Self {
        Self {
            s_win: Setting::Fixed(DEFAULT_S_WIN),
            stride: None,
        }
    }
}

impl SmoothConfig {
    pub fn fixed(s_win: usize) -> Self {
        Self {
            s_win: Setting::Fixed(s_win),
            stride: None,
        }
    }
}

/// Window size from the longest run between consecutive boundaries, where
/// the sequence ends count as boundaries: `round(max_gap / 10)`, at least 2.
pub fn auto_s_win(labels: &LabelSequence) -> usize {
    let Ok(bounds) = boundaries_of(labels) else {
        return DEFAULT_S_WIN;
    };
    let mut edges = vec![0];
    edges.extend(bounds.iter());
    edges.push(labels.len());
    let max_gap = edges.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0);
    ((max_gap as f64 / 10.0).round() as usize).max(2)
}

/// Two adjacent windows slide left to right; only the first is rewritten.
///
/// With `m1`/`m2` the majority classes of the two windows, the first window
/// becomes `m1` everywhere when `m1 == m2` (or the second window is empty).
/// Otherwise the run of `m2` frames closing the first window is kept, since
/// it starts the next segment, and the rest becomes `m1`.
/// Frames at the head of the first window that continue the class of the
/// frame just before it are kept, so a boundary already in place is never
/// dragged. Frames past the last full first window are left alone.
pub fn smooth(labels: &LabelSequence, cfg: &SmoothConfig) -> Result<LabelSequence> {
    let s_win = match cfg.s_win {
        Setting::Fixed(0) => return Err(Error::InvalidConfig("s_win must be positive".into())),
        Setting::Fixed(s) => s,
        Setting::Auto => auto_s_win(labels),
    };
    let stride = cfg.stride.unwrap_or(s_win);
    if stride == 0 {
        return Err(Error::InvalidConfig("stride must be positive".into()));
    }

    let t_len = labels.len();
    let mut out = labels.as_slice().to_vec();
    let mut counts = vec![0usize; labels.class_count()];
    let mut p = 0;
    while p + s_win <= t_len {
        let w1 = p..p + s_win;
        let w2 = p + s_win..(p + 2 * s_win).min(t_len);
        let m1 = majority(&out[w1.clone()], &mut counts);
        let m2 = (!w2.is_empty()).then(|| majority(&out[w2], &mut counts));
        let lead = match p.checked_sub(1).map(|q| out[q]) {
            Some(carry) => out[w1.clone()].iter().take_while(|&&c| c == carry).count(),
            None => 0,
        };
        let trail = match m2 {
            Some(m2) if m2 != m1 => out[w1.clone()]
                .iter()
                .rev()
                .take_while(|&&c| c == m2)
                .count(),
            _ => 0,
        };
        for t in w1.start + lead..w1.end.saturating_sub(trail) {
            out[t] = m1;
        }
        p += stride;
    }
    labels.with_labels(out)
}

/// Most frequent class; ties go to the class seen first.
fn majority(window: &[usize], counts: &mut [usize]) -> usize {
    counts.iter_mut().for_each(|c| *c = 0);
    window.iter().for_each(|&c| counts[c] += 1);
    let top = window.iter().map(|&c| counts[c]).max().unwrap_or(0);
    *window
        .iter()
        .find(|&&c| counts[c] == top)
        .expect("non-empty window")
}
