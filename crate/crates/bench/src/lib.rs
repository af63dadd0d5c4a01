//! Shared fixtures for the criterion benches.

use simseg::synth::{generate, Means, SegmentLengths, SynthSpec};
use simseg::{FeatureSequence, LabelSequence};

/// A synthetic video of `segments` segments of `len` frames each.
pub fn video(
    segments: usize,
    len: usize,
    dim: usize,
    noise: f64,
) -> (FeatureSequence, LabelSequence) {
    let spec = SynthSpec {
        dim,
        lengths: SegmentLengths::Explicit(vec![len; segments]),
        means: Means::Sampled { separation: 1.0 },
        noise_sigma: noise,
        seed: 42,
    };
    let video = generate(&spec).expect("valid synthetic spec");
    (video.features, video.labels)
}
