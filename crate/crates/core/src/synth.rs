//! Piecewise-constant synthetic videos with known boundaries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::sequence::{
    boundaries_of, from_boundaries, to_timeline, BoundarySet, FeatureSequence, LabelSequence,
};

const MEAN_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub enum SegmentLengths {
    Explicit(Vec<usize>),
    /// `count` lengths drawn uniformly from `[min, max]`.
    Sampled {
        count: usize,
        min: usize,
        max: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Means {
    /// One `D`-vector per segment.
    Explicit(Vec<Vec<f64>>),
    /// Coordinates uniform in `[-1, 1]`, resampled until every pair of
    /// segment means is at least `separation` apart.
    Sampled { separation: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub dim: usize,
    pub lengths: SegmentLengths,
    pub means: Means,
    pub noise_sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthVideo {
    pub features: FeatureSequence,
    /// Segment `k` carries class `k`.
    pub labels: LabelSequence,
    pub boundaries: BoundarySet,
    pub means: Vec<Vec<f64>>,
}

pub fn generate(spec: &SynthSpec) -> Result<SynthVideo> {
    if spec.dim == 0 {
        return Err(Error::Infeasible("dim must be positive".into()));
    }
    if !(spec.noise_sigma >= 0.0 && spec.noise_sigma.is_finite()) {
        return Err(Error::Infeasible(format!(
            "bad noise sigma {}",
            spec.noise_sigma
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let lengths = match &spec.lengths {
        SegmentLengths::Explicit(v) => v.clone(),
        &SegmentLengths::Sampled { count, min, max } => {
            if min == 0 || min > max {
                return Err(Error::Infeasible(format!(
                    "segment length range [{min}, {max}]"
                )));
            }
            (0..count).map(|_| rng.random_range(min..=max)).collect()
        }
    };
    if lengths.is_empty() || lengths.contains(&0) {
        return Err(Error::Infeasible(
            "need at least one non-empty segment".into(),
        ));
    }

    let means = match &spec.means {
        Means::Explicit(m) => {
            if m.len() != lengths.len() || m.iter().any(|v| v.len() != spec.dim) {
                return Err(Error::Infeasible(
                    "one D-vector per segment required".into(),
                ));
            }
            m.clone()
        }
        &Means::Sampled { separation } => {
            sample_means(&mut rng, lengths.len(), spec.dim, separation)?
        }
    };

    let frames: usize = lengths.iter().sum();
    let mut values = Vec::with_capacity(frames * spec.dim);
    for (len, mean) in lengths.iter().zip(&means) {
        for _ in 0..*len {
            values.extend_from_slice(mean);
        }
    }
    if spec.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, spec.noise_sigma).expect("finite sigma");
        values
            .iter_mut()
            .for_each(|v| *v += normal.sample(&mut rng));
    }

    let mut bounds = Vec::with_capacity(lengths.len() - 1);
    let mut acc = 0;
    for len in &lengths[..lengths.len() - 1] {
        acc += len;
        bounds.push(acc);
    }
    let boundaries = BoundarySet::new(bounds)?;
    let classes: Vec<usize> = (0..lengths.len()).collect();
    let labels = from_boundaries(&boundaries, &classes, frames, lengths.len())?;
    Ok(SynthVideo {
        features: FeatureSequence::new(frames, spec.dim, values)?,
        labels,
        boundaries,
        means,
    })
}

fn sample_means(
    rng: &mut ChaCha8Rng,
    count: usize,
    dim: usize,
    separation: f64,
) -> Result<Vec<Vec<f64>>> {
    let mut means: Vec<Vec<f64>> = Vec::with_capacity(count);
    for _ in 0..count {
        let mut placed = false;
        for _ in 0..MEAN_ATTEMPTS {
            let candidate: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let far_enough = means.iter().all(|m| {
                m.iter()
                    .zip(&candidate)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
                    >= separation
            });
            if far_enough {
                means.push(candidate);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Infeasible(format!(
                "cannot place {count} means {separation} apart in {dim} dimensions"
            )));
        }
    }
    Ok(means)
}

/// Moves every boundary by a uniform integer shift in `[-max_shift, max_shift]`,
/// keeping segment order and classes.
pub fn perturb_boundaries(
    labels: &LabelSequence,
    max_shift: usize,
    seed: u64,
) -> Result<LabelSequence> {
    let timeline = to_timeline(labels)?;
    let shortest = timeline
        .segments()
        .iter()
        .map(|s| s.len())
        .min()
        .unwrap_or(0);
    if timeline.len() > 1 && 2 * max_shift >= shortest {
        return Err(Error::Infeasible(format!(
            "shift {max_shift} could merge segments as short as {shortest}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift = max_shift as i64;
    let moved: Vec<usize> = boundaries_of(labels)?
        .iter()
        .map(|b| (b as i64 + rng.random_range(-shift..=shift)) as usize)
        .collect();
    let classes = labels.run_classes();
    from_boundaries(
        &BoundarySet::new(moved)?,
        &classes,
        labels.len(),
        labels.class_count(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(lengths: Vec<usize>, sigma: f64, seed: u64) -> SynthSpec {
        SynthSpec {
            dim: 4,
            lengths: SegmentLengths::Explicit(lengths),
            means: Means::Sampled { separation: 1.0 },
            noise_sigma: sigma,
            seed,
        }
    }

    #[test]
    fn clean_two_segments() {
        let v = generate(&spec(vec![16, 16], 0.0, 1)).unwrap();
        assert_eq!(v.boundaries.as_slice(), &[16]);
        assert_eq!(v.features.frames(), 32);
        for t in 0..32 {
            let expect = if t < 16 { &v.means[0] } else { &v.means[1] };
            assert_eq!(v.features.row(t), expect.as_slice());
        }
    }

    #[test]
    fn deterministic() {
        let s = spec(vec![10, 20, 30], 0.3, 9);
        assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
        let other = spec(vec![10, 20, 30], 0.3, 10);
        assert_ne!(
            generate(&s).unwrap().features,
            generate(&other).unwrap().features
        );
    }

    #[test]
    fn sampled_lengths_and_separation() {
        let s = SynthSpec {
            dim: 6,
            lengths: SegmentLengths::Sampled {
                count: 5,
                min: 20,
                max: 40,
            },
            means: Means::Sampled { separation: 1.0 },
            noise_sigma: 0.05,
            seed: 3,
        };
        let v = generate(&s).unwrap();
        assert_eq!(v.boundaries.len(), 4);
        assert_eq!(boundaries_of(&v.labels).unwrap(), v.boundaries);
        for (i, a) in v.means.iter().enumerate() {
            for b in &v.means[i + 1..] {
                let d: f64 = a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| (x - y).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert!(d >= 1.0);
            }
        }
    }

    #[test]
    fn infeasible_specs() {
        assert!(generate(&spec(vec![], 0.0, 0)).is_err());
        assert!(generate(&spec(vec![3, 0], 0.0, 0)).is_err());
        let crowded = SynthSpec {
            dim: 1,
            lengths: SegmentLengths::Explicit(vec![5; 5]),
            means: Means::Sampled { separation: 1.5 },
            noise_sigma: 0.0,
            seed: 0,
        };
        assert!(matches!(generate(&crowded), Err(Error::Infeasible(_))));
    }

    #[test]
    fn perturbation() {
        let v = generate(&spec(vec![16, 16], 0.0, 1)).unwrap();
        assert_eq!(perturb_boundaries(&v.labels, 0, 5).unwrap(), v.labels);
        let a = perturb_boundaries(&v.labels, 3, 5).unwrap();
        assert_eq!(a, perturb_boundaries(&v.labels, 3, 5).unwrap());
        let b = boundaries_of(&a).unwrap();
        assert_eq!(b.len(), 1);
        assert!((13..=19).contains(&b.as_slice()[0]));
        assert_eq!(a.run_classes(), vec![0, 1]);
        assert!(perturb_boundaries(&v.labels, 8, 5).is_err());
    }
}
