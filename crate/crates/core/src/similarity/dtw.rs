//! Unconstrained dynamic time warping.

use crate::error::{Error, Result};

/// Accumulated DTW cost between two sequences of vectors, using the
/// Euclidean distance between elements as the step cost.
///
/// `D(i, j) = cost(i, j) + min(D(i-1, j), D(i, j-1), D(i-1, j-1))`, no band,
/// no normalization.
pub fn dtw<A, B>(a: &[A], b: &[B]) -> Result<f64>
where
    A: AsRef<[f64]>,
    B: AsRef<[f64]>,
{
    let (first_a, first_b) = match (a.first(), b.first()) {
        (Some(x), Some(y)) => (x.as_ref().len(), y.as_ref().len()),
        _ => return Err(Error::EmptySequence),
    };
    if first_a != first_b {
        return Err(Error::DimMismatch {
            expected: first_a,
            found: first_b,
        });
    }
    for row in a
        .iter()
        .map(AsRef::as_ref)
        .chain(b.iter().map(AsRef::as_ref))
    {
        if row.len() != first_a {
            return Err(Error::DimMismatch {
                expected: first_a,
                found: row.len(),
            });
        }
    }
    Ok(accumulate(a.len(), b.len(), |i, j| {
        euclidean(a[i].as_ref(), b[j].as_ref())
    }))
}

/// DTW between two scalar series, step cost `|a_i - b_j|`.
pub fn dtw_series(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySequence);
    }
    Ok(accumulate(a.len(), b.len(), |i, j| (a[i] - b[j]).abs()))
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn accumulate(n: usize, m: usize, cost: impl Fn(usize, usize) -> f64) -> f64 {
    // two rolling rows over the j axis
    let mut prev = vec![f64::INFINITY; m];
    let mut curr = vec![f64::INFINITY; m];
    for i in 0..n {
        for j in 0..m {
            let best = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => curr[j - 1],
                (_, 0) => prev[j],
                _ => prev[j].min(curr[j - 1]).min(prev[j - 1]),
            };
            curr[j] = cost(i, j) + best;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[m - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalars(v: &[f64]) -> Vec<[f64; 1]> {
        v.iter().map(|&x| [x]).collect()
    }

    #[test]
    fn identity_is_zero() {
        let x = vec![[1.0, 2.0], [3.0, -1.0], [0.5, 0.5]];
        assert_eq!(dtw(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn single_pair() {
        assert_eq!(dtw(&scalars(&[0.0]), &scalars(&[5.0])).unwrap(), 5.0);
        assert_eq!(dtw_series(&[0.0], &[5.0]).unwrap(), 5.0);
    }

    #[test]
    fn repeated_element_warps_for_free() {
        let a = scalars(&[1.0, 2.0, 3.0]);
        let b = scalars(&[1.0, 2.0, 2.0, 3.0]);
        assert_eq!(dtw(&a, &b).unwrap(), 0.0);
        assert_eq!(
            dtw_series(&[1.0, 2.0, 3.0], &[1.0, 2.0, 2.0, 3.0]).unwrap(),
            0.0
        );
    }

    #[test]
    fn errors() {
        let empty: Vec<[f64; 1]> = vec![];
        assert!(matches!(
            dtw(&empty, &scalars(&[1.0])),
            Err(Error::EmptySequence)
        ));
        let a = vec![vec![1.0, 2.0]];
        let b = vec![vec![1.0]];
        assert!(matches!(dtw(&a, &b), Err(Error::DimMismatch { .. })));
        assert!(dtw_series(&[], &[1.0]).is_err());
    }

    #[test]
    fn vector_elements_use_euclidean_cost() {
        let a = vec![[0.0, 0.0]];
        let b = vec![[3.0, 4.0]];
        assert_eq!(dtw(&a, &b).unwrap(), 5.0);
    }
}
