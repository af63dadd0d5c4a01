/// Index of the first `1` inside the longest `0+1+` run of a binary
/// cluster-label sequence, or `None` when no `0 -> 1` transition exists.
///
/// Ties between equally long runs go to the earliest one.
pub fn transition_index(bits: &[usize]) -> Option<usize> {
    debug_assert!(bits.iter().all(|&b| b <= 1));
    // (value, start, len) for each maximal constant run
    let mut runs: Vec<(usize, usize, usize)> = Vec::new();
    for (i, &b) in bits.iter().enumerate() {
        match runs.last_mut() {
            Some(run) if run.0 == b => run.2 += 1,
            _ => runs.push((b, i, 1)),
        }
    }
    let mut best: Option<(usize, usize)> = None;
    for pair in runs.windows(2) {
        let (zeros, ones) = (pair[0], pair[1]);
        if zeros.0 != 0 || ones.0 != 1 {
            continue;
        }
        let len = zeros.2 + ones.2;
        if best.is_none_or(|(best_len, _)| len > best_len) {
            best = Some((len, ones.1));
        }
    }
    best.map(|(_, idx)| idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(transition_index(&[0, 0, 1, 1, 1]), Some(2));
        assert_eq!(transition_index(&[0, 1, 0, 0, 1, 1]), Some(4));
        assert_eq!(transition_index(&[0, 0, 0]), None);
    }

    #[test]
    fn ties_and_edges() {
        assert_eq!(transition_index(&[0, 1, 0, 1]), Some(1));
        assert_eq!(transition_index(&[1, 1, 0, 1]), Some(3));
        assert_eq!(transition_index(&[1, 0]), None);
        assert_eq!(transition_index(&[]), None);
    }
}
