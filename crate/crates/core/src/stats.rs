//! Small numeric helpers shared across modules.

/// Nearest-rank quantile: the smallest value such that at least `ceil(q * n)`
/// of the samples are less than or equal to it.
///
/// Panics on an empty slice; callers guard for that.
pub fn nearest_rank_quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty slice");
    assert!(q > 0.0 && q < 1.0, "quantile must lie in (0, 1)");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite value in quantile input"));
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.saturating_sub(1).min(sorted.len() - 1)]
}

/// Arithmetic mean. Returns 0.0 for an empty slice; callers that must reject
/// empty input do so before calling.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Round-half-up to the nearest integer, used for split and class sizing.
pub fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}
