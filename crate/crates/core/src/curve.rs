//! Shape checks for sampled curves.
//!
//! Utility curves in this model are smooth deterministic functions of
//! the probed rate (the Monte Carlo bank is fixed), so counting local
//! maxima on a grid is meaningful; the prominence slack discards bumps
//! smaller than the caller's noise estimate.

/// Counts local maxima whose topographic prominence exceeds `slack`.
///
/// A grid point is a candidate peak when it strictly exceeds its left
/// neighbor (or starts the array) and is at least as large as its right
/// neighbor (or ends the array); plateaus therefore count once. The
/// global maximum always counts. A peak's prominence is its height over
/// the highest saddle separating it from larger terrain.
pub fn count_prominent_maxima(values: &[f64], slack: f64) -> usize {
    let n = values.len();
    if n == 0 {
        return 0;
    }
    let mut count = 0;
    for i in 0..n {
        let left_ok = i == 0 || values[i] > values[i - 1];
        let right_ok = i == n - 1 || values[i] >= values[i + 1];
        if !(left_ok && right_ok) {
            continue;
        }
        if prominence(values, i) > slack {
            count += 1;
        }
    }
    count
}

fn prominence(values: &[f64], peak: usize) -> f64 {
    let v = values[peak];
    let col_toward = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut lowest = v;
        for j in range {
            if values[j] > v {
                return Some(lowest);
            }
            lowest = lowest.min(values[j]);
        }
        None
    };
    let left = col_toward(&mut (0..peak).rev());
    let right = col_toward(&mut (peak + 1..values.len()));
    match (left, right) {
        // No higher terrain on either side: global maximum.
        (None, None) => f64::INFINITY,
        (Some(c), None) | (None, Some(c)) => v - c,
        (Some(a), Some(b)) => v - a.max(b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unimodal_counts_one() {
        let v: Vec<f64> = (0..100).map(|i| -((i as f64 - 40.0) / 10.0).powi(2)).collect();
        assert_eq!(count_prominent_maxima(&v, 0.0), 1);
    }

    #[test]
    fn monotone_counts_boundary_peak() {
        let v: Vec<f64> = (0..50).map(|i| -(i as f64)).collect();
        assert_eq!(count_prominent_maxima(&v, 0.0), 1);
        let v: Vec<f64> = (0..50).map(|i| i as f64).collect();
        assert_eq!(count_prominent_maxima(&v, 0.0), 1);
    }

    #[test]
    fn two_real_peaks() {
        let v = vec![0.0, 3.0, 1.0, 4.0, 0.0];
        assert_eq!(count_prominent_maxima(&v, 0.5), 2);
    }

    #[test]
    fn small_wiggle_is_dismissed_by_slack() {
        let v = vec![0.0, 3.0, 2.95, 3.01, 0.0];
        assert_eq!(count_prominent_maxima(&v, 0.2), 1);
        assert_eq!(count_prominent_maxima(&v, 0.01), 2);
    }

    #[test]
    fn plateau_counts_once() {
        let v = vec![1.0, 2.0, 2.0, 2.0, 1.0];
        assert_eq!(count_prominent_maxima(&v, 0.0), 1);
        let flat = vec![2.0; 5];
        assert_eq!(count_prominent_maxima(&flat, 0.0), 1);
    }
}
