//! Deterministic scalar maximization: uniform-grid bracketing followed by
//! golden-section refinement.
//!
//! Used for best responses, the contention-peak calibration and the
//! centralized line searches. Ties always resolve toward the smaller
//! argument, and the best point over *all* evaluations is returned, so a
//! mildly non-unimodal objective still gets its grid-level optimum.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes `f` on `[lo, hi]`.
///
/// Evaluates `grid_points` uniform samples (endpoints included), then
/// refines around the grid argmax with golden-section steps until the
/// bracket is narrower than `xtol`. Returns `(x, f(x))` of the best
/// evaluation seen; among equal values the smallest `x` wins.
pub fn maximize_grid_golden<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    grid_points: usize,
    xtol: f64,
) -> (f64, f64) {
    assert!(grid_points >= 2, "need at least two grid points");
    if !(hi > lo) {
        let v = f(lo);
        return (lo, v);
    }

    let mut best_x = lo;
    let mut best_f = f64::NEG_INFINITY;
    let consider = |x: f64, v: f64, best_x: &mut f64, best_f: &mut f64| {
        if v > *best_f {
            *best_f = v;
            *best_x = x;
        }
    };

    let step = (hi - lo) / (grid_points - 1) as f64;
    let mut arg_idx = 0usize;
    for i in 0..grid_points {
        let x = if i + 1 == grid_points { hi } else { lo + i as f64 * step };
        let v = f(x);
        if v > best_f {
            arg_idx = i;
        }
        consider(x, v, &mut best_x, &mut best_f);
    }

    // Bracket around the grid argmax, clamped at the domain ends.
    let mut a = if arg_idx == 0 { lo } else { lo + (arg_idx - 1) as f64 * step };
    let mut b = if arg_idx + 1 >= grid_points { hi } else { lo + (arg_idx + 1) as f64 * step };

    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    consider(x1, f1, &mut best_x, &mut best_f);
    consider(x2, f2, &mut best_x, &mut best_f);

    while b - a > xtol {
        if f1 >= f2 {
            // Keep the left interval on ties: smaller-rate preference.
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
            consider(x1, f1, &mut best_x, &mut best_f);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
            consider(x2, f2, &mut best_x, &mut best_f);
        }
    }

    (best_x, best_f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_peak() {
        let (x, v) = maximize_grid_golden(|x| -(x - 3.2).powi(2), 0.0, 10.0, 65, 1e-9);
        assert!((x - 3.2).abs() < 1e-6);
        assert!(v <= 0.0);
    }

    #[test]
    fn boundary_maximum_is_exact() {
        let (x, _) = maximize_grid_golden(|x| -x, 0.0, 5.0, 65, 1e-9);
        assert_eq!(x, 0.0);
        let (x, _) = maximize_grid_golden(|x| x, 0.0, 5.0, 65, 1e-9);
        assert_eq!(x, 5.0);
    }

    #[test]
    fn ties_break_toward_smaller_argument() {
        let (x, _) = maximize_grid_golden(|_| 1.0, 0.0, 4.0, 65, 1e-9);
        assert_eq!(x, 0.0);
    }

    #[test]
    fn degenerate_interval() {
        let (x, v) = maximize_grid_golden(|x| x * x, 2.0, 2.0, 65, 1e-9);
        assert_eq!((x, v), (2.0, 4.0));
    }

    #[test]
    fn deterministic() {
        let run = || maximize_grid_golden(|x| (x * 1.7).sin() + 0.01 * x, 0.0, 12.0, 65, 1e-7);
        assert_eq!(run(), run());
    }
}
