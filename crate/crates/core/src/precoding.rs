//! Regularized channel-inversion precoding and per-user link quality.
//!
//! The precoder is built from the *quantized* channel estimate while
//! SINR is always evaluated against the *true* channel, which is how
//! limited feedback degrades throughput in this model.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::game::GameConfig;

/// Condition-number limit above which an unregularized inversion is
/// refused.
pub const SINGULARITY_COND_LIMIT: f64 = 1e12;

/// Linear precoder with its normalization and regularization constants.
///
/// `w` has one column per mobile station and unit Frobenius norm, so
/// independent unit-power symbols give unit total transmit power.
/// `k_norm` is the scalar that maps the unnormalized inverse onto `w`.
#[derive(Debug, Clone)]
pub struct PrecoderSet {
    pub w: DMatrix<Complex64>,
    pub k_norm: f64,
    pub psi: f64,
}

/// Per-user SINR decomposition at one fading realization.
#[derive(Debug, Clone)]
pub struct LinkMetrics {
    pub gamma: Vec<f64>,
    pub signal_power: Vec<f64>,
    pub interference_power: Vec<f64>,
    pub n0: f64,
}

/// Regularization for the channel inversion: `psi = N_s * N0`, the
/// large-system value under a unit transmit-power budget. A config
/// override selects any other value; zero selects plain zero-forcing.
pub fn regularization_param(cfg: &GameConfig) -> f64 {
    cfg.psi_override.unwrap_or(cfg.n_s as f64 * cfg.n0)
}

/// Builds `W = T / ||T||_F` with `T = Hq^H (Hq Hq^H + psi I)^-1`.
///
/// Requires at least as many antennas as users. With `psi = 0` the Gram
/// matrix must be invertible; rank deficiency (condition number above
/// [`SINGULARITY_COND_LIMIT`]) is reported as an error.
pub fn build_precoder(h_quant: &DMatrix<Complex64>, psi: f64) -> Result<PrecoderSet> {
    let t_adj = solve_t_adjoint(h_quant, psi)?;
    let fro = t_adj.norm();
    if !(fro > 0.0) || !fro.is_finite() {
        return Err(Error::SingularChannel { condition: f64::INFINITY });
    }
    let w = t_adj.adjoint() / Complex64::new(fro, 0.0);
    Ok(PrecoderSet { w, k_norm: 1.0 / fro, psi })
}

/// Adjoint of the unnormalized inverse, `T^H = (Hq Hq^H + psi I)^-1 Hq`.
///
/// This is the single solve shared by [`build_precoder`] and the game
/// engine's trial loop, which reads SINRs off `T^H` without forming the
/// normalized precoder matrix.
pub(crate) fn solve_t_adjoint(h_quant: &DMatrix<Complex64>, psi: f64) -> Result<DMatrix<Complex64>> {
    let n_s = h_quant.nrows();
    let n_t = h_quant.ncols();
    if n_s == 0 || n_t == 0 {
        return Err(Error::EmptyDimensions);
    }
    if n_s > n_t {
        return Err(Error::InvalidConfig(format!(
            "channel inversion needs n_s <= n_t, got {n_s} users over {n_t} antennas"
        )));
    }
    if !psi.is_finite() || psi < 0.0 {
        return Err(Error::OutOfRange { what: "regularization psi", value: psi });
    }

    let mut gram = h_quant * h_quant.adjoint();
    if psi == 0.0 {
        // Hermitian PSD, so the eigenvalue ratio is the condition number.
        let eig = SymmetricEigen::new(gram.clone());
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for &ev in eig.eigenvalues.iter() {
            lo = lo.min(ev);
            hi = hi.max(ev);
        }
        let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !cond.is_finite() || cond > SINGULARITY_COND_LIMIT {
            return Err(Error::SingularChannel { condition: cond });
        }
    } else {
        for i in 0..n_s {
            gram[(i, i)] += Complex64::new(psi, 0.0);
        }
    }

    let chol = Cholesky::new(gram).ok_or(Error::SingularChannel { condition: f64::INFINITY })?;
    Ok(chol.solve(h_quant))
}

/// SINR of every user against the true channel:
/// `gamma_k = |h_k^T w_k|^2 / (sum_{i != k} |h_k^T w_i|^2 + n0)`,
/// with independent unit-power symbols so cross terms add in power.
pub fn link_metrics(h_true: &DMatrix<Complex64>, pre: &PrecoderSet, n0: f64) -> Result<LinkMetrics> {
    let n_s = h_true.nrows();
    if pre.w.ncols() != n_s || pre.w.nrows() != h_true.ncols() {
        return Err(Error::DimensionMismatch { expected: n_s * h_true.ncols(), got: pre.w.len() });
    }
    if !(n0 > 0.0) || !n0.is_finite() {
        return Err(Error::OutOfRange { what: "noise power", value: n0 });
    }

    let gains = h_true * &pre.w;
    let mut gamma = Vec::with_capacity(n_s);
    let mut signal = Vec::with_capacity(n_s);
    let mut interference = Vec::with_capacity(n_s);
    for k in 0..n_s {
        let s = gains[(k, k)].norm_sqr();
        let mut i = 0.0;
        for j in 0..n_s {
            if j != k {
                i += gains[(k, j)].norm_sqr();
            }
        }
        signal.push(s);
        interference.push(i);
        gamma.push(s / (i + n0));
    }
    Ok(LinkMetrics { gamma, signal_power: signal, interference_power: interference, n0 })
}

/// Shannon throughput `b_dl * log2(1 + gamma)` over the downlink share.
pub fn throughput(gamma: f64, b_dl: f64) -> f64 {
    b_dl * (1.0 + gamma).log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_channel, quantize_channel};
    use crate::game::RateProfile;
    use approx::assert_relative_eq;

    fn identity2() -> DMatrix<Complex64> {
        DMatrix::from_diagonal_element(2, 2, Complex64::new(1.0, 0.0))
    }

    #[test]
    fn identity_channel_zero_forcing() {
        let pre = build_precoder(&identity2(), 0.0).unwrap();
        // T = I, so W = I/sqrt(2) and the normalization is 1/||T||.
        let expect = 1.0 / 2f64.sqrt();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { expect } else { 0.0 };
                assert_relative_eq!(pre.w[(i, j)].re, want, epsilon = 1e-12);
                assert_relative_eq!(pre.w[(i, j)].im, 0.0, epsilon = 1e-12);
            }
        }
        assert_relative_eq!(pre.k_norm, 1.0 / 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn scalar_channel() {
        let h = DMatrix::from_element(1, 1, Complex64::new(2.0, 0.0));
        let pre = build_precoder(&h, 0.0).unwrap();
        // T = 2 / 4 = 0.5, W = 1, K = 1/||T|| = 2.
        assert_relative_eq!(pre.w[(0, 0)].re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(pre.k_norm, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn unit_frobenius_norm() {
        for seed in 0..20 {
            let real = draw_channel(3, 4, seed).unwrap();
            for psi in [0.0, 0.5, 3.0] {
                let pre = build_precoder(&real.h, psi).unwrap();
                assert!((pre.w.norm() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rank_deficient_rejected_without_regularization() {
        let mut h = draw_channel(3, 4, 9).unwrap().h;
        for t in 0..4 {
            h[(2, t)] = h[(1, t)];
        }
        assert!(matches!(build_precoder(&h, 0.0), Err(Error::SingularChannel { .. })));
        // Regularization makes the same matrix usable.
        assert!(build_precoder(&h, 1.0).is_ok());
    }

    #[test]
    fn too_many_users_rejected() {
        let h = draw_channel(4, 3, 1).unwrap().h;
        assert!(matches!(build_precoder(&h, 1.0), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn negative_psi_rejected() {
        assert!(build_precoder(&identity2(), -1.0).is_err());
    }

    #[test]
    fn perfect_csi_nulls_interference() {
        let real = draw_channel(2, 2, 11).unwrap();
        let pre = build_precoder(&real.h, 0.0).unwrap();
        let lm = link_metrics(&real.h, &pre, 1.0).unwrap();
        for k in 0..2 {
            assert!(lm.interference_power[k] < 1e-20 * lm.signal_power[k]);
        }
    }

    #[test]
    fn link_metrics_match_direct_recomputation() {
        // Straight-line re-evaluation of the SINR definition, term by term.
        let real = draw_channel(2, 2, 21).unwrap();
        let hq = quantize_channel(&real, &RateProfile::new(vec![2.0, 5.0]).unwrap()).unwrap();
        let pre = build_precoder(&hq, 1.5).unwrap();
        let n0 = 0.7;
        let lm = link_metrics(&real.h, &pre, n0).unwrap();
        for k in 0..2 {
            let mut cross = 0.0;
            let mut sig = Complex64::new(0.0, 0.0);
            for i in 0..2 {
                let mut dot = Complex64::new(0.0, 0.0);
                for t in 0..2 {
                    dot += real.h[(k, t)] * pre.w[(t, i)];
                }
                if i == k {
                    sig = dot;
                } else {
                    cross += dot.norm_sqr();
                }
            }
            let gamma = sig.norm_sqr() / (cross + n0);
            assert_relative_eq!(lm.gamma[k], gamma, max_relative = 1e-12);
            // Definitional identity of the decomposition.
            assert_relative_eq!(
                lm.gamma[k],
                lm.signal_power[k] / (lm.interference_power[k] + n0),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn large_noise_kills_sinr() {
        let real = draw_channel(2, 2, 3).unwrap();
        let pre = build_precoder(&real.h, 0.0).unwrap();
        let lm = link_metrics(&real.h, &pre, 1e12).unwrap();
        assert!(lm.gamma.iter().all(|&g| g < 1e-9));
    }

    #[test]
    fn throughput_values() {
        assert_eq!(throughput(0.0, 7.0), 0.0);
        assert_relative_eq!(throughput(1.0, 1.0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(throughput(3.0, 19.0), 38.0, epsilon = 1e-12);
    }

    #[test]
    fn regularization_default_and_override() {
        let mut cfg = GameConfig::default();
        cfg.n_s = 10;
        cfg.n0 = 1.0;
        assert_eq!(regularization_param(&cfg), 10.0);
        cfg.psi_override = Some(0.0);
        assert_eq!(regularization_param(&cfg), 0.0);
        cfg.psi_override = None;
        cfg.n0 = 0.0;
        assert_eq!(regularization_param(&cfg), 0.0);
    }
}
