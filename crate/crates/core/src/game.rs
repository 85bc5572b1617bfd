//! The non-cooperative feedback-rate control game.
//!
//! Utilities are ergodic throughputs averaged over a fixed bank of
//! fading draws (common random numbers), which makes every utility a
//! smooth deterministic function of the rate profile and lets the
//! best-response dynamics detect convergence reliably. Pricing enters
//! as a linear per-bit charge on the requested feedback rate.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::access::{self, CsmaModel};
use crate::channel::{mix_weights, ChannelRealization, CrnBank};
use crate::error::{Error, Result};
use crate::golden::maximize_grid_golden;
use crate::precoding::{regularization_param, solve_t_adjoint};

/// Bracketing grid used by every best-response search.
pub const BEST_RESPONSE_GRID: usize = 65;

/// Uplink feedback protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Protocol {
    #[serde(rename = "FDMA")]
    Fdma,
    #[serde(rename = "CSMA")]
    Csma,
}

/// Every scenario constant of one game instance.
///
/// The JSON schema of config files mirrors these field names exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameConfig {
    /// Transmit antennas at the base station.
    pub n_t: usize,
    /// Mobile stations sharing the downlink.
    pub n_s: usize,
    /// Total system bandwidth split between downlink and uplink.
    pub b_total: f64,
    /// Scaling factor turning feedback bits into uplink bandwidth.
    pub beta: f64,
    /// Noise power at every receiver.
    pub n0: f64,
    /// Linear price per feedback bit (zero recovers the unpriced game).
    pub alpha_price: f64,
    pub protocol: Protocol,
    /// Contention model; required when `protocol` is CSMA.
    pub csma: Option<CsmaModel>,
    /// Upper end of every user's strategy interval `[0, r_max]`.
    pub r_max: f64,
    /// Monte Carlo bank size.
    pub mc_trials: usize,
    /// Master seed of the bank; trial `t` uses ChaCha stream `t`.
    pub master_seed: u64,
    /// Convergence threshold on per-round rate changes, in bits.
    pub br_tolerance: f64,
    /// Round cap for the best-response dynamics.
    pub max_rounds: usize,
    /// Explicit regularization; `None` selects `n_s * n0`.
    pub psi_override: Option<f64>,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            n_t: 10,
            n_s: 10,
            b_total: 20.0,
            beta: 0.01,
            n0: 1.0,
            alpha_price: 0.0,
            protocol: Protocol::Fdma,
            csma: None,
            r_max: 16.0,
            mc_trials: 500,
            master_seed: 1,
            br_tolerance: 1e-3,
            max_rounds: 200,
            psi_override: None,
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_t == 0 || self.n_s == 0 {
            return Err(Error::EmptyDimensions);
        }
        if self.n_s > self.n_t {
            return Err(Error::InvalidConfig(format!(
                "channel inversion needs n_s <= n_t, got {} users over {} antennas",
                self.n_s, self.n_t
            )));
        }
        if !(self.b_total > 0.0) {
            return Err(Error::OutOfRange { what: "total bandwidth", value: self.b_total });
        }
        if !(self.beta > 0.0) {
            return Err(Error::OutOfRange { what: "rate-to-bandwidth factor", value: self.beta });
        }
        if !(self.n0 > 0.0) {
            return Err(Error::OutOfRange { what: "noise power", value: self.n0 });
        }
        if !(self.alpha_price >= 0.0) || !self.alpha_price.is_finite() {
            return Err(Error::OutOfRange { what: "price factor", value: self.alpha_price });
        }
        if !(self.r_max > 0.0) {
            return Err(Error::OutOfRange { what: "maximum rate", value: self.r_max });
        }
        if self.mc_trials == 0 {
            return Err(Error::OutOfRange { what: "trial count", value: 0.0 });
        }
        if !(self.br_tolerance > 0.0) {
            return Err(Error::OutOfRange { what: "response tolerance", value: self.br_tolerance });
        }
        if self.max_rounds == 0 {
            return Err(Error::OutOfRange { what: "round cap", value: 0.0 });
        }
        if let Some(psi) = self.psi_override {
            if !(psi >= 0.0) || !psi.is_finite() {
                return Err(Error::OutOfRange { what: "regularization psi", value: psi });
            }
        }
        if self.protocol == Protocol::Csma && self.csma.is_none() {
            return Err(Error::InvalidConfig("CSMA protocol selected without a csma model".into()));
        }
        Ok(())
    }

    /// All-ones starting profile (clamped by `r_max`), the conventional
    /// initial point of the dynamics.
    pub fn default_initial_profile(&self) -> RateProfile {
        RateProfile::uniform(self.n_s, 1f64.min(self.r_max)).expect("valid by construction")
    }
}

/// Per-user feedback rates in bits: the strategy profile of the game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RateProfile(Vec<f64>);

impl RateProfile {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        for &r in &rates {
            if !r.is_finite() || r < 0.0 {
                return Err(Error::OutOfRange { what: "feedback rate", value: r });
            }
        }
        Ok(RateProfile(rates))
    }

    pub fn uniform(n: usize, r: f64) -> Result<Self> {
        Self::new(vec![r; n])
    }

    pub fn rates(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn get(&self, k: usize) -> f64 {
        self.0[k]
    }

    /// Copy with user `k`'s rate replaced; used for unilateral deviations.
    pub fn with_rate(&self, k: usize, r: f64) -> RateProfile {
        let mut out = self.clone();
        out.0[k] = r;
        out
    }

    pub(crate) fn set(&mut self, k: usize, r: f64) {
        self.0[k] = r;
    }
}

/// Outcome of one best-response run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub rates: RateProfile,
    /// Unpriced expected utilities at the final profile.
    pub utilities: Vec<f64>,
    /// Priced utilities (the quantities the players optimize).
    pub priced_utilities: Vec<f64>,
    pub rounds: usize,
    pub converged: bool,
    pub nash_verified: bool,
    /// Profile after every round, starting with the initial one.
    pub trace: Vec<RateProfile>,
}

/// A game instance: config plus its common-random-numbers bank.
///
/// All methods are pure with respect to the instance, so evaluations
/// can run concurrently; Monte Carlo trials inside one evaluation are
/// reduced in a fixed order, making every result bit-stable regardless
/// of thread count.
#[derive(Debug, Clone)]
pub struct FeedbackGame {
    cfg: GameConfig,
    bank: Arc<CrnBank>,
    psi: f64,
}

impl FeedbackGame {
    pub fn new(cfg: GameConfig) -> Result<Self> {
        cfg.validate()?;
        let bank = CrnBank::generate(cfg.n_s, cfg.n_t, cfg.mc_trials, cfg.master_seed)?;
        let psi = regularization_param(&cfg);
        Ok(FeedbackGame { cfg, bank: Arc::new(bank), psi })
    }

    /// Uses an explicit bank instead of generating one from the seed.
    /// The bank shape must match the config.
    pub fn with_bank(cfg: GameConfig, bank: CrnBank) -> Result<Self> {
        cfg.validate()?;
        if bank.n_users() != cfg.n_s || bank.n_antennas() != cfg.n_t {
            return Err(Error::DimensionMismatch {
                expected: cfg.n_s * cfg.n_t,
                got: bank.n_users() * bank.n_antennas(),
            });
        }
        if bank.len() != cfg.mc_trials {
            return Err(Error::DimensionMismatch { expected: cfg.mc_trials, got: bank.len() });
        }
        let psi = regularization_param(&cfg);
        Ok(FeedbackGame { cfg, bank: Arc::new(bank), psi })
    }

    /// Same bank, different price factor. Cheap: the bank is shared.
    pub fn with_alpha(&self, alpha_price: f64) -> Result<Self> {
        let mut cfg = self.cfg.clone();
        cfg.alpha_price = alpha_price;
        cfg.validate()?;
        Ok(FeedbackGame { cfg, bank: Arc::clone(&self.bank), psi: self.psi })
    }

    pub fn config(&self) -> &GameConfig {
        &self.cfg
    }

    pub fn bank(&self) -> &CrnBank {
        &self.bank
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    /// Validates a strategy profile against the scenario: length, the
    /// per-user interval and the downlink feasibility bound.
    pub fn check_profile(&self, profile: &RateProfile) -> Result<()> {
        if profile.len() != self.cfg.n_s {
            return Err(Error::DimensionMismatch { expected: self.cfg.n_s, got: profile.len() });
        }
        for &r in profile.rates() {
            if !r.is_finite() || r < 0.0 || r > self.cfg.r_max {
                return Err(Error::OutOfRange { what: "feedback rate", value: r });
            }
        }
        let b_ul = self.cfg.beta * profile.sum();
        if b_ul >= self.cfg.b_total {
            return Err(Error::InfeasibleProfile { uplink: b_ul, budget: self.cfg.b_total });
        }
        Ok(())
    }

    /// Rates that reach the quantizer: the profile itself under FDMA,
    /// the contention-degraded rates under CSMA.
    fn effective_rates(&self, profile: &RateProfile) -> Result<Vec<f64>> {
        match self.cfg.protocol {
            Protocol::Fdma => Ok(profile.rates().to_vec()),
            Protocol::Csma => {
                let model = self.cfg.csma.as_ref().expect("validated");
                Ok(access::csma_effective_rates(profile, model)?.into_vec())
            }
        }
    }

    /// Mean spectral efficiency `log2(1 + gamma_k)` over the bank, for
    /// one user or for all of them.
    fn mean_log_rates(&self, profile: &RateProfile, user: Option<usize>) -> Result<Vec<f64>> {
        let eff = self.effective_rates(profile)?;
        let weights: Vec<(f64, f64)> = eff.iter().map(|&r| mix_weights(r)).collect();
        let psi = self.psi;
        let n0 = self.cfg.n0;
        let per_trial: Result<Vec<Vec<f64>>> = self
            .bank
            .trials()
            .par_iter()
            .with_min_len(8)
            .map(|trial| trial_log_rates(trial, &weights, psi, n0, user))
            .collect();
        let per_trial = per_trial?;
        let width = per_trial[0].len();
        let mut acc = vec![0.0f64; width];
        for row in &per_trial {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        let m = self.bank.len() as f64;
        for a in &mut acc {
            *a /= m;
        }
        Ok(acc)
    }

    /// Ergodic throughput of user `k`: downlink bandwidth (charged at
    /// the *requested* rates) times the mean spectral efficiency built
    /// from the *effective* rates.
    pub fn expected_utility(&self, k: usize, profile: &RateProfile) -> Result<f64> {
        self.check_user(k)?;
        self.check_profile(profile)?;
        let split = access::fdma_split(self.cfg.b_total, self.cfg.beta, profile)?;
        let w = self.mean_log_rates(profile, Some(k))?;
        Ok(split.b_dl * w[0])
    }

    /// Expected utilities of every user in one pass over the bank.
    pub fn expected_utilities(&self, profile: &RateProfile) -> Result<Vec<f64>> {
        self.check_profile(profile)?;
        let split = access::fdma_split(self.cfg.b_total, self.cfg.beta, profile)?;
        let w = self.mean_log_rates(profile, None)?;
        Ok(w.into_iter().map(|x| split.b_dl * x).collect())
    }

    /// Utility minus the linear price `alpha * r_k`.
    pub fn priced_utility(&self, k: usize, profile: &RateProfile) -> Result<f64> {
        Ok(self.expected_utility(k, profile)? - self.cfg.alpha_price * profile.get(k))
    }

    pub fn priced_utilities(&self, profile: &RateProfile) -> Result<Vec<f64>> {
        let u = self.expected_utilities(profile)?;
        Ok(u.iter()
            .zip(profile.rates())
            .map(|(&u, &r)| u - self.cfg.alpha_price * r)
            .collect())
    }

    /// Best feedback rate of user `k` against the other entries of
    /// `profile` (entry `k` is ignored): a 65-point bracket over the
    /// feasible interval refined by golden-section search, ties toward
    /// the smaller rate.
    pub fn best_response(&self, k: usize, profile: &RateProfile) -> Result<f64> {
        self.check_user(k)?;
        if profile.len() != self.cfg.n_s {
            return Err(Error::DimensionMismatch { expected: self.cfg.n_s, got: profile.len() });
        }
        let sum_others: f64 =
            profile.rates().iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &r)| r).sum();
        // Strictly inside the downlink-exhaustion bound.
        let bound = (self.cfg.b_total / self.cfg.beta - sum_others) * (1.0 - 1e-9);
        let hi = self.cfg.r_max.min(bound);
        if !(hi > 0.0) {
            return Ok(0.0);
        }
        let mut work = profile.clone();
        let mut first_err: Option<Error> = None;
        let (best, _) = maximize_grid_golden(
            |r| {
                work.set(k, r);
                match self.priced_utility(k, &work) {
                    Ok(v) => v,
                    Err(e) => {
                        first_err.get_or_insert(e);
                        f64::NEG_INFINITY
                    }
                }
            },
            0.0,
            hi,
            BEST_RESPONSE_GRID,
            self.cfg.br_tolerance,
        );
        match first_err {
            Some(e) => Err(e),
            None => Ok(best),
        }
    }

    /// Round-robin sequential best responses until a full round moves no
    /// rate by more than the tolerance, or the round cap is hit.
    /// Non-convergence is reported in the flag, not as an error.
    pub fn run_dynamics(&self, r0: &RateProfile) -> Result<EquilibriumReport> {
        self.check_profile(r0)?;
        let mut rates = r0.clone();
        let mut trace = vec![r0.clone()];
        let mut converged = false;
        let mut rounds = 0;
        for round in 1..=self.cfg.max_rounds {
            rounds = round;
            let mut max_delta = 0.0f64;
            for k in 0..self.cfg.n_s {
                let next = self.best_response(k, &rates)?;
                max_delta = max_delta.max((next - rates.get(k)).abs());
                rates.set(k, next);
            }
            trace.push(rates.clone());
            if max_delta < self.cfg.br_tolerance {
                converged = true;
                break;
            }
        }
        let utilities = self.expected_utilities(&rates)?;
        let priced_utilities: Vec<f64> = utilities
            .iter()
            .zip(rates.rates())
            .map(|(&u, &r)| u - self.cfg.alpha_price * r)
            .collect();
        Ok(EquilibriumReport {
            rates,
            utilities,
            priced_utilities,
            rounds,
            converged,
            nash_verified: false,
            trace,
        })
    }

    /// Grid check of the equilibrium condition: no user may gain more
    /// than a relative slack by any unilateral deviation on a
    /// `check_grid`-point grid over `[0, r_max]`. Sets and returns the
    /// report's `nash_verified` flag.
    pub fn verify_nash(&self, report: &mut EquilibriumReport, check_grid: usize) -> Result<bool> {
        if !report.converged || check_grid < 2 {
            report.nash_verified = false;
            return Ok(false);
        }
        let mut verified = true;
        'users: for k in 0..self.cfg.n_s {
            let u_eq = report.priced_utilities[k];
            let slack = 1e-6 * u_eq.abs() + 1e-9;
            for j in 0..check_grid {
                let r_dev = self.cfg.r_max * j as f64 / (check_grid - 1) as f64;
                let deviated = report.rates.with_rate(k, r_dev);
                if self.check_profile(&deviated).is_err() {
                    // Deviations outside the feasible set are not strategies.
                    continue;
                }
                if self.priced_utility(k, &deviated)? > u_eq + slack {
                    verified = false;
                    break 'users;
                }
            }
        }
        report.nash_verified = verified;
        Ok(verified)
    }

    fn check_user(&self, k: usize) -> Result<()> {
        if k >= self.cfg.n_s {
            return Err(Error::DimensionMismatch { expected: self.cfg.n_s, got: k });
        }
        Ok(())
    }
}

/// One Monte Carlo trial: quantize, invert, read SINRs off the
/// unnormalized solve (the Frobenius normalization folds into the noise
/// term, which avoids building the precoder matrix).
fn trial_log_rates(
    trial: &ChannelRealization,
    weights: &[(f64, f64)],
    psi: f64,
    n0: f64,
    user: Option<usize>,
) -> Result<Vec<f64>> {
    let n_s = trial.n_users();
    let n_t = trial.n_antennas();
    let mut hq = DMatrix::zeros(n_s, n_t);
    for k in 0..n_s {
        let (a, b) = weights[k];
        for t in 0..n_t {
            hq[(k, t)] = trial.h[(k, t)] * a + trial.nq[(k, t)] * b;
        }
    }
    let t_adj = solve_t_adjoint(&hq, psi)?;
    let fro_sq = t_adj.norm_squared();
    if !(fro_sq > 0.0) || !fro_sq.is_finite() {
        return Err(Error::SingularChannel { condition: f64::INFINITY });
    }

    let gamma_for = |k: usize| {
        let mut signal = 0.0;
        let mut cross = 0.0;
        for i in 0..n_s {
            let mut dot = Complex64::new(0.0, 0.0);
            for t in 0..n_t {
                dot += trial.h[(k, t)] * t_adj[(i, t)].conj();
            }
            if i == k {
                signal = dot.norm_sqr();
            } else {
                cross += dot.norm_sqr();
            }
        }
        signal / (cross + n0 * fro_sq)
    };

    let out = match user {
        Some(k) => vec![(1.0 + gamma_for(k)).log2()],
        None => (0..n_s).map(|k| (1.0 + gamma_for(k)).log2()).collect(),
    };
    Ok(out)
}
