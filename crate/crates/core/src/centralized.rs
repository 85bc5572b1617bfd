//! Centralized sum-utility benchmark.
//!
//! Maximizes the sum of unpriced utilities over the joint rate profile,
//! subject to the downlink-feasibility and per-user rate bounds. Users
//! are statistically exchangeable under the bank construction, so a
//! symmetric line search lands near the optimum and a coordinate-ascent
//! polish absorbs the residual asymmetry of the finite bank.

use serde::Serialize;

use crate::error::Result;
use crate::game::{FeedbackGame, RateProfile};
use crate::golden::maximize_grid_golden;

const LINE_SEARCH_GRID: usize = 65;
const POLISH_GAIN_TOL: f64 = 1e-6;
const POLISH_ROUND_CAP: usize = 50;

/// One step of the centralized search.
#[derive(Debug, Clone, Serialize)]
pub struct SearchStep {
    pub stage: &'static str,
    pub rates: Vec<f64>,
    pub sum_utility: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CentralizedResult {
    pub rates: RateProfile,
    pub sum_utility: f64,
    pub method_trace: Vec<SearchStep>,
}

fn sum_utility(game: &FeedbackGame, profile: &RateProfile) -> Result<f64> {
    Ok(game.expected_utilities(profile)?.iter().sum())
}

/// Solves the centralized problem for the game's scenario. The price
/// factor plays no role here.
pub fn centralized_optimum(game: &FeedbackGame) -> Result<CentralizedResult> {
    let cfg = game.config();
    let n = cfg.n_s;
    let mut trace = Vec::new();

    // Stage one: common rate for everyone.
    let sym_bound = (cfg.b_total / cfg.beta / n as f64) * (1.0 - 1e-9);
    let hi = cfg.r_max.min(sym_bound);
    let mut first_err = None;
    let (sym_rate, sym_value) = maximize_grid_golden(
        |r| match sum_utility(game, &RateProfile::uniform(n, r).expect("nonnegative")) {
            Ok(v) => v,
            Err(e) => {
                first_err.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        0.0,
        hi,
        LINE_SEARCH_GRID,
        cfg.br_tolerance,
    );
    if let Some(e) = first_err {
        return Err(e);
    }
    let sym_profile = RateProfile::uniform(n, sym_rate)?;
    trace.push(SearchStep {
        stage: "symmetric",
        rates: sym_profile.rates().to_vec(),
        sum_utility: sym_value,
    });

    // Stage two: coordinate ascent from the symmetric point.
    let mut rates = sym_profile.clone();
    let mut value = sym_value;
    for _ in 0..POLISH_ROUND_CAP {
        let round_start = value;
        for k in 0..n {
            let sum_others: f64 =
                rates.rates().iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &r)| r).sum();
            let bound = (cfg.b_total / cfg.beta - sum_others) * (1.0 - 1e-9);
            let hi = cfg.r_max.min(bound);
            if !(hi > 0.0) {
                continue;
            }
            let mut work = rates.clone();
            let mut err = None;
            let (best_r, best_v) = maximize_grid_golden(
                |r| {
                    work.set(k, r);
                    match sum_utility(game, &work) {
                        Ok(v) => v,
                        Err(e) => {
                            err.get_or_insert(e);
                            f64::NEG_INFINITY
                        }
                    }
                },
                0.0,
                hi,
                LINE_SEARCH_GRID,
                cfg.br_tolerance,
            );
            if let Some(e) = err {
                return Err(e);
            }
            if best_v > value {
                value = best_v;
                rates.set(k, best_r);
            }
        }
        trace.push(SearchStep {
            stage: "coordinate",
            rates: rates.rates().to_vec(),
            sum_utility: value,
        });
        if value - round_start < POLISH_GAIN_TOL {
            break;
        }
    }

    // Keep whichever stage ended higher (ascent can only improve, but the
    // comparison keeps the contract explicit).
    if sym_value > value {
        rates = sym_profile;
        value = sym_value;
    }
    Ok(CentralizedResult { rates, sum_utility: value, method_trace: trace })
}
