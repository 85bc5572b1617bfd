//! Price sweep: re-equilibrate the game at increasing price factors and
//! locate the best one.
//!
//! The network raises the per-bit price from zero in fixed increments,
//! letting the players settle at each step (warm-started from the
//! previous equilibrium). The best price is the last one before any
//! user's equilibrium utility drops; curve mode keeps sweeping past
//! that point so the whole price-utility relationship is recorded.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{EquilibriumReport, FeedbackGame};

/// Whether to stop at the first utility regression or record the whole
/// price range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    StopAtBest,
    FullCurve,
}

/// Why the best-price search ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StopReason {
    /// Some user's equilibrium utility fell below its previous value.
    UserWorsened,
    /// The price range was exhausted with every step still improving.
    RangeExhausted,
}

/// One swept price point.
#[derive(Debug, Clone, Serialize)]
pub struct PriceSweepRecord {
    pub alpha_price: f64,
    pub equilibrium: EquilibriumReport,
    /// Sum of unpriced utilities (the network's throughput objective).
    pub sum_rate: f64,
    pub sum_priced: f64,
    /// Uplink bandwidth `beta * sum(r)` at the equilibrium.
    pub uplink_bw: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PriceSweepResult {
    pub records: Vec<PriceSweepRecord>,
    pub alpha_best: f64,
    pub stop_reason: StopReason,
    /// Number of price points whose dynamics hit the round cap.
    pub non_converged: usize,
}

/// Projection of a sweep onto the uplink occupancy axes.
#[derive(Debug, Clone, Serialize)]
pub struct OccupancyPoint {
    pub alpha_price: f64,
    pub uplink_bw: f64,
    pub rates: Vec<f64>,
}

/// Relative slack distinguishing a genuine utility regression from
/// rounding noise in the stop rule.
const WORSEN_REL_SLACK: f64 = 1e-9;

/// Sweeps the price factor from zero in steps of `delta_alpha` up to
/// `alpha_max`, re-running the dynamics at every step.
///
/// The first record is always the unpriced game. Non-converged points
/// are recorded and counted, never fatal. In [`SweepMode::StopAtBest`]
/// the sweep ends at the first regression; in [`SweepMode::FullCurve`]
/// it continues to `alpha_max` while `alpha_best` still reflects the
/// stop rule.
pub fn sweep_price(
    game: &FeedbackGame,
    delta_alpha: f64,
    alpha_max: f64,
    mode: SweepMode,
) -> Result<PriceSweepResult> {
    if !(delta_alpha > 0.0) || !delta_alpha.is_finite() {
        return Err(Error::OutOfRange { what: "price increment", value: delta_alpha });
    }
    if !(alpha_max >= 0.0) || !alpha_max.is_finite() {
        return Err(Error::OutOfRange { what: "price range end", value: alpha_max });
    }

    let beta = game.config().beta;
    let steps = (alpha_max / delta_alpha + 1e-9).floor() as usize;
    let mut records: Vec<PriceSweepRecord> = Vec::with_capacity(steps + 1);
    let mut warm = game.config().default_initial_profile();
    let mut non_converged = 0;
    let mut worsened_at: Option<usize> = None;

    for i in 0..=steps {
        let alpha = i as f64 * delta_alpha;
        let stage = game.with_alpha(alpha)?;
        let report = stage.run_dynamics(&warm)?;
        if !report.converged {
            non_converged += 1;
        }
        warm = report.rates.clone();
        let sum_rate = report.utilities.iter().sum();
        let sum_priced = report.priced_utilities.iter().sum();
        let uplink_bw = beta * report.rates.sum();
        records.push(PriceSweepRecord {
            alpha_price: alpha,
            equilibrium: report,
            sum_rate,
            sum_priced,
            uplink_bw,
        });

        if worsened_at.is_none() {
            if let [.., prev, last] = records.as_slice() {
                let worse = last
                    .equilibrium
                    .utilities
                    .iter()
                    .zip(&prev.equilibrium.utilities)
                    .any(|(&now, &before)| now < before * (1.0 - WORSEN_REL_SLACK) - 1e-12);
                if worse {
                    worsened_at = Some(records.len() - 1);
                    if mode == SweepMode::StopAtBest {
                        break;
                    }
                }
            }
        }
    }

    let (alpha_best, stop_reason) = match worsened_at {
        Some(idx) => (records[idx - 1].alpha_price, StopReason::UserWorsened),
        None => (records.last().expect("at least one record").alpha_price, StopReason::RangeExhausted),
    };

    Ok(PriceSweepResult { records, alpha_best, stop_reason, non_converged })
}

/// Uplink occupancy along the sweep: `(alpha, beta * sum(r), rates)`.
pub fn uplink_occupancy_curve(result: &PriceSweepResult) -> Vec<OccupancyPoint> {
    result
        .records
        .iter()
        .map(|rec| OccupancyPoint {
            alpha_price: rec.alpha_price,
            uplink_bw: rec.uplink_bw,
            rates: rec.equilibrium.rates.rates().to_vec(),
        })
        .collect()
}

impl PriceSweepResult {
    /// The record at `alpha_best`.
    pub fn best_record(&self) -> &PriceSweepRecord {
        self.records
            .iter()
            .find(|r| r.alpha_price == self.alpha_best)
            .expect("alpha_best always points at a record")
    }
}
