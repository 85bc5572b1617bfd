//! Seeded simulator of feedback-rate control games for quantized
//! channel state information in a single-cell multi-antenna downlink.
//!
//! The pipeline: mobile stations pick feedback rates, the base station
//! builds a regularized channel-inversion precoder from the quantized
//! estimates, and each user's utility is its ergodic downlink
//! throughput (minus an optional linear price on its feedback bits).
//! Best-response dynamics find the Nash equilibrium, a price sweep
//! locates the best price factor, and a centralized optimizer provides
//! the sum-utility benchmark.
//!
//! Everything is deterministic given the config: utilities average over
//! a fixed common-random-numbers bank keyed by the master seed.

pub mod access;
pub mod centralized;
pub mod channel;
pub mod curve;
pub mod error;
pub mod game;
pub mod golden;
pub mod precoding;
pub mod pricing;

pub use access::{calibrate_g0, csma_effective_rates, csma_throughput, fdma_split, BandwidthSplit, CsmaModel};
pub use centralized::{centralized_optimum, CentralizedResult};
pub use channel::{
    distortion_from_rate, draw_channel, mu_nu, quantize_channel, ChannelRealization, CrnBank,
    Distortion,
};
pub use curve::count_prominent_maxima;
pub use error::{Error, Result};
pub use game::{
    EquilibriumReport, FeedbackGame, GameConfig, Protocol, RateProfile, BEST_RESPONSE_GRID,
};
pub use precoding::{
    build_precoder, link_metrics, regularization_param, throughput, LinkMetrics, PrecoderSet,
};
pub use pricing::{
    sweep_price, uplink_occupancy_curve, OccupancyPoint, PriceSweepRecord, PriceSweepResult,
    StopReason, SweepMode,
};
