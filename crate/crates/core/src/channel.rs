//! Rayleigh fading channels and the rate-limited quantized feedback model.
//!
//! Each mobile station measures its downlink channel row and reports an
//! `r`-bit description of it. The reconstruction available at the base
//! station is modeled as a normalized mix of the true row and an
//! independent noise row,
//!
//! ```text
//! h_bar_k = sqrt(1 - 2^-r_k) * h_k + sqrt(2^-r_k) * nq_k
//! ```
//!
//! which keeps every entry at unit variance while the correlation with
//! the true row grows with the feedback rate. The weights come from the
//! rate-distortion law of a unit-variance complex Gaussian source,
//! `D = 2^-r`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::game::RateProfile;

/// One fading draw: the true channel and the paired quantization-noise
/// draw that the feedback model mixes in.
///
/// Rows index mobile stations, columns index transmit antennas. All
/// entries are i.i.d. circularly symmetric complex Gaussian with zero
/// mean and unit variance; `h` and `nq` are mutually independent.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: DMatrix<Complex64>,
    pub nq: DMatrix<Complex64>,
    pub seed: u64,
}

impl ChannelRealization {
    pub fn n_users(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_antennas(&self) -> usize {
        self.h.ncols()
    }
}

/// Mean-square distortion of a quantized channel entry, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distortion(f64);

impl Distortion {
    pub fn new(d: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&d) || !d.is_finite() {
            return Err(Error::OutOfRange { what: "distortion", value: d });
        }
        Ok(Distortion(d))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `D = 2^-r`: minimal mean-square distortion achievable with `r` bits
/// for a unit-variance complex Gaussian source.
pub fn distortion_from_rate(r: f64) -> Result<Distortion> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::OutOfRange { what: "feedback rate", value: r });
    }
    Distortion::new((-r).exp2())
}

/// Mixing weights of the un-normalized quantization model:
/// `mu = 1 - D`, `nu = sqrt(D (1 - D))`, so that `mu^2 + nu^2 = 1 - D`.
pub fn mu_nu(d: Distortion) -> (f64, f64) {
    let d = d.value();
    (1.0 - d, (d * (1.0 - d)).sqrt())
}

/// ChaCha stream split: one independent stream per trial index under a
/// single master seed. This is the only seeding rule in the crate, so a
/// `(seed, stream)` pair pins a draw bit-exactly.
fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Row-major fill so the draw order is pinned by this crate, not by the
/// matrix library's iteration order.
fn draw_matrix(n_s: usize, n_t: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let mut data = Vec::with_capacity(n_s * n_t);
    for _ in 0..n_s * n_t {
        data.push(complex_gaussian(rng));
    }
    DMatrix::from_row_slice(n_s, n_t, &data)
}

/// Draws one fading realization, deterministically in `seed`.
pub fn draw_channel(n_s: usize, n_t: usize, seed: u64) -> Result<ChannelRealization> {
    draw_channel_stream(n_s, n_t, seed, 0)
}

fn draw_channel_stream(n_s: usize, n_t: usize, seed: u64, stream: u64) -> Result<ChannelRealization> {
    if n_s == 0 || n_t == 0 {
        return Err(Error::EmptyDimensions);
    }
    let mut rng = seeded_rng(seed, stream);
    let h = draw_matrix(n_s, n_t, &mut rng);
    let nq = draw_matrix(n_s, n_t, &mut rng);
    Ok(ChannelRealization { h, nq, seed })
}

/// Quantized channel estimate at the given per-user feedback rates:
/// row `k` is `sqrt(1 - 2^-r_k) h_k + sqrt(2^-r_k) nq_k`.
///
/// At `r_k = 0` the row equals `nq_k` exactly (a pure-noise estimate);
/// the map `r -> matrix` is continuous and deterministic given the draw.
pub fn quantize_channel(real: &ChannelRealization, rates: &RateProfile) -> Result<DMatrix<Complex64>> {
    let n_s = real.n_users();
    if rates.len() != n_s {
        return Err(Error::DimensionMismatch { expected: n_s, got: rates.len() });
    }
    let n_t = real.n_antennas();
    let mut out = DMatrix::zeros(n_s, n_t);
    for (k, &r) in rates.rates().iter().enumerate() {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::OutOfRange { what: "feedback rate", value: r });
        }
        let d = (-r).exp2();
        let a = (1.0 - d).sqrt();
        let b = d.sqrt();
        for t in 0..n_t {
            out[(k, t)] = real.h[(k, t)] * a + real.nq[(k, t)] * b;
        }
    }
    Ok(out)
}

/// Scaling pair `(sqrt(1 - 2^-r), sqrt(2^-r))` for one rate. The game
/// engine precomputes these per profile before looping over trials.
pub(crate) fn mix_weights(r: f64) -> (f64, f64) {
    let d = (-r).exp2();
    ((1.0 - d).sqrt(), d.sqrt())
}

/// Fixed bank of fading draws shared by every utility evaluation of a
/// game (common random numbers). Trial `t` uses stream `t` of the
/// master seed, so banks are reproducible and trials are independent.
#[derive(Debug, Clone)]
pub struct CrnBank {
    trials: Vec<ChannelRealization>,
    n_s: usize,
    n_t: usize,
}

impl CrnBank {
    pub fn generate(n_s: usize, n_t: usize, trials: usize, master_seed: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::OutOfRange { what: "trial count", value: 0.0 });
        }
        let trials = (0..trials)
            .map(|t| draw_channel_stream(n_s, n_t, master_seed, t as u64))
            .collect::<Result<Vec<_>>>()?;
        Ok(CrnBank { trials, n_s, n_t })
    }

    /// Builds a bank from explicit draws. Used for constructed banks in
    /// tests and diagnostics (e.g. permutation-closed banks that make
    /// users exactly exchangeable).
    pub fn from_trials(trials: Vec<ChannelRealization>) -> Result<Self> {
        let first = trials.first().ok_or(Error::OutOfRange { what: "trial count", value: 0.0 })?;
        let (n_s, n_t) = (first.n_users(), first.n_antennas());
        if n_s == 0 || n_t == 0 {
            return Err(Error::EmptyDimensions);
        }
        for t in &trials {
            if t.n_users() != n_s || t.n_antennas() != n_t {
                return Err(Error::DimensionMismatch { expected: n_s * n_t, got: t.n_users() * t.n_antennas() });
            }
        }
        Ok(CrnBank { trials, n_s, n_t })
    }

    pub fn trials(&self) -> &[ChannelRealization] {
        &self.trials
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn n_users(&self) -> usize {
        self.n_s
    }

    pub fn n_antennas(&self) -> usize {
        self.n_t
    }
}
