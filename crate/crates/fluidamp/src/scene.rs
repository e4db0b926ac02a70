//! Uplink scene synthesis: user geometry, large-scale fading, fluid-antenna
//! steering, Rician multipath rows, pilot codebooks, and calibrated noise.
//!
//! A scene fixes everything a solver sees in one Monte-Carlo trial: the
//! active-user subset, their positions inside an annular service sector, the
//! sparse channel matrix of the activated ports, and the noise variance that
//! realizes a requested per-antenna SNR.  Sampling is deterministic in the
//! configured seed.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::seq::index::sample as index_sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complete description of one simulated uplink population.
///
/// Angles are carried in degrees at this boundary and converted to radians
/// inside the sampling routines.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneConfig {
    /// Number of enrolled users, one pilot codeword each.
    pub k: usize,
    /// Number of users active in a frame.
    pub k_a: usize,
    /// Pilot sequence length.
    pub g: usize,
    /// Number of resolvable port positions that defines the aperture length.
    pub m: usize,
    /// Number of uniformly activated ports observed by the receiver.
    pub n_o: usize,
    /// Carrier wavelength in meters.
    pub lambda_len: f64,
    /// Reference (closest) user distance in meters.
    pub d_ref: f64,
    /// Cell edge distance in meters.
    pub d_max: f64,
    /// Lower edge of the service sector in degrees.
    pub theta_min: f64,
    /// Upper edge of the service sector in degrees.
    pub theta_max: f64,
    /// Path-loss exponent of the large-scale fading law `d^-exponent`.
    pub lsfc_exponent: f64,
    /// Number of propagation paths per user.
    pub l_s: usize,
    /// Rician factor; zero selects pure NLOS fading.
    pub k_r: f64,
    /// Per-antenna SNR target in dB used to calibrate the noise floor.
    pub snr_db: f64,
    /// Seed for scene sampling.
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            k: 1000,
            k_a: 50,
            g: 200,
            m: 64,
            n_o: 16,
            lambda_len: 1.0,
            d_ref: 20.0,
            d_max: 100.0,
            theta_min: 30.0,
            theta_max: 150.0,
            lsfc_exponent: 2.0,
            l_s: 3,
            k_r: 0.0,
            snr_db: -10.0,
            seed: 1,
        }
    }
}

impl SceneConfig {
    /// Checks every range constraint, reporting the first violation.
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be positive".into()));
        }
        if self.k_a == 0 || self.k_a > self.k {
            return Err(Error::Config(format!(
                "k_a must lie in 1..=k, got k_a={} k={}",
                self.k_a, self.k
            )));
        }
        if self.g == 0 {
            return Err(Error::Config("g must be positive".into()));
        }
        if self.m < 2 {
            return Err(Error::Config("m must be at least 2".into()));
        }
        if self.n_o == 0 {
            return Err(Error::Config("n_o must be positive".into()));
        }
        if !(self.lambda_len > 0.0) {
            return Err(Error::Config("lambda_len must be positive".into()));
        }
        if !(self.d_ref > 0.0 && self.d_max > self.d_ref) {
            return Err(Error::Config(format!(
                "need 0 < d_ref < d_max, got d_ref={} d_max={}",
                self.d_ref, self.d_max
            )));
        }
        if !(self.theta_max > self.theta_min) {
            return Err(Error::Config(format!(
                "need theta_min < theta_max, got {} and {}",
                self.theta_min, self.theta_max
            )));
        }
        if !(self.lsfc_exponent > 0.0) {
            return Err(Error::Config("lsfc_exponent must be positive".into()));
        }
        if self.l_s == 0 {
            return Err(Error::Config("l_s must be positive".into()));
        }
        if !(self.k_r >= 0.0) {
            return Err(Error::Config("k_r must be non-negative".into()));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::Config("snr_db must be finite".into()));
        }
        Ok(())
    }

    /// Aperture length of the linear fluid antenna in meters.
    pub fn aperture(&self) -> f64 {
        self.lambda_len * (self.m as f64 - 1.0) / 2.0
    }
}

/// Unit-norm pilot codebook, one column per enrolled user.
#[derive(Debug, Clone)]
pub struct PilotCodebook {
    /// `g x k` matrix with columns of exactly unit Euclidean norm.
    pub a: Array2<Complex64>,
}

/// Multipath description of one active user.
#[derive(Debug, Clone)]
pub struct UserPaths {
    /// Arrival angle of each path in radians; the first entry is the LOS
    /// direction whenever the Rician factor is positive.
    pub aoa: Vec<f64>,
    /// Complex path gains, normalized so their power sums to `n_o`.
    pub gains: Vec<Complex64>,
}

/// One realized uplink frame: who is active, their channels, and the noise
/// level the receiver faces.
#[derive(Debug, Clone)]
pub struct ChannelScene {
    /// Active user indices, sorted ascending.
    pub active: Vec<usize>,
    /// `k x n_o` channel matrix; rows of inactive users are zero.
    pub x: Array2<Complex64>,
    /// Per-user large-scale fading coefficient; zero for inactive users.
    pub lsfc: Vec<f64>,
    /// Per-user line-of-sight angle in degrees; zero for inactive users.
    pub theta_deg: Vec<f64>,
    /// Path details for each active user, aligned with `active`.
    pub paths: Vec<UserPaths>,
    /// Mean LSFC over the realized active set.
    pub mean_lsfc: f64,
    /// Noise variance calibrated to the configured SNR for this realization.
    pub psi: f64,
}

/// Large-scale fading coefficient `d^-exponent` for a distance in meters.
pub fn lsfc(d: f64, exponent: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::Domain(format!("lsfc needs d > 0, got {d}")));
    }
    if !(exponent > 0.0) {
        return Err(Error::Domain(format!(
            "lsfc needs a positive exponent, got {exponent}"
        )));
    }
    Ok(d.powf(-exponent))
}

/// Array response of the activated ports toward angle `theta` (radians).
///
/// The ports sample the aperture uniformly, and the response carries a
/// `1/sqrt(n_o)` amplitude so it always has unit norm.  A single activated
/// port degenerates to the scalar 1.
pub fn steering_vector(
    theta: f64,
    n_o: usize,
    aperture: f64,
    lambda_len: f64,
) -> Array1<Complex64> {
    let mut v = Array1::<Complex64>::zeros(n_o);
    if n_o == 1 {
        v[0] = Complex64::new(1.0, 0.0);
        return v;
    }
    let amp = 1.0 / (n_o as f64).sqrt();
    let step = 2.0 * std::f64::consts::PI * aperture * theta.cos()
        / ((n_o as f64 - 1.0) * lambda_len);
    for n in 0..n_o {
        let phase = -step * n as f64;
        v[n] = Complex64::from_polar(amp, phase);
    }
    v
}

/// Noise variance that realizes `snr_db` for the average active-user LSFC and
/// pilot length `g`.
pub fn calibrate_noise(snr_db: f64, mean_lsfc: f64, g: usize) -> Result<f64> {
    if !(mean_lsfc > 0.0) {
        return Err(Error::Domain(format!(
            "calibrate_noise needs mean_lsfc > 0, got {mean_lsfc}"
        )));
    }
    if g == 0 {
        return Err(Error::Domain("calibrate_noise needs g > 0".into()));
    }
    Ok(mean_lsfc / (g as f64 * 10f64.powf(snr_db / 10.0)))
}

/// Draws one sample of the standard circular complex Gaussian.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Random pilot codebook with iid complex Gaussian entries, columns scaled to
/// exactly unit norm.
pub fn generate_pilots(g: usize, k: usize, seed: u64) -> PilotCodebook {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut a = Array2::<Complex64>::zeros((g, k));
    for col in 0..k {
        let mut norm_sq = 0.0;
        for row in 0..g {
            let z = complex_gaussian(&mut rng);
            norm_sq += z.norm_sqr();
            a[[row, col]] = z;
        }
        if norm_sq > 0.0 {
            let scale = 1.0 / norm_sq.sqrt();
            for row in 0..g {
                a[[row, col]] *= scale;
            }
        } else {
            a[[0, col]] = Complex64::new(1.0, 0.0);
        }
    }
    PilotCodebook { a }
}

/// Path gains whose power sums exactly to `omega`, split between a fixed LOS
/// share and Gaussian NLOS components according to the Rician factor.
fn sample_gains<R: Rng + ?Sized>(rng: &mut R, l_s: usize, k_r: f64, omega: f64) -> Vec<Complex64> {
    let mut gains = vec![Complex64::new(0.0, 0.0); l_s];
    if k_r > 0.0 {
        let (los_power, nlos_power) = if l_s == 1 {
            // No NLOS path exists to carry the diffuse share, so the LOS path
            // absorbs the full power budget.
            (omega, 0.0)
        } else {
            (k_r * omega / (k_r + 1.0), omega / (k_r + 1.0))
        };
        let beta: f64 = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
        gains[0] = Complex64::from_polar(los_power.sqrt(), beta);
        if l_s > 1 {
            fill_normalized_gaussian(rng, &mut gains[1..], nlos_power);
        }
    } else {
        fill_normalized_gaussian(rng, &mut gains[..], omega);
    }
    gains
}

/// Fills `slot` with iid complex Gaussians rescaled so their power sums
/// exactly to `power`.
fn fill_normalized_gaussian<R: Rng + ?Sized>(rng: &mut R, slot: &mut [Complex64], power: f64) {
    let mut total = 0.0;
    for g in slot.iter_mut() {
        let z = complex_gaussian(rng);
        total += z.norm_sqr();
        *g = z;
    }
    if total > 0.0 {
        let scale = (power / total).sqrt();
        for g in slot.iter_mut() {
            *g *= scale;
        }
    } else if let Some(first) = slot.first_mut() {
        *first = Complex64::new(power.sqrt(), 0.0);
    }
}

/// Samples a complete frame: active set, geometry, multipath rows, and the
/// calibrated noise variance.
pub fn sample_scene(cfg: &SceneConfig) -> Result<ChannelScene> {
    cfg.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let theta_min = cfg.theta_min.to_radians();
    let theta_max = cfg.theta_max.to_radians();
    let aperture = cfg.aperture();
    let omega = cfg.n_o as f64;

    let mut active: Vec<usize> = index_sample(&mut rng, cfg.k, cfg.k_a).into_vec();
    active.sort_unstable();

    let mut x = Array2::<Complex64>::zeros((cfg.k, cfg.n_o));
    let mut lsfc_all = vec![0.0f64; cfg.k];
    let mut theta_deg_all = vec![0.0f64; cfg.k];
    let mut paths = Vec::with_capacity(cfg.k_a);
    let mut lsfc_sum = 0.0;

    for &user in &active {
        let d = cfg.d_ref + rng.gen::<f64>() * (cfg.d_max - cfg.d_ref);
        let theta_user = theta_min + rng.gen::<f64>() * (theta_max - theta_min);
        let varsigma = lsfc(d, cfg.lsfc_exponent)?;
        lsfc_all[user] = varsigma;
        theta_deg_all[user] = theta_user.to_degrees();
        lsfc_sum += varsigma;

        let gains = sample_gains(&mut rng, cfg.l_s, cfg.k_r, omega);
        let mut aoa = Vec::with_capacity(cfg.l_s);
        for l in 0..cfg.l_s {
            if l == 0 && cfg.k_r > 0.0 {
                aoa.push(theta_user);
            } else {
                aoa.push(theta_min + rng.gen::<f64>() * (theta_max - theta_min));
            }
        }

        let amp = varsigma.sqrt();
        for (l, &angle) in aoa.iter().enumerate() {
            let steer = steering_vector(angle, cfg.n_o, aperture, cfg.lambda_len);
            for n in 0..cfg.n_o {
                x[[user, n]] += amp * gains[l] * steer[n];
            }
        }
        paths.push(UserPaths { aoa, gains });
    }

    let mean_lsfc = lsfc_sum / cfg.k_a as f64;
    let psi = calibrate_noise(cfg.snr_db, mean_lsfc, cfg.g)?;

    Ok(ChannelScene {
        active,
        x,
        lsfc: lsfc_all,
        theta_deg: theta_deg_all,
        paths,
        mean_lsfc,
        psi,
    })
}

/// Received pilot block `a x + z` with iid complex Gaussian noise of variance
/// `psi` per entry.  A zero `psi` returns the noiseless product.
pub fn synthesize_received(
    a: &Array2<Complex64>,
    x: &Array2<Complex64>,
    psi: f64,
    seed: u64,
) -> Result<Array2<Complex64>> {
    let (g, k) = a.dim();
    let (kx, n_o) = x.dim();
    if k != kx {
        return Err(Error::Dimension(format!(
            "pilot codebook has {k} columns but the channel matrix has {kx} rows"
        )));
    }
    if psi < 0.0 {
        return Err(Error::Domain(format!("psi must be non-negative, got {psi}")));
    }
    let mut ops = 0u64;
    let mut y = crate::linalg::matmul(a, x, &mut ops);
    if psi > 0.0 {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let sd = psi.sqrt();
        for row in 0..g {
            for col in 0..n_o {
                y[[row, col]] += complex_gaussian(&mut rng) * sd;
            }
        }
    }
    Ok(y)
}
