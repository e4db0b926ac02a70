//! Expectation-maximization updates of the Bernoulli-Gaussian
//! hyperparameters between message-passing iterations.
//!
//! All rules aggregate the per-coefficient posterior moments over the ports
//! of each user, so a single user carries one activity probability, one
//! active-component mean, and one active-component variance that are
//! broadcast back over its row.  The geographic rule replaces the free
//! variance estimate with one clipped to the range of large-scale fading
//! coefficients the service area can produce.

use num_complex::Complex64;

use crate::bg::{posterior_v, BgPrior, MomentField, VarianceMode, VARIANCE_FLOOR};
use crate::error::{Error, Result};
use crate::scene::{lsfc, SceneConfig};

/// Support mass below which a user is treated as inactive and its mean and
/// variance are left at their previous values.
const SUPPORT_FLOOR: f64 = 1e-12;

/// Admissible range of the active-component variance, taken from the
/// large-scale fading at the far and near edges of the service area.
#[derive(Debug, Clone, Copy)]
pub struct GeoBounds {
    pub phi_min: f64,
    pub phi_max: f64,
}

impl GeoBounds {
    pub fn new(phi_min: f64, phi_max: f64) -> Result<Self> {
        if !(phi_min > 0.0 && phi_max > phi_min) {
            return Err(Error::Config(format!(
                "variance bounds must satisfy 0 < min < max, got [{phi_min}, {phi_max}]"
            )));
        }
        Ok(GeoBounds { phi_min, phi_max })
    }

    /// Bounds from the scene geometry: the weakest user sits at `d_max`, the
    /// strongest at `d_ref`.
    pub fn from_scene(cfg: &SceneConfig) -> Result<Self> {
        let lo = lsfc(cfg.d_max, cfg.lsfc_exponent)?;
        let hi = lsfc(cfg.d_ref, cfg.lsfc_exponent)?;
        GeoBounds::new(lo, hi)
    }

    pub fn clip(&self, phi: f64) -> f64 {
        if phi < self.phi_min {
            self.phi_min
        } else if phi > self.phi_max {
            self.phi_max
        } else {
            phi
        }
    }
}

/// Per-user activity update: the mean posterior activity over the ports.
fn update_lambda(prior: &mut BgPrior, post: &MomentField) {
    let (k, n_o) = post.pi.dim();
    for ki in 0..k {
        let mut acc = 0.0;
        for n in 0..n_o {
            acc += post.pi[[ki, n]];
        }
        prior.lambda[ki] = acc / n_o as f64;
    }
}

/// Per-user mean update: support-weighted average of the active-branch
/// means, broadcast over the row.  Users with negligible support keep their
/// previous mean.
fn update_mean(prior: &mut BgPrior, post: &MomentField) {
    let (k, n_o) = post.pi.dim();
    for ki in 0..k {
        let mut mass = 0.0;
        let mut acc = Complex64::new(0.0, 0.0);
        for n in 0..n_o {
            mass += post.pi[[ki, n]];
            acc += post.gamma[[ki, n]] * post.pi[[ki, n]];
        }
        if mass < SUPPORT_FLOOR {
            continue;
        }
        let mu = acc / mass.max(SUPPORT_FLOOR);
        for n in 0..n_o {
            prior.mu_x[[ki, n]] = mu;
        }
    }
}

/// Per-user variance update about the freshly updated mean: support-weighted
/// spread of the active branch plus its posterior variance.
fn update_variance_conventional(prior: &mut BgPrior, post: &MomentField) {
    let (k, n_o) = post.pi.dim();
    for ki in 0..k {
        let mut mass = 0.0;
        let mut acc = 0.0;
        for n in 0..n_o {
            let pi = post.pi[[ki, n]];
            mass += pi;
            let dev = (post.gamma[[ki, n]] - prior.mu_x[[ki, n]]).norm_sqr();
            acc += pi * (dev + post.nu[[ki, n]]);
        }
        if mass < SUPPORT_FLOOR {
            continue;
        }
        let phi = (acc / mass.max(SUPPORT_FLOOR)).max(VARIANCE_FLOOR);
        for n in 0..n_o {
            prior.phi_x[[ki, n]] = phi;
        }
    }
}

/// Per-user variance update from the second moment about the previous mean,
/// clipped to the geographic range.  Users with negligible support keep
/// their previous variance.
fn update_variance_geographic(
    prior: &mut BgPrior,
    post: &MomentField,
    bounds: GeoBounds,
    mode: VarianceMode,
) {
    let (k, n_o) = post.pi.dim();
    for ki in 0..k {
        let mut mass = 0.0;
        let mut acc = 0.0;
        for n in 0..n_o {
            mass += post.pi[[ki, n]];
            acc += posterior_v(&post.at(ki, n), prior.mu_x[[ki, n]], mode);
        }
        if mass < SUPPORT_FLOOR {
            continue;
        }
        let phi = bounds.clip(acc / mass.max(SUPPORT_FLOOR));
        for n in 0..n_o {
            prior.phi_x[[ki, n]] = phi;
        }
    }
}

/// Conventional learning step: activity, then mean, then variance about the
/// new mean.
pub fn em_step_conventional(prior: &mut BgPrior, post: &MomentField) {
    update_lambda(prior, post);
    update_mean(prior, post);
    update_variance_conventional(prior, post);
}

/// Geographic learning step: activity, then the clipped variance about the
/// previous mean, then the mean.
pub fn em_step_geographic(
    prior: &mut BgPrior,
    post: &MomentField,
    bounds: GeoBounds,
    mode: VarianceMode,
) {
    update_lambda(prior, post);
    update_variance_geographic(prior, post, bounds, mode);
    update_mean(prior, post);
}
