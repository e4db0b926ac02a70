//! Closed-form reference values for a configuration: the service-range mean
//! fading power, the calibrated noise variance, the greedy estimator's error
//! floor, and the least-squares noise load with and without angular
//! structure.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics;
use crate::scene::{self, SceneConfig};

/// Expected large-scale fading power for a user distance drawn uniformly
/// from `[d_ref, d_max]` under the power law `d^-exponent`.
pub fn expected_mean_lsfc(d_ref: f64, d_max: f64, exponent: f64) -> Result<f64> {
    if !(d_ref > 0.0 && d_max > d_ref) {
        return Err(Error::Domain(format!(
            "need 0 < d_ref < d_max, got {d_ref} and {d_max}"
        )));
    }
    if !(exponent > 0.0) {
        return Err(Error::Domain(format!(
            "exponent must be positive, got {exponent}"
        )));
    }
    let width = d_max - d_ref;
    if (exponent - 1.0).abs() < 1e-12 {
        return Ok((d_max / d_ref).ln() / width);
    }
    let e1 = exponent - 1.0;
    Ok((d_ref.powf(-e1) - d_max.powf(-e1)) / (e1 * width))
}

/// The closed-form quantities the error analyses predict for one scene.
#[derive(Debug, Clone, Serialize)]
pub struct AnalyticReport {
    /// Expected fading power over the service range.
    pub mean_lsfc: f64,
    /// Fading power at the cell edge.
    pub far_edge_lsfc: f64,
    /// Noise variance calibrated to the configured SNR at the expected
    /// fading power.
    pub psi: f64,
    /// Greedy variance-estimator error floor `(mean_lsfc + psi)^2`.
    pub greedy_floor: f64,
    /// Service-area lower bound `(far_edge_lsfc + psi)^2`.
    pub greedy_bound: f64,
    /// Least-squares noise power across all ports, `n_o * psi`.
    pub ls_full: f64,
    /// Least-squares noise power inside the angular span, `l_s * psi`.
    pub ls_angular: f64,
    /// Noise-load reduction of angular estimation in decibels.
    pub gap_db: f64,
}

/// Evaluates every closed form for the configuration.
pub fn compute(cfg: &SceneConfig) -> Result<AnalyticReport> {
    cfg.validate()?;
    let mean_lsfc = expected_mean_lsfc(cfg.d_ref, cfg.d_max, cfg.lsfc_exponent)?;
    let far_edge_lsfc = scene::lsfc(cfg.d_max, cfg.lsfc_exponent)?;
    let psi = scene::calibrate_noise(cfg.snr_db, mean_lsfc, cfg.g)?;
    let (greedy_floor, greedy_bound) = metrics::greedy_floor_mse(mean_lsfc, far_edge_lsfc, psi);
    let ls_full = cfg.n_o as f64 * psi;
    let ls_angular = cfg.l_s.min(cfg.n_o) as f64 * psi;
    Ok(AnalyticReport {
        mean_lsfc,
        far_edge_lsfc,
        psi,
        greedy_floor,
        greedy_bound,
        ls_full,
        ls_angular,
        gap_db: 10.0 * (ls_full / ls_angular).log10(),
    })
}

impl fmt::Display for AnalyticReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mean LSFC over service range     {:.6e}", self.mean_lsfc)?;
        writeln!(f, "cell-edge LSFC                   {:.6e}", self.far_edge_lsfc)?;
        writeln!(f, "calibrated noise variance        {:.6e}", self.psi)?;
        writeln!(f, "greedy variance-MSE floor        {:.6e}", self.greedy_floor)?;
        writeln!(f, "greedy variance-MSE lower bound  {:.6e}", self.greedy_bound)?;
        writeln!(f, "LS noise load, all ports         {:.6e}", self.ls_full)?;
        writeln!(f, "LS noise load, angular span      {:.6e}", self.ls_angular)?;
        write!(f, "angular noise-load gain          {:.2} dB", self.gap_db)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn inverse_square_mean_has_a_product_form() {
        // For exponent 2 the integral telescopes to 1 / (d_ref * d_max).
        let got = expected_mean_lsfc(20.0, 100.0, 2.0).unwrap();
        assert!((got - 5e-4).abs() < 1e-18);
        let other = expected_mean_lsfc(10.0, 50.0, 2.0).unwrap();
        assert!((other - 1.0 / 500.0).abs() < 1e-18);
    }

    #[test]
    fn unit_exponent_takes_the_log_branch() {
        let got = expected_mean_lsfc(20.0, 100.0, 1.0).unwrap();
        let want = (100.0f64 / 20.0).ln() / 80.0;
        assert!((got - want).abs() < 1e-18);
    }

    #[test]
    fn expected_mean_matches_monte_carlo() {
        let mut rng = StdRng::seed_from_u64(3);
        for &exponent in &[1.5, 2.0, 3.7] {
            let want = expected_mean_lsfc(20.0, 100.0, exponent).unwrap();
            let draws = 200_000;
            let mut acc = 0.0;
            for _ in 0..draws {
                let d = 20.0 + rng.gen::<f64>() * 80.0;
                acc += d.powf(-exponent);
            }
            let got = acc / draws as f64;
            assert!(
                (got - want).abs() < 0.02 * want,
                "exponent {exponent}: mc {got} vs closed {want}"
            );
        }
    }

    #[test]
    fn default_scene_reference_values() {
        let report = compute(&SceneConfig::default()).unwrap();
        assert!((report.mean_lsfc - 5e-4).abs() < 1e-18);
        assert!((report.far_edge_lsfc - 1e-4).abs() < 1e-18);
        // -10 dB over G=200 pilots: psi = mean / (200 * 0.1).
        assert!((report.psi - 2.5e-5).abs() < 1e-18);
        assert!((report.greedy_floor - (5.25e-4f64).powi(2)).abs() < 1e-15);
        assert!((report.greedy_bound - (1.25e-4f64).powi(2)).abs() < 1e-15);
        assert!((report.ls_full - 16.0 * report.psi).abs() < 1e-18);
        assert!((report.ls_angular - 3.0 * report.psi).abs() < 1e-18);
        let want_gap = 10.0 * (16.0f64 / 3.0).log10();
        assert!((report.gap_db - want_gap).abs() < 1e-12);
        let text = report.to_string();
        assert!(text.contains("floor"));
        assert!(text.contains("dB"));
    }
}
