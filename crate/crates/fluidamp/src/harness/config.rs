//! Experiment configuration: scene, solver, and Monte-Carlo sections loaded
//! from one TOML document with unknown keys rejected.

use serde::{Deserialize, Serialize};

use crate::bg::VarianceMode;
use crate::error::{Error, Result};
use crate::metrics::NmseMode;
use crate::scene::SceneConfig;

/// Solver knobs shared by every message-passing variant.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Iteration cap.
    pub t_max: usize,
    /// Relative change of the channel estimate that counts as converged.
    pub tol: f64,
    /// Damping factor on the estimate updates; 1 leaves them undamped.
    pub damping: f64,
    /// Activity level above which a row enters angular refinement; zero
    /// refines every row.
    pub lambda_thresh: f64,
    /// Number of sampled arrival angles in the refinement codebook.
    pub n_s: usize,
    /// How the geographic variant reads the per-coefficient variance.
    pub variance_mode: VarianceMode,
    /// Averaging convention for the channel error.
    pub nmse_mode: NmseMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            t_max: 50,
            tol: 1e-8,
            damping: 1.0,
            lambda_thresh: 0.1,
            n_s: 121,
            variance_mode: VarianceMode::default(),
            nmse_mode: NmseMode::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_max == 0 {
            return Err(Error::Config("t_max must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Config(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda_thresh) {
            return Err(Error::Config(format!(
                "lambda_thresh must lie in [0, 1], got {}",
                self.lambda_thresh
            )));
        }
        if self.n_s == 0 {
            return Err(Error::Config("n_s must be positive".into()));
        }
        Ok(())
    }
}

/// The estimators a sweep can run side by side on identical observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    /// Message passing with conventional per-user prior learning.
    #[serde(rename = "em_amp_conventional")]
    EmAmpConventional,
    /// Message passing with clipped geographic variance learning.
    #[serde(rename = "proposed_geo")]
    ProposedGeo,
    /// Message passing with per-iteration angular refinement.
    #[serde(rename = "proposed_angular")]
    ProposedAngular,
    /// Greedy joint support pursuit with a least-squares refit.
    #[serde(rename = "somp_ls")]
    SompLs,
}

impl Algorithm {
    /// Wire name used in configuration files and CSV rows.
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::EmAmpConventional => "em_amp_conventional",
            Algorithm::ProposedGeo => "proposed_geo",
            Algorithm::ProposedAngular => "proposed_angular",
            Algorithm::SompLs => "somp_ls",
        }
    }

    pub const ALL: [Algorithm; 4] = [
        Algorithm::EmAmpConventional,
        Algorithm::ProposedGeo,
        Algorithm::ProposedAngular,
        Algorithm::SompLs,
    ];
}

/// Monte-Carlo section: how many trials, from which master seed, running
/// which algorithms.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HarnessConfig {
    pub trials: usize,
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            trials: 50,
            seed: 7,
            algorithms: Algorithm::ALL.to_vec(),
        }
    }
}

impl HarnessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("algorithms must not be empty".into()));
        }
        for (i, a) in self.algorithms.iter().enumerate() {
            if self.algorithms[..i].contains(a) {
                return Err(Error::Config(format!(
                    "algorithm {} listed twice",
                    a.name()
                )));
            }
        }
        Ok(())
    }
}

/// Scene parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "snr_db")]
    SnrDb,
    #[serde(rename = "n_o")]
    NO,
    #[serde(rename = "g")]
    G,
    #[serde(rename = "k")]
    K,
    #[serde(rename = "k_a")]
    KA,
    #[serde(rename = "k_r")]
    KR,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::SnrDb => "snr_db",
            SweepAxis::NO => "n_o",
            SweepAxis::G => "g",
            SweepAxis::K => "k",
            SweepAxis::KA => "k_a",
            SweepAxis::KR => "k_r",
        }
    }
}

/// Grid over one scene parameter.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

/// Scene value at one sweep point, with integer axes validated instead of
/// silently rounded.
pub fn apply_axis(base: &SceneConfig, axis: SweepAxis, value: f64) -> Result<SceneConfig> {
    let mut cfg = base.clone();
    let as_count = |value: f64, axis: &str| -> Result<usize> {
        if !value.is_finite() || value < 1.0 || value.fract() != 0.0 {
            return Err(Error::Config(format!(
                "{axis} sweep values must be positive integers, got {value}"
            )));
        }
        Ok(value as usize)
    };
    match axis {
        SweepAxis::SnrDb => cfg.snr_db = value,
        SweepAxis::NO => cfg.n_o = as_count(value, "n_o")?,
        SweepAxis::G => cfg.g = as_count(value, "g")?,
        SweepAxis::K => cfg.k = as_count(value, "k")?,
        SweepAxis::KA => cfg.k_a = as_count(value, "k_a")?,
        SweepAxis::KR => {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::Config(format!(
                    "k_r sweep values must be non-negative, got {value}"
                )));
            }
            cfg.k_r = value;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Complete experiment description: one TOML document with `[scene]`,
/// `[solver]`, `[harness]`, and an optional `[sweep]` section.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub scene: SceneConfig,
    pub solver: SolverConfig,
    pub harness: HarnessConfig,
    pub sweep: Option<SweepConfig>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        self.solver.validate()?;
        self.harness.validate()?;
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::Config("sweep values must not be empty".into()));
            }
            for &v in &sweep.values {
                apply_axis(&self.scene, sweep.axis, v)?;
            }
        }
        Ok(())
    }

    /// The sweep grid, with a missing `[sweep]` section read as the single
    /// point the scene already describes.
    pub fn effective_sweep(&self) -> SweepConfig {
        self.sweep.clone().unwrap_or_else(|| SweepConfig {
            axis: SweepAxis::SnrDb,
            values: vec![self.scene.snr_db],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let text = toml::to_string(&cfg).unwrap();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(back.scene.k, cfg.scene.k);
        assert_eq!(back.solver.t_max, cfg.solver.t_max);
        assert_eq!(back.harness.algorithms, cfg.harness.algorithms);
    }

    #[test]
    fn unknown_keys_are_rejected_everywhere() {
        for text in [
            "typo_key = 1",
            "[scene]\ntypo_key = 1",
            "[solver]\ntypo_key = 1",
            "[harness]\ntypo_key = 1",
            "[sweep]\naxis = \"snr_db\"\nvalues = [0]\ntypo_key = 1",
        ] {
            assert!(
                ExperimentConfig::from_toml_str(text).is_err(),
                "accepted {text:?}"
            );
        }
    }

    #[test]
    fn partial_document_fills_defaults() {
        let cfg = ExperimentConfig::from_toml_str(
            "[scene]\nk = 200\nk_a = 10\n\n[harness]\ntrials = 3\n",
        )
        .unwrap();
        assert_eq!(cfg.scene.k, 200);
        assert_eq!(cfg.scene.g, 200);
        assert_eq!(cfg.harness.trials, 3);
        assert_eq!(cfg.solver.n_s, 121);
        assert!(cfg.sweep.is_none());
    }

    #[test]
    fn sweep_values_accept_integer_literals() {
        let cfg = ExperimentConfig::from_toml_str(
            "[sweep]\naxis = \"snr_db\"\nvalues = [-20, -15, -10.5]\n",
        )
        .unwrap();
        let sweep = cfg.sweep.unwrap();
        assert_eq!(sweep.values, vec![-20.0, -15.0, -10.5]);
    }

    #[test]
    fn integer_axes_reject_fractional_values() {
        let base = SceneConfig::default();
        assert!(apply_axis(&base, SweepAxis::NO, 8.0).is_ok());
        assert!(apply_axis(&base, SweepAxis::NO, 8.5).is_err());
        assert!(apply_axis(&base, SweepAxis::G, 0.0).is_err());
        assert!(apply_axis(&base, SweepAxis::KA, 1e9).is_err());
        assert!(apply_axis(&base, SweepAxis::KR, -1.0).is_err());
        let snr = apply_axis(&base, SweepAxis::SnrDb, -12.5).unwrap();
        assert_eq!(snr.snr_db, -12.5);
    }

    #[test]
    fn duplicate_algorithms_are_rejected() {
        let err = ExperimentConfig::from_toml_str(
            "[harness]\nalgorithms = [\"somp_ls\", \"somp_ls\"]\n",
        );
        assert!(err.is_err());
    }

    #[test]
    fn missing_sweep_degenerates_to_the_scene_point() {
        let cfg = ExperimentConfig::default();
        let sweep = cfg.effective_sweep();
        assert_eq!(sweep.axis, SweepAxis::SnrDb);
        assert_eq!(sweep.values, vec![cfg.scene.snr_db]);
    }
}
