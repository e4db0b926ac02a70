//! Monte-Carlo sweep driver: derives per-trial seeds, runs every configured
//! algorithm on identical observations, and reduces trial metrics into one
//! row per (axis value, algorithm) pair.
//!
//! Trials run concurrently; seeds are derived from the coordinates, not the
//! schedule, and the reduction walks trials in index order, so a report is a
//! pure function of the configuration and the master seed.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::amp::{self, EmVariant, RunOptions};
use crate::angular::{build_codebook, somp, SteeringCodebook};
use crate::em::GeoBounds;
use crate::error::{Error, Result};
use crate::harness::config::{apply_axis, Algorithm, ExperimentConfig};
use crate::metrics;
use crate::scene::{self, ChannelScene, PilotCodebook, SceneConfig};

/// Per-trial seed for one stream at one sweep coordinate.
///
/// Streams separate the independent random inputs of a trial: 0 draws the
/// scene, 1 the pilot codebook, 2 the receiver noise.  Mixing the parts
/// through an avalanche keeps nearby coordinates uncorrelated while every
/// coordinate stays directly addressable.
pub fn derive_seed(master: u64, axis_index: u64, trial: u64, stream: u64) -> u64 {
    let mut s = mix64(master ^ 0x243F_6A88_85A3_08D3);
    s = mix64(s ^ axis_index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    s = mix64(s ^ trial.wrapping_mul(0xD1B5_4A32_D192_ED03));
    mix64(s ^ stream.wrapping_mul(0x94D0_49BB_1331_11EB))
}

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// What one algorithm produced on one trial.
enum TrialOutcome {
    Finished(TrialMetrics),
    Diverged,
}

struct TrialMetrics {
    ade: f64,
    nmse: Option<f64>,
    varmse: Option<f64>,
    iterations: f64,
    phi_span: Option<(f64, f64)>,
}

/// Aggregated metrics of one algorithm at one sweep point.
///
/// Means cover the trials that finished; `nmse_mean` and `varmse_mean`
/// additionally skip trials where the quantity was undefined (no correctly
/// detected user, or an algorithm that learns no variances) and are NaN when
/// nothing remains.
#[derive(Debug, Clone, Serialize)]
pub struct AlgoStats {
    pub algorithm: Algorithm,
    pub ade_mean: f64,
    pub nmse_mean: f64,
    pub varmse_mean: f64,
    pub iters_mean: f64,
    pub trials_ok: usize,
    pub trials_diverged: usize,
    pub wall_ms: f64,
    /// Extreme learned variances across the point's trials, present for the
    /// variance-learning variants.
    pub phi_span: Option<(f64, f64)>,
}

/// One report row: one algorithm at one axis value.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub stats: AlgoStats,
}

/// Everything a sweep produced, ready for CSV and metadata emission.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub axis: String,
    pub values: Vec<f64>,
    pub rows: Vec<SweepRow>,
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub version: String,
}

/// Runs the configured sweep: every axis value, every algorithm, `trials`
/// Monte-Carlo repetitions on identical observations per trial.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let sweep = cfg.effective_sweep();
    let master = cfg.harness.seed;
    let mut rows = Vec::new();

    for (axis_i, &value) in sweep.values.iter().enumerate() {
        let point_cfg = apply_axis(&cfg.scene, sweep.axis, value)?;
        let codebook = build_codebook(&point_cfg, cfg.solver.n_s)?;

        let trials: Vec<Vec<(TrialOutcome, f64)>> = (0..cfg.harness.trials)
            .into_par_iter()
            .map(|trial| run_trial(cfg, &point_cfg, &codebook, master, axis_i as u64, trial as u64))
            .collect::<Result<_>>()?;

        for (slot, &algorithm) in cfg.harness.algorithms.iter().enumerate() {
            let mut stats = Accumulator::new();
            for trial in &trials {
                let (outcome, wall_ms) = &trial[slot];
                stats.push(outcome, *wall_ms);
            }
            rows.push(SweepRow {
                axis_value: value,
                stats: stats.finish(algorithm, cfg.harness.trials),
            });
        }
    }

    Ok(ExperimentReport {
        axis: sweep.axis.name().to_string(),
        values: sweep.values.clone(),
        rows,
        config: cfg.clone(),
        master_seed: master,
        version: env!("CARGO_PKG_VERSION").to_string(),
    })
}

/// Draws one trial's observations and runs every configured algorithm on
/// them, timing each.
fn run_trial(
    cfg: &ExperimentConfig,
    point_cfg: &SceneConfig,
    codebook: &SteeringCodebook,
    master: u64,
    axis_i: u64,
    trial: u64,
) -> Result<Vec<(TrialOutcome, f64)>> {
    let mut scene_cfg = point_cfg.clone();
    scene_cfg.seed = derive_seed(master, axis_i, trial, 0);
    let scene = scene::sample_scene(&scene_cfg)?;
    let pilots = scene::generate_pilots(
        point_cfg.g,
        point_cfg.k,
        derive_seed(master, axis_i, trial, 1),
    );
    let y = scene::synthesize_received(
        &pilots.a,
        &scene.x,
        scene.psi,
        derive_seed(master, axis_i, trial, 2),
    )?;

    let mut out = Vec::with_capacity(cfg.harness.algorithms.len());
    for &algorithm in &cfg.harness.algorithms {
        let start = Instant::now();
        let outcome = run_algorithm(cfg, point_cfg, codebook, algorithm, &y, &pilots, &scene)?;
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        out.push((outcome, wall_ms));
    }
    Ok(out)
}

fn run_algorithm(
    cfg: &ExperimentConfig,
    point_cfg: &SceneConfig,
    codebook: &SteeringCodebook,
    algorithm: Algorithm,
    y: &ndarray::Array2<num_complex::Complex64>,
    pilots: &PilotCodebook,
    scene: &ChannelScene,
) -> Result<TrialOutcome> {
    let opts = RunOptions {
        t_max: cfg.solver.t_max,
        tol: cfg.solver.tol,
        damping: cfg.solver.damping,
    };
    let k_a = point_cfg.k_a;

    if algorithm == Algorithm::SompLs {
        let mut ops = 0;
        let result = somp(y, &pilots.a, k_a, &mut ops)?;
        let nmse = metrics::nmse(
            &scene.x,
            &result.x_hat,
            &scene.active,
            &result.support,
            cfg.solver.nmse_mode,
        );
        return Ok(TrialOutcome::Finished(TrialMetrics {
            ade: metrics::ade(&scene.active, &result.support, k_a),
            nmse,
            varmse: None,
            iterations: k_a as f64,
            phi_span: None,
        }));
    }

    let variant = match algorithm {
        Algorithm::EmAmpConventional => EmVariant::Conventional,
        Algorithm::ProposedGeo => EmVariant::Geographic {
            bounds: GeoBounds::from_scene(point_cfg)?,
            mode: cfg.solver.variance_mode,
        },
        Algorithm::ProposedAngular => EmVariant::Angular {
            codebook,
            l_s: point_cfg.l_s,
            lambda_thresh: cfg.solver.lambda_thresh,
        },
        Algorithm::SompLs => unreachable!(),
    };

    let run = match amp::run(y, pilots, scene.psi, variant, &opts, None) {
        Ok(run) => run,
        Err(Error::Divergence { .. }) => return Ok(TrialOutcome::Diverged),
        Err(e) => return Err(e),
    };

    let estimated = metrics::top_k(&run.lambda, k_a);
    let nmse = metrics::nmse(
        &scene.x,
        &run.x_hat,
        &scene.active,
        &estimated,
        cfg.solver.nmse_mode,
    );
    let varmse = metrics::variance_mse(
        &scene.lsfc,
        &metrics::per_user_variances(&run.phi_x),
        &scene.active,
        &estimated,
    );
    Ok(TrialOutcome::Finished(TrialMetrics {
        ade: metrics::ade(&scene.active, &estimated, k_a),
        nmse,
        varmse,
        iterations: run.iterations as f64,
        phi_span: run.phi_span,
    }))
}

struct Accumulator {
    ade: f64,
    nmse: f64,
    nmse_n: usize,
    varmse: f64,
    varmse_n: usize,
    iters: f64,
    ok: usize,
    diverged: usize,
    wall_ms: f64,
    phi_span: Option<(f64, f64)>,
}

impl Accumulator {
    fn new() -> Self {
        Accumulator {
            ade: 0.0,
            nmse: 0.0,
            nmse_n: 0,
            varmse: 0.0,
            varmse_n: 0,
            iters: 0.0,
            ok: 0,
            diverged: 0,
            wall_ms: 0.0,
            phi_span: None,
        }
    }

    fn push(&mut self, outcome: &TrialOutcome, wall_ms: f64) {
        self.wall_ms += wall_ms;
        match outcome {
            TrialOutcome::Diverged => self.diverged += 1,
            TrialOutcome::Finished(m) => {
                self.ok += 1;
                self.ade += m.ade;
                self.iters += m.iterations;
                if let Some(v) = m.nmse {
                    self.nmse += v;
                    self.nmse_n += 1;
                }
                if let Some(v) = m.varmse {
                    self.varmse += v;
                    self.varmse_n += 1;
                }
                if let Some((lo, hi)) = m.phi_span {
                    self.phi_span = match self.phi_span {
                        None => Some((lo, hi)),
                        Some((a, b)) => Some((a.min(lo), b.max(hi))),
                    };
                }
            }
        }
    }

    fn finish(self, algorithm: Algorithm, trials: usize) -> AlgoStats {
        debug_assert_eq!(self.ok + self.diverged, trials);
        let mean = |sum: f64, n: usize| if n > 0 { sum / n as f64 } else { f64::NAN };
        AlgoStats {
            algorithm,
            ade_mean: mean(self.ade, self.ok),
            nmse_mean: mean(self.nmse, self.nmse_n),
            varmse_mean: mean(self.varmse, self.varmse_n),
            iters_mean: mean(self.iters, self.ok),
            trials_ok: self.ok,
            trials_diverged: self.diverged,
            wall_ms: self.wall_ms,
            phi_span: self.phi_span,
        }
    }
}
