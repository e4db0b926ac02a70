//! One Monte-Carlo trial, every algorithm on the same observations.
//!
//! Samples a scene, synthesizes the received block, and prints detection and
//! estimation quality for the conventional learner, both proposed variants,
//! and the greedy baseline.

use fluidamp::amp::{self, EmVariant, RunOptions};
use fluidamp::angular::{build_codebook, somp};
use fluidamp::em::GeoBounds;
use fluidamp::harness::config::ExperimentConfig;
use fluidamp::metrics::{self, NmseMode};
use fluidamp::scene;

fn main() -> fluidamp::Result<()> {
    let cfg = ExperimentConfig::default();
    let mut scene_cfg = cfg.scene.clone();
    scene_cfg.k = 200;
    scene_cfg.k_a = 10;
    scene_cfg.g = 100;
    scene_cfg.snr_db = -5.0;

    let frame = scene::sample_scene(&scene_cfg)?;
    let pilots = scene::generate_pilots(scene_cfg.g, scene_cfg.k, 2024);
    let y = scene::synthesize_received(&pilots.a, &frame.x, frame.psi, 99)?;
    let opts = RunOptions::default();
    let codebook = build_codebook(&scene_cfg, cfg.solver.n_s)?;

    println!(
        "scene: k={} k_a={} g={} n_o={} snr={} dB psi={:.3e}",
        scene_cfg.k, scene_cfg.k_a, scene_cfg.g, scene_cfg.n_o, scene_cfg.snr_db, frame.psi
    );
    println!("{:<22} {:>6} {:>12} {:>12} {:>6}", "algorithm", "ade", "nmse", "var-mse", "iters");

    let variants: [(&str, EmVariant); 3] = [
        ("em_amp_conventional", EmVariant::Conventional),
        (
            "proposed_geo",
            EmVariant::Geographic {
                bounds: GeoBounds::from_scene(&scene_cfg)?,
                mode: Default::default(),
            },
        ),
        (
            "proposed_angular",
            EmVariant::Angular {
                codebook: &codebook,
                l_s: scene_cfg.l_s,
                lambda_thresh: cfg.solver.lambda_thresh,
            },
        ),
    ];

    for (name, variant) in variants {
        let run = amp::run(&y, &pilots, frame.psi, variant, &opts, None)?;
        let estimated = metrics::top_k(&run.lambda, scene_cfg.k_a);
        let ade = metrics::ade(&frame.active, &estimated, scene_cfg.k_a);
        let nmse = metrics::nmse(&frame.x, &run.x_hat, &frame.active, &estimated, NmseMode::PerUser);
        let varmse = metrics::variance_mse(
            &frame.lsfc,
            &metrics::per_user_variances(&run.phi_x),
            &frame.active,
            &estimated,
        );
        println!(
            "{:<22} {:>6.3} {:>12} {:>12} {:>6}",
            name,
            ade,
            fmt_opt(nmse),
            fmt_opt(varmse),
            run.iterations
        );
    }

    let mut ops = 0;
    let greedy = somp(&y, &pilots.a, scene_cfg.k_a, &mut ops)?;
    let ade = metrics::ade(&frame.active, &greedy.support, scene_cfg.k_a);
    let nmse = metrics::nmse(
        &frame.x,
        &greedy.x_hat,
        &frame.active,
        &greedy.support,
        NmseMode::PerUser,
    );
    println!(
        "{:<22} {:>6.3} {:>12} {:>12} {:>6}",
        "somp_ls",
        ade,
        fmt_opt(nmse),
        "-",
        scene_cfg.k_a
    );
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.4e}"))
}
