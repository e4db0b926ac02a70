//! Per-iteration channel error of the three message-passing variants on one
//! instance, showing how fast each settles.

use fluidamp::amp::{self, EmVariant, RunOptions, Truth};
use fluidamp::angular::build_codebook;
use fluidamp::em::GeoBounds;
use fluidamp::scene::{self, SceneConfig};

fn main() -> fluidamp::Result<()> {
    let cfg = SceneConfig {
        k: 200,
        k_a: 10,
        g: 100,
        snr_db: -14.0,
        seed: 5,
        ..SceneConfig::default()
    };
    let frame = scene::sample_scene(&cfg)?;
    let pilots = scene::generate_pilots(cfg.g, cfg.k, 17);
    let y = scene::synthesize_received(&pilots.a, &frame.x, frame.psi, 23)?;
    let codebook = build_codebook(&cfg, 121)?;
    let opts = RunOptions {
        t_max: 30,
        ..RunOptions::default()
    };
    let truth = Truth {
        x: &frame.x,
        active: &frame.active,
    };

    let variants: [(&str, EmVariant); 3] = [
        ("em_amp_conventional", EmVariant::Conventional),
        (
            "proposed_geo",
            EmVariant::Geographic {
                bounds: GeoBounds::from_scene(&cfg)?,
                mode: Default::default(),
            },
        ),
        (
            "proposed_angular",
            EmVariant::Angular {
                codebook: &codebook,
                l_s: cfg.l_s,
                lambda_thresh: 0.1,
            },
        ),
    ];

    let mut traces = Vec::new();
    for (name, variant) in variants {
        let run = amp::run(&y, &pilots, frame.psi, variant, &opts, Some(&truth))?;
        let nmse: Vec<f64> = run.trace.iter().filter_map(|p| p.nmse).collect();
        traces.push((name, nmse));
    }

    println!("{:<6} {:>22} {:>22} {:>22}", "iter", traces[0].0, traces[1].0, traces[2].0);
    let depth = traces.iter().map(|(_, t)| t.len()).max().unwrap_or(0);
    for i in 0..depth {
        let cell = |t: &[f64]| {
            t.get(i)
                .or(t.last())
                .map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"))
        };
        println!(
            "{:<6} {:>22} {:>22} {:>22}",
            i + 1,
            cell(&traces[0].1),
            cell(&traces[1].1),
            cell(&traces[2].1)
        );
    }
    Ok(())
}
