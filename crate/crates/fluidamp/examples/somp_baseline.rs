//! The greedy baseline on its home turf: joint support pursuit across ports
//! with a least-squares refit, on easy and on noisy instances.

use fluidamp::angular::somp;
use fluidamp::metrics::{self, NmseMode};
use fluidamp::scene::{self, SceneConfig};

fn main() -> fluidamp::Result<()> {
    let cfg = SceneConfig {
        k: 150,
        k_a: 8,
        g: 60,
        ..SceneConfig::default()
    };

    println!("{:>7} {:>8} {:>12} {:>10}", "snr_db", "ade", "nmse", "ops");
    for snr_db in [20.0, 0.0, -10.0, -20.0] {
        let point = SceneConfig { snr_db, ..cfg.clone() };
        let frame = scene::sample_scene(&point)?;
        let pilots = scene::generate_pilots(point.g, point.k, 3);
        let y = scene::synthesize_received(&pilots.a, &frame.x, frame.psi, 4)?;

        let mut ops = 0;
        let result = somp(&y, &pilots.a, point.k_a, &mut ops)?;
        let ade = metrics::ade(&frame.active, &result.support, point.k_a);
        let nmse = metrics::nmse(
            &frame.x,
            &result.x_hat,
            &frame.active,
            &result.support,
            NmseMode::PerUser,
        );
        println!(
            "{:>7} {:>8.3} {:>12} {:>10}",
            snr_db,
            ade,
            nmse.map_or_else(|| "-".to_string(), |v| format!("{v:.4e}")),
            ops
        );
    }
    Ok(())
}
