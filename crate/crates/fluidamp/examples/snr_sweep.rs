//! Monte-Carlo sweep over SNR, printed as CSV and written with plots into
//! `target/snr_sweep/`.

use fluidamp::harness::config::{ExperimentConfig, HarnessConfig, SweepAxis, SweepConfig};
use fluidamp::harness::{report, run_sweep};

fn main() -> fluidamp::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.scene.k = 200;
    cfg.scene.k_a = 10;
    cfg.scene.g = 100;
    cfg.harness = HarnessConfig {
        trials: 20,
        seed: 41,
        ..HarnessConfig::default()
    };
    cfg.sweep = Some(SweepConfig {
        axis: SweepAxis::SnrDb,
        values: vec![-20.0, -15.0, -10.0, -5.0, 0.0],
    });

    let result = run_sweep(&cfg)?;
    print!("{}", report::csv_string(&result));

    let out = std::path::Path::new("target/snr_sweep");
    for path in report::write_report(&result, out, true)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}
