//! Least-squares noise load with and without angular structure: projecting
//! onto the span of a user's few arrival directions keeps `l_s * psi` noise
//! power instead of `n_o * psi`.

use fluidamp::harness::analytic;
use fluidamp::metrics;
use fluidamp::scene::SceneConfig;

fn main() -> fluidamp::Result<()> {
    let cfg = SceneConfig::default();
    let trials = 10_000;

    println!(
        "{:>7} {:>12} {:>12} {:>12} {:>12} {:>8}",
        "snr_db", "full_mc", "full_ref", "angular_mc", "angular_ref", "gap_db"
    );
    for snr_db in [-20.0, -10.0, 0.0] {
        let point = SceneConfig { snr_db, ..cfg.clone() };
        let reference = analytic::compute(&point)?;
        let load = metrics::ls_noise_load(&point, reference.psi, trials, 31)?;
        println!(
            "{:>7} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>8.2}",
            snr_db,
            load.full_mc,
            load.full_closed,
            load.angular_mc,
            load.angular_closed,
            10.0 * (load.full_mc / load.angular_mc).log10()
        );
    }
    Ok(())
}
