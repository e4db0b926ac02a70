//! Detection and estimation quality measures, plus closed-form reference
//! values for the greedy baseline's error floor and the least-squares noise
//! load of full-port versus angular estimation.

use ndarray::{Array2, ArrayView1};
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::linalg::{lstsq_min_norm, RANK_RTOL};
use crate::scene::{self, SceneConfig};

/// Averaging convention for the channel error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum NmseMode {
    /// Mean over correctly detected users of each user's own relative error.
    #[default]
    #[serde(rename = "per-user")]
    PerUser,
    /// Total squared error over total channel energy of the correctly
    /// detected users.
    #[serde(rename = "ratio-of-sums")]
    RatioOfSums,
}

/// Users detected from the activity estimates: the `k_a` largest values,
/// lowest index first on ties, returned ascending.
pub fn top_k(lambda: &[f64], k_a: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..lambda.len()).collect();
    idx.sort_by(|&i, &j| {
        lambda[j]
            .partial_cmp(&lambda[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let mut chosen: Vec<usize> = idx.into_iter().take(k_a).collect();
    chosen.sort_unstable();
    chosen
}

/// Detection summary assembled from a solver's outputs.
#[derive(Debug, Clone)]
pub struct DetectionResult {
    /// Per-user activity estimates.
    pub lambda: Vec<f64>,
    /// Detected users, ascending.
    pub estimated_set: Vec<usize>,
    /// Channel estimate for all users, `k x n_o`.
    pub x_hat: Array2<Complex64>,
}

/// Ranks users by activity and keeps the top `k_a`.
pub fn detect(lambda: Vec<f64>, x_hat: Array2<Complex64>, k_a: usize) -> DetectionResult {
    let estimated_set = top_k(&lambda, k_a);
    DetectionResult {
        lambda,
        estimated_set,
        x_hat,
    }
}

/// Fraction of truly active users the detector missed.  Both sets must be
/// ascending.
pub fn ade(true_set: &[usize], estimated_set: &[usize], k_a: usize) -> f64 {
    if k_a == 0 {
        return 0.0;
    }
    let hits = true_set
        .iter()
        .filter(|u| estimated_set.binary_search(u).is_ok())
        .count();
    1.0 - hits as f64 / k_a as f64
}

/// Indices present in both the true and the estimated support, ascending.
pub fn correctly_detected(true_set: &[usize], estimated_set: &[usize]) -> Vec<usize> {
    true_set
        .iter()
        .copied()
        .filter(|u| estimated_set.binary_search(u).is_ok())
        .collect()
}

/// Channel error over the correctly detected users, `None` when no user was
/// correctly detected.
pub fn nmse(
    x_true: &Array2<Complex64>,
    x_hat: &Array2<Complex64>,
    true_set: &[usize],
    estimated_set: &[usize],
    mode: NmseMode,
) -> Option<f64> {
    let correct = correctly_detected(true_set, estimated_set);
    if correct.is_empty() {
        return None;
    }
    let n_o = x_true.ncols();
    match mode {
        NmseMode::PerUser => {
            let mut acc = 0.0;
            for &u in &correct {
                let mut err = 0.0;
                let mut pow = 0.0;
                for n in 0..n_o {
                    err += (x_hat[[u, n]] - x_true[[u, n]]).norm_sqr();
                    pow += x_true[[u, n]].norm_sqr();
                }
                acc += err / pow.max(1e-300);
            }
            Some(acc / correct.len() as f64)
        }
        NmseMode::RatioOfSums => {
            let mut err = 0.0;
            let mut pow = 0.0;
            for &u in &correct {
                for n in 0..n_o {
                    err += (x_hat[[u, n]] - x_true[[u, n]]).norm_sqr();
                    pow += x_true[[u, n]].norm_sqr();
                }
            }
            Some(err / pow.max(1e-300))
        }
    }
}

/// Mean squared error of the learned per-user variances against the true
/// large-scale fading coefficients, over the correctly detected users.
pub fn variance_mse(
    lsfc_true: &[f64],
    phi_hat_per_user: &[f64],
    true_set: &[usize],
    estimated_set: &[usize],
) -> Option<f64> {
    let correct = correctly_detected(true_set, estimated_set);
    if correct.is_empty() {
        return None;
    }
    let acc: f64 = correct
        .iter()
        .map(|&u| (lsfc_true[u] - phi_hat_per_user[u]).powi(2))
        .sum();
    Some(acc / correct.len() as f64)
}

/// Closed-form error floor of the greedy baseline's variance estimator and
/// its service-area lower bound.
///
/// A port's equalized deviation from the channel mean is circular Gaussian
/// with power `lsfc + psi`, so its squared magnitude is an exponential
/// variate whose variance, `(mean_lsfc + psi)^2`, is exactly the estimator's
/// mean squared error.  More SNR shrinks `psi` but leaves the fading power in
/// place; with every user at the far edge the error would still be
/// `(lsfc(d_max) + psi)^2`.
pub fn greedy_floor_mse(mean_lsfc: f64, far_edge_lsfc: f64, psi: f64) -> (f64, f64) {
    let floor = (mean_lsfc + psi).powi(2);
    let bound = (far_edge_lsfc + psi).powi(2);
    (floor, bound)
}

/// Matched-filter equalizer of one user's observation block: correlates the
/// unit-norm pilot against each port's received column.
pub fn equalize(
    pilot: ArrayView1<'_, Complex64>,
    y: &Array2<Complex64>,
) -> Result<Vec<Complex64>> {
    let (g, n_o) = y.dim();
    if pilot.len() != g {
        return Err(Error::Dimension(format!(
            "pilot has {} entries but the block has {g} rows",
            pilot.len()
        )));
    }
    let mut out = Vec::with_capacity(n_o);
    for n in 0..n_o {
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..g {
            acc += pilot[r].conj() * y[[r, n]];
        }
        out.push(acc);
    }
    Ok(out)
}

/// Per-port greedy variance estimates `|y_n - h_bar|^2 - psi` from
/// equalized observations.
///
/// Values may be negative and are reported raw.  Each port's estimate is a
/// single-sample read of an exponential variate, so its mean squared error
/// against the true fading power is exactly `(lsfc + psi)^2`: the floor that
/// neither more SNR nor more ports can remove.
pub fn greedy_variance_estimator(
    equalized: &[Complex64],
    h_bar: Complex64,
    psi: f64,
) -> Vec<f64> {
    equalized
        .iter()
        .map(|y| (y - h_bar).norm_sqr() - psi)
        .collect()
}

/// Monte-Carlo least-squares noise power per user, without and with angular
/// structure, next to the closed forms `n_o * psi` and `l_s * psi`.
pub struct LsNoiseLoad {
    pub full_mc: f64,
    pub angular_mc: f64,
    pub full_closed: f64,
    pub angular_closed: f64,
}

/// Steering rows at independent random angles, `l_s x n_o`, redrawn until
/// numerically full rank.
pub fn draw_full_rank_steering_rows(
    cfg: &SceneConfig,
    l_s: usize,
    seed: u64,
) -> Result<Array2<Complex64>> {
    let n_o = cfg.n_o;
    if l_s == 0 || l_s > n_o {
        return Err(Error::Config(format!(
            "steering span needs 0 < l_s <= {n_o}, got {l_s}"
        )));
    }
    let aperture = cfg.aperture();
    let mut rng = StdRng::seed_from_u64(seed);
    for _ in 0..100 {
        let mut u = Array2::<Complex64>::zeros((l_s, n_o));
        for j in 0..l_s {
            let theta: f64 = rng.gen_range(cfg.theta_min..cfg.theta_max).to_radians();
            let v = scene::steering_vector(theta, n_o, aperture, cfg.lambda_len);
            for n in 0..n_o {
                u[[j, n]] = v[n];
            }
        }
        let mut ops = 0;
        let gram = gram_of_rows(&u, &mut ops);
        let probe = lstsq_min_norm(&gram, &Array2::eye(l_s), RANK_RTOL, &mut ops)?;
        if probe.rank == l_s {
            return Ok(u);
        }
    }
    Err(Error::Domain(
        "could not draw a full-rank angular span".into(),
    ))
}

fn gram_of_rows(u: &Array2<Complex64>, ops: &mut u64) -> Array2<Complex64> {
    let (l_s, n_o) = u.dim();
    let mut gram = Array2::<Complex64>::zeros((l_s, l_s));
    for i in 0..l_s {
        for j in 0..l_s {
            let mut acc = Complex64::new(0.0, 0.0);
            for n in 0..n_o {
                acc += u[[i, n]] * u[[j, n]].conj();
            }
            gram[[i, j]] = acc;
        }
    }
    *ops += (l_s * l_s * n_o) as u64;
    gram
}

/// Monte-Carlo estimate of the per-user least-squares noise power as the
/// literal quadratic forms: the raw equalized energy, and the energy after
/// the chained projection onto the span of the steering rows `u`.
///
/// `u` is `l_s x n_o` with steering vectors as rows; a rank-deficient span
/// is an error, the caller redraws.
pub fn ls_mse_pair(
    pilot: ArrayView1<'_, Complex64>,
    u: &Array2<Complex64>,
    psi: f64,
    trials: usize,
    seed: u64,
) -> Result<LsNoiseLoad> {
    if trials == 0 {
        return Err(Error::Config("ls_mse_pair needs trials > 0".into()));
    }
    if psi < 0.0 {
        return Err(Error::Domain(format!("psi must be non-negative, got {psi}")));
    }
    let (l_s, n_o) = u.dim();
    let g = pilot.len();

    // Projection onto the row space: P = U^H (U U^H)^{-1} U, built once.
    let mut ops = 0;
    let gram = gram_of_rows(u, &mut ops);
    let inv = lstsq_min_norm(&gram, &Array2::eye(l_s), RANK_RTOL, &mut ops)?;
    if inv.rank < l_s {
        return Err(Error::Domain(
            "steering rows are collinear, redraw the span".into(),
        ));
    }
    let mut p = Array2::<Complex64>::zeros((n_o, n_o));
    for r in 0..n_o {
        for c in 0..n_o {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, j) in (0..l_s).flat_map(|i| (0..l_s).map(move |j| (i, j))) {
                acc += u[[i, r]].conj() * inv.x[[i, j]] * u[[j, c]];
            }
            p[[r, c]] = acc;
        }
    }

    let mut pilot_mat = Array2::<Complex64>::zeros((g, 1));
    for r in 0..g {
        pilot_mat[[r, 0]] = pilot[r];
    }

    let mut full_acc = 0.0;
    let mut angular_acc = 0.0;
    for t in 0..trials {
        let z = scene::synthesize_received(
            &pilot_mat,
            &Array2::zeros((1, n_o)),
            psi,
            seed.wrapping_add(1 + t as u64),
        )?;
        let e = equalize(pilot, &z)?;
        full_acc += e.iter().map(|v| v.norm_sqr()).sum::<f64>();

        // q = e P, then the chained form q P e^H, taken as its real part.
        let mut q = vec![Complex64::new(0.0, 0.0); n_o];
        for c in 0..n_o {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..n_o {
                acc += e[r] * p[[r, c]];
            }
            q[c] = acc;
        }
        let mut val = Complex64::new(0.0, 0.0);
        for c in 0..n_o {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..n_o {
                acc += q[r] * p[[r, c]];
            }
            val += acc * e[c].conj();
        }
        angular_acc += val.re;
    }

    Ok(LsNoiseLoad {
        full_mc: full_acc / trials as f64,
        angular_mc: angular_acc / trials as f64,
        full_closed: n_o as f64 * psi,
        angular_closed: l_s as f64 * psi,
    })
}

/// Convenience wrapper: draws a fresh full-rank steering span and a unit
/// pilot for the scene, then measures the noise-load pair.
pub fn ls_noise_load(
    cfg: &SceneConfig,
    psi: f64,
    trials: usize,
    seed: u64,
) -> Result<LsNoiseLoad> {
    let l_s = cfg.l_s.min(cfg.n_o);
    let u = draw_full_rank_steering_rows(cfg, l_s, seed)?;
    let pilots = scene::generate_pilots(cfg.g, 1, seed ^ 0x9E3779B97F4A7C15);
    ls_mse_pair(pilots.a.column(0), &u, psi, trials, seed)
}

/// Per-user variance estimates read off a prior field that broadcasts one
/// value per row.
pub fn per_user_variances(phi_x: &Array2<f64>) -> Vec<f64> {
    (0..phi_x.nrows()).map(|k| phi_x[[k, 0]]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn top_k_ranks_and_breaks_ties_low() {
        let lambda = [0.1, 0.9, 0.9, 0.05, 0.7];
        assert_eq!(top_k(&lambda, 2), vec![1, 2]);
        assert_eq!(top_k(&lambda, 3), vec![1, 2, 4]);
        let flat = [0.5, 0.5, 0.5, 0.5];
        assert_eq!(top_k(&flat, 2), vec![0, 1]);
        assert_eq!(top_k(&flat, 0), Vec::<usize>::new());
        assert_eq!(top_k(&flat, 10), vec![0, 1, 2, 3]);
    }

    #[test]
    fn ade_reference_points() {
        assert_eq!(ade(&[1, 2, 3, 4], &[1, 2, 3, 4], 4), 0.0);
        assert_eq!(ade(&[1, 2, 3, 4], &[5, 6, 7, 8], 4), 1.0);
        assert_eq!(ade(&[1, 2, 3, 4], &[1, 2, 7, 8], 4), 0.5);
    }

    #[test]
    fn nmse_is_zero_for_exact_estimates_and_none_for_misses() {
        let mut x = Array2::<Complex64>::zeros((4, 2));
        x[[1, 0]] = Complex64::new(1.0, 1.0);
        x[[1, 1]] = Complex64::new(0.5, 0.0);
        x[[2, 0]] = Complex64::new(-1.0, 0.0);
        x[[2, 1]] = Complex64::new(0.0, 2.0);
        let exact = nmse(&x, &x, &[1, 2], &[1, 2], NmseMode::PerUser).unwrap();
        assert_eq!(exact, 0.0);
        assert!(nmse(&x, &x, &[1, 2], &[0, 3], NmseMode::PerUser).is_none());
    }

    #[test]
    fn nmse_modes_weight_users_differently() {
        // User 1 has tiny channel energy and a large relative error; user 2
        // is strong and exact.  Per-user averaging is dominated by the weak
        // user, the ratio of sums by the strong one.
        let mut x = Array2::<Complex64>::zeros((3, 1));
        x[[1, 0]] = Complex64::new(0.1, 0.0);
        x[[2, 0]] = Complex64::new(10.0, 0.0);
        let mut xh = x.clone();
        xh[[1, 0]] = Complex64::new(0.2, 0.0);
        let per_user = nmse(&x, &xh, &[1, 2], &[1, 2], NmseMode::PerUser).unwrap();
        let ratio = nmse(&x, &xh, &[1, 2], &[1, 2], NmseMode::RatioOfSums).unwrap();
        assert!((per_user - 0.5).abs() < 1e-15);
        assert!((ratio - 0.01 / 100.01).abs() < 1e-12);
        assert!(per_user > ratio * 100.0);
    }

    #[test]
    fn variance_mse_reference() {
        let lsfc = [1e-3, 2e-3, 3e-3];
        let phi = [1e-3, 1e-3, 1e-3];
        let v = variance_mse(&lsfc, &phi, &[0, 1, 2], &[0, 1, 2]).unwrap();
        let want = ((0.0f64).powi(2) + (1e-3f64).powi(2) + (2e-3f64).powi(2)) / 3.0;
        assert!((v - want).abs() < 1e-20);
        assert!(variance_mse(&lsfc, &phi, &[0], &[1, 2]).is_none());
    }

    #[test]
    fn greedy_floor_reference_values() {
        let (floor, bound) = greedy_floor_mse(1e-4, 1e-4, 5e-6);
        assert!((floor - 1.1025e-8).abs() < 1e-14);
        assert!((bound - 1.1025e-8).abs() < 1e-14);
        let (_, clean_bound) = greedy_floor_mse(1e-3, 1e-4, 0.0);
        assert!((clean_bound - 1e-8).abs() < 1e-20);
    }

    #[test]
    fn equalizer_reads_unit_pilot_channel_exactly() {
        let pilots = scene::generate_pilots(16, 1, 7);
        let mut x = Array2::<Complex64>::zeros((1, 3));
        x[[0, 0]] = Complex64::new(1.0, -2.0);
        x[[0, 1]] = Complex64::new(0.0, 0.5);
        x[[0, 2]] = Complex64::new(-0.3, 0.0);
        let y = scene::synthesize_received(&pilots.a, &x, 0.0, 1).unwrap();
        let e = equalize(pilots.a.column(0), &y).unwrap();
        for n in 0..3 {
            assert!((e[n] - x[[0, n]]).norm() < 1e-12);
        }
    }

    #[test]
    fn greedy_estimator_reference_points() {
        let h_bar = Complex64::new(0.3, -0.2);
        // Observation equal to the mean with no noise reads exactly zero.
        let clean = greedy_variance_estimator(&[h_bar], h_bar, 0.0);
        assert_eq!(clean, vec![0.0]);
        // A quiet port under nonzero psi goes negative and stays negative.
        let quiet = greedy_variance_estimator(&[h_bar], h_bar, 5e-6);
        assert_eq!(quiet, vec![-5e-6]);
        let mixed = greedy_variance_estimator(
            &[h_bar + Complex64::new(2e-3, 0.0), h_bar],
            h_bar,
            1e-6,
        );
        assert!((mixed[0] - (4e-6 - 1e-6)).abs() < 1e-18);
        assert_eq!(mixed[1], -1e-6);
    }

    #[test]
    fn greedy_estimator_mse_sits_on_the_floor() {
        // A port observation deviates from the mean by the fading plus the
        // equalized noise, together circular Gaussian with power lsfc + psi.
        // The squared magnitude is then exponential, so the estimator's mean
        // squared error is exactly (lsfc + psi)^2, independent of how far
        // psi falls.
        use rand::rngs::StdRng;
        use rand::SeedableRng;
        let lsfc = 1e-4_f64;
        let psi = 5e-6_f64;
        let h_bar = Complex64::new(0.7, 0.4);
        let scale = (lsfc + psi).sqrt();
        let mut rng = StdRng::seed_from_u64(42);
        let draws = 10_000;
        let mut mse = 0.0;
        for _ in 0..draws {
            let y = h_bar + scale * scene::complex_gaussian(&mut rng);
            let est = greedy_variance_estimator(&[y], h_bar, psi);
            mse += (est[0] - lsfc).powi(2);
        }
        mse /= draws as f64;
        let (floor, _) = greedy_floor_mse(lsfc, lsfc, psi);
        assert!(
            (mse - floor).abs() < 0.10 * floor,
            "mse {mse} vs floor {floor}"
        );
    }

    #[test]
    fn ls_noise_load_matches_closed_forms() {
        let cfg = SceneConfig {
            n_o: 16,
            l_s: 3,
            ..SceneConfig::default()
        };
        let psi = 2e-4;
        let load = ls_noise_load(&cfg, psi, 4000, 11).unwrap();
        assert!((load.full_closed - 16.0 * psi).abs() < 1e-18);
        assert!((load.angular_closed - 3.0 * psi).abs() < 1e-18);
        assert!(
            (load.full_mc - load.full_closed).abs() < 0.05 * load.full_closed,
            "full {} vs {}",
            load.full_mc,
            load.full_closed
        );
        assert!(
            (load.angular_mc - load.angular_closed).abs() < 0.10 * load.angular_closed,
            "angular {} vs {}",
            load.angular_mc,
            load.angular_closed
        );
    }

    #[test]
    fn full_span_projection_keeps_everything() {
        // With l_s = n_o the span covers all ports, the projection is the
        // identity, and both quadratic forms measure the same energy.
        let cfg = SceneConfig {
            n_o: 4,
            m: 4,
            l_s: 4,
            ..SceneConfig::default()
        };
        let u = draw_full_rank_steering_rows(&cfg, 4, 5).unwrap();
        let pilots = scene::generate_pilots(16, 1, 6);
        let load = ls_mse_pair(pilots.a.column(0), &u, 1e-3, 500, 77).unwrap();
        assert!(
            (load.full_mc - load.angular_mc).abs() < 1e-10 * load.full_mc,
            "full {} vs angular {}",
            load.full_mc,
            load.angular_mc
        );
    }

    #[test]
    fn collinear_span_is_rejected() {
        let cfg = SceneConfig {
            n_o: 4,
            m: 4,
            ..SceneConfig::default()
        };
        let aperture = cfg.aperture();
        let v = scene::steering_vector(1.2, 4, aperture, cfg.lambda_len);
        let mut u = Array2::<Complex64>::zeros((2, 4));
        for n in 0..4 {
            u[[0, n]] = v[n];
            u[[1, n]] = v[n] * Complex64::new(0.5, 0.5);
        }
        let pilots = scene::generate_pilots(16, 1, 6);
        assert!(ls_mse_pair(pilots.a.column(0), &u, 1e-3, 10, 1).is_err());
    }

    #[test]
    fn per_user_variances_reads_first_port() {
        let mut phi = Array2::<f64>::zeros((3, 2));
        phi[[0, 0]] = 0.1;
        phi[[1, 0]] = 0.2;
        phi[[2, 0]] = 0.3;
        assert_eq!(per_user_variances(&phi), vec![0.1, 0.2, 0.3]);
    }

    proptest! {
        #[test]
        fn top_k_is_permutation_equivariant(
            scores in proptest::collection::vec(0.0f64..1.0, 4..40),
            k_a in 1usize..4,
            seed in 0u64..1000,
        ) {
            let k = scores.len();
            let k_a = k_a.min(k);
            let mut perm: Vec<usize> = (0..k).collect();
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            for i in (1..k).rev() {
                perm.swap(i, rng.gen_range(0..=i));
            }
            let mut shuffled = vec![0.0; k];
            for (new_pos, &old_pos) in perm.iter().enumerate() {
                shuffled[new_pos] = scores[old_pos];
            }
            let base = top_k(&scores, k_a);
            let moved = top_k(&shuffled, k_a);
            let mut mapped: Vec<usize> = moved.iter().map(|&i| perm[i]).collect();
            mapped.sort_unstable();
            let base_scores: Vec<f64> = base.iter().map(|&i| scores[i]).collect();
            let mapped_scores: Vec<f64> = mapped.iter().map(|&i| scores[i]).collect();
            let mut sorted_base = base_scores.clone();
            let mut sorted_mapped = mapped_scores.clone();
            sorted_base.sort_by(f64::total_cmp);
            sorted_mapped.sort_by(f64::total_cmp);
            prop_assert_eq!(sorted_base, sorted_mapped);
        }

        #[test]
        fn ade_stays_in_the_unit_interval(
            truth in proptest::collection::btree_set(0usize..30, 1..8),
            guess in proptest::collection::btree_set(0usize..30, 1..8),
        ) {
            let truth: Vec<usize> = truth.into_iter().collect();
            let guess: Vec<usize> = guess.into_iter().collect();
            let k_a = truth.len().max(guess.len());
            let v = ade(&truth, &guess, k_a);
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
