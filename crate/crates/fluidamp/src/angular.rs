//! Angular-domain machinery: the steering codebook, orthogonal matching
//! pursuit over it, and the greedy simultaneous-pursuit baseline over the
//! pilot codebook.
//!
//! A user's channel across the activated ports is a short sum of steering
//! vectors, so a row estimate can be re-expressed on a dense angular grid
//! with very few atoms.  Projecting onto that span keeps the structured part
//! of the estimate and discards most of the isotropic estimation noise.

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{lstsq_min_norm, matmul, RANK_RTOL};
use crate::scene::{steering_vector, SceneConfig};

/// Dense grid of unit-norm steering vectors, one column per candidate angle.
#[derive(Debug, Clone)]
pub struct SteeringCodebook {
    /// Atoms, `n_o x n_s`.
    pub w: Array2<Complex64>,
    /// Grid angles in degrees, ascending.
    pub angles_deg: Vec<f64>,
}

/// Builds the angular codebook for the scene geometry with `n_s` grid
/// points spanning the azimuth window, endpoints included.
pub fn build_codebook(cfg: &SceneConfig, n_s: usize) -> Result<SteeringCodebook> {
    if n_s == 0 {
        return Err(Error::Config("codebook needs at least one angle".into()));
    }
    let aperture = cfg.aperture();
    let mut w = Array2::<Complex64>::zeros((cfg.n_o, n_s));
    let mut angles_deg = Vec::with_capacity(n_s);
    for i in 0..n_s {
        let theta_deg = if n_s == 1 {
            cfg.theta_min
        } else {
            cfg.theta_min + (cfg.theta_max - cfg.theta_min) * i as f64 / (n_s - 1) as f64
        };
        angles_deg.push(theta_deg);
        let v = steering_vector(theta_deg.to_radians(), cfg.n_o, aperture, cfg.lambda_len);
        for n in 0..cfg.n_o {
            w[[n, i]] = v[n];
        }
    }
    Ok(SteeringCodebook { w, angles_deg })
}

/// Sparse angular representation of one row: selected grid indices and their
/// complex gains, in selection order.
#[derive(Debug, Clone)]
pub struct SparseGains {
    pub support: Vec<usize>,
    pub gains: Vec<Complex64>,
}

/// Orthogonal matching pursuit of `row` against the codebook.
///
/// Greedily picks the most correlated unused atom, re-solves the gains by
/// least squares on the whole selection, and subtracts the projection.  An
/// atom that would make the selection rank deficient is discarded and never
/// tried again.  Selection stops at `max_atoms`, when the residual
/// correlation vanishes, or when the optional absolute residual-norm
/// threshold is crossed.  A zero row refines to zero.
pub fn omp_refine(
    row: ArrayView1<'_, Complex64>,
    cb: &SteeringCodebook,
    max_atoms: usize,
    residual_stop: Option<f64>,
    ops: &mut u64,
) -> Result<(Array1<Complex64>, SparseGains)> {
    let n_o = cb.w.nrows();
    let n_s = cb.w.ncols();
    if row.len() != n_o {
        return Err(Error::Dimension(format!(
            "row has {} entries but atoms have {n_o}",
            row.len()
        )));
    }

    let mut target = Array2::<Complex64>::zeros((n_o, 1));
    for n in 0..n_o {
        target[[n, 0]] = row[n];
    }
    let row_norm = target.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();

    let mut refined = Array1::<Complex64>::zeros(n_o);
    let mut gains = SparseGains {
        support: Vec::new(),
        gains: Vec::new(),
    };
    if row_norm == 0.0 || max_atoms == 0 {
        return Ok((refined, gains));
    }

    let mut residual = target.clone();
    let mut excluded = vec![false; n_s];

    while gains.support.len() < max_atoms {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n_s {
            if excluded[i] {
                continue;
            }
            let mut corr = Complex64::new(0.0, 0.0);
            for n in 0..n_o {
                corr += cb.w[[n, i]].conj() * residual[[n, 0]];
            }
            let val = corr.norm();
            if best.map_or(true, |(_, b)| val > b) {
                best = Some((i, val));
            }
        }
        *ops += (n_s * n_o) as u64;
        let Some((atom, peak)) = best else { break };
        if peak <= 1e-12 * row_norm {
            break;
        }

        gains.support.push(atom);
        excluded[atom] = true;
        let mut basis = Array2::<Complex64>::zeros((n_o, gains.support.len()));
        for (j, &s) in gains.support.iter().enumerate() {
            for n in 0..n_o {
                basis[[n, j]] = cb.w[[n, s]];
            }
        }
        let sol = lstsq_min_norm(&basis, &target, RANK_RTOL, ops)?;
        if sol.rank < gains.support.len() {
            gains.support.pop();
            continue;
        }

        let projected = matmul(&basis, &sol.x, ops);
        for n in 0..n_o {
            residual[[n, 0]] = target[[n, 0]] - projected[[n, 0]];
            refined[n] = projected[[n, 0]];
        }
        gains.gains = sol.x.column(0).to_vec();

        if let Some(stop) = residual_stop {
            let rnorm = residual.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            if rnorm <= stop {
                break;
            }
        }
    }

    Ok((refined, gains))
}

/// Least-squares fit of `row` onto a fixed set of codebook atoms, returning
/// the projected row and the gains.
pub fn project_onto_support(
    row: ArrayView1<'_, Complex64>,
    cb: &SteeringCodebook,
    support: &[usize],
    ops: &mut u64,
) -> Result<(Array1<Complex64>, Vec<Complex64>)> {
    let n_o = cb.w.nrows();
    if row.len() != n_o {
        return Err(Error::Dimension(format!(
            "row has {} entries but atoms have {n_o}",
            row.len()
        )));
    }
    if support.is_empty() {
        return Ok((Array1::zeros(n_o), Vec::new()));
    }
    let mut basis = Array2::<Complex64>::zeros((n_o, support.len()));
    for (j, &s) in support.iter().enumerate() {
        for n in 0..n_o {
            basis[[n, j]] = cb.w[[n, s]];
        }
    }
    let mut target = Array2::<Complex64>::zeros((n_o, 1));
    for n in 0..n_o {
        target[[n, 0]] = row[n];
    }
    let (coeffs, projected, _) = crate::linalg::project_onto_span(&basis, &target, RANK_RTOL, ops)?;
    let mut refined = Array1::<Complex64>::zeros(n_o);
    for n in 0..n_o {
        refined[n] = projected[[n, 0]];
    }
    Ok((refined, coeffs.column(0).to_vec()))
}

/// Outcome of the greedy baseline.
#[derive(Debug, Clone)]
pub struct SompResult {
    /// Detected user indices, ascending.
    pub support: Vec<usize>,
    /// Least-squares channel estimate scattered into the full `k x n_o`
    /// matrix, zero off the detected support.
    pub x_hat: Array2<Complex64>,
    /// Whether any intermediate selection was rank deficient.
    pub rank_deficient: bool,
}

/// Simultaneous orthogonal matching pursuit with a joint least-squares
/// re-solve: detects `k_a` users from the received block and estimates their
/// channel rows.
///
/// Each round scores every unused pilot by the norm of its correlation with
/// the current residual, normalized by the pilot norm, picks the best
/// (lowest index on ties), refits all selected rows jointly, and rebuilds
/// the residual from the original observation.
pub fn somp(
    y: &Array2<Complex64>,
    c: &Array2<Complex64>,
    k_a: usize,
    ops: &mut u64,
) -> Result<SompResult> {
    let (g, k) = c.dim();
    let (gy, n_o) = y.dim();
    if gy != g {
        return Err(Error::Dimension(format!(
            "received block has {gy} rows but pilots have {g}"
        )));
    }
    if k_a == 0 || k_a > k {
        return Err(Error::Config(format!(
            "detector needs 0 < k_a <= {k}, got {k_a}"
        )));
    }

    let col_norms: Vec<f64> = (0..k)
        .map(|i| {
            (0..g)
                .map(|r| c[[r, i]].norm_sqr())
                .sum::<f64>()
                .sqrt()
                .max(1e-300)
        })
        .collect();
    *ops += (g * k) as u64;

    let mut residual = y.clone();
    let mut selected = vec![false; k];
    let mut support: Vec<usize> = Vec::with_capacity(k_a);
    let mut rank_deficient = false;
    let mut coeffs = Array2::<Complex64>::zeros((0, n_o));

    for _ in 0..k_a {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..k {
            if selected[i] {
                continue;
            }
            let mut score = 0.0;
            for n in 0..n_o {
                let mut corr = Complex64::new(0.0, 0.0);
                for r in 0..g {
                    corr += c[[r, i]].conj() * residual[[r, n]];
                }
                score += corr.norm_sqr();
            }
            let val = score.sqrt() / col_norms[i];
            if best.map_or(true, |(_, b)| val > b) {
                best = Some((i, val));
            }
        }
        *ops += ((k - support.len()) * g * n_o) as u64;
        let (atom, _) = best.expect("k_a <= k leaves an unselected pilot");
        selected[atom] = true;
        support.push(atom);

        let mut basis = Array2::<Complex64>::zeros((g, support.len()));
        for (j, &s) in support.iter().enumerate() {
            for r in 0..g {
                basis[[r, j]] = c[[r, s]];
            }
        }
        let sol = lstsq_min_norm(&basis, y, RANK_RTOL, ops)?;
        if sol.rank < support.len() {
            rank_deficient = true;
        }
        let fitted = matmul(&basis, &sol.x, ops);
        for r in 0..g {
            for n in 0..n_o {
                residual[[r, n]] = y[[r, n]] - fitted[[r, n]];
            }
        }
        *ops += (g * n_o) as u64;
        coeffs = sol.x;
    }

    let mut x_hat = Array2::<Complex64>::zeros((k, n_o));
    for (j, &s) in support.iter().enumerate() {
        for n in 0..n_o {
            x_hat[[s, n]] = coeffs[[j, n]];
        }
    }
    support.sort_unstable();

    Ok(SompResult {
        support,
        x_hat,
        rank_deficient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    // Critically sampled geometry: activating every port of an m = n_o grid
    // puts the port spacing at half a wavelength, so each angle maps to a
    // unique array response and recovery tests can pin exact indices.
    fn small_cfg(n_o: usize) -> SceneConfig {
        SceneConfig {
            n_o,
            m: n_o,
            ..SceneConfig::default()
        }
    }

    #[test]
    fn sparse_port_grids_alias_distant_angles() {
        // The default geometry spreads 16 activated ports over a 64-port
        // aperture, spacing them far beyond half a wavelength.  Angles whose
        // spatial frequencies differ by an integer then produce nearly
        // identical responses, so support indices are not identifiable even
        // though the spanned subspace is.
        let cfg = SceneConfig {
            n_o: 16,
            m: 64,
            ..SceneConfig::default()
        };
        let cb = build_codebook(&cfg, 121).unwrap();
        let mut corr = Complex64::new(0.0, 0.0);
        for n in 0..16 {
            corr += cb.w[[n, 20]].conj() * cb.w[[n, 78]];
        }
        assert!(
            corr.norm() > 0.99,
            "expected aliased atoms, correlation {}",
            corr.norm()
        );
    }

    #[test]
    fn codebook_grid_covers_window_with_unit_atoms() {
        let cfg = small_cfg(16);
        let cb = build_codebook(&cfg, 121).unwrap();
        assert_eq!(cb.w.dim(), (16, 121));
        assert!((cb.angles_deg[0] - 30.0).abs() < 1e-12);
        assert!((cb.angles_deg[120] - 150.0).abs() < 1e-12);
        assert!((cb.angles_deg[60] - 90.0).abs() < 1e-12);
        for i in 0..121 {
            let norm: f64 = (0..16).map(|n| cb.w[[n, i]].norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_codebook_sizes() {
        let cfg = small_cfg(4);
        assert!(build_codebook(&cfg, 0).is_err());
        let single = build_codebook(&cfg, 1).unwrap();
        assert_eq!(single.angles_deg, vec![30.0]);
    }

    #[test]
    fn single_atom_row_is_recovered_exactly() {
        let cfg = small_cfg(16);
        let cb = build_codebook(&cfg, 121).unwrap();
        let gain = Complex64::new(0.8, -1.1);
        let row: Array1<Complex64> = cb.w.column(37).mapv(|v| v * gain);
        let mut ops = 0;
        let (refined, sg) = omp_refine(row.view(), &cb, 3, None, &mut ops).unwrap();
        assert_eq!(sg.support, vec![37]);
        assert!((sg.gains[0] - gain).norm() < 1e-12);
        for n in 0..16 {
            assert!((refined[n] - row[n]).norm() < 1e-12);
        }
        assert!(ops > 0);
    }

    #[test]
    fn well_separated_pair_is_recovered() {
        let cfg = small_cfg(16);
        let cb = build_codebook(&cfg, 121).unwrap();
        let g0 = Complex64::new(1.0, 0.3);
        let g1 = Complex64::new(-0.4, 0.9);
        let row: Array1<Complex64> =
            cb.w.column(20).mapv(|v| v * g0) + cb.w.column(95).mapv(|v| v * g1);
        let mut ops = 0;
        let (refined, sg) = omp_refine(row.view(), &cb, 3, None, &mut ops).unwrap();
        let mut found = sg.support.clone();
        found.sort_unstable();
        assert_eq!(found, vec![20, 95]);
        let err: f64 = (0..16).map(|n| (refined[n] - row[n]).norm_sqr()).sum();
        assert!(err < 1e-20, "residual energy {err}");
    }

    #[test]
    fn zero_row_refines_to_zero() {
        let cfg = small_cfg(8);
        let cb = build_codebook(&cfg, 41).unwrap();
        let row = Array1::<Complex64>::zeros(8);
        let mut ops = 0;
        let (refined, sg) = omp_refine(row.view(), &cb, 3, None, &mut ops).unwrap();
        assert!(sg.support.is_empty());
        assert!(refined.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn refinement_never_grows_energy() {
        let cfg = small_cfg(16);
        let cb = build_codebook(&cfg, 121).unwrap();
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..200 {
            let row = Array1::from_shape_fn(16, |_| scene::complex_gaussian(&mut rng));
            let mut ops = 0;
            let (refined, _) = omp_refine(row.view(), &cb, 3, None, &mut ops).unwrap();
            let out: f64 = refined.iter().map(|v| v.norm_sqr()).sum();
            let inp: f64 = row.iter().map(|v| v.norm_sqr()).sum();
            assert!(out <= inp * (1.0 + 1e-12), "projection grew energy");
        }
    }

    #[test]
    fn exactly_sparse_rows_are_fixed_points() {
        let cfg = small_cfg(16);
        let cb = build_codebook(&cfg, 121).unwrap();
        let row: Array1<Complex64> = cb.w.column(20).mapv(|v| v * Complex64::new(1.0, 0.3))
            + cb.w.column(95).mapv(|v| v * Complex64::new(-0.4, 0.9));
        let mut ops = 0;
        let (once, _) = omp_refine(row.view(), &cb, 3, None, &mut ops).unwrap();
        let (twice, _) = omp_refine(once.view(), &cb, 3, None, &mut ops).unwrap();
        let diff: f64 = (0..16).map(|n| (once[n] - twice[n]).norm_sqr()).sum();
        assert!(diff < 1e-20, "diff {diff}");
    }

    #[test]
    fn residual_is_orthogonal_to_selected_atoms() {
        let cfg = small_cfg(16);
        let cb = build_codebook(&cfg, 121).unwrap();
        let mut rng = StdRng::seed_from_u64(9);
        let row = Array1::from_shape_fn(16, |_| scene::complex_gaussian(&mut rng));
        let mut ops = 0;
        let (refined, sg) = omp_refine(row.view(), &cb, 3, None, &mut ops).unwrap();
        for &s in &sg.support {
            let mut corr = Complex64::new(0.0, 0.0);
            for n in 0..16 {
                corr += cb.w[[n, s]].conj() * (row[n] - refined[n]);
            }
            assert!(corr.norm() < 1e-10, "atom {s} correlation {}", corr.norm());
        }
    }

    #[test]
    fn duplicate_atoms_are_skipped_without_aborting() {
        let cfg = small_cfg(8);
        let base = build_codebook(&cfg, 11).unwrap();
        // Duplicate every column so a second pick of the same direction
        // would always be rank deficient.
        let mut w = Array2::<Complex64>::zeros((8, 22));
        let mut angles = Vec::new();
        for i in 0..11 {
            for copy in 0..2 {
                for n in 0..8 {
                    w[[n, 2 * i + copy]] = base.w[[n, i]];
                }
                angles.push(base.angles_deg[i]);
            }
        }
        let cb = SteeringCodebook {
            w,
            angles_deg: angles,
        };
        let row: Array1<Complex64> = cb.w.column(6).mapv(|v| v * Complex64::new(2.0, 0.5));
        let mut ops = 0;
        let (refined, sg) = omp_refine(row.view(), &cb, 4, None, &mut ops).unwrap();
        assert_eq!(sg.support.len(), 1);
        let err: f64 = (0..8).map(|n| (refined[n] - row[n]).norm_sqr()).sum();
        assert!(err < 1e-20);
    }

    #[test]
    fn residual_stop_halts_selection_early() {
        let cfg = small_cfg(16);
        let cb = build_codebook(&cfg, 121).unwrap();
        let mut rng = StdRng::seed_from_u64(11);
        let row = Array1::from_shape_fn(16, |_| scene::complex_gaussian(&mut rng));
        let norm: f64 = row.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let mut ops = 0;
        let (_, unconstrained) = omp_refine(row.view(), &cb, 5, None, &mut ops).unwrap();
        let (_, stopped) = omp_refine(row.view(), &cb, 5, Some(norm * 2.0), &mut ops).unwrap();
        assert_eq!(stopped.support.len(), 1);
        assert!(unconstrained.support.len() > 1);
    }

    #[test]
    fn fixed_support_projection_keeps_a_small_noise_fraction() {
        // Isotropic noise projected onto a fixed 3-atom span keeps on
        // average 3/16 of its energy.  The support is held fixed so the
        // ratio is the subspace dimension over the port count, not an
        // order statistic of the greedy search.
        let cfg = small_cfg(16);
        let cb = build_codebook(&cfg, 121).unwrap();
        let support = [10usize, 60, 110];
        let mut rng = StdRng::seed_from_u64(21);
        let mut kept = 0.0;
        let mut total = 0.0;
        let trials = 4000;
        for _ in 0..trials {
            let z = Array1::from_shape_fn(16, |_| scene::complex_gaussian(&mut rng));
            let mut ops = 0;
            let (proj, _) = project_onto_support(z.view(), &cb, &support, &mut ops).unwrap();
            kept += proj.iter().map(|v| v.norm_sqr()).sum::<f64>();
            total += z.iter().map(|v| v.norm_sqr()).sum::<f64>();
        }
        let ratio = kept / total;
        let want = 3.0 / 16.0;
        assert!(
            (ratio - want).abs() < 0.08 * want,
            "kept fraction {ratio}, expected about {want}"
        );
    }

    #[test]
    fn somp_recovers_exact_support_on_orthogonal_pilots() {
        let g = 16;
        let k = 16;
        // Identity pilots: correlations read the rows directly.
        let mut c = Array2::<Complex64>::zeros((g, k));
        for i in 0..k {
            c[[i, i]] = Complex64::new(1.0, 0.0);
        }
        let mut x = Array2::<Complex64>::zeros((k, 2));
        x[[3, 0]] = Complex64::new(2.0, 0.0);
        x[[3, 1]] = Complex64::new(0.0, -1.0);
        x[[11, 0]] = Complex64::new(-0.5, 0.5);
        x[[11, 1]] = Complex64::new(1.5, 0.0);
        let mut ops = 0;
        let y = matmul(&c, &x, &mut ops);
        let out = somp(&y, &c, 2, &mut ops).unwrap();
        assert_eq!(out.support, vec![3, 11]);
        assert!(!out.rank_deficient);
        for ki in 0..k {
            for n in 0..2 {
                assert!((out.x_hat[[ki, n]] - x[[ki, n]]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn somp_matches_independent_scalar_pursuit_when_single_port() {
        // For one activated port the residual is a plain vector, so an
        // independently coded scalar matching pursuit with a pseudoinverse
        // refit must pick the same supports.
        use nalgebra::DMatrix as NaMatrix;
        fn scalar_omp(
            y: &Array2<Complex64>,
            c: &Array2<Complex64>,
            k_a: usize,
        ) -> Vec<usize> {
            let (g, k) = c.dim();
            let mut support: Vec<usize> = Vec::new();
            let mut residual: Vec<Complex64> = (0..g).map(|r| y[[r, 0]]).collect();
            for _ in 0..k_a {
                let mut best = usize::MAX;
                let mut best_val = -1.0;
                for i in 0..k {
                    if support.contains(&i) {
                        continue;
                    }
                    let mut corr = Complex64::new(0.0, 0.0);
                    let mut norm = 0.0;
                    for r in 0..g {
                        corr += c[[r, i]].conj() * residual[r];
                        norm += c[[r, i]].norm_sqr();
                    }
                    let val = corr.norm() / norm.sqrt();
                    if val > best_val {
                        best_val = val;
                        best = i;
                    }
                }
                support.push(best);
                let phi = NaMatrix::from_fn(g, support.len(), |r, j| c[[r, support[j]]]);
                let rhs = NaMatrix::from_fn(g, 1, |r, _| y[[r, 0]]);
                let coef = phi
                    .clone()
                    .svd(true, true)
                    .solve(&rhs, 1e-12)
                    .expect("svd solve");
                let fit = phi * coef;
                for r in 0..g {
                    residual[r] = y[[r, 0]] - fit[(r, 0)];
                }
            }
            support.sort_unstable();
            support
        }

        for seed in 0..50u64 {
            let cfg = SceneConfig {
                k: 24,
                k_a: 4,
                g: 16,
                n_o: 1,
                seed,
                ..SceneConfig::default()
            };
            let sc = scene::sample_scene(&cfg).unwrap();
            let pilots = scene::generate_pilots(cfg.g, cfg.k, seed + 500);
            let y = scene::synthesize_received(&pilots.a, &sc.x, sc.psi, seed + 900).unwrap();
            let mut ops = 0;
            let joint = somp(&y, &pilots.a, cfg.k_a, &mut ops).unwrap();
            let scalar = scalar_omp(&y, &pilots.a, cfg.k_a);
            assert_eq!(joint.support, scalar, "seed {seed}");
        }
    }

    #[test]
    fn somp_flags_rank_deficiency() {
        let g = 4;
        let k = 6;
        let mut rng = StdRng::seed_from_u64(2);
        let mut c = Array2::<Complex64>::zeros((g, k));
        for r in 0..g {
            let v = scene::complex_gaussian(&mut rng);
            // Two identical columns plus fillers.
            c[[r, 0]] = v;
            c[[r, 1]] = v;
            for i in 2..k {
                c[[r, i]] = scene::complex_gaussian(&mut rng);
            }
        }
        let mut x = Array2::<Complex64>::zeros((k, 1));
        x[[0, 0]] = Complex64::new(3.0, 0.0);
        let mut ops = 0;
        let y = matmul(&c, &x, &mut ops);
        let out = somp(&y, &c, 2, &mut ops).unwrap();
        assert!(out.rank_deficient);
        assert_eq!(out.support.len(), 2);
    }

    #[test]
    fn somp_rejects_bad_arguments() {
        let c = scene::generate_pilots(8, 10, 1).a;
        let y = Array2::<Complex64>::zeros((8, 2));
        let mut ops = 0;
        assert!(somp(&y, &c, 0, &mut ops).is_err());
        assert!(somp(&y, &c, 11, &mut ops).is_err());
        let y_bad = Array2::<Complex64>::zeros((7, 2));
        assert!(somp(&y_bad, &c, 2, &mut ops).is_err());
    }

    #[test]
    fn somp_all_zero_observation_still_returns_k_a_users() {
        let c = scene::generate_pilots(8, 10, 4).a;
        let y = Array2::<Complex64>::zeros((8, 2));
        let mut ops = 0;
        let out = somp(&y, &c, 3, &mut ops).unwrap();
        assert_eq!(out.support.len(), 3);
        assert_eq!(out.support, vec![0, 1, 2]);
    }

    #[test]
    fn omp_ops_counter_scales_with_codebook() {
        let cfg = small_cfg(16);
        let small = build_codebook(&cfg, 31).unwrap();
        let large = build_codebook(&cfg, 121).unwrap();
        let mut rng = StdRng::seed_from_u64(5);
        let row = Array1::from_shape_fn(16, |_| scene::complex_gaussian(&mut rng));
        let mut ops_small = 0;
        let mut ops_large = 0;
        omp_refine(row.view(), &small, 3, None, &mut ops_small).unwrap();
        omp_refine(row.view(), &large, 3, None, &mut ops_large).unwrap();
        assert!(ops_large > ops_small);
    }
}
