//! Slow, independent cross-checks of the scalar denoiser.
//!
//! The posterior moments have closed forms, and every one of them is also a
//! low-dimensional integral.  This module evaluates those integrals with
//! adaptive Simpson quadrature over the complex plane, sharing no
//! arithmetic with the closed forms beyond the log-density of a Gaussian,
//! and reports the worst relative deviation over a randomized family of
//! prior and pseudo-measurement settings.
//!
//! The continuous component of the spike-and-slab posterior is what gets
//! integrated; the spike's mass is a single density evaluation and is folded
//! in exactly.  All densities are scaled by a shared log offset taken at the
//! two means, which bounds the integrand by a modest constant for any
//! variance ratio, so nothing overflows.

use std::cell::Cell;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand::SeedableRng;

use crate::bg::{self, BgPoint, VarianceMode};

/// Hard ceiling on integrand evaluations per posterior, shared between the
/// two axes.
const EVAL_BUDGET: i64 = 5_000_000;
/// Deepest interval split allowed.
const MAX_DEPTH: u32 = 30;
/// Absolute floor inside relative deviations, so quantities that are zero in
/// both implementations compare clean.
const DEV_FLOOR: f64 = 1e-12;

/// One randomized denoiser setting.
#[derive(Debug, Clone, Copy)]
pub struct QuadDraw {
    pub lambda: f64,
    pub mu_x: Complex64,
    pub phi_x: f64,
    pub mu_hat: Complex64,
    pub phi_hat: f64,
}

/// Posterior summary produced by quadrature.
#[derive(Debug, Clone, Copy)]
pub struct QuadPosterior {
    pub pi: f64,
    pub x_tilde: Complex64,
    pub phi_tilde: f64,
    /// Activity-weighted second moment of the continuous branch about the
    /// prior mean.
    pub v: f64,
}

/// Real Gaussian log-density.
fn log_normal(t: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (t - mean) * (t - mean) / (2.0 * var)
}

/// Circular complex Gaussian log-density.
fn log_cn(z: Complex64, v: f64) -> f64 {
    -(std::f64::consts::PI * v).ln() - z.norm_sqr() / v
}

/// Simpson estimate of one segment for a vector integrand.
fn simpson_seg<const NC: usize>(h: f64, fa: [f64; NC], fm: [f64; NC], fb: [f64; NC]) -> [f64; NC] {
    let mut out = [0.0; NC];
    for c in 0..NC {
        out[c] = h / 6.0 * (fa[c] + 4.0 * fm[c] + fb[c]);
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn refine<F, const NC: usize>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: [f64; NC],
    fm: [f64; NC],
    fb: [f64; NC],
    whole: [f64; NC],
    scale: &[f64; NC],
    rtol: f64,
    depth: u32,
    budget: &Cell<i64>,
) -> [f64; NC]
where
    F: FnMut(f64) -> [f64; NC],
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    budget.set(budget.get() - 2);
    let left = simpson_seg(m - a, fa, flm, fm);
    let right = simpson_seg(b - m, fm, frm, fb);

    let mut acceptable = true;
    for c in 0..NC {
        let err = (left[c] + right[c] - whole[c]).abs();
        if err > 15.0 * rtol * scale[c] {
            acceptable = false;
            break;
        }
    }
    if acceptable || depth == 0 || budget.get() <= 0 {
        let mut out = [0.0; NC];
        for c in 0..NC {
            let better = left[c] + right[c];
            out[c] = better + (better - whole[c]) / 15.0;
        }
        return out;
    }

    // Children run at half the tolerance so the accepted-leaf errors sum to
    // the parent's allowance.
    let half = 0.5 * rtol;
    let l = refine(f, a, m, fa, flm, fm, left, scale, half, depth - 1, budget);
    let r = refine(f, m, b, fm, frm, fb, right, scale, half, depth - 1, budget);
    let mut out = [0.0; NC];
    for c in 0..NC {
        out[c] = l[c] + r[c];
    }
    out
}

/// Adaptive Simpson integration of a vector integrand over the segments
/// defined by `knots`.  A coarse composite pass fixes the per-component
/// error scale, then each segment is refined until the scaled tolerance or
/// the budget is met.
fn integrate_adaptive<F, const NC: usize>(
    f: &mut F,
    knots: &[f64],
    rtol: f64,
    budget: &Cell<i64>,
) -> [f64; NC]
where
    F: FnMut(f64) -> [f64; NC],
{
    assert!(knots.len() >= 2);
    let segs = knots.len() - 1;
    let mut ends: Vec<[f64; NC]> = Vec::with_capacity(segs + 1);
    for &x in knots {
        ends.push(f(x));
    }
    let mut mids: Vec<[f64; NC]> = Vec::with_capacity(segs);
    let mut coarse: Vec<[f64; NC]> = Vec::with_capacity(segs);
    budget.set(budget.get() - knots.len() as i64);
    let mut scale = [0.0; NC];
    for s in 0..segs {
        let m = 0.5 * (knots[s] + knots[s + 1]);
        let fm = f(m);
        budget.set(budget.get() - 1);
        let est = simpson_seg(knots[s + 1] - knots[s], ends[s], fm, ends[s + 1]);
        for c in 0..NC {
            scale[c] += est[c].abs();
        }
        mids.push(fm);
        coarse.push(est);
    }
    for c in &mut scale {
        *c = c.max(1e-308);
    }

    let mut total = [0.0; NC];
    for s in 0..segs {
        let part = refine(
            f,
            knots[s],
            knots[s + 1],
            ends[s],
            mids[s],
            ends[s + 1],
            coarse[s],
            &scale,
            rtol,
            MAX_DEPTH,
            budget,
        );
        for c in 0..NC {
            total[c] += part[c];
        }
    }
    total
}

/// Axis knots bracketing two Gaussian factors: each center contributes
/// points at 0, 1, 3, and 10 of its own per-axis standard deviation.
fn axis_knots(c1: f64, sd1: f64, c2: f64, sd2: f64) -> Vec<f64> {
    let mut knots = Vec::with_capacity(14);
    for (c, sd) in [(c1, sd1), (c2, sd2)] {
        for m in [-10.0, -3.0, -1.0, 0.0, 1.0, 3.0, 10.0] {
            knots.push(c + m * sd);
        }
    }
    knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let span = (knots[knots.len() - 1] - knots[0]).max(1e-300);
    let mut dedup: Vec<f64> = Vec::with_capacity(knots.len());
    for k in knots {
        if dedup.last().map_or(true, |&l| k - l > 1e-12 * span) {
            dedup.push(k);
        }
    }
    if dedup.len() < 2 {
        let k = dedup[0];
        dedup = vec![k - 1.0, k + 1.0];
    }
    dedup
}

/// Numerically safe logistic function.
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Posterior moments of one coefficient by two-axis adaptive quadrature of
/// the continuous branch, with the spike folded in analytically.
///
/// Two passes keep every integrand positive and subtraction-free: the first
/// integrates mass and mean, the second integrates squared distances from
/// the estimated mean and from the prior mean.  Assembling the variance
/// from a raw second moment would cancel catastrophically whenever the mean
/// sits many standard deviations from the origin.
pub fn posterior_by_quadrature(d: &QuadDraw, rtol: f64) -> QuadPosterior {
    let phi = d.phi_x;
    let phi_hat = d.phi_hat;
    // Shared log offset, exact at whichever mean carries the higher joint
    // density; the overshoot of the true maximum over this offset is at
    // most |mu_x - mu_hat|^2 / (phi + phi_hat).
    let log_joint =
        |x: Complex64| log_cn(x - d.mu_x, phi) + log_cn(x - d.mu_hat, phi_hat);
    let offset = log_joint(d.mu_x).max(log_joint(d.mu_hat));

    let knots_u = axis_knots(
        d.mu_x.re,
        (phi / 2.0).sqrt(),
        d.mu_hat.re,
        (phi_hat / 2.0).sqrt(),
    );
    let knots_v = axis_knots(
        d.mu_x.im,
        (phi / 2.0).sqrt(),
        d.mu_hat.im,
        (phi_hat / 2.0).sqrt(),
    );

    // Pass one: mass and mean of the continuous branch.
    let budget = Cell::new(EVAL_BUDGET);
    let mut outer_mean = |u: f64| -> [f64; 3] {
        let mut inner = |v: f64| -> [f64; 2] {
            let w = (log_joint(Complex64::new(u, v)) - offset).exp();
            [w, v * w]
        };
        let [i0, iv] = integrate_adaptive(&mut inner, &knots_v, rtol, &budget);
        [i0, u * i0, iv]
    };
    let [t0, tu, tv] = integrate_adaptive(&mut outer_mean, &knots_u, rtol, &budget);
    let slab_mean = Complex64::new(tu / t0, tv / t0);

    // Pass two: squared distances from the estimated slab mean and from the
    // prior mean.
    let budget2 = Cell::new(EVAL_BUDGET);
    let gu = slab_mean.re;
    let gv = slab_mean.im;
    let au = d.mu_x.re;
    let av = d.mu_x.im;
    let mut outer_spread = |u: f64| -> [f64; 3] {
        let mut inner = |v: f64| -> [f64; 3] {
            let w = (log_joint(Complex64::new(u, v)) - offset).exp();
            let dc = v - gv;
            let dm = v - av;
            [w, dc * dc * w, dm * dm * w]
        };
        let [i0, ic, im] = integrate_adaptive(&mut inner, &knots_v, rtol, &budget2);
        let du_c = u - gu;
        let du_m = u - au;
        [i0, du_c * du_c * i0 + ic, du_m * du_m * i0 + im]
    };
    let [s0, sc, sm] = integrate_adaptive(&mut outer_spread, &knots_u, rtol, &budget2);
    let slab_var = sc / s0;
    let slab_spread_mu = sm / s0;

    let (pi, one_minus_pi) = if d.lambda <= 0.0 {
        (0.0, 1.0)
    } else if d.lambda >= 1.0 {
        (1.0, 0.0)
    } else {
        let log_active = d.lambda.ln() + offset + t0.max(1e-300).ln();
        let log_null = (1.0 - d.lambda).ln() + log_cn(d.mu_hat, phi_hat);
        let diff = log_active - log_null;
        (sigmoid(diff), sigmoid(-diff))
    };

    let x_tilde = slab_mean * pi;
    // Law of total variance over the spike and the slab: both terms are
    // non-negative, so no cancellation.
    let phi_tilde = pi * slab_var + pi * one_minus_pi * slab_mean.norm_sqr();
    let v = pi * slab_spread_mu;

    QuadPosterior {
        pi,
        x_tilde,
        phi_tilde,
        v,
    }
}

/// Mean, variance, and scale of a product of two complex Gaussian densities
/// by per-axis one-dimensional quadrature.
pub fn gaussian_product_by_quadrature(
    a: Complex64,
    a_var: f64,
    b: Complex64,
    b_var: f64,
    rtol: f64,
) -> (Complex64, f64, f64) {
    let axis = |ca: f64, cb: f64| -> (f64, f64, f64) {
        let va = a_var / 2.0;
        let vb = b_var / 2.0;
        let lg = |t: f64| log_normal(t, ca, va) + log_normal(t, cb, vb);
        let offset = lg(ca).max(lg(cb));
        let knots = axis_knots(ca, va.sqrt(), cb, vb.sqrt());
        let budget = Cell::new(EVAL_BUDGET);
        let mut f = |t: f64| -> [f64; 2] {
            let w = (lg(t) - offset).exp();
            [w, t * w]
        };
        let [i0, i1] = integrate_adaptive(&mut f, &knots, rtol, &budget);
        let mean = i1 / i0;
        // Second pass centered on the estimated mean keeps the variance
        // integrand positive instead of cancelling two large moments.
        let budget2 = Cell::new(EVAL_BUDGET);
        let mut g = |t: f64| -> [f64; 2] {
            let w = (lg(t) - offset).exp();
            let dt = t - mean;
            [w, dt * dt * w]
        };
        let [j0, j2] = integrate_adaptive(&mut g, &knots, rtol, &budget2);
        let var = j2 / j0;
        let log_mass = offset + i0.max(1e-300).ln();
        (mean, var, log_mass)
    };
    let (mu, vu, lu) = axis(a.re, b.re);
    let (mv, vv, lv) = axis(a.im, b.im);
    (Complex64::new(mu, mv), vu + vv, (lu + lv).exp())
}

/// Relative deviation with an absolute floor.
pub fn rel_dev(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(DEV_FLOOR)
}

/// Relative deviation of complex values with an absolute floor.
pub fn rel_dev_c(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(DEV_FLOOR)
}

/// Relative deviation of complex values judged against a problem scale, for
/// quantities whose own magnitude can vanish by phase cancellation while
/// the natural scale stays large.
pub fn rel_dev_c_scaled(a: Complex64, b: Complex64, scale: f64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-6 * scale).max(DEV_FLOOR)
}

/// Randomized denoiser settings spanning four decades of activity, eight of
/// prior variance, and twelve of measurement-to-prior variance ratio, with
/// means separated by at most a few joint standard deviations.
pub fn sample_draws(count: usize, seed: u64) -> Vec<QuadDraw> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut draws = Vec::with_capacity(count);
    for _ in 0..count {
        let lambda = 10f64.powf(rng.gen_range(-4.0..=0.0));
        let phi_x = 10f64.powf(rng.gen_range(-6.0..2.0));
        let ratio = 10f64.powf(rng.gen_range(-6.0..6.0));
        let phi_hat = phi_x * ratio;
        let r1: f64 = rng.gen_range(0.0..2.0);
        let p1: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let mu_x = Complex64::from_polar(r1 * phi_x.sqrt(), p1);
        let r2: f64 = rng.gen_range(0.0..3.0);
        let p2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let mu_hat = mu_x + Complex64::from_polar(r2 * (phi_x + phi_hat).sqrt(), p2);
        draws.push(QuadDraw {
            lambda,
            mu_x,
            phi_x,
            mu_hat,
            phi_hat,
        });
    }
    draws
}

/// Worst and mean relative deviation of one compared quantity.
#[derive(Debug, Clone)]
pub struct OracleRow {
    pub quantity: &'static str,
    pub max_rel_dev: f64,
    pub mean_rel_dev: f64,
}

/// Deviation summary between the closed-form denoiser and quadrature.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub draws: usize,
    pub rtol: f64,
    pub rows: Vec<OracleRow>,
}

impl OracleReport {
    pub fn row(&self, quantity: &str) -> &OracleRow {
        self.rows
            .iter()
            .find(|r| r.quantity == quantity)
            .expect("unknown oracle quantity")
    }
}

/// Runs the full comparison: closed-form posterior against quadrature for
/// every draw, both second-moment conventions against the continuous-branch
/// integral, and the Gaussian-product identity against per-axis quadrature.
pub fn denoiser_report(count: usize, seed: u64, rtol: f64) -> OracleReport {
    let draws = sample_draws(count, seed);
    let mut acc: Vec<(&'static str, f64, f64)> = vec![
        ("activity", 0.0, 0.0),
        ("posterior-mean", 0.0, 0.0),
        ("posterior-variance", 0.0, 0.0),
        ("second-moment-quadrature-consistent", 0.0, 0.0),
        ("second-moment-as-printed", 0.0, 0.0),
        ("product-mean", 0.0, 0.0),
        ("product-variance", 0.0, 0.0),
        ("product-scale", 0.0, 0.0),
    ];
    let push = |slot: &mut (&'static str, f64, f64), dev: f64| {
        slot.1 = slot.1.max(dev);
        slot.2 += dev;
    };

    for d in &draws {
        let point = BgPoint {
            lambda: d.lambda,
            mu_x: d.mu_x,
            phi_x: d.phi_x,
        };
        let closed = bg::denoise(d.mu_hat, d.phi_hat, &point);
        let quad = posterior_by_quadrature(d, rtol);

        push(&mut acc[0], rel_dev(closed.pi, quad.pi));
        let mean_scale = (d.phi_x + d.phi_hat).sqrt();
        push(
            &mut acc[1],
            rel_dev_c_scaled(closed.x_tilde, quad.x_tilde, mean_scale),
        );
        push(&mut acc[2], rel_dev(closed.phi_tilde, quad.phi_tilde));
        let v_qc = bg::posterior_v(&closed, d.mu_x, VarianceMode::QuadratureConsistent);
        let v_printed = bg::posterior_v(&closed, d.mu_x, VarianceMode::AsPrinted);
        push(&mut acc[3], rel_dev(v_qc, quad.v));
        push(&mut acc[4], rel_dev(v_printed, quad.v));

        let (pm, pv, ps) = bg::gaussian_product(d.mu_hat, d.phi_hat, d.mu_x, d.phi_x);
        let (qm, qv, qs) = gaussian_product_by_quadrature(d.mu_hat, d.phi_hat, d.mu_x, d.phi_x, rtol);
        push(&mut acc[5], rel_dev_c(pm, qm));
        push(&mut acc[6], rel_dev(pv, qv));
        push(&mut acc[7], rel_dev(ps, qs));
    }

    let rows = acc
        .into_iter()
        .map(|(quantity, max, sum)| OracleRow {
            quantity,
            max_rel_dev: max,
            mean_rel_dev: sum / count.max(1) as f64,
        })
        .collect();
    OracleReport {
        draws: count,
        rtol,
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_gaussian_posterior_matches_closed_form_tightly() {
        let d = QuadDraw {
            lambda: 1.0,
            mu_x: Complex64::new(0.4, -0.2),
            phi_x: 0.8,
            mu_hat: Complex64::new(-0.3, 0.9),
            phi_hat: 0.5,
        };
        let q = posterior_by_quadrature(&d, 1e-10);
        assert_eq!(q.pi, 1.0);
        let nu = 1.0 / (1.0 / 0.8 + 1.0 / 0.5);
        let gamma = (d.mu_hat / 0.5 + d.mu_x / 0.8) * nu;
        assert!((q.x_tilde - gamma).norm() < 1e-9, "{:?} vs {gamma}", q.x_tilde);
        assert!((q.phi_tilde - nu).abs() < 1e-9);
    }

    #[test]
    fn quadrature_agrees_with_denoiser_on_moderate_settings() {
        for (lambda, px, ph) in [
            (0.5, 1.0, 0.3),
            (0.1, 2.0, 2.0),
            (0.9, 0.2, 5.0),
            (0.01, 1.0, 0.01),
        ] {
            let d = QuadDraw {
                lambda,
                mu_x: Complex64::new(0.3, 0.1),
                phi_x: px,
                mu_hat: Complex64::new(-0.5, 0.7),
                phi_hat: ph,
            };
            let point = BgPoint {
                lambda,
                mu_x: d.mu_x,
                phi_x: px,
            };
            let closed = bg::denoise(d.mu_hat, ph, &point);
            let q = posterior_by_quadrature(&d, 1e-10);
            assert!(rel_dev(closed.pi, q.pi) < 1e-8, "pi {lambda} {px} {ph}");
            assert!(rel_dev_c(closed.x_tilde, q.x_tilde) < 1e-8);
            assert!(rel_dev(closed.phi_tilde, q.phi_tilde) < 1e-8);
        }
    }

    #[test]
    fn product_quadrature_matches_identity() {
        let pairs = [
            (Complex64::new(1.0, 0.5), 0.7, Complex64::new(-0.2, 0.1), 1.3),
            (Complex64::new(0.0, 0.0), 1e-3, Complex64::new(0.05, 0.0), 1e-2),
            (Complex64::new(3.0, -2.0), 4.0, Complex64::new(2.5, -1.0), 0.5),
        ];
        for (a, av, b, bv) in pairs {
            let (pm, pv, ps) = bg::gaussian_product(a, av, b, bv);
            let (qm, qv, qs) = gaussian_product_by_quadrature(a, av, b, bv, 1e-10);
            assert!(rel_dev_c(pm, qm) < 1e-8);
            assert!(rel_dev(pv, qv) < 1e-8);
            assert!(rel_dev(ps, qs) < 1e-8, "{ps} vs {qs}");
        }
    }

    #[test]
    fn small_randomized_report_separates_conventions() {
        let report = denoiser_report(60, 17, 1e-9);
        assert!(report.row("activity").max_rel_dev < 1e-6);
        assert!(report.row("posterior-mean").max_rel_dev < 1e-6);
        assert!(report.row("posterior-variance").max_rel_dev < 1e-6);
        assert!(report.row("second-moment-quadrature-consistent").max_rel_dev < 1e-6);
        assert!(report.row("second-moment-as-printed").max_rel_dev > 1e-3);
        assert!(report.row("product-mean").max_rel_dev < 1e-7);
    }

    #[test]
    fn extreme_variance_ratio_stays_accurate() {
        let d = QuadDraw {
            lambda: 0.3,
            mu_x: Complex64::new(0.1, 0.0),
            phi_x: 1e2,
            mu_hat: Complex64::new(0.1, 0.05),
            phi_hat: 1e-4,
        };
        let point = BgPoint {
            lambda: d.lambda,
            mu_x: d.mu_x,
            phi_x: d.phi_x,
        };
        let closed = bg::denoise(d.mu_hat, d.phi_hat, &point);
        let q = posterior_by_quadrature(&d, 1e-10);
        assert!(rel_dev(closed.pi, q.pi) < 1e-7);
        assert!(rel_dev_c(closed.x_tilde, q.x_tilde) < 1e-7);
        assert!(rel_dev(closed.phi_tilde, q.phi_tilde) < 1e-7);
    }
}
