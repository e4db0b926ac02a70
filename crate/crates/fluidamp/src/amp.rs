//! Generalized approximate message passing over the pilot codebook, with
//! per-iteration expectation-maximization hyperparameter learning.
//!
//! One iteration pushes the current coefficient posture through the linear
//! stage (output means and variances with an Onsager correction), applies the
//! scalar Gaussian observation update, pulls back per-coefficient
//! pseudo-measurements, and denoises them under the Bernoulli-Gaussian prior.
//! The surrounding driver alternates iterations with the selected learning
//! rule: plain hyperparameter freezing, conventional moment matching,
//! geographically clipped variance learning, or angular refinement of likely
//! active rows.
//!
//! All inner loops accumulate in a fixed index order, and every operation
//! count the complexity study relies on is incremented where the work
//! actually happens.

use ndarray::Array2;
use num_complex::Complex64;

use crate::angular::{omp_refine, SteeringCodebook};
use crate::bg::{self, BgPrior, MomentField, VarianceMode, VARIANCE_FLOOR};
use crate::em::{self, GeoBounds};
use crate::error::{Error, Result};
use crate::scene::PilotCodebook;

/// Hyperparameter learning rule applied between iterations.
#[derive(Debug, Clone, Copy)]
pub enum EmVariant<'a> {
    /// Keep the initial hyperparameters for the whole run.
    FixedPrior,
    /// Per-user moment matching of activity, mean, and variance.
    Conventional,
    /// Moment matching with the variance estimate clipped to the service
    /// area's large-scale fading range.
    Geographic {
        bounds: GeoBounds,
        mode: VarianceMode,
    },
    /// Conventional learning followed by a sparse angular re-projection of
    /// rows whose activity estimate clears a threshold.
    Angular {
        codebook: &'a SteeringCodebook,
        l_s: usize,
        lambda_thresh: f64,
    },
}

/// Driver controls shared by every variant.
#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Maximum number of iterations.
    pub t_max: usize,
    /// Relative change of the posterior mean that counts as converged.
    pub tol: f64,
    /// Damping factor in `(0, 1]`; 1 disables damping.
    pub damping: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            t_max: 50,
            tol: 1e-8,
            damping: 1.0,
        }
    }
}

/// Ground truth handed to the driver so the trace can carry an error curve.
#[derive(Debug, Clone, Copy)]
pub struct Truth<'a> {
    pub x: &'a Array2<Complex64>,
    pub active: &'a [usize],
}

/// One point of the per-iteration trace.
#[derive(Debug, Clone, Copy)]
pub struct TracePoint {
    pub iteration: usize,
    /// Relative squared change of the posterior mean in this iteration.
    pub residual: f64,
    /// Mean relative row error against the true channels, when truth is known.
    pub nmse: Option<f64>,
}

/// Full engine state between iterations.
#[derive(Debug, Clone)]
pub struct AmpState {
    /// Damped posterior mean of the coefficients, `k x n_o`.
    pub x_tilde: Array2<Complex64>,
    /// Damped posterior variance of the coefficients.
    pub phi_tilde: Array2<f64>,
    /// Onsager-corrected output residual, `g x n_o`.
    pub s_hat: Array2<Complex64>,
    /// Output-side mean before the observation update.
    pub mu_r: Array2<Complex64>,
    /// Output-side variance before the observation update.
    pub phi_r: Array2<f64>,
    /// Input-side pseudo-measurement mean.
    pub mu_x_hat: Array2<Complex64>,
    /// Input-side pseudo-measurement variance.
    pub phi_x_hat: Array2<f64>,
    /// Raw posterior moments from the latest denoising pass.
    pub post: MomentField,
    /// Current prior field.
    pub prior: BgPrior,
    /// Iterations completed.
    pub iter: usize,
    /// Cumulative arithmetic operations.
    pub ops: u64,
}

/// Result of a full run.
#[derive(Debug, Clone)]
pub struct AmpRun {
    /// Final per-user activity estimates.
    pub lambda: Vec<f64>,
    /// Final posterior-mean channel estimate, `k x n_o`.
    pub x_hat: Array2<Complex64>,
    /// Final per-coefficient prior variances.
    pub phi_x: Array2<f64>,
    /// Per-iteration residual and error curve.
    pub trace: Vec<TracePoint>,
    /// Whether the residual dropped below the tolerance before `t_max`.
    pub converged: bool,
    /// Iterations executed.
    pub iterations: usize,
    /// Arithmetic operations per executed iteration, averaged.
    pub ops_per_iter: u64,
    /// Total arithmetic operations including initialization.
    pub ops_total: u64,
    /// Smallest and largest prior variance ever produced by the geographic
    /// learner, when that variant ran.
    pub phi_span: Option<(f64, f64)>,
}

/// Fraction of users the activity initializer assumes, derived from the
/// measurement ratio `g / k` alone.
///
/// The initializer maximizes the phase-transition expression over its scalar
/// parameter with a dense grid pass followed by a golden-section polish, and
/// clips the result into `(0, 1]`.
pub fn init_lambda(g: usize, k: usize) -> f64 {
    assert!(g > 0 && k > 0);
    let ratio = g as f64 / k as f64;
    let objective = |a: f64| -> f64 {
        let t = tail_term(a);
        let denom = 1.0 + a * a - 2.0 * t;
        if denom <= 0.0 {
            return f64::NEG_INFINITY;
        }
        (1.0 - (2.0 / ratio) * t) / denom
    };

    // Dense grid over (0, 10] at step 1e-3.
    let mut best_a = 1e-3;
    let mut best_f = objective(best_a);
    let mut a = 2e-3;
    while a <= 10.0 + 1e-12 {
        let f = objective(a);
        if f > best_f {
            best_f = f;
            best_a = a;
        }
        a += 1e-3;
    }

    // Golden-section polish inside one grid cell on either side.
    let mut lo = (best_a - 1e-3).max(1e-9);
    let mut hi = best_a + 1e-3;
    let inv_phi = 0.618_033_988_749_894_9f64;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    while hi - lo > 1e-8 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1);
        }
    }
    let refined = objective(0.5 * (lo + hi)).max(best_f);

    (ratio * refined).clamp(1e-12, 1.0)
}

/// Gaussian tail expression `(1 + a^2) Phi(-a) - a N(a; 0, 1)` shared by the
/// activity initializer.
fn tail_term(a: f64) -> f64 {
    let phi_neg = 0.5 * statrs::function::erf::erfc(a / std::f64::consts::SQRT_2);
    let dens = (-0.5 * a * a).exp() / (2.0 * std::f64::consts::PI).sqrt();
    (1.0 + a * a) * phi_neg - a * dens
}

/// Initial engine state from the received block and the activity estimate.
///
/// Per-column signal power in excess of the noise floor, split by the
/// codebook energy, seeds the prior variance; means start at zero and the
/// first posterior moments are the prior moments.
pub fn init_state(
    y: &Array2<Complex64>,
    a: &PilotCodebook,
    psi: f64,
    lambda1: f64,
) -> Result<AmpState> {
    let (g, k) = a.a.dim();
    let (gy, n_o) = y.dim();
    if gy != g {
        return Err(Error::Dimension(format!(
            "received block has {gy} rows but pilots have {g}"
        )));
    }
    if psi < 0.0 {
        return Err(Error::Domain(format!("psi must be non-negative, got {psi}")));
    }

    let mut ops = 0u64;
    let mut denom = 0.0;
    for gi in 0..g {
        for ki in 0..k {
            denom += a.a[[gi, ki]].norm_sqr() * lambda1;
        }
    }
    ops += (g * k) as u64;

    let mut phi_x = Array2::<f64>::zeros((k, n_o));
    for n in 0..n_o {
        let mut power = 0.0;
        for gi in 0..g {
            power += y[[gi, n]].norm_sqr();
        }
        ops += g as u64;
        let raw = (power - g as f64 * psi) / denom.max(VARIANCE_FLOOR);
        let phi = raw.max(VARIANCE_FLOOR);
        for ki in 0..k {
            phi_x[[ki, n]] = phi;
        }
    }

    let mu_x = Array2::<Complex64>::zeros((k, n_o));
    let lambda = vec![lambda1; k];

    // Posterior moments start at the prior moments: zero mean, lambda-scaled
    // variance.
    let x_tilde = Array2::<Complex64>::zeros((k, n_o));
    let mut phi_tilde = Array2::<f64>::zeros((k, n_o));
    for ki in 0..k {
        for n in 0..n_o {
            phi_tilde[[ki, n]] = lambda1 * phi_x[[ki, n]];
        }
    }
    ops += (k * n_o) as u64;

    Ok(AmpState {
        x_tilde,
        phi_tilde,
        s_hat: Array2::zeros((g, n_o)),
        mu_r: Array2::zeros((g, n_o)),
        phi_r: Array2::zeros((g, n_o)),
        mu_x_hat: Array2::zeros((k, n_o)),
        phi_x_hat: Array2::zeros((k, n_o)),
        post: MomentField::zeros(k, n_o),
        prior: BgPrior {
            lambda,
            mu_x,
            phi_x,
            psi,
        },
        iter: 0,
        ops,
    })
}

/// One full message-passing iteration: linear stage, observation update,
/// pseudo-measurement pullback, denoising, and damping.
///
/// `abs_a2` caches the entrywise squared magnitudes of the codebook.  The
/// damping factor blends the fresh posterior moments with the previous ones;
/// 1 keeps the fresh values.
pub fn amp_iterate(
    state: &mut AmpState,
    y: &Array2<Complex64>,
    a: &PilotCodebook,
    abs_a2: &Array2<f64>,
    damping: f64,
) -> Result<()> {
    let (g, k) = a.a.dim();
    let n_o = y.ncols();
    let psi = state.prior.psi;
    let t = state.iter + 1;

    // Output means and variances with the Onsager correction.
    for n in 0..n_o {
        for gi in 0..g {
            let mut var_acc = 0.0;
            let mut mean_acc = Complex64::new(0.0, 0.0);
            for ki in 0..k {
                var_acc += abs_a2[[gi, ki]] * state.phi_tilde[[ki, n]];
                mean_acc += a.a[[gi, ki]] * state.x_tilde[[ki, n]];
            }
            state.phi_r[[gi, n]] = var_acc;
            state.mu_r[[gi, n]] = mean_acc - state.s_hat[[gi, n]] * var_acc;
        }
    }
    state.ops += 2 * (g * k * n_o) as u64;

    // Observation update and residual rescaling, entrywise.
    let mut phi_s = Array2::<f64>::zeros((g, n_o));
    for n in 0..n_o {
        for gi in 0..g {
            let pr = state.phi_r[[gi, n]].max(VARIANCE_FLOOR);
            let denom = pr + psi;
            let post_mean = (y[[gi, n]] * pr + state.mu_r[[gi, n]] * psi) / denom;
            let post_var = pr * psi / denom;
            phi_s[[gi, n]] = ((pr - post_var) / (pr * pr)).max(VARIANCE_FLOOR);
            state.s_hat[[gi, n]] = (post_mean - state.mu_r[[gi, n]]) / pr;
        }
    }
    state.ops += 6 * (g * n_o) as u64;

    // Pseudo-measurements for every coefficient.
    for n in 0..n_o {
        for ki in 0..k {
            let mut prec_acc = 0.0;
            let mut corr_acc = Complex64::new(0.0, 0.0);
            for gi in 0..g {
                prec_acc += abs_a2[[gi, ki]] * phi_s[[gi, n]];
                corr_acc += a.a[[gi, ki]].conj() * state.s_hat[[gi, n]];
            }
            let phi_x_hat = 1.0 / prec_acc.max(VARIANCE_FLOOR);
            state.phi_x_hat[[ki, n]] = phi_x_hat;
            state.mu_x_hat[[ki, n]] = state.x_tilde[[ki, n]] + corr_acc * phi_x_hat;
        }
    }
    state.ops += 2 * (g * k * n_o) as u64;

    // Denoise under the current prior, then damp.
    for ki in 0..k {
        for n in 0..n_o {
            let point = state.prior.at(ki, n);
            let m = bg::denoise(state.mu_x_hat[[ki, n]], state.phi_x_hat[[ki, n]], &point);
            state.post.pi[[ki, n]] = m.pi;
            state.post.gamma[[ki, n]] = m.gamma;
            state.post.nu[[ki, n]] = m.nu;
            state.post.x_tilde[[ki, n]] = m.x_tilde;
            state.post.phi_tilde[[ki, n]] = m.phi_tilde;
            state.x_tilde[[ki, n]] =
                m.x_tilde * damping + state.x_tilde[[ki, n]] * (1.0 - damping);
            state.phi_tilde[[ki, n]] =
                m.phi_tilde * damping + state.phi_tilde[[ki, n]] * (1.0 - damping);
        }
    }
    state.ops += 10 * (k * n_o) as u64;

    for v in state.x_tilde.iter().chain(state.mu_x_hat.iter()) {
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::Divergence {
                iteration: t,
                detail: "non-finite posterior mean".into(),
                trace: Vec::new(),
            });
        }
    }
    for v in state.phi_tilde.iter().chain(state.phi_x_hat.iter()) {
        if !v.is_finite() {
            return Err(Error::Divergence {
                iteration: t,
                detail: "non-finite variance".into(),
                trace: Vec::new(),
            });
        }
    }

    state.iter = t;
    Ok(())
}

fn nmse_against_truth(x_hat: &Array2<Complex64>, truth: &Truth<'_>) -> f64 {
    let n_o = x_hat.ncols();
    let mut acc = 0.0;
    for &user in truth.active {
        let mut err = 0.0;
        let mut pow = 0.0;
        for n in 0..n_o {
            err += (x_hat[[user, n]] - truth.x[[user, n]]).norm_sqr();
            pow += truth.x[[user, n]].norm_sqr();
        }
        acc += err / pow.max(1e-300);
    }
    acc / truth.active.len().max(1) as f64
}

/// Runs the engine to convergence or `t_max`, applying the selected learning
/// rule after every iteration.
pub fn run(
    y: &Array2<Complex64>,
    a: &PilotCodebook,
    psi: f64,
    variant: EmVariant<'_>,
    opts: &RunOptions,
    truth: Option<&Truth<'_>>,
) -> Result<AmpRun> {
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::Config(format!(
            "damping must lie in (0, 1], got {}",
            opts.damping
        )));
    }
    if opts.t_max == 0 {
        return Err(Error::Config("t_max must be at least 1".into()));
    }
    let (g, k) = a.a.dim();
    let lambda1 = init_lambda(g, k);
    let mut state = init_state(y, a, psi, lambda1)?;
    let init_ops = state.ops;

    let abs_a2 = Array2::from_shape_fn((g, k), |(gi, ki)| a.a[[gi, ki]].norm_sqr());

    let mut trace: Vec<TracePoint> = Vec::with_capacity(opts.t_max);
    let mut converged = false;
    let mut phi_span: Option<(f64, f64)> = None;

    for _ in 0..opts.t_max {
        let x_prev = state.x_tilde.clone();
        if let Err(e) = amp_iterate(&mut state, y, a, &abs_a2, opts.damping) {
            return Err(attach_trace(e, &trace));
        }

        match variant {
            EmVariant::FixedPrior => {}
            EmVariant::Conventional => em::em_step_conventional(&mut state.prior, &state.post),
            EmVariant::Geographic { bounds, mode } => {
                em::em_step_geographic(&mut state.prior, &state.post, bounds, mode);
                let (mut lo, mut hi) = phi_span.unwrap_or((f64::INFINITY, f64::NEG_INFINITY));
                for v in state.prior.phi_x.iter() {
                    lo = lo.min(*v);
                    hi = hi.max(*v);
                }
                phi_span = Some((lo, hi));
            }
            EmVariant::Angular {
                codebook,
                l_s,
                lambda_thresh,
            } => {
                em::em_step_conventional(&mut state.prior, &state.post);
                for ki in 0..k {
                    if state.prior.lambda[ki] >= lambda_thresh {
                        let row = state.x_tilde.row(ki).to_owned();
                        let (refined, _) =
                            omp_refine(row.view(), codebook, l_s, None, &mut state.ops)?;
                        for n in 0..y.ncols() {
                            state.x_tilde[[ki, n]] = refined[n];
                        }
                    }
                }
            }
        }

        let mut delta = 0.0;
        let mut scale = 0.0;
        for (new, old) in state.x_tilde.iter().zip(x_prev.iter()) {
            delta += (new - old).norm_sqr();
            scale += old.norm_sqr();
        }
        let residual = delta / scale.max(1e-300);
        let nmse = truth.map(|t| nmse_against_truth(&state.x_tilde, t));
        trace.push(TracePoint {
            iteration: state.iter,
            residual,
            nmse,
        });

        if residual < opts.tol {
            converged = true;
            break;
        }
    }

    let iterations = state.iter;
    let loop_ops = state.ops - init_ops;
    Ok(AmpRun {
        lambda: state.prior.lambda.clone(),
        x_hat: state.x_tilde,
        phi_x: state.prior.phi_x,
        trace,
        converged,
        iterations,
        ops_per_iter: loop_ops / iterations.max(1) as u64,
        ops_total: state.ops,
        phi_span,
    })
}

fn attach_trace(e: Error, trace: &[TracePoint]) -> Error {
    match e {
        Error::Divergence {
            iteration, detail, ..
        } => Error::Divergence {
            iteration,
            detail,
            trace: trace.iter().map(|p| p.residual).collect(),
        },
        other => other,
    }
}
