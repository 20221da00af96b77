//! Computable realizations of the model's dissipativity estimates: energy
//! norms, the Gronwall envelope and its per-step audit, the random
//! dissipativity rate gamma and forcing term r, absorbing-set radii, and
//! determining-functional machinery.
//!
//! Constants are derived for the *discrete* operators on the given grid, so
//! the envelope inequality is a theorem of the scheme rather than an
//! approximation: `envelope_audit` must report zero violations on any run
//! whose constants were derived on the same grid.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::field::{grad_norm_sq, mean, norm_sq, State};
use crate::grid::Grid;
use crate::noise::OuState;
use crate::params::{trapezoid_y, PhysParams};
use crate::spectral::Spectral;

/// Default exponent of the spectrally weighted smoothness surrogate norm.
pub const DEFAULT_SOBOLEV_S: f64 = 0.2;

/// Envelope and estimate constants, all derived from the discrete operators
/// of one grid and one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedConstants {
    /// First nonzero Neumann eigenvalue on the depth interval, (pi/d)^2;
    /// this is the value used inside gamma and r.
    pub lambda1: f64,
    /// First nonzero discrete Neumann eigenvalue of the 2D domain, emitted
    /// alongside since the interval convention is a modeling choice.
    pub lambda1_domain_2d: f64,
    /// Free constant of the surface Young inequality, midpoint of its
    /// allowed interval (max(0, 2 - 2 kappa_T/lambda), 2).
    pub a: f64,
    /// Smallness parameter, lambda1 nu / 4.
    pub epsilon: f64,
    /// Envelope decay rate alpha.
    pub alpha_env: f64,
    /// Envelope forcing constant c5.
    pub c5_env: f64,
    /// delta(epsilon) = c7(epsilon) g_tilde^2.
    pub delta_eps: f64,
    /// g sqrt(alpha_T^2 + alpha_S^2).
    pub g_tilde: f64,
    /// Poincare constant on the depth interval, 1 / lambda1_z(discrete).
    pub c6: f64,
    pub c7: f64,
    pub c8: f64,
    /// Discrete constant of ||T||^2 <= c (||trace T||^2 + ||grad T||^2).
    pub c_poincare_t: f64,
    /// Discrete constant of ||trace S||^2 <= c (||S||^2 + ||grad S||^2).
    pub c_trace: f64,
    /// Effective surface coefficients of the discrete flux pairing:
    /// kappa_T lambda / 2 and kappa_S / 2.
    pub lambda_t_surf: f64,
    pub lambda_s_surf: f64,
    pub theta_norm_sq: f64,
    pub f_norm_sq: f64,
    pub beta_t: f64,
    pub beta_s: f64,
}

/// Largest eigenvalue of the symmetric matrix `diag + beta beta^T` shifted
/// into `c I - A`, by power iteration; returns the smallest eigenvalue of A
/// with a residual-based safety margin subtracted.
fn min_eig_diag_plus_rank_one(diag: &[f64], beta: &[f64]) -> f64 {
    let n = diag.len();
    let beta_sq: f64 = beta.iter().map(|b| b * b).sum();
    let c = diag.iter().cloned().fold(0.0f64, f64::max) + beta_sq + 1.0;
    // Deterministic, non-symmetric start vector.
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.37 * ((i * 2654435761 + 13) % 97) as f64 / 97.0)
        .collect();
    let matvec = |v: &[f64], out: &mut [f64]| {
        let bv: f64 = beta.iter().zip(v).map(|(b, x)| b * x).sum();
        for i in 0..n {
            out[i] = c * v[i] - (diag[i] * v[i] + beta[i] * bv);
        }
    };
    let mut w = vec![0.0; n];
    for _ in 0..6000 {
        matvec(&v, &mut w);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        for i in 0..n {
            v[i] = w[i] / norm;
        }
    }
    matvec(&v, &mut w);
    let rho: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
    let residual = w
        .iter()
        .zip(&v)
        .map(|(wi, vi)| (wi - rho * vi).powi(2))
        .sum::<f64>()
        .sqrt();
    ((c - rho) - residual).max(0.5 * (c - rho))
}

/// Derive all envelope constants from the discrete operators by modal
/// decoupling over the y-modes: the surface trace is rank-one per block, so
/// the trace constant is a closed-form Cauchy-Schwarz maximum and the
/// Poincare constant a small per-block eigenvalue problem.
pub fn derive_constants(
    params: &PhysParams,
    grid: &Grid,
    spectral: &Spectral,
) -> Result<DerivedConstants> {
    params.validate(grid)?;
    let pi = std::f64::consts::PI;
    let lambda1 = (pi / grid.d).powi(2);
    let lambda1_domain_2d = spectral.lambda1_neumann_2d();

    // Surface values of the normalized z-modes.
    let surf = grid.surface_j();
    let beta: Vec<f64> = (0..grid.nz)
        .map(|n| spectral.cos_z.synth[(surf, n)])
        .collect();

    let mut c_trace = 0.0f64;
    let mut min_block_eig = f64::INFINITY;
    for m in 0..grid.ny {
        let diag: Vec<f64> = (0..grid.nz)
            .map(|n| spectral.cos_y.eig[m] + spectral.cos_z.eig[n])
            .collect();
        let tr: f64 = beta
            .iter()
            .zip(&diag)
            .map(|(b, l)| b * b / (1.0 + l))
            .sum();
        c_trace = c_trace.max(tr);
        min_block_eig = min_block_eig.min(min_eig_diag_plus_rank_one(&diag, &beta));
    }
    let c_poincare_t = 1.0 / min_block_eig;

    let ratio = 2.0 * params.kappa_t / params.lambda;
    let lower = (2.0 - ratio).max(0.0);
    let a = 0.5 * (lower + 2.0);
    let epsilon = lambda1 * params.nu / 4.0;

    let lambda_t_surf = params.kappa_t * params.lambda / 2.0;
    let lambda_s_surf = params.kappa_s / 2.0;
    let theta_norm_sq = {
        let sq: Vec<f64> = params.theta_profile.iter().map(|v| v * v).collect();
        trapezoid_y(&sq, grid)
    };
    let f_norm_sq = {
        let sq: Vec<f64> = params.f_profile.iter().map(|v| v * v).collect();
        trapezoid_y(&sq, grid)
    };

    let beta_t = (2.0 * params.kappa_t / (1.0 + c_poincare_t))
        .min((2.0 - a) * lambda_t_surf / c_poincare_t);
    let lam_s = lambda1_domain_2d;
    let beta_s = params.kappa_s * lam_s / (1.0 + lam_s);
    let alpha_env = beta_t.min(beta_s);

    // c5 collects the Young remainders of the theta and F surface terms.
    let trace_grad = c_trace * (1.0 + 1.0 / lam_s);
    let c5_env = lambda_t_surf / a * theta_norm_sq
        + lambda_s_surf * lambda_s_surf * trace_grad / params.kappa_s * f_norm_sq;

    let g_tilde = params.g * (params.alpha_t.powi(2) + params.alpha_s.powi(2)).sqrt();
    let c7 = 1.0 / epsilon;
    let c8 = 1.0 / epsilon;
    let delta_eps = c7 * g_tilde * g_tilde;
    let c6 = 1.0 / spectral.cos_z.eig[1];

    Ok(DerivedConstants {
        lambda1,
        lambda1_domain_2d,
        a,
        epsilon,
        alpha_env,
        c5_env,
        delta_eps,
        g_tilde,
        c6,
        c7,
        c8,
        c_poincare_t,
        c_trace,
        lambda_t_surf,
        lambda_s_surf,
        theta_norm_sq,
        f_norm_sq,
        beta_t,
        beta_s,
    })
}

impl DerivedConstants {
    /// gamma(omega) = lambda1 nu - epsilon - |eta|^2_W12 / nu.
    pub fn gamma(&self, eta_w12_sq: f64, params: &PhysParams) -> f64 {
        self.lambda1 * params.nu - self.epsilon - eta_w12_sq / params.nu
    }

    /// r(omega) = (2 lambda1 c8 k^2 nu^2 + nu) |eta|^2 + (c6 / 4 nu) |eta|^4.
    pub fn r(&self, eta_w12_sq: f64, params: &PhysParams) -> f64 {
        (2.0 * self.lambda1 * self.c8 * params.k * params.k * params.nu * params.nu + params.nu)
            * eta_w12_sq
            + self.c6 / (4.0 * params.nu) * eta_w12_sq * eta_w12_sq
    }
}

/// One row of the diagnostics stream.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyRecord {
    pub t: f64,
    /// ||T||^2 + ||S||^2.
    pub ts_energy: f64,
    /// ||q - eta||^2.
    pub q_energy: f64,
    /// ||grad T||^2 + ||grad S||^2.
    pub grad_ts: f64,
    /// Gradient seminorm of eta (exact, modal).
    pub eta_w12: f64,
    pub gamma: f64,
    pub r: f64,
    pub mean_s: f64,
}

pub fn energy_record(
    state: &State,
    eta: &OuState,
    constants: &DerivedConstants,
    params: &PhysParams,
    grid: &Grid,
    spectral: &Spectral,
) -> EnergyRecord {
    let mut q_tilde = state.q.clone();
    q_tilde.add_scaled(&eta.eta, -1.0);
    let eta_w12 = eta.w12_sq(spectral);
    EnergyRecord {
        t: state.t,
        ts_energy: norm_sq(&state.temp, grid) + norm_sq(&state.salt, grid),
        q_energy: norm_sq(&q_tilde, grid),
        grad_ts: grad_norm_sq(&state.temp, grid) + grad_norm_sq(&state.salt, grid),
        eta_w12,
        gamma: constants.gamma(eta_w12, params),
        r: constants.r(eta_w12, params),
        mean_s: mean(&state.salt, grid),
    }
}

/// The Gronwall bound E0 e^{-alpha t} + c5 / alpha.
pub fn gronwall_envelope(e0: f64, t: f64, constants: &DerivedConstants) -> f64 {
    e0 * (-constants.alpha_env * t).exp() + constants.c5_env / constants.alpha_env
}

/// Per-step envelope audit sample, produced by the solver: the measured
/// left side of the envelope inequality and the measured lag terms that the
/// time discretization introduces.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeSample {
    pub t: f64,
    /// (E_{n+1} - E_n)/dt + alpha (||grad v||^2 + ||v||^2) at n+1.
    pub lhs: f64,
    /// Measured discretization slack (advection lag, surface cross term,
    /// and the negative increment-norm term).
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeAudit {
    pub checked: usize,
    /// Indices of steps where lhs exceeded c5 + slack.
    pub violations: Vec<usize>,
    pub max_excess: f64,
}

pub fn envelope_audit(samples: &[EnvelopeSample], constants: &DerivedConstants) -> EnvelopeAudit {
    envelope_audit_with_c5(samples, constants.c5_env)
}

/// Audit against an explicit c5 (used for sensitivity checks).
pub fn envelope_audit_with_c5(samples: &[EnvelopeSample], c5: f64) -> EnvelopeAudit {
    let mut violations = Vec::new();
    let mut max_excess = 0.0f64;
    for (i, s) in samples.iter().enumerate() {
        let tol = 1e-10 * (1.0 + s.lhs.abs() + s.slack.abs() + c5.abs());
        let excess = s.lhs - (c5 + s.slack + tol);
        if excess > 0.0 {
            violations.push(i);
            max_excess = max_excess.max(excess);
        }
    }
    EnvelopeAudit {
        checked: samples.len(),
        violations,
        max_excess,
    }
}

/// Absorbing-set radius estimate from a sampled noise trajectory over
/// negative times.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbingRadius {
    /// Deterministic part, 2 c5 / alpha.
    pub r1_sq: f64,
    /// Noise part, the pullback quadrature of r(theta_s omega) e^{-int gamma}.
    pub r2_sq: f64,
    /// Path-independent coupling remainder, reported separately; the
    /// delta-weighted terms of the pullback bound integrate to this value
    /// identically, so they carry no omega-dependence and are excluded from
    /// r2 (the noise-free limit of r2 is exactly zero).
    pub coupling_sq: f64,
    /// Total R^2 = R1^2 + R2^2.
    pub r_sq: f64,
    /// Quadrature horizon actually used.
    pub horizon: f64,
}

/// Discretize the pullback radius integral over an eta trajectory sampled
/// at ages 0, ds, 2 ds, ... behind the evaluation time. The horizon grows
/// until a one-time-unit block contributes less than 1% of the running
/// total; the series must be long enough to reach that point.
pub fn absorbing_radius(
    eta_w12_ages: &[f64],
    ds: f64,
    constants: &DerivedConstants,
    params: &PhysParams,
) -> Result<AbsorbingRadius> {
    if eta_w12_ages.len() < 2 {
        return Err(Error::RadiusNonConvergent(
            "eta trajectory has fewer than two samples".into(),
        ));
    }
    let alpha = constants.alpha_env;
    let c5 = constants.c5_env;
    let delta = constants.delta_eps;

    let gamma: Vec<f64> = eta_w12_ages
        .iter()
        .map(|&w| constants.gamma(w, params))
        .collect();
    let r: Vec<f64> = eta_w12_ages
        .iter()
        .map(|&w| constants.r(w, params))
        .collect();

    let block = ((1.0 / ds).round() as usize).max(1);
    let mut cum_gamma = 0.0;
    let mut total = 0.0;
    let mut coupling_integral = 0.0;
    let mut prev_integrand = r[0];
    let mut prev_exp = 1.0;
    let mut block_sum = 0.0;
    let mut converged_at = None;

    for j in 1..eta_w12_ages.len() {
        cum_gamma += ds * 0.5 * (gamma[j - 1] + gamma[j]);
        let e = (-cum_gamma).exp();
        let integrand = r[j] * e;
        let piece = ds * 0.5 * (prev_integrand + integrand);
        total += piece;
        block_sum += piece;
        coupling_integral += ds * 0.5 * (prev_exp + e);
        prev_integrand = integrand;
        prev_exp = e;

        if j % block == 0 {
            if j > block && block_sum.abs() < 0.01 * total.abs().max(1e-300) {
                converged_at = Some(j);
                break;
            }
            if cum_gamma < 0.0 {
                return Err(Error::RadiusNonConvergent(format!(
                    "mean dissipativity rate is nonpositive at age {:.3} \
                     (cumulative integral {:.3e}); the control-parameter \
                     condition fails",
                    j as f64 * ds,
                    cum_gamma
                )));
            }
            block_sum = 0.0;
        }
    }
    let horizon_idx = match converged_at {
        Some(j) => j,
        None => {
            // Zero-noise trajectories converge immediately: r is identically
            // zero and nothing accumulates.
            if total == 0.0 && r.iter().all(|&x| x == 0.0) {
                eta_w12_ages.len() - 1
            } else {
                return Err(Error::RadiusNonConvergent(format!(
                    "tail still contributes more than 1% after {} samples \
                     (horizon {:.3})",
                    eta_w12_ages.len(),
                    (eta_w12_ages.len() - 1) as f64 * ds
                )));
            }
        }
    };

    let r1_sq = 2.0 * c5 / alpha;
    let coupling_sq =
        delta * c5 / alpha * coupling_integral + delta * c5 / (alpha * alpha) * (1.0 - prev_exp);
    Ok(AbsorbingRadius {
        r1_sq,
        r2_sq: total,
        coupling_sq,
        r_sq: r1_sq + total,
        horizon: horizon_idx as f64 * ds,
    })
}

/// A finite set of spectral-projection functionals: the first N modal
/// coefficients of each field, ordered by discrete eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSet {
    pub n_per_field: usize,
    /// Exponent of the smoothness surrogate norm.
    pub s: f64,
    /// Raw coefficient-array indices of the monitored vorticity modes.
    pub q_modes: Vec<(usize, usize)>,
    /// Raw indices of the monitored temperature/salinity modes.
    pub ts_modes: Vec<(usize, usize)>,
    pub epsilon_l: f64,
    pub c_l: f64,
    pub q_lambda_next: Option<f64>,
    pub ts_lambda_next: Option<f64>,
}

/// Build the spectral functional set for N modes per field and compute the
/// interpolation constants of the norm inequality
/// ||u||_H <= C_L max |l_i(u)| + eps_L ||u||_X.
pub fn spectral_functionals(n: usize, grid: &Grid, spectral: &Spectral) -> Result<FunctionalSet> {
    let s = DEFAULT_SOBOLEV_S;
    let q_count = (grid.ny - 2) * (grid.nz - 2);
    let ts_count = grid.ny * grid.nz;
    if n == 0 || n > ts_count {
        return Err(Error::Params(format!(
            "functional count {n} out of range (grid holds {ts_count} modes)"
        )));
    }

    let mut q_sorted: Vec<((usize, usize), f64)> = Vec::with_capacity(q_count);
    for m in 0..grid.ny - 2 {
        for l in 0..grid.nz - 2 {
            q_sorted.push(((m, l), spectral.sin_y.eig[m] + spectral.sin_z.eig[l]));
        }
    }
    q_sorted.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    let mut ts_sorted: Vec<((usize, usize), f64)> = Vec::with_capacity(ts_count);
    for m in 0..grid.ny {
        for l in 0..grid.nz {
            ts_sorted.push(((m, l), spectral.neumann_eig(m, l)));
        }
    }
    ts_sorted.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());

    let nq = n.min(q_count);
    let q_modes: Vec<_> = q_sorted[..nq].iter().map(|e| e.0).collect();
    let ts_modes: Vec<_> = ts_sorted[..n.min(ts_count)].iter().map(|e| e.0).collect();
    let q_lambda_next = q_sorted.get(nq).map(|e| e.1);
    let ts_lambda_next = ts_sorted.get(n).map(|e| e.1);

    let eps_of = |lam: Option<f64>| lam.map_or(0.0, |l| l.powf(-s / 2.0));
    let epsilon_l = eps_of(q_lambda_next).max(eps_of(ts_lambda_next));
    let c_l = (3.0 * n as f64).sqrt();

    Ok(FunctionalSet {
        n_per_field: n,
        s,
        q_modes,
        ts_modes,
        epsilon_l,
        c_l,
        q_lambda_next,
        ts_lambda_next,
    })
}

/// Modal decomposition of a state difference, used by the functional gap
/// and the surrogate norm.
pub struct StateModes {
    pub q_coeffs: Array2<f64>,
    pub t_coeffs: Array2<f64>,
    pub s_coeffs: Array2<f64>,
}

pub fn analyze_state(state: &State, spectral: &Spectral) -> StateModes {
    StateModes {
        q_coeffs: spectral.sin_analyze_interior(state.q.values()),
        t_coeffs: spectral.cos_analyze(state.temp.values()),
        s_coeffs: spectral.cos_analyze(state.salt.values()),
    }
}

impl FunctionalSet {
    /// max_j |l_j(u)|^2 over all monitored functionals.
    pub fn max_functional_sq(&self, modes: &StateModes) -> f64 {
        let mut m = 0.0f64;
        for &(a, b) in &self.q_modes {
            m = m.max(modes.q_coeffs[(a, b)].powi(2));
        }
        for &(a, b) in &self.ts_modes {
            m = m
                .max(modes.t_coeffs[(a, b)].powi(2))
                .max(modes.s_coeffs[(a, b)].powi(2));
        }
        m
    }

    /// Smoothness surrogate norm ||u||_X^2 = sum lambda^s |coef|^2 per field.
    pub fn x_norm_sq(&self, modes: &StateModes, spectral: &Spectral) -> f64 {
        let mut acc = 0.0;
        let (qm, qn) = modes.q_coeffs.dim();
        for m in 0..qm {
            for n in 0..qn {
                let lam = spectral.sin_y.eig[m] + spectral.sin_z.eig[n];
                acc += lam.powf(self.s) * modes.q_coeffs[(m, n)].powi(2);
            }
        }
        let (tm, tn) = modes.t_coeffs.dim();
        for m in 0..tm {
            for n in 0..tn {
                let lam = spectral.neumann_eig(m, n);
                if lam > 0.0 {
                    let w = lam.powf(self.s);
                    acc += w * modes.t_coeffs[(m, n)].powi(2);
                    acc += w * modes.s_coeffs[(m, n)].powi(2);
                }
            }
        }
        acc
    }

    /// Phase-space norm from the modal representation (Parseval).
    pub fn h_norm_sq(modes: &StateModes) -> f64 {
        modes.q_coeffs.iter().map(|a| a * a).sum::<f64>()
            + modes.t_coeffs.iter().map(|a| a * a).sum::<f64>()
            + modes.s_coeffs.iter().map(|a| a * a).sum::<f64>()
    }

    /// Verify ||u||_H <= C_L max |l| + eps_L ||u||_X for one state.
    pub fn inequality_holds(&self, modes: &StateModes, spectral: &Spectral) -> bool {
        let lhs = Self::h_norm_sq(modes).sqrt();
        let rhs = self.c_l * self.max_functional_sq(modes).sqrt()
            + self.epsilon_l * self.x_norm_sq(modes, spectral).sqrt();
        lhs <= rhs * (1.0 + 1e-12) + 1e-300
    }
}

/// Decay thresholds of the determining-functional verdict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeterminingThresholds {
    /// A series has decayed when its final value falls below rel times its
    /// initial value...
    pub rel: f64,
    /// ...or below these absolute floors (squared-gap and norm scales).
    pub abs_func: f64,
    pub abs_state: f64,
}

impl Default for DeterminingThresholds {
    fn default() -> Self {
        DeterminingThresholds {
            rel: 1e-6,
            abs_func: 1e-24,
            abs_state: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    BothDecay,
    FunctionalsOnlyDecay,
    Neither,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::BothDecay => "both-decay",
            Verdict::FunctionalsOnlyDecay => "functionals-decay-state-does-not",
            Verdict::Neither => "neither",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeterminingReport {
    pub n_per_field: usize,
    pub epsilon_l: f64,
    pub c_l: f64,
    /// Start times of the unit windows.
    pub window_times: Vec<f64>,
    /// Windowed functional gap: integral over [t, t+1] of max_j |l_j|^2.
    pub windowed_func_gap: Vec<f64>,
    /// Full-state gap ||v1 - v2||_H at each step.
    pub state_times: Vec<f64>,
    pub state_gap: Vec<f64>,
    /// Least-squares exponential decay rates of the two series.
    pub func_rate: f64,
    pub state_rate: f64,
    pub func_decayed: bool,
    pub state_decayed: bool,
    pub verdict: Verdict,
    /// When the functional series decayed: did the state series follow?
    /// The implication is what the experiment tests; it is never assumed.
    pub implication_held: Option<bool>,
}

fn fit_exp_rate(times: &[f64], values: &[f64]) -> f64 {
    // Least-squares slope of ln(value) against t over positive entries.
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&t, &v)| (t, v.ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        0.0
    } else {
        -(n * sxy - sx * sy) / denom
    }
}

/// Assemble the determining report from per-step twin gap series.
///
/// `func_gap_sq` holds max_j |l_j(v1 - v2)|^2 at each step and `state_gap`
/// holds ||v1 - v2||_H; both sampled at spacing `dt` starting at `t0`.
pub fn determining_verdict(
    set: &FunctionalSet,
    t0: f64,
    dt: f64,
    func_gap_sq: &[f64],
    state_gap: &[f64],
    thresholds: DeterminingThresholds,
) -> DeterminingReport {
    assert_eq!(func_gap_sq.len(), state_gap.len());
    let n = func_gap_sq.len();
    let window = ((1.0 / dt).round() as usize).max(1).min(n.saturating_sub(1));

    let mut window_times = Vec::new();
    let mut windowed = Vec::new();
    if n > window {
        for k in 0..n - window {
            let mut acc = 0.0;
            for i in k..k + window {
                acc += dt * 0.5 * (func_gap_sq[i] + func_gap_sq[i + 1]);
            }
            window_times.push(t0 + k as f64 * dt);
            windowed.push(acc);
        }
    }
    let state_times: Vec<f64> = (0..n).map(|i| t0 + i as f64 * dt).collect();

    let decayed = |series: &[f64], abs_floor: f64| -> bool {
        match (series.first(), series.last()) {
            (Some(&first), Some(&last)) => {
                last <= abs_floor || last <= thresholds.rel * first.max(abs_floor)
            }
            _ => true,
        }
    };
    let func_decayed = decayed(&windowed, thresholds.abs_func);
    let state_decayed = decayed(state_gap, thresholds.abs_state);

    let verdict = match (func_decayed, state_decayed) {
        (_, true) => Verdict::BothDecay,
        (true, false) => Verdict::FunctionalsOnlyDecay,
        (false, false) => Verdict::Neither,
    };
    DeterminingReport {
        n_per_field: set.n_per_field,
        epsilon_l: set.epsilon_l,
        c_l: set.c_l,
        func_rate: fit_exp_rate(&window_times, &windowed),
        state_rate: fit_exp_rate(&state_times, state_gap),
        window_times,
        windowed_func_gap: windowed,
        state_times,
        state_gap: state_gap.to_vec(),
        func_decayed,
        state_decayed,
        verdict,
        implication_held: if func_decayed {
            Some(state_decayed)
        } else {
            None
        },
    }
}
