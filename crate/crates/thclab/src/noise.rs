//! Spatially colored, temporally white noise and the stationary
//! Ornstein-Uhlenbeck process driven by it.
//!
//! Every Gaussian draw comes from a counter-based generator keyed by
//! (seed, purpose, step, mode), so a path is a pure function of its seed:
//! shifted paths, twin runs, pullback runs, and the cocycle test all replay
//! the identical increments bit for bit, with no generator state to thread
//! through the solver.
//!
//! The covariance acts diagonally on the grid's Neumann cosine modes. The
//! zero mode carries no noise mass: the Neumann Laplacian annihilates it, so
//! it has no stationary Ornstein-Uhlenbeck distribution; spectra assigning
//! it weight are rejected at construction.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::field::{BcKind, ScalarField};
use crate::grid::Grid;
use crate::params::PhysParams;
use crate::spectral::Spectral;

const PURPOSE_WIENER: u64 = 0x57;
const PURPOSE_STATIONARY: u64 = 0x53;

#[inline]
fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58476d1ce4e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d049bb133111eb);
    x ^= x >> 31;
    x
}

/// Standard normal draw, a pure function of its key.
fn keyed_normal(seed: u64, purpose: u64, step: i64, m: u32, n: u32) -> f64 {
    let mut h = mix64(seed ^ 0x9e3779b97f4a7c15);
    h = mix64(h ^ purpose);
    h = mix64(h ^ (step as u64));
    h = mix64(h ^ (((m as u64) << 32) | n as u64));
    let u1 = ((mix64(h ^ 1) >> 11) as f64 + 1.0) / (1u64 << 53) as f64; // (0, 1]
    let u2 = (mix64(h ^ 2) >> 11) as f64 / (1u64 << 53) as f64; // [0, 1)
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// One noise mode: weight q over the normalized cosine mode (m, n), with
/// the discrete Neumann eigenvalue cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub m: usize,
    pub n: usize,
    pub q: f64,
    pub lambda: f64,
}

/// Trace-class covariance expressed on the Neumann cosine basis of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSpectrum {
    modes: Vec<Mode>,
    trace: f64,
    shape: (usize, usize),
}

impl CovarianceSpectrum {
    /// Power-law spectrum q_mn proportional to lambda_mn^(-s_q), truncated at
    /// `cutoff` in each mode index and normalized to the given trace.
    pub fn power_law(
        grid: &Grid,
        spectral: &Spectral,
        s_q: f64,
        trace: f64,
        cutoff: usize,
    ) -> Result<Self> {
        if !(trace.is_finite() && trace >= 0.0) {
            return Err(Error::Spectrum(format!(
                "trace must be finite and nonnegative, got {trace}"
            )));
        }
        if cutoff >= grid.ny || cutoff >= grid.nz {
            return Err(Error::Spectrum(format!(
                "cutoff {cutoff} exceeds grid Nyquist (ny-1={}, nz-1={})",
                grid.ny - 1,
                grid.nz - 1
            )));
        }
        let mut modes = Vec::new();
        let mut raw_sum = 0.0;
        for m in 0..=cutoff {
            for n in 0..=cutoff {
                if m == 0 && n == 0 {
                    continue;
                }
                let lambda = spectral.neumann_eig(m, n);
                let w = lambda.powf(-s_q);
                raw_sum += w;
                modes.push(Mode { m, n, q: w, lambda });
            }
        }
        if trace > 0.0 {
            for e in &mut modes {
                e.q *= trace / raw_sum;
            }
        } else {
            for e in &mut modes {
                e.q = 0.0;
            }
        }
        Ok(CovarianceSpectrum {
            modes,
            trace,
            shape: grid.shape(),
        })
    }

    /// Explicit mode table; rejects weight on the constant mode.
    pub fn from_table(
        grid: &Grid,
        spectral: &Spectral,
        entries: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut modes = Vec::new();
        let mut trace = 0.0;
        for &(m, n, q) in entries {
            if !(q.is_finite() && q >= 0.0) {
                return Err(Error::Spectrum(format!(
                    "mode ({m},{n}) has invalid weight {q}"
                )));
            }
            if m == 0 && n == 0 && q > 0.0 {
                return Err(Error::Spectrum(
                    "constant mode (0,0) cannot carry noise: the Neumann Laplacian \
                     annihilates it, so it has no stationary distribution"
                        .into(),
                ));
            }
            if m >= grid.ny || n >= grid.nz {
                return Err(Error::Spectrum(format!(
                    "mode ({m},{n}) exceeds grid Nyquist (ny-1={}, nz-1={})",
                    grid.ny - 1,
                    grid.nz - 1
                )));
            }
            if m == 0 && n == 0 {
                continue;
            }
            trace += q;
            modes.push(Mode {
                m,
                n,
                q,
                lambda: spectral.neumann_eig(m, n),
            });
        }
        Ok(CovarianceSpectrum {
            modes,
            trace,
            shape: grid.shape(),
        })
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// Spectrum with every weight scaled by `c` (used for trace sweeps).
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for e in &mut out.modes {
            e.q *= c;
        }
        out.trace *= c;
        out
    }

    /// Add the modal Wiener increment for one base step into `coeffs`.
    fn accumulate_modal_increment(&self, path: &NoisePath, step: i64, coeffs: &mut Array2<f64>) {
        let abs = path.origin_step + step;
        for e in &self.modes {
            let xi = keyed_normal(path.seed, PURPOSE_WIENER, abs, e.m as u32, e.n as u32);
            coeffs[(e.m, e.n)] += (e.q * path.dt).sqrt() * xi;
        }
    }

    /// Modal Wiener increments summed over `steps` consecutive base steps
    /// starting at `first_step`.
    pub fn modal_increment_sum(
        &self,
        path: &NoisePath,
        first_step: i64,
        steps: i64,
        shape: (usize, usize),
    ) -> Array2<f64> {
        let mut coeffs = Array2::zeros(shape);
        for r in 0..steps {
            self.accumulate_modal_increment(path, first_step + r, &mut coeffs);
        }
        coeffs
    }
}

/// A seeded, step-indexed, shiftable record of Wiener increments. `dt` is
/// the native increment resolution; solvers may consume several base
/// increments per time step when running refinement studies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisePath {
    pub seed: u64,
    pub dt: f64,
    pub origin_step: i64,
}

impl NoisePath {
    pub fn new(seed: u64, dt: f64) -> Self {
        NoisePath {
            seed,
            dt,
            origin_step: 0,
        }
    }
}

/// Time shift on the noise record: the returned path replays the original
/// with all step indices offset, shifted(i) = original(i + steps).
pub fn shift_path(path: &NoisePath, steps: i64) -> NoisePath {
    NoisePath {
        seed: path.seed,
        dt: path.dt,
        origin_step: path.origin_step + steps,
    }
}

/// Nodal Wiener increment over base step `step` of the path.
pub fn wiener_increment(
    path: &NoisePath,
    step: i64,
    spectrum: &CovarianceSpectrum,
    grid: &Grid,
    spectral: &Spectral,
) -> ScalarField {
    let mut coeffs = Array2::zeros(grid.shape());
    spectrum.accumulate_modal_increment(path, step, &mut coeffs);
    ScalarField::from_values(spectral.cos_synthesize(&coeffs), BcKind::NeumannZero)
}

/// Ornstein-Uhlenbeck state: modal amplitudes over the full cosine table
/// plus the synthesized nodal field; the two agree to transform round-trip
/// precision by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct OuState {
    pub coeffs: Array2<f64>,
    pub eta: ScalarField,
}

impl OuState {
    pub fn zero(grid: &Grid) -> Self {
        OuState {
            coeffs: Array2::zeros(grid.shape()),
            eta: ScalarField::zeros(grid, BcKind::NeumannZero),
        }
    }

    pub fn from_coeffs(coeffs: Array2<f64>, spectral: &Spectral) -> Self {
        let eta = ScalarField::from_values(spectral.cos_synthesize(&coeffs), BcKind::NeumannZero);
        OuState { coeffs, eta }
    }

    /// Gradient seminorm of eta, exact through the modal representation.
    pub fn w12_sq(&self, spectral: &Spectral) -> f64 {
        let (ny, nz) = self.coeffs.dim();
        let mut acc = 0.0;
        for m in 0..ny {
            for n in 0..nz {
                let a = self.coeffs[(m, n)];
                if a != 0.0 {
                    acc += spectral.neumann_eig(m, n) * a * a;
                }
            }
        }
        acc
    }

    /// L2 norm squared of eta, exact through the modal representation.
    pub fn l2_sq(&self) -> f64 {
        self.coeffs.iter().map(|a| a * a).sum()
    }
}

/// Exact Ornstein-Uhlenbeck transition over one solver step of size `dt`.
///
/// `dt` must be an integer multiple of the path resolution; the update
/// composes one exact modal transition per base increment, consuming the
/// same keyed draws that form the Wiener increments of those base steps.
/// Every mode decays at rate nu (k+1) lambda_mn; only spectrum modes receive
/// noise.
pub fn ou_exact_step(
    state: &OuState,
    dt: f64,
    params: &PhysParams,
    spectrum: &CovarianceSpectrum,
    path: &NoisePath,
    step: i64,
    spectral: &Spectral,
) -> Result<OuState> {
    let substeps = base_steps_per(dt, path.dt)?;
    let rate = params.nu * (params.k + 1.0);
    let (ny, nz) = state.coeffs.dim();

    let mut decay = Array2::zeros((ny, nz));
    for m in 0..ny {
        for n in 0..nz {
            decay[(m, n)] = (-rate * spectral.neumann_eig(m, n) * path.dt).exp();
        }
    }

    let mut coeffs = state.coeffs.clone();
    for r in 0..substeps {
        let abs = path.origin_step + step * substeps + r;
        for m in 0..ny {
            for n in 0..nz {
                coeffs[(m, n)] *= decay[(m, n)];
            }
        }
        for e in &spectrum.modes {
            let mu = rate * e.lambda;
            let d = decay[(e.m, e.n)];
            let sigma = (e.q * (1.0 - d * d) / (2.0 * mu)).sqrt();
            let xi = keyed_normal(path.seed, PURPOSE_WIENER, abs, e.m as u32, e.n as u32);
            coeffs[(e.m, e.n)] += sigma * xi;
        }
    }
    Ok(OuState::from_coeffs(coeffs, spectral))
}

/// Draw from the stationary law: independent modal normals with variance
/// q_mn / (2 nu (k+1) lambda_mn).
pub fn ou_stationary_sample(
    spectrum: &CovarianceSpectrum,
    params: &PhysParams,
    rng_seed: u64,
    member: i64,
    grid: &Grid,
    spectral: &Spectral,
) -> OuState {
    let rate = params.nu * (params.k + 1.0);
    let mut coeffs = Array2::zeros(grid.shape());
    for e in &spectrum.modes {
        let var = e.q / (2.0 * rate * e.lambda);
        let xi = keyed_normal(rng_seed, PURPOSE_STATIONARY, member, e.m as u32, e.n as u32);
        coeffs[(e.m, e.n)] = var.sqrt() * xi;
    }
    OuState::from_coeffs(coeffs, spectral)
}

/// Number of base increments per solver step; `dt` must be an integer
/// multiple of the path resolution.
pub fn base_steps_per(dt: f64, base_dt: f64) -> Result<i64> {
    let ratio = dt / base_dt;
    let rounded = ratio.round();
    if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::Params(format!(
            "solver step {dt} is not an integer multiple of the noise resolution {base_dt}"
        )));
    }
    Ok(rounded as i64)
}

/// Verdict of the control-parameter size check together with the implied
/// mean of the dissipativity rate gamma.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlCheck {
    /// Whether lambda1 > trQ / ((k+1) nu^3) holds.
    pub holds: bool,
    pub lambda1: f64,
    pub bound: f64,
    /// E gamma = lambda1 nu - epsilon - trQ / (2 nu^2 (k+1)), from the
    /// stationary modal moments.
    pub e_gamma: f64,
    pub epsilon: f64,
}

/// Check that the control parameter k is large enough for dissipativity:
/// lambda1 > trQ / ((k+1) nu^3), with lambda1 = (pi/d)^2 the first nonzero
/// Neumann eigenvalue on the depth interval. Requires epsilon < lambda1 nu/2.
pub fn lemma44_check(
    spectrum: &CovarianceSpectrum,
    params: &PhysParams,
    grid: &Grid,
    epsilon: f64,
) -> Result<ControlCheck> {
    let lambda1 = (std::f64::consts::PI / grid.d).powi(2);
    if !(epsilon > 0.0 && epsilon < lambda1 * params.nu / 2.0) {
        return Err(Error::Params(format!(
            "epsilon must lie in (0, lambda1 nu / 2) = (0, {:.6e}), got {epsilon:.6e}",
            lambda1 * params.nu / 2.0
        )));
    }
    let bound = spectrum.trace() / ((params.k + 1.0) * params.nu.powi(3));
    let e_grad = spectrum.trace() / (2.0 * params.nu * (params.k + 1.0));
    let e_gamma = lambda1 * params.nu - epsilon - e_grad / params.nu;
    Ok(ControlCheck {
        holds: lambda1 > bound,
        lambda1,
        bound,
        e_gamma,
        epsilon,
    })
}
