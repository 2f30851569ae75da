//! Stationary states
//!
//! ```text
//! −BΔφ + AΨ′(φ) − χσ + α𝒩(φ − c₀) = A·mean(Ψ′(φ)) − χ·mean(σ)
//! Δ(σ − χφ) = 0,   mean(φ) = c₀,   mean(σ) = σ̄₀
//! ```
//!
//! found by running the time stepper until the rates vanish. A fixed point of
//! the scheme solves the discrete stationary system exactly.

use std::ops::ControlFlow;
use std::time::Instant;

use serde::Serialize;

use crate::diagnostics::dissipation_g;
use crate::dynamics::{step, step_with_stats, ModelParams, SolverConfig, State, StepStats};
use crate::error::{Error, Result};
use crate::grid::{dual_norm_h1p, grad_norm, inv_laplacian_projected, l2_norm, laplacian_neumann, mean, ScalarField};
use crate::potential::psi_prime;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct SteadyReport {
    pub residual_phi: f64,
    pub residual_sigma: f64,
    pub mean_phi_err: f64,
    pub mean_sigma_err: f64,
    pub delta_inf: f64,
    pub converged: bool,
    pub wall_time: f64,
    /// Simulated time at which the report was taken.
    pub t: f64,
    /// Last measured `‖φⁿ⁺¹ − φⁿ‖/Δt + ‖σⁿ⁺¹ − σⁿ‖/Δt`.
    pub rate: f64,
}

impl SteadyReport {
    pub fn max_residual(&self) -> f64 {
        self.residual_phi
            .max(self.residual_sigma)
            .max(self.mean_phi_err)
            .max(self.mean_sigma_err)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SteadyTolerances {
    pub tol_rate: f64,
    pub residual: f64,
    pub t_max: f64,
}

impl Default for SteadyTolerances {
    fn default() -> Self {
        SteadyTolerances {
            tol_rate: 1e-9,
            residual: 1e-8,
            t_max: 1e3,
        }
    }
}

/// Residuals of the stationary system at `(phi, sigma)`. The `𝒩` term acts on
/// `φ − φ̄`; the mean mismatch is reported separately as `mean_phi_err`.
pub fn stationary_residual(phi: &ScalarField, sigma: &ScalarField, mp: &ModelParams, sigma_bar0: f64) -> Result<SteadyReport> {
    if phi.grid() != sigma.grid() {
        return Err(Error::GridMismatch);
    }
    let dpsi = phi.try_map(|p| psi_prime(p, &mp.potential))?;
    let lap = laplacian_neumann(phi);
    let nphi = inv_laplacian_projected(phi);
    let rhs = mp.a * mean(&dpsi) - mp.chi * mean(sigma);
    let vals = (0..phi.len())
        .map(|i| {
            -mp.b * lap.values()[i] + mp.a * dpsi.values()[i] - mp.chi * sigma.values()[i]
                + mp.alpha * nphi.values()[i]
                - rhs
        })
        .collect();
    let r_phi = ScalarField::from_values(phi.grid(), vals)?;
    let w = sigma.axpy(-mp.chi, phi)?;
    Ok(SteadyReport {
        residual_phi: dual_norm_h1p(&r_phi),
        residual_sigma: grad_norm(&w),
        mean_phi_err: (mean(phi) - mp.c0).abs(),
        mean_sigma_err: (mean(sigma) - sigma_bar0).abs(),
        delta_inf: 1.0 - phi.max_abs(),
        ..SteadyReport::default()
    })
}

/// The nutrient paired with `phi` in a stationary state: `χφ + σ̄₀ − χ·mean(φ)`.
pub fn sigma_from_phi(phi: &ScalarField, mp: &ModelParams, sigma_bar0: f64) -> ScalarField {
    phi.scaled(mp.chi).shifted(sigma_bar0 - mp.chi * mean(phi))
}

/// Steps until the rate drops below `tol.tol_rate` or `t` exceeds
/// `tol.t_max`, then evaluates the stationary residual.
///
/// With `α = 0` the mean of `φ` is conserved, so the mean target is the
/// initial mean rather than `c₀`.
pub fn relax_to_steady(state0: &State, mp: &ModelParams, cfg: &SolverConfig, tol: &SteadyTolerances) -> Result<(State, SteadyReport)> {
    relax_to_steady_observed(state0, mp, cfg, tol, |_, _, _| ControlFlow::Continue(()))
}

/// [`relax_to_steady`] with a per-step observer that may stop the relaxation
/// early (the report is then not converged unless the criteria happen to hold).
pub fn relax_to_steady_observed<F>(
    state0: &State,
    mp: &ModelParams,
    cfg: &SolverConfig,
    tol: &SteadyTolerances,
    mut observer: F,
) -> Result<(State, SteadyReport)>
where
    F: FnMut(&State, &State, &StepStats) -> ControlFlow<()>,
{
    let started = Instant::now();
    let sigma_bar0 = mean(&state0.sigma);
    let target = if mp.alpha == 0.0 { mean(&state0.phi) } else { mp.c0 };
    let mut state = state0.clone();
    let mut rate = f64::INFINITY;
    while state.t < state0.t + tol.t_max {
        let (next, stats) = step_with_stats(&state, mp, cfg)?;
        let dphi = l2_norm(&next.phi.sub(&state.phi)?);
        let dsig = l2_norm(&next.sigma.sub(&state.sigma)?);
        rate = (dphi + dsig) / cfg.dt;
        let flow = observer(&state, &next, &stats);
        state = next;
        if rate <= tol.tol_rate || flow.is_break() {
            break;
        }
    }
    let shifted = ModelParams { c0: target, ..*mp };
    let mut report = stationary_residual(&state.phi, &state.sigma, &shifted, sigma_bar0)?;
    report.rate = rate;
    report.t = state.t;
    report.converged = rate <= tol.tol_rate && report.max_residual() <= tol.residual;
    report.wall_time = started.elapsed().as_secs_f64();
    Ok((state, report))
}

/// Samples of a trajectory together with the dissipation integrated over
/// each window between consecutive samples.
#[derive(Clone, Debug)]
pub struct TrajectorySamples {
    pub states: Vec<State>,
    /// `∫𝒢 dt` over `[t_k, t_{k+1}]`, one entry per window.
    pub window_dissipation: Vec<f64>,
}

/// Runs `n_windows` windows of length `window`, sampling at the window ends.
pub fn sample_trajectory(state0: &State, mp: &ModelParams, cfg: &SolverConfig, window: f64, n_windows: usize) -> Result<TrajectorySamples> {
    let steps_per_window = (window / cfg.dt).round().max(1.0) as usize;
    let mut states = vec![state0.clone()];
    let mut diss = Vec::with_capacity(n_windows);
    let mut state = state0.clone();
    for _ in 0..n_windows {
        let mut acc = 0.0;
        for _ in 0..steps_per_window {
            let next = step(&state, mp, cfg)?;
            acc += cfg.dt * dissipation_g(&state, &next, mp, cfg)?;
            state = next;
        }
        diss.push(acc);
        states.push(state.clone());
    }
    Ok(TrajectorySamples {
        states,
        window_dissipation: diss,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct OmegaLimitReport {
    /// `L²` distance between consecutive samples of `(φ, σ)`.
    pub distances: Vec<f64>,
    pub distances_decreasing: bool,
    pub window_dissipation: Vec<f64>,
    pub dissipation_nonincreasing: bool,
    pub final_window: f64,
}

/// Cauchy-type behaviour of a sampled trajectory.
pub fn omega_limit_probe(samples: &TrajectorySamples) -> Result<OmegaLimitReport> {
    if samples.states.len() < 3 {
        return Err(Error::InvalidParameter("omega-limit probe needs at least 3 samples".into()));
    }
    let mut distances = Vec::with_capacity(samples.states.len() - 1);
    for w in samples.states.windows(2) {
        let dp = l2_norm(&w[1].phi.sub(&w[0].phi)?);
        let ds = l2_norm(&w[1].sigma.sub(&w[0].sigma)?);
        distances.push((dp * dp + ds * ds).sqrt());
    }
    let distances_decreasing = distances.windows(2).all(|w| w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0));
    let wd = samples.window_dissipation.clone();
    let dissipation_nonincreasing = wd.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-300);
    Ok(OmegaLimitReport {
        final_window: wd.last().copied().unwrap_or(0.0),
        distances,
        distances_decreasing,
        window_dissipation: wd,
        dissipation_nonincreasing,
    })
}
