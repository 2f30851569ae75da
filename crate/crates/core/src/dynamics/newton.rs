//! Newton solve for the implicit phase update.
//!
//! One time step requires the field `φ` solving
//!
//! ```text
//! R(φ) = (φ − φⁿ) + Δt·α(φ − c₀) − Δt·Δ_h μ(φ) = 0
//! μ(φ) = A·F′(φ) − B·Δ_h φ + (ε/Δt)(φ − φⁿ) + g
//! ```
//!
//! where `F` is the convex part of the potential and `g = −Aθ₀φⁿ − χσⁿ`
//! collects the explicit terms. `R` is monotone, so Newton with a
//! backtracking line search converges; for the exact logarithmic potential the
//! line search also keeps every iterate inside `‖φ‖_∞ ≤ 1 − margin`.

use crate::error::{Error, Result};
use crate::grid::{dual_norm_h1p, laplacian_neumann, mean, ScalarField};
use crate::potential::ConvexPart;

use super::gmres::gmres;
use super::{ModelParams, SolverConfig, State};

/// The nonlinear system of one implicit step.
#[derive(Clone, Debug)]
pub struct ImplicitProblem {
    pub dt: f64,
    pub a: f64,
    pub b: f64,
    pub eps: f64,
    pub alpha: f64,
    pub c0: f64,
    pub phi_old: ScalarField,
    /// Explicit part of the chemical potential, `−Aθ₀φⁿ − χσⁿ`.
    pub explicit: ScalarField,
    pub convex: ConvexPart,
    /// `Some(margin)` enforces `‖φ‖_∞ ≤ 1 − margin` on every iterate.
    pub barrier: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NewtonStats {
    pub iterations: usize,
    pub residual: f64,
    pub linear_iterations: usize,
    pub backtracks: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct NewtonSettings {
    pub tol: f64,
    pub max_iters: usize,
    pub linear_tol: f64,
    pub restart: usize,
    pub max_linear_iters: usize,
}

impl From<&SolverConfig> for NewtonSettings {
    fn from(cfg: &SolverConfig) -> Self {
        NewtonSettings {
            tol: cfg.newton_tol,
            max_iters: cfg.newton_max_iters,
            linear_tol: cfg.linear_tol,
            restart: cfg.gmres_restart,
            max_linear_iters: cfg.max_linear_iters,
        }
    }
}

impl ImplicitProblem {
    pub fn new(state: &State, mp: &ModelParams, dt: f64, convex: ConvexPart, barrier: Option<f64>) -> ImplicitProblem {
        let at0 = mp.a * mp.potential.theta0;
        let explicit = state
            .phi
            .zip_map_unchecked(&state.sigma, |p, s| -at0 * p - mp.chi * s);
        ImplicitProblem {
            dt,
            a: mp.a,
            b: mp.b,
            eps: mp.eps,
            alpha: mp.alpha,
            c0: mp.c0,
            phi_old: state.phi.clone(),
            explicit,
            convex,
            barrier,
        }
    }

    /// Mean of the solution, fixed by the linear mean recursion.
    pub fn target_mean(&self) -> f64 {
        (mean(&self.phi_old) + self.dt * self.alpha * self.c0) / (1.0 + self.dt * self.alpha)
    }

    pub fn mu(&self, phi: &ScalarField) -> Result<ScalarField> {
        let lap = laplacian_neumann(phi);
        let ed = self.eps / self.dt;
        let mut out = Vec::with_capacity(phi.len());
        for i in 0..phi.len() {
            let p = phi.values()[i];
            out.push(
                self.a * self.convex.d1(p)? - self.b * lap.values()[i]
                    + ed * (p - self.phi_old.values()[i])
                    + self.explicit.values()[i],
            );
        }
        Ok(ScalarField::from_values_unchecked(phi.grid(), out))
    }

    pub fn residual(&self, phi: &ScalarField) -> Result<ScalarField> {
        let lap_mu = laplacian_neumann(&self.mu(phi)?);
        let (dt, alpha, c0) = (self.dt, self.alpha, self.c0);
        let vals = phi
            .values()
            .iter()
            .zip(self.phi_old.values())
            .zip(lap_mu.values())
            .map(|((&p, &po), &l)| (p - po) + dt * alpha * (p - c0) - dt * l)
            .collect();
        Ok(ScalarField::from_values_unchecked(phi.grid(), vals))
    }

    /// Pointwise `F″(φ)`, the variable coefficient of the Jacobian.
    pub fn curvature(&self, phi: &ScalarField) -> Result<ScalarField> {
        phi.try_map(|p| self.convex.d2(p))
    }

    /// Jacobian action `J v = (1+Δtα) v − Δt Δ_h (A F″(φ) v − B Δ_h v + (ε/Δt) v)`.
    pub fn jacobian_apply(&self, curvature: &ScalarField, v: &ScalarField) -> ScalarField {
        let vals = self.jacobian_values(curvature, v.values());
        ScalarField::from_values_unchecked(v.grid(), vals)
    }

    fn jacobian_values(&self, curvature: &ScalarField, v: &[f64]) -> Vec<f64> {
        let g = curvature.grid();
        let vf = ScalarField::from_values_unchecked(g, v.to_vec());
        let lap_v = laplacian_neumann(&vf);
        let ed = self.eps / self.dt;
        let inner: Vec<f64> = (0..v.len())
            .map(|i| self.a * curvature.values()[i] * v[i] - self.b * lap_v.values()[i] + ed * v[i])
            .collect();
        let lap_inner = laplacian_neumann(&ScalarField::from_values_unchecked(g, inner));
        let shift = 1.0 + self.dt * self.alpha;
        v.iter()
            .zip(lap_inner.values())
            .map(|(vi, li)| shift * vi - self.dt * li)
            .collect()
    }

    fn admissible(&self, phi: &ScalarField) -> bool {
        match self.barrier {
            Some(margin) => phi.max_abs() <= 1.0 - margin,
            None => phi.is_finite(),
        }
    }

    /// Solves `J δ = rhs` with GMRES preconditioned by the constant-coefficient
    /// operator (mean curvature), which the cosine transform inverts exactly.
    /// The mean of `δ` is set from the exact mean equation afterwards.
    fn linear_solve(&self, curvature: &ScalarField, rhs: &ScalarField, settings: &NewtonSettings) -> (ScalarField, usize) {
        let g = rhs.grid();
        let s_bar = self.a * mean(curvature);
        let (dt, ed, b) = (self.dt, self.eps / self.dt, self.b);
        let shift = 1.0 + dt * self.alpha;
        let precond = |v: &[f64]| g.apply_spectral(v, |lam| 1.0 / (shift + dt * lam * (s_bar + b * lam + ed)));
        let apply = |v: &[f64]| self.jacobian_values(curvature, v);
        let rhs_norm = rhs.values().iter().map(|v| v * v).sum::<f64>().sqrt();
        let (x, out) = gmres(
            apply,
            precond,
            rhs.values(),
            settings.linear_tol * rhs_norm,
            settings.restart,
            settings.max_linear_iters,
        );
        let mut delta = ScalarField::from_values_unchecked(g, x);
        let want = mean(rhs) / shift;
        let have = mean(&delta);
        delta = delta.shifted(want - have);
        (delta, out.iterations)
    }
}

/// Newton iteration for [`ImplicitProblem`] starting from `guess`.
///
/// Always performs at least one update. Converged when the `(H¹)′` norm of
/// the residual drops to `settings.tol`.
pub fn newton_field_solve(
    problem: &ImplicitProblem,
    guess: ScalarField,
    settings: &NewtonSettings,
) -> Result<(ScalarField, NewtonStats)> {
    const MAX_HALVINGS: usize = 50;
    if !problem.admissible(&guess) {
        return Err(Error::BarrierBreach {
            t: f64::NAN,
            max_abs: guess.max_abs(),
        });
    }
    let mut phi = guess;
    let mut r = problem.residual(&phi)?;
    let mut norm = dual_norm_h1p(&r);
    let mut stats = NewtonStats::default();

    loop {
        if stats.iterations >= 1 && norm <= settings.tol {
            stats.residual = norm;
            return Ok((phi, stats));
        }
        if stats.iterations >= settings.max_iters {
            return Err(Error::NewtonDiverged {
                iterations: stats.iterations,
                residual: norm,
            });
        }
        stats.iterations += 1;

        let curvature = problem.curvature(&phi)?;
        let (delta, lin_its) = problem.linear_solve(&curvature, &r.scaled(-1.0), settings);
        stats.linear_iterations += lin_its;

        let mut step = 1.0;
        let mut feasible_seen = false;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = phi.axpy(step, &delta)?;
            if problem.admissible(&trial) {
                feasible_seen = true;
                let r_trial = problem.residual(&trial)?;
                let n_trial = dual_norm_h1p(&r_trial);
                if n_trial <= (1.0 - 1e-4 * step) * norm || n_trial <= settings.tol {
                    accepted = Some((trial, r_trial, n_trial));
                    break;
                }
            }
            step *= 0.5;
            stats.backtracks += 1;
        }
        match accepted {
            Some((p, rr, n)) => {
                phi = p;
                r = rr;
                norm = n;
            }
            None if !feasible_seen => {
                return Err(Error::BarrierBreach {
                    t: f64::NAN,
                    max_abs: phi.axpy(step, &delta)?.max_abs(),
                })
            }
            None => {
                return Err(Error::NewtonDiverged {
                    iterations: stats.iterations,
                    residual: norm,
                })
            }
        }
    }
}
