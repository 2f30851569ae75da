//! Time integration of the viscous Cahn–Hilliard–Oono system coupled to the
//! nutrient equation
//!
//! ```text
//! ∂ₜφ = Δμ − α(φ − c₀)
//! μ   = AΨ′(φ) − BΔφ − χσ + ε∂ₜφ
//! ∂ₜσ = Δσ − χΔφ
//! ```
//!
//! with homogeneous Neumann conditions. One step of the scheme reads
//!
//! ```text
//! (φⁿ⁺¹ − φⁿ)/Δt = Δ_h μⁿ⁺¹ − α(φⁿ⁺¹ − c₀)
//! μⁿ⁺¹ = A Ψ₀′(φⁿ⁺¹) − Aθ₀ φⁿ − B Δ_h φⁿ⁺¹ − χ σⁿ + ε (φⁿ⁺¹ − φⁿ)/Δt
//! (σⁿ⁺¹ − σⁿ)/Δt = Δ_h σⁿ⁺¹ − χ Δ_h φⁿ⁺¹
//! ```
//!
//! The convex part is implicit and the concave part explicit, so the φ-update
//! is a single monotone nonlinear solve; the σ-update is one linear solve in
//! cosine space. Because `Δ_h` has zero weighted mean, the recursions
//! `φ̄ⁿ⁺¹ = (φ̄ⁿ + Δtαc₀)/(1 + Δtα)` and `σ̄ⁿ⁺¹ = σ̄ⁿ` hold exactly.

mod dispersion;
mod gmres;
mod newton;

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{laplacian_neumann, mean, shifted_inverse, ScalarField};
use crate::potential::{ConvexPart, PotentialParams};

pub use dispersion::{dispersion_rates, eigenvalues_2x2, linear_matrix, measure_mode_rates, MeasuredRates};
pub use newton::{newton_field_solve, ImplicitProblem, NewtonSettings, NewtonStats};

/// Model coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub a: f64,
    pub b: f64,
    pub eps: f64,
    pub chi: f64,
    pub alpha: f64,
    pub c0: f64,
    pub potential: PotentialParams,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            a: 1.0,
            b: 0.01,
            eps: 0.1,
            chi: 0.0,
            alpha: 0.0,
            c0: 0.0,
            potential: PotentialParams::default(),
        }
    }
}

impl ModelParams {
    /// Hard violations; the run cannot proceed with any of these.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.a > 0.0) {
            out.push(format!("H2: A must be > 0 (got {})", self.a));
        }
        if !(self.b > 0.0) {
            out.push(format!("H2: B must be > 0 (got {})", self.b));
        }
        if !(self.eps >= 0.0) {
            out.push(format!("H2: eps must be >= 0 (got {})", self.eps));
        }
        if !(self.alpha >= 0.0) {
            out.push(format!("H2: alpha must be >= 0 (got {})", self.alpha));
        }
        if !self.chi.is_finite() {
            out.push(format!("H2: chi must be finite (got {})", self.chi));
        }
        if !(self.c0 > -1.0 && self.c0 < 1.0) {
            out.push(format!("H2: c0 must lie in (-1, 1) (got {})", self.c0));
        }
        out.extend(self.potential.violations());
        out
    }

    /// Admissible settings that fall outside the strict hypotheses.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.eps == 0.0 {
            out.push("H2 expects eps > 0; barrier diagnostics are unavailable with eps = 0".to_string());
        }
        if self.alpha == 0.0 {
            out.push("H2 expects alpha > 0; running the mass-conserving case alpha = 0".to_string());
        }
        out
    }

    pub fn check(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(v.join("; ")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Exact logarithmic potential with the barrier-preserving Newton solve.
    ExactLog,
    /// κ-regularized potential (κ taken from `ModelParams::potential.kappa`).
    Regularized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub newton_tol: f64,
    pub newton_max_iters: usize,
    pub barrier_margin: f64,
    pub kappa_schedule: Vec<f64>,
    /// Relative tolerance of the inner GMRES solve.
    pub linear_tol: f64,
    pub gmres_restart: usize,
    pub max_linear_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt: 1e-3,
            scheme: Scheme::ExactLog,
            newton_tol: 1e-10,
            newton_max_iters: 50,
            barrier_margin: 1e-12,
            kappa_schedule: vec![0.2, 0.1, 0.05, 0.025],
            linear_tol: 1e-12,
            gmres_restart: 40,
            max_linear_iters: 400,
        }
    }
}

impl SolverConfig {
    pub fn with_dt(dt: f64) -> SolverConfig {
        SolverConfig {
            dt,
            ..SolverConfig::default()
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            out.push(format!("dt must be > 0 (got {})", self.dt));
        }
        if !(self.barrier_margin > 0.0 && self.barrier_margin <= 1e-6) {
            out.push(format!("barrier_margin must lie in (0, 1e-6] (got {})", self.barrier_margin));
        }
        if !(self.newton_tol > 0.0) {
            out.push(format!("newton_tol must be > 0 (got {})", self.newton_tol));
        }
        if self.newton_max_iters == 0 {
            out.push("newton_max_iters must be >= 1".to_string());
        }
        if let Some(k) = self.kappa_schedule.iter().find(|k| !(**k > 0.0)) {
            out.push(format!("kappa_schedule entries must be > 0 (got {k})"));
        }
        out
    }
}

/// Phase and nutrient at one time level.
#[derive(Clone, Debug)]
pub struct State {
    pub phi: ScalarField,
    pub sigma: ScalarField,
    pub t: f64,
    pub step_index: u64,
    /// Phase at the previous accepted step, for the difference quotient.
    pub prev_phi: Option<ScalarField>,
    /// Time step that produced this state (0 for initial data).
    pub dt_last: f64,
}

impl State {
    pub fn new(phi: ScalarField, sigma: ScalarField) -> Result<State> {
        if phi.grid() != sigma.grid() {
            return Err(Error::GridMismatch);
        }
        if !phi.is_finite() || !sigma.is_finite() {
            return Err(Error::InvalidField("initial data must be finite".into()));
        }
        Ok(State {
            phi,
            sigma,
            t: 0.0,
            step_index: 0,
            prev_phi: None,
            dt_last: 0.0,
        })
    }

    pub fn at_time(mut self, t: f64) -> State {
        self.t = t;
        self
    }

    /// Backward difference quotient `(φⁿ − φⁿ⁻¹)/Δt`; zero for initial data.
    pub fn phi_t(&self) -> ScalarField {
        match &self.prev_phi {
            Some(prev) if self.dt_last > 0.0 => {
                let inv = 1.0 / self.dt_last;
                self.phi.zip_map_unchecked(prev, |a, b| (a - b) * inv)
            }
            _ => ScalarField::zeros(self.phi.grid()),
        }
    }

    /// Moves weak-type data strictly inside (−1, 1): `φ ← (1 − 10⁻⁶) φ`.
    pub fn project_interior(mut self) -> State {
        if self.phi.max_abs() > 1.0 - 1e-6 {
            self.phi = self.phi.scaled(1.0 - 1e-6);
        }
        self
    }
}

/// Per-step solver statistics handed to observers.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepStats {
    pub newton: NewtonStats,
}

/// Advances one step with the scheme selected in `cfg`.
pub fn step(state: &State, mp: &ModelParams, cfg: &SolverConfig) -> Result<State> {
    step_with_stats(state, mp, cfg).map(|(s, _)| s)
}

/// One step with the κ-regularized potential (`κ = mp.potential.kappa`).
/// Iterates may leave [−1, 1]; no barrier is enforced.
pub fn step_regularized(state: &State, mp: &ModelParams, cfg: &SolverConfig) -> Result<State> {
    let convex = ConvexPart::regularized(&mp.potential, mp.potential.kappa)?;
    advance(state, mp, cfg, convex, None).map(|(s, _)| s)
}

pub fn step_with_stats(state: &State, mp: &ModelParams, cfg: &SolverConfig) -> Result<(State, StepStats)> {
    match cfg.scheme {
        Scheme::ExactLog => advance(
            state,
            mp,
            cfg,
            ConvexPart::exact(&mp.potential),
            Some(cfg.barrier_margin),
        ),
        Scheme::Regularized => {
            let convex = ConvexPart::regularized(&mp.potential, mp.potential.kappa)?;
            advance(state, mp, cfg, convex, None)
        }
    }
}

/// The convex part the scheme in `cfg` evaluates.
pub fn convex_part(mp: &ModelParams, cfg: &SolverConfig) -> Result<ConvexPart> {
    match cfg.scheme {
        Scheme::ExactLog => Ok(ConvexPart::exact(&mp.potential)),
        Scheme::Regularized => ConvexPart::regularized(&mp.potential, mp.potential.kappa),
    }
}

fn advance(
    state: &State,
    mp: &ModelParams,
    cfg: &SolverConfig,
    convex: ConvexPart,
    barrier: Option<f64>,
) -> Result<(State, StepStats)> {
    let dt = cfg.dt;
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be > 0 (got {dt})")));
    }
    if let Some(margin) = barrier {
        let m = state.phi.max_abs();
        if m > 1.0 - margin {
            return Err(Error::BarrierBreach { t: state.t, max_abs: m });
        }
    }

    let problem = ImplicitProblem::new(state, mp, dt, convex, barrier);
    let shifted = state.phi.shifted(problem.target_mean() - mean(&state.phi));
    let guess = match barrier {
        Some(margin) if shifted.max_abs() > 1.0 - margin => state.phi.clone(),
        _ => shifted,
    };
    let (phi, newton) = newton_field_solve(&problem, guess, &NewtonSettings::from(cfg)).map_err(|e| match e {
        Error::BarrierBreach { max_abs, .. } => Error::BarrierBreach { t: state.t + dt, max_abs },
        other => other,
    })?;

    let lap_phi = laplacian_neumann(&phi);
    let rhs = state.sigma.zip_map_unchecked(&lap_phi, |s, l| s - mp.chi * dt * l);
    let sigma = shifted_inverse(&rhs, 1.0, dt);

    let next = State {
        phi,
        sigma,
        t: state.t + dt,
        step_index: state.step_index + 1,
        prev_phi: Some(state.phi.clone()),
        dt_last: dt,
    };
    Ok((next, StepStats { newton }))
}

/// Number of fixed steps of size `dt` needed to reach `t_end` from `t0`.
pub fn steps_to_reach(t0: f64, t_end: f64, dt: f64) -> u64 {
    if t_end <= t0 {
        return 0;
    }
    ((t_end - t0) / dt - 1e-9).ceil().max(0.0) as u64
}

/// Steps until `t ≥ t_end`, calling `observer(prev, next, stats)` on every
/// accepted step. The observer may stop the run early with
/// `ControlFlow::Break`; the state reached so far is returned.
pub fn run<F>(state0: &State, mp: &ModelParams, cfg: &SolverConfig, t_end: f64, mut observer: F) -> Result<State>
where
    F: FnMut(&State, &State, &StepStats) -> ControlFlow<()>,
{
    let n = steps_to_reach(state0.t, t_end, cfg.dt);
    let mut state = state0.clone();
    for _ in 0..n {
        let (next, stats) = step_with_stats(&state, mp, cfg)?;
        let flow = observer(&state, &next, &stats);
        state = next;
        if flow.is_break() {
            break;
        }
    }
    Ok(state)
}

/// The scheme's chemical potential `μⁿ⁺¹` recovered from two consecutive
/// states.
pub fn scheme_mu(prev: &State, next: &State, mp: &ModelParams, cfg: &SolverConfig) -> Result<ScalarField> {
    let convex = convex_part(mp, cfg)?;
    let problem = ImplicitProblem::new(prev, mp, cfg.dt, convex, None);
    problem.mu(&next.phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn params() -> ModelParams {
        ModelParams {
            a: 1.0,
            b: 0.01,
            eps: 0.1,
            chi: 0.5,
            alpha: 1.0,
            c0: 0.1,
            potential: PotentialParams::new(1.0, 2.0).unwrap(),
        }
    }

    #[test]
    fn validation_collects_everything() {
        let mut mp = params();
        mp.b = 0.0;
        mp.c0 = 1.0;
        mp.potential.theta0 = 0.5;
        let v = mp.violations();
        assert_eq!(v.len(), 3, "{v:?}");
        assert!(v.iter().any(|m| m.contains("H2: B must be > 0")));
        assert!(v.iter().any(|m| m.contains("c0 must lie in (-1, 1)")));
        assert!(v.iter().any(|m| m.contains("theta0 - theta := K")));
        mp = params();
        mp.eps = 0.0;
        mp.alpha = 0.0;
        assert!(mp.violations().is_empty());
        assert_eq!(mp.warnings().len(), 2);
    }

    #[test]
    fn constant_state_is_a_fixed_point() {
        let g = Grid::line(33, 1.0).unwrap();
        let mp = params();
        let s0 = State::new(ScalarField::constant(&g, mp.c0), ScalarField::constant(&g, 0.3)).unwrap();
        let s1 = step(&s0, &mp, &SolverConfig::with_dt(0.1)).unwrap();
        for (a, b) in s1.phi.values().iter().zip(s0.phi.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in s1.sigma.values().iter().zip(s0.sigma.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_recursion_single_step() {
        let g = Grid::line(33, 1.0).unwrap();
        let mut mp = params();
        mp.c0 = 0.0;
        let phi = ScalarField::from_fn(&g, |x| 0.5 + 0.2 * (3.0 * x[0]).cos()).fluctuation().shifted(0.5);
        let s0 = State::new(phi, ScalarField::zeros(&g)).unwrap();
        let s1 = step(&s0, &mp, &SolverConfig::with_dt(0.1)).unwrap();
        assert!((mean(&s1.phi) - 0.5 / 1.1).abs() < 1e-12);
        assert!(mean(&s1.sigma).abs() < 1e-12);
    }

    #[test]
    fn barrier_precondition() {
        let g = Grid::line(9, 1.0).unwrap();
        let s0 = State::new(ScalarField::constant(&g, 1.0 - 1e-13), ScalarField::zeros(&g)).unwrap();
        assert!(matches!(
            step(&s0, &params(), &SolverConfig::default()),
            Err(Error::BarrierBreach { .. })
        ));
    }

    #[test]
    fn regularized_needs_kappa() {
        let g = Grid::line(9, 1.0).unwrap();
        let s0 = State::new(ScalarField::zeros(&g), ScalarField::zeros(&g)).unwrap();
        assert_eq!(
            step_regularized(&s0, &params(), &SolverConfig::default()).unwrap_err(),
            Error::KappaZero
        );
    }

    #[test]
    fn run_with_end_at_start_is_identity() {
        let g = Grid::line(9, 1.0).unwrap();
        let s0 = State::new(ScalarField::constant(&g, 0.2), ScalarField::zeros(&g)).unwrap();
        let mut calls = 0;
        let s = run(&s0, &params(), &SolverConfig::default(), 0.0, |_, _, _| {
            calls += 1;
            ControlFlow::Continue(())
        })
        .unwrap();
        assert_eq!(calls, 0);
        assert_eq!(s.phi.values(), s0.phi.values());
        assert_eq!(steps_to_reach(0.0, 0.1, 0.01), 10);
        assert_eq!(steps_to_reach(0.0, 1.0, 1e-3), 1000);
    }
}
