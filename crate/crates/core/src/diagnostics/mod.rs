//! Discrete energies, dissipation rates and auxiliary potentials evaluated on
//! states produced by [`crate::dynamics`].
//!
//! Time derivatives are always the backward difference quotient of accepted
//! states, and `μ` is the scheme's `μⁿ⁺¹`.

mod barrier;

use serde::Serialize;

use crate::dynamics::{convex_part, scheme_mu, ModelParams, SolverConfig, State, StepStats};
use crate::error::{Error, Result};
use crate::grid::{
    dual_norm_h1p, dual_norm_v0, grad_inner, grad_norm, inv_laplacian_projected, l2_inner, l2_norm,
    laplacian_neumann, mean, ScalarField,
};
use crate::potential::ConvexPart;

pub use barrier::{barrier_check, barrier_ode_step, BarrierTrace};

/// `ℰ = ∫(AΨ(φ) − χσφ) + (B/2)‖∇φ‖² + ½‖σ‖²` with the exact potential.
pub fn energy_e(state: &State, mp: &ModelParams) -> Result<f64> {
    energy_e_with(state, mp, &ConvexPart::exact(&mp.potential))
}

/// Energy with the potential of `convex` (exact or κ-regularized).
pub fn energy_e_with(state: &State, mp: &ModelParams, convex: &ConvexPart) -> Result<f64> {
    let (phi, sigma) = (&state.phi, &state.sigma);
    let density = phi.try_map(|p| convex.full_value(p))?;
    let bulk = phi.zip_map(sigma, |p, s| -mp.chi * s * p)?;
    let potential = mp.a * mean(&density) * phi.grid().volume();
    let coupling = mean(&bulk) * phi.grid().volume();
    let gradient = 0.5 * mp.b * grad_inner(phi, phi)?;
    let sigma2 = 0.5 * l2_inner(sigma, sigma)?;
    Ok(potential + coupling + gradient + sigma2)
}

/// `ℱ = ℰ + (α/2)‖φ − φ̄‖²_{V₀′}`.
pub fn lyapunov_f(state: &State, mp: &ModelParams) -> Result<f64> {
    lyapunov_f_with(state, mp, &ConvexPart::exact(&mp.potential))
}

pub fn lyapunov_f_with(state: &State, mp: &ModelParams, convex: &ConvexPart) -> Result<f64> {
    let e = energy_e_with(state, mp, convex)?;
    let v = dual_norm_v0(&state.phi.fluctuation())?;
    Ok(e + 0.5 * mp.alpha * v * v)
}

/// `𝒟 = ‖∇μⁿ⁺¹‖² + ‖∇(σⁿ⁺¹ − χφⁿ⁺¹)‖² + ε‖(φⁿ⁺¹ − φⁿ)/Δt‖²`.
pub fn dissipation_d(prev: &State, next: &State, mp: &ModelParams, cfg: &SolverConfig) -> Result<f64> {
    let mu = scheme_mu(prev, next, mp, cfg)?;
    dissipation_from_mu(&mu, prev, next, mp, cfg.dt)
}

/// `𝒢`: as [`dissipation_d`] with `∇μ̃` in place of `∇μ`.
pub fn dissipation_g(prev: &State, next: &State, mp: &ModelParams, cfg: &SolverConfig) -> Result<f64> {
    let mu = tilde_mu_with(next, mp, &convex_part(mp, cfg)?)?;
    dissipation_from_mu(&mu, prev, next, mp, cfg.dt)
}

fn dissipation_from_mu(mu: &ScalarField, prev: &State, next: &State, mp: &ModelParams, dt: f64) -> Result<f64> {
    let gm = grad_norm(mu);
    let w = next.sigma.axpy(-mp.chi, &next.phi)?;
    let gw = grad_norm(&w);
    let d = next.phi.sub(&prev.phi)?.scaled(1.0 / dt);
    let dn = l2_norm(&d);
    Ok(gm * gm + gw * gw + mp.eps * dn * dn)
}

/// Signed balance `ℰⁿ⁺¹ − ℰⁿ + Δt(𝒟 + α∫(φⁿ⁺¹ − c₀)μⁿ⁺¹)`.
pub fn energy_balance_signed(prev: &State, next: &State, mp: &ModelParams, cfg: &SolverConfig) -> Result<f64> {
    let convex = convex_part(mp, cfg)?;
    let mu = scheme_mu(prev, next, mp, cfg)?;
    let e0 = energy_e_with(prev, mp, &convex)?;
    let e1 = energy_e_with(next, mp, &convex)?;
    let d = dissipation_from_mu(&mu, prev, next, mp, cfg.dt)?;
    let oono = mp.alpha * l2_inner(&next.phi.shifted(-mp.c0), &mu)?;
    Ok(e1 - e0 + cfg.dt * (d + oono))
}

/// Absolute value of [`energy_balance_signed`].
pub fn energy_balance_residual(prev: &State, next: &State, mp: &ModelParams, cfg: &SolverConfig) -> Result<f64> {
    energy_balance_signed(prev, next, mp, cfg).map(f64::abs)
}

/// `μ̃ = AΨ′(φ) − BΔφ − χσ + ε∂ₜφ + α𝒩(φ − φ̄)` with the exact potential.
pub fn tilde_mu(state: &State, mp: &ModelParams) -> Result<ScalarField> {
    tilde_mu_with(state, mp, &ConvexPart::exact(&mp.potential))
}

pub fn tilde_mu_with(state: &State, mp: &ModelParams, convex: &ConvexPart) -> Result<ScalarField> {
    let phi = &state.phi;
    let dpsi = phi.try_map(|p| convex.full_d1(p))?;
    let lap = laplacian_neumann(phi);
    let nphi = inv_laplacian_projected(phi);
    let phi_t = state.phi_t();
    let vals = (0..phi.len())
        .map(|i| {
            mp.a * dpsi.values()[i] - mp.b * lap.values()[i] - mp.chi * state.sigma.values()[i]
                + mp.eps * phi_t.values()[i]
                + mp.alpha * nphi.values()[i]
        })
        .collect();
    ScalarField::from_values(phi.grid(), vals)
}

/// Right-hand side `h̃` of `ε∂ₜφ − BΔφ + AΨ₀′(φ) = h̃`, all at one time level:
///
/// ```text
/// h̃ = χ(σ − σ̄) + A·mean(Ψ′(φ)) + ε·mean(∂ₜφ) − 𝒩(∂ₜφ − mean ∂ₜφ) − α𝒩(φ − φ̄) + Aθ₀φ
/// ```
pub fn tilde_h(state: &State, mp: &ModelParams) -> Result<ScalarField> {
    if mp.eps == 0.0 {
        return Err(Error::EpsZero);
    }
    let convex = ConvexPart::exact(&mp.potential);
    let phi = &state.phi;
    let dpsi = phi.try_map(|p| convex.full_d1(p))?;
    let phi_t = state.phi_t();
    assemble_h(
        mp,
        &state.sigma,
        mean(&dpsi),
        &phi_t,
        &inv_laplacian_projected(phi),
        phi,
    )
}

/// `h̃` as realized by one step of the scheme (mixed time levels):
///
/// ```text
/// h̃ = χ(σⁿ − σ̄) + A·mean(Ψ₀′(φⁿ⁺¹)) − Aθ₀φ̄ⁿ + ε·mean(d) − 𝒩(d − d̄) − α𝒩(φⁿ⁺¹ − φ̄ⁿ⁺¹) + Aθ₀φⁿ
/// ```
///
/// with `d = (φⁿ⁺¹ − φⁿ)/Δt`. It satisfies
/// `εd − BΔ_hφⁿ⁺¹ + AΨ₀′(φⁿ⁺¹) = h̃` exactly, which is what the discrete
/// comparison argument needs.
pub fn tilde_h_step(prev: &State, next: &State, mp: &ModelParams, cfg: &SolverConfig) -> Result<ScalarField> {
    let convex = convex_part(mp, cfg)?;
    let d0 = next.phi.try_map(|p| convex.d1(p))?;
    let psi_mean = mean(&d0) - mp.potential.theta0 * mean(&prev.phi);
    let d = next.phi.sub(&prev.phi)?.scaled(1.0 / cfg.dt);
    assemble_h(
        mp,
        &prev.sigma,
        psi_mean,
        &d,
        &inv_laplacian_projected(&next.phi),
        &prev.phi,
    )
}

/// Shared assembly; `psi_mean` is `mean(Ψ′)` (so `A·psi_mean` is the
/// constant), `local` is the field multiplied by `Aθ₀`.
fn assemble_h(
    mp: &ModelParams,
    sigma: &ScalarField,
    psi_mean: f64,
    phi_t: &ScalarField,
    n_phi: &ScalarField,
    local: &ScalarField,
) -> Result<ScalarField> {
    let sbar = mean(sigma);
    let tbar = mean(phi_t);
    let n_t = inv_laplacian_projected(phi_t);
    let at0 = mp.a * mp.potential.theta0;
    let c = mp.a * psi_mean + mp.eps * tbar;
    let vals = (0..sigma.len())
        .map(|i| {
            mp.chi * (sigma.values()[i] - sbar) + c - n_t.values()[i] - mp.alpha * n_phi.values()[i]
                + at0 * local.values()[i]
        })
        .collect();
    ScalarField::from_values(sigma.grid(), vals)
}

/// `‖h̃‖_∞`.
pub fn htilde_sup(h: &ScalarField) -> f64 {
    h.max_abs()
}

/// Dual-norm distances between two states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DualDistance {
    pub d_phi: f64,
    pub d_sigma: f64,
    /// `sqrt(d_phi² + ε‖φ₁ − φ₂‖² + d_sigma²)`.
    pub d_total: f64,
}

pub fn dual_distance(a: &State, b: &State, eps: f64) -> Result<DualDistance> {
    let dphi = a.phi.sub(&b.phi)?;
    let dsig = a.sigma.sub(&b.sigma)?;
    let d_phi = dual_norm_h1p(&dphi);
    let d_sigma = dual_norm_h1p(&dsig);
    let l2 = l2_norm(&dphi);
    Ok(DualDistance {
        d_phi,
        d_sigma,
        d_total: (d_phi * d_phi + eps * l2 * l2 + d_sigma * d_sigma).sqrt(),
    })
}

/// One diagnostics row; field order is the CSV column order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub phi_mean: f64,
    pub sigma_mean: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub energy_balance_residual: f64,
    pub min_phi: f64,
    pub max_phi: f64,
    pub delta: f64,
    pub newton_iters: usize,
    pub htilde_sup: f64,
}

impl DiagnosticsRecord {
    pub const COLUMNS: [&'static str; 12] = [
        "t",
        "phi_mean",
        "sigma_mean",
        "E",
        "F",
        "D",
        "energy_balance_residual",
        "min_phi",
        "max_phi",
        "delta",
        "newton_iters",
        "htilde_sup",
    ];

    /// Row for initial data: no dissipation, balance or Newton work; `h̃`
    /// taken with `∂ₜφ = 0`.
    pub fn initial(state: &State, mp: &ModelParams, cfg: &SolverConfig) -> Result<DiagnosticsRecord> {
        let convex = convex_part(mp, cfg)?;
        let e = energy_e_with(state, mp, &convex)?;
        let f = lyapunov_f_with(state, mp, &convex)?;
        let dpsi = state.phi.try_map(|p| convex.full_d1(p))?;
        let h = assemble_h(
            mp,
            &state.sigma,
            mean(&dpsi),
            &state.phi_t(),
            &inv_laplacian_projected(&state.phi),
            &state.phi,
        )?;
        Ok(Self::assemble(state, e, f, 0.0, 0.0, 0, htilde_sup(&h)))
    }

    pub fn from_step(
        prev: &State,
        next: &State,
        mp: &ModelParams,
        cfg: &SolverConfig,
        stats: &StepStats,
    ) -> Result<DiagnosticsRecord> {
        let convex = convex_part(mp, cfg)?;
        let mu = scheme_mu(prev, next, mp, cfg)?;
        let e0 = energy_e_with(prev, mp, &convex)?;
        let e1 = energy_e_with(next, mp, &convex)?;
        let f = lyapunov_f_with(next, mp, &convex)?;
        let d = dissipation_from_mu(&mu, prev, next, mp, cfg.dt)?;
        let oono = mp.alpha * l2_inner(&next.phi.shifted(-mp.c0), &mu)?;
        let balance = (e1 - e0 + cfg.dt * (d + oono)).abs();
        let h = tilde_h_step(prev, next, mp, cfg)?;
        Ok(Self::assemble(next, e1, f, d, balance, stats.newton.iterations, htilde_sup(&h)))
    }

    fn assemble(state: &State, e: f64, f: f64, d: f64, balance: f64, iters: usize, hsup: f64) -> DiagnosticsRecord {
        let (min_phi, max_phi) = (state.phi.min(), state.phi.max());
        DiagnosticsRecord {
            t: state.t,
            phi_mean: mean(&state.phi),
            sigma_mean: mean(&state.sigma),
            e,
            f,
            d,
            energy_balance_residual: balance,
            min_phi,
            max_phi,
            delta: 1.0 - min_phi.abs().max(max_phi.abs()),
            newton_iters: iters,
            htilde_sup: hsup,
        }
    }

    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.phi_mean,
            self.sigma_mean,
            self.e,
            self.f,
            self.d,
            self.energy_balance_residual,
            self.min_phi,
            self.max_phi,
            self.delta,
            self.htilde_sup,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::step;
    use crate::grid::Grid;
    use crate::potential::PotentialParams;

    fn mp() -> ModelParams {
        ModelParams {
            a: 1.0,
            b: 0.02,
            eps: 0.1,
            chi: 0.5,
            alpha: 0.0,
            c0: 0.0,
            potential: PotentialParams::new(1.0, 2.0).unwrap(),
        }
    }

    #[test]
    fn constant_state_energy() {
        let g = Grid::line(17, 1.0).unwrap();
        let s = State::new(ScalarField::zeros(&g), ScalarField::zeros(&g)).unwrap();
        assert!((energy_e(&s, &mp()).unwrap() - 1.0).abs() < 1e-14);
        let s = State::new(ScalarField::zeros(&g), ScalarField::constant(&g, 0.4)).unwrap();
        assert!((energy_e(&s, &mp()).unwrap() - 1.08).abs() < 1e-14);
    }

    #[test]
    fn energy_out_of_domain() {
        let g = Grid::line(5, 1.0).unwrap();
        let s = State::new(ScalarField::constant(&g, 1.2), ScalarField::zeros(&g)).unwrap();
        assert!(matches!(energy_e(&s, &mp()), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn constant_state_h_and_mu() {
        let g = Grid::line(9, 1.0).unwrap();
        let mut m = mp();
        m.chi = 0.0;
        m.c0 = 0.3;
        let s = State::new(ScalarField::constant(&g, 0.3), ScalarField::constant(&g, 0.2)).unwrap();
        let h = tilde_h(&s, &m).unwrap();
        let expect = 0.3f64.atanh();
        for v in h.values() {
            assert!((v - expect).abs() < 1e-14);
        }
        let mu = tilde_mu(&s, &m).unwrap();
        let mean_mu = mean(&mu);
        assert!(mu.values().iter().all(|v| (v - mean_mu).abs() < 1e-12));
        m.eps = 0.0;
        assert_eq!(tilde_h(&s, &m).unwrap_err(), Error::EpsZero);
    }

    #[test]
    fn step_h_matches_scheme_identity() {
        let g = Grid::line(33, 2.0).unwrap();
        let mut m = mp();
        m.alpha = 0.7;
        m.c0 = 0.1;
        let cfg = SolverConfig::with_dt(1e-2);
        let phi = ScalarField::from_fn(&g, |x| 0.2 + 0.5 * (2.0 * x[0]).cos());
        let sigma = ScalarField::from_fn(&g, |x| (x[0] * 1.3).sin());
        let s0 = State::new(phi, sigma).unwrap();
        let s1 = step(&s0, &m, &cfg).unwrap();
        let h = tilde_h_step(&s0, &s1, &m, &cfg).unwrap();
        let lap = laplacian_neumann(&s1.phi);
        for i in 0..g.node_count() {
            let p1 = s1.phi.values()[i];
            let lhs = m.eps * (p1 - s0.phi.values()[i]) / cfg.dt - m.b * lap.values()[i] + m.a * p1.atanh();
            assert!((lhs - h.values()[i]).abs() < 1e-8, "node {i}: {lhs} vs {}", h.values()[i]);
        }
    }

    #[test]
    fn dual_distance_constant_shift() {
        let g = Grid::line(9, 1.0).unwrap();
        let a = State::new(ScalarField::constant(&g, 0.3), ScalarField::zeros(&g)).unwrap();
        let b = State::new(ScalarField::constant(&g, 0.1), ScalarField::zeros(&g)).unwrap();
        let d = dual_distance(&a, &b, 0.0).unwrap();
        assert!((d.d_total - 0.2).abs() < 1e-14);
        assert_eq!(dual_distance(&a, &a, 0.1).unwrap().d_total, 0.0);
    }

    #[test]
    fn alpha_zero_energy_decreases_and_records() {
        let g = Grid::line(65, 1.0).unwrap();
        let m = mp();
        let cfg = SolverConfig::with_dt(1e-3);
        let phi = ScalarField::from_fn(&g, |x| 0.3 * (3.0 * std::f64::consts::PI * x[0]).cos());
        let mut s = State::new(phi, ScalarField::from_fn(&g, |x| x[0])).unwrap();
        let r0 = DiagnosticsRecord::initial(&s, &m, &cfg).unwrap();
        assert!(r0.is_finite());
        let mut e_prev = r0.e;
        for _ in 0..20 {
            let (next, stats) = crate::dynamics::step_with_stats(&s, &m, &cfg).unwrap();
            let r = DiagnosticsRecord::from_step(&s, &next, &m, &cfg, &stats).unwrap();
            assert!(r.d >= 0.0);
            assert!(r.e <= e_prev + 1e-10 * (1.0 + e_prev.abs()));
            assert!(energy_balance_signed(&s, &next, &m, &cfg).unwrap() <= 1e-12);
            e_prev = r.e;
            s = next;
        }
    }
}
