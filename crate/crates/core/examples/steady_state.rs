//! Relaxation to a stationary state, stable and spinodal regimes.

use chlab::dynamics::{dispersion_rates, ModelParams, SolverConfig, State};
use chlab::experiments::init::{random_fluctuation, STREAM_PHI, STREAM_SIGMA};
use chlab::grid::{Grid, ScalarField};
use chlab::potential::PotentialParams;
use chlab::steady::{relax_to_steady, SteadyTolerances};

fn main() -> chlab::Result<()> {
    // Ψ″(0) < 0, but every mode decays on this domain
    let stable = ModelParams {
        a: 1.0,
        b: 0.1,
        eps: 0.1,
        chi: 0.5,
        alpha: 1.0,
        c0: 0.0,
        potential: PotentialParams::new(1.0, 1.5)?,
    };
    let grid = Grid::line(65, 1.0)?;
    let top = (1..grid.n_per_axis()[0])
        .map(|k| dispersion_rates(&stable, grid.axis_eigenvalues(0)[k]).map(|r| r[0].re))
        .collect::<chlab::Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::MIN, f64::max);
    println!("stable regime: largest linear rate {top:.4}");
    let s0 = State::new(
        random_fluctuation(&grid, 5, STREAM_PHI, 0.05).shifted(0.1),
        random_fluctuation(&grid, 5, STREAM_SIGMA, 0.05).shifted(0.2),
    )?;
    let tol = SteadyTolerances {
        t_max: 200.0,
        ..SteadyTolerances::default()
    };
    let (_, rep) = relax_to_steady(&s0, &stable, &SolverConfig::with_dt(1e-2), &tol)?;
    println!(
        "  converged {} at t = {:.2}, residual {:.2e}, |mean φ − c0| {:.2e}",
        rep.converged,
        rep.t,
        rep.max_residual(),
        rep.mean_phi_err
    );

    let spinodal = ModelParams {
        b: 0.02,
        potential: PotentialParams::new(1.0, 2.0)?,
        ..stable
    };
    let grid = Grid::line(129, 4.0)?;
    let s0 = State::new(random_fluctuation(&grid, 5, STREAM_PHI, 0.1), ScalarField::zeros(&grid))?;
    let tol = SteadyTolerances {
        t_max: 2000.0,
        ..SteadyTolerances::default()
    };
    let (s, rep) = relax_to_steady(&s0, &spinodal, &SolverConfig::with_dt(1e-2), &tol)?;
    println!(
        "spinodal regime: converged {} at t = {:.1}, residual {:.2e}, δ∞ = {:.5}, φ ∈ [{:.4}, {:.4}]",
        rep.converged,
        rep.t,
        rep.max_residual(),
        rep.delta_inf,
        s.phi.min(),
        s.phi.max()
    );
    Ok(())
}
