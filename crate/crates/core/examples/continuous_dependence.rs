//! Distance between two trajectories whose initial data differ by an
//! equal-mean perturbation, for two perturbation sizes.

use chlab::diagnostics::dual_distance;
use chlab::dynamics::{step, ModelParams, SolverConfig, State};
use chlab::experiments::init::{random_fluctuation, STREAM_PHI, STREAM_SIGMA};
use chlab::grid::Grid;
use chlab::potential::PotentialParams;

fn main() -> chlab::Result<()> {
    let grid = Grid::line(65, 1.0)?;
    let mp = ModelParams {
        a: 1.0,
        b: 0.01,
        eps: 0.1,
        chi: 0.5,
        alpha: 0.5,
        c0: 0.0,
        potential: PotentialParams::new(1.0, 2.0)?,
    };
    let cfg = SolverConfig::with_dt(1e-3);
    let base = State::new(
        random_fluctuation(&grid, 11, STREAM_PHI, 0.5),
        random_fluctuation(&grid, 11, STREAM_SIGMA, 0.1).shifted(0.3),
    )?;
    for eta in [1e-3, 1e-4] {
        let pert = random_fluctuation(&grid, 99, STREAM_PHI, eta);
        let mut a = base.clone();
        let mut b = State::new(base.phi.add(&pert)?, base.sigma.clone())?;
        let d0 = dual_distance(&a, &b, mp.eps)?.d_total;
        let mut sup = d0;
        for _ in 0..1000 {
            a = step(&a, &mp, &cfg)?;
            b = step(&b, &mp, &cfg)?;
            sup = sup.max(dual_distance(&a, &b, mp.eps)?.d_total);
        }
        let d1 = dual_distance(&a, &b, mp.eps)?;
        println!(
            "η = {eta:e}: d(0) = {d0:.4e}, d(T) = {:.4e} (φ part {:.3e}, σ part {:.3e}), sup d / d(0) = {:.4}",
            d1.d_total,
            d1.d_phi,
            d1.d_sigma,
            sup / d0
        );
    }
    Ok(())
}
