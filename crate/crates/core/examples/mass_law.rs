//! Mean of φ under the Oono term against the discrete recursion and the
//! exponential law, and conservation of the mean of σ.

use chlab::dynamics::{step, ModelParams, SolverConfig, State};
use chlab::experiments::init::{random_fluctuation, STREAM_PHI, STREAM_SIGMA};
use chlab::grid::{mean, Grid};
use chlab::potential::PotentialParams;

fn main() -> chlab::Result<()> {
    let grid = Grid::line(129, 1.0)?;
    let mp = ModelParams {
        a: 1.0,
        b: 0.01,
        eps: 0.1,
        chi: 0.5,
        alpha: 1.0,
        c0: 0.1,
        potential: PotentialParams::new(1.0, 2.0)?,
    };
    let (phi0, t_end) = (0.5, 2.0);
    for dt in [1e-3, 5e-4] {
        let cfg = SolverConfig::with_dt(dt);
        let mut s = State::new(
            random_fluctuation(&grid, 11, STREAM_PHI, 0.2).shifted(phi0),
            random_fluctuation(&grid, 11, STREAM_SIGMA, 0.1).shifted(0.3),
        )?;
        let sigma_bar = mean(&s.sigma);
        let (mut rec_err, mut law_err, mut sigma_err) = (0.0f64, 0.0f64, 0.0f64);
        while s.t < t_end - 1e-12 {
            let next = step(&s, &mp, &cfg)?;
            let predicted = (mean(&s.phi) + dt * mp.alpha * mp.c0) / (1.0 + dt * mp.alpha);
            let law = mp.c0 + (-mp.alpha * next.t).exp() * (phi0 - mp.c0);
            rec_err = rec_err.max((mean(&next.phi) - predicted).abs());
            law_err = law_err.max((mean(&next.phi) - law).abs());
            sigma_err = sigma_err.max((mean(&next.sigma) - sigma_bar).abs());
            s = next;
        }
        println!("dt = {dt:e}: recursion {rec_err:.2e}, exponential law {law_err:.3e}, sigma mean drift {sigma_err:.2e}");
    }
    Ok(())
}
