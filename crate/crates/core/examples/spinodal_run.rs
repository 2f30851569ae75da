//! Spinodal decomposition with chemotaxis, printing the diagnostics every
//! 500 steps.

use std::ops::ControlFlow;

use chlab::diagnostics::DiagnosticsRecord;
use chlab::dynamics::{run, ModelParams, SolverConfig, State};
use chlab::experiments::init::{random_fluctuation, STREAM_PHI, STREAM_SIGMA};
use chlab::grid::Grid;
use chlab::potential::PotentialParams;

fn main() -> chlab::Result<()> {
    let grid = Grid::line(129, 1.0)?;
    let mp = ModelParams {
        a: 1.0,
        b: 0.01,
        eps: 0.1,
        chi: 0.5,
        alpha: 0.1,
        c0: 0.0,
        potential: PotentialParams::new(1.0, 2.0)?,
    };
    let cfg = SolverConfig::with_dt(1e-3);
    let phi = random_fluctuation(&grid, 4, STREAM_PHI, 0.5);
    let sigma = random_fluctuation(&grid, 4, STREAM_SIGMA, 0.1).shifted(0.3);
    let s0 = State::new(phi, sigma)?;

    let r0 = DiagnosticsRecord::initial(&s0, &mp, &cfg)?;
    println!("{:>6} {:>10} {:>12} {:>12} {:>10} {:>4}", "t", "phi_mean", "E", "D", "delta", "it");
    println!("{:>6.2} {:>10.6} {:>12.6} {:>12.4e} {:>10.6} {:>4}", r0.t, r0.phi_mean, r0.e, r0.d, r0.delta, 0);
    let mut err = None;
    let last = run(&s0, &mp, &cfg, 3.0, |prev, next, stats| {
        if next.step_index % 500 != 0 {
            return ControlFlow::Continue(());
        }
        match DiagnosticsRecord::from_step(prev, next, &mp, &cfg, stats) {
            Ok(r) => {
                println!("{:>6.2} {:>10.6} {:>12.6} {:>12.4e} {:>10.6} {:>4}", r.t, r.phi_mean, r.e, r.d, r.delta, r.newton_iters);
                ControlFlow::Continue(())
            }
            Err(e) => {
                err = Some(e);
                ControlFlow::Break(())
            }
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    println!("final: min φ = {:.6}, max φ = {:.6}", last.phi.min(), last.phi.max());
    Ok(())
}
