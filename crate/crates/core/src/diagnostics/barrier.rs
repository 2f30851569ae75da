//! Comparison of a trajectory's extremes against the scalar barrier ODEs
//!
//! ```text
//! ε y±′ + AΨ₀′(y±) = ±C_h,   y±(0) = ±(1 − δ₀)
//! ```
//!
//! integrated by implicit Euler at the trajectory's time step. At a maximum
//! node of `φⁿ⁺¹` the scheme gives `ε(φⁿ⁺¹ − φⁿ)/Δt + AΨ₀′(φⁿ⁺¹) ≤ h̃ ≤ C_h`, so
//! the discrete envelope bounds `max φ` step by step whenever `C_h` bounds
//! every step's `‖h̃‖_∞`. `C_h` is the supremum of the recorded values.

use serde::Serialize;

use crate::dynamics::ModelParams;
use crate::error::{Error, Result};
use crate::potential::newton_scalar_solve;

use super::DiagnosticsRecord;

/// Slack allowed in the sandwich comparison for solver round-off.
pub const SANDWICH_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct BarrierTrace {
    pub times: Vec<f64>,
    pub y_plus: Vec<f64>,
    pub y_minus: Vec<f64>,
    pub min_phi: Vec<f64>,
    pub max_phi: Vec<f64>,
    pub c_h: f64,
    pub delta0: f64,
    /// `y₋ ≤ min φ` and `max φ ≤ y₊` at every sample (up to [`SANDWICH_SLACK`]).
    pub holds: bool,
    pub violations: usize,
    /// Smallest of `y₊ − max φ` and `min φ − y₋` over all samples.
    pub worst_gap: f64,
    /// `1 − sup_t max(|y₊|, |y₋|)`.
    pub margin: f64,
}

/// One implicit Euler step of `εy′ + AΨ₀′(y) = c`.
pub fn barrier_ode_step(y: f64, c: f64, mp: &ModelParams, dt: f64) -> Result<f64> {
    if mp.eps == 0.0 {
        return Err(Error::EpsZero);
    }
    newton_scalar_solve(y + dt * c / mp.eps, dt * mp.a / mp.eps, &mp.potential)
}

/// Builds the envelope for `records` (consecutive steps of one run, the
/// first being the initial data). Gaps between records are bridged with
/// several ODE steps. `delta0 = None` uses `1 − ‖φ₀‖_∞`.
pub fn barrier_check(records: &[DiagnosticsRecord], mp: &ModelParams, dt: f64, delta0: Option<f64>) -> Result<BarrierTrace> {
    if mp.eps == 0.0 {
        return Err(Error::EpsZero);
    }
    let first = records
        .first()
        .ok_or_else(|| Error::InvalidParameter("barrier check needs at least one record".into()))?;
    let sup0 = first.min_phi.abs().max(first.max_phi.abs());
    let delta0 = delta0.unwrap_or(1.0 - sup0);
    if !(delta0 > 0.0 && delta0 < 1.0) || sup0 > 1.0 - delta0 {
        return Err(Error::InvalidParameter(format!(
            "delta0 = {delta0} is incompatible with initial sup |phi| = {sup0}"
        )));
    }
    let c_h = records.iter().map(|r| r.htilde_sup).fold(0.0, f64::max);

    let n = records.len();
    let mut trace = BarrierTrace {
        times: Vec::with_capacity(n),
        y_plus: Vec::with_capacity(n),
        y_minus: Vec::with_capacity(n),
        min_phi: Vec::with_capacity(n),
        max_phi: Vec::with_capacity(n),
        c_h,
        delta0,
        holds: true,
        violations: 0,
        worst_gap: f64::INFINITY,
        margin: 0.0,
    };
    let (mut yp, mut ym) = (1.0 - delta0, -(1.0 - delta0));
    let mut sup_y: f64 = 1.0 - delta0;
    let mut t_prev = first.t;
    for (k, r) in records.iter().enumerate() {
        if k > 0 {
            let substeps = ((r.t - t_prev) / dt).round().max(1.0) as usize;
            for _ in 0..substeps {
                yp = barrier_ode_step(yp, c_h, mp, dt)?;
                ym = barrier_ode_step(ym, -c_h, mp, dt)?;
            }
            t_prev = r.t;
        }
        sup_y = sup_y.max(yp.abs()).max(ym.abs());
        let gap = (yp - r.max_phi).min(r.min_phi - ym);
        trace.worst_gap = trace.worst_gap.min(gap);
        if gap < -SANDWICH_SLACK {
            trace.violations += 1;
            trace.holds = false;
        }
        trace.times.push(r.t);
        trace.y_plus.push(yp);
        trace.y_minus.push(ym);
        trace.min_phi.push(r.min_phi);
        trace.max_phi.push(r.max_phi);
    }
    trace.margin = 1.0 - sup_y;
    Ok(trace)
}
