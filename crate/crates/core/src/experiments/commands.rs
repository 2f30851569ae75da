//! Experiment drivers. Each writes its files into the output directory and
//! returns the JSON summary it also stores as `summary.json`.

use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::diagnostics::{barrier_check, dual_distance, DiagnosticsRecord};
use crate::dynamics::{
    dispersion_rates, measure_mode_rates, run, step_with_stats, ModelParams, Scheme, SolverConfig, State, StepStats,
};
use crate::grid::l2_norm;
use crate::steady::{relax_to_steady_observed, SteadyReport};

use super::config::{ConfigError, RunConfig};
use super::init::{initial_state, random_fluctuation, STREAM_PHI};
use super::output::{write_json, write_snapshot, CsvWriter};
use super::ExpError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Run,
    Steady,
    Dispersion,
    Continuation,
    Compare,
    Barrier,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Run,
        Command::Steady,
        Command::Dispersion,
        Command::Continuation,
        Command::Compare,
        Command::Barrier,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Steady => "steady",
            Command::Dispersion => "dispersion",
            Command::Continuation => "continuation",
            Command::Compare => "compare",
            Command::Barrier => "barrier",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command `{s}`"))
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Turn failed checks into [`ExpError::CheckFailed`].
    pub strict: bool,
    /// Set asynchronously to request a clean stop.
    pub stop: Arc<AtomicBool>,
}

impl RunOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> RunOptions {
        RunOptions {
            out_dir: out_dir.into(),
            strict: false,
            stop: Arc::new(AtomicBool::new(false)),
        }
    }

    fn stopped(&self) -> bool {
        self.stop.load(Ordering::Relaxed)
    }
}

/// Verdict of a falsifiable check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub passed: bool,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub summary: Value,
    pub check: Option<CheckResult>,
    pub out_dir: PathBuf,
}

/// Runs `cmd`, writing all outputs to `opts.out_dir`.
pub fn execute(cmd: Command, cfg: &RunConfig, opts: &RunOptions) -> Result<Outcome, ExpError> {
    std::fs::create_dir_all(&opts.out_dir).map_err(|e| ExpError::Io(format!("{}: {e}", opts.out_dir.display())))?;
    let started = Instant::now();
    let result = match cmd {
        Command::Run => cmd_run(cfg, opts),
        Command::Steady => cmd_steady(cfg, opts),
        Command::Dispersion => cmd_dispersion(cfg, opts),
        Command::Continuation => cmd_continuation(cfg, opts),
        Command::Compare => cmd_compare(cfg, opts),
        Command::Barrier => cmd_barrier(cfg, opts),
    };
    let part = result?;
    let summary = json!({
        "command": cmd.name(),
        "config": cfg,
        "warnings": cfg.model.warnings(),
        "final": part.final_record,
        "steady": part.steady,
        "steps": part.steps,
        "truncated": part.truncated,
        "check": part.check,
        "details": part.details,
        "timing": { "wall_seconds": started.elapsed().as_secs_f64() },
    });
    write_json(&opts.out_dir.join("summary.json"), &summary)?;
    if part.truncated {
        return Err(ExpError::Interrupted {
            t: part.final_record.map(|r| r.t).unwrap_or(0.0),
        });
    }
    if let Some(c) = &part.check {
        if opts.strict && !c.passed {
            return Err(ExpError::CheckFailed(c.message.clone()));
        }
    }
    Ok(Outcome {
        summary,
        check: part.check,
        out_dir: opts.out_dir.clone(),
    })
}

#[derive(Default)]
struct Partial {
    final_record: Option<DiagnosticsRecord>,
    steady: Option<SteadyReport>,
    steps: u64,
    truncated: bool,
    check: Option<CheckResult>,
    details: Value,
}

/// Per-step observer writing diagnostics rows and snapshots.
struct Recorder<'a> {
    mp: ModelParams,
    cfg: SolverConfig,
    csv: CsvWriter,
    csv_every: u64,
    snap_dir: &'a Path,
    snap_every: u64,
    keep: Option<Vec<DiagnosticsRecord>>,
    last: DiagnosticsRecord,
    last_written: u64,
    steps: u64,
    error: Option<ExpError>,
    stop: &'a AtomicBool,
    interrupted: bool,
}

impl<'a> Recorder<'a> {
    fn new(
        state0: &State,
        mp: ModelParams,
        cfg: SolverConfig,
        run_cfg: &RunConfig,
        opts: &'a RunOptions,
        csv_name: &str,
        keep: bool,
    ) -> Result<Recorder<'a>, ExpError> {
        let mut csv = CsvWriter::create(
            &opts.out_dir.join(csv_name),
            "diagnostics",
            &run_cfg.to_ini(),
            &DiagnosticsRecord::COLUMNS,
        )?;
        let r0 = DiagnosticsRecord::initial(state0, &mp, &cfg)?;
        csv.record(&r0)?;
        Ok(Recorder {
            mp,
            cfg,
            csv,
            csv_every: run_cfg.output.csv_every as u64,
            snap_dir: &opts.out_dir,
            snap_every: run_cfg.output.snapshot_every as u64,
            keep: keep.then(|| vec![r0]),
            last: r0,
            last_written: 0,
            steps: 0,
            error: None,
            stop: &opts.stop,
            interrupted: false,
        })
    }

    fn observe(&mut self, prev: &State, next: &State, stats: &StepStats) -> ControlFlow<()> {
        match self.try_observe(prev, next, stats) {
            Ok(()) => {
                if self.stop.load(Ordering::Relaxed) {
                    self.interrupted = true;
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            }
            Err(e) => {
                self.error = Some(e);
                ControlFlow::Break(())
            }
        }
    }

    fn try_observe(&mut self, prev: &State, next: &State, stats: &StepStats) -> Result<(), ExpError> {
        let r = DiagnosticsRecord::from_step(prev, next, &self.mp, &self.cfg, stats)?;
        self.steps = next.step_index;
        if self.steps % self.csv_every == 0 {
            self.csv.record(&r)?;
            self.last_written = self.steps;
        }
        if self.snap_every > 0 && self.steps % self.snap_every == 0 {
            write_snapshot(&self.snap_dir.join(format!("snap_{:08}.chsnap", self.steps)), next)?;
        }
        if let Some(k) = &mut self.keep {
            k.push(r);
        }
        self.last = r;
        Ok(())
    }

    /// Writes the final row and snapshot; returns the kept records.
    fn finish(mut self, final_state: &State) -> Result<(DiagnosticsRecord, bool, u64, Vec<DiagnosticsRecord>), ExpError> {
        if let Some(e) = self.error.take() {
            let _ = self.csv.truncate_marker(self.last.t);
            let _ = self.csv.finish();
            return Err(e);
        }
        if self.last_written != self.steps {
            self.csv.record(&self.last)?;
        }
        if self.interrupted {
            self.csv.truncate_marker(self.last.t)?;
        }
        self.csv.finish()?;
        write_snapshot(&self.snap_dir.join("final.chsnap"), final_state)?;
        Ok((self.last, self.interrupted, self.steps, self.keep.unwrap_or_default()))
    }
}

/// Integrates to `t_end`, recording diagnostics. Solver errors still flush a
/// truncated CSV before propagating.
fn integrate(
    state0: &State,
    mp: ModelParams,
    cfg: SolverConfig,
    run_cfg: &RunConfig,
    opts: &RunOptions,
    csv_name: &str,
    keep: bool,
) -> Result<(State, DiagnosticsRecord, bool, u64, Vec<DiagnosticsRecord>), ExpError> {
    let mut rec = Recorder::new(state0, mp, cfg.clone(), run_cfg, opts, csv_name, keep)?;
    let res = run(state0, &mp, &cfg, run_cfg.time.t_end, |p, n, s| rec.observe(p, n, s));
    match res {
        Ok(state) => {
            let (last, truncated, steps, kept) = rec.finish(&state)?;
            Ok((state, last, truncated, steps, kept))
        }
        Err(e) => {
            let _ = rec.csv.truncate_marker(rec.last.t);
            let _ = rec.csv.finish();
            Err(e.into())
        }
    }
}

fn cmd_run(cfg: &RunConfig, opts: &RunOptions) -> Result<Partial, ExpError> {
    let s0 = initial_state(cfg)?;
    let (_, last, truncated, steps, _) = integrate(&s0, cfg.model_params(), cfg.solver_config(), cfg, opts, "diagnostics.csv", false)?;
    Ok(Partial {
        final_record: Some(last),
        steps,
        truncated,
        ..Partial::default()
    })
}

fn cmd_steady(cfg: &RunConfig, opts: &RunOptions) -> Result<Partial, ExpError> {
    let s0 = initial_state(cfg)?;
    let mp = cfg.model_params();
    let solver = cfg.solver_config();
    let mut rec = Recorder::new(&s0, mp, solver.clone(), cfg, opts, "diagnostics.csv", false)?;
    let res = relax_to_steady_observed(&s0, &mp, &solver, &cfg.steady, |p, n, s| rec.observe(p, n, s));
    let (state, report) = match res {
        Ok(v) => v,
        Err(e) => {
            let _ = rec.csv.truncate_marker(rec.last.t);
            let _ = rec.csv.finish();
            return Err(e.into());
        }
    };
    let (last, truncated, steps, _) = rec.finish(&state)?;
    let check = CheckResult {
        passed: report.converged,
        message: if report.converged {
            format!("converged at t = {} with residual {:e}", report.t, report.max_residual())
        } else {
            format!(
                "not converged by t = {} (rate {:e}, residual {:e})",
                report.t,
                report.rate,
                report.max_residual()
            )
        },
    };
    Ok(Partial {
        final_record: Some(last),
        steady: Some(report),
        steps,
        truncated,
        check: Some(check),
        details: Value::Null,
    })
}

#[derive(Serialize)]
struct DispersionRow {
    mode: usize,
    q: f64,
    q_dt: f64,
    theory: [[f64; 2]; 2],
    measured: [[f64; 2]; 2],
    rel_err: f64,
}

fn cmd_dispersion(cfg: &RunConfig, opts: &RunOptions) -> Result<Partial, ExpError> {
    let grid = cfg.build_grid()?;
    let mp = cfg.model_params();
    let solver = cfg.solver_config();
    let d = &cfg.dispersion;
    let mut csv = CsvWriter::create(
        &opts.out_dir.join("dispersion.csv"),
        "dispersion",
        &cfg.to_ini(),
        &[
            "mode", "q", "q_dt", "theory1_re", "theory1_im", "theory2_re", "theory2_im", "measured1_re", "measured1_im",
            "measured2_re", "measured2_im", "rel_err",
        ],
    )?;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &mode in &d.modes {
        if opts.stopped() {
            csv.truncate_marker(0.0)?;
            csv.finish()?;
            return Ok(Partial {
                truncated: true,
                ..Partial::default()
            });
        }
        let m = measure_mode_rates(&grid, &mp, &solver, mode, d.amplitude, d.sigma_bar)?;
        let th = dispersion_rates(&mp, m.q)?;
        let rel = rate_error(&th, &m.rates);
        worst = worst.max(rel);
        csv.row_f64(&[
            mode as f64,
            m.q,
            m.q * solver.dt,
            th[0].re,
            th[0].im,
            th[1].re,
            th[1].im,
            m.rates[0].re,
            m.rates[0].im,
            m.rates[1].re,
            m.rates[1].im,
            rel,
        ])?;
        rows.push(DispersionRow {
            mode,
            q: m.q,
            q_dt: m.q * solver.dt,
            theory: [[th[0].re, th[0].im], [th[1].re, th[1].im]],
            measured: [[m.rates[0].re, m.rates[0].im], [m.rates[1].re, m.rates[1].im]],
            rel_err: rel,
        });
    }
    csv.finish()?;
    let passed = worst <= d.rel_tol;
    Ok(Partial {
        check: Some(CheckResult {
            passed,
            message: format!("worst relative rate error {worst:e} (tolerance {:e})", d.rel_tol),
        }),
        details: json!({ "modes": rows }),
        ..Partial::default()
    })
}

/// Largest relative deviation between paired eigenvalues.
pub fn rate_error(theory: &[num_complex::Complex64; 2], measured: &[num_complex::Complex64; 2]) -> f64 {
    theory
        .iter()
        .zip(measured)
        .map(|(t, m)| (t - m).norm() / t.norm().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// Runs to `cfg.time.t_end` without writing anything; used for comparison
/// legs.
fn silent_run(state0: &State, mp: &ModelParams, solver: &SolverConfig, t_end: f64, stop: &AtomicBool) -> Result<(State, bool), ExpError> {
    let mut interrupted = false;
    let s = run(state0, mp, solver, t_end, |_, _, _| {
        if stop.load(Ordering::Relaxed) {
            interrupted = true;
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    Ok((s, interrupted))
}

#[derive(Serialize)]
struct ContinuationLeg {
    kappa: f64,
    l2_error: f64,
    max_error: f64,
    max_abs_phi: f64,
}

/// Regularized runs for every κ of the schedule, each from the same initial
/// data, compared with the exact-log run at `t_end`.
fn cmd_continuation(cfg: &RunConfig, opts: &RunOptions) -> Result<Partial, ExpError> {
    let mut exact_cfg = cfg.clone();
    exact_cfg.time.scheme = Scheme::ExactLog;
    let s0 = initial_state(&exact_cfg)?;
    let mp = cfg.model;
    let solver = exact_cfg.solver_config();
    let (exact, stopped) = silent_run(&s0, &mp, &solver, cfg.time.t_end, &opts.stop)?;
    let mut csv = CsvWriter::create(
        &opts.out_dir.join("continuation.csv"),
        "continuation",
        &cfg.to_ini(),
        &["kappa", "l2_error", "max_error", "max_abs_phi"],
    )?;
    if stopped {
        csv.truncate_marker(exact.t)?;
        csv.finish()?;
        return Ok(Partial {
            truncated: true,
            ..Partial::default()
        });
    }
    write_snapshot(&opts.out_dir.join("exact.chsnap"), &exact)?;
    let reg_solver = SolverConfig {
        scheme: Scheme::Regularized,
        ..solver.clone()
    };
    let mut legs = Vec::new();
    for &kappa in &cfg.time.kappa_schedule {
        let mpk = ModelParams {
            potential: mp.potential.with_kappa(kappa),
            ..mp
        };
        let (s, stopped) = silent_run(&s0, &mpk, &reg_solver, cfg.time.t_end, &opts.stop)?;
        if stopped {
            csv.truncate_marker(s.t)?;
            csv.finish()?;
            return Ok(Partial {
                truncated: true,
                details: json!({ "legs": legs }),
                ..Partial::default()
            });
        }
        let diff = s.phi.sub(&exact.phi)?;
        let leg = ContinuationLeg {
            kappa,
            l2_error: l2_norm(&diff),
            max_error: diff.max_abs(),
            max_abs_phi: s.phi.max_abs(),
        };
        csv.row_f64(&[leg.kappa, leg.l2_error, leg.max_error, leg.max_abs_phi])?;
        legs.push(leg);
    }
    csv.finish()?;
    let errs: Vec<f64> = legs.iter().map(|l| l.l2_error).collect();
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    let ratio = match (errs.first(), errs.last()) {
        (Some(a), Some(b)) if *a > 0.0 => b / a,
        _ => 0.0,
    };
    let passed = monotone && ratio <= 0.5;
    Ok(Partial {
        steps: exact.step_index,
        check: Some(CheckResult {
            passed,
            message: format!("errors {errs:?}; monotone = {monotone}, final/first = {ratio}"),
        }),
        details: json!({ "legs": legs, "final_over_first": ratio }),
        ..Partial::default()
    })
}

/// Perturbs `φ₀` by a mean-zero field of sup-norm `η` and tracks the
/// dual-norm distance between the two trajectories.
fn cmd_compare(cfg: &RunConfig, opts: &RunOptions) -> Result<Partial, ExpError> {
    let a0 = initial_state(cfg)?;
    let grid = a0.phi.grid().clone();
    let eta = cfg.compare.perturbation;
    let pert = random_fluctuation(&grid, cfg.compare.perturb_seed, STREAM_PHI, eta);
    let b0 = State::new(a0.phi.add(&pert)?, a0.sigma.clone())?.at_time(a0.t);
    let mp = cfg.model_params();
    let solver = cfg.solver_config();
    if b0.phi.max_abs() >= 1.0 && solver.scheme == Scheme::ExactLog {
        return Err(ExpError::Config(ConfigError::Validation(vec![
            "compare: perturbation pushes the initial phase outside (-1, 1)".into(),
        ])));
    }
    let mut csv = CsvWriter::create(
        &opts.out_dir.join("compare.csv"),
        "compare",
        &cfg.to_ini(),
        &["t", "d_phi", "d_sigma", "d_total"],
    )?;
    let d0 = dual_distance(&a0, &b0, mp.eps)?;
    csv.row_f64(&[a0.t, d0.d_phi, d0.d_sigma, d0.d_total])?;
    let n = crate::dynamics::steps_to_reach(a0.t, cfg.time.t_end, solver.dt);
    let (mut a, mut b) = (a0.clone(), b0);
    let mut d = d0;
    let mut sup_ratio: f64 = 0.0;
    let mut truncated = false;
    for k in 1..=n {
        let step_res = step_with_stats(&a, &mp, &solver).and_then(|(na, _)| Ok((na, step_with_stats(&b, &mp, &solver)?.0)));
        let (na, nb) = match step_res {
            Ok(v) => v,
            Err(e) => {
                csv.truncate_marker(a.t)?;
                csv.finish()?;
                return Err(e.into());
            }
        };
        a = na;
        b = nb;
        d = dual_distance(&a, &b, mp.eps)?;
        if d0.d_total > 0.0 {
            sup_ratio = sup_ratio.max(d.d_total / d0.d_total);
        }
        if k % cfg.output.csv_every as u64 == 0 || k == n {
            csv.row_f64(&[a.t, d.d_phi, d.d_sigma, d.d_total])?;
        }
        if opts.stopped() {
            if k % cfg.output.csv_every as u64 != 0 && k != n {
                csv.row_f64(&[a.t, d.d_phi, d.d_sigma, d.d_total])?;
            }
            csv.truncate_marker(a.t)?;
            truncated = true;
            break;
        }
    }
    csv.finish()?;
    write_snapshot(&opts.out_dir.join("final_a.chsnap"), &a)?;
    write_snapshot(&opts.out_dir.join("final_b.chsnap"), &b)?;
    let ratio = (d0.d_total > 0.0).then(|| d.d_total / d0.d_total);
    let finite = d.d_total.is_finite();
    Ok(Partial {
        steps: a.step_index,
        truncated,
        check: Some(CheckResult {
            passed: finite,
            message: format!("d_total(0) = {:e}, d_total(T) = {:e}", d0.d_total, d.d_total),
        }),
        details: json!({
            "perturbation": eta,
            "d0": d0,
            "d_final": d,
            "amplification": ratio,
            "sup_amplification": (d0.d_total > 0.0).then_some(sup_ratio),
        }),
        ..Partial::default()
    })
}

fn cmd_barrier(cfg: &RunConfig, opts: &RunOptions) -> Result<Partial, ExpError> {
    let mut problems = Vec::new();
    if cfg.model.eps == 0.0 {
        problems.push("barrier: the barrier comparison needs eps > 0".to_string());
    }
    if cfg.time.scheme != Scheme::ExactLog {
        problems.push("barrier: the barrier comparison needs scheme = exact-log".to_string());
    }
    if !problems.is_empty() {
        return Err(ExpError::Config(ConfigError::Validation(problems)));
    }
    let s0 = initial_state(cfg)?;
    let mp = cfg.model_params();
    let solver = cfg.solver_config();
    let (_, last, truncated, steps, records) = integrate(&s0, mp, solver.clone(), cfg, opts, "diagnostics.csv", true)?;
    let trace = barrier_check(&records, &mp, solver.dt, cfg.barrier.delta0)?;
    let mut csv = CsvWriter::create(
        &opts.out_dir.join("barrier.csv"),
        "barrier",
        &cfg.to_ini(),
        &["t", "y_minus", "min_phi", "max_phi", "y_plus"],
    )?;
    let every = cfg.output.csv_every;
    let last_idx = trace.times.len() - 1;
    for k in (0..trace.times.len()).filter(|k| k % every == 0 || *k == last_idx) {
        csv.row_f64(&[trace.times[k], trace.y_minus[k], trace.min_phi[k], trace.max_phi[k], trace.y_plus[k]])?;
    }
    if truncated {
        csv.truncate_marker(last.t)?;
    }
    csv.finish()?;
    let verdict = if trace.holds { "holds" } else { "SandwichViolated" };
    Ok(Partial {
        final_record: Some(last),
        steps,
        truncated,
        check: Some(CheckResult {
            passed: trace.holds,
            message: format!(
                "sandwich {verdict}: {} violation(s), worst gap {:e}, C_h = {}, margin {}",
                trace.violations, trace.worst_gap, trace.c_h, trace.margin
            ),
        }),
        details: json!({
            "verdict": verdict,
            "c_h": trace.c_h,
            "delta0": trace.delta0,
            "violations": trace.violations,
            "worst_gap": trace.worst_gap,
            "margin": trace.margin,
            "final_delta": last.delta,
        }),
        ..Partial::default()
    })
}
