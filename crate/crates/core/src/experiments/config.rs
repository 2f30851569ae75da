//! Sectioned `key = value` run configuration.
//!
//! ```ini
//! [grid]
//! ndim = 2
//! n = 33, 33
//! lengths = 1.0
//!
//! [model]
//! A = 1.0
//! B = 0.01
//! ...
//! ```
//!
//! Every key has a default. Lines starting with `#` or `;` are comments.
//! Unknown sections or keys, duplicate keys and malformed values are parse
//! errors carrying the line number; semantic problems are collected and
//! reported together.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dynamics::{ModelParams, Scheme, SolverConfig};
use crate::grid::Grid;
use crate::potential::PotentialParams;
use crate::steady::SteadyTolerances;

/// Initial-data margin required for exact-log runs.
pub const INIT_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Io(String),
    Parse { line: usize, message: String },
    Validation(Vec<String>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(m) => write!(f, "cannot read config: {m}"),
            ConfigError::Parse { line, message } => write!(f, "config line {line}: {message}"),
            ConfigError::Validation(v) => {
                write!(f, "invalid config ({} problem{}):", v.len(), if v.len() == 1 { "" } else { "s" })?;
                for m in v {
                    write!(f, "\n  - {m}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Profile {
    Random,
    SingleMode(usize),
    File,
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Random => write!(f, "random"),
            Profile::SingleMode(k) => write!(f, "single_mode({k})"),
            Profile::File => write!(f, "file"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridSection {
    pub ndim: usize,
    pub n: Vec<usize>,
    pub lengths: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeSection {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    /// κ for single regularized runs.
    pub kappa: f64,
    pub kappa_schedule: Vec<f64>,
    pub newton_tol: f64,
    pub newton_max_iters: usize,
    pub barrier_margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InitSection {
    pub phi_mean: f64,
    pub phi_amp: f64,
    pub sigma_mean: f64,
    pub sigma_amp: f64,
    pub seed: u64,
    pub profile: Profile,
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub csv_every: usize,
    /// 0 writes only the final snapshot.
    pub snapshot_every: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DispersionSection {
    pub modes: Vec<usize>,
    pub amplitude: f64,
    pub sigma_bar: f64,
    pub rel_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareSection {
    pub perturbation: f64,
    pub perturb_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BarrierSection {
    /// `None`: use `1 − ‖φ₀‖_∞`.
    pub delta0: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub grid: GridSection,
    pub model: ModelParams,
    pub time: TimeSection,
    pub init: InitSection,
    pub output: OutputSection,
    pub steady: SteadyTolerances,
    pub dispersion: DispersionSection,
    pub compare: CompareSection,
    pub barrier: BarrierSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solver = SolverConfig::default();
        RunConfig {
            grid: GridSection {
                ndim: 1,
                n: vec![65],
                lengths: vec![1.0],
            },
            model: ModelParams::default(),
            time: TimeSection {
                dt: solver.dt,
                t_end: 1.0,
                scheme: solver.scheme,
                kappa: 0.05,
                kappa_schedule: solver.kappa_schedule,
                newton_tol: solver.newton_tol,
                newton_max_iters: solver.newton_max_iters,
                barrier_margin: solver.barrier_margin,
            },
            init: InitSection {
                phi_mean: 0.0,
                phi_amp: 0.05,
                sigma_mean: 0.0,
                sigma_amp: 0.0,
                seed: 0,
                profile: Profile::Random,
                file: None,
            },
            output: OutputSection {
                directory: PathBuf::from("out"),
                csv_every: 1,
                snapshot_every: 0,
            },
            steady: SteadyTolerances::default(),
            dispersion: DispersionSection {
                modes: (1..=6).collect(),
                amplitude: 1e-6,
                sigma_bar: 0.0,
                rel_tol: 0.02,
            },
            compare: CompareSection {
                perturbation: 1e-3,
                perturb_seed: 1,
            },
            barrier: BarrierSection { delta0: None },
        }
    }
}

impl RunConfig {
    pub fn build_grid(&self) -> crate::Result<Grid> {
        Grid::new(&self.grid.n, &self.grid.lengths)
    }

    /// Model parameters as used by the solver (κ applied for regularized runs).
    pub fn model_params(&self) -> ModelParams {
        let mut mp = self.model;
        if self.time.scheme == Scheme::Regularized {
            mp.potential.kappa = self.time.kappa;
        }
        mp
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            dt: self.time.dt,
            scheme: self.time.scheme,
            newton_tol: self.time.newton_tol,
            newton_max_iters: self.time.newton_max_iters,
            barrier_margin: self.time.barrier_margin,
            kappa_schedule: self.time.kappa_schedule.clone(),
            ..SolverConfig::default()
        }
    }

    /// Every semantic problem, in section order.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let g = &self.grid;
        if !(1..=3).contains(&g.ndim) {
            v.push(format!("grid: ndim must be 1, 2 or 3 (got {})", g.ndim));
        } else {
            if g.n.len() != g.ndim {
                v.push(format!("grid: n lists {} values for ndim = {}", g.n.len(), g.ndim));
            }
            if g.lengths.len() != g.ndim {
                v.push(format!("grid: lengths lists {} values for ndim = {}", g.lengths.len(), g.ndim));
            }
        }
        if let Some(k) = g.n.iter().find(|&&k| k < 3) {
            v.push(format!("grid: every n must be >= 3 (got {k})"));
        }
        if let Some(l) = g.lengths.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            v.push(format!("grid: every length must be > 0 (got {l})"));
        }

        v.extend(self.model.violations());

        let t = &self.time;
        v.extend(self.solver_config().violations());
        if !(t.t_end > 0.0 && t.t_end.is_finite()) {
            v.push(format!("time: t_end must be > 0 (got {})", t.t_end));
        }
        let a0 = self.model.potential.a0;
        if t.scheme == Scheme::Regularized && !(t.kappa > 0.0 && t.kappa < a0) {
            v.push(format!("time: regularized scheme needs 0 < kappa < a0 (got kappa = {}, a0 = {a0})", t.kappa));
        }
        if let Some(k) = t.kappa_schedule.iter().find(|k| **k >= a0) {
            v.push(format!("time: kappa_schedule entries must be < a0 = {a0} (got {k})"));
        }

        let i = &self.init;
        if !(i.phi_amp >= 0.0) || !(i.sigma_amp >= 0.0) {
            v.push("init: amplitudes must be >= 0".to_string());
        }
        if t.scheme == Scheme::ExactLog && i.profile != Profile::File && i.phi_mean.abs() + i.phi_amp > 1.0 - INIT_MARGIN {
            v.push(format!(
                "init: |phi_mean| + phi_amp = {} must be <= 1 - 1e-6 for the exact-log scheme",
                i.phi_mean.abs() + i.phi_amp
            ));
        }
        if !(i.phi_mean.abs() < 1.0) {
            v.push(format!("init: phi_mean must lie in (-1, 1) (got {})", i.phi_mean));
        }
        match i.profile {
            Profile::File if i.file.is_none() => v.push("init: profile = file needs a file key".to_string()),
            Profile::SingleMode(k) if k == 0 || g.n.first().is_some_and(|&n| k >= n) => {
                v.push(format!("init: single_mode({k}) must satisfy 1 <= k < n along the first axis"))
            }
            _ => {}
        }

        if self.output.csv_every == 0 {
            v.push("output: csv_every must be >= 1".to_string());
        }
        let s = &self.steady;
        if !(s.tol_rate > 0.0 && s.residual > 0.0 && s.t_max > 0.0) {
            v.push("steady: tol_rate, residual_tol and t_max must be > 0".to_string());
        }
        let d = &self.dispersion;
        if d.modes.is_empty() || d.modes.iter().any(|&m| m == 0 || g.n.first().is_some_and(|&n| m >= n)) {
            v.push("dispersion: modes must be non-empty with 1 <= mode < n along the first axis".to_string());
        }
        if !(d.amplitude > 0.0) || !(d.rel_tol > 0.0) {
            v.push("dispersion: amplitude and rel_tol must be > 0".to_string());
        }
        if !(self.compare.perturbation >= 0.0) {
            v.push("compare: perturbation must be >= 0".to_string());
        }
        if let Some(d0) = self.barrier.delta0 {
            if !(d0 > 0.0 && d0 < 1.0) {
                v.push(format!("barrier: delta0 must lie in (0, 1) (got {d0})"));
            }
        }
        v
    }

    /// Canonical text form; parsing it yields the same config.
    pub fn to_ini(&self) -> String {
        let mut s = String::new();
        let list_f = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let list_u = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let g = &self.grid;
        let m = &self.model;
        let t = &self.time;
        let i = &self.init;
        let _ = writeln!(s, "[grid]\nndim = {}\nn = {}\nlengths = {}", g.ndim, list_u(&g.n), list_f(&g.lengths));
        let _ = writeln!(
            s,
            "[model]\nA = {:?}\nB = {:?}\neps = {:?}\nchi = {:?}\nalpha = {:?}\nc0 = {:?}\ntheta = {:?}\ntheta0 = {:?}\na0 = {:?}",
            m.a, m.b, m.eps, m.chi, m.alpha, m.c0, m.potential.theta, m.potential.theta0, m.potential.a0
        );
        let scheme = match t.scheme {
            Scheme::ExactLog => "exact-log",
            Scheme::Regularized => "regularized",
        };
        let _ = writeln!(
            s,
            "[time]\ndt = {:?}\nt_end = {:?}\nscheme = {scheme}\nkappa = {:?}\nkappa_schedule = {}\nnewton_tol = {:?}\nnewton_max_iters = {}\nbarrier_margin = {:?}",
            t.dt,
            t.t_end,
            t.kappa,
            list_f(&t.kappa_schedule),
            t.newton_tol,
            t.newton_max_iters,
            t.barrier_margin
        );
        let _ = writeln!(
            s,
            "[init]\nphi_mean = {:?}\nphi_amp = {:?}\nsigma_mean = {:?}\nsigma_amp = {:?}\nseed = {}\nprofile = {}",
            i.phi_mean, i.phi_amp, i.sigma_mean, i.sigma_amp, i.seed, i.profile
        );
        if let Some(f) = &i.file {
            let _ = writeln!(s, "file = {}", f.display());
        }
        let o = &self.output;
        let _ = writeln!(
            s,
            "[output]\ndirectory = {}\ncsv_every = {}\nsnapshot_every = {}",
            o.directory.display(),
            o.csv_every,
            o.snapshot_every
        );
        let st = &self.steady;
        let _ = writeln!(
            s,
            "[steady]\ntol_rate = {:?}\nresidual_tol = {:?}\nt_max = {:?}",
            st.tol_rate, st.residual, st.t_max
        );
        let d = &self.dispersion;
        let _ = writeln!(
            s,
            "[dispersion]\nmodes = {}\namplitude = {:?}\nsigma_bar = {:?}\nrel_tol = {:?}",
            list_u(&d.modes),
            d.amplitude,
            d.sigma_bar,
            d.rel_tol
        );
        let c = &self.compare;
        let _ = writeln!(s, "[compare]\nperturbation = {:?}\nperturb_seed = {}", c.perturbation, c.perturb_seed);
        s.push_str("[barrier]\n");
        if let Some(d0) = self.barrier.delta0 {
            let _ = writeln!(s, "delta0 = {d0:?}");
        }
        s
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

struct Entry {
    value: String,
    line: usize,
}

const KEYS: &[(&str, &[&str])] = &[
    ("grid", &["ndim", "n", "lengths"]),
    ("model", &["A", "B", "eps", "chi", "alpha", "c0", "theta", "theta0", "a0"]),
    (
        "time",
        &[
            "dt",
            "t_end",
            "scheme",
            "kappa",
            "kappa_schedule",
            "newton_tol",
            "newton_max_iters",
            "barrier_margin",
        ],
    ),
    ("init", &["phi_mean", "phi_amp", "sigma_mean", "sigma_amp", "seed", "profile", "file"]),
    ("output", &["directory", "csv_every", "snapshot_every"]),
    ("steady", &["tol_rate", "residual_tol", "t_max"]),
    ("dispersion", &["modes", "amplitude", "sigma_bar", "rel_tol"]),
    ("compare", &["perturbation", "perturb_seed"]),
    ("barrier", &["delta0"]),
];

/// Parses and validates configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut entries: BTreeMap<(String, String), Entry> = BTreeMap::new();
    let mut section: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = strip_comment(raw).trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| parse_err(line, "unterminated section header"))?
                .trim();
            if !KEYS.iter().any(|(s, _)| *s == name) {
                return Err(parse_err(line, &format!("unknown section [{name}]")));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| parse_err(line, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section
            .as_deref()
            .ok_or_else(|| parse_err(line, "key outside of any section"))?;
        let allowed = KEYS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key) {
            return Err(parse_err(line, &format!("unknown key `{key}` in [{sec}]")));
        }
        if value.is_empty() {
            return Err(parse_err(line, &format!("empty value for `{key}`")));
        }
        let k = (sec.to_string(), key.to_string());
        if let Some(prev) = entries.get(&k) {
            return Err(parse_err(line, &format!("duplicate key `{key}` (first set on line {})", prev.line)));
        }
        entries.insert(
            k,
            Entry {
                value: value.to_string(),
                line,
            },
        );
    }

    let mut cfg = RunConfig::default();
    let mut r = Reader { entries: &entries };

    cfg.grid.ndim = r.get("grid", "ndim", cfg.grid.ndim)?;
    let ndim = cfg.grid.ndim;
    cfg.grid.n = r.list("grid", "n", cfg.grid.n.clone(), ndim)?;
    cfg.grid.lengths = r.list("grid", "lengths", cfg.grid.lengths.clone(), ndim)?;
    if !r.has("grid", "n") && ndim > 1 {
        cfg.grid.n = vec![cfg.grid.n[0]; ndim];
    }
    if !r.has("grid", "lengths") && ndim > 1 {
        cfg.grid.lengths = vec![cfg.grid.lengths[0]; ndim];
    }

    let m = &mut cfg.model;
    m.a = r.get("model", "A", m.a)?;
    m.b = r.get("model", "B", m.b)?;
    m.eps = r.get("model", "eps", m.eps)?;
    m.chi = r.get("model", "chi", m.chi)?;
    m.alpha = r.get("model", "alpha", m.alpha)?;
    m.c0 = r.get("model", "c0", m.c0)?;
    let p = PotentialParams {
        theta: r.get("model", "theta", m.potential.theta)?,
        theta0: r.get("model", "theta0", m.potential.theta0)?,
        a0: r.get("model", "a0", m.potential.a0)?,
        kappa: 0.0,
    };
    m.potential = p;

    let t = &mut cfg.time;
    t.dt = r.get("time", "dt", t.dt)?;
    t.t_end = r.get("time", "t_end", t.t_end)?;
    if let Some(e) = r.raw("time", "scheme") {
        t.scheme = match e.value.as_str() {
            "exact-log" | "exact_log" => Scheme::ExactLog,
            "regularized" => Scheme::Regularized,
            other => return Err(parse_err(e.line, &format!("scheme must be exact-log or regularized (got `{other}`)"))),
        };
    }
    t.kappa = r.get("time", "kappa", t.kappa)?;
    t.kappa_schedule = r.list("time", "kappa_schedule", t.kappa_schedule.clone(), 0)?;
    t.newton_tol = r.get("time", "newton_tol", t.newton_tol)?;
    t.newton_max_iters = r.get("time", "newton_max_iters", t.newton_max_iters)?;
    t.barrier_margin = r.get("time", "barrier_margin", t.barrier_margin)?;

    let i = &mut cfg.init;
    i.phi_mean = r.get("init", "phi_mean", i.phi_mean)?;
    i.phi_amp = r.get("init", "phi_amp", i.phi_amp)?;
    i.sigma_mean = r.get("init", "sigma_mean", i.sigma_mean)?;
    i.sigma_amp = r.get("init", "sigma_amp", i.sigma_amp)?;
    i.seed = r.get("init", "seed", i.seed)?;
    if let Some(e) = r.raw("init", "profile") {
        i.profile = parse_profile(&e.value).ok_or_else(|| {
            parse_err(
                e.line,
                &format!("profile must be random, single_mode(k) or file (got `{}`)", e.value),
            )
        })?;
    }
    if let Some(e) = r.raw("init", "file") {
        i.file = Some(PathBuf::from(&e.value));
    }

    let o = &mut cfg.output;
    if let Some(e) = r.raw("output", "directory") {
        o.directory = PathBuf::from(&e.value);
    }
    o.csv_every = r.get("output", "csv_every", o.csv_every)?;
    o.snapshot_every = r.get("output", "snapshot_every", o.snapshot_every)?;

    let s = &mut cfg.steady;
    s.tol_rate = r.get("steady", "tol_rate", s.tol_rate)?;
    s.residual = r.get("steady", "residual_tol", s.residual)?;
    s.t_max = r.get("steady", "t_max", s.t_max)?;

    let d = &mut cfg.dispersion;
    d.modes = r.list("dispersion", "modes", d.modes.clone(), 0)?;
    d.amplitude = r.get("dispersion", "amplitude", d.amplitude)?;
    d.sigma_bar = r.get("dispersion", "sigma_bar", d.sigma_bar)?;
    d.rel_tol = r.get("dispersion", "rel_tol", d.rel_tol)?;

    cfg.compare.perturbation = r.get("compare", "perturbation", cfg.compare.perturbation)?;
    cfg.compare.perturb_seed = r.get("compare", "perturb_seed", cfg.compare.perturb_seed)?;
    if r.has("barrier", "delta0") {
        cfg.barrier.delta0 = Some(r.get("barrier", "delta0", 0.0)?);
    }
    let _ = &mut r;

    let v = cfg.violations();
    if v.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Validation(v))
    }
}

fn strip_comment(line: &str) -> &str {
    let t = line.trim_start();
    if t.starts_with('#') || t.starts_with(';') {
        return "";
    }
    match line.find(" #").or_else(|| line.find("\t#")) {
        Some(pos) => &line[..pos],
        None => line,
    }
}

fn parse_err(line: usize, message: &str) -> ConfigError {
    ConfigError::Parse {
        line,
        message: message.to_string(),
    }
}

fn parse_profile(s: &str) -> Option<Profile> {
    match s {
        "random" => Some(Profile::Random),
        "file" => Some(Profile::File),
        _ => {
            let inner = s.strip_prefix("single_mode(")?.strip_suffix(')')?;
            inner.trim().parse().ok().map(Profile::SingleMode)
        }
    }
}

struct Reader<'a> {
    entries: &'a BTreeMap<(String, String), Entry>,
}

impl Reader<'_> {
    fn raw(&self, sec: &str, key: &str) -> Option<&Entry> {
        self.entries.get(&(sec.to_string(), key.to_string()))
    }

    fn has(&self, sec: &str, key: &str) -> bool {
        self.raw(sec, key).is_some()
    }

    fn get<T: std::str::FromStr>(&self, sec: &str, key: &str, default: T) -> Result<T, ConfigError> {
        match self.raw(sec, key) {
            None => Ok(default),
            Some(e) => e.value.parse().map_err(|_| {
                parse_err(
                    e.line,
                    &format!("cannot parse `{}` as {} for `{key}`", e.value, type_name::<T>()),
                )
            }),
        }
    }

    /// Comma-separated list; a single value is repeated `broadcast` times
    /// when `broadcast > 1`.
    fn list<T: std::str::FromStr + Clone>(&self, sec: &str, key: &str, default: Vec<T>, broadcast: usize) -> Result<Vec<T>, ConfigError> {
        match self.raw(sec, key) {
            None => Ok(default),
            Some(e) => {
                let mut out: Vec<T> = Vec::new();
                for part in e.value.split(',') {
                    let part = part.trim();
                    out.push(part.parse().map_err(|_| {
                        parse_err(
                            e.line,
                            &format!("cannot parse `{part}` as {} in `{key}`", type_name::<T>()),
                        )
                    })?);
                }
                if out.len() == 1 && broadcast > 1 {
                    out = vec![out[0].clone(); broadcast];
                }
                Ok(out)
            }
        }
    }
}

fn type_name<T>() -> &'static str {
    let full = std::any::type_name::<T>();
    match full {
        "f64" => "a number",
        "usize" | "u64" => "a non-negative integer",
        _ => full,
    }
}
