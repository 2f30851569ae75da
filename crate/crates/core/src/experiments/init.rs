//! Initial data.
//!
//! Random fields use a counter-based generator: node `i` of stream `s` draws
//! `splitmix64(key(seed, s) + (i + 1)·0x9E3779B97F4A7C15)`, so values depend
//! only on the seed and the node index.

use std::path::Path;

use crate::dynamics::{Scheme, State};
use crate::grid::{Grid, ScalarField};

use super::config::{Profile, RunConfig};
use super::output::{read_snapshot, Snapshot};
use super::ExpError;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stream identifiers.
pub const STREAM_PHI: u64 = 1;
pub const STREAM_SIGMA: u64 = 2;

pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform value in `[-1, 1)` for `node` of `stream`.
pub fn node_uniform(seed: u64, stream: u64, node: u64) -> f64 {
    let key = splitmix64(seed ^ stream.wrapping_mul(GOLDEN));
    let bits = splitmix64(key.wrapping_add((node + 1).wrapping_mul(GOLDEN)));
    // top 53 bits → [0, 1)
    let u = (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    2.0 * u - 1.0
}

/// Mean-zero random field with `max |f| = amp` (zero if `amp = 0`).
pub fn random_fluctuation(grid: &Grid, seed: u64, stream: u64, amp: f64) -> ScalarField {
    let raw: Vec<f64> = (0..grid.node_count() as u64)
        .map(|i| node_uniform(seed, stream, i))
        .collect();
    let f = ScalarField::from_values(grid, raw)
        .expect("generator values are finite")
        .fluctuation();
    let m = f.max_abs();
    if amp == 0.0 || m == 0.0 {
        ScalarField::zeros(grid)
    } else {
        f.scaled(amp / m)
    }
}

fn single_mode(grid: &Grid, k: usize, mean: f64, amp: f64) -> ScalarField {
    let l = grid.length_per_axis()[0];
    let w = k as f64 * std::f64::consts::PI / l;
    ScalarField::from_fn(grid, |x| mean + amp * (w * x[0]).cos())
}

/// Builds the initial state described by `cfg.init`.
pub fn initial_state(cfg: &RunConfig) -> Result<State, ExpError> {
    let grid = cfg.build_grid()?;
    let i = &cfg.init;
    let state = match &i.profile {
        Profile::Random => {
            let phi = random_fluctuation(&grid, i.seed, STREAM_PHI, i.phi_amp).shifted(i.phi_mean);
            let sigma = random_fluctuation(&grid, i.seed, STREAM_SIGMA, i.sigma_amp).shifted(i.sigma_mean);
            State::new(phi, sigma)?
        }
        Profile::SingleMode(k) => State::new(
            single_mode(&grid, *k, i.phi_mean, i.phi_amp),
            single_mode(&grid, *k, i.sigma_mean, i.sigma_amp),
        )?,
        Profile::File => {
            let path = i.file.as_deref().unwrap_or(Path::new(""));
            let snap = read_snapshot(path)?;
            state_from_snapshot(&grid, snap)?
        }
    };
    Ok(if cfg.time.scheme == Scheme::ExactLog {
        state.project_interior()
    } else {
        state
    })
}

fn state_from_snapshot(grid: &Grid, snap: Snapshot) -> Result<State, ExpError> {
    if snap.n != grid.n_per_axis() || snap.lengths != grid.length_per_axis() {
        return Err(ExpError::Io(format!(
            "snapshot grid {:?} x {:?} does not match the configured grid {:?} x {:?}",
            snap.n,
            snap.lengths,
            grid.n_per_axis(),
            grid.length_per_axis()
        )));
    }
    let phi = ScalarField::from_values(grid, snap.phi)?;
    let sigma = ScalarField::from_values(grid, snap.sigma)?;
    Ok(State::new(phi, sigma)?.at_time(snap.t))
}
