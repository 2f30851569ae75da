//! Linear stability about the homogeneous state `(φ ≡ c₀, σ ≡ σ̄)`.
//!
//! A Fourier mode with `−Δ → q` evolves as `d/dt (u, v) = M(q) (u, v)` with
//!
//! ```text
//! (1 + εq) λ u = −q(AΨ″(c₀) + Bq) u − α u + qχ v
//!          λ v = χ q u − q v
//! ```

use num_complex::Complex64;

use crate::error::Result;
use crate::grid::{l2_inner, Grid, ScalarField};
use crate::potential::psi_second;

use super::{step, ModelParams, SolverConfig, State};

/// The 2×2 matrix `M(q)` of the linearized dynamics.
pub fn linear_matrix(mp: &ModelParams, q: f64) -> Result<[[f64; 2]; 2]> {
    let curv = mp.a * psi_second(mp.c0, &mp.potential)?;
    let visc = 1.0 + mp.eps * q;
    Ok([
        [(-q * (curv + mp.b * q) - mp.alpha) / visc, q * mp.chi / visc],
        [mp.chi * q, -q],
    ])
}

/// Eigenvalues of a real 2×2 matrix, ordered by decreasing real part (then
/// decreasing imaginary part).
pub fn eigenvalues_2x2(m: &[[f64; 2]; 2]) -> [Complex64; 2] {
    let half_tr = 0.5 * (m[0][0] + m[1][1]);
    let half_diff = 0.5 * (m[0][0] - m[1][1]);
    // discriminant written to avoid cancellation in tr² − 4 det
    let disc = half_diff * half_diff + m[0][1] * m[1][0];
    let (l1, l2) = if disc >= 0.0 {
        let s = disc.sqrt();
        (Complex64::new(half_tr + s, 0.0), Complex64::new(half_tr - s, 0.0))
    } else {
        let s = (-disc).sqrt();
        (Complex64::new(half_tr, s), Complex64::new(half_tr, -s))
    };
    [l1, l2]
}

/// Growth rates `λ₁, λ₂` of the mode with `−Δ`-eigenvalue `q ≥ 0`.
pub fn dispersion_rates(mp: &ModelParams, q: f64) -> Result<[Complex64; 2]> {
    Ok(eigenvalues_2x2(&linear_matrix(mp, q)?))
}

/// Rates measured from the time stepper for one cosine mode.
#[derive(Clone, Copy, Debug)]
pub struct MeasuredRates {
    /// Discrete `−Δ_h` eigenvalue of the mode.
    pub q: f64,
    /// One-step amplification matrix on (φ, σ) mode amplitudes.
    pub amplification: [[f64; 2]; 2],
    /// `ln(eig(amplification)) / Δt`, ordered like [`eigenvalues_2x2`].
    pub rates: [Complex64; 2],
}

/// Measures the linear rates of cosine mode `mode` along the first axis by
/// stepping small perturbations of `(c₀, sigma_bar)` once in each component.
pub fn measure_mode_rates(
    grid: &Grid,
    mp: &ModelParams,
    cfg: &SolverConfig,
    mode: usize,
    amplitude: f64,
    sigma_bar: f64,
) -> Result<MeasuredRates> {
    let l = grid.length_per_axis()[0];
    let k = mode as f64 * std::f64::consts::PI / l;
    let shape = ScalarField::from_fn(grid, |x| (k * x[0]).cos());
    let norm2 = l2_inner(&shape, &shape)?;
    let base = State::new(ScalarField::constant(grid, mp.c0), ScalarField::constant(grid, sigma_bar))?;
    let base1 = step(&base, mp, cfg)?;
    let project = |f: &ScalarField, reference: &ScalarField| -> Result<f64> {
        Ok(l2_inner(&f.sub(reference)?, &shape)? / norm2 / amplitude)
    };

    let mut amp = [[0.0; 2]; 2];
    for (col, perturb_phi) in [(0, true), (1, false)] {
        let mut s0 = base.clone();
        if perturb_phi {
            s0.phi = base.phi.axpy(amplitude, &shape)?;
        } else {
            s0.sigma = base.sigma.axpy(amplitude, &shape)?;
        }
        let s1 = step(&s0, mp, cfg)?;
        amp[0][col] = project(&s1.phi, &base1.phi)?;
        amp[1][col] = project(&s1.sigma, &base1.sigma)?;
    }
    let mu = eigenvalues_2x2(&amp);
    let mut rates = [mu[0].ln() / cfg.dt, mu[1].ln() / cfg.dt];
    if rates[1].re > rates[0].re || (rates[1].re == rates[0].re && rates[1].im > rates[0].im) {
        rates.swap(0, 1);
    }
    Ok(MeasuredRates {
        q: grid.axis_eigenvalues(0)[mode],
        amplification: amp,
        rates,
    })
}
