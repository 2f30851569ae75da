//! Logarithmic (Flory–Huggins) potential
//!
//! ```text
//! Ψ(r) = Ψ₀(r) + (θ₀/2)(1 − r²),   Ψ₀(r) = (θ/2)[(1−r)ln(1−r) + (1+r)ln(1+r)]
//! ```
//!
//! together with its κ-regularization, which replaces `Ψ₀′` outside
//! `|r| ≤ 1−κ` by its tangent lines so that it is defined, C¹ and
//! globally Lipschitz on all of ℝ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bracket used by [`newton_scalar_solve`].
pub const SCALAR_BRACKET: f64 = 1.0 - 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialParams {
    pub theta: f64,
    pub theta0: f64,
    /// Width of the region near ±1 where `Ψ₀″` is monotone.
    pub a0: f64,
    /// Regularization parameter; `0` selects the exact potential.
    pub kappa: f64,
}

impl Default for PotentialParams {
    fn default() -> Self {
        PotentialParams {
            theta: 1.0,
            theta0: 2.0,
            a0: 0.5,
            kappa: 0.0,
        }
    }
}

impl PotentialParams {
    pub fn new(theta: f64, theta0: f64) -> Result<PotentialParams> {
        let p = PotentialParams {
            theta,
            theta0,
            ..PotentialParams::default()
        };
        p.check()?;
        Ok(p)
    }

    pub fn with_kappa(self, kappa: f64) -> PotentialParams {
        PotentialParams { kappa, ..self }
    }

    /// `K = θ₀ − θ`
    pub fn k(&self) -> f64 {
        self.theta0 - self.theta
    }

    /// Every violated hypothesis, as human-readable messages.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.theta > 0.0) {
            out.push(format!("H1: theta must be > 0 (got {})", self.theta));
        }
        if !(self.theta0 - self.theta > 0.0) {
            out.push(format!(
                "H1: theta0 - theta := K must be > 0 (got theta = {}, theta0 = {})",
                self.theta, self.theta0
            ));
        }
        if !(self.a0 > 0.0 && self.a0 < 1.0) {
            out.push(format!("H1: a0 must lie in (0, 1) (got {})", self.a0));
        }
        if !(self.kappa >= 0.0 && self.kappa < self.a0) {
            out.push(format!("kappa must lie in [0, a0) (got {}, a0 = {})", self.kappa, self.a0));
        }
        out
    }

    pub fn check(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(v.join("; ")))
        }
    }
}

fn open_interval(r: f64) -> Result<()> {
    if r.abs() < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfDomain { value: r })
    }
}

/// `x ln x` with the limit 0 at x = 0.
fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// `Ψ₀(r)`, normalized so `Ψ₀(0) = 0`; finite on the closed interval.
pub fn psi0(r: f64, p: &PotentialParams) -> Result<f64> {
    if !(r.abs() <= 1.0) {
        return Err(Error::OutOfDomain { value: r });
    }
    Ok(0.5 * p.theta * (xlogx(1.0 - r) + xlogx(1.0 + r)))
}

/// `Ψ₀′(r) = θ artanh(r)`
pub fn psi0_prime(r: f64, p: &PotentialParams) -> Result<f64> {
    open_interval(r)?;
    Ok(p.theta * r.atanh())
}

/// `Ψ₀″(r) = θ / (1 − r²)`
pub fn psi0_second(r: f64, p: &PotentialParams) -> Result<f64> {
    open_interval(r)?;
    Ok(p.theta / ((1.0 - r) * (1.0 + r)))
}

pub fn psi(r: f64, p: &PotentialParams) -> Result<f64> {
    Ok(psi0(r, p)? + 0.5 * p.theta0 * (1.0 - r * r))
}

pub fn psi_prime(r: f64, p: &PotentialParams) -> Result<f64> {
    Ok(psi0_prime(r, p)? - p.theta0 * r)
}

pub fn psi_second(r: f64, p: &PotentialParams) -> Result<f64> {
    Ok(psi0_second(r, p)? - p.theta0)
}

fn kappa_of(p: &PotentialParams) -> Result<f64> {
    if p.kappa > 0.0 {
        Ok(p.kappa)
    } else {
        Err(Error::KappaZero)
    }
}

/// Tangent-line extension of `Ψ₀′` beyond `±(1−κ)`.
pub fn psi0_prime_reg(r: f64, p: &PotentialParams) -> Result<f64> {
    let knot = 1.0 - kappa_of(p)?;
    if r.abs() <= knot {
        return Ok(p.theta * r.atanh());
    }
    let k = knot.copysign(r);
    Ok(p.theta * k.atanh() + p.theta / ((1.0 - k) * (1.0 + k)) * (r - k))
}

/// Derivative of [`psi0_prime_reg`]; constant outside the knots.
pub fn psi0_second_reg(r: f64, p: &PotentialParams) -> Result<f64> {
    let knot = 1.0 - kappa_of(p)?;
    let s = r.abs().min(knot);
    Ok(p.theta / ((1.0 - s) * (1.0 + s)))
}

/// `Ψ₀,κ(r) = ∫₀^r Ψ′₀,κ(s) ds`: `Ψ₀` inside the knots, its quadratic Taylor
/// polynomial at the knot outside.
pub fn psi0_reg(r: f64, p: &PotentialParams) -> Result<f64> {
    let knot = 1.0 - kappa_of(p)?;
    if r.abs() <= knot {
        return psi0(r, p);
    }
    let k = knot.copysign(r);
    let d = r - k;
    Ok(psi0(k, p)? + p.theta * k.atanh() * d + 0.5 * p.theta / ((1.0 - k) * (1.0 + k)) * d * d)
}

/// `Ψ_κ(r) = Ψ₀,κ(r) + (θ₀/2)(1 − r²)`
pub fn psi_reg(r: f64, p: &PotentialParams) -> Result<f64> {
    Ok(psi0_reg(r, p)? + 0.5 * p.theta0 * (1.0 - r * r))
}

/// The convex part of the bulk potential as used by the solvers: either the
/// exact singular `Ψ₀` or its κ-regularization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvexPart {
    params: PotentialParams,
    regularized: bool,
}

impl ConvexPart {
    pub fn exact(params: &PotentialParams) -> ConvexPart {
        ConvexPart {
            params: PotentialParams { kappa: 0.0, ..*params },
            regularized: false,
        }
    }

    pub fn regularized(params: &PotentialParams, kappa: f64) -> Result<ConvexPart> {
        if !(kappa > 0.0) {
            return Err(Error::KappaZero);
        }
        Ok(ConvexPart {
            params: PotentialParams { kappa, ..*params },
            regularized: true,
        })
    }

    pub fn params(&self) -> &PotentialParams {
        &self.params
    }

    pub fn is_regularized(&self) -> bool {
        self.regularized
    }

    pub fn value(&self, r: f64) -> Result<f64> {
        if self.regularized {
            psi0_reg(r, &self.params)
        } else {
            psi0(r, &self.params)
        }
    }

    pub fn d1(&self, r: f64) -> Result<f64> {
        if self.regularized {
            psi0_prime_reg(r, &self.params)
        } else {
            psi0_prime(r, &self.params)
        }
    }

    pub fn d2(&self, r: f64) -> Result<f64> {
        if self.regularized {
            psi0_second_reg(r, &self.params)
        } else {
            psi0_second(r, &self.params)
        }
    }

    /// Full potential `Ψ` (or `Ψ_κ`), including `(θ₀/2)(1 − r²)`.
    pub fn full_value(&self, r: f64) -> Result<f64> {
        Ok(self.value(r)? + 0.5 * self.params.theta0 * (1.0 - r * r))
    }

    pub fn full_d1(&self, r: f64) -> Result<f64> {
        Ok(self.d1(r)? - self.params.theta0 * r)
    }
}

/// Solves `r + λ Ψ₀′(r) = c` for `r ∈ (−1, 1)`, `λ > 0`.
///
/// Safeguarded Newton on a shrinking bracket; the map is strictly increasing
/// and onto ℝ, so a root always exists. Roots closer to ±1 than
/// `1 − SCALAR_BRACKET` are not representable and report `NoConvergence`.
pub fn newton_scalar_solve(c: f64, lambda: f64, p: &PotentialParams) -> Result<f64> {
    if !(lambda > 0.0) || !c.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "scalar solve needs lambda > 0 and finite c (got lambda = {lambda}, c = {c})"
        )));
    }
    const MAX_ITERS: usize = 100;
    let lt = lambda * p.theta;
    let f = |r: f64| r + lt * r.atanh() - c;
    let tol = 1e-12 * (1.0 + c.abs());

    let (mut lo, mut hi) = (-SCALAR_BRACKET, SCALAR_BRACKET);
    if f(hi) < -tol || f(lo) > tol {
        return Err(Error::NoConvergence { iterations: 0 });
    }
    let mut r = (c / (1.0 + lt)).tanh();
    for it in 1..=MAX_ITERS {
        let fr = f(r);
        let slope = 1.0 + lt / ((1.0 - r) * (1.0 + r));
        // near ±1 the slope amplifies the rounding of r itself
        if fr.abs() <= tol.max(8.0 * f64::EPSILON * slope) {
            return Ok(r);
        }
        if fr > 0.0 {
            hi = r;
        } else {
            lo = r;
        }
        let step = fr / slope;
        let mut next = r - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == r {
            return Err(Error::NoConvergence { iterations: it });
        }
        r = next;
    }
    Err(Error::NoConvergence { iterations: MAX_ITERS })
}
