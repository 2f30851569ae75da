//! The logarithmic potential, its κ-regularization and the scalar implicit
//! solve used by the barrier envelopes.

use chlab::potential::{newton_scalar_solve, psi, psi_prime, psi_reg, ConvexPart, PotentialParams};

fn main() -> chlab::Result<()> {
    let p = PotentialParams::new(1.0, 2.0)?;
    println!("theta = {}, theta0 = {}, K = {}", p.theta, p.theta0, p.k());
    println!("{:>8} {:>14} {:>14} {:>14}", "r", "psi", "psi'", "psi_reg(0.05)");
    let reg = p.with_kappa(0.05);
    for r in [-0.99, -0.5, 0.0, 0.5, 0.9, 0.99] {
        println!("{r:>8} {:>14.6} {:>14.6} {:>14.6}", psi(r, &p)?, psi_prime(r, &p)?, psi_reg(r, &reg)?);
    }
    let convex = ConvexPart::regularized(&p, 0.05)?;
    println!("regularized convex part at r = 1.2: {:.6}", convex.value(1.2)?);
    // y + λΨ₀′(y) = c has a unique root in (−1, 1); for |c| much above 1 it
    // lies closer to ±1 than f64 resolves and the solve reports NoConvergence
    for c in [-1.5, 0.0, 0.7, 1.5] {
        let y = newton_scalar_solve(c, 0.1, &p)?;
        println!("y + 0.1 Ψ₀'(y) = {c}: y = {y:.12}");
    }
    Ok(())
}
