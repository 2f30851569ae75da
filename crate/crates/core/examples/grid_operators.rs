//! Discrete operators on a Neumann grid: Laplacian, inverse Laplacian and
//! the two dual norms.

use chlab::grid::{dual_norm_h1p, dual_norm_v0, grad_norm, inv_laplacian_zero_mean, laplacian_neumann, mean, Grid, ScalarField};

fn main() -> chlab::Result<()> {
    let grid = Grid::new(&[33, 17], &[2.0, 1.0])?;
    let pi = std::f64::consts::PI;
    // cos(πx/2)·cos(πy) is a discrete eigenfunction of −Δ_h
    let f = ScalarField::from_fn(&grid, |x| (pi * x[0] / 2.0).cos() * (pi * x[1]).cos());
    let lap = laplacian_neumann(&f);
    let ratio = -lap.values()[1] / f.values()[1];
    println!("grid {:?}, h = {:?}", grid.n_per_axis(), grid.spacing());
    println!("mean(f) = {:.3e}", mean(&f));
    println!("-Δ_h f / f at a node = {ratio:.6} (continuum value {:.6})", pi * pi * 1.25);

    let u = inv_laplacian_zero_mean(&f)?;
    let back = laplacian_neumann(&u).add(&f)?;
    println!("‖Δ_h 𝒩 f + f‖∞ = {:.3e}", back.max_abs());
    println!("‖f‖_V0' = {:.6}, ‖∇f‖ = {:.6}", dual_norm_v0(&f)?, grad_norm(&f));
    // the (H¹)' norm adds the mean back: here √(‖f‖²_V0' + 0.5²)
    println!("‖f + 0.5‖_(H1)' = {:.6}", dual_norm_h1p(&f.shifted(0.5)));
    Ok(())
}
