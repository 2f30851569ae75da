//! Node-based tensor grids on axis-aligned boxes with homogeneous Neumann
//! boundary conditions.
//!
//! The Laplacian is the 3-point stencil per axis with mirrored ghost nodes
//! (`f[-1] = f[1]`, `f[n] = f[n-2]`). Paired with trapezoidal quadrature it is
//! self-adjoint, has zero weighted column sums and is diagonalized exactly by
//! the type-I discrete cosine transform along every axis. All inverse
//! operators below are applied in that cosine basis.

use std::fmt;
use std::sync::Arc;

use rustdct::{Dct1, DctPlanner};

use crate::error::{Error, Result};

/// Relative bound on the mean accepted by [`inv_laplacian_zero_mean`].
pub const ZERO_MEAN_TOL: f64 = 1e-10;

/// Trapezoidal weights matched to the node layout.
#[derive(Clone, Debug)]
pub struct QuadratureWeights {
    weights: Vec<f64>,
    volume: f64,
}

impl QuadratureWeights {
    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    /// `|Ω|`, the product of the box side lengths.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

struct GridInner {
    n: Vec<usize>,
    lengths: Vec<f64>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
    node_count: usize,
    axis_weights: Vec<Vec<f64>>,
    weights: QuadratureWeights,
    eigenvalues: Vec<Vec<f64>>,
    dct: Vec<Arc<dyn Dct1<f64>>>,
}

/// Uniform tensor grid in 1 to 3 dimensions. Nodes include the boundary;
/// index `0` along an axis sits at coordinate 0 and x runs fastest in memory.
///
/// Cloning is cheap: the plan and weights are shared.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.inner.n)
            .field("lengths", &self.inner.lengths)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n
                && self
                    .inner
                    .lengths
                    .iter()
                    .zip(&other.inner.lengths)
                    .all(|(a, b)| a.to_bits() == b.to_bits()))
    }
}

impl Grid {
    pub fn new(n: &[usize], lengths: &[f64]) -> Result<Grid> {
        if n.is_empty() || n.len() > 3 {
            return Err(Error::InvalidParameter(format!(
                "grid dimension must be 1, 2 or 3 (got {})",
                n.len()
            )));
        }
        if lengths.len() != n.len() {
            return Err(Error::InvalidParameter(format!(
                "{} node counts but {} side lengths",
                n.len(),
                lengths.len()
            )));
        }
        if let Some(bad) = n.iter().find(|&&k| k < 3) {
            return Err(Error::InvalidParameter(format!(
                "every axis needs at least 3 nodes (got {bad})"
            )));
        }
        if let Some(bad) = lengths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "side lengths must be positive and finite (got {bad})"
            )));
        }

        let spacing: Vec<f64> = n
            .iter()
            .zip(lengths)
            .map(|(&k, &l)| l / (k - 1) as f64)
            .collect();
        let mut strides = Vec::with_capacity(n.len());
        let mut stride = 1;
        for &k in n {
            strides.push(stride);
            stride *= k;
        }
        let node_count = stride;

        let axis_weights: Vec<Vec<f64>> = n
            .iter()
            .zip(&spacing)
            .map(|(&k, &h)| {
                (0..k)
                    .map(|j| if j == 0 || j == k - 1 { 0.5 * h } else { h })
                    .collect()
            })
            .collect();
        let volume: f64 = lengths.iter().product();
        let mut weights = vec![0.0; node_count];
        for (i, w) in weights.iter_mut().enumerate() {
            let mut acc = 1.0;
            for (a, aw) in axis_weights.iter().enumerate() {
                acc *= aw[(i / strides[a]) % n[a]];
            }
            *w = acc;
        }

        let eigenvalues = n
            .iter()
            .zip(&spacing)
            .map(|(&k, &h)| {
                (0..k)
                    .map(|m| {
                        let theta = std::f64::consts::PI * m as f64 / (k - 1) as f64;
                        // 2 - 2cos(θ) = 4 sin²(θ/2), free of cancellation for small θ
                        let s = (0.5 * theta).sin();
                        4.0 * s * s / (h * h)
                    })
                    .collect()
            })
            .collect();

        let mut planner = DctPlanner::new();
        let dct = n.iter().map(|&k| planner.plan_dct1(k)).collect();

        Ok(Grid {
            inner: Arc::new(GridInner {
                n: n.to_vec(),
                lengths: lengths.to_vec(),
                spacing,
                strides,
                node_count,
                axis_weights,
                weights: QuadratureWeights { weights, volume },
                eigenvalues,
                dct,
            }),
        })
    }

    /// One-dimensional grid on `[0, length]`.
    pub fn line(n: usize, length: f64) -> Result<Grid> {
        Grid::new(&[n], &[length])
    }

    pub fn ndim(&self) -> usize {
        self.inner.n.len()
    }

    pub fn n_per_axis(&self) -> &[usize] {
        &self.inner.n
    }

    pub fn length_per_axis(&self) -> &[f64] {
        &self.inner.lengths
    }

    pub fn spacing(&self) -> &[f64] {
        &self.inner.spacing
    }

    pub fn node_count(&self) -> usize {
        self.inner.node_count
    }

    pub fn volume(&self) -> f64 {
        self.inner.weights.volume
    }

    pub fn weights(&self) -> &QuadratureWeights {
        &self.inner.weights
    }

    /// Eigenvalues of the 1D operator `-Δ_h` along `axis`, indexed by cosine
    /// mode number; mode `m` has eigenvector `cos(π m x / L)`.
    pub fn axis_eigenvalues(&self, axis: usize) -> &[f64] {
        &self.inner.eigenvalues[axis]
    }

    /// Smallest positive eigenvalue of `-Δ_h` on the whole grid.
    pub fn smallest_positive_eigenvalue(&self) -> f64 {
        self.inner
            .eigenvalues
            .iter()
            .map(|ev| ev[1])
            .fold(f64::INFINITY, f64::min)
    }

    /// Discrete Poincaré–Wirtinger constant: `‖f‖ ≤ C ‖∇_h f‖` for mean-zero f.
    pub fn poincare_constant(&self) -> f64 {
        self.smallest_positive_eigenvalue().sqrt().recip()
    }

    pub fn multi_index(&self, node: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        for (a, slot) in idx.iter_mut().enumerate().take(self.ndim()) {
            *slot = (node / self.inner.strides[a]) % self.inner.n[a];
        }
        idx
    }

    /// Physical coordinates of a node (unused axes are 0).
    pub fn coords(&self, node: usize) -> [f64; 3] {
        let idx = self.multi_index(node);
        let mut x = [0.0; 3];
        for a in 0..self.ndim() {
            x[a] = idx[a] as f64 * self.inner.spacing[a];
        }
        x
    }

    fn for_each_line(&self, axis: usize, mut f: impl FnMut(usize)) {
        let stride = self.inner.strides[axis];
        let n = self.inner.n[axis];
        for start in 0..self.inner.node_count {
            if (start / stride) % n == 0 {
                f(start);
            }
        }
    }

    fn dct_all_axes(&self, data: &mut [f64]) {
        let mut line = Vec::new();
        let mut scratch = Vec::new();
        for axis in 0..self.ndim() {
            let n = self.inner.n[axis];
            let stride = self.inner.strides[axis];
            let plan = &self.inner.dct[axis];
            line.resize(n, 0.0);
            scratch.resize(plan.get_scratch_len(), 0.0);
            self.for_each_line(axis, |start| {
                for (j, v) in line.iter_mut().enumerate() {
                    *v = data[start + j * stride];
                }
                plan.process_dct1_with_scratch(&mut line, &mut scratch);
                for (j, v) in line.iter().enumerate() {
                    data[start + j * stride] = *v;
                }
            });
        }
    }

    /// Applies `g(-Δ_h)` to nodal data: `g` receives the eigenvalue of
    /// `-Δ_h` belonging to each cosine mode.
    pub fn apply_spectral(&self, values: &[f64], g: impl Fn(f64) -> f64) -> Vec<f64> {
        assert_eq!(values.len(), self.node_count(), "value count does not match grid");
        let mut data = values.to_vec();
        self.dct_all_axes(&mut data);
        let ndim = self.ndim();
        for (i, c) in data.iter_mut().enumerate() {
            let mut lambda = 0.0;
            for a in 0..ndim {
                lambda += self.inner.eigenvalues[a][(i / self.inner.strides[a]) % self.inner.n[a]];
            }
            *c *= g(lambda);
        }
        self.dct_all_axes(&mut data);
        let scale: f64 = self
            .inner
            .n
            .iter()
            .map(|&k| 2.0 / (k - 1) as f64)
            .product();
        for v in &mut data {
            *v *= scale;
        }
        data
    }

    fn laplacian_values(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.node_count()];
        for axis in 0..self.ndim() {
            let n = self.inner.n[axis];
            let s = self.inner.strides[axis];
            let inv_h2 = 1.0 / (self.inner.spacing[axis] * self.inner.spacing[axis]);
            for (i, o) in out.iter_mut().enumerate() {
                let j = (i / s) % n;
                let left = if j == 0 { f[i + s] } else { f[i - s] };
                let right = if j == n - 1 { f[i - s] } else { f[i + s] };
                *o += (left - 2.0 * f[i] + right) * inv_h2;
            }
        }
        out
    }

    fn grad_inner_values(&self, f: &[f64], g: &[f64]) -> f64 {
        let mut total = 0.0;
        let ndim = self.ndim();
        for axis in 0..ndim {
            let n = self.inner.n[axis];
            let s = self.inner.strides[axis];
            let h = self.inner.spacing[axis];
            for i in 0..self.node_count() {
                let idx = self.multi_index(i);
                if idx[axis] == n - 1 {
                    continue;
                }
                let mut w = 1.0 / h;
                for b in (0..ndim).filter(|&b| b != axis) {
                    w *= self.inner.axis_weights[b][idx[b]];
                }
                total += w * (f[i + s] - f[i]) * (g[i + s] - g[i]);
            }
        }
        total
    }
}

/// Nodal real values on a [`Grid`].
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> ScalarField {
        ScalarField::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, c: f64) -> ScalarField {
        ScalarField {
            grid: grid.clone(),
            values: vec![c; grid.node_count()],
        }
    }

    /// Samples `f` at node coordinates (`x[0]`, `x[1]`, `x[2]`).
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64; 3]) -> f64) -> ScalarField {
        let values = (0..grid.node_count()).map(|i| f(&grid.coords(i))).collect();
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<ScalarField> {
        if values.len() != grid.node_count() {
            return Err(Error::InvalidField(format!(
                "{} values for a grid with {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite value at node {i}")));
        }
        Ok(ScalarField {
            grid: grid.clone(),
            values,
        })
    }

    pub(crate) fn from_values_unchecked(grid: &Grid, values: Vec<f64>) -> ScalarField {
        debug_assert_eq!(values.len(), grid.node_count());
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `‖f‖_∞`
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField::from_values_unchecked(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub(crate) fn try_map(&self, f: impl Fn(f64) -> Result<f64>) -> Result<ScalarField> {
        let values = self.values.iter().map(|&v| f(v)).collect::<Result<Vec<_>>>()?;
        Ok(ScalarField::from_values_unchecked(&self.grid, values))
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<ScalarField> {
        check_same_grid(self, other)?;
        Ok(self.zip_map_unchecked(other, f))
    }

    pub(crate) fn zip_map_unchecked(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        ScalarField::from_values_unchecked(&self.grid, values)
    }

    pub fn add(&self, other: &ScalarField) -> Result<ScalarField> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scaled(&self, c: f64) -> ScalarField {
        self.map(|v| c * v)
    }

    pub fn shifted(&self, c: f64) -> ScalarField {
        self.map(|v| v + c)
    }

    /// `self + c * other`
    pub fn axpy(&self, c: f64, other: &ScalarField) -> Result<ScalarField> {
        self.zip_map(other, |a, b| a + c * b)
    }

    /// Removes the weighted mean.
    pub fn fluctuation(&self) -> ScalarField {
        let m = mean(self);
        self.shifted(-m)
    }
}

fn check_same_grid(f: &ScalarField, g: &ScalarField) -> Result<()> {
    if f.grid == g.grid {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// `|Ω|⁻¹ Σ w_i f_i`
pub fn mean(f: &ScalarField) -> f64 {
    let w = f.grid.weights();
    let s: f64 = w.as_slice().iter().zip(&f.values).map(|(w, v)| w * v).sum();
    s / w.volume()
}

/// `Σ w_i f_i g_i`
pub fn l2_inner(f: &ScalarField, g: &ScalarField) -> Result<f64> {
    check_same_grid(f, g)?;
    Ok(l2_inner_unchecked(f, g))
}

pub(crate) fn l2_inner_unchecked(f: &ScalarField, g: &ScalarField) -> f64 {
    f.grid
        .weights()
        .as_slice()
        .iter()
        .zip(f.values.iter().zip(&g.values))
        .map(|(w, (a, b))| w * a * b)
        .sum()
}

pub fn l2_norm(f: &ScalarField) -> f64 {
    l2_inner_unchecked(f, f).sqrt()
}

/// Discrete `Δf` (note the sign: this is not `-Δ`).
pub fn laplacian_neumann(f: &ScalarField) -> ScalarField {
    ScalarField::from_values_unchecked(&f.grid, f.grid.laplacian_values(&f.values))
}

/// Edge-difference gradient pairing. Satisfies `⟨-Δ_h f, g⟩ = grad_inner(f, g)`
/// exactly (summation by parts).
pub fn grad_inner(f: &ScalarField, g: &ScalarField) -> Result<f64> {
    check_same_grid(f, g)?;
    Ok(f.grid.grad_inner_values(&f.values, &g.values))
}

/// `‖∇_h f‖`
pub fn grad_norm(f: &ScalarField) -> f64 {
    f.grid.grad_inner_values(&f.values, &f.values).max(0.0).sqrt()
}

/// Weighted L² and gradient inner products.
pub fn h1_products(f: &ScalarField, g: &ScalarField) -> Result<(f64, f64)> {
    check_same_grid(f, g)?;
    Ok((l2_inner_unchecked(f, g), f.grid.grad_inner_values(&f.values, &g.values)))
}

/// The operator `𝒩`: the mean-zero `u` solving `-Δ_h u = f`.
pub fn inv_laplacian_zero_mean(f: &ScalarField) -> Result<ScalarField> {
    let m = mean(f);
    if m.abs() > ZERO_MEAN_TOL * (1.0 + f.max_abs()) {
        return Err(Error::NonZeroMean { mean: m });
    }
    Ok(inv_laplacian_projected(f))
}

/// `𝒩` applied to `f - mean(f)`; the mean mode is discarded.
pub(crate) fn inv_laplacian_projected(f: &ScalarField) -> ScalarField {
    let values = f
        .grid
        .apply_spectral(&f.values, |lambda| if lambda > 0.0 { 1.0 / lambda } else { 0.0 });
    ScalarField::from_values_unchecked(&f.grid, values)
}

/// The operator `𝒩₁ = (I - Δ_h)⁻¹`.
pub fn helmholtz_inverse(f: &ScalarField) -> ScalarField {
    shifted_inverse(f, 1.0, 1.0)
}

/// Solves `(a I - b Δ_h) u = f` for `a > 0`, `b ≥ 0`.
pub fn shifted_inverse(f: &ScalarField, a: f64, b: f64) -> ScalarField {
    let values = f.grid.apply_spectral(&f.values, |lambda| 1.0 / (a + b * lambda));
    ScalarField::from_values_unchecked(&f.grid, values)
}

/// `‖f‖_{V₀′} = ⟨f, 𝒩 f⟩^{1/2}` for mean-zero `f`.
pub fn dual_norm_v0(f: &ScalarField) -> Result<f64> {
    let u = inv_laplacian_zero_mean(f)?;
    Ok(l2_inner_unchecked(f, &u).max(0.0).sqrt())
}

/// `(‖f - f̄‖²_{V₀′} + |f̄|²)^{1/2}`, an equivalent norm on `(H¹)′`.
pub fn dual_norm_h1p(f: &ScalarField) -> f64 {
    let m = mean(f);
    let fluct = f.shifted(-m);
    let u = inv_laplacian_projected(&fluct);
    let v0_sq = l2_inner_unchecked(&fluct, &u).max(0.0);
    (v0_sq + m * m).sqrt()
}
