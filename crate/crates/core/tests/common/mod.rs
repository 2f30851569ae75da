//! Dense-matrix reference implementations and shared fixtures.

#![allow(dead_code)]

use chlab::dynamics::{ModelParams, State};
use chlab::experiments::init::{random_fluctuation, STREAM_PHI, STREAM_SIGMA};
use chlab::grid::{Grid, ScalarField};
use chlab::potential::PotentialParams;
use nalgebra::{DMatrix, DVector};

pub fn model(chi: f64, alpha: f64, eps: f64, c0: f64) -> ModelParams {
    ModelParams {
        a: 1.0,
        b: 0.01,
        eps,
        chi,
        alpha,
        c0,
        potential: PotentialParams::new(1.0, 2.0).unwrap(),
    }
}

pub fn random_state(grid: &Grid, seed: u64, phi_mean: f64, phi_amp: f64) -> State {
    State::new(
        random_fluctuation(grid, seed, STREAM_PHI, phi_amp).shifted(phi_mean),
        random_fluctuation(grid, seed, STREAM_SIGMA, 0.1).shifted(0.3),
    )
    .unwrap()
}

pub fn vec_of(f: &ScalarField) -> DVector<f64> {
    DVector::from_column_slice(f.values())
}

pub fn max_diff(a: &[f64], b: &DVector<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Dense versions of the grid operators, assembled node by node.
pub struct Dense {
    pub n: Vec<usize>,
    pub h: Vec<f64>,
    pub weights: DVector<f64>,
    pub volume: f64,
    pub laplacian: DMatrix<f64>,
    /// Forward differences along each axis with their edge weights.
    pub diffs: Vec<(DMatrix<f64>, DVector<f64>)>,
    /// LU of `[−Δ_h 1; wᵀ 0]`.
    bordered: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    helmholtz: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

fn index(n: &[usize], idx: &[usize]) -> usize {
    let mut i = 0;
    let mut stride = 1;
    for (a, &k) in n.iter().enumerate() {
        i += idx[a] * stride;
        stride *= k;
    }
    i
}

fn unindex(n: &[usize], mut i: usize) -> Vec<usize> {
    n.iter()
        .map(|&k| {
            let j = i % k;
            i /= k;
            j
        })
        .collect()
}

impl Dense {
    pub fn new(n: &[usize], lengths: &[f64]) -> Dense {
        let h: Vec<f64> = n.iter().zip(lengths).map(|(&k, &l)| l / (k - 1) as f64).collect();
        let count: usize = n.iter().product();
        let axis_w = |a: usize, j: usize| if j == 0 || j == n[a] - 1 { 0.5 * h[a] } else { h[a] };

        let weights = DVector::from_fn(count, |i, _| {
            let idx = unindex(n, i);
            (0..n.len()).map(|a| axis_w(a, idx[a])).product()
        });

        // ghost nodes mirror the first interior neighbour
        let mut laplacian = DMatrix::zeros(count, count);
        for i in 0..count {
            let idx = unindex(n, i);
            for a in 0..n.len() {
                let c = 1.0 / (h[a] * h[a]);
                let mut nb = idx.clone();
                let left = if idx[a] == 0 { 1 } else { idx[a] - 1 };
                let right = if idx[a] == n[a] - 1 { n[a] - 2 } else { idx[a] + 1 };
                nb[a] = left;
                laplacian[(i, index(n, &nb))] += c;
                nb[a] = right;
                laplacian[(i, index(n, &nb))] += c;
                laplacian[(i, i)] -= 2.0 * c;
            }
        }

        let mut diffs = Vec::new();
        for a in 0..n.len() {
            let edges: Vec<usize> = (0..count).filter(|&i| unindex(n, i)[a] < n[a] - 1).collect();
            let mut g = DMatrix::zeros(edges.len(), count);
            let mut ew = DVector::zeros(edges.len());
            for (e, &i) in edges.iter().enumerate() {
                let idx = unindex(n, i);
                let mut nb = idx.clone();
                nb[a] += 1;
                g[(e, i)] = -1.0 / h[a];
                g[(e, index(n, &nb))] = 1.0 / h[a];
                ew[e] = h[a] * (0..n.len()).filter(|&b| b != a).map(|b| axis_w(b, idx[b])).product::<f64>();
            }
            diffs.push((g, ew));
        }

        let mut bordered = DMatrix::zeros(count + 1, count + 1);
        bordered.view_mut((0, 0), (count, count)).copy_from(&(-&laplacian));
        for i in 0..count {
            bordered[(i, count)] = 1.0;
            bordered[(count, i)] = weights[i];
        }
        let helmholtz = (DMatrix::identity(count, count) - &laplacian).lu();
        Dense {
            n: n.to_vec(),
            h,
            volume: lengths.iter().product(),
            weights,
            laplacian,
            diffs,
            bordered: bordered.lu(),
            helmholtz,
        }
    }

    pub fn inner(&self, f: &DVector<f64>, g: &DVector<f64>) -> f64 {
        f.component_mul(&self.weights).dot(g)
    }

    pub fn mean(&self, f: &DVector<f64>) -> f64 {
        self.weights.dot(f) / self.volume
    }

    pub fn grad_inner(&self, f: &DVector<f64>, g: &DVector<f64>) -> f64 {
        self.diffs
            .iter()
            .map(|(d, w)| (d * f).component_mul(w).dot(&(d * g)))
            .sum()
    }

    pub fn lap(&self, f: &DVector<f64>) -> DVector<f64> {
        &self.laplacian * f
    }

    /// Mean-zero `u` with `−Δ_h u = f − f̄`.
    pub fn inv_lap(&self, f: &DVector<f64>) -> DVector<f64> {
        let m = self.mean(f);
        let count = f.len();
        let mut rhs = DVector::zeros(count + 1);
        for i in 0..count {
            rhs[i] = f[i] - m;
        }
        let sol = self.bordered.solve(&rhs).expect("bordered system is regular");
        sol.rows(0, count).into_owned()
    }

    pub fn helmholtz_inv(&self, f: &DVector<f64>) -> DVector<f64> {
        self.helmholtz.solve(f).expect("I - Δ_h is regular")
    }

    /// `‖∇𝒩f‖` for mean-zero `f`.
    pub fn dual_v0(&self, f: &DVector<f64>) -> f64 {
        let u = self.inv_lap(f);
        self.grad_inner(&u, &u).sqrt()
    }

    pub fn dual_h1p(&self, f: &DVector<f64>) -> f64 {
        let m = self.mean(f);
        let fl = f.map(|v| v - m);
        let v = self.dual_v0(&fl);
        (v * v + m * m).sqrt()
    }

    /// Energy with the full logarithmic potential, written out from scratch.
    pub fn energy(&self, phi: &DVector<f64>, sigma: &DVector<f64>, mp: &ModelParams) -> f64 {
        let p = &mp.potential;
        let psi = phi.map(|r| {
            let xl = |x: f64| if x == 0.0 { 0.0 } else { x * x.ln() };
            0.5 * p.theta * (xl(1.0 + r) + xl(1.0 - r)) + 0.5 * p.theta0 * (1.0 - r * r)
        });
        let coupling = phi.component_mul(sigma);
        mp.a * self.weights.dot(&psi) - mp.chi * self.weights.dot(&coupling)
            + 0.5 * mp.b * self.grad_inner(phi, phi)
            + 0.5 * self.inner(sigma, sigma)
    }

    pub fn lyapunov(&self, phi: &DVector<f64>, sigma: &DVector<f64>, mp: &ModelParams) -> f64 {
        let m = self.mean(phi);
        let v = self.dual_v0(&phi.map(|x| x - m));
        self.energy(phi, sigma, mp) + 0.5 * mp.alpha * v * v
    }

    /// `μ̃` at one time level with time derivative `phi_t`.
    pub fn tilde_mu(&self, phi: &DVector<f64>, sigma: &DVector<f64>, phi_t: &DVector<f64>, mp: &ModelParams) -> DVector<f64> {
        let p = &mp.potential;
        let dpsi = phi.map(|r| p.theta * 0.5 * ((1.0 + r) / (1.0 - r)).ln() - p.theta0 * r);
        let lap = self.lap(phi);
        let nphi = self.inv_lap(phi);
        DVector::from_fn(phi.len(), |i, _| {
            mp.a * dpsi[i] - mp.b * lap[i] - mp.chi * sigma[i] + mp.eps * phi_t[i] + mp.alpha * nphi[i]
        })
    }

    /// `h̃` at one time level: the right-hand side of
    /// `ε∂ₜφ − BΔφ + AΨ₀′(φ) = h̃` after eliminating `μ`.
    pub fn tilde_h(&self, phi: &DVector<f64>, sigma: &DVector<f64>, phi_t: &DVector<f64>, mp: &ModelParams) -> DVector<f64> {
        let p = &mp.potential;
        let dpsi = phi.map(|r| p.theta * 0.5 * ((1.0 + r) / (1.0 - r)).ln() - p.theta0 * r);
        let sbar = self.mean(sigma);
        let tbar = self.mean(phi_t);
        let n_t = self.inv_lap(phi_t);
        let nphi = self.inv_lap(phi);
        let c = mp.a * self.mean(&dpsi) + mp.eps * tbar;
        DVector::from_fn(phi.len(), |i, _| {
            mp.chi * (sigma[i] - sbar) + c - n_t[i] - mp.alpha * nphi[i] + mp.a * p.theta0 * phi[i]
        })
    }
}

/// Grids used by the operator sweep (all at most 9 nodes per axis).
pub const SWEEP_GRIDS: [(&[usize], &[f64]); 5] = [
    (&[9], &[1.0]),
    (&[3], &[0.5]),
    (&[5, 7], &[1.0, 2.5]),
    (&[9, 9], &[1.0, 1.0]),
    (&[4, 5, 9], &[0.7, 1.0, 1.3]),
];

/// Worst scaled discrepancy per operator: `|lib − dense| / (1 + |dense|∞)`.
#[derive(Debug, Default, Clone)]
pub struct SweepReport {
    pub fields: usize,
    pub worst: Vec<(&'static str, f64)>,
}

impl SweepReport {
    fn record(&mut self, name: &'static str, err: f64) {
        match self.worst.iter_mut().find(|(n, _)| *n == name) {
            Some((_, w)) => *w = w.max(err),
            None => self.worst.push((name, err)),
        }
    }

    pub fn max(&self) -> f64 {
        self.worst.iter().map(|(_, e)| *e).fold(0.0, f64::max)
    }
}

fn scaled_field_err(lib: &ScalarField, dense: &DVector<f64>) -> f64 {
    max_diff(lib.values(), dense) / (1.0 + dense.amax())
}

fn scaled_err(lib: f64, dense: f64) -> f64 {
    (lib - dense).abs() / (1.0 + dense.abs())
}

/// Compares every discrete operator with its dense recomputation on
/// `per_grid` seeded fields for each grid of [`SWEEP_GRIDS`] (one extra
/// grid with a 9×9×9 box is added when `include_cube`).
pub fn operator_sweep(per_grid: usize, include_cube: bool) -> SweepReport {
    use chlab::diagnostics::{energy_e, lyapunov_f, tilde_h, tilde_mu};
    use chlab::grid::*;

    let mut grids: Vec<(Vec<usize>, Vec<f64>)> = SWEEP_GRIDS.iter().map(|(n, l)| (n.to_vec(), l.to_vec())).collect();
    if include_cube {
        grids.push((vec![9, 9, 9], vec![1.0, 1.0, 1.0]));
    }
    let mut rep = SweepReport::default();
    for (gi, (n, l)) in grids.iter().enumerate() {
        let grid = Grid::new(n, l).unwrap();
        let dense = Dense::new(n, l);
        for k in 0..per_grid {
            let seed = 1000 * gi as u64 + k as u64;
            let mp = ModelParams {
                chi: 0.3 + 0.1 * (k % 5) as f64,
                alpha: 0.25 * (k % 3) as f64,
                eps: 0.05 * (k % 4) as f64,
                ..model(0.0, 0.0, 0.0, 0.0)
            };
            let amp = 0.2 + 0.7 * ((k % 7) as f64 / 6.0);
            let mean_shift = 0.05 * ((k % 3) as f64 - 1.0);
            let s = random_state(&grid, seed, mean_shift, amp.min(0.9 - mean_shift.abs()));
            let prev = random_fluctuation(&grid, seed + 7, STREAM_PHI, 0.01).add(&s.phi).unwrap();
            let dt = 1e-2;
            let state = State {
                prev_phi: Some(prev.clone()),
                dt_last: dt,
                ..s.clone()
            };
            let f = vec_of(&s.phi);
            let sg = vec_of(&s.sigma);
            let phi_t = (vec_of(&s.phi) - vec_of(&prev)) / dt;
            let fl = s.phi.fluctuation();

            rep.record("mean", scaled_err(mean(&s.phi), dense.mean(&f)));
            rep.record("l2_inner", scaled_err(l2_inner(&s.phi, &s.sigma).unwrap(), dense.inner(&f, &sg)));
            rep.record("grad_inner", scaled_err(grad_inner(&s.phi, &s.sigma).unwrap(), dense.grad_inner(&f, &sg)));
            rep.record("laplacian", scaled_field_err(&laplacian_neumann(&s.phi), &dense.lap(&f)));
            rep.record("inv_laplacian", scaled_field_err(&inv_laplacian_zero_mean(&fl).unwrap(), &dense.inv_lap(&f)));
            rep.record("helmholtz_inverse", scaled_field_err(&helmholtz_inverse(&s.phi), &dense.helmholtz_inv(&f)));
            rep.record("dual_norm_v0", scaled_err(dual_norm_v0(&fl).unwrap(), dense.dual_v0(&vec_of(&fl))));
            rep.record("dual_norm_h1p", scaled_err(dual_norm_h1p(&s.phi), dense.dual_h1p(&f)));
            rep.record("energy_e", scaled_err(energy_e(&state, &mp).unwrap(), dense.energy(&f, &sg, &mp)));
            rep.record("lyapunov_f", scaled_err(lyapunov_f(&state, &mp).unwrap(), dense.lyapunov(&f, &sg, &mp)));
            rep.record("tilde_mu", scaled_field_err(&tilde_mu(&state, &mp).unwrap(), &dense.tilde_mu(&f, &sg, &phi_t, &mp)));
            if mp.eps > 0.0 {
                rep.record("tilde_h", scaled_field_err(&tilde_h(&state, &mp).unwrap(), &dense.tilde_h(&f, &sg, &phi_t, &mp)));
            }
            rep.fields += 1;
        }
    }
    rep
}
