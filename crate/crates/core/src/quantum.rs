//! Schrödinger scattering on the quadrant: bound states of the one-body
//! Hamiltonian, regular continuum waves, the 2D/3D solve on a rotated grid
//! and the single / double ionization integrals.
//!
//! Units follow `(-½Δ + V - E) u = φ`; the discrete systems are multiplied
//! by two so that they share the Helmholtz operator `-Δ - k²`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{Contour1D, ContourKind, TensorGrid};
use crate::linalg::BandLu;
use crate::multigrid::{source_on, ConvergenceReport, CycleSpec, Hierarchy, SmootherSpec};
use crate::operator::{AxisStencil, StencilOperator};
use crate::problems::SchrodingerProblem;
use crate::reference::{direct_solve_small, solve_ecs_krylov, MAX_DIRECT_UNKNOWNS};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Tag describing how continuum waves and cross sections are normalized.
pub const AMPLITUDE_CONVENTION: &str = "phi_k ~ sin(kx + delta)/sqrt(k); s_abs2 = |s_n|^2; sigma uses k0 = sqrt(2E)";

/// Eigenpair of `-½ d²/dx² + V` on `[0, R]` with Dirichlet ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundState {
    pub n: usize,
    pub lambda: f64,
    /// Grid spacing; node `j` sits at `x = j h`.
    pub h: f64,
    /// Values at all nodes including both zero endpoints, scaled so that
    /// `Σ φ_j² h = 1` and `φ_1 > 0`.
    pub values: Vec<f64>,
}

impl BoundState {
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.values.len()).map(|j| j as f64 * self.h).collect()
    }

    /// `‖(H - λ)φ‖ / ‖φ‖` over the interior nodes.
    pub fn residual(&self, v: &dyn Fn(f64) -> f64) -> f64 {
        let h2 = self.h * self.h;
        let p = &self.values;
        let mut r2 = 0.0;
        for j in 1..p.len() - 1 {
            let lap = (p[j - 1] - 2.0 * p[j] + p[j + 1]) / h2;
            let r = -0.5 * lap + (v(j as f64 * self.h) - self.lambda) * p[j];
            r2 += r * r;
        }
        r2.sqrt() / p.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

fn sturm_count(diag: &[f64], off: f64, x: f64) -> usize {
    let e2 = off * off;
    let mut q = 1.0;
    let mut count = 0;
    for (i, &d) in diag.iter().enumerate() {
        q = if i == 0 { d - x } else { d - x - e2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (d.abs() + off.abs());
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Solves `(T - s) x = b` for a tridiagonal `T` with constant off-diagonal,
/// by elimination without pivoting; near-zero pivots are nudged.
fn tridiag_solve<T>(lower: &[T], diag: &[T], upper: &[T], b: &[T]) -> Vec<T>
where
    T: Copy
        + std::ops::Sub<Output = T>
        + std::ops::Mul<Output = T>
        + std::ops::Div<Output = T>
        + Nudge,
{
    let n = diag.len();
    let mut c = vec![diag[0]; n];
    let mut d = b.to_vec();
    c[0] = diag[0].nudge();
    for i in 1..n {
        let m = lower[i] / c[i - 1];
        c[i] = (diag[i] - m * upper[i - 1]).nudge();
        d[i] = d[i] - m * d[i - 1];
    }
    let mut x = d;
    x[n - 1] = x[n - 1] / c[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = (x[i] - upper[i] * x[i + 1]) / c[i];
    }
    x
}

trait Nudge {
    fn nudge(self) -> Self;
}

impl Nudge for f64 {
    fn nudge(self) -> Self {
        if self.abs() < 1e-300 {
            1e-300
        } else {
            self
        }
    }
}

impl Nudge for Complex64 {
    fn nudge(self) -> Self {
        if self.norm() < 1e-300 {
            Complex64::new(1e-300, 0.0)
        } else {
            self
        }
    }
}

/// All negative eigenvalues of the second-order discretization of
/// `-½ d²/dx² + V` on `[0, r]` with `n_grid` intervals, by Sturm bisection,
/// and their eigenvectors by inverse iteration. Ordered by energy.
pub fn bound_states_1d(v: &dyn Fn(f64) -> f64, r: f64, n_grid: usize) -> Result<Vec<BoundState>> {
    if !(r > 0.0) || n_grid < 3 {
        return Err(Error::Domain(format!(
            "bound states need R > 0 and at least 3 intervals, got R={r}, n={n_grid}"
        )));
    }
    let h = r / n_grid as f64;
    let m = n_grid - 1;
    let off = -0.5 / (h * h);
    let diag: Vec<f64> = (1..=m).map(|j| 1.0 / (h * h) + v(j as f64 * h)).collect();
    let count = sturm_count(&diag, off, 0.0);
    let lo0 = diag.iter().cloned().fold(f64::INFINITY, f64::min) - 2.0 * off.abs();
    let mut states = Vec::with_capacity(count);
    for idx in 0..count {
        let (mut lo, mut hi) = (lo0, 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if sturm_count(&diag, off, mid) > idx {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let lambda = 0.5 * (lo + hi);
        let shifted: Vec<f64> = diag.iter().map(|d| d - lambda).collect();
        let offs = vec![off; m];
        let mut x: Vec<f64> = (0..m).map(|j| 1.0 + 0.01 * (j % 7) as f64).collect();
        for _ in 0..4 {
            x = tridiag_solve(&offs, &shifted, &offs, &x);
            let s = x.iter().map(|a| a * a).sum::<f64>().sqrt();
            x.iter_mut().for_each(|a| *a /= s);
        }
        let norm = (x.iter().map(|a| a * a).sum::<f64>() * h).sqrt();
        let sign = if x[0] < 0.0 { -1.0 } else { 1.0 };
        let mut values = Vec::with_capacity(n_grid + 1);
        values.push(0.0);
        values.extend(x.iter().map(|a| sign * a / norm));
        values.push(0.0);
        states.push(BoundState {
            n: idx,
            lambda,
            h,
            values,
        });
    }
    Ok(states)
}

/// The bound state with energy near `lambda`, recomputed on an arbitrary
/// contour (rotated or ECS) by shifted inverse iteration with the contour's
/// three-point stencil. Values are returned at all contour nodes, scaled so
/// that the unconjugated trapezoid sum `Σ φ² w` is one and `Re(φ_1/z_1) > 0`,
/// which makes them the analytic continuation of the real-axis state.
pub fn bound_state_on_contour(
    v: &dyn Fn(Complex64) -> Complex64,
    lambda: f64,
    contour: &Contour1D,
) -> Result<Vec<Complex64>> {
    let m = contour.interior_len();
    if m < 2 {
        return Err(Error::Domain("contour too short for a bound state".into()));
    }
    let st = AxisStencil::from_contour(contour);
    let z = contour.interior_nodes();
    let lower: Vec<Complex64> = st.lower.iter().map(|c| -0.5 * c).collect();
    let upper: Vec<Complex64> = st.upper.iter().map(|c| -0.5 * c).collect();
    let diag: Vec<Complex64> = (0..m).map(|j| -0.5 * st.center[j] + v(z[j]) - lambda).collect();
    let mut x: Vec<Complex64> = vec![Complex64::new(1.0, 0.0); m];
    for _ in 0..6 {
        x = tridiag_solve(&lower, &diag, &upper, &x);
        let s = x.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        x.iter_mut().for_each(|a| *a /= s);
    }
    let w = contour.trapezoid_weights();
    let q: Complex64 = x.iter().zip(&w[1..]).map(|(a, w)| a * a * w).sum();
    let mut scale = q.sqrt().inv();
    if (x[0] * scale / z[0]).re < 0.0 {
        scale = -scale;
    }
    let mut out = Vec::with_capacity(m + 2);
    out.push(ZERO);
    out.extend(x.iter().map(|a| a * scale));
    out.push(ZERO);
    Ok(out)
}

/// Regular solution of `(-½ d²/dx² + V - k²/2) φ = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuumWave {
    pub k: f64,
    /// Asymptotic phase `δ` of the real-axis wave `sin(kx + δ)/√k`.
    pub phase_shift: f64,
    /// Factor applied to the unit-slope solution (`φ'(0) = 1`).
    pub scale: f64,
    pub nodes: Vec<Complex64>,
    pub values: Vec<Complex64>,
    pub convention: String,
}

/// Numerov recurrence for `y'' = g(z) y` along `count` equal steps `h`,
/// starting from `y(0) = 0`, `y'(0) = 1`. Returns every `stride`-th value.
fn numerov(g: &dyn Fn(Complex64) -> Complex64, h: Complex64, count: usize, stride: usize) -> Vec<Complex64> {
    let c = h * h / 12.0;
    let mut out = Vec::with_capacity(count / stride + 1);
    out.push(ZERO);
    let (mut g0, mut g1) = (g(ZERO), g(h));
    // Taylor start, so that y(h) is analytic in h to fifth order
    let g2 = g(h * 2.0);
    let dg = (g1 * 4.0 - g0 * 3.0 - g2) / 2.0;
    let ddg = g0 - g1 * 2.0 + g2;
    let y_h = h * (1.0 + g0 * h * h / 6.0 + dg * h * h / 12.0 + (ddg * 3.0 + g0 * g0 * h * h) * h * h / 120.0);
    let (mut y0, mut y1) = (ZERO, y_h);
    if stride == 1 {
        out.push(y1);
    }
    for j in 2..=count {
        let z = h * j as f64;
        let g2 = g(z);
        let y2 = (y1 * (2.0 + 10.0 * c * g1) - y0 * (1.0 - c * g0)) / (1.0 - c * g2);
        y0 = y1;
        y1 = y2;
        g0 = g1;
        g1 = g2;
        if j % stride == 0 {
            out.push(y2);
        }
    }
    out
}

/// Regular continuum wave on a straight contour `[0, b] e^{iγ}` (real when
/// `γ = 0`), by Numerov integration from the origin with `φ(0) = 0`,
/// `φ'(0) = 1`. Amplitude and phase are fitted on the real axis over the
/// outer tenth of `[0, b]`, where the potential must have died out, and the
/// same scale factor is applied to the rotated wave.
pub fn continuum_wave(v: &dyn Fn(Complex64) -> Complex64, k: f64, contour: &Contour1D) -> Result<ContinuumWave> {
    if !(k > 0.0) {
        return Err(Error::ChannelClosed(format!("continuum wave needs k > 0, got {k}")));
    }
    let gamma = match contour.kind() {
        ContourKind::Rotated { gamma } => gamma,
        ContourKind::EcsReal { .. } => {
            return Err(Error::Unsupported("continuum waves are built on straight contours".into()))
        }
    };
    if contour.a() != 0.0 {
        return Err(Error::Domain(format!("contour must start at the origin, got a={}", contour.a())));
    }
    let b = contour.b();
    let n = contour.n_intervals();
    let h = contour.h();
    let window = 0.9 * b;
    let vmax = (0..=200)
        .map(|j| v(Complex64::new(j as f64 * b / 200.0, 0.0)).norm())
        .fold(0.0, f64::max);
    let tail = v(Complex64::new(window, 0.0)).norm().max(v(Complex64::new(b, 0.0)).norm());
    if tail >= 1e-10 {
        return Err(Error::Domain(format!(
            "potential {tail:e} not negligible in the matching window [{window}, {b}]"
        )));
    }
    let kmax = k.max((2.0 * vmax).sqrt()).max(1.0);
    let sub = ((h * kmax / 0.01).ceil() as usize).max(1);
    let hs = h / sub as f64;
    let count = n * sub;

    let g_real = |z: Complex64| v(z) * 2.0 - k * k;
    let real = numerov(&g_real, Complex64::new(hs, 0.0), count, 1);
    let j2 = count;
    let back = ((PI / (2.0 * k)).min(0.1 * b) / hs).round().max(1.0) as usize;
    let j1 = j2 - back;
    let (x1, x2) = (j1 as f64 * hs, j2 as f64 * hs);
    let (y1, y2) = (real[j1].re, real[j2].re);
    // y = p sin(kx) + q cos(kx)
    let det = (k * x1).sin() * (k * x2).cos() - (k * x1).cos() * (k * x2).sin();
    let p = (y1 * (k * x2).cos() - y2 * (k * x1).cos()) / det;
    let q = ((k * x1).sin() * y2 - (k * x2).sin() * y1) / det;
    let amp = p.hypot(q);
    let phase_shift = q.atan2(p);
    let scale = 1.0 / (amp * k.sqrt());

    let values = if gamma == 0.0 {
        real.iter().step_by(sub).map(|y| y * scale).collect()
    } else {
        let rot = Complex64::from_polar(1.0, gamma);
        let g = |z: Complex64| v(z) * 2.0 - k * k;
        numerov(&g, rot * hs, count, sub).into_iter().map(|y| y * scale).collect()
    };
    Ok(ContinuumWave {
        k,
        phase_shift,
        scale,
        nodes: contour.nodes().to_vec(),
        values,
        convention: AMPLITUDE_CONVENTION.to_string(),
    })
}

/// Checks that every axis is a straight ray leaving the origin.
fn check_quadrant_grid(grid: &TensorGrid, allow_ecs: bool) -> Result<()> {
    for ax in grid.axes() {
        if ax.a() != 0.0 {
            return Err(Error::Domain(format!("grid axes must start at 0, got {}", ax.a())));
        }
        match ax.kind() {
            ContourKind::Rotated { .. } => {}
            ContourKind::EcsReal { n_left, .. } => {
                if !allow_ecs || n_left != 0 {
                    return Err(Error::Domain("expected a rotated grid anchored at the origin".into()));
                }
            }
        }
    }
    Ok(())
}

/// Rotated quadrant/octant grid `[0, extent]^d e^{iγ}`.
pub fn rotated_grid(problem: &SchrodingerProblem, n: usize, gamma: f64) -> Result<TensorGrid> {
    TensorGrid::cube(Contour1D::rotated(0.0, problem.extent, n, gamma)?, problem.dim)
}

/// Real grid on `[0, extent]^d` with an ECS layer of `n_layer` intervals at
/// angle `theta` past the far edge of each axis.
pub fn ecs_grid(problem: &SchrodingerProblem, n: usize, theta: f64, n_layer: usize) -> Result<TensorGrid> {
    TensorGrid::cube(Contour1D::ecs(0.0, problem.extent, n, theta, 0, n_layer)?, problem.dim)
}

/// Solves `(-Δ - 2(E - V)) u = 2φ` on a rotated grid anchored at the origin
/// with V-cycles from a zero guess. Non-convergence is reported, not raised.
pub fn solve_schrodinger(
    problem: &SchrodingerProblem,
    grid: &TensorGrid,
    cycle: &CycleSpec,
    smoother: &SmootherSpec,
    tol: f64,
    max_iters: usize,
) -> Result<(Field, ConvergenceReport)> {
    check_quadrant_grid(grid, false)?;
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    let hierarchy = Hierarchy::new(grid, problem, *cycle)?;
    let f = source_on(grid, problem);
    let mut u = Field::zeros(&grid.interior_shape());
    let report = hierarchy.solve(&mut u, &f, tol, max_iters, smoother)?;
    Ok((u, report))
}

/// Solves the same equation on a real grid with ECS layers: banded LU when
/// small enough, otherwise shifted-Laplacian preconditioned FGMRES.
pub fn solve_schrodinger_reference(
    problem: &SchrodingerProblem,
    grid: &TensorGrid,
    tol: f64,
) -> Result<(Field, Option<ConvergenceReport>)> {
    check_quadrant_grid(grid, true)?;
    let op = StencilOperator::new(grid, problem);
    let band_bytes = crate::linalg::BandLu::memory_bytes(op.len(), op.bandwidth());
    if op.len() <= MAX_DIRECT_UNKNOWNS && band_bytes <= 400 << 20 {
        let u = direct_solve_small(&op, &source_on(grid, problem))?;
        return Ok((u, None));
    }
    let (u, report) = solve_ecs_krylov(problem, grid, tol)?;
    if !report.converged {
        return Err(Error::NoConvergence(format!(
            "reference Krylov solve stalled at {:e}",
            report.final_residual()
        )));
    }
    Ok((u, Some(report)))
}

/// Lowest eigenpair of the 2D Hamiltonian `-½Δ + V_1 + V_2 + V_12` on a real
/// grid, by inverse iteration shifted at `shift_guess` with a banded LU.
/// Returns the eigenvalue and a unit-norm state.
pub fn bound_state_2d(problem: &SchrodingerProblem, grid: &TensorGrid, shift_guess: f64) -> Result<(f64, Field)> {
    if grid.dim() != 2 || grid.gamma() != Some(0.0) {
        return Err(Error::Domain("2D bound state needs a real 2D grid".into()));
    }
    let n = grid.interior_count();
    if n > 255 * 255 {
        return Err(Error::TooLarge {
            unknowns: n,
            limit: 255 * 255,
        });
    }
    // A = 2(H - shift)
    let op = StencilOperator::new(grid, &problem.with_energy(shift_guess));
    let lu = BandLu::factor(n, op.bandwidth(), |row, out| op.row_entries(row, out))?;
    let mut x = vec![Complex64::new(1.0, 0.0); n];
    let mut ax = vec![ZERO; n];
    let mut mu_prev = f64::NAN;
    for _ in 0..50 {
        let mut y = lu.solve(&x);
        let s = crate::field::norm(&y);
        y.iter_mut().for_each(|a| *a /= s);
        op.apply_into(&y, &mut ax);
        let mu = shift_guess + 0.5 * crate::field::dot(&y, &ax).re;
        x = y;
        if (mu - mu_prev).abs() <= 1e-12 * mu.abs().max(1.0) {
            return Ok((mu, Field::from_vec(op.shape(), x)?));
        }
        mu_prev = mu;
    }
    Err(Error::NoConvergence("2D inverse iteration did not settle in 50 steps".into()))
}

/// `φ - V_12 u` at the interior nodes of a 2D grid.
fn effective_source(u: &Field, problem: &SchrodingerProblem, grid: &TensorGrid) -> Result<Vec<Complex64>> {
    if grid.dim() != 2 || problem.dim != 2 {
        return Err(Error::Unsupported("ionization integrals are implemented for the 2D model".into()));
    }
    u.check_shape(&grid.interior_shape())?;
    let mut g = vec![ZERO; u.len()];
    grid.for_each_interior(|i, z| {
        g[i] = problem.rhs_phi(z) - problem.two_body(z[0], z[1]) * u[i];
    });
    Ok(g)
}

/// Complex quadrature weights at the interior nodes of one axis.
fn interior_weights(axis: &Contour1D) -> Vec<Complex64> {
    let w = axis.trapezoid_weights();
    w[1..w.len() - 1].to_vec()
}

/// Regular continuum wave at the interior nodes of a grid axis. On an ECS
/// axis the wave is built on the real segment; the absorbing layer lies
/// beyond the support of the (Gaussian-localized) effective source and
/// receives zeros.
fn continuum_on_axis(problem: &SchrodingerProblem, k: f64, axis: &Contour1D) -> Result<Vec<Complex64>> {
    let v = |z: Complex64| problem.one_body(z);
    let m = axis.interior_len();
    match axis.kind() {
        ContourKind::Rotated { .. } => {
            let w = continuum_wave(&v, k, axis)?;
            Ok(w.values[1..=m].to_vec())
        }
        ContourKind::EcsReal { .. } => {
            let real = Contour1D::real(axis.a(), axis.b(), axis.n_intervals())?;
            let w = continuum_wave(&v, k, &real)?;
            let mut out = w.values[1..].to_vec();
            out.resize(m, ZERO);
            Ok(out)
        }
    }
}

/// Bound state `φ_n` continued onto an axis, at its interior nodes.
pub fn bound_on_axis(problem: &SchrodingerProblem, lambda: f64, axis: &Contour1D) -> Result<Vec<Complex64>> {
    let v = |z: Complex64| problem.one_body(z);
    let full = bound_state_on_contour(&v, lambda, axis)?;
    Ok(full[1..full.len() - 1].to_vec())
}

/// `Σ_ij a_i b_j w_i w_j g_ij` over the interior of a 2D grid.
fn bilinear(a: &[Complex64], b: &[Complex64], wx: &[Complex64], wy: &[Complex64], g: &[Complex64]) -> Complex64 {
    let ny = wy.len();
    let by: Vec<Complex64> = b.iter().zip(wy).map(|(b, w)| b * w).collect();
    (0..wx.len())
        .map(|i| {
            let row: Complex64 = g[i * ny..(i + 1) * ny].iter().zip(&by).map(|(g, b)| g * b).sum();
            a[i] * wx[i] * row
        })
        .sum()
}

fn channel_momentum(energy: f64, lambda: f64) -> Result<f64> {
    if energy < lambda {
        return Err(Error::ChannelClosed(format!("E = {energy} below threshold {lambda}")));
    }
    Ok((2.0 * (energy - lambda)).sqrt())
}

/// Single ionization amplitude
/// `s_n = ∫ φ_{k_n}(x) φ_n(y) [φ - V_12 u] dx dy` with `k_n = √(2(E - λ_n))`,
/// evaluated by the trapezoid rule along the grid's contour. Zero at the
/// threshold `E = λ_n`.
pub fn single_ionization(
    u: &Field,
    problem: &SchrodingerProblem,
    bound: &BoundState,
    grid: &TensorGrid,
) -> Result<Complex64> {
    let k = channel_momentum(problem.energy, bound.lambda)?;
    if k == 0.0 {
        return Ok(ZERO);
    }
    let g = effective_source(u, problem, grid)?;
    let phik = continuum_on_axis(problem, k, grid.axis(0))?;
    let phin = bound_on_axis(problem, bound.lambda, grid.axis(1))?;
    Ok(bilinear(&phik, &phin, &interior_weights(grid.axis(0)), &interior_weights(grid.axis(1)), &g))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleSample {
    pub alpha: f64,
    pub k1: f64,
    pub k2: f64,
    pub f: Complex64,
    pub sigma: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DoubleIonization {
    /// Midpoint samples over `α ∈ (0, π/2)`.
    pub samples: Vec<DoubleSample>,
    /// `∫_0^E σ(√(2ε), √(2(E-ε))) dε` by the midpoint rule in `ε`.
    pub sigma_tot: f64,
    /// The same integral without the `8π²/k0²` factor.
    pub sigma_tot_unscaled: f64,
}

fn double_amplitude(
    problem: &SchrodingerProblem,
    grid: &TensorGrid,
    g: &[Complex64],
    wx: &[Complex64],
    wy: &[Complex64],
    k1: f64,
    k2: f64,
) -> Result<Complex64> {
    let a = continuum_on_axis(problem, k1, grid.axis(0))?;
    let b = continuum_on_axis(problem, k2, grid.axis(1))?;
    Ok(bilinear(&a, &b, wx, wy, g))
}

/// `σ = (8π²/k0²) |f|² / (k1 k2)` with `k0 = √(2E)`.
pub fn sigma(energy: f64, k1: f64, k2: f64, f: Complex64) -> f64 {
    let k0sq = 2.0 * energy;
    8.0 * PI * PI / k0sq * f.norm_sqr() / (k1 * k2)
}

/// Double ionization amplitudes `f(k1, k2)` at `n_alpha` midpoint angles,
/// `k1 = √(2E) sin α`, `k2 = √(2E) cos α`, and the total cross section.
/// Empty for `E ≤ 0`.
pub fn double_ionization(u: &Field, problem: &SchrodingerProblem, grid: &TensorGrid, n_alpha: usize) -> Result<DoubleIonization> {
    if n_alpha < 8 {
        return Err(Error::Config(format!("need at least 8 breakup angles, got {n_alpha}")));
    }
    let e = problem.energy;
    if e <= 0.0 {
        return Ok(DoubleIonization::default());
    }
    let g = effective_source(u, problem, grid)?;
    let wx = interior_weights(grid.axis(0));
    let wy = interior_weights(grid.axis(1));
    let kt = (2.0 * e).sqrt();
    let samples = (0..n_alpha)
        .into_par_iter()
        .map(|i| {
            let alpha = (i as f64 + 0.5) * PI / (2.0 * n_alpha as f64);
            let (k1, k2) = (kt * alpha.sin(), kt * alpha.cos());
            let f = double_amplitude(problem, grid, &g, &wx, &wy, k1, k2)?;
            Ok(DoubleSample {
                alpha,
                k1,
                k2,
                f,
                sigma: sigma(e, k1, k2, f),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let de = e / n_alpha as f64;
    let sigma_tot = (0..n_alpha)
        .into_par_iter()
        .map(|i| {
            let eps = (i as f64 + 0.5) * de;
            let (k1, k2) = ((2.0 * eps).sqrt(), (2.0 * (e - eps)).sqrt());
            let f = double_amplitude(problem, grid, &g, &wx, &wy, k1, k2)?;
            Ok(sigma(e, k1, k2, f) * de)
        })
        .collect::<Result<Vec<f64>>>()?
        .iter()
        .sum();
    Ok(DoubleIonization {
        samples,
        sigma_tot,
        sigma_tot_unscaled: sigma_tot * 2.0 * e / (8.0 * PI * PI),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelAmplitude {
    pub n: usize,
    pub lambda: f64,
    pub open: bool,
    pub k: Option<f64>,
    pub amplitude: Option<Complex64>,
    /// `|s_n|²`; zero for a closed channel.
    pub s_abs2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IonizationResult {
    pub energy: f64,
    pub single: Vec<ChannelAmplitude>,
    pub double: DoubleIonization,
    pub sigma_tot: f64,
    pub convention: BTreeMap<String, String>,
}

pub fn convention_tags() -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    m.insert("continuum_normalization".into(), "amplitude 1/sqrt(k)".into());
    m.insert("single_quantity".into(), "|s_n|^2".into());
    m.insert("sigma_k0".into(), "k0 = sqrt(2E)".into());
    m
}

/// All amplitudes at the problem's energy from a solution `u` on `grid`.
pub fn ionization(
    u: &Field,
    problem: &SchrodingerProblem,
    bound: &[BoundState],
    grid: &TensorGrid,
    n_alpha: usize,
) -> Result<IonizationResult> {
    let e = problem.energy;
    let single = bound
        .iter()
        .map(|b| {
            if e < b.lambda {
                return Ok(ChannelAmplitude {
                    n: b.n,
                    lambda: b.lambda,
                    open: false,
                    k: None,
                    amplitude: None,
                    s_abs2: 0.0,
                });
            }
            let s = single_ionization(u, problem, b, grid)?;
            Ok(ChannelAmplitude {
                n: b.n,
                lambda: b.lambda,
                open: e > b.lambda,
                k: Some((2.0 * (e - b.lambda)).sqrt()),
                amplitude: Some(s),
                s_abs2: s.norm_sqr(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let double = double_ionization(u, problem, grid, n_alpha)?;
    Ok(IonizationResult {
        energy: e,
        single,
        sigma_tot: double.sigma_tot,
        double,
        convention: convention_tags(),
    })
}

/// Settings of an energy scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub cycle: CycleSpec,
    pub smoother: SmootherSpec,
    pub tol: f64,
    pub max_iters: usize,
    /// Cycles over which the reported rate is averaged.
    pub rate_cycles: usize,
    /// Breakup angles for the double ionization block; `None` skips the
    /// amplitudes.
    pub n_alpha: Option<usize>,
    /// When set, an F(s) full multigrid pass provides the initial guess and
    /// the rate is measured on the V-cycles that follow it.
    #[serde(default)]
    pub fmg_warmup: Option<usize>,
}

impl ScanSpec {
    /// V(1,1) with GMRES(3), tolerance 1e-6, F(5) warmup; rate over 4 cycles
    /// in 2D and 3 cycles in 3D.
    pub fn for_dim(dim: usize) -> Self {
        Self {
            cycle: CycleSpec::default(),
            smoother: SmootherSpec::default(),
            tol: 1e-6,
            max_iters: 100,
            rate_cycles: if dim == 3 { 3 } else { 4 },
            n_alpha: None,
            fmg_warmup: Some(5),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub energy: f64,
    pub report: ConvergenceReport,
    /// `(‖r_k‖/‖r_0‖)^{1/k}` with `k = rate_cycles` (or fewer if the solve
    /// stopped earlier).
    pub rate: f64,
    pub ionization: Option<IonizationResult>,
}

/// Solves the problem at every energy on the same rotated grid. Amplitudes
/// are computed only for converged 2D solves.
pub fn energy_scan(
    problem: &SchrodingerProblem,
    energies: &[f64],
    grid: &TensorGrid,
    spec: &ScanSpec,
    bound: &[BoundState],
) -> Result<Vec<ScanPoint>> {
    check_quadrant_grid(grid, false)?;
    energies
        .par_iter()
        .map(|&e| {
            let p = problem.with_energy(e);
            let (u, report) = match spec.fmg_warmup {
                None => solve_schrodinger(&p, grid, &spec.cycle, &spec.smoother, spec.tol, spec.max_iters)?,
                Some(s) => solve_after_fmg(&p, grid, spec, s)?,
            };
            let rate = report.factor_after(spec.rate_cycles).unwrap_or(report.avg_factor);
            let ionization = match spec.n_alpha {
                Some(n_alpha) if report.converged && grid.dim() == 2 => Some(ionization(&u, &p, bound, grid, n_alpha)?),
                _ => None,
            };
            Ok(ScanPoint {
                energy: e,
                report,
                rate,
                ionization,
            })
        })
        .collect()
}

/// F(s) full multigrid pass, then V-cycles from its result.
fn solve_after_fmg(
    problem: &SchrodingerProblem,
    grid: &TensorGrid,
    spec: &ScanSpec,
    s: usize,
) -> Result<(Field, ConvergenceReport)> {
    let cycle = CycleSpec {
        cycles_per_level: Some(s),
        ..spec.cycle
    };
    let hierarchy = Hierarchy::new(grid, problem, cycle)?;
    let rhs: Vec<Field> = hierarchy.levels().iter().map(|op| source_on(op.grid(), problem)).collect();
    let (mut u, _) = hierarchy.fmg(&rhs, spec.tol, spec.max_iters, &spec.smoother)?;
    let report = hierarchy.solve_with(
        &mut u,
        &rhs[0],
        spec.tol,
        Some(rhs[0].norm()),
        spec.rate_cycles,
        spec.max_iters,
        &spec.smoother,
    )?;
    Ok((u, report))
}

/// Default bound states of the benchmark one-body potential (`R = 20`,
/// 2000 intervals).
pub fn benchmark_bound_states(problem: &SchrodingerProblem) -> Result<Vec<BoundState>> {
    let v = |x: f64| problem.one_body(Complex64::new(x, 0.0)).re;
    bound_states_1d(&v, 20.0, 2000)
}
