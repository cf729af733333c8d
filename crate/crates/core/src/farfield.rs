//! Far-field amplitude map `F(α) = ∫ e^{-i k0 x·α} g(x) dx` with
//! `g = k0² χ (u_in + u)`, split into the incoming-wave part `I1` (real grid)
//! and the scattered part `I2`, evaluated along whatever contour the
//! scattered wave was solved on.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{Contour1D, TensorGrid};
use crate::multigrid::{solve_vcycles, ConvergenceReport, CycleSpec, SmootherSpec};
use crate::operator::StencilOperator;
use crate::problems::{Coefficients, Scatterer};
use crate::reference::{direct_solve_small, solve_ecs_krylov};

const OVERFLOW: f64 = 1e300;

/// Outgoing directions with their defining angles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionSet {
    pub dim: usize,
    /// 2D: `[α]`; 3D: `[polar, azimuth]`.
    pub angles: Vec<Vec<f64>>,
    pub units: Vec<Vec<f64>>,
}

impl DirectionSet {
    /// `n` equispaced angles on `[0, 2π)`.
    pub fn circle(n: usize) -> Self {
        let angles: Vec<Vec<f64>> = (0..n).map(|j| vec![2.0 * PI * j as f64 / n as f64]).collect();
        Self::from_angles(2, angles)
    }

    /// Latitude-longitude grid: polar midpoints on `(0, π)`, azimuths on
    /// `[0, 2π)`.
    pub fn sphere(n_polar: usize, n_azimuth: usize) -> Self {
        let mut angles = Vec::with_capacity(n_polar * n_azimuth);
        for i in 0..n_polar {
            let t = PI * (i as f64 + 0.5) / n_polar as f64;
            for j in 0..n_azimuth {
                angles.push(vec![t, 2.0 * PI * j as f64 / n_azimuth as f64]);
            }
        }
        Self::from_angles(3, angles)
    }

    pub fn default_for(dim: usize) -> Result<Self> {
        match dim {
            2 => Ok(Self::circle(360)),
            3 => Ok(Self::sphere(64, 128)),
            _ => Err(Error::Domain(format!("far field needs d = 2 or 3, got {dim}"))),
        }
    }

    /// Builds unit vectors from 2D angles `[α]` or 3D `[polar, azimuth]`.
    pub fn from_angles(dim: usize, angles: Vec<Vec<f64>>) -> Self {
        let units = angles
            .iter()
            .map(|a| match dim {
                2 => vec![a[0].cos(), a[0].sin()],
                _ => vec![a[0].sin() * a[1].cos(), a[0].sin() * a[1].sin(), a[0].cos()],
            })
            .collect();
        Self { dim, angles, units }
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }
}

/// `D(ρ)` with `u(ρ α) ≈ D(ρ) F(α)` as `ρ → ∞`.
pub fn prefactor(dim: usize, k0: f64, rho: f64) -> Complex64 {
    let outgoing = Complex64::from_polar(1.0, k0 * rho);
    match dim {
        2 => Complex64::new(0.0, 0.25) * (2.0 / PI).sqrt() * Complex64::from_polar(1.0, -PI / 4.0) * outgoing
            / (k0 * rho).sqrt(),
        _ => outgoing / (4.0 * PI * rho),
    }
}

pub fn prefactor_descriptor(dim: usize) -> &'static str {
    match dim {
        2 => "(i/4)*sqrt(2/pi)*exp(-i*pi/4)*exp(i*k0*rho)/sqrt(k0*rho)",
        _ => "exp(i*k0*rho)/(4*pi*rho)",
    }
}

/// Tensor-trapezoid evaluation of `Σ_x W(x) v(x) e^{-i k0 x·α}` for every
/// direction, where `W` is the product of per-axis weights. `values` is laid
/// out over `nodes` (first axis slowest). The last axis is contracted once
/// per distinct last direction component.
pub fn fourier_sum(
    nodes: &[&[Complex64]],
    weights: &[Vec<Complex64>],
    values: &[Complex64],
    k0: f64,
    dirs: &DirectionSet,
) -> Result<Vec<Complex64>> {
    let d = nodes.len();
    let shape: Vec<usize> = nodes.iter().map(|n| n.len()).collect();
    assert_eq!(values.len(), shape.iter().product::<usize>());
    if let Some(v) = values.iter().find(|v| !(v.norm() <= OVERFLOW)) {
        return Err(Error::RotationTooLarge(v.norm()));
    }
    let phase = |ax: usize, a: f64| -> Result<Vec<Complex64>> {
        nodes[ax]
            .iter()
            .zip(&weights[ax])
            .map(|(z, w)| {
                let e = (Complex64::new(0.0, -k0 * a) * z).exp();
                if !(e.norm() <= OVERFLOW) {
                    return Err(Error::RotationTooLarge(e.norm()));
                }
                Ok(e * w)
            })
            .collect()
    };
    // group directions by their last component
    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, u) in dirs.units.iter().enumerate() {
        groups.entry(u[d - 1].to_bits()).or_default().push(i);
    }
    let inner = shape[d - 1];
    let outer = values.len() / inner;
    let partials: Vec<(Vec<usize>, Result<Vec<Complex64>>)> = groups
        .into_par_iter()
        .map(|(bits, members)| {
            let last = match phase(d - 1, f64::from_bits(bits)) {
                Ok(p) => p,
                Err(e) => return (members, Err(e)),
            };
            let reduced: Vec<Complex64> = (0..outer)
                .map(|o| {
                    values[o * inner..(o + 1) * inner]
                        .iter()
                        .zip(&last)
                        .map(|(v, p)| v * p)
                        .sum()
                })
                .collect();
            let out: Result<Vec<Complex64>> = members
                .iter()
                .map(|&m| {
                    let a = &dirs.units[m];
                    let mut acc = reduced.clone();
                    let mut len = outer;
                    for ax in (0..d - 1).rev() {
                        let p = phase(ax, a[ax])?;
                        let n = shape[ax];
                        len /= n;
                        acc = (0..len)
                            .map(|o| (0..n).map(|j| acc[o * n + j] * p[j]).sum())
                            .collect();
                    }
                    Ok(acc[0])
                })
                .collect();
            (members, out)
        })
        .collect();
    let mut result = vec![Complex64::new(0.0, 0.0); dirs.len()];
    for (members, vals) in partials {
        for (m, v) in members.into_iter().zip(vals?) {
            result[m] = v;
        }
    }
    Ok(result)
}

/// `I1 = ∫ e^{-i k0 x·α} k0² χ(x) u_in(x) dx` by the trapezoid rule over all
/// nodes of a real grid.
pub fn integral_i1<S: Scatterer + ?Sized>(problem: &S, real_grid: &TensorGrid, dirs: &DirectionSet) -> Result<Vec<Complex64>> {
    let nodes: Vec<&[Complex64]> = real_grid.axes().iter().map(|a| a.nodes()).collect();
    let weights: Vec<Vec<Complex64>> = real_grid.axes().iter().map(Contour1D::trapezoid_weights).collect();
    let shape: Vec<usize> = nodes.iter().map(|n| n.len()).collect();
    let total: usize = shape.iter().product();
    let mut values = Vec::with_capacity(total);
    let mut idx = vec![0usize; shape.len()];
    let mut z = vec![Complex64::new(0.0, 0.0); shape.len()];
    for _ in 0..total {
        for (ax, &i) in idx.iter().enumerate() {
            z[ax] = nodes[ax][i];
        }
        values.push(problem.contrast(&z) * problem.incoming(&z));
        for ax in (0..shape.len()).rev() {
            idx[ax] += 1;
            if idx[ax] < shape[ax] {
                break;
            }
            idx[ax] = 0;
        }
    }
    fourier_sum(&nodes, &weights, &values, problem.k0(), dirs)
}

/// `I2 = ∫ e^{-i k0 z·α} k0² χ(z) u(z) dz` along the grid's contour, with
/// complex trapezoid weights. On a rotated grid the weights carry the
/// Jacobian `e^{iγ}` per axis. `u` vanishes on the boundary, so only
/// interior nodes contribute.
pub fn integral_i2_complex<S: Scatterer + ?Sized>(
    u: &Field,
    problem: &S,
    grid: &TensorGrid,
    dirs: &DirectionSet,
) -> Result<Vec<Complex64>> {
    u.check_shape(&grid.interior_shape())?;
    let nodes: Vec<&[Complex64]> = grid.axes().iter().map(|a| a.interior_nodes()).collect();
    let weights: Vec<Vec<Complex64>> = grid
        .axes()
        .iter()
        .map(|a| {
            let w = a.trapezoid_weights();
            w[1..w.len() - 1].to_vec()
        })
        .collect();
    let mut values = Vec::with_capacity(u.len());
    let mut overflow = None;
    grid.for_each_interior(|i, z| {
        let c = problem.contrast(z);
        if !(c.norm() <= OVERFLOW) {
            overflow.get_or_insert(c.norm());
        }
        values.push(c * u[i]);
    });
    if let Some(m) = overflow {
        return Err(Error::RotationTooLarge(m));
    }
    fourier_sum(&nodes, &weights, &values, problem.k0(), dirs)
}

/// How the scattered wave is computed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FarFieldSolver {
    /// V-cycles on a rotated grid.
    Multigrid {
        tol: f64,
        max_iters: usize,
        #[serde(default)]
        smoother: SmootherSpec,
    },
    /// Banded LU, any grid.
    Direct,
    /// FGMRES with a shifted-Laplacian V-cycle, any grid.
    Krylov { tol: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FarFieldMap {
    pub dim: usize,
    pub k0: f64,
    pub directions: DirectionSet,
    pub values: Vec<Complex64>,
    pub prefactor: String,
    pub report: Option<ConvergenceReport>,
    pub meta: BTreeMap<String, String>,
}

impl FarFieldMap {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(if self.dim == 2 {
            "alpha_rad,re_F,im_F,abs_F\n"
        } else {
            "polar_rad,azimuth_rad,re_F,im_F,abs_F\n"
        });
        for (a, v) in self.directions.angles.iter().zip(&self.values) {
            for x in a {
                s.push_str(&format!("{x:.12e},"));
            }
            s.push_str(&format!("{:.12e},{:.12e},{:.12e}\n", v.re, v.im, v.norm()));
        }
        s
    }

    /// `‖F - other‖₂ / ‖reference‖₂` over directions.
    pub fn relative_difference(&self, other: &FarFieldMap, reference: &FarFieldMap) -> f64 {
        let d: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        let r: f64 = reference.values.iter().map(|a| a.norm_sqr()).sum();
        (d / r).sqrt()
    }
}

/// Real grid `[-w, w]^d` with `n` intervals per axis, used for `I1`.
pub fn real_quadrature_grid(dim: usize, half_width: f64, n: usize) -> Result<TensorGrid> {
    TensorGrid::cube(Contour1D::real(-half_width, half_width, n)?, dim)
}

/// Solves for the scattered wave on `grid` and returns `F = I1 + I2`. `I1`
/// uses a real grid over the problem's box with the same per-axis interval
/// count as `grid`.
pub fn farfield_map<S: Scatterer>(
    problem: &S,
    half_width: f64,
    grid: &TensorGrid,
    solver: FarFieldSolver,
    dirs: &DirectionSet,
) -> Result<FarFieldMap> {
    if dirs.dim != problem.dim() || grid.dim() != problem.dim() {
        return Err(Error::Config("dimension mismatch between problem, grid and directions".into()));
    }
    let (u, report) = match solver {
        FarFieldSolver::Multigrid { tol, max_iters, smoother } => {
            let (u, rep) = solve_vcycles(problem, grid, tol, max_iters, &CycleSpec::default(), &smoother)?;
            (u, Some(rep))
        }
        FarFieldSolver::Direct => {
            let op = StencilOperator::new(grid, problem);
            let f = Field::from_fn(grid, |z| problem.source(z));
            (direct_solve_small(&op, &f)?, None)
        }
        FarFieldSolver::Krylov { tol } => {
            let (u, rep) = solve_ecs_krylov(problem, grid, tol)?;
            (u, Some(rep))
        }
    };
    if let Some(rep) = &report {
        if !rep.converged {
            return Err(Error::NoConvergence(format!(
                "scattered-wave solve stopped after {} iterations at relative residual {:.3e}",
                rep.iterations,
                rep.final_residual() / rep.residual_history[0]
            )));
        }
    }
    let n = grid.axis(0).total_intervals();
    let real = real_quadrature_grid(problem.dim(), half_width, n)?;
    let i1 = integral_i1(problem, &real, dirs)?;
    let i2 = integral_i2_complex(&u, problem, grid, dirs)?;
    let mut meta = BTreeMap::new();
    meta.insert("solver".into(), format!("{solver:?}"));
    meta.insert("grid_axes".into(), format!("{:?}", grid.axes().iter().map(|a| a.kind()).collect::<Vec<_>>()));
    meta.insert("intervals_per_axis".into(), n.to_string());
    Ok(FarFieldMap {
        dim: problem.dim(),
        k0: problem.k0(),
        directions: dirs.clone(),
        values: i1.iter().zip(&i2).map(|(a, b)| a + b).collect(),
        prefactor: prefactor_descriptor(problem.dim()).into(),
        report,
        meta,
    })
}
