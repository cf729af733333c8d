//! Geometric multigrid on tensor grids: full weighting, linear
//! interpolation, ω-Jacobi and GMRES(m) smoothing, V-cycles and FMG.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{norm, Field};
use crate::grid::TensorGrid;
use crate::linalg::{gmres_cycle, DenseLu};
use crate::operator::StencilOperator;
use crate::problems::Coefficients;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest coarsest-level system the dense solver accepts.
const MAX_DENSE_UNKNOWNS: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmootherKind {
    OmegaJacobi,
    GmresM,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmootherSpec {
    pub kind: SmootherKind,
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default = "default_m")]
    pub m: usize,
}

fn default_omega() -> f64 {
    2.0 / 3.0
}

fn default_m() -> usize {
    3
}

impl Default for SmootherSpec {
    fn default() -> Self {
        Self::gmres(3)
    }
}

impl SmootherSpec {
    pub fn gmres(m: usize) -> Self {
        Self {
            kind: SmootherKind::GmresM,
            omega: default_omega(),
            m,
        }
    }

    pub fn jacobi(omega: f64) -> Self {
        Self {
            kind: SmootherKind::OmegaJacobi,
            omega,
            m: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(Error::Config(format!("omega must be in (0, 1], got {}", self.omega)));
        }
        if self.m == 0 {
            return Err(Error::Config("GMRES smoother needs m >= 1".into()));
        }
        Ok(())
    }

    /// Operator applications per smoothing step.
    fn applications(&self) -> usize {
        match self.kind {
            SmootherKind::OmegaJacobi => 1,
            SmootherKind::GmresM => self.m + 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleSpec {
    pub nu1: usize,
    pub nu2: usize,
    /// Fixed V-cycles per FMG level (F(s) mode); `None` uses the tolerance.
    #[serde(default)]
    pub cycles_per_level: Option<usize>,
    /// Per-axis interior unknown count at which the dense solve takes over.
    pub coarsest_interior: usize,
}

impl Default for CycleSpec {
    fn default() -> Self {
        Self {
            nu1: 1,
            nu2: 1,
            cycles_per_level: None,
            coarsest_interior: 7,
        }
    }
}

impl CycleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nu1 + self.nu2 == 0 {
            return Err(Error::Config("need at least one smoothing step".into()));
        }
        if self.coarsest_interior == 0 || self.coarsest_interior > 7 {
            return Err(Error::Config(format!(
                "coarsest interior size must be 1..=7, got {}",
                self.coarsest_interior
            )));
        }
        if self.cycles_per_level == Some(0) {
            return Err(Error::Config("F(s) mode needs s >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub iterations: usize,
    /// `‖r_0‖, ‖r_1‖, …` on the finest grid.
    pub residual_history: Vec<f64>,
    pub work_units: f64,
    pub avg_factor: f64,
    pub converged: bool,
}

impl ConvergenceReport {
    pub(crate) fn from_history(history: Vec<f64>, visits: f64, calibration: f64, converged: bool) -> Self {
        let k = history.len().saturating_sub(1);
        let avg_factor = if k == 0 || history[0] == 0.0 {
            0.0
        } else {
            (history[k] / history[0]).powf(1.0 / k as f64)
        };
        Self {
            iterations: k,
            residual_history: history,
            work_units: visits / calibration,
            avg_factor,
            converged,
        }
    }

    /// `(‖r_k‖/‖r_0‖)^{1/k}` after `k` iterations, if that many were run.
    pub fn factor_after(&self, k: usize) -> Option<f64> {
        if k == 0 || k >= self.residual_history.len() || self.residual_history[0] == 0.0 {
            return None;
        }
        Some((self.residual_history[k] / self.residual_history[0]).powf(1.0 / k as f64))
    }

    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&0.0)
    }

    /// `iteration,residual_norm` lines with a header.
    pub fn history_csv(&self) -> String {
        let mut s = String::from("iteration,residual_norm\n");
        for (i, r) in self.residual_history.iter().enumerate() {
            s.push_str(&format!("{i},{r:.12e}\n"));
        }
        s
    }
}

/// Full weighting along every axis. Each fine axis length must be
/// `2 * coarse + 1`.
pub fn restrict(fine: &Field) -> Result<Field> {
    let coarse_shape = coarse_shape_of(fine.shape())?;
    let mut data = fine.as_slice().to_vec();
    let mut shape = fine.shape().to_vec();
    for ax in 0..shape.len() {
        let (outer, n, inner) = split(&shape, ax);
        let nc = (n - 1) / 2;
        let mut out = vec![ZERO; outer * nc * inner];
        for o in 0..outer {
            for i in 0..nc {
                let dst = (o * nc + i) * inner;
                let src = (o * n + 2 * i) * inner;
                for t in 0..inner {
                    out[dst + t] = 0.25 * data[src + t]
                        + 0.5 * data[src + inner + t]
                        + 0.25 * data[src + 2 * inner + t];
                }
            }
        }
        data = out;
        shape[ax] = nc;
    }
    debug_assert_eq!(shape, coarse_shape);
    Field::from_vec(&shape, data)
}

/// Linear interpolation along every axis (bi-/trilinear in 2D/3D).
pub fn prolong(coarse: &Field) -> Result<Field> {
    let mut data = coarse.as_slice().to_vec();
    let mut shape = coarse.shape().to_vec();
    for ax in 0..shape.len() {
        let (outer, nc, inner) = split(&shape, ax);
        let n = 2 * nc + 1;
        let mut out = vec![ZERO; outer * n * inner];
        for o in 0..outer {
            for i in 0..nc {
                let src = (o * nc + i) * inner;
                let dst = (o * n + 2 * i + 1) * inner;
                for t in 0..inner {
                    let v = data[src + t];
                    out[dst + t] = v;
                    out[dst - inner + t] += 0.5 * v;
                    out[dst + inner + t] += 0.5 * v;
                }
            }
        }
        data = out;
        shape[ax] = n;
    }
    Field::from_vec(&shape, data)
}

fn coarse_shape_of(shape: &[usize]) -> Result<Vec<usize>> {
    shape
        .iter()
        .map(|&n| {
            if n >= 3 && n % 2 == 1 {
                Ok((n - 1) / 2)
            } else {
                Err(Error::ShapeMismatch {
                    expected: vec![2 * (n / 2) + 1],
                    got: vec![n],
                })
            }
        })
        .collect()
}

fn split(shape: &[usize], ax: usize) -> (usize, usize, usize) {
    (
        shape[..ax].iter().product(),
        shape[ax],
        shape[ax + 1..].iter().product(),
    )
}

/// Runs `sweeps` smoothing steps on `A u = f` in place.
pub fn smooth(
    op: &StencilOperator,
    u: &mut [Complex64],
    f: &[Complex64],
    spec: &SmootherSpec,
    sweeps: usize,
) -> Result<()> {
    match spec.kind {
        SmootherKind::OmegaJacobi => {
            let diag = op.diagonal();
            if let Some(i) = diag.iter().position(|d| d.norm() == 0.0) {
                return Err(Error::SingularSmoother(i));
            }
            let mut r = vec![ZERO; u.len()];
            for _ in 0..sweeps {
                op.residual_into(u, f, &mut r);
                for ((ui, ri), di) in u.iter_mut().zip(&r).zip(diag) {
                    *ui += spec.omega * ri / di;
                }
            }
        }
        SmootherKind::GmresM => {
            let mut apply = |x: &[Complex64], y: &mut [Complex64]| op.apply_into(x, y);
            for _ in 0..sweeps {
                gmres_cycle(&mut apply, None, f, u, spec.m, 0.0);
            }
        }
    }
    Ok(())
}

/// Operators on successively coarser grids with a dense factorization at the
/// bottom.
#[derive(Clone, Debug)]
pub struct Hierarchy {
    levels: Vec<StencilOperator>,
    coarse_lu: DenseLu,
    cycle: CycleSpec,
}

/// Node-visit tally used for work units.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WorkCounter {
    pub visits: f64,
}

impl Hierarchy {
    /// Rediscretizes `coeffs` on `grid` and each coarsening of it.
    pub fn new<C: Coefficients + ?Sized>(grid: &TensorGrid, coeffs: &C, cycle: CycleSpec) -> Result<Self> {
        Self::build(grid, cycle, |g| Ok(StencilOperator::new(g, coeffs)))
    }

    /// Builds levels with a caller-supplied discretization per grid.
    pub fn build(
        grid: &TensorGrid,
        cycle: CycleSpec,
        mut discretize: impl FnMut(&TensorGrid) -> Result<StencilOperator>,
    ) -> Result<Self> {
        cycle.validate()?;
        let mut levels = vec![discretize(grid)?];
        let mut g = grid.clone();
        while g.interior_shape().iter().any(|&n| n > cycle.coarsest_interior) {
            match g.coarsen() {
                Ok(c) if c.interior_shape().iter().all(|&n| n >= 1) => {
                    levels.push(discretize(&c)?);
                    g = c;
                }
                _ => break,
            }
        }
        let bottom = levels.last().unwrap();
        if bottom.len() > MAX_DENSE_UNKNOWNS {
            return Err(Error::TooLarge {
                unknowns: bottom.len(),
                limit: MAX_DENSE_UNKNOWNS,
            });
        }
        let coarse_lu = DenseLu::factor(bottom.len(), bottom.assemble_dense())?;
        Ok(Self {
            levels,
            coarse_lu,
            cycle,
        })
    }

    pub fn levels(&self) -> &[StencilOperator] {
        &self.levels
    }

    pub fn finest(&self) -> &StencilOperator {
        &self.levels[0]
    }

    pub fn cycle(&self) -> &CycleSpec {
        &self.cycle
    }

    /// Hierarchy with the finest `skip` levels removed.
    pub fn truncated(&self, skip: usize) -> Self {
        Self {
            levels: self.levels[skip..].to_vec(),
            coarse_lu: self.coarse_lu.clone(),
            cycle: self.cycle,
        }
    }

    /// One V(ν1, ν2) cycle on level `level`.
    pub fn vcycle_at(
        &self,
        level: usize,
        u: &mut [Complex64],
        f: &[Complex64],
        smoother: &SmootherSpec,
        work: &mut WorkCounter,
    ) -> Result<()> {
        let op = &self.levels[level];
        let nodes = op.grid().full_node_count() as f64;
        if level + 1 == self.levels.len() {
            u.copy_from_slice(&self.coarse_lu.solve(f));
            work.visits += nodes;
            return Ok(());
        }
        let per_sweep = smoother.applications() as f64;
        smooth(op, u, f, smoother, self.cycle.nu1)?;
        let mut r = Field::zeros(op.shape());
        op.residual_into(u, f, r.as_mut_slice());
        let rc = restrict(&r)?;
        let mut ec = Field::zeros(rc.shape());
        self.vcycle_at(level + 1, ec.as_mut_slice(), rc.as_slice(), smoother, work)?;
        let e = prolong(&ec)?;
        for (ui, ei) in u.iter_mut().zip(e.as_slice()) {
            *ui += ei;
        }
        smooth(op, u, f, smoother, self.cycle.nu2)?;
        // smoothing + residual + restriction + prolongation
        work.visits += nodes * ((self.cycle.nu1 + self.cycle.nu2) as f64 * per_sweep + 3.0);
        Ok(())
    }

    pub fn vcycle(&self, u: &mut Field, f: &Field, smoother: &SmootherSpec) -> Result<()> {
        u.check_shape(self.finest().shape())?;
        f.check_shape(self.finest().shape())?;
        let mut w = WorkCounter::default();
        self.vcycle_at(0, u.as_mut_slice(), f.as_slice(), smoother, &mut w)
    }

    /// V-cycles from `u` until `‖r_k‖ ≤ tol ‖r_0‖` or `max_iters`.
    pub fn solve(
        &self,
        u: &mut Field,
        f: &Field,
        tol: f64,
        max_iters: usize,
        smoother: &SmootherSpec,
    ) -> Result<ConvergenceReport> {
        self.solve_with(u, f, tol, None, 0, max_iters, smoother)
    }

    /// V-cycles until `‖r_k‖ ≤ tol · reference` (`‖r_0‖` when `None`), but
    /// never fewer than `min_iters`.
    #[allow(clippy::too_many_arguments)]
    pub fn solve_with(
        &self,
        u: &mut Field,
        f: &Field,
        tol: f64,
        reference: Option<f64>,
        min_iters: usize,
        max_iters: usize,
        smoother: &SmootherSpec,
    ) -> Result<ConvergenceReport> {
        u.check_shape(self.finest().shape())?;
        f.check_shape(self.finest().shape())?;
        let mut work = WorkCounter::default();
        let stop = Stop::Tol(tol, reference, min_iters);
        let history = self.iterate(0, u.as_mut_slice(), f.as_slice(), stop, max_iters, smoother, &mut work)?;
        let converged = history.converged;
        Ok(ConvergenceReport::from_history(
            history.norms,
            work.visits,
            calibration_visits(self.finest().grid().dim(), &self.cycle, smoother),
            converged,
        ))
    }

    #[allow(clippy::too_many_arguments)]
    fn iterate(
        &self,
        level: usize,
        u: &mut [Complex64],
        f: &[Complex64],
        stop: Stop,
        max_iters: usize,
        smoother: &SmootherSpec,
        work: &mut WorkCounter,
    ) -> Result<History> {
        let op = &self.levels[level];
        let nodes = op.grid().full_node_count() as f64;
        let mut r = vec![ZERO; u.len()];
        op.residual_into(u, f, &mut r);
        let r0 = norm(&r);
        let mut norms = vec![r0];
        let reference = match stop {
            Stop::Tol(_, Some(reference), _) => reference,
            _ => r0,
        };
        let done = |k: usize, rk: f64| match stop {
            Stop::Tol(tol, _, min) => k >= min && rk <= tol * reference,
            Stop::Fixed(s) => k >= s,
        };
        if done(0, r0) || r0 == 0.0 {
            return Ok(History {
                norms,
                converged: true,
            });
        }
        for k in 1..=max_iters {
            self.vcycle_at(level, u, f, smoother, work)?;
            op.residual_into(u, f, &mut r);
            work.visits += nodes;
            let rk = norm(&r);
            norms.push(rk);
            if done(k, rk) {
                return Ok(History {
                    norms,
                    converged: true,
                });
            }
            if !rk.is_finite() || rk > 1e12 * r0 {
                break;
            }
        }
        let converged = matches!(stop, Stop::Fixed(_));
        Ok(History { norms, converged })
    }

    /// Full multigrid: dense solve on the coarsest grid, then at each finer
    /// level interpolate the previous solution and run V-cycles, either until
    /// `‖r‖ ≤ tol ‖f_l‖` or for a fixed `cycles_per_level` count. `rhs[l]` is
    /// the right-hand side discretized on level `l`.
    pub fn fmg(
        &self,
        rhs: &[Field],
        tol: f64,
        max_iters: usize,
        smoother: &SmootherSpec,
    ) -> Result<(Field, ConvergenceReport)> {
        if rhs.len() != self.levels.len() {
            return Err(Error::Config(format!(
                "need one right-hand side per level ({}), got {}",
                self.levels.len(),
                rhs.len()
            )));
        }
        for (f, op) in rhs.iter().zip(&self.levels) {
            f.check_shape(op.shape())?;
        }
        let mut work = WorkCounter::default();
        let last = self.levels.len() - 1;
        let mut u = Field::zeros(self.levels[last].shape());
        self.vcycle_at(last, u.as_mut_slice(), rhs[last].as_slice(), smoother, &mut work)?;

        let calibration = calibration_visits(self.finest().grid().dim(), &self.cycle, smoother);
        if last == 0 {
            let mut r = Field::zeros(self.levels[0].shape());
            self.levels[0].residual_into(u.as_slice(), rhs[0].as_slice(), r.as_mut_slice());
            let hist = vec![rhs[0].norm(), r.norm()];
            return Ok((u, ConvergenceReport::from_history(hist, work.visits, calibration, true)));
        }
        let mut finest_history = None;
        for level in (0..last).rev() {
            let mut fine = prolong(&u)?;
            work.visits += self.levels[level].grid().full_node_count() as f64;
            let stop = match self.cycle.cycles_per_level {
                Some(s) => Stop::Fixed(s),
                None => Stop::Tol(tol, Some(rhs[level].norm()), 0),
            };
            let h = self.iterate(level, fine.as_mut_slice(), rhs[level].as_slice(), stop, max_iters, smoother, &mut work)?;
            u = fine;
            if level == 0 {
                finest_history = Some(h);
            } else if !h.converged {
                let report = ConvergenceReport::from_history(h.norms, work.visits, calibration, false);
                return Ok((Field::zeros(self.levels[0].shape()), report));
            }
        }
        let h = finest_history.unwrap();
        Ok((u, ConvergenceReport::from_history(h.norms, work.visits, calibration, h.converged)))
    }
}

#[derive(Clone, Copy, Debug)]
enum Stop {
    /// Relative tolerance against an optional fixed reference norm, after a
    /// minimum number of cycles.
    Tol(f64, Option<f64>, usize),
    Fixed(usize),
}

struct History {
    norms: Vec<f64>,
    converged: bool,
}

/// Node visits of one V-cycle, plus its residual check, on the cube with 16
/// intervals per axis in `dim` dimensions; the unit of work.
pub fn calibration_visits(dim: usize, cycle: &CycleSpec, smoother: &SmootherSpec) -> f64 {
    let per_node = (cycle.nu1 + cycle.nu2) as f64 * smoother.applications() as f64 + 3.0;
    let d = dim as i32;
    let mut nodes = 16usize;
    let mut visits = 17f64.powi(d);
    while nodes - 1 > cycle.coarsest_interior {
        visits += per_node * ((nodes + 1) as f64).powi(d);
        nodes /= 2;
    }
    visits + ((nodes + 1) as f64).powi(d)
}

/// Samples the source of `coeffs` on the interior of `grid`.
pub fn source_on<C: Coefficients + ?Sized>(grid: &TensorGrid, coeffs: &C) -> Field {
    Field::from_fn(grid, |z| coeffs.source(z))
}

/// Solves `A u = f` for the problem described by `coeffs` with V-cycles from a
/// zero initial guess.
pub fn solve_vcycles<C: Coefficients + ?Sized>(
    coeffs: &C,
    grid: &TensorGrid,
    tol: f64,
    max_iters: usize,
    cycle: &CycleSpec,
    smoother: &SmootherSpec,
) -> Result<(Field, ConvergenceReport)> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    smoother.validate()?;
    let h = Hierarchy::new(grid, coeffs, *cycle)?;
    let f = source_on(grid, coeffs);
    let mut u = Field::zeros_on(grid);
    let report = h.solve(&mut u, &f, tol, max_iters, smoother)?;
    Ok((u, report))
}

/// Full multigrid solve with the source rediscretized on every level.
pub fn fmg<C: Coefficients + ?Sized>(
    coeffs: &C,
    grid: &TensorGrid,
    tol: f64,
    max_iters: usize,
    cycle: &CycleSpec,
    smoother: &SmootherSpec,
) -> Result<(Field, ConvergenceReport)> {
    smoother.validate()?;
    let h = Hierarchy::new(grid, coeffs, *cycle)?;
    let rhs: Vec<Field> = h.levels().iter().map(|op| source_on(op.grid(), coeffs)).collect();
    h.fmg(&rhs, tol, max_iters, smoother)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::dot;
    use crate::grid::Contour1D;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    struct Poisson;
    impl Coefficients for Poisson {
        fn wavenumber_sq(&self, _z: &[Complex64]) -> Complex64 {
            ZERO
        }
        fn source(&self, z: &[Complex64]) -> Complex64 {
            z.iter().map(|x| (x * PI).sin()).product::<Complex64>() + 1.0
        }
    }

    fn random(shape: &[usize], seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n: usize = shape.iter().product();
        Field::from_vec(
            shape,
            (0..n)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn restriction_preserves_constants() {
        let f = Field::from_vec(&[7, 15], vec![Complex64::new(1.0, 0.0); 105]).unwrap();
        let c = restrict(&f).unwrap();
        assert_eq!(c.shape(), &[3, 7]);
        assert!(c.as_slice().iter().all(|v| (v - 1.0).norm() < 1e-15));
        assert!(restrict(&Field::zeros(&[8])).is_err());
    }

    #[test]
    fn prolongation_footprint() {
        let mut c = Field::zeros(&[3]);
        c[1] = Complex64::new(1.0, 0.0);
        let f = prolong(&c).unwrap();
        let expect = [0.0, 0.0, 0.5, 1.0, 0.5, 0.0, 0.0];
        for (a, b) in f.as_slice().iter().zip(expect) {
            assert_eq!(*a, Complex64::new(b, 0.0));
        }
    }

    #[test]
    fn transfer_adjointness() {
        for (shape, cshape, d) in [
            (vec![15], vec![7], 1),
            (vec![7, 15], vec![3, 7], 2),
            (vec![7, 7, 15], vec![3, 3, 7], 3),
        ] {
            let v = random(&shape, 1);
            let w = random(&cshape, 2);
            let lhs = dot(restrict(&v).unwrap().as_slice(), w.as_slice());
            let rhs = dot(v.as_slice(), prolong(&w).unwrap().as_slice()) / 2f64.powi(d);
            assert!((lhs - rhs).norm() < 1e-13);
        }
    }

    fn poisson_1d(n: usize) -> StencilOperator {
        let g = TensorGrid::new(vec![Contour1D::real(0.0, 1.0, n).unwrap()]).unwrap();
        StencilOperator::new(&g, &Poisson)
    }

    #[test]
    fn smoothing_fixed_point() {
        let op = poisson_1d(16);
        let lu = DenseLu::factor(op.len(), op.assemble_dense()).unwrap();
        let f = random(&[15], 3);
        let u = lu.solve(f.as_slice());
        for spec in [SmootherSpec::jacobi(2.0 / 3.0), SmootherSpec::gmres(3)] {
            let mut v = u.clone();
            smooth(&op, &mut v, f.as_slice(), &spec, 2).unwrap();
            for (a, b) in u.iter().zip(&v) {
                assert!((a - b).norm() < 1e-13 * u.iter().map(|x| x.norm()).fold(1.0, f64::max));
            }
        }
    }

    #[test]
    fn jacobi_damps_highest_mode() {
        let n = 32;
        let op = poisson_1d(n);
        let m = n - 1;
        let mode: Vec<Complex64> = (1..=m)
            .map(|j| Complex64::new((PI * (m * j) as f64 / n as f64).sin(), 0.0))
            .collect();
        let mut u = mode.clone();
        smooth(&op, &mut u, &vec![ZERO; m], &SmootherSpec::jacobi(2.0 / 3.0), 1).unwrap();
        let xi = PI * m as f64 / n as f64;
        let factor = 1.0 - 2.0 / 3.0 * (1.0 - xi.cos());
        for (a, b) in u.iter().zip(&mode) {
            assert!((a - b * factor).norm() < 1e-12);
        }
        assert!(factor.abs() < 0.34);
    }

    #[test]
    fn jacobi_rejects_zero_diagonal() {
        // k² = 2/h² cancels the 1D diagonal
        let g = TensorGrid::new(vec![Contour1D::real(0.0, 1.0, 4).unwrap()]).unwrap();
        let op = StencilOperator::from_parts(g, vec![Complex64::new(32.0, 0.0); 3]).unwrap();
        let mut u = vec![ZERO; 3];
        let err = smooth(&op, &mut u, &[ZERO; 3], &SmootherSpec::jacobi(0.5), 1);
        assert!(matches!(err, Err(Error::SingularSmoother(0))));
    }

    #[test]
    fn vcycle_reduces_poisson_residual_tenfold() {
        let g = TensorGrid::cube(Contour1D::real(0.0, 1.0, 32).unwrap(), 2).unwrap();
        let h = Hierarchy::new(&g, &Poisson, CycleSpec::default()).unwrap();
        assert_eq!(h.levels().len(), 3);
        let f = source_on(&g, &Poisson);
        let mut u = Field::zeros_on(&g);
        // ω = 2/3 Jacobi has 2D smoothing factor 2/3, so V(1,1) gives about 0.44
        for (spec, bound) in [(SmootherSpec::jacobi(2.0 / 3.0), 0.5), (SmootherSpec::gmres(3), 0.1)] {
            u.fill_zero();
            let mut prev = f.norm();
            for _ in 0..4 {
                h.vcycle(&mut u, &f, &spec).unwrap();
                let r = h.finest().residual(&u, &f).unwrap().norm();
                assert!(r < bound * prev, "{r} vs {prev}");
                prev = r;
            }
        }
        let mut z = Field::zeros_on(&g);
        h.vcycle(&mut z, &Field::zeros_on(&g), &SmootherSpec::default()).unwrap();
        assert_eq!(z.norm(), 0.0);
    }

    #[test]
    fn two_grid_beats_smoothing_on_smooth_error() {
        let n = 16;
        let g = TensorGrid::new(vec![Contour1D::real(0.0, 1.0, n).unwrap()]).unwrap();
        let cycle = CycleSpec {
            coarsest_interior: 7,
            ..CycleSpec::default()
        };
        let h = Hierarchy::new(&g, &Poisson, cycle).unwrap();
        assert_eq!(h.levels().len(), 2);
        let op = h.finest();
        let exact = DenseLu::factor(op.len(), op.assemble_dense())
            .unwrap()
            .solve(source_on(&g, &Poisson).as_slice());
        let f = source_on(&g, &Poisson);
        let smooth_err: Vec<Complex64> = (1..n)
            .map(|j| Complex64::new((PI * j as f64 / n as f64).sin(), 0.0))
            .collect();
        let start: Vec<Complex64> = exact.iter().zip(&smooth_err).map(|(a, b)| a + b).collect();
        let spec = SmootherSpec::jacobi(2.0 / 3.0);
        let err_of = |u: &[Complex64]| norm(&u.iter().zip(&exact).map(|(a, b)| a - b).collect::<Vec<_>>());
        let mut a = start.clone();
        smooth(op, &mut a, f.as_slice(), &spec, 2).unwrap();
        let mut b = Field::from_vec(&[n - 1], start).unwrap();
        h.vcycle(&mut b, &f, &spec).unwrap();
        assert!(err_of(b.as_slice()) < 0.1 * err_of(&a));
    }

    #[test]
    fn zero_tolerance_edge_and_trivial_tol() {
        let g = TensorGrid::cube(Contour1D::rotated(-5.0, 5.0, 16, 0.17).unwrap(), 2).unwrap();
        let (_, rep) = solve_vcycles(&Poisson, &g, 1.0, 10, &CycleSpec::default(), &SmootherSpec::default()).unwrap();
        assert_eq!(rep.iterations, 0);
        assert!(rep.converged);
        assert_eq!(rep.work_units, 0.0);
        assert!(solve_vcycles(&Poisson, &g, 0.0, 10, &CycleSpec::default(), &SmootherSpec::default()).is_err());
    }

    #[test]
    fn work_unit_calibration() {
        let cycle = CycleSpec::default();
        let sm = SmootherSpec::gmres(3);
        let g16 = TensorGrid::cube(Contour1D::rotated(-1.0, 1.0, 16, 0.1).unwrap(), 3).unwrap();
        let h = Hierarchy::new(&g16, &Poisson, cycle).unwrap();
        let mut w = WorkCounter::default();
        let f = source_on(&g16, &Poisson);
        let mut u = Field::zeros_on(&g16);
        h.vcycle_at(0, u.as_mut_slice(), f.as_slice(), &sm, &mut w).unwrap();
        w.visits += g16.full_node_count() as f64;
        assert!((w.visits / calibration_visits(3, &cycle, &sm) - 1.0).abs() < 1e-15);
        let g32 = TensorGrid::cube(Contour1D::rotated(-1.0, 1.0, 32, 0.1).unwrap(), 3).unwrap();
        let h = Hierarchy::new(&g32, &Poisson, cycle).unwrap();
        let mut w = WorkCounter::default();
        let f = source_on(&g32, &Poisson);
        let mut u = Field::zeros_on(&g32);
        h.vcycle_at(0, u.as_mut_slice(), f.as_slice(), &sm, &mut w).unwrap();
        w.visits += g32.full_node_count() as f64;
        let ratio = w.visits / calibration_visits(3, &cycle, &sm);
        assert!((6.0..8.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn fmg_on_single_level_is_dense_solve() {
        let g = TensorGrid::cube(Contour1D::real(0.0, 1.0, 8).unwrap(), 2).unwrap();
        let (u, rep) = fmg(&Poisson, &g, 1e-6, 10, &CycleSpec::default(), &SmootherSpec::default()).unwrap();
        let op = StencilOperator::new(&g, &Poisson);
        let r = op.residual(&u, &source_on(&g, &Poisson)).unwrap();
        assert!(r.norm() < 1e-12);
        assert!(rep.converged);
    }

    #[test]
    fn report_factor_and_csv() {
        let rep = ConvergenceReport::from_history(vec![1.0, 0.1, 0.01], 10.0, 5.0, true);
        assert_eq!(rep.iterations, 2);
        assert!((rep.avg_factor - 0.1).abs() < 1e-15);
        assert_eq!(rep.work_units, 2.0);
        assert!((rep.factor_after(1).unwrap() - 0.1).abs() < 1e-15);
        assert!(rep.history_csv().starts_with("iteration,residual_norm\n0,"));
        let json = serde_json::to_string(&rep).unwrap();
        let back: ConvergenceReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rep);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]
            #[test]
            fn adjoint_relation_holds(seed in 0u64..1000, d in 1usize..=3) {
                let shape = vec![7; d];
                let cshape = vec![3; d];
                let v = random(&shape, seed);
                let w = random(&cshape, seed + 1);
                let lhs = dot(restrict(&v).unwrap().as_slice(), w.as_slice());
                let rhs = dot(v.as_slice(), prolong(&w).unwrap().as_slice()) / 2f64.powi(d as i32);
                prop_assert!((lhs - rhs).norm() < 1e-13);
            }
        }
    }
}
