//! Validation solvers for the classical real-grid formulation with exterior
//! complex scaling: a banded direct solve for small systems and
//! flexible GMRES preconditioned by a complex-shifted-Laplacian V-cycle.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{theta_to_gamma, ContourKind, TensorGrid};
use crate::linalg::{fgmres, BandLu};
use crate::multigrid::{calibration_visits, source_on, ConvergenceReport, CycleSpec, Hierarchy, SmootherSpec, WorkCounter};
use crate::operator::StencilOperator;
use crate::problems::Coefficients;

/// Largest system the banded direct solver accepts.
pub const MAX_DIRECT_UNKNOWNS: usize = 300_000;

pub const KRYLOV_RESTART: usize = 20;
pub const KRYLOV_MAX_ITERS: usize = 300;

/// Solves `A u = f` by banded LU with partial pivoting in lexicographic
/// ordering.
pub fn direct_solve_small(op: &StencilOperator, f: &Field) -> Result<Field> {
    f.check_shape(op.shape())?;
    let n = op.len();
    if n > MAX_DIRECT_UNKNOWNS {
        return Err(Error::TooLarge {
            unknowns: n,
            limit: MAX_DIRECT_UNKNOWNS,
        });
    }
    let lu = BandLu::factor(n, op.bandwidth(), |row, out| op.row_entries(row, out))?;
    Field::from_vec(op.shape(), lu.solve(f.as_slice()))
}

/// How the outer Krylov iteration is preconditioned.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Preconditioner {
    None,
    /// One V-cycle on `-Δ - shift·k²` discretized on the same grid.
    ShiftedVCycle { shift: Complex64 },
}

/// The shifted-Laplacian preconditioner equivalent to rotating every axis
/// by the angle that matches the grid's ECS bend.
pub fn ecs_preconditioner(grid: &TensorGrid) -> Result<Preconditioner> {
    let mut theta = None;
    for axis in grid.axes() {
        let t = match axis.kind() {
            ContourKind::EcsReal { theta, .. } => theta,
            ContourKind::Rotated { gamma } => {
                return Ok(Preconditioner::ShiftedVCycle {
                    shift: Complex64::from_polar(1.0, 2.0 * gamma),
                })
            }
        };
        theta = Some(theta.map_or(t, |x: f64| x.max(t)));
    }
    let gamma = theta_to_gamma(theta.unwrap())?;
    Ok(Preconditioner::ShiftedVCycle {
        shift: Complex64::from_polar(1.0, 2.0 * gamma),
    })
}

/// Restarted flexible GMRES on `A u = f` for any grid.
pub fn solve_krylov<C: Coefficients + ?Sized>(
    coeffs: &C,
    grid: &TensorGrid,
    f: &Field,
    tol: f64,
    precond: Preconditioner,
    cycle: &CycleSpec,
    smoother: &SmootherSpec,
) -> Result<(Field, ConvergenceReport)> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    let op = StencilOperator::new(grid, coeffs);
    f.check_shape(op.shape())?;
    let mut u = Field::zeros(op.shape());
    let nodes = grid.full_node_count() as f64;
    let mut work = WorkCounter::default();
    let hierarchy = match precond {
        Preconditioner::None => None,
        Preconditioner::ShiftedVCycle { shift } => Some(Hierarchy::build(grid, *cycle, |g| {
            let k2 = StencilOperator::new(g, coeffs).k2().to_vec();
            StencilOperator::shifted(g.clone(), &k2, shift)
        })?),
    };
    let mut failure = None;
    let outcome = {
        let mut apply = |x: &[Complex64], y: &mut [Complex64]| {
            op.apply_into(x, y);
            work.visits += nodes;
        };
        let mut pc_work = WorkCounter::default();
        let mut pc = |x: &[Complex64], y: &mut [Complex64]| {
            y.fill(Complex64::new(0.0, 0.0));
            if let Some(h) = &hierarchy {
                if let Err(e) = h.vcycle_at(0, y, x, smoother, &mut pc_work) {
                    failure.get_or_insert(e);
                }
            }
        };
        let out = match hierarchy {
            Some(_) => fgmres(&mut apply, Some(&mut pc), f.as_slice(), u.as_mut_slice(), KRYLOV_RESTART, KRYLOV_MAX_ITERS, tol),
            None => fgmres(&mut apply, None, f.as_slice(), u.as_mut_slice(), KRYLOV_RESTART, KRYLOV_MAX_ITERS, tol),
        };
        work.visits += pc_work.visits;
        out
    };
    if let Some(e) = failure {
        return Err(e);
    }
    let mut report = ConvergenceReport::from_history(
        outcome.residual_history,
        work.visits,
        calibration_visits(grid.dim(), cycle, smoother),
        outcome.converged,
    );
    // the history holds one entry per restart; report the factor per iteration
    report.iterations = outcome.iterations;
    let r0 = report.residual_history[0];
    if report.iterations > 0 && r0 > 0.0 {
        report.avg_factor = (report.final_residual() / r0).powf(1.0 / report.iterations as f64);
    }
    Ok((u, report))
}

/// Solves the problem on an ECS (or any) grid with FGMRES(20), preconditioned
/// by one shifted-Laplacian V-cycle per application.
pub fn solve_ecs_krylov<C: Coefficients + ?Sized>(
    coeffs: &C,
    grid: &TensorGrid,
    tol: f64,
) -> Result<(Field, ConvergenceReport)> {
    let f = source_on(grid, coeffs);
    solve_krylov(
        coeffs,
        grid,
        &f,
        tol,
        ecs_preconditioner(grid)?,
        &CycleSpec::default(),
        &SmootherSpec::default(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Contour1D;
    use crate::problems::HelmholtzProblem;
    use std::f64::consts::PI;

    struct Constant(Complex64);
    impl Coefficients for Constant {
        fn wavenumber_sq(&self, _z: &[Complex64]) -> Complex64 {
            self.0
        }
        fn source(&self, z: &[Complex64]) -> Complex64 {
            (-(z[0] - 1.0) * (z[0] - 1.0)).exp()
        }
    }

    #[test]
    fn tridiagonal_direct_solve() {
        let g = TensorGrid::new(vec![Contour1D::ecs(-5.0, 5.0, 80, PI / 4.0, 10, 10).unwrap()]).unwrap();
        let c = Constant(Complex64::new(4.0, 0.0));
        let op = StencilOperator::new(&g, &c);
        assert_eq!(op.len(), 99);
        let f = source_on(&g, &c);
        let u = direct_solve_small(&op, &f).unwrap();
        let r = op.residual(&u, &f).unwrap();
        assert!(r.norm() < 1e-12 * f.norm());
    }

    #[test]
    fn dominant_shift_scales_rhs() {
        let g = TensorGrid::cube(Contour1D::real(0.0, 1.0, 4).unwrap(), 2).unwrap();
        let c = Constant(Complex64::new(-1e14, 0.0));
        let op = StencilOperator::new(&g, &c);
        let f = source_on(&g, &c);
        let u = direct_solve_small(&op, &f).unwrap();
        for (a, b) in u.as_slice().iter().zip(f.as_slice()) {
            assert!((a * 1e14 - b).norm() < 1e-10 * b.norm());
        }
    }

    #[test]
    fn refuses_large_systems() {
        let g = TensorGrid::cube(Contour1D::real(0.0, 1.0, 80).unwrap(), 3).unwrap();
        let op = StencilOperator::from_parts(g.clone(), vec![Complex64::new(0.0, 0.0); g.interior_count()]).unwrap();
        let f = Field::zeros_on(&g);
        assert!(matches!(direct_solve_small(&op, &f), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn exact_preconditioner_one_iteration() {
        // a single-level hierarchy with no shift is the exact inverse
        let g = TensorGrid::cube(Contour1D::ecs(-3.0, 3.0, 4, 0.5, 1, 1).unwrap(), 2).unwrap();
        let p = HelmholtzProblem::two_dots(2, 1.0).unwrap();
        let f = source_on(&g, &p);
        let (u, rep) = solve_krylov(
            &p,
            &g,
            &f,
            1e-10,
            Preconditioner::ShiftedVCycle { shift: Complex64::new(1.0, 0.0) },
            &CycleSpec::default(),
            &SmootherSpec::default(),
        )
        .unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 1);
        let op = StencilOperator::new(&g, &p);
        assert!(op.residual(&u, &f).unwrap().norm() <= 1e-10 * f.norm());
    }

    #[test]
    fn zero_rhs_zero_iterations() {
        let g = TensorGrid::cube(Contour1D::ecs(-8.0, 8.0, 32, PI / 4.0, 8, 8).unwrap(), 2).unwrap();
        let mut p = HelmholtzProblem::two_dots(2, 1.0).unwrap();
        p.chi_scale = 0.0;
        let (u, rep) = solve_ecs_krylov(&p, &g, 1e-8).unwrap();
        assert_eq!(rep.iterations, 0);
        assert_eq!(u.norm(), 0.0);
    }

    #[test]
    fn krylov_matches_direct_on_twodots() {
        let theta = PI / 4.0;
        let c = Contour1D::ecs(-40.0 / 3.0, 40.0 / 3.0, 64, theta, 32, 32).unwrap();
        let g = TensorGrid::cube(c, 2).unwrap();
        let p = HelmholtzProblem::two_dots(2, 1.0).unwrap();
        let (uk, rep) = solve_ecs_krylov(&p, &g, 1e-10).unwrap();
        assert!(rep.converged, "{rep:?}");
        let op = StencilOperator::new(&g, &p);
        let ud = direct_solve_small(&op, &source_on(&g, &p)).unwrap();
        let mut d = uk.clone();
        d.axpy(Complex64::new(-1.0, 0.0), &ud);
        assert!(d.norm() <= 1e-6 * ud.norm(), "{}", d.norm() / ud.norm());
    }
}
