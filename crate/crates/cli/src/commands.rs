//! Subcommand implementations. Each resolves its config, runs, writes CSV
//! artifacts with sidecars and returns a JSON summary for stdout.

use std::path::Path;
use std::time::Instant;

use scatter_core::farfield::{farfield_map, DirectionSet, FarFieldMap, FarFieldSolver};
use scatter_core::grid::theta_to_gamma;
use scatter_core::multigrid::{fmg, solve_vcycles, source_on};
use scatter_core::problems::{HelmholtzProblem, SchrodingerProblem};
use scatter_core::quantum::{
    benchmark_bound_states, ecs_grid, energy_scan, ionization, rotated_grid, solve_schrodinger_reference,
    IonizationResult, ScanSpec,
};
use scatter_core::reference::{direct_solve_small, solve_ecs_krylov};
use scatter_core::spectra::{branch_argument, eig_hamiltonian_1d, kronecker_2d_spectrum, spectrum_csv};
use scatter_core::{Complex64, ConvergenceReport, Contour1D, CycleSpec, Error, StencilOperator, TensorGrid};
use serde_json::{json, Value};

use crate::config::{self, over, Angle, Compare, ConfigFile, GridKind, Method, PathKind};
use crate::output::{num, Output};
use crate::{
    AngleTableArgs, CliError, FarfieldArgs, FmgTimeArgs, HelmholtzSolveArgs, IonizationScanArgs, MgBenchArgs,
    MgRateScanArgs, SmootherArgs, SpectrumArgs,
};

fn rotation(gamma: Option<Angle>, theta: Angle) -> Result<f64, CliError> {
    match gamma {
        Some(g) => Ok(g.0),
        None => Ok(theta_to_gamma(theta.0)?),
    }
}

fn rotated_cube(p: &HelmholtzProblem, n: usize, gamma: f64) -> Result<TensorGrid, CliError> {
    let w = p.half_width;
    Ok(TensorGrid::cube(Contour1D::rotated(-w, w, n, gamma)?, p.dim)?)
}

fn ecs_cube(p: &HelmholtzProblem, n: usize, theta: f64, layer: usize) -> Result<TensorGrid, CliError> {
    let w = p.half_width;
    Ok(TensorGrid::cube(Contour1D::ecs(-w, w, n, theta, layer, layer)?, p.dim)?)
}

fn apply_smoother(s: &SmootherArgs, choice: &mut config::SmootherChoice, omega: &mut f64, m: &mut usize) {
    over(choice, s.smoother);
    over(omega, s.omega);
    over(m, s.m);
}

fn report_json(r: &ConvergenceReport, rhs_norm: f64) -> Value {
    json!({
        "iterations": r.iterations,
        "work_units": r.work_units,
        "avg_factor": r.avg_factor,
        "converged": r.converged,
        "relative_residual": r.final_residual() / rhs_norm,
    })
}

pub fn angle_table(file: &ConfigFile, out: &Path, a: AngleTableArgs) -> Result<Value, CliError> {
    let mut cfg: config::AngleTableConfig = file.section("angle-table")?;
    over(&mut cfg.thetas, a.thetas);
    let mut csv = String::from("theta_rad,theta_deg,gamma_rad,gamma_deg\n");
    let mut rows = Vec::new();
    for t in &cfg.thetas {
        let g = theta_to_gamma(t.0)?;
        csv.push_str(&format!("{},{},{},{}\n", num(t.0), num(t.0.to_degrees()), num(g), num(g.to_degrees())));
        rows.push(json!({ "theta_deg": t.0.to_degrees(), "gamma_deg": g.to_degrees() }));
    }
    let mut o = Output::new(out, "angle-table", &cfg)?;
    o.write("angle_table.csv", &csv, json!({ "rows": cfg.thetas.len() }))?;
    Ok(json!({ "files": o.written(), "table": rows }))
}

pub fn helmholtz_solve(file: &ConfigFile, out: &Path, a: HelmholtzSolveArgs) -> Result<Value, CliError> {
    let mut cfg: config::HelmholtzSolveConfig = file.section("helmholtz-solve")?;
    over(&mut cfg.problem, a.problem);
    over(&mut cfg.k0, a.k0);
    over(&mut cfg.n, a.n);
    over(&mut cfg.grid, a.grid);
    if a.gamma.is_some() {
        cfg.gamma = a.gamma;
    }
    over(&mut cfg.theta, a.theta);
    if a.layer.is_some() {
        cfg.layer = a.layer;
    }
    over(&mut cfg.method, a.method);
    over(&mut cfg.tol, a.tol);
    over(&mut cfg.max_iters, a.max_iters);
    apply_smoother(&a.smoother, &mut cfg.smoother, &mut cfg.omega, &mut cfg.m);

    let p = HelmholtzProblem::named(&cfg.problem, cfg.k0)?;
    let grid = match cfg.grid {
        GridKind::Rotated => rotated_cube(&p, cfg.n, rotation(cfg.gamma, cfg.theta)?)?,
        GridKind::Ecs => ecs_cube(&p, cfg.n, cfg.theta.0, cfg.layer.unwrap_or(cfg.n / 4))?,
    };
    let smoother = config::smoother(cfg.smoother, cfg.omega, cfg.m);
    let cycle = CycleSpec::default();
    let f = source_on(&grid, &p);
    let rhs_norm = f.norm();
    let start = Instant::now();
    let (u, report) = match cfg.method {
        Method::Vcycle => {
            let (u, r) = solve_vcycles(&p, &grid, cfg.tol, cfg.max_iters, &cycle, &smoother)?;
            (u, Some(r))
        }
        Method::Fmg => {
            let (u, r) = fmg(&p, &grid, cfg.tol, cfg.max_iters, &cycle, &smoother)?;
            (u, Some(r))
        }
        Method::Krylov => {
            let (u, r) = solve_ecs_krylov(&p, &grid, cfg.tol)?;
            (u, Some(r))
        }
        Method::Direct => (direct_solve_small(&StencilOperator::new(&grid, &p), &f)?, None),
    };
    let wall = start.elapsed().as_secs_f64();
    let op = StencilOperator::new(&grid, &p);
    let mut r = op.apply(&u)?;
    r.scale(Complex64::new(-1.0, 0.0));
    r.axpy(Complex64::new(1.0, 0.0), &f);
    let relative = if rhs_norm > 0.0 { r.norm() / rhs_norm } else { r.norm() };
    let stats = json!({
        "unknowns": grid.interior_count(),
        "rhs_norm": rhs_norm,
        "solution_norm": u.norm(),
        "relative_residual": relative,
        "convergence": report.as_ref().map(|r| report_json(r, rhs_norm.max(f64::MIN_POSITIVE))),
    });
    let mut o = Output::new(out, "helmholtz-solve", &cfg)?;
    let text = serde_json::to_string_pretty(&stats).map_err(|e| CliError::Io(e.to_string()))? + "\n";
    o.write("helmholtz_solve.json", &text, json!({}))?;
    if let Some(rep) = &report {
        o.write("residual_history.csv", &rep.history_csv(), json!({}))?;
        if !rep.converged {
            return Err(Error::NoConvergence(format!(
                "stopped after {} iterations at relative residual {relative:.3e}",
                rep.iterations
            ))
            .into());
        }
    }
    Ok(json!({ "files": o.written(), "stats": stats, "wall_s": wall }))
}

pub fn mg_bench(file: &ConfigFile, out: &Path, a: MgBenchArgs) -> Result<Value, CliError> {
    let mut cfg: config::MgBenchConfig = file.section("mg-bench")?;
    over(&mut cfg.dim, a.dim);
    over(&mut cfg.k0, a.k0);
    over(&mut cfg.n, a.n);
    if a.gamma.is_some() {
        cfg.gamma = a.gamma;
    }
    over(&mut cfg.theta, a.theta);
    over(&mut cfg.methods, a.methods);
    over(&mut cfg.tol, a.tol);
    over(&mut cfg.max_iters, a.max_iters);
    apply_smoother(&a.smoother, &mut cfg.smoother, &mut cfg.omega, &mut cfg.m);
    if cfg.methods.iter().any(|m| !matches!(m, Method::Vcycle | Method::Fmg)) {
        return Err(CliError::Usage("mg-bench runs only vcycle and fmg".into()));
    }
    let gamma = rotation(cfg.gamma, cfg.theta)?;
    let smoother = config::smoother(cfg.smoother, cfg.omega, cfg.m);
    let cycle = CycleSpec::default();
    let mut csv = String::from("k0,n,h,k0h,method,iterations,work_units,avg_factor,converged\n");
    let mut rows = Vec::new();
    for &k0 in &cfg.k0 {
        let p = HelmholtzProblem::two_dots(cfg.dim, k0)?;
        for &n in &cfg.n {
            let grid = rotated_cube(&p, n, gamma)?;
            let h = 2.0 * p.half_width / n as f64;
            for &m in &cfg.methods {
                let (_, r) = match m {
                    Method::Vcycle => solve_vcycles(&p, &grid, cfg.tol, cfg.max_iters, &cycle, &smoother)?,
                    _ => fmg(&p, &grid, cfg.tol, cfg.max_iters, &cycle, &smoother)?,
                };
                let name = if m == Method::Vcycle { "vcycle" } else { "fmg" };
                csv.push_str(&format!(
                    "{},{n},{},{},{name},{},{},{},{}\n",
                    num(k0),
                    num(h),
                    num(k0 * h),
                    r.iterations,
                    num(r.work_units),
                    num(r.avg_factor),
                    r.converged
                ));
                rows.push(json!({ "k0": k0, "n": n, "method": name, "iterations": r.iterations, "work_units": r.work_units }));
            }
        }
    }
    let mut o = Output::new(out, "mg-bench", &cfg)?;
    o.write("mg_bench.csv", &csv, json!({ "gamma_rad": gamma }))?;
    Ok(json!({ "files": o.written(), "rows": rows }))
}

pub fn fmg_time(file: &ConfigFile, out: &Path, a: FmgTimeArgs) -> Result<Value, CliError> {
    let mut cfg: config::FmgTimeConfig = file.section("fmg-time")?;
    over(&mut cfg.dim, a.dim);
    over(&mut cfg.k0, a.k0);
    over(&mut cfg.n, a.n);
    if a.gamma.is_some() {
        cfg.gamma = a.gamma;
    }
    over(&mut cfg.theta, a.theta);
    over(&mut cfg.tol, a.tol);
    over(&mut cfg.max_iters, a.max_iters);
    let gamma = rotation(cfg.gamma, cfg.theta)?;
    let p = HelmholtzProblem::two_dots(cfg.dim, cfg.k0)?;
    let cycle = CycleSpec::default();
    let smoother = scatter_core::SmootherSpec::default();
    let mut csv = String::from("n,method,wall_s,iterations,work_units,relative_residual\n");
    for &n in &cfg.n {
        let grid = rotated_cube(&p, n, gamma)?;
        let rhs = source_on(&grid, &p).norm();
        for name in ["vcycle", "fmg"] {
            let start = Instant::now();
            let (_, r) = if name == "vcycle" {
                solve_vcycles(&p, &grid, cfg.tol, cfg.max_iters, &cycle, &smoother)?
            } else {
                fmg(&p, &grid, cfg.tol, cfg.max_iters, &cycle, &smoother)?
            };
            let wall = start.elapsed().as_secs_f64();
            csv.push_str(&format!(
                "{n},{name},{wall:.3},{},{},{}\n",
                r.iterations,
                num(r.work_units),
                num(r.final_residual() / rhs)
            ));
        }
    }
    let mut o = Output::new(out, "fmg-time", &cfg)?;
    o.write("fmg_time.csv", &csv, json!({ "note": "wall times are hardware-specific" }))?;
    Ok(json!({ "files": o.written() }))
}

fn difference_csv(a: &FarFieldMap, b: &FarFieldMap) -> String {
    let norm: f64 = b.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let mut s = String::from(if a.dim == 2 {
        "alpha_rad,abs_diff,normalized_diff\n"
    } else {
        "polar_rad,azimuth_rad,abs_diff,normalized_diff\n"
    });
    for ((dir, x), y) in a.directions.angles.iter().zip(&a.values).zip(&b.values) {
        for t in dir {
            s.push_str(&format!("{t:.12e},"));
        }
        let d = (x - y).norm();
        s.push_str(&format!("{d:.12e},{:.12e}\n", d / norm));
    }
    s
}

pub fn farfield(file: &ConfigFile, out: &Path, a: FarfieldArgs) -> Result<Value, CliError> {
    let mut cfg: config::FarfieldConfig = file.section("farfield")?;
    over(&mut cfg.problem, a.problem);
    over(&mut cfg.k0, a.k0);
    over(&mut cfg.n, a.n);
    if a.gamma.is_some() {
        cfg.gamma = a.gamma;
    }
    over(&mut cfg.theta, a.theta);
    over(&mut cfg.compare, a.compare);
    over(&mut cfg.ref_theta, a.ref_theta);
    if a.ref_layer.is_some() {
        cfg.ref_layer = a.ref_layer;
    }
    if a.directions.is_some() {
        cfg.directions = a.directions;
    }
    over(&mut cfg.tol, a.tol);
    over(&mut cfg.ref_tol, a.ref_tol);
    over(&mut cfg.max_iters, a.max_iters);
    apply_smoother(&a.smoother, &mut cfg.smoother, &mut cfg.omega, &mut cfg.m);

    let p = HelmholtzProblem::named(&cfg.problem, cfg.k0)?;
    let dirs = match (cfg.directions, p.dim) {
        (None, d) => DirectionSet::default_for(d)?,
        (Some(m), 2) => DirectionSet::circle(m),
        (Some(m), _) => DirectionSet::sphere(m, 2 * m),
    };
    let gamma = rotation(cfg.gamma, cfg.theta)?;
    let grid = rotated_cube(&p, cfg.n, gamma)?;
    let solver = FarFieldSolver::Multigrid {
        tol: cfg.tol,
        max_iters: cfg.max_iters,
        smoother: config::smoother(cfg.smoother, cfg.omega, cfg.m),
    };
    let complex = farfield_map(&p, p.half_width, &grid, solver, &dirs)?;
    let mut o = Output::new(out, "farfield", &cfg)?;
    let rep = complex.report.as_ref().map(|r| json!({ "iterations": r.iterations, "avg_factor": r.avg_factor }));
    o.write(
        "farfield_complex.csv",
        &complex.to_csv(),
        json!({ "gamma_rad": gamma, "prefactor": complex.prefactor, "convergence": rep }),
    )?;
    let mut summary = json!({ "gamma_deg": gamma.to_degrees(), "complex_iterations": complex.report.as_ref().map(|r| r.iterations) });
    if cfg.compare == Compare::Reference {
        let layer = cfg.ref_layer.unwrap_or(cfg.n / 4);
        let eg = ecs_cube(&p, cfg.n, cfg.ref_theta.0, layer)?;
        let reference = farfield_map(&p, p.half_width, &eg, FarFieldSolver::Krylov { tol: cfg.ref_tol }, &dirs)?;
        let d = complex.relative_difference(&reference, &reference);
        o.write(
            "farfield_reference.csv",
            &reference.to_csv(),
            json!({ "ecs_theta_rad": cfg.ref_theta.0, "layer_intervals": layer }),
        )?;
        o.write("farfield_diff.csv", &difference_csv(&complex, &reference), json!({ "relative_l2_difference": d }))?;
        summary["relative_l2_difference"] = json!(d);
    }
    summary["files"] = json!(o.written());
    Ok(summary)
}

struct PathRow {
    energy: f64,
    path: &'static str,
    solver: &'static str,
    converged: bool,
    iterations: usize,
    result: Option<IonizationResult>,
}

pub fn ionization_scan(file: &ConfigFile, out: &Path, a: IonizationScanArgs) -> Result<Value, CliError> {
    let mut cfg: config::IonizationScanConfig = file.section("ionization-scan")?;
    over(&mut cfg.n, a.n);
    if a.gamma.is_some() {
        cfg.gamma = a.gamma;
    }
    over(&mut cfg.theta, a.theta);
    if a.layer.is_some() {
        cfg.layer = a.layer;
    }
    if a.energies.is_some() {
        cfg.energies = a.energies;
    }
    over(&mut cfg.emin, a.emin);
    over(&mut cfg.emax, a.emax);
    over(&mut cfg.estep, a.estep);
    over(&mut cfg.paths, a.paths);
    over(&mut cfg.n_alpha, a.n_alpha);
    over(&mut cfg.tol, a.tol);
    over(&mut cfg.max_iters, a.max_iters);

    let energies = match &cfg.energies {
        Some(e) => e.clone(),
        None => config::energy_range(cfg.emin, cfg.emax, cfg.estep)?,
    };
    let p = SchrodingerProblem::benchmark(2, 0.0)?;
    let bound = benchmark_bound_states(&p)?;
    let mut rows: Vec<PathRow> = Vec::new();
    if cfg.paths.contains(&PathKind::Complex) {
        let grid = rotated_grid(&p, cfg.n, rotation(cfg.gamma, cfg.theta)?)?;
        let spec = ScanSpec {
            tol: cfg.tol,
            max_iters: cfg.max_iters,
            n_alpha: Some(cfg.n_alpha),
            ..ScanSpec::for_dim(2)
        };
        for pt in energy_scan(&p, &energies, &grid, &spec, &bound)? {
            rows.push(PathRow {
                energy: pt.energy,
                path: "complex",
                solver: "multigrid",
                converged: pt.report.converged,
                iterations: pt.report.iterations,
                result: pt.ionization,
            });
        }
    }
    if cfg.paths.contains(&PathKind::Real) {
        let grid = ecs_grid(&p, cfg.n, cfg.theta.0, cfg.layer.unwrap_or(cfg.n / 2))?;
        for &e in &energies {
            let q = p.with_energy(e);
            let row = match solve_schrodinger_reference(&q, &grid, cfg.tol) {
                Ok((u, rep)) => PathRow {
                    energy: e,
                    path: "real",
                    solver: if rep.is_some() { "krylov" } else { "banded-lu" },
                    converged: true,
                    iterations: rep.map_or(0, |r| r.iterations),
                    result: Some(ionization(&u, &q, &bound, &grid, cfg.n_alpha)?),
                },
                Err(Error::NoConvergence(_)) => PathRow {
                    energy: e,
                    path: "real",
                    solver: "krylov",
                    converged: false,
                    iterations: 0,
                    result: None,
                },
                Err(e) => return Err(e.into()),
            };
            rows.push(row);
        }
    }

    let mut main = String::from("energy,path,solver,converged,iterations,sigma_tot,sigma_tot_unscaled\n");
    let mut single = String::from("energy,path,channel,lambda,open,k,re_s,im_s,abs2_s\n");
    let mut double = String::from("energy,path,alpha_rad,k1,k2,re_f,im_f,sigma\n");
    for r in &rows {
        let (st, su) = r.result.as_ref().map_or((f64::NAN, f64::NAN), |x| (x.sigma_tot, x.double.sigma_tot_unscaled));
        main.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            num(r.energy),
            r.path,
            r.solver,
            r.converged,
            r.iterations,
            num(st),
            num(su)
        ));
        let Some(res) = &r.result else { continue };
        for c in &res.single {
            let s = c.amplitude.unwrap_or(Complex64::new(f64::NAN, f64::NAN));
            single.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                num(r.energy),
                r.path,
                c.n,
                num(c.lambda),
                c.open,
                num(c.k.unwrap_or(f64::NAN)),
                num(s.re),
                num(s.im),
                num(c.s_abs2)
            ));
        }
        for d in &res.double.samples {
            double.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                num(r.energy),
                r.path,
                num(d.alpha),
                num(d.k1),
                num(d.k2),
                num(d.f.re),
                num(d.f.im),
                num(d.sigma)
            ));
        }
    }
    let lambdas: Vec<f64> = bound.iter().map(|b| b.lambda).collect();
    let mut o = Output::new(out, "ionization-scan", &cfg)?;
    o.write("ionization.csv", &main, json!({ "bound_states": lambdas }))?;
    o.write("ionization_single.csv", &single, json!({ "bound_states": lambdas }))?;
    o.write("ionization_double.csv", &double, json!({}))?;
    Ok(json!({ "files": o.written(), "energies": energies.len(), "bound_states": lambdas }))
}

pub fn mg_rate_scan(file: &ConfigFile, out: &Path, a: MgRateScanArgs) -> Result<Value, CliError> {
    let mut cfg: config::MgRateScanConfig = file.section("mg-rate-scan")?;
    over(&mut cfg.dim, a.dim);
    if a.n.is_some() {
        cfg.n = a.n;
    }
    if a.gamma.is_some() {
        cfg.gamma = a.gamma;
    }
    if a.energies.is_some() {
        cfg.energies = a.energies;
    }
    over(&mut cfg.emin, a.emin);
    over(&mut cfg.emax, a.emax);
    over(&mut cfg.estep, a.estep);
    over(&mut cfg.tol, a.tol);
    over(&mut cfg.max_iters, a.max_iters);
    over(&mut cfg.fmg_warmup, a.fmg_warmup);
    if a.rate_cycles.is_some() {
        cfg.rate_cycles = a.rate_cycles;
    }
    if !(2..=3).contains(&cfg.dim) {
        return Err(CliError::Usage(format!("mg-rate-scan needs --dim 2 or 3, got {}", cfg.dim)));
    }
    let energies = match &cfg.energies {
        Some(e) => e.clone(),
        None => config::energy_range(cfg.emin, cfg.emax, cfg.estep)?,
    };
    let three = cfg.dim == 3;
    let n = cfg.n.unwrap_or(if three { 64 } else { 256 });
    let gamma = match cfg.gamma {
        Some(g) => g.0,
        None if three => std::f64::consts::PI / 12.0,
        None => theta_to_gamma(std::f64::consts::PI / 7.0)?,
    };
    let p = SchrodingerProblem::benchmark(cfg.dim, 0.0)?;
    let grid = rotated_grid(&p, n, gamma)?;
    let mut spec = ScanSpec::for_dim(cfg.dim);
    spec.tol = cfg.tol;
    spec.max_iters = cfg.max_iters;
    spec.fmg_warmup = (cfg.fmg_warmup > 0).then_some(cfg.fmg_warmup);
    over(&mut spec.rate_cycles, cfg.rate_cycles);
    let pts = energy_scan(&p, &energies, &grid, &spec, &[])?;
    let mut csv = String::from("energy,rate,avg_factor,iterations,converged\n");
    for pt in &pts {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            num(pt.energy),
            num(pt.rate),
            num(pt.report.avg_factor),
            pt.report.iterations,
            pt.report.converged
        ));
    }
    let divergent: Vec<f64> = pts.iter().filter(|p| p.rate >= 0.95).map(|p| p.energy).collect();
    let mut o = Output::new(out, "mg-rate-scan", &cfg)?;
    o.write(
        "mg_rate_scan.csv",
        &csv,
        json!({ "n": n, "gamma_rad": gamma, "rate_cycles": spec.rate_cycles, "divergent_energies": divergent }),
    )?;
    Ok(json!({ "files": o.written(), "divergent_energies": divergent }))
}

pub fn spectrum(file: &ConfigFile, out: &Path, a: SpectrumArgs) -> Result<Value, CliError> {
    let mut cfg: config::SpectrumConfig = file.section("spectrum")?;
    over(&mut cfg.extent, a.extent);
    over(&mut cfg.n, a.n);
    over(&mut cfg.gamma, a.gamma);
    over(&mut cfg.kronecker, a.kronecker);
    let p = SchrodingerProblem::benchmark(1, 0.0)?;
    let v = |z: Complex64| p.one_body(z);
    let real = eig_hamiltonian_1d(&v, &Contour1D::real(0.0, cfg.extent, cfg.n)?)?;
    let rot = eig_hamiltonian_1d(&v, &Contour1D::rotated(0.0, cfg.extent, cfg.n, cfg.gamma.0)?)?;
    let kron = if cfg.kronecker { kronecker_2d_spectrum(&real)? } else { Vec::new() };
    let mut sets: Vec<(&str, &[Complex64])> = vec![("real", &real), ("rotated", &rot)];
    if cfg.kronecker {
        sets.push(("kron2d", &kron));
    }
    let branch = branch_argument(&rot).map(f64::to_degrees);
    let results = json!({
        "branch_argument_deg": branch,
        "expected_branch_argument_deg": -2.0 * cfg.gamma.0.to_degrees(),
        "lowest_rotated": [rot[0].re, rot[0].im],
        "kronecker_lowest": kron.iter().take(2).map(|z| z.re).collect::<Vec<_>>(),
    });
    let mut o = Output::new(out, "spectrum", &cfg)?;
    o.write("spectrum.csv", &spectrum_csv(&sets), results.clone())?;
    Ok(json!({ "files": o.written(), "results": results }))
}

