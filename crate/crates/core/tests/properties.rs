//! Property tests for invariants that cut across modules.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scatter_core::farfield::{integral_i2_complex, DirectionSet};
use scatter_core::field::dot_unconj;
use scatter_core::multigrid::solve_vcycles;
use scatter_core::problems::{chi_2d, helmholtz_rhs, HelmholtzProblem, SchrodingerProblem};
use scatter_core::quantum::{benchmark_bound_states, continuum_wave, ionization, rotated_grid};
use scatter_core::{Complex64, Contour1D, CycleSpec, Field, SmootherSpec, StencilOperator, TensorGrid};

fn random_field(shape: &[usize], seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    Field::from_vec(shape, data).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rotated_nodes_unrotate_to_uniform_grid(a in -30.0f64..0.0, len in 1.0f64..60.0, n in 2usize..200, gamma in 0.0f64..1.2) {
        let c = Contour1D::rotated(a, a + len, n, gamma).unwrap();
        let back = Complex64::from_polar(1.0, -gamma);
        let h = len / n as f64;
        for (j, z) in c.nodes().iter().enumerate() {
            let x = z * back;
            let expect = a + j as f64 * h;
            prop_assert!((x.re - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
            prop_assert!(x.im.abs() <= 1e-12 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn object_on_real_axis_matches_real_formula(x in -20.0f64..20.0, y in -20.0f64..20.0) {
        let z = chi_2d(Complex64::new(x, 0.0), Complex64::new(y, 0.0));
        let r = -0.2 * ((-(x * x + (y - 4.0).powi(2))).exp() + (-(x * x + (y + 4.0).powi(2))).exp());
        prop_assert!(z.im == 0.0);
        prop_assert!((z.re - r).abs() <= 1e-15 * r.abs().max(1e-300));
    }

    #[test]
    fn rhs_is_linear_in_object(k0 in 0.1f64..3.0, gamma in 0.0f64..0.5, scale in 0.1f64..4.0) {
        let p = HelmholtzProblem::two_dots(2, k0).unwrap();
        let mut q = p.clone();
        q.chi_scale = 2.0 * p.chi_scale;
        let mut r = p.clone();
        r.chi_scale = scale;
        let g = TensorGrid::cube(Contour1D::rotated(-20.0, 20.0, 32, gamma).unwrap(), 2).unwrap();
        let (f1, f2) = (helmholtz_rhs(&p, &g), helmholtz_rhs(&q, &g));
        for (a, b) in f1.as_slice().iter().zip(f2.as_slice()) {
            prop_assert_eq!(*a * 2.0, *b);
        }
        let fr = helmholtz_rhs(&r, &g);
        for (a, b) in f1.as_slice().iter().zip(fr.as_slice()) {
            prop_assert!((*a * scale - *b).norm() <= 1e-15 * b.norm().max(1e-300));
        }
    }

    #[test]
    fn rotated_operator_is_complex_symmetric(seed in 0u64..10_000, gamma in 0.0f64..0.6, d in 1usize..=3) {
        let n = [0, 40, 16, 8][d];
        let g = TensorGrid::cube(Contour1D::rotated(-20.0, 20.0, n, gamma).unwrap(), d).unwrap();
        let k2 = (0..g.interior_count()).map(|j| Complex64::new(1.0 + 0.01 * j as f64, 0.1)).collect();
        let op = StencilOperator::from_parts(g.clone(), k2).unwrap();
        let u = random_field(&g.interior_shape(), seed);
        let v = random_field(&g.interior_shape(), seed + 7);
        let lhs = dot_unconj(op.apply(&u).unwrap().as_slice(), v.as_slice());
        let rhs = dot_unconj(u.as_slice(), op.apply(&v).unwrap().as_slice());
        prop_assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm());
    }

    #[test]
    fn second_far_field_integral_is_linear(seed in 0u64..10_000, gamma in 0.05f64..0.4) {
        let p = HelmholtzProblem::two_dots(2, 1.0).unwrap();
        let g = TensorGrid::cube(Contour1D::rotated(-20.0, 20.0, 32, gamma).unwrap(), 2).unwrap();
        let dirs = DirectionSet::circle(16);
        let u = random_field(&g.interior_shape(), seed);
        let mut u2 = u.clone();
        u2.scale(Complex64::new(2.0, 0.0));
        let a = integral_i2_complex(&u, &p, &g, &dirs).unwrap();
        let b = integral_i2_complex(&u2, &p, &g, &dirs).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((*x * 2.0 - *y).norm() <= 1e-14 * y.norm().max(1e-300));
        }
    }

    #[test]
    fn continuum_amplitude_is_inverse_root_k(k in 0.3f64..3.0) {
        let p = SchrodingerProblem::benchmark(1, 0.0).unwrap();
        let v = |z: Complex64| p.one_body(z);
        let c = Contour1D::real(0.0, 40.0, 4000).unwrap();
        let w = continuum_wave(&v, k, &c).unwrap();
        // least-squares fit of a sin(kx) + b cos(kx) over the outer tenth
        let start = w.nodes.len() * 9 / 10;
        let (mut ss, mut sc, mut cc, mut ys, mut yc) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (z, y) in w.nodes[start..].iter().zip(&w.values[start..]) {
            let (s, co) = (k * z.re).sin_cos();
            ss += s * s;
            sc += s * co;
            cc += co * co;
            ys += y.re * s;
            yc += y.re * co;
        }
        let det = ss * cc - sc * sc;
        let a = (ys * cc - yc * sc) / det;
        let b = (yc * ss - ys * sc) / det;
        let amp = (a * a + b * b).sqrt();
        prop_assert!((amp * k.sqrt() - 1.0).abs() <= 1e-6, "amplitude {} vs {}", amp, 1.0 / k.sqrt());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn channels_open_at_their_thresholds(e in -2.0f64..2.0, seed in 0u64..1000) {
        let p = SchrodingerProblem::benchmark(2, e).unwrap();
        let b = benchmark_bound_states(&p).unwrap();
        let g = rotated_grid(&p, 16, 0.15).unwrap();
        let u = random_field(&g.interior_shape(), seed);
        let r = ionization(&u, &p, &b, &g, 8).unwrap();
        let ch = &r.single[0];
        prop_assert_eq!(ch.open, e > b[0].lambda);
        if !ch.open {
            prop_assert_eq!(ch.s_abs2, 0.0);
        }
        prop_assert_eq!(r.double.samples.is_empty(), e <= 0.0);
        if e <= 0.0 {
            prop_assert_eq!(r.sigma_tot, 0.0);
        } else {
            prop_assert!(r.sigma_tot > 0.0);
        }
    }
}

#[test]
fn threaded_and_serial_solves_agree() {
    let p = HelmholtzProblem::two_dots(2, 1.0).unwrap();
    let g = TensorGrid::cube(Contour1D::rotated(-20.0, 20.0, 128, 0.2).unwrap(), 2).unwrap();
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| solve_vcycles(&p, &g, 1e-8, 50, &CycleSpec::default(), &SmootherSpec::default()).unwrap())
    };
    let (u1, r1) = run(1);
    let (u1b, r1b) = run(1);
    let (u4, r4) = run(4);
    assert_eq!(u1.as_slice(), u1b.as_slice());
    assert_eq!(r1.residual_history, r1b.residual_history);
    assert_eq!(r1.iterations, r4.iterations);
    for (a, b) in r1.residual_history.iter().zip(&r4.residual_history) {
        assert!((a - b).abs() <= 1e-12 * a, "{a} vs {b}");
    }
    let mut d = u1.clone();
    d.axpy(Complex64::new(-1.0, 0.0), &u4);
    assert!(d.norm() <= 1e-12 * u1.norm());
}
