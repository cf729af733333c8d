//! Analytic model problems. Every coefficient is a closed-form expression
//! evaluated directly at complex arguments, which is how fields are
//! continued onto rotated contours.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients of `(-Δ - k²(z)) u = f(z)`.
pub trait Coefficients: Sync {
    fn wavenumber_sq(&self, z: &[Complex64]) -> Complex64;
    fn source(&self, z: &[Complex64]) -> Complex64;
}

/// A Helmholtz scatterer: background wavenumber, object contrast and
/// incoming plane wave.
pub trait Scatterer: Sync {
    fn dim(&self) -> usize;
    fn k0(&self) -> f64;
    /// `k0² χ(z)`.
    fn contrast(&self, z: &[Complex64]) -> Complex64;
    /// Unit incidence direction.
    fn eta(&self) -> &[f64];

    fn incoming(&self, z: &[Complex64]) -> Complex64 {
        incoming_wave(z, self.k0(), self.eta())
    }
}

impl<T: Scatterer> Coefficients for T {
    fn wavenumber_sq(&self, z: &[Complex64]) -> Complex64 {
        let k0 = self.k0();
        self.contrast(z) + k0 * k0
    }

    fn source(&self, z: &[Complex64]) -> Complex64 {
        self.contrast(z) * self.incoming(z)
    }
}

/// `k0² χ` for two Gaussian dots centred at `(0, ±4)`.
pub fn chi_2d(z1: Complex64, z2: Complex64) -> Complex64 {
    let up = z2 - 4.0;
    let down = z2 + 4.0;
    -0.2 * ((-(z1 * z1 + up * up)).exp() + (-(z1 * z1 + down * down)).exp())
}

/// `k0² χ` for two Gaussian spheres centred at `(0, ±4, 0)`.
pub fn chi_3d(z1: Complex64, z2: Complex64, z3: Complex64) -> Complex64 {
    let up = z2 - 4.0;
    let down = z2 + 4.0;
    let common = z1 * z1 + z3 * z3;
    -0.2 * ((-(common + up * up)).exp() + (-(common + down * down)).exp())
}

/// `e^{i k0 η·z}`.
pub fn incoming_wave(z: &[Complex64], k0: f64, eta: &[f64]) -> Complex64 {
    let phase: Complex64 = z.iter().zip(eta).map(|(zi, e)| zi * *e).sum();
    (Complex64::i() * k0 * phase).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectKind {
    /// The two-dot Gaussian object (`chi_2d` / `chi_3d` by dimension).
    TwoDots,
    /// Empty space, `χ ≡ 0`.
    Vacuum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HelmholtzProblem {
    pub dim: usize,
    pub k0: f64,
    pub object: ObjectKind,
    /// Multiplies the object contrast.
    #[serde(default = "one")]
    pub chi_scale: f64,
    pub eta: Vec<f64>,
    /// The real domain is `[-half_width, half_width]^d`.
    pub half_width: f64,
}

fn one() -> f64 {
    1.0
}

impl HelmholtzProblem {
    /// Two dots in `[-20, 20]^d`, wave incident along `x`.
    pub fn two_dots(dim: usize, k0: f64) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::Domain(format!("two-dot object needs d = 2 or 3, got {dim}")));
        }
        let mut eta = vec![0.0; dim];
        eta[0] = 1.0;
        Ok(Self {
            dim,
            k0,
            object: ObjectKind::TwoDots,
            chi_scale: 1.0,
            eta,
            half_width: 20.0,
        })
    }

    /// Problem lookup by the names used in experiment configs.
    pub fn named(name: &str, k0: f64) -> Result<Self> {
        match name {
            "helmholtz2d-twodots" => Self::two_dots(2, k0),
            "helmholtz3d-twodots" => Self::two_dots(3, k0),
            "helmholtz2d-vacuum" | "helmholtz3d-vacuum" => {
                let dim = if name.starts_with("helmholtz2d") { 2 } else { 3 };
                let mut p = Self::two_dots(dim, k0)?;
                p.object = ObjectKind::Vacuum;
                Ok(p)
            }
            _ => Err(Error::Config(format!("unknown Helmholtz problem `{name}`"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eta.len() != self.dim {
            return Err(Error::Config("incidence direction has wrong dimension".into()));
        }
        let n: f64 = self.eta.iter().map(|e| e * e).sum::<f64>().sqrt();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("incidence direction has norm {n}")));
        }
        if !(self.k0 > 0.0) {
            return Err(Error::Config("k0 must be positive".into()));
        }
        Ok(())
    }
}

impl Scatterer for HelmholtzProblem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn k0(&self) -> f64 {
        self.k0
    }

    fn contrast(&self, z: &[Complex64]) -> Complex64 {
        let base = match (self.object, z.len()) {
            (ObjectKind::Vacuum, _) => return Complex64::new(0.0, 0.0),
            (ObjectKind::TwoDots, 2) => chi_2d(z[0], z[1]),
            (ObjectKind::TwoDots, 3) => chi_3d(z[0], z[1], z[2]),
            (ObjectKind::TwoDots, _) => Complex64::new(0.0, 0.0),
        };
        base * self.chi_scale
    }

    fn eta(&self) -> &[f64] {
        &self.eta
    }
}

/// Right-hand side `k0² χ(z) u_in(z)` sampled on the interior of `grid`.
pub fn helmholtz_rhs<S: Scatterer>(problem: &S, grid: &crate::grid::TensorGrid) -> crate::Field {
    crate::Field::from_fn(grid, |z| problem.source(z))
}

/// Partial-wave Schrödinger model on the positive quadrant / octant:
/// `(-½Δ + Σ V_i + Σ V_ij - E) u = φ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchrodingerProblem {
    pub dim: usize,
    pub energy: f64,
    /// `V_i(x) = one_body_depth · e^{-x²}`.
    pub one_body_depth: f64,
    /// `V_ij(x, y) = two_body_strength · e^{-(x+y)²}`.
    pub two_body_strength: f64,
    /// `φ = e^{-source_width (Σ x_i)²}`.
    pub source_width: f64,
    /// Each axis covers `[0, extent]`.
    pub extent: f64,
}

impl SchrodingerProblem {
    /// The benchmark with `V_i = -4.5 e^{-x²}`, `V_ij = 2 e^{-(x+y)²}` and
    /// `φ = e^{-3(Σx)²}` on `[0, 15]^d`.
    pub fn benchmark(dim: usize, energy: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Domain(format!("Schrödinger model needs d in 1..=3, got {dim}")));
        }
        Ok(Self {
            dim,
            energy,
            one_body_depth: -4.5,
            two_body_strength: 2.0,
            source_width: 3.0,
            extent: 15.0,
        })
    }

    pub fn with_energy(&self, energy: f64) -> Self {
        Self {
            energy,
            ..self.clone()
        }
    }

    pub fn one_body(&self, x: Complex64) -> Complex64 {
        self.one_body_depth * (-(x * x)).exp()
    }

    pub fn two_body(&self, x: Complex64, y: Complex64) -> Complex64 {
        let s = x + y;
        self.two_body_strength * (-(s * s)).exp()
    }

    pub fn potential(&self, z: &[Complex64]) -> Complex64 {
        let mut v: Complex64 = z.iter().map(|&x| self.one_body(x)).sum();
        for i in 0..z.len() {
            for j in i + 1..z.len() {
                v += self.two_body(z[i], z[j]);
            }
        }
        v
    }

    pub fn rhs_phi(&self, z: &[Complex64]) -> Complex64 {
        let s: Complex64 = z.iter().sum();
        (-self.source_width * s * s).exp()
    }
}

impl Coefficients for SchrodingerProblem {
    fn wavenumber_sq(&self, z: &[Complex64]) -> Complex64 {
        (Complex64::new(self.energy, 0.0) - self.potential(z)) * 2.0
    }

    fn source(&self, z: &[Complex64]) -> Complex64 {
        self.rhs_phi(z) * 2.0
    }
}
