//! One-dimensional complex contours and their tensor products.
//!
//! Two contour shapes are supported: a straight ray `z = x e^{iγ}` (the fully
//! rotated grid) and a real interval that bends into the complex plane at
//! one or both ends with angle `θ` (exterior complex scaling). Both store
//! explicit nodes and complex steps, so the finite-difference and
//! quadrature code never needs to know which shape it is looking at.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContourKind {
    /// `z_j = x_j e^{iγ}` with `x_j` uniform on `[a, b]`.
    Rotated { gamma: f64 },
    /// Uniform real nodes on `[a, b]`, continued by `n_left` / `n_right`
    /// steps of length `h` along `∓e^{iθ}` beyond `a` and `b`.
    EcsReal {
        theta: f64,
        n_left: usize,
        n_right: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Contour1D {
    kind: ContourKind,
    a: f64,
    b: f64,
    /// Number of intervals on the underlying real interval `[a, b]`.
    n_intervals: usize,
    nodes: Vec<Complex64>,
    steps: Vec<Complex64>,
}

/// Overall rotation angle of the straight contour that ends where an ECS
/// contour with angle `theta` ends, when the absorbing layer is one quarter
/// of the real domain length.
pub fn theta_to_gamma(theta: f64) -> Result<f64> {
    if !(0.0..FRAC_PI_2).contains(&theta) {
        return Err(Error::Domain(format!(
            "ECS angle {theta} outside [0, pi/2)"
        )));
    }
    Ok((theta.sin() / (2.0 + theta.cos())).atan())
}

/// Smallest rotation angle whose equivalent shifted-Laplacian shift reaches
/// `beta_min`.
pub fn min_gamma(beta_min: f64) -> Result<f64> {
    if !(beta_min >= 0.0) {
        return Err(Error::Domain(format!(
            "minimal shift must be non-negative, got {beta_min}"
        )));
    }
    Ok(beta_min.atan() / 2.0)
}

fn check_angle(angle: f64, what: &str) -> Result<()> {
    if !(0.0..FRAC_PI_2).contains(&angle) {
        return Err(Error::Domain(format!("{what} {angle} outside [0, pi/2)")));
    }
    Ok(())
}

impl Contour1D {
    pub fn rotated(a: f64, b: f64, n_intervals: usize, gamma: f64) -> Result<Self> {
        check_interval(a, b, n_intervals)?;
        check_angle(gamma, "rotation angle")?;
        let h = (b - a) / n_intervals as f64;
        let rot = Complex64::from_polar(1.0, gamma);
        let nodes: Vec<Complex64> = (0..=n_intervals)
            .map(|j| rot * (a + j as f64 * h))
            .collect();
        let steps = vec![rot * h; n_intervals];
        Ok(Self {
            kind: ContourKind::Rotated { gamma },
            a,
            b,
            n_intervals,
            nodes,
            steps,
        })
    }

    pub fn real(a: f64, b: f64, n_intervals: usize) -> Result<Self> {
        Self::rotated(a, b, n_intervals, 0.0)
    }

    pub fn ecs(
        a: f64,
        b: f64,
        n_intervals: usize,
        theta: f64,
        n_left: usize,
        n_right: usize,
    ) -> Result<Self> {
        check_interval(a, b, n_intervals)?;
        check_angle(theta, "ECS angle")?;
        let h = (b - a) / n_intervals as f64;
        let bend = Complex64::from_polar(h, theta);
        let mut nodes = Vec::with_capacity(n_left + n_intervals + n_right + 1);
        for s in (1..=n_left).rev() {
            nodes.push(Complex64::new(a, 0.0) - bend * s as f64);
        }
        for j in 0..=n_intervals {
            nodes.push(Complex64::new(a + j as f64 * h, 0.0));
        }
        for s in 1..=n_right {
            nodes.push(Complex64::new(b, 0.0) + bend * s as f64);
        }
        let mut steps = Vec::with_capacity(nodes.len() - 1);
        steps.extend(std::iter::repeat(bend).take(n_left));
        steps.extend(std::iter::repeat(Complex64::new(h, 0.0)).take(n_intervals));
        steps.extend(std::iter::repeat(bend).take(n_right));
        Ok(Self {
            kind: ContourKind::EcsReal {
                theta,
                n_left,
                n_right,
            },
            a,
            b,
            n_intervals,
            nodes,
            steps,
        })
    }

    pub fn kind(&self) -> ContourKind {
        self.kind
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Intervals on the real parameter interval `[a, b]`.
    pub fn n_intervals(&self) -> usize {
        self.n_intervals
    }

    /// All intervals, including ECS layer intervals.
    pub fn total_intervals(&self) -> usize {
        self.steps.len()
    }

    pub fn interior_len(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    pub fn steps(&self) -> &[Complex64] {
        &self.steps
    }

    /// Real spacing `h` of the underlying parameter grid.
    pub fn h(&self) -> f64 {
        (self.b - self.a) / self.n_intervals as f64
    }

    pub fn gamma(&self) -> Option<f64> {
        match self.kind {
            ContourKind::Rotated { gamma } => Some(gamma),
            ContourKind::EcsReal { .. } => None,
        }
    }

    pub fn interior_nodes(&self) -> &[Complex64] {
        &self.nodes[1..self.nodes.len() - 1]
    }

    /// Trapezoid weights `(h_{j-1} + h_j)/2` at every node (endpoints get
    /// half a step).
    pub fn trapezoid_weights(&self) -> Vec<Complex64> {
        let n = self.nodes.len();
        (0..n)
            .map(|j| {
                let left = if j > 0 { self.steps[j - 1] } else { Complex64::new(0.0, 0.0) };
                let right = if j + 1 < n { self.steps[j] } else { Complex64::new(0.0, 0.0) };
                (left + right) * 0.5
            })
            .collect()
    }

    /// Every other node. Layer counts of ECS contours must be even.
    pub fn coarsen(&self) -> Result<Self> {
        let total = self.total_intervals();
        if total % 2 != 0 || total < 4 {
            return Err(Error::Config(format!(
                "contour with {total} intervals cannot be coarsened"
            )));
        }
        match self.kind {
            ContourKind::Rotated { gamma } => {
                if self.n_intervals % 2 != 0 {
                    return Err(Error::Config("odd interval count".into()));
                }
                Self::rotated(self.a, self.b, self.n_intervals / 2, gamma)
            }
            ContourKind::EcsReal {
                theta,
                n_left,
                n_right,
            } => {
                if n_left % 2 != 0 || n_right % 2 != 0 || self.n_intervals % 2 != 0 {
                    return Err(Error::Config(
                        "ECS contour segments must have even interval counts to coarsen".into(),
                    ));
                }
                Self::ecs(
                    self.a,
                    self.b,
                    self.n_intervals / 2,
                    theta,
                    n_left / 2,
                    n_right / 2,
                )
            }
        }
    }

    /// The straight rotated contour with the same endpoints and interval
    /// count, when those endpoints lie on a common ray through the origin.
    pub fn rotated_partner(&self) -> Result<Self> {
        let first = self.nodes[0];
        let last = *self.nodes.last().unwrap();
        let gamma = last.arg();
        let (a, b) = if first.norm() < 1e-14 {
            (0.0, last.norm())
        } else {
            let cross = first.re * last.im - first.im * last.re;
            if cross.abs() > 1e-9 * first.norm() * last.norm() || first.re * last.re > 0.0 {
                return Err(Error::Unsupported(
                    "contour endpoints are not on a common line through the origin".into(),
                ));
            }
            (-first.norm(), last.norm())
        };
        Self::rotated(a, b, self.total_intervals(), gamma)
    }
}

fn check_interval(a: f64, b: f64, n: usize) -> Result<()> {
    if !(a < b) {
        return Err(Error::Domain(format!("empty interval [{a}, {b}]")));
    }
    if n < 2 {
        return Err(Error::Domain(format!("need at least 2 intervals, got {n}")));
    }
    Ok(())
}

/// Serializable description of one contour axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub a: f64,
    pub b: f64,
    pub n_intervals: usize,
    #[serde(flatten)]
    pub kind: ContourKind,
}

/// Builds a contour from its description. Grids flagged for multigrid must
/// have a power-of-two total interval count.
pub fn build_contour(spec: &ContourSpec, for_multigrid: bool) -> Result<Contour1D> {
    let contour = match spec.kind {
        ContourKind::Rotated { gamma } => Contour1D::rotated(spec.a, spec.b, spec.n_intervals, gamma)?,
        ContourKind::EcsReal {
            theta,
            n_left,
            n_right,
        } => Contour1D::ecs(spec.a, spec.b, spec.n_intervals, theta, n_left, n_right)?,
    };
    if for_multigrid && !contour.total_intervals().is_power_of_two() {
        return Err(Error::Config(format!(
            "multigrid grids need a power-of-two interval count, got {}",
            contour.total_intervals()
        )));
    }
    Ok(contour)
}

/// Tensor product of 1 to 3 contours. Unknowns sit at interior nodes; the
/// first axis varies slowest in the flattened layout.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorGrid {
    axes: Vec<Contour1D>,
}

impl TensorGrid {
    pub fn new(axes: Vec<Contour1D>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 3 {
            return Err(Error::Domain(format!(
                "grid dimension must be 1..=3, got {}",
                axes.len()
            )));
        }
        Ok(Self { axes })
    }

    /// Same contour along every axis.
    pub fn cube(axis: Contour1D, dim: usize) -> Result<Self> {
        Self::new(vec![axis; dim])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Contour1D] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &Contour1D {
        &self.axes[i]
    }

    pub fn interior_shape(&self) -> Vec<usize> {
        self.axes.iter().map(Contour1D::interior_len).collect()
    }

    pub fn interior_count(&self) -> usize {
        self.interior_shape().iter().product()
    }

    /// Node count including the Dirichlet boundary layer.
    pub fn full_node_count(&self) -> usize {
        self.axes.iter().map(|a| a.nodes().len()).product()
    }

    /// Common rotation angle when every axis is a rotated contour.
    pub fn gamma(&self) -> Option<f64> {
        let g = self.axes[0].gamma()?;
        self.axes
            .iter()
            .all(|a| a.gamma().map_or(false, |x| (x - g).abs() < 1e-15))
            .then_some(g)
    }

    /// `e^{i d γ} h^d`, the volume element of an interior cell on a fully
    /// rotated grid with equal spacing on all axes.
    pub fn rotated_jacobian(&self) -> Option<Complex64> {
        let gamma = self.gamma()?;
        let h = self.axes[0].h();
        if self.axes.iter().any(|a| (a.h() - h).abs() > 1e-14 * h) {
            return None;
        }
        let d = self.dim() as i32;
        Some(Complex64::from_polar(h.powi(d), d as f64 * gamma))
    }

    pub fn coarsen(&self) -> Result<Self> {
        Ok(Self {
            axes: self
                .axes
                .iter()
                .map(Contour1D::coarsen)
                .collect::<Result<_>>()?,
        })
    }

    pub fn rotated_partner(&self) -> Result<Self> {
        Ok(Self {
            axes: self
                .axes
                .iter()
                .map(Contour1D::rotated_partner)
                .collect::<Result<_>>()?,
        })
    }

    /// Calls `f(flat_index, coords)` for every interior node in layout order.
    pub fn for_each_interior(&self, mut f: impl FnMut(usize, &[Complex64])) {
        let shape = self.interior_shape();
        let mut z = vec![Complex64::new(0.0, 0.0); self.dim()];
        let total: usize = shape.iter().product();
        let mut idx = vec![0usize; self.dim()];
        for flat in 0..total {
            for (ax, &i) in idx.iter().enumerate() {
                z[ax] = self.axes[ax].interior_nodes()[i];
            }
            f(flat, &z);
            for ax in (0..self.dim()).rev() {
                idx[ax] += 1;
                if idx[ax] < shape[ax] {
                    break;
                }
                idx[ax] = 0;
            }
        }
    }
}

/// Serializable grid description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axes: Vec<ContourSpec>,
}

impl GridSpec {
    pub fn build(&self, for_multigrid: bool) -> Result<TensorGrid> {
        TensorGrid::new(
            self.axes
                .iter()
                .map(|s| build_contour(s, for_multigrid))
                .collect::<Result<_>>()?,
        )
    }
}
