//! Matrix-free second-order discretization of `-Δ - k²(z)` on a tensor grid.
//!
//! Each axis contributes a three-point second difference built from the
//! complex steps of its contour. On a uniformly rotated axis this is
//! `[1, -2, 1] / (e^{2iγ} h²)`; at an ECS bend the standard non-uniform
//! formula is used. Dirichlet values at the contour endpoints are zero and
//! do not appear in the system.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{Contour1D, TensorGrid};
use crate::problems::Coefficients;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Second-difference weights at the interior nodes of one axis.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisStencil {
    pub lower: Vec<Complex64>,
    pub center: Vec<Complex64>,
    pub upper: Vec<Complex64>,
}

impl AxisStencil {
    pub fn from_contour(c: &Contour1D) -> Self {
        let n = c.interior_len();
        let steps = c.steps();
        let mut lower = Vec::with_capacity(n);
        let mut center = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n);
        for j in 0..n {
            let hm = steps[j];
            let hp = steps[j + 1];
            if hm == hp {
                let inv = (hm * hm).inv();
                lower.push(inv);
                center.push(-2.0 * inv);
                upper.push(inv);
            } else {
                let sum = hm + hp;
                lower.push(2.0 / (hm * sum));
                center.push(-2.0 / (hm * hp));
                upper.push(2.0 / (hp * sum));
            }
        }
        Self {
            lower,
            center,
            upper,
        }
    }

    fn padding() -> Self {
        Self {
            lower: vec![ZERO],
            center: vec![ZERO],
            upper: vec![ZERO],
        }
    }
}

#[derive(Clone, Debug)]
pub struct StencilOperator {
    grid: TensorGrid,
    shape: Vec<usize>,
    /// Shape padded to three axes with unit extents.
    dims: [usize; 3],
    stencils: [AxisStencil; 3],
    k2: Vec<Complex64>,
    diag: Vec<Complex64>,
}

impl StencilOperator {
    /// Discretizes `-Δ - k²` with `k²` sampled from `coeffs` at interior nodes.
    pub fn new<C: Coefficients + ?Sized>(grid: &TensorGrid, coeffs: &C) -> Self {
        let k2 = Field::from_fn(grid, |z| coeffs.wavenumber_sq(z)).into_vec();
        Self::from_parts(grid.clone(), k2).expect("sampled k² matches grid")
    }

    pub fn from_parts(grid: TensorGrid, k2: Vec<Complex64>) -> Result<Self> {
        let shape = grid.interior_shape();
        let n: usize = shape.iter().product();
        if k2.len() != n {
            return Err(Error::ShapeMismatch {
                expected: shape,
                got: vec![k2.len()],
            });
        }
        let mut dims = [1usize; 3];
        let mut stencils = [
            AxisStencil::padding(),
            AxisStencil::padding(),
            AxisStencil::padding(),
        ];
        // Pad leading axes so the innermost grid axis stays contiguous.
        let offset = 3 - grid.dim();
        for (ax, c) in grid.axes().iter().enumerate() {
            dims[offset + ax] = c.interior_len();
            stencils[offset + ax] = AxisStencil::from_contour(c);
        }
        let mut op = Self {
            grid,
            shape,
            dims,
            stencils,
            k2,
            diag: Vec::new(),
        };
        op.diag = op.compute_diag();
        Ok(op)
    }

    /// Real-grid Laplacian with the wavenumber term multiplied by `shift`:
    /// the complex shifted Laplacian `-Δ - shift·k²`.
    pub fn shifted(grid: TensorGrid, k2: &[Complex64], shift: Complex64) -> Result<Self> {
        Self::from_parts(grid, k2.iter().map(|k| k * shift).collect())
    }

    fn compute_diag(&self) -> Vec<Complex64> {
        let [n0, n1, n2] = self.dims;
        let mut d = Vec::with_capacity(n0 * n1 * n2);
        for i in 0..n0 {
            for j in 0..n1 {
                for k in 0..n2 {
                    let lap = self.stencils[0].center[i.min(self.stencils[0].center.len() - 1)]
                        + self.stencils[1].center[j.min(self.stencils[1].center.len() - 1)]
                        + self.stencils[2].center[k.min(self.stencils[2].center.len() - 1)];
                    d.push(-lap - self.k2[d.len()]);
                }
            }
        }
        d
    }

    pub fn grid(&self) -> &TensorGrid {
        &self.grid
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.k2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k2.is_empty()
    }

    pub fn k2(&self) -> &[Complex64] {
        &self.k2
    }

    /// Main diagonal of the operator matrix.
    pub fn diagonal(&self) -> &[Complex64] {
        &self.diag
    }

    /// `out = A u` on raw slices.
    pub fn apply_into(&self, u: &[Complex64], out: &mut [Complex64]) {
        let [_, n1, n2] = self.dims;
        let slab = n1 * n2;
        let work = |(i, chunk): (usize, &mut [Complex64])| self.apply_slab(i, u, chunk);
        if u.len() >= 1 << 14 {
            out.par_chunks_mut(slab).enumerate().for_each(work);
        } else {
            out.chunks_mut(slab).enumerate().for_each(work);
        }
    }

    fn apply_slab(&self, i: usize, u: &[Complex64], out: &mut [Complex64]) {
        let [n0, n1, n2] = self.dims;
        let slab = n1 * n2;
        let [s0, s1, s2] = &self.stencils;
        let base = i * slab;
        let (l0, c0, u0) = if n0 > 1 {
            (s0.lower[i], s0.center[i], s0.upper[i])
        } else {
            (ZERO, ZERO, ZERO)
        };
        for j in 0..n1 {
            let (l1, c1, u1) = if n1 > 1 {
                (s1.lower[j], s1.center[j], s1.upper[j])
            } else {
                (ZERO, ZERO, ZERO)
            };
            let row = base + j * n2;
            for k in 0..n2 {
                let idx = row + k;
                let v = u[idx];
                let mut lap = (c0 + c1 + s2.center[k]) * v;
                if i > 0 {
                    lap += l0 * u[idx - slab];
                }
                if i + 1 < n0 {
                    lap += u0 * u[idx + slab];
                }
                if j > 0 {
                    lap += l1 * u[idx - n2];
                }
                if j + 1 < n1 {
                    lap += u1 * u[idx + n2];
                }
                if k > 0 {
                    lap += s2.lower[k] * u[idx - 1];
                }
                if k + 1 < n2 {
                    lap += s2.upper[k] * u[idx + 1];
                }
                out[idx - base] = -lap - self.k2[idx] * v;
            }
        }
    }

    pub fn apply(&self, u: &Field) -> Result<Field> {
        u.check_shape(&self.shape)?;
        let mut out = Field::zeros(&self.shape);
        self.apply_into(u.as_slice(), out.as_mut_slice());
        Ok(out)
    }

    /// `r = f - A u`.
    pub fn residual_into(&self, u: &[Complex64], f: &[Complex64], r: &mut [Complex64]) {
        self.apply_into(u, r);
        for (ri, fi) in r.iter_mut().zip(f) {
            *ri = fi - *ri;
        }
    }

    pub fn residual(&self, u: &Field, f: &Field) -> Result<Field> {
        u.check_shape(&self.shape)?;
        f.check_shape(&self.shape)?;
        let mut r = Field::zeros(&self.shape);
        self.residual_into(u.as_slice(), f.as_slice(), r.as_mut_slice());
        Ok(r)
    }

    /// Non-zero entries `(column, value)` of matrix row `row`.
    pub fn row_entries(&self, row: usize, out: &mut Vec<(usize, Complex64)>) {
        out.clear();
        let [_, n1, n2] = self.dims;
        let i = row / (n1 * n2);
        let j = (row / n2) % n1;
        let k = row % n2;
        let idx = [i, j, k];
        let strides = [n1 * n2, n2, 1];
        for ax in 0..3 {
            if self.dims[ax] == 1 {
                continue;
            }
            let p = idx[ax];
            let s = &self.stencils[ax];
            if p > 0 {
                out.push((row - strides[ax], -s.lower[p]));
            }
        }
        out.push((row, self.diag[row]));
        for ax in 0..3 {
            if self.dims[ax] == 1 {
                continue;
            }
            let p = idx[ax];
            let s = &self.stencils[ax];
            if p + 1 < self.dims[ax] {
                out.push((row + strides[ax], -s.upper[p]));
            }
        }
        out.sort_by_key(|e| e.0);
    }

    /// Row-major dense matrix, for small systems only.
    pub fn assemble_dense(&self) -> Vec<Complex64> {
        let n = self.len();
        let mut a = vec![ZERO; n * n];
        let mut entries = Vec::new();
        for r in 0..n {
            self.row_entries(r, &mut entries);
            for &(c, v) in &entries {
                a[r * n + c] = v;
            }
        }
        a
    }

    /// Half-bandwidth of the matrix in lexicographic ordering.
    pub fn bandwidth(&self) -> usize {
        let [n0, n1, n2] = self.dims;
        if n0 > 1 {
            n1 * n2
        } else if n1 > 1 {
            n2
        } else {
            1
        }
    }
}

/// The complex shift `(α, β) = (cos 2γ, sin 2γ)` that makes a rotated-grid
/// operator, multiplied by `e^{2iγ}`, equal to the shifted Laplacian on the
/// real grid.
pub fn csl_shift_of(op: &StencilOperator) -> Result<(f64, f64)> {
    let gamma = op
        .grid()
        .gamma()
        .ok_or_else(|| Error::Unsupported("complex shift is only defined for rotated grids".into()))?;
    Ok(((2.0 * gamma).cos(), (2.0 * gamma).sin()))
}
