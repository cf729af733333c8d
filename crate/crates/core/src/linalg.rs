//! Dense and banded LU factorizations and restarted (flexible) GMRES.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{dot, norm};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// LU factorization with partial pivoting of a dense row-major matrix.
#[derive(Clone, Debug)]
pub struct DenseLu {
    n: usize,
    lu: Vec<Complex64>,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn factor(n: usize, mut a: Vec<Complex64>) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i * n + k].norm().total_cmp(&a[j * n + k].norm()))
                .unwrap();
            if a[p * n + k].norm() == 0.0 {
                return Err(Error::Singular(k));
            }
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let m = a[i * n + k] / pivot;
                a[i * n + k] = m;
                if m != ZERO {
                    for c in k + 1..n {
                        let t = a[k * n + c];
                        a[i * n + c] -= m * t;
                    }
                }
            }
        }
        Ok(Self { n, lu: a, perm })
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: Complex64 = (0..i).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: Complex64 = (i + 1..n).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }
}

/// Banded LU with partial pivoting (the LAPACK `gbtrf` scheme). Row pivoting
/// widens the upper band from `ku` to `kl + ku`.
#[derive(Clone, Debug)]
pub struct BandLu {
    n: usize,
    kl: usize,
    /// Upper bandwidth of U after pivoting.
    ku: usize,
    /// `ab[i * width + (j + kl - i)]` holds entry (i, j) for `i - kl <= j <= i + ku`.
    ab: Vec<Complex64>,
    width: usize,
    pivots: Vec<usize>,
}

impl BandLu {
    /// `entries(row, push)` must emit every non-zero `(col, value)` of `row`;
    /// columns must lie within `kl` of the diagonal.
    pub fn factor(
        n: usize,
        kl: usize,
        mut entries: impl FnMut(usize, &mut Vec<(usize, Complex64)>),
    ) -> Result<Self> {
        let ku = 2 * kl;
        let width = kl + ku + 1;
        let mut ab = vec![ZERO; n * width];
        let mut row = Vec::new();
        for i in 0..n {
            entries(i, &mut row);
            for &(j, v) in &row {
                assert!(j + kl >= i && j <= i + kl, "entry outside band");
                ab[i * width + (j + kl - i)] += v;
            }
        }
        let at = |i: usize, j: usize| i * width + (j + kl - i);
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = ab[at(k, k)].norm();
            for i in k + 1..=last {
                let v = ab[at(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(Error::Singular(k));
            }
            pivots[k] = p;
            let cmax = (k + ku).min(n - 1);
            if p != k {
                for j in k..=cmax {
                    ab.swap(at(k, j), at(p, j));
                }
            }
            let pivot = ab[at(k, k)];
            for i in k + 1..=last {
                let m = ab[at(i, k)] / pivot;
                ab[at(i, k)] = m;
                if m == ZERO {
                    continue;
                }
                for j in k + 1..=cmax {
                    let t = ab[at(k, j)];
                    if t != ZERO {
                        ab[at(i, j)] -= m * t;
                    }
                }
            }
        }
        Ok(Self {
            n,
            kl,
            ku,
            ab,
            width,
            pivots,
        })
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let (n, kl, ku, w) = (self.n, self.kl, self.ku, self.width);
        let at = |i: usize, j: usize| i * w + (j + kl - i);
        let mut x = b.to_vec();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk != ZERO {
                for i in k + 1..=(k + kl).min(n - 1) {
                    x[i] -= self.ab[at(i, k)] * xk;
                }
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..=(i + ku).min(n - 1) {
                s -= self.ab[at(i, j)] * x[j];
            }
            x[i] = s / self.ab[at(i, i)];
        }
        x
    }

    /// Bytes needed to factor an `n`-unknown system with half-bandwidth `kl`.
    pub fn memory_bytes(n: usize, kl: usize) -> usize {
        n * (3 * kl + 1) * std::mem::size_of::<Complex64>()
    }
}

/// Outcome of a (flexible) GMRES run.
#[derive(Clone, Debug, PartialEq)]
pub struct GmresOutcome {
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub breakdown: bool,
}

/// One restart cycle of at most `m` Arnoldi steps for `A x = b`, started from
/// the current `x`, minimizing the 2-norm of the residual with conjugated
/// inner products. `precond` is applied on the right and may change between
/// steps (flexible variant); pass `None` for plain GMRES.
///
/// Returns the number of Krylov steps taken and the estimated final residual
/// norm. Stops early when the residual estimate drops below `abs_tol`.
pub fn gmres_cycle(
    apply: &mut dyn FnMut(&[Complex64], &mut [Complex64]),
    mut precond: Option<&mut dyn FnMut(&[Complex64], &mut [Complex64])>,
    b: &[Complex64],
    x: &mut [Complex64],
    m: usize,
    abs_tol: f64,
) -> (usize, f64) {
    let n = b.len();
    let mut r = vec![ZERO; n];
    apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let beta = norm(&r);
    if beta == 0.0 || beta <= abs_tol {
        return (0, beta);
    }
    let mut v: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
    let mut z: Vec<Vec<Complex64>> = Vec::new();
    v.push(r.iter().map(|c| c / beta).collect());
    let mut h = vec![vec![ZERO; m]; m + 1];
    let mut cs = vec![ZERO; m];
    let mut sn = vec![ZERO; m];
    let mut g = vec![ZERO; m + 1];
    g[0] = Complex64::new(beta, 0.0);
    let mut steps = 0;
    let mut res = beta;
    for j in 0..m {
        let mut w = vec![ZERO; n];
        match precond.as_mut() {
            Some(p) => {
                let mut zj = vec![ZERO; n];
                p(&v[j], &mut zj);
                apply(&zj, &mut w);
                z.push(zj);
            }
            None => apply(&v[j], &mut w),
        }
        for i in 0..=j {
            let hij = dot(&v[i], &w);
            h[i][j] = hij;
            for (wk, vk) in w.iter_mut().zip(&v[i]) {
                *wk -= hij * vk;
            }
        }
        let wn = norm(&w);
        h[j + 1][j] = Complex64::new(wn, 0.0);
        for i in 0..j {
            let t = cs[i].conj() * h[i][j] + sn[i].conj() * h[i + 1][j];
            h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
            h[i][j] = t;
        }
        let (c, s) = givens(h[j][j], h[j + 1][j]);
        cs[j] = c;
        sn[j] = s;
        h[j][j] = c.conj() * h[j][j] + s.conj() * h[j + 1][j];
        h[j + 1][j] = ZERO;
        g[j + 1] = -s * g[j];
        g[j] = c.conj() * g[j];
        steps = j + 1;
        res = g[j + 1].norm();
        if wn <= 1e-14 * beta || res <= abs_tol {
            break;
        }
        v.push(w.iter().map(|c| c / wn).collect());
    }
    // back substitution on the triangular Hessenberg part
    let mut y = vec![ZERO; steps];
    for i in (0..steps).rev() {
        let mut s = g[i];
        for k in i + 1..steps {
            s -= h[i][k] * y[k];
        }
        y[i] = s / h[i][i];
    }
    let basis = if precond.is_some() { &z } else { &v };
    for (yi, vi) in y.iter().zip(basis) {
        for (xk, vk) in x.iter_mut().zip(vi) {
            *xk += yi * vk;
        }
    }
    (steps, res)
}

/// Complex Givens rotation `(c, s)` with real `c` that zeroes `b` in `(a, b)`
/// under `[c̄ s̄; -s c]`.
fn givens(a: Complex64, b: Complex64) -> (Complex64, Complex64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (Complex64::new(1.0, 0.0), ZERO);
    }
    if an == 0.0 {
        return (ZERO, Complex64::new(1.0, 0.0));
    }
    let r = an.hypot(bn);
    let c = Complex64::new(an / r, 0.0);
    let s = (a / an) * b.conj() / r;
    (c, s.conj())
}

/// Restarted flexible GMRES(`restart`) for `A x = b`, right preconditioned.
pub fn fgmres(
    apply: &mut dyn FnMut(&[Complex64], &mut [Complex64]),
    mut precond: Option<&mut dyn FnMut(&[Complex64], &mut [Complex64])>,
    b: &[Complex64],
    x: &mut [Complex64],
    restart: usize,
    max_iters: usize,
    rel_tol: f64,
) -> GmresOutcome {
    let mut r = vec![ZERO; b.len()];
    apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let r0 = norm(&r);
    let mut history = vec![r0];
    let target = rel_tol * norm(b).max(f64::MIN_POSITIVE);
    if r0 <= target {
        return GmresOutcome {
            iterations: 0,
            residual_history: history,
            converged: true,
            breakdown: false,
        };
    }
    let mut iters = 0;
    while iters < max_iters {
        let m = restart.min(max_iters - iters);
        let p = precond.as_mut().map(|p| &mut **p as &mut dyn FnMut(&[Complex64], &mut [Complex64]));
        let (steps, _) = gmres_cycle(apply, p, b, x, m, target);
        iters += steps.max(1);
        apply(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let rn = norm(&r);
        history.push(rn);
        if !rn.is_finite() {
            return GmresOutcome {
                iterations: iters,
                residual_history: history,
                converged: false,
                breakdown: true,
            };
        }
        if rn <= target {
            return GmresOutcome {
                iterations: iters,
                residual_history: history,
                converged: true,
                breakdown: false,
            };
        }
        if steps == 0 {
            return GmresOutcome {
                iterations: iters,
                residual_history: history,
                converged: false,
                breakdown: true,
            };
        }
    }
    GmresOutcome {
        iterations: iters,
        residual_history: history,
        converged: false,
        breakdown: false,
    }
}
