//! Eigenvalues of the discretized one-body Hamiltonian on real and complex
//! contours, and the Kronecker-sum estimate of the two-body spectrum.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Contour1D;
use crate::operator::AxisStencil;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest matrix the dense QR iteration accepts.
pub const MAX_QR_SIZE: usize = 1024;

/// Tridiagonal matrix by diagonals; `lower[0]` and `upper[n-1]` are unused.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<Complex64>,
    pub diag: Vec<Complex64>,
    pub upper: Vec<Complex64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `T - s I`.
    pub fn shifted(&self, s: f64) -> Self {
        Self {
            diag: self.diag.iter().map(|d| d - s).collect(),
            ..self.clone()
        }
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let n = self.len();
        let mut a = vec![ZERO; n * n];
        for i in 0..n {
            a[i * n + i] = self.diag[i];
            if i > 0 {
                a[i * n + i - 1] = self.lower[i];
            }
            if i + 1 < n {
                a[i * n + i + 1] = self.upper[i];
            }
        }
        a
    }
}

/// `-½ d²/dz² + V(z)` at the interior nodes of `contour`, Dirichlet ends.
pub fn hamiltonian_1d(v: &dyn Fn(Complex64) -> Complex64, contour: &Contour1D) -> Tridiagonal {
    let st = AxisStencil::from_contour(contour);
    let z = contour.interior_nodes();
    Tridiagonal {
        lower: st.lower.iter().map(|c| -0.5 * c).collect(),
        diag: st.center.iter().zip(z).map(|(c, &z)| -0.5 * c + v(z)).collect(),
        upper: st.upper.iter().map(|c| -0.5 * c).collect(),
    }
}

/// Eigenvalues of an upper Hessenberg matrix (row-major, overwritten) by
/// single-shift complex QR with Wilkinson shifts and deflation.
pub fn hessenberg_eigenvalues(a: &mut [Complex64], n: usize) -> Result<Vec<Complex64>> {
    if a.len() != n * n {
        return Err(Error::ShapeMismatch {
            expected: vec![n, n],
            got: vec![a.len()],
        });
    }
    let idx = |i: usize, j: usize| i * n + j;
    let mut eig = Vec::with_capacity(n);
    if n == 0 {
        return Ok(eig);
    }
    let mut hi = n - 1;
    let mut iter = 0usize;
    let max_iter = 30 * n.max(10);
    let mut total = 0usize;
    let mut rot = Vec::with_capacity(n);
    loop {
        if hi == 0 {
            eig.push(a[idx(0, 0)]);
            break;
        }
        let mut lo = hi;
        while lo > 0 {
            let s = a[idx(lo, lo)].norm() + a[idx(lo - 1, lo - 1)].norm();
            let s = if s == 0.0 { 1.0 } else { s };
            if a[idx(lo, lo - 1)].norm() <= f64::EPSILON * s {
                a[idx(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig.push(a[idx(hi, hi)]);
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > max_iter {
            return Err(Error::NoConvergence(format!(
                "QR iteration stalled with {} eigenvalues left",
                hi + 1
            )));
        }
        let (p, q, r, s) = (
            a[idx(hi - 1, hi - 1)],
            a[idx(hi - 1, hi)],
            a[idx(hi, hi - 1)],
            a[idx(hi, hi)],
        );
        let mu = if iter % 11 == 10 {
            // exceptional shift
            s + r.norm() * 0.75
        } else {
            let half = (p + s) * 0.5;
            let disc = ((p - s) * (p - s) * 0.25 + q * r).sqrt();
            let (m1, m2) = (half + disc, half - disc);
            if (m1 - s).norm() < (m2 - s).norm() {
                m1
            } else {
                m2
            }
        };
        for k in lo..=hi {
            a[idx(k, k)] -= mu;
        }
        rot.clear();
        for k in lo..hi {
            let x = a[idx(k, k)];
            let y = a[idx(k + 1, k)];
            let nrm = x.norm().hypot(y.norm());
            let (c, sn) = if nrm == 0.0 {
                (Complex64::new(1.0, 0.0), ZERO)
            } else {
                (x / nrm, y / nrm)
            };
            for j in k..=hi {
                let u = a[idx(k, j)];
                let w = a[idx(k + 1, j)];
                a[idx(k, j)] = c.conj() * u + sn.conj() * w;
                a[idx(k + 1, j)] = -sn * u + c * w;
            }
            rot.push((c, sn));
        }
        for (off, &(c, sn)) in rot.iter().enumerate() {
            let k = lo + off;
            for i in lo..=(k + 1).min(hi) {
                let u = a[idx(i, k)];
                let w = a[idx(i, k + 1)];
                a[idx(i, k)] = u * c + w * sn;
                a[idx(i, k + 1)] = -u * sn.conj() + w * c.conj();
            }
        }
        for k in lo..=hi {
            a[idx(k, k)] += mu;
        }
    }
    Ok(eig)
}

fn sort_by_real(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Eigenvalues of a tridiagonal matrix, sorted by real part.
pub fn tridiagonal_eigenvalues(t: &Tridiagonal) -> Result<Vec<Complex64>> {
    let n = t.len();
    if n > MAX_QR_SIZE {
        return Err(Error::TooLarge {
            unknowns: n,
            limit: MAX_QR_SIZE,
        });
    }
    let mut a = t.to_dense();
    let mut e = hessenberg_eigenvalues(&mut a, n)?;
    sort_by_real(&mut e);
    Ok(e)
}

/// Eigenvalues of `-½ d²/dz² + V` discretized along `contour`, sorted by
/// real part.
pub fn eig_hamiltonian_1d(v: &dyn Fn(Complex64) -> Complex64, contour: &Contour1D) -> Result<Vec<Complex64>> {
    tridiagonal_eigenvalues(&hamiltonian_1d(v, contour))
}

/// All sums `λ_i + λ_j`, with coincident values (within 1e-12) merged.
pub fn kronecker_2d_spectrum(eigs: &[Complex64]) -> Result<Vec<Complex64>> {
    if eigs.is_empty() {
        return Err(Error::Domain("empty eigenvalue list".into()));
    }
    let mut out = Vec::with_capacity(eigs.len() * (eigs.len() + 1) / 2);
    for i in 0..eigs.len() {
        for j in i..eigs.len() {
            out.push(eigs[i] + eigs[j]);
        }
    }
    sort_by_real(&mut out);
    let mut dedup: Vec<Complex64> = Vec::with_capacity(out.len());
    for z in out {
        let dup = dedup
            .iter()
            .rev()
            .take_while(|d| z.re - d.re <= 1e-12)
            .any(|d| (z - d).norm() <= 1e-12);
        if !dup {
            dedup.push(z);
        }
    }
    Ok(dedup)
}

/// Median argument of the eigenvalues with positive real part: the
/// direction of the rotated continuum branch.
pub fn branch_argument(eigs: &[Complex64]) -> Option<f64> {
    let mut args: Vec<f64> = eigs.iter().filter(|z| z.re > 0.0).map(|z| z.arg()).collect();
    if args.is_empty() {
        return None;
    }
    args.sort_by(f64::total_cmp);
    let m = args.len();
    Some(if m % 2 == 1 {
        args[m / 2]
    } else {
        0.5 * (args[m / 2 - 1] + args[m / 2])
    })
}

/// `re_lambda,im_lambda,tag` rows.
pub fn spectrum_csv(sets: &[(&str, &[Complex64])]) -> String {
    let mut s = String::from("re_lambda,im_lambda,tag\n");
    for (tag, values) in sets {
        for z in values.iter() {
            let _ = writeln!(s, "{:.15e},{:.15e},{}", z.re, z.im, tag);
        }
    }
    s
}
