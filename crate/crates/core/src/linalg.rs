//! Dense complex linear algebra used throughout the crate.
//!
//! Storage and products come from `nalgebra`; the Hermitian eigensolver is a
//! cyclic Jacobi iteration written here so that eigenvector phases and the
//! stopping rule are under our control.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `i^k` for any integer `k`, without floating point powers.
#[inline]
pub fn i_pow(k: i64) -> C64 {
    match k.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Frobenius norm `sqrt(trace(M^dagger M))`.
pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest absolute entry.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Returns `(M + M^dagger)/2` and the Frobenius norm of `M - M^dagger`.
pub fn hermitian_part(m: &CMatrix) -> (CMatrix, f64) {
    let adj = m.adjoint();
    let asym = frobenius(&(m - &adj));
    ((m + adj) * c(0.5), asym)
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Eigen-decomposition of a Hermitian matrix: `A = V diag(values) V^dagger`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: CMatrix,
    pub sweeps: usize,
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi diagonalization of a Hermitian matrix.
///
/// Iterates full sweeps over the upper triangle until the off-diagonal
/// Frobenius norm drops below `1e-14 * ||A||`. Each rotation first removes the
/// phase of the pivot so the 2x2 problem is real symmetric.
pub fn jacobi_eigh(a: &CMatrix) -> Result<HermitianEigen> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::InvalidParameter(format!(
            "eigensolver needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    if !is_finite(a) {
        return Err(Error::NumericalFailure("non-finite matrix entry".into()));
    }
    let (mut m, _) = hermitian_part(a);
    let mut v = CMatrix::identity(n, n);
    let scale = frobenius(&m).max(f64::MIN_POSITIVE);
    let tol = 1e-14 * scale;

    let off = |m: &CMatrix| -> f64 {
        let mut s = 0.0;
        for j in 0..n {
            for i in 0..n {
                if i != j {
                    s += m[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off(&m) >= tol {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NumericalFailure(format!(
                "Jacobi iteration did not converge in {MAX_SWEEPS} sweeps (off-diagonal norm {:e})",
                off(&m)
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let g = m[(p, q)];
                let g_abs = g.norm();
                if g_abs <= f64::MIN_POSITIVE || g_abs < 1e-18 * scale {
                    m[(p, q)] = C64::new(0.0, 0.0);
                    m[(q, p)] = C64::new(0.0, 0.0);
                    continue;
                }
                let phase = g / g_abs;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let theta = (aqq - app) / (2.0 * g_abs);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                // J restricted to (p, q): [[c, s], [-s e^{-i phi}, c e^{-i phi}]]
                let jpp = c(cs);
                let jpq = c(sn);
                let jqp = -phase.conj() * sn;
                let jqq = phase.conj() * cs;
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = akp * jpp + akq * jqp;
                    m[(k, q)] = akp * jpq + akq * jqq;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
                    m[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
                }
                m[(p, q)] = C64::new(0.0, 0.0);
                m[(q, p)] = C64::new(0.0, 0.0);
                m[(p, p)] = c(m[(p, p)].re);
                m[(q, q)] = c(m[(q, q)].re);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * jpp + vkq * jqp;
                    v[(k, q)] = vkp * jpq + vkq * jqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |r, k| v[(r, order[k])]);
    Ok(HermitianEigen {
        values,
        vectors,
        sweeps,
    })
}

/// `V diag(f(values)) V^dagger`.
pub fn spectral_function(vectors: &CMatrix, values: &[f64], f: impl Fn(f64) -> f64) -> CMatrix {
    let n = vectors.nrows();
    let mut scaled = vectors.clone();
    for (k, &lam) in values.iter().enumerate() {
        let w = f(lam);
        for r in 0..n {
            scaled[(r, k)] *= w;
        }
    }
    let out = scaled * vectors.adjoint();
    hermitian_part(&out).0
}

pub fn diag(values: &[C64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(values))
}

pub fn real_diag(values: &[f64]) -> CMatrix {
    CMatrix::from_fn(values.len(), values.len(), |i, j| {
        if i == j {
            c(values[i])
        } else {
            C64::new(0.0, 0.0)
        }
    })
}
