//! Closed-form trigonometric-polynomial integrals on the box `[-1, 1]`.
//!
//! The sine functions `sin[pi q (x+1)/2]` appear everywhere; all their
//! products with powers of `x` reduce to the moments `int u^p e^{i w u} du`.

use std::f64::consts::PI;

use crate::linalg::{c, i_pow, CMatrix, C64};

/// `mu_n = (1 + (-1)^n)/2`: 1 for even `n`, 0 for odd.
#[inline]
pub fn mu(n: usize) -> i64 {
    if n % 2 == 0 {
        1
    } else {
        0
    }
}

/// `sin[pi q (x+1)/2]`.
#[inline]
pub fn sine(q: usize, x: f64) -> f64 {
    (PI * q as f64 * (x + 1.0) / 2.0).sin()
}

/// Hermitian-well eigenfunction `<x|q> = i^{mu_q} sin[pi q (x+1)/2]`.
#[inline]
pub fn basis(q: usize, x: f64) -> C64 {
    i_pow(mu(q)) * sine(q, x)
}

/// `int_a^b u^p e^{i w u} du`, exact.
pub fn moment(p: u32, w: f64, a: f64, b: f64) -> C64 {
    if w == 0.0 {
        let e = p as f64 + 1.0;
        return c((b.powf(e) - a.powf(e)) / e);
    }
    let iw = C64::new(0.0, w);
    let antideriv = |u: f64| -> C64 {
        // e^{iwu} sum_j (-1)^j p!/(p-j)! u^{p-j} / (iw)^{j+1}
        let mut sum = C64::new(0.0, 0.0);
        let mut fall = 1.0;
        let mut denom = iw;
        for j in 0..=p {
            let term = c(fall * u.powi((p - j) as i32)) / denom;
            if j % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
            fall *= (p - j) as f64;
            denom *= iw;
        }
        C64::from_polar(1.0, w * u) * sum
    };
    antideriv(b) - antideriv(a)
}

/// `int_{-1}^{1} x^p sin[pi q (x+1)/2] sin[pi r (x+1)/2] dx` for `q, r >= 1`.
pub fn sine_product_moment(p: u32, q: usize, r: usize) -> f64 {
    // u = x + 1 on [0, 2]; x^p = sum_j C(p,j) u^j (-1)^{p-j};
    // sin a u sin b u = (cos (a-b)u - cos (a+b)u)/2.
    let a = PI * q as f64 / 2.0;
    let b = PI * r as f64 / 2.0;
    let mut total = 0.0;
    let mut binom = 1.0;
    for j in 0..=p {
        let sign = if (p - j) % 2 == 0 { 1.0 } else { -1.0 };
        let cos_part = |w: f64| moment(j, w, 0.0, 2.0).re;
        total += sign * binom * 0.5 * (cos_part(a - b) - cos_part(a + b));
        binom = binom * (p - j) as f64 / (j + 1) as f64;
    }
    total
}

/// Plain sine-basis position matrix entry:
/// `8 q u [(-1)^{q+u} - 1] / (pi^2 (q^2 - u^2)^2)`, zero on the diagonal.
pub fn x_sine_entry(q: usize, u: usize) -> f64 {
    if q == u {
        return 0.0;
    }
    let (qf, uf) = (q as f64, u as f64);
    let parity = if (q + u) % 2 == 0 { 1.0 } else { -1.0 };
    8.0 * qf * uf * (parity - 1.0) / (PI * PI * (qf * qf - uf * uf).powi(2))
}

/// `K x K` matrix of `int x^p sin_q sin_r`, real symmetric.
pub fn sine_power_matrix(p: u32, size: usize) -> CMatrix {
    let mut m = CMatrix::zeros(size, size);
    for q in 1..=size {
        for r in q..=size {
            let v = if p == 1 {
                x_sine_entry(q, r)
            } else {
                sine_product_moment(p, q, r)
            };
            m[(q - 1, r - 1)] = c(v);
            m[(r - 1, q - 1)] = c(v);
        }
    }
    m
}

/// `<m|x^p|n>` in the `|n>` basis: the sine matrix with phases `i^{mu_n - mu_m}`.
pub fn basis_power_matrix(p: u32, size: usize) -> CMatrix {
    let s = sine_power_matrix(p, size);
    CMatrix::from_fn(size, size, |i, j| s[(i, j)] * i_pow(mu(j + 1) - mu(i + 1)))
}
