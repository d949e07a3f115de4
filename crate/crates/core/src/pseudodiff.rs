//! Position-space expansion of the Hermitian Hamiltonian as a power series in
//! the momentum, `h ~ p^2 + v + sum_l delta_l(x) p^l`, and the classical
//! Hamiltonian read off from it.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{c, i_pow, CMatrix, C64};
use crate::metric::MetricDecomposition;
use crate::trig::mu;

/// A function `sum_{m,p} [S_mp sin(k_m u) + C_mp cos(k_m u)] u^p` of
/// `u = x + 1`, with `k_m = pi m / 2`.
///
/// Closed under differentiation, which is what the Hermiticity conditions
/// need. Row `m = 0` carries plain polynomials through its cosine part.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffSeries {
    pub ell: usize,
    pub sin: CMatrix,
    pub cos: CMatrix,
}

impl CoeffSeries {
    /// Frequencies `0..=max_m`, powers `0..=max_power`.
    pub fn zeros(ell: usize, max_m: usize, max_power: usize) -> Self {
        Self {
            ell,
            sin: CMatrix::zeros(max_m + 1, max_power + 1),
            cos: CMatrix::zeros(max_m + 1, max_power + 1),
        }
    }

    /// `sum_{m>=1, k<=ell} coeff[(m-1, k)] sin(k_m u) u^{ell-k}`.
    pub fn from_coeffs(ell: usize, coeff: &CMatrix) -> Self {
        let mut s = Self::zeros(ell, coeff.nrows(), ell);
        for m in 0..coeff.nrows() {
            for k in 0..=ell.min(coeff.ncols() - 1) {
                s.sin[(m + 1, ell - k)] = coeff[(m, k)];
            }
        }
        s
    }

    /// The polynomial `u^p`.
    pub fn monomial(p: usize) -> Self {
        let mut s = Self::zeros(p, 0, p);
        s.cos[(0, p)] = c(1.0);
        s
    }

    /// The reference eigenfunction `<x|m> = i^{mu_m} sin(k_m u)`.
    pub fn basis_function(m: usize) -> Self {
        let mut s = Self::zeros(0, m, 0);
        s.sin[(m, 0)] = i_pow(mu(m));
        s
    }

    pub fn max_m(&self) -> usize {
        self.sin.nrows() - 1
    }

    pub fn max_power(&self) -> usize {
        self.sin.ncols() - 1
    }

    /// Coefficient of `sin(k_m u) u^{ell-k}` in the defining representation.
    pub fn coeff(&self, m: usize, k: usize) -> C64 {
        if m > self.max_m() || k > self.ell || self.ell - k > self.max_power() {
            return c(0.0);
        }
        self.sin[(m, self.ell - k)]
    }

    pub fn eval(&self, x: f64) -> C64 {
        let u = x + 1.0;
        let np = self.max_power() + 1;
        let mut powers = vec![1.0; np];
        for p in 1..np {
            powers[p] = powers[p - 1] * u;
        }
        let mut acc = c(0.0);
        for m in 0..=self.max_m() {
            let (s, co) = (PI * m as f64 / 2.0 * u).sin_cos();
            let mut poly_s = c(0.0);
            let mut poly_c = c(0.0);
            for p in 0..np {
                poly_s += self.sin[(m, p)] * powers[p];
                poly_c += self.cos[(m, p)] * powers[p];
            }
            acc += poly_s * s + poly_c * co;
        }
        acc
    }

    /// Exact first derivative.
    pub fn derivative(&self) -> Self {
        let mut d = Self::zeros(self.ell, self.max_m(), self.max_power());
        for m in 0..=self.max_m() {
            let k = PI * m as f64 / 2.0;
            for p in 0..=self.max_power() {
                let s = self.sin[(m, p)];
                let co = self.cos[(m, p)];
                // d/du [sin(ku) u^p] = k cos(ku) u^p + p sin(ku) u^{p-1}
                d.cos[(m, p)] += s * k;
                d.sin[(m, p)] -= co * k;
                if p > 0 {
                    d.sin[(m, p - 1)] += s * p as f64;
                    d.cos[(m, p - 1)] += co * p as f64;
                }
            }
        }
        d
    }

    pub fn nth_derivative(&self, order: usize) -> Self {
        let mut d = self.clone();
        for _ in 0..order {
            d = d.derivative();
        }
        d
    }

    fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            ell: self.ell,
            sin: self.sin.map(&f),
            cos: self.cos.map(&f),
        }
    }

    /// Real part, taken coefficient-wise (the basis functions are real).
    pub fn re(&self) -> Self {
        self.map(|z| c(z.re))
    }

    pub fn im(&self) -> Self {
        self.map(|z| c(z.im))
    }

    pub fn scale(&self, a: C64) -> Self {
        self.map(|z| z * a)
    }

    /// Sum, padding to the larger shape.
    pub fn add(&self, other: &Self) -> Self {
        let mm = self.max_m().max(other.max_m());
        let mp = self.max_power().max(other.max_power());
        let mut out = Self::zeros(self.ell.max(other.ell), mm, mp);
        for src in [self, other] {
            for m in 0..=src.max_m() {
                for p in 0..=src.max_power() {
                    out.sin[(m, p)] += src.sin[(m, p)];
                    out.cos[(m, p)] += src.cos[(m, p)];
                }
            }
        }
        out
    }

    /// Product with `u^q`.
    pub fn mul_u_power(&self, q: usize) -> Self {
        let mut out = Self::zeros(self.ell, self.max_m(), self.max_power() + q);
        for m in 0..=self.max_m() {
            for p in 0..=self.max_power() {
                out.sin[(m, p + q)] = self.sin[(m, p)];
                out.cos[(m, p + q)] = self.cos[(m, p)];
            }
        }
        out
    }

    /// Floating-point error scale of [`eval`](Self::eval): `eps` times the
    /// sum of term magnitudes at `u = 2`. The polynomial form cancels
    /// heavily at high order, so this can exceed the true value.
    pub fn roundoff(&self) -> f64 {
        let mut s = 0.0;
        for m in 0..=self.max_m() {
            for p in 0..=self.max_power() {
                s += (self.sin[(m, p)].norm() + self.cos[(m, p)].norm()) * 2f64.powi(p as i32);
            }
        }
        f64::EPSILON * s
    }

    pub fn is_zero(&self) -> bool {
        self.sin.iter().chain(self.cos.iter()).all(|z| *z == c(0.0))
    }

    /// `max |f(x)|` over `points` uniform nodes of `[-1, 1]`.
    pub fn max_abs(&self, points: usize) -> f64 {
        grid(points)
            .into_iter()
            .map(|x| self.eval(x).norm())
            .fold(0.0, f64::max)
    }
}

/// `points` uniform nodes on `[-1, 1]`, endpoints included.
pub fn grid(points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![0.0];
    }
    (0..points)
        .map(|i| -1.0 + 2.0 * i as f64 / (points - 1) as f64)
        .collect()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut b = 1.0;
    for i in 0..k {
        b = b * (n - i) as f64 / (i + 1) as f64;
    }
    b
}

/// `a_{n j l}`: `P_{n l}(x) = sum_j a_{n j l} (x+1)^{l-j}` where
/// `P_{n l}(x) = (1/l!) int_{-1}^{1} sin[pi n (x'+1)/2] (x' - x)^l dx'`.
pub fn moment_coeff(n: usize, j: usize, ell: usize) -> f64 {
    assert!(j <= ell, "moment_coeff needs j <= ell");
    let pin = PI * n as f64;
    let sgn = |e: usize| if e % 2 == 0 { 1.0 } else { -1.0 };
    let mut sum = 0.0;
    for k in 0..=j / 2 {
        sum += sgn(j + n + k + 1) / (pin.powi(2 * k as i32 + 1) * factorial(j - 2 * k));
    }
    if j % 2 == 0 {
        sum += sgn(j / 2) / pin.powi(j as i32 + 1);
    }
    sgn(ell) * 2f64.powi(j as i32 + 1) / factorial(ell - j) * sum
}

/// `P_{n l}(x)` from its polynomial form.
pub fn cal_p(n: usize, ell: usize, x: f64) -> f64 {
    let u = x + 1.0;
    (0..=ell)
        .map(|j| moment_coeff(n, j, ell) * u.powi((ell - j) as i32))
        .sum()
}

/// `dH = E^{1/2} H0 E^{-1/2} - H0` on the block and
/// `Delta_mn = i^{mu_m - mu_n} dH_mn`.
pub fn delta_h_matrix(h0_block: &CMatrix, dec: &MetricDecomposition) -> (CMatrix, CMatrix) {
    let q = &dec.e_half * h0_block * &dec.e_minus_half;
    let dh = q - h0_block;
    let delta = CMatrix::from_fn(dh.nrows(), dh.ncols(), |i, j| {
        dh[(i, j)] * i_pow(mu(i + 1) - mu(j + 1))
    });
    (dh, delta)
}

/// Which bare operator the expansion corrects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseOperator {
    /// `-d^2/dx^2 + v(x)`.
    KineticPlusPotential,
    /// A bare observable such as `x`.
    Observable,
}

/// `sum_l f_l(x) d^l/dx^l` with `f_l` stored as [`CoeffSeries`].
///
/// `series[l]` holds the coefficient of `d^l/dx^l`; the coefficient of `p^l`
/// is `i^l` times it.
#[derive(Debug, Clone)]
pub struct PseudoDiffOp {
    pub base: BaseOperator,
    pub series: Vec<CoeffSeries>,
    /// `M` in `max |f_l| <= M 2^l / l!`.
    pub bound_m: f64,
    /// Non-Hermiticity parameter of the underlying model.
    pub z: f64,
}

/// Grid used to certify the coefficient bound.
pub const BOUND_GRID: usize = 1000;
pub const DEFAULT_ELL_MAX: usize = 12;
/// Required relative size of the last retained order, `2^l/l!`.
pub const TRUNCATION_TOLERANCE: f64 = 1e-5;

impl PseudoDiffOp {
    pub fn ell_max(&self) -> usize {
        self.series.len() - 1
    }

    /// `f_l(x)`; the tilde coefficient.
    pub fn tilde(&self, ell: usize, x: f64) -> C64 {
        self.series[ell].eval(x)
    }

    /// `i^l f_l(x)`, the coefficient of `p^l`.
    pub fn p_coeff(&self, ell: usize, x: f64) -> C64 {
        i_pow(ell as i64) * self.series[ell].eval(x)
    }

    /// `M 2^l / l!`.
    pub fn bound(&self, ell: usize) -> f64 {
        self.bound_m * 2f64.powi(ell as i32) / factorial(ell)
    }

    /// `M sum_{l > ell_max} (2|p|)^l / l!`: bounds the dropped part of the
    /// classical series.
    pub fn tail_bound(&self, ell_max: usize, p: f64) -> f64 {
        let r = 2.0 * p.abs();
        let mut term = r.powi(ell_max as i32 + 1) / factorial(ell_max + 1);
        let mut sum = 0.0;
        let mut l = ell_max + 1;
        while term > 1e-300 && (term > sum * 1e-17 || l < ell_max + 3) {
            sum += term;
            l += 1;
            term *= r / l as f64;
            if l > ell_max + 2000 {
                break;
            }
        }
        self.bound_m * sum
    }
}

/// `delta~_l(x) = sum_{k,m} b_{mkl} sin(k_m u) u^{l-k}` with
/// `b_{mkl} = sum_n Delta_mn a_{nkl}`, for `l = 0..=ell_max`.
pub fn delta_series(delta: &CMatrix, ell_max: usize, z: f64) -> Result<PseudoDiffOp> {
    let rel = 2f64.powi(ell_max as i32) / factorial(ell_max);
    if rel > TRUNCATION_TOLERANCE {
        return Err(Error::TruncationTooCoarse {
            ell_max,
            detail: format!(
                "2^l/l! = {rel:.3e} exceeds {TRUNCATION_TOLERANCE:e}; use ell_max >= {DEFAULT_ELL_MAX}"
            ),
        });
    }
    let op = series_from_kernel(
        delta,
        delta.ncols(),
        ell_max,
        z,
        BaseOperator::KineticPlusPotential,
    );
    let last = op.series[ell_max].max_abs(BOUND_GRID);
    if last > op.bound(ell_max) * (1.0 + 1e-9) + 100.0 * op.series[ell_max].roundoff() {
        return Err(Error::TruncationTooCoarse {
            ell_max,
            detail: format!(
                "max |delta_l| = {last:.3e} violates the bound {:.3e}",
                op.bound(ell_max)
            ),
        });
    }
    Ok(op)
}

/// Kernel `sum_{m,n} K_mn sin_m(x) sin_n(x')` expanded in derivatives.
/// `K` may have more rows than columns.
pub(crate) fn series_from_kernel(
    kernel: &CMatrix,
    cols: usize,
    ell_max: usize,
    z: f64,
    base: BaseOperator,
) -> PseudoDiffOp {
    let rows = kernel.nrows();
    let mut series = Vec::with_capacity(ell_max + 1);
    for ell in 0..=ell_max {
        let a = CMatrix::from_fn(cols, ell + 1, |n, k| c(moment_coeff(n + 1, k, ell)));
        let b = kernel.columns(0, cols) * a;
        debug_assert_eq!(b.nrows(), rows);
        series.push(CoeffSeries::from_coeffs(ell, &b));
    }
    let bound_m = kernel.iter().map(|z| z.norm()).sum();
    PseudoDiffOp {
        base,
        series,
        bound_m,
        z,
    }
}

/// `p^2 + sum_l Re[i^l delta~_l(x)] p^l`, summed through `ell_max`
/// (all stored orders when `None`).
pub fn classical_hamiltonian(
    op: &PseudoDiffOp,
    x: f64,
    p: f64,
    ell_max: Option<usize>,
) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain { x });
    }
    if !p.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "momentum {p} is not finite"
        )));
    }
    let top = ell_max.unwrap_or(op.ell_max()).min(op.ell_max());
    let mut h = p * p;
    let mut pl = 1.0;
    for ell in 0..=top {
        h += op.p_coeff(ell, x).re * pl;
        pl *= p;
    }
    Ok(h)
}

/// Same Hamiltonian in physical units: `p^2/(2m) + sum Re[gamma_l(x)] p^l`
/// with `gamma_l(x) = L^{l-2} delta_l(2x/L) / (m 2^{l-1} hbar^{l-2})`.
pub fn classical_hamiltonian_physical(
    op: &PseudoDiffOp,
    x: f64,
    p: f64,
    units: &crate::squarewell::PhysicalUnits,
) -> Result<f64> {
    let xd = units.x(x);
    if !(-1.0..=1.0).contains(&xd) {
        return Err(Error::Domain { x });
    }
    let (l, m, hb) = (units.length, units.mass, units.hbar);
    let mut h = p * p / (2.0 * m);
    for ell in 0..=op.ell_max() {
        let e = ell as i32;
        let gamma = op.p_coeff(ell, xd) * (l.powi(e - 2) / (m * 2f64.powi(e - 1) * hb.powi(e - 2)));
        h += gamma.re * p.powi(e);
    }
    Ok(h)
}

/// `p^2 + v(x)`; `v` is taken as zero exactly at the junction.
pub fn complex_classical_eval(x: f64, p: f64, z: f64) -> Result<C64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain { x });
    }
    Ok(c(p * p) + potential(x, z))
}

/// `v(x) = +iZ` left of the origin, `-iZ` right of it.
pub fn potential(x: f64, z: f64) -> C64 {
    if x < 0.0 {
        C64::new(0.0, z)
    } else if x > 0.0 {
        C64::new(0.0, -z)
    } else {
        c(0.0)
    }
}

/// `p^l f(x) = sum_k C(l,k) (-i)^k f^{(k)}(x) p^{l-k}`: entry `k` is the
/// coefficient function of `p^{l-k}`.
pub fn commute_p_power(ell: usize, f: &CoeffSeries) -> Vec<CoeffSeries> {
    let mut out = Vec::with_capacity(ell + 1);
    let mut d = f.clone();
    for k in 0..=ell {
        out.push(d.scale(i_pow(-(k as i64)) * binomial(ell, k)));
        d = d.derivative();
    }
    out
}

/// The combinations that must vanish (or match) if `h` is Hermitian,
/// sampled on a grid. Series over `k` stop at `k_max` or at the highest
/// stored order, whichever comes first.
#[derive(Debug, Clone)]
pub struct HermiticityResiduals {
    pub x: Vec<f64>,
    pub u0: Vec<f64>,
    pub w0: Vec<f64>,
    /// `w0 - i v`, the profile compared against the step potential.
    pub w0_minus_iv: Vec<f64>,
    /// `(l, u_{l-} - Re delta~_l, w_{l-})` for odd `l`.
    pub odd: Vec<(usize, Vec<f64>, Vec<f64>)>,
    /// `(l, u_{l+}, w_{l+} - Im delta~_l)` for even `l >= 2`.
    pub even: Vec<(usize, Vec<f64>, Vec<f64>)>,
}

pub fn hermiticity_residuals(
    op: &PseudoDiffOp,
    points: usize,
    k_max: Option<usize>,
) -> HermiticityResiduals {
    let xs = grid(points);
    let lmax = op.ell_max();
    let k_cap = k_max.unwrap_or(usize::MAX);
    let re: Vec<CoeffSeries> = op.series.iter().map(|s| s.re()).collect();
    let im: Vec<CoeffSeries> = op.series.iter().map(|s| s.im()).collect();
    let sgn = |e: usize| if e % 2 == 0 { 1.0 } else { -1.0 };

    // sum_{k=1}^{lmax-l} (-1)^{l+k} C(l+k, k) d^k f_{l+k}
    let tail_sum = |parts: &[CoeffSeries], ell: usize, weighted: bool| -> Option<CoeffSeries> {
        let mut acc: Option<CoeffSeries> = None;
        for k in 1..=lmax.saturating_sub(ell).min(k_cap) {
            let w = if weighted {
                sgn(ell + k) * binomial(ell + k, k)
            } else {
                sgn(k)
            };
            let term = parts[ell + k].nth_derivative(k).scale(c(w));
            acc = Some(match acc {
                Some(a) => a.add(&term),
                None => term,
            });
        }
        acc
    };
    let eval = |s: &Option<CoeffSeries>, x: f64| s.as_ref().map_or(0.0, |s| s.eval(x).re);

    let u0s = tail_sum(&re, 0, false);
    let w0s = tail_sum(&im, 0, false);
    let u0 = xs.iter().map(|&x| eval(&u0s, x)).collect();
    let w0: Vec<f64> = xs
        .iter()
        .map(|&x| im[0].eval(x).re + 0.5 * eval(&w0s, x))
        .collect();
    let w0_minus_iv = xs
        .iter()
        .zip(&w0)
        .map(|(&x, &w)| w - (C64::new(0.0, 1.0) * potential(x, op.z)).re)
        .collect();

    let mut odd = Vec::new();
    let mut even = Vec::new();
    for ell in 1..=lmax {
        let us = tail_sum(&re, ell, true);
        let ws = tail_sum(&im, ell, true);
        if ell % 2 == 1 {
            let u: Vec<f64> = xs
                .iter()
                .map(|&x| 0.5 * eval(&us, x) - re[ell].eval(x).re)
                .collect();
            let w: Vec<f64> = xs.iter().map(|&x| eval(&ws, x)).collect();
            odd.push((ell, u, w));
        } else {
            let u: Vec<f64> = xs.iter().map(|&x| eval(&us, x)).collect();
            let w: Vec<f64> = xs
                .iter()
                .map(|&x| -0.5 * eval(&ws, x) - im[ell].eval(x).re)
                .collect();
            even.push((ell, u, w));
        }
    }
    HermiticityResiduals {
        x: xs,
        u0,
        w0,
        w0_minus_iv,
        odd,
        even,
    }
}

/// `(h^ psi_m^(0))(x)` with `h^ = -d^2/dx^2 + v + sum_l delta~_l d^l/dx^l`.
pub fn apply_to_basis(op: &PseudoDiffOp, m: usize, x: f64) -> C64 {
    let k = PI * m as f64 / 2.0;
    let phase = i_pow(mu(m));
    let arg = k * (x + 1.0);
    let deriv = |l: usize| phase * k.powi(l as i32) * (arg + l as f64 * PI / 2.0).sin();
    let mut out = -deriv(2) + potential(x, op.z) * deriv(0);
    for (l, s) in op.series.iter().enumerate() {
        out += s.eval(x) * deriv(l);
    }
    out
}
