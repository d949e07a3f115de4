//! Numerical quadrature: adaptive Simpson and Gauss-Legendre rules.
//!
//! These serve as independent oracles for the closed-form integrals and as
//! the fallback path for arbitrary callables.

use crate::linalg::C64;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes from Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// `int_a^b f` with `panels` equal sub-intervals.
    pub fn integrate<T, F>(&self, a: f64, b: f64, panels: usize, f: F) -> T
    where
        T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
        F: Fn(f64) -> T,
    {
        let h = (b - a) / panels as f64;
        let mut acc = T::default();
        for p in 0..panels {
            let lo = a + h * p as f64;
            let mid = lo + 0.5 * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                acc = acc + f(mid + 0.5 * h * x) * (0.5 * h * w);
            }
        }
        acc
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Adaptive Simpson on complex integrands, started from `panels` equal
/// sub-intervals, each refined until the Richardson estimate is below `tol`
/// (shared proportionally between panels).
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, panels: usize, tol: f64) -> C64
where
    F: Fn(f64) -> C64,
{
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let local_tol = tol / panels as f64;
    let mut total = C64::new(0.0, 0.0);
    for p in 0..panels {
        let lo = a + h * p as f64;
        let hi = lo + h;
        let flo = f(lo);
        let fhi = f(hi);
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        let whole = (flo + fmid * 4.0 + fhi) * (h / 6.0);
        total += simpson_rec(&f, lo, hi, flo, fmid, fhi, whole, local_tol, 50);
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: C64,
    fm: C64,
    fb: C64,
    whole: C64,
    tol: f64,
    depth: u32,
) -> C64
where
    F: Fn(f64) -> C64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (fa + flm * 4.0 + fm) * ((m - a) / 6.0);
    let right = (fm + frm * 4.0 + fb) * ((b - m) / 6.0);
    let diff = left + right - whole;
    if depth == 0 || diff.norm() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let gl = GaussLegendre::new(8);
        for p in 0..16 {
            let got: f64 = gl.integrate(-1.0, 1.0, 1, |x| x.powi(p));
            let expect = if p % 2 == 1 {
                0.0
            } else {
                2.0 / (p as f64 + 1.0)
            };
            assert!((got - expect).abs() < 1e-14, "p={p}");
        }
        let s: f64 = gl.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn large_rule_integrates_oscillatory() {
        let gl = GaussLegendre::new(64);
        let got: f64 = gl.integrate(0.0, std::f64::consts::PI, 4, |x| (7.0 * x).sin());
        assert!((got - 2.0 / 7.0).abs() < 1e-14);
    }

    #[test]
    fn simpson_matches_analytic() {
        let got = adaptive_simpson(|x| C64::new(x.exp(), x.cos()), 0.0, 1.0, 8, 1e-12);
        assert!((got.re - (1f64.exp() - 1.0)).abs() < 1e-11);
        assert!((got.im - 1f64.sin()).abs() < 1e-11);
    }
}
