//! Physical observables: the dressed position operator, position wave
//! functions, probability densities and localized states.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{c, i_pow, CMatrix, CVector, C64};
use crate::metric::{physical_inner_product, MetricDecomposition, StateVector};
use crate::pseudodiff::{grid, series_from_kernel, BaseOperator, PseudoDiffOp};
use crate::quad::GaussLegendre;
use crate::squarewell::nu_n;
use crate::trig::{basis, basis_power_matrix, mu, sine, sine_power_matrix};

/// Correction `O - o = A + B + C` to a bare observable `o`, split by blocks:
/// `A` on the `N` block, `B` from the tail into the block, `C` back out.
#[derive(Debug, Clone)]
pub struct DressedObservable {
    pub label: &'static str,
    pub a: CMatrix,
    /// `N x (T - N)`, columns `n = N+1..=T`.
    pub b: CMatrix,
    /// `(T - N) x N`, rows `m = N+1..=T`.
    pub c: CMatrix,
    /// `omega~_l` for `l = 0..=ell_max`.
    pub omega: PseudoDiffOp,
    /// Basis size `T` at which the tail sum was cut.
    pub tail_used: usize,
}

pub const TAIL_BLOCK: usize = 20;
const TAIL_GRID: usize = 201;

fn dressing_blocks(x0: &CMatrix, dec: &MetricDecomposition) -> (CMatrix, CMatrix, CMatrix) {
    let n = dec.order();
    let t = x0.nrows();
    let id = CMatrix::identity(n, n);
    let xb = x0.view((0, 0), (n, n));
    let a = &dec.e_minus_half * xb * &dec.e_half - xb;
    let b = (&dec.e_minus_half - &id) * x0.view((0, n), (n, t - n));
    let cm = x0.view((n, 0), (t - n, n)) * (&dec.e_half - &id);
    (a, b, cm)
}

/// Kernel `i^{mu_m - mu_n} dO_mn` of the correction over a `T`-dimensional basis.
fn correction_kernel(a: &CMatrix, b: &CMatrix, cm: &CMatrix, n: usize, t: usize) -> CMatrix {
    let mut k = CMatrix::zeros(t, t);
    for i in 0..t {
        for j in 0..t {
            let v = if i < n && j < n {
                a[(i, j)]
            } else if i < n {
                b[(i, j - n)]
            } else if j < n {
                cm[(i - n, j)]
            } else {
                continue;
            };
            k[(i, j)] = v * i_pow(mu(i + 1) - mu(j + 1));
        }
    }
    k
}

/// Dressed position `X = E^{-1/2} x E^{1/2}` and its derivative expansion.
///
/// The tail sum over `n > N` grows by blocks of 20 until a block changes
/// every `omega~_l` by less than `nu_N / 10` on a grid; at least one block
/// is always included when `max_tail > N`.
pub fn dress_position(
    dec: &MetricDecomposition,
    z: f64,
    max_tail: usize,
    ell_max: usize,
) -> Result<DressedObservable> {
    let n = dec.order();
    if max_tail < n {
        return Err(Error::InvalidParameter(format!(
            "tail {max_tail} smaller than order {n}"
        )));
    }
    let target = nu_n(z, n) / 10.0;
    let xs = grid(TAIL_GRID);
    let build = |t: usize| {
        let x0 = basis_power_matrix(1, t);
        let (a, b, cm) = dressing_blocks(&x0, dec);
        let kernel = correction_kernel(&a, &b, &cm, n, t);
        let op = series_from_kernel(&kernel, t, ell_max, z, BaseOperator::Observable);
        (a, b, cm, op)
    };
    let sample = |op: &PseudoDiffOp| -> Vec<Vec<C64>> {
        op.series
            .iter()
            .map(|s| xs.iter().map(|&x| s.eval(x)).collect())
            .collect()
    };
    let mut t = n;
    let mut current = build(t);
    let mut last_change = 0.0;
    while t < max_tail {
        let t_next = (t + TAIL_BLOCK).min(max_tail);
        let next = build(t_next);
        let (s0, s1) = (sample(&current.3), sample(&next.3));
        last_change = s0
            .iter()
            .zip(&s1)
            .flat_map(|(r0, r1)| r0.iter().zip(r1).map(|(a, b)| (a - b).norm()))
            .fold(0.0, f64::max);
        t = t_next;
        current = next;
        if last_change <= target {
            break;
        }
    }
    if last_change > target {
        return Err(Error::TailNotConverged {
            tail: max_tail,
            last: last_change,
        });
    }
    let (a, b, cm, omega) = current;
    Ok(DressedObservable {
        label: "position",
        a,
        b,
        c: cm,
        omega,
        tail_used: t,
    })
}

/// Callable part of a wave function.
pub type Callable = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

#[derive(Clone)]
pub enum WaveBase {
    /// Coefficients `s_q` of `sum_q s_q sin[pi q (x+1)/2]`.
    Sine(CVector),
    Callable(Callable),
}

impl std::fmt::Debug for WaveBase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WaveBase::Sine(v) => f.debug_tuple("Sine").field(&v.len()).finish(),
            WaveBase::Callable(_) => f.write_str("Callable"),
        }
    }
}

/// `Psi(x) = psi(x) + sum_{n<=N} a_n sin[pi n (x+1)/2]`.
#[derive(Debug, Clone)]
pub struct WaveFunction {
    pub base: WaveBase,
    pub correction: CVector,
    /// `<psi, psi>_+`.
    pub norm_plus: f64,
}

impl WaveFunction {
    pub fn eval(&self, x: f64) -> C64 {
        let mut v = match &self.base {
            WaveBase::Sine(s) => s.iter().enumerate().map(|(q, a)| a * sine(q + 1, x)).sum(),
            WaveBase::Callable(f) => f(x),
        };
        for (q, a) in self.correction.iter().enumerate() {
            v += a * sine(q + 1, x);
        }
        v
    }

    /// All sine coefficients, when the base is itself a sine sum.
    pub fn sine_coefficients(&self) -> Option<CVector> {
        match &self.base {
            WaveBase::Sine(s) => {
                let len = s.len().max(self.correction.len());
                let mut g = CVector::zeros(len);
                for (i, v) in s.iter().enumerate() {
                    g[i] += v;
                }
                for (i, v) in self.correction.iter().enumerate() {
                    g[i] += v;
                }
                Some(g)
            }
            WaveBase::Callable(_) => None,
        }
    }

    /// Divides by `sqrt(<psi, psi>_+)`.
    pub fn normalized(&self) -> Self {
        let s = 1.0 / self.norm_plus.sqrt();
        let base = match &self.base {
            WaveBase::Sine(v) => WaveBase::Sine(v * c(s)),
            WaveBase::Callable(f) => {
                let f = f.clone();
                WaveBase::Callable(Arc::new(move |x| f(x) * s))
            }
        };
        Self {
            base,
            correction: &self.correction * c(s),
            norm_plus: 1.0,
        }
    }

    /// `int Psi_a^* Psi_b dx` in closed form for sine bases, by quadrature otherwise.
    pub fn overlap(&self, other: &Self) -> C64 {
        if let (Some(a), Some(b)) = (self.sine_coefficients(), other.sine_coefficients()) {
            let len = a.len().min(b.len());
            return (0..len).map(|i| a[i].conj() * b[i]).sum();
        }
        integrate_split(|x| self.eval(x).conj() * other.eval(x))
    }
}

fn integrate_split(f: impl Fn(f64) -> C64) -> C64 {
    let gl = GaussLegendre::new(32);
    gl.integrate(-1.0, 0.0, 16, &f) + gl.integrate(0.0, 1.0, 16, &f)
}

/// `a_n = i^{mu_n} (sum_m E^{1/2}_nm f_m - f_n)` for a state with reference
/// components `f`.
pub fn position_wavefunction(state: &StateVector, dec: &MetricDecomposition) -> WaveFunction {
    let f = &state.coeffs;
    let base = CVector::from_fn(f.len(), |q, _| f[q] * i_pow(mu(q + 1)));
    let correction = correction_coeffs(f, dec);
    let norm_plus = physical_inner_product(state, state, dec).re;
    WaveFunction {
        base: WaveBase::Sine(base),
        correction,
        norm_plus,
    }
}

fn correction_coeffs(f: &CVector, dec: &MetricDecomposition) -> CVector {
    let n = dec.order();
    let fb = CVector::from_fn(n, |i, _| if i < f.len() { f[i] } else { c(0.0) });
    let rotated = &dec.e_half * &fb;
    CVector::from_fn(n, |i, _| i_pow(mu(i + 1)) * (rotated[i] - fb[i]))
}

/// Same for a state given as a function on `[-1, 1]`; its reference
/// components come from quadrature.
pub fn position_wavefunction_callable(psi: Callable, dec: &MetricDecomposition) -> WaveFunction {
    let n = dec.order();
    let f = CVector::from_fn(n, |m, _| {
        let q = m + 1;
        let gl = GaussLegendre::new(32);
        let g = |x: f64| basis(q, x).conj() * psi(x);
        gl.integrate(-1.0, 0.0, 8 + q, g) + gl.integrate(0.0, 1.0, 8 + q, g)
    });
    let l2 = integrate_split(|x| c(psi(x).norm_sqr())).re;
    let block_l2: f64 = f.iter().map(|z| z.norm_sqr()).sum();
    let fb = StateVector::new(f.clone());
    let block_plus = physical_inner_product(&fb, &fb, dec).re;
    WaveFunction {
        base: WaveBase::Callable(psi),
        correction: correction_coeffs(&f, dec),
        norm_plus: block_plus + (l2 - block_l2),
    }
}

#[derive(Debug, Clone)]
pub struct DensityMoments {
    pub x: Vec<f64>,
    pub density: Vec<f64>,
    /// `int |Psi|^2`.
    pub norm: f64,
    pub mean_x: f64,
    pub mean_x2: f64,
    pub delta_x: f64,
}

pub const DENSITY_GRID: usize = 801;
const NORMALIZATION_TOL: f64 = 1e-6;

/// `rho = |Psi|^2` on a grid, with `<X>`, `<X^2>` and `Delta x`.
pub fn density_and_moments(wf: &WaveFunction, points: usize) -> Result<DensityMoments> {
    if (wf.norm_plus - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized { norm: wf.norm_plus });
    }
    let xs = grid(points);
    let density = xs.iter().map(|&x| wf.eval(x).norm_sqr()).collect();
    let (norm, m1, m2) = match wf.sine_coefficients() {
        Some(g) => {
            let k = g.len();
            let quad = |p: u32| {
                let s = sine_power_matrix(p, k);
                (g.adjoint() * s * &g)[(0, 0)].re
            };
            (g.iter().map(|z| z.norm_sqr()).sum(), quad(1), quad(2))
        }
        None => {
            let moment = |p: i32| integrate_split(|x| c(x.powi(p) * wf.eval(x).norm_sqr())).re;
            (moment(0), moment(1), moment(2))
        }
    };
    let var = m2 - m1 * m1;
    Ok(DensityMoments {
        x: xs,
        density,
        norm,
        mean_x: m1,
        mean_x2: m2,
        delta_x: var.max(0.0).sqrt(),
    })
}

/// `N_n |n>` with `N_n` fixing the physical norm to one.
pub fn normalized_basis_state(n: usize, dec: &MetricDecomposition) -> Result<StateVector> {
    let order = dec.order();
    if n == 0 || n > order {
        return Err(Error::OutOfTruncation { j: n, order });
    }
    let mut s = StateVector::basis(n, order);
    s.coeffs[n - 1] = c(1.0 / dec.e_matrix[(n - 1, n - 1)].re.sqrt());
    Ok(s)
}

/// Smooth part `F(x, y)` of the state localized at `y`; the singular part
/// is `delta(x - y)` and is never discretized.
#[derive(Debug, Clone)]
pub struct LocalizedState {
    pub y: f64,
    /// `i^{mu_m - mu_n} (E^{-1/2} - 1)_mn`.
    pub f_coeffs: CMatrix,
    /// `sum_n f_coeffs[m, n] sin_n(y)`, the sine coefficients of `F(., y)`.
    pub profile: CVector,
}

impl LocalizedState {
    pub fn smooth(&self, x: f64) -> C64 {
        self.profile
            .iter()
            .enumerate()
            .map(|(m, a)| a * sine(m + 1, x))
            .sum()
    }

    /// `F` on `points` uniform nodes.
    pub fn sample(&self, points: usize) -> Vec<(f64, C64)> {
        grid(points)
            .into_iter()
            .map(|x| (x, self.smooth(x)))
            .collect()
    }

    /// `sqrt(int |F(x, y)|^2 dx)`, exact from the sine coefficients.
    pub fn l2_norm(&self) -> f64 {
        self.profile
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

pub fn localized_state(y: f64, dec: &MetricDecomposition) -> Result<LocalizedState> {
    if !(y > -1.0 && y < 1.0) {
        return Err(Error::Domain { x: y });
    }
    let n = dec.order();
    let id = CMatrix::identity(n, n);
    let d = &dec.e_minus_half - id;
    let f_coeffs = CMatrix::from_fn(n, n, |i, j| d[(i, j)] * i_pow(mu(i + 1) - mu(j + 1)));
    let sy = CVector::from_fn(n, |j, _| c(sine(j + 1, y)));
    let profile = &f_coeffs * sy;
    Ok(LocalizedState {
        y,
        f_coeffs,
        profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real_diag;
    use crate::metric::diagonalize_metric;

    #[test]
    fn identity_metric_changes_nothing() {
        let dec = diagonalize_metric(&CMatrix::identity(5, 5)).unwrap();
        let x = dress_position(&dec, 0.0, 15, 12).unwrap();
        assert!(x
            .a
            .iter()
            .chain(x.b.iter())
            .chain(x.c.iter())
            .all(|z| *z == c(0.0)));
        assert!(x.omega.series.iter().all(|s| s.is_zero()));
        let wf = position_wavefunction(&StateVector::basis(2, 5), &dec);
        assert!(wf.correction.iter().all(|z| *z == c(0.0)));
        let loc = localized_state(0.3, &dec).unwrap();
        assert_eq!(loc.l2_norm(), 0.0);
    }

    #[test]
    fn box_uncertainty_closed_form() {
        let dec = diagonalize_metric(&CMatrix::identity(8, 8)).unwrap();
        for n in 1..=7 {
            let s = normalized_basis_state(n, &dec).unwrap();
            let m = density_and_moments(&position_wavefunction(&s, &dec), 101).unwrap();
            let expect = (1.0 / 3.0 - 2.0 / (std::f64::consts::PI.powi(2) * (n * n) as f64)).sqrt();
            assert!((m.delta_x - expect).abs() < 1e-12);
            assert!(m.mean_x.abs() < 1e-14);
        }
    }

    #[test]
    fn unnormalized_rejected() {
        let dec = diagonalize_metric(&real_diag(&[2.0, 1.0])).unwrap();
        let wf = position_wavefunction(&StateVector::basis(1, 2), &dec);
        assert!(matches!(
            density_and_moments(&wf, 11),
            Err(Error::NotNormalized { .. })
        ));
        assert!(density_and_moments(&wf.normalized(), 11).is_ok());
    }

    #[test]
    fn localized_domain() {
        let dec = diagonalize_metric(&CMatrix::identity(3, 3)).unwrap();
        assert!(matches!(
            localized_state(1.0, &dec),
            Err(Error::Domain { .. })
        ));
    }
}
