//! The PT-symmetric infinite square well with potential `+iZ` on `(-1, 0)`
//! and `-iZ` on `(0, 1)`, in units `L = 2`, `m = 1/2`, `hbar = 1`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, i_pow, CMatrix, CVector, C64};
use crate::metric::{build_metric_matrix, diagonalize_metric, MetricDecomposition, SpectralSystem};
use crate::quad::GaussLegendre;
use crate::trig::{basis, basis_power_matrix, mu};

/// Exceptional point: the two lowest levels merge near this value of `Z`.
pub const Z_STAR: f64 = 4.48;

/// How the level parameters `t_n, s_n, E_n` are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Root of the transcendental equation, polished to machine precision.
    #[default]
    Exact,
    /// Series through fourth order in `nu = 2Z/(pi n)^2`.
    #[serde(alias = "pert")]
    Perturbative,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "pert" | "perturbative" => Ok(Mode::Perturbative),
            other => Err(Error::InvalidParameter(format!(
                "unknown mode {other:?} (expected exact or pert)"
            ))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Perturbative => "pert",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WellParams {
    pub z: f64,
    pub order: usize,
    pub mode: Mode,
    /// Highest reference-basis index kept in coefficient vectors.
    pub tail: usize,
}

impl WellParams {
    /// Tail defaults to `3N`.
    pub fn new(z: f64, order: usize, mode: Mode) -> Result<Self> {
        Self::with_tail(z, order, mode, 3 * order)
    }

    pub fn with_tail(z: f64, order: usize, mode: Mode, tail: usize) -> Result<Self> {
        check_z(z)?;
        if order == 0 {
            return Err(Error::InvalidParameter("order N must be at least 1".into()));
        }
        if tail < order {
            return Err(Error::InvalidParameter(format!(
                "tail {tail} must be at least the order {order}"
            )));
        }
        Ok(Self {
            z,
            order,
            mode,
            tail,
        })
    }

    pub fn nu(&self) -> f64 {
        nu_n(self.z, self.order)
    }
}

pub fn check_z(z: f64) -> Result<()> {
    if !z.is_finite() || z < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "Z must be finite and non-negative, got {z}"
        )));
    }
    if z >= Z_STAR {
        return Err(Error::ExceptionalPoint { z, z_star: Z_STAR });
    }
    Ok(())
}

/// Accuracy index `nu_N = 2Z/(pi N)^2`.
pub fn nu_n(z: f64, order: usize) -> f64 {
    2.0 * z / (PI * order as f64).powi(2)
}

fn sign_n(n: usize) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn t_series(n: usize, z: f64) -> f64 {
    let nu = nu_n(z, n);
    let sg = sign_n(n);
    let nn = (n * n) as f64;
    (PI * n as f64 / 2.0) * (1.0 - sg * nu.powi(2) - (3.0 + sg * PI * PI * nn / 6.0) * nu.powi(4))
}

pub fn s_series(n: usize, z: f64) -> f64 {
    let nu = nu_n(z, n);
    let sg = sign_n(n);
    let nn = (n * n) as f64;
    (PI * n as f64 * nu / 2.0)
        * (1.0 + sg * nu.powi(2) + (4.0 + sg * PI * PI * nn / 6.0) * nu.powi(4))
}

pub fn e_series(n: usize, z: f64) -> f64 {
    let nu = nu_n(z, n);
    let sg = sign_n(n);
    let nn = (n * n) as f64;
    (PI * n as f64 / 2.0).powi(2)
        * (1.0
            - (1.0 + 2.0 * sg) * nu.powi(2)
            - (5.0 + 2.0 * sg + sg * PI * PI * nn / 3.0) * nu.powi(4))
}

/// `(Z/t) sinh(Z/t) + 2 t sin(2t)`.
pub fn level_equation(t: f64, z: f64) -> f64 {
    let w = z / t;
    w * w.sinh() + 2.0 * t * (2.0 * t).sin()
}

fn level_equation_deriv(t: f64, z: f64) -> f64 {
    let w = z / t;
    -(z / (t * t)) * (w.sinh() + w * w.cosh()) + 2.0 * (2.0 * t).sin() + 4.0 * t * (2.0 * t).cos()
}

/// `t_n` for level `n >= 1`.
pub fn solve_tn(n: usize, z: f64, mode: Mode) -> Result<f64> {
    check_z(z)?;
    if n == 0 {
        return Err(Error::InvalidParameter("level index starts at 1".into()));
    }
    if z == 0.0 {
        return Ok(PI * n as f64 / 2.0);
    }
    match mode {
        Mode::Perturbative => Ok(t_series(n, z)),
        Mode::Exact => {
            let bracket = if z <= 1.0 {
                seeded_bracket(n, z).or_else(|| scanned_bracket(n, z))
            } else {
                scanned_bracket(n, z)
            };
            let (a, b) = bracket.ok_or(Error::RootNotFound { n, z })?;
            let t = polish(a, b, z);
            let resid = level_equation(t, z);
            if !t.is_finite() || resid.abs() > 1e-10 * (1.0 + 2.0 * t) {
                return Err(Error::RootNotFound { n, z });
            }
            Ok(t)
        }
    }
}

fn seeded_bracket(n: usize, z: f64) -> Option<(f64, f64)> {
    let seed = t_series(n, z);
    let g0 = level_equation(seed, z);
    if g0 == 0.0 {
        return Some((seed, seed));
    }
    let lo_limit = (n as f64 - 1.0) * PI / 2.0;
    for frac in [0.01, 0.02, 0.05, 0.1, 0.2, 0.4] {
        let d = frac * PI;
        let right = seed + d;
        if level_equation(right, z).signum() != g0.signum() {
            return Some((seed, right));
        }
        let left = (seed - d).max(lo_limit + 1e-9).max(1e-9);
        if left < seed && level_equation(left, z).signum() != g0.signum() {
            return Some((left, seed));
        }
    }
    None
}

/// Counts sign changes from small `t` upward; the `n`-th one brackets `t_n`.
fn scanned_bracket(n: usize, z: f64) -> Option<(f64, f64)> {
    let step = PI / 400.0;
    let mut t = (z / 600.0).max(1e-6);
    let mut g = level_equation(t, z);
    let mut count = 0;
    let limit = (n as f64 + 2.0) * PI / 2.0;
    while t < limit {
        let t2 = t + step;
        let g2 = level_equation(t2, z);
        if g2 == 0.0 || g.signum() != g2.signum() {
            count += 1;
            if count == n {
                return Some((t, t2));
            }
        }
        t = t2;
        g = g2;
    }
    None
}

fn polish(mut a: f64, mut b: f64, z: f64) -> f64 {
    if a == b {
        return a;
    }
    let mut ga = level_equation(a, z);
    while b - a > 1e-6 {
        let m = 0.5 * (a + b);
        let gm = level_equation(m, z);
        if gm == 0.0 {
            return m;
        }
        if gm.signum() == ga.signum() {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    let mut t = 0.5 * (a + b);
    for _ in 0..50 {
        let d = level_equation_deriv(t, z);
        if d == 0.0 {
            break;
        }
        let step = level_equation(t, z) / d;
        let next = t - step;
        if !(next > a - 1e-6 && next < b + 1e-6) {
            break;
        }
        t = next;
        if step.abs() < 1e-12 * t.max(1.0) {
            break;
        }
    }
    t
}

/// `alpha_n = (-1)^{floor(n/2)} (Z/(pi n))^{mu_n}`.
pub fn alpha_n(n: usize, z: f64) -> f64 {
    let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
    if mu(n) == 1 {
        sign * z / (PI * n as f64)
    } else {
        sign
    }
}

/// Everything needed to evaluate `psi_n` and its dual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelData {
    pub n: usize,
    pub z: f64,
    pub mode: Mode,
    pub t: f64,
    pub s: f64,
    /// `s - i t`, governs the right branch.
    pub kappa_plus: C64,
    /// `s + i t`, governs the left branch.
    pub kappa_minus: C64,
    pub energy: f64,
    pub alpha: f64,
    /// `alpha_n` at `-Z`.
    pub alpha_dual: f64,
    /// `<psi_n|chi_n>`.
    pub norm_dual: C64,
}

/// Below this `Z` the closed-form dual normalization loses digits to
/// cancellation and is replaced by quadrature.
const SMALL_Z: f64 = 1e-2;

pub fn level_data(n: usize, z: f64, mode: Mode) -> Result<LevelData> {
    let t = solve_tn(n, z, mode)?;
    let (s, energy) = if z == 0.0 {
        (0.0, t * t)
    } else {
        match mode {
            Mode::Exact => {
                let s = z / (2.0 * t);
                (s, t * t - s * s)
            }
            Mode::Perturbative => (s_series(n, z), e_series(n, z)),
        }
    };
    let mut level = LevelData {
        n,
        z,
        mode,
        t,
        s,
        kappa_plus: C64::new(s, -t),
        kappa_minus: C64::new(s, t),
        energy,
        alpha: alpha_n(n, z),
        alpha_dual: alpha_n(n, -z),
        norm_dual: c(1.0),
    };
    level.norm_dual = if z == 0.0 {
        c(1.0)
    } else if z < SMALL_Z {
        dual_norm_quadrature(&level)
    } else {
        c(dual_norm_closed(&level))
    };
    Ok(level)
}

/// Closed form of `<psi_n|chi_n>`.
pub fn dual_norm_closed(level: &LevelData) -> f64 {
    let (t, s) = (level.t, level.s);
    let c2t = (2.0 * t).cos();
    let ch = (2.0 * s).cosh();
    let num = 1.0 - c2t * ch + t * (2.0 * t).sin() * (c2t - ch) / (s * s + t * t);
    2.0 * level.alpha * level.alpha_dual * num / (c2t - ch).powi(2)
}

pub fn dual_norm_quadrature(level: &LevelData) -> C64 {
    let gl = GaussLegendre::new(24);
    let f = |x: f64| eval_branch(level, x, false).conj() * eval_branch(level, x, true);
    gl.integrate(-1.0, 0.0, 8, f) + gl.integrate(0.0, 1.0, 8, f)
}

fn check_x(x: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain { x });
    }
    Ok(())
}

/// `chi_n = psi_n` with `Z -> -Z`, which flips `s` and `alpha` but not `t`.
fn eval_branch(level: &LevelData, x: f64, dual: bool) -> C64 {
    if level.z == 0.0 {
        return basis(level.n, x);
    }
    let (s, alpha) = if dual {
        (-level.s, level.alpha_dual)
    } else {
        (level.s, level.alpha)
    };
    if x <= 0.0 {
        let k = C64::new(s, level.t);
        alpha * (k * (1.0 + x)).sinh() / k.sinh()
    } else {
        let k = C64::new(s, -level.t);
        alpha * (k * (1.0 - x)).sinh() / k.sinh()
    }
}

pub fn eigenfunction_eval(level: &LevelData, x: f64) -> Result<C64> {
    check_x(x)?;
    Ok(eval_branch(level, x, false))
}

/// Left and right branch formulas evaluated at the same point.
pub fn branch_values(level: &LevelData, x: f64) -> (C64, C64) {
    let (s, t, a) = (level.s, level.t, level.alpha);
    let kl = C64::new(s, t);
    let kr = C64::new(s, -t);
    (
        a * (kl * (1.0 + x)).sinh() / kl.sinh(),
        a * (kr * (1.0 - x)).sinh() / kr.sinh(),
    )
}

/// `phi_n = chi_n / N_n`.
pub fn dual_eval(level: &LevelData, x: f64) -> Result<C64> {
    check_x(x)?;
    Ok(eval_branch(level, x, true) / level.norm_dual)
}

/// `(-d^2/dx^2 + v - E) psi_n` from the analytic second derivative.
pub fn eigen_residual(level: &LevelData, x: f64) -> Result<C64> {
    check_x(x)?;
    let psi = eval_branch(level, x, false);
    let (k, v) = if x <= 0.0 {
        (level.kappa_minus, C64::new(0.0, level.z))
    } else {
        (level.kappa_plus, C64::new(0.0, -level.z))
    };
    Ok(-k * k * psi + v * psi - level.energy * psi)
}

/// `sin k` and `cos k` for `k = pi m / 2`, exactly.
fn quarter_trig(m: usize) -> (f64, f64) {
    match m % 4 {
        0 => (0.0, 1.0),
        1 => (1.0, 0.0),
        2 => (0.0, -1.0),
        _ => (-1.0, 0.0),
    }
}

/// `int_0^1 sin(k u) sinh(kappa u) du` with `k = pi m/2`.
fn sin_sinh_integral(m: usize, kappa: C64) -> C64 {
    let k = PI * m as f64 / 2.0;
    let denom = kappa * kappa + k * k;
    if denom.norm() < 1e-2 {
        let gl = GaussLegendre::new(40);
        return gl.integrate(0.0, 1.0, 1, |u| (kappa * u).sinh() * (k * u).sin());
    }
    let (sk, ck) = quarter_trig(m);
    (kappa * sk * kappa.cosh() - k * ck * kappa.sinh()) / denom
}

fn closed_overlap(level: &LevelData, m: usize, dual: bool) -> C64 {
    if level.z == 0.0 {
        return if m == level.n { c(1.0) } else { c(0.0) };
    }
    let (s, alpha) = if dual {
        (-level.s, level.alpha_dual)
    } else {
        (level.s, level.alpha)
    };
    let kl = C64::new(s, level.t);
    let kr = C64::new(s, -level.t);
    let sign = if m % 2 == 0 { -1.0 } else { 1.0 };
    let left = sin_sinh_integral(m, kl) / kl.sinh();
    let right = sin_sinh_integral(m, kr) / kr.sinh();
    i_pow(-mu(m)) * alpha * (left + right * sign)
}

fn quadrature_overlap(level: &LevelData, m: usize, dual: bool, gl: &GaussLegendre) -> C64 {
    let panels = 2 + m / 2;
    let f = |x: f64| basis(m, x).conj() * eval_branch(level, x, dual);
    gl.integrate(-1.0, 0.0, panels, f) + gl.integrate(0.0, 1.0, panels, f)
}

/// Whether closed-form overlaps are cross-checked by quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OverlapCheck {
    #[default]
    Quadrature,
    Off,
}

const CLOSED_FORM_TRAP: f64 = 1e-8;

/// `<m|psi_n>` and `<m|phi_n>` for `m = 1..=tail`.
pub fn overlaps(level: &LevelData, tail: usize, check: OverlapCheck) -> Result<(CVector, CVector)> {
    let gl = GaussLegendre::new(20);
    let mut psi = CVector::zeros(tail);
    let mut phi = CVector::zeros(tail);
    for m in 1..=tail {
        let p = closed_overlap(level, m, false);
        let ch = closed_overlap(level, m, true);
        if check == OverlapCheck::Quadrature && level.z != 0.0 {
            for (val, dual) in [(p, false), (ch, true)] {
                let q = quadrature_overlap(level, m, dual, &gl);
                let diff = (val - q).norm();
                if diff > CLOSED_FORM_TRAP || !diff.is_finite() {
                    return Err(Error::ClosedFormMismatch {
                        m,
                        n: level.n,
                        diff,
                    });
                }
            }
        }
        psi[m - 1] = p;
        phi[m - 1] = ch / level.norm_dual;
    }
    Ok((psi, phi))
}

/// Single overlap by quadrature, exposed for oracles.
pub fn overlap_by_quadrature(level: &LevelData, m: usize, dual: bool) -> C64 {
    let gl = GaussLegendre::new(20);
    let v = quadrature_overlap(level, m, dual, &gl);
    if dual {
        v / level.norm_dual
    } else {
        v
    }
}

/// `int_0^1 sin(a u) sin(b u) du` for `a = pi m/2`, `b = pi n/2`.
fn half_box_sine_product(m: usize, n: usize) -> f64 {
    let a = PI * m as f64 / 2.0;
    let b = PI * n as f64 / 2.0;
    let sinc = |w: f64| if w == 0.0 { 1.0 } else { w.sin() / w };
    0.5 * (sinc(a - b) - sinc(a + b))
}

/// `<m|v|n>`: purely off-diagonal, real antisymmetric.
pub fn v_entry(m: usize, n: usize, z: f64) -> C64 {
    if (m + n) % 2 == 0 {
        return c(0.0);
    }
    C64::new(0.0, z) * i_pow(mu(n) - mu(m)) * (2.0 * half_box_sine_product(m, n))
}

/// `<m|p^2 + v|n>` for `m, n <= size`.
pub fn h0_matrix(size: usize, z: f64) -> CMatrix {
    CMatrix::from_fn(size, size, |i, j| {
        let kinetic = if i == j {
            (PI * (i + 1) as f64 / 2.0).powi(2)
        } else {
            0.0
        };
        v_entry(i + 1, j + 1, z) + kinetic
    })
}

/// `<m|x|n>` for `m, n <= size`.
pub fn x_matrix(size: usize) -> CMatrix {
    basis_power_matrix(1, size)
}

/// `P|n> = (-1)^{n+1}|n>`.
pub fn parity_signs(size: usize) -> Vec<f64> {
    (1..=size)
        .map(|n| if n % 2 == 1 { 1.0 } else { -1.0 })
        .collect()
}

/// Solved levels `1..=N` for one parameter set.
#[derive(Debug, Clone)]
pub struct SquareWell {
    pub params: WellParams,
    pub levels: Vec<LevelData>,
}

impl SquareWell {
    pub fn new(params: WellParams) -> Result<Self> {
        let levels = (1..=params.order)
            .into_par_iter()
            .map(|n| level_data(n, params.z, params.mode))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { params, levels })
    }

    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }

    pub fn spectral_system(&self) -> Result<SpectralSystem> {
        self.spectral_system_checked(OverlapCheck::Quadrature)
    }

    pub fn spectral_system_checked(&self, check: OverlapCheck) -> Result<SpectralSystem> {
        let tail = self.params.tail;
        let cols = self
            .levels
            .par_iter()
            .map(|l| overlaps(l, tail, check))
            .collect::<Result<Vec<_>>>()?;
        let n = self.params.order;
        let mut psi = CMatrix::zeros(tail, n);
        let mut phi = CMatrix::zeros(tail, n);
        for (k, (p, f)) in cols.into_iter().enumerate() {
            psi.set_column(k, &p);
            phi.set_column(k, &f);
        }
        SpectralSystem::new(self.energies(), psi, phi, self.params.z)
    }

    /// Exact `<m|H|n>` on the `N` block.
    pub fn h0_block(&self) -> CMatrix {
        h0_matrix(self.params.order, self.params.z)
    }
}

/// A solved well together with its spectral system and metric.
#[derive(Debug, Clone)]
pub struct Model {
    pub well: SquareWell,
    pub sys: SpectralSystem,
    pub dec: MetricDecomposition,
}

impl Model {
    pub fn build(params: WellParams) -> Result<Self> {
        let well = SquareWell::new(params)?;
        let sys = well.spectral_system()?;
        let dec = diagonalize_metric(&build_metric_matrix(&sys)?)?;
        Ok(Self { well, sys, dec })
    }

    pub fn params(&self) -> WellParams {
        self.well.params
    }
}

/// `X_mn = sum_{k<=N} E_k <m|psi_k><phi_k|n>`.
pub fn chi_matrix(sys: &SpectralSystem) -> CMatrix {
    let psi = sys.psi_block();
    let phi = sys.phi_block();
    let mut scaled = psi.clone();
    for (k, e) in sys.energies.iter().enumerate() {
        for r in 0..scaled.nrows() {
            scaled[(r, k)] *= *e;
        }
    }
    scaled * phi.adjoint()
}

/// Orders beyond which the series terms `nu^l` are negligible, for `n = 1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesAdvisory {
    pub ell: Vec<f64>,
    /// True when sixth-order terms are negligible for every level.
    pub fourth_order_sufficient: bool,
}

pub fn series_advisory(z: f64, order: usize) -> SeriesAdvisory {
    if z == 0.0 {
        return SeriesAdvisory {
            ell: vec![f64::INFINITY; order],
            fourth_order_sufficient: true,
        };
    }
    let r = (PI / (2.0 * z).sqrt()).ln();
    let big = (order as f64).ln();
    let ell: Vec<f64> = (1..=order)
        .map(|n| (big + r) / ((n as f64).ln() + r))
        .collect();
    let fourth_order_sufficient = ell.iter().all(|&l| l < 6.0);
    SeriesAdvisory {
        ell,
        fourth_order_sufficient,
    }
}

/// Conversion between physical and dimensionless variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalUnits {
    pub hbar: f64,
    pub mass: f64,
    pub length: f64,
}

impl Default for PhysicalUnits {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            mass: 0.5,
            length: 2.0,
        }
    }
}

impl PhysicalUnits {
    pub fn x(&self, x: f64) -> f64 {
        2.0 * x / self.length
    }

    pub fn p(&self, p: f64) -> f64 {
        self.length * p / (2.0 * self.hbar)
    }

    /// Coupling `zeta -> Z`.
    pub fn z(&self, zeta: f64) -> f64 {
        self.mass * self.length.powi(2) * zeta / (2.0 * self.hbar.powi(2))
    }

    pub fn tau(&self, t: f64) -> f64 {
        2.0 * self.hbar * t / (self.mass * self.length.powi(2))
    }

    /// Dimensionless energy back to physical units.
    pub fn energy(&self, e: f64) -> f64 {
        2.0 * self.hbar.powi(2) * e / (self.mass * self.length.powi(2))
    }
}
