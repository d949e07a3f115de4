//! Time evolution of states built from the eigenfunctions `psi_n`, and the
//! dressed position expectation value along a trajectory.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{i_pow, CMatrix, CVector, C64};
use crate::metric::{MetricDecomposition, SpectralSystem};
use crate::observables::{WaveBase, WaveFunction};
use crate::trig::{mu, sine_power_matrix};

/// Default window `[0, 16/pi]` and sample count for `<X>(tau)`.
pub const DEFAULT_TAU_POINTS: usize = 400;
pub fn default_tau_end() -> f64 {
    16.0 / PI
}

const IMAG_ERROR: f64 = 1e-8;
const PEAK_SLACK: f64 = 5e-3;

/// Precomputed data for `psi(tau) = sum_n c_n exp(-i (tau - tau0) E_n) psi_n`.
#[derive(Debug, Clone)]
pub struct EvolutionSetup {
    /// Level the state was localized on, if prepared from one.
    pub j: Option<usize>,
    pub tau0: f64,
    /// `c_n`, `n = 1..=N`.
    pub c: CVector,
    pub energies: Vec<f64>,
    /// Column `n` holds the sine coefficients of `Psi_n = rho^{-1} psi_n`:
    /// `G = diag(i^mu) E^{1/2} Psi_b`.
    pub gamma: CMatrix,
    /// `<m|psi_n>` over the full basis, for the naive norm.
    pub psi: CMatrix,
    /// `Psi_b^dagger E Psi_b = G^dagger G`, the Gram matrix of the `Psi_n`.
    pub gram_plus: CMatrix,
}

fn gamma_matrix(sys: &SpectralSystem, dec: &MetricDecomposition) -> CMatrix {
    let n = dec.order();
    let mut g = &dec.e_half * sys.psi_block();
    for (i, mut row) in g.row_iter_mut().enumerate() {
        row *= i_pow(mu(i + 1));
    }
    debug_assert_eq!(g.ncols(), n);
    g
}

fn gram_plus(sys: &SpectralSystem, dec: &MetricDecomposition) -> CMatrix {
    let pb = sys.psi_block();
    pb.adjoint() * &dec.e_matrix * &pb
}

/// State localized on level `j` at `tau0`: `c_n = N_j conj(phi_n)_j` with
/// `N_j = E_jj^{-1/2}`.
pub fn prepare_evolution(
    j: usize,
    sys: &SpectralSystem,
    dec: &MetricDecomposition,
    tau0: f64,
) -> Result<EvolutionSetup> {
    let order = dec.order();
    if j == 0 || j > order {
        return Err(Error::OutOfTruncation { j, order });
    }
    let norm = 1.0 / dec.e_matrix[(j - 1, j - 1)].re.sqrt();
    let coeffs = CVector::from_fn(order, |n, _| sys.phi[(j - 1, n)].conj() * norm);
    let mut s = prepare_from_coeffs(coeffs, sys, dec, tau0)?;
    s.j = Some(j);
    Ok(s)
}

/// Arbitrary superposition with coefficients `c_n` on the `psi_n`.
pub fn prepare_from_coeffs(
    coeffs: CVector,
    sys: &SpectralSystem,
    dec: &MetricDecomposition,
    tau0: f64,
) -> Result<EvolutionSetup> {
    let order = dec.order();
    if coeffs.len() != order {
        return Err(Error::InvalidParameter(format!(
            "expected {order} coefficients, got {}",
            coeffs.len()
        )));
    }
    if !tau0.is_finite()
        || coeffs
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::InvalidParameter("non-finite evolution input".into()));
    }
    Ok(EvolutionSetup {
        j: None,
        tau0,
        c: coeffs,
        energies: sys.energies[..order].to_vec(),
        gamma: gamma_matrix(sys, dec),
        psi: sys.psi.columns(0, order).into_owned(),
        gram_plus: gram_plus(sys, dec),
    })
}

impl EvolutionSetup {
    fn amplitudes(&self, tau: f64) -> CVector {
        let dt = tau - self.tau0;
        CVector::from_fn(self.c.len(), |n, _| {
            self.c[n] * C64::from_polar(1.0, -dt * self.energies[n])
        })
    }

    /// `<psi(tau), psi(tau)>_+` restricted to the `N` block, which equals
    /// `int |Psi(x; tau)|^2 dx`; constant in exact arithmetic.
    pub fn physical_norm(&self, tau: f64) -> f64 {
        let u = self.amplitudes(tau);
        (u.adjoint() * &self.gram_plus * &u)[(0, 0)].re
    }

    /// Plain `l^2` norm of `psi(tau)`, which is not conserved.
    pub fn naive_norm(&self, tau: f64) -> f64 {
        (&self.psi * self.amplitudes(tau)).norm_squared()
    }

    /// `Psi(x; tau) = sum_n c_n exp(-i (tau - tau0) E_n) Psi_n(x)`.
    pub fn evolve_wavefunction(&self, tau: f64) -> WaveFunction {
        let g = &self.gamma * self.amplitudes(tau);
        let norm_plus = self.physical_norm(tau);
        WaveFunction {
            base: WaveBase::Sine(g),
            correction: CVector::zeros(0),
            norm_plus,
        }
    }

    /// `Theta = diag(c^*) G^dagger x G diag(c)`.
    pub fn theta(&self) -> CMatrix {
        let xs = sine_power_matrix(1, self.gamma.nrows());
        let inner = self.gamma.adjoint() * xs * &self.gamma;
        CMatrix::from_fn(inner.nrows(), inner.ncols(), |m, n| {
            self.c[m].conj() * inner[(m, n)] * self.c[n]
        })
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub tau: Vec<f64>,
    pub mean_x: Vec<f64>,
    /// Largest imaginary residue seen before it was discarded.
    pub max_imag: f64,
}

/// `<X>(tau) = sum_{m,n} Theta_mn exp(-i (tau - tau0)(E_n - E_m)) / <psi, psi>_+`.
pub fn trajectory(setup: &EvolutionSetup, taus: &[f64]) -> Result<Trajectory> {
    let theta = setup.theta();
    let norm = setup.physical_norm(setup.tau0);
    let n = theta.nrows();
    let mut mean_x = Vec::with_capacity(taus.len());
    let mut max_imag = 0.0f64;
    for &tau in taus {
        let dt = tau - setup.tau0;
        let ph = CVector::from_fn(n, |k, _| C64::from_polar(1.0, -dt * setup.energies[k]));
        let v = (ph.adjoint() * &theta * &ph)[(0, 0)] / norm;
        if v.im.abs() > IMAG_ERROR {
            return Err(Error::HermiticityViolation {
                residue: v.im.abs(),
            });
        }
        max_imag = max_imag.max(v.im.abs());
        mean_x.push(v.re);
    }
    Ok(Trajectory {
        tau: taus.to_vec(),
        mean_x,
        max_imag,
    })
}

/// `points` uniform times on `[start, end]`.
pub fn tau_grid(start: f64, end: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![start];
    }
    let h = (end - start) / (points - 1) as f64;
    (0..points).map(|i| start + h * i as f64).collect()
}

/// Normalized autocorrelation of the mean-removed signal, lags `0..len/2`.
pub fn autocorrelation(signal: &[f64]) -> Vec<f64> {
    let n = signal.len();
    let mean = signal.iter().sum::<f64>() / n as f64;
    let s: Vec<f64> = signal.iter().map(|v| v - mean).collect();
    (0..n / 2)
        .map(|lag| {
            let (a, b) = (&s[..n - lag], &s[lag..]);
            let num: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let den = (a.iter().map(|x| x * x).sum::<f64>() * b.iter().map(|y| y * y).sum::<f64>())
                .sqrt();
            if den > 0.0 {
                num / den
            } else {
                0.0
            }
        })
        .collect()
}

/// Period of a uniformly sampled signal: the shortest lag whose
/// autocorrelation peak comes within `PEAK_SLACK` of the highest one.
pub fn detect_period(signal: &[f64], dt: f64) -> Option<f64> {
    let r = autocorrelation(signal);
    let start = r.iter().position(|&v| v < 0.0)?;
    let peaks: Vec<usize> = (start.max(1)..r.len().saturating_sub(1))
        .filter(|&k| r[k] >= r[k - 1] && r[k] >= r[k + 1] && r[k] > 0.0)
        .collect();
    let best = peaks
        .iter()
        .map(|&k| r[k])
        .fold(f64::NEG_INFINITY, f64::max);
    let k = *peaks.iter().find(|&&k| r[k] >= best - PEAK_SLACK)?;
    // parabolic refinement of the peak position
    let (y0, y1, y2) = (r[k - 1], r[k], r[k + 1]);
    let den = y0 - 2.0 * y1 + y2;
    let shift = if den.abs() > 0.0 {
        0.5 * (y0 - y2) / den
    } else {
        0.0
    };
    Some((k as f64 + shift) * dt)
}
