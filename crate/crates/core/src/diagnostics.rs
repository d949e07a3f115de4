//! Accuracy measures for a truncated metric construction.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{frobenius, CMatrix};
use crate::metric::{
    build_metric_matrix, diagonalize_metric, hermitian_h_matrix, MetricDecomposition,
};
use crate::squarewell::{chi_matrix, nu_n, Mode, SquareWell, WellParams};

/// `sigma_N = sqrt(sum (eps_n - 1)^2)`, the distance of the metric from `1`.
pub fn sigma_metric(dec: &MetricDecomposition) -> f64 {
    dec.eps
        .iter()
        .map(|e| (e - 1.0).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// `|| X/||X|| - Y/||Y|| ||` between the reconstructed and the exact `H` block.
pub fn sigma_capital(chi: &CMatrix, h0_block: &CMatrix) -> f64 {
    let a = chi / crate::linalg::c(frobenius(chi));
    let b = h0_block / crate::linalg::c(frobenius(h0_block));
    frobenius(&(a - b))
}

/// `||Q^ - Q^dagger||` for `Q^ = Q/||Q||`.
pub fn s_metric(h_block: &CMatrix) -> f64 {
    let q = h_block / crate::linalg::c(frobenius(h_block));
    frobenius(&(&q - q.adjoint()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub z: f64,
    pub order: usize,
    pub mode: Mode,
    pub sigma_n: f64,
    pub sigma_cap_n: f64,
    pub s_n: f64,
    pub nu_n: f64,
    /// Biorthonormality defect of the underlying eigensystem.
    pub biorthonormality: f64,
}

/// All three accuracy measures for one `(Z, N, mode)`.
pub fn metric_report(params: WellParams) -> Result<MetricReport> {
    let well = SquareWell::new(params)?;
    let sys = well.spectral_system()?;
    let dec = diagonalize_metric(&build_metric_matrix(&sys)?)?;
    let y = well.h0_block();
    let h = hermitian_h_matrix(&y, &dec)?;
    Ok(MetricReport {
        z: params.z,
        order: params.order,
        mode: params.mode,
        sigma_n: sigma_metric(&dec),
        sigma_cap_n: sigma_capital(&chi_matrix(&sys), &y),
        s_n: s_metric(&h.reference_basis),
        nu_n: nu_n(params.z, params.order),
        biorthonormality: sys.biorthonormality_residual(),
    })
}

/// `eps_1 = E_1/(pi^2/4) - 1`.
pub fn ground_shift(z: f64, mode: Mode) -> Result<f64> {
    let l = crate::squarewell::level_data(1, z, mode)?;
    Ok(l.energy / (std::f64::consts::PI.powi(2) / 4.0) - 1.0)
}
