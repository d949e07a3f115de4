//! Metric operator, canonical metric basis and dressing of observables for a
//! truncated biorthonormal eigensystem.
//!
//! All matrices are expressed in a fixed orthonormal reference basis `|n>`.
//! The metric acts as the `N x N` matrix `E` on the first `N` basis vectors
//! and as the identity on the rest.

use crate::error::{Error, Result};
use crate::linalg::{
    c, frobenius, hermitian_part, is_finite, jacobi_eigh, spectral_function, CMatrix, CVector,
};

/// Truncated eigen-data of a diagonalizable Hamiltonian with real spectrum.
#[derive(Debug, Clone)]
pub struct SpectralSystem {
    pub order: usize,
    pub tail: usize,
    /// `E_1 < E_2 < ... < E_N`.
    pub energies: Vec<f64>,
    /// `tail x N`, column `n` holds `<m|psi_n>`.
    pub psi: CMatrix,
    /// `tail x N`, column `n` holds `<m|phi_n>`.
    pub phi: CMatrix,
    /// Non-Hermiticity parameter the data was built for (informational).
    pub z: f64,
}

impl SpectralSystem {
    pub fn new(energies: Vec<f64>, psi: CMatrix, phi: CMatrix, z: f64) -> Result<Self> {
        let order = energies.len();
        let tail = psi.nrows();
        if order == 0 {
            return Err(Error::InvalidParameter("empty spectrum".into()));
        }
        if psi.ncols() != order || phi.ncols() != order || phi.nrows() != tail {
            return Err(Error::InvalidParameter(format!(
                "shape mismatch: {} energies, psi {}x{}, phi {}x{}",
                order,
                psi.nrows(),
                psi.ncols(),
                phi.nrows(),
                phi.ncols()
            )));
        }
        if tail < order {
            return Err(Error::InvalidParameter(format!(
                "tail {tail} smaller than order {order}"
            )));
        }
        if !is_finite(&psi) || !is_finite(&phi) || energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::NumericalFailure("non-finite spectral data".into()));
        }
        if energies.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "energies must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            order,
            tail,
            energies,
            psi,
            phi,
            z,
        })
    }

    /// `Phi^dagger Psi`, which should be the identity.
    pub fn biorthonormality_gram(&self) -> CMatrix {
        self.phi.adjoint() * &self.psi
    }

    /// Frobenius distance of the gram matrix from the identity.
    pub fn biorthonormality_residual(&self) -> f64 {
        let n = self.order;
        frobenius(&(self.biorthonormality_gram() - CMatrix::identity(n, n)))
    }

    /// Upper `N` rows of `psi`.
    pub fn psi_block(&self) -> CMatrix {
        self.psi.rows(0, self.order).into_owned()
    }

    pub fn phi_block(&self) -> CMatrix {
        self.phi.rows(0, self.order).into_owned()
    }

    /// Rescales each pair `(psi_n, phi_n) -> (psi_n / l, phi_n * l)` with
    /// `l = sqrt|psi_n^dagger P psi_n|`, keeping biorthonormality.
    ///
    /// For a PT-symmetric system this makes `P psi_n = +-phi_n`, the
    /// normalization under which `C = eta^{-1} P` squares to one.
    pub fn pt_normalized(&self, parity: &[f64]) -> Result<Self> {
        if parity.len() < self.tail {
            return Err(Error::InvalidParameter(format!(
                "parity has {} signs, need {}",
                parity.len(),
                self.tail
            )));
        }
        let mut psi = self.psi.clone();
        let mut phi = self.phi.clone();
        for n in 0..self.order {
            let pn: f64 = (0..self.tail)
                .map(|m| (self.psi[(m, n)].conj() * self.psi[(m, n)] * parity[m]).re)
                .sum();
            if pn == 0.0 || !pn.is_finite() {
                return Err(Error::NumericalFailure(format!(
                    "vanishing PT norm for level {}",
                    n + 1
                )));
            }
            let l = pn.abs().sqrt();
            for m in 0..self.tail {
                psi[(m, n)] /= l;
                phi[(m, n)] *= l;
            }
        }
        Self::new(self.energies.clone(), psi, phi, self.z)
    }
}

/// `E_mn = sum_{k<=N} <m|phi_k><phi_k|n>`, symmetrized.
pub fn build_metric_matrix(sys: &SpectralSystem) -> Result<CMatrix> {
    let block = sys.phi_block();
    let e = &block * block.adjoint();
    if !is_finite(&e) {
        return Err(Error::NumericalFailure("non-finite metric entry".into()));
    }
    Ok(hermitian_part(&e).0)
}

/// Eigen-decomposition of the metric block together with its square roots.
#[derive(Debug, Clone)]
pub struct MetricDecomposition {
    pub e_matrix: CMatrix,
    /// `eps[n]` is paired with reference vector `|n+1>`.
    pub eps: Vec<f64>,
    /// Column `n` is the eigenvector for `eps[n]`.
    pub u: CMatrix,
    pub e_half: CMatrix,
    pub e_minus_half: CMatrix,
    /// `||E - E^dagger||` of the input before symmetrization.
    pub asymmetry: f64,
}

const LABEL_GAP: f64 = 1e-6;

/// How metric eigenvalues are paired with reference indices. Only `eps`,
/// `u` and the metric-basis form of `h` depend on the choice; the square
/// roots of `E` do not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Labeling {
    /// `eps_n` goes with the eigenvector of largest `|<n|e>|`, greedily;
    /// near ties are reported as [`Error::AmbiguousLabeling`].
    #[default]
    Overlap,
    /// Ascending eigenvalue order; never fails.
    Ascending,
}

/// Diagonalizes `E` and labels its eigenvalues by maximal overlap with `|n>`.
pub fn diagonalize_metric(e_matrix: &CMatrix) -> Result<MetricDecomposition> {
    diagonalize_metric_with(e_matrix, Labeling::Overlap)
}

pub fn diagonalize_metric_with(
    e_matrix: &CMatrix,
    labeling: Labeling,
) -> Result<MetricDecomposition> {
    let (sym, asymmetry) = hermitian_part(e_matrix);
    let eig = jacobi_eigh(&sym)?;
    let n = sym.nrows();
    for (k, &v) in eig.values.iter().enumerate() {
        if !(v > 0.0) {
            return Err(Error::MetricNotPositive {
                index: k + 1,
                value: v,
            });
        }
    }
    let assignment = match labeling {
        Labeling::Overlap => label_by_overlap(&eig.vectors)?,
        Labeling::Ascending => (0..n).collect(),
    };
    let mut u = CMatrix::zeros(n, n);
    let mut eps = vec![0.0; n];
    for (col, &row) in assignment.iter().enumerate() {
        eps[row] = eig.values[col];
        let mut v = eig.vectors.column(col).into_owned();
        fix_phase(&mut v);
        u.set_column(row, &v);
    }
    let e_half = spectral_function(&u, &eps, f64::sqrt);
    let e_minus_half = spectral_function(&u, &eps, |x| 1.0 / x.sqrt());
    Ok(MetricDecomposition {
        e_matrix: sym,
        eps,
        u,
        e_half,
        e_minus_half,
        asymmetry,
    })
}

/// `assignment[col] = row`: greedy in descending `|U_row,col|`.
fn label_by_overlap(vectors: &CMatrix) -> Result<Vec<usize>> {
    let n = vectors.nrows();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for col in 0..n {
        for row in 0..n {
            pairs.push((vectors[(row, col)].norm(), row, col));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut row_used = vec![false; n];
    let mut col_used = vec![false; n];
    let mut assignment = vec![usize::MAX; n];
    for (i, &(w, row, col)) in pairs.iter().enumerate() {
        if row_used[row] || col_used[col] {
            continue;
        }
        for &(w2, r2, c2) in pairs[i + 1..].iter() {
            if w - w2 >= LABEL_GAP {
                break;
            }
            if (r2 == row) != (c2 == col) && !row_used[r2] && !col_used[c2] {
                return Err(Error::AmbiguousLabeling {
                    first: row + 1,
                    second: if r2 == row { c2 + 1 } else { r2 + 1 },
                });
            }
        }
        row_used[row] = true;
        col_used[col] = true;
        assignment[col] = row;
    }
    Ok(assignment)
}

/// Largest-magnitude component made real and positive.
fn fix_phase(v: &mut CVector) {
    let mut best = 0;
    for i in 0..v.len() {
        if v[i].norm() > v[best].norm() + 1e-14 {
            best = i;
        }
    }
    let a = v[best];
    if a.norm() > 0.0 {
        let phase = a.conj() / a.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

impl MetricDecomposition {
    /// `sum_m U_m eps_m^s U_m^dagger`.
    pub fn power(&self, s: f64) -> CMatrix {
        metric_power(self, s)
    }

    pub fn order(&self) -> usize {
        self.eps.len()
    }

    /// `E^{-1}`.
    pub fn inverse(&self) -> CMatrix {
        metric_power(self, -1.0)
    }
}

pub fn metric_power(dec: &MetricDecomposition, s: f64) -> CMatrix {
    if s == 0.0 {
        let n = dec.order();
        return CMatrix::identity(n, n);
    }
    spectral_function(&dec.u, &dec.eps, |x| x.powf(s))
}

/// Hermitian Hamiltonian in the metric basis and in the reference basis.
#[derive(Debug, Clone)]
pub struct HermitianHamiltonian {
    /// `h_mn = sqrt(eps_m / eps_n) H_mn` with `H_mn = <eps_m|H|eps_n>`.
    pub metric_basis: CMatrix,
    /// `Q = E^{1/2} H0 E^{-1/2}` on the `N` block.
    pub reference_basis: CMatrix,
}

/// `h0_block` is `<m|H|n>` for `m, n <= N`.
pub fn hermitian_h_matrix(
    h0_block: &CMatrix,
    dec: &MetricDecomposition,
) -> Result<HermitianHamiltonian> {
    let n = dec.order();
    if h0_block.nrows() != n || h0_block.ncols() != n {
        return Err(Error::InvalidParameter(format!(
            "H block is {}x{}, metric order {n}",
            h0_block.nrows(),
            h0_block.ncols()
        )));
    }
    let h_eps = dec.u.adjoint() * h0_block * &dec.u;
    let metric_basis = CMatrix::from_fn(n, n, |i, j| {
        h_eps[(i, j)] * (dec.eps[i] / dec.eps[j]).sqrt()
    });
    let reference_basis = &dec.e_half * h0_block * &dec.e_minus_half;
    Ok(HermitianHamiltonian {
        metric_basis,
        reference_basis,
    })
}

/// `E^{-1/2} o E^{1/2}` on the `N` block.
pub fn dress_observable(o0: &CMatrix, dec: &MetricDecomposition) -> CMatrix {
    let n = dec.order();
    let block = o0.view((0, 0), (n, n));
    &dec.e_minus_half * block * &dec.e_half
}

/// Inverse of [`dress_observable`]: `E^{1/2} O E^{-1/2}`.
pub fn undress_observable(o: &CMatrix, dec: &MetricDecomposition) -> CMatrix {
    let n = dec.order();
    let block = o.view((0, 0), (n, n));
    &dec.e_half * block * &dec.e_minus_half
}

/// Coefficient vector of a state in the reference basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub coeffs: CVector,
}

impl StateVector {
    pub fn new(coeffs: CVector) -> Self {
        Self { coeffs }
    }

    /// Unit vector `|n>` (1-based) in a space of dimension `len`.
    pub fn basis(n: usize, len: usize) -> Self {
        let mut v = CVector::zeros(len);
        v[n - 1] = c(1.0);
        Self { coeffs: v }
    }

    pub fn from_column(m: &CMatrix, col: usize) -> Self {
        Self {
            coeffs: m.column(col).into_owned(),
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// `<a, b>_+ = a^dagger eta b` with `eta = E` on the block and `1` beyond.
pub fn physical_inner_product(
    a: &StateVector,
    b: &StateVector,
    dec: &MetricDecomposition,
) -> crate::linalg::C64 {
    let n = dec.order();
    let len = a.len().max(b.len());
    let get = |v: &StateVector, i: usize| {
        if i < v.len() {
            v.coeffs[i]
        } else {
            c(0.0)
        }
    };
    let mut acc = c(0.0);
    for i in 0..n.min(len) {
        let mut eb = c(0.0);
        for j in 0..n.min(len) {
            eb += dec.e_matrix[(i, j)] * get(b, j);
        }
        acc += get(a, i).conj() * eb;
    }
    for i in n..len {
        acc += get(a, i).conj() * get(b, i);
    }
    acc
}

/// `C = E^{-1} P` on the `N` block; `parity[n]` is the `P` eigenvalue of `|n+1>`.
pub fn charge_operator(dec: &MetricDecomposition, parity: &[f64]) -> Result<CMatrix> {
    let n = dec.order();
    if parity.len() < n {
        return Err(Error::InvalidParameter(format!(
            "parity has {} signs, need {n}",
            parity.len()
        )));
    }
    let inv = dec.inverse();
    Ok(CMatrix::from_fn(n, n, |i, j| inv[(i, j)] * parity[j]))
}
