//! The equivalent Hermitian Hamiltonian on the truncated block.

use phqm::linalg::frobenius;
use phqm::metric::hermitian_h_matrix;
use phqm::squarewell::{Mode, Model, WellParams};

fn main() -> phqm::Result<()> {
    for n in [10, 15, 20] {
        let m = Model::build(WellParams::new(1.0, n, Mode::Exact)?)?;
        let h = hermitian_h_matrix(&m.well.h0_block(), &m.dec)?;
        let q = &h.reference_basis;
        let s = frobenius(&(q - q.adjoint())) / frobenius(q);
        println!(
            "N = {n:>2}: relative anti-Hermitian part {s:.3e} (nu = {:.3e})",
            m.params().nu()
        );
    }
    let m = Model::build(WellParams::new(1.0, 6, Mode::Exact)?)?;
    let h = hermitian_h_matrix(&m.well.h0_block(), &m.dec)?;
    println!("\nh in the reference basis, N = 6 (real parts):");
    for r in 0..6 {
        let row: Vec<String> = (0..6)
            .map(|c| format!("{:>10.4}", h.reference_basis[(r, c)].re))
            .collect();
        println!("{}", row.join(" "));
    }
    Ok(())
}
