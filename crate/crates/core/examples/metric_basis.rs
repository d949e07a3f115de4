//! Builds the truncated metric, its eigenbasis and square roots, and the
//! charge operator.

use phqm::linalg::{frobenius, CMatrix};
use phqm::metric::{build_metric_matrix, charge_operator, diagonalize_metric_with, Labeling};
use phqm::squarewell::{parity_signs, Mode, Model, WellParams};

fn main() -> phqm::Result<()> {
    let m = Model::build(WellParams::new(1.0, 10, Mode::Exact)?)?;
    let dec = &m.dec;
    println!("metric eigenvalues:");
    for (k, e) in dec.eps.iter().enumerate() {
        println!("  eps_{:<2} = {e:.10}", k + 1);
    }
    let id = CMatrix::identity(10, 10);
    println!(
        "|E^1/2 E^1/2 - E|    = {:.2e}",
        frobenius(&(&dec.e_half * &dec.e_half - &dec.e_matrix))
    );
    println!(
        "|E^1/2 E^-1/2 - 1|   = {:.2e}",
        frobenius(&(&dec.e_half * &dec.e_minus_half - &id))
    );
    println!("asymmetry of E       = {:.2e}", dec.asymmetry);

    // C needs the PT-normalized system
    let parity = parity_signs(m.sys.tail);
    let sys = m.sys.pt_normalized(&parity)?;
    let pt = diagonalize_metric_with(&build_metric_matrix(&sys)?, Labeling::Ascending)?;
    let c = charge_operator(&pt, &parity)?;
    println!("|C^2 - 1|            = {:.2e}", frobenius(&(&c * &c - id)));
    Ok(())
}
