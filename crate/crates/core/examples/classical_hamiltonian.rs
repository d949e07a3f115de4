//! Derivative expansion of the Hermitian Hamiltonian and the classical
//! Hamiltonian it implies.

use phqm::pseudodiff::{classical_hamiltonian, delta_h_matrix, delta_series, DEFAULT_ELL_MAX};
use phqm::squarewell::{Mode, Model, WellParams};

fn main() -> phqm::Result<()> {
    let z = 1.0;
    let m = Model::build(WellParams::new(z, 20, Mode::Exact)?)?;
    let (_, delta) = delta_h_matrix(&m.well.h0_block(), &m.dec);
    let op = delta_series(&delta, DEFAULT_ELL_MAX, z)?;

    println!(
        "{:>6} {:>24} {:>24} {:>24}",
        "x", "delta_0", "delta_1", "delta_2"
    );
    for x in [-0.75, -0.25, 0.25, 0.75] {
        let f = |l| {
            let v = op.tilde(l, x);
            format!("{:>11.3e}{:+11.3e}i", v.re, v.im)
        };
        println!("{x:>6} {:>24} {:>24} {:>24}", f(0), f(1), f(2));
    }

    println!("\nH_c(x, p) - p^2 at x = 0.5");
    for p in [0.0, 1.0, 2.0, 4.0] {
        let h = classical_hamiltonian(&op, 0.5, p, None)?;
        println!(
            "  p = {p}: {:+.6e}  (dropped orders < {:.1e})",
            h - p * p,
            op.tail_bound(DEFAULT_ELL_MAX, p)
        );
    }
    Ok(())
}
