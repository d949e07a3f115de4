//! Position densities of normalized box states and how their spread moves
//! away from the Hermitian value.

use std::f64::consts::PI;

use phqm::observables::{
    density_and_moments, normalized_basis_state, position_wavefunction, DENSITY_GRID,
};
use phqm::squarewell::{Mode, Model, WellParams};

fn main() -> phqm::Result<()> {
    println!(
        "{:>4} {:>4} {:>14} {:>14} {:>12}",
        "Z", "n", "<x>", "dx", "dx - dx(0)"
    );
    for z in [0.5, 1.0] {
        let m = Model::build(WellParams::new(z, 20, Mode::Exact)?)?;
        for n in 1..=4 {
            let wf = position_wavefunction(&normalized_basis_state(n, &m.dec)?, &m.dec);
            let d = density_and_moments(&wf, DENSITY_GRID)?;
            let k = PI * n as f64;
            let dx0 = (1.0 / 3.0 - 2.0 / (k * k)).sqrt();
            println!(
                "{z:>4} {n:>4} {:>14.6e} {:>14.10} {:>12.3e}",
                d.mean_x,
                d.delta_x,
                d.delta_x - dx0
            );
        }
    }
    Ok(())
}
