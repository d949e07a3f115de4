//! Levels of the well at a few couplings, exact roots next to the
//! perturbative ones.

use phqm::squarewell::{level_data, nu_n, Mode, SquareWell, WellParams};

fn main() -> phqm::Result<()> {
    for z in [0.5, 1.0, 3.0] {
        println!("Z = {z}  (nu_10 = {:.3e})", nu_n(z, 10));
        println!(
            "{:>3} {:>14} {:>14} {:>12}",
            "n", "E exact", "E pert", "diff"
        );
        for n in 1..=6 {
            let e = level_data(n, z, Mode::Exact)?.energy;
            let p = level_data(n, z, Mode::Perturbative)?.energy;
            println!("{n:>3} {e:>14.8} {p:>14.8} {:>12.3e}", e - p);
        }
        let well = SquareWell::new(WellParams::new(z, 10, Mode::Exact)?)?;
        let sys = well.spectral_system()?;
        println!(
            "biorthonormality residual: {:.2e}\n",
            sys.biorthonormality_residual()
        );
    }
    Ok(())
}
