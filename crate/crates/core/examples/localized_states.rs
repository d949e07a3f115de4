//! Smooth part of the states localized at a point.

use phqm::observables::localized_state;
use phqm::squarewell::{Mode, Model, WellParams};

fn main() -> phqm::Result<()> {
    let m = Model::build(WellParams::new(1.0, 20, Mode::Exact)?)?;
    for y in [-0.5, 0.0, 0.5] {
        let s = localized_state(y, &m.dec)?;
        println!("y = {y:+}: |F| = {:.4e}", s.l2_norm());
        for (x, f) in s.sample(9) {
            println!("   x = {x:+.2}  F = {:+.4e} {:+.4e}i", f.re, f.im);
        }
    }
    Ok(())
}
