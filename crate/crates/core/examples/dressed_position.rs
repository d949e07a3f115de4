//! Dressed position operator and the first terms of its derivative
//! expansion.

use phqm::observables::dress_position;
use phqm::squarewell::{Mode, Model, WellParams};

fn main() -> phqm::Result<()> {
    let m = Model::build(WellParams::new(1.0, 10, Mode::Exact)?)?;
    let x = dress_position(&m.dec, 1.0, 200, 6)?;
    println!("tail converged at {} basis functions", x.tail_used);
    for xv in [-0.5, 0.0, 0.5] {
        let w: Vec<String> = (0..3)
            .map(|l| {
                let v = x.omega.tilde(l, xv);
                format!("{:+.3e}{:+.3e}i", v.re, v.im)
            })
            .collect();
        println!("x = {xv:+}: omega_0..2 = {}", w.join("  "));
    }
    Ok(())
}
