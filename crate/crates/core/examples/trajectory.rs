//! Position expectation value of a state that starts on one box level,
//! with the period of its envelope.

use phqm::dynamics::{default_tau_end, detect_period, prepare_evolution, tau_grid, trajectory};
use phqm::squarewell::{Mode, Model, WellParams};

fn main() -> phqm::Result<()> {
    let m = Model::build(WellParams::new(1.0, 10, Mode::Exact)?)?;
    let s = prepare_evolution(5, &m.sys, &m.dec, 0.0)?;
    let taus = tau_grid(0.0, default_tau_end(), 17);
    let t = trajectory(&s, &taus)?;
    for (tau, x) in t.tau.iter().zip(&t.mean_x) {
        println!(
            "tau = {tau:>7.4}  <X> = {x:+.6e}  norm = {:.10}",
            s.physical_norm(*tau)
        );
    }
    let long = tau_grid(0.0, 64.0 / std::f64::consts::PI, 3201);
    let t = trajectory(&s, &long)?;
    if let Some(p) = detect_period(&t.mean_x, long[1] - long[0]) {
        println!(
            "envelope period {p:.4} (8/pi = {:.4})",
            8.0 / std::f64::consts::PI
        );
    }
    Ok(())
}
