use proptest::prelude::*;

use phqm::dynamics::{
    autocorrelation, detect_period, prepare_evolution, prepare_from_coeffs, tau_grid, trajectory,
};
use phqm::linalg::{frobenius, CVector, C64};
use phqm::metric::StateVector;
use phqm::observables::{density_and_moments, position_wavefunction, DENSITY_GRID};
use phqm::quad::GaussLegendre;
use phqm::squarewell::{Mode, Model, WellParams};
use phqm::Error;

fn model(z: f64, n: usize) -> Model {
    Model::build(WellParams::new(z, n, Mode::Exact).unwrap()).unwrap()
}

fn quadrature_norm(f: impl Fn(f64) -> f64) -> f64 {
    let gl = GaussLegendre::new(32);
    gl.integrate(-1.0, 0.0, 16, &f) + gl.integrate(0.0, 1.0, 16, &f)
}

#[test]
fn theta_is_hermitian() {
    let m = model(1.0, 10);
    let s = prepare_evolution(3, &m.sys, &m.dec, 0.0).unwrap();
    let t = s.theta();
    assert!(frobenius(&(&t - t.adjoint())) <= 1e-12 * frobenius(&t));
}

#[test]
fn initial_state_is_the_dressed_box_state() {
    let m = model(1.0, 10);
    let nu = m.params().nu();
    for j in [1usize, 4, 10] {
        let s = prepare_evolution(j, &m.sys, &m.dec, 0.5).unwrap();
        // levels near the truncation edge carry a metric error of order nu
        let tol = if j <= 5 { 1e-6 } else { nu };
        assert!((s.physical_norm(0.5) - 1.0).abs() < tol, "j={j}");
        let f = &m.sys.psi_block() * &s.c;
        let reference = position_wavefunction(&StateVector::new(f), &m.dec);
        let evolved = s.evolve_wavefunction(0.5);
        for &x in &[-0.9, -0.3, 0.0, 0.2, 0.8] {
            assert!((reference.eval(x) - evolved.eval(x)).norm() < 1e-10);
        }
    }
}

#[test]
fn quadrature_norm_matches_physical_norm() {
    let m = model(1.0, 10);
    let s = prepare_evolution(2, &m.sys, &m.dec, 0.0).unwrap();
    for tau in [0.0, 1.0, 2.0, 4.0] {
        let wf = s.evolve_wavefunction(tau);
        let q = quadrature_norm(|x| wf.eval(x).norm_sqr());
        assert!((q - s.physical_norm(tau)).abs() < 1e-10);
        assert!((q - 1.0).abs() < 1e-6, "tau={tau}: {q}");
    }
}

#[test]
fn trajectory_starts_at_the_density_mean() {
    let m = model(1.0, 10);
    let s = prepare_evolution(2, &m.sys, &m.dec, 0.0).unwrap();
    let traj = trajectory(&s, &[0.0, 0.7]).unwrap();
    let d = density_and_moments(&s.evolve_wavefunction(0.0).normalized(), DENSITY_GRID).unwrap();
    assert!((traj.mean_x[0] - d.mean_x).abs() < 1e-9);
    let d1 = density_and_moments(&s.evolve_wavefunction(0.7).normalized(), DENSITY_GRID).unwrap();
    assert!((traj.mean_x[1] - d1.mean_x).abs() < 1e-6);
}

#[test]
fn hermitian_limit_is_stationary() {
    let m = model(0.0, 8);
    for j in 1..=3 {
        let s = prepare_evolution(j, &m.sys, &m.dec, 0.0).unwrap();
        let traj = trajectory(&s, &tau_grid(0.0, 5.0, 50)).unwrap();
        assert!(traj.mean_x.iter().all(|v| v.abs() < 1e-12));
    }
}

#[test]
fn out_of_range_levels_are_rejected() {
    let m = model(0.5, 6);
    for j in [0usize, 7] {
        assert!(matches!(
            prepare_evolution(j, &m.sys, &m.dec, 0.0),
            Err(Error::OutOfTruncation { .. })
        ));
    }
    assert!(matches!(
        prepare_from_coeffs(CVector::zeros(3), &m.sys, &m.dec, 0.0),
        Err(Error::InvalidParameter(_))
    ));
}

#[test]
fn two_level_beat_has_the_level_spacing_period() {
    let m = model(1.0, 10);
    let mut c = CVector::zeros(10);
    c[0] = C64::new(1.0, 0.0);
    c[1] = C64::new(1.0, 0.0);
    let s = prepare_from_coeffs(c, &m.sys, &m.dec, 0.0).unwrap();
    let expected = 2.0 * std::f64::consts::PI / (m.sys.energies[1] - m.sys.energies[0]);
    let taus = tau_grid(0.0, 6.0 * expected, 1200);
    let traj = trajectory(&s, &taus).unwrap();
    let period = detect_period(&traj.mean_x, taus[1] - taus[0]).unwrap();
    assert!(
        (period - expected).abs() < 0.01 * expected,
        "{period} vs {expected}"
    );
    assert!((autocorrelation(&traj.mean_x)[0] - 1.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn physical_norm_is_conserved(z in 0.0f64..1.5, v in prop::collection::vec(-1.0f64..1.0, 16), tau in 0.0f64..20.0) {
        let m = model(z, 8);
        let c = CVector::from_fn(8, |i, _| C64::new(v[2 * i], v[2 * i + 1]));
        let s = prepare_from_coeffs(c, &m.sys, &m.dec, 0.0).unwrap();
        let n0 = s.physical_norm(0.0);
        // only the off-diagonal part of the block Gram matrix can move the norm
        let mut off = s.gram_plus.clone();
        off.fill_diagonal(C64::new(0.0, 0.0));
        let bound = 2.0 * off.norm() * s.c.norm_squared();
        prop_assert!((s.physical_norm(tau) - n0).abs() <= bound + 1e-12);
    }
}
