use std::f64::consts::PI;

use proptest::prelude::*;

use phqm::squarewell::{
    dual_eval, eigen_residual, eigenfunction_eval, h0_matrix, level_data, level_equation, nu_n,
    overlap_by_quadrature, overlaps, solve_tn, Mode, OverlapCheck, SquareWell, WellParams, Z_STAR,
};
use phqm::Error;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_levels_solve_the_equation(z in 0.01f64..3.0, n in 1usize..15) {
        let l = level_data(n, z, Mode::Exact).unwrap();
        prop_assert!(level_equation(l.t, z).abs() <= 1e-10 * (1.0 + 2.0 * l.t));
        prop_assert!((l.energy - (l.t * l.t - l.s * l.s)).abs() <= 1e-12 * l.energy);
        for &x in &[-0.83, -0.31, 0.27, 0.74] {
            let r = eigen_residual(&l, x).unwrap().norm();
            let scale = l.energy * eigenfunction_eval(&l, x).unwrap().norm().max(1e-3);
            prop_assert!(r <= 1e-9 * scale, "n={} x={} r={}", n, x, r);
        }
    }

    #[test]
    fn perturbative_root_is_sixth_order_close(z in 0.01f64..1.0, n in 1usize..12) {
        let exact = solve_tn(n, z, Mode::Exact).unwrap();
        let pert = solve_tn(n, z, Mode::Perturbative).unwrap();
        let nu = nu_n(z, n);
        let k = PI * n as f64 / 2.0;
        // the sixth-order coefficient grows like (pi n)^4
        let bound = 3.0 * nu.powi(6) * k * (1.0 + (PI * n as f64).powi(4) / 36.0) + 1e-14 * k;
        prop_assert!((exact - pert).abs() <= bound);
    }

    #[test]
    fn closed_overlaps_match_quadrature(z in 0.0f64..2.0, n in 1usize..9, m in 1usize..12) {
        let l = level_data(n, z, Mode::Exact).unwrap();
        let (psi, phi) = overlaps(&l, 12, OverlapCheck::Off).unwrap();
        let qp = overlap_by_quadrature(&l, m, false);
        let qf = overlap_by_quadrature(&l, m, true);
        prop_assert!((psi[m - 1] - qp).norm() <= 1e-10);
        prop_assert!((phi[m - 1] - qf).norm() <= 1e-10);
    }
}

#[test]
fn levels_are_ordered_and_real_below_the_exceptional_point() {
    for &z in &[0.5, 2.0, 4.0] {
        let w = SquareWell::new(WellParams::new(z, 10, Mode::Exact).unwrap()).unwrap();
        let e = w.energies();
        assert!(e.windows(2).all(|p| p[0] < p[1]));
        assert!(e[0] > 0.0);
    }
}

#[test]
fn two_lowest_levels_approach_each_other_near_the_exceptional_point() {
    let gap = |z: f64| {
        let w = SquareWell::new(WellParams::new(z, 2, Mode::Exact).unwrap()).unwrap();
        let e = w.energies();
        e[1] - e[0]
    };
    assert!(gap(4.4) < gap(3.0) && gap(3.0) < gap(1.0));
    assert!(matches!(
        WellParams::new(Z_STAR, 5, Mode::Exact),
        Err(Error::ExceptionalPoint { .. })
    ));
}

#[test]
fn biorthonormality_holds_to_the_default_tail() {
    for n in [10usize, 25] {
        let w = SquareWell::new(WellParams::new(1.0, n, Mode::Exact).unwrap()).unwrap();
        let r = w.spectral_system().unwrap().biorthonormality_residual();
        assert!(r < 1e-8, "N={n}: {r}");
    }
}

#[test]
fn hermitian_limit_is_the_box() {
    let h = h0_matrix(6, 0.0);
    for i in 0..6 {
        for j in 0..6 {
            let e = if i == j {
                (PI * (i + 1) as f64 / 2.0).powi(2)
            } else {
                0.0
            };
            assert!((h[(i, j)].re - e).abs() < 1e-12 && h[(i, j)].im == 0.0);
        }
    }
    for n in 1..=5 {
        let a = level_data(n, 0.0, Mode::Exact).unwrap();
        let b = level_data(n, 0.0, Mode::Perturbative).unwrap();
        assert_eq!(a.energy, b.energy);
    }
}

#[test]
fn evaluation_outside_the_well_is_rejected() {
    let l = level_data(2, 0.5, Mode::Exact).unwrap();
    assert!(matches!(
        eigenfunction_eval(&l, 1.2),
        Err(Error::Domain { .. })
    ));
    assert!(matches!(dual_eval(&l, -1.01), Err(Error::Domain { .. })));
    assert!(eigenfunction_eval(&l, 1.0).unwrap().norm() < 1e-12);
}

#[test]
fn dual_functions_are_biorthonormal_by_quadrature() {
    let gl = phqm::quad::GaussLegendre::new(32);
    for mode in [Mode::Exact, Mode::Perturbative] {
        let a = level_data(1, 1.0, mode).unwrap();
        let b = level_data(2, 1.0, mode).unwrap();
        let ip = |p: &_, q: &_| {
            let f = |x: f64| dual_eval(p, x).unwrap().conj() * eigenfunction_eval(q, x).unwrap();
            gl.integrate(-1.0, 0.0, 16, f) + gl.integrate(0.0, 1.0, 16, f)
        };
        let tol = if mode == Mode::Exact { 1e-10 } else { 1e-3 };
        assert!((ip(&a, &a) - 1.0).norm() < tol);
        assert!(ip(&a, &b).norm() < tol);
    }
}
