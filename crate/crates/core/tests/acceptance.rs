//! Acceptance suite. Prints one PASS/FAIL line per check and exits non-zero
//! if any check fails. Tolerances come from `acceptance.json`.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::Instant;

use serde::Deserialize;

use phqm::cli::{self, Cli};
use phqm::diagnostics::{ground_shift, s_metric, sigma_capital, sigma_metric};
use phqm::dynamics::{detect_period, prepare_evolution, tau_grid, trajectory};
use phqm::linalg::{frobenius, CMatrix, CVector, C64};
use phqm::metric::{hermitian_h_matrix, physical_inner_product, StateVector};
use phqm::observables::{
    density_and_moments, dress_position, localized_state, normalized_basis_state,
    position_wavefunction, position_wavefunction_callable,
};
use phqm::pseudodiff::{delta_h_matrix, delta_series, grid, potential, BOUND_GRID};
use phqm::squarewell::{chi_matrix, Mode, Model, WellParams};
use phqm::trig::{basis, basis_power_matrix};

#[derive(Deserialize)]
struct Manifest {
    ground_shift: GroundShift,
    table1: Table1,
    table2: Table2,
    sigma_slopes: Slopes,
    hermiticity_gate: Gate,
    properties: Properties,
}

#[derive(Deserialize)]
struct GroundShift {
    z: f64,
    exact: f64,
    pert: f64,
    abs_tol: f64,
    max_seconds: f64,
}

#[derive(Deserialize)]
struct Table1Row {
    order: usize,
    sigma_cap: f64,
    s: f64,
    nu: f64,
}

#[derive(Deserialize)]
struct Table1 {
    z: f64,
    mode: Mode,
    rows: Vec<Table1Row>,
    rel_tol: f64,
    nu_significant_digits: i32,
    max_seconds: f64,
}

#[derive(Deserialize)]
struct Table2Column {
    z: f64,
    delta_x: Vec<f64>,
}

#[derive(Deserialize)]
struct Table2 {
    order: usize,
    coarse_order: usize,
    columns: Vec<Table2Column>,
    abs_tol: f64,
    closed_form_tol: f64,
    coarse_tol: f64,
    max_seconds: f64,
}

#[derive(Deserialize)]
struct SlopePair {
    lower: usize,
    upper: usize,
    slope: f64,
}

#[derive(Deserialize)]
struct Slopes {
    z: f64,
    pairs: Vec<SlopePair>,
    rel_tol: f64,
}

#[derive(Deserialize)]
struct Gate {
    z: Vec<f64>,
    orders: Vec<usize>,
}

#[derive(Deserialize)]
struct Properties {
    z: f64,
    order: usize,
    biorthonormality_tol: f64,
    functional_calculus_tol: f64,
    similarity_tol: f64,
    parseval_tol: f64,
    physical_norm_tol: f64,
    naive_norm_min_variation: f64,
    bound_max_ell: usize,
    sign_margin: f64,
    z_ladder: Vec<f64>,
    trajectory_order: usize,
    envelope_level: usize,
    envelope_period: f64,
    envelope_rel_tol: f64,
    zero_trajectory_tol: f64,
}

#[derive(Default)]
struct Report {
    passed: usize,
    failed: Vec<String>,
}

impl Report {
    fn check(&mut self, id: &str, ok: bool, detail: String) {
        println!("{} {id}: {detail}", if ok { "PASS" } else { "FAIL" });
        if ok {
            self.passed += 1;
        } else {
            self.failed.push(id.to_string());
        }
    }
}

fn model(z: f64, order: usize, mode: Mode) -> Model {
    Model::build(WellParams::new(z, order, mode).expect("valid parameters")).expect("model builds")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn round_sig(v: f64, digits: i32) -> f64 {
    let scale = 10f64.powi(digits - 1 - v.abs().log10().floor() as i32);
    (v * scale).round() / scale
}

fn delta_x(m: &Model, n: usize) -> f64 {
    let s = normalized_basis_state(n, &m.dec).unwrap();
    density_and_moments(&position_wavefunction(&s, &m.dec), 2)
        .unwrap()
        .delta_x
}

fn criterion_1(r: &mut Report, g: &GroundShift) {
    let start = Instant::now();
    let exact = ground_shift(g.z, Mode::Exact).unwrap();
    let pert = ground_shift(g.z, Mode::Perturbative).unwrap();
    let secs = start.elapsed().as_secs_f64();
    r.check(
        "1 eps1 exact",
        (exact - g.exact).abs() <= g.abs_tol,
        format!("{exact:.9} vs {} (tol {:e})", g.exact, g.abs_tol),
    );
    r.check(
        "1 eps1 pert",
        (pert - g.pert).abs() <= g.abs_tol,
        format!("{pert:.9} vs {} (tol {:e})", g.pert, g.abs_tol),
    );
    r.check("1 runtime", secs < g.max_seconds, format!("{secs:.3} s"));
}

fn criterion_2(r: &mut Report, t: &Table1) {
    let start = Instant::now();
    for row in &t.rows {
        let m = model(t.z, row.order, t.mode);
        let y = m.well.h0_block();
        let sig = sigma_capital(&chi_matrix(&m.sys), &y);
        let s = s_metric(&hermitian_h_matrix(&y, &m.dec).unwrap().reference_basis);
        let nu = m.params().nu();
        let n = row.order;
        r.check(
            &format!("2 Sigma_{n}"),
            rel(sig, row.sigma_cap) <= t.rel_tol,
            format!(
                "{sig:.4e} vs {:.1e} ({:+.1}%)",
                row.sigma_cap,
                100.0 * (sig / row.sigma_cap - 1.0)
            ),
        );
        r.check(
            &format!("2 S_{n}"),
            rel(s, row.s) <= t.rel_tol,
            format!(
                "{s:.4e} vs {:.1e} ({:+.1}%)",
                row.s,
                100.0 * (s / row.s - 1.0)
            ),
        );
        r.check(
            &format!("2 nu_{n}"),
            round_sig(nu, t.nu_significant_digits) == row.nu,
            format!(
                "{nu:.4e} rounds to {:.1e}",
                round_sig(nu, t.nu_significant_digits)
            ),
        );
    }
    let secs = start.elapsed().as_secs_f64();
    r.check("2 runtime", secs < t.max_seconds, format!("{secs:.2} s"));
}

fn criterion_3(r: &mut Report, t: &Table2) {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut worst_coarse = (0.0f64, 0.0, 0);
    let mut worst_closed = 0.0f64;
    for col in &t.columns {
        let fine = model(col.z, t.order, Mode::Exact);
        let coarse = model(col.z, t.coarse_order, Mode::Exact);
        for (i, &published) in col.delta_x.iter().enumerate() {
            let n = i + 1;
            let dx = delta_x(&fine, n);
            worst = worst.max((dx - published).abs());
            let d = (dx - delta_x(&coarse, n)).abs();
            if d > worst_coarse.0 {
                worst_coarse = (d, col.z, n);
            }
            if col.z == 0.0 {
                let closed = (1.0 / 3.0 - 2.0 / (PI * PI * (n * n) as f64)).sqrt();
                worst_closed = worst_closed.max((dx - closed).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    r.check(
        "3 Table 2 entries",
        worst <= t.abs_tol,
        format!(
            "max deviation {worst:.2e} over 21 entries (tol {:e})",
            t.abs_tol
        ),
    );
    r.check(
        "3 Z=0 closed form",
        worst_closed <= t.closed_form_tol,
        format!("max deviation {worst_closed:.2e}"),
    );
    r.check(
        "3 N=10 vs N=20",
        worst_coarse.0 < t.coarse_tol,
        format!(
            "max difference {:.2e} at Z={}, n={} (tol {:e})",
            worst_coarse.0, worst_coarse.1, worst_coarse.2, t.coarse_tol
        ),
    );
    r.check("3 runtime", secs < t.max_seconds, format!("{secs:.2} s"));
}

fn criterion_4(r: &mut Report, s: &Slopes) {
    for p in &s.pairs {
        let lo = sigma_metric(&model(s.z, p.lower, Mode::Exact).dec);
        let hi = sigma_metric(&model(s.z, p.upper, Mode::Exact).dec);
        let slope = hi - lo;
        r.check(
            &format!("4 sigma_{} - sigma_{}", p.upper, p.lower),
            rel(slope, p.slope) <= s.rel_tol,
            format!("{slope:.3e} vs {:.1e}", p.slope),
        );
    }
}

fn criterion_5(r: &mut Report, g: &Gate) {
    for mode in [Mode::Exact, Mode::Perturbative] {
        let mut worst = (0.0f64, 0.0, 0);
        for &z in &g.z {
            for &n in &g.orders {
                let m = model(z, n, mode);
                let s = s_metric(
                    &hermitian_h_matrix(&m.well.h0_block(), &m.dec)
                        .unwrap()
                        .reference_basis,
                );
                let ratio = s / m.params().nu();
                if ratio > worst.0 {
                    worst = (ratio, z, n);
                }
            }
        }
        r.check(
            &format!("5 S_N <= nu_N ({mode})"),
            worst.0 <= 1.0,
            format!(
                "largest S_N/nu_N = {:.3} at Z={}, N={}",
                worst.0, worst.1, worst.2
            ),
        );
    }
}

fn power_traces(m: &CMatrix, k: usize) -> Vec<C64> {
    let mut p = m.clone();
    let mut out = Vec::new();
    for _ in 0..k {
        out.push(p.trace());
        p = &p * m;
    }
    out
}

fn trace_mismatch(a: &CMatrix, b: &CMatrix) -> f64 {
    power_traces(a, 4)
        .iter()
        .zip(power_traces(b, 4))
        .map(|(x, y)| (x - y).norm() / y.norm().max(1.0))
        .fold(0.0, f64::max)
}

fn test_state(len: usize, seed: f64) -> StateVector {
    StateVector::new(CVector::from_fn(len, |k, _| {
        let k = k as f64 + 1.0;
        C64::from_polar(1.0 / k, seed * k + 0.3 * k * k)
    }))
}

fn criterion_6(r: &mut Report, p: &Properties) {
    let m = model(p.z, p.order, Mode::Exact);
    let n = p.order;

    // (a)
    let bi = m.sys.biorthonormality_residual();
    r.check(
        "6a biorthonormality",
        bi <= p.biorthonormality_tol,
        format!("{bi:.2e}"),
    );
    let id = CMatrix::identity(n, n);
    let sq =
        frobenius(&(&m.dec.e_half * &m.dec.e_half - &m.dec.e_matrix)) / frobenius(&m.dec.e_matrix);
    let inv = frobenius(&(&m.dec.e_half * &m.dec.e_minus_half - &id));
    let ok = sq <= p.functional_calculus_tol && inv <= p.functional_calculus_tol;
    r.check(
        "6a metric square roots",
        ok,
        format!("|E^1/2 E^1/2 - E| = {sq:.1e}, |E^1/2 E^-1/2 - 1| = {inv:.1e}"),
    );
    let (a, b) = (test_state(3 * n, 0.7), test_state(3 * n, 1.9));
    let rho = |s: &StateVector| {
        let mut v = s.coeffs.clone();
        let head = &m.dec.e_half * s.coeffs.rows(0, n);
        v.rows_mut(0, n).copy_from(&head);
        v
    };
    let lhs = physical_inner_product(&a, &b, &m.dec);
    let rhs = rho(&a).dotc(&rho(&b));
    r.check(
        "6a rho is unitary",
        (lhs - rhs).norm() <= 1e-12,
        format!("{:.1e}", (lhs - rhs).norm()),
    );

    // (b)
    let y = m.well.h0_block();
    let q = hermitian_h_matrix(&y, &m.dec).unwrap().reference_basis;
    let dh = trace_mismatch(&q, &y);
    let xb = basis_power_matrix(1, n);
    let xd = &m.dec.e_minus_half * &xb * &m.dec.e_half;
    let dx = trace_mismatch(&xd, &xb);
    r.check(
        "6b similarity invariance",
        dh <= p.similarity_tol && dx <= p.similarity_tol,
        format!("power traces of h: {dh:.1e}, of X: {dx:.1e}"),
    );

    // (c)
    let wa = position_wavefunction(&a, &m.dec);
    let wb = position_wavefunction(&b, &m.dec);
    let closed = (wa.overlap(&wb) - lhs).norm();
    let quad = {
        let gl = phqm::quad::GaussLegendre::new(32);
        let f = |x: f64| wa.eval(x).conj() * wb.eval(x);
        (gl.integrate(-1.0, 1.0, 64, f) - lhs).norm()
    };
    let fa = a.coeffs.clone();
    let callable = position_wavefunction_callable(
        std::sync::Arc::new(move |x| {
            fa.iter()
                .enumerate()
                .map(|(k, v)| v * basis(k + 1, x))
                .sum()
        }),
        &m.dec,
    );
    let aa = physical_inner_product(&a, &a, &m.dec).re;
    let via_callable = (callable.overlap(&callable).re - aa)
        .abs()
        .max((callable.norm_plus - aa).abs());
    r.check(
        "6c wave-function map is unitary",
        closed.max(quad).max(via_callable) <= p.parseval_tol,
        format!(
            "closed form {closed:.1e}, quadrature {quad:.1e}, callable state {via_callable:.1e}"
        ),
    );

    // (d)
    let mt = model(p.z, p.trajectory_order, Mode::Exact);
    let setup = prepare_evolution(1, &mt.sys, &mt.dec, 0.0).unwrap();
    let taus = tau_grid(0.0, 16.0 / PI, 400);
    let spread = |f: &dyn Fn(f64) -> f64| {
        let v: Vec<f64> = taus.iter().map(|&t| f(t)).collect();
        v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
    };
    let phys = spread(&|t| setup.physical_norm(t));
    let naive = spread(&|t| setup.naive_norm(t));
    r.check(
        "6d physical norm conserved",
        phys <= p.physical_norm_tol,
        format!("variation {phys:.2e}"),
    );
    r.check(
        "6d naive norm not conserved",
        naive > p.naive_norm_min_variation,
        format!("variation {naive:.2e}"),
    );

    // (e), (f)
    let (_, delta) = delta_h_matrix(&y, &m.dec);
    let op = delta_series(&delta, 12, p.z).unwrap();
    let worst = (0..=p.bound_max_ell)
        .map(|l| op.series[l].max_abs(BOUND_GRID) / op.bound(l))
        .fold(0.0, f64::max);
    r.check(
        "6e coefficient bound",
        worst <= 1.0,
        format!(
            "largest max|delta_l| / (M 2^l/l!) = {worst:.3} for l <= {}",
            p.bound_max_ell
        ),
    );
    let mismatches = grid(BOUND_GRID + 1)
        .into_iter()
        .filter(|x| x.abs() > p.sign_margin && x.abs() < 1.0 - p.sign_margin)
        .filter(|&x| {
            let iv = (phqm::linalg::I * potential(x, p.z)).re;
            op.tilde(0, x).im.signum() != iv.signum()
        })
        .count();
    r.check(
        "6f sign of Im delta_0 follows iv",
        mismatches == 0,
        format!("{mismatches} mismatching grid points"),
    );

    // (g)
    let small = p.trajectory_order;
    let measures: Vec<[f64; 4]> = p
        .z_ladder
        .iter()
        .map(|&z| {
            let m = model(z, small, Mode::Exact);
            let metric = frobenius(&(&m.dec.e_matrix - CMatrix::identity(small, small)));
            let f = localized_state(1.0 / 3.0, &m.dec).unwrap().l2_norm();
            let (_, d) = delta_h_matrix(&m.well.h0_block(), &m.dec);
            let ds = delta_series(&d, 12, z).unwrap();
            let dmax = ds.series.iter().map(|s| s.max_abs(200)).fold(0.0, f64::max);
            let om = dress_position(&m.dec, z, 10 * small, 12).unwrap();
            let omax = om
                .omega
                .series
                .iter()
                .map(|s| s.max_abs(200))
                .fold(0.0, f64::max);
            [metric, f, dmax, omax]
        })
        .collect();
    let names = ["|E - 1|", "|F(., 1/3)|", "max delta_l", "max omega_l"];
    for (k, name) in names.iter().enumerate() {
        let seq: Vec<f64> = measures.iter().map(|m| m[k]).collect();
        let monotone = seq.windows(2).all(|w| w[1] < w[0]);
        let vanishes = *seq.last().unwrap() <= 1e-12;
        r.check(
            &format!("6g Z->0 degeneration of {name}"),
            monotone && vanishes,
            format!(
                "{}",
                seq.iter()
                    .map(|v| format!("{v:.2e}"))
                    .collect::<Vec<_>>()
                    .join(" > ")
            ),
        );
    }

    // (h)
    let m0 = model(0.0, p.trajectory_order, Mode::Exact);
    let zero = (1..=p.trajectory_order)
        .map(|j| {
            let s = prepare_evolution(j, &m0.sys, &m0.dec, 0.0).unwrap();
            trajectory(&s, &taus)
                .unwrap()
                .mean_x
                .iter()
                .fold(0.0f64, |a, v| a.max(v.abs()))
        })
        .fold(0.0, f64::max);
    r.check(
        "6h Hermitian trajectories vanish",
        zero <= p.zero_trajectory_tol,
        format!("max |<X>| = {zero:.1e}"),
    );
    let s5 = prepare_evolution(p.envelope_level, &mt.sys, &mt.dec, 0.0).unwrap();
    let long = tau_grid(0.0, 4.0 * p.envelope_period, 3201);
    let tr = trajectory(&s5, &long).unwrap();
    let period = detect_period(&tr.mean_x, long[1] - long[0]).unwrap_or(f64::NAN);
    r.check(
        "6h envelope period",
        rel(period, p.envelope_period) <= p.envelope_rel_tol,
        format!("{period:.4} vs 8/pi = {:.4}", p.envelope_period),
    );
}

/// Figure data regenerated and compared with the stored fixtures.
fn criterion_7(r: &mut Report) {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    for k in 1..=13u32 {
        let path = dir.join(format!("fig{k}.csv"));
        let stored = match std::fs::read_to_string(&path) {
            Ok(s) => s,
            Err(e) => {
                r.check(&format!("7 fig{k}"), false, format!("missing fixture: {e}"));
                continue;
            }
        };
        let args = fixture_args(&stored);
        let cli = <Cli as clap::Parser>::parse_from(args);
        let cfg = cli::resolve(&cli).unwrap();
        let fresh = cli::run(&cli.command, &cfg).unwrap().to_csv(&cfg);
        let worst = compare_csv(&stored, &fresh);
        r.check(
            &format!("7 fig{k} regression"),
            worst.is_some_and(|w| w <= 1e-9),
            match worst {
                Some(w) => format!("max relative deviation {w:.1e}"),
                None => "layout differs from fixture".into(),
            },
        );
    }
}

/// Arguments stored in the fixture's `# args` line.
fn fixture_args(text: &str) -> Vec<String> {
    let line = text
        .lines()
        .find_map(|l| l.strip_prefix("# args "))
        .expect("fixture records its arguments");
    std::iter::once("phqm".to_string())
        .chain(line.split_whitespace().map(String::from))
        .collect()
}

fn compare_csv(stored: &str, fresh: &str) -> Option<f64> {
    let body = |t: &str| -> Vec<String> {
        t.lines()
            .filter(|l| !l.starts_with('#'))
            .map(String::from)
            .collect()
    };
    let (a, b) = (body(stored), body(fresh));
    if a.len() != b.len() || a.first() != b.first() {
        return None;
    }
    let mut worst = 0.0f64;
    for (la, lb) in a.iter().zip(&b).skip(1) {
        let (fa, fb): (Vec<&str>, Vec<&str>) = (la.split(',').collect(), lb.split(',').collect());
        if fa.len() != fb.len() {
            return None;
        }
        for (x, y) in fa.iter().zip(&fb) {
            match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(u), Ok(v)) => {
                    let scale = u.abs().max(v.abs()).max(1e-6);
                    worst = worst.max((u - v).abs() / scale);
                }
                _ if x == y => {}
                _ => return None,
            }
        }
    }
    Some(worst)
}

fn main() {
    let text =
        std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("acceptance.json"))
            .expect("acceptance manifest");
    let manifest: Manifest = serde_json::from_str(&text).expect("manifest parses");
    let mut r = Report::default();
    criterion_1(&mut r, &manifest.ground_shift);
    criterion_2(&mut r, &manifest.table1);
    criterion_3(&mut r, &manifest.table2);
    criterion_4(&mut r, &manifest.sigma_slopes);
    criterion_5(&mut r, &manifest.hermiticity_gate);
    criterion_6(&mut r, &manifest.properties);
    criterion_7(&mut r);
    println!("acceptance: {} passed, {} failed", r.passed, r.failed.len());
    if !r.failed.is_empty() {
        println!("failed: {}", r.failed.join("; "));
        std::process::exit(1);
    }
}
