//! Command-line front end: sweeps over `(Z, N, n)` written as CSV.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{ground_shift, metric_report, s_metric, sigma_capital, sigma_metric};
use crate::dynamics::{
    default_tau_end, prepare_evolution, tau_grid, trajectory, DEFAULT_TAU_POINTS,
};
use crate::error::{Error, Result};
use crate::metric::hermitian_h_matrix;
use crate::observables::{
    density_and_moments, dress_position, localized_state, normalized_basis_state,
    position_wavefunction, DENSITY_GRID,
};
use crate::pseudodiff::{
    classical_hamiltonian, delta_h_matrix, delta_series, grid, potential, PseudoDiffOp,
    DEFAULT_ELL_MAX,
};
use crate::squarewell::{chi_matrix, level_data, Mode, Model, WellParams};
use crate::trig::sine;

#[derive(Debug, Parser)]
#[command(
    name = "phqm",
    version,
    about = "PT-symmetric square well: metric, observables and dynamics"
)]
pub struct Cli {
    #[command(flatten)]
    pub opts: CommonOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonOpts {
    /// Non-Hermiticity parameter(s), comma separated.
    #[arg(
        long = "Z",
        global = true,
        value_delimiter = ',',
        allow_hyphen_values = true
    )]
    pub z: Option<Vec<f64>>,
    /// Truncation order(s): `10,15` or `2..25`.
    #[arg(long = "N", global = true)]
    pub order: Option<String>,
    /// Level or state index(es): `1,3` or `1..7`.
    #[arg(long = "n", global = true)]
    pub levels: Option<String>,
    /// `exact` or `pert` (perturbative roots).
    #[arg(long, global = true, value_parser = parse_mode)]
    pub mode: Option<Mode>,
    /// Highest derivative order kept in the expansions.
    #[arg(long = "ell-max", global = true)]
    pub ell_max: Option<usize>,
    /// Reference-basis size kept beyond the block.
    #[arg(long, global = true)]
    pub tail: Option<usize>,
    /// Number of uniform grid points on [-1, 1].
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Output directory; stdout when absent.
    #[arg(long, global = true, env = "PHQM_OUT")]
    pub out: Option<PathBuf>,
    /// JSON file with defaults for any of these options.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Levels t_n, s_n, E_n.
    Spectrum,
    /// Metric accuracy report per (Z, N).
    Metric,
    /// Matrix of the equivalent Hermitian Hamiltonian.
    Hermitian,
    /// Coefficient functions of the derivative expansion of h.
    DeltaSeries,
    /// Classical Hamiltonian on an (x, p) grid.
    Classical {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        p: Option<Vec<f64>>,
    },
    /// Position wave functions of normalized box states.
    Position,
    /// Probability densities and their shift from Z = 0.
    Density,
    /// Position expectation value and uncertainty.
    Uncertainty,
    /// Smooth part of the localized states.
    Localized {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y: Option<Vec<f64>>,
    },
    /// Position expectation value along a trajectory.
    Evolve {
        #[arg(long)]
        tau_end: Option<f64>,
        #[arg(long)]
        tau_points: Option<usize>,
    },
    /// Sigma_N, S_N and nu_N.
    Table1,
    /// Delta x for box states at several Z.
    Table2,
    /// Data behind figure K (1..=13).
    Figdata { k: u32 },
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Either a scalar or a list in the JSON config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

/// Settings read from `--config`; flags take precedence.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(alias = "Z")]
    pub z: Option<OneOrMany<f64>>,
    #[serde(alias = "N")]
    pub order: Option<OneOrMany<usize>>,
    #[serde(alias = "n")]
    pub levels: Option<OneOrMany<usize>>,
    pub mode: Option<Mode>,
    pub ell_max: Option<usize>,
    #[serde(alias = "tail_M")]
    pub tail: Option<usize>,
    #[serde(alias = "grid_points")]
    pub grid: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub p: Option<Vec<f64>>,
    pub y: Option<Vec<f64>>,
    pub tau_end: Option<f64>,
    pub tau_points: Option<usize>,
}

/// Fully resolved run settings, echoed into every CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub z: Vec<f64>,
    pub order: Vec<usize>,
    pub levels: Vec<usize>,
    pub mode: Mode,
    pub ell_max: usize,
    pub tail: Option<usize>,
    pub grid: usize,
    #[serde(skip)]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_points: Option<usize>,
}

/// Parses `1,3,5..7` into a sorted, de-duplicated list.
pub fn parse_index_list(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidParameter(format!("cannot parse index list {s:?}"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: usize = a.trim().parse().map_err(|_| bad())?;
            let b = b.trim().trim_start_matches('=');
            let b: usize = b.parse().map_err(|_| bad())?;
            if b < a {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn sorted_floats(mut v: Vec<f64>) -> Result<Vec<f64>> {
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter(
            "value list must be finite and non-empty".into(),
        ));
    }
    v.sort_by(f64::total_cmp);
    v.dedup();
    Ok(v)
}

struct Defaults {
    z: Vec<f64>,
    order: Vec<usize>,
    levels: Vec<usize>,
    mode: Mode,
}

fn defaults(command: &Command) -> Defaults {
    let d = |z: &[f64], order: &[usize], levels: std::ops::RangeInclusive<usize>, mode| Defaults {
        z: z.to_vec(),
        order: order.to_vec(),
        levels: levels.collect(),
        mode,
    };
    match command {
        Command::Table1 => d(&[1.0], &[10, 15, 20, 25], 1..=1, Mode::Perturbative),
        Command::Table2 => d(&[0.0, 0.5, 1.0], &[20], 1..=7, Mode::Exact),
        Command::Figdata { k } => match k {
            1..=3 => d(
                &[1.0],
                &(2..=25).collect::<Vec<_>>(),
                1..=1,
                Mode::Perturbative,
            ),
            8 => d(&[0.3, 0.7, 1.0], &[20], 1..=2, Mode::Exact),
            9 => d(&[1.0], &[20], 3..=8, Mode::Exact),
            11 => d(&[0.0, 0.5, 0.7, 1.0], &[20], 1..=1, Mode::Exact),
            12 => d(&[1.0], &[10], 1..=2, Mode::Exact),
            13 => d(&[1.0], &[10], 3..=7, Mode::Exact),
            _ => d(&[1.0], &[20], 1..=1, Mode::Exact),
        },
        Command::Evolve { .. } => d(&[1.0], &[10], 1..=1, Mode::Exact),
        _ => d(&[1.0], &[10], 1..=5, Mode::Exact),
    }
}

fn command_name(command: &Command) -> String {
    match command {
        Command::Spectrum => "spectrum".into(),
        Command::Metric => "metric".into(),
        Command::Hermitian => "hermitian".into(),
        Command::DeltaSeries => "delta-series".into(),
        Command::Classical { .. } => "classical".into(),
        Command::Position => "position".into(),
        Command::Density => "density".into(),
        Command::Uncertainty => "uncertainty".into(),
        Command::Localized { .. } => "localized".into(),
        Command::Evolve { .. } => "evolve".into(),
        Command::Table1 => "table1".into(),
        Command::Table2 => "table2".into(),
        Command::Figdata { k } => format!("fig{k}"),
    }
}

/// Merges flags, the optional config file and per-command defaults.
pub fn resolve(cli: &Cli) -> Result<RunConfig> {
    let file: ConfigFile = match &cli.opts.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::InvalidParameter(format!("cannot read config {}: {e}", path.display()))
            })?;
            serde_json::from_str(&text).map_err(|e| {
                Error::InvalidParameter(format!("bad config {}: {e}", path.display()))
            })?
        }
        None => ConfigFile::default(),
    };
    let o = &cli.opts;
    let def = defaults(&cli.command);
    let z = match (&o.z, file.z) {
        (Some(v), _) => v.clone(),
        (None, Some(v)) => v.into_vec(),
        (None, None) => def.z,
    };
    let order = match (&o.order, file.order) {
        (Some(s), _) => parse_index_list(s)?,
        (None, Some(v)) => v.into_vec(),
        (None, None) => def.order,
    };
    let levels = match (&o.levels, file.levels) {
        (Some(s), _) => parse_index_list(s)?,
        (None, Some(v)) => v.into_vec(),
        (None, None) => def.levels,
    };
    let mut order = order;
    order.sort_unstable();
    order.dedup();
    if order.contains(&0) {
        return Err(Error::InvalidParameter("order N must be at least 1".into()));
    }
    let mut levels = levels;
    levels.sort_unstable();
    levels.dedup();
    if levels.contains(&0) {
        return Err(Error::InvalidParameter("level indices start at 1".into()));
    }
    let z = sorted_floats(z)?;
    for &zz in &z {
        crate::squarewell::check_z(zz)?;
    }
    let (mut p, mut y, mut tau_end, mut tau_points) =
        (file.p, file.y, file.tau_end, file.tau_points);
    match &cli.command {
        Command::Classical { p: Some(v) } => p = Some(v.clone()),
        Command::Localized { y: Some(v) } => y = Some(v.clone()),
        Command::Evolve {
            tau_end: te,
            tau_points: tp,
        } => {
            tau_end = te.or(tau_end);
            tau_points = tp.or(tau_points);
        }
        _ => {}
    }
    let grid = o.grid.or(file.grid).unwrap_or(DENSITY_GRID);
    if grid < 2 {
        return Err(Error::InvalidParameter(
            "grid needs at least 2 points".into(),
        ));
    }
    Ok(RunConfig {
        command: command_name(&cli.command),
        z,
        order,
        levels,
        mode: o.mode.or(file.mode).unwrap_or(def.mode),
        ell_max: o.ell_max.or(file.ell_max).unwrap_or(DEFAULT_ELL_MAX),
        tail: o.tail.or(file.tail),
        grid,
        output_dir: o.out.clone().or(file.output_dir),
        p,
        y,
        tau_end,
        tau_points,
    })
}

/// One CSV field.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<Mode> for Cell {
    fn from(v: Mode) -> Self {
        Cell::Text(v.to_string())
    }
}

/// C-style `%.10e`: ten mantissa digits, signed exponent of at least two digits.
pub fn format_float(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.10e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", exp.abs())
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => f.write_str(&format_float(*v)),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(name: impl Into<String>, header: &[&'static str]) -> Self {
        Self {
            name: name.into(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    /// CSV text with `#` metadata lines, header and rows, LF endings.
    pub fn to_csv(&self, config: &RunConfig) -> String {
        let mut s = String::new();
        s.push_str(&format!("# phqm {}\n", env!("CARGO_PKG_VERSION")));
        s.push_str(&format!(
            "# config {}\n",
            serde_json::to_string(config).expect("config serializes")
        ));
        s.push_str(&self.header.join(","));
        s.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::to_string).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }
}

fn params(cfg: &RunConfig, z: f64, order: usize) -> Result<WellParams> {
    match cfg.tail {
        Some(t) => WellParams::with_tail(z, order, cfg.mode, t.max(order)),
        None => WellParams::new(z, order, cfg.mode),
    }
}

/// Upper limit for the adaptive tail of dressed observables.
fn dressing_tail(cfg: &RunConfig, order: usize) -> usize {
    cfg.tail.unwrap_or(10 * order).max(order)
}

fn cells(cfg: &RunConfig) -> Vec<(f64, usize)> {
    cfg.z
        .iter()
        .flat_map(|&z| cfg.order.iter().map(move |&n| (z, n)))
        .collect()
}

/// Runs `f` on every `(Z, N)` cell in parallel and concatenates rows in order.
fn sweep<F>(cfg: &RunConfig, f: F) -> Result<Vec<Vec<Cell>>>
where
    F: Fn(f64, usize) -> Result<Vec<Vec<Cell>>> + Sync,
{
    let parts = cells(cfg)
        .into_par_iter()
        .map(|(z, n)| f(z, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().flatten().collect())
}

fn check_levels(levels: &[usize], order: usize) -> Result<()> {
    match levels.iter().find(|&&j| j > order) {
        Some(&j) => Err(Error::OutOfTruncation { j, order }),
        None => Ok(()),
    }
}

fn spectrum(cfg: &RunConfig) -> Result<Table> {
    let mut t = Table::new("spectrum", &["Z", "n", "mode", "t", "s", "E"]);
    for &z in &cfg.z {
        let levels = cfg
            .levels
            .par_iter()
            .map(|&n| level_data(n, z, cfg.mode))
            .collect::<Result<Vec<_>>>()?;
        for l in levels {
            t.rows.push(vec![
                z.into(),
                l.n.into(),
                cfg.mode.into(),
                l.t.into(),
                l.s.into(),
                l.energy.into(),
            ]);
        }
    }
    Ok(t)
}

fn metric(cfg: &RunConfig) -> Result<Table> {
    let mut t = Table::new(
        "metric",
        &[
            "Z",
            "N",
            "mode",
            "sigma_N",
            "Sigma_N",
            "S_N",
            "nu_N",
            "biorthonormality",
            "eps1",
        ],
    );
    t.rows = sweep(cfg, |z, n| {
        let r = metric_report(params(cfg, z, n)?)?;
        let eps1 = ground_shift(z, cfg.mode)?;
        Ok(vec![vec![
            z.into(),
            n.into(),
            cfg.mode.into(),
            r.sigma_n.into(),
            r.sigma_cap_n.into(),
            r.s_n.into(),
            r.nu_n.into(),
            r.biorthonormality.into(),
            eps1.into(),
        ]])
    })?;
    Ok(t)
}

fn hermitian(cfg: &RunConfig) -> Result<Table> {
    let mut t = Table::new("hermitian", &["Z", "N", "m", "n", "re", "im"]);
    t.rows = sweep(cfg, |z, n| {
        let m = Model::build(params(cfg, z, n)?)?;
        let h = hermitian_h_matrix(&m.well.h0_block(), &m.dec)?;
        let q = h.reference_basis;
        let mut rows = Vec::new();
        for i in 0..n {
            for j in 0..n {
                rows.push(vec![
                    z.into(),
                    n.into(),
                    (i + 1).into(),
                    (j + 1).into(),
                    q[(i, j)].re.into(),
                    q[(i, j)].im.into(),
                ]);
            }
        }
        Ok(rows)
    })?;
    Ok(t)
}

fn delta_op(cfg: &RunConfig, z: f64, n: usize, ell_max: usize) -> Result<PseudoDiffOp> {
    let m = Model::build(params(cfg, z, n)?)?;
    let (_, delta) = delta_h_matrix(&m.well.h0_block(), &m.dec);
    delta_series(&delta, ell_max, z)
}

fn series_rows(
    op: &PseudoDiffOp,
    z: f64,
    n: usize,
    ells: std::ops::RangeInclusive<usize>,
    points: usize,
    part: Option<fn(crate::linalg::C64) -> f64>,
    extra: Option<&dyn Fn(f64) -> f64>,
) -> Vec<Vec<Cell>> {
    let xs = grid(points);
    let mut rows = Vec::new();
    for ell in ells {
        for &x in &xs {
            let v = op.tilde(ell, x);
            let mut row: Vec<Cell> = vec![z.into(), n.into(), ell.into(), x.into()];
            match part {
                Some(f) => row.push(f(v).into()),
                None => {
                    row.push(v.re.into());
                    row.push(v.im.into());
                }
            }
            if let Some(g) = extra {
                row.push(g(x).into());
            }
            rows.push(row);
        }
    }
    rows
}

fn delta_series_table(cfg: &RunConfig) -> Result<Table> {
    let mut t = Table::new("delta-series", &["Z", "N", "ell", "x", "re", "im"]);
    t.rows = sweep(cfg, |z, n| {
        let op = delta_op(cfg, z, n, cfg.ell_max)?;
        Ok(series_rows(
            &op,
            z,
            n,
            0..=cfg.ell_max,
            cfg.grid,
            None,
            None,
        ))
    })?;
    Ok(t)
}

fn classical(cfg: &RunConfig) -> Result<Table> {
    let ps = sorted_floats(
        cfg.p
            .clone()
            .unwrap_or_else(|| vec![0.0, 1.0, 2.0, 3.0, 4.0]),
    )?;
    let mut t = Table::new("classical", &["Z", "N", "x", "p", "H_c"]);
    t.rows = sweep(cfg, |z, n| {
        let op = delta_op(cfg, z, n, cfg.ell_max)?;
        let mut rows = Vec::new();
        for &x in &grid(cfg.grid) {
            for &p in &ps {
                let h = classical_hamiltonian(&op, x, p, None)?;
                rows.push(vec![z.into(), n.into(), x.into(), p.into(), h.into()]);
            }
        }
        Ok(rows)
    })?;
    Ok(t)
}

fn position(cfg: &RunConfig) -> Result<Table> {
    let mut t = Table::new("position", &["Z", "N", "n", "x", "re", "im"]);
    t.rows = sweep(cfg, |z, n| {
        check_levels(&cfg.levels, n)?;
        let m = Model::build(params(cfg, z, n)?)?;
        let xs = grid(cfg.grid);
        let mut rows = Vec::new();
        for &j in &cfg.levels {
            let wf = position_wavefunction(&normalized_basis_state(j, &m.dec)?, &m.dec);
            for &x in &xs {
                let v = wf.eval(x);
                rows.push(vec![
                    z.into(),
                    n.into(),
                    j.into(),
                    x.into(),
                    v.re.into(),
                    v.im.into(),
                ]);
            }
        }
        Ok(rows)
    })?;
    Ok(t)
}

fn density_rows(cfg: &RunConfig, name: &str) -> Result<Table> {
    let mut t = Table::new(name, &["Z", "N", "n", "x", "rho", "delta_rho"]);
    t.rows = sweep(cfg, |z, n| {
        check_levels(&cfg.levels, n)?;
        let m = Model::build(params(cfg, z, n)?)?;
        let mut rows = Vec::new();
        for &j in &cfg.levels {
            let wf = position_wavefunction(&normalized_basis_state(j, &m.dec)?, &m.dec);
            let d = density_and_moments(&wf, cfg.grid)?;
            for (&x, &rho) in d.x.iter().zip(&d.density) {
                let rho0 = sine(j, x).powi(2);
                rows.push(vec![
                    z.into(),
                    n.into(),
                    j.into(),
                    x.into(),
                    rho.into(),
                    (rho - rho0).into(),
                ]);
            }
        }
        Ok(rows)
    })?;
    Ok(t)
}

fn uncertainty_rows(cfg: &RunConfig, name: &str) -> Result<Table> {
    let mut t = Table::new(name, &["Z", "N", "n", "mean_x", "delta_x", "shift"]);
    let hermitian: Vec<f64> = cfg
        .levels
        .iter()
        .map(|&j| {
            let pi2 = std::f64::consts::PI.powi(2);
            (1.0 / 3.0 - 2.0 / (pi2 * (j * j) as f64)).sqrt()
        })
        .collect();
    t.rows = sweep(cfg, |z, n| {
        check_levels(&cfg.levels, n)?;
        let m = Model::build(params(cfg, z, n)?)?;
        let mut rows = Vec::new();
        for (i, &j) in cfg.levels.iter().enumerate() {
            let wf = position_wavefunction(&normalized_basis_state(j, &m.dec)?, &m.dec);
            let d = density_and_moments(&wf, 2)?;
            rows.push(vec![
                z.into(),
                n.into(),
                j.into(),
                d.mean_x.into(),
                d.delta_x.into(),
                (d.delta_x - hermitian[i]).into(),
            ]);
        }
        Ok(rows)
    })?;
    Ok(t)
}

fn localized_rows(cfg: &RunConfig, name: &str, ys: &[f64]) -> Result<Table> {
    let ys = sorted_floats(ys.to_vec())?;
    let mut t = Table::new(name, &["Z", "N", "y", "x", "re", "im"]);
    t.rows = sweep(cfg, |z, n| {
        let m = Model::build(params(cfg, z, n)?)?;
        let mut rows = Vec::new();
        for &y in &ys {
            let loc = localized_state(y, &m.dec)?;
            for (x, v) in loc.sample(cfg.grid) {
                rows.push(vec![
                    z.into(),
                    n.into(),
                    y.into(),
                    x.into(),
                    v.re.into(),
                    v.im.into(),
                ]);
            }
        }
        Ok(rows)
    })?;
    Ok(t)
}

fn evolve_rows(cfg: &RunConfig, name: &str) -> Result<Table> {
    let taus = tau_grid(
        0.0,
        cfg.tau_end.unwrap_or_else(default_tau_end),
        cfg.tau_points.unwrap_or(DEFAULT_TAU_POINTS),
    );
    let mut t = Table::new(
        name,
        &[
            "Z",
            "N",
            "j",
            "tau",
            "mean_x",
            "physical_norm",
            "naive_norm",
        ],
    );
    t.rows = sweep(cfg, |z, n| {
        check_levels(&cfg.levels, n)?;
        let m = Model::build(params(cfg, z, n)?)?;
        let mut rows = Vec::new();
        for &j in &cfg.levels {
            let setup = prepare_evolution(j, &m.sys, &m.dec, 0.0)?;
            let tr = trajectory(&setup, &taus)?;
            for (&tau, &x) in tr.tau.iter().zip(&tr.mean_x) {
                rows.push(vec![
                    z.into(),
                    n.into(),
                    j.into(),
                    tau.into(),
                    x.into(),
                    setup.physical_norm(tau).into(),
                    setup.naive_norm(tau).into(),
                ]);
            }
        }
        Ok(rows)
    })?;
    Ok(t)
}

fn table1(cfg: &RunConfig) -> Result<Table> {
    let mut t = Table::new("table1", &["Z", "N", "mode", "Sigma_N", "S_N", "nu_N"]);
    t.rows = sweep(cfg, |z, n| {
        let m = Model::build(params(cfg, z, n)?)?;
        let y = m.well.h0_block();
        let h = hermitian_h_matrix(&y, &m.dec)?;
        Ok(vec![vec![
            z.into(),
            n.into(),
            cfg.mode.into(),
            sigma_capital(&chi_matrix(&m.sys), &y).into(),
            s_metric(&h.reference_basis).into(),
            m.params().nu().into(),
        ]])
    })?;
    Ok(t)
}

fn accuracy_curve(cfg: &RunConfig, k: u32) -> Result<Table> {
    let label = ["sigma_N", "Sigma_N", "S_N"][(k - 1) as usize];
    let mut t = Table::new(format!("fig{k}"), &["Z", "N", "mode", label]);
    t.rows = sweep(cfg, |z, n| {
        let m = Model::build(params(cfg, z, n)?)?;
        let y = m.well.h0_block();
        let v = match k {
            1 => sigma_metric(&m.dec),
            2 => sigma_capital(&chi_matrix(&m.sys), &y),
            _ => s_metric(&hermitian_h_matrix(&y, &m.dec)?.reference_basis),
        };
        Ok(vec![vec![z.into(), n.into(), cfg.mode.into(), v.into()]])
    })?;
    Ok(t)
}

fn figdata(cfg: &RunConfig, k: u32) -> Result<Table> {
    let name = format!("fig{k}");
    let ell_max = cfg.ell_max;
    let first_four = 0..=3.min(ell_max);
    match k {
        1..=3 => accuracy_curve(cfg, k),
        4 | 5 => {
            let header: &[&'static str] = if k == 4 {
                &["Z", "N", "ell", "x", "re"]
            } else {
                &["Z", "N", "ell", "x", "im", "iv"]
            };
            let mut t = Table::new(name, header);
            t.rows = sweep(cfg, |z, n| {
                let op = delta_op(cfg, z, n, ell_max)?;
                Ok(if k == 4 {
                    series_rows(
                        &op,
                        z,
                        n,
                        first_four.clone(),
                        cfg.grid,
                        Some(|v| v.re),
                        None,
                    )
                } else {
                    let iv = move |x: f64| (crate::linalg::I * potential(x, z)).re;
                    series_rows(
                        &op,
                        z,
                        n,
                        first_four.clone(),
                        cfg.grid,
                        Some(|v| v.im),
                        Some(&iv),
                    )
                })
            })?;
            Ok(t)
        }
        6 | 7 => {
            let header: &[&'static str] = if k == 6 {
                &["Z", "N", "ell", "x", "re"]
            } else {
                &["Z", "N", "ell", "x", "im"]
            };
            let mut t = Table::new(name, header);
            t.rows = sweep(cfg, |z, n| {
                let m = Model::build(params(cfg, z, n)?)?;
                let x = dress_position(&m.dec, z, dressing_tail(cfg, n), ell_max)?;
                let part: fn(crate::linalg::C64) -> f64 = if k == 6 { |v| v.re } else { |v| v.im };
                Ok(series_rows(
                    &x.omega,
                    z,
                    n,
                    first_four.clone(),
                    cfg.grid,
                    Some(part),
                    None,
                ))
            })?;
            Ok(t)
        }
        8 | 9 => density_rows(cfg, &name),
        10 => localized_rows(cfg, &name, cfg.y.as_deref().unwrap_or(&[-0.5, 0.0, 0.5])),
        11 => localized_rows(cfg, &name, cfg.y.as_deref().unwrap_or(&[1.0 / 3.0])),
        12 | 13 => evolve_rows(cfg, &name),
        _ => Err(Error::InvalidParameter(format!(
            "no figure {k}; expected 1..=13"
        ))),
    }
}

/// Computes the table for a resolved configuration.
pub fn run(command: &Command, cfg: &RunConfig) -> Result<Table> {
    match command {
        Command::Spectrum => spectrum(cfg),
        Command::Metric => metric(cfg),
        Command::Hermitian => hermitian(cfg),
        Command::DeltaSeries => delta_series_table(cfg),
        Command::Classical { .. } => classical(cfg),
        Command::Position => position(cfg),
        Command::Density => density_rows(cfg, "density"),
        Command::Uncertainty => uncertainty_rows(cfg, "uncertainty"),
        Command::Localized { .. } => localized_rows(
            cfg,
            "localized",
            cfg.y.as_deref().unwrap_or(&[-0.5, 0.0, 0.5]),
        ),
        Command::Evolve { .. } => evolve_rows(cfg, "evolve"),
        Command::Table1 => table1(cfg),
        Command::Table2 => uncertainty_rows(cfg, "table2"),
        Command::Figdata { k } => figdata(cfg, *k),
    }
}

/// Writes `<dir>/<name>.csv`, or to stdout without a directory.
pub fn emit(table: &Table, cfg: &RunConfig) -> std::io::Result<Option<PathBuf>> {
    let text = table.to_csv(cfg);
    match &cfg.output_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = Path::new(dir).join(format!("{}.csv", table.name));
            std::fs::write(&path, text)?;
            Ok(Some(path))
        }
        None => {
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(None)
        }
    }
}

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// JSON written to stderr on failure.
pub fn error_json(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": kind, "message": message }).to_string()
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = resolve(&cli).and_then(|cfg| run(&cli.command, &cfg).map(|t| (cfg, t)));
    match outcome {
        Ok((cfg, table)) => match emit(&table, &cfg) {
            Ok(Some(path)) => {
                eprintln!("wrote {}", path.display());
                0
            }
            Ok(None) => 0,
            Err(e) => {
                eprintln!("{}", error_json("Io", &e.to_string()));
                EXIT_NUMERICAL
            }
        },
        Err(e) => {
            eprintln!("{}", error_json(e.kind(), &e.to_string()));
            if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_NUMERICAL
            }
        }
    }
}
