//! Command-line front end. Indices on the command line are one-based; the
//! library is zero-based.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::identities::{run_identity_suite, verify_all, FuzzOptions, VerificationReport};
use crate::numerics::{
    bound_spectrum, default_halfwidth, fit_halfwidth, phase_shift_check, scatter,
    transmission_product, ScatterOptions,
};
use crate::soliton::{
    eigenfunction, potential, potential_jet, tau_det, tau_hirota, CoefficientRule, Grid,
    SolitonConfig, HIROTA_MAX_N,
};
use crate::transforms::{
    am_add, am_delete, darboux_ground, krein_adler_delete, krein_adler_violation,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VERIFY_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "reflectionless",
    version,
    about = "Reflectionless potentials workbench"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    DarbouxGround,
    KreinAdler,
    AmDelete,
    AmAdd,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Configuration file (JSON); `-` reads standard input.
    #[arg(long, short = 'c', value_name = "PATH")]
    pub config: Option<String>,
    /// Evaluation grid.
    #[arg(long, num_args = 3, value_names = ["XMIN", "XMAX", "N"], allow_negative_numbers = true)]
    pub grid: Option<Vec<String>>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Write to a file instead of standard output.
    #[arg(long, short = 'o', value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Potential U(x) and optionally its derivatives.
    Potential {
        #[command(flatten)]
        common: Common,
        /// Highest derivative to emit.
        #[arg(long, default_value_t = 0)]
        order: usize,
    },
    /// Bound-state eigenfunctions, one column per level.
    Eigen {
        #[command(flatten)]
        common: Common,
        /// Emit only these levels (one-based, comma separated).
        #[arg(long, value_delimiter = ',')]
        levels: Vec<usize>,
    },
    /// Potential grids along the KdV flow.
    Evolve {
        #[command(flatten)]
        common: Common,
        /// Time window added to the configured t_3.
        #[arg(long, num_args = 3, value_names = ["T0", "T1", "STEPS"], allow_negative_numbers = true)]
        times: Option<Vec<String>>,
    },
    /// Reflection and transmission amplitudes by direct integration.
    Scatter {
        #[command(flatten)]
        common: Common,
        /// Wavenumbers (comma separated).
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<f64>,
        /// Integration domain half-width; defaults to 20/k_1 past the
        /// outermost soliton, widened until U has decayed.
        #[arg(long)]
        halfwidth: Option<f64>,
    },
    /// Bound spectrum of the finite-difference Hamiltonian.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        /// Domain half-width; defaults to 12/k_1 past the outermost soliton,
        /// widened until U has decayed.
        #[arg(long)]
        halfwidth: Option<f64>,
    },
    /// Rewrite the configuration by a deformation scheme; prints JSON.
    Transform {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        /// Levels to delete (one-based, comma separated).
        #[arg(long, value_delimiter = ',')]
        delete: Vec<usize>,
        /// Addition parameter `j=value` (one-based j); repeatable.
        #[arg(long = "e", value_name = "J=VALUE")]
        e: Vec<String>,
        /// Skip the Krein-Adler condition and emit the formal constants.
        #[arg(long = "unsafe")]
        allow_singular: bool,
    },
    /// Identity checks; prints a JSON report.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Every identity on the given configuration.
        #[arg(long)]
        all: bool,
        /// The seeded random-configuration suite.
        #[arg(long)]
        fuzz: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        configs: usize,
        /// Override every identity tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Determinant against the 2^N exponential sum.
    HirotaCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1e-11)]
        tol: f64,
    },
    /// Asymptotic two-soliton position shifts.
    PhaseShift {
        #[command(flatten)]
        common: Common,
        /// Collision is observed at -T and +T.
        #[arg(long = "time", default_value_t = 10.0)]
        time: f64,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
}

/// Result of a command: text to emit plus whether all checks passed.
struct Outcome {
    text: String,
    pass: bool,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self { text, pass: true }
    }
}

pub fn parse_config(text: &str) -> Result<SolitonConfig> {
    serde_json::from_str(text).map_err(|e| Error::Validation(format!("config: {e}")))
}

fn load_config(common: &Common) -> Result<SolitonConfig> {
    let path = common
        .config
        .as_deref()
        .ok_or_else(|| Error::Usage("--config is required".into()))?;
    let text = if path == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        s
    } else {
        std::fs::read_to_string(path)
            .map_err(|e| Error::Usage(format!("cannot read {path}: {e}")))?
    };
    parse_config(&text)
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Usage(format!("{what}: cannot parse {s:?}")))
}

fn grid_for(common: &Common, cfg: &SolitonConfig) -> Result<Grid> {
    match &common.grid {
        None => Ok(cfg.default_grid()),
        Some(v) => Grid::new(
            parse_num(&v[0], "--grid xmin")?,
            parse_num(&v[1], "--grid xmax")?,
            parse_num(&v[2], "--grid n")?,
        ),
    }
}

fn zero_based(levels: &[usize], n: usize, flag: &str) -> Result<Vec<usize>> {
    levels
        .iter()
        .map(|&j| {
            if j == 0 || j > n {
                Err(Error::Usage(format!("{flag}: level {j} outside 1..={n}")))
            } else {
                Ok(j - 1)
            }
        })
        .collect()
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn csv_row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{v}").unwrap();
    }
    out.push('\n');
}

fn table(format: Format, header: &[String], rows: &[Vec<f64>]) -> Result<String> {
    match format {
        Format::Csv => {
            let mut out = header.join(",");
            out.push('\n');
            for r in rows {
                csv_row(&mut out, r);
            }
            Ok(out)
        }
        Format::Json => {
            let records: Vec<BTreeMap<&str, f64>> = rows
                .iter()
                .map(|r| {
                    header
                        .iter()
                        .map(String::as_str)
                        .zip(r.iter().copied())
                        .collect()
                })
                .collect();
            to_json(&records)
        }
    }
}

fn potential_rows(cfg: &SolitonConfig, grid: &Grid, order: usize) -> Result<Vec<Vec<f64>>> {
    let flowed = cfg.apply_time_flows()?;
    grid.points()
        .into_iter()
        .map(|x| {
            let mut row = vec![x];
            if order == 0 {
                row.push(potential(&flowed, x)?);
            } else {
                let jet = potential_jet(&flowed, x, order)?;
                row.extend((0..=order).map(|i| jet.derivative_value(i)));
            }
            Ok(row)
        })
        .collect()
}

fn potential_header(order: usize) -> Vec<String> {
    let mut h = vec!["x".to_string(), "U".to_string()];
    h.extend((1..=order).map(|i| format!("d{i}U")));
    h
}

fn cmd_potential(common: &Common, order: usize) -> Result<Outcome> {
    let cfg = load_config(common)?;
    let grid = grid_for(common, &cfg)?;
    let rows = potential_rows(&cfg, &grid, order)?;
    Ok(Outcome::ok(table(
        common.format,
        &potential_header(order),
        &rows,
    )?))
}

fn cmd_eigen(common: &Common, levels: &[usize]) -> Result<Outcome> {
    let cfg = load_config(common)?;
    let grid = grid_for(common, &cfg)?;
    let levels = if levels.is_empty() {
        (0..cfg.n()).collect()
    } else {
        zero_based(levels, cfg.n(), "--levels")?
    };
    let mut header = vec!["x".to_string()];
    header.extend(levels.iter().map(|j| format!("phi{}", j + 1)));
    let rows = grid
        .points()
        .into_iter()
        .map(|x| {
            let mut row = vec![x];
            for &j in &levels {
                row.push(eigenfunction(&cfg, j, x, 0)?.value());
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Outcome::ok(table(common.format, &header, &rows)?))
}

fn cmd_evolve(common: &Common, times: &Option<Vec<String>>) -> Result<Outcome> {
    let cfg = load_config(common)?;
    let grid = grid_for(common, &cfg)?;
    let (t0, t1, steps): (f64, f64, usize) = match times {
        None => (0.0, 1.0, 5),
        Some(v) => (
            parse_num(&v[0], "--times t0")?,
            parse_num(&v[1], "--times t1")?,
            parse_num(&v[2], "--times steps")?,
        ),
    };
    if steps == 0 {
        return Err(Error::Usage("--times needs at least one step".into()));
    }
    let base = cfg.times().get(&3).copied().unwrap_or(0.0);
    let ts: Vec<f64> = (0..steps)
        .map(|i| match steps {
            1 => t0,
            _ => t0 + (t1 - t0) * i as f64 / (steps - 1) as f64,
        })
        .collect();
    let header = potential_header(0);
    match common.format {
        Format::Csv => {
            let mut out = String::new();
            for &t in &ts {
                let rows = potential_rows(&cfg.clone().with_kdv_time(base + t), &grid, 0)?;
                writeln!(out, "# t={t}").unwrap();
                out.push_str(&table(Format::Csv, &header, &rows)?);
            }
            Ok(Outcome::ok(out))
        }
        Format::Json => {
            let frames = ts
                .iter()
                .map(|&t| {
                    let rows = potential_rows(&cfg.clone().with_kdv_time(base + t), &grid, 0)?;
                    let (x, u): (Vec<f64>, Vec<f64>) = rows.iter().map(|r| (r[0], r[1])).unzip();
                    Ok(json!({ "t": t, "x": x, "U": u }))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Outcome::ok(to_json(&frames)?))
        }
    }
}

fn cmd_scatter(common: &Common, ks: &[f64], halfwidth: Option<f64>) -> Result<Outcome> {
    let cfg = load_config(common)?.apply_time_flows()?;
    let mut opts = ScatterOptions::for_config(&cfg);
    let u = |x: f64| potential(&cfg, x);
    opts.domain_halfwidth = match halfwidth {
        Some(l) => l,
        None => fit_halfwidth(&u, opts.domain_halfwidth)?,
    };
    let header: Vec<String> = [
        "k",
        "r_re",
        "r_im",
        "t_re",
        "t_im",
        "abs_r",
        "unitarity_defect",
        "t_predicted_re",
        "t_predicted_im",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let rows = ks
        .iter()
        .map(|&k| {
            let s = scatter(&u, k, &opts)?;
            let p = transmission_product(&cfg, k);
            Ok(vec![
                k,
                s.reflection_amp.re,
                s.reflection_amp.im,
                s.transmission_amp.re,
                s.transmission_amp.im,
                s.reflection_amp.norm(),
                s.unitarity_defect,
                p.re,
                p.im,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Outcome::ok(table(common.format, &header, &rows)?))
}

fn cmd_spectrum(common: &Common, step: f64, halfwidth: Option<f64>) -> Result<Outcome> {
    let cfg = load_config(common)?.apply_time_flows()?;
    let u = |x: f64| potential(&cfg, x);
    let l = match halfwidth {
        Some(l) => l,
        None => fit_halfwidth(&u, default_halfwidth(&cfg))?,
    };
    let s = bound_spectrum(&u, l, step)?;
    match common.format {
        Format::Csv => {
            let mut expected = cfg.energies();
            expected.reverse();
            let header: Vec<String> = ["level", "E", "E_exact"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            let rows: Vec<Vec<f64>> = s
                .energies
                .iter()
                .enumerate()
                .map(|(i, &e)| {
                    vec![
                        (i + 1) as f64,
                        e,
                        expected.get(i).copied().unwrap_or(f64::NAN),
                    ]
                })
                .collect();
            Ok(Outcome::ok(table(Format::Csv, &header, &rows)?))
        }
        Format::Json => Ok(Outcome::ok(to_json(&s)?)),
    }
}

fn parse_e(items: &[String], n: usize) -> Result<BTreeMap<usize, f64>> {
    let mut out = BTreeMap::new();
    for item in items {
        let (j, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("--e expects j=value, got {item:?}")))?;
        let j: usize = parse_num(j.trim(), "--e index")?;
        let v: f64 = parse_num(v.trim(), "--e value")?;
        let j = zero_based(&[j], n, "--e")?[0];
        if out.insert(j, v).is_some() {
            return Err(Error::Usage(format!("--e given twice for level {}", j + 1)));
        }
    }
    Ok(out)
}

fn cmd_transform(
    common: &Common,
    scheme: SchemeArg,
    delete: &[usize],
    e: &[String],
    allow_singular: bool,
) -> Result<Outcome> {
    let cfg = load_config(common)?;
    let n = cfg.n();
    let result = match scheme {
        SchemeArg::DarbouxGround => darboux_ground(&cfg)?,
        SchemeArg::KreinAdler => {
            let d = zero_based(delete, n, "--delete")?;
            if d.is_empty() {
                return Err(Error::Usage("krein-adler needs --delete".into()));
            }
            if let Some(m) = krein_adler_violation(n, &d) {
                if !allow_singular {
                    return Err(Error::Validation(format!(
                        "Krein-Adler condition fails at level m = {}: prod (d - m) < 0 for D = {:?}",
                        m + 1,
                        delete
                    )));
                }
            }
            krein_adler_delete(&cfg, &d, allow_singular)?
        }
        SchemeArg::AmDelete => {
            let d = zero_based(delete, n, "--delete")?;
            if d.is_empty() {
                return Err(Error::Usage("am-delete needs --delete".into()));
            }
            am_delete(&cfg, &d)?
        }
        SchemeArg::AmAdd => {
            let params = parse_e(e, n)?;
            if params.is_empty() {
                return Err(Error::Usage("am-add needs at least one --e j=value".into()));
            }
            am_add(&cfg, &params)?
        }
    };
    if result.singular {
        eprintln!("warning: Krein-Adler condition overridden; constants are formal");
    }
    Ok(Outcome::ok(to_json(&result.after)?))
}

fn verify_outcome(reports: Vec<VerificationReport>) -> Result<Outcome> {
    let pass = reports.iter().all(|r| r.pass);
    let failed = reports.iter().filter(|r| !r.pass).count();
    let text = to_json(&json!({
        "pass": pass,
        "failed": failed,
        "total": reports.len(),
        "reports": reports,
    }))?;
    Ok(Outcome { text, pass })
}

fn cmd_verify(
    common: &Common,
    all: bool,
    fuzz: bool,
    seed: u64,
    configs: usize,
    tol: Option<f64>,
) -> Result<Outcome> {
    let mut reports = Vec::new();
    if all || !fuzz {
        let cfg = load_config(common)?.apply_time_flows()?;
        let grid = grid_for(common, &cfg)?;
        reports.extend(verify_all(&cfg, &grid)?);
    }
    if fuzz {
        let opts = FuzzOptions {
            seed,
            configs,
            ..FuzzOptions::default()
        };
        reports.extend(run_identity_suite(&opts)?);
    }
    if let Some(t) = tol {
        reports = reports.into_iter().map(|r| r.with_tolerance(t)).collect();
    }
    verify_outcome(reports)
}

fn cmd_hirota(common: &Common, tol: f64) -> Result<Outcome> {
    let cfg = load_config(common)?;
    if cfg.n() > HIROTA_MAX_N {
        return Err(Error::Usage(format!(
            "hirota-check supports N <= {HIROTA_MAX_N}"
        )));
    }
    let grid = grid_for(common, &cfg)?;
    let rule = CoefficientRule::identity(cfg.n());
    let mut worst: f64 = 0.0;
    let mut worst_x = grid.xmin;
    for x in grid.points() {
        let det = tau_det(&cfg, &rule, x, 0)?;
        let sum = tau_hirota(&cfg, &rule, x)?;
        let rel = if det.sign() == sum.sign {
            (det.ln_abs() - sum.ln_abs).exp_m1().abs()
        } else {
            f64::INFINITY
        };
        if rel > worst {
            worst = rel;
            worst_x = x;
        }
    }
    let pass = worst <= tol;
    let text = to_json(&json!({
        "name": "determinant_vs_exponential_sum",
        "grid": grid,
        "max_relative_difference": worst,
        "at_x": worst_x,
        "tolerance": tol,
        "pass": pass,
    }))?;
    Ok(Outcome { text, pass })
}

fn cmd_phase_shift(common: &Common, t: f64, tol: f64) -> Result<Outcome> {
    let cfg = load_config(common)?;
    let report = phase_shift_check(&cfg, t)?;
    let pass = report.max_deviation <= tol;
    let mut value = serde_json::to_value(&report)?;
    value["tolerance"] = json!(tol);
    value["pass"] = json!(pass);
    Ok(Outcome {
        text: to_json(&value)?,
        pass,
    })
}

fn common_of(cmd: &Command) -> &Common {
    match cmd {
        Command::Potential { common, .. }
        | Command::Eigen { common, .. }
        | Command::Evolve { common, .. }
        | Command::Scatter { common, .. }
        | Command::Spectrum { common, .. }
        | Command::Transform { common, .. }
        | Command::Verify { common, .. }
        | Command::HirotaCheck { common, .. }
        | Command::PhaseShift { common, .. } => common,
    }
}

fn dispatch(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Potential { common, order } => cmd_potential(common, *order),
        Command::Eigen { common, levels } => cmd_eigen(common, levels),
        Command::Evolve { common, times } => cmd_evolve(common, times),
        Command::Scatter {
            common,
            k,
            halfwidth,
        } => cmd_scatter(common, k, *halfwidth),
        Command::Spectrum {
            common,
            step,
            halfwidth,
        } => cmd_spectrum(common, *step, *halfwidth),
        Command::Transform {
            common,
            scheme,
            delete,
            e,
            allow_singular,
        } => cmd_transform(common, *scheme, delete, e, *allow_singular),
        Command::Verify {
            common,
            all,
            fuzz,
            seed,
            configs,
            tol,
        } => cmd_verify(common, *all, *fuzz, *seed, *configs, *tol),
        Command::HirotaCheck { common, tol } => cmd_hirota(common, *tol),
        Command::PhaseShift { common, time, tol } => cmd_phase_shift(common, *time, *tol),
    }
}

fn emit(common: &Common, text: &str) -> Result<()> {
    match &common.output {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                r => r?,
            }
        }
    }
    Ok(())
}

/// Run a parsed command line and map the outcome to an exit code.
pub fn run(cli: &Cli) -> ExitCode {
    let result = dispatch(&cli.command)
        .and_then(|outcome| emit(common_of(&cli.command), &outcome.text).map(|_| outcome.pass));
    match result {
        Ok(true) => ExitCode::from(EXIT_OK),
        Ok(false) => ExitCode::from(EXIT_VERIFY_FAILED),
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::from(EXIT_NUMERICAL)
            }
        }
    }
}
