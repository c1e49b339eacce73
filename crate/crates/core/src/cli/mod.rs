//! Command-line front end. Reports go to stdout or `--out` as JSON or CSV;
//! one-line summaries go to stderr.
//!
//! Exit codes: 0 success, 1 verification failure, 2 bad parameters or
//! flags, 3 I/O or parse error.

mod verify;

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use verify::{verify_suite, Check, VerifyReport, INEQUALITY_SAMPLES, TRANSFORM_GRID_N};

use crate::closed_forms::{hardy_constant, normalization, sharp_constant, ExtremalProfile};
use crate::error::{Error, Result};
use crate::params::{classify_degeneracy, CknParams, DEFAULT_INT_TOL};
use crate::profile::RadialSamples;
use crate::quadrature::{rayleigh_quotient, RadialGrid, DEFAULT_GRID_N, DEFAULT_R_MAX, DEFAULT_R_MIN};
use crate::spectrum::{full_spectrum, SpectrumOptions, DEFAULT_EIG_TOL, DEFAULT_SPECTRUM_N};
use crate::stability::{deficit_with_distance, log_space, quotient_scan, Family, ProjectionOptions};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SEED: u64 = 42;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_PARAMS: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ckn-lab", version, about = "Radial CKN extremals, spectra and stability quotients")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Degeneracy of the linearized operator at the extremal.
    Classify(Common),
    /// Sharp constant and related closed forms.
    Constants(Common),
    /// Eigenvalues of the linearized operator, mode by mode.
    Spectrum(Common),
    /// Deficit and distance to the extremal manifold of a sampled profile.
    Deficit {
        #[command(flatten)]
        common: Common,
        /// CSV with header `r,u[,du]`.
        #[arg(long)]
        input: PathBuf,
    },
    /// Stability quotient along `U_1 + eps w`.
    Scan {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "bump")]
        family: FamilyArg,
        /// `from:to:count`, log-spaced.
        #[arg(long, default_value = "1e-3:0.5:20")]
        eps: String,
    },
    /// Run the invariant suite; exit 0 iff every check passes.
    Verify(Common),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    W0,
    Bump,
    Eig3,
    Mix,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::W0 => Family::W0,
            FamilyArg::Bump => Family::Bump,
            FamilyArg::Eig3 => Family::Eig3,
            FamilyArg::Mix => Family::Mix,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long = "N")]
    pub n: u32,
    #[arg(long = "p", allow_hyphen_values = true)]
    pub p: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub beta: f64,
    /// Grid nodes (default 4000 for quadrature, 2000 for spectra).
    #[arg(long = "grid-n")]
    pub grid_n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub rmin: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub rmax: Option<f64>,
    #[arg(long, default_value_t = 3)]
    pub kmax: u32,
    #[arg(long, default_value_t = 4)]
    pub neigs: usize,
    #[arg(long, default_value_t = DEFAULT_EIG_TOL, allow_hyphen_values = true)]
    pub tol: f64,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Cross-check closed forms against quadrature.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridOptions {
    pub n: Option<usize>,
    pub r_min: f64,
    pub r_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub k_max: u32,
    pub n_eigs: usize,
    pub tol: f64,
}

/// Validated flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub params: CknParams,
    pub grid: GridOptions,
    pub solver: SolverOptions,
    pub format: Format,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub verify: bool,
}

impl RunConfig {
    pub fn from_flags(c: &Common) -> Result<Self> {
        let params = CknParams::new(c.n, c.p, c.alpha, c.beta)?;
        let grid = GridOptions { n: c.grid_n, r_min: c.rmin.unwrap_or(DEFAULT_R_MIN), r_max: c.rmax.unwrap_or(DEFAULT_R_MAX) };
        if !(grid.r_min > 0.0 && grid.r_max > grid.r_min && grid.r_max.is_finite()) {
            return Err(Error::ClassicalDomain(format!("need 0 < rmin < rmax, got {} and {}", grid.r_min, grid.r_max)));
        }
        if !(c.tol > 0.0) {
            return Err(Error::ClassicalDomain(format!("tol must be positive, got {}", c.tol)));
        }
        Ok(Self {
            params,
            grid,
            solver: SolverOptions { k_max: c.kmax, n_eigs: c.neigs, tol: c.tol },
            format: c.format,
            out: c.out.clone(),
            seed: c.seed,
            verify: c.verify,
        })
    }

    pub fn quadrature_grid(&self) -> Result<RadialGrid> {
        RadialGrid::log_uniform(self.grid.r_min, self.grid.r_max, self.grid.n.unwrap_or(DEFAULT_GRID_N))
    }

    pub fn spectrum_options(&self) -> SpectrumOptions {
        SpectrumOptions {
            grid_n: self.grid.n.unwrap_or(DEFAULT_SPECTRUM_N),
            s_min: self.grid.r_min,
            s_max: self.grid.r_max,
            n_eigs: self.solver.n_eigs,
            tol: self.solver.tol,
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    command: &'a str,
    seed: u64,
    params: CknParams,
    result: &'a T,
}

/// Output of one command: the JSON payload, its CSV rendering, a summary
/// line and the exit code.
struct Outcome {
    json: serde_json::Value,
    csv: Vec<u8>,
    summary: String,
    code: i32,
}

fn kv_csv(pairs: &[(&str, String)]) -> Vec<u8> {
    let mut s = String::from("field,value\n");
    for (k, v) in pairs {
        s.push_str(&format!("{k},{v}\n"));
    }
    s.into_bytes()
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("report types serialize")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsReport {
    #[serde(rename = "S_r")]
    pub s_r: f64,
    #[serde(rename = "C")]
    pub normalization: f64,
    pub hardy: f64,
    #[serde(rename = "K")]
    pub k_dim: f64,
    pub t: f64,
    pub p_star: f64,
    pub verification: Option<ConstantsCheck>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantsCheck {
    pub quadrature: f64,
    pub relative_difference: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn cmd_constants(cfg: &RunConfig) -> Result<ConstantsReport> {
    let prm = &cfg.params;
    let d = prm.derived();
    let s_r = sharp_constant(prm).value;
    let verification = if cfg.verify {
        let q = rayleigh_quotient(&ExtremalProfile::unit(*prm).to_radial_function(), prm, &cfg.quadrature_grid()?)?;
        let rel = (q - s_r).abs() / s_r;
        Some(ConstantsCheck { quadrature: q, relative_difference: rel, tolerance: 1e-6, passed: rel < 1e-6 })
    } else {
        None
    };
    Ok(ConstantsReport {
        s_r,
        normalization: normalization(prm),
        hardy: hardy_constant(prm.n(), prm.p(), prm.alpha())?,
        k_dim: d.k_dim,
        t: d.t,
        p_star: d.p_star,
        verification,
    })
}

fn execute(command: &Command) -> Result<(String, RunConfig, Outcome)> {
    let (name, common) = match command {
        Command::Classify(c) => ("classify", c),
        Command::Constants(c) => ("constants", c),
        Command::Spectrum(c) => ("spectrum", c),
        Command::Deficit { common, .. } => ("deficit", common),
        Command::Scan { common, .. } => ("scan", common),
        Command::Verify(c) => ("verify", c),
    };
    let cfg = RunConfig::from_flags(common)?;
    let prm = cfg.params;
    let outcome = match command {
        Command::Classify(_) => {
            let r = classify_degeneracy(&prm, DEFAULT_INT_TOL)?;
            let csv = kv_csv(&[
                ("k_real", format!("{:e}", r.k_real)),
                ("degenerate", r.degenerate.to_string()),
                ("k", r.k.map_or(String::new(), |k| k.to_string())),
                ("multiplicity", r.multiplicity.map_or(String::new(), |m| m.to_string())),
                ("eigenspace_dim", r.eigenspace_dim.to_string()),
            ]);
            let summary = match r.k {
                Some(k) => format!("degenerate at k = {k}, threshold eigenspace dimension {}", r.eigenspace_dim),
                None => format!("non-degenerate (k_real = {:.6})", r.k_real),
            };
            Outcome { json: to_value(&r), csv, summary, code: EXIT_OK }
        }
        Command::Constants(_) => {
            let r = cmd_constants(&cfg)?;
            let mut pairs = vec![
                ("S_r", format!("{:e}", r.s_r)),
                ("C", format!("{:e}", r.normalization)),
                ("hardy", format!("{:e}", r.hardy)),
                ("K", format!("{:e}", r.k_dim)),
                ("t", format!("{:e}", r.t)),
                ("p_star", format!("{:e}", r.p_star)),
            ];
            let mut code = EXIT_OK;
            let mut summary = format!("S_r = {:.12e}", r.s_r);
            if let Some(v) = r.verification {
                pairs.push(("quadrature", format!("{:e}", v.quadrature)));
                pairs.push(("relative_difference", format!("{:e}", v.relative_difference)));
                summary.push_str(&format!(", quadrature relative difference {:.2e}", v.relative_difference));
                if !v.passed {
                    code = EXIT_VERIFY;
                    summary.push_str(" (FAILED)");
                }
            }
            Outcome { json: to_value(&r), csv: kv_csv(&pairs), summary, code }
        }
        Command::Spectrum(_) => {
            let table = full_spectrum(&prm, cfg.solver.k_max.max(1), &cfg.spectrum_options())?;
            let mut csv = Vec::new();
            table.write_csv(&mut csv)?;
            let summary = format!("{} eigenvalues over modes 0..={}", table.rows.len(), cfg.solver.k_max.max(1));
            Outcome { json: to_value(&table), csv, summary, code: EXIT_OK }
        }
        Command::Deficit { input, .. } => {
            let file = File::open(input).map_err(|e| Error::Io(format!("{}: {e}", input.display())))?;
            let u = RadialSamples::read_csv(file)?.into_function();
            let (rep, proj) = deficit_with_distance(&u, &prm, &cfg.quadrature_grid()?, &ProjectionOptions::default())?;
            #[derive(Serialize)]
            struct Out<'a> {
                deficit: &'a crate::stability::DeficitReport,
                projection: &'a crate::stability::ManifoldProjection,
            }
            let csv = kv_csv(&[
                ("norm_p", format!("{:e}", rep.norm_p)),
                ("norm_star_p", format!("{:e}", rep.norm_star_p)),
                ("deficit", format!("{:e}", rep.deficit)),
                ("dist", format!("{:e}", proj.d)),
                ("quotient", rep.quotient.map_or(String::new(), |q| format!("{q:e}"))),
                ("exponent", format!("{:e}", rep.exponent)),
                ("c", format!("{:e}", proj.c)),
                ("lambda", format!("{:e}", proj.lambda)),
            ]);
            let summary = format!("deficit {:.3e} (relative {:.3e}), dist {:.3e}", rep.deficit, rep.deficit / rep.norm_p, proj.d);
            Outcome { json: to_value(&Out { deficit: &rep, projection: &proj }), csv, summary, code: EXIT_OK }
        }
        Command::Scan { family, eps, .. } => {
            let grid_eps = parse_eps(eps)?;
            let rep = quotient_scan(&prm, (*family).into(), &grid_eps, &cfg.quadrature_grid()?, &ProjectionOptions::default())?;
            let mut csv = Vec::new();
            rep.write_csv(&mut csv)?;
            let summary = format!(
                "{} rows, empirical B = {:.4e}, slope = {}{}",
                rep.rows.len(),
                rep.empirical_b,
                rep.slope.map_or("n/a".into(), |s| format!("{s:.4}")),
                rep.aborted.as_ref().map_or(String::new(), |a| format!(" (aborted: {a})"))
            );
            let code = if rep.aborted.is_some() { EXIT_VERIFY } else { EXIT_OK };
            Outcome { json: to_value(&rep), csv, summary, code }
        }
        Command::Verify(_) => {
            let rep = verify_suite(&prm, cfg.seed)?;
            let mut csv = String::from("check,passed,value,tolerance\n");
            for c in &rep.checks {
                csv.push_str(&format!("{},{},{:e},{:e}\n", c.name, c.passed, c.value, c.tolerance));
            }
            let failed: Vec<&str> = rep.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
            let summary = if failed.is_empty() {
                format!("all {} checks passed", rep.checks.len())
            } else {
                format!("{} of {} checks failed: {}", failed.len(), rep.checks.len(), failed.join(", "))
            };
            let code = if failed.is_empty() { EXIT_OK } else { EXIT_VERIFY };
            Outcome { json: to_value(&rep), csv: csv.into_bytes(), summary, code }
        }
    };
    Ok((name.to_string(), cfg, outcome))
}

/// `from:to:count`.
pub fn parse_eps(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::ClassicalDomain(format!("--eps expects from:to:count, got {spec:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let from: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let to: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    log_space(from, to, count).map_err(|_| bad())
}

fn exit_code(e: &Error) -> i32 {
    match e {
        e if e.is_parameter_error() => EXIT_PARAMS,
        Error::BranchViolation(_) | Error::InvalidGrid(_) => EXIT_PARAMS,
        Error::Parse(_) | Error::Io(_) => EXIT_IO,
        _ => EXIT_VERIFY,
    }
}

fn emit(name: &str, cfg: &RunConfig, outcome: &Outcome) -> Result<()> {
    let bytes = match cfg.format {
        Format::Json => {
            let env = Envelope { schema_version: SCHEMA_VERSION, command: name, seed: cfg.seed, params: cfg.params, result: &outcome.json };
            let mut s = serde_json::to_string_pretty(&env).expect("envelope serializes");
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => outcome.csv.clone(),
    };
    match &cfg.out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARAMS } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok((name, cfg, outcome)) => {
            if let Err(e) = emit(&name, &cfg, &outcome) {
                eprintln!("error: {e}");
                return EXIT_IO;
            }
            eprintln!("{name}: {}", outcome.summary);
            outcome.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
