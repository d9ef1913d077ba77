//! Command front end: `power`, `verify`, `scan`, `oracle` and `suite`.
//!
//! Exit codes: 0 pass, 1 error or failed claim, 2 hypotheses flagged.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::body::{boundary_frame, BodyDescriptor};
use crate::config::{CommandKind, ResolutionBlock, RunConfig, ScanMode};
use crate::error::{Error, Result};
use crate::measure::MeasureDescriptor;
use crate::operator::concavity_power;
use crate::report::to_json;
use crate::scan::{
    oracle_power, scan_b, scan_dim_bm, scan_log_concavity, OracleOptions, PerturbationSample, ScanCurve, ScanKind,
    PRNG_NAME,
};
use crate::verify::{hypothesis_flags, verify_all, CheckReport, Verdict, HYPOTHESES_VIOLATED};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FLAGGED: i32 = 2;
pub const ORACLE_TOLERANCE: f64 = 5e-3;
pub const THREADS_ENV: &str = "CONCAVITY_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "concavity-lab",
    version,
    about = "Concavity powers of log-concave measures on planar convex bodies"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Commands,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Report path; defaults to the config's `outputs.report`, then stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV path for curves or nodal data.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides such as `N=32,M=256,S=128,points=41`.
    #[arg(long)]
    pub resolution: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Commands {
    /// Solve for ρ̄ and report the concavity power.
    Power(RunArgs),
    /// Run every inequality and identity check.
    Verify(RunArgs),
    /// Scan a concavity curve.
    Scan {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        mode: Option<ScanMode>,
    },
    /// Compare the PDE power with sampled finite-difference exponents.
    Oracle(RunArgs),
    /// Run every config in a directory and compare exit codes.
    Suite {
        /// Directory of JSON configs.
        #[arg(long)]
        config: PathBuf,
        /// Directory receiving per-config reports and `suite.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Result of one command: exit code, JSON report and optional CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub report: String,
    pub csv: Option<String>,
}

impl Outcome {
    fn error(command: Option<CommandKind>, err: &Error) -> Self {
        #[derive(Serialize)]
        struct ErrorReport<'a> {
            command: Option<CommandKind>,
            version: &'a str,
            error: String,
            exit_code: i32,
        }
        Outcome {
            exit_code: EXIT_ERROR,
            report: to_json(&ErrorReport {
                command,
                version: env!("CARGO_PKG_VERSION"),
                error: err.to_string(),
                exit_code: EXIT_ERROR,
            }),
            csv: None,
        }
    }
}

#[derive(Debug, Serialize)]
struct Meta<'a> {
    command: CommandKind,
    version: &'static str,
    config_hash: String,
    resolution: ResolutionBlock,
    tolerance: f64,
    seed: u64,
    measure: &'a MeasureDescriptor,
    body: &'a BodyDescriptor,
    #[serde(skip_serializing_if = "Option::is_none")]
    second_body: Option<&'a BodyDescriptor>,
    flags: Vec<String>,
    warnings: Vec<String>,
}

fn is_flagged(flags: &[String]) -> bool {
    flags.iter().any(|f| f.starts_with(HYPOTHESES_VIOLATED))
}

fn merge(into: &mut Vec<String>, more: &[String]) {
    for f in more {
        if !into.contains(f) {
            into.push(f.clone());
        }
    }
}

/// Runs one command on a validated configuration.
pub fn execute(config: &RunConfig, command: CommandKind, mode: Option<ScanMode>) -> Outcome {
    match try_execute(config, command, mode) {
        Ok(out) => out,
        Err(e) => Outcome::error(Some(command), &e),
    }
}

fn try_execute(config: &RunConfig, command: CommandKind, mode: Option<ScanMode>) -> Result<Outcome> {
    config.validate()?;
    let spec = config.resolution.quadrature()?;
    let measure = config.measure.build()?;
    let (body, warning) = config.body.build()?;
    let mut meta = Meta {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config_hash: config.hash(),
        resolution: config.resolution,
        tolerance: config.tolerance,
        seed: config.seed,
        measure: &config.measure,
        body: &config.body,
        second_body: config.second_body.as_ref(),
        flags: hypothesis_flags(&measure, &body),
        warnings: warning.into_iter().collect(),
    };
    let n = config.resolution.n;
    let flagged_exit = |flags: &[String], pass: bool| {
        if is_flagged(flags) {
            EXIT_FLAGGED
        } else if pass {
            EXIT_PASS
        } else {
            EXIT_ERROR
        }
    };

    match command {
        CommandKind::Power => {
            #[derive(Serialize)]
            struct PowerReport<'a> {
                #[serde(flatten)]
                meta: Meta<'a>,
                p: f64,
                integral_rho: f64,
                mu_k: f64,
                weak_residual: f64,
                strong_residual: f64,
                min_eigenvalue: f64,
                b_norm: f64,
                odd_fraction: f64,
                coefficients: Vec<f64>,
                exit_code: i32,
            }
            let cp = concavity_power(&measure, &body, n, &spec)?;
            let sol = &cp.solution;
            let exit_code = flagged_exit(&meta.flags, true);
            let frame = &cp.system.frame;
            let mut csv = String::from("theta,h,r,rho_bar\n");
            for j in 0..frame.len() {
                let _ = writeln!(
                    csv,
                    "{:.16e},{:.16e},{:.16e},{:.16e}",
                    frame.theta[j], frame.h[j], frame.r[j], sol.nodal[j]
                );
            }
            let report = PowerReport {
                p: sol.p_value,
                integral_rho: sol.integral_rho,
                mu_k: cp.system.mu_k,
                weak_residual: sol.weak_residual,
                strong_residual: sol.strong_residual,
                min_eigenvalue: sol.min_eigenvalue,
                b_norm: sol.b_norm,
                odd_fraction: sol.odd_fraction(),
                coefficients: sol.coefficients.clone(),
                exit_code,
                meta,
            };
            Ok(Outcome {
                exit_code,
                report: to_json(&report),
                csv: Some(csv),
            })
        }
        CommandKind::Verify => {
            #[derive(Serialize)]
            struct VerifyReport<'a> {
                #[serde(flatten)]
                meta: Meta<'a>,
                p: f64,
                all_hold: bool,
                checks: Vec<CheckReport>,
                exit_code: i32,
            }
            let cp = concavity_power(&measure, &body, n, &spec)?;
            let checks = verify_all(
                &measure,
                &body,
                &cp.solution,
                &config.test_functions,
                &spec,
                config.tolerance,
            )?;
            let all_hold = checks.iter().all(|c| c.verdict == Verdict::Holds);
            let exit_code = flagged_exit(&meta.flags, all_hold);
            let frame = boundary_frame(&body, &measure, spec.boundary_nodes())?;
            Ok(Outcome {
                exit_code,
                report: to_json(&VerifyReport {
                    p: cp.p_value,
                    all_hold,
                    checks,
                    exit_code,
                    meta,
                }),
                csv: Some(frame.to_csv()),
            })
        }
        CommandKind::Scan => {
            #[derive(Serialize)]
            struct ScanReport<'a> {
                #[serde(flatten)]
                meta: Meta<'a>,
                mode: ScanMode,
                kind: ScanKind,
                points: usize,
                t_min: f64,
                t_max: f64,
                step: f64,
                min_margin: f64,
                curve_tolerance: f64,
                verdict: Verdict,
                exit_code: i32,
            }
            let mode = mode.or(config.mode).unwrap_or(ScanMode::B);
            let points = config.resolution.points;
            let second = || -> Result<_> {
                let desc = config
                    .second_body
                    .as_ref()
                    .ok_or_else(|| Error::Config(format!("scan mode {mode:?} needs `second_body`")))?;
                let (l, w) = desc.build()?;
                Ok((l, w))
            };
            let curve: ScanCurve = match mode {
                ScanMode::B => scan_b(&measure, &body, config.scan.t_min, config.scan.t_max, points, &spec)?,
                ScanMode::DimBm | ScanMode::Logc => {
                    let (l, w) = second()?;
                    meta.warnings.extend(w);
                    if mode == ScanMode::DimBm {
                        scan_dim_bm(&measure, &body, &l, points, &spec)?
                    } else {
                        meta.flags.clear();
                        scan_log_concavity(&measure, &body, &l, points, &spec)?
                    }
                }
            };
            merge(&mut meta.flags, &curve.flags);
            let exit_code = flagged_exit(&meta.flags, curve.is_concave());
            let csv = curve.to_csv();
            Ok(Outcome {
                exit_code,
                report: to_json(&ScanReport {
                    mode,
                    kind: curve.kind,
                    points: curve.t.len(),
                    t_min: curve.t[0],
                    t_max: curve.t[curve.t.len() - 1],
                    step: curve.step,
                    min_margin: curve.min_margin,
                    curve_tolerance: curve.tolerance,
                    verdict: curve.verdict,
                    exit_code,
                    meta,
                }),
                csv: Some(csv),
            })
        }
        CommandKind::Oracle => {
            #[derive(Serialize)]
            struct OracleReport<'a> {
                #[serde(flatten)]
                meta: Meta<'a>,
                p_hat: f64,
                p_pde: f64,
                p_rho_bar: f64,
                gap: f64,
                worst_seed: Option<u64>,
                indeterminate_count: usize,
                samples: usize,
                degree: u32,
                t_step: f64,
                prng: &'static str,
                oracle_tolerance: f64,
                passed: bool,
                worst: PerturbationSample,
                exit_code: i32,
            }
            let cp = concavity_power(&measure, &body, n, &spec)?;
            let opts = OracleOptions {
                samples: config.oracle.samples,
                degree: config.oracle.degree,
                t_step: config.oracle.t_step,
                seed: config.seed,
            };
            let r = oracle_power(&measure, &body, &cp.solution, &opts, &spec)?;
            let passed = r.p_hat >= r.p_pde - ORACLE_TOLERANCE;
            let exit_code = flagged_exit(&meta.flags, passed);
            Ok(Outcome {
                exit_code,
                report: to_json(&OracleReport {
                    p_hat: r.p_hat,
                    p_pde: r.p_pde,
                    p_rho_bar: r.p_rho_bar,
                    gap: r.gap(),
                    worst_seed: r.worst_seed,
                    indeterminate_count: r.indeterminate_count,
                    samples: r.samples,
                    degree: opts.degree,
                    t_step: opts.t_step,
                    prng: PRNG_NAME,
                    oracle_tolerance: ORACLE_TOLERANCE,
                    passed,
                    worst: r.worst,
                    exit_code,
                    meta,
                }),
                csv: None,
            })
        }
    }
}

/// Loads a config and applies command-line overrides.
pub fn prepare(args: &RunArgs) -> Result<RunConfig> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(res) = &args.resolution {
        config.resolution.apply_overrides(res)?;
    }
    Ok(config)
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.parent().unwrap_or(Path::new(".")).join(path)
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}

fn run_single(args: &RunArgs, command: CommandKind, mode: Option<ScanMode>) -> i32 {
    let config = match prepare(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    let outcome = execute(&config, command, mode);
    let report_path = args
        .out
        .clone()
        .or_else(|| config.outputs.report.as_ref().map(|p| resolve(&args.config, p)));
    let csv_path = args
        .csv
        .clone()
        .or_else(|| config.outputs.csv.as_ref().map(|p| resolve(&args.config, p)));
    let written = (|| -> Result<()> {
        match &report_path {
            Some(p) => write_file(p, &outcome.report)?,
            None => print!("{}", outcome.report),
        }
        if let (Some(p), Some(csv)) = (&csv_path, &outcome.csv) {
            write_file(p, csv)?;
        }
        Ok(())
    })();
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_ERROR;
    }
    if outcome.exit_code == EXIT_ERROR {
        if let Ok(v) = serde_json::from_str::<serde_json::Value>(&outcome.report) {
            if let Some(msg) = v.get("error").and_then(|m| m.as_str()) {
                eprintln!("error: {msg}");
            }
        }
    }
    outcome.exit_code
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteEntry {
    pub config: String,
    pub command: Option<CommandKind>,
    pub exit_code: i32,
    pub expected_exit: i32,
    pub passed: bool,
    pub report_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub version: &'static str,
    pub passed: usize,
    pub failed: usize,
    pub entries: Vec<SuiteEntry>,
}

fn sha256(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Runs every `*.json` config in `dir` in name order, returning the aggregate
/// and each config's outcome.
pub fn run_suite(dir: &Path) -> Result<(SuiteReport, Vec<(String, Outcome)>)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::Config(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Config(format!("no *.json configs in {}", dir.display())));
    }
    let mut entries = Vec::new();
    let mut outcomes = Vec::new();
    for path in paths {
        let name = path.file_name().expect("file path").to_string_lossy().into_owned();
        let loaded = RunConfig::load(&path).and_then(|c| {
            let cmd = c
                .command
                .ok_or_else(|| Error::Config(format!("{name}: suite configs need `command`")))?;
            Ok((c, cmd))
        });
        let (command, expected, outcome) = match loaded {
            Ok((c, cmd)) => (Some(cmd), c.expect_exit.unwrap_or(EXIT_PASS), execute(&c, cmd, None)),
            Err(e) => (None, EXIT_PASS, Outcome::error(None, &e)),
        };
        let error = serde_json::from_str::<serde_json::Value>(&outcome.report)
            .ok()
            .and_then(|v| v.get("error").and_then(|m| m.as_str()).map(str::to_owned));
        entries.push(SuiteEntry {
            config: name.clone(),
            command,
            exit_code: outcome.exit_code,
            expected_exit: expected,
            passed: outcome.exit_code == expected && (command.is_some() || expected == EXIT_ERROR),
            report_sha256: sha256(&outcome.report),
            error,
        });
        outcomes.push((name, outcome));
    }
    let passed = entries.iter().filter(|e| e.passed).count();
    Ok((
        SuiteReport {
            version: env!("CARGO_PKG_VERSION"),
            passed,
            failed: entries.len() - passed,
            entries,
        },
        outcomes,
    ))
}

fn suite_command(dir: &Path, out: Option<&Path>) -> i32 {
    let (report, outcomes) = match run_suite(dir) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    let json = to_json(&report);
    let written = (|| -> Result<()> {
        match out {
            Some(dir) => {
                for (name, o) in &outcomes {
                    let stem = name.trim_end_matches(".json");
                    write_file(&dir.join(format!("{stem}.report.json")), &o.report)?;
                    if let Some(csv) = &o.csv {
                        write_file(&dir.join(format!("{stem}.csv")), csv)?;
                    }
                }
                write_file(&dir.join("suite.json"), &json)?;
            }
            None => print!("{json}"),
        }
        Ok(())
    })();
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_ERROR;
    }
    for e in report.entries.iter().filter(|e| !e.passed) {
        eprintln!(
            "failed: {} (exit {}, expected {}){}",
            e.config,
            e.exit_code,
            e.expected_exit,
            e.error.as_deref().map(|m| format!(": {m}")).unwrap_or_default()
        );
    }
    if report.failed == 0 {
        EXIT_PASS
    } else {
        EXIT_ERROR
    }
}

/// Sizes the global thread pool from `CONCAVITY_LAB_THREADS` when set.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
        if n == 0 {
            return Err(Error::Config(format!("{THREADS_ENV} must be positive")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

pub fn run(cli: Cli) -> i32 {
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return EXIT_ERROR;
    }
    match &cli.command {
        Commands::Power(a) => run_single(a, CommandKind::Power, None),
        Commands::Verify(a) => run_single(a, CommandKind::Verify, None),
        Commands::Scan { run, mode } => run_single(run, CommandKind::Scan, *mode),
        Commands::Oracle(a) => run_single(a, CommandKind::Oracle, None),
        Commands::Suite { config, out } => suite_command(config, out.as_deref()),
    }
}
