//! Command-line front end: reproducible experiment runs over the library's
//! solvers, coverings, exclusion bounds, quotients, and certificates.
//!
//! Flags override a JSON config file, which overrides built-in defaults
//! (`eps = 1/2` generally, `1/3` in hardy mode, `delta = 0.1`). All
//! randomness flows from one seed per run; identical config plus seed
//! produces byte-identical reports. Exit codes: 0 ok, 2 config error,
//! 3 I/O error, 4 numeric failure.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use ltlab::certify::{
    calibrate, certificate_factor, certify, lambda_threshold_eps, Calibration,
    CertificateReport, CertifyInput, CertifyParams,
};
use ltlab::constants::catalogue;
use ltlab::covering::{decompose, verify, CoveringParams};
use ltlab::error::Error;
use ltlab::exclusion::{build_ball_families, exclusion_lower_bound, interaction_expectation};
use ltlab::gn::{
    estimate_local_constant, estimate_lup1_constant, minimize_gn, minimize_hgn,
    EmpiricalConstant, OptimizerParams, QuotientResult,
};
use ltlab::grid::{BoxSpec, DomainMask};
use ltlab::io;
use ltlab::nbody::QuotientParams;

const SCHEMA: u32 = 1;

#[derive(Parser)]
#[command(name = "ltlab", version, about = "numerical laboratory for Lieb-Thirring-type bounds")]
struct Cli {
    /// JSON config file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

/// Optional values a config file may provide.
#[derive(Debug, Default, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    s: Option<f64>,
    d: Option<usize>,
    delta: Option<f64>,
    epsilon_inv: Option<u32>,
    lambda: Option<f64>,
    points: Option<usize>,
    box_length: Option<f64>,
    seed: Option<u64>,
    max_level: Option<u32>,
    restarts: Option<usize>,
    max_iters: Option<usize>,
    tol_rel: Option<f64>,
    step_size: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the closed-form analytic constants as JSON.
    Constants(OutArgs),
    /// Variational Gagliardo-Nirenberg constant estimate.
    Gn(SolverArgs),
    /// Hardy-Gagliardo-Nirenberg estimate (requires 2s < d).
    Hgn(SolverArgs),
    /// Empirical constant of the refined local uncertainty principle.
    LocalConstant(LocalConstantArgs),
    /// Empirical constant of the cube local uncertainty principle.
    Lup1Constant(Lup1Args),
    /// Stopping-time covering of a density file.
    Cover(CoverArgs),
    /// Ball families and the exclusion lower bound of a density or state.
    Exclusion(ExclusionArgs),
    /// Energy quotient of a stored N-body state.
    Quotient(QuotientArgs),
    /// Quotient against coupling: CSV over a lambda grid.
    SweepLambda(SweepLambdaArgs),
    /// Certified factor and threshold against delta: CSV for the trend plot.
    SweepDelta(SweepDeltaArgs),
    /// Assemble a certificate for a state or density.
    Certify(CertifyArgs),
    /// Produce the empirical-constant calibration file used by certify.
    Calibrate(CalibrateArgs),
}

#[derive(Args)]
struct OutArgs {
    #[arg(long, default_value = "constants")]
    out: String,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    points: Option<usize>,
    /// Box side length (the box is centered at the origin).
    #[arg(long = "box")]
    box_length: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<String>,
    /// Also write the quotient-vs-iteration trace as CSV.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct LocalConstantArgs {
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    /// Physical side of the inner cube shape.
    #[arg(long, default_value_t = 1.0)]
    side: f64,
    /// Shape of the cluster support: "cube" or "domino".
    #[arg(long, default_value = "cube")]
    shape: String,
    /// Mask file for a custom Omega (overrides --shape).
    #[arg(long)]
    omega: Option<PathBuf>,
    /// Mask file for a custom ~Omega (required with --omega).
    #[arg(long)]
    omega_tilde: Option<PathBuf>,
    /// Gagliardo-Nirenberg constant to use; read from --calibration if given.
    #[arg(long)]
    gn_constant: Option<f64>,
    #[arg(long)]
    calibration: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "local-constant")]
    out: String,
}

#[derive(Args)]
struct Lup1Args {
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "lup1-constant")]
    out: String,
}

#[derive(Args)]
struct CoverArgs {
    /// Density grid file (base path of the .json/.bin pair).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    eps_inv: Option<u32>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    max_level: Option<u32>,
    #[arg(long)]
    hardy: bool,
    #[arg(long, default_value = "cover")]
    out: String,
    /// Also write per-cube rows as CSV.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct ExclusionArgs {
    /// Density or state file; state files contribute the measured interaction.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    eps_inv: Option<u32>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    max_level: Option<u32>,
    #[arg(long, default_value = "exclusion")]
    out: String,
}

#[derive(Args)]
struct QuotientArgs {
    /// Dense N-body state file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    hardy: bool,
    #[arg(long, default_value = "quotient")]
    out: String,
}

#[derive(Args)]
struct SweepLambdaArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    hardy: bool,
    /// Comma-separated coupling values.
    #[arg(long, default_value = "0,0.5,1,2,4,8")]
    lambdas: String,
    #[arg(long, default_value = "sweep-lambda")]
    out: String,
}

#[derive(Args)]
struct SweepDeltaArgs {
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    /// Comma-separated thresholds.
    #[arg(long, default_value = "0.3,0.2,0.1,0.05")]
    deltas: String,
    #[arg(long)]
    eps_inv: Option<u32>,
    #[arg(long)]
    calibration: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "sweep-delta")]
    out: String,
}

#[derive(Args)]
struct CertifyArgs {
    /// Density or dense-state file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    eps_inv: Option<u32>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    hardy: bool,
    #[arg(long)]
    max_level: Option<u32>,
    /// Calibration file from `ltlab calibrate`.
    #[arg(long)]
    calibration: Option<PathBuf>,
    #[arg(long, default_value = "certify")]
    out: String,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    /// Also calibrate the Hardy-side constants (requires 2s < d).
    #[arg(long)]
    hardy: bool,
    /// Also calibrate the kinetic Hardy-improvement constant.
    #[arg(long)]
    frank: bool,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "calibration")]
    out: String,
}

fn main() {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let file_cfg = match load_config(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => fail(&e),
    };
    if let Err(e) = run(cli.command, &file_cfg) {
        fail(&e);
    }
}

fn fail(e: &Error) -> ! {
    let (kind, code) = match e {
        Error::Config(_) => ("config", 2),
        Error::Io(_) | Error::Json(_) => ("io", 3),
        Error::Numeric(_) => ("numeric", 4),
    };
    eprintln!("ltlab: error[{kind}]: {e}");
    std::process::exit(code);
}

fn load_config(path: Option<&Path>) -> Result<FileConfig, Error> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text)
                .map_err(|e| Error::config(format!("bad config file: {e}")))
        }
    }
}

fn pick<T: Copy>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn require_s(flag: Option<f64>, file: Option<f64>) -> Result<f64, Error> {
    flag.or(file)
        .ok_or_else(|| Error::config("missing required parameter --s"))
}

fn default_grid(d: usize) -> (usize, f64) {
    match d {
        1 => (2048, 40.0),
        2 => (128, 30.0),
        _ => (64, 20.0),
    }
}

fn write_report<T: Serialize>(out: &str, report: &T) -> Result<PathBuf, Error> {
    let path = PathBuf::from(format!("{out}.report.json"));
    let mut f = std::fs::File::create(&path)?;
    serde_json::to_writer_pretty(&mut f, report)?;
    use std::io::Write;
    f.write_all(b"\n")?;
    Ok(path)
}

fn write_csv(out: &str, header: &str, rows: &[String]) -> Result<PathBuf, Error> {
    let path = PathBuf::from(format!("{out}.csv"));
    let mut text = String::from(header);
    text.push('\n');
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    std::fs::write(&path, text)?;
    Ok(path)
}

fn optimizer(
    a: &SolverArgs,
    cfg: &FileConfig,
) -> OptimizerParams {
    OptimizerParams {
        max_iters: pick(a.max_iters, cfg.max_iters, 2000),
        step_size: pick(a.step, cfg.step_size, 0.1),
        tol_rel: pick(a.tol, cfg.tol_rel, 1e-9),
        restarts: pick(a.restarts, cfg.restarts, 4),
        seed: pick(a.seed, cfg.seed, 7),
    }
}

#[derive(Serialize)]
struct SolverReport {
    schema: u32,
    command: String,
    s: f64,
    d: usize,
    points: usize,
    box_length: f64,
    optimizer: OptimizerParams,
    value: f64,
    converged: bool,
    iterations: usize,
    per_restart: Vec<f64>,
}

fn solver_report(
    command: &str,
    s: f64,
    d: usize,
    points: usize,
    box_length: f64,
    opt: &OptimizerParams,
    r: &QuotientResult,
) -> SolverReport {
    SolverReport {
        schema: SCHEMA,
        command: command.into(),
        s,
        d,
        points,
        box_length,
        optimizer: opt.clone(),
        value: r.value,
        converged: r.converged,
        iterations: r.iterations,
        per_restart: r.per_restart.clone(),
    }
}

fn run_solver(a: SolverArgs, cfg: &FileConfig, hardy: bool) -> Result<(), Error> {
    let s = require_s(a.s, cfg.s)?;
    let d = pick(a.d, cfg.d, if hardy { 3 } else { 1 });
    let (dp, dl) = default_grid(d);
    let points = pick(a.points, cfg.points, dp);
    let box_length = pick(a.box_length, cfg.box_length, dl);
    let opt = optimizer(&a, cfg);
    let box_spec = BoxSpec::centered_cube(d, box_length / 2.0, points)?;
    let command = if hardy { "hgn" } else { "gn" };
    let result = if hardy {
        minimize_hgn(s, d, &box_spec, &opt)?
    } else {
        minimize_gn(s, d, &box_spec, &opt)?
    };
    let report = solver_report(command, s, d, points, box_length, &opt, &result);
    let out = a.out.unwrap_or_else(|| command.to_string());
    let path = write_report(&out, &report)?;
    if a.csv {
        let rows: Vec<String> = result
            .trace
            .iter()
            .enumerate()
            .map(|(i, q)| format!("{i},{q:.16e}"))
            .collect();
        write_csv(&out, "iteration,quotient", &rows)?;
    }
    println!("{command}: value = {:.8} (converged: {})", result.value, result.converged);
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn load_calibration(path: &Path) -> Result<Calibration, Error> {
    let text = std::fs::read_to_string(path).map_err(|_| {
        Error::config(format!("missing calibration file {}", path.display()))
    })?;
    serde_json::from_str(&text).map_err(|e| Error::config(format!("bad calibration: {e}")))
}

/// Unit-side cube or domino plus its side/4 closure, dilated by `side`.
fn shape_masks(
    d: usize,
    side: f64,
    shape: &str,
) -> Result<(DomainMask, DomainMask), Error> {
    let points = match d {
        1 => 512,
        2 => 64,
        _ => 32,
    };
    let long = if shape == "domino" { 2.0 } else { 1.0 };
    let box_spec = BoxSpec::new(
        vec![-1.0 * side; d],
        vec![(long + 1.0) * side; d],
        vec![points; d],
    )?;
    let omega = DomainMask::from_predicate(box_spec.clone(), move |x| {
        x[0] > 0.0 && x[0] < long * side && x[1..].iter().all(|&v| v > 0.0 && v < side)
    })?;
    let tilde = DomainMask::from_predicate(box_spec, move |x| {
        let mut acc = 0.0;
        for (i, &v) in x.iter().enumerate() {
            let hi = if i == 0 { long * side } else { side };
            let dv = if v < 0.0 {
                -v
            } else if v > hi {
                v - hi
            } else {
                0.0
            };
            acc += dv * dv;
        }
        acc.sqrt() < side / 4.0
    })?;
    Ok((omega, tilde))
}

fn run(cmd: Command, cfg: &FileConfig) -> Result<(), Error> {
    match cmd {
        Command::Constants(a) => {
            #[derive(Serialize)]
            struct Report {
                schema: u32,
                command: String,
                constants: Vec<ltlab::constants::ConstantValue>,
            }
            let report = Report {
                schema: SCHEMA,
                command: "constants".into(),
                constants: catalogue(),
            };
            println!("{}", serde_json::to_string_pretty(&report)?);
            write_report(&a.out, &report)?;
            Ok(())
        }
        Command::Gn(a) => run_solver(a, cfg, false),
        Command::Hgn(a) => run_solver(a, cfg, true),
        Command::LocalConstant(a) => {
            let s = require_s(a.s, cfg.s)?;
            let d = pick(a.d, cfg.d, 1);
            let delta = pick(a.delta, cfg.delta, 0.1);
            let opt = OptimizerParams {
                restarts: pick(a.trials, cfg.restarts, 128),
                seed: pick(a.seed, cfg.seed, 7),
                ..Default::default()
            };
            let gn_constant = match (&a.calibration, a.gn_constant) {
                (_, Some(v)) => v,
                (Some(p), None) => load_calibration(p)?.gn_constant,
                (None, None) if (s - 1.0).abs() < 1e-12 && d == 1 => {
                    ltlab::constants::gn_reference_1d().value
                }
                _ => {
                    return Err(Error::config(
                        "provide --gn-constant or --calibration for this (s, d)",
                    ))
                }
            };
            let (omega, tilde) = match (&a.omega, &a.omega_tilde) {
                (Some(po), Some(pt)) => (io::read_mask(po)?, io::read_mask(pt)?),
                (None, None) => shape_masks(d, a.side, &a.shape)?,
                _ => {
                    return Err(Error::config(
                        "--omega and --omega-tilde must be given together",
                    ))
                }
            };
            let est = estimate_local_constant(s, delta, &omega, &tilde, &opt, gn_constant, false)?;
            #[derive(Serialize)]
            struct Report {
                schema: u32,
                command: String,
                s: f64,
                d: usize,
                delta: f64,
                side: f64,
                shape: String,
                gn_constant: f64,
                seed: u64,
                estimate: EmpiricalConstant,
            }
            let report = Report {
                schema: SCHEMA,
                command: "local-constant".into(),
                s,
                d,
                delta,
                side: a.side,
                shape: a.shape.clone(),
                gn_constant,
                seed: opt.seed,
                estimate: est,
            };
            println!("local-constant: C = {:.8}", report.estimate.value);
            write_report(&a.out, &report)?;
            Ok(())
        }
        Command::Lup1Constant(a) => {
            let s = require_s(a.s, cfg.s)?;
            let d = pick(a.d, cfg.d, 1);
            let opt = OptimizerParams {
                restarts: pick(a.trials, cfg.restarts, 128),
                seed: pick(a.seed, cfg.seed, 7),
                ..Default::default()
            };
            let est = estimate_lup1_constant(s, d, &opt)?;
            #[derive(Serialize)]
            struct Report {
                schema: u32,
                command: String,
                s: f64,
                d: usize,
                seed: u64,
                estimate: EmpiricalConstant,
            }
            let report = Report {
                schema: SCHEMA,
                command: "lup1-constant".into(),
                s,
                d,
                seed: opt.seed,
                estimate: est,
            };
            println!("lup1-constant: C = {:.8}", report.estimate.value);
            write_report(&a.out, &report)?;
            Ok(())
        }
        Command::Cover(a) => {
            let rho = io::read_grid_function(&a.input)?;
            let params = CoveringParams {
                epsilon_inv: pick(a.eps_inv, cfg.epsilon_inv, if a.hardy { 3 } else { 2 }),
                delta: pick(a.delta, cfg.delta, 0.1),
                max_level: pick(a.max_level, cfg.max_level, 8),
                hardy_mode: a.hardy,
            };
            let dec = decompose(&rho, &params)?;
            let audit = verify(&dec, &rho);
            #[derive(Serialize)]
            struct Report {
                schema: u32,
                command: String,
                input: String,
                params: CoveringParams,
                total_mass: f64,
                levels: usize,
                decomposition: ltlab::covering::Decomposition,
                verify: ltlab::covering::VerifyReport,
            }
            let report = Report {
                schema: SCHEMA,
                command: "cover".into(),
                input: a.input.display().to_string(),
                params: params.clone(),
                total_mass: dec.total_mass,
                levels: dec.levels.len(),
                decomposition: dec.clone(),
                verify: audit,
            };
            if a.csv {
                let mut rows = Vec::new();
                for lv in &dec.levels {
                    for (c, m) in &lv.low_mass {
                        rows.push(format!(
                            "{},low-mass,{},{:.12e}",
                            lv.level,
                            index_str(&c.index),
                            m
                        ));
                    }
                    for (tag, clusters) in [
                        ("light", &lv.light_clusters),
                        ("heavy", &lv.heavy_clusters),
                    ] {
                        for cl in clusters.iter() {
                            for c in &cl.cubes {
                                rows.push(format!(
                                    "{},{tag},{},{:.12e}",
                                    lv.level,
                                    index_str(&c.index),
                                    cl.closure_mass
                                ));
                            }
                        }
                    }
                }
                write_csv(&a.out, "level,kind,index,mass", &rows)?;
            }
            println!(
                "cover: {} levels, residual {}, all invariants pass: {}",
                dec.levels.len(),
                dec.residual.len(),
                report.verify.all_pass()
            );
            write_report(&a.out, &report)?;
            Ok(())
        }
        Command::Exclusion(a) => {
            let s = require_s(a.s, cfg.s)?;
            let params = CoveringParams {
                epsilon_inv: pick(a.eps_inv, cfg.epsilon_inv, 2),
                delta: pick(a.delta, cfg.delta, 0.1),
                max_level: pick(a.max_level, cfg.max_level, 8),
                hardy_mode: false,
            };
            let (rho, interaction) = if io::is_state_file(&a.input)? {
                let st = io::read_state(&a.input)?;
                let i = interaction_expectation(&st, s, 1.0)?;
                (st.density(), Some(i))
            } else {
                (io::read_grid_function(&a.input)?, None)
            };
            let dec = decompose(&rho, &params)?;
            let fams = build_ball_families(&dec, &rho)?;
            let bound = exclusion_lower_bound(&fams, s)?;
            #[derive(Serialize)]
            struct ScaleRow {
                level: u32,
                radius: f64,
                overlap_count: u32,
                regions: usize,
                mass: f64,
            }
            #[derive(Serialize)]
            struct Report {
                schema: u32,
                command: String,
                input: String,
                s: f64,
                params: CoveringParams,
                scales: Vec<ScaleRow>,
                dropped_balls: usize,
                bound: f64,
                interaction: Option<f64>,
                margin: Option<f64>,
            }
            let report = Report {
                schema: SCHEMA,
                command: "exclusion".into(),
                input: a.input.display().to_string(),
                s,
                params,
                scales: fams
                    .scales
                    .iter()
                    .map(|sc| ScaleRow {
                        level: sc.level,
                        radius: sc.radius,
                        overlap_count: sc.overlap_count,
                        regions: sc.regions.len(),
                        mass: sc.regions.iter().map(|r| r.mass).sum(),
                    })
                    .collect(),
                dropped_balls: fams.dropped.len(),
                bound,
                interaction,
                margin: interaction.map(|i| i - bound),
            };
            println!(
                "exclusion: bound = {bound:.8}{}",
                report
                    .interaction
                    .map(|i| format!(", interaction = {i:.8}"))
                    .unwrap_or_default()
            );
            write_report(&a.out, &report)?;
            Ok(())
        }
        Command::Quotient(a) => {
            let s = require_s(a.s, cfg.s)?;
            let lambda = pick(a.lambda, cfg.lambda, 1.0);
            let st = io::read_state(&a.input)?;
            let q = st.lt_quotient(&QuotientParams {
                s,
                lambda,
                hardy: a.hardy,
            })?;
            #[derive(Serialize)]
            struct Report {
                schema: u32,
                command: String,
                input: String,
                s: f64,
                lambda: f64,
                hardy: bool,
                quotient: ltlab::nbody::QuotientBreakdown,
            }
            let report = Report {
                schema: SCHEMA,
                command: "quotient".into(),
                input: a.input.display().to_string(),
                s,
                lambda,
                hardy: a.hardy,
                quotient: q,
            };
            println!("quotient: {:.8}", q.value);
            write_report(&a.out, &report)?;
            Ok(())
        }
        Command::SweepLambda(a) => {
            let s = require_s(a.s, cfg.s)?;
            let st = io::read_state(&a.input)?;
            let lambdas = parse_list(&a.lambdas)?;
            let mut rows = Vec::new();
            let mut values = Vec::new();
            for &lambda in &lambdas {
                let q = st.lt_quotient(&QuotientParams {
                    s,
                    lambda,
                    hardy: a.hardy,
                })?;
                rows.push(format!("{lambda},{:.16e}", q.value));
                values.push((lambda, q.value));
            }
            write_csv(&a.out, "lambda,quotient", &rows)?;
            #[derive(Serialize)]
            struct Report {
                schema: u32,
                command: String,
                input: String,
                s: f64,
                hardy: bool,
                points: Vec<(f64, f64)>,
            }
            let report = Report {
                schema: SCHEMA,
                command: "sweep-lambda".into(),
                input: a.input.display().to_string(),
                s,
                hardy: a.hardy,
                points: values,
            };
            println!("sweep-lambda: {} points", lambdas.len());
            write_report(&a.out, &report)?;
            Ok(())
        }
        Command::SweepDelta(a) => {
            let s = require_s(a.s, cfg.s)?;
            let d = pick(a.d, cfg.d, 1);
            let eps_inv = pick(a.eps_inv, cfg.epsilon_inv, 2);
            let cal = match &a.calibration {
                Some(p) => load_calibration(p)?,
                None => return Err(Error::config("sweep-delta requires --calibration")),
            };
            if (cal.s - s).abs() > 1e-12 || cal.d != d {
                return Err(Error::config("calibration does not match (s, d)"));
            }
            let deltas = parse_list(&a.deltas)?;
            let seed = pick(a.seed, cfg.seed, cal.provenance.seed);
            let mut rows = Vec::new();
            let mut table = Vec::new();
            for &delta in &deltas {
                // the cluster constant depends on delta: re-estimate it on
                // the unit shapes at this delta before forming the threshold
                let opt = OptimizerParams {
                    restarts: 96,
                    seed,
                    ..Default::default()
                };
                let (omega, tilde) = shape_masks(d, 1.0, "cube")?;
                let lup2 =
                    estimate_local_constant(s, delta, &omega, &tilde, &opt, cal.gn_constant, false)?;
                let mut cal_delta = cal.clone();
                cal_delta.delta = delta;
                cal_delta.lup2_unit = lup2;
                let lambda_star =
                    lambda_threshold_eps(delta, s, d, &cal_delta, 1.0 / eps_inv as f64)?;
                let factor = certificate_factor(delta, s, d, cal.lup1.value, cal.gn_constant);
                rows.push(format!("{delta},{lambda_star:.16e},{factor:.16e}"));
                table.push((delta, lambda_star, factor));
            }
            write_csv(&a.out, "delta,lambda_star,factor", &rows)?;
            #[derive(Serialize)]
            struct Report {
                schema: u32,
                command: String,
                s: f64,
                d: usize,
                epsilon_inv: u32,
                seed: u64,
                gn_constant: f64,
                lup1_constant: f64,
                rows: Vec<(f64, f64, f64)>,
            }
            let report = Report {
                schema: SCHEMA,
                command: "sweep-delta".into(),
                s,
                d,
                epsilon_inv: eps_inv,
                seed,
                gn_constant: cal.gn_constant,
                lup1_constant: cal.lup1.value,
                rows: table,
            };
            println!("sweep-delta: {} rows", deltas.len());
            write_report(&a.out, &report)?;
            Ok(())
        }
        Command::Certify(a) => {
            let s = require_s(a.s, cfg.s)?;
            let cal = match &a.calibration {
                Some(p) => load_calibration(p)?,
                None => return Err(Error::config("certify requires --calibration")),
            };
            let params = CertifyParams {
                s,
                delta: pick(a.delta, cfg.delta, 0.1),
                epsilon_inv: pick(a.eps_inv, cfg.epsilon_inv, if a.hardy { 3 } else { 2 }),
                lambda: pick(a.lambda, cfg.lambda, 1.0),
                hardy: a.hardy,
                max_level: pick(a.max_level, cfg.max_level, 8),
            };
            let report: CertificateReport = if io::is_state_file(&a.input)? {
                let st = io::read_state(&a.input)?;
                certify(CertifyInput::State(&st), &params, &cal)?
            } else {
                let rho = io::read_grid_function(&a.input)?;
                certify(CertifyInput::Density(&rho), &params, &cal)?
            };
            #[derive(Serialize)]
            struct Wrapped {
                schema: u32,
                command: String,
                input: String,
                report: CertificateReport,
            }
            let wrapped = Wrapped {
                schema: SCHEMA,
                command: "certify".into(),
                input: a.input.display().to_string(),
                report,
            };
            println!(
                "certify: factor = {:.8}, valid = {}, certified = {:.8}{}",
                wrapped.report.factor,
                wrapped.report.valid,
                wrapped.report.certified_lower_bound,
                wrapped
                    .report
                    .measured_quotient
                    .map(|m| format!(", measured = {m:.8}"))
                    .unwrap_or_default()
            );
            write_report(&a.out, &wrapped)?;
            Ok(())
        }
        Command::Calibrate(a) => {
            let s = require_s(a.s, cfg.s)?;
            let d = pick(a.d, cfg.d, 1);
            let delta = pick(a.delta, cfg.delta, 0.1);
            let opt = OptimizerParams {
                max_iters: pick(a.max_iters, cfg.max_iters, 2000),
                restarts: pick(a.restarts, cfg.restarts, 4),
                seed: pick(a.seed, cfg.seed, 7),
                ..Default::default()
            };
            let cal = calibrate(s, d, delta, &opt, a.hardy, a.frank)?;
            let path = PathBuf::from(format!("{}.json", a.out));
            let mut f = std::fs::File::create(&path)?;
            serde_json::to_writer_pretty(&mut f, &cal)?;
            use std::io::Write;
            f.write_all(b"\n")?;
            println!(
                "calibrate: gn = {:.8}, lup1 = {:.6}, lup2 = {:.6}",
                cal.gn_constant, cal.lup1.value, cal.lup2_unit.value
            );
            eprintln!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn index_str(idx: &[u64]) -> String {
    idx.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(":")
}

fn parse_list(text: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::config(format!("bad numeric list entry '{t}'")))
        })
        .collect()
}
