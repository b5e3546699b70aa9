//! The four subcommands. Each returns the exit status and writes its
//! artifacts under the output directory.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use feller_core::checker::{
    check_characteristics_growth, check_growth_g, check_local_boundedness, check_mapping_property,
    check_relativistic_conditions, xi_probes, ProbeSchedule,
};
use feller_core::generator::{apply_characteristics, apply_fourier, TestFunction};
use feller_core::quad::QuadSpec;
use feller_core::simulator::{csv_header, run_paths, simulate_interlaced, PathSample};
use feller_core::verifier::{
    mean_and_se, verify_conservative, verify_feller_vanishing, verify_generator_consistency,
};
use feller_core::{validate_cndf, CheckReport, Error, SymbolField, Verdict};

use crate::config::{Route, RunConfig};

/// Usage or configuration problem.
pub const EXIT_USAGE: i32 = 64;
/// Output could not be written.
pub const EXIT_IO: i32 = 74;

/// A failure that ends a subcommand before it reaches a verdict.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Library(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_IO,
            CliError::Library(Error::Config(_) | Error::Dimension { .. } | Error::Expr { .. }) => {
                EXIT_USAGE
            }
            CliError::Library(Error::Hypothesis(_)) => Verdict::Fail.exit_code(),
            CliError::Library(_) => Verdict::Inconclusive.exit_code(),
        }
    }
}

/// Settings shared by every subcommand after flag overrides.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub force: bool,
}

/// What a subcommand produced: its exit status and the text for stdout.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub status: i32,
    pub stdout: String,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(dir: &Path, name: &str, body: &[u8]) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(name);
    fs::write(&path, body).map_err(io_err(&path))?;
    Ok(path)
}

fn probes_csv(report: &CheckReport) -> String {
    let mut s = String::from("check,radius,direction,x,quantity,estimate,note\n");
    for (name, p) in report.flat_records() {
        let x: Vec<String> = p.x.iter().map(|v| v.to_string()).collect();
        let note = p.note.as_deref().unwrap_or("").replace('"', "'");
        let _ = writeln!(
            s,
            "\"{name}\",{},{},\"{}\",\"{}\",{},\"{note}\"",
            p.radius,
            p.direction,
            x.join(" "),
            p.quantity,
            p.estimate
        );
    }
    s
}

fn emit_report(dir: &Path, stem: &str, report: &CheckReport) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(report).expect("reports serialize");
    write_file(dir, &format!("{stem}.json"), json.as_bytes())?;
    write_file(dir, &format!("{stem}.txt"), report.summary().as_bytes())?;
    write_file(
        dir,
        &format!("{stem}_probes.csv"),
        probes_csv(report).as_bytes(),
    )?;
    Ok(())
}

/// A checker error becomes an inconclusive report carrying the message.
fn or_inconclusive(name: &str, r: feller_core::Result<CheckReport>) -> CheckReport {
    r.unwrap_or_else(|e| {
        let mut rep = CheckReport::new(name);
        rep.verdict = Verdict::Inconclusive;
        rep.note(e.to_string());
        rep
    })
}

/// (x, ξ) pairs for the structural audit: the origin and every probe state,
/// each against frequencies at three scales.
fn cndf_grid(sched: &ProbeSchedule) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut xs = vec![vec![0.0; sched.dim]];
    xs.extend(sched.probes().into_iter().map(|(_, _, x)| x));
    let mut xis = Vec::new();
    for rho in [0.1, 1.0, 10.0] {
        xis.extend(xi_probes(sched.dim, rho, sched.xi_samples));
    }
    let mut grid = Vec::with_capacity(xs.len() * xis.len());
    for x in &xs {
        for xi in &xis {
            grid.push((x.clone(), xi.clone()));
        }
    }
    grid
}

/// Runs the condition checkers and returns the combined report.
pub fn check_report(cfg: &RunConfig) -> Result<CheckReport, CliError> {
    let q = cfg
        .symbol
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let sched = cfg
        .schedule
        .build(q.dim())
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut parts = vec![
        validate_cndf(&q, &cndf_grid(&sched)),
        or_inconclusive("growth condition (G)", check_growth_g(&q, &sched)),
        or_inconclusive(
            "characteristics growth",
            check_characteristics_growth(&q, &sched),
        ),
        or_inconclusive(
            "mapping property",
            check_mapping_property(&q, &sched, &cfg.schedule.mapping_radii),
        ),
        or_inconclusive(
            "local boundedness",
            check_local_boundedness(&q, &cfg.schedule.compacts),
        ),
    ];
    if let Some((kappa, m, alpha)) = q.relativistic_parts() {
        parts.push(or_inconclusive(
            "relativistic conditions",
            check_relativistic_conditions(kappa, m, alpha, &sched),
        ));
    }
    Ok(CheckReport::combined(format!("check {}", cfg.name), parts))
}

pub fn cmd_check(ctx: &Context) -> Result<Outcome, CliError> {
    let report = check_report(&ctx.config)?;
    emit_report(&ctx.out_dir, "check", &report)?;
    Ok(Outcome {
        status: report.verdict.exit_code(),
        stdout: report.summary(),
    })
}

fn seed(ctx: &Context, command: &str) -> Result<u64, CliError> {
    ctx.config.simulation.seed.ok_or_else(|| {
        CliError::Usage(format!(
            "simulation.seed: `{command}` needs a seed, set it in the config or pass --seed"
        ))
    })
}

/// Refuses symbols that fail the checkers unless forced.
fn gate(ctx: &Context, command: &str) -> Result<Option<String>, CliError> {
    if ctx.force {
        return Ok(None);
    }
    let report = check_report(&ctx.config)?;
    match report.verdict {
        Verdict::Pass => Ok(None),
        Verdict::Inconclusive => Ok(Some(format!(
            "warning: `check` was inconclusive for {}; continuing",
            ctx.config.name
        ))),
        Verdict::Fail => Err(CliError::Library(Error::Hypothesis(format!(
            "{} fails `check`; rerun `{command}` with --force to proceed anyway\n{}",
            ctx.config.name,
            report.summary()
        )))),
    }
}

fn build_symbol(ctx: &Context) -> Result<SymbolField, CliError> {
    ctx.config
        .symbol
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))
}

pub fn cmd_simulate(ctx: &Context) -> Result<Outcome, CliError> {
    let seed = seed(ctx, "simulate")?;
    let mut stdout = String::new();
    if let Some(w) = gate(ctx, "simulate")? {
        stdout.push_str(&w);
        stdout.push('\n');
    }
    let q = build_symbol(ctx)?;
    let sim = ctx
        .config
        .simulation
        .sim(seed)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let lambda = sim.lambda_for(&q)?;
    let x0 = ctx.config.x0();
    let n = ctx.config.simulation.n_paths;
    let paths: Vec<PathSample> = run_paths(n, seed, |_, rng| {
        simulate_interlaced(&q, lambda, &x0, &sim.step, rng)
    })
    .into_iter()
    .collect::<feller_core::Result<_>>()?;

    fs::create_dir_all(&ctx.out_dir).map_err(io_err(&ctx.out_dir))?;
    let path = ctx.out_dir.join("paths.csv");
    let file = fs::File::create(&path).map_err(io_err(&path))?;
    let mut w = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        writeln!(w, "{}", csv_header(q.dim()))?;
        for (id, p) in paths.iter().enumerate() {
            p.write_csv(id as u64, &mut w)?;
        }
        w.flush()
    })()
    .map_err(io_err(&path))?;

    let exploded = paths.iter().filter(|p| p.exploded).count();
    let accepted: Vec<f64> = paths
        .iter()
        .map(|p| p.jumps.iter().filter(|j| j.accepted).count() as f64)
        .collect();
    let thinned: usize = paths
        .iter()
        .map(|p| p.jumps.iter().filter(|j| !j.accepted).count())
        .sum();
    let (mean, se) = mean_and_se(&accepted);
    let _ = writeln!(
        stdout,
        "simulate {}: {n} paths, seed {seed}",
        ctx.config.name
    );
    let _ = writeln!(stdout, "  lambda: {lambda:.6e}");
    let _ = writeln!(stdout, "  exploded: {exploded}");
    let _ = writeln!(
        stdout,
        "  jumps accepted: {} (mean per path {mean:.6} ± {se:.6})",
        accepted.iter().sum::<f64>() as usize
    );
    let _ = writeln!(stdout, "  jumps thinned: {thinned}");
    let _ = writeln!(stdout, "  paths: {}", path.display());
    write_file(&ctx.out_dir, "simulate.txt", stdout.as_bytes())?;
    Ok(Outcome { status: 0, stdout })
}

/// A gate failure inside the verifier is reported, not raised.
fn verifier_part(name: &str, r: feller_core::Result<CheckReport>) -> Result<CheckReport, CliError> {
    match r {
        Ok(rep) => Ok(rep),
        Err(e @ (Error::Config(_) | Error::Dimension { .. } | Error::Expr { .. })) => Err(e.into()),
        Err(Error::Hypothesis(msg)) => {
            let mut rep = CheckReport::new(name);
            rep.verdict = Verdict::Inconclusive;
            rep.note(format!("precondition failed: {msg}"));
            Ok(rep)
        }
        Err(e) => Ok(or_inconclusive(name, Err(e))),
    }
}

pub fn cmd_verify(ctx: &Context) -> Result<Outcome, CliError> {
    let seed = seed(ctx, "verify")?;
    let mut stdout = String::new();
    if let Some(w) = gate(ctx, "verify")? {
        stdout.push_str(&w);
        stdout.push('\n');
    }
    let cfg = &ctx.config;
    let q = build_symbol(ctx)?;
    let dim = q.dim();
    let usage = |e: crate::config::ConfigError| CliError::Usage(e.to_string());
    let sched = cfg.schedule.build(dim).map_err(usage)?;
    let sim = cfg.simulation.sim(seed).map_err(usage)?;
    let v = &cfg.verify;
    let bump = v
        .test_function
        .build("verify.test_function", dim)
        .map_err(usage)?;
    let gf = v
        .generator_function
        .build("verify.generator_function", dim)
        .map_err(usage)?;

    let parts = vec![
        verifier_part(
            "feller vanishing",
            verify_feller_vanishing(
                &q,
                &sim,
                &bump,
                v.t,
                &v.vanishing_radii,
                v.eps,
                v.n_paths,
                &sched,
            ),
        )?,
        verifier_part(
            "conservativeness",
            verify_conservative(
                &q,
                &sim,
                v.containment_t,
                &v.containment_starts,
                &v.containment_radii,
                v.eps,
                v.n_paths,
                &sched,
            ),
        )?,
        verifier_part(
            "generator consistency",
            verify_generator_consistency(
                &q,
                &sim,
                &gf,
                &v.generator_points,
                v.h,
                v.generator_paths,
                v.bias_per_h,
            ),
        )?,
    ];
    let report = CheckReport::combined(format!("verify {}", cfg.name), parts);
    emit_report(&ctx.out_dir, "verify", &report)?;
    stdout.push_str(&report.summary());
    Ok(Outcome {
        status: report.verdict.exit_code(),
        stdout,
    })
}

fn fmt_value(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn cmd_generator(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = &ctx.config;
    let q = build_symbol(ctx)?;
    let dim = q.dim();
    let f: TestFunction = cfg
        .generator
        .test_function
        .build("generator.test_function", dim)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let spec = QuadSpec::with_rel(1e-10);
    let route = cfg.generator.route;
    let cols: Vec<String> = (1..=dim).map(|k| format!("x_{k}")).collect();
    let mut csv = format!("{},af_characteristics,af_fourier\n", cols.join(","));
    let mut warnings = Vec::new();
    for x in &cfg.generator.points {
        let ch = match route {
            Route::Fourier => None,
            _ => Some(apply_characteristics(&q, &f, x, &spec)?),
        };
        let fo = match route {
            Route::Characteristics => None,
            Route::Fourier => Some(apply_fourier(&q, &f, x, &spec)?),
            Route::Both => match apply_fourier(&q, &f, x, &spec) {
                Ok(v) => Some(v),
                Err(e) => {
                    if warnings.is_empty() {
                        warnings.push(format!("fourier route skipped: {e}"));
                    }
                    None
                }
            },
        };
        let xs: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(csv, "{},{},{}", xs.join(","), fmt_value(ch), fmt_value(fo));
    }
    let path = write_file(&ctx.out_dir, "generator.csv", csv.as_bytes())?;
    let mut stdout = String::new();
    for w in &warnings {
        let _ = writeln!(stdout, "warning: {w}");
    }
    let _ = writeln!(
        stdout,
        "generator {}: {} points written to {}",
        cfg.name,
        cfg.generator.points.len(),
        path.display()
    );
    Ok(Outcome { status: 0, stdout })
}
