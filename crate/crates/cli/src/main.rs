use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use xrego::bounds::{crossover, crossover_distance, k_xi, tau, tau_led, tau_pointwise, tau_us, BoundReport};
use xrego::harness::{self, load_records, performance_profile, preset, run_experiment, ExperimentConfig};
use xrego::problems::{problem, slugify, suite};
use xrego::stats::wilson95;
use xrego::verify::{bound_consistency_grid, default_grid, estimate_hit_probability, McConfig, Verdict};
use xrego::xrego::{run_xrego, StopConfig};
use xrego::{Error, RngState};

#[derive(Parser, Debug)]
#[command(name = "xrego", version, about = "Random-embedding global optimization")]
struct Cli {
    /// Base random seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve a single problem.
    Run {
        #[arg(long)]
        problem: String,
        #[arg(long, default_value_t = 100)]
        dim: usize,
        /// Algorithm preset.
        #[arg(long, default_value = "a-rego-exp")]
        algorithm: String,
        #[arg(long)]
        max_embeddings: Option<usize>,
        #[arg(long)]
        max_evals: Option<u64>,
    },
    /// Run every cell of an experiment config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Record file; overrides the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Performance profiles from a record file.
    Profile {
        records: PathBuf,
        /// Write the profile as CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write an SVG plot here.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Comma-separated α grid.
        #[arg(long, value_delimiter = ',')]
        alpha: Option<Vec<f64>>,
    },
    /// Evaluate success-probability bounds. Parameters are `key=value`
    /// pairs; comma lists expand to a table.
    Bounds {
        #[command(flatten)]
        which: BoundSelect,
        params: Vec<String>,
    },
    /// Monte-Carlo check of the bound.
    Verify {
        /// `default` or `planar`; `D=.. d=.. r=..` lists override.
        #[arg(long, default_value = "default")]
        grid: String,
        #[arg(long, default_value_t = 20_000)]
        trials: u64,
        params: Vec<String>,
    },
    /// Emit the benchmark manifest at dimension `D`.
    Suite {
        #[arg(long, default_value_t = 100)]
        dim: usize,
    },
}

#[derive(clap::Args, Debug)]
#[group(required = true, multiple = false)]
struct BoundSelect {
    /// τ(r, d, D).
    #[arg(long)]
    tau: bool,
    /// Pointwise bound from eps, L, dist, d, D.
    #[arg(long)]
    pointwise: bool,
    /// Uniform-sampling probability from eps, L, D.
    #[arg(long)]
    tau_us: bool,
    /// Pointwise bound versus uniform sampling from eps, L, dist, d, D.
    #[arg(long)]
    crossover: bool,
    /// Effective-space bound from eps, L, dist, d, de.
    #[arg(long)]
    led: bool,
    /// Embeddings needed for success probability xi, from xi, tau, rho.
    #[arg(long)]
    k_xi: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse_from(std::env::args_os()) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 1 for bad input or configuration, 2 for failures while running.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Json(_) => 2,
        _ => 1,
    }
}

fn execute(cli: &Cli) -> xrego::Result<String> {
    let jobs = cli.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    // Only fails if a pool already exists, which is harmless.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    match &cli.command {
        Command::Run { problem: name, dim, algorithm, max_embeddings, max_evals } => {
            cmd_run(cli, name, *dim, algorithm, *max_embeddings, *max_evals)
        }
        Command::Experiment { config, out } => cmd_experiment(cli, config, out.as_ref(), jobs),
        Command::Profile { records, out, svg, alpha } => cmd_profile(cli, records, out.as_ref(), svg.as_ref(), alpha.as_deref()),
        Command::Bounds { which, params } => cmd_bounds(cli, which, params),
        Command::Verify { grid, trials, params } => cmd_verify(cli, grid, *trials, params),
        Command::Suite { dim } => cmd_suite(cli, *dim),
    }
}

/// Twelve significant digits, trailing zeros dropped.
fn num(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = x.abs();
    if a == 0.0 || (1e-4..1e9).contains(&a) {
        let digits = (11 - a.log10().floor().max(-5.0) as i32).max(0) as usize;
        let s = format!("{x:.digits$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.11e}");
        let (m, e) = s.split_once('e').expect("exponent");
        let m = if m.contains('.') { m.trim_end_matches('0').trim_end_matches('.') } else { m };
        format!("{m}e{e}")
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".into(), |v| v.to_string())
}

fn table(header: &[&str], rows: &[Vec<String>], format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str(&header.join(","));
            out.push('\n');
            for r in rows {
                out.push_str(&r.join(","));
                out.push('\n');
            }
        }
        _ => {
            let widths: Vec<usize> = (0..header.len())
                .map(|i| rows.iter().map(|r| r[i].len()).chain([header[i].len()]).max().unwrap_or(0))
                .collect();
            let line = |cells: Vec<&str>| {
                cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect::<Vec<_>>().join("  ")
            };
            out.push_str(&line(header.to_vec()));
            out.push('\n');
            for r in rows {
                out.push_str(&line(r.iter().map(String::as_str).collect()));
                out.push('\n');
            }
        }
    }
    out
}

fn to_json<T: serde::Serialize>(v: &T) -> xrego::Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn cmd_run(
    cli: &Cli,
    name: &str,
    dim: usize,
    algorithm: &str,
    max_embeddings: Option<usize>,
    max_evals: Option<u64>,
) -> xrego::Result<String> {
    let mut algo = preset(algorithm)?;
    algo.max_embeddings = max_embeddings.or(algo.max_embeddings);
    let slug = slugify(name);
    let obj = problem(name, dim, &harness::problem_rng(cli.seed, 0))?;
    let stop = StopConfig { n_stop: algo.n_stop, max_embeddings: algo.max_embeddings, max_evals, ..Default::default() };
    let res = run_xrego(&obj, &algo.strategy, &algo.schedule, &algo.solver, &stop, &harness::run_rng(cli.seed, 0, &slug))?;
    let n_f = harness::evals_to_target(&res.trace, obj.meta.f_star, stop.eps);
    match cli.format {
        Format::Json => to_json(&json!({
            "problem": obj.manifest(),
            "algorithm": algorithm,
            "n_f": n_f,
            "result": res,
        })),
        Format::Csv => {
            let rows: Vec<Vec<String>> = res
                .trace
                .iter()
                .map(|r| {
                    vec![
                        r.k.to_string(),
                        r.d.to_string(),
                        num(r.f_x),
                        num(r.f_opt),
                        r.evals.to_string(),
                        r.cumulative_evals.to_string(),
                        r.stagnation.to_string(),
                        r.resampled.to_string(),
                    ]
                })
                .collect();
            Ok(table(&["k", "d", "f_x", "f_opt", "evals", "cumulative_evals", "stagnation", "resampled"], &rows, Format::Csv))
        }
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "problem      {} (D={}, d_e={}, f*={})", obj.name, dim, opt(obj.meta.effective_dim), opt(obj.meta.f_star.map(num)));
            let _ = writeln!(s, "algorithm    {algorithm}");
            let _ = writeln!(s, "f_opt        {}", num(res.f_opt));
            let _ = writeln!(s, "success      {}", opt(res.success));
            let _ = writeln!(s, "embeddings   {}", res.embeddings);
            let _ = writeln!(s, "evals        {}", res.total_evals);
            let _ = writeln!(s, "n_f          {}", n_f.map_or_else(|| "inf".into(), |n| n.to_string()));
            let _ = writeln!(s, "d_e_est      {}", opt(res.d_e_est));
            let _ = writeln!(s, "stop         {}", serde_json::to_value(res.stop_reason)?.as_str().unwrap_or("?"));
            Ok(s)
        }
    }
}

fn cmd_experiment(cli: &Cli, config: &Path, out: Option<&PathBuf>, jobs: usize) -> xrego::Result<String> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(o) = out {
        cfg.output = Some(o.clone());
    }
    let path = cfg.output.clone().unwrap_or_else(|| PathBuf::from("records.jsonl"));
    let summary = run_experiment(&cfg, &path, jobs)?;
    match cli.format {
        Format::Json => to_json(&json!({
            "output": path,
            "cells": summary.records.len(),
            "computed": summary.computed,
            "skipped": summary.skipped,
            "failed": summary.failed,
        })),
        _ => {
            let solved = summary.records.iter().filter(|r| r.n_f.is_some()).count();
            Ok(format!(
                "{} cells ({} computed, {} resumed, {} failed), {} solved; records in {}\n",
                summary.records.len(),
                summary.computed,
                summary.skipped,
                summary.failed,
                solved,
                path.display()
            ))
        }
    }
}

fn cmd_profile(
    cli: &Cli,
    records: &Path,
    out: Option<&PathBuf>,
    svg: Option<&PathBuf>,
    alpha: Option<&[f64]>,
) -> xrego::Result<String> {
    if !records.exists() {
        return Err(Error::Config(format!("record file {} does not exist", records.display())));
    }
    let recs = load_records(records)?;
    let report = performance_profile(&recs, alpha)?;
    if let Some(p) = out {
        std::fs::write(p, report.to_csv())?;
    }
    if let Some(p) = svg {
        std::fs::write(p, report.to_svg())?;
    }
    match cli.format {
        Format::Json => to_json(&report),
        Format::Csv => Ok(report.to_csv()),
        Format::Text => {
            let mut header = vec!["alpha"];
            header.extend(report.curves.iter().map(|c| c.algorithm.as_str()));
            let rows: Vec<Vec<String>> = report
                .alphas
                .iter()
                .enumerate()
                .map(|(i, a)| std::iter::once(num(*a)).chain(report.curves.iter().map(|c| num(c.pi[i]))).collect())
                .collect();
            let mut s = table(&header, &rows, Format::Text);
            let _ = writeln!(s, "problems: {} kept, {} excluded", report.problems.len(), report.excluded.len());
            for c in &report.curves {
                let _ = writeln!(s, "solved {}: {}", c.algorithm, num(c.solved));
            }
            Ok(s)
        }
    }
}

/// `key=a,b,c` pairs; every key maps to a list of strings.
fn parse_params(params: &[String]) -> xrego::Result<BTreeMap<String, Vec<String>>> {
    let mut out = BTreeMap::new();
    for p in params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got `{p}`")))?;
        let vals: Vec<String> = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        if vals.is_empty() {
            return Err(Error::Config(format!("no value for `{k}`")));
        }
        if out.insert(k.to_string(), vals).is_some() {
            return Err(Error::Config(format!("`{k}` given twice")));
        }
    }
    Ok(out)
}

/// Cartesian product over `keys` (all required) plus optional ones.
fn expand(params: &BTreeMap<String, Vec<String>>, keys: &[&str], optional: &[&str]) -> xrego::Result<Vec<BTreeMap<String, String>>> {
    for k in params.keys() {
        if !keys.contains(&k.as_str()) && !optional.contains(&k.as_str()) {
            return Err(Error::Config(format!("unknown parameter `{k}` (expected {})", keys.join(", "))));
        }
    }
    let mut rows = vec![BTreeMap::new()];
    for k in keys.iter().chain(optional) {
        let vals = match params.get(*k) {
            Some(v) => v,
            None if keys.contains(k) => return Err(Error::Config(format!("missing parameter `{k}`"))),
            None => continue,
        };
        rows = rows
            .into_iter()
            .flat_map(|row| {
                vals.iter().map(move |v| {
                    let mut r = row.clone();
                    r.insert(k.to_string(), v.clone());
                    r
                })
            })
            .collect();
    }
    Ok(rows)
}

fn get<T: std::str::FromStr>(row: &BTreeMap<String, String>, k: &str) -> xrego::Result<T> {
    let v = &row[k];
    v.parse().map_err(|_| Error::Config(format!("cannot parse `{k}={v}`")))
}

fn cmd_bounds(cli: &Cli, which: &BoundSelect, params: &[String]) -> xrego::Result<String> {
    let params = parse_params(params)?;
    let (keys, optional): (&[&str], &[&str]) = if which.tau {
        (&["r", "d", "D"], &[])
    } else if which.pointwise || which.crossover {
        (&["eps", "L", "dist", "d", "D"], &[])
    } else if which.tau_us {
        (&["eps", "L", "D"], &[])
    } else if which.led {
        (&["eps", "L", "dist", "d", "de"], &["D"])
    } else {
        (&["xi", "tau", "rho"], &[])
    };
    let rows = expand(&params, keys, optional)?;

    let mut values: Vec<serde_json::Value> = Vec::new();
    let mut cells: Vec<Vec<String>> = Vec::new();
    let mut header: Vec<&str> = keys.iter().chain(optional.iter().filter(|k| params.contains_key(**k))).copied().collect();
    let report_cells = |r: &BoundReport| vec![num(r.tau), num(r.log10_tau)];
    for row in &rows {
        let mut line: Vec<String> = header.iter().map(|k| row[*k].clone()).collect();
        if which.tau {
            let r = tau(get(row, "r")?, get(row, "d")?, get(row, "D")?)?;
            line.extend(report_cells(&r));
            values.push(serde_json::to_value(&r)?);
        } else if which.pointwise {
            let r = tau_pointwise(get(row, "eps")?, get(row, "L")?, get(row, "dist")?, get(row, "d")?, get(row, "D")?)?;
            line.extend(report_cells(&r));
            values.push(serde_json::to_value(&r)?);
        } else if which.tau_us {
            let r = tau_us(get(row, "eps")?, get(row, "L")?, get(row, "D")?)?;
            line.extend(report_cells(&r));
            values.push(serde_json::to_value(&r)?);
        } else if which.led {
            let ambient = row.get("D").map(|_| get(row, "D")).transpose()?;
            let r = tau_led(get(row, "eps")?, get(row, "L")?, get(row, "dist")?, get(row, "d")?, get(row, "de")?, ambient)?;
            line.extend(report_cells(&r));
            values.push(serde_json::to_value(&r)?);
        } else if which.crossover {
            let dim: usize = get(row, "D")?;
            let c = crossover(get(row, "eps")?, get(row, "L")?, get(row, "dist")?, get(row, "d")?, dim)?;
            line.extend([num(crossover_distance(dim)), num(c.log10_ratio), serde_json::to_value(c.regime)?.as_str().unwrap_or("?").to_string()]);
            values.push(serde_json::to_value(&c)?);
        } else {
            let k = k_xi(get(row, "xi")?, get(row, "tau")?, get(row, "rho")?)?;
            line.push(k.k_xi.to_string());
            values.push(serde_json::to_value(k)?);
        }
        cells.push(line);
    }
    if which.crossover {
        header.extend(["delta0", "log10_ratio", "regime"]);
    } else if which.k_xi {
        header.push("k_xi");
    } else {
        header.extend(["tau", "log10_tau"]);
    }

    match cli.format {
        Format::Json => to_json(&values),
        Format::Csv => Ok(table(&header, &cells, Format::Csv)),
        Format::Text if cells.len() == 1 && !which.crossover => {
            // A single evaluation prints just the value.
            let line = &cells[0];
            Ok(format!("{}\n", line[if which.k_xi { line.len() - 1 } else { line.len() - 2 }]))
        }
        Format::Text => Ok(table(&header, &cells, Format::Text)),
    }
}

fn cmd_verify(cli: &Cli, grid: &str, trials: u64, params: &[String]) -> xrego::Result<String> {
    let seed = RngState::from_seed(cli.seed).labeled("verify");
    let params = parse_params(params)?;
    let mut header = vec!["D", "d", "r", "tau", "p_hat", "lo", "hi", "verdict"];
    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut violations = 0usize;

    if grid == "planar" && params.is_empty() {
        // D = 2, d = 1: the success probability is exactly (2/π) arcsin r.
        header.push("exact");
        for r in [0.2, 0.5, 0.8] {
            let cfg = McConfig {
                trials,
                dim: 2,
                d: 1,
                radius: 1.0,
                anchor: vec![0.0, 0.0],
                target: vec![1.0 / r, 0.0],
                seed: seed.labeled(&format!("planar-{r}")),
            };
            let est = estimate_hit_probability(&cfg)?;
            let exact = std::f64::consts::FRAC_2_PI * f64::asin(r);
            let w = wilson95(est.hits, est.trials);
            let half = 0.5 * (w.hi - w.lo);
            let verdict = if (est.p_hat - exact).abs() <= half { "consistent" } else { "violation" };
            if verdict == "violation" {
                violations += 1;
            }
            rows.push(vec![
                "2".into(),
                "1".into(),
                num(r),
                num(est.bound),
                num(est.p_hat),
                num(w.lo),
                num(w.hi),
                verdict.into(),
                num(exact),
            ]);
            records.push(json!({"dim": 2, "d": 1, "r": r, "exact": exact, "estimate": est}));
        }
    } else {
        let points: Vec<(usize, usize, f64)> = if !params.is_empty() {
            let rows = expand(&params, &["D", "d", "r"], &[])?;
            rows.iter().map(|row| Ok((get(row, "D")?, get(row, "d")?, get(row, "r")?))).collect::<xrego::Result<_>>()?
        } else if grid == "default" {
            default_grid()
        } else {
            return Err(Error::Config(format!("unknown grid `{grid}` (expected default or planar)")));
        };
        for p in bound_consistency_grid(&points, trials, &seed)? {
            let e = &p.estimate;
            if e.verdict == Verdict::Violation {
                violations += 1;
            }
            rows.push(vec![
                p.dim.to_string(),
                p.d.to_string(),
                num(p.r),
                num(e.bound),
                num(e.p_hat),
                num(e.wilson95.lo),
                num(e.wilson95.hi),
                serde_json::to_value(e.verdict)?.as_str().unwrap_or("?").to_string(),
            ]);
            records.push(serde_json::to_value(&p)?);
        }
    }

    match cli.format {
        Format::Json => to_json(&json!({"trials": trials, "violations": violations, "points": records})),
        Format::Csv => Ok(table(&header, &rows, Format::Csv)),
        Format::Text => {
            let mut s = table(&header, &rows, Format::Text);
            let _ = writeln!(s, "violations: {violations} of {}", rows.len());
            Ok(s)
        }
    }
}

fn cmd_suite(cli: &Cli, dim: usize) -> xrego::Result<String> {
    let problems = suite(dim, &harness::problem_rng(cli.seed, 0))?;
    let manifests: Vec<_> = problems.iter().map(|p| p.manifest()).collect();
    match cli.format {
        Format::Json => to_json(&manifests),
        f => {
            let rows: Vec<Vec<String>> = manifests
                .iter()
                .map(|m| {
                    vec![
                        m.id.clone(),
                        m.dim.to_string(),
                        opt(m.effective_dim),
                        opt(m.f_star.map(num)),
                        opt(m.lipschitz.map(num)),
                    ]
                })
                .collect();
            Ok(table(&["id", "D", "d_e", "f_star", "lipschitz"], &rows, f))
        }
    }
}
