//! Command-line front end: free convolutions, powers, Lambda, verification,
//! certificates and the random-matrix oracle, all on measure JSON files.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use freeconv::additive::{free_add, free_power, AddOptions};
use freeconv::inversion::{linspace, DEFAULT_EPS};
use freeconv::io::{fmt17, load_measure, write_json};
use freeconv::khintchine::{
    indecomposable_certificate, lambda_additive, lambda_mult, verify_decomposition, LambdaConfig, Mode, Verdict,
    VerifyConfig,
};
use freeconv::multiplicative::{free_mult, MultOptions};
use freeconv::oracle::{run_additive, run_multiplicative, OracleConfig};
use freeconv::transforms::StolzRegion;
use freeconv::{Domain, Measure};

#[derive(Parser)]
#[command(name = "freeconv", version, about = "Numerical free convolution")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Free additive convolution of two measures on the line.
    Add(Pair),
    /// Free multiplicative convolution of two measures on [0, inf).
    Mul(Pair),
    /// Free additive power m^{box-plus t}.
    Power {
        input: PathBuf,
        #[arg(long)]
        t: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// The Lambda functional of one measure.
    Lambda {
        input: PathBuf,
        #[command(flatten)]
        region: RegionArgs,
        #[command(flatten)]
        mult: MultLambdaArgs,
        #[arg(long, default_value_t = 128)]
        nx: usize,
        #[arg(long, default_value_t = 64)]
        ny: usize,
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
    /// Check that the parts convolve to the target. Exit status 2 on rejection.
    Verify {
        target: PathBuf,
        #[arg(required = true, num_args = 2..)]
        parts: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = ModeArg::Additive)]
        mode: ModeArg,
        #[arg(long, default_value_t = 1e-2)]
        levy_tol: f64,
        #[arg(long, default_value_t = 5e-3)]
        lambda_tol: f64,
        #[command(flatten)]
        region: RegionArgs,
        #[command(flatten)]
        mult: MultLambdaArgs,
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
    /// Random-matrix Monte Carlo estimate of a free convolution.
    Oracle {
        first: PathBuf,
        second: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Additive)]
        mode: ModeArg,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        bins: Option<usize>,
        /// Raw eigenvalues, one row per eigenvalue.
        #[arg(long)]
        eigenvalues: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Endpoint-atom indecomposability certificate.
    Certify {
        input: PathBuf,
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Additive,
    Multiplicative,
}

#[derive(Args)]
struct Pair {
    first: PathBuf,
    second: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct GridArgs {
    /// Output grid as lo:hi:count, endpoints included.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_grid)]
    grid: Option<GridSpec>,
    /// Comma-separated decreasing epsilon levels.
    #[arg(long, value_delimiter = ',')]
    eps_schedule: Option<Vec<f64>>,
}

#[derive(Args)]
struct OutArgs {
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
    /// Columns x,density,cdf.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct RegionArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    band: Option<f64>,
}

#[derive(Args)]
struct MultLambdaArgs {
    #[arg(long)]
    beta_norm: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Clone, Copy, Debug, Serialize)]
struct GridSpec {
    lo: f64,
    hi: f64,
    count: usize,
}

fn parse_grid(s: &str) -> std::result::Result<GridSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, count] = parts[..] else {
        return Err(format!("expected lo:hi:count, got {s:?}"));
    };
    let lo: f64 = lo.trim().parse().map_err(|e| format!("bad lo {lo:?}: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("bad hi {hi:?}: {e}"))?;
    let count: usize = count.trim().parse().map_err(|e| format!("bad count {count:?}: {e}"))?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(format!("need finite lo < hi, got {lo}:{hi}"));
    }
    if count < 2 {
        return Err("count must be at least 2".into());
    }
    Ok(GridSpec { lo, hi, count })
}

impl GridArgs {
    fn grid(&self) -> Option<Vec<f64>> {
        self.grid.map(|g| linspace(g.lo, g.hi, g.count))
    }
}

/// Primary output plus a report beside it.
struct Outcome {
    output: PathBuf,
    body: Value,
    config: Value,
    diagnostics: Value,
    extra_files: Vec<PathBuf>,
    code: u8,
}

fn default_output(input: &Path, verb: &str) -> PathBuf {
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    input.with_file_name(format!("{stem}.{verb}.json"))
}

fn report_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    output.with_file_name(format!("{stem}.report.json"))
}

fn load(path: &Path) -> Result<Measure> {
    Ok(load_measure(path)?)
}

fn write_csv(path: &Path, m: &Measure) -> Result<()> {
    let mut xs: Vec<f64> = m.grid().iter().copied().chain(m.atoms().iter().map(|a| a.x)).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(["x", "density", "cdf"])?;
    let real = m.with_domain(Domain::Real)?;
    for x in xs {
        w.write_record([fmt17(x), fmt17(m.density(x)), fmt17(real.cdf(x)?)])?;
    }
    w.flush()?;
    Ok(())
}

fn measure_outcome(
    verb: &str,
    input: &Path,
    m: &Measure,
    out: &OutArgs,
    config: Value,
    diagnostics: Value,
) -> Result<Outcome> {
    let output = out.output.clone().unwrap_or_else(|| default_output(input, verb));
    let mut extra_files = vec![];
    if let Some(csv) = &out.csv {
        write_csv(csv, m)?;
        extra_files.push(csv.clone());
    }
    Ok(Outcome { output, body: serde_json::to_value(m)?, config, diagnostics, extra_files, code: 0 })
}

fn region(args: &RegionArgs, family: &[Measure]) -> Result<LambdaConfig> {
    let fitted = if args.alpha.is_some() && args.beta.is_some() && args.band.is_some() {
        None
    } else {
        Some(LambdaConfig::fitted(family)?.region)
    };
    let pick = |v: Option<f64>, f: fn(&StolzRegion) -> f64| v.unwrap_or_else(|| f(fitted.as_ref().unwrap()));
    let r = StolzRegion::new(
        pick(args.alpha, |r| r.alpha),
        pick(args.beta, |r| r.beta),
        pick(args.band, |r| r.band_height),
    )?;
    Ok(LambdaConfig::new(r))
}

fn mult_params(args: &MultLambdaArgs) -> (f64, f64) {
    let d = VerifyConfig::default();
    (args.beta_norm.unwrap_or(d.beta), args.gamma.unwrap_or(d.gamma))
}

fn run(verb: Verb) -> Result<Outcome> {
    match verb {
        Verb::Add(p) => {
            let (m1, m2) = (load(&p.first)?, load(&p.second)?);
            let opts = AddOptions { grid: p.grid.grid(), eps: p.grid.eps_schedule.clone() };
            let (m, rep) = free_add(&m1, &m2, &opts)?;
            let config = json!({
                "inputs": [p.first, p.second],
                "grid": p.grid.grid.map(|g| json!(g)).unwrap_or(json!("padded support hull, 2001 points")),
                "eps_schedule": opts.eps.clone().unwrap_or(DEFAULT_EPS.to_vec()),
            });
            measure_outcome("add", &p.first, &m, &p.out, config, serde_json::to_value(&rep)?)
        }
        Verb::Mul(p) => {
            let (m1, m2) = (load(&p.first)?, load(&p.second)?);
            let opts = MultOptions { grid: p.grid.grid(), eps: p.grid.eps_schedule.clone() };
            let (m, rep) = free_mult(&m1, &m2, &opts)?;
            let config = json!({
                "inputs": [p.first, p.second],
                "grid": p.grid.grid.map(|g| json!(g)).unwrap_or(json!("padded support hull, 2001 points")),
                "eps_schedule_relative": opts.eps.clone().unwrap_or(DEFAULT_EPS.to_vec()),
            });
            measure_outcome("mul", &p.first, &m, &p.out, config, serde_json::to_value(&rep)?)
        }
        Verb::Power { input, t, grid, out } => {
            let m0 = load(&input)?;
            let opts = AddOptions { grid: grid.grid(), eps: grid.eps_schedule.clone() };
            let (m, rep) = free_power(&m0, t, &opts)?;
            let config = json!({
                "inputs": [input],
                "t": t,
                "grid": grid.grid.map(|g| json!(g)).unwrap_or(json!("t times the padded support hull, 2001 points")),
                "eps_schedule": opts.eps.clone().unwrap_or(DEFAULT_EPS.to_vec()),
            });
            measure_outcome("power", &input, &m, &out, config, serde_json::to_value(&rep)?)
        }
        Verb::Lambda { input, region: r, mult, nx, ny, output } => {
            let m = load(&input)?;
            let output = output.unwrap_or_else(|| default_output(&input, "lambda"));
            if mult.beta_norm.is_some() || mult.gamma.is_some() {
                let (beta, gamma) = mult_params(&mult);
                let value = lambda_mult(&m, beta, gamma)?;
                let config = json!({ "inputs": [input], "kind": "multiplicative", "beta": beta, "gamma": gamma });
                return Ok(Outcome {
                    output,
                    body: json!({ "value": value }),
                    config,
                    diagnostics: json!({}),
                    extra_files: vec![],
                    code: 0,
                });
            }
            let mut lc = region(&r, std::slice::from_ref(&m))?;
            lc.nx = nx;
            lc.ny = ny;
            let v = lambda_additive(&m, &lc)?;
            let config = json!({ "inputs": [input], "kind": "additive", "lambda": lc,
                "region_fitted": r.alpha.is_none() || r.beta.is_none() || r.band.is_none() });
            Ok(Outcome {
                output,
                body: serde_json::to_value(v)?,
                config,
                diagnostics: json!({}),
                extra_files: vec![],
                code: 0,
            })
        }
        Verb::Verify { target, parts, mode, levy_tol, lambda_tol, region: r, mult, output } => {
            let t = load(&target)?;
            let ps = parts.iter().map(|p| load(p)).collect::<Result<Vec<_>>>()?;
            let (beta, gamma) = mult_params(&mult);
            let mut cfg =
                VerifyConfig { levy_tolerance: levy_tol, lambda_tolerance: lambda_tol, beta, gamma, lambda: None };
            let mode = match mode {
                ModeArg::Additive => {
                    let mut family = ps.clone();
                    family.push(t.clone());
                    cfg.lambda = Some(region(&r, &family)?);
                    Mode::Additive
                }
                ModeArg::Multiplicative => Mode::Multiplicative,
            };
            let v = verify_decomposition(&t, &ps, mode, &cfg);
            let code = if v.verdict == Verdict::Accepted { 0 } else { 2 };
            Ok(Outcome {
                output: output.unwrap_or_else(|| default_output(&target, "verify")),
                body: serde_json::to_value(&v)?,
                config: json!({ "target": target, "parts": parts, "mode": mode, "verify": cfg }),
                diagnostics: json!({}),
                extra_files: vec![],
                code,
            })
        }
        Verb::Oracle { first, second, mode, n, trials, seed, bins, eigenvalues, out } => {
            let (m1, m2) = (load(&first)?, load(&second)?);
            let cfg = OracleConfig { matrix_size: n, trials, seed, bin_count: bins };
            let run = match mode {
                ModeArg::Additive => run_additive(&m1, &m2, &cfg)?,
                ModeArg::Multiplicative => run_multiplicative(&m1, &m2, &cfg)?,
            };
            for line in &run.retries {
                eprintln!("{line}");
            }
            let mut o = measure_outcome(
                "oracle",
                &first,
                &run.measure,
                &out,
                json!({ "inputs": [first, second], "mode": mode, "oracle": cfg, "bins": run.bins }),
                json!({ "exact": run.exact, "retries": run.retries }),
            )?;
            if let Some(path) = eigenvalues {
                let mut w =
                    csv::Writer::from_path(&path).with_context(|| format!("cannot write {}", path.display()))?;
                w.write_record(["trial", "eigenvalue"])?;
                for (t, ev) in run.eigenvalues.iter().enumerate() {
                    for x in ev {
                        w.write_record([t.to_string(), fmt17(*x)])?;
                    }
                }
                w.flush()?;
                o.extra_files.push(path);
            }
            Ok(o)
        }
        Verb::Certify { input, output } => {
            let m = load(&input)?;
            let s = m.support();
            let tol = 1e-12 * (1.0 + s.lo.abs().max(s.hi.abs()));
            let body = json!({
                "certificate": indecomposable_certificate(&m),
                "support": s,
                "endpoint_masses": [m.mass_at(s.lo, tol), m.mass_at(s.hi, tol)],
            });
            Ok(Outcome {
                output: output.unwrap_or_else(|| default_output(&input, "certify")),
                body,
                config: json!({ "inputs": [input], "atom_threshold": freeconv::inversion::ATOM_THRESHOLD }),
                diagnostics: json!({}),
                extra_files: vec![],
                code: 0,
            })
        }
    }
}

fn set_threads() -> Result<usize> {
    if let Ok(v) = std::env::var("FREECONV_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("FREECONV_THREADS={v:?} is not a count"))?;
        if n == 0 {
            bail!("FREECONV_THREADS must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(rayon::current_num_threads())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let argv: Vec<String> = std::env::args().collect();
    let start = Instant::now();
    let result = set_threads().and_then(|threads| {
        let o = run(cli.verb)?;
        write_json(&o.output, &o.body)?;
        let report = json!({
            "command": argv,
            "version": env!("CARGO_PKG_VERSION"),
            "threads": threads,
            "elapsed_seconds": start.elapsed().as_secs_f64(),
            "exit_code": o.code,
            "output": o.output,
            "extra_files": o.extra_files,
            "config": o.config,
            "diagnostics": o.diagnostics,
        });
        write_json(&report_path(&o.output), &report)?;
        println!("{}", o.output.display());
        Ok(o.code)
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
