//! Command-line harness: verification battery, regime tables, quotient
//! minimization, epsilon-descent curves, and parallel parameter sweeps.
//!
//! Exit codes: 0 success, 1 verification or numeric failure, 2 parameter out
//! of range or empty grid, 3 unwritable output path.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use spherelab::functional::{second_variation, ExtReal};
use spherelab::optimizer::{descent_curve, minimize_quotient, InitProfile, MinimizeConfig};
use spherelab::special::{regime_classify, sharp_constant, SpectralParams};
use spherelab::verify::{run_battery, BatteryConfig};
use spherelab::Error;

#[derive(Parser, Debug)]
#[command(name = "spherelab", about = "Spectral numerics for a reverse Sobolev quotient on the n-sphere", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the full property battery and print a pass/fail table.
    Verify(CommonArgs),
    /// Tabulate sharp constants, regimes and second-variation signs over a grid.
    Table(CommonArgs),
    /// Minimize the conformal quotient at a single (n, s).
    Minimize(MinimizeArgs),
    /// Evaluate the divergent-window descent curve quotient(u + eps).
    Descent(DescentArgs),
    /// Minimize over a parameter grid in parallel.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Dimension(s): a value, repeated flags, or a range "a:b:step".
    #[arg(long = "n", required = true)]
    n: Vec<String>,
    /// Order(s) s: a value, repeated flags, or a range "a:b:step".
    #[arg(long = "s", required = true)]
    s: Vec<String>,
    /// Spectral truncation degree.
    #[arg(long = "lmax", default_value_t = 64)]
    lmax: u32,
    /// Quadrature order; defaults to lmax + 16.
    #[arg(long = "quad-order")]
    quad_order: Option<usize>,
    #[arg(long = "tol", default_value_t = 1e-8)]
    tol: f64,
    /// Emit JSON instead of the human table.
    #[arg(long = "json", conflicts_with = "csv")]
    json: bool,
    /// Emit CSV instead of the human table.
    #[arg(long = "csv")]
    csv: bool,
    /// Write output to this path (temp-file + rename) instead of stdout.
    #[arg(long = "out")]
    out: Option<PathBuf>,
    #[arg(long = "seed", default_value_t = 42)]
    seed: u64,
}

#[derive(Args, Debug, Clone)]
struct MinimizeArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long = "max-iters", default_value_t = 200)]
    max_iters: usize,
    /// Initial iterate: "constant", "perturbed", or "equality:ZETA".
    #[arg(long = "init", default_value = "perturbed")]
    init: String,
}

#[derive(Args, Debug, Clone)]
struct DescentArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Window index K of the divergent test function.
    #[arg(long = "k", default_value_t = 1)]
    k: u32,
    /// Strictly decreasing epsilon list.
    #[arg(long = "eps", num_args = 1.., value_delimiter = ',',
          default_values_t = [1e-1, 1e-2, 1e-3, 1e-4])]
    eps: Vec<f64>,
}

#[derive(Args, Debug, Clone)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long = "max-iters", default_value_t = 120)]
    max_iters: usize,
}

/// Resolved run configuration; serializes so runs are reproducible from the
/// config alone.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
struct RunConfig {
    command: String,
    n: Vec<u32>,
    s: Vec<f64>,
    l_max: u32,
    quad_order: usize,
    tol: f64,
    output: String,
    out_path: Option<PathBuf>,
    seed: u64,
}

impl RunConfig {
    fn resolve(cmd: &str, a: &CommonArgs) -> Result<Self, Error> {
        let n = parse_grid(&a.n)?
            .into_iter()
            .map(|x| {
                if x >= 1.0 && x.fract() == 0.0 && x <= u32::MAX as f64 {
                    Ok(x as u32)
                } else {
                    Err(Error::ParameterOutOfRange(format!("n must be a positive integer, got {x}")))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        let s = parse_grid(&a.s)?;
        if n.is_empty() || s.is_empty() {
            return Err(Error::ParameterOutOfRange("empty parameter grid".into()));
        }
        Ok(Self {
            command: cmd.into(),
            n,
            s,
            l_max: a.lmax,
            quad_order: a.quad_order.unwrap_or(a.lmax as usize + 16),
            tol: a.tol,
            output: if a.json {
                "json".into()
            } else if a.csv {
                "csv".into()
            } else {
                "human".into()
            },
            out_path: a.out.clone(),
            seed: a.seed,
        })
    }

    /// The single (n, s) demanded by non-grid commands.
    fn single(&self) -> Result<SpectralParams, Error> {
        if self.n.len() != 1 || self.s.len() != 1 {
            return Err(Error::ParameterOutOfRange(
                "this command takes exactly one n and one s".into(),
            ));
        }
        SpectralParams::new(self.n[0], self.s[0])
    }
}

/// Expand "a:b:step" ranges and plain numbers into a sorted, deduplicated grid.
fn parse_grid(entries: &[String]) -> Result<Vec<f64>, Error> {
    let mut out = Vec::new();
    for e in entries {
        let parts: Vec<&str> = e.split(':').collect();
        match parts.as_slice() {
            [one] => out.push(parse_f64(one)?),
            [a, b, step] => {
                let (a, b, step) = (parse_f64(a)?, parse_f64(b)?, parse_f64(step)?);
                if !(step > 0.0) {
                    return Err(Error::ParameterOutOfRange(format!("range step must be > 0 in {e:?}")));
                }
                let mut k = 0u64;
                loop {
                    let x = a + k as f64 * step;
                    if x > b + 1e-12 * step {
                        break;
                    }
                    out.push(x);
                    k += 1;
                }
            }
            _ => {
                return Err(Error::ParameterOutOfRange(format!(
                    "cannot parse {e:?}: expected a number or \"a:b:step\""
                )))
            }
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    Ok(out)
}

fn parse_f64(s: &str) -> Result<f64, Error> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::ParameterOutOfRange(format!("not a number: {s:?}")))
}

fn fmt_ext(x: ExtReal) -> String {
    match x {
        ExtReal::Finite(v) => format!("{v:.16e}"),
        ExtReal::PosInf => "+inf".into(),
        ExtReal::NegInf => "-inf".into(),
        ExtReal::Indeterminate => "indeterminate".into(),
    }
}

/// Write to a temp file in the target directory, then rename into place, so
/// failures never leave partial output.
fn emit(out_path: &Option<PathBuf>, content: &str) -> Result<(), Error> {
    match out_path {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(path) => {
            let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
            let tmp = dir.join(format!(
                ".{}.tmp",
                path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into())
            ));
            let mut f = fs::File::create(&tmp)?;
            f.write_all(content.as_bytes())?;
            f.sync_all()?;
            fs::rename(&tmp, path)?;
            Ok(())
        }
    }
}

fn exit_code_for(err: &Error) -> ExitCode {
    match err {
        Error::ParameterOutOfRange(_) | Error::RegimeMismatch(_) => ExitCode::from(2),
        Error::Io(_) => ExitCode::from(3),
        _ => ExitCode::from(1),
    }
}

fn cmd_verify(cfg: &RunConfig) -> Result<bool, Error> {
    let p = cfg.single()?;
    let battery = BatteryConfig {
        l_max: cfg.l_max,
        quad_order: cfg.quad_order,
        tol: cfg.tol,
        seed: cfg.seed,
    };
    let results = run_battery(p, &battery)?;
    let all = results.iter().all(|r| r.passed);
    let content = match cfg.output.as_str() {
        "json" => format!("{}\n", serde_json::to_string_pretty(&results)?),
        "csv" => {
            let mut s = String::from("name,passed,detail\n");
            for r in &results {
                s.push_str(&format!("{},{},\"{}\"\n", r.name, r.passed, r.detail.replace('"', "'")));
            }
            s
        }
        _ => {
            let mut s = String::new();
            for r in &results {
                s.push_str(&format!(
                    "{} {:<24} {}\n",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.detail
                ));
            }
            s.push_str(&format!("{}\n", if all { "all checks passed" } else { "FAILURES PRESENT" }));
            s
        }
    };
    emit(&cfg.out_path, &content)?;
    Ok(all)
}

#[derive(Debug, Serialize)]
struct TableRow {
    n: u32,
    s: f64,
    sharp_constant: f64,
    regime: String,
    h2: f64,
    h3: f64,
    unstable: bool,
}

fn cmd_table(cfg: &RunConfig) -> Result<bool, Error> {
    let mut rows = Vec::new();
    for &n in &cfg.n {
        for &s in &cfg.s {
            let p = match SpectralParams::new(n, s) {
                Ok(p) => p,
                Err(_) => continue, // grid may cross s <= n/2; skip silently
            };
            let h2 = second_variation(p, 2);
            let h3 = second_variation(p, 3);
            rows.push(TableRow {
                n,
                s,
                sharp_constant: sharp_constant(p),
                regime: regime_classify(p).to_string(),
                h2,
                h3,
                unstable: h2 < 0.0 || h3 < 0.0,
            });
        }
    }
    if rows.is_empty() {
        return Err(Error::ParameterOutOfRange("empty parameter grid".into()));
    }
    let content = match cfg.output.as_str() {
        "json" => format!("{}\n", serde_json::to_string_pretty(&rows)?),
        "csv" => {
            let mut s = String::from("n,s,sharp_constant,regime,h2,h3,unstable\n");
            for r in &rows {
                s.push_str(&format!(
                    "{},{:.16e},{:.16e},{},{:.16e},{:.16e},{}\n",
                    r.n, r.s, r.sharp_constant, r.regime, r.h2, r.h3, r.unstable
                ));
            }
            s
        }
        _ => {
            let mut s = format!(
                "{:>3} {:>8} {:>24} {:>20} {:>13} {:>13} unstable\n",
                "n", "s", "sharp_constant", "regime", "H(2)", "H(3)"
            );
            for r in &rows {
                s.push_str(&format!(
                    "{:>3} {:>8.4} {:>24.15e} {:>20} {:>13.4e} {:>13.4e} {}\n",
                    r.n, r.s, r.sharp_constant, r.regime, r.h2, r.h3, r.unstable
                ));
            }
            s
        }
    };
    emit(&cfg.out_path, &content)?;
    Ok(true)
}

fn parse_init(kind: &str) -> Result<InitProfile, Error> {
    if kind == "constant" {
        Ok(InitProfile::Constant)
    } else if kind == "perturbed" {
        Ok(InitProfile::PerturbedConstant { degree: 2, amplitude: 0.3 })
    } else if let Some(z) = kind.strip_prefix("equality:") {
        Ok(InitProfile::EqualityProfile { zeta: parse_f64(z)? })
    } else {
        Err(Error::ParameterOutOfRange(format!(
            "unknown init {kind:?}: expected constant | perturbed | equality:ZETA"
        )))
    }
}

fn minimize_config(cfg: &RunConfig, max_iters: usize, init: InitProfile) -> MinimizeConfig {
    MinimizeConfig {
        l_max: cfg.l_max.min(48),
        grid_order: cfg.quad_order.max(cfg.l_max.min(48) as usize + 8),
        max_iters,
        step_tolerance: 1e-5,
        seed: cfg.seed,
        init,
        search_degree: 10,
        residual_bound: cfg.tol.max(1e-9).sqrt(),
    }
}

fn trace_csv(trace: &spherelab::optimizer::DescentTrace) -> String {
    let mut s = String::from("iteration,quotient,a_value,integral\n");
    for pt in &trace.iterates {
        s.push_str(&format!(
            "{},{:.16e},{:.16e},{}\n",
            pt.iteration,
            pt.quotient,
            pt.a_value,
            fmt_ext(pt.integral)
        ));
    }
    s
}

fn cmd_minimize(cfg: &RunConfig, max_iters: usize, init: &str) -> Result<bool, Error> {
    let p = cfg.single()?;
    let mc = minimize_config(cfg, max_iters, parse_init(init)?);
    let trace = minimize_quotient(p, &mc)?;
    let content = match cfg.output.as_str() {
        "json" => format!("{}\n", serde_json::to_string_pretty(&trace)?),
        "csv" => trace_csv(&trace),
        _ => {
            let best = fmt_ext(trace.best.quotient);
            format!(
                "iterates: {}\nbest quotient: {}\nsharp constant: {:.16e}\nconverged: {}\n",
                trace.iterates.len(),
                best,
                sharp_constant(p),
                trace.converged
            )
        }
    };
    emit(&cfg.out_path, &content)?;
    Ok(true)
}

fn cmd_descent(cfg: &RunConfig, k: u32, eps: &[f64]) -> Result<bool, Error> {
    let p = cfg.single()?;
    let curve = descent_curve(p, k, eps)?;
    #[derive(Serialize)]
    struct Point {
        epsilon: f64,
        quotient: ExtReal,
        a_value: f64,
        integral: ExtReal,
    }
    let points: Vec<Point> = curve
        .iter()
        .map(|(e, r)| Point { epsilon: *e, quotient: r.quotient, a_value: r.a_value, integral: r.integral })
        .collect();
    let content = match cfg.output.as_str() {
        "json" => format!("{}\n", serde_json::to_string_pretty(&points)?),
        "csv" => {
            let mut s = String::from("epsilon,quotient,a_value,integral\n");
            for pt in &points {
                s.push_str(&format!(
                    "{:.16e},{},{:.16e},{}\n",
                    pt.epsilon,
                    fmt_ext(pt.quotient),
                    pt.a_value,
                    fmt_ext(pt.integral)
                ));
            }
            s
        }
        _ => {
            let mut s = format!("{:>12} {:>24}\n", "epsilon", "quotient");
            for pt in &points {
                s.push_str(&format!("{:>12.4e} {:>24}\n", pt.epsilon, fmt_ext(pt.quotient)));
            }
            s
        }
    };
    emit(&cfg.out_path, &content)?;
    Ok(true)
}

#[derive(Debug, Serialize)]
struct SweepRow {
    n: u32,
    s: f64,
    regime: String,
    sharp_constant: f64,
    best_quotient: ExtReal,
    iterations: usize,
    converged: bool,
}

fn cmd_sweep(cfg: &RunConfig, max_iters: usize) -> Result<bool, Error> {
    let mut grid = Vec::new();
    for &n in &cfg.n {
        for &s in &cfg.s {
            if let Ok(p) = SpectralParams::new(n, s) {
                grid.push(p);
            }
        }
    }
    if grid.is_empty() {
        return Err(Error::ParameterOutOfRange("empty parameter grid".into()));
    }
    // Parallel fan-out; grid order is already sorted, and collect preserves it.
    let rows: Vec<SweepRow> = grid
        .par_iter()
        .map(|&p| {
            let regime = regime_classify(p).to_string();
            let sharp = sharp_constant(p);
            match minimize_quotient(p, &minimize_config(cfg, max_iters, InitProfile::PerturbedConstant { degree: 2, amplitude: 0.3 })) {
                Ok(trace) => SweepRow {
                    n: p.n,
                    s: p.s,
                    regime,
                    sharp_constant: sharp,
                    best_quotient: trace.best.quotient,
                    iterations: trace.iterates.len(),
                    converged: trace.converged,
                },
                Err(_) => SweepRow {
                    n: p.n,
                    s: p.s,
                    regime,
                    sharp_constant: sharp,
                    best_quotient: ExtReal::Indeterminate,
                    iterations: 0,
                    converged: false,
                },
            }
        })
        .collect();
    let content = match cfg.output.as_str() {
        "json" => format!("{}\n", serde_json::to_string_pretty(&rows)?),
        "csv" => {
            let mut s = String::from("n,s,regime,sharp_constant,best_quotient,iterations,converged\n");
            for r in &rows {
                s.push_str(&format!(
                    "{},{:.16e},{},{:.16e},{},{},{}\n",
                    r.n,
                    r.s,
                    r.regime,
                    r.sharp_constant,
                    fmt_ext(r.best_quotient),
                    r.iterations,
                    r.converged
                ));
            }
            s
        }
        _ => {
            let mut s = format!(
                "{:>3} {:>8} {:>20} {:>24} {:>24} conv\n",
                "n", "s", "regime", "sharp_constant", "best_quotient"
            );
            for r in &rows {
                s.push_str(&format!(
                    "{:>3} {:>8.4} {:>20} {:>24.15e} {:>24} {}\n",
                    r.n, r.s, r.regime, r.sharp_constant, fmt_ext(r.best_quotient), r.converged
                ));
            }
            s
        }
    };
    emit(&cfg.out_path, &content)?;
    Ok(true)
}

fn run(cli: Cli) -> Result<bool, Error> {
    match &cli.command {
        Command::Verify(a) => cmd_verify(&RunConfig::resolve("verify", a)?),
        Command::Table(a) => cmd_table(&RunConfig::resolve("table", a)?),
        Command::Minimize(a) => {
            cmd_minimize(&RunConfig::resolve("minimize", &a.common)?, a.max_iters, &a.init)
        }
        Command::Descent(a) => cmd_descent(&RunConfig::resolve("descent", &a.common)?, a.k, &a.eps),
        Command::Sweep(a) => cmd_sweep(&RunConfig::resolve("sweep", &a.common)?, a.max_iters),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = parse_grid(&["1.0:2.0:0.5".into(), "1.5".into()]).unwrap();
        assert_eq!(g, vec![1.0, 1.5, 2.0]);
        assert!(parse_grid(&["2:1:0".into()]).is_err());
        assert!(parse_grid(&["abc".into()]).is_err());
        let empty = parse_grid(&["2.0:1.0:0.5".into()]).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn run_config_round_trips() {
        let a = CommonArgs {
            n: vec!["2".into()],
            s: vec!["1.4".into()],
            lmax: 64,
            quad_order: None,
            tol: 1e-8,
            json: true,
            csv: false,
            out: None,
            seed: 42,
        };
        let cfg = RunConfig::resolve("verify", &a).unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.quad_order, 80);
    }
}
