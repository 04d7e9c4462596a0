use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{ArgGroup, Parser, Subcommand};

use parageo::report::{emit_report, ReportFormat};
use parageo::scenario::{load_config, load_scenario, registry, run_suite, PartialOptions, Scenario, SuiteOptions};
use parageo::{Chart, Error};

#[derive(Parser)]
#[command(name = "parageo", version, about = "Verify paracontact and para-Hermitian structures and map identities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in scenarios.
    List,
    /// Run a check suite and print the reports.
    #[command(group(ArgGroup::new("input").required(true).args(["scenario", "config"])))]
    Verify {
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated check names, short (`normal`) or full (`M2/normal`).
        #[arg(long)]
        suite: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value = "text")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate an expression with its gradient and Hessian.
    #[command(group(ArgGroup::new("input").required(true).args(["scenario", "config"])))]
    Eval {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        expr: String,
        /// Coordinate values, e.g. "x=1,y=2,z=0".
        #[arg(long)]
        at: String,
        /// Chart to use when several charts share the coordinate names.
        #[arg(long)]
        chart: Option<String>,
    },
}

fn load(scenario: Option<String>, config: Option<PathBuf>) -> Result<Scenario, Error> {
    match (scenario, config) {
        (Some(name), _) => load_scenario(&name),
        (None, Some(path)) => load_config(path),
        (None, None) => unreachable!("clap enforces one input"),
    }
}

fn list() -> String {
    let mut out = String::new();
    for e in registry() {
        let aliases = if e.aliases.is_empty() {
            String::new()
        } else {
            format!(" (alias: {})", e.aliases.join(", "))
        };
        out.push_str(&format!("{:<28} {}{}\n", e.name, e.description, aliases));
    }
    out
}

fn parse_at(at: &str) -> Result<Vec<(String, f64)>, Error> {
    at.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let (k, v) = pair.split_once('=').ok_or_else(|| Error::Schema {
                path: "--at".into(),
                message: format!("expected name=value, got `{pair}`"),
            })?;
            let v: f64 = v.trim().parse().map_err(|_| Error::Schema {
                path: "--at".into(),
                message: format!("`{}` is not a number", v.trim()),
            })?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn pick_chart(sc: &Scenario, names: &[(String, f64)], wanted: Option<&str>) -> Result<(Arc<Chart>, Vec<f64>), Error> {
    let coords_for = |c: &Arc<Chart>| -> Option<Vec<f64>> {
        if c.dim() != names.len() {
            return None;
        }
        c.coord_names()
            .iter()
            .map(|n| names.iter().find(|(k, _)| k == n).map(|&(_, v)| v))
            .collect()
    };
    sc.charts()
        .into_iter()
        .filter(|c| wanted.is_none_or(|w| c.name == w))
        .find_map(|c| coords_for(&c).map(|v| (c, v)))
        .ok_or_else(|| Error::Schema {
            path: "--at".into(),
            message: "no chart in the scenario has exactly these coordinate names".into(),
        })
}

fn eval(sc: &Scenario, expr: &str, at: &str, chart: Option<&str>) -> Result<String, Error> {
    let values = parse_at(at)?;
    let (chart, coords) = pick_chart(sc, &values, chart)?;
    let e = chart.parse(expr)?;
    let p = parageo::Pt::from_f64(&chart, &coords)?;
    let j = e.eval_jet2(p.coords())?;
    let n = chart.dim();
    let mut out = format!("chart     {}\nexpr      {e}\nvalue     {:?}\ngradient  {:?}\nhessian\n", chart.name, j.value, j.gradient);
    for i in 0..n {
        let row: Vec<f64> = (0..n).map(|k| j.hess(i, k)).collect();
        out.push_str(&format!("  {row:?}\n"));
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::List => {
            print!("{}", list());
            Ok(0)
        }
        Command::Eval {
            config,
            scenario,
            expr,
            at,
            chart,
        } => {
            let sc = load(scenario, config)?;
            print!("{}", eval(&sc, &expr, &at, chart.as_deref())?);
            Ok(0)
        }
        Command::Verify {
            scenario,
            config,
            suite,
            samples,
            seed,
            tol,
            format,
            out,
        } => {
            let format: ReportFormat = format.parse()?;
            let sc = load(scenario, config)?;
            let cli_opts = PartialOptions {
                checks: suite.map(|s| s.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()),
                samples,
                seed,
                tol,
            };
            let opts = SuiteOptions::resolve(&cli_opts, &sc.defaults);
            let reports = run_suite(&sc, &opts)?;
            let (doc, code) = emit_report(&reports, format);
            match out {
                Some(path) => std::fs::write(&path, &doc)
                    .map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))?,
                None => print!("{doc}"),
            }
            Ok(code)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
