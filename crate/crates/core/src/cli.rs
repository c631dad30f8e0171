//! Command-line front end.
//!
//! Exit codes: 0 on success or a passing scenario, 1 on a failing scenario,
//! 2 on usage errors. Diagnostics go to standard error, data to files or
//! standard output.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::conditionality::{
    ladder_csv, measure_ladder, ConstantKind, EstimateConfig, GrowthReport, GrowthTarget, LadderOptions,
    LadderPoint, TemplateFamily, Verdict, DEFAULT_SLOPE_BAND, ORACLE_GUARD,
};
use crate::greedy::{self, FundamentalMode, SUBSET_GUARD};
use crate::recipe::Recipe;
use crate::report::line_plot;
use crate::scenarios::{self, Scenario, DEFAULT_BUDGET, DEFAULT_SEED};
use crate::witness::Witness;

/// Caps the worker threads of the global pool.
pub const THREADS_ENV: &str = "CONDGREEDY_THREADS";

#[derive(Debug, Parser)]
#[command(name = "condgreedy", version, about = "Conditionality and greedy constants of finite basis truncations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a basis and write its JSON document.
    Construct {
        #[arg(long)]
        basis: String,
        /// Output file, or `-` for standard output.
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Lower bounds for L_m or k_m along a ladder.
    Constants {
        #[arg(long)]
        basis: String,
        /// `L` or `k`.
        #[arg(long, default_value = "L")]
        kind: ConstantKind,
        /// `2..10`, `4,8,16` or `2^2..2^6`.
        #[arg(long)]
        m: String,
        /// Use the exhaustive oracle at every rung (L only, m <= 12).
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Growth target for the fit: `log`, `linear` or `power:a`.
        #[arg(long)]
        target: Option<GrowthTarget>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Quasi-greedy and almost-greedy lower bounds and the fundamental function.
    GreedyCheck {
        #[arg(long)]
        basis: String,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Skip the almost-greedy search.
        #[arg(long)]
        no_almost: bool,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Run a named scenario and write its report bundle.
    Experiment {
        name: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long, default_value = "reports")]
        out: PathBuf,
        /// TOML file of `[[scenario]]` tables searched before the builtins.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Leave the timestamp out of the manifest.
        #[arg(long)]
        no_timestamp: bool,
    },
    /// Print the available scenarios.
    ListScenarios {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Inclusive range `a..b`, dyadic range `2^a..2^b` or comma list.
pub fn parse_ladder(s: &str) -> anyhow::Result<Vec<usize>> {
    let ladder: Vec<usize> = if let Some((lo, hi)) = s.split_once("..") {
        match (lo.strip_prefix("2^"), hi.strip_prefix("2^")) {
            (Some(a), Some(b)) => {
                let (a, b): (u32, u32) = (a.parse()?, b.parse()?);
                if b > 30 {
                    bail!("exponent {b} too large");
                }
                (a..=b).map(|k| 1usize << k).collect()
            }
            (None, None) => (lo.trim().parse()?..=hi.trim().parse()?).collect(),
            _ => bail!("mixed range `{s}`"),
        }
    } else {
        s.split(',').map(|t| t.trim().parse::<usize>()).collect::<Result<_, _>>()?
    };
    if ladder.is_empty() || ladder.contains(&0) || ladder.windows(2).any(|w| w[0] >= w[1]) {
        bail!("ladder `{s}` must be strictly increasing positive integers");
    }
    Ok(ladder)
}

fn emit(out: &str, stdout: &mut dyn Write, text: &str) -> anyhow::Result<()> {
    if out == "-" {
        stdout.write_all(text.as_bytes())?;
    } else {
        std::fs::write(out, text).with_context(|| format!("writing {out}"))?;
    }
    Ok(())
}

fn find_scenario(name: &str, config: Option<&Path>) -> anyhow::Result<Scenario> {
    if let Some(path) = config {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        if let Some(s) = scenarios::parse_config(&text)?.into_iter().find(|s| s.name == name) {
            return Ok(s);
        }
    }
    Ok(scenarios::find_builtin(name)?)
}

#[derive(Serialize)]
struct Ladder<'a> {
    basis: &'a str,
    kind: ConstantKind,
    points: &'a [LadderPoint],
}

#[derive(Serialize)]
struct GreedyEntry {
    value: f64,
    witness: Witness,
}

#[derive(Serialize)]
struct FundamentalEntry {
    m: usize,
    phi: f64,
    democracy: f64,
}

#[derive(Serialize)]
struct GreedyReport {
    basis: String,
    mode: &'static str,
    quasi_greedy: GreedyEntry,
    almost_greedy: Option<GreedyEntry>,
    fundamental: Vec<FundamentalEntry>,
}

/// Executes a parsed command; the returned code is 0 or 1.
pub fn execute(cli: Cli, stdout: &mut dyn Write) -> anyhow::Result<i32> {
    match cli.command {
        Command::Construct { basis, out } => {
            let b = basis.parse::<Recipe>()?.build()?;
            emit(&out, stdout, &(b.to_json() + "\n"))?;
            Ok(0)
        }
        Command::Constants { basis, kind, m, oracle, budget, seed, target, format, out } => {
            let ladder = parse_ladder(&m)?;
            let b = basis.parse::<Recipe>()?.build()?;
            if oracle && (kind == ConstantKind::K || ladder.iter().any(|&m| m > ORACLE_GUARD)) {
                bail!("--oracle needs kind L and every rung at most {ORACLE_GUARD}");
            }
            let opts = LadderOptions {
                oracle_through: if oracle { ORACLE_GUARD } else { 0 },
                budget,
                seed,
                templates: TemplateFamily::standard(),
                config: EstimateConfig::default(),
            };
            let delta = target.unwrap_or(GrowthTarget::Linear);
            let points = measure_ladder(&b, kind, &ladder, delta, &opts)?;
            let growth = target.map(|t| GrowthReport::new(b.label(), t, points.clone(), DEFAULT_SLOPE_BAND));
            if let Some(g) = &growth {
                match g.fit {
                    Some(f) => eprintln!(
                        "fit vs {}: slope {:.6}, R2 {}, {}",
                        g.target,
                        f.slope,
                        f.r_squared.map_or("undefined".into(), |r| format!("{r:.6}")),
                        g.verdict.as_str()
                    ),
                    None => eprintln!("fit vs {}: ladder too short", g.target),
                }
            }
            let text = match format {
                Format::Csv => ladder_csv(&points),
                Format::Json => match &growth {
                    Some(g) => g.to_json() + "\n",
                    None => {
                        let doc = Ladder { basis: b.label(), kind, points: &points };
                        serde_json::to_string_pretty(&doc)? + "\n"
                    }
                },
                Format::Svg => {
                    let pts: Vec<(f64, f64)> = points.iter().map(|p| (p.m as f64, p.lb)).collect();
                    line_plot(b.label(), "m", "lower bound", &pts)
                }
            };
            emit(&out, stdout, &text)?;
            Ok(0)
        }
        Command::GreedyCheck { basis, budget, seed, no_almost, format, out } => {
            let b = basis.parse::<Recipe>()?.build()?;
            let (value, witness) = greedy::quasi_greedy_constant_lb(&b, budget, seed)?;
            let quasi_greedy = GreedyEntry { value, witness };
            let almost_greedy = if no_almost {
                None
            } else {
                let (value, witness) = greedy::almost_greedy_constant_lb(&b, budget, seed)?;
                Some(GreedyEntry { value, witness })
            };
            let mode = if b.d() <= SUBSET_GUARD { FundamentalMode::Exact } else { FundamentalMode::Search };
            let profile = (mode == FundamentalMode::Exact).then(|| greedy::subset_norm_profile(&b)).transpose()?;
            let mut fundamental = Vec::new();
            for m in 1..=b.d() {
                let (phi, democracy) = match &profile {
                    Some(p) => (p.upper[m], p.upper[m] / p.lower[m]),
                    None => (
                        greedy::fundamental_function(&b, m, mode, budget, seed)?,
                        greedy::democracy_ratio(&b, m, mode, budget, seed)?,
                    ),
                };
                fundamental.push(FundamentalEntry { m, phi, democracy });
            }
            let report = GreedyReport {
                basis: b.label().into(),
                mode: if profile.is_some() { "exact" } else { "search" },
                quasi_greedy,
                almost_greedy,
                fundamental,
            };
            let text = match format {
                Format::Json => serde_json::to_string_pretty(&report)? + "\n",
                Format::Csv => {
                    let mut w = csv::WriterBuilder::new()
                        .terminator(csv::Terminator::Any(b'\n'))
                        .from_writer(Vec::new());
                    w.write_record(["quantity", "m", "value"])?;
                    w.write_record(["quasi-greedy", "", &report.quasi_greedy.value.to_string()])?;
                    if let Some(a) = &report.almost_greedy {
                        w.write_record(["almost-greedy", "", &a.value.to_string()])?;
                    }
                    for f in &report.fundamental {
                        w.write_record(["phi", &f.m.to_string(), &f.phi.to_string()])?;
                        w.write_record(["democracy", &f.m.to_string(), &f.democracy.to_string()])?;
                    }
                    String::from_utf8(w.into_inner()?)?
                }
                Format::Svg => {
                    let pts: Vec<(f64, f64)> = report.fundamental.iter().map(|f| (f.m as f64, f.phi)).collect();
                    line_plot(b.label(), "m", "phi_m", &pts)
                }
            };
            emit(&out, stdout, &text)?;
            Ok(0)
        }
        Command::Experiment { name, seed, budget, out, config, no_timestamp } => {
            let mut scenario = find_scenario(&name, config.as_deref())?;
            if let Some(seed) = seed {
                scenario.seed = seed;
            }
            if let Some(budget) = budget {
                scenario.budget = budget;
            }
            let report = scenarios::run(&scenario)?;
            let manifest = scenarios::write_bundle(&report, &out, !no_timestamp)?;
            for c in &report.checks {
                eprintln!("{} {}: {}", c.verdict.as_str(), c.check, c.detail);
            }
            eprintln!(
                "{} {} -> {} ({} files)",
                report.verdict.as_str(),
                report.name,
                out.display(),
                manifest.files.len() + 1
            );
            Ok(if report.verdict == Verdict::Pass { 0 } else { 1 })
        }
        Command::ListScenarios { config } => {
            let mut all = Vec::new();
            if let Some(path) = config {
                let text =
                    std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                all.extend(scenarios::parse_config(&text)?);
            }
            all.extend(scenarios::builtin_scenarios());
            for s in all {
                writeln!(stdout, "{}\t{}", s.name, s.recipe)?;
            }
            Ok(0)
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().with_context(|| format!("{THREADS_ENV}={v} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return 2;
    }
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(cli, &mut lock) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            eprintln!("run `condgreedy --help` for usage");
            2
        }
    }
}
