use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ers_core::scenario::{
    run_scenario, summary_line, write_atomic, write_outcome, ConfigFile, Overrides, Scenario, SettlingReport,
};
use ers_core::settle::{law_bounds, law_settling_time, EstimateKind, SettlingEstimate};
use ers_core::verify::{self, Level, VerifySummary};
use ers_core::{AttractingLaw, Error};

#[derive(Parser)]
#[command(
    name = "ers",
    version,
    about = "Attracting laws, settling times and time-variant QP tracking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print exact settling times and uniform bounds for a law
    Settle {
        /// Law as an inline table, e.g. '{ type = "SPRL", kappa = 1.0, gamma = 0.5 }'
        #[arg(long)]
        law: Option<String>,
        /// Initial error magnitudes; `inf` prints bounds only
        #[arg(long = "e0", value_delimiter = ',')]
        e0: Vec<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Emit JSON instead of a table
        #[arg(long)]
        json: bool,
    },
    /// Run every scenario of a config file
    Simulate(RunArgs),
    /// Run the QP scenarios of a config file, or the benchmark problem
    Qp {
        #[command(flatten)]
        run: RunArgs,
        /// Law for the benchmark run when no config is given
        #[arg(long)]
        law: Option<String>,
    },
    /// Run the verification suite
    Verify {
        #[arg(long)]
        level: Option<Level>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run only these criteria
        #[arg(long, value_delimiter = ',')]
        criterion: Vec<u32>,
    },
    /// Summarize the reports under an output directory
    Report {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run only the named scenario
    #[arg(long)]
    scenario: Option<String>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            dt: self.dt,
            horizon: self.horizon,
            tol: self.tol,
            seed: self.seed,
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Divergence { .. } | Error::IllConditioned { .. } | Error::Numeric(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn dispatch(cmd: Command) -> Result<bool, Error> {
    match cmd {
        Command::Settle { law, e0, config, json } => settle(law, e0, config, json),
        Command::Simulate(run) => simulate(&run, false, None),
        Command::Qp { run, law } => simulate(&run, true, law),
        Command::Verify {
            level,
            config,
            out,
            criterion,
        } => verify_cmd(level, config, out, criterion),
        Command::Report { out, config } => report(out, config),
    }
}

fn parse_law(text: &str) -> Result<AttractingLaw, Error> {
    let text = text.trim();
    let doc = if text.starts_with('{') {
        format!("law = {text}")
    } else {
        format!("[law]\n{text}")
    };
    #[derive(serde::Deserialize)]
    struct Wrap {
        law: AttractingLaw,
    }
    let w: Wrap = toml::from_str(&doc).map_err(|e| Error::Config(format!("--law: {e}")))?;
    w.law.validate()?;
    Ok(w.law)
}

fn load(config: Option<&Path>) -> Result<ConfigFile, Error> {
    match config {
        Some(p) => ConfigFile::load(p),
        None => Ok(ConfigFile::default()),
    }
}

#[derive(serde::Serialize)]
struct SettleRow {
    law: String,
    e0: f64,
    #[serde(flatten)]
    estimate: SettlingEstimate,
}

fn settle(law: Option<String>, e0: Vec<f64>, config: Option<PathBuf>, json: bool) -> Result<bool, Error> {
    let mut jobs: Vec<(String, AttractingLaw, Vec<f64>)> = Vec::new();
    if let Some(text) = law {
        let l = parse_law(&text)?;
        let e0 = if e0.is_empty() { vec![f64::INFINITY] } else { e0.clone() };
        jobs.push((l.name().to_string(), l, e0));
    }
    for s in load(config.as_deref())?.scenario {
        let list = match (&s.problem, e0.is_empty()) {
            (_, false) => e0.clone(),
            (ers_core::scenario::Problem::Scalar { e0 }, true) => vec![e0.abs()],
            _ => vec![f64::INFINITY],
        };
        jobs.push((s.name, s.law, list));
    }
    if jobs.is_empty() {
        return Err(Error::Config("settle needs --law or --config".into()));
    }
    let mut rows = Vec::new();
    for (name, law, list) in &jobs {
        let bounds = law_bounds(law)?;
        for &e in list {
            if e.is_finite() {
                if let Some(est) = law_settling_time(law, e)? {
                    rows.push(SettleRow {
                        law: name.clone(),
                        e0: e,
                        estimate: est,
                    });
                }
            }
            for b in &bounds {
                rows.push(SettleRow {
                    law: name.clone(),
                    e0: e,
                    estimate: b.clone(),
                });
            }
        }
    }
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&rows).map_err(|e| Error::Config(e.to_string()))?
        );
    } else {
        println!("{:<16} {:>12} {:<6} {:>16}  formula", "law", "e0", "kind", "time");
        for r in &rows {
            let kind = match r.estimate.kind {
                EstimateKind::Exact => "exact",
                EstimateKind::UpperBound => "bound",
            };
            println!(
                "{:<16} {:>12} {:<6} {:>16.10}  {}{}",
                r.law,
                r.e0,
                kind,
                r.estimate.time,
                r.estimate.formula_id,
                r.estimate
                    .warning
                    .as_deref()
                    .map(|w| format!("  ({w})"))
                    .unwrap_or_default()
            );
        }
    }
    Ok(true)
}

fn default_qp_scenario(law: AttractingLaw) -> Scenario {
    Scenario {
        name: "benchmark".into(),
        problem: ers_core::scenario::Problem::Benchmark { z0: None },
        law,
        comp: Default::default(),
        dist: Default::default(),
        numerics: ers_core::scenario::Numerics {
            dt: 1e-3,
            horizon: 10.0,
            ..Default::default()
        },
        split: None,
    }
}

fn simulate(run: &RunArgs, qp_only: bool, law: Option<String>) -> Result<bool, Error> {
    let cfg = load(run.config.as_deref())?;
    let out = run
        .out
        .clone()
        .or(cfg.run.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut scenarios: Vec<Scenario> = cfg
        .scenario
        .into_iter()
        .filter(|s| !qp_only || s.problem.is_qp())
        .filter(|s| run.scenario.as_ref().is_none_or(|n| &s.name == n))
        .collect();
    if qp_only && run.config.is_none() {
        let law = match law {
            Some(t) => parse_law(&t)?,
            None => AttractingLaw::Dprl {
                kappa1: 1.0,
                kappa2: 1.0,
                gamma1: 0.5,
                gamma2: 1.5,
            },
        };
        scenarios.push(default_qp_scenario(law));
    }
    if scenarios.is_empty() {
        return Err(Error::Config("no scenarios to run".into()));
    }
    let ov = run.overrides();
    let mut all_pass = true;
    for mut s in scenarios {
        ov.apply(&mut s);
        let outcome = run_scenario(&s)?;
        write_outcome(&out, &outcome)?;
        println!("{}", summary_line(&outcome.report));
        for n in &outcome.report.notes {
            println!("      note: {n}");
        }
        all_pass &= outcome.report.pass;
    }
    Ok(all_pass)
}

fn verify_cmd(
    level: Option<Level>,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    criterion: Vec<u32>,
) -> Result<bool, Error> {
    let cfg = load(config.as_deref())?;
    let level = level.or(cfg.run.level).unwrap_or(Level::Quick);
    let out = out.or(cfg.run.out);
    let summary = if criterion.is_empty() {
        verify::run_all(level)
    } else {
        let start = std::time::Instant::now();
        let criteria: Vec<_> = criterion.iter().map(|&id| verify::run_criterion(id, level)).collect();
        VerifySummary {
            level,
            pass: criteria.iter().all(|c| c.pass),
            seconds: start.elapsed().as_secs_f64(),
            criteria,
        }
    };
    for c in &summary.criteria {
        println!("{}", c.line());
    }
    println!(
        "{} criteria, {} failed, {:.1}s at level {}",
        summary.criteria.len(),
        summary.failed().len(),
        summary.seconds,
        summary.level
    );
    for c in summary.criteria.iter().filter(|c| !c.pass) {
        eprintln!("criterion {} failures:", c.id);
        for f in c.failures.iter().take(10) {
            eprintln!("  {f}");
        }
        if c.failures.len() > 10 {
            eprintln!("  ... {} more", c.failures.len() - 10);
        }
    }
    if let Some(out) = out {
        let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Config(e.to_string()))?;
        write_atomic(&out.join("verify.json"), |w| w.write_all(json.as_bytes()))?;
    }
    Ok(summary.pass)
}

fn report(out: Option<PathBuf>, config: Option<PathBuf>) -> Result<bool, Error> {
    let cfg = load(config.as_deref())?;
    let out = out.or(cfg.run.out).unwrap_or_else(|| PathBuf::from("out"));
    let mut entries: Vec<PathBuf> = fs::read_dir(&out)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", out.display())))?
        .filter_map(|e| e.ok().map(|e| e.path().join("report.json")))
        .filter(|p| p.is_file())
        .collect();
    entries.sort();
    let mut all_pass = true;
    for p in &entries {
        let text = fs::read_to_string(p)?;
        let r: SettlingReport =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
        println!("{}", summary_line(&r));
        all_pass &= r.pass;
    }
    let verify_path = out.join("verify.json");
    let mut found = !entries.is_empty();
    if verify_path.is_file() {
        found = true;
        let s: VerifySummary = serde_json::from_str(&fs::read_to_string(&verify_path)?)
            .map_err(|e| Error::Config(format!("{}: {e}", verify_path.display())))?;
        for c in &s.criteria {
            println!("{}", c.line());
        }
        all_pass &= s.pass;
    }
    if !found {
        return Err(Error::Config(format!("no reports under {}", out.display())));
    }
    Ok(all_pass)
}
