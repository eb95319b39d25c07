use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use teg_harness::baseline::run_baseline;
use teg_harness::config::parse_range;
use teg_harness::output::{summarize, write_run, write_summary};
use teg_harness::verify::{self, Verdict};
use teg_harness::{run_scenario, ScenarioConfig};

#[derive(Parser)]
#[command(name = "teg", version, about = "Thermo-economic cluster simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// TOML scenario file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Override a setting, e.g. `--set population.agents=128`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write events.jsonl, metrics.csv and summary.json.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run a scenario for every value of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `key=a..b`, `key=start:stop:n` or `key=v1,v2,...`.
        #[arg(long)]
        param: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run verification oracles.
    Verify {
        #[arg(value_enum)]
        check: Check,
        #[command(flatten)]
        common: Common,
    },
    /// Replay the workload through the centralized baseline.
    Baseline {
        #[command(flatten)]
        common: Common,
        /// Hoarding factor; the config value when omitted.
        #[arg(long)]
        alpha: Option<f64>,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Check {
    NoOom,
    Conservation,
    Equilibrium,
    Lyapunov,
    Damping,
    Stress,
    Landau,
    Convergence,
    Orderbook,
    Vickrey,
    Fear,
    Thermal,
    Determinism,
    All,
}

fn load(common: &Common) -> Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    for kv in &common.set {
        let (k, v) = kv.split_once('=').with_context(|| format!("expected KEY=VALUE, got {kv}"))?;
        cfg.set_param(k, v)?;
    }
    if let Some(s) = common.seed {
        cfg.run.seed = Some(s);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report(verdicts: &[Verdict]) -> ExitCode {
    for v in verdicts {
        println!("{}", v.line());
    }
    if verdicts.iter().all(|v| v.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn run_checks(check: Check, cfg: &ScenarioConfig) -> Result<Vec<Verdict>> {
    use verify::*;
    let seed = cfg.seed()?;
    let all = check == Check::All;
    let mut out = Vec::new();
    let want = |c: Check| all || check == c;
    if want(Check::NoOom) {
        out.push(nooom::verify_no_oom(1000, seed).1);
    }
    if want(Check::Conservation) {
        let run = run_scenario(cfg)?;
        out.push(verify_conservation(&run.events));
        out.push(verify_replay(&run.events, &run.metrics, &cfg.metrics));
    }
    if want(Check::Equilibrium) {
        out.push(equilibrium::verify_equilibrium(&Default::default()).1);
    }
    if want(Check::Lyapunov) {
        out.push(lyapunov::verify_attractors(&[-0.3, 0.0, 0.5], &[0.5, 1.0, 2.0]).1);
    }
    if want(Check::Damping) {
        out.push(damping::verify_damping(&Default::default(), 10).1);
    }
    if want(Check::Stress) {
        out.push(stress::verify_stress(&Default::default()).1);
    }
    if want(Check::Landau) {
        out.push(stress::verify_landau(&cfg.governor.landau, 4.0 * cfg.governor.landau.re_c, 100));
    }
    if want(Check::Convergence) {
        out.push(convergence::verify_convergence(&Default::default()).1);
    }
    if want(Check::Orderbook) {
        out.push(book::verify_orderbook(1000, 10_000, seed).1);
    }
    if want(Check::Vickrey) {
        out.push(book::verify_truthfulness(10).1);
    }
    if want(Check::Fear) {
        out.push(fear::verify_fear(cfg)?.1);
    }
    if want(Check::Thermal) {
        let seeds: Vec<u64> = (0..5).map(|i| seed + i).collect();
        out.push(thermal::verify_thermal(cfg, &seeds)?.1);
    }
    if want(Check::Determinism) {
        out.push(verify_determinism(cfg, &[4])?);
    }
    Ok(out)
}

fn main() -> Result<ExitCode> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.cmd {
        Command::Run { common, out, threads } => {
            let mut cfg = load(&common)?;
            if let Some(t) = threads {
                cfg.run.threads = t;
                cfg.validate()?;
            }
            let run = run_scenario(&cfg)?;
            let verdicts = vec![
                verify::verify_conservation(&run.events),
                verify::verify_replay(&run.events, &run.metrics, &cfg.metrics),
            ];
            let dir = out.or_else(|| cfg.run.out.clone());
            match dir {
                Some(d) => {
                    write_run(&d, &run, &verdicts)?;
                    println!("wrote {}", d.display());
                }
                None => println!("{}", serde_json::to_string_pretty(&summarize(&run))?),
            }
            Ok(report(&verdicts))
        }
        Command::Sweep { common, param, out } => {
            let base = load(&common)?;
            let (key, range) = param
                .split_once('=')
                .with_context(|| format!("expected KEY=RANGE, got {param}"))?;
            let mut rows = Vec::new();
            let mut verdicts = Vec::new();
            for value in parse_range(range)? {
                let mut cfg = base.clone();
                cfg.set_param(key, &value)?;
                cfg.validate()?;
                let run = run_scenario(&cfg)?;
                let v = verify::verify_conservation(&run.events);
                let mut s = summarize(&run);
                s["value"] = json!(value);
                if let Some(d) = &out {
                    write_run(&d.join(format!("{key}={value}")), &run, std::slice::from_ref(&v))?;
                }
                println!(
                    "{key}={value}: mean utilization {:.4}, variance {:.5}, alpha {:.4}, max Re {:.3}, burned {}",
                    s["mean_utilization"].as_f64().unwrap_or(0.0),
                    s["mean_util_variance"].as_f64().unwrap_or(0.0),
                    s["mean_alpha_hat"].as_f64().unwrap_or(0.0),
                    s["max_re"].as_f64().unwrap_or(0.0),
                    s["supply"]["burned"],
                );
                rows.push(s);
                verdicts.push(v);
            }
            if let Some(d) = &out {
                write_summary(d, &json!({ "param": key, "runs": rows }))?;
            }
            if verdicts.iter().any(|v| !v.passed) {
                return Ok(report(&verdicts));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { check, common } => {
            let mut common = common;
            if common.seed.is_none() && common.config.is_none() {
                common.seed = Some(1);
            }
            let cfg = load(&common)?;
            Ok(report(&run_checks(check, &cfg)?))
        }
        Command::Baseline { common, alpha } => {
            let cfg = load(&common)?;
            let a = alpha.unwrap_or(cfg.baseline.hoard_alpha);
            if !(a >= 0.0) {
                bail!("alpha must be non-negative, got {a}");
            }
            let epochs = run_baseline(&cfg, a)?;
            let n = epochs.len().max(1) as f64;
            let s = json!({
                "alpha": a,
                "epochs": epochs.len(),
                "mean_utilization": epochs.iter().map(|e| e.thermal.mean).sum::<f64>() / n,
                "mean_util_variance": epochs.iter().map(|e| e.thermal.variance).sum::<f64>() / n,
                "mean_alpha_hat": epochs.iter().map(|e| e.alpha_hat).sum::<f64>() / n,
                "final_queued": epochs.last().map_or(0, |e| e.queued),
            });
            println!("{}", serde_json::to_string_pretty(&s)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}
