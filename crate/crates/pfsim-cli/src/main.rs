use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pfsim::experiments::analyze::cmd_analyze;
use pfsim::experiments::config::AnalysisSection;
use pfsim::experiments::reproduce::{cmd_reproduce, ReproduceOptions, Scale, EXPERIMENTS};
use pfsim::experiments::sample::{cmd_sample, snapshot_paths};
use pfsim::experiments::{ExperimentConfig, Snapshot};
use pfsim::oracle::checks::{run_suite, OracleConfig, SUITES};
use pfsim::par;

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "pfsim", version, about = "Potts and random-cluster interfaces above hard and soft floors")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// JSON config file
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the sampler seed
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads (0 = all cores)
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    workers: usize,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the chains of a config and write snapshots plus manifest.json
    Sample,
    /// Write CSV reports for a set of snapshots
    Analyze {
        /// Snapshot files, directories of snapshots, or glob patterns
        #[arg(required = true)]
        inputs: Vec<String>,
        /// Add the per-sample interface-ordering audit
        #[arg(long)]
        ordering_audit: bool,
        /// Add full-interface sizes and heights
        #[arg(long)]
        full: bool,
        /// Add the wall decomposition
        #[arg(long)]
        walls: bool,
        /// Add point-to-plane rates (red_all snapshots)
        #[arg(long)]
        rates: bool,
    },
    /// Run an exact oracle check suite and print its JSON report
    Oracle {
        /// One of: coupling, free-energy, xi-ratio, monotonicity, fkg
        suite: String,
    },
    /// Run a named experiment pipeline and print its verdict
    Reproduce {
        /// One of: main-theorem-height, dobrushin-tails, rate-table, cylinder-insensitivity
        experiment: String,
        /// Small boxes and few samples
        #[arg(long)]
        quick: bool,
    },
    /// Print build information, or the header of a snapshot
    Info {
        snapshot: Option<PathBuf>,
    },
}

enum Outcome {
    Pass,
    Fail,
}

fn expand(inputs: &[String]) -> Result<Vec<PathBuf>, String> {
    let mut out = Vec::new();
    for input in inputs {
        let path = Path::new(input);
        if path.is_dir() {
            out.extend(snapshot_paths(path).map_err(|e| e.to_string())?);
        } else if input.contains(['*', '?', '[']) {
            let matches = glob::glob(input).map_err(|e| format!("bad pattern {input}: {e}"))?;
            out.extend(matches.filter_map(Result::ok));
        } else {
            out.push(path.to_path_buf());
        }
    }
    if out.is_empty() {
        return Err("no snapshots matched the inputs".into());
    }
    Ok(out)
}

fn load_config(g: &Global) -> Result<ExperimentConfig, String> {
    let mut cfg = match &g.config {
        Some(p) => ExperimentConfig::load(p).map_err(|e| e.to_string())?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = g.seed {
        cfg.sampler.seed = seed;
    }
    if let Some(out) = &g.out {
        cfg.output.dir = out.clone();
    }
    Ok(cfg)
}

fn print_json(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("serialisable"));
}

fn run(cli: Cli) -> Result<Outcome, String> {
    let g = &cli.global;
    match cli.command {
        Command::Sample => {
            let cfg = load_config(g)?;
            let m = cmd_sample(&cfg, &cfg.output.dir).map_err(|e| e.to_string())?;
            println!(
                "wrote {} snapshots to {} in {:.2} s (τ̂_energy = {:.2})",
                m.files.len(),
                cfg.output.dir.display(),
                m.elapsed_secs,
                m.tau_energy
            );
            if let Some(c) = m.conditional {
                println!("conditional acceptance rate {:.4} ({} / {})", c.acceptance_rate, c.accepted, c.attempts);
            }
            Ok(Outcome::Pass)
        }
        Command::Analyze {
            inputs,
            ordering_audit,
            full,
            walls,
            rates,
        } => {
            let mut a: AnalysisSection = match &g.config {
                Some(_) => load_config(g)?.analyses,
                None => AnalysisSection::default(),
            };
            a.ordering_audit |= ordering_audit;
            a.full |= full;
            a.walls |= walls;
            a.rates |= rates;
            let paths = expand(&inputs)?;
            let out = g.out.clone().unwrap_or_else(|| PathBuf::from("pfsim-analysis"));
            let r = cmd_analyze(&paths, &a, &out).map_err(|e| e.to_string())?;
            println!("analyzed {} snapshots into {}: {}", r.n_samples, out.display(), r.files.join(", "));
            let mut ok = true;
            if let Some(o) = &r.ordering {
                println!("ordering audit: {} of {} samples violate the interface order", o.failures, o.checked);
                ok &= o.failures == 0;
            }
            if let Some(w) = &r.walls {
                println!("excess-area identity violations: {}", w.identity_violations);
                ok &= w.identity_violations == 0;
            }
            for (suite, passed) in &r.oracle {
                println!("oracle {suite}: {}", if *passed { "pass" } else { "FAIL" });
                ok &= passed;
            }
            Ok(if ok { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Oracle { suite } => {
            let cfg: OracleConfig = match &g.config {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?;
                    serde_json::from_str(&text).map_err(|e| format!("oracle config {}: {e}", p.display()))?
                }
                None => OracleConfig::default(),
            };
            let report = run_suite(&suite, &cfg).map_err(|e| e.to_string())?;
            let json = report.to_json();
            if let Some(out) = &g.out {
                std::fs::create_dir_all(out).map_err(|e| e.to_string())?;
                std::fs::write(out.join(format!("oracle_{suite}.json")), &json).map_err(|e| e.to_string())?;
            }
            println!("{json}");
            Ok(if report.passed() { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Reproduce { experiment, quick } => {
            let opts = ReproduceOptions {
                seed: g.seed.unwrap_or(1),
                scale: if quick { Scale::Quick } else { Scale::Full },
            };
            let out = g.out.clone().unwrap_or_else(|| PathBuf::from("pfsim-reproduce"));
            let v = cmd_reproduce(&experiment, opts, &out).map_err(|e| e.to_string())?;
            for c in &v.checks {
                println!("{} {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
            }
            for w in &v.warnings {
                eprintln!("warning: {w}");
            }
            println!("summary: {}", out.join(&experiment).join("summary.json").display());
            Ok(if v.passed { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Info { snapshot } => {
            match snapshot {
                Some(p) => {
                    let s = Snapshot::read(&p).map_err(|e| e.to_string())?;
                    print_json(&serde_json::json!({
                        "header": s.header,
                        "n_sites": s.colors.len(),
                        "n_edges": s.edges.as_ref().map_or(0, Vec::len),
                    }));
                }
                None => print_json(&serde_json::json!({
                    "version": env!("CARGO_PKG_VERSION"),
                    "parallel": par::parallel_enabled(),
                    "workers": par::current_workers(),
                    "snapshot_format": "PFSIM1",
                    "oracle_suites": SUITES,
                    "experiments": EXPERIMENTS,
                })),
            }
            Ok(Outcome::Pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let workers = cli.global.workers;
    match par::with_workers(workers, || run(cli)) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(EXIT_FAIL),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
