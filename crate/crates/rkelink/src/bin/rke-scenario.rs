//! Command-line front end for scenario runs.
//!
//! Thin by design: argument parsing and printing only, with all behavior
//! in the library. Exit code is 0 when the run completes and every
//! configured attack verdict matches what the enabled defenses predict.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rkelink::scenario::{
    self, compare, load_scenario, run_attack_suite, run_dynamic_wifi, run_scenario, RunMetrics,
    ScenarioConfig,
};

#[derive(Parser)]
#[command(
    name = "rke-scenario",
    about = "Deterministic adaptive-RKE scenario runner",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path: `.csv` for the event series, `.json` for the summary.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Force the non-adaptive baseline link.
    #[arg(long)]
    no_adapt: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario as configured.
    Run(CommonArgs),
    /// Run with the four-phase moving-interferer schedule.
    Dynamic(CommonArgs),
    /// Execute the attack suite and print verdicts with transcripts.
    Attacks {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Print full message transcripts.
        #[arg(long)]
        verbose: bool,
    },
    /// Run adaptive and baseline twins from one seed.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Stem for `<stem>_adaptive.csv` and `<stem>_baseline.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(config: &Path, seed: Option<u64>, no_adapt: bool) -> rkelink::Result<ScenarioConfig> {
    let mut cfg = load_scenario(config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if no_adapt {
        cfg.adaptation = false;
    }
    Ok(cfg)
}

fn print_summary(metrics: &RunMetrics) {
    let s = &metrics.summary;
    println!("seed:                     {}", s.seed);
    println!("events:                   {}", s.events);
    println!("adaptive:                 {}", s.adaptive);
    println!("auth round executed:      {}", s.auth_round_executed);
    println!("final pdr_total:          {:.4}", s.final_pdr_total);
    println!("steady-state pdr_latest:  {:.4}", s.steady_state_pdr_latest);
    if s.phase_pdr_total.len() > 1 {
        let phases: Vec<String> = s
            .phase_pdr_total
            .iter()
            .map(|p| format!("{p:.4}"))
            .collect();
        println!("per-phase pdr_total:      [{}]", phases.join(", "));
    }
    for a in &s.attacks {
        println!(
            "attack {} @ event {}: {} ({})",
            a.kind, a.trigger_event, a.verdict, a.detail
        );
    }
}

fn write_outputs(metrics: &RunMetrics, out: &Option<PathBuf>) -> rkelink::Result<()> {
    if let Some(path) = out {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => scenario::emit_json(metrics, path)?,
            _ => scenario::emit_csv(metrics, path)?,
        }
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_command(cli: Cli) -> rkelink::Result<bool> {
    match cli.command {
        Command::Run(args) => {
            let cfg = load(&args.config, args.seed, args.no_adapt)?;
            let metrics = run_scenario(&cfg)?;
            print_summary(&metrics);
            write_outputs(&metrics, &args.out)?;
            Ok(metrics.attacks_match_expectations(&cfg.defenses))
        }
        Command::Dynamic(args) => {
            let cfg = load(&args.config, args.seed, args.no_adapt)?;
            let metrics = run_dynamic_wifi(&cfg)?;
            print_summary(&metrics);
            write_outputs(&metrics, &args.out)?;
            Ok(metrics.attacks_match_expectations(&cfg.defenses))
        }
        Command::Attacks {
            config,
            seed,
            verbose,
        } => {
            let cfg = load(&config, seed, false)?;
            let outcomes = run_attack_suite(&cfg)?;
            let mut all_expected = true;
            for outcome in &outcomes {
                println!(
                    "attack {}: {} ({})",
                    outcome.kind.as_str(),
                    outcome.verdict_str(),
                    outcome.detail
                );
                if verbose {
                    for entry in &outcome.transcript {
                        println!("  {entry}");
                    }
                }
                all_expected &= outcome.matches_expectation(&cfg.defenses);
            }
            println!(
                "verdicts: {}",
                if all_expected {
                    "all as expected"
                } else {
                    "MISMATCH against expectations"
                }
            );
            Ok(all_expected)
        }
        Command::Compare { config, seed, out } => {
            let cfg = load(&config, seed, false)?;
            let report = compare(&cfg)?;
            println!("== adaptive ==");
            print_summary(&report.adaptive);
            println!("== baseline ==");
            print_summary(&report.baseline);
            if let Some(stem) = out {
                let base = stem.as_os_str().to_string_lossy();
                let adaptive_path = PathBuf::from(format!("{base}_adaptive.csv"));
                let baseline_path = PathBuf::from(format!("{base}_baseline.csv"));
                scenario::emit_csv(&report.adaptive, &adaptive_path)?;
                scenario::emit_csv(&report.baseline, &baseline_path)?;
                println!("wrote {}", adaptive_path.display());
                println!("wrote {}", baseline_path.display());
            }
            let ok = report.adaptive.attacks_match_expectations(&cfg.defenses)
                && report.baseline.attacks_match_expectations(&cfg.defenses);
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_command(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
