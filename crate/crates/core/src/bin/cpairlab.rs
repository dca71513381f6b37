//! Scenario runner: loads a universe file, executes its tasks, and writes
//! a deterministic report. Exit status is 0 exactly when no task verdict
//! contradicted its declared expectation.

use clap::Parser;
use cpairlab::funcfield::SearchBudget;
use cpairlab::runner::{run_scenario_file, RunConfig};

#[derive(Parser)]
#[command(name = "cpairlab", version, about = "exact C-pair workbench over function fields")]
struct Cli {
    /// Scenario file to execute.
    #[arg(long)]
    scenario: String,

    /// Budget preset (default | shallow | deep) or custom f,e,c triple.
    #[arg(long, default_value = "default")]
    budget: String,

    /// Worker threads for pair-verdict evaluation (0 = rayon default).
    #[arg(long, default_value_t = 0)]
    threads: usize,

    /// Report output path; stdout when omitted.
    #[arg(long)]
    report: Option<String>,

    /// Seed for randomized property tasks; verdicts never depend on it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_budget(spec: &str) -> Result<Option<SearchBudget>, String> {
    if spec == "default" {
        // Defer to the scenario's own budget declaration, if any.
        return Ok(None);
    }
    if let Some(b) = SearchBudget::preset(spec) {
        return Ok(Some(b));
    }
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() == 3 {
        let f = parts[0].parse().map_err(|_| "bad max_factors")?;
        let e = parts[1].parse().map_err(|_| "bad max_exp")?;
        let c = parts[2].parse().map_err(|_| "bad max_consts")?;
        return Ok(Some(SearchBudget { max_factors: f, max_exp: e, max_consts: c }));
    }
    Err(format!("unrecognized budget spec `{}`", spec))
}

fn main() {
    let cli = Cli::parse();
    let budget = match parse_budget(&cli.budget) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {}", e);
            std::process::exit(2);
        }
    };
    let cfg = RunConfig { budget, threads: cli.threads, seed: cli.seed };
    match run_scenario_file(&cli.scenario, &cfg) {
        Ok(out) => {
            match &cli.report {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, &out.report) {
                        eprintln!("error: cannot write report: {}", e);
                        std::process::exit(2);
                    }
                }
                None => print!("{}", out.report),
            }
            std::process::exit(out.exit_code);
        }
        Err(e) => {
            eprintln!("error: {}", e);
            std::process::exit(2);
        }
    }
}
