use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use nls_lab::experiments::run_job;
use nls_lab::io::{write_report, write_snapshot, Command, RunConfig};
use nls_lab::Result;

#[derive(Parser)]
#[command(name = "nls-lab", version, about = "Frequency-truncated cubic NLS experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Config file (`section.key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Single solve with conservation and closed-form checks.
    Solve(Common),
    /// Torus-to-line approximation error over the schedule.
    Approx(Common),
    /// Mass localization outside the cutoff interval.
    MassLoc(Common),
    /// Weak well-posedness pairing discrepancy.
    WeakWp(Common),
    /// Stability under perturbed data and forcing.
    Perturb(Common),
    /// Littlewood-Paley commutator and mismatch estimates.
    LpCheck(Common),
    /// Pigeonhole interval selection.
    Pigeonhole(Common),
    /// Witness search for a large pairing.
    Witness(Common),
    /// Equicontinuity of the solution norms.
    Norms(Common),
}

impl Cmd {
    fn split(self) -> (Command, Common) {
        match self {
            Cmd::Solve(c) => (Command::Solve, c),
            Cmd::Approx(c) => (Command::Approx, c),
            Cmd::MassLoc(c) => (Command::MassLoc, c),
            Cmd::WeakWp(c) => (Command::WeakWp, c),
            Cmd::Perturb(c) => (Command::Perturb, c),
            Cmd::LpCheck(c) => (Command::LpCheck, c),
            Cmd::Pigeonhole(c) => (Command::Pigeonhole, c),
            Cmd::Witness(c) => (Command::Witness, c),
            Cmd::Norms(c) => (Command::Norms, c),
        }
    }
}

fn run(command: Command, args: Common) -> Result<bool> {
    let mut rc = RunConfig::load(&args.config, command)?;
    if let Some(seed) = args.seed {
        rc = rc.with_seed(seed);
    }
    let out = args
        .out
        .clone()
        .or_else(|| rc.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let (mut rep, traj) = run_job(&rc.job)?;
    rep.config_hash = rc.hash();
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    rep.timestamp = Some(now.to_string());
    let path = write_report(&out, &rep)?;
    if let Some(traj) = traj {
        let snap = out.join(&rc.snapshot);
        write_snapshot(&snap, &traj)?;
        if !args.quiet {
            println!("snapshot {}", snap.display());
        }
    }
    if !args.quiet {
        for (name, v) in &rep.verdicts {
            println!("{} {name}: {}", if v.passed { "PASS" } else { "FAIL" }, v.rule);
        }
        for (name, note) in &rep.notes {
            println!("note {name}: {note}");
        }
        println!("report {}", path.display());
    }
    Ok(rep.all_pass())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let (command, args) = cli.command.split();
    match run(command, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
