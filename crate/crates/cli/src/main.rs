//! `ptsm`: behavioural distances, formulas and games on probabilistic
//! transition systems from the command line.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use report::{Inputs, RunReport};

#[derive(Parser)]
#[command(name = "ptsm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Also write the JSON report to this file.
    #[arg(long, global = true, value_name = "OUT")]
    json: Option<PathBuf>,
    /// Record wall-clock time in the report (makes it non-reproducible).
    #[arg(long, global = true)]
    timing: bool,
    /// Largest depth any command accepts.
    #[arg(long, global = true, env = "PTSM_MAX_DEPTH", default_value_t = 8)]
    max_depth: usize,
}

#[derive(Args, Clone)]
pub struct Systems {
    /// System file (JSON).
    #[arg(short = 's', long = "system")]
    pub system: PathBuf,
    /// Second system; defaults to the first.
    #[arg(long = "system-b")]
    pub system_b: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum MethodArg {
    W,
    K,
    G,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Fault {
    /// Drop the atom term from the transport chain.
    SkipAtomTerm,
}

#[derive(Subcommand)]
enum Command {
    /// Check a system file.
    Validate {
        #[arg(short = 's', long = "system")]
        system: PathBuf,
    },
    /// Evaluate a modal or first-order formula.
    Eval {
        #[arg(short = 's', long = "system")]
        system: PathBuf,
        #[arg(long, conflicts_with = "fo", required_unless_present = "fo")]
        modal: Option<String>,
        #[arg(long)]
        fo: Option<String>,
        /// State label; modal formulas are evaluated everywhere without it.
        #[arg(long)]
        state: Option<String>,
        /// Variable binding `x=label` for first-order formulas.
        #[arg(long = "env", value_name = "VAR=LABEL")]
        env: Vec<String>,
    },
    /// Behavioural distance chain d_0..d_n.
    Distance {
        #[command(flatten)]
        systems: Systems,
        #[arg(short = 'n', long = "depth")]
        depth: usize,
        #[arg(long, value_enum, default_value = "w")]
        method: MethodArg,
        /// Restrict output to `a,b` label pairs.
        #[arg(long = "pair", value_name = "A,B")]
        pairs: Vec<String>,
        /// Compute with every method and fail on any mismatch.
        #[arg(long)]
        assert_coincide: bool,
    },
    /// Formula separating two states by nearly their distance.
    Witness {
        #[command(flatten)]
        systems: Systems,
        #[arg(long = "a")]
        a: String,
        #[arg(long = "b")]
        b: String,
        #[arg(short = 'n', long = "depth")]
        depth: usize,
        #[arg(long)]
        delta: String,
    },
    /// Bisimulation game certificates.
    Game {
        #[command(subcommand)]
        mode: GameMode,
    },
    /// Structural transformations.
    Transform {
        #[command(subcommand)]
        op: TransformOp,
    },
    /// Seeded randomized property suite.
    Suite {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 12)]
        max_states: usize,
        #[arg(long, default_value_t = 2)]
        max_atoms: usize,
        #[arg(short = 'n', long = "depth", default_value_t = 4)]
        depth: usize,
        /// Random system pairs for the coincidence property.
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, value_enum)]
        inject_fault: Option<Fault>,
    },
}

#[derive(Subcommand)]
pub enum GameMode {
    /// Build a duplicator certificate for (a, b, ε).
    Synth {
        #[command(flatten)]
        systems: Systems,
        #[arg(long = "a")]
        a: String,
        #[arg(long = "b")]
        b: String,
        #[arg(short = 'n', long = "depth")]
        depth: usize,
        #[arg(long)]
        epsilon: String,
        /// Write the certificate to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a certificate file.
    Verify {
        #[command(flatten)]
        systems: Systems,
        #[arg(long)]
        certificate: PathBuf,
    },
    /// Game value for every depth up to n.
    Value {
        #[command(flatten)]
        systems: Systems,
        #[arg(long = "a")]
        a: String,
        #[arg(long = "b")]
        b: String,
        #[arg(short = 'n', long = "depth")]
        depth: usize,
    },
}

#[derive(Subcommand)]
pub enum TransformOp {
    /// Radius-k neighbourhood of a state.
    Restrict {
        #[arg(short = 's', long = "system")]
        system: PathBuf,
        #[arg(long)]
        state: String,
        #[arg(short = 'k', long)]
        radius: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Depth-n tree of paths from a state.
    Unravel {
        #[arg(short = 's', long = "system")]
        system: PathBuf,
        #[arg(long)]
        state: String,
        #[arg(short = 'n', long = "depth")]
        depth: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Disjoint union of two systems.
    Union {
        #[arg(short = 's', long = "system")]
        system: PathBuf,
        #[arg(long = "system-b")]
        system_b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Standard translation of a modal formula.
    Translate {
        #[arg(long)]
        modal: String,
        #[arg(long, default_value = "x")]
        var: String,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let command: Vec<String> = std::env::args().skip(1).collect();
    let mut inputs = Inputs::default();
    let start = Instant::now();
    let ctx = commands::Context {
        max_depth: cli.max_depth,
    };
    let mut seed = None;
    let result = match cli.command {
        Command::Validate { system } => commands::validate(&mut inputs, &system),
        Command::Eval {
            system,
            modal,
            fo,
            state,
            env,
        } => commands::eval(&mut inputs, &system, modal, fo, state, &env),
        Command::Distance {
            systems,
            depth,
            method,
            pairs,
            assert_coincide,
        } => commands::distance(
            &ctx,
            &mut inputs,
            &systems,
            depth,
            method,
            &pairs,
            assert_coincide,
        ),
        Command::Witness {
            systems,
            a,
            b,
            depth,
            delta,
        } => commands::witness(&ctx, &mut inputs, &systems, &a, &b, depth, &delta),
        Command::Game { mode } => commands::game(&ctx, &mut inputs, mode),
        Command::Transform { op } => commands::transform(&ctx, &mut inputs, op),
        Command::Suite {
            seed: s,
            max_states,
            max_atoms,
            depth,
            trials,
            inject_fault,
        } => {
            seed = Some(s);
            commands::suite(&ctx, s, max_states, max_atoms, depth, trials, inject_fault)
        }
    };
    let report = RunReport {
        command,
        inputs,
        seed,
        result,
        timing_ms: cli.timing.then(|| start.elapsed().as_secs_f64() * 1e3),
    };
    let text = serde_json::to_string_pretty(&report.to_json()).expect("report serializes");
    println!("{text}");
    if let Some(path) = &cli.json {
        if let Err(e) = std::fs::write(path, format!("{text}\n")) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }
    if let Err(f) = &report.result {
        let msg = match f {
            report::Failure::Input(m)
            | report::Failure::Property(m, _)
            | report::Failure::Internal(m) => m,
        };
        eprintln!("error: {msg}");
    }
    ExitCode::from(report.exit_code())
}
