use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rbac_cli::runner::{Runner, RunnerOptions};
use rbac_engine::rules::parse_program;
use rbac_engine::{Engine, MinimizeObjective};

#[derive(Parser)]
#[command(name = "rbac", version, about = "A transactional RBAC policy engine")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a policy script and print one outcome per command.
    Run(RunArgs),
    /// Read commands interactively from stdin.
    Repl(SessionArgs),
}

#[derive(Args)]
struct SessionArgs {
    /// Snapshot to load before the first command.
    #[arg(long)]
    snapshot: Option<PathBuf>,

    /// Datalog rule file backing the RULES command.
    #[arg(long)]
    rules: Option<PathBuf>,

    /// Fresh roles the planners may invent.
    #[arg(long, default_value_t = 2)]
    fresh_role_cap: usize,

    /// Longest plan the planners will certify.
    #[arg(long, default_value_t = 6)]
    plan_depth: usize,

    /// What MinimizeAssignmentsWithHierarchy minimizes first.
    #[arg(long, value_enum, default_value_t = Objective::Edges)]
    objective: Objective,

    /// Role cap for the hierarchical minimizer (default: one role per
    /// distinct user row, which is always feasible).
    #[arg(long)]
    role_cap: Option<usize>,

    /// Re-verify every answer against the brute-force reference
    /// implementations; a divergence counts as a command error.
    #[arg(long, hide = true)]
    oracle: bool,
}

#[derive(Args)]
struct RunArgs {
    /// The script file.
    script: PathBuf,

    #[command(flatten)]
    session: SessionArgs,

    /// Stop at the first error instead of continuing.
    #[arg(long)]
    halt_on_error: bool,

    /// Write the audit log here: version TAB command TAB ok|error:CODE.
    #[arg(long)]
    audit: Option<PathBuf>,

    /// Write the final snapshot here after the run.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Objective {
    Roles,
    Edges,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Cmd::Run(args) => run(args),
        Cmd::Repl(args) => repl(args),
    }
}

fn run(args: RunArgs) -> ExitCode {
    let mut runner = match build_runner(&args.session, args.halt_on_error) {
        Ok(r) => r,
        Err(code) => return code,
    };
    let script = match read(&args.script) {
        Ok(text) => text,
        Err(code) => return code,
    };
    let result = runner.run_script(&script);
    print!("{}", result.rendered);
    if let Some(path) = &args.audit {
        if let Err(code) = write(path, &runner.audit_text()) {
            return code;
        }
    }
    if let Some(path) = &args.dump {
        if let Err(code) = write(path, &runner.engine().snapshot_text()) {
            return code;
        }
    }
    ExitCode::from(result.exit_code)
}

fn repl(args: SessionArgs) -> ExitCode {
    let mut runner = match build_runner(&args, false) {
        Ok(r) => r,
        Err(code) => return code,
    };
    match rbac_cli::repl::repl(&mut runner) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rbac: {e}");
            ExitCode::from(4)
        }
    }
}

/// Input files that cannot be read or used leave nothing to run, so any
/// failure here is an I/O-level failure of the invocation (exit 4), reported
/// on stderr rather than as a script outcome.
fn build_runner(session: &SessionArgs, halt_on_error: bool) -> Result<Runner, ExitCode> {
    let mut engine = Engine::new();
    if let Some(path) = &session.snapshot {
        let text = read(path)?;
        if let Err(e) = engine.load_snapshot_text(&text) {
            eprintln!("rbac: {}: {} {}", path.display(), e.code(), e);
            return Err(ExitCode::from(4));
        }
    }
    let rules = match &session.rules {
        Some(path) => match parse_program(&read(path)?) {
            Ok(program) => Some(program),
            Err(e) => {
                eprintln!("rbac: {}: {} {}", path.display(), e.code(), e);
                return Err(ExitCode::from(4));
            }
        },
        None => None,
    };
    let opts = RunnerOptions {
        halt_on_error,
        fresh_role_cap: session.fresh_role_cap,
        plan_depth: session.plan_depth,
        objective: match session.objective {
            Objective::Roles => MinimizeObjective::Roles,
            Objective::Edges => MinimizeObjective::Edges,
        },
        role_cap: session.role_cap,
        oracle: session.oracle,
    };
    Ok(Runner::new(engine, rules, opts))
}

fn read(path: &Path) -> Result<String, ExitCode> {
    fs::read_to_string(path).map_err(|e| {
        eprintln!("rbac: {}: {e}", path.display());
        ExitCode::from(4)
    })
}

fn write(path: &Path, text: &str) -> Result<(), ExitCode> {
    fs::write(path, text).map_err(|e| {
        eprintln!("rbac: {}: {e}", path.display());
        ExitCode::from(4)
    })
}
