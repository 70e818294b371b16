use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::debug;

use pest_core::infer::{infer_contract, InferError};
use pest_core::interp::{args_from_json, run_procedure, state_to_json, Bounds, Mode, RunOptions};
use pest_core::pipeline::{check_source, prepare, PipelineError, PipelineOptions, Prepared};
use pest_core::report::{report_json, report_text};
use pest_core::solver::{smt::emit_smtlib, Backend, SolverConfig, SolverError};
use pest_core::syntax::{pretty_print, print_procedure, Clause, Origin};
use pest_core::verify::{program_vcs, verify_program, VerifyError, VerifyOptions};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(name = "pest", version, about = "Verifier and interpreter for Pest programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and type-check.
    Check { file: PathBuf },
    /// Print the program with `for` and `map` expanded into loops.
    Expand { file: PathBuf },
    /// Print the expanded program with strengthened annotations.
    Strengthen { file: PathBuf },
    /// Infer contracts and print them.
    Infer {
        file: PathBuf,
        /// Only this procedure.
        #[arg(long = "proc")]
        procedure: Option<String>,
    },
    /// Run the full pipeline and discharge every verification condition.
    Verify {
        file: PathBuf,
        #[arg(long, default_value = "oracle")]
        backend: Backend,
        /// Integer bound of the enumerating oracle.
        #[arg(long, default_value_t = 3)]
        bound: u32,
        /// Array length bound of the enumerating oracle.
        #[arg(long, default_value_t = 3)]
        len: u32,
        /// Write one SMT-LIB script per VC into this directory.
        #[arg(long)]
        emit_vcs: Option<PathBuf>,
        /// Stop checking a procedure after its first invalid VC.
        #[arg(long)]
        fail_fast: bool,
        /// Write the JSON report here (`-` for stdout).
        #[arg(long)]
        json: Option<PathBuf>,
        /// Also check invariants that hold by construction.
        #[arg(long)]
        no_cbc_skip: bool,
    },
    /// Execute a procedure.
    Run {
        file: PathBuf,
        #[arg(long = "proc")]
        procedure: String,
        /// Initial parameter values as a JSON object.
        #[arg(long)]
        args: String,
        /// Skip runtime annotation checks.
        #[arg(long)]
        erased: bool,
    },
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Infer(InferError::Solver(s)) => s.into(),
            e => Failure::usage(e.to_string()),
        }
    }
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        Failure {
            code: EXIT_SOLVER,
            message: e.to_string(),
        }
    }
}

impl From<VerifyError> for Failure {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Solver(s) => s.into(),
            VerifyError::Infer(InferError::Solver(s)) => s.into(),
            VerifyError::Infer(e) => Failure::usage(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load(path: &Path, opts: PipelineOptions) -> Result<Prepared, Failure> {
    let src = read(path)?;
    let typed = check_source(&src).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    prepare(&typed, opts).map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Check { file } => {
            let src = read(&file)?;
            let typed = check_source(&src).map_err(|e| Failure::usage(format!("{}: {e}", file.display())))?;
            println!("{}: {} procedures ok", file.display(), typed.program.procedures.len());
            Ok(0)
        }
        Command::Expand { file } => {
            let p = load(&file, PipelineOptions::expand_only())?;
            print!("{}", pretty_print(&p.program));
            Ok(0)
        }
        Command::Strengthen { file } => {
            let p = load(
                &file,
                PipelineOptions {
                    strengthen: true,
                    infer: false,
                },
            )?;
            print!("{}", pretty_print(&p.program));
            Ok(0)
        }
        Command::Infer { file, procedure } => {
            let p = load(&file, PipelineOptions::expand_only())?;
            if let Some(name) = &procedure {
                if p.program.procedure(name).is_none() {
                    return Err(Failure::usage(format!("no procedure `{name}`")));
                }
            }
            let cfg = SolverConfig::default();
            let mut done = Vec::new();
            for proc in &p.program.procedures {
                let contracts = pest_core::infer::contracts_of(&pest_core::syntax::Program {
                    procedures: done.clone(),
                });
                let mut env = p.envs[&proc.name].clone();
                let mut bare = proc.clone();
                bare.pre.clear();
                bare.post.clear();
                let (pre, post) = infer_contract(&bare, &mut env, &contracts, &cfg)
                    .map_err(|e| Failure::from(PipelineError::Infer(e)))?;
                bare.pre = vec![Clause::new(pre, Origin::Inferred)];
                bare.post = vec![Clause::new(post, Origin::Inferred)];
                if procedure.as_deref().is_none_or(|n| n == proc.name) {
                    let text = print_procedure(&bare);
                    for line in text.lines().take_while(|l| *l != "{") {
                        println!("{line}");
                    }
                }
                // Callers see the declared contract if there is one.
                done.push(if proc.pre.is_empty() && proc.post.is_empty() {
                    bare
                } else {
                    proc.clone()
                });
            }
            Ok(0)
        }
        Command::Verify {
            file,
            backend,
            bound,
            len,
            emit_vcs,
            fail_fast,
            json,
            no_cbc_skip,
        } => {
            let p = load(&file, PipelineOptions::default())?;
            let mut cfg = SolverConfig::default().with_backend(backend);
            cfg.bounds = Bounds { int: bound, len };
            cfg.fail_fast = fail_fast;
            if let Some(dir) = &emit_vcs {
                fs::create_dir_all(dir).map_err(|e| Failure::usage(format!("{}: {e}", dir.display())))?;
                let vcs = program_vcs(&p.program, &p.envs)
                    .map_err(|e| Failure::from(VerifyError::Infer(e)))?;
                for vc in &vcs {
                    let path = dir.join(format!("{}.smt2", vc.id));
                    fs::write(&path, emit_smtlib(&vc.hypothesis, &vc.goal, &vc.env))
                        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
                }
                debug!("wrote {} scripts to {}", vcs.len(), dir.display());
            }
            let opts = VerifyOptions {
                skip_trusted: !no_cbc_skip,
            };
            let report = verify_program(&p.program, &p.envs, &cfg, opts)?;
            match &json {
                Some(path) if path.as_os_str() == "-" => {
                    println!("{}", pretty_json(&report_json(&report, &file.display().to_string())));
                }
                Some(path) => {
                    let text = pretty_json(&report_json(&report, &file.display().to_string()));
                    fs::write(path, text + "\n").map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
                    print!("{}", report_text(&report));
                }
                None => print!("{}", report_text(&report)),
            }
            Ok(if report.passed() { 0 } else { EXIT_FAIL })
        }
        Command::Run {
            file,
            procedure,
            args,
            erased,
        } => {
            let src = read(&file)?;
            let typed = check_source(&src).map_err(|e| Failure::usage(format!("{}: {e}", file.display())))?;
            let proc = typed
                .program
                .procedure(&procedure)
                .ok_or_else(|| Failure::usage(format!("no procedure `{procedure}`")))?;
            let json: serde_json::Value =
                serde_json::from_str(&args).map_err(|e| Failure::usage(format!("--args: {e}")))?;
            let values = args_from_json(proc, typed.env(&procedure), &json).map_err(Failure::usage)?;
            let opts = RunOptions {
                mode: if erased { Mode::Erased } else { Mode::Checked },
                allow_sugar: true,
                ..RunOptions::default()
            };
            match run_procedure(&typed.program, &procedure, &values, opts) {
                Ok(st) => {
                    println!("{}", state_to_json(&st));
                    Ok(0)
                }
                Err(stuck) => {
                    eprintln!("{}: {stuck}", file.display());
                    eprintln!("state: {}", state_to_json(&stuck.state));
                    Ok(EXIT_FAIL)
                }
            }
        }
    }
}

fn pretty_json(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
