//! The default processing order: parse, type, expand sugar, strengthen,
//! infer missing contracts. Procedures are processed in definition order so
//! each one sees the final contracts of the procedures it calls.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::infer::{complete_contract, contracts_of, InferError};
use crate::strengthen::strengthen_procedure;
use crate::sugar::{desugar_procedure, SugarError};
use crate::syntax::{parse_program, ParseError, Procedure, Program};
use crate::types::{infer_types, TypeEnv, TypeError, TypedProgram};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("type error: {0}")]
    Type(#[from] TypeError),
    #[error("expansion error: {0}")]
    Sugar(#[from] SugarError),
    #[error("inference error: {0}")]
    Infer(#[from] InferError),
}

#[derive(Clone, Copy, Debug)]
pub struct PipelineOptions {
    pub strengthen: bool,
    pub infer: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            strengthen: true,
            infer: true,
        }
    }
}

impl PipelineOptions {
    pub fn expand_only() -> Self {
        PipelineOptions {
            strengthen: false,
            infer: false,
        }
    }
}

/// A sugar-free program with a type environment per procedure.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub program: Program,
    pub envs: BTreeMap<String, TypeEnv>,
}

pub fn check_source(src: &str) -> Result<TypedProgram, PipelineError> {
    let prog = parse_program(src)?;
    Ok(infer_types(&prog)?)
}

/// Re-types `proc` in the context of the already processed procedures and
/// merges in the fresh names `env` knows about.
fn retype(done: &[Procedure], proc: &Procedure, env: &TypeEnv) -> Result<TypeEnv, TypeError> {
    let mut prog = Program {
        procedures: done.to_vec(),
    };
    prog.procedures.push(proc.clone());
    let typed = infer_types(&prog)?;
    let mut out = env.clone();
    out.extend(typed.env(&proc.name));
    Ok(out)
}

pub fn prepare(typed: &TypedProgram, opts: PipelineOptions) -> Result<Prepared, PipelineError> {
    let mut done: Vec<Procedure> = Vec::new();
    let mut envs = BTreeMap::new();
    for proc in &typed.program.procedures {
        let contracts = contracts_of(&Program {
            procedures: done.clone(),
        });
        let mut env = typed.env(&proc.name).clone();
        let mut p = desugar_procedure(proc, &mut env, &contracts)?;
        env = retype(&done, &p, &env)?;
        if opts.strengthen {
            p = strengthen_procedure(&p, &mut env, &contracts)?;
        }
        if opts.infer {
            complete_contract(&mut p, &mut env, &contracts)?;
        }
        envs.insert(p.name.clone(), env);
        done.push(p);
    }
    Ok(Prepared {
        program: Program { procedures: done },
        envs,
    })
}

pub fn prepare_source(src: &str, opts: PipelineOptions) -> Result<Prepared, PipelineError> {
    prepare(&check_source(src)?, opts)
}
