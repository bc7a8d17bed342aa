//! Nested relational calculus with dependency provenance.
//!
//! Queries are parsed ([`parse`]), desugared to a small core language
//! ([`desugar`]) and typed ([`typecheck`]). A typed query can then be run
//! three ways: plainly ([`eval`]), with dynamic provenance tracking over
//! color-annotated values ([`track`]), or through a static analysis that
//! computes annotated types ([`analysis`]). Slices ([`slice`]) read the
//! annotations back as input/output dependencies, and [`verify`] checks the
//! correctness properties of tracking and analysis empirically.
//!
//! ```
//! use nrcprov::{corpus, Query};
//!
//! let q = Query::compile("sum({ x.A | x <- R })", &corpus::fig_types())?;
//! let out = q.track(&corpus::fig_annotated_env())?;
//! assert_eq!(out.to_string(), "4^{a1,a2,a3}");
//! # Ok::<(), nrcprov::Error>(())
//! ```

use std::io;

use thiserror::Error;

pub mod analysis;
pub mod annot;
pub mod ast;
pub mod bundle;
pub mod corpus;
pub mod desugar;
pub mod eval;
pub mod gen;
pub mod json;
pub mod parse;
pub mod render;
pub mod slice;
pub mod track;
pub mod typecheck;
pub mod value;
pub mod verify;

use analysis::{ACtx, AType, AnalysisError};
use annot::{AEnv, AValue};
use ast::{Expr, SurfaceExpr, Type};
use eval::{Env, EvalError};
use json::DataError;
use parse::SyntaxError;
use slice::PathError;
use typecheck::{TypeCtx, TypeError};
use value::Value;
use verify::VerifyError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error: {0}")]
    Syntax(#[from] SyntaxError),
    #[error("type error: {0}")]
    Type(#[from] TypeError),
    #[error("analysis error: {0}")]
    Analysis(#[from] AnalysisError),
    #[error("evaluation error: {0}")]
    Eval(#[from] EvalError),
    #[error("data error: {0}")]
    Data(#[from] DataError),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("color `{0}` does not occur in the input")]
    UnknownColor(String),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Bundle(#[from] bundle::BundleError),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
}

impl Error {
    /// The process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Syntax(_) | Error::Type(_) | Error::Analysis(_) => 1,
            Error::Eval(_) | Error::Data(_) | Error::Io { .. } | Error::Bundle(_) => 2,
            Error::Verify(VerifyError::Precondition(_)) => 2,
            Error::Verify(_) | Error::VerificationFailed(_) => 3,
            Error::Path(_) | Error::UnknownColor(_) => 4,
        }
    }
}

/// A parsed, desugared and typed query.
#[derive(Debug, Clone)]
pub struct Query {
    pub source: String,
    pub surface: SurfaceExpr,
    /// The elaborated core expression.
    pub core: Expr,
    pub ty: Type,
    pub ctx: TypeCtx,
}

impl Query {
    pub fn compile(source: &str, ctx: &TypeCtx) -> Result<Query, Error> {
        let surface = parse::parse(source)?;
        let (core, ty) = typecheck::check(ctx, &desugar::desugar(&surface))?;
        Ok(Query {
            source: source.to_owned(),
            surface,
            core,
            ty,
            ctx: ctx.clone(),
        })
    }

    /// The core expression in concrete syntax.
    pub fn rendered(&self) -> String {
        render::render(&self.core)
    }

    pub fn eval(&self, env: &Env) -> Result<Value, Error> {
        check_env(&self.ctx, env)?;
        Ok(eval::eval(env, &self.core)?)
    }

    pub fn track(&self, env: &AEnv) -> Result<AValue, Error> {
        check_env(&self.ctx, &annot::erase_env(env))?;
        Ok(track::track(env, &self.core)?)
    }

    pub fn analyze(&self, actx: &ACtx) -> Result<AType, Error> {
        Ok(analysis::analyze(actx, &self.core)?)
    }
}

/// Checks that every variable of `ctx` is bound in `env` to a value of its
/// type.
pub fn check_env(ctx: &TypeCtx, env: &Env) -> Result<(), Error> {
    for (x, ty) in ctx.iter() {
        match env.get(x) {
            Some(v) if v.has_type(ty) => {}
            Some(_) => {
                return Err(DataError::Format {
                    at: x.to_owned(),
                    message: format!("value does not have type {ty}"),
                }
                .into())
            }
            None => {
                return Err(DataError::Format {
                    at: x.to_owned(),
                    message: "missing from the data".to_owned(),
                }
                .into())
            }
        }
    }
    Ok(())
}
