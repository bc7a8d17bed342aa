//! Command-line front end: type checking, plain and tracked evaluation,
//! static analysis, slicing, verification and bundle export.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value as Json};

use nrcprov::analysis::ACtx;
use nrcprov::annot::{color_env, env_colors, erase_env, AEnv, Color};
use nrcprov::bundle::SliceBundle;
use nrcprov::eval::Env;
use nrcprov::json::{
    actx_from_json, aenv_from_json, aliases_from_json, atype_to_json, avalue_to_json, env_from_json,
    infer_env_types, value_to_json,
};
use nrcprov::parse::split_program;
use nrcprov::slice::{backward_slice, forward_slice, static_slice, TypePath, ValuePath};
use nrcprov::track::Mutation;
use nrcprov::typecheck::TypeCtx;
use nrcprov::verify::{
    auto_context, check_color_invariance, check_dependency_correctness_annotated, check_erasure,
    check_static_soundness, collapse_into, minimality_report, TrialConfig,
};
use nrcprov::{Error, Query};

#[derive(Parser)]
#[command(
    name = "nrcprov",
    version,
    about = "Nested relational queries with dependency provenance"
)]
struct Cli {
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Type-check queries and print their result types.
    Check(Common),
    /// Evaluate queries on plain data.
    Run(Common),
    /// Evaluate queries with provenance tracking.
    Track(Common),
    /// Compute annotated result types.
    Analyze(Common),
    /// Compute data slices.
    #[command(subcommand)]
    Slice(SliceCommand),
    /// Check erasure, color-invariance, dependency-correctness and static
    /// soundness, optionally with a minimality search.
    Verify(VerifyArgs),
    /// Write a slice bundle for a viewer.
    Bundle(BundleArgs),
}

#[derive(Subcommand)]
enum SliceCommand {
    /// Input nodes that the output node at --path depends on.
    Backward {
        #[command(flatten)]
        common: Common,
        /// Output node, e.g. `result[0].A`.
        #[arg(long)]
        path: String,
        /// Use every annotation below the node, not just its own.
        #[arg(long)]
        deep: bool,
    },
    /// Output nodes that depend on the input color --color.
    Forward {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        color: String,
    },
    /// Context type nodes that the result type node at --path depends on.
    Static {
        #[command(flatten)]
        common: Common,
        /// Result type node, e.g. `result.elem.A`.
        #[arg(long)]
        path: String,
        #[arg(long)]
        deep: bool,
    },
}

#[derive(Args)]
struct Common {
    /// Query file; `;` separates several queries.
    #[arg(required_unless_present_any = ["expr", "bundle"])]
    query: Option<PathBuf>,
    /// Query text given inline.
    #[arg(short = 'e', long, conflicts_with = "query")]
    expr: Option<String>,
    /// Plain input data; colored by node path for tracking.
    #[arg(long, conflicts_with = "adata")]
    data: Option<PathBuf>,
    /// Annotated input data.
    #[arg(long)]
    adata: Option<PathBuf>,
    /// Map from input paths to replacement colors, applied after the
    /// path coloring of --data.
    #[arg(long, requires = "data")]
    aliases: Option<PathBuf>,
    /// Annotated context: variable to annotated type.
    #[arg(long)]
    ctx: Option<PathBuf>,
    /// Read the query, annotated input and context from a slice bundle.
    #[arg(long, conflicts_with_all = ["query", "expr", "data", "adata", "ctx"])]
    bundle: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest bag built when perturbing or enumerating inputs.
    #[arg(long, default_value_t = 2)]
    size_bound: usize,
    /// Also search for spurious colors by exhaustive enumeration.
    #[arg(long)]
    minimality: bool,
    /// Integers used by the minimality search.
    #[arg(long, value_delimiter = ',', default_value = "0,1")]
    domain: Vec<i64>,
    /// Most candidate inputs the minimality search may evaluate.
    #[arg(long, default_value_t = 100_000)]
    cap: usize,
}

#[derive(Args)]
struct BundleArgs {
    #[command(flatten)]
    common: Common,
    /// Write the bundle here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_json(path: &Path) -> Result<Json, Error> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Data(e.into()))
}

/// Inputs resolved from the common options.
struct Inputs {
    sources: Vec<String>,
    types: TypeCtx,
    actx: Option<ACtx>,
    /// Empty when no data is given; queries over inputs then fail to type.
    plain: Env,
    annotated: AEnv,
}

impl Common {
    fn load(&self) -> Result<Inputs, Error> {
        if let Some(p) = &self.bundle {
            let bundle = SliceBundle::from_json(&read(p)?)?;
            bundle.validate()?;
            let annotated = bundle.input_env()?;
            return Ok(Inputs {
                sources: vec![bundle.query.clone()],
                types: bundle.type_ctx()?,
                actx: bundle.context()?,
                plain: erase_env(&annotated),
                annotated,
            });
        }
        let text = match (&self.expr, &self.query) {
            (Some(e), _) => e.clone(),
            (None, Some(p)) => read(p)?,
            (None, None) => String::new(),
        };
        let sources = split_program(&text)?;
        if sources.is_empty() {
            return Err(Error::Data(nrcprov::json::DataError::Format {
                at: "query".to_owned(),
                message: "no query found".to_owned(),
            }));
        }
        let actx = self.ctx.as_deref().map(read_json).transpose()?;
        let actx = actx.as_ref().map(actx_from_json).transpose()?;
        let annotated = match (&self.data, &self.adata) {
            (Some(p), _) => {
                let env = env_from_json(&read_json(p)?)?;
                let colored = color_env(&env);
                let colored = match &self.aliases {
                    Some(a) => aliases_from_json(&read_json(a)?)?.apply_env(&colored),
                    None => colored,
                };
                Some(colored)
            }
            (None, Some(p)) => Some(aenv_from_json(&read_json(p)?)?),
            (None, None) => None,
        };
        let annotated = annotated.unwrap_or_default();
        let plain = erase_env(&annotated);
        let types = match &actx {
            Some(actx) => actx.erase(),
            None => infer_env_types(&plain)?,
        };
        Ok(Inputs {
            sources,
            types,
            actx,
            plain,
            annotated,
        })
    }
}

impl Inputs {
    fn queries(&self) -> Result<Vec<Query>, Error> {
        self.sources
            .iter()
            .map(|s| Query::compile(s, &self.types))
            .collect()
    }

    fn single_query(&self) -> Result<Query, Error> {
        match self.queries()?.as_slice() {
            [q] => Ok(q.clone()),
            qs => Err(Error::Data(nrcprov::json::DataError::Format {
                at: "query".to_owned(),
                message: format!("expected one query, found {}", qs.len()),
            })),
        }
    }

    fn plain(&self) -> Result<&Env, Error> {
        Ok(&self.plain)
    }

    fn annotated(&self) -> Result<&AEnv, Error> {
        Ok(&self.annotated)
    }

    /// The given annotated context, or one colored by type paths.
    fn context(&self) -> ACtx {
        self.actx.clone().unwrap_or_else(|| auto_context(&self.types))
    }
}

/// Writes a line to stdout. A reader that has gone away, as with `| head`,
/// is not an error.
fn say(line: &str) {
    let _ = writeln!(io::stdout().lock(), "{line}");
}

/// Prints one JSON value or its text form.
struct Out {
    json: bool,
}

impl Out {
    fn emit(&self, j: Json, text: String) {
        if self.json {
            say(&serde_json::to_string_pretty(&j).expect("JSON serializes"));
        } else {
            say(&text);
        }
    }

    /// One entry per query; a lone query is printed unwrapped.
    fn emit_all(&self, items: Vec<(Json, String)>) {
        if items.len() == 1 {
            let (j, t) = items.into_iter().next().expect("one item");
            return self.emit(j, t);
        }
        let (js, ts): (Vec<_>, Vec<_>) = items.into_iter().unzip();
        let text = ts
            .iter()
            .enumerate()
            .map(|(i, t)| format!("[{}] {t}", i + 1))
            .collect::<Vec<_>>()
            .join("\n");
        self.emit(Json::Array(js), text);
    }
}

fn path_list(paths: impl IntoIterator<Item = String>) -> (Json, String) {
    let v: Vec<String> = paths.into_iter().collect();
    let text = v.join("\n");
    (json!(v), text)
}

fn run(cli: &Cli) -> Result<(), Error> {
    let out = Out { json: cli.json };
    match &cli.command {
        Command::Check(c) => {
            let inputs = c.load()?;
            let items = inputs
                .queries()?
                .iter()
                .map(|q| {
                    (
                        json!({ "type": q.ty.to_string(), "core": q.rendered() }),
                        q.ty.to_string(),
                    )
                })
                .collect();
            out.emit_all(items);
        }
        Command::Run(c) => {
            let inputs = c.load()?;
            let env = inputs.plain()?;
            let mut items = Vec::new();
            for q in inputs.queries()? {
                let v = q.eval(env)?;
                items.push((value_to_json(&v), v.to_string()));
            }
            out.emit_all(items);
        }
        Command::Track(c) => {
            let inputs = c.load()?;
            let env = inputs.annotated()?;
            let mut items = Vec::new();
            for q in inputs.queries()? {
                let v = q.track(env)?;
                items.push((avalue_to_json(&v), v.to_string()));
            }
            out.emit_all(items);
        }
        Command::Analyze(c) => {
            let inputs = c.load()?;
            let actx = inputs.context();
            let mut items = Vec::new();
            for q in inputs.queries()? {
                let t = q.analyze(&actx)?;
                items.push((
                    json!({ "atype": t.to_string(), "tree": atype_to_json(&t) }),
                    t.to_string(),
                ));
            }
            out.emit_all(items);
        }
        Command::Slice(SliceCommand::Backward { common, path, deep }) => {
            let inputs = common.load()?;
            let q = inputs.single_query()?;
            let env = inputs.annotated()?;
            let at: ValuePath = path.parse()?;
            let output = q.track(env)?;
            let paths = backward_slice(env, &output, &at, *deep)?;
            let (list, text) = path_list(paths.iter().map(ToString::to_string));
            out.emit(json!({ "at": path, "deep": deep, "paths": list }), text);
        }
        Command::Slice(SliceCommand::Forward { common, color }) => {
            let inputs = common.load()?;
            let q = inputs.single_query()?;
            let env = inputs.annotated()?;
            if color.is_empty() || !env_colors(env).contains(&Color::new(color.as_str())) {
                return Err(Error::UnknownColor(color.clone()));
            }
            let output = q.track(env)?;
            let paths = forward_slice(&output, &Color::new(color.as_str()));
            let (list, text) = path_list(paths.iter().map(ToString::to_string));
            out.emit(json!({ "color": color, "paths": list }), text);
        }
        Command::Slice(SliceCommand::Static { common, path, deep }) => {
            let inputs = common.load()?;
            let q = inputs.single_query()?;
            let actx = inputs.context();
            let at: TypePath = path.parse()?;
            let t = q.analyze(&actx)?;
            let paths = static_slice(&actx, &t, &at, *deep)?;
            let (list, text) = path_list(paths.iter().map(ToString::to_string));
            out.emit(json!({ "at": path, "deep": deep, "paths": list }), text);
        }
        Command::Verify(v) => verify(&out, v)?,
        Command::Bundle(b) => {
            let inputs = b.common.load()?;
            let q = inputs.single_query()?;
            let bundle = SliceBundle::build(&q, inputs.annotated()?, Some(&inputs.context()))?;
            let text = serde_json::to_string_pretty(&bundle).expect("bundles serialize");
            match &b.output {
                Some(p) => fs::write(p, text + "\n").map_err(|source| Error::Io {
                    path: p.display().to_string(),
                    source,
                })?,
                None => say(&text),
            }
        }
    }
    Ok(())
}

fn verify(out: &Out, v: &VerifyArgs) -> Result<(), Error> {
    let inputs = v.common.load()?;
    let env = inputs.annotated()?;
    let actx = inputs.context();
    let collapsed = collapse_into(env, &actx).apply_env(env);
    let cfg = TrialConfig {
        trials: v.trials,
        seed: v.seed,
        size_bound: v.size_bound,
        mutation: Mutation::None,
    };
    let mut results = Vec::new();
    let mut lines = Vec::new();
    let mut failed = 0;
    for (i, q) in inputs.queries()?.iter().enumerate() {
        let reports = [
            check_erasure(&q.core, env)?,
            check_color_invariance(&q.core, env, &cfg)?,
            check_dependency_correctness_annotated(&q.core, &q.ctx, env, &cfg)?,
            check_static_soundness(&q.core, &actx, &collapsed)?,
        ];
        for r in &reports {
            let status = if r.passed() { "ok" } else { "FAILED" };
            lines.push(format!(
                "query {}: {} {status} ({} trials, {} failures)",
                i + 1,
                r.check,
                r.trials,
                r.failures.len()
            ));
            failed += usize::from(!r.passed());
        }
        let mut entry = json!({
            "query": i + 1,
            "source": q.source,
            "reports": reports.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
        });
        if v.minimality {
            let m = minimality_report(&q.core, &q.ctx, env, &v.domain, v.size_bound, v.cap)?;
            for s in &m.spurious {
                lines.push(format!("query {}: spurious {} at {}", i + 1, s.color, s.path));
            }
            entry["minimality"] = serde_json::to_value(&m).expect("reports serialize");
        }
        results.push(entry);
    }
    out.emit(
        json!({ "seed": v.seed, "trials": v.trials, "passed": failed == 0, "queries": results }),
        lines.join("\n"),
    );
    if failed > 0 {
        return Err(Error::VerificationFailed(format!("{failed} check(s) failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            // A failed verification has already printed its report.
            if cli.json && !matches!(e, Error::VerificationFailed(_)) {
                say(&json!({ "error": e.to_string(), "code": e.exit_code() }).to_string());
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
