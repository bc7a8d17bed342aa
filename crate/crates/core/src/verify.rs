//! Executable checks of the correctness properties of tracking and analysis.
//!
//! Every randomized check is deterministic in `(seed, trials)`: trial `i`
//! draws from its own generator stream derived from the seed.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::analysis::{analyze, member, ACtx, AType, AnalysisError};
use crate::annot::{
    color_env, env_colors, equal_except_at, erase_env, AEnv, AValue, Annotation, Color, ColorSubst, Raw,
};
use crate::ast::{Expr, Type};
use crate::eval::{eval, Env, EvalError};
use crate::gen::{random_replacement, random_subst, trial_rng};
use crate::json::{aenv_to_json, avalue_to_json, value_to_json};
use crate::slice::{env_nodes, value_nodes, TypePath, TypeStep, ValuePath, RESULT};
use crate::track::{Mutation, Tracker};
use crate::typecheck::TypeCtx;
use crate::value::{Bag, Value};

/// Integers used for replacement scalars, besides the original value.
pub const PERTURBATION_DOMAIN: [i64; 4] = [-1, 0, 1, 2];

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("enumeration needs more than {cap} candidates")]
    BudgetExceeded { cap: usize },
}

/// The outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub check: String,
    pub trials: usize,
    pub failures: Vec<Json>,
    pub seed: u64,
}

impl Report {
    fn new(check: &str, trials: usize, seed: u64) -> Report {
        Report {
            check: check.to_owned(),
            trials,
            failures: Vec::new(),
            seed,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_json(&self) -> Json {
        serde_json::to_value(self).expect("reports serialize")
    }
}

/// Settings for randomized checks.
#[derive(Debug, Clone, Copy)]
pub struct TrialConfig {
    pub trials: usize,
    pub seed: u64,
    /// Largest bag generated for a replacement.
    pub size_bound: usize,
    /// The tracker variant under test; [`Mutation::None`] in normal use.
    pub mutation: Mutation,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            trials: 1000,
            seed: 0,
            size_bound: 3,
            mutation: Mutation::None,
        }
    }
}

/// Checks that erasing the tracked output gives the plain output.
pub fn check_erasure(e: &Expr, env: &AEnv) -> Result<Report, VerifyError> {
    check_erasure_with(e, env, Mutation::None)
}

pub fn check_erasure_with(e: &Expr, env: &AEnv, mutation: Mutation) -> Result<Report, VerifyError> {
    let mut report = Report::new("erasure", 1, 0);
    let tracked = Tracker::with_mutation(mutation).track(env, e)?;
    let plain = eval(&erase_env(env), e)?;
    if tracked.erase() != plain {
        report.failures.push(json!({
            "input": aenv_to_json(env),
            "tracked": avalue_to_json(&tracked),
            "plain": value_to_json(&plain),
        }));
    }
    Ok(report)
}

/// Checks that tracking commutes with random color substitutions.
pub fn check_color_invariance(e: &Expr, env: &AEnv, cfg: &TrialConfig) -> Result<Report, VerifyError> {
    let tracker = Tracker::with_mutation(cfg.mutation);
    let mut report = Report::new("color-invariance", cfg.trials, cfg.seed);
    let out = tracker.track(env, e)?;
    let colors = env_colors(env);
    for trial in 0..cfg.trials {
        let alpha = random_subst(&mut trial_rng(cfg.seed, trial), &colors);
        let lhs = alpha.apply(&out);
        let rhs = tracker.track(&alpha.apply_env(env), e)?;
        if lhs != rhs {
            report.failures.push(json!({
                "trial": trial,
                "subst": subst_to_json(&alpha),
                "substituted_output": avalue_to_json(&lhs),
                "output_of_substituted_input": avalue_to_json(&rhs),
            }));
        }
    }
    Ok(report)
}

fn subst_to_json(alpha: &ColorSubst) -> Json {
    Json::Object(
        alpha
            .iter()
            .map(|(c, to)| {
                (
                    c.to_string(),
                    json!(to.iter().map(Color::as_str).collect::<Vec<_>>()),
                )
            })
            .collect(),
    )
}

/// Checks dependency-correctness on the distinct coloring of `env`.
pub fn check_dependency_correctness(
    e: &Expr,
    ctx: &TypeCtx,
    env: &Env,
    cfg: &TrialConfig,
) -> Result<Report, VerifyError> {
    check_dependency_correctness_annotated(e, ctx, &color_env(env), cfg)
}

/// Checks dependency-correctness: each trial picks a color `c` of the
/// input, replaces nodes carrying `c` by random values annotated `{c}`, and
/// requires the two outputs to be equal except at `c`.
pub fn check_dependency_correctness_annotated(
    e: &Expr,
    ctx: &TypeCtx,
    env: &AEnv,
    cfg: &TrialConfig,
) -> Result<Report, VerifyError> {
    let tracker = Tracker::with_mutation(cfg.mutation);
    let mut report = Report::new("dependency-correctness", cfg.trials, cfg.seed);
    let colors: Vec<Color> = env_colors(env).into_iter().collect();
    if colors.is_empty() {
        return Ok(report);
    }
    let out = tracker.track(env, e)?;
    for trial in 0..cfg.trials {
        let mut rng = trial_rng(cfg.seed, trial);
        let c = &colors[trial % colors.len()];
        let perturbed = perturb(&mut rng, env, ctx, c, cfg.size_bound)?;
        let out2 = tracker.track(&perturbed, e)?;
        if !equal_except_at(&out, &out2, c) {
            report.failures.push(json!({
                "trial": trial,
                "color": c.as_str(),
                "perturbed_input": aenv_to_json(&perturbed),
                "output": avalue_to_json(&out),
                "perturbed_output": avalue_to_json(&out2),
            }));
        }
    }
    Ok(report)
}

/// An environment equal to `env` except at `c`: some of the outermost
/// nodes carrying `c` (at least one) are replaced by random values of the
/// same type, annotated `{c}` at the top and `∅` inside.
pub fn perturb<R: rand::Rng>(
    rng: &mut R,
    env: &AEnv,
    ctx: &TypeCtx,
    c: &Color,
    size_bound: usize,
) -> Result<AEnv, VerifyError> {
    let total: usize = env.values().map(|v| count_outermost(v, c)).sum();
    if total == 0 {
        return Ok(env.clone());
    }
    let mut walk = Perturb {
        rng,
        color: c,
        forced: None,
        seen: 0,
        size_bound,
    };
    walk.forced = Some(walk.rng.gen_range(0..total));
    env.iter()
        .map(|(x, v)| {
            let ty = ctx
                .get(x)
                .ok_or_else(|| VerifyError::Precondition(format!("no type for `{x}`")))?;
            Ok((x.clone(), walk.value(v, ty)?))
        })
        .collect()
}

fn count_outermost(v: &AValue, c: &Color) -> usize {
    if v.ann.contains(c) {
        return 1;
    }
    match &v.raw {
        Raw::Record(fs) => fs.iter().map(|(_, v)| count_outermost(v, c)).sum(),
        Raw::Bag(vs) => vs.iter().map(|v| count_outermost(v, c)).sum(),
        Raw::Int(_) | Raw::Bool(_) => 0,
    }
}

struct Perturb<'a, R> {
    rng: &'a mut R,
    color: &'a Color,
    forced: Option<usize>,
    seen: usize,
    size_bound: usize,
}

impl<R: rand::Rng> Perturb<'_, R> {
    fn value(&mut self, v: &AValue, ty: &Type) -> Result<AValue, VerifyError> {
        let mismatch = || VerifyError::Precondition(format!("{v} does not have type {ty}"));
        if v.ann.contains(self.color) {
            let index = self.seen;
            self.seen += 1;
            if self.forced == Some(index) || self.rng.gen_bool(0.5) {
                let top = Annotation::from([self.color.clone()]);
                return Ok(random_replacement(
                    self.rng,
                    ty,
                    Some(v),
                    top,
                    &PERTURBATION_DOMAIN,
                    self.size_bound,
                ));
            }
            return Ok(v.clone());
        }
        Ok(match (&v.raw, ty) {
            (Raw::Record(fs), Type::Record(_)) => {
                let mut out = Vec::with_capacity(fs.len());
                for (n, fv) in fs {
                    let ft = ty.field(n).ok_or_else(mismatch)?;
                    out.push((n.clone(), self.value(fv, ft)?));
                }
                AValue::record(out, v.ann.clone())
            }
            (Raw::Bag(vs), Type::Bag(et)) => {
                let elems = vs.iter().map(|ev| self.value(ev, et)).collect::<Result<_, _>>()?;
                AValue::bag(elems, v.ann.clone())
            }
            _ if v.has_shape(ty) => v.clone(),
            _ => return Err(mismatch()),
        })
    }
}

/// Checks that the tracked output inhabits the analyzed annotated type,
/// given that every input inhabits its context type.
pub fn check_static_soundness(e: &Expr, actx: &ACtx, env: &AEnv) -> Result<Report, VerifyError> {
    for (x, t) in actx.iter() {
        match env.get(x) {
            Some(v) if member(v, t) => {}
            Some(v) => {
                return Err(VerifyError::Precondition(format!(
                    "{x} = {v} is not a member of {t}"
                )));
            }
            None => return Err(VerifyError::Precondition(format!("no value for `{x}`"))),
        }
    }
    let mut report = Report::new("static-soundness", 1, 0);
    let ty = analyze(actx, e)?;
    let out = Tracker::default().track(env, e)?;
    if !member(&out, &ty) {
        report.failures.push(json!({
            "output": avalue_to_json(&out),
            "type": ty.to_string(),
        }));
    }
    Ok(report)
}

/// Annotates every node of every context type with its own type path, as
/// in `R:{(A: int^{R.elem.A})^{R.elem}}^{R}`.
pub fn auto_context(ctx: &TypeCtx) -> ACtx {
    fn go(ty: &Type, path: &mut TypePath) -> AType {
        let ann = Annotation::from([Color::new(path.to_string())]);
        match ty {
            Type::Int => AType::int(ann),
            Type::Bool => AType::boolean(ann),
            Type::Record(fs) => AType::record(
                fs.iter()
                    .map(|(n, t)| {
                        path.steps.push(TypeStep::Field(n.clone()));
                        let at = go(t, path);
                        path.steps.pop();
                        (n.clone(), at)
                    })
                    .collect(),
                ann,
            ),
            Type::Bag(e) => {
                path.steps.push(TypeStep::Elem);
                let et = go(e, path);
                path.steps.pop();
                AType::bag(et, ann)
            }
        }
    }
    ctx.iter()
        .map(|(x, t)| (x.to_owned(), go(t, &mut TypePath::root(x))))
        .collect()
}

/// Sends every color of `env` to the annotations that `actx` places on the
/// type nodes of the values carrying it. Inputs substituted this way
/// inhabit `actx`.
pub fn collapse_into(env: &AEnv, actx: &ACtx) -> ColorSubst {
    let mut images: BTreeMap<Color, Annotation> = BTreeMap::new();
    for (path, node) in env_nodes(env) {
        let tp = TypePath::of_value_path(&path);
        let target = actx
            .get(&tp.root)
            .and_then(|t| tp.resolve(t).ok())
            .map(|t| t.ann.clone())
            .unwrap_or_default();
        for c in &node.ann {
            images
                .entry(c.clone())
                .or_default()
                .extend(target.iter().cloned());
        }
    }
    let mut alpha = ColorSubst::identity();
    images.into_iter().for_each(|(c, to)| alpha.set(c, to));
    alpha
}

/// A color on an output node whose removal is never witnessed by a change
/// of the erased value at that node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Spurious {
    pub path: String,
    pub color: String,
}

/// The result of an exhaustive minimality search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimalityReport {
    pub check: String,
    pub candidates: usize,
    pub spurious: Vec<Spurious>,
}

/// Finds spurious colors by brute force.
///
/// `env` must be distinctly colored. For each input color `c`, the node
/// carrying it is replaced by every value of its type built from `domain`
/// (both booleans, bags of at most `size_bound` elements). A color on an
/// output node is spurious when no replacement changes the erased output
/// at that node; a node that disappears counts as changed. Fails when more
/// than `cap` candidate inputs would be evaluated.
pub fn minimality_report(
    e: &Expr,
    ctx: &TypeCtx,
    env: &AEnv,
    domain: &[i64],
    size_bound: usize,
    cap: usize,
) -> Result<MinimalityReport, VerifyError> {
    if !env_distinctly_colored(env) {
        return Err(VerifyError::Precondition(
            "the input must be distinctly colored".to_owned(),
        ));
    }
    let out = Tracker::default().track(env, e)?;
    let plain_env = erase_env(env);
    let mut spurious = BTreeSet::new();
    let mut candidates = 0;
    for (path, node) in env_nodes(env) {
        let c = node.ann.iter().next().expect("distinct coloring");
        let watched: Vec<(ValuePath, Value)> = value_nodes(&out, RESULT)
            .into_iter()
            .filter(|(_, n)| n.ann.contains(c))
            .map(|(p, n)| (p, n.erase()))
            .collect();
        if watched.is_empty() {
            continue;
        }
        let ty =
            type_at(ctx, &path).ok_or_else(|| VerifyError::Precondition(format!("no type for {path}")))?;
        let values = enumerate(ty, domain, size_bound, cap.saturating_sub(candidates))?;
        candidates += values.len();
        let mut changed = vec![false; watched.len()];
        for v in values {
            let env2 = replace_plain(&plain_env, &path, v)?;
            let out2 = AValue::unannotated(&eval(&env2, e)?);
            for (i, (p, before)) in watched.iter().enumerate() {
                if p.resolve(&out2).map(AValue::erase).as_ref() != Ok(before) {
                    changed[i] = true;
                }
            }
        }
        for ((p, _), changed) in watched.iter().zip(changed) {
            if !changed {
                spurious.insert(Spurious {
                    path: p.to_string(),
                    color: c.to_string(),
                });
            }
        }
    }
    Ok(MinimalityReport {
        check: "minimality".to_owned(),
        candidates,
        spurious: spurious.into_iter().collect(),
    })
}

fn env_distinctly_colored(env: &AEnv) -> bool {
    let mut seen = BTreeSet::new();
    env_nodes(env)
        .iter()
        .all(|(_, n)| n.ann.len() == 1 && seen.insert(n.ann.iter().next().cloned()))
}

/// The plain type of the node at `path` of an environment typed by `ctx`.
pub fn type_at<'a>(ctx: &'a TypeCtx, path: &ValuePath) -> Option<&'a Type> {
    let mut ty = ctx.get(&path.root)?;
    for step in &TypePath::of_value_path(path).steps {
        ty = match (step, ty) {
            (TypeStep::Field(n), _) => ty.field(n)?,
            (TypeStep::Elem, Type::Bag(e)) => e,
            _ => return None,
        };
    }
    Some(ty)
}

fn replace_plain(env: &Env, path: &ValuePath, new: Value) -> Result<Env, VerifyError> {
    fn go(v: &Value, steps: &[crate::slice::Step], new: Value) -> Option<Value> {
        use crate::slice::Step;
        let Some((first, rest)) = steps.split_first() else {
            return Some(new);
        };
        match (first, v) {
            (Step::Field(n), Value::Record(fs)) => {
                let mut fs = fs.clone();
                let slot = fs.iter_mut().find(|(m, _)| m == n)?;
                slot.1 = go(&slot.1, rest, new)?;
                Some(Value::Record(fs))
            }
            (Step::Index(i), Value::Bag(b)) => {
                let mut elems: Vec<Value> = b.iter().cloned().collect();
                let slot = elems.get_mut(*i)?;
                *slot = go(slot, rest, new)?;
                Some(Value::Bag(elems.into_iter().collect::<Bag>()))
            }
            _ => None,
        }
    }
    let mut env = env.clone();
    let unresolved = || VerifyError::Precondition(format!("{path} does not resolve"));
    let root = env.get_mut(&path.root).ok_or_else(unresolved)?;
    *root = go(root, &path.steps, new).ok_or_else(unresolved)?;
    Ok(env)
}

/// Every value of `ty` over the given domain, failing past `cap`.
pub fn enumerate(
    ty: &Type,
    domain: &[i64],
    size_bound: usize,
    cap: usize,
) -> Result<Vec<Value>, VerifyError> {
    let over = || VerifyError::BudgetExceeded { cap };
    let out = match ty {
        Type::Int => domain.iter().map(|&i| Value::Int(i)).collect(),
        Type::Bool => vec![Value::Bool(false), Value::Bool(true)],
        Type::Record(fs) => {
            let mut rows: Vec<Vec<(String, Value)>> = vec![Vec::new()];
            for (n, t) in fs {
                let options = enumerate(t, domain, size_bound, cap)?;
                if rows.len().saturating_mul(options.len()) > cap {
                    return Err(over());
                }
                rows = rows
                    .iter()
                    .flat_map(|row| {
                        options.iter().map(move |o| {
                            let mut row = row.clone();
                            row.push((n.clone(), o.clone()));
                            row
                        })
                    })
                    .collect();
            }
            rows.into_iter().map(Value::Record).collect()
        }
        Type::Bag(t) => {
            let elems = enumerate(t, domain, size_bound, cap)?;
            let mut out = Vec::new();
            multisets(&elems, 0, size_bound, &mut Vec::new(), &mut out, cap)?;
            out
        }
    };
    if out.len() > cap {
        return Err(over());
    }
    Ok(out)
}

// All multisets of at most `left` elements drawn from `elems[from..]`.
fn multisets(
    elems: &[Value],
    from: usize,
    left: usize,
    current: &mut Vec<Value>,
    out: &mut Vec<Value>,
    cap: usize,
) -> Result<(), VerifyError> {
    out.push(Value::bag(current.iter().cloned()));
    if out.len() > cap {
        return Err(VerifyError::BudgetExceeded { cap });
    }
    if left == 0 {
        return Ok(());
    }
    for i in from..elems.len() {
        current.push(elems[i].clone());
        multisets(elems, i, left - 1, current, out, cap)?;
        current.pop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annot::ann;
    use crate::parse::parse_type;

    fn x_minus_x() -> (Expr, TypeCtx, AEnv) {
        let e = Expr::diff(Expr::var("x"), Expr::var("x"));
        let ctx = TypeCtx::new().with("x", parse_type("{int}").unwrap());
        let env = AEnv::from([(
            "x".to_owned(),
            AValue::bag(vec![AValue::int(1, ann(["d"]))], ann(["c"])),
        )]);
        (e, ctx, env)
    }

    #[test]
    fn enumeration_counts() {
        let bags = enumerate(&parse_type("{int}").unwrap(), &[0, 1], 2, 100).unwrap();
        assert_eq!(bags.len(), 6);
        let recs = enumerate(&parse_type("(A: int, B: bool)").unwrap(), &[0, 1, 2], 2, 100).unwrap();
        assert_eq!(recs.len(), 6);
        assert!(matches!(
            enumerate(&parse_type("{{int}}").unwrap(), &[0, 1, 2], 3, 50),
            Err(VerifyError::BudgetExceeded { cap: 50 })
        ));
    }

    #[test]
    fn self_difference_is_not_minimal() {
        let (e, ctx, env) = x_minus_x();
        let report = minimality_report(&e, &ctx, &env, &[0, 1], 2, 10_000).unwrap();
        let colors: Vec<_> = report.spurious.iter().map(|s| s.color.as_str()).collect();
        assert_eq!(colors, ["c", "d"]);
        assert!(report.spurious.iter().all(|s| s.path == "result"));
    }

    #[test]
    fn addition_is_minimal() {
        let e = Expr::add(Expr::var("x"), Expr::var("y"));
        let ctx = TypeCtx::new().with("x", Type::Int).with("y", Type::Int);
        let env = color_env(&Env::from([
            ("x".into(), Value::Int(1)),
            ("y".into(), Value::Int(2)),
        ]));
        let report = minimality_report(&e, &ctx, &env, &[0, 1], 2, 100).unwrap();
        assert!(report.spurious.is_empty());
        assert_eq!(report.candidates, 4);
    }

    #[test]
    fn minimality_needs_distinct_colors() {
        let (e, ctx, mut env) = x_minus_x();
        env.get_mut("x").unwrap().ann = ann(["d"]);
        assert!(matches!(
            minimality_report(&e, &ctx, &env, &[0, 1], 2, 100),
            Err(VerifyError::Precondition(_))
        ));
    }

    #[test]
    fn mutations_are_detected() {
        let (e, ctx, env) = x_minus_x();
        let cfg = TrialConfig {
            trials: 200,
            ..TrialConfig::default()
        };
        assert!(check_dependency_correctness_annotated(&e, &ctx, &env, &cfg)
            .unwrap()
            .passed());

        let other = Expr::diff(Expr::var("x"), Expr::singleton(Expr::Int(1)));
        let broken = TrialConfig {
            mutation: Mutation::DiffDropsContents,
            ..cfg
        };
        let report = check_dependency_correctness_annotated(&other, &ctx, &env, &broken).unwrap();
        assert!(!report.passed());

        assert!(!check_erasure_with(&other, &env, Mutation::DiffKeepsEverything)
            .unwrap()
            .passed());
        assert!(check_erasure(&other, &env).unwrap().passed());
    }

    #[test]
    fn perturbation_is_equal_except_at_the_color() {
        let ctx = TypeCtx::new().with("R", parse_type("{(A: int, B: {int})}").unwrap());
        let env = color_env(&Env::from([(
            "R".to_owned(),
            Value::bag([Value::record(vec![
                ("A".into(), Value::Int(1)),
                ("B".into(), Value::bag([Value::Int(3)])),
            ])]),
        )]));
        for (trial, c) in env_colors(&env).iter().enumerate() {
            let p = perturb(&mut trial_rng(3, trial), &env, &ctx, c, 2).unwrap();
            assert!(crate::annot::env_equal_except_at(&env, &p, c), "{c}");
            assert!(p["R"].has_shape(ctx.get("R").unwrap()));
        }
    }

    #[test]
    fn collapsing_onto_type_paths() {
        let ctx = TypeCtx::new().with("R", parse_type("{(A: int)}").unwrap());
        let env = color_env(&Env::from([(
            "R".to_owned(),
            Value::bag([
                Value::record(vec![("A".into(), Value::Int(1))]),
                Value::record(vec![("A".into(), Value::Int(2))]),
            ]),
        )]));
        let actx = auto_context(&ctx);
        let alpha = collapse_into(&env, &actx);
        assert_eq!(alpha.image(&Color::new("R[1].A")), ann(["R.elem.A"]));
        assert_eq!(alpha.image(&Color::new("R")), ann(["R"]));
        assert_eq!(
            actx.get("R").unwrap().to_string(),
            "{(A: int^{R.elem.A})^{R.elem}}^{R}"
        );
        let e = Expr::sum(Expr::comp(Expr::proj(Expr::var("x"), "A"), "x", Expr::var("R")));
        assert!(check_static_soundness(&e, &actx, &alpha.apply_env(&env))
            .unwrap()
            .passed());
        assert!(matches!(
            check_static_soundness(&e, &actx, &env),
            Err(VerifyError::Precondition(_))
        ));
    }

    #[test]
    fn color_invariance_of_equality() {
        let (_, _, env) = x_minus_x();
        let e = Expr::eq(Expr::var("x"), Expr::var("x"));
        let cfg = TrialConfig {
            trials: 100,
            ..TrialConfig::default()
        };
        assert!(check_color_invariance(&e, &env, &cfg).unwrap().passed());
    }
}
