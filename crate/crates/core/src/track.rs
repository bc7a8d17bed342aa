//! Dynamic provenance tracking.
//!
//! [`track`] evaluates a query over annotated inputs. Constants and
//! constructors get an empty top-level annotation; every other form goes
//! through one of the lifted operations below, which decide how annotations
//! flow from arguments to results.

use crate::annot::{AEnv, AValue, Annotation, Raw};
use crate::ast::Expr;
use crate::eval::EvalError;

fn shape(what: &str) -> EvalError {
    EvalError::Shape(what.to_owned())
}

fn union_ann(a: &Annotation, b: &Annotation) -> Annotation {
    a.union(b).cloned().collect()
}

/// Lifted scalar operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarOp {
    Add,
    And,
    Not,
    Sum,
}

/// Applies a lifted scalar operation.
///
/// `add` and `and` union their argument annotations, `not` keeps its
/// argument's annotation, and `sum` adds the elements up with lifted `+`
/// before adding the bag's own annotation.
pub fn lift_scalar(op: ScalarOp, args: &[AValue]) -> Result<AValue, EvalError> {
    match (op, args) {
        (ScalarOp::Add, [a, b]) => match (&a.raw, &b.raw) {
            (Raw::Int(x), Raw::Int(y)) => Ok(AValue::int(x.wrapping_add(*y), union_ann(&a.ann, &b.ann))),
            _ => Err(shape("`+` expects integers")),
        },
        (ScalarOp::And, [a, b]) => match (&a.raw, &b.raw) {
            (Raw::Bool(x), Raw::Bool(y)) => Ok(AValue::boolean(*x && *y, union_ann(&a.ann, &b.ann))),
            _ => Err(shape("`and` expects booleans")),
        },
        (ScalarOp::Not, [a]) => match a.raw {
            Raw::Bool(x) => Ok(AValue::boolean(!x, a.ann.clone())),
            _ => Err(shape("`not` expects a boolean")),
        },
        (ScalarOp::Sum, [bag]) => {
            let elems = bag.elements().ok_or_else(|| shape("`sum` expects a bag"))?;
            let mut acc = AValue::int(0, Annotation::new());
            for v in elems {
                acc = lift_scalar(ScalarOp::Add, &[acc, v.clone()])?;
            }
            Ok(acc.with_added(&bag.ann))
        }
        _ => Err(shape("wrong number of arguments")),
    }
}

/// `π̂`: the field value with the record's annotation added.
pub fn lift_proj(record: &AValue, field: &str) -> Result<AValue, EvalError> {
    record
        .field(field)
        .cloned()
        .map(|v| v.with_added(&record.ann))
        .ok_or_else(|| shape(&format!("missing field `{field}`")))
}

/// `cond`: the chosen branch with the condition's annotation added.
pub fn lift_cond(cond: &AValue, then: AValue, other: AValue) -> Result<AValue, EvalError> {
    match cond.raw {
        Raw::Bool(true) => Ok(then.with_added(&cond.ann)),
        Raw::Bool(false) => Ok(other.with_added(&cond.ann)),
        _ => Err(shape("condition must be a boolean")),
    }
}

/// `∪̂`: merges element multisets and unions top annotations.
pub fn lift_union(a: &AValue, b: &AValue) -> Result<AValue, EvalError> {
    match (&a.raw, &b.raw) {
        (Raw::Bag(xs), Raw::Bag(ys)) => {
            let elems = xs.iter().chain(ys).cloned().collect();
            Ok(AValue::bag(elems, union_ann(&a.ann, &b.ann)))
        }
        _ => Err(shape("`union` expects bags")),
    }
}

/// `⋃̂`: lifted union of all inner bags, plus the outer annotation.
pub fn lift_flatten(outer: &AValue) -> Result<AValue, EvalError> {
    let inners = outer.elements().ok_or_else(|| shape("`flatten` expects a bag"))?;
    let mut acc = AValue::bag(Vec::new(), Annotation::new());
    for inner in inners {
        acc = lift_union(&acc, inner)?;
    }
    Ok(acc.with_added(&outer.ann))
}

/// Lifted comprehension: maps `body` over the elements, keeping the
/// source's top annotation.
pub fn lift_comprehend<F>(source: &AValue, mut body: F) -> Result<AValue, EvalError>
where
    F: FnMut(&AValue) -> Result<AValue, EvalError>,
{
    let elems = source
        .elements()
        .ok_or_else(|| shape("comprehension source must be a bag"))?;
    let out = elems.iter().map(&mut body).collect::<Result<Vec<_>, _>>()?;
    Ok(AValue::bag(out, source.ann.clone()))
}

/// Variations of the tracking rules used to check that the verification
/// harness notices broken annotation propagation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Mutation {
    #[default]
    None,
    /// `−̂` omits `‖w1‖ ∪ ‖w2‖` from the result annotation.
    DiffDropsContents,
    /// `≈̂` returns an unannotated boolean.
    EqDropsColors,
    /// `−̂` keeps every element of its first argument.
    DiffKeepsEverything,
}

/// `−̂`: keeps the elements of `a` whose erasure does not occur in `b`.
/// The result is annotated with every color of both arguments.
pub fn lift_diff(a: &AValue, b: &AValue) -> Result<AValue, EvalError> {
    diff_with(a, b, Mutation::None)
}

fn diff_with(a: &AValue, b: &AValue, mutation: Mutation) -> Result<AValue, EvalError> {
    let (Raw::Bag(xs), Raw::Bag(ys)) = (&a.raw, &b.raw) else {
        return Err(shape("`diff` expects bags"));
    };
    let removed: std::collections::BTreeSet<_> = ys.iter().map(AValue::erase).collect();
    let kept = xs
        .iter()
        .filter(|v| mutation == Mutation::DiffKeepsEverything || !removed.contains(&v.erase()))
        .cloned()
        .collect();
    let mut top = union_ann(&a.ann, &b.ann);
    if mutation != Mutation::DiffDropsContents {
        for v in xs.iter().chain(ys) {
            top.extend(v.colors());
        }
    }
    Ok(AValue::bag(kept, top))
}

/// `≈̂`: compares erasures; the result carries every color of both sides.
pub fn lift_eq(a: &AValue, b: &AValue) -> AValue {
    eq_with(a, b, Mutation::None)
}

fn eq_with(a: &AValue, b: &AValue, mutation: Mutation) -> AValue {
    let ann = match mutation {
        Mutation::EqDropsColors => Annotation::new(),
        _ => union_ann(&a.colors(), &b.colors()),
    };
    AValue::boolean(a.erase() == b.erase(), ann)
}

/// Evaluates `e` with provenance tracking.
pub fn track(env: &AEnv, e: &Expr) -> Result<AValue, EvalError> {
    Tracker::default().track(env, e)
}

/// The tracking interpreter, optionally with a [`Mutation`] applied.
#[derive(Debug, Clone, Copy, Default)]
pub struct Tracker {
    mutation: Mutation,
}

impl Tracker {
    pub fn with_mutation(mutation: Mutation) -> Self {
        Tracker { mutation }
    }

    pub fn track(&self, env: &AEnv, e: &Expr) -> Result<AValue, EvalError> {
        let mut scope: Vec<(String, AValue)> = env.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        self.go(&mut scope, e)
    }

    fn go(&self, scope: &mut Vec<(String, AValue)>, e: &Expr) -> Result<AValue, EvalError> {
        let none = Annotation::new;
        Ok(match e {
            Expr::Var(x) => scope
                .iter()
                .rev()
                .find(|(n, _)| n == x)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| EvalError::Unbound(x.clone()))?,
            Expr::Let(x, e1, e2) => {
                let v = self.go(scope, e1)?;
                scope.push((x.clone(), v));
                let r = self.go(scope, e2);
                scope.pop();
                r?
            }
            Expr::Int(i) => AValue::int(*i, none()),
            Expr::Bool(b) => AValue::boolean(*b, none()),
            Expr::Add(a, b) => {
                let args = [self.go(scope, a)?, self.go(scope, b)?];
                lift_scalar(ScalarOp::Add, &args)?
            }
            Expr::And(a, b) => {
                let args = [self.go(scope, a)?, self.go(scope, b)?];
                lift_scalar(ScalarOp::And, &args)?
            }
            Expr::Not(a) => lift_scalar(ScalarOp::Not, &[self.go(scope, a)?])?,
            Expr::Sum(a) => lift_scalar(ScalarOp::Sum, &[self.go(scope, a)?])?,
            Expr::Eq(a, b) => {
                let (x, y) = (self.go(scope, a)?, self.go(scope, b)?);
                eq_with(&x, &y, self.mutation)
            }
            Expr::If(c, t, f) => {
                let cond = self.go(scope, c)?;
                let then = self.go(scope, t)?;
                let other = self.go(scope, f)?;
                lift_cond(&cond, then, other)?
            }
            Expr::Record(fields) => {
                let mut out = Vec::with_capacity(fields.len());
                for (n, fe) in fields {
                    out.push((n.clone(), self.go(scope, fe)?));
                }
                AValue::record(out, none())
            }
            Expr::Proj(a, field) => lift_proj(&self.go(scope, a)?, field)?,
            Expr::Empty(_) => AValue::bag(Vec::new(), none()),
            Expr::Singleton(a) => AValue::bag(vec![self.go(scope, a)?], none()),
            Expr::Union(a, b) => lift_union(&self.go(scope, a)?, &self.go(scope, b)?)?,
            Expr::Diff(a, b) => {
                let (x, y) = (self.go(scope, a)?, self.go(scope, b)?);
                diff_with(&x, &y, self.mutation)?
            }
            Expr::Flatten(a) => lift_flatten(&self.go(scope, a)?)?,
            Expr::Comp { body, var, source } => {
                let src = self.go(scope, source)?;
                lift_comprehend(&src, |v| {
                    scope.push((var.clone(), v.clone()));
                    let r = self.go(scope, body);
                    scope.pop();
                    r
                })?
            }
        })
    }
}
