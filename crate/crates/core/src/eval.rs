//! Plain semantics over finite multisets.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ast::Expr;
use crate::value::{Bag, Value};

/// Failures that can only arise from ill-typed input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("ill-typed input: {0}")]
    Shape(String),
}

pub type Env = BTreeMap<String, Value>;

/// Evaluates an elaborated, well-typed expression.
///
/// Integer arithmetic wraps on overflow so that evaluation stays total.
pub fn eval(env: &Env, e: &Expr) -> Result<Value, EvalError> {
    let mut scope: Vec<(String, Value)> = env.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    go(&mut scope, e)
}

fn shape(what: &str) -> EvalError {
    EvalError::Shape(what.to_owned())
}

fn int(v: Value) -> Result<i64, EvalError> {
    match v {
        Value::Int(i) => Ok(i),
        _ => Err(shape("expected an integer")),
    }
}

fn boolean(v: Value) -> Result<bool, EvalError> {
    match v {
        Value::Bool(b) => Ok(b),
        _ => Err(shape("expected a boolean")),
    }
}

fn bag(v: Value) -> Result<Bag, EvalError> {
    match v {
        Value::Bag(b) => Ok(b),
        _ => Err(shape("expected a bag")),
    }
}

fn go(scope: &mut Vec<(String, Value)>, e: &Expr) -> Result<Value, EvalError> {
    Ok(match e {
        Expr::Var(x) => scope
            .iter()
            .rev()
            .find(|(n, _)| n == x)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| EvalError::Unbound(x.clone()))?,
        Expr::Let(x, e1, e2) => {
            let v = go(scope, e1)?;
            scope.push((x.clone(), v));
            let r = go(scope, e2);
            scope.pop();
            r?
        }
        Expr::Int(i) => Value::Int(*i),
        Expr::Bool(b) => Value::Bool(*b),
        Expr::Add(a, b) => Value::Int(int(go(scope, a)?)?.wrapping_add(int(go(scope, b)?)?)),
        Expr::Sum(a) => {
            let total = bag(go(scope, a)?)?.entries().try_fold(0i64, |acc, (v, n)| {
                let i = int(v.clone())?;
                Ok::<_, EvalError>(acc.wrapping_add(i.wrapping_mul(n as i64)))
            })?;
            Value::Int(total)
        }
        Expr::Not(a) => Value::Bool(!boolean(go(scope, a)?)?),
        Expr::And(a, b) => {
            let x = boolean(go(scope, a)?)?;
            let y = boolean(go(scope, b)?)?;
            Value::Bool(x && y)
        }
        Expr::Eq(a, b) => Value::Bool(go(scope, a)? == go(scope, b)?),
        Expr::If(c, t, f) => {
            if boolean(go(scope, c)?)? {
                go(scope, t)?
            } else {
                go(scope, f)?
            }
        }
        Expr::Record(fields) => {
            let mut out = Vec::with_capacity(fields.len());
            for (n, fe) in fields {
                out.push((n.clone(), go(scope, fe)?));
            }
            Value::record(out)
        }
        Expr::Proj(a, field) => go(scope, a)?
            .field(field)
            .cloned()
            .ok_or_else(|| shape(&format!("missing field `{field}`")))?,
        Expr::Empty(_) => Value::Bag(Bag::new()),
        Expr::Singleton(a) => Value::bag([go(scope, a)?]),
        Expr::Union(a, b) => Value::Bag(bag(go(scope, a)?)?.union(&bag(go(scope, b)?)?)),
        Expr::Diff(a, b) => Value::Bag(bag(go(scope, a)?)?.difference(&bag(go(scope, b)?)?)),
        Expr::Comp { body, var, source } => {
            let src = bag(go(scope, source)?)?;
            let mut out = Bag::new();
            for (v, n) in src.entries() {
                scope.push((var.clone(), v.clone()));
                let r = go(scope, body);
                scope.pop();
                out.insert(r?, n);
            }
            Value::Bag(out)
        }
        Expr::Flatten(a) => {
            let outer = bag(go(scope, a)?)?;
            let mut out = Bag::new();
            for (inner, n) in outer.entries() {
                let inner = bag(inner.clone())?;
                for (v, m) in inner.entries() {
                    out.insert(v.clone(), n * m);
                }
            }
            Value::Bag(out)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::desugar::desugar;
    use crate::parse::parse;

    fn run(env: &Env, src: &str) -> Value {
        eval(env, &desugar(&parse(src).unwrap())).unwrap()
    }

    fn row(a: i64, b: i64) -> Value {
        Value::record(vec![("A".into(), Value::Int(a)), ("B".into(), Value::Int(b))])
    }

    fn fig_env() -> Env {
        Env::from([("R".to_owned(), Value::bag([row(1, 1), row(1, 2), row(2, 3)]))])
    }

    #[test]
    fn sums() {
        assert_eq!(run(&Env::new(), "sum({1,2,3})"), Value::Int(6));
        assert_eq!(run(&Env::new(), "sum(empty : {int})"), Value::Int(0));
        assert_eq!(run(&Env::new(), "sum({2,2})"), Value::Int(4));
    }

    #[test]
    fn projection_keeps_duplicates() {
        let out = run(&fig_env(), "{ (A: x.A) | x <- R }");
        let a = |i| Value::record(vec![("A".into(), Value::Int(i))]);
        let Value::Bag(b) = &out else { panic!() };
        assert_eq!(b.multiplicity(&a(1)), 2);
        assert_eq!(b.multiplicity(&a(2)), 1);
        assert_eq!(b.len(), 3);
    }

    #[test]
    fn selection_and_count() {
        assert_eq!(
            run(&fig_env(), "{ x | x <- R, x.A == x.B }"),
            Value::bag([row(1, 1)])
        );
        assert_eq!(run(&fig_env(), "count(R)"), Value::Int(3));
    }

    #[test]
    fn difference_and_equality() {
        assert_eq!(
            run(&Env::new(), "{1, 1, 2} diff {1}"),
            Value::bag([Value::Int(2)])
        );
        assert_eq!(run(&Env::new(), "{1, 2} == {2, 1}"), Value::Bool(true));
        assert_eq!(run(&Env::new(), "{1, 1} == {1}"), Value::Bool(false));
    }

    #[test]
    fn flatten_multiplies() {
        assert_eq!(
            run(&Env::new(), "flatten({{1, 2}, {1, 2}})"),
            Value::bag([1, 1, 2, 2].map(Value::Int))
        );
    }

    #[test]
    fn ill_typed_is_an_error() {
        let e = desugar(&parse("1 + true").unwrap());
        assert!(matches!(eval(&Env::new(), &e), Err(EvalError::Shape(_))));
    }
}
