//! Translation from surface syntax to the core calculus.

use crate::ast::{Expr, Qualifier, SurfaceExpr};

/// Expands all surface sugar.
///
/// * `{e | x <- e1, y <- e2}` becomes `flatten({ {e | y <- e2} | x <- e1 })`
/// * `{e | x <- e0, C}` becomes `flatten({ if C then {e} else empty | x <- e0 })`
/// * `a or b` becomes `not (not a and not b)`
/// * `count(e)` becomes `sum({ 1 | _ <- e })`
/// * `{e1, ..., en}` becomes `{e1} union ... union {en}`
pub fn desugar(s: &SurfaceExpr) -> Expr {
    match s {
        SurfaceExpr::Var(x) => Expr::Var(x.clone()),
        SurfaceExpr::Let(x, e1, e2) => Expr::Let(x.clone(), bx(e1), bx(e2)),
        SurfaceExpr::Int(i) => Expr::Int(*i),
        SurfaceExpr::Add(a, b) => Expr::Add(bx(a), bx(b)),
        SurfaceExpr::Sum(e) => Expr::Sum(bx(e)),
        SurfaceExpr::Count(e) => Expr::sum(Expr::comp(Expr::Int(1), "_", desugar(e))),
        SurfaceExpr::Bool(b) => Expr::Bool(*b),
        SurfaceExpr::Not(e) => Expr::Not(bx(e)),
        SurfaceExpr::And(a, b) => Expr::And(bx(a), bx(b)),
        SurfaceExpr::Or(a, b) => Expr::not(Expr::and(Expr::not(desugar(a)), Expr::not(desugar(b)))),
        SurfaceExpr::Eq(a, b) => Expr::Eq(bx(a), bx(b)),
        SurfaceExpr::If(c, t, e) => Expr::If(bx(c), bx(t), bx(e)),
        SurfaceExpr::Record(fields) => {
            Expr::Record(fields.iter().map(|(n, e)| (n.clone(), desugar(e))).collect())
        }
        SurfaceExpr::Proj(e, f) => Expr::Proj(bx(e), f.clone()),
        SurfaceExpr::Empty(t) => Expr::Empty(t.clone()),
        SurfaceExpr::BagLit(elems) => elems
            .iter()
            .map(|e| Expr::singleton(desugar(e)))
            .reduce(Expr::union)
            .unwrap_or(Expr::Empty(None)),
        SurfaceExpr::Union(a, b) => Expr::Union(bx(a), bx(b)),
        SurfaceExpr::Diff(a, b) => Expr::Diff(bx(a), bx(b)),
        SurfaceExpr::Comp(body, quals) => comprehension(&desugar(body), quals),
        SurfaceExpr::Flatten(e) => Expr::Flatten(bx(e)),
    }
}

fn bx(s: &SurfaceExpr) -> Box<Expr> {
    Box::new(desugar(s))
}

fn comprehension(body: &Expr, quals: &[Qualifier]) -> Expr {
    match quals {
        [] => Expr::singleton(body.clone()),
        [Qualifier::Gen(x, source)] => Expr::comp(body.clone(), x, desugar(source)),
        [Qualifier::Gen(x, source), rest @ ..] => {
            Expr::flatten(Expr::comp(comprehension(body, rest), x, desugar(source)))
        }
        [Qualifier::Filter(cond), rest @ ..] => {
            Expr::if_then_else(desugar(cond), comprehension(body, rest), Expr::Empty(None))
        }
    }
}
