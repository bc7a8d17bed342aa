//! Pretty-printing of core expressions in the concrete query syntax.

use crate::ast::Expr;

// Binding strength of each syntactic level; higher binds tighter.
const TOP: u8 = 0;
const AND: u8 = 2;
const NOT: u8 = 3;
const EQ: u8 = 4;
const SET: u8 = 5;
const ADD: u8 = 6;
const POSTFIX: u8 = 7;
const ATOM: u8 = 8;

/// Renders a core expression so that parsing and desugaring the text gives
/// the same expression back.
pub fn render(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, TOP);
    out
}

fn level(e: &Expr) -> u8 {
    match e {
        Expr::Let(..) | Expr::If(..) => TOP,
        Expr::And(..) => AND,
        Expr::Not(..) => NOT,
        Expr::Eq(..) => EQ,
        Expr::Union(..) | Expr::Diff(..) => SET,
        Expr::Add(..) => ADD,
        Expr::Proj(..) => POSTFIX,
        _ => ATOM,
    }
}

fn write_expr(out: &mut String, e: &Expr, min: u8) {
    if level(e) < min {
        out.push('(');
        write_expr(out, e, TOP);
        out.push(')');
        return;
    }
    match e {
        Expr::Var(x) => out.push_str(x),
        Expr::Let(x, e1, e2) => {
            out.push_str("let ");
            out.push_str(x);
            out.push_str(" = ");
            write_expr(out, e1, TOP);
            out.push_str(" in ");
            write_expr(out, e2, TOP);
        }
        Expr::Int(i) => out.push_str(&i.to_string()),
        Expr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::Add(a, b) => binary(out, a, " + ", b, ADD),
        Expr::And(a, b) => binary(out, a, " and ", b, AND),
        Expr::Union(a, b) => binary(out, a, " union ", b, SET),
        Expr::Diff(a, b) => binary(out, a, " diff ", b, SET),
        Expr::Eq(a, b) => {
            write_expr(out, a, EQ + 1);
            out.push_str(" == ");
            write_expr(out, b, EQ + 1);
        }
        Expr::Not(a) => {
            out.push_str("not ");
            write_expr(out, a, NOT);
        }
        Expr::Sum(a) => call(out, "sum", a),
        Expr::Flatten(a) => call(out, "flatten", a),
        Expr::If(c, t, f) => {
            out.push_str("if ");
            write_expr(out, c, TOP);
            out.push_str(" then ");
            write_expr(out, t, TOP);
            out.push_str(" else ");
            write_expr(out, f, TOP);
        }
        Expr::Record(fields) => {
            out.push('(');
            for (i, (name, fe)) in fields.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(name);
                out.push_str(": ");
                write_expr(out, fe, TOP);
            }
            out.push(')');
        }
        Expr::Proj(a, field) => {
            write_expr(out, a, POSTFIX);
            out.push('.');
            out.push_str(field);
        }
        Expr::Empty(None) => out.push_str("empty"),
        Expr::Empty(Some(t)) => {
            out.push_str("empty : {");
            out.push_str(&t.to_string());
            out.push('}');
        }
        Expr::Singleton(a) => {
            out.push('{');
            write_expr(out, a, TOP);
            out.push('}');
        }
        Expr::Comp { body, var, source } => {
            out.push_str("{ ");
            write_expr(out, body, TOP);
            out.push_str(" | ");
            out.push_str(var);
            out.push_str(" <- ");
            write_expr(out, source, TOP);
            out.push_str(" }");
        }
    }
}

// Left-associative infix operator at `lvl`.
fn binary(out: &mut String, a: &Expr, op: &str, b: &Expr, lvl: u8) {
    write_expr(out, a, lvl);
    out.push_str(op);
    write_expr(out, b, lvl + 1);
}

fn call(out: &mut String, name: &str, a: &Expr) {
    out.push_str(name);
    out.push('(');
    write_expr(out, a, TOP);
    out.push(')');
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Type;
    use crate::desugar::desugar;
    use crate::parse::parse;

    #[test]
    fn examples() {
        assert_eq!(render(&Expr::add(Expr::Int(1), Expr::Int(2))), "1 + 2");
        assert_eq!(render(&Expr::Empty(Some(Type::Int))), "empty : {int}");
        assert_eq!(
            render(&Expr::comp(Expr::proj(Expr::var("x"), "A"), "x", Expr::var("R"))),
            "{ x.A | x <- R }"
        );
    }

    #[test]
    fn parenthesizes_by_precedence() {
        let e = Expr::add(Expr::Int(1), Expr::add(Expr::Int(2), Expr::Int(3)));
        assert_eq!(render(&e), "1 + (2 + 3)");
        let e = Expr::eq(Expr::eq(Expr::Int(1), Expr::Int(1)), Expr::Bool(true));
        assert_eq!(render(&e), "(1 == 1) == true");
        let e = Expr::add(
            Expr::if_then_else(Expr::Bool(true), Expr::Int(1), Expr::Int(2)),
            Expr::Int(3),
        );
        assert_eq!(render(&e), "(if true then 1 else 2) + 3");
        let e = Expr::proj(Expr::union(Expr::var("a"), Expr::var("b")), "A");
        assert_eq!(render(&e), "(a union b).A");
    }

    #[test]
    fn round_trips_nested_forms() {
        let e = Expr::not(Expr::and(
            Expr::not(Expr::var("a")),
            Expr::not(Expr::eq(Expr::Int(-1), Expr::var("b"))),
        ));
        assert_eq!(desugar(&parse(&render(&e)).unwrap()), e);
        let e = Expr::sum(Expr::comp(Expr::Int(1), "_", Expr::var("R")));
        assert_eq!(desugar(&parse(&render(&e)).unwrap()), e);
        let e = Expr::Record(vec![]);
        assert_eq!(desugar(&parse(&render(&e)).unwrap()), e);
    }
}
