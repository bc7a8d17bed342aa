//! Abstract syntax: types, surface expressions and the core calculus.

use std::fmt;

/// Plain types.
///
/// Record fields are kept sorted by name, so two record types with the same
/// fields compare equal regardless of the order they were written in.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Type {
    Int,
    Bool,
    Record(Vec<(String, Type)>),
    Bag(Box<Type>),
}

impl Type {
    /// Builds a record type, sorting fields by name.
    ///
    /// Returns `None` when a field name is repeated.
    pub fn record(mut fields: Vec<(String, Type)>) -> Option<Type> {
        fields.sort_by(|a, b| a.0.cmp(&b.0));
        if fields.windows(2).any(|w| w[0].0 == w[1].0) {
            return None;
        }
        Some(Type::Record(fields))
    }

    pub fn bag(elem: Type) -> Type {
        Type::Bag(Box::new(elem))
    }

    pub fn field(&self, name: &str) -> Option<&Type> {
        match self {
            Type::Record(fields) => fields.iter().find(|(n, _)| n == name).map(|(_, t)| t),
            _ => None,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => f.write_str("int"),
            Type::Bool => f.write_str("bool"),
            Type::Record(fields) => {
                f.write_str("(")?;
                for (i, (name, ty)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{name}: {ty}")?;
                }
                f.write_str(")")
            }
            Type::Bag(elem) => write!(f, "{{{elem}}}"),
        }
    }
}

/// Core expressions. No syntactic sugar remains at this level.
///
/// `Record` keeps its fields in source order; `Empty` carries the element
/// type once elaboration has resolved it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Var(String),
    Let(String, Box<Expr>, Box<Expr>),
    Int(i64),
    Add(Box<Expr>, Box<Expr>),
    Sum(Box<Expr>),
    Bool(bool),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Eq(Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Record(Vec<(String, Expr)>),
    Proj(Box<Expr>, String),
    Empty(Option<Type>),
    Singleton(Box<Expr>),
    Union(Box<Expr>, Box<Expr>),
    Diff(Box<Expr>, Box<Expr>),
    Comp {
        body: Box<Expr>,
        var: String,
        source: Box<Expr>,
    },
    Flatten(Box<Expr>),
}

// Small constructors keep desugaring and tests readable. `add` and `not`
// build syntax, so they are not operator traits.
#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_owned())
    }

    pub fn let_in(name: &str, bound: Expr, body: Expr) -> Expr {
        Expr::Let(name.to_owned(), Box::new(bound), Box::new(body))
    }

    pub fn add(l: Expr, r: Expr) -> Expr {
        Expr::Add(Box::new(l), Box::new(r))
    }

    pub fn sum(e: Expr) -> Expr {
        Expr::Sum(Box::new(e))
    }

    pub fn not(e: Expr) -> Expr {
        Expr::Not(Box::new(e))
    }

    pub fn and(l: Expr, r: Expr) -> Expr {
        Expr::And(Box::new(l), Box::new(r))
    }

    pub fn eq(l: Expr, r: Expr) -> Expr {
        Expr::Eq(Box::new(l), Box::new(r))
    }

    pub fn if_then_else(c: Expr, t: Expr, e: Expr) -> Expr {
        Expr::If(Box::new(c), Box::new(t), Box::new(e))
    }

    pub fn record(fields: Vec<(&str, Expr)>) -> Expr {
        Expr::Record(fields.into_iter().map(|(n, e)| (n.to_owned(), e)).collect())
    }

    pub fn proj(e: Expr, field: &str) -> Expr {
        Expr::Proj(Box::new(e), field.to_owned())
    }

    pub fn singleton(e: Expr) -> Expr {
        Expr::Singleton(Box::new(e))
    }

    pub fn union(l: Expr, r: Expr) -> Expr {
        Expr::Union(Box::new(l), Box::new(r))
    }

    pub fn diff(l: Expr, r: Expr) -> Expr {
        Expr::Diff(Box::new(l), Box::new(r))
    }

    pub fn comp(body: Expr, var: &str, source: Expr) -> Expr {
        Expr::Comp {
            body: Box::new(body),
            var: var.to_owned(),
            source: Box::new(source),
        }
    }

    pub fn flatten(e: Expr) -> Expr {
        Expr::Flatten(Box::new(e))
    }
}

/// One qualifier of a surface comprehension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Qualifier {
    Gen(String, SurfaceExpr),
    Filter(SurfaceExpr),
}

/// Surface syntax as produced by the parser.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SurfaceExpr {
    Var(String),
    Let(String, Box<SurfaceExpr>, Box<SurfaceExpr>),
    Int(i64),
    Add(Box<SurfaceExpr>, Box<SurfaceExpr>),
    Sum(Box<SurfaceExpr>),
    Count(Box<SurfaceExpr>),
    Bool(bool),
    Not(Box<SurfaceExpr>),
    And(Box<SurfaceExpr>, Box<SurfaceExpr>),
    Or(Box<SurfaceExpr>, Box<SurfaceExpr>),
    Eq(Box<SurfaceExpr>, Box<SurfaceExpr>),
    If(Box<SurfaceExpr>, Box<SurfaceExpr>, Box<SurfaceExpr>),
    Record(Vec<(String, SurfaceExpr)>),
    Proj(Box<SurfaceExpr>, String),
    Empty(Option<Type>),
    /// `{e1, ..., en}` with n >= 1.
    BagLit(Vec<SurfaceExpr>),
    Union(Box<SurfaceExpr>, Box<SurfaceExpr>),
    Diff(Box<SurfaceExpr>, Box<SurfaceExpr>),
    /// `{ body | q1, ..., qn }`; the first qualifier is always a generator.
    Comp(Box<SurfaceExpr>, Vec<Qualifier>),
    Flatten(Box<SurfaceExpr>),
}
