//! Plain type system and elaboration of empty-collection element types.
//!
//! Checking runs over partially known types: every unascribed `empty` gets a
//! fresh unknown, which unification resolves from the surrounding context.
//! After checking, every `Empty` node must carry a fully known type.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ast::{Expr, Type};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("type mismatch: expected {expected}, found {found}")]
    Mismatch { expected: String, found: String },
    #[error("field `{field}` not found in {ty}")]
    NoField { field: String, ty: String },
    #[error("branches have different types: {0} and {1}")]
    Branches(String, String),
    #[error("cannot determine the element type of an empty collection")]
    AmbiguousEmpty,
}

/// An ordered typing context. Later bindings shadow earlier ones.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeCtx {
    bindings: Vec<(String, Type)>,
}

impl TypeCtx {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a binding, replacing any previous binding of the same variable.
    pub fn insert(&mut self, name: &str, ty: Type) {
        self.bindings.retain(|(n, _)| n != name);
        self.bindings.push((name.to_owned(), ty));
    }

    pub fn with(mut self, name: &str, ty: Type) -> Self {
        self.insert(name, ty);
        self
    }

    pub fn get(&self, name: &str) -> Option<&Type> {
        self.bindings
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Type)> {
        self.bindings.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }
}

impl FromIterator<(String, Type)> for TypeCtx {
    fn from_iter<I: IntoIterator<Item = (String, Type)>>(iter: I) -> Self {
        let mut ctx = TypeCtx::new();
        for (n, t) in iter {
            ctx.insert(&n, t);
        }
        ctx
    }
}

/// Types with unification variables.
#[derive(Debug, Clone, PartialEq)]
enum Ty {
    Int,
    Bool,
    Record(Vec<(String, Ty)>),
    Bag(Box<Ty>),
    Var(usize),
}

impl From<&Type> for Ty {
    fn from(t: &Type) -> Ty {
        match t {
            Type::Int => Ty::Int,
            Type::Bool => Ty::Bool,
            Type::Record(fs) => Ty::Record(fs.iter().map(|(n, t)| (n.clone(), t.into())).collect()),
            Type::Bag(e) => Ty::Bag(Box::new(e.as_ref().into())),
        }
    }
}

#[derive(Default)]
struct Checker {
    solution: Vec<Option<Ty>>,
    // Unknowns introduced by `empty` nodes, in preorder.
    empties: Vec<usize>,
}

impl Checker {
    fn fresh(&mut self) -> Ty {
        self.solution.push(None);
        Ty::Var(self.solution.len() - 1)
    }

    fn resolve(&self, t: &Ty) -> Ty {
        match t {
            Ty::Var(v) => match &self.solution[*v] {
                Some(t) => self.resolve(t),
                None => t.clone(),
            },
            Ty::Record(fs) => Ty::Record(fs.iter().map(|(n, t)| (n.clone(), self.resolve(t))).collect()),
            Ty::Bag(e) => Ty::Bag(Box::new(self.resolve(e))),
            _ => t.clone(),
        }
    }

    fn occurs(&self, v: usize, t: &Ty) -> bool {
        match self.resolve(t) {
            Ty::Var(w) => v == w,
            Ty::Record(fs) => fs.iter().any(|(_, t)| self.occurs(v, t)),
            Ty::Bag(e) => self.occurs(v, &e),
            _ => false,
        }
    }

    fn unify(&mut self, a: &Ty, b: &Ty) -> bool {
        let (a, b) = (self.resolve(a), self.resolve(b));
        match (&a, &b) {
            (Ty::Var(v), Ty::Var(w)) if v == w => true,
            (Ty::Var(v), other) | (other, Ty::Var(v)) => {
                if self.occurs(*v, other) {
                    return false;
                }
                self.solution[*v] = Some(other.clone());
                true
            }
            (Ty::Int, Ty::Int) | (Ty::Bool, Ty::Bool) => true,
            (Ty::Bag(x), Ty::Bag(y)) => self.unify(x, y),
            (Ty::Record(xs), Ty::Record(ys)) => {
                xs.len() == ys.len()
                    && xs
                        .iter()
                        .zip(ys)
                        .all(|((n, x), (m, y))| n == m && self.unify(x, y))
            }
            _ => false,
        }
    }

    fn show(&self, t: &Ty) -> String {
        match self.resolve(t) {
            Ty::Int => "int".into(),
            Ty::Bool => "bool".into(),
            Ty::Var(_) => "_".into(),
            Ty::Bag(e) => format!("{{{}}}", self.show(&e)),
            Ty::Record(fs) => {
                let inner: Vec<String> = fs.iter().map(|(n, t)| format!("{n}: {}", self.show(t))).collect();
                format!("({})", inner.join(", "))
            }
        }
    }

    fn expect(&mut self, expected: &Ty, found: &Ty) -> Result<(), TypeError> {
        if self.unify(expected, found) {
            Ok(())
        } else {
            Err(TypeError::Mismatch {
                expected: self.show(expected),
                found: self.show(found),
            })
        }
    }

    fn same(&mut self, a: &Ty, b: &Ty) -> Result<(), TypeError> {
        if self.unify(a, b) {
            Ok(())
        } else {
            Err(TypeError::Branches(self.show(a), self.show(b)))
        }
    }

    fn bag_elem(&mut self, t: &Ty) -> Result<Ty, TypeError> {
        let elem = self.fresh();
        self.expect(&Ty::Bag(Box::new(elem.clone())), t)?;
        Ok(elem)
    }

    fn infer(&mut self, scope: &mut Vec<(String, Ty)>, e: &Expr) -> Result<Ty, TypeError> {
        match e {
            Expr::Var(x) => scope
                .iter()
                .rev()
                .find(|(n, _)| n == x)
                .map(|(_, t)| t.clone())
                .ok_or_else(|| TypeError::Unbound(x.clone())),
            Expr::Let(x, e1, e2) => {
                let t1 = self.infer(scope, e1)?;
                scope.push((x.clone(), t1));
                let t2 = self.infer(scope, e2);
                scope.pop();
                t2
            }
            Expr::Int(_) => Ok(Ty::Int),
            Expr::Bool(_) => Ok(Ty::Bool),
            Expr::Add(a, b) => {
                let ta = self.infer(scope, a)?;
                self.expect(&Ty::Int, &ta)?;
                let tb = self.infer(scope, b)?;
                self.expect(&Ty::Int, &tb)?;
                Ok(Ty::Int)
            }
            Expr::Sum(a) => {
                let ta = self.infer(scope, a)?;
                self.expect(&Ty::Bag(Box::new(Ty::Int)), &ta)?;
                Ok(Ty::Int)
            }
            Expr::Not(a) => {
                let ta = self.infer(scope, a)?;
                self.expect(&Ty::Bool, &ta)?;
                Ok(Ty::Bool)
            }
            Expr::And(a, b) => {
                let ta = self.infer(scope, a)?;
                self.expect(&Ty::Bool, &ta)?;
                let tb = self.infer(scope, b)?;
                self.expect(&Ty::Bool, &tb)?;
                Ok(Ty::Bool)
            }
            Expr::Eq(a, b) => {
                let ta = self.infer(scope, a)?;
                let tb = self.infer(scope, b)?;
                self.same(&ta, &tb)?;
                Ok(Ty::Bool)
            }
            Expr::If(c, t, f) => {
                let tc = self.infer(scope, c)?;
                self.expect(&Ty::Bool, &tc)?;
                let tt = self.infer(scope, t)?;
                let tf = self.infer(scope, f)?;
                self.same(&tt, &tf)?;
                Ok(tt)
            }
            Expr::Record(fields) => {
                let mut out = Vec::with_capacity(fields.len());
                for (n, fe) in fields {
                    out.push((n.clone(), self.infer(scope, fe)?));
                }
                out.sort_by(|a, b| a.0.cmp(&b.0));
                Ok(Ty::Record(out))
            }
            Expr::Proj(a, field) => {
                let ta = self.infer(scope, a)?;
                match self.resolve(&ta) {
                    Ty::Record(fs) => fs
                        .iter()
                        .find(|(n, _)| n == field)
                        .map(|(_, t)| t.clone())
                        .ok_or_else(|| TypeError::NoField {
                            field: field.clone(),
                            ty: self.show(&ta),
                        }),
                    // Records are not row-polymorphic, so the shape must already be known.
                    Ty::Var(_) => Err(TypeError::AmbiguousEmpty),
                    other => Err(TypeError::NoField {
                        field: field.clone(),
                        ty: self.show(&other),
                    }),
                }
            }
            Expr::Empty(Some(t)) => Ok(Ty::Bag(Box::new(t.into()))),
            Expr::Empty(None) => {
                let v = self.fresh();
                if let Ty::Var(i) = v {
                    self.empties.push(i);
                }
                Ok(Ty::Bag(Box::new(v)))
            }
            Expr::Singleton(a) => Ok(Ty::Bag(Box::new(self.infer(scope, a)?))),
            Expr::Union(a, b) | Expr::Diff(a, b) => {
                let ta = self.infer(scope, a)?;
                self.bag_elem(&ta)?;
                let tb = self.infer(scope, b)?;
                self.same(&ta, &tb)?;
                Ok(ta)
            }
            Expr::Comp { body, var, source } => {
                let ts = self.infer(scope, source)?;
                let elem = self.bag_elem(&ts)?;
                scope.push((var.clone(), elem));
                let tb = self.infer(scope, body);
                scope.pop();
                Ok(Ty::Bag(Box::new(tb?)))
            }
            Expr::Flatten(a) => {
                let ta = self.infer(scope, a)?;
                let inner = self.bag_elem(&ta)?;
                self.bag_elem(&inner)?;
                Ok(inner)
            }
        }
    }

    fn concrete(&self, t: &Ty) -> Option<Type> {
        match self.resolve(t) {
            Ty::Int => Some(Type::Int),
            Ty::Bool => Some(Type::Bool),
            Ty::Var(_) => None,
            Ty::Bag(e) => Some(Type::bag(self.concrete(&e)?)),
            Ty::Record(fs) => {
                let fields = fs
                    .iter()
                    .map(|(n, t)| Some((n.clone(), self.concrete(t)?)))
                    .collect::<Option<Vec<_>>>()?;
                Some(Type::Record(fields))
            }
        }
    }

    // Rewrites unascribed `empty` nodes in the same preorder used by `infer`.
    fn fill(&self, e: &Expr, next: &mut usize) -> Result<Expr, TypeError> {
        let mut go = |e: &Expr| self.fill(e, next).map(Box::new);
        Ok(match e {
            Expr::Empty(None) => {
                let var = self.empties[*next];
                *next += 1;
                let ty = self.concrete(&Ty::Var(var)).ok_or(TypeError::AmbiguousEmpty)?;
                Expr::Empty(Some(ty))
            }
            Expr::Var(_) | Expr::Int(_) | Expr::Bool(_) | Expr::Empty(Some(_)) => e.clone(),
            Expr::Let(x, a, b) => Expr::Let(x.clone(), go(a)?, go(b)?),
            Expr::Add(a, b) => Expr::Add(go(a)?, go(b)?),
            Expr::And(a, b) => Expr::And(go(a)?, go(b)?),
            Expr::Eq(a, b) => Expr::Eq(go(a)?, go(b)?),
            Expr::Union(a, b) => Expr::Union(go(a)?, go(b)?),
            Expr::Diff(a, b) => Expr::Diff(go(a)?, go(b)?),
            Expr::Sum(a) => Expr::Sum(go(a)?),
            Expr::Not(a) => Expr::Not(go(a)?),
            Expr::Singleton(a) => Expr::Singleton(go(a)?),
            Expr::Flatten(a) => Expr::Flatten(go(a)?),
            Expr::Proj(a, f) => Expr::Proj(go(a)?, f.clone()),
            Expr::If(c, t, f) => Expr::If(go(c)?, go(t)?, go(f)?),
            Expr::Record(fields) => Expr::Record(
                fields
                    .iter()
                    .map(|(n, fe)| Ok((n.clone(), self.fill(fe, next)?)))
                    .collect::<Result<_, TypeError>>()?,
            ),
            Expr::Comp { body, var, source } => {
                // `infer` visits the source before the body.
                let source = go(source)?;
                Expr::Comp {
                    body: go(body)?,
                    var: var.clone(),
                    source,
                }
            }
        })
    }
}

fn scope_of(ctx: &TypeCtx) -> Vec<(String, Ty)> {
    ctx.iter().map(|(n, t)| (n.to_owned(), t.into())).collect()
}

/// Checks `e` under `ctx`, returning the elaborated expression (every
/// `empty` ascribed) together with its type.
pub fn check(ctx: &TypeCtx, e: &Expr) -> Result<(Expr, Type), TypeError> {
    let mut checker = Checker::default();
    let ty = checker.infer(&mut scope_of(ctx), e)?;
    let elaborated = checker.fill(e, &mut 0)?;
    let ty = checker.concrete(&ty).ok_or(TypeError::AmbiguousEmpty)?;
    Ok((elaborated, ty))
}

/// The type of `e` under `ctx`.
pub fn infer_type(ctx: &TypeCtx, e: &Expr) -> Result<Type, TypeError> {
    check(ctx, e).map(|(_, t)| t)
}

/// Resolves the element type of every `empty` in `e`.
pub fn elaborate(ctx: &TypeCtx, e: &Expr) -> Result<Expr, TypeError> {
    check(ctx, e).map(|(e, _)| e)
}

/// Types a closed map of variables, e.g. one read from a context file.
pub fn ctx_from_map(map: BTreeMap<String, Type>) -> TypeCtx {
    map.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::desugar::desugar;
    use crate::parse::{parse, parse_type};

    fn fig_ctx() -> TypeCtx {
        TypeCtx::new().with("R", parse_type("{(A: int, B: int)}").unwrap())
    }

    fn core(src: &str) -> Expr {
        desugar(&parse(src).unwrap())
    }

    #[test]
    fn projection_query() {
        let t = infer_type(&fig_ctx(), &core("{ (A: x.A) | x <- R }")).unwrap();
        assert_eq!(t, parse_type("{(A: int)}").unwrap());
        let t = infer_type(&fig_ctx(), &core("{ x.A | x <- R }")).unwrap();
        assert_eq!(t, parse_type("{int}").unwrap());
    }

    #[test]
    fn count_is_int() {
        assert_eq!(infer_type(&fig_ctx(), &core("count(R)")).unwrap(), Type::Int);
    }

    #[test]
    fn ill_typed() {
        assert!(matches!(
            infer_type(&TypeCtx::new(), &core("1 + true")),
            Err(TypeError::Mismatch { .. })
        ));
        assert!(matches!(
            infer_type(&TypeCtx::new(), &core("x")),
            Err(TypeError::Unbound(_))
        ));
        assert!(matches!(
            infer_type(&fig_ctx(), &core("{ x.C | x <- R }")),
            Err(TypeError::NoField { .. })
        ));
        assert!(matches!(
            infer_type(&TypeCtx::new(), &core("if true then 1 else false")),
            Err(TypeError::Branches(..))
        ));
    }

    #[test]
    fn empty_forced_by_branch() {
        let e = elaborate(
            &TypeCtx::new().with("b", Type::Bool),
            &core("if b then empty else {1}"),
        )
        .unwrap();
        let Expr::If(_, then, _) = e else { panic!() };
        assert_eq!(*then, Expr::Empty(Some(Type::Int)));
    }

    #[test]
    fn standalone_empty_is_ambiguous() {
        assert_eq!(
            infer_type(&TypeCtx::new(), &core("empty")),
            Err(TypeError::AmbiguousEmpty)
        );
        assert_eq!(
            infer_type(&TypeCtx::new(), &core("empty == empty")),
            Err(TypeError::AmbiguousEmpty)
        );
    }

    #[test]
    fn filter_empty_gets_body_type() {
        let e = elaborate(&fig_ctx(), &core("{ x.B | x <- R, x.A == 1 }")).unwrap();
        let Expr::Flatten(comp) = e else { panic!() };
        let Expr::Comp { body, .. } = *comp else { panic!() };
        let Expr::If(_, _, other) = *body else { panic!() };
        assert_eq!(*other, Expr::Empty(Some(Type::Int)));
    }

    #[test]
    fn empty_resolved_later_in_program_order() {
        let ctx = TypeCtx::new().with("S", parse_type("{int}").unwrap());
        let e = elaborate(&ctx, &core("let z = empty in z union S")).unwrap();
        assert_eq!(
            e,
            Expr::let_in(
                "z",
                Expr::Empty(Some(Type::Int)),
                Expr::union(Expr::var("z"), Expr::var("S"))
            )
        );
    }

    #[test]
    fn equality_at_bag_type() {
        assert_eq!(infer_type(&fig_ctx(), &core("R == R")).unwrap(), Type::Bool);
    }
}
