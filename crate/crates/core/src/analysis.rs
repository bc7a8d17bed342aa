//! Annotated types and the type-based provenance analysis.
//!
//! An annotated type `ω^Φ` bounds the annotations of the values it
//! describes: a value inhabits it when it has the right shape and every
//! node's annotation is a subset of the corresponding type annotation.

use std::fmt;

use thiserror::Error;

use crate::annot::{write_ann, AValue, Annotation, Color, Raw};
use crate::ast::{Expr, Type};
use crate::parse::{is_ident_char, is_ident_start, SyntaxError};
use crate::typecheck::TypeError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("incompatible annotated types {0} and {1}")]
    Incompatible(String, String),
    #[error("expression has an empty collection without an element type; elaborate it first")]
    Unelaborated,
}

/// An annotated type `ω^Φ`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AType {
    pub raw: RawType,
    pub ann: Annotation,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RawType {
    Int,
    Bool,
    /// Fields sorted by name.
    Record(Vec<(String, AType)>),
    Bag(Box<AType>),
}

impl AType {
    pub fn new(raw: RawType, ann: Annotation) -> AType {
        AType { raw, ann }
    }

    pub fn int(ann: Annotation) -> AType {
        AType::new(RawType::Int, ann)
    }

    pub fn boolean(ann: Annotation) -> AType {
        AType::new(RawType::Bool, ann)
    }

    pub fn record(mut fields: Vec<(String, AType)>, ann: Annotation) -> AType {
        fields.sort_by(|a, b| a.0.cmp(&b.0));
        AType::new(RawType::Record(fields), ann)
    }

    pub fn bag(elem: AType, ann: Annotation) -> AType {
        AType::new(RawType::Bag(Box::new(elem)), ann)
    }

    /// The least annotated type over `ty`: every node annotated with `∅`.
    pub fn least(ty: &Type) -> AType {
        let raw = match ty {
            Type::Int => RawType::Int,
            Type::Bool => RawType::Bool,
            Type::Record(fs) => {
                RawType::Record(fs.iter().map(|(n, t)| (n.clone(), AType::least(t))).collect())
            }
            Type::Bag(e) => RawType::Bag(Box::new(AType::least(e))),
        };
        AType::new(raw, Annotation::new())
    }

    pub fn erase(&self) -> Type {
        match &self.raw {
            RawType::Int => Type::Int,
            RawType::Bool => Type::Bool,
            RawType::Record(fs) => Type::Record(fs.iter().map(|(n, t)| (n.clone(), t.erase())).collect()),
            RawType::Bag(e) => Type::bag(e.erase()),
        }
    }

    pub fn colors(&self) -> Annotation {
        let mut out = self.ann.clone();
        match &self.raw {
            RawType::Record(fs) => fs.iter().for_each(|(_, t)| out.extend(t.colors())),
            RawType::Bag(e) => out.extend(e.colors()),
            RawType::Int | RawType::Bool => {}
        }
        out
    }

    /// `(ω^Φ)^{+Ψ} = ω^{Φ∪Ψ}`.
    pub fn with_added(mut self, extra: &Annotation) -> AType {
        self.ann.extend(extra.iter().cloned());
        self
    }

    pub fn field(&self, name: &str) -> Option<&AType> {
        match &self.raw {
            RawType::Record(fs) => fs.iter().find(|(n, _)| n == name).map(|(_, t)| t),
            _ => None,
        }
    }

    pub fn element(&self) -> Option<&AType> {
        match &self.raw {
            RawType::Bag(e) => Some(e),
            _ => None,
        }
    }
}

pub fn erase_type(t: &AType) -> Type {
    t.erase()
}

pub fn colors_of_type(t: &AType) -> Annotation {
    t.colors()
}

/// `τ̂1 ⊔ τ̂2`: node-wise union of annotations on compatible types.
pub fn merge_types(t1: &AType, t2: &AType) -> Result<AType, AnalysisError> {
    let incompatible = || AnalysisError::Incompatible(t1.to_string(), t2.to_string());
    let raw = match (&t1.raw, &t2.raw) {
        (RawType::Int, RawType::Int) => RawType::Int,
        (RawType::Bool, RawType::Bool) => RawType::Bool,
        (RawType::Record(xs), RawType::Record(ys)) => {
            if xs.len() != ys.len() {
                return Err(incompatible());
            }
            let mut fields = Vec::with_capacity(xs.len());
            for ((n, x), (m, y)) in xs.iter().zip(ys) {
                if n != m {
                    return Err(incompatible());
                }
                fields.push((n.clone(), merge_types(x, y)?));
            }
            RawType::Record(fields)
        }
        (RawType::Bag(x), RawType::Bag(y)) => RawType::Bag(Box::new(merge_types(x, y)?)),
        _ => return Err(incompatible()),
    };
    Ok(AType::new(raw, t1.ann.union(&t2.ann).cloned().collect()))
}

/// `τ̂1 ⊑ τ̂2`: compatible, with annotations contained node-wise.
pub fn subtype(t1: &AType, t2: &AType) -> bool {
    if !t1.ann.is_subset(&t2.ann) {
        return false;
    }
    match (&t1.raw, &t2.raw) {
        (RawType::Int, RawType::Int) | (RawType::Bool, RawType::Bool) => true,
        (RawType::Record(xs), RawType::Record(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|((n, x), (m, y))| n == m && subtype(x, y))
        }
        (RawType::Bag(x), RawType::Bag(y)) => subtype(x, y),
        _ => false,
    }
}

/// `v ∈ A[[τ̂]]`.
pub fn member(v: &AValue, t: &AType) -> bool {
    if !v.ann.is_subset(&t.ann) {
        return false;
    }
    match (&v.raw, &t.raw) {
        (Raw::Int(_), RawType::Int) | (Raw::Bool(_), RawType::Bool) => true,
        (Raw::Record(vs), RawType::Record(ts)) => {
            vs.len() == ts.len() && vs.iter().zip(ts).all(|((n, v), (m, t))| n == m && member(v, t))
        }
        (Raw::Bag(vs), RawType::Bag(et)) => vs.iter().all(|v| member(v, et)),
        _ => false,
    }
}

/// An ordered annotated typing context.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ACtx {
    bindings: Vec<(String, AType)>,
}

impl ACtx {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, ty: AType) {
        self.bindings.retain(|(n, _)| n != name);
        self.bindings.push((name.to_owned(), ty));
    }

    pub fn with(mut self, name: &str, ty: AType) -> Self {
        self.insert(name, ty);
        self
    }

    pub fn get(&self, name: &str) -> Option<&AType> {
        self.bindings
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &AType)> {
        self.bindings.iter().map(|(n, t)| (n.as_str(), t))
    }

    /// The plain context obtained by erasing every binding.
    pub fn erase(&self) -> crate::typecheck::TypeCtx {
        self.bindings
            .iter()
            .map(|(n, t)| (n.clone(), t.erase()))
            .collect()
    }
}

impl FromIterator<(String, AType)> for ACtx {
    fn from_iter<I: IntoIterator<Item = (String, AType)>>(iter: I) -> Self {
        let mut ctx = ACtx::new();
        for (n, t) in iter {
            ctx.insert(&n, t);
        }
        ctx
    }
}

fn mismatch(expected: &str, found: &AType) -> AnalysisError {
    AnalysisError::Type(TypeError::Mismatch {
        expected: expected.to_owned(),
        found: found.erase().to_string(),
    })
}

fn expect_int(t: &AType) -> Result<(), AnalysisError> {
    match t.raw {
        RawType::Int => Ok(()),
        _ => Err(mismatch("int", t)),
    }
}

fn expect_bool(t: &AType) -> Result<(), AnalysisError> {
    match t.raw {
        RawType::Bool => Ok(()),
        _ => Err(mismatch("bool", t)),
    }
}

fn bag_parts(t: AType) -> Result<(AType, Annotation), AnalysisError> {
    match t.raw {
        RawType::Bag(e) => Ok((*e, t.ann)),
        _ => Err(mismatch("a bag", &t)),
    }
}

fn compatible(t1: &AType, t2: &AType) -> Result<(), AnalysisError> {
    let (a, b) = (t1.erase(), t2.erase());
    if a == b {
        Ok(())
    } else {
        Err(AnalysisError::Type(TypeError::Branches(
            a.to_string(),
            b.to_string(),
        )))
    }
}

/// Computes the annotated type of an elaborated expression.
pub fn analyze(ctx: &ACtx, e: &Expr) -> Result<AType, AnalysisError> {
    let mut scope: Vec<(String, AType)> = ctx.iter().map(|(n, t)| (n.to_owned(), t.clone())).collect();
    infer(&mut scope, e)
}

fn infer(scope: &mut Vec<(String, AType)>, e: &Expr) -> Result<AType, AnalysisError> {
    let none = Annotation::new;
    Ok(match e {
        Expr::Var(x) => scope
            .iter()
            .rev()
            .find(|(n, _)| n == x)
            .map(|(_, t)| t.clone())
            .ok_or_else(|| TypeError::Unbound(x.clone()))?,
        Expr::Let(x, e1, e2) => {
            let t1 = infer(scope, e1)?;
            scope.push((x.clone(), t1));
            let t2 = infer(scope, e2);
            scope.pop();
            t2?
        }
        Expr::Int(_) => AType::int(none()),
        Expr::Bool(_) => AType::boolean(none()),
        Expr::Add(a, b) => {
            let (ta, tb) = (infer(scope, a)?, infer(scope, b)?);
            expect_int(&ta)?;
            expect_int(&tb)?;
            AType::int(ta.ann.union(&tb.ann).cloned().collect())
        }
        Expr::Sum(a) => {
            let (elem, phi) = bag_parts(infer(scope, a)?)?;
            expect_int(&elem)?;
            AType::int(elem.ann.union(&phi).cloned().collect())
        }
        Expr::Not(a) => {
            let ta = infer(scope, a)?;
            expect_bool(&ta)?;
            ta
        }
        Expr::And(a, b) => {
            let (ta, tb) = (infer(scope, a)?, infer(scope, b)?);
            expect_bool(&ta)?;
            expect_bool(&tb)?;
            AType::boolean(ta.ann.union(&tb.ann).cloned().collect())
        }
        Expr::Eq(a, b) => {
            let (ta, tb) = (infer(scope, a)?, infer(scope, b)?);
            compatible(&ta, &tb)?;
            AType::boolean(ta.colors().union(&tb.colors()).cloned().collect())
        }
        Expr::If(c, t, f) => {
            let tc = infer(scope, c)?;
            expect_bool(&tc)?;
            let (tt, tf) = (infer(scope, t)?, infer(scope, f)?);
            compatible(&tt, &tf)?;
            merge_types(&tt, &tf)?.with_added(&tc.ann)
        }
        Expr::Record(fields) => {
            let mut out = Vec::with_capacity(fields.len());
            for (n, fe) in fields {
                out.push((n.clone(), infer(scope, fe)?));
            }
            AType::record(out, none())
        }
        Expr::Proj(a, field) => {
            let ta = infer(scope, a)?;
            let ft = ta.field(field).cloned().ok_or_else(|| TypeError::NoField {
                field: field.clone(),
                ty: ta.erase().to_string(),
            })?;
            ft.with_added(&ta.ann)
        }
        Expr::Empty(Some(t)) => AType::bag(AType::least(t), none()),
        Expr::Empty(None) => return Err(AnalysisError::Unelaborated),
        Expr::Singleton(a) => AType::bag(infer(scope, a)?, none()),
        Expr::Union(a, b) => {
            let (ea, pa) = bag_parts(infer(scope, a)?)?;
            let (eb, pb) = bag_parts(infer(scope, b)?)?;
            compatible(&ea, &eb)?;
            AType::bag(merge_types(&ea, &eb)?, pa.union(&pb).cloned().collect())
        }
        Expr::Diff(a, b) => {
            let (ea, pa) = bag_parts(infer(scope, a)?)?;
            let (eb, pb) = bag_parts(infer(scope, b)?)?;
            compatible(&ea, &eb)?;
            let mut top = ea.colors();
            top.extend(pa);
            top.extend(eb.colors());
            top.extend(pb);
            AType::bag(ea, top)
        }
        Expr::Comp { body, var, source } => {
            let (elem, phi) = bag_parts(infer(scope, source)?)?;
            scope.push((var.clone(), elem));
            let tb = infer(scope, body);
            scope.pop();
            AType::bag(tb?, phi)
        }
        Expr::Flatten(a) => {
            let (inner, outer_phi) = bag_parts(infer(scope, a)?)?;
            let (elem, inner_phi) = bag_parts(inner)?;
            AType::bag(elem, outer_phi.union(&inner_phi).cloned().collect())
        }
    })
}

impl fmt::Display for AType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.raw {
            RawType::Int => f.write_str("int")?,
            RawType::Bool => f.write_str("bool")?,
            RawType::Record(fs) => {
                f.write_str("(")?;
                for (i, (n, t)) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{n}: {t}")?;
                }
                f.write_str(")")?;
            }
            RawType::Bag(e) => write!(f, "{{{e}}}")?,
        }
        write_ann(f, &self.ann)
    }
}

/// Parses the annotated type syntax, e.g. `{(A: int^{a}, B: int^{b})}^{c}`.
/// A missing `^{...}` means the empty annotation.
pub fn parse_atype(text: &str) -> Result<AType, SyntaxError> {
    let mut p = TypeText { src: text, pos: 0 };
    let t = p.atype()?;
    p.skip_ws();
    if p.pos < text.len() {
        return p.fail("end of input");
    }
    Ok(t)
}

struct TypeText<'a> {
    src: &'a str,
    pos: usize,
}

impl TypeText<'_> {
    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn fail<T>(&self, expected: &str) -> Result<T, SyntaxError> {
        let before = &self.src[..self.pos];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        let found = match self.rest().chars().next() {
            Some(c) => format!("`{c}`"),
            None => "end of input".to_owned(),
        };
        Err(SyntaxError {
            line,
            column,
            expected: expected.to_owned(),
            found,
        })
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), SyntaxError> {
        if self.eat(s) {
            Ok(())
        } else {
            self.fail(&format!("`{s}`"))
        }
    }

    fn ident(&mut self) -> Result<String, SyntaxError> {
        self.skip_ws();
        let rest = self.rest();
        if !rest.starts_with(is_ident_start) {
            return self.fail("identifier");
        }
        let len = rest.find(|c| !is_ident_char(c)).unwrap_or(rest.len());
        let word = rest[..len].to_owned();
        self.pos += len;
        Ok(word)
    }

    fn keyword(&mut self, kw: &str) -> bool {
        self.skip_ws();
        let rest = self.rest();
        let ok = rest.starts_with(kw) && !rest[kw.len()..].starts_with(is_ident_char);
        if ok {
            self.pos += kw.len();
        }
        ok
    }

    fn atype(&mut self) -> Result<AType, SyntaxError> {
        let raw = if self.keyword("int") {
            RawType::Int
        } else if self.keyword("bool") {
            RawType::Bool
        } else if self.eat("{") {
            let elem = self.atype()?;
            self.expect("}")?;
            RawType::Bag(Box::new(elem))
        } else if self.eat("(") {
            let mut fields: Vec<(String, AType)> = Vec::new();
            if !self.eat(")") {
                loop {
                    let name = self.ident()?;
                    if fields.iter().any(|(n, _)| *n == name) {
                        return self.fail("distinct field names");
                    }
                    self.expect(":")?;
                    fields.push((name, self.atype()?));
                    if !self.eat(",") {
                        break;
                    }
                }
                self.expect(")")?;
            }
            fields.sort_by(|a, b| a.0.cmp(&b.0));
            RawType::Record(fields)
        } else {
            return self.fail("a type");
        };
        let ann = if self.eat("^") {
            self.annotation()?
        } else {
            Annotation::new()
        };
        Ok(AType::new(raw, ann))
    }

    fn annotation(&mut self) -> Result<Annotation, SyntaxError> {
        self.expect("{")?;
        let mut out = Annotation::new();
        if self.eat("}") {
            return Ok(out);
        }
        loop {
            self.skip_ws();
            let rest = self.rest();
            let len = rest
                .find(|c: char| c == ',' || c == '}' || c.is_whitespace())
                .unwrap_or(rest.len());
            if len == 0 {
                return self.fail("a color");
            }
            out.insert(Color::new(&rest[..len]));
            self.pos += len;
            if !self.eat(",") {
                break;
            }
        }
        self.expect("}")?;
        Ok(out)
    }
}
