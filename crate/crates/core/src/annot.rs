//! Colors, annotated values and the operations on them.
//!
//! Every node of an [`AValue`] carries an [`Annotation`], a finite set of
//! [`Color`]s. Bags are kept in canonical order: elements sort by their
//! erasure first and by annotations only to break ties, so the erased
//! layout of a tracked result matches plain evaluation element for element.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::ast::Type;
use crate::slice::{Step, ValuePath};
use crate::value::{Bag, Value};

/// An opaque color token.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Color(String);

impl Color {
    /// # Panics
    ///
    /// Panics on an empty token.
    pub fn new(token: impl Into<String>) -> Color {
        let token = token.into();
        assert!(!token.is_empty(), "color tokens must be non-empty");
        Color(token)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Color {
    fn from(s: &str) -> Color {
        Color::new(s)
    }
}

pub type Annotation = BTreeSet<Color>;

/// Builds an annotation from color names.
pub fn ann<'a, I: IntoIterator<Item = &'a str>>(colors: I) -> Annotation {
    colors.into_iter().map(Color::new).collect()
}

/// An annotated value `w^Φ`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AValue {
    pub raw: Raw,
    pub ann: Annotation,
}

/// The raw part of an annotated value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Raw {
    Int(i64),
    Bool(bool),
    /// Fields sorted by name.
    Record(Vec<(String, AValue)>),
    /// Elements in canonical order; build with [`AValue::bag`].
    Bag(Vec<AValue>),
}

pub type AEnv = BTreeMap<String, AValue>;

fn canonical_sort(elems: &mut [AValue]) {
    elems.sort();
    elems.sort_by_cached_key(AValue::erase);
}

impl AValue {
    pub fn new(raw: Raw, ann: Annotation) -> AValue {
        AValue { raw, ann }
    }

    pub fn int(i: i64, ann: Annotation) -> AValue {
        AValue::new(Raw::Int(i), ann)
    }

    pub fn boolean(b: bool, ann: Annotation) -> AValue {
        AValue::new(Raw::Bool(b), ann)
    }

    pub fn record(mut fields: Vec<(String, AValue)>, ann: Annotation) -> AValue {
        fields.sort_by(|a, b| a.0.cmp(&b.0));
        AValue::new(Raw::Record(fields), ann)
    }

    /// Builds a bag, putting the elements in canonical order.
    pub fn bag(mut elems: Vec<AValue>, ann: Annotation) -> AValue {
        canonical_sort(&mut elems);
        AValue::new(Raw::Bag(elems), ann)
    }

    /// `|v|`: strips every annotation.
    pub fn erase(&self) -> Value {
        match &self.raw {
            Raw::Int(i) => Value::Int(*i),
            Raw::Bool(b) => Value::Bool(*b),
            Raw::Record(fs) => Value::Record(fs.iter().map(|(n, v)| (n.clone(), v.erase())).collect()),
            Raw::Bag(vs) => Value::Bag(vs.iter().map(AValue::erase).collect::<Bag>()),
        }
    }

    /// `‖v‖`: every color occurring anywhere in the value.
    pub fn colors(&self) -> Annotation {
        let mut out = Annotation::new();
        self.collect_colors(&mut out);
        out
    }

    fn collect_colors(&self, out: &mut Annotation) {
        out.extend(self.ann.iter().cloned());
        match &self.raw {
            Raw::Record(fs) => fs.iter().for_each(|(_, v)| v.collect_colors(out)),
            Raw::Bag(vs) => vs.iter().for_each(|v| v.collect_colors(out)),
            Raw::Int(_) | Raw::Bool(_) => {}
        }
    }

    /// `v^{+Ψ}`: adds `extra` to the top-level annotation.
    pub fn with_added(mut self, extra: &Annotation) -> AValue {
        self.ann.extend(extra.iter().cloned());
        self
    }

    pub fn field(&self, name: &str) -> Option<&AValue> {
        match &self.raw {
            Raw::Record(fs) => fs.iter().find(|(n, _)| n == name).map(|(_, v)| v),
            _ => None,
        }
    }

    pub fn elements(&self) -> Option<&[AValue]> {
        match &self.raw {
            Raw::Bag(vs) => Some(vs),
            _ => None,
        }
    }

    /// Whether the erasure of the value inhabits `ty`.
    pub fn has_shape(&self, ty: &Type) -> bool {
        match (&self.raw, ty) {
            (Raw::Int(_), Type::Int) | (Raw::Bool(_), Type::Bool) => true,
            (Raw::Record(vs), Type::Record(ts)) => {
                vs.len() == ts.len() && vs.iter().zip(ts).all(|((n, v), (m, t))| n == m && v.has_shape(t))
            }
            (Raw::Bag(vs), Type::Bag(t)) => vs.iter().all(|v| v.has_shape(t)),
            _ => false,
        }
    }

    /// Annotates every node with the empty set.
    pub fn unannotated(v: &Value) -> AValue {
        let raw = match v {
            Value::Int(i) => Raw::Int(*i),
            Value::Bool(b) => Raw::Bool(*b),
            Value::Record(fs) => Raw::Record(
                fs.iter()
                    .map(|(n, v)| (n.clone(), AValue::unannotated(v)))
                    .collect(),
            ),
            Value::Bag(b) => Raw::Bag(b.iter().map(AValue::unannotated).collect()),
        };
        AValue::new(raw, Annotation::new())
    }
}

/// Free-function form of [`AValue::erase`].
pub fn erase(v: &AValue) -> Value {
    v.erase()
}

/// Free-function form of [`AValue::colors`].
pub fn colors_of(v: &AValue) -> Annotation {
    v.colors()
}

/// Free-function form of [`AValue::with_added`].
pub fn add_annotation(v: &AValue, extra: &Annotation) -> AValue {
    v.clone().with_added(extra)
}

/// Free-function form of [`AValue::has_shape`].
pub fn check_shape(v: &AValue, ty: &Type) -> bool {
    v.has_shape(ty)
}

pub fn erase_env(env: &AEnv) -> BTreeMap<String, Value> {
    env.iter().map(|(k, v)| (k.clone(), v.erase())).collect()
}

pub fn env_colors(env: &AEnv) -> Annotation {
    env.values().flat_map(|v| v.colors()).collect()
}

/// Colors every node of `v` with its own path, rooted at `root`.
///
/// `{(A:1, B:2)}` under root `R` becomes
/// `{(A:1^{R[0].A}, B:2^{R[0].B})^{R[0]}}^{R}`. Bag indices follow the
/// canonical element order, so equal elements get distinct indices.
pub fn distinctly_color(v: &Value, root: &str) -> AValue {
    color_at(v, &mut ValuePath::root(root))
}

fn color_at(v: &Value, path: &mut ValuePath) -> AValue {
    let raw = match v {
        Value::Int(i) => Raw::Int(*i),
        Value::Bool(b) => Raw::Bool(*b),
        Value::Record(fs) => Raw::Record(
            fs.iter()
                .map(|(n, fv)| {
                    path.steps.push(Step::Field(n.clone()));
                    let colored = color_at(fv, path);
                    path.steps.pop();
                    (n.clone(), colored)
                })
                .collect(),
        ),
        Value::Bag(b) => Raw::Bag(
            b.iter()
                .enumerate()
                .map(|(i, ev)| {
                    path.steps.push(Step::Index(i));
                    let colored = color_at(ev, path);
                    path.steps.pop();
                    colored
                })
                .collect(),
        ),
    };
    AValue::new(raw, BTreeSet::from([Color::new(path.to_string())]))
}

/// Distinctly colors every variable of a plain environment.
pub fn color_env(env: &BTreeMap<String, Value>) -> AEnv {
    env.iter()
        .map(|(k, v)| (k.clone(), distinctly_color(v, k)))
        .collect()
}

/// Whether every node carries a singleton annotation and no color repeats.
pub fn is_distinctly_colored(v: &AValue) -> bool {
    fn walk(v: &AValue, seen: &mut BTreeSet<Color>) -> bool {
        if v.ann.len() != 1 || !seen.insert(v.ann.iter().next().unwrap().clone()) {
            return false;
        }
        match &v.raw {
            Raw::Record(fs) => fs.iter().all(|(_, v)| walk(v, seen)),
            Raw::Bag(vs) => vs.iter().all(|v| walk(v, seen)),
            _ => true,
        }
    }
    walk(v, &mut BTreeSet::new())
}

/// A total map from colors to sets of colors; unmapped colors map to
/// themselves.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ColorSubst {
    map: BTreeMap<Color, Annotation>,
}

impl ColorSubst {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn set(&mut self, from: Color, to: Annotation) {
        self.map.insert(from, to);
    }

    pub fn with(mut self, from: &str, to: Annotation) -> Self {
        self.set(Color::new(from), to);
        self
    }

    pub fn image(&self, c: &Color) -> Annotation {
        match self.map.get(c) {
            Some(set) => set.clone(),
            None => BTreeSet::from([c.clone()]),
        }
    }

    /// `α[Φ]`, the union of the images of every color in `phi`.
    pub fn apply_ann(&self, phi: &Annotation) -> Annotation {
        phi.iter().flat_map(|c| self.image(c)).collect()
    }

    /// Applies the substitution at every node.
    pub fn apply(&self, v: &AValue) -> AValue {
        let ann = self.apply_ann(&v.ann);
        match &v.raw {
            Raw::Int(_) | Raw::Bool(_) => AValue::new(v.raw.clone(), ann),
            Raw::Record(fs) => AValue::new(
                Raw::Record(fs.iter().map(|(n, v)| (n.clone(), self.apply(v))).collect()),
                ann,
            ),
            Raw::Bag(vs) => AValue::bag(vs.iter().map(|v| self.apply(v)).collect(), ann),
        }
    }

    pub fn apply_env(&self, env: &AEnv) -> AEnv {
        env.iter().map(|(k, v)| (k.clone(), self.apply(v))).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Color, &Annotation)> {
        self.map.iter()
    }
}

/// Free-function form of [`ColorSubst::apply`].
pub fn apply_subst(alpha: &ColorSubst, v: &AValue) -> AValue {
    alpha.apply(v)
}

/// `v1 ≡_c v2`: the values agree everywhere except possibly below nodes
/// that carry `c` on both sides.
pub fn equal_except_at(v1: &AValue, v2: &AValue, c: &Color) -> bool {
    if v1.ann.contains(c) && v2.ann.contains(c) {
        return true;
    }
    v1.ann == v2.ann && raw_equal_except_at(&v1.raw, &v2.raw, c)
}

fn raw_equal_except_at(w1: &Raw, w2: &Raw, c: &Color) -> bool {
    match (w1, w2) {
        (Raw::Int(a), Raw::Int(b)) => a == b,
        (Raw::Bool(a), Raw::Bool(b)) => a == b,
        (Raw::Record(xs), Raw::Record(ys)) => {
            xs.len() == ys.len()
                && xs
                    .iter()
                    .zip(ys)
                    .all(|((n, x), (m, y))| n == m && equal_except_at(x, y, c))
        }
        (Raw::Bag(xs), Raw::Bag(ys)) => xs.len() == ys.len() && bags_match(xs, ys, c),
        _ => false,
    }
}

// Looks for a perfect matching between the two element lists under `≡_c`,
// using augmenting paths (Kuhn's algorithm). Exact identity pairs are tried
// first since canonical order usually lines them up.
fn bags_match(xs: &[AValue], ys: &[AValue], c: &Color) -> bool {
    let n = xs.len();
    if xs.iter().zip(ys).all(|(x, y)| x == y) {
        return true;
    }
    let adj: Vec<Vec<usize>> = xs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let mut cands: Vec<usize> = (0..n).filter(|&j| equal_except_at(x, &ys[j], c)).collect();
            cands.sort_by_key(|&j| if j == i { Ordering::Less } else { Ordering::Greater });
            cands
        })
        .collect();
    if adj.iter().any(Vec::is_empty) {
        return false;
    }
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let mut visited = vec![false; n];
        if !augment(i, &adj, &mut owner, &mut visited) {
            return false;
        }
    }
    true
}

fn augment(i: usize, adj: &[Vec<usize>], owner: &mut [Option<usize>], visited: &mut [bool]) -> bool {
    for &j in &adj[i] {
        if visited[j] {
            continue;
        }
        visited[j] = true;
        let free = match owner[j] {
            None => true,
            Some(k) => augment(k, adj, owner, visited),
        };
        if free {
            owner[j] = Some(i);
            return true;
        }
    }
    false
}

/// Pointwise `≡_c` on environments with equal domains.
pub fn env_equal_except_at(g1: &AEnv, g2: &AEnv, c: &Color) -> bool {
    g1.len() == g2.len()
        && g1
            .iter()
            .zip(g2)
            .all(|((k1, v1), (k2, v2))| k1 == k2 && equal_except_at(v1, v2, c))
}

impl fmt::Display for AValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.raw {
            Raw::Int(i) => write!(f, "{i}")?,
            Raw::Bool(b) => write!(f, "{b}")?,
            Raw::Record(fs) => {
                f.write_str("(")?;
                for (i, (n, v)) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{n}: {v}")?;
                }
                f.write_str(")")?;
            }
            Raw::Bag(vs) => {
                f.write_str("{")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("}")?;
            }
        }
        write_ann(f, &self.ann)
    }
}

/// Writes `^{a,b}`, or nothing for the empty annotation.
pub(crate) fn write_ann(f: &mut fmt::Formatter<'_>, phi: &Annotation) -> fmt::Result {
    if phi.is_empty() {
        return Ok(());
    }
    f.write_str("^{")?;
    for (i, c) in phi.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{c}")?;
    }
    f.write_str("}")
}
