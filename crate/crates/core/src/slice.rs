//! Forward and backward data slices.
//!
//! Paths name nodes of values (`R[0].A`, `result[1]`) and of annotated
//! types (`R.elem.A`). Bag indices refer to canonical element order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::analysis::{ACtx, AType, RawType};
use crate::annot::{AEnv, AValue, Annotation, Color, Raw};
use crate::parse::{is_ident_char, is_ident_start};

/// The root name used for query outputs.
pub const RESULT: &str = "result";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("malformed path `{0}`")]
    Syntax(String),
    #[error("path `{0}` does not resolve")]
    Unresolved(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Step {
    Field(String),
    Index(usize),
}

/// A node address inside a value: a root variable followed by steps.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ValuePath {
    pub root: String,
    pub steps: Vec<Step>,
}

impl ValuePath {
    pub fn root(name: &str) -> ValuePath {
        ValuePath {
            root: name.to_owned(),
            steps: Vec::new(),
        }
    }

    pub fn result() -> ValuePath {
        ValuePath::root(RESULT)
    }

    pub fn field(mut self, name: &str) -> ValuePath {
        self.steps.push(Step::Field(name.to_owned()));
        self
    }

    pub fn index(mut self, i: usize) -> ValuePath {
        self.steps.push(Step::Index(i));
        self
    }

    /// The node of `v` at this path's steps, ignoring the root.
    pub fn resolve<'a>(&self, v: &'a AValue) -> Result<&'a AValue, PathError> {
        let mut node = v;
        for step in &self.steps {
            node = match (step, &node.raw) {
                (Step::Field(f), Raw::Record(_)) => node.field(f),
                (Step::Index(i), Raw::Bag(vs)) => vs.get(*i),
                _ => None,
            }
            .ok_or_else(|| PathError::Unresolved(self.to_string()))?;
        }
        Ok(node)
    }

    /// The node of `env` at this path, starting from the root variable.
    pub fn resolve_env<'a>(&self, env: &'a AEnv) -> Result<&'a AValue, PathError> {
        let v = env
            .get(&self.root)
            .ok_or_else(|| PathError::Unresolved(self.to_string()))?;
        self.resolve(v)
    }
}

impl fmt::Display for ValuePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.root)?;
        for step in &self.steps {
            match step {
                Step::Field(n) => write!(f, ".{n}")?,
                Step::Index(i) => write!(f, "[{i}]")?,
            }
        }
        Ok(())
    }
}

fn take_ident(s: &str) -> Option<(&str, &str)> {
    let mut chars = s.char_indices();
    match chars.next() {
        Some((_, c)) if is_ident_start(c) => {}
        _ => return None,
    }
    let end = chars
        .find(|&(_, c)| !is_ident_char(c))
        .map_or(s.len(), |(i, _)| i);
    Some(s.split_at(end))
}

impl FromStr for ValuePath {
    type Err = PathError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let bad = || PathError::Syntax(text.to_owned());
        let (root, mut rest) = take_ident(text.trim()).ok_or_else(bad)?;
        let mut path = ValuePath::root(root);
        while !rest.is_empty() {
            if let Some(r) = rest.strip_prefix('.') {
                let (name, r) = take_ident(r).ok_or_else(bad)?;
                path.steps.push(Step::Field(name.to_owned()));
                rest = r;
            } else if let Some(r) = rest.strip_prefix('[') {
                let close = r.find(']').ok_or_else(bad)?;
                let i = r[..close].parse().map_err(|_| bad())?;
                path.steps.push(Step::Index(i));
                rest = &r[close + 1..];
            } else {
                return Err(bad());
            }
        }
        Ok(path)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TypeStep {
    Field(String),
    Elem,
}

/// A node address inside an annotated type, written `R.elem.A`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypePath {
    pub root: String,
    pub steps: Vec<TypeStep>,
}

impl TypePath {
    pub fn root(name: &str) -> TypePath {
        TypePath {
            root: name.to_owned(),
            steps: Vec::new(),
        }
    }

    pub fn resolve<'a>(&self, t: &'a AType) -> Result<&'a AType, PathError> {
        let mut node = t;
        for step in &self.steps {
            node = match step {
                TypeStep::Field(f) => node.field(f),
                TypeStep::Elem => node.element(),
            }
            .ok_or_else(|| PathError::Unresolved(self.to_string()))?;
        }
        Ok(node)
    }

    /// The type path that a value path lands on: indices become `elem`.
    pub fn of_value_path(p: &ValuePath) -> TypePath {
        TypePath {
            root: p.root.clone(),
            steps: p
                .steps
                .iter()
                .map(|s| match s {
                    Step::Field(n) => TypeStep::Field(n.clone()),
                    Step::Index(_) => TypeStep::Elem,
                })
                .collect(),
        }
    }
}

impl fmt::Display for TypePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.root)?;
        for step in &self.steps {
            match step {
                TypeStep::Field(n) => write!(f, ".{n}")?,
                TypeStep::Elem => f.write_str(".elem")?,
            }
        }
        Ok(())
    }
}

impl FromStr for TypePath {
    type Err = PathError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let bad = || PathError::Syntax(text.to_owned());
        let mut parts = text.trim().split('.');
        let root = parts.next().filter(|r| is_ident(r)).ok_or_else(bad)?;
        let mut path = TypePath::root(root);
        for part in parts {
            path.steps.push(match part {
                "elem" => TypeStep::Elem,
                f if is_ident(f) => TypeStep::Field(f.to_owned()),
                _ => return Err(bad()),
            });
        }
        Ok(path)
    }
}

fn is_ident(s: &str) -> bool {
    matches!(take_ident(s), Some((_, "")))
}

/// Every node of `v` with its path, in preorder.
pub fn value_nodes<'a>(v: &'a AValue, root: &str) -> Vec<(ValuePath, &'a AValue)> {
    fn walk<'a>(v: &'a AValue, path: &mut ValuePath, out: &mut Vec<(ValuePath, &'a AValue)>) {
        out.push((path.clone(), v));
        match &v.raw {
            Raw::Record(fs) => {
                for (n, fv) in fs {
                    path.steps.push(Step::Field(n.clone()));
                    walk(fv, path, out);
                    path.steps.pop();
                }
            }
            Raw::Bag(vs) => {
                for (i, ev) in vs.iter().enumerate() {
                    path.steps.push(Step::Index(i));
                    walk(ev, path, out);
                    path.steps.pop();
                }
            }
            Raw::Int(_) | Raw::Bool(_) => {}
        }
    }
    let mut out = Vec::new();
    walk(v, &mut ValuePath::root(root), &mut out);
    out
}

/// Every node of an environment with its path.
pub fn env_nodes(env: &AEnv) -> Vec<(ValuePath, &AValue)> {
    env.iter().flat_map(|(k, v)| value_nodes(v, k)).collect()
}

/// Every node of `t` with its path, in preorder.
pub fn type_nodes<'a>(t: &'a AType, root: &str) -> Vec<(TypePath, &'a AType)> {
    fn walk<'a>(t: &'a AType, path: &mut TypePath, out: &mut Vec<(TypePath, &'a AType)>) {
        out.push((path.clone(), t));
        match &t.raw {
            RawType::Record(fs) => {
                for (n, ft) in fs {
                    path.steps.push(TypeStep::Field(n.clone()));
                    walk(ft, path, out);
                    path.steps.pop();
                }
            }
            RawType::Bag(et) => {
                path.steps.push(TypeStep::Elem);
                walk(et, path, out);
                path.steps.pop();
            }
            RawType::Int | RawType::Bool => {}
        }
    }
    let mut out = Vec::new();
    walk(t, &mut TypePath::root(root), &mut out);
    out
}

/// Maps every color of the input to the paths of the nodes carrying it.
pub fn color_paths(env: &AEnv) -> BTreeMap<Color, BTreeSet<ValuePath>> {
    let mut map: BTreeMap<Color, BTreeSet<ValuePath>> = BTreeMap::new();
    for (path, node) in env_nodes(env) {
        for c in &node.ann {
            map.entry(c.clone()).or_default().insert(path.clone());
        }
    }
    map
}

/// The annotation that drives a slice at a node: its own, or with `deep`
/// the union over its subtree.
fn selection(node: &AValue, deep: bool) -> Annotation {
    if deep {
        node.colors()
    } else {
        node.ann.clone()
    }
}

/// Input paths whose annotation meets the annotation of the output node at
/// `at`. The root of `at` names the output and is not checked.
pub fn backward_slice(
    env: &AEnv,
    output: &AValue,
    at: &ValuePath,
    deep: bool,
) -> Result<BTreeSet<ValuePath>, PathError> {
    let phi = selection(at.resolve(output)?, deep);
    Ok(env_nodes(env)
        .into_iter()
        .filter(|(_, node)| !node.ann.is_disjoint(&phi))
        .map(|(p, _)| p)
        .collect())
}

/// Output paths whose annotation contains `c`.
pub fn forward_slice(output: &AValue, c: &Color) -> BTreeSet<ValuePath> {
    value_nodes(output, RESULT)
        .into_iter()
        .filter(|(_, node)| node.ann.contains(c))
        .map(|(p, _)| p)
        .collect()
}

/// Context type paths whose annotation meets the annotation of the node of
/// `ty` at `at`.
pub fn static_slice(
    ctx: &ACtx,
    ty: &AType,
    at: &TypePath,
    deep: bool,
) -> Result<BTreeSet<TypePath>, PathError> {
    let node = at.resolve(ty)?;
    let phi = if deep { node.colors() } else { node.ann.clone() };
    Ok(ctx
        .iter()
        .flat_map(|(x, t)| type_nodes(t, x))
        .filter(|(_, node)| !node.ann.is_disjoint(&phi))
        .map(|(p, _)| p)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::parse_atype;
    use crate::annot::{ann, distinctly_color};
    use crate::value::Value;

    fn p(s: &str) -> ValuePath {
        s.parse().unwrap()
    }

    #[test]
    fn path_syntax_round_trips() {
        for s in ["R", "R[0].A", "result[2]", "x.f[10].g"] {
            assert_eq!(p(s).to_string(), s);
        }
        assert_eq!(p("R[1].B"), ValuePath::root("R").index(1).field("B"));
        for s in ["", "R[", "R[x]", "R..A", "0R", "R.A!"] {
            assert!(s.parse::<ValuePath>().is_err(), "{s}");
        }
        let t: TypePath = "R.elem.A".parse().unwrap();
        assert_eq!(t.to_string(), "R.elem.A");
        assert_eq!(TypePath::of_value_path(&p("R[3].A")), t);
    }

    #[test]
    fn resolving_paths() {
        let v = distinctly_color(
            &Value::bag([Value::record(vec![("A".into(), Value::Int(1))])]),
            "R",
        );
        assert_eq!(p("R[0].A").resolve(&v).unwrap().ann, ann(["R[0].A"]));
        assert!(matches!(p("R[1]").resolve(&v), Err(PathError::Unresolved(_))));
        assert!(p("R.A").resolve(&v).is_err());
    }

    #[test]
    fn slices_follow_annotations() {
        let env = AEnv::from([(
            "x".to_owned(),
            AValue::bag(vec![AValue::int(1, ann(["d"]))], ann(["c"])),
        )]);
        let out = AValue::bag(vec![], ann(["c", "d"]));
        let back = backward_slice(&env, &out, &ValuePath::result(), false).unwrap();
        assert_eq!(back, BTreeSet::from([p("x"), p("x[0]")]));
        assert_eq!(
            forward_slice(&out, &Color::new("d")),
            BTreeSet::from([p("result")])
        );
        assert!(forward_slice(&out, &Color::new("z")).is_empty());

        let three = AValue::int(3, Annotation::new());
        assert!(backward_slice(&env, &three, &ValuePath::result(), true)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn deep_slices_include_the_subtree() {
        let env = AEnv::from([("y".to_owned(), AValue::int(1, ann(["a"])))]);
        let out = AValue::bag(vec![AValue::int(1, ann(["a"]))], Annotation::new());
        let at = ValuePath::result();
        assert!(backward_slice(&env, &out, &at, false).unwrap().is_empty());
        assert_eq!(
            backward_slice(&env, &out, &at, true).unwrap(),
            BTreeSet::from([p("y")])
        );
    }

    #[test]
    fn static_slice_over_context() {
        let ctx: ACtx = [("R".to_owned(), parse_atype("{(A: int^{a}, B: int^{b})}").unwrap())]
            .into_iter()
            .collect();
        let ty = parse_atype("int^{a}").unwrap();
        let got = static_slice(&ctx, &ty, &TypePath::root(RESULT), false).unwrap();
        assert_eq!(got, BTreeSet::from(["R.elem.A".parse().unwrap()]));
    }
}
