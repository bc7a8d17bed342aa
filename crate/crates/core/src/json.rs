//! JSON wire formats for values, annotated values, contexts and aliases.
//!
//! Plain values: numbers, booleans, objects for records and
//! `{"bag": [...]}` for bags. Annotated values: every node is
//! `{"w": raw, "ann": [...]}` where raw is a number, a boolean,
//! `{"rec": {...}}` or `{"bag": [...]}`. Annotated contexts use the same
//! layout with `"t"` in place of `"w"` and `"int"`/`"bool"` leaves, or an
//! annotated type string.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value as Json};
use thiserror::Error;

use crate::analysis::{parse_atype, ACtx, AType, RawType};
use crate::annot::{AEnv, AValue, Annotation, Color, ColorSubst, Raw};
use crate::ast::Type;
use crate::eval::Env;
use crate::slice::{env_nodes, ValuePath};
use crate::typecheck::TypeCtx;
use crate::value::{Bag, Value};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{at}: {message}")]
    Format { at: String, message: String },
}

fn format_err<T>(at: &str, message: impl Into<String>) -> Result<T, DataError> {
    Err(DataError::Format {
        at: at.to_owned(),
        message: message.into(),
    })
}

fn object<'a>(j: &'a Json, at: &str) -> Result<&'a Map<String, Json>, DataError> {
    match j {
        Json::Object(m) => Ok(m),
        _ => format_err(at, "expected an object"),
    }
}

fn int(n: &serde_json::Number, at: &str) -> Result<i64, DataError> {
    match n.as_i64() {
        Some(i) => Ok(i),
        None => format_err(at, format!("{n} is not a 64-bit integer")),
    }
}

fn bag_items<'a>(m: &'a Map<String, Json>, at: &str) -> Option<Result<&'a Vec<Json>, DataError>> {
    if m.len() != 1 {
        return None;
    }
    m.get("bag").map(|items| match items {
        Json::Array(xs) => Ok(xs),
        _ => format_err(at, "`bag` must hold an array"),
    })
}

pub fn value_to_json(v: &Value) -> Json {
    match v {
        Value::Int(i) => json!(i),
        Value::Bool(b) => json!(b),
        Value::Record(fs) => Json::Object(fs.iter().map(|(n, v)| (n.clone(), value_to_json(v))).collect()),
        Value::Bag(b) => json!({ "bag": b.iter().map(value_to_json).collect::<Vec<_>>() }),
    }
}

pub fn value_from_json(j: &Json) -> Result<Value, DataError> {
    value_at(j, "$")
}

fn value_at(j: &Json, at: &str) -> Result<Value, DataError> {
    match j {
        Json::Number(n) => Ok(Value::Int(int(n, at)?)),
        Json::Bool(b) => Ok(Value::Bool(*b)),
        Json::Object(m) => {
            if let Some(items) = bag_items(m, at) {
                let mut bag = Bag::new();
                for (i, x) in items?.iter().enumerate() {
                    bag.insert(value_at(x, &format!("{at}[{i}]"))?, 1);
                }
                return Ok(Value::Bag(bag));
            }
            let fields = m
                .iter()
                .map(|(n, x)| Ok((n.clone(), value_at(x, &format!("{at}.{n}"))?)))
                .collect::<Result<_, DataError>>()?;
            Ok(Value::record(fields))
        }
        _ => format_err(at, "expected a number, boolean, record or bag"),
    }
}

pub fn env_to_json(env: &Env) -> Json {
    Json::Object(env.iter().map(|(k, v)| (k.clone(), value_to_json(v))).collect())
}

pub fn env_from_json(j: &Json) -> Result<Env, DataError> {
    object(j, "$")?
        .iter()
        .map(|(k, v)| Ok((k.clone(), value_at(v, k)?)))
        .collect()
}

fn ann_to_json(phi: &Annotation) -> Json {
    Json::Array(phi.iter().map(|c| json!(c.as_str())).collect())
}

fn ann_from_json(j: Option<&Json>, at: &str) -> Result<Annotation, DataError> {
    match j {
        None | Some(Json::Null) => Ok(Annotation::new()),
        Some(Json::Array(xs)) => xs
            .iter()
            .map(|x| match x {
                Json::String(s) if !s.is_empty() => Ok(Color::new(s.as_str())),
                _ => format_err(at, "colors must be non-empty strings"),
            })
            .collect(),
        Some(_) => format_err(at, "`ann` must be an array of colors"),
    }
}

pub fn avalue_to_json(v: &AValue) -> Json {
    let w = match &v.raw {
        Raw::Int(i) => json!(i),
        Raw::Bool(b) => json!(b),
        Raw::Record(fs) => {
            let rec: Map<_, _> = fs.iter().map(|(n, v)| (n.clone(), avalue_to_json(v))).collect();
            json!({ "rec": rec })
        }
        Raw::Bag(vs) => json!({ "bag": vs.iter().map(avalue_to_json).collect::<Vec<_>>() }),
    };
    json!({ "w": w, "ann": ann_to_json(&v.ann) })
}

pub fn avalue_from_json(j: &Json) -> Result<AValue, DataError> {
    avalue_at(j, "$")
}

fn avalue_at(j: &Json, at: &str) -> Result<AValue, DataError> {
    let m = object(j, at)?;
    if let Some(k) = m.keys().find(|k| *k != "w" && *k != "ann") {
        return format_err(at, format!("unexpected key `{k}`"));
    }
    let ann = ann_from_json(m.get("ann"), at)?;
    let Some(w) = m.get("w") else {
        return format_err(at, "missing `w`");
    };
    let raw = match w {
        Json::Number(n) => Raw::Int(int(n, at)?),
        Json::Bool(b) => Raw::Bool(*b),
        Json::Object(wm) if wm.len() == 1 => match wm.iter().next() {
            Some((k, Json::Object(fs))) if k == "rec" => Raw::Record(
                fs.iter()
                    .map(|(n, x)| Ok((n.clone(), avalue_at(x, &format!("{at}.{n}"))?)))
                    .collect::<Result<_, DataError>>()?,
            ),
            Some((k, Json::Array(xs))) if k == "bag" => {
                let elems = xs
                    .iter()
                    .enumerate()
                    .map(|(i, x)| avalue_at(x, &format!("{at}[{i}]")))
                    .collect::<Result<_, _>>()?;
                return Ok(AValue::bag(elems, ann));
            }
            _ => return format_err(at, "raw value must be {\"rec\": {...}} or {\"bag\": [...]}"),
        },
        _ => return format_err(at, "raw value must be a number, boolean, record or bag"),
    };
    Ok(match raw {
        Raw::Record(fs) => AValue::record(fs, ann),
        raw => AValue::new(raw, ann),
    })
}

pub fn aenv_to_json(env: &AEnv) -> Json {
    Json::Object(env.iter().map(|(k, v)| (k.clone(), avalue_to_json(v))).collect())
}

pub fn aenv_from_json(j: &Json) -> Result<AEnv, DataError> {
    object(j, "$")?
        .iter()
        .map(|(k, v)| Ok((k.clone(), avalue_at(v, k)?)))
        .collect()
}

pub fn atype_to_json(t: &AType) -> Json {
    let raw = match &t.raw {
        RawType::Int => json!("int"),
        RawType::Bool => json!("bool"),
        RawType::Record(fs) => {
            let rec: Map<_, _> = fs.iter().map(|(n, t)| (n.clone(), atype_to_json(t))).collect();
            json!({ "rec": rec })
        }
        RawType::Bag(e) => json!({ "bag": atype_to_json(e) }),
    };
    json!({ "t": raw, "ann": ann_to_json(&t.ann) })
}

fn atype_at(j: &Json, at: &str) -> Result<AType, DataError> {
    if let Json::String(s) = j {
        return parse_atype(s).or_else(|e| format_err(at, e.to_string()));
    }
    let m = object(j, at)?;
    let ann = ann_from_json(m.get("ann"), at)?;
    let raw = match m.get("t") {
        Some(Json::String(s)) if s == "int" => RawType::Int,
        Some(Json::String(s)) if s == "bool" => RawType::Bool,
        Some(Json::Object(tm)) if tm.len() == 1 => match tm.iter().next() {
            Some((k, Json::Object(fs))) if k == "rec" => {
                let fields = fs
                    .iter()
                    .map(|(n, x)| Ok((n.clone(), atype_at(x, &format!("{at}.{n}"))?)))
                    .collect::<Result<_, DataError>>()?;
                return Ok(AType::record(fields, ann));
            }
            Some((k, e)) if k == "bag" => RawType::Bag(Box::new(atype_at(e, &format!("{at}.elem"))?)),
            _ => return format_err(at, "type must be {\"rec\": {...}} or {\"bag\": ...}"),
        },
        _ => return format_err(at, "missing or malformed `t`"),
    };
    Ok(AType::new(raw, ann))
}

pub fn atype_from_json(j: &Json) -> Result<AType, DataError> {
    atype_at(j, "$")
}

/// Reads an annotated context: variable to annotated type, given either as
/// JSON nodes or as strings such as `"{(A: int^{a})}"`. Plain type strings
/// are annotated types with empty annotations.
pub fn actx_from_json(j: &Json) -> Result<ACtx, DataError> {
    object(j, "$")?
        .iter()
        .map(|(k, v)| Ok((k.clone(), atype_at(v, k)?)))
        .collect()
}

pub fn actx_to_json(ctx: &ACtx) -> Json {
    Json::Object(
        ctx.iter()
            .map(|(k, t)| (k.to_owned(), atype_to_json(t)))
            .collect(),
    )
}

/// Reads an alias file: value path to color (a string), colors (an array)
/// or no color (`null` or `[]`). The result replaces the annotation of each
/// listed node of a distinctly colored environment.
pub fn aliases_from_json(j: &Json) -> Result<ColorSubst, DataError> {
    let mut alpha = ColorSubst::identity();
    for (path, target) in object(j, "$")? {
        if let Err(e) = path.parse::<ValuePath>() {
            return format_err(path, e.to_string());
        }
        let to = match target {
            Json::String(s) if !s.is_empty() => Annotation::from([Color::new(s.as_str())]),
            other => ann_from_json(Some(other), path)?,
        };
        alpha.set(Color::new(path.as_str()), to);
    }
    Ok(alpha)
}

/// Infers the type of every variable of a plain environment. Element types
/// of empty bags are taken from sibling elements when there are any.
pub fn infer_env_types(env: &Env) -> Result<TypeCtx, DataError> {
    env.iter()
        .map(|(k, v)| match infer(v, k)? {
            Some(t) => Ok((k.clone(), t)),
            None => format_err(k, "cannot infer the element type of an empty bag; supply --ctx"),
        })
        .collect()
}

/// `None` stands for an unknown type inside empty bags.
fn infer(v: &Value, at: &str) -> Result<Option<Type>, DataError> {
    Ok(match v {
        Value::Int(_) => Some(Type::Int),
        Value::Bool(_) => Some(Type::Bool),
        Value::Record(fs) => {
            let mut out = Vec::with_capacity(fs.len());
            for (n, fv) in fs {
                match infer(fv, &format!("{at}.{n}"))? {
                    Some(t) => out.push((n.clone(), t)),
                    None => return Ok(None),
                }
            }
            Some(Type::Record(out))
        }
        Value::Bag(b) => {
            let mut elem: Option<Type> = None;
            for (i, (ev, _)) in b.entries().enumerate() {
                let here = format!("{at}[{i}]");
                if let Some(t) = infer(ev, &here)? {
                    match &elem {
                        Some(prev) if *prev != t => {
                            return format_err(&here, format!("expected {prev}, found {t}"));
                        }
                        _ => elem = Some(t),
                    }
                }
            }
            match elem {
                Some(t) if b.entries().all(|(ev, _)| ev.has_type(&t)) => Some(Type::bag(t)),
                Some(t) => return format_err(at, format!("elements do not all have type {t}")),
                None => None,
            }
        }
    })
}

/// Maps every color of an environment to the sorted list of paths carrying
/// it, as strings.
pub fn color_map_json(env: &AEnv) -> BTreeMap<String, Vec<String>> {
    let mut map: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (path, node) in env_nodes(env) {
        for c in &node.ann {
            map.entry(c.to_string()).or_default().push(path.to_string());
        }
    }
    map.values_mut().for_each(|ps| ps.sort());
    map
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annot::ann;

    fn j(s: &str) -> Json {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn plain_round_trip() {
        let v = value_from_json(&j(r#"{"bag": [{"A": 1, "B": true}, {"A": 1, "B": true}]}"#)).unwrap();
        let Value::Bag(b) = &v else { panic!() };
        assert_eq!(b.len(), 2);
        assert_eq!(value_from_json(&value_to_json(&v)).unwrap(), v);
        assert!(value_from_json(&j("1.5")).is_err());
        assert!(value_from_json(&j("[1]")).is_err());
        assert!(value_from_json(&j(r#"{"bag": 1}"#)).is_err());
    }

    #[test]
    fn a_record_with_a_bag_field_is_not_a_bag() {
        let v = value_from_json(&j(r#"{"bag": {"bag": []}, "x": 1}"#)).unwrap();
        assert!(matches!(v, Value::Record(_)));
    }

    #[test]
    fn annotated_round_trip() {
        let text =
            r#"{"w": {"bag": [{"w": {"rec": {"A": {"w": 1, "ann": ["a1"]}}}, "ann": []}]}, "ann": ["c"]}"#;
        let v = avalue_from_json(&j(text)).unwrap();
        assert_eq!(v.ann, ann(["c"]));
        assert_eq!(v.to_string(), "{(A: 1^{a1})}^{c}");
        assert_eq!(avalue_from_json(&avalue_to_json(&v)).unwrap(), v);
        assert!(avalue_from_json(&j(r#"{"w": 1, "ann": [""]}"#)).is_err());
        assert!(avalue_from_json(&j(r#"{"w": 1, "x": 2}"#)).is_err());
    }

    #[test]
    fn contexts_from_strings_and_nodes() {
        let ctx = actx_from_json(&j(
            r#"{"R": "{(A: int^{a})}", "x": {"t": {"bag": {"t": "int", "ann": ["b"]}}, "ann": []}}"#,
        ))
        .unwrap();
        assert_eq!(ctx.get("R").unwrap().to_string(), "{(A: int^{a})}");
        assert_eq!(ctx.get("x").unwrap().to_string(), "{int^{b}}");
        let back = actx_from_json(&actx_to_json(&ctx)).unwrap();
        assert_eq!(back.get("x"), ctx.get("x"));
    }

    #[test]
    fn type_inference_for_data() {
        let env = env_from_json(&j(
            r#"{"R": {"bag": [{"A": {"bag": []}}, {"A": {"bag": [1]}}]}, "n": 3}"#,
        ))
        .unwrap();
        let ctx = infer_env_types(&env).unwrap();
        assert_eq!(ctx.get("R").unwrap().to_string(), "{(A: {int})}");
        assert!(infer_env_types(&env_from_json(&j(r#"{"R": {"bag": []}}"#)).unwrap()).is_err());
        assert!(infer_env_types(&env_from_json(&j(r#"{"R": {"bag": [1, true]}}"#)).unwrap()).is_err());
    }

    #[test]
    fn alias_files() {
        let alpha = aliases_from_json(&j(r#"{"R[0].A": "a1", "R": null, "R[0]": ["x", "y"]}"#)).unwrap();
        assert_eq!(alpha.image(&Color::new("R[0].A")), ann(["a1"]));
        assert!(alpha.image(&Color::new("R")).is_empty());
        assert_eq!(alpha.image(&Color::new("R[0]")), ann(["x", "y"]));
        assert!(aliases_from_json(&j(r#"{"R[": "a"}"#)).is_err());
    }
}
