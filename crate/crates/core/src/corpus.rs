//! The running example: two small tables, their annotated and typed
//! versions, and the example queries over them. The data lives in the
//! crate's `fixtures` directory and is embedded here.

use serde_json::Value as Json;

use crate::analysis::ACtx;
use crate::annot::{color_env, AEnv, Annotation, Color, ColorSubst};
use crate::eval::Env;
use crate::json::{actx_from_json, aliases_from_json, env_from_json};
use crate::typecheck::TypeCtx;

pub const FIG_JSON: &str = include_str!("../fixtures/fig.json");
pub const FIG_ALIASES_JSON: &str = include_str!("../fixtures/fig-aliases.json");
pub const FIG_CTX_JSON: &str = include_str!("../fixtures/fig-ctx.json");

/// Example queries by name, as stored in `fixtures/<name>.nrc`.
pub const QUERIES: [(&str, &str); 12] = [
    ("piA", include_str!("../fixtures/piA.nrc")),
    ("sigma", include_str!("../fixtures/sigma.nrc")),
    ("product", include_str!("../fixtures/product.nrc")),
    ("PiBE", include_str!("../fixtures/PiBE.nrc")),
    ("union", include_str!("../fixtures/union.nrc")),
    ("diff", include_str!("../fixtures/diff.nrc")),
    ("sumA", include_str!("../fixtures/sumA.nrc")),
    ("count", include_str!("../fixtures/count.nrc")),
    ("count-sigma", include_str!("../fixtures/count-sigma.nrc")),
    ("grouping-x", include_str!("../fixtures/grouping-x.nrc")),
    ("grouping", include_str!("../fixtures/grouping.nrc")),
    ("groupsum", include_str!("../fixtures/groupsum.nrc")),
];

pub fn query(name: &str) -> Option<&'static str> {
    QUERIES.iter().find(|(n, _)| *n == name).map(|(_, q)| *q)
}

fn parse_fixture(text: &str) -> Json {
    serde_json::from_str(text).expect("fixture is valid JSON")
}

/// The plain tables `R` and `S`.
pub fn fig_env() -> Env {
    env_from_json(&parse_fixture(FIG_JSON)).expect("fixture is a valid environment")
}

/// Their plain types.
pub fn fig_types() -> TypeCtx {
    fig_actx().erase()
}

/// Renames the path colors of the distinct coloring to `a1`, `b1`, ...,
/// leaving bags and rows unannotated.
pub fn fig_aliases() -> ColorSubst {
    aliases_from_json(&parse_fixture(FIG_ALIASES_JSON)).expect("fixture is a valid alias file")
}

/// The tables with every field annotated by its own color.
pub fn fig_annotated_env() -> AEnv {
    fig_aliases().apply_env(&color_env(&fig_env()))
}

/// The context annotating columns `A` to `E` with `a` to `e`.
pub fn fig_actx() -> ACtx {
    actx_from_json(&parse_fixture(FIG_CTX_JSON)).expect("fixture is a valid context")
}

/// Sends each value color `a1`, `a2`, ... to its column color `a`.
pub fn column_collapse() -> ColorSubst {
    let mut alpha = ColorSubst::identity();
    for col in ["a", "b", "c", "d", "e"] {
        for i in 1..=3 {
            alpha.set(
                Color::new(format!("{col}{i}")),
                Annotation::from([Color::new(col)]),
            );
        }
    }
    alpha
}
