//! Self-contained slice bundles for viewers.
//!
//! A bundle holds a query, its annotated input and output, optionally its
//! static annotated type, and the map from colors to the input paths that
//! carry them. Viewers compute slices from it without running queries.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use thiserror::Error;

use crate::analysis::ACtx;
use crate::annot::{erase_env, AEnv};
use crate::json::{
    actx_from_json, actx_to_json, aenv_from_json, aenv_to_json, atype_to_json, avalue_from_json,
    avalue_to_json, color_map_json,
};
use crate::parse::parse_type;
use crate::typecheck::TypeCtx;
use crate::Query;

pub const SCHEMA: &str = "nrcprov/1";

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("unsupported bundle schema `{0}`, expected `{SCHEMA}`")]
    Schema(String),
    #[error("inconsistent bundle: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tool {
    pub name: String,
    pub version: String,
}

/// The static half of a bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticPart {
    /// Annotated context, in annotated-type JSON.
    pub context: Json,
    /// Annotated result type, in annotated-type JSON.
    pub atype: Json,
    /// The same type in text form.
    pub atype_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceBundle {
    pub schema: String,
    pub tool: Tool,
    /// Query source as written.
    pub query: String,
    /// Desugared, elaborated query.
    pub core: String,
    /// Plain types of the input variables.
    pub types: BTreeMap<String, String>,
    /// Plain result type.
    #[serde(rename = "type")]
    pub ty: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<StaticPart>,
    /// Annotated input environment.
    pub input: Json,
    /// Annotated output value.
    pub output: Json,
    /// Each input color with the sorted paths of the nodes carrying it.
    pub colors: BTreeMap<String, Vec<String>>,
    /// Output colors that no input node carries.
    pub synthetic: Vec<String>,
}

impl SliceBundle {
    /// Runs `query` over `input` and packages the result, adding the static
    /// analysis under `actx` when given.
    pub fn build(query: &Query, input: &AEnv, actx: Option<&ACtx>) -> Result<SliceBundle, crate::Error> {
        let output = query.track(input)?;
        let colors = color_map_json(input);
        let synthetic = output
            .colors()
            .iter()
            .map(|c| c.to_string())
            .filter(|c| !colors.contains_key(c))
            .collect();
        let analysis = match actx {
            Some(actx) => {
                let t = query.analyze(actx)?;
                Some(StaticPart {
                    context: actx_to_json(actx),
                    atype: atype_to_json(&t),
                    atype_text: t.to_string(),
                })
            }
            None => None,
        };
        Ok(SliceBundle {
            schema: SCHEMA.to_owned(),
            tool: Tool {
                name: env!("CARGO_PKG_NAME").to_owned(),
                version: env!("CARGO_PKG_VERSION").to_owned(),
            },
            query: query.source.clone(),
            core: query.rendered(),
            types: query
                .ctx
                .iter()
                .map(|(x, t)| (x.to_owned(), t.to_string()))
                .collect(),
            ty: query.ty.to_string(),
            analysis,
            input: aenv_to_json(input),
            output: avalue_to_json(&output),
            colors,
            synthetic,
        })
    }

    pub fn from_json(text: &str) -> Result<SliceBundle, crate::Error> {
        let bundle: SliceBundle = serde_json::from_str(text).map_err(|e| crate::Error::Data(e.into()))?;
        if bundle.schema != SCHEMA {
            return Err(BundleError::Schema(bundle.schema).into());
        }
        Ok(bundle)
    }

    pub fn to_json(&self) -> Json {
        serde_json::to_value(self).expect("bundles serialize")
    }

    pub fn input_env(&self) -> Result<AEnv, crate::Error> {
        Ok(aenv_from_json(&self.input)?)
    }

    /// The plain types of the input variables.
    pub fn type_ctx(&self) -> Result<TypeCtx, crate::Error> {
        self.types
            .iter()
            .map(|(x, t)| Ok((x.clone(), parse_type(t)?)))
            .collect()
    }

    /// The stored query, compiled against the stored types.
    pub fn compile(&self) -> Result<Query, crate::Error> {
        Query::compile(&self.query, &self.type_ctx()?)
    }

    /// The annotated context of the static part, if there is one.
    pub fn context(&self) -> Result<Option<ACtx>, crate::Error> {
        Ok(self
            .analysis
            .as_ref()
            .map(|p| actx_from_json(&p.context))
            .transpose()?)
    }

    /// Checks that the stored output is what the stored query computes from
    /// the stored input and that every output color is accounted for.
    pub fn validate(&self) -> Result<(), crate::Error> {
        let inconsistent = |m: String| crate::Error::from(BundleError::Inconsistent(m));
        if self.schema != SCHEMA {
            return Err(BundleError::Schema(self.schema.clone()).into());
        }
        let query = self.compile()?;
        let input = self.input_env()?;
        let output = avalue_from_json(&self.output)?;
        let plain = query.eval(&erase_env(&input))?;
        if output.erase() != plain {
            return Err(inconsistent(format!(
                "stored output erases to {} but the query yields {plain}",
                output.erase()
            )));
        }
        if query.track(&input)? != output {
            return Err(inconsistent("stored annotations differ from tracking".to_owned()));
        }
        if color_map_json(&input) != self.colors {
            return Err(inconsistent("color map does not match the input".to_owned()));
        }
        for c in output.colors() {
            let c = c.to_string();
            if !self.colors.contains_key(&c) && !self.synthetic.contains(&c) {
                return Err(inconsistent(format!("output color `{c}` is unaccounted for")));
            }
        }
        if let (Some(part), Some(actx)) = (&self.analysis, self.context()?) {
            let t = query.analyze(&actx)?;
            if atype_to_json(&t) != part.atype {
                return Err(inconsistent(
                    "stored annotated type differs from the analysis".to_owned(),
                ));
            }
        }
        Ok(())
    }
}
