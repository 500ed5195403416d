//! API documentation model: primitive-typed parameters, flattened outputs
//! and the corpus container.

mod flatten;
mod load;
mod parse;
mod prune;
mod refine;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::providers::ProviderError;

pub use flatten::{flatten_outputs, FlattenResult, OutputSchema, DEFAULT_MAX_DEPTH};
pub use load::{load_corpus_dir, LoadError, LoadedCorpus};
pub use parse::{parse_api_doc, parse_api_doc_with, ParseOptions, ParsedDoc, Warning};
pub use prune::{prune_outputs, DocumentationOrder, OutputRanker, SimilarityRanker, MAX_OUTPUTS};
pub use refine::{refine_description, refine_missing, Refiner};

#[derive(Debug, Error)]
pub enum DocError {
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("invalid field `{field}`: {reason}")]
    InvalidField { field: String, reason: String },
    #[error("unsupported type {0:?}")]
    UnsupportedType(String),
    #[error("output schema deeper than {limit} levels at `{path}`")]
    DepthExceeded { path: String, limit: usize },
    #[error("duplicate {direction} parameter `{name}` in {api_id}")]
    DuplicateParam {
        api_id: String,
        direction: Direction,
        name: String,
    },
    #[error("duplicate api_id {0}")]
    DuplicateApi(String),
    #[error("api {0} has an empty domain")]
    EmptyDomain(String),
    #[error("parameter {0} does not resolve")]
    UnknownParam(ParamRef),
    #[error("description provider failed for {param}: {source}")]
    Provider {
        param: ParamRef,
        #[source]
        source: ProviderError,
    },
    #[error("description provider returned an empty description for {0}")]
    EmptyDescription(ParamRef),
}

/// The four primitive parameter kinds retained after flattening.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimitiveType {
    Bool,
    Str,
    Float,
    Int,
}

/// Rule-based filtering groups: booleans versus textual/numeric values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TypeCategory {
    Boolean,
    TextNumeric,
}

impl PrimitiveType {
    pub fn as_str(self) -> &'static str {
        match self {
            PrimitiveType::Bool => "bool",
            PrimitiveType::Str => "str",
            PrimitiveType::Float => "float",
            PrimitiveType::Int => "int",
        }
    }

    pub fn category(self) -> TypeCategory {
        match self {
            PrimitiveType::Bool => TypeCategory::Boolean,
            PrimitiveType::Str | PrimitiveType::Float | PrimitiveType::Int => TypeCategory::TextNumeric,
        }
    }
}

impl fmt::Display for PrimitiveType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Maps a raw documentation type onto a [`PrimitiveType`], case-insensitively.
pub fn normalize_type(raw: &str) -> Result<PrimitiveType, DocError> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "str" | "string" => Ok(PrimitiveType::Str),
        "int" | "integer" | "long" => Ok(PrimitiveType::Int),
        "float" | "number" | "double" => Ok(PrimitiveType::Float),
        "bool" | "boolean" => Ok(PrimitiveType::Bool),
        _ => Err(DocError::UnsupportedType(raw.to_string())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Input,
    Output,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Input => "input",
            Direction::Output => "output",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSpec {
    /// Dot path from the schema root, e.g. `artists[].artist_id`.
    pub name: String,
    pub ptype: PrimitiveType,
    #[serde(default)]
    pub description: String,
    pub direction: Direction,
    #[serde(default)]
    pub required: bool,
}

impl ParamSpec {
    pub fn input(name: impl Into<String>, ptype: PrimitiveType, description: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ptype,
            description: description.into(),
            direction: Direction::Input,
            required: false,
        }
    }

    pub fn output(name: impl Into<String>, ptype: PrimitiveType, description: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ptype,
            description: description.into(),
            direction: Direction::Output,
            required: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiDoc {
    pub api_id: String,
    pub domain: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub inputs: Vec<ParamSpec>,
    #[serde(default)]
    pub outputs: Vec<ParamSpec>,
}

impl ApiDoc {
    pub fn params(&self, direction: Direction) -> &[ParamSpec] {
        match direction {
            Direction::Input => &self.inputs,
            Direction::Output => &self.outputs,
        }
    }

    pub fn param(&self, direction: Direction, name: &str) -> Option<&ParamSpec> {
        self.params(direction).iter().find(|p| p.name == name)
    }

    pub fn input(&self, name: &str) -> Option<&ParamSpec> {
        self.param(Direction::Input, name)
    }

    pub fn output(&self, name: &str) -> Option<&ParamSpec> {
        self.param(Direction::Output, name)
    }

    fn param_mut(&mut self, direction: Direction, name: &str) -> Option<&mut ParamSpec> {
        let list = match direction {
            Direction::Input => &mut self.inputs,
            Direction::Output => &mut self.outputs,
        };
        list.iter_mut().find(|p| p.name == name)
    }

    pub fn output_ref(&self, name: &str) -> ParamRef {
        ParamRef::output(&self.api_id, name)
    }

    pub fn input_ref(&self, name: &str) -> ParamRef {
        ParamRef::input(&self.api_id, name)
    }

    /// Checks parameter-name uniqueness per direction.
    pub fn validate(&self) -> Result<(), DocError> {
        if self.domain.trim().is_empty() {
            return Err(DocError::EmptyDomain(self.api_id.clone()));
        }
        for direction in [Direction::Input, Direction::Output] {
            let mut seen = std::collections::HashSet::new();
            for p in self.params(direction) {
                if p.name.is_empty() {
                    return Err(DocError::InvalidField {
                        field: format!("{}.{direction}s", self.api_id),
                        reason: "empty parameter name".into(),
                    });
                }
                if !seen.insert(p.name.as_str()) {
                    return Err(DocError::DuplicateParam {
                        api_id: self.api_id.clone(),
                        direction,
                        name: p.name.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Identity of one parameter within a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParamRef {
    pub api_id: String,
    pub direction: Direction,
    pub param_name: String,
}

impl ParamRef {
    pub fn new(api_id: impl Into<String>, direction: Direction, param_name: impl Into<String>) -> Self {
        Self {
            api_id: api_id.into(),
            direction,
            param_name: param_name.into(),
        }
    }

    pub fn input(api_id: impl Into<String>, param_name: impl Into<String>) -> Self {
        Self::new(api_id, Direction::Input, param_name)
    }

    pub fn output(api_id: impl Into<String>, param_name: impl Into<String>) -> Self {
        Self::new(api_id, Direction::Output, param_name)
    }
}

impl fmt::Display for ParamRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.direction {
            Direction::Input => "in",
            Direction::Output => "out",
        };
        write!(f, "{}[{}].{}", self.api_id, tag, self.param_name)
    }
}

/// An ordered collection of API docs with unique ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    apis: Vec<ApiDoc>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct CorpusFile {
    version: u32,
    apis: Vec<ApiDoc>,
}

impl Corpus {
    pub const FORMAT_VERSION: u32 = 1;

    pub fn new(apis: Vec<ApiDoc>) -> Result<Self, DocError> {
        let mut index = HashMap::with_capacity(apis.len());
        for (i, api) in apis.iter().enumerate() {
            api.validate()?;
            if index.insert(api.api_id.clone(), i).is_some() {
                return Err(DocError::DuplicateApi(api.api_id.clone()));
            }
        }
        Ok(Self { apis, index })
    }

    pub fn apis(&self) -> &[ApiDoc] {
        &self.apis
    }

    pub fn len(&self) -> usize {
        self.apis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.apis.is_empty()
    }

    pub fn get(&self, api_id: &str) -> Option<&ApiDoc> {
        self.index.get(api_id).map(|&i| &self.apis[i])
    }

    pub fn get_mut(&mut self, api_id: &str) -> Option<&mut ApiDoc> {
        self.index.get(api_id).map(|&i| &mut self.apis[i])
    }

    pub fn resolve(&self, r: &ParamRef) -> Option<&ParamSpec> {
        self.get(&r.api_id)?.param(r.direction, &r.param_name)
    }

    pub fn resolve_or_err(&self, r: &ParamRef) -> Result<(&ApiDoc, &ParamSpec), DocError> {
        let doc = self.get(&r.api_id).ok_or_else(|| DocError::UnknownParam(r.clone()))?;
        let spec = doc
            .param(r.direction, &r.param_name)
            .ok_or_else(|| DocError::UnknownParam(r.clone()))?;
        Ok((doc, spec))
    }

    pub fn domain_of(&self, api_id: &str) -> Option<&str> {
        self.get(api_id).map(|d| d.domain.as_str())
    }

    pub fn to_json(&self) -> String {
        let file = CorpusFile {
            version: Self::FORMAT_VERSION,
            apis: self.apis.clone(),
        };
        serde_json::to_string_pretty(&file).expect("corpus serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DocError> {
        let file: CorpusFile = serde_json::from_str(text)?;
        if file.version != Self::FORMAT_VERSION {
            return Err(DocError::InvalidField {
                field: "version".into(),
                reason: format!("unsupported corpus version {}", file.version),
            });
        }
        Self::new(file.apis)
    }
}
