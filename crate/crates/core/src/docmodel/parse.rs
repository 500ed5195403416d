use serde_json::{Map, Value};

use super::flatten::{flatten_outputs, OutputSchema, DEFAULT_MAX_DEPTH};
use super::prune::{prune_outputs, DocumentationOrder, MAX_OUTPUTS};
use super::{normalize_type, ApiDoc, DocError, ParamSpec};

#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub max_depth: usize,
    pub max_outputs: usize,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            max_depth: DEFAULT_MAX_DEPTH,
            max_outputs: MAX_OUTPUTS,
        }
    }
}

/// A non-fatal observation made while parsing, e.g. a dropped parameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub field: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedDoc {
    pub doc: ApiDoc,
    pub warnings: Vec<Warning>,
}

pub fn parse_api_doc(raw: &str) -> Result<ParsedDoc, DocError> {
    parse_api_doc_with(raw, &ParseOptions::default())
}

/// Parses one API documentation record.
///
/// Accepted shapes: the id comes from `api`, `name`, or `app_name` +
/// `api_name` (joined as `App::Api`); inputs from `parameters`,
/// `query_parameters` or `input_parameters`; outputs from a typed map in
/// `output_parameters` or an example instance in `response_schemas.success`.
/// Output descriptions may be supplied per flattened path in
/// `output_descriptions`.
pub fn parse_api_doc_with(raw: &str, opts: &ParseOptions) -> Result<ParsedDoc, DocError> {
    let value: Value = serde_json::from_str(raw)?;
    let obj = value.as_object().ok_or_else(|| DocError::InvalidField {
        field: "<root>".into(),
        reason: "expected a JSON object".into(),
    })?;
    let mut warnings = Vec::new();

    let api_id = api_id(obj)?;
    let domain = match opt_str(obj, "domain")? {
        Some(d) => d,
        None => opt_str(obj, "app_name")?.ok_or_else(|| DocError::MissingField("domain".into()))?,
    };
    let description = opt_str(obj, "description")?.unwrap_or_default();

    let inputs = parse_inputs(obj, &mut warnings)?;
    let mut outputs = parse_outputs(obj, opts.max_depth, &mut warnings)?;

    if let Some(descs) = obj.get("output_descriptions") {
        let descs = descs.as_object().ok_or_else(|| DocError::InvalidField {
            field: "output_descriptions".into(),
            reason: "expected an object".into(),
        })?;
        for (path, text) in descs {
            let text = text.as_str().ok_or_else(|| DocError::InvalidField {
                field: format!("output_descriptions.{path}"),
                reason: "expected a string".into(),
            })?;
            match outputs.iter_mut().find(|p| &p.name == path) {
                Some(p) => p.description = text.to_string(),
                None => warnings.push(Warning {
                    field: format!("output_descriptions.{path}"),
                    message: "describes no retained output".into(),
                }),
            }
        }
    }

    let doc = ApiDoc {
        api_id,
        domain,
        description,
        inputs,
        outputs: std::mem::take(&mut outputs),
    };
    doc.validate()?;
    let before = doc.outputs.len();
    let doc = prune_outputs(&doc, &DocumentationOrder, opts.max_outputs).map_err(|e| DocError::InvalidField {
        field: "outputs".into(),
        reason: e.to_string(),
    })?;
    if doc.outputs.len() < before {
        warnings.push(Warning {
            field: "outputs".into(),
            message: format!("pruned {} outputs to {}", before, doc.outputs.len()),
        });
    }
    Ok(ParsedDoc { doc, warnings })
}

fn opt_str(obj: &Map<String, Value>, field: &str) -> Result<Option<String>, DocError> {
    match obj.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(other) => Err(DocError::InvalidField {
            field: field.into(),
            reason: format!("expected a string, found {other}"),
        }),
    }
}

fn api_id(obj: &Map<String, Value>) -> Result<String, DocError> {
    if let Some(id) = opt_str(obj, "api")? {
        return non_empty(id, "api");
    }
    if let (Some(app), Some(api)) = (opt_str(obj, "app_name")?, opt_str(obj, "api_name")?) {
        return non_empty(format!("{app}::{api}"), "api_name");
    }
    if let Some(name) = opt_str(obj, "name")? {
        return non_empty(name, "name");
    }
    Err(DocError::MissingField("api".into()))
}

fn non_empty(s: String, field: &str) -> Result<String, DocError> {
    if s.trim().is_empty() {
        Err(DocError::InvalidField {
            field: field.into(),
            reason: "must not be empty".into(),
        })
    } else {
        Ok(s)
    }
}

fn parse_inputs(obj: &Map<String, Value>, warnings: &mut Vec<Warning>) -> Result<Vec<ParamSpec>, DocError> {
    let Some((key, value)) = ["parameters", "query_parameters", "input_parameters"]
        .iter()
        .find_map(|k| obj.get(*k).map(|v| (*k, v)))
    else {
        return Ok(Vec::new());
    };
    let items = value.as_array().ok_or_else(|| DocError::InvalidField {
        field: key.into(),
        reason: "expected a list".into(),
    })?;
    let mut inputs = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let field = format!("{key}[{i}]");
        let p = item.as_object().ok_or_else(|| DocError::InvalidField {
            field: field.clone(),
            reason: "expected an object".into(),
        })?;
        let name = opt_str(p, "name")
            .map_err(|_| invalid(&field, "name", "expected a string"))?
            .filter(|n| !n.is_empty())
            .ok_or_else(|| DocError::MissingField(format!("{field}.name")))?;
        let raw_type = opt_str(p, "type")
            .map_err(|_| invalid(&field, "type", "expected a string"))?
            .ok_or_else(|| DocError::MissingField(format!("{field}.type")))?;
        let description = opt_str(p, "description")
            .map_err(|_| invalid(&field, "description", "expected a string"))?
            .unwrap_or_default();
        let required = match p.get("required") {
            None | Some(Value::Null) => false,
            Some(Value::Bool(b)) => *b,
            Some(_) => return Err(invalid(&field, "required", "expected a boolean")),
        };
        match normalize_type(&raw_type) {
            Ok(ptype) => {
                let mut spec = ParamSpec::input(name, ptype, description);
                spec.required = required;
                inputs.push(spec);
            }
            Err(_) => warnings.push(Warning {
                field: format!("{field} ({name})"),
                message: format!("dropped input with unsupported type {raw_type:?}"),
            }),
        }
    }
    Ok(inputs)
}

fn invalid(field: &str, key: &str, reason: &str) -> DocError {
    DocError::InvalidField {
        field: format!("{field}.{key}"),
        reason: reason.into(),
    }
}

fn parse_outputs(
    obj: &Map<String, Value>,
    max_depth: usize,
    warnings: &mut Vec<Warning>,
) -> Result<Vec<ParamSpec>, DocError> {
    let schema = if let Some(typed) = obj.get("output_parameters") {
        match typed {
            Value::Object(_) => OutputSchema::from_typed(typed, "output_parameters")?,
            Value::Array(items) => typed_list(items)?,
            _ => {
                return Err(DocError::InvalidField {
                    field: "output_parameters".into(),
                    reason: "expected an object or a list".into(),
                })
            }
        }
    } else if let Some(schemas) = obj.get("response_schemas") {
        let success = schemas
            .as_object()
            .ok_or_else(|| DocError::InvalidField {
                field: "response_schemas".into(),
                reason: "expected an object".into(),
            })?
            .get("success");
        match success {
            Some(example) => OutputSchema::from_example(example),
            None => return Ok(Vec::new()),
        }
    } else {
        return Ok(Vec::new());
    };
    let flat = flatten_outputs(&schema, max_depth)?;
    for (path, reason) in flat.dropped {
        warnings.push(Warning {
            field: format!("outputs.{path}"),
            message: format!("dropped output: {reason}"),
        });
    }
    Ok(flat.params)
}

/// `output_parameters` given as a list of `{name, type, description}`.
fn typed_list(items: &[Value]) -> Result<OutputSchema, DocError> {
    let mut entries = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let field = format!("output_parameters[{i}]");
        let p = item.as_object().ok_or_else(|| DocError::InvalidField {
            field: field.clone(),
            reason: "expected an object".into(),
        })?;
        let name = opt_str(p, "name")
            .ok()
            .flatten()
            .ok_or_else(|| DocError::MissingField(format!("{field}.name")))?;
        let schema = match p.get("type") {
            Some(t) => OutputSchema::from_typed(t, &format!("{field}.type"))?,
            None => return Err(DocError::MissingField(format!("{field}.type"))),
        };
        entries.push((name, schema));
    }
    Ok(OutputSchema::Object(entries))
}
