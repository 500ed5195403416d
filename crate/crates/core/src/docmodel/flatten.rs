use serde_json::Value;

use super::{normalize_type, DocError, ParamSpec};

pub const DEFAULT_MAX_DEPTH: usize = 6;

/// A nested output schema prior to flattening.
#[derive(Debug, Clone, PartialEq)]
pub enum OutputSchema {
    /// A raw type name, possibly unsupported (`"object"`, `"datetime"`).
    Leaf(String),
    Object(Vec<(String, OutputSchema)>),
    List(Box<OutputSchema>),
    /// A leaf whose type cannot be determined (null example, empty list).
    Unknown,
}

impl OutputSchema {
    /// Reads a typed map: string values are type names, objects nest and a
    /// list's first element describes its items.
    pub fn from_typed(value: &Value, field: &str) -> Result<Self, DocError> {
        match value {
            Value::String(s) => Ok(OutputSchema::Leaf(s.clone())),
            Value::Object(map) => map
                .iter()
                .map(|(k, v)| Ok((k.clone(), Self::from_typed(v, &format!("{field}.{k}"))?)))
                .collect::<Result<Vec<_>, DocError>>()
                .map(OutputSchema::Object),
            Value::Array(items) => match items.first() {
                Some(first) => Ok(OutputSchema::List(Box::new(Self::from_typed(
                    first,
                    &format!("{field}[]"),
                )?))),
                None => Ok(OutputSchema::Unknown),
            },
            Value::Null => Ok(OutputSchema::Unknown),
            other => Err(DocError::InvalidField {
                field: field.to_string(),
                reason: format!("expected a type name, object or list, found {other}"),
            }),
        }
    }

    /// Infers a schema from an example instance: strings are `str`, integral
    /// numbers `int`, other numbers `float`.
    pub fn from_example(value: &Value) -> Self {
        match value {
            Value::String(_) => OutputSchema::Leaf("str".into()),
            Value::Bool(_) => OutputSchema::Leaf("bool".into()),
            Value::Number(n) if n.is_i64() || n.is_u64() => OutputSchema::Leaf("int".into()),
            Value::Number(_) => OutputSchema::Leaf("float".into()),
            Value::Object(map) => {
                OutputSchema::Object(map.iter().map(|(k, v)| (k.clone(), Self::from_example(v))).collect())
            }
            Value::Array(items) => match items.first() {
                Some(first) => OutputSchema::List(Box::new(Self::from_example(first))),
                None => OutputSchema::Unknown,
            },
            Value::Null => OutputSchema::Unknown,
        }
    }

    /// The flat schema whose keys are the given parameters' names.
    pub fn from_params(params: &[ParamSpec]) -> Self {
        OutputSchema::Object(
            params
                .iter()
                .map(|p| (p.name.clone(), OutputSchema::Leaf(p.ptype.as_str().into())))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlattenResult {
    pub params: Vec<ParamSpec>,
    /// `(path, reason)` for every non-primitive leaf that was dropped.
    pub dropped: Vec<(String, String)>,
}

/// Flattens a nested output schema into primitive-typed output parameters.
///
/// Object keys join with `.`; each list level appends `[]` to the path. A
/// list at the root contributes no segment, so a root list of records yields
/// the record fields directly. Leaves without a primitive type are dropped.
pub fn flatten_outputs(schema: &OutputSchema, max_depth: usize) -> Result<FlattenResult, DocError> {
    let mut out = FlattenResult::default();
    walk(schema, String::new(), 0, max_depth, &mut out)?;
    Ok(out)
}

fn walk(
    node: &OutputSchema,
    path: String,
    depth: usize,
    max_depth: usize,
    out: &mut FlattenResult,
) -> Result<(), DocError> {
    match node {
        OutputSchema::Object(entries) => {
            if depth + 1 > max_depth && !entries.is_empty() {
                return Err(DocError::DepthExceeded {
                    path: if path.is_empty() { "<root>".into() } else { path },
                    limit: max_depth,
                });
            }
            for (key, child) in entries {
                let child_path = if path.is_empty() {
                    key.clone()
                } else {
                    format!("{path}.{key}")
                };
                walk(child, child_path, depth + 1, max_depth, out)?;
            }
        }
        OutputSchema::List(inner) => {
            if depth + 1 > max_depth {
                return Err(DocError::DepthExceeded {
                    path: if path.is_empty() { "<root>".into() } else { path },
                    limit: max_depth,
                });
            }
            let child_path = if depth == 0 { path } else { format!("{path}[]") };
            walk(inner, child_path, depth + 1, max_depth, out)?;
        }
        OutputSchema::Leaf(raw) => {
            let name = if path.is_empty() { "result".to_string() } else { path };
            match normalize_type(raw) {
                Ok(ptype) => out.params.push(ParamSpec::output(name, ptype, "")),
                Err(_) => out.dropped.push((name, format!("unsupported type {raw:?}"))),
            }
        }
        OutputSchema::Unknown => {
            let name = if path.is_empty() { "result".to_string() } else { path };
            out.dropped.push((name, "type cannot be determined".into()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::docmodel::PrimitiveType;
    use crate::docmodel::PrimitiveType::*;
    use serde_json::json;

    fn names(schema: Value) -> Vec<(String, PrimitiveType)> {
        let s = OutputSchema::from_typed(&schema, "outputs").unwrap();
        flatten_outputs(&s, DEFAULT_MAX_DEPTH)
            .unwrap()
            .params
            .into_iter()
            .map(|p| (p.name, p.ptype))
            .collect()
    }

    #[test]
    fn flat_schema_passes_through() {
        assert_eq!(names(json!({"a": "int"})), vec![("a".into(), Int)]);
    }

    #[test]
    fn nested_objects_join_with_dots() {
        assert_eq!(
            names(json!({"u": {"id": "str", "ok": "bool"}})),
            vec![("u.id".into(), Str), ("u.ok".into(), Bool)]
        );
    }

    #[test]
    fn list_items_get_bracket_segment() {
        assert_eq!(names(json!({"xs": [{"v": "float"}]})), vec![("xs[].v".into(), Float)]);
        assert_eq!(
            names(json!({"filing": {"date": "str", "amounts": ["float"]}})),
            vec![("filing.date".into(), Str), ("filing.amounts[]".into(), Float)]
        );
        assert_eq!(names(json!({"m": [["int"]]})), vec![("m[][]".into(), Int)]);
    }

    #[test]
    fn root_list_of_records_yields_fields() {
        let example = json!([{"contact_id": 1, "first_name": "string"}]);
        let s = OutputSchema::from_example(&example);
        let r = flatten_outputs(&s, DEFAULT_MAX_DEPTH).unwrap();
        let got: Vec<_> = r.params.iter().map(|p| (p.name.as_str(), p.ptype)).collect();
        assert_eq!(got, vec![("contact_id", Int), ("first_name", Str)]);
    }

    #[test]
    fn example_values_infer_types() {
        let example = json!({"n": 2.5, "ok": true, "gone": null, "tags": []});
        let s = OutputSchema::from_example(&example);
        let r = flatten_outputs(&s, DEFAULT_MAX_DEPTH).unwrap();
        let got: Vec<_> = r.params.iter().map(|p| (p.name.as_str(), p.ptype)).collect();
        assert_eq!(got, vec![("n", Float), ("ok", Bool)]);
        assert_eq!(r.dropped.len(), 2);
    }

    #[test]
    fn unsupported_leaves_are_dropped() {
        let s = OutputSchema::from_typed(&json!({"a": "object", "b": "str"}), "o").unwrap();
        let r = flatten_outputs(&s, DEFAULT_MAX_DEPTH).unwrap();
        assert_eq!(r.params.len(), 1);
        assert_eq!(
            r.dropped,
            vec![("a".to_string(), "unsupported type \"object\"".to_string())]
        );
    }

    #[test]
    fn depth_limit_reports_path() {
        let schema = json!({"a": {"b": {"c": "int"}}});
        let s = OutputSchema::from_typed(&schema, "o").unwrap();
        assert!(flatten_outputs(&s, 3).is_ok());
        match flatten_outputs(&s, 2) {
            Err(DocError::DepthExceeded { path, limit }) => {
                assert_eq!(path, "a.b");
                assert_eq!(limit, 2);
            }
            other => panic!("expected depth error, got {other:?}"),
        }
    }

    #[test]
    fn typed_map_rejects_numbers() {
        assert!(OutputSchema::from_typed(&json!({"a": 3}), "outputs").is_err());
    }
}
