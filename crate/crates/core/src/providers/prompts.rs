//! Message templates for external models and parsers for their replies.
//!
//! One template per model-backed step: output description refinement,
//! context-aware relevance scoring, edge-type classification, prerequisite
//! API selection and pattern-constrained subset selection.

use serde_json::Value;

use super::ProviderError;
use crate::docmodel::{ApiDoc, ParamSpec};
use crate::graph::EdgeType;

/// Pretty JSON rendering of an API's documentation for prompts.
pub fn documentation(doc: &ApiDoc) -> String {
    serde_json::to_string_pretty(doc).unwrap_or_else(|_| doc.api_id.clone())
}

fn param_information(param: &ParamSpec) -> String {
    format!("{} ({}): {}", param.name, param.ptype.as_str(), param.description)
}

pub fn refine_prompt(doc: &ApiDoc, output_param: &str) -> String {
    format!(
        "You are a helpful assistant for a developer who is trying to understand the usage of an API.\n\
         The developer will provide you with the API name, description, input parameters, and output parameters. \
         Your job is to generate a description for specific output parameters of the API.\n\
         The description must be concise, and help the developer understand the information that the output \
         parameter provides. Do not generate information that is not present in the API documentation.\n\
         API: {}\n\
         I need a description for the output parameter {}.",
        documentation(doc),
        output_param
    )
}

pub fn relevance_prompt(
    source_doc: &ApiDoc,
    source_param: &ParamSpec,
    target_doc: &ApiDoc,
    target_param: &ParamSpec,
) -> String {
    format!(
        "You are an assistant who helps developers understand the relevance between two APIs.\n\
         The developer will provide you with the documentation of the APIs. One is the source API, and the other \
         is the target API. Your job is to determine if the specified output parameter of the source API can give \
         full information to the specified input parameter of the target API.\n\
         Then you need to generate a relevance score between 0 and 1, which indicates the probability of the \
         output parameter being relevant to the input parameter.\n\n\
         There are some rules you should consider:\n\n\
         1. Prioritize parameter descriptions: Do not rely solely on parameter names to infer their meaning. \
         Always refer to the parameter description, as names can be misleading.\n\n\
         2. Complete information matching: A source parameter can be linked to multiple target parameters if it \
         contains all necessary information. However, partial matches are not allowed.\n\n\
         3. Type compatibility is flexible: Parameter types do not have to be identical as long as the value \
         meaning is preserved.\n\n\
         Source API : {}\n\
         Target API : {}\n\
         Source Parameter: {}\n\
         Target Parameter: {}",
        documentation(source_doc),
        documentation(target_doc),
        param_information(source_param),
        param_information(target_param)
    )
}

pub fn edge_classification_prompt(
    source_doc: &ApiDoc,
    source_param: &str,
    target_doc: &ApiDoc,
    target_param: &str,
) -> String {
    format!(
        "You are a helpful assistant that classifies whether a connection (edge) between two API parameters is \
         valid and natural.\n\n\
         You will be given:\n\
         - A source API (with an output parameter)\n\
         - A target API (with an input parameter)\n\n\
         [Criteria]\n\
         1. Data Compatibility: Can the source output consistently be used as the target input (i.e., do they \
         refer to the same kind of entity/information)?\n\
         \x20 - Always: classify as \"compatible\".\n\
         \x20 - Only in some cases: classify as \"conditional\".\n\
         \x20 - Not at all: classify as \"incompatible\".\n\
         2. Naturalness: Is it natural, based on common user behavior, to pass the source output into the target \
         input?\n\
         \x20 - Natural: \"natural\".\n\
         \x20 - Not natural: \"unnatural\".\n\n\
         [Edge label]\n\
         - compatible & natural => \"strong-edge\"\n\
         - conditional & natural => \"weak-edge\"\n\
         - otherwise => \"non-edge\"\n\n\
         [Output format (single JSON object)]\n\
         {{\n\
         \x20 \"source_api\": \"name_of_source_api\",\n\
         \x20 \"target_api\": \"name_of_target_api\",\n\
         \x20 \"source_param\": \"name_of_source_output_param\",\n\
         \x20 \"target_param\": \"name_of_target_input_param\",\n\
         \x20 \"edge_type\": \"strong-edge\" | \"weak-edge\" | \"non-edge\"\n\
         }}\n\n\
         Now, classify the following edge:\n\
         Source API Information: {}\n\
         Target API Information: {}\n\
         Edge to classify: {} -> {}",
        documentation(source_doc),
        documentation(target_doc),
        source_param,
        target_param
    )
}

pub fn retrieval_prompt(task: &str, target_doc: &ApiDoc, target_param: &str, shortlist: &[&ApiDoc]) -> String {
    let listed: Vec<String> = shortlist.iter().map(|d| documentation(d)).collect();
    format!(
        "You are a helpful assistant that retrieves relevant APIs to obtain a specific input parameter for a \
         given API.\n\n\
         - You are given a task instruction, the documentation of a primary API, and a list of additional \
         available APIs.\n\
         - You are also given the name and description of a specific input parameter for the primary API.\n\
         - Your goal is to determine how to obtain the value for this input parameter, using the available APIs \
         if necessary.\n\n\
         Your output should be in the following JSON format:\n\
         {{\n\
         \x20 \"observation\": \"A brief description of how you can obtain the parameter.\",\n\
         \x20 \"prerequisite_api\": \"The name of the API you need to call to obtain this parameter, if applicable.\"\n\
         }}\n\n\
         Instructions:\n\
         - If the parameter can be directly inferred from the task instruction or assumed as a default, explain \
         this in 'observation' and leave 'prerequisite_api' as an empty string.\n\
         - If the parameter requires calling another API to obtain, describe this in 'observation' and specify \
         the required API in 'prerequisite_api'.\n\n\
         Now, please analyze the task instruction, the primary API's documentation, the target input parameter, \
         and the list of additional available APIs.\n\n\
         Task Instruction: {}\n\
         Primary API Documentation: {}\n\
         Target Input Parameter: {}\n\
         Additional APIs available: [{}]",
        task,
        documentation(target_doc),
        target_param,
        listed.join(",\n")
    )
}

/// Subset-selection prompt for an `n`-API pattern. `connections` is `None`
/// in the no-graph condition, which omits the connection block entirely.
pub fn subset_prompt(
    n: usize,
    edge_lines: &[(usize, usize)],
    api_list_block: &str,
    connections: Option<&str>,
) -> String {
    let roles: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
    let edges: Vec<String> = edge_lines.iter().map(|(a, b)| format!("{a}->{b}")).collect();
    let format_line: Vec<String> = (1..=n).map(|i| format!("{i}: <API {i}>")).collect();
    let mut out = format!(
        "You are a helpful assistant that selects small sets of APIs that match a strict dependency pattern.\n\n\
         [Pattern]\n\
         - APIs: {}\n\
         - Edges (must be satisfied internally): {}\n\n\
         [Task]\n\
         From api_list_block, identify up to 5 distinct valid groups of {n} APIs that satisfy the above pattern. \
         In this pattern, an edge is valid only if an output parameter of one API provides the full information \
         required by the corresponding input parameter of another API. Do not output the pattern or any \
         explanation - only the group mappings.\n\n",
        roles.join(","),
        edges.join(", "),
    );
    if connections.is_some() {
        out.push_str(
            "[Connections]\n\
             You are provided with connection_list, which are known helpful relationships.\n\
             However, it is not mandatory that all required edges appear there. You may also check input-output \
             compatibility.\n\n",
        );
    }
    out.push_str(&format!(
        "[Output Format]\n\
         Output only in the following format (for each valid group):\n\
         APIs: {}\n\n\
         [Rules]\n\
         - Replace <API num> with the exact API names from api_list_block.\n\
         - Keep the numbering 1..{n} exactly as shown.\n\
         - Separate multiple groups with a line containing only '---'.\n\
         - Do not output placeholders like \"app1.api1\"; use real API names only.\n\
         - Do not add extra commentary, JSON, or text outside the specified block.\n\
         - Do not repeat identical (1..{n}) groups.\n\n\
         api_list_block: {}",
        format_line.join(", "),
        api_list_block
    ));
    if let Some(conn) = connections {
        out.push_str(&format!("\nconnection_list: {conn}"));
    }
    out
}

/// Extracts the outermost JSON object embedded in a model reply.
fn json_object(reply: &str) -> Option<Value> {
    let start = reply.find('{')?;
    let end = reply.rfind('}')?;
    if end < start {
        return None;
    }
    serde_json::from_str(&reply[start..=end]).ok()
}

/// Parses the `edge_type` field of a classification reply.
pub fn parse_edge_reply(reply: &str) -> Result<EdgeType, ProviderError> {
    let obj = json_object(reply).ok_or_else(|| ProviderError::malformed("no JSON object", reply))?;
    let label = obj
        .get("edge_type")
        .and_then(Value::as_str)
        .ok_or_else(|| ProviderError::malformed("missing edge_type", reply))?;
    EdgeType::parse_label(label).ok_or_else(|| ProviderError::malformed(format!("unknown edge_type {label:?}"), reply))
}

/// Parses a relevance score: a JSON object with a `relevance`, `score` or
/// `relevance_score` field, or else the first number in the reply.
pub fn parse_relevance_reply(reply: &str) -> Result<f64, ProviderError> {
    let from_json = json_object(reply).and_then(|obj| {
        ["relevance", "score", "relevance_score"]
            .iter()
            .find_map(|k| obj.get(*k).and_then(Value::as_f64))
    });
    let score = match from_json {
        Some(s) => s,
        None => first_number(reply).ok_or_else(|| ProviderError::malformed("no score found", reply))?,
    };
    if !(0.0..=1.0).contains(&score) {
        return Err(ProviderError::OutOfRange(score));
    }
    Ok(score)
}

fn first_number(text: &str) -> Option<f64> {
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_digit() {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            let neg = start > 0 && bytes[start - 1] == b'-';
            let v: f64 = text[start..i].trim_end_matches('.').parse().ok()?;
            return Some(if neg { -v } else { v });
        }
        i += 1;
    }
    None
}

/// Parses the `prerequisite_api` field of a retrieval reply. An empty string
/// means the model chose no API.
pub fn parse_retrieval_reply(reply: &str) -> Result<String, ProviderError> {
    let obj = json_object(reply).ok_or_else(|| ProviderError::malformed("no JSON object", reply))?;
    obj.get("prerequisite_api")
        .and_then(Value::as_str)
        .map(|s| s.trim().trim_end_matches("()").to_string())
        .ok_or_else(|| ProviderError::malformed("missing prerequisite_api", reply))
}

/// Parses `APIs: 1: A, 2: B, ...` group lines. Lines that do not carry
/// exactly roles `1..=n` are skipped.
pub fn parse_subset_reply(reply: &str, n: usize) -> Vec<Vec<String>> {
    let mut groups = Vec::new();
    for line in reply.lines() {
        let line = line.trim();
        let Some(rest) = line.strip_prefix("APIs:") else {
            continue;
        };
        let mut slots: Vec<Option<String>> = vec![None; n];
        let mut ok = true;
        for part in rest.split(',') {
            let Some((role, name)) = part.split_once(':') else {
                ok = false;
                break;
            };
            // API ids contain "::", so split on the first colon only after
            // confirming the left side is a role number
            let Ok(role) = role.trim().parse::<usize>() else {
                ok = false;
                break;
            };
            if role == 0 || role > n || slots[role - 1].is_some() {
                ok = false;
                break;
            }
            let name = name.trim().trim_end_matches("()").to_string();
            if name.is_empty() {
                ok = false;
                break;
            }
            slots[role - 1] = Some(name);
        }
        if ok && slots.iter().all(Option::is_some) {
            groups.push(slots.into_iter().flatten().collect());
        }
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_reply_parsing() {
        let r = r#"Sure. {"source_api": "A", "target_api": "B", "source_param": "x", "target_param": "y", "edge_type": "weak-edge"}"#;
        assert_eq!(parse_edge_reply(r).unwrap(), EdgeType::Weak);
        assert!(parse_edge_reply("strong").is_err());
        assert!(parse_edge_reply(r#"{"edge_type": "maybe"}"#).is_err());
    }

    #[test]
    fn relevance_reply_parsing() {
        assert_eq!(parse_relevance_reply(r#"{"relevance": 0.3}"#).unwrap(), 0.3);
        assert_eq!(parse_relevance_reply("Relevance score: 0.75").unwrap(), 0.75);
        assert!(matches!(
            parse_relevance_reply("score 1.5"),
            Err(ProviderError::OutOfRange(_))
        ));
        assert!(matches!(
            parse_relevance_reply("-0.2"),
            Err(ProviderError::OutOfRange(_))
        ));
        assert!(parse_relevance_reply("no idea").is_err());
    }

    #[test]
    fn retrieval_reply_parsing() {
        let r = r#"{"observation": "login first", "prerequisite_api": "Spotify::Login()"}"#;
        assert_eq!(parse_retrieval_reply(r).unwrap(), "Spotify::Login");
        let empty = r#"{"observation": "given in query", "prerequisite_api": ""}"#;
        assert_eq!(parse_retrieval_reply(empty).unwrap(), "");
    }

    #[test]
    fn subset_reply_parsing() {
        let r = "APIs: 1: Spotify::Login, 2: Spotify::FollowArtist, 3: Gmail::SendEmail\n---\n\
                 APIs: 1: A, 2: B\n---\nAPIs: 3: C, 1: A, 2: B\n";
        let groups = parse_subset_reply(r, 3);
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0][2], "Gmail::SendEmail");
        assert_eq!(groups[1], vec!["A", "B", "C"]);
    }

    #[test]
    fn subset_prompt_omits_connections_without_graph() {
        let p = subset_prompt(3, &[(1, 2), (2, 3)], "A\nB", None);
        assert!(p.contains("1->2, 2->3"));
        assert!(!p.contains("connection_list"));
        let p = subset_prompt(3, &[(1, 2), (2, 3)], "A\nB", Some("A -> B"));
        assert!(p.contains("connection_list: A -> B"));
    }
}
