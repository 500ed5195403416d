use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// Directed domain pairs whose parameters may not be connected.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DomainPolicy {
    incompatible: BTreeSet<(String, String)>,
}

#[derive(Serialize, Deserialize)]
struct PolicyRow {
    source_domain: String,
    target_domain: String,
}

impl DomainPolicy {
    pub fn new<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, S)>,
        S: Into<String>,
    {
        DomainPolicy {
            incompatible: pairs.into_iter().map(|(a, b)| (a.into(), b.into())).collect(),
        }
    }

    /// Parses a JSON array of `{source_domain, target_domain}` rows.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let rows: Vec<PolicyRow> = serde_json::from_str(text)?;
        Ok(Self::new(rows.into_iter().map(|r| (r.source_domain, r.target_domain))))
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<PolicyRow> = self
            .incompatible
            .iter()
            .map(|(a, b)| PolicyRow {
                source_domain: a.clone(),
                target_domain: b.clone(),
            })
            .collect();
        serde_json::to_string_pretty(&rows).expect("policy serializes")
    }

    /// Whether data may flow from `source_domain` to `target_domain`.
    pub fn allows(&self, source_domain: &str, target_domain: &str) -> bool {
        !self
            .incompatible
            .contains(&(source_domain.to_string(), target_domain.to_string()))
    }

    pub fn len(&self) -> usize {
        self.incompatible.len()
    }

    pub fn is_empty(&self) -> bool {
        self.incompatible.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directed() {
        let p = DomainPolicy::new([("weather", "finance")]);
        assert!(!p.allows("weather", "finance"));
        assert!(p.allows("finance", "weather"));
        assert!(p.allows("weather", "weather"));
    }

    #[test]
    fn json_round_trip() {
        let p = DomainPolicy::from_json(r#"[{"source_domain":"a","target_domain":"b"}]"#).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(DomainPolicy::from_json(&p.to_json()).unwrap(), p);
        assert!(DomainPolicy::from_json(r#"[{"source_domain":"a"}]"#).is_err());
    }
}
