use std::collections::BTreeSet;

use super::{param_text, Embedder, ProviderError, RelevanceScorer};
use crate::docmodel::{ApiDoc, ParamSpec};

const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "by", "for", "from", "in", "is", "it", "its", "of", "on", "or", "that",
    "the", "this", "to", "which", "with",
];

/// Lowercased word tokens with snake_case and camelCase boundaries split and
/// common stopwords removed.
///
/// `"authorID"` → `["author", "id"]`, `"email_addresses"` →
/// `["email", "addresses"]`.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for word in text.split(|c: char| !c.is_alphanumeric()) {
        if word.is_empty() {
            continue;
        }
        split_camel(word, &mut tokens);
    }
    tokens.retain(|t| !STOPWORDS.contains(&t.as_str()));
    tokens
}

fn split_camel(word: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = word.chars().collect();
    let mut start = 0;
    for i in 1..chars.len() {
        let prev = chars[i - 1];
        let cur = chars[i];
        let lower_to_upper = (prev.is_lowercase() || prev.is_ascii_digit()) && cur.is_uppercase();
        // "HTTPServer": split before the last capital of an acronym run
        let acronym_end =
            prev.is_uppercase() && cur.is_uppercase() && chars.get(i + 1).is_some_and(|n| n.is_lowercase());
        if lower_to_upper || acronym_end {
            out.push(chars[start..i].iter().collect::<String>().to_lowercase());
            start = i;
        }
    }
    out.push(chars[start..].iter().collect::<String>().to_lowercase());
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Feature-hashed token-frequency embedder.
///
/// Each token of [`tokenize`] adds 1 to bucket `fnv1a64(token) % dim`.
/// Vectors are non-negative, so cosine similarity lies in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct HashedEmbedder {
    dim: usize,
}

impl HashedEmbedder {
    pub const DEFAULT_DIM: usize = 1024;

    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl Default for HashedEmbedder {
    fn default() -> Self {
        Self::new(Self::DEFAULT_DIM)
    }
}

impl Embedder for HashedEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f32>, ProviderError> {
        let mut v = vec![0.0f32; self.dim];
        for tok in tokenize(text) {
            let idx = (fnv1a64(tok.as_bytes()) % self.dim as u64) as usize;
            v[idx] += 1.0;
        }
        Ok(v)
    }
}

/// Token-set Jaccard overlap between the two parameters' `"name:
/// description"` texts.
#[derive(Debug, Clone, Copy, Default)]
pub struct JaccardScorer;

impl JaccardScorer {
    pub fn jaccard(a: &str, b: &str) -> f64 {
        let sa: BTreeSet<String> = tokenize(a).into_iter().collect();
        let sb: BTreeSet<String> = tokenize(b).into_iter().collect();
        let union = sa.union(&sb).count();
        if union == 0 {
            return 0.0;
        }
        sa.intersection(&sb).count() as f64 / union as f64
    }
}

impl RelevanceScorer for JaccardScorer {
    fn score(
        &self,
        _source_doc: &ApiDoc,
        source_param: &ParamSpec,
        _target_doc: &ApiDoc,
        target_param: &ParamSpec,
    ) -> Result<f64, ProviderError> {
        Ok(Self::jaccard(&param_text(source_param), &param_text(target_param)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::similarity;

    #[test]
    fn tokenize_splits_case_and_separators() {
        assert_eq!(tokenize("authorID"), vec!["author", "id"]);
        assert_eq!(tokenize("email_addresses"), vec!["email", "addresses"]);
        assert_eq!(tokenize("HTTPServer v2"), vec!["http", "server", "v2"]);
        assert_eq!(tokenize("The URL of the book."), vec!["url", "book"]);
        assert!(tokenize("  ,.;  ").is_empty());
    }

    #[test]
    fn fnv_reference_values() {
        // published FNV-1a 64 test vectors
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn identical_text_has_unit_similarity() {
        let e = HashedEmbedder::default();
        let a = e.embed("user_id: identifier of the user").unwrap();
        let b = e.embed("user_id: identifier of the user").unwrap();
        assert!((similarity(&a, &b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_tokens_have_zero_similarity_without_collisions() {
        let e = HashedEmbedder::new(1 << 20);
        let a = e.embed("alpha beta").unwrap();
        let b = e.embed("gamma delta").unwrap();
        assert_eq!(similarity(&a, &b), 0.0);
    }

    #[test]
    fn stopword_only_text_embeds_to_zero() {
        let e = HashedEmbedder::default();
        let v = e.embed("of the and").unwrap();
        assert!(v.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn jaccard_bounds() {
        assert_eq!(JaccardScorer::jaccard("", ""), 0.0);
        assert_eq!(JaccardScorer::jaccard("a_b", "b a"), 1.0);
        assert!((JaccardScorer::jaccard("x y", "y z") - 1.0 / 3.0).abs() < 1e-12);
    }
}
