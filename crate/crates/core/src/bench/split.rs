use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BenchError, DomainOf};
use crate::graph::{labels_to_value, EdgeType, LabelRow};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub val_per_class: usize,
    pub test_per_class: usize,
    pub heldout_domains: BTreeSet<String>,
}

impl SplitSpec {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(seed: u64, heldout_domains: I) -> Self {
        SplitSpec {
            seed,
            val_per_class: 100,
            test_per_class: 100,
            heldout_domains: heldout_domains.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Splits {
    pub train: Vec<LabelRow>,
    pub val: Vec<LabelRow>,
    pub test: Vec<LabelRow>,
    /// Held-out-domain pairs beyond the test quota.
    pub discarded: usize,
}

impl Splits {
    pub fn to_json(&self) -> String {
        let v = serde_json::json!({
            "train": labels_to_value(&self.train),
            "val": labels_to_value(&self.val),
            "test": labels_to_value(&self.test),
            "discarded": self.discarded,
        });
        let mut s = serde_json::to_string_pretty(&v).expect("splits serialize");
        s.push('\n');
        s
    }
}

/// Class-balanced train/val/test splits.
///
/// Pairs touching an API from a held-out domain go only to test (surplus is
/// discarded). Per class, the remaining pairs are shuffled with the seeded
/// generator; val takes the first `val_per_class`, test is topped up to
/// `test_per_class`, and the rest is train.
pub fn make_splits<D: DomainOf + ?Sized>(
    labels: &[LabelRow],
    domains: &D,
    spec: &SplitSpec,
) -> Result<Splits, BenchError> {
    if spec.heldout_domains.len() != 2 {
        return Err(BenchError::HeldoutCount(spec.heldout_domains.len()));
    }
    let mut inside: [Vec<&LabelRow>; 3] = Default::default();
    let mut outside: [Vec<&LabelRow>; 3] = Default::default();
    for row in labels {
        let mut held = false;
        for api in [&row.source.api_id, &row.target.api_id] {
            let d = domains.domain(api).ok_or_else(|| BenchError::UnknownApi(api.clone()))?;
            held |= spec.heldout_domains.contains(d);
        }
        let c = row.edge_type().index();
        if held {
            outside[c].push(row);
        } else {
            inside[c].push(row);
        }
    }

    let mut deficits = Vec::new();
    for t in EdgeType::ALL {
        let c = t.index();
        let from_outside = outside[c].len().min(spec.test_per_class);
        let need = spec.val_per_class + spec.test_per_class - from_outside;
        if inside[c].len() < need {
            deficits.push((t, need - inside[c].len()));
        }
    }
    if !deficits.is_empty() {
        return Err(BenchError::Insufficient(deficits));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut splits = Splits::default();
    for t in EdgeType::ALL {
        let c = t.index();
        let mut ins = inside[c].clone();
        let mut outs = outside[c].clone();
        ins.shuffle(&mut rng);
        outs.shuffle(&mut rng);
        let from_outside = outs.len().min(spec.test_per_class);
        splits.discarded += outs.len() - from_outside;
        let fill = spec.test_per_class - from_outside;
        splits
            .val
            .extend(ins[..spec.val_per_class].iter().map(|r| (*r).clone()));
        splits.test.extend(outs[..from_outside].iter().map(|r| (*r).clone()));
        let test_end = spec.val_per_class + fill;
        splits
            .test
            .extend(ins[spec.val_per_class..test_end].iter().map(|r| (*r).clone()));
        splits.train.extend(ins[test_end..].iter().map(|r| (*r).clone()));
    }
    Ok(splits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::docmodel::ParamRef;
    use std::collections::HashMap;

    fn synthetic(per_class: usize, held_per_class: usize) -> (Vec<LabelRow>, HashMap<String, String>) {
        let mut domains = HashMap::new();
        let mut rows = Vec::new();
        for (k, t) in EdgeType::ALL.into_iter().enumerate() {
            for i in 0..per_class {
                let dom = if i < held_per_class { "held" } else { "open" };
                let src = format!("S{k}_{i}");
                let dst = format!("T{k}_{i}");
                domains.insert(src.clone(), dom.to_string());
                domains.insert(dst.clone(), "open".to_string());
                rows.push(LabelRow::typed(
                    ParamRef::output(src, "o"),
                    ParamRef::input(dst, "i"),
                    t,
                ));
            }
        }
        (rows, domains)
    }

    #[test]
    fn sizes_and_balance() {
        let (rows, domains) = synthetic(300, 40);
        let spec = SplitSpec::new(1, ["held", "other"]);
        let s = make_splits(&rows, &domains, &spec).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (300, 300, 300));
        for t in EdgeType::ALL {
            assert_eq!(s.val.iter().filter(|r| r.edge_type() == t).count(), 100);
            assert_eq!(s.test.iter().filter(|r| r.edge_type() == t).count(), 100);
        }
        let held = |r: &LabelRow| domains[&r.source.api_id] == "held";
        assert!(!s.train.iter().any(held));
        assert!(!s.val.iter().any(held));
        assert_eq!(s.test.iter().filter(|r| held(r)).count(), 120);
        assert_eq!(make_splits(&rows, &domains, &spec).unwrap(), s);
        assert_ne!(
            make_splits(&rows, &domains, &SplitSpec::new(2, ["held", "other"])).unwrap(),
            s
        );
    }

    #[test]
    fn deficit_and_heldout_count() {
        let (rows, domains) = synthetic(150, 0);
        let err = make_splits(&rows, &domains, &SplitSpec::new(1, ["held", "x"])).unwrap_err();
        assert!(err.to_string().contains("strong short by 50"), "{err}");
        assert!(matches!(
            make_splits(&rows, &domains, &SplitSpec::new(1, ["held"])),
            Err(BenchError::HeldoutCount(1))
        ));
    }
}
