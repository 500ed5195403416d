use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{classify_edge, BenchError, EdgeClassifier};
use crate::docmodel::{Corpus, ParamRef};
use crate::graph::{EdgeType, LabelRow};

/// Counts indexed by (gold, predicted) in strong, weak, non order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[usize; 3]; 3],
}

impl ConfusionMatrix {
    pub fn add(&mut self, gold: EdgeType, predicted: EdgeType) {
        self.counts[gold.index()][predicted.index()] += 1;
    }

    pub fn merge(mut self, other: &ConfusionMatrix) -> Self {
        for g in 0..3 {
            for p in 0..3 {
                self.counts[g][p] += other.counts[g][p];
            }
        }
        self
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..3).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, gold: EdgeType) -> usize {
        self.counts[gold.index()].iter().sum()
    }

    /// trace / total; 0 for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.trace() as f64 / n as f64,
        }
    }

    /// Aligned table with gold classes as rows.
    pub fn table(&self) -> String {
        let mut out = format!("{:<12}", "gold\\pred");
        for t in EdgeType::ALL {
            out.push_str(&format!("{:>8}", t.as_str()));
        }
        out.push('\n');
        for g in EdgeType::ALL {
            out.push_str(&format!("{:<12}", g.as_str()));
            for p in EdgeType::ALL {
                out.push_str(&format!("{:>8}", self.counts[g.index()][p.index()]));
            }
            out.push('\n');
        }
        out
    }
}

/// A pair the classifier failed on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skip {
    pub source: ParamRef,
    pub target: ParamRef,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Accuracy over classified pairs; skipped pairs are excluded.
    pub accuracy: f64,
    pub matrix: ConfusionMatrix,
    pub in_domain: ConfusionMatrix,
    pub cross_domain: ConfusionMatrix,
    pub skipped: Vec<Skip>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn table(&self) -> String {
        format!(
            "accuracy {:.3} ({} of {} classified, {} skipped)\n{}in-domain accuracy {:.3}, cross-domain accuracy {:.3}\n",
            self.accuracy,
            self.matrix.trace(),
            self.matrix.total(),
            self.skipped.len(),
            self.matrix.table(),
            self.in_domain.accuracy(),
            self.cross_domain.accuracy(),
        )
    }
}

#[derive(Default)]
struct Acc {
    all: ConfusionMatrix,
    inside: ConfusionMatrix,
    cross: ConfusionMatrix,
    skipped: Vec<Skip>,
}

impl Acc {
    fn merge(self, other: Acc) -> Acc {
        let mut skipped = self.skipped;
        skipped.extend(other.skipped);
        Acc {
            all: self.all.merge(&other.all),
            inside: self.inside.merge(&other.inside),
            cross: self.cross.merge(&other.cross),
            skipped,
        }
    }
}

/// Classifies every pair of `split` against its gold label. Classifier
/// errors are recorded as skips rather than counted as wrong.
pub fn evaluate_classifier<C: EdgeClassifier + ?Sized>(
    classifier: &C,
    corpus: &Corpus,
    split: &[LabelRow],
) -> Result<EvalReport, BenchError> {
    if split.is_empty() {
        return Err(BenchError::EmptySplit);
    }
    for row in split {
        for r in [&row.source, &row.target] {
            if corpus.resolve(r).is_none() {
                return Err(BenchError::UnknownParam(r.clone()));
            }
        }
    }
    let one = |row: &LabelRow| -> Acc {
        let mut acc = Acc::default();
        match classify_edge(classifier, corpus, &row.source, &row.target) {
            Ok(pred) => {
                let gold = row.edge_type();
                acc.all.add(gold, pred);
                if corpus.domain_of(&row.source.api_id) == corpus.domain_of(&row.target.api_id) {
                    acc.inside.add(gold, pred);
                } else {
                    acc.cross.add(gold, pred);
                }
            }
            Err(e) => acc.skipped.push(Skip {
                source: row.source.clone(),
                target: row.target.clone(),
                error: e.to_string(),
            }),
        }
        acc
    };
    let mut acc = if classifier.concurrent_safe() {
        split.par_iter().map(one).reduce(Acc::default, Acc::merge)
    } else {
        split.iter().map(one).fold(Acc::default(), Acc::merge)
    };
    acc.skipped
        .sort_by(|a, b| (&a.source, &a.target).cmp(&(&b.source, &b.target)));
    Ok(EvalReport {
        accuracy: acc.all.accuracy(),
        matrix: acc.all,
        in_domain: acc.inside,
        cross_domain: acc.cross,
        skipped: acc.skipped,
    })
}
