use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tfidf::TfIdfIndex;
use super::tokenize::TokenizerConfig;
use crate::dataset::{LabeledPair, TrainingConfig, TrainingExample};
use crate::eval::LabelMetrics;
use crate::{io, Error, Result};

/// Predicts a link when the pair similarity reaches `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdClassifier {
    theta: f64,
}

impl ThresholdClassifier {
    pub fn new(theta: f64) -> Result<ThresholdClassifier> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::Config(format!("theta {theta} outside [0, 1]")));
        }
        Ok(ThresholdClassifier { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn predict(&self, similarity: f64) -> u8 {
        u8::from(similarity >= self.theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdFit {
    pub classifier: ThresholdClassifier,
    /// F1 of label 1 on the training pairs at the chosen threshold.
    pub training_f1: f64,
    /// All training similarities were equal, so no threshold separates them.
    pub degenerate: bool,
}

/// F1 of label 1 when everything with similarity ≥ `theta` is predicted 1.
pub fn f1_at(scored: &[(f64, u8)], theta: f64) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for &(s, y) in scored {
        match (s >= theta, y != 0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    LabelMetrics::from_counts(1, tp, fp, fn_).f1
}

/// Picks the threshold maximizing training F1 of label 1.
///
/// Candidates are 0, 1 and the midpoints between consecutive distinct
/// similarities; ties go to the larger threshold.
pub fn train_threshold(train: &[TrainingExample], index: &TfIdfIndex) -> Result<ThresholdFit> {
    let labels: BTreeSet<u8> = train.iter().map(|e| e.label).collect();
    if labels.len() < 2 {
        return Err(Error::InsufficientData(
            "threshold training needs both labels".into(),
        ));
    }
    let mut scored: Vec<(f64, u8)> = train
        .iter()
        .map(|e| Ok((index.pair_similarity(&e.pair.a, &e.pair.b)?, e.label)))
        .collect::<Result<_>>()?;
    scored.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut distinct: Vec<f64> = scored.iter().map(|s| s.0).collect();
    distinct.dedup();
    if distinct.len() == 1 {
        let classifier = ThresholdClassifier::new(1.0)?;
        return Ok(ThresholdFit {
            classifier,
            training_f1: f1_at(&scored, 1.0),
            degenerate: true,
        });
    }

    // suffix counts over the ascending order: positives predicted at a cut
    let n = scored.len();
    let total_pos = scored.iter().filter(|s| s.1 != 0).count();
    let mut pos_from = vec![0usize; n + 1];
    for i in (0..n).rev() {
        pos_from[i] = pos_from[i + 1] + usize::from(scored[i].1 != 0);
    }
    let f1_for = |theta: f64| {
        let cut = scored.partition_point(|s| s.0 < theta);
        let tp = pos_from[cut];
        let fp = (n - cut) - tp;
        LabelMetrics::from_counts(1, tp, fp, total_pos - tp).f1
    };

    let mut candidates = vec![0.0];
    candidates.extend(distinct.windows(2).map(|w| (w[0] + w[1]) / 2.0));
    candidates.push(1.0);
    let (mut best_theta, mut best_f1) = (0.0, f64::NEG_INFINITY);
    for theta in candidates {
        let f1 = f1_for(theta);
        if f1 >= best_f1 {
            best_theta = theta;
            best_f1 = f1;
        }
    }
    Ok(ThresholdFit {
        classifier: ThresholdClassifier::new(best_theta)?,
        training_f1: best_f1,
        degenerate: false,
    })
}

fn by_similarity(a: &(String, f64), b: &(String, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0))
}

/// The `k` candidates most similar to `query`, most similar first, ties by
/// ascending key. The query itself is never returned.
pub fn ktop_retrieve(
    index: &TfIdfIndex,
    query: &str,
    candidates: &[String],
    k: usize,
) -> Result<Vec<(String, f64)>> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let mut ranked: Vec<(String, f64)> = candidates
        .iter()
        .filter(|c| c.as_str() != query)
        .map(|c| Ok((c.clone(), index.pair_similarity(query, c)?)))
        .collect::<Result<_>>()?;
    ranked.sort_by(by_similarity);
    ranked.dedup_by(|x, y| x.0 == y.0);
    ranked.truncate(k);
    Ok(ranked)
}

/// For every pair, the smaller of the rank of `b` among the neighbours of `a`
/// and the rank of `a` among the neighbours of `b` (0-based). Candidates are
/// all issues appearing in `pairs`, so a pair is in the top k of either side
/// iff its rank is below k.
pub fn ktop_ranks(index: &TfIdfIndex, pairs: &[LabeledPair]) -> Result<Vec<usize>> {
    let candidates: Vec<String> = pairs
        .iter()
        .flat_map(|p| [p.a.clone(), p.b.clone()])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut rank: HashMap<&str, HashMap<&str, usize>> = HashMap::new();
    for q in &candidates {
        let mut ranked: Vec<(String, f64)> = candidates
            .iter()
            .filter(|c| *c != q)
            .map(|c| Ok((c.clone(), index.pair_similarity(q, c)?)))
            .collect::<Result<_>>()?;
        ranked.sort_by(by_similarity);
        let positions = ranked
            .iter()
            .enumerate()
            .map(|(i, (c, _))| (candidates[candidates.binary_search(c).unwrap()].as_str(), i))
            .collect();
        rank.insert(q.as_str(), positions);
    }
    Ok(pairs
        .iter()
        .map(|p| rank[p.a.as_str()][p.b.as_str()].min(rank[p.b.as_str()][p.a.as_str()]))
        .collect())
}

/// Serialized model. The TF-IDF index is refit from the repository at
/// evaluation time; `corpus_hash` guards against a different corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub theta: f64,
    pub training_f1: f64,
    pub degenerate: bool,
    pub training_config: TrainingConfig,
    /// Seed of the dataset the threshold was fit on.
    pub seed: u64,
    pub tokenizer: TokenizerConfig,
    pub repository: String,
    pub documents: usize,
    pub corpus_hash: String,
}

impl ModelFile {
    pub fn classifier(&self) -> Result<ThresholdClassifier> {
        ThresholdClassifier::new(self.theta)
    }

    pub fn read(path: &Path) -> Result<ModelFile> {
        let model: ModelFile = serde_json::from_str(&io::read_string(path)?)?;
        model.classifier()?;
        Ok(model)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        io::write_json(path, self)
    }
}
