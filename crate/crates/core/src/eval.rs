//! Scoring of binary pair predictions against the traditional (Dup + NonLink)
//! and new (Dup + OtherLink + NonLink) test sets.
//!
//! Ground truth is binarized with the same mapping the training set used
//! ([`TrainingConfig::truth`]). Per-label precision/recall/F1 use 0 for a zero
//! denominator; macro averages are unweighted means over the two binary
//! labels.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{LabeledPair, PairClass, TrainingConfig};
use crate::model::{ktop_ranks, TfIdfIndex};
use crate::taxonomy::LinkCategory;
use crate::{Error, Result};

/// Binary predictions keyed by the ordered pair `(a, b)`.
pub type Predictions = HashMap<(String, String), u8>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Traditional,
    New,
}

impl FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "traditional" => Ok(EvalMode::Traditional),
            "new" => Ok(EvalMode::New),
            _ => Err(Error::Config(format!("unknown evaluation mode {s:?}"))),
        }
    }
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalMode::Traditional => "traditional",
            EvalMode::New => "new",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelMetrics {
    pub label: u8,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

fn safe_div(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

impl LabelMetrics {
    pub fn from_counts(label: u8, tp: usize, fp: usize, fn_: usize) -> LabelMetrics {
        let precision = safe_div(tp as f64, (tp + fp) as f64);
        let recall = safe_div(tp as f64, (tp + fn_) as f64);
        LabelMetrics {
            label,
            precision,
            recall,
            f1: safe_div(2.0 * precision * recall, precision + recall),
            support: tp + fn_,
        }
    }
}

/// Counts by true class and predicted label; OtherLink rows are also kept
/// per link category.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// `[predicted 0, predicted 1]` per true class.
    pub counts: BTreeMap<PairClass, [usize; 2]>,
    pub other_link_by_category: BTreeMap<LinkCategory, [usize; 2]>,
}

impl ConfusionMatrix {
    fn new() -> ConfusionMatrix {
        ConfusionMatrix {
            counts: PairClass::ALL.iter().map(|c| (*c, [0, 0])).collect(),
            other_link_by_category: BTreeMap::new(),
        }
    }

    pub fn row(&self, klass: PairClass) -> [usize; 2] {
        self.counts.get(&klass).copied().unwrap_or([0, 0])
    }

    pub fn total(&self) -> usize {
        self.counts.values().map(|r| r[0] + r[1]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: EvalMode,
    pub training: TrainingConfig,
    pub pairs: usize,
    /// Metrics for label 0 and label 1.
    pub labels: [LabelMetrics; 2],
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    /// All predictions carry the same label.
    pub degenerate: bool,
}

impl EvalReport {
    pub fn positive(&self) -> &LabelMetrics {
        &self.labels[1]
    }
}

/// Scores `predictions` on `test` under the label mapping of `tc`.
pub fn evaluate(
    predictions: &Predictions,
    test: &[LabeledPair],
    tc: TrainingConfig,
    mode: EvalMode,
) -> Result<(EvalReport, ConfusionMatrix)> {
    let scored: Vec<&LabeledPair> = test
        .iter()
        .filter(|p| mode == EvalMode::New || p.klass != PairClass::OtherLink)
        .collect();
    if scored.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no pairs to score in {mode} mode"
        )));
    }

    let mut matrix = ConfusionMatrix::new();
    // [truth][prediction]
    let mut binary = [[0usize; 2]; 2];
    for p in &scored {
        let pred = *predictions
            .get(&(p.a.clone(), p.b.clone()))
            .ok_or_else(|| Error::MissingPrediction(p.a.clone(), p.b.clone()))?;
        let pred = usize::from(pred != 0);
        let truth = tc.truth(p.klass) as usize;
        binary[truth][pred] += 1;
        matrix.counts.entry(p.klass).or_default()[pred] += 1;
        if p.klass == PairClass::OtherLink {
            if let Some(cat) = p.category {
                matrix.other_link_by_category.entry(cat).or_default()[pred] += 1;
            }
        }
    }

    let positive = LabelMetrics::from_counts(1, binary[1][1], binary[0][1], binary[1][0]);
    let negative = LabelMetrics::from_counts(0, binary[0][0], binary[1][0], binary[0][1]);
    let total = scored.len();
    let predicted_positive = binary[0][1] + binary[1][1];
    let report = EvalReport {
        mode,
        training: tc,
        pairs: total,
        labels: [negative, positive],
        macro_precision: (negative.precision + positive.precision) / 2.0,
        macro_recall: (negative.recall + positive.recall) / 2.0,
        macro_f1: (negative.f1 + positive.f1) / 2.0,
        accuracy: (binary[0][0] + binary[1][1]) as f64 / total as f64,
        degenerate: predicted_positive == 0 || predicted_positive == total,
    };
    Ok((report, matrix))
}

/// `new - traditional` for accuracy and the macro averages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessDelta {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

pub fn robustness_delta(traditional: &EvalReport, new: &EvalReport) -> Result<RobustnessDelta> {
    if traditional.mode != EvalMode::Traditional || new.mode != EvalMode::New {
        return Err(Error::Precondition(format!(
            "robustness delta needs (traditional, new) reports, got ({}, {})",
            traditional.mode, new.mode
        )));
    }
    if traditional.training != new.training {
        return Err(Error::Precondition(
            "reports come from different training configurations".into(),
        ));
    }
    Ok(RobustnessDelta {
        accuracy: new.accuracy - traditional.accuracy,
        macro_precision: new.macro_precision - traditional.macro_precision,
        macro_recall: new.macro_recall - traditional.macro_recall,
        macro_f1: new.macro_f1 - traditional.macro_f1,
    })
}

/// Share of OtherLink pairs predicted positive.
pub fn ol_confusion_rate(matrix: &ConfusionMatrix) -> Result<f64> {
    let [neg, pos] = matrix.row(PairClass::OtherLink);
    if neg + pos == 0 {
        return Err(Error::Undefined("no OtherLink pairs were scored".into()));
    }
    Ok(pos as f64 / (neg + pos) as f64)
}

/// [`ol_confusion_rate`] per link category of the OtherLink pairs.
pub fn ol_confusion_by_category(matrix: &ConfusionMatrix) -> BTreeMap<LinkCategory, f64> {
    matrix
        .other_link_by_category
        .iter()
        .filter(|(_, [n, p])| n + p > 0)
        .map(|(c, [n, p])| (*c, *p as f64 / (n + p) as f64))
        .collect()
}

/// Threshold predictions: positive iff similarity ≥ `theta`.
pub fn threshold_predictions(
    index: &TfIdfIndex,
    pairs: &[LabeledPair],
    theta: f64,
) -> Result<Predictions> {
    pairs
        .iter()
        .map(|p| {
            let sim = index.pair_similarity(&p.a, &p.b)?;
            Ok(((p.a.clone(), p.b.clone()), u8::from(sim >= theta)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SweepGrid {
    Theta(Vec<f64>),
    K(Vec<usize>),
}

impl SweepGrid {
    fn validate(&self) -> Result<()> {
        let ok = match self {
            SweepGrid::Theta(g) => {
                !g.is_empty()
                    && g.iter().all(|t| (0.0..=1.0).contains(t))
                    && g.windows(2).all(|w| w[0] < w[1])
            }
            SweepGrid::K(g) => !g.is_empty() && g[0] >= 1 && g.windows(2).all(|w| w[0] < w[1]),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(
                "sweep grid must be non-empty and strictly increasing".into(),
            ))
        }
    }

    pub fn variable(&self) -> &'static str {
        match self {
            SweepGrid::Theta(_) => "theta",
            SweepGrid::K(_) => "k",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub variable: String,
    pub setting: f64,
    pub report: EvalReport,
}

/// One evaluation per grid point.
///
/// Theta points threshold the pair similarity. For a k point a pair is
/// predicted positive when either issue is among the k most similar issues
/// of the other, with candidates drawn from the issues of the scored test
/// set.
pub fn sweep(
    index: &TfIdfIndex,
    test: &[LabeledPair],
    tc: TrainingConfig,
    mode: EvalMode,
    grid: &SweepGrid,
) -> Result<Vec<SweepPoint>> {
    grid.validate()?;
    let scored: Vec<LabeledPair> = test
        .iter()
        .filter(|p| mode == EvalMode::New || p.klass != PairClass::OtherLink)
        .cloned()
        .collect();
    match grid {
        SweepGrid::Theta(thetas) => {
            let sims: Vec<f64> = scored
                .iter()
                .map(|p| index.pair_similarity(&p.a, &p.b))
                .collect::<Result<_>>()?;
            thetas
                .par_iter()
                .map(|&theta| {
                    let preds = scored
                        .iter()
                        .zip(&sims)
                        .map(|(p, &s)| ((p.a.clone(), p.b.clone()), u8::from(s >= theta)))
                        .collect();
                    let (report, _) = evaluate(&preds, &scored, tc, mode)?;
                    Ok(SweepPoint {
                        variable: "theta".into(),
                        setting: theta,
                        report,
                    })
                })
                .collect()
        }
        SweepGrid::K(ks) => {
            let ranks = ktop_ranks(index, &scored)?;
            ks.par_iter()
                .map(|&k| {
                    let preds = scored
                        .iter()
                        .zip(&ranks)
                        .map(|(p, &r)| ((p.a.clone(), p.b.clone()), u8::from(r < k)))
                        .collect();
                    let (report, _) = evaluate(&preds, &scored, tc, mode)?;
                    Ok(SweepPoint {
                        variable: "k".into(),
                        setting: k as f64,
                        report,
                    })
                })
                .collect()
        }
    }
}

/// Curve table with one row per grid point and label.
pub fn curves_csv(points: &[SweepPoint]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "variable", "setting", "mode", "label", "precision", "recall", "f1", "accuracy",
        "degenerate",
    ])?;
    for pt in points {
        for m in &pt.report.labels {
            w.write_record([
                pt.variable.clone(),
                pt.setting.to_string(),
                pt.report.mode.to_string(),
                m.label.to_string(),
                m.precision.to_string(),
                m.recall.to_string(),
                m.f1.to_string(),
                pt.report.accuracy.to_string(),
                pt.report.degenerate.to_string(),
            ])?;
        }
    }
    w.into_inner()
        .map_err(|e| Error::Csv(csv::Error::from(e.into_error())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSet {
    pub report: EvalReport,
    pub confusion: ConfusionMatrix,
}

/// Everything the evaluation step emits for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutput {
    pub theta: f64,
    pub seed: u64,
    pub traditional: Option<ScoredSet>,
    pub new: Option<ScoredSet>,
    pub delta: Option<RobustnessDelta>,
    pub ol_confusion_rate: Option<f64>,
    pub ol_confusion_by_category: BTreeMap<LinkCategory, f64>,
}
