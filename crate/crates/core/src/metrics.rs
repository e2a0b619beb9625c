//! Span-based micro-F1 scoring.
//!
//! Each metric reduces a record to a multiset of match keys. A predicted key
//! counts as a true positive at most as many times as it occurs in the gold
//! multiset; surplus copies are false positives. Because keys match only by
//! exact equality, this multiset intersection is an optimal one-to-one
//! matching.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::records::{
    load_examples, sel_to_record, ConversionReport, Example, LoadMode, Record, TaskKind,
};
use crate::schema::Schema;
use crate::sel::parse_tolerant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    /// Offsets and type of an entity mention.
    Entity,
    /// Relation type plus offsets and types of both arguments.
    RelationStrict,
    /// Relation type plus head and tail surface strings.
    RelationBoundary,
    /// Trigger offsets and event type.
    EventTrigger,
    /// Argument offsets, role and event type. Trigger offsets are not compared.
    EventArgument,
    /// Aspect offsets, opinion offsets and polarity.
    SentimentTriplet,
}

impl MetricKind {
    pub const ALL: [MetricKind; 6] = [
        MetricKind::Entity,
        MetricKind::RelationStrict,
        MetricKind::RelationBoundary,
        MetricKind::EventTrigger,
        MetricKind::EventArgument,
        MetricKind::SentimentTriplet,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Entity => "entity",
            MetricKind::RelationStrict => "relation-strict",
            MetricKind::RelationBoundary => "relation-boundary",
            MetricKind::EventTrigger => "event-trigger",
            MetricKind::EventArgument => "event-argument",
            MetricKind::SentimentTriplet => "sentiment-triplet",
        }
    }

    /// Metrics conventionally reported for a task.
    pub fn for_task(task: TaskKind) -> &'static [MetricKind] {
        match task {
            TaskKind::Entity => &[MetricKind::Entity],
            TaskKind::Relation => &[
                MetricKind::Entity,
                MetricKind::RelationStrict,
                MetricKind::RelationBoundary,
            ],
            TaskKind::Event => &[MetricKind::EventTrigger, MetricKind::EventArgument],
            TaskKind::Sentiment => &[MetricKind::SentimentTriplet],
        }
    }

    /// Parse a comma-separated list; `all` expands to every metric.
    pub fn parse_list(spec: &str) -> Result<Vec<MetricKind>> {
        let mut out = Vec::new();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part == "all" {
                out.extend(MetricKind::ALL);
            } else {
                out.push(part.parse()?);
            }
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MetricKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown metric {s:?}")))
    }
}

/// What one extracted item is compared on.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MatchKey {
    Entity {
        label: String,
        start: usize,
        end: usize,
    },
    RelationStrict {
        label: String,
        head: (String, usize, usize),
        tail: (String, usize, usize),
    },
    RelationBoundary {
        label: String,
        head: String,
        tail: String,
    },
    EventTrigger {
        label: String,
        start: usize,
        end: usize,
    },
    EventArgument {
        event: String,
        role: String,
        start: usize,
        end: usize,
    },
    SentimentTriplet {
        aspect: (usize, usize),
        opinion: (usize, usize),
        polarity: String,
    },
}

pub fn match_keys(record: &Record, kind: MetricKind) -> Vec<MatchKey> {
    match kind {
        MetricKind::Entity => record
            .entities
            .iter()
            .map(|m| MatchKey::Entity {
                label: m.label.clone(),
                start: m.start,
                end: m.end,
            })
            .collect(),
        MetricKind::RelationStrict => record
            .relations
            .iter()
            .map(|r| MatchKey::RelationStrict {
                label: r.label.clone(),
                head: (r.head.label.clone(), r.head.start, r.head.end),
                tail: (r.tail.label.clone(), r.tail.start, r.tail.end),
            })
            .collect(),
        MetricKind::RelationBoundary => record
            .relations
            .iter()
            .map(|r| MatchKey::RelationBoundary {
                label: r.label.clone(),
                head: r.head.surface.clone(),
                tail: r.tail.surface.clone(),
            })
            .collect(),
        MetricKind::EventTrigger => record
            .events
            .iter()
            .map(|e| MatchKey::EventTrigger {
                label: e.trigger.label.clone(),
                start: e.trigger.start,
                end: e.trigger.end,
            })
            .collect(),
        MetricKind::EventArgument => record
            .events
            .iter()
            .flat_map(|e| {
                e.args.iter().map(|a| MatchKey::EventArgument {
                    event: e.trigger.label.clone(),
                    role: a.role.clone(),
                    start: a.mention.start,
                    end: a.mention.end,
                })
            })
            .collect(),
        MetricKind::SentimentTriplet => record
            .sentiments
            .iter()
            .map(|s| MatchKey::SentimentTriplet {
                aspect: (s.aspect.start, s.aspect.end),
                opinion: (s.opinion.start, s.opinion.end),
                polarity: s.polarity.clone(),
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl std::ops::Add for Counts {
    type Output = Counts;
    fn add(self, rhs: Counts) -> Counts {
        Counts {
            tp: self.tp + rhs.tp,
            fp: self.fp + rhs.fp,
            fn_: self.fn_ + rhs.fn_,
        }
    }
}

impl std::iter::Sum for Counts {
    fn sum<I: Iterator<Item = Counts>>(iter: I) -> Self {
        iter.fold(Counts::default(), |a, b| a + b)
    }
}

/// Multiset intersection of gold and predicted keys.
pub fn match_counts<K: std::hash::Hash + Eq>(gold: &[K], pred: &[K]) -> Counts {
    let mut remaining: HashMap<&K, usize> = HashMap::with_capacity(gold.len());
    for k in gold {
        *remaining.entry(k).or_default() += 1;
    }
    let mut tp = 0;
    for k in pred {
        if let Some(n) = remaining.get_mut(k) {
            if *n > 0 {
                *n -= 1;
                tp += 1;
            }
        }
    }
    Counts {
        tp,
        fp: pred.len() - tp,
        fn_: gold.len() - tp,
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricScore {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl From<Counts> for MetricScore {
    fn from(c: Counts) -> Self {
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        MetricScore {
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            precision,
            recall,
            f1,
        }
    }
}

impl MetricScore {
    pub fn counts(&self) -> Counts {
        Counts {
            tp: self.tp,
            fp: self.fp,
            fn_: self.fn_,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub corpus_size: usize,
    pub metrics: BTreeMap<MetricKind, MetricScore>,
    /// Present when predictions were SEL strings converted against the gold text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conversion: Option<ConversionSummary>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversionSummary {
    #[serde(flatten)]
    pub counts: ConversionReport,
    pub parse_diagnostics: usize,
}

fn check_aligned(golds: &[Record], preds: &[Record]) -> Result<()> {
    if golds.len() != preds.len() {
        return Err(Error::LengthMismatch {
            gold: golds.len(),
            pred: preds.len(),
        });
    }
    Ok(())
}

/// Corpus-level counts for one metric. Records are paired by index.
pub fn score_counts(golds: &[Record], preds: &[Record], kind: MetricKind) -> Result<Counts> {
    check_aligned(golds, preds)?;
    Ok(golds
        .par_iter()
        .zip(preds.par_iter())
        .map(|(g, p)| match_counts(&match_keys(g, kind), &match_keys(p, kind)))
        .reduce(Counts::default, |a, b| a + b))
}

pub fn score(golds: &[Record], preds: &[Record], kind: MetricKind) -> Result<MetricScore> {
    score_counts(golds, preds, kind).map(MetricScore::from)
}

pub fn score_all(golds: &[Record], preds: &[Record], kinds: &[MetricKind]) -> Result<EvalReport> {
    check_aligned(golds, preds)?;
    let mut metrics = BTreeMap::new();
    for &kind in kinds {
        metrics.insert(kind, score(golds, preds, kind)?);
    }
    Ok(EvalReport {
        corpus_size: golds.len(),
        metrics,
        conversion: None,
    })
}

/// How to read SEL-valued prediction lines.
#[derive(Debug, Clone, Default)]
pub struct PredictionOptions {
    pub task: Option<TaskKind>,
    /// Schema for grounding SEL predictions; derived from the gold labels when absent.
    pub schema: Option<Schema>,
}

/// Load two example files, align them line by line and score.
pub fn score_run(
    gold_path: impl AsRef<Path>,
    pred_path: impl AsRef<Path>,
    kinds: &[MetricKind],
    options: &PredictionOptions,
) -> Result<EvalReport> {
    let golds: Vec<_> = load_examples(gold_path, None, LoadMode::Strict)?
        .map(|r| r.map(|ex| ex.record))
        .collect::<Result<_>>()?;
    let preds: Vec<_> =
        load_examples(pred_path.as_ref(), None, LoadMode::Strict)?.collect::<Result<_>>()?;
    score_examples(&golds, &preds, kinds, options).map_err(|e| e.in_file(pred_path.as_ref()))
}

/// Score predictions aligned with gold records by index.
///
/// Predictions carrying a `sel` string are parsed tolerantly and grounded
/// against the gold record's tokenization; their own annotations are
/// ignored.
pub fn score_examples(
    golds: &[Record],
    preds: &[Example],
    kinds: &[MetricKind],
    options: &PredictionOptions,
) -> Result<EvalReport> {
    if golds.len() != preds.len() {
        return Err(Error::LengthMismatch {
            gold: golds.len(),
            pred: preds.len(),
        });
    }
    if !preds.iter().any(|ex| ex.sel.is_some()) {
        let records: Vec<Record> = preds.iter().map(|ex| ex.record.clone()).collect();
        return score_all(golds, &records, kinds);
    }

    let task = options
        .task
        .ok_or_else(|| Error::InvalidArgument("SEL predictions need a task to be grounded".into()))?;
    let derived;
    let schema = match &options.schema {
        Some(s) => s,
        None => {
            derived = derive_schema(golds, task);
            &derived
        }
    };
    let mut summary = ConversionSummary::default();
    let mut records = Vec::with_capacity(preds.len());
    for (gold, ex) in golds.iter().zip(preds) {
        if ex.record.text.raw() != gold.text.raw() {
            return Err(Error::format(ex.line, "prediction text differs from gold text"));
        }
        let (tree, diags) = parse_tolerant(ex.sel.as_deref().unwrap_or("()"));
        let (record, report) = sel_to_record(&tree, &gold.text, task, schema);
        summary.counts += report;
        summary.parse_diagnostics += diags.len();
        records.push(record);
    }
    let mut report = score_all(golds, &records, kinds)?;
    report.conversion = Some(summary);
    Ok(report)
}

/// Union of the labels a corpus uses for one task.
pub fn derive_schema(records: &[Record], task: TaskKind) -> Schema {
    let mut spots = std::collections::BTreeSet::new();
    let mut assos = std::collections::BTreeSet::new();
    for r in records {
        let s = r.derived_schema(&[task]);
        spots.extend(s.spots().iter().cloned());
        assos.extend(s.assos().iter().cloned());
    }
    Schema::new("derived", spots, assos, None).expect("record labels are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::records::TokenizedText;

    fn entities(spec: &[(&str, usize, usize)]) -> Record {
        let text = TokenizedText::whitespace("a b c d e f g");
        let mut r = Record::new(text.clone());
        for &(l, s, e) in spec {
            r.entities.push(text.mention(l, s, e).unwrap());
        }
        r
    }

    #[test]
    fn identity_scores_one() {
        let g = vec![entities(&[("person", 0, 0), ("org", 4, 4)])];
        let s = score(&g, &g, MetricKind::Entity).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn empty_predictions_score_zero() {
        let g = vec![entities(&[("person", 0, 0)])];
        let p = vec![entities(&[])];
        let s = score(&g, &p, MetricKind::Entity).unwrap();
        assert_eq!((s.tp, s.fp, s.fn_), (0, 0, 1));
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn half_right() {
        let g = vec![entities(&[("person", 0, 0), ("org", 4, 4)])];
        let p = vec![entities(&[("person", 0, 0), ("person", 4, 4)])];
        let s = score(&g, &p, MetricKind::Entity).unwrap();
        assert_eq!((s.tp, s.fp, s.fn_), (1, 1, 1));
        assert_eq!((s.precision, s.recall, s.f1), (0.5, 0.5, 0.5));
    }

    #[test]
    fn duplicates_count_with_multiplicity() {
        let g = vec![entities(&[("person", 0, 0)])];
        let p = vec![entities(&[("person", 0, 0), ("person", 0, 0)])];
        let c = score_counts(&g, &p, MetricKind::Entity).unwrap();
        assert_eq!(c, Counts { tp: 1, fp: 1, fn_: 0 });
    }

    #[test]
    fn length_mismatch() {
        let g = vec![entities(&[])];
        assert!(matches!(
            score(&g, &[], MetricKind::Entity),
            Err(Error::LengthMismatch { gold: 1, pred: 0 })
        ));
    }

    #[test]
    fn metric_names() {
        assert_eq!(
            MetricKind::parse_list("entity, relation-strict,entity").unwrap(),
            vec![MetricKind::Entity, MetricKind::RelationStrict]
        );
        assert_eq!(MetricKind::parse_list("all").unwrap().len(), 6);
        assert!(MetricKind::parse_list("f1").is_err());
        assert_eq!(
            serde_json::to_string(&MetricKind::SentimentTriplet).unwrap(),
            "\"sentiment-triplet\""
        );
    }
}
