//! Training-instance construction: meta-schema sampling, span corruption,
//! rejection-noise injection, knowledge-base tuple conversion and mixed
//! batch packing.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::records::{record_to_sel_joint, NodeOrder, Record, TokenRange};
use crate::schema::{build_ssi, Schema, SsiOptions};
use crate::sel::{serialize_sel, AssoNode, SelTree, SpotNode};

/// Spot label for knowledge-base heads without a type.
pub const UNKNOWN_HEAD_TYPE: &str = "[unk-type]";

/// Negative spots and negative assos sampled per instance, each.
pub const DEFAULT_MAX_NEGATIVES: usize = 10;

pub const DEFAULT_CORRUPTION_RATE: f64 = 0.15;
pub const DEFAULT_MEAN_SPAN_LEN: f64 = 3.0;

/// Deterministic generator for item `stream` of a run seeded with `seed`.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusRole {
    /// Text with its record; carries a sampled schema prompt.
    Pair,
    /// Record alone.
    Record,
    /// Corrupted text and its masked spans.
    Text,
}

/// One training instance. Field order is fixed for stable line output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataTriplet {
    pub role: CorpusRole,
    pub ssi: Option<String>,
    pub source: Option<String>,
    pub target: String,
}

impl DataTriplet {
    pub fn record(target: &SelTree) -> Self {
        DataTriplet {
            role: CorpusRole::Record,
            ssi: None,
            source: None,
            target: serialize_sel(target),
        }
    }

    pub fn text(corruption: CorruptionOutput) -> Self {
        DataTriplet {
            role: CorpusRole::Text,
            ssi: None,
            source: Some(corruption.x_prime),
            target: corruption.x_double_prime,
        }
    }

    pub fn pair(ssi: String, source: String, target: &SelTree) -> Self {
        DataTriplet {
            role: CorpusRole::Pair,
            ssi: Some(ssi),
            source: Some(source),
            target: serialize_sel(target),
        }
    }

    /// Whether the optional fields match the role.
    pub fn is_well_formed(&self) -> bool {
        match self.role {
            CorpusRole::Pair => self.ssi.is_some() && self.source.is_some(),
            CorpusRole::Record => self.ssi.is_none() && self.source.is_none(),
            CorpusRole::Text => self.ssi.is_none() && self.source.is_some(),
        }
    }
}

// ---------------------------------------------------------------------------
// Meta-schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaSchema {
    pub positive_spots: BTreeSet<String>,
    pub positive_assos: BTreeSet<String>,
    pub negative_spots: BTreeSet<String>,
    pub negative_assos: BTreeSet<String>,
}

impl MetaSchema {
    pub fn spots(&self) -> BTreeSet<&str> {
        self.positive_spots
            .iter()
            .chain(&self.negative_spots)
            .map(String::as_str)
            .collect()
    }

    pub fn assos(&self) -> BTreeSet<&str> {
        self.positive_assos
            .iter()
            .chain(&self.negative_assos)
            .map(String::as_str)
            .collect()
    }

    /// The combined label set as a schema, ready for prompt building.
    pub fn to_schema(&self) -> Schema {
        Schema::new("meta", self.spots(), self.assos(), None).expect("meta-schema labels are valid")
    }
}

/// Spot and asso labels used by non-null nodes, minus the untyped-head label.
pub fn positive_labels(tree: &SelTree) -> (BTreeSet<String>, BTreeSet<String>) {
    let mut spots = BTreeSet::new();
    let mut assos = BTreeSet::new();
    for node in tree.nodes.iter().filter(|n| !n.span.is_null()) {
        if node.label.as_str() != UNKNOWN_HEAD_TYPE {
            spots.insert(node.label.to_string());
        }
        for child in node.children.iter().filter(|c| !c.span.is_null()) {
            assos.insert(child.label.to_string());
        }
    }
    (spots, assos)
}

fn sample_without_replacement<R: Rng + ?Sized>(
    pool: &[String],
    exclude: &BTreeSet<String>,
    k: usize,
    rng: &mut R,
) -> BTreeSet<String> {
    let candidates: Vec<&String> = pool.iter().filter(|l| !exclude.contains(*l)).collect();
    let k = k.min(candidates.len());
    index::sample(rng, candidates.len(), k)
        .into_iter()
        .map(|i| candidates[i].clone())
        .collect()
}

/// Positive labels of `target` plus up to `max_neg` negative spots and up to
/// `max_neg` negative assos drawn uniformly without replacement from the pool.
pub fn meta_schema_sample<R: Rng + ?Sized>(
    target: &SelTree,
    pool: &Schema,
    max_neg: usize,
    rng: &mut R,
) -> MetaSchema {
    let (positive_spots, positive_assos) = positive_labels(target);
    let negative_spots = sample_without_replacement(pool.spots(), &positive_spots, max_neg, rng);
    let negative_assos = sample_without_replacement(pool.assos(), &positive_assos, max_neg, rng);
    MetaSchema {
        positive_spots,
        positive_assos,
        negative_spots,
        negative_assos,
    }
}

/// Same as [`meta_schema_sample`] with positives read off a record.
pub fn meta_schema_for_record<R: Rng + ?Sized>(
    record: &Record,
    pool: &Schema,
    max_neg: usize,
    rng: &mut R,
) -> MetaSchema {
    meta_schema_sample(&record_to_sel_joint(record, NodeOrder::Offset), pool, max_neg, rng)
}

/// Text-record pair → pair triplet with a sampled meta-schema prompt.
pub fn pair_triplet<R: Rng + ?Sized>(
    record: &Record,
    pool: &Schema,
    max_neg: usize,
    options: &SsiOptions,
    rng: &mut R,
) -> DataTriplet {
    let target = record_to_sel_joint(record, NodeOrder::Offset);
    let meta = meta_schema_sample(&target, pool, max_neg, rng);
    let ssi = build_ssi(&meta.to_schema(), options);
    DataTriplet::pair(ssi.body, record.text.raw().to_string(), &target)
}

// ---------------------------------------------------------------------------
// Span corruption
// ---------------------------------------------------------------------------

pub fn sentinel(i: usize) -> String {
    format!("<extra_id_{i}>")
}

fn sentinel_index(tok: &str) -> Option<usize> {
    tok.strip_prefix("<extra_id_")?.strip_suffix('>')?.parse().ok()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorruptionOutput {
    /// Source with each masked span replaced by its sentinel.
    pub x_prime: String,
    /// Sentinels each followed by the span they replaced, closed by one
    /// final sentinel. Empty when nothing was masked.
    pub x_double_prime: String,
    /// Masked token ranges, in order.
    pub spans: Vec<TokenRange>,
}

impl CorruptionOutput {
    pub fn masked_tokens(&self) -> usize {
        self.spans.iter().map(TokenRange::len).sum()
    }
}

/// Uniformly random composition of `total` into `parts` positive integers.
fn positive_composition<R: Rng + ?Sized>(total: usize, parts: usize, rng: &mut R) -> Vec<usize> {
    debug_assert!(parts >= 1 && parts <= total);
    let mut cuts: Vec<usize> = index::sample(rng, total - 1, parts - 1)
        .into_iter()
        .map(|c| c + 1)
        .collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0;
    for c in cuts {
        out.push(c - prev);
        prev = c;
    }
    out.push(total - prev);
    out
}

/// Uniformly random composition of `total` into `parts` non-negative integers.
fn weak_composition<R: Rng + ?Sized>(total: usize, parts: usize, rng: &mut R) -> Vec<usize> {
    positive_composition(total + parts, parts, rng)
        .into_iter()
        .map(|p| p - 1)
        .collect()
}

/// Mask random spans of `tokens`.
///
/// The sampler fixes the number of masked tokens to `round(n * rate)`
/// (at least 1, at most `n - 1`) and the number of spans to
/// `round(masked / mean_len)` (at least 1), then splits the masked tokens
/// into spans with a uniformly random positive composition. Span lengths are
/// therefore 1 plus an approximately geometric variable with the requested
/// mean. The unmasked tokens are split into the gaps with a uniformly random
/// composition that keeps every interior gap non-empty, so spans never
/// touch. Texts with fewer than two tokens or fewer tokens than `mean_len`
/// are returned unmasked.
///
/// Tokens must not contain spaces or look like sentinels for
/// [`reconstruct`] to invert the output.
pub fn span_corrupt<S: AsRef<str>, R: Rng + ?Sized>(
    tokens: &[S],
    rate: f64,
    mean_len: f64,
    rng: &mut R,
) -> Result<CorruptionOutput> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!("corruption rate {rate} not in [0, 1)")));
    }
    if !(mean_len >= 1.0) {
        return Err(Error::InvalidArgument(format!("mean span length {mean_len} below 1")));
    }
    let n = tokens.len();
    let joined = || tokens.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" ");
    if rate == 0.0 || n < 2 || (n as f64) < mean_len {
        return Ok(CorruptionOutput {
            x_prime: joined(),
            x_double_prime: String::new(),
            spans: Vec::new(),
        });
    }

    let masked = ((n as f64 * rate).round() as usize).clamp(1, n - 1);
    let kept = n - masked;
    let num_spans = ((masked as f64 / mean_len).round() as usize)
        .max(1)
        .min(masked)
        .min(kept + 1);
    let span_lens = positive_composition(masked, num_spans, rng);
    // num_spans + 1 gaps; interior gaps need at least one token each.
    let mut gaps = weak_composition(kept - (num_spans - 1), num_spans + 1, rng);
    for g in gaps.iter_mut().take(num_spans).skip(1) {
        *g += 1;
    }

    let mut spans = Vec::with_capacity(num_spans);
    let mut x_prime: Vec<String> = Vec::with_capacity(kept + num_spans);
    let mut x_double: Vec<String> = Vec::with_capacity(masked + num_spans + 1);
    let mut pos = 0;
    for (i, &len) in span_lens.iter().enumerate() {
        x_prime.extend(tokens[pos..pos + gaps[i]].iter().map(|t| t.as_ref().to_string()));
        pos += gaps[i];
        let s = sentinel(i);
        x_prime.push(s.clone());
        x_double.push(s);
        x_double.extend(tokens[pos..pos + len].iter().map(|t| t.as_ref().to_string()));
        spans.push(TokenRange::new(pos, pos + len - 1));
        pos += len;
    }
    x_prime.extend(tokens[pos..].iter().map(|t| t.as_ref().to_string()));
    x_double.push(sentinel(num_spans));
    debug_assert_eq!(pos + gaps[num_spans], n);

    Ok(CorruptionOutput {
        x_prime: x_prime.join(" "),
        x_double_prime: x_double.join(" "),
        spans,
    })
}

/// Undo [`span_corrupt`]: substitute every sentinel in `x_prime` with the
/// tokens that follow it in `x_double_prime`.
pub fn reconstruct(x_prime: &str, x_double_prime: &str) -> Result<String> {
    let mut fills: Vec<Vec<&str>> = Vec::new();
    for tok in x_double_prime.split_whitespace() {
        match sentinel_index(tok) {
            Some(i) if i == fills.len() => fills.push(Vec::new()),
            Some(i) => {
                return Err(Error::InvalidArgument(format!("sentinel {i} out of order")));
            }
            None => fills
                .last_mut()
                .ok_or_else(|| Error::InvalidArgument("target does not start with a sentinel".into()))?
                .push(tok),
        }
    }
    let mut out: Vec<&str> = Vec::new();
    for tok in x_prime.split_whitespace() {
        match sentinel_index(tok) {
            Some(i) => out.extend(
                fills
                    .get(i)
                    .ok_or_else(|| Error::InvalidArgument(format!("sentinel {i} has no span")))?,
            ),
            None => out.push(tok),
        }
    }
    Ok(out.join(" "))
}

// ---------------------------------------------------------------------------
// Rejection noise
// ---------------------------------------------------------------------------

/// Labels of `schema` that `tree` does not use: candidates for rejection nodes.
pub fn rejection_negatives(tree: &SelTree, schema: &Schema) -> (Vec<String>, Vec<String>) {
    let (spots, assos) = positive_labels(tree);
    (
        schema.spots().iter().filter(|l| !spots.contains(*l)).cloned().collect(),
        schema.assos().iter().filter(|l| !assos.contains(*l)).cloned().collect(),
    )
}

/// Insert `(label: [null])` nodes.
///
/// Each negative spot is inserted independently with probability
/// `p_epsilon` at a uniformly random top-level position. Each negative asso
/// is inserted independently with probability `p_epsilon` as a child of a
/// uniformly random non-null spot, at a uniformly random child position.
pub fn inject_rejection<R: Rng + ?Sized>(
    target: &SelTree,
    negative_spots: &[String],
    negative_assos: &[String],
    p_epsilon: f64,
    rng: &mut R,
) -> Result<SelTree> {
    if !(0.0..=1.0).contains(&p_epsilon) {
        return Err(Error::InvalidArgument(format!("p_epsilon {p_epsilon} not in [0, 1]")));
    }
    let mut out = target.clone();
    for label in negative_spots {
        if rng.gen_bool(p_epsilon) {
            let at = rng.gen_range(0..=out.nodes.len());
            out.nodes.insert(at, SpotNode::null(label)?);
        }
    }
    let hosts: Vec<usize> = (0..out.nodes.len())
        .filter(|&i| !out.nodes[i].span.is_null())
        .collect();
    for label in negative_assos {
        if rng.gen_bool(p_epsilon) && !hosts.is_empty() {
            let host = &mut out.nodes[*hosts.choose(rng).expect("non-empty")];
            let at = rng.gen_range(0..=host.children.len());
            host.children.insert(at, AssoNode::null(label)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NullCounts {
    pub spots: usize,
    pub assos: usize,
}

/// Remove every node whose span is `[null]`. A null spot takes its children with it.
pub fn strip_nulls(tree: &SelTree) -> (SelTree, NullCounts) {
    let mut counts = NullCounts::default();
    let mut out = SelTree::default();
    for node in &tree.nodes {
        if node.span.is_null() {
            counts.spots += 1;
            continue;
        }
        let mut kept = node.clone();
        kept.children.retain(|c| {
            let null = c.span.is_null();
            counts.assos += usize::from(null);
            !null
        });
        out.nodes.push(kept);
    }
    (out, counts)
}

// ---------------------------------------------------------------------------
// Knowledge-base tuples
// ---------------------------------------------------------------------------

/// `(head type, head, relation, tail, sentence)`; every field but the head may be blank.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbTuple {
    #[serde(default)]
    pub head_type: Option<String>,
    pub head: String,
    #[serde(default)]
    pub relation: Option<String>,
    #[serde(default)]
    pub tail: Option<String>,
    #[serde(default)]
    pub sentence: Option<String>,
}

fn non_blank(field: &Option<String>) -> Option<&str> {
    field.as_deref().map(str::trim).filter(|s| !s.is_empty())
}

impl KbTuple {
    /// `((head_type: head (relation: tail)))`, omitting the child when
    /// relation or tail is blank and typing blank heads as `[unk-type]`.
    pub fn to_sel(&self) -> Result<SelTree> {
        let label = non_blank(&self.head_type).unwrap_or(UNKNOWN_HEAD_TYPE);
        let mut node = SpotNode::new(label, &self.head)?;
        if let (Some(rel), Some(tail)) = (non_blank(&self.relation), non_blank(&self.tail)) {
            node = node.with_child(rel, tail)?;
        }
        Ok(SelTree::new(vec![node]))
    }
}

/// Tuple with a sentence → pair triplet; without → record triplet.
pub fn tuple_to_triplet<R: Rng + ?Sized>(
    tuple: &KbTuple,
    pool: &Schema,
    max_neg: usize,
    options: &SsiOptions,
    rng: &mut R,
) -> Result<DataTriplet> {
    let target = tuple.to_sel()?;
    Ok(match non_blank(&tuple.sentence) {
        Some(sentence) => {
            let meta = meta_schema_sample(&target, pool, max_neg, rng);
            let ssi = build_ssi(&meta.to_schema(), options);
            DataTriplet::pair(ssi.body, sentence.to_string(), &target)
        }
        None => DataTriplet::record(&target),
    })
}

// ---------------------------------------------------------------------------
// Batches
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchCounts {
    pub pair: usize,
    pub record: usize,
    pub text: usize,
}

impl std::str::FromStr for BatchCounts {
    type Err = Error;
    /// `pair,record,text`
    fn from_str(s: &str) -> Result<Self> {
        let nums: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidArgument(format!("bad counts {s:?}: {e}")))?;
        match nums.as_slice() {
            [pair, record, text] => Ok(BatchCounts {
                pair: *pair,
                record: *record,
                text: *text,
            }),
            _ => Err(Error::InvalidArgument(format!(
                "counts must be pair,record,text; got {s:?}"
            ))),
        }
    }
}

fn take_exact<I: Iterator<Item = DataTriplet>>(
    stream: &mut I,
    n: usize,
    role: CorpusRole,
    name: &'static str,
    out: &mut Vec<DataTriplet>,
) -> Result<()> {
    for _ in 0..n {
        let mut t = stream.next().ok_or(Error::StreamExhausted(name))?;
        t.role = role;
        out.push(t);
    }
    Ok(())
}

/// Draw the requested number of instances from each stream and shuffle them
/// together. Pass cycling iterators for endless streams.
pub fn pack_batch<P, D, T, R>(
    pairs: &mut P,
    records: &mut D,
    texts: &mut T,
    counts: BatchCounts,
    rng: &mut R,
) -> Result<Vec<DataTriplet>>
where
    P: Iterator<Item = DataTriplet>,
    D: Iterator<Item = DataTriplet>,
    T: Iterator<Item = DataTriplet>,
    R: Rng + ?Sized,
{
    let mut batch = Vec::with_capacity(counts.pair + counts.record + counts.text);
    take_exact(texts, counts.text, CorpusRole::Text, "text", &mut batch)?;
    take_exact(records, counts.record, CorpusRole::Record, "record", &mut batch)?;
    take_exact(pairs, counts.pair, CorpusRole::Pair, "pair", &mut batch)?;
    batch.shuffle(rng);
    Ok(batch)
}

/// Drop whole trailing top-level nodes until `measure(serialized) <= budget`.
/// Returns the number of nodes dropped.
pub fn truncate_tree(tree: &mut SelTree, budget: usize, measure: impl Fn(&str) -> usize) -> usize {
    let mut dropped = 0;
    while !tree.nodes.is_empty() && measure(&serialize_sel(tree)) > budget {
        tree.nodes.pop();
        dropped += 1;
    }
    dropped
}
