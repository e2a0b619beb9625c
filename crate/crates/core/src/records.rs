//! Offset-grounded extraction records and their conversion to and from SEL.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcher::{assign_offsets, Slot};
use crate::schema::Schema;
use crate::sel::{AssoNode, InfoSpan, Label, SelTree, SpotNode};

pub const POLARITIES: [&str; 3] = ["positive", "negative", "neutral"];
pub const ASPECT: &str = "aspect";
pub const OPINION: &str = "opinion";
/// Relation tails with no top-level node of their own get this type.
pub const UNKNOWN_TYPE: &str = "unknown";

/// Inclusive token range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TokenRange {
    pub start: usize,
    pub end: usize,
}

impl TokenRange {
    pub const fn new(start: usize, end: usize) -> Self {
        TokenRange { start, end }
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for TokenRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub surface: String,
    /// Character offsets into the raw text, end exclusive.
    pub char_start: usize,
    pub char_end: usize,
}

/// Raw text plus a caller-supplied tokenization.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenizedText {
    raw: String,
    tokens: Vec<Token>,
}

impl TokenizedText {
    /// Build from `[start, end)` character offsets. Tokens must be ordered,
    /// non-overlapping, non-empty and inside `raw`.
    pub fn new(raw: impl Into<String>, offsets: &[(usize, usize)]) -> Result<Self> {
        let raw = raw.into();
        let chars: Vec<(usize, char)> = raw.char_indices().collect();
        let byte_at = |c: usize| chars.get(c).map(|(b, _)| *b).unwrap_or(raw.len());
        let mut tokens = Vec::with_capacity(offsets.len());
        let mut prev_end = 0;
        for (i, &(start, end)) in offsets.iter().enumerate() {
            if start >= end || end > chars.len() || start < prev_end {
                return Err(Error::InvalidArgument(format!(
                    "token {i} has invalid offsets [{start}, {end})"
                )));
            }
            prev_end = end;
            tokens.push(Token {
                surface: raw[byte_at(start)..byte_at(end)].to_string(),
                char_start: start,
                char_end: end,
            });
        }
        Ok(TokenizedText { raw, tokens })
    }

    /// Split on whitespace.
    pub fn whitespace(raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let mut offsets = Vec::new();
        let mut start = None;
        let mut count = 0;
        for (i, ch) in raw.chars().enumerate() {
            match (ch.is_whitespace(), start) {
                (true, Some(s)) => {
                    offsets.push((s, i));
                    start = None;
                }
                (false, None) => start = Some(i),
                _ => {}
            }
            count = i + 1;
        }
        if let Some(s) = start {
            offsets.push((s, count));
        }
        TokenizedText::new(raw, &offsets).expect("whitespace offsets are valid")
    }

    /// Join surfaces with single spaces.
    pub fn from_tokens<S: AsRef<str>>(tokens: &[S]) -> Self {
        let raw = tokens.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" ");
        let mut offsets = Vec::with_capacity(tokens.len());
        let mut pos = 0;
        for t in tokens {
            let n = t.as_ref().chars().count();
            offsets.push((pos, pos + n));
            pos += n + 1;
        }
        TokenizedText::new(raw, &offsets).expect("joined offsets are valid")
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.surface.as_str())
    }

    /// Space-joined surface of an inclusive token range.
    pub fn surface(&self, range: TokenRange) -> Option<String> {
        let toks = self.tokens.get(range.start..=range.end)?;
        Some(toks.iter().map(|t| t.surface.as_str()).collect::<Vec<_>>().join(" "))
    }

    pub fn offsets(&self) -> Vec<(usize, usize)> {
        self.tokens.iter().map(|t| (t.char_start, t.char_end)).collect()
    }

    pub fn mention(&self, label: &str, start: usize, end: usize) -> Result<Mention> {
        let range = TokenRange::new(start, end);
        if start > end {
            return Err(Error::InvalidArgument(format!("mention {range} is reversed")));
        }
        let surface = self.surface(range).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "mention {range} out of bounds for {} tokens",
                self.len()
            ))
        })?;
        Ok(Mention {
            label: label.to_string(),
            start,
            end,
            surface,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mention {
    pub label: String,
    pub start: usize,
    /// Inclusive.
    pub end: usize,
    pub surface: String,
}

impl Mention {
    pub fn range(&self) -> TokenRange {
        TokenRange::new(self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Relation {
    pub head: Mention,
    pub label: String,
    pub tail: Mention,
}

/// An event argument; `mention.label` carries the role.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventArg {
    pub role: String,
    pub mention: Mention,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Event {
    /// Trigger mention; its label is the event type.
    pub trigger: Mention,
    pub args: Vec<EventArg>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sentiment {
    pub aspect: Mention,
    pub polarity: String,
    pub opinion: Mention,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub text: TokenizedText,
    pub entities: Vec<Mention>,
    pub relations: Vec<Relation>,
    pub events: Vec<Event>,
    pub sentiments: Vec<Sentiment>,
}

impl Record {
    pub fn new(text: TokenizedText) -> Self {
        Record {
            text,
            entities: Vec::new(),
            relations: Vec::new(),
            events: Vec::new(),
            sentiments: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
            && self.relations.is_empty()
            && self.events.is_empty()
            && self.sentiments.is_empty()
    }

    fn mentions(&self) -> impl Iterator<Item = &Mention> {
        self.entities
            .iter()
            .chain(self.relations.iter().flat_map(|r| [&r.head, &r.tail]))
            .chain(
                self.events
                    .iter()
                    .flat_map(|e| std::iter::once(&e.trigger).chain(e.args.iter().map(|a| &a.mention))),
            )
            .chain(self.sentiments.iter().flat_map(|s| [&s.aspect, &s.opinion]))
    }

    /// Check every mention against the text and every polarity label.
    pub fn validate(&self) -> Result<()> {
        for m in self.mentions() {
            let expected = self.text.mention(&m.label, m.start, m.end)?;
            if expected.surface != m.surface {
                return Err(Error::InvalidArgument(format!(
                    "mention {} surface {:?} does not match text {:?}",
                    m.range(),
                    m.surface,
                    expected.surface
                )));
            }
        }
        for s in &self.sentiments {
            if !POLARITIES.contains(&s.polarity.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "unknown sentiment polarity {:?}",
                    s.polarity
                )));
            }
        }
        Ok(())
    }

    /// Keep only the annotations a task reads.
    pub fn project(mut self, task: TaskKind) -> Self {
        match task {
            TaskKind::Entity => {
                self.relations.clear();
                self.events.clear();
                self.sentiments.clear();
            }
            TaskKind::Relation => {
                self.events.clear();
                self.sentiments.clear();
            }
            TaskKind::Event => {
                self.entities.clear();
                self.relations.clear();
                self.sentiments.clear();
            }
            TaskKind::Sentiment => {
                self.entities.clear();
                self.relations.clear();
                self.events.clear();
            }
        }
        self
    }

    /// Schema holding exactly the labels this record uses for `tasks`.
    pub fn derived_schema(&self, tasks: &[TaskKind]) -> Schema {
        let tree = record_to_sel_with(self, tasks, NodeOrder::Offset);
        schema_of_tree(&tree)
    }
}

/// Schema whose spots and assos are exactly the labels used in `tree`.
pub fn schema_of_tree(tree: &SelTree) -> Schema {
    let mut spots = std::collections::BTreeSet::new();
    let mut assos = std::collections::BTreeSet::new();
    for node in &tree.nodes {
        spots.insert(node.label.as_str());
        for child in &node.children {
            assos.insert(child.label.as_str());
        }
    }
    Schema::new("derived", spots, assos, None).expect("tree labels are valid schema labels")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Entity,
    Relation,
    Event,
    Sentiment,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [
        TaskKind::Entity,
        TaskKind::Relation,
        TaskKind::Event,
        TaskKind::Sentiment,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Entity => "entity",
            TaskKind::Relation => "relation",
            TaskKind::Event => "event",
            TaskKind::Sentiment => "sentiment",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        TaskKind::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown task {s:?}")))
    }
}

/// Top-level node ordering for record → SEL.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NodeOrder {
    /// By the spot mention's token offsets.
    #[default]
    Offset,
    /// Entities heading relations, then event triggers, then remaining
    /// entities, then sentiment nodes; offset order inside each group.
    TaskGrouped,
}

struct PendingNode {
    range: TokenRange,
    group: u8,
    label: String,
    surface: String,
    children: Vec<(TokenRange, String, String)>,
}

#[derive(Default)]
struct TreeBuilder {
    nodes: Vec<PendingNode>,
    index: HashMap<(String, TokenRange), usize>,
}

impl TreeBuilder {
    fn push(&mut self, m: &Mention, label: &str, group: u8) -> usize {
        self.nodes.push(PendingNode {
            range: m.range(),
            group,
            label: label.to_string(),
            surface: m.surface.clone(),
            children: Vec::new(),
        });
        self.nodes.len() - 1
    }

    /// Reuse the node with the same label and range if one exists.
    fn shared(&mut self, m: &Mention, label: &str, group: u8) -> usize {
        let key = (label.to_string(), m.range());
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let i = self.push(m, label, group);
        self.index.insert(key, i);
        i
    }

    fn child(&mut self, node: usize, label: &str, m: &Mention) {
        self.nodes[node]
            .children
            .push((m.range(), label.to_string(), m.surface.clone()));
    }

    fn finish(mut self, order: NodeOrder) -> SelTree {
        for n in &mut self.nodes {
            n.children.sort_by_key(|c| c.0);
        }
        let mut idx: Vec<usize> = (0..self.nodes.len()).collect();
        match order {
            NodeOrder::Offset => idx.sort_by_key(|&i| self.nodes[i].range),
            NodeOrder::TaskGrouped => {
                idx.sort_by_key(|&i| (self.nodes[i].group, self.nodes[i].range))
            }
        }
        let mut tree = SelTree::default();
        for i in idx {
            let n = &self.nodes[i];
            let (label, span) = match (Label::new(&n.label), InfoSpan::text(&n.surface)) {
                (Ok(l), Ok(s)) => (l, s),
                (Err(e), _) | (_, Err(e)) => {
                    log::warn!("skipping node {:?}: {e}", n.label);
                    continue;
                }
            };
            let mut node = SpotNode {
                label,
                span,
                children: Vec::with_capacity(n.children.len()),
            };
            for (_, label, surface) in &n.children {
                match AssoNode::new(label, surface) {
                    Ok(child) => node.children.push(child),
                    Err(e) => log::warn!("skipping child {label:?}: {e}"),
                }
            }
            tree.nodes.push(node);
        }
        tree
    }
}

const GROUP_RELATION_HEAD: u8 = 0;
const GROUP_EVENT: u8 = 1;
const GROUP_ENTITY: u8 = 2;
const GROUP_SENTIMENT: u8 = 3;

/// Linearize the annotations of one task.
pub fn record_to_sel(record: &Record, task: TaskKind) -> SelTree {
    let mismatch = match task {
        TaskKind::Entity => record.entities.is_empty() && !record.is_empty(),
        TaskKind::Relation => {
            record.relations.is_empty() && (!record.events.is_empty() || !record.sentiments.is_empty())
        }
        TaskKind::Event => record.events.is_empty() && !record.is_empty(),
        TaskKind::Sentiment => record.sentiments.is_empty() && !record.is_empty(),
    };
    if mismatch {
        log::warn!("record has no {task} annotations but carries others");
    }
    record_to_sel_with(record, &[task], NodeOrder::Offset)
}

/// Linearize everything a record holds into one tree.
pub fn record_to_sel_joint(record: &Record, order: NodeOrder) -> SelTree {
    record_to_sel_with(record, &TaskKind::ALL, order)
}

pub fn record_to_sel_with(record: &Record, tasks: &[TaskKind], order: NodeOrder) -> SelTree {
    let mut b = TreeBuilder::default();
    let has = |t| tasks.contains(&t);
    if has(TaskKind::Relation) {
        for m in &record.entities {
            b.shared(m, &m.label, GROUP_ENTITY);
        }
        for r in &record.relations {
            let head = b.shared(&r.head, &r.head.label, GROUP_ENTITY);
            b.nodes[head].group = GROUP_RELATION_HEAD;
            b.child(head, &r.label, &r.tail);
            b.shared(&r.tail, &r.tail.label, GROUP_ENTITY);
        }
    } else if has(TaskKind::Entity) {
        for m in &record.entities {
            b.push(m, &m.label, GROUP_ENTITY);
        }
    }
    if has(TaskKind::Event) {
        for e in &record.events {
            let node = b.push(&e.trigger, &e.trigger.label, GROUP_EVENT);
            for a in &e.args {
                b.child(node, &a.role, &a.mention);
            }
        }
    }
    if has(TaskKind::Sentiment) {
        // Aspects and opinions are keyed by range only.
        let mut aspects: HashMap<TokenRange, usize> = HashMap::new();
        let mut opinions: HashMap<TokenRange, usize> = HashMap::new();
        for s in &record.sentiments {
            let a = *aspects
                .entry(s.aspect.range())
                .or_insert_with(|| b.push(&s.aspect, ASPECT, GROUP_SENTIMENT));
            b.child(a, &s.polarity, &s.opinion);
            opinions
                .entry(s.opinion.range())
                .or_insert_with(|| b.push(&s.opinion, OPINION, GROUP_SENTIMENT));
        }
    }
    b.finish(order)
}

/// Counts of nodes that did not make it into the record.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversionReport {
    pub null_ignored: usize,
    pub unmatched_spans: usize,
    pub unknown_labels: usize,
}

impl std::ops::AddAssign for ConversionReport {
    fn add_assign(&mut self, rhs: Self) {
        self.null_ignored += rhs.null_ignored;
        self.unmatched_spans += rhs.unmatched_spans;
        self.unknown_labels += rhs.unknown_labels;
    }
}

/// Which record field a top-level node feeds.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Route {
    Entity,
    Event,
    Aspect,
    Skip,
}

/// Ground a predicted tree in the text for one task.
pub fn sel_to_record(
    tree: &SelTree,
    text: &TokenizedText,
    task: TaskKind,
    schema: &Schema,
) -> (Record, ConversionReport) {
    let route = |spot: &str| match task {
        TaskKind::Entity | TaskKind::Relation => Route::Entity,
        TaskKind::Event => Route::Event,
        TaskKind::Sentiment if spot == ASPECT => Route::Aspect,
        TaskKind::Sentiment => Route::Skip,
    };
    let (mut record, report) = ground(tree, text, &[schema], route);
    if task == TaskKind::Entity {
        record.relations.clear();
    }
    (record, report)
}

/// Ground a joint entity/relation/event tree: spots named in `event_schema`
/// become triggers, spots named in `entity_schema` become entities.
pub fn sel_to_record_joint(
    tree: &SelTree,
    text: &TokenizedText,
    entity_schema: &Schema,
    event_schema: &Schema,
) -> (Record, ConversionReport) {
    let route = |spot: &str| {
        if event_schema.has_spot(spot) {
            Route::Event
        } else {
            Route::Entity
        }
    };
    let (record, report) = ground(tree, text, &[event_schema, entity_schema], route);
    (record, report)
}

fn ground(
    tree: &SelTree,
    text: &TokenizedText,
    schemas: &[&Schema],
    route: impl Fn(&str) -> Route,
) -> (Record, ConversionReport) {
    let mut report = ConversionReport::default();

    // Drop nulls and out-of-schema labels before matching.
    let mut kept = SelTree::default();
    for node in &tree.nodes {
        if node.span.is_null() {
            report.null_ignored += 1;
            continue;
        }
        let spot = node.label.as_str();
        let Some(schema) = schemas.iter().find(|s| s.has_spot(spot)) else {
            report.unknown_labels += 1 + node.children.len();
            continue;
        };
        let mut clean = SpotNode {
            label: node.label.clone(),
            span: node.span.clone(),
            children: Vec::new(),
        };
        for child in &node.children {
            let asso = child.label.as_str();
            if child.span.is_null() {
                report.null_ignored += 1;
            } else if !schema.has_asso(asso) || !schema.allows(spot, asso) {
                report.unknown_labels += 1;
            } else {
                clean.children.push(child.clone());
            }
        }
        kept.nodes.push(clean);
    }

    let assignment = assign_offsets(&kept, text);
    let mut record = Record::new(text.clone());
    let mention = |label: &str, r: TokenRange| {
        text.mention(label, r.start, r.end)
            .expect("matcher returns in-bounds ranges")
    };

    // Types of matched top-level spots by range, first node wins.
    let mut spot_types: HashMap<TokenRange, &str> = HashMap::new();
    for (node, slot) in kept.nodes.iter().zip(&assignment.spots) {
        if let Slot::Assigned(r) = slot.spot {
            spot_types.entry(r).or_insert(node.label.as_str());
        }
    }

    for (node, slot) in kept.nodes.iter().zip(&assignment.spots) {
        let Slot::Assigned(range) = slot.spot else {
            report.unmatched_spans += 1 + node.children.len();
            continue;
        };
        let spot = node.label.as_str();
        let head = mention(spot, range);
        let children = node.children.iter().zip(&slot.children).filter_map(|(c, s)| match s {
            Slot::Assigned(r) => Some((c.label.as_str(), *r)),
            _ => None,
        });
        report.unmatched_spans += slot
            .children
            .iter()
            .filter(|s| !matches!(s, Slot::Assigned(_)))
            .count();
        match route(spot) {
            Route::Entity => {
                for (asso, r) in children {
                    let tail_type = spot_types.get(&r).copied().unwrap_or(UNKNOWN_TYPE);
                    record.relations.push(Relation {
                        head: head.clone(),
                        label: asso.to_string(),
                        tail: mention(tail_type, r),
                    });
                }
                record.entities.push(head);
            }
            Route::Event => {
                let args = children
                    .map(|(role, r)| EventArg {
                        role: role.to_string(),
                        mention: mention(role, r),
                    })
                    .collect();
                record.events.push(Event {
                    trigger: head,
                    args,
                });
            }
            Route::Aspect => {
                let head = mention(ASPECT, range);
                for (polarity, r) in children {
                    if POLARITIES.contains(&polarity) {
                        record.sentiments.push(Sentiment {
                            aspect: head.clone(),
                            polarity: polarity.to_string(),
                            opinion: mention(OPINION, r),
                        });
                    } else {
                        report.unknown_labels += 1;
                    }
                }
            }
            Route::Skip => {}
        }
    }
    (record, report)
}

// ---------------------------------------------------------------------------
// Line-delimited example format
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanLine {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionLine {
    #[serde(rename = "type")]
    pub label: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationLine {
    #[serde(rename = "type")]
    pub label: String,
    pub head: MentionLine,
    pub tail: MentionLine,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgLine {
    pub role: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventLine {
    #[serde(rename = "type")]
    pub label: String,
    pub trigger: SpanLine,
    #[serde(default)]
    pub args: Vec<ArgLine>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentimentLine {
    pub polarity: String,
    pub aspect: SpanLine,
    pub opinion: SpanLine,
}

/// One line of an example file. See `docs/FORMATS.md`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleLine {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub entities: Vec<MentionLine>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub relations: Vec<RelationLine>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<EventLine>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sentiments: Vec<SentimentLine>,
    /// A predicted SEL expression, for prediction files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sel: Option<String>,
}

impl ExampleLine {
    pub fn tokenized(&self) -> Result<TokenizedText> {
        match &self.tokens {
            Some(offsets) => TokenizedText::new(self.text.clone(), offsets),
            None => Ok(TokenizedText::whitespace(self.text.clone())),
        }
    }

    pub fn to_record(&self) -> Result<Record> {
        let text = self.tokenized()?;
        let m = |label: &str, s: usize, e: usize| text.mention(label, s, e);
        let mut record = Record::new(text.clone());
        for e in &self.entities {
            record.entities.push(m(&e.label, e.start, e.end)?);
        }
        for r in &self.relations {
            record.relations.push(Relation {
                head: m(&r.head.label, r.head.start, r.head.end)?,
                label: r.label.clone(),
                tail: m(&r.tail.label, r.tail.start, r.tail.end)?,
            });
        }
        for ev in &self.events {
            let mut args = Vec::with_capacity(ev.args.len());
            for a in &ev.args {
                args.push(EventArg {
                    role: a.role.clone(),
                    mention: m(&a.role, a.start, a.end)?,
                });
            }
            record.events.push(Event {
                trigger: m(&ev.label, ev.trigger.start, ev.trigger.end)?,
                args,
            });
        }
        for s in &self.sentiments {
            record.sentiments.push(Sentiment {
                aspect: m(ASPECT, s.aspect.start, s.aspect.end)?,
                polarity: s.polarity.clone(),
                opinion: m(OPINION, s.opinion.start, s.opinion.end)?,
            });
        }
        record.validate()?;
        Ok(record)
    }

    pub fn from_record(record: &Record) -> Self {
        let ml = |m: &Mention| MentionLine {
            label: m.label.clone(),
            start: m.start,
            end: m.end,
        };
        let sl = |m: &Mention| SpanLine {
            start: m.start,
            end: m.end,
        };
        ExampleLine {
            id: None,
            text: record.text.raw().to_string(),
            tokens: Some(record.text.offsets()),
            entities: record.entities.iter().map(ml).collect(),
            relations: record
                .relations
                .iter()
                .map(|r| RelationLine {
                    label: r.label.clone(),
                    head: ml(&r.head),
                    tail: ml(&r.tail),
                })
                .collect(),
            events: record
                .events
                .iter()
                .map(|e| EventLine {
                    label: e.trigger.label.clone(),
                    trigger: sl(&e.trigger),
                    args: e
                        .args
                        .iter()
                        .map(|a| ArgLine {
                            role: a.role.clone(),
                            start: a.mention.start,
                            end: a.mention.end,
                        })
                        .collect(),
                })
                .collect(),
            sentiments: record
                .sentiments
                .iter()
                .map(|s| SentimentLine {
                    polarity: s.polarity.clone(),
                    aspect: sl(&s.aspect),
                    opinion: sl(&s.opinion),
                })
                .collect(),
            sel: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Example {
    /// 1-based line number in the source file.
    pub line: usize,
    pub id: Option<String>,
    pub record: Record,
    pub sel: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadMode {
    /// Abort at the first bad line.
    #[default]
    Strict,
    /// Skip bad lines with a warning.
    Lenient,
}

/// Streaming reader over a line-delimited example file.
pub struct ExampleReader<R> {
    lines: std::io::Lines<R>,
    line: usize,
    task: Option<TaskKind>,
    mode: LoadMode,
    skipped: usize,
    failed: bool,
    path: Option<std::path::PathBuf>,
}

impl<R: BufRead> ExampleReader<R> {
    pub fn new(reader: R, task: Option<TaskKind>, mode: LoadMode) -> Self {
        ExampleReader {
            lines: reader.lines(),
            line: 0,
            task,
            mode,
            skipped: 0,
            failed: false,
            path: None,
        }
    }

    /// Lines skipped in lenient mode so far.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    fn locate(&self, e: Error) -> Error {
        match &self.path {
            Some(p) => e.in_file(p),
            None => e,
        }
    }

    fn parse_line(&self, text: &str) -> Result<Example> {
        let parsed: ExampleLine =
            serde_json::from_str(text).map_err(|e| Error::format(self.line, e.to_string()))?;
        let mut record = parsed
            .to_record()
            .map_err(|e| Error::format(self.line, e.to_string()))?;
        if let Some(task) = self.task {
            record = record.project(task);
        }
        Ok(Example {
            line: self.line,
            id: parsed.id,
            record,
            sel: parsed.sel,
        })
    }
}

impl<R: BufRead> Iterator for ExampleReader<R> {
    type Item = Result<Example>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            let raw = match self.lines.next()? {
                Ok(raw) => raw,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(self.locate(Error::format(self.line + 1, e.to_string()))));
                }
            };
            self.line += 1;
            if raw.trim().is_empty() {
                continue;
            }
            match self.parse_line(&raw) {
                Ok(ex) => return Some(Ok(ex)),
                Err(e) if self.mode == LoadMode::Lenient => {
                    log::warn!("skipping {}", self.locate(e));
                    self.skipped += 1;
                }
                Err(e) => {
                    self.failed = true;
                    return Some(Err(self.locate(e)));
                }
            }
        }
    }
}

pub fn load_examples(
    path: impl AsRef<Path>,
    task: Option<TaskKind>,
    mode: LoadMode,
) -> Result<ExampleReader<BufReader<File>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = ExampleReader::new(BufReader::new(file), task, mode);
    reader.path = Some(path.to_path_buf());
    Ok(reader)
}
