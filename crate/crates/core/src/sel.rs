//! Structured extraction language (SEL).
//!
//! An SEL expression is a two-level bracketed structure:
//!
//! ```text
//! SEL      := '(' SpotNode* ')'
//! SpotNode := '(' NAME ':' SPAN AssoNode* ')'
//! AssoNode := '(' NAME ':' SPAN ')'
//! ```
//!
//! Whitespace between tokens is insignificant. The literal span `[null]`
//! marks a rejection node.
//!
//! Parsing is done in two passes. The input is first folded into a forest of
//! bracket groups (auto-closing anything left open at end of input), then the
//! groups are interpreted as spot and association nodes. Strict mode is the
//! tolerant parse with the extra requirement that no diagnostic was raised,
//! so a strict-valid string always parses identically in both modes.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::Schema;

/// Literal used for a rejected (absent) span.
pub const NULL_SPAN: &str = "[null]";

const STRUCTURE_CHARS: [char; 3] = ['(', ')', ':'];

/// Trim and collapse internal whitespace runs to a single space.
pub fn normalize_label(raw: &str) -> String {
    raw.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// A spot or association name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Label(String);

impl Label {
    pub fn new(raw: &str) -> Result<Self> {
        let norm = normalize_label(raw);
        if norm.is_empty() {
            return Err(Error::InvalidLabel {
                label: raw.to_string(),
                reason: "empty",
            });
        }
        if norm.contains(STRUCTURE_CHARS) {
            return Err(Error::InvalidLabel {
                label: raw.to_string(),
                reason: "contains a structure character",
            });
        }
        Ok(Label(norm))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Label {
    type Error = Error;
    fn try_from(value: String) -> Result<Self> {
        Label::new(&value)
    }
}

impl From<Label> for String {
    fn from(value: Label) -> Self {
        value.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Text span of a node, or `[null]`.
///
/// Spans built through [`InfoSpan::text`] never contain `(`, `)` or `:`.
/// The tolerant parser may produce spans containing `:` when it salvages
/// a node like `(time: 10:30)`; such spans serialize verbatim but are not
/// strict-parseable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Option<String>", into = "Option<String>")]
pub struct InfoSpan(Option<String>);

impl InfoSpan {
    pub fn text(raw: &str) -> Result<Self> {
        let norm = normalize_label(raw);
        if norm.is_empty() {
            return Err(Error::InvalidSpan {
                span: raw.to_string(),
                reason: "empty",
            });
        }
        if norm.contains(STRUCTURE_CHARS) {
            return Err(Error::InvalidSpan {
                span: raw.to_string(),
                reason: "contains a structure character",
            });
        }
        if norm == NULL_SPAN {
            return Err(Error::InvalidSpan {
                span: raw.to_string(),
                reason: "reserved null literal",
            });
        }
        Ok(InfoSpan(Some(norm)))
    }

    pub const fn null() -> Self {
        InfoSpan(None)
    }

    pub fn is_null(&self) -> bool {
        self.0.is_none()
    }

    pub fn as_text(&self) -> Option<&str> {
        self.0.as_deref()
    }
}

impl TryFrom<Option<String>> for InfoSpan {
    type Error = Error;
    fn try_from(value: Option<String>) -> Result<Self> {
        match value {
            None => Ok(InfoSpan::null()),
            Some(s) if s.trim() == NULL_SPAN => Ok(InfoSpan::null()),
            Some(s) => InfoSpan::text(&s),
        }
    }
}

impl From<InfoSpan> for Option<String> {
    fn from(value: InfoSpan) -> Self {
        value.0
    }
}

impl fmt::Display for InfoSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0.as_deref().unwrap_or(NULL_SPAN))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AssoNode {
    #[serde(rename = "asso")]
    pub label: Label,
    pub span: InfoSpan,
}

impl AssoNode {
    pub fn new(label: &str, span: &str) -> Result<Self> {
        Ok(AssoNode {
            label: Label::new(label)?,
            span: InfoSpan::text(span)?,
        })
    }

    pub fn null(label: &str) -> Result<Self> {
        Ok(AssoNode {
            label: Label::new(label)?,
            span: InfoSpan::null(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpotNode {
    #[serde(rename = "spot")]
    pub label: Label,
    pub span: InfoSpan,
    #[serde(default)]
    pub children: Vec<AssoNode>,
}

impl SpotNode {
    pub fn new(label: &str, span: &str) -> Result<Self> {
        Ok(SpotNode {
            label: Label::new(label)?,
            span: InfoSpan::text(span)?,
            children: Vec::new(),
        })
    }

    pub fn null(label: &str) -> Result<Self> {
        Ok(SpotNode {
            label: Label::new(label)?,
            span: InfoSpan::null(),
            children: Vec::new(),
        })
    }

    pub fn with_child(mut self, label: &str, span: &str) -> Result<Self> {
        self.children.push(AssoNode::new(label, span)?);
        Ok(self)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SelTree {
    pub nodes: Vec<SpotNode>,
}

impl SelTree {
    pub fn new(nodes: Vec<SpotNode>) -> Self {
        SelTree { nodes }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Canonical linear form.
    pub fn serialize(&self) -> String {
        serialize_sel(self)
    }
}

impl fmt::Display for SelTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_sel(self))
    }
}

impl FromIterator<SpotNode> for SelTree {
    fn from_iter<I: IntoIterator<Item = SpotNode>>(iter: I) -> Self {
        SelTree {
            nodes: iter.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticKind {
    UnbalancedParen,
    MissingColon,
    EmptyLabel,
    EmptySpan,
    TruncatedNode,
    /// Node nested deeper than spot → association.
    TooDeep,
    /// Text or ':' where only a bracketed node may appear.
    StrayText,
    /// A ':' inside a span; salvaged as span text.
    ColonInSpan,
}

impl DiagnosticKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticKind::UnbalancedParen => "unbalanced-paren",
            DiagnosticKind::MissingColon => "missing-colon",
            DiagnosticKind::EmptyLabel => "empty-label",
            DiagnosticKind::EmptySpan => "empty-span",
            DiagnosticKind::TruncatedNode => "truncated-node",
            DiagnosticKind::TooDeep => "too-deep",
            DiagnosticKind::StrayText => "stray-text",
            DiagnosticKind::ColonInSpan => "colon-in-span",
        }
    }
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One parse problem. `position` is a character (not byte) offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub position: usize,
    pub kind: DiagnosticKind,
    /// Whether the affected content was kept in the tree.
    pub recovered: bool,
}

impl fmt::Display for Diagnostic {
    /// Line-report form: `position<TAB>kind<TAB>recovered|dropped`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}",
            self.position,
            self.kind,
            if self.recovered { "recovered" } else { "dropped" }
        )
    }
}

pub type ParseDiagnostics = Vec<Diagnostic>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    #[default]
    Strict,
    Tolerant,
}

impl std::str::FromStr for ParseMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(ParseMode::Strict),
            "tolerant" => Ok(ParseMode::Tolerant),
            other => Err(Error::InvalidArgument(format!("unknown parse mode {other:?}"))),
        }
    }
}

/// Parse an SEL string. Strict mode fails on the first (leftmost) grammar
/// violation; tolerant mode never fails.
pub fn parse_sel(text: &str, mode: ParseMode) -> Result<(SelTree, ParseDiagnostics)> {
    let (tree, diagnostics) = parse_tolerant(text);
    match mode {
        ParseMode::Tolerant => Ok((tree, diagnostics)),
        ParseMode::Strict => match diagnostics.iter().min_by_key(|d| d.position) {
            Some(first) => Err(Error::Syntax(*first)),
            None => Ok((tree, diagnostics)),
        },
    }
}

pub fn parse_strict(text: &str) -> Result<SelTree> {
    parse_sel(text, ParseMode::Strict).map(|(tree, _)| tree)
}

pub fn parse_tolerant(text: &str) -> (SelTree, ParseDiagnostics) {
    let tokens = lex(text);
    let mut diags = Vec::new();
    let forest = build_forest(&tokens, text.chars().count(), &mut diags);
    let tree = Interpreter {
        src: text,
        diags: &mut diags,
    }
    .root(&forest);
    (tree, diags)
}

pub fn serialize_sel(tree: &SelTree) -> String {
    let mut out = String::with_capacity(64);
    out.push('(');
    for (i, node) in tree.nodes.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push('(');
        out.push_str(node.label.as_str());
        out.push_str(": ");
        out.push_str(&node.span.to_string());
        for child in &node.children {
            out.push_str(" (");
            out.push_str(child.label.as_str());
            out.push_str(": ");
            out.push_str(&child.span.to_string());
            out.push(')');
        }
        out.push(')');
    }
    out.push(')');
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TokKind {
    Open,
    Close,
    Colon,
    Text,
}

#[derive(Debug, Clone, Copy)]
struct Tok {
    kind: TokKind,
    /// Character offset of the first non-blank character.
    pos: usize,
    /// Byte range into the source.
    start: usize,
    end: usize,
}

fn lex(src: &str) -> Vec<Tok> {
    let mut toks = Vec::new();
    let mut text_start: Option<(usize, usize)> = None; // (byte, char)
    let flush = |toks: &mut Vec<Tok>, from: Option<(usize, usize)>, to: usize| {
        if let Some((b, _)) = from {
            let raw = &src[b..to];
            if !raw.trim().is_empty() {
                let lead = raw.len() - raw.trim_start().len();
                let pos = src[..b + lead].chars().count();
                toks.push(Tok {
                    kind: TokKind::Text,
                    pos,
                    start: b,
                    end: to,
                });
            }
        }
    };
    for (char_idx, (byte_idx, ch)) in src.char_indices().enumerate() {
        let kind = match ch {
            '(' => TokKind::Open,
            ')' => TokKind::Close,
            ':' => TokKind::Colon,
            _ => {
                if text_start.is_none() {
                    text_start = Some((byte_idx, char_idx));
                }
                continue;
            }
        };
        flush(&mut toks, text_start.take(), byte_idx);
        toks.push(Tok {
            kind,
            pos: char_idx,
            start: byte_idx,
            end: byte_idx + 1,
        });
    }
    flush(&mut toks, text_start.take(), src.len());
    toks
}

#[derive(Debug)]
enum Item {
    Leaf(Tok),
    Group(Group),
}

impl Item {
    fn pos(&self) -> usize {
        match self {
            Item::Leaf(t) => t.pos,
            Item::Group(g) => g.open_pos,
        }
    }
}

#[derive(Debug)]
struct Group {
    open_pos: usize,
    items: Vec<Item>,
}

fn build_forest(tokens: &[Tok], end_pos: usize, diags: &mut Vec<Diagnostic>) -> Vec<Item> {
    let mut stack: Vec<Group> = Vec::new();
    let mut top: Vec<Item> = Vec::new();
    for tok in tokens {
        match tok.kind {
            TokKind::Open => stack.push(Group {
                open_pos: tok.pos,
                items: Vec::new(),
            }),
            TokKind::Close => match stack.pop() {
                Some(group) => match stack.last_mut() {
                    Some(parent) => parent.items.push(Item::Group(group)),
                    None => top.push(Item::Group(group)),
                },
                None => diags.push(Diagnostic {
                    position: tok.pos,
                    kind: DiagnosticKind::UnbalancedParen,
                    recovered: true,
                }),
            },
            TokKind::Colon | TokKind::Text => match stack.last_mut() {
                Some(parent) => parent.items.push(Item::Leaf(*tok)),
                None => top.push(Item::Leaf(*tok)),
            },
        }
    }
    if !stack.is_empty() {
        diags.push(Diagnostic {
            position: end_pos,
            kind: DiagnosticKind::UnbalancedParen,
            recovered: true,
        });
        while let Some(group) = stack.pop() {
            match stack.last_mut() {
                Some(parent) => parent.items.push(Item::Group(group)),
                None => top.push(Item::Group(group)),
            }
        }
    }
    top
}

struct Interpreter<'a> {
    src: &'a str,
    diags: &'a mut Vec<Diagnostic>,
}

impl Interpreter<'_> {
    fn diag(&mut self, position: usize, kind: DiagnosticKind, recovered: bool) {
        self.diags.push(Diagnostic {
            position,
            kind,
            recovered,
        });
    }

    fn root(&mut self, forest: &[Item]) -> SelTree {
        let mut nodes = Vec::new();
        if forest.is_empty() {
            self.diag(0, DiagnosticKind::TruncatedNode, false);
            return SelTree::default();
        }
        let mut seen_container = false;
        for item in forest {
            match item {
                Item::Leaf(tok) => self.diag(tok.pos, DiagnosticKind::StrayText, false),
                Item::Group(group) if looks_like_node(group) => {
                    // A node outside of the outer wrapper.
                    self.diag(group.open_pos, DiagnosticKind::UnbalancedParen, true);
                    if let Some(node) = self.spot(group) {
                        nodes.push(node);
                    }
                }
                Item::Group(group) => {
                    if seen_container {
                        self.diag(group.open_pos, DiagnosticKind::StrayText, true);
                    }
                    seen_container = true;
                    for inner in &group.items {
                        match inner {
                            Item::Leaf(tok) => {
                                self.diag(tok.pos, DiagnosticKind::StrayText, false)
                            }
                            Item::Group(g) => {
                                if let Some(node) = self.spot(g) {
                                    nodes.push(node);
                                }
                            }
                        }
                    }
                }
            }
        }
        SelTree { nodes }
    }

    /// Reads `NAME ':' SPAN` from the head of a group; returns the parsed
    /// pair and the index of the first item after the span.
    fn head(&mut self, group: &Group) -> Option<(Label, InfoSpan, usize)> {
        let items = &group.items;
        let label_tok = match items.first() {
            None => {
                self.diag(group.open_pos, DiagnosticKind::TruncatedNode, false);
                return None;
            }
            Some(Item::Group(_)) => {
                self.diag(group.open_pos, DiagnosticKind::TooDeep, false);
                return None;
            }
            Some(Item::Leaf(tok)) if tok.kind == TokKind::Colon => {
                self.diag(tok.pos, DiagnosticKind::EmptyLabel, false);
                return None;
            }
            Some(Item::Leaf(tok)) => *tok,
        };
        let colon = match items.get(1) {
            Some(Item::Leaf(tok)) if tok.kind == TokKind::Colon => *tok,
            Some(other) => {
                self.diag(other.pos(), DiagnosticKind::MissingColon, false);
                return None;
            }
            None => {
                let pos = label_tok.pos + self.src[label_tok.start..label_tok.end].trim().chars().count();
                self.diag(pos, DiagnosticKind::MissingColon, false);
                return None;
            }
        };
        // Label tokens are non-blank text without structure characters.
        let label = Label::new(&self.src[label_tok.start..label_tok.end]).ok()?;

        let mut idx = 2;
        let mut first: Option<Tok> = None;
        let mut last: Option<Tok> = None;
        let mut inner_colon: Option<usize> = None;
        while let Some(Item::Leaf(tok)) = items.get(idx) {
            if tok.kind == TokKind::Colon && inner_colon.is_none() {
                inner_colon = Some(tok.pos);
            }
            first.get_or_insert(*tok);
            last = Some(*tok);
            idx += 1;
        }
        let (Some(first), Some(last)) = (first, last) else {
            self.diag(colon.pos + 1, DiagnosticKind::EmptySpan, false);
            return None;
        };
        let raw = normalize_label(&self.src[first.start..last.end]);
        let span = if let Some(pos) = inner_colon {
            self.diag(pos, DiagnosticKind::ColonInSpan, true);
            InfoSpan(Some(raw))
        } else if raw == NULL_SPAN {
            InfoSpan::null()
        } else {
            InfoSpan(Some(raw))
        };
        Some((label, span, idx))
    }

    fn spot(&mut self, group: &Group) -> Option<SpotNode> {
        let (label, span, rest) = self.head(group)?;
        let mut children = Vec::new();
        for item in &group.items[rest..] {
            match item {
                Item::Group(g) => {
                    if let Some(child) = self.asso(g) {
                        children.push(child);
                    }
                }
                Item::Leaf(tok) => self.diag(tok.pos, DiagnosticKind::StrayText, false),
            }
        }
        Some(SpotNode {
            label,
            span,
            children,
        })
    }

    fn asso(&mut self, group: &Group) -> Option<AssoNode> {
        let (label, span, rest) = self.head(group)?;
        for item in &group.items[rest..] {
            match item {
                Item::Group(g) => self.diag(g.open_pos, DiagnosticKind::TooDeep, true),
                Item::Leaf(tok) => self.diag(tok.pos, DiagnosticKind::StrayText, false),
            }
        }
        Some(AssoNode { label, span })
    }
}

fn looks_like_node(group: &Group) -> bool {
    matches!(
        (group.items.first(), group.items.get(1)),
        (Some(Item::Leaf(a)), Some(Item::Leaf(b))) if a.kind == TokKind::Text && b.kind == TokKind::Colon
    )
}

/// A label in a tree that the schema does not admit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    UnknownSpot {
        node: usize,
        label: String,
    },
    UnknownAsso {
        node: usize,
        child: usize,
        label: String,
    },
    IncompatiblePair {
        node: usize,
        child: usize,
        spot: String,
        asso: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownSpot { node, label } => {
                write!(f, "node {node}: unknown spot {label:?}")
            }
            Violation::UnknownAsso { node, child, label } => {
                write!(f, "node {node} child {child}: unknown asso {label:?}")
            }
            Violation::IncompatiblePair {
                node,
                child,
                spot,
                asso,
            } => write!(f, "node {node} child {child}: {asso:?} not allowed under {spot:?}"),
        }
    }
}

pub fn validate_against_schema(tree: &SelTree, schema: &Schema) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, node) in tree.nodes.iter().enumerate() {
        let spot = node.label.as_str();
        if !schema.has_spot(spot) {
            out.push(Violation::UnknownSpot {
                node: i,
                label: spot.to_string(),
            });
        }
        for (j, child) in node.children.iter().enumerate() {
            let asso = child.label.as_str();
            if !schema.has_asso(asso) {
                out.push(Violation::UnknownAsso {
                    node: i,
                    child: j,
                    label: asso.to_string(),
                });
            } else if !schema.allows(spot, asso) {
                out.push(Violation::IncompatiblePair {
                    node: i,
                    child: j,
                    spot: spot.to_string(),
                    asso: asso.to_string(),
                });
            }
        }
    }
    out
}
