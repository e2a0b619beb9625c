//! Mapping generated spans back to token offsets.
//!
//! Top-level spans take the earliest occurrence not yet taken at the top
//! level, in tree order. Child spans take the occurrence nearest to their
//! parent that no sibling has taken. "Taken" means the exact same token
//! range, so nested mentions (`Filipino` inside `Filipino President`) can
//! coexist at one level.

use crate::records::{TokenRange, TokenizedText};
use crate::sel::SelTree;

/// Ranges already consumed at one level of the tree.
#[derive(Debug, Clone, Default)]
pub struct MatchState {
    consumed: Vec<TokenRange>,
}

impl MatchState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_consumed(&self, range: TokenRange) -> bool {
        self.consumed.contains(&range)
    }

    pub fn consume(&mut self, range: TokenRange) {
        debug_assert!(!self.is_consumed(range));
        self.consumed.push(range);
    }

    pub fn consumed(&self) -> &[TokenRange] {
        &self.consumed
    }
}

/// Outcome for one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Assigned(TokenRange),
    Unmatched,
    /// `[null]` span; never matched.
    Null,
}

impl Slot {
    pub fn range(self) -> Option<TokenRange> {
        match self {
            Slot::Assigned(r) => Some(r),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeOffsets {
    pub spot: Slot,
    /// One slot per child; all `Unmatched` when the spot is unmatched.
    pub children: Vec<Slot>,
}

/// Offsets for every node of a tree, parallel to `tree.nodes`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OffsetAssignment {
    pub spots: Vec<NodeOffsets>,
}

/// All token-aligned occurrences of `span`, in text order.
///
/// A window matches when its surfaces joined by single spaces equal `span`
/// exactly (case-sensitive).
pub fn find_occurrences(span: &str, text: &TokenizedText) -> Vec<TokenRange> {
    let span = span.trim();
    let mut out = Vec::new();
    if span.is_empty() {
        return out;
    }
    let tokens = text.tokens();
    for start in 0..tokens.len() {
        // Walk the span left to right, consuming one token and one separator at a time.
        let mut rest = span;
        for (end, tok) in tokens.iter().enumerate().skip(start) {
            let Some(after) = rest.strip_prefix(tok.surface.as_str()) else {
                break;
            };
            if after.is_empty() {
                out.push(TokenRange::new(start, end));
                break;
            }
            match after.strip_prefix(' ') {
                Some(next) => rest = next,
                None => break,
            }
        }
    }
    out
}

/// Tokens strictly between two ranges; 0 when they touch or overlap.
pub fn token_gap(a: TokenRange, b: TokenRange) -> usize {
    if a.end < b.start {
        b.start - a.end - 1
    } else if b.end < a.start {
        a.start - b.end - 1
    } else {
        0
    }
}

/// Assign the top-level spans of `tree`, left to right.
pub fn assign_spot_offsets(tree: &SelTree, text: &TokenizedText) -> (Vec<Slot>, MatchState) {
    let mut state = MatchState::new();
    let slots = tree
        .nodes
        .iter()
        .map(|node| match node.span.as_text() {
            None => Slot::Null,
            Some(span) => find_occurrences(span, text)
                .into_iter()
                .find(|r| !state.is_consumed(*r))
                .map(|r| {
                    state.consume(r);
                    Slot::Assigned(r)
                })
                .unwrap_or(Slot::Unmatched),
        })
        .collect();
    (slots, state)
}

/// Nearest free occurrence of `child_span` to `parent`; ties go to the
/// earlier occurrence. Consumes the chosen range in `consumed`.
pub fn assign_child_offsets(
    parent: TokenRange,
    child_span: &str,
    text: &TokenizedText,
    consumed: &mut MatchState,
) -> Option<TokenRange> {
    let best = find_occurrences(child_span, text)
        .into_iter()
        .filter(|r| !consumed.is_consumed(*r))
        .min_by_key(|r| (token_gap(parent, *r), *r))?;
    consumed.consume(best);
    Some(best)
}

/// Assign every node of a tree. Child consumption is tracked per parent.
pub fn assign_offsets(tree: &SelTree, text: &TokenizedText) -> OffsetAssignment {
    let (spot_slots, _) = assign_spot_offsets(tree, text);
    let spots = tree
        .nodes
        .iter()
        .zip(spot_slots)
        .map(|(node, spot)| {
            let children = match spot {
                Slot::Assigned(parent) => {
                    let mut state = MatchState::new();
                    node.children
                        .iter()
                        .map(|c| match c.span.as_text() {
                            None => Slot::Null,
                            Some(span) => assign_child_offsets(parent, span, text, &mut state)
                                .map_or(Slot::Unmatched, Slot::Assigned),
                        })
                        .collect()
                }
                _ => node
                    .children
                    .iter()
                    .map(|c| if c.span.is_null() { Slot::Null } else { Slot::Unmatched })
                    .collect(),
            };
            NodeOffsets { spot, children }
        })
        .collect();
    OffsetAssignment { spots }
}
