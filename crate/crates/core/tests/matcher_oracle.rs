mod common;

use proptest::collection::vec;
use proptest::prelude::*;
use proptest::sample::select;

use selkit_core::matcher::{assign_offsets, OffsetAssignment, Slot};
use selkit_core::records::{TokenRange, TokenizedText};
use selkit_core::sel::{AssoNode, SelTree, SpotNode};

/// Small vocabulary so that repeated surfaces are common.
const VOCAB: &[&str] = &["a", "b", "c", "a b"];

fn text() -> impl Strategy<Value = TokenizedText> {
    vec(select(&VOCAB[..3]), 1..=12).prop_map(|t| TokenizedText::from_tokens(&t))
}

fn span() -> impl Strategy<Value = Option<String>> {
    prop_oneof![
        1 => Just(None),
        8 => vec(select(VOCAB), 1..3).prop_map(|w| Some(w.join(" "))),
    ]
}

fn node(label: &str, s: &Option<String>) -> SpotNode {
    match s {
        Some(s) => SpotNode::new(label, s).unwrap(),
        None => SpotNode::null(label).unwrap(),
    }
}

fn tree() -> impl Strategy<Value = SelTree> {
    vec((span(), vec(span(), 0..3)), 0..=4).prop_map(|spots| {
        SelTree::new(
            spots
                .iter()
                .map(|(s, kids)| {
                    let mut n = node("x", s);
                    n.children = kids
                        .iter()
                        .map(|k| match k {
                            Some(k) => AssoNode::new("y", k).unwrap(),
                            None => AssoNode::null("y").unwrap(),
                        })
                        .collect();
                    n
                })
                .collect(),
        )
    })
}

fn flatten(a: &OffsetAssignment) -> common::OracleAssignment {
    a.spots
        .iter()
        .map(|n| (n.spot.range(), n.children.iter().map(|c| c.range()).collect()))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(5_000))]

    #[test]
    fn matches_exhaustive_oracle(t in text(), tree in tree()) {
        let got = assign_offsets(&tree, &t);
        prop_assert_eq!(flatten(&got), common::oracle_assign(&tree, &t));
        prop_assert_eq!(assign_offsets(&tree, &t), got);
    }

    #[test]
    fn assignments_are_sound_and_level_isolated(t in text(), tree in tree()) {
        let got = assign_offsets(&tree, &t);
        let mut top: Vec<TokenRange> = Vec::new();
        for (node, slots) in tree.nodes.iter().zip(&got.spots) {
            if let Slot::Assigned(r) = slots.spot {
                prop_assert_eq!(t.surface(r).unwrap(), node.span.as_text().unwrap());
                prop_assert!(!top.contains(&r));
                top.push(r);
            }
            let mut siblings: Vec<TokenRange> = Vec::new();
            for (child, slot) in node.children.iter().zip(&slots.children) {
                if child.span.is_null() {
                    prop_assert_eq!(*slot, Slot::Null);
                }
                if let Slot::Assigned(r) = *slot {
                    prop_assert_eq!(t.surface(r).unwrap(), child.span.as_text().unwrap());
                    prop_assert!(!siblings.contains(&r));
                    siblings.push(r);
                }
            }
        }
    }
}

#[test]
fn gap_oracle_agrees_on_all_small_ranges() {
    let ranges: Vec<TokenRange> = (0..8)
        .flat_map(|s| (s..8).map(move |e| TokenRange::new(s, e)))
        .collect();
    for &a in &ranges {
        for &b in &ranges {
            assert_eq!(
                selkit_core::matcher::token_gap(a, b),
                common::brute_gap(a, b),
                "{a} {b}"
            );
        }
    }
}
