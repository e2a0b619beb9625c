mod common;

use proptest::collection::vec;
use proptest::prelude::*;
use proptest::sample::select;

use selkit_core::metrics::{score, score_all, score_counts, Counts, MetricKind};
use selkit_core::records::Record;

/// A corpus of sentences over a shared four-token text with random entity
/// and relation annotations.
fn corpus(len: usize) -> impl Strategy<Value = Vec<Record>> {
    let text = common::unique_text(4);
    let mention = (select(&["L1", "L2"][..]), 0usize..4);
    vec(
        (
            vec(mention.clone(), 0..4),
            vec((mention.clone(), select(&["R1", "R2"][..]), mention), 0..3),
        ),
        len,
    )
    .prop_map(move |sents| {
        sents
            .into_iter()
            .map(|(ents, rels)| {
                let mut r = Record::new(text.clone());
                for (l, i) in ents {
                    r.entities.push(common::mention(&r.text, l, i, i));
                }
                for ((hl, h), rel, (tl, t)) in rels {
                    r.relations.push(selkit_core::records::Relation {
                        head: common::mention(&r.text, hl, h, h),
                        label: rel.into(),
                        tail: common::mention(&r.text, tl, t, t),
                    });
                }
                r
            })
            .collect()
    })
}

fn pair(len: usize) -> impl Strategy<Value = (Vec<Record>, Vec<Record>)> {
    (corpus(len), corpus(len))
}

const KINDS: [MetricKind; 3] = [
    MetricKind::Entity,
    MetricKind::RelationStrict,
    MetricKind::RelationBoundary,
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]

    #[test]
    fn swapping_gold_and_pred_swaps_precision_and_recall((g, p) in (1usize..6).prop_flat_map(pair)) {
        for kind in KINDS {
            let a = score(&g, &p, kind).unwrap();
            let b = score(&p, &g, kind).unwrap();
            prop_assert_eq!(a.precision, b.recall);
            prop_assert_eq!(a.recall, b.precision);
            prop_assert_eq!(a.f1, b.f1);
            prop_assert_eq!((a.tp, a.fp, a.fn_), (b.tp, b.fn_, b.fp));
        }
    }

    #[test]
    fn counts_are_additive_over_concatenation(
        (g1, p1) in (1usize..5).prop_flat_map(pair),
        (g2, p2) in (1usize..5).prop_flat_map(pair),
    ) {
        for kind in KINDS {
            let a = score_counts(&g1, &p1, kind).unwrap();
            let b = score_counts(&g2, &p2, kind).unwrap();
            let g: Vec<_> = g1.iter().chain(&g2).cloned().collect();
            let p: Vec<_> = p1.iter().chain(&p2).cloned().collect();
            prop_assert_eq!(score_counts(&g, &p, kind).unwrap(), a + b);
        }
    }

    #[test]
    fn gold_against_itself_is_perfect(g in (1usize..6).prop_flat_map(corpus)) {
        let report = score_all(&g, &g, &MetricKind::ALL).unwrap();
        for (kind, s) in report.metrics {
            prop_assert_eq!(s.fp + s.fn_, 0, "{}", kind);
            if s.tp > 0 {
                prop_assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
            }
        }
    }

    #[test]
    fn counts_match_brute_force_per_sentence((g, p) in (1usize..4).prop_flat_map(pair)) {
        let total = g.iter().zip(&p).map(|(g, p)| {
            let key = |m: &selkit_core::records::Mention| (m.label.clone(), m.start, m.end);
            let ge: Vec<_> = g.entities.iter().map(key).collect();
            let pe: Vec<_> = p.entities.iter().map(key).collect();
            let (tp, fp, fn_) = common::brute_counts(&ge, &pe, &|a, b| a == b);
            Counts { tp, fp, fn_ }
        }).sum::<Counts>();
        prop_assert_eq!(score_counts(&g, &p, MetricKind::Entity).unwrap(), total);
    }
}

#[test]
fn exhaustive_small_configurations_agree_with_oracle() {
    for r in common::metric_oracle(2) {
        assert_eq!(r.disagreements, 0, "{:?}", r);
        assert!(r.corpus_agrees, "{:?}", r);
        assert!(r.configurations > 0);
    }
}
