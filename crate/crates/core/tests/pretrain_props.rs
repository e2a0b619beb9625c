mod common;

use std::collections::BTreeSet;

use proptest::collection::vec;
use proptest::prelude::*;
use proptest::sample::select;

use selkit_core::pretrain::{
    inject_rejection, meta_schema_sample, pack_batch, positive_labels, reconstruct, seeded_rng,
    span_corrupt, strip_nulls, BatchCounts, CorpusRole, DataTriplet,
};
use selkit_core::schema::Schema;
use selkit_core::sel::{serialize_sel, SelTree};

/// Drop null nodes from a generated tree so it can serve as a clean target.
fn real_nodes(t: SelTree) -> SelTree {
    strip_nulls(&t).0
}

fn neg_labels() -> impl Strategy<Value = Vec<String>> {
    vec(select(&["n1", "n2", "n3", "n4", "work for", "person"][..]), 0..5)
        .prop_map(|v| v.into_iter().map(String::from).collect())
}

fn pool(n: usize) -> Schema {
    let spots: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let assos: Vec<String> = (0..n).map(|i| format!("a{i}")).collect();
    Schema::new("pool", spots, assos, None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn strip_undoes_inject(
        t in common::tree().prop_map(real_nodes),
        spots in neg_labels(),
        assos in neg_labels(),
        p in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let injected = inject_rejection(&t, &spots, &assos, p, &mut seeded_rng(seed, 0)).unwrap();
        let (stripped, counts) = strip_nulls(&injected);
        prop_assert_eq!(&stripped, &t);
        prop_assert!(counts.spots <= spots.len() && counts.assos <= assos.len());
        if p == 1.0 {
            prop_assert_eq!(counts.spots, spots.len());
        }
    }

    #[test]
    fn corruption_reconstructs_the_source(
        toks in vec("[a-z]{1,6}", 0..60),
        rate in 0.0f64..0.9,
        mean in 1.0f64..6.0,
        seed in any::<u64>(),
    ) {
        let out = span_corrupt(&toks, rate, mean, &mut seeded_rng(seed, 3)).unwrap();
        prop_assert_eq!(reconstruct(&out.x_prime, &out.x_double_prime).unwrap(), toks.join(" "));
        prop_assert_eq!(&out, &span_corrupt(&toks, rate, mean, &mut seeded_rng(seed, 3)).unwrap());
        // Spans are ordered, disjoint and never adjacent.
        for w in out.spans.windows(2) {
            prop_assert!(w[0].end + 1 < w[1].start);
        }
        if toks.len() >= 2 && rate > 0.0 && toks.len() as f64 >= mean {
            prop_assert!(out.masked_tokens() >= 1 && out.masked_tokens() < toks.len());
        }
    }

    #[test]
    fn meta_schema_respects_bounds(
        t in common::tree().prop_map(real_nodes),
        n in 0usize..40,
        max_neg in 0usize..12,
        seed in any::<u64>(),
    ) {
        let pool = pool(n);
        let meta = meta_schema_sample(&t, &pool, max_neg, &mut seeded_rng(seed, 0));
        let (pos_spots, pos_assos) = positive_labels(&t);
        prop_assert_eq!(&meta.positive_spots, &pos_spots);
        prop_assert_eq!(&meta.positive_assos, &pos_assos);
        prop_assert!(meta.negative_spots.len() <= max_neg && meta.negative_assos.len() <= max_neg);
        prop_assert!(meta.negative_spots.is_disjoint(&pos_spots));
        prop_assert!(meta.negative_assos.is_disjoint(&pos_assos));
        let pool_spots: BTreeSet<String> = pool.spots().iter().cloned().collect();
        let pool_assos: BTreeSet<String> = pool.assos().iter().cloned().collect();
        prop_assert!(meta.negative_spots.is_subset(&pool_spots));
        prop_assert!(meta.negative_assos.is_subset(&pool_assos));
        prop_assert_eq!(meta, meta_schema_sample(&t, &pool, max_neg, &mut seeded_rng(seed, 0)));
    }

    #[test]
    fn batches_have_the_requested_composition(
        pair in 0usize..4, record in 0usize..4, text in 0usize..4, seed in any::<u64>(),
    ) {
        let target = serialize_sel(&SelTree::default());
        let mk = |role| DataTriplet { role, ssi: None, source: None, target: target.clone() };
        let counts = BatchCounts { pair, record, text };
        let batch = pack_batch(
            &mut std::iter::repeat(mk(CorpusRole::Pair)),
            &mut std::iter::repeat(mk(CorpusRole::Record)),
            &mut std::iter::repeat(mk(CorpusRole::Text)),
            counts,
            &mut seeded_rng(seed, 0),
        ).unwrap();
        let n = |role| batch.iter().filter(|t| t.role == role).count();
        prop_assert_eq!((n(CorpusRole::Pair), n(CorpusRole::Record), n(CorpusRole::Text)), (pair, record, text));
    }
}

#[test]
fn corruption_rate_is_accurate_on_average() {
    // Over many medium-length texts the masked fraction tracks the requested rate.
    let toks: Vec<String> = (0..200).map(|i| format!("t{i}")).collect();
    let (mut masked, mut spans) = (0usize, 0usize);
    for i in 0..500 {
        let out = span_corrupt(&toks, 0.15, 3.0, &mut seeded_rng(42, i)).unwrap();
        masked += out.masked_tokens();
        spans += out.spans.len();
    }
    let frac = masked as f64 / (200.0 * 500.0);
    let mean = masked as f64 / spans as f64;
    assert!((frac - 0.15).abs() < 0.005, "{frac}");
    assert!((mean - 3.0).abs() < 0.1, "{mean}");
}
