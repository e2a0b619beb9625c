//! Generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use proptest::collection::vec;
use proptest::prelude::*;
use proptest::sample::select;

use selkit_core::records::{
    Event, EventArg, Mention, Record, Relation, Sentiment, TokenRange, TokenizedText, ASPECT,
    OPINION, POLARITIES,
};
use selkit_core::metrics::{match_counts, match_keys, score_counts, MetricKind};
use selkit_core::sel::{AssoNode, SelTree, SpotNode};

// ---------------------------------------------------------------------------
// SEL trees
// ---------------------------------------------------------------------------

const LABEL_WORDS: &[&str] = &[
    "person", "org", "work for", "located in", "start-position", "time", "x", "geographical social political",
    "kill", "a_b", "über", "type2",
];
const SPAN_WORDS: &[&str] = &[
    "Steve", "Apple", "1997", "CEO", "of", "the", "U.S.", "O'Neil", "-", "x", "über", "[unk]", "a,b",
    "New", "York", "\"quoted\"",
];

pub fn label() -> impl Strategy<Value = String> {
    select(LABEL_WORDS).prop_map(str::to_string)
}

/// `None` is the null span.
pub fn span() -> impl Strategy<Value = Option<String>> {
    prop_oneof![
        1 => Just(None),
        6 => vec(select(SPAN_WORDS), 1..4).prop_map(|w| Some(w.join(" "))),
    ]
}

pub fn asso() -> impl Strategy<Value = AssoNode> {
    (label(), span()).prop_map(|(l, s)| match s {
        Some(s) => AssoNode::new(&l, &s).unwrap(),
        None => AssoNode::null(&l).unwrap(),
    })
}

pub fn spot() -> impl Strategy<Value = SpotNode> {
    (label(), span(), vec(asso(), 0..4)).prop_map(|(l, s, children)| {
        let mut node = match s {
            Some(s) => SpotNode::new(&l, &s).unwrap(),
            None => SpotNode::null(&l).unwrap(),
        };
        node.children = children;
        node
    })
}

pub fn tree() -> impl Strategy<Value = SelTree> {
    vec(spot(), 0..6).prop_map(SelTree::new)
}

/// Strings over the SEL alphabet plus noise, likely to hit parser edge cases.
pub fn sel_noise() -> impl Strategy<Value = String> {
    vec(
        prop_oneof![
            4 => select(&['(', ')', ':', ' ', 'a', 'b', '[', ']', '\n', 'é', '\t'][..]),
            1 => any::<char>(),
        ],
        0..80,
    )
    .prop_map(|c| c.into_iter().collect())
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

/// A text of `n` distinct tokens, so every range has a unique surface.
pub fn unique_text(n: usize) -> TokenizedText {
    let toks: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
    TokenizedText::from_tokens(&toks)
}

fn range_in(n: usize) -> impl Strategy<Value = (usize, usize)> {
    (0..n).prop_flat_map(move |s| (Just(s), s..n.min(s + 3)))
}

fn distinct_ranges(n: usize, max: usize) -> impl Strategy<Value = Vec<(usize, usize)>> {
    vec(range_in(n), 0..=max).prop_map(|mut v| {
        v.sort();
        v.dedup();
        v
    })
}

const TYPES: &[&str] = &["person", "organization", "location"];
const RELS: &[&str] = &["work for", "live in"];
const ROLES: &[&str] = &["agent", "place", "time"];

/// Records over a unique-token text in which no parent has two children
/// pointing at the same range.
pub fn unambiguous_record() -> impl Strategy<Value = Record> {
    (2usize..12).prop_flat_map(|n| {
        (
            Just(n),
            distinct_ranges(n, 4),
            vec(select(TYPES), 4),
            vec((0usize..4, 0usize..4, select(RELS)), 0..4),
            vec(
                (range_in(n), select(TYPES), vec((range_in(n), select(ROLES)), 0..3)),
                0..3,
            ),
            vec((range_in(n), range_in(n), select(&POLARITIES[..])), 0..3),
        )
    })
    .prop_map(|(n, ents, types, rels, events, sents)| {
        let text = unique_text(n);
        let m = |label: &str, (s, e): (usize, usize)| text.mention(label, s, e).unwrap();
        let mut r = Record::new(text.clone());
        r.entities = ents.iter().zip(&types).map(|(&rg, t)| m(t, rg)).collect();
        let k = r.entities.len();
        if k > 0 {
            for (h, t, rel) in rels {
                let (h, t) = (h % k, t % k);
                let rel = Relation {
                    head: r.entities[h].clone(),
                    label: rel.to_string(),
                    tail: r.entities[t].clone(),
                };
                if !r
                    .relations
                    .iter()
                    .any(|x| x.head == rel.head && x.tail == rel.tail)
                {
                    r.relations.push(rel);
                }
            }
        }
        for (trig, ty, args) in events {
            if r.events.iter().any(|e| e.trigger.range() == TokenRange::new(trig.0, trig.1)) {
                continue;
            }
            let mut ev = Event {
                trigger: m(ty, trig),
                args: Vec::new(),
            };
            for (rg, role) in args {
                if !ev.args.iter().any(|a| a.mention.range() == TokenRange::new(rg.0, rg.1)) {
                    ev.args.push(EventArg {
                        role: role.to_string(),
                        mention: m(role, rg),
                    });
                }
            }
            r.events.push(ev);
        }
        // Aspect and opinion nodes are both top-level, so their ranges must differ.
        for (a, o, pol) in sents {
            let (a_rg, o_rg) = (TokenRange::new(a.0, a.1), TokenRange::new(o.0, o.1));
            let clash = a_rg == o_rg
                || r.sentiments.iter().any(|s| {
                    (s.aspect.range() == a_rg && s.opinion.range() == o_rg)
                        || s.aspect.range() == o_rg
                        || s.opinion.range() == a_rg
                });
            if !clash {
                r.sentiments.push(Sentiment {
                    aspect: m(ASPECT, a),
                    polarity: pol.to_string(),
                    opinion: m(OPINION, o),
                });
            }
        }
        r
    })
}

/// Record with every list sorted, for multiset comparison.
pub fn canonical(mut r: Record) -> Record {
    r.entities.sort();
    r.entities.dedup();
    r.relations.sort();
    for e in &mut r.events {
        e.args.sort();
    }
    r.events.sort();
    r.sentiments.sort();
    r
}

pub fn mention(text: &TokenizedText, label: &str, s: usize, e: usize) -> Mention {
    text.mention(label, s, e).unwrap()
}

// ---------------------------------------------------------------------------
// Offset oracle
// ---------------------------------------------------------------------------

/// Every window whose surfaces, joined by single spaces, equal `span`.
pub fn brute_windows(span: &str, text: &TokenizedText) -> Vec<TokenRange> {
    let toks: Vec<&str> = text.surfaces().collect();
    let mut out = Vec::new();
    for s in 0..toks.len() {
        for e in s..toks.len() {
            if toks[s..=e].join(" ") == span {
                out.push(TokenRange::new(s, e));
            }
        }
    }
    out
}

/// Tokens strictly between two ranges, by counting positions.
pub fn brute_gap(a: TokenRange, b: TokenRange) -> usize {
    (0..=a.end.max(b.end))
        .filter(|&i| (i > a.end && i < b.start) || (i > b.end && i < a.start))
        .count()
}

/// `Some(range)` per node; `None` for null, unmatched, or under an unmatched parent.
pub type OracleAssignment = Vec<(Option<TokenRange>, Vec<Option<TokenRange>>)>;

/// Exhaustive implementation of the assignment rules: top-level nodes take
/// the earliest window not taken by an earlier top-level node; children
/// take the window minimizing (gap to parent, start, end) among windows
/// not taken by an earlier sibling.
pub fn oracle_assign(tree: &SelTree, text: &TokenizedText) -> OracleAssignment {
    let mut taken: Vec<TokenRange> = Vec::new();
    let mut out = Vec::new();
    for node in &tree.nodes {
        let spot = node.span.as_text().and_then(|s| {
            let mut c: Vec<TokenRange> = brute_windows(s, text)
                .into_iter()
                .filter(|r| !taken.contains(r))
                .collect();
            c.sort_by_key(|r| (r.start, r.end));
            c.first().copied()
        });
        if let Some(r) = spot {
            taken.push(r);
        }
        let mut sibling_taken: Vec<TokenRange> = Vec::new();
        let children = node
            .children
            .iter()
            .map(|c| {
                let parent = spot?;
                let span = c.span.as_text()?;
                let mut cands: Vec<(usize, usize, usize, TokenRange)> = brute_windows(span, text)
                    .into_iter()
                    .filter(|r| !sibling_taken.contains(r))
                    .map(|r| (brute_gap(parent, r), r.start, r.end, r))
                    .collect();
                cands.sort();
                let best = cands.first().map(|c| c.3)?;
                sibling_taken.push(best);
                Some(best)
            })
            .collect();
        out.push((spot, children));
    }
    out
}

// ---------------------------------------------------------------------------
// Metric oracle
// ---------------------------------------------------------------------------

/// Largest one-to-one matching between `gold` and `pred` under `eq`, by
/// trying every assignment of predictions to unused gold items.
pub fn max_matching<T>(gold: &[T], pred: &[T], eq: &dyn Fn(&T, &T) -> bool) -> usize {
    fn go<T>(gold: &[T], pred: &[T], used: &mut Vec<bool>, eq: &dyn Fn(&T, &T) -> bool) -> usize {
        let Some((p, rest)) = pred.split_first() else {
            return 0;
        };
        let mut best = go(gold, rest, used, eq);
        for i in 0..gold.len() {
            if !used[i] && eq(&gold[i], p) {
                used[i] = true;
                best = best.max(1 + go(gold, rest, used, eq));
                used[i] = false;
            }
        }
        best
    }
    go(gold, pred, &mut vec![false; gold.len()], eq)
}

/// `(tp, fp, fn)` from a matching size.
pub fn brute_counts<T>(gold: &[T], pred: &[T], eq: &dyn Fn(&T, &T) -> bool) -> (usize, usize, usize) {
    let tp = max_matching(gold, pred, eq);
    (tp, pred.len() - tp, gold.len() - tp)
}

/// All multisets of size at most `max` drawn from `items`, as index lists.
pub fn multisets(items: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max {
        let mut next = Vec::new();
        for m in &frontier {
            let lo = m.last().copied().unwrap_or(0);
            for i in lo..items {
                let mut n: Vec<usize> = m.clone();
                n.push(i);
                next.push(n);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Outcome of the exhaustive metric comparison for one metric.
#[derive(Debug, Clone, Copy)]
pub struct OracleReport {
    pub kind: MetricKind,
    pub configurations: usize,
    pub disagreements: usize,
    /// Whether corpus-level library counts over all configurations equal the oracle sums.
    pub corpus_agrees: bool,
}

type Tuple = Vec<String>;

/// Item of the event family: (event type, trigger start, optional (role, arg start)).
type EventItem = (&'static str, usize, Option<(&'static str, usize)>);

/// Compare library counts with a brute-force maximum matching on every
/// pair of gold/pred configurations of at most `max_items` items over a
/// two-label space, for all six metrics.
///
/// The text is `A B A`, so tokens 0 and 2 share a surface and
/// surface-based and offset-based comparisons disagree.
pub fn metric_oracle(max_items: usize) -> Vec<OracleReport> {
    let text = TokenizedText::whitespace("A B A");
    let surf = |s: usize| text.surfaces().nth(s).unwrap().to_string();
    let mut out = Vec::new();

    let entities: Vec<(&str, usize, usize)> = iproduct(&["L1", "L2"], &[(0, 0), (1, 1), (2, 2)])
        .map(|(l, (s, e))| (l, s, e))
        .collect();
    family(
        &text,
        &entities,
        max_items,
        |r, &(l, s, e)| r.entities.push(mention(&r.text, l, s, e)),
        &[(MetricKind::Entity, &|&(l, s, e)| vec![vec![l.into(), s.to_string(), e.to_string()]])],
        &mut out,
    );

    // (head type, head start, relation); the tail is always token 1 typed L1.
    let relations: Vec<(&str, usize, &str)> = iproduct(&["L1", "L2"], &[0, 2])
        .flat_map(|(t, s)| ["R1", "R2"].map(move |r| (t, s, r)))
        .collect();
    family(
        &text,
        &relations,
        max_items,
        |r, &(t, s, rel)| {
            let head = mention(&r.text, t, s, s);
            let tail = mention(&r.text, "L1", 1, 1);
            r.relations.push(Relation {
                head,
                label: rel.into(),
                tail,
            })
        },
        &[
            (MetricKind::RelationStrict, &|&(t, s, rel)| {
                vec![vec![rel.into(), t.into(), s.to_string(), "L1".into(), "1".into()]]
            }),
            (MetricKind::RelationBoundary, &|&(_, s, rel)| vec![vec![rel.into(), surf(s), surf(1)]]),
        ],
        &mut out,
    );

    let events: Vec<EventItem> = iproduct(&["E1", "E2"], &[0, 2])
        .flat_map(|(t, s)| [None, Some(("R1", 1)), Some(("R2", 1))].map(move |a| (t, s, a)))
        .collect();
    family(
        &text,
        &events,
        max_items,
        |r, &(t, s, arg)| {
            let trigger = mention(&r.text, t, s, s);
            let args = arg
                .map(|(role, a)| EventArg {
                    role: role.into(),
                    mention: mention(&r.text, role, a, a),
                })
                .into_iter()
                .collect();
            r.events.push(Event { trigger, args })
        },
        &[
            (MetricKind::EventTrigger, &|&(t, s, _)| vec![vec![t.into(), s.to_string()]]),
            (MetricKind::EventArgument, &|&(t, _, arg)| {
                arg.map(|(role, a)| vec![t.into(), role.into(), a.to_string()])
                    .into_iter()
                    .collect()
            }),
        ],
        &mut out,
    );

    let sentiments: Vec<(usize, usize, &str)> = iproduct(&[0, 2], &[1, 2])
        .flat_map(|(a, o)| ["positive", "negative"].map(move |p| (a, o, p)))
        .collect();
    family(
        &text,
        &sentiments,
        max_items,
        |r, &(a, o, p)| {
            let aspect = mention(&r.text, ASPECT, a, a);
            let opinion = mention(&r.text, OPINION, o, o);
            r.sentiments.push(Sentiment {
                aspect,
                polarity: p.into(),
                opinion,
            })
        },
        &[(MetricKind::SentimentTriplet, &|&(a, o, p)| {
            vec![vec![a.to_string(), o.to_string(), p.into()]]
        })],
        &mut out,
    );
    out
}

fn iproduct<'a, A: Copy, B: Copy>(a: &'a [A], b: &'a [B]) -> impl Iterator<Item = (A, B)> + 'a {
    a.iter().flat_map(move |&x| b.iter().map(move |&y| (x, y)))
}

type Check<'a, I> = (MetricKind, &'a dyn Fn(&I) -> Vec<Tuple>);

fn family<I>(
    text: &TokenizedText,
    items: &[I],
    max_items: usize,
    add: impl Fn(&mut Record, &I),
    checks: &[Check<'_, I>],
    out: &mut Vec<OracleReport>,
) {
    let configs: Vec<(Record, Vec<&I>)> = multisets(items.len(), max_items)
        .into_iter()
        .map(|idx| {
            let chosen: Vec<&I> = idx.iter().map(|&i| &items[i]).collect();
            let mut r = Record::new(text.clone());
            for it in &chosen {
                add(&mut r, it);
            }
            (r, chosen)
        })
        .collect();
    for &(kind, keys) in checks {
        let tuples: Vec<Vec<Tuple>> = configs
            .iter()
            .map(|(_, chosen)| chosen.iter().flat_map(|it| keys(it)).collect())
            .collect();
        let lib_keys: Vec<_> = configs.iter().map(|(r, _)| match_keys(r, kind)).collect();
        let mut report = OracleReport {
            kind,
            configurations: 0,
            disagreements: 0,
            corpus_agrees: false,
        };
        let (mut golds, mut preds) = (Vec::new(), Vec::new());
        let mut expected = (0, 0, 0);
        for (gi, (g, _)) in configs.iter().enumerate() {
            for (pi, (p, _)) in configs.iter().enumerate() {
                let lib = match_counts(&lib_keys[gi], &lib_keys[pi]);
                let oracle = brute_counts(&tuples[gi], &tuples[pi], &|a, b| a == b);
                report.configurations += 1;
                if (lib.tp, lib.fp, lib.fn_) != oracle {
                    report.disagreements += 1;
                }
                expected = (expected.0 + oracle.0, expected.1 + oracle.1, expected.2 + oracle.2);
                golds.push(g.clone());
                preds.push(p.clone());
            }
        }
        let corpus = score_counts(&golds, &preds, kind).unwrap();
        report.corpus_agrees = (corpus.tp, corpus.fp, corpus.fn_) == expected;
        out.push(report);
    }
}
