//! Synthetic fixture corpora.
//!
//! Mention tokens are capitalized pseudo-words and filler tokens are
//! lowercase, so unless duplication is requested every mention surface
//! occurs exactly once in its sentence.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::pretrain::seeded_rng;
use crate::records::{
    Event, EventArg, Mention, Record, Relation, Sentiment, TaskKind, TokenizedText, ASPECT,
    OPINION, POLARITIES,
};
use crate::schema::{builtin_schema, Schema};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub task: TaskKind,
    pub sentences: usize,
    pub seed: u64,
    /// Fraction of sentences in which one mention surface is repeated.
    pub duplicate_rate: f64,
}

impl SynthConfig {
    pub fn new(task: TaskKind, sentences: usize, seed: u64) -> Self {
        SynthConfig {
            task,
            sentences,
            seed,
            duplicate_rate: 0.0,
        }
    }

    pub fn with_duplicates(mut self, rate: f64) -> Self {
        self.duplicate_rate = rate;
        self
    }
}

/// Label inventory the generator draws from for a task.
pub fn synth_schema(task: TaskKind) -> Schema {
    let name = match task {
        TaskKind::Entity => "conll03",
        TaskKind::Relation => "conll04",
        TaskKind::Event => "ace05-evt",
        TaskKind::Sentiment => "sentiment",
    };
    builtin_schema(name).expect("bundled schema")
}

const ONSETS: [&str; 16] = [
    "b", "c", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "h",
];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];
const FILLER: [&str; 24] = [
    "the", "a", "of", "in", "and", "to", "was", "said", "on", "with", "for", "by", "at", "from",
    "that", "has", "its", "new", "after", "over", "into", "near", "while", "then",
];

fn name_pool() -> Vec<String> {
    let mut out = Vec::new();
    for a in ONSETS {
        for v in VOWELS {
            for b in ["n", "r", "l", "s"] {
                let mut w = format!("{a}{v}{b}o");
                w[..1].make_ascii_uppercase();
                out.push(w);
            }
        }
    }
    out
}

struct SentenceBuilder {
    tokens: Vec<String>,
    fresh: Vec<String>,
}

impl SentenceBuilder {
    fn new<R: Rng + ?Sized>(pool: &[String], rng: &mut R) -> Self {
        let mut fresh = pool.to_vec();
        fresh.shuffle(rng);
        SentenceBuilder {
            tokens: Vec::new(),
            fresh,
        }
    }

    fn filler<R: Rng + ?Sized>(&mut self, max: usize, rng: &mut R) {
        for _ in 0..rng.gen_range(0..=max) {
            self.tokens.push(FILLER.choose(rng).expect("non-empty").to_string());
        }
    }

    /// Place a new mention of `len` unused capitalized tokens; returns its range.
    fn mention(&mut self, len: usize) -> (usize, usize) {
        let start = self.tokens.len();
        for _ in 0..len {
            let tok = self.fresh.pop().expect("name pool is large enough");
            self.tokens.push(tok);
        }
        (start, self.tokens.len() - 1)
    }

    /// Repeat the tokens of an earlier range.
    fn copy(&mut self, range: (usize, usize)) -> (usize, usize) {
        let start = self.tokens.len();
        let toks: Vec<String> = self.tokens[range.0..=range.1].to_vec();
        self.tokens.extend(toks);
        (start, self.tokens.len() - 1)
    }
}

fn pick<R: Rng + ?Sized>(labels: &[String], rng: &mut R) -> String {
    labels.choose(rng).expect("non-empty label set").clone()
}

fn mention_len<R: Rng + ?Sized>(rng: &mut R) -> usize {
    match rng.gen_range(0..10) {
        0..=5 => 1,
        6..=8 => 2,
        _ => 3,
    }
}

/// Generate a corpus; sentence `i` depends only on `(seed, i)`.
pub fn synth_corpus(cfg: &SynthConfig) -> Vec<Record> {
    let schema = synth_schema(cfg.task);
    let pool = name_pool();
    (0..cfg.sentences)
        .map(|i| synth_sentence(cfg, &schema, &pool, i as u64))
        .collect()
}

fn synth_sentence(cfg: &SynthConfig, schema: &Schema, pool: &[String], index: u64) -> Record {
    let mut rng = seeded_rng(cfg.seed, index);
    let rng = &mut rng;
    let mut b = SentenceBuilder::new(pool, rng);
    let spots = schema.spots();
    let assos = schema.assos();
    let duplicate = rng.gen_bool(cfg.duplicate_rate);

    // Token ranges are laid out first; labels are attached once the
    // full token list is known.
    let n_mentions = match cfg.task {
        TaskKind::Entity => rng.gen_range(1..=4),
        TaskKind::Relation => rng.gen_range(2..=4),
        TaskKind::Event => rng.gen_range(2..=4),
        TaskKind::Sentiment => 2 * rng.gen_range(1..=2),
    };
    let mut ranges = Vec::with_capacity(n_mentions + 1);
    for _ in 0..n_mentions {
        b.filler(2, rng);
        let len = if cfg.task == TaskKind::Event && ranges.is_empty() {
            1
        } else {
            mention_len(rng)
        };
        ranges.push(b.mention(len));
    }
    let mut copy_of = None;
    if duplicate {
        b.filler(2, rng);
        let src = rng.gen_range(0..ranges.len());
        copy_of = Some((src, b.copy(ranges[src])));
    }
    b.filler(2, rng);
    b.tokens.push(".".into());

    let text = TokenizedText::from_tokens(&b.tokens);
    let m = |label: &str, r: (usize, usize)| -> Mention {
        text.mention(label, r.0, r.1).expect("generated ranges are in bounds")
    };
    let mut record = Record::new(text.clone());

    match cfg.task {
        TaskKind::Entity => {
            for &r in &ranges {
                record.entities.push(m(&pick(spots, rng), r));
            }
            // A repeated surface is annotated half of the time.
            if let Some((src, r)) = copy_of {
                if rng.gen_bool(0.5) {
                    let label = record.entities[src].label.clone();
                    record.entities.push(m(&label, r));
                }
            }
        }
        TaskKind::Relation => {
            for &r in &ranges {
                record.entities.push(m(&pick(spots, rng), r));
            }
            if let Some((src, r)) = copy_of {
                if rng.gen_bool(0.5) {
                    let label = record.entities[src].label.clone();
                    record.entities.push(m(&label, r));
                }
            }
            let n = record.entities.len();
            for _ in 0..rng.gen_range(1..=2) {
                let h = rng.gen_range(0..n);
                let mut t = rng.gen_range(0..n - 1);
                if t >= h {
                    t += 1;
                }
                let rel = Relation {
                    head: record.entities[h].clone(),
                    label: pick(assos, rng),
                    tail: record.entities[t].clone(),
                };
                // Two children of one head may not share a range.
                let taken = record
                    .relations
                    .iter()
                    .any(|r| r.head.range() == rel.head.range() && r.tail.range() == rel.tail.range());
                if !taken {
                    record.relations.push(rel);
                }
            }
        }
        TaskKind::Event => {
            let trigger = m(&pick(spots, rng), ranges[0]);
            let mut args = Vec::new();
            for &r in &ranges[1..] {
                let role = pick(assos, rng);
                args.push(EventArg {
                    mention: m(&role, r),
                    role,
                });
            }
            if let Some((src, r)) = copy_of {
                if src > 0 && rng.gen_bool(0.5) {
                    let role = args[src - 1].role.clone();
                    args.push(EventArg {
                        mention: m(&role, r),
                        role,
                    });
                }
            }
            record.events.push(Event { trigger, args });
        }
        TaskKind::Sentiment => {
            for pair in ranges.chunks(2) {
                record.sentiments.push(Sentiment {
                    aspect: m(ASPECT, pair[0]),
                    polarity: POLARITIES.choose(rng).expect("non-empty").to_string(),
                    opinion: m(OPINION, pair[1]),
                });
            }
        }
    }
    record
}
