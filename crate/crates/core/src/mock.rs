//! A deterministic stand-in for a trained extractor: it linearizes gold
//! records and perturbs them with configurable noise.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pretrain::seeded_rng;
use crate::records::{record_to_sel, Mention, Record, TaskKind, TokenizedText};
use crate::schema::Schema;
use crate::sel::{serialize_sel, SpotNode};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Per gold item.
    pub drop_rate: f64,
    /// Replace a label with a random label from the pool.
    pub type_swap_rate: f64,
    /// Drop the last token of a multi-token span.
    pub span_truncate_rate: f64,
    /// Add one spurious `[null]` spot.
    pub null_rate: f64,
    /// Delete one closing parenthesis from the output.
    pub malform_rate: f64,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("drop", self.drop_rate),
            ("swap", self.type_swap_rate),
            ("truncate", self.span_truncate_rate),
            ("null", self.null_rate),
            ("malform", self.malform_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{name} rate {v} not in [0, 1]")));
            }
        }
        Ok(())
    }

    /// Parse `drop=0.1,swap=0.05,truncate=0,null=0.2,malform=0.01,seed=3`.
    /// Omitted keys default to zero; an empty string is the zero config.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut cfg = NoiseConfig::default();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("noise entry {part:?} lacks '='")))?;
            let bad = |e: &dyn std::fmt::Display| {
                Error::InvalidArgument(format!("noise entry {part:?}: {e}"))
            };
            let rate = || value.trim().parse::<f64>().map_err(|e| bad(&e));
            match key.trim() {
                "drop" => cfg.drop_rate = rate()?,
                "swap" => cfg.type_swap_rate = rate()?,
                "truncate" => cfg.span_truncate_rate = rate()?,
                "null" => cfg.null_rate = rate()?,
                "malform" => cfg.malform_rate = rate()?,
                "seed" => cfg.seed = value.trim().parse().map_err(|e| bad(&e))?,
                other => return Err(bad(&format!("unknown key {other:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Random draws for one gold item. All four are always drawn so that the
/// stream stays aligned when rates change.
struct ItemDraw {
    drop: f64,
    swap: f64,
    swap_pick: usize,
    truncate: f64,
}

impl ItemDraw {
    fn new<R: Rng + ?Sized>(rng: &mut R) -> Self {
        ItemDraw {
            drop: rng.gen(),
            swap: rng.gen(),
            swap_pick: rng.gen(),
            truncate: rng.gen(),
        }
    }
}

pub struct MockExtractor<'a> {
    pool: &'a Schema,
    task: TaskKind,
    noise: NoiseConfig,
}

impl<'a> MockExtractor<'a> {
    /// `pool` supplies replacement labels for type swaps and spurious nulls.
    pub fn new(pool: &'a Schema, task: TaskKind, noise: NoiseConfig) -> Result<Self> {
        noise.validate()?;
        Ok(MockExtractor { pool, task, noise })
    }

    /// SEL output for the `index`-th sentence of a corpus.
    pub fn extract(&self, index: u64, gold: &Record) -> String {
        let mut rng = seeded_rng(self.noise.seed, index);
        let noisy = self.perturb(gold.clone().project(self.task), &mut rng);
        let mut tree = record_to_sel(&noisy, self.task);
        let (u_null, null_pick, null_pos): (f64, usize, usize) = (rng.gen(), rng.gen(), rng.gen());
        if u_null < self.noise.null_rate && !self.pool.spots().is_empty() {
            let label = &self.pool.spots()[null_pick % self.pool.spots().len()];
            let at = null_pos % (tree.nodes.len() + 1);
            tree.nodes.insert(at, SpotNode::null(label).expect("schema labels are valid"));
        }
        let mut out = serialize_sel(&tree);
        let (u_malform, malform_pick): (f64, usize) = (rng.gen(), rng.gen());
        if u_malform < self.noise.malform_rate {
            let closes: Vec<usize> = out.match_indices(')').map(|(i, _)| i).collect();
            out.remove(closes[malform_pick % closes.len()]);
        }
        out
    }

    fn swap_label(&self, labels: &[String], current: &str, draw: &ItemDraw) -> Option<String> {
        if draw.swap < self.noise.type_swap_rate && !labels.is_empty() {
            let l = &labels[draw.swap_pick % labels.len()];
            if l != current {
                return Some(l.clone());
            }
        }
        None
    }

    fn truncate(&self, text: &TokenizedText, m: &mut Mention, draw: &ItemDraw) {
        if draw.truncate < self.noise.span_truncate_rate && m.end > m.start {
            *m = text
                .mention(&m.label, m.start, m.end - 1)
                .expect("shrunk range stays in bounds");
        }
    }

    fn kept(&self, draw: &ItemDraw) -> bool {
        draw.drop >= self.noise.drop_rate
    }

    fn perturb<R: Rng + ?Sized>(&self, mut r: Record, rng: &mut R) -> Record {
        let spots = self.pool.spots();
        let assos = self.pool.assos();
        let text = r.text.clone();

        let entities = std::mem::take(&mut r.entities);
        for mut m in entities {
            let d = ItemDraw::new(rng);
            if !self.kept(&d) {
                continue;
            }
            if let Some(l) = self.swap_label(spots, &m.label, &d) {
                m.label = l;
            }
            self.truncate(&text, &mut m, &d);
            r.entities.push(m);
        }

        let relations = std::mem::take(&mut r.relations);
        for mut rel in relations {
            let d = ItemDraw::new(rng);
            if !self.kept(&d) {
                continue;
            }
            if let Some(l) = self.swap_label(assos, &rel.label, &d) {
                rel.label = l;
            }
            self.truncate(&text, &mut rel.tail, &d);
            r.relations.push(rel);
        }

        let events = std::mem::take(&mut r.events);
        for mut ev in events {
            let d = ItemDraw::new(rng);
            let args = std::mem::take(&mut ev.args);
            let arg_draws: Vec<ItemDraw> = args.iter().map(|_| ItemDraw::new(rng)).collect();
            if !self.kept(&d) {
                continue;
            }
            if let Some(l) = self.swap_label(spots, &ev.trigger.label, &d) {
                ev.trigger.label = l;
            }
            for (mut a, ad) in args.into_iter().zip(arg_draws) {
                if !self.kept(&ad) {
                    continue;
                }
                if let Some(l) = self.swap_label(assos, &a.role, &ad) {
                    a.role = l.clone();
                    a.mention.label = l;
                }
                self.truncate(&text, &mut a.mention, &ad);
                ev.args.push(a);
            }
            r.events.push(ev);
        }

        let sentiments = std::mem::take(&mut r.sentiments);
        for mut s in sentiments {
            let d = ItemDraw::new(rng);
            if !self.kept(&d) {
                continue;
            }
            if let Some(l) = self.swap_label(assos, &s.polarity, &d) {
                s.polarity = l;
            }
            self.truncate(&text, &mut s.opinion, &d);
            r.sentiments.push(s);
        }
        r
    }
}

/// One-off extraction with the sentence index fixed to 0.
pub fn mock_extract(gold: &Record, task: TaskKind, pool: &Schema, noise: NoiseConfig) -> Result<String> {
    Ok(MockExtractor::new(pool, task, noise)?.extract(0, gold))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sel::{parse_sel, ParseMode};
    use crate::synth::{synth_corpus, synth_schema, SynthConfig};

    #[test]
    fn zero_noise_is_gold_sel() {
        let schema = synth_schema(TaskKind::Relation);
        for r in synth_corpus(&SynthConfig::new(TaskKind::Relation, 20, 1)) {
            let out = mock_extract(&r, TaskKind::Relation, &schema, NoiseConfig::default()).unwrap();
            assert_eq!(out, serialize_sel(&record_to_sel(&r, TaskKind::Relation)));
        }
    }

    #[test]
    fn full_drop_is_empty() {
        let schema = synth_schema(TaskKind::Event);
        let noise = NoiseConfig {
            drop_rate: 1.0,
            ..Default::default()
        };
        for r in synth_corpus(&SynthConfig::new(TaskKind::Event, 10, 2)) {
            assert_eq!(mock_extract(&r, TaskKind::Event, &schema, noise).unwrap(), "()");
        }
    }

    #[test]
    fn malformed_output_is_recovered_with_diagnostics() {
        let schema = synth_schema(TaskKind::Entity);
        let noise = NoiseConfig {
            malform_rate: 1.0,
            seed: 11,
            ..Default::default()
        };
        let ex = MockExtractor::new(&schema, TaskKind::Entity, noise).unwrap();
        for (i, r) in synth_corpus(&SynthConfig::new(TaskKind::Entity, 10, 3)).iter().enumerate() {
            let out = ex.extract(i as u64, r);
            assert!(parse_sel(&out, ParseMode::Strict).is_err());
            let (_, diags) = parse_sel(&out, ParseMode::Tolerant).unwrap();
            assert!(!diags.is_empty(), "{out}");
        }
    }

    #[test]
    fn noise_spec_parsing() {
        let cfg = NoiseConfig::parse("drop=0.5, seed=9,malform=1").unwrap();
        assert_eq!(cfg.drop_rate, 0.5);
        assert_eq!(cfg.malform_rate, 1.0);
        assert_eq!(cfg.seed, 9);
        assert_eq!(NoiseConfig::parse("").unwrap(), NoiseConfig::default());
        assert!(NoiseConfig::parse("drop=2").is_err());
        assert!(NoiseConfig::parse("bogus=1").is_err());
        assert!(NoiseConfig::parse("drop").is_err());
    }

    #[test]
    fn deterministic_per_index() {
        let schema = synth_schema(TaskKind::Entity);
        let noise = NoiseConfig::parse("drop=0.3,swap=0.3,truncate=0.3,null=0.3,seed=5").unwrap();
        let ex = MockExtractor::new(&schema, TaskKind::Entity, noise).unwrap();
        let corpus = synth_corpus(&SynthConfig::new(TaskKind::Entity, 5, 4));
        let a: Vec<_> = corpus.iter().enumerate().map(|(i, r)| ex.extract(i as u64, r)).collect();
        let b: Vec<_> = corpus.iter().enumerate().map(|(i, r)| ex.extract(i as u64, r)).collect();
        assert_eq!(a, b);
    }
}
