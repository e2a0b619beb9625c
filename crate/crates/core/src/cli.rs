//! The `selkit` command line.
//!
//! Line-oriented commands read one item per non-blank input line and write
//! one output line per item, in input order. Sampling commands take a
//! mandatory `--seed`; the generator for the i-th item (0-based, blank lines
//! not counted) is `seeded_rng(seed, i)`, so output does not depend on
//! `--jobs`.
//!
//! Exit codes: 0 success, 1 input error, 2 internal error.

use std::ffi::OsString;
use std::fmt::Display;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::metrics::{derive_schema, score_run, MetricKind, PredictionOptions};
use crate::mock::{MockExtractor, NoiseConfig};
use crate::pretrain::{
    inject_rejection, pack_batch, pair_triplet, rejection_negatives, seeded_rng, span_corrupt,
    BatchCounts, DataTriplet, DEFAULT_CORRUPTION_RATE, DEFAULT_MAX_NEGATIVES,
    DEFAULT_MEAN_SPAN_LEN,
};
use crate::records::{
    load_examples, record_to_sel, schema_of_tree, sel_to_record, ExampleLine, LoadMode, TaskKind,
    TokenizedText,
};
use crate::schema::{build_ssi, resolve_schema, Markers, Schema, SsiOptions};
use crate::sel::{
    parse_sel, parse_tolerant, serialize_sel, validate_against_schema, ParseMode, SelTree,
};
use crate::synth::{synth_corpus, SynthConfig};

/// Lines handed to the worker pool at a time.
const CHUNK: usize = 2048;

#[derive(Parser, Debug)]
#[command(name = "selkit", version, about = "Structured extraction language toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct LineIo {
    /// Input file; `-` reads stdin.
    #[arg(long, short, default_value = "-")]
    input: PathBuf,
    /// Output file; `-` writes stdout.
    #[arg(long, short, default_value = "-")]
    output: PathBuf,
    /// Worker threads. Output order is input order for any value.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args, Debug, Clone)]
struct PromptArgs {
    /// Marker tokens as `spot,asso,text`.
    #[arg(long, conflicts_with = "angle")]
    markers: Option<String>,
    /// Use `<spot>,<asoc>,<text>` markers.
    #[arg(long)]
    angle: bool,
    /// Keep schema declaration order instead of sorting labels.
    #[arg(long)]
    preserve_order: bool,
}

impl PromptArgs {
    fn options(&self) -> Result<SsiOptions> {
        let markers = match (&self.markers, self.angle) {
            (Some(spec), _) => Markers::parse(spec)?,
            (None, true) => Markers::angle(),
            (None, false) => Markers::default(),
        };
        Ok(SsiOptions {
            markers,
            preserve_order: self.preserve_order,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Direction {
    /// Annotated examples to SEL prediction lines.
    ToSel,
    /// SEL prediction lines to annotated examples.
    ToRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Strict,
    Tolerant,
}

impl From<ModeArg> for ParseMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Strict => ParseMode::Strict,
            ModeArg::Tolerant => ParseMode::Tolerant,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the schema prompt for a schema file or bundled schema name.
    Ssi {
        #[arg(long)]
        schema: String,
        #[command(flatten)]
        prompt: PromptArgs,
    },
    /// Convert between annotated example lines and SEL.
    Convert {
        #[arg(long)]
        task: TaskKind,
        #[arg(long, value_enum)]
        direction: Direction,
        /// Labels accepted when grounding SEL; every label when omitted.
        #[arg(long)]
        schema: Option<String>,
        #[command(flatten)]
        io: LineIo,
    },
    /// Parse one SEL expression per line and report trees and diagnostics.
    Parse {
        #[arg(long, value_enum, default_value = "strict")]
        mode: ModeArg,
        #[command(flatten)]
        io: LineIo,
    },
    /// Check one SEL expression per line against a schema.
    Validate {
        #[arg(long)]
        schema: String,
        #[command(flatten)]
        io: LineIo,
    },
    /// Score a prediction file against a gold file.
    Evaluate {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Comma-separated metric names or `all`. Defaults to the task's
        /// metrics, or all metrics without `--task`.
        #[arg(long)]
        metrics: Option<String>,
        /// Needed when prediction lines carry SEL strings.
        #[arg(long)]
        task: Option<TaskKind>,
        /// Labels accepted when grounding SEL predictions; defaults to the
        /// labels used in the gold file.
        #[arg(long)]
        schema: Option<String>,
        #[arg(long, short, default_value = "-")]
        output: PathBuf,
    },
    /// Span-corrupt example texts into text-role triplets.
    Corrupt {
        #[arg(long, default_value_t = DEFAULT_CORRUPTION_RATE)]
        rate: f64,
        #[arg(long, default_value_t = DEFAULT_MEAN_SPAN_LEN)]
        mean_len: f64,
        #[arg(long)]
        seed: u64,
        /// Input lines are raw whitespace-tokenized text, not examples.
        #[arg(long)]
        plain: bool,
        #[command(flatten)]
        io: LineIo,
    },
    /// Turn annotated examples into pair triplets with sampled schema prompts.
    SampleMeta {
        /// Label pool for negatives.
        #[arg(long)]
        pool: String,
        #[arg(long, default_value_t = DEFAULT_MAX_NEGATIVES)]
        max_neg: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        prompt: PromptArgs,
        #[command(flatten)]
        io: LineIo,
    },
    /// Add rejection nodes to SEL lines or to the targets of triplet lines.
    InjectNull {
        /// Source of negative labels: schema labels the tree does not use.
        #[arg(long)]
        schema: String,
        #[arg(long)]
        p_epsilon: f64,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        io: LineIo,
    },
    /// Mix triplets from three streams into shuffled batches, one JSON array per line.
    Pack {
        #[arg(long)]
        pair: Option<PathBuf>,
        #[arg(long)]
        record: Option<PathBuf>,
        #[arg(long)]
        text: Option<PathBuf>,
        /// Instances per batch as `pair,record,text`.
        #[arg(long)]
        counts: BatchCounts,
        #[arg(long, default_value_t = 1)]
        batches: usize,
        /// Stop at the end of a stream instead of rereading it.
        #[arg(long)]
        no_cycle: bool,
        #[arg(long)]
        seed: u64,
        #[arg(long, short, default_value = "-")]
        output: PathBuf,
    },
    /// Run the mock extractor over a gold file and write SEL prediction lines.
    MockRun {
        #[arg(long)]
        task: TaskKind,
        /// `drop=R,swap=R,truncate=R,null=R,malform=R`; omitted keys are 0.
        #[arg(long, default_value = "")]
        noise: String,
        /// Replacement labels for swaps and spurious nulls; defaults to the
        /// labels used in the input.
        #[arg(long)]
        pool: Option<String>,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        io: LineIo,
    },
    /// Write a synthetic annotated corpus.
    Synth {
        #[arg(long)]
        task: TaskKind,
        #[arg(long)]
        sentences: usize,
        /// Fraction of sentences that repeat one mention surface.
        #[arg(long, default_value_t = 0.0)]
        duplicates: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, short, default_value = "-")]
        output: PathBuf,
    },
}

/// Why a run stopped.
#[derive(Debug)]
enum Failure {
    /// Bad input or flags: exit 1.
    Input(String),
    /// Every line was written but some reported a problem: exit 1.
    Reported(usize),
    /// A bug: exit 2.
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn internal(e: impl Display) -> Failure {
    Failure::Internal(e.to_string())
}

/// Parse `argv` (including the program name), run the command and return
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = std::panic::catch_unwind(|| dispatch(cli))
        .unwrap_or_else(|p| Err(Failure::Internal(panic_message(&p))));
    match outcome {
        Ok(()) => 0,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(Failure::Reported(n)) => {
            eprintln!("{n} line(s) reported problems");
            1
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            2
        }
    }
}

fn panic_message(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".into())
}

fn dispatch(cli: Cli) -> std::result::Result<(), Failure> {
    match cli.command {
        Command::Ssi { schema, prompt } => {
            let schema = resolve_schema(&schema)?;
            let ssi = build_ssi(&schema, &prompt.options()?);
            let mut out = open_output(Path::new("-"))?;
            writeln!(out, "{ssi}").map_err(|e| Error::io("<stdout>", e))?;
            finish(out, Path::new("-"))
        }
        Command::Convert {
            task,
            direction,
            schema,
            io,
        } => {
            let schema = schema.as_deref().map(resolve_schema).transpose()?;
            match direction {
                Direction::ToSel => for_each_line(&io, |_, line| {
                    let ex = parse_example(line)?;
                    let record = ex.to_record()?.project(task);
                    let sel = serialize_sel(&record_to_sel(&record, task));
                    Ok(Emit::ok(to_json(&prediction_line(&ex, sel))))
                }),
                Direction::ToRecord => for_each_line(&io, |_, line| {
                    let ex = parse_example(line)?;
                    let sel = ex.sel.as_deref().ok_or_else(|| bad_line("missing \"sel\" field"))?;
                    let text = ex.tokenized()?;
                    let (tree, _) = parse_tolerant(sel);
                    let accept_all;
                    let schema = match &schema {
                        Some(s) => s,
                        None => {
                            accept_all = schema_of_tree(&tree);
                            &accept_all
                        }
                    };
                    let (record, report) = sel_to_record(&tree, &text, task, schema);
                    if report != Default::default() {
                        log::info!("conversion dropped nodes: {report:?}");
                    }
                    let mut out = ExampleLine::from_record(&record);
                    out.id = ex.id;
                    out.tokens = ex.tokens;
                    Ok(Emit::ok(to_json(&out)))
                }),
            }
        }
        Command::Parse { mode, io } => for_each_line(&io, |_, line| {
            Ok(match parse_sel(line, mode.into()) {
                Ok((tree, diagnostics)) => Emit::ok(to_json(&json!({
                    "sel": serialize_sel(&tree),
                    "tree": tree,
                    "diagnostics": diagnostics,
                }))),
                Err(Error::Syntax(d)) => Emit::problem(to_json(&json!({
                    "sel": null,
                    "error": d,
                }))),
                Err(e) => return Err(e),
            })
        }),
        Command::Validate { schema, io } => {
            let schema = resolve_schema(&schema)?;
            for_each_line(&io, |_, line| {
                Ok(match parse_sel(line, ParseMode::Strict) {
                    Ok((tree, _)) => {
                        let violations = validate_against_schema(&tree, &schema);
                        let row = json!({ "valid": violations.is_empty(), "violations": violations });
                        if violations.is_empty() {
                            Emit::ok(to_json(&row))
                        } else {
                            Emit::problem(to_json(&row))
                        }
                    }
                    Err(Error::Syntax(d)) => {
                        Emit::problem(to_json(&json!({ "valid": false, "error": d })))
                    }
                    Err(e) => return Err(e),
                })
            })
        }
        Command::Evaluate {
            gold,
            pred,
            metrics,
            task,
            schema,
            output,
        } => {
            let kinds = match (&metrics, task) {
                (Some(spec), _) => MetricKind::parse_list(spec)?,
                (None, Some(t)) => MetricKind::for_task(t).to_vec(),
                (None, None) => MetricKind::ALL.to_vec(),
            };
            let options = PredictionOptions {
                task,
                schema: schema.as_deref().map(resolve_schema).transpose()?,
            };
            let report = score_run(&gold, &pred, &kinds, &options)?;
            let mut out = open_output(&output)?;
            let text = serde_json::to_string_pretty(&report).map_err(internal)?;
            writeln!(out, "{text}").map_err(|e| Error::io(&output, e))?;
            finish(out, &output)
        }
        Command::Corrupt {
            rate,
            mean_len,
            seed,
            plain,
            io,
        } => {
            // Validate the parameters once, before any input is read.
            span_corrupt(&["a", "b"], rate, mean_len, &mut seeded_rng(seed, 0))?;
            for_each_line(&io, |index, line| {
                let text = if plain {
                    TokenizedText::whitespace(line)
                } else {
                    parse_example(line)?.tokenized()?
                };
                let surfaces: Vec<&str> = text.surfaces().collect();
                let out = span_corrupt(&surfaces, rate, mean_len, &mut seeded_rng(seed, index))?;
                Ok(Emit::ok(to_json(&DataTriplet::text(out))))
            })
        }
        Command::SampleMeta {
            pool,
            max_neg,
            seed,
            prompt,
            io,
        } => {
            let pool = resolve_schema(&pool)?;
            let options = prompt.options()?;
            for_each_line(&io, |index, line| {
                let record = parse_example(line)?.to_record()?;
                let triplet =
                    pair_triplet(&record, &pool, max_neg, &options, &mut seeded_rng(seed, index));
                Ok(Emit::ok(to_json(&triplet)))
            })
        }
        Command::InjectNull {
            schema,
            p_epsilon,
            seed,
            io,
        } => {
            if !(0.0..=1.0).contains(&p_epsilon) {
                return Err(Failure::Input(format!("--p-epsilon {p_epsilon} not in [0, 1]")));
            }
            let schema = resolve_schema(&schema)?;
            let inject = |tree: &SelTree, index: u64| -> Result<SelTree> {
                let (spots, assos) = rejection_negatives(tree, &schema);
                inject_rejection(tree, &spots, &assos, p_epsilon, &mut seeded_rng(seed, index))
            };
            for_each_line(&io, |index, line| {
                if line.trim_start().starts_with('{') {
                    let mut triplet: DataTriplet = serde_json::from_str(line).map_err(bad_line)?;
                    let (tree, _) = parse_sel(&triplet.target, ParseMode::Strict)?;
                    triplet.target = serialize_sel(&inject(&tree, index)?);
                    Ok(Emit::ok(to_json(&triplet)))
                } else {
                    let (tree, _) = parse_sel(line, ParseMode::Strict)?;
                    Ok(Emit::ok(serialize_sel(&inject(&tree, index)?)))
                }
            })
        }
        Command::Pack {
            pair,
            record,
            text,
            counts,
            batches,
            no_cycle,
            seed,
            output,
        } => {
            let cycle = !no_cycle;
            let mut pairs = TripletStream::open(pair.as_deref(), counts.pair, "--pair", cycle)?;
            let mut records =
                TripletStream::open(record.as_deref(), counts.record, "--record", cycle)?;
            let mut texts = TripletStream::open(text.as_deref(), counts.text, "--text", cycle)?;
            let mut out = open_output(&output)?;
            for b in 0..batches {
                let batch = pack_batch(
                    &mut pairs,
                    &mut records,
                    &mut texts,
                    counts,
                    &mut seeded_rng(seed, b as u64),
                );
                for s in [&mut pairs, &mut records, &mut texts] {
                    if let Some(e) = s.error.take() {
                        return Err(e.into());
                    }
                }
                writeln!(out, "{}", to_json(&batch?)).map_err(|e| Error::io(&output, e))?;
            }
            finish(out, &output)
        }
        Command::MockRun {
            task,
            noise,
            pool,
            seed,
            io,
        } => {
            let mut noise = NoiseConfig::parse(&noise)?;
            if noise.seed != 0 {
                return Err(Failure::Input("give the seed with --seed, not in --noise".into()));
            }
            noise.seed = seed;
            let pool = match pool {
                Some(p) => resolve_schema(&p)?,
                None => derive_pool(&io.input, task)?,
            };
            let extractor = MockExtractor::new(&pool, task, noise)?;
            for_each_line(&io, |index, line| {
                let ex = parse_example(line)?;
                let gold = ex.to_record()?;
                let sel = extractor.extract(index, &gold);
                Ok(Emit::ok(to_json(&prediction_line(&ex, sel))))
            })
        }
        Command::Synth {
            task,
            sentences,
            duplicates,
            seed,
            output,
        } => {
            if !(0.0..=1.0).contains(&duplicates) {
                return Err(Failure::Input(format!("--duplicates {duplicates} not in [0, 1]")));
            }
            let cfg = SynthConfig::new(task, sentences, seed).with_duplicates(duplicates);
            let mut out = open_output(&output)?;
            for (i, record) in synth_corpus(&cfg).iter().enumerate() {
                let mut line = ExampleLine::from_record(record);
                line.id = Some(format!("{}-{i}", task.as_str()));
                writeln!(out, "{}", to_json(&line)).map_err(|e| Error::io(&output, e))?;
            }
            finish(out, &output)
        }
    }
}

/// Labels used by a gold file for one task, read in a separate pass.
fn derive_pool(input: &Path, task: TaskKind) -> Result<Schema> {
    if is_stdio(input) {
        return Err(Error::InvalidArgument(
            "--pool is required when reading from stdin".into(),
        ));
    }
    let records = load_examples(input, Some(task), LoadMode::Strict)?
        .map(|r| r.map(|ex| ex.record))
        .collect::<Result<Vec<_>>>()?;
    Ok(derive_schema(&records, task))
}

fn prediction_line(ex: &ExampleLine, sel: String) -> ExampleLine {
    ExampleLine {
        id: ex.id.clone(),
        text: ex.text.clone(),
        tokens: ex.tokens.clone(),
        sel: Some(sel),
        ..Default::default()
    }
}

fn parse_example(line: &str) -> Result<ExampleLine> {
    serde_json::from_str(line).map_err(bad_line)
}

fn bad_line(e: impl Display) -> Error {
    Error::InvalidArgument(e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("output types serialize to JSON")
}

// ---------------------------------------------------------------------------
// Line plumbing
// ---------------------------------------------------------------------------

/// One output line and whether it reports a problem.
struct Emit {
    text: String,
    clean: bool,
}

impl Emit {
    fn ok(text: String) -> Self {
        Emit { text, clean: true }
    }

    fn problem(text: String) -> Self {
        Emit { text, clean: false }
    }
}

fn is_stdio(path: &Path) -> bool {
    path.as_os_str() == "-"
}

fn open_input(path: &Path) -> Result<Box<dyn BufRead>> {
    if is_stdio(path) {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(Box::new(BufReader::new(file)))
}

fn open_output(path: &Path) -> Result<Box<dyn Write>> {
    if is_stdio(path) {
        return Ok(Box::new(BufWriter::new(io::stdout())));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(Box::new(BufWriter::new(file)))
}

fn finish(mut out: Box<dyn Write>, path: &Path) -> std::result::Result<(), Failure> {
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn display_name(path: &Path) -> PathBuf {
    if is_stdio(path) {
        PathBuf::from("<stdin>")
    } else {
        path.to_path_buf()
    }
}

/// Apply `f(index, line)` to every non-blank input line, `io.jobs` lines
/// at a time in parallel, writing results in input order. Errors carry
/// the file name and 1-based line number.
fn for_each_line<F>(io: &LineIo, f: F) -> std::result::Result<(), Failure>
where
    F: Fn(u64, &str) -> Result<Emit> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(io.jobs.max(1))
        .build()
        .map_err(internal)?;
    let name = display_name(&io.input);
    let reader = open_input(&io.input)?;
    let mut out = open_output(&io.output)?;
    let mut problems = 0;
    let mut chunk: Vec<(u64, usize, String)> = Vec::with_capacity(CHUNK);
    let mut index = 0u64;

    let mut flush = |chunk: &mut Vec<(u64, usize, String)>,
                     out: &mut Box<dyn Write>|
     -> std::result::Result<(), Failure> {
        let results: Vec<Result<Emit>> = pool.install(|| {
            chunk
                .par_iter()
                .map(|(i, line_no, text)| {
                    f(*i, text).map_err(|e| Error::Located {
                        path: name.clone(),
                        line: *line_no,
                        message: e.to_string(),
                    })
                })
                .collect()
        });
        for r in results {
            let emit = r?;
            problems += usize::from(!emit.clean);
            writeln!(out, "{}", emit.text).map_err(|e| Error::io(&io.output, e))?;
        }
        chunk.clear();
        Ok(())
    };

    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(&name, e))?;
        if line.trim().is_empty() {
            continue;
        }
        chunk.push((index, n + 1, line));
        index += 1;
        if chunk.len() == CHUNK {
            flush(&mut chunk, &mut out)?;
        }
    }
    flush(&mut chunk, &mut out)?;
    finish(out, &io.output)?;
    match problems {
        0 => Ok(()),
        n => Err(Failure::Reported(n)),
    }
}

/// Triplets read line by line from a file, optionally rereading it from
/// the start at end of file. A read or parse error ends the stream and is
/// kept in `error`.
struct TripletStream {
    path: Option<PathBuf>,
    lines: Option<io::Lines<BufReader<File>>>,
    line: usize,
    cycle: bool,
    /// Whether the current pass produced at least one triplet.
    produced: bool,
    error: Option<Error>,
}

impl TripletStream {
    fn open(path: Option<&Path>, needed: usize, flag: &str, cycle: bool) -> Result<Self> {
        if path.is_none() && needed > 0 {
            return Err(Error::InvalidArgument(format!("{flag} is required for a non-zero count")));
        }
        let mut s = TripletStream {
            path: path.map(Path::to_path_buf),
            lines: None,
            line: 0,
            cycle,
            produced: false,
            error: None,
        };
        s.rewind()?;
        Ok(s)
    }

    fn rewind(&mut self) -> Result<()> {
        if let Some(path) = &self.path {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            self.lines = Some(BufReader::new(file).lines());
            self.line = 0;
            self.produced = false;
        }
        Ok(())
    }

    fn fail(&mut self, e: Error) -> Option<DataTriplet> {
        self.error = Some(e);
        self.lines = None;
        None
    }
}

impl Iterator for TripletStream {
    type Item = DataTriplet;

    fn next(&mut self) -> Option<DataTriplet> {
        loop {
            let path = self.path.clone()?;
            let next = self.lines.as_mut()?.next();
            match next {
                None if self.cycle && self.produced => {
                    if let Err(e) = self.rewind() {
                        return self.fail(e);
                    }
                }
                None => return None,
                Some(Err(e)) => return self.fail(Error::io(&path, e)),
                Some(Ok(raw)) => {
                    self.line += 1;
                    if raw.trim().is_empty() {
                        continue;
                    }
                    return match serde_json::from_str::<DataTriplet>(&raw) {
                        Ok(t) => {
                            self.produced = true;
                            Some(t)
                        }
                        Err(e) => {
                            let e = Error::Located {
                                path,
                                line: self.line,
                                message: e.to_string(),
                            };
                            self.fail(e)
                        }
                    };
                }
            }
        }
    }
}
