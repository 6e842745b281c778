//! The `code2vec` command line. [`run`] is the whole program; `main` only
//! forwards process arguments and the exit code.
//!
//! Exit codes: 0 success, 1 usage, 2 bad or unreadable data, 3 numeric failure.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::ast::parse_mini;
use crate::corpus::{
    derive_seed, read_dataset, write_dataset, AblationMask, IndexedExample, RawExample, VocabCutoffs, Vocabs,
};
use crate::metrics::{evaluate, score_pair, Averaging, EvalOptions, MetricsAccumulator};
use crate::model::{forward, load_model, save_model, AttentionVariant, ModelParams, Phase, MAGIC};
use crate::paths::{extract_path_contexts, ExtractionLimits};
use crate::pipeline::{extract_text, method_example, ExtractSummary, SourceFormat};
use crate::train::{train_with, TrainConfig, TrainError};
use crate::vectors::{export_vectors, NameVectorTable, Neighbor, VectorError};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }

    fn numeric(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERIC,
            message: message.into(),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        // a closed downstream pipe is not an error of ours
        if e.kind() == io::ErrorKind::BrokenPipe {
            return Self {
                code: 0,
                message: String::new(),
            };
        }
        CliError::data(e.to_string())
    }
}

impl From<VectorError> for CliError {
    fn from(e: VectorError) -> Self {
        match e {
            VectorError::ZeroNorm | VectorError::Degenerate => CliError::numeric(e.to_string()),
            _ => CliError::data(e.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::NonFinite { .. } => CliError::numeric(e.to_string()),
            TrainError::InvalidConfig(_) => CliError::usage(e.to_string()),
            _ => CliError::data(e.to_string()),
        }
    }
}

type CliResult = Result<(), CliError>;

#[derive(Debug, Parser)]
#[command(name = "code2vec", version, about = "Method-name prediction from AST path-contexts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract path-contexts from MiniJ or S-expression files into a dataset.
    Extract(ExtractArgs),
    /// Build value, path and tag vocabularies from a dataset.
    BuildVocab(BuildVocabArgs),
    /// Train a model.
    Train(TrainArgs),
    /// Predict names for methods or dataset lines.
    Predict(PredictArgs),
    /// Sub-token precision, recall and F1 of a model or a predictions file.
    Eval(EvalArgs),
    /// Print each path-context of every input with its attention weight.
    InspectAttention(InspectArgs),
    /// Nearest names to a name.
    Nearest(NearestArgs),
    /// Names closest to the combination of two names.
    Combine(CombineArgs),
    /// Names completing an analogy: a is to b as ? is to c.
    Analogy(AnalogyArgs),
    /// Write the learned name vectors as text.
    ExportVectors(ExportArgs),
}

#[derive(Debug, Args, Clone, Copy)]
pub struct LimitArgs {
    #[arg(long, default_value_t = 8)]
    pub max_length: usize,
    #[arg(long, default_value_t = 2)]
    pub max_width: usize,
}

impl LimitArgs {
    fn limits(&self) -> Result<ExtractionLimits, CliError> {
        ExtractionLimits::new(self.max_length, self.max_width).map_err(|e| CliError::usage(e.to_string()))
    }
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Source files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Dataset file to write (standard output by default).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// minij, sexpr; guessed from the extension by default.
    #[arg(long)]
    pub format: Option<SourceFormat>,
    #[command(flatten)]
    pub limits: LimitArgs,
}

#[derive(Debug, Args)]
pub struct BuildVocabArgs {
    pub dataset: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 50_000)]
    pub max_values: usize,
    #[arg(long, default_value_t = 50_000)]
    pub max_paths: usize,
    #[arg(long, default_value_t = 10_000)]
    pub max_tags: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training dataset.
    pub dataset: PathBuf,
    /// Model file to write.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Validation dataset for early stopping (the training set by default).
    #[arg(long)]
    pub val: Option<PathBuf>,
    /// Vocabulary file (built from the training set by default).
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long, default_value_t = 128)]
    pub dim: usize,
    #[arg(long, default_value_t = 200)]
    pub kmax: usize,
    #[arg(long, default_value_t = 0.25)]
    pub dropout: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 3)]
    pub patience: usize,
    #[arg(long, default_value_t = AttentionVariant::Soft)]
    pub variant: AttentionVariant,
    #[arg(long, default_value = "full")]
    pub ablation: AblationMask,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Clip batch gradients to this global norm.
    #[arg(long)]
    pub clip: Option<f64>,
    /// Sample each example's contexts once instead of every epoch.
    #[arg(long)]
    pub freeze_samples: bool,
    /// Save `<output>.ckpt-<epoch>` after every epoch.
    #[arg(long)]
    pub checkpoints: bool,
    /// Train in double precision (the model file is single precision either way).
    #[arg(long)]
    pub double: bool,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Model file.
    pub model: PathBuf,
    /// Methods (MiniJ or S-expressions) or dataset lines.
    pub input: PathBuf,
    /// minij, sexpr or dataset; guessed from the extension by default.
    #[arg(long)]
    pub format: Option<SourceFormat>,
    #[command(flatten)]
    pub limits: LimitArgs,
    #[arg(long, default_value = "full")]
    pub ablation: AblationMask,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 5)]
    pub topk: usize,
    /// Also print every path-context with its attention weight.
    #[arg(long)]
    pub attention: bool,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, required_unless_present = "predictions", requires = "data")]
    pub model: Option<PathBuf>,
    /// Dataset to evaluate on.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Score `<truth>\t<predicted>` lines instead of running a model.
    #[arg(long, conflicts_with = "model")]
    pub predictions: Option<PathBuf>,
    /// Macro-average over examples instead of pooling counts.
    #[arg(long)]
    pub macro_average: bool,
    /// Write per-example `truth predicted tp fp fn` rows here.
    #[arg(long)]
    pub rows: Option<PathBuf>,
    #[arg(long, default_value = "full")]
    pub ablation: AblationMask,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct NearestArgs {
    /// Model file or exported vectors.
    pub vectors: PathBuf,
    pub name: String,
    #[arg(long, default_value_t = 10)]
    pub topk: usize,
}

#[derive(Debug, Args)]
pub struct CombineArgs {
    pub vectors: PathBuf,
    pub a: String,
    pub b: String,
    #[arg(long, default_value_t = 10)]
    pub topk: usize,
}

#[derive(Debug, Args)]
pub struct AnalogyArgs {
    pub vectors: PathBuf,
    pub a: String,
    pub b: String,
    pub c: String,
    #[arg(long, default_value_t = 10)]
    pub topk: usize,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    pub model: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
        }
    };
    let result = dispatch(cli.command, out, err).and_then(|()| out.flush().map_err(CliError::from));
    match result {
        Ok(()) => 0,
        Err(e) if e.code == 0 => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    match command {
        Command::Extract(a) => cmd_extract(&a, out, err),
        Command::BuildVocab(a) => cmd_vocab(&a, err),
        Command::Train(a) => cmd_train(&a, out, err),
        Command::Predict(a) => cmd_predict(&a, out),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::InspectAttention(a) => cmd_inspect(&a, out),
        Command::Nearest(a) => {
            let table = load_table(&a.vectors, err)?;
            print_neighbors(out, &table.nearest(&a.name, a.topk)?)
        }
        Command::Combine(a) => {
            let table = load_table(&a.vectors, err)?;
            print_neighbors(out, &table.combine(&a.a, &a.b, a.topk)?)
        }
        Command::Analogy(a) => {
            let table = load_table(&a.vectors, err)?;
            print_neighbors(out, &table.analogy(&a.a, &a.b, &a.c, a.topk)?)
        }
        Command::ExportVectors(a) => cmd_export(&a, out),
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn load_dataset(path: &Path) -> Result<Vec<RawExample>, CliError> {
    read_dataset(open(path)?).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<(ModelParams<f32>, Vocabs), CliError> {
    load_model(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

pub fn cmd_extract(args: &ExtractArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let limits = args.limits.limits()?;
    let results: Vec<_> = args
        .inputs
        .par_iter()
        .map(|path| {
            let format = args.format.unwrap_or_else(|| SourceFormat::from_path(path));
            let text = read_text(path)?;
            extract_text(&text, format, &limits).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
        })
        .collect();

    let mut total = ExtractSummary::default();
    let mut examples = Vec::new();
    let mut failed = 0;
    for result in results {
        match result {
            Ok((ex, summary)) => {
                total.add(&summary);
                examples.extend(ex);
            }
            Err(e) => {
                failed += 1;
                writeln!(err, "error: {}", e.message)?;
            }
        }
    }
    let written = match &args.output {
        Some(path) => write_dataset(create(path)?, &examples),
        None => write_dataset(&mut *out, &examples),
    };
    written.map_err(|e| CliError::data(e.to_string()))?;
    writeln!(
        err,
        "methods={} contexts={} dropped={} failed_files={failed}",
        total.methods, total.contexts, total.dropped
    )?;
    if examples.is_empty() {
        writeln!(err, "warning: no methods extracted")?;
    }
    if failed > 0 {
        return Err(CliError::data(format!("{failed} file(s) failed to parse")));
    }
    Ok(())
}

pub fn cmd_vocab(args: &BuildVocabArgs, err: &mut dyn Write) -> CliResult {
    let examples = load_dataset(&args.dataset)?;
    let cutoffs = VocabCutoffs {
        max_values: args.max_values,
        max_paths: args.max_paths,
        max_tags: args.max_tags,
    };
    let vocabs = Vocabs::build(&examples, &cutoffs).map_err(|e| CliError::data(e.to_string()))?;
    vocabs.write(create(&args.output)?)?;
    writeln!(
        err,
        "values={} paths={} tags={}",
        vocabs.values.len(),
        vocabs.paths.len(),
        vocabs.tags.len()
    )?;
    Ok(())
}

pub fn cmd_train(args: &TrainArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let train_set = load_dataset(&args.dataset)?;
    let validation = match &args.val {
        Some(path) => load_dataset(path)?,
        None => Vec::new(),
    };
    let vocabs = match &args.vocab {
        Some(path) => Vocabs::read(open(path)?).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?,
        None => Vocabs::build(&train_set, &VocabCutoffs::default()).map_err(|e| CliError::data(e.to_string()))?,
    };
    let config = TrainConfig {
        lr: args.lr,
        batch_size: args.batch,
        max_epochs: args.epochs,
        patience: args.patience,
        dropout: args.dropout,
        k_max: args.kmax,
        dim: args.dim,
        seed: args.seed,
        variant: args.variant,
        ablation: args.ablation,
        clip_norm: args.clip,
        freeze_samples: args.freeze_samples,
        ..TrainConfig::default()
    };
    if args.double {
        train_and_save::<f64>(args, &train_set, &validation, &vocabs, &config, out, err)
    } else {
        train_and_save::<f32>(args, &train_set, &validation, &vocabs, &config, out, err)
    }
}

fn train_and_save<T: crate::model::Real>(
    args: &TrainArgs,
    train_set: &[RawExample],
    validation: &[RawExample],
    vocabs: &Vocabs,
    config: &TrainConfig,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult {
    let outcome = train_with::<T, _>(train_set, validation, vocabs, config, |record, params| {
        writeln!(out, "{record}").map_err(crate::model::ModelError::from)?;
        out.flush().map_err(crate::model::ModelError::from)?;
        if args.checkpoints {
            let mut name = args.output.clone().into_os_string();
            name.push(format!(".ckpt-{}", record.epoch));
            save_model(Path::new(&name), params, vocabs)?;
        }
        Ok(())
    })?;
    save_model(&args.output, &outcome.params, vocabs).map_err(|e| CliError::data(e.to_string()))?;
    writeln!(
        err,
        "best_epoch={} oov_labels={:.4} skipped={}",
        outcome.best_epoch, outcome.oov_label_fraction, outcome.skipped
    )?;
    Ok(())
}

/// Examples to run a model on. MiniJ input that is not a list of methods is
/// read as a single unlabeled snippet.
fn load_inputs(args: &InputArgs) -> Result<Vec<RawExample>, CliError> {
    let format = args.format.unwrap_or_else(|| SourceFormat::from_path(&args.input));
    if format == SourceFormat::Dataset {
        return load_dataset(&args.input);
    }
    let limits = args.limits.limits()?;
    let text = read_text(&args.input)?;
    let data_err = |e: crate::ast::AstError| CliError::data(format!("{}: {e}", args.input.display()));
    match extract_text(&text, format, &limits) {
        Ok((examples, _)) => Ok(examples),
        Err(_) if format == SourceFormat::MiniJ => {
            let ast = parse_mini(&text).map_err(data_err)?;
            let example = method_example(&ast, &limits).unwrap_or_else(|| RawExample {
                label: "?".into(),
                contexts: extract_path_contexts(&ast, &limits),
            });
            Ok(vec![example])
        }
        Err(e) => Err(data_err(e)),
    }
}

struct Inspected {
    ranked: Vec<(String, f32)>,
    /// Each context with its weight, heaviest first.
    attention: Vec<(f32, String)>,
}

fn inspect(
    params: &ModelParams<f32>,
    vocabs: &Vocabs,
    example: &RawExample,
    ordinal: usize,
    args: &InputArgs,
    topk: usize,
) -> Result<Option<Inspected>, CliError> {
    let indexed = IndexedExample::new(example, vocabs, args.ablation);
    let seed = Some(derive_seed(args.seed, 0, ordinal as u64));
    let enc = indexed.encode(params.dims.k_max, seed);
    if !enc.is_trainable() {
        return Ok(None);
    }
    let trace = forward(params, &enc, Phase::Infer, None).map_err(|e| CliError::data(e.to_string()))?;
    if !trace.q.iter().all(|p| p.is_finite()) {
        return Err(CliError::numeric("non-finite prediction"));
    }
    let ranked = crate::model::rank_distribution(&trace.q, topk)
        .into_iter()
        .map(|(id, p)| (vocabs.tags.entry(id).unwrap_or(crate::corpus::UNK_TOKEN).to_string(), p))
        .collect();
    let slot_source = indexed.sample_indices(params.dims.k_max, seed);
    let weights = trace.slot_attention();
    let mut attention: Vec<(f32, String)> = trace
        .slots
        .iter()
        .map(|&slot| (weights[slot], example.contexts[slot_source[slot]].to_string()))
        .collect();
    attention.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    Ok(Some(Inspected { ranked, attention }))
}

pub fn cmd_predict(args: &PredictArgs, out: &mut dyn Write) -> CliResult {
    let (params, vocabs) = load(&args.input.model)?;
    let examples = load_inputs(&args.input)?;
    for (i, example) in examples.iter().enumerate() {
        writeln!(out, "# {}", example.label)?;
        match inspect(&params, &vocabs, example, i, &args.input, args.topk)? {
            None => writeln!(out, "no path-contexts")?,
            Some(result) => {
                for (rank, (tag, p)) in result.ranked.iter().enumerate() {
                    writeln!(out, "{} {tag} {p:.6}", rank + 1)?;
                }
                if args.attention {
                    for (a, ctx) in &result.attention {
                        writeln!(out, "  {a:.6} {ctx}")?;
                    }
                }
            }
        }
    }
    Ok(())
}

pub fn cmd_inspect(args: &InspectArgs, out: &mut dyn Write) -> CliResult {
    let (params, vocabs) = load(&args.input.model)?;
    let examples = load_inputs(&args.input)?;
    for (i, example) in examples.iter().enumerate() {
        writeln!(out, "# {}", example.label)?;
        if let Some(result) = inspect(&params, &vocabs, example, i, &args.input, 1)? {
            for (a, ctx) in &result.attention {
                writeln!(out, "{a:.6} {ctx}")?;
            }
        }
    }
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> CliResult {
    let averaging = if args.macro_average {
        Averaging::Macro
    } else {
        Averaging::Micro
    };
    let (metrics, rows) = if let Some(path) = &args.predictions {
        let mut acc = MetricsAccumulator::default();
        let mut rows = Vec::new();
        for (n, line) in open(path)?.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (truth, predicted) = line
                .split_once('\t')
                .ok_or_else(|| CliError::data(format!("{}:{}: expected <truth>\\t<predicted>", path.display(), n + 1)))?;
            let score = score_pair(predicted, truth);
            acc.add(score);
            rows.push(format!("{truth}\t{predicted}\t{}\t{}\t{}", score.tp, score.fp, score.fn_));
        }
        if acc.examples == 0 {
            return Err(CliError::data("empty predictions file"));
        }
        (acc.metrics(averaging), rows)
    } else {
        let model = args.model.as_ref().expect("clap enforces --model");
        let data = args
            .data
            .as_ref()
            .ok_or_else(|| CliError::usage("--data is required with --model"))?;
        let (params, vocabs) = load(model)?;
        let dataset = load_dataset(data)?;
        let options = EvalOptions {
            ablation: args.ablation,
            seed: args.seed,
            averaging,
        };
        let evaluation = evaluate(&params, &dataset, &vocabs, &options).map_err(|e| CliError::data(e.to_string()))?;
        let rows = evaluation.rows.iter().map(ToString::to_string).collect();
        (evaluation.metrics, rows)
    };
    if let Some(path) = &args.rows {
        let mut w = create(path)?;
        for row in &rows {
            writeln!(w, "{row}")?;
        }
        w.flush()?;
    }
    writeln!(out, "{metrics}")?;
    Ok(())
}

/// Reads a model file or an exported vectors file, told apart by the magic.
fn load_table(path: &Path, err: &mut dyn Write) -> Result<NameVectorTable, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let table = if bytes.starts_with(MAGIC) {
        let (params, vocabs) = load(path)?;
        NameVectorTable::from_params(&params, &vocabs)
    } else {
        NameVectorTable::read(bytes.as_slice()).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?
    };
    if !table.excluded.is_empty() {
        writeln!(err, "excluded {} zero-norm name(s)", table.excluded.len())?;
    }
    Ok(table)
}

fn print_neighbors(out: &mut dyn Write, neighbors: &[Neighbor]) -> CliResult {
    for (rank, n) in neighbors.iter().enumerate() {
        writeln!(out, "{} {} {:.6}", rank + 1, n.name, n.score)?;
    }
    Ok(())
}

pub fn cmd_export(args: &ExportArgs, out: &mut dyn Write) -> CliResult {
    let (params, vocabs) = load(&args.model)?;
    match &args.output {
        Some(path) => export_vectors(&params, &vocabs, create(path)?)?,
        None => export_vectors(&params, &vocabs, &mut *out)?,
    }
    Ok(())
}
