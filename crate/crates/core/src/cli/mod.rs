//! Command-line front end. Every command that writes files also writes a
//! run manifest (`<out>.manifest.json`) with the parsed arguments, resolved
//! configuration and SHA-256 digests of inputs and outputs; `replay`
//! re-runs a manifest into a scratch directory and compares digests.

mod manifest;

pub use manifest::{sha256_file, FileDigest, RunManifest};

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::checks::{check_all, check_op, OpCheck, INJECTED_BUG, OPS};
use crate::corpus::{
    gen_synthetic, parse_corpus, preprocess, split_corpus, stats, write_corpus, PreprocessOptions, SynthParams,
};
use crate::encoder::{load_embeddings, Vocabulary};
use crate::error::{Error, Result};
use crate::eval::{
    evaluate_docs, random_baseline, to_csv, to_table, BaselineReport, CorpusReport, EvalOptions, SimWeights,
    PUBLISHED_REFERENCE,
};
use crate::induce::{default_gate_layer, induce, parse_induced, tree_to_graph, write_induced, InducedRecord};
use crate::lm::{load_checkpoint, perplexity, save_checkpoint, train, ContextMode, LmConfig, ProcessLm, TrainState};
use crate::onlstm::MasterInput;
use crate::parallel::map_ordered;
use crate::tensorgrad::gradcheck::GradCheckOptions;

#[derive(Debug, Parser)]
#[command(name = "procstruct", version, about = "Induce latent process hierarchies with an ordered-neurons LSTM")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus with gold outlines.
    Gen(GenArgs),
    /// Preprocess, split and train the process language model.
    Train(TrainArgs),
    /// Induce trees and sentence graphs from a trained checkpoint.
    Induce(InduceArgs),
    /// Score induced graphs against gold outlines.
    Eval(EvalArgs),
    /// Finite-difference gradient checks.
    Gradcheck(GradcheckArgs),
    /// Re-run a manifest and compare output digests.
    Replay(ReplayArgs),
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct GenArgs {
    #[arg(long, default_value_t = 500)]
    pub processes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = 2)]
    pub depth_min: usize,
    #[arg(long, default_value_t = 4)]
    pub depth_max: usize,
    #[arg(long, default_value_t = 1)]
    pub branching_min: usize,
    #[arg(long, default_value_t = 3)]
    pub branching_max: usize,
    #[arg(long, default_value_t = 5)]
    pub words_min: usize,
    #[arg(long, default_value_t = 12)]
    pub words_max: usize,
    #[arg(long, default_value_t = 0.9)]
    pub cue_strength: f64,
    #[arg(long, default_value_t = 0.35)]
    pub expand_prob: f64,
    /// Permit depths beyond 6.
    #[arg(long)]
    pub allow_deep: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum MasterInputArg {
    Independent,
    ComplementOfForget,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum ContextArg {
    Prefix,
    Full,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Word vectors in text format (`token v1 v2 ...`); sets the embedding size.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    /// Word-level BiLSTM hidden size per direction.
    #[arg(long, default_value_t = 32)]
    pub hidden: usize,
    /// ON-LSTM chunk size.
    #[arg(long, default_value_t = 8)]
    pub chunk: usize,
    /// ON-LSTM hidden size.
    #[arg(long, default_value_t = 64)]
    pub d_m: usize,
    #[arg(long, default_value_t = 300)]
    pub emb_dim: usize,
    #[arg(long, default_value_t = 3)]
    pub sentence_layers: usize,
    #[arg(long, default_value_t = 3)]
    pub layers: usize,
    #[arg(long, default_value_t = 64)]
    pub decoder_hidden: usize,
    #[arg(long, default_value_t = 0.1)]
    pub dropout: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.25)]
    pub clip: f64,
    #[arg(long, default_value_t = 4)]
    pub batch_size: usize,
    #[arg(long, value_enum, default_value_t = MasterInputArg::Independent)]
    pub master_input: MasterInputArg,
    #[arg(long, value_enum, default_value_t = ContextArg::Prefix)]
    pub context: ContextArg,
    #[arg(long, default_value_t = 0.9)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 15)]
    pub max_words: usize,
    #[arg(long, default_value_t = 6)]
    pub max_depth: usize,
    /// Continue from this checkpoint up to `--epochs` total epochs.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Checkpoint path; `<out>.metrics.jsonl` and `<out>.test.corpus` are written beside it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct InduceArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    /// 1-based ON-LSTM layer whose master forget gates are read (default: middle).
    #[arg(long)]
    pub gate_layer: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum BaselineArg {
    Random,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    /// Gold corpus (outline-numbered).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Induced structures written by `induce`.
    #[arg(long)]
    pub induced: Option<PathBuf>,
    #[arg(long, default_value = "0.3,0.3,0.4")]
    pub weights: String,
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    #[arg(long)]
    pub filter_unmatched: bool,
    /// Also print the published reference figures (different corpus, not reproducible here).
    #[arg(long)]
    pub paper_reference: bool,
    #[arg(long, value_enum)]
    pub baseline: Option<BaselineArg>,
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON report path; the per-document CSV goes to `<out>.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct GradcheckArgs {
    /// Check a single op (see `--list`).
    #[arg(long)]
    pub op: Option<String>,
    #[arg(long)]
    pub list: bool,
    /// Random cases per primitive or cell.
    #[arg(long, default_value_t = 100)]
    pub seeds: usize,
    /// Random cases of the full language-model loss.
    #[arg(long, default_value_t = 1)]
    pub lm_seeds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Run the deliberately broken fixture instead; it must fail.
    #[arg(long)]
    pub inject_bug: bool,
    /// JSON report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Directory for the re-run outputs (default: `<manifest>.replay`).
    #[arg(long)]
    pub into: Option<PathBuf>,
}

/// Usage problems exit with 2, everything else with 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => CliError::Usage(m),
            other => CliError::Run(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Run(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// What a command read and wrote.
struct Outcome {
    primary: Option<PathBuf>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    config: serde_json::Value,
    seed: Option<u64>,
    /// False when the command ran but its check failed (exit 1).
    ok: bool,
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> CliResult<bool> {
    let start = Instant::now();
    let (name, args, outcome) = match cmd {
        Command::Gen(a) => ("gen", to_value(&a)?, cmd_gen(&a)?),
        Command::Train(a) => ("train", to_value(&a)?, cmd_train(&a)?),
        Command::Induce(a) => ("induce", to_value(&a)?, cmd_induce(&a)?),
        Command::Eval(a) => ("eval", to_value(&a)?, cmd_eval(&a)?),
        Command::Gradcheck(a) => ("gradcheck", to_value(&a)?, cmd_gradcheck(&a)?),
        Command::Replay(a) => return cmd_replay(&a),
    };
    if let Some(primary) = &outcome.primary {
        let m = RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: name.into(),
            args,
            config: outcome.config.clone(),
            seed: outcome.seed,
            inputs: digests(&outcome.inputs)?,
            outputs: digests(&outcome.outputs)?,
            duration_secs: start.elapsed().as_secs_f64(),
        };
        m.save(&RunManifest::path_for(primary))?;
    }
    Ok(outcome.ok)
}

fn to_value<T: Serialize>(v: &T) -> CliResult<serde_json::Value> {
    serde_json::to_value(v).map_err(|e| CliError::Run(Error::Format(e.to_string())))
}

fn digests(paths: &[PathBuf]) -> Result<Vec<FileDigest>> {
    paths.iter().map(|p| FileDigest::of(p)).collect()
}

/// `path` with `suffix` appended to its file name.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn cmd_gen(a: &GenArgs) -> CliResult<Outcome> {
    let p = SynthParams {
        processes: a.processes,
        vocab_size: a.vocab_size,
        depth_min: a.depth_min,
        depth_max: a.depth_max,
        branching_min: a.branching_min,
        branching_max: a.branching_max,
        words_min: a.words_min,
        words_max: a.words_max,
        cue_strength: a.cue_strength,
        expand_prob: a.expand_prob,
        seed: a.seed,
        allow_deep: a.allow_deep,
    };
    let docs = gen_synthetic(&p)?;
    write_corpus(&a.out, &docs)?;
    let st = stats(&docs)?;
    eprintln!(
        "wrote {} processes, {} sentences to {}",
        st.processes,
        st.sentences,
        a.out.display()
    );
    Ok(Outcome {
        primary: Some(a.out.clone()),
        inputs: vec![],
        outputs: vec![a.out.clone()],
        config: to_value(&p)?,
        seed: Some(a.seed),
        ok: true,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct MetricsLine {
    epoch: usize,
    step: u64,
    lr: f64,
    train_ppl: Option<f64>,
    valid_ppl: Option<f64>,
    mean_grad_norm: Option<f64>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn cmd_train(a: &TrainArgs) -> CliResult<Outcome> {
    let raw = parse_corpus(&a.corpus)?;
    let docs = preprocess(
        &raw,
        PreprocessOptions {
            max_words: a.max_words,
            max_depth: a.max_depth,
        },
    )?;
    let metrics_path = sibling(&a.out, ".metrics.jsonl");
    let test_path = sibling(&a.out, ".test.corpus");
    let mut inputs = vec![a.corpus.clone()];
    let mut lines: Vec<MetricsLine> = Vec::new();

    let resumed = match &a.resume {
        Some(path) => {
            let (mut m, s) = load_checkpoint(path)?;
            inputs.push(path.clone());
            m.config.epochs = a.epochs;
            m.config.validate()?;
            // Earlier epochs' metrics come from the log beside the resumed checkpoint.
            let old = sibling(path, ".metrics.jsonl");
            if let Ok(text) = fs::read_to_string(&old) {
                inputs.push(old.clone());
                for (i, l) in text.lines().enumerate() {
                    let line: MetricsLine = serde_json::from_str(l).map_err(|e| Error::Parse {
                        line: i + 1,
                        msg: format!("{}: {e}", old.display()),
                    })?;
                    if line.epoch <= s.epoch {
                        lines.push(line);
                    }
                }
            }
            Some((m, s))
        }
        None => None,
    };
    let split_seed = resumed.as_ref().map_or(a.seed, |(m, _)| m.config.seed);
    let (train_docs, test_docs) = split_corpus(&docs, a.train_fraction, split_seed)?;
    let (mut model, mut state) = match resumed {
        Some(r) => r,
        None => {
            let vocab = Vocabulary::build(&train_docs);
            let (emb, emb_dim) = match &a.embeddings {
                Some(path) => {
                    inputs.push(path.clone());
                    let loaded = load_embeddings(path, &vocab, None, a.seed)?;
                    eprintln!("embeddings: {} of {} vocabulary entries covered", loaded.coverage, vocab.len());
                    let d = loaded.matrix.shape()[1];
                    (Some(loaded.matrix), d)
                }
                None => (None, a.emb_dim),
            };
            let config = LmConfig {
                emb_dim,
                hidden: a.hidden,
                sentence_layers: a.sentence_layers,
                onlstm_layers: a.layers,
                d_m: a.d_m,
                chunk: a.chunk,
                decoder_hidden: a.decoder_hidden,
                dropout: a.dropout,
                lr: a.lr,
                clip: a.clip,
                epochs: a.epochs,
                batch_size: a.batch_size,
                seed: a.seed,
                master_input: match a.master_input {
                    MasterInputArg::Independent => MasterInput::Independent,
                    MasterInputArg::ComplementOfForget => MasterInput::ComplementOfForget,
                },
                context: match a.context {
                    ContextArg::Prefix => ContextMode::Prefix,
                    ContextArg::Full => ContextMode::Full,
                },
            };
            let model = ProcessLm::new(config, vocab, emb)?;
            let p0 = perplexity(&model, &test_docs)?;
            eprintln!("epoch 0: test perplexity {p0:.3}");
            lines.push(MetricsLine {
                epoch: 0,
                step: 0,
                lr: a.lr,
                train_ppl: None,
                valid_ppl: finite(p0),
                mean_grad_norm: None,
            });
            (model, TrainState::new(a.lr))
        }
    };
    write_corpus(&test_path, &test_docs)?;

    let write_metrics = |lines: &[MetricsLine]| -> Result<()> {
        let mut text = String::new();
        for l in lines {
            text.push_str(&serde_json::to_string(l).map_err(|e| Error::Format(e.to_string()))?);
            text.push('\n');
        }
        write_file(&metrics_path, &text)
    };
    write_metrics(&lines)?;
    save_checkpoint(&a.out, &model, &state)?;
    train(&mut model, &mut state, &train_docs, &test_docs, |m, net, st| {
        eprintln!(
            "epoch {}: step {} lr {} train ppl {:.3} test ppl {:.3} grad norm {:.4}",
            m.epoch, m.step, m.lr, m.train_ppl, m.valid_ppl, m.mean_grad_norm
        );
        lines.push(MetricsLine {
            epoch: m.epoch,
            step: m.step,
            lr: m.lr,
            train_ppl: finite(m.train_ppl),
            valid_ppl: finite(m.valid_ppl),
            mean_grad_norm: finite(m.mean_grad_norm),
        });
        write_metrics(&lines)?;
        save_checkpoint(&a.out, net, st)
    })?;
    Ok(Outcome {
        primary: Some(a.out.clone()),
        inputs,
        outputs: vec![a.out.clone(), metrics_path.clone(), test_path.clone()],
        config: to_value(&model.config)?,
        seed: Some(model.config.seed),
        ok: true,
    })
}

fn cmd_induce(a: &InduceArgs) -> CliResult<Outcome> {
    let (model, _) = load_checkpoint(&a.checkpoint)?;
    let layers = model.config.onlstm_layers;
    let layer = match a.gate_layer {
        None => default_gate_layer(layers),
        Some(l) if (1..=layers).contains(&l) => l - 1,
        Some(l) => {
            return Err(CliError::Usage(format!("--gate-layer {l} outside 1..={layers}")));
        }
    };
    let docs = preprocess(&parse_corpus(&a.corpus)?, PreprocessOptions::default())?;
    let records = map_ordered(&docs, |d| Ok(InducedRecord::from(&induce(&model, d, layer)?)))?;
    write_file(&a.out, &write_induced(&records))?;
    eprintln!("induced {} processes from gate layer {}", records.len(), layer + 1);
    let mut config = serde_json::Map::new();
    config.insert("gate_layer".into(), (layer + 1).into());
    config.insert("model".into(), to_value(&model.config)?);
    Ok(Outcome {
        primary: Some(a.out.clone()),
        inputs: vec![a.checkpoint.clone(), a.corpus.clone()],
        outputs: vec![a.out.clone()],
        config: config.into(),
        seed: None,
        ok: true,
    })
}

pub fn parse_weights(s: &str) -> Result<SimWeights> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("--weights {s:?} must be three comma-separated numbers")))?;
    match parts.as_slice() {
        &[a, b, c] => SimWeights::new(a, b, c),
        _ => Err(Error::Config(format!("--weights {s:?} must have exactly three entries"))),
    }
}

#[derive(Debug, Serialize)]
struct EvalReport<'a> {
    options: &'a EvalOptions,
    induced: Option<&'a CorpusReport>,
    baseline: Option<&'a BaselineReport>,
}

fn reference_rows() -> String {
    let mut s = String::from("published reference (different corpus, not reproducible here):\n");
    for (name, v) in PUBLISHED_REFERENCE {
        s.push_str(&format!("  {name:<7} {:.0}%\n", v * 100.0));
    }
    s
}

fn cmd_eval(a: &EvalArgs) -> CliResult<Outcome> {
    let opts = EvalOptions {
        weights: parse_weights(&a.weights)?,
        theta: a.theta,
        filter_unmatched: a.filter_unmatched,
    };
    if !(0.0..=1.0).contains(&a.theta) {
        return Err(CliError::Usage(format!("--theta {} outside [0, 1]", a.theta)));
    }
    let mut stdout = std::io::stdout().lock();
    let mut inputs = Vec::new();
    let mut induced_report = None;
    let mut baseline_report = None;
    match &a.corpus {
        None if a.induced.is_some() || a.baseline.is_some() => {
            return Err(CliError::Usage("--induced and --baseline need --corpus".into()));
        }
        None if !a.paper_reference => {
            return Err(CliError::Usage(
                "nothing to do: give --corpus with --induced and/or --baseline, or --paper-reference".into(),
            ));
        }
        None => {}
        Some(corpus) => {
            inputs.push(corpus.clone());
            let docs = preprocess(&parse_corpus(corpus)?, PreprocessOptions::default())?;
            if a.induced.is_none() && a.baseline.is_none() {
                return Err(CliError::Usage("--corpus needs --induced and/or --baseline".into()));
            }
            if let Some(path) = &a.induced {
                inputs.push(path.clone());
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let mut by_id: BTreeMap<String, InducedRecord> = BTreeMap::new();
                for r in parse_induced(&text)? {
                    let id = r.doc_id.clone();
                    if by_id.insert(id.clone(), r).is_some() {
                        return Err(Error::Format(format!("process {id} appears twice in {}", path.display())).into());
                    }
                }
                for d in &docs {
                    if !by_id.contains_key(&d.id) {
                        return Err(Error::Format(format!("no induced structure for process {}", d.id)).into());
                    }
                }
                if by_id.len() != docs.len() {
                    return Err(Error::Format("induced file lists processes missing from the corpus".into()).into());
                }
                let report = evaluate_docs(&docs, &opts, |_, d| tree_to_graph(&by_id[&d.id].tree, d))?;
                let _ = write!(stdout, "{}", to_table(&report));
                induced_report = Some(report);
            }
            if a.baseline == Some(BaselineArg::Random) {
                let b = random_baseline(&docs, a.seeds, a.seed, &opts)?;
                let _ = writeln!(
                    stdout,
                    "random baseline over {} seeds: node_rate {:.4} edge_rate {:.4} simged {:.4}",
                    a.seeds, b.mean_node_rate, b.mean_edge_rate, b.mean_simged
                );
                baseline_report = Some(b);
            }
        }
    }
    if a.paper_reference {
        let _ = write!(stdout, "{}", reference_rows());
    }
    let mut outputs = Vec::new();
    if let Some(out) = &a.out {
        let report = EvalReport {
            options: &opts,
            induced: induced_report.as_ref(),
            baseline: baseline_report.as_ref(),
        };
        let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Format(e.to_string()))?;
        write_file(out, &(json + "\n"))?;
        outputs.push(out.clone());
        if let Some(r) = &induced_report {
            let csv = sibling(out, ".csv");
            write_file(&csv, &to_csv(r))?;
            outputs.push(csv);
        }
    }
    Ok(Outcome {
        primary: a.out.clone(),
        inputs,
        outputs,
        config: to_value(&opts)?,
        seed: a.baseline.map(|_| a.seed),
        ok: true,
    })
}

fn cmd_gradcheck(a: &GradcheckArgs) -> CliResult<Outcome> {
    let mut stdout = std::io::stdout().lock();
    if a.list {
        for op in OPS {
            let _ = writeln!(stdout, "{op}");
        }
        return Ok(Outcome {
            primary: None,
            inputs: vec![],
            outputs: vec![],
            config: serde_json::Value::Null,
            seed: None,
            ok: true,
        });
    }
    let opts = GradCheckOptions::default();
    let results: Vec<OpCheck> = match (&a.op, a.inject_bug) {
        (Some(_), true) => return Err(CliError::Usage("--op and --inject-bug are exclusive".into())),
        (None, true) => vec![check_op(INJECTED_BUG, a.seed, a.seeds.min(10), &opts)?],
        (Some(op), false) => {
            let n = if op == "lm_loss" { a.lm_seeds } else { a.seeds };
            vec![check_op(op, a.seed, n, &opts)?]
        }
        (None, false) => check_all(a.seed, a.seeds, a.lm_seeds, &opts)?,
    };
    let _ = writeln!(stdout, "{:<14} {:>5} {:>8} {:>13}  result", "op", "seeds", "coords", "max_rel_err");
    for r in &results {
        let _ = writeln!(
            stdout,
            "{:<14} {:>5} {:>8} {:>13.3e}  {}",
            r.op,
            r.seeds,
            r.coords,
            r.max_rel_error,
            if r.passed { "PASS" } else { "FAIL" }
        );
    }
    let ok = results.iter().all(|r| r.passed);
    if let Some(out) = &a.out {
        let json = serde_json::to_string_pretty(&results).map_err(|e| Error::Format(e.to_string()))?;
        write_file(out, &(json + "\n"))?;
    }
    Ok(Outcome {
        primary: a.out.clone(),
        inputs: vec![],
        outputs: a.out.iter().cloned().collect(),
        config: to_value(&opts.step)?,
        seed: Some(a.seed),
        ok,
    })
}

/// Point every output path of a recorded command into `dir`.
fn redirect(command: &str, args: &mut serde_json::Value, dir: &Path) -> CliResult<()> {
    let into = |v: &mut serde_json::Value| -> CliResult<()> {
        if let Some(s) = v.as_str() {
            let name = Path::new(s)
                .file_name()
                .ok_or_else(|| CliError::Usage(format!("output path {s:?} has no file name")))?;
            *v = dir.join(name).to_string_lossy().into_owned().into();
        }
        Ok(())
    };
    match command {
        "gen" | "train" | "induce" | "eval" | "gradcheck" => into(&mut args["out"]),
        other => Err(CliError::Usage(format!("manifest has unknown command {other:?}"))),
    }
}

fn parse_args<T: serde::de::DeserializeOwned>(v: serde_json::Value) -> CliResult<T> {
    serde_json::from_value(v).map_err(|e| CliError::Run(Error::Format(format!("manifest arguments: {e}"))))
}

fn cmd_replay(a: &ReplayArgs) -> CliResult<bool> {
    let m = RunManifest::load(&a.manifest)?;
    for input in &m.inputs {
        let now = sha256_file(&input.path)?;
        if now != input.sha256 {
            return Err(CliError::Run(Error::Format(format!(
                "input {} changed since the recorded run",
                input.path.display()
            ))));
        }
    }
    let dir = a.into.clone().unwrap_or_else(|| sibling(&a.manifest, ".replay"));
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut args = m.args.clone();
    redirect(&m.command, &mut args, &dir)?;
    let cmd = match m.command.as_str() {
        "gen" => Command::Gen(parse_args(args)?),
        "train" => Command::Train(parse_args(args)?),
        "induce" => Command::Induce(parse_args(args)?),
        "eval" => Command::Eval(parse_args(args)?),
        "gradcheck" => Command::Gradcheck(parse_args(args)?),
        other => return Err(CliError::Usage(format!("cannot replay {other:?}"))),
    };
    let ran_ok = dispatch(cmd)?;
    let mut all_match = true;
    let mut stdout = std::io::stdout().lock();
    for out in &m.outputs {
        let name = out
            .path
            .file_name()
            .ok_or_else(|| CliError::Run(Error::Format(format!("output {} has no file name", out.path.display()))))?;
        let replayed = dir.join(name);
        let same = sha256_file(&replayed).map(|h| h == out.sha256).unwrap_or(false);
        all_match &= same;
        let _ = writeln!(
            stdout,
            "{} {}",
            if same { "MATCH   " } else { "MISMATCH" },
            out.path.display()
        );
    }
    Ok(ran_ok && all_match)
}

#[cfg(test)]
mod tests;
