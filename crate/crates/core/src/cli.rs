//! Command-line front end. `main` parses [`Cli`] and calls [`run`].

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;

use crate::elman::{bptt_train, calibrate, Dims, ElmanModel, TrainConfig};
use crate::error::{write_string, Error, Result};
use crate::hw::{build_core, check_constraints, estimate_power, CoreConfig, DEFAULT_THRESHOLD};
use crate::nlp::{self, parse_corpus, synth, tokenize, CoarseLabel, WordVectorTable};
use crate::pipeline::{self, compare_all, EvalOptions, SpikingSetup};
use crate::quant::quantize_model;
use crate::sim::{render_ascii, ResetPolicy, SentenceRun, SimOptions};

#[derive(Debug, Parser)]
#[command(
    name = "spiking-rnn",
    version,
    about = "Train an Elman RNN and run it as a spiking network on a modeled crossbar core"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the network with BPTT and write the model file.
    Train(TrainArgs),
    /// Quantize a model and map it onto one core.
    Convert(ConvertArgs),
    /// Compare the four setups on a test corpus.
    Evaluate(EvaluateArgs),
    /// Run one question through the spiking core and export its raster.
    Simulate(SimulateArgs),
    /// Estimate chip power for a number of cores.
    Power(PowerArgs),
    /// Classify questions typed on standard input.
    Repl(ReplArgs),
    /// Write a synthetic question corpus in the `COARSE:fine question` format.
    SynthCorpus(SynthArgs),
}

/// Where word vectors come from.
#[derive(Debug, Args, Clone)]
pub struct VectorArgs {
    /// Word-vector file (`vocab_size dim` header, then `word v1 .. v64`).
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    /// Without --vectors, hash-seeded vectors are generated for the
    /// vocabulary of this corpus.
    #[arg(long = "vocab-corpus")]
    pub vocab_corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub vector_seed: u64,
}

impl VectorArgs {
    pub fn load(&self) -> Result<WordVectorTable> {
        match (&self.vectors, &self.vocab_corpus) {
            (Some(path), _) => WordVectorTable::load(path),
            (None, Some(corpus)) => {
                let vocab = pipeline::vocabulary(&parse_corpus(corpus)?);
                Ok(WordVectorTable::fallback(vocab, self.vector_seed))
            }
            (None, None) => Err(Error::Config(
                "give --vectors, or --vocab-corpus for generated fallback vectors".into(),
            )),
        }
    }
}

#[derive(Debug, Args, Clone)]
pub struct SimArgs {
    /// Spike encoder: deterministic, deterministic-leading or poisson.
    #[arg(long, default_value = "deterministic-leading")]
    pub encoder: String,
    #[arg(long, value_enum, default_value_t = ResetPolicy::PerSentence)]
    pub reset: ResetPolicy,
    /// Seed of the stochastic encoder.
    #[arg(long, default_value_t = 0)]
    pub sim_seed: u64,
}

impl SimArgs {
    pub fn options(&self) -> SimOptions {
        SimOptions {
            encoder: self.encoder.clone(),
            seed: self.sim_seed,
            reset: self.reset,
            ..SimOptions::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training corpus.
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub vector_seed: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub learning_rate: f64,
    /// Truncate backpropagation to this many steps.
    #[arg(long)]
    pub bptt_horizon: Option<usize>,
    /// Model file to write.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: i32,
    /// Core configuration file to write.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Also write the quantized network as JSON.
    #[arg(long)]
    pub quantized_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Test corpus.
    #[arg(long)]
    pub test: PathBuf,
    #[command(flatten)]
    pub vectors: VectorArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Presentations of the test set for the stochastic encoder.
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    /// Directory for table.tsv, summary.json and the confusion matrices.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Core file; built from the model when omitted.
    #[arg(long)]
    pub core: Option<PathBuf>,
    #[arg(long)]
    pub question: String,
    #[command(flatten)]
    pub vectors: VectorArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Raster file (`tick,neuron_id` lines).
    #[arg(long)]
    pub raster: PathBuf,
    /// Per-word spike counts.
    #[arg(long)]
    pub counts: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    #[arg(long, default_value_t = 1)]
    pub cores: usize,
}

#[derive(Debug, Args)]
pub struct ReplArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub vectors: VectorArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Raster of the last classified question is written here.
    #[arg(long, default_value = "raster.csv")]
    pub raster: PathBuf,
    /// Skip the ASCII raster.
    #[arg(long)]
    pub no_plot: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub train_out: PathBuf,
    #[arg(long)]
    pub test_out: PathBuf,
    #[arg(long, default_value_t = 5000)]
    pub train_size: usize,
    #[arg(long, default_value_t = 500)]
    pub test_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run(cli: Cli) -> Result<()> {
    let stdout = std::io::stdout();
    match cli.command {
        Command::Train(a) => cmd_train(&a, &mut stdout.lock()),
        Command::Convert(a) => cmd_convert(&a, &mut stdout.lock()),
        Command::Evaluate(a) => cmd_evaluate(&a, &mut stdout.lock()),
        Command::Simulate(a) => cmd_simulate(&a, &mut stdout.lock()),
        Command::Power(a) => cmd_power(&a, &mut stdout.lock()),
        Command::Repl(a) => cmd_repl(&a, &mut std::io::stdin().lock(), &mut stdout.lock()),
        Command::SynthCorpus(a) => cmd_synth(&a, &mut stdout.lock()),
    }
}

fn out_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

pub fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let corpus = parse_corpus(&a.train)?;
    if corpus.is_empty() {
        return Err(Error::Input(format!(
            "{} contains no sentences",
            a.train.display()
        )));
    }
    let table = match &a.vectors {
        Some(p) => WordVectorTable::load(p)?,
        None => WordVectorTable::fallback(pipeline::vocabulary(&corpus), a.vector_seed),
    };
    let data = pipeline::embed_corpus(&corpus, &table);
    let cfg = TrainConfig {
        learning_rate: a.learning_rate,
        epochs: a.epochs,
        bptt_horizon: a.bptt_horizon,
        seed: a.seed,
        ..TrainConfig::default()
    };
    info!(
        "training on {} sentences for {} epochs",
        data.len(),
        cfg.epochs
    );
    let report = bptt_train(&data, Dims::default(), &cfg)?;
    let c = calibrate(&report.params, &data)?;
    let model = ElmanModel::new(report.params, c, a.seed);
    model.save(&a.out)?;
    let last = report.epoch_loss.last().copied().unwrap_or(f64::NAN);
    writeln!(
        out,
        "trained on {} sentences; final epoch loss {last:.4}; calibration {c:.4}; wrote {}",
        data.len(),
        a.out.display()
    )
    .map_err(out_err)
}

pub fn cmd_convert(a: &ConvertArgs, out: &mut dyn Write) -> Result<()> {
    let model = ElmanModel::load(&a.model)?;
    let q = quantize_model(&model)?;
    let report = check_constraints(q.n_inputs(), q.n_hidden(), 4);
    if !report.ok {
        return Err(Error::Mapping(report));
    }
    let core = build_core(&q, a.threshold)?;
    core.save(&a.out)?;
    if let Some(p) = &a.quantized_out {
        q.save(p)?;
    }
    writeln!(
        out,
        "mapped {} inputs and {} hidden neurons onto {} of 256 axon rows; wrote {}",
        q.n_inputs(),
        q.n_hidden(),
        core.used_rows(),
        a.out.display()
    )
    .map_err(out_err)
}

pub fn cmd_evaluate(a: &EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    let model = ElmanModel::load(&a.model)?;
    let table = a.vectors.load()?;
    let test = pipeline::embed_corpus(&parse_corpus(&a.test)?, &table);
    let opts = EvalOptions {
        sim: a.sim.options(),
        repeats: a.repeats,
    };
    let cmp = compare_all(&model, &test, &opts)?;
    cmp.write_to(&a.out_dir)?;
    write!(out, "{}", cmp.table()).map_err(out_err)
}

fn spiking_setup(
    model_path: &Path,
    core_path: Option<&Path>,
    sim: SimOptions,
) -> Result<SpikingSetup> {
    let model = ElmanModel::load(model_path)?;
    let q = quantize_model(&model)?;
    let core = match core_path {
        Some(p) => CoreConfig::load(p)?,
        None => build_core(&q, DEFAULT_THRESHOLD)?,
    };
    SpikingSetup::new(q, core, sim)
}

/// Classifies one question on the spiking core. Blank input (or input with
/// no word tokens) yields `None`.
pub fn repl_classify(
    question: &str,
    setup: &SpikingSetup,
    table: &WordVectorTable,
) -> Result<Option<(CoarseLabel, SentenceRun)>> {
    let tokens = tokenize(question);
    if tokens.is_empty() {
        return Ok(None);
    }
    let sentence = table.embed(&tokens);
    let run = setup.run(&sentence, 0, setup.options().seed)?;
    let scores = setup.scores_from_counts(run.final_counts())?;
    let label = CoarseLabel::from_index(crate::linalg::argmax(&scores)).expect("six classes");
    Ok(Some((label, run)))
}

pub fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let setup = spiking_setup(&a.model, a.core.as_deref(), a.sim.options())?;
    let table = a.vectors.load()?;
    let (label, run) = repl_classify(&a.question, &setup, &table)?
        .ok_or_else(|| Error::Input("question has no words".into()))?;
    write_string(&a.raster, &run.raster.to_csv())?;
    if let Some(p) = &a.counts {
        write_string(p, &run.counts_csv())?;
    }
    writeln!(
        out,
        "{label} ({}); {} spikes",
        label.long_name(),
        run.raster.len()
    )
    .map_err(out_err)
}

pub fn cmd_power(a: &PowerArgs, out: &mut dyn Write) -> Result<()> {
    let w = estimate_power(a.cores)?;
    writeln!(out, "{} core(s): {:.2} uW ({:.6} W)", a.cores, w * 1e6, w).map_err(out_err)
}

pub fn cmd_repl(a: &ReplArgs, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<()> {
    let setup = spiking_setup(&a.model, None, a.sim.options())?;
    let table = a.vectors.load()?;
    let window = setup.options().window;
    let mut line = String::new();
    loop {
        write!(out, "question> ")
            .and_then(|_| out.flush())
            .map_err(out_err)?;
        line.clear();
        if input
            .read_line(&mut line)
            .map_err(|e| Error::io("<stdin>", e))?
            == 0
        {
            writeln!(out).map_err(out_err)?;
            return Ok(());
        }
        match repl_classify(&line, &setup, &table)? {
            None => continue,
            Some((label, run)) => {
                write_string(&a.raster, &run.raster.to_csv())?;
                writeln!(out, "{label} ({})", label.long_name()).map_err(out_err)?;
                if !a.no_plot {
                    let art =
                        render_ascii(&run.raster, run.residual.len(), run.counts.len(), window);
                    write!(out, "{art}").map_err(out_err)?;
                }
            }
        }
    }
}

pub fn cmd_synth(a: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    let train = synth::generate(a.train_size, synth::Split::Train, a.seed);
    let test = synth::generate(a.test_size, synth::Split::Test, a.seed.wrapping_add(1));
    nlp::write_corpus(&a.train_out, &train)?;
    nlp::write_corpus(&a.test_out, &test)?;
    writeln!(
        out,
        "wrote {} training and {} test questions",
        train.len(),
        test.len()
    )
    .map_err(out_err)
}
