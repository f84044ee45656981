use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hirenet::baselines::{vote_baselines, AnswerBaseline, BaselineKind, BaselineSettings, BASELINE_KIND};
use hirenet::data::{generate_corpus, DataDir, GeneratorSpec, Interview, Label, Modality, SplitName};
use hirenet::harness::{
    compute_metrics, evaluate, export_attention, train, write_metrics_csv, write_scores_csv, CandidateScore,
    EpochRecord, MetricsRow, TrainOptions,
};
use hirenet::model::{checkpoint_kind, late_fusion, EarlyFusion, HireNet, HireNetConfig, Variant, MODEL_KIND};
use hirenet::{Error, Result};

#[derive(Parser)]
#[command(name = "hirenet", version, about = "Hierarchical attention models for interview hirability")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModalityArg {
    Text,
    Audio,
    Video,
}

impl From<ModalityArg> for Modality {
    fn from(m: ModalityArg) -> Self {
        match m {
            ModalityArg::Text => Modality::Text,
            ModalityArg::Audio => Modality::Audio,
            ModalityArg::Video => Modality::Video,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Hirenet,
    #[value(name = "hn_satt")]
    HnSatt,
    #[value(name = "hn_avg")]
    HnAvg,
    Bigru,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Hirenet => Variant::HireNet,
            VariantArg::HnSatt => Variant::HnSatt,
            VariantArg::HnAvg => Variant::HnAvg,
            VariantArg::Bigru => Variant::BigruAnswerwise,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Val,
    Test,
}

impl From<SplitArg> for SplitName {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => SplitName::Train,
            SplitArg::Val => SplitName::Val,
            SplitArg::Test => SplitName::Test,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FuseMode {
    Early,
    Late,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineArg {
    Stats,
    Bow,
    Votes,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with planted salience.
    GenerateData {
        /// TOML generator spec; defaults apply when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model on the training split with early stopping.
    Train {
        /// TOML model configuration; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        modality: ModalityArg,
        #[arg(long, value_enum, default_value = "hirenet")]
        variant: VariantArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Print one line per epoch.
        #[arg(long)]
        verbose: bool,
    },
    /// Score a split with a model or baseline checkpoint.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
        #[arg(long)]
        report: PathBuf,
        /// Per-candidate scores CSV.
        #[arg(long)]
        scores: Option<PathBuf>,
    },
    /// Combine three monomodal checkpoints.
    Fuse {
        #[arg(long, value_enum)]
        mode: FuseMode,
        #[arg(long, num_args = 3, required = true)]
        checkpoints: Vec<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Where to store the fitted early-fusion classifier.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-3)]
        l2: f64,
    },
    /// Fit and score a non-sequential or vote baseline.
    Baseline {
        #[arg(long, value_enum)]
        kind: BaselineArg,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "audio")]
        modality: ModalityArg,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Where to store the fitted baseline.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Random-vote draws.
        #[arg(long, default_value_t = 1000)]
        draws: usize,
    },
    /// Write the attention weights of one candidate as JSON.
    AttentionExport {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        candidate: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::GenerateData { spec, out } => generate_data(spec.as_deref(), &out),
        Command::Train {
            config,
            data,
            modality,
            variant,
            seed,
            out,
            verbose,
        } => train_model(config.as_deref(), &data, modality.into(), variant.into(), seed, &out, verbose),
        Command::Evaluate {
            checkpoint,
            data,
            split,
            report,
            scores,
        } => evaluate_checkpoint(&checkpoint, &data, split.into(), &report, scores.as_deref()),
        Command::Fuse {
            mode,
            checkpoints,
            data,
            split,
            report,
            out,
            l2,
        } => fuse(mode, &checkpoints, &data, split.into(), report.as_deref(), out.as_deref(), l2),
        Command::Baseline {
            kind,
            data,
            modality,
            split,
            seed,
            report,
            out,
            draws,
        } => baseline(kind, &data, modality.into(), split.into(), seed, report.as_deref(), out.as_deref(), draws),
        Command::AttentionExport {
            checkpoint,
            data,
            candidate,
            out,
        } => attention(&checkpoint, &data, &candidate, &out),
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn generate_data(spec: Option<&Path>, out: &Path) -> Result<()> {
    let spec = match spec {
        Some(p) => toml::from_str::<GeneratorSpec>(&read_text(p)?).map_err(|e| Error::Config(e.to_string()))?,
        None => GeneratorSpec::default(),
    };
    let generated = generate_corpus(&spec)?;
    let split = DataDir::new(out).write_generated(&generated)?;
    println!(
        "wrote {} candidates to {} (train {}, val {}, test {})",
        spec.candidates,
        out.display(),
        split.train.len(),
        split.validation.len(),
        split.test.len()
    );
    Ok(())
}

fn print_epoch(e: &EpochRecord) {
    println!(
        "epoch {:>3}  train loss {:.4}  val loss {:.4}  val f1 {:.4}",
        e.epoch, e.train_loss, e.validation_loss, e.validation.f1
    );
}

fn train_model(
    config: Option<&Path>,
    data: &Path,
    modality: Modality,
    variant: Variant,
    seed: u64,
    out: &Path,
    verbose: bool,
) -> Result<()> {
    let dir = DataDir::new(data);
    let meta = dir.meta()?;
    let mut config = match config {
        Some(p) => HireNetConfig::load(p)?,
        None => HireNetConfig::default(),
    };
    config.variant = variant;
    config.modality = modality;
    config.seed = seed;
    config.vocab_size = meta.vocab_size;
    config.feature_dim = meta.feature_dims[&modality];
    let corpus = dir.load(modality)?;
    let split = dir.split()?;
    let train_set = split.select(&corpus, SplitName::Train);
    let val = split.select(&corpus, SplitName::Val);
    let options = TrainOptions {
        checkpoint: Some(out.join("model.json")),
        record_initial_loss: false,
        on_epoch: verbose.then_some(print_epoch as fn(&EpochRecord)),
    };
    let (_, report) = train(&train_set, &val, &config, &options)?;
    report.save(&out.join("train_report.json"))?;
    println!(
        "{variant} on {modality}: best epoch {} of {}, validation f1 {:.4}",
        report.best_epoch,
        report.epochs.len(),
        report.best_validation.f1
    );
    Ok(())
}

/// Scores candidates with any supported checkpoint kind.
enum Scorer {
    Network(HireNet),
    Baseline(AnswerBaseline),
}

impl Scorer {
    fn load(path: &Path) -> Result<Self> {
        match checkpoint_kind(path)?.as_str() {
            MODEL_KIND => Ok(Scorer::Network(HireNet::load(path)?)),
            BASELINE_KIND => Ok(Scorer::Baseline(AnswerBaseline::load(path)?)),
            other => Err(Error::Checkpoint(format!("{}: cannot score with a {other} checkpoint", path.display()))),
        }
    }

    fn modality(&self) -> Modality {
        match self {
            Scorer::Network(m) => m.config().modality,
            Scorer::Baseline(b) => b.modality,
        }
    }

    fn name(&self) -> String {
        match self {
            Scorer::Network(m) => m.config().variant.to_string(),
            Scorer::Baseline(b) => format!("{:?}_logistic", b.kind).to_lowercase(),
        }
    }

    fn score(&self, interview: &Interview) -> Result<(f64, Label)> {
        match self {
            Scorer::Network(m) => {
                let p = m.predict(interview)?;
                Ok((p.score, p.label))
            }
            Scorer::Baseline(b) => b.predict(interview),
        }
    }
}

fn score_all(scorer: &Scorer, split: &[&Interview]) -> Result<Vec<CandidateScore>> {
    split
        .iter()
        .map(|i| {
            let (score, predicted) = scorer.score(i)?;
            Ok(CandidateScore {
                candidate_id: i.candidate_id.clone(),
                score,
                predicted,
                label: i.label,
            })
        })
        .collect()
}

fn metrics_of(scores: &[CandidateScore]) -> Result<hirenet::harness::Metrics> {
    let predicted: Vec<Label> = scores.iter().map(|s| s.predicted).collect();
    let labels: Vec<Label> = scores.iter().map(|s| s.label).collect();
    compute_metrics(&predicted, &labels)
}

fn print_row(row: &MetricsRow) {
    println!(
        "{} {} {}: precision {:.4} recall {:.4} f1 {:.4}",
        row.model, row.modality, row.split, row.precision, row.recall, row.f1
    );
}

fn evaluate_checkpoint(
    checkpoint: &Path,
    data: &Path,
    split: SplitName,
    report: &Path,
    scores_path: Option<&Path>,
) -> Result<()> {
    let scorer = Scorer::load(checkpoint)?;
    let dir = DataDir::new(data);
    let corpus = dir.load(scorer.modality())?;
    let selected = dir.split()?.select(&corpus, split);
    let (metrics, scores) = match &scorer {
        Scorer::Network(m) => {
            let e = evaluate(m, &selected)?;
            (e.metrics, e.scores)
        }
        Scorer::Baseline(_) => {
            let s = score_all(&scorer, &selected)?;
            (metrics_of(&s)?, s)
        }
    };
    let row = MetricsRow::for_modality(&scorer.name(), scorer.modality(), split.as_str(), &metrics);
    print_row(&row);
    write_metrics_csv(report, &[row])?;
    if let Some(p) = scores_path {
        write_scores_csv(p, &scores)?;
    }
    Ok(())
}

fn fuse(
    mode: FuseMode,
    checkpoints: &[PathBuf],
    data: &Path,
    split: SplitName,
    report: Option<&Path>,
    out: Option<&Path>,
    l2: f64,
) -> Result<()> {
    let dir = DataDir::new(data);
    let ids = dir.split()?;
    let mut models = Vec::with_capacity(checkpoints.len());
    let mut corpora = Vec::with_capacity(checkpoints.len());
    for path in checkpoints {
        let m = HireNet::load(path)?;
        let corpus: BTreeMap<String, Interview> = dir
            .load(m.config().modality)?
            .into_iter()
            .map(|i| (i.candidate_id.clone(), i))
            .collect();
        models.push(m);
        corpora.push(corpus);
    }
    let labels: BTreeMap<String, Label> = dir
        .load(Modality::Text)?
        .into_iter()
        .map(|i| (i.candidate_id, i.label))
        .collect();
    let label_of = |id: &String| {
        labels
            .get(id)
            .copied()
            .ok_or_else(|| Error::Validation {
                candidate: id.clone(),
                message: "listed in the split but absent from the text corpus".into(),
            })
    };
    let threshold = models[0].config().threshold;

    let (name, scores) = match mode {
        FuseMode::Late => {
            let mut scores = Vec::new();
            for id in ids.ids(split) {
                let mut per_model = Vec::with_capacity(models.len());
                for (m, corpus) in models.iter().zip(&corpora) {
                    per_model.push(match corpus.get(id) {
                        Some(i) => Some(m.predict(i)?.score),
                        None => None,
                    });
                }
                let (score, predicted) = late_fusion(&per_model, threshold)?;
                scores.push(CandidateScore {
                    candidate_id: id.clone(),
                    score,
                    predicted,
                    label: label_of(id)?,
                });
            }
            ("late_fusion", scores)
        }
        FuseMode::Early => {
            let representations = |id: &String| -> Result<Vec<Option<Vec<f64>>>> {
                models
                    .iter()
                    .zip(&corpora)
                    .map(|(m, corpus)| corpus.get(id).map(|i| m.representation(i)).transpose())
                    .collect()
            };
            let mut rows = Vec::new();
            let mut row_labels = Vec::new();
            for id in ids.ids(SplitName::Train) {
                rows.push(representations(id)?);
                row_labels.push(label_of(id)?);
            }
            let fusion = EarlyFusion::fit(&rows, &row_labels, l2, threshold)?;
            if let Some(p) = out {
                fusion.save(p)?;
            }
            let mut scores = Vec::new();
            for id in ids.ids(split) {
                let reps = representations(id)?;
                let refs: Vec<Option<&[f64]>> = reps.iter().map(|r| r.as_deref()).collect();
                let score = fusion.score(&refs)?;
                scores.push(CandidateScore {
                    candidate_id: id.clone(),
                    score,
                    predicted: Label::from_bool(score >= threshold),
                    label: label_of(id)?,
                });
            }
            ("early_fusion", scores)
        }
    };
    let row = MetricsRow::new(name, "fused", split.as_str(), &metrics_of(&scores)?);
    print_row(&row);
    if let Some(p) = report {
        write_metrics_csv(p, &[row])?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn baseline(
    kind: BaselineArg,
    data: &Path,
    modality: Modality,
    split: SplitName,
    seed: u64,
    report: Option<&Path>,
    out: Option<&Path>,
    draws: usize,
) -> Result<()> {
    let dir = DataDir::new(data);
    let corpus = dir.load(modality)?;
    let ids = dir.split()?;
    let train_set = ids.select(&corpus, SplitName::Train);
    let selected = ids.select(&corpus, split);
    let rows = match kind {
        BaselineArg::Votes => {
            let r = vote_baselines(&train_set, &selected, draws, seed)?;
            let random = MetricsRow {
                model: "random_vote".into(),
                modality: "none".into(),
                split: split.as_str().into(),
                precision: r.random.precision,
                recall: r.random.recall,
                f1: r.random.f1,
            };
            let majority = MetricsRow::new("position_majority", "none", split.as_str(), &r.majority);
            vec![random, majority]
        }
        BaselineArg::Stats | BaselineArg::Bow => {
            let kind = match kind {
                BaselineArg::Stats => BaselineKind::Stats,
                _ => BaselineKind::Bow,
            };
            let meta = dir.meta()?;
            let settings = BaselineSettings {
                seed,
                ..BaselineSettings::default()
            };
            let fitted = AnswerBaseline::fit(kind, &train_set, &meta.feature_kinds[&modality], meta.vocab_size, settings)?;
            if let Some(p) = out {
                fitted.save(p)?;
            }
            let scorer = Scorer::Baseline(fitted);
            let scores = score_all(&scorer, &selected)?;
            vec![MetricsRow::for_modality(&scorer.name(), modality, split.as_str(), &metrics_of(&scores)?)]
        }
    };
    rows.iter().for_each(print_row);
    if let Some(p) = report {
        write_metrics_csv(p, &rows)?;
    }
    Ok(())
}

fn attention(checkpoint: &Path, data: &Path, candidate: &str, out: &Path) -> Result<()> {
    let model = HireNet::load(checkpoint)?;
    let corpus = DataDir::new(data).load(model.config().modality)?;
    let interview = corpus
        .iter()
        .find(|i| i.candidate_id == candidate)
        .ok_or_else(|| Error::Validation {
            candidate: candidate.into(),
            message: format!("not present in the {} corpus", model.config().modality),
        })?;
    let report = export_attention(&model, interview)?;
    report.save(out)?;
    println!(
        "{candidate}: score {:.4}, top question {}",
        report.score,
        report.top_question()
    );
    Ok(())
}
