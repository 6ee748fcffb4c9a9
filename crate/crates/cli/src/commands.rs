use std::path::{Path, PathBuf};

use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use sketchvote::cluster::{self, CentroidModel, KMeansConfig, DEFAULT_K_PER_CLASS, DEFAULT_TOP_M};
use sketchvote::data::{
    self, EmbeddingSet, SplitSpec, DEFAULT_GUESS_RATE_THRESHOLD, DEFAULT_HISTOGRAM_BINS,
    SAMPLE_META_FILE,
};
use sketchvote::eval::{self, DEFAULT_EMA_ALPHA, DEFAULT_MOST_CONFUSED};
use sketchvote::knnpp::{self, VotingConfig, DEFAULT_EPSILON, DEFAULT_K_NEIGHBORS};
use sketchvote::project::{self, TsneConfig};
use sketchvote::report::{self, OutputFormat};
use sketchvote::tinynn::gradcheck::{self, DEFAULT_STEP, DEFAULT_TOLERANCE};
use sketchvote::tinynn::model::{DEFAULT_BASE_FILTERS, DEFAULT_BLOCKS};
use sketchvote::tinynn::train::{DEFAULT_BATCH_SIZE, DEFAULT_EPOCHS, DEFAULT_LEARNING_RATE};
use sketchvote::tinynn::{self, CnnConfig, CnnModel, ImageSet, OptimizerKind, TrainConfig};

use crate::{CliResult, Failure};

/// What a subcommand read and wrote, plus its stdout summary.
pub struct Outcome {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub summary: Value,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", content = "parameters", rename_all = "kebab-case")]
pub enum Command {
    /// Keep rows whose guess rate reaches a threshold.
    Clean(CleanArgs),
    /// Up-sample every class to the largest class size.
    Rebalance(RebalanceArgs),
    /// Stratified train/val/test split into <out>/{train,val,test}.
    Split(SplitArgs),
    /// Fit KMeans++ sub-cluster centroids per class.
    Fit(FitArgs),
    /// Per-point silhouette scores with labels as clusters.
    Silhouette(SilhouetteArgs),
    /// Rows of one class nearest to each of its centroids.
    Exemplars(ExemplarsArgs),
    /// KNN++ voting over the pooled centroids.
    Classify(ClassifyArgs),
    /// Top-N accuracy, confusion matrix and least-recalled classes.
    Evaluate(EvaluateArgs),
    /// 2-D PCA or t-SNE layout.
    Project(ProjectArgs),
    /// Train the CNN baseline on an image set.
    Train(TrainArgs),
    /// Finite-difference check of the CNN gradients.
    Gradcheck(GradcheckArgs),
    /// Class-size histogram.
    Histogram(HistogramArgs),
    /// Exponential moving average of a two-column series.
    Ema(EmaArgs),
}

/// An embedding-set directory, optionally a named subdirectory of a split.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SetInput {
    /// Embedding-set directory.
    pub input: PathBuf,
    /// Read `<input>/<split>` (e.g. train, val or test from `split`).
    #[arg(long)]
    pub split: Option<String>,
}

impl SetInput {
    fn path(&self) -> PathBuf {
        match &self.split {
            Some(s) => self.input.join(s),
            None => self.input.clone(),
        }
    }

    fn load(&self) -> CliResult<EmbeddingSet> {
        Ok(data::load_embedding_set(self.path())?)
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CleanArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    #[arg(long, default_value_t = DEFAULT_GUESS_RATE_THRESHOLD)]
    pub threshold: f64,
    /// Sample metadata CSV [default: <input>/meta_samples.csv].
    #[arg(long)]
    pub meta: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RebalanceArgs {
    #[command(flatten)]
    pub set: SetInput,
    pub output: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SplitArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    /// Train, validation and test fractions.
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.8, 0.1, 0.1])]
    pub fracs: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub set: SetInput,
    pub model: PathBuf,
    #[arg(long, default_value_t = DEFAULT_K_PER_CLASS)]
    pub k_per_class: usize,
    #[arg(long, default_value_t = KMeansConfig::default().restarts)]
    pub restarts: usize,
    #[arg(long, default_value_t = KMeansConfig::default().max_iters)]
    pub max_iters: usize,
    /// Stop when the relative inertia improvement falls to this value.
    #[arg(long, default_value_t = KMeansConfig::default().tol)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SilhouetteArgs {
    #[command(flatten)]
    pub set: SetInput,
    /// `.csv` (point_index,label,s_i) or `.json`.
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ExemplarsArgs {
    #[command(flatten)]
    pub set: SetInput,
    pub model: PathBuf,
    pub output: PathBuf,
    /// Class name or numeric id.
    #[arg(long)]
    pub class: String,
    #[arg(long, default_value_t = DEFAULT_TOP_M)]
    pub top_m: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub set: SetInput,
    pub model: PathBuf,
    /// Predictions file, `.csv` (query_index,rank,class_id,score) or `.json`.
    pub output: PathBuf,
    #[arg(long, default_value_t = DEFAULT_K_NEIGHBORS)]
    pub k_neighbors: usize,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvaluateArgs {
    /// Predictions CSV written by `classify`.
    pub predictions: PathBuf,
    /// Embedding set holding the true labels.
    #[command(flatten)]
    pub set: SetInput,
    /// Accuracy report, `.json` or `.csv`.
    pub output: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = eval::DEFAULT_TOP_N)]
    pub top_n: Vec<usize>,
    /// Also write the confusion matrix (`.csv` or `.json`).
    #[arg(long)]
    pub confusion: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MOST_CONFUSED)]
    pub most_confused: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pca,
    Tsne,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ProjectArgs {
    #[command(flatten)]
    pub set: SetInput,
    /// `.csv` (x,y,label_id,label_name) or `.json`.
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Tsne)]
    pub method: Method,
    #[arg(long, default_value_t = TsneConfig::default().perplexity)]
    pub perplexity: f64,
    #[arg(long, default_value_t = TsneConfig::default().iters)]
    pub iters: usize,
    #[arg(long, default_value_t = TsneConfig::default().learning_rate)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = TsneConfig::default().max_points)]
    pub max_points: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optim {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    /// Image-set directory (index.json, images.u8, labels.u32).
    pub data: PathBuf,
    /// Checkpoint directory for the lowest-validation-loss epoch.
    pub checkpoint: PathBuf,
    /// Validation image set; without it a stratified 0.8/0.1/0.1 split of
    /// `data` is used (train on the first part, validate on the second).
    #[arg(long)]
    pub val: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_LEARNING_RATE)]
    pub lr: f64,
    #[arg(long, default_value_t = DEFAULT_BATCH_SIZE)]
    pub batch: usize,
    #[arg(long, default_value_t = DEFAULT_EPOCHS)]
    pub epochs: usize,
    #[arg(long, value_enum, default_value_t = Optim::Adam)]
    pub optimizer: Optim,
    #[arg(long, default_value_t = DEFAULT_BASE_FILTERS)]
    pub base_filters: usize,
    #[arg(long, default_value_t = DEFAULT_BLOCKS)]
    pub blocks: usize,
    /// Stop once full-pass training accuracy reaches this value.
    #[arg(long)]
    pub target_accuracy: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tolerance: f64,
    #[arg(long, default_value_t = DEFAULT_STEP)]
    pub step: f64,
    #[arg(long, default_value_t = 4)]
    pub batch: usize,
    /// Write the per-parameter report (`.json`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct HistogramArgs {
    #[command(flatten)]
    pub set: SetInput,
    /// `.json` or `.csv` (bin_lo,bin_hi,classes).
    pub output: PathBuf,
    #[arg(long, default_value_t = DEFAULT_HISTOGRAM_BINS)]
    pub bins: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EmaArgs {
    /// Two-column CSV such as `step,loss` or `epoch,val_loss`.
    pub input: PathBuf,
    /// `step,value` CSV (or `.json`).
    pub output: PathBuf,
    #[arg(long, default_value_t = DEFAULT_EMA_ALPHA)]
    pub alpha: f64,
}

fn distinct(inputs: &[&Path], output: &Path) -> CliResult<()> {
    let abs = |p: &Path| std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf());
    let out = abs(output);
    if inputs.iter().any(|i| abs(i) == out) {
        return Err(Failure::Invalid(format!(
            "output {} would overwrite an input",
            output.display()
        )));
    }
    Ok(())
}

fn check_extension(path: &Path) -> CliResult<OutputFormat> {
    Ok(OutputFormat::from_path(path)?)
}

fn class_index(set: &EmbeddingSet, model: &CentroidModel, class: &str) -> CliResult<usize> {
    if let Some(i) = model.label_names().iter().position(|n| n == class) {
        return Ok(i);
    }
    match class.parse::<usize>() {
        Ok(i) if i < model.num_classes() && i < set.num_classes() => Ok(i),
        _ => Err(Failure::Invalid(format!("unknown class {class:?}"))),
    }
}

impl Command {
    pub fn seed(&self) -> Option<u64> {
        match self {
            Command::Rebalance(a) => Some(a.seed),
            Command::Split(a) => Some(a.seed),
            Command::Fit(a) => Some(a.seed),
            Command::Project(a) => Some(a.seed),
            Command::Train(a) => Some(a.seed),
            Command::Gradcheck(a) => Some(a.seed),
            _ => None,
        }
    }

    pub fn run(&self) -> CliResult<Outcome> {
        match self {
            Command::Clean(a) => clean(a),
            Command::Rebalance(a) => rebalance(a),
            Command::Split(a) => split(a),
            Command::Fit(a) => fit(a),
            Command::Silhouette(a) => silhouette(a),
            Command::Exemplars(a) => exemplars(a),
            Command::Classify(a) => classify(a),
            Command::Evaluate(a) => evaluate(a),
            Command::Project(a) => project(a),
            Command::Train(a) => train(a),
            Command::Gradcheck(a) => gradcheck(a),
            Command::Histogram(a) => histogram(a),
            Command::Ema(a) => ema(a),
        }
    }
}

fn clean(a: &CleanArgs) -> CliResult<Outcome> {
    distinct(&[&a.input], &a.output)?;
    let set = data::load_embedding_set(&a.input)?;
    let meta_path = a
        .meta
        .clone()
        .unwrap_or_else(|| a.input.join(SAMPLE_META_FILE));
    let metas = data::load_sample_meta(&meta_path)?;
    let cleaned = data::clean_by_guess_rate(&set, &metas, a.threshold)?;
    let kept: Vec<_> = data::passing_rows(&metas, a.threshold)
        .into_iter()
        .map(|i| metas[i].clone())
        .collect();
    data::save_embedding_set(&cleaned, &a.output)?;
    data::save_sample_meta(&kept, a.output.join(SAMPLE_META_FILE))?;
    Ok(Outcome {
        inputs: vec![a.input.clone(), meta_path],
        outputs: vec![a.output.clone()],
        summary: json!({"rows_in": set.n(), "rows_kept": cleaned.n(), "threshold": a.threshold}),
    })
}

fn rebalance(a: &RebalanceArgs) -> CliResult<Outcome> {
    distinct(&[&a.set.path()], &a.output)?;
    let set = a.set.load()?;
    let out = data::rebalance_classes(&set, a.seed)?;
    data::save_embedding_set(&out, &a.output)?;
    Ok(Outcome {
        inputs: vec![a.set.path()],
        outputs: vec![a.output.clone()],
        summary: json!({"rows_in": set.n(), "rows_out": out.n(), "per_class": out.class_counts().first()}),
    })
}

fn split(a: &SplitArgs) -> CliResult<Outcome> {
    distinct(&[&a.input], &a.output)?;
    let spec = SplitSpec::new(a.fracs[0], a.fracs[1], a.fracs[2], a.seed)?;
    let set = data::load_embedding_set(&a.input)?;
    let (train, val, test) = data::split(&set, &spec)?;
    for (name, part) in [("train", &train), ("val", &val), ("test", &test)] {
        data::save_embedding_set(part, a.output.join(name))?;
    }
    Ok(Outcome {
        inputs: vec![a.input.clone()],
        outputs: vec![a.output.clone()],
        summary: json!({"train": train.n(), "val": val.n(), "test": test.n()}),
    })
}

fn fit(a: &FitArgs) -> CliResult<Outcome> {
    distinct(&[&a.set.path()], &a.model)?;
    let set = a.set.load()?;
    let cfg = KMeansConfig {
        k: a.k_per_class,
        max_iters: a.max_iters,
        tol: a.tol,
        restarts: a.restarts,
        seed: a.seed,
    };
    let model = cluster::fit_class_centroids(&set, a.k_per_class, &cfg)?;
    model.save(&a.model)?;
    Ok(Outcome {
        inputs: vec![a.set.path()],
        outputs: vec![a.model.clone()],
        summary: json!({"classes": model.num_classes(), "centroids": model.total_centroids()}),
    })
}

fn silhouette(a: &SilhouetteArgs) -> CliResult<Outcome> {
    check_extension(&a.output)?;
    let set = a.set.load()?;
    let labels: Vec<usize> = set.labels().iter().map(|&l| l as usize).collect();
    let rep = cluster::silhouette(&set.to_matrix(), &labels)?;
    report::write_silhouette(&a.output, &rep, set.labels(), set.label_names())?;
    Ok(Outcome {
        inputs: vec![a.set.path()],
        outputs: vec![a.output.clone()],
        summary: json!({"overall": rep.overall, "points": set.n()}),
    })
}

fn exemplars(a: &ExemplarsArgs) -> CliResult<Outcome> {
    check_extension(&a.output)?;
    let set = a.set.load()?;
    let model = CentroidModel::load(&a.model)?;
    let class = class_index(&set, &model, &a.class)?;
    let ex = cluster::exemplars_near_centroids(&set, &model, class, a.top_m)?;
    let name = &model.label_names()[class];
    report::write_exemplars(&a.output, name, &ex)?;
    Ok(Outcome {
        inputs: vec![a.set.path(), a.model.clone()],
        outputs: vec![a.output.clone()],
        summary: json!({
            "class": name,
            "centroids": ex.len(),
            "truncated": ex.iter().filter(|e| e.truncated).count(),
        }),
    })
}

fn classify(a: &ClassifyArgs) -> CliResult<Outcome> {
    check_extension(&a.output)?;
    let set = a.set.load()?;
    let model = CentroidModel::load(&a.model)?;
    let cfg = VotingConfig {
        k_neighbors: a.k_neighbors,
        epsilon: a.epsilon,
    };
    let preds = knnpp::classify_batch(&set, &model, &cfg)?;
    report::write_predictions(&a.output, &preds)?;
    Ok(Outcome {
        inputs: vec![a.set.path(), a.model.clone()],
        outputs: vec![a.output.clone()],
        summary: json!({"queries": preds.len()}),
    })
}

fn evaluate(a: &EvaluateArgs) -> CliResult<Outcome> {
    check_extension(&a.output)?;
    if let Some(c) = &a.confusion {
        check_extension(c)?;
    }
    let preds = report::read_predictions(&a.predictions)?;
    let set = a.set.load()?;
    let acc = eval::accuracy_report(&preds, set.labels(), &a.top_n)?;
    let matrix = eval::confusion_matrix(&preds, set.labels(), set.label_names())?;
    let worst = eval::most_confused(&matrix, a.most_confused)?;
    report::write_accuracy(&a.output, &acc)?;
    let mut outputs = vec![a.output.clone()];
    if let Some(c) = &a.confusion {
        report::write_confusion(c, &matrix)?;
        outputs.push(c.clone());
    }
    let most_confused: Vec<Value> = worst
        .iter()
        .map(|&c| json!({"class": set.label_names()[c], "recall": matrix.recall(c)}))
        .collect();
    Ok(Outcome {
        inputs: vec![a.predictions.clone(), a.set.path()],
        outputs,
        summary: json!({"top_n": acc.top_n, "samples": acc.samples, "most_confused": most_confused}),
    })
}

fn project(a: &ProjectArgs) -> CliResult<Outcome> {
    check_extension(&a.output)?;
    let set = a.set.load()?;
    let proj = match a.method {
        Method::Pca => project::pca2(&set)?,
        Method::Tsne => {
            let cfg = TsneConfig {
                perplexity: a.perplexity,
                iters: a.iters,
                learning_rate: a.learning_rate,
                max_points: a.max_points,
                seed: a.seed,
                ..TsneConfig::default()
            };
            project::tsne2(&set, &cfg)?
        }
    };
    report::write_projection(&a.output, &proj, set.label_names())?;
    let mut summary = json!({
        "points": proj.coords.len(),
        "objective": proj.objective,
        "rank_deficient": proj.rank_deficient,
    });
    if let Some(t) = &proj.tsne {
        summary["initial_kl"] = json!(t.initial_kl);
        summary["subsampled"] = json!(t.subsampled);
        summary["calibration_converged"] = json!(t.calibration_converged);
    }
    Ok(Outcome {
        inputs: vec![a.set.path()],
        outputs: vec![a.output.clone()],
        summary,
    })
}

fn train(a: &TrainArgs) -> CliResult<Outcome> {
    distinct(&[&a.data], &a.checkpoint)?;
    let all = ImageSet::load(&a.data)?;
    let (train_set, val_set) = match &a.val {
        Some(v) => (all, ImageSet::load(v)?),
        None => {
            let spec = SplitSpec {
                seed: a.seed,
                ..SplitSpec::default()
            };
            let [tr, va, _] =
                data::stratified_split_indices(&all.labels, all.label_names.len(), &spec)?;
            (all.select(&tr), all.select(&va))
        }
    };
    if (train_set.channels, train_set.height, train_set.width)
        != (val_set.channels, val_set.height, val_set.width)
        || train_set.label_names != val_set.label_names
    {
        return Err(Failure::Invalid(
            "validation images differ in shape or label names".into(),
        ));
    }
    let config = CnnConfig {
        in_channels: train_set.channels,
        height: train_set.height,
        width: train_set.width,
        base_filters: a.base_filters,
        num_classes: train_set.label_names.len(),
        blocks: a.blocks,
    };
    let model = CnnModel::<f32>::kaiming(config, a.seed)?;
    let (tx, ty) = train_set.to_tensor::<f32>();
    let (vx, vy) = val_set.to_tensor::<f32>();
    let tc = TrainConfig {
        learning_rate: a.lr,
        batch_size: a.batch,
        epochs: a.epochs,
        seed: a.seed,
        optimizer: match a.optimizer {
            Optim::Adam => OptimizerKind::Adam,
            Optim::Sgd => OptimizerKind::Sgd,
        },
        target_train_accuracy: a.target_accuracy,
    };
    let out = tinynn::train(model, &tx, &ty, &vx, &vy, &tc)?;
    out.best.save(&a.checkpoint)?;
    let train_curve = a.checkpoint.join("train_loss.csv");
    let val_curve = a.checkpoint.join("val_loss.csv");
    report::write_series(&train_curve, ["step", "loss"], 1, &out.train_loss)?;
    report::write_series(&val_curve, ["epoch", "val_loss"], 1, &out.val_loss)?;
    let mut inputs = vec![a.data.clone()];
    inputs.extend(a.val.clone());
    Ok(Outcome {
        inputs,
        outputs: vec![a.checkpoint.clone(), train_curve, val_curve],
        summary: json!({
            "epochs_run": out.epochs_run,
            "best_epoch": out.best.epoch,
            "best_val_loss": out.best.val_loss,
            "final_train_accuracy": out.train_accuracy.last(),
        }),
    })
}

fn gradcheck(a: &GradcheckArgs) -> CliResult<Outcome> {
    if let Some(out) = &a.out {
        if check_extension(out)? != OutputFormat::Json {
            return Err(Failure::Invalid(
                "gradient-check report must be .json".into(),
            ));
        }
    }
    let (model, x, labels) = gradcheck::random_problem(gradcheck::tiny_config(), a.batch, a.seed)?;
    let rep = gradcheck::grad_check(&model, &x, &labels, a.step, a.tolerance)?;
    if let Some(out) = &a.out {
        report::write_json(out, &rep)?;
    }
    if !rep.passed {
        return Err(Failure::Invalid(format!(
            "gradient check failed: max relative error {:e} >= {:e}",
            rep.max_rel_error, a.tolerance
        )));
    }
    Ok(Outcome {
        inputs: vec![],
        outputs: a.out.iter().cloned().collect(),
        summary: json!({"passed": rep.passed, "max_rel_error": rep.max_rel_error, "parameters": model.num_parameters()}),
    })
}

fn histogram(a: &HistogramArgs) -> CliResult<Outcome> {
    let format = check_extension(&a.output)?;
    let set = a.set.load()?;
    let h = data::class_histogram(&set, a.bins)?;
    match format {
        OutputFormat::Json => report::write_json(&a.output, &h)?,
        OutputFormat::Csv => {
            let mut text = String::from("bin_lo,bin_hi,classes\n");
            for (b, count) in h.bin_counts.iter().enumerate() {
                text.push_str(&format!(
                    "{},{},{count}\n",
                    report::format_sig9(h.edges[b]),
                    report::format_sig9(h.edges[b + 1])
                ));
            }
            std::fs::write(&a.output, text)
                .map_err(|e| Failure::Io(format!("{}: {e}", a.output.display())))?;
        }
    }
    Ok(Outcome {
        inputs: vec![a.set.path()],
        outputs: vec![a.output.clone()],
        summary: json!({"classes": h.counts.len(), "bin_counts": h.bin_counts}),
    })
}

fn ema(a: &EmaArgs) -> CliResult<Outcome> {
    check_extension(&a.output)?;
    distinct(&[&a.input], &a.output)?;
    let (first, values) = report::read_series(&a.input)?;
    let smooth = eval::ema_smooth(&values, a.alpha)?;
    report::write_series(&a.output, ["step", "value"], first, &smooth)?;
    Ok(Outcome {
        inputs: vec![a.input.clone()],
        outputs: vec![a.output.clone()],
        summary: json!({"points": smooth.len(), "last": smooth.last()}),
    })
}
