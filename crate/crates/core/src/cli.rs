//! The `rsgkit` command line front end.
//!
//! Every subcommand reads a corpus CSV (or a generator plan), runs one stage
//! of the pipeline and writes its report under `--out-dir` with a fixed file
//! name. Exit status is 0 on success, 1 when the data or the analysis fails,
//! and 2 for usage errors.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bayes::{build_nomogram, nb_fit, render_nomogram, RenderFormat, DEFAULT_SMOOTHING};
use crate::corpus::{one_hot_encode, parse_corpus, summary_tsv, Corpus, ParseOptions, DEFAULT_MISSING_TOKEN};
use crate::error::Result;
use crate::eval::{
    classification_tsv, classify_unlabeled, cross_validate, outlier_report, outliers_tsv,
    per_object_error, Learner, DEFAULT_HOLDOUT_FRACTION, DEFAULT_OUTLIER_THRESHOLD, DEFAULT_TRIALS,
};
use crate::infotheo::rank_features;
use crate::svm::{train_multiclass, DEFAULT_C, DEFAULT_TOL};
use crate::synthgen::{default_plan, generate, write_corpus_csv, GeneratorPlan};

/// Console progress lines; a closed stdout is not an error.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "rsgkit", version, about = "Classification and feature analysis for sparse categorical corpora")]
struct Cli {
    /// Directory that receives every report.
    #[arg(long, global = true, env = "RSGKIT_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-feature defined counts and vocabulary sizes (summary.tsv).
    Summary(InputArgs),
    /// Features ranked by normalized mutual information with a target (ranking.tsv).
    Rank {
        #[command(flatten)]
        input: InputArgs,
        /// Target column; defaults to the label column.
        #[arg(long)]
        target: Option<String>,
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
        n_perm: u64,
        #[arg(long)]
        seed: u64,
        /// Comma-separated subset of features to rank.
        #[arg(long, value_delimiter = ',')]
        features: Vec<String>,
    },
    /// Repeated stratified k-fold cross-validation (cv_report.tsv).
    Cv {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        learner: LearnerArgs,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(2..))]
        k: u64,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        repeats: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Per-object misclassification rates and outliers (per_object_rates.tsv, outliers.tsv).
    Outliers {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        learner: LearnerArgs,
        #[arg(long, default_value_t = DEFAULT_TRIALS as u64, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        /// Fraction of each class held out per trial, in (0, 1).
        #[arg(long, default_value_t = DEFAULT_HOLDOUT_FRACTION, value_parser = open_unit)]
        holdout: f64,
        /// Minimum rate reported as an outlier, in [0, 1].
        #[arg(long, default_value_t = DEFAULT_OUTLIER_THRESHOLD, value_parser = closed_unit)]
        threshold: f64,
        #[arg(long)]
        seed: u64,
    },
    /// Predicts the unlabeled objects (classification.tsv; svm_model.json for the SVM).
    Classify {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        learner: LearnerArgs,
    },
    /// Naive Bayes nomogram for one class (nomogram.txt or nomogram.svg).
    Nomogram {
        #[command(flatten)]
        input: InputArgs,
        /// Class the nomogram scores.
        #[arg(long)]
        target: String,
        /// Comma-separated subset of features to draw.
        #[arg(long, value_delimiter = ',')]
        features: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_SMOOTHING, value_parser = positive)]
        smoothing: f64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Synthetic corpus with ground truth (synth_corpus.csv, synth_truth.tsv, synth_features.tsv).
    Synth {
        /// TOML generator plan; the built-in default plan when absent.
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Overrides the plan's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the plan's number of planted outliers.
        #[arg(long)]
        planted_outliers: Option<usize>,
    },
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Corpus CSV: id first, one column per feature, plus the label column.
    #[arg(long)]
    input: PathBuf,
    /// Name of the label column.
    #[arg(long, default_value = "RSG")]
    label: String,
    #[arg(long, default_value = DEFAULT_MISSING_TOKEN)]
    missing_token: String,
}

#[derive(Debug, Args)]
struct LearnerArgs {
    #[arg(long, value_enum, default_value_t = LearnerKind::Svm)]
    learner: LearnerKind,
    /// SVM box constraint.
    #[arg(long = "c", default_value_t = DEFAULT_C, value_parser = positive)]
    c: f64,
    /// SVM KKT tolerance.
    #[arg(long, default_value_t = DEFAULT_TOL, value_parser = positive)]
    tol: f64,
    /// Naive Bayes additive smoothing.
    #[arg(long, default_value_t = DEFAULT_SMOOTHING, value_parser = positive)]
    smoothing: f64,
}

impl LearnerArgs {
    fn learner(&self) -> Learner {
        match self.learner {
            LearnerKind::Svm => Learner::Svm {
                c: self.c,
                tol: self.tol,
            },
            LearnerKind::Nb => Learner::NaiveBayes {
                smoothing: self.smoothing,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LearnerKind {
    Svm,
    Nb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Svg,
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>().map_err(|e| e.to_string())
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    let x = parse_f64(s)?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{s} is not a positive number"))
    }
}

fn open_unit(s: &str) -> std::result::Result<f64, String> {
    let x = parse_f64(s)?;
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(format!("{s} is not in (0, 1)"))
    }
}

fn closed_unit(s: &str) -> std::result::Result<f64, String> {
    let x = parse_f64(s)?;
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(format!("{s} is not in [0, 1]"))
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

fn load(input: &InputArgs) -> Result<Corpus> {
    let file = File::open(&input.input)?;
    let mut options = ParseOptions::new(input.label.clone());
    options.missing_token = input.missing_token.clone();
    parse_corpus(file, &options)
}

fn subset(corpus: Corpus, features: &[String], keep: Option<&str>) -> Result<Corpus> {
    if features.is_empty() {
        return Ok(corpus);
    }
    let mut names: Vec<&str> = features.iter().map(String::as_str).collect();
    // A feature used as the ranking target has to survive the selection.
    if let Some(t) = keep {
        if corpus.feature_index(t).is_some() && !names.contains(&t) {
            names.push(t);
        }
    }
    corpus.select_features(&names)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

fn execute(cli: Cli) -> Result<()> {
    let dir = cli.out_dir;
    fs::create_dir_all(&dir)?;
    match cli.command {
        Command::Summary(input) => {
            let corpus = load(&input)?;
            let path = write(&dir, "summary.tsv", &summary_tsv(&corpus.feature_summary()))?;
            say!("{} objects, {} features -> {}", corpus.len(), corpus.schema().len(), path.display());
        }
        Command::Rank {
            input,
            target,
            n_perm,
            seed,
            features,
        } => {
            let target = target.unwrap_or_else(|| input.label.clone());
            let corpus = subset(load(&input)?, &features, Some(&target))?;
            let ranking = rank_features(&corpus, &target, n_perm as usize, seed)?;
            let path = write(&dir, "ranking.tsv", &ranking.to_tsv())?;
            say!(
                "{} significant, {} retained -> {}",
                ranking.significant().count(),
                ranking.retained().count(),
                path.display()
            );
        }
        Command::Cv {
            input,
            learner,
            k,
            repeats,
            seed,
        } => {
            let corpus = load(&input)?;
            let report = cross_validate(&corpus, learner.learner(), k as usize, repeats as usize, seed)?;
            let path = write(&dir, "cv_report.tsv", &report.to_tsv())?;
            say!("mean_accuracy\t{:.6}", report.mean_accuracy);
            say!("test_loss\t{:.6}", report.test_loss);
            say!("-> {}", path.display());
        }
        Command::Outliers {
            input,
            learner,
            trials,
            holdout,
            threshold,
            seed,
        } => {
            let corpus = load(&input)?;
            let rates = per_object_error(&corpus, learner.learner(), trials as usize, holdout, seed)?;
            let outliers = outlier_report(&rates, threshold)?;
            write(&dir, "per_object_rates.tsv", &rates.to_tsv())?;
            let path = write(&dir, "outliers.tsv", &outliers_tsv(&outliers))?;
            for o in &outliers {
                say!("{o}");
            }
            say!("{} outliers -> {}", outliers.len(), path.display());
        }
        Command::Classify { input, learner } => {
            let corpus = load(&input)?;
            let learner = learner.learner();
            let predictions = classify_unlabeled(&corpus, learner)?;
            let path = write(
                &dir,
                "classification.tsv",
                &classification_tsv(corpus.label_set(), &predictions),
            )?;
            if let Learner::Svm { c, tol } = learner {
                let model = train_multiclass(&one_hot_encode(&corpus), c, tol)?;
                model.save(BufWriter::new(File::create(dir.join("svm_model.json"))?))?;
            }
            for p in &predictions {
                say!("{}\t{}", p.id, p.predicted);
            }
            say!("{} unlabeled objects -> {}", predictions.len(), path.display());
        }
        Command::Nomogram {
            input,
            target,
            features,
            smoothing,
            format,
        } => {
            let corpus = subset(load(&input)?, &features, None)?;
            let model = nb_fit(&corpus, smoothing)?;
            let nomogram = build_nomogram(&model, &target)?;
            let (name, format) = match format {
                Format::Text => ("nomogram.txt", RenderFormat::Text),
                Format::Svg => ("nomogram.svg", RenderFormat::Svg),
            };
            let path = write(&dir, name, &render_nomogram(&nomogram, format))?;
            say!("-> {}", path.display());
        }
        Command::Synth {
            plan,
            seed,
            planted_outliers,
        } => {
            let mut plan = match plan {
                Some(path) => GeneratorPlan::from_toml(&fs::read_to_string(path)?)?,
                None => default_plan(),
            };
            if let Some(seed) = seed {
                plan.seed = seed;
            }
            if let Some(n) = planted_outliers {
                plan.planted_outliers = n;
            }
            let generated = generate(&plan)?;
            let path = dir.join("synth_corpus.csv");
            write_corpus_csv(&generated, BufWriter::new(File::create(&path)?))?;
            write(&dir, "synth_truth.tsv", &generated.truth.to_tsv())?;
            write(&dir, "synth_features.tsv", &generated.truth.features_tsv())?;
            say!("{} objects -> {}", generated.corpus.len(), path.display());
        }
    }
    Ok(())
}

