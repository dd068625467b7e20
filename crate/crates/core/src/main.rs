use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand};

use linkgraph::dataset::{build_dataset, DatasetBundle, DatasetOptions, NonLinkPolicy, SplitConfig, SplitStrategy, TrainingConfig};
use linkgraph::eval::{curves_csv, EvalMode};
use linkgraph::graph::Slice;
use linkgraph::ingest::{load_repository, Repository};
use linkgraph::model::ModelFile;
use linkgraph::pipeline::{
    evaluate_model, load_taxonomy, load_tokenizer, metrics_file, model_index, run_pipeline, train_model,
    PipelineConfig, StageError,
};
use linkgraph::tables::{emit_tables, repository_report};
use linkgraph::taxonomy::{category_prevalence, type_prevalence, LinkTaxonomy};
use linkgraph::Error;

/// Issue link graph analysis and duplicate detection datasets.
#[derive(Parser)]
#[command(name = "linkgraph", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct TaxonomyArgs {
    /// Taxonomy file; the bundled table when omitted.
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    /// Categorize unknown link types as Relation instead of failing.
    #[arg(long)]
    fallback_relation: bool,
}

impl TaxonomyArgs {
    fn load(&self) -> linkgraph::Result<LinkTaxonomy> {
        load_taxonomy(self.taxonomy.as_deref(), self.fallback_relation)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Load and clean a repository export.
    Ingest {
        path: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Cleaning report path; defaults to `<out>` with a `.report.json` extension.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Link type normalization.
    #[command(subcommand)]
    Taxonomy(TaxonomyCommand),
    /// Structural metrics of one graph slice.
    Metrics {
        repo: PathBuf,
        #[command(flatten)]
        taxonomy: TaxonomyArgs,
        /// all | type:<name> | category:<name>
        #[arg(long, default_value = "all")]
        slice: String,
        /// `.json` or `.csv`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Labeled pair datasets.
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Similarity threshold model.
    #[command(subcommand)]
    Model(ModelCommand),
    /// Evaluate a trained model on a dataset's test sets.
    Eval {
        model: PathBuf,
        dataset: PathBuf,
        #[arg(long, default_value = "both")]
        mode: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        curves: Option<PathBuf>,
        /// Repository export; defaults to the one recorded in the dataset provenance.
        #[arg(long)]
        repo: Option<PathBuf>,
    },
    /// Run every stage from a JSON config.
    Pipeline { config: PathBuf },
    /// Cross-repository CSV and Markdown tables.
    Tables {
        #[arg(required = true)]
        repos: Vec<PathBuf>,
        #[command(flatten)]
        taxonomy: TaxonomyArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum TaxonomyCommand {
    /// Type and category prevalence of a repository.
    Apply {
        repo: PathBuf,
        #[command(flatten)]
        taxonomy: TaxonomyArgs,
        /// `types.csv,categories.csv`
        #[arg(long, value_delimiter = ',', required = true)]
        report: Vec<PathBuf>,
    },
}

#[derive(Subcommand)]
enum DatasetCommand {
    Build {
        repo: PathBuf,
        #[command(flatten)]
        taxonomy: TaxonomyArgs,
        #[arg(long, default_value = "cluster")]
        strategy: String,
        #[arg(long, default_value_t = 0.2)]
        test_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "DvsNL")]
        config: String,
        /// Non-links to synthesize; matched to the largest link class when omitted.
        #[arg(long)]
        nonlinks: Option<usize>,
        /// Keep automatically created links (Clone) in the training set.
        #[arg(long)]
        include_auto_created: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum ModelCommand {
    Train {
        dataset: PathBuf,
        #[arg(long)]
        repo: PathBuf,
        #[arg(long)]
        tokenizer: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_STAGE: u8 = 2;

fn load_clean(path: &Path) -> linkgraph::Result<Repository> {
    Ok(load_repository(path, "")?.clean())
}

fn write(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| anyhow!("creating {}: {e}", parent.display()))?;
    }
    std::fs::write(path, bytes).map_err(|e| anyhow!("writing {}: {e}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write(path, &bytes)
}

fn prevalence_csv<K: std::fmt::Display>(header: &str, rows: impl Iterator<Item = (K, usize, f64)>) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([header, "links", "share"])?;
    for (k, n, share) in rows {
        w.write_record([k.to_string(), n.to_string(), share.to_string()])?;
    }
    Ok(w.into_inner()?)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Ingest { path, out, report } => {
            let repo = load_clean(&path)?;
            write_json(&out, &repo)?;
            let report_path = report.unwrap_or_else(|| out.with_extension("report.json"));
            write_json(&report_path, &repo.cleaning_report)?;
            let s = repo.summarize();
            println!(
                "{}: {} issues, {} links retained ({} removed)",
                s.name,
                s.issues,
                s.links,
                repo.cleaning_report.removed()
            );
        }
        Command::Taxonomy(TaxonomyCommand::Apply { repo, taxonomy, report }) => {
            let taxonomy = taxonomy.load()?;
            let repo = load_clean(&repo)?;
            // surface unknown types before computing shares
            for link in &repo.links {
                taxonomy.classify(&link.raw_type)?;
            }
            let types = type_prevalence(&repo, &taxonomy)?;
            let categories = category_prevalence(&repo, &taxonomy)?;
            let [types_path, categories_path] = <[PathBuf; 2]>::try_from(report)
                .map_err(|_| anyhow!("--report takes two paths: types.csv,categories.csv"))?;
            write(
                &types_path,
                &prevalence_csv(
                    "type",
                    types.counts.iter().map(|(k, n)| (k.clone(), *n, types.shares[k])),
                )?,
            )?;
            write(
                &categories_path,
                &prevalence_csv(
                    "category",
                    categories.counts.iter().map(|(k, n)| (*k, *n, categories.shares[k])),
                )?,
            )?;
        }
        Command::Metrics { repo, taxonomy, slice, out } => {
            let slice: Slice = slice.parse()?;
            let taxonomy = taxonomy.load()?;
            let repo = load_clean(&repo)?;
            let metrics = metrics_file(&repo, &taxonomy, &[slice])?;
            match out.extension().and_then(|e| e.to_str()) {
                Some("csv") => write(&out, &metrics.to_csv()?)?,
                Some("json") => write_json(&out, &metrics)?,
                _ => return Err(Error::Config(format!("{}: expected a .json or .csv path", out.display())).into()),
            }
        }
        Command::Dataset(DatasetCommand::Build {
            repo: repo_path,
            taxonomy,
            strategy,
            test_fraction,
            seed,
            config,
            nonlinks,
            include_auto_created,
            out,
        }) => {
            let strategy: SplitStrategy = strategy.parse()?;
            let training: TrainingConfig = config.parse()?;
            let split = SplitConfig {
                strategy,
                test_fraction,
                seed,
                exclude_auto_created: !include_auto_created,
            };
            split.validate()?;
            let taxonomy = taxonomy.load()?;
            let repo = load_clean(&repo_path)?;
            let mut bundle = build_dataset(
                &repo,
                &taxonomy,
                &DatasetOptions {
                    split,
                    training,
                    nonlinks,
                    nonlink_policy: NonLinkPolicy::default(),
                },
            )?;
            bundle.provenance.repository_path = Some(repo_path.display().to_string());
            bundle.write(&out)?;
            let p = &bundle.provenance;
            println!(
                "{}: train {} (labels {:?}), test new {}, traditional {}, overlap {}",
                p.repository,
                bundle.train.len(),
                p.train_labels,
                bundle.test.new.len(),
                bundle.test.traditional.len(),
                p.split_stats.overlap_issues
            );
        }
        Command::Model(ModelCommand::Train { dataset, repo, tokenizer, out }) => {
            let tokenizer = load_tokenizer(tokenizer.as_deref())?;
            let bundle = DatasetBundle::read(&dataset)?;
            let repo = load_clean(&repo)?;
            let (model, _) = train_model(&bundle, &repo, &tokenizer)?;
            model.write(&out)?;
            println!(
                "theta {:.4}, training F1 {:.4}{}",
                model.theta,
                model.training_f1,
                if model.degenerate { " (degenerate)" } else { "" }
            );
        }
        Command::Eval { model, dataset, mode, out, curves, repo } => {
            let modes = match mode.to_ascii_lowercase().as_str() {
                "both" => vec![EvalMode::Traditional, EvalMode::New],
                other => vec![other.parse::<EvalMode>()?],
            };
            let model = ModelFile::read(&model)?;
            let bundle = DatasetBundle::read(&dataset)?;
            let repo_path = repo
                .or_else(|| bundle.provenance.repository_path.as_ref().map(PathBuf::from))
                .ok_or_else(|| Error::Config("no --repo given and none recorded in the dataset".into()))?;
            let repo = load_clean(&repo_path)?;
            let index = model_index(&model, &repo)?;
            let (output, points) = evaluate_model(&model, &index, &bundle, &modes)?;
            write_json(&out, &output)?;
            if let Some(path) = curves {
                write(&path, &curves_csv(&points)?)?;
            }
            for scored in output.traditional.iter().chain(&output.new) {
                let r = &scored.report;
                println!(
                    "{}: macro F1 {:.4}, accuracy {:.4}{}",
                    r.mode,
                    r.macro_f1,
                    r.accuracy,
                    if r.degenerate { " (degenerate)" } else { "" }
                );
            }
        }
        Command::Pipeline { config } => {
            let cfg = PipelineConfig::load(&config)?;
            let outcome = run_pipeline(&cfg)?;
            println!(
                "{} files listed in {}",
                outcome.manifest.files.len(),
                outcome.manifest_path.display()
            );
            if let Some(failure) = outcome.failure {
                return Err(failure.into());
            }
        }
        Command::Tables { repos, taxonomy, out } => {
            let taxonomy = taxonomy.load()?;
            let reports = repos
                .iter()
                .map(|p| repository_report(&load_clean(p)?, &taxonomy))
                .collect::<linkgraph::Result<Vec<_>>>()?;
            for path in emit_tables(&reports)?.write(&out)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<StageError>().is_some() {
        return EXIT_STAGE;
    }
    match err.downcast_ref::<Error>() {
        Some(
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::Integrity(_)
            | Error::UnknownType(_)
            | Error::Config(_)
            | Error::InvalidSlice(_)
            | Error::Json(_)
            | Error::Csv(_),
        ) => EXIT_VALIDATION,
        Some(_) => EXIT_STAGE,
        None => EXIT_VALIDATION,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
