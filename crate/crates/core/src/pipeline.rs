//! End-to-end orchestration: ingest, metrics, datasets, models and
//! evaluation for every configured repository, followed by the
//! cross-repository tables and a hashed artifact manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{build_dataset, DatasetBundle, DatasetOptions, NonLinkPolicy, SplitConfig, TrainingConfig};
use crate::eval::{
    curves_csv, evaluate, ol_confusion_by_category, ol_confusion_rate, robustness_delta, sweep,
    threshold_predictions, EvalMode, EvalOutput, ScoredSet, SweepGrid, SweepPoint,
};
use crate::graph::{build_graph, metrics_report, GraphMetricsReport, Slice};
use crate::ingest::{load_repository, Repository};
use crate::model::{corpus_from_repo, corpus_hash, fit_tfidf, train_threshold, ModelFile, TfIdfIndex, TokenizerConfig};
use crate::tables::{emit_tables, repository_report, RepositoryReport};
use crate::taxonomy::{LinkCategory, LinkTaxonomy, UnknownPolicy};
use crate::{io, Error, Result};

pub const SEED_ENV: &str = "LINKGRAPH_SEED";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Basis of `pct_isolated` in every metrics artifact.
pub const ISOLATED_BASIS: &str = "per slice: all repository issues, slice edges only";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub repositories: Vec<PathBuf>,
    /// Bundled taxonomy when absent.
    #[serde(default)]
    pub taxonomy: Option<PathBuf>,
    /// Default tokenizer when absent.
    #[serde(default)]
    pub tokenizer: Option<PathBuf>,
    /// Map unknown link types to Relation instead of failing.
    #[serde(default)]
    pub fallback_relation: bool,
    /// The split seed is always replaced by `seed`.
    pub split: SplitConfig,
    pub training_configs: Vec<TrainingConfig>,
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub nonlinks: Option<usize>,
    #[serde(default)]
    pub nonlink_policy: NonLinkPolicy,
}

impl PipelineConfig {
    /// Reads a config file. Relative paths resolve against the file's
    /// directory; `LINKGRAPH_SEED` overrides the seed.
    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = io::read_string(path)?;
        let mut cfg: PipelineConfig = serde_json::from_str(&text).map_err(|e| Error::Config(format!(
            "{}: {e}",
            path.display()
        )))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        if let Ok(value) = std::env::var(SEED_ENV) {
            cfg.seed = value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}={value:?} is not an unsigned integer")))?;
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.repositories.iter_mut().for_each(fix);
        self.taxonomy.iter_mut().for_each(fix);
        self.tokenizer.iter_mut().for_each(fix);
        fix(&mut self.output_dir);
    }

    /// Checks everything that can be checked before any work starts.
    pub fn validate(&self) -> Result<()> {
        if self.repositories.is_empty() {
            return Err(Error::Config("no repositories configured".into()));
        }
        if self.training_configs.is_empty() {
            return Err(Error::Config("no training configurations".into()));
        }
        for p in self
            .repositories
            .iter()
            .chain(&self.taxonomy)
            .chain(&self.tokenizer)
        {
            if !p.is_file() {
                return Err(Error::Config(format!("{} does not exist", p.display())));
            }
        }
        let stems: BTreeSet<&std::ffi::OsStr> =
            self.repositories.iter().filter_map(|p| p.file_stem()).collect();
        if stems.len() != self.repositories.len() {
            return Err(Error::Config("repository file names must be distinct".into()));
        }
        let mut split = self.split;
        split.seed = self.seed;
        split.validate()
    }

    fn split_config(&self) -> SplitConfig {
        SplitConfig { seed: self.seed, ..self.split }
    }
}

pub fn load_taxonomy(path: Option<&Path>, fallback_relation: bool) -> Result<LinkTaxonomy> {
    let taxonomy = match path {
        Some(p) => LinkTaxonomy::load(p)?,
        None => LinkTaxonomy::bundled(),
    };
    Ok(if fallback_relation {
        taxonomy.with_unknown_policy(UnknownPolicy::AssignToRelation)
    } else {
        taxonomy
    })
}

pub fn load_tokenizer(path: Option<&Path>) -> Result<TokenizerConfig> {
    match path {
        Some(p) => serde_json::from_str(&io::read_string(p)?)
            .map_err(|e| Error::Config(format!("{}: {e}", p.display()))),
        None => Ok(TokenizerConfig::default()),
    }
}

/// Metrics of one repository for a set of slices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    pub repository: String,
    pub isolated_basis: String,
    pub slices: BTreeMap<String, GraphMetricsReport>,
}

pub fn metrics_file(repo: &Repository, taxonomy: &LinkTaxonomy, slices: &[Slice]) -> Result<MetricsFile> {
    let mut out = BTreeMap::new();
    for s in slices {
        out.insert(s.to_string(), metrics_report(&build_graph(repo, taxonomy, s)?));
    }
    Ok(MetricsFile {
        repository: repo.name.clone(),
        isolated_basis: ISOLATED_BASIS.to_string(),
        slices: out,
    })
}

impl MetricsFile {
    /// One row per slice, columns as in [`GraphMetricsReport::COLUMNS`].
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["Slice"];
        header.extend(GraphMetricsReport::COLUMNS);
        w.write_record(&header)?;
        for (slice, report) in &self.slices {
            let mut row = vec![slice.clone()];
            row.extend(
                report
                    .values()
                    .iter()
                    .map(|v| v.map(|x| x.to_string()).unwrap_or_default()),
            );
            w.write_record(&row)?;
        }
        w.into_inner()
            .map_err(|e| Error::Csv(csv::Error::from(e.into_error())))
    }
}

/// Fits the TF-IDF index on the repository texts and the threshold on the
/// training pairs of `bundle`.
pub fn train_model(
    bundle: &DatasetBundle,
    repo: &Repository,
    tokenizer: &TokenizerConfig,
) -> Result<(ModelFile, TfIdfIndex)> {
    let corpus = corpus_from_repo(repo);
    let index = fit_tfidf(&corpus, tokenizer)?;
    let fit = train_threshold(&bundle.train, &index)?;
    let model = ModelFile {
        theta: fit.classifier.theta(),
        training_f1: fit.training_f1,
        degenerate: fit.degenerate,
        training_config: bundle.provenance.training,
        seed: bundle.provenance.split.seed,
        tokenizer: tokenizer.clone(),
        repository: repo.name.clone(),
        documents: corpus.len(),
        corpus_hash: corpus_hash(&corpus),
    };
    Ok((model, index))
}

/// Rebuilds the index of `model` from `repo`, refusing a different corpus.
pub fn model_index(model: &ModelFile, repo: &Repository) -> Result<TfIdfIndex> {
    let corpus = corpus_from_repo(repo);
    let hash = corpus_hash(&corpus);
    if hash != model.corpus_hash {
        return Err(Error::Integrity(format!(
            "repository {:?} does not match the corpus the model was trained on",
            repo.name
        )));
    }
    fit_tfidf(&corpus, &model.tokenizer)
}

pub fn default_theta_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

pub fn default_k_grid() -> Vec<usize> {
    vec![1, 2, 3, 5, 10, 20]
}

/// Scores `model` on the requested test sets and sweeps the default theta
/// and k grids for the curve table.
pub fn evaluate_model(
    model: &ModelFile,
    index: &TfIdfIndex,
    bundle: &DatasetBundle,
    modes: &[EvalMode],
) -> Result<(EvalOutput, Vec<SweepPoint>)> {
    let classifier = model.classifier()?;
    let tc = model.training_config;
    let mut scored: BTreeMap<EvalMode, ScoredSet> = BTreeMap::new();
    let mut curves = Vec::new();
    for &mode in modes {
        let set = match mode {
            EvalMode::Traditional => &bundle.test.traditional,
            EvalMode::New => &bundle.test.new,
        };
        let preds = threshold_predictions(index, set, classifier.theta())?;
        let (report, confusion) = evaluate(&preds, set, tc, mode)?;
        scored.insert(mode, ScoredSet { report, confusion });
        curves.extend(sweep(index, set, tc, mode, &SweepGrid::Theta(default_theta_grid()))?);
        curves.extend(sweep(index, set, tc, mode, &SweepGrid::K(default_k_grid()))?);
    }
    let traditional = scored.remove(&EvalMode::Traditional);
    let new = scored.remove(&EvalMode::New);
    let delta = match (&traditional, &new) {
        (Some(t), Some(n)) => Some(robustness_delta(&t.report, &n.report)?),
        _ => None,
    };
    let ol_confusion_rate = new.as_ref().and_then(|n| ol_confusion_rate(&n.confusion).ok());
    let ol_confusion_by_category = new
        .as_ref()
        .map(|n| ol_confusion_by_category(&n.confusion))
        .unwrap_or_default();
    Ok((
        EvalOutput {
            theta: classifier.theta(),
            seed: model.seed,
            traditional,
            new,
            delta,
            ol_confusion_rate,
            ol_confusion_by_category,
        },
        curves,
    ))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_stage: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub files: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn read(output_dir: &Path) -> Result<Manifest> {
        Ok(serde_json::from_str(&io::read_string(&output_dir.join(MANIFEST_FILE))?)?)
    }

    /// Re-hashes every listed file.
    pub fn verify(&self, output_dir: &Path) -> Result<()> {
        for entry in &self.files {
            let path = output_dir.join(&entry.path);
            let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
            if io::sha256_hex(&bytes) != entry.sha256 {
                return Err(Error::Integrity(format!("{} changed since it was written", entry.path)));
            }
        }
        Ok(())
    }
}

/// A failed pipeline stage.
#[derive(Debug)]
pub struct StageError {
    pub stage: String,
    pub error: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage {}: {}", self.stage, self.error)
    }
}

impl std::error::Error for StageError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

pub struct PipelineOutcome {
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
    pub failure: Option<StageError>,
}

/// Files written by one unit of work, and the first error it hit.
#[derive(Default)]
struct Written {
    files: Vec<PathBuf>,
}

impl Written {
    fn stage<T>(&mut self, stage: &str, f: impl FnOnce(&mut Vec<PathBuf>) -> Result<T>) -> std::result::Result<T, StageError> {
        f(&mut self.files).map_err(|error| StageError {
            stage: stage.to_string(),
            error,
        })
    }
}

fn slug(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn run_repository(
    cfg: &PipelineConfig,
    path: &Path,
    taxonomy: &LinkTaxonomy,
    tokenizer: &TokenizerConfig,
    w: &mut Written,
) -> std::result::Result<RepositoryReport, StageError> {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let dir = cfg.output_dir.join(slug(&stem));
    let label = |stage: &str| format!("{stage} [{stem}]");

    let repo = w.stage(&label("ingest"), |files| {
        let repo = load_repository(path, &stem)?.clean();
        let out = dir.join("cleaned.json");
        io::write_json(&out, &repo)?;
        files.push(out);
        Ok(repo)
    })?;

    let report = w.stage(&label("metrics"), |files| {
        let mut slices = vec![Slice::All];
        slices.extend(LinkCategory::ALL.map(Slice::Category));
        let out = dir.join("metrics.json");
        io::write_json(&out, &metrics_file(&repo, taxonomy, &slices)?)?;
        files.push(out);
        let report = repository_report(&repo, taxonomy)?;
        let out = dir.join("report.json");
        io::write_json(&out, &report)?;
        files.push(out);
        Ok(report)
    })?;

    for &tc in &cfg.training_configs {
        let name = tc.name();
        let bundle = w.stage(&label(&format!("dataset {name}")), |files| {
            let mut bundle = build_dataset(
                &repo,
                taxonomy,
                &DatasetOptions {
                    split: cfg.split_config(),
                    training: tc,
                    nonlinks: cfg.nonlinks,
                    nonlink_policy: cfg.nonlink_policy.clone(),
                },
            )?;
            bundle.provenance.repository_path = Some(path.display().to_string());
            files.extend(bundle.write(&dir.join("datasets").join(name))?);
            Ok(bundle)
        })?;
        let (model, index) = w.stage(&label(&format!("model {name}")), |files| {
            let (model, index) = train_model(&bundle, &repo, tokenizer)?;
            let out = dir.join("models").join(format!("{name}.json"));
            model.write(&out)?;
            files.push(out);
            Ok((model, index))
        })?;
        w.stage(&label(&format!("eval {name}")), |files| {
            let (output, curves) =
                evaluate_model(&model, &index, &bundle, &[EvalMode::Traditional, EvalMode::New])?;
            let eval_dir = dir.join("eval").join(name);
            let out = eval_dir.join("report.json");
            io::write_json(&out, &output)?;
            files.push(out);
            let out = eval_dir.join("curves.csv");
            io::write_bytes(&out, &curves_csv(&curves)?)?;
            files.push(out);
            Ok(())
        })?;
    }
    Ok(report)
}

fn manifest_entries(output_dir: &Path, files: &[PathBuf]) -> Result<Vec<ManifestEntry>> {
    let mut entries = Vec::with_capacity(files.len());
    for f in files {
        let bytes = std::fs::read(f).map_err(|e| Error::io(f, e))?;
        let rel = f.strip_prefix(output_dir).unwrap_or(f);
        let path = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        entries.push(ManifestEntry {
            path,
            sha256: io::sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        });
    }
    Ok(entries)
}

/// Runs every stage. Configuration problems are returned as `Err` before
/// anything is written; stage failures come back in
/// [`PipelineOutcome::failure`] together with the partial manifest.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutcome> {
    cfg.validate()?;
    let taxonomy = load_taxonomy(cfg.taxonomy.as_deref(), cfg.fallback_relation)?;
    let tokenizer = load_tokenizer(cfg.tokenizer.as_deref())?;

    let results: Vec<(Written, std::result::Result<RepositoryReport, StageError>)> = cfg
        .repositories
        .par_iter()
        .map(|path| {
            let mut w = Written::default();
            let r = run_repository(cfg, path, &taxonomy, &tokenizer, &mut w);
            (w, r)
        })
        .collect();

    let mut files = Vec::new();
    let mut reports = Vec::new();
    let mut failure = None;
    for (w, r) in results {
        files.extend(w.files);
        match r {
            Ok(report) => reports.push(report),
            Err(e) => {
                if failure.is_none() {
                    failure = Some(e);
                }
            }
        }
    }

    if failure.is_none() {
        let mut w = Written::default();
        let r = w.stage("tables", |files| {
            let tables = emit_tables(&reports)?;
            files.extend(tables.write(&cfg.output_dir.join("tables"))?);
            Ok(())
        });
        files.extend(w.files);
        failure = r.err();
    }

    let manifest = Manifest {
        seed: cfg.seed,
        complete: failure.is_none(),
        failed_stage: failure.as_ref().map(|f| f.stage.clone()),
        error: failure.as_ref().map(|f| f.error.to_string()),
        files: manifest_entries(&cfg.output_dir, &files)?,
    };
    let manifest_path = cfg.output_dir.join(MANIFEST_FILE);
    io::write_json(&manifest_path, &manifest)?;
    Ok(PipelineOutcome {
        manifest,
        manifest_path,
        failure,
    })
}
