//! Labeled pair datasets for duplicate detection.
//!
//! Every retained link becomes a [`LabeledPair`] of class `Dup` (canonical
//! type "Duplicate") or `OtherLink`; `NonLink` pairs are synthesized from
//! closed issues not resolved as duplicates. Pairs are split into train/test
//! pools either randomly or by whole connected components (cluster split),
//! and then balanced into a binary training set and the three-class "new"
//! and two-class "traditional" test sets. All randomness is drawn from a
//! ChaCha8 stream seeded from the configured seed.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{build_graph, IssueGraph, Slice};
use crate::ingest::{ordered_pair, Repository};
use crate::taxonomy::{LinkCategory, LinkTaxonomy};
use crate::{io, Error, Result};

pub const DUPLICATE_TYPE: &str = "Duplicate";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PairClass {
    Dup,
    OtherLink,
    NonLink,
}

impl PairClass {
    pub const ALL: [PairClass; 3] = [PairClass::Dup, PairClass::OtherLink, PairClass::NonLink];

    pub fn name(self) -> &'static str {
        match self {
            PairClass::Dup => "Dup",
            PairClass::OtherLink => "OtherLink",
            PairClass::NonLink => "NonLink",
        }
    }
}

impl fmt::Display for PairClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An unordered issue pair with its class; `a < b` always holds.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledPair {
    pub a: String,
    pub b: String,
    #[serde(rename = "class")]
    pub klass: PairClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub canonical_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<LinkCategory>,
}

impl LabeledPair {
    pub fn link(a: &str, b: &str, canonical_type: String, category: LinkCategory) -> LabeledPair {
        let (a, b) = ordered_pair(a, b);
        let klass = if canonical_type == DUPLICATE_TYPE {
            PairClass::Dup
        } else {
            PairClass::OtherLink
        };
        LabeledPair {
            a: a.to_string(),
            b: b.to_string(),
            klass,
            canonical_type: Some(canonical_type),
            category: Some(category),
        }
    }

    pub fn non_link(a: &str, b: &str) -> LabeledPair {
        let (a, b) = ordered_pair(a, b);
        LabeledPair {
            a: a.to_string(),
            b: b.to_string(),
            klass: PairClass::NonLink,
            canonical_type: None,
            category: None,
        }
    }

    pub fn key(&self) -> (&str, &str) {
        (&self.a, &self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitStrategy {
    Random,
    Cluster,
}

impl FromStr for SplitStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(SplitStrategy::Random),
            "cluster" => Ok(SplitStrategy::Cluster),
            _ => Err(Error::Config(format!("unknown split strategy {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub strategy: SplitStrategy,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub exclude_auto_created: bool,
}

fn default_test_fraction() -> f64 {
    0.2
}

fn default_true() -> bool {
    true
}

impl SplitConfig {
    pub fn new(strategy: SplitStrategy, seed: u64) -> SplitConfig {
        SplitConfig {
            strategy,
            test_fraction: default_test_fraction(),
            seed,
            exclude_auto_created: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test_fraction must lie strictly between 0 and 1, got {}",
                self.test_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TrainingConfig {
    DvsNL,
    DvsOLNL,
    DOLvsNL,
}

impl TrainingConfig {
    pub const ALL: [TrainingConfig; 3] = [
        TrainingConfig::DvsNL,
        TrainingConfig::DvsOLNL,
        TrainingConfig::DOLvsNL,
    ];

    /// Training label of a class; `None` means the class is left out.
    pub fn training_label(self, klass: PairClass) -> Option<u8> {
        match (self, klass) {
            (TrainingConfig::DvsNL, PairClass::OtherLink) => None,
            _ => Some(self.truth(klass)),
        }
    }

    /// Binary ground truth of a class when scoring.
    pub fn truth(self, klass: PairClass) -> u8 {
        match (self, klass) {
            (_, PairClass::Dup) => 1,
            (_, PairClass::NonLink) => 0,
            (TrainingConfig::DOLvsNL, PairClass::OtherLink) => 1,
            (_, PairClass::OtherLink) => 0,
        }
    }

    fn required_classes(self) -> &'static [PairClass] {
        match self {
            TrainingConfig::DvsNL => &[PairClass::Dup, PairClass::NonLink],
            _ => &PairClass::ALL,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TrainingConfig::DvsNL => "DvsNL",
            TrainingConfig::DvsOLNL => "DvsOLNL",
            TrainingConfig::DOLvsNL => "DOLvsNL",
        }
    }
}

impl fmt::Display for TrainingConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TrainingConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TrainingConfig::ALL
            .into_iter()
            .find(|tc| tc.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown training config {s:?}")))
    }
}

/// Which issues may take part in synthesized non-links.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonLinkPolicy {
    /// Case-insensitive status names that count as closed.
    pub closed_statuses: BTreeSet<String>,
}

impl Default for NonLinkPolicy {
    fn default() -> Self {
        NonLinkPolicy {
            closed_statuses: ["closed", "done", "resolved"].map(String::from).into(),
        }
    }
}

impl NonLinkPolicy {
    pub fn eligible<'a>(&self, repo: &'a Repository) -> Vec<&'a str> {
        let closed: BTreeSet<String> = self.closed_statuses.iter().map(|s| s.to_lowercase()).collect();
        repo.issues
            .values()
            .filter(|i| closed.contains(&i.status.trim().to_lowercase()))
            .filter(|i| {
                !i.resolution
                    .as_deref()
                    .is_some_and(|r| r.trim().eq_ignore_ascii_case(DUPLICATE_TYPE))
            })
            .map(|i| i.key.as_str())
            .collect()
    }
}

pub(crate) fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Link pairs of a cleaned repository, classified through the taxonomy.
pub fn link_pairs(repo: &Repository, taxonomy: &LinkTaxonomy) -> Result<Vec<LabeledPair>> {
    repo.links
        .iter()
        .map(|l| {
            let (canonical, category) = taxonomy.classify(&l.raw_type)?;
            Ok(LabeledPair::link(&l.source, &l.target, canonical, category))
        })
        .collect()
}

/// Draws `n` distinct unordered pairs from `eligible` that are not in
/// `forbidden`. Sparse requests use rejection sampling; when `n` is a large
/// share of what is available all allowed pairs are enumerated and shuffled.
fn sample_pairs(
    eligible: &[&str],
    forbidden: &HashSet<(String, String)>,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(String, String)>> {
    let e = eligible.len();
    let eligible_set: HashSet<&str> = eligible.iter().copied().collect();
    let blocked = forbidden
        .iter()
        .filter(|(a, b)| a != b && eligible_set.contains(a.as_str()) && eligible_set.contains(b.as_str()))
        .count();
    let available = e * e.saturating_sub(1) / 2 - blocked;
    if n > available {
        return Err(Error::Exhausted {
            requested: n,
            available,
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }

    let allowed = |a: &str, b: &str| {
        let (a, b) = ordered_pair(a, b);
        !forbidden.contains(&(a.to_string(), b.to_string()))
    };

    if 3 * n >= available {
        let mut all = Vec::with_capacity(available);
        for i in 0..e {
            for j in i + 1..e {
                if allowed(eligible[i], eligible[j]) {
                    let (a, b) = ordered_pair(eligible[i], eligible[j]);
                    all.push((a.to_string(), b.to_string()));
                }
            }
        }
        all.shuffle(rng);
        all.truncate(n);
        return Ok(all);
    }

    let mut seen: HashSet<(String, String)> = HashSet::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let i = rng.gen_range(0..e);
        let j = rng.gen_range(0..e);
        if i == j || !allowed(eligible[i], eligible[j]) {
            continue;
        }
        let (a, b) = ordered_pair(eligible[i], eligible[j]);
        let pair = (a.to_string(), b.to_string());
        if seen.insert(pair.clone()) {
            out.push(pair);
        }
    }
    Ok(out)
}

fn linked_set(repo: &Repository) -> HashSet<(String, String)> {
    repo.linked_pairs()
        .into_iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect()
}

/// `n` non-link pairs among eligible issues, none of them a retained link.
pub fn synthesize_nonlinks(
    repo: &Repository,
    n: usize,
    seed: u64,
    policy: &NonLinkPolicy,
) -> Result<Vec<LabeledPair>> {
    let eligible = policy.eligible(repo);
    let forbidden = linked_set(repo);
    let pairs = sample_pairs(&eligible, &forbidden, n, &mut rng(seed, 1))?;
    Ok(pairs
        .iter()
        .map(|(a, b)| LabeledPair::non_link(a, b))
        .collect())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitStats {
    /// Test share of the linked (Dup + OtherLink) pairs.
    pub linked_test_fraction: Option<f64>,
    /// Issue keys present in both pools.
    pub overlap_issues: usize,
    pub train_components: usize,
    pub test_components: usize,
    pub discarded_nonlinks: usize,
    pub resynthesized_nonlinks: usize,
    /// Non-links that could not be resynthesized inside their pool.
    pub nonlink_shortfall: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<LabeledPair>,
    pub test: Vec<LabeledPair>,
    pub stats: SplitStats,
}

fn issue_overlap(train: &[LabeledPair], test: &[LabeledPair]) -> usize {
    let keys = |pairs: &[LabeledPair]| -> BTreeSet<String> {
        pairs
            .iter()
            .flat_map(|p| [p.a.clone(), p.b.clone()])
            .collect()
    };
    keys(train).intersection(&keys(test)).count()
}

fn linked_fraction(train: &[LabeledPair], test: &[LabeledPair]) -> Option<f64> {
    let linked = |ps: &[LabeledPair]| ps.iter().filter(|p| p.klass != PairClass::NonLink).count();
    let (tr, te) = (linked(train), linked(test));
    (tr + te > 0).then(|| te as f64 / (tr + te) as f64)
}

/// Shuffles and cuts at `test_fraction`; issues may appear on both sides.
pub fn split_random(pairs: &[LabeledPair], cfg: &SplitConfig) -> Result<Split> {
    cfg.validate()?;
    let mut shuffled = pairs.to_vec();
    shuffled.shuffle(&mut rng(cfg.seed, 2));
    let n_test = (pairs.len() as f64 * cfg.test_fraction).round() as usize;
    let train = shuffled.split_off(n_test);
    let test = shuffled;
    Ok(Split {
        stats: SplitStats {
            linked_test_fraction: linked_fraction(&train, &test),
            overlap_issues: issue_overlap(&train, &test),
            ..SplitStats::default()
        },
        train,
        test,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pool {
    Train,
    Test,
}

/// Assigns whole connected components of `g` to train or test.
///
/// Components carrying linked pairs are shuffled and moved to test until the
/// test share of linked pairs is within ±5% (relative) of `test_fraction`,
/// preferring components that keep the Dup and OtherLink test counts at or
/// below their own `test_fraction` shares.
/// Components without linked pairs are distributed by issue count. Non-links
/// spanning both pools are discarded and replaced by pairs drawn inside the
/// pool, so the two pools never share an issue. `g` must contain every link
/// of the repository.
pub fn split_cluster(
    pairs: &[LabeledPair],
    g: &IssueGraph,
    repo: &Repository,
    cfg: &SplitConfig,
    policy: &NonLinkPolicy,
) -> Result<Split> {
    cfg.validate()?;
    let mut rng = rng(cfg.seed, 3);
    let components = crate::graph::components::component_indices(g);
    let mut comp_of = vec![0usize; g.vertex_count()];
    for (c, members) in components.iter().enumerate() {
        for &v in members {
            comp_of[v] = c;
        }
    }
    let comp_of_key = |key: &str| -> Result<usize> {
        g.index_of(key)
            .map(|v| comp_of[v])
            .ok_or_else(|| Error::UnknownKey(key.to_string()))
    };

    // linked pairs per component, split into [Dup, OtherLink]
    let mut linked_per_comp = vec![[0usize; 2]; components.len()];
    for p in pairs.iter().filter(|p| p.klass != PairClass::NonLink) {
        let (ca, cb) = (comp_of_key(&p.a)?, comp_of_key(&p.b)?);
        if ca != cb {
            return Err(Error::Precondition(format!(
                "linked pair ({}, {}) spans two components; build the graph over all links",
                p.a, p.b
            )));
        }
        linked_per_comp[ca][usize::from(p.klass == PairClass::OtherLink)] += 1;
    }
    let linked = |c: usize| linked_per_comp[c][0] + linked_per_comp[c][1];
    let class_totals = linked_per_comp
        .iter()
        .fold([0usize; 2], |acc, c| [acc[0] + c[0], acc[1] + c[1]]);
    let total_linked = class_totals[0] + class_totals[1];

    let mut pool = vec![Pool::Train; components.len()];
    let mut carrying: Vec<usize> = (0..components.len()).filter(|&c| linked(c) > 0).collect();
    carrying.shuffle(&mut rng);
    let target = cfg.test_fraction * total_linked as f64;
    let tolerance = 0.05 * target;
    // first pass also caps each class near its own share, so both classes
    // reach the test pool; the second pass only watches the total
    let class_caps = class_totals.map(|n| (cfg.test_fraction * n as f64).ceil() as usize);
    let mut in_test = 0usize;
    let mut class_in_test = [0usize; 2];
    for capped in [true, false] {
        for &c in &carrying {
            if in_test as f64 >= target - tolerance {
                break;
            }
            if pool[c] == Pool::Test || (in_test + linked(c)) as f64 > target + tolerance {
                continue;
            }
            let [d, o] = linked_per_comp[c];
            if capped && (class_in_test[0] + d > class_caps[0] || class_in_test[1] + o > class_caps[1]) {
                continue;
            }
            pool[c] = Pool::Test;
            in_test += linked(c);
            class_in_test = [class_in_test[0] + d, class_in_test[1] + o];
        }
    }
    if (in_test as f64 - target).abs() > tolerance {
        return Err(Error::SplitTolerance {
            target: cfg.test_fraction,
            achieved: in_test as f64 / total_linked as f64,
        });
    }

    let mut free: Vec<usize> = (0..components.len())
        .filter(|&c| linked(c) == 0)
        .collect();
    free.shuffle(&mut rng);
    let free_issues: usize = free.iter().map(|&c| components[c].len()).sum();
    let free_target = (free_issues as f64 * cfg.test_fraction).round() as usize;
    let mut free_in_test = 0;
    for &c in &free {
        if free_in_test + components[c].len() <= free_target {
            pool[c] = Pool::Test;
            free_in_test += components[c].len();
        }
    }

    let pool_of_key = |key: &str| comp_of_key(key).map(|c| pool[c]);
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut nonlinks_total = 0usize;
    let mut discarded = 0usize;
    for p in pairs {
        let (pa, pb) = (pool_of_key(&p.a)?, pool_of_key(&p.b)?);
        if p.klass == PairClass::NonLink {
            nonlinks_total += 1;
            if pa != pb {
                discarded += 1;
                continue;
            }
        }
        match pa {
            Pool::Train => train.push(p.clone()),
            Pool::Test => test.push(p.clone()),
        }
    }

    let mut resynthesized = 0;
    let mut shortfall = 0;
    if discarded > 0 {
        let test_nl_target = (nonlinks_total as f64 * cfg.test_fraction).round() as usize;
        let targets = [
            (Pool::Train, nonlinks_total - test_nl_target),
            (Pool::Test, test_nl_target),
        ];
        let eligible = policy.eligible(repo);
        let mut budget = discarded;
        for (which, nl_target) in targets {
            let side = match which {
                Pool::Train => &mut train,
                Pool::Test => &mut test,
            };
            let have = side.iter().filter(|p| p.klass == PairClass::NonLink).count();
            let want = nl_target.saturating_sub(have).min(budget);
            if want == 0 {
                continue;
            }
            let mut forbidden = linked_set(repo);
            forbidden.extend(side.iter().map(|p| (p.a.clone(), p.b.clone())));
            let within: Vec<&str> = eligible
                .iter()
                .copied()
                .filter(|k| pool_of_key(k).ok() == Some(which))
                .collect();
            let drawn = match sample_pairs(&within, &forbidden, want, &mut rng) {
                Ok(d) => d,
                Err(Error::Exhausted { available, .. }) => {
                    sample_pairs(&within, &forbidden, available, &mut rng)?
                }
                Err(e) => return Err(e),
            };
            shortfall += want - drawn.len();
            resynthesized += drawn.len();
            budget -= drawn.len();
            side.extend(drawn.iter().map(|(a, b)| LabeledPair::non_link(a, b)));
        }
    }

    let test_components = pool.iter().filter(|p| **p == Pool::Test).count();
    Ok(Split {
        stats: SplitStats {
            linked_test_fraction: linked_fraction(&train, &test),
            overlap_issues: issue_overlap(&train, &test),
            train_components: components.len() - test_components,
            test_components,
            discarded_nonlinks: discarded,
            resynthesized_nonlinks: resynthesized,
            nonlink_shortfall: shortfall,
        },
        train,
        test,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrainingExample {
    #[serde(flatten)]
    pub pair: LabeledPair,
    pub label: u8,
}

fn by_class(pool: &[LabeledPair]) -> BTreeMap<PairClass, Vec<&LabeledPair>> {
    let mut out: BTreeMap<PairClass, Vec<&LabeledPair>> =
        PairClass::ALL.iter().map(|c| (*c, Vec::new())).collect();
    for p in pool {
        out.entry(p.klass).or_default().push(p);
    }
    out
}

/// Balanced binary training set for `tc`.
///
/// Pairs whose canonical type is in `excluded_types` (auto-created links)
/// are dropped first; the larger label side is then downsampled to the size
/// of the smaller one.
pub fn make_training_set(
    pool: &[LabeledPair],
    tc: TrainingConfig,
    seed: u64,
    excluded_types: Option<&BTreeSet<String>>,
) -> Result<Vec<TrainingExample>> {
    let kept: Vec<LabeledPair> = pool
        .iter()
        .filter(|p| match (excluded_types, &p.canonical_type) {
            (Some(ex), Some(t)) => !ex.contains(t),
            _ => true,
        })
        .cloned()
        .collect();
    let classes = by_class(&kept);
    for klass in tc.required_classes() {
        if classes[klass].is_empty() {
            return Err(Error::InsufficientData(format!(
                "training pool for {tc} has no {klass} pairs"
            )));
        }
    }

    let mut sides: [Vec<&LabeledPair>; 2] = [Vec::new(), Vec::new()];
    for p in &kept {
        if let Some(label) = tc.training_label(p.klass) {
            sides[label as usize].push(p);
        }
    }
    let mut rng = rng(seed, 4);
    let size = sides[0].len().min(sides[1].len());
    let mut out = Vec::with_capacity(2 * size);
    for (label, side) in sides.iter_mut().enumerate() {
        side.shuffle(&mut rng);
        out.extend(side.iter().take(size).map(|p| TrainingExample {
            pair: (*p).clone(),
            label: label as u8,
        }));
    }
    out.shuffle(&mut rng);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSets {
    /// Balanced over Dup, OtherLink and NonLink.
    pub new: Vec<LabeledPair>,
    /// `new` without its OtherLink pairs.
    pub traditional: Vec<LabeledPair>,
}

pub fn make_test_sets(pool: &[LabeledPair], seed: u64) -> Result<TestSets> {
    let mut classes = by_class(pool);
    let size = classes.values().map(Vec::len).min().unwrap_or(0);
    if size == 0 {
        let missing: Vec<&str> = classes
            .iter()
            .filter(|(_, v)| v.is_empty())
            .map(|(k, _)| k.name())
            .collect();
        return Err(Error::InsufficientData(format!(
            "test pool lacks {} pairs; achievable balanced size is 0",
            missing.join(", ")
        )));
    }
    let mut rng = rng(seed, 5);
    let mut new = Vec::with_capacity(3 * size);
    for members in classes.values_mut() {
        members.shuffle(&mut rng);
        new.extend(members.iter().take(size).map(|p| (*p).clone()));
    }
    new.shuffle(&mut rng);
    let traditional = new
        .iter()
        .filter(|p| p.klass != PairClass::OtherLink)
        .cloned()
        .collect();
    Ok(TestSets { new, traditional })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub dup: usize,
    pub other_link: usize,
    pub non_link: usize,
}

impl ClassCounts {
    pub fn of<'a>(pairs: impl IntoIterator<Item = &'a LabeledPair>) -> ClassCounts {
        let mut c = ClassCounts::default();
        for p in pairs {
            match p.klass {
                PairClass::Dup => c.dup += 1,
                PairClass::OtherLink => c.other_link += 1,
                PairClass::NonLink => c.non_link += 1,
            }
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub repository: String,
    /// Where the repository export was read from, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repository_path: Option<String>,
    pub split: SplitConfig,
    pub training: TrainingConfig,
    pub nonlinks: usize,
    pub split_stats: SplitStats,
    pub train_pool: ClassCounts,
    pub test_pool: ClassCounts,
    /// Training examples per label, `[label 0, label 1]`.
    pub train_labels: [usize; 2],
    pub test_new: ClassCounts,
    pub test_traditional: ClassCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetBundle {
    pub train: Vec<TrainingExample>,
    pub test: TestSets,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetOptions {
    pub split: SplitConfig,
    pub training: TrainingConfig,
    /// Number of non-links to synthesize. `None` matches the larger of the
    /// Dup and OtherLink classes, capped at what the repository allows.
    #[serde(default)]
    pub nonlinks: Option<usize>,
    #[serde(default)]
    pub nonlink_policy: NonLinkPolicy,
}

/// Full dataset construction for one cleaned repository.
pub fn build_dataset(
    repo: &Repository,
    taxonomy: &LinkTaxonomy,
    opts: &DatasetOptions,
) -> Result<DatasetBundle> {
    opts.split.validate()?;
    let seed = opts.split.seed;
    let mut pairs = link_pairs(repo, taxonomy)?;
    let counts = ClassCounts::of(&pairs);
    let nonlinks = match opts.nonlinks {
        Some(n) => synthesize_nonlinks(repo, n, seed, &opts.nonlink_policy)?,
        None => {
            let want = counts.dup.max(counts.other_link);
            match synthesize_nonlinks(repo, want, seed, &opts.nonlink_policy) {
                Err(Error::Exhausted { available, .. }) => {
                    synthesize_nonlinks(repo, available, seed, &opts.nonlink_policy)?
                }
                other => other?,
            }
        }
    };
    let nonlink_count = nonlinks.len();
    pairs.extend(nonlinks);

    let split = match opts.split.strategy {
        SplitStrategy::Random => split_random(&pairs, &opts.split)?,
        SplitStrategy::Cluster => {
            let g = build_graph(repo, taxonomy, &Slice::All)?;
            split_cluster(&pairs, &g, repo, &opts.split, &opts.nonlink_policy)?
        }
    };

    let excluded = opts
        .split
        .exclude_auto_created
        .then(|| taxonomy.auto_created());
    let train = make_training_set(&split.train, opts.training, seed, excluded)?;
    let test = make_test_sets(&split.test, seed)?;

    let mut train_labels = [0usize; 2];
    for ex in &train {
        train_labels[ex.label as usize] += 1;
    }
    let provenance = Provenance {
        repository: repo.name.clone(),
        repository_path: None,
        split: opts.split,
        training: opts.training,
        nonlinks: nonlink_count,
        split_stats: split.stats.clone(),
        train_pool: ClassCounts::of(&split.train),
        test_pool: ClassCounts::of(&split.test),
        train_labels,
        test_new: ClassCounts::of(&test.new),
        test_traditional: ClassCounts::of(&test.traditional),
    };
    Ok(DatasetBundle {
        train,
        test,
        provenance,
    })
}

pub const TRAIN_FILE: &str = "train.jsonl";
pub const TEST_NEW_FILE: &str = "test_new.jsonl";
pub const TEST_TRADITIONAL_FILE: &str = "test_traditional.jsonl";
pub const PROVENANCE_FILE: &str = "provenance.json";

fn jsonl<T: Serialize>(items: &[T]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.push(b'\n');
    }
    Ok(out)
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = io::read_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                location: format!("{}:{}", path.display(), i + 1),
                message: e.to_string(),
            })
        })
        .collect()
}

impl DatasetBundle {
    /// Writes the four dataset files; returns their paths in write order.
    pub fn write(&self, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
        let files = [
            (TRAIN_FILE, jsonl(&self.train)?),
            (TEST_NEW_FILE, jsonl(&self.test.new)?),
            (TEST_TRADITIONAL_FILE, jsonl(&self.test.traditional)?),
        ];
        let mut written = Vec::new();
        for (name, bytes) in files {
            let path = dir.join(name);
            io::write_bytes(&path, &bytes)?;
            written.push(path);
        }
        let path = dir.join(PROVENANCE_FILE);
        io::write_json(&path, &self.provenance)?;
        written.push(path);
        Ok(written)
    }

    pub fn read(dir: &Path) -> Result<DatasetBundle> {
        let provenance: Provenance =
            serde_json::from_str(&io::read_string(&dir.join(PROVENANCE_FILE))?)?;
        Ok(DatasetBundle {
            train: read_jsonl(&dir.join(TRAIN_FILE))?,
            test: TestSets {
                new: read_jsonl(&dir.join(TEST_NEW_FILE))?,
                traditional: read_jsonl(&dir.join(TEST_TRADITIONAL_FILE))?,
            },
            provenance,
        })
    }
}
