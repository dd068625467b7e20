//! Link type normalization and the five link categories.
//!
//! Raw type names found in exports ("Dependent", "gantt: finish-finish",
//! "Cloners", ...) are reduced to canonical types by an ordered list of regex
//! rules. Canonical types map onto a [`LinkCategory`]. The default table is
//! bundled from `data/taxonomy.json`; rows marked `inferred` there are
//! editorial assignments that can be overridden with a custom file.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::ingest::Repository;
use crate::{io, Error, Result};

const DEFAULT_TAXONOMY: &str = include_str!("../data/taxonomy.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LinkCategory {
    Relation,
    Duplication,
    Composition,
    TemporalCausal,
    Workflow,
}

impl LinkCategory {
    pub const ALL: [LinkCategory; 5] = [
        LinkCategory::Relation,
        LinkCategory::Duplication,
        LinkCategory::Composition,
        LinkCategory::TemporalCausal,
        LinkCategory::Workflow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LinkCategory::Relation => "Relation",
            LinkCategory::Duplication => "Duplication",
            LinkCategory::Composition => "Composition",
            LinkCategory::TemporalCausal => "TemporalCausal",
            LinkCategory::Workflow => "Workflow",
        }
    }

    /// Short column label used in tables.
    pub fn abbrev(self) -> &'static str {
        match self {
            LinkCategory::Relation => "Rel",
            LinkCategory::Duplication => "Dup",
            LinkCategory::Composition => "Com",
            LinkCategory::TemporalCausal => "T/C",
            LinkCategory::Workflow => "WFl",
        }
    }
}

impl fmt::Display for LinkCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LinkCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let folded: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        Ok(match folded.as_str() {
            "relation" | "rel" => LinkCategory::Relation,
            "duplication" | "dup" => LinkCategory::Duplication,
            "composition" | "com" => LinkCategory::Composition,
            "temporalcausal" | "tc" => LinkCategory::TemporalCausal,
            "workflow" | "wfl" => LinkCategory::Workflow,
            _ => return Err(Error::Config(format!("unknown link category {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnknownPolicy {
    /// Unknown types are a hard error.
    #[default]
    Error,
    /// Unknown types are kept under their case-folded name and counted as
    /// [`LinkCategory::Relation`].
    #[serde(alias = "relation")]
    AssignToRelation,
}

/// On-disk form of a taxonomy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaxonomyFile {
    #[serde(default)]
    pub unknown_policy: UnknownPolicy,
    pub rules: Vec<RuleSpec>,
    pub categories: BTreeMap<String, LinkCategory>,
    #[serde(default)]
    pub auto_created: Vec<String>,
    #[serde(default)]
    pub inferred: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuleSpec {
    pub pattern: String,
    pub canonical: String,
}

#[derive(Debug, Clone)]
struct Rule {
    regex: Regex,
    canonical: String,
}

#[derive(Debug, Clone)]
pub struct LinkTaxonomy {
    rules: Vec<Rule>,
    categories: BTreeMap<String, LinkCategory>,
    auto_created: BTreeSet<String>,
    inferred: BTreeSet<String>,
    unknown_policy: UnknownPolicy,
    /// stripped form of each canonical name -> canonical name
    identity: HashMap<String, String>,
    source: TaxonomyFile,
}

impl LinkTaxonomy {
    /// The bundled 30-type table.
    pub fn bundled() -> LinkTaxonomy {
        let file: TaxonomyFile =
            serde_json::from_str(DEFAULT_TAXONOMY).expect("bundled taxonomy is valid JSON");
        LinkTaxonomy::from_file(file).expect("bundled taxonomy is consistent")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<LinkTaxonomy> {
        let path = path.as_ref();
        let text = io::read_string(path)?;
        let file: TaxonomyFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
            location: format!("{} line {} column {}", path.display(), e.line(), e.column()),
            message: e.to_string(),
        })?;
        LinkTaxonomy::from_file(file)
    }

    pub fn from_file(file: TaxonomyFile) -> Result<LinkTaxonomy> {
        let mut rules = Vec::with_capacity(file.rules.len());
        for spec in &file.rules {
            let regex = Regex::new(&spec.pattern)
                .map_err(|e| Error::Config(format!("bad pattern {:?}: {e}", spec.pattern)))?;
            if !file.categories.contains_key(&spec.canonical) {
                return Err(Error::Config(format!(
                    "rule target {:?} has no category",
                    spec.canonical
                )));
            }
            rules.push(Rule {
                regex,
                canonical: spec.canonical.clone(),
            });
        }
        let identity = file
            .categories
            .keys()
            .map(|k| (strip_decoration(k), k.clone()))
            .collect();
        let taxonomy = LinkTaxonomy {
            rules,
            categories: file.categories.clone(),
            auto_created: file.auto_created.iter().cloned().collect(),
            inferred: file.inferred.iter().cloned().collect(),
            unknown_policy: file.unknown_policy,
            identity,
            source: file,
        };

        for canonical in taxonomy.categories.keys() {
            match taxonomy.lookup(canonical) {
                Some(c) if c == canonical => {}
                other => {
                    return Err(Error::Config(format!(
                        "canonical type {canonical:?} normalizes to {other:?}, not to itself"
                    )))
                }
            }
        }
        for name in taxonomy.auto_created.iter().chain(&taxonomy.inferred) {
            if !taxonomy.categories.contains_key(name) {
                return Err(Error::Config(format!("{name:?} is not a canonical type")));
            }
        }
        Ok(taxonomy)
    }

    pub fn with_unknown_policy(mut self, policy: UnknownPolicy) -> LinkTaxonomy {
        self.unknown_policy = policy;
        self.source.unknown_policy = policy;
        self
    }

    pub fn unknown_policy(&self) -> UnknownPolicy {
        self.unknown_policy
    }

    pub fn to_file(&self) -> &TaxonomyFile {
        &self.source
    }

    pub fn canonical_types(&self) -> impl Iterator<Item = (&str, LinkCategory)> {
        self.categories.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn is_auto_created(&self, canonical: &str) -> bool {
        self.auto_created.contains(canonical)
    }

    pub fn auto_created(&self) -> &BTreeSet<String> {
        &self.auto_created
    }

    pub fn is_inferred(&self, canonical: &str) -> bool {
        self.inferred.contains(canonical)
    }

    fn lookup(&self, raw: &str) -> Option<&str> {
        let stripped = strip_decoration(raw);
        self.rules
            .iter()
            .find(|r| r.regex.is_match(&stripped))
            .map(|r| r.canonical.as_str())
            .or_else(|| self.identity.get(&stripped).map(String::as_str))
    }

    /// Maps a raw link type name to its canonical type.
    pub fn normalize_type(&self, raw: &str) -> Result<String> {
        if let Some(canonical) = self.lookup(raw) {
            return Ok(canonical.to_string());
        }
        match self.unknown_policy {
            UnknownPolicy::Error => Err(Error::UnknownType(raw.to_string())),
            UnknownPolicy::AssignToRelation => Ok(strip_decoration(raw)),
        }
    }

    pub fn categorize(&self, canonical: &str) -> Result<LinkCategory> {
        match self.categories.get(canonical) {
            Some(c) => Ok(*c),
            None => match self.unknown_policy {
                UnknownPolicy::Error => Err(Error::UnknownType(canonical.to_string())),
                UnknownPolicy::AssignToRelation => Ok(LinkCategory::Relation),
            },
        }
    }

    /// `normalize_type` followed by `categorize`.
    pub fn classify(&self, raw: &str) -> Result<(String, LinkCategory)> {
        let canonical = self.normalize_type(raw)?;
        let category = self.categorize(&canonical)?;
        Ok((canonical, category))
    }
}

/// Case-folds, collapses whitespace and removes gantt decorations
/// (`"gantt: x"`, `"x [gantt]"`, `"x (gantt)"`).
fn strip_decoration(raw: &str) -> String {
    let folded = raw
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase();
    let mut s = folded.as_str();
    if let Some(rest) = s.strip_prefix("gantt:") {
        s = rest.trim_start();
    }
    for suffix in ["[gantt]", "(gantt)"] {
        if let Some(rest) = s.strip_suffix(suffix) {
            s = rest.trim_end();
        }
    }
    s.to_string()
}

/// Link counts and shares keyed by category or canonical type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prevalence<K: Ord> {
    pub counts: BTreeMap<K, usize>,
    pub shares: BTreeMap<K, f64>,
    pub categorized: usize,
    pub uncategorized: usize,
}

impl<K: Ord + Clone> Prevalence<K> {
    fn from_counts(counts: BTreeMap<K, usize>, uncategorized: usize) -> Result<Self> {
        let categorized: usize = counts.values().sum();
        if categorized == 0 {
            return Err(Error::Undefined(
                "prevalence over zero categorizable links".into(),
            ));
        }
        let shares = counts
            .iter()
            .map(|(k, n)| (k.clone(), *n as f64 / categorized as f64))
            .collect();
        Ok(Prevalence {
            counts,
            shares,
            categorized,
            uncategorized,
        })
    }
}

pub fn category_prevalence(
    repo: &Repository,
    taxonomy: &LinkTaxonomy,
) -> Result<Prevalence<LinkCategory>> {
    let mut counts: BTreeMap<LinkCategory, usize> =
        LinkCategory::ALL.iter().map(|c| (*c, 0)).collect();
    let mut uncategorized = 0;
    for link in &repo.links {
        match taxonomy.classify(&link.raw_type) {
            Ok((_, category)) => *counts.entry(category).or_default() += 1,
            Err(_) => uncategorized += 1,
        }
    }
    Prevalence::from_counts(counts, uncategorized)
}

pub fn type_prevalence(repo: &Repository, taxonomy: &LinkTaxonomy) -> Result<Prevalence<String>> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut uncategorized = 0;
    for link in &repo.links {
        match taxonomy.classify(&link.raw_type) {
            Ok((canonical, _)) => *counts.entry(canonical).or_default() += 1,
            Err(_) => uncategorized += 1,
        }
    }
    Prevalence::from_counts(counts, uncategorized)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::tests::repo;

    fn tax() -> LinkTaxonomy {
        LinkTaxonomy::bundled()
    }

    #[test]
    fn bundled_has_thirty_types_in_five_categories() {
        let t = tax();
        assert_eq!(t.canonical_types().count(), 30);
        let used: BTreeSet<LinkCategory> = t.canonical_types().map(|(_, c)| c).collect();
        assert_eq!(used.len(), 5);
        assert!(t.is_auto_created("Clone"));
        assert!(!t.is_inferred("Duplicate"));
    }

    #[test]
    fn word_stems_group() {
        let t = tax();
        for raw in ["Depend", "Dependency", "Dependent", "Depends"] {
            assert_eq!(t.normalize_type(raw).unwrap(), "Depends", "{raw}");
        }
        for raw in ["includes", "contains", "incorporates"] {
            assert_eq!(t.normalize_type(raw).unwrap(), "Incorporate", "{raw}");
        }
    }

    #[test]
    fn gantt_decorations_agree() {
        let t = tax();
        let a = t.normalize_type("gantt: finish-finish").unwrap();
        let b = t.normalize_type("finish-finish [gantt]").unwrap();
        assert_eq!(a, b);
        assert_eq!(t.categorize(&a).unwrap(), LinkCategory::TemporalCausal);
    }

    #[test]
    fn identity_and_case() {
        let t = tax();
        assert_eq!(t.normalize_type("Relates").unwrap(), "Relates");
        assert_eq!(t.normalize_type("  RELATES ").unwrap(), "Relates");
        assert_eq!(t.normalize_type("Cloners").unwrap(), "Clone");
    }

    #[test]
    fn anchored_category_assignments() {
        let t = tax();
        use LinkCategory::*;
        let expected = [
            ("Duplicate", Duplication),
            ("Clone", Duplication),
            ("Replace", Duplication),
            ("Subtask", Composition),
            ("Epic", Composition),
            ("Split", Composition),
            ("Incorporate", Composition),
            ("Depends", TemporalCausal),
            ("Blocks", TemporalCausal),
            ("Cause", TemporalCausal),
            ("Break", TemporalCausal),
            ("Relates", Relation),
            ("Reference", Relation),
            ("Supercede", Workflow),
            ("Test", Workflow),
            ("Bonfire-Testing", Workflow),
            ("Discovered-while-testing", Workflow),
        ];
        for (canonical, category) in expected {
            assert_eq!(t.categorize(canonical).unwrap(), category, "{canonical}");
            assert!(!t.is_inferred(canonical), "{canonical} is stated, not inferred");
        }
    }

    #[test]
    fn normalize_is_idempotent_and_total_on_canonicals() {
        let t = tax();
        for (canonical, category) in t.canonical_types() {
            assert_eq!(t.normalize_type(canonical).unwrap(), canonical);
            assert_eq!(t.classify(canonical).unwrap().1, category);
        }
    }

    #[test]
    fn unknown_policy() {
        let t = tax();
        assert!(matches!(t.normalize_type("Frobnicates"), Err(Error::UnknownType(s)) if s == "Frobnicates"));
        assert!(matches!(t.categorize("Frobnicates"), Err(Error::UnknownType(_))));
        let t = t.with_unknown_policy(UnknownPolicy::AssignToRelation);
        let c = t.normalize_type("Frobnicates").unwrap();
        assert_eq!(c, "frobnicates");
        assert_eq!(t.normalize_type(&c).unwrap(), c);
        assert_eq!(t.categorize(&c).unwrap(), LinkCategory::Relation);
    }

    #[test]
    fn inconsistent_file_rejected() {
        let file = TaxonomyFile {
            unknown_policy: UnknownPolicy::Error,
            rules: vec![RuleSpec {
                pattern: "^x$".into(),
                canonical: "X".into(),
            }],
            categories: BTreeMap::new(),
            auto_created: vec![],
            inferred: vec![],
        };
        assert!(matches!(LinkTaxonomy::from_file(file), Err(Error::Config(_))));
    }

    #[test]
    fn category_prevalence_counts() {
        let mut links = Vec::new();
        let keys: Vec<String> = (0..21).map(|i| format!("A-{i}")).collect();
        let types = [
            "Relates", "Relates", "Relates", "Relates", "Subtask", "Subtask", "Subtask", "sub-task",
            "Duplicate", "duplicates",
        ];
        for (i, ty) in types.iter().enumerate() {
            links.push((keys[2 * i].as_str(), keys[2 * i + 1].as_str(), *ty));
        }
        let key_refs: Vec<&str> = keys.iter().map(String::as_str).collect();
        let r = repo(&key_refs, &links);
        let p = category_prevalence(&r, &tax()).unwrap();
        assert_eq!(p.shares[&LinkCategory::Relation], 0.4);
        assert_eq!(p.shares[&LinkCategory::Composition], 0.4);
        assert_eq!(p.shares[&LinkCategory::Duplication], 0.2);
        assert_eq!(p.shares[&LinkCategory::TemporalCausal], 0.0);
        assert_eq!(p.shares[&LinkCategory::Workflow], 0.0);

        let tp = type_prevalence(&r, &tax()).unwrap();
        assert_eq!(tp.shares["Relates"], 0.4);
        assert_eq!(tp.counts["Subtask"], 4);
    }

    #[test]
    fn prevalence_edge_cases() {
        let r = repo(&["A-1", "A-2", "A-3"], &[("A-1", "A-2", "Duplicate"), ("A-2", "A-3", "Duplicate")]);
        let p = category_prevalence(&r, &tax()).unwrap();
        assert_eq!(p.shares[&LinkCategory::Duplication], 1.0);

        assert!(matches!(
            category_prevalence(&repo(&["A-1"], &[]), &tax()),
            Err(Error::Undefined(_))
        ));

        let r = repo(&["A-1", "A-2", "A-3"], &[("A-1", "A-2", "Relates"), ("A-2", "A-3", "Zorp")]);
        let p = type_prevalence(&r, &tax()).unwrap();
        assert_eq!(p.uncategorized, 1);
        assert_eq!(p.shares["Relates"], 1.0);
    }

    #[test]
    fn parse_category_names() {
        assert_eq!("Temporal/Causal".parse::<LinkCategory>().unwrap(), LinkCategory::TemporalCausal);
        assert_eq!("dup".parse::<LinkCategory>().unwrap(), LinkCategory::Duplication);
        assert!("Other".parse::<LinkCategory>().is_err());
    }
}
