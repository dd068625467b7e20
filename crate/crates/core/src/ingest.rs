//! Loading and cleaning of issue tracker exports.
//!
//! The export format is one JSON document per repository:
//!
//! ```json
//! {"name": "qt",
//!  "issues": [{"key": "QTBUG-1", "project": "QTBUG", "title": "...", "description": "...",
//!              "issue_type": "Bug", "status": "Closed", "resolution": "Fixed",
//!              "created": "2020-01-31T10:00:00Z", "is_private": false}],
//!  "links": [{"source": "QTBUG-1", "target": "QTBUG-2", "type": "Relates", "direction": null}]}
//! ```
//!
//! Links are kept with their direction on read but every consumer treats them
//! as undirected.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{io, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueRecord {
    pub key: String,
    pub project: String,
    pub title: String,
    pub description: String,
    pub issue_type: String,
    pub status: String,
    pub resolution: Option<String>,
    #[serde(with = "timestamp")]
    pub created: DateTime<Utc>,
    pub is_private: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawLink {
    pub source: String,
    pub target: String,
    #[serde(rename = "type")]
    pub raw_type: String,
    #[serde(rename = "direction", default)]
    pub directed_role: Option<String>,
}

impl RawLink {
    /// Endpoints ordered lexicographically; links are undirected downstream.
    pub fn unordered(&self) -> (&str, &str) {
        ordered_pair(&self.source, &self.target)
    }
}

pub(crate) fn ordered_pair<'a>(a: &'a str, b: &'a str) -> (&'a str, &'a str) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Counts of links removed by [`Repository::clean`], per exclusion reason.
///
/// `raw_links - retained_links` always equals the sum of the reason counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub raw_links: usize,
    pub retained_links: usize,
    pub private_endpoint: usize,
    pub missing_endpoint: usize,
    pub self_link: usize,
    pub multi_typed_pair: usize,
    pub duplicate_edge: usize,
}

impl CleaningReport {
    pub fn removed(&self) -> usize {
        self.private_endpoint
            + self.missing_endpoint
            + self.self_link
            + self.multi_typed_pair
            + self.duplicate_edge
    }

    pub fn is_clean(&self) -> bool {
        self.removed() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Repository {
    pub name: String,
    #[serde(with = "issue_list")]
    pub issues: BTreeMap<String, IssueRecord>,
    pub links: Vec<RawLink>,
    pub cleaning_report: CleaningReport,
}

/// Descriptive statistics of one cleaned repository.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub issues: usize,
    pub links: usize,
    pub link_types: usize,
    pub coverage: Option<f64>,
    pub cross_project_share: Option<f64>,
}

#[derive(Deserialize)]
struct RawDocument {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    issues: Vec<Value>,
    #[serde(default)]
    links: Vec<Value>,
    #[serde(default)]
    cleaning_report: Option<CleaningReport>,
}

#[derive(Deserialize)]
struct RawIssue {
    key: String,
    #[serde(default)]
    project: Option<String>,
    #[serde(default)]
    title: Option<String>,
    #[serde(default)]
    description: Option<String>,
    #[serde(default)]
    issue_type: Option<String>,
    #[serde(default)]
    status: Option<String>,
    #[serde(default)]
    resolution: Option<String>,
    created: String,
    #[serde(default)]
    is_private: bool,
}

/// Loads a repository export without cleaning it.
///
/// An empty `name` falls back to the document's `name` field, then to the
/// file stem.
pub fn load_repository(path: impl AsRef<Path>, name: &str) -> Result<Repository> {
    let path = path.as_ref();
    let text = io::read_string(path)?;
    let fallback = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut repo = Repository::from_json_str(&text, name)?;
    if repo.name.is_empty() {
        repo.name = fallback;
    }
    Ok(repo)
}

impl Repository {
    pub fn from_json_str(text: &str, name: &str) -> Result<Repository> {
        let doc: RawDocument = serde_json::from_str(text).map_err(|e| Error::Parse {
            location: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;

        let mut issues = BTreeMap::new();
        for (i, value) in doc.issues.into_iter().enumerate() {
            let raw: RawIssue = serde_json::from_value(value).map_err(|e| Error::Parse {
                location: format!("issues[{i}]"),
                message: e.to_string(),
            })?;
            let issue = raw.into_record(i)?;
            if issues.contains_key(&issue.key) {
                return Err(Error::Integrity(format!(
                    "duplicate issue key {:?} at issues[{i}]",
                    issue.key
                )));
            }
            issues.insert(issue.key.clone(), issue);
        }

        let mut links = Vec::with_capacity(doc.links.len());
        for (i, value) in doc.links.into_iter().enumerate() {
            let link: RawLink = serde_json::from_value(value).map_err(|e| Error::Parse {
                location: format!("links[{i}]"),
                message: e.to_string(),
            })?;
            links.push(link);
        }

        let cleaning_report = doc.cleaning_report.unwrap_or(CleaningReport {
            raw_links: links.len(),
            retained_links: links.len(),
            ..CleaningReport::default()
        });
        if cleaning_report.retained_links != links.len()
            || cleaning_report.raw_links != cleaning_report.retained_links + cleaning_report.removed()
        {
            return Err(Error::Integrity(
                "cleaning_report does not agree with the link list".into(),
            ));
        }

        Ok(Repository {
            name: if name.is_empty() {
                doc.name.unwrap_or_default()
            } else {
                name.to_string()
            },
            issues,
            links,
            cleaning_report,
        })
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Applies the exclusion rules. Total and idempotent; the cleaning report
    /// accumulates across passes, so a second pass leaves it unchanged.
    pub fn clean(self) -> Repository {
        let Repository {
            name,
            issues,
            links,
            cleaning_report: mut report,
        } = self;

        let mut candidates = Vec::with_capacity(links.len());
        for link in links {
            let endpoints = [&link.source, &link.target].map(|k| issues.get(k.as_str()));
            if endpoints.iter().flatten().any(|issue| issue.is_private) {
                report.private_endpoint += 1;
            } else if endpoints.iter().any(Option::is_none) {
                report.missing_endpoint += 1;
            } else if link.source == link.target {
                report.self_link += 1;
            } else {
                candidates.push(link);
            }
        }

        // pair -> (indices into candidates, distinct case-folded types)
        let mut pairs: HashMap<(String, String), (Vec<usize>, BTreeSet<String>)> = HashMap::new();
        for (i, link) in candidates.iter().enumerate() {
            let (a, b) = link.unordered();
            let entry = pairs.entry((a.to_string(), b.to_string())).or_default();
            entry.0.push(i);
            entry.1.insert(fold_type(&link.raw_type));
        }

        let mut keep = vec![false; candidates.len()];
        for (indices, types) in pairs.values() {
            if types.len() > 1 {
                report.multi_typed_pair += indices.len();
            } else {
                // indices are in input order; the first occurrence survives
                keep[indices[0]] = true;
                report.duplicate_edge += indices.len() - 1;
            }
        }

        let links: Vec<RawLink> = candidates
            .into_iter()
            .zip(keep)
            .filter_map(|(link, k)| k.then_some(link))
            .collect();
        report.retained_links = links.len();

        Repository {
            name,
            issues,
            links,
            cleaning_report: report,
        }
    }

    /// Share of issues incident to at least one link.
    pub fn coverage(&self) -> Result<f64> {
        if self.issues.is_empty() {
            return Err(Error::Undefined(format!(
                "coverage of repository {:?} with no issues",
                self.name
            )));
        }
        let mut linked: BTreeSet<&str> = BTreeSet::new();
        for link in &self.links {
            for key in [&link.source, &link.target] {
                if self.issues.contains_key(key.as_str()) {
                    linked.insert(key);
                }
            }
        }
        Ok(linked.len() as f64 / self.issues.len() as f64)
    }

    pub fn summarize(&self) -> Summary {
        let link_types: BTreeSet<String> =
            self.links.iter().map(|l| fold_type(&l.raw_type)).collect();
        let cross = self
            .links
            .iter()
            .filter(|l| self.project_of(&l.source) != self.project_of(&l.target))
            .count();
        Summary {
            name: self.name.clone(),
            issues: self.issues.len(),
            links: self.links.len(),
            link_types: link_types.len(),
            coverage: self.coverage().ok(),
            cross_project_share: (!self.links.is_empty())
                .then(|| cross as f64 / self.links.len() as f64),
        }
    }

    fn project_of<'a>(&'a self, key: &'a str) -> &'a str {
        match self.issues.get(key) {
            Some(issue) => &issue.project,
            None => project_prefix(key).unwrap_or(key),
        }
    }

    /// Unordered endpoint pairs of all links.
    pub fn linked_pairs(&self) -> BTreeSet<(&str, &str)> {
        self.links.iter().map(RawLink::unordered).collect()
    }
}

fn fold_type(raw: &str) -> String {
    raw.trim().to_lowercase()
}

/// Project prefix of an issue key (`"QTBUG-123"` -> `"QTBUG"`), if the key
/// ends in a hyphen-number segment.
pub fn project_prefix(key: &str) -> Option<&str> {
    let (prefix, number) = key.rsplit_once('-')?;
    (!prefix.is_empty() && !number.is_empty() && number.bytes().all(|b| b.is_ascii_digit()))
        .then_some(prefix)
}

impl RawIssue {
    fn into_record(self, index: usize) -> Result<IssueRecord> {
        if self.key.trim().is_empty() {
            return Err(Error::Parse {
                location: format!("issues[{index}]"),
                message: "empty issue key".into(),
            });
        }
        let derived = project_prefix(&self.key);
        let project = match (self.project.filter(|p| !p.is_empty()), derived) {
            (Some(p), Some(d)) if p != d => {
                return Err(Error::Integrity(format!(
                    "issues[{index}]: project {p:?} does not match key {:?}",
                    self.key
                )))
            }
            (Some(p), _) => p,
            (None, Some(d)) => d.to_string(),
            (None, None) => self.key.clone(),
        };
        let created = parse_timestamp(&self.created).ok_or_else(|| Error::Parse {
            location: format!("issues[{index}]"),
            message: format!("unrecognized timestamp {:?}", self.created),
        })?;
        Ok(IssueRecord {
            key: self.key,
            project,
            title: self.title.unwrap_or_default(),
            description: self.description.unwrap_or_default(),
            issue_type: self.issue_type.unwrap_or_default(),
            status: self.status.unwrap_or_default(),
            resolution: self.resolution,
            created,
            is_private: self.is_private,
        })
    }
}

/// Lenient ISO-8601 parsing; a bare date means midnight UTC.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f%z", "%Y-%m-%d %H:%M:%S%.f%z"] {
        if let Ok(t) = DateTime::parse_from_str(s, fmt) {
            return Some(t.with_timezone(&Utc));
        }
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t.and_utc());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|t| t.and_utc())
}

mod timestamp {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&t.to_rfc3339_opts(SecondsFormat::AutoSi, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let s = String::deserialize(d)?;
        parse_timestamp(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("unrecognized timestamp {s:?}")))
    }
}

mod issue_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        issues: &BTreeMap<String, IssueRecord>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        s.collect_seq(issues.values())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<String, IssueRecord>, D::Error> {
        let list = Vec::<IssueRecord>::deserialize(d)?;
        Ok(list.into_iter().map(|i| (i.key.clone(), i)).collect())
    }
}
