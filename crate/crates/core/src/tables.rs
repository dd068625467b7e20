//! Cross-repository tables: descriptive statistics, link type shares, whole
//! graph metrics and per-category metrics.
//!
//! Values are fractions printed with three decimals. Tables with two or more
//! data rows get `mean`, `std` (sample), `min` and `max` summary rows computed
//! over the defined values of each column.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::graph::{build_graph, metrics_report, GraphMetricsReport, Slice};
use crate::ingest::{Repository, Summary};
use crate::taxonomy::{category_prevalence, type_prevalence, LinkCategory, LinkTaxonomy, Prevalence};
use crate::{io, Error, Result};

/// Everything the tables need from one cleaned repository.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepositoryReport {
    pub summary: Summary,
    pub category_prevalence: Option<Prevalence<LinkCategory>>,
    pub type_prevalence: Option<Prevalence<String>>,
    pub graph: GraphMetricsReport,
    pub categories: BTreeMap<LinkCategory, GraphMetricsReport>,
}

pub fn repository_report(repo: &Repository, taxonomy: &LinkTaxonomy) -> Result<RepositoryReport> {
    let mut categories = BTreeMap::new();
    for c in LinkCategory::ALL {
        let g = build_graph(repo, taxonomy, &Slice::Category(c))?;
        categories.insert(c, metrics_report(&g));
    }
    Ok(RepositoryReport {
        summary: repo.summarize(),
        category_prevalence: category_prevalence(repo, taxonomy).ok(),
        type_prevalence: type_prevalence(repo, taxonomy).ok(),
        graph: metrics_report(&build_graph(repo, taxonomy, &Slice::All)?),
        categories,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Count(usize),
    Value(Option<f64>),
}

impl Cell {
    fn number(self) -> Option<f64> {
        match self {
            Cell::Count(n) => Some(n as f64),
            Cell::Value(v) => v,
        }
    }

    fn render(self, missing: &str) -> String {
        match self {
            Cell::Count(n) => n.to_string(),
            Cell::Value(Some(v)) => format!("{v:.3}"),
            Cell::Value(None) => missing.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub label: String,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    /// Header including the label column.
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    pub summary: Vec<Row>,
}

impl Table {
    fn new(name: &str, columns: Vec<String>, rows: Vec<Row>) -> Table {
        let summary = summary_rows(&rows, columns.len() - 1);
        Table {
            name: name.to_string(),
            columns,
            rows,
            summary,
        }
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in self.rows.iter().chain(&self.summary) {
            let mut record = vec![row.label.clone()];
            record.extend(row.cells.iter().map(|c| c.render("")));
            w.write_record(&record)?;
        }
        w.into_inner()
            .map_err(|e| Error::Csv(csv::Error::from(e.into_error())))
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "| {} |", self.columns.join(" | "));
        let _ = writeln!(
            out,
            "|{}",
            self.columns
                .iter()
                .enumerate()
                .map(|(i, _)| if i == 0 { " --- |" } else { " ---: |" })
                .collect::<String>()
        );
        for row in self.rows.iter().chain(&self.summary) {
            let label = if self.summary.contains(row) {
                format!("*{}*", row.label)
            } else {
                row.label.clone()
            };
            let cells: Vec<String> = row.cells.iter().map(|c| c.render("n/a")).collect();
            let _ = writeln!(out, "| {label} | {} |", cells.join(" | "));
        }
        out
    }
}

fn summary_rows(rows: &[Row], width: usize) -> Vec<Row> {
    if rows.len() < 2 {
        return Vec::new();
    }
    let columns: Vec<Vec<f64>> = (0..width)
        .map(|j| rows.iter().filter_map(|r| r.cells[j].number()).collect())
        .collect();
    let stat = |label: &str, f: &dyn Fn(&[f64]) -> Option<f64>| Row {
        label: label.to_string(),
        cells: columns.iter().map(|c| Cell::Value(f(c))).collect(),
    };
    vec![
        stat("mean", &|v| mean(v)),
        stat("std", &|v| sample_std(v)),
        stat("min", &|v| v.iter().copied().reduce(f64::min)),
        stat("max", &|v| v.iter().copied().reduce(f64::max)),
    ]
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn sample_std(v: &[f64]) -> Option<f64> {
    if v.len() < 2 {
        return None;
    }
    let m = mean(v)?;
    let ss: f64 = v.iter().map(|x| (x - m) * (x - m)).sum();
    Some((ss / (v.len() - 1) as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tables {
    /// Source, #Issues, #Links, #Types, %Coverage, %Cross.
    pub descriptive: Table,
    /// Share of each canonical link type per repository.
    pub type_shares: Table,
    /// Share of each link category per repository.
    pub category_shares: Table,
    /// Whole-graph metrics per repository, transitivity omitted.
    pub whole_graph: Table,
    /// Per-category metrics averaged over repositories.
    pub category_metrics: Table,
}

impl Tables {
    pub fn all(&self) -> [&Table; 5] {
        [
            &self.descriptive,
            &self.type_shares,
            &self.category_shares,
            &self.whole_graph,
            &self.category_metrics,
        ]
    }

    /// Writes `<name>.csv` and `<name>.md` for every table.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        for t in self.all() {
            let csv_path = dir.join(format!("{}.csv", t.name));
            io::write_bytes(&csv_path, &t.to_csv()?)?;
            let md_path = dir.join(format!("{}.md", t.name));
            io::write_bytes(&md_path, t.to_markdown().as_bytes())?;
            written.extend([csv_path, md_path]);
        }
        Ok(written)
    }
}

fn header(first: &str, rest: impl IntoIterator<Item = String>) -> Vec<String> {
    std::iter::once(first.to_string()).chain(rest).collect()
}

pub fn emit_tables(reports: &[RepositoryReport]) -> Result<Tables> {
    if reports.is_empty() {
        return Err(Error::Precondition("tables need at least one repository report".into()));
    }

    let descriptive = Table::new(
        "descriptive",
        header(
            "Source",
            ["#Issues", "#Links", "#Types", "%Coverage", "%Cross"].map(String::from),
        ),
        reports
            .iter()
            .map(|r| Row {
                label: r.summary.name.clone(),
                cells: vec![
                    Cell::Count(r.summary.issues),
                    Cell::Count(r.summary.links),
                    Cell::Count(r.summary.link_types),
                    Cell::Value(r.summary.coverage),
                    Cell::Value(r.summary.cross_project_share),
                ],
            })
            .collect(),
    );

    // columns ordered by mean share, descending, then by name
    let types: BTreeSet<&String> = reports
        .iter()
        .filter_map(|r| r.type_prevalence.as_ref())
        .flat_map(|p| p.counts.keys())
        .collect();
    let share_of = |r: &RepositoryReport, t: &str| {
        r.type_prevalence
            .as_ref()
            .map(|p| p.shares.get(t).copied().unwrap_or(0.0))
    };
    let mut ordered: Vec<(&String, f64)> = types
        .into_iter()
        .map(|t| {
            let v: Vec<f64> = reports.iter().filter_map(|r| share_of(r, t)).collect();
            (t, mean(&v).unwrap_or(0.0))
        })
        .collect();
    ordered.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let type_shares = Table::new(
        "type_shares",
        header("Source", ordered.iter().map(|(t, _)| t.to_string())),
        reports
            .iter()
            .map(|r| Row {
                label: r.summary.name.clone(),
                cells: ordered.iter().map(|(t, _)| Cell::Value(share_of(r, t))).collect(),
            })
            .collect(),
    );

    let category_shares = Table::new(
        "category_shares",
        header("Source", LinkCategory::ALL.iter().map(|c| c.abbrev().to_string())),
        reports
            .iter()
            .map(|r| Row {
                label: r.summary.name.clone(),
                cells: LinkCategory::ALL
                    .iter()
                    .map(|c| {
                        Cell::Value(r.category_prevalence.as_ref().and_then(|p| p.shares.get(c).copied()))
                    })
                    .collect(),
            })
            .collect(),
    );

    let metric_columns = GraphMetricsReport::COLUMNS;
    let whole_graph = Table::new(
        "whole_graph",
        header("Source", metric_columns[..7].iter().map(|s| s.to_string())),
        reports
            .iter()
            .map(|r| Row {
                label: r.summary.name.clone(),
                cells: r.graph.values()[..7].iter().map(|v| Cell::Value(*v)).collect(),
            })
            .collect(),
    );

    let category_rows: Vec<Row> = LinkCategory::ALL
        .iter()
        .map(|c| Row {
            label: c.name().to_string(),
            cells: (0..metric_columns.len())
                .map(|j| {
                    let v: Vec<f64> = reports
                        .iter()
                        .filter_map(|r| r.categories.get(c).and_then(|m| m.values()[j]))
                        .collect();
                    Cell::Value(mean(&v))
                })
                .collect(),
        })
        .collect();
    let mut category_metrics = Table::new(
        "category_metrics",
        header("Category", metric_columns.iter().map(|s| s.to_string())),
        category_rows,
    );
    // only the extremes are meaningful across categories
    category_metrics.summary.retain(|r| r.label == "min" || r.label == "max");

    Ok(Tables {
        descriptive,
        type_shares,
        category_shares,
        whole_graph,
        category_metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::tests::repo;

    fn report(name: &str, links: &[(&str, &str, &str)]) -> RepositoryReport {
        let mut r = repo(&["A-1", "A-2", "A-3", "A-4", "A-5", "A-6"], links);
        r.name = name.into();
        repository_report(&r, &LinkTaxonomy::bundled()).unwrap()
    }

    #[test]
    fn single_repository_has_no_summary() {
        let t = emit_tables(&[report("one", &[("A-1", "A-2", "Duplicate")])]).unwrap();
        let csv = String::from_utf8(t.descriptive.to_csv().unwrap()).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "Source,#Issues,#Links,#Types,%Coverage,%Cross");
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1], "one,6,1,1,0.333,0.000");
    }

    #[test]
    fn two_repositories_get_summary_rows() {
        let t = emit_tables(&[
            report("one", &[("A-1", "A-2", "Duplicate")]),
            report("two", &[("A-1", "A-2", "Relates"), ("A-2", "A-3", "Blocks")]),
        ])
        .unwrap();
        let labels: Vec<&str> = t.descriptive.summary.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["mean", "std", "min", "max"]);
        assert_eq!(t.descriptive.summary[0].cells[1], Cell::Value(Some(1.5)));
        let std = t.descriptive.summary[1].cells[1].number().unwrap();
        assert!((std - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(t.descriptive.to_markdown().contains("| *mean* |"));
    }

    #[test]
    fn category_table_has_five_rows() {
        let t = emit_tables(&[report("one", &[("A-1", "A-2", "Duplicate")])]).unwrap();
        let csv = String::from_utf8(t.category_metrics.to_csv().unwrap()).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + 5 + 2);
        assert!(lines[0].starts_with("Category,%Isolated,%2Comp"));
        assert!(lines[0].ends_with("Transitivity"));
        assert!(!t.whole_graph.columns.contains(&"Transitivity".to_string()));
    }

    #[test]
    fn empty_input_rejected() {
        assert!(emit_tables(&[]).is_err());
    }
}
