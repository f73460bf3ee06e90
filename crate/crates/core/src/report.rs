//! Aggregation of per-subject widths into baseline deltas and subject
//! averages, and emission as CSV, JSON and plot data.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::decompose::Rhythm;
use crate::error::{Error, Result};
use crate::numeric;
use crate::protocol::ANALYZED_ELECTRODES;

pub const SCHEMA_VERSION: &str = "mfeeg-report/1";

pub const FLAG_MISSING_BASELINE: &str = "missing_baseline";
pub const FLAG_MISSING_SUBJECTS: &str = "missing_subjects";

/// Width of one subject's rhythm envelope on one electrode in one condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthRecord {
    pub subject_id: String,
    pub electrode: String,
    pub rhythm: Rhythm,
    /// Timeline label, e.g. `baseline` or `clip2_band4`.
    pub condition: String,
    /// Clip number for stimulus conditions.
    pub clip: Option<u8>,
    /// `original` or `band1`..`band5` for stimulus conditions.
    pub stimulus: Option<String>,
    #[serde(rename = "W")]
    pub width: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub alpha0: f64,
    /// R² of the `ln F2(s)` against `ln s` fit.
    pub h2_r2: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl WidthRecord {
    pub fn is_baseline(&self) -> bool {
        self.clip.is_none() && self.condition == "baseline"
    }
}

/// Signed change from rest; positive means a rise in complexity.
pub fn baseline_delta(w_cond: f64, w_rest: f64) -> f64 {
    w_cond - w_rest
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubjectAverage {
    pub n: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub sd: f64,
}

/// Mean and population SD; the result does not depend on input order.
pub fn average_subjects(values: &[f64], cell: &str) -> Result<SubjectAverage> {
    if values.is_empty() {
        return Err(Error::EmptyCell(cell.to_string()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = numeric::sum(sorted.iter().copied()) / n;
    let var = numeric::sum(sorted.iter().map(|v| (v - mean) * (v - mean))) / n;
    Ok(SubjectAverage {
        n: sorted.len(),
        mean,
        sd: var.sqrt(),
    })
}

/// One row of the report: a (clip, stimulus, electrode, rhythm) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub clip: u8,
    pub condition: String,
    pub electrode: String,
    pub rhythm: Rhythm,
    pub n_subjects: usize,
    pub w_mean: f64,
    pub w_sd: f64,
    pub baseline_mean: Option<f64>,
    /// Mean over subjects of `W(condition) - W(baseline)`.
    pub delta_mean: Option<f64>,
    pub delta_sd: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub metadata: serde_json::Value,
    pub records: Vec<WidthRecord>,
    pub cells: Vec<CellSummary>,
}

fn condition_rank(name: &str) -> (u8, String) {
    match name {
        "original" => (0, String::new()),
        other => (1, other.to_string()),
    }
}

fn electrode_rank(name: &str) -> (usize, String) {
    let pos = ANALYZED_ELECTRODES
        .iter()
        .position(|e| *e == name)
        .unwrap_or(ANALYZED_ELECTRODES.len());
    (pos, name.to_string())
}

type CellKey = (u8, (u8, String), (usize, String), Rhythm);

impl AnalysisReport {
    pub fn from_records(records: Vec<WidthRecord>, metadata: serde_json::Value) -> Result<Self> {
        let subjects: BTreeSet<&str> = records.iter().map(|r| r.subject_id.as_str()).collect();
        let mut baselines: BTreeMap<(&str, &str, Rhythm), f64> = BTreeMap::new();
        let mut cells: BTreeMap<CellKey, Vec<&WidthRecord>> = BTreeMap::new();
        for r in &records {
            if r.is_baseline() {
                baselines.insert((&r.subject_id, &r.electrode, r.rhythm), r.width);
            } else if let (Some(clip), Some(stim)) = (r.clip, &r.stimulus) {
                let key = (
                    clip,
                    condition_rank(stim),
                    electrode_rank(&r.electrode),
                    r.rhythm,
                );
                cells.entry(key).or_default().push(r);
            }
        }
        let mut out = Vec::with_capacity(cells.len());
        for ((clip, (_, _), (_, electrode), rhythm), rs) in cells {
            let stimulus = rs[0].stimulus.clone().unwrap_or_default();
            let name = format!("clip{clip}/{stimulus}/{electrode}/{rhythm}");
            let widths: Vec<f64> = rs.iter().map(|r| r.width).collect();
            let w = average_subjects(&widths, &name)?;
            let pairs: Vec<(f64, f64)> = rs
                .iter()
                .filter_map(|r| {
                    baselines
                        .get(&(r.subject_id.as_str(), r.electrode.as_str(), r.rhythm))
                        .map(|&b| (r.width, b))
                })
                .collect();
            let mut flags: BTreeSet<String> =
                rs.iter().flat_map(|r| r.flags.iter().cloned()).collect();
            let present: BTreeSet<&str> = rs.iter().map(|r| r.subject_id.as_str()).collect();
            if present.len() < subjects.len() {
                flags.insert(FLAG_MISSING_SUBJECTS.into());
            }
            let (baseline_mean, delta_mean, delta_sd) = if pairs.is_empty() {
                flags.insert(FLAG_MISSING_BASELINE.into());
                (None, None, None)
            } else {
                if pairs.len() < rs.len() {
                    flags.insert(FLAG_MISSING_BASELINE.into());
                }
                let base: Vec<f64> = pairs.iter().map(|p| p.1).collect();
                let deltas: Vec<f64> = pairs.iter().map(|&(c, b)| baseline_delta(c, b)).collect();
                let b = average_subjects(&base, &name)?;
                let d = average_subjects(&deltas, &name)?;
                (Some(b.mean), Some(d.mean), Some(d.sd))
            };
            out.push(CellSummary {
                clip,
                condition: stimulus,
                electrode,
                rhythm,
                n_subjects: w.n,
                w_mean: w.mean,
                w_sd: w.sd,
                baseline_mean,
                delta_mean,
                delta_sd,
                flags: flags.into_iter().collect(),
            });
        }
        Ok(Self {
            metadata,
            records,
            cells: out,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "clip,condition,electrode,rhythm,n_subjects,w_mean,w_sd,baseline_mean,delta_mean,delta_sd,flags\n",
        );
        for c in &self.cells {
            let opt = |v: Option<f64>| v.map(sig6).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                c.clip,
                c.condition,
                c.electrode,
                c.rhythm,
                c.n_subjects,
                sig6(c.w_mean),
                sig6(c.w_sd),
                opt(c.baseline_mean),
                opt(c.delta_mean),
                opt(c.delta_sd),
                c.flags.join(";"),
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let mut results: BTreeMap<
            String,
            BTreeMap<String, BTreeMap<String, BTreeMap<String, &CellSummary>>>,
        > = BTreeMap::new();
        for c in &self.cells {
            results
                .entry(format!("clip{}", c.clip))
                .or_default()
                .entry(c.condition.clone())
                .or_default()
                .entry(c.electrode.clone())
                .or_default()
                .insert(c.rhythm.to_string(), c);
        }
        let doc = serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "metadata": self.metadata,
            "records": self.records,
            "cells": self.cells,
            "results": results,
        });
        Ok(serde_json::to_string_pretty(&doc)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            schema_version: String,
            metadata: serde_json::Value,
            records: Vec<WidthRecord>,
            cells: Vec<CellSummary>,
        }
        let doc: Doc = serde_json::from_str(text)?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported report schema '{}', expected '{SCHEMA_VERSION}'",
                doc.schema_version
            )));
        }
        Ok(Self {
            metadata: doc.metadata,
            records: doc.records,
            cells: doc.cells,
        })
    }

    /// Per electrode: `clip,condition` then the mean delta for each rhythm.
    pub fn plot_data(&self) -> BTreeMap<String, String> {
        let rhythms: BTreeSet<Rhythm> = self.cells.iter().map(|c| c.rhythm).collect();
        let mut rows: BTreeMap<
            (usize, String),
            BTreeMap<(u8, (u8, String)), BTreeMap<Rhythm, Option<f64>>>,
        > = BTreeMap::new();
        for c in &self.cells {
            rows.entry(electrode_rank(&c.electrode))
                .or_default()
                .entry((c.clip, condition_rank(&c.condition)))
                .or_default()
                .insert(c.rhythm, c.delta_mean);
        }
        let header: Vec<String> = rhythms.iter().map(|r| r.to_string()).collect();
        rows.into_iter()
            .map(|((_, electrode), by_cond)| {
                let mut text = format!("clip,condition,{}\n", header.join(","));
                for ((clip, (_, cond)), vals) in by_cond {
                    let cond = if cond.is_empty() {
                        "original".to_string()
                    } else {
                        cond
                    };
                    text.push_str(&format!("{clip},{cond}"));
                    for r in &rhythms {
                        let v = vals.get(r).copied().flatten().map(sig6).unwrap_or_default();
                        text.push_str(&format!(",{v}"));
                    }
                    text.push('\n');
                }
                (electrode, text)
            })
            .collect()
    }
}

/// Shortest decimal form of `x` rounded to 6 significant digits.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.5e}").parse().unwrap_or(x);
    if rounded == 0.0 {
        return "0".into();
    }
    format!("{rounded}")
}

/// Writes `report.csv`, `report.json` and `plotdata/<electrode>.csv` under
/// `out_dir`. Nothing is written for an empty report.
pub fn emit_report(report: &AnalysisReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if report.is_empty() {
        return Err(Error::EmptyReport);
    }
    let csv = report.to_csv();
    let json = report.to_json()?;
    let plots = report.plot_data();
    let plot_dir = out_dir.join("plotdata");
    std::fs::create_dir_all(&plot_dir).map_err(|e| Error::io(&plot_dir, e))?;
    let mut written = Vec::new();
    let mut write = |path: PathBuf, text: &str| -> Result<()> {
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    write(out_dir.join("report.csv"), &csv)?;
    write(out_dir.join("report.json"), &json)?;
    for (electrode, text) in &plots {
        write(plot_dir.join(format!("{electrode}.csv")), text)?;
    }
    Ok(written)
}
