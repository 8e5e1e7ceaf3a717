//! On-disk formats: delimited datasets with a JSON manifest, JSON model
//! documents, log-likelihood traces, dictionaries, predictions and ROC points.
//!
//! Labels are 1-based in every file. Floats are written in the shortest form
//! that parses back to the same value, so every format round-trips bit-exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::dataset::{LabeledDataset, MixedDataset};
use crate::em::{EmTrace, Identifiability};
use crate::error::{Error, Result};
use crate::gaussian::GaussianParams;
use crate::metrics::ClassRoc;
use crate::params::{ModelParams, PosteriorRow};
use crate::text::{Dictionary, Term};

pub const FORMAT_VERSION: u32 = 1;

/// Kind of a feature column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

/// Sidecar describing a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub n: usize,
    /// Binary feature count.
    pub d: usize,
    /// Continuous feature count.
    #[serde(default)]
    pub d2: usize,
    pub k: usize,
    pub has_gold: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_names: Option<Vec<String>>,
    /// Feature columns in file order.
    pub columns: Vec<ColumnSpec>,
    /// Free-form provenance, e.g. the simulation design.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extra: Option<serde_json::Value>,
}

impl DatasetManifest {
    pub fn binary_names(&self) -> Vec<String> {
        self.names_of(ColumnKind::Binary)
    }

    pub fn continuous_names(&self) -> Vec<String> {
        self.names_of(ColumnKind::Continuous)
    }

    fn names_of(&self, kind: ColumnKind) -> Vec<String> {
        self.columns
            .iter()
            .filter(|c| c.kind == kind)
            .map(|c| c.name.clone())
            .collect()
    }
}

/// Optional names written alongside a dataset.
#[derive(Debug, Clone, Default)]
pub struct DatasetMeta {
    pub binary_names: Option<Vec<String>>,
    pub continuous_names: Option<Vec<String>>,
    pub label_names: Option<Vec<String>>,
    pub extra: Option<serde_json::Value>,
}

/// `data.csv` -> `data.manifest.json`.
pub fn manifest_path(path: &Path) -> PathBuf {
    path.with_extension("manifest.json")
}

fn default_names(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|j| format!("{prefix}{j}")).collect()
}

fn checked_names(names: Option<&Vec<String>>, prefix: &str, count: usize) -> Result<Vec<String>> {
    match names {
        Some(v) if v.len() != count => Err(Error::ShapeMismatch {
            what: "column names",
            expected: count,
            found: v.len(),
        }),
        Some(v) => Ok(v.clone()),
        None => Ok(default_names(prefix, count)),
    }
}

/// Writes `label,[gold_label,]features…` and its manifest. Binary columns come
/// first, then continuous ones.
pub fn write_dataset(path: &Path, data: &MixedDataset, meta: &DatasetMeta) -> Result<DatasetManifest> {
    let binary = data.binary();
    let bnames = checked_names(meta.binary_names.as_ref(), "f", data.d1())?;
    let cnames = checked_names(meta.continuous_names.as_ref(), "z", data.d2())?;
    let has_gold = binary.y_true().is_some();
    let mut wtr = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let mut header = vec!["label".to_string()];
    if has_gold {
        header.push("gold_label".into());
    }
    header.extend(bnames.iter().cloned());
    header.extend(cnames.iter().cloned());
    wtr.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for i in 0..data.n() {
        record.clear();
        record.push((binary.y_observed()[i] + 1).to_string());
        if let Some(gold) = binary.y_true() {
            record.push((gold[i] + 1).to_string());
        }
        record.extend(binary.row_slice(i).iter().map(|v| v.to_string()));
        record.extend(data.z().row(i).iter().map(|v| v.to_string()));
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    let mut columns: Vec<ColumnSpec> = bnames
        .into_iter()
        .map(|name| ColumnSpec {
            name,
            kind: ColumnKind::Binary,
        })
        .collect();
    columns.extend(cnames.into_iter().map(|name| ColumnSpec {
        name,
        kind: ColumnKind::Continuous,
    }));
    let manifest = DatasetManifest {
        version: FORMAT_VERSION,
        n: data.n(),
        d: data.d1(),
        d2: data.d2(),
        k: binary.k(),
        has_gold,
        label_names: meta.label_names.clone(),
        columns,
        extra: meta.extra.clone(),
    };
    write_json(&manifest_path(path), &manifest)?;
    Ok(manifest)
}

/// Convenience wrapper for binary-only data.
pub fn write_binary_dataset(path: &Path, data: &LabeledDataset, meta: &DatasetMeta) -> Result<DatasetManifest> {
    let mixed = MixedDataset::new(data.clone(), Array2::zeros((data.n(), 0)))?;
    write_dataset(path, &mixed, meta)
}

fn parse_label(field: &str, row: usize, what: &str) -> Result<usize> {
    let v: usize = field
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("row {}: {what} {field:?} is not a positive integer", row + 1)))?;
    if v == 0 {
        return Err(Error::Parse(format!("row {}: {what} must be 1-based", row + 1)));
    }
    Ok(v - 1)
}

/// Reads a dataset. Without a manifest every column after the labels is
/// binary and `K` is the largest label seen.
pub fn read_dataset(path: &Path) -> Result<(MixedDataset, DatasetManifest)> {
    let mpath = manifest_path(path);
    let manifest: Option<DatasetManifest> = if mpath.exists() {
        Some(read_json(&mpath)?)
    } else {
        None
    };
    let mut rdr = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let header: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
    if header.first().map(String::as_str) != Some("label") {
        return Err(Error::Parse("first column must be `label`".into()));
    }
    let has_gold = header.get(1).map(String::as_str) == Some("gold_label");
    let offset = 1 + usize::from(has_gold);
    let feature_names = &header[offset..];
    let columns: Vec<ColumnSpec> = match &manifest {
        Some(m) => {
            if m.columns.len() != feature_names.len()
                || m.columns.iter().zip(feature_names).any(|(c, h)| &c.name != h)
            {
                return Err(Error::Parse("header does not match the manifest columns".into()));
            }
            if m.has_gold != has_gold {
                return Err(Error::Parse("gold_label column disagrees with the manifest".into()));
            }
            m.columns.clone()
        }
        None => feature_names
            .iter()
            .map(|name| ColumnSpec {
                name: name.clone(),
                kind: ColumnKind::Binary,
            })
            .collect(),
    };
    let binary_idx: Vec<usize> = (0..columns.len()).filter(|&c| columns[c].kind == ColumnKind::Binary).collect();
    let cont_idx: Vec<usize> = (0..columns.len()).filter(|&c| columns[c].kind == ColumnKind::Continuous).collect();

    let (mut y, mut gold, mut xs, mut zs) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::Parse(format!(
                "row {}: expected {} fields, found {}",
                row + 1,
                header.len(),
                record.len()
            )));
        }
        y.push(parse_label(&record[0], row, "label")?);
        if has_gold {
            gold.push(parse_label(&record[1], row, "gold_label")?);
        }
        for &c in &binary_idx {
            let field = record[offset + c].trim();
            let v: u8 = field.parse().map_err(|_| {
                Error::Parse(format!("row {}: feature {:?} is not 0/1: {field:?}", row + 1, columns[c].name))
            })?;
            xs.push(v);
        }
        for &c in &cont_idx {
            let field = record[offset + c].trim();
            let v: f64 = field.parse().map_err(|_| {
                Error::Parse(format!("row {}: feature {:?} is not a number: {field:?}", row + 1, columns[c].name))
            })?;
            zs.push(v);
        }
    }
    let n = y.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let k = match &manifest {
        Some(m) => m.k,
        None => {
            let k = y.iter().chain(&gold).max().map_or(1, |m| m + 1);
            log::warn!("no manifest next to {}; assuming K = {k}", path.display());
            k
        }
    };
    let x = Array2::from_shape_vec((n, binary_idx.len()), xs).expect("row-major fill");
    let z = Array2::from_shape_vec((n, cont_idx.len()), zs).expect("row-major fill");
    let binary = LabeledDataset::new(x, y, has_gold.then_some(gold), k)?;
    let data = MixedDataset::new(binary, z)?;
    let manifest = match manifest {
        Some(m) => {
            if m.n != n || m.d != data.d1() || m.d2 != data.d2() {
                return Err(Error::Parse("dataset shape disagrees with the manifest".into()));
            }
            m
        }
        None => DatasetManifest {
            version: FORMAT_VERSION,
            n,
            d: data.d1(),
            d2: data.d2(),
            k,
            has_gold,
            label_names: None,
            columns,
            extra: None,
        },
    };
    Ok((data, manifest))
}

/// Summary of an EM run stored in a model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub iterations: usize,
    pub converged: bool,
    pub final_loglik: f64,
    pub restart_index: usize,
    pub restart_logliks: Vec<f64>,
}

impl From<&EmTrace> for TraceSummary {
    fn from(t: &EmTrace) -> Self {
        Self {
            iterations: t.iterations,
            converged: t.converged,
            final_loglik: t.final_loglik(),
            restart_index: t.restart_index,
            restart_logliks: t.restart_logliks.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifiabilitySummary {
    pub permutation: Vec<usize>,
    pub violating_columns: Vec<usize>,
}

impl From<&Identifiability> for IdentifiabilitySummary {
    fn from(i: &Identifiability) -> Self {
        Self {
            permutation: i.permutation.clone(),
            violating_columns: i.violating_columns.clone(),
        }
    }
}

/// Continuous block of a model document; rows are features, columns classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSection {
    pub mu: Vec<Vec<f64>>,
    pub sigma: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_names: Option<Vec<String>>,
    /// Training means and scales subtracted and divided out before fitting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardization: Option<Standardization>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

/// A fitted model as stored on disk. `p[j][k]` and `rho[a][b]` follow the
/// in-memory layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub version: u32,
    pub method: String,
    pub k: usize,
    pub d: usize,
    pub pi: Vec<f64>,
    pub p: Vec<Vec<f64>>,
    pub rho: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_names: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_names: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identifiability: Option<IdentifiabilitySummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaussian: Option<GaussianSection>,
}

fn rows_of(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn matrix_of(rows: &[Vec<f64>], ncols: usize, what: &'static str) -> Result<Array2<f64>> {
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::ShapeMismatch {
            what,
            expected: ncols,
            found: bad.len(),
        });
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(Array2::from_shape_vec((rows.len(), ncols), flat).expect("checked row lengths"))
}

impl ModelDocument {
    pub fn new(method: impl Into<String>, params: &ModelParams) -> Self {
        Self {
            version: FORMAT_VERSION,
            method: method.into(),
            k: params.k(),
            d: params.d(),
            pi: params.pi().to_vec(),
            p: rows_of(params.p()),
            rho: rows_of(params.rho()),
            feature_names: None,
            label_names: None,
            trace: None,
            identifiability: None,
            gaussian: None,
        }
    }

    pub fn with_gaussian(mut self, g: &GaussianParams, names: Option<Vec<String>>) -> Self {
        self.gaussian = Some(GaussianSection {
            mu: rows_of(g.mu()),
            sigma: rows_of(g.sigma()),
            feature_names: names,
            standardization: None,
        });
        self
    }

    /// Validated parameters.
    pub fn params(&self) -> Result<ModelParams> {
        if self.version != FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported model version {}", self.version)));
        }
        let p = matrix_of(&self.p, self.k, "p columns")?;
        if p.nrows() != self.d {
            return Err(Error::ShapeMismatch {
                what: "p rows",
                expected: self.d,
                found: p.nrows(),
            });
        }
        let rho = matrix_of(&self.rho, self.k, "rho columns")?;
        ModelParams::new(Array1::from(self.pi.clone()), p, rho)
    }

    pub fn gaussian_params(&self) -> Result<GaussianParams> {
        match &self.gaussian {
            None => Ok(GaussianParams::empty(self.k)),
            Some(g) => GaussianParams::new(
                matrix_of(&g.mu, self.k, "mu columns")?,
                matrix_of(&g.sigma, self.k, "sigma columns")?,
            ),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

pub fn write_model(path: &Path, doc: &ModelDocument) -> Result<()> {
    write_json(path, doc)
}

pub fn read_model(path: &Path) -> Result<ModelDocument> {
    let doc: ModelDocument = read_json(path)?;
    doc.params()?;
    doc.gaussian_params()?;
    Ok(doc)
}

/// `iteration,loglik`, iteration 0 being the initial parameters.
pub fn write_trace(path: &Path, trace: &EmTrace) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["iteration", "loglik"])?;
    for (i, ll) in trace.loglik_history.iter().enumerate() {
        wtr.write_record([i.to_string(), ll.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.records()
        .map(|r| {
            let r = r?;
            r.get(1)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Parse("bad trace row".into()))
        })
        .collect()
}

/// `token,df,score`.
pub fn write_dictionary(path: &Path, dict: &Dictionary) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["token", "df", "score"])?;
    for t in dict.terms() {
        wtr.write_record([t.token.clone(), t.document_frequency.to_string(), t.score.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_dictionary(path: &Path) -> Result<Dictionary> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut terms = Vec::new();
    for r in rdr.records() {
        let r = r?;
        let bad = || Error::Parse(format!("bad dictionary row {:?}", r));
        terms.push(Term {
            token: r.get(0).ok_or_else(bad)?.to_string(),
            document_frequency: r.get(1).and_then(|v| v.parse().ok()).ok_or_else(bad)?,
            score: r.get(2).and_then(|v| v.parse().ok()).ok_or_else(bad)?,
        });
    }
    Dictionary::new(terms)
}

/// Predictions with normalized log posteriors: `predicted,logp_1,…,logp_K`.
pub fn write_predictions(path: &Path, rows: &[PosteriorRow]) -> Result<()> {
    write_predictions_to(BufWriter::new(File::create(path)?), rows)
}

pub fn write_predictions_to<W: Write>(writer: W, rows: &[PosteriorRow]) -> Result<()> {
    let k = rows.first().map_or(0, |r| r.log_probabilities.len());
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["predicted".to_string()];
    header.extend((1..=k).map(|c| format!("logp_{c}")));
    wtr.write_record(&header)?;
    for r in rows {
        let mut rec = vec![(r.predicted + 1).to_string()];
        rec.extend(r.log_probabilities.iter().map(|v| v.to_string()));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Predicted labels (0-based) and, when present, the `n × K` score matrix.
pub fn read_predictions(path: &Path) -> Result<(Vec<usize>, Option<Array2<f64>>)> {
    let mut rdr = csv::Reader::from_path(path)?;
    let k = rdr.headers()?.len().saturating_sub(1);
    let (mut pred, mut scores) = (Vec::new(), Vec::new());
    for (row, r) in rdr.records().enumerate() {
        let r = r?;
        pred.push(parse_label(&r[0], row, "predicted")?);
        for c in 1..=k {
            let v: f64 = r[c]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("row {}: bad score {:?}", row + 1, &r[c])))?;
            scores.push(v);
        }
    }
    let scores = (k > 0).then(|| Array2::from_shape_vec((pred.len(), k), scores).expect("row-major fill"));
    Ok((pred, scores))
}

/// One `fpr,tpr` file per class: `<prefix>_class<k>.csv` (1-based). Returns the paths.
pub fn write_roc(prefix: &Path, curves: &[ClassRoc]) -> Result<Vec<PathBuf>> {
    let stem = prefix
        .file_name()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::InvalidConfig(format!("bad ROC prefix {}", prefix.display())))?;
    let mut paths = Vec::new();
    for roc in curves {
        let path = prefix.with_file_name(format!("{stem}_class{}.csv", roc.class + 1));
        let mut wtr = csv::Writer::from_path(&path)?;
        wtr.write_record(["fpr", "tpr"])?;
        for (f, t) in &roc.points {
            wtr.write_record([f.to_string(), t.to_string()])?;
        }
        wtr.flush()?;
        paths.push(path);
    }
    Ok(paths)
}
