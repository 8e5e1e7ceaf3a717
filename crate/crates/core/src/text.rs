//! Bag-of-words featurization: tokenization, a TF-IDF ranked dictionary,
//! binary presence features and synthetic label noise.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::Read;
use std::path::Path;

use ndarray::Array2;
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

/// One labeled document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub label: usize,
}

/// Documents with labels in `0..label_names.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    documents: Vec<Document>,
    label_names: Vec<String>,
}

impl Corpus {
    pub fn new(documents: Vec<Document>, label_names: Vec<String>) -> Result<Self> {
        let k = label_names.len();
        let mut seen = HashSet::new();
        for (row, doc) in documents.iter().enumerate() {
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::Parse(format!("duplicate document id {:?}", doc.id)));
            }
            if doc.label >= k {
                return Err(Error::InvalidLabel {
                    row,
                    label: doc.label + 1,
                    k,
                });
            }
        }
        Ok(Self {
            documents,
            label_names,
        })
    }

    /// Reads `<root>/<label>/<docid>.txt`. Labels are the subdirectory names in
    /// lexicographic order; document ids are `<label>/<file stem>`.
    pub fn from_dir(root: &Path) -> Result<Self> {
        let mut label_dirs: Vec<_> = fs::read_dir(root)?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().is_dir())
            .map(|e| e.path())
            .collect();
        label_dirs.sort();
        let mut label_names = Vec::new();
        let mut documents = Vec::new();
        for (label, dir) in label_dirs.iter().enumerate() {
            let name = dir
                .file_name()
                .and_then(|n| n.to_str())
                .ok_or_else(|| Error::Parse(format!("bad label directory {}", dir.display())))?
                .to_string();
            let mut files: Vec<_> = fs::read_dir(dir)?
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|x| x == "txt"))
                .collect();
            files.sort();
            for file in files {
                let mut bytes = Vec::new();
                fs::File::open(&file)?.read_to_end(&mut bytes)?;
                let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
                documents.push(Document {
                    id: format!("{name}/{stem}"),
                    text: String::from_utf8_lossy(&bytes).into_owned(),
                    label,
                });
            }
            label_names.push(name);
        }
        if documents.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Self::new(documents, label_names)
    }

    /// Reads a two-column delimited file `label,text` with a header row.
    /// Labels are the distinct label strings in lexicographic order; ids are row numbers.
    pub fn from_delimited<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record?;
            if record.len() != 2 {
                return Err(Error::Parse(format!(
                    "expected 2 columns (label, text), found {}",
                    record.len()
                )));
            }
            rows.push((record[0].to_string(), record[1].to_string()));
        }
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let names: BTreeMap<&str, usize> = rows
            .iter()
            .map(|(l, _)| l.as_str())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(i, l)| (l, i))
            .collect();
        let documents = rows
            .iter()
            .enumerate()
            .map(|(i, (l, t))| Document {
                id: (i + 1).to_string(),
                text: t.clone(),
                label: names[l.as_str()],
            })
            .collect();
        let label_names = names.keys().map(|s| s.to_string()).collect();
        Self::new(documents, label_names)
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn k(&self) -> usize {
        self.label_names.len()
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.documents.iter().map(|d| d.label).collect()
    }
}

/// Lowercases, splits on every non-alphanumeric character and drops tokens
/// shorter than `min_len` characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tokenizer {
    pub min_len: usize,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Self { min_len: 2 }
    }
}

impl Tokenizer {
    pub fn tokenize<'a>(&self, text: &'a str) -> impl Iterator<Item = String> + 'a {
        let min_len = self.min_len;
        text.split(|c: char| !c.is_alphanumeric())
            .filter(move |t| !t.is_empty() && t.chars().count() >= min_len)
            .map(|t| t.to_lowercase())
    }
}

/// A ranked dictionary entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub token: String,
    pub document_frequency: usize,
    /// Largest `tf · idf` over the documents.
    pub score: f64,
}

/// Kept terms, highest score first; the order fixes the feature columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dictionary {
    terms: Vec<Term>,
    index: HashMap<String, usize>,
}

impl Dictionary {
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        let mut index = HashMap::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            if index.insert(t.token.clone(), i).is_some() {
                return Err(Error::Parse(format!("duplicate dictionary token {:?}", t.token)));
            }
        }
        Ok(Self { terms, index })
    }

    /// A dictionary over the given tokens in the given order, without statistics.
    pub fn from_tokens<S: AsRef<str>>(tokens: &[S]) -> Result<Self> {
        Self::new(
            tokens
                .iter()
                .map(|t| Term {
                    token: t.as_ref().to_lowercase(),
                    document_frequency: 0,
                    score: 0.0,
                })
                .collect(),
        )
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn tokens(&self) -> Vec<String> {
        self.terms.iter().map(|t| t.token.clone()).collect()
    }
}

/// Ranks every token by its largest `tf · ln(N / df)` over the documents and
/// keeps the `k_top` best. Ties go to the lexicographically smaller token.
pub fn build_dictionary(corpus: &Corpus, k_top: usize, tokenizer: &Tokenizer) -> Result<Dictionary> {
    if corpus.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let counts: Vec<HashMap<String, usize>> = corpus
        .documents()
        .par_iter()
        .map(|doc| {
            let mut c = HashMap::new();
            for tok in tokenizer.tokenize(&doc.text) {
                *c.entry(tok).or_insert(0) += 1;
            }
            c
        })
        .collect();
    // token -> (df, max tf)
    let mut stats: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for doc in &counts {
        for (tok, &tf) in doc {
            let e = stats.entry(tok.as_str()).or_insert((0, 0));
            e.0 += 1;
            e.1 = e.1.max(tf);
        }
    }
    let n_docs = corpus.len() as f64;
    let mut terms: Vec<Term> = stats
        .into_iter()
        .map(|(tok, (df, max_tf))| Term {
            token: tok.to_string(),
            document_frequency: df,
            score: max_tf as f64 * (n_docs / df as f64).ln(),
        })
        .collect();
    terms.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.token.cmp(&b.token)));
    if k_top > terms.len() {
        log::warn!(
            "requested {k_top} terms but the vocabulary has only {}; keeping all",
            terms.len()
        );
    }
    terms.truncate(k_top);
    Dictionary::new(terms)
}

/// `x_ij = 1` iff term `j` occurs in document `i`; observed labels are the corpus labels.
pub fn binarize(corpus: &Corpus, dict: &Dictionary, tokenizer: &Tokenizer) -> Result<LabeledDataset> {
    let (n, d) = (corpus.len(), dict.len());
    let rows: Vec<Vec<u8>> = corpus
        .documents()
        .par_iter()
        .map(|doc| {
            let mut row = vec![0u8; d];
            for tok in tokenizer.tokenize(&doc.text) {
                if let Some(j) = dict.index_of(&tok) {
                    row[j] = 1;
                }
            }
            row
        })
        .collect();
    let x = Array2::from_shape_vec((n, d), rows.concat()).expect("rows have d entries");
    LabeledDataset::new(x, corpus.labels(), None, corpus.k().max(1))
}

/// Flips `round(rate · n)` labels chosen uniformly without replacement, each to
/// a uniformly chosen different class.
pub fn inject_label_noise(labels: &[usize], rate: f64, k: usize, seed: u64) -> Result<Vec<usize>> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidConfig(format!("noise rate {rate} outside [0, 1)")));
    }
    if let Some(row) = labels.iter().position(|&y| y >= k) {
        return Err(Error::InvalidLabel {
            row,
            label: labels[row] + 1,
            k,
        });
    }
    let n = labels.len();
    let flips = (rate * n as f64).round() as usize;
    if flips == 0 {
        return Ok(labels.to_vec());
    }
    if k < 2 {
        return Err(Error::InvalidConfig(
            "label noise needs at least two classes".into(),
        ));
    }
    let mut rng = stream(seed, Purpose::LabelNoise, 0);
    let mut out = labels.to_vec();
    let mut chosen = sample(&mut rng, n, flips).into_vec();
    chosen.sort_unstable();
    for i in chosen {
        let r = rng.random_range(0..k - 1);
        out[i] = if r >= labels[i] { r + 1 } else { r };
    }
    Ok(out)
}
