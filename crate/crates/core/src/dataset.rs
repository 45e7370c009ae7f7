//! Dataset records and their TSV file format.
//!
//! One record per line: `id<TAB>sentence<TAB>code`, tokens joined by single
//! spaces. Record ids carry the origin: `S…` for synthesized pairs, `P…` for
//! paraphrases, and a `-k` suffix for the k-th augmentation of a pair.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::DatasetError;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DatasetRecord {
    pub id: String,
    pub sentence: Vec<String>,
    pub code: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Synthesized,
    Paraphrase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Origin {
    pub source: Source,
    /// `None` for a placeholder-form pair.
    pub augmentation: Option<u32>,
}

impl DatasetRecord {
    pub fn new(id: impl Into<String>, sentence: &str, code: &str) -> Self {
        DatasetRecord {
            id: id.into(),
            sentence: sentence.split_whitespace().map(str::to_string).collect(),
            code: code.split_whitespace().map(str::to_string).collect(),
        }
    }

    pub fn sentence_text(&self) -> String {
        self.sentence.join(" ")
    }

    pub fn code_text(&self) -> String {
        self.code.join(" ")
    }

    pub fn to_line(&self) -> String {
        format!("{}\t{}\t{}", self.id, self.sentence_text(), self.code_text())
    }

    /// Id of the placeholder-form pair this record came from.
    pub fn base_id(&self) -> &str {
        self.id.split_once('-').map_or(&self.id, |(b, _)| b)
    }

    pub fn origin(&self) -> Origin {
        let source = if self.id.starts_with('P') {
            Source::Paraphrase
        } else {
            Source::Synthesized
        };
        let augmentation = self.id.split_once('-').and_then(|(_, k)| k.parse().ok());
        Origin { source, augmentation }
    }

    pub fn has_placeholders(&self) -> bool {
        self.sentence.iter().chain(&self.code).any(|t| t.starts_with("VALUE_"))
    }
}

pub fn synthesized_id(index: usize) -> String {
    format!("S{index:06}")
}

pub fn paraphrase_id(index: usize) -> String {
    format!("P{index:06}")
}

/// Parses one TSV line. `line` is 1-based, for error messages.
pub fn parse_line(text: &str, line: usize) -> Result<DatasetRecord, DatasetError> {
    let fmt = |message: &str| DatasetError::Format {
        line,
        message: message.to_string(),
    };
    let mut cols = text.split('\t');
    let (Some(id), Some(sentence), Some(code), None) = (cols.next(), cols.next(), cols.next(), cols.next()) else {
        return Err(fmt("expected exactly three tab-separated columns"));
    };
    if id.is_empty() || id.contains(char::is_whitespace) {
        return Err(fmt("invalid record id"));
    }
    let rec = DatasetRecord::new(id, sentence, code);
    if rec.sentence.is_empty() || rec.code.is_empty() {
        return Err(fmt("empty sentence or code"));
    }
    Ok(rec)
}

pub fn to_tsv(records: &[DatasetRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_line());
        out.push('\n');
    }
    out
}

pub fn from_tsv(text: &str) -> Result<Vec<DatasetRecord>, DatasetError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_line(l, i + 1))
        .collect()
}

pub fn emit(records: &[DatasetRecord], path: &Path) -> Result<(), DatasetError> {
    let io = |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    f.write_all(to_tsv(records).as_bytes()).map_err(io)?;
    f.flush().map_err(io)
}

pub fn load(path: &Path) -> Result<Vec<DatasetRecord>, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    from_tsv(&text)
}

/// Quoted string literals of a code token list, as word sequences.
pub fn quoted_spans(code: &[String]) -> Vec<&[String]> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, t) in code.iter().enumerate() {
        if t == "\"" {
            match start.take() {
                None => start = Some(i + 1),
                Some(s) => out.push(&code[s..i]),
            }
        }
    }
    out
}

/// Every quoted literal of the code occurs as a contiguous run of sentence tokens.
pub fn is_copyable(record: &DatasetRecord) -> bool {
    quoted_spans(&record.code)
        .into_iter()
        .all(|span| span.is_empty() || record.sentence.windows(span.len()).any(|w| w == span))
}

/// Seeded split by ratio. Records sharing a base id stay in the same part.
pub fn split(records: &[DatasetRecord], ratios: &[f64], seed: u64) -> Vec<Vec<DatasetRecord>> {
    let mut groups: Vec<&str> = records.iter().map(|r| r.base_id()).collect();
    groups.sort_unstable();
    groups.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    groups.shuffle(&mut rng);
    let total: f64 = ratios.iter().sum();
    let n = groups.len();
    let mut part_of = std::collections::HashMap::new();
    let mut acc = 0.0;
    let mut start = 0;
    for (p, r) in ratios.iter().enumerate() {
        acc += r;
        let end = if p + 1 == ratios.len() {
            n
        } else {
            ((acc / total) * n as f64).round() as usize
        };
        for g in &groups[start..end.max(start)] {
            part_of.insert(*g, p);
        }
        start = end.max(start);
    }
    let mut parts = vec![Vec::new(); ratios.len()];
    for r in records {
        parts[part_of[r.base_id()]].push(r.clone());
    }
    parts
}
