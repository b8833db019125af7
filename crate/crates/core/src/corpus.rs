//! Manuscript → concepts corpus: ingestion, label interning and year slicing.
//!
//! Input is JSON Lines, one manuscript per line:
//!
//! ```text
//! {"id": "0704.0001", "date": "2007-04-02", "concepts": ["Energy", "Dark matter"]}
//! ```
//!
//! Malformed lines are rejected with a reason and counted; ingestion keeps
//! going unless more than half of the lines are bad.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense concept identifier, contiguous `0..V` within one corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConceptId(pub u32);

impl ConceptId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Bijective label ↔ id map.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    labels: Vec<String>,
    index: HashMap<String, ConceptId>,
}

impl Vocabulary {
    pub fn intern(&mut self, label: &str) -> ConceptId {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = ConceptId(self.labels.len() as u32);
        self.labels.push(label.to_owned());
        self.index.insert(label.to_owned(), id);
        id
    }

    pub fn get(&self, label: &str) -> Option<ConceptId> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: ConceptId) -> &str {
        &self.labels[id.index()]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Trims, collapses internal whitespace runs to one space, keeps case.
pub fn normalize_label(raw: &str) -> String {
    raw.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// How labels are cleaned before interning.
#[derive(Debug, Clone, Default)]
pub struct Normalization {
    /// Normalized labels dropped from every manuscript (generic concepts).
    pub stop_list: Option<HashSet<String>>,
}

impl Normalization {
    pub fn with_stop_list_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let stop_list = text
            .lines()
            .map(normalize_label)
            .filter(|l| !l.is_empty())
            .collect();
        Ok(Normalization {
            stop_list: Some(stop_list),
        })
    }

    fn is_stopped(&self, label: &str) -> bool {
        self.stop_list.as_ref().is_some_and(|s| s.contains(label))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManuscriptRecord {
    pub manuscript_id: String,
    pub date: NaiveDate,
    /// Sorted, deduplicated.
    pub concepts: Vec<ConceptId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    InvalidJson,
    InvalidDate,
    EmptyLabel,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RejectReason::InvalidJson => "invalid_json",
            RejectReason::InvalidDate => "invalid_date",
            RejectReason::EmptyLabel => "empty_label",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Provenance {
    pub source: Option<PathBuf>,
    /// RFC 3339 wall-clock time of ingestion.
    pub ingested_at: Option<String>,
    pub accepted: usize,
    pub rejected: BTreeMap<RejectReason, usize>,
    /// Year this corpus was sliced to, if any.
    pub slice_year: Option<i32>,
    pub empty_slice: bool,
}

impl Provenance {
    pub fn rejected_total(&self) -> usize {
        self.rejected.values().sum()
    }
}

/// An immutable corpus of manuscripts over an interned vocabulary.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    records: Vec<ManuscriptRecord>,
    vocabulary: Vocabulary,
    provenance: Provenance,
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    date: String,
    concepts: Vec<String>,
}

#[derive(Serialize)]
struct OutRecord<'a> {
    id: &'a str,
    date: String,
    concepts: Vec<&'a str>,
}

/// JSON summary written next to every ingested or sliced corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub records: usize,
    pub vocabulary_size: usize,
    pub rejected: BTreeMap<RejectReason, usize>,
    pub records_per_year: BTreeMap<i32, usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub slice_year: Option<i32>,
    pub empty: bool,
}

impl Corpus {
    /// Accumulates records one by one; used by ingestion and by generators.
    pub fn builder(normalization: Normalization) -> CorpusBuilder {
        CorpusBuilder {
            normalization,
            corpus: Corpus::default(),
        }
    }

    pub fn records(&self) -> &[ManuscriptRecord] {
        &self.records
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn concept_labels(&self, record: &ManuscriptRecord) -> Vec<&str> {
        record
            .concepts
            .iter()
            .map(|&c| self.vocabulary.label(c))
            .collect()
    }

    pub fn years(&self) -> Vec<i32> {
        let mut years: Vec<i32> = self.records.iter().map(|r| r.date.year()).collect();
        years.sort_unstable();
        years.dedup();
        years
    }

    /// Sub-corpus of the records dated within `year`, re-interned densely.
    pub fn slice_by_year(&self, year: i32) -> Result<Corpus> {
        if !(1000..=9999).contains(&year) {
            return Err(Error::Contract(format!(
                "year must have four digits, got {year}"
            )));
        }
        let mut vocabulary = Vocabulary::default();
        let mut records = Vec::new();
        for r in self.records.iter().filter(|r| r.date.year() == year) {
            let mut concepts: Vec<ConceptId> = r
                .concepts
                .iter()
                .map(|&c| vocabulary.intern(self.vocabulary.label(c)))
                .collect();
            concepts.sort_unstable();
            records.push(ManuscriptRecord {
                manuscript_id: r.manuscript_id.clone(),
                date: r.date,
                concepts,
            });
        }
        let provenance = Provenance {
            source: self.provenance.source.clone(),
            ingested_at: self.provenance.ingested_at.clone(),
            accepted: records.len(),
            rejected: BTreeMap::new(),
            slice_year: Some(year),
            empty_slice: records.is_empty(),
        };
        Ok(Corpus {
            records,
            vocabulary,
            provenance,
        })
    }

    pub fn summary(&self) -> CorpusSummary {
        let mut records_per_year = BTreeMap::new();
        for r in &self.records {
            *records_per_year.entry(r.date.year()).or_insert(0) += 1;
        }
        CorpusSummary {
            records: self.records.len(),
            vocabulary_size: self.vocabulary.len(),
            rejected: self.provenance.rejected.clone(),
            records_per_year,
            slice_year: self.provenance.slice_year,
            empty: self.records.is_empty(),
        }
    }

    /// Emits the corpus in the ingestion format (line order preserved).
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            let rec = OutRecord {
                id: &r.manuscript_id,
                date: r.date.format("%Y-%m-%d").to_string(),
                concepts: self.concept_labels(r),
            };
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }
}

pub struct CorpusBuilder {
    normalization: Normalization,
    corpus: Corpus,
}

impl CorpusBuilder {
    /// Adds one manuscript. Labels are normalized, stop-listed labels are
    /// dropped and duplicates collapse.
    pub fn push<S: AsRef<str>>(
        &mut self,
        manuscript_id: impl Into<String>,
        date: NaiveDate,
        labels: &[S],
    ) -> Result<(), RejectReason> {
        let mut normalized = Vec::with_capacity(labels.len());
        for raw in labels {
            let label = normalize_label(raw.as_ref());
            if label.is_empty() {
                return Err(RejectReason::EmptyLabel);
            }
            if !self.normalization.is_stopped(&label) {
                normalized.push(label);
            }
        }
        let mut concepts: Vec<ConceptId> = normalized
            .iter()
            .map(|l| self.corpus.vocabulary.intern(l))
            .collect();
        concepts.sort_unstable();
        concepts.dedup();
        self.corpus.records.push(ManuscriptRecord {
            manuscript_id: manuscript_id.into(),
            date,
            concepts,
        });
        self.corpus.provenance.accepted += 1;
        Ok(())
    }

    pub fn reject(&mut self, reason: RejectReason) {
        *self.corpus.provenance.rejected.entry(reason).or_insert(0) += 1;
    }

    pub fn build(self) -> Corpus {
        self.corpus
    }
}

/// Reads a JSON Lines corpus from `path`.
pub fn ingest_corpus(path: impl AsRef<Path>, normalization: Normalization) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut corpus = ingest_reader(BufReader::new(file), normalization)
        .map_err(|e| match e {
            Error::Stream(source) => Error::io(path, source),
            other => other,
        })?;
    corpus.provenance.source = Some(path.to_path_buf());
    Ok(corpus)
}

/// Same as [`ingest_corpus`] over any buffered reader.
pub fn ingest_reader<R: BufRead>(reader: R, normalization: Normalization) -> Result<Corpus> {
    let mut builder = Corpus::builder(normalization);
    let mut lines = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        lines += 1;
        let outcome = parse_line(&line).and_then(|(raw, date)| {
            builder.push(raw.id, date, &raw.concepts)
        });
        if let Err(reason) = outcome {
            log::debug!("line {}: rejected ({reason})", lineno + 1);
            builder.reject(reason);
        }
    }
    let mut corpus = builder.build();
    let rejected = corpus.provenance.rejected_total();
    if rejected * 2 > lines {
        return Err(Error::CorruptCorpus { rejected, lines });
    }
    corpus.provenance.ingested_at = Some(chrono::Utc::now().to_rfc3339());
    Ok(corpus)
}

fn parse_line(line: &str) -> Result<(RawRecord, NaiveDate), RejectReason> {
    let raw: RawRecord = serde_json::from_str(line).map_err(|_| RejectReason::InvalidJson)?;
    let date = NaiveDate::parse_from_str(raw.date.trim(), "%Y-%m-%d")
        .map_err(|_| RejectReason::InvalidDate)?;
    Ok((raw, date))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ingest_str(s: &str) -> Result<Corpus> {
        ingest_reader(s.as_bytes(), Normalization::default())
    }

    #[test]
    fn three_valid_lines() {
        let c = ingest_str(
            r#"{"id":"a","date":"2013-01-01","concepts":["A"]}
{"id":"b","date":"2013-02-01","concepts":["B"]}
{"id":"c","date":"2015-03-01","concepts":[]}
"#,
        )
        .unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.provenance().rejected_total(), 0);
        assert!(c.records()[2].concepts.is_empty());
    }

    #[test]
    fn duplicate_labels_collapse() {
        let c = ingest_str(r#"{"id":"a","date":"2013-01-01","concepts":["A","A","B"]}"#).unwrap();
        assert_eq!(c.records()[0].concepts.len(), 2);
        assert_eq!(c.vocabulary().len(), 2);
    }

    #[test]
    fn labels_normalized_case_preserved() {
        let c = ingest_str(
            r#"{"id":"a","date":"2013-01-01","concepts":["  Dark   matter ","Dark matter","dark matter"]}"#,
        )
        .unwrap();
        assert_eq!(c.vocabulary().labels(), ["Dark matter", "dark matter"]);
    }

    #[test]
    fn rejects_are_counted_by_reason() {
        let c = ingest_str(
            r#"{"id":"a","date":"2013-01-01","concepts":["A"]}
{"id":"b","date":"2013-02-30","concepts":["B"]}
{"id":"c","date":"2013-02-01","concepts":["C"]}
not json
{"id":"d","date":"2013-02-01","concepts":["D"]}
"#,
        )
        .unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.provenance().rejected[&RejectReason::InvalidDate], 1);
        assert_eq!(c.provenance().rejected[&RejectReason::InvalidJson], 1);
    }

    #[test]
    fn mostly_broken_file_is_fatal() {
        let err = ingest_str(
            r#"{"id":"a","date":"2013-01-01","concepts":["A"]}
garbage
more garbage
"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::CorruptCorpus { rejected: 2, lines: 3 }));
    }

    #[test]
    fn missing_file_names_path() {
        let err = ingest_corpus("/nonexistent/corpus.jsonl", Normalization::default()).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/corpus.jsonl"));
    }

    #[test]
    fn stop_list_drops_labels() {
        let norm = Normalization {
            stop_list: Some(["Energy".to_string()].into_iter().collect()),
        };
        let c = ingest_reader(
            r#"{"id":"a","date":"2013-01-01","concepts":["Energy","Mass"]}"#.as_bytes(),
            norm,
        )
        .unwrap();
        assert_eq!(c.vocabulary().labels(), ["Mass"]);
    }

    #[test]
    fn slice_keeps_only_year_and_its_concepts() {
        let c = ingest_str(
            r#"{"id":"a","date":"2013-05-01","concepts":["A","B"]}
{"id":"b","date":"2015-02-02","concepts":["C"]}
"#,
        )
        .unwrap();
        let s = c.slice_by_year(2013).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.vocabulary().labels(), ["A", "B"]);
        let empty = c.slice_by_year(2014).unwrap();
        assert!(empty.is_empty());
        assert_eq!(empty.vocabulary().len(), 0);
        assert!(empty.provenance().empty_slice);
        assert!(c.slice_by_year(99).is_err());
    }

    #[test]
    fn jsonl_round_trip() {
        let src = r#"{"id":"a","date":"2013-05-01","concepts":["B","A"]}
{"id":"b","date":"2015-02-02","concepts":[]}
"#;
        let c = ingest_str(src).unwrap();
        let mut buf = Vec::new();
        c.write_jsonl(&mut buf).unwrap();
        let again = ingest_reader(buf.as_slice(), Normalization::default()).unwrap();
        assert_eq!(again.records(), c.records());
        assert_eq!(again.vocabulary().labels(), c.vocabulary().labels());
    }
}
