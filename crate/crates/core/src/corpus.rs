//! Document model, annotation layers and the JSONL corpus format.
//!
//! Offsets everywhere in this crate count Unicode scalar values (Rust
//! `char`s), never bytes or UTF-16 units.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policy::{Decision, SubjectRole};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed JSON: {message}")]
    Json { line: usize, message: String },
    #[error("line {line}: invalid value for field `{field}`: {message}")]
    Field {
        line: usize,
        field: String,
        message: String,
    },
    #[error("span out of bounds in {doc_id}: [{start}, {end}) exceeds text length {len}")]
    SpanOutOfBounds {
        doc_id: String,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("invalid document {doc_id}: {message}")]
    Invalid { doc_id: String, message: String },
    #[error("duplicate document id {0}")]
    DuplicateId(String),
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Five-level call-for-action label attached to a document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CallForActionLevel {
    Negative,
    Low,
    Moderate,
    High,
    VeryHigh,
}

impl CallForActionLevel {
    pub const ALL: [CallForActionLevel; 5] = [
        CallForActionLevel::Negative,
        CallForActionLevel::Low,
        CallForActionLevel::Moderate,
        CallForActionLevel::High,
        CallForActionLevel::VeryHigh,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Named-entity tag of the fine-grained NER annotation layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NerLabel {
    #[serde(rename = "PER")]
    Per,
    #[serde(rename = "PER:IMG")]
    PerImg,
    #[serde(rename = "PER:REL")]
    PerRel,
    #[serde(rename = "COMP")]
    Comp,
    #[serde(rename = "LOC")]
    Loc,
    #[serde(rename = "LOC:IMG")]
    LocImg,
    #[serde(rename = "LOC:REL")]
    LocRel,
    #[serde(rename = "ORG")]
    Org,
    #[serde(rename = "ORG:MEDIA")]
    OrgMedia,
    #[serde(rename = "OTH:BOOK")]
    OthBook,
    #[serde(rename = "OTH:GAME")]
    OthGame,
    #[serde(rename = "OTH:MOVIE")]
    OthMovie,
    #[serde(rename = "OTH:MUSIC")]
    OthMusic,
    #[serde(rename = "OTH:DIS")]
    OthDis,
    #[serde(rename = "OTH:SYMB")]
    OthSymb,
    #[serde(rename = "OTH:EVENT")]
    OthEvent,
    #[serde(rename = "OTH:CONSPI")]
    OthConspi,
}

impl NerLabel {
    pub const ALL: [NerLabel; 17] = [
        NerLabel::Per,
        NerLabel::PerImg,
        NerLabel::PerRel,
        NerLabel::Comp,
        NerLabel::Loc,
        NerLabel::LocImg,
        NerLabel::LocRel,
        NerLabel::Org,
        NerLabel::OrgMedia,
        NerLabel::OthBook,
        NerLabel::OthGame,
        NerLabel::OthMovie,
        NerLabel::OthMusic,
        NerLabel::OthDis,
        NerLabel::OthSymb,
        NerLabel::OthEvent,
        NerLabel::OthConspi,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NerLabel::Per => "PER",
            NerLabel::PerImg => "PER:IMG",
            NerLabel::PerRel => "PER:REL",
            NerLabel::Comp => "COMP",
            NerLabel::Loc => "LOC",
            NerLabel::LocImg => "LOC:IMG",
            NerLabel::LocRel => "LOC:REL",
            NerLabel::Org => "ORG",
            NerLabel::OrgMedia => "ORG:MEDIA",
            NerLabel::OthBook => "OTH:BOOK",
            NerLabel::OthGame => "OTH:GAME",
            NerLabel::OthMovie => "OTH:MOVIE",
            NerLabel::OthMusic => "OTH:MUSIC",
            NerLabel::OthDis => "OTH:DIS",
            NerLabel::OthSymb => "OTH:SYMB",
            NerLabel::OthEvent => "OTH:EVENT",
            NerLabel::OthConspi => "OTH:CONSPI",
        }
    }

    /// Coarse family (PER, LOC, ORG, OTH, COMP) used by repartition tables.
    pub fn family(self) -> &'static str {
        match self {
            NerLabel::Per | NerLabel::PerImg | NerLabel::PerRel => "PER",
            NerLabel::Loc | NerLabel::LocImg | NerLabel::LocRel => "LOC",
            NerLabel::Org | NerLabel::OrgMedia => "ORG",
            NerLabel::Comp => "COMP",
            _ => "OTH",
        }
    }

    /// The personal-data category an externally annotated entity defaults to.
    ///
    /// Fictional, religious and cultural references carry no personal data
    /// and map to `None`.
    pub fn default_pii_category(self) -> Option<PiiCategory> {
        match self {
            NerLabel::Per => Some(PiiCategory::PersonName),
            NerLabel::Loc => Some(PiiCategory::Location),
            NerLabel::Org | NerLabel::OrgMedia | NerLabel::Comp => Some(PiiCategory::OrgName),
            NerLabel::OthMovie | NerLabel::OthMusic => Some(PiiCategory::MediaTitle),
            _ => None,
        }
    }
}

impl fmt::Display for NerLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NerLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NerLabel::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown NER label `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PiiCategory {
    PersonName,
    Username,
    Url,
    Email,
    Phone,
    Address,
    Location,
    OrgName,
    Hashtag,
    MediaTitle,
    Other,
}

impl PiiCategory {
    pub const ALL: [PiiCategory; 11] = [
        PiiCategory::PersonName,
        PiiCategory::Username,
        PiiCategory::Url,
        PiiCategory::Email,
        PiiCategory::Phone,
        PiiCategory::Address,
        PiiCategory::Location,
        PiiCategory::OrgName,
        PiiCategory::Hashtag,
        PiiCategory::MediaTitle,
        PiiCategory::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PiiCategory::PersonName => "PERSON_NAME",
            PiiCategory::Username => "USERNAME",
            PiiCategory::Url => "URL",
            PiiCategory::Email => "EMAIL",
            PiiCategory::Phone => "PHONE",
            PiiCategory::Address => "ADDRESS",
            PiiCategory::Location => "LOCATION",
            PiiCategory::OrgName => "ORG_NAME",
            PiiCategory::Hashtag => "HASHTAG",
            PiiCategory::MediaTitle => "MEDIA_TITLE",
            PiiCategory::Other => "OTHER",
        }
    }

    /// Category word used by the category-specific placeholder strategies.
    pub fn placeholder_word(self) -> &'static str {
        match self {
            PiiCategory::PersonName => "name",
            PiiCategory::Username => "username",
            PiiCategory::Url => "url",
            PiiCategory::Email => "email",
            PiiCategory::Phone => "phone",
            PiiCategory::Address | PiiCategory::Location => "location",
            PiiCategory::OrgName => "org",
            PiiCategory::Hashtag => "hashtag",
            PiiCategory::MediaTitle => "title",
            PiiCategory::Other => "other",
        }
    }
}

impl fmt::Display for PiiCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PiiCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PiiCategory::ALL
            .iter()
            .copied()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown PII category `{s}`"))
    }
}

/// Which component produced a span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Detector {
    Regex,
    Gazetteer,
    Standoff,
    Manual,
}

impl Detector {
    pub const ALL: [Detector; 4] = [
        Detector::Regex,
        Detector::Gazetteer,
        Detector::Standoff,
        Detector::Manual,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Detector::Regex => "regex",
            Detector::Gazetteer => "gazetteer",
            Detector::Standoff => "standoff",
            Detector::Manual => "manual",
        }
    }
}

impl FromStr for Detector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Detector::ALL
            .iter()
            .copied()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| format!("unknown detector `{s}`"))
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub ner_label: Option<NerLabel>,
    pub pii_category: Option<PiiCategory>,
    pub subject_role: Option<SubjectRole>,
    pub decision: Option<Decision>,
    pub replacement: Option<String>,
    pub detector: Detector,
    /// Reviewer flag: the span points at radical or private content.
    #[serde(default, skip_serializing_if = "is_false")]
    pub sensitive: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl EntitySpan {
    pub fn new(start: usize, end: usize, surface: impl Into<String>, detector: Detector) -> Self {
        EntitySpan {
            start,
            end,
            surface: surface.into(),
            ner_label: None,
            pii_category: None,
            subject_role: None,
            decision: None,
            replacement: None,
            detector,
            sensitive: false,
            note: None,
        }
    }

    pub fn with_category(mut self, category: PiiCategory) -> Self {
        self.pii_category = Some(category);
        self
    }

    pub fn with_ner_label(mut self, label: NerLabel) -> Self {
        self.ner_label = Some(label);
        self
    }

    pub fn with_role(mut self, role: SubjectRole) -> Self {
        self.subject_role = Some(role);
        self
    }

    pub fn with_decision(mut self, decision: Decision) -> Self {
        self.decision = Some(decision);
        self
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn overlaps(&self, other: &EntitySpan) -> bool {
        self.start < other.end && other.start < self.end
    }

    /// True once the span has been removed from the text by deletion.
    pub fn is_deleted(&self) -> bool {
        self.replacement.as_deref() == Some("")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub language: String,
    pub source: String,
    pub text: String,
    pub cfa_label: Option<CallForActionLevel>,
    pub spans: Vec<EntitySpan>,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

impl Document {
    pub fn new(id: impl Into<String>, language: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            language: language.into(),
            source: String::new(),
            text: text.into(),
            cfa_label: None,
            spans: Vec::new(),
            meta: BTreeMap::new(),
        }
    }

    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }

    /// Builds a span over `[start, end)` with its surface taken from the text.
    pub fn span(&self, start: usize, end: usize, detector: Detector) -> Option<EntitySpan> {
        char_slice(&self.text, start, end).map(|s| EntitySpan::new(start, end, s, detector))
    }

    /// Character offset of the first occurrence of `needle`, if any.
    pub fn find(&self, needle: &str) -> Option<(usize, usize)> {
        let byte = self.text.find(needle)?;
        let start = self.text[..byte].chars().count();
        Some((start, start + needle.chars().count()))
    }

    pub fn sort_spans(&mut self) {
        self.spans.sort_by_key(|s| (s.start, s.end));
    }

    /// Checks every structural invariant of the document.
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.id.is_empty() {
            return Err(CorpusError::Invalid {
                doc_id: self.id.clone(),
                message: "empty id".into(),
            });
        }
        let len = self.char_len();
        for span in &self.spans {
            if span.end > len || span.start > span.end {
                return Err(CorpusError::SpanOutOfBounds {
                    doc_id: self.id.clone(),
                    start: span.start,
                    end: span.end,
                    len,
                });
            }
            if span.start == span.end && !span.is_deleted() {
                return Err(CorpusError::Invalid {
                    doc_id: self.id.clone(),
                    message: format!("empty span at {} without a deletion record", span.start),
                });
            }
            if let Err(message) = check_decision_fields(span) {
                return Err(CorpusError::Invalid {
                    doc_id: self.id.clone(),
                    message,
                });
            }
        }
        if self.spans.windows(2).any(|w| w[0].start > w[1].start) {
            return Err(CorpusError::Invalid {
                doc_id: self.id.clone(),
                message: "spans not sorted by start offset".into(),
            });
        }
        let violations = slice_check(self);
        if let Some(first) = violations.into_iter().next() {
            return Err(CorpusError::Invalid {
                doc_id: self.id.clone(),
                message: first,
            });
        }
        Ok(())
    }
}

fn check_decision_fields(span: &EntitySpan) -> Result<(), String> {
    let at = || format!("[{}, {})", span.start, span.end);
    match (span.decision, span.replacement.as_deref()) {
        (Some(Decision::Keep), Some(_)) => Err(format!("kept span {} carries a replacement", at())),
        (Some(Decision::Pseudonymize | Decision::Invalidate), Some("")) if !span.is_empty() => {
            Err(format!("span {} has an empty replacement", at()))
        }
        (Some(Decision::Delete), Some(r)) if !r.is_empty() => {
            Err(format!("deleted span {} has a nonempty replacement", at()))
        }
        (Some(_), _) if span.decision != Some(Decision::Keep) && span.pii_category.is_none() => {
            Err(format!("span {} is not kept but has no PII category", at()))
        }
        _ => Ok(()),
    }
}

/// Slices `text` by character offsets.
pub fn char_slice(text: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut indices = text.char_indices().map(|(b, _)| b).chain(std::iter::once(text.len()));
    let from = indices.nth(start)?;
    let to = if end == start {
        from
    } else {
        indices.nth(end - start - 1)?
    };
    Some(&text[from..to])
}

/// Maps byte offsets to character offsets for one string.
pub(crate) struct CharIndex {
    /// Byte offset of every char boundary, including the end of the string.
    boundaries: Vec<usize>,
}

impl CharIndex {
    pub(crate) fn new(text: &str) -> Self {
        let mut boundaries: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        boundaries.push(text.len());
        CharIndex { boundaries }
    }

    pub(crate) fn char_of(&self, byte: usize) -> usize {
        self.boundaries
            .binary_search(&byte)
            .expect("byte offset on a char boundary")
    }
}

/// Reports surface mismatches, out-of-bounds spans and overlaps.
pub fn slice_check(doc: &Document) -> Vec<String> {
    let mut out = Vec::new();
    for span in &doc.spans {
        match char_slice(&doc.text, span.start, span.end) {
            None => out.push(format!(
                "span [{}, {}) out of bounds in {}",
                span.start, span.end, doc.id
            )),
            Some(slice) if slice != span.surface => out.push(format!(
                "span [{}, {}) surface {:?} does not match text slice {:?} in {}",
                span.start, span.end, span.surface, slice, doc.id
            )),
            Some(_) => {}
        }
    }
    let mut order: Vec<&EntitySpan> = doc.spans.iter().collect();
    order.sort_by_key(|s| (s.start, s.end));
    for (i, a) in order.iter().enumerate() {
        for b in &order[i + 1..] {
            if b.start >= a.end {
                break;
            }
            if a.overlaps(b) {
                out.push(format!(
                    "spans [{}, {}) {:?} and [{}, {}) {:?} overlap in {}",
                    a.start, a.end, a.surface, b.start, b.end, b.surface, doc.id
                ));
            }
        }
    }
    out
}

fn parse_line(line: &str, line_no: usize) -> Result<Document, CorpusError> {
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| CorpusError::Json {
        line: line_no,
        message: e.to_string(),
    })?;
    serde_path_to_error::deserialize(value).map_err(|e| CorpusError::Field {
        line: line_no,
        field: e.path().to_string(),
        message: e.into_inner().to_string(),
    })
}

/// Reads a JSONL corpus, one document per nonblank line.
pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<Document>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut doc = parse_line(&line, i + 1)?;
        doc.sort_spans();
        doc.validate()?;
        if !seen.insert(doc.id.clone()) {
            return Err(CorpusError::DuplicateId(doc.id));
        }
        docs.push(doc);
    }
    Ok(docs)
}

/// Serializes one document to its canonical single-line form.
pub fn to_json_line(doc: &Document) -> String {
    let mut doc = doc.clone();
    doc.sort_spans();
    serde_json::to_string(&doc).expect("documents always serialize")
}

/// Writes a corpus atomically: a temp file in the target directory is
/// renamed over `path` once fully written.
pub fn write_corpus(docs: &[Document], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let mut buf = String::new();
    for doc in docs {
        buf.push_str(&to_json_line(doc));
        buf.push('\n');
    }
    atomic_write(path, buf.as_bytes()).map_err(|e| CorpusError::io(path, e))
}

pub(crate) fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
