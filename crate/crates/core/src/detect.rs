//! Candidate span detection.
//!
//! Three sources feed the annotation layer: built-in regular expressions for
//! identifiers with a stable shape, a gazetteer of known surfaces, and
//! standoff annotations produced by an external NER system. Their output may
//! overlap; [`resolve_overlaps`] turns it into a non-overlapping layer.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

use crate::corpus::{CharIndex, Detector, Document, EntitySpan, NerLabel, PiiCategory};

/// Version tag of the built-in pattern set; bump whenever a pattern changes.
pub const PATTERN_SET_VERSION: &str = "patterns-v1";

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("standoff annotations reference unknown documents: {}", .0.join(", "))]
    UnknownDocuments(Vec<String>),
    #[error("standoff line {line}: {message}")]
    Standoff { line: usize, message: String },
    #[error("gazetteer line {line}: {message}")]
    Gazetteer { line: usize, message: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn read(path: &Path) -> Result<String, DetectError> {
    std::fs::read_to_string(path).map_err(|source| DetectError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Identifier shapes recognised by the built-in patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PatternKind {
    Url,
    Email,
    Phone,
    Hashtag,
    Username,
}

impl PatternKind {
    pub const ALL: [PatternKind; 5] = [
        PatternKind::Url,
        PatternKind::Email,
        PatternKind::Phone,
        PatternKind::Hashtag,
        PatternKind::Username,
    ];

    pub fn category(self) -> PiiCategory {
        match self {
            PatternKind::Url => PiiCategory::Url,
            PatternKind::Email => PiiCategory::Email,
            PatternKind::Phone => PiiCategory::Phone,
            PatternKind::Hashtag => PiiCategory::Hashtag,
            PatternKind::Username => PiiCategory::Username,
        }
    }

    fn from_category(category: PiiCategory) -> Option<PatternKind> {
        PatternKind::ALL.into_iter().find(|k| k.category() == category)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PatternKind::Url => "url",
            PatternKind::Email => "email",
            PatternKind::Phone => "phone",
            PatternKind::Hashtag => "hashtag",
            PatternKind::Username => "username",
        }
    }
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PatternKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PatternKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown pattern kind `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectorConfig {
    pub kinds: BTreeSet<PatternKind>,
    pub gazetteer: BTreeMap<PiiCategory, Vec<String>>,
    /// Detector provenance, highest priority first.
    pub detector_priority: Vec<Detector>,
    /// Tie-break among regex kinds, highest priority first.
    pub kind_priority: Vec<PatternKind>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            kinds: PatternKind::ALL.into_iter().collect(),
            gazetteer: BTreeMap::new(),
            detector_priority: vec![
                Detector::Manual,
                Detector::Standoff,
                Detector::Regex,
                Detector::Gazetteer,
            ],
            kind_priority: PatternKind::ALL.to_vec(),
        }
    }
}

impl DetectorConfig {
    pub fn with_kinds(kinds: impl IntoIterator<Item = PatternKind>) -> Self {
        DetectorConfig {
            kinds: kinds.into_iter().collect(),
            ..Default::default()
        }
    }

    /// Position of a span in the total priority order (lower wins).
    fn rank(&self, span: &EntitySpan) -> (usize, usize) {
        let detector = self
            .detector_priority
            .iter()
            .position(|d| *d == span.detector)
            .unwrap_or(self.detector_priority.len());
        let kind = match (span.detector, span.pii_category.and_then(PatternKind::from_category)) {
            (Detector::Regex, Some(k)) => self
                .kind_priority
                .iter()
                .position(|p| *p == k)
                .unwrap_or(self.kind_priority.len()),
            _ => 0,
        };
        (detector, kind)
    }

    /// Adds gazetteer entries from a `CATEGORY <TAB> surface` file.
    pub fn load_gazetteer(&mut self, path: impl AsRef<Path>) -> Result<(), DetectError> {
        let text = read(path.as_ref())?;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| DetectError::Gazetteer { line: i + 1, message };
            let (category, surface) = line
                .split_once('\t')
                .ok_or_else(|| err("expected `CATEGORY<TAB>surface`".into()))?;
            let category: PiiCategory = category.trim().parse().map_err(err)?;
            let surface = surface.trim();
            if surface.is_empty() {
                return Err(err("empty gazetteer entry".into()));
            }
            self.gazetteer.entry(category).or_default().push(surface.to_string());
        }
        Ok(())
    }
}

struct Patterns {
    url: Vec<Regex>,
    email: Regex,
    phone: Vec<Regex>,
    hashtag: Regex,
    username: Regex,
}

fn patterns() -> &'static Patterns {
    static PATTERNS: OnceLock<Patterns> = OnceLock::new();
    PATTERNS.get_or_init(|| {
        let tlds = "com|org|net|io|me|fr|be|ch|uk|de|it|es|nl|info|co|tv|ru|gg|ly|ee|ph|nz|app|xyz|news|blog|ca|us|eu|sa|ae|ma|dz|tn|eg";
        Patterns {
            url: vec![
                Regex::new(r#"(?i)\b(?:https?|ftp)://[^\s<>"'“”«»]+"#).unwrap(),
                Regex::new(r#"(?i)\bwww\.[^\s<>"'“”«»]+"#).unwrap(),
                Regex::new(&format!(
                    r#"(?i)\b(?:[a-z0-9](?:[a-z0-9-]*[a-z0-9])?\.)+(?:{tlds})\b(?:/[^\s<>"'“”«»]*)?"#
                ))
                .unwrap(),
            ],
            email: Regex::new(r"[\p{L}\p{N}._%+-]+@(?:[\p{L}\p{N}-]+\.)+\p{L}{2,}").unwrap(),
            phone: vec![
                Regex::new(r"\+\d{1,3}(?:[ .\-]?\(?\d{1,4}\)?){1,6}").unwrap(),
                Regex::new(r"\b0[1-9](?:[ .\-]?\d{2}){4}\b").unwrap(),
                Regex::new(r"(?:\(\d{3}\) ?|\b\d{3}[ .\-])\d{3}[ .\-]\d{4}\b").unwrap(),
            ],
            hashtag: Regex::new(r"#[\p{L}\p{N}_]+").unwrap(),
            username: Regex::new(r"@[\p{L}\p{N}._]+").unwrap(),
        }
    })
}

fn is_word(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Byte ranges of the raw matches for one kind, before boundary checks.
fn raw_matches(kind: PatternKind, text: &str) -> Vec<(usize, usize)> {
    let p = patterns();
    let prev = |at: usize| text[..at].chars().next_back();
    let next = |at: usize| text[at..].chars().next();
    let mut out = Vec::new();
    match kind {
        PatternKind::Url => {
            for (i, re) in p.url.iter().enumerate() {
                for m in re.find_iter(text) {
                    let before = prev(m.start());
                    // bare domains must not be the tail of an email or a longer token
                    if i == 2 && before.is_some_and(|c| is_word(c) || "@.-/:".contains(c)) {
                        continue;
                    }
                    // reverse-DNS identifiers such as com.example.app
                    if i == 2 && ["com.", "org.", "net."].iter().any(|p| m.as_str().to_ascii_lowercase().starts_with(p)) {
                        continue;
                    }
                    if i == 1 && before.is_some_and(|c| c == '/' || c == '.') {
                        continue;
                    }
                    let end = trim_url_tail(text, m.start(), m.end());
                    out.push((m.start(), end));
                }
            }
        }
        PatternKind::Email => {
            for m in p.email.find_iter(text) {
                if next(m.end()).is_some_and(|c| is_word(c) || c == '@') {
                    continue;
                }
                out.push((m.start(), m.end()));
            }
        }
        PatternKind::Phone => {
            for re in &p.phone {
                for m in re.find_iter(text) {
                    let mut end = m.end();
                    // an unmatched closing parenthesis is punctuation, not number
                    if text[m.start()..end].ends_with(')')
                        && text[m.start()..end].matches('(').count() < text[m.start()..end].matches(')').count()
                    {
                        end -= 1;
                    }
                    if prev(m.start()).is_some_and(|c| is_word(c) || c == '+' || c == '.' || c == '-') {
                        continue;
                    }
                    if next(end).is_some_and(|c| is_word(c) || c == '-') {
                        continue;
                    }
                    let digits = text[m.start()..end].chars().filter(char::is_ascii_digit).count();
                    if !(8..=15).contains(&digits) {
                        continue;
                    }
                    out.push((m.start(), end));
                }
            }
        }
        PatternKind::Hashtag => {
            for m in p.hashtag.find_iter(text) {
                if prev(m.start()).is_some_and(|c| is_word(c) || "&#/".contains(c)) {
                    continue;
                }
                if !m.as_str().chars().any(char::is_alphabetic) {
                    continue;
                }
                out.push((m.start(), m.end()));
            }
        }
        PatternKind::Username => {
            for m in p.username.find_iter(text) {
                if prev(m.start()).is_some_and(|c| is_word(c) || "@.-+/".contains(c)) {
                    continue;
                }
                let handle = m.as_str().trim_end_matches('.');
                if !handle[1..].starts_with(|c: char| is_word(c)) {
                    continue;
                }
                let end = m.start() + handle.len();
                if handle.chars().count() < 3 || next(m.end()).is_some_and(|c| c == '@' || c == '-') {
                    continue;
                }
                out.push((m.start(), end));
            }
        }
    }
    out
}

fn trim_url_tail(text: &str, start: usize, mut end: usize) -> usize {
    loop {
        let s = &text[start..end];
        let Some(last) = s.chars().next_back() else { break };
        let trim = match last {
            '.' | ',' | ';' | ':' | '!' | '?' | '\'' | '"' | '»' | '…' => true,
            ')' => s.matches('(').count() < s.matches(')').count(),
            ']' => s.matches('[').count() < s.matches(']').count(),
            _ => false,
        };
        if !trim {
            break;
        }
        end -= last.len_utf8();
    }
    end
}

/// Runs the built-in patterns of every enabled kind.
///
/// Matches nested inside a longer match of another kind (a phone number
/// inside a URL, say) are dropped; partial overlaps are left for
/// [`resolve_overlaps`].
pub fn detect_patterns(text: &str, config: &DetectorConfig) -> Vec<EntitySpan> {
    let index = CharIndex::new(text);
    let mut found: Vec<(usize, usize, PatternKind)> = Vec::new();
    for &kind in &config.kinds {
        for (s, e) in raw_matches(kind, text) {
            if s < e {
                found.push((s, e, kind));
            }
        }
    }
    found.sort_by_key(|&(s, e, k)| (s, Reverse(e), config.kind_priority.iter().position(|p| *p == k)));
    found.dedup_by_key(|&mut (s, e, _)| (s, e));
    let kept: Vec<_> = found
        .iter()
        .filter(|&&(s, e, _)| !found.iter().any(|&(s2, e2, _)| s2 <= s && e <= e2 && (s2, e2) != (s, e)))
        .copied()
        .collect();
    let mut spans: Vec<EntitySpan> = kept
        .into_iter()
        .map(|(s, e, kind)| {
            EntitySpan::new(index.char_of(s), index.char_of(e), &text[s..e], Detector::Regex)
                .with_category(kind.category())
        })
        .collect();
    spans.sort_by_key(|s| (s.start, s.end));
    spans
}

fn chars_eq_ignore_case(a: char, b: char) -> bool {
    a == b || a.to_lowercase().eq(b.to_lowercase())
}

/// Whole-word, case-insensitive, accent-sensitive gazetteer lookup.
/// At a shared start offset the longest entry wins.
pub fn gazetteer_scan(text: &str, config: &DetectorConfig) -> Vec<EntitySpan> {
    let chars: Vec<char> = text.chars().collect();
    let mut best: BTreeMap<usize, (usize, PiiCategory)> = BTreeMap::new();
    for (&category, entries) in &config.gazetteer {
        for entry in entries {
            let needle: Vec<char> = entry.chars().collect();
            if needle.is_empty() || needle.len() > chars.len() {
                continue;
            }
            for start in 0..=chars.len() - needle.len() {
                let end = start + needle.len();
                if start > 0 && is_word(chars[start - 1]) {
                    continue;
                }
                if end < chars.len() && is_word(chars[end]) {
                    continue;
                }
                if !chars[start..end].iter().zip(&needle).all(|(&a, &b)| chars_eq_ignore_case(a, b)) {
                    continue;
                }
                let slot = best.entry(start).or_insert((end, category));
                if end > slot.0 {
                    *slot = (end, category);
                }
            }
        }
    }
    best.into_iter()
        .map(|(start, (end, category))| {
            let surface: String = chars[start..end].iter().collect();
            EntitySpan::new(start, end, surface, Detector::Gazetteer).with_category(category)
        })
        .collect()
}

/// One externally produced NER annotation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StandoffAnnotation {
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub ner_label: NerLabel,
}

/// Parses standoff TSV: `doc_id <TAB> start <TAB> end <TAB> ner_label`.
pub fn parse_standoff(text: &str) -> Result<Vec<StandoffAnnotation>, DetectError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| DetectError::Standoff { line: i + 1, message };
        let cols: Vec<&str> = line.split('\t').collect();
        let [doc_id, start, end, label] = cols.as_slice() else {
            return Err(err(format!("expected 4 tab-separated columns, got {}", cols.len())));
        };
        out.push(StandoffAnnotation {
            doc_id: doc_id.to_string(),
            start: start.trim().parse().map_err(|e| err(format!("start: {e}")))?,
            end: end.trim().parse().map_err(|e| err(format!("end: {e}")))?,
            ner_label: label.trim().parse().map_err(err)?,
        });
    }
    Ok(out)
}

pub fn load_standoff(path: impl AsRef<Path>) -> Result<Vec<StandoffAnnotation>, DetectError> {
    parse_standoff(&read(path.as_ref())?)
}

/// An annotation that could not be attached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StandoffDiagnostic {
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub message: String,
}

impl fmt::Display for StandoffDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}, {}): {}", self.doc_id, self.start, self.end, self.message)
    }
}

/// Attaches standoff annotations as spans. Annotations with invalid offsets
/// are rejected with a diagnostic; an unknown document id fails the whole
/// batch.
pub fn ingest_standoff(
    docs: &[Document],
    annotations: &[StandoffAnnotation],
) -> Result<(Vec<Document>, Vec<StandoffDiagnostic>), DetectError> {
    let by_id: HashMap<&str, usize> = docs.iter().enumerate().map(|(i, d)| (d.id.as_str(), i)).collect();
    let unknown: BTreeSet<String> = annotations
        .iter()
        .filter(|a| !by_id.contains_key(a.doc_id.as_str()))
        .map(|a| a.doc_id.clone())
        .collect();
    if !unknown.is_empty() {
        return Err(DetectError::UnknownDocuments(unknown.into_iter().collect()));
    }
    let mut out = docs.to_vec();
    let mut diagnostics = Vec::new();
    for a in annotations {
        let doc = &mut out[by_id[a.doc_id.as_str()]];
        let Some(span) = (a.start < a.end).then(|| doc.span(a.start, a.end, Detector::Standoff)).flatten() else {
            diagnostics.push(StandoffDiagnostic {
                doc_id: a.doc_id.clone(),
                start: a.start,
                end: a.end,
                message: format!("invalid offsets for text of length {}", doc.char_len()),
            });
            continue;
        };
        let mut span = span.with_ner_label(a.ner_label);
        span.pii_category = a.ner_label.default_pii_category();
        doc.spans.push(span);
    }
    for doc in &mut out {
        doc.sort_spans();
    }
    Ok((out, diagnostics))
}

/// Keeps a pairwise non-overlapping subset of `spans`.
///
/// Candidates are accepted greedily by detector priority, then length
/// (longer first), then start offset, then input order. A discarded span
/// with exactly the same extent as an accepted one donates its NER label or
/// category when the winner lacks them.
pub fn resolve_overlaps(spans: &[EntitySpan], config: &DetectorConfig) -> Vec<EntitySpan> {
    let mut order: Vec<usize> = (0..spans.len()).collect();
    order.sort_by_key(|&i| {
        let s = &spans[i];
        (config.rank(s), Reverse(s.len()), s.start, i)
    });
    let mut accepted: Vec<EntitySpan> = Vec::new();
    for i in order {
        let candidate = &spans[i];
        match accepted.iter_mut().find(|a| a.overlaps(candidate)) {
            None => accepted.push(candidate.clone()),
            Some(winner) if (winner.start, winner.end) == (candidate.start, candidate.end) => {
                if winner.ner_label.is_none() {
                    winner.ner_label = candidate.ner_label;
                }
                if winner.pii_category.is_none() {
                    winner.pii_category = candidate.pii_category;
                }
            }
            Some(_) => {}
        }
    }
    accepted.sort_by_key(|s| (s.start, s.end));
    accepted
}

/// Runs patterns and gazetteer over a document, merges the result with the
/// spans it already has and resolves overlaps.
pub fn detect_document(doc: &Document, config: &DetectorConfig) -> Document {
    let mut candidates = doc.spans.clone();
    candidates.extend(detect_patterns(&doc.text, config));
    candidates.extend(gazetteer_scan(&doc.text, config));
    let mut out = doc.clone();
    out.spans = resolve_overlaps(&candidates, config);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE2: &str = "Hit me up @marie.delattre1, @handsomephilantropist on Insta. Shoutout to Moshe Chaya! At Rue Alphonse Metayer.";

    fn surfaces(spans: &[EntitySpan]) -> Vec<&str> {
        spans.iter().map(|s| s.surface.as_str()).collect()
    }

    #[test]
    fn dotted_handle() {
        let spans = detect_patterns("Hit me up @marie.delattre1 on Insta", &DetectorConfig::default());
        assert_eq!(surfaces(&spans), ["@marie.delattre1"]);
        assert_eq!(spans[0].pii_category, Some(PiiCategory::Username));
        assert_eq!((spans[0].start, spans[0].end), (10, 26));
        assert_eq!(spans[0].detector, Detector::Regex);
    }

    #[test]
    fn whatsapp_link_is_one_url() {
        let spans = detect_patterns("https://wa.me/+93722758", &DetectorConfig::default());
        assert_eq!(surfaces(&spans), ["https://wa.me/+93722758"]);
        assert_eq!(spans[0].pii_category, Some(PiiCategory::Url));
    }

    #[test]
    fn empty_text() {
        assert!(detect_patterns("", &DetectorConfig::default()).is_empty());
    }

    #[test]
    fn email_is_not_a_handle() {
        let spans = detect_patterns("write to lara.wilson+news@example.org now", &DetectorConfig::default());
        assert_eq!(surfaces(&spans), ["lara.wilson+news@example.org"]);
    }

    #[test]
    fn offsets_are_characters() {
        let spans = detect_patterns("مرحبا 👋 #حرية", &DetectorConfig::default());
        assert_eq!(surfaces(&spans), ["#حرية"]);
        assert_eq!((spans[0].start, spans[0].end), (8, 13));
    }

    fn gazetteer(entries: &[(PiiCategory, &str)]) -> DetectorConfig {
        let mut config = DetectorConfig::default();
        for (c, e) in entries {
            config.gazetteer.entry(*c).or_default().push(e.to_string());
        }
        config
    }

    #[test]
    fn gazetteer_finds_names() {
        let config = gazetteer(&[(PiiCategory::PersonName, "Moshe Chaya")]);
        let spans = gazetteer_scan("Shoutout to Moshe Chaya!", &config);
        assert_eq!(surfaces(&spans), ["Moshe Chaya"]);
        assert_eq!(spans[0].detector, Detector::Gazetteer);
        assert!(gazetteer_scan("Shoutout to Moshe Chaya!", &DetectorConfig::default()).is_empty());
    }

    /// Every substring of the text compared against every entry.
    fn brute_force_matches(text: &str, entries: &[&str]) -> Vec<(usize, usize)> {
        let chars: Vec<char> = text.chars().collect();
        let mut out = Vec::new();
        for s in 0..chars.len() {
            for e in s + 1..=chars.len() {
                let sub: String = chars[s..e].iter().collect();
                let left_ok = s == 0 || !chars[s - 1].is_alphanumeric();
                let right_ok = e == chars.len() || !chars[e].is_alphanumeric();
                if left_ok && right_ok && entries.iter().any(|x| x.to_lowercase() == sub.to_lowercase()) {
                    out.push((s, e));
                }
            }
        }
        // longest per start
        out.sort_by_key(|&(s, e)| (s, Reverse(e)));
        out.dedup_by_key(|&mut (s, _)| s);
        out
    }

    #[test]
    fn gazetteer_prefers_longest_entry_at_start() {
        let entries = ["Rue Alphonse", "Rue Alphonse Metayer"];
        let config = gazetteer(&[(PiiCategory::Address, entries[0]), (PiiCategory::Address, entries[1])]);
        let spans = gazetteer_scan(TABLE2, &config);
        let got: Vec<_> = spans.iter().map(|s| (s.start, s.end)).collect();
        assert_eq!(got, brute_force_matches(TABLE2, &entries));
        assert_eq!(surfaces(&spans), ["Rue Alphonse Metayer"]);
    }

    #[test]
    fn gazetteer_is_case_insensitive_but_accent_sensitive() {
        let config = gazetteer(&[(PiiCategory::PersonName, "Metayer")]);
        assert_eq!(gazetteer_scan("chez METAYER", &config).len(), 1);
        assert!(gazetteer_scan("chez Métayer", &config).is_empty());
        assert!(gazetteer_scan("Metayers", &config).is_empty());
    }

    fn doc() -> Document {
        Document::new("d1", "en", "Shoutout to Moshe Chaya!")
    }

    #[test]
    fn standoff_attaches_person() {
        let ann = parse_standoff("# doc\tstart\tend\tlabel\nd1\t12\t23\tPER\n").unwrap();
        let (docs, diags) = ingest_standoff(&[doc()], &ann).unwrap();
        assert!(diags.is_empty());
        let span = &docs[0].spans[0];
        assert_eq!(span.surface, "Moshe Chaya");
        assert_eq!(span.ner_label, Some(NerLabel::Per));
        assert_eq!(span.pii_category, Some(PiiCategory::PersonName));
        assert_eq!(span.detector, Detector::Standoff);
    }

    #[test]
    fn standoff_without_annotations_is_identity() {
        let (docs, diags) = ingest_standoff(&[doc()], &[]).unwrap();
        assert_eq!(docs, vec![doc()]);
        assert!(diags.is_empty());
    }

    #[test]
    fn standoff_rejects_bad_offsets() {
        let ann = parse_standoff("d1\t12\t99\tPER").unwrap();
        let (docs, diags) = ingest_standoff(&[doc()], &ann).unwrap();
        assert!(docs[0].spans.is_empty());
        assert_eq!(diags.len(), 1);
        let msg = diags[0].to_string();
        assert!(msg.contains("d1") && msg.contains("12") && msg.contains("99"), "{msg}");
    }

    #[test]
    fn standoff_unknown_document() {
        let ann = parse_standoff("d9\t0\t2\tLOC\nd7\t0\t1\tPER").unwrap();
        let err = ingest_standoff(&[doc()], &ann).unwrap_err();
        assert_eq!(err.to_string(), "standoff annotations reference unknown documents: d7, d9");
    }

    #[test]
    fn standoff_parse_errors() {
        assert!(parse_standoff("d1\t0\t2").is_err());
        assert!(parse_standoff("d1\t0\t2\tPERSON").is_err());
        assert!(parse_standoff("d1\tx\t2\tPER").is_err());
    }

    #[test]
    fn regex_beats_gazetteer_on_overlap() {
        let text = "ping @moshe.chaya now";
        let user = EntitySpan::new(5, 17, "@moshe.chaya", Detector::Regex).with_category(PiiCategory::Username);
        let name = EntitySpan::new(6, 11, "moshe", Detector::Gazetteer).with_category(PiiCategory::PersonName);
        assert_eq!(&text.chars().skip(5).take(12).collect::<String>(), "@moshe.chaya");
        let out = resolve_overlaps(&[name, user.clone()], &DetectorConfig::default());
        assert_eq!(out, vec![user]);
    }

    #[test]
    fn identical_extents_keep_first() {
        let a = EntitySpan::new(0, 5, "Moshe", Detector::Gazetteer).with_category(PiiCategory::PersonName);
        let b = EntitySpan::new(0, 5, "Moshe", Detector::Gazetteer).with_category(PiiCategory::Other);
        let out = resolve_overlaps(&[a.clone(), b], &DetectorConfig::default());
        assert_eq!(out, vec![a]);
    }

    #[test]
    fn disjoint_spans_unchanged() {
        let a = EntitySpan::new(0, 2, "ab", Detector::Regex);
        let b = EntitySpan::new(3, 5, "cd", Detector::Gazetteer);
        assert_eq!(resolve_overlaps(&[b.clone(), a.clone()], &DetectorConfig::default()), vec![a, b]);
    }

    #[test]
    fn detect_document_on_shoutout() {
        let config = gazetteer(&[
            (PiiCategory::PersonName, "Moshe Chaya"),
            (PiiCategory::Address, "Rue Alphonse Metayer"),
        ]);
        let out = detect_document(&Document::new("t2", "en", TABLE2), &config);
        assert_eq!(
            surfaces(&out.spans),
            ["@marie.delattre1", "@handsomephilantropist", "Moshe Chaya", "Rue Alphonse Metayer"]
        );
        assert!(crate::corpus::slice_check(&out).is_empty());
    }
}
