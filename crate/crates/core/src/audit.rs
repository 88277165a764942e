//! Post-transformation checks: leakage, replacement consistency,
//! quasi-identifier residue, and descriptive statistics.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CharIndex, Document, PiiCategory};
use crate::ledger::Ledger;
use crate::policy::{kept_private_indirect, Decision};
use crate::text::{normalize, word_matches};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AuditError {
    #[error("document {0:?} is missing from the output corpus")]
    MissingOutput(String),
    #[error("output document {0:?} has no original")]
    UnexpectedOutput(String),
    #[error("document {doc_id:?}: {original} original spans but {output} output spans")]
    SpanCountMismatch {
        doc_id: String,
        original: usize,
        output: usize,
    },
}

/// Shortest surface considered by the corpus-wide ledger sweep.
pub const SWEEP_MIN_CHARS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeakKind {
    /// The surface occurs verbatim in the output text.
    Exact,
    /// The surface occurs after case, whitespace and punctuation normalization.
    Normalized,
    /// A ledger original occurs outside any kept span.
    LedgerSweep,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LeakageViolation {
    pub doc_id: String,
    pub surface: String,
    /// Span in the original document, or the match position for a sweep hit.
    pub start: usize,
    pub end: usize,
    pub kind: LeakKind,
}

fn pair_up<'a>(
    original: &'a [Document],
    output: &'a [Document],
) -> Result<Vec<(&'a Document, &'a Document)>, AuditError> {
    let by_id: HashMap<&str, &Document> = output.iter().map(|d| (d.id.as_str(), d)).collect();
    let original_ids: BTreeSet<&str> = original.iter().map(|d| d.id.as_str()).collect();
    if let Some(extra) = output.iter().find(|d| !original_ids.contains(d.id.as_str())) {
        return Err(AuditError::UnexpectedOutput(extra.id.clone()));
    }
    original
        .iter()
        .map(|doc| {
            by_id
                .get(doc.id.as_str())
                .map(|out| (doc, *out))
                .ok_or_else(|| AuditError::MissingOutput(doc.id.clone()))
        })
        .collect()
}

fn char_ranges_of(text: &str, needle: &str, index: &CharIndex) -> Vec<(usize, usize)> {
    text.match_indices(needle)
        .map(|(b, m)| (index.char_of(b), index.char_of(b + m.len())))
        .collect()
}

/// Finds original surfaces of non-kept spans that survive in the output.
///
/// Every non-kept span is checked against its own output document, verbatim
/// and in normalized form. With a ledger, every recorded original of at least
/// [`SWEEP_MIN_CHARS`] characters is also searched in every output document;
/// occurrences inside a span the policy kept there are not leaks.
pub fn leakage_scan(
    original: &[Document],
    output: &[Document],
    ledger: Option<&Ledger>,
) -> Result<Vec<LeakageViolation>, AuditError> {
    let pairs = pair_up(original, output)?;
    let sweep: Vec<&str> = ledger
        .map(|l| {
            l.originals()
                .filter(|s| s.chars().count() >= SWEEP_MIN_CHARS)
                .collect()
        })
        .unwrap_or_default();
    let mut out = Vec::new();
    for (orig, done) in pairs {
        let normalized_text = normalize(&done.text);
        for span in &orig.spans {
            if span.decision == Some(Decision::Keep) || span.surface.is_empty() {
                continue;
            }
            let kind = if done.text.contains(span.surface.as_str()) {
                Some(LeakKind::Exact)
            } else {
                let n = normalize(&span.surface);
                (!n.is_empty() && !word_matches(&normalized_text, &n).is_empty()).then_some(LeakKind::Normalized)
            };
            if let Some(kind) = kind {
                out.push(LeakageViolation {
                    doc_id: orig.id.clone(),
                    surface: span.surface.clone(),
                    start: span.start,
                    end: span.end,
                    kind,
                });
            }
        }
        if sweep.is_empty() {
            continue;
        }
        let index = CharIndex::new(&done.text);
        let kept: Vec<(usize, usize)> = done
            .spans
            .iter()
            .filter(|s| s.decision == Some(Decision::Keep))
            .map(|s| (s.start, s.end))
            .collect();
        for surface in &sweep {
            for (s, e) in char_ranges_of(&done.text, surface, &index) {
                if kept.iter().any(|&(ks, ke)| ks <= s && e <= ke) {
                    continue;
                }
                let dup = out
                    .iter()
                    .any(|v| v.doc_id == done.id && v.surface == *surface && v.kind != LeakKind::LedgerSweep);
                if !dup {
                    out.push(LeakageViolation {
                        doc_id: done.id.clone(),
                        surface: surface.to_string(),
                        start: s,
                        end: e,
                        kind: LeakKind::LedgerSweep,
                    });
                }
            }
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConsistencyViolation {
    /// One original received several replacements.
    Conflict {
        surface: String,
        category: PiiCategory,
        replacements: Vec<String>,
    },
    /// Several originals share one replacement.
    Injectivity {
        replacement: String,
        category: PiiCategory,
        originals: Vec<String>,
    },
}

/// Checks that replacements behave as one function per category.
///
/// Spans are paired by position between each original document and its
/// output. Deleted spans are ignored. Intended for realistic output; fixed
/// placeholders are non-injective by construction.
pub fn consistency_scan(original: &[Document], output: &[Document]) -> Result<Vec<ConsistencyViolation>, AuditError> {
    let pairs = pair_up(original, output)?;
    let mut forward: BTreeMap<(PiiCategory, &str), BTreeSet<&str>> = BTreeMap::new();
    let mut backward: BTreeMap<(PiiCategory, &str), BTreeSet<&str>> = BTreeMap::new();
    for (orig, done) in pairs {
        if orig.spans.len() != done.spans.len() {
            return Err(AuditError::SpanCountMismatch {
                doc_id: orig.id.clone(),
                original: orig.spans.len(),
                output: done.spans.len(),
            });
        }
        for (a, b) in orig.spans.iter().zip(&done.spans) {
            let Some(category) = a.pii_category else { continue };
            if a.decision == Some(Decision::Keep) || b.is_deleted() {
                continue;
            }
            let rep = b.replacement.as_deref().unwrap_or(b.surface.as_str());
            forward.entry((category, a.surface.as_str())).or_default().insert(rep);
            backward.entry((category, rep)).or_default().insert(a.surface.as_str());
        }
    }
    let owned = |set: &BTreeSet<&str>| set.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let mut out: Vec<ConsistencyViolation> = forward
        .iter()
        .filter(|(_, reps)| reps.len() > 1)
        .map(|((category, surface), reps)| ConsistencyViolation::Conflict {
            surface: surface.to_string(),
            category: *category,
            replacements: owned(reps),
        })
        .collect();
    out.extend(
        backward
            .iter()
            .filter(|(_, origs)| origs.len() > 1)
            .map(|((category, rep), origs)| ConsistencyViolation::Injectivity {
                replacement: rep.to_string(),
                category: *category,
                originals: owned(origs),
            }),
    );
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuasiIdFlag {
    pub doc_id: String,
    /// Kept indirect spans about private subjects, as (start, end, surface).
    pub spans: Vec<(usize, usize, String)>,
}

/// Flags documents where two or more indirect identifiers of private
/// subjects were kept.
pub fn quasi_id_report(corpus: &[Document]) -> Vec<QuasiIdFlag> {
    corpus
        .iter()
        .filter_map(|doc| {
            let kept = kept_private_indirect(&doc.spans);
            (kept.len() >= 2).then(|| QuasiIdFlag {
                doc_id: doc.id.clone(),
                spans: kept
                    .into_iter()
                    .map(|i| {
                        let s = &doc.spans[i];
                        (s.start, s.end, s.surface.clone())
                    })
                    .collect(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub examples: usize,
    pub anonymized: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageStats {
    pub examples: usize,
    pub anonymized: usize,
    pub spans: usize,
    /// Keyed by the `split` meta field; documents without one count as `all`.
    pub splits: BTreeMap<String, Counts>,
    /// Keyed by NER label family.
    pub ner: BTreeMap<String, usize>,
    pub categories: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityStats {
    pub languages: BTreeMap<String, LanguageStats>,
    pub examples: usize,
    pub anonymized: usize,
    pub spans: usize,
    pub ner: BTreeMap<String, usize>,
    pub categories: BTreeMap<String, usize>,
}

/// Counts documents and spans; a span is anonymized when its decision is not `keep`.
pub fn entity_stats(corpus: &[Document]) -> EntityStats {
    let mut stats = EntityStats::default();
    for doc in corpus {
        let lang = stats.languages.entry(doc.language.clone()).or_default();
        let split = doc.meta.get("split").cloned().unwrap_or_else(|| "all".into());
        let anonymized = doc
            .spans
            .iter()
            .filter(|s| matches!(s.decision, Some(d) if d != Decision::Keep))
            .count();
        lang.examples += 1;
        lang.anonymized += anonymized;
        lang.spans += doc.spans.len();
        let counts = lang.splits.entry(split).or_default();
        counts.examples += 1;
        counts.anonymized += anonymized;
        for span in &doc.spans {
            if let Some(label) = span.ner_label {
                *lang.ner.entry(label.family().to_string()).or_default() += 1;
                *stats.ner.entry(label.family().to_string()).or_default() += 1;
            }
            if let Some(cat) = span.pii_category {
                *lang.categories.entry(cat.as_str().to_string()).or_default() += 1;
                *stats.categories.entry(cat.as_str().to_string()).or_default() += 1;
            }
        }
        stats.examples += 1;
        stats.anonymized += anonymized;
        stats.spans += doc.spans.len();
    }
    stats
}

fn language_name(code: &str) -> String {
    match code {
        "en" => "English".into(),
        "fr" => "French".into(),
        "ar" => "Arabic".into(),
        other => other.to_string(),
    }
}

const SPLITS: [&str; 3] = ["train", "dev", "test"];

impl EntityStats {
    /// Languages in display order: English, French, Arabic, then the rest.
    fn ordered(&self) -> Vec<(&str, &LanguageStats)> {
        let rank = |code: &str| ["en", "fr", "ar"].iter().position(|c| *c == code).unwrap_or(3);
        let mut langs: Vec<(&str, &LanguageStats)> = self.languages.iter().map(|(k, v)| (k.as_str(), v)).collect();
        langs.sort_by_key(|(code, _)| (rank(code), *code));
        langs
    }

    /// Per-language block of example and anonymized-entity counts by split.
    pub fn render_split_table(&self) -> String {
        let mut extra: BTreeSet<&str> = BTreeSet::new();
        for lang in self.languages.values() {
            extra.extend(lang.splits.keys().map(String::as_str).filter(|s| !SPLITS.contains(s)));
        }
        let columns: Vec<&str> = SPLITS.iter().copied().chain(extra).collect();
        let mut out = String::new();
        let label_width = 24;
        let _ = write!(out, "{:label_width$}", "");
        for c in &columns {
            let mut title = c.to_string();
            if let Some(first) = title.get_mut(0..1) {
                first.make_ascii_uppercase();
            }
            let _ = write!(out, "{title:>8}");
        }
        out.push('\n');
        for (code, lang) in self.ordered() {
            let _ = writeln!(out, "{}", language_name(code));
            for (row, pick) in [
                ("# examples", (|c: &Counts| c.examples) as fn(&Counts) -> usize),
                ("# anonymized entities", |c: &Counts| c.anonymized),
            ] {
                let _ = write!(out, "{row:label_width$}");
                for c in &columns {
                    match lang.splits.get(*c) {
                        Some(counts) if counts.examples > 0 => {
                            let _ = write!(out, "{:>8}", pick(counts));
                        }
                        _ => {
                            let _ = write!(out, "{:>8}", "-");
                        }
                    }
                }
                out.push('\n');
            }
        }
        let _ = writeln!(out, "{:label_width$}{:>8}", "total examples", self.examples);
        let _ = writeln!(out, "{:label_width$}{:>8}", "total anonymized", self.anonymized);
        out
    }

    /// NER label families by language.
    pub fn render_ner_table(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:8}", "");
        for (code, _) in self.ordered() {
            let _ = write!(out, "{:>10}", language_name(code));
        }
        out.push('\n');
        for family in ["PER", "LOC", "ORG", "OTH", "COMP"] {
            let _ = write!(out, "{family:8}");
            for (_, lang) in self.ordered() {
                let _ = write!(out, "{:>10}", lang.ner.get(family).copied().unwrap_or(0));
            }
            out.push('\n');
        }
        out
    }

    pub fn render_category_table(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:14}", "");
        for (code, _) in self.ordered() {
            let _ = write!(out, "{:>10}", language_name(code));
        }
        let _ = writeln!(out, "{:>10}", "Total");
        for cat in PiiCategory::ALL {
            let _ = write!(out, "{:14}", cat.as_str());
            for (_, lang) in self.ordered() {
                let _ = write!(out, "{:>10}", lang.categories.get(cat.as_str()).copied().unwrap_or(0));
            }
            let _ = writeln!(out, "{:>10}", self.categories.get(cat.as_str()).copied().unwrap_or(0));
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub leakage_violations: Vec<LeakageViolation>,
    pub consistency_violations: Vec<ConsistencyViolation>,
    pub quasi_id_flags: Vec<QuasiIdFlag>,
    /// Output files whose text mentions the ledger path.
    pub ledger_path_mentions: Vec<String>,
    pub stats: EntityStats,
}

impl AuditReport {
    pub fn passes(&self) -> bool {
        self.leakage_violations.is_empty()
            && self.consistency_violations.is_empty()
            && self.quasi_id_flags.is_empty()
            && self.ledger_path_mentions.is_empty()
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "leakage violations: {}", self.leakage_violations.len());
        for v in &self.leakage_violations {
            let _ = writeln!(out, "  {} [{}, {}) {:?} ({:?})", v.doc_id, v.start, v.end, v.surface, v.kind);
        }
        let _ = writeln!(out, "consistency violations: {}", self.consistency_violations.len());
        for v in &self.consistency_violations {
            match v {
                ConsistencyViolation::Conflict {
                    surface,
                    category,
                    replacements,
                } => {
                    let _ = writeln!(out, "  conflict {surface:?} ({category}) -> {replacements:?}");
                }
                ConsistencyViolation::Injectivity {
                    replacement,
                    category,
                    originals,
                } => {
                    let _ = writeln!(out, "  shared {replacement:?} ({category}) <- {originals:?}");
                }
            }
        }
        let _ = writeln!(out, "quasi-identifier flags: {}", self.quasi_id_flags.len());
        for f in &self.quasi_id_flags {
            let surfaces: Vec<&str> = f.spans.iter().map(|s| s.2.as_str()).collect();
            let _ = writeln!(out, "  {} {:?}", f.doc_id, surfaces);
        }
        if !self.ledger_path_mentions.is_empty() {
            let _ = writeln!(out, "ledger path found in: {:?}", self.ledger_path_mentions);
        }
        let _ = writeln!(out, "spans: {}", self.stats.spans);
        out.push('\n');
        out.push_str(&self.stats.render_split_table());
        out.push('\n');
        out.push_str(&self.stats.render_category_table());
        out
    }
}

/// Full audit of a transformed corpus against its decided original.
///
/// `consistency` should be set for realistic output only.
pub fn audit(
    original: &[Document],
    output: &[Document],
    ledger: Option<&Ledger>,
    consistency: bool,
) -> Result<AuditReport, AuditError> {
    Ok(AuditReport {
        leakage_violations: leakage_scan(original, output, ledger)?,
        consistency_violations: if consistency {
            consistency_scan(original, output)?
        } else {
            Vec::new()
        },
        quasi_id_flags: quasi_id_report(output),
        ledger_path_mentions: Vec::new(),
        stats: entity_stats(output),
    })
}

/// Ids of documents whose text or metadata mention `needle`.
pub fn mentions(corpus: &[Document], needle: &str) -> Vec<String> {
    if needle.is_empty() {
        return Vec::new();
    }
    corpus
        .iter()
        .filter(|d| d.text.contains(needle) || d.meta.values().any(|v| v.contains(needle)))
        .map(|d| d.id.clone())
        .collect()
}
