use std::collections::{BTreeSet, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock, RwLockReadGuard, RwLockWriteGuard};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use redactor_core::audit::{leakage_scan, quasi_id_report, LeakageViolation, QuasiIdFlag};
use redactor_core::corpus::{read_corpus, write_corpus, Document, EntitySpan, PiiCategory};
use redactor_core::ledger::{CreatedBy, Ledger, LedgerEntry, LedgerLock};
use redactor_core::policy::{decide, Decision, RuleSet, SubjectRole};
use redactor_core::substitute::{
    apply_strategy, invalidate, realistic_pseudonym, PseudonymConstraints, Seed, Strategy,
};

use crate::clock::{Clock, SystemClock};
use crate::error::{ReviewError, SpanRef};

/// Meta key set on documents that were committed and not edited since.
pub const COMMITTED_KEY: &str = "review_status";
const COMMITTED: &str = "committed";

#[derive(Debug, Clone)]
pub struct ReviewConfig {
    pub corpus: PathBuf,
    pub ledger: PathBuf,
    pub audit_log: PathBuf,
    pub rules: RuleSet,
    pub constraints: PseudonymConstraints,
    pub seed: Seed,
    pub lease: Duration,
    /// Directory with the static review UI bundle, served at `/`.
    pub static_dir: Option<PathBuf>,
}

impl ReviewConfig {
    pub fn new(corpus: impl Into<PathBuf>, ledger: impl Into<PathBuf>, audit_log: impl Into<PathBuf>) -> Self {
        ReviewConfig {
            corpus: corpus.into(),
            ledger: ledger.into(),
            audit_log: audit_log.into(),
            rules: RuleSet::default(),
            constraints: PseudonymConstraints::default(),
            seed: Seed(0),
            lease: Duration::from_secs(15 * 60),
            static_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lease {
    pub reviewer: String,
    pub expires_at_ms: u64,
}

/// Changes to one span, addressed by its offsets. Absent fields stay as they are.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpanPatch {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_id: Option<String>,
    pub start: usize,
    pub end: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pii_category: Option<PiiCategory>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject_role: Option<SubjectRole>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<Decision>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replacement: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitive: Option<bool>,
    /// An empty note clears the existing one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocStatus {
    Pending,
    Done,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocSummary {
    pub id: String,
    pub language: String,
    pub status: DocStatus,
    pub committed: bool,
    pub spans: usize,
    pub undecided: usize,
    pub leased_by: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Suggestion {
    pub start: usize,
    pub end: usize,
    pub replacement: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkout {
    pub document: Document,
    pub lease: Lease,
    pub suggestions: Vec<Suggestion>,
    pub warnings: Vec<QuasiIdFlag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchOutcome {
    pub span: EntitySpan,
    pub warnings: Vec<QuasiIdFlag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preview {
    pub strategy: Strategy,
    pub document: Document,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocAudit {
    pub doc_id: String,
    pub status: DocStatus,
    pub undecided: Vec<SpanRef>,
    pub quasi_id: Vec<QuasiIdFlag>,
    /// Leakage of the realistic preview; empty while spans are undecided.
    pub leakage: Vec<LeakageViolation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerSuggestion {
    pub surface: String,
    pub pii_category: PiiCategory,
    pub replacement: String,
    /// `ledger` for an existing mapping, `generator` for a fresh proposal.
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    Checkout,
    Release,
    Patch { patch: SpanPatch },
    Commit,
}

/// One line of the reviewer audit log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub seq: u64,
    pub at_ms: u64,
    pub reviewer: String,
    pub doc_id: String,
    #[serde(flatten)]
    pub action: Action,
}

struct State {
    docs: Vec<Document>,
    index: HashMap<String, usize>,
    ledger: Ledger,
    leases: HashMap<String, Lease>,
    log: File,
    seq: u64,
}

/// The review store: working corpus, ledger, leases and audit log behind one
/// lock. Reads share the lock; every mutation takes it exclusively, which
/// serializes writers.
pub struct ReviewService {
    config: ReviewConfig,
    clock: Arc<dyn Clock>,
    state: RwLock<State>,
    ledger_lock: LedgerLock,
}

fn audit_err(path: &Path, e: impl ToString) -> ReviewError {
    ReviewError::AuditLog {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub fn read_audit_log(path: impl AsRef<Path>) -> Result<Vec<AuditRecord>, ReviewError> {
    let path = path.as_ref();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(audit_err(path, e)),
    };
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| audit_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| audit_err(path, e))?);
    }
    Ok(out)
}

fn is_committed(doc: &Document) -> bool {
    doc.meta.get(COMMITTED_KEY).map(String::as_str) == Some(COMMITTED)
}

fn undecided(doc: &Document) -> Vec<SpanRef> {
    doc.spans
        .iter()
        .filter(|s| s.decision.is_none())
        .map(|s| SpanRef {
            start: s.start,
            end: s.end,
            surface: s.surface.clone(),
        })
        .collect()
}

fn status_of(doc: &Document) -> DocStatus {
    if doc.spans.iter().all(|s| s.decision.is_some()) {
        DocStatus::Done
    } else {
        DocStatus::Pending
    }
}

/// Applies a patch to `doc`, recording a replacement override in the ledger.
/// Nothing changes when the patch is rejected.
pub fn apply_patch(
    doc: &mut Document,
    patch: &SpanPatch,
    ledger: &mut Ledger,
    rules: &RuleSet,
) -> Result<EntitySpan, ReviewError> {
    if patch.doc_id.as_deref().is_some_and(|id| id != doc.id) {
        return Err(ReviewError::InvalidPatch(format!("patch addressed to {:?}", patch.doc_id)));
    }
    let idx = doc
        .spans
        .iter()
        .position(|s| s.start == patch.start && s.end == patch.end)
        .ok_or_else(|| ReviewError::UnknownSpan {
            doc_id: doc.id.clone(),
            start: patch.start,
            end: patch.end,
        })?;
    let mut span = doc.spans[idx].clone();
    if let Some(c) = patch.pii_category {
        span.pii_category = Some(c);
    }
    if let Some(r) = patch.subject_role {
        span.subject_role = Some(r);
    }
    if let Some(s) = patch.sensitive {
        span.sensitive = s;
    }
    if let Some(note) = &patch.note {
        span.note = (!note.is_empty()).then(|| note.clone());
    }

    let reclassified = patch.pii_category.is_some() || patch.subject_role.is_some() || patch.sensitive.is_some();
    if let Some(d) = patch.decision {
        span.decision = Some(d);
    } else if reclassified {
        span.decision = Some(match span.pii_category {
            Some(_) => decide(&span, span.subject_role.unwrap_or_default(), rules)
                .map_err(|e| ReviewError::InvalidPatch(e.to_string()))?,
            None if span.ner_label.is_some() => Decision::Keep,
            None => return Err(ReviewError::InvalidPatch("span has no PII category".into())),
        });
    }
    if span.decision.is_some_and(|d| d != Decision::Keep) && span.pii_category.is_none() {
        return Err(ReviewError::InvalidPatch("a span that is not kept needs a PII category".into()));
    }
    if matches!(span.decision, Some(Decision::Keep | Decision::Delete)) && !span.is_empty() {
        span.replacement = None;
    }

    let mut record = None;
    if let Some(rep) = &patch.replacement {
        match (span.decision, span.pii_category) {
            (Some(Decision::Pseudonymize | Decision::Invalidate), Some(category)) => {
                ledger.check(&span.surface, category, rep)?;
                span.replacement = Some(rep.clone());
                record = Some((category, rep.clone()));
            }
            _ => {
                return Err(ReviewError::InvalidPatch(
                    "a replacement needs a pseudonymize or invalidate decision".into(),
                ))
            }
        }
    }

    let mut updated = doc.clone();
    updated.spans[idx] = span.clone();
    updated.meta.remove(COMMITTED_KEY);
    updated.validate()?;
    if let Some((category, rep)) = record {
        ledger.record(&span.surface, category, &rep, &doc.language, CreatedBy::Reviewer)?;
    }
    *doc = updated;
    Ok(span)
}

/// Marks a fully decided document as committed.
pub fn apply_commit(doc: &mut Document) -> Result<(), ReviewError> {
    let open = undecided(doc);
    if !open.is_empty() {
        return Err(ReviewError::Undecided {
            doc_id: doc.id.clone(),
            spans: open,
        });
    }
    doc.meta.insert(COMMITTED_KEY.into(), COMMITTED.into());
    Ok(())
}

/// Rebuilds corpus and ledger state by applying logged patches and commits
/// to the state the service started from.
pub fn replay(
    mut docs: Vec<Document>,
    mut ledger: Ledger,
    records: &[AuditRecord],
    rules: &RuleSet,
) -> Result<(Vec<Document>, Ledger), ReviewError> {
    let index: HashMap<String, usize> = docs.iter().enumerate().map(|(i, d)| (d.id.clone(), i)).collect();
    for rec in records {
        let &i = index
            .get(&rec.doc_id)
            .ok_or_else(|| ReviewError::UnknownDocument(rec.doc_id.clone()))?;
        match &rec.action {
            Action::Patch { patch } => {
                apply_patch(&mut docs[i], patch, &mut ledger, rules)?;
            }
            Action::Commit => apply_commit(&mut docs[i])?,
            Action::Checkout | Action::Release => {}
        }
    }
    Ok((docs, ledger))
}

impl ReviewService {
    pub fn open(config: ReviewConfig) -> Result<Self, ReviewError> {
        Self::open_with_clock(config, Arc::new(SystemClock))
    }

    /// Loads the working corpus and ledger and takes the ledger writer lock
    /// for the lifetime of the service.
    pub fn open_with_clock(config: ReviewConfig, clock: Arc<dyn Clock>) -> Result<Self, ReviewError> {
        let docs = read_corpus(&config.corpus)?;
        let ledger_lock = LedgerLock::acquire(&config.ledger)?;
        let ledger = Ledger::load_or_new(&config.ledger)?;
        let seq = read_audit_log(&config.audit_log)?.last().map_or(0, |r| r.seq);
        let log = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&config.audit_log)
            .map_err(|e| audit_err(&config.audit_log, e))?;
        let index = docs.iter().enumerate().map(|(i, d)| (d.id.clone(), i)).collect();
        Ok(ReviewService {
            config,
            clock,
            state: RwLock::new(State {
                docs,
                index,
                ledger,
                leases: HashMap::new(),
                log,
                seq,
            }),
            ledger_lock,
        })
    }

    pub fn config(&self) -> &ReviewConfig {
        &self.config
    }

    fn read(&self) -> RwLockReadGuard<'_, State> {
        self.state.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> RwLockWriteGuard<'_, State> {
        self.state.write().unwrap_or_else(|e| e.into_inner())
    }

    fn active_lease<'a>(&self, state: &'a State, doc_id: &str) -> Option<&'a Lease> {
        let now = self.clock.now_ms();
        state.leases.get(doc_id).filter(|l| l.expires_at_ms > now)
    }

    fn require_lease(&self, state: &State, doc_id: &str, reviewer: &str) -> Result<(), ReviewError> {
        match self.active_lease(state, doc_id) {
            Some(l) if l.reviewer == reviewer => Ok(()),
            _ => Err(ReviewError::NoLease {
                doc_id: doc_id.to_string(),
                reviewer: reviewer.to_string(),
            }),
        }
    }

    fn log(&self, state: &mut State, reviewer: &str, doc_id: &str, action: Action) -> Result<(), ReviewError> {
        state.seq += 1;
        let record = AuditRecord {
            seq: state.seq,
            at_ms: self.clock.now_ms(),
            reviewer: reviewer.to_string(),
            doc_id: doc_id.to_string(),
            action,
        };
        let line = serde_json::to_string(&record).map_err(|e| audit_err(&self.config.audit_log, e))?;
        writeln!(state.log, "{line}")
            .and_then(|_| state.log.sync_data())
            .map_err(|e| audit_err(&self.config.audit_log, e))
    }

    fn persist(&self, state: &State, ledger_changed: bool) -> Result<(), ReviewError> {
        if ledger_changed {
            state.ledger.save_held(&self.ledger_lock)?;
        }
        write_corpus(&state.docs, &self.config.corpus)?;
        Ok(())
    }

    fn doc_index(state: &State, doc_id: &str) -> Result<usize, ReviewError> {
        state
            .index
            .get(doc_id)
            .copied()
            .ok_or_else(|| ReviewError::UnknownDocument(doc_id.to_string()))
    }

    pub fn list(&self, language: Option<&str>, status: Option<DocStatus>) -> Vec<DocSummary> {
        let state = self.read();
        let mut out: Vec<DocSummary> = state
            .docs
            .iter()
            .filter(|d| language.is_none_or(|l| d.language == l))
            .map(|d| DocSummary {
                id: d.id.clone(),
                language: d.language.clone(),
                status: status_of(d),
                committed: is_committed(d),
                spans: d.spans.len(),
                undecided: undecided(d).len(),
                leased_by: self.active_lease(&state, &d.id).map(|l| l.reviewer.clone()),
            })
            .filter(|s| status.is_none_or(|st| s.status == st))
            .collect();
        out.sort_by(|a, b| a.id.cmp(&b.id));
        out
    }

    pub fn document(&self, doc_id: &str) -> Result<Document, ReviewError> {
        let state = self.read();
        Ok(state.docs[Self::doc_index(&state, doc_id)?].clone())
    }

    pub fn documents(&self) -> Vec<Document> {
        self.read().docs.clone()
    }

    pub fn ledger_entries(&self) -> Vec<LedgerEntry> {
        self.read().ledger.entries().cloned().collect()
    }

    pub fn checkout(&self, doc_id: &str, reviewer: &str) -> Result<Checkout, ReviewError> {
        let mut state = self.write();
        let i = Self::doc_index(&state, doc_id)?;
        if let Some(l) = self.active_lease(&state, doc_id) {
            if l.reviewer != reviewer {
                return Err(ReviewError::Leased {
                    doc_id: doc_id.to_string(),
                    holder: l.reviewer.clone(),
                    expires_at_ms: l.expires_at_ms,
                });
            }
        }
        let lease = Lease {
            reviewer: reviewer.to_string(),
            expires_at_ms: self.clock.now_ms() + self.config.lease.as_millis() as u64,
        };
        state.leases.insert(doc_id.to_string(), lease.clone());
        self.log(&mut state, reviewer, doc_id, Action::Checkout)?;
        let document = state.docs[i].clone();
        let suggestions = self.suggestions(&state, &document);
        let warnings = quasi_id_report(std::slice::from_ref(&document));
        Ok(Checkout {
            document,
            lease,
            suggestions,
            warnings,
        })
    }

    pub fn release(&self, doc_id: &str, reviewer: &str) -> Result<(), ReviewError> {
        let mut state = self.write();
        Self::doc_index(&state, doc_id)?;
        self.require_lease(&state, doc_id, reviewer)?;
        state.leases.remove(doc_id);
        self.log(&mut state, reviewer, doc_id, Action::Release)
    }

    pub fn patch(&self, doc_id: &str, reviewer: &str, patch: SpanPatch) -> Result<PatchOutcome, ReviewError> {
        let mut state = self.write();
        let i = Self::doc_index(&state, doc_id)?;
        self.require_lease(&state, doc_id, reviewer)?;
        let version = state.ledger.version();
        let State { docs, ledger, .. } = &mut *state;
        let span = apply_patch(&mut docs[i], &patch, ledger, &self.config.rules)?;
        let ledger_changed = state.ledger.version() != version;
        self.log(&mut state, reviewer, doc_id, Action::Patch { patch })?;
        self.persist(&state, ledger_changed)?;
        Ok(PatchOutcome {
            span,
            warnings: quasi_id_report(std::slice::from_ref(&state.docs[i])),
        })
    }

    /// Commits a document. Committing an already committed, unleased
    /// document again succeeds without changes.
    pub fn commit(&self, doc_id: &str, reviewer: &str) -> Result<(), ReviewError> {
        let mut state = self.write();
        let i = Self::doc_index(&state, doc_id)?;
        let lease = self.active_lease(&state, doc_id).cloned();
        match lease {
            None if is_committed(&state.docs[i]) => return Ok(()),
            Some(l) if l.reviewer == reviewer => {}
            _ => {
                return Err(ReviewError::NoLease {
                    doc_id: doc_id.to_string(),
                    reviewer: reviewer.to_string(),
                })
            }
        }
        apply_commit(&mut state.docs[i])?;
        state.leases.remove(doc_id);
        self.log(&mut state, reviewer, doc_id, Action::Commit)?;
        self.persist(&state, false)
    }

    /// Constraints whose protected set holds every non-kept surface of the corpus.
    fn protected_constraints(&self, state: &State) -> PseudonymConstraints {
        let mut c = self.config.constraints.clone();
        let surfaces: BTreeSet<String> = state
            .docs
            .iter()
            .flat_map(|d| &d.spans)
            .filter(|s| s.decision != Some(Decision::Keep) && !s.is_deleted())
            .map(|s| s.surface.clone())
            .collect();
        c.protected.extend(surfaces);
        c
    }

    /// Realistic replacements for the decided, non-kept spans, computed on a
    /// scratch copy of the ledger.
    fn suggestions(&self, state: &State, doc: &Document) -> Vec<Suggestion> {
        let mut decided = doc.clone();
        decided.spans.retain(|s| s.decision.is_some());
        let mut scratch = state.ledger.clone();
        let constraints = self.protected_constraints(state);
        let Ok(out) = apply_strategy(&decided, Strategy::Realistic, Some(&mut scratch), &constraints, self.config.seed)
        else {
            return Vec::new();
        };
        decided
            .spans
            .iter()
            .zip(&out.spans)
            .filter(|(s, _)| matches!(s.decision, Some(Decision::Pseudonymize | Decision::Invalidate)))
            .filter_map(|(s, o)| {
                o.replacement.clone().map(|replacement| Suggestion {
                    start: s.start,
                    end: s.end,
                    replacement,
                })
            })
            .collect()
    }

    pub fn preview(&self, doc_id: &str, strategy: Strategy) -> Result<Preview, ReviewError> {
        let state = self.read();
        let doc = &state.docs[Self::doc_index(&state, doc_id)?];
        let open = undecided(doc);
        if !open.is_empty() {
            return Err(ReviewError::Undecided {
                doc_id: doc_id.to_string(),
                spans: open,
            });
        }
        let mut scratch = state.ledger.clone();
        let constraints = self.protected_constraints(&state);
        let document = apply_strategy(doc, strategy, Some(&mut scratch), &constraints, self.config.seed)?;
        Ok(Preview { strategy, document })
    }

    pub fn audit(&self, doc_id: &str) -> Result<DocAudit, ReviewError> {
        let state = self.read();
        let doc = &state.docs[Self::doc_index(&state, doc_id)?];
        let open = undecided(doc);
        let leakage = if open.is_empty() {
            let mut scratch = state.ledger.clone();
            let constraints = self.protected_constraints(&state);
            let out = apply_strategy(doc, Strategy::Realistic, Some(&mut scratch), &constraints, self.config.seed)?;
            leakage_scan(std::slice::from_ref(doc), &[out], Some(&scratch))
                .map_err(|e| ReviewError::InvalidPatch(e.to_string()))?
        } else {
            Vec::new()
        };
        Ok(DocAudit {
            doc_id: doc.id.clone(),
            status: status_of(doc),
            undecided: open,
            quasi_id: quasi_id_report(std::slice::from_ref(doc)),
            leakage,
        })
    }

    pub fn suggest(&self, surface: &str, category: PiiCategory, language: &str) -> Result<LedgerSuggestion, ReviewError> {
        let state = self.read();
        let suggestion = |replacement: String, source: &str| LedgerSuggestion {
            surface: surface.to_string(),
            pii_category: category,
            replacement,
            source: source.to_string(),
        };
        if let Some(existing) = state.ledger.lookup(surface, category) {
            return Ok(suggestion(existing.to_string(), "ledger"));
        }
        let replacement = if matches!(category, PiiCategory::Url | PiiCategory::Phone) {
            invalidate(surface, category, self.config.seed)?
        } else {
            let mut scratch = state.ledger.clone();
            let constraints = self.protected_constraints(&state);
            realistic_pseudonym(surface, category, language, &constraints, &mut scratch, self.config.seed)?
        };
        Ok(suggestion(replacement, "generator"))
    }
}
