//! Correspondence table between original surfaces and their replacements.
//!
//! The ledger is the "additional information" that makes pseudonymized text
//! re-identifiable, so it lives in its own file and never in a corpus.
//!
//! File layout: one JSON header line followed by one JSON entry per line,
//! sorted by (category, original). The header carries the ledger version,
//! the entry count and a SHA-256 over the version and the entry lines.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::PiiCategory;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
const FORMAT: &str = "redactor-ledger/1";

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("{original:?} ({category}) is already mapped to {existing:?}")]
    Conflict {
        original: String,
        category: PiiCategory,
        existing: String,
        requested: String,
    },
    #[error("replacement {replacement:?} ({category}) is already used for {owner:?}")]
    Injectivity {
        replacement: String,
        category: PiiCategory,
        owner: String,
        original: String,
    },
    #[error("invalid replacement for {original:?}: {message}")]
    InvalidReplacement { original: String, message: String },
    #[error("ledger integrity error in {path}: {message}")]
    Integrity { path: String, message: String },
    #[error("ledger {path} is locked by another writer")]
    Locked { path: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> LedgerError + '_ {
    move |source| LedgerError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CreatedBy {
    Generator,
    Reviewer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub original_surface: String,
    pub pii_category: PiiCategory,
    pub replacement: String,
    pub languages: BTreeSet<String>,
    pub created_by: CreatedBy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u64,
    entries: usize,
    checksum: String,
    tool_version: String,
}

type Key = (PiiCategory, String);

#[derive(Debug, Clone, Default)]
pub struct Ledger {
    entries: BTreeMap<Key, LedgerEntry>,
    by_replacement: HashMap<Key, String>,
    originals: HashSet<String>,
    version: u64,
}

impl PartialEq for Ledger {
    fn eq(&self, other: &Self) -> bool {
        self.version == other.version && self.entries == other.entries
    }
}

impl Eq for Ledger {}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &LedgerEntry> {
        self.entries.values()
    }

    /// Exact, case-sensitive lookup.
    pub fn lookup(&self, original: &str, category: PiiCategory) -> Option<&str> {
        self.entry(original, category).map(|e| e.replacement.as_str())
    }

    pub fn entry(&self, original: &str, category: PiiCategory) -> Option<&LedgerEntry> {
        self.entries.get(&(category, original.to_string()))
    }

    /// The original that owns `replacement` within `category`, if any.
    pub fn owner_of(&self, replacement: &str, category: PiiCategory) -> Option<&str> {
        self.by_replacement
            .get(&(category, replacement.to_string()))
            .map(String::as_str)
    }

    /// True if `surface` is a recorded original in any category.
    pub fn is_original(&self, surface: &str) -> bool {
        self.originals.contains(surface)
    }

    pub fn originals(&self) -> impl Iterator<Item = &str> {
        self.originals.iter().map(String::as_str)
    }

    /// Checks whether `record` would succeed, without mutating.
    pub fn check(&self, original: &str, category: PiiCategory, replacement: &str) -> Result<(), LedgerError> {
        if replacement.is_empty() {
            return Err(LedgerError::InvalidReplacement {
                original: original.to_string(),
                message: "empty replacement".into(),
            });
        }
        if replacement == original {
            return Err(LedgerError::InvalidReplacement {
                original: original.to_string(),
                message: "replacement equals the original".into(),
            });
        }
        if let Some(existing) = self.lookup(original, category) {
            if existing != replacement {
                return Err(LedgerError::Conflict {
                    original: original.to_string(),
                    category,
                    existing: existing.to_string(),
                    requested: replacement.to_string(),
                });
            }
            return Ok(());
        }
        if let Some(owner) = self.owner_of(replacement, category) {
            return Err(LedgerError::Injectivity {
                replacement: replacement.to_string(),
                category,
                owner: owner.to_string(),
                original: original.to_string(),
            });
        }
        Ok(())
    }

    /// Inserts a mapping, or adds `language` to an identical existing one.
    pub fn record(
        &mut self,
        original: &str,
        category: PiiCategory,
        replacement: &str,
        language: &str,
        created_by: CreatedBy,
    ) -> Result<(), LedgerError> {
        self.check(original, category, replacement)?;
        let key = (category, original.to_string());
        match self.entries.get_mut(&key) {
            Some(entry) => {
                entry.languages.insert(language.to_string());
            }
            None => {
                self.by_replacement
                    .insert((category, replacement.to_string()), original.to_string());
                self.originals.insert(original.to_string());
                self.entries.insert(
                    key,
                    LedgerEntry {
                        original_surface: original.to_string(),
                        pii_category: category,
                        replacement: replacement.to_string(),
                        languages: BTreeSet::from([language.to_string()]),
                        created_by,
                        note: None,
                    },
                );
            }
        }
        self.version += 1;
        Ok(())
    }

    pub fn set_note(&mut self, original: &str, category: PiiCategory, note: Option<String>) -> bool {
        match self.entries.get_mut(&(category, original.to_string())) {
            Some(entry) => {
                entry.note = note;
                self.version += 1;
                true
            }
            None => false,
        }
    }

    fn insert_entry(&mut self, entry: LedgerEntry) -> Result<(), LedgerError> {
        self.check(&entry.original_surface, entry.pii_category, &entry.replacement)?;
        let key = (entry.pii_category, entry.original_surface.clone());
        if let Some(existing) = self.entries.get_mut(&key) {
            existing.languages.extend(entry.languages);
            return Ok(());
        }
        self.by_replacement.insert(
            (entry.pii_category, entry.replacement.clone()),
            entry.original_surface.clone(),
        );
        self.originals.insert(entry.original_surface.clone());
        self.entries.insert(key, entry);
        Ok(())
    }

    /// Merges externally curated entries; each accepted entry counts as one
    /// mutation.
    pub fn import(&mut self, entries: impl IntoIterator<Item = LedgerEntry>) -> Result<usize, LedgerError> {
        let mut n = 0;
        for entry in entries {
            self.insert_entry(entry)?;
            self.version += 1;
            n += 1;
        }
        Ok(n)
    }

    fn entry_lines(&self) -> String {
        let mut out = String::new();
        for entry in self.entries.values() {
            out.push_str(&serde_json::to_string(entry).expect("entries serialize"));
            out.push('\n');
        }
        out
    }

    fn digest(version: u64, body: &str) -> String {
        let mut hasher = Sha256::new();
        hasher.update(version.to_string().as_bytes());
        hasher.update(b"\n");
        hasher.update(body.as_bytes());
        let digest = hasher.finalize();
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        format!("sha256:{hex}")
    }

    /// Checksum of the canonical serialization.
    pub fn checksum(&self) -> String {
        Self::digest(self.version, &self.entry_lines())
    }

    /// Canonical file contents.
    pub fn to_bytes(&self) -> Vec<u8> {
        let body = self.entry_lines();
        let header = Header {
            format: FORMAT.into(),
            version: self.version,
            entries: self.entries.len(),
            checksum: Self::digest(self.version, &body),
            tool_version: TOOL_VERSION.into(),
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        out.push_str(&body);
        out.into_bytes()
    }

    pub fn from_bytes(bytes: &[u8], origin: &str) -> Result<Ledger, LedgerError> {
        let integrity = |message: String| LedgerError::Integrity {
            path: origin.to_string(),
            message,
        };
        let text = std::str::from_utf8(bytes).map_err(|e| integrity(format!("not UTF-8: {e}")))?;
        let (header_line, body) = text
            .split_once('\n')
            .ok_or_else(|| integrity("missing header line".into()))?;
        let header: Header =
            serde_json::from_str(header_line).map_err(|e| integrity(format!("bad header: {e}")))?;
        if header.format != FORMAT {
            return Err(integrity(format!("unknown format {:?}", header.format)));
        }
        let checksum = Self::digest(header.version, body);
        if checksum != header.checksum {
            return Err(integrity(format!(
                "checksum mismatch: header {} but content {}",
                header.checksum, checksum
            )));
        }
        let mut ledger = Ledger::new();
        for (i, line) in body.lines().enumerate() {
            let entry: LedgerEntry = serde_json::from_str(line)
                .map_err(|e| integrity(format!("entry {}: {e}", i + 1)))?;
            ledger
                .insert_entry(entry)
                .map_err(|e| integrity(format!("entry {}: {e}", i + 1)))?;
        }
        if ledger.len() != header.entries {
            return Err(integrity(format!(
                "header announces {} entries, found {}",
                header.entries,
                ledger.len()
            )));
        }
        ledger.version = header.version;
        Ok(ledger)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Ledger, LedgerError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(io_err(path))?;
        Ledger::from_bytes(&bytes, &path.display().to_string())
    }

    /// Loads `path`, or returns an empty ledger when the file does not exist.
    pub fn load_or_new(path: impl AsRef<Path>) -> Result<Ledger, LedgerError> {
        let path = path.as_ref();
        if path.exists() {
            Ledger::load(path)
        } else {
            Ok(Ledger::new())
        }
    }

    /// Atomically replaces the ledger file, holding the writer lock meanwhile.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LedgerError> {
        let lock = LedgerLock::acquire(path.as_ref())?;
        self.save_held(&lock)
    }

    /// Saves through a lock the caller already holds.
    pub fn save_held(&self, lock: &LedgerLock) -> Result<(), LedgerError> {
        self.save_with_writer(&lock.target, |file, bytes| file.write_all(bytes))
    }

    /// Atomic save with a caller-supplied write step. The target is only
    /// replaced after `write` returns successfully and the data is synced.
    #[doc(hidden)]
    pub fn save_with_writer(
        &self,
        path: &Path,
        write: impl FnOnce(&mut File, &[u8]) -> std::io::Result<()>,
    ) -> Result<(), LedgerError> {
        let bytes = self.to_bytes();
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
        write(tmp.as_file_mut(), &bytes).map_err(io_err(path))?;
        tmp.as_file().sync_all().map_err(io_err(path))?;
        tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
        Ok(())
    }
}

/// Advisory single-writer lock: a `<ledger>.lock` file created exclusively
/// and removed on drop.
#[derive(Debug)]
pub struct LedgerLock {
    target: PathBuf,
    lock_path: PathBuf,
}

impl LedgerLock {
    pub fn acquire(target: &Path) -> Result<LedgerLock, LedgerError> {
        let mut name = target.file_name().unwrap_or_default().to_os_string();
        name.push(".lock");
        let lock_path = target.with_file_name(name);
        match OpenOptions::new().write(true).create_new(true).open(&lock_path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(LedgerLock {
                    target: target.to_path_buf(),
                    lock_path,
                })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                if holder_is_gone(&lock_path) && std::fs::remove_file(&lock_path).is_ok() {
                    return LedgerLock::acquire(target);
                }
                Err(LedgerError::Locked {
                    path: target.display().to_string(),
                })
            }
            Err(e) => Err(io_err(&lock_path)(e)),
        }
    }

    pub fn target(&self) -> &Path {
        &self.target
    }
}

/// True when the lock file names a process that no longer exists.
fn holder_is_gone(lock_path: &Path) -> bool {
    let Ok(text) = std::fs::read_to_string(lock_path) else {
        return false;
    };
    let Ok(pid) = text.trim().parse::<u32>() else {
        return false;
    };
    if pid == std::process::id() {
        return false;
    }
    cfg!(target_os = "linux") && !Path::new(&format!("/proc/{pid}")).exists()
}

impl Drop for LedgerLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.lock_path);
    }
}

/// Entry-level difference between two ledgers.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LedgerDiff {
    pub added: Vec<LedgerEntry>,
    pub removed: Vec<LedgerEntry>,
    pub changed: Vec<(LedgerEntry, LedgerEntry)>,
}

impl LedgerDiff {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty() && self.changed.is_empty()
    }
}

pub fn diff(old: &Ledger, new: &Ledger) -> LedgerDiff {
    let mut out = LedgerDiff::default();
    for (key, entry) in &new.entries {
        match old.entries.get(key) {
            None => out.added.push(entry.clone()),
            Some(prev) if prev != entry => out.changed.push((prev.clone(), entry.clone())),
            Some(_) => {}
        }
    }
    for (key, entry) in &old.entries {
        if !new.entries.contains_key(key) {
            out.removed.push(entry.clone());
        }
    }
    out
}

/// Entries as plain JSONL, without the header.
pub fn export_entries(ledger: &Ledger) -> String {
    ledger.entry_lines()
}

pub fn parse_entries(text: &str) -> Result<Vec<LedgerEntry>, LedgerError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| LedgerError::Integrity {
                path: "<entries>".into(),
                message: format!("line {}: {e}", i + 1),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Ledger {
        let mut l = Ledger::new();
        l.record("Myriam Zegman", PiiCategory::PersonName, "Rachel Kaufman", "en", CreatedBy::Generator)
            .unwrap();
        l.record("Virginia", PiiCategory::PersonName, "Mary", "en", CreatedBy::Generator).unwrap();
        l
    }

    #[test]
    fn empty_lookup() {
        assert_eq!(Ledger::new().lookup("x", PiiCategory::Url), None);
    }

    #[test]
    fn lookup_is_exact() {
        let l = sample();
        assert_eq!(l.lookup("Myriam Zegman", PiiCategory::PersonName), Some("Rachel Kaufman"));
        assert_eq!(l.lookup("myriam zegman", PiiCategory::PersonName), None);
        assert_eq!(l.lookup("Myriam Zegman", PiiCategory::Username), None);
    }

    #[test]
    fn same_mapping_new_language_extends() {
        let mut l = sample();
        let v = l.version();
        l.record("Myriam Zegman", PiiCategory::PersonName, "Rachel Kaufman", "fr", CreatedBy::Generator)
            .unwrap();
        let langs: Vec<_> = l.entry("Myriam Zegman", PiiCategory::PersonName).unwrap().languages.iter().cloned().collect();
        assert_eq!(langs, ["en", "fr"]);
        assert_eq!(l.version(), v + 1);
        assert_eq!(l.len(), 2);
    }

    #[test]
    fn conflicting_mapping_is_rejected() {
        let mut l = sample();
        let err = l
            .record("Myriam Zegman", PiiCategory::PersonName, "Sarah Levy", "en", CreatedBy::Reviewer)
            .unwrap_err();
        match err {
            LedgerError::Conflict { existing, .. } => assert_eq!(existing, "Rachel Kaufman"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn replacement_reuse_is_rejected() {
        let mut l = sample();
        let err = l.record("Maria", PiiCategory::PersonName, "Mary", "en", CreatedBy::Generator).unwrap_err();
        assert!(matches!(err, LedgerError::Injectivity { ref owner, .. } if owner == "Virginia"), "{err}");
        // another category may reuse it
        l.record("Maria", PiiCategory::Username, "Mary", "en", CreatedBy::Generator).unwrap();
    }

    #[test]
    fn identity_and_empty_replacements_are_rejected() {
        let mut l = Ledger::new();
        assert!(l.record("Mary", PiiCategory::PersonName, "Mary", "en", CreatedBy::Generator).is_err());
        assert!(l.record("Mary", PiiCategory::PersonName, "", "en", CreatedBy::Generator).is_err());
        assert_eq!(l.version(), 0);
    }

    #[test]
    fn round_trip_bytes() {
        let l = sample();
        let back = Ledger::from_bytes(&l.to_bytes(), "mem").unwrap();
        assert_eq!(back, l);
        assert_eq!(back.checksum(), l.checksum());
        assert_eq!(Ledger::from_bytes(&Ledger::new().to_bytes(), "mem").unwrap(), Ledger::new());
    }

    #[test]
    fn tampering_is_detected() {
        let bytes = String::from_utf8(sample().to_bytes()).unwrap();
        let tampered = bytes.replace("Rachel Kaufman", "Rachel Kaufmann");
        assert!(matches!(
            Ledger::from_bytes(tampered.as_bytes(), "mem"),
            Err(LedgerError::Integrity { .. })
        ));
        let truncated = &bytes.as_bytes()[..bytes.len() - 10];
        assert!(matches!(Ledger::from_bytes(truncated, "mem"), Err(LedgerError::Integrity { .. })));
        assert!(Ledger::from_bytes(b"", "mem").is_err());
    }

    #[test]
    fn lock_excludes_second_writer() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.jsonl");
        let lock = LedgerLock::acquire(&path).unwrap();
        assert!(matches!(sample().save(&path), Err(LedgerError::Locked { .. })));
        sample().save_held(&lock).unwrap();
        drop(lock);
        sample().save(&path).unwrap();
        assert_eq!(Ledger::load(&path).unwrap(), sample());
    }

    #[test]
    #[cfg(target_os = "linux")]
    fn stale_lock_of_dead_process_is_reclaimed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.jsonl");
        std::fs::write(dir.path().join("ledger.jsonl.lock"), "4294967294\n").unwrap();
        sample().save(&path).unwrap();
        std::fs::write(dir.path().join("ledger.jsonl.lock"), "not a pid\n").unwrap();
        assert!(matches!(sample().save(&path), Err(LedgerError::Locked { .. })));
    }

    #[test]
    fn diff_reports_changes() {
        let old = sample();
        let mut new = sample();
        new.record("Muhammed", PiiCategory::PersonName, "Ahmed", "ar", CreatedBy::Generator).unwrap();
        new.record("Virginia", PiiCategory::PersonName, "Mary", "fr", CreatedBy::Generator).unwrap();
        let d = diff(&old, &new);
        assert_eq!(d.added.len(), 1);
        assert_eq!(d.changed.len(), 1);
        assert!(d.removed.is_empty());
        assert!(diff(&old, &old).is_empty());
    }

    #[test]
    fn export_import() {
        let l = sample();
        let mut other = Ledger::new();
        let n = other.import(parse_entries(&export_entries(&l)).unwrap()).unwrap();
        assert_eq!(n, 2);
        assert_eq!(diff(&l, &other), LedgerDiff::default());
    }
}
