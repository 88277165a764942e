//! Text transformation: placeholder strategies, realistic pseudonyms and
//! invalidation of technical identifiers.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{char_slice, Document, EntitySpan, PiiCategory};
use crate::ledger::{CreatedBy, Ledger, LedgerError};
use crate::policy::Decision;
use crate::pools::NamePools;
use crate::text::{contains_word, normalize};

#[derive(Debug, Error)]
pub enum SubstituteError {
    #[error("{doc_id}: span [{start}, {end}) has no decision")]
    Undecided { doc_id: String, start: usize, end: usize },
    #[error("{doc_id}: span [{start}, {end}) is not kept but has no PII category")]
    MissingCategory { doc_id: String, start: usize, end: usize },
    #[error("the REALISTIC strategy needs a ledger")]
    LedgerRequired,
    #[error("pool exhausted for {surface:?} ({category}, {language})")]
    PoolExhausted {
        surface: String,
        category: PiiCategory,
        language: String,
    },
    #[error("{surface:?} is too short to invalidate")]
    TooShort { surface: String },
    #[error("cannot invalidate a {category} span")]
    Unsupported { category: PiiCategory },
    #[error("no collision-free invalidation of {surface:?}")]
    InvalidationExhausted { surface: String },
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    S0,
    S1,
    S2,
    S3,
    #[serde(rename = "REALISTIC")]
    Realistic,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [Strategy::S0, Strategy::S1, Strategy::S2, Strategy::S3, Strategy::Realistic];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::S0 => "S0",
            Strategy::S1 => "S1",
            Strategy::S2 => "S2",
            Strategy::S3 => "S3",
            Strategy::Realistic => "REALISTIC",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "S0" => Ok(Strategy::S0),
            "S1" => Ok(Strategy::S1),
            "S2" => Ok(Strategy::S2),
            "S3" => Ok(Strategy::S3),
            "REALISTIC" | "OURS" => Ok(Strategy::Realistic),
            _ => Err(format!("unknown strategy {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Seed(pub u64);

/// Which surface properties a realistic pseudonym must share with the original.
#[derive(Debug, Clone)]
pub struct PseudonymConstraints {
    pub token_count: bool,
    pub leading_symbol: bool,
    pub script: bool,
    pub casing: bool,
    pub digits: bool,
    /// Keep the first token of an address ("Rue", "12") and replace the rest.
    pub address_prefix: bool,
    pub pools: Arc<NamePools>,
    /// Surfaces a replacement must neither equal nor contain.
    pub protected: BTreeSet<String>,
}

impl Default for PseudonymConstraints {
    fn default() -> Self {
        PseudonymConstraints {
            token_count: true,
            leading_symbol: true,
            script: true,
            casing: true,
            digits: true,
            address_prefix: true,
            pools: Arc::new(NamePools::builtin()),
            protected: BTreeSet::new(),
        }
    }
}

impl PseudonymConstraints {
    pub fn with_pools(pools: NamePools) -> Self {
        PseudonymConstraints {
            pools: Arc::new(pools),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Script {
    Latin,
    Arabic,
    Other,
}

fn is_arabic(c: char) -> bool {
    matches!(c as u32, 0x0600..=0x06FF | 0x0750..=0x077F | 0x08A0..=0x08FF | 0xFB50..=0xFDFF | 0xFE70..=0xFEFF)
}

fn is_latin(c: char) -> bool {
    c.is_ascii_alphabetic() || matches!(c as u32, 0x00C0..=0x024F | 0x1E00..=0x1EFF)
}

/// Majority script of the letters, `None` without letters.
fn script_of(s: &str) -> Option<Script> {
    let (mut latin, mut arabic, mut other) = (0, 0, 0);
    for c in s.chars().filter(|c| c.is_alphabetic()) {
        if is_latin(c) {
            latin += 1;
        } else if is_arabic(c) {
            arabic += 1;
        } else {
            other += 1;
        }
    }
    if latin + arabic + other == 0 {
        None
    } else if latin >= arabic && latin >= other {
        Some(Script::Latin)
    } else if arabic >= other {
        Some(Script::Arabic)
    } else {
        Some(Script::Other)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Casing {
    NoCase,
    Lower,
    Upper,
    Title,
    Mixed,
}

fn casing_of(token: &str) -> Casing {
    let cased: Vec<char> = token.chars().filter(|c| c.is_lowercase() || c.is_uppercase()).collect();
    match cased.as_slice() {
        [] => Casing::NoCase,
        [c] if c.is_uppercase() => Casing::Title,
        _ if cased.iter().all(|c| c.is_lowercase()) => Casing::Lower,
        _ if cased.iter().all(|c| c.is_uppercase()) => Casing::Upper,
        [first, rest @ ..] if first.is_uppercase() && rest.iter().all(|c| c.is_lowercase()) => Casing::Title,
        _ => Casing::Mixed,
    }
}

fn casing_shape(s: &str) -> Vec<Casing> {
    s.split_whitespace().map(casing_of).collect()
}

fn has_digit(s: &str) -> bool {
    s.chars().any(|c| c.is_numeric())
}

fn fnv1a(parts: &[&[u8]]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for b in part.iter().chain(std::iter::once(&0xff)) {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

fn rng_for(tag: &str, surface: &str, category: PiiCategory, seed: Seed, attempt: u64) -> ChaCha8Rng {
    let h = fnv1a(&[tag.as_bytes(), category.as_str().as_bytes(), surface.as_bytes()]);
    ChaCha8Rng::seed_from_u64(seed.0 ^ h ^ attempt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Splits a surface into the part that is kept verbatim and the part to replace.
fn split_fixed<'a>(surface: &'a str, category: PiiCategory, constraints: &PseudonymConstraints) -> (&'a str, &'a str) {
    if constraints.leading_symbol && (surface.starts_with('@') || surface.starts_with('#')) {
        return surface.split_at(1);
    }
    if constraints.address_prefix && category == PiiCategory::Address {
        let trimmed = surface.trim_start();
        if let Some(pos) = trimmed.find(char::is_whitespace) {
            let rest = trimmed[pos..].trim_start();
            if !rest.is_empty() {
                let cut = surface.len() - rest.len();
                return surface.split_at(cut);
            }
        }
    }
    ("", surface)
}

fn fits(core: &str, candidate: &str, c: &PseudonymConstraints) -> bool {
    if candidate.is_empty() || candidate == core {
        return false;
    }
    if c.token_count && core.split_whitespace().count() != candidate.split_whitespace().count() {
        return false;
    }
    if c.script {
        if let Some(script) = script_of(core) {
            if script_of(candidate) != Some(script) {
                return false;
            }
        }
    }
    if c.casing && casing_shape(core) != casing_shape(candidate) {
        return false;
    }
    if c.digits && has_digit(core) != has_digit(candidate) {
        return false;
    }
    true
}

/// True when `candidate` would reintroduce a protected surface, verbatim or
/// after normalization. Surfaces under three characters only count when
/// `strict` is set.
fn touches_protected(candidate: &str, protected: &[&str], strict: bool) -> bool {
    let cand = normalize(candidate);
    protected.iter().any(|p| {
        if !strict && p.chars().count() < 3 {
            return false;
        }
        if candidate.contains(p) {
            return true;
        }
        let np = normalize(p);
        !np.is_empty() && contains_word(&cand, &np)
    })
}

/// Picks a pool entry for `surface`, records it in the ledger and returns it.
///
/// An existing ledger mapping is returned as is. Selection is a pure function
/// of the seed, the surface, the pools and the ledger contents.
pub fn realistic_pseudonym(
    surface: &str,
    category: PiiCategory,
    language: &str,
    constraints: &PseudonymConstraints,
    ledger: &mut Ledger,
    seed: Seed,
) -> Result<String, SubstituteError> {
    realistic_inner(surface, category, language, constraints, ledger, seed, &[])
}

fn realistic_inner(
    surface: &str,
    category: PiiCategory,
    language: &str,
    constraints: &PseudonymConstraints,
    ledger: &mut Ledger,
    seed: Seed,
    extra_protected: &[&str],
) -> Result<String, SubstituteError> {
    if let Some(existing) = ledger.lookup(surface, category) {
        return Ok(existing.to_string());
    }
    let (fixed, core) = split_fixed(surface, category, constraints);
    let mut protected: Vec<&str> = constraints.protected.iter().map(String::as_str).collect();
    protected.extend(ledger.originals());
    let mut local: Vec<&str> = extra_protected.to_vec();
    local.push(surface);

    let mut languages = vec![language];
    languages.extend(constraints.pools.languages().into_iter().filter(|l| *l != language));
    for lang in languages {
        let candidates: Vec<&str> = constraints
            .pools
            .get(lang, category)
            .iter()
            .map(|c| c.trim_start_matches(['@', '#']))
            .filter(|c| fits(core, c, constraints))
            .collect();
        if candidates.is_empty() {
            continue;
        }
        let mut rng = rng_for("pool", surface, category, seed, 0);
        let start = (rng.next_u64() % candidates.len() as u64) as usize;
        for i in 0..candidates.len() {
            let full = format!("{fixed}{}", candidates[(start + i) % candidates.len()]);
            if full == surface || ledger.check(surface, category, &full).is_err() {
                continue;
            }
            if touches_protected(&full, &local, true) || touches_protected(&full, &protected, false) {
                continue;
            }
            ledger.record(surface, category, &full, language, CreatedBy::Generator)?;
            return Ok(full);
        }
    }
    Err(SubstituteError::PoolExhausted {
        surface: surface.to_string(),
        category,
        language: language.to_string(),
    })
}

/// Categories whose values are perturbed in place instead of replaced.
pub fn invalidates_in_place(category: PiiCategory) -> bool {
    matches!(
        category,
        PiiCategory::Url | PiiCategory::Username | PiiCategory::Email | PiiCategory::Phone | PiiCategory::Hashtag
    )
}

fn alnum_in(chars: &[char], from: usize, to: usize) -> Vec<usize> {
    (from..to.min(chars.len())).filter(|&i| chars[i].is_alphanumeric()).collect()
}

/// Indices of the characters that identify the resource.
fn identifying_tail(chars: &[char], category: PiiCategory) -> Vec<usize> {
    let n = chars.len();
    let find = |from: usize, pat: &str| -> Option<usize> {
        let p: Vec<char> = pat.chars().collect();
        (from..n.saturating_sub(p.len() - 1)).find(|&i| chars[i..i + p.len()] == p[..])
    };
    match category {
        PiiCategory::Url => {
            let scheme_end = find(0, "://").map_or(0, |i| i + 3);
            let host_end = (scheme_end..n).find(|&i| chars[i] == '/').unwrap_or(n);
            let path = alnum_in(chars, host_end + 1, n);
            if path.len() >= 3 {
                return path;
            }
            let mut host_start = scheme_end;
            if chars[host_start..host_end].iter().collect::<String>().to_lowercase().starts_with("www.") {
                host_start += 4;
            }
            let tld = (host_start..host_end).rev().find(|&i| chars[i] == '.').unwrap_or(host_end);
            let mut tail = alnum_in(chars, host_start, tld);
            tail.extend(path);
            if tail.len() >= 3 {
                tail
            } else {
                alnum_in(chars, scheme_end, n)
            }
        }
        PiiCategory::Email => {
            let at = (0..n).rev().find(|&i| chars[i] == '@').unwrap_or(n);
            alnum_in(chars, 0, at)
        }
        PiiCategory::Phone => {
            let digits: Vec<usize> = (0..n).filter(|&i| chars[i].is_ascii_digit()).collect();
            let keep = if chars.first() == Some(&'+') { 2 } else { 1 };
            digits.into_iter().skip(keep).collect()
        }
        _ => alnum_in(chars, 0, n),
    }
}

const ARABIC_LETTERS: &str = "ابتثجحخدذرزسشصضطظعغفقكلمنهوي";

fn perturb(c: char, rng: &mut ChaCha8Rng) -> char {
    let pool: Vec<char> = if c.is_ascii_digit() {
        ('0'..='9').collect()
    } else if c.is_uppercase() {
        ('A'..='Z').collect()
    } else if c.is_lowercase() {
        ('a'..='z').collect()
    } else if is_arabic(c) {
        ARABIC_LETTERS.chars().collect()
    } else if c.is_numeric() {
        ('0'..='9').collect()
    } else {
        ('a'..='z').collect()
    };
    loop {
        let pick = pool[rng.gen_range(0..pool.len())];
        if pick != c {
            return pick;
        }
    }
}

/// Makes a technical identifier unreachable while keeping its shape.
///
/// The scheme and host of a URL, the domain of an email, the `@` or `#` of a
/// handle and the country prefix of a phone number are preserved; every
/// alphanumeric character of the identifying tail is changed.
pub fn invalidate(surface: &str, category: PiiCategory, seed: Seed) -> Result<String, SubstituteError> {
    invalidate_attempt(surface, category, seed, 0)
}

fn invalidate_attempt(surface: &str, category: PiiCategory, seed: Seed, attempt: u64) -> Result<String, SubstituteError> {
    if !invalidates_in_place(category) {
        return Err(SubstituteError::Unsupported { category });
    }
    let mut chars: Vec<char> = surface.chars().collect();
    let tail = identifying_tail(&chars, category);
    if chars.len() < 4 || tail.len() < 3 {
        return Err(SubstituteError::TooShort {
            surface: surface.to_string(),
        });
    }
    let mut rng = rng_for("invalidate", surface, category, seed, attempt);
    for i in tail {
        chars[i] = perturb(chars[i], &mut rng);
    }
    Ok(chars.into_iter().collect())
}

const MAX_INVALIDATION_ATTEMPTS: u64 = 32;

#[allow(clippy::too_many_arguments)]
fn realistic_replacement(
    doc: &Document,
    span: &EntitySpan,
    category: PiiCategory,
    decision: Decision,
    ledger: &mut Ledger,
    constraints: &PseudonymConstraints,
    seed: Seed,
    doc_protected: &[&str],
) -> Result<String, SubstituteError> {
    let surface = span.surface.as_str();
    if let Some(existing) = ledger.lookup(surface, category) {
        return Ok(existing.to_string());
    }
    if let Some(preset) = span.replacement.as_deref().filter(|r| !r.is_empty()) {
        ledger.record(surface, category, preset, &doc.language, CreatedBy::Reviewer)?;
        return Ok(preset.to_string());
    }
    let technical = matches!(category, PiiCategory::Url | PiiCategory::Phone)
        || (decision == Decision::Invalidate && invalidates_in_place(category));
    if technical {
        for attempt in 0..MAX_INVALIDATION_ATTEMPTS {
            let candidate = invalidate_attempt(surface, category, seed, attempt)?;
            if ledger.check(surface, category, &candidate).is_ok() && !ledger.is_original(&candidate) {
                ledger.record(surface, category, &candidate, &doc.language, CreatedBy::Generator)?;
                return Ok(candidate);
            }
        }
        return Err(SubstituteError::InvalidationExhausted {
            surface: surface.to_string(),
        });
    }
    realistic_inner(surface, category, &doc.language, constraints, ledger, seed, doc_protected)
}

/// Output builder that tidies whitespace around deleted spans.
struct Builder {
    out: String,
    len: usize,
    /// Characters before this point belong to emitted spans and are never popped.
    protected: usize,
    /// Indices of deleted spans whose output offset is not fixed yet.
    pending: Vec<usize>,
}

const CLOSING_PUNCT: &[char] = &[',', '.', '!', '?', ';', ':', '…', '،', '؛', '؟', ')', ']', '»'];

impl Builder {
    fn push(&mut self, s: &str) {
        self.out.push_str(s);
        self.len += s.chars().count();
    }

    fn pop_horizontal_space(&mut self) {
        while self.len > self.protected && self.out.ends_with([' ', '\t']) {
            self.out.pop();
            self.len -= 1;
        }
    }

    /// Appends a gap of original text, resolving pending deletions first.
    fn push_gap(&mut self, gap: &str, spans: &mut [EntitySpan]) {
        if gap.is_empty() {
            return;
        }
        let mut gap = gap;
        if !self.pending.is_empty() {
            let first = gap.chars().next().unwrap_or(' ');
            let out_ends_space = self.out.ends_with([' ', '\t']) && self.len > self.protected;
            if self.len == 0 {
                gap = gap.trim_start_matches([' ', '\t']);
            } else if out_ends_space && (first.is_whitespace() || CLOSING_PUNCT.contains(&first)) {
                self.pop_horizontal_space();
            }
            self.settle(spans);
        }
        self.push(gap);
    }

    fn settle(&mut self, spans: &mut [EntitySpan]) {
        for i in self.pending.drain(..) {
            spans[i].start = self.len;
            spans[i].end = self.len;
        }
    }

    fn finish(mut self, spans: &mut [EntitySpan]) -> String {
        if !self.pending.is_empty() {
            self.pop_horizontal_space();
            self.settle(spans);
        }
        self.out
    }
}

/// Rewrites one decided document with the given strategy.
///
/// Kept spans are copied verbatim; spans decided `delete` are removed under
/// every strategy. Offsets and surfaces of the returned spans refer to the
/// new text and each non-kept span carries its replacement.
pub fn apply_strategy(
    doc: &Document,
    strategy: Strategy,
    mut ledger: Option<&mut Ledger>,
    constraints: &PseudonymConstraints,
    seed: Seed,
) -> Result<Document, SubstituteError> {
    if strategy == Strategy::Realistic && ledger.is_none() {
        return Err(SubstituteError::LedgerRequired);
    }
    let mut spans = doc.spans.clone();
    spans.sort_by_key(|s| (s.start, s.end));

    let doc_protected: Vec<&str> = doc
        .spans
        .iter()
        .filter(|s| s.decision != Some(Decision::Keep) && !s.is_deleted())
        .map(|s| s.surface.as_str())
        .collect();

    let mut replacements: Vec<Option<String>> = Vec::with_capacity(spans.len());
    let mut ordinal = 0;
    for span in &spans {
        let at = |doc_id: &str| (doc_id.to_string(), span.start, span.end);
        let decision = span.decision.ok_or_else(|| {
            let (doc_id, start, end) = at(&doc.id);
            SubstituteError::Undecided { doc_id, start, end }
        })?;
        if decision == Decision::Keep {
            replacements.push(None);
            continue;
        }
        if span.is_deleted() || decision == Decision::Delete || strategy == Strategy::S0 {
            replacements.push(Some(String::new()));
            continue;
        }
        let category = span.pii_category.ok_or_else(|| {
            let (doc_id, start, end) = at(&doc.id);
            SubstituteError::MissingCategory { doc_id, start, end }
        })?;
        let rep = match strategy {
            Strategy::S0 => unreachable!(),
            Strategy::S1 => "placeholder".to_string(),
            Strategy::S2 => category.placeholder_word().to_string(),
            Strategy::S3 => {
                ordinal += 1;
                format!("{}{ordinal}", category.placeholder_word())
            }
            Strategy::Realistic => {
                let ledger = ledger.as_deref_mut().ok_or(SubstituteError::LedgerRequired)?;
                realistic_replacement(doc, span, category, decision, ledger, constraints, seed, &doc_protected)?
            }
        };
        replacements.push(Some(rep));
    }

    let mut builder = Builder {
        out: String::with_capacity(doc.text.len()),
        len: 0,
        protected: 0,
        pending: Vec::new(),
    };
    let mut cursor = 0;
    let total = doc.char_len();
    for (i, rep) in replacements.into_iter().enumerate() {
        let (start, end) = (spans[i].start, spans[i].end);
        let gap = char_slice(&doc.text, cursor.min(start), start).unwrap_or("");
        builder.push_gap(gap, &mut spans);
        cursor = cursor.max(end);
        match rep {
            None => {
                if !builder.pending.is_empty() {
                    builder.settle(&mut spans);
                }
                let surface = spans[i].surface.clone();
                spans[i].start = builder.len;
                builder.push(&surface);
                spans[i].end = builder.len;
                builder.protected = builder.len;
            }
            Some(rep) if rep.is_empty() => {
                spans[i].surface = String::new();
                spans[i].replacement = Some(String::new());
                builder.pending.push(i);
            }
            Some(rep) => {
                if !builder.pending.is_empty() {
                    builder.settle(&mut spans);
                }
                spans[i].start = builder.len;
                builder.push(&rep);
                spans[i].end = builder.len;
                builder.protected = builder.len;
                spans[i].surface = rep.clone();
                spans[i].replacement = Some(rep);
            }
        }
    }
    let tail = char_slice(&doc.text, cursor.min(total), total).unwrap_or("");
    builder.push_gap(tail, &mut spans);
    let text = builder.finish(&mut spans);

    Ok(Document {
        text,
        spans,
        ..doc.clone()
    })
}

/// Applies a strategy to every document, sharing one ledger.
///
/// For REALISTIC output every non-kept surface of the corpus is protected so
/// that no replacement reintroduces another original.
pub fn apply_corpus(
    docs: &[Document],
    strategy: Strategy,
    mut ledger: Option<&mut Ledger>,
    constraints: &PseudonymConstraints,
    seed: Seed,
) -> Result<Vec<Document>, SubstituteError> {
    let mut constraints = constraints.clone();
    if strategy == Strategy::Realistic {
        for doc in docs {
            for span in &doc.spans {
                if span.decision != Some(Decision::Keep) && !span.is_deleted() {
                    constraints.protected.insert(span.surface.clone());
                }
            }
        }
    }
    docs.iter()
        .map(|doc| apply_strategy(doc, strategy, ledger.as_deref_mut(), &constraints, seed))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Detector;

    fn span(doc: &Document, surface: &str, cat: PiiCategory, decision: Decision) -> EntitySpan {
        let (s, e) = doc.find(surface).unwrap();
        doc.span(s, e, Detector::Manual).unwrap().with_category(cat).with_decision(decision)
    }

    fn sample() -> Document {
        let mut doc = Document::new("d1", "en", "Call Anna Weber at +33 6 12 34 56 78 or see https://example.org/p/abc123 now.");
        let spans = vec![
            span(&doc, "Anna Weber", PiiCategory::PersonName, Decision::Pseudonymize),
            span(&doc, "+33 6 12 34 56 78", PiiCategory::Phone, Decision::Pseudonymize),
            span(&doc, "https://example.org/p/abc123", PiiCategory::Url, Decision::Keep),
        ];
        doc.spans = spans;
        doc
    }

    #[test]
    fn casing_shapes() {
        assert_eq!(casing_of("Mary"), Casing::Title);
        assert_eq!(casing_of("mary"), Casing::Lower);
        assert_eq!(casing_of("MARY"), Casing::Upper);
        assert_eq!(casing_of("MaryJohanson1987"), Casing::Mixed);
        assert_eq!(casing_of("محمد"), Casing::NoCase);
        assert_eq!(casing_of("A"), Casing::Title);
        assert_eq!(casing_of("1987"), Casing::NoCase);
    }

    #[test]
    fn scripts() {
        assert_eq!(script_of("Élodie"), Some(Script::Latin));
        assert_eq!(script_of("محمد"), Some(Script::Arabic));
        assert_eq!(script_of("12345"), None);
    }

    #[test]
    fn split_keeps_symbols_and_address_prefix() {
        let c = PseudonymConstraints::default();
        assert_eq!(split_fixed("@bob", PiiCategory::Username, &c), ("@", "bob"));
        assert_eq!(split_fixed("Rue Alphonse Metayer", PiiCategory::Address, &c), ("Rue ", "Alphonse Metayer"));
        assert_eq!(split_fixed("Metayer", PiiCategory::Address, &c), ("", "Metayer"));
        assert_eq!(split_fixed("Anna Weber", PiiCategory::PersonName, &c), ("", "Anna Weber"));
    }

    #[test]
    fn placeholder_strategies() {
        let doc = sample();
        let c = PseudonymConstraints::default();
        let s1 = apply_strategy(&doc, Strategy::S1, None, &c, Seed(0)).unwrap();
        assert_eq!(s1.text, "Call placeholder at placeholder or see https://example.org/p/abc123 now.");
        let s2 = apply_strategy(&doc, Strategy::S2, None, &c, Seed(0)).unwrap();
        assert_eq!(s2.text, "Call name at phone or see https://example.org/p/abc123 now.");
        let s3 = apply_strategy(&doc, Strategy::S3, None, &c, Seed(0)).unwrap();
        assert_eq!(s3.text, "Call name1 at phone2 or see https://example.org/p/abc123 now.");
        let s0 = apply_strategy(&doc, Strategy::S0, None, &c, Seed(0)).unwrap();
        assert_eq!(s0.text, "Call at or see https://example.org/p/abc123 now.");
        for out in [&s0, &s1, &s2, &s3] {
            out.validate().unwrap();
        }
        assert!(s0.spans[0].is_deleted());
        assert_eq!(s0.spans[2].surface, "https://example.org/p/abc123");
    }

    #[test]
    fn deletion_cleanup_edges() {
        let c = PseudonymConstraints::default();
        let mut doc = Document::new("d", "fr", "@bob salut @eve !");
        doc.spans = vec![
            span(&doc, "@bob", PiiCategory::Username, Decision::Delete),
            span(&doc, "@eve", PiiCategory::Username, Decision::Delete),
        ];
        let out = apply_strategy(&doc, Strategy::S2, None, &c, Seed(0)).unwrap();
        assert_eq!(out.text, "salut !");
        out.validate().unwrap();
        assert_eq!((out.spans[0].start, out.spans[1].start), (0, 5));

        let mut doc = Document::new("d", "en", "Hi @bob");
        doc.spans = vec![span(&doc, "@bob", PiiCategory::Username, Decision::Delete)];
        assert_eq!(apply_strategy(&doc, Strategy::S1, None, &c, Seed(0)).unwrap().text, "Hi");
    }

    #[test]
    fn undecided_span_is_an_error() {
        let mut doc = sample();
        doc.spans[0].decision = None;
        let err = apply_strategy(&doc, Strategy::S1, None, &PseudonymConstraints::default(), Seed(0)).unwrap_err();
        assert!(matches!(err, SubstituteError::Undecided { .. }));
    }

    #[test]
    fn realistic_needs_a_ledger() {
        let err = apply_strategy(&sample(), Strategy::Realistic, None, &PseudonymConstraints::default(), Seed(0)).unwrap_err();
        assert!(matches!(err, SubstituteError::LedgerRequired));
    }

    #[test]
    fn realistic_replaces_and_records() {
        let doc = sample();
        let mut ledger = Ledger::new();
        let c = PseudonymConstraints::default();
        let out = apply_strategy(&doc, Strategy::Realistic, Some(&mut ledger), &c, Seed(7)).unwrap();
        out.validate().unwrap();
        let name = ledger.lookup("Anna Weber", PiiCategory::PersonName).unwrap();
        assert_eq!(name.split_whitespace().count(), 2);
        let phone = ledger.lookup("+33 6 12 34 56 78", PiiCategory::Phone).unwrap();
        assert!(phone.starts_with("+33 "));
        assert!(out.text.contains(name) && out.text.contains(phone));
        assert!(!out.text.contains("Anna Weber"));
    }

    #[test]
    fn invalidation_preserves_structure() {
        let url = invalidate("https://www.gofundme.com/f/help-anna", PiiCategory::Url, Seed(1)).unwrap();
        assert!(url.starts_with("https://www.gofundme.com/"));
        assert_ne!(url, "https://www.gofundme.com/f/help-anna");
        assert_eq!(url.chars().nth(26), Some('/'));
        assert_eq!(url.chars().nth(31), Some('-'));

        let email = invalidate("anna.weber@mail.example", PiiCategory::Email, Seed(1)).unwrap();
        assert!(email.ends_with("@mail.example"));
        assert_eq!(email.chars().nth(4), Some('.'));

        let handle = invalidate("@MaryJohanson1987", PiiCategory::Username, Seed(1)).unwrap();
        assert!(handle.starts_with('@'));
        assert_eq!(casing_shape(&handle[1..]).len(), 1);
        let differing = handle.chars().zip("@MaryJohanson1987".chars()).filter(|(a, b)| a != b).count();
        assert_eq!(differing, 16);

        let phone = invalidate("+33 6 12 34 56 78", PiiCategory::Phone, Seed(1)).unwrap();
        assert!(phone.starts_with("+33 "));
        assert_eq!(phone.len(), "+33 6 12 34 56 78".len());

        assert!(matches!(invalidate("@ab", PiiCategory::Username, Seed(0)), Err(SubstituteError::TooShort { .. })));
        assert!(matches!(invalidate("Anna", PiiCategory::PersonName, Seed(0)), Err(SubstituteError::Unsupported { .. })));
    }

    #[test]
    fn invalidation_is_deterministic() {
        for seed in 0..5 {
            assert_eq!(
                invalidate("https://t.example/xyz12", PiiCategory::Url, Seed(seed)).unwrap(),
                invalidate("https://t.example/xyz12", PiiCategory::Url, Seed(seed)).unwrap()
            );
        }
    }

    #[test]
    fn pool_exhaustion_is_reported() {
        let mut pools = NamePools::empty();
        pools.insert("en", PiiCategory::PersonName, vec!["Bob Stone".into()]);
        let c = PseudonymConstraints::with_pools(pools);
        let mut ledger = Ledger::new();
        assert_eq!(
            realistic_pseudonym("Ann Lee", PiiCategory::PersonName, "en", &c, &mut ledger, Seed(0)).unwrap(),
            "Bob Stone"
        );
        let err = realistic_pseudonym("Eve Moss", PiiCategory::PersonName, "en", &c, &mut ledger, Seed(0)).unwrap_err();
        assert!(matches!(err, SubstituteError::PoolExhausted { .. }));
    }

    #[test]
    fn replacements_avoid_protected_surfaces() {
        let mut pools = NamePools::empty();
        pools.insert("en", PiiCategory::PersonName, vec!["Bob Stone".into(), "Ada Hill".into()]);
        let mut c = PseudonymConstraints::with_pools(pools);
        c.protected.insert("Stone".into());
        let mut ledger = Ledger::new();
        let r = realistic_pseudonym("Ann Lee", PiiCategory::PersonName, "en", &c, &mut ledger, Seed(0)).unwrap();
        assert_eq!(r, "Ada Hill");
    }

    #[test]
    fn fallback_to_other_language_pools() {
        let c = PseudonymConstraints::default();
        let mut ledger = Ledger::new();
        let r = realistic_pseudonym("محمد علي", PiiCategory::PersonName, "en", &c, &mut ledger, Seed(0)).unwrap();
        assert_eq!(script_of(&r), Some(Script::Arabic));
    }
}
