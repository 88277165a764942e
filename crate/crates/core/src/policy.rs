//! Anonymization rulebook: which spans are kept, pseudonymized, invalidated
//! or deleted, given who they are about and what kind of data they are.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Document, EntitySpan, PiiCategory};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("undecidable span [{start}, {end}) {surface:?}: no PII category")]
    Undecidable {
        start: usize,
        end: usize,
        surface: String,
    },
    #[error("rules line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("roles line {line}: {message}")]
    Roles { line: usize, message: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Who a span is about. Assigned by human reviewers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub enum SubjectRole {
    PrivateIndividual,
    PublicFigure,
    Influencer,
    DeceasedPublicFigure,
    DeceasedPrivatePerson,
    DeceasedKnownTerrorist,
    ConvictedUnclearOrMinor,
    RadicalOrgAccount,
    GenericOrganization,
    VulnerableLinkedOrganization,
    #[default]
    Unassigned,
}

impl SubjectRole {
    pub const ALL: [SubjectRole; 11] = [
        SubjectRole::PrivateIndividual,
        SubjectRole::PublicFigure,
        SubjectRole::Influencer,
        SubjectRole::DeceasedPublicFigure,
        SubjectRole::DeceasedPrivatePerson,
        SubjectRole::DeceasedKnownTerrorist,
        SubjectRole::ConvictedUnclearOrMinor,
        SubjectRole::RadicalOrgAccount,
        SubjectRole::GenericOrganization,
        SubjectRole::VulnerableLinkedOrganization,
        SubjectRole::Unassigned,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SubjectRole::PrivateIndividual => "PrivateIndividual",
            SubjectRole::PublicFigure => "PublicFigure",
            SubjectRole::Influencer => "Influencer",
            SubjectRole::DeceasedPublicFigure => "DeceasedPublicFigure",
            SubjectRole::DeceasedPrivatePerson => "DeceasedPrivatePerson",
            SubjectRole::DeceasedKnownTerrorist => "DeceasedKnownTerrorist",
            SubjectRole::ConvictedUnclearOrMinor => "ConvictedUnclearOrMinor",
            SubjectRole::RadicalOrgAccount => "RadicalOrgAccount",
            SubjectRole::GenericOrganization => "GenericOrganization",
            SubjectRole::VulnerableLinkedOrganization => "VulnerableLinkedOrganization",
            SubjectRole::Unassigned => "Unassigned",
        }
    }

    /// Roles whose indirect identifiers fall under the aggregation rule.
    /// Unreviewed spans count as private.
    pub fn is_private(self) -> bool {
        matches!(
            self,
            SubjectRole::PrivateIndividual
                | SubjectRole::DeceasedPrivatePerson
                | SubjectRole::ConvictedUnclearOrMinor
                | SubjectRole::Unassigned
        )
    }
}

impl fmt::Display for SubjectRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SubjectRole {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SubjectRole::ALL
            .iter()
            .copied()
            .find(|r| r.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown subject role `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Keep,
    Pseudonymize,
    Invalidate,
    Delete,
}

impl Decision {
    pub const ALL: [Decision; 4] = [
        Decision::Keep,
        Decision::Pseudonymize,
        Decision::Invalidate,
        Decision::Delete,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Keep => "keep",
            Decision::Pseudonymize => "pseudonymize",
            Decision::Invalidate => "invalidate",
            Decision::Delete => "delete",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Decision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Decision::ALL
            .iter()
            .copied()
            .find(|d| d.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown decision `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdentifierKind {
    Direct,
    Indirect,
}

impl IdentifierKind {
    /// Default kind of each category.
    ///
    /// | kind     | categories                                          |
    /// |----------|-----------------------------------------------------|
    /// | direct   | PERSON_NAME USERNAME URL EMAIL PHONE ADDRESS        |
    /// | indirect | LOCATION ORG_NAME HASHTAG MEDIA_TITLE OTHER          |
    pub fn of(category: PiiCategory) -> IdentifierKind {
        match category {
            PiiCategory::PersonName
            | PiiCategory::Username
            | PiiCategory::Url
            | PiiCategory::Email
            | PiiCategory::Phone
            | PiiCategory::Address => IdentifierKind::Direct,
            PiiCategory::Location
            | PiiCategory::OrgName
            | PiiCategory::Hashtag
            | PiiCategory::MediaTitle
            | PiiCategory::Other => IdentifierKind::Indirect,
        }
    }
}

impl FromStr for IdentifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "direct" => Ok(IdentifierKind::Direct),
            "indirect" => Ok(IdentifierKind::Indirect),
            _ => Err(format!("unknown identifier kind `{s}`")),
        }
    }
}

/// One line of the rulebook. `None` fields are wildcards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub roles: Option<Vec<SubjectRole>>,
    pub categories: Option<Vec<PiiCategory>>,
    pub kind: Option<IdentifierKind>,
    pub sensitive: Option<bool>,
    pub decision: Decision,
}

impl Rule {
    fn matches(&self, role: SubjectRole, category: PiiCategory, sensitive: bool) -> bool {
        self.roles.as_ref().is_none_or(|r| r.contains(&role))
            && self.categories.as_ref().is_none_or(|c| c.contains(&category))
            && self.kind.is_none_or(|k| k == IdentifierKind::of(category))
            && self.sensitive.is_none_or(|s| s == sensitive)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
    pub default: Decision,
    pub anonymize_at_least_one_indirect: bool,
}

const DEFAULT_RULES: &str = include_str!("../data/default.rules");

impl Default for RuleSet {
    fn default() -> Self {
        RuleSet::parse(DEFAULT_RULES).expect("built-in rulebook parses")
    }
}

fn parse_list<T: FromStr<Err = String>>(field: &str) -> Result<Option<Vec<T>>, String> {
    if field == "*" {
        return Ok(None);
    }
    field.split(',').map(|p| p.trim().parse()).collect::<Result<Vec<_>, _>>().map(Some)
}

impl RuleSet {
    pub fn default_text() -> &'static str {
        DEFAULT_RULES
    }

    pub fn parse(text: &str) -> Result<Self, PolicyError> {
        let mut rules = Vec::new();
        let mut default = Decision::Pseudonymize;
        let mut indirect = true;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |message: String| PolicyError::Syntax { line: i + 1, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                ["default", d] => default = d.parse().map_err(syntax)?,
                ["indirect_rule", flag] => {
                    indirect = match *flag {
                        "on" => true,
                        "off" => false,
                        other => return Err(syntax(format!("expected on/off, got `{other}`"))),
                    }
                }
                [role, category, kind, decision, rest @ ..] if rest.len() <= 1 => {
                    let sensitive = match rest.first() {
                        None => None,
                        Some(&"sensitive") => Some(true),
                        Some(&"plain") => Some(false),
                        Some(other) => {
                            return Err(syntax(format!("expected sensitive/plain, got `{other}`")))
                        }
                    };
                    rules.push(Rule {
                        roles: parse_list(role).map_err(syntax)?,
                        categories: parse_list(category).map_err(syntax)?,
                        kind: if *kind == "*" {
                            None
                        } else {
                            Some(kind.parse().map_err(syntax)?)
                        },
                        sensitive,
                        decision: decision.parse().map_err(syntax)?,
                    });
                }
                _ => return Err(syntax(format!("cannot parse `{line}`"))),
            }
        }
        Ok(RuleSet {
            rules,
            default,
            anonymize_at_least_one_indirect: indirect,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PolicyError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| PolicyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        RuleSet::parse(&text)
    }

    /// First matching rule, or the default decision.
    pub fn resolve(&self, role: SubjectRole, category: PiiCategory, sensitive: bool) -> Decision {
        self.rules
            .iter()
            .find(|r| r.matches(role, category, sensitive))
            .map_or(self.default, |r| r.decision)
    }
}

pub fn decide(span: &EntitySpan, role: SubjectRole, rules: &RuleSet) -> Result<Decision, PolicyError> {
    let category = span.pii_category.ok_or_else(|| PolicyError::Undecidable {
        start: span.start,
        end: span.end,
        surface: span.surface.clone(),
    })?;
    Ok(rules.resolve(role, category, span.sensitive))
}

/// Corpus-wide count of spans per category; drives the choice of which
/// indirect identifier to hide.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CategoryFrequency(BTreeMap<PiiCategory, usize>);

impl CategoryFrequency {
    pub fn from_corpus(docs: &[Document]) -> Self {
        let mut counts = BTreeMap::new();
        for span in docs.iter().flat_map(|d| &d.spans) {
            if let Some(c) = span.pii_category {
                *counts.entry(c).or_insert(0) += 1;
            }
        }
        CategoryFrequency(counts)
    }

    pub fn get(&self, category: PiiCategory) -> usize {
        self.0.get(&category).copied().unwrap_or(0)
    }
}

fn is_private_indirect_kept(span: &EntitySpan) -> bool {
    span.decision == Some(Decision::Keep)
        && span
            .pii_category
            .is_some_and(|c| IdentifierKind::of(c) == IdentifierKind::Indirect)
        && span.subject_role.unwrap_or_default().is_private()
}

/// Indices of kept indirect identifiers about private individuals.
pub fn kept_private_indirect(spans: &[EntitySpan]) -> Vec<usize> {
    spans
        .iter()
        .enumerate()
        .filter(|(_, s)| is_private_indirect_kept(s))
        .map(|(i, _)| i)
        .collect()
}

/// Pseudonymizes kept indirect identifiers of private individuals until at
/// most one remains per document. The span whose category is rarest in the
/// corpus goes first; ties fall to the smaller start offset. Every kept
/// mention of the chosen entity (same surface and category) flips with it,
/// otherwise the remaining mention would reveal the replaced one.
pub fn enforce_indirect_rule(doc: &Document, rules: &RuleSet, freq: &CategoryFrequency) -> Vec<EntitySpan> {
    let mut spans = doc.spans.clone();
    if !rules.anonymize_at_least_one_indirect {
        return spans;
    }
    let mut kept = kept_private_indirect(&spans);
    while kept.len() >= 2 {
        let &idx = kept
            .iter()
            .min_by_key(|&&i| {
                let s = &spans[i];
                (freq.get(s.pii_category.expect("filtered")), s.start, s.end)
            })
            .expect("nonempty");
        let (surface, category) = (spans[idx].surface.clone(), spans[idx].pii_category);
        for span in spans.iter_mut() {
            if span.decision == Some(Decision::Keep) && span.surface == surface && span.pii_category == category {
                span.decision = Some(Decision::Pseudonymize);
            }
        }
        kept.retain(|&i| spans[i].decision == Some(Decision::Keep));
    }
    spans
}

/// Subject roles keyed by (doc_id, start, end), typically from a sidecar file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RoleAssignments(HashMap<(String, usize, usize), SubjectRole>);

impl RoleAssignments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, doc_id: impl Into<String>, start: usize, end: usize, role: SubjectRole) {
        self.0.insert((doc_id.into(), start, end), role);
    }

    pub fn get(&self, doc_id: &str, start: usize, end: usize) -> Option<SubjectRole> {
        self.0.get(&(doc_id.to_string(), start, end)).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Parses the roles sidecar: `doc_id <TAB> start <TAB> end <TAB> role`.
    pub fn parse_tsv(text: &str) -> Result<Self, PolicyError> {
        let mut out = RoleAssignments::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| PolicyError::Roles { line: i + 1, message };
            let cols: Vec<&str> = line.split('\t').collect();
            let [doc, start, end, role] = cols.as_slice() else {
                return Err(err(format!("expected 4 tab-separated columns, got {}", cols.len())));
            };
            let start = start.trim().parse().map_err(|e| err(format!("start: {e}")))?;
            let end = end.trim().parse().map_err(|e| err(format!("end: {e}")))?;
            out.insert(*doc, start, end, role.trim().parse().map_err(err)?);
        }
        Ok(out)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PolicyError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| PolicyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_tsv(&text)
    }
}

/// Assigns a decision to every span of `doc` and applies the indirect
/// identifier rule last.
///
/// The role of a span comes from `roles` when present, otherwise from the
/// span itself, otherwise `Unassigned`. Spans that only carry an NER label
/// (annotation layer, no personal data) are kept.
pub fn decide_document(
    doc: &Document,
    roles: &RoleAssignments,
    rules: &RuleSet,
    freq: &CategoryFrequency,
) -> Result<Document, PolicyError> {
    let mut out = doc.clone();
    for span in &mut out.spans {
        let role = roles
            .get(&doc.id, span.start, span.end)
            .or(span.subject_role)
            .unwrap_or_default();
        span.subject_role = Some(role);
        let decision = if span.pii_category.is_none() && span.ner_label.is_some() {
            Decision::Keep
        } else {
            decide(span, role, rules)?
        };
        span.decision = Some(decision);
        if decision == Decision::Keep {
            span.replacement = None;
        }
    }
    out.spans = enforce_indirect_rule(&out, rules, freq);
    Ok(out)
}

/// Decides every document with category frequencies taken from the whole corpus.
pub fn decide_corpus(
    docs: &[Document],
    roles: &RoleAssignments,
    rules: &RuleSet,
) -> Result<Vec<Document>, PolicyError> {
    let freq = CategoryFrequency::from_corpus(docs);
    docs.iter().map(|d| decide_document(d, roles, rules, &freq)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Detector;

    fn span(category: PiiCategory) -> EntitySpan {
        EntitySpan::new(0, 1, "x", Detector::Manual).with_category(category)
    }

    #[test]
    fn rulebook_examples() {
        let rules = RuleSet::default();
        let cases = [
            (PiiCategory::PersonName, SubjectRole::PrivateIndividual, Decision::Pseudonymize),
            (PiiCategory::PersonName, SubjectRole::PublicFigure, Decision::Keep),
            (PiiCategory::Phone, SubjectRole::Influencer, Decision::Pseudonymize),
            (PiiCategory::OrgName, SubjectRole::GenericOrganization, Decision::Keep),
            (PiiCategory::OrgName, SubjectRole::VulnerableLinkedOrganization, Decision::Pseudonymize),
            (PiiCategory::PersonName, SubjectRole::Unassigned, Decision::Pseudonymize),
        ];
        for (category, role, expected) in cases {
            assert_eq!(decide(&span(category), role, &rules).unwrap(), expected, "{category} {role}");
        }
    }

    #[test]
    fn influencer_keeps_name_and_handle() {
        let rules = RuleSet::default();
        for c in [PiiCategory::PersonName, PiiCategory::Username] {
            assert_eq!(decide(&span(c), SubjectRole::Influencer, &rules).unwrap(), Decision::Keep);
        }
        for c in [PiiCategory::Email, PiiCategory::Address] {
            assert_eq!(decide(&span(c), SubjectRole::Influencer, &rules).unwrap(), Decision::Pseudonymize);
        }
    }

    #[test]
    fn sensitive_links_are_invalidated_for_any_role() {
        let rules = RuleSet::default();
        for role in SubjectRole::ALL {
            let mut s = span(PiiCategory::Url);
            s.sensitive = true;
            assert_eq!(decide(&s, role, &rules).unwrap(), Decision::Invalidate);
        }
        assert_eq!(
            decide(&span(PiiCategory::Url), SubjectRole::GenericOrganization, &rules).unwrap(),
            Decision::Keep
        );
    }

    #[test]
    fn missing_category_is_undecidable() {
        let s = EntitySpan::new(0, 1, "x", Detector::Manual);
        let err = decide(&s, SubjectRole::PrivateIndividual, &RuleSet::default()).unwrap_err();
        assert!(err.to_string().contains("undecidable span"));
    }

    #[test]
    fn every_role_and_category_resolves() {
        let rules = RuleSet::default();
        for role in SubjectRole::ALL {
            for c in PiiCategory::ALL {
                for sensitive in [false, true] {
                    let mut s = span(c);
                    s.sensitive = sensitive;
                    let d = decide(&s, role, &rules).unwrap();
                    if d != Decision::Keep {
                        // replacing the role with Unassigned never relaxes a decision
                        assert_ne!(decide(&s, SubjectRole::Unassigned, &rules).unwrap(), Decision::Keep);
                    }
                }
            }
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = RuleSet::parse("default keep\n* * * maybe\n").unwrap_err();
        assert!(matches!(err, PolicyError::Syntax { line: 2, .. }), "{err}");
        assert!(RuleSet::parse("Nobody * * keep").is_err());
        assert!(RuleSet::parse("* * * keep loud").is_err());
    }

    #[test]
    fn first_match_wins() {
        let rules = RuleSet::parse("* PERSON_NAME * keep\n* * * delete\ndefault invalidate").unwrap();
        assert_eq!(rules.resolve(SubjectRole::Unassigned, PiiCategory::PersonName, false), Decision::Keep);
        assert_eq!(rules.resolve(SubjectRole::Unassigned, PiiCategory::Url, false), Decision::Delete);
        let empty = RuleSet::parse("default invalidate").unwrap();
        assert_eq!(empty.resolve(SubjectRole::PublicFigure, PiiCategory::Url, false), Decision::Invalidate);
    }

    fn indirect_doc() -> Document {
        let mut doc = Document::new("d", "fr", "Elle habite Lyon et elle est marocaine.");
        let (s, e) = doc.find("Lyon").unwrap();
        doc.spans.push(
            doc.span(s, e, Detector::Manual)
                .unwrap()
                .with_category(PiiCategory::Location)
                .with_role(SubjectRole::PrivateIndividual),
        );
        let (s, e) = doc.find("marocaine").unwrap();
        doc.spans.push(
            doc.span(s, e, Detector::Manual)
                .unwrap()
                .with_category(PiiCategory::Other)
                .with_role(SubjectRole::PrivateIndividual),
        );
        doc
    }

    #[test]
    fn two_kept_indirect_identifiers_lose_one() {
        let doc = indirect_doc();
        let mut freq_docs = vec![doc.clone()];
        // make LOCATION more common than OTHER corpus-wide
        let mut other = Document::new("e", "fr", "Paris");
        other.spans.push(other.span(0, 5, Detector::Manual).unwrap().with_category(PiiCategory::Location));
        freq_docs.push(other);
        let freq = CategoryFrequency::from_corpus(&freq_docs);
        let out = decide_document(&doc, &RoleAssignments::new(), &RuleSet::default(), &freq).unwrap();
        let decisions: Vec<_> = out.spans.iter().map(|s| s.decision.unwrap()).collect();
        assert_eq!(decisions, vec![Decision::Keep, Decision::Pseudonymize]);
    }

    #[test]
    fn rarest_tie_breaks_on_start_offset() {
        let doc = indirect_doc();
        let freq = CategoryFrequency::default();
        let out = decide_document(&doc, &RoleAssignments::new(), &RuleSet::default(), &freq).unwrap();
        assert_eq!(out.spans[0].decision, Some(Decision::Pseudonymize));
        assert_eq!(out.spans[1].decision, Some(Decision::Keep));
    }

    #[test]
    fn repeated_mentions_flip_together() {
        let mut doc = Document::new("r", "fr", "Lyon, Lyon et marocaine");
        for (s, e, c) in [(0, 4, PiiCategory::Location), (6, 10, PiiCategory::Location), (14, 23, PiiCategory::Other)] {
            doc.spans.push(
                doc.span(s, e, Detector::Manual)
                    .unwrap()
                    .with_category(c)
                    .with_role(SubjectRole::PrivateIndividual),
            );
        }
        let out = decide_document(&doc, &RoleAssignments::new(), &RuleSet::default(), &CategoryFrequency::default()).unwrap();
        let decisions: Vec<_> = out.spans.iter().map(|s| s.decision.unwrap()).collect();
        assert_eq!(decisions, vec![Decision::Pseudonymize, Decision::Pseudonymize, Decision::Keep]);
    }

    #[test]
    fn rule_precondition_not_met_leaves_doc_alone() {
        let mut doc = indirect_doc();
        doc.spans[0].decision = Some(Decision::Pseudonymize);
        doc.spans[1].decision = Some(Decision::Keep);
        let spans = enforce_indirect_rule(&doc, &RuleSet::default(), &CategoryFrequency::default());
        assert_eq!(spans, doc.spans);
        let bare = Document::new("z", "en", "nothing here");
        assert!(enforce_indirect_rule(&bare, &RuleSet::default(), &CategoryFrequency::default()).is_empty());
    }

    #[test]
    fn indirect_rule_can_be_switched_off() {
        let rules = RuleSet::parse(&RuleSet::default_text().replace("indirect_rule on", "indirect_rule off")).unwrap();
        let out = decide_document(&indirect_doc(), &RoleAssignments::new(), &rules, &CategoryFrequency::default()).unwrap();
        assert!(out.spans.iter().all(|s| s.decision == Some(Decision::Keep)));
    }

    #[test]
    fn sidecar_roles_override_span_roles() {
        let doc = indirect_doc();
        let roles = RoleAssignments::parse_tsv("# doc\tstart\tend\trole\nd\t12\t16\tPublicFigure\n").unwrap();
        assert_eq!(roles.get("d", 12, 16), Some(SubjectRole::PublicFigure));
        let out = decide_document(&doc, &roles, &RuleSet::default(), &CategoryFrequency::default()).unwrap();
        assert_eq!(out.spans[0].subject_role, Some(SubjectRole::PublicFigure));
        assert!(RoleAssignments::parse_tsv("d\t1\t2").is_err());
        assert!(RoleAssignments::parse_tsv("d\t1\t2\tKing").is_err());
    }

    #[test]
    fn decide_document_is_idempotent() {
        let freq = CategoryFrequency::default();
        let rules = RuleSet::default();
        let once = decide_document(&indirect_doc(), &RoleAssignments::new(), &rules, &freq).unwrap();
        let twice = decide_document(&once, &RoleAssignments::new(), &rules, &freq).unwrap();
        assert_eq!(once, twice);
    }
}
