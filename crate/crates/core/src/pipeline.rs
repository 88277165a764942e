//! Corpus-level orchestration: detect, decide, transform, audit.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::audit::{audit, AuditError, AuditReport};
use crate::corpus::Document;
use crate::detect::{detect_document, DetectorConfig};
use crate::eval::Variant;
use crate::ledger::Ledger;
use crate::policy::{decide_corpus, PolicyError, RoleAssignments, RuleSet};
use crate::substitute::{apply_corpus, PseudonymConstraints, Seed, Strategy, SubstituteError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Substitute(#[from] SubstituteError),
    #[error(transparent)]
    Audit(#[from] AuditError),
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    /// Run pattern and gazetteer detection before deciding; `None` trusts the input spans.
    pub detector: Option<DetectorConfig>,
    pub rules: RuleSet,
    pub roles: RoleAssignments,
    pub strategy: Strategy,
    pub constraints: PseudonymConstraints,
    pub seed: Seed,
}

impl Default for Pipeline {
    fn default() -> Self {
        Pipeline {
            detector: None,
            rules: RuleSet::default(),
            roles: RoleAssignments::new(),
            strategy: Strategy::Realistic,
            constraints: PseudonymConstraints::default(),
            seed: Seed(0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub decided: Vec<Document>,
    pub output: Vec<Document>,
    pub report: AuditReport,
}

impl Pipeline {
    pub fn decide(&self, docs: &[Document]) -> Result<Vec<Document>, PipelineError> {
        let detected: Vec<Document> = match &self.detector {
            Some(config) => docs.iter().map(|d| detect_document(d, config)).collect(),
            None => docs.to_vec(),
        };
        Ok(decide_corpus(&detected, &self.roles, &self.rules)?)
    }

    /// Runs every stage. The ledger is only written for the realistic strategy.
    pub fn run(&self, docs: &[Document], ledger: &mut Ledger) -> Result<PipelineOutput, PipelineError> {
        let decided = self.decide(docs)?;
        let realistic = self.strategy == Strategy::Realistic;
        let output = apply_corpus(
            &decided,
            self.strategy,
            realistic.then_some(&mut *ledger),
            &self.constraints,
            self.seed,
        )?;
        let report = audit(&decided, &output, Some(ledger), realistic)?;
        Ok(PipelineOutput {
            decided,
            output,
            report,
        })
    }
}

pub fn strategy_variant(strategy: Strategy) -> Variant {
    match strategy {
        Strategy::S0 => Variant::S0,
        Strategy::S1 => Variant::S1,
        Strategy::S2 => Variant::S2,
        Strategy::S3 => Variant::S3,
        Strategy::Realistic => Variant::Ours,
    }
}

/// Builds the original corpus and one transformed copy per strategy, ready
/// for the utility grid. The realistic copy uses a fresh ledger.
pub fn grid_variants(
    decided: &[Document],
    constraints: &PseudonymConstraints,
    seed: Seed,
) -> Result<BTreeMap<Variant, Vec<Document>>, PipelineError> {
    let mut out = BTreeMap::new();
    out.insert(Variant::Original, decided.to_vec());
    for strategy in Strategy::ALL {
        let mut ledger = Ledger::new();
        let docs = apply_corpus(decided, strategy, Some(&mut ledger), constraints, seed)?;
        out.insert(strategy_variant(strategy), docs);
    }
    Ok(out)
}
