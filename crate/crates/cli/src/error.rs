use thiserror::Error;

use redactor_core::audit::AuditError;
use redactor_core::corpus::CorpusError;
use redactor_core::detect::DetectError;
use redactor_core::eval::EvalError;
use redactor_core::ledger::LedgerError;
use redactor_core::pipeline::PipelineError;
use redactor_core::policy::PolicyError;
use redactor_core::pools::PoolError;
use redactor_core::substitute::SubstituteError;
use redactor_review::ReviewError;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VIOLATIONS: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_LEAKAGE: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config {path}: {message}")]
    Config { path: String, message: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// Audit findings or ledger differences; the report has already been printed.
    #[error("{0}")]
    Violations(String),
    /// Original surfaces survived in the output; nothing was written.
    #[error("{0}")]
    Leakage(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Substitute(#[from] SubstituteError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Pools(#[from] PoolError),
    #[error(transparent)]
    Review(#[from] ReviewError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Violations(_) => EXIT_VIOLATIONS,
            CliError::Leakage(_) => EXIT_LEAKAGE,
            _ => EXIT_USAGE,
        }
    }

    pub fn io(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
