//! Replacement pools for realistic pseudonyms.
//!
//! A pool directory holds one subdirectory per language, each with
//! `<CATEGORY>.txt` files (one candidate per line, `#` starts a comment) and
//! an optional `VERSION` file at the top level.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::corpus::PiiCategory;

#[derive(Debug, Error)]
pub enum PoolError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: unknown category file")]
    UnknownCategory { path: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NamePools {
    version: String,
    pools: BTreeMap<(String, PiiCategory), Vec<String>>,
}

macro_rules! lang_pools {
    ($lang:literal: $($cat:ident = $file:literal),* $(,)?) => {
        [$(($lang, PiiCategory::$cat, include_str!(concat!("../data/pools/", $lang, "/", $file, ".txt")))),*]
    };
    ($lang:literal) => {
        lang_pools!($lang:
            PersonName = "PERSON_NAME", Username = "USERNAME", Email = "EMAIL",
            Address = "ADDRESS", Location = "LOCATION", OrgName = "ORG_NAME",
            Hashtag = "HASHTAG", MediaTitle = "MEDIA_TITLE", Other = "OTHER",
        )
    };
}

const BUILTIN: [[(&str, PiiCategory, &str); 9]; 3] = [lang_pools!("en"), lang_pools!("fr"), lang_pools!("ar")];

const BUILTIN_VERSION: &str = include_str!("../data/pools/VERSION");

fn parse_lines(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with("# ") || line == "#" {
            continue;
        }
        if seen.insert(line) {
            out.push(line.to_string());
        }
    }
    out
}

impl NamePools {
    pub fn empty() -> Self {
        NamePools::default()
    }

    /// The pools compiled into the library.
    pub fn builtin() -> Self {
        let mut pools = NamePools {
            version: BUILTIN_VERSION.trim().to_string(),
            pools: BTreeMap::new(),
        };
        for (lang, cat, text) in BUILTIN.iter().flatten() {
            pools.insert(lang, *cat, parse_lines(text));
        }
        pools
    }

    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, PoolError> {
        let dir = dir.as_ref();
        let io = |p: &Path| {
            let path = p.display().to_string();
            move |source| PoolError::Io { path, source }
        };
        let mut pools = NamePools::empty();
        let version_path = dir.join("VERSION");
        pools.version = match std::fs::read_to_string(&version_path) {
            Ok(v) => v.trim().to_string(),
            Err(_) => format!("dir:{}", dir.display()),
        };
        let mut langs: Vec<_> = std::fs::read_dir(dir)
            .map_err(io(dir))?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().is_dir())
            .collect();
        langs.sort_by_key(|e| e.file_name());
        for lang_entry in langs {
            let lang = lang_entry.file_name().to_string_lossy().into_owned();
            let lang_dir = lang_entry.path();
            let mut files: Vec<_> = std::fs::read_dir(&lang_dir)
                .map_err(io(&lang_dir))?
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|x| x == "txt"))
                .collect();
            files.sort();
            for file in files {
                let stem = file.file_stem().unwrap_or_default().to_string_lossy();
                let category: PiiCategory = stem.parse().map_err(|_| PoolError::UnknownCategory {
                    path: file.display().to_string(),
                })?;
                let text = std::fs::read_to_string(&file).map_err(io(&file))?;
                pools.insert(&lang, category, parse_lines(&text));
            }
        }
        Ok(pools)
    }

    pub fn insert(&mut self, language: &str, category: PiiCategory, entries: Vec<String>) {
        self.pools.insert((language.to_string(), category), entries);
    }

    pub fn get(&self, language: &str, category: PiiCategory) -> &[String] {
        self.pools
            .get(&(language.to_string(), category))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn languages(&self) -> Vec<&str> {
        let mut langs: Vec<&str> = self.pools.keys().map(|(l, _)| l.as_str()).collect();
        langs.dedup();
        langs
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn contains(&self, candidate: &str) -> bool {
        self.pools.values().any(|v| v.iter().any(|c| c == candidate))
    }
}
