//! Utility evaluation on call-for-action labels and annotator agreement.
//!
//! The classifier is a multinomial logistic regression over hashed,
//! lowercased word tokens, trained with plain SGD. It is small enough to
//! run the full train/test grid over several seeds in seconds.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fmt::Write as _;
use std::hash::Hash;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CallForActionLevel, Document};
use crate::substitute::Seed;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("empty training set")]
    EmptyTrain,
    #[error("training set has a single class")]
    SingleClass,
    #[error("empty test set")]
    EmptyTest,
    #[error("document {0:?} has no call-for-action label")]
    Unlabeled(String),
    #[error("variant {variant} is not aligned with the original corpus: {message}")]
    Misaligned { variant: Variant, message: String },
    #[error("variant {0} is missing")]
    MissingVariant(Variant),
    #[error("annotation lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no annotations")]
    NoAnnotations,
}

const CLASSES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    /// Number of hashed feature buckets.
    pub dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            dim: 1 << 14,
            epochs: 15,
            learning_rate: 0.5,
            l2: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    config: ClassifierConfig,
    /// Row-major, one row of `dim` weights per class.
    weights: Vec<f64>,
    bias: [f64; CLASSES],
}

/// Lowercased alphanumeric runs.
pub fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn bucket(token: &str, dim: usize) -> usize {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in token.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    (h % dim as u64) as usize
}

/// Sparse, L2-normalized bag of hashed tokens.
fn features(text: &str, dim: usize) -> Vec<(usize, f64)> {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for t in tokens(text) {
        *counts.entry(bucket(&t, dim)).or_default() += 1.0;
    }
    let norm = counts.values().map(|v| v * v).sum::<f64>().sqrt();
    counts.into_iter().map(|(k, v)| (k, v / norm.max(1e-12))).collect()
}

fn label_of(doc: &Document) -> Result<usize, EvalError> {
    doc.cfa_label
        .map(|l| l.index())
        .ok_or_else(|| EvalError::Unlabeled(doc.id.clone()))
}

impl Classifier {
    fn scores(&self, x: &[(usize, f64)]) -> [f64; CLASSES] {
        let mut z = self.bias;
        for (c, zc) in z.iter_mut().enumerate() {
            let row = &self.weights[c * self.config.dim..(c + 1) * self.config.dim];
            *zc += x.iter().map(|&(i, v)| row[i] * v).sum::<f64>();
        }
        z
    }

    fn probabilities(&self, x: &[(usize, f64)]) -> [f64; CLASSES] {
        let z = self.scores(x);
        let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut p = z.map(|v| (v - max).exp());
        let sum: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= sum);
        p
    }

    pub fn predict(&self, text: &str) -> CallForActionLevel {
        let z = self.scores(&features(text, self.config.dim));
        let best = (0..CLASSES).fold(0, |best, c| if z[c] > z[best] { c } else { best });
        CallForActionLevel::ALL[best]
    }

    /// Stable digest of the weights, for comparing models.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for w in self.weights.iter().chain(self.bias.iter()) {
            for b in w.to_bits().to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

pub fn train_classifier(train: &[Document], seed: Seed) -> Result<Classifier, EvalError> {
    train_with(train, seed, &ClassifierConfig::default())
}

/// Trains with SGD; the seed only controls the visiting order.
pub fn train_with(train: &[Document], seed: Seed, config: &ClassifierConfig) -> Result<Classifier, EvalError> {
    if train.is_empty() {
        return Err(EvalError::EmptyTrain);
    }
    let data: Vec<(Vec<(usize, f64)>, usize)> = train
        .iter()
        .map(|d| Ok((features(&d.text, config.dim), label_of(d)?)))
        .collect::<Result<_, EvalError>>()?;
    if data.iter().all(|(_, y)| *y == data[0].1) {
        return Err(EvalError::SingleClass);
    }
    let mut model = Classifier {
        config: *config,
        weights: vec![0.0; CLASSES * config.dim],
        bias: [0.0; CLASSES],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let lr = config.learning_rate / (1.0 + epoch as f64 * 0.1);
        for &i in &order {
            let (x, y) = &data[i];
            let p = model.probabilities(x);
            for (c, pc) in p.iter().enumerate() {
                let g = pc - if c == *y { 1.0 } else { 0.0 };
                model.bias[c] -= lr * g;
                let row = &mut model.weights[c * config.dim..(c + 1) * config.dim];
                for &(j, v) in x {
                    row[j] -= lr * (g * v + config.l2 * row[j]);
                }
            }
        }
    }
    Ok(model)
}

/// Macro-averaged F1 over the five levels, skipping levels absent from
/// both gold and predictions.
pub fn macro_f1_labels(gold: &[CallForActionLevel], pred: &[CallForActionLevel]) -> Result<f64, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch(gold.len(), pred.len()));
    }
    if gold.is_empty() {
        return Err(EvalError::EmptyTest);
    }
    let mut tp = [0usize; CLASSES];
    let mut fp = [0usize; CLASSES];
    let mut fn_ = [0usize; CLASSES];
    for (g, p) in gold.iter().zip(pred) {
        if g == p {
            tp[g.index()] += 1;
        } else {
            fp[p.index()] += 1;
            fn_[g.index()] += 1;
        }
    }
    let mut total = 0.0;
    let mut present = 0;
    for c in 0..CLASSES {
        if tp[c] + fp[c] + fn_[c] == 0 {
            continue;
        }
        present += 1;
        total += 2.0 * tp[c] as f64 / (2 * tp[c] + fp[c] + fn_[c]) as f64;
    }
    Ok(total / present as f64)
}

pub fn macro_f1(model: &Classifier, test: &[Document]) -> Result<f64, EvalError> {
    if test.is_empty() {
        return Err(EvalError::EmptyTest);
    }
    let gold: Vec<CallForActionLevel> = test
        .iter()
        .map(|d| d.cfa_label.ok_or_else(|| EvalError::Unlabeled(d.id.clone())))
        .collect::<Result<_, _>>()?;
    let pred: Vec<CallForActionLevel> = test.iter().map(|d| model.predict(&d.text)).collect();
    macro_f1_labels(&gold, &pred)
}

/// Train, dev and test partitions taken from the `split` meta field.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Split {
    pub train: Vec<Document>,
    pub dev: Vec<Document>,
    pub test: Vec<Document>,
}

impl Split {
    /// Documents without a recognized split go to train.
    pub fn from_meta(docs: &[Document]) -> Split {
        let mut split = Split::default();
        for doc in docs {
            match doc.meta.get("split").map(String::as_str) {
                Some("dev") => split.dev.push(doc.clone()),
                Some("test") => split.test.push(doc.clone()),
                _ => split.train.push(doc.clone()),
            }
        }
        split
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    Original,
    S0,
    S1,
    S2,
    S3,
    Ours,
}

impl Variant {
    pub const ALL: [Variant; 6] = [Variant::Original, Variant::S0, Variant::S1, Variant::S2, Variant::S3, Variant::Ours];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Original => "Original",
            Variant::S0 => "S0",
            Variant::S1 => "S1",
            Variant::S2 => "S2",
            Variant::S3 => "S3",
            Variant::Ours => "Ours",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s) || (s.eq_ignore_ascii_case("realistic") && *v == Variant::Ours))
            .ok_or_else(|| format!("unknown variant {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub train: Variant,
    pub test: Variant,
    pub scores: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation; zero for a single seed.
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityReport {
    pub seeds: Vec<u64>,
    pub cells: Vec<GridCell>,
}

pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Same-variant, anonymized-train/original-test and original-train/anonymized-test pairs.
pub fn standard_pairs(variants: &[Variant]) -> Vec<(Variant, Variant)> {
    let mut pairs = Vec::new();
    let mut push = |p: (Variant, Variant)| {
        if !pairs.contains(&p) {
            pairs.push(p);
        }
    };
    for &v in variants {
        push((v, v));
        push((v, Variant::Original));
        push((Variant::Original, v));
    }
    pairs
}

fn ids(docs: &[Document]) -> Vec<&str> {
    docs.iter().map(|d| d.id.as_str()).collect()
}

/// Trains on each requested train variant and scores on each test variant,
/// once per seed. Every variant must list the same documents in the same
/// order as the original.
pub fn variant_grid(
    variants: &BTreeMap<Variant, Vec<Document>>,
    pairs: &[(Variant, Variant)],
    seeds: &[Seed],
) -> Result<UtilityReport, EvalError> {
    if let Some(reference) = variants.get(&Variant::Original).or_else(|| variants.values().next()) {
        let expected = ids(reference);
        for (v, docs) in variants {
            if ids(docs) != expected {
                return Err(EvalError::Misaligned {
                    variant: *v,
                    message: "document ids differ".into(),
                });
            }
            for (a, b) in docs.iter().zip(reference) {
                if a.cfa_label != b.cfa_label || a.meta.get("split") != b.meta.get("split") {
                    return Err(EvalError::Misaligned {
                        variant: *v,
                        message: format!("labels or split differ for {}", a.id),
                    });
                }
            }
        }
    }
    let splits: HashMap<Variant, Split> = variants.iter().map(|(v, d)| (*v, Split::from_meta(d))).collect();
    let get = |v: Variant| splits.get(&v).ok_or(EvalError::MissingVariant(v));

    let mut models: HashMap<(Variant, u64), Classifier> = HashMap::new();
    let mut cells = Vec::with_capacity(pairs.len());
    for &(train, test) in pairs {
        let test_docs = &get(test)?.test;
        let mut scores = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let model = match models.get(&(train, seed.0)) {
                Some(m) => m,
                None => {
                    let m = train_classifier(&get(train)?.train, seed)?;
                    models.entry((train, seed.0)).or_insert(m)
                }
            };
            scores.push(macro_f1(model, test_docs)?);
        }
        let (mean, sd) = mean_sd(&scores);
        cells.push(GridCell {
            train,
            test,
            scores,
            mean,
            sd,
        });
    }
    Ok(UtilityReport {
        seeds: seeds.iter().map(|s| s.0).collect(),
        cells,
    })
}

impl UtilityReport {
    pub fn cell(&self, train: Variant, test: Variant) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.train == train && c.test == test)
    }

    fn fmt_cell(&self, train: Variant, test: Variant) -> String {
        self.cell(train, test)
            .map(|c| format!("{:.2} ± {:.2}", c.mean * 100.0, c.sd * 100.0))
            .unwrap_or_else(|| "-".into())
    }

    fn variants(&self) -> Vec<Variant> {
        let mut vs: Vec<Variant> = self.cells.iter().flat_map(|c| [c.train, c.test]).collect();
        vs.sort();
        vs.dedup();
        vs
    }

    /// Rows are training variants; columns test on the same variant and on the original.
    pub fn render_train_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Macro-F1 (x100) over {} seeds", self.seeds.len());
        let _ = writeln!(out, "{:10}{:>18}{:>18}", "Train", "Test anonymized", "Test original");
        for v in self.variants() {
            let _ = writeln!(out, "{:10}{:>18}{:>18}", v.as_str(), self.fmt_cell(v, v), self.fmt_cell(v, Variant::Original));
        }
        out
    }

    /// Rows are test variants scored by the model trained on the original data.
    pub fn render_test_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Macro-F1 (x100), trained on Original, over {} seeds", self.seeds.len());
        let _ = writeln!(out, "{:10}{:>18}", "Test", "Score");
        for v in self.variants() {
            let _ = writeln!(out, "{:10}{:>18}", v.as_str(), self.fmt_cell(Variant::Original, v));
        }
        out
    }
}

/// Cohen's kappa with chance agreement from the product of marginals.
pub fn cohens_kappa<T: Eq + Hash>(a: &[T], b: &[T]) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(EvalError::NoAnnotations);
    }
    let n = a.len() as f64;
    let observed = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let mut ca: HashMap<&T, f64> = HashMap::new();
    let mut cb: HashMap<&T, f64> = HashMap::new();
    for x in a {
        *ca.entry(x).or_default() += 1.0;
    }
    for y in b {
        *cb.entry(y).or_default() += 1.0;
    }
    let expected: f64 = ca
        .iter()
        .map(|(k, va)| va * cb.get(k).copied().unwrap_or(0.0))
        .sum::<f64>()
        / (n * n);
    if (1.0 - expected).abs() < f64::EPSILON {
        return Ok(1.0);
    }
    Ok((observed - expected) / (1.0 - expected))
}
