//! Condition space: sub-condition descriptors, multi-conditions, encoding of the three
//! modalities (categorical, annotator distribution, text tokens), wildcards and
//! stochastic masking.
//!
//! A wildcard is a zero block. It is distinct from the reserved Unknown entry of a
//! categorical vocabulary, which is an ordinary one-hot position.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::sqrt;
use crate::rng::{fnv1a64, fnv1a64_extend};

/// Reserved vocabulary entry for rare or missing categorical labels.
pub const UNKNOWN_LABEL: &str = "<unknown>";

/// Key mixed into every token hash of the text embedder.
pub const TEXT_HASH_SEED: u64 = 0x636c_6174_5f74_7874;

pub const DEFAULT_TEXT_DIM: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubConditionKind {
    Categorical,
    Distribution,
    TextEmbedding,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubConditionDescriptor {
    pub name: String,
    pub kind: SubConditionKind,
    pub dim: usize,
    /// One-hot order for categorical, outcome order for distributions, empty for text.
    #[serde(default)]
    pub vocab: Vec<String>,
}

impl SubConditionDescriptor {
    /// Categorical sub-condition; the Unknown entry is appended when absent.
    pub fn categorical<S: AsRef<str>>(name: &str, labels: &[S]) -> Result<Self> {
        let mut vocab: Vec<String> = labels.iter().map(|l| l.as_ref().to_string()).collect();
        if !vocab.iter().any(|l| l == UNKNOWN_LABEL) {
            vocab.push(UNKNOWN_LABEL.to_string());
        }
        let d = Self {
            name: name.to_string(),
            kind: SubConditionKind::Categorical,
            dim: vocab.len(),
            vocab,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn distribution<S: AsRef<str>>(name: &str, outcomes: &[S]) -> Result<Self> {
        let vocab: Vec<String> = outcomes.iter().map(|l| l.as_ref().to_string()).collect();
        let d = Self {
            name: name.to_string(),
            kind: SubConditionKind::Distribution,
            dim: vocab.len(),
            vocab,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn text(name: &str, dim: usize) -> Result<Self> {
        let d = Self {
            name: name.to_string(),
            kind: SubConditionKind::TextEmbedding,
            dim,
            vocab: Vec::new(),
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Schema("sub-condition with empty name".into()));
        }
        if self.dim == 0 {
            return Err(Error::Schema(format!("sub-condition `{}` has dim 0", self.name)));
        }
        match self.kind {
            SubConditionKind::TextEmbedding => {
                if !self.vocab.is_empty() {
                    return Err(Error::Schema(format!(
                        "text sub-condition `{}` must not carry a vocabulary",
                        self.name
                    )));
                }
            }
            SubConditionKind::Categorical | SubConditionKind::Distribution => {
                if self.vocab.len() != self.dim {
                    return Err(Error::Schema(format!(
                        "sub-condition `{}`: dim {} but vocabulary of {}",
                        self.name,
                        self.dim,
                        self.vocab.len()
                    )));
                }
                let unique: BTreeSet<&str> = self.vocab.iter().map(String::as_str).collect();
                if unique.len() != self.vocab.len() {
                    return Err(Error::Schema(format!(
                        "sub-condition `{}` has duplicate vocabulary entries",
                        self.name
                    )));
                }
                if self.kind == SubConditionKind::Categorical && !unique.contains(UNKNOWN_LABEL) {
                    return Err(Error::Schema(format!(
                        "categorical sub-condition `{}` lacks the `{UNKNOWN_LABEL}` entry",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.vocab.iter().position(|l| l == label)
    }

    pub fn unknown_index(&self) -> Option<usize> {
        match self.kind {
            SubConditionKind::Categorical => self.label_index(UNKNOWN_LABEL),
            _ => None,
        }
    }
}

/// Ordered, validated list of sub-conditions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SchemaFile", into = "SchemaFile")]
pub struct ConditionSchema {
    subconditions: Vec<SubConditionDescriptor>,
    offsets: Vec<usize>,
    total_dim: usize,
}

#[derive(Serialize, Deserialize)]
struct SchemaFile {
    subconditions: Vec<SubConditionDescriptor>,
}

impl TryFrom<SchemaFile> for ConditionSchema {
    type Error = Error;

    fn try_from(f: SchemaFile) -> Result<Self> {
        ConditionSchema::new(f.subconditions)
    }
}

impl From<ConditionSchema> for SchemaFile {
    fn from(s: ConditionSchema) -> Self {
        SchemaFile {
            subconditions: s.subconditions,
        }
    }
}

impl ConditionSchema {
    pub fn new(subconditions: Vec<SubConditionDescriptor>) -> Result<Self> {
        if subconditions.is_empty() {
            return Err(Error::Schema("schema needs at least one sub-condition".into()));
        }
        let mut names = BTreeSet::new();
        let mut offsets = Vec::with_capacity(subconditions.len());
        let mut total_dim = 0;
        for d in &subconditions {
            d.validate()?;
            if !names.insert(d.name.as_str()) {
                return Err(Error::Schema(format!("duplicate sub-condition `{}`", d.name)));
            }
            offsets.push(total_dim);
            total_dim += d.dim;
        }
        Ok(Self {
            subconditions,
            offsets,
            total_dim,
        })
    }

    pub fn subconditions(&self) -> &[SubConditionDescriptor] {
        &self.subconditions
    }

    pub fn len(&self) -> usize {
        self.subconditions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subconditions.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.subconditions.iter().position(|d| d.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&SubConditionDescriptor> {
        self.subconditions.iter().find(|d| d.name == name)
    }

    /// Coordinates of sub-condition `i` inside the assembled vector.
    pub fn block(&self, i: usize) -> Range<usize> {
        let start = self.offsets[i];
        start..start + self.subconditions[i].dim
    }

    /// `(dim_1, …, dim_d)` in schema order.
    pub fn condition_shape(&self) -> Vec<usize> {
        self.subconditions.iter().map(|d| d.dim).collect()
    }

    /// Concatenates the encoded sub-conditions; wildcards contribute zero blocks.
    pub fn assemble(&self, zeta: &MultiCondition) -> Result<Vec<f64>> {
        check_len("multi-condition arity", self.len(), zeta.len())?;
        let mut out = vec![0.0; self.total_dim];
        for (i, (desc, value)) in self.subconditions.iter().zip(zeta.values()).enumerate() {
            encode_into(desc, value, &mut out[self.block(i)])?;
        }
        Ok(out)
    }

    /// Wildcards the named sub-conditions, leaving `zeta` untouched.
    pub fn apply_wildcard<S: AsRef<str>>(&self, zeta: &MultiCondition, mask: &[S]) -> Result<MultiCondition> {
        check_len("multi-condition arity", self.len(), zeta.len())?;
        let mut out = zeta.clone();
        for name in mask {
            let i = self
                .index_of(name.as_ref())
                .ok_or_else(|| Error::UnknownSubCondition(name.as_ref().to_string()))?;
            out.values[i] = ConditionValue::Wildcard;
        }
        Ok(out)
    }

    /// Checks arity, value kinds and ranges against the schema.
    pub fn validate(&self, zeta: &MultiCondition) -> Result<()> {
        check_len("multi-condition arity", self.len(), zeta.len())?;
        for (desc, value) in self.subconditions.iter().zip(zeta.values()) {
            check_value(desc, value)?;
        }
        Ok(())
    }

    /// Resolves raw annotations (labels, counts, tokens) into a multi-condition.
    /// Absent or null entries become wildcards; labels outside the vocabulary map to
    /// Unknown.
    pub fn resolve(&self, raw: &RawCondition) -> Result<MultiCondition> {
        raw.check_names(self)?;
        let mut values = Vec::with_capacity(self.len());
        for desc in &self.subconditions {
            let v = match desc.kind {
                SubConditionKind::Categorical => match raw.categorical.get(&desc.name) {
                    Some(Some(label)) => {
                        let idx = desc
                            .label_index(label)
                            .or_else(|| desc.unknown_index())
                            .ok_or_else(|| Error::Schema(format!("`{}` has no Unknown entry", desc.name)))?;
                        ConditionValue::Label(idx)
                    }
                    _ => ConditionValue::Wildcard,
                },
                SubConditionKind::Distribution => match raw.distribution.get(&desc.name) {
                    Some(Some(counts)) => {
                        let mut weights = vec![0.0; desc.dim];
                        for (label, &c) in counts {
                            let idx = desc.label_index(label).ok_or_else(|| {
                                Error::InvalidDistribution(format!(
                                    "outcome `{label}` not in `{}` vocabulary",
                                    desc.name
                                ))
                            })?;
                            weights[idx] += c;
                        }
                        ConditionValue::Distribution(normalize_distribution(&desc.name, &weights)?)
                    }
                    _ => ConditionValue::Wildcard,
                },
                SubConditionKind::TextEmbedding => match raw.text.get(&desc.name) {
                    Some(Some(tokens)) => ConditionValue::Tokens(tokens.clone()),
                    _ => ConditionValue::Wildcard,
                },
            };
            values.push(v);
        }
        let zeta = MultiCondition::new(values);
        self.validate(&zeta)?;
        Ok(zeta)
    }
}

/// One value per sub-condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionValue {
    Wildcard,
    Label(usize),
    /// Probability vector in vocabulary order.
    Distribution(Vec<f64>),
    Tokens(Vec<String>),
}

impl ConditionValue {
    pub fn is_wildcard(&self) -> bool {
        matches!(self, ConditionValue::Wildcard)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiCondition {
    values: Vec<ConditionValue>,
}

impl MultiCondition {
    pub fn new(values: Vec<ConditionValue>) -> Self {
        Self { values }
    }

    pub fn all_wildcard(n: usize) -> Self {
        Self {
            values: vec![ConditionValue::Wildcard; n],
        }
    }

    pub fn values(&self) -> &[ConditionValue] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn wildcard_positions(&self) -> Vec<usize> {
        (0..self.values.len())
            .filter(|&i| self.values[i].is_wildcard())
            .collect()
    }
}

/// Raw annotations keyed by sub-condition name, as they appear in metadata files.
/// `null` marks an explicit Unknown / unspecified entry.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawCondition {
    #[serde(default)]
    pub categorical: BTreeMap<String, Option<String>>,
    #[serde(default)]
    pub distribution: BTreeMap<String, Option<BTreeMap<String, f64>>>,
    #[serde(default)]
    pub text: BTreeMap<String, Option<Vec<String>>>,
}

impl RawCondition {
    fn check_names(&self, schema: &ConditionSchema) -> Result<()> {
        let kinds = [
            (
                SubConditionKind::Categorical,
                self.categorical.keys().collect::<Vec<_>>(),
            ),
            (SubConditionKind::Distribution, self.distribution.keys().collect()),
            (SubConditionKind::TextEmbedding, self.text.keys().collect()),
        ];
        for (kind, names) in kinds {
            for name in names {
                match schema.get(name) {
                    None => return Err(Error::UnknownSubCondition(name.clone())),
                    Some(d) if d.kind != kind => return Err(Error::KindMismatch(name.clone())),
                    Some(_) => {}
                }
            }
        }
        Ok(())
    }

    pub fn has(&self, name: &str) -> bool {
        self.categorical.contains_key(name) || self.distribution.contains_key(name) || self.text.contains_key(name)
    }
}

fn check_value(desc: &SubConditionDescriptor, value: &ConditionValue) -> Result<()> {
    match (desc.kind, value) {
        (_, ConditionValue::Wildcard) => Ok(()),
        (SubConditionKind::Categorical, ConditionValue::Label(i)) => {
            if *i >= desc.dim {
                return Err(Error::IndexOutOfRange {
                    what: "categorical label",
                    index: *i,
                    size: desc.dim,
                });
            }
            Ok(())
        }
        (SubConditionKind::Distribution, ConditionValue::Distribution(p)) => {
            check_len("distribution outcomes", desc.dim, p.len())?;
            if p.iter().any(|&x| x < 0.0 || !x.is_finite()) {
                return Err(Error::InvalidDistribution(format!("`{}` has negative mass", desc.name)));
            }
            let total: f64 = p.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidDistribution(format!(
                    "`{}` sums to {total}, not 1",
                    desc.name
                )));
            }
            Ok(())
        }
        (SubConditionKind::TextEmbedding, ConditionValue::Tokens(t)) => {
            if t.is_empty() {
                return Err(Error::EmptyTokens(desc.name.clone()));
            }
            Ok(())
        }
        _ => Err(Error::KindMismatch(desc.name.clone())),
    }
}

/// Normalizes non-negative weights (annotator counts) to a probability vector.
pub fn normalize_distribution(name: &str, weights: &[f64]) -> Result<Vec<f64>> {
    if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
        return Err(Error::InvalidDistribution(format!(
            "`{name}` has negative or non-finite mass"
        )));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidDistribution(format!("`{name}` has zero total mass")));
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

/// Encodes one sub-condition value: one-hot, normalized distribution, or hashed text
/// embedding. Wildcards encode as zeros.
pub fn encode_subcondition(desc: &SubConditionDescriptor, value: &ConditionValue) -> Result<Vec<f64>> {
    let mut out = vec![0.0; desc.dim];
    encode_into(desc, value, &mut out)?;
    Ok(out)
}

fn encode_into(desc: &SubConditionDescriptor, value: &ConditionValue, out: &mut [f64]) -> Result<()> {
    match (desc.kind, value) {
        (_, ConditionValue::Wildcard) => {
            out.fill(0.0);
            Ok(())
        }
        (SubConditionKind::Categorical, ConditionValue::Label(i)) => {
            check_value(desc, value)?;
            out.fill(0.0);
            out[*i] = 1.0;
            Ok(())
        }
        (SubConditionKind::Distribution, ConditionValue::Distribution(p)) => {
            check_len("distribution outcomes", desc.dim, p.len())?;
            let q = normalize_distribution(&desc.name, p)?;
            out.copy_from_slice(&q);
            Ok(())
        }
        (SubConditionKind::TextEmbedding, ConditionValue::Tokens(tokens)) => {
            if tokens.is_empty() {
                return Err(Error::EmptyTokens(desc.name.clone()));
            }
            let e = text_embedding(tokens, desc.dim)?;
            out.copy_from_slice(&e);
            Ok(())
        }
        _ => Err(Error::KindMismatch(desc.name.clone())),
    }
}

/// Signed feature hashing of tokens into `dim` buckets, L2-normalized.
///
/// For each token: `h = fnv1a64(TEXT_HASH_SEED.to_le_bytes() ++ utf8(token))`,
/// bucket `h % dim`, sign `-1` when bit 63 of `h` is set, else `+1`.
pub fn text_embedding<S: AsRef<str>>(tokens: &[S], dim: usize) -> Result<Vec<f64>> {
    if dim == 0 {
        return Err(Error::InvalidParameter("text embedding dim must be >= 1".into()));
    }
    if tokens.is_empty() {
        return Err(Error::EmptyTokens(String::new()));
    }
    let key = fnv1a64(&TEXT_HASH_SEED.to_le_bytes());
    let mut v = vec![0.0; dim];
    for t in tokens {
        let h = fnv1a64_extend(key, t.as_ref().as_bytes());
        let bucket = (h % dim as u64) as usize;
        let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
        v[bucket] += sign;
    }
    let n = sqrt(v.iter().map(|x| x * x).sum());
    if n == 0.0 {
        return Err(Error::InvalidParameter("token hashes cancel to a zero vector".into()));
    }
    v.iter_mut().for_each(|x| *x /= n);
    Ok(v)
}

/// Picks `k` distinct sub-conditions uniformly without replacement and wildcards each
/// of them independently with probability `p`.
pub fn stochastic_mask<R: Rng + ?Sized>(
    zeta: &MultiCondition,
    k: usize,
    p: f64,
    rng: &mut R,
) -> Result<MultiCondition> {
    if k > zeta.len() {
        return Err(Error::InvalidParameter(format!(
            "mask size k={k} exceeds {} sub-conditions",
            zeta.len()
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("mask probability {p} not in [0, 1]")));
    }
    let mut out = zeta.clone();
    for i in rand::seq::index::sample(rng, zeta.len(), k) {
        if rng.random_bool(p) {
            out.values[i] = ConditionValue::Wildcard;
        }
    }
    Ok(out)
}

/// `⌈|S| / 2⌉`
pub fn default_mask_k(n_subconditions: usize) -> usize {
    n_subconditions.div_ceil(2)
}

pub const DEFAULT_MASK_P: f64 = 0.5;
