//! Evaluation metrics: FID, FJD, intra-FID over the best-supported condition
//! entries, the qualitative score and its sample size, and the hybrid score.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_len, Error, Result};
use crate::gaussian::{fit_gaussian, frechet_distance};
use crate::linalg::{sqrt, Matrix};
use crate::mapping::{leaky_relu, Space, LEAKY_SLOPE};
use crate::rng;

pub const DEFAULT_EMBED_DIM: usize = 64;
pub const DEFAULT_FJD_ALPHA: f64 = 0.5;
pub const DEFAULT_IFID_FRACTION: f64 = 0.5;
pub const DEFAULT_N_MAX: usize = 100;
/// Below this many samples per side FID is biased upwards; reported as a warning.
pub const FID_RECOMMENDED_SAMPLES: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingKind {
    Identity,
    RandomProjection,
    /// Inputs are already embeddings produced elsewhere.
    External,
}

/// Deterministic feature extractor standing in for a pretrained image network.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingFunction {
    kind: EmbeddingKind,
    input_dim: usize,
    output_dim: usize,
    seed: u64,
    projection: Option<Matrix>,
}

impl EmbeddingFunction {
    pub fn identity(dim: usize) -> Self {
        Self {
            kind: EmbeddingKind::Identity,
            input_dim: dim,
            output_dim: dim,
            seed: 0,
            projection: None,
        }
    }

    pub fn external(dim: usize) -> Self {
        Self {
            kind: EmbeddingKind::External,
            ..Self::identity(dim)
        }
    }

    /// `leaky_relu(P x)` with `P` drawn as `N(0, 1) / √input_dim`.
    pub fn random_projection(input_dim: usize, output_dim: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::InvalidParameter("embedding dims must be >= 1".into()));
        }
        let mut r = rng::stream(seed, "embedding");
        let scale = 1.0 / sqrt(input_dim as f64);
        let mut p = rng::standard_normal_vec(&mut r, input_dim * output_dim);
        p.iter_mut().for_each(|v| *v *= scale);
        Ok(Self {
            kind: EmbeddingKind::RandomProjection,
            input_dim,
            output_dim,
            seed,
            projection: Some(Matrix::from_vec(output_dim, input_dim, p)?),
        })
    }

    pub fn kind(&self) -> EmbeddingKind {
        self.kind
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn embed(&self, x: &Matrix) -> Result<Matrix> {
        check_len("embedding input width", self.input_dim, x.cols())?;
        check_finite("embedding input", x.as_slice())?;
        match &self.projection {
            None => Ok(x.clone()),
            Some(p) => {
                let mut out = Vec::with_capacity(x.rows() * self.output_dim);
                for r in x.row_iter() {
                    out.extend(p.row_iter().map(|w| leaky_relu(crate::linalg::dot(w, r), LEAKY_SLOPE)));
                }
                Matrix::from_vec(x.rows(), self.output_dim, out)
            }
        }
    }
}

/// A metric value with the non-fatal caveats raised while computing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub value: f64,
    pub warnings: Vec<String>,
}

fn check_set(what: &'static str, x: &Matrix) -> Result<()> {
    if x.rows() < 2 {
        return Err(Error::InvalidParameter(format!(
            "{what} needs at least 2 rows, got {}",
            x.rows()
        )));
    }
    Ok(())
}

/// Fréchet distance between Gaussians fitted to two embedding sets.
pub fn fid(real: &Matrix, fake: &Matrix) -> Result<Scored> {
    check_set("real embeddings", real)?;
    check_set("fake embeddings", fake)?;
    check_len("embedding width", real.cols(), fake.cols())?;
    let mut warnings = Vec::new();
    for (name, m) in [("real", real), ("fake", fake)] {
        if m.rows() < FID_RECOMMENDED_SAMPLES {
            warnings.push(format!(
                "{name} set has {} samples (< {FID_RECOMMENDED_SAMPLES}); FID is biased upwards",
                m.rows()
            ));
        }
    }
    if real == fake {
        return Ok(Scored { value: 0.0, warnings });
    }
    let a = fit_gaussian("real", real, Space::W)?;
    let b = fit_gaussian("fake", fake, Space::W)?;
    Ok(Scored {
        value: frechet_distance(&a, &b)?,
        warnings,
    })
}

/// Image embeddings paired row-by-row with assembled condition vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSet {
    pub images: Matrix,
    pub conditions: Matrix,
}

impl JointSet {
    pub fn new(images: Matrix, conditions: Matrix) -> Result<Self> {
        check_len("joint set rows", images.rows(), conditions.rows())?;
        check_finite("joint images", images.as_slice())?;
        check_finite("joint conditions", conditions.as_slice())?;
        Ok(Self { images, conditions })
    }

    /// Rows `[f(x), α·h(y)]`.
    pub fn concatenated(&self, alpha: f64) -> Matrix {
        let w = self.images.cols() + self.conditions.cols();
        let mut out = Vec::with_capacity(self.images.rows() * w);
        for (x, y) in self.images.row_iter().zip(self.conditions.row_iter()) {
            out.extend_from_slice(x);
            out.extend(y.iter().map(|v| alpha * v));
        }
        Matrix::from_vec(self.images.rows(), w, out).expect("shape")
    }
}

pub fn fjd(real: &JointSet, fake: &JointSet, alpha: f64) -> Result<Scored> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be finite and >= 0, got {alpha}"
        )));
    }
    check_len(
        "condition embedding width",
        real.conditions.cols(),
        fake.conditions.cols(),
    )?;
    check_len("image embedding width", real.images.cols(), fake.images.cols())?;
    fid(&real.concatenated(alpha), &fake.concatenated(alpha))
}

/// Real and generated embeddings for one condition entry.
#[derive(Debug, Clone, PartialEq)]
pub struct EntrySamples {
    pub label: String,
    /// Dataset support used for ranking.
    pub support: usize,
    pub real: Matrix,
    pub fake: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionEntries {
    pub name: String,
    pub entries: Vec<EntrySamples>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionIntraFid {
    pub average: f64,
    /// Score per kept entry, in selection order.
    pub entries: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntraFid {
    pub per_condition: BTreeMap<String, ConditionIntraFid>,
    pub average: f64,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

/// Indices of the entries kept for intra-FID: stable sort by support
/// descending, then the first `⌈fraction · count⌉`.
pub fn select_entries(supports: &[usize], fraction: f64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "fraction must be in (0, 1], got {fraction}"
        )));
    }
    let mut order: Vec<usize> = (0..supports.len()).collect();
    order.sort_by(|&a, &b| supports[b].cmp(&supports[a]));
    let keep = libm::ceil(fraction * supports.len() as f64) as usize;
    order.truncate(keep.min(supports.len()));
    Ok(order)
}

pub fn intra_fid(conditions: &[ConditionEntries], fraction: f64) -> Result<IntraFid> {
    if conditions.is_empty() || conditions.iter().any(|c| c.entries.is_empty()) {
        return Err(Error::Empty("condition entries"));
    }
    let mut per_condition = BTreeMap::new();
    let mut warnings = Vec::new();
    for cond in conditions {
        let supports: Vec<usize> = cond.entries.iter().map(|e| e.support).collect();
        let mut scores = Vec::new();
        for i in select_entries(&supports, fraction)? {
            let e = &cond.entries[i];
            if e.real.rows() < 2 || e.fake.rows() < 2 {
                warnings.push(format!(
                    "{}={} skipped: {} real / {} generated samples",
                    cond.name,
                    e.label,
                    e.real.rows(),
                    e.fake.rows()
                ));
                continue;
            }
            let s = fid(&e.real, &e.fake)?;
            scores.push((e.label.clone(), s.value));
        }
        if scores.is_empty() {
            warnings.push(format!("{}: no selected entry had enough samples", cond.name));
            continue;
        }
        let average = scores.iter().map(|s| s.1).sum::<f64>() / scores.len() as f64;
        per_condition.insert(
            cond.name.clone(),
            ConditionIntraFid {
                average,
                entries: scores,
            },
        );
    }
    if per_condition.is_empty() {
        return Err(Error::InvalidParameter("intra-FID has no scorable entries".into()));
    }
    // fixed input order, independent of map ordering
    let averages: Vec<f64> = conditions
        .iter()
        .filter_map(|c| per_condition.get(&c.name).map(|p| p.average))
        .collect();
    let average = averages.iter().sum::<f64>() / averages.len() as f64;
    Ok(IntraFid {
        per_condition,
        average,
        warnings,
    })
}

/// Mean over samples of the per-sample fraction of correctly rendered conditions.
pub fn e_qual(b: &[Vec<u8>]) -> Result<f64> {
    let d = b
        .first()
        .map(Vec::len)
        .ok_or(Error::Empty("qualitative label matrix"))?;
    if d == 0 {
        return Err(Error::Empty("qualitative label matrix"));
    }
    let mut total = 0.0;
    for row in b {
        check_len("qualitative label row", d, row.len())?;
        if row.iter().any(|&v| v > 1) {
            return Err(Error::InvalidParameter("qualitative labels must be 0 or 1".into()));
        }
        total += row.iter().map(|&v| v as f64).sum::<f64>() / d as f64;
    }
    Ok(total / b.len() as f64)
}

/// `min(⌈∏ c_i / 10⌉ + 10, n_max)`.
pub fn n_qual(c_shape: &[usize], n_max: usize) -> Result<usize> {
    if c_shape.is_empty() {
        return Err(Error::Empty("condition shape"));
    }
    if c_shape.contains(&0) {
        return Err(Error::InvalidParameter("condition shape entries must be >= 1".into()));
    }
    let prod = c_shape.iter().fold(1usize, |p, &c| p.saturating_mul(c));
    Ok(prod.div_ceil(10).saturating_add(10).min(n_max))
}

/// `((i_fid + fjd) / 2) · (2 − e_qual)`.
pub fn e_art(i_fid_avg: f64, fjd: f64, e_qual_score: f64) -> Result<f64> {
    if !(i_fid_avg.is_finite() && i_fid_avg >= 0.0 && fjd.is_finite() && fjd >= 0.0) {
        return Err(Error::InvalidParameter("i_fid and fjd must be finite and >= 0".into()));
    }
    if !(0.0..=1.0).contains(&e_qual_score) {
        return Err(Error::InvalidParameter(format!(
            "e_qual must be in [0, 1], got {e_qual_score}"
        )));
    }
    Ok((i_fid_avg + fjd) / 2.0 * (2.0 - e_qual_score))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FjdValue {
    pub alpha: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub real: usize,
    pub fake: usize,
}

/// Serialised field order is part of the report format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub fid: f64,
    pub fjd: FjdValue,
    pub intra_fid: IntraFid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_qual: Option<f64>,
    pub n_qual: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_art: Option<f64>,
    pub warnings: Vec<String>,
    pub sample_counts: SampleCounts,
}

impl MetricReport {
    /// Fills `e_art` from the report's own fields when `e_qual` is present.
    pub fn with_e_art(mut self) -> Result<Self> {
        self.e_art = match self.e_qual {
            Some(q) => Some(e_art(self.intra_fid.average, self.fjd.value, q)?),
            None => None,
        };
        Ok(self)
    }
}
