//! Synthetic condition-labelled datasets and the bundled five-condition scenario.
//!
//! The bundled scenario mimics a clustered condition structure: conditions A and B
//! share a `family` label and an `emotion` profile, as do C and D, while E shares
//! nothing with the others. Image vectors are Gaussian blobs whose offsets follow
//! the same pairing.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::condition::{
    ConditionSchema, ConditionValue, MultiCondition, RawCondition, SubConditionDescriptor, SubConditionKind,
};
use crate::error::{Error, Result};
use crate::ingest::DatasetRecord;
use crate::linalg::Matrix;
use crate::mapping::ModelConfig;
use crate::rng;

pub const BUNDLED_IMAGE_DIM: usize = 192;
pub const BUNDLED_COUNT: usize = 200;

/// Image vectors for one entry are `offset + spread · N(0, I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryGenerator {
    pub offset: Vec<f64>,
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedCondition {
    pub name: String,
    pub condition: RawCondition,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDatasetSpec {
    pub schema: ConditionSchema,
    pub image_dim: usize,
    pub conditions: Vec<NamedCondition>,
    pub generators: BTreeMap<String, EntryGenerator>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub records: Vec<DatasetRecord>,
    /// One row per record, in record order.
    pub images: Matrix,
}

impl SyntheticDatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.conditions.is_empty() {
            return Err(Error::Empty("synthetic conditions"));
        }
        if self.image_dim == 0 {
            return Err(Error::InvalidParameter("image_dim must be >= 1".into()));
        }
        for c in &self.conditions {
            if c.count == 0 {
                return Err(Error::InvalidParameter(format!("condition `{}` has count 0", c.name)));
            }
            let g = self.generators.get(&c.name).ok_or_else(|| {
                Error::InvalidParameter(format!("condition `{}` has no generator parameters", c.name))
            })?;
            crate::error::check_len("generator offset", self.image_dim, g.offset.len())?;
            if !(g.spread.is_finite() && g.spread >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "condition `{}` has an invalid spread",
                    c.name
                )));
            }
            self.schema.resolve(&c.condition)?;
        }
        Ok(())
    }

    pub fn total_count(&self) -> usize {
        self.conditions.iter().map(|c| c.count).sum()
    }

    pub fn condition(&self, name: &str) -> Option<&NamedCondition> {
        self.conditions.iter().find(|c| c.name == name)
    }

    /// Condition vector used for latent analysis of a named condition, with
    /// text sub-conditions wildcarded.
    pub fn analysis_vector(&self, name: &str) -> Result<Vec<f64>> {
        let c = self
            .condition(name)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown scenario condition `{name}`")))?;
        analysis_vector(&self.schema, &c.condition)
    }

    pub fn generate(&self) -> Result<SyntheticDataset> {
        self.validate()?;
        let mut r = rng::stream(self.seed, "dataset");
        let mut records = Vec::with_capacity(self.total_count());
        let mut data = Vec::with_capacity(self.total_count() * self.image_dim);
        for c in &self.conditions {
            let g = &self.generators[&c.name];
            for i in 0..c.count {
                records.push(DatasetRecord {
                    id: format!("{}-{i:05}", c.name),
                    condition: c.condition.clone(),
                    image: Some(records.len()),
                });
                data.extend(g.offset.iter().map(|m| m + g.spread * rng::standard_normal(&mut r)));
            }
        }
        let images = Matrix::from_vec(records.len(), self.image_dim, data)?;
        Ok(SyntheticDataset { records, images })
    }
}

/// The condition with its text sub-conditions left as wildcards.
pub fn analysis_condition(schema: &ConditionSchema, raw: &RawCondition) -> Result<MultiCondition> {
    let zeta = schema.resolve(raw)?;
    let values = zeta
        .values()
        .iter()
        .zip(schema.subconditions())
        .map(|(v, d)| match d.kind {
            SubConditionKind::TextEmbedding => ConditionValue::Wildcard,
            _ => v.clone(),
        })
        .collect();
    Ok(MultiCondition::new(values))
}

/// Assembled [`analysis_condition`].
pub fn analysis_vector(schema: &ConditionSchema, raw: &RawCondition) -> Result<Vec<f64>> {
    schema.assemble(&analysis_condition(schema, raw)?)
}

fn raw(family: &str, style: &str, emotion: &str, tags: &[&str]) -> RawCondition {
    let mut c = RawCondition::default();
    c.categorical.insert("family".into(), Some(family.into()));
    c.categorical.insert("style".into(), Some(style.into()));
    c.distribution.insert(
        "emotion".into(),
        Some([(emotion.to_string(), 5.0)].into_iter().collect()),
    );
    c.text
        .insert("tags".into(), Some(tags.iter().map(|t| t.to_string()).collect()));
    c
}

/// Five conditions: (A, B) and (C, D) are designed partners, E is isolated.
pub fn bundled_scenario(seed: u64, count: usize, image_dim: usize, text_dim: usize) -> Result<SyntheticDatasetSpec> {
    let schema = ConditionSchema::new(vec![
        SubConditionDescriptor::categorical("family", &["ab", "cd", "e"])?,
        SubConditionDescriptor::categorical("style", &["A", "B", "C", "D", "E"])?,
        SubConditionDescriptor::distribution("emotion", &["calm", "fear", "joy"])?,
        SubConditionDescriptor::text("tags", text_dim)?,
    ])?;
    let table = [
        ("A", "ab", "calm", ["tree", "sky"]),
        ("B", "ab", "calm", ["tree", "river"]),
        ("C", "cd", "fear", ["storm", "sea"]),
        ("D", "cd", "fear", ["storm", "cliff"]),
        ("E", "e", "joy", ["portrait", "garden"]),
    ];
    let conditions = table
        .iter()
        .map(|(name, family, emotion, tags)| NamedCondition {
            name: name.to_string(),
            condition: raw(family, name, emotion, tags),
            count,
        })
        .collect();

    // partners share a base offset and differ by a small perturbation
    let mut r = rng::stream(seed, "dataset-offsets");
    let mut base = BTreeMap::new();
    for family in ["ab", "cd", "e"] {
        let v: Vec<f64> = rng::standard_normal_vec(&mut r, image_dim)
            .iter()
            .map(|x| 4.0 * x)
            .collect();
        base.insert(family, v);
    }
    let mut generators = BTreeMap::new();
    for (name, family, _, _) in &table {
        let offset = base[family]
            .iter()
            .map(|b| b + 0.5 * rng::standard_normal(&mut r))
            .collect();
        generators.insert(name.to_string(), EntryGenerator { offset, spread: 1.0 });
    }
    Ok(SyntheticDatasetSpec {
        schema,
        image_dim,
        conditions,
        generators,
        seed,
    })
}

/// Network shape used with the bundled scenario. The mapping is kept shallow so
/// that a randomly initialised network preserves the designed condition geometry.
pub fn bundled_model_config(c_dim: usize, seed: u64) -> ModelConfig {
    ModelConfig {
        c_dim,
        mapping_depth: 2,
        seed,
        ..ModelConfig::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::condition::DEFAULT_TEXT_DIM;
    use crate::ingest::ingest_metadata;
    use crate::linalg::sqrt;

    fn spec() -> SyntheticDatasetSpec {
        bundled_scenario(3, 100, 16, DEFAULT_TEXT_DIM).unwrap()
    }

    #[test]
    fn counts_and_shapes() {
        let mut s = spec();
        s.conditions.truncate(3);
        let d = s.generate().unwrap();
        assert_eq!(d.records.len(), 300);
        assert_eq!((d.images.rows(), d.images.cols()), (300, 16));
        assert_eq!(d.records[150].image, Some(150));
        assert_eq!(spec().schema.condition_shape(), vec![4, 6, 3, 32]);
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(spec().generate().unwrap(), spec().generate().unwrap());
        let other = bundled_scenario(4, 100, 16, DEFAULT_TEXT_DIM)
            .unwrap()
            .generate()
            .unwrap();
        assert_ne!(spec().generate().unwrap().images, other.images);
    }

    #[test]
    fn entry_means_match_offsets() {
        let s = spec();
        let d = s.generate().unwrap();
        for (ci, c) in s.conditions.iter().enumerate() {
            let g = &s.generators[&c.name];
            let rows: Vec<&[f64]> = d.images.row_iter().skip(ci * 100).take(100).collect();
            let se = g.spread / sqrt(100.0);
            for k in 0..16 {
                let m = rows.iter().map(|r| r[k]).sum::<f64>() / 100.0;
                // 3.9σ keeps the 80-coordinate family-wise error small
                assert!((m - g.offset[k]).abs() < 3.9 * se, "{} dim {k}", c.name);
            }
        }
    }

    #[test]
    fn missing_generator_is_rejected() {
        let mut s = spec();
        s.generators.remove("C");
        assert!(matches!(s.generate(), Err(Error::InvalidParameter(m)) if m.contains("`C`")));
        let mut s = spec();
        s.conditions[0].count = 0;
        assert!(s.generate().is_err());
    }

    #[test]
    fn ingested_schema_matches_bundled_schema() {
        let s = spec();
        let d = s.generate().unwrap();
        let ing = ingest_metadata(&d.records, 100, DEFAULT_TEXT_DIM).unwrap();
        assert_eq!(ing.schema, s.schema);
    }

    #[test]
    fn analysis_vectors_wildcard_text() {
        let s = spec();
        let v = s.analysis_vector("A").unwrap();
        assert_eq!(v.len(), 45);
        let tags = s.schema.block(3);
        assert!(v[tags].iter().all(|&x| x == 0.0));
        assert_eq!(v[0], 1.0);
        assert_eq!(v[4], 1.0);
        assert_eq!(v[10], 1.0);
        assert!(s.analysis_vector("Z").is_err());
    }

    #[test]
    fn every_bundled_condition_encodes_in_full() {
        let s = spec();
        for c in &s.conditions {
            let zeta = s.schema.resolve(&c.condition).unwrap();
            assert!(zeta.wildcard_positions().is_empty(), "{}", c.name);
            s.schema.assemble(&zeta).unwrap();
        }
    }
}
