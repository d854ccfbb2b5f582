//! Metadata ingestion: builds a [`ConditionSchema`] from annotated records and folds
//! rare categorical labels into the Unknown entry.
//!
//! Sub-conditions are ordered by kind (categorical, distribution, text) and then by
//! name. Categorical vocabularies are the surviving labels in lexicographic order
//! followed by [`UNKNOWN_LABEL`]; distribution outcomes are the sorted union of all
//! observed outcome labels.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::condition::{ConditionSchema, RawCondition, SubConditionDescriptor, SubConditionKind, UNKNOWN_LABEL};
use crate::error::{Error, Result};

pub const DEFAULT_MIN_COUNT: usize = 100;

/// One metadata line. A categorical `null` is an explicit Unknown; a `null`
/// distribution or token list is unspecified and encodes as a wildcard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    #[serde(flatten)]
    pub condition: RawCondition,
    /// Row index into the accompanying image-vector container.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<usize>,
}

/// Support per vocabulary entry, per categorical sub-condition, after folding.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub subconditions: BTreeMap<String, Vec<(String, usize)>>,
}

impl FrequencyTable {
    pub fn support(&self, subcondition: &str, label: &str) -> Option<usize> {
        self.subconditions
            .get(subcondition)?
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, c)| *c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub schema: ConditionSchema,
    pub frequencies: FrequencyTable,
    /// Input records with folded labels replaced by [`UNKNOWN_LABEL`].
    pub records: Vec<DatasetRecord>,
}

pub fn ingest_metadata(records: &[DatasetRecord], min_count: usize, text_dim: usize) -> Result<Ingested> {
    if records.is_empty() {
        return Err(Error::Empty("metadata records"));
    }
    if min_count == 0 {
        return Err(Error::InvalidParameter("min_count must be >= 1".into()));
    }

    let mut declared: BTreeMap<String, SubConditionKind> = BTreeMap::new();
    for r in records {
        let c = &r.condition;
        let named = c
            .categorical
            .keys()
            .map(|k| (k, SubConditionKind::Categorical))
            .chain(c.distribution.keys().map(|k| (k, SubConditionKind::Distribution)))
            .chain(c.text.keys().map(|k| (k, SubConditionKind::TextEmbedding)));
        for (name, kind) in named {
            match declared.get(name) {
                Some(&k) if k != kind => {
                    return Err(Error::Schema(format!("`{name}` declared with two different kinds")));
                }
                Some(_) => {}
                None => {
                    declared.insert(name.clone(), kind);
                }
            }
        }
    }
    for r in records {
        for name in declared.keys() {
            if !r.condition.has(name) {
                return Err(Error::MissingSubCondition {
                    record: r.id.clone(),
                    field: name.clone(),
                });
            }
        }
    }

    let mut label_counts: BTreeMap<&str, BTreeMap<&str, usize>> = BTreeMap::new();
    let mut outcomes: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for r in records {
        for (name, label) in &r.condition.categorical {
            let counts = label_counts.entry(name).or_default();
            if let Some(l) = label.as_deref().filter(|l| *l != UNKNOWN_LABEL) {
                *counts.entry(l).or_default() += 1;
            }
        }
        for (name, dist) in &r.condition.distribution {
            let set = outcomes.entry(name).or_default();
            if let Some(d) = dist {
                set.extend(d.keys().map(String::as_str));
            }
        }
    }

    let mut subconditions = Vec::new();
    let mut surviving: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (name, counts) in &label_counts {
        let keep: Vec<&str> = counts
            .iter()
            .filter(|(_, &c)| c >= min_count)
            .map(|(l, _)| *l)
            .collect();
        surviving.insert(name.to_string(), keep.iter().map(|l| l.to_string()).collect());
        subconditions.push(SubConditionDescriptor::categorical(name, &keep)?);
    }
    for (name, set) in &outcomes {
        if set.is_empty() {
            return Err(Error::Schema(format!("distribution `{name}` has no observed outcomes")));
        }
        let labels: Vec<&str> = set.iter().copied().collect();
        subconditions.push(SubConditionDescriptor::distribution(name, &labels)?);
    }
    for (name, kind) in &declared {
        if *kind == SubConditionKind::TextEmbedding {
            subconditions.push(SubConditionDescriptor::text(name, text_dim)?);
        }
    }
    let schema = ConditionSchema::new(subconditions)?;

    let mut remapped = Vec::with_capacity(records.len());
    let mut freq: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for r in records {
        let mut out = r.clone();
        for (name, label) in out.condition.categorical.iter_mut() {
            let keep = &surviving[name];
            let folded = match label.as_deref() {
                Some(l) if keep.contains(l) => l.to_string(),
                _ => UNKNOWN_LABEL.to_string(),
            };
            *freq.entry(name.clone()).or_default().entry(folded.clone()).or_default() += 1;
            *label = Some(folded);
        }
        remapped.push(out);
    }

    let mut frequencies = FrequencyTable::default();
    for desc in schema.subconditions() {
        if desc.kind != SubConditionKind::Categorical {
            continue;
        }
        let counts = freq.get(&desc.name);
        let rows = desc
            .vocab
            .iter()
            .map(|l| (l.clone(), counts.and_then(|c| c.get(l)).copied().unwrap_or(0)))
            .collect();
        frequencies.subconditions.insert(desc.name.clone(), rows);
    }

    Ok(Ingested {
        schema,
        frequencies,
        records: remapped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::condition::DEFAULT_TEXT_DIM;
    use crate::rng;
    use alloc::vec;
    use rand::Rng;

    fn record(id: usize, style: &str) -> DatasetRecord {
        let mut c = RawCondition::default();
        c.categorical.insert("style".into(), Some(style.into()));
        DatasetRecord {
            id: format!("r{id}"),
            condition: c,
            image: Some(id),
        }
    }

    fn records_abc() -> Vec<DatasetRecord> {
        let mut v = Vec::new();
        for (label, n) in [("a", 150), ("b", 120), ("c", 40)] {
            for _ in 0..n {
                v.push(record(v.len(), label));
            }
        }
        v
    }

    #[test]
    fn folds_rare_labels() {
        let out = ingest_metadata(&records_abc(), 100, DEFAULT_TEXT_DIM).unwrap();
        let d = out.schema.get("style").unwrap();
        assert_eq!(d.vocab, vec!["a", "b", UNKNOWN_LABEL]);
        assert_eq!(out.frequencies.support("style", "a"), Some(150));
        assert_eq!(out.frequencies.support("style", UNKNOWN_LABEL), Some(40));
        assert!(out
            .records
            .iter()
            .all(|r| r.condition.categorical["style"].as_deref() != Some("c")));
    }

    #[test]
    fn min_count_one_keeps_everything() {
        let out = ingest_metadata(&records_abc(), 1, DEFAULT_TEXT_DIM).unwrap();
        assert_eq!(
            out.schema.get("style").unwrap().vocab,
            vec!["a", "b", "c", UNKNOWN_LABEL]
        );
    }

    #[test]
    fn idempotent_on_own_output() {
        let first = ingest_metadata(&records_abc(), 100, DEFAULT_TEXT_DIM).unwrap();
        let second = ingest_metadata(&first.records, 100, DEFAULT_TEXT_DIM).unwrap();
        assert_eq!(first.schema, second.schema);
        assert_eq!(first.frequencies, second.frequencies);
    }

    #[test]
    fn errors_name_the_field() {
        assert!(matches!(ingest_metadata(&[], 1, 8), Err(Error::Empty(_))));
        let mut recs = records_abc();
        recs[3].condition.categorical.clear();
        recs[3].condition.categorical.insert("genre".into(), Some("x".into()));
        match ingest_metadata(&recs, 1, 8) {
            Err(Error::MissingSubCondition { field, .. }) => assert!(field == "genre" || field == "style"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mixed_modalities_order() {
        let mut c = RawCondition::default();
        c.categorical.insert("style".into(), None);
        c.distribution.insert(
            "emotion".into(),
            Some([("fear".to_string(), 3.0), ("awe".to_string(), 2.0)].into()),
        );
        c.text.insert("tags".into(), Some(vec!["tree".into()]));
        let r = DatasetRecord {
            id: "x".into(),
            condition: c,
            image: None,
        };
        let out = ingest_metadata(&[r], 1, 16).unwrap();
        let names: Vec<&str> = out.schema.subconditions().iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, vec!["style", "emotion", "tags"]);
        assert_eq!(out.schema.condition_shape(), vec![1, 2, 16]);
        assert_eq!(out.schema.get("emotion").unwrap().vocab, vec!["awe", "fear"]);
        // explicit Unknown becomes the reserved label
        assert_eq!(
            out.records[0].condition.categorical["style"].as_deref(),
            Some(UNKNOWN_LABEL)
        );
    }

    #[test]
    fn zipf_vocabulary_matches_brute_force_count() {
        let mut r = rng::from_seed(99);
        let n_labels = 40usize;
        let weights: Vec<f64> = (1..=n_labels).map(|k| 1.0 / k as f64).collect();
        let total: f64 = weights.iter().sum();
        let mut recs = Vec::new();
        for i in 0..1000 {
            let mut u = r.random::<f64>() * total;
            let mut k = 0;
            while k + 1 < n_labels && u >= weights[k] {
                u -= weights[k];
                k += 1;
            }
            recs.push(record(i, &format!("L{k:02}")));
        }
        let out = ingest_metadata(&recs, 100, 8).unwrap();

        // independent pass: count with a flat array, filter, sort
        let mut counts = vec![0usize; n_labels];
        for rec in &recs {
            let l = rec.condition.categorical["style"].as_ref().unwrap();
            counts[l[1..].parse::<usize>().unwrap()] += 1;
        }
        let mut expected: Vec<String> = (0..n_labels)
            .filter(|&k| counts[k] >= 100)
            .map(|k| format!("L{k:02}"))
            .collect();
        expected.sort();
        expected.push(UNKNOWN_LABEL.into());
        assert!(expected.len() > 2 && expected.len() < n_labels);
        assert_eq!(out.schema.get("style").unwrap().vocab, expected);
        let unknown: usize = (0..n_labels).filter(|&k| counts[k] < 100).map(|k| counts[k]).sum();
        assert_eq!(out.frequencies.support("style", UNKNOWN_LABEL), Some(unknown));
    }
}
