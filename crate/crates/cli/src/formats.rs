//! Readers and writers for every artifact the CLI produces or consumes.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use clat_core::condition::ConditionSchema;
use clat_core::gaussian::ConditionGaussian;
use clat_core::ingest::DatasetRecord;
use clat_core::latent_ops::{CenterOfMass, TransformationVector};
use clat_core::linalg::Matrix;
use clat_core::mapping::{Dense, MappingModel, Space, SynthesisModel, LEAKY_SLOPE};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::container::Container;
use crate::error::{CliError, CliResult, Stage};

fn meta_usize(c: &Container, key: &str) -> CliResult<usize> {
    c.meta
        .get(key)
        .and_then(Value::as_u64)
        .map(|v| v as usize)
        .ok_or_else(|| CliError::Format(format!("{} header is missing integer `{key}`", c.kind)))
}

fn meta_u64(c: &Container, key: &str) -> CliResult<u64> {
    c.meta
        .get(key)
        .and_then(Value::as_u64)
        .ok_or_else(|| CliError::Format(format!("{} header is missing integer `{key}`", c.kind)))
}

fn meta_f64(c: &Container, key: &str) -> CliResult<f64> {
    c.meta
        .get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| CliError::Format(format!("{} header is missing number `{key}`", c.kind)))
}

fn meta_str(c: &Container, key: &str) -> CliResult<String> {
    c.meta
        .get(key)
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| CliError::Format(format!("{} header is missing string `{key}`", c.kind)))
}

fn block_matrix(c: &Container, name: &str) -> CliResult<Matrix> {
    let b = c.block(name)?;
    Matrix::from_vec(b.info.rows, b.info.cols, b.data.clone()).stage("container block")
}

fn push_layers(c: &mut Container, layers: &[Dense]) {
    for (i, l) in layers.iter().enumerate() {
        let w = l.weight();
        c.push(&format!("layer{i}.weight"), w.rows(), w.cols(), w.as_slice().to_vec());
        c.push(&format!("layer{i}.bias"), 1, l.bias().len(), l.bias().to_vec());
    }
}

fn read_layers(c: &Container, depth: usize) -> CliResult<Vec<Dense>> {
    (0..depth)
        .map(|i| {
            let w = block_matrix(c, &format!("layer{i}.weight"))?;
            let b = c.block(&format!("layer{i}.bias"))?.data.clone();
            Dense::from_parts(w, b).stage("model layers")
        })
        .collect()
}

pub fn mapping_container(m: &MappingModel) -> Container {
    let mut c = Container::new(
        "mapping",
        json!({
            "z_dim": m.z_dim(),
            "c_dim": m.c_dim(),
            "w_dim": m.w_dim(),
            "depth": m.depth(),
            "seed": m.seed(),
            "condition_gain": m.condition_gain(),
            "leaky_slope": LEAKY_SLOPE,
        }),
    );
    push_layers(&mut c, m.layers());
    c
}

pub fn mapping_from(c: &Container) -> CliResult<MappingModel> {
    c.expect_kind("mapping")?;
    let layers = read_layers(c, meta_usize(c, "depth")?)?;
    MappingModel::from_parts(
        meta_usize(c, "z_dim")?,
        meta_usize(c, "c_dim")?,
        meta_f64(c, "condition_gain")?,
        meta_u64(c, "seed")?,
        layers,
    )
    .stage("mapping model")
}

pub fn synthesis_container(s: &SynthesisModel) -> Container {
    let mut c = Container::new(
        "synthesis",
        json!({
            "w_dim": s.w_dim(),
            "image_dim": s.image_dim(),
            "depth": s.depth(),
            "seed": s.seed(),
            "leaky_slope": LEAKY_SLOPE,
        }),
    );
    push_layers(&mut c, s.layers());
    c
}

pub fn synthesis_from(c: &Container) -> CliResult<SynthesisModel> {
    c.expect_kind("synthesis")?;
    let layers = read_layers(c, meta_usize(c, "depth")?)?;
    SynthesisModel::from_parts(meta_usize(c, "w_dim")?, meta_u64(c, "seed")?, layers).stage("synthesis model")
}

fn space_name(s: Space) -> &'static str {
    match s {
        Space::Z => "Z",
        Space::W => "W",
        Space::P => "P",
    }
}

fn parse_space(s: &str) -> CliResult<Space> {
    match s {
        "Z" => Ok(Space::Z),
        "W" => Ok(Space::W),
        "P" => Ok(Space::P),
        other => Err(CliError::Format(format!("unknown latent space `{other}`"))),
    }
}

pub fn gaussian_container(g: &ConditionGaussian) -> Container {
    let n = g.dim();
    Container::new(
        "gaussian",
        json!({
            "condition_id": g.id(),
            "n": n,
            "sample_count": g.sample_count(),
            "space": space_name(g.space()),
        }),
    )
    .with("mu", 1, n, g.mu().to_vec())
    .with("sigma", n, n, g.sigma().as_slice().to_vec())
}

pub fn gaussian_from(c: &Container) -> CliResult<ConditionGaussian> {
    c.expect_kind("gaussian")?;
    let mu = c.block("mu")?.data.clone();
    if mu.len() != meta_usize(c, "n")? {
        return Err(CliError::Format("gaussian mean length disagrees with header".into()));
    }
    ConditionGaussian::from_parts(
        meta_str(c, "condition_id")?,
        mu,
        block_matrix(c, "sigma")?,
        meta_usize(c, "sample_count")?,
        parse_space(&meta_str(c, "space")?)?,
    )
    .stage("gaussian")
}

pub fn center_container(center: &CenterOfMass, label: &str) -> Container {
    let mut c = Container::new(
        "center",
        json!({
            "condition": label,
            "global": center.condition.is_none(),
            "sample_count": center.sample_count,
            "seed": center.seed,
        }),
    )
    .with("w_bar", 1, center.w_bar.len(), center.w_bar.clone());
    if let Some(cv) = &center.condition {
        c.push("condition", 1, cv.len(), cv.clone());
    }
    c
}

pub fn center_from(c: &Container) -> CliResult<CenterOfMass> {
    c.expect_kind("center")?;
    let condition = if c.meta.get("global").and_then(Value::as_bool) == Some(true) {
        None
    } else {
        Some(c.block("condition")?.data.clone())
    };
    Ok(CenterOfMass {
        w_bar: c.block("w_bar")?.data.clone(),
        condition,
        sample_count: meta_usize(c, "sample_count")?,
        seed: meta_u64(c, "seed")?,
    })
}

pub fn transformation_container(t: &TransformationVector, from: &str, to: &str) -> Container {
    Container::new(
        "transformation",
        json!({
            "source": from,
            "target": to,
            "sample_count": t.sample_count,
            "seed": t.seed,
        }),
    )
    .with("t", 1, t.t.len(), t.t.clone())
    .with("source", 1, t.source.len(), t.source.clone())
    .with("target", 1, t.target.len(), t.target.clone())
}

pub fn transformation_from(c: &Container) -> CliResult<TransformationVector> {
    c.expect_kind("transformation")?;
    Ok(TransformationVector {
        t: c.block("t")?.data.clone(),
        source: c.block("source")?.data.clone(),
        target: c.block("target")?.data.clone(),
        sample_count: meta_usize(c, "sample_count")?,
        seed: meta_u64(c, "seed")?,
    })
}

/// A named set of row vectors (images, latents).
pub fn vectors_container(kind: &str, meta: Value, blocks: &[(&str, &Matrix)]) -> Container {
    let mut c = Container::new(kind, meta);
    for (name, m) in blocks {
        c.push(name, m.rows(), m.cols(), m.as_slice().to_vec());
    }
    c
}

pub fn vectors_from(c: &Container, name: &str) -> CliResult<Matrix> {
    block_matrix(c, name)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Format(e.to_string()))?;
    s.push('\n');
    fs::write(path, s).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let s = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&s).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
}

pub fn write_schema(path: &Path, schema: &ConditionSchema) -> CliResult<()> {
    write_json(path, schema)
}

pub fn read_schema(path: &Path) -> CliResult<ConditionSchema> {
    read_json(path)
}

pub fn write_jsonl(path: &Path, records: &[DatasetRecord]) -> CliResult<()> {
    let f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(f);
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| CliError::Format(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_jsonl(path: &Path) -> CliResult<Vec<DatasetRecord>> {
    let f = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .map_err(|e| CliError::Format(format!("{} line {}: {e}", path.display(), i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::Format(format!("{}: {e}", path.display()))
}

/// Writes a CSV with a header row. Floats use the shortest round-tripping form.
pub fn write_csv<R, I>(path: &Path, header: &[&str], rows: I) -> CliResult<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Header row plus string records.
pub fn read_csv(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

/// Embedding matrix from a CSV whose header row names the dimensions.
pub fn read_embeddings_csv(path: &Path) -> CliResult<Matrix> {
    let (header, rows) = read_csv(path)?;
    let mut data = Vec::with_capacity(rows.len() * header.len());
    for (i, row) in rows.iter().enumerate() {
        for v in row {
            let x: f64 = v
                .trim()
                .parse()
                .map_err(|_| CliError::Format(format!("{} row {}: `{v}` is not a number", path.display(), i + 1)))?;
            data.push(x);
        }
    }
    Matrix::from_vec(rows.len(), header.len(), data).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
}

pub fn write_embeddings_csv(path: &Path, m: &Matrix) -> CliResult<()> {
    let header: Vec<String> = (0..m.cols()).map(|j| format!("d{j}")).collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(
        path,
        &header,
        m.row_iter()
            .map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>()),
    )
}

/// Images are stored as a single `images` block, one row per record.
pub fn read_images(path: &Path) -> CliResult<Matrix> {
    let c = Container::read(path)?;
    c.expect_kind("images").map_err(|e| e.context(path))?;
    vectors_from(&c, "images").map_err(|e| e.context(path))
}

pub fn write_images(path: &Path, images: &Matrix, meta: Value) -> CliResult<()> {
    vectors_container("images", meta, &[("images", images)]).write(path)
}

/// Reproducibility record written by every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub parameters: Value,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clat_core::mapping::{init_models, ModelConfig};
    use clat_core::rng;

    #[test]
    fn models_round_trip_bit_exact() {
        let (m, s) = init_models(&ModelConfig {
            c_dim: 5,
            seed: 3,
            ..ModelConfig::default()
        })
        .unwrap();
        let m2 = mapping_from(&Container::from_bytes(&mapping_container(&m).to_bytes()).unwrap()).unwrap();
        let s2 = synthesis_from(&Container::from_bytes(&synthesis_container(&s).to_bytes()).unwrap()).unwrap();
        assert_eq!(m, m2);
        assert_eq!(s, s2);
        assert!(mapping_from(&synthesis_container(&s)).is_err());
    }

    #[test]
    fn gaussian_round_trip() {
        let mut r = rng::from_seed(1);
        let x = Matrix::from_vec(20, 3, rng::standard_normal_vec(&mut r, 60)).unwrap();
        let g = clat_core::gaussian::fit_gaussian("A", &x, Space::P).unwrap();
        let back = gaussian_from(&Container::from_bytes(&gaussian_container(&g).to_bytes()).unwrap()).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn center_and_transformation_round_trip() {
        let c = CenterOfMass {
            w_bar: vec![0.1, 0.2],
            condition: Some(vec![1.0, 0.0]),
            sample_count: 4,
            seed: 9,
        };
        assert_eq!(center_from(&center_container(&c, "A")).unwrap(), c);
        let g = CenterOfMass { condition: None, ..c };
        assert_eq!(center_from(&center_container(&g, "global")).unwrap(), g);
        let t = TransformationVector {
            t: vec![1.0, -1.0],
            source: vec![1.0, 0.0],
            target: vec![0.0, 1.0],
            sample_count: 3,
            seed: 2,
        };
        assert_eq!(transformation_from(&transformation_container(&t, "A", "B")).unwrap(), t);
    }

    #[test]
    fn embeddings_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        let m = Matrix::from_rows(&[[0.1, 1e-300, -3.5], [2.0, 0.30000000000000004, 7.0]]).unwrap();
        write_embeddings_csv(&p, &m).unwrap();
        assert_eq!(read_embeddings_csv(&p).unwrap(), m);
        std::fs::write(&p, "d0,d1\n1,x\n").unwrap();
        assert!(matches!(read_embeddings_csv(&p), Err(CliError::Format(_))));
    }
}
