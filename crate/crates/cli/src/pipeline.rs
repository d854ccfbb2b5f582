//! Pipeline stages behind each CLI command. Every stage reads and writes inside
//! one workspace directory and ends by writing `manifest-<command>.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clat_core::condition::{
    default_mask_k, stochastic_mask, ConditionSchema, ConditionValue, MultiCondition, RawCondition, SubConditionKind,
};
use clat_core::gaussian::{fd_matrix, fit_gaussian, sample_condition_points, Classifier, ConditionGaussian};
use clat_core::ingest::{ingest_metadata, DatasetRecord, FrequencyTable};
use clat_core::latent_ops::{
    apply_transformation, center_of_mass, conditional_interpolate, invert, transformation_vector, truncate,
    InversionConfig,
};
use clat_core::linalg::{squared_distance, Matrix};
use clat_core::mapping::{
    init_models, leaky_relu, LatentVector, MappingModel, Scratch, Space, SynthesisModel, P_SLOPE,
};
use clat_core::metrics::{
    e_qual, fid, fjd, intra_fid, n_qual, ConditionEntries, EmbeddingFunction, EntrySamples, FjdValue, JointSet,
    MetricReport, SampleCounts,
};
use clat_core::pca::{confidence_ellipse, pca_project};
use clat_core::rng;
use clat_core::synthetic::{analysis_condition, bundled_scenario, SyntheticDatasetSpec};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::container::Container;
use crate::error::{CliError, CliResult, Stage};
use crate::formats::{self, Manifest};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const SCHEMA: &str = "schema.json";
pub const METADATA: &str = "metadata.jsonl";
pub const IMAGES: &str = "images.mdl";
pub const SCENARIO: &str = "scenario.json";
pub const FREQUENCIES: &str = "frequencies.json";
pub const MAPPING: &str = "mapping.mdl";
pub const SYNTHESIS: &str = "synthesis.mdl";
pub const GAUSSIAN_DIR: &str = "gaussians";
pub const CENTER_DIR: &str = "centers";

/// Points are sampled and classified in chunks of this many rows.
const CHUNK: usize = 10_000;

pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub fn open(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn subdir(&self, name: &str) -> CliResult<PathBuf> {
        let p = self.path(name);
        fs::create_dir_all(&p).map_err(|e| CliError::io(&p, e))?;
        Ok(p)
    }

    /// Path as recorded in manifests: relative to the workspace when inside it.
    fn display(&self, p: &Path) -> String {
        p.strip_prefix(&self.root)
            .unwrap_or(p)
            .to_string_lossy()
            .replace('\\', "/")
    }

    /// Fails with every missing file named at once.
    fn require(&self, names: &[&str]) -> CliResult<()> {
        let missing: Vec<&str> = names.iter().copied().filter(|n| !self.path(n).exists()).collect();
        if missing.is_empty() {
            return Ok(());
        }
        Err(CliError::Format(format!(
            "missing input file(s) in {}: {}",
            self.root.display(),
            missing.join(", ")
        )))
    }

    fn write_manifest(
        &self,
        command: &str,
        seed: u64,
        inputs: &[PathBuf],
        outputs: &[PathBuf],
        parameters: Value,
    ) -> CliResult<Manifest> {
        let m = Manifest {
            command: command.to_string(),
            version: VERSION.to_string(),
            seed,
            inputs: inputs.iter().map(|p| self.display(p)).collect(),
            outputs: outputs.iter().map(|p| self.display(p)).collect(),
            parameters,
        };
        formats::write_json(&self.path(&format!("manifest-{command}.json")), &m)?;
        Ok(m)
    }

    fn schema(&self) -> CliResult<ConditionSchema> {
        formats::read_schema(&self.path(SCHEMA))
    }

    fn models(&self) -> CliResult<(MappingModel, SynthesisModel)> {
        self.require(&[MAPPING, SYNTHESIS])?;
        let m = formats::mapping_from(&Container::read(&self.path(MAPPING))?)?;
        let s = formats::synthesis_from(&Container::read(&self.path(SYNTHESIS))?)?;
        Ok((m, s))
    }

    fn scenario(&self) -> CliResult<Scenario> {
        self.require(&[SCHEMA, SCENARIO])?;
        let schema = self.schema()?;
        let spec: SyntheticDatasetSpec = formats::read_json(&self.path(SCENARIO))?;
        Scenario::new(schema, &spec)
    }

    fn gaussian_path(&self, name: &str) -> PathBuf {
        self.path(GAUSSIAN_DIR).join(format!("{}.gauss", file_label(name)))
    }

    /// Classifier over the scenario conditions, when `fit`/`analyze` has run.
    fn classifier(&self, scenario: &Scenario, cfg: &RunConfig) -> CliResult<Option<Classifier>> {
        let paths: Vec<PathBuf> = scenario.names.iter().map(|n| self.gaussian_path(n)).collect();
        if !paths.iter().all(|p| p.exists()) {
            return Ok(None);
        }
        let gs = paths
            .iter()
            .map(|p| formats::gaussian_from(&Container::read(p)?))
            .collect::<CliResult<Vec<_>>>()?;
        Ok(Some(Classifier::new(&gs, cfg.classify_ridge).stage("classifier")?))
    }
}

fn file_label(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Named analysis conditions resolved against the workspace schema.
pub struct Scenario {
    pub schema: ConditionSchema,
    pub names: Vec<String>,
    pub zetas: Vec<MultiCondition>,
    pub vectors: Vec<Vec<f64>>,
}

impl Scenario {
    fn new(schema: ConditionSchema, spec: &SyntheticDatasetSpec) -> CliResult<Self> {
        let mut names = Vec::new();
        let mut zetas = Vec::new();
        let mut vectors = Vec::new();
        for c in &spec.conditions {
            let z = analysis_condition(&schema, &c.condition).stage("scenario conditions")?;
            vectors.push(schema.assemble(&z).stage("scenario conditions")?);
            zetas.push(z);
            names.push(c.name.clone());
        }
        if names.len() < 2 {
            return Err(CliError::Format(
                "the scenario needs at least 2 named conditions".into(),
            ));
        }
        Ok(Self {
            schema,
            names,
            zetas,
            vectors,
        })
    }

    /// `global`, a scenario condition name, or an inline raw-condition JSON object.
    fn resolve(&self, arg: &str) -> CliResult<(String, MultiCondition)> {
        if arg == "global" {
            return Ok(("global".into(), MultiCondition::all_wildcard(self.schema.len())));
        }
        if arg.trim_start().starts_with('{') {
            let raw: RawCondition =
                serde_json::from_str(arg).map_err(|e| CliError::Usage(format!("condition JSON: {e}")))?;
            return Ok(("custom".into(), self.schema.resolve(&raw).stage("condition")?));
        }
        match self.names.iter().position(|n| n == arg) {
            Some(i) => Ok((arg.to_string(), self.zetas[i].clone())),
            None => Err(CliError::Usage(format!(
                "unknown condition `{arg}`; expected `global`, a JSON object or one of: {}",
                self.names.join(", ")
            ))),
        }
    }

    fn vector(&self, arg: &str) -> CliResult<(String, Vec<f64>)> {
        let (label, z) = self.resolve(arg)?;
        Ok((label, self.schema.assemble(&z).stage("condition")?))
    }
}

fn to_p(w: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend(w.iter().map(|&v| leaky_relu(v, P_SLOPE)));
}

struct WClassifier<'a> {
    clf: &'a Classifier,
    p: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> WClassifier<'a> {
    fn new(clf: &'a Classifier) -> Self {
        Self {
            clf,
            p: Vec::new(),
            scratch: Vec::new(),
        }
    }

    /// Classifies a W-space vector in P space.
    fn classify(&mut self, w: &[f64]) -> usize {
        to_p(w, &mut self.p);
        self.clf.classify_unchecked(&self.p, &mut self.scratch)
    }
}

fn fmt(v: f64) -> String {
    v.to_string()
}

fn sample_w(mapping: &MappingModel, c: &[f64], count: usize, r: &mut rng::StreamRng) -> CliResult<Matrix> {
    sample_condition_points(mapping, c, count, Space::W, r).stage("sampling")
}

fn images_of(synthesis: &SynthesisModel, ws: &Matrix) -> CliResult<Matrix> {
    let mut out = Vec::with_capacity(ws.rows() * synthesis.image_dim());
    for w in ws.row_iter() {
        out.extend(synthesis.synthesize_raw(w).stage("synthesis")?);
    }
    Matrix::from_vec(ws.rows(), synthesis.image_dim(), out).stage("synthesis")
}

// ---------------------------------------------------------------- gen-dataset

pub struct GenDatasetArgs {
    pub spec: Option<PathBuf>,
    pub count: Option<usize>,
}

pub fn gen_dataset(cfg: &RunConfig, ws: &Workspace, args: &GenDatasetArgs) -> CliResult<Manifest> {
    let mut inputs = Vec::new();
    let spec = match &args.spec {
        Some(p) => {
            inputs.push(p.clone());
            let mut s: SyntheticDatasetSpec = formats::read_json(p)?;
            if let Some(n) = args.count {
                s.conditions.iter_mut().for_each(|c| c.count = n);
            }
            s
        }
        None => bundled_scenario(
            cfg.seed,
            args.count.unwrap_or(cfg.samples.dataset),
            cfg.dims.image,
            cfg.dims.text_embed,
        )
        .stage("gen-dataset")?,
    };
    let data = spec.generate().stage("gen-dataset")?;
    let ingested = ingest_metadata(&data.records, cfg.min_count, cfg.dims.text_embed).stage("gen-dataset")?;

    let outputs = [SCHEMA, METADATA, IMAGES, SCENARIO, FREQUENCIES].map(|n| ws.path(n));
    formats::write_schema(&outputs[0], &ingested.schema)?;
    formats::write_jsonl(&outputs[1], &data.records)?;
    formats::write_images(
        &outputs[2],
        &data.images,
        json!({"seed": spec.seed, "records": data.records.len()}),
    )?;
    formats::write_json(&outputs[3], &spec)?;
    formats::write_json(&outputs[4], &ingested.frequencies)?;
    ws.write_manifest(
        "gen-dataset",
        spec.seed,
        &inputs,
        &outputs,
        json!({
            "conditions": spec.conditions.iter().map(|c| json!({"name": c.name, "count": c.count})).collect::<Vec<_>>(),
            "image_dim": spec.image_dim,
            "min_count": cfg.min_count,
            "text_dim": cfg.dims.text_embed,
        }),
    )
}

// ------------------------------------------------------------------ fit

fn fit_gaussians(
    cfg: &RunConfig,
    ws: &Workspace,
    scenario: &Scenario,
    mapping: &MappingModel,
) -> CliResult<(Vec<ConditionGaussian>, Vec<Matrix>, Vec<PathBuf>)> {
    ws.subdir(GAUSSIAN_DIR)?;
    let mut gs = Vec::new();
    let mut samples = Vec::new();
    let mut paths = Vec::new();
    for (name, c) in scenario.names.iter().zip(&scenario.vectors) {
        let mut r = rng::stream(cfg.seed, &format!("fit/{name}"));
        let x = sample_condition_points(mapping, c, cfg.samples.fit, Space::P, &mut r).stage("fit")?;
        let g = fit_gaussian(name.as_str(), &x, Space::P).stage("fit")?;
        let p = ws.gaussian_path(name);
        formats::gaussian_container(&g).write(&p)?;
        paths.push(p);
        gs.push(g);
        samples.push(x);
    }
    Ok((gs, samples, paths))
}

pub fn fit(cfg: &RunConfig, ws: &Workspace) -> CliResult<Manifest> {
    let scenario = ws.scenario()?;
    let (mapping, synthesis) = init_models(&cfg.model_config(scenario.schema.total_dim())).stage("init models")?;
    let mp = ws.path(MAPPING);
    let sp = ws.path(SYNTHESIS);
    formats::mapping_container(&mapping).write(&mp)?;
    formats::synthesis_container(&synthesis).write(&sp)?;
    let (gs, _, mut outputs) = fit_gaussians(cfg, ws, &scenario, &mapping)?;
    outputs.splice(0..0, [mp, sp]);
    ws.write_manifest(
        "fit",
        cfg.seed,
        &[ws.path(SCHEMA), ws.path(SCENARIO)],
        &outputs,
        json!({
            "model": cfg.model_config(scenario.schema.total_dim()),
            "fit_samples": cfg.samples.fit,
            "space": "P",
            "conditions": gs.iter().map(|g| json!({"id": g.id(), "degenerate": g.is_degenerate()})).collect::<Vec<_>>(),
        }),
    )
}

// -------------------------------------------------------------- analyze

#[derive(Debug, Clone, Serialize)]
pub struct RetentionRow {
    pub psi: f64,
    pub conditional: f64,
    pub global: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisSummary {
    pub conditions: Vec<String>,
    pub accuracy: BTreeMap<String, f64>,
    pub overall_accuracy: f64,
    pub retention: Vec<RetentionRow>,
    pub fd_nearest: BTreeMap<String, String>,
    pub explained_variance_ratio: Vec<f64>,
}

pub fn analyze(cfg: &RunConfig, ws: &Workspace) -> CliResult<(Manifest, AnalysisSummary)> {
    let scenario = ws.scenario()?;
    let (mapping, _) = ws.models()?;
    let mut outputs = Vec::new();
    let names = &scenario.names;
    let k = names.len();

    let (gs, fit_samples, paths) = fit_gaussians(cfg, ws, &scenario, &mapping)?;
    outputs.extend(paths);
    let clf = Classifier::new(&gs, cfg.classify_ridge).stage("classifier")?;

    // held-out accuracy and confusion counts
    let mut confusion = vec![vec![0usize; k]; k];
    let mut scratch = Vec::new();
    for (i, (name, c)) in names.iter().zip(&scenario.vectors).enumerate() {
        let mut r = rng::stream(cfg.seed, &format!("classify/{name}"));
        let mut left = cfg.samples.classify;
        while left > 0 {
            let n = left.min(CHUNK);
            let x = sample_condition_points(&mapping, c, n, Space::P, &mut r).stage("classify")?;
            for row in x.row_iter() {
                confusion[i][clf.classify_unchecked(row, &mut scratch)] += 1;
            }
            left -= n;
        }
    }
    let mut accuracy = BTreeMap::new();
    let mut rows = Vec::new();
    for (i, name) in names.iter().enumerate() {
        let acc = confusion[i][i] as f64 / cfg.samples.classify as f64;
        accuracy.insert(name.clone(), acc);
        rows.push(vec![
            name.clone(),
            cfg.samples.classify.to_string(),
            confusion[i][i].to_string(),
            fmt(acc),
        ]);
    }
    let total_correct: usize = (0..k).map(|i| confusion[i][i]).sum();
    let overall_accuracy = total_correct as f64 / (k * cfg.samples.classify) as f64;
    rows.push(vec![
        "all".into(),
        (k * cfg.samples.classify).to_string(),
        total_correct.to_string(),
        fmt(overall_accuracy),
    ]);
    let p = ws.path("classification.csv");
    formats::write_csv(&p, &["condition", "samples", "correct", "accuracy"], rows)?;
    outputs.push(p);
    let p = ws.path("confusion.csv");
    let mut header = vec!["condition"];
    header.extend(names.iter().map(String::as_str));
    formats::write_csv(
        &p,
        &header,
        names.iter().zip(&confusion).map(|(n, row)| {
            let mut v = vec![n.clone()];
            v.extend(row.iter().map(usize::to_string));
            v
        }),
    )?;
    outputs.push(p);

    // Fréchet distances
    let fd = fd_matrix(&gs).stage("fd matrix")?;
    let p = ws.path("fd_matrix.csv");
    let mut rows = Vec::new();
    for i in 0..k {
        for j in 0..k {
            rows.push(vec![names[i].clone(), names[j].clone(), fmt(fd.get(i, j))]);
        }
    }
    formats::write_csv(&p, &["condition_a", "condition_b", "fd"], rows)?;
    outputs.push(p);
    let p = ws.path("fd_nearest.csv");
    formats::write_csv(
        &p,
        &["condition", "nearest", "fd"],
        (0..k).map(|i| {
            vec![
                names[i].clone(),
                names[fd.nearest[i]].clone(),
                fmt(fd.nearest_distance(i)),
            ]
        }),
    )?;
    outputs.push(p);
    let fd_nearest = (0..k)
        .map(|i| (names[i].clone(), names[fd.nearest[i]].clone()))
        .collect();

    // PCA scatter of the leading fit samples, with 3σ ellipses per condition
    let per = cfg.samples.pca.min(cfg.samples.fit);
    let mut pooled = Matrix::zeros(0, mapping.w_dim());
    for x in &fit_samples {
        for row in x.row_iter().take(per) {
            pooled.push_row(row).stage("pca")?;
        }
    }
    let (proj, scores) = pca_project(&pooled, 2).stage("pca")?;
    let p = ws.path("pca_scatter.csv");
    formats::write_csv(
        &p,
        &["sample_id", "condition", "pc1", "pc2"],
        scores.row_iter().enumerate().map(|(r, s)| {
            let name = &names[r / per];
            vec![format!("{name}-{:05}", r % per), name.clone(), fmt(s[0]), fmt(s[1])]
        }),
    )?;
    outputs.push(p);
    let p = ws.path("pca_ellipses.csv");
    let mut rows = Vec::new();
    for (i, name) in names.iter().enumerate() {
        let pts = Matrix::from_vec(per, 2, scores.as_slice()[i * per * 2..(i + 1) * per * 2].to_vec()).stage("pca")?;
        let e = confidence_ellipse(&pts, 3.0).stage("pca ellipse")?;
        rows.push(vec![
            name.clone(),
            fmt(e.center[0]),
            fmt(e.center[1]),
            fmt(e.semi_major),
            fmt(e.semi_minor),
            fmt(e.angle),
            "3".into(),
        ]);
    }
    formats::write_csv(
        &p,
        &[
            "condition",
            "center_pc1",
            "center_pc2",
            "semi_major",
            "semi_minor",
            "angle_rad",
            "n_sigma",
        ],
        rows,
    )?;
    outputs.push(p);
    let p = ws.path("pca_variance.csv");
    formats::write_csv(
        &p,
        &["component", "explained_variance_ratio"],
        proj.explained_variance_ratio
            .iter()
            .enumerate()
            .map(|(i, v)| vec![format!("pc{}", i + 1), fmt(*v)]),
    )?;
    outputs.push(p);

    // centers of mass share one z stream so their differences are transformation vectors
    let center_seed = rng::derive_seed(cfg.seed, "center");
    let cdir = ws.subdir(CENTER_DIR)?;
    let global = center_of_mass(&mapping, None, cfg.samples.center, center_seed).stage("center of mass")?;
    let p = cdir.join("global.com");
    formats::center_container(&global, "global").write(&p)?;
    outputs.push(p);
    let mut centers = Vec::new();
    for (name, c) in names.iter().zip(&scenario.vectors) {
        let com = center_of_mass(&mapping, Some(c), cfg.samples.center, center_seed).stage("center of mass")?;
        let p = cdir.join(format!("{}.com", file_label(name)));
        formats::center_container(&com, name).write(&p)?;
        outputs.push(p);
        centers.push(com);
    }

    // truncation sweep for both variants
    let mut wc = WClassifier::new(&clf);
    let mut hits = vec![[0usize; 2]; cfg.psi_sweep.len()];
    let mut rows_c = Vec::new();
    let mut rows_g = Vec::new();
    for (i, (name, c)) in names.iter().zip(&scenario.vectors).enumerate() {
        let mut r = rng::stream(cfg.seed, &format!("sweep/{name}"));
        let points = sample_w(&mapping, c, cfg.samples.sweep, &mut r)?;
        for (s, w) in points.row_iter().enumerate() {
            let w = LatentVector::w(w.to_vec());
            let id = format!("{name}-{s:05}");
            for (pi, &psi) in cfg.psi_sweep.iter().enumerate() {
                for (variant, center, rows) in [(0, &centers[i], &mut rows_c), (1, &global, &mut rows_g)] {
                    let t = truncate(&w, center, psi).stage("truncate")?;
                    let got = wc.classify(t.as_slice());
                    if got == i {
                        hits[pi][variant] += 1;
                    }
                    let dist = squared_distance(t.as_slice(), &center.w_bar).sqrt();
                    rows.push(vec![fmt(psi), id.clone(), names[got].clone(), fmt(dist)]);
                }
            }
        }
    }
    let header = ["psi", "sample_id", "classified_condition", "distance_to_center"];
    for (file, rows) in [("psi_sweep_conditional.csv", rows_c), ("psi_sweep_global.csv", rows_g)] {
        let p = ws.path(file);
        formats::write_csv(&p, &header, rows)?;
        outputs.push(p);
    }
    let total = (k * cfg.samples.sweep) as f64;
    let retention: Vec<RetentionRow> = cfg
        .psi_sweep
        .iter()
        .zip(&hits)
        .map(|(&psi, h)| RetentionRow {
            psi,
            conditional: h[0] as f64 / total,
            global: h[1] as f64 / total,
        })
        .collect();
    let p = ws.path("retention.csv");
    formats::write_csv(
        &p,
        &["psi", "conditional_accuracy", "global_accuracy"],
        retention
            .iter()
            .map(|r| vec![fmt(r.psi), fmt(r.conditional), fmt(r.global)]),
    )?;
    outputs.push(p);

    let summary = AnalysisSummary {
        conditions: names.clone(),
        accuracy,
        overall_accuracy,
        retention,
        fd_nearest,
        explained_variance_ratio: proj.explained_variance_ratio.clone(),
    };
    let p = ws.path("analysis.json");
    formats::write_json(&p, &summary)?;
    outputs.push(p);

    let manifest = ws.write_manifest(
        "analyze",
        cfg.seed,
        &[ws.path(SCHEMA), ws.path(SCENARIO), ws.path(MAPPING)],
        &outputs,
        json!({
            "samples": cfg.samples,
            "psi_sweep": cfg.psi_sweep,
            "classify_ridge": cfg.classify_ridge,
            "space": "P",
            "pca_k": 2,
        }),
    )?;
    Ok((manifest, summary))
}

// --------------------------------------------------------- latent tools

fn latent_outputs(
    ws: &Workspace,
    name: &str,
    blocks: &[(&str, &Matrix)],
    images: &Matrix,
    meta: Value,
) -> CliResult<Vec<PathBuf>> {
    let wp = ws.path(&format!("{name}-w.mdl"));
    formats::vectors_container("latents", json!({"space": "W", "tool": name, "meta": meta}), blocks).write(&wp)?;
    let ip = ws.path(&format!("{name}-images.mdl"));
    formats::write_images(&ip, images, json!({"tool": name}))?;
    Ok(vec![wp, ip])
}

pub struct TruncateArgs {
    pub psi: f64,
    pub condition: Option<String>,
    pub global: bool,
    pub count: usize,
    pub input: Option<PathBuf>,
}

pub fn run_truncate(cfg: &RunConfig, ws: &Workspace, a: &TruncateArgs) -> CliResult<Manifest> {
    let scenario = ws.scenario()?;
    let (mapping, synthesis) = ws.models()?;
    let (label, c) = scenario.vector(a.condition.as_deref().unwrap_or("global"))?;
    let center_seed = rng::derive_seed(cfg.seed, "center");
    let center = if a.global || a.condition.is_none() {
        center_of_mass(&mapping, None, cfg.samples.center, center_seed)
    } else {
        center_of_mass(&mapping, Some(&c), cfg.samples.center, center_seed)
    }
    .stage("center of mass")?;
    let mut inputs = vec![ws.path(MAPPING), ws.path(SYNTHESIS)];
    let input = match &a.input {
        Some(p) => {
            inputs.push(p.clone());
            formats::vectors_from(&Container::read(p)?, "w")?
        }
        None => sample_w(&mapping, &c, a.count, &mut rng::stream(cfg.seed, "truncate/z"))?,
    };
    let mut out = Matrix::zeros(0, input.cols());
    for w in input.row_iter() {
        let t = truncate(&LatentVector::w(w.to_vec()), &center, a.psi).stage("truncate")?;
        out.push_row(t.as_slice()).stage("truncate")?;
    }
    let images = images_of(&synthesis, &out)?;
    let variant = if center.condition.is_some() {
        "conditional"
    } else {
        "global"
    };
    let mut outputs = latent_outputs(
        ws,
        "truncate",
        &[("input", &input), ("w", &out)],
        &images,
        json!({"psi": a.psi}),
    )?;
    let cp = ws.path("truncate-center.com");
    formats::center_container(&center, if variant == "global" { "global" } else { &label }).write(&cp)?;
    outputs.push(cp);
    if let Some(clf) = ws.classifier(&scenario, cfg)? {
        let mut wc = WClassifier::new(&clf);
        let p = ws.path("truncate.csv");
        formats::write_csv(
            &p,
            &["psi", "sample_id", "classified_condition", "distance_to_center"],
            out.row_iter().enumerate().map(|(i, w)| {
                vec![
                    fmt(a.psi),
                    format!("{label}-{i:05}"),
                    scenario.names[wc.classify(w)].clone(),
                    fmt(squared_distance(w, &center.w_bar).sqrt()),
                ]
            }),
        )?;
        outputs.push(p);
    }
    ws.write_manifest(
        "truncate",
        cfg.seed,
        &inputs,
        &outputs,
        json!({"psi": a.psi, "condition": label, "variant": variant, "count": input.rows(), "center_samples": cfg.samples.center}),
    )
}

pub struct ArithmeticArgs {
    pub from: String,
    pub to: String,
    pub count: usize,
}

pub fn run_arithmetic(cfg: &RunConfig, ws: &Workspace, a: &ArithmeticArgs) -> CliResult<Manifest> {
    let scenario = ws.scenario()?;
    let (mapping, synthesis) = ws.models()?;
    let (l1, c1) = scenario.vector(&a.from)?;
    let (l2, c2) = scenario.vector(&a.to)?;
    let t = transformation_vector(
        &mapping,
        &c1,
        &c2,
        cfg.samples.center,
        rng::derive_seed(cfg.seed, "center"),
    )
    .stage("transformation vector")?;
    let input = sample_w(&mapping, &c1, a.count, &mut rng::stream(cfg.seed, "arithmetic/z"))?;
    let mut out = Matrix::zeros(0, input.cols());
    for w in input.row_iter() {
        out.push_row(
            apply_transformation(&LatentVector::w(w.to_vec()), &t)
                .stage("arithmetic")?
                .as_slice(),
        )
        .stage("arithmetic")?;
    }
    let images = images_of(&synthesis, &out)?;
    let mut outputs = latent_outputs(
        ws,
        "arithmetic",
        &[("input", &input), ("w", &out)],
        &images,
        json!({"from": l1, "to": l2}),
    )?;
    let tp = ws.path(&format!("arithmetic-{}-{}.tvec", file_label(&l1), file_label(&l2)));
    formats::transformation_container(&t, &l1, &l2).write(&tp)?;
    outputs.push(tp);
    let mut params = json!({"from": l1, "to": l2, "count": a.count, "center_samples": cfg.samples.center});
    if let Some(clf) = ws.classifier(&scenario, cfg)? {
        let mut wc = WClassifier::new(&clf);
        let got: Vec<usize> = out.row_iter().map(|w| wc.classify(w)).collect();
        let p = ws.path("arithmetic.csv");
        formats::write_csv(
            &p,
            &["sample_id", "classified_condition"],
            got.iter()
                .enumerate()
                .map(|(i, &g)| vec![format!("{l1}-{i:05}"), scenario.names[g].clone()]),
        )?;
        outputs.push(p);
        if let Some(target) = scenario.names.iter().position(|n| *n == l2) {
            let rate = got.iter().filter(|&&g| g == target).count() as f64 / got.len() as f64;
            params["flip_rate"] = json!(rate);
        }
    }
    ws.write_manifest(
        "arithmetic",
        cfg.seed,
        &[ws.path(MAPPING), ws.path(SYNTHESIS)],
        &outputs,
        params,
    )
}

pub struct InterpolateArgs {
    pub from: String,
    pub to: String,
    pub steps: usize,
    pub count: usize,
}

pub fn run_interpolate(cfg: &RunConfig, ws: &Workspace, a: &InterpolateArgs) -> CliResult<Manifest> {
    if a.steps < 2 {
        return Err(CliError::Usage("--steps must be >= 2".into()));
    }
    let scenario = ws.scenario()?;
    let (mapping, synthesis) = ws.models()?;
    let (l1, c1) = scenario.vector(&a.from)?;
    let (l2, c2) = scenario.vector(&a.to)?;
    let mut r = rng::stream(cfg.seed, "interpolate/z");
    let mut out = Matrix::zeros(0, mapping.w_dim());
    let mut rows = Vec::new();
    for i in 0..a.count {
        let z = LatentVector::z(rng::standard_normal_vec(&mut r, mapping.z_dim()));
        for s in 0..a.steps {
            let lambda = s as f64 / (a.steps - 1) as f64;
            let w = conditional_interpolate(&mapping, &z, &c1, &c2, lambda).stage("interpolate")?;
            out.push_row(w.as_slice()).stage("interpolate")?;
            rows.push(vec![format!("z{i:05}"), fmt(lambda)]);
        }
    }
    let images = images_of(&synthesis, &out)?;
    let mut outputs = latent_outputs(
        ws,
        "interpolate",
        &[("w", &out)],
        &images,
        json!({"from": l1, "to": l2}),
    )?;
    let p = ws.path("interpolate.csv");
    formats::write_csv(&p, &["sample_id", "lambda"], rows)?;
    outputs.push(p);
    ws.write_manifest(
        "interpolate",
        cfg.seed,
        &[ws.path(MAPPING), ws.path(SYNTHESIS)],
        &outputs,
        json!({"from": l1, "to": l2, "steps": a.steps, "count": a.count}),
    )
}

pub struct InvertArgs {
    pub target: Option<PathBuf>,
    pub row: usize,
    pub steps: Option<usize>,
    pub step_size: Option<f64>,
}

pub fn run_invert(cfg: &RunConfig, ws: &Workspace, a: &InvertArgs) -> CliResult<Manifest> {
    let (mapping, synthesis) = ws.models()?;
    let mut inputs = vec![ws.path(MAPPING), ws.path(SYNTHESIS)];
    let zero = vec![0.0; mapping.c_dim()];
    let mut r = rng::stream(cfg.seed, "invert/z");
    let draw_w = |r: &mut rng::StreamRng| -> CliResult<Vec<f64>> {
        let z = LatentVector::z(rng::standard_normal_vec(r, mapping.z_dim()));
        Ok(mapping.map_conditional(&z, &zero).stage("invert")?.into_vec())
    };
    let (target, w_star) = match &a.target {
        Some(p) => {
            inputs.push(p.clone());
            let imgs = formats::read_images(p)?;
            if a.row >= imgs.rows() {
                return Err(CliError::Usage(format!(
                    "--row {} out of range for {} target rows",
                    a.row,
                    imgs.rows()
                )));
            }
            (imgs.row(a.row).to_vec(), None)
        }
        None => {
            let w = draw_w(&mut r)?;
            (synthesis.synthesize_raw(&w).stage("invert")?, Some(w))
        }
    };
    let init = draw_w(&mut r)?;
    let icfg = InversionConfig {
        steps: a.steps.unwrap_or(cfg.inversion.steps),
        step_size: a.step_size.unwrap_or(cfg.inversion.step_size),
        ..InversionConfig::default()
    };
    let run = invert(&synthesis, &target, &LatentVector::w(init.clone()), &icfg).stage("invert")?;
    let n = mapping.w_dim();
    let w_hat = Matrix::from_vec(1, n, run.w.as_slice().to_vec()).stage("invert")?;
    let init_m = Matrix::from_vec(1, n, init).stage("invert")?;
    let mut blocks = vec![("w", &w_hat), ("init", &init_m)];
    let star_m;
    if let Some(w) = &w_star {
        star_m = Matrix::from_vec(1, n, w.clone()).stage("invert")?;
        blocks.push(("w_star", &star_m));
    }
    let recon = synthesis.synthesize_raw(run.w.as_slice()).stage("invert")?;
    let images = Matrix::from_rows(&[recon, target.clone()]).stage("invert")?;
    let mut outputs = latent_outputs(
        ws,
        "invert",
        &blocks,
        &images,
        json!({"rows": ["reconstruction", "target"]}),
    )?;
    let p = ws.path("invert-loss.csv");
    formats::write_csv(
        &p,
        &["step", "loss"],
        run.losses.iter().enumerate().map(|(i, l)| vec![i.to_string(), fmt(*l)]),
    )?;
    outputs.push(p);
    let tn: f64 = target.iter().map(|v| v * v).sum();
    let last = *run.losses.last().expect("trace has the initial loss");
    ws.write_manifest(
        "invert",
        cfg.seed,
        &inputs,
        &outputs,
        json!({
            "steps": icfg.steps,
            "step_size": icfg.step_size,
            "max_halvings": icfg.max_halvings,
            "growth": icfg.growth,
            "steps_taken": run.losses.len() - 1,
            "final_loss": last,
            "relative_loss": if tn > 0.0 { last / tn } else { last },
            "self_target": w_star.is_some(),
        }),
    )
}

pub struct WildcardArgs {
    pub condition: String,
    pub mask: Vec<String>,
    pub stochastic: bool,
    pub count: usize,
}

fn values_match(a: &ConditionValue, b: &ConditionValue) -> bool {
    match (a, b) {
        (ConditionValue::Label(x), ConditionValue::Label(y)) => x == y,
        (ConditionValue::Distribution(x), ConditionValue::Distribution(y)) => x == y,
        _ => false,
    }
}

pub fn run_wildcard_sample(cfg: &RunConfig, ws: &Workspace, a: &WildcardArgs) -> CliResult<Manifest> {
    if a.stochastic == !a.mask.is_empty() {
        return Err(CliError::Usage("give exactly one of --mask or --stochastic".into()));
    }
    let scenario = ws.scenario()?;
    let (mapping, synthesis) = ws.models()?;
    let (label, zeta) = scenario.resolve(&a.condition)?;
    let schema = &scenario.schema;
    let masked = if a.stochastic {
        let k = cfg.masking.k.unwrap_or_else(|| default_mask_k(schema.len()));
        stochastic_mask(
            &zeta,
            k,
            cfg.masking.p,
            &mut rng::stream(cfg.seed, "wildcard-sample/mask"),
        )
        .stage("stochastic mask")?
    } else {
        schema
            .apply_wildcard(&zeta, &a.mask)
            .map_err(|e| CliError::Usage(e.to_string()))?
    };
    let c = schema.assemble(&masked).stage("assemble")?;
    let zeroed: Vec<Value> = masked
        .wildcard_positions()
        .into_iter()
        .filter(|&i| !zeta.values()[i].is_wildcard())
        .map(|i| {
            let b = schema.block(i);
            json!({"name": schema.subconditions()[i].name, "start": b.start, "end": b.end})
        })
        .collect();
    let points = sample_w(&mapping, &c, a.count, &mut rng::stream(cfg.seed, "wildcard-sample/z"))?;
    let images = images_of(&synthesis, &points)?;
    let cm = Matrix::from_vec(1, c.len(), c.clone()).stage("assemble")?;
    let mut outputs = latent_outputs(
        ws,
        "wildcard-sample",
        &[("w", &points), ("condition", &cm)],
        &images,
        json!({"condition": label}),
    )?;
    let mut params = json!({
        "condition": label,
        "mask": a.mask,
        "stochastic": a.stochastic,
        "k": cfg.masking.k.unwrap_or_else(|| default_mask_k(schema.len())),
        "p": cfg.masking.p,
        "count": a.count,
        "zeroed_blocks": zeroed,
    });
    if let Some(clf) = ws.classifier(&scenario, cfg)? {
        // the sample should still carry every sub-condition that was kept
        let kept: Vec<usize> = (0..schema.len())
            .filter(|&i| {
                !masked.values()[i].is_wildcard() && schema.subconditions()[i].kind != SubConditionKind::TextEmbedding
            })
            .collect();
        let mut wc = WClassifier::new(&clf);
        let mut rows = Vec::new();
        let mut matches = 0;
        for (s, w) in points.row_iter().enumerate() {
            let got = wc.classify(w);
            let ok = kept
                .iter()
                .all(|&i| values_match(&masked.values()[i], &scenario.zetas[got].values()[i]));
            matches += ok as usize;
            rows.push(vec![
                format!("{label}-{s:05}"),
                scenario.names[got].clone(),
                ok.to_string(),
            ]);
        }
        let p = ws.path("wildcard-sample.csv");
        formats::write_csv(&p, &["sample_id", "classified_condition", "matches_unmasked"], rows)?;
        outputs.push(p);
        params["unmasked_match_rate"] = json!(matches as f64 / a.count as f64);
    }
    ws.write_manifest(
        "wildcard-sample",
        cfg.seed,
        &[ws.path(SCHEMA), ws.path(MAPPING), ws.path(SYNTHESIS)],
        &outputs,
        params,
    )
}

// ------------------------------------------------------------- evaluate

pub struct EvaluateArgs {
    pub fake_images: Option<PathBuf>,
    pub fake_metadata: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub real_embeddings: Option<PathBuf>,
    pub fake_embeddings: Option<PathBuf>,
}

fn rows_by_image(images: &Matrix, records: &[DatasetRecord], what: &str) -> CliResult<Matrix> {
    let mut out = Matrix::zeros(0, images.cols());
    for (i, r) in records.iter().enumerate() {
        let idx = r.image.unwrap_or(i);
        if idx >= images.rows() {
            return Err(CliError::Format(format!(
                "{what} record `{}` references image {idx} but only {} exist",
                r.id,
                images.rows()
            )));
        }
        out.push_row(images.row(idx)).stage("images")?;
    }
    Ok(out)
}

fn condition_matrix(schema: &ConditionSchema, records: &[DatasetRecord]) -> CliResult<(Matrix, Vec<MultiCondition>)> {
    let mut m = Matrix::zeros(0, schema.total_dim());
    let mut zetas = Vec::with_capacity(records.len());
    for r in records {
        let z = schema.resolve(&r.condition).stage("conditions")?;
        m.push_row(&schema.assemble(&z).stage("conditions")?)
            .stage("conditions")?;
        zetas.push(z);
    }
    Ok((m, zetas))
}

fn select_rows(m: &Matrix, keep: impl Fn(usize) -> bool) -> Matrix {
    let mut out = Matrix::zeros(0, m.cols());
    for (i, r) in m.row_iter().enumerate() {
        if keep(i) {
            out.push_row(r).expect("same width");
        }
    }
    out
}

fn read_b_matrix(path: &Path, schema: &ConditionSchema, n_qual: usize) -> CliResult<Vec<Vec<u8>>> {
    let (header, rows) = formats::read_csv(path)?;
    let d = schema.len();
    if header.len() != d || rows.len() != n_qual {
        return Err(CliError::Format(format!(
            "{}: label matrix is {}x{}, expected {n_qual}x{d} (n_qual samples x sub-conditions)",
            path.display(),
            rows.len(),
            header.len()
        )));
    }
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            r.iter()
                .map(|v| match v.trim() {
                    "0" => Ok(0u8),
                    "1" => Ok(1u8),
                    other => Err(CliError::Format(format!(
                        "{} row {}: `{other}` is not 0 or 1",
                        path.display(),
                        i + 1
                    ))),
                })
                .collect()
        })
        .collect()
}

pub fn evaluate(cfg: &RunConfig, ws: &Workspace, a: &EvaluateArgs) -> CliResult<(Manifest, MetricReport)> {
    if a.real_embeddings.is_some() != a.fake_embeddings.is_some() {
        return Err(CliError::Usage(
            "--real-embeddings and --fake-embeddings must be given together".into(),
        ));
    }
    let external = a.real_embeddings.is_some();
    if a.fake_images.is_some() && a.fake_metadata.is_none() {
        return Err(CliError::Usage("--fake-images needs --fake-metadata".into()));
    }
    if a.fake_metadata.is_some() && a.fake_images.is_none() && !external {
        return Err(CliError::Usage(
            "--fake-metadata needs --fake-images unless embeddings are supplied".into(),
        ));
    }
    if external && a.fake_metadata.is_none() {
        return Err(CliError::Usage(
            "external embeddings need --fake-metadata for the generated set".into(),
        ));
    }
    let mut required = vec![SCHEMA, METADATA];
    if !external {
        required.push(IMAGES);
    }
    if a.fake_metadata.is_none() {
        required.extend([MAPPING, SYNTHESIS]);
    }
    let mut missing: Vec<String> = required
        .iter()
        .filter(|n| !ws.path(n).exists())
        .map(|n| n.to_string())
        .collect();
    for p in [
        &a.fake_images,
        &a.fake_metadata,
        &a.labels,
        &a.real_embeddings,
        &a.fake_embeddings,
    ]
    .into_iter()
    .flatten()
    {
        if !p.exists() {
            missing.push(p.display().to_string());
        }
    }
    if !missing.is_empty() {
        return Err(CliError::Format(format!(
            "missing input file(s): {}",
            missing.join(", ")
        )));
    }

    let schema = ws.schema()?;
    let mut inputs = vec![ws.path(SCHEMA), ws.path(METADATA)];
    let raw_records = formats::read_jsonl(&ws.path(METADATA))?;
    let ingested = ingest_metadata(&raw_records, cfg.min_count, cfg.dims.text_embed).stage("ingest")?;
    let real_records = ingested.records;
    let frequencies: FrequencyTable = ingested.frequencies;
    let mut warnings = Vec::new();

    let (fake_records, fake_images) = match &a.fake_metadata {
        Some(mp) => {
            inputs.push(mp.clone());
            let recs = formats::read_jsonl(mp)?;
            let imgs = match &a.fake_images {
                Some(ip) if !external => {
                    inputs.push(ip.clone());
                    Some(rows_by_image(&formats::read_images(ip)?, &recs, "generated")?)
                }
                _ => None,
            };
            (recs, imgs)
        }
        None => {
            // one generated sample per real record, conditioned on that record
            let (mapping, synthesis) = ws.models()?;
            inputs.extend([ws.path(MAPPING), ws.path(SYNTHESIS)]);
            let mut r = rng::stream(cfg.seed, "evaluate/fake");
            let mut imgs = Matrix::zeros(0, synthesis.image_dim());
            let mut scratch = Scratch::default();
            let mut z = vec![0.0; mapping.z_dim()];
            for rec in &real_records {
                let zeta = schema.resolve(&rec.condition).stage("evaluate")?;
                let sc = mapping
                    .scale_condition(&schema.assemble(&zeta).stage("evaluate")?)
                    .stage("evaluate")?;
                rng::fill_standard_normal(&mut r, &mut z);
                let w = mapping.map_scaled(&z, &sc, &mut scratch);
                imgs.push_row(&synthesis.synthesize_raw(w).stage("evaluate")?)
                    .stage("evaluate")?;
            }
            let recs = real_records
                .iter()
                .enumerate()
                .map(|(i, rec)| DatasetRecord {
                    id: format!("gen-{i:05}"),
                    condition: rec.condition.clone(),
                    image: Some(i),
                })
                .collect();
            (recs, if external { None } else { Some(imgs) })
        }
    };
    let fake_records: Vec<DatasetRecord> = fake_records;

    let (real_emb, fake_emb, embedding) = if external {
        let rp = a.real_embeddings.as_ref().expect("checked");
        let fp = a.fake_embeddings.as_ref().expect("checked");
        inputs.extend([rp.clone(), fp.clone()]);
        let r = formats::read_embeddings_csv(rp)?;
        let f = formats::read_embeddings_csv(fp)?;
        if r.rows() != real_records.len() || f.rows() != fake_records.len() {
            return Err(CliError::Format(
                "embedding CSVs must have one row per metadata record".into(),
            ));
        }
        let e = EmbeddingFunction::external(r.cols());
        (e.embed(&r).stage("embedding")?, e.embed(&f).stage("embedding")?, e)
    } else {
        inputs.push(ws.path(IMAGES));
        let real_images = rows_by_image(&formats::read_images(&ws.path(IMAGES))?, &real_records, "real")?;
        let fake_images = fake_images.expect("images present without external embeddings");
        let e = EmbeddingFunction::random_projection(real_images.cols(), cfg.embed_dim, cfg.seed).stage("embedding")?;
        (
            e.embed(&real_images).stage("embedding")?,
            e.embed(&fake_images).stage("embedding")?,
            e,
        )
    };

    let f = fid(&real_emb, &fake_emb).stage("fid")?;
    warnings.extend(f.warnings.iter().map(|w| format!("fid: {w}")));
    let (real_cond, real_zetas) = condition_matrix(&schema, &real_records)?;
    let (fake_cond, fake_zetas) = condition_matrix(&schema, &fake_records)?;
    let real_joint = JointSet::new(real_emb.clone(), real_cond).stage("fjd")?;
    let fake_joint = JointSet::new(fake_emb.clone(), fake_cond).stage("fjd")?;
    let j = fjd(&real_joint, &fake_joint, cfg.fjd_alpha).stage("fjd")?;

    // intra-FID over the entries of every categorical sub-condition
    let mut conds = Vec::new();
    for (si, d) in schema.subconditions().iter().enumerate() {
        if d.kind != SubConditionKind::Categorical {
            continue;
        }
        let entries = d
            .vocab
            .iter()
            .enumerate()
            .map(|(li, label)| {
                let is = |z: &MultiCondition| matches!(z.values()[si], ConditionValue::Label(x) if x == li);
                EntrySamples {
                    label: label.clone(),
                    support: frequencies.support(&d.name, label).unwrap_or(0),
                    real: select_rows(&real_emb, |i| is(&real_zetas[i])),
                    fake: select_rows(&fake_emb, |i| is(&fake_zetas[i])),
                }
            })
            .collect();
        conds.push(ConditionEntries {
            name: d.name.clone(),
            entries,
        });
    }
    let ifid = intra_fid(&conds, cfg.ifid_fraction).stage("intra-fid")?;
    warnings.extend(ifid.warnings.iter().map(|w| format!("intra-fid: {w}")));

    let c_shape = schema.condition_shape();
    let nq = n_qual(&c_shape, cfg.n_max).stage("n_qual")?;
    let mut outputs = Vec::new();
    // the audit list: n_qual generated samples spread evenly over the set
    let p = ws.path("qual_samples.csv");
    let mut header = vec!["sample_id".to_string()];
    header.extend(schema.subconditions().iter().map(|d| d.name.clone()));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let picks: Vec<usize> = (0..nq.min(fake_records.len()))
        .map(|i| i * fake_records.len() / nq.min(fake_records.len()))
        .collect();
    formats::write_csv(
        &p,
        &header,
        picks.iter().map(|&i| {
            let mut row = vec![fake_records[i].id.clone()];
            row.extend(fake_zetas[i].values().iter().zip(schema.subconditions()).map(|(v, d)| {
                match v {
                    ConditionValue::Wildcard => "*".to_string(),
                    ConditionValue::Label(l) => d.vocab[*l].clone(),
                    ConditionValue::Distribution(p) => d
                        .vocab
                        .iter()
                        .zip(p)
                        .filter(|(_, w)| **w > 0.0)
                        .map(|(l, w)| format!("{l}:{w}"))
                        .collect::<Vec<_>>()
                        .join(" "),
                    ConditionValue::Tokens(t) => t.join(" "),
                }
            }));
            row
        }),
    )?;
    outputs.push(p);

    let eq = match &a.labels {
        Some(p) => {
            inputs.push(p.clone());
            Some(e_qual(&read_b_matrix(p, &schema, nq)?).stage("e_qual")?)
        }
        None => {
            warnings.push("e_qual omitted: no qualitative labels supplied (e_art needs them)".into());
            None
        }
    };
    let report = MetricReport {
        fid: f.value,
        fjd: FjdValue {
            alpha: cfg.fjd_alpha,
            value: j.value,
        },
        intra_fid: ifid,
        e_qual: eq,
        n_qual: nq,
        e_art: None,
        warnings,
        sample_counts: SampleCounts {
            real: real_emb.rows(),
            fake: fake_emb.rows(),
        },
    }
    .with_e_art()
    .stage("e_art")?;
    let p = ws.path("report.json");
    formats::write_json(&p, &report)?;
    outputs.push(p);
    let manifest = ws.write_manifest(
        "evaluate",
        cfg.seed,
        &inputs,
        &outputs,
        json!({
            "embedding": {"kind": embedding.kind(), "input_dim": embedding.input_dim(), "output_dim": embedding.output_dim(), "seed": embedding.seed()},
            "fjd_alpha": cfg.fjd_alpha,
            "ifid_fraction": cfg.ifid_fraction,
            "min_count": cfg.min_count,
            "n_max": cfg.n_max,
            "c_shape": c_shape,
            "generated": a.fake_metadata.is_none(),
        }),
    )?;
    Ok((manifest, report))
}
