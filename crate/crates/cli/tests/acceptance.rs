//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
//! when any criterion fails. Run with `cargo test -p clat --test acceptance`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use clat::config::RunConfig;
use clat_core::gaussian::{
    fd_matrix, fit_gaussian, frechet_distance, sample_condition_points, Classifier, ConditionGaussian,
};
use clat_core::latent_ops::{
    apply_transformation, center_of_mass, invert, transformation_vector, truncate, InversionConfig,
};
use clat_core::linalg::Matrix;
use clat_core::mapping::{
    init_models, leaky_relu, LatentVector, MappingModel, ModelConfig, Space, SynthesisModel, LEAKY_SLOPE, P_SLOPE,
};
use clat_core::metrics::{e_art, fid, fjd, n_qual, EmbeddingFunction, JointSet, DEFAULT_N_MAX};
use clat_core::rng::{self, StreamRng};
use clat_core::synthetic::{bundled_scenario, SyntheticDatasetSpec};
use nalgebra::DMatrix;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(t: Instant, limit: Duration) -> Result<Duration, String> {
    let e = t.elapsed();
    ensure(e < limit, format!("took {e:.1?}, limit {limit:?}"))?;
    Ok(e)
}

struct Scenario {
    cfg: RunConfig,
    spec: SyntheticDatasetSpec,
    names: Vec<String>,
    conds: Vec<Vec<f64>>,
    mapping: MappingModel,
    synthesis: SynthesisModel,
}

impl Scenario {
    fn new() -> Self {
        let cfg = RunConfig::default();
        let spec = bundled_scenario(cfg.seed, cfg.samples.dataset, cfg.dims.image, cfg.dims.text_embed).unwrap();
        let names: Vec<String> = spec.conditions.iter().map(|c| c.name.clone()).collect();
        let conds = names.iter().map(|n| spec.analysis_vector(n).unwrap()).collect();
        let (mapping, synthesis) = init_models(&cfg.model_config(spec.schema.total_dim())).unwrap();
        Self {
            cfg,
            spec,
            names,
            conds,
            mapping,
            synthesis,
        }
    }

    fn gaussians(&self) -> Vec<ConditionGaussian> {
        self.names
            .iter()
            .zip(&self.conds)
            .map(|(n, c)| {
                let mut r = rng::stream(self.cfg.seed, &format!("fit/{n}"));
                let x = sample_condition_points(&self.mapping, c, self.cfg.samples.fit, Space::P, &mut r).unwrap();
                fit_gaussian(n.as_str(), &x, Space::P).unwrap()
            })
            .collect()
    }

    fn classifier(&self) -> Classifier {
        Classifier::new(&self.gaussians(), self.cfg.classify_ridge).unwrap()
    }
}

fn classify_w(clf: &Classifier, w: &[f64], p: &mut Vec<f64>, scratch: &mut Vec<f64>) -> usize {
    p.clear();
    p.extend(w.iter().map(|&v| leaky_relu(v, P_SLOPE)));
    clf.classify_unchecked(p, scratch)
}

fn e_art_table() -> Outcome {
    let t = Instant::now();
    let cases = [
        ((5.46, 9.42, 0.91), 8.11),
        ((9.31, 9.29, 0.88), 10.42),
        ((8.10, 8.47, 0.83), 9.69),
    ];
    let mut worst: f64 = 0.0;
    for ((i, f, q), want) in cases {
        let got = e_art(i, f, q).map_err(|e| e.to_string())?;
        worst = worst.max((got - want).abs());
        ensure(
            (got - want).abs() <= 0.005,
            format!("e_art({i}, {f}, {q}) = {got}, want {want}"),
        )?;
    }
    let e = within(t, Duration::from_secs(1))?;
    Ok(format!("max |err| {worst:.4}, {e:.1?}"))
}

fn n_qual_table() -> Outcome {
    let t = Instant::now();
    let a = n_qual(&[9, 30, 31], DEFAULT_N_MAX).map_err(|e| e.to_string())?;
    let b = n_qual(&[2], DEFAULT_N_MAX).map_err(|e| e.to_string())?;
    ensure(a == 100, format!("n_qual([9,30,31]) = {a}"))?;
    ensure(b == 11, format!("n_qual([2]) = {b}"))?;
    let e = within(t, Duration::from_secs(1))?;
    Ok(format!("100 and 11, {e:.1?}"))
}

fn p_round_trip() -> Outcome {
    let mut r = rng::stream(3, "acceptance/p");
    let mut worst: f64 = 0.0;
    for i in 0..1_000_000 {
        // a spread of magnitudes, both signs
        let x = rng::standard_normal(&mut r) * [1e-3, 1.0, 1e3][i % 3];
        let back = leaky_relu(leaky_relu(x, P_SLOPE), LEAKY_SLOPE);
        worst = worst.max((back - x).abs());
    }
    ensure(worst < 1e-12, format!("max error {worst:e}"))?;
    Ok(format!("max error {worst:e} over 10^6 values"))
}

fn random_spd(r: &mut StreamRng, n: usize) -> Matrix {
    let b = rng::standard_normal_vec(r, n * n);
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = (0..n).map(|k| b[i * n + k] * b[j * n + k]).sum::<f64>() + if i == j { 0.1 } else { 0.0 };
        }
    }
    m
}

/// `|μ1 − μ2|² + tr(Σ1 + Σ2) − 2 Σ √λ(Σ1 Σ2)` with a general eigen-solver.
fn naive_fd(m1: &[f64], s1: &Matrix, m2: &[f64], s2: &Matrix) -> f64 {
    let n = m1.len();
    let a = DMatrix::from_row_slice(n, n, s1.as_slice());
    let b = DMatrix::from_row_slice(n, n, s2.as_slice());
    let root: f64 = (&a * &b)
        .complex_eigenvalues()
        .iter()
        .map(|l| l.re.max(0.0).sqrt())
        .sum();
    let d: f64 = m1.iter().zip(m2).map(|(x, y)| (x - y) * (x - y)).sum();
    (d + a.trace() + b.trace() - 2.0 * root).max(0.0).sqrt()
}

fn fd_oracle() -> Outcome {
    let mut r = rng::stream(4, "acceptance/fd");
    let mut worst: f64 = 0.0;
    let mut self_worst: f64 = 0.0;
    for k in 0..100 {
        let (m1, m2) = (rng::standard_normal_vec(&mut r, 3), rng::standard_normal_vec(&mut r, 3));
        let (s1, s2) = (random_spd(&mut r, 3), random_spd(&mut r, 3));
        let g1 = ConditionGaussian::from_parts("a", m1.clone(), s1.clone(), 10, Space::P).unwrap();
        let g2 = ConditionGaussian::from_parts("b", m2.clone(), s2.clone(), 10, Space::P).unwrap();
        let got = frechet_distance(&g1, &g2).map_err(|e| e.to_string())?;
        let want = naive_fd(&m1, &s1, &m2, &s2);
        worst = worst.max((got - want).abs());
        ensure((got - want).abs() < 1e-6, format!("pair {k}: {got} vs oracle {want}"))?;
        let copy = ConditionGaussian::from_parts("c", m1.clone(), s1.clone(), 10, Space::P).unwrap();
        let same = frechet_distance(&g1, &copy).map_err(|e| e.to_string())?;
        self_worst = self_worst.max(same);
        ensure(same < 1e-9, format!("pair {k}: FD(g, g) = {same:e}"))?;
    }
    let one = |m: f64, v: f64| {
        ConditionGaussian::from_parts("x", vec![m], Matrix::from_vec(1, 1, vec![v]).unwrap(), 10, Space::P).unwrap()
    };
    let closed = frechet_distance(&one(0.0, 1.0), &one(3.0, 4.0)).map_err(|e| e.to_string())?;
    ensure(
        (closed - 10f64.sqrt()).abs() < 1e-12,
        format!("1-D case {closed}, want sqrt(10)"),
    )?;
    Ok(format!(
        "max |FD - oracle| {worst:e}, max FD(g,g) {self_worst:e}, 1-D exact"
    ))
}

fn classification(s: &Scenario) -> Outcome {
    let t = Instant::now();
    let clf = s.classifier();
    let mut scratch = Vec::new();
    let mut worst = 1.0f64;
    for (i, (n, c)) in s.names.iter().zip(&s.conds).enumerate() {
        let mut r = rng::stream(s.cfg.seed, &format!("classify/{n}"));
        let mut correct = 0usize;
        let mut left = s.cfg.samples.classify;
        while left > 0 {
            let k = left.min(10_000);
            let x = sample_condition_points(&s.mapping, c, k, Space::P, &mut r).unwrap();
            correct += x
                .row_iter()
                .filter(|row| clf.classify_unchecked(row, &mut scratch) == i)
                .count();
            left -= k;
        }
        worst = worst.min(correct as f64 / s.cfg.samples.classify as f64);
    }
    let e = t.elapsed();
    ensure(worst == 1.0, format!("lowest per-condition accuracy {worst}"))?;
    within(t, Duration::from_secs(120))?;
    Ok(format!(
        "fit {} / classify {} per condition, accuracy 100%, {e:.1?}",
        s.cfg.samples.fit, s.cfg.samples.classify
    ))
}

fn retention(s: &Scenario) -> Outcome {
    let t = Instant::now();
    let clf = s.classifier();
    let seed = rng::derive_seed(s.cfg.seed, "center");
    let global = center_of_mass(&s.mapping, None, s.cfg.samples.center, seed).unwrap();
    let (mut p, mut scratch) = (Vec::new(), Vec::new());
    let psis = &s.cfg.psi_sweep;
    let mut cond_hits = vec![0usize; psis.len()];
    let mut global_hits = vec![0usize; psis.len()];
    for (i, (n, c)) in s.names.iter().zip(&s.conds).enumerate() {
        let center = center_of_mass(&s.mapping, Some(c), s.cfg.samples.center, seed).unwrap();
        let mut r = rng::stream(s.cfg.seed, &format!("sweep/{n}"));
        let ws = sample_condition_points(&s.mapping, c, s.cfg.samples.sweep, Space::W, &mut r).unwrap();
        for w in ws.row_iter() {
            let w = LatentVector::w(w.to_vec());
            for (k, &psi) in psis.iter().enumerate() {
                let a = truncate(&w, &center, psi).unwrap();
                cond_hits[k] += (classify_w(&clf, a.as_slice(), &mut p, &mut scratch) == i) as usize;
                let b = truncate(&w, &global, psi).unwrap();
                global_hits[k] += (classify_w(&clf, b.as_slice(), &mut p, &mut scratch) == i) as usize;
            }
        }
    }
    let total = (s.names.len() * s.cfg.samples.sweep) as f64;
    let e = t.elapsed();
    for (k, &psi) in psis.iter().enumerate() {
        ensure(
            cond_hits[k] as f64 == total,
            format!("conditional accuracy {} at psi {psi}", cond_hits[k] as f64 / total),
        )?;
    }
    let zero = psis.iter().position(|&p| p == 0.0).ok_or("psi sweep lacks 0")?;
    let g0 = global_hits[zero] as f64 / total;
    ensure(g0 < 0.6, format!("global accuracy at psi 0 is {g0}"))?;
    within(t, Duration::from_secs(120))?;
    Ok(format!(
        "conditional 100% at psi {psis:?}, global at psi 0 = {:.1}%, {e:.1?}",
        100.0 * g0
    ))
}

fn transformation(s: &Scenario) -> Outcome {
    let clf = s.classifier();
    let seed = rng::derive_seed(s.cfg.seed, "center");
    let n = s.cfg.samples.center;
    let centers: Vec<Vec<f64>> = s
        .conds
        .iter()
        .map(|c| center_of_mass(&s.mapping, Some(c), n, seed).unwrap().w_bar)
        .collect();
    let (mut p, mut scratch) = (Vec::new(), Vec::new());
    let mut worst_identity: f64 = 0.0;
    let mut worst_flip = 1.0f64;
    for i in 0..s.conds.len() {
        let mut r = rng::stream(s.cfg.seed, &format!("sweep/{}", s.names[i]));
        let ws = sample_condition_points(&s.mapping, &s.conds[i], s.cfg.samples.sweep, Space::W, &mut r).unwrap();
        for j in 0..s.conds.len() {
            if i == j {
                continue;
            }
            let t = transformation_vector(&s.mapping, &s.conds[i], &s.conds[j], n, seed).unwrap();
            let back = transformation_vector(&s.mapping, &s.conds[j], &s.conds[i], n, seed).unwrap();
            ensure(
                t.t.iter().zip(&back.t).all(|(a, b)| *a == -*b),
                format!("{i}->{j} not exactly antisymmetric"),
            )?;
            for ((x, a), b) in t.t.iter().zip(&centers[j]).zip(&centers[i]) {
                worst_identity = worst_identity.max((x - (a - b)).abs());
            }
            let flipped = ws
                .row_iter()
                .filter(|w| {
                    let moved = apply_transformation(&LatentVector::w(w.to_vec()), &t).unwrap();
                    classify_w(&clf, moved.as_slice(), &mut p, &mut scratch) == j
                })
                .count();
            worst_flip = worst_flip.min(flipped as f64 / ws.rows() as f64);
        }
    }
    ensure(worst_identity <= 1e-12, format!("|t - (w2 - w1)| = {worst_identity:e}"))?;
    ensure(worst_flip >= 0.9, format!("lowest flip rate {worst_flip}"))?;
    Ok(format!(
        "identity err {worst_identity:e}, antisymmetric, lowest flip rate {:.1}% over 20 pairs",
        100.0 * worst_flip
    ))
}

fn gaussian_rows(r: &mut StreamRng, n: usize, d: usize, shift: f64) -> Matrix {
    let mut m = Matrix::from_vec(n, d, rng::standard_normal_vec(r, n * d)).unwrap();
    for (k, v) in m.as_mut_slice().iter_mut().enumerate() {
        *v = *v * (1.0 + (k % d) as f64 * 0.1) + shift;
    }
    m
}

fn one_hot_rows(n: usize, k: usize, offset: usize) -> Matrix {
    let mut m = Matrix::zeros(n, k);
    for i in 0..n {
        m[(i, (i + offset) % k)] = 1.0;
    }
    m
}

fn fjd_reduces_to_fid(s: &Scenario) -> Outcome {
    let mut r = rng::stream(8, "acceptance/fjd");
    let mut sets: Vec<(String, JointSet, JointSet)> = Vec::new();
    for (d, n, shift) in [(4, 300, 0.5), (16, 1000, 0.0), (32, 2000, 2.0)] {
        sets.push((
            format!("gaussian d={d}"),
            JointSet::new(gaussian_rows(&mut r, n, d, 0.0), one_hot_rows(n, 5, 0)).unwrap(),
            JointSet::new(gaussian_rows(&mut r, n, d, shift), one_hot_rows(n, 5, 2)).unwrap(),
        ));
    }
    // bundled images against generator samples, with assembled record conditions
    let data = s.spec.generate().unwrap();
    let emb = EmbeddingFunction::random_projection(s.cfg.dims.image, s.cfg.embed_dim, s.cfg.seed).unwrap();
    let mut real_c = Matrix::zeros(0, s.spec.schema.total_dim());
    let mut fake = Matrix::zeros(0, s.cfg.dims.image);
    let mut g = rng::stream(s.cfg.seed, "evaluate/fake");
    for rec in &data.records {
        let c = s
            .spec
            .schema
            .assemble(&s.spec.schema.resolve(&rec.condition).unwrap())
            .unwrap();
        let w = sample_condition_points(&s.mapping, &c, 1, Space::W, &mut g).unwrap();
        fake.push_row(&s.synthesis.synthesize_raw(w.row(0)).unwrap()).unwrap();
        real_c.push_row(&c).unwrap();
    }
    sets.push((
        "bundled".into(),
        JointSet::new(emb.embed(&data.images).unwrap(), real_c.clone()).unwrap(),
        JointSet::new(emb.embed(&fake).unwrap(), real_c).unwrap(),
    ));
    let mut worst: f64 = 0.0;
    for (name, real, fake) in &sets {
        let f = fid(&real.images, &fake.images).map_err(|e| e.to_string())?.value;
        let j = fjd(real, fake, 0.0).map_err(|e| e.to_string())?.value;
        worst = worst.max((f - j).abs());
        ensure((f - j).abs() < 1e-9, format!("{name}: FID {f} vs FJD(0) {j}"))?;
        let same = fjd(real, real, 0.5).map_err(|e| e.to_string())?.value;
        ensure(same == 0.0, format!("{name}: FJD of identical sets {same}"))?;
    }
    Ok(format!(
        "{} datasets, max |FID - FJD(0)| {worst:e}, identical sets 0",
        sets.len()
    ))
}

fn fid_convergence(s: &Scenario) -> Outcome {
    let sizes = [500usize, 2500, 12_500, 50_000];
    let total = 2 * sizes[sizes.len() - 1];
    let emb = EmbeddingFunction::random_projection(s.cfg.dims.image, s.cfg.embed_dim, s.cfg.seed).unwrap();
    let mut r = rng::stream(9, "acceptance/convergence");
    let ws = sample_condition_points(&s.mapping, &s.conds[0], total, Space::W, &mut r).unwrap();
    let mut images = Matrix::zeros(0, s.cfg.dims.image);
    for w in ws.row_iter() {
        images.push_row(&s.synthesis.synthesize_raw(w).unwrap()).unwrap();
    }
    let e = emb.embed(&images).unwrap();
    let d = e.cols();
    let mut scores = Vec::new();
    for &n in &sizes {
        let a = Matrix::from_vec(n, d, e.as_slice()[..n * d].to_vec()).unwrap();
        let b = Matrix::from_vec(n, d, e.as_slice()[n * d..2 * n * d].to_vec()).unwrap();
        scores.push(fid(&a, &b).map_err(|e| e.to_string())?.value);
    }
    for k in 1..scores.len() {
        ensure(
            scores[k] <= 1.1 * scores[k - 1],
            format!("FID rose from {} to {} at n = {}", scores[k - 1], scores[k], sizes[k]),
        )?;
    }
    let shown: Vec<String> = sizes.iter().zip(&scores).map(|(n, v)| format!("{n}:{v:.4}")).collect();
    Ok(format!("FID by per-half size {}", shown.join(" ")))
}

/// Hidden pre-activation signs, the pattern that fixes which linear piece `g` is on.
fn kink_pattern(synth: &SynthesisModel, w: &[f64]) -> Vec<bool> {
    let layers = synth.layers();
    let mut x = w.to_vec();
    let mut signs = Vec::new();
    for l in &layers[..layers.len() - 1] {
        let pre: Vec<f64> = l
            .weight()
            .matvec(&x)
            .unwrap()
            .iter()
            .zip(l.bias())
            .map(|(a, b)| a + b)
            .collect();
        signs.extend(pre.iter().map(|&v| v >= 0.0));
        x = pre.iter().map(|&v| leaky_relu(v, LEAKY_SLOPE)).collect();
    }
    signs
}

/// True when some central-difference stencil crosses a kink, where no derivative exists.
fn stencil_straddles_kink(synth: &SynthesisModel, w: &[f64], h: f64) -> bool {
    let mut x = w.to_vec();
    (0..w.len()).any(|i| {
        x[i] = w[i] + h;
        let a = kink_pattern(synth, &x);
        x[i] = w[i] - h;
        let b = kink_pattern(synth, &x);
        x[i] = w[i];
        a != b
    })
}

fn gradient_check() -> Outcome {
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut redrawn = 0;
    for k in 0..100u64 {
        let cfg = ModelConfig {
            seed: 1000 + k,
            ..ModelConfig::default()
        };
        let (_, synth) = init_models(&cfg).unwrap();
        let mut r = rng::stream(k, "acceptance/grad");
        let mut w = rng::standard_normal_vec(&mut r, cfg.w_dim);
        while stencil_straddles_kink(&synth, &w, h) {
            redrawn += 1;
            w = rng::standard_normal_vec(&mut r, cfg.w_dim);
        }
        let up = rng::standard_normal_vec(&mut r, cfg.image_dim);
        let grad = synth.synthesize_grad_raw(&w, &up).unwrap();
        let f = |x: &[f64]| -> f64 {
            synth
                .synthesize_raw(x)
                .unwrap()
                .iter()
                .zip(&up)
                .map(|(a, b)| a * b)
                .sum()
        };
        let mut x = w.clone();
        for i in 0..w.len() {
            x[i] = w[i] + h;
            let fp = f(&x);
            x[i] = w[i] - h;
            let fm = f(&x);
            x[i] = w[i];
            let num = (fp - fm) / (2.0 * h);
            let rel = (grad[i] - num).abs() / num.abs().max(1.0);
            worst = worst.max(rel);
        }
    }
    ensure(worst < 1e-4, format!("max relative error {worst:e}"))?;

    let mut rel_losses = Vec::new();
    for seed in 0..3u64 {
        let cfg = ModelConfig {
            seed,
            ..ModelConfig::default()
        };
        let (_, synth) = init_models(&cfg).unwrap();
        let mut r = rng::stream(seed, "acceptance/invert");
        let w_star = rng::standard_normal_vec(&mut r, cfg.w_dim);
        let target = synth.synthesize_raw(&w_star).unwrap();
        let init = LatentVector::w(rng::standard_normal_vec(&mut r, cfg.w_dim));
        let icfg = InversionConfig::default();
        let run = invert(&synth, &target, &init, &icfg).map_err(|e| e.to_string())?;
        let norm: f64 = target.iter().map(|v| v * v).sum();
        let last = *run.losses.last().unwrap();
        ensure(run.losses.len() <= icfg.steps + 1, "inversion ran past its step budget")?;
        ensure(
            last < 1e-6 * norm,
            format!("seed {seed}: loss {last:e} vs 1e-6 * |target|^2 = {:e}", 1e-6 * norm),
        )?;
        rel_losses.push(last / norm);
    }
    let shown: Vec<String> = rel_losses.iter().map(|v| format!("{v:.1e}")).collect();
    Ok(format!(
        "100 triples max rel err {worst:e} ({redrawn} w redrawn off a kink); inversion relative loss {}",
        shown.join(" ")
    ))
}

fn fd_clustering(s: &Scenario) -> Outcome {
    let m = fd_matrix(&s.gaussians()).map_err(|e| e.to_string())?;
    let want = [1usize, 0, 3, 2];
    ensure(m.nearest[..4] == want, format!("nearest neighbours {:?}", m.nearest))?;
    let partnered = m.get(0, 1).max(m.get(2, 3));
    let e = m.nearest_distance(4);
    ensure(e > partnered, format!("E nearest {e} <= partnered {partnered}"))?;
    Ok(format!(
        "A<->B {:.3}, C<->D {:.3}, E nearest {e:.3}",
        m.get(0, 1),
        m.get(2, 3)
    ))
}

const PIPELINE: &[&[&str]] = &[
    &["gen-dataset"],
    &["fit"],
    &["analyze"],
    &["truncate", "--psi", "0.5", "--condition", "A"],
    &["arithmetic", "--from", "A", "--to", "C"],
    &["interpolate", "--from", "B", "--to", "E"],
    &["invert"],
    &["wildcard-sample", "--condition", "C", "--mask", "style"],
    &["wildcard-sample", "--condition", "D", "--stochastic"],
    &["evaluate"],
];

fn files(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let roots = [tmp.path().join("run1"), tmp.path().join("run2")];
    for root in &roots {
        for args in PIPELINE {
            let o = Command::new(env!("CARGO_BIN_EXE_clat"))
                .args(*args)
                .args(["--seed", "7", "--out"])
                .arg(root)
                .output()
                .map_err(|e| e.to_string())?;
            ensure(
                o.status.success(),
                format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)),
            )?;
        }
    }
    let (a, b) = (files(&roots[0]), files(&roots[1]));
    ensure(a == b, "the two runs wrote different file sets")?;
    for f in &a {
        let same = fs::read(roots[0].join(f)).unwrap() == fs::read(roots[1].join(f)).unwrap();
        ensure(same, format!("{} differs", f.display()))?;
    }
    Ok(format!(
        "{} files byte-identical across 2 runs of {} commands",
        a.len(),
        PIPELINE.len()
    ))
}

fn main() {
    // keeps `cargo test -- --list` and filters from running the whole suite
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let s = Scenario::new();
    let criteria: Vec<Criterion> = vec![
        ("e_art table values", Box::new(e_art_table)),
        ("n_qual table values", Box::new(n_qual_table)),
        ("P-space round trip", Box::new(p_round_trip)),
        ("FD oracle equivalence", Box::new(fd_oracle)),
        ("held-out classification", Box::new(|| classification(&s))),
        ("condition retention under truncation", Box::new(|| retention(&s))),
        ("transformation vectors", Box::new(|| transformation(&s))),
        ("FJD(0) equals FID", Box::new(|| fjd_reduces_to_fid(&s))),
        ("FID self-convergence", Box::new(|| fid_convergence(&s))),
        ("gradient check and inversion", Box::new(gradient_check)),
        ("designed FD clustering", Box::new(|| fd_clustering(&s))),
        ("pipeline determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome =
            std::panic::catch_unwind(std::panic::AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{:.1?}]", i + 1, t.elapsed()),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{:.1?}]", i + 1, t.elapsed());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
