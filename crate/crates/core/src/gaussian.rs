//! Per-condition multivariate Gaussians in a latent space: fitting, log-density,
//! maximum-likelihood classification and Fréchet distances.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_len, Error, Result};
use crate::linalg::{column_means, covariance, sqrt, squared_distance, Cholesky, Matrix, SymmetricEigen};
use crate::mapping::{leaky_relu, MappingModel, Scratch, Space, P_SLOPE};
use crate::rng;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Eigenvalues above `-CLIP_TOL` are treated as round-off and clipped to zero.
pub const CLIP_TOL: f64 = 1e-8;
/// Eigenvalues below `-CORRUPT_TOL` (scaled by the spectrum) are rejected.
pub const CORRUPT_TOL: f64 = 1e-6;

/// Diagonal regularisation added before factorising a covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum Ridge {
    /// Adds the value itself.
    Absolute(f64),
    /// Adds `value · tr(Σ) / n`.
    RelativeTrace(f64),
}

impl Ridge {
    /// Default used for classification.
    pub const CLASSIFY: Ridge = Ridge::RelativeTrace(1e-2);

    pub fn amount(self, sigma: &Matrix) -> f64 {
        match self {
            Ridge::Absolute(v) => v,
            Ridge::RelativeTrace(v) => v * sigma.trace() / sigma.rows().max(1) as f64,
        }
    }

    fn validate(self) -> Result<()> {
        let v = match self {
            Ridge::Absolute(v) | Ridge::RelativeTrace(v) => v,
        };
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ridge must be finite and >= 0, got {v}"
            )));
        }
        Ok(())
    }
}

impl Default for Ridge {
    fn default() -> Self {
        Ridge::CLASSIFY
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionGaussian {
    id: String,
    mu: Vec<f64>,
    sigma: Matrix,
    sample_count: usize,
    space: Space,
}

impl ConditionGaussian {
    /// Assembles a Gaussian from stored parameters; `sigma` is symmetrised.
    pub fn from_parts(
        id: impl Into<String>,
        mu: Vec<f64>,
        mut sigma: Matrix,
        sample_count: usize,
        space: Space,
    ) -> Result<Self> {
        check_len("covariance rows", mu.len(), sigma.rows())?;
        check_len("covariance cols", mu.len(), sigma.cols())?;
        check_finite("gaussian mean", &mu)?;
        check_finite("gaussian covariance", sigma.as_slice())?;
        sigma.symmetrize();
        Ok(Self {
            id: id.into(),
            mu,
            sigma,
            sample_count,
            space,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> &Matrix {
        &self.sigma
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Too few samples for a full-rank estimate, or a non-positive variance.
    pub fn is_degenerate(&self) -> bool {
        self.sample_count < self.dim() + 1 || (0..self.dim()).any(|i| self.sigma[(i, i)] <= 0.0)
    }

    pub fn log_pdf(&self, x: &[f64], ridge: Ridge) -> Result<f64> {
        check_len("log_pdf point", self.dim(), x.len())?;
        Ok(self.prepare(ridge)?.log_pdf(x, &mut Vec::new()))
    }

    /// Factorises `Σ + ridge·I` for repeated density evaluation.
    pub fn prepare(&self, ridge: Ridge) -> Result<PreparedGaussian> {
        ridge.validate()?;
        let mut s = self.sigma.clone();
        s.add_diagonal(ridge.amount(&self.sigma));
        let chol = Cholesky::new(&s).map_err(|e| match e {
            Error::Factorization(m) => Error::Factorization(format!("condition `{}`: {m}", self.id)),
            other => other,
        })?;
        let log_norm = -0.5 * (self.dim() as f64 * LN_2PI + chol.log_det());
        Ok(PreparedGaussian {
            mu: self.mu.clone(),
            chol,
            log_norm,
        })
    }
}

pub fn fit_gaussian(id: impl Into<String>, x: &Matrix, space: Space) -> Result<ConditionGaussian> {
    if x.rows() < 2 {
        return Err(Error::InvalidParameter(format!(
            "fitting a gaussian needs at least 2 samples, got {}",
            x.rows()
        )));
    }
    check_finite("sample matrix", x.as_slice())?;
    let mu = column_means(x);
    let sigma = covariance(x, &mu);
    Ok(ConditionGaussian {
        id: id.into(),
        mu,
        sigma,
        sample_count: x.rows(),
        space,
    })
}

/// A Gaussian with a cached Cholesky factor of its regularised covariance.
#[derive(Debug, Clone)]
pub struct PreparedGaussian {
    mu: Vec<f64>,
    chol: Cholesky,
    log_norm: f64,
}

impl PreparedGaussian {
    /// Shapes are not checked here.
    pub fn log_pdf(&self, x: &[f64], scratch: &mut Vec<f64>) -> f64 {
        scratch.clear();
        scratch.extend(x.iter().zip(&self.mu).map(|(a, b)| a - b));
        self.chol.forward_solve(scratch);
        self.log_norm - 0.5 * scratch.iter().map(|v| v * v).sum::<f64>()
    }
}

/// Maximum-likelihood classifier over a fixed list of condition Gaussians.
/// Ties go to the lowest index.
#[derive(Debug, Clone)]
pub struct Classifier {
    ids: Vec<String>,
    dim: usize,
    prepared: Vec<PreparedGaussian>,
}

impl Classifier {
    pub fn new(gaussians: &[ConditionGaussian], ridge: Ridge) -> Result<Self> {
        let first = gaussians.first().ok_or(Error::Empty("gaussian list"))?;
        let dim = first.dim();
        let mut prepared = Vec::with_capacity(gaussians.len());
        for g in gaussians {
            check_len("gaussian dimension", dim, g.dim())?;
            if g.is_degenerate() {
                return Err(Error::Degenerate(format!(
                    "condition `{}` has {} samples in {} dimensions or a zero variance",
                    g.id,
                    g.sample_count,
                    g.dim()
                )));
            }
            prepared.push(g.prepare(ridge)?);
        }
        Ok(Self {
            ids: gaussians.iter().map(|g| g.id.clone()).collect(),
            dim,
            prepared,
        })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.prepared.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prepared.is_empty()
    }

    pub fn classify(&self, x: &[f64]) -> Result<usize> {
        check_len("classified point", self.dim, x.len())?;
        check_finite("classified point", x)?;
        Ok(self.classify_unchecked(x, &mut Vec::new()))
    }

    pub fn classify_unchecked(&self, x: &[f64], scratch: &mut Vec<f64>) -> usize {
        let mut best = 0;
        let mut best_lp = f64::NEG_INFINITY;
        for (i, g) in self.prepared.iter().enumerate() {
            let lp = g.log_pdf(x, scratch);
            if lp > best_lp {
                best = i;
                best_lp = lp;
            }
        }
        best
    }

    /// Index of the predicted condition for each row.
    pub fn classify_rows(&self, x: &Matrix) -> Result<Vec<usize>> {
        check_len("classified points", self.dim, x.cols())?;
        check_finite("classified points", x.as_slice())?;
        let mut scratch = Vec::with_capacity(self.dim);
        Ok(x.row_iter().map(|r| self.classify_unchecked(r, &mut scratch)).collect())
    }
}

pub fn classify(x: &[f64], gaussians: &[ConditionGaussian], ridge: Ridge) -> Result<usize> {
    Classifier::new(gaussians, ridge)?.classify(x)
}

fn clip_spectrum(values: &mut [f64]) -> Result<()> {
    let scale = values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    for v in values.iter_mut() {
        if *v < -CORRUPT_TOL * scale {
            return Err(Error::CorruptCovariance(*v));
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(())
}

/// `‖μ₁−μ₂‖² + tr Σ₁ + tr Σ₂ − 2 tr (Σ₁^{½} Σ₂ Σ₁^{½})^{½}`, floored at zero, then
/// square-rooted. The trace term uses symmetric eigendecompositions only.
pub fn frechet_distance(g1: &ConditionGaussian, g2: &ConditionGaussian) -> Result<f64> {
    check_len("frechet distance dimension", g1.dim(), g2.dim())?;
    if g1.mu == g2.mu && g1.sigma == g2.sigma {
        return Ok(0.0);
    }
    let mut e1 = SymmetricEigen::new(&g1.sigma)?;
    clip_spectrum(&mut e1.values)?;
    let root1 = e1.reconstruct_with(sqrt);
    let mut inner = root1.matmul(&g2.sigma)?.matmul(&root1)?;
    inner.symmetrize();
    let mut e = SymmetricEigen::new(&inner)?;
    clip_spectrum(&mut e.values)?;
    let cross: f64 = e.values.iter().map(|&l| sqrt(l)).sum();
    let fd2 = squared_distance(&g1.mu, &g2.mu) + g1.sigma.trace() + g2.sigma.trace() - 2.0 * cross;
    if !fd2.is_finite() {
        return Err(Error::NonFinite("frechet distance"));
    }
    Ok(sqrt(fd2.max(0.0)))
}

/// Pairwise Fréchet distances plus each condition's nearest other condition.
#[derive(Debug, Clone, PartialEq)]
pub struct FdMatrix {
    pub ids: Vec<String>,
    pub values: Matrix,
    pub nearest: Vec<usize>,
}

impl FdMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    /// Distance from condition `i` to its nearest neighbour.
    pub fn nearest_distance(&self, i: usize) -> f64 {
        self.values[(i, self.nearest[i])]
    }
}

pub fn fd_matrix(gaussians: &[ConditionGaussian]) -> Result<FdMatrix> {
    let n = gaussians.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "fd matrix needs at least 2 gaussians, got {n}"
        )));
    }
    let mut values = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = frechet_distance(&gaussians[i], &gaussians[j])?;
            values[(i, j)] = d;
            values[(j, i)] = d;
        }
    }
    let nearest = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .fold(None, |best: Option<usize>, j| match best {
                    Some(b) if values[(i, b)] <= values[(i, j)] => Some(b),
                    _ => Some(j),
                })
                .expect("n >= 2")
        })
        .collect();
    Ok(FdMatrix {
        ids: gaussians.iter().map(|g| g.id.clone()).collect(),
        values,
        nearest,
    })
}

/// Rows are `f_c(z_i, c)` (space W) or their P transform (space P) for
/// i.i.d. standard-normal `z_i` drawn from `rng`.
pub fn sample_condition_points<R: Rng + ?Sized>(
    mapping: &MappingModel,
    c: &[f64],
    count: usize,
    space: Space,
    rng: &mut R,
) -> Result<Matrix> {
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    if space == Space::Z {
        return Err(Error::InvalidParameter("condition points live in W or P".into()));
    }
    let sc = mapping.scale_condition(c)?;
    let n = mapping.w_dim();
    let mut out = Vec::with_capacity(count * n);
    let mut z = vec![0.0; mapping.z_dim()];
    let mut scratch = Scratch::default();
    for _ in 0..count {
        rng::fill_standard_normal(rng, &mut z);
        let w = mapping.map_scaled(&z, &sc, &mut scratch);
        match space {
            Space::P => out.extend(w.iter().map(|&v| leaky_relu(v, P_SLOPE))),
            _ => out.extend_from_slice(w),
        }
    }
    Matrix::from_vec(count, n, out)
}
