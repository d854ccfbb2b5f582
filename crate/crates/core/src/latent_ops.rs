//! Centers of mass, truncation, condition transformation vectors, conditional
//! interpolation and latent inversion by gradient descent.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_finite, check_len, Error, Result};
use crate::linalg::axpy;
use crate::mapping::{LatentVector, MappingModel, Scratch, Space, SynthesisModel};
use crate::rng;

pub const DEFAULT_CENTER_SAMPLES: usize = 100_000;

/// Monte-Carlo mean of `f_c(z, c)`. `condition == None` is the global center,
/// evaluated at the all-wildcard (zero) condition.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterOfMass {
    pub w_bar: Vec<f64>,
    pub condition: Option<Vec<f64>>,
    pub sample_count: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformationVector {
    pub t: Vec<f64>,
    pub source: Vec<f64>,
    pub target: Vec<f64>,
    pub sample_count: usize,
    pub seed: u64,
}

fn check_samples(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    Ok(())
}

pub fn center_of_mass(mapping: &MappingModel, c: Option<&[f64]>, n_samples: usize, seed: u64) -> Result<CenterOfMass> {
    check_samples(n_samples)?;
    let zero;
    let cvec = match c {
        Some(c) => c,
        None => {
            zero = vec![0.0; mapping.c_dim()];
            &zero
        }
    };
    let sc = mapping.scale_condition(cvec)?;
    let mut r = rng::from_seed(seed);
    let mut z = vec![0.0; mapping.z_dim()];
    let mut sum = vec![0.0; mapping.w_dim()];
    let mut scratch = Scratch::default();
    for _ in 0..n_samples {
        rng::fill_standard_normal(&mut r, &mut z);
        axpy(1.0, mapping.map_scaled(&z, &sc, &mut scratch), &mut sum);
    }
    let n = n_samples as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    Ok(CenterOfMass {
        w_bar: sum,
        condition: c.map(<[f64]>::to_vec),
        sample_count: n_samples,
        seed,
    })
}

/// `w̄ + ψ (w − w̄)`. `ψ = 1` returns `w` unchanged.
pub fn truncate(w: &LatentVector, center: &CenterOfMass, psi: f64) -> Result<LatentVector> {
    let data = w.expect_space(Space::W)?;
    check_len("truncated w", center.w_bar.len(), data.len())?;
    if !psi.is_finite() {
        return Err(Error::InvalidParameter(format!("psi must be finite, got {psi}")));
    }
    if psi == 1.0 {
        return Ok(w.clone());
    }
    Ok(LatentVector::w(
        data.iter()
            .zip(&center.w_bar)
            .map(|(&x, &m)| m + psi * (x - m))
            .collect(),
    ))
}

/// Mean over a shared z stream of `f_c(z, c2) − f_c(z, c1)`.
pub fn transformation_vector(
    mapping: &MappingModel,
    c1: &[f64],
    c2: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<TransformationVector> {
    check_samples(n_samples)?;
    let s1 = mapping.scale_condition(c1)?;
    let s2 = mapping.scale_condition(c2)?;
    let mut r = rng::from_seed(seed);
    let mut z = vec![0.0; mapping.z_dim()];
    let mut sum = vec![0.0; mapping.w_dim()];
    let mut a = Scratch::default();
    let mut b = Scratch::default();
    for _ in 0..n_samples {
        rng::fill_standard_normal(&mut r, &mut z);
        let w1 = mapping.map_scaled(&z, &s1, &mut a);
        let w2 = mapping.map_scaled(&z, &s2, &mut b);
        for ((s, x2), x1) in sum.iter_mut().zip(w2).zip(w1) {
            *s += x2 - x1;
        }
    }
    let n = n_samples as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    Ok(TransformationVector {
        t: sum,
        source: c1.to_vec(),
        target: c2.to_vec(),
        sample_count: n_samples,
        seed,
    })
}

pub fn apply_transformation(w: &LatentVector, t: &TransformationVector) -> Result<LatentVector> {
    let data = w.expect_space(Space::W)?;
    check_len("transformed w", t.t.len(), data.len())?;
    Ok(LatentVector::w(data.iter().zip(&t.t).map(|(a, b)| a + b).collect()))
}

/// `(1 − λ) f_c(z, c1) + λ f_c(z, c2)` for `λ ∈ [0, 1]`.
pub fn conditional_interpolate(
    mapping: &MappingModel,
    z: &LatentVector,
    c1: &[f64],
    c2: &[f64],
    lambda: f64,
) -> Result<LatentVector> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be in [0, 1], got {lambda}"
        )));
    }
    let a = mapping.map_conditional(z, c1)?.into_vec();
    let b = mapping.map_conditional(z, c2)?.into_vec();
    Ok(LatentVector::w(
        a.iter().zip(&b).map(|(x, y)| (1.0 - lambda) * x + lambda * y).collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionConfig {
    pub steps: usize,
    pub step_size: f64,
    /// Consecutive halvings tried before a step is abandoned.
    pub max_halvings: usize,
    /// Step-size multiplier after each accepted step (1.0 disables growth).
    pub growth: f64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self {
            steps: 2000,
            step_size: 0.01,
            max_halvings: 20,
            growth: 1.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inversion {
    pub w: LatentVector,
    /// Loss before the first step followed by the loss after each step taken.
    pub losses: Vec<f64>,
    pub final_step_size: f64,
}

fn residual_loss(synthesis: &SynthesisModel, w: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    let mut r = synthesis.synthesize_raw(w)?;
    r.iter_mut().zip(target).for_each(|(a, t)| *a -= t);
    let loss = r.iter().map(|v| v * v).sum();
    Ok((loss, r))
}

/// Gradient descent on `‖g(w) − target‖²`. A step that raises the loss is retried
/// with half the step size; after `max_halvings` failures the run stops early, so
/// the loss trace never increases.
pub fn invert(
    synthesis: &SynthesisModel,
    target: &[f64],
    init_w: &LatentVector,
    cfg: &InversionConfig,
) -> Result<Inversion> {
    let mut w = init_w.expect_space(Space::W)?.to_vec();
    check_len("inversion target", synthesis.image_dim(), target.len())?;
    check_finite("inversion target", target)?;
    if !(cfg.step_size.is_finite() && cfg.step_size > 0.0 && cfg.growth.is_finite() && cfg.growth >= 1.0) {
        return Err(Error::InvalidParameter("step_size must be > 0 and growth >= 1".into()));
    }
    let (mut loss, mut resid) = residual_loss(synthesis, &w, target)?;
    if !loss.is_finite() {
        return Err(Error::Diverged(0));
    }
    let mut losses = Vec::with_capacity(cfg.steps + 1);
    losses.push(loss);
    let mut step = cfg.step_size;
    let mut candidate = vec![0.0; w.len()];
    'outer: for it in 1..=cfg.steps {
        if loss == 0.0 {
            break;
        }
        resid.iter_mut().for_each(|v| *v *= 2.0);
        let grad = synthesis.synthesize_grad_raw(&w, &resid)?;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged(it));
        }
        for _ in 0..=cfg.max_halvings {
            candidate
                .iter_mut()
                .zip(&w)
                .zip(&grad)
                .for_each(|((c, x), g)| *c = x - step * g);
            let (l, r) = residual_loss(synthesis, &candidate, target)?;
            if l.is_finite() && l <= loss {
                core::mem::swap(&mut w, &mut candidate);
                loss = l;
                resid = r;
                losses.push(loss);
                step *= cfg.growth;
                continue 'outer;
            }
            step *= 0.5;
        }
        break;
    }
    Ok(Inversion {
        w: LatentVector::w(w),
        losses,
        final_step_size: step,
    })
}
