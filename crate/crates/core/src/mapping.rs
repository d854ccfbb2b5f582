//! Conditional mapping network `f_c: Z × C → W`, the W ↔ P transform, and a toy
//! synthesis network `g: W → image` with an analytic backward pass.
//!
//! Both networks are plain dense MLPs with leaky-ReLU activations. Models are
//! immutable after construction; every forward/backward call is a pure function.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_len, Error, Result};
use crate::linalg::{dot, sqrt, Matrix};
use crate::rng;

/// Slope of every leaky-ReLU in both networks.
pub const LEAKY_SLOPE: f64 = 0.2;
/// Slope that inverts the final mapping activation (W → P).
pub const P_SLOPE: f64 = 5.0;

const RMS_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Space {
    Z,
    W,
    P,
}

/// A vector tagged with the latent space it lives in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentVector {
    space: Space,
    data: Vec<f64>,
}

impl LatentVector {
    pub fn new(space: Space, data: Vec<f64>) -> Self {
        Self { space, data }
    }

    pub fn z(data: Vec<f64>) -> Self {
        Self::new(Space::Z, data)
    }

    pub fn w(data: Vec<f64>) -> Self {
        Self::new(Space::W, data)
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn expect_space(&self, expected: Space) -> Result<&[f64]> {
        if self.space != expected {
            return Err(Error::SpaceMismatch {
                expected,
                actual: self.space,
            });
        }
        Ok(&self.data)
    }
}

#[inline]
pub fn leaky_relu(x: f64, slope: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        slope * x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PDirection {
    WToP,
    PToW,
}

/// `x = LeakyReLU_5(w)` and its inverse `w = LeakyReLU_0.2(x)`.
pub fn p_transform(v: &LatentVector, direction: PDirection) -> Result<LatentVector> {
    let (from, to, slope) = match direction {
        PDirection::WToP => (Space::W, Space::P, P_SLOPE),
        PDirection::PToW => (Space::P, Space::W, LEAKY_SLOPE),
    };
    let data = v.expect_space(from)?;
    Ok(LatentVector::new(
        to,
        data.iter().map(|&x| leaky_relu(x, slope)).collect(),
    ))
}

pub fn w_to_p_in_place(w: &mut [f64]) {
    w.iter_mut().for_each(|x| *x = leaky_relu(*x, P_SLOPE));
}

/// Fully connected layer, weight stored row-major as `out_dim × in_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    weight: Matrix,
    bias: Vec<f64>,
}

impl Dense {
    pub fn from_parts(weight: Matrix, bias: Vec<f64>) -> Result<Self> {
        check_len("dense bias", weight.rows(), bias.len())?;
        check_finite("dense weight", weight.as_slice())?;
        check_finite("dense bias", &bias)?;
        Ok(Self { weight, bias })
    }

    /// Weights `N(0, 1) / √fan_in`, zero bias.
    fn scaled_normal<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let scale = 1.0 / sqrt(in_dim as f64);
        let mut w = rng::standard_normal_vec(rng, in_dim * out_dim);
        w.iter_mut().for_each(|x| *x *= scale);
        Self {
            weight: Matrix::from_vec(out_dim, in_dim, w).expect("shape"),
            bias: vec![0.0; out_dim],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn weight(&self) -> &Matrix {
        &self.weight
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.weight.row_iter().zip(&self.bias).map(|(r, b)| dot(r, x) + b));
    }
}

/// Hyper-parameters shared by [`init_models`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub z_dim: usize,
    pub c_dim: usize,
    pub w_dim: usize,
    pub image_dim: usize,
    pub mapping_depth: usize,
    pub synthesis_depth: usize,
    /// Norm of the condition block relative to `√z_dim` before input normalization.
    pub condition_gain: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            z_dim: 32,
            c_dim: 1,
            w_dim: 64,
            image_dim: 192,
            mapping_depth: 8,
            synthesis_depth: 3,
            condition_gain: 8.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappingModel {
    z_dim: usize,
    c_dim: usize,
    w_dim: usize,
    condition_gain: f64,
    seed: u64,
    layers: Vec<Dense>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisModel {
    w_dim: usize,
    image_dim: usize,
    seed: u64,
    layers: Vec<Dense>,
}

pub fn init_models(cfg: &ModelConfig) -> Result<(MappingModel, SynthesisModel)> {
    for (name, v) in [
        ("z_dim", cfg.z_dim),
        ("c_dim", cfg.c_dim),
        ("w_dim", cfg.w_dim),
        ("image_dim", cfg.image_dim),
        ("mapping_depth", cfg.mapping_depth),
        ("synthesis_depth", cfg.synthesis_depth),
    ] {
        if v == 0 {
            return Err(Error::InvalidParameter(format!("{name} must be >= 1")));
        }
    }
    if !(cfg.condition_gain.is_finite() && cfg.condition_gain >= 0.0) {
        return Err(Error::InvalidParameter("condition_gain must be finite and >= 0".into()));
    }

    let mut r = rng::stream(cfg.seed, "mapping");
    let mut layers = Vec::with_capacity(cfg.mapping_depth);
    let mut fan_in = cfg.z_dim + cfg.c_dim;
    for _ in 0..cfg.mapping_depth {
        layers.push(Dense::scaled_normal(fan_in, cfg.w_dim, &mut r));
        fan_in = cfg.w_dim;
    }
    let mapping = MappingModel {
        z_dim: cfg.z_dim,
        c_dim: cfg.c_dim,
        w_dim: cfg.w_dim,
        condition_gain: cfg.condition_gain,
        seed: cfg.seed,
        layers,
    };

    let mut r = rng::stream(cfg.seed, "synthesis");
    let mut layers = Vec::with_capacity(cfg.synthesis_depth);
    let mut fan_in = cfg.w_dim;
    for _ in 0..cfg.synthesis_depth {
        layers.push(Dense::scaled_normal(fan_in, cfg.image_dim, &mut r));
        fan_in = cfg.image_dim;
    }
    let synthesis = SynthesisModel {
        w_dim: cfg.w_dim,
        image_dim: cfg.image_dim,
        seed: cfg.seed,
        layers,
    };
    Ok((mapping, synthesis))
}

fn check_chain(layers: &[Dense], input: usize, output: usize) -> Result<()> {
    if layers.is_empty() {
        return Err(Error::InvalidParameter("model needs at least one layer".into()));
    }
    let mut width = input;
    for l in layers {
        check_len("layer input width", width, l.in_dim())?;
        width = l.out_dim();
    }
    check_len("model output width", output, width)
}

/// Reusable activation buffers for batched forward passes.
#[derive(Debug, Default, Clone)]
pub struct Scratch {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl MappingModel {
    pub fn from_parts(z_dim: usize, c_dim: usize, condition_gain: f64, seed: u64, layers: Vec<Dense>) -> Result<Self> {
        let w_dim = layers.last().map(Dense::out_dim).unwrap_or(0);
        check_chain(&layers, z_dim + c_dim, w_dim)?;
        if layers.iter().any(|l| l.out_dim() != w_dim) {
            return Err(Error::InvalidParameter("all mapping layers must output w_dim".into()));
        }
        Ok(Self {
            z_dim,
            c_dim,
            w_dim,
            condition_gain,
            seed,
            layers,
        })
    }

    pub fn z_dim(&self) -> usize {
        self.z_dim
    }

    pub fn c_dim(&self) -> usize {
        self.c_dim
    }

    pub fn w_dim(&self) -> usize {
        self.w_dim
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn condition_gain(&self) -> f64 {
        self.condition_gain
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    /// Scales `c` to norm `gain·√z_dim`; the zero vector (all wildcards) stays zero.
    pub fn scale_condition(&self, c: &[f64]) -> Result<Vec<f64>> {
        check_len("condition vector", self.c_dim, c.len())?;
        check_finite("condition vector", c)?;
        let n = sqrt(dot(c, c));
        if n == 0.0 {
            return Ok(vec![0.0; c.len()]);
        }
        let s = self.condition_gain * sqrt(self.z_dim as f64) / n;
        Ok(c.iter().map(|x| x * s).collect())
    }

    /// `w = MLP(rms_normalize([z, scaled c]))` with a leaky-ReLU after every layer.
    pub fn map_conditional(&self, z: &LatentVector, c: &[f64]) -> Result<LatentVector> {
        let z = z.expect_space(Space::Z)?;
        check_len("latent z", self.z_dim, z.len())?;
        check_finite("latent z", z)?;
        let sc = self.scale_condition(c)?;
        let mut scratch = Scratch::default();
        let w = self.map_scaled(z, &sc, &mut scratch).to_vec();
        Ok(LatentVector::w(w))
    }

    /// Forward pass with a pre-scaled condition (see [`Self::scale_condition`]).
    /// Shapes are the caller's responsibility.
    pub fn map_scaled<'s>(&self, z: &[f64], scaled_c: &[f64], scratch: &'s mut Scratch) -> &'s [f64] {
        let Scratch { a, b } = scratch;
        a.clear();
        a.extend_from_slice(z);
        a.extend_from_slice(scaled_c);
        let ms = a.iter().map(|x| x * x).sum::<f64>() / a.len() as f64;
        let inv = 1.0 / sqrt(ms + RMS_EPS);
        a.iter_mut().for_each(|x| *x *= inv);
        for layer in &self.layers {
            layer.forward(a, b);
            b.iter_mut().for_each(|x| *x = leaky_relu(*x, LEAKY_SLOPE));
            core::mem::swap(a, b);
        }
        a
    }
}

impl SynthesisModel {
    pub fn from_parts(w_dim: usize, seed: u64, layers: Vec<Dense>) -> Result<Self> {
        let image_dim = layers.last().map(Dense::out_dim).unwrap_or(0);
        check_chain(&layers, w_dim, image_dim)?;
        Ok(Self {
            w_dim,
            image_dim,
            seed,
            layers,
        })
    }

    pub fn w_dim(&self) -> usize {
        self.w_dim
    }

    pub fn image_dim(&self) -> usize {
        self.image_dim
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn synthesize(&self, w: &LatentVector) -> Result<Vec<f64>> {
        let w = w.expect_space(Space::W)?;
        self.synthesize_raw(w)
    }

    pub fn synthesize_raw(&self, w: &[f64]) -> Result<Vec<f64>> {
        check_len("latent w", self.w_dim, w.len())?;
        let mut x = w.to_vec();
        let mut h = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.forward(&x, &mut h);
            if i < last {
                h.iter_mut().for_each(|v| *v = leaky_relu(*v, LEAKY_SLOPE));
            }
            core::mem::swap(&mut x, &mut h);
        }
        Ok(x)
    }

    /// `∂⟨upstream, g(w)⟩ / ∂w` by backpropagation.
    pub fn synthesize_grad(&self, w: &LatentVector, upstream: &[f64]) -> Result<Vec<f64>> {
        let w = w.expect_space(Space::W)?;
        self.synthesize_grad_raw(w, upstream)
    }

    pub fn synthesize_grad_raw(&self, w: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        check_len("latent w", self.w_dim, w.len())?;
        check_len("upstream gradient", self.image_dim, upstream.len())?;
        let last = self.layers.len() - 1;
        // keep pre-activations of hidden layers for the slope mask
        let mut pre: Vec<Vec<f64>> = Vec::with_capacity(last);
        let mut x = w.to_vec();
        for layer in &self.layers[..last] {
            let mut h = Vec::new();
            layer.forward(&x, &mut h);
            x = h.iter().map(|&v| leaky_relu(v, LEAKY_SLOPE)).collect();
            pre.push(h);
        }
        let mut grad = upstream.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            if i < last {
                for (g, &h) in grad.iter_mut().zip(&pre[i]) {
                    if h < 0.0 {
                        *g *= LEAKY_SLOPE;
                    }
                }
            }
            grad = layer.weight.t_matvec(&grad)?;
        }
        Ok(grad)
    }
}
