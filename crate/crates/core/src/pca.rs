//! Principal component projection and covariance confidence ellipses.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{check_finite, Error, Result};
use crate::linalg::{column_means, covariance, dot, sqrt, Matrix, SymmetricEigen};

#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection {
    /// `k × n`, one unit-norm component per row.
    pub components: Matrix,
    pub explained_variance_ratio: Vec<f64>,
    pub mean: Vec<f64>,
}

impl PcaProjection {
    /// Projects rows of `x` onto the components after centring.
    pub fn project(&self, x: &Matrix) -> Result<Matrix> {
        crate::error::check_len("projected width", self.mean.len(), x.cols())?;
        let k = self.components.rows();
        let mut out = Vec::with_capacity(x.rows() * k);
        let mut centered = Vec::with_capacity(x.cols());
        for r in x.row_iter() {
            centered.clear();
            centered.extend(r.iter().zip(&self.mean).map(|(a, m)| a - m));
            out.extend(self.components.row_iter().map(|c| dot(c, &centered)));
        }
        Matrix::from_vec(x.rows(), k, out)
    }
}

/// Top-`k` eigenvectors of the sample covariance, with `λ_i / Σλ` ratios.
pub fn pca_project(x: &Matrix, k: usize) -> Result<(PcaProjection, Matrix)> {
    let limit = x.rows().saturating_sub(1).min(x.cols());
    if k == 0 || k > limit {
        return Err(Error::InvalidParameter(format!(
            "pca k must be in 1..={limit} for {} rows of width {}",
            x.rows(),
            x.cols()
        )));
    }
    check_finite("pca samples", x.as_slice())?;
    let mean = column_means(x);
    let cov = covariance(x, &mean);
    let eig = SymmetricEigen::new(&cov)?;
    let total: f64 = eig.values.iter().map(|v| v.max(0.0)).sum();
    let explained_variance_ratio = eig.values[..k]
        .iter()
        .map(|&v| if total > 0.0 { v.max(0.0) / total } else { 0.0 })
        .collect();
    let mut comps = Vec::with_capacity(k * x.cols());
    for j in 0..k {
        comps.extend(eig.vector(j));
    }
    let proj = PcaProjection {
        components: Matrix::from_vec(k, x.cols(), comps)?,
        explained_variance_ratio,
        mean,
    };
    let projected = proj.project(x)?;
    Ok((proj, projected))
}

/// Axis-aligned description of an `n_sigma` covariance ellipse in 2-D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub center: [f64; 2],
    pub semi_major: f64,
    pub semi_minor: f64,
    /// Angle of the major axis from the first coordinate axis, radians.
    pub angle: f64,
}

pub fn confidence_ellipse(points: &Matrix, n_sigma: f64) -> Result<Ellipse> {
    crate::error::check_len("ellipse point width", 2, points.cols())?;
    if points.rows() < 2 {
        return Err(Error::InvalidParameter("an ellipse needs at least 2 points".into()));
    }
    let mean = column_means(points);
    let cov = covariance(points, &mean);
    let eig = SymmetricEigen::new(&cov)?;
    let v = eig.vector(0);
    Ok(Ellipse {
        center: [mean[0], mean[1]],
        semi_major: n_sigma * sqrt(eig.values[0].max(0.0)),
        semi_minor: n_sigma * sqrt(eig.values[1].max(0.0)),
        angle: libm::atan2(v[1], v[0]),
    })
}
