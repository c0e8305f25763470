//! Geometry-based data generation: sample the latent simplex and decode.
//!
//! Because the latent simplex bounds the data geometry rather than its
//! density, uniform samples over the simplex decode to points spread over
//! the geometric support of the data, independently of how unevenly the
//! training data was sampled.

use crate::data::dirichlet_flat_row;
use crate::error::{Error, Result};
use crate::matrix::DataMatrix;
use crate::model::ArchetypalModel;
use crate::rng::SeedRng;

/// Row-stochastic weights over k archetypes.
#[derive(Debug, Clone)]
pub struct SimplexSample {
    pub weights: DataMatrix,
}

impl SimplexSample {
    /// Check the row-stochastic invariants (rows sum to 1 within 1e-12,
    /// entries non-negative).
    pub fn check_invariants(&self) -> Result<()> {
        for i in 0..self.weights.rows() {
            let row = self.weights.row(i);
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::Numeric(format!("simplex row {} sums to {}", i, sum)));
            }
            if row.iter().any(|&v| v < 0.0) {
                return Err(Error::Numeric(format!("simplex row {} has a negative entry", i)));
            }
        }
        Ok(())
    }
}

/// Uniform sample over the (k-1)-simplex: each row is
/// `-ln(u_j) / sum_l -ln(u_l)` with u i.i.d. uniform, i.e. a flat Dirichlet.
pub fn sample_simplex_uniform(n: usize, k: usize, rng: &mut SeedRng) -> Result<SimplexSample> {
    if n == 0 {
        return Err(Error::invalid("simplex sample: n must be at least 1"));
    }
    if k == 0 {
        return Err(Error::invalid("simplex sample: k must be at least 1"));
    }
    let mut weights = DataMatrix::zeros(n, k);
    for i in 0..n {
        let row = dirichlet_flat_row(k, rng);
        weights.row_mut(i).copy_from_slice(&row);
    }
    Ok(SimplexSample { weights })
}

/// Decode a uniform simplex sample through a trained model. `n = 0` yields
/// an empty matrix.
pub fn generate_uniform(
    model: &dyn ArchetypalModel,
    n: usize,
    rng: &mut SeedRng,
) -> Result<DataMatrix> {
    if !model.is_trained() {
        return Err(Error::invalid("generate: model is not trained"));
    }
    if n == 0 {
        return Ok(DataMatrix::zeros(0, model.feature_count()));
    }
    let sample = sample_simplex_uniform(n, model.k(), rng)?;
    model.decode(&sample.weights)
}

/// Decode the straight latent path between archetypes i and j:
/// mixtures `(1-t) e_i + t e_j` for `steps` evenly spaced t in [0, 1].
/// The endpoint rows are bit-identical to the archetype decodes.
pub fn interpolate_archetypes(
    model: &dyn ArchetypalModel,
    i: usize,
    j: usize,
    steps: usize,
) -> Result<DataMatrix> {
    if !model.is_trained() {
        return Err(Error::invalid("interpolate: model is not trained"));
    }
    let k = model.k();
    if i >= k || j >= k {
        return Err(Error::invalid(format!(
            "interpolate: archetype index out of range (k={})",
            k
        )));
    }
    if i == j {
        return Err(Error::invalid("interpolate: endpoints must differ"));
    }
    if steps < 2 {
        return Err(Error::invalid("interpolate: need at least 2 steps"));
    }
    let mut mixtures = DataMatrix::zeros(steps, k);
    for s in 0..steps {
        let t = s as f64 / (steps - 1) as f64;
        mixtures.set(s, i, 1.0 - t);
        mixtures.set(s, j, t);
    }
    model.decode(&mixtures)
}

/// A decode of one explicit mixture vector.
#[derive(Debug, Clone)]
pub struct GeneratedPoint {
    pub features: Vec<f64>,
    /// True when the requested mixture lies outside the simplex (negative
    /// weight or sum away from 1 beyond 1e-9): the decode extrapolates.
    pub extrapolated: bool,
}

/// Decode a single mixture vector; values outside the simplex are allowed
/// and flagged as extrapolation.
pub fn generate_at(model: &dyn ArchetypalModel, alpha: &[f64]) -> Result<GeneratedPoint> {
    if !model.is_trained() {
        return Err(Error::invalid("generate: model is not trained"));
    }
    if alpha.len() != model.k() {
        return Err(Error::invalid(format!(
            "generate: mixture has length {}, expected k={}",
            alpha.len(),
            model.k()
        )));
    }
    let sum: f64 = alpha.iter().sum();
    let extrapolated = alpha.iter().any(|&v| v < -1e-9) || (sum - 1.0).abs() > 1e-9;
    let decoded = model.decode(&DataMatrix::new(1, alpha.len(), alpha.to_vec())?)?;
    Ok(GeneratedPoint { features: decoded.row(0).to_vec(), extrapolated })
}
