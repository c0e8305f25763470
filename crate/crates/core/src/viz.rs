//! Fast interpolation-based coordinates for the archetypal space.
//!
//! Classical MDS places only the k archetypes; every data point is then the
//! mixture-weighted interpolation of the archetype coordinates. This costs
//! one k x k eigensolve plus a matrix product instead of an n x n embedding.

use crate::error::Result;
use crate::matrix::DataMatrix;
use crate::model::ArchetypalModel;
use crate::numerics::classical_mds;

/// Plot coordinates for archetypes and points.
///
/// Invariant: `point_coords == mixtures * archetype_coords` bit-exactly (the
/// coordinates are computed as that product).
#[derive(Debug, Clone)]
pub struct VizCoords {
    /// k x d archetype positions.
    pub archetype_coords: DataMatrix,
    /// n x d interpolated point positions.
    pub point_coords: DataMatrix,
    /// Set when fewer than dims+1 archetypes forced a lower-dimensional
    /// embedding padded with zero columns (k=2 in 2-D is a line).
    pub degenerate: bool,
}

/// MDS on the decoded archetypes (feature-space distances), then point
/// coordinates by interpolation with the encoded mixtures.
pub fn viz_coords(model: &dyn ArchetypalModel, x: &DataMatrix, dims: usize) -> Result<VizCoords> {
    let archetypes = model.archetypes()?;
    let k = archetypes.rows();

    // With k <= dims the configuration is degenerate (collinear or a single
    // point); embed in the largest feasible dimension and pad with zeros.
    let usable = dims.min(k.saturating_sub(1)).max(1);
    let embedded = classical_mds(&archetypes, usable)?;
    let degenerate = usable < dims;
    let mut archetype_coords = DataMatrix::zeros(k, dims);
    for i in 0..k {
        for d in 0..usable {
            archetype_coords.set(i, d, embedded.get(i, d));
        }
    }

    let mixtures = model.encode(x)?;
    let point_coords = mixtures.matmul(&archetype_coords)?;
    Ok(VizCoords { archetype_coords, point_coords, degenerate })
}
