//! Synthetic ground-truth generators and CSV ingestion for user matrices.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;
use crate::rng::SeedRng;

/// A generated benchmark with exact ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub points: DataMatrix,
    /// k x m matrix of true archetypes in feature space.
    pub true_archetypes: DataMatrix,
    /// n x k row-stochastic mixture matrix.
    pub true_mixtures: DataMatrix,
    pub params: GeneratorParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub radius: Option<f64>,
    pub dim: usize,
    pub bias: MixtureBias,
    pub curvature: Option<f64>,
    pub seed: u64,
}

/// How mixtures are drawn over the simplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixtureBias {
    /// Flat Dirichlet: uniform over the simplex.
    Uniform,
    /// Dirichlet with concentration 5: mass pulled toward the center.
    CenterBiased,
}

/// One row of a flat Dirichlet sample via the log-uniform form
/// `s_j = -ln u_j / sum(-ln u)`.
pub(crate) fn dirichlet_flat_row(k: usize, rng: &mut SeedRng) -> Vec<f64> {
    let mut row: Vec<f64> = (0..k).map(|_| -rng.uniform_open().ln()).collect();
    let total: f64 = row.iter().sum();
    if total > 0.0 {
        row.iter_mut().for_each(|v| *v /= total);
    } else {
        row.iter_mut().for_each(|v| *v = 1.0 / k as f64);
    }
    row
}

/// Dirichlet(5, ..., 5) row; the integer shape lets each gamma draw be the
/// sum of five exponentials.
fn dirichlet_center_row(k: usize, rng: &mut SeedRng) -> Vec<f64> {
    let mut row: Vec<f64> = (0..k)
        .map(|_| -(0..5).map(|_| rng.uniform_open().ln()).sum::<f64>())
        .collect();
    let total: f64 = row.iter().sum();
    if total > 0.0 {
        row.iter_mut().for_each(|v| *v /= total);
    } else {
        row.iter_mut().for_each(|v| *v = 1.0 / k as f64);
    }
    row
}

fn sample_mixtures(n: usize, k: usize, bias: MixtureBias, rng: &mut SeedRng) -> DataMatrix {
    let mut out = DataMatrix::zeros(n, k);
    for i in 0..n {
        let row = match bias {
            MixtureBias::Uniform => dirichlet_flat_row(k, rng),
            MixtureBias::CenterBiased => dirichlet_center_row(k, rng),
        };
        out.row_mut(i).copy_from_slice(&row);
    }
    out
}

/// Points sampled uniformly in an equilateral triangle (circumradius 1,
/// centered at the tangent point), then radially projected onto a sphere of
/// the given radius tangent to the triangle plane at the origin.
///
/// The projection is radial from the sphere center at height `radius` above
/// the plane; it is defined for any positive radius and maps the triangle
/// center to the tangent point exactly. `true_mixtures` are the generating
/// barycentric coordinates, `true_archetypes` the three projected vertices.
pub fn gen_triangle_on_sphere(n: usize, radius: f64, rng: &mut SeedRng) -> Result<SyntheticDataset> {
    if n == 0 {
        return Err(Error::invalid("triangle generator: n must be at least 1"));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::invalid("triangle generator: radius must be positive and finite"));
    }
    let seed = rng.seed();

    // Equilateral triangle, circumradius 1, centered at the origin.
    let vertices = [
        [1.0, 0.0],
        [-0.5, 3f64.sqrt() / 2.0],
        [-0.5, -3f64.sqrt() / 2.0],
    ];

    let project = |x: f64, y: f64| -> [f64; 3] {
        // Sphere center at (0, 0, radius); push the plane point onto the
        // sphere along the ray from the center.
        let norm = (x * x + y * y + radius * radius).sqrt();
        let t = radius / norm;
        [t * x, t * y, radius * (1.0 - t)]
    };

    let mut mixtures = DataMatrix::zeros(n, 3);
    let mut points = DataMatrix::zeros(n, 3);
    for i in 0..n {
        let bary = dirichlet_flat_row(3, rng);
        let px = bary[0] * vertices[0][0] + bary[1] * vertices[1][0] + bary[2] * vertices[2][0];
        let py = bary[0] * vertices[0][1] + bary[1] * vertices[1][1] + bary[2] * vertices[2][1];
        points.row_mut(i).copy_from_slice(&project(px, py));
        mixtures.row_mut(i).copy_from_slice(&bary);
    }

    let mut true_archetypes = DataMatrix::zeros(3, 3);
    for (j, v) in vertices.iter().enumerate() {
        true_archetypes.row_mut(j).copy_from_slice(&project(v[0], v[1]));
    }

    Ok(SyntheticDataset {
        points,
        true_archetypes,
        true_mixtures: mixtures,
        params: GeneratorParams {
            radius: Some(radius),
            dim: 3,
            bias: MixtureBias::Uniform,
            curvature: None,
            seed,
        },
    })
}

/// Coordinate-wise monotone cubic warp `t + c * t^3`; smooth and invertible.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicWarp {
    pub strength: f64,
}

impl CubicWarp {
    pub fn apply(&self, v: f64) -> f64 {
        v + self.strength * v * v * v
    }
}

/// The fixed geometry of a high-dimensional simplex benchmark: k vertices
/// embedded in `ambient_dim` dimensions, optionally warped.
///
/// Splitting geometry from sampling lets callers draw several mixture
/// distributions over the same ground-truth archetypes.
#[derive(Debug, Clone)]
pub struct SimplexGeometry {
    /// k x ambient_dim archetypes, already embedded and warped.
    archetypes: DataMatrix,
    /// Archetypes before the warp (needed to place sampled points).
    pre_warp: DataMatrix,
    warp: Option<CubicWarp>,
    seed: u64,
}

impl SimplexGeometry {
    /// Draw k random vertices in k-1 dimensions, embed them into
    /// `ambient_dim` by a random rotation, optionally warp.
    pub fn random(
        k: usize,
        ambient_dim: usize,
        curvature: Option<f64>,
        rng: &mut SeedRng,
    ) -> Result<SimplexGeometry> {
        if k < 2 {
            return Err(Error::invalid("simplex generator: need k >= 2"));
        }
        if k > ambient_dim + 1 {
            return Err(Error::invalid(format!(
                "simplex generator: k={} exceeds ambient_dim+1={}",
                k,
                ambient_dim + 1
            )));
        }
        let seed = rng.seed();
        let latent = k - 1;

        let mut vertices = DataMatrix::zeros(k, latent);
        for i in 0..k {
            for j in 0..latent {
                vertices.set(i, j, rng.normal());
            }
        }

        // Random orthonormal embedding: modified Gram-Schmidt on Gaussian
        // vectors of length ambient_dim.
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(latent);
        while basis.len() < latent {
            let mut v: Vec<f64> = (0..ambient_dim).map(|_| rng.normal()).collect();
            for b in &basis {
                let proj = crate::numerics::la::dot(&v, b);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= proj * bi;
                }
            }
            let norm = crate::numerics::la::frob_sq(&v).sqrt();
            if norm < 1e-8 {
                continue;
            }
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
        let mut embed = DataMatrix::zeros(latent, ambient_dim);
        for (i, b) in basis.iter().enumerate() {
            embed.row_mut(i).copy_from_slice(b);
        }

        let pre_warp = vertices.matmul(&embed)?;
        let warp = curvature.map(|strength| CubicWarp { strength });
        let archetypes = match &warp {
            Some(w) => {
                let mut a = pre_warp.clone();
                a.values_mut().iter_mut().for_each(|v| *v = w.apply(*v));
                a
            }
            None => pre_warp.clone(),
        };
        Ok(SimplexGeometry { archetypes, pre_warp, warp, seed })
    }

    pub fn archetypes(&self) -> &DataMatrix {
        &self.archetypes
    }

    pub fn k(&self) -> usize {
        self.archetypes.rows()
    }

    pub fn ambient_dim(&self) -> usize {
        self.archetypes.cols()
    }

    /// Sample n points as mixtures of the vertices. Without a warp the
    /// identity `points == mixtures * archetypes` holds exactly because the
    /// points are computed as that product.
    pub fn sample(&self, n: usize, bias: MixtureBias, rng: &mut SeedRng) -> Result<SyntheticDataset> {
        let k = self.k();
        let mixtures = sample_mixtures(n, k, bias, rng);
        let mut points = mixtures.matmul(&self.pre_warp)?;
        if let Some(w) = &self.warp {
            points.values_mut().iter_mut().for_each(|v| *v = w.apply(*v));
        }
        Ok(SyntheticDataset {
            points,
            true_archetypes: self.archetypes.clone(),
            true_mixtures: mixtures,
            params: GeneratorParams {
                radius: None,
                dim: self.ambient_dim(),
                bias,
                curvature: self.warp.as_ref().map(|w| w.strength),
                seed: self.seed,
            },
        })
    }
}

/// k-archetype simplex data embedded in `ambient_dim` dimensions.
pub fn gen_simplex_highdim(
    n: usize,
    k: usize,
    ambient_dim: usize,
    curvature: Option<f64>,
    bias: MixtureBias,
    rng: &mut SeedRng,
) -> Result<SyntheticDataset> {
    let geometry = SimplexGeometry::random(k, ambient_dim, curvature, rng)?;
    geometry.sample(n, bias, rng)
}

const CSV_SIG_DIGITS: usize = 17;

pub(crate) fn format_value(v: f64) -> String {
    format!("{:.*e}", CSV_SIG_DIGITS - 1, v)
}

/// Load a numeric CSV. With `has_header` the first record becomes the column
/// names. Rejects ragged rows, non-numeric cells and non-finite values with
/// row/column diagnostics (1-based, counting the header).
pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<DataMatrix> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::data(format!("cannot open {}: {}", path.display(), e)))?;

    let mut col_names: Option<Vec<String>> = None;
    let mut values: Vec<f64> = Vec::new();
    let mut cols = 0usize;
    let mut rows = 0usize;

    for (idx, record) in reader.records().enumerate() {
        let line = idx + 1;
        let record = record.map_err(|e| Error::data(format!("line {}: {}", line, e)))?;
        if idx == 0 && has_header {
            col_names = Some(record.iter().map(|s| s.trim().to_string()).collect());
            continue;
        }
        if rows == 0 {
            cols = record.len();
        } else if record.len() != cols {
            return Err(Error::data(format!(
                "line {}: ragged row with {} cells, expected {}",
                line,
                record.len(),
                cols
            )));
        }
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::data(format!("line {}, column {}: not a number: {:?}", line, j + 1, cell))
            })?;
            if !v.is_finite() {
                return Err(Error::data(format!(
                    "line {}, column {}: non-finite value {}",
                    line,
                    j + 1,
                    v
                )));
            }
            values.push(v);
        }
        rows += 1;
    }

    if rows == 0 || cols == 0 {
        return Err(Error::data(format!("{}: no data rows", path.display())));
    }
    if let Some(names) = &col_names {
        if names.len() != cols {
            return Err(Error::data(format!(
                "header has {} names but rows have {} cells",
                names.len(),
                cols
            )));
        }
    }

    let m = DataMatrix::new(rows, cols, values)?;
    match col_names {
        Some(names) => m.with_col_names(names),
        None => Ok(m),
    }
}

/// Write a matrix as CSV with 17 significant digits (exact f64 round-trip).
pub fn save_csv(matrix: &DataMatrix, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path.as_ref())?;
    let mut w = BufWriter::new(file);
    if let Some(names) = matrix.col_names() {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(names)
            .and_then(|_| writer.flush().map_err(csv::Error::from))
            .map_err(|e| Error::data(format!("header write failed: {}", e)))?;
        let buf = writer.into_inner().map_err(|e| Error::data(e.to_string()))?;
        w.write_all(&buf)?;
    }
    for i in 0..matrix.rows() {
        let line: Vec<String> = matrix.row(i).iter().map(|&v| format_value(v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}
