//! Deterministic numerical kernels shared by every other module.
//!
//! Everything here is a pure function over immutable inputs. Matrices are
//! desk-scale (at most a few hundred features), so the eigensolver is a
//! plain cyclic Jacobi kept in-repo.

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;

/// Low-level dense kernels on row-major buffers.
pub(crate) mod la {
    /// out (m x n) = a (m x k) * b (k x n). `out` must be zeroed.
    pub fn matmul(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
        debug_assert_eq!(a.len(), m * k);
        debug_assert_eq!(b.len(), k * n);
        debug_assert_eq!(out.len(), m * n);
        for i in 0..m {
            let arow = &a[i * k..(i + 1) * k];
            let orow = &mut out[i * n..(i + 1) * n];
            for (l, &ail) in arow.iter().enumerate() {
                if ail == 0.0 {
                    continue;
                }
                let brow = &b[l * n..(l + 1) * n];
                for j in 0..n {
                    orow[j] += ail * brow[j];
                }
            }
        }
    }

    /// out (k1 x k2) = a^T (k1 x r) * b (r x k2) for a stored as r x k1.
    pub fn matmul_at_b(r: usize, k1: usize, k2: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
        debug_assert_eq!(a.len(), r * k1);
        debug_assert_eq!(b.len(), r * k2);
        debug_assert_eq!(out.len(), k1 * k2);
        out.iter_mut().for_each(|v| *v = 0.0);
        for l in 0..r {
            let arow = &a[l * k1..(l + 1) * k1];
            let brow = &b[l * k2..(l + 1) * k2];
            for (i, &ali) in arow.iter().enumerate() {
                if ali == 0.0 {
                    continue;
                }
                let orow = &mut out[i * k2..(i + 1) * k2];
                for j in 0..k2 {
                    orow[j] += ali * brow[j];
                }
            }
        }
    }

    pub fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    pub fn frob_sq(a: &[f64]) -> f64 {
        a.iter().map(|x| x * x).sum()
    }

    pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matching eigenvectors as
/// the rows of the second matrix.
pub fn eigh_descending(n: usize, sym: &[f64]) -> Result<(Vec<f64>, DataMatrix)> {
    if sym.len() != n * n {
        return Err(Error::invalid("eigh: buffer does not match dimension"));
    }
    if n == 0 {
        return Err(Error::invalid("eigh: empty matrix"));
    }
    let mut a = sym.to_vec();
    // Columns of v accumulate the rotations.
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let frob = la::frob_sq(&a).sqrt();
    let tol = 1e-14 * (1.0 + frob);
    let max_sweeps = 64;

    for _ in 0..max_sweeps {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    a[r * n + p] = c * arp - s * arq;
                    a[p * n + r] = a[r * n + p];
                    a[r * n + q] = s * arp + c * arq;
                    a[q * n + r] = a[r * n + q];
                }
                for r in 0..n {
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = c * vrp - s * vrq;
                    v[r * n + q] = s * vrp + c * vrq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[j * n + j]
            .partial_cmp(&a[i * n + i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });

    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = DataMatrix::zeros(n, n);
    for (row, &col) in order.iter().enumerate() {
        for r in 0..n {
            vectors.set(row, r, v[r * n + col]);
        }
    }
    Ok((eigenvalues, vectors))
}

/// Invertible record of a PCA projection.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection {
    /// Per-feature mean removed before projection.
    pub mean: Vec<f64>,
    /// Principal axes as rows (dims x m), descending eigenvalue order.
    pub components: DataMatrix,
    /// Eigenvalues (sample variances along each axis) for the kept axes.
    pub eigenvalues: Vec<f64>,
    /// Sum of all m eigenvalues.
    pub total_variance: f64,
}

impl PcaProjection {
    pub fn explained_variance_fraction(&self) -> f64 {
        self.eigenvalues.iter().sum::<f64>() / self.total_variance
    }

    /// Project new data with the stored mean and axes.
    pub fn apply(&self, x: &DataMatrix) -> Result<DataMatrix> {
        let m = self.mean.len();
        if x.cols() != m {
            return Err(Error::invalid(format!(
                "projection expects {} features, got {}",
                m,
                x.cols()
            )));
        }
        let dims = self.components.rows();
        let mut out = DataMatrix::zeros(x.rows(), dims);
        for i in 0..x.rows() {
            let row = x.row(i);
            for d in 0..dims {
                let axis = self.components.row(d);
                let mut acc = 0.0;
                for j in 0..m {
                    acc += (row[j] - self.mean[j]) * axis[j];
                }
                out.set(i, d, acc);
            }
        }
        Ok(out)
    }

    /// Map projected coordinates back to feature space.
    pub fn inverse(&self, projected: &DataMatrix) -> Result<DataMatrix> {
        let dims = self.components.rows();
        if projected.cols() != dims {
            return Err(Error::invalid(format!(
                "inverse expects {} coordinates, got {}",
                dims,
                projected.cols()
            )));
        }
        let m = self.mean.len();
        let mut out = DataMatrix::zeros(projected.rows(), m);
        for i in 0..projected.rows() {
            let coords = projected.row(i);
            let row = out.row_mut(i);
            row.copy_from_slice(&self.mean);
            for d in 0..dims {
                let axis = self.components.row(d);
                for j in 0..m {
                    row[j] += coords[d] * axis[j];
                }
            }
        }
        Ok(out)
    }
}

/// Mean-centered projection onto the top `dims` principal components.
///
/// Sign convention: each component's largest-magnitude loading is positive,
/// so repeated runs are comparable.
pub fn pca_reduce(x: &DataMatrix, dims: usize) -> Result<(DataMatrix, PcaProjection)> {
    let (n, m) = (x.rows(), x.cols());
    if n == 0 || m == 0 {
        return Err(Error::invalid("pca: empty input"));
    }
    if dims == 0 || dims > n.min(m) {
        return Err(Error::invalid(format!(
            "pca: dims {} out of range 1..={}",
            dims,
            n.min(m)
        )));
    }

    let mut mean = vec![0.0; m];
    for row in x.iter_rows() {
        for (j, &v) in row.iter().enumerate() {
            mean[j] += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= n as f64);

    let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
    let mut cov = vec![0.0; m * m];
    for row in x.iter_rows() {
        for i in 0..m {
            let ci = row[i] - mean[i];
            if ci == 0.0 {
                continue;
            }
            for j in i..m {
                cov[i * m + j] += ci * (row[j] - mean[j]);
            }
        }
    }
    for i in 0..m {
        for j in i..m {
            cov[i * m + j] /= denom;
            cov[j * m + i] = cov[i * m + j];
        }
    }

    let total_variance: f64 = (0..m).map(|i| cov[i * m + i]).sum();
    if total_variance <= 0.0 {
        return Err(Error::Numeric("pca: input has zero total variance".into()));
    }

    let (eigenvalues, vectors) = eigh_descending(m, &cov)?;
    let mut components = DataMatrix::zeros(dims, m);
    for d in 0..dims {
        let mut row: Vec<f64> = vectors.row(d).to_vec();
        let lead = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0);
        if row[lead] < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
        components.row_mut(d).copy_from_slice(&row);
    }

    let projection = PcaProjection {
        mean,
        components,
        eigenvalues: eigenvalues[..dims].to_vec(),
        total_variance,
    };
    let projected = projection.apply(x)?;
    Ok((projected, projection))
}

/// Classical (Torgerson) multidimensional scaling on Euclidean distances.
///
/// Double-centers the squared-distance matrix and returns the top `dims`
/// eigen-coordinates. Output columns are mean-centered by construction.
pub fn classical_mds(points: &DataMatrix, dims: usize) -> Result<DataMatrix> {
    let n = points.rows();
    if !(1..=3).contains(&dims) {
        return Err(Error::invalid("mds: dims must be 1, 2 or 3"));
    }
    if n < dims + 1 {
        return Err(Error::invalid(format!(
            "mds: need at least {} points for {} dimensions, got {}",
            dims + 1,
            dims,
            n
        )));
    }

    let mut d2 = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = la::sq_dist(points.row(i), points.row(j));
            if !d.is_finite() {
                return Err(Error::Numeric("mds: non-finite pairwise distance".into()));
            }
            d2[i * n + j] = d;
            d2[j * n + i] = d;
        }
    }

    // b = -1/2 * J d2 J with J the centering matrix.
    let mut row_mean = vec![0.0; n];
    let mut grand = 0.0;
    for i in 0..n {
        let s: f64 = d2[i * n..(i + 1) * n].iter().sum();
        row_mean[i] = s / n as f64;
        grand += s;
    }
    grand /= (n * n) as f64;
    let mut b = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            b[i * n + j] = -0.5 * (d2[i * n + j] - row_mean[i] - row_mean[j] + grand);
        }
    }

    let (eigenvalues, vectors) = eigh_descending(n, &b)?;
    let mut out = DataMatrix::zeros(n, dims);
    for d in 0..dims {
        let scale = eigenvalues[d].max(0.0).sqrt();
        let axis = vectors.row(d);
        for i in 0..n {
            out.set(i, d, axis[i] * scale);
        }
    }
    Ok(out)
}

/// Euclidean projection onto the standard probability simplex
/// (sort-and-threshold).
pub fn project_simplex(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::invalid("project_simplex: empty vector"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("project_simplex: non-finite entry"));
    }
    let mut out = v.to_vec();
    project_simplex_in_place(&mut out);
    Ok(out)
}

pub(crate) fn project_simplex_in_place(v: &mut [f64]) {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cssv = 0.0;
    let mut rho = 0;
    for (j, &uj) in u.iter().enumerate() {
        cssv += uj;
        if uj - (cssv - 1.0) / (j as f64 + 1.0) > 0.0 {
            rho = j + 1;
        }
    }
    let theta = (u[..rho].iter().sum::<f64>() - 1.0) / rho as f64;
    v.iter_mut().for_each(|x| *x = (*x - theta).max(0.0));
}

/// Bandwidth multipliers of the multiscale Gaussian kernel used by [`mmd`].
pub const MMD_BANDWIDTH_SCALES: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

/// Biased (V-statistic) squared maximum mean discrepancy.
///
/// Kernel: sum of Gaussians `exp(-d^2 / (2 (s*h)^2))` over
/// `s in {1/4, 1/2, 1, 2, 4}`, with `h` the median pairwise Euclidean
/// distance of the pooled sample. `h` falls back to 1 when the pooled
/// sample is degenerate (all points identical).
pub fn mmd(a: &DataMatrix, b: &DataMatrix) -> Result<f64> {
    if a.rows() == 0 || b.rows() == 0 {
        return Err(Error::invalid("mmd: empty sample"));
    }
    if a.cols() != b.cols() {
        return Err(Error::invalid(format!(
            "mmd: feature mismatch {} vs {}",
            a.cols(),
            b.cols()
        )));
    }

    let pooled: Vec<&[f64]> = a.iter_rows().chain(b.iter_rows()).collect();
    let np = pooled.len();
    let mut dists = Vec::with_capacity(np * (np - 1) / 2);
    for i in 0..np {
        for j in (i + 1)..np {
            dists.push(la::sq_dist(pooled[i], pooled[j]).sqrt());
        }
    }
    let h = median_in_place(&mut dists);
    let h = if h > 0.0 { h } else { 1.0 };

    let kernel = |d2: f64| -> f64 {
        MMD_BANDWIDTH_SCALES
            .iter()
            .map(|s| {
                let sigma = s * h;
                (-d2 / (2.0 * sigma * sigma)).exp()
            })
            .sum()
    };

    let sum_block = |x: &DataMatrix, y: &DataMatrix| -> f64 {
        let mut acc = 0.0;
        for xi in x.iter_rows() {
            for yj in y.iter_rows() {
                acc += kernel(la::sq_dist(xi, yj));
            }
        }
        acc
    };

    let na = a.rows() as f64;
    let nb = b.rows() as f64;
    let v = sum_block(a, a) / (na * na) + sum_block(b, b) / (nb * nb)
        - 2.0 * sum_block(a, b) / (na * nb);
    Ok(v.max(0.0))
}

fn median_in_place(xs: &mut [f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Locally weighted linear regression (one pass, tricube weights).
///
/// Each point is smoothed over its `ceil(frac * n)` nearest neighbours in x.
pub fn lowess(x: &[f64], y: &[f64], frac: f64) -> Result<Vec<f64>> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::invalid(format!(
            "lowess: length mismatch {} vs {}",
            n,
            y.len()
        )));
    }
    if n < 3 {
        return Err(Error::invalid("lowess: need at least 3 points"));
    }
    if !(frac > 0.0 && frac <= 1.0) {
        return Err(Error::invalid("lowess: frac must be in (0, 1]"));
    }
    let r = (frac * n as f64).ceil() as usize;
    if r < 2 {
        return Err(Error::invalid("lowess: frac * n must be at least 2"));
    }

    let mut smoothed = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    for i in 0..n {
        let xi = x[i];
        order.sort_by(|&a, &b| {
            let da = (x[a] - xi).abs();
            let db = (x[b] - xi).abs();
            da.partial_cmp(&db).unwrap().then(a.cmp(&b))
        });
        let window = &order[..r];
        let dmax = (x[window[r - 1]] - xi).abs();

        let mut sw = 0.0;
        let mut swx = 0.0;
        let mut swy = 0.0;
        let mut swxx = 0.0;
        let mut swxy = 0.0;
        for &j in window {
            let d = (x[j] - xi).abs();
            let w = if dmax > 0.0 {
                let u = d / dmax;
                if u < 1.0 {
                    (1.0 - u * u * u).powi(3)
                } else {
                    0.0
                }
            } else {
                1.0
            };
            sw += w;
            swx += w * x[j];
            swy += w * y[j];
            swxx += w * x[j] * x[j];
            swxy += w * x[j] * y[j];
        }
        if sw == 0.0 {
            // All neighbours sit exactly at the window edge.
            smoothed[i] = window.iter().map(|&j| y[j]).sum::<f64>() / r as f64;
            continue;
        }
        let mean_x = swx / sw;
        let mean_y = swy / sw;
        let sxx = swxx / sw - mean_x * mean_x;
        let sxy = swxy / sw - mean_x * mean_y;
        smoothed[i] = if sxx.abs() > 1e-12 * (1.0 + mean_x * mean_x) {
            let slope = sxy / sxx;
            mean_y + slope * (xi - mean_x)
        } else {
            mean_y
        };
    }
    Ok(smoothed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedRng;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    // Independent eigensolver for oracles: power iteration with deflation.
    fn power_eigh(n: usize, sym: &[f64], count: usize) -> Vec<(f64, Vec<f64>)> {
        let mut a = sym.to_vec();
        let mut out = Vec::new();
        for c in 0..count {
            let mut v: Vec<f64> = (0..n).map(|i| 1.0 / (i + c + 1) as f64).collect();
            for _ in 0..20_000 {
                let mut av = vec![0.0; n];
                for i in 0..n {
                    for j in 0..n {
                        av[i] += a[i * n + j] * v[j];
                    }
                }
                let norm = av.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm == 0.0 {
                    break;
                }
                av.iter_mut().for_each(|x| *x /= norm);
                v = av;
            }
            let mut av = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    av[i] += a[i * n + j] * v[j];
                }
            }
            let lambda = la::dot(&av, &v);
            for i in 0..n {
                for j in 0..n {
                    a[i * n + j] -= lambda * v[i] * v[j];
                }
            }
            out.push((lambda, v));
        }
        out
    }

    #[test]
    fn eigh_recovers_known_spectrum() {
        // diag(3, 1) rotated by 45 degrees: [[2, 1], [1, 2]].
        let (vals, _) = eigh_descending(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        assert!(approx(vals[0], 3.0, 1e-12));
        assert!(approx(vals[1], 1.0, 1e-12));
    }

    #[test]
    fn eigh_matches_power_iteration_oracle() {
        let mut rng = SeedRng::new(11);
        let m = 6;
        let mut g = vec![0.0; m * m];
        g.iter_mut().for_each(|v| *v = rng.normal());
        // Symmetrize g g^T.
        let mut sym = vec![0.0; m * m];
        la::matmul_at_b(m, m, m, &g, &g, &mut sym);
        let (vals, vecs) = eigh_descending(m, &sym).unwrap();
        let oracle = power_eigh(m, &sym, 3);
        for (i, (lam, vec)) in oracle.iter().enumerate() {
            assert!(approx(vals[i], *lam, 1e-8), "eig {} {} vs {}", i, vals[i], lam);
            let dot = la::dot(vecs.row(i), vec).abs();
            assert!(approx(dot, 1.0, 1e-6), "vector {} alignment {}", i, dot);
        }
    }

    #[test]
    fn pca_on_rank1_line_explains_everything() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let x = DataMatrix::from_rows(rows).unwrap();
        let (proj, rec) = pca_reduce(&x, 1).unwrap();
        assert!(approx(rec.explained_variance_fraction(), 1.0, 1e-12));
        let back = rec.inverse(&proj).unwrap();
        assert!(x.max_abs_diff(&back).unwrap() < 1e-9);
    }

    #[test]
    fn pca_full_rank_is_identity() {
        let mut rng = SeedRng::new(3);
        let rows: Vec<Vec<f64>> =
            (0..50).map(|_| (0..4).map(|_| rng.normal()).collect()).collect();
        let x = DataMatrix::from_rows(rows).unwrap();
        let (proj, rec) = pca_reduce(&x, 4).unwrap();
        let back = rec.inverse(&proj).unwrap();
        assert!(x.max_abs_diff(&back).unwrap() < 1e-9);
    }

    #[test]
    fn pca_known_covariance_fraction_matches_oracle() {
        // 100 points with covariance approximately diag(4, 1, 0.01).
        let sds = [2.0, 1.0, 0.1];
        let mut rng = SeedRng::new(17);
        let rows: Vec<Vec<f64>> = (0..100)
            .map(|_| sds.iter().map(|s| s * rng.normal()).collect())
            .collect();
        let x = DataMatrix::from_rows(rows).unwrap();
        let (_, rec) = pca_reduce(&x, 2).unwrap();

        // Oracle: independent power-iteration eigensolve of the same sample
        // covariance.
        let n = x.rows();
        let m = x.cols();
        let mut mean = vec![0.0; m];
        for row in x.iter_rows() {
            for (j, &v) in row.iter().enumerate() {
                mean[j] += v;
            }
        }
        mean.iter_mut().for_each(|v| *v /= n as f64);
        let mut cov = vec![0.0; m * m];
        for row in x.iter_rows() {
            for i in 0..m {
                for j in 0..m {
                    cov[i * m + j] += (row[i] - mean[i]) * (row[j] - mean[j]);
                }
            }
        }
        cov.iter_mut().for_each(|v| *v /= (n - 1) as f64);
        let oracle = power_eigh(m, &cov, 2);
        let total: f64 = (0..m).map(|i| cov[i * m + i]).sum();
        let oracle_fraction = (oracle[0].0 + oracle[1].0) / total;

        assert!(
            approx(rec.explained_variance_fraction(), oracle_fraction, 1e-9),
            "{} vs oracle {}",
            rec.explained_variance_fraction(),
            oracle_fraction
        );
        // Close to the generating ratio 5/5.01; sampling noise allowed.
        assert!(approx(rec.explained_variance_fraction(), 5.0 / 5.01, 0.05));
    }

    #[test]
    fn pca_rejects_constant_input() {
        let x = DataMatrix::from_rows(vec![vec![1.0, 1.0]; 5]).unwrap();
        assert!(matches!(pca_reduce(&x, 1), Err(Error::Numeric(_))));
    }

    #[test]
    fn pca_rejects_out_of_range_dims() {
        let x = DataMatrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert!(pca_reduce(&x, 0).is_err());
        assert!(pca_reduce(&x, 3).is_err());
    }

    #[test]
    fn mds_equilateral_triangle() {
        // 3 points with mutual distance 1, given in 3-D.
        let h = 3f64.sqrt() / 2.0;
        let pts = DataMatrix::from_rows(vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.5, h, 0.0],
        ])
        .unwrap();
        let coords = classical_mds(&pts, 2).unwrap();
        for i in 0..3 {
            for j in (i + 1)..3 {
                let d = la::sq_dist(coords.row(i), coords.row(j)).sqrt();
                assert!(approx(d, 1.0, 1e-9), "distance {}-{} was {}", i, j, d);
            }
        }
        // Translation-centered output.
        for d in 0..2 {
            let mean: f64 = (0..3).map(|i| coords.get(i, d)).sum::<f64>() / 3.0;
            assert!(mean.abs() < 1e-9);
        }
    }

    #[test]
    fn mds_identical_points_coincide() {
        let pts = DataMatrix::from_rows(vec![vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]])
            .unwrap();
        let coords = classical_mds(&pts, 2).unwrap();
        assert!(la::sq_dist(coords.row(0), coords.row(1)).sqrt() < 1e-9);
    }

    #[test]
    fn mds_tetrahedron_matches_spectral_oracle() {
        // Regular tetrahedron with side 1: vertices at (+-c, +-c, +-c) with an
        // even number of minus signs have edge length 2c*sqrt(2).
        let c = 1.0 / (2.0 * 2f64.sqrt());
        let pts = DataMatrix::from_rows(vec![
            vec![c, c, c],
            vec![c, -c, -c],
            vec![-c, c, -c],
            vec![-c, -c, c],
        ])
        .unwrap();
        let coords = classical_mds(&pts, 2).unwrap();

        // The tetrahedron's centered Gram matrix has a triple-degenerate top
        // eigenvalue, so the rank-2 subspace is not unique. The invariant
        // characterization of "best rank-2 approximation": the output Gram's
        // spectrum equals the top-2 eigenvalues, and the residual energy
        // equals the tail eigenvalue energy. Both checked against an
        // independent power-iteration eigensolve of the centered Gram.
        let n = 4;
        let mut d2 = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d2[i * n + j] = la::sq_dist(pts.row(i), pts.row(j));
            }
        }
        let mut row_mean = vec![0.0; n];
        let mut grand = 0.0;
        for i in 0..n {
            row_mean[i] = d2[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64;
            grand += row_mean[i];
        }
        grand /= n as f64;
        let mut b = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                b[i * n + j] = -0.5 * (d2[i * n + j] - row_mean[i] - row_mean[j] + grand);
            }
        }
        let oracle = power_eigh(n, &b, 4);

        // Gram matrix of the embedded coordinates.
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                g[i * n + j] = la::dot(coords.row(i), coords.row(j));
            }
        }
        let g_eigs = power_eigh(n, &g, 2);
        assert!(approx(g_eigs[0].0, oracle[0].0, 1e-7));
        assert!(approx(g_eigs[1].0, oracle[1].0, 1e-7));

        let resid: f64 = b.iter().zip(&g).map(|(p, q)| (p - q) * (p - q)).sum();
        let tail: f64 = oracle[2].0 * oracle[2].0 + oracle[3].0 * oracle[3].0;
        assert!(approx(resid, tail, 1e-7), "residual {} vs tail energy {}", resid, tail);
    }

    #[test]
    fn mds_rejects_too_few_rows() {
        let pts = DataMatrix::from_rows(vec![vec![0.0], vec![1.0]]).unwrap();
        assert!(classical_mds(&pts, 2).is_err());
    }

    #[test]
    fn simplex_projection_known_cases() {
        assert_eq!(project_simplex(&[0.5, 0.5]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(project_simplex(&[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        let thirds = project_simplex(&[1.0, 1.0, 1.0]).unwrap();
        for v in thirds {
            assert!(approx(v, 1.0 / 3.0, 1e-12));
        }
        assert!(project_simplex(&[]).is_err());
    }

    #[test]
    fn mmd_zero_on_identical_samples() {
        let mut rng = SeedRng::new(2);
        let rows: Vec<Vec<f64>> =
            (0..40).map(|_| (0..3).map(|_| rng.normal()).collect()).collect();
        let x = DataMatrix::from_rows(rows).unwrap();
        assert!(mmd(&x, &x).unwrap() < 1e-12);
    }

    #[test]
    fn mmd_symmetric_and_detects_mean_shift() {
        let mut rng = SeedRng::new(4);
        let draw = |rng: &mut SeedRng, shift: f64, n: usize| {
            DataMatrix::from_rows((0..n).map(|_| vec![rng.normal() + shift]).collect()).unwrap()
        };
        let a = draw(&mut rng, 0.0, 500);
        let b = draw(&mut rng, 5.0, 500);
        let c = draw(&mut rng, 0.0, 500);

        let ab = mmd(&a, &b).unwrap();
        let ba = mmd(&b, &a).unwrap();
        assert!(approx(ab, ba, 1e-12));

        let ac = mmd(&a, &c).unwrap();
        assert!(ab > ac, "separated {} should exceed same-mean {}", ab, ac);

        // Brute-force double-loop oracle with the same kernel definition.
        let pooled: Vec<&[f64]> = a.iter_rows().chain(b.iter_rows()).collect();
        let mut ds = Vec::new();
        for i in 0..pooled.len() {
            for j in (i + 1)..pooled.len() {
                ds.push(la::sq_dist(pooled[i], pooled[j]).sqrt());
            }
        }
        ds.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let h = if ds.len() % 2 == 1 {
            ds[ds.len() / 2]
        } else {
            0.5 * (ds[ds.len() / 2 - 1] + ds[ds.len() / 2])
        };
        let kern = |u: &[f64], v: &[f64]| -> f64 {
            let d2 = la::sq_dist(u, v);
            [0.25, 0.5, 1.0, 2.0, 4.0]
                .iter()
                .map(|s| (-d2 / (2.0 * (s * h) * (s * h))).exp())
                .sum()
        };
        let n_ = a.rows() as f64;
        let mut kaa = 0.0;
        let mut kbb = 0.0;
        let mut kab = 0.0;
        for i in 0..a.rows() {
            for j in 0..a.rows() {
                kaa += kern(a.row(i), a.row(j));
                kbb += kern(b.row(i), b.row(j));
                kab += kern(a.row(i), b.row(j));
            }
        }
        let oracle = kaa / (n_ * n_) + kbb / (n_ * n_) - 2.0 * kab / (n_ * n_);
        assert!(approx(ab, oracle, 1e-10), "{} vs oracle {}", ab, oracle);
    }

    #[test]
    fn mmd_rejects_mismatched_or_empty() {
        let a = DataMatrix::from_rows(vec![vec![0.0, 1.0]]).unwrap();
        let b = DataMatrix::from_rows(vec![vec![0.0]]).unwrap();
        assert!(mmd(&a, &b).is_err());
        let empty = DataMatrix::zeros(0, 2);
        assert!(mmd(&a, &empty).is_err());
    }

    #[test]
    fn lowess_exact_on_linear_data() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 / 10.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 1.0).collect();
        for frac in [0.1, 0.3, 1.0] {
            let s = lowess(&x, &y, frac).unwrap();
            for (a, b) in s.iter().zip(&y) {
                assert!(approx(*a, *b, 1e-8), "frac {}: {} vs {}", frac, a, b);
            }
        }
    }

    #[test]
    fn lowess_constant_stays_constant() {
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let y = vec![4.2; 30];
        let s = lowess(&x, &y, 0.4).unwrap();
        for v in s {
            assert!(approx(v, 4.2, 1e-10));
        }
    }

    #[test]
    fn lowess_matches_independent_reimplementation() {
        // y = x^2 on [0, 1], n = 100, frac = 0.3.
        let n = 100;
        let x: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        let s = lowess(&x, &y, 0.3).unwrap();

        // Direct reimplementation of the same weighting rule.
        let r = (0.3 * n as f64).ceil() as usize;
        for i in 0..n {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| {
                (x[a] - x[i])
                    .abs()
                    .partial_cmp(&(x[b] - x[i]).abs())
                    .unwrap()
                    .then(a.cmp(&b))
            });
            let win = &idx[..r];
            let dmax = (x[win[r - 1]] - x[i]).abs();
            let mut sw = 0.0;
            let mut swx = 0.0;
            let mut swy = 0.0;
            let mut swxx = 0.0;
            let mut swxy = 0.0;
            for &j in win {
                let u = (x[j] - x[i]).abs() / dmax;
                let w = if u < 1.0 { (1.0 - u.powi(3)).powi(3) } else { 0.0 };
                sw += w;
                swx += w * x[j];
                swy += w * y[j];
                swxx += w * x[j] * x[j];
                swxy += w * x[j] * y[j];
            }
            let mx = swx / sw;
            let my = swy / sw;
            let sxx = swxx / sw - mx * mx;
            let sxy = swxy / sw - mx * my;
            let expect = my + (sxy / sxx) * (x[i] - mx);
            assert!(approx(s[i], expect, 1e-12), "i={}: {} vs {}", i, s[i], expect);
        }
    }

    #[test]
    fn lowess_rejects_bad_args() {
        let x = vec![0.0, 1.0, 2.0];
        assert!(lowess(&x, &[0.0, 1.0], 0.5).is_err());
        assert!(lowess(&x, &[0.0, 1.0, 2.0], 0.0).is_err());
        assert!(lowess(&x, &[0.0, 1.0, 2.0], 0.3).is_err()); // frac*n = 0.9 < 2
    }
}
