//! Linear and kernelized principal convex hull archetypal analysis.
//!
//! Factors the data as `X ~ mixtures * archetypes` with both factor sets
//! simplex-constrained: archetypes are convex combinations of data points,
//! and every point is a convex combination of archetypes. Fitting is
//! alternating projected gradient descent with backtracking on the exact
//! Frobenius objective.

use crate::aanet::AAnetNetwork;
use crate::error::{Error, Result};
use crate::matrix::DataMatrix;
use crate::numerics::la;
use crate::numerics::project_simplex_in_place;
use crate::rng::{streams, SeedRng};

#[derive(Debug, Clone, PartialEq)]
pub struct PCHAConfig {
    /// Archetype count.
    pub k: usize,
    pub max_iter: usize,
    /// Relative objective-change stopping threshold.
    pub tol: f64,
    /// Hull-relaxation parameter; only 0 is supported.
    pub delta: f64,
    pub seed: u64,
}

impl Default for PCHAConfig {
    fn default() -> Self {
        PCHAConfig { k: 3, max_iter: 2000, tol: 1e-6, delta: 0.0, seed: 0 }
    }
}

impl PCHAConfig {
    pub fn with_k(k: usize) -> Self {
        PCHAConfig { k, ..Default::default() }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("pcha: k must be at least 1"));
        }
        if self.k > n {
            return Err(Error::invalid(format!("pcha: k={} exceeds n={}", self.k, n)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("pcha: tol must be positive"));
        }
        if self.delta != 0.0 {
            return Err(Error::invalid(
                "pcha: nonzero delta hull relaxation is not supported",
            ));
        }
        Ok(())
    }
}

/// Fitted PCHA factors.
///
/// `coeff_w` has columns on the simplex over data points; `mixtures` stores
/// the per-point loadings row-wise (n x k, each row on the simplex), i.e.
/// the transpose of the usual H.
#[derive(Debug, Clone)]
pub struct PCHAFactors {
    pub coeff_w: DataMatrix,
    pub mixtures: DataMatrix,
    /// k x m decoded archetypes (convex combinations of training rows).
    pub archetypes: DataMatrix,
    /// Objective value per accepted outer iteration, non-increasing.
    pub loss_trace: Vec<f64>,
}

impl PCHAFactors {
    pub fn k(&self) -> usize {
        self.archetypes.rows()
    }

    pub fn feature_count(&self) -> usize {
        self.archetypes.cols()
    }
}

fn check_finite(x: &DataMatrix, what: &str) -> Result<()> {
    if x.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::data(format!("{}: non-finite input", what)));
    }
    Ok(())
}

/// Furthest-point start: a seeded random first pick, then greedily the row
/// maximizing the minimum distance to the rows already chosen.
fn furthest_point_rows(x: &DataMatrix, k: usize, rng: &mut SeedRng) -> Vec<usize> {
    let n = x.rows();
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.index(n));
    let mut min_d2: Vec<f64> = (0..n)
        .map(|i| la::sq_dist(x.row(i), x.row(chosen[0])))
        .collect();
    while chosen.len() < k {
        let mut best = 0;
        let mut best_d = -1.0;
        for (i, &d) in min_d2.iter().enumerate() {
            if d > best_d {
                best_d = d;
                best = i;
            }
        }
        chosen.push(best);
        for i in 0..n {
            let d = la::sq_dist(x.row(i), x.row(best));
            if d < min_d2[i] {
                min_d2[i] = d;
            }
        }
    }
    chosen
}

fn project_columns_to_simplex(w: &mut DataMatrix) {
    let (n, k) = (w.rows(), w.cols());
    let mut col = vec![0.0; n];
    for j in 0..k {
        for i in 0..n {
            col[i] = w.get(i, j);
        }
        project_simplex_in_place(&mut col);
        for i in 0..n {
            w.set(i, j, col[i]);
        }
    }
}

fn project_rows_to_simplex(h: &mut DataMatrix) {
    let k = h.cols();
    let mut row = vec![0.0; k];
    for i in 0..h.rows() {
        row.copy_from_slice(h.row(i));
        project_simplex_in_place(&mut row);
        h.row_mut(i).copy_from_slice(&row);
    }
}

const MAX_HALVINGS: usize = 60;

struct FitState {
    coeff_w: DataMatrix,
    mixtures: DataMatrix,
    loss_trace: Vec<f64>,
}

/// Alternating projected gradient on `|| X^T - X^T W H ||_F^2`.
///
/// Gradient steps are taken along the max-abs-normalized gradient so that a
/// unit step moves the largest coordinate by one; backtracking halves the
/// step from 1.0 (reset each outer iteration) until the objective does not
/// increase.
fn fit_factors(x: &DataMatrix, config: &PCHAConfig) -> Result<FitState> {
    let (n, m) = (x.rows(), x.cols());
    let k = config.k;

    // a = x^T, m x n.
    let a = x.transpose();
    let sst = la::frob_sq(a.values());

    let mut pick_rng = SeedRng::new(config.seed).derive(streams::INIT_PICK);
    let starts = furthest_point_rows(x, k, &mut pick_rng);
    let mut w = DataMatrix::zeros(n, k);
    for (j, &i) in starts.iter().enumerate() {
        w.set(i, j, 1.0);
    }
    let mut ht = DataMatrix::zeros(n, k);
    ht.values_mut().iter_mut().for_each(|v| *v = 1.0 / k as f64);

    let mut b = a.matmul(&w)?; // m x k
    let mut sse = {
        let aht = a.matmul(&ht)?;
        let mut btb = vec![0.0; k * k];
        la::matmul_at_b(m, k, k, b.values(), b.values(), &mut btb);
        let mut hth = vec![0.0; k * k];
        la::matmul_at_b(n, k, k, ht.values(), ht.values(), &mut hth);
        sst - 2.0 * la::dot(aht.values(), b.values()) + la::dot(&btb, &hth)
    };

    let mut loss_trace = vec![sse];

    for _ in 0..config.max_iter {
        let sse_before = sse;

        // W step: gradient -2 A^T (A Ht - B (Ht^T Ht)).
        {
            let aht = a.matmul(&ht)?; // m x k
            let mut hth = vec![0.0; k * k];
            la::matmul_at_b(n, k, k, ht.values(), ht.values(), &mut hth);
            let hth_m = DataMatrix::new(k, k, hth.clone())?;
            let b_hth = b.matmul(&hth_m)?;
            let mut resid = aht.clone();
            for (r, v) in resid.values_mut().iter_mut().zip(b_hth.values()) {
                *r -= v;
            }
            let mut grad = vec![0.0; n * k];
            la::matmul_at_b(m, n, k, a.values(), resid.values(), &mut grad);
            grad.iter_mut().for_each(|g| *g *= -2.0);
            let gmax = grad.iter().fold(0.0f64, |acc, g| acc.max(g.abs()));

            if gmax > 0.0 {
                let mut mu = 1.0;
                for _ in 0..MAX_HALVINGS {
                    let mut cand = w.clone();
                    let scale = mu / gmax;
                    for (c, g) in cand.values_mut().iter_mut().zip(&grad) {
                        *c -= scale * g;
                    }
                    project_columns_to_simplex(&mut cand);
                    let b_cand = a.matmul(&cand)?;
                    let mut btb = vec![0.0; k * k];
                    la::matmul_at_b(m, k, k, b_cand.values(), b_cand.values(), &mut btb);
                    let cand_sse = sst - 2.0 * la::dot(aht.values(), b_cand.values())
                        + la::dot(&btb, &hth);
                    if cand_sse <= sse {
                        w = cand;
                        b = b_cand;
                        sse = cand_sse;
                        break;
                    }
                    mu *= 0.5;
                }
            }
        }

        // H step: gradient -2 (A^T B - Ht (B^T B)).
        {
            let mut atb = vec![0.0; n * k];
            la::matmul_at_b(m, n, k, a.values(), b.values(), &mut atb);
            let mut btb = vec![0.0; k * k];
            la::matmul_at_b(m, k, k, b.values(), b.values(), &mut btb);
            let btb_m = DataMatrix::new(k, k, btb.clone())?;
            let ht_btb = ht.matmul(&btb_m)?;
            let mut grad = vec![0.0; n * k];
            for i in 0..n * k {
                grad[i] = -2.0 * (atb[i] - ht_btb.values()[i]);
            }
            let gmax = grad.iter().fold(0.0f64, |acc, g| acc.max(g.abs()));

            if gmax > 0.0 {
                let mut mu = 1.0;
                for _ in 0..MAX_HALVINGS {
                    let mut cand = ht.clone();
                    let scale = mu / gmax;
                    for (c, g) in cand.values_mut().iter_mut().zip(&grad) {
                        *c -= scale * g;
                    }
                    project_rows_to_simplex(&mut cand);
                    let mut cth = vec![0.0; k * k];
                    la::matmul_at_b(n, k, k, cand.values(), cand.values(), &mut cth);
                    let cand_sse =
                        sst - 2.0 * la::dot(&atb, cand.values()) + la::dot(&btb, &cth);
                    if cand_sse <= sse {
                        ht = cand;
                        sse = cand_sse;
                        break;
                    }
                    mu *= 0.5;
                }
            }
        }

        loss_trace.push(sse);
        let change = (sse_before - sse).abs();
        if change < config.tol * sse_before.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }

    Ok(FitState { coeff_w: w, mixtures: ht, loss_trace })
}

fn decode_archetypes(x: &DataMatrix, coeff_w: &DataMatrix) -> DataMatrix {
    let (n, m) = (x.rows(), x.cols());
    let k = coeff_w.cols();
    let mut archetypes = DataMatrix::zeros(k, m);
    la::matmul_at_b(n, k, m, coeff_w.values(), x.values(), archetypes.values_mut());
    archetypes
}

/// Fit PCHA to the rows of `x`.
pub fn pcha_fit(x: &DataMatrix, config: &PCHAConfig) -> Result<PCHAFactors> {
    config.validate(x.rows())?;
    check_finite(x, "pcha")?;
    let state = fit_factors(x, config)?;
    let archetypes = decode_archetypes(x, &state.coeff_w);
    Ok(PCHAFactors {
        coeff_w: state.coeff_w,
        mixtures: state.mixtures,
        archetypes,
        loss_trace: state.loss_trace,
    })
}

/// Per-point simplex-constrained least squares against fixed archetypes.
/// Rows of the result sum to 1.
pub fn pcha_transform(factors: &PCHAFactors, x: &DataMatrix) -> Result<DataMatrix> {
    transform_against(&factors.archetypes, x)
}

pub(crate) fn transform_against(archetypes: &DataMatrix, x: &DataMatrix) -> Result<DataMatrix> {
    let k = archetypes.rows();
    let m = archetypes.cols();
    if x.cols() != m {
        return Err(Error::invalid(format!(
            "transform: data has {} features, archetypes have {}",
            x.cols(),
            m
        )));
    }
    check_finite(x, "transform")?;

    // Projected gradient with fixed step 1/L, L bounded by the Frobenius
    // norm of the archetype Gram matrix.
    let mut gram = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            gram[i * k + j] = la::dot(archetypes.row(i), archetypes.row(j));
        }
    }
    let gnorm = la::frob_sq(&gram).sqrt();

    let n = x.rows();
    let mut out = DataMatrix::zeros(n, k);
    let mut h = vec![0.0; k];
    let mut grad = vec![0.0; k];
    for i in 0..n {
        let xi = x.row(i);
        let c: Vec<f64> = (0..k).map(|j| la::dot(archetypes.row(j), xi)).collect();
        h.iter_mut().for_each(|v| *v = 1.0 / k as f64);
        if gnorm > 0.0 {
            let step = 1.0 / gnorm;
            let mut prev = vec![0.0; k];
            for _ in 0..20_000 {
                prev.copy_from_slice(&h);
                for r in 0..k {
                    grad[r] = la::dot(&gram[r * k..(r + 1) * k], &h) - c[r];
                }
                for r in 0..k {
                    h[r] -= step * grad[r];
                }
                project_simplex_in_place(&mut h);
                let moved = h
                    .iter()
                    .zip(&prev)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                if moved < 1e-13 {
                    break;
                }
            }
        }
        out.row_mut(i).copy_from_slice(&h);
    }
    Ok(out)
}

/// Kernel choice for [`kernel_pcha_fit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Linear,
    Rbf { sigma: f64 },
}

impl Kernel {
    /// RBF width set to the standard deviation of all entries of `x`.
    pub fn rbf_from_std(x: &DataMatrix) -> Kernel {
        let vals = x.values();
        let n = vals.len().max(1) as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Kernel::Rbf { sigma: var.sqrt().max(f64::MIN_POSITIVE) }
    }
}

fn gram_matrix(x: &DataMatrix, kernel: Kernel) -> Result<DataMatrix> {
    let n = x.rows();
    let mut gram = DataMatrix::zeros(n, n);
    match kernel {
        Kernel::Linear => {
            for i in 0..n {
                for j in i..n {
                    let v = la::dot(x.row(i), x.row(j));
                    gram.set(i, j, v);
                    gram.set(j, i, v);
                }
            }
        }
        Kernel::Rbf { sigma } => {
            if !(sigma > 0.0) {
                return Err(Error::invalid("kernel pcha: rbf sigma must be positive"));
            }
            for i in 0..n {
                for j in i..n {
                    let v = (-la::sq_dist(x.row(i), x.row(j)) / sigma).exp();
                    gram.set(i, j, v);
                    gram.set(j, i, v);
                }
            }
        }
    }
    Ok(gram)
}

/// PCHA on the kernel-transformed representation (Gram matrix rows as
/// features). Archetypes are decoded back to input space as the
/// coeff_w-weighted convex combination of the original rows, so no kernel
/// preimage problem arises.
pub fn kernel_pcha_fit(x: &DataMatrix, config: &PCHAConfig, kernel: Kernel) -> Result<PCHAFactors> {
    config.validate(x.rows())?;
    check_finite(x, "kernel pcha")?;
    let gram = gram_matrix(x, kernel)?;
    let state = fit_factors(&gram, config)?;
    let archetypes = decode_archetypes(x, &state.coeff_w);
    Ok(PCHAFactors {
        coeff_w: state.coeff_w,
        mixtures: state.mixtures,
        archetypes,
        loss_trace: state.loss_trace,
    })
}

/// PCHA fit in the latent space of a trained plain autoencoder, with
/// archetypes decoded back to feature space through the decoder.
#[derive(Debug, Clone)]
pub struct PchaOnAe {
    /// The autoencoder providing the latent space.
    pub ae: AAnetNetwork,
    /// Factors over the latent codes; archetypes are k x latent_width.
    pub latent: PCHAFactors,
    /// Latent archetypes pushed through the decoder, k x m.
    pub archetypes: DataMatrix,
}

pub fn pcha_on_ae(x: &DataMatrix, ae: &AAnetNetwork, config: &PCHAConfig) -> Result<PchaOnAe> {
    if !ae.is_trained() {
        return Err(Error::invalid("pcha_on_ae: autoencoder is not trained"));
    }
    let codes = ae.encode(x)?;
    let latent = pcha_fit(&codes, config)?;
    let archetypes = ae.decode(&latent.archetypes)?;
    Ok(PchaOnAe { ae: ae.clone(), latent, archetypes })
}

impl PchaOnAe {
    pub fn k(&self) -> usize {
        self.latent.k()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_simplex_highdim, gen_triangle_on_sphere, MixtureBias};

    fn best_perm_mse(recovered: &DataMatrix, truth: &DataMatrix) -> f64 {
        // Brute-force permutation matching, small k only.
        let k = truth.rows();
        let m = truth.cols();
        let mut perm: Vec<usize> = (0..k).collect();
        let mut best = f64::INFINITY;
        permute(&mut perm, 0, &mut |p| {
            let mut sse = 0.0;
            for (i, &j) in p.iter().enumerate() {
                sse += la::sq_dist(recovered.row(i), truth.row(j));
            }
            best = best.min(sse / (k * m) as f64);
        });
        best
    }

    fn permute(p: &mut Vec<usize>, i: usize, f: &mut impl FnMut(&[usize])) {
        if i == p.len() {
            f(p);
            return;
        }
        for j in i..p.len() {
            p.swap(i, j);
            permute(p, i + 1, f);
            p.swap(i, j);
        }
    }

    #[test]
    fn three_vertices_recovered_exactly() {
        let x = DataMatrix::from_rows(vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
        ])
        .unwrap();
        let factors = pcha_fit(&x, &PCHAConfig::with_k(3)).unwrap();
        assert!(best_perm_mse(&factors.archetypes, &x) < 1e-8);
        assert!(*factors.loss_trace.last().unwrap() < 1e-8);
        // Mixtures one-hot after permutation.
        for i in 0..3 {
            let row = factors.mixtures.row(i);
            let max = row.iter().cloned().fold(0.0f64, f64::max);
            assert!(max > 0.999, "row {:?}", row);
        }
    }

    #[test]
    fn segment_endpoints_found() {
        let mut rng = SeedRng::new(12);
        let rows: Vec<Vec<f64>> = (0..500).map(|_| vec![rng.uniform(), 0.0]).collect();
        let x = DataMatrix::from_rows(rows).unwrap();
        let factors = pcha_fit(&x, &PCHAConfig { k: 2, seed: 1, ..Default::default() }).unwrap();
        let truth =
            DataMatrix::from_rows(vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert!(best_perm_mse(&factors.archetypes, &truth) < 0.05 * 0.05);

        let mid = DataMatrix::from_rows(vec![vec![0.5, 0.0]]).unwrap();
        let mix = pcha_transform(&factors, &mid).unwrap();
        assert!((mix.get(0, 0) - 0.5).abs() < 0.05, "{:?}", mix.row(0));
    }

    #[test]
    fn flat_triangle_matched_mse_small() {
        let mut rng = SeedRng::new(7);
        let ds = gen_triangle_on_sphere(2000, 1e6, &mut rng).unwrap();
        let factors = pcha_fit(&ds.points, &PCHAConfig { k: 3, seed: 3, ..Default::default() })
            .unwrap();
        let mse = best_perm_mse(&factors.archetypes, &ds.true_archetypes);
        assert!(mse < 0.01, "matched archetype mse {}", mse);
    }

    #[test]
    fn transform_one_hot_and_midpoint() {
        let x = DataMatrix::from_rows(vec![
            vec![0.0, 0.0],
            vec![2.0, 0.0],
            vec![0.0, 2.0],
        ])
        .unwrap();
        let factors = pcha_fit(&x, &PCHAConfig::with_k(3)).unwrap();

        let mix = pcha_transform(&factors, &x).unwrap();
        for i in 0..3 {
            let max = mix.row(i).iter().cloned().fold(0.0f64, f64::max);
            assert!(max > 1.0 - 1e-3, "one-hot failed: {:?}", mix.row(i));
            let sum: f64 = mix.row(i).iter().sum();
            assert!((sum - 1.0).abs() < 1e-8);
        }

        // Midpoint of two archetypes.
        let a0 = factors.archetypes.row(0).to_vec();
        let a1 = factors.archetypes.row(1).to_vec();
        let mid: Vec<f64> = a0.iter().zip(&a1).map(|(p, q)| 0.5 * (p + q)).collect();
        let mix = pcha_transform(&factors, &DataMatrix::from_rows(vec![mid]).unwrap()).unwrap();
        let mut sorted = mix.row(0).to_vec();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!((sorted[0] - 0.5).abs() < 1e-2 && (sorted[1] - 0.5).abs() < 1e-2);
    }

    #[test]
    fn transform_matches_barycentric_oracle() {
        // Known 2-simplex in the plane; barycentric coordinates by direct
        // linear solve are the oracle.
        let v = [[0.0, 0.0], [3.0, 0.5], [1.0, 2.5]];
        let truth_mix = [0.2, 0.5, 0.3];
        let p = [
            truth_mix[0] * v[0][0] + truth_mix[1] * v[1][0] + truth_mix[2] * v[2][0],
            truth_mix[0] * v[0][1] + truth_mix[1] * v[1][1] + truth_mix[2] * v[2][1],
        ];

        // Oracle: solve the 2x2 affine system for barycentric coordinates.
        let d = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1])
            - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
        let b1 = ((p[0] - v[0][0]) * (v[2][1] - v[0][1])
            - (v[2][0] - v[0][0]) * (p[1] - v[0][1]))
            / d;
        let b2 = ((v[1][0] - v[0][0]) * (p[1] - v[0][1])
            - (p[0] - v[0][0]) * (v[1][1] - v[0][1]))
            / d;
        let oracle = [1.0 - b1 - b2, b1, b2];

        let factors = PCHAFactors {
            coeff_w: DataMatrix::zeros(3, 3),
            mixtures: DataMatrix::zeros(3, 3),
            archetypes: DataMatrix::from_rows(v.iter().map(|r| r.to_vec()).collect()).unwrap(),
            loss_trace: vec![],
        };
        let mix = pcha_transform(&factors, &DataMatrix::from_rows(vec![p.to_vec()]).unwrap())
            .unwrap();
        for j in 0..3 {
            assert!(
                (mix.get(0, j) - oracle[j]).abs() < 1e-3,
                "{:?} vs oracle {:?}",
                mix.row(0),
                oracle
            );
        }
    }

    #[test]
    fn kernel_linear_close_to_plain_on_simplex_data() {
        let mut rng = SeedRng::new(20);
        let ds = gen_simplex_highdim(400, 3, 5, None, MixtureBias::Uniform, &mut rng).unwrap();
        let cfg = PCHAConfig { k: 3, seed: 5, ..Default::default() };
        let plain = pcha_fit(&ds.points, &cfg).unwrap();
        let kern = kernel_pcha_fit(&ds.points, &cfg, Kernel::Linear).unwrap();
        let mse = best_perm_mse(&kern.archetypes, &plain.archetypes);
        assert!(mse < 0.02, "kernel vs plain archetype mse {}", mse);
    }

    #[test]
    fn kernel_rbf_returns_valid_factors() {
        let mut rng = SeedRng::new(21);
        let ds = gen_simplex_highdim(150, 3, 4, None, MixtureBias::Uniform, &mut rng).unwrap();
        let kernel = Kernel::rbf_from_std(&ds.points);
        let factors = kernel_pcha_fit(
            &ds.points,
            &PCHAConfig { k: 3, max_iter: 300, seed: 2, ..Default::default() },
            kernel,
        )
        .unwrap();
        // Simplex invariants on both factor sets.
        for j in 0..3 {
            let col: f64 = (0..150).map(|i| factors.coeff_w.get(i, j)).sum();
            assert!((col - 1.0).abs() < 1e-8, "coeff col sum {}", col);
            assert!((0..150).all(|i| factors.coeff_w.get(i, j) >= -1e-10));
        }
        for i in 0..150 {
            let s: f64 = factors.mixtures.row(i).iter().sum();
            assert!((s - 1.0).abs() < 1e-8);
            assert!(factors.mixtures.row(i).iter().all(|&v| v >= -1e-10));
        }
    }

    #[test]
    fn repeated_point_single_archetype() {
        let x = DataMatrix::from_rows(vec![vec![2.5, -1.0]; 40]).unwrap();
        let factors = pcha_fit(&x, &PCHAConfig::with_k(1)).unwrap();
        assert!((factors.archetypes.get(0, 0) - 2.5).abs() < 1e-12);
        assert!((factors.archetypes.get(0, 1) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn loss_trace_non_increasing_and_deterministic() {
        let mut rng = SeedRng::new(30);
        let ds = gen_simplex_highdim(200, 4, 6, None, MixtureBias::Uniform, &mut rng).unwrap();
        let cfg = PCHAConfig { k: 4, seed: 9, max_iter: 200, ..Default::default() };
        let f1 = pcha_fit(&ds.points, &cfg).unwrap();
        let f2 = pcha_fit(&ds.points, &cfg).unwrap();
        assert_eq!(f1.loss_trace, f2.loss_trace);
        assert_eq!(f1.archetypes.values(), f2.archetypes.values());
        for w in f1.loss_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "trace increased: {} -> {}", w[0], w[1]);
        }
        // Decoded archetypes are convex combinations of the data by
        // construction; the coefficients must be valid simplex points.
        for j in 0..4 {
            let col: f64 = (0..200).map(|i| f1.coeff_w.get(i, j)).sum();
            assert!((col - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let x = DataMatrix::from_rows(vec![vec![0.0], vec![1.0]]).unwrap();
        assert!(pcha_fit(&x, &PCHAConfig::with_k(3)).is_err());
        assert!(pcha_fit(&x, &PCHAConfig { k: 1, delta: 0.1, ..Default::default() }).is_err());
        let bad = DataMatrix::from_rows(vec![vec![f64::INFINITY], vec![0.0]]).unwrap();
        assert!(pcha_fit(&bad, &PCHAConfig::with_k(1)).is_err());
    }
}
