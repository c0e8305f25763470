//! Quantitative assessment: matched-archetype MSE, mixture MSE, elbow
//! analysis, cross-run reproducibility, archetype signatures, and
//! distance-to-archetype trends.

use crate::aanet::{self, AAnetConfig};
use crate::error::{Error, Result};
use crate::linear_aa::{pcha_fit, PCHAConfig};
use crate::matrix::DataMatrix;
use crate::model::ArchetypalModel;
use crate::numerics::la;
use crate::rng::SeedRng;

/// Result of matching recovered archetypes against ground truth.
#[derive(Debug, Clone)]
pub struct EvalReport {
    /// Mean squared error over all k x m entries under the best permutation.
    pub archetype_mse: f64,
    /// Mixture MSE under the same permutation, when mixtures were compared.
    pub mixture_mse: Option<f64>,
    /// `permutation[i] = j`: recovered archetype i corresponds to truth j.
    pub permutation: Vec<usize>,
    /// Per-archetype MSE under the matching.
    pub per_archetype_errors: Vec<f64>,
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("archetype_mse\t{:.17e}\n", self.archetype_mse));
        if let Some(m) = self.mixture_mse {
            out.push_str(&format!("mixture_mse\t{:.17e}\n", m));
        }
        out.push_str(&format!(
            "permutation\t{}\n",
            self.permutation.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",")
        ));
        for (i, e) in self.per_archetype_errors.iter().enumerate() {
            out.push_str(&format!("archetype_{}_mse\t{:.17e}\n", i, e));
        }
        out
    }
}

/// Exhaustive assignment for small k.
fn best_permutation_exhaustive(cost: &[Vec<f64>]) -> Vec<usize> {
    let k = cost.len();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best_perm = perm.clone();
    let mut best = f64::INFINITY;
    fn recurse(
        perm: &mut Vec<usize>,
        i: usize,
        cost: &[Vec<f64>],
        best: &mut f64,
        best_perm: &mut Vec<usize>,
    ) {
        if i == perm.len() {
            let total: f64 = perm.iter().enumerate().map(|(r, &c)| cost[r][c]).sum();
            if total < *best {
                *best = total;
                best_perm.copy_from_slice(perm);
            }
            return;
        }
        for j in i..perm.len() {
            perm.swap(i, j);
            recurse(perm, i + 1, cost, best, best_perm);
            perm.swap(i, j);
        }
    }
    recurse(&mut perm, 0, cost, &mut best, &mut best_perm);
    best_perm
}

/// Hungarian assignment (shortest augmenting path, O(k^3)) for larger k.
fn best_permutation_hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

const EXHAUSTIVE_MATCH_LIMIT: usize = 8;

/// Find the permutation of recovered archetypes minimizing total squared
/// error against the truth, and report the matched MSE.
pub fn match_archetypes(recovered: &DataMatrix, truth: &DataMatrix) -> Result<EvalReport> {
    if recovered.rows() != truth.rows() || recovered.cols() != truth.cols() {
        return Err(Error::invalid(format!(
            "match: shapes differ ({}x{} vs {}x{})",
            recovered.rows(),
            recovered.cols(),
            truth.rows(),
            truth.cols()
        )));
    }
    let k = recovered.rows();
    let m = recovered.cols();
    if k == 0 {
        return Err(Error::invalid("match: empty archetype matrices"));
    }

    let cost: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| la::sq_dist(recovered.row(i), truth.row(j))).collect())
        .collect();
    let permutation = if k <= EXHAUSTIVE_MATCH_LIMIT {
        best_permutation_exhaustive(&cost)
    } else {
        best_permutation_hungarian(&cost)
    };

    let per_archetype_errors: Vec<f64> = permutation
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i][j] / m as f64)
        .collect();
    let archetype_mse = per_archetype_errors.iter().sum::<f64>() / k as f64;

    Ok(EvalReport { archetype_mse, mixture_mse: None, permutation, per_archetype_errors })
}

/// MSE between mixtures after aligning recovered columns by `permutation`
/// (recovered column i compared against truth column permutation[i]).
pub fn mixture_mse(recovered: &DataMatrix, truth: &DataMatrix, permutation: &[usize]) -> Result<f64> {
    if recovered.rows() != truth.rows() || recovered.cols() != truth.cols() {
        return Err(Error::invalid("mixture_mse: shape mismatch"));
    }
    let k = recovered.cols();
    if permutation.len() != k {
        return Err(Error::invalid("mixture_mse: permutation length mismatch"));
    }
    let mut seen = vec![false; k];
    for &j in permutation {
        if j >= k || seen[j] {
            return Err(Error::invalid("mixture_mse: permutation is not a bijection"));
        }
        seen[j] = true;
    }
    let n = recovered.rows();
    let mut sse = 0.0;
    for r in 0..n {
        for i in 0..k {
            let d = recovered.get(r, i) - truth.get(r, permutation[i]);
            sse += d * d;
        }
    }
    Ok(sse / (n * k) as f64)
}

/// Convenience: match archetypes, then score mixtures under the same
/// permutation.
pub fn evaluate_against_truth(
    recovered_archetypes: &DataMatrix,
    recovered_mixtures: &DataMatrix,
    true_archetypes: &DataMatrix,
    true_mixtures: &DataMatrix,
) -> Result<EvalReport> {
    let mut report = match_archetypes(recovered_archetypes, true_archetypes)?;
    report.mixture_mse = Some(mixture_mse(recovered_mixtures, true_mixtures, &report.permutation)?);
    Ok(report)
}

/// Loss-vs-k curve with the selected knee.
#[derive(Debug, Clone)]
pub struct ElbowCurve {
    pub ks: Vec<usize>,
    pub losses: Vec<f64>,
    pub knee: usize,
}

/// Knee rule: the interior k maximizing the drop ratio
/// `(loss[k-1] - loss[k]) / (loss[k] - loss[k+1] + 1e-12)` over positions.
/// Ties resolve to the first interior k.
pub fn knee_from_losses(ks: &[usize], losses: &[f64]) -> Result<usize> {
    if ks.len() != losses.len() {
        return Err(Error::invalid("knee: ks and losses length mismatch"));
    }
    if ks.len() < 3 {
        return Err(Error::invalid("knee: need at least 3 points"));
    }
    if ks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("knee: ks must be strictly increasing"));
    }
    let mut best_pos = 1;
    let mut best_ratio = f64::NEG_INFINITY;
    for p in 1..ks.len() - 1 {
        let ratio = (losses[p - 1] - losses[p]) / (losses[p] - losses[p + 1] + 1e-12);
        if ratio > best_ratio {
            best_ratio = ratio;
            best_pos = p;
        }
    }
    Ok(ks[best_pos])
}

/// Which fitting method an elbow sweep trains at each k.
#[derive(Debug, Clone)]
pub enum ElbowMethod {
    /// The config's k is overridden per sweep point.
    AAnet(AAnetConfig),
    Pcha(PCHAConfig),
}

/// Converged full-data training loss of one fit.
fn converged_loss(x: &DataMatrix, method: &ElbowMethod, k: usize, seed: u64) -> Result<f64> {
    match method {
        ElbowMethod::AAnet(base) => {
            if k == 1 {
                // A single archetype admits only constant reconstructions;
                // the converged loss is the best constant fit in normalized
                // space, computed directly instead of training a degenerate
                // network.
                return Ok(constant_fit_loss(x, base));
            }
            let config = AAnetConfig { k, seed, ..base.clone() };
            let net = aanet::train(x, &config)?;
            net.total_loss(x)
        }
        ElbowMethod::Pcha(base) => {
            let config = PCHAConfig { k, seed, ..base.clone() };
            let factors = pcha_fit(x, &config)?;
            Ok(*factors.loss_trace.last().unwrap())
        }
    }
}

/// Per-entry variance of the data under the config's normalization: the
/// loss floor of a constant decoder.
fn constant_fit_loss(x: &DataMatrix, config: &AAnetConfig) -> f64 {
    use crate::aanet::FinalActivation;
    let n = x.rows();
    let m = x.cols();
    let mut total = 0.0;
    for j in 0..m {
        let col: Vec<f64> = (0..n).map(|i| x.get(i, j)).collect();
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let scale = match config.final_activation {
            FinalActivation::Tanh => {
                let h = 0.5 * (hi - lo);
                if h > 0.0 {
                    h
                } else {
                    1.0
                }
            }
            FinalActivation::Identity => {
                let s = var.sqrt();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            }
        };
        total += var / (scale * scale);
    }
    total / m as f64
}

/// Train the chosen method at each k (averaging the converged loss over
/// `seeds` sub-seeded runs) and locate the knee.
pub fn elbow_analysis(
    x: &DataMatrix,
    method: &ElbowMethod,
    ks: &[usize],
    seeds: usize,
) -> Result<ElbowCurve> {
    if ks.len() < 3 {
        return Err(Error::invalid("elbow: need at least 3 k values"));
    }
    if seeds == 0 {
        return Err(Error::invalid("elbow: need at least 1 seed"));
    }
    let base_seed = match method {
        ElbowMethod::AAnet(c) => c.seed,
        ElbowMethod::Pcha(c) => c.seed,
    };
    let root = SeedRng::new(base_seed);
    let mut losses = Vec::with_capacity(ks.len());
    for &k in ks {
        let mut acc = 0.0;
        for s in 0..seeds {
            let seed = root.derive((k as u64) << 16 | s as u64).seed();
            acc += converged_loss(x, method, k, seed)?;
        }
        losses.push(acc / seeds as f64);
    }
    let knee = knee_from_losses(ks, &losses)?;
    Ok(ElbowCurve { ks: ks.to_vec(), losses, knee })
}

/// Squared Pearson correlation; `None` when either vector is (numerically)
/// constant.
fn pearson_r2(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va <= 0.0 || vb <= 0.0 {
        return None;
    }
    Some((cov * cov) / (va * vb))
}

/// Welch's unequal-variance t-test. Returns (t, two-sided p).
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::invalid("welch: need at least 2 samples per group"));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let ma = a.iter().sum::<f64>() / na;
    let mb = b.iter().sum::<f64>() / nb;
    let va = a.iter().map(|x| (x - ma) * (x - ma)).sum::<f64>() / (na - 1.0);
    let vb = b.iter().map(|x| (x - mb) * (x - mb)).sum::<f64>() / (nb - 1.0);
    let se2 = va / na + vb / nb;
    if se2 <= 0.0 {
        // Both groups constant: identical means are indistinguishable,
        // different means are separated with certainty.
        return Ok(if ma == mb { (0.0, 1.0) } else { (f64::INFINITY, 0.0) });
    }
    let t = (ma - mb) / se2.sqrt();
    let dof = se2 * se2
        / ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
    let dist = statrs::distribution::StudentsT::new(0.0, 1.0, dof.max(1e-6))
        .map_err(|e| Error::Numeric(format!("welch: t distribution: {}", e)))?;
    use statrs::distribution::ContinuousCDF;
    let p = (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0);
    Ok((t, p))
}

/// Cross-run archetype reproducibility report.
#[derive(Debug, Clone)]
pub struct ReproducibilityReport {
    pub mean_matched_r2: f64,
    pub mean_random_r2: f64,
    pub welch_t: f64,
    pub p_value: f64,
    /// Pairs where a constant vector forced r^2 to the 0 convention.
    pub degenerate_pairs: usize,
}

/// For each pair of consecutive runs, match archetypes and compute squared
/// Pearson correlation per matched pair; the baseline correlates the same
/// archetypes against randomly drawn data rows.
pub fn reproducibility_r2(
    runs: &[DataMatrix],
    data: &DataMatrix,
    rng: &mut SeedRng,
) -> Result<ReproducibilityReport> {
    if runs.len() < 2 {
        return Err(Error::invalid("reproducibility: need at least 2 runs"));
    }
    if data.rows() == 0 {
        return Err(Error::invalid("reproducibility: empty data"));
    }
    let mut matched = Vec::new();
    let mut random = Vec::new();
    let mut degenerate = 0usize;
    for pair in runs.windows(2) {
        let (prev, next) = (&pair[0], &pair[1]);
        let report = match_archetypes(next, prev)?;
        for (i, &j) in report.permutation.iter().enumerate() {
            let r2 = pearson_r2(next.row(i), prev.row(j)).unwrap_or_else(|| {
                degenerate += 1;
                0.0
            });
            matched.push(r2);
            let rand_row = data.row(rng.index(data.rows()));
            let rb = pearson_r2(next.row(i), rand_row).unwrap_or_else(|| {
                degenerate += 1;
                0.0
            });
            random.push(rb);
        }
    }
    let mean_matched_r2 = matched.iter().sum::<f64>() / matched.len() as f64;
    let mean_random_r2 = random.iter().sum::<f64>() / random.len() as f64;
    let (welch_t, p_value) = welch_t_test(&matched, &random)?;
    Ok(ReproducibilityReport { mean_matched_r2, mean_random_r2, welch_t, p_value, degenerate_pairs: degenerate })
}

/// One feature of an archetype's signature.
#[derive(Debug, Clone)]
pub struct FeaturePercentile {
    pub name: String,
    /// Percentile rank (0..100) of the archetype's value within the
    /// feature's empirical distribution.
    pub percentile: f64,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct ArchetypeSignature {
    pub archetype: usize,
    pub features: Vec<FeaturePercentile>,
}

/// Per-archetype ranked feature lists: the percentile of each decoded
/// archetype value within the data's per-feature empirical distribution,
/// keeping the `top` highest-percentile features.
pub fn archetype_signature(
    model: &dyn ArchetypalModel,
    data: &DataMatrix,
    top: usize,
) -> Result<Vec<ArchetypeSignature>> {
    let names = data
        .col_names()
        .ok_or_else(|| Error::invalid("signature: data has no column names"))?
        .to_vec();
    if data.cols() != model.feature_count() {
        return Err(Error::invalid("signature: feature count mismatch"));
    }
    let archetypes = model.archetypes()?;
    let n = data.rows();

    let mut out = Vec::with_capacity(archetypes.rows());
    for a in 0..archetypes.rows() {
        let mut feats: Vec<FeaturePercentile> = (0..data.cols())
            .map(|j| {
                let v = archetypes.get(a, j);
                let count = (0..n).filter(|&i| data.get(i, j) <= v).count();
                FeaturePercentile {
                    name: names[j].clone(),
                    percentile: 100.0 * count as f64 / n as f64,
                    value: v,
                }
            })
            .collect();
        feats.sort_by(|x, y| {
            y.percentile
                .partial_cmp(&x.percentile)
                .unwrap()
                .then_with(|| x.name.cmp(&y.name))
        });
        feats.truncate(top);
        out.push(ArchetypeSignature { archetype: a, features: feats });
    }
    Ok(out)
}

/// Which space per-point archetype distances are measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceSpace {
    /// Euclidean distance between the encoded mixture and the one-hot
    /// archetype vector.
    Latent,
    /// Euclidean distance between the raw point and the decoded archetype.
    Feature,
}

/// Distance of every data point to archetype `index`.
pub fn distance_to_archetype(
    model: &dyn ArchetypalModel,
    data: &DataMatrix,
    index: usize,
    space: DistanceSpace,
) -> Result<Vec<f64>> {
    if index >= model.k() {
        return Err(Error::invalid(format!(
            "distance: archetype index {} out of range (k={})",
            index,
            model.k()
        )));
    }
    match space {
        DistanceSpace::Latent => {
            let mix = model.encode(data)?;
            let k = model.k();
            let mut one_hot = vec![0.0; k];
            one_hot[index] = 1.0;
            Ok((0..mix.rows()).map(|i| la::sq_dist(mix.row(i), &one_hot).sqrt()).collect())
        }
        DistanceSpace::Feature => {
            let arch = model.archetypes()?;
            if data.cols() != arch.cols() {
                return Err(Error::invalid("distance: feature count mismatch"));
            }
            Ok((0..data.rows())
                .map(|i| la::sq_dist(data.row(i), arch.row(index)).sqrt())
                .collect())
        }
    }
}

/// Tightness diagnostic: mean over archetypes of the distance to the
/// nearest data point (feature space). Noisier latent training pulls
/// archetypes toward the data and shrinks this.
pub fn archetype_tightness(model: &dyn ArchetypalModel, data: &DataMatrix) -> Result<f64> {
    let arch = model.archetypes()?;
    if data.cols() != arch.cols() {
        return Err(Error::invalid("tightness: feature count mismatch"));
    }
    if data.rows() == 0 {
        return Err(Error::invalid("tightness: empty data"));
    }
    let mut total = 0.0;
    for a in 0..arch.rows() {
        let nearest = (0..data.rows())
            .map(|i| la::sq_dist(data.row(i), arch.row(a)))
            .fold(f64::INFINITY, f64::min);
        total += nearest.sqrt();
    }
    Ok(total / arch.rows() as f64)
}
