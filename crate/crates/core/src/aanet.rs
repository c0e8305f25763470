//! Autoencoder whose latent layer encodes each point as a convex combination
//! of k archetypes.
//!
//! The encoder produces k-1 free coordinates; a virtual node supplies the
//! k-th as one minus their sum, so every code sums to one by construction.
//! Two soft penalties (non-negativity and a unit bound on the L1 norm of the
//! free coordinates) push the codes into the simplex, and optional Gaussian
//! noise on the latent layer during training pulls the archetypes toward the
//! data. Training is plain minibatch Adam over a manually differentiated
//! loss; everything is f64 and bit-reproducible under a fixed seed.

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;
use crate::numerics::la;
use crate::rng::{streams, SeedRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FinalActivation {
    Tanh,
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AAnetConfig {
    /// Archetype count, at least 2.
    pub k: usize,
    /// Hidden layer widths of the encoder.
    pub encoder_hidden: Vec<usize>,
    /// Hidden layer widths of the decoder (mirror of the encoder by default).
    pub decoder_hidden: Vec<usize>,
    /// Latent Gaussian noise standard deviation (training only).
    pub sigma: f64,
    /// Weight of the L1-bound penalty.
    pub lambda_sum: f64,
    /// Weight of the non-negativity penalty.
    pub lambda_nonneg: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Epoch cap; training stops at whichever of the two budgets hits first.
    pub max_epochs: usize,
    /// Adam step cap.
    pub max_steps: usize,
    /// Final decoder activation; selects the input normalization scheme
    /// (min-max to [-1,1] for tanh, z-score for identity).
    pub final_activation: FinalActivation,
    pub seed: u64,
}

impl Default for AAnetConfig {
    fn default() -> Self {
        AAnetConfig {
            k: 2,
            encoder_hidden: vec![256, 128, 64, 32],
            decoder_hidden: vec![32, 64, 128, 256],
            sigma: 0.05,
            lambda_sum: 1.0,
            lambda_nonneg: 1.0,
            batch_size: 256,
            learning_rate: 1e-3,
            max_epochs: 200,
            max_steps: 20_000,
            final_activation: FinalActivation::Tanh,
            seed: 0,
        }
    }
}

impl AAnetConfig {
    pub fn with_k(k: usize) -> Self {
        AAnetConfig { k, ..Default::default() }
    }

    /// Full-size hidden widths.
    pub fn paper_scale(mut self) -> Self {
        self.encoder_hidden = vec![1024, 512, 256, 128];
        self.decoder_hidden = vec![128, 256, 512, 1024];
        self
    }

    /// Small widths for sweeps where many models are trained.
    pub fn compact(mut self) -> Self {
        self.encoder_hidden = vec![64, 32];
        self.decoder_hidden = vec![32, 64];
        self
    }

    fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::invalid("aanet: k must be at least 2"));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::invalid("aanet: sigma must be non-negative"));
        }
        if !(self.lambda_sum >= 0.0 && self.lambda_nonneg >= 0.0) {
            return Err(Error::invalid("aanet: penalty weights must be non-negative"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("aanet: batch_size must be at least 1"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::invalid("aanet: learning rate must be positive"));
        }
        if self.encoder_hidden.iter().chain(&self.decoder_hidden).any(|&w| w == 0) {
            return Err(Error::invalid("aanet: hidden widths must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Activation {
    LeakyRelu,
    Identity,
    Tanh,
}

const LEAKY_SLOPE: f64 = 0.2;

impl Activation {
    #[inline]
    fn apply(self, s: f64) -> f64 {
        match self {
            Activation::LeakyRelu => {
                if s > 0.0 {
                    s
                } else {
                    LEAKY_SLOPE * s
                }
            }
            Activation::Identity => s,
            Activation::Tanh => s.tanh(),
        }
    }

    /// Derivative given the pre-activation.
    #[inline]
    fn derivative(self, s: f64) -> f64 {
        match self {
            Activation::LeakyRelu => {
                if s > 0.0 {
                    1.0
                } else {
                    LEAKY_SLOPE
                }
            }
            Activation::Identity => 1.0,
            Activation::Tanh => {
                let t = s.tanh();
                1.0 - t * t
            }
        }
    }
}

/// One dense layer, weights stored row-major out x in.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Dense {
    pub(crate) w: Vec<f64>,
    pub(crate) b: Vec<f64>,
    pub(crate) in_dim: usize,
    pub(crate) out_dim: usize,
    act: Activation,
}

impl Dense {
    fn glorot(in_dim: usize, out_dim: usize, act: Activation, rng: &mut SeedRng) -> Dense {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let w = (0..in_dim * out_dim)
            .map(|_| rng.uniform_range(-limit, limit))
            .collect();
        Dense { w, b: vec![0.0; out_dim], in_dim, out_dim, act }
    }

    /// s = x W^T + b; returns (pre-activations, activations), each rows x out.
    fn forward(&self, rows: usize, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut s = vec![0.0; rows * self.out_dim];
        for r in 0..rows {
            let xrow = &x[r * self.in_dim..(r + 1) * self.in_dim];
            let srow = &mut s[r * self.out_dim..(r + 1) * self.out_dim];
            for o in 0..self.out_dim {
                srow[o] = self.b[o] + la::dot(&self.w[o * self.in_dim..(o + 1) * self.in_dim], xrow);
            }
        }
        let a = s.iter().map(|&v| self.act.apply(v)).collect();
        (s, a)
    }
}

/// Per-feature normalization fitted on the training data.
#[derive(Debug, Clone, PartialEq)]
pub enum Normalization {
    /// Maps each feature to [-1, 1]; constant features map to 0.
    MinMax { center: Vec<f64>, half_range: Vec<f64> },
    /// Zero mean, unit standard deviation; constant features map to 0.
    ZScore { mean: Vec<f64>, std: Vec<f64> },
}

impl Normalization {
    fn fit(x: &DataMatrix, activation: FinalActivation) -> Normalization {
        let m = x.cols();
        match activation {
            FinalActivation::Tanh => {
                let mut lo = vec![f64::INFINITY; m];
                let mut hi = vec![f64::NEG_INFINITY; m];
                for row in x.iter_rows() {
                    for j in 0..m {
                        lo[j] = lo[j].min(row[j]);
                        hi[j] = hi[j].max(row[j]);
                    }
                }
                let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
                let half_range: Vec<f64> = lo
                    .iter()
                    .zip(&hi)
                    .map(|(a, b)| {
                        let h = 0.5 * (b - a);
                        if h > 0.0 {
                            h
                        } else {
                            1.0
                        }
                    })
                    .collect();
                Normalization::MinMax { center, half_range }
            }
            FinalActivation::Identity => {
                let n = x.rows() as f64;
                let mut mean = vec![0.0; m];
                for row in x.iter_rows() {
                    for j in 0..m {
                        mean[j] += row[j];
                    }
                }
                mean.iter_mut().for_each(|v| *v /= n);
                let mut var = vec![0.0; m];
                for row in x.iter_rows() {
                    for j in 0..m {
                        var[j] += (row[j] - mean[j]) * (row[j] - mean[j]);
                    }
                }
                let std: Vec<f64> = var
                    .iter()
                    .map(|v| {
                        let s = (v / n).sqrt();
                        if s > 0.0 {
                            s
                        } else {
                            1.0
                        }
                    })
                    .collect();
                Normalization::ZScore { mean, std }
            }
        }
    }

    pub fn feature_count(&self) -> usize {
        match self {
            Normalization::MinMax { center, .. } => center.len(),
            Normalization::ZScore { mean, .. } => mean.len(),
        }
    }

    fn apply(&self, x: &DataMatrix) -> DataMatrix {
        let mut out = x.clone();
        let m = x.cols();
        match self {
            Normalization::MinMax { center, half_range } => {
                for i in 0..out.rows() {
                    let row = out.row_mut(i);
                    for j in 0..m {
                        row[j] = (row[j] - center[j]) / half_range[j];
                    }
                }
            }
            Normalization::ZScore { mean, std } => {
                for i in 0..out.rows() {
                    let row = out.row_mut(i);
                    for j in 0..m {
                        row[j] = (row[j] - mean[j]) / std[j];
                    }
                }
            }
        }
        out
    }

    fn invert(&self, x: &DataMatrix) -> DataMatrix {
        let mut out = x.clone();
        let m = x.cols();
        match self {
            Normalization::MinMax { center, half_range } => {
                for i in 0..out.rows() {
                    let row = out.row_mut(i);
                    for j in 0..m {
                        row[j] = row[j] * half_range[j] + center[j];
                    }
                }
            }
            Normalization::ZScore { mean, std } => {
                for i in 0..out.rows() {
                    let row = out.row_mut(i);
                    for j in 0..m {
                        row[j] = row[j] * std[j] + mean[j];
                    }
                }
            }
        }
        out
    }
}

/// The per-sample archetypal penalties on the k-1 free latent coordinates.
///
/// `sum_penalty = max(0, sum_j |e_j| - 1)`,
/// `nonneg_penalty = sum_j max(0, -e_j)`.
pub fn archetypal_penalty(eprime: &[f64]) -> (f64, f64) {
    let l1: f64 = eprime.iter().map(|v| v.abs()).sum();
    let sum_penalty = (l1 - 1.0).max(0.0);
    let nonneg_penalty = eprime.iter().map(|v| (-v).max(0.0)).sum();
    (sum_penalty, nonneg_penalty)
}

/// Trained (or freshly initialized) archetypal autoencoder.
#[derive(Debug, Clone)]
pub struct AAnetNetwork {
    config: AAnetConfig,
    norm: Normalization,
    encoder: Vec<Dense>,
    decoder: Vec<Dense>,
    loss_trace: Vec<f64>,
    trained: bool,
}

struct ForwardCache {
    /// Per encoder layer: (input, pre-activations).
    enc: Vec<(Vec<f64>, Vec<f64>)>,
    eprime: Vec<f64>,
    dec: Vec<(Vec<f64>, Vec<f64>)>,
    xhat: Vec<f64>,
}

impl AAnetNetwork {
    /// Build a randomly initialized (untrained) network for `feature_count`
    /// input features. Weight init is Glorot uniform under the config seed.
    pub fn initialized(feature_count: usize, config: &AAnetConfig) -> Result<AAnetNetwork> {
        config.validate()?;
        if feature_count == 0 {
            return Err(Error::invalid("aanet: need at least one feature"));
        }
        let last_enc = *config.encoder_hidden.last().unwrap_or(&feature_count);
        if config.k - 1 >= last_enc {
            return Err(Error::invalid(format!(
                "aanet: k-1={} must be smaller than the last encoder width {}",
                config.k - 1,
                last_enc
            )));
        }

        let mut rng = SeedRng::new(config.seed).derive(streams::WEIGHT_INIT);
        let mut encoder = Vec::new();
        let mut prev = feature_count;
        for &w in &config.encoder_hidden {
            encoder.push(Dense::glorot(prev, w, Activation::LeakyRelu, &mut rng));
            prev = w;
        }
        // The map immediately before the latent layer is linear.
        encoder.push(Dense::glorot(prev, config.k - 1, Activation::Identity, &mut rng));

        let mut decoder = Vec::new();
        let mut prev = config.k;
        for (i, &w) in config.decoder_hidden.iter().enumerate() {
            // The map immediately after the latent layer is linear too.
            let act = if i == 0 { Activation::Identity } else { Activation::LeakyRelu };
            decoder.push(Dense::glorot(prev, w, act, &mut rng));
            prev = w;
        }
        let final_act = match config.final_activation {
            FinalActivation::Tanh => Activation::Tanh,
            FinalActivation::Identity => Activation::Identity,
        };
        decoder.push(Dense::glorot(prev, feature_count, final_act, &mut rng));

        Ok(AAnetNetwork {
            config: config.clone(),
            // Placeholder identity normalization until the network is fitted.
            norm: Normalization::ZScore {
                mean: vec![0.0; feature_count],
                std: vec![1.0; feature_count],
            },
            encoder,
            decoder,
            loss_trace: Vec::new(),
            trained: false,
        })
    }

    pub fn config(&self) -> &AAnetConfig {
        &self.config
    }

    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn feature_count(&self) -> usize {
        self.norm.feature_count()
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub fn loss_trace(&self) -> &[f64] {
        &self.loss_trace
    }

    pub fn normalization(&self) -> &Normalization {
        &self.norm
    }

    fn check_features(&self, x: &DataMatrix) -> Result<()> {
        if x.cols() != self.feature_count() {
            return Err(Error::invalid(format!(
                "aanet: input has {} features, network expects {}",
                x.cols(),
                self.feature_count()
            )));
        }
        Ok(())
    }

    /// Encoder forward to the k-1 free coordinates, normalized input.
    fn encode_free_norm(&self, rows: usize, x_norm: &[f64]) -> Vec<f64> {
        let mut a = x_norm.to_vec();
        for layer in &self.encoder {
            let (_, act) = layer.forward(rows, &a);
            a = act;
        }
        a
    }

    /// Mixtures for each row of `x`: rows sum to 1 exactly by the virtual
    /// node; no noise at inference.
    pub fn encode(&self, x: &DataMatrix) -> Result<DataMatrix> {
        self.check_features(x)?;
        let x_norm = self.norm.apply(x);
        let n = x.rows();
        let k = self.config.k;
        let free = self.encode_free_norm(n, x_norm.values());
        let mut out = DataMatrix::zeros(n, k);
        for i in 0..n {
            let e = &free[i * (k - 1)..(i + 1) * (k - 1)];
            let row = out.row_mut(i);
            row[..k - 1].copy_from_slice(e);
            row[k - 1] = 1.0 - e.iter().sum::<f64>();
        }
        Ok(out)
    }

    /// Decode mixtures (any real vectors of width k; values outside the
    /// simplex extrapolate) back to feature space.
    pub fn decode(&self, alpha: &DataMatrix) -> Result<DataMatrix> {
        if alpha.cols() != self.config.k {
            return Err(Error::invalid(format!(
                "aanet: mixtures have width {}, expected k={}",
                alpha.cols(),
                self.config.k
            )));
        }
        let n = alpha.rows();
        let mut a = alpha.values().to_vec();
        for layer in &self.decoder {
            let (_, act) = layer.forward(n, &a);
            a = act;
        }
        let m = self.feature_count();
        Ok(self.norm.invert(&DataMatrix::new(n, m, a)?))
    }

    /// The k archetypes: decodes of the k one-hot latent vectors.
    pub fn get_archetypes(&self) -> Result<DataMatrix> {
        let k = self.config.k;
        let mut one_hot = DataMatrix::zeros(k, k);
        for j in 0..k {
            one_hot.set(j, j, 1.0);
        }
        self.decode(&one_hot)
    }

    /// Fraction of rows whose free coordinates leave the latent simplex
    /// (any coordinate below 0 or their sum above 1, tolerance 1e-9).
    pub fn hull_violation_fraction(&self, x: &DataMatrix) -> Result<f64> {
        self.check_features(x)?;
        if x.rows() == 0 {
            return Ok(0.0);
        }
        let x_norm = self.norm.apply(x);
        let k1 = self.config.k - 1;
        let free = self.encode_free_norm(x.rows(), x_norm.values());
        let mut outside = 0usize;
        for i in 0..x.rows() {
            let e = &free[i * k1..(i + 1) * k1];
            let sum: f64 = e.iter().sum();
            if e.iter().any(|&v| v < -1e-9) || sum > 1.0 + 1e-9 {
                outside += 1;
            }
        }
        Ok(outside as f64 / x.rows() as f64)
    }

    /// Training objective on a batch without noise: per-entry mean squared
    /// reconstruction error (in normalized space) plus the weighted mean
    /// archetypal penalties.
    pub fn total_loss(&self, batch: &DataMatrix) -> Result<f64> {
        self.loss_internal(batch, None)
    }

    /// Same objective with latent Gaussian noise drawn from `rng`; the value
    /// is reproducible for a fixed seed.
    pub fn total_loss_with_noise(&self, batch: &DataMatrix, rng: &mut SeedRng) -> Result<f64> {
        self.loss_internal(batch, Some(rng))
    }

    fn loss_internal(&self, batch: &DataMatrix, noise: Option<&mut SeedRng>) -> Result<f64> {
        self.check_features(batch)?;
        if batch.rows() == 0 {
            return Err(Error::invalid("aanet: empty batch"));
        }
        let x_norm = self.norm.apply(batch);
        let eps = match noise {
            Some(rng) if self.config.sigma > 0.0 => {
                let n = batch.rows() * self.config.k;
                Some((0..n).map(|_| self.config.sigma * rng.normal()).collect::<Vec<f64>>())
            }
            _ => None,
        };
        let (loss, _) = self.forward(batch.rows(), x_norm.values(), eps.as_deref());
        Ok(loss)
    }

    /// Forward pass on normalized data; returns (loss, cache).
    fn forward(&self, rows: usize, x_norm: &[f64], eps: Option<&[f64]>) -> (f64, ForwardCache) {
        let k = self.config.k;
        let k1 = k - 1;
        let m = self.feature_count();

        let mut enc = Vec::with_capacity(self.encoder.len());
        let mut a = x_norm.to_vec();
        for layer in &self.encoder {
            let (s, act) = layer.forward(rows, &a);
            enc.push((a, s));
            a = act;
        }
        let eprime = a;

        let mut z = vec![0.0; rows * k];
        for i in 0..rows {
            let e = &eprime[i * k1..(i + 1) * k1];
            let zrow = &mut z[i * k..(i + 1) * k];
            zrow[..k1].copy_from_slice(e);
            zrow[k1] = 1.0 - e.iter().sum::<f64>();
        }
        if let Some(noise) = eps {
            for (zi, ni) in z.iter_mut().zip(noise) {
                *zi += ni;
            }
        }

        let mut dec = Vec::with_capacity(self.decoder.len());
        let mut a = z.clone();
        for layer in &self.decoder {
            let (s, act) = layer.forward(rows, &a);
            dec.push((a, s));
            a = act;
        }
        let xhat = a;

        let denom = (rows * m) as f64;
        let mut recon = 0.0;
        for (p, q) in xhat.iter().zip(x_norm) {
            recon += (p - q) * (p - q);
        }
        recon /= denom;

        let mut pen_sum = 0.0;
        let mut pen_nonneg = 0.0;
        for i in 0..rows {
            let (s, nn) = archetypal_penalty(&eprime[i * k1..(i + 1) * k1]);
            pen_sum += s;
            pen_nonneg += nn;
        }
        let loss = recon
            + self.config.lambda_sum * pen_sum / rows as f64
            + self.config.lambda_nonneg * pen_nonneg / rows as f64;

        (loss, ForwardCache { enc, eprime, dec, xhat })
    }

    /// Loss and gradient w.r.t. every parameter (flattened per layer,
    /// weights then biases, encoder before decoder). No noise; both
    /// penalties active as configured. This is the training objective and
    /// the surface the finite-difference checks probe.
    pub fn loss_and_gradient(&self, batch: &DataMatrix) -> Result<(f64, Vec<f64>)> {
        self.check_features(batch)?;
        if batch.rows() == 0 {
            return Err(Error::invalid("aanet: empty batch"));
        }
        let x_norm = self.norm.apply(batch);
        let (loss, cache, grads) = self.backward(batch.rows(), x_norm.values(), None);
        let _ = cache;
        let mut flat = Vec::new();
        for g in &grads {
            flat.extend_from_slice(&g.0);
            flat.extend_from_slice(&g.1);
        }
        Ok((loss, flat))
    }

    /// Full backward pass. Returns per-layer (weight grad, bias grad) in
    /// the same order as the parameter flattening.
    #[allow(clippy::type_complexity)]
    fn backward(
        &self,
        rows: usize,
        x_norm: &[f64],
        eps: Option<&[f64]>,
    ) -> (f64, ForwardCache, Vec<(Vec<f64>, Vec<f64>)>) {
        let k = self.config.k;
        let k1 = k - 1;
        let m = self.feature_count();
        let (loss, cache) = self.forward(rows, x_norm, eps);

        // d loss / d xhat.
        let denom = (rows * m) as f64;
        let mut g = vec![0.0; rows * m];
        for i in 0..rows * m {
            g[i] = 2.0 * (cache.xhat[i] - x_norm[i]) / denom;
        }

        let mut dec_grads: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(self.decoder.len());
        for (layer, (input, pre)) in self.decoder.iter().zip(&cache.dec).rev() {
            let (gw, gb, gin) = dense_backward(layer, rows, input, pre, &g);
            dec_grads.push((gw, gb));
            g = gin;
        }
        dec_grads.reverse();

        // g is now d loss / d z (noise is additive).
        let mut ge = vec![0.0; rows * k1];
        for i in 0..rows {
            let gz = &g[i * k..(i + 1) * k];
            let last = gz[k1];
            let erow = &cache.eprime[i * k1..(i + 1) * k1];
            let gerow = &mut ge[i * k1..(i + 1) * k1];
            let l1: f64 = erow.iter().map(|v| v.abs()).sum();
            for j in 0..k1 {
                let mut v = gz[j] - last;
                if l1 > 1.0 && erow[j] != 0.0 {
                    v += self.config.lambda_sum * erow[j].signum() / rows as f64;
                }
                if erow[j] < 0.0 {
                    v -= self.config.lambda_nonneg / rows as f64;
                }
                gerow[j] = v;
            }
        }

        let mut enc_grads: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(self.encoder.len());
        let mut g = ge;
        for (layer, (input, pre)) in self.encoder.iter().zip(&cache.enc).rev() {
            let (gw, gb, gin) = dense_backward(layer, rows, input, pre, &g);
            enc_grads.push((gw, gb));
            g = gin;
        }
        enc_grads.reverse();

        enc_grads.extend(dec_grads);
        (loss, cache, enc_grads)
    }

    pub fn param_count(&self) -> usize {
        self.encoder
            .iter()
            .chain(&self.decoder)
            .map(|l| l.w.len() + l.b.len())
            .sum()
    }

    pub fn param(&self, idx: usize) -> f64 {
        let mut i = idx;
        for layer in self.encoder.iter().chain(&self.decoder) {
            if i < layer.w.len() {
                return layer.w[i];
            }
            i -= layer.w.len();
            if i < layer.b.len() {
                return layer.b[i];
            }
            i -= layer.b.len();
        }
        panic!("parameter index {} out of range", idx);
    }

    pub fn set_param(&mut self, idx: usize, v: f64) {
        let mut i = idx;
        for layer in self.encoder.iter_mut().chain(self.decoder.iter_mut()) {
            if i < layer.w.len() {
                layer.w[i] = v;
                return;
            }
            i -= layer.w.len();
            if i < layer.b.len() {
                layer.b[i] = v;
                return;
            }
            i -= layer.b.len();
        }
        panic!("parameter index {} out of range", idx);
    }

    pub(crate) fn parts(&self) -> (&AAnetConfig, &Normalization, &[Dense], &[Dense], &[f64], bool) {
        (&self.config, &self.norm, &self.encoder, &self.decoder, &self.loss_trace, self.trained)
    }

    pub(crate) fn from_parts(
        config: AAnetConfig,
        norm: Normalization,
        encoder: Vec<Dense>,
        decoder: Vec<Dense>,
        loss_trace: Vec<f64>,
        trained: bool,
    ) -> AAnetNetwork {
        AAnetNetwork { config, norm, encoder, decoder, loss_trace, trained }
    }

    pub(crate) fn layer_dims(&self) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
        (
            self.encoder.iter().map(|l| (l.in_dim, l.out_dim)).collect(),
            self.decoder.iter().map(|l| (l.in_dim, l.out_dim)).collect(),
        )
    }
}

fn dense_backward(
    layer: &Dense,
    rows: usize,
    input: &[f64],
    pre: &[f64],
    g_out: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (ind, outd) = (layer.in_dim, layer.out_dim);
    let mut delta = vec![0.0; rows * outd];
    for i in 0..rows * outd {
        delta[i] = g_out[i] * layer.act.derivative(pre[i]);
    }
    let mut gw = vec![0.0; outd * ind];
    la::matmul_at_b(rows, outd, ind, &delta, input, &mut gw);
    let mut gb = vec![0.0; outd];
    for r in 0..rows {
        for o in 0..outd {
            gb[o] += delta[r * outd + o];
        }
    }
    let mut gin = vec![0.0; rows * ind];
    la::matmul(rows, outd, ind, &delta, &layer.w, &mut gin);
    (gw, gb, gin)
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: usize,
    lr: f64,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl Adam {
    fn new(shapes: &[usize], lr: f64) -> Adam {
        Adam {
            m: shapes.iter().map(|&s| vec![0.0; s]).collect(),
            v: shapes.iter().map(|&s| vec![0.0; s]).collect(),
            t: 0,
            lr,
        }
    }

    fn step(&mut self, params: &mut [&mut Vec<f64>], grads: &[&Vec<f64>]) {
        self.t += 1;
        let bc1 = 1.0 - ADAM_BETA1.powi(self.t as i32);
        let bc2 = 1.0 - ADAM_BETA2.powi(self.t as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for i in 0..p.len() {
                m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
                v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                p[i] -= self.lr * mhat / (vhat.sqrt() + ADAM_EPS);
            }
        }
    }
}

/// Train an archetypal autoencoder on the rows of `x`.
///
/// Per-feature normalization is fitted on `x`, weights are Glorot-initialized
/// under the config seed, and Adam runs over seed-shuffled minibatches until
/// the step or epoch budget is exhausted. The loss trace records the batch
/// objective at each step.
pub fn train(x: &DataMatrix, config: &AAnetConfig) -> Result<AAnetNetwork> {
    config.validate()?;
    if x.rows() == 0 || x.cols() == 0 {
        return Err(Error::invalid("aanet: empty training data"));
    }
    if x.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::data("aanet: non-finite training data"));
    }

    let mut net = AAnetNetwork::initialized(x.cols(), config)?;
    net.norm = Normalization::fit(x, config.final_activation);
    let x_norm = net.norm.apply(x);

    let shapes: Vec<usize> = net
        .encoder
        .iter()
        .chain(&net.decoder)
        .flat_map(|l| [l.w.len(), l.b.len()])
        .collect();
    let mut adam = Adam::new(&shapes, config.learning_rate);

    let n = x.rows();
    let m = x.cols();
    let k = config.k;
    let mut shuffle_rng = SeedRng::new(config.seed).derive(streams::SHUFFLE);
    let mut noise_rng = SeedRng::new(config.seed).derive(streams::LATENT_NOISE);
    let mut order: Vec<usize> = (0..n).collect();
    let mut steps = 0usize;
    let mut trace = Vec::new();

    'epochs: for _ in 0..config.max_epochs {
        shuffle_rng.shuffle(&mut order);
        for chunk in order.chunks(config.batch_size.min(n)) {
            let rows = chunk.len();
            let mut batch = vec![0.0; rows * m];
            for (bi, &src) in chunk.iter().enumerate() {
                batch[bi * m..(bi + 1) * m]
                    .copy_from_slice(&x_norm.values()[src * m..(src + 1) * m]);
            }
            let eps = if config.sigma > 0.0 {
                Some(
                    (0..rows * k)
                        .map(|_| config.sigma * noise_rng.normal())
                        .collect::<Vec<f64>>(),
                )
            } else {
                None
            };

            let (loss, _, grads) = net.backward(rows, &batch, eps.as_deref());
            trace.push(loss);

            let mut params: Vec<&mut Vec<f64>> = Vec::with_capacity(grads.len() * 2);
            for layer in net.encoder.iter_mut().chain(net.decoder.iter_mut()) {
                params.push(&mut layer.w);
                params.push(&mut layer.b);
            }
            let grad_refs: Vec<&Vec<f64>> =
                grads.iter().flat_map(|(gw, gb)| [gw, gb]).collect();
            adam.step(&mut params, &grad_refs);

            steps += 1;
            if steps >= config.max_steps {
                break 'epochs;
            }
        }
    }

    net.loss_trace = trace;
    net.trained = true;
    Ok(net)
}

/// Train with the archetypal penalty weights forced to zero: a plain
/// autoencoder with the same architecture, used by the PCHA-on-AE baseline.
pub fn train_plain_ae(x: &DataMatrix, config: &AAnetConfig) -> Result<AAnetNetwork> {
    let plain = AAnetConfig { lambda_sum: 0.0, lambda_nonneg: 0.0, ..config.clone() };
    train(x, &plain)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(k: usize) -> AAnetConfig {
        AAnetConfig {
            k,
            encoder_hidden: vec![16, 8],
            decoder_hidden: vec![8, 16],
            batch_size: 32,
            max_epochs: 60,
            ..AAnetConfig::with_k(k)
        }
    }

    fn random_data(n: usize, m: usize, seed: u64) -> DataMatrix {
        let mut rng = SeedRng::new(seed);
        DataMatrix::from_rows((0..n).map(|_| (0..m).map(|_| rng.normal()).collect()).collect())
            .unwrap()
    }

    #[test]
    fn penalty_known_values() {
        assert_eq!(archetypal_penalty(&[0.5, 0.3]), (0.0, 0.0));
        let (s, n) = archetypal_penalty(&[0.8, 0.5]);
        assert!((s - 0.3).abs() < 1e-15 && n == 0.0);
        let (s, n) = archetypal_penalty(&[-0.2, 0.5]);
        assert!(s == 0.0 && (n - 0.2).abs() < 1e-15);
    }

    #[test]
    fn penalty_zero_exactly_on_simplex_slice() {
        // Zero on {e >= 0, sum|e| <= 1}, positive outside.
        let inside = [[0.0, 0.0], [1.0, 0.0], [0.3, 0.7], [0.2, 0.2]];
        for e in inside {
            let (s, n) = archetypal_penalty(&e);
            assert_eq!((s, n), (0.0, 0.0), "{:?}", e);
        }
        let outside = [[1.1, 0.0], [-0.1, 0.5], [0.6, 0.6], [-0.1, -0.1]];
        for e in outside {
            let (s, n) = archetypal_penalty(&e);
            assert!(s + n > 0.0, "{:?}", e);
        }
    }

    #[test]
    fn encode_rows_sum_to_one_untrained_and_trained() {
        let x = random_data(64, 5, 1);
        let config = small_config(4);
        let net = AAnetNetwork::initialized(5, &config).unwrap();
        for m in [net.encode(&x).unwrap(), train(&x, &config).unwrap().encode(&x).unwrap()] {
            for i in 0..m.rows() {
                let s: f64 = m.row(i).iter().sum();
                assert!((s - 1.0).abs() < 1e-12, "row sum {}", s);
            }
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        // Random [8 -> 16 -> 8 -> k-1] network, f64, sigma = 0, both
        // penalties active; central finite differences are the oracle.
        let config = AAnetConfig {
            k: 3,
            encoder_hidden: vec![16, 8],
            decoder_hidden: vec![8, 16],
            sigma: 0.0,
            ..AAnetConfig::with_k(3)
        };
        let x = random_data(16, 8, 42);
        let mut net = AAnetNetwork::initialized(8, &config).unwrap();

        let (_, grad) = net.loss_and_gradient(&x).unwrap();
        let count = net.param_count();
        assert_eq!(grad.len(), count);

        let mut pick = SeedRng::new(7);
        let mut worst = 0.0f64;
        for _ in 0..200 {
            let idx = pick.index(count);
            let orig = net.param(idx);
            let h = 1e-5 * orig.abs().max(1.0);
            net.set_param(idx, orig + h);
            let (lp, _) = net.loss_and_gradient(&x).unwrap();
            net.set_param(idx, orig - h);
            let (lm, _) = net.loss_and_gradient(&x).unwrap();
            net.set_param(idx, orig);
            let fd = (lp - lm) / (2.0 * h);
            let denom = grad[idx].abs().max(fd.abs());
            if denom > 1e-8 {
                worst = worst.max((grad[idx] - fd).abs() / denom);
            }
        }
        assert!(worst < 1e-4, "worst relative gradient error {}", worst);
    }

    #[test]
    fn training_is_seed_deterministic() {
        let x = random_data(100, 4, 3);
        let mut config = small_config(3);
        config.max_epochs = 5;
        let a = train(&x, &config).unwrap();
        let b = train(&x, &config).unwrap();
        assert_eq!(a.loss_trace, b.loss_trace);
        let ea = a.encode(&x).unwrap();
        let eb = b.encode(&x).unwrap();
        assert_eq!(ea.values(), eb.values());
    }

    #[test]
    fn noisy_loss_reproducible_and_noiseless_deterministic() {
        let x = random_data(50, 4, 9);
        let config = small_config(3);
        let net = AAnetNetwork::initialized(4, &config).unwrap();
        let l1 = net.total_loss(&x).unwrap();
        let l2 = net.total_loss(&x).unwrap();
        assert_eq!(l1, l2);
        let mut r1 = SeedRng::new(11);
        let mut r2 = SeedRng::new(11);
        let n1 = net.total_loss_with_noise(&x, &mut r1).unwrap();
        let n2 = net.total_loss_with_noise(&x, &mut r2).unwrap();
        assert_eq!(n1, n2);
        assert_ne!(l1, n1);
    }

    #[test]
    fn plain_ae_penalties_contribute_zero() {
        let x = random_data(80, 4, 5);
        let mut config = small_config(3);
        config.max_epochs = 10;
        let net = train_plain_ae(&x, &config).unwrap();
        assert_eq!(net.config().lambda_sum, 0.0);
        assert_eq!(net.config().lambda_nonneg, 0.0);

        // With zero weights the loss equals the pure reconstruction term.
        let x_norm = net.norm.apply(&x);
        let (loss, cache) = net.forward(x.rows(), x_norm.values(), None);
        let m = x.cols();
        let mut recon = 0.0;
        for (p, q) in cache.xhat.iter().zip(x_norm.values()) {
            recon += (p - q) * (p - q);
        }
        recon /= (x.rows() * m) as f64;
        assert!((loss - recon).abs() < 1e-15);

        // The simplex invariant is NOT enforced for the plain AE: codes may
        // leave the simplex.
        let violation = net.hull_violation_fraction(&x).unwrap();
        assert!(violation > 0.0, "expected unconstrained codes, got {}", violation);
    }

    #[test]
    fn decode_rejects_wrong_width() {
        let config = small_config(3);
        let net = AAnetNetwork::initialized(4, &config).unwrap();
        assert!(net.decode(&DataMatrix::zeros(2, 4)).is_err());
        assert!(net.encode(&DataMatrix::zeros(2, 5)).is_err());
    }

    #[test]
    fn rejects_invalid_configs() {
        let x = random_data(10, 3, 1);
        assert!(train(&x, &AAnetConfig::with_k(1)).is_err());
        let mut c = small_config(3);
        c.sigma = -0.1;
        assert!(train(&x, &c).is_err());
        // k-1 must stay below the last encoder width.
        let c = AAnetConfig {
            k: 9,
            encoder_hidden: vec![16, 8],
            decoder_hidden: vec![8, 16],
            ..AAnetConfig::with_k(9)
        };
        assert!(train(&x, &c).is_err());
        let bad = DataMatrix::from_rows(vec![vec![f64::NAN, 0.0]]).unwrap();
        assert!(train(&bad, &small_config(2)).is_err());
    }

    #[test]
    fn loss_decreases_in_training() {
        let x = random_data(200, 4, 8);
        let mut config = small_config(3);
        config.max_epochs = 40;
        let net = train(&x, &config).unwrap();
        let trace = net.loss_trace();
        let early: f64 = trace[..20].iter().sum::<f64>() / 20.0;
        let late: f64 = trace[trace.len() - 20..].iter().sum::<f64>() / 20.0;
        assert!(late < early, "loss did not decrease: {} -> {}", early, late);
    }

    #[test]
    fn archetypes_shape_and_stability() {
        let x = random_data(60, 5, 2);
        let mut config = small_config(3);
        config.max_epochs = 5;
        let net = train(&x, &config).unwrap();
        let a1 = net.get_archetypes().unwrap();
        let a2 = net.get_archetypes().unwrap();
        assert_eq!(a1.values(), a2.values());
        assert_eq!((a1.rows(), a1.cols()), (3, 5));
    }
}
