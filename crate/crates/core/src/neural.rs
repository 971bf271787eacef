//! From-scratch feedforward neural classifier.
//!
//! The network is a stack of affine layers with ReLU activations and a
//! two-way softmax output, trained with mini-batch SGD on the mean
//! cross-entropy. Both learning agents share this engine; they differ only in
//! features and labels. Inputs pass through a configurable per-feature map
//! ([`Normalization`], log-standardize by default) whose statistics are
//! fitted from the training set and frozen into the model, and the binary
//! decision compares the positive-class probability against a tunable
//! threshold chosen to minimize the larger of the two per-class error rates.
//!
//! Numerical conventions: softmax is computed with max-logit subtraction and
//! cross-entropy from log-softmax with a probability floor of `1e-12`, so the
//! loss is finite for any finite logits.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use thiserror::Error;

pub mod gradcheck;

/// Probability floor applied inside the cross-entropy.
pub const PROB_FLOOR: f64 = 1e-12;

const STD_FLOOR: f64 = 1e-8;
// Zero powers (clamped draws) must stay finite in the log domain.
const LOG_INPUT_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("batch must be nonempty")]
    EmptyBatch,
    #[error("validation set must contain both classes")]
    SingleClassValidation,
    #[error("model file i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("model file parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("model file is inconsistent: {0}")]
    Malformed(String),
}

/// How [`MlpClassifier::train`] fits the frozen feature statistics.
///
/// All modes are applied in `forward` as `(x - mean) / std` with the fitted
/// values; they differ in what gets fitted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Take the natural log of each power, then standardize per feature.
    ///
    /// Received powers are multiplicative (gain times transmit power over a
    /// unit noise floor), so the log domain turns the busy/idle contrast into
    /// an additive one with near-equal class spreads. Both classes form tight
    /// clusters away from the origin, which keeps decision thresholds off the
    /// knife edge. Default.
    #[default]
    LogStandardize,
    /// Classic per-feature standardization (subtract mean, divide by std).
    Standardize,
    /// Divide by the per-feature root-mean-square, keep means at zero.
    ScaleOnly,
    /// Feed raw features through unchanged.
    None,
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::LogStandardize => "log_standardize",
            Normalization::Standardize => "standardize",
            Normalization::ScaleOnly => "scale_only",
            Normalization::None => "none",
        })
    }
}

impl std::str::FromStr for Normalization {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "log_standardize" | "logstandardize" | "log" => Ok(Normalization::LogStandardize),
            "standardize" | "standard" => Ok(Normalization::Standardize),
            "scale_only" | "scaleonly" | "scale" => Ok(Normalization::ScaleOnly),
            "none" | "raw" => Ok(Normalization::None),
            other => Err(format!(
                "unknown normalization {other:?} (expected log_standardize, standardize, scale_only, or none)"
            )),
        }
    }
}

/// Network shape. The output is fixed at two classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpArchitecture {
    pub input_dim: usize,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub output_dim: usize,
}

impl Default for MlpArchitecture {
    fn default() -> Self {
        Self {
            input_dim: 10,
            hidden_layers: 3,
            hidden_width: 100,
            output_dim: 2,
        }
    }
}

impl MlpArchitecture {
    /// (fan_in, fan_out) for every affine layer, input to output.
    fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_layers + 1);
        let mut fan_in = self.input_dim;
        for _ in 0..self.hidden_layers {
            dims.push((fan_in, self.hidden_width));
            fan_in = self.hidden_width;
        }
        dims.push((fan_in, self.output_dim));
        dims
    }
}

/// One affine layer: weights are `fan_in x fan_out`, biases `fan_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
}

/// Mini-batch SGD settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Samples per SGD step, drawn uniformly with replacement.
    pub batch_size: usize,
    pub steps: usize,
    pub learning_rate: f64,
    /// Heavy-ball momentum on the gradient; 0 is plain SGD.
    pub momentum: f64,
    pub seed: u64,
    pub normalization: Normalization,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 100,
            steps: 1000,
            learning_rate: 0.03,
            momentum: 0.9,
            seed: 0,
            normalization: Normalization::default(),
        }
    }
}

/// A feature window paired with its binary label.
///
/// For the transmitter the label is `true` when the channel is busy; for the
/// adversary it is `true` when the slot ended with an ACK.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub features: Vec<f64>,
    pub label: bool,
}

impl LabeledSample {
    pub fn new(features: Vec<f64>, label: bool) -> Self {
        Self { features, label }
    }
}

/// Gradients with the same shapes as the model parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

/// The trained classifier: layer parameters, frozen feature statistics, and
/// the decision threshold on the positive-class probability.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpClassifier {
    arch: MlpArchitecture,
    layers: Vec<Layer>,
    feature_means: Array1<f64>,
    feature_stds: Array1<f64>,
    /// Apply `ln` to the raw features before the affine normalization.
    log_input: bool,
    decision_threshold: f64,
}

struct BatchForward {
    /// Pre-activations per layer.
    zs: Vec<Array2<f64>>,
    /// `acts[0]` is the normalized input; `acts[l]` feeds layer `l`.
    acts: Vec<Array2<f64>>,
    /// Row-wise softmax probabilities.
    probs: Array2<f64>,
    /// Row-wise log-softmax.
    log_probs: Array2<f64>,
}

impl MlpClassifier {
    /// Fresh model: zero-mean weights with variance `2/fan_in` (ReLU
    /// scaling), zero biases, identity feature statistics, threshold 0.5.
    pub fn init(arch: MlpArchitecture, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = arch
            .layer_dims()
            .into_iter()
            .map(|(fan_in, fan_out)| {
                let std = (2.0 / fan_in as f64).sqrt();
                let normal = Normal::new(0.0, std).expect("valid init std");
                Layer {
                    weights: Array2::from_shape_fn((fan_in, fan_out), |_| normal.sample(&mut rng)),
                    biases: Array1::zeros(fan_out),
                }
            })
            .collect();
        Self {
            arch,
            layers,
            feature_means: Array1::zeros(arch.input_dim),
            feature_stds: Array1::ones(arch.input_dim),
            log_input: false,
            decision_threshold: 0.5,
        }
    }

    pub fn arch(&self) -> &MlpArchitecture {
        &self.arch
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn decision_threshold(&self) -> f64 {
        self.decision_threshold
    }

    pub fn feature_stats(&self) -> (&Array1<f64>, &Array1<f64>) {
        (&self.feature_means, &self.feature_stds)
    }

    /// Override the stored normalization statistics.
    pub fn set_feature_stats(&mut self, means: Array1<f64>, stds: Array1<f64>) {
        assert_eq!(means.len(), self.arch.input_dim);
        assert_eq!(stds.len(), self.arch.input_dim);
        self.feature_means = means;
        self.feature_stds = stds;
    }

    fn check_dim(&self, got: usize) -> Result<(), NeuralError> {
        if got != self.arch.input_dim {
            return Err(NeuralError::DimensionMismatch {
                expected: self.arch.input_dim,
                got,
            });
        }
        Ok(())
    }

    fn normalize_batch(&self, raw: ArrayView2<f64>) -> Array2<f64> {
        if self.log_input {
            let logged = raw.mapv(|v| v.max(LOG_INPUT_FLOOR).ln());
            (logged - &self.feature_means) / &self.feature_stds
        } else {
            (&raw - &self.feature_means) / &self.feature_stds
        }
    }

    fn forward_batch(&self, raw: ArrayView2<f64>) -> BatchForward {
        let n_layers = self.layers.len();
        let mut acts = Vec::with_capacity(n_layers);
        let mut zs = Vec::with_capacity(n_layers);
        acts.push(self.normalize_batch(raw));
        for (i, layer) in self.layers.iter().enumerate() {
            let z = acts[i].dot(&layer.weights) + &layer.biases;
            if i + 1 < n_layers {
                acts.push(z.mapv(|v| v.max(0.0)));
            }
            zs.push(z);
        }
        let logits = zs.last().expect("at least one layer");
        let mut log_probs = logits.clone();
        for mut row in log_probs.rows_mut() {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
            row.mapv_inplace(|v| v - lse);
        }
        let probs = log_probs.mapv(f64::exp);
        BatchForward {
            zs,
            acts,
            probs,
            log_probs,
        }
    }

    fn batch_arrays(
        &self,
        batch: &[LabeledSample],
    ) -> Result<(Array2<f64>, Vec<bool>), NeuralError> {
        if batch.is_empty() {
            return Err(NeuralError::EmptyBatch);
        }
        let d = self.arch.input_dim;
        let mut x = Array2::zeros((batch.len(), d));
        let mut labels = Vec::with_capacity(batch.len());
        for (i, sample) in batch.iter().enumerate() {
            self.check_dim(sample.features.len())?;
            x.row_mut(i)
                .iter_mut()
                .zip(&sample.features)
                .for_each(|(dst, &src)| *dst = src);
            labels.push(sample.label);
        }
        Ok((x, labels))
    }

    /// Class probabilities `(p_negative, p_positive)` for one feature vector.
    ///
    /// Clamped into `[PROB_FLOOR, 1 - PROB_FLOOR]` so extreme logits cannot
    /// underflow a probability to exactly zero or one.
    pub fn forward(&self, features: &[f64]) -> Result<(f64, f64), NeuralError> {
        self.check_dim(features.len())?;
        let x = ArrayView2::from_shape((1, features.len()), features)
            .expect("row view over contiguous slice");
        let fwd = self.forward_batch(x);
        let clamp = |p: f64| p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
        Ok((clamp(fwd.probs[[0, 0]]), clamp(fwd.probs[[0, 1]])))
    }

    /// Probability of the positive class.
    pub fn positive_probability(&self, features: &[f64]) -> Result<f64, NeuralError> {
        Ok(self.forward(features)?.1)
    }

    /// Binary decision: positive iff its probability is at or above the
    /// decision threshold.
    pub fn predict(&self, features: &[f64]) -> Result<bool, NeuralError> {
        Ok(self.positive_probability(features)? >= self.decision_threshold)
    }

    /// Mean cross-entropy over the batch.
    pub fn loss(&self, batch: &[LabeledSample]) -> Result<f64, NeuralError> {
        let (x, labels) = self.batch_arrays(batch)?;
        let fwd = self.forward_batch(x.view());
        let floor = PROB_FLOOR.ln();
        let total: f64 = labels
            .iter()
            .enumerate()
            .map(|(i, &label)| -fwd.log_probs[[i, usize::from(label)]].max(floor))
            .sum();
        Ok(total / batch.len() as f64)
    }

    /// Exact gradient of the mean cross-entropy over the batch.
    pub fn grad(&self, batch: &[LabeledSample]) -> Result<Gradients, NeuralError> {
        let (x, labels) = self.batch_arrays(batch)?;
        let fwd = self.forward_batch(x.view());
        let n = batch.len();

        // d(loss)/d(logits) = (softmax - onehot) / n
        let mut dz = fwd.probs.clone();
        for (i, &label) in labels.iter().enumerate() {
            dz[[i, usize::from(label)]] -= 1.0;
        }
        dz /= n as f64;

        let mut grads: Vec<Layer> = self
            .layers
            .iter()
            .map(|l| Layer {
                weights: Array2::zeros(l.weights.dim()),
                biases: Array1::zeros(l.biases.len()),
            })
            .collect();
        for l in (0..self.layers.len()).rev() {
            grads[l].weights = fwd.acts[l].t().dot(&dz);
            grads[l].biases = dz.sum_axis(Axis(0));
            if l > 0 {
                let da = dz.dot(&self.layers[l].weights.t());
                let mask = fwd.zs[l - 1].mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
                dz = da * mask;
            }
        }
        Ok(Gradients { layers: grads })
    }

    /// One SGD update: `theta -= lr * grad`.
    pub fn apply_gradients(&mut self, grads: &Gradients, learning_rate: f64) {
        for (layer, grad) in self.layers.iter_mut().zip(&grads.layers) {
            layer.weights.scaled_add(-learning_rate, &grad.weights);
            layer.biases.scaled_add(-learning_rate, &grad.biases);
        }
    }

    /// Fit normalization statistics from `data`, then run `cfg.steps`
    /// mini-batch SGD steps (heavy-ball momentum per `cfg.momentum`) with
    /// batches sampled uniformly with replacement.
    pub fn train(&mut self, data: &[LabeledSample], cfg: &TrainConfig) -> Result<(), NeuralError> {
        let (x, labels) = self.batch_arrays(data)?;
        self.fit_feature_stats(x.view(), cfg.normalization);

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut batch_x = Array2::zeros((cfg.batch_size, self.arch.input_dim));
        let mut batch = Vec::with_capacity(cfg.batch_size);
        let mut velocity: Vec<Layer> = self
            .layers
            .iter()
            .map(|l| Layer {
                weights: Array2::zeros(l.weights.dim()),
                biases: Array1::zeros(l.biases.len()),
            })
            .collect();
        for _ in 0..cfg.steps {
            batch.clear();
            for row in 0..cfg.batch_size {
                let pick = rng.random_range(0..data.len());
                batch_x.row_mut(row).assign(&x.row(pick));
                batch.push(labels[pick]);
            }
            let grads = self.grad_arrays(batch_x.view(), &batch);
            for (v, g) in velocity.iter_mut().zip(&grads.layers) {
                v.weights *= cfg.momentum;
                v.weights += &g.weights;
                v.biases *= cfg.momentum;
                v.biases += &g.biases;
            }
            for (layer, v) in self.layers.iter_mut().zip(&velocity) {
                layer.weights.scaled_add(-cfg.learning_rate, &v.weights);
                layer.biases.scaled_add(-cfg.learning_rate, &v.biases);
            }
        }
        Ok(())
    }

    fn fit_feature_stats(&mut self, x: ArrayView2<f64>, mode: Normalization) {
        let n = x.nrows() as f64;
        self.log_input = matches!(mode, Normalization::LogStandardize);
        match mode {
            Normalization::Standardize | Normalization::LogStandardize => {
                let data = if self.log_input {
                    x.mapv(|v| v.max(LOG_INPUT_FLOOR).ln())
                } else {
                    x.to_owned()
                };
                let means = data.sum_axis(Axis(0)) / n;
                let mut stds = Array1::zeros(data.ncols());
                for (j, std) in stds.iter_mut().enumerate() {
                    let var = data
                        .column(j)
                        .iter()
                        .map(|&v| (v - means[j]).powi(2))
                        .sum::<f64>()
                        / n;
                    *std = var.sqrt().max(STD_FLOOR);
                }
                self.feature_means = means;
                self.feature_stds = stds;
            }
            Normalization::ScaleOnly => {
                let mut scales = Array1::zeros(x.ncols());
                for (j, scale) in scales.iter_mut().enumerate() {
                    let mean_sq = x.column(j).iter().map(|&v| v * v).sum::<f64>() / n;
                    *scale = mean_sq.sqrt().max(STD_FLOOR);
                }
                self.feature_means = Array1::zeros(x.ncols());
                self.feature_stds = scales;
            }
            Normalization::None => {
                self.feature_means = Array1::zeros(x.ncols());
                self.feature_stds = Array1::ones(x.ncols());
            }
        }
    }

    /// `grad` on pre-assembled arrays; used by the training loop to avoid
    /// rebuilding sample structs per step.
    fn grad_arrays(&self, x: ArrayView2<f64>, labels: &[bool]) -> Gradients {
        let fwd = self.forward_batch(x);
        let n = labels.len();
        let mut dz = fwd.probs.clone();
        for (i, &label) in labels.iter().enumerate() {
            dz[[i, usize::from(label)]] -= 1.0;
        }
        dz /= n as f64;
        let mut grads: Vec<Layer> = self
            .layers
            .iter()
            .map(|l| Layer {
                weights: Array2::zeros(l.weights.dim()),
                biases: Array1::zeros(l.biases.len()),
            })
            .collect();
        for l in (0..self.layers.len()).rev() {
            grads[l].weights = fwd.acts[l].t().dot(&dz);
            grads[l].biases = dz.sum_axis(Axis(0));
            if l > 0 {
                let da = dz.dot(&self.layers[l].weights.t());
                let mask = fwd.zs[l - 1].mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
                dz = da * mask;
            }
        }
        Gradients { layers: grads }
    }

    /// Pick the decision threshold minimizing `max(err_neg, err_pos)` on the
    /// validation set; ties break toward 0.5. Stores and returns it.
    pub fn tune_threshold(&mut self, validation: &[LabeledSample]) -> Result<f64, NeuralError> {
        let scores = validation
            .iter()
            .map(|s| Ok((self.positive_probability(&s.features)?, s.label)))
            .collect::<Result<Vec<_>, NeuralError>>()?;
        let (threshold, _) = tune_threshold_from_scores(&scores)?;
        self.decision_threshold = threshold;
        Ok(threshold)
    }

    /// Serialize to the documented self-describing JSON model format.
    pub fn save(&self, path: &Path) -> Result<(), NeuralError> {
        let file: ModelFile = self.into();
        std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, NeuralError> {
        let file: ModelFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        file.try_into()
    }
}

/// Threshold sweep over the sorted positive-class scores, the midpoints of
/// adjacent scores, 0.5, and a reject-all candidate. Returns
/// `(threshold, achieved max per-class error)`.
///
/// The decision rule is inclusive (`score >= threshold` is positive), and the
/// tie-break prefers the candidate closest to 0.5, then the smaller one; the
/// midpoint candidates keep the tie-break from settling on the knife edge of
/// an observed score when the optimum is an interval.
pub fn tune_threshold_from_scores(scores: &[(f64, bool)]) -> Result<(f64, f64), NeuralError> {
    let n_pos = scores.iter().filter(|(_, l)| *l).count();
    let n_neg = scores.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(NeuralError::SingleClassValidation);
    }

    let mut sorted: Vec<(f64, bool)> = scores.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let max_score = sorted.last().expect("nonempty").0;

    let mut candidates: Vec<f64> = sorted.iter().map(|(s, _)| *s).collect();
    candidates.dedup();
    for i in 1..candidates.len() {
        candidates.push((candidates[i - 1] + candidates[i]) / 2.0);
    }
    candidates.push(0.5);
    candidates.push((max_score + 1.0) / 2.0);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    // Walking candidates in ascending order, `pos_below`/`neg_below` count
    // samples with score strictly below the candidate.
    let mut best: Option<(f64, f64)> = None;
    let mut idx = 0;
    let mut pos_below = 0usize;
    let mut neg_below = 0usize;
    for &theta in &candidates {
        while idx < sorted.len() && sorted[idx].0 < theta {
            if sorted[idx].1 {
                pos_below += 1;
            } else {
                neg_below += 1;
            }
            idx += 1;
        }
        let err_pos = pos_below as f64 / n_pos as f64;
        let err_neg = (n_neg - neg_below) as f64 / n_neg as f64;
        let worst = err_pos.max(err_neg);
        let better = match best {
            None => true,
            Some((best_theta, best_worst)) => {
                worst < best_worst
                    || (worst == best_worst
                        && ((theta - 0.5).abs() < (best_theta - 0.5).abs()
                            || ((theta - 0.5).abs() == (best_theta - 0.5).abs()
                                && theta < best_theta)))
            }
        };
        if better {
            best = Some((theta, worst));
        }
    }
    Ok(best.expect("candidate list is nonempty"))
}

/// On-disk model representation (JSON). Weight rows are stored row-major as
/// `rows x cols` with `rows = fan_in`.
#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format: String,
    input_dim: usize,
    hidden_layers: usize,
    hidden_width: usize,
    output_dim: usize,
    feature_means: Vec<f64>,
    feature_stds: Vec<f64>,
    log_input: bool,
    decision_threshold: f64,
    layers: Vec<LayerFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LayerFile {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

const MODEL_FORMAT: &str = "coglink-mlp-v1";

impl From<&MlpClassifier> for ModelFile {
    fn from(model: &MlpClassifier) -> Self {
        ModelFile {
            format: MODEL_FORMAT.to_string(),
            input_dim: model.arch.input_dim,
            hidden_layers: model.arch.hidden_layers,
            hidden_width: model.arch.hidden_width,
            output_dim: model.arch.output_dim,
            feature_means: model.feature_means.to_vec(),
            feature_stds: model.feature_stds.to_vec(),
            log_input: model.log_input,
            decision_threshold: model.decision_threshold,
            layers: model
                .layers
                .iter()
                .map(|l| LayerFile {
                    rows: l.weights.nrows(),
                    cols: l.weights.ncols(),
                    weights: l.weights.iter().cloned().collect(),
                    biases: l.biases.to_vec(),
                })
                .collect(),
        }
    }
}

impl TryFrom<ModelFile> for MlpClassifier {
    type Error = NeuralError;

    fn try_from(file: ModelFile) -> Result<Self, NeuralError> {
        if file.format != MODEL_FORMAT {
            return Err(NeuralError::Malformed(format!(
                "unknown format tag {:?}",
                file.format
            )));
        }
        let arch = MlpArchitecture {
            input_dim: file.input_dim,
            hidden_layers: file.hidden_layers,
            hidden_width: file.hidden_width,
            output_dim: file.output_dim,
        };
        let dims = arch.layer_dims();
        if file.layers.len() != dims.len() {
            return Err(NeuralError::Malformed(format!(
                "expected {} layers, got {}",
                dims.len(),
                file.layers.len()
            )));
        }
        let mut layers = Vec::with_capacity(dims.len());
        for (i, (layer, (fan_in, fan_out))) in file.layers.into_iter().zip(dims).enumerate() {
            if layer.rows != fan_in || layer.cols != fan_out {
                return Err(NeuralError::Malformed(format!(
                    "layer {i} shape {}x{} does not chain (expected {fan_in}x{fan_out})",
                    layer.rows, layer.cols
                )));
            }
            if layer.weights.len() != fan_in * fan_out || layer.biases.len() != fan_out {
                return Err(NeuralError::Malformed(format!(
                    "layer {i} array lengths do not match its shape"
                )));
            }
            layers.push(Layer {
                weights: Array2::from_shape_vec((fan_in, fan_out), layer.weights)
                    .expect("length checked above"),
                biases: Array1::from_vec(layer.biases),
            });
        }
        if file.feature_means.len() != arch.input_dim || file.feature_stds.len() != arch.input_dim {
            return Err(NeuralError::Malformed(
                "feature statistics length does not match input_dim".into(),
            ));
        }
        if file.feature_stds.iter().any(|&s| s <= 0.0) {
            return Err(NeuralError::Malformed(
                "feature_stds must be positive".into(),
            ));
        }
        if !(file.decision_threshold > 0.0 && file.decision_threshold < 1.0) {
            return Err(NeuralError::Malformed(
                "decision_threshold must lie in (0, 1)".into(),
            ));
        }
        Ok(MlpClassifier {
            arch,
            layers,
            feature_means: Array1::from_vec(file.feature_means),
            feature_stds: Array1::from_vec(file.feature_stds),
            log_input: file.log_input,
            decision_threshold: file.decision_threshold,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn sample(features: Vec<f64>, label: bool) -> LabeledSample {
        LabeledSample::new(features, label)
    }

    fn tiny_arch() -> MlpArchitecture {
        MlpArchitecture {
            input_dim: 4,
            hidden_layers: 2,
            hidden_width: 6,
            output_dim: 2,
        }
    }

    fn zeroed(arch: MlpArchitecture) -> MlpClassifier {
        let mut model = MlpClassifier::init(arch, 0);
        for layer in &mut model.layers {
            layer.weights.fill(0.0);
            layer.biases.fill(0.0);
        }
        model
    }

    #[test]
    fn init_is_deterministic_with_zero_biases() {
        let a = MlpClassifier::init(MlpArchitecture::default(), 42);
        let b = MlpClassifier::init(MlpArchitecture::default(), 42);
        assert_eq!(a, b);
        assert!(a.layers.iter().all(|l| l.biases.iter().all(|&b| b == 0.0)));
        assert_eq!(a.decision_threshold, 0.5);
        let c = MlpClassifier::init(MlpArchitecture::default(), 43);
        assert_ne!(a, c);
    }

    #[test]
    fn init_variance_matches_relu_scaling() {
        let model = MlpClassifier::init(MlpArchitecture::default(), 7);
        for layer in model.layers() {
            let fan_in = layer.weights.nrows();
            let expected = 2.0 / fan_in as f64;
            let n = layer.weights.len() as f64;
            let mean = layer.weights.iter().sum::<f64>() / n;
            let var = layer
                .weights
                .iter()
                .map(|&w| (w - mean).powi(2))
                .sum::<f64>()
                / n;
            assert!(
                (var - expected).abs() / expected < 0.2,
                "layer {}x{}: sample variance {var} vs expected {expected}",
                fan_in,
                layer.weights.ncols()
            );
        }
    }

    #[test]
    fn forward_probabilities_sum_to_one() {
        let model = MlpClassifier::init(tiny_arch(), 3);
        let (p0, p1) = model.forward(&[0.3, -1.2, 4.0, 0.0]).unwrap();
        assert!((p0 + p1 - 1.0).abs() < 1e-9);
        assert!(p0 > 0.0 && p0 < 1.0 && p1 > 0.0 && p1 < 1.0);
    }

    #[test]
    fn zeroed_model_is_uniform() {
        let model = zeroed(tiny_arch());
        let (p0, p1) = model.forward(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_relative_eq!(p0, 0.5, epsilon = 1e-12);
        assert_relative_eq!(p1, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn forward_rejects_wrong_dimension() {
        let model = MlpClassifier::init(tiny_arch(), 3);
        assert!(matches!(
            model.forward(&[1.0, 2.0]),
            Err(NeuralError::DimensionMismatch {
                expected: 4,
                got: 2
            })
        ));
    }

    #[test]
    fn uniform_predictor_loss_is_ln_two() {
        let model = zeroed(tiny_arch());
        let batch = vec![
            sample(vec![0.0, 1.0, 2.0, 3.0], true),
            sample(vec![5.0, 4.0, 3.0, 2.0], false),
        ];
        let loss = model.loss(&batch).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn confident_correct_prediction_drives_loss_to_zero() {
        let mut model = zeroed(tiny_arch());
        model.layers.last_mut().unwrap().biases[1] = 50.0;
        let batch = vec![sample(vec![0.0; 4], true)];
        assert!(model.loss(&batch).unwrap() < 1e-9);
    }

    #[test]
    fn loss_matches_independent_recomputation() {
        let model = MlpClassifier::init(tiny_arch(), 11);
        let batch: Vec<LabeledSample> = (0..17)
            .map(|i| {
                let x = i as f64;
                sample(vec![x * 0.1, (x * 0.7).sin(), -x * 0.05, 1.0], i % 3 == 0)
            })
            .collect();
        let loss = model.loss(&batch).unwrap();
        let oracle = batch
            .iter()
            .map(|s| {
                let (p0, p1) = model.forward(&s.features).unwrap();
                let p_true = if s.label { p1 } else { p0 };
                -p_true.max(PROB_FLOOR).ln()
            })
            .sum::<f64>()
            / batch.len() as f64;
        assert!((loss - oracle).abs() < 1e-12);
    }

    #[test]
    fn empty_batch_is_rejected() {
        let model = MlpClassifier::init(tiny_arch(), 0);
        assert!(matches!(model.loss(&[]), Err(NeuralError::EmptyBatch)));
        assert!(matches!(model.grad(&[]), Err(NeuralError::EmptyBatch)));
    }

    #[test]
    fn duplicated_batch_has_same_gradient() {
        let model = MlpClassifier::init(tiny_arch(), 5);
        let batch: Vec<LabeledSample> = (0..6)
            .map(|i| sample(vec![i as f64, 1.0, -0.5, 0.25], i % 2 == 0))
            .collect();
        let doubled: Vec<LabeledSample> = batch.iter().chain(batch.iter()).cloned().collect();
        let g1 = model.grad(&batch).unwrap();
        let g2 = model.grad(&doubled).unwrap();
        for (a, b) in g1.layers.iter().zip(&g2.layers) {
            for (x, y) in a.weights.iter().zip(b.weights.iter()) {
                assert_relative_eq!(x, y, epsilon = 1e-12, max_relative = 1e-12);
            }
            for (x, y) in a.biases.iter().zip(b.biases.iter()) {
                assert_relative_eq!(x, y, epsilon = 1e-12, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn gradient_vanishes_at_numerically_perfect_fit() {
        let mut model = zeroed(tiny_arch());
        model.layers.last_mut().unwrap().biases[1] = 50.0;
        let batch = vec![sample(vec![0.5, 0.5, 0.5, 0.5], true)];
        let grads = model.grad(&batch).unwrap();
        let max = grads
            .layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.biases.iter()))
            .fold(0.0f64, |m, &g| m.max(g.abs()));
        assert!(max < 1e-12, "max gradient component {max}");
    }

    #[test]
    fn training_separates_well_separated_classes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let normal_lo = Normal::new(1.0, 0.1).unwrap();
        let normal_hi = Normal::new(10.0, 1.0).unwrap();
        let data: Vec<LabeledSample> = (0..400)
            .map(|i| {
                let hi = i % 2 == 0;
                let dist = if hi { normal_hi } else { normal_lo };
                sample((0..4).map(|_| dist.sample(&mut rng)).collect(), hi)
            })
            .collect();
        let mut model = MlpClassifier::init(tiny_arch(), 1);
        model
            .train(
                &data,
                &TrainConfig {
                    batch_size: 50,
                    steps: 200,
                    learning_rate: 0.01,
                    seed: 2,
                    ..TrainConfig::default()
                },
            )
            .unwrap();
        let correct = data
            .iter()
            .filter(|s| model.predict(&s.features).unwrap() == s.label)
            .count();
        assert!(
            correct as f64 / data.len() as f64 >= 0.99,
            "training accuracy {}/{}",
            correct,
            data.len()
        );
    }

    #[test]
    fn zero_steps_only_fits_statistics() {
        let data = vec![
            sample(vec![1.0, 2.0, 3.0, 4.0], true),
            sample(vec![2.0, 3.0, 4.0, 5.0], false),
        ];
        let init = MlpClassifier::init(tiny_arch(), 4);
        let mut model = init.clone();
        model
            .train(
                &data,
                &TrainConfig {
                    steps: 0,
                    normalization: Normalization::Standardize,
                    ..TrainConfig::default()
                },
            )
            .unwrap();
        assert_eq!(model.layers, init.layers);
        assert_eq!(model.feature_means[0], 1.5);
        assert_ne!(model.feature_stds, init.feature_stds);
    }

    #[test]
    fn training_is_deterministic() {
        let data: Vec<LabeledSample> = (0..50)
            .map(|i| sample(vec![i as f64, 1.0, 2.0, 3.0], i % 2 == 0))
            .collect();
        let cfg = TrainConfig {
            batch_size: 10,
            steps: 50,
            learning_rate: 0.01,
            seed: 77,
            ..TrainConfig::default()
        };
        let mut a = MlpClassifier::init(tiny_arch(), 8);
        let mut b = MlpClassifier::init(tiny_arch(), 8);
        a.train(&data, &cfg).unwrap();
        b.train(&data, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn normalization_invariance_under_common_scaling() {
        let mut model = MlpClassifier::init(tiny_arch(), 13);
        model.set_feature_stats(
            Array1::from_vec(vec![1.0, 2.0, 3.0, 4.0]),
            Array1::from_vec(vec![0.5, 1.0, 2.0, 4.0]),
        );
        let features = [1.5, 0.25, 7.0, -2.0];
        let (p0, p1) = model.forward(&features).unwrap();

        // Power-of-two scaling keeps the arithmetic exact.
        let c = 4.0;
        let mut scaled = model.clone();
        let (means, stds) = model.feature_stats();
        scaled.set_feature_stats(means * c, stds * c);
        let scaled_features: Vec<f64> = features.iter().map(|&f| f * c).collect();
        let (q0, q1) = scaled.forward(&scaled_features).unwrap();
        assert_eq!((p0, p1), (q0, q1));
    }

    #[test]
    fn threshold_tuning_with_separated_scores_is_perfect() {
        let scores: Vec<(f64, bool)> = vec![
            (0.01, false),
            (0.05, false),
            (0.2, false),
            (0.8, true),
            (0.9, true),
            (0.99, true),
        ];
        let (theta, worst) = tune_threshold_from_scores(&scores).unwrap();
        assert_eq!(worst, 0.0);
        for (s, label) in &scores {
            assert_eq!(*s >= theta, *label);
        }
    }

    #[test]
    fn tuned_threshold_never_worse_than_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let scores: Vec<(f64, bool)> = (0..40)
                .map(|_| (rng.random::<f64>(), rng.random::<bool>()))
                .collect();
            if scores.iter().all(|(_, l)| *l) || scores.iter().all(|(_, l)| !*l) {
                continue;
            }
            let (_, worst) = tune_threshold_from_scores(&scores).unwrap();
            assert!(worst <= max_error_at(&scores, 0.5) + 1e-15);
        }
    }

    fn max_error_at(scores: &[(f64, bool)], theta: f64) -> f64 {
        let n_pos = scores.iter().filter(|(_, l)| *l).count();
        let n_neg = scores.len() - n_pos;
        let miss = scores.iter().filter(|(s, l)| *l && *s < theta).count();
        let false_pos = scores.iter().filter(|(s, l)| !*l && *s >= theta).count();
        (miss as f64 / n_pos as f64).max(false_pos as f64 / n_neg as f64)
    }

    /// Exhaustive O(n^2) reference: evaluate every candidate by rescanning
    /// the full score list.
    fn brute_force_tune(scores: &[(f64, bool)]) -> (f64, f64) {
        let mut candidates: Vec<f64> = scores.iter().map(|(s, _)| *s).collect();
        let max_score = candidates.iter().cloned().fold(f64::MIN, f64::max);
        candidates.sort_by(f64::total_cmp);
        candidates.dedup();
        for i in 1..candidates.len() {
            candidates.push((candidates[i - 1] + candidates[i]) / 2.0);
        }
        candidates.push(0.5);
        candidates.push((max_score + 1.0) / 2.0);
        candidates.sort_by(f64::total_cmp);
        candidates.dedup();
        let mut best: Option<(f64, f64)> = None;
        for &theta in &candidates {
            let worst = max_error_at(scores, theta);
            let better = match best {
                None => true,
                Some((bt, bw)) => {
                    worst < bw
                        || (worst == bw
                            && ((theta - 0.5).abs() < (bt - 0.5).abs()
                                || ((theta - 0.5).abs() == (bt - 0.5).abs() && theta < bt)))
                }
            };
            if better {
                best = Some((theta, worst));
            }
        }
        best.unwrap()
    }

    #[test]
    fn threshold_tuner_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let mut checked = 0;
        while checked < 20 {
            let n = rng.random_range(5..60);
            let scores: Vec<(f64, bool)> = (0..n)
                .map(|_| {
                    // Duplicate scores on purpose to exercise tie handling.
                    let s = (rng.random_range(0..20) as f64) / 20.0 + 0.025;
                    (s, rng.random::<bool>())
                })
                .collect();
            if scores.iter().all(|(_, l)| *l) || scores.iter().all(|(_, l)| !*l) {
                continue;
            }
            assert_eq!(
                tune_threshold_from_scores(&scores).unwrap(),
                brute_force_tune(&scores),
                "scores: {scores:?}"
            );
            checked += 1;
        }
    }

    #[test]
    fn single_class_validation_is_rejected() {
        let scores = vec![(0.1, true), (0.9, true)];
        assert!(matches!(
            tune_threshold_from_scores(&scores),
            Err(NeuralError::SingleClassValidation)
        ));
    }

    #[test]
    fn predict_uses_inclusive_threshold() {
        let mut model = zeroed(tiny_arch());
        // Zeroed model outputs p1 = 0.5 exactly up to rounding; nudge the
        // threshold to test both sides plus the tie.
        model.layers.last_mut().unwrap().biases[1] = 3.0;
        let p1 = model.positive_probability(&[0.0; 4]).unwrap();
        model.decision_threshold = p1;
        assert!(model.predict(&[0.0; 4]).unwrap(), "tie must be positive");
        model.decision_threshold = p1 * 1.0000001;
        assert!(!model.predict(&[0.0; 4]).unwrap());
        model.decision_threshold = 0.5;
        assert!(model.predict(&[0.0; 4]).unwrap());
    }

    #[test]
    fn save_load_round_trip() {
        let mut model = MlpClassifier::init(tiny_arch(), 19);
        model.set_feature_stats(
            Array1::from_vec(vec![1.0, 2.0, 3.0, 4.0]),
            Array1::from_vec(vec![0.1, 0.2, 0.3, 0.4]),
        );
        model.decision_threshold = 0.37;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        model.save(&path).unwrap();
        let restored = MlpClassifier::load(&path).unwrap();
        assert_eq!(model, restored);
        let features = [0.9, 1.8, 3.3, 4.1];
        assert_eq!(
            model.forward(&features).unwrap(),
            restored.forward(&features).unwrap()
        );
    }

    #[test]
    fn load_rejects_inconsistent_shapes() {
        let model = MlpClassifier::init(tiny_arch(), 19);
        let mut file: ModelFile = (&model).into();
        file.layers[0].weights.pop();
        let err = MlpClassifier::try_from(file).unwrap_err();
        assert!(matches!(err, NeuralError::Malformed(_)));
    }

    proptest! {
        #[test]
        fn softmax_is_normalized_for_random_models(seed in any::<u64>(), raw in proptest::collection::vec(-50.0..50.0f64, 4)) {
            let model = MlpClassifier::init(tiny_arch(), seed);
            let (p0, p1) = model.forward(&raw).unwrap();
            prop_assert!((p0 + p1 - 1.0).abs() < 1e-9);
            prop_assert!(p0 > 0.0 && p0 < 1.0);
        }

        #[test]
        fn predict_agrees_with_argmax_at_half(seed in any::<u64>(), raw in proptest::collection::vec(-5.0..5.0f64, 4)) {
            let model = MlpClassifier::init(tiny_arch(), seed);
            let (p0, p1) = model.forward(&raw).unwrap();
            prop_assert_eq!(model.predict(&raw).unwrap(), p1 >= p0);
        }

        #[test]
        fn cross_entropy_is_nonnegative(seed in any::<u64>(), label in any::<bool>(), raw in proptest::collection::vec(-20.0..20.0f64, 4)) {
            let model = MlpClassifier::init(tiny_arch(), seed);
            let batch = vec![LabeledSample::new(raw, label)];
            prop_assert!(model.loss(&batch).unwrap() >= 0.0);
        }
    }
}
