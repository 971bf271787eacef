//! Finite-difference verification of the analytic gradients, plus softmax
//! normalization and uniform-predictor cross-entropy checks.
//!
//! The checks here are the independent oracle for the backpropagation path:
//! they only ever call [`MlpClassifier::loss`] and [`MlpClassifier::forward`],
//! never [`MlpClassifier::grad`] internals. The CLI exposes them as a
//! self-test subcommand; the test suites assert on the same report.

use super::*;

/// Maximum allowed relative error between analytic and central-difference
/// gradients.
pub const GRAD_TOL: f64 = 1e-4;
/// Maximum allowed deviation of softmax row sums from one.
pub const SOFTMAX_TOL: f64 = 1e-9;
/// Maximum allowed deviation of the zero-weight model's loss from ln 2.
pub const UNIFORM_CE_TOL: f64 = 1e-9;
/// Central-difference step.
pub const FD_EPSILON: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Model/batch pairs exercised.
    pub pairs: usize,
    /// Total parameter components compared.
    pub components: usize,
    pub max_rel_error: f64,
    pub softmax_max_deviation: f64,
    pub uniform_ce_deviation: f64,
}

impl GradCheckReport {
    pub fn pass(&self) -> bool {
        self.max_rel_error < GRAD_TOL
            && self.softmax_max_deviation < SOFTMAX_TOL
            && self.uniform_ce_deviation < UNIFORM_CE_TOL
    }
}

fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-6)
}

/// Compare every gradient component of `model` on `batch` against central
/// finite differences of the loss. Returns `(max relative error, components)`.
pub fn max_rel_error_fd(
    model: &MlpClassifier,
    batch: &[LabeledSample],
    epsilon: f64,
) -> Result<(f64, usize), NeuralError> {
    let grads = model.grad(batch)?;
    max_rel_error_against(model, batch, epsilon, &grads)
}

/// Same comparison against a caller-supplied gradient, used by the negative
/// control in the self-test.
pub fn max_rel_error_against(
    model: &MlpClassifier,
    batch: &[LabeledSample],
    epsilon: f64,
    grads: &Gradients,
) -> Result<(f64, usize), NeuralError> {
    let mut probe = model.clone();
    let mut max_rel = 0.0f64;
    let mut components = 0usize;
    for l in 0..model.layers.len() {
        let (rows, cols) = model.layers[l].weights.dim();
        for i in 0..rows {
            for j in 0..cols {
                let orig = probe.layers[l].weights[[i, j]];
                probe.layers[l].weights[[i, j]] = orig + epsilon;
                let up = probe.loss(batch)?;
                probe.layers[l].weights[[i, j]] = orig - epsilon;
                let down = probe.loss(batch)?;
                probe.layers[l].weights[[i, j]] = orig;
                let numeric = (up - down) / (2.0 * epsilon);
                max_rel = max_rel.max(rel_error(grads.layers[l].weights[[i, j]], numeric));
                components += 1;
            }
        }
        for j in 0..model.layers[l].biases.len() {
            let orig = probe.layers[l].biases[j];
            probe.layers[l].biases[j] = orig + epsilon;
            let up = probe.loss(batch)?;
            probe.layers[l].biases[j] = orig - epsilon;
            let down = probe.loss(batch)?;
            probe.layers[l].biases[j] = orig;
            let numeric = (up - down) / (2.0 * epsilon);
            max_rel = max_rel.max(rel_error(grads.layers[l].biases[j], numeric));
            components += 1;
        }
    }
    Ok((max_rel, components))
}

/// Run the full property suite on `pairs` random model/batch pairs.
///
/// With `perturb` set, one analytic gradient component of the first pair is
/// deliberately corrupted; the suite must then fail.
pub fn run_suite(pairs: usize, seed: u64, perturb: bool) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Moderate scales keep every sample's true-class probability far above
    // the cross-entropy floor; a floored sample has zero true gradient and
    // would make the finite-difference comparison meaningless.
    let feature_dist = Normal::new(0.0, 1.0).expect("valid std");
    let mean_dist = Normal::new(0.0, 0.5).expect("valid std");

    let mut max_rel = 0.0f64;
    let mut components = 0usize;
    let mut softmax_dev = 0.0f64;

    for pair in 0..pairs {
        // The loss is non-smooth exactly at ReLU kinks; a pre-activation
        // within the finite-difference step of zero would corrupt the
        // comparison, so such model/batch pairs are redrawn.
        let (model, batch) = loop {
            let arch = MlpArchitecture {
                input_dim: rng.random_range(2..6),
                hidden_layers: rng.random_range(1..4),
                hidden_width: rng.random_range(3..8),
                output_dim: 2,
            };
            let mut model = MlpClassifier::init(arch, rng.random());
            let means = Array1::from_shape_fn(arch.input_dim, |_| mean_dist.sample(&mut rng));
            let stds = Array1::from_shape_fn(arch.input_dim, |_| 0.8 + 0.4 * rng.random::<f64>());
            model.set_feature_stats(means, stds);

            let batch: Vec<LabeledSample> = (0..rng.random_range(3..9))
                .map(|_| {
                    LabeledSample::new(
                        (0..arch.input_dim)
                            .map(|_| feature_dist.sample(&mut rng))
                            .collect(),
                        rng.random(),
                    )
                })
                .collect();

            let (x, _) = model.batch_arrays(&batch).expect("nonempty batch");
            let fwd = model.forward_batch(x.view());
            let hidden = &fwd.zs[..fwd.zs.len() - 1];
            let clear_of_kinks = hidden
                .iter()
                .all(|z| z.iter().all(|&v| v.abs() > 100.0 * FD_EPSILON));
            if clear_of_kinks {
                break (model, batch);
            }
        };

        let mut grads = model.grad(&batch).expect("nonempty batch");
        if perturb && pair == 0 {
            grads.layers[0].weights[[0, 0]] += 0.01;
        }
        let (rel, n) = max_rel_error_against(&model, &batch, FD_EPSILON, &grads)
            .expect("dimensions are consistent");
        max_rel = max_rel.max(rel);
        components += n;

        for sample in &batch {
            let (p0, p1) = model.forward(&sample.features).expect("dims match");
            softmax_dev = softmax_dev.max((p0 + p1 - 1.0).abs());
        }
    }

    // Uniform-predictor cross-entropy: all-zero parameters must give ln 2.
    let mut uniform = MlpClassifier::init(MlpArchitecture::default(), 0);
    for layer in &mut uniform.layers {
        layer.weights.fill(0.0);
        layer.biases.fill(0.0);
    }
    let batch: Vec<LabeledSample> = (0..8)
        .map(|i| LabeledSample::new((0..10).map(|j| (i * 10 + j) as f64).collect(), i % 2 == 0))
        .collect();
    let uniform_ce_deviation =
        (uniform.loss(&batch).expect("nonempty") - std::f64::consts::LN_2).abs();

    GradCheckReport {
        pairs,
        components,
        max_rel_error: max_rel,
        softmax_max_deviation: softmax_dev,
        uniform_ce_deviation,
    }
}
