//! The slot pipeline: phase ordering, training-data collection, evaluation
//! runs, and the adversary energy ledger.
//!
//! Each slot executes a fixed phase order:
//!
//! 1. the background source steps its queue (ground-truth busy/idle);
//! 2. per-slot channel gains and node noises are drawn;
//! 3. `A` senses (its pre-attack reading, excluding its own signal) and
//!    decides whether to attack;
//! 4. `T` senses; a poison attack lands here, inside `T`'s reading;
//! 5. `T` decides whether to transmit;
//! 6. if `T` transmits, the SINR at `R` decides success; a jam attack lands
//!    here, inside the interference term, and a poison attack never does;
//! 7. an ACK is broadcast iff the transmission succeeded, and both agents
//!    see it.
//!
//! No decision in a slot uses information produced later in that slot, and
//! every random stream advances identically across run modes, so paired
//! baseline/poison/jam replays under one seed share their channel and traffic
//! realizations exactly.

use crate::agents::{AdversaryAgent, AttackMode, TransmitterAgent};
use crate::channel::{self, LinkModel, NodeId, NoiseModel, Position};
use crate::metrics::{self, ConfusionCounts, ErrorReport, MetricsError, MetricsReport};
use crate::neural::{
    LabeledSample, MlpArchitecture, MlpClassifier, NeuralError, Normalization, TrainConfig,
};
use crate::rng::{self, Phase, RngStreams, StreamId};
use crate::traffic::BackgroundSource;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("trace file error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Scenario validation failure, naming the offending field.
#[derive(Debug, Error, PartialEq)]
#[error("invalid scenario field {field}: {message}")]
pub struct ScenarioError {
    pub field: &'static str,
    pub message: String,
}

impl ScenarioError {
    fn new(field: &'static str, message: impl Into<String>) -> Self {
        Self {
            field,
            message: message.into(),
        }
    }
}

/// How `T` behaves while training data is collected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollectPolicy {
    /// `T` transmits exactly on truly idle slots during collection. This
    /// stands in for an already-trained transmitter without a bootstrap
    /// phase and is the default.
    Genie,
    /// Collect `T`'s data first, train its classifier, then run a second
    /// collection pass in which the adversary observes the real classifier.
    TwoPhase,
}

impl fmt::Display for CollectPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CollectPolicy::Genie => "genie",
            CollectPolicy::TwoPhase => "two_phase",
        })
    }
}

impl FromStr for CollectPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "genie" => Ok(CollectPolicy::Genie),
            "two_phase" | "twophase" => Ok(CollectPolicy::TwoPhase),
            other => Err(format!(
                "unknown collect policy {other:?} (expected genie or two_phase)"
            )),
        }
    }
}

/// How each agent's collected samples are divided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// First half trains; the second half both tunes the threshold and
    /// reports the error rates.
    TwoWay,
    /// 50% train / 25% threshold tuning / 25% reported errors, avoiding the
    /// tune-on-test leakage of the two-way split.
    ThreeWay,
}

impl fmt::Display for SplitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitMode::TwoWay => "two_way",
            SplitMode::ThreeWay => "three_way",
        })
    }
}

impl FromStr for SplitMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "two_way" | "twoway" => Ok(SplitMode::TwoWay),
            "three_way" | "threeway" => Ok(SplitMode::ThreeWay),
            other => Err(format!(
                "unknown split mode {other:?} (expected two_way or three_way)"
            )),
        }
    }
}

/// Full description of one seeded run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub pos_b: Position,
    pub pos_t: Position,
    pub pos_r: Position,
    pub pos_a: Position,
    /// Transmit powers, normalized to the unit noise floor.
    pub power_b: f64,
    pub power_t: f64,
    pub power_a: f64,
    pub sinr_threshold: f64,
    pub arrival_rate: f64,
    pub gain_rel_std: f64,
    pub noise_rel_std: f64,
    pub noise_mean: f64,
    pub pathloss_exponent: f64,
    pub window_len: usize,
    pub n_train_slots: usize,
    pub n_eval_slots: usize,
    /// Slot fraction spent sensing; drives the poison energy ledger only.
    pub sensing_fraction: f64,
    /// Slot fraction spent on data; drives the jam energy ledger only.
    pub data_fraction: f64,
    pub attack_mode: AttackMode,
    /// Probability that the adversary misses an ACK it should have heard
    /// while collecting labels; 0 is the perfect binary presence detector.
    pub ack_miss_prob: f64,
    pub defense_flip_prob: f64,
    pub collect_policy: CollectPolicy,
    pub split: SplitMode,
    /// Redraw channel gains every slot (default) or freeze them per run.
    pub redraw_gains: bool,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub batch_size: usize,
    pub train_steps: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub feature_norm: Normalization,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            pos_b: Position::new(0.0, 10.0),
            pos_t: Position::new(0.0, 0.0),
            pos_r: Position::new(10.0, 0.0),
            pos_a: Position::new(10.0, 10.0),
            power_b: 1000.0,
            power_t: 1000.0,
            power_a: 1000.0,
            sinr_threshold: 3.0,
            arrival_rate: 0.8,
            gain_rel_std: 0.15,
            noise_rel_std: 0.1,
            noise_mean: 1.0,
            pathloss_exponent: 2.0,
            window_len: 10,
            n_train_slots: 1000,
            n_eval_slots: 500,
            sensing_fraction: 0.1,
            data_fraction: 0.8,
            attack_mode: AttackMode::None,
            ack_miss_prob: 0.0,
            defense_flip_prob: 0.0,
            collect_policy: CollectPolicy::Genie,
            split: SplitMode::TwoWay,
            redraw_gains: true,
            hidden_layers: 3,
            hidden_width: 100,
            batch_size: 100,
            train_steps: 1000,
            learning_rate: 0.03,
            momentum: 0.9,
            feature_norm: Normalization::default(),
            seed: 1,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        fn positive(field: &'static str, v: f64) -> Result<(), ScenarioError> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ScenarioError::new(
                    field,
                    format!("must be positive, got {v}"),
                ))
            }
        }
        positive("power_b", self.power_b)?;
        positive("power_t", self.power_t)?;
        positive("power_a", self.power_a)?;
        positive("sinr_threshold", self.sinr_threshold)?;
        positive("noise_mean", self.noise_mean)?;
        positive("pathloss_exponent", self.pathloss_exponent)?;
        positive("sensing_fraction", self.sensing_fraction)?;
        positive("data_fraction", self.data_fraction)?;
        positive("learning_rate", self.learning_rate)?;
        if !(0.0..=1.0).contains(&self.arrival_rate) {
            return Err(ScenarioError::new(
                "arrival_rate",
                format!("must lie in [0, 1], got {}", self.arrival_rate),
            ));
        }
        if !(0.0..=1.0).contains(&self.ack_miss_prob) {
            return Err(ScenarioError::new(
                "ack_miss_prob",
                format!("must lie in [0, 1], got {}", self.ack_miss_prob),
            ));
        }
        if !(0.0..=1.0).contains(&self.defense_flip_prob) {
            return Err(ScenarioError::new(
                "defense_flip_prob",
                format!("must lie in [0, 1], got {}", self.defense_flip_prob),
            ));
        }
        if self.gain_rel_std < 0.0 {
            return Err(ScenarioError::new("gain_rel_std", "must be nonnegative"));
        }
        if self.noise_rel_std < 0.0 {
            return Err(ScenarioError::new("noise_rel_std", "must be nonnegative"));
        }
        if self.sensing_fraction + self.data_fraction > 1.0 {
            return Err(ScenarioError::new(
                "sensing_fraction",
                format!(
                    "sensing_fraction + data_fraction must not exceed 1, got {}",
                    self.sensing_fraction + self.data_fraction
                ),
            ));
        }
        if self.window_len < 1 {
            return Err(ScenarioError::new("window_len", "must be at least 1"));
        }
        if self.n_train_slots <= self.window_len {
            return Err(ScenarioError::new(
                "n_train_slots",
                format!(
                    "must exceed window_len {}, got {}",
                    self.window_len, self.n_train_slots
                ),
            ));
        }
        if self.n_eval_slots < 1 {
            return Err(ScenarioError::new("n_eval_slots", "must be at least 1"));
        }
        if self.hidden_layers < 1 {
            return Err(ScenarioError::new("hidden_layers", "must be at least 1"));
        }
        if self.hidden_width < 1 {
            return Err(ScenarioError::new("hidden_width", "must be at least 1"));
        }
        if self.batch_size < 1 {
            return Err(ScenarioError::new("batch_size", "must be at least 1"));
        }
        if self.train_steps < 1 {
            return Err(ScenarioError::new("train_steps", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(ScenarioError::new(
                "momentum",
                format!("must lie in [0, 1), got {}", self.momentum),
            ));
        }
        // Every link the simulation uses needs a nonzero distance.
        let pairs = [
            ("pos_t", self.pos_b, self.pos_t),
            ("pos_r", self.pos_t, self.pos_r),
            ("pos_r", self.pos_b, self.pos_r),
            ("pos_a", self.pos_a, self.pos_t),
            ("pos_a", self.pos_a, self.pos_r),
            ("pos_a", self.pos_b, self.pos_a),
        ];
        for (field, x, y) in pairs {
            if channel::distance(x, y) <= 0.0 {
                return Err(ScenarioError::new(field, "two linked nodes are co-located"));
            }
        }
        Ok(())
    }

    pub fn arch(&self) -> MlpArchitecture {
        MlpArchitecture {
            input_dim: self.window_len,
            hidden_layers: self.hidden_layers,
            hidden_width: self.hidden_width,
            output_dim: 2,
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            steps: self.train_steps,
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            seed,
            normalization: self.feature_norm,
        }
    }

    fn link_set(&self) -> Result<LinkSet, ScenarioError> {
        let mk = |source: NodeId, dest: NodeId, a: Position, b: Position| {
            LinkModel::from_geometry(
                source,
                dest,
                a,
                b,
                self.gain_rel_std,
                self.pathloss_exponent,
            )
            .map_err(|e| ScenarioError::new("positions", e.to_string()))
        };
        Ok(LinkSet {
            bt: mk(NodeId::B, NodeId::T, self.pos_b, self.pos_t)?,
            tr: mk(NodeId::T, NodeId::R, self.pos_t, self.pos_r)?,
            br: mk(NodeId::B, NodeId::R, self.pos_b, self.pos_r)?,
            at: mk(NodeId::A, NodeId::T, self.pos_a, self.pos_t)?,
            ar: mk(NodeId::A, NodeId::R, self.pos_a, self.pos_r)?,
            ba: mk(NodeId::B, NodeId::A, self.pos_b, self.pos_a)?,
            noise: NoiseModel {
                mean_power: self.noise_mean,
                rel_std: self.noise_rel_std,
            },
        })
    }
}

/// One slot of the trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: u64,
    /// Ground-truth channel state.
    pub b_busy: bool,
    /// `T`'s sensed power (includes a poison signal when attacked).
    pub p_t: f64,
    /// `A`'s sensed power (always its pre-attack reading).
    pub p_a: f64,
    pub t_transmit: bool,
    pub a_attack: bool,
    /// SINR at `R`; present iff `T` transmitted.
    pub sinr: Option<f64>,
    /// Success, equivalently the ACK broadcast.
    pub success: bool,
    /// Adversary energy spent this slot (power x attacked slot fraction).
    pub energy_a: f64,
}

struct LinkSet {
    bt: LinkModel,
    tr: LinkModel,
    br: LinkModel,
    at: LinkModel,
    ar: LinkModel,
    ba: LinkModel,
    noise: NoiseModel,
}

#[derive(Clone, Copy)]
struct GainDraws {
    g_bt: f64,
    g_tr: f64,
    g_br: f64,
    g_at: f64,
    g_ar: f64,
    g_ba: f64,
}

impl LinkSet {
    fn sample_gains(&self, streams: &mut RngStreams) -> GainDraws {
        GainDraws {
            g_bt: channel::sample_gain(&self.bt, &mut streams.gain_bt),
            g_tr: channel::sample_gain(&self.tr, &mut streams.gain_tr),
            g_br: channel::sample_gain(&self.br, &mut streams.gain_br),
            g_at: channel::sample_gain(&self.at, &mut streams.gain_at),
            g_ar: channel::sample_gain(&self.ar, &mut streams.gain_ar),
            g_ba: channel::sample_gain(&self.ba, &mut streams.gain_ba),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TransmitRule {
    /// Transmit exactly on truly idle slots (collection stand-in).
    Genie,
    /// Use the trained classifier on the sensing window.
    Classifier,
}

struct SlotEngine<'s> {
    scenario: &'s Scenario,
    links: LinkSet,
    streams: RngStreams,
    traffic: BackgroundSource,
    t_agent: TransmitterAgent,
    a_agent: AdversaryAgent,
    rule: TransmitRule,
    attacks_enabled: bool,
    frozen_gains: Option<GainDraws>,
}

fn ind(flag: bool) -> f64 {
    if flag {
        1.0
    } else {
        0.0
    }
}

impl<'s> SlotEngine<'s> {
    fn new(
        scenario: &'s Scenario,
        phase: Phase,
        rule: TransmitRule,
        attacks_enabled: bool,
        t_model: Option<MlpClassifier>,
        a_model: Option<MlpClassifier>,
    ) -> Result<Self, SimError> {
        let links = scenario.link_set()?;
        let mut streams = RngStreams::new(scenario.seed, phase);
        let frozen_gains = (!scenario.redraw_gains).then(|| links.sample_gains(&mut streams));
        let mut t_agent = TransmitterAgent::new(scenario.window_len, scenario.defense_flip_prob);
        t_agent.model = t_model;
        let mut a_agent =
            AdversaryAgent::new(scenario.window_len, scenario.attack_mode, scenario.power_a);
        a_agent.model = a_model;
        Ok(Self {
            scenario,
            links,
            streams,
            traffic: BackgroundSource::new(scenario.arrival_rate),
            t_agent,
            a_agent,
            rule,
            attacks_enabled,
            frozen_gains,
        })
    }

    /// Whether `A` registers this slot's ACK; consumes one detector draw.
    fn hears_ack(&mut self, ack_sent: bool) -> bool {
        let missed = self.streams.ack_detect.random::<f64>() < self.scenario.ack_miss_prob;
        ack_sent && !missed
    }

    /// Execute one slot in the canonical phase order.
    fn run_slot(&mut self, slot: u64) -> SlotRecord {
        let sc = self.scenario;

        // (1) ground truth
        let b_busy = self.traffic.step(&mut self.streams.traffic);

        // (2) channel realizations; every stream advances once per slot
        let gains = match self.frozen_gains {
            Some(g) => g,
            None => self.links.sample_gains(&mut self.streams),
        };
        let noise_t = channel::sample_noise(&self.links.noise, &mut self.streams.noise_t);
        let noise_r = channel::sample_noise(&self.links.noise, &mut self.streams.noise_r);
        let noise_a = channel::sample_noise(&self.links.noise, &mut self.streams.noise_a);

        // (3) A senses (pre-attack reading) and decides
        let p_a = noise_a + gains.g_ba * sc.power_b * ind(b_busy);
        self.a_agent.observe(p_a);
        let a_attack = self.attacks_enabled
            && self.a_agent.window.is_full()
            && self
                .a_agent
                .decide()
                .expect("attack runs require a trained adversary");
        let poison = a_attack && self.a_agent.attack_mode == AttackMode::Poison;
        let jam = a_attack && self.a_agent.attack_mode == AttackMode::Jam;

        // (4) T senses; a poison attack falsifies this reading
        let p_t = noise_t
            + gains.g_bt * sc.power_b * ind(b_busy)
            + gains.g_at * self.a_agent.attack_power * ind(poison);
        self.t_agent.observe(p_t);

        // (5) T decides; exactly one defense draw per slot
        let t_transmit = match self.rule {
            TransmitRule::Genie => self
                .t_agent
                .apply_defense(!b_busy, &mut self.streams.defense),
            TransmitRule::Classifier => {
                if self.t_agent.window.is_full() && self.t_agent.model.is_some() {
                    self.t_agent
                        .decide(&mut self.streams.defense)
                        .expect("window full and model present")
                } else {
                    let _ = self.streams.defense.random::<f64>();
                    false
                }
            }
        };

        // (6) data period; a jam attack enters the interference, poison never
        let (sinr, success) = if t_transmit {
            let interference = gains.g_br * sc.power_b * ind(b_busy)
                + gains.g_ar * self.a_agent.attack_power * ind(jam);
            // noise draws clamp at zero; keep the ratio finite
            let value = channel::sinr(
                gains.g_tr * sc.power_t,
                interference,
                noise_r.max(f64::MIN_POSITIVE),
            )
            .expect("noise forced positive");
            (Some(value), channel::is_success(value, sc.sinr_threshold))
        } else {
            (None, false)
        };

        // (7) ACK broadcast iff success; energy bookkeeping
        let energy_a = if a_attack {
            self.a_agent.attack_power
                * if poison {
                    sc.sensing_fraction
                } else {
                    sc.data_fraction
                }
        } else {
            0.0
        };

        SlotRecord {
            slot,
            b_busy,
            p_t,
            p_a,
            t_transmit,
            a_attack,
            sinr,
            success,
            energy_a,
        }
    }
}

/// Both agents' labeled sample sets from one collection pass.
#[derive(Debug, Clone)]
pub struct CollectedSamples {
    pub transmitter: Vec<LabeledSample>,
    pub adversary: Vec<LabeledSample>,
}

fn collect_pass(
    scenario: &Scenario,
    phase: Phase,
    rule: TransmitRule,
    t_model: Option<MlpClassifier>,
) -> Result<CollectedSamples, SimError> {
    let mut engine = SlotEngine::new(scenario, phase, rule, false, t_model, None)?;
    let total = scenario.n_train_slots + scenario.window_len - 1;
    let mut transmitter = Vec::with_capacity(scenario.n_train_slots);
    let mut adversary = Vec::with_capacity(scenario.n_train_slots);
    for slot in 0..total {
        let record = engine.run_slot(slot as u64);
        let ack_heard = engine.hears_ack(record.success);
        if let Ok(sample) = engine.t_agent.build_sample(record.b_busy) {
            transmitter.push(sample);
        }
        if let Ok(sample) = engine.a_agent.build_sample(ack_heard) {
            adversary.push(sample);
        }
    }
    debug_assert_eq!(transmitter.len(), scenario.n_train_slots);
    debug_assert_eq!(adversary.len(), scenario.n_train_slots);
    Ok(CollectedSamples {
        transmitter,
        adversary,
    })
}

/// Attack-free collection pass with the genie transmit rule.
pub fn collect_training(scenario: &Scenario) -> Result<CollectedSamples, SimError> {
    scenario.validate()?;
    collect_pass(scenario, Phase::Collect, TransmitRule::Genie, None)
}

/// Attack-free collection pass in which `T` runs an already-trained
/// classifier (the two-phase mode's second pass).
pub fn collect_with_transmitter(
    scenario: &Scenario,
    t_model: &MlpClassifier,
) -> Result<CollectedSamples, SimError> {
    scenario.validate()?;
    collect_pass(
        scenario,
        Phase::CollectAdversary,
        TransmitRule::Classifier,
        Some(t_model.clone()),
    )
}

/// Split one agent's samples into train / threshold-tuning / reported-error
/// parts. The two-way split uses the second half for both of the latter.
pub fn split_samples(
    samples: &[LabeledSample],
    split: SplitMode,
) -> (&[LabeledSample], &[LabeledSample], &[LabeledSample]) {
    match split {
        SplitMode::TwoWay => {
            let half = samples.len() / 2;
            (&samples[..half], &samples[half..], &samples[half..])
        }
        SplitMode::ThreeWay => {
            let train_end = samples.len() / 2;
            let val_end = samples.len() * 3 / 4;
            (
                &samples[..train_end],
                &samples[train_end..val_end],
                &samples[val_end..],
            )
        }
    }
}

/// Both trained classifiers plus their test-split assessments.
#[derive(Debug, Clone)]
pub struct TrainedAgents {
    pub t_model: MlpClassifier,
    pub a_model: MlpClassifier,
    pub t_assessment: ErrorReport,
    pub a_assessment: ErrorReport,
}

fn fit_classifier(
    scenario: &Scenario,
    samples: &[LabeledSample],
    init_stream: StreamId,
    train_stream: StreamId,
) -> Result<(MlpClassifier, ErrorReport), SimError> {
    let (train, val, test) = split_samples(samples, scenario.split);
    let mut model =
        MlpClassifier::init(scenario.arch(), rng::model_seed(scenario.seed, init_stream));
    model.train(
        train,
        &scenario.train_config(rng::model_seed(scenario.seed, train_stream)),
    )?;
    model.tune_threshold(val)?;
    let predictions = test
        .iter()
        .map(|s| Ok((s.label, model.predict(&s.features)?)))
        .collect::<Result<Vec<_>, NeuralError>>()?;
    let report = ErrorReport::new(
        ConfusionCounts::from_predictions(predictions),
        model.decision_threshold(),
    );
    Ok((model, report))
}

/// Collect training data and train both classifiers per the scenario's
/// collection policy.
pub fn train_agents(scenario: &Scenario) -> Result<TrainedAgents, SimError> {
    scenario.validate()?;
    let first = collect_training(scenario)?;
    let (t_model, t_assessment) = fit_classifier(
        scenario,
        &first.transmitter,
        StreamId::InitTransmitter,
        StreamId::TrainTransmitter,
    )?;
    let adversary_samples = match scenario.collect_policy {
        CollectPolicy::Genie => first.adversary,
        CollectPolicy::TwoPhase => collect_with_transmitter(scenario, &t_model)?.adversary,
    };
    let (a_model, a_assessment) = fit_classifier(
        scenario,
        &adversary_samples,
        StreamId::InitAdversary,
        StreamId::TrainAdversary,
    )?;
    Ok(TrainedAgents {
        t_model,
        a_model,
        t_assessment,
        a_assessment,
    })
}

/// Evaluation run: `window_len - 1` unrecorded warm-up slots (no decisions,
/// both agents just fill their windows), then `n_eval_slots` recorded slots
/// under the given attack mode.
pub fn run_eval(
    scenario: &Scenario,
    trained: &TrainedAgents,
    mode: AttackMode,
) -> Result<Vec<SlotRecord>, SimError> {
    scenario.validate()?;
    let scenario = Scenario {
        attack_mode: mode,
        ..scenario.clone()
    };
    let mut engine = SlotEngine::new(
        &scenario,
        Phase::Eval,
        TransmitRule::Classifier,
        true,
        Some(trained.t_model.clone()),
        Some(trained.a_model.clone()),
    )?;
    for _ in 0..scenario.window_len - 1 {
        engine.run_slot(0);
    }
    Ok((0..scenario.n_eval_slots)
        .map(|slot| engine.run_slot(slot as u64))
        .collect())
}

/// Total adversary energy over a trace.
pub fn energy_ledger(records: &[SlotRecord]) -> f64 {
    records.iter().map(|r| r.energy_a).sum()
}

/// Assemble the per-run report from trained-agent assessments and a trace.
pub fn build_report(
    trained: &TrainedAgents,
    records: &[SlotRecord],
) -> Result<MetricsReport, MetricsError> {
    Ok(MetricsReport::new(
        trained.t_assessment.clone(),
        trained.a_assessment.clone(),
        metrics::throughput_ratios(records)?,
        energy_ledger(records),
    ))
}

/// Write a trace as CSV with the documented header.
pub fn write_trace<W: std::io::Write>(writer: W, records: &[SlotRecord]) -> Result<(), SimError> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    for record in records {
        csv_writer.serialize(record)?;
    }
    csv_writer.flush()?;
    Ok(())
}

pub fn write_trace_file(path: &Path, records: &[SlotRecord]) -> Result<(), SimError> {
    write_trace(std::fs::File::create(path)?, records)
}

pub fn read_trace_file(path: &Path) -> Result<Vec<SlotRecord>, SimError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut records = Vec::new();
    for row in reader.deserialize() {
        records.push(row?);
    }
    Ok(records)
}
