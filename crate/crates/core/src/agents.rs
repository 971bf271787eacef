//! The two learning agents: transmitter `T` and adversary `A`.
//!
//! Each agent keeps a sliding window of its most recent sensed powers, turns
//! completed windows into labeled samples during collection, and during
//! evaluation feeds the window to its trained classifier. `T` transmits when
//! the channel is predicted idle, optionally flipping the decision with a
//! configured probability (the controlled-error defense, off by default).
//! `A` attacks when it predicts the slot would end in an ACK.

use crate::neural::{LabeledSample, MlpClassifier, NeuralError};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("sensing window holds {got} of {needed} readings")]
    WindowNotWarm { needed: usize, got: usize },
    #[error("agent has no trained model")]
    UntrainedModel,
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

/// What the adversary does when its classifier predicts an ACK.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackMode {
    /// No attack; the baseline run.
    None,
    /// Transmit during `T`'s sensing period to falsify its classifier input.
    Poison,
    /// Transmit during the data period to break the SINR at `R`.
    Jam,
}

impl fmt::Display for AttackMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttackMode::None => "baseline",
            AttackMode::Poison => "poison",
            AttackMode::Jam => "jam",
        })
    }
}

impl FromStr for AttackMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "baseline" | "none" => Ok(AttackMode::None),
            "poison" => Ok(AttackMode::Poison),
            "jam" => Ok(AttackMode::Jam),
            other => Err(format!(
                "unknown mode {other:?} (expected baseline, poison, or jam)"
            )),
        }
    }
}

/// Ring buffer of the most recent sensed powers, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingWindow {
    buf: VecDeque<f64>,
    capacity: usize,
}

impl SensingWindow {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1);
        Self {
            buf: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn push(&mut self, sensed_power: f64) {
        debug_assert!(sensed_power >= 0.0);
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(sensed_power);
    }

    pub fn is_full(&self) -> bool {
        self.buf.len() == self.capacity
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Window contents oldest to newest.
    pub fn features(&self) -> Vec<f64> {
        self.buf.iter().cloned().collect()
    }

    fn require_full(&self) -> Result<Vec<f64>, AgentError> {
        if !self.is_full() {
            return Err(AgentError::WindowNotWarm {
                needed: self.capacity,
                got: self.buf.len(),
            });
        }
        Ok(self.features())
    }
}

/// Cognitive transmitter state.
#[derive(Debug, Clone)]
pub struct TransmitterAgent {
    pub window: SensingWindow,
    pub model: Option<MlpClassifier>,
    /// Probability of inverting each transmit decision (defense knob).
    pub defense_flip_prob: f64,
}

impl TransmitterAgent {
    pub fn new(window_len: usize, defense_flip_prob: f64) -> Self {
        Self {
            window: SensingWindow::new(window_len),
            model: None,
            defense_flip_prob,
        }
    }

    /// Record this slot's sensed power.
    pub fn observe(&mut self, sensed_power: f64) {
        self.window.push(sensed_power);
    }

    /// Pair the current window with the slot's true channel status.
    pub fn build_sample(&self, busy: bool) -> Result<LabeledSample, AgentError> {
        Ok(LabeledSample::new(self.window.require_full()?, busy))
    }

    /// Transmit decision: predicted idle means transmit, then the defense
    /// flip is applied. Consumes exactly one draw from `rng`.
    pub fn decide<R: Rng>(&self, rng: &mut R) -> Result<bool, AgentError> {
        let features = self.window.require_full()?;
        let model = self.model.as_ref().ok_or(AgentError::UntrainedModel)?;
        let busy = model.predict(&features)?;
        Ok(self.apply_defense(!busy, rng))
    }

    /// Defense flip applied to an externally chosen action (used during
    /// collection, where the transmit rule may be the genie policy).
    pub fn apply_defense<R: Rng>(&self, transmit: bool, rng: &mut R) -> bool {
        if rng.random::<f64>() < self.defense_flip_prob {
            !transmit
        } else {
            transmit
        }
    }
}

/// Adversary state.
#[derive(Debug, Clone)]
pub struct AdversaryAgent {
    pub window: SensingWindow,
    pub model: Option<MlpClassifier>,
    pub attack_mode: AttackMode,
    /// Transmit power used for an attack, normalized to the noise floor.
    pub attack_power: f64,
}

impl AdversaryAgent {
    pub fn new(window_len: usize, attack_mode: AttackMode, attack_power: f64) -> Self {
        Self {
            window: SensingWindow::new(window_len),
            model: None,
            attack_mode,
            attack_power,
        }
    }

    /// Record this slot's pre-attack sensed power.
    pub fn observe(&mut self, sensed_power: f64) {
        self.window.push(sensed_power);
    }

    /// Pair the current window with the slot's resolved ACK outcome.
    pub fn build_sample(&self, ack_seen: bool) -> Result<LabeledSample, AgentError> {
        Ok(LabeledSample::new(self.window.require_full()?, ack_seen))
    }

    /// Attack decision: attack iff an ACK is predicted. Mode `None` never
    /// attacks, regardless of the prediction or training state.
    pub fn decide(&self) -> Result<bool, AgentError> {
        if self.attack_mode == AttackMode::None {
            return Ok(false);
        }
        let features = self.window.require_full()?;
        let model = self.model.as_ref().ok_or(AgentError::UntrainedModel)?;
        Ok(model.predict(&features)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::MlpArchitecture;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_model(window_len: usize) -> MlpClassifier {
        MlpClassifier::init(
            MlpArchitecture {
                input_dim: window_len,
                hidden_layers: 1,
                hidden_width: 4,
                output_dim: 2,
            },
            1,
        )
    }

    #[test]
    fn window_is_fifo() {
        let mut w = SensingWindow::new(10);
        for i in 0..10 {
            assert!(!w.is_full());
            w.push(i as f64);
        }
        assert!(w.is_full());
        assert_eq!(w.features()[0], 0.0);
        w.push(10.0);
        assert!(w.is_full());
        assert_eq!(w.features()[0], 1.0);
        assert_eq!(*w.features().last().unwrap(), 10.0);
    }

    #[test]
    fn window_matches_trace_tail() {
        let trace: Vec<f64> = (0..57).map(|i| (i as f64).sin().abs()).collect();
        let mut w = SensingWindow::new(10);
        for &p in &trace {
            w.push(p);
        }
        assert_eq!(w.features(), trace[trace.len() - 10..].to_vec());
    }

    #[test]
    fn samples_require_a_warm_window() {
        let mut t = TransmitterAgent::new(10, 0.0);
        for i in 0..9 {
            t.observe(i as f64);
            assert!(matches!(
                t.build_sample(true),
                Err(AgentError::WindowNotWarm { .. })
            ));
        }
        t.observe(9.0);
        let sample = t.build_sample(true).unwrap();
        assert_eq!(sample.features.len(), 10);
        assert!(sample.label);
    }

    #[test]
    fn sample_count_is_slots_minus_warmup() {
        let n = 100;
        let mut t = TransmitterAgent::new(10, 0.0);
        let mut count = 0;
        for i in 0..n {
            t.observe(i as f64);
            if t.build_sample(i % 2 == 0).is_ok() {
                count += 1;
            }
        }
        assert_eq!(count, n - 9);
    }

    #[test]
    fn decide_requires_trained_model() {
        let mut t = TransmitterAgent::new(4, 0.0);
        for i in 0..4 {
            t.observe(i as f64);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            t.decide(&mut rng),
            Err(AgentError::UntrainedModel)
        ));
    }

    #[test]
    fn defense_flip_inverts_every_decision_at_one() {
        let mut t = TransmitterAgent::new(4, 0.0);
        t.model = Some(toy_model(4));
        for i in 0..4 {
            t.observe(i as f64 + 1.0);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let plain = t.decide(&mut rng).unwrap();
        t.defense_flip_prob = 1.0;
        let flipped = t.decide(&mut rng).unwrap();
        assert_eq!(plain, !flipped);

        // flip_prob 0 is a pure function of model and window
        t.defense_flip_prob = 0.0;
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            assert_eq!(t.decide(&mut rng).unwrap(), plain);
        }
    }

    #[test]
    fn adversary_mode_gate_blocks_attacks() {
        let mut a = AdversaryAgent::new(4, AttackMode::None, 1000.0);
        for i in 0..4 {
            a.observe(i as f64);
        }
        // No model at all: mode gate wins.
        assert!(!a.decide().unwrap());

        a.attack_mode = AttackMode::Poison;
        assert!(matches!(a.decide(), Err(AgentError::UntrainedModel)));

        a.model = Some(toy_model(4));
        let predicted_ack = a
            .model
            .as_ref()
            .unwrap()
            .predict(&a.window.features())
            .unwrap();
        assert_eq!(a.decide().unwrap(), predicted_ack);
    }

    #[test]
    fn adversary_sample_label_is_ack_outcome() {
        let mut a = AdversaryAgent::new(4, AttackMode::None, 1000.0);
        for i in 0..4 {
            a.observe(i as f64);
        }
        assert!(a.build_sample(true).unwrap().label);
        assert!(!a.build_sample(false).unwrap().label);
    }

    #[test]
    fn attack_mode_parsing_round_trips() {
        for mode in [AttackMode::None, AttackMode::Poison, AttackMode::Jam] {
            assert_eq!(mode.to_string().parse::<AttackMode>().unwrap(), mode);
        }
        assert_eq!("none".parse::<AttackMode>().unwrap(), AttackMode::None);
        assert!("blast".parse::<AttackMode>().is_err());
    }
}
