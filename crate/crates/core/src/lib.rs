//! Deterministic slot-based simulator of a cognitive radio link under an
//! over-the-air spectrum poisoning attack.
//!
//! A background source `B` occupies the channel according to a queued packet
//! process. A cognitive transmitter `T` senses the channel each slot, feeds a
//! sliding window of sensed powers to a feedforward neural classifier, and
//! transmits to its receiver `R` when the channel is predicted idle. An
//! adversary `A` trains its own classifier on overheard ACK feedback and, when
//! it predicts a successful transmission, injects power during `T`'s short
//! sensing period so that `T`'s classifier sees a busy-looking channel and
//! withholds transmission.
//!
//! The crate is organized along the moving parts of that loop:
//!
//! - [`channel`]: free-space path gains, Gaussian noise, SINR and the
//!   success-threshold test.
//! - [`traffic`]: the background source's arrival/queue process that defines
//!   the ground-truth busy/idle state.
//! - [`neural`]: the from-scratch feedforward network (forward pass,
//!   cross-entropy, backprop, mini-batch SGD, threshold tuning) shared by both
//!   learning agents.
//! - [`agents`]: sensing-window bookkeeping, sample construction, and the
//!   transmit/attack decision rules for `T` and `A`.
//! - [`simulation`]: the slot pipeline (sense, decide, attack/transmit,
//!   ACK), training-data collection, evaluation runs, and the adversary
//!   energy ledger.
//! - [`metrics`]: confusion counts, misdetection/false-alarm rates, the
//!   throughput ratios, and with/without-attack comparison.
//! - [`rng`]: named, independently seeded random streams so that paired
//!   runs (baseline vs. poison vs. jam) share identical channel and traffic
//!   realizations.
//!
//! Every run is reproducible from a scenario and a seed: identical inputs
//! produce bit-identical traces.

pub mod agents;
pub mod channel;
pub mod metrics;
pub mod neural;
pub mod rng;
pub mod simulation;
pub mod traffic;

pub use agents::{AdversaryAgent, AttackMode, SensingWindow, TransmitterAgent};
pub use channel::{LinkModel, NodeId, NoiseModel, Position};
pub use metrics::{ComparisonTable, ConfusionCounts, ErrorReport, MetricsReport, ThroughputRatios};
pub use neural::{LabeledSample, MlpArchitecture, MlpClassifier, Normalization, TrainConfig};
pub use rng::RngStreams;
pub use simulation::{CollectPolicy, Scenario, SlotRecord, SplitMode, TrainedAgents};
pub use traffic::BackgroundSource;
