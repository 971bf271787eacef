//! End-to-end pipeline checks at the full default scenario size.

use coglink::metrics::percent_or_undefined;
use coglink::neural::MlpClassifier;
use coglink::rng::{self, StreamId};
use coglink::simulation::{build_report, collect_training, run_eval, split_samples, train_agents};
use coglink::{AttackMode, Scenario};
use std::time::Instant;

#[test]
fn default_scenario_full_run_quality() {
    let scenario = Scenario::default();
    let start = Instant::now();
    let trained = train_agents(&scenario).expect("training succeeds");
    let train_elapsed = start.elapsed();

    let baseline = run_eval(&scenario, &trained, AttackMode::None).unwrap();
    let poison = run_eval(&scenario, &trained, AttackMode::Poison).unwrap();
    let base_report = build_report(&trained, &baseline).unwrap();
    let poison_report = build_report(&trained, &poison).unwrap();

    println!("training took {train_elapsed:?}");
    println!(
        "transmitter test errors: e_MD={} e_FA={}",
        percent_or_undefined(base_report.transmitter.e_md),
        percent_or_undefined(base_report.transmitter.e_fa),
    );
    println!(
        "adversary test errors:   e_MD={} e_FA={}",
        percent_or_undefined(base_report.adversary.e_md),
        percent_or_undefined(base_report.adversary.e_fa),
    );
    println!(
        "baseline: t={} s={} a={}",
        percent_or_undefined(base_report.throughput.t),
        percent_or_undefined(base_report.throughput.s),
        percent_or_undefined(Some(base_report.throughput.a)),
    );
    println!(
        "poison:   t={} s={} a={} energy={}",
        percent_or_undefined(poison_report.throughput.t),
        percent_or_undefined(poison_report.throughput.s),
        percent_or_undefined(Some(poison_report.throughput.a)),
        poison_report.adversary_energy,
    );

    let t_base = base_report.throughput.t.expect("idle slots exist");
    let t_poison = poison_report.throughput.t.expect("idle slots exist");
    assert!(t_base > 0.9, "baseline throughput {t_base}");
    assert!(t_poison < 0.2, "poisoned throughput {t_poison}");
}

#[test]
fn training_reduces_loss_on_default_collection() {
    let scenario = Scenario::default();
    let collected = collect_training(&scenario).unwrap();
    let (train, _, _) = split_samples(&collected.transmitter, scenario.split);

    let init_seed = rng::model_seed(scenario.seed, StreamId::InitTransmitter);
    let mut model = MlpClassifier::init(scenario.arch(), init_seed);
    let mut stats_only = model.clone();
    let no_steps = coglink::TrainConfig {
        steps: 0,
        ..scenario.train_config(0)
    };
    stats_only.train(train, &no_steps).unwrap();
    let loss_at_init = stats_only.loss(train).unwrap();

    model
        .train(
            train,
            &scenario.train_config(rng::model_seed(scenario.seed, StreamId::TrainTransmitter)),
        )
        .unwrap();
    let loss_after = model.loss(train).unwrap();
    println!("loss at init {loss_at_init}, after training {loss_after}");
    assert!(loss_after < loss_at_init);
}
