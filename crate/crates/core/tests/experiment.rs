use rydberg_blockade::constants::PhysicalConstants;
use rydberg_blockade::expsim::{run_experiment, BlockadeModel, ExperimentConfig, SequenceKind, Site};

fn consts() -> PhysicalConstants {
    PhysicalConstants::rb87()
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let config = ExperimentConfig { shots: 3000, ..ExperimentConfig::default() };
    let ts = [0.2, 0.7, 1.4];
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_experiment(&config, SequenceKind::Fig3, &ts, &BlockadeModel::Fixed(1.3), &consts()).unwrap())
    };
    let (a, b) = (run(1), run(3));
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert_eq!(x.mean_retention.to_bits(), y.mean_retention.to_bits());
        assert_eq!(x.mean_rydberg.to_bits(), y.mean_rydberg.to_bits());
    }
}

#[test]
fn different_seeds_differ() {
    let a = ExperimentConfig { shots: 2000, ..ExperimentConfig::default() };
    let b = ExperimentConfig { seed: 2, ..a.clone() };
    let none = BlockadeModel::Fixed(0.0);
    let ra = run_experiment(&a, SequenceKind::Fig2, &[0.5], &none, &consts()).unwrap();
    let rb = run_experiment(&b, SequenceKind::Fig2, &[0.5], &none, &consts()).unwrap();
    assert_ne!(ra.rows[0].mean_retention, rb.rows[0].mean_retention);
}

#[test]
fn stronger_blockade_suppresses_double_excitation() {
    let config = ExperimentConfig { shots: 2000, ..ExperimentConfig::default() };
    let pi = config.pi_time();
    let mut last = f64::INFINITY;
    for ratio in [0.0, 1.0, 3.0, 10.0, 30.0] {
        let model = BlockadeModel::Fixed(ratio * config.omega_mhz);
        let r = run_experiment(&config, SequenceKind::Fig3, &[pi], &model, &consts()).unwrap();
        let target = r.site_rows(Site::Target).next().unwrap().mean_rydberg;
        assert!(target < last, "B/Omega = {ratio}: {target} vs {last}");
        last = target;
    }
}

#[test]
fn ideal_fig3_with_infinite_blockade_keeps_target() {
    let config = ExperimentConfig { shots: 200, ..ExperimentConfig::default().ideal() };
    let r = run_experiment(&config, SequenceKind::Fig3, &[config.pi_time()], &BlockadeModel::Fixed(f64::INFINITY), &consts()).unwrap();
    let target = r.site_rows(Site::Target).next().unwrap();
    assert!(target.mean_rydberg < 1e-12);
    assert_eq!(target.mean_retention, 1.0);
}

#[test]
fn crosstalk_sequence_is_flat() {
    let config = ExperimentConfig { shots: 4000, ..ExperimentConfig::default() };
    let ts: Vec<f64> = (0..6).map(|i| 0.5 * f64::from(i)).collect();
    let r = run_experiment(&config, SequenceKind::Fig2Crosstalk, &ts, &BlockadeModel::Fixed(0.0), &consts()).unwrap();
    for row in r.site_rows(Site::Control) {
        assert!(row.mean_rydberg < 1e-3, "{row:?}");
        assert!((row.mean_retention - (1.0 - config.trap_off_loss * (1.0 - config.detection_error))).abs() < 0.02);
    }
}

#[test]
fn post_selection_counts_control_survivors() {
    let config = ExperimentConfig { shots: 3000, ..ExperimentConfig::default() };
    let r = run_experiment(&config, SequenceKind::Fig3, &[0.5], &BlockadeModel::Fixed(1.3), &consts()).unwrap();
    let control = r.site_rows(Site::Control).next().unwrap();
    assert!(control.n_postselected < config.shots);
    assert_eq!(control.mean_retention, 1.0);
}
