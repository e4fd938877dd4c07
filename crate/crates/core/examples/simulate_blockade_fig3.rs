//! Blockade sequence: control pi pulse, target drive, control pi pulse,
//! with the blockade shift drawn per shot from the tabulated pair spectrum.

use std::sync::Arc;

use rydberg_blockade::constants::PhysicalConstants;
use rydberg_blockade::dipole::MatrixElementCache;
use rydberg_blockade::expsim::{run_experiment, BlockadeModel, ExperimentConfig, SequenceKind, Site};
use rydberg_blockade::pairint::PairSystem;

fn main() -> rydberg_blockade::Result<()> {
    let consts = PhysicalConstants::rb87();
    let system = PairSystem::forster(79, Arc::new(MatrixElementCache::rb87()), consts.clone())?;
    let config = ExperimentConfig { shots: 4000, ..ExperimentConfig::default() };
    let table = BlockadeModel::tabulate(&system, &config, 0.5)?;
    let ts: Vec<f64> = (0..=12).map(|i| 0.25 * f64::from(i)).collect();

    for (label, model) in [("computed", table), ("no blockade", BlockadeModel::Fixed(0.0))] {
        let r = run_experiment(&config, SequenceKind::Fig3, &ts, &model, &consts)?;
        println!("{label}");
        println!("{:>6} {:>10} {:>8} {:>6}", "T/us", "target", "stderr", "kept");
        for row in r.site_rows(Site::Target) {
            println!("{:>6.2} {:>10.4} {:>8.4} {:>6}", row.t_us, row.mean_retention, row.stderr, row.n_postselected);
        }
        let pi = run_experiment(&config, SequenceKind::Fig3, &[config.pi_time()], &model, &consts)?;
        let target = pi.site_rows(Site::Target).next().expect("target row");
        println!("target excitation at pi: {:.4}\n", 1.0 - target.mean_retention);
    }
    Ok(())
}
