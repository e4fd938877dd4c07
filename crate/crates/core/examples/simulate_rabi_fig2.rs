//! Single-atom Rabi flopping on the target site with the default
//! imperfection budget, plus the crosstalk sequence on the control atom and
//! a damped-Rabi fit of the target retention.

use rydberg_blockade::constants::PhysicalConstants;
use rydberg_blockade::expsim::{fit_damped_rabi, run_experiment, BlockadeModel, ExperimentConfig, SequenceKind, Site};

fn main() -> rydberg_blockade::Result<()> {
    let consts = PhysicalConstants::rb87();
    let config = ExperimentConfig { shots: 4000, ..ExperimentConfig::default() };
    let ts: Vec<f64> = (0..=30).map(|i| 0.1 * f64::from(i)).collect();

    let fig2 = run_experiment(&config, SequenceKind::Fig2, &ts, &BlockadeModel::Fixed(0.0), &consts)?;
    println!("{:>6} {:>10} {:>8}", "T/us", "retention", "stderr");
    let mut t = Vec::new();
    let mut y = Vec::new();
    for row in fig2.site_rows(Site::Target) {
        println!("{:>6.2} {:>10.4} {:>8.4}", row.t_us, row.mean_retention, row.stderr);
        t.push(row.t_us);
        y.push(row.mean_retention);
    }
    let fit = fit_damped_rabi(&t, &y)?;
    println!("fit: a = {:.3}, tau = {:.2} us, Omega/2pi = {:.4} MHz, rms = {:.4}", fit.a, fit.tau, fit.omega, fit.residual);

    let pi = config.pi_time();
    let at = |t: f64| run_experiment(&config, SequenceKind::Fig2, &[t], &BlockadeModel::Fixed(0.0), &consts);
    let excited = 1.0 - at(pi)?.rows[0].mean_retention;
    let back = at(2.0 * pi)?.rows[0].mean_retention;
    println!("excitation at pi: {excited:.4}, retention at 2 pi: {back:.4}");

    let cross = run_experiment(&config, SequenceKind::Fig2Crosstalk, &[pi, 2.0 * pi], &BlockadeModel::Fixed(0.0), &consts)?;
    for row in cross.site_rows(Site::Control) {
        println!("control retention with target-site light, T = {:.2} us: {:.4}", row.t_us, row.mean_retention);
    }
    Ok(())
}
