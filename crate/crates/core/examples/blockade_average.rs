//! Thermally averaged double-excitation probability and blockade shift at
//! the experimental geometry, with and without the bias field, and at the
//! tighter 7 um spacing.

use std::sync::Arc;
use std::time::Instant;

use rydberg_blockade::blockade::{averaged_blockade, AveragingOptions};
use rydberg_blockade::constants::PhysicalConstants;
use rydberg_blockade::dipole::MatrixElementCache;
use rydberg_blockade::pairint::PairSystem;

fn main() -> rydberg_blockade::Result<()> {
    let system = PairSystem::forster(79, Arc::new(MatrixElementCache::rb87()), PhysicalConstants::rb87())?;
    let options = AveragingOptions::default();
    let (sigma_y, omega) = (2.6, 0.51);

    println!("{:>6} {:>8} {:>10} {:>10}  nodes", "Z/um", "B/mT", "mean P2", "B/MHz");
    for (z, field) in [(11.0, 1.15), (11.0, 0.0), (7.0, 1.15)] {
        let start = Instant::now();
        let curve = averaged_blockade(&system, z, sigma_y, field, omega, &options)?;
        let trail: Vec<String> = curve.refinements.iter().map(|(n, p)| format!("{n}:{p:.5}")).collect();
        println!(
            "{z:>6.1} {field:>8.2} {:>10.5} {:>10.3}  {}  ({:.1} s)",
            curve.mean_p2,
            curve.mean_shift,
            trail.join(" "),
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
