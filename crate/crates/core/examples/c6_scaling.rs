//! Perturbative C6 of the laser-excited pair state for n = 50..90 and the
//! fitted power law, plus the angular dependence at n = 79.

use std::sync::Arc;

use rydberg_blockade::acceptance::linear_slope;
use rydberg_blockade::constants::PhysicalConstants;
use rydberg_blockade::dipole::MatrixElementCache;
use rydberg_blockade::pairint::PairSystem;

fn main() -> rydberg_blockade::Result<()> {
    let cache = Arc::new(MatrixElementCache::rb87());
    let consts = PhysicalConstants::rb87();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for n in [50u32, 60, 70, 79, 90] {
        let system = PairSystem::forster(n, cache.clone(), consts.clone())?;
        let c6 = system.c6_perturbative(0.0, 0.0)?;
        println!("n = {n}: C6 = {c6:.4e} MHz um^6");
        x.push(f64::from(n).ln());
        y.push(c6.abs().ln());
    }
    println!("|C6| ~ n^{:.2}", linear_slope(&x, &y));

    let system = PairSystem::forster(79, cache, consts)?;
    for deg in [0.0f64, 30.0, 54.7, 90.0] {
        let c6 = system.c6_perturbative(1.15, deg.to_radians())?;
        println!("n = 79, B = 1.15 mT, theta = {deg:>4.1} deg: C6 = {c6:.4e} MHz um^6");
    }
    Ok(())
}
