//! Molecular curves versus transverse offset at Z = 11 um and 1.15 mT,
//! listing the zero crossings of tracked curves near the laser-excited
//! pair energy together with their overlap on |rr>.

use std::sync::Arc;

use rydberg_blockade::constants::PhysicalConstants;
use rydberg_blockade::dipole::MatrixElementCache;
use rydberg_blockade::pairint::PairSystem;

fn main() -> rydberg_blockade::Result<()> {
    let system = PairSystem::forster(79, Arc::new(MatrixElementCache::rb87()), PhysicalConstants::rb87())?;
    let dys: Vec<f64> = (0..=30).map(|i| 3.5 + 0.1 * f64::from(i)).collect();
    let scan = system.scan_offsets(11.0, &dys, 1.15)?;
    let weakest = scan.min_tracking_overlap.iter().cloned().fold(1.0, f64::min);
    println!("{} curves, weakest tracking overlap {weakest:.3}", scan.curves());
    println!("{:>6} {:>8} {:>10}", "curve", "dy/um", "kappa^2");
    for c in scan.zero_crossings(5.0) {
        println!("{:>6} {:>8.3} {:>10.3e}", c.curve, c.offset, c.overlap);
    }
    Ok(())
}
