//! Numerov radial wavefunctions and the dipole radial integrals coupling
//! 79d5/2 to the Forster partner levels, with the cache statistics.

use rydberg_blockade::atomdata::Level;
use rydberg_blockade::dipole::{reduced_dipole, MatrixElementCache};

fn main() -> rydberg_blockade::Result<()> {
    let cache = MatrixElementCache::rb87();
    let d: Level = "79d5/2".parse()?;
    for label in ["80p3/2", "78f7/2", "78f5/2", "81p1/2", "81p3/2", "77f5/2", "77f7/2"] {
        let b: Level = label.parse()?;
        let r = cache.radial_integral(d, b)?;
        let reduced = reduced_dipole(b, d, &cache)?;
        println!("<{label}|r|79d5/2> = {r:>10.2} a0   reduced <{label}||d||79d5/2> = {reduced:>10.2} e a0");
    }
    let s = cache.stats();
    println!("cache: {} entries, {} hits, {} misses", s.entries, s.hits, s.misses);
    Ok(())
}
