//! Non-interacting pair energies of the Forster channels versus bias field
//! relative to 2 E(79d5/2), listing the lines within 12 MHz of the
//! laser-excited pair at 1.15 mT.

use rydberg_blockade::constants::PhysicalConstants;
use rydberg_blockade::dipole::MatrixElementCache;
use rydberg_blockade::pairint::asymptotic_energies_vs_field;

fn main() -> rydberg_blockade::Result<()> {
    let cache = MatrixElementCache::rb87();
    let fields = [0.0, 0.25, 0.5, 0.75, 1.0, 1.15, 1.5, 2.0];
    let lines = asymptotic_energies_vs_field(&fields, 79, &cache, &PhysicalConstants::rb87())?;
    println!("{} asymptotic lines", lines.len());
    let mut near: Vec<_> = lines.iter().filter(|l| (l.energies[5] - 2.0 * 11.871).abs() < 12.0).collect();
    near.sort_by(|a, b| a.energies[5].total_cmp(&b.energies[5]));
    print!("{:<28}", "B/mT");
    for f in &fields {
        print!("{f:>8.2}");
    }
    println!();
    for line in near {
        print!("{:<28}", format!("{} + {}", line.first, line.second));
        for e in &line.energies {
            print!("{e:>8.1}");
        }
        println!();
    }
    Ok(())
}
