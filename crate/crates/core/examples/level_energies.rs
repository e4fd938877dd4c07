//! Rydberg-Ritz energies of the p, d and f levels around n = 79 and the
//! 79d fine-structure splitting.

use rydberg_blockade::atomdata::{level_energy, Level, QuantumDefectTable, Shell};
use rydberg_blockade::constants::PhysicalConstants;

fn main() -> rydberg_blockade::Result<()> {
    let table = QuantumDefectTable::rb87();
    let consts = PhysicalConstants::rb87();
    println!("{:<10} {:>11} {:>18}", "level", "defect", "energy/MHz");
    for n in 77..=81 {
        for l in 1..=3 {
            for j in Shell::new(n, l)?.js() {
                let level = Level { n, l, j };
                println!("{:<10} {:>11.6} {:>18.3}", level.to_string(), table.defect(level)?, level_energy(level, &table, &consts)?);
            }
        }
    }
    let d5: Level = "79d5/2".parse()?;
    let d3: Level = "79d3/2".parse()?;
    let split = level_energy(d5, &table, &consts)? - level_energy(d3, &table, &consts)?;
    println!("79d5/2 - 79d3/2 = {split:.3} MHz");

    let pair = 2.0 * level_energy(d5, &table, &consts)?;
    for (a, b) in [("80p3/2", "78f7/2"), ("80p1/2", "78f5/2"), ("81p1/2", "77f5/2"), ("81p3/2", "77f7/2")] {
        let e = level_energy(a.parse()?, &table, &consts)? + level_energy(b.parse()?, &table, &consts)?;
        println!("Forster defect {a} + {b}: {:+.1} MHz", e - pair);
    }
    Ok(())
}
