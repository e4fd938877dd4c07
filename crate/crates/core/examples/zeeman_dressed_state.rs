//! Composition of the laser-excited 79d5/2 m_j = 1/2 state as the bias
//! field mixes in 79d3/2.

use rydberg_blockade::atomdata::{laser_excited_state, QuantumDefectTable};
use rydberg_blockade::constants::PhysicalConstants;

fn main() -> rydberg_blockade::Result<()> {
    let table = QuantumDefectTable::rb87();
    let consts = PhysicalConstants::rb87();
    for field in [0.0, 0.5, 1.15, 3.0, 10.0] {
        let state = laser_excited_state(79, field, &table, &consts)?;
        let parts: Vec<String> = state
            .basis
            .iter()
            .zip(&state.amplitudes)
            .filter(|(_, a)| a.abs() > 1e-6)
            .map(|(s, a)| format!("{a:+.5} |{s}>"))
            .collect();
        println!("B = {field:>5.2} mT  E = {:+9.4} MHz  {}", state.energy, parts.join(" "));
    }
    Ok(())
}
