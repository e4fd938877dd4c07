//! Thermal position and Doppler spreads of trapped atoms and the
//! crosstalk excitation probability of the unaddressed site.

use rydberg_blockade::constants::PhysicalConstants;
use rydberg_blockade::expsim::{crosstalk_probability, doppler_sigma, thermal_sigma};

fn main() -> rydberg_blockade::Result<()> {
    let consts = PhysicalConstants::rb87();
    for t in [50.0, 150.0, 300.0] {
        println!(
            "T = {t:>5.0} uK: sigma_z = {:.3} um, sigma_y = {:.3} um, Doppler = {:.4} MHz (counter) {:.4} MHz (co)",
            thermal_sigma(12.3, t, &consts)?,
            thermal_sigma(139.0, t, &consts)?,
            doppler_sigma(t, 780.0, 480.0, true, &consts)?,
            doppler_sigma(t, 780.0, 480.0, false, &consts)?
        );
    }
    for (ratio, dac) in [(0.019, 2.0), (0.019, 0.5), (0.05, 2.0)] {
        println!("Omega'/Omega = {ratio}, AC Stark = {dac} MHz: P' = {:.2e}", crosstalk_probability(0.51, ratio, dac)?);
    }
    Ok(())
}
