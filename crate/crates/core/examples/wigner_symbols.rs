//! Wigner 3j and 6j symbols and Clebsch-Gordan coefficients for the
//! couplings that enter the dipole matrix elements.

use rydberg_blockade::wigner::{clebsch_gordan, wigner_3j, wigner_6j};
use rydberg_blockade::HalfInt;

fn h(twice: i32) -> HalfInt {
    HalfInt::from_twice(twice)
}

fn main() -> rydberg_blockade::Result<()> {
    println!("(5/2 1 3/2; -1/2 0 1/2) = {:.12}", wigner_3j(h(5), h(2), h(3), h(-1), h(0), h(1))?);
    println!("(2 1 1; 0 0 0)          = {:.12}", wigner_3j(h(4), h(2), h(2), h(0), h(0), h(0))?);
    println!("{{1 3/2 1/2; 5/2 2 1}}    = {:.12}", wigner_6j(h(2), h(3), h(1), h(5), h(4), h(2))?);
    println!("<2 0; 1/2 1/2 | 5/2 1/2> = {:.12}", clebsch_gordan(h(4), h(0), h(1), h(1), h(5), h(1))?);
    println!("<2 1; 1/2 -1/2 | 3/2 1/2> = {:.12}", clebsch_gordan(h(4), h(2), h(1), h(-1), h(3), h(1))?);
    let big = wigner_3j(h(81), h(2), h(79), h(1), h(0), h(-1))?;
    println!("(81/2 1 79/2; 1/2 0 -1/2) = {big:.12}");
    Ok(())
}
