//! Wigner 3j and 6j symbols and Clebsch-Gordan coefficients.
//!
//! For arguments up to j = 40 the Racah sums are evaluated exactly: every
//! factorial is carried as a prime factorisation, the alternating sum is
//! formed over big integers, and only the final square root is taken in
//! floating point. Beyond that a log-factorial floating-point sum is used.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::halfint::HalfInt;

/// Largest doubled angular momentum handled with exact arithmetic.
const EXACT_TWICE_J_LIMIT: i32 = 80;

/// Wigner 3j symbol `(j1 j2 j3; m1 m2 m3)`.
///
/// Returns 0 whenever a selection rule is violated (triangle condition,
/// `m1 + m2 + m3 != 0`, `|m| > j`, or mismatched integer/half-integer
/// parity). Negative `j` is an argument error.
pub fn wigner_3j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    m1: HalfInt,
    m2: HalfInt,
    m3: HalfInt,
) -> Result<f64> {
    check_nonnegative(&[j1, j2, j3])?;
    let (j1, j2, j3) = (j1.twice(), j2.twice(), j3.twice());
    let (m1, m2, m3) = (m1.twice(), m2.twice(), m3.twice());
    if m1 + m2 + m3 != 0 || !triad(j1, j2, j3) {
        return Ok(0.0);
    }
    for (j, m) in [(j1, m1), (j2, m2), (j3, m3)] {
        if m.abs() > j || (j + m) % 2 != 0 {
            return Ok(0.0);
        }
    }
    // Everything below is in ordinary (not doubled) integers.
    let h = |x: i32| -> i64 { i64::from(x) / 2 };
    let a = h(j1 + j2 - j3);
    let b = h(j1 - m1);
    let c = h(j2 + m2);
    let d = h(j3 - j2 + m1);
    let e = h(j3 - j1 - m2);
    let k_min = 0.max(-d).max(-e);
    let k_max = a.min(b).min(c);

    let prefactor_num = [
        h(j1 + j2 - j3),
        h(j1 - j2 + j3),
        h(-j1 + j2 + j3),
        h(j1 + m1),
        h(j1 - m1),
        h(j2 + m2),
        h(j2 - m2),
        h(j3 + m3),
        h(j3 - m3),
    ];
    let prefactor_den = [h(j1 + j2 + j3) + 1];
    let terms: Vec<Term> = (k_min..=k_max)
        .map(|k| Term {
            negative: k % 2 != 0,
            num: vec![],
            den: vec![k, a - k, b - k, c - k, d + k, e + k],
        })
        .collect();
    let phase_exp = h(j1 - j2 - m3);
    let sign = if phase_exp.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let exact = [j1, j2, j3].iter().all(|&j| j <= EXACT_TWICE_J_LIMIT);
    Ok(sign * racah_sum(&prefactor_num, &prefactor_den, &terms, exact))
}

/// Wigner 6j symbol `{j1 j2 j3; j4 j5 j6}`; 0 when any triad is violated.
pub fn wigner_6j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    j4: HalfInt,
    j5: HalfInt,
    j6: HalfInt,
) -> Result<f64> {
    check_nonnegative(&[j1, j2, j3, j4, j5, j6])?;
    let [j1, j2, j3, j4, j5, j6] = [j1, j2, j3, j4, j5, j6].map(HalfInt::twice);
    let triads = [(j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3)];
    if !triads.iter().all(|&(a, b, c)| triad(a, b, c)) {
        return Ok(0.0);
    }
    let h = |x: i32| -> i64 { i64::from(x) / 2 };
    let mut prefactor_num = Vec::with_capacity(12);
    let mut prefactor_den = Vec::with_capacity(4);
    for &(a, b, c) in &triads {
        prefactor_num.extend([h(a + b - c), h(a - b + c), h(-a + b + c)]);
        prefactor_den.push(h(a + b + c) + 1);
    }
    let alpha = triads.map(|(a, b, c)| h(a + b + c));
    let beta = [h(j1 + j2 + j4 + j5), h(j2 + j3 + j5 + j6), h(j3 + j1 + j6 + j4)];
    let t_min = *alpha.iter().max().unwrap();
    let t_max = *beta.iter().min().unwrap();
    let terms: Vec<Term> = (t_min..=t_max)
        .map(|t| Term {
            negative: t % 2 != 0,
            num: vec![t + 1],
            den: vec![
                t - alpha[0],
                t - alpha[1],
                t - alpha[2],
                t - alpha[3],
                beta[0] - t,
                beta[1] - t,
                beta[2] - t,
            ],
        })
        .collect();
    let exact = [j1, j2, j3, j4, j5, j6].iter().all(|&j| j <= EXACT_TWICE_J_LIMIT);
    Ok(racah_sum(&prefactor_num, &prefactor_den, &terms, exact))
}

/// Clebsch-Gordan coefficient `<j1 m1; j2 m2 | J M>`.
pub fn clebsch_gordan(
    j1: HalfInt,
    m1: HalfInt,
    j2: HalfInt,
    m2: HalfInt,
    j: HalfInt,
    m: HalfInt,
) -> Result<f64> {
    let w = wigner_3j(j1, j2, j, m1, m2, -m)?;
    let phase = (j1 - j2 + m).twice() / 2;
    let sign = if phase.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    Ok(sign * f64::from(j.multiplicity()).sqrt() * w)
}

fn check_nonnegative(js: &[HalfInt]) -> Result<()> {
    match js.iter().find(|j| j.twice() < 0) {
        Some(j) => Err(Error::Argument(format!("angular momentum must be non-negative, got {j}"))),
        None => Ok(()),
    }
}

/// Triangle condition on doubled values, including integer perimeter.
fn triad(a: i32, b: i32, c: i32) -> bool {
    c >= (a - b).abs() && c <= a + b && (a + b + c) % 2 == 0
}

/// One summand `sign * prod(num!) / prod(den!)` of a Racah sum.
struct Term {
    negative: bool,
    num: Vec<i64>,
    den: Vec<i64>,
}

/// Evaluates `sqrt(prod(pn!) / prod(pd!)) * sum_k term_k`.
fn racah_sum(prefactor_num: &[i64], prefactor_den: &[i64], terms: &[Term], exact: bool) -> f64 {
    if terms.is_empty() {
        return 0.0;
    }
    if exact {
        exact_racah_sum(prefactor_num, prefactor_den, terms)
    } else {
        float_racah_sum(prefactor_num, prefactor_den, terms)
    }
}

fn exact_racah_sum(prefactor_num: &[i64], prefactor_den: &[i64], terms: &[Term]) -> f64 {
    let largest = prefactor_num
        .iter()
        .chain(prefactor_den)
        .chain(terms.iter().flat_map(|t| t.num.iter().chain(&t.den)))
        .copied()
        .max()
        .unwrap_or(1)
        .max(2);
    let primes = primes_up_to(largest as u64);

    let exps = |num: &[i64], den: &[i64]| -> Vec<i64> {
        let mut e = vec![0i64; primes.len()];
        for &n in num {
            add_factorial_exponents(&mut e, &primes, n, 1);
        }
        for &n in den {
            add_factorial_exponents(&mut e, &primes, n, -1);
        }
        e
    };

    let term_exps: Vec<Vec<i64>> = terms.iter().map(|t| exps(&t.num, &t.den)).collect();
    // Common factor: the smallest exponent of each prime over all terms.
    let common: Vec<i64> = (0..primes.len())
        .map(|i| term_exps.iter().map(|e| e[i]).min().unwrap())
        .collect();
    let mut sum = BigInt::zero();
    for (term, e) in terms.iter().zip(&term_exps) {
        let mut value = BigInt::one();
        for (i, &p) in primes.iter().enumerate() {
            let k = e[i] - common[i];
            if k > 0 {
                value *= BigInt::from(p).pow(k as u32);
            }
        }
        if term.negative {
            sum -= value;
        } else {
            sum += value;
        }
    }
    if sum.is_zero() {
        return 0.0;
    }

    // result = sum * prod p^(common + pref/2), written as
    // sum * num / den * sqrt(odd) with integer num, den and squarefree odd.
    let prefactor = exps(prefactor_num, prefactor_den);
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    let mut odd = BigInt::one();
    for (i, &p) in primes.iter().enumerate() {
        let twice_exp = 2 * common[i] + prefactor[i];
        let whole = twice_exp.div_euclid(2);
        if twice_exp.rem_euclid(2) == 1 {
            odd *= BigInt::from(p);
        }
        if whole > 0 {
            num *= BigInt::from(p).pow(whole as u32);
        } else if whole < 0 {
            den *= BigInt::from(p).pow((-whole) as u32);
        }
    }
    let negative = sum.is_negative();
    let magnitude = big_ratio(&(sum.abs() * num), &den) * odd.to_f64().unwrap().sqrt();
    if negative {
        -magnitude
    } else {
        magnitude
    }
}

fn float_racah_sum(prefactor_num: &[i64], prefactor_den: &[i64], terms: &[Term]) -> f64 {
    let ln_pref = 0.5
        * (prefactor_num.iter().map(|&n| ln_factorial(n)).sum::<f64>()
            - prefactor_den.iter().map(|&n| ln_factorial(n)).sum::<f64>());
    let logs: Vec<f64> = terms
        .iter()
        .map(|t| {
            t.num.iter().map(|&n| ln_factorial(n)).sum::<f64>()
                - t.den.iter().map(|&n| ln_factorial(n)).sum::<f64>()
        })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scaled: f64 = terms
        .iter()
        .zip(&logs)
        .map(|(t, &l)| {
            let v = (l - max).exp();
            if t.negative {
                -v
            } else {
                v
            }
        })
        .sum();
    scaled * (max + ln_pref).exp()
}

fn ln_factorial(n: i64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `a / b` for non-negative big integers, accurate to f64 precision even
/// when both operands overflow f64.
fn big_ratio(a: &BigInt, b: &BigInt) -> f64 {
    let shift = a.bits() as i64 - b.bits() as i64 - 64;
    let q = if shift > 0 {
        a / (b << shift as usize)
    } else {
        (a << (-shift) as usize) / b
    };
    q.to_f64().unwrap() * 2f64.powi(shift as i32)
}

fn primes_up_to(n: u64) -> Vec<u64> {
    let n = n as usize;
    let mut sieve = vec![true; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if sieve[i] {
            primes.push(i as u64);
            let mut k = i * i;
            while k <= n {
                sieve[k] = false;
                k += i;
            }
        }
    }
    primes
}

/// Adds `sign` times the prime exponents of `n!` (Legendre's formula).
fn add_factorial_exponents(exps: &mut [i64], primes: &[u64], n: i64, sign: i64) {
    let n = n as u64;
    for (e, &p) in exps.iter_mut().zip(primes) {
        if p > n {
            break;
        }
        let mut pk = p;
        while pk <= n {
            *e += sign * (n / pk) as i64;
            pk *= p;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn hi(twice: i32) -> HalfInt {
        HalfInt::from_twice(twice)
    }

    fn int(v: i32) -> HalfInt {
        HalfInt::from_int(v)
    }

    /// Independent closed form for `(j1 j2 j3; 0 0 0)` with even perimeter.
    fn three_j_zero_m(j1: i64, j2: i64, j3: i64) -> f64 {
        let big_j = j1 + j2 + j3;
        if big_j % 2 != 0 {
            return 0.0;
        }
        let g = big_j / 2;
        let f = |n: i64| ln_factorial(n);
        let ln = 0.5 * (f(big_j - 2 * j1) + f(big_j - 2 * j2) + f(big_j - 2 * j3) - f(big_j + 1))
            + f(g)
            - f(g - j1)
            - f(g - j2)
            - f(g - j3);
        let sign = if g % 2 == 0 { 1.0 } else { -1.0 };
        sign * ln.exp()
    }

    #[test]
    fn three_j_known_value() {
        let v = wigner_3j(int(1), int(1), int(0), int(0), int(0), int(0)).unwrap();
        assert_relative_eq!(v, -1.0 / 3f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn three_j_with_zero_j3() {
        for tj in 0..12 {
            for tm in (-tj..=tj).step_by(2) {
                let v = wigner_3j(hi(tj), hi(tj), int(0), hi(tm), hi(-tm), int(0)).unwrap();
                let phase = (tj - tm) / 2;
                let expected = if phase % 2 == 0 { 1.0 } else { -1.0 } / f64::from(tj + 1).sqrt();
                assert_relative_eq!(v, expected, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn three_j_zero_projection_matches_closed_form() {
        for j1 in 0..8 {
            for j2 in 0..8 {
                for j3 in (j1 as i64 - j2 as i64).unsigned_abs() as i32..=(j1 + j2) {
                    let v = wigner_3j(int(j1), int(j2), int(j3), int(0), int(0), int(0)).unwrap();
                    let w = three_j_zero_m(j1.into(), j2.into(), j3.into());
                    assert!((v - w).abs() < 1e-13, "({j1} {j2} {j3}): {v} vs {w}");
                }
            }
        }
    }

    #[test]
    fn three_j_selection_rules() {
        assert_eq!(wigner_3j(int(1), int(1), int(1), int(1), int(0), int(0)).unwrap(), 0.0);
        assert_eq!(wigner_3j(int(1), int(1), int(3), int(0), int(0), int(0)).unwrap(), 0.0);
        assert_eq!(wigner_3j(int(1), int(1), int(1), int(2), int(-2), int(0)).unwrap(), 0.0);
        assert!(wigner_3j(int(-1), int(1), int(0), int(0), int(0), int(0)).is_err());
    }

    #[test]
    fn six_j_known_values() {
        let v = wigner_6j(int(1), int(1), int(1), int(1), int(1), int(1)).unwrap();
        assert_relative_eq!(v, 1.0 / 6.0, epsilon = 1e-15);
        assert_eq!(wigner_6j(int(1), int(1), int(3), int(1), int(1), int(1)).unwrap(), 0.0);
    }

    #[test]
    fn six_j_with_zero_argument() {
        for tj1 in 0..7 {
            for tj2 in 0..7 {
                for tj3 in ((tj1 - tj2).abs()..=(tj1 + tj2)).step_by(2) {
                    let v = wigner_6j(hi(tj1), hi(tj2), hi(tj3), int(0), hi(tj3), hi(tj2)).unwrap();
                    let phase = (tj1 + tj2 + tj3) / 2;
                    let expected = if phase % 2 == 0 { 1.0 } else { -1.0 }
                        / (f64::from(tj2 + 1) * f64::from(tj3 + 1)).sqrt();
                    assert_relative_eq!(v, expected, epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn float_path_agrees_with_exact_path() {
        let (pn, pd) = (vec![3, 4, 5, 6, 2, 7, 1, 3, 8], vec![14]);
        let terms: Vec<Term> = (0..3)
            .map(|k| Term { negative: k % 2 == 1, num: vec![k + 2], den: vec![k, 3 - k, 4 - k] })
            .collect();
        let e = exact_racah_sum(&pn, &pd, &terms);
        let f = float_racah_sum(&pn, &pd, &terms);
        assert_relative_eq!(e, f, max_relative = 1e-12);
    }

    #[test]
    fn large_j_uses_float_path_consistently() {
        // Orthogonality-derived value for j = 45: (j j 0; m -m 0).
        let v = wigner_3j(int(45), int(45), int(0), int(3), int(-3), int(0)).unwrap();
        assert_relative_eq!(v, 1.0 / 91f64.sqrt(), max_relative = 1e-10);
        let w = wigner_3j(int(40), int(40), int(0), int(3), int(-3), int(0)).unwrap();
        assert_relative_eq!(w, -1.0 / 81f64.sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn clebsch_gordan_spin_half_coupling() {
        // |1, 1/2; 0, 1/2> component of |3/2, 1/2> is sqrt(2/3).
        let c = clebsch_gordan(int(1), int(0), hi(1), hi(1), hi(3), hi(1)).unwrap();
        assert_relative_eq!(c, (2.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        let d = clebsch_gordan(int(1), int(0), hi(1), hi(1), hi(1), hi(1)).unwrap();
        assert_relative_eq!(d.abs(), (1.0f64 / 3.0).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn big_ratio_handles_huge_operands() {
        let a = BigInt::from(3u8).pow(900);
        let b = BigInt::from(3u8).pow(899) * BigInt::from(2u8);
        assert_relative_eq!(big_ratio(&a, &b), 1.5, max_relative = 1e-15);
    }
}
