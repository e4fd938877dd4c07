//! Single-atom Rydberg levels: quantum-defect energies, fine-structure
//! Zeeman Hamiltonian, and the laser-excited dressed state `|r>`.
//!
//! The quantization axis is the magnetic-field axis, which is also the
//! excitation-laser polarization axis.

use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::halfint::HalfInt;
use crate::linalg::diagonalize;
use crate::wigner::clebsch_gordan;

/// The quantum-defect table shipped with the crate.
pub const RB87_DEFECTS: &str = include_str!("../data/rb87_quantum_defects.txt");

const SPIN: HalfInt = HalfInt::HALF;

pub(crate) fn orbital_letter(l: u32) -> char {
    const LETTERS: &[u8] = b"spdfghiklmnoqrtuv";
    LETTERS.get(l as usize).map_or('?', |&c| c as char)
}

/// A shell `(n, l)` containing both fine-structure components.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Shell {
    pub n: u32,
    pub l: u32,
}

impl Shell {
    pub fn new(n: u32, l: u32) -> Result<Self> {
        if n == 0 || l >= n {
            return Err(Error::InvalidState(format!("shell n={n}, l={l} requires 0 <= l < n")));
        }
        Ok(Shell { n, l })
    }

    /// Allowed `j` values, ascending.
    pub fn js(self) -> Vec<HalfInt> {
        if self.l == 0 {
            vec![SPIN]
        } else {
            let l = HalfInt::from_int(self.l as i32);
            vec![l - SPIN, l + SPIN]
        }
    }

    /// All `|n l j m_j>` states ordered by `j`, then `m_j`, ascending.
    pub fn states(self) -> Vec<AtomState> {
        self.js()
            .into_iter()
            .flat_map(|j| j.projections().map(move |m| AtomState { n: self.n, l: self.l, j, mj: m }))
            .collect()
    }
}

impl fmt::Display for Shell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.n, orbital_letter(self.l))
    }
}

/// A fine-structure Zeeman sublevel `|n l j m_j>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AtomState {
    pub n: u32,
    pub l: u32,
    pub j: HalfInt,
    pub mj: HalfInt,
}

impl AtomState {
    pub fn new(n: u32, l: u32, j: HalfInt, mj: HalfInt) -> Result<Self> {
        let state = AtomState { n, l, j, mj };
        state.validate()?;
        Ok(state)
    }

    fn validate(&self) -> Result<()> {
        let bad = |why: &str| Err(Error::InvalidState(format!("{self}: {why}")));
        if self.n == 0 || self.l >= self.n {
            return bad("requires 0 <= l < n");
        }
        let l2 = 2 * self.l as i32;
        let j2 = self.j.twice();
        if self.l == 0 && j2 != 1 || self.l > 0 && j2 != l2 - 1 && j2 != l2 + 1 {
            return bad("j must be l +- 1/2");
        }
        if self.mj.twice().abs() > j2 || (j2 - self.mj.twice()) % 2 != 0 {
            return bad("m_j must be one of -j..j");
        }
        Ok(())
    }

    pub fn shell(&self) -> Shell {
        Shell { n: self.n, l: self.l }
    }

    /// `(n, l, j)` without the projection.
    pub fn level(&self) -> Level {
        Level { n: self.n, l: self.l, j: self.j }
    }
}

impl fmt::Display for AtomState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{} m={}", self.n, orbital_letter(self.l), self.j, self.mj)
    }
}

/// A fine-structure level `(n, l, j)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Level {
    pub n: u32,
    pub l: u32,
    pub j: HalfInt,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.n, orbital_letter(self.l), self.j)
    }
}

impl std::str::FromStr for Level {
    type Err = Error;

    /// Parses labels such as `79d5/2`.
    fn from_str(s: &str) -> Result<Self> {
        let split = s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len());
        let n: u32 = s[..split].parse().map_err(|_| Error::Parse(format!("level `{s}`: missing n")))?;
        let (l, j) = parse_channel(&s[split..]).ok_or_else(|| Error::Parse(format!("level `{s}`: bad channel")))?;
        if l >= n {
            return Err(Error::InvalidState(format!("level `{s}`: l must be below n")));
        }
        Ok(Level { n, l, j })
    }
}

/// Rydberg-Ritz coefficients of one `(l, j)` channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectChannel {
    pub l: u32,
    pub j: HalfInt,
    pub delta0: f64,
    pub delta2: f64,
    pub n_min: u32,
    pub n_max: u32,
    pub citation: String,
}

impl DefectChannel {
    pub fn label(&self) -> String {
        format!("{}{}", orbital_letter(self.l), self.j)
    }
}

/// Quantum defects per `(l, j)` channel, parsed from a text table.
///
/// Format: one channel per line, `#` starts a comment. Fields are
/// whitespace-separated: `channel delta0 delta2 n_min n_max citation...`,
/// where `channel` is written like `d5/2` or `s1/2` and the citation runs
/// to the end of the line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumDefectTable {
    pub channels: Vec<DefectChannel>,
    /// SHA-256 of the canonical channel list.
    pub hash: String,
}

impl QuantumDefectTable {
    pub fn rb87() -> Self {
        Self::parse(RB87_DEFECTS).expect("shipped defect table is valid")
    }

    /// Zero defects in every channel up to `f`: the hydrogen atom.
    pub fn hydrogenic() -> Self {
        let mut channels = Vec::new();
        for l in 0..4u32 {
            for j in (Shell { n: l + 1, l }).js() {
                channels.push(DefectChannel {
                    l,
                    j,
                    delta0: 0.0,
                    delta2: 0.0,
                    n_min: 1,
                    n_max: 10_000,
                    citation: "hydrogenic limit".into(),
                });
            }
        }
        Self::from_channels(channels).expect("hydrogenic table is valid")
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut channels = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |what: &str| Error::Parse(format!("defect table line {}: {what}", lineno + 1));
            let mut fields = line.split_whitespace();
            let mut next = |name: &str| fields.next().ok_or_else(|| err(&format!("missing {name}")));
            let (l, j) = parse_channel(next("channel")?).ok_or_else(|| err("bad channel label"))?;
            let num = |s: &str, name: &str| s.parse::<f64>().map_err(|_| err(&format!("bad {name}")));
            let delta0 = num(next("delta0")?, "delta0")?;
            let delta2 = num(next("delta2")?, "delta2")?;
            let n_min = next("n_min")?.parse().map_err(|_| err("bad n_min"))?;
            let n_max = next("n_max")?.parse().map_err(|_| err("bad n_max"))?;
            let citation = fields.collect::<Vec<_>>().join(" ");
            if citation.is_empty() {
                return Err(err("missing citation"));
            }
            channels.push(DefectChannel { l, j, delta0, delta2, n_min, n_max, citation });
        }
        Self::from_channels(channels)
    }

    pub fn from_channels(channels: Vec<DefectChannel>) -> Result<Self> {
        for (i, c) in channels.iter().enumerate() {
            if channels[..i].iter().any(|d| d.l == c.l && d.j == c.j) {
                return Err(Error::Config(format!("duplicate defect channel {}", c.label())));
            }
            if c.n_min > c.n_max {
                return Err(Error::Config(format!("channel {} has empty n range", c.label())));
            }
        }
        let mut hasher = Sha256::new();
        for c in &channels {
            hasher.update(
                format!(
                    "{} {} {:e} {:e} {} {}\n",
                    c.l,
                    c.j.twice(),
                    c.delta0,
                    c.delta2,
                    c.n_min,
                    c.n_max
                )
                .as_bytes(),
            );
        }
        let hash = hex::encode(hasher.finalize());
        Ok(QuantumDefectTable { channels, hash })
    }

    pub fn channel(&self, l: u32, j: HalfInt) -> Option<&DefectChannel> {
        self.channels.iter().find(|c| c.l == l && c.j == j)
    }

    /// Quantum defect `delta0 + delta2 / (n - delta0)^2`; zero for `l >= 4`.
    pub fn defect(&self, level: Level) -> Result<f64> {
        match self.channel(level.l, level.j) {
            Some(c) => {
                if level.n < c.n_min || level.n > c.n_max {
                    return Err(Error::Config(format!(
                        "{level} lies outside the validity range n = {}..{} of channel {}",
                        c.n_min,
                        c.n_max,
                        c.label()
                    )));
                }
                let n = f64::from(level.n);
                Ok(c.delta0 + c.delta2 / (n - c.delta0).powi(2))
            }
            None if level.l >= 4 => Ok(0.0),
            None => Err(Error::MissingChannel {
                channel: format!("{}{}", orbital_letter(level.l), level.j),
            }),
        }
    }

    /// Effective principal quantum number `n - delta`.
    pub fn effective_n(&self, level: Level) -> Result<f64> {
        Ok(f64::from(level.n) - self.defect(level)?)
    }
}

fn parse_channel(label: &str) -> Option<(u32, HalfInt)> {
    let mut chars = label.chars();
    let letter = chars.next()?;
    let l = (0..17).find(|&l| orbital_letter(l) == letter)?;
    let rest: String = chars.collect();
    let (num, den) = rest.split_once('/')?;
    if den != "2" {
        return None;
    }
    let j = HalfInt::from_twice(num.parse().ok()?);
    let l2 = 2 * l as i32;
    let valid = if l == 0 { j.twice() == 1 } else { j.twice() == l2 - 1 || j.twice() == l2 + 1 };
    valid.then_some((l, j))
}

/// Level energy `-Ry / (n - delta)^2` in MHz below the ionization limit.
pub fn level_energy(
    level: Level,
    table: &QuantumDefectTable,
    consts: &PhysicalConstants,
) -> Result<f64> {
    let n_star = table.effective_n(level)?;
    if n_star <= 0.0 {
        return Err(Error::InvalidState(format!("{level}: effective n {n_star} is not positive")));
    }
    Ok(-consts.rydberg_frequency / (n_star * n_star))
}

/// `<b| mu_B B (g_L L_z + g_S S_z) |a> / h` in MHz for states of one shell.
pub fn zeeman_element(
    a: &AtomState,
    b: &AtomState,
    field_mt: f64,
    consts: &PhysicalConstants,
) -> Result<f64> {
    if a.shell() != b.shell() || a.mj != b.mj {
        return Ok(0.0);
    }
    let l = HalfInt::from_int(a.l as i32);
    let m = a.mj;
    let mut sum = 0.0;
    for ms in [SPIN, -SPIN] {
        let ml = m - ms;
        if ml.abs() > l {
            continue;
        }
        let ca = clebsch_gordan(l, ml, SPIN, ms, a.j, m)?;
        let cb = clebsch_gordan(l, ml, SPIN, ms, b.j, m)?;
        sum += ca * cb * (consts.orbital_g_factor * ml.value() + consts.electron_g_factor * ms.value());
    }
    Ok(consts.bohr_magneton_over_h * field_mt * sum)
}

/// Fine-structure energies plus the Zeeman Hamiltonian of one `(n, l)`
/// manifold, in MHz, in the order of `manifold`.
pub fn zeeman_hamiltonian(
    manifold: &[AtomState],
    field_mt: f64,
    table: &QuantumDefectTable,
    consts: &PhysicalConstants,
) -> Result<DMatrix<f64>> {
    if field_mt < 0.0 || !field_mt.is_finite() {
        return Err(Error::Argument(format!("field must be finite and >= 0, got {field_mt} mT")));
    }
    if let Some(first) = manifold.first() {
        if let Some(other) = manifold.iter().find(|s| s.shell() != first.shell()) {
            return Err(Error::Invariant(format!(
                "Zeeman manifold mixes shells {} and {}",
                first.shell(),
                other.shell()
            )));
        }
    }
    let dim = manifold.len();
    let mut h = DMatrix::zeros(dim, dim);
    for (i, a) in manifold.iter().enumerate() {
        h[(i, i)] = level_energy(a.level(), table, consts)?;
        for (k, b) in manifold.iter().enumerate() {
            h[(k, i)] += zeeman_element(a, b, field_mt, consts)?;
        }
    }
    Ok(h)
}

/// Zeeman eigenstate of the `n d` manifold adiabatically connected to the
/// laser-coupled sublevel.
///
/// Amplitudes are real in the Condon-Shortley phase convention used here.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DressedState {
    pub basis: Vec<AtomState>,
    pub amplitudes: Vec<f64>,
    /// Energy relative to the zero-field `n d5/2` level, MHz.
    pub energy: f64,
    /// Absolute energy below the ionization limit, MHz.
    pub absolute_energy: f64,
    pub field: f64,
}

impl DressedState {
    pub fn amplitude(&self, state: &AtomState) -> f64 {
        self.basis.iter().position(|s| s == state).map_or(0.0, |i| self.amplitudes[i])
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt()
    }
}

/// The laser-excited sublevel `|n d5/2, m_j = 1/2>` at zero field.
pub fn bare_target_state(n: u32) -> AtomState {
    AtomState { n, l: 2, j: HalfInt::from_twice(5), mj: HalfInt::HALF }
}

/// Eigenvector of the `(n d3/2, n d5/2)` Zeeman Hamiltonian with maximal
/// squared overlap on `|n d5/2, m_j = 1/2>`.
pub fn laser_excited_state(
    n: u32,
    field_mt: f64,
    table: &QuantumDefectTable,
    consts: &PhysicalConstants,
) -> Result<DressedState> {
    let shell = Shell::new(n, 2)?;
    let basis = shell.states();
    let reference = level_energy(bare_target_state(n).level(), table, consts)?;
    let mut h = zeeman_hamiltonian(&basis, field_mt, table, consts)?;
    for i in 0..basis.len() {
        h[(i, i)] -= reference;
    }
    let eig = diagonalize(&h)?;
    let target = basis.iter().position(|s| *s == bare_target_state(n)).unwrap();

    let overlaps: Vec<f64> = (0..basis.len()).map(|c| eig.vectors[(target, c)].powi(2)).collect();
    let mut ranked: Vec<usize> = (0..basis.len()).collect();
    ranked.sort_by(|&a, &b| overlaps[b].total_cmp(&overlaps[a]).then(a.cmp(&b)));
    let (best, second) = (ranked[0], ranked[1]);
    if (overlaps[best] - overlaps[second]).abs() < 1e-9 {
        return Err(Error::AmbiguousState { first: best, second, overlap: overlaps[best] });
    }

    let column: DVector<f64> = eig.vectors.column(best).into_owned();
    let sign = column[target].signum();
    let amplitudes: Vec<f64> = column.iter().map(|a| a * sign).collect();
    let energy = eig.values[best];
    Ok(DressedState {
        basis,
        amplitudes,
        energy,
        absolute_energy: energy + reference,
        field: field_mt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn consts() -> PhysicalConstants {
        PhysicalConstants::rb87()
    }

    fn level(n: u32, l: u32, twice_j: i32) -> Level {
        Level { n, l, j: HalfInt::from_twice(twice_j) }
    }

    #[test]
    fn level_labels_parse() {
        assert_eq!("79d5/2".parse::<Level>().unwrap(), level(79, 2, 5));
        assert_eq!("5s1/2".parse::<Level>().unwrap(), level(5, 0, 1));
        assert_eq!(level(78, 3, 7).to_string().parse::<Level>().unwrap(), level(78, 3, 7));
        for bad in ["d5/2", "79d7/2", "79x1/2", "2d3/2"] {
            assert!(bad.parse::<Level>().is_err(), "{bad}");
        }
    }

    #[test]
    fn hydrogenic_limit() {
        let t = QuantumDefectTable::hydrogenic();
        let c = consts();
        let e = level_energy(level(79, 2, 5), &t, &c).unwrap();
        assert_eq!(e, -c.rydberg_frequency / (79.0 * 79.0));
    }

    #[test]
    fn fine_structure_splitting_of_79d() {
        let (t, c) = (QuantumDefectTable::rb87(), consts());
        let split = level_energy(level(79, 2, 5), &t, &c).unwrap()
            - level_energy(level(79, 2, 3), &t, &c).unwrap();
        // 23 MHz within 15%
        assert!((split - 23.0).abs() < 0.15 * 23.0, "{split}");
        assert_relative_eq!(split, 22.832, epsilon = 5e-3);
    }

    #[test]
    fn forster_defects() {
        // Frozen from an independent Rydberg-Ritz evaluation of the shipped table.
        let (t, c) = (QuantumDefectTable::rb87(), consts());
        let e = |n, l, tj| level_energy(level(n, l, tj), &t, &c).unwrap();
        let dd = 2.0 * e(79, 2, 5);
        let cases = [
            ((80, 1, 3), (78, 3, 5), 431.683),
            ((80, 1, 1), (78, 3, 5), 243.878),
            ((81, 1, 1), (77, 3, 5), 47.699),
            ((81, 1, 1), (77, 3, 7), 47.348),
            ((81, 1, 3), (77, 3, 7), 228.054),
        ];
        let spacing = e(79, 2, 5) - e(78, 2, 5);
        for ((np, lp, jp), (nf, lf, jf), expected) in cases {
            let defect = e(np, lp, jp) + e(nf, lf, jf) - dd;
            assert!((defect - expected).abs() < 2e-3, "{defect} vs {expected}");
            assert!(defect.abs() < 0.05 * spacing);
        }
    }

    #[test]
    fn energy_increases_with_n() {
        let (t, c) = (QuantumDefectTable::rb87(), consts());
        for ch in &t.channels {
            let mut last = f64::NEG_INFINITY;
            for n in ch.n_min.max(ch.l + 1)..=ch.n_max {
                let e = level_energy(Level { n, l: ch.l, j: ch.j }, &t, &c).unwrap();
                assert!(e > last);
                last = e;
            }
        }
    }

    #[test]
    fn missing_channel_is_reported() {
        let t = QuantumDefectTable::parse("d5/2 1.3 0.0 4 200 test\n").unwrap();
        let err = level_energy(level(79, 2, 3), &t, &consts()).unwrap_err();
        assert!(matches!(err, Error::MissingChannel { ref channel } if channel == "d3/2"));
        // l >= 4 needs no entry
        assert!(level_energy(level(79, 4, 9), &t, &consts()).is_ok());
    }

    #[test]
    fn table_parsing_errors() {
        assert!(QuantumDefectTable::parse("x5/2 1 0 1 2 cite").is_err());
        assert!(QuantumDefectTable::parse("d7/2 1 0 1 2 cite").is_err());
        assert!(QuantumDefectTable::parse("d5/2 1 0 1 2").is_err());
        assert!(QuantumDefectTable::parse("d5/2 1 0 1 2 a\nd5/2 1 0 1 2 b").is_err());
    }

    #[test]
    fn shipped_table_invariants() {
        let t = QuantumDefectTable::rb87();
        for (l, tj) in [(0, 1), (1, 1), (1, 3), (2, 3), (2, 5), (3, 5), (3, 7)] {
            assert!(t.channel(l, HalfInt::from_twice(tj)).is_some());
        }
        let d0 = |l, tj| t.channel(l, HalfInt::from_twice(tj)).unwrap().delta0;
        assert!(d0(0, 1) > d0(1, 1) && d0(1, 3) > d0(2, 3) && d0(2, 5) > d0(3, 5));
        assert!(d0(3, 5) < 0.1 && d0(3, 7) < 0.1);
        assert!(t.channels.iter().all(|c| !c.citation.is_empty()));
    }

    #[test]
    fn state_validation() {
        let h = HalfInt::from_twice;
        assert!(AtomState::new(79, 2, h(5), h(1)).is_ok());
        assert!(AtomState::new(79, 2, h(7), h(1)).is_err());
        assert!(AtomState::new(79, 2, h(3), h(5)).is_err());
        assert!(AtomState::new(79, 0, h(1), h(2)).is_err());
        assert!(AtomState::new(3, 3, h(5), h(1)).is_err());
        assert_eq!(Shell::new(79, 2).unwrap().states().len(), 10);
        assert_eq!(Shell::new(80, 1).unwrap().states().len(), 6);
        assert_eq!(Shell::new(78, 3).unwrap().states().len(), 14);
    }

    #[test]
    fn zero_field_zeeman_is_diagonal() {
        let (t, c) = (QuantumDefectTable::rb87(), consts());
        let basis = Shell::new(79, 2).unwrap().states();
        let h = zeeman_hamiltonian(&basis, 0.0, &t, &c).unwrap();
        for i in 0..10 {
            for k in 0..10 {
                if i != k {
                    assert_eq!(h[(i, k)], 0.0);
                }
            }
            assert_eq!(h[(i, i)], level_energy(basis[i].level(), &t, &c).unwrap());
        }
    }

    #[test]
    fn stretched_state_slope() {
        let (t, c) = (QuantumDefectTable::rb87(), consts());
        for l in 1..4u32 {
            let shell = Shell::new(79, l).unwrap();
            let basis = shell.states();
            let top = basis.len() - 1;
            let b = 0.8;
            let h0 = zeeman_hamiltonian(&basis, 0.0, &t, &c).unwrap();
            let h = zeeman_hamiltonian(&basis, b, &t, &c).unwrap();
            let slope = (h[(top, top)] - h0[(top, top)]) / b;
            let expected = c.bohr_magneton_over_h
                * (c.orbital_g_factor * f64::from(l) + c.electron_g_factor / 2.0);
            assert_relative_eq!(slope, expected, max_relative = 1e-9);
            for k in 0..top {
                assert_eq!(h[(k, top)], 0.0);
            }
        }
    }

    #[test]
    fn zeeman_mixed_shells_rejected() {
        let (t, c) = (QuantumDefectTable::rb87(), consts());
        let mut basis = Shell::new(79, 2).unwrap().states();
        basis.extend(Shell::new(80, 1).unwrap().states());
        assert!(matches!(zeeman_hamiltonian(&basis, 1.0, &t, &c), Err(Error::Invariant(_))));
    }

    #[test]
    fn zeeman_is_block_diagonal_in_mj_and_symmetric() {
        let (t, c) = (QuantumDefectTable::rb87(), consts());
        let basis = Shell::new(79, 2).unwrap().states();
        let h = zeeman_hamiltonian(&basis, 1.15, &t, &c).unwrap();
        for (i, a) in basis.iter().enumerate() {
            for (k, b) in basis.iter().enumerate() {
                assert_eq!(h[(i, k)], h[(k, i)]);
                if a.mj != b.mj {
                    assert_eq!(h[(i, k)], 0.0);
                }
            }
        }
    }

    /// Off-diagonal `<l-1/2, m | S_z | l+1/2, m>` magnitude from the
    /// textbook closed form `sqrt((l+1/2)^2 - m^2) / (2l+1)`.
    #[test]
    fn j_mixing_element_closed_form() {
        let c = consts();
        for l in 1..4u32 {
            let shell = Shell::new(79, l).unwrap();
            let js = shell.js();
            for m in js[0].projections() {
                let a = AtomState { n: 79, l, j: js[0], mj: m };
                let b = AtomState { n: 79, l, j: js[1], mj: m };
                let v = zeeman_element(&a, &b, 1.0, &c).unwrap();
                let lf = f64::from(l);
                let sz = ((lf + 0.5).powi(2) - m.value().powi(2)).sqrt() / (2.0 * lf + 1.0);
                let expected = c.bohr_magneton_over_h * (c.electron_g_factor - c.orbital_g_factor) * sz;
                assert_relative_eq!(v.abs(), expected, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn excited_state_at_zero_field() {
        let (t, c) = (QuantumDefectTable::rb87(), consts());
        let r = laser_excited_state(79, 0.0, &t, &c).unwrap();
        assert_eq!(r.amplitude(&bare_target_state(79)), 1.0);
        assert_eq!(r.energy, 0.0);
        assert_relative_eq!(r.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn excited_state_at_bias_field_has_d32_admixture() {
        let (t, c) = (QuantumDefectTable::rb87(), consts());
        let r = laser_excited_state(79, 1.15, &t, &c).unwrap();
        assert_relative_eq!(r.norm(), 1.0, epsilon = 1e-12);
        let h = HalfInt::from_twice;
        let d32 = AtomState { n: 79, l: 2, j: h(3), mj: h(1) };
        let admix = r.amplitude(&d32).powi(2);
        assert!(admix > 0.01 && admix < 0.5, "admixture {admix}");

        // Independent 2x2 treatment of the m_j = 1/2 block.
        let e52 = level_energy(bare_target_state(79).level(), &t, &c).unwrap();
        let e32 = level_energy(d32.level(), &t, &c).unwrap();
        let z = |a: &AtomState, b: &AtomState| zeeman_element(a, b, 1.15, &c).unwrap();
        let s52 = bare_target_state(79);
        let (h11, h22, h12) = (e52 + z(&s52, &s52), e32 + z(&d32, &d32), z(&s52, &d32));
        let mean = (h11 + h22) / 2.0;
        let root = (((h11 - h22) / 2.0).powi(2) + h12 * h12).sqrt();
        let upper = mean + root;
        assert_relative_eq!(r.absolute_energy, upper, max_relative = 1e-12);
        let tan = h12 / (upper - h22);
        let expected_admix = tan * tan / (1.0 + tan * tan);
        assert_relative_eq!(admix, expected_admix, epsilon = 1e-7);
        // Other m_j components vanish.
        for (s, a) in r.basis.iter().zip(&r.amplitudes) {
            if s.mj != HalfInt::HALF {
                assert!(a.abs() < 1e-14, "{s} {a}");
            }
        }
    }

    #[test]
    fn excited_state_paschen_back_limit() {
        let (t, c) = (QuantumDefectTable::rb87(), consts());
        let r = laser_excited_state(79, 100.0, &t, &c).unwrap();
        // |m_l = 0, m_s = +1/2> expanded on |j, m_j = 1/2>.
        let h = HalfInt::from_twice;
        let two = HalfInt::from_int(2);
        let mut overlap = 0.0;
        for tj in [3, 5] {
            let s = AtomState { n: 79, l: 2, j: h(tj), mj: h(1) };
            overlap += r.amplitude(&s) * clebsch_gordan(two, HalfInt::ZERO, h(1), h(1), h(tj), h(1)).unwrap();
        }
        assert!(overlap.powi(2) > 0.999, "{}", overlap.powi(2));
    }
}
