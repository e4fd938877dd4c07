//! Two-atom product basis, the dipole-dipole operator at arbitrary angle,
//! Hamiltonian assembly, molecular spectra and curve-tracked scans.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atomdata::{
    bare_target_state, laser_excited_state, level_energy, zeeman_element, AtomState, DressedState, Level, Shell,
};
use crate::constants::PhysicalConstants;
use crate::dipole::{dipole_matrix_element, MatrixElementCache};
use crate::error::{Error, Result};
use crate::halfint::HalfInt;
use crate::linalg::diagonalize;

/// Ordered product `|a> (atom 1) x |b> (atom 2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PairState {
    pub a: AtomState,
    pub b: AtomState,
}

impl PairState {
    pub fn total_m(&self) -> HalfInt {
        self.a.mj + self.b.mj
    }
}

impl fmt::Display for PairState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}; {}>", self.a, self.b)
    }
}

/// A pair of shells, atom 1 first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PairChannel {
    pub first: Shell,
    pub second: Shell,
}

impl fmt::Display for PairChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.first, self.second)
    }
}

/// `(nd, nd)`, `(n+1 p, n-1 f)`, `(n+2 p, n-2 f)` and their mirror images.
pub fn forster_channels(n: u32) -> Result<Vec<PairChannel>> {
    if n < 6 {
        return Err(Error::Argument(format!("Forster channels need n >= 6, got {n}")));
    }
    let ch = |(n1, l1), (n2, l2)| -> Result<PairChannel> {
        Ok(PairChannel { first: Shell::new(n1, l1)?, second: Shell::new(n2, l2)? })
    };
    Ok(vec![
        ch((n, 2), (n, 2))?,
        ch((n + 1, 1), (n - 1, 3))?,
        ch((n - 1, 3), (n + 1, 1))?,
        ch((n + 2, 1), (n - 2, 3))?,
        ch((n - 2, 3), (n + 2, 1))?,
    ])
}

/// Enumerated pair states: by channel, then `j1, m1, j2, m2` ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairBasis {
    pub channels: Vec<PairChannel>,
    pub states: Vec<PairState>,
}

impl PairBasis {
    pub fn new(channels: Vec<PairChannel>) -> Result<Self> {
        for (i, c) in channels.iter().enumerate() {
            if channels[..i].contains(c) {
                return Err(Error::Config(format!("duplicate pair channel {c}")));
            }
        }
        let states = channels
            .iter()
            .flat_map(|c| {
                let second = c.second.states();
                c.first
                    .states()
                    .into_iter()
                    .flat_map(move |a| second.clone().into_iter().map(move |b| PairState { a, b }))
            })
            .collect();
        Ok(PairBasis { channels, states })
    }

    pub fn forster(n: u32) -> Result<Self> {
        Self::new(forster_channels(n)?)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Distinct single-atom states in order of first appearance.
    pub fn single_atom_states(&self) -> Vec<AtomState> {
        let mut shells: Vec<Shell> = Vec::new();
        for c in &self.channels {
            for s in [c.first, c.second] {
                if !shells.contains(&s) {
                    shells.push(s);
                }
            }
        }
        shells.into_iter().flat_map(Shell::states).collect()
    }

    /// Distinct fine-structure levels in order of first appearance.
    pub fn levels(&self) -> Vec<Level> {
        let mut out: Vec<Level> = Vec::new();
        for s in self.single_atom_states() {
            if !out.contains(&s.level()) {
                out.push(s.level());
            }
        }
        out
    }

    pub fn position(&self, state: &PairState) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }
}

/// Interatomic vector: length in um and polar angle to the field axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub distance: f64,
    pub theta: f64,
}

impl Geometry {
    pub fn new(distance_um: f64, theta: f64) -> Result<Self> {
        if !(distance_um > 0.0) || !distance_um.is_finite() {
            return Err(Error::SingularGeometry(distance_um));
        }
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(Error::Argument(format!("polar angle {theta} outside [0, pi]")));
        }
        Ok(Geometry { distance: distance_um, theta })
    }

    /// Sites separated by `z` along the field axis and offset by `dy`
    /// transversally.
    pub fn from_offsets(z_um: f64, dy_um: f64) -> Result<Self> {
        Self::new(z_um.hypot(dy_um), dy_um.abs().atan2(z_um))
    }
}

/// `(q1, q2, c)` such that `V R^3 / (Eh a0^3) = sum c d1_q1 d2_q2`.
fn angular_terms(theta: f64) -> [(i32, i32, f64); 9] {
    let (s, c) = theta.sin_cos();
    let axial = 1.0 - 3.0 * c * c;
    let mixed = 3.0 / std::f64::consts::SQRT_2 * s * c;
    let transverse = 1.5 * s * s;
    [
        (0, 0, axial),
        (1, -1, axial / 2.0),
        (-1, 1, axial / 2.0),
        (1, 0, -mixed),
        (0, 1, -mixed),
        (-1, 0, mixed),
        (0, -1, mixed),
        (1, 1, -transverse),
        (-1, -1, -transverse),
    ]
}

fn dipole_prefactor(geom: &Geometry, consts: &PhysicalConstants) -> f64 {
    consts.hartree_frequency * consts.bohr_radius.powi(3) / geom.distance.powi(3)
}

/// `<t|V_dd|s>` in MHz.
pub fn dipole_dipole_element(
    s: &PairState,
    t: &PairState,
    geom: &Geometry,
    cache: &MatrixElementCache,
    consts: &PhysicalConstants,
) -> Result<f64> {
    if !(geom.distance > 0.0) {
        return Err(Error::SingularGeometry(geom.distance));
    }
    let mut sum = 0.0;
    for (q1, q2, c) in angular_terms(geom.theta) {
        if c == 0.0 {
            continue;
        }
        let d1 = dipole_matrix_element(&s.a, &t.a, q1, cache)?;
        if d1 == 0.0 {
            continue;
        }
        sum += c * d1 * dipole_matrix_element(&s.b, &t.b, q2, cache)?;
    }
    Ok(sum * dipole_prefactor(geom, consts))
}

/// Eigenvalues and `|rr>` overlaps at one geometry and field.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MolecularSpectrum {
    pub geometry: Geometry,
    pub field: f64,
    /// `Delta_phi` relative to twice the dressed `|r>` energy, ascending, MHz.
    pub energies: Vec<f64>,
    /// `kappa_phi^2 = |<phi|rr>|^2`.
    pub overlaps: Vec<f64>,
    #[serde(skip)]
    pub vectors: Option<DMatrix<f64>>,
}

impl MolecularSpectrum {
    pub fn overlap_sum(&self) -> f64 {
        self.overlaps.iter().sum()
    }

    /// Index of the eigenstate with the largest `kappa^2`.
    pub fn dominant(&self) -> usize {
        let mut best = 0;
        for (i, k) in self.overlaps.iter().enumerate() {
            if *k > self.overlaps[best] {
                best = i;
            }
        }
        best
    }
}

/// A pair basis with its single-atom operators precomputed.
pub struct PairSystem {
    n: u32,
    basis: PairBasis,
    singles: Vec<AtomState>,
    index: Vec<(usize, usize)>,
    /// Level energies relative to the zero-field `nd5/2` level, MHz.
    energies: Vec<f64>,
    /// Single-atom Zeeman operator per mT.
    zeeman: DMatrix<f64>,
    /// `dipole[q + 1][(t, s)] = <t|d_q|s>`, atomic units.
    dipole: [DMatrix<f64>; 3],
    cache: Arc<MatrixElementCache>,
    consts: PhysicalConstants,
}

impl PairSystem {
    /// `n` selects the laser-excited level `nd5/2`.
    pub fn new(n: u32, basis: PairBasis, cache: Arc<MatrixElementCache>, consts: PhysicalConstants) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::Argument("pair basis is empty".into()));
        }
        let singles = basis.single_atom_states();
        let pos = |s: &AtomState| singles.iter().position(|x| x == s).unwrap();
        let index = basis.states.iter().map(|p| (pos(&p.a), pos(&p.b))).collect();
        let table = cache.table();
        let reference = level_energy(bare_target_state(n).level(), table, &consts)?;
        let energies = singles
            .iter()
            .map(|s| Ok(level_energy(s.level(), table, &consts)? - reference))
            .collect::<Result<Vec<_>>>()?;
        let m = singles.len();
        let mut zeeman = DMatrix::zeros(m, m);
        let mut dipole = [DMatrix::zeros(m, m), DMatrix::zeros(m, m), DMatrix::zeros(m, m)];
        for (i, s) in singles.iter().enumerate() {
            for (k, t) in singles.iter().enumerate() {
                zeeman[(k, i)] = zeeman_element(s, t, 1.0, &consts)?;
                for q in -1..=1 {
                    dipole[(q + 1) as usize][(k, i)] = dipole_matrix_element(s, t, q, &cache)?;
                }
            }
        }
        Ok(PairSystem { n, basis, singles, index, energies, zeeman, dipole, cache, consts })
    }

    /// The five-channel Forster basis around `nd`.
    pub fn forster(n: u32, cache: Arc<MatrixElementCache>, consts: PhysicalConstants) -> Result<Self> {
        Self::new(n, PairBasis::forster(n)?, cache, consts)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn basis(&self) -> &PairBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn cache(&self) -> &MatrixElementCache {
        &self.cache
    }

    pub fn consts(&self) -> &PhysicalConstants {
        &self.consts
    }

    pub fn rydberg_state(&self, field_mt: f64) -> Result<DressedState> {
        laser_excited_state(self.n, field_mt, self.cache.table(), &self.consts)
    }

    /// `|r> x |r>` on the pair basis.
    pub fn rr_vector(&self, field_mt: f64) -> Result<DVector<f64>> {
        let r = self.rydberg_state(field_mt)?;
        let single: Vec<f64> = self.singles.iter().map(|s| r.amplitude(s)).collect();
        Ok(DVector::from_iterator(self.dim(), self.index.iter().map(|&(i, k)| single[i] * single[k])))
    }

    /// Pair energies plus both atoms' Zeeman terms, relative to twice the
    /// zero-field `nd5/2` energy, MHz.
    pub fn noninteracting_hamiltonian(&self, field_mt: f64) -> Result<DMatrix<f64>> {
        if !(field_mt >= 0.0 && field_mt.is_finite()) {
            return Err(Error::Argument(format!("field must be finite and >= 0, got {field_mt} mT")));
        }
        let dim = self.dim();
        let mut h = DMatrix::zeros(dim, dim);
        for (c, &(sa, sb)) in self.index.iter().enumerate() {
            for (r, &(ta, tb)) in self.index.iter().enumerate() {
                let mut v = 0.0;
                if tb == sb {
                    v += self.zeeman[(ta, sa)];
                }
                if ta == sa {
                    v += self.zeeman[(tb, sb)];
                }
                h[(r, c)] = v * field_mt;
            }
            h[(c, c)] += self.energies[sa] + self.energies[sb];
        }
        Ok(h)
    }

    /// `V_dd` on the pair basis, MHz.
    pub fn dipole_dipole_matrix(&self, geom: &Geometry) -> Result<DMatrix<f64>> {
        if !(geom.distance > 0.0) {
            return Err(Error::SingularGeometry(geom.distance));
        }
        let terms = angular_terms(geom.theta);
        let scale = dipole_prefactor(geom, &self.consts);
        let dim = self.dim();
        let mut v = DMatrix::zeros(dim, dim);
        for (c, &(sa, sb)) in self.index.iter().enumerate() {
            for (r, &(ta, tb)) in self.index.iter().enumerate() {
                let mut sum = 0.0;
                for &(q1, q2, coef) in &terms {
                    let d1 = self.dipole[(q1 + 1) as usize][(ta, sa)];
                    if d1 != 0.0 {
                        sum += coef * d1 * self.dipole[(q2 + 1) as usize][(tb, sb)];
                    }
                }
                v[(r, c)] = sum * scale;
            }
        }
        Ok(v)
    }

    /// Full pair Hamiltonian in MHz, relative to twice the zero-field
    /// `nd5/2` energy.
    pub fn assemble_hamiltonian(&self, geom: &Geometry, field_mt: f64) -> Result<DMatrix<f64>> {
        Ok(self.noninteracting_hamiltonian(field_mt)? + self.dipole_dipole_matrix(geom)?)
    }

    /// Diagonalizes the pair Hamiltonian and projects onto `|rr>`.
    pub fn molecular_spectrum(&self, geom: &Geometry, field_mt: f64, keep_vectors: bool) -> Result<MolecularSpectrum> {
        let h = self.assemble_hamiltonian(geom, field_mt)?;
        let offset = 2.0 * self.rydberg_state(field_mt)?.energy;
        let rr = self.rr_vector(field_mt)?;
        let eig = diagonalize(&h)?;
        let proj = eig.vectors.tr_mul(&rr);
        Ok(MolecularSpectrum {
            geometry: *geom,
            field: field_mt,
            energies: eig.values.iter().map(|e| e - offset).collect(),
            overlaps: proj.iter().map(|p| p * p).collect(),
            vectors: keep_vectors.then_some(eig.vectors),
        })
    }

    /// Second-order `C6 = sum_k |<k|V R^3|rr>|^2 / (E_rr - E_k)` in MHz um^6.
    ///
    /// The sum runs over eigenstates of the non-interacting Hamiltonian,
    /// skipping the state carrying `|rr>` and anything degenerate with it.
    pub fn c6_perturbative(&self, field_mt: f64, theta: f64) -> Result<f64> {
        let h0 = self.noninteracting_hamiltonian(field_mt)?;
        let v = self.dipole_dipole_matrix(&Geometry::new(1.0, theta)?)?;
        let rr = self.rr_vector(field_mt)?;
        let eig = diagonalize(&h0)?;
        let coupling = eig.vectors.tr_mul(&(v * &rr));
        let overlap = eig.vectors.tr_mul(&rr);
        let dominant = overlap.iamax();
        let e_rr = eig.values[dominant];
        let mut c6 = 0.0;
        for k in 0..self.dim() {
            if k == dominant || (eig.values[k] - e_rr).abs() < 1e-9 {
                continue;
            }
            c6 += coupling[k].powi(2) / (e_rr - eig.values[k]);
        }
        Ok(c6)
    }

    /// Molecular curves over transverse offsets `dys` at fixed `z`,
    /// tracked through crossings by maximal eigenvector overlap.
    pub fn scan_offsets(&self, z_um: f64, dys: &[f64], field_mt: f64) -> Result<CurveScan> {
        if dys.is_empty() {
            return Err(Error::Argument("empty offset grid".into()));
        }
        let geoms = dys.iter().map(|&dy| Geometry::from_offsets(z_um, dy)).collect::<Result<Vec<_>>>()?;
        let dim = self.dim();
        let mut scan = CurveScan {
            z: z_um,
            field: field_mt,
            offsets: dys.to_vec(),
            geometries: geoms.clone(),
            energies: Vec::with_capacity(dys.len()),
            overlaps: Vec::with_capacity(dys.len()),
            min_tracking_overlap: Vec::with_capacity(dys.len().saturating_sub(1)),
        };
        let mut previous: Option<(DMatrix<f64>, Vec<usize>)> = None;
        let chunk = rayon::current_num_threads().max(1) * 2;
        for block in geoms.chunks(chunk) {
            let spectra = block
                .par_iter()
                .map(|g| self.molecular_spectrum(g, field_mt, true))
                .collect::<Result<Vec<_>>>()?;
            for mut spec in spectra {
                let vectors = spec.vectors.take().unwrap();
                // perm[curve] = eigen index at this point
                let perm = match &previous {
                    None => (0..dim).collect(),
                    Some((prev_vectors, prev_perm)) => {
                        let (assign, worst) = match_eigenvectors(prev_vectors, &vectors);
                        scan.min_tracking_overlap.push(worst);
                        prev_perm.iter().map(|&p| assign[p]).collect::<Vec<_>>()
                    }
                };
                scan.energies.push(perm.iter().map(|&i| spec.energies[i]).collect());
                scan.overlaps.push(perm.iter().map(|&i| spec.overlaps[i]).collect());
                previous = Some((vectors, perm));
            }
        }
        Ok(scan)
    }
}

/// Greedy assignment `old index -> new index` by descending `|<old|new>|`.
/// Also returns the smallest matched `|<old|new>|^2`.
fn match_eigenvectors(old: &DMatrix<f64>, new: &DMatrix<f64>) -> (Vec<usize>, f64) {
    let n = old.ncols();
    let o = old.tr_mul(new);
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        for k in 0..n {
            let w = o[(i, k)].powi(2);
            if w > 1e-3 {
                pairs.push((w, i, k));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut assign = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    let mut worst: f64 = 1.0;
    for (w, i, k) in pairs {
        if assign[i] == usize::MAX && !taken[k] {
            assign[i] = k;
            taken[k] = true;
            worst = worst.min(w);
        }
    }
    // Anything left over is matched in energy order.
    let mut free = (0..n).filter(|&k| !taken[k]);
    for a in assign.iter_mut().filter(|a| **a == usize::MAX) {
        *a = free.next().unwrap();
        worst = 0.0;
    }
    (assign, worst)
}

/// Curve-tracked molecular energies over a transverse-offset scan.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveScan {
    pub z: f64,
    pub field: f64,
    pub offsets: Vec<f64>,
    pub geometries: Vec<Geometry>,
    /// `energies[point][curve]`, MHz.
    pub energies: Vec<Vec<f64>>,
    /// `overlaps[point][curve]`.
    pub overlaps: Vec<Vec<f64>>,
    /// Per step, the weakest squared eigenvector overlap used for tracking.
    pub min_tracking_overlap: Vec<f64>,
}

/// A tracked curve changing sign between two scan points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroCrossing {
    pub curve: usize,
    /// Linearly interpolated offset, um.
    pub offset: f64,
    /// `kappa^2` interpolated to the crossing.
    pub overlap: f64,
}

impl CurveScan {
    pub fn curves(&self) -> usize {
        self.energies.first().map_or(0, Vec::len)
    }

    /// Sign changes of tracked curves whose energy stays within `window`
    /// MHz of zero on both sides.
    pub fn zero_crossings(&self, window: f64) -> Vec<ZeroCrossing> {
        let mut out = Vec::new();
        for p in 1..self.offsets.len() {
            for c in 0..self.curves() {
                let (e0, e1) = (self.energies[p - 1][c], self.energies[p][c]);
                if e0.signum() != e1.signum() && e0.abs() < window && e1.abs() < window {
                    let t = e0 / (e0 - e1);
                    let (x0, x1) = (self.offsets[p - 1], self.offsets[p]);
                    let (k0, k1) = (self.overlaps[p - 1][c], self.overlaps[p][c]);
                    out.push(ZeroCrossing { curve: c, offset: x0 + t * (x1 - x0), overlap: k0 + t * (k1 - k0) });
                }
            }
        }
        out
    }
}

/// One asymptotic (`R -> infinity`) two-atom line over a field grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AsymptoticLine {
    pub channel: PairChannel,
    /// Zero-field labels of the two adiabatic single-atom states.
    pub first: AtomState,
    pub second: AtomState,
    /// Energy relative to twice the zero-field `nd5/2` level, MHz, per field.
    pub energies: Vec<f64>,
}

/// Zeeman eigenvalues of one shell, labeled by the zero-field level each
/// connects to adiabatically, relative to `reference`, MHz.
pub fn adiabatic_zeeman_levels(
    shell: Shell,
    field_mt: f64,
    cache: &MatrixElementCache,
    consts: &PhysicalConstants,
    reference: f64,
) -> Result<Vec<(AtomState, f64)>> {
    let table = cache.table();
    let states = shell.states();
    let mut out = Vec::with_capacity(states.len());
    let top = states.iter().map(|s| s.j).max().unwrap();
    for m in top.projections() {
        let block: Vec<AtomState> = states.iter().copied().filter(|s| s.mj == m).collect();
        let mut h = DMatrix::zeros(block.len(), block.len());
        let mut zero_field = Vec::with_capacity(block.len());
        for (i, a) in block.iter().enumerate() {
            let e = level_energy(a.level(), table, consts)? - reference;
            zero_field.push(e);
            h[(i, i)] = e;
            for (k, b) in block.iter().enumerate() {
                h[(k, i)] += zeeman_element(a, b, field_mt, consts)?;
            }
        }
        let eig = diagonalize(&h)?;
        // Levels of equal m never cross, so energy order is preserved.
        let mut labels: Vec<usize> = (0..block.len()).collect();
        labels.sort_by(|&x, &y| zero_field[x].total_cmp(&zero_field[y]));
        for (rank, &label) in labels.iter().enumerate() {
            out.push((block[label], eig.values[rank]));
        }
    }
    out.sort_by_key(|x| x.0);
    Ok(out)
}

/// Non-interacting two-atom energies of every channel (mirror channels
/// omitted) over `fields`.
pub fn asymptotic_energies_vs_field(
    fields: &[f64],
    n: u32,
    cache: &MatrixElementCache,
    consts: &PhysicalConstants,
) -> Result<Vec<AsymptoticLine>> {
    let reference = level_energy(bare_target_state(n).level(), cache.table(), consts)?;
    let mut channels: Vec<PairChannel> = Vec::new();
    for c in forster_channels(n)? {
        let mirror = PairChannel { first: c.second, second: c.first };
        if !channels.contains(&mirror) {
            channels.push(c);
        }
    }
    let mut lines: Vec<AsymptoticLine> = Vec::new();
    for (f_idx, &field) in fields.iter().enumerate() {
        let mut k = 0;
        for c in &channels {
            let first = adiabatic_zeeman_levels(c.first, field, cache, consts, reference)?;
            let second = adiabatic_zeeman_levels(c.second, field, cache, consts, reference)?;
            for (i, (a, ea)) in first.iter().enumerate() {
                // identical shells: unordered pairs only
                let start = if c.first == c.second { i } else { 0 };
                for (b, eb) in &second[start..] {
                    if f_idx == 0 {
                        lines.push(AsymptoticLine {
                            channel: *c,
                            first: *a,
                            second: *b,
                            energies: Vec::with_capacity(fields.len()),
                        });
                    }
                    lines[k].energies.push(ea + eb);
                    k += 1;
                }
            }
        }
    }
    Ok(lines)
}
