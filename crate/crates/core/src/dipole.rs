//! Single-atom electric-dipole matrix elements and the persistent cache of
//! radial integrals behind them.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use crate::atomdata::{AtomState, Level, QuantumDefectTable};
use crate::error::{Error, Result};
use crate::halfint::HalfInt;
use crate::radial::{radial_overlap, radial_wavefunction, GridParams, RadialWavefunction};
use crate::wigner::{wigner_3j, wigner_6j};

const CACHE_MAGIC: &str = "rydblock-radial-cache";
const CACHE_VERSION: u32 = 1;

/// Radial integral `<b|r|a>` in bohr.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialDipole {
    pub value: f64,
    /// False when `|l_a - l_b| != 1`; `value` is then 0.
    pub allowed: bool,
}

/// Hit/miss counters and entry count of a [`MatrixElementCache`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub entries: usize,
    pub hits: u64,
    pub misses: u64,
}

/// Memoized radial dipole integrals for one defect table and one grid.
///
/// Keys are unordered level pairs, stored with the smaller level first.
/// The table and grid hashes travel with every persisted file, so a file
/// written under other parameters is refused on load.
pub struct MatrixElementCache {
    table: Arc<QuantumDefectTable>,
    grid: GridParams,
    grid_hash: String,
    enabled: bool,
    integrals: RwLock<BTreeMap<(Level, Level), f64>>,
    wavefunctions: RwLock<HashMap<Level, Arc<RadialWavefunction>>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl MatrixElementCache {
    pub fn new(table: Arc<QuantumDefectTable>, grid: GridParams) -> Result<Self> {
        grid.validate()?;
        Ok(MatrixElementCache {
            table,
            grid_hash: grid.hash(),
            grid,
            enabled: true,
            integrals: RwLock::new(BTreeMap::new()),
            wavefunctions: RwLock::new(HashMap::new()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        })
    }

    /// A cache that recomputes every integral.
    pub fn disabled(table: Arc<QuantumDefectTable>, grid: GridParams) -> Result<Self> {
        let mut cache = Self::new(table, grid)?;
        cache.enabled = false;
        Ok(cache)
    }

    pub fn rb87() -> Self {
        Self::new(Arc::new(QuantumDefectTable::rb87()), GridParams::default())
            .expect("default grid is valid")
    }

    pub fn table(&self) -> &QuantumDefectTable {
        &self.table
    }

    pub fn grid(&self) -> &GridParams {
        &self.grid
    }

    pub fn table_hash(&self) -> &str {
        &self.table.hash
    }

    pub fn grid_hash(&self) -> &str {
        &self.grid_hash
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            entries: self.integrals.read().unwrap().len(),
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
        }
    }

    fn wavefunction(&self, level: Level) -> Result<Arc<RadialWavefunction>> {
        if let Some(wf) = self.wavefunctions.read().unwrap().get(&level) {
            return Ok(wf.clone());
        }
        let wf = Arc::new(radial_wavefunction(level, &self.table, &self.grid)?);
        if self.enabled {
            self.wavefunctions.write().unwrap().entry(level).or_insert_with(|| wf.clone());
        }
        Ok(wf)
    }

    /// `integral u_a u_b r dr` for two levels, regardless of selection rules.
    pub fn radial_integral(&self, a: Level, b: Level) -> Result<f64> {
        let key = if a <= b { (a, b) } else { (b, a) };
        if self.enabled {
            if let Some(&v) = self.integrals.read().unwrap().get(&key) {
                self.hits.fetch_add(1, Ordering::Relaxed);
                return Ok(v);
            }
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let value = radial_overlap(&*self.wavefunction(key.0)?, &*self.wavefunction(key.1)?, 1)?;
        if self.enabled {
            self.integrals.write().unwrap().insert(key, value);
        }
        Ok(value)
    }

    /// Computes every `|delta l| = 1` integral among `levels`; returns how
    /// many distinct pairs that is.
    pub fn populate(&self, levels: &[Level]) -> Result<usize> {
        let mut count = 0;
        for (i, &a) in levels.iter().enumerate() {
            for &b in &levels[i + 1..] {
                if a.l.abs_diff(b.l) == 1 {
                    self.radial_integral(a, b)?;
                    count += 1;
                }
            }
        }
        Ok(count)
    }

    pub fn clear(&self) {
        self.integrals.write().unwrap().clear();
        self.wavefunctions.write().unwrap().clear();
    }

    /// Serializes the stored integrals.
    ///
    /// ```text
    /// rydblock-radial-cache 1
    /// defect_table <sha256>
    /// grid <sha256>
    /// entries <count>
    /// <n l 2j> <n' l' 2j'> <f64 bits as 16 hex digits> <value in bohr>
    /// ```
    pub fn to_text(&self) -> String {
        let map = self.integrals.read().unwrap();
        let mut out = format!(
            "{CACHE_MAGIC} {CACHE_VERSION}\ndefect_table {}\ngrid {}\nentries {}\n",
            self.table.hash,
            self.grid_hash,
            map.len()
        );
        for ((a, b), v) in map.iter() {
            let _ = writeln!(
                out,
                "{} {} {} {} {} {} {:016x} {:.12e}",
                a.n,
                a.l,
                a.j.twice(),
                b.n,
                b.l,
                b.j.twice(),
                v.to_bits(),
                v
            );
        }
        out
    }

    /// Merges entries from a serialized cache. Refuses files written under a
    /// different defect table or grid.
    pub fn load_text(&self, text: &str) -> Result<usize> {
        let mut lines = text.lines();
        let mut header = |key: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| Error::Cache(format!("truncated header, missing {key}")))?;
            let mut it = line.splitn(2, ' ');
            match (it.next(), it.next()) {
                (Some(k), Some(v)) if k == key => Ok(v.trim().to_string()),
                _ => Err(Error::Cache(format!("expected `{key}` header, found `{line}`"))),
            }
        };
        let version = header(CACHE_MAGIC)?;
        if version != CACHE_VERSION.to_string() {
            return Err(Error::Cache(format!("unsupported cache version {version}")));
        }
        let table_hash = header("defect_table")?;
        let grid_hash = header("grid")?;
        if table_hash != self.table.hash {
            return Err(Error::Cache(format!(
                "stale cache: defect table hash {table_hash} does not match {}",
                self.table.hash
            )));
        }
        if grid_hash != self.grid_hash {
            return Err(Error::Cache(format!(
                "stale cache: grid hash {grid_hash} does not match {}",
                self.grid_hash
            )));
        }
        let count: usize = header("entries")?
            .parse()
            .map_err(|_| Error::Cache("bad entry count".into()))?;
        let mut entries = Vec::with_capacity(count);
        for line in lines.filter(|l| !l.trim().is_empty()) {
            entries.push(parse_entry(line)?);
        }
        if entries.len() != count {
            return Err(Error::Cache(format!("header announces {count} entries, found {}", entries.len())));
        }
        let mut map = self.integrals.write().unwrap();
        for (key, v) in entries {
            map.insert(key, v);
        }
        Ok(count)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_text())?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn load(&self, path: impl AsRef<Path>) -> Result<usize> {
        self.load_text(&std::fs::read_to_string(path)?)
    }
}

fn parse_entry(line: &str) -> Result<((Level, Level), f64)> {
    let bad = || Error::Cache(format!("malformed entry `{line}`"));
    let f: Vec<&str> = line.split_whitespace().collect();
    if f.len() < 7 {
        return Err(bad());
    }
    let int = |s: &str| s.parse::<i64>().map_err(|_| bad());
    let level = |i: usize| -> Result<Level> {
        Ok(Level {
            n: u32::try_from(int(f[i])?).map_err(|_| bad())?,
            l: u32::try_from(int(f[i + 1])?).map_err(|_| bad())?,
            j: HalfInt::from_twice(i32::try_from(int(f[i + 2])?).map_err(|_| bad())?),
        })
    };
    let (a, b) = (level(0)?, level(3)?);
    let bits = u64::from_str_radix(f[6], 16).map_err(|_| bad())?;
    let key = if a <= b { (a, b) } else { (b, a) };
    Ok((key, f64::from_bits(bits)))
}

/// `<b|r|a>` in bohr, zero with `allowed = false` unless `|l_a - l_b| = 1`.
pub fn radial_dipole(a: &AtomState, b: &AtomState, cache: &MatrixElementCache) -> Result<RadialDipole> {
    if a.l.abs_diff(b.l) != 1 {
        return Ok(RadialDipole { value: 0.0, allowed: false });
    }
    Ok(RadialDipole { value: cache.radial_integral(a.level(), b.level())?, allowed: true })
}

/// Reduced element `<b||d||a>` in atomic units, fine-structure recoupled.
pub fn reduced_dipole(a: Level, b: Level, cache: &MatrixElementCache) -> Result<f64> {
    if a.l.abs_diff(b.l) != 1 || (a.j - b.j).abs().twice() > 2 {
        return Ok(0.0);
    }
    let (la, lb) = (HalfInt::from_int(a.l as i32), HalfInt::from_int(b.l as i32));
    let one = HalfInt::from_int(1);
    let six = wigner_6j(lb, b.j, HalfInt::HALF, a.j, la, one)?;
    if six == 0.0 {
        return Ok(0.0);
    }
    let three = wigner_3j(lb, one, la, HalfInt::ZERO, HalfInt::ZERO, HalfInt::ZERO)?;
    let phase = |twice: i32| if twice.rem_euclid(4) == 0 { 1.0 } else { -1.0 };
    let fine = phase((lb + a.j).twice() + 3)
        * f64::from(a.j.multiplicity() * b.j.multiplicity()).sqrt()
        * six;
    let orbital = phase(lb.twice())
        * f64::from((2 * a.l + 1) * (2 * b.l + 1)).sqrt()
        * three;
    Ok(fine * orbital * cache.radial_integral(a, b)?)
}

/// `<b|d_q|a>` in atomic units (`e a0`) for spherical component `q`.
pub fn dipole_matrix_element(
    a: &AtomState,
    b: &AtomState,
    q: i32,
    cache: &MatrixElementCache,
) -> Result<f64> {
    if !(-1..=1).contains(&q) {
        return Err(Error::Argument(format!("spherical component must be -1, 0 or 1, got {q}")));
    }
    if b.mj != a.mj + HalfInt::from_int(q) || a.l.abs_diff(b.l) != 1 {
        return Ok(0.0);
    }
    let w = wigner_3j(b.j, HalfInt::from_int(1), a.j, -b.mj, HalfInt::from_int(q), a.mj)?;
    if w == 0.0 {
        return Ok(0.0);
    }
    let sign = if (b.j - b.mj).twice().rem_euclid(4) == 0 { 1.0 } else { -1.0 };
    Ok(sign * w * reduced_dipole(a.level(), b.level(), cache)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomdata::Shell;
    use approx::assert_relative_eq;

    fn h(twice: i32) -> HalfInt {
        HalfInt::from_twice(twice)
    }

    fn level(n: u32, l: u32, twice_j: i32) -> Level {
        Level { n, l, j: h(twice_j) }
    }

    fn hydrogen_cache() -> MatrixElementCache {
        MatrixElementCache::new(Arc::new(QuantumDefectTable::hydrogenic()), GridParams::default()).unwrap()
    }

    #[test]
    fn hydrogen_radial_dipole() {
        let cache = hydrogen_cache();
        let s = AtomState { n: 1, l: 0, j: h(1), mj: h(1) };
        let p = AtomState { n: 2, l: 1, j: h(3), mj: h(1) };
        let r = radial_dipole(&s, &p, &cache).unwrap();
        assert!(r.allowed);
        assert!((r.value.abs() - 128.0 * 6f64.sqrt() / 243.0).abs() < 1e-3);
        let same = radial_dipole(&s, &s, &cache).unwrap();
        assert_eq!(same, RadialDipole { value: 0.0, allowed: false });
    }

    #[test]
    fn rydberg_radial_integrals() {
        // Frozen from an independent numpy Numerov integration.
        let cache = MatrixElementCache::rb87();
        for (b, expected) in [
            (level(80, 1, 3), 8180.9),
            (level(78, 3, 7), 8068.2),
            (level(81, 1, 1), 4849.9),
            (level(77, 3, 7), 4926.9),
        ] {
            let v = cache.radial_integral(level(79, 2, 5), b).unwrap();
            assert!((v.abs() - expected).abs() < 0.5, "{b}: {v}");
        }
    }

    #[test]
    fn grid_refinement() {
        let t = Arc::new(QuantumDefectTable::rb87());
        let coarse = MatrixElementCache::new(t.clone(), GridParams::default()).unwrap();
        let fine = MatrixElementCache::new(t, GridParams { step: 0.005, ..GridParams::default() }).unwrap();
        let (a, b) = (level(79, 2, 5), level(80, 1, 3));
        let (x, y) = (coarse.radial_integral(a, b).unwrap(), fine.radial_integral(a, b).unwrap());
        assert!(((x - y) / y).abs() < 1e-4, "{x} vs {y}");
    }

    #[test]
    fn selection_rules() {
        let cache = hydrogen_cache();
        let a = AtomState { n: 3, l: 1, j: h(3), mj: h(1) };
        let b = AtomState { n: 4, l: 2, j: h(5), mj: h(3) };
        assert_eq!(dipole_matrix_element(&a, &b, 0, &cache).unwrap(), 0.0);
        assert_ne!(dipole_matrix_element(&a, &b, 1, &cache).unwrap(), 0.0);
        // p1/2 -> d5/2 has delta j = 2
        let a = AtomState { n: 3, l: 1, j: h(1), mj: h(1) };
        assert_eq!(dipole_matrix_element(&a, &b, 1, &cache).unwrap(), 0.0);
        assert!(dipole_matrix_element(&a, &b, 2, &cache).is_err());
    }

    #[test]
    fn line_strength_sum_rule() {
        let cache = hydrogen_cache();
        for (na, la, nb, lb) in [(3, 1, 4, 2), (4, 2, 3, 1), (5, 2, 6, 3), (4, 0, 5, 1)] {
            let radial = cache.radial_integral(level(na, la, 2 * la as i32 + 1), level(nb, lb, 2 * lb as i32 + 1)).unwrap();
            let expected = radial * radial * f64::from(la.max(lb)) / f64::from(2 * la + 1);
            for a in (Shell { n: na, l: la }).states() {
                let mut sum = 0.0;
                for b in (Shell { n: nb, l: lb }).states() {
                    for q in -1..=1 {
                        sum += dipole_matrix_element(&a, &b, q, &cache).unwrap().powi(2);
                    }
                }
                assert_relative_eq!(sum, expected, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn hermiticity() {
        let cache = MatrixElementCache::rb87();
        let d = Shell { n: 79, l: 2 }.states();
        let p = Shell { n: 80, l: 1 }.states();
        for a in &d {
            for b in &p {
                for q in -1..=1 {
                    let fwd = dipole_matrix_element(a, b, q, &cache).unwrap();
                    let back = dipole_matrix_element(b, a, -q, &cache).unwrap();
                    let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
                    assert!((fwd - sign * back).abs() <= 1e-12 * fwd.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn wigner_eckart_ratio() {
        let cache = MatrixElementCache::rb87();
        let a1 = AtomState { n: 79, l: 2, j: h(5), mj: h(1) };
        let b1 = AtomState { n: 80, l: 1, j: h(3), mj: h(1) };
        let a2 = AtomState { n: 79, l: 2, j: h(5), mj: h(-1) };
        let b2 = AtomState { n: 80, l: 1, j: h(3), mj: h(-3) };
        let one = h(2);
        let d1 = dipole_matrix_element(&a1, &b1, 0, &cache).unwrap();
        let d2 = dipole_matrix_element(&a2, &b2, -1, &cache).unwrap();
        let w1 = wigner_3j(b1.j, one, a1.j, -b1.mj, h(0), a1.mj).unwrap();
        let w2 = wigner_3j(b2.j, one, a2.j, -b2.mj, h(-2), a2.mj).unwrap();
        // (-1)^(j - m) phases: j - m = 1 for b1 and 3 for b2, equal parity
        assert_relative_eq!(d1 / d2, w1 / w2, max_relative = 1e-12);
    }

    #[test]
    fn cache_transparency() {
        let t = Arc::new(QuantumDefectTable::rb87());
        let on = MatrixElementCache::new(t.clone(), GridParams::default()).unwrap();
        let off = MatrixElementCache::disabled(t, GridParams::default()).unwrap();
        let (a, b) = (level(79, 2, 3), level(78, 3, 5));
        let first = on.radial_integral(a, b).unwrap();
        let hit = on.radial_integral(b, a).unwrap();
        let fresh = off.radial_integral(a, b).unwrap();
        assert_eq!(first.to_bits(), hit.to_bits());
        assert_eq!(first.to_bits(), fresh.to_bits());
        assert_eq!(on.stats(), CacheStats { entries: 1, hits: 1, misses: 1 });
        assert_eq!(off.stats().entries, 0);
    }

    #[test]
    fn persistence_round_trip_and_staleness() {
        let cache = MatrixElementCache::rb87();
        let levels = [level(79, 2, 5), level(80, 1, 3), level(78, 3, 7)];
        assert_eq!(cache.populate(&levels).unwrap(), 2);
        let text = cache.to_text();

        let reloaded = MatrixElementCache::rb87();
        assert_eq!(reloaded.load_text(&text).unwrap(), 2);
        for (a, b) in [(levels[0], levels[1]), (levels[2], levels[0])] {
            assert_eq!(
                reloaded.radial_integral(a, b).unwrap().to_bits(),
                cache.radial_integral(a, b).unwrap().to_bits()
            );
        }
        assert_eq!(reloaded.stats().misses, 0);

        let other_grid = MatrixElementCache::new(
            Arc::new(QuantumDefectTable::rb87()),
            GridParams { step: 0.02, ..GridParams::default() },
        )
        .unwrap();
        assert!(matches!(other_grid.load_text(&text), Err(Error::Cache(_))));
        let other_table = MatrixElementCache::new(Arc::new(QuantumDefectTable::hydrogenic()), GridParams::default()).unwrap();
        assert!(matches!(other_table.load_text(&text), Err(Error::Cache(_))));
        assert!(matches!(cache.load_text("garbage"), Err(Error::Cache(_))));
    }
}
