//! Acceptance suite: the twelve headline checks, shared by the integration
//! test target and `rydblock selftest`.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::atomdata::{level_energy, AtomState, Level, QuantumDefectTable};
use crate::blockade::{averaged_blockade, blockade_scan, blockade_shift, AveragingOptions};
use crate::constants::PhysicalConstants;
use crate::dipole::{radial_dipole, MatrixElementCache};
use crate::error::Result;
use crate::expsim::{
    crosstalk_probability, evolve_two_atom, run_experiment, thermal_sigma, BlockadeModel, ExperimentConfig,
    PulseSequence, SequenceKind, ShotDisorder, Site,
};
use crate::halfint::HalfInt;
use crate::linalg::{diagonalize, hermiticity_deviation};
use crate::pairint::{forster_channels, Geometry, PairBasis, PairSystem};
use crate::radial::GridParams;
use crate::wigner::wigner_3j;

/// Outcome of one criterion.
#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {:<28} {} ({:.1} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

/// Shared state: the n = 79 pair system with a warm radial cache.
pub struct Suite {
    pub system: PairSystem,
    pub consts: PhysicalConstants,
    pub cache: Arc<MatrixElementCache>,
}

const Z: f64 = 11.0;
const SIGMA_Y: f64 = 2.6;
const FIELD: f64 = 1.15;
const OMEGA: f64 = 0.51;

impl Suite {
    pub fn new() -> Result<Self> {
        Self::with_cache(Arc::new(MatrixElementCache::rb87()))
    }

    pub fn with_cache(cache: Arc<MatrixElementCache>) -> Result<Self> {
        let consts = PhysicalConstants::rb87();
        let system = PairSystem::forster(79, cache.clone(), consts.clone())?;
        Ok(Suite { system, consts, cache })
    }

    pub const COUNT: u32 = 12;

    /// Runs criterion `id` (1 to 12); numerical errors count as failures.
    pub fn run(&self, id: u32) -> CriterionResult {
        let start = Instant::now();
        let (name, outcome) = match id {
            1 => ("basis count", self.basis_count()),
            2 => ("fine structure", self.fine_structure()),
            3 => ("headline blockade", self.headline_blockade()),
            4 => ("shift identity", self.shift_identity()),
            5 => ("crossing overlap", self.crossing_overlap()),
            6 => ("improved geometry", self.improved_geometry()),
            7 => ("field enhancement", self.field_enhancement()),
            8 => ("thermal spreads", self.thermal_spreads()),
            9 => ("experiment simulation", self.experiment_simulation()),
            10 => ("crosstalk bound", self.crosstalk_bound()),
            11 => ("C6 scaling law", self.scaling_law()),
            12 => ("property suites", self.property_suites()),
            _ => ("unknown", Ok((false, format!("no criterion {id}")))),
        };
        let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        CriterionResult { id, name, passed, detail, seconds: start.elapsed().as_secs_f64() }
    }

    pub fn run_all(&self) -> Vec<CriterionResult> {
        (1..=Self::COUNT).map(|id| self.run(id)).collect()
    }

    fn basis_count(&self) -> Result<(bool, String)> {
        let basis = PairBasis::new(forster_channels(79)?)?;
        Ok((basis.len() == 436, format!("{} pair states (expected 436)", basis.len())))
    }

    fn fine_structure(&self) -> Result<(bool, String)> {
        let table = self.cache.table();
        let d5 = level_energy(Level { n: 79, l: 2, j: HalfInt::from_twice(5) }, table, &self.consts)?;
        let d3 = level_energy(Level { n: 79, l: 2, j: HalfInt::from_twice(3) }, table, &self.consts)?;
        let split = d5 - d3;
        Ok(((split / 23.0 - 1.0).abs() <= 0.15, format!("79d5/2 - 79d3/2 = {split:.2} MHz (23 +- 15%)")))
    }

    fn headline_blockade(&self) -> Result<(bool, String)> {
        let curve = averaged_blockade(&self.system, Z, SIGMA_Y, FIELD, OMEGA, &AveragingOptions::default())?;
        let ok = (curve.mean_p2 - 0.069).abs() <= 0.03 && (curve.mean_shift / 1.3 - 1.0).abs() <= 0.4;
        Ok((ok, format!("mean P2 = {:.4} (0.069 +- 0.03), B = {:.3} MHz (1.3 +- 40%)", curve.mean_p2, curve.mean_shift)))
    }

    fn shift_identity(&self) -> Result<(bool, String)> {
        let b = blockade_shift(0.069, OMEGA)?;
        Ok(((b - 1.32).abs() <= 0.05, format!("B(0.069, 0.51 MHz) = {b:.4} MHz (1.32 +- 0.05)")))
    }

    fn crossing_overlap(&self) -> Result<(bool, String)> {
        let dys: Vec<f64> = (0..=30).map(|i| 3.5 + 0.1 * f64::from(i)).collect();
        let scan = self.system.scan_offsets(Z, &dys, FIELD)?;
        let crossing = scan
            .zero_crossings(5.0)
            .into_iter()
            .filter(|c| c.overlap > 1e-12)
            .min_by(|a, b| (a.offset - 4.9).abs().total_cmp(&(b.offset - 4.9).abs()));
        let Some(c) = crossing else {
            return Ok((false, "no zero crossing coupled to |rr> between 3.5 and 6.5 um".into()));
        };
        let kappa_ok = c.overlap >= 1e-4 && c.overlap <= 9e-4 && (c.offset - 4.9).abs() < 0.5;

        let fine: Vec<f64> = (0..=20).map(|i| c.offset - 0.5 + 0.05 * f64::from(i)).collect();
        let p2: Vec<f64> = blockade_scan(&self.system, Z, &fine, FIELD, OMEGA)?.iter().map(|s| s.p2).collect();
        let bump = smoothness_deviation(&fine, &p2);
        let mean = p2.iter().sum::<f64>() / p2.len() as f64;
        let smooth = bump / mean < 0.02;
        Ok((
            kappa_ok && smooth,
            format!(
                "crossing at dy = {:.2} um, kappa^2 = {:.2e} (3e-4 within x3); P2 deviation from quadratic = {:.2}% of {mean:.4}",
                c.offset,
                c.overlap,
                100.0 * bump / mean
            ),
        ))
    }

    fn improved_geometry(&self) -> Result<(bool, String)> {
        let curve = averaged_blockade(&self.system, 7.0, SIGMA_Y, FIELD, OMEGA, &AveragingOptions::default())?;
        let ratio = curve.mean_p2 / 0.007;
        Ok(((0.5..=2.0).contains(&ratio), format!("Z = 7 um: mean P2 = {:.5} (0.007 within x2)", curve.mean_p2)))
    }

    fn field_enhancement(&self) -> Result<(bool, String)> {
        let opts = AveragingOptions::default();
        let on = averaged_blockade(&self.system, Z, SIGMA_Y, FIELD, OMEGA, &opts)?;
        let off = averaged_blockade(&self.system, Z, SIGMA_Y, 0.0, OMEGA, &opts)?;
        Ok((
            on.mean_shift > off.mean_shift,
            format!("B(1.15 mT) = {:.3} MHz vs B(0 mT) = {:.3} MHz", on.mean_shift, off.mean_shift),
        ))
    }

    fn thermal_spreads(&self) -> Result<(bool, String)> {
        let sz = thermal_sigma(12.3, 150.0, &self.consts)?;
        let sy = thermal_sigma(139.0, 150.0, &self.consts)?;
        let ok = (sz / 0.23 - 1.0).abs() <= 0.1 && (sy / 2.6 - 1.0).abs() <= 0.1;
        Ok((ok, format!("sigma_z = {sz:.3} um (0.23), sigma_y = {sy:.3} um (2.6)")))
    }

    fn experiment_simulation(&self) -> Result<(bool, String)> {
        let config = ExperimentConfig::default();
        let pi = config.pi_time();
        let none = BlockadeModel::Fixed(0.0);
        let fig2 = run_experiment(&config, SequenceKind::Fig2, &[pi, 2.0 * pi], &none, &self.consts)?;
        let excitation = 1.0 - fig2.rows[0].mean_retention;
        let back = fig2.rows[1].mean_retention;
        let table = BlockadeModel::tabulate(&self.system, &config, 0.5)?;
        let fig3 = run_experiment(&config, SequenceKind::Fig3, &[pi], &table, &self.consts)?;
        let target = fig3.site_rows(Site::Target).next().map_or(f64::NAN, |r| 1.0 - r.mean_retention);
        let ok = (target - 0.23).abs() <= 0.05 && (excitation - 0.8).abs() <= 0.07 && back >= 0.93;
        Ok((
            ok,
            format!(
                "fig3 blockaded excitation {target:.3} (0.23 +- 0.05); fig2 excitation {excitation:.3} (0.80 +- 0.07), 2pi return {back:.3} (>= 0.93)"
            ),
        ))
    }

    fn crosstalk_bound(&self) -> Result<(bool, String)> {
        let p = crosstalk_probability(OMEGA, 0.019, 2.0)?;
        Ok((p <= 1e-4, format!("P' = {p:.2e} (<= 1e-4)")))
    }

    fn scaling_law(&self) -> Result<(bool, String)> {
        let ns = [50u32, 60, 70, 79, 90];
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for n in ns {
            let sys = PairSystem::forster(n, self.cache.clone(), self.consts.clone())?;
            let c6 = sys.c6_perturbative(0.0, 0.0)?;
            xs.push(f64::from(n).ln());
            ys.push(c6.abs().ln());
        }
        let slope = linear_slope(&xs, &ys);
        Ok(((slope - 11.0).abs() <= 1.0, format!("|C6| ~ n^{slope:.2} over n = 50..90 (11 +- 1)")))
    }

    fn property_suites(&self) -> Result<(bool, String)> {
        let mut failures = Vec::new();
        let mut check = |label: &str, ok: bool| {
            if !ok {
                failures.push(label.to_string());
            }
        };

        check("wigner orthogonality", wigner_orthogonality_deviation()? < 1e-10);

        let hydrogen = MatrixElementCache::new(Arc::new(QuantumDefectTable::hydrogenic()), GridParams::default())?;
        let s = AtomState { n: 1, l: 0, j: HalfInt::HALF, mj: HalfInt::HALF };
        let p = AtomState { n: 2, l: 1, j: HalfInt::from_twice(3), mj: HalfInt::HALF };
        let r = radial_dipole(&s, &p, &hydrogen)?.value.abs();
        check("hydrogenic <1s|r|2p>", (r - 1.2902).abs() < 1e-3);

        let geom = Geometry::from_offsets(Z, 2.0)?;
        let h = self.system.assemble_hamiltonian(&geom, FIELD)?;
        check("hermiticity", hermiticity_deviation(&h) < 1e-12);

        let eig = diagonalize(&h)?;
        let rebuilt = &eig.vectors * nalgebra::DMatrix::from_diagonal(&eig.values) * eig.vectors.transpose();
        check("eigen reconstruction", (&rebuilt - &h).norm() / h.norm() < 1e-8);

        let spec = self.system.molecular_spectrum(&geom, FIELD, false)?;
        check("sum of kappa^2", (spec.overlap_sum() - 1.0).abs() < 1e-10);

        let c6 = self.system.c6_perturbative(FIELD, 0.0)?;
        let far = self.system.molecular_spectrum(&Geometry::new(30.0, 0.0)?, FIELD, false)?;
        let pert = c6 / 30f64.powi(6);
        check("perturbative C6", ((far.energies[far.dominant()] - pert) / pert).abs() < 0.05);

        let config = ExperimentConfig::default();
        let disorder = ShotDisorder { doppler: [0.07, -0.12], rabi_scale: [0.02, -0.03], frozen: [false, false] };
        let probs = evolve_two_atom(&PulseSequence::fig3(1.3, config.omega_mhz)?, &disorder, 0.8, &config)?;
        check("norm conservation", (probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);

        let small = ExperimentConfig { shots: 500, ..config.clone() };
        let none = BlockadeModel::Fixed(0.0);
        let a = run_experiment(&small, SequenceKind::Fig2, &[0.4, 0.9], &none, &self.consts)?;
        let b = run_experiment(&small, SequenceKind::Fig2, &[0.4, 0.9], &none, &self.consts)?;
        let same = a.rows.iter().zip(&b.rows).all(|(x, y)| x.mean_retention.to_bits() == y.mean_retention.to_bits());
        check("seed determinism", same);

        let ratio = shot_noise_ratio(&config, &self.consts)?;
        check("shot-noise scaling", (ratio / 2.0 - 1.0).abs() < 0.2);

        let detail = if failures.is_empty() {
            format!("9 suites ok (shot-noise std ratio for 4x shots = {ratio:.3})")
        } else {
            format!("failed: {}", failures.join(", "))
        };
        Ok((failures.is_empty(), detail))
    }
}

/// Largest deviation of `sum (2 j3 + 1) 3j 3j'` from the Kronecker delta,
/// over `j1 = 5/2`, `j2 = 1`.
pub fn wigner_orthogonality_deviation() -> Result<f64> {
    let (j1, j2) = (HalfInt::from_twice(5), HalfInt::from_twice(2));
    let mut worst = 0.0f64;
    for tj3 in (3..=7).step_by(2) {
        for tj3p in (3..=7).step_by(2) {
            for tm3 in (-3..=3).step_by(2) {
                let (j3, j3p, m3) = (HalfInt::from_twice(tj3), HalfInt::from_twice(tj3p), HalfInt::from_twice(tm3));
                let mut sum = 0.0;
                for tm1 in (-5..=5).step_by(2) {
                    let m1 = HalfInt::from_twice(tm1);
                    let m2 = HalfInt::from_twice(-tm1 - tm3);
                    if m2.twice().abs() > 2 {
                        continue;
                    }
                    sum += wigner_3j(j1, j2, j3, m1, m2, m3)? * wigner_3j(j1, j2, j3p, m1, m2, m3)?;
                }
                let expected = if tj3 == tj3p { 1.0 } else { 0.0 };
                worst = worst.max((f64::from(tj3 + 1) * sum - expected).abs());
            }
        }
    }
    Ok(worst)
}

/// Ratio of the retention scatter across seeds at `N` and `4N` shots.
pub fn shot_noise_ratio(config: &ExperimentConfig, consts: &PhysicalConstants) -> Result<f64> {
    let t = 0.5 * config.pi_time();
    let none = BlockadeModel::Fixed(0.0);
    let spread = |shots: u32| -> Result<f64> {
        let values = (0..40u64)
            .map(|seed| {
                let c = ExperimentConfig { shots, seed: 1000 + seed, ..config.clone() };
                Ok(run_experiment(&c, SequenceKind::Fig2, &[t], &none, consts)?.rows[0].mean_retention)
            })
            .collect::<Result<Vec<f64>>>()?;
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Ok((values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt())
    };
    Ok(spread(250)? / spread(1000)?)
}

/// Largest absolute residual of a least-squares quadratic through `(x, y)`.
pub fn smoothness_deviation(x: &[f64], y: &[f64]) -> f64 {
    let x0 = x.iter().sum::<f64>() / x.len() as f64;
    let a = nalgebra::DMatrix::from_fn(x.len(), 3, |i, k| (x[i] - x0).powi(k as i32));
    let b = nalgebra::DVector::from_column_slice(y);
    let coef = (a.transpose() * &a).lu().solve(&(a.transpose() * &b)).expect("well-posed quadratic fit");
    (a * coef - b).amax()
}

/// Least-squares slope of `y` against `x`.
pub fn linear_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x: Vec<f64> = [2f64, 3.0, 5.0].iter().map(|v| v.ln()).collect();
        let y: Vec<f64> = [2f64, 3.0, 5.0].iter().map(|v| 3.0 * v.powi(11)).map(f64::ln).collect();
        assert!((linear_slope(&x, &y) - 11.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_is_smooth() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.0 + 0.5 * v - 0.1 * v * v).collect();
        assert!(smoothness_deviation(&x, &y) < 1e-10);
        let mut bumped = y.clone();
        bumped[5] += 0.3;
        assert!(smoothness_deviation(&x, &bumped) > 0.1);
    }

    #[test]
    fn wigner_orthogonality() {
        assert!(wigner_orthogonality_deviation().unwrap() < 1e-12);
    }
}
