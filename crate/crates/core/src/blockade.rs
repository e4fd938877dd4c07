//! Double-excitation probability, effective blockade shift, and the
//! thermal average over the transverse separation of the two atoms.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::diagonalize;
use crate::pairint::{Geometry, MolecularSpectrum, PairSystem};

/// `P2 = sum_phi Omega^2 kappa_phi^2 / (Omega^2 + 2 Delta_phi^2)`.
///
/// `omega` and the spectrum energies are both frequencies in MHz.
pub fn p2_from_spectrum(spec: &MolecularSpectrum, omega: f64) -> Result<f64> {
    check_omega(omega)?;
    let w2 = omega * omega;
    let p: f64 = spec
        .energies
        .iter()
        .zip(&spec.overlaps)
        .map(|(d, k)| w2 * k / (w2 + 2.0 * d * d))
        .sum();
    Ok(p.clamp(0.0, 1.0))
}

/// `Omega^2 / (Omega^2 + 2 B^2)`.
pub fn p2_from_shift(shift: f64, omega: f64) -> Result<f64> {
    check_omega(omega)?;
    Ok(omega * omega / (omega * omega + 2.0 * shift * shift))
}

/// Inverts [`p2_from_shift`]: `B = Omega sqrt((1 - P2) / (2 P2))`.
pub fn blockade_shift(p2: f64, omega: f64) -> Result<f64> {
    check_omega(omega)?;
    if p2 == 0.0 {
        return Err(Error::InfiniteShift);
    }
    if !(p2 > 0.0 && p2 <= 1.0) {
        return Err(Error::Argument(format!("P2 must lie in (0, 1], got {p2}")));
    }
    Ok(omega * ((1.0 - p2) / (2.0 * p2)).sqrt())
}

fn check_omega(omega: f64) -> Result<()> {
    if omega > 0.0 && omega.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!("Rabi frequency must be positive, got {omega} MHz")))
    }
}

/// Gauss-Hermite nodes (descending) and weights for
/// `integral e^(-x^2) f(x) dx`, from the eigensystem of the Jacobi matrix.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::Argument("Gauss-Hermite rule needs at least one node".into()));
    }
    let mut jacobi = DMatrix::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        jacobi[(k, k - 1)] = b;
        jacobi[(k - 1, k)] = b;
    }
    let eig = diagonalize(&jacobi)?;
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let mut x = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for i in (0..n).rev() {
        x.push(eig.values[i]);
        w.push(sqrt_pi * eig.vectors[(0, i)].powi(2));
    }
    // Exact symmetry about zero.
    for i in 0..n / 2 {
        let (xs, ws) = ((x[i] - x[n - 1 - i]) / 2.0, (w[i] + w[n - 1 - i]) / 2.0);
        x[i] = xs;
        x[n - 1 - i] = -xs;
        w[i] = ws;
        w[n - 1 - i] = ws;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    Ok((x, w))
}

/// Controls for [`averaged_blockade`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AveragingOptions {
    /// Initial Gauss-Hermite order; doubled until converged.
    pub min_nodes: usize,
    pub max_nodes: usize,
    /// Relative change in the averaged P2 accepted between doublings.
    pub tolerance: f64,
    /// Axial spread; 0 averages over the transverse offset only.
    pub sigma_z: f64,
    /// Gauss-Hermite order for the axial average when `sigma_z > 0`.
    pub axial_nodes: usize,
}

impl Default for AveragingOptions {
    fn default() -> Self {
        AveragingOptions { min_nodes: 40, max_nodes: 640, tolerance: 0.01, sigma_z: 0.0, axial_nodes: 8 }
    }
}

/// `P2` and `B` at one transverse offset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockadeSample {
    pub offset: f64,
    pub p2: f64,
    /// `None` when `P2 = 0` (infinite shift).
    pub shift: Option<f64>,
}

impl BlockadeSample {
    fn new(offset: f64, p2: f64, omega: f64) -> Self {
        BlockadeSample { offset, p2, shift: blockade_shift(p2, omega).ok() }
    }
}

/// Thermally averaged blockade at one site separation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockadeCurve {
    /// Quadrature samples at non-negative offsets, ascending.
    pub samples: Vec<BlockadeSample>,
    pub mean_p2: f64,
    pub mean_shift: f64,
    pub omega: f64,
    pub field: f64,
    pub z: f64,
    pub sigma_y: f64,
    pub sigma_z: f64,
    /// Gauss-Hermite orders tried, with the averaged P2 of each.
    pub refinements: Vec<(usize, f64)>,
}

/// `P2` for sites separated by `z` axially and `dy` transversally.
pub fn point_p2(system: &PairSystem, z: f64, dy: f64, field: f64, omega: f64) -> Result<f64> {
    let spec = system.molecular_spectrum(&Geometry::from_offsets(z, dy)?, field, false)?;
    p2_from_spectrum(&spec, omega)
}

/// `P2(dy)` and `B(dy)` over a list of offsets, evaluated in parallel.
pub fn blockade_scan(system: &PairSystem, z: f64, offsets: &[f64], field: f64, omega: f64) -> Result<Vec<BlockadeSample>> {
    check_omega(omega)?;
    offsets
        .par_iter()
        .map(|&dy| Ok(BlockadeSample::new(dy, point_p2(system, z, dy, field, omega)?, omega)))
        .collect()
}

/// Averages `P2` over `dy ~ N(0, 2 sigma_y^2)` (and optionally the axial
/// offset), then converts the mean to `B`.
///
/// The offset integral is truncated at `6 sqrt(2) sigma_y`. The
/// Gauss-Hermite order starts at `options.min_nodes` and doubles until the
/// mean changes by less than `options.tolerance` relative.
pub fn averaged_blockade(
    system: &PairSystem,
    z: f64,
    sigma_y: f64,
    field: f64,
    omega: f64,
    options: &AveragingOptions,
) -> Result<BlockadeCurve> {
    check_omega(omega)?;
    if !(z > 0.0) {
        return Err(Error::SingularGeometry(z));
    }
    if !(sigma_y >= 0.0) || !(options.sigma_z >= 0.0) {
        return Err(Error::Argument("position spreads must be non-negative".into()));
    }
    let axial: Vec<(f64, f64)> = if options.sigma_z > 0.0 {
        let (x, w) = gauss_hermite(options.axial_nodes)?;
        x.iter()
            .zip(&w)
            .map(|(x, w)| (2.0 * options.sigma_z * x, w / std::f64::consts::PI.sqrt()))
            .collect()
    } else {
        vec![(0.0, 1.0)]
    };
    let at_offset = |dy: f64| -> Result<f64> {
        let mut p = 0.0;
        for &(dz, w) in &axial {
            p += w * point_p2(system, z + dz, dy, field, omega)?;
        }
        Ok(p)
    };

    if sigma_y == 0.0 {
        let p = at_offset(0.0)?;
        return finish(vec![BlockadeSample::new(0.0, p, omega)], p, vec![(1, p)], z, sigma_y, field, omega, options);
    }

    let cutoff = 6.0 * std::f64::consts::SQRT_2 * sigma_y;
    let mut refinements = Vec::new();
    let mut nodes = options.min_nodes.max(2);
    loop {
        let (x, w) = gauss_hermite(nodes)?;
        // P2 depends on |dy| only; fold the rule onto x >= 0.
        let mut folded: Vec<(f64, f64)> = Vec::new();
        for (xi, wi) in x.iter().zip(&w) {
            let dy = 2.0 * sigma_y * xi;
            if *xi < 0.0 || dy > cutoff {
                continue;
            }
            let weight = if *xi == 0.0 { *wi } else { 2.0 * wi };
            folded.push((dy, weight / std::f64::consts::PI.sqrt()));
        }
        folded.reverse();
        let values = folded.par_iter().map(|&(dy, _)| at_offset(dy)).collect::<Result<Vec<_>>>()?;
        let mean: f64 = folded.iter().zip(&values).map(|((_, w), p)| w * p).sum();
        let previous = refinements.last().map(|&(_, p)| p);
        refinements.push((nodes, mean));
        if let Some(prev) = previous {
            if (mean - prev).abs() <= options.tolerance * mean.abs() {
                let samples = folded.iter().zip(&values).map(|(&(dy, _), &p)| BlockadeSample::new(dy, p, omega)).collect();
                return finish(samples, mean, refinements, z, sigma_y, field, omega, options);
            }
        }
        if nodes * 2 > options.max_nodes {
            let trail = refinements.iter().map(|(n, p)| format!("{n} nodes: {p:.6}")).collect::<Vec<_>>().join(", ");
            return Err(Error::Quadrature(format!(
                "averaged P2 not converged to {} relative within {} nodes ({trail})",
                options.tolerance, options.max_nodes
            )));
        }
        nodes *= 2;
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    samples: Vec<BlockadeSample>,
    mean_p2: f64,
    refinements: Vec<(usize, f64)>,
    z: f64,
    sigma_y: f64,
    field: f64,
    omega: f64,
    options: &AveragingOptions,
) -> Result<BlockadeCurve> {
    Ok(BlockadeCurve {
        mean_shift: blockade_shift(mean_p2, omega)?,
        samples,
        mean_p2,
        omega,
        field,
        z,
        sigma_y,
        sigma_z: options.sigma_z,
        refinements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::PhysicalConstants;
    use crate::dipole::MatrixElementCache;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::sync::{Arc, OnceLock};

    fn system() -> &'static PairSystem {
        static SYSTEM: OnceLock<PairSystem> = OnceLock::new();
        SYSTEM.get_or_init(|| {
            PairSystem::forster(79, Arc::new(MatrixElementCache::rb87()), PhysicalConstants::rb87()).unwrap()
        })
    }

    fn toy(energies: Vec<f64>, overlaps: Vec<f64>) -> MolecularSpectrum {
        MolecularSpectrum {
            geometry: Geometry::new(1.0, 0.0).unwrap(),
            field: 0.0,
            energies,
            overlaps,
            vectors: None,
        }
    }

    #[test]
    fn p2_closed_forms() {
        assert_relative_eq!(p2_from_spectrum(&toy(vec![0.0, 0.0], vec![0.3, 0.7]), 0.5).unwrap(), 1.0);
        assert_relative_eq!(p2_from_spectrum(&toy(vec![0.5], vec![1.0]), 0.5).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        assert!(p2_from_spectrum(&toy(vec![0.5], vec![1.0]), 0.0).is_err());
    }

    #[test]
    fn shift_closed_forms() {
        assert_eq!(blockade_shift(1.0, 0.51).unwrap(), 0.0);
        assert_relative_eq!(blockade_shift(1.0 / 3.0, 0.51).unwrap(), 0.51, epsilon = 1e-15);
        assert!(matches!(blockade_shift(0.0, 0.51), Err(Error::InfiniteShift)));
        assert!(blockade_shift(1.5, 0.51).is_err());
        let b = blockade_shift(0.069, 0.51).unwrap();
        assert!((b - 1.32).abs() < 0.05, "{b}");
    }

    proptest! {
        #[test]
        fn shift_inverts_p2(p in 1e-6f64..=1.0, omega in 0.01f64..10.0) {
            let back = p2_from_shift(blockade_shift(p, omega).unwrap(), omega).unwrap();
            prop_assert!((back - p).abs() <= 1e-12);
        }

        #[test]
        fn p2_bounded_and_monotone_in_omega(
            levels in prop::collection::vec((-50.0f64..50.0, 0.0f64..1.0), 1..12),
            omega in 0.01f64..5.0,
        ) {
            let total: f64 = levels.iter().map(|l| l.1).sum::<f64>().max(1e-12);
            let spec = toy(levels.iter().map(|l| l.0).collect(), levels.iter().map(|l| l.1 / total).collect());
            let p = p2_from_spectrum(&spec, omega).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!(p2_from_spectrum(&spec, omega * 1.5).unwrap() >= p - 1e-15);
        }
    }

    #[test]
    fn gauss_hermite_moments() {
        for n in [1, 2, 7, 40, 80, 320, 640] {
            let (x, w) = gauss_hermite(n).unwrap();
            let pi = std::f64::consts::PI;
            assert_relative_eq!(w.iter().sum::<f64>(), pi.sqrt(), max_relative = 1e-12);
            if n >= 2 {
                let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
                assert_relative_eq!(m2, pi.sqrt() / 2.0, max_relative = 1e-11);
            }
            if n >= 3 {
                let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
                assert_relative_eq!(m4, 0.75 * pi.sqrt(), max_relative = 1e-11);
            }
        }
    }

    #[test]
    fn zero_spread_is_point_value() {
        let sys = system();
        let curve = averaged_blockade(sys, 11.0, 0.0, 1.15, 0.51, &AveragingOptions::default()).unwrap();
        let p = point_p2(sys, 11.0, 0.0, 1.15, 0.51).unwrap();
        assert_eq!(curve.mean_p2, p);
        // Frozen from an independent numpy diagonalization.
        assert!((p - 0.02734).abs() < 5e-4, "{p}");
    }

    #[test]
    fn far_blockaded_shift_is_rabi_independent() {
        let sys = system();
        let spec = sys.molecular_spectrum(&Geometry::new(11.0, 0.0).unwrap(), 1.15, false).unwrap();
        let b = blockade_shift(p2_from_spectrum(&spec, 0.51).unwrap(), 0.51).unwrap();
        for c in [0.5, 2.0] {
            let bc = blockade_shift(p2_from_spectrum(&spec, c * 0.51).unwrap(), c * 0.51).unwrap();
            assert!(((bc - b) / b).abs() < 0.05, "{c}: {bc} vs {b}");
        }
    }
}
