//! Radial Rydberg wavefunctions from Numerov integration of the Coulomb
//! problem at the quantum-defect energy.
//!
//! With `r = x^2` and `u(r) = x^(1/2) X(x)` the radial equation becomes
//! `X'' = [(2l + 1/2)(2l + 3/2)/x^2 - 8 - 8 E x^2] X` (atomic units), whose
//! oscillation length is nearly uniform in `x`. All wavefunctions share the
//! lattice `x_k = k * step`, so overlap integrals need no interpolation.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::atomdata::{Level, QuantumDefectTable};
use crate::error::{Error, Result};

/// Numerov lattice parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    /// Lattice spacing in `sqrt(bohr)`.
    pub step: f64,
    /// Innermost radius ever integrated to, bohr.
    pub inner_radius: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams { step: 0.01, inner_radius: 1e-4 }
    }
}

impl GridParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step < 1.0) {
            return Err(Error::Config(format!("grid step must lie in (0, 1), got {}", self.step)));
        }
        if !(self.inner_radius >= 0.0) {
            return Err(Error::Config("inner radius must be non-negative".into()));
        }
        Ok(())
    }

    /// Content hash of the parameters.
    pub fn hash(&self) -> String {
        let text = format!("numerov-sqrt-grid v1 step={:e} inner={:e}", self.step, self.inner_radius);
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// Outer integration boundary `2 n (n + 15)` in bohr.
    pub fn outer_radius(n: u32) -> f64 {
        let n = f64::from(n);
        2.0 * n * (n + 15.0)
    }
}

/// A normalized radial wavefunction sampled on the shared `sqrt(r)` lattice.
#[derive(Clone, Debug)]
pub struct RadialWavefunction {
    pub level: Level,
    pub step: f64,
    /// Lattice index of the first (innermost) sample.
    pub first_index: usize,
    /// `X(x)` samples, innermost first.
    pub chi: Vec<f64>,
    /// `|integral u^2 dr - 1|` after normalization.
    pub norm_residual: f64,
}

impl RadialWavefunction {
    pub fn len(&self) -> usize {
        self.chi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chi.is_empty()
    }

    pub fn last_index(&self) -> usize {
        self.first_index + self.chi.len() - 1
    }

    /// Radii of the samples in bohr.
    pub fn radii(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i).powi(2)).collect()
    }

    /// Reduced radial amplitude `u(r) = r R(r)` at the samples.
    pub fn u(&self) -> Vec<f64> {
        self.chi.iter().enumerate().map(|(i, c)| self.x(i).sqrt() * c).collect()
    }

    fn x(&self, i: usize) -> f64 {
        (self.first_index + i) as f64 * self.step
    }

    /// Number of sign changes, ignoring samples below `threshold * max|u|`.
    pub fn node_count(&self, threshold: f64) -> usize {
        let u = self.u();
        let max = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut last = 0.0;
        let mut nodes = 0;
        for v in u.into_iter().filter(|v| v.abs() > threshold * max) {
            if last != 0.0 && v.signum() != last {
                nodes += 1;
            }
            last = v.signum();
        }
        nodes
    }
}

/// Integrates the radial equation inward from `2 n (n + 15)` bohr.
///
/// Integration stops at `grid.inner_radius`, or earlier once inside the
/// inner classical turning point the solution starts to grow inward.
pub fn radial_wavefunction(
    level: Level,
    table: &QuantumDefectTable,
    grid: &GridParams,
) -> Result<RadialWavefunction> {
    grid.validate()?;
    let fail = |reason: String| Error::Integration { state: level.to_string(), reason };
    let n_star = table.effective_n(level)?;
    let l = f64::from(level.l);
    let energy = -0.5 / (n_star * n_star);
    // Turning points solve E r^2 + r - l(l+1)/2 = 0.
    let disc = 1.0 + 2.0 * energy * l * (l + 1.0);
    if n_star <= l || disc <= 0.0 {
        return Err(fail(format!("effective n {n_star:.6} leaves no classically allowed region")));
    }
    let inner_turning = if level.l == 0 { 0.0 } else { (-1.0 + disc.sqrt()) / (2.0 * energy) };
    let outer_turning = (-1.0 - disc.sqrt()) / (2.0 * energy);

    let h = grid.step;
    let h2 = h * h;
    let k_out = (GridParams::outer_radius(level.n).sqrt() / h).ceil() as usize;
    let k_in = ((grid.inner_radius.sqrt() / h).floor() as usize).max(1);
    if k_out < k_in + 3 {
        return Err(fail("grid too coarse for the integration range".into()));
    }
    let centrifugal = (2.0 * l + 0.5) * (2.0 * l + 1.5);
    let g = |k: usize| {
        let x = k as f64 * h;
        centrifugal / (x * x) - 8.0 - 8.0 * energy * x * x
    };

    // chi[k] for k in k_in..=k_out, filled from the outside.
    let mut chi = vec![0.0; k_out + 1];
    chi[k_out] = 1e-10;
    chi[k_out - 1] = 1e-10 * (1.0 + h * g(k_out).max(0.0).sqrt());
    let mut first = k_in;
    let (mut g_next, mut g_here) = (g(k_out), g(k_out - 1));
    for k in (k_in + 1..k_out).rev() {
        let g_prev = g(k - 1);
        let value = (2.0 * (1.0 + 5.0 * h2 * g_here / 12.0) * chi[k]
            - (1.0 - h2 * g_next / 12.0) * chi[k + 1])
            / (1.0 - h2 * g_prev / 12.0);
        if !value.is_finite() {
            return Err(fail(format!("non-finite amplitude at r = {:.3e} bohr", (k as f64 * h).powi(2))));
        }
        let r_prev = ((k - 1) as f64 * h).powi(2);
        if r_prev < inner_turning && value.abs() > chi[k].abs() {
            first = k;
            break;
        }
        chi[k - 1] = value;
        g_next = g_here;
        g_here = g_prev;
    }
    let stop_radius = (first as f64 * h).powi(2);
    if stop_radius > 0.5 * outer_turning {
        return Err(fail(format!(
            "integration diverged at r = {stop_radius:.3e} bohr, before covering the outer lobe \
             (outer turning point {outer_turning:.3e} bohr)"
        )));
    }
    let mut chi = chi.split_off(first);

    let weights = |k: usize| {
        let x = k as f64 * h;
        2.0 * x * x * h
    };
    let norm = |chi: &[f64]| -> f64 {
        let last = chi.len() - 1;
        chi.iter()
            .enumerate()
            .map(|(i, c)| {
                let end = if i == 0 || i == last { 0.5 } else { 1.0 };
                end * weights(first + i) * c * c
            })
            .sum()
    };
    let scale = norm(&chi).sqrt();
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(fail("wavefunction norm is zero or non-finite".into()));
    }
    chi.iter_mut().for_each(|c| *c /= scale);
    let norm_residual = (norm(&chi) - 1.0).abs();
    Ok(RadialWavefunction { level, step: h, first_index: first, chi, norm_residual })
}

/// `integral u_a u_b r^power dr` over the common support, in bohr^power.
///
/// The sum is symmetric in its arguments bit for bit.
pub fn radial_overlap(a: &RadialWavefunction, b: &RadialWavefunction, power: i32) -> Result<f64> {
    if a.step != b.step {
        return Err(Error::Argument(format!(
            "wavefunctions live on different lattices ({} vs {})",
            a.step, b.step
        )));
    }
    let lo = a.first_index.max(b.first_index);
    let hi = a.last_index().min(b.last_index());
    if lo > hi {
        return Ok(0.0);
    }
    let h = a.step;
    let mut sum = 0.0;
    for k in lo..=hi {
        let x = k as f64 * h;
        let end = if k == lo || k == hi { 0.5 } else { 1.0 };
        let w = end * 2.0 * x.powi(2 * power + 2) * h;
        sum += w * (a.chi[k - a.first_index] * b.chi[k - b.first_index]);
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::halfint::HalfInt;

    fn level(n: u32, l: u32, twice_j: i32) -> Level {
        Level { n, l, j: HalfInt::from_twice(twice_j) }
    }

    #[test]
    fn hydrogen_ground_state_pointwise() {
        let t = QuantumDefectTable::hydrogenic();
        let wf = radial_wavefunction(level(1, 0, 1), &t, &GridParams::default()).unwrap();
        let worst = wf
            .radii()
            .iter()
            .zip(wf.u())
            .map(|(r, u)| (u - 2.0 * r * (-r).exp()).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-4, "max deviation {worst}");
        assert!(wf.norm_residual < 1e-12);
    }

    #[test]
    fn hydrogenic_node_count() {
        let t = QuantumDefectTable::hydrogenic();
        for (n, l) in [(5, 2), (5, 0), (6, 1), (7, 3)] {
            let tj = if l == 0 { 1 } else { 2 * l as i32 + 1 };
            let wf = radial_wavefunction(level(n, l, tj), &t, &GridParams::default()).unwrap();
            assert_eq!(wf.node_count(1e-6), (n - l - 1) as usize, "n={n} l={l}");
        }
    }

    #[test]
    fn rydberg_outer_lobe_position() {
        let t = QuantumDefectTable::rb87();
        let lvl = level(79, 2, 5);
        let wf = radial_wavefunction(lvl, &t, &GridParams::default()).unwrap();
        let n_star = t.effective_n(lvl).unwrap();
        let (r_peak, _) = wf
            .radii()
            .into_iter()
            .zip(wf.u())
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap();
        let semiclassical = 2.0 * n_star * n_star;
        assert!(r_peak > 0.8 * semiclassical && r_peak < 1.05 * semiclassical, "{r_peak} vs {semiclassical}");
        // vanishes at the outer boundary
        let u = wf.u();
        let max = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(u.last().unwrap().abs() < 1e-4 * max);
        assert!(wf.norm_residual < 1e-6);
    }

    #[test]
    fn stops_near_the_inner_turning_point() {
        let t = QuantumDefectTable::rb87();
        let wf = radial_wavefunction(level(79, 3, 7), &t, &GridParams::default()).unwrap();
        // l = 3 inner turning point is near l(l+1)/2 = 6 bohr
        let r0 = wf.radii()[0];
        assert!(r0 > 0.1 && r0 < 6.0, "{r0}");
    }

    #[test]
    fn rejects_states_without_allowed_region() {
        let t = QuantumDefectTable::parse("p1/2 1.6 0 1 100 test").unwrap();
        let err = radial_wavefunction(level(2, 1, 1), &t, &GridParams::default()).unwrap_err();
        assert!(matches!(err, Error::Integration { .. }));
    }

    #[test]
    fn hydrogen_dipole_integral() {
        let t = QuantumDefectTable::hydrogenic();
        let g = GridParams::default();
        let s = radial_wavefunction(level(1, 0, 1), &t, &g).unwrap();
        let p = radial_wavefunction(level(2, 1, 1), &t, &g).unwrap();
        let r = radial_overlap(&s, &p, 1).unwrap();
        let exact = 128.0 * 6f64.sqrt() / 243.0;
        assert!((r.abs() - exact).abs() < 1e-3, "{r} vs {exact}");
        assert_eq!(r.to_bits(), radial_overlap(&p, &s, 1).unwrap().to_bits());
    }
}
