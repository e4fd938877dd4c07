//! Monte Carlo simulation of the two-site excitation experiments: per-shot
//! thermal disorder, coherent four-state dynamics, loss-based detection,
//! post-selection, and the damped-Rabi fit.
//!
//! Frequencies are in MHz (cycles per us) and times in us; the dynamics
//! multiply by `2 pi` internally.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Complex, DMatrix, Matrix4, SymmetricEigen, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blockade::{blockade_scan, blockade_shift};
use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::pairint::PairSystem;

/// Thermal position spread `sqrt(k_B T / m) / omega` in um for a harmonic
/// trap of the given oscillation period.
pub fn thermal_sigma(period_us: f64, temperature_uk: f64, consts: &PhysicalConstants) -> Result<f64> {
    if !(period_us > 0.0) || !(temperature_uk >= 0.0) {
        return Err(Error::Argument(format!(
            "trap period must be positive and temperature non-negative (got {period_us} us, {temperature_uk} uK)"
        )));
    }
    // m/s is um/us
    Ok(consts.thermal_velocity(temperature_uk) * period_us / (2.0 * PI))
}

/// Two-photon Doppler width `k_eff sqrt(k_B T / m) / 2 pi` in MHz.
pub fn doppler_sigma(
    temperature_uk: f64,
    lower_nm: f64,
    upper_nm: f64,
    counterpropagating: bool,
    consts: &PhysicalConstants,
) -> Result<f64> {
    if !(temperature_uk >= 0.0) || !(lower_nm > 0.0) || !(upper_nm > 0.0) {
        return Err(Error::Argument("temperature and wavelengths must be positive".into()));
    }
    let (k1, k2) = (1e3 / lower_nm, 1e3 / upper_nm);
    let k = if counterpropagating { (k2 - k1).abs() } else { k1 + k2 };
    Ok(k * consts.thermal_velocity(temperature_uk))
}

/// `P' = Omega'^2 / (Omega'^2 + Delta_ac^2)` with `Omega' = ratio * Omega`.
pub fn crosstalk_probability(omega: f64, ratio: f64, ac_stark: f64) -> Result<f64> {
    if !(omega > 0.0) || !(ratio >= 0.0) || !ac_stark.is_finite() {
        return Err(Error::Argument("crosstalk needs omega > 0, ratio >= 0 and finite detuning".into()));
    }
    let w = ratio * omega;
    if w == 0.0 {
        return Ok(0.0);
    }
    Ok(w * w / (w * w + ac_stark * ac_stark))
}

/// Every physical and imperfection parameter of a simulated run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub z_um: f64,
    /// Transverse spread; derived from the axial period when absent.
    pub sigma_y_um: Option<f64>,
    /// Axial spread; derived from the radial period when absent.
    pub sigma_z_um: Option<f64>,
    pub radial_period_us: f64,
    pub axial_period_us: f64,
    pub temperature_uk: f64,
    pub omega_mhz: f64,
    pub field_mt: f64,
    pub lower_wavelength_nm: f64,
    pub upper_wavelength_nm: f64,
    pub counterpropagating: bool,
    pub prep_error: f64,
    /// Probability that a lost atom is reported present.
    pub detection_error: f64,
    pub trap_off_loss: f64,
    pub rydberg_loss_prob: f64,
    pub crosstalk_ratio: f64,
    pub ac_stark_detuning_mhz: f64,
    /// Fractional shot-to-shot jitter of the addressed Rabi frequency.
    pub omega_jitter: f64,
    /// Fixed blockade shift; computed from the pair spectrum when absent.
    pub blockade_shift_mhz: Option<f64>,
    pub shots: u32,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            z_um: 11.0,
            sigma_y_um: None,
            sigma_z_um: None,
            radial_period_us: 12.3,
            axial_period_us: 139.0,
            temperature_uk: 150.0,
            omega_mhz: 0.51,
            field_mt: 1.15,
            lower_wavelength_nm: 780.0,
            upper_wavelength_nm: 480.0,
            counterpropagating: true,
            prep_error: 0.05,
            detection_error: 0.05,
            trap_off_loss: 0.03,
            rydberg_loss_prob: 1.0,
            crosstalk_ratio: 0.019,
            ac_stark_detuning_mhz: 2.0,
            omega_jitter: 0.0,
            blockade_shift_mhz: None,
            shots: 10_000,
            seed: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(format!("experiment config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Idealized configuration: no disorder, losses or detection errors.
    pub fn ideal(&self) -> Self {
        ExperimentConfig {
            sigma_y_um: Some(0.0),
            sigma_z_um: Some(0.0),
            temperature_uk: 0.0,
            prep_error: 0.0,
            detection_error: 0.0,
            trap_off_loss: 0.0,
            rydberg_loss_prob: 1.0,
            crosstalk_ratio: 0.0,
            omega_jitter: 0.0,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        for (name, p) in [
            ("prep_error", self.prep_error),
            ("detection_error", self.detection_error),
            ("trap_off_loss", self.trap_off_loss),
            ("rydberg_loss_prob", self.rydberg_loss_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must be a probability, got {p}"));
            }
        }
        if !(self.omega_mhz > 0.0) {
            return bad(format!("omega_mhz must be positive, got {}", self.omega_mhz));
        }
        if self.shots == 0 {
            return bad("shots must be at least 1".into());
        }
        if !(self.z_um > 0.0) {
            return bad(format!("z_um must be positive, got {}", self.z_um));
        }
        for (name, v) in [
            ("temperature_uk", self.temperature_uk),
            ("crosstalk_ratio", self.crosstalk_ratio),
            ("omega_jitter", self.omega_jitter),
            ("field_mt", self.field_mt),
            ("sigma_y_um", self.sigma_y_um.unwrap_or(0.0)),
            ("sigma_z_um", self.sigma_z_um.unwrap_or(0.0)),
            ("blockade_shift_mhz", self.blockade_shift_mhz.unwrap_or(0.0)),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if !(self.radial_period_us > 0.0 && self.axial_period_us > 0.0) {
            return bad("trap periods must be positive".into());
        }
        if !(self.lower_wavelength_nm > 0.0 && self.upper_wavelength_nm > 0.0) {
            return bad("wavelengths must be positive".into());
        }
        Ok(())
    }

    pub fn sigma_y(&self, consts: &PhysicalConstants) -> Result<f64> {
        self.sigma_y_um.map_or_else(|| thermal_sigma(self.axial_period_us, self.temperature_uk, consts), Ok)
    }

    pub fn sigma_z(&self, consts: &PhysicalConstants) -> Result<f64> {
        self.sigma_z_um.map_or_else(|| thermal_sigma(self.radial_period_us, self.temperature_uk, consts), Ok)
    }

    pub fn doppler_sigma(&self, consts: &PhysicalConstants) -> Result<f64> {
        doppler_sigma(
            self.temperature_uk,
            self.lower_wavelength_nm,
            self.upper_wavelength_nm,
            self.counterpropagating,
            consts,
        )
    }

    /// Duration of a resonant pi pulse, `1 / (2 Omega)` us.
    pub fn pi_time(&self) -> f64 {
        0.5 / self.omega_mhz
    }
}

/// Which trap site a pulse addresses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Site {
    Control,
    Target,
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Site::Control => "control",
            Site::Target => "target",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseKind {
    Drive,
    Idle,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseStep {
    pub site: Site,
    pub duration_us: f64,
    pub kind: PulseKind,
}

/// Ordered pulse steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub steps: Vec<PulseStep>,
}

impl PulseSequence {
    pub fn new(steps: Vec<PulseStep>) -> Result<Self> {
        if let Some(s) = steps.iter().find(|s| !(s.duration_us >= 0.0) || !s.duration_us.is_finite()) {
            return Err(Error::Argument(format!("pulse duration must be >= 0, got {}", s.duration_us)));
        }
        Ok(PulseSequence { steps })
    }

    /// A single drive of length `t` on the target.
    pub fn fig2(t: f64) -> Result<Self> {
        Self::new(vec![PulseStep { site: Site::Target, duration_us: t, kind: PulseKind::Drive }])
    }

    /// Pi on the control, `t` on the target, pi on the control.
    pub fn fig3(t: f64, omega: f64) -> Result<Self> {
        let pi = 0.5 / omega;
        if (pi * 2.0 * omega - 1.0).abs() > 1e-9 {
            return Err(Error::Invariant("pi-pulse duration inconsistent with omega".into()));
        }
        let drive = |site, duration_us| PulseStep { site, duration_us, kind: PulseKind::Drive };
        Self::new(vec![drive(Site::Control, pi), drive(Site::Target, t), drive(Site::Control, pi)])
    }
}

/// Pulse sequences: Rabi flopping, crosstalk, and blockade.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SequenceKind {
    /// Target atom only, driven for `T`.
    Fig2,
    /// Control atom only, lasers on the empty target site.
    Fig2Crosstalk,
    /// Both atoms; control pi pulses around the target drive.
    Fig3,
}

impl SequenceKind {
    pub fn sequence(self, t: f64, omega: f64) -> Result<PulseSequence> {
        match self {
            SequenceKind::Fig2 | SequenceKind::Fig2Crosstalk => PulseSequence::fig2(t),
            SequenceKind::Fig3 => PulseSequence::fig3(t, omega),
        }
    }

    fn present(self) -> [bool; 2] {
        match self {
            SequenceKind::Fig2 => [false, true],
            SequenceKind::Fig2Crosstalk => [true, false],
            SequenceKind::Fig3 => [true, true],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SequenceKind::Fig2 => "fig2",
            SequenceKind::Fig2Crosstalk => "fig2-crosstalk",
            SequenceKind::Fig3 => "fig3",
        }
    }
}

impl fmt::Display for SequenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SequenceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig2" => Ok(SequenceKind::Fig2),
            "fig2-crosstalk" => Ok(SequenceKind::Fig2Crosstalk),
            "fig3" => Ok(SequenceKind::Fig3),
            _ => Err(Error::Config(format!("unknown sequence `{s}` (expected fig2, fig2-crosstalk or fig3)"))),
        }
    }
}

/// How the blockade shift of a shot is chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum BlockadeModel {
    Fixed(f64),
    /// `P2` tabulated against `|dy|` on a uniform grid from 0, converted to
    /// `B` after linear interpolation.
    Table { step: f64, p2: Vec<f64>, omega: f64 },
}

impl BlockadeModel {
    /// Tabulates `P2(|dy|)` out to `6 sqrt(2) sigma_y` (at least one step).
    pub fn tabulate(system: &PairSystem, config: &ExperimentConfig, step: f64) -> Result<Self> {
        let sigma = config.sigma_y(system.consts())?;
        let reach = (6.0 * std::f64::consts::SQRT_2 * sigma).max(step);
        let count = (reach / step).ceil() as usize + 1;
        let offsets: Vec<f64> = (0..count).map(|i| i as f64 * step).collect();
        let samples = blockade_scan(system, config.z_um, &offsets, config.field_mt, config.omega_mhz)?;
        Ok(BlockadeModel::Table { step, p2: samples.iter().map(|s| s.p2).collect(), omega: config.omega_mhz })
    }

    /// Shift in MHz at transverse offset `dy`; infinite where `P2 = 0`.
    pub fn shift(&self, dy: f64) -> f64 {
        match self {
            BlockadeModel::Fixed(b) => *b,
            BlockadeModel::Table { step, p2, omega } => {
                let x = dy.abs() / step;
                let i = (x.floor() as usize).min(p2.len() - 1);
                let p = if i + 1 < p2.len() {
                    let t = x - i as f64;
                    p2[i] * (1.0 - t) + p2[i + 1] * t
                } else {
                    p2[i]
                };
                blockade_shift(p, *omega).unwrap_or(f64::INFINITY)
            }
        }
    }
}

/// Per-shot disorder and outcomes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    /// `(y, z)` of control and target, um.
    pub positions: [(f64, f64); 2],
    /// Velocity along the excitation beams, m/s.
    pub velocities: [f64; 2],
    /// Two-photon Doppler detunings, MHz.
    pub doppler: [f64; 2],
    pub dark: [bool; 2],
    pub blockade_shift: f64,
    /// Final populations of `|11>, |1r>, |r1>, |rr>` (control first).
    pub probabilities: [f64; 4],
    /// Atom reported present in the second image, per site; `None` for an
    /// empty site.
    pub present: [Option<bool>; 2],
    pub post_selected: bool,
}

/// Disorder of one shot fed into [`evolve_two_atom`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ShotDisorder {
    /// Doppler detunings of control and target, MHz.
    pub doppler: [f64; 2],
    /// Fractional Rabi-frequency deviation per site.
    pub rabi_scale: [f64; 2],
    /// Atoms that cannot be excited (absent or optically dark).
    pub frozen: [bool; 2],
}

const BASIS_RYDBERG: [[bool; 2]; 4] = [[false, false], [false, true], [true, false], [true, true]];

/// Propagates `|11>` through `sequence` and returns the final populations
/// of `|11>, |1r>, |r1>, |rr>`.
pub fn evolve_two_atom(
    sequence: &PulseSequence,
    disorder: &ShotDisorder,
    blockade_shift: f64,
    config: &ExperimentConfig,
) -> Result<[f64; 4]> {
    let mut psi = Vector4::new(Complex::new(1.0, 0.0), Complex::default(), Complex::default(), Complex::default());
    let blocked = blockade_shift.is_infinite();
    for step in &sequence.steps {
        if step.duration_us == 0.0 {
            continue;
        }
        let addressed = match step.site {
            Site::Control => 0,
            Site::Target => 1,
        };
        let mut rabi = [0.0; 2];
        let mut detuning = disorder.doppler;
        if step.kind == PulseKind::Drive {
            for (site, r) in rabi.iter_mut().enumerate() {
                if disorder.frozen[site] {
                    continue;
                }
                if site == addressed {
                    *r = config.omega_mhz * (1.0 + disorder.rabi_scale[site]);
                } else {
                    *r = config.omega_mhz * config.crosstalk_ratio;
                    detuning[site] += config.ac_stark_detuning_mhz;
                }
            }
        }
        let mut h = Matrix4::<f64>::zeros();
        for (k, ryd) in BASIS_RYDBERG.iter().enumerate() {
            let mut e = 0.0;
            for site in 0..2 {
                if ryd[site] {
                    e -= detuning[site];
                }
            }
            if ryd[0] && ryd[1] && !blocked {
                e += blockade_shift;
            }
            h[(k, k)] = e;
        }
        // target flips index bit 0, control flips bit 1
        for (k, ryd) in BASIS_RYDBERG.iter().enumerate() {
            for site in 0..2 {
                if !ryd[site] {
                    let up = k | if site == 0 { 2 } else { 1 };
                    h[(up, k)] = rabi[site] / 2.0;
                    h[(k, up)] = rabi[site] / 2.0;
                }
            }
        }
        if blocked {
            // An infinite shift removes |rr> from the dynamics.
            for k in 0..3 {
                h[(3, k)] = 0.0;
                h[(k, 3)] = 0.0;
            }
        }
        let eig = SymmetricEigen::new(h);
        let phase = 2.0 * PI * step.duration_us;
        let mut u = Matrix4::<Complex<f64>>::zeros();
        for (n, &lambda) in eig.eigenvalues.iter().enumerate() {
            let rot = Complex::from_polar(1.0, -lambda * phase);
            let v = eig.eigenvectors.column(n);
            for r in 0..4 {
                for c in 0..4 {
                    u[(r, c)] += rot * (v[r] * v[c]);
                }
            }
        }
        psi = u * psi;
    }
    let probs = [psi[0].norm_sqr(), psi[1].norm_sqr(), psi[2].norm_sqr(), psi[3].norm_sqr()];
    let norm: f64 = probs.iter().sum();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::Invariant(format!("state norm drifted to {norm}")));
    }
    Ok(probs)
}

/// Retention statistics of one site at one pulse length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub t_us: f64,
    pub site: Site,
    /// Fraction of kept shots with the atom reported present.
    pub mean_retention: f64,
    /// Standard error of `mean_retention`.
    pub stderr: f64,
    /// Mean Rydberg population before measurement, over kept shots.
    pub mean_rydberg: f64,
    pub n_shots: u32,
    pub n_postselected: u32,
}

/// Outcome of [`run_experiment`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub sequence: SequenceKind,
    pub config: ExperimentConfig,
    pub rows: Vec<ExperimentRow>,
    /// Mean `|rr>` population before measurement per pulse length.
    pub mean_double_excitation: Vec<f64>,
}

impl ExperimentResult {
    pub fn site_rows(&self, site: Site) -> impl Iterator<Item = &ExperimentRow> {
        self.rows.iter().filter(move |r| r.site == site)
    }
}

struct ShotContext<'a> {
    config: &'a ExperimentConfig,
    kind: SequenceKind,
    blockade: &'a BlockadeModel,
    sigma: [f64; 2],
    velocity: f64,
    doppler_per_velocity: f64,
}

fn gaussian(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sigma).expect("finite sigma").sample(rng)
}

fn simulate_shot(ctx: &ShotContext, t: f64, stream: u64) -> Result<ShotRecord> {
    let config = ctx.config;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(stream);
    let present = ctx.kind.present();
    let mut positions = [(0.0, 0.0); 2];
    let mut velocities = [0.0; 2];
    let mut disorder = ShotDisorder::default();
    for site in 0..2 {
        positions[site] = (gaussian(&mut rng, ctx.sigma[0]), gaussian(&mut rng, ctx.sigma[1]));
        velocities[site] = gaussian(&mut rng, ctx.velocity);
        disorder.doppler[site] = velocities[site] * ctx.doppler_per_velocity;
        disorder.rabi_scale[site] = gaussian(&mut rng, config.omega_jitter);
        let dark = rng.random::<f64>() < config.prep_error;
        disorder.frozen[site] = !present[site] || dark;
    }
    let dark = [present[0] && disorder.frozen[0], present[1] && disorder.frozen[1]];
    let shift = if present[0] && present[1] { ctx.blockade.shift(positions[0].0 - positions[1].0) } else { 0.0 };
    let sequence = ctx.kind.sequence(t, config.omega_mhz)?;
    let probabilities = evolve_two_atom(&sequence, &disorder, shift, config)?;

    // Project onto a basis state, then apply loss and detection.
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut outcome = 3;
    for (k, p) in probabilities.iter().enumerate() {
        acc += p;
        if u < acc {
            outcome = k;
            break;
        }
    }
    let mut reported = [None; 2];
    for site in 0..2 {
        let ion = rng.random::<f64>() < config.rydberg_loss_prob;
        let trap = rng.random::<f64>() < config.trap_off_loss;
        let miss = rng.random::<f64>() < config.detection_error;
        if !present[site] {
            continue;
        }
        let lost = (BASIS_RYDBERG[outcome][site] && ion) || trap;
        reported[site] = Some(!lost || miss);
    }
    let post_selected = match ctx.kind {
        SequenceKind::Fig3 => reported[0] == Some(true),
        _ => true,
    };
    Ok(ShotRecord {
        positions,
        velocities,
        doppler: disorder.doppler,
        dark,
        blockade_shift: shift,
        probabilities,
        present: reported,
        post_selected,
    })
}

/// Simulates `config.shots` shots at each pulse length and aggregates the
/// retention per occupied site.
///
/// Each shot draws from its own ChaCha8 stream `t_index * shots + shot`,
/// so results do not depend on how shots are scheduled across threads.
pub fn run_experiment(
    config: &ExperimentConfig,
    kind: SequenceKind,
    t_grid: &[f64],
    blockade: &BlockadeModel,
    consts: &PhysicalConstants,
) -> Result<ExperimentResult> {
    config.validate()?;
    if t_grid.is_empty() {
        return Err(Error::Argument("empty pulse-length grid".into()));
    }
    let ctx = ShotContext {
        config,
        kind,
        blockade,
        sigma: [config.sigma_y(consts)?, config.sigma_z(consts)?],
        velocity: consts.thermal_velocity(config.temperature_uk),
        doppler_per_velocity: config.doppler_sigma(consts)? / consts.thermal_velocity(config.temperature_uk).max(f64::MIN_POSITIVE),
    };
    let shots = u64::from(config.shots);
    let mut rows = Vec::new();
    let mut doubles = Vec::new();
    for (ti, &t) in t_grid.iter().enumerate() {
        let records = (0..shots)
            .into_par_iter()
            .map(|s| simulate_shot(&ctx, t, ti as u64 * shots + s))
            .collect::<Result<Vec<_>>>()?;
        let kept: Vec<&ShotRecord> = records.iter().filter(|r| r.post_selected).collect();
        let n = kept.len() as u32;
        doubles.push(if n == 0 { 0.0 } else { kept.iter().map(|r| r.probabilities[3]).sum::<f64>() / f64::from(n) });
        for (site, label) in [(0, Site::Control), (1, Site::Target)] {
            if !kind.present()[site] {
                continue;
            }
            let (mut hits, mut ryd) = (0u32, 0.0);
            for r in &kept {
                if r.present[site] == Some(true) {
                    hits += 1;
                }
                ryd += (0..4).filter(|&k| BASIS_RYDBERG[k][site]).map(|k| r.probabilities[k]).sum::<f64>();
            }
            let (mean, stderr, mean_rydberg) = if n == 0 {
                (f64::NAN, f64::NAN, f64::NAN)
            } else {
                let p = f64::from(hits) / f64::from(n);
                (p, (p * (1.0 - p) / f64::from(n)).sqrt(), ryd / f64::from(n))
            };
            rows.push(ExperimentRow {
                t_us: t,
                site: label,
                mean_retention: mean,
                stderr,
                mean_rydberg,
                n_shots: config.shots,
                n_postselected: n,
            });
        }
    }
    Ok(ExperimentResult { sequence: kind, config: config.clone(), rows, mean_double_excitation: doubles })
}

/// Single-shot records for inspection, same streams as [`run_experiment`].
pub fn shot_records(
    config: &ExperimentConfig,
    kind: SequenceKind,
    t: f64,
    t_index: usize,
    blockade: &BlockadeModel,
    consts: &PhysicalConstants,
) -> Result<Vec<ShotRecord>> {
    config.validate()?;
    let velocity = consts.thermal_velocity(config.temperature_uk);
    let ctx = ShotContext {
        config,
        kind,
        blockade,
        sigma: [config.sigma_y(consts)?, config.sigma_z(consts)?],
        velocity,
        doppler_per_velocity: config.doppler_sigma(consts)? / velocity.max(f64::MIN_POSITIVE),
    };
    let shots = u64::from(config.shots);
    (0..shots).map(|s| simulate_shot(&ctx, t, t_index as u64 * shots + s)).collect()
}

/// Parameters of `(1 - a) + a exp(-t / tau) cos(2 pi f t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DampedRabiFit {
    pub a: f64,
    /// Decay time, us; infinite for an undamped fit.
    pub tau: f64,
    /// `Omega / 2 pi`, MHz.
    pub omega: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

fn damped_rabi(p: &[f64; 3], t: f64) -> (f64, [f64; 3]) {
    let (a, gamma, f) = (p[0], p[1], p[2]);
    let env = (-gamma * t).exp();
    let (s, c) = (2.0 * PI * f * t).sin_cos();
    let value = 1.0 - a + a * env * c;
    let grad = [env * c - 1.0, -a * t * env * c, -a * env * s * 2.0 * PI * t];
    (value, grad)
}

/// Least-squares fit of `(1 - a) + a exp(-t / tau) cos(2 pi f t)`.
///
/// Initialization is deterministic: `f` from the periodogram peak, `a`
/// from the mean depletion and amplitude, and a slow decay.
pub fn fit_damped_rabi(t: &[f64], y: &[f64]) -> Result<DampedRabiFit> {
    if t.len() != y.len() {
        return Err(Error::Argument("time and population columns differ in length".into()));
    }
    if t.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 points, got {}", t.len())));
    }
    if t.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Fit("data contain non-finite values".into()));
    }
    let n = t.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let spread = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if spread < 1e-20 {
        return Err(Error::Fit("data are constant".into()));
    }
    let (t_min, t_max) = t.iter().fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = t_max - t_min;
    if !(span > 0.0) {
        return Err(Error::Fit("all samples at one time".into()));
    }
    let mut dt: Vec<f64> = t.to_vec();
    dt.sort_by(f64::total_cmp);
    let min_step = dt.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0.0).fold(f64::MAX, f64::min);
    let f_max = 0.5 / min_step;
    let f_min = 0.5 / span;
    let grid = 4000;
    let mut best = (0.0, f_min);
    for i in 0..=grid {
        let f = f_min + (f_max - f_min) * i as f64 / grid as f64;
        let (mut c, mut s) = (0.0, 0.0);
        for (ti, yi) in t.iter().zip(y) {
            let (sn, cs) = (2.0 * PI * f * ti).sin_cos();
            c += (yi - mean) * cs;
            s += (yi - mean) * sn;
        }
        let power = c * c + s * s;
        if power > best.0 {
            best = (power, f);
        }
    }
    let amplitude = 0.5 * (y.iter().cloned().fold(f64::MIN, f64::max) - y.iter().cloned().fold(f64::MAX, f64::min));
    let mut p = [amplitude.max(1.0 - mean).clamp(1e-3, 1.5), 0.1 / span, best.1];

    let sse = |p: &[f64; 3]| t.iter().zip(y).map(|(ti, yi)| (damped_rabi(p, *ti).0 - yi).powi(2)).sum::<f64>();
    let mut cost = sse(&p);
    let mut lambda = 1e-3;
    for _ in 0..500 {
        let mut jtj = DMatrix::<f64>::zeros(3, 3);
        let mut jtr = DMatrix::<f64>::zeros(3, 1);
        for (ti, yi) in t.iter().zip(y) {
            let (v, g) = damped_rabi(&p, *ti);
            let r = yi - v;
            for a in 0..3 {
                jtr[(a, 0)] += g[a] * r;
                for b in 0..3 {
                    jtj[(a, b)] += g[a] * g[b];
                }
            }
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut m = jtj.clone();
            for a in 0..3 {
                m[(a, a)] += lambda * jtj[(a, a)].max(1e-12);
            }
            let Some(step) = m.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [p[0] + step[(0, 0)], (p[1] + step[(1, 0)]).max(0.0), p[2] + step[(2, 0)]];
            let c = sse(&trial);
            if c <= cost {
                let rel = (cost - c) / cost.max(1e-300);
                p = trial;
                cost = c;
                lambda = (lambda / 10.0).max(1e-15);
                improved = true;
                if rel < 1e-15 {
                    lambda = 1e12;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved || lambda >= 1e12 {
            break;
        }
    }
    if !p.iter().all(|v| v.is_finite()) {
        return Err(Error::Fit("fit diverged".into()));
    }
    Ok(DampedRabiFit {
        a: p[0],
        tau: if p[1] > 0.0 { 1.0 / p[1] } else { f64::INFINITY },
        omega: p[2].abs(),
        residual: (cost / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn consts() -> PhysicalConstants {
        PhysicalConstants::rb87()
    }

    #[test]
    fn thermal_spreads() {
        let c = consts();
        let radial = thermal_sigma(12.3, 150.0, &c).unwrap();
        let axial = thermal_sigma(139.0, 150.0, &c).unwrap();
        assert!((radial / 0.23 - 1.0).abs() < 0.1, "{radial}");
        assert!((axial / 2.6 - 1.0).abs() < 0.1, "{axial}");
        assert_eq!(thermal_sigma(12.3, 0.0, &c).unwrap(), 0.0);
        assert!(thermal_sigma(0.0, 150.0, &c).is_err());
    }

    #[test]
    fn doppler_width() {
        let c = consts();
        let counter = doppler_sigma(150.0, 780.0, 480.0, true, &c).unwrap();
        assert!((counter - 0.1).abs() < 0.01, "{counter}");
        assert_eq!(doppler_sigma(0.0, 780.0, 480.0, true, &c).unwrap(), 0.0);
        let co = doppler_sigma(150.0, 780.0, 480.0, false, &c).unwrap();
        let (k780, k480) = (1.0 / 780.0, 1.0 / 480.0);
        assert_relative_eq!(co / counter, (k780 + k480) / (k480 - k780), max_relative = 1e-12);
    }

    #[test]
    fn crosstalk() {
        assert_eq!(crosstalk_probability(0.51, 0.0, 2.0).unwrap(), 0.0);
        assert_eq!(crosstalk_probability(0.51, 0.019, 0.0).unwrap(), 1.0);
        let p = crosstalk_probability(0.51, 0.019, 2.0).unwrap();
        assert!(p < 1e-4 && (p - 2.35e-5).abs() < 1e-6, "{p}");
    }

    #[test]
    fn config_round_trip_and_validation() {
        let c = ExperimentConfig::default();
        let text = c.to_toml_string();
        assert!(text.contains("omega_mhz = 0.51"));
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), c);
        assert!(matches!(ExperimentConfig::from_toml_str("prep_error = 1.5"), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::from_toml_str("shots = 0"), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::from_toml_str("omega = 1"), Err(Error::Config(_))));
    }

    #[test]
    fn shipped_config_matches_defaults() {
        let text = include_str!("../data/experiment.toml");
        assert_eq!(ExperimentConfig::from_toml_str(text).unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn pi_pulse_inverts_target() {
        let c = ExperimentConfig::default().ideal();
        let d = ShotDisorder { frozen: [true, false], ..Default::default() };
        let p = evolve_two_atom(&PulseSequence::fig2(c.pi_time()).unwrap(), &d, 0.0, &c).unwrap();
        assert!((p[1] - 1.0).abs() < 1e-12, "{p:?}");
    }

    #[test]
    fn infinite_blockade_freezes_target() {
        let c = ExperimentConfig::default().ideal();
        let d = ShotDisorder::default();
        for t in [0.3, c.pi_time(), 1.7] {
            let p = evolve_two_atom(&PulseSequence::fig3(t, c.omega_mhz).unwrap(), &d, f64::INFINITY, &c).unwrap();
            assert!((p[0] - 1.0).abs() < 1e-12, "{p:?}");
        }
    }

    #[test]
    fn finite_blockade_matches_p2_formula() {
        let c = ExperimentConfig::default().ideal();
        let b = c.omega_mhz;
        let seq = PulseSequence::new(vec![
            PulseStep { site: Site::Control, duration_us: c.pi_time(), kind: PulseKind::Drive },
            PulseStep { site: Site::Target, duration_us: c.pi_time(), kind: PulseKind::Drive },
        ])
        .unwrap();
        let p = evolve_two_atom(&seq, &ShotDisorder::default(), b, &c).unwrap();
        assert!((p[3] / (1.0 / 3.0) - 1.0).abs() < 0.1, "{p:?}");
    }

    #[test]
    fn ideal_rabi_flopping() {
        let c = ExperimentConfig { shots: 50, ..ExperimentConfig::default().ideal() };
        let ts: Vec<f64> = (0..12).map(|i| 0.2 * f64::from(i)).collect();
        let r = run_experiment(&c, SequenceKind::Fig2, &ts, &BlockadeModel::Fixed(0.0), &consts()).unwrap();
        for row in r.site_rows(Site::Target) {
            let expected = (PI * c.omega_mhz * row.t_us).cos().powi(2);
            assert!((row.mean_rydberg - (1.0 - expected)).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_fit_recovers_parameters() {
        let t: Vec<f64> = (0..40).map(|i| 0.1 * f64::from(i)).collect();
        let p = [0.8, 0.2, 0.51];
        let y: Vec<f64> = t.iter().map(|&ti| damped_rabi(&p, ti).0).collect();
        let fit = fit_damped_rabi(&t, &y).unwrap();
        assert!((fit.a - 0.8).abs() < 1e-6);
        assert!((fit.tau - 5.0).abs() < 1e-6);
        assert!((fit.omega - 0.51).abs() < 1e-6);
        assert!(fit.residual < 1e-9);
    }

    #[test]
    fn fit_rejects_degenerate_data() {
        let t = [0.0, 1.0, 2.0, 3.0];
        assert!(matches!(fit_damped_rabi(&t, &[0.5; 4]), Err(Error::Fit(_))));
        assert!(matches!(fit_damped_rabi(&t[..3], &[0.1, 0.2, 0.3]), Err(Error::Fit(_))));
    }
}
