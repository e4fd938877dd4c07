#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use rydberg_blockade::acceptance::Suite;
use rydberg_blockade::atomdata::{level_energy, Level, QuantumDefectTable, Shell};
use rydberg_blockade::blockade::{averaged_blockade, blockade_scan, AveragingOptions};
use rydberg_blockade::constants::PhysicalConstants;
use rydberg_blockade::dipole::MatrixElementCache;
use rydberg_blockade::expsim::{fit_damped_rabi, run_experiment, BlockadeModel, ExperimentConfig, SequenceKind};
use rydberg_blockade::io::{float_column, num, read_csv, RunManifest, Table};
use rydberg_blockade::pairint::PairSystem;
use rydberg_blockade::radial::GridParams;
use rydberg_blockade::{Error, Result};

const CACHE_FILE: &str = "radial_cache.txt";

/// Two-atom Rydberg blockade calculator and experiment simulator.
///
/// Defaults reproduce the 79d5/2 two-site experiment: Z = 11 um,
/// B = 1.15 mT, Omega/2pi = 0.51 MHz, T = 150 uK.
#[derive(Parser, Debug)]
#[command(name = "rydblock", version)]
struct Cli {
    /// Directory holding the radial matrix-element cache.
    #[arg(long, global = true, env = "RYDBLOCK_CACHE_DIR", value_name = "DIR")]
    cache_dir: Option<PathBuf>,
    /// Do not read or write the on-disk cache.
    #[arg(long, global = true)]
    no_cache: bool,
    /// Quantum-defect table (default: shipped Rb-87 table).
    #[arg(long, global = true, value_name = "FILE")]
    defects: Option<PathBuf>,
    /// Physical constants TOML (default: shipped CODATA file).
    #[arg(long, global = true, value_name = "FILE")]
    constants: Option<PathBuf>,
    /// Re-run the command recorded in a manifest and compare output hashes.
    #[arg(long, value_name = "FILE")]
    from_manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Level energies and quantum defects.
    Energy(EnergyArgs),
    /// Curve-tracked molecular energies versus transverse offset (CSV).
    PairSpectrum(PairSpectrumArgs),
    /// P2 and blockade shift versus offset plus thermal averages (CSV + JSON).
    Blockade(BlockadeArgs),
    /// Monte Carlo simulation of a pulse sequence (CSV).
    Simulate(SimulateArgs),
    /// Damped-Rabi fit of a retention curve (JSON).
    Fit(FitArgs),
    /// Radial matrix-element cache maintenance.
    Cache(CacheArgs),
    /// Run the acceptance suite; exits with 4 if any criterion fails.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug)]
struct EnergyArgs {
    /// Principal quantum number.
    #[arg(long)]
    n: Option<u32>,
    /// Orbital angular momentum, as a letter (s, p, d, f) or integer.
    #[arg(long)]
    l: Option<String>,
    /// Total angular momentum, e.g. 5/2.
    #[arg(long)]
    j: Option<String>,
    /// Level labels such as 79d5/2 (repeatable).
    #[arg(long = "level", value_name = "LABEL")]
    levels: Vec<Level>,
    /// Table of p, d and f levels for n in FIRST-LAST.
    #[arg(long, value_name = "FIRST-LAST")]
    range: Option<String>,
    /// Zero quantum defects (hydrogen).
    #[arg(long)]
    hydrogenic: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Channels {
    /// (nd, nd), (n+1 p, n-1 f), (n+2 p, n-2 f) and their mirrors.
    Forster,
}

#[derive(Args, Debug)]
struct PairSpectrumArgs {
    #[arg(long, default_value_t = 79)]
    n: u32,
    /// Axial site separation, um.
    #[arg(long = "z", default_value_t = 11.0)]
    z: f64,
    /// First transverse offset, um.
    #[arg(long, default_value_t = 0.0)]
    dy_min: f64,
    /// Last transverse offset, um.
    #[arg(long, default_value_t = 10.0)]
    dy_max: f64,
    /// Offset step, um.
    #[arg(long, default_value_t = 0.1)]
    dy_step: f64,
    /// Bias field, mT.
    #[arg(long, default_value_t = 1.15)]
    field: f64,
    #[arg(long, value_enum, default_value_t = Channels::Forster)]
    channels: Channels,
    /// Only write curves whose largest kappa^2 over the scan exceeds this.
    #[arg(long, default_value_t = 0.0)]
    min_kappa2: f64,
    /// Output CSV.
    #[arg(long, default_value = "pair_spectrum.csv")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BlockadeArgs {
    #[arg(long, default_value_t = 79)]
    n: u32,
    /// Axial site separation, um.
    #[arg(long = "z", default_value_t = 11.0)]
    z: f64,
    /// Transverse position spread per atom, um.
    #[arg(long, default_value_t = 2.6)]
    sigma_y: f64,
    /// Axial position spread per atom, um (0 skips the axial average).
    #[arg(long, default_value_t = 0.0)]
    sigma_z: f64,
    /// Bias fields, mT (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "0,1.15")]
    field: Vec<f64>,
    /// Rabi frequency Omega/2pi, MHz.
    #[arg(long, default_value_t = 0.51)]
    omega: f64,
    /// Largest tabulated offset, um (default 6 sqrt(2) sigma_y).
    #[arg(long)]
    dy_max: Option<f64>,
    /// Offset step of the table, um.
    #[arg(long, default_value_t = 0.25)]
    dy_step: f64,
    /// Output CSV; the JSON summary goes next to it.
    #[arg(long, default_value = "blockade.csv")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Experiment TOML (default: built-in parameters).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, default_value = "fig2")]
    sequence: SequenceKind,
    /// Longest pulse, us.
    #[arg(long, default_value_t = 3.0)]
    t_max: f64,
    /// Pulse-length step, us.
    #[arg(long, default_value_t = 0.1)]
    t_step: f64,
    /// Override the shot count.
    #[arg(long)]
    shots: Option<u32>,
    /// Override the seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Offset step of the blockade table, um.
    #[arg(long, default_value_t = 0.5)]
    blockade_step: f64,
    #[arg(long, default_value_t = 79)]
    n: u32,
    /// Output CSV.
    #[arg(long, default_value = "experiment.csv")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// CSV with time and population columns.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Time column, us.
    #[arg(long, default_value = "t_us")]
    t_column: String,
    #[arg(long, default_value = "retention")]
    y_column: String,
    /// Keep rows whose `site` column equals this (when present).
    #[arg(long, default_value = "target")]
    site: String,
    /// Output JSON (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CacheArgs {
    /// Recompute every radial integral of the pair basis and save it.
    #[arg(long)]
    rebuild: bool,
    /// Report the stored entries and hashes.
    #[arg(long)]
    stats: bool,
    /// Delete the cache file.
    #[arg(long)]
    clear: bool,
    /// Principal quantum number whose basis is cached.
    #[arg(long, default_value_t = 79)]
    n: u32,
}

#[derive(Args, Debug)]
struct SelftestArgs {
    /// Run only these criteria (repeatable).
    #[arg(long)]
    only: Vec<u32>,
}

struct Context {
    consts: PhysicalConstants,
    cache: Arc<MatrixElementCache>,
    cache_path: Option<PathBuf>,
    loaded: usize,
}

impl Context {
    fn new(cli: &Cli, hydrogenic: bool) -> Result<Self> {
        let consts = match &cli.constants {
            Some(p) => PhysicalConstants::from_file(p)?,
            None => PhysicalConstants::rb87(),
        };
        let table = if hydrogenic {
            QuantumDefectTable::hydrogenic()
        } else {
            match &cli.defects {
                Some(p) => QuantumDefectTable::from_file(p)?,
                None => QuantumDefectTable::rb87(),
            }
        };
        let cache = Arc::new(MatrixElementCache::new(Arc::new(table), GridParams::default())?);
        let cache_path = if cli.no_cache { None } else { cache_dir(cli).map(|d| d.join(CACHE_FILE)) };
        Ok(Context { consts, cache, cache_path, loaded: 0 })
    }

    fn load_cache(&mut self) -> Result<()> {
        if let Some(p) = &self.cache_path {
            if p.exists() {
                self.loaded = self.cache.load(p).map_err(|e| match e {
                    Error::Cache(m) => Error::Cache(format!("{m}; run `rydblock cache --rebuild`")),
                    e => e,
                })?;
            }
        }
        Ok(())
    }

    fn save_cache(&self) {
        let Some(p) = &self.cache_path else { return };
        if self.cache.stats().entries == self.loaded {
            return;
        }
        let saved = p.parent().map_or(Ok(()), std::fs::create_dir_all).map_err(Error::from).and_then(|_| self.cache.save(p));
        if let Err(e) = saved {
            eprintln!("warning: could not save cache to {}: {e}", p.display());
        }
    }

    fn system(&mut self, n: u32) -> Result<PairSystem> {
        self.load_cache()?;
        let system = PairSystem::forster(n, self.cache.clone(), self.consts.clone())?;
        self.save_cache();
        Ok(system)
    }

    fn manifest(&self, command: &str, config: serde_json::Value) -> RunManifest {
        let mut m = RunManifest::new(command, std::env::args().skip(1).collect(), config);
        m.inputs.insert("defect_table".into(), self.cache.table_hash().to_string());
        m.inputs.insert("constants".into(), self.consts.source_hash.clone());
        m.inputs.insert("radial_grid".into(), self.cache.grid_hash().to_string());
        m
    }
}

fn cache_dir(cli: &Cli) -> Option<PathBuf> {
    cli.cache_dir.clone().or_else(|| {
        std::env::var_os("XDG_CACHE_HOME")
            .map(PathBuf::from)
            .or_else(|| std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".cache")))
            .map(|d| d.join("rydblock"))
    })
}

fn finish(mut manifest: RunManifest, outputs: &[&Path], start: Instant) -> Result<()> {
    for o in outputs {
        manifest.record_output(o)?;
    }
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    let path = RunManifest::path_for(outputs[0]);
    manifest.write(&path)?;
    eprintln!("wrote {} (manifest {})", outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "), path.display());
    Ok(())
}

fn grid(first: f64, last: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(last >= first) {
        return Err(Error::Config(format!("bad grid {first}..{last} step {step}")));
    }
    let count = ((last - first) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| first + step * i as f64).collect())
}

fn parse_l(text: &str) -> Result<u32> {
    if let Ok(l) = text.parse() {
        return Ok(l);
    }
    match text {
        "s" => Ok(0),
        "p" => Ok(1),
        "d" => Ok(2),
        "f" => Ok(3),
        _ => Err(Error::Config(format!("unknown orbital `{text}`"))),
    }
}

fn cmd_energy(cli: &Cli, args: &EnergyArgs) -> Result<()> {
    let ctx = Context::new(cli, args.hydrogenic)?;
    let table = ctx.cache.table();
    let mut levels = args.levels.clone();
    if let Some(range) = &args.range {
        let (a, b) = range.split_once('-').ok_or_else(|| Error::Config(format!("range `{range}` is not FIRST-LAST")))?;
        let (a, b): (u32, u32) = (
            a.parse().map_err(|_| Error::Config(format!("bad range start `{a}`")))?,
            b.parse().map_err(|_| Error::Config(format!("bad range end `{b}`")))?,
        );
        for n in a..=b {
            for l in 1..=3 {
                for j in Shell::new(n, l)?.js() {
                    levels.push(Level { n, l, j });
                }
            }
        }
    }
    if let Some(n) = args.n {
        let ls = match &args.l {
            Some(l) => vec![parse_l(l)?],
            None => (0..4.min(n)).collect(),
        };
        for l in ls {
            let shell = Shell::new(n, l)?;
            match &args.j {
                Some(j) => levels.push(format!("{n}{}{j}", "spdf".chars().nth(l as usize).unwrap_or('?')).parse()?),
                None => levels.extend(shell.js().into_iter().map(|j| Level { n, l, j })),
            }
        }
    }
    if levels.is_empty() {
        return Err(Error::Config("give --n, --level or --range".into()));
    }
    println!("{:<10} {:>12} {:>14} {:>20}", "level", "defect", "n*", "energy/MHz");
    for level in &levels {
        let e = level_energy(*level, table, &ctx.consts)?;
        println!("{:<10} {:>12.8} {:>14.8} {:>20.6}", level.to_string(), table.defect(*level)?, table.effective_n(*level)?, e);
    }
    for pair in levels.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if a.n == b.n && a.l == b.l && a.l > 0 && a.j != b.j {
            let split = level_energy(b, table, &ctx.consts)? - level_energy(a, table, &ctx.consts)?;
            println!("fine structure {a} -> {b}: {split:.4} MHz");
        }
    }
    Ok(())
}

fn cmd_pair_spectrum(cli: &Cli, args: &PairSpectrumArgs) -> Result<()> {
    let start = Instant::now();
    let mut ctx = Context::new(cli, false)?;
    let Channels::Forster = args.channels;
    let system = ctx.system(args.n)?;
    let dys = grid(args.dy_min, args.dy_max, args.dy_step)?;
    let scan = system.scan_offsets(args.z, &dys, args.field)?;
    ctx.save_cache();
    let keep: Vec<usize> = (0..scan.curves())
        .filter(|&c| scan.overlaps.iter().map(|o| o[c]).fold(0.0, f64::max) >= args.min_kappa2)
        .collect();
    let mut table = Table::new(
        format!("rydblock pair-spectrum n={} z={} um field={} mT", args.n, args.z, args.field),
        vec![("dy_um", "um"), ("r_um", "um"), ("curve", ""), ("energy_mhz", "MHz"), ("kappa2", ""), ("dimension", "")],
    );
    for (p, dy) in scan.offsets.iter().enumerate() {
        for &c in &keep {
            table.push(vec![
                num(*dy),
                num(scan.geometries[p].distance),
                c.to_string(),
                num(scan.energies[p][c]),
                num(scan.overlaps[p][c]),
                system.dim().to_string(),
            ]);
        }
    }
    table.write(&args.out)?;
    println!("{} points x {} curves (dimension {})", dys.len(), keep.len(), system.dim());
    for c in scan.zero_crossings(5.0).into_iter().filter(|c| c.overlap > 1e-12) {
        println!("zero crossing: curve {} at dy = {:.3} um, kappa^2 = {:.3e}", c.curve, c.offset, c.overlap);
    }
    let config = json!({
        "n": args.n, "z_um": args.z, "dy_min_um": args.dy_min, "dy_max_um": args.dy_max,
        "dy_step_um": args.dy_step, "field_mt": args.field, "channels": "forster", "min_kappa2": args.min_kappa2,
    });
    finish(ctx.manifest("pair-spectrum", config), &[&args.out], start)
}

fn cmd_blockade(cli: &Cli, args: &BlockadeArgs) -> Result<()> {
    let start = Instant::now();
    let mut ctx = Context::new(cli, false)?;
    let system = ctx.system(args.n)?;
    let dy_max = args.dy_max.unwrap_or(6.0 * std::f64::consts::SQRT_2 * args.sigma_y).max(0.0);
    let dys = grid(0.0, dy_max, args.dy_step)?;
    let options = AveragingOptions { sigma_z: args.sigma_z, ..AveragingOptions::default() };
    let mut table = Table::new(
        format!("rydblock blockade n={} z={} um omega={} MHz", args.n, args.z, args.omega),
        vec![("field_mt", "mT"), ("dy_um", "um"), ("p2", ""), ("shift_mhz", "MHz")],
    );
    let mut summary = Vec::new();
    for &field in &args.field {
        for s in blockade_scan(&system, args.z, &dys, field, args.omega)? {
            table.push(vec![num(field), num(s.offset), num(s.p2), s.shift.map(num).unwrap_or_default()]);
        }
        let curve = averaged_blockade(&system, args.z, args.sigma_y, field, args.omega, &options)?;
        println!("B = {field} mT: mean P2 = {:.5}, blockade shift = {:.4} MHz", curve.mean_p2, curve.mean_shift);
        summary.push(json!({
            "field_mt": field, "mean_p2": curve.mean_p2, "mean_shift_mhz": curve.mean_shift,
            "refinements": curve.refinements,
        }));
    }
    ctx.save_cache();
    table.write(&args.out)?;
    let json_path = args.out.with_extension("json");
    let text = serde_json::to_string_pretty(&json!({
        "z_um": args.z, "sigma_y_um": args.sigma_y, "sigma_z_um": args.sigma_z, "omega_mhz": args.omega,
        "fields": summary,
    }))
    .map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(&json_path, text + "\n")?;
    let config = json!({
        "n": args.n, "z_um": args.z, "sigma_y_um": args.sigma_y, "sigma_z_um": args.sigma_z,
        "field_mt": args.field, "omega_mhz": args.omega, "dy_max_um": dy_max, "dy_step_um": args.dy_step,
        "averaging": options,
    });
    finish(ctx.manifest("blockade", config), &[&args.out, &json_path], start)
}

fn cmd_simulate(cli: &Cli, args: &SimulateArgs) -> Result<()> {
    let start = Instant::now();
    let mut ctx = Context::new(cli, false)?;
    let mut config = match &args.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = args.shots {
        config.shots = s;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    config.validate()?;
    let blockade = match (args.sequence, config.blockade_shift_mhz) {
        (SequenceKind::Fig3, None) => BlockadeModel::tabulate(&ctx.system(args.n)?, &config, args.blockade_step)?,
        (_, shift) => BlockadeModel::Fixed(shift.unwrap_or(0.0)),
    };
    let ts = grid(0.0, args.t_max, args.t_step)?;
    let result = run_experiment(&config, args.sequence, &ts, &blockade, &ctx.consts)?;
    let mut table = Table::new(
        format!("rydblock simulate {} shots={} seed={}", args.sequence, config.shots, config.seed),
        vec![
            ("t_us", "us"),
            ("site", ""),
            ("retention", ""),
            ("stderr", ""),
            ("rydberg_population", ""),
            ("double_excitation", ""),
            ("shots", ""),
            ("kept", ""),
        ],
    );
    for row in &result.rows {
        let ti = ts.iter().position(|t| *t == row.t_us).unwrap_or(0);
        table.push(vec![
            num(row.t_us),
            row.site.to_string(),
            num(row.mean_retention),
            num(row.stderr),
            num(row.mean_rydberg),
            num(result.mean_double_excitation[ti]),
            row.n_shots.to_string(),
            row.n_postselected.to_string(),
        ]);
    }
    table.write(&args.out)?;
    println!("{} pulse lengths x {} shots ({})", ts.len(), config.shots, args.sequence);
    let mut manifest = ctx.manifest(
        "simulate",
        json!({
            "sequence": args.sequence, "t_max_us": args.t_max, "t_step_us": args.t_step,
            "blockade_step_um": args.blockade_step, "n": args.n, "experiment": config,
        }),
    );
    manifest.seed = Some(config.seed);
    finish(manifest, &[&args.out], start)
}

fn cmd_fit(cli: &Cli, args: &FitArgs) -> Result<()> {
    let start = Instant::now();
    let (header, mut rows) = read_csv(&args.input)?;
    if let Some(i) = header.iter().position(|h| h == "site") {
        rows.retain(|r| r.get(i).map(String::as_str) == Some(args.site.as_str()));
    }
    let t = float_column(&header, &rows, &args.t_column)?;
    let y = float_column(&header, &rows, &args.y_column)?;
    let fit = fit_damped_rabi(&t, &y)?;
    let text = serde_json::to_string_pretty(&json!({
        "a": fit.a,
        "tau_us": if fit.tau.is_finite() { json!(fit.tau) } else { json!(null) },
        "omega_mhz": fit.omega,
        "residual": fit.residual,
        "points": t.len(),
    }))
    .map_err(|e| Error::Parse(e.to_string()))?;
    match &args.out {
        Some(out) => {
            std::fs::write(out, text + "\n")?;
            let ctx = Context::new(cli, false)?;
            let mut manifest = ctx.manifest(
                "fit",
                json!({ "input": args.input, "t_column": args.t_column, "y_column": args.y_column, "site": args.site }),
            );
            manifest.inputs.insert("data".into(), rydberg_blockade::io::sha256_hex(&std::fs::read(&args.input)?));
            finish(manifest, &[out], start)?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn cmd_cache(cli: &Cli, args: &CacheArgs) -> Result<()> {
    let ctx = Context::new(cli, false)?;
    let path = ctx
        .cache_path
        .clone()
        .ok_or_else(|| Error::Config("no cache directory (set RYDBLOCK_CACHE_DIR or --cache-dir)".into()))?;
    if !(args.rebuild || args.stats || args.clear) {
        return Err(Error::Config("give --rebuild, --stats or --clear".into()));
    }
    if args.clear && path.exists() {
        std::fs::remove_file(&path)?;
        println!("removed {}", path.display());
    }
    if args.rebuild {
        let levels = rydberg_blockade::pairint::PairBasis::forster(args.n)?.levels();
        let count = ctx.cache.populate(&levels)?;
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        ctx.cache.save(&path)?;
        println!("rebuilt {}: {count} radial integrals over {} levels of the n = {} basis", path.display(), levels.len(), args.n);
    }
    if args.stats {
        let entries = if path.exists() { ctx.cache.load(&path)? } else { 0 };
        println!("cache file: {}", path.display());
        println!("entries: {entries}");
        println!("defect table: {}", ctx.cache.table_hash());
        println!("radial grid: {}", ctx.cache.grid_hash());
    }
    Ok(())
}

fn cmd_selftest(cli: &Cli, args: &SelftestArgs) -> Result<bool> {
    let mut ctx = Context::new(cli, false)?;
    ctx.load_cache()?;
    let suite = Suite::with_cache(ctx.cache.clone())?;
    let ids: Vec<u32> = if args.only.is_empty() { (1..=Suite::COUNT).collect() } else { args.only.clone() };
    let mut all = true;
    for id in ids {
        let r = suite.run(id);
        println!("{r}");
        all &= r.passed;
    }
    ctx.save_cache();
    Ok(all)
}

fn run(cli: &Cli) -> Result<u8> {
    if let Some(path) = &cli.from_manifest {
        if cli.command.is_some() {
            return Err(Error::Config("--from-manifest replaces the command; give one or the other".into()));
        }
        let manifest = RunManifest::read(path)?;
        let mut argv = vec!["rydblock".to_string()];
        argv.extend(manifest.args.iter().cloned());
        let replay = Cli::try_parse_from(&argv).map_err(|e| Error::Config(format!("manifest arguments: {e}")))?;
        if replay.from_manifest.is_some() {
            return Err(Error::Config("manifest refers to another manifest".into()));
        }
        let code = run(&replay)?;
        let bad = manifest.mismatched_outputs()?;
        if bad.is_empty() {
            println!("replay reproduced {} output file(s)", manifest.outputs.len());
        } else {
            for b in &bad {
                eprintln!("output differs from manifest: {}", b.display());
            }
            return Err(Error::Invariant("replay did not reproduce the recorded outputs".into()));
        }
        return Ok(code);
    }
    let Some(command) = &cli.command else {
        return Err(Error::Config("no command given (see --help)".into()));
    };
    match command {
        Command::Energy(a) => cmd_energy(cli, a)?,
        Command::PairSpectrum(a) => cmd_pair_spectrum(cli, a)?,
        Command::Blockade(a) => cmd_blockade(cli, a)?,
        Command::Simulate(a) => cmd_simulate(cli, a)?,
        Command::Fit(a) => cmd_fit(cli, a)?,
        Command::Cache(a) => cmd_cache(cli, a)?,
        Command::Selftest(a) => {
            if !cmd_selftest(cli, a)? {
                return Ok(4);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn defaults_match_the_experiment() {
        let cli = Cli::try_parse_from(["rydblock", "blockade"]).unwrap();
        let Some(Command::Blockade(b)) = cli.command else { panic!("blockade") };
        assert_eq!((b.z, b.sigma_y, b.omega), (11.0, 2.6, 0.51));
        assert_eq!(b.field, vec![0.0, 1.15]);
    }
}
