use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fermion_magic::format_f64;
use fermion_magic::gaussian::clamp_events;
use fermion_magic::gge::{gge_sre, GgeSpec};
use fermion_magic::monitoring::{run_ensemble, Protocol, TrajectoryParams};
use fermion_magic::scaling::{
    fit_scaling, log_coefficient, relaxation_profile, time_average, Series, SeriesPoint, SlopeWindow, StationaryValue,
    Window,
};
use fermion_magic::validation::{dense_suite, Check};

use crate::config::{AnalyzeConfig, GgeConfig, RunConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::{run_seed, RunEntry, RunManifest};
use crate::output::{self, ENSEMBLE_HEADER};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Simulation {
    Quench,
    Monitor,
    NoClick,
}

impl Simulation {
    pub fn name(self) -> &'static str {
        match self {
            Simulation::Quench => "quench",
            Simulation::Monitor => "monitor",
            Simulation::NoClick => "noclick",
        }
    }

    fn check(self, config: &RunConfig) -> CliResult<()> {
        let projective = matches!(config.protocol, Protocol::HoppingProjective | Protocol::IsingProjective);
        match self {
            Simulation::Quench => {
                if !projective {
                    return Err(CliError::config(
                        "quench: protocol must be hopping-projective or ising-projective",
                    ));
                }
                if config.gammas.iter().any(|&g| g != 0.0) {
                    return Err(CliError::config("gammas: quench runs unmonitored dynamics, use [0]"));
                }
                if config.n_traj != 1 {
                    return Err(CliError::config("n_traj: quench dynamics is deterministic, use 1"));
                }
            }
            Simulation::Monitor => {
                if !projective {
                    return Err(CliError::config(
                        "monitor: protocol must be hopping-projective or ising-projective",
                    ));
                }
                if !config.gammas.iter().any(|&g| g > 0.0) {
                    return Err(CliError::config("gammas: monitor needs at least one positive rate"));
                }
            }
            Simulation::NoClick => {
                if config.protocol != Protocol::IsingNoclick {
                    return Err(CliError::config("noclick: protocol must be ising-noclick"));
                }
            }
        }
        Ok(())
    }
}

fn params_for(config: &RunConfig, sites: usize, gamma: f64) -> TrajectoryParams {
    let mut p = TrajectoryParams::new(config.protocol, config.initial_state.occupations(sites));
    p.rate = gamma;
    p.dt = config.dt;
    p.coupling = config.coupling;
    p.field = config.field;
    p.snapshot_times = config.schedule.times();
    p.alphas = config.alphas.clone();
    p.samples = config.samples;
    p.subsystem = config.subsystem;
    p.refresh_every = config.refresh_every;
    p
}

/// Fits and log-coefficient curves for every `(alpha, gamma)` group that
/// has enough sizes; groups that do not are reported in `warnings`.
fn fit_groups(
    values: &[StationaryValue],
    inverse: bool,
    warnings: &mut Vec<String>,
) -> (
    Vec<fermion_magic::scaling::ScalingFit>,
    Vec<fermion_magic::scaling::LogCoefficient>,
) {
    let mut groups: BTreeMap<(u64, u64), Vec<StationaryValue>> = BTreeMap::new();
    for v in values {
        groups
            .entry((v.alpha.to_bits(), v.gamma.to_bits()))
            .or_default()
            .push(*v);
    }
    let mut fits = Vec::new();
    let mut curve = Vec::new();
    for group in groups.values() {
        let (alpha, gamma) = (group[0].alpha, group[0].gamma);
        match fit_scaling(group, inverse) {
            Ok(f) => fits.push(f),
            Err(e) => warnings.push(format!("no scaling fit for alpha={alpha}, gamma={gamma}: {e}")),
        }
        match log_coefficient(group) {
            Ok(c) => curve.push(c),
            Err(e) => warnings.push(format!("no log coefficient for alpha={alpha}, gamma={gamma}: {e}")),
        }
    }
    fits.sort_by(|x, y| x.alpha.total_cmp(&y.alpha).then(x.gamma.total_cmp(&y.gamma)));
    curve.sort_by(|x, y| x.alpha.total_cmp(&y.alpha).then(x.gamma.total_cmp(&y.gamma)));
    (fits, curve)
}

fn write_fit_tables(
    dir: &Path,
    values: &[StationaryValue],
    inverse: bool,
    warnings: &mut Vec<String>,
) -> CliResult<()> {
    output::write_stationary(&dir.join("stationary.csv"), values)?;
    let (fits, curve) = fit_groups(values, inverse, warnings);
    output::write_fits(&dir.join("fits.csv"), &fits)?;
    output::write_log_coefficients(&dir.join("log_coefficients.csv"), &curve)
}

/// Runs `quench`, `monitor` or `noclick` and returns the run directory.
pub fn run_simulation(kind: Simulation, config: RunConfig, root: &Path) -> CliResult<PathBuf> {
    let config = config.resolve();
    config.validate()?;
    kind.check(&config)?;
    let start = Instant::now();
    let clamps_before = clamp_events();
    let echo = serde_json::to_value(&config)?;
    let (run_id, dir) = output::create_run_dir(root, &output::config_hash(&(kind.name(), &config))?)?;
    let mut manifest = RunManifest::new(kind.name(), &run_id, echo);
    let window = config.window.expect("resolved");
    if config.save_trajectories {
        fs::create_dir_all(dir.join("trajectories")).map_err(|e| CliError::io("create trajectories directory", e))?;
    }
    let mut stationary = Vec::new();
    for &sites in &config.sizes {
        for &gamma in &config.gammas {
            let params = params_for(&config, sites, gamma);
            let seed = run_seed(config.master_seed, sites, gamma);
            let result = run_ensemble(&params, config.n_traj, seed)?;
            let label = output::gamma_label(gamma);
            output::write_ensemble(&dir.join(format!("ensemble_{sites}_{label}.csv")), &result.series)?;
            if config.save_trajectories {
                output::write_trajectories(
                    &dir.join("trajectories").join(format!("L{sites}_g{label}.jsonl")),
                    &result.records,
                )?;
            }
            for e in &result.excluded {
                manifest.warnings.push(format!(
                    "L={sites} gamma={gamma}: trajectory {} excluded after retry: {}",
                    e.trajectory, e.error
                ));
            }
            for &t in &result.retried {
                manifest
                    .warnings
                    .push(format!("L={sites} gamma={gamma}: trajectory {t} retried"));
            }
            let span = window.at(result.series.sites);
            for &alpha in &config.alphas {
                match result.stationary(alpha, span) {
                    Ok(v) => stationary.push(v),
                    Err(e) => manifest.warnings.push(format!(
                        "L={sites} gamma={gamma} alpha={alpha}: no stationary value: {e}"
                    )),
                }
            }
            manifest.runs.push(RunEntry {
                sites,
                gamma,
                run_seed: seed,
                n_traj: config.n_traj,
                completed: result.records.len(),
                retried: result.retried.clone(),
                excluded: result.excluded.clone(),
            });
        }
    }
    let mut warnings = Vec::new();
    write_fit_tables(&dir, &stationary, false, &mut warnings)?;
    manifest.warnings.extend(warnings);
    let clamps = clamp_events() - clamps_before;
    if clamps > 0 {
        manifest
            .warnings
            .push(format!("{clamps} probabilities clamped into [0, 1]"));
    }
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    output::write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(dir)
}

/// Closed-form stationary subsystem entropies on a grid.
pub fn run_gge(config: GgeConfig, root: &Path) -> CliResult<PathBuf> {
    config.validate()?;
    let start = Instant::now();
    let (run_id, dir) = output::create_run_dir(root, &output::config_hash(&("gge", &config))?)?;
    let mut manifest = RunManifest::new("gge", &run_id, serde_json::to_value(&config)?);
    let path = dir.join("gge.csv");
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&path)?;
    w.write_record(["filling", "subsystem", "alpha", "value"])?;
    for &n in &config.fillings {
        for &l in &config.subsystems {
            let spec = GgeSpec::new(n, l)?;
            for &alpha in &config.alphas {
                w.write_record([
                    format_f64(n),
                    l.to_string(),
                    format_f64(alpha),
                    format_f64(gge_sre(&spec, alpha)?),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| CliError::io(path.display().to_string(), e))?;
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    output::write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(dir)
}

fn ensemble_files(inputs: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let entries = fs::read_dir(input).map_err(|e| CliError::io(format!("read {}", input.display()), e))?;
            let mut found: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    p.file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.starts_with("ensemble_") && n.ends_with(".csv"))
                })
                .collect();
            found.sort();
            files.extend(found);
        } else if input.is_file() {
            files.push(input.clone());
        } else {
            return Err(CliError::config(format!("inputs: {} does not exist", input.display())));
        }
    }
    if files.is_empty() {
        return Err(CliError::config("inputs: no ensemble CSV files found"));
    }
    Ok(files)
}

fn schema_error(path: &Path, message: String) -> CliError {
    CliError::Schema {
        path: path.to_path_buf(),
        message,
    }
}

/// Reads one ensemble CSV into series keyed by `(sites, gamma, alpha)`.
fn read_ensemble(path: &Path, into: &mut BTreeMap<(usize, u64, u64), Series>) -> CliResult<()> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != ENSEMBLE_HEADER {
        let missing: Vec<&str> = ENSEMBLE_HEADER
            .iter()
            .filter(|c| !header.iter().any(|h| h == *c))
            .copied()
            .collect();
        let unexpected: Vec<&str> = header
            .iter()
            .filter(|h| !ENSEMBLE_HEADER.contains(&h.as_str()))
            .map(String::as_str)
            .collect();
        return Err(schema_error(
            path,
            format!("expected columns {ENSEMBLE_HEADER:?}; missing {missing:?}, unexpected {unexpected:?}"),
        ));
    }
    for (line, row) in r.records().enumerate() {
        let row = row?;
        let field = |i: usize| -> CliResult<f64> {
            row[i].parse::<f64>().map_err(|_| {
                schema_error(
                    path,
                    format!(
                        "row {}: column {} is not a number: {:?}",
                        line + 2,
                        ENSEMBLE_HEADER[i],
                        &row[i]
                    ),
                )
            })
        };
        let sites = row[0]
            .parse::<usize>()
            .map_err(|_| schema_error(path, format!("row {}: column sites is not an integer", line + 2)))?;
        let (gamma, alpha) = (field(1)?, field(2)?);
        let point = SeriesPoint {
            time: field(3)?,
            value: field(4)?,
            error: field(5)?,
        };
        into.entry((sites, gamma.to_bits(), alpha.to_bits()))
            .or_insert_with(|| Series {
                sites,
                alpha,
                gamma,
                points: Vec::new(),
            })
            .points
            .push(point);
    }
    Ok(())
}

/// Stationary values, fits, log coefficients and relaxation slopes from
/// ensemble CSV files.
pub fn run_analyze(config: AnalyzeConfig, root: &Path) -> CliResult<PathBuf> {
    config.validate()?;
    let start = Instant::now();
    let files = ensemble_files(&config.inputs)?;
    let mut series = BTreeMap::new();
    for f in &files {
        read_ensemble(f, &mut series)?;
    }
    let (run_id, dir) = output::create_run_dir(root, &output::config_hash(&("analyze", &config))?)?;
    let mut manifest = RunManifest::new("analyze", &run_id, serde_json::to_value(&config)?);
    let mut stationary = Vec::new();
    for s in series.values() {
        match time_average(s, config.window.at(s.sites)) {
            Ok(v) => stationary.push(v),
            Err(e) => manifest
                .warnings
                .push(format!("L={} gamma={} alpha={}: {e}", s.sites, s.gamma, s.alpha)),
        }
    }
    let mut warnings = Vec::new();
    write_fit_tables(&dir, &stationary, config.inverse_term, &mut warnings)?;
    manifest.warnings.extend(warnings);
    if let Some(spec) = &config.relaxation {
        let path = dir.join("relaxation.csv");
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)?;
        w.write_record([
            "sites",
            "gamma",
            "alpha",
            "kind",
            "t_lo",
            "t_hi",
            "slope",
            "sigma_slope",
            "points",
            "excluded",
        ])?;
        for (s, v) in series.values().zip(&stationary) {
            let windows: Vec<SlopeWindow> = spec
                .slopes
                .iter()
                .map(|sl| SlopeWindow {
                    kind: sl.kind,
                    window: Window {
                        lo: sl.lo * s.sites as f64,
                        hi: sl.hi * s.sites as f64,
                    },
                })
                .collect();
            let profile = match relaxation_profile(s, v, spec.approach, &windows) {
                Ok(p) => p,
                Err(e) => {
                    manifest.warnings.push(format!(
                        "L={} gamma={} alpha={}: no relaxation profile: {e}",
                        s.sites, s.gamma, s.alpha
                    ));
                    continue;
                }
            };
            for sl in &profile.slopes {
                let kind = serde_json::to_value(sl.kind)?;
                w.write_record([
                    s.sites.to_string(),
                    format_f64(s.gamma),
                    format_f64(s.alpha),
                    kind.as_str().unwrap_or_default().to_string(),
                    format_f64(sl.window.lo),
                    format_f64(sl.window.hi),
                    format_f64(sl.slope.value),
                    format_f64(sl.slope.error),
                    sl.points.to_string(),
                    profile.excluded.to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| CliError::io(path.display().to_string(), e))?;
    }
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    output::write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(dir)
}

/// Dense-oracle validation suite; any failed check is a numerical failure.
pub fn run_oracle(seed: u64, root: &Path) -> CliResult<(PathBuf, Vec<Check>)> {
    let start = Instant::now();
    let (run_id, dir) = output::create_run_dir(root, &output::config_hash(&("oracle", seed))?)?;
    let mut manifest = RunManifest::new("oracle", &run_id, serde_json::json!({ "master_seed": seed }));
    let checks = dense_suite(seed)?;
    let path = dir.join("oracle.csv");
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&path)?;
    w.write_record(["check", "max_error", "tolerance", "comparisons", "passed"])?;
    for c in &checks {
        w.write_record([
            c.name.to_string(),
            format_f64(c.max_error),
            format_f64(c.tolerance),
            c.comparisons.to_string(),
            c.passed().to_string(),
        ])?;
        if !c.passed() {
            manifest.warnings.push(format!("{} failed: {:e}", c.name, c.max_error));
        }
    }
    w.flush().map_err(|e| CliError::io(path.display().to_string(), e))?;
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    output::write_json(&dir.join("manifest.json"), &manifest)?;
    Ok((dir, checks))
}
