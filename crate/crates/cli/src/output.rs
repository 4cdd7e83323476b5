use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use fermion_magic::format_f64;
use fermion_magic::monitoring::{EnsembleSeries, TrajectoryRecord};
use fermion_magic::scaling::{LogCoefficient, ScalingFit, StationaryValue};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Environment variable naming the default output root.
pub const OUTPUT_ENV: &str = "FMAGIC_OUT";

pub const ENSEMBLE_HEADER: [&str; 7] = ["sites", "gamma", "alpha", "t", "mean", "stderr", "n_traj"];

/// `--out`, then the config, then `$FMAGIC_OUT`, then `./runs`.
pub fn output_root(flag: Option<&Path>, config: Option<&Path>) -> PathBuf {
    flag.or(config)
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// First 12 hex digits of the SHA-256 of the canonical config JSON.
pub fn config_hash<T: Serialize>(config: &T) -> CliResult<String> {
    let canonical = serde_json::to_vec(config)?;
    let digest = Sha256::digest(&canonical);
    Ok(digest.iter().take(6).map(|b| format!("{b:02x}")).collect())
}

/// Creates `<root>/<unix-seconds>-<hash>`, with a numeric suffix on collision.
pub fn create_run_dir(root: &Path, hash: &str) -> CliResult<(String, PathBuf)> {
    fs::create_dir_all(root).map_err(|e| CliError::io(format!("create {}", root.display()), e))?;
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    for attempt in 0.. {
        let id = if attempt == 0 {
            format!("{stamp}-{hash}")
        } else {
            format!("{stamp}-{hash}-{attempt}")
        };
        let dir = root.join(&id);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok((id, dir)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(CliError::io(format!("create {}", dir.display()), e)),
        }
    }
    unreachable!()
}

/// Gamma as it appears in file names: shortest round-trip decimal.
pub fn gamma_label(gamma: f64) -> String {
    format!("{gamma}")
}

fn writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?)
}

pub fn write_ensemble(path: &Path, series: &EnsembleSeries) -> CliResult<()> {
    let mut w = writer(path)?;
    w.write_record(ENSEMBLE_HEADER)?;
    for (a, &alpha) in series.alphas.iter().enumerate() {
        for (t, &time) in series.times.iter().enumerate() {
            let err = if series.std_error[a][t].is_nan() {
                series.sampling_error[a][t]
            } else {
                series.std_error[a][t]
            };
            w.write_record([
                series.sites.to_string(),
                format_f64(series.gamma),
                format_f64(alpha),
                format_f64(time),
                format_f64(series.mean[a][t]),
                format_f64(err),
                series.n_traj.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| CliError::io(path.display().to_string(), e))?;
    Ok(())
}

pub fn write_stationary(path: &Path, values: &[StationaryValue]) -> CliResult<()> {
    let mut w = writer(path)?;
    w.write_record([
        "sites",
        "gamma",
        "alpha",
        "window_lo",
        "window_hi",
        "mean",
        "error",
        "snapshots",
    ])?;
    for v in values {
        w.write_record([
            v.sites.to_string(),
            format_f64(v.gamma),
            format_f64(v.alpha),
            format_f64(v.window.lo),
            format_f64(v.window.hi),
            format_f64(v.mean),
            format_f64(v.error),
            v.snapshots.to_string(),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(path.display().to_string(), e))?;
    Ok(())
}

pub fn write_fits(path: &Path, fits: &[ScalingFit]) -> CliResult<()> {
    let mut w = writer(path)?;
    w.write_record([
        "alpha", "gamma", "a", "b", "c", "sigma_a", "sigma_b", "sigma_c", "d", "sigma_d", "l_min", "l_max",
    ])?;
    for f in fits {
        let (d, sd) = f.d.map_or((String::new(), String::new()), |d| {
            (format_f64(d.value), format_f64(d.error))
        });
        w.write_record([
            format_f64(f.alpha),
            format_f64(f.gamma),
            format_f64(f.a.value),
            format_f64(f.b.value),
            format_f64(f.c.value),
            format_f64(f.a.error),
            format_f64(f.b.error),
            format_f64(f.c.error),
            d,
            sd,
            f.l_min.to_string(),
            f.l_max.to_string(),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(path.display().to_string(), e))?;
    Ok(())
}

pub fn write_log_coefficients(path: &Path, curve: &[LogCoefficient]) -> CliResult<()> {
    let mut w = writer(path)?;
    w.write_record(["alpha", "gamma", "b", "sigma_b", "pairs", "zero_compatible"])?;
    for c in curve {
        w.write_record([
            format_f64(c.alpha),
            format_f64(c.gamma),
            format_f64(c.b.value),
            format_f64(c.b.error),
            c.differences.len().to_string(),
            c.zero_compatible.to_string(),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(path.display().to_string(), e))?;
    Ok(())
}

pub fn write_trajectories(path: &Path, records: &[TrajectoryRecord]) -> CliResult<()> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    let mut out = std::io::BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")
            .map_err(|e| CliError::io(path.display().to_string(), e))?;
    }
    out.flush().map_err(|e| CliError::io(path.display().to_string(), e))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path.display().to_string(), e))
}
