use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::{run_trajectory, TrajectoryParams, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::sampler::StreamKey;
use crate::scaling::{time_average, Series, SeriesPoint, StationaryValue, Window};

/// Trajectory-averaged entropies. `mean[a][t]` belongs to `alphas[a]` and
/// `times[t]`; errors are taken across trajectories.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSeries {
    pub sites: usize,
    pub gamma: f64,
    pub times: Vec<f64>,
    pub alphas: Vec<f64>,
    pub mean: Vec<Vec<f64>>,
    /// `NaN` when only one trajectory contributed.
    pub std_error: Vec<Vec<f64>>,
    /// Mean of the per-trajectory sampling errors.
    pub sampling_error: Vec<Vec<f64>>,
    pub n_traj: usize,
}

impl EnsembleSeries {
    /// `sites` is the size of the sampled (sub)system.
    pub fn from_records(records: &[TrajectoryRecord], sites: usize, gamma: f64, alphas: &[f64]) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| Error::InvalidParameter("no trajectories to average".into()))?;
        let times: Vec<f64> = first.snapshots.iter().map(|s| s.time).collect();
        let n = records.len() as f64;
        let nt = times.len();
        let mut mean = vec![vec![0.0; nt]; alphas.len()];
        let mut std_error = vec![vec![f64::NAN; nt]; alphas.len()];
        let mut sampling_error = vec![vec![0.0; nt]; alphas.len()];
        for a in 0..alphas.len() {
            for t in 0..nt {
                let vals: Vec<f64> = records.iter().map(|r| r.snapshots[t].estimates[a].value).collect();
                let m = vals.iter().sum::<f64>() / n;
                mean[a][t] = m;
                sampling_error[a][t] = records
                    .iter()
                    .map(|r| r.snapshots[t].estimates[a].std_error)
                    .sum::<f64>()
                    / n;
                if records.len() > 1 {
                    let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
                    std_error[a][t] = (var / n).sqrt();
                }
            }
        }
        Ok(EnsembleSeries {
            sites,
            gamma,
            times,
            alphas: alphas.to_vec(),
            mean,
            std_error,
            sampling_error,
            n_traj: records.len(),
        })
    }

    /// Time series for one Renyi index. The error is the cross-trajectory
    /// error, or the sampling error for a single trajectory.
    pub fn series(&self, alpha: f64) -> Option<Series> {
        let a = self.alphas.iter().position(|&x| x == alpha)?;
        let points = self
            .times
            .iter()
            .enumerate()
            .map(|(t, &time)| {
                let err = if self.std_error[a][t].is_nan() {
                    self.sampling_error[a][t]
                } else {
                    self.std_error[a][t]
                };
                SeriesPoint {
                    time,
                    value: self.mean[a][t],
                    error: err,
                }
            })
            .collect();
        Some(Series {
            sites: self.sites,
            alpha,
            gamma: self.gamma,
            points,
        })
    }
}

/// A trajectory that failed twice and was left out of the average.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcludedTrajectory {
    pub trajectory: u64,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleResult {
    pub series: EnsembleSeries,
    pub records: Vec<TrajectoryRecord>,
    /// Trajectories that succeeded only on retry.
    pub retried: Vec<u64>,
    pub excluded: Vec<ExcludedTrajectory>,
}

impl EnsembleResult {
    /// Stationary value from the trajectory records: each trajectory is
    /// averaged over `window`, and the error is the standard error of those
    /// averages across trajectories. A single trajectory falls back to
    /// [`time_average`] of its series.
    pub fn stationary(&self, alpha: f64, window: Window) -> Result<StationaryValue> {
        let series = self.series.series(alpha).ok_or(Error::InvalidIndex(alpha))?;
        if self.records.len() < 2 {
            return time_average(&series, window);
        }
        let a = self.series.alphas.iter().position(|&x| x == alpha).unwrap();
        let inside: Vec<usize> = self
            .series
            .times
            .iter()
            .enumerate()
            .filter_map(|(i, &t)| window.contains(t).then_some(i))
            .collect();
        if inside.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "no snapshot lies in [{}, {}]",
                window.lo, window.hi
            )));
        }
        let per_trajectory: Vec<f64> = self
            .records
            .iter()
            .map(|r| inside.iter().map(|&i| r.snapshots[i].estimates[a].value).sum::<f64>() / inside.len() as f64)
            .collect();
        let n = per_trajectory.len() as f64;
        let mean = per_trajectory.iter().sum::<f64>() / n;
        let var = per_trajectory.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Ok(StationaryValue {
            sites: self.series.sites,
            alpha,
            gamma: self.series.gamma,
            mean,
            error: (var / n).sqrt(),
            window,
            snapshots: inside.len(),
        })
    }
}

/// A finished trajectory and whether it needed a retry, or the final error.
type Attempt = std::result::Result<(TrajectoryRecord, bool), String>;

/// Runs `n_traj` independent trajectories, trajectory `i` on the streams of
/// `StreamKey::new(master_seed).trajectory(i)`. A failing trajectory is
/// retried once on a perturbed stream and excluded if it fails again.
pub fn run_ensemble(params: &TrajectoryParams, n_traj: usize, master_seed: u64) -> Result<EnsembleResult> {
    if n_traj == 0 {
        return Err(Error::InvalidParameter("n_traj must be at least 1".into()));
    }
    params.validate()?;
    let base = StreamKey::new(master_seed);
    let outcomes: Vec<(u64, Attempt)> = (0..n_traj as u64)
        .into_par_iter()
        .map(|i| {
            let key = base.trajectory(i);
            let out = match run_trajectory(params, key) {
                Ok(r) => Ok((r, false)),
                Err(_) => run_trajectory(params, key.attempt(1))
                    .map(|r| (r, true))
                    .map_err(|e| e.to_string()),
            };
            (i, out)
        })
        .collect();
    let mut records = Vec::new();
    let mut retried = Vec::new();
    let mut excluded = Vec::new();
    for (i, out) in outcomes {
        match out {
            Ok((r, again)) => {
                if again {
                    retried.push(i);
                }
                records.push(r);
            }
            Err(error) => excluded.push(ExcludedTrajectory { trajectory: i, error }),
        }
    }
    if records.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "all {n_traj} trajectories failed; first error: {}",
            excluded[0].error
        )));
    }
    let sites = params.subsystem.unwrap_or(params.sites());
    let series = EnsembleSeries::from_records(&records, sites, params.rate, &params.alphas)?;
    Ok(EnsembleResult {
        series,
        records,
        retried,
        excluded,
    })
}
