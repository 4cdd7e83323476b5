use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::measurement::{check_schedule, measurement_sweep, CovarianceState, MeasurementEvent, NumberState};
use crate::dynamics::{
    apply_propagator, evolve_noclick, noclick_generator, Boundary, HoppingModel, IsingModel, ModeMatrix, Parity,
};
use crate::error::{Error, Result};
use crate::gaussian::{covariance_from_number_block, CorrelationMatrix, CovarianceMatrix, GaussianState};
use crate::sampler::{estimate_sres, SamplingOptions, SreEstimate, StreamKey, DEFAULT_REFRESH_EVERY};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    /// Hopping ring with projective occupation measurements.
    HoppingProjective,
    /// Periodic transverse-field Ising chain with projective `Z` measurements.
    IsingProjective,
    /// Open Ising chain under the post-selected no-click evolution.
    IsingNoclick,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::HoppingProjective => "hopping-projective",
            Protocol::IsingProjective => "ising-projective",
            Protocol::IsingNoclick => "ising-noclick",
        }
    }
}

/// Everything needed to run one trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryParams {
    pub protocol: Protocol,
    pub initial: Vec<bool>,
    /// Measurement rate `gamma`.
    pub rate: f64,
    pub dt: f64,
    /// Ising coupling `J` (unused by the hopping protocol).
    pub coupling: f64,
    /// Ising transverse field `h` (unused by the hopping and no-click protocols).
    pub field: f64,
    /// Times at which entropies are estimated; rounded to the step grid.
    pub snapshot_times: Vec<f64>,
    pub alphas: Vec<f64>,
    pub samples: usize,
    /// Estimate entropies of sites `0..l` only.
    pub subsystem: Option<usize>,
    pub refresh_every: usize,
}

impl TrajectoryParams {
    pub fn new(protocol: Protocol, initial: Vec<bool>) -> Self {
        TrajectoryParams {
            protocol,
            initial,
            rate: 0.0,
            dt: 0.05,
            coupling: 1.0,
            field: 0.5,
            snapshot_times: Vec::new(),
            alphas: vec![1.0, 2.0],
            samples: 1000,
            subsystem: None,
            refresh_every: DEFAULT_REFRESH_EVERY,
        }
    }

    pub fn sites(&self) -> usize {
        self.initial.len()
    }

    /// Snapshot step indices, strictly increasing.
    pub fn snapshot_steps(&self) -> Vec<usize> {
        let mut steps: Vec<usize> = self
            .snapshot_times
            .iter()
            .map(|&t| (t / self.dt).round() as usize)
            .collect();
        steps.sort_unstable();
        steps.dedup();
        steps
    }

    pub fn validate(&self) -> Result<()> {
        if self.initial.is_empty() {
            return Err(Error::InvalidSize("need at least one site".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if self.protocol != Protocol::IsingNoclick {
            check_schedule(self.rate, self.dt)?;
        } else if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(Error::InvalidParameter(format!("invalid rate {}", self.rate)));
        }
        if self.snapshot_times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(Error::InvalidParameter(
                "snapshot times must be finite and non-negative".into(),
            ));
        }
        if let Some(l) = self.subsystem {
            if l == 0 || l > self.sites() {
                return Err(Error::InvalidSize(format!(
                    "subsystem {l} outside [1, {}]",
                    self.sites()
                )));
            }
        }
        if self.samples < 2 && !self.alphas.is_empty() {
            return Err(Error::InvalidParameter("need at least 2 samples".into()));
        }
        for &a in &self.alphas {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidIndex(a));
            }
        }
        Ok(())
    }
}

/// Entropy estimates at one snapshot time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: f64,
    pub estimates: Vec<SreEstimate>,
}

/// Result of one trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub trajectory: u64,
    pub master_seed: u64,
    pub attempt: u32,
    pub snapshots: Vec<Snapshot>,
    pub events: Vec<MeasurementEvent>,
}

enum Dynamics {
    Hopping {
        model: HoppingModel,
        state: NumberState,
        step: DMatrix<Complex64>,
    },
    Ising {
        model: IsingModel,
        parity: Parity,
        state: CovarianceState,
        step: DMatrix<f64>,
    },
    NoClick {
        modes: ModeMatrix,
        step: DMatrix<Complex64>,
    },
}

/// Step-by-step evolution of one trajectory.
pub struct TrajectoryEngine {
    params: TrajectoryParams,
    dynamics: Dynamics,
    step_index: usize,
    rng: ChaCha8Rng,
    events: Vec<MeasurementEvent>,
}

impl TrajectoryEngine {
    pub fn new(params: TrajectoryParams, key: StreamKey) -> Result<Self> {
        params.validate()?;
        let l = params.sites();
        let start = CovarianceMatrix::occupation_product(&params.initial)?;
        let dynamics = match params.protocol {
            Protocol::HoppingProjective => {
                let model = HoppingModel::new(l, params.dt)?;
                let number = CorrelationMatrix::from_covariance(&start).number_block();
                Dynamics::Hopping {
                    step: model.step_propagator().clone(),
                    model,
                    state: NumberState(number),
                }
            }
            Protocol::IsingProjective => {
                let model = IsingModel::new(l, params.coupling, params.field, Boundary::Periodic)?;
                let parity = Parity::of(&start);
                let step = model.propagator(params.dt, parity);
                Dynamics::Ising {
                    model,
                    parity,
                    state: CovarianceState(start.into_matrix()),
                    step,
                }
            }
            Protocol::IsingNoclick => {
                let model = IsingModel::new(l, params.coupling, 0.0, Boundary::Open)?;
                let gen = noclick_generator(&model, params.rate)?;
                Dynamics::NoClick {
                    modes: ModeMatrix::from_occupations(&params.initial)?,
                    step: gen.mode_propagator(params.dt),
                }
            }
        };
        Ok(TrajectoryEngine {
            params,
            dynamics,
            step_index: 0,
            rng: key.events().rng(),
            events: Vec::new(),
        })
    }

    pub fn params(&self) -> &TrajectoryParams {
        &self.params
    }

    pub fn time(&self) -> f64 {
        self.step_index as f64 * self.params.dt
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn events(&self) -> &[MeasurementEvent] {
        &self.events
    }

    /// Advances by `dt` and then performs one measurement sweep (none for
    /// the no-click protocol). Returns the events of this step.
    pub fn step(&mut self) -> Result<&[MeasurementEvent]> {
        self.step_index += 1;
        let time = self.time();
        let (rate, dt) = (self.params.rate, self.params.dt);
        let first = self.events.len();
        match &mut self.dynamics {
            Dynamics::Hopping { state, step, .. } => {
                state.0 = apply_propagator(&state.0, step);
                let ev = measurement_sweep(state, rate, dt, time, &mut self.rng)?;
                self.events.extend(ev);
            }
            Dynamics::Ising { state, step, .. } => {
                rotate(&mut state.0, step);
                let ev = measurement_sweep(state, rate, dt, time, &mut self.rng)?;
                self.events.extend(ev);
            }
            Dynamics::NoClick { modes, step } => {
                *modes = evolve_noclick(modes, step, self.step_index)?;
            }
        }
        Ok(&self.events[first..])
    }

    /// Advances by `steps` steps. Unmonitored unitary dynamics is propagated
    /// in a single jump; this matches stepping up to round-off.
    pub fn advance(&mut self, steps: usize) -> Result<()> {
        let unitary = self.params.rate == 0.0;
        let span = steps as f64 * self.params.dt;
        match &mut self.dynamics {
            Dynamics::Hopping { model, state, .. } if unitary => {
                state.0 = apply_propagator(&state.0, &model.propagator(span));
            }
            Dynamics::Ising {
                model, parity, state, ..
            } if unitary => {
                rotate(&mut state.0, &model.propagator(span, *parity));
            }
            _ => {
                for _ in 0..steps {
                    self.step()?;
                }
                return Ok(());
            }
        }
        self.step_index += steps;
        Ok(())
    }

    pub fn covariance(&self) -> CovarianceMatrix {
        match &self.dynamics {
            Dynamics::Hopping { state, .. } => covariance_from_number_block(&state.0),
            Dynamics::Ising { state, .. } => CovarianceMatrix::from_matrix_unchecked(state.0.clone()),
            Dynamics::NoClick { modes, .. } => modes.to_covariance(),
        }
    }

    /// Current state, restricted to the configured subsystem if any.
    pub fn state(&self) -> Result<GaussianState> {
        let full = GaussianState::from_covariance(self.covariance());
        match self.params.subsystem {
            Some(l) => full.subsystem(l),
            None => Ok(full),
        }
    }

    /// `<c_i^dag c_j>` for the hopping protocol.
    pub fn number_block(&self) -> Option<&DMatrix<Complex64>> {
        match &self.dynamics {
            Dynamics::Hopping { state, .. } => Some(&state.0),
            _ => None,
        }
    }

    pub fn into_events(self) -> Vec<MeasurementEvent> {
        self.events
    }
}

fn rotate(g: &mut DMatrix<f64>, r: &DMatrix<f64>) {
    let mut next = r * &*g * r.transpose();
    crate::linalg::antisymmetrize(&mut next);
    *g = next;
}

/// Runs one trajectory to its last snapshot, estimating entropies at every
/// snapshot from streams derived from `key`.
pub fn run_trajectory(params: &TrajectoryParams, key: StreamKey) -> Result<TrajectoryRecord> {
    let steps = params.snapshot_steps();
    let mut engine = TrajectoryEngine::new(params.clone(), key)?;
    let options = SamplingOptions {
        samples: params.samples,
        refresh_every: params.refresh_every,
    };
    let mut snapshots = Vec::with_capacity(steps.len());
    for (idx, &target) in steps.iter().enumerate() {
        engine.advance(target - engine.step_index())?;
        let state = engine.state()?;
        let estimates = if params.alphas.is_empty() {
            Vec::new()
        } else {
            estimate_sres(&state, &params.alphas, key.snapshot(idx as u64), options)?
        };
        snapshots.push(Snapshot {
            time: engine.time(),
            estimates,
        });
    }
    Ok(TrajectoryRecord {
        trajectory: key.trajectory,
        master_seed: key.master_seed,
        attempt: key.attempt,
        snapshots,
        events: engine.into_events(),
    })
}
