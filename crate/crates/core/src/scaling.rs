//! Stationary averages, finite-size fits and relaxation slopes.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One point of an entropy time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub time: f64,
    pub value: f64,
    pub error: f64,
}

/// Time series of `M_alpha` for one system size and measurement rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub sites: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub points: Vec<SeriesPoint>,
}

/// Closed time interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidParameter(format!("invalid window [{lo}, {hi}]")));
        }
        Ok(Window { lo, hi })
    }

    /// `[lo * L, hi * L]`.
    pub fn scaled(sites: usize, lo: f64, hi: f64) -> Result<Self> {
        Window::new(lo * sites as f64, hi * sites as f64)
    }

    pub fn contains(&self, t: f64) -> bool {
        // tolerate times assembled from accumulated steps
        let eps = 1e-9 * (1.0 + self.hi.abs());
        t >= self.lo - eps && t <= self.hi + eps
    }

    /// Both ends multiplied by `factor`.
    pub fn shifted(&self, factor: f64) -> Self {
        Window {
            lo: self.lo * factor,
            hi: self.hi * factor,
        }
    }
}

/// A value with its one-sigma uncertainty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub value: f64,
    pub error: f64,
}

impl Coefficient {
    /// `|value| < k * error`.
    pub fn compatible_with_zero(&self, k: f64) -> bool {
        self.value.abs() < k * self.error
    }
}

/// Time-averaged stationary entropy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryValue {
    pub sites: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub mean: f64,
    pub error: f64,
    pub window: Window,
    pub snapshots: usize,
}

impl StationaryValue {
    /// A known stationary value, e.g. a closed form.
    pub fn exact(sites: usize, alpha: f64, gamma: f64, value: f64) -> Self {
        StationaryValue {
            sites,
            alpha,
            gamma,
            mean: value,
            error: 0.0,
            window: Window {
                lo: f64::INFINITY,
                hi: f64::INFINITY,
            },
            snapshots: 0,
        }
    }
}

/// Mean over the snapshots inside `window`. The error adds the spread of the
/// snapshots and their mean sampling error in quadrature.
pub fn time_average(series: &Series, window: Window) -> Result<StationaryValue> {
    let inside: Vec<&SeriesPoint> = series.points.iter().filter(|p| window.contains(p.time)).collect();
    if inside.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no snapshot of the L={} series lies in [{}, {}]",
            series.sites, window.lo, window.hi
        )));
    }
    let n = inside.len() as f64;
    let mean = inside.iter().map(|p| p.value).sum::<f64>() / n;
    let spread = if inside.len() > 1 {
        inside.iter().map(|p| (p.value - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let sampling = inside.iter().map(|p| p.error).sum::<f64>() / n;
    Ok(StationaryValue {
        sites: series.sites,
        alpha: series.alpha,
        gamma: series.gamma,
        mean,
        error: (spread + sampling * sampling).sqrt(),
        window,
        snapshots: inside.len(),
    })
}

/// `M(2L) - 2 M(L)` at one size `L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteSizeDifference {
    pub sites: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub value: f64,
    pub error: f64,
}

pub fn finite_size_difference(at_l: &StationaryValue, at_2l: &StationaryValue) -> Result<FiniteSizeDifference> {
    if at_2l.sites != 2 * at_l.sites {
        return Err(Error::InvalidParameter(format!(
            "sizes {} and {} are not a (L, 2L) pair",
            at_l.sites, at_2l.sites
        )));
    }
    if at_l.alpha != at_2l.alpha || at_l.gamma != at_2l.gamma {
        return Err(Error::InvalidParameter(
            "finite-size difference of mismatched alpha or gamma".into(),
        ));
    }
    Ok(FiniteSizeDifference {
        sites: at_l.sites,
        alpha: at_l.alpha,
        gamma: at_l.gamma,
        value: at_2l.mean - 2.0 * at_l.mean,
        error: (at_2l.error.powi(2) + 4.0 * at_l.error.powi(2)).sqrt(),
    })
}

/// Generalized least squares `y = X beta` with noise covariance `noise`.
/// Falls back to unit weights, with the covariance rescaled by the residual
/// variance, when the noise covariance is singular (e.g. noiseless input).
struct LinearFit {
    beta: DVector<f64>,
    covariance: DMatrix<f64>,
    residuals: DVector<f64>,
    chi_square: f64,
}

fn generalized_least_squares(x: &DMatrix<f64>, y: &DVector<f64>, noise: &DMatrix<f64>) -> Result<LinearFit> {
    let (n, p) = x.shape();
    if n < p {
        return Err(Error::InvalidSize(format!("{n} points for {p} parameters")));
    }
    let weighted = noise
        .clone()
        .cholesky()
        .filter(|_| noise.diagonal().iter().all(|&d| d > 0.0));
    let (xw, yw) = match &weighted {
        Some(ch) => {
            let l = ch.l();
            let xw = l
                .solve_lower_triangular(x)
                .ok_or_else(|| Error::Singular("noise".into()))?;
            let yw = l
                .solve_lower_triangular(y)
                .ok_or_else(|| Error::Singular("noise".into()))?;
            (xw, yw)
        }
        None => (x.clone(), y.clone()),
    };
    let svd = xw.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin.partial_cmp(&(1e-12 * smax)) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::Singular(format!(
            "design matrix is rank deficient (condition {:.3e})",
            smax / smin
        )));
    }
    let beta = svd.solve(&yw, 0.0).map_err(|e| Error::Singular(e.to_string()))?;
    let normal = xw.transpose() * &xw;
    let mut covariance = normal
        .try_inverse()
        .ok_or_else(|| Error::Singular("normal matrix".into()))?;
    let resid_w = &yw - &xw * &beta;
    let chi_square = resid_w.norm_squared();
    if weighted.is_none() {
        let dof = n - p;
        let s2 = if dof > 0 { chi_square / dof as f64 } else { 0.0 };
        covariance *= s2;
    }
    Ok(LinearFit {
        residuals: y - x * &beta,
        beta,
        covariance,
        chi_square,
    })
}

/// Coefficients of `M(L) = a L - b log L - c (+ d / L)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub alpha: f64,
    pub gamma: f64,
    pub a: Coefficient,
    pub b: Coefficient,
    pub c: Coefficient,
    pub d: Option<Coefficient>,
    /// Parameter covariance in the order `a, b, c[, d]`.
    pub covariance: Vec<Vec<f64>>,
    /// `M - model` at each input, in input order.
    pub residuals: Vec<f64>,
    pub chi_square: f64,
    pub l_min: usize,
    pub l_max: usize,
}

impl ScalingFit {
    pub fn predict(&self, sites: usize) -> f64 {
        let l = sites as f64;
        self.a.value * l - self.b.value * l.ln() - self.c.value + self.d.map_or(0.0, |d| d.value / l)
    }
}

fn scaling_row(sites: usize, inverse: bool) -> Vec<f64> {
    let l = sites as f64;
    let mut row = vec![l, -l.ln(), -1.0];
    if inverse {
        row.push(1.0 / l);
    }
    row
}

fn check_matched(values: &[StationaryValue]) -> Result<(f64, f64)> {
    let first = values
        .first()
        .ok_or_else(|| Error::InvalidSize("no stationary values".into()))?;
    if values.iter().any(|v| v.alpha != first.alpha || v.gamma != first.gamma) {
        return Err(Error::InvalidParameter(
            "stationary values mix different alpha or gamma".into(),
        ));
    }
    Ok((first.alpha, first.gamma))
}

/// Weighted least-squares fit over system sizes; `inverse` adds the `d / L` term.
pub fn fit_scaling(values: &[StationaryValue], inverse: bool) -> Result<ScalingFit> {
    let (alpha, gamma) = check_matched(values)?;
    let p = if inverse { 4 } else { 3 };
    let mut sizes: Vec<usize> = values.iter().map(|v| v.sites).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let need = p.max(4);
    if sizes.len() < need {
        return Err(Error::InvalidSize(format!(
            "fit needs at least {need} distinct sizes, got {}",
            sizes.len()
        )));
    }
    let n = values.len();
    let x = DMatrix::from_fn(n, p, |i, j| scaling_row(values[i].sites, inverse)[j]);
    let y = DVector::from_iterator(n, values.iter().map(|v| v.mean));
    let noise = DMatrix::from_diagonal(&DVector::from_iterator(n, values.iter().map(|v| v.error.powi(2))));
    let fit = generalized_least_squares(&x, &y, &noise)?;
    let coef = |k: usize| Coefficient {
        value: fit.beta[k],
        error: fit.covariance[(k, k)].max(0.0).sqrt(),
    };
    Ok(ScalingFit {
        alpha,
        gamma,
        a: coef(0),
        b: coef(1),
        c: coef(2),
        d: inverse.then(|| coef(3)),
        covariance: (0..p)
            .map(|i| (0..p).map(|j| fit.covariance[(i, j)]).collect())
            .collect(),
        residuals: fit.residuals.iter().copied().collect(),
        chi_square: fit.chi_square,
        l_min: sizes[0],
        l_max: *sizes.last().unwrap(),
    })
}

/// Slope `b` of `M(2L) - 2 M(L)` against `log L` for one `(alpha, gamma)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogCoefficient {
    pub alpha: f64,
    pub gamma: f64,
    pub b: Coefficient,
    pub intercept: Coefficient,
    pub differences: Vec<FiniteSizeDifference>,
    /// `|b| < 2 sigma_b`.
    pub zero_compatible: bool,
}

/// Significance, in standard errors, below which `b` counts as zero.
pub const ZERO_COMPATIBILITY_SIGMAS: f64 = 2.0;

/// Fits `D(L) = b log L + k` to every `(L, 2L)` pair in `values`, which must
/// share `alpha` and `gamma`. Differences sharing a size are correlated and
/// are fitted with their full covariance.
pub fn log_coefficient(values: &[StationaryValue]) -> Result<LogCoefficient> {
    let (alpha, gamma) = check_matched(values)?;
    let by_size: BTreeMap<usize, &StationaryValue> = values.iter().map(|v| (v.sites, v)).collect();
    if by_size.len() != values.len() {
        return Err(Error::InvalidParameter("duplicate system size".into()));
    }
    let mut differences = Vec::new();
    for (&l, v) in &by_size {
        if let Some(w) = by_size.get(&(2 * l)) {
            differences.push(finite_size_difference(v, w)?);
        }
    }
    if differences.len() < 2 {
        return Err(Error::InvalidSize(format!(
            "need at least 2 (L, 2L) pairs, found {}",
            differences.len()
        )));
    }
    let n = differences.len();
    let x = DMatrix::from_fn(n, 2, |i, j| {
        if j == 0 {
            (differences[i].sites as f64).ln()
        } else {
            1.0
        }
    });
    let y = DVector::from_iterator(n, differences.iter().map(|d| d.value));
    let err = |l: usize| by_size[&l].error;
    let noise = DMatrix::from_fn(n, n, |i, j| {
        let (li, lj) = (differences[i].sites, differences[j].sites);
        if i == j {
            differences[i].error.powi(2)
        } else if 2 * li == lj {
            -2.0 * err(lj).powi(2)
        } else if 2 * lj == li {
            -2.0 * err(li).powi(2)
        } else {
            0.0
        }
    });
    let fit = generalized_least_squares(&x, &y, &noise)?;
    let b = Coefficient {
        value: fit.beta[0],
        error: fit.covariance[(0, 0)].max(0.0).sqrt(),
    };
    Ok(LogCoefficient {
        alpha,
        gamma,
        b,
        intercept: Coefficient {
            value: fit.beta[1],
            error: fit.covariance[(1, 1)].max(0.0).sqrt(),
        },
        differences,
        zero_compatible: b.compatible_with_zero(ZERO_COMPATIBILITY_SIGMAS),
    })
}

/// [`log_coefficient`] for every `(alpha, gamma)` group, ordered by alpha then gamma.
pub fn log_coefficient_curve(values: &[StationaryValue]) -> Result<Vec<LogCoefficient>> {
    let mut groups: BTreeMap<(u64, u64), Vec<StationaryValue>> = BTreeMap::new();
    for v in values {
        groups
            .entry((v.alpha.to_bits(), v.gamma.to_bits()))
            .or_default()
            .push(*v);
    }
    let mut out: Vec<LogCoefficient> = groups.values().map(|g| log_coefficient(g)).collect::<Result<_>>()?;
    out.sort_by(|x, y| x.alpha.total_cmp(&y.alpha).then(x.gamma.total_cmp(&y.gamma)));
    Ok(out)
}

/// Side from which the series approaches its stationary value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Approach {
    /// `M(t) < M_stat`; the deficit is `(M_stat - M(t)) / L`.
    FromBelow,
    /// `M(t) > M_stat`; the excess is `(M(t) - M_stat) / L`.
    FromAbove,
}

/// Axes on which a slope is fitted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlopeKind {
    /// `log delta` against `t`: the rate of an exponential decay.
    LogLinear,
    /// `log delta` against `log t`: the exponent of an algebraic decay.
    LogLog,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeWindow {
    pub kind: SlopeKind,
    pub window: Window,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSlope {
    pub kind: SlopeKind,
    pub window: Window,
    pub slope: Coefficient,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaxationProfile {
    /// `(t, delta(t))` for every positive distance.
    pub distance: Vec<(f64, f64)>,
    /// Snapshots with non-positive distance, left out.
    pub excluded: usize,
    pub slopes: Vec<WindowSlope>,
}

/// Ordinary least-squares slope with its standard error (`NaN` for two points).
fn ols_slope(x: &[f64], y: &[f64]) -> Coefficient {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    let error = if x.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Coefficient { value: slope, error }
}

/// Distance to stationarity per site and its decay slopes in each window.
pub fn relaxation_profile(
    series: &Series,
    stationary: &StationaryValue,
    approach: Approach,
    windows: &[SlopeWindow],
) -> Result<RelaxationProfile> {
    let l = series.sites as f64;
    let mut distance = Vec::new();
    let mut excluded = 0;
    for p in &series.points {
        let d = match approach {
            Approach::FromBelow => stationary.mean - p.value,
            Approach::FromAbove => p.value - stationary.mean,
        } / l;
        if d > 0.0 {
            distance.push((p.time, d));
        } else {
            excluded += 1;
        }
    }
    let mut slopes = Vec::with_capacity(windows.len());
    for w in windows {
        let pts: Vec<(f64, f64)> = distance
            .iter()
            .filter(|(t, _)| w.window.contains(*t) && (w.kind == SlopeKind::LogLinear || *t > 0.0))
            .copied()
            .collect();
        if pts.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "window [{}, {}] holds {} usable points, need 2",
                w.window.lo,
                w.window.hi,
                pts.len()
            )));
        }
        let x: Vec<f64> = pts
            .iter()
            .map(|(t, _)| match w.kind {
                SlopeKind::LogLinear => *t,
                SlopeKind::LogLog => t.ln(),
            })
            .collect();
        let y: Vec<f64> = pts.iter().map(|(_, d)| d.ln()).collect();
        slopes.push(WindowSlope {
            kind: w.kind,
            window: w.window,
            slope: ols_slope(&x, &y),
            points: pts.len(),
        });
    }
    Ok(RelaxationProfile {
        distance,
        excluded,
        slopes,
    })
}
