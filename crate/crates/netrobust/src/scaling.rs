//! Growth-law classification: run any measure over a network sequence,
//! fit log-log and semilog models, and label the series constant,
//! polynomial or exponential. A network family is robust when its energy
//! grows at most polynomially.

use rayon::prelude::*;
use serde::Serialize;

use crate::energy;
use crate::error::{Error, Result};
use crate::matrix::NetworkMatrix;
use crate::tailrisk;
use crate::topology::{self, TopologyKind, TopologySpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    MaxNorm,
    AvgNorm,
    H2,
    ScaledH2,
    GramianL1,
    MacroDiagnostic,
    CentralityRatio,
    Rho,
}

impl Measure {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "max_norm" => Self::MaxNorm,
            "avg_norm" => Self::AvgNorm,
            "h2" => Self::H2,
            "scaled_h2" => Self::ScaledH2,
            "gramian_l1" => Self::GramianL1,
            "macro_diagnostic" => Self::MacroDiagnostic,
            "centrality_ratio" => Self::CentralityRatio,
            "rho" => Self::Rho,
            _ => return None,
        })
    }
}

/// One measure evaluated along a size grid; values are averaged over
/// seeds for random topologies.
#[derive(Debug, Clone)]
pub struct ScalingStudy {
    pub spec: TopologySpec,
    pub n_grid: Vec<usize>,
    pub measure: Measure,
    pub values: Vec<f64>,
    pub value_min: Vec<f64>,
    pub value_max: Vec<f64>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingClass {
    Constant,
    Polynomial,
    Exponential,
}

impl ScalingClass {
    fn rank(self) -> u8 {
        match self {
            Self::Constant => 0,
            Self::Polynomial => 1,
            Self::Exponential => 2,
        }
    }
}

/// Classification of a growth series; `slope` is the log-log slope for
/// constant/polynomial fits and the semilog slope for exponential ones.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingFit {
    pub class: ScalingClass,
    pub slope: f64,
    pub r_squared: f64,
    /// False only for exponential (fragile) growth.
    pub robust_verdict: bool,
    pub loglog_slope: f64,
    pub loglog_r2: f64,
    pub semilog_slope: f64,
    pub semilog_r2: f64,
}

/// Classification thresholds. The defaults were chosen so every tabulated
/// growth law classifies correctly on the default doubling grid.
#[derive(Debug, Clone, Copy)]
pub struct FitConfig {
    /// Log-log slopes inside `(-band, band)` classify as constant.
    pub constant_band: f64,
    /// Exponential needs this much semilog r-squared advantage.
    pub r2_margin: f64,
    /// Exponential also needs at least this semilog slope.
    pub min_exp_slope: f64,
    /// Slope differences below this compare as equal.
    pub compare_deadband: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            constant_band: 0.15,
            r2_margin: 0.02,
            min_exp_slope: 0.05,
            compare_deadband: 0.15,
        }
    }
}

/// The default geometric size grid `{8, ..., 256}`; doubling keeps the
/// log-log fit well conditioned.
pub fn doubling_grid() -> Vec<usize> {
    vec![8, 16, 32, 64, 128, 256]
}

/// Linear grid for platoons, whose energy overflows on the doubling grid.
pub fn platoon_grid() -> Vec<usize> {
    (4..=24).collect()
}

fn is_seeded(kind: TopologyKind) -> bool {
    matches!(kind, TopologyKind::Wigner)
}

/// Evaluates one measure on one network.
pub fn measure_value(a: &NetworkMatrix, measure: Measure) -> Result<f64> {
    Ok(match measure {
        Measure::Rho => a.spectral_radius()?.rho,
        Measure::MaxNorm => energy::energy_report(a)?.max_norm,
        Measure::AvgNorm => energy::energy_report(a)?.avg_norm,
        Measure::H2 => energy::energy_report(a)?.h2,
        Measure::ScaledH2 => energy::energy_report(a)?.scaled_h2,
        Measure::GramianL1 => tailrisk::gramian_l1_criterion(a)?.value,
        Measure::MacroDiagnostic => tailrisk::macro_diagnostic(a)?,
        Measure::CentralityRatio => tailrisk::centrality_report(a)?.ratio,
    })
}

/// Runs `measure` over the grid; per-size evaluations run in parallel
/// with deterministic results.
pub fn run_study(
    spec: &TopologySpec,
    n_grid: &[usize],
    measure: Measure,
    seeds: &[u64],
) -> Result<ScalingStudy> {
    if n_grid.is_empty() {
        return Err(Error::BadSpec("empty size grid".into()));
    }
    let seeds_used: Vec<u64> = if is_seeded(spec.kind) {
        if seeds.is_empty() {
            return Err(Error::BadSpec(format!(
                "{:?} requires at least one seed",
                spec.kind
            )));
        }
        seeds.to_vec()
    } else {
        vec![0]
    };
    let per_n: Vec<Result<(f64, f64, f64)>> = n_grid
        .par_iter()
        .map(|&n| {
            let mut vals = Vec::with_capacity(seeds_used.len());
            for &seed in &seeds_used {
                let mut per = spec.clone();
                if is_seeded(spec.kind) {
                    per.seed = Some(seed ^ n as u64);
                }
                let a = topology::generate(&per, n).map_err(|e| e.at_size(n))?;
                let v = measure_value(&a, measure).map_err(|e| e.at_size(n))?;
                if !v.is_finite() || v <= 0.0 {
                    return Err(Error::BadSpec(format!(
                        "measure {measure:?} produced non-positive value {v} at n = {n}"
                    )));
                }
                vals.push(v);
            }
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            Ok((mean, min, max))
        })
        .collect();
    let mut values = Vec::with_capacity(n_grid.len());
    let mut value_min = Vec::with_capacity(n_grid.len());
    let mut value_max = Vec::with_capacity(n_grid.len());
    for r in per_n {
        let (mean, min, max) = r?;
        values.push(mean);
        value_min.push(min);
        value_max.push(max);
    }
    Ok(ScalingStudy {
        spec: spec.clone(),
        n_grid: n_grid.to_vec(),
        measure,
        values,
        value_min,
        value_max,
        seeds: seeds_used,
    })
}

/// Fits `log v` against both `log n` and `n` and classifies the series.
pub fn fit_scaling(study: &ScalingStudy, config: &FitConfig) -> Result<ScalingFit> {
    fit_series(&study.n_grid, &study.values, config)
}

/// Grid-and-values form of [`fit_scaling`], for callers that compute
/// values outside a study.
pub fn fit_series(n_grid: &[usize], values: &[f64], config: &FitConfig) -> Result<ScalingFit> {
    if n_grid.len() != values.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} grid points vs {} values",
            n_grid.len(),
            values.len()
        )));
    }
    if n_grid.len() < 4 {
        return Err(Error::InsufficientGrid(format!(
            "need at least 4 grid points, got {}",
            n_grid.len()
        )));
    }
    let n_min = *n_grid.iter().min().unwrap() as f64;
    let n_max = *n_grid.iter().max().unwrap() as f64;
    if n_max / n_min < 2.0 {
        return Err(Error::InsufficientGrid(format!(
            "grid spans only a factor {:.2} in n",
            n_max / n_min
        )));
    }
    if let Some(&v) = values.iter().find(|&&v| v <= 0.0 || !v.is_finite()) {
        return Err(Error::BadSpec(format!("cannot fit non-positive value {v}")));
    }
    let log_v: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let log_n: Vec<f64> = n_grid.iter().map(|&n| (n as f64).ln()).collect();
    let lin_n: Vec<f64> = n_grid.iter().map(|&n| n as f64).collect();
    let (loglog_slope, loglog_r2) = linear_fit(&log_n, &log_v);
    let (semilog_slope, semilog_r2) = linear_fit(&lin_n, &log_v);

    let (class, slope, r_squared) = if loglog_slope.abs() < config.constant_band {
        (ScalingClass::Constant, loglog_slope, loglog_r2)
    } else if semilog_r2 >= loglog_r2 + config.r2_margin && semilog_slope > config.min_exp_slope {
        (ScalingClass::Exponential, semilog_slope, semilog_r2)
    } else {
        (ScalingClass::Polynomial, loglog_slope, loglog_r2)
    };
    Ok(ScalingFit {
        class,
        slope,
        r_squared,
        robust_verdict: class != ScalingClass::Exponential,
        loglog_slope,
        loglog_r2,
        semilog_slope,
        semilog_r2,
    })
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let pred = my + slope * (x - mx);
            (y - pred).powi(2)
        })
        .sum();
    let r2 = if ss_tot > 1e-300 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    (slope, r2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    Better,
    Equal,
    Worse,
}

/// Orders two studies of the same measure by growth class, then slope
/// with a deadband standing in for Theta-equivalence.
pub fn compare(
    study1: &ScalingStudy,
    study2: &ScalingStudy,
    config: &FitConfig,
) -> Result<Comparison> {
    if study1.measure != study2.measure {
        return Err(Error::MeasureMismatch);
    }
    let f1 = fit_scaling(study1, config)?;
    let f2 = fit_scaling(study2, config)?;
    Ok(compare_fits(&f1, &f2, config))
}

pub fn compare_fits(f1: &ScalingFit, f2: &ScalingFit, config: &FitConfig) -> Comparison {
    match f1.class.rank().cmp(&f2.class.rank()) {
        std::cmp::Ordering::Less => Comparison::Better,
        std::cmp::Ordering::Greater => Comparison::Worse,
        std::cmp::Ordering::Equal => {
            if f1.class == ScalingClass::Constant
                || (f1.slope - f2.slope).abs() <= config.compare_deadband
            {
                Comparison::Equal
            } else if f1.slope < f2.slope {
                Comparison::Better
            } else {
                Comparison::Worse
            }
        }
    }
}
