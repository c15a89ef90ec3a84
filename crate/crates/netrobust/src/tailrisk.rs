//! Tail behavior of aggregate output: the rate `R_n(z)`, the
//! macroeconomic tail ratio against the standard normal, the `sqrt(n)`
//! diagnostic, the Gramian L1 criterion and eigenvector centrality.
//!
//! A one-shot shock drives `x(k+1) = A x(k)`, and the aggregate output
//! `x_inf = 1^T (I - A)^{-1} omega = sum_i c_i omega_i` is a linear
//! combination of the shocks weighted by the resolvent column sums `c`.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{
    perron_vector, resolvent_column_sums, solve_gramian, NetworkMatrix, DEFAULT_GRAMIAN_TOL,
    STABILITY_MARGIN,
};
use crate::scaling::{ScalingClass, ScalingFit};
use crate::stream;

/// Scale factor turning a standard logistic variate into a unit-variance
/// one (standard logistic variance is pi^2 / 3).
const LOGISTIC_SCALE: f64 = 0.551_328_895_421_792_8; // sqrt(3) / pi

/// 97.5% normal quantile, for Wilson 95% intervals.
const WILSON_Z: f64 = 1.959_963_984_540_054;

const MC_CHUNK: usize = 8192;

/// Shock distribution: mean 0, variance 1, finite exponential moment,
/// continuous symmetric density with full support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShockDistribution {
    Gaussian,
    /// Standard logistic scaled by sqrt(3)/pi so the variance is 1;
    /// fatter tails than Gaussian.
    Logistic,
}

impl ShockDistribution {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gaussian" => Some(Self::Gaussian),
            "logistic" => Some(Self::Logistic),
            _ => None,
        }
    }

    fn draw<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            Self::Gaussian => rng.sample(StandardNormal),
            Self::Logistic => {
                let u: f64 = rng.sample(rand_distr::Open01);
                LOGISTIC_SCALE * (u / (1.0 - u)).ln()
            }
        }
    }

    /// Density of the standardized shock at `x`.
    pub fn pdf(self, x: f64) -> f64 {
        match self {
            Self::Gaussian => (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            Self::Logistic => {
                let t = (-x / LOGISTIC_SCALE).exp();
                t / (LOGISTIC_SCALE * (1.0 + t).powi(2))
            }
        }
    }
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Wilson 95% interval for a binomial proportion.
pub fn wilson_interval(hits: usize, samples: usize) -> (f64, f64) {
    let n = samples as f64;
    let p = hits as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn check_stable(a: &NetworkMatrix) -> Result<()> {
    let est = a.spectral_radius()?;
    let limit = 1.0 - STABILITY_MARGIN;
    if est.rho >= limit {
        return Err(Error::UnstableMatrix {
            rho: est.rho,
            limit,
        });
    }
    Ok(())
}

/// Draws of the aggregate output `x_inf = sum_i c_i omega_i`. Sampling is
/// chunked with one ChaCha substream per chunk, so the result only
/// depends on `(seed, samples)`.
pub fn aggregate_output_sample(
    a: &NetworkMatrix,
    dist: ShockDistribution,
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let c = resolvent_column_sums(a)?;
    Ok(sample_weighted_sums(&c, dist, samples, seed))
}

fn sample_weighted_sums(
    c: &DVector<f64>,
    dist: ShockDistribution,
    samples: usize,
    seed: u64,
) -> Vec<f64> {
    let chunks = samples.div_ceil(MC_CHUNK);
    let out: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = stream::substream(seed, chunk as u64);
            let count = MC_CHUNK.min(samples - chunk * MC_CHUNK);
            (0..count)
                .map(|_| c.iter().map(|&ci| ci * dist.draw(&mut rng)).sum())
                .collect()
        })
        .collect();
    out.concat()
}

/// Monte Carlo estimate of the tail-risk rate
/// `R_n(z) = -(1/n) log P(|x_inf| > n z)` with a Wilson 95% interval.
#[derive(Debug, Clone, Serialize)]
pub struct TailRate {
    pub rate: f64,
    /// Rate interval from the Wilson bounds on the hit probability; the
    /// upper end is infinite when no hits were seen.
    pub rate_ci: (f64, f64),
    pub p_hat: f64,
    pub p_ci: (f64, f64),
    pub hits: usize,
    pub samples: usize,
    /// Exact probability `2 Phi(-n z / ||c||_2)`, Gaussian shocks only.
    pub analytic_p: Option<f64>,
    pub analytic_rate: Option<f64>,
    /// Fewer than 20 hits: the estimate is noisy.
    pub low_hits: bool,
}

pub fn tail_risk_rate(
    a: &NetworkMatrix,
    z: f64,
    dist: ShockDistribution,
    samples: usize,
    seed: u64,
) -> Result<TailRate> {
    if z <= 0.0 {
        return Err(Error::BadConfig(format!("z must be positive, got {z}")));
    }
    check_stable(a)?;
    let c = resolvent_column_sums(a)?;
    let n = a.n() as f64;
    let threshold = n * z;
    let draws = sample_weighted_sums(&c, dist, samples, seed);
    let hits = draws.iter().filter(|x| x.abs() > threshold).count();
    let p_hat = hits as f64 / samples as f64;
    let p_ci = wilson_interval(hits, samples);
    let rate = if hits == 0 {
        f64::INFINITY
    } else {
        -p_hat.ln() / n
    };
    let rate_ci = (
        if p_ci.1 > 0.0 {
            -p_ci.1.ln() / n
        } else {
            f64::INFINITY
        },
        if p_ci.0 > 0.0 {
            -p_ci.0.ln() / n
        } else {
            f64::INFINITY
        },
    );
    let (analytic_p, analytic_rate) = match dist {
        ShockDistribution::Gaussian => {
            let sigma = c.norm();
            let p = libm::erfc(threshold / (sigma * std::f64::consts::SQRT_2));
            (Some(p), Some(-p.ln() / n))
        }
        ShockDistribution::Logistic => (None, None),
    };
    Ok(TailRate {
        rate,
        rate_ci,
        p_hat,
        p_ci,
        hits,
        samples,
        analytic_p,
        analytic_rate,
        low_hits: hits < 20,
    })
}

/// Macroeconomic tail ratio `log P(Z < -tau) / log Phi(-tau)` of the
/// standardized aggregate output.
#[derive(Debug, Clone, Serialize)]
pub struct MacroRatio {
    pub ratio: f64,
    pub ratio_ci: (f64, f64),
    pub tau: f64,
    pub p_hat: f64,
    pub hits: usize,
    pub samples: usize,
    /// True when the value is exact rather than Monte Carlo (Gaussian
    /// shocks make `Z` standard normal, so the ratio is identically 1).
    pub analytic: bool,
}

pub fn macro_tail_ratio(
    a: &NetworkMatrix,
    tau: f64,
    dist: ShockDistribution,
    samples: usize,
    seed: u64,
) -> Result<MacroRatio> {
    if !(tau > 0.0 && tau <= 4.0) {
        return Err(Error::BadConfig(format!(
            "tau must lie in (0, 4] for plain Monte Carlo, got {tau}"
        )));
    }
    check_stable(a)?;
    if dist == ShockDistribution::Gaussian {
        let phi = normal_cdf(-tau);
        return Ok(MacroRatio {
            ratio: 1.0,
            ratio_ci: (1.0, 1.0),
            tau,
            p_hat: phi,
            hits: 0,
            samples: 0,
            analytic: true,
        });
    }
    let c = resolvent_column_sums(a)?;
    let sigma = c.norm();
    let draws = sample_weighted_sums(&c, dist, samples, seed);
    let hits = draws.iter().filter(|&&x| x / sigma < -tau).count();
    if hits == 0 {
        return Err(Error::TailUnresolved(tau));
    }
    let p_hat = hits as f64 / samples as f64;
    let (p_lo, p_hi) = wilson_interval(hits, samples);
    let log_phi = normal_cdf(-tau).ln();
    let ratio = p_hat.ln() / log_phi;
    let ratio_ci = (
        p_hi.ln() / log_phi,
        if p_lo > 0.0 {
            p_lo.ln() / log_phi
        } else {
            f64::INFINITY
        },
    );
    Ok(MacroRatio {
        ratio,
        ratio_ci,
        tau,
        p_hat,
        hits,
        samples,
        analytic: false,
    })
}

/// The diagnostic `||c||_inf sqrt(n) / ||c||_2`; always at least 1, and
/// unbounded growth along a family signals macroeconomic tail risk.
pub fn macro_diagnostic(a: &NetworkMatrix) -> Result<f64> {
    let c = resolvent_column_sums(a)?;
    let n = a.n() as f64;
    Ok(c.amax() * n.sqrt() / c.norm())
}

/// `||P(A / sqrt(lambda_PF))||_1` with the Perron root floored at 1e-12
/// for nilpotent input.
#[derive(Debug, Clone, Serialize)]
pub struct GramianL1Criterion {
    pub value: f64,
    pub lambda_pf: f64,
    /// Perron root was below the floor (degenerate nilpotent case).
    pub floored: bool,
}

pub fn gramian_l1_criterion(a: &NetworkMatrix) -> Result<GramianL1Criterion> {
    let pv = perron_vector(a)?;
    let floored = pv.lambda_pf < 1e-12;
    let lambda = pv.lambda_pf.max(1e-12);
    let scale = lambda.sqrt();
    if scale >= 1.0 - STABILITY_MARGIN {
        return Err(Error::UnstableMatrix {
            rho: scale,
            limit: 1.0 - STABILITY_MARGIN,
        });
    }
    let scaled = NetworkMatrix::from_dense(a.entries() / scale)?;
    let g = solve_gramian(&scaled, DEFAULT_GRAMIAN_TOL)?;
    let value = induced_one_norm(&g.p);
    Ok(GramianL1Criterion {
        value,
        lambda_pf: pv.lambda_pf,
        floored,
    })
}

pub(crate) fn induced_one_norm(m: &nalgebra::DMatrix<f64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        let col: f64 = m.column(j).iter().map(|v| v.abs()).sum();
        best = best.max(col);
    }
    best
}

/// Left-Perron centrality ratio `pi_max / pi_min`; infinite when some
/// component vanishes, and non-convergence is flagged rather than fatal.
#[derive(Debug, Clone, Serialize)]
pub struct CentralityReport {
    pub ratio: f64,
    pub converged: bool,
}

pub fn centrality_report(a: &NetworkMatrix) -> Result<CentralityReport> {
    let pv = perron_vector(a)?;
    let max = pv.pi_left.max();
    let min = pv.pi_left.min();
    let ratio = if min > 0.0 { max / min } else { f64::INFINITY };
    Ok(CentralityReport {
        ratio,
        converged: pv.converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    NoTailRisk,
    TailRisk,
    Inconclusive,
}

/// Sequence-level verdict: no tail risk iff both the Gramian L1 criterion
/// and the diagnostic classify constant along the size grid; tail risk
/// iff either one grows.
pub fn sequence_verdict(gramian_l1_fit: &ScalingFit, diagnostic_fit: &ScalingFit) -> Verdict {
    let grows = |f: &ScalingFit| {
        f.class == ScalingClass::Exponential || (f.class == ScalingClass::Polynomial && f.slope > 0.0)
    };
    if gramian_l1_fit.class == ScalingClass::Constant
        && diagnostic_fit.class == ScalingClass::Constant
    {
        Verdict::NoTailRisk
    } else if grows(gramian_l1_fit) || grows(diagnostic_fit) {
        Verdict::TailRisk
    } else {
        Verdict::Inconclusive
    }
}

/// Everything the tail-risk pipeline knows about one network.
#[derive(Debug, Clone, Serialize)]
pub struct TailRiskReport {
    pub n: usize,
    pub z: f64,
    pub rate: TailRate,
    pub tau: f64,
    pub macro_ratio: Option<MacroRatio>,
    pub diagnostic: f64,
    pub gramian_l1: f64,
    pub lambda_pf: f64,
    pub lambda_pf_floored: bool,
    pub centrality_ratio: f64,
    pub centrality_converged: bool,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy)]
pub struct TailRiskParams {
    pub z: f64,
    pub tau: f64,
    pub dist: ShockDistribution,
    pub samples: usize,
    pub seed: u64,
}

impl Default for TailRiskParams {
    fn default() -> Self {
        Self {
            z: 0.5,
            tau: 3.0,
            dist: ShockDistribution::Logistic,
            samples: 100_000,
            seed: 0,
        }
    }
}

/// Full per-network report. The verdict field is `Inconclusive` here: a
/// single matrix cannot witness a growth class, so callers set it from
/// the sequence-level fits.
pub fn tail_risk_report(a: &NetworkMatrix, params: &TailRiskParams) -> Result<TailRiskReport> {
    let rate = tail_risk_rate(a, params.z, params.dist, params.samples, params.seed)?;
    let macro_ratio = match macro_tail_ratio(a, params.tau, params.dist, params.samples, params.seed)
    {
        Ok(r) => Some(r),
        Err(Error::TailUnresolved(_)) => None,
        Err(e) => return Err(e),
    };
    let diagnostic = macro_diagnostic(a)?;
    let l1 = gramian_l1_criterion(a)?;
    let centrality = centrality_report(a)?;
    Ok(TailRiskReport {
        n: a.n(),
        z: params.z,
        rate,
        tau: params.tau,
        macro_ratio,
        diagnostic,
        gramian_l1: l1.value,
        lambda_pf: l1.lambda_pf,
        lambda_pf_floored: l1.floored,
        centrality_ratio: centrality.ratio,
        centrality_converged: centrality.converged,
        verdict: Verdict::Inconclusive,
    })
}

/// Equal-width histogram of samples, returning (bin center, density).
pub fn histogram(samples: &[f64], bins: usize) -> Vec<(f64, f64)> {
    if samples.is_empty() || bins == 0 {
        return Vec::new();
    }
    let min = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = ((max - min) / bins as f64).max(f64::MIN_POSITIVE);
    let mut counts = vec![0usize; bins];
    for &s in samples {
        let idx = (((s - min) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let norm = 1.0 / (samples.len() as f64 * width);
    counts
        .iter()
        .enumerate()
        .map(|(i, &k)| (min + (i as f64 + 0.5) * width, k as f64 * norm))
        .collect()
}
