//! Vehicular-platoon feedback design: tridiagonal gain assembly, the
//! closed-form symmetric H2 objective, multi-start coordinate-descent
//! optimizers for symmetric and asymmetric feedback, the canonical
//! half-line controller whose closed loop is half a unit Jordan block,
//! and platoon (Jordan-chain) energy with its exact power-norm law.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::energy::{energy_report, EnergyReport};
use crate::error::{Error, Result};
use crate::matrix::{solve_gramian, NetworkMatrix, DEFAULT_GRAMIAN_TOL};
use crate::stream;
use crate::topology::{generate, TopologySpec};

use rand::Rng;

/// Gain box for the optimizers; keeps every `mu` eigenvalue candidate
/// clear of the singular and unstable ends of `(0, 2)`.
const GAIN_LO: f64 = 1e-3;
const GAIN_HI: f64 = 2.0 - 1e-3;

/// Default optimizer budget in objective evaluations.
pub const DEFAULT_BUDGET: usize = 20_000;

/// Tridiagonal platoon gains `k_1 ... k_{n+1}` with asymmetry knobs
/// `eps_2 ... eps_{n+1}`.
///
/// Row `i` of the assembled feedback matrix `K` reads
/// `[-k_i, k_i + k_{i+1} eps_{i+1}, -k_{i+1} eps_{i+1}]`; all-ones
/// `eps_feedback` makes `K` symmetric.
#[derive(Debug, Clone, Serialize)]
pub struct PlatoonGains {
    pub n: usize,
    pub k: Vec<f64>,
    pub eps_feedback: Vec<f64>,
}

impl PlatoonGains {
    /// Symmetric gains (`eps` identically one). Accepts `n + 1` gains, or
    /// `n` with the trailing boundary gain implicitly zero.
    pub fn symmetric(n: usize, k: Vec<f64>) -> Result<Self> {
        Ok(Self {
            eps_feedback: vec![1.0; n],
            k: pad_gains(n, k)?,
            n,
        })
    }

    pub fn asymmetric(n: usize, k: Vec<f64>, eps_feedback: Vec<f64>) -> Result<Self> {
        if eps_feedback.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "expected {n} eps entries, got {}",
                eps_feedback.len()
            )));
        }
        if let Some(&e) = eps_feedback.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::BadConfig(format!("eps entry {e} outside [0, 1]")));
        }
        Ok(Self {
            eps_feedback,
            k: pad_gains(n, k)?,
            n,
        })
    }

    /// `K_(1/2) = -(1/2) DL_n + (1/2) I` under the purely asymmetric
    /// convention: `k` identically one half, `eps` identically zero.
    pub fn half_line(n: usize) -> Self {
        Self {
            n,
            k: vec![0.5; n + 1],
            eps_feedback: vec![0.0; n],
        }
    }
}

fn pad_gains(n: usize, mut k: Vec<f64>) -> Result<Vec<f64>> {
    match k.len() {
        l if l == n + 1 => Ok(k),
        l if l == n => {
            k.push(0.0);
            Ok(k)
        }
        l => Err(Error::DimensionMismatch(format!(
            "expected {} or {} gains for n = {n}, got {l}",
            n,
            n + 1
        ))),
    }
}

/// Assembles the displayed tridiagonal feedback matrix.
pub fn assemble_k(gains: &PlatoonGains) -> Result<NetworkMatrix> {
    let n = gains.n;
    if gains.k.len() != n + 1 || gains.eps_feedback.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "gains of length {} / eps of length {} do not match n = {n}",
            gains.k.len(),
            gains.eps_feedback.len()
        )));
    }
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let coupled = gains.k[i + 1] * gains.eps_feedback[i];
        m[(i, i)] = gains.k[i] + coupled;
        if i + 1 < n {
            m[(i, i + 1)] = -coupled;
            m[(i + 1, i)] = -gains.k[i + 1];
        }
    }
    NetworkMatrix::from_dense(m)
}

/// The closed loop `I - K`.
pub fn closed_loop(gains: &PlatoonGains) -> Result<NetworkMatrix> {
    let k = assemble_k(gains)?;
    let n = gains.n;
    let mut m = -k.entries().clone();
    for i in 0..n {
        m[(i, i)] += 1.0;
    }
    NetworkMatrix::from_dense(m)
}

/// `trace((2K - K^2)^{-1})` through the eigenvalues of a symmetric gain
/// matrix: `sum_i 1 / (2 mu_i - mu_i^2)`. Matches the Lyapunov solve of
/// `I - K` without running one.
pub fn symmetric_h2_closed_form(k: &NetworkMatrix) -> Result<f64> {
    if !k.is_symmetric() {
        return Err(Error::NotSymmetric {
            gap: crate::matrix::symmetry_gap(k.entries()),
        });
    }
    let eigs = k.entries().clone().symmetric_eigenvalues();
    let mut total = 0.0;
    for &mu in eigs.iter() {
        if mu <= 1e-12 {
            return Err(Error::SingularGain(mu));
        }
        if mu >= 2.0 - 1e-12 {
            return Err(Error::UnstableClosedLoop(mu));
        }
        total += 1.0 / (2.0 * mu - mu * mu);
    }
    Ok(total)
}

/// Appendix lower bound for symmetric gains:
/// `trace(P) >= n/4 + trace(K^{-1}/2 + K/8)`.
pub fn symmetric_h2_lower_bound(k: &NetworkMatrix) -> Result<f64> {
    if !k.is_symmetric() {
        return Err(Error::NotSymmetric {
            gap: crate::matrix::symmetry_gap(k.entries()),
        });
    }
    let eigs = k.entries().clone().symmetric_eigenvalues();
    let mut total = k.n() as f64 / 4.0;
    for &mu in eigs.iter() {
        if mu <= 1e-12 {
            return Err(Error::SingularGain(mu));
        }
        total += 0.5 / mu + mu / 8.0;
    }
    Ok(total)
}

/// Optimizer output: the best gains found with their energy profile.
#[derive(Debug, Clone, Serialize)]
pub struct ControllerResult {
    pub gains: PlatoonGains,
    pub h2: f64,
    pub scaled_h2: f64,
    pub rho_closed_loop: f64,
    /// Objective evaluations spent.
    pub iterations: usize,
    pub budget_exhausted: bool,
    /// Certified closed-form lower bound at the returned gains
    /// (symmetric search only).
    pub lower_bound: Option<f64>,
}

/// Minimizes `trace(P)` over symmetric tridiagonal gains in the box
/// `[1e-3, 2 - 1e-3]` by multi-start coordinate descent on the closed-form
/// objective.
pub fn optimize_symmetric(n: usize, budget: usize, seed: u64) -> Result<ControllerResult> {
    let dims = n + 1;
    let objective = |x: &[f64]| -> f64 {
        let gains = match PlatoonGains::symmetric(n, x.to_vec()) {
            Ok(g) => g,
            Err(_) => return f64::INFINITY,
        };
        let k = match assemble_k(&gains) {
            Ok(k) => k,
            Err(_) => return f64::INFINITY,
        };
        symmetric_h2_closed_form(&k).unwrap_or(f64::INFINITY)
    };
    let mut starts: Vec<Vec<f64>> = vec![
        vec![0.1; dims],
        vec![0.2; dims],
        vec![0.3; dims],
        vec![0.45; dims],
    ];
    let mut rng = stream::base(seed);
    starts.push((0..dims).map(|_| rng.gen_range(0.05..0.45)).collect());
    let (x, _fx, evals, exhausted) = multi_start_descent(
        &objective,
        starts,
        &vec![GAIN_LO; dims],
        &vec![GAIN_HI; dims],
        budget,
    );
    let gains = PlatoonGains::symmetric(n, x)?;
    finish_result(gains, evals, exhausted, true)
}

/// Exact evaluation of the canonical asymmetric controller: closed loop
/// `(1/2) J(1)` up to transposition, spectral radius one half.
pub fn eval_half_line_controller(n: usize) -> Result<ControllerResult> {
    let gains = PlatoonGains::half_line(n);
    finish_result(gains, 0, false, false)
}

/// Minimizes `trace(P)` jointly over gains and asymmetry knobs. The
/// half-line controller and a symmetric warm start are included among the
/// starts, so the result can never lose to either.
pub fn optimize_asymmetric(n: usize, budget: usize, seed: u64) -> Result<ControllerResult> {
    let _dims = 2 * n + 1; // k_1..k_{n+1}, eps_2..eps_{n+1}
    let objective = |x: &[f64]| -> f64 {
        let (k, eps) = x.split_at(n + 1);
        let gains = match PlatoonGains::asymmetric(n, k.to_vec(), eps.to_vec()) {
            Ok(g) => g,
            Err(_) => return f64::INFINITY,
        };
        let m = match closed_loop(&gains) {
            Ok(m) => m,
            Err(_) => return f64::INFINITY,
        };
        doubling_trace(m.entries()).unwrap_or(f64::INFINITY)
    };

    let warm_budget = budget / 4;
    let sym = optimize_symmetric(n, warm_budget, seed ^ 0x5a5a)?;
    let mut sym_start = sym.gains.k.clone();
    sym_start.extend(std::iter::repeat_n(1.0, n));

    let mut half_start = vec![0.5; n + 1];
    half_start.extend(std::iter::repeat_n(0.0, n));

    let mut rng = stream::base(seed);
    let mut rand_start: Vec<f64> = (0..n + 1).map(|_| rng.gen_range(0.1..0.45)).collect();
    rand_start.extend((0..n).map(|_| rng.gen_range(0.0..1.0)));

    let mut lo = vec![GAIN_LO; n + 1];
    lo.extend(std::iter::repeat_n(0.0, n));
    let mut hi = vec![GAIN_HI; n + 1];
    hi.extend(std::iter::repeat_n(1.0, n));

    let remaining = budget.saturating_sub(sym.iterations).max(64);
    let (x, _fx, evals, exhausted) = multi_start_descent(
        &objective,
        vec![half_start, sym_start, rand_start],
        &lo,
        &hi,
        remaining,
    );
    let (k, eps) = x.split_at(n + 1);
    let gains = PlatoonGains::asymmetric(n, k.to_vec(), eps.to_vec())?;
    finish_result(gains, sym.iterations + evals, exhausted, false)
}

fn finish_result(
    gains: PlatoonGains,
    iterations: usize,
    budget_exhausted: bool,
    symmetric: bool,
) -> Result<ControllerResult> {
    let m = closed_loop(&gains)?;
    let g = solve_gramian(&m, DEFAULT_GRAMIAN_TOL)?;
    let h2 = g.trace();
    let rho = m.spectral_radius()?.rho;
    let lower_bound = if symmetric {
        Some(symmetric_h2_lower_bound(&assemble_k(&gains)?)?)
    } else {
        None
    };
    Ok(ControllerResult {
        gains,
        h2,
        scaled_h2: (1.0 - rho) * h2,
        rho_closed_loop: rho,
        iterations,
        budget_exhausted,
        lower_bound,
    })
}

/// Raw doubling of `trace(P(M))` with divergence detection instead of a
/// spectral precheck; `None` marks an unstable or non-convergent iterate.
/// The optimizer hot path cannot afford a Gelfand estimate per candidate.
fn doubling_trace(m: &DMatrix<f64>) -> Option<f64> {
    let n = m.nrows();
    let mut s = DMatrix::<f64>::identity(n, n);
    let mut b = m.clone();
    for _ in 0..crate::matrix::MAX_DOUBLINGS {
        let t = &s * &b;
        let u = b.tr_mul(&t);
        let norm = u.norm();
        if !norm.is_finite() || norm > 1e14 {
            return None;
        }
        s += &u;
        if norm <= DEFAULT_GRAMIAN_TOL {
            return Some(s.trace());
        }
        b = &b * &b;
    }
    None
}

/// (best point, best value, evaluations spent, budget exhausted).
type DescentOutcome = (Vec<f64>, f64, usize, bool);

fn multi_start_descent<F>(
    f: &F,
    starts: Vec<Vec<f64>>,
    lo: &[f64],
    hi: &[f64],
    budget: usize,
) -> DescentOutcome
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let per_start = (budget / starts.len().max(1)).max(16);
    let mut results: Vec<(usize, DescentOutcome)> = starts
        .into_par_iter()
        .enumerate()
        .map(|(idx, x0)| (idx, coordinate_descent(f, x0, lo, hi, per_start)))
        .collect();
    results.sort_by(|a, b| {
        a.1 .1
            .partial_cmp(&b.1 .1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    let total_evals: usize = results.iter().map(|r| r.1 .2).sum();
    let exhausted = results.iter().any(|r| r.1 .3);
    let best = results.into_iter().next().expect("at least one start").1;
    (best.0, best.1, total_evals, exhausted)
}

/// Cyclic coordinate descent with central-difference gradients and
/// backtracking steps; infeasible candidates evaluate to infinity and are
/// never accepted.
fn coordinate_descent<F>(
    f: &F,
    mut x: Vec<f64>,
    lo: &[f64],
    hi: &[f64],
    budget: usize,
) -> DescentOutcome
where
    F: Fn(&[f64]) -> f64,
{
    let m = x.len();
    let mut evals = 0usize;
    let mut fx = f(&x);
    evals += 1;
    if !fx.is_finite() {
        return (x, fx, evals, false);
    }
    let mut steps: Vec<f64> = (0..m).map(|i| 0.1 * (hi[i] - lo[i])).collect();
    let mut exhausted = false;
    loop {
        let mut improved = false;
        for i in 0..m {
            if evals + 4 > budget {
                exhausted = true;
                break;
            }
            let h = (1e-5 * (hi[i] - lo[i])).max(1e-9);
            let xi = x[i];
            let up = (xi + h).min(hi[i]);
            let down = (xi - h).max(lo[i]);
            if up == down {
                continue;
            }
            let mut trial = x.clone();
            trial[i] = up;
            let fp = f(&trial);
            trial[i] = down;
            let fm = f(&trial);
            evals += 2;
            let g = (fp - fm) / (up - down);
            if g == 0.0 || g.is_nan() {
                continue;
            }
            let dir = if g > 0.0 { -1.0 } else { 1.0 };
            let mut step = steps[i];
            let mut accepted = false;
            while step > 1e-8 && evals < budget {
                let cand = (xi + dir * step).clamp(lo[i], hi[i]);
                if cand == xi {
                    step *= 0.5;
                    continue;
                }
                trial[i] = cand;
                let fc = f(&trial);
                evals += 1;
                if fc < fx {
                    x[i] = cand;
                    fx = fc;
                    steps[i] = (step * 2.0).min(0.25 * (hi[i] - lo[i]));
                    accepted = true;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                steps[i] = (steps[i] * 0.5).max(1e-7);
            }
        }
        if exhausted || !improved {
            break;
        }
    }
    (x, fx, evals, exhausted)
}

/// Platoon energy report with the exact Jordan power-norm check
/// `||J(lambda)^n||_inf = (1 + lambda)^n - 1` for constant `lambda`.
#[derive(Debug, Clone, Serialize)]
pub struct PlatoonEnergy {
    pub report: EnergyReport,
    pub log_h2: f64,
    /// Populated for constant `lambda` with `n <= 30`.
    pub jordan_check: Option<JordanCheck>,
    /// True when `n` exceeds the safe range for exact powers; the energy
    /// report itself is still valid, read `log_h2` at scale.
    pub overflow_guard: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct JordanCheck {
    /// `||J(lambda)^n||_inf` from repeated multiplication.
    pub computed: f64,
    /// `(1 + lambda)^n - 1`.
    pub formula: f64,
    pub rel_err: f64,
}

const JORDAN_POWER_SAFE_N: usize = 30;

pub fn platoon_energy(lambdas: &[f64], n: usize) -> Result<PlatoonEnergy> {
    let spec = match lambdas.len() {
        1 => TopologySpec::platoon(lambdas[0], 1.0),
        _ => TopologySpec {
            lambda_values: Some(lambdas.to_vec()),
            ..TopologySpec::platoon(0.5, 1.0)
        },
    };
    let vp = generate(&spec, n)?;
    let report = energy_report(&vp)?;
    let constant_lambda = lambdas.len() == 1 || lambdas.windows(2).all(|w| w[0] == w[1]);
    let overflow_guard = n > JORDAN_POWER_SAFE_N;
    let jordan_check = if constant_lambda && !overflow_guard {
        let lambda = lambdas[0];
        let mut power = DMatrix::<f64>::identity(n, n);
        for _ in 0..n {
            power = &power * vp.entries();
        }
        let computed = infinity_norm(&power);
        let formula = (1.0 + lambda).powi(n as i32) - 1.0;
        Some(JordanCheck {
            computed,
            formula,
            rel_err: (computed - formula).abs() / formula.abs().max(f64::MIN_POSITIVE),
        })
    } else {
        None
    };
    Ok(PlatoonEnergy {
        log_h2: report.h2.ln(),
        report,
        jordan_check,
        overflow_guard,
    })
}

fn infinity_norm(m: &DMatrix<f64>) -> f64 {
    let mut best = 0.0f64;
    for i in 0..m.nrows() {
        let row: f64 = (0..m.ncols()).map(|j| m[(i, j)].abs()).sum();
        best = best.max(row);
    }
    best
}

/// Exact binomial coefficient; used by the slope-floor derivations.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut out: u128 = 1;
    for i in 0..k {
        out = out * (n - i) as u128 / (i + 1) as u128;
    }
    out
}
