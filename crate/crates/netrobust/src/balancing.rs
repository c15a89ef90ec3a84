//! Spectral balancing: `A_eps = (1 - eps) A + eps U Gamma U^T`, where `U`
//! comes from the eigendecomposition of the Gramian `P(A)` and
//! `rho(Gamma) <= rho(A)`. Balancing makes a network more undirected and
//! cannot increase its energy in the order sense; this module carries the
//! transform, its certified bounds, and the seeded sweep experiment.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{
    psd_order_holds, solve_gramian, sorted_symmetric_eigen, top_singular_value, GramianSolution,
    NetworkMatrix, DEFAULT_GRAMIAN_TOL,
};
use crate::stream;
use crate::topology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaMode {
    /// `Gamma = gamma_cap * I`; maximizes the balanced component's energy
    /// allowance, making `Lambda = gamma_cap * I` exactly.
    ScaledIdentity,
    /// i.i.d. uniform diagonal on `[-gamma_cap, gamma_cap]` from the seed.
    RandomDiagonal,
    /// Caller-provided diagonal.
    Custom,
}

#[derive(Debug, Clone)]
pub struct BalanceConfig {
    pub epsilon: f64,
    pub gamma_mode: GammaMode,
    /// Cap on `|Gamma_ii|`; `None` resolves to `rho(A)` inside
    /// [`balance`].
    pub gamma_cap: Option<f64>,
    pub seed: u64,
    pub custom_diagonal: Option<Vec<f64>>,
}

impl BalanceConfig {
    pub fn scaled_identity(epsilon: f64) -> Self {
        Self {
            epsilon,
            gamma_mode: GammaMode::ScaledIdentity,
            gamma_cap: None,
            seed: 0,
            custom_diagonal: None,
        }
    }

    pub fn random_diagonal(epsilon: f64, seed: u64) -> Self {
        Self {
            epsilon,
            gamma_mode: GammaMode::RandomDiagonal,
            gamma_cap: None,
            seed,
            custom_diagonal: None,
        }
    }

    pub fn custom(epsilon: f64, diagonal: Vec<f64>) -> Self {
        Self {
            epsilon,
            gamma_mode: GammaMode::Custom,
            gamma_cap: None,
            seed: 0,
            custom_diagonal: Some(diagonal),
        }
    }

    fn validate_epsilon(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::BadConfig(format!(
                "epsilon must lie in [0, 1], got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// The symmetrizer `Lambda = U Gamma U^T` built from the Gramian's
/// eigenvectors (descending eigenvalues, deterministic sign convention).
/// Requires `gamma_cap` to be resolved; [`balance`] defaults it to
/// `rho(A)`.
pub fn build_symmetrizer(p: &GramianSolution, config: &BalanceConfig) -> Result<DMatrix<f64>> {
    config.validate_epsilon()?;
    let cap = config.gamma_cap.ok_or_else(|| {
        Error::BadConfig("gamma_cap must be set; balance() defaults it to rho(A)".into())
    })?;
    if cap < 0.0 {
        return Err(Error::BadConfig(format!("gamma_cap must be >= 0, got {cap}")));
    }
    let n = p.p.nrows();
    let gamma_diag: Vec<f64> = match config.gamma_mode {
        GammaMode::ScaledIdentity => vec![cap; n],
        GammaMode::RandomDiagonal => {
            let mut rng = stream::base(config.seed);
            (0..n).map(|_| rng.gen_range(-cap..=cap)).collect()
        }
        GammaMode::Custom => {
            let diag = config
                .custom_diagonal
                .clone()
                .ok_or_else(|| Error::BadConfig("custom mode requires custom_diagonal".into()))?;
            if diag.len() != n {
                return Err(Error::BadConfig(format!(
                    "custom diagonal has length {}, expected {n}",
                    diag.len()
                )));
            }
            if let Some(&v) = diag.iter().find(|v| v.abs() > cap + 1e-15) {
                return Err(Error::BadConfig(format!(
                    "custom diagonal entry {v} exceeds gamma_cap {cap}"
                )));
            }
            diag
        }
    };
    let (_, u) = sorted_symmetric_eigen(&p.p);
    let mut lambda = &u * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(gamma_diag)) * u.transpose();
    crate::matrix::symmetrize_in_place(&mut lambda);
    Ok(lambda)
}

/// The eps-balanced network `(1 - eps) A + eps Lambda`. Guaranteed
/// `rho(A_eps) <= 1 - eps (1 - rho(A))` up to estimation error.
pub fn balance(a: &NetworkMatrix, config: &BalanceConfig) -> Result<NetworkMatrix> {
    config.validate_epsilon()?;
    if config.epsilon == 0.0 {
        return Ok(a.clone());
    }
    let rho = a.spectral_radius()?.rho;
    let mut resolved = config.clone();
    let cap = config.gamma_cap.unwrap_or(rho);
    if cap > rho + 1e-12 {
        return Err(Error::BadConfig(format!(
            "gamma_cap {cap} exceeds rho(A) = {rho}"
        )));
    }
    resolved.gamma_cap = Some(cap);
    let g = solve_gramian(a, DEFAULT_GRAMIAN_TOL)?;
    let lambda = build_symmetrizer(&g, &resolved)?;
    let eps = config.epsilon;
    let balanced = a.entries() * (1.0 - eps) + lambda * eps;
    NetworkMatrix::from_dense(balanced)
}

/// Certified energy caps for one balanced network.
#[derive(Debug, Clone, Serialize)]
pub struct BalanceBoundReport {
    pub n: usize,
    pub epsilon: f64,
    /// `rho(A)`, the gamma of the bound.
    pub gamma: f64,
    pub rho_after: f64,
    /// `1 - eps (1 - gamma)`.
    pub rho_cap: f64,
    pub sigma1_before: f64,
    pub sigma1_after: f64,
    /// `sigma1(P) / (1 - (1 - eps + eps gamma)^2)`.
    pub sigma1_cap: f64,
    pub trace_before: f64,
    pub trace_after: f64,
    /// `trace(P) / (1 - (1 - eps + eps gamma)^2)^2`.
    pub trace_cap: f64,
    pub sigma1_pass: bool,
    pub trace_pass: bool,
    pub rho_pass: bool,
    pub strict_decrease: bool,
}

impl BalanceBoundReport {
    pub fn all_pass(&self) -> bool {
        self.sigma1_pass && self.trace_pass && self.rho_pass
    }
}

/// Solves both Gramians and checks the computed energies against the
/// theoretical caps, pass/fail at `cap * (1 + 1e-6)`.
pub fn balancing_bound_report(
    a: &NetworkMatrix,
    config: &BalanceConfig,
) -> Result<BalanceBoundReport> {
    config.validate_epsilon()?;
    let eps = config.epsilon;
    if eps == 0.0 {
        return Err(Error::BadConfig(
            "bound report needs epsilon in (0, 1]".into(),
        ));
    }
    let gamma = a.spectral_radius()?.rho;
    let g_before = solve_gramian(a, DEFAULT_GRAMIAN_TOL)?;
    let balanced = balance(a, config)?;
    let g_after = solve_gramian(&balanced, DEFAULT_GRAMIAN_TOL)?;
    let sigma1_before = top_singular_value(&g_before.p)?;
    let sigma1_after = top_singular_value(&g_after.p)?;
    let trace_before = g_before.trace();
    let trace_after = g_after.trace();
    let q = (1.0 - eps + eps * gamma).powi(2);
    let sigma1_cap = sigma1_before / (1.0 - q);
    let trace_cap = trace_before / (1.0 - q).powi(2);
    let rho_after = balanced.spectral_radius()?.rho;
    let rho_cap = 1.0 - eps * (1.0 - gamma);
    let tol = 1.0 + 1e-6;
    Ok(BalanceBoundReport {
        n: a.n(),
        epsilon: eps,
        gamma,
        rho_after,
        rho_cap,
        sigma1_before,
        sigma1_after,
        sigma1_cap,
        trace_before,
        trace_after,
        trace_cap,
        sigma1_pass: sigma1_after <= sigma1_cap * tol,
        trace_pass: trace_after <= trace_cap * tol,
        rho_pass: rho_after <= rho_cap + 1e-6,
        strict_decrease: trace_after < trace_before,
    })
}

/// Checks the PSD sandwich bound: with `R = prod_j A^{t_j} Lambda^{tl_j}`,
/// the matrix `B = R^T R` satisfies `B <= gamma^(2 tl) P(A)` where
/// `tl = sum tl_j` and `gamma = rho(A)`.
pub fn verify_psd_lemma(
    a: &NetworkMatrix,
    lambda: &DMatrix<f64>,
    pattern: &[(u32, u32)],
) -> Result<bool> {
    if pattern.len() > 6 {
        return Err(Error::PatternTooLarge(format!(
            "pattern length {} exceeds 6",
            pattern.len()
        )));
    }
    if let Some(&(t, tl)) = pattern.iter().find(|&&(t, tl)| t > 8 || tl > 8) {
        return Err(Error::PatternTooLarge(format!(
            "exponent pair ({t}, {tl}) exceeds 8"
        )));
    }
    let gamma = a.spectral_radius()?.rho;
    let g = solve_gramian(a, DEFAULT_GRAMIAN_TOL)?;
    let n = a.n();
    let mut r = DMatrix::<f64>::identity(n, n);
    let mut total_tl = 0u32;
    for &(t, tl) in pattern {
        r = r * mat_pow(a.entries(), t) * mat_pow(lambda, tl);
        total_tl += tl;
    }
    let b = r.tr_mul(&r);
    let bound = &g.p * gamma.powi(2 * total_tl as i32);
    psd_order_holds(&b, &bound, 1e-8)
}

fn mat_pow(m: &DMatrix<f64>, k: u32) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::identity(n, n);
    for _ in 0..k {
        out *= m;
    }
    out
}

/// One cell of the sweep experiment.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub seed: u64,
    pub epsilon: f64,
    pub h2_before: f64,
    pub h2_after: f64,
    pub cap: f64,
    pub pass: bool,
    pub sigma1_after: f64,
    pub sigma1_cap: f64,
    pub rho_after: f64,
    pub rho_cap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Fraction of cells where balancing strictly reduced the H2-norm;
    /// informational, not an invariant.
    pub strict_decrease_fraction: f64,
}

/// Balancing sweep over seeded Gaussian networks scaled to a common
/// spectral radius, crossed with an epsilon grid. Cells run in parallel
/// per seed with deterministic per-cell results.
pub fn sweep(
    n: usize,
    target_rho: f64,
    seeds: &[u64],
    epsilons: &[f64],
    gamma_mode: GammaMode,
) -> Result<SweepResult> {
    let per_seed: Vec<Result<Vec<SweepRow>>> = seeds
        .par_iter()
        .map(|&seed| {
            let a = topology::gaussian_scaled(n, target_rho, seed)?;
            let mut rows = Vec::with_capacity(epsilons.len());
            for &eps in epsilons {
                let config = BalanceConfig {
                    epsilon: eps,
                    gamma_mode,
                    gamma_cap: None,
                    seed,
                    custom_diagonal: None,
                };
                let report = balancing_bound_report(&a, &config)?;
                rows.push(SweepRow {
                    seed,
                    epsilon: eps,
                    h2_before: report.trace_before,
                    h2_after: report.trace_after,
                    cap: report.trace_cap,
                    pass: report.all_pass(),
                    sigma1_after: report.sigma1_after,
                    sigma1_cap: report.sigma1_cap,
                    rho_after: report.rho_after,
                    rho_cap: report.rho_cap,
                });
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_seed {
        rows.extend(r?);
    }
    let decreases = rows.iter().filter(|r| r.h2_after < r.h2_before).count();
    let strict_decrease_fraction = decreases as f64 / rows.len().max(1) as f64;
    Ok(SweepResult {
        rows,
        strict_decrease_fraction,
    })
}
