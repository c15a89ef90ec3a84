//! Gramian-based robustness measures: max disruption energy `M(A)`,
//! average disruption energy `E(A)`, the H2-norm `trace(P)`, its scaled
//! variant `(1 - rho) trace(P)`, and impulse-response energy simulation.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{
    solve_gramian, top_singular_value, NetworkMatrix, DEFAULT_GRAMIAN_TOL, STABILITY_MARGIN,
};

/// Default impulse-simulation horizon; highly non-normal matrices grow
/// long transients before decaying.
pub const DEFAULT_HORIZON: usize = 1_000_000;

/// The five energy measures of one network.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub n: usize,
    /// `sigma_1(P)`: worst-case energy over unit shocks.
    pub max_norm: f64,
    /// `trace(P) / n`: expected energy per node under identity-covariance
    /// shocks.
    pub avg_norm: f64,
    /// `trace(P)`.
    pub h2: f64,
    /// `(1 - rho) * trace(P)`.
    pub scaled_h2: f64,
    pub rho: f64,
    #[serde(skip)]
    pub distance_to_instability: f64,
}

/// All five measures from one Gramian solve and one spectral radius
/// estimate.
pub fn energy_report(a: &NetworkMatrix) -> Result<EnergyReport> {
    let est = a.spectral_radius()?;
    let g = solve_gramian(a, DEFAULT_GRAMIAN_TOL)?;
    let h2 = g.trace();
    let n = a.n();
    let max_norm = top_singular_value(&g.p)?;
    Ok(EnergyReport {
        n,
        max_norm,
        avg_norm: h2 / n as f64,
        h2,
        scaled_h2: (1.0 - est.rho) * h2,
        rho: est.rho,
        distance_to_instability: 1.0 - est.rho,
    })
}

/// Closed form `M(A) = 1 / (1 - rho^2)` for symmetric stable matrices;
/// no Lyapunov solve involved.
pub fn symmetric_max_norm(a: &NetworkMatrix) -> Result<f64> {
    if !a.is_symmetric() {
        return Err(Error::NotSymmetric {
            gap: crate::matrix::symmetry_gap(a.entries()),
        });
    }
    let est = a.spectral_radius()?;
    let limit = 1.0 - STABILITY_MARGIN;
    if est.rho >= limit {
        return Err(Error::UnstableMatrix {
            rho: est.rho,
            limit,
        });
    }
    Ok(1.0 / (1.0 - est.rho * est.rho))
}

/// Total signal energy of the shock response: the state starts at the
/// shock itself and the sum accumulates `||A^t omega||^2` until the
/// increment drops below `1e-14` or the horizon is hit.
pub fn impulse_energy(a: &NetworkMatrix, omega: &DVector<f64>, horizon: usize) -> Result<f64> {
    let norm = omega.norm();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::BadShock(norm));
    }
    let est = a.spectral_radius()?;
    let limit = 1.0 - STABILITY_MARGIN;
    if est.rho >= limit {
        return Err(Error::UnstableMatrix {
            rho: est.rho,
            limit,
        });
    }
    if omega.len() != a.n() {
        return Err(Error::DimensionMismatch(format!(
            "shock has length {}, matrix is {}x{}",
            omega.len(),
            a.n(),
            a.n()
        )));
    }
    let mut x = omega.clone();
    let mut energy = 0.0;
    for _ in 0..=horizon {
        let inc = x.norm_squared();
        energy += inc;
        if inc < 1e-14 {
            break;
        }
        x = a.entries() * &x;
    }
    Ok(energy)
}
