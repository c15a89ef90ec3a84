//! Brute-force oracle verification of the numeric kernels: every value
//! asserted here was computed by an independent route first.

mod common;

use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use netrobust::controllers::{
    assemble_k, optimize_symmetric, platoon_energy, symmetric_h2_closed_form, PlatoonGains,
};
use netrobust::matrix::{
    psd_order_holds, resolvent_column_sums, solve_gramian, top_singular_value, NetworkMatrix,
};
use netrobust::scaling::{fit_series, FitConfig};
use netrobust::topology::{gaussian_scaled, generate, TopologySpec};

use common::{eig_radius, kronecker_gramian, sym_max_eig, sym_min_eig};

#[test]
fn gramian_matches_kronecker_oracle_on_star() {
    let a = generate(&TopologySpec::star(0.9), 4).unwrap();
    let g = solve_gramian(&a, 1e-12).unwrap();
    let oracle = kronecker_gramian(a.entries());
    for i in 0..4 {
        for j in 0..4 {
            assert_relative_eq!(g.p[(i, j)], oracle[(i, j)], epsilon = 1e-8);
        }
    }
}

#[test]
fn gramian_matches_kronecker_oracle_on_seeded_matrices() {
    for (idx, n) in (2..=12).enumerate() {
        let a = gaussian_scaled(n, 0.3 + 0.05 * (idx % 7) as f64, 100 + idx as u64).unwrap();
        let g = solve_gramian(&a, 1e-12).unwrap();
        let oracle = kronecker_gramian(a.entries());
        for i in 0..n {
            for j in 0..n {
                assert_relative_eq!(g.p[(i, j)], oracle[(i, j)], epsilon = 1e-8);
            }
        }
        // P >= I in the Loewner order.
        let shifted = &g.p - DMatrix::<f64>::identity(n, n);
        assert!(sym_min_eig(&shifted) >= -1e-8);
    }
}

#[test]
fn gelfand_estimate_matches_dense_eigensolve() {
    for seed in 0..10u64 {
        let a = gaussian_scaled(20, 0.6, 500 + seed).unwrap();
        let est = a.spectral_radius().unwrap();
        let oracle = eig_radius(a.entries());
        assert_relative_eq!(est.rho, oracle, epsilon = 1e-7);
    }
}

#[test]
fn symmetric_radius_matches_full_eigensolve() {
    let mut rng = netrobust::stream::base(61);
    use rand::Rng;
    let g = DMatrix::from_fn(20, 20, |_, _| rng.gen_range(-1.0..1.0));
    let sym = (&g + g.transpose()) * 0.5;
    let a = NetworkMatrix::from_dense(sym.clone()).unwrap();
    let est = a.spectral_radius().unwrap();
    let oracle = eig_radius(&sym);
    assert_relative_eq!(est.rho, oracle, epsilon = 1e-8);
}

#[test]
fn gelfand_sandwich_on_nearly_symmetric_input() {
    // A tiny asymmetric perturbation forces the Gelfand path; the result
    // must agree with the symmetric eigensolve of the symmetric part.
    for seed in 0..5u64 {
        let a = gaussian_scaled(16, 0.7, 700 + seed).unwrap();
        let sym = (a.entries() + a.entries().transpose()) * 0.5;
        let mut drifted = sym.clone();
        drifted[(0, 1)] += 1e-11;
        let nm = NetworkMatrix::from_dense(drifted).unwrap();
        assert!(!nm.is_symmetric());
        let est = nm.spectral_radius().unwrap();
        assert_eq!(
            est.method,
            netrobust::matrix::SpectralMethod::GelfandSquaring
        );
        let oracle = a.entries() * 0.0 + &sym;
        let exact = eig_radius(&oracle);
        assert_relative_eq!(est.rho, exact, epsilon = 1e-6);
    }
}

#[test]
fn top_singular_value_matches_eigensolve_oracle() {
    let a = generate(&TopologySpec::star(0.9), 4).unwrap();
    let g = solve_gramian(&a, 1e-12).unwrap();
    assert_relative_eq!(
        top_singular_value(&g.p).unwrap(),
        sym_max_eig(&g.p),
        epsilon = 1e-8
    );
    for seed in 0..10u64 {
        let b = gaussian_scaled(15, 0.8, 900 + seed).unwrap();
        let p = solve_gramian(&b, 1e-12).unwrap().p;
        assert_relative_eq!(
            top_singular_value(&p).unwrap(),
            sym_max_eig(&p),
            max_relative = 1e-8
        );
    }
}

#[test]
fn resolvent_sums_match_explicit_inverse() {
    let a = generate(&TopologySpec::regular(0.5), 4).unwrap();
    let c = resolvent_column_sums(&a).unwrap();
    let inv = (DMatrix::<f64>::identity(4, 4) - a.entries())
        .try_inverse()
        .unwrap();
    for j in 0..4 {
        let col: f64 = (0..4).map(|i| inv[(i, j)]).sum();
        assert_relative_eq!(c[j], col, epsilon = 1e-10);
        assert_relative_eq!(c[j], c[0], epsilon = 1e-10);
    }
}

#[test]
fn perron_oracle_values() {
    let r5 = generate(&TopologySpec::regular(0.5), 5).unwrap();
    let pv = netrobust::matrix::perron_vector(&r5).unwrap();
    assert_relative_eq!(pv.lambda_pf, 0.5, epsilon = 1e-9);
    for i in 0..5 {
        assert_relative_eq!(pv.pi_left[i], 0.2, epsilon = 1e-8);
    }
    let s6 = generate(&TopologySpec::star(0.9), 6).unwrap();
    let pv = netrobust::matrix::perron_vector(&s6).unwrap();
    for i in 0..6 {
        assert_relative_eq!(pv.v_right[i], 1.0 / 6.0, epsilon = 1e-8);
    }
}

#[test]
fn symmetrizer_ordering_bound_via_eigensolve() {
    // Lambda P(A) Lambda <= gamma^2 P(A) checked with the dense solver.
    for seed in 0..20u64 {
        let a = gaussian_scaled(10, 0.7, 40 + seed).unwrap();
        let g = solve_gramian(&a, 1e-12).unwrap();
        let mut config = netrobust::balancing::BalanceConfig::random_diagonal(0.5, seed);
        config.gamma_cap = Some(a.spectral_radius().unwrap().rho);
        let lambda = netrobust::balancing::build_symmetrizer(&g, &config).unwrap();
        let lhs = &lambda * &g.p * &lambda;
        let gamma = a.spectral_radius().unwrap().rho;
        let rhs = &g.p * (gamma * gamma);
        assert!(psd_order_holds(&lhs, &rhs, 1e-8).unwrap());
    }
}

#[test]
fn symmetric_controller_beats_nested_grid_oracle_at_n2() {
    // Exhaustive-then-refined grid over the three gains of the n = 2
    // closed form.
    let objective = |k: &[f64; 3]| -> f64 {
        let gains = PlatoonGains::symmetric(2, k.to_vec()).unwrap();
        let km = assemble_k(&gains).unwrap();
        symmetric_h2_closed_form(&km).unwrap_or(f64::INFINITY)
    };
    let mut best = (f64::INFINITY, [0.0f64; 3]);
    let coarse: Vec<f64> = (1..100).map(|i| i as f64 * 0.02).collect();
    for &a in &coarse {
        for &b in &coarse {
            for &c in &coarse {
                let v = objective(&[a, b, c]);
                if v < best.0 {
                    best = (v, [a, b, c]);
                }
            }
        }
    }
    // Refine around the best coarse cell down to 1e-3 resolution.
    for scale in [0.01f64, 0.001] {
        let center = best.1;
        for da in -10..=10 {
            for db in -10..=10 {
                for dc in -10..=10 {
                    let cand = [
                        (center[0] + da as f64 * scale).clamp(1e-3, 2.0 - 1e-3),
                        (center[1] + db as f64 * scale).clamp(1e-3, 2.0 - 1e-3),
                        (center[2] + dc as f64 * scale).clamp(1e-3, 2.0 - 1e-3),
                    ];
                    let v = objective(&cand);
                    if v < best.0 {
                        best = (v, cand);
                    }
                }
            }
        }
    }
    let opt = optimize_symmetric(2, 20_000, 11).unwrap();
    assert!(
        (opt.h2 - best.0).abs() <= 1e-4,
        "optimizer {} vs grid oracle {}",
        opt.h2,
        best.0
    );
}

#[test]
fn platoon_semilog_slope_respects_derived_floor() {
    // trace(P) >= ||J^n||_inf^2 / n gives a semilog slope floor of
    // 2 ln(1.5) up to the polynomial correction; assert 90% of it.
    let grid: Vec<usize> = (4..=24).collect();
    let mut values = Vec::new();
    for &n in &grid {
        values.push(platoon_energy(&[0.5], n).unwrap().report.h2);
    }
    let fit = fit_series(&grid, &values, &FitConfig::default()).unwrap();
    assert_eq!(fit.class, netrobust::scaling::ScalingClass::Exponential);
    let floor = 2.0 * 1.5f64.ln() * 0.9;
    assert!(
        fit.semilog_slope >= floor,
        "slope {} below floor {floor}",
        fit.semilog_slope
    );
}

#[test]
fn impulse_energy_of_star_hub_matches_direct_simulation() {
    // Direct state recursion as the oracle for the energy kernel.
    let s4 = generate(&TopologySpec::star(0.9), 4).unwrap();
    let e1 = DVector::from_fn(4, |i, _| if i == 0 { 1.0 } else { 0.0 });
    let mut x = e1.clone();
    let mut oracle = 0.0;
    for _ in 0..10_000 {
        oracle += x.norm_squared();
        x = s4.entries() * &x;
    }
    let energy = netrobust::energy::impulse_energy(&s4, &e1, 1_000_000).unwrap();
    assert_relative_eq!(energy, oracle, max_relative = 1e-10);
}
