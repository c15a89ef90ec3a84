//! Acceptance suite: one test per criterion, each printing a single
//! pass/fail line. Criteria 7 and 8 contain clauses that are analytically
//! unattainable as stated; they are implemented verbatim and fail with
//! the exact measured values (see the test messages).

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use netrobust::balancing::{sweep, GammaMode};
use netrobust::controllers::{
    eval_half_line_controller, optimize_asymmetric, optimize_symmetric, platoon_energy,
};
use netrobust::economic::{
    assess_network, deficit_recursion, regular_io_table, star_io_table, surrogate_table,
};
use netrobust::energy::energy_report;
use netrobust::matrix::{
    psd_order_holds, resolvent_column_sums, solve_gramian, top_singular_value, NetworkMatrix,
};
use netrobust::scaling::{fit_series, run_study, FitConfig, Measure, ScalingClass};
use netrobust::stream;
use netrobust::tailrisk::{tail_risk_rate, ShockDistribution, Verdict};
use netrobust::topology::{gaussian_scaled, generate, TopologySpec};

fn conclude(number: u32, name: &str, failures: Vec<String>, detail: String) {
    let status = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!("[acceptance] criterion {number:02} {name}: {status} — {detail}");
    assert!(
        failures.is_empty(),
        "criterion {number:02} {name} failed: {}",
        failures.join("; ")
    );
}

#[test]
fn acceptance_01_directed_line_exact_gramian_law() {
    let t0 = Instant::now();
    let failures: Vec<String> = (2usize..=500)
        .into_par_iter()
        .filter_map(|n| {
            let a = generate(&TopologySpec::directed_line(), n).ok()?;
            let r = energy_report(&a).ok()?;
            let want_h2 = (n * (n + 1)) as f64 / 2.0;
            let want_max = n as f64;
            let h2_ok = (r.h2 - want_h2).abs() <= 1e-8 * want_h2;
            let max_ok = (r.max_norm - want_max).abs() <= 1e-8 * want_max;
            if h2_ok && max_ok {
                None
            } else {
                Some(format!("n={n}: h2={} max={}", r.h2, r.max_norm))
            }
        })
        .collect();
    let elapsed = t0.elapsed().as_secs_f64();
    let mut failures = failures;
    if elapsed >= 30.0 {
        failures.push(format!("runtime {elapsed:.1}s exceeds 30s"));
    }
    conclude(
        1,
        "directed-line exact Gramian law",
        failures,
        format!("n = 2..=500, h2 = n(n+1)/2 and max = n within 1e-8; {elapsed:.2}s"),
    );
}

#[test]
fn acceptance_02_symmetric_closed_form() {
    let t0 = Instant::now();
    let cases: Vec<usize> = (0..100).collect();
    let failures: Vec<String> = cases
        .par_iter()
        .filter_map(|&i| {
            let n = 20 + (i * 97) % 181;
            let target = 0.30 + 0.0065 * i as f64;
            let mut rng = stream::base(2000 + i as u64);
            let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let sym = (&g + g.transpose()) * 0.5;
            let raw = NetworkMatrix::from_dense(sym).ok()?;
            let rho_raw = raw.spectral_radius().ok()?.rho;
            let a = NetworkMatrix::from_dense(raw.entries() * (target / rho_raw)).ok()?;
            let rho = a.spectral_radius().ok()?.rho;
            let p = solve_gramian(&a, 1e-10).ok()?;
            let sigma1 = top_singular_value(&p.p).ok()?;
            let closed = 1.0 / (1.0 - rho * rho);
            if (sigma1 - closed).abs() <= 1e-6 * sigma1 {
                None
            } else {
                Some(format!(
                    "case {i} (n={n}, rho={rho:.3}): sigma1={sigma1} closed={closed}"
                ))
            }
        })
        .collect();
    conclude(
        2,
        "symmetric closed form",
        failures,
        format!(
            "100 seeded symmetric matrices (n <= 200): |sigma1(P) - 1/(1-rho^2)| <= 1e-6 sigma1; {:.2}s",
            t0.elapsed().as_secs_f64()
        ),
    );
}

fn expect_class(
    failures: &mut Vec<String>,
    label: &str,
    fit: &netrobust::scaling::ScalingFit,
    class: ScalingClass,
) {
    if fit.class != class {
        failures.push(format!(
            "{label}: class {:?} (slope {:.3}), expected {:?}",
            fit.class, fit.slope, class
        ));
    }
}

fn expect_slope(
    failures: &mut Vec<String>,
    label: &str,
    fit: &netrobust::scaling::ScalingFit,
    center: f64,
    band: f64,
) {
    if fit.class != ScalingClass::Polynomial || (fit.slope - center).abs() > band {
        failures.push(format!(
            "{label}: class {:?} slope {:.3}, expected polynomial {center} +/- {band}",
            fit.class, fit.slope
        ));
    }
}

#[test]
fn acceptance_03_scaling_table_reproduction() {
    let t0 = Instant::now();
    let grid = [8usize, 16, 32, 64, 128, 256];
    let config = FitConfig::default();
    let mut failures = Vec::new();

    let fit_of = |spec: &TopologySpec, measure: Measure, seeds: &[u64]| {
        let study = run_study(spec, &grid, measure, seeds).expect("study");
        (
            fit_series(&grid, &study.values, &config).expect("fit"),
            study,
        )
    };

    let (s_m, _) = fit_of(&TopologySpec::star(0.9), Measure::MaxNorm, &[]);
    expect_slope(&mut failures, "S max_norm", &s_m, 1.0, 0.15);
    let (s_e, _) = fit_of(&TopologySpec::star(0.9), Measure::AvgNorm, &[]);
    expect_class(&mut failures, "S avg_norm", &s_e, ScalingClass::Constant);

    for (label, spec) in [
        ("R", TopologySpec::regular(0.5)),
        ("C", TopologySpec::cycle(0.5)),
    ] {
        let (m, _) = fit_of(&spec, Measure::MaxNorm, &[]);
        expect_class(&mut failures, &format!("{label} max_norm"), &m, ScalingClass::Constant);
        let (e, _) = fit_of(&spec, Measure::AvgNorm, &[]);
        expect_class(&mut failures, &format!("{label} avg_norm"), &e, ScalingClass::Constant);
    }

    let (dl_m, _) = fit_of(&TopologySpec::directed_line(), Measure::MaxNorm, &[]);
    expect_slope(&mut failures, "DL max_norm", &dl_m, 1.0, 0.15);
    let (dl_e, _) = fit_of(&TopologySpec::directed_line(), Measure::AvgNorm, &[]);
    expect_slope(&mut failures, "DL avg_norm", &dl_e, 1.0, 0.15);

    let seeds: Vec<u64> = (1..=10).collect();
    let bound = 1.2 / (1.0 - 2.0 * 0.4);
    for measure in [Measure::MaxNorm, Measure::AvgNorm] {
        let (fit, study) = fit_of(&TopologySpec::wigner(0.4, 0), measure, &seeds);
        expect_class(
            &mut failures,
            &format!("Wigner {measure:?}"),
            &fit,
            ScalingClass::Constant,
        );
        if let Some(&worst) = study
            .values
            .iter()
            .find(|&&v| v > bound)
        {
            failures.push(format!("Wigner {measure:?} value {worst} exceeds {bound}"));
        }
    }

    let elapsed = t0.elapsed().as_secs_f64();
    if elapsed >= 120.0 {
        failures.push(format!("runtime {elapsed:.1}s exceeds 120s"));
    }
    conclude(
        3,
        "scaling table reproduction",
        failures,
        format!("S/R/C/DL/Wigner max and avg norms on {{8..256}}; {elapsed:.2}s"),
    );
}

#[test]
fn acceptance_04_exponential_platoon_growth() {
    let t0 = Instant::now();
    let grid: Vec<usize> = (4..=24).collect();
    let mut failures = Vec::new();
    let mut h2 = Vec::new();
    for &n in &grid {
        let p = platoon_energy(&[0.5], n).expect("platoon energy");
        let check = p.jordan_check.as_ref().expect("jordan check in range");
        if check.rel_err > 1e-9 {
            failures.push(format!("n={n}: Jordan norm rel err {}", check.rel_err));
        }
        if p.report.rho > 0.5 + 1e-6 {
            failures.push(format!("n={n}: rho {} above 0.5 + 1e-6", p.report.rho));
        }
        h2.push(p.report.h2);
    }
    let fit = fit_series(&grid, &h2, &FitConfig::default()).expect("fit");
    if fit.class != ScalingClass::Exponential {
        failures.push(format!("h2 class {:?}, expected exponential", fit.class));
    }
    if fit.semilog_slope < 0.5 {
        failures.push(format!("semilog slope {} below 0.5", fit.semilog_slope));
    }
    conclude(
        4,
        "exponential platoon growth",
        failures,
        format!(
            "|J^n|_inf = 1.5^n - 1 within 1e-9, h2 exponential (semilog slope {:.3}) with rho <= 0.5; {:.2}s",
            fit.semilog_slope,
            t0.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn acceptance_05_balancing_bounds() {
    let t0 = Instant::now();
    let seeds: Vec<u64> = (1..=50).collect();
    let epsilons: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let result = sweep(40, 0.9, &seeds, &epsilons, GammaMode::RandomDiagonal).expect("sweep");
    let mut failures = Vec::new();
    for row in &result.rows {
        if row.sigma1_after > row.sigma1_cap * (1.0 + 1e-6) {
            failures.push(format!(
                "seed {} eps {}: sigma1 {} above cap {}",
                row.seed, row.epsilon, row.sigma1_after, row.sigma1_cap
            ));
        }
        if row.rho_after > row.rho_cap + 1e-6 {
            failures.push(format!(
                "seed {} eps {}: rho {} above cap {}",
                row.seed, row.epsilon, row.rho_after, row.rho_cap
            ));
        }
    }
    conclude(
        5,
        "balancing bounds",
        failures,
        format!(
            "50 seeds x 9 epsilons at n=40, rho=0.9: sigma1 and rho caps hold; strict-decrease fraction {:.3} (informational); {:.2}s",
            result.strict_decrease_fraction,
            t0.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn acceptance_06_psd_lemma_suite() {
    let t0 = Instant::now();
    let n = 8;
    let mut failures = Vec::new();

    // A^T B + B^T A <= A^T A + B^T B.
    for seed in 0..200u64 {
        let mut rng = stream::base(6000 + seed);
        let a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let b = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let lhs = a.tr_mul(&b) + b.tr_mul(&a);
        let rhs = a.tr_mul(&a) + b.tr_mul(&b);
        if !psd_order_holds(&lhs, &rhs, 1e-8).unwrap() {
            failures.push(format!("trace_bnd seed {seed}"));
        }
    }

    // (sum A_i)^T (sum A_i) <= P * sum A_i^T A_i.
    for seed in 0..200u64 {
        let mut rng = stream::base(7000 + seed);
        let p = 2 + (seed % 5) as usize; // 2..=6 summands
        let mats: Vec<DMatrix<f64>> = (0..p)
            .map(|_| DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let total = mats.iter().fold(DMatrix::zeros(n, n), |acc, m| acc + m);
        let lhs = total.tr_mul(&total);
        let rhs = mats
            .iter()
            .fold(DMatrix::zeros(n, n), |acc, m| acc + m.tr_mul(m))
            * p as f64;
        if !psd_order_holds(&lhs, &rhs, 1e-8).unwrap() {
            failures.push(format!("sum_trace_bnd seed {seed} (P={p})"));
        }
    }

    // Lambda P Lambda <= gamma^2 P.
    for seed in 0..200u64 {
        let a = gaussian_scaled(n, 0.7, 8000 + seed).unwrap();
        let g = solve_gramian(&a, 1e-12).unwrap();
        let gamma = a.spectral_radius().unwrap().rho;
        let mut config = netrobust::balancing::BalanceConfig::random_diagonal(0.5, seed);
        config.gamma_cap = Some(gamma);
        let lambda = netrobust::balancing::build_symmetrizer(&g, &config).unwrap();
        let lhs = &lambda * &g.p * &lambda;
        let rhs = &g.p * (gamma * gamma);
        if !psd_order_holds(&lhs, &rhs, 1e-8).unwrap() {
            failures.push(format!("ones_psd seed {seed}"));
        }
    }

    // Sandwich patterns up to length 3, exponents <= 8.
    for seed in 0..200u64 {
        let a = gaussian_scaled(n, 0.7, 9000 + seed).unwrap();
        let g = solve_gramian(&a, 1e-12).unwrap();
        let gamma = a.spectral_radius().unwrap().rho;
        let mut config = netrobust::balancing::BalanceConfig::random_diagonal(0.5, seed ^ 17);
        config.gamma_cap = Some(gamma);
        let lambda = netrobust::balancing::build_symmetrizer(&g, &config).unwrap();
        let mut rng = stream::base(9500 + seed);
        let len = 1 + (seed % 3) as usize;
        let pattern: Vec<(u32, u32)> = (0..len)
            .map(|_| (rng.gen_range(0..=8), rng.gen_range(0..=8)))
            .collect();
        match netrobust::balancing::verify_psd_lemma(&a, &lambda, &pattern) {
            Ok(true) => {}
            Ok(false) => failures.push(format!("psd_lemma seed {seed} pattern {pattern:?}")),
            Err(e) => failures.push(format!("psd_lemma seed {seed} error {e}")),
        }
    }

    conclude(
        6,
        "PSD lemma suite",
        failures,
        format!(
            "trace_bnd, sum_trace_bnd, ones_psd, sandwich patterns: 200 seeded instances each at min-eig >= -1e-8; {:.2}s",
            t0.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn acceptance_07_controller_scaling() {
    let t0 = Instant::now();
    let mut failures = Vec::new();

    let sym_grid = [8usize, 16, 32, 64];
    let sym: Vec<_> = sym_grid
        .iter()
        .map(|&n| optimize_symmetric(n, 20_000, 42).expect("sym opt"))
        .collect();
    let sym_h2: Vec<f64> = sym.iter().map(|r| r.h2).collect();
    let sym_fit = fit_series(&sym_grid, &sym_h2, &FitConfig::default()).expect("fit");
    if sym_fit.loglog_slope < 1.9 {
        failures.push(format!(
            "symmetric h2 slope {:.3} < 1.9 (true optimum; objective is convex, see decisions ledger: finite-size onset of the n^2 law reads ~1.81 on this grid)",
            sym_fit.loglog_slope
        ));
    }
    let sym_scaled: Vec<f64> = sym.iter().map(|r| r.scaled_h2).collect();
    let scaled_fit = fit_series(&sym_grid, &sym_scaled, &FitConfig::default()).expect("fit");
    expect_class(
        &mut failures,
        "symmetric scaled_h2",
        &scaled_fit,
        ScalingClass::Constant,
    );

    let half_grid = [16usize, 32, 64, 128];
    let half_h2: Vec<f64> = half_grid
        .iter()
        .map(|&n| eval_half_line_controller(n).expect("half line").h2)
        .collect();
    let half_fit = fit_series(&half_grid, &half_h2, &FitConfig::default()).expect("fit");
    if half_fit.loglog_slope > 1.6 {
        failures.push(format!("half-line slope {:.3} > 1.6", half_fit.loglog_slope));
    }

    for (idx, &n) in sym_grid.iter().enumerate() {
        let asym = optimize_asymmetric(n, 4_000, 42).expect("asym opt");
        if asym.h2 > sym[idx].h2 + 1e-6 {
            failures.push(format!(
                "n={n}: asymmetric {} above symmetric {}",
                asym.h2, sym[idx].h2
            ));
        }
    }

    conclude(
        7,
        "controller scaling",
        failures,
        format!(
            "sym slope {:.3} (>=1.9 required), scaled_h2 {:?}, half-line slope {:.3} (<=1.6), asym <= sym everywhere; {:.2}s",
            sym_fit.loglog_slope,
            scaled_fit.class,
            half_fit.loglog_slope,
            t0.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn acceptance_08_tail_risk_dichotomy() {
    let t0 = Instant::now();
    let mut failures = Vec::new();

    // Averaging network: spec requires a non-decreasing sequence bounded
    // below by 0.05; the analytic rates are (0.0667, 0.0543, 0.0459).
    let mut avg_rates = Vec::new();
    for &n in &[20usize, 40, 80] {
        let a = NetworkMatrix::scaled_identity(n, 0.5).unwrap();
        let r = tail_risk_rate(&a, 0.5, ShockDistribution::Gaussian, 400_000, 80 + n as u64)
            .expect("rate");
        avg_rates.push(r.rate);
    }
    for w in avg_rates.windows(2) {
        if w[1] < w[0] {
            failures.push(format!(
                "averaging rates not non-decreasing: {avg_rates:?} (analytic sequence decreases toward z^2(1-mu)^2/2 = 0.03125; see decisions ledger)"
            ));
            break;
        }
    }
    if let Some(&low) = avg_rates.iter().find(|&&r| r < 0.05) {
        failures.push(format!(
            "averaging rate {low:.4} below 0.05 (analytic value at n=80 is 0.0459; see decisions ledger)"
        ));
    }

    // Rank-one hub: rate decays toward zero.
    let mut hub_rates = Vec::new();
    for &n in &[20usize, 40, 80] {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, 0)] = 0.5;
        }
        let a = NetworkMatrix::from_dense(m).unwrap();
        let r = tail_risk_rate(&a, 0.5, ShockDistribution::Gaussian, 400_000, 90 + n as u64)
            .expect("rate");
        hub_rates.push(r.rate);
    }
    if !(hub_rates[1] < hub_rates[0] && hub_rates[2] < hub_rates[1]) {
        failures.push(format!("rank-one rates not decreasing: {hub_rates:?}"));
    }
    if hub_rates[2] > 0.5 * hub_rates[0] {
        failures.push(format!(
            "rank-one final rate {} above half the first {}",
            hub_rates[2], hub_rates[0]
        ));
    }

    // Monte Carlo versus analytic probability: 95% CIs must cover the
    // exact value in at least 93 of 100 seeded trials.
    let covered: usize = (0..100u64)
        .into_par_iter()
        .filter(|&t| {
            let n = 5 + (t as usize * 7) % 46;
            let a = gaussian_scaled(n, 0.3 + 0.006 * t as f64, 3000 + t).unwrap();
            let c = resolvent_column_sums(&a).unwrap();
            let z = 1.5 * c.norm() / n as f64;
            let r = tail_risk_rate(&a, z, ShockDistribution::Gaussian, 20_000, 4000 + t).unwrap();
            let analytic = r.analytic_p.unwrap();
            r.p_ci.0 <= analytic && analytic <= r.p_ci.1
        })
        .count();
    if covered < 93 {
        failures.push(format!("analytic probability covered in only {covered}/100 CIs"));
    }

    conclude(
        8,
        "tail-risk dichotomy",
        failures,
        format!(
            "averaging rates {avg_rates:?} (clause requires non-decreasing >= 0.05), hub rates {hub_rates:?} decay, CI coverage {covered}/100; {:.2}s",
            t0.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn acceptance_09_macro_diagnostic_separation() {
    let t0 = Instant::now();
    let grid = [16usize, 32, 64, 128, 256];
    let config = FitConfig::default();
    let mut failures = Vec::new();

    let star = TopologySpec::star(0.9);
    let regular = TopologySpec::regular(0.5);
    let cycle = TopologySpec::cycle(0.5);

    let fit_of = |spec: &TopologySpec, measure: Measure| {
        let study = run_study(spec, &grid, measure, &[]).expect("study");
        (fit_series(&grid, &study.values, &config).expect("fit"), study)
    };

    for (label, spec) in [("R", &regular), ("C", &cycle)] {
        let (diag, _) = fit_of(spec, Measure::MacroDiagnostic);
        expect_class(
            &mut failures,
            &format!("{label} diagnostic"),
            &diag,
            ScalingClass::Constant,
        );
        let (l1, _) = fit_of(spec, Measure::GramianL1);
        expect_class(
            &mut failures,
            &format!("{label} gramian_l1"),
            &l1,
            ScalingClass::Constant,
        );
        let (cent, study) = fit_of(spec, Measure::CentralityRatio);
        let _ = cent;
        if let Some(&bad) = study.values.iter().find(|&&v| (v - 1.0).abs() > 1e-8) {
            failures.push(format!("{label} centrality ratio {bad} differs from 1"));
        }
    }

    let (s_diag, _) = fit_of(&star, Measure::MacroDiagnostic);
    if s_diag.slope < 0.35 {
        failures.push(format!("S diagnostic slope {:.3} below 0.35", s_diag.slope));
    }
    let (s_l1, _) = fit_of(&star, Measure::GramianL1);
    if s_l1.slope < 0.8 {
        failures.push(format!("S gramian_l1 slope {:.3} below 0.8", s_l1.slope));
    }

    conclude(
        9,
        "macro diagnostic separation",
        failures,
        format!(
            "R/C constant with centrality 1, S diagnostic slope {:.3} and L1 slope {:.3}; {:.2}s",
            s_diag.slope,
            s_l1.slope,
            t0.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn acceptance_10_economic_pipeline() {
    let t0 = Instant::now();
    let mut failures = Vec::new();

    // Surrogate 379-sector table: trajectory aggregate vs resolvent.
    let table = surrogate_table(379, 20_250_808, 3.0, 0.51).expect("surrogate");
    let m = table.effective_matrix().unwrap();
    let mut rng = stream::base(10_101);
    let shock = DVector::from_fn(379, |_, _| rng.sample::<f64, _>(StandardNormal));
    let traj = deficit_recursion(&table, &shock, 100_000).expect("recursion");
    let c = resolvent_column_sums(&m).unwrap();
    let closed: f64 = c.dot(&shock);
    if (traj.x_inf - closed).abs() > 1e-10 * closed.abs().max(1.0) {
        failures.push(format!(
            "trajectory {} vs resolvent {} beyond 1e-10",
            traj.x_inf, closed
        ));
    }

    let star = star_io_table(64, 0.6).unwrap();
    let sa = assess_network(&star, ShockDistribution::Gaussian, 20_000, 9).expect("assess star");
    if sa.report.verdict != Verdict::TailRisk {
        failures.push(format!("star verdict {:?}", sa.report.verdict));
    }
    let regular = regular_io_table(64, 0.6).unwrap();
    let ra = assess_network(&regular, ShockDistribution::Gaussian, 20_000, 9).expect("assess reg");
    if ra.report.verdict != Verdict::NoTailRisk {
        failures.push(format!("regular verdict {:?}", ra.report.verdict));
    }

    conclude(
        10,
        "economic pipeline consistency",
        failures,
        format!(
            "379-sector surrogate trajectory matches resolvent; star => tail-risk, regular => no-tail-risk (the published commodity figure itself is not reproducible: dataset not shipped, surrogate separation substitutes); {:.2}s",
            t0.elapsed().as_secs_f64()
        ),
    );
}
