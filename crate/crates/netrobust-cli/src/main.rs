//! Command-line front end: energy, balance, tailrisk, controller, scaling
//! and economy subcommands with config-file driven batch runs. Exit codes:
//! 0 success, 1 computational error, 2 usage error. Every output embeds
//! the resolved config and seed; fixed seeds give byte-identical files
//! regardless of thread count.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use netrobust::balancing::{self, GammaMode};
use netrobust::controllers;
use netrobust::economic;
use netrobust::energy;
use netrobust::error::Error as LibError;
use netrobust::scaling::{self, FitConfig, Measure};
use netrobust::tailrisk::{self, ShockDistribution, TailRiskParams};
use netrobust::topology::{self, AdjacencySource, DlOrientation, TopologyKind, TopologySpec};

#[derive(Parser)]
#[command(
    name = "netrobust",
    about = "Robustness, balancing, tail-risk and controller scaling analysis for large linear networks",
    version
)]
struct Cli {
    /// Worker threads (default: available cores). Results do not depend
    /// on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON config file; explicit flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Energy measures of one network.
    Energy(EnergyArgs),
    /// Growth-law study of a measure over a size grid.
    Scaling(ScalingArgs),
    /// Spectral-balancing sweep over seeded Gaussian networks.
    Balance(BalanceArgs),
    /// Tail-risk reports over a size grid plus a sequence verdict.
    Tailrisk(TailriskArgs),
    /// Platoon controller optimization and evaluation.
    Controller(ControllerArgs),
    /// Input-output economy tools.
    #[command(subcommand)]
    Economy(EconomyCmd),
}

#[derive(Args, Default)]
struct TopoArgs {
    /// star | regular | cycle | directed-line | platoon | wigner |
    /// degree-normalized
    #[arg(long)]
    topology: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Platoon diagonal value.
    #[arg(long)]
    lambda: Option<f64>,
    /// Platoon superdiagonal value.
    #[arg(long = "eps-feedback")]
    eps_feedback: Option<f64>,
    /// Adjacency CSV for degree-normalized networks.
    #[arg(long)]
    adjacency: Option<PathBuf>,
    /// sub | super
    #[arg(long = "dl-orientation")]
    dl_orientation: Option<String>,
}

#[derive(Args, Default)]
struct EnergyArgs {
    #[command(flatten)]
    topo: TopoArgs,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// json | csv
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args, Default)]
struct ScalingArgs {
    #[command(flatten)]
    topo: TopoArgs,
    #[arg(long)]
    measure: Option<String>,
    /// e.g. 8:256:x2 or 4:24:+2 or 8,16,32
    #[arg(long = "n-grid")]
    n_grid: Option<String>,
    /// e.g. 1..10 or 1,2,3 (random topologies)
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Default)]
struct BalanceArgs {
    #[arg(long)]
    n: Option<usize>,
    /// Target spectral radius of the seeded Gaussian networks.
    #[arg(long)]
    rho: Option<f64>,
    /// e.g. 0.1:0.9:0.1
    #[arg(long = "epsilon-grid")]
    epsilon_grid: Option<String>,
    /// identity | random
    #[arg(long = "gamma-mode")]
    gamma_mode: Option<String>,
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Default)]
struct TailriskArgs {
    #[command(flatten)]
    topo: TopoArgs,
    #[arg(long = "n-grid")]
    n_grid: Option<String>,
    /// gaussian | logistic
    #[arg(long)]
    dist: Option<String>,
    /// Monte Carlo sample count (scientific notation accepted).
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    z: Option<f64>,
    /// Extra thresholds for a rate-vs-z sensitivity report at the
    /// largest grid size, e.g. 0.25:1.0:0.25.
    #[arg(long = "z-grid")]
    z_grid: Option<String>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Histogram CSV of x_inf / sqrt(n) at the largest grid size.
    #[arg(long = "hist-out")]
    hist_out: Option<PathBuf>,
}

#[derive(Args, Default)]
struct ControllerArgs {
    /// sym | asm | half-line | platoon
    #[arg(long)]
    mode: Option<String>,
    #[arg(long = "n-grid")]
    n_grid: Option<String>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Platoon diagonal value (platoon mode).
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum EconomyCmd {
    /// Load an IO table, normalize, and run the tail-risk pipeline.
    Assess(EconomyAssessArgs),
    /// Write the seeded synthetic IO table.
    Surrogate(EconomySurrogateArgs),
}

#[derive(Args, Default)]
struct EconomyAssessArgs {
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the table's mu metadata.
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "hist-out")]
    hist_out: Option<PathBuf>,
}

#[derive(Args, Default)]
struct EconomySurrogateArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Hub concentration knob (0 = flat).
    #[arg(long)]
    hub: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Config-file schema: one flat object holding any subset of the flag
/// values; unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    topology: Option<String>,
    gamma: Option<f64>,
    sigma: Option<f64>,
    seed: Option<u64>,
    lambda: Option<f64>,
    eps_feedback: Option<f64>,
    adjacency: Option<PathBuf>,
    dl_orientation: Option<String>,
    n: Option<usize>,
    n_grid: Option<String>,
    measure: Option<String>,
    seeds: Option<String>,
    samples: Option<String>,
    dist: Option<String>,
    z: Option<f64>,
    z_grid: Option<String>,
    tau: Option<f64>,
    epsilon_grid: Option<String>,
    gamma_mode: Option<String>,
    mode: Option<String>,
    budget: Option<usize>,
    rho: Option<f64>,
    table: Option<PathBuf>,
    mu: Option<f64>,
    hub: Option<f64>,
    out: Option<PathBuf>,
    hist_out: Option<PathBuf>,
    format: Option<String>,
    threads: Option<usize>,
}

enum CliError {
    Usage(Vec<String>),
    Compute(LibError),
    Io(std::io::Error),
}

impl From<LibError> for CliError {
    fn from(e: LibError) -> Self {
        CliError::Compute(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(vec![msg.into()])
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file = match load_config(cli.config.as_deref()) {
        Ok(f) => f,
        Err(e) => return finish(Err(e)),
    };
    let threads = cli.threads.or(file.threads);
    if let Some(t) = threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    let result = match cli.cmd {
        Cmd::Energy(args) => run_energy(args, &file),
        Cmd::Scaling(args) => run_scaling(args, &file),
        Cmd::Balance(args) => run_balance(args, &file),
        Cmd::Tailrisk(args) => run_tailrisk(args, &file),
        Cmd::Controller(args) => run_controller(args, &file),
        Cmd::Economy(EconomyCmd::Assess(args)) => run_economy_assess(args, &file),
        Cmd::Economy(EconomyCmd::Surrogate(args)) => run_economy_surrogate(args, &file),
    };
    finish(result)
}

fn finish(result: Result<(), CliError>) -> ExitCode {
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(diags)) => {
            for d in diags {
                eprintln!("error: {d}");
            }
            ExitCode::from(2)
        }
        Err(CliError::Compute(e)) => {
            let payload = json!({
                "schema_version": 1,
                "error": e.to_string(),
                "kind": error_kind(&e),
            });
            eprintln!("{payload}");
            ExitCode::from(1)
        }
        Err(CliError::Io(e)) => {
            let payload = json!({
                "schema_version": 1,
                "error": e.to_string(),
                "kind": "io",
            });
            eprintln!("{payload}");
            ExitCode::from(1)
        }
    }
}

fn error_kind(e: &LibError) -> &'static str {
    match e {
        LibError::UnstableMatrix { .. } => "unstable-matrix",
        LibError::NoConvergence { .. } => "no-convergence",
        LibError::NotSymmetric { .. } => "not-symmetric",
        LibError::NotNonnegative { .. } => "not-nonnegative",
        LibError::SingularSystem { .. } => "singular-system",
        LibError::DimensionMismatch(_) => "dimension-mismatch",
        LibError::Overflow => "overflow",
        LibError::BadSpec(_) | LibError::BadConfig(_) => "bad-spec",
        LibError::BadShock(_) => "bad-shock",
        LibError::PatternTooLarge(_) => "pattern-too-large",
        LibError::SingularGain(_) => "singular-gain",
        LibError::UnstableClosedLoop(_) => "unstable-closed-loop",
        LibError::TailUnresolved(_) => "tail-unresolved",
        LibError::InsufficientGrid(_) => "insufficient-grid",
        LibError::MeasureMismatch => "measure-mismatch",
        LibError::Parse { .. } => "parse-error",
        LibError::NegativeEntry { .. } => "negative-entry",
        LibError::ZeroRow(_) => "zero-row",
        LibError::HorizonTooShort { .. } => "horizon-too-short",
        LibError::AtSize { .. } => "at-size",
        LibError::Io(_) => "io",
    }
}

fn load_config(path: Option<&Path>) -> Result<FileConfig, CliError> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| usage(format!("cannot read config {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| usage(format!("invalid config {}: {e}", p.display())))
        }
    }
}

// ---------------------------------------------------------------------------
// Shared parsing
// ---------------------------------------------------------------------------

fn parse_n_grid(s: &str) -> Result<Vec<usize>, CliError> {
    let s = s.trim();
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let lo: usize = parts[0]
            .trim()
            .parse()
            .map_err(|e| usage(format!("bad grid start: {e}")))?;
        let hi: usize = parts[1]
            .trim()
            .parse()
            .map_err(|e| usage(format!("bad grid end: {e}")))?;
        let step = parts[2].trim();
        let mut grid = Vec::new();
        if let Some(f) = step.strip_prefix('x') {
            let factor: usize = f
                .parse()
                .map_err(|e| usage(format!("bad geometric step: {e}")))?;
            if factor < 2 {
                return Err(usage("geometric step must be at least x2"));
            }
            let mut n = lo;
            while n <= hi {
                grid.push(n);
                n *= factor;
            }
        } else {
            let add = step.strip_prefix('+').unwrap_or(step);
            let add: usize = add
                .parse()
                .map_err(|e| usage(format!("bad arithmetic step: {e}")))?;
            if add == 0 {
                return Err(usage("arithmetic step must be positive"));
            }
            let mut n = lo;
            while n <= hi {
                grid.push(n);
                n += add;
            }
        }
        if grid.is_empty() {
            return Err(usage(format!("grid {s:?} is empty")));
        }
        return Ok(grid);
    }
    let grid: Result<Vec<usize>, _> = s.split(',').map(|t| t.trim().parse::<usize>()).collect();
    let grid = grid.map_err(|e| usage(format!("bad grid {s:?}: {e}")))?;
    if grid.is_empty() {
        return Err(usage("empty size grid"));
    }
    Ok(grid)
}

fn parse_seeds(s: &str) -> Result<Vec<u64>, CliError> {
    let s = s.trim();
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: u64 = lo
            .trim()
            .parse()
            .map_err(|e| usage(format!("bad seed range: {e}")))?;
        let hi: u64 = hi
            .trim()
            .parse()
            .map_err(|e| usage(format!("bad seed range: {e}")))?;
        if hi < lo {
            return Err(usage("seed range end below start"));
        }
        return Ok((lo..=hi).collect());
    }
    let seeds: Result<Vec<u64>, _> = s.split(',').map(|t| t.trim().parse::<u64>()).collect();
    seeds.map_err(|e| usage(format!("bad seeds {s:?}: {e}")))
}

fn parse_float_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.trim().split(':').collect();
    if parts.len() == 3 {
        let lo: f64 = parts[0]
            .parse()
            .map_err(|e| usage(format!("bad grid start: {e}")))?;
        let hi: f64 = parts[1]
            .parse()
            .map_err(|e| usage(format!("bad grid end: {e}")))?;
        let step: f64 = parts[2]
            .parse()
            .map_err(|e| usage(format!("bad grid step: {e}")))?;
        if step <= 0.0 {
            return Err(usage("grid step must be positive"));
        }
        let mut grid = Vec::new();
        let mut v = lo;
        while v <= hi + 1e-12 {
            grid.push((v * 1e12).round() / 1e12);
            v += step;
        }
        return Ok(grid);
    }
    let grid: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    grid.map_err(|e| usage(format!("bad float grid {s:?}: {e}")))
}

fn parse_samples(s: &str) -> Result<usize, CliError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|e| usage(format!("bad sample count {s:?}: {e}")))?;
    if !(v >= 1.0 && v.is_finite() && v <= 1e10) {
        return Err(usage(format!("sample count {v} out of range")));
    }
    Ok(v as usize)
}

fn parse_dist(s: &str) -> Result<ShockDistribution, CliError> {
    ShockDistribution::parse(s)
        .ok_or_else(|| usage(format!("unknown distribution {s:?} (gaussian | logistic)")))
}

struct ResolvedTopo {
    spec: TopologySpec,
    label: String,
}

fn resolve_topology(args: &TopoArgs, file: &FileConfig) -> Result<ResolvedTopo, CliError> {
    let mut diags = Vec::new();
    let name = args
        .topology
        .clone()
        .or_else(|| file.topology.clone())
        .unwrap_or_default();
    let gamma = args.gamma.or(file.gamma);
    let sigma = args.sigma.or(file.sigma);
    let seed = args.seed.or(file.seed);
    let lambda = args.lambda.or(file.lambda);
    let eps = args.eps_feedback.or(file.eps_feedback);
    let adjacency = args.adjacency.clone().or_else(|| file.adjacency.clone());
    let dl = args
        .dl_orientation
        .clone()
        .or_else(|| file.dl_orientation.clone());

    if name.is_empty() {
        return Err(usage("--topology is required"));
    }
    let kind = match name.as_str() {
        "star" => TopologyKind::Star,
        "regular" => TopologyKind::Regular,
        "cycle" => TopologyKind::Cycle,
        "directed-line" => TopologyKind::DirectedLine,
        "platoon" => TopologyKind::Platoon,
        "wigner" => TopologyKind::Wigner,
        "degree-normalized" => TopologyKind::DegreeNormalized,
        other => return Err(usage(format!("unknown topology {other:?}"))),
    };
    if matches!(
        kind,
        TopologyKind::Star | TopologyKind::Regular | TopologyKind::Cycle
            | TopologyKind::DegreeNormalized
    ) && gamma.is_none()
    {
        diags.push(format!("{name} requires --gamma"));
    }
    let mut spec = match kind {
        TopologyKind::Star => TopologySpec::star(gamma.unwrap_or(0.5)),
        TopologyKind::Regular => TopologySpec::regular(gamma.unwrap_or(0.5)),
        TopologyKind::Cycle => TopologySpec::cycle(gamma.unwrap_or(0.5)),
        TopologyKind::DirectedLine => TopologySpec::directed_line(),
        TopologyKind::Platoon => TopologySpec::platoon(lambda.unwrap_or(0.5), eps.unwrap_or(1.0)),
        TopologyKind::Wigner => {
            if sigma.is_none() {
                diags.push("wigner requires --sigma".to_string());
            }
            if seed.is_none() {
                diags.push("wigner is stochastic: --seed is mandatory".to_string());
            }
            TopologySpec::wigner(sigma.unwrap_or(0.25), seed.unwrap_or(0))
        }
        TopologyKind::DegreeNormalized => {
            let Some(path) = adjacency else {
                diags.push("degree-normalized requires --adjacency".to_string());
                return Err(CliError::Usage(diags));
            };
            TopologySpec::degree_normalized(gamma.unwrap_or(0.5), AdjacencySource::Path(path))
        }
    };
    if let Some(dl) = dl {
        spec.dl_orientation = match dl.as_str() {
            "sub" | "subdiagonal" => DlOrientation::Subdiagonal,
            "super" | "superdiagonal" => DlOrientation::Superdiagonal,
            other => {
                diags.push(format!("unknown --dl-orientation {other:?} (sub | super)"));
                DlOrientation::Subdiagonal
            }
        };
    }
    spec.seed = seed;
    if !diags.is_empty() {
        return Err(CliError::Usage(diags));
    }
    Ok(ResolvedTopo { spec, label: name })
}

fn topo_config_json(t: &ResolvedTopo) -> serde_json::Value {
    json!({
        "topology": t.label,
        "gamma": t.spec.gamma,
        "sigma": t.spec.sigma,
        "seed": t.spec.seed,
        "lambda": t.spec.lambda_values,
        "eps_feedback": t.spec.epsilon_values,
        "dl_orientation": t.spec.dl_orientation,
    })
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn run_energy(args: EnergyArgs, file: &FileConfig) -> Result<(), CliError> {
    let topo = resolve_topology(&args.topo, file)?;
    let n = args.n.or(file.n).ok_or_else(|| usage("--n is required"))?;
    let format = args
        .format
        .clone()
        .or_else(|| file.format.clone())
        .unwrap_or_else(|| "json".into());
    let out = args.out.clone().or_else(|| file.out.clone());

    let a = topology::generate(&topo.spec, n)?;
    let report = energy::energy_report(&a)?;
    let mut config = topo_config_json(&topo);
    config["n"] = json!(n);

    let bytes = match format.as_str() {
        "json" => {
            let doc = json!({
                "schema_version": 1,
                "config": config,
                "report": report,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("serialize");
            s.push('\n');
            s.into_bytes()
        }
        "csv" => {
            let mut csv = output::Csv::new(
                &config,
                &["n", "max_norm", "avg_norm", "h2", "scaled_h2", "rho"],
            );
            csv.row(&[
                report.n.to_string(),
                output::fmt(report.max_norm),
                output::fmt(report.avg_norm),
                output::fmt(report.h2),
                output::fmt(report.scaled_h2),
                output::fmt(report.rho),
            ]);
            csv.into_bytes()
        }
        other => return Err(usage(format!("unknown format {other:?} (json | csv)"))),
    };
    output::emit(out.as_deref(), &bytes)?;
    Ok(())
}

fn run_scaling(mut args: ScalingArgs, file: &FileConfig) -> Result<(), CliError> {
    let seeds = match args.seeds.clone().or_else(|| file.seeds.clone()) {
        Some(s) => parse_seeds(&s)?,
        None => Vec::new(),
    };
    // A seed list satisfies the mandatory-seed rule for random topologies;
    // run_study derives per-size seeds from it.
    if args.topo.seed.is_none() && !seeds.is_empty() {
        args.topo.seed = Some(seeds[0]);
    }
    let topo = resolve_topology(&args.topo, file)?;
    let measure_name = args
        .measure
        .clone()
        .or_else(|| file.measure.clone())
        .ok_or_else(|| usage("--measure is required"))?;
    let measure = Measure::parse(&measure_name)
        .ok_or_else(|| usage(format!("unknown measure {measure_name:?}")))?;
    let grid_text = args
        .n_grid
        .clone()
        .or_else(|| file.n_grid.clone())
        .ok_or_else(|| usage("--n-grid is required"))?;
    let n_grid = parse_n_grid(&grid_text)?;
    let seeds = if seeds.is_empty() {
        topo.spec.seed.into_iter().collect()
    } else {
        seeds
    };
    let out = args.out.clone().or_else(|| file.out.clone());

    let study = scaling::run_study(&topo.spec, &n_grid, measure, &seeds)?;
    let fit = scaling::fit_scaling(&study, &FitConfig::default());

    let mut config = topo_config_json(&topo);
    config["measure"] = json!(measure);
    config["n_grid"] = json!(n_grid);
    config["seeds"] = json!(seeds);

    let mut csv = output::Csv::new(&config, &["n", "value", "value_min", "value_max"]);
    for (i, &n) in study.n_grid.iter().enumerate() {
        csv.row(&[
            n.to_string(),
            output::fmt(study.values[i]),
            output::fmt(study.value_min[i]),
            output::fmt(study.value_max[i]),
        ]);
    }
    match fit {
        Ok(f) => csv.footer_json(&json!({ "fit": f })),
        Err(e) => csv.footer_json(&json!({ "fit_error": e.to_string() })),
    }
    output::emit(out.as_deref(), &csv.into_bytes())?;
    Ok(())
}

fn run_balance(args: BalanceArgs, file: &FileConfig) -> Result<(), CliError> {
    let n = args.n.or(file.n).ok_or_else(|| usage("--n is required"))?;
    let rho = args
        .rho
        .or(file.rho)
        .ok_or_else(|| usage("--rho is required"))?;
    let eps_text = args
        .epsilon_grid
        .clone()
        .or_else(|| file.epsilon_grid.clone())
        .ok_or_else(|| usage("--epsilon-grid is required"))?;
    let epsilons = parse_float_grid(&eps_text)?;
    let mode_name = args
        .gamma_mode
        .clone()
        .or_else(|| file.gamma_mode.clone())
        .unwrap_or_else(|| "random".into());
    let gamma_mode = match mode_name.as_str() {
        "random" | "random-diagonal" => GammaMode::RandomDiagonal,
        "identity" | "scaled-identity" => GammaMode::ScaledIdentity,
        other => return Err(usage(format!("unknown gamma mode {other:?}"))),
    };
    let seeds_text = args
        .seeds
        .clone()
        .or_else(|| file.seeds.clone())
        .ok_or_else(|| usage("balance is stochastic: --seeds is mandatory"))?;
    let seeds = parse_seeds(&seeds_text)?;
    let out = args.out.clone().or_else(|| file.out.clone());

    let result = balancing::sweep(n, rho, &seeds, &epsilons, gamma_mode)?;
    let config = json!({
        "n": n,
        "rho": rho,
        "epsilon_grid": epsilons,
        "gamma_mode": gamma_mode,
        "seeds": seeds,
    });
    let mut csv = output::Csv::new(
        &config,
        &["seed", "epsilon", "h2_before", "h2_after", "cap", "pass"],
    );
    for row in &result.rows {
        csv.row(&[
            row.seed.to_string(),
            output::fmt(row.epsilon),
            output::fmt(row.h2_before),
            output::fmt(row.h2_after),
            output::fmt(row.cap),
            row.pass.to_string(),
        ]);
    }
    csv.footer_json(&json!({
        "strict_decrease_fraction": result.strict_decrease_fraction
    }));
    output::emit(out.as_deref(), &csv.into_bytes())?;
    Ok(())
}

fn run_tailrisk(args: TailriskArgs, file: &FileConfig) -> Result<(), CliError> {
    let topo = resolve_topology(&args.topo, file)?;
    let grid_text = args
        .n_grid
        .clone()
        .or_else(|| file.n_grid.clone())
        .ok_or_else(|| usage("--n-grid is required"))?;
    let n_grid = parse_n_grid(&grid_text)?;
    let dist = parse_dist(
        &args
            .dist
            .clone()
            .or_else(|| file.dist.clone())
            .unwrap_or_else(|| "logistic".into()),
    )?;
    let samples = parse_samples(
        &args
            .samples
            .clone()
            .or_else(|| file.samples.clone())
            .unwrap_or_else(|| "100000".into()),
    )?;
    let seed = args
        .topo
        .seed
        .or(file.seed)
        .ok_or_else(|| usage("tail-risk sampling is stochastic: --seed is mandatory"))?;
    let z = args.z.or(file.z).unwrap_or(0.5);
    let z_grid = match args.z_grid.clone().or_else(|| file.z_grid.clone()) {
        Some(s) => Some(parse_float_grid(&s)?),
        None => None,
    };
    let tau = args.tau.or(file.tau).unwrap_or(3.0);
    let out = args.out.clone().or_else(|| file.out.clone());
    let hist_out = args.hist_out.clone().or_else(|| file.hist_out.clone());

    let params = TailRiskParams {
        z,
        tau,
        dist,
        samples,
        seed,
    };
    let mut reports = Vec::new();
    for &n in &n_grid {
        let mut per = topo.spec.clone();
        if per.seed.is_some() {
            per.seed = Some(seed ^ n as u64);
        }
        let a = topology::generate(&per, n).map_err(|e| e.at_size(n))?;
        let report = tailrisk::tail_risk_report(&a, &params).map_err(|e| e.at_size(n))?;
        reports.push(report);
    }

    // Sequence verdict from the growth of the L1 criterion and the
    // diagnostic along the grid.
    let config_fit = FitConfig::default();
    let sequence = if n_grid.len() >= 4 {
        let l1: Vec<f64> = reports.iter().map(|r| r.gramian_l1).collect();
        let diag: Vec<f64> = reports.iter().map(|r| r.diagnostic).collect();
        let l1_fit = scaling::fit_series(&n_grid, &l1, &config_fit)?;
        let diag_fit = scaling::fit_series(&n_grid, &diag, &config_fit)?;
        let verdict = tailrisk::sequence_verdict(&l1_fit, &diag_fit);
        for r in reports.iter_mut() {
            r.verdict = verdict;
        }
        json!({
            "gramian_l1_fit": l1_fit,
            "diagnostic_fit": diag_fit,
            "verdict": verdict,
        })
    } else {
        json!({
            "verdict": tailrisk::Verdict::Inconclusive,
            "note": "grid too short for a growth fit",
        })
    };

    let mut config = topo_config_json(&topo);
    config["n_grid"] = json!(n_grid);
    config["dist"] = json!(dist);
    config["samples"] = json!(samples);
    config["z"] = json!(z);
    config["tau"] = json!(tau);
    config["seed"] = json!(seed);

    if let Some(hist_path) = hist_out {
        let n = *n_grid.iter().max().expect("nonempty grid");
        let mut per = topo.spec.clone();
        if per.seed.is_some() {
            per.seed = Some(seed ^ n as u64);
        }
        let a = topology::generate(&per, n)?;
        let draws = tailrisk::aggregate_output_sample(&a, dist, samples, seed)?;
        let sqrt_n = (n as f64).sqrt();
        let scaled: Vec<f64> = draws.iter().map(|x| x / sqrt_n).collect();
        let mut csv = output::Csv::new(&config, &["bin_center", "density"]);
        for (center, density) in tailrisk::histogram(&scaled, 60) {
            csv.row(&[output::fmt(center), output::fmt(density)]);
        }
        output::write_atomic(&hist_path, &csv.into_bytes())?;
    }

    // Rate sensitivity over a threshold grid at the largest size; the
    // verdict's choice of z is otherwise a config decision.
    let z_sensitivity = match z_grid {
        None => serde_json::Value::Null,
        Some(zs) => {
            let n = *n_grid.iter().max().expect("nonempty grid");
            let mut per = topo.spec.clone();
            if per.seed.is_some() {
                per.seed = Some(seed ^ n as u64);
            }
            let a = topology::generate(&per, n)?;
            let mut rows = Vec::new();
            for &zi in &zs {
                let r = tailrisk::tail_risk_rate(&a, zi, dist, samples, seed)?;
                rows.push(json!({ "z": zi, "rate": r.rate, "rate_ci": r.rate_ci }));
            }
            json!({ "n": n, "rates": rows })
        }
    };

    let doc = json!({
        "schema_version": 1,
        "config": config,
        "reports": reports,
        "sequence": sequence,
        "z_sensitivity": z_sensitivity,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("serialize");
    s.push('\n');
    output::emit(out.as_deref(), s.as_bytes())?;
    Ok(())
}

fn run_controller(args: ControllerArgs, file: &FileConfig) -> Result<(), CliError> {
    let mode = args
        .mode
        .clone()
        .or_else(|| file.mode.clone())
        .ok_or_else(|| usage("--mode is required (sym | asm | half-line | platoon)"))?;
    let grid_text = args
        .n_grid
        .clone()
        .or_else(|| file.n_grid.clone())
        .ok_or_else(|| usage("--n-grid is required"))?;
    let n_grid = parse_n_grid(&grid_text)?;
    let budget = args
        .budget
        .or(file.budget)
        .unwrap_or(controllers::DEFAULT_BUDGET);
    let seed = args.seed.or(file.seed);
    let lambda = args.lambda.or(file.lambda).unwrap_or(0.5);
    let out = args.out.clone().or_else(|| file.out.clone());

    if matches!(mode.as_str(), "sym" | "asm") && seed.is_none() {
        return Err(usage(
            "optimizer starts are stochastic: --seed is mandatory for sym/asm",
        ));
    }
    let seed = seed.unwrap_or(0);

    let mut rows = Vec::new();
    for &n in &n_grid {
        let (h2, scaled, rho) = match mode.as_str() {
            "sym" => {
                let r = controllers::optimize_symmetric(n, budget, seed)?;
                (r.h2, r.scaled_h2, r.rho_closed_loop)
            }
            "asm" => {
                let r = controllers::optimize_asymmetric(n, budget, seed)?;
                (r.h2, r.scaled_h2, r.rho_closed_loop)
            }
            "half-line" => {
                let r = controllers::eval_half_line_controller(n)?;
                (r.h2, r.scaled_h2, r.rho_closed_loop)
            }
            "platoon" => {
                let p = controllers::platoon_energy(&[lambda], n)?;
                (p.report.h2, p.report.scaled_h2, p.report.rho)
            }
            other => return Err(usage(format!("unknown mode {other:?}"))),
        };
        rows.push((n, h2, scaled, rho));
    }

    let config = json!({
        "mode": mode,
        "n_grid": n_grid,
        "budget": budget,
        "seed": seed,
        "lambda": if mode == "platoon" { Some(lambda) } else { None },
    });
    let mut csv = output::Csv::new(&config, &["n", "h2", "scaled_h2", "rho"]);
    for &(n, h2, scaled, rho) in &rows {
        csv.row(&[
            n.to_string(),
            output::fmt(h2),
            output::fmt(scaled),
            output::fmt(rho),
        ]);
    }
    let h2s: Vec<f64> = rows.iter().map(|r| r.1).collect();
    match scaling::fit_series(&n_grid, &h2s, &FitConfig::default()) {
        Ok(fit) => csv.footer_json(&json!({ "h2_fit": fit })),
        Err(e) => csv.footer_json(&json!({ "fit_error": e.to_string() })),
    }
    output::emit(out.as_deref(), &csv.into_bytes())?;
    Ok(())
}

fn run_economy_assess(args: EconomyAssessArgs, file: &FileConfig) -> Result<(), CliError> {
    let table_path = args
        .table
        .clone()
        .or_else(|| file.table.clone())
        .ok_or_else(|| usage("--table is required"))?;
    let dist = parse_dist(
        &args
            .dist
            .clone()
            .or_else(|| file.dist.clone())
            .unwrap_or_else(|| "logistic".into()),
    )?;
    let samples = parse_samples(
        &args
            .samples
            .clone()
            .or_else(|| file.samples.clone())
            .unwrap_or_else(|| "100000".into()),
    )?;
    let seed = args
        .seed
        .or(file.seed)
        .ok_or_else(|| usage("assessment sampling is stochastic: --seed is mandatory"))?;
    let out = args.out.clone().or_else(|| file.out.clone());
    let hist_out = args.hist_out.clone().or_else(|| file.hist_out.clone());

    let mut table = economic::load_io_csv_path(&table_path)?;
    if let Some(mu) = args.mu.or(file.mu) {
        table = economic::IOTable::new(table.a.clone(), mu, table.sector_labels.clone())?;
    }
    let normalized = economic::normalize_returns(&table)?;
    let assessment = economic::assess_network(&normalized, dist, samples, seed)?;

    let config = json!({
        "table": table_path,
        "mu": normalized.mu,
        "n": normalized.n,
        "dist": dist,
        "samples": samples,
        "seed": seed,
    });

    if let Some(hist_path) = hist_out {
        let mut csv = output::Csv::new(&config, &["bin_center", "density"]);
        for &(center, density) in &assessment.histogram {
            csv.row(&[output::fmt(center), output::fmt(density)]);
        }
        output::write_atomic(&hist_path, &csv.into_bytes())?;
    }

    let doc = json!({
        "schema_version": 1,
        "config": config,
        "report": assessment.report,
        "verdict_basis": assessment.verdict_basis,
        "mean_shift": assessment.mean_shift,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("serialize");
    s.push('\n');
    output::emit(out.as_deref(), s.as_bytes())?;
    Ok(())
}

fn run_economy_surrogate(args: EconomySurrogateArgs, file: &FileConfig) -> Result<(), CliError> {
    let n = args.n.or(file.n).unwrap_or(379);
    let seed = args
        .seed
        .or(file.seed)
        .ok_or_else(|| usage("surrogate generation is stochastic: --seed is mandatory"))?;
    let hub = args.hub.or(file.hub).unwrap_or(3.0);
    let mu = args.mu.or(file.mu).unwrap_or(0.51);
    let out = args.out.clone().or_else(|| file.out.clone());

    let table = economic::surrogate_table(n, seed, hub, mu)?;
    let mut buf = Vec::new();
    economic::write_io_csv(&table, &mut buf)?;
    output::emit(out.as_deref(), &buf)?;
    Ok(())
}
