//! Generators for the canonical network families: star, regular, cycle,
//! directed line, vehicular platoon, Wigner ensemble, and degree-normalized
//! networks built from arbitrary adjacency input.

use std::io::BufRead;
use std::path::PathBuf;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{self, NetworkMatrix};
use crate::stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyKind {
    Star,
    Regular,
    Cycle,
    DirectedLine,
    Platoon,
    Wigner,
    DegreeNormalized,
}

/// Where the ones of a directed line sit. The subdiagonal orientation is
/// the default; its Gramian is exactly `Diag(n, n-1, ..., 1)`. The two
/// orientations are transposes with identical Gramian trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DlOrientation {
    #[default]
    Subdiagonal,
    Superdiagonal,
}

/// Adjacency input for degree-normalized networks.
#[derive(Debug, Clone)]
pub enum AdjacencySource {
    Path(PathBuf),
    Matrix(DMatrix<f64>),
}

/// Parameters for one network family.
#[derive(Debug, Clone)]
pub struct TopologySpec {
    pub kind: TopologyKind,
    pub gamma: Option<f64>,
    /// Platoon diagonal; a single value broadcasts to every node.
    pub lambda_values: Option<Vec<f64>>,
    /// Platoon superdiagonal; a single value broadcasts.
    pub epsilon_values: Option<Vec<f64>>,
    pub sigma: Option<f64>,
    pub seed: Option<u64>,
    pub adjacency: Option<AdjacencySource>,
    pub dl_orientation: DlOrientation,
}

impl TopologySpec {
    fn new(kind: TopologyKind) -> Self {
        Self {
            kind,
            gamma: None,
            lambda_values: None,
            epsilon_values: None,
            sigma: None,
            seed: None,
            adjacency: None,
            dl_orientation: DlOrientation::default(),
        }
    }

    pub fn star(gamma: f64) -> Self {
        Self {
            gamma: Some(gamma),
            ..Self::new(TopologyKind::Star)
        }
    }

    pub fn regular(gamma: f64) -> Self {
        Self {
            gamma: Some(gamma),
            ..Self::new(TopologyKind::Regular)
        }
    }

    pub fn cycle(gamma: f64) -> Self {
        Self {
            gamma: Some(gamma),
            ..Self::new(TopologyKind::Cycle)
        }
    }

    pub fn directed_line() -> Self {
        Self::new(TopologyKind::DirectedLine)
    }

    /// Platoon with constant diagonal `lambda` and constant superdiagonal
    /// `eps`; the defaults elsewhere are `lambda = 0.5`, `eps = 1`.
    pub fn platoon(lambda: f64, eps: f64) -> Self {
        Self {
            lambda_values: Some(vec![lambda]),
            epsilon_values: Some(vec![eps]),
            ..Self::new(TopologyKind::Platoon)
        }
    }

    pub fn wigner(sigma: f64, seed: u64) -> Self {
        Self {
            sigma: Some(sigma),
            seed: Some(seed),
            ..Self::new(TopologyKind::Wigner)
        }
    }

    pub fn degree_normalized(gamma: f64, adjacency: AdjacencySource) -> Self {
        Self {
            gamma: Some(gamma),
            adjacency: Some(adjacency),
            ..Self::new(TopologyKind::DegreeNormalized)
        }
    }
}

/// Non-fatal findings from generation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopologyWarning {
    /// Row had no edges; it stays identically zero under degree
    /// normalization.
    ZeroDegreeRow(usize),
}

pub fn generate(spec: &TopologySpec, n: usize) -> Result<NetworkMatrix> {
    generate_checked(spec, n).map(|(m, _)| m)
}

/// Like [`generate`] but also returns warnings (zero-degree rows).
pub fn generate_checked(
    spec: &TopologySpec,
    n: usize,
) -> Result<(NetworkMatrix, Vec<TopologyWarning>)> {
    let min_n = if spec.kind == TopologyKind::Cycle { 3 } else { 2 };
    if n < min_n {
        return Err(Error::BadSpec(format!(
            "{:?} requires n >= {min_n}, got {n}",
            spec.kind
        )));
    }
    let mut warnings = Vec::new();
    let mat = match spec.kind {
        TopologyKind::Star => star(gamma_of(spec)?, n),
        TopologyKind::Regular => regular(gamma_of(spec)?, n),
        TopologyKind::Cycle => cycle(gamma_of(spec)?, n),
        TopologyKind::DirectedLine => directed_line(n, spec.dl_orientation),
        TopologyKind::Platoon => platoon(spec, n)?,
        TopologyKind::Wigner => wigner(spec, n)?,
        TopologyKind::DegreeNormalized => {
            let (m, zero_rows) = degree_normalized(spec, n)?;
            warnings.extend(zero_rows.into_iter().map(TopologyWarning::ZeroDegreeRow));
            m
        }
    };
    Ok((NetworkMatrix::from_dense(mat)?, warnings))
}

/// One matrix per grid entry. Random kinds derive an independent seed per
/// size as `seed ^ n`, so generation order does not matter.
pub fn network_sequence(spec: &TopologySpec, n_grid: &[usize]) -> Result<Vec<NetworkMatrix>> {
    if n_grid.is_empty() {
        return Err(Error::BadSpec("empty size grid".into()));
    }
    n_grid
        .iter()
        .map(|&n| {
            let mut per_n = spec.clone();
            if let Some(seed) = spec.seed {
                per_n.seed = Some(seed ^ n as u64);
            }
            generate(&per_n, n).map_err(|e| e.at_size(n))
        })
        .collect()
}

fn gamma_of(spec: &TopologySpec) -> Result<f64> {
    let gamma = spec
        .gamma
        .ok_or_else(|| Error::BadSpec(format!("{:?} requires gamma", spec.kind)))?;
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::BadSpec(format!(
            "gamma must lie in (0, 1), got {gamma}"
        )));
    }
    Ok(gamma)
}

fn star(gamma: f64, n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let w = gamma / (n - 1) as f64;
    for j in 1..n {
        m[(0, j)] = w;
    }
    for i in 1..n {
        m[(i, 0)] = gamma;
    }
    m
}

fn regular(gamma: f64, n: usize) -> DMatrix<f64> {
    let w = gamma / (n - 1) as f64;
    DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { w })
}

fn cycle(gamma: f64, n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let half = gamma / 2.0;
    for i in 0..n {
        m[(i, (i + 1) % n)] = half;
        m[((i + 1) % n, i)] = half;
    }
    m
}

fn directed_line(n: usize, orientation: DlOrientation) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 1..n {
        match orientation {
            DlOrientation::Subdiagonal => m[(i, i - 1)] = 1.0,
            DlOrientation::Superdiagonal => m[(i - 1, i)] = 1.0,
        }
    }
    m
}

fn platoon(spec: &TopologySpec, n: usize) -> Result<DMatrix<f64>> {
    let lambdas = broadcast(spec.lambda_values.as_deref().unwrap_or(&[0.5]), n, "lambda")?;
    let epsilons = broadcast(
        spec.epsilon_values.as_deref().unwrap_or(&[1.0]),
        n - 1,
        "epsilon",
    )?;
    for &l in &lambdas {
        if !(l > 0.0 && l < 1.0) {
            return Err(Error::BadSpec(format!(
                "platoon lambda entries must lie in (0, 1), got {l}"
            )));
        }
    }
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = lambdas[i];
    }
    for i in 0..n - 1 {
        m[(i, i + 1)] = epsilons[i];
    }
    Ok(m)
}

fn broadcast(values: &[f64], want: usize, name: &str) -> Result<Vec<f64>> {
    match values.len() {
        1 => Ok(vec![values[0]; want]),
        l if l == want => Ok(values.to_vec()),
        l => Err(Error::BadSpec(format!(
            "{name} values must have length 1 or {want}, got {l}"
        ))),
    }
}

/// Symmetric matrix with i.i.d. mean-zero variance `sigma^2` Gaussian
/// entries, scaled by `1/sqrt(n)`. Entries are drawn from a ChaCha8 stream
/// keyed by the seed, in row-major upper-triangle order (diagonal
/// included), so output is identical across platforms and runs.
fn wigner(spec: &TopologySpec, n: usize) -> Result<DMatrix<f64>> {
    let sigma = spec
        .sigma
        .ok_or_else(|| Error::BadSpec("wigner requires sigma".into()))?;
    if !(sigma > 0.0 && sigma < 0.5) {
        return Err(Error::BadSpec(format!(
            "wigner sigma must lie in (0, 0.5), got {sigma}"
        )));
    }
    let seed = spec
        .seed
        .ok_or_else(|| Error::BadSpec("wigner requires a seed".into()))?;
    let mut rng = stream::base(seed);
    let scale = sigma / (n as f64).sqrt();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let g: f64 = rng.sample(StandardNormal);
            let v = scale * g;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

fn degree_normalized(spec: &TopologySpec, n: usize) -> Result<(DMatrix<f64>, Vec<usize>)> {
    let gamma = gamma_of(spec)?;
    let adj = match spec
        .adjacency
        .as_ref()
        .ok_or_else(|| Error::BadSpec("degree-normalized requires adjacency input".into()))?
    {
        AdjacencySource::Matrix(m) => m.clone(),
        AdjacencySource::Path(p) => read_adjacency_file(p, n)?,
    };
    if adj.nrows() != n || adj.ncols() != n {
        return Err(Error::BadSpec(format!(
            "adjacency is {}x{}, requested n = {n}",
            adj.nrows(),
            adj.ncols()
        )));
    }
    for j in 0..n {
        for i in 0..n {
            if adj[(i, j)] < 0.0 {
                return Err(Error::NegativeEntry {
                    i,
                    j,
                    value: adj[(i, j)],
                });
            }
        }
    }
    let mut m = DMatrix::zeros(n, n);
    let mut zero_rows = Vec::new();
    for i in 0..n {
        let degree: f64 = (0..n).map(|j| adj[(i, j)]).sum();
        if degree == 0.0 {
            zero_rows.push(i);
            continue;
        }
        for j in 0..n {
            m[(i, j)] = gamma * adj[(i, j)] / degree;
        }
    }
    Ok((m, zero_rows))
}

/// Adjacency input in either accepted format: full-matrix CSV (first line
/// `n=<int>`) or an `i,j,weight` edge list.
fn read_adjacency_file(path: &std::path::Path, n: usize) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path)?;
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if first.trim_start().starts_with("n=") {
        Ok(matrix::read_matrix_csv(text.as_bytes())?.entries().clone())
    } else {
        read_edge_list(text.as_bytes(), Some(n))
    }
}

/// Dense i.i.d. standard Gaussian matrix rescaled so the spectral radius
/// estimate equals `target_rho`. Used by the balancing sweep and the
/// seeded test ensembles.
pub fn gaussian_scaled(n: usize, target_rho: f64, seed: u64) -> Result<NetworkMatrix> {
    if !(target_rho > 0.0 && target_rho < 1.0) {
        return Err(Error::BadSpec(format!(
            "target spectral radius must lie in (0, 1), got {target_rho}"
        )));
    }
    let mut rng = stream::base(seed);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    let raw = NetworkMatrix::from_dense(m)?;
    let est = raw.spectral_radius()?;
    if est.rho == 0.0 {
        return Err(Error::BadSpec("degenerate zero spectral radius".into()));
    }
    NetworkMatrix::from_dense(raw.entries() * (target_rho / est.rho))
}

/// Edge-list CSV `i,j,weight` with 0-based indices. The dimension is
/// `max index + 1` unless given explicitly.
pub fn read_edge_list<R: BufRead>(reader: R, n: Option<usize>) -> Result<DMatrix<f64>> {
    let mut edges = Vec::new();
    let mut max_idx = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = trimmed.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("expected 'i,j,weight', got {trimmed:?}"),
            });
        }
        let parse_idx = |tok: &str| {
            tok.trim().parse::<usize>().map_err(|e| Error::Parse {
                line: lineno + 1,
                msg: format!("bad index {tok:?}: {e}"),
            })
        };
        let i = parse_idx(parts[0])?;
        let j = parse_idx(parts[1])?;
        let w = parts[2].trim().parse::<f64>().map_err(|e| Error::Parse {
            line: lineno + 1,
            msg: format!("bad weight {:?}: {e}", parts[2]),
        })?;
        max_idx = max_idx.max(i).max(j);
        edges.push((i, j, w));
    }
    let n = n.unwrap_or(max_idx + 1);
    if max_idx >= n {
        return Err(Error::BadSpec(format!(
            "edge index {max_idx} out of bounds for n = {n}"
        )));
    }
    let mut m = DMatrix::zeros(n, n);
    for (i, j, w) in edges {
        m[(i, j)] = w;
    }
    Ok(m)
}
