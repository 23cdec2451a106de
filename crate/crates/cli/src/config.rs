//! Scenario files: a TOML document with one table per pipeline concern.
//!
//! ```toml
//! name = "stripe"
//! mode = "centralized"            # or "distributed"
//! a = 4.0
//! p0 = 1.0
//! leaders = [3, 2, 1, 4, 7, 8, 9] # 1-based, in leader order
//!
//! [graph]
//! kind = "grid"                   # grid | path | complete | edges
//! rows = 3
//! cols = 3
//!
//! [alpha]
//! values = [1, 1, 1, -1, -1, -1, 1, 1, 1]   # or kron = [[...], [...]]
//!
//! [initial]
//! x0 = [3.9, 2.0, 0.6, -3.2, -2.9, -4.2, 4.1, 2.1, 0.6]
//! z0 = { random = { lo = -5.0, hi = 5.0 } }
//! ```
//!
//! Optional tables: `leader_graph` (`kind = "path" | "induced" | "edges"`),
//! `observer`, `solver`, `sim`, `sweep` and `output`.

use std::fmt;
use std::path::PathBuf;

use nalgebra::DVector;
use patternlq::patterns::pattern_from_kron;
use patternlq::{Graph, SimOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Centralized,
    Distributed,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Centralized => "centralized",
            Mode::Distributed => "distributed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub mode: Mode,
    /// Default seed for every random draw that does not carry its own.
    #[serde(default)]
    pub seed: u64,
    pub graph: GraphSpec,
    pub alpha: AlphaSpec,
    #[serde(default = "default_p0")]
    pub p0: f64,
    pub a: f64,
    pub leaders: Vec<usize>,
    #[serde(default)]
    pub leader_graph: LeaderGraphSpec,
    pub initial: InitialSpec,
    #[serde(default)]
    pub observer: ObserverSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub sim: SimSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_p0() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GraphSpec {
    Grid { rows: usize, cols: usize },
    Path { n: usize },
    Complete { n: usize },
    Edges { n: usize, edges: Vec<[usize; 2]> },
}

impl GraphSpec {
    pub fn build(&self) -> Result<Graph, CliError> {
        let graph = match self {
            GraphSpec::Grid { rows, cols } => Graph::grid(*rows, *cols),
            GraphSpec::Path { n } => Ok(Graph::path(*n)),
            GraphSpec::Complete { n } => Ok(Graph::complete(*n)),
            GraphSpec::Edges { n, edges } => Graph::from_edges(*n, &pairs(edges)),
        };
        graph.map_err(|e| CliError::config("graph", e))
    }

    /// `(rows, cols)` for grids, which are the graphs snapshots can draw.
    pub fn grid_dims(&self) -> Option<(usize, usize)> {
        match self {
            GraphSpec::Grid { rows, cols } => Some((*rows, *cols)),
            _ => None,
        }
    }
}

fn pairs(edges: &[[usize; 2]]) -> Vec<(usize, usize)> {
    edges.iter().map(|&[i, j]| (i, j)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaSpec {
    /// Explicit ±1 entries in vertex order.
    pub values: Option<Vec<i8>>,
    /// Factors whose Kronecker product gives the pattern.
    pub kron: Option<Vec<Vec<i8>>>,
}

impl AlphaSpec {
    pub fn build(&self) -> Result<Vec<i8>, CliError> {
        match (&self.values, &self.kron) {
            (Some(v), None) => Ok(v.clone()),
            (None, Some(factors)) => {
                let mut iter = factors.iter();
                let first = iter
                    .next()
                    .ok_or_else(|| CliError::config("alpha.kron", "needs at least one factor"))?;
                iter.try_fold(first.clone(), |acc, f| pattern_from_kron(&acc, f))
                    .map_err(|e| CliError::config("alpha.kron", e))
            }
            _ => Err(CliError::config(
                "alpha",
                "give exactly one of `values` or `kron`",
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LeaderGraphSpec {
    /// Path through the leaders in the order they are listed.
    #[default]
    Path,
    /// The subgraph of the plant graph induced by the leaders.
    Induced,
    /// Explicit edges between leader positions `1..=m`.
    Edges { edges: Vec<[usize; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VectorSpec {
    Values(Vec<f64>),
    Random { random: RandomSpec },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpec {
    pub lo: f64,
    pub hi: f64,
    pub seed: Option<u64>,
}

impl Default for RandomSpec {
    fn default() -> Self {
        Self {
            lo: -5.0,
            hi: 5.0,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub x0: VectorSpec,
    pub z0: VectorSpec,
    /// Stacked observer errors; defaults to uniform draws in `[−5, 5]`.
    pub e0: Option<VectorSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverSpec {
    #[serde(default = "default_safety")]
    pub safety_factor: f64,
}

fn default_safety() -> f64 {
    patternlq::observer::DEFAULT_SAFETY_FACTOR
}

impl Default for ObserverSpec {
    fn default() -> Self {
        Self {
            safety_factor: default_safety(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    /// Relative tolerance of the pattern-membership test on the limit.
    #[serde(default = "default_membership_tol")]
    pub membership_tol: f64,
    /// Allowed relative gap between simulated and predicted limits.
    #[serde(default = "default_limit_tol")]
    pub limit_tol: f64,
}

fn default_membership_tol() -> f64 {
    patternlq::patterns::DEFAULT_MEMBERSHIP_TOL
}

fn default_limit_tol() -> f64 {
    1e-5
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            membership_tol: default_membership_tol(),
            limit_tol: default_limit_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_downsample")]
    pub downsample: usize,
}

fn default_dt() -> f64 {
    SimOptions::default().dt
}
fn default_t_end() -> f64 {
    SimOptions::default().t_end
}
fn default_tol() -> f64 {
    SimOptions::default().tol
}
fn default_downsample() -> usize {
    SimOptions::default().downsample
}

impl Default for SimSpec {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            t_end: default_t_end(),
            tol: default_tol(),
            downsample: default_downsample(),
        }
    }
}

impl SimSpec {
    pub fn options(&self) -> SimOptions {
        SimOptions {
            dt: self.dt,
            t_end: self.t_end,
            tol: self.tol,
            downsample: self.downsample,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Initial conditions drawn inside the basin.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Initial conditions with no zero-mode component.
    #[serde(default = "default_zero_samples")]
    pub zero_samples: usize,
    #[serde(default = "default_lo")]
    pub lo: f64,
    #[serde(default = "default_hi")]
    pub hi: f64,
    /// Worker threads; all available cores when absent.
    pub workers: Option<usize>,
}

fn default_samples() -> usize {
    200
}
fn default_zero_samples() -> usize {
    20
}
fn default_lo() -> f64 {
    -5.0
}
fn default_hi() -> f64 {
    5.0
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            zero_samples: default_zero_samples(),
            lo: default_lo(),
            hi: default_hi(),
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_true")]
    pub snapshots: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_true() -> bool {
    true
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            snapshots: true,
        }
    }
}

/// Bundled scenarios, by name.
pub const BUNDLED: [(&str, &str); 2] = [
    (
        "paper_sec5_centralized",
        include_str!("../scenarios/paper_sec5_centralized.toml"),
    ),
    (
        "paper_sec5_distributed",
        include_str!("../scenarios/paper_sec5_distributed.toml"),
    ),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

impl Scenario {
    /// Parses and validates a scenario document. Syntax and schema errors
    /// carry the line and column reported by the TOML parser.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let scenario: Scenario =
            toml::from_str(text).map_err(|e| CliError::config("document", e.to_string().trim_end()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    /// A path on disk, or the name of a bundled scenario.
    pub fn load(source: &str) -> Result<Self, CliError> {
        match std::fs::read_to_string(source) {
            Ok(text) => Self::parse(&text),
            Err(io) => match bundled(source) {
                Some(text) => Self::parse(text),
                None => Err(CliError::config(
                    "--config",
                    format!("cannot read `{source}` ({io}) and no bundled scenario has that name"),
                )),
            },
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let n = match &self.graph {
            GraphSpec::Grid { rows, cols } => rows * cols,
            GraphSpec::Path { n } | GraphSpec::Complete { n } | GraphSpec::Edges { n, .. } => *n,
        };
        let alpha = self.alpha.build()?;
        if alpha.len() != n {
            return Err(CliError::config(
                "alpha",
                format!("has {} entries, the graph has {n} vertices", alpha.len()),
            ));
        }
        let m = self.leaders.len();
        if let Some(&bad) = self.leaders.iter().find(|&&l| l == 0 || l > n) {
            return Err(CliError::config(
                "leaders",
                format!("vertex {bad} is outside 1..={n}"),
            ));
        }
        check_vector(&self.initial.x0, n, "initial.x0")?;
        check_vector(&self.initial.z0, m, "initial.z0")?;
        if let Some(e0) = &self.initial.e0 {
            check_vector(e0, (n + m) * m, "initial.e0")?;
        }
        if let LeaderGraphSpec::Edges { edges } = &self.leader_graph {
            if let Some([i, j]) = edges.iter().find(|[i, j]| *i == 0 || *j == 0 || *i > m || *j > m) {
                return Err(CliError::config(
                    "leader_graph.edges",
                    format!("edge [{i}, {j}] references a leader outside 1..={m}"),
                ));
            }
        }
        let positive = [
            ("p0", self.p0),
            ("sim.dt", self.sim.dt),
            ("sim.t_end", self.sim.t_end),
            ("sim.tol", self.sim.tol),
            ("solver.membership_tol", self.solver.membership_tol),
            ("solver.limit_tol", self.solver.limit_tol),
        ];
        if let Some((key, v)) = positive.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(CliError::config(*key, format!("must be positive and finite, got {v}")));
        }
        if !self.a.is_finite() {
            return Err(CliError::config("a", "must be finite"));
        }
        if self.sim.t_end < self.sim.dt {
            return Err(CliError::config("sim.t_end", "must be at least sim.dt"));
        }
        if self.sim.downsample == 0 {
            return Err(CliError::config("sim.downsample", "must be at least 1"));
        }
        if !(self.observer.safety_factor > 1.0) {
            return Err(CliError::config("observer.safety_factor", "must exceed 1"));
        }
        if !(self.sweep.lo < self.sweep.hi) {
            return Err(CliError::config("sweep", "needs lo < hi"));
        }
        Ok(())
    }

    /// Concrete initial data. `seed` replaces the scenario's default seed;
    /// each vector draws from its own stream so that changing one spec does
    /// not shift the others.
    pub fn initial_data(&self, seed: u64) -> InitialData {
        let n = self.alpha.build().map(|a| a.len()).unwrap_or(0);
        let m = self.leaders.len();
        let e0_spec = self.initial.e0.clone().unwrap_or(VectorSpec::Random {
            random: RandomSpec::default(),
        });
        InitialData {
            seed,
            x0: draw(&self.initial.x0, n, seed, 0),
            z0: draw(&self.initial.z0, m, seed, 1),
            e0: draw(&e0_spec, (n + m) * m, seed, 2),
        }
    }
}

fn check_vector(spec: &VectorSpec, len: usize, key: &str) -> Result<(), CliError> {
    match spec {
        VectorSpec::Values(v) if v.len() != len => Err(CliError::config(
            key,
            format!("has {} entries, expected {len}", v.len()),
        )),
        VectorSpec::Values(v) if v.iter().any(|x| !x.is_finite()) => {
            Err(CliError::config(key, "entries must be finite"))
        }
        VectorSpec::Random { random } if !(random.lo < random.hi) => {
            Err(CliError::config(key, "random range needs lo < hi"))
        }
        _ => Ok(()),
    }
}

/// Uniform draws for the sweep and for random initial data.
pub fn uniform_vector(rng: &mut ChaCha8Rng, len: usize, lo: f64, hi: f64) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.gen_range(lo..hi))
}

fn draw(spec: &VectorSpec, len: usize, seed: u64, stream: u64) -> DVector<f64> {
    match spec {
        VectorSpec::Values(v) => DVector::from_column_slice(v),
        VectorSpec::Random { random } => {
            let mut rng = ChaCha8Rng::seed_from_u64(random.seed.unwrap_or(seed));
            rng.set_stream(stream);
            uniform_vector(&mut rng, len, random.lo, random.hi)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub seed: u64,
    pub x0: DVector<f64>,
    pub z0: DVector<f64>,
    /// Stacked `[e₁; …; e_m]`, only used in distributed mode.
    pub e0: DVector<f64>,
}

impl InitialData {
    pub fn xbar0(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.x0.len() + self.z0.len(),
            self.x0.iter().chain(self.z0.iter()).copied(),
        )
    }
}
