//! Basin sweeps: many initial conditions inside the basin, plus some with no
//! zero-mode component, each simulated and compared with its predicted
//! limit. Samples are drawn up front from the seed and simulated on worker
//! threads, so results do not depend on the worker count.

use std::num::NonZeroUsize;
use std::thread;

use nalgebra::DVector;
use patternlq::centralized::{in_basin_u1, predict_limit};
use patternlq::observer::{in_basin_u2, predict_limit_distributed};
use patternlq::patterns::is_in_pattern;
use patternlq::sim::{simulate_centralized, simulate_distributed};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{uniform_vector, Mode, Scenario};
use crate::error::{CliError, Failure, Stage};
use crate::pipeline::{relative_residual, run_pipeline, Depth, Designs, Summary};

const MAX_DRAWS_PER_SAMPLE: usize = 1000;
/// Limits of zero-projection runs must fall below this norm.
pub const ZERO_LIMIT_NORM: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub samples: usize,
    pub draws: usize,
    pub converged: usize,
    pub within_tolerance: usize,
    pub pattern_formed: usize,
    pub max_relative_residual: f64,
    pub zero_samples: usize,
    pub zero_converged: usize,
    pub zero_vanished: usize,
    pub zero_pattern_formed: usize,
    pub max_zero_limit_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    #[serde(flatten)]
    pub run: Summary,
    pub sweep: Option<SweepReport>,
}

#[derive(Debug, Clone)]
struct Sample {
    xbar0: DVector<f64>,
    e0: Option<DVector<f64>>,
}

#[derive(Debug, Clone, Copy)]
struct SampleResult {
    converged: bool,
    residual: f64,
    limit_norm: f64,
    formed: bool,
}

pub fn run_sweep(scenario: &Scenario, mode: Mode, seed: u64) -> (SweepSummary, Option<Failure>) {
    let outcome = run_pipeline(scenario, "sweep", mode, seed, Depth::Synth);
    let mut summary = SweepSummary {
        run: outcome.summary,
        sweep: None,
    };
    let mut failure = outcome.failure;
    if let (None, Some(designs)) = (&failure, &outcome.designs) {
        match sweep(scenario, designs, seed) {
            Ok((report, verdict)) => {
                summary.sweep = Some(report);
                failure = verdict;
            }
            Err(f) => failure = Some(f),
        }
        if let Some(f) = &failure {
            summary.run.record_failure(f);
        }
    }
    (summary, failure)
}

fn sweep(
    scenario: &Scenario,
    designs: &Designs,
    seed: u64,
) -> Result<(SweepReport, Option<Failure>), Failure> {
    let cfg = &scenario.sweep;
    let cd = &designs.centralized;
    let d = cd.psi1.len();
    let solver = |e: patternlq::Error| Failure::new(Stage::Simulation, CliError::Solver(e.to_string()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(7);
    let draw = |rng: &mut ChaCha8Rng| Sample {
        xbar0: uniform_vector(rng, d, cfg.lo, cfg.hi),
        e0: designs
            .observer
            .as_ref()
            .map(|(_, es)| uniform_vector(rng, es.what.nrows(), cfg.lo, cfg.hi)),
    };
    let weight = |s: &Sample| -> Result<f64, Failure> {
        match (&designs.observer, &s.e0) {
            (Some((_, es)), Some(e0)) => es.zero_mode_weight(cd, &s.xbar0, e0).map_err(solver),
            _ => cd.zero_mode_weight(&s.xbar0).map_err(solver),
        }
    };
    let member = |s: &Sample| -> Result<bool, Failure> {
        let verdict = match (&designs.observer, &s.e0) {
            (Some((_, es)), Some(e0)) => in_basin_u2(es, cd, &s.xbar0, e0, &designs.spec),
            _ => in_basin_u1(cd, &s.xbar0, &designs.spec),
        };
        Ok(verdict.map_err(solver)?.member)
    };

    let mut inside = Vec::with_capacity(cfg.samples);
    let mut draws = 0;
    while inside.len() < cfg.samples {
        if draws >= MAX_DRAWS_PER_SAMPLE * cfg.samples.max(1) {
            return Err(Failure::new(
                Stage::Simulation,
                CliError::Solver(format!(
                    "only {} of {draws} draws landed in the basin",
                    inside.len()
                )),
            ));
        }
        draws += 1;
        let s = draw(&mut rng);
        if member(&s)? {
            inside.push(s);
        }
    }
    let mut zero = Vec::with_capacity(cfg.zero_samples);
    for _ in 0..cfg.zero_samples {
        let mut s = draw(&mut rng);
        // ψ̂₁ᵀψ₁ = 1, so removing w·ψ₁ cancels the zero-mode weight
        let w = weight(&s)?;
        s.xbar0 -= &cd.psi1 * w;
        zero.push(s);
    }

    let workers = cfg
        .workers
        .or_else(|| thread::available_parallelism().ok().map(NonZeroUsize::get))
        .unwrap_or(1)
        .max(1);
    let all: Vec<&Sample> = inside.iter().chain(&zero).collect();
    let results = simulate_all(scenario, designs, &all, workers)?;
    let (inside_r, zero_r) = results.split_at(inside.len());

    let tol = scenario.solver.limit_tol;
    let report = SweepReport {
        samples: inside.len(),
        draws,
        converged: inside_r.iter().filter(|r| r.converged).count(),
        within_tolerance: inside_r.iter().filter(|r| r.residual <= tol).count(),
        pattern_formed: inside_r.iter().filter(|r| r.formed).count(),
        max_relative_residual: inside_r.iter().map(|r| r.residual).fold(0.0, f64::max),
        zero_samples: zero.len(),
        zero_converged: zero_r.iter().filter(|r| r.converged).count(),
        zero_vanished: zero_r.iter().filter(|r| r.limit_norm < ZERO_LIMIT_NORM).count(),
        zero_pattern_formed: zero_r.iter().filter(|r| r.formed).count(),
        max_zero_limit_norm: zero_r.iter().map(|r| r.limit_norm).fold(0.0, f64::max),
    };
    let verdict = if report.converged < report.samples || report.zero_converged < report.zero_samples {
        Some(Failure::new(
            Stage::Simulation,
            CliError::NonConvergence("some sweep runs had not settled by t_end".into()),
        ))
    } else if report.within_tolerance < report.samples || report.zero_vanished < report.zero_samples {
        Some(Failure::new(
            Stage::Validation,
            CliError::Solver("some sweep limits miss their predictions".into()),
        ))
    } else {
        None
    };
    Ok((report, verdict))
}

fn simulate_all(
    scenario: &Scenario,
    designs: &Designs,
    samples: &[&Sample],
    workers: usize,
) -> Result<Vec<SampleResult>, Failure> {
    let chunk = samples.len().div_ceil(workers).max(1);
    thread::scope(|scope| {
        let handles: Vec<_> = samples
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|s| simulate_one(scenario, designs, s)).collect::<Vec<_>>()))
            .collect();
        let mut out = Vec::with_capacity(samples.len());
        for h in handles {
            for r in h.join().expect("sweep worker panicked") {
                out.push(r?);
            }
        }
        Ok(out)
    })
}

fn simulate_one(scenario: &Scenario, designs: &Designs, s: &Sample) -> Result<SampleResult, Failure> {
    let cd = &designs.centralized;
    let d = cd.psi1.len();
    let n = designs.plant.n();
    let opts = scenario.sim.options();
    let solver = |e: patternlq::Error| Failure::new(Stage::Simulation, CliError::Solver(e.to_string()));
    let (rec, predicted) = match (&designs.observer, &s.e0) {
        (Some((_, es)), Some(e0)) => (
            simulate_distributed(es, cd, &s.xbar0, e0, &opts).map_err(solver)?,
            predict_limit_distributed(es, cd, &s.xbar0, e0).map_err(solver)?,
        ),
        _ => (
            simulate_centralized(cd, &s.xbar0, &opts).map_err(solver)?,
            predict_limit(cd, &s.xbar0).map_err(solver)?,
        ),
    };
    let limit = rec.limit_estimate.rows(0, d).into_owned();
    let x = limit.rows(0, n).into_owned();
    let formed = is_in_pattern(&x, &designs.graph, &designs.spec, scenario.solver.membership_tol)
        .map_err(solver)?;
    Ok(SampleResult {
        converged: rec.converged,
        residual: relative_residual(&limit, &predicted),
        limit_norm: limit.norm(),
        formed,
    })
}
