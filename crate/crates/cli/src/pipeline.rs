//! The scenario pipeline: assumptions and feasibility, centralized
//! synthesis and its certificate, the observer design in distributed mode,
//! then simulation checked against the predicted limit.

use nalgebra::DVector;
use patternlq::centralized::{certify_spectrum, in_basin_u1, predict_limit, synthesize_centralized};
use patternlq::observer::{
    build_error_system, build_measurements, design_observer, gain_condition_margin, in_basin_u2,
    predict_limit_distributed,
};
use patternlq::patterns::{build_pattern_matrix, is_in_pattern};
use patternlq::plant::{build_augmented, check_assumptions, solve_equilibrium};
use patternlq::sim::{recommended_horizon, simulate_centralized, simulate_distributed};
use patternlq::{
    BasinVerdict, CentralizedDesign, ErrorSystem, FeasibilityOutcome, Graph, ObserverDesign,
    ObserverOptions, PatternSpec, PlantModel, SimOptions, TrajectoryRecord,
};
use serde::Serialize;

use crate::config::{InitialData, LeaderGraphSpec, Mode, Scenario};
use crate::error::{CliError, Failure, Stage};

/// How far a command takes the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Depth {
    Check,
    Synth,
    Run,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub command: String,
    pub mode: Mode,
    pub seed: u64,
    pub status: &'static str,
    pub exit_code: u8,
    pub failed_stage: Option<Stage>,
    pub error_kind: Option<&'static str>,
    pub error: Option<String>,
    pub warnings: Vec<String>,
    pub initial: Option<InitialReport>,
    pub feasibility: Option<FeasibilityReport>,
    pub assumptions: Option<AssumptionsReport>,
    pub synthesis: Option<SynthesisReport>,
    pub certificate: Option<CertificateReport>,
    pub observer: Option<ObserverReport>,
    pub basin: Option<BasinReport>,
    pub simulation: Option<SimulationReport>,
    pub pattern: Option<PatternReport>,
    pub artifacts: Vec<String>,
}

impl Summary {
    pub fn new(scenario: &str, command: &str, mode: Mode, seed: u64) -> Self {
        Self {
            scenario: scenario.to_owned(),
            command: command.to_owned(),
            mode,
            seed,
            status: "ok",
            exit_code: 0,
            failed_stage: None,
            error_kind: None,
            error: None,
            warnings: Vec::new(),
            initial: None,
            feasibility: None,
            assumptions: None,
            synthesis: None,
            certificate: None,
            observer: None,
            basin: None,
            simulation: None,
            pattern: None,
            artifacts: Vec::new(),
        }
    }

    pub fn record_failure(&mut self, failure: &Failure) {
        self.status = "failed";
        self.exit_code = failure.error.exit_code();
        self.failed_stage = Some(failure.stage);
        self.error_kind = Some(failure.error.kind());
        self.error = Some(failure.error.to_string());
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialReport {
    pub x0: Vec<f64>,
    pub z0: Vec<f64>,
    pub e0_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub vertex: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
    pub x_star: Option<Vec<f64>>,
    pub u_star: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionsReport {
    pub graph_connected: bool,
    pub plant_controllable: bool,
    pub plant_observable: bool,
    pub augmented_controllable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthesisReport {
    pub p_norm: f64,
    pub riccati_residual: f64,
    pub deflated_dim: usize,
    pub newton_steps: usize,
    pub gain: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub zero_count: usize,
    pub max_other_real_part: f64,
    pub p_kernel_norm: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObserverReport {
    pub leader_connectivity: Option<f64>,
    pub chi_bound: Option<f64>,
    pub chi: f64,
    pub gain_condition_margin: Option<f64>,
    pub max_error_real_part: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasinReport {
    pub basin: &'static str,
    pub weight: f64,
    pub threshold: f64,
    pub margin: f64,
    pub member: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub dt: f64,
    pub t_end: f64,
    pub samples: usize,
    pub converged: bool,
    pub recommended_horizon: f64,
    pub predicted_limit: Vec<f64>,
    pub simulated_limit: Vec<f64>,
    pub relative_residual: f64,
    pub limit_matches_prediction: bool,
    pub final_error_norms: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternReport {
    pub formed: bool,
    /// `‖x − (αᵀx/n)α‖ / ‖x‖` for the limiting agent states.
    pub deviation: f64,
    pub magnitude: f64,
}

/// Designs produced by the pipeline, kept for callers that go further.
#[derive(Debug, Clone)]
pub struct Designs {
    pub graph: Graph,
    pub spec: PatternSpec,
    pub plant: PlantModel,
    pub centralized: CentralizedDesign,
    pub observer: Option<(ObserverDesign, ErrorSystem)>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: Summary,
    pub data: InitialData,
    pub designs: Option<Designs>,
    pub trajectory: Option<TrajectoryRecord>,
    pub failure: Option<Failure>,
}

fn solver(stage: Stage) -> impl Fn(patternlq::Error) -> Failure {
    move |e| Failure::new(stage, CliError::Solver(e.to_string()))
}

/// Runs the pipeline to `depth`. Every failure is recorded in the summary
/// together with the stage it happened in.
pub fn run_pipeline(scenario: &Scenario, command: &str, mode: Mode, seed: u64, depth: Depth) -> Outcome {
    let data = scenario.initial_data(seed);
    let mut outcome = Outcome {
        summary: Summary::new(&scenario.name, command, mode, seed),
        data,
        designs: None,
        trajectory: None,
        failure: None,
    };
    if let Err(failure) = drive(scenario, mode, depth, &mut outcome) {
        outcome.summary.record_failure(&failure);
        outcome.failure = Some(failure);
    }
    outcome
}

fn drive(scenario: &Scenario, mode: Mode, depth: Depth, out: &mut Outcome) -> Result<(), Failure> {
    let summary = &mut out.summary;
    summary.initial = Some(InitialReport {
        x0: out.data.x0.as_slice().to_vec(),
        z0: out.data.z0.as_slice().to_vec(),
        e0_norm: (mode == Mode::Distributed).then(|| out.data.e0.norm()),
    });

    let config = |e: CliError| Failure::new(Stage::Config, e);
    let graph = scenario.graph.build().map_err(config)?;
    let alpha = scenario.alpha.build().map_err(config)?;
    let spec = PatternSpec::new(alpha, scenario.p0)
        .map_err(|e| config(CliError::config("alpha", e)))?;
    let plant = PlantModel::new(graph.clone(), scenario.a, &scenario.leaders)
        .map_err(|e| config(CliError::config("leaders", e)))?;
    let q = build_pattern_matrix(&graph, &spec).map_err(|e| config(CliError::config("alpha", e)))?;

    let assumptions = check_assumptions(&plant, &q).map_err(solver(Stage::Assumptions))?;
    summary.assumptions = Some(AssumptionsReport {
        graph_connected: assumptions.graph_connected,
        plant_controllable: assumptions.plant_controllable,
        plant_observable: assumptions.plant_observable,
        augmented_controllable: assumptions.augmented_controllable,
    });

    let feasibility = solve_equilibrium(&plant, &spec).map_err(solver(Stage::Feasibility))?;
    let equilibrium = match feasibility {
        FeasibilityOutcome::Feasible(eq) => {
            summary.feasibility = Some(FeasibilityReport {
                feasible: true,
                violations: Vec::new(),
                x_star: Some(eq.x_star.as_slice().to_vec()),
                u_star: Some(eq.u_star.as_slice().to_vec()),
            });
            eq
        }
        FeasibilityOutcome::Infeasible(violations) => {
            let listed: Vec<String> = violations.iter().map(|v| v.vertex.to_string()).collect();
            summary.feasibility = Some(FeasibilityReport {
                feasible: false,
                violations: violations
                    .iter()
                    .map(|v| Violation {
                        vertex: v.vertex,
                        residual: v.residual,
                    })
                    .collect(),
                x_star: None,
                u_star: None,
            });
            return Err(Failure::new(
                Stage::Feasibility,
                CliError::Infeasible(format!(
                    "no steady input holds the pattern; followers {} violate the equilibrium",
                    listed.join(", ")
                )),
            ));
        }
    };
    if !assumptions.all_pass() {
        let failed: Vec<&str> = [
            (assumptions.graph_connected, "graph connected"),
            (assumptions.plant_controllable, "plant controllable"),
            (assumptions.plant_observable, "plant observable"),
            (assumptions.augmented_controllable, "augmented system controllable"),
        ]
        .iter()
        .filter(|(ok, _)| !ok)
        .map(|(_, name)| *name)
        .collect();
        return Err(Failure::new(
            Stage::Assumptions,
            CliError::Assumption(format!("failed: {}", failed.join(", "))),
        ));
    }
    if depth == Depth::Check {
        return Ok(());
    }

    let system = build_augmented(&plant, &q).map_err(solver(Stage::Synthesis))?;
    let cd = synthesize_centralized(&system, &equilibrium).map_err(solver(Stage::Synthesis))?;
    summary.synthesis = Some(SynthesisReport {
        p_norm: cd.p().norm(),
        riccati_residual: cd.care.residual_norm,
        deflated_dim: cd.care.deflated_dim,
        newton_steps: cd.care.newton_steps,
        gain: cd.gain.row_iter().map(|r| r.iter().copied().collect()).collect(),
    });
    let cert = certify_spectrum(&cd).map_err(solver(Stage::Certificate))?;
    summary.certificate = Some(CertificateReport {
        zero_count: cert.zero_count,
        max_other_real_part: cert.max_other_real_part,
        p_kernel_norm: cert.p_kernel_norm,
        passed: cert.passed,
    });
    if !cert.passed {
        return Err(Failure::new(
            Stage::Certificate,
            CliError::Solver("closed loop does not have a single simple zero mode".into()),
        ));
    }

    let observer = if mode == Mode::Distributed {
        let leader_graph = match &scenario.leader_graph {
            LeaderGraphSpec::Path => Ok(Graph::path(plant.m())),
            LeaderGraphSpec::Induced => plant.leader_subgraph(),
            LeaderGraphSpec::Edges { edges } => Graph::from_edges(
                plant.m(),
                &edges.iter().map(|&[i, j]| (i, j)).collect::<Vec<_>>(),
            ),
        }
        .map_err(|e| config(CliError::config("leader_graph", e)))?;
        if !leader_graph.is_connected() {
            return Err(Failure::new(
                Stage::Observer,
                CliError::Assumption("leader graph is not connected".into()),
            ));
        }
        let options = ObserverOptions {
            safety_factor: scenario.observer.safety_factor,
            ..ObserverOptions::default()
        };
        let mm = build_measurements(&plant);
        let od = design_observer(&system, &cd, &mm, &leader_graph, &options)
            .map_err(solver(Stage::Observer))?;
        let es = build_error_system(&od, &cd).map_err(solver(Stage::Observer))?;
        let margin = match od.m {
            1 => None,
            _ => Some(gain_condition_margin(&od).map_err(solver(Stage::Observer))?),
        };
        summary.warnings.extend(od.warnings.iter().cloned());
        summary.observer = Some(ObserverReport {
            leader_connectivity: od.leader_connectivity,
            chi_bound: od.chi_bound,
            chi: od.chi,
            gain_condition_margin: margin,
            max_error_real_part: es.max_error_real_part,
        });
        Some((od, es))
    } else {
        None
    };

    let xbar0 = out.data.xbar0();
    let (basin_name, verdict, weight) = match &observer {
        None => {
            let v = in_basin_u1(&cd, &xbar0, &spec).map_err(solver(Stage::Synthesis))?;
            ("U1", v, cd.zero_mode_weight(&xbar0).map_err(solver(Stage::Synthesis))?)
        }
        Some((_, es)) => {
            let v = in_basin_u2(es, &cd, &xbar0, &out.data.e0, &spec)
                .map_err(solver(Stage::Observer))?;
            let w = es
                .zero_mode_weight(&cd, &xbar0, &out.data.e0)
                .map_err(solver(Stage::Observer))?;
            ("U2", v, w)
        }
    };
    summary.basin = Some(basin_report(basin_name, weight, verdict));

    let designs = Designs {
        graph,
        spec,
        plant,
        centralized: cd,
        observer,
    };
    let result = if depth == Depth::Run {
        simulate(scenario, &designs, &out.data, summary).and_then(|(rec, verdict)| {
            out.trajectory = Some(rec);
            verdict.map_or(Ok(()), Err)
        })
    } else {
        Ok(())
    };
    out.designs = Some(designs);
    result
}

fn basin_report(basin: &'static str, weight: f64, v: BasinVerdict) -> BasinReport {
    BasinReport {
        basin,
        weight,
        threshold: v.threshold,
        margin: v.margin,
        member: v.member,
    }
}

/// `‖x − (αᵀx/n)α‖ / ‖x‖`, zero for an exact multiple of `α`.
pub fn pattern_deviation(x: &DVector<f64>, spec: &PatternSpec) -> f64 {
    let alpha = spec.alpha_vector();
    let scale = alpha.dot(x) / alpha.dot(&alpha);
    let norm = x.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (x - alpha * scale).norm() / norm
}

/// `‖a − b‖/‖b‖`, or the absolute gap when `b` vanishes.
pub fn relative_residual(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let gap = (a - b).norm();
    let scale = b.norm();
    if scale > 0.0 {
        gap / scale
    } else {
        gap
    }
}

/// Simulates and validates. A run that fails validation still returns its
/// trajectory, together with the failure.
fn simulate(
    scenario: &Scenario,
    designs: &Designs,
    data: &InitialData,
    summary: &mut Summary,
) -> Result<(TrajectoryRecord, Option<Failure>), Failure> {
    let cd = &designs.centralized;
    let opts: SimOptions = scenario.sim.options();
    let d = cd.psi1.len();
    let n = designs.plant.n();
    let xbar0 = data.xbar0();
    let cert_re = summary
        .certificate
        .as_ref()
        .map(|c| c.max_other_real_part)
        .unwrap_or(-1.0);
    let mut horizon = recommended_horizon(cert_re);
    let (rec, predicted) = match &designs.observer {
        None => (
            simulate_centralized(cd, &xbar0, &opts).map_err(solver(Stage::Simulation))?,
            predict_limit(cd, &xbar0).map_err(solver(Stage::Simulation))?,
        ),
        Some((_, es)) => {
            horizon = horizon.max(recommended_horizon(es.max_error_real_part));
            (
                simulate_distributed(es, cd, &xbar0, &data.e0, &opts)
                    .map_err(solver(Stage::Simulation))?,
                predict_limit_distributed(es, cd, &xbar0, &data.e0)
                    .map_err(solver(Stage::Simulation))?,
            )
        }
    };
    if opts.t_end < horizon {
        summary.warnings.push(format!(
            "t_end = {} is shorter than the recommended horizon {horizon:.3}",
            opts.t_end
        ));
    }
    let limit = rec.limit_estimate.rows(0, d).into_owned();
    let residual = relative_residual(&limit, &predicted);
    let matches = residual <= scenario.solver.limit_tol;
    summary.simulation = Some(SimulationReport {
        dt: opts.dt,
        t_end: opts.t_end,
        samples: rec.len(),
        converged: rec.converged,
        recommended_horizon: horizon,
        predicted_limit: predicted.as_slice().to_vec(),
        simulated_limit: limit.as_slice().to_vec(),
        relative_residual: residual,
        limit_matches_prediction: matches,
        final_error_norms: rec.error_norms.last().cloned(),
    });

    let x = limit.rows(0, n).into_owned();
    let formed = is_in_pattern(&x, &designs.graph, &designs.spec, scenario.solver.membership_tol)
        .map_err(solver(Stage::Validation))?;
    summary.pattern = Some(PatternReport {
        formed,
        deviation: pattern_deviation(&x, &designs.spec),
        magnitude: x.amax(),
    });

    let verdict = if !rec.converged {
        Some(Failure::new(
            Stage::Simulation,
            CliError::NonConvergence(format!(
                "state still moving at t = {}; relative gap to the predicted limit {residual:e}",
                opts.t_end
            )),
        ))
    } else if !matches {
        Some(Failure::new(
            Stage::Validation,
            CliError::Solver(format!(
                "simulated limit differs from the prediction by {residual:e} (relative)"
            )),
        ))
    } else {
        None
    };
    Ok((rec, verdict))
}
