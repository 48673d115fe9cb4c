use ldmcast::bb::{BbCertificate, Termination};
use ldmcast::ccp::{CcpRun, StopReason};
use ldmcast::io::{SolutionFile, SCHEMA_VERSION};
use ldmcast::{ProblemInstance, Solution};
use serde::{Deserialize, Serialize};

use crate::{CliError, SolverKind, SolverParams, VERSION};

/// The JSON written by `solve`.
#[derive(Debug, Serialize, Deserialize)]
pub struct ResultFile {
    pub schema_version: u32,
    pub software_version: String,
    pub solver: SolverKind,
    /// `ok` or `failed`.
    pub status: String,
    pub params: SolverParams,
    /// Weight the objective was measured with.
    pub eta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective_bps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective_bps_per_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multicast_rate_bps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unicast_rate_bps: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rates_bps_per_hz: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rates_bps: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multicast_cluster_size: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_unicast_cluster_size: Option<f64>,
    pub wall_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bb: Option<BbSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ccp_runs: Vec<RunSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tdm: Option<TdmSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solution: Option<SolutionFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BbSummary {
    pub upper_bps: f64,
    pub lower_bps: f64,
    pub gap_bps_per_hz: f64,
    pub iterations: usize,
    pub boxes_explored: usize,
    pub termination: Termination,
    pub solver_failures: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub iterations: usize,
    pub stop: StopReason,
    pub objective_bps: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TdmSummary {
    pub t_m: f64,
    pub multicast_only_bps: f64,
    pub unicast_only_bps: f64,
    pub multicast_solution: SolutionFile,
    pub unicast_solution: SolutionFile,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

impl ResultFile {
    pub fn new(solver: SolverKind, params: &SolverParams, eta: f64, wall_time_s: f64) -> Self {
        ResultFile {
            schema_version: SCHEMA_VERSION,
            software_version: VERSION.to_owned(),
            solver,
            status: "ok".into(),
            params: params.clone(),
            eta,
            objective_bps: None,
            objective_bps_per_hz: None,
            multicast_rate_bps: None,
            unicast_rate_bps: None,
            rates_bps_per_hz: Vec::new(),
            rates_bps: Vec::new(),
            multicast_cluster_size: None,
            mean_unicast_cluster_size: None,
            wall_time_s,
            bb: None,
            ccp_runs: Vec::new(),
            tdm: None,
            solution: None,
            error: None,
        }
    }

    pub fn failed(solver: SolverKind, params: &SolverParams, eta: f64, wall_time_s: f64, e: &CliError) -> Self {
        ResultFile {
            status: "failed".into(),
            error: Some(ErrorRecord { kind: e.kind().into(), message: e.message().into() }),
            ..Self::new(solver, params, eta, wall_time_s)
        }
    }

    pub fn with_solution(mut self, instance: &ProblemInstance, sol: &Solution) -> Self {
        let b = instance.bandwidth();
        self.objective_bps = Some(sol.objective);
        self.objective_bps_per_hz = Some(sol.objective / b);
        self.multicast_rate_bps = Some(sol.multicast_rate_bps(instance));
        self.unicast_rate_bps = Some(sol.unicast_rate_bps(instance));
        self.rates_bps_per_hz = sol.rates.0.clone();
        self.rates_bps = sol.rates.0.iter().map(|r| r * b).collect();
        self.multicast_cluster_size = Some(sol.clustering.multicast_cluster_size());
        self.mean_unicast_cluster_size = Some(sol.clustering.mean_unicast_cluster_size());
        self.solution = Some(SolutionFile::from_solution(sol));
        self
    }

    pub fn with_certificate(mut self, instance: &ProblemInstance, cert: &BbCertificate) -> Self {
        self.bb = Some(BbSummary {
            upper_bps: cert.global_upper,
            lower_bps: cert.global_lower,
            gap_bps_per_hz: (cert.global_upper - cert.global_lower) / instance.bandwidth(),
            iterations: cert.iterations,
            boxes_explored: cert.boxes_explored,
            termination: cert.termination,
            solver_failures: cert.solver_failures,
        });
        self
    }

    pub fn with_runs(mut self, runs: &[CcpRun]) -> Self {
        self.ccp_runs = runs
            .iter()
            .map(|r| RunSummary { seed: r.seed, iterations: r.iterations, stop: r.stop, objective_bps: r.solution.objective })
            .collect();
        self
    }
}
