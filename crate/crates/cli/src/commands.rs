use std::path::Path;
use std::time::{Duration, Instant};

use ldmcast::baselines::{solve_fixed_cluster, solve_multicast_only, solve_unicast_only, static_cluster, SolverChoice};
use ldmcast::bb::{solve_bb, BbCertificate, BbOptions};
use ldmcast::ccp::{solve_ccp_report, CcpOptions, CcpRun};
use ldmcast::io::{load_instance, save_instance};
use ldmcast::scenario::{dbm_to_watts, generate as draw, ScenarioConfig};
use ldmcast::{check_feasibility, MessageSet, ProblemInstance, Solution};
use rayon::prelude::*;
use serde::Serialize;

use crate::record::{ResultFile, TdmSummary};
use crate::{svg, Axis, CliError, SolverKind, SolverParams, SweepArgs, VERSION};

const GATE_TOL: f64 = 1e-6;

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<ProblemInstance, CliError> {
    load_instance(path).map_err(|e| match e {
        ldmcast::Error::Io(io) => CliError::Io(format!("{}: {io}", path.display())),
        other => CliError::Usage(format!("{}: {other}", path.display())),
    })
}

pub fn generate(config: &Path, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let mut cfg = ScenarioConfig::from_json(&read(config)?)?;
    if let Some(s) = seed {
        cfg = cfg.with_seed(s);
    }
    let inst = draw(&cfg)?;
    save_instance(&inst, out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))
}

impl SolverParams {
    pub fn ccp(&self) -> Result<CcpOptions, CliError> {
        let o = CcpOptions {
            theta: self.theta,
            power_threshold_w: dbm_to_watts(self.power_threshold_dbm),
            rel_tol: self.ccp_rel_tol,
            max_iter: self.ccp_max_iter,
            restarts: self.restarts,
            seed: self.seed,
            ..Default::default()
        };
        o.validate()?;
        Ok(o)
    }

    pub fn bb(&self) -> Result<BbOptions, CliError> {
        if !(self.eps > 0.0) {
            return Err(CliError::Usage(format!("--eps must be positive, got {}", self.eps)));
        }
        if !(self.time_limit_s > 0.0 && self.time_limit_s.is_finite()) {
            return Err(CliError::Usage(format!("--time-limit-s must be positive, got {}", self.time_limit_s)));
        }
        Ok(BbOptions {
            eps: self.eps,
            max_iter: self.bb_max_iter,
            max_time: Duration::from_secs_f64(self.time_limit_s),
            binary_first: self.binary_first,
            ..Default::default()
        })
    }

    fn instance(&self, base: &ProblemInstance) -> Result<ProblemInstance, CliError> {
        match self.eta {
            Some(e) => Ok(base.with_eta(e)?),
            None => Ok(base.clone()),
        }
    }
}

/// Everything a single solve produces.
pub struct Outcome {
    pub solution: Option<Solution>,
    pub objective_bps: f64,
    pub multicast_bps: f64,
    pub unicast_bps: f64,
    pub cert: Option<BbCertificate>,
    pub runs: Vec<CcpRun>,
    pub tdm: Option<(Solution, Solution)>,
}

impl Outcome {
    fn from_solution(inst: &ProblemInstance, sol: Solution) -> Self {
        Outcome {
            objective_bps: sol.objective,
            multicast_bps: sol.multicast_rate_bps(inst),
            unicast_bps: sol.unicast_rate_bps(inst),
            solution: Some(sol),
            cert: None,
            runs: Vec::new(),
            tdm: None,
        }
    }
}

/// `eta = 0` and `eta = 1` are the single-service problems.
fn messages_for(eta: f64) -> MessageSet {
    if eta == 0.0 {
        MessageSet::UnicastOnly
    } else if eta == 1.0 {
        MessageSet::MulticastOnly
    } else {
        MessageSet::All
    }
}

fn gate(inst: &ProblemInstance, sol: &Solution, what: &str) -> Result<(), CliError> {
    let rep = check_feasibility(inst, sol);
    if rep.feasible(GATE_TOL) {
        Ok(())
    } else {
        Err(CliError::Solve(format!("{what} violates the constraints by {:.3e}", rep.worst())))
    }
}

pub fn run_solver(inst: &ProblemInstance, kind: SolverKind, params: &SolverParams, t_m: f64) -> Result<Outcome, CliError> {
    let messages = messages_for(inst.eta());
    let out = match kind {
        SolverKind::Bb => {
            let cert = solve_bb(inst, &BbOptions { messages, ..params.bb()? })?;
            let mut o = Outcome::from_solution(inst, cert.best_solution.clone());
            o.cert = Some(cert);
            o
        }
        SolverKind::Ccp => {
            let rep = solve_ccp_report(inst, &CcpOptions { messages, ..params.ccp()? })?;
            let mut o = Outcome::from_solution(inst, rep.solution);
            o.runs = rep.runs;
            o
        }
        SolverKind::Static => {
            let m = params.cluster_size.unwrap_or(inst.dims().n_bs);
            let s = static_cluster(inst, m)?;
            Outcome::from_solution(inst, solve_fixed_cluster(inst, &s, &params.ccp()?)?)
        }
        SolverKind::Tdm => {
            let (m, u) = pure_solves(inst, params)?;
            let (rm, ru) = tdm_pair(inst, &m, &u, t_m)?;
            Outcome {
                solution: None,
                objective_bps: inst.eta() * rm + (1.0 - inst.eta()) * ru,
                multicast_bps: rm,
                unicast_bps: ru,
                cert: None,
                runs: Vec::new(),
                tdm: Some((m, u)),
            }
        }
    };
    if let Some(sol) = &out.solution {
        gate(inst, sol, "solution")?;
    }
    Ok(out)
}

fn pure_solves(inst: &ProblemInstance, params: &SolverParams) -> Result<(Solution, Solution), CliError> {
    let solver = SolverChoice::Ccp(params.ccp()?);
    let m = solve_multicast_only(inst, &solver)?;
    let u = solve_unicast_only(inst, &solver)?;
    gate(&inst.with_eta(1.0)?, &m, "multicast-only solution")?;
    gate(&inst.with_eta(0.0)?, &u, "unicast-only solution")?;
    Ok((m, u))
}

fn tdm_pair(inst: &ProblemInstance, m: &Solution, u: &Solution, t_m: f64) -> Result<(f64, f64), CliError> {
    if !(0.0..=1.0).contains(&t_m) {
        return Err(CliError::Usage(format!("t_m must lie in [0, 1], got {t_m}")));
    }
    Ok((t_m * m.multicast_rate_bps(inst), (1.0 - t_m) * u.unicast_rate_bps(inst)))
}

pub fn solve(
    path: &Path,
    kind: SolverKind,
    out: Option<&Path>,
    trace: Option<&Path>,
    params: &SolverParams,
) -> Result<(), CliError> {
    let inst = params.instance(&load(path)?)?;
    let t0 = Instant::now();
    let res = run_solver(&inst, kind, params, params.t_m);
    let wall = t0.elapsed().as_secs_f64();
    let outcome = match res {
        Ok(o) => o,
        Err(e) => {
            if let Some(out) = out {
                let rec = ResultFile::failed(kind, params, inst.eta(), wall, &e);
                write(out, &(serde_json::to_string_pretty(&rec).expect("serializable") + "\n"))?;
            }
            return Err(e);
        }
    };

    let mut rec = ResultFile::new(kind, params, inst.eta(), wall);
    if let Some(sol) = &outcome.solution {
        rec = rec.with_solution(&inst, sol);
    }
    if let Some(cert) = &outcome.cert {
        rec = rec.with_certificate(&inst, cert);
    }
    rec = rec.with_runs(&outcome.runs);
    if let Some((m, u)) = &outcome.tdm {
        rec.objective_bps = Some(outcome.objective_bps);
        rec.objective_bps_per_hz = Some(outcome.objective_bps / inst.bandwidth());
        rec.multicast_rate_bps = Some(outcome.multicast_bps);
        rec.unicast_rate_bps = Some(outcome.unicast_bps);
        rec.tdm = Some(TdmSummary {
            t_m: params.t_m,
            multicast_only_bps: m.multicast_rate_bps(&inst),
            unicast_only_bps: u.unicast_rate_bps(&inst),
            multicast_solution: ldmcast::io::SolutionFile::from_solution(m),
            unicast_solution: ldmcast::io::SolutionFile::from_solution(u),
        });
    }
    let text = serde_json::to_string_pretty(&rec).expect("serializable") + "\n";
    match out {
        Some(p) => write(p, &text)?,
        None => print!("{text}"),
    }
    if let Some(p) = trace {
        write_trace(p, &inst, &outcome)?;
    }
    Ok(())
}

fn write_trace(path: &Path, inst: &ProblemInstance, o: &Outcome) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    if let Some(cert) = &o.cert {
        w.write_record(["iteration", "upper_bps_per_hz", "lower_bps_per_hz", "active_boxes", "elapsed_s"])?;
        for t in &cert.trace {
            w.serialize((t.iteration, t.upper, t.lower, t.active_boxes, t.elapsed_s))?;
        }
    } else if !o.runs.is_empty() {
        w.write_record(["run_seed", "stage", "iteration", "objective_bps", "objective_bps_per_hz"])?;
        for r in &o.runs {
            for (stage, tr) in [("ccp", &r.trace), ("refine", &r.refine_trace)] {
                for (i, v) in tr.iter().enumerate() {
                    w.serialize((r.seed, stage, i, v, v / inst.bandwidth()))?;
                }
            }
        }
    } else {
        eprintln!("note: no per-iteration trace for this solver");
    }
    w.flush()?;
    Ok(())
}

pub fn validate(instance: &Path, result: &Path, tol: f64) -> Result<(), CliError> {
    let base = load(instance)?;
    let rec: ResultFile =
        serde_json::from_str(&read(result)?).map_err(|e| CliError::Usage(format!("{}: {e}", result.display())))?;
    if rec.status != "ok" {
        return Err(CliError::Solve(format!("result records a failed solve: {:?}", rec.error)));
    }
    let inst = base.with_eta(rec.eta)?;
    let d = inst.dims();
    let mut checks = Vec::new();
    if let Some(s) = rec.solution {
        checks.push(("solution", inst.clone(), s.into_solution(d)?));
    }
    if let Some(t) = rec.tdm {
        checks.push(("multicast_solution", inst.with_eta(1.0)?, t.multicast_solution.into_solution(d)?));
        checks.push(("unicast_solution", inst.with_eta(0.0)?, t.unicast_solution.into_solution(d)?));
    }
    if checks.is_empty() {
        return Err(CliError::Usage("result holds no solution".into()));
    }
    let mut ok = true;
    let mut report = serde_json::Map::new();
    for (name, inst, sol) in &checks {
        let rep = check_feasibility(inst, sol);
        ok &= rep.feasible(tol);
        report.insert((*name).into(), serde_json::to_value(&rep).expect("serializable"));
    }
    report.insert("feasible".into(), ok.into());
    report.insert("tol".into(), tol.into());
    println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
    if ok {
        Ok(())
    } else {
        Err(CliError::Solve(format!("solution infeasible at tol {tol:e}")))
    }
}

fn parse_seeds(text: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Usage(format!("--seeds: expected `a..b` or a comma list, got `{text}`"));
    if let Some((a, b)) = text.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a >= b {
            return Err(bad());
        }
        return Ok((a..b).collect());
    }
    text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

/// One row of the per-cell sweep CSV.
#[derive(Debug, Clone, Serialize)]
pub struct CellRow {
    pub axis: &'static str,
    pub value: f64,
    pub seed: u64,
    pub source: String,
    pub solver: &'static str,
    pub status: &'static str,
    pub objective_bps: Option<f64>,
    pub multicast_rate_bps: Option<f64>,
    pub unicast_rate_bps: Option<f64>,
    pub multicast_cluster_size: Option<f64>,
    pub mean_unicast_cluster_size: Option<f64>,
    pub wall_time_s: f64,
    pub eta: f64,
    pub eps: f64,
    pub theta: f64,
    pub power_threshold_dbm: f64,
    pub ccp_max_iter: usize,
    pub ccp_rel_tol: f64,
    pub restarts: usize,
    pub t_m: Option<f64>,
    pub cluster_size: Option<usize>,
    pub version: &'static str,
    pub error: String,
}

/// Per-value means across seeds.
#[derive(Debug, Serialize)]
pub struct SummaryRow {
    pub axis: &'static str,
    pub value: f64,
    pub solver: &'static str,
    pub n_ok: usize,
    pub n_failed: usize,
    /// Seeds of the successful cells, `;`-separated.
    pub seeds: String,
    pub mean_objective_bps: Option<f64>,
    pub mean_multicast_rate_bps: Option<f64>,
    pub mean_unicast_rate_bps: Option<f64>,
    pub mean_multicast_cluster_size: Option<f64>,
    pub mean_unicast_cluster_size: Option<f64>,
    pub eps: f64,
    pub theta: f64,
    pub power_threshold_dbm: f64,
    pub ccp_max_iter: usize,
    pub ccp_rel_tol: f64,
    pub restarts: usize,
    pub version: &'static str,
}

struct Cell<'a> {
    value: f64,
    seed: u64,
    source: &'a str,
    instance: &'a ProblemInstance,
    solver: SolverKind,
}

fn blank_row(args: &SweepArgs, cell: &Cell, eta: f64) -> CellRow {
    let p = &args.params;
    CellRow {
        axis: args.axis.name(),
        value: cell.value,
        seed: cell.seed,
        source: cell.source.to_owned(),
        solver: cell.solver.name(),
        status: "ok",
        objective_bps: None,
        multicast_rate_bps: None,
        unicast_rate_bps: None,
        multicast_cluster_size: None,
        mean_unicast_cluster_size: None,
        wall_time_s: 0.0,
        eta,
        eps: p.eps,
        theta: p.theta,
        power_threshold_dbm: p.power_threshold_dbm,
        ccp_max_iter: p.ccp_max_iter,
        ccp_rel_tol: p.ccp_rel_tol,
        restarts: p.restarts,
        t_m: (cell.solver == SolverKind::Tdm).then_some(p.t_m),
        cluster_size: (cell.solver == SolverKind::Static).then(|| p.cluster_size.unwrap_or(cell.instance.dims().n_bs)),
        version: VERSION,
        error: String::new(),
    }
}

fn fill(row: &mut CellRow, res: Result<Outcome, CliError>) {
    match res {
        Ok(o) => {
            row.objective_bps = Some(o.objective_bps);
            row.multicast_rate_bps = Some(o.multicast_bps);
            row.unicast_rate_bps = Some(o.unicast_bps);
            if let Some(s) = &o.solution {
                row.multicast_cluster_size = Some(s.clustering.multicast_cluster_size());
                row.mean_unicast_cluster_size = Some(s.clustering.mean_unicast_cluster_size());
            }
        }
        Err(e) => {
            row.status = "failed";
            row.error = e.message().to_owned();
        }
    }
}

fn run_cell(args: &SweepArgs, cell: &Cell) -> CellRow {
    let t0 = Instant::now();
    let prepared = match args.axis {
        Axis::Backhaul => cell.instance.with_uniform_backhaul(cell.value * 1e6).map_err(CliError::from),
        Axis::Eta => cell.instance.with_eta(cell.value).map_err(CliError::from),
        Axis::TM => Ok(cell.instance.clone()),
    };
    let mut row = blank_row(args, cell, prepared.as_ref().map_or(cell.instance.eta(), |i| i.eta()));
    let res = prepared.and_then(|inst| run_solver(&inst, cell.solver, &args.params, args.params.t_m));
    fill(&mut row, res);
    row.wall_time_s = t0.elapsed().as_secs_f64();
    row
}

/// The time-share axis reuses one pair of single-service solves per
/// instance.
fn run_tdm_axis(args: &SweepArgs, inst: &ProblemInstance, seed: u64, source: &str) -> Vec<CellRow> {
    let t0 = Instant::now();
    let pure = pure_solves(inst, &args.params);
    let wall = t0.elapsed().as_secs_f64();
    args.values
        .iter()
        .map(|&v| {
            let cell = Cell { value: v, seed, source, instance: inst, solver: SolverKind::Tdm };
            let mut row = blank_row(args, &cell, inst.eta());
            row.t_m = Some(v);
            let res = match &pure {
                Ok((m, u)) => tdm_pair(inst, m, u, v).map(|(rm, ru)| Outcome {
                    solution: None,
                    objective_bps: inst.eta() * rm + (1.0 - inst.eta()) * ru,
                    multicast_bps: rm,
                    unicast_bps: ru,
                    cert: None,
                    runs: Vec::new(),
                    tdm: None,
                }),
                Err(e) => Err(CliError::Solve(e.message().to_owned())),
            };
            fill(&mut row, res);
            row.wall_time_s = wall;
            row
        })
        .collect()
}

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let mut instances: Vec<(u64, String, ProblemInstance)> = Vec::new();
    if let Some(cfg) = &args.config {
        let base = ScenarioConfig::from_json(&read(cfg)?)?;
        for s in parse_seeds(args.seeds.as_deref().unwrap_or(""))? {
            instances.push((s, format!("{}#{s}", cfg.display()), draw(&base.with_seed(s))?));
        }
    } else {
        for (i, p) in args.instances.iter().enumerate() {
            instances.push((i as u64, p.display().to_string(), load(p)?));
        }
    }
    if instances.is_empty() {
        return Err(CliError::Usage("no instances: pass --instances or --config with --seeds".into()));
    }
    for (_, _, inst) in instances.iter_mut() {
        *inst = args.params.instance(inst)?;
    }
    if args.axis == Axis::TM && args.solvers.iter().any(|&s| s != SolverKind::Tdm) {
        return Err(CliError::Usage("the t_m axis applies to the tdm solver only".into()));
    }
    for &v in &args.values {
        let ok = match args.axis {
            Axis::Backhaul => v >= 0.0 && v.is_finite(),
            Axis::Eta | Axis::TM => (0.0..=1.0).contains(&v),
        };
        if !ok {
            return Err(CliError::Usage(format!("value {v} is out of range for axis {}", args.axis.name())));
        }
    }

    let mut rows: Vec<CellRow> = if args.axis == Axis::TM {
        instances.par_iter().flat_map_iter(|(seed, src, inst)| run_tdm_axis(args, inst, *seed, src)).collect()
    } else {
        let mut cells = Vec::new();
        for &value in &args.values {
            for (seed, source, instance) in &instances {
                for &solver in &args.solvers {
                    cells.push(Cell { value, seed: *seed, source, instance, solver });
                }
            }
        }
        cells.par_iter().map(|c| run_cell(args, c)).collect()
    };
    let order = |s: &str| args.solvers.iter().position(|k| k.name() == s).unwrap_or(usize::MAX);
    rows.sort_by(|a, b| {
        a.value.total_cmp(&b.value).then(a.seed.cmp(&b.seed)).then(order(a.solver).cmp(&order(b.solver)))
    });

    let mut w = csv::Writer::from_path(&args.out)?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;

    let summary = summarize(args, &rows);
    if let Some(p) = &args.summary {
        let mut w = csv::Writer::from_path(p)?;
        for r in &summary {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    if let Some(p) = &args.svg {
        write(p, &plot(args, &summary))?;
    }
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    if failed > 0 {
        eprintln!("note: {failed} of {} cells failed; see the error column", rows.len());
    }
    Ok(())
}

fn summarize(args: &SweepArgs, rows: &[CellRow]) -> Vec<SummaryRow> {
    let mut out: Vec<SummaryRow> = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        let key = (rows[i].value, rows[i].solver);
        let group: Vec<&CellRow> = rows[i..].iter().take_while(|r| (r.value, r.solver) == key).collect();
        i += group.len();
        // rows are sorted by (value, seed, solver); gather all seeds of this key
        if let Some(prev) = out.iter_mut().find(|s| s.value == key.0 && s.solver == key.1) {
            merge(prev, &group);
            continue;
        }
        let p = &args.params;
        let mut row = SummaryRow {
            axis: args.axis.name(),
            value: key.0,
            solver: key.1,
            n_ok: 0,
            n_failed: 0,
            seeds: String::new(),
            mean_objective_bps: None,
            mean_multicast_rate_bps: None,
            mean_unicast_rate_bps: None,
            mean_multicast_cluster_size: None,
            mean_unicast_cluster_size: None,
            eps: p.eps,
            theta: p.theta,
            power_threshold_dbm: p.power_threshold_dbm,
            ccp_max_iter: p.ccp_max_iter,
            ccp_rel_tol: p.ccp_rel_tol,
            restarts: p.restarts,
            version: VERSION,
        };
        merge(&mut row, &group);
        out.push(row);
    }
    out
}

/// Folds `group` into the running means of `s`.
fn merge(s: &mut SummaryRow, group: &[&CellRow]) {
    let ok: Vec<&&CellRow> = group.iter().filter(|r| r.status == "ok").collect();
    s.n_failed += group.len() - ok.len();
    let n0 = s.n_ok as f64;
    let n1 = (s.n_ok + ok.len()) as f64;
    let upd = |mean: &mut Option<f64>, vals: Vec<Option<f64>>| {
        let vals: Vec<f64> = vals.into_iter().flatten().collect();
        if vals.is_empty() {
            return;
        }
        let sum: f64 = vals.iter().sum();
        *mean = Some((mean.unwrap_or(0.0) * n0 + sum) / n1);
    };
    upd(&mut s.mean_objective_bps, ok.iter().map(|r| r.objective_bps).collect());
    upd(&mut s.mean_multicast_rate_bps, ok.iter().map(|r| r.multicast_rate_bps).collect());
    upd(&mut s.mean_unicast_rate_bps, ok.iter().map(|r| r.unicast_rate_bps).collect());
    upd(&mut s.mean_multicast_cluster_size, ok.iter().map(|r| r.multicast_cluster_size).collect());
    upd(&mut s.mean_unicast_cluster_size, ok.iter().map(|r| r.mean_unicast_cluster_size).collect());
    for r in &ok {
        if !s.seeds.is_empty() {
            s.seeds.push(';');
        }
        s.seeds.push_str(&r.seed.to_string());
    }
    s.n_ok += ok.len();
}

fn plot(args: &SweepArgs, summary: &[SummaryRow]) -> String {
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for s in &args.solvers {
        let pts: Vec<(f64, f64)> = summary
            .iter()
            .filter(|r| r.solver == s.name())
            .filter_map(|r| match args.axis {
                Axis::Backhaul => r.mean_objective_bps.map(|o| (r.value, o / 1e6)),
                Axis::Eta | Axis::TM => r.mean_multicast_rate_bps.zip(r.mean_unicast_rate_bps).map(|(m, u)| (m / 1e6, u / 1e6)),
            })
            .collect();
        if !pts.is_empty() {
            series.push((s.name().to_owned(), pts));
        }
    }
    match args.axis {
        Axis::Backhaul => svg::line_plot(&series, "backhaul capacity (Mbps)", "weighted sum rate (Mbps)"),
        Axis::Eta | Axis::TM => svg::line_plot(&series, "multicast rate (Mbps)", "unicast rate (Mbps)"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("4, 9").unwrap(), vec![4, 9]);
        assert!(parse_seeds("3..3").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn endpoints_select_single_service_problems() {
        assert_eq!(messages_for(0.0), MessageSet::UnicastOnly);
        assert_eq!(messages_for(1.0), MessageSet::MulticastOnly);
        assert_eq!(messages_for(0.5), MessageSet::All);
    }
}
