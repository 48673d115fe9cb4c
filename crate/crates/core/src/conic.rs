//! Convex subproblem engine.
//!
//! A [`ConicProgram`] is assembled row by row from affine expressions, then
//! presolved (fixed variables substituted, empty cone rows dropped) and
//! handed to the Clarabel interior-point solver. Log objectives are lowered
//! to exponential-cone rows `(u, 1, 1 + a(x))`, i.e. `u <= ln(1 + a(x))`.
//!
//! The solver's own termination is not trusted blindly: the returned point
//! is re-evaluated against every original row and is only reported as
//! [`ConicStatus::Optimal`] if the normalized violation is within
//! `feas_tol` and the duality gap within `eps_sub`.

use std::collections::BTreeMap;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
    SupportedConeT::{ExponentialConeT, NonnegativeConeT, SecondOrderConeT, ZeroConeT},
};

use crate::error::{Error, Result};

/// `sum_i coef_i * x_i + constant`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Affine {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Affine {
    pub fn constant(c: f64) -> Self {
        Affine { terms: Vec::new(), constant: c }
    }

    pub fn var(i: usize) -> Self {
        Affine { terms: vec![(i, 1.0)], constant: 0.0 }
    }

    pub fn term(i: usize, coef: f64) -> Self {
        Affine { terms: vec![(i, coef)], constant: 0.0 }
    }

    pub fn add_term(&mut self, i: usize, coef: f64) -> &mut Self {
        if coef != 0.0 {
            self.terms.push((i, coef));
        }
        self
    }

    pub fn with_term(mut self, i: usize, coef: f64) -> Self {
        self.add_term(i, coef);
        self
    }

    pub fn plus(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for t in &mut self.terms {
            t.1 *= factor;
        }
        self.terms.retain(|t| t.1 != 0.0);
        self.constant *= factor;
        self
    }

    pub fn add(mut self, other: &Affine) -> Self {
        self.terms.extend_from_slice(&other.terms);
        self.constant += other.constant;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>() + self.constant
    }

    /// `1 + |constant| + sum |coef_i * x_i|`, the magnitude a row's residual
    /// is measured against.
    fn scale_at(&self, x: &[f64]) -> f64 {
        1.0 + self.constant.abs() + self.terms.iter().map(|&(i, c)| (c * x[i]).abs()).sum::<f64>()
    }

    fn merged(&self) -> BTreeMap<usize, f64> {
        let mut m = BTreeMap::new();
        for &(i, c) in &self.terms {
            *m.entry(i).or_insert(0.0) += c;
        }
        m.retain(|_, c| *c != 0.0);
        m
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Constraint {
    /// `expr == 0`
    Eq(Affine),
    /// `expr <= 0`
    Le(Affine),
    /// `|| (norm_0, norm_1, ...) ||_2 <= bound`
    Soc { bound: Affine, norm: Vec<Affine> },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Objective {
    Minimize(Affine),
    Maximize(Affine),
    /// Maximize `sum_k weight_k * log2(1 + arg_k(x)) + linear(x)`.
    MaximizeLogSum { terms: Vec<(f64, Affine)>, linear: Affine },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConicProgram {
    lower: Vec<f64>,
    upper: Vec<f64>,
    objective: Objective,
    rows: Vec<Constraint>,
}

impl ConicProgram {
    pub fn new(n_vars: usize) -> Self {
        ConicProgram {
            lower: vec![f64::NEG_INFINITY; n_vars],
            upper: vec![f64::INFINITY; n_vars],
            objective: Objective::Minimize(Affine::default()),
            rows: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.lower.len()
    }

    /// Appends a fresh unbounded variable and returns its index.
    pub fn add_var(&mut self) -> usize {
        self.lower.push(f64::NEG_INFINITY);
        self.upper.push(f64::INFINITY);
        self.lower.len() - 1
    }

    pub fn set_bounds(&mut self, i: usize, lo: f64, hi: f64) {
        self.lower[i] = lo;
        self.upper[i] = hi;
    }

    pub fn fix(&mut self, i: usize, value: f64) {
        self.set_bounds(i, value, value);
    }

    pub fn bounds(&self, i: usize) -> (f64, f64) {
        (self.lower[i], self.upper[i])
    }

    pub fn set_objective(&mut self, objective: Objective) {
        self.objective = objective;
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn rows(&self) -> &[Constraint] {
        &self.rows
    }

    pub fn add(&mut self, c: Constraint) {
        self.rows.push(c);
    }

    pub fn add_eq(&mut self, e: Affine) {
        self.rows.push(Constraint::Eq(e));
    }

    pub fn add_le(&mut self, e: Affine) {
        self.rows.push(Constraint::Le(e));
    }

    /// `lhs >= rhs`
    pub fn add_ge(&mut self, lhs: Affine, rhs: Affine) {
        self.rows.push(Constraint::Le(rhs.add(&lhs.scaled(-1.0))));
    }

    pub fn add_soc(&mut self, bound: Affine, norm: Vec<Affine>) {
        self.rows.push(Constraint::Soc { bound, norm });
    }

    /// `||norm||^2 <= a * b` with `a, b >= 0`, written as the second-order
    /// cone `||(norm, (a - b)/2)|| <= (a + b)/2`.
    pub fn add_rotated_soc(&mut self, a: Affine, b: Affine, mut norm: Vec<Affine>) {
        let half_diff = a.clone().scaled(0.5).add(&b.clone().scaled(-0.5));
        let half_sum = a.scaled(0.5).add(&b.scaled(0.5));
        norm.push(half_diff);
        self.rows.push(Constraint::Soc { bound: half_sum, norm });
    }

    /// Copy with every inequality and cone row loosened by `slack`:
    /// `a(x) <= slack` and `||norm|| <= bound + slack`. Equalities and
    /// bounds are kept, so the feasible set only grows.
    pub fn loosened(&self, slack: f64) -> ConicProgram {
        let mut p = self.clone();
        for row in &mut p.rows {
            match row {
                Constraint::Eq(_) => {}
                Constraint::Le(e) => e.constant -= slack,
                Constraint::Soc { bound, .. } => bound.constant += slack,
            }
        }
        p
    }

    /// Phase-one program: minimize `t >= 0` subject to every inequality and
    /// cone row loosened by `t`. Returns the program and the index of `t`.
    /// It is always feasible when the equalities and bounds are, and its
    /// optimum is positive exactly when `self` is infeasible.
    pub fn phase_one(&self) -> (ConicProgram, usize) {
        let mut p = self.clone();
        let t = p.add_var();
        p.set_bounds(t, 0.0, f64::INFINITY);
        for row in &mut p.rows {
            match row {
                Constraint::Eq(_) => {}
                Constraint::Le(e) => {
                    e.add_term(t, -1.0);
                }
                Constraint::Soc { bound, .. } => {
                    bound.add_term(t, 1.0);
                }
            }
        }
        p.objective = Objective::Minimize(Affine::var(t));
        (p, t)
    }

    /// Objective value at `x` in the program's own sense.
    pub fn objective_at(&self, x: &[f64]) -> f64 {
        match &self.objective {
            Objective::Minimize(e) | Objective::Maximize(e) => e.eval(x),
            Objective::MaximizeLogSum { terms, linear } => {
                terms.iter().map(|(w, a)| w * a.eval(x).max(0.0).ln_1p() / std::f64::consts::LN_2).sum::<f64>()
                    + linear.eval(x)
            }
        }
    }

    /// Worst normalized violation of every row, bound and log domain at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (i, &xi) in x.iter().enumerate() {
            let s = 1.0 + xi.abs();
            worst = worst.max((self.lower[i] - xi).max(0.0) / s).max((xi - self.upper[i]).max(0.0) / s);
        }
        for row in &self.rows {
            let v = match row {
                Constraint::Eq(e) => e.eval(x).abs() / e.scale_at(x),
                Constraint::Le(e) => e.eval(x).max(0.0) / e.scale_at(x),
                Constraint::Soc { bound, norm } => {
                    let n = norm.iter().map(|e| e.eval(x).powi(2)).sum::<f64>().sqrt();
                    let scale = bound.scale_at(x) + norm.iter().map(|e| e.scale_at(x)).sum::<f64>();
                    (n - bound.eval(x)).max(0.0) / scale
                }
            };
            worst = worst.max(v);
        }
        if let Objective::MaximizeLogSum { terms, .. } = &self.objective {
            for (_, a) in terms {
                worst = worst.max((-a.eval(x)).max(0.0) / a.scale_at(x));
            }
        }
        worst
    }

    fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        let check = |e: &Affine| -> Result<()> {
            if let Some(&(i, _)) = e.terms.iter().find(|&&(i, _)| i >= n) {
                return Err(Error::MalformedProgram(format!("variable index {i} out of range ({n} variables)")));
            }
            if !e.constant.is_finite() || e.terms.iter().any(|t| !t.1.is_finite()) {
                return Err(Error::MalformedProgram("non-finite coefficient".into()));
            }
            Ok(())
        };
        for i in 0..n {
            if self.lower[i].is_nan() || self.upper[i].is_nan() || self.lower[i] > self.upper[i] {
                return Err(Error::MalformedProgram(format!(
                    "variable {i} has bounds [{}, {}]",
                    self.lower[i], self.upper[i]
                )));
            }
        }
        for row in &self.rows {
            match row {
                Constraint::Eq(e) | Constraint::Le(e) => check(e)?,
                Constraint::Soc { bound, norm } => {
                    check(bound)?;
                    norm.iter().try_for_each(check)?;
                }
            }
        }
        match &self.objective {
            Objective::Minimize(e) | Objective::Maximize(e) => check(e)?,
            Objective::MaximizeLogSum { terms, linear } => {
                check(linear)?;
                for (w, a) in terms {
                    if !(w.is_finite() && *w >= 0.0) {
                        return Err(Error::MalformedProgram(format!("log weight {w} must be nonnegative")));
                    }
                    check(a)?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConicStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
    NumericalFailure,
}

#[derive(Clone, Debug)]
pub struct ConicResult {
    pub status: ConicStatus,
    /// Primal point in the original variable space (fixed variables
    /// included). Empty when no point is available.
    pub x: Vec<f64>,
    /// Objective at `x` in the program's own sense.
    pub objective: f64,
    /// Relative primal-dual gap reported by the interior-point method.
    pub rel_gap: f64,
    /// Normalized worst constraint violation of `x`.
    pub max_violation: f64,
    pub iterations: u32,
    lowered: Option<LoweredSolution>,
}

#[derive(Clone, Debug)]
struct LoweredSolution {
    x: Vec<f64>,
    z: Vec<f64>,
    s: Vec<f64>,
}

impl ConicResult {
    pub fn without_point(status: ConicStatus) -> Self {
        ConicResult {
            status,
            x: Vec::new(),
            objective: f64::NAN,
            rel_gap: f64::NAN,
            max_violation: f64::NAN,
            iterations: 0,
            lowered: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == ConicStatus::Optimal
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub eps_sub: f64,
    pub feas_tol: f64,
    pub max_iter: u32,
    /// Skip Clarabel's equilibration. Slower, but recovers some badly
    /// scaled programs that otherwise stop with insufficient progress.
    pub cautious: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { eps_sub: 1e-8, feas_tol: 1e-8, max_iter: 200, cautious: false }
    }
}

/// The program after presolve, in Clarabel's form
/// `min 1/2 x'Px + q'x  s.t.  Ax + s = b, s in K`.
struct Lowered {
    n: usize,
    q: Vec<f64>,
    a_rows: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
    map: Vec<VarMap>,
    n_log: usize,
}

#[derive(Clone, Copy)]
enum VarMap {
    Free(usize),
    Fixed(f64),
}

enum Presolved {
    Program(Lowered),
    Infeasible,
}

fn reduce(e: &Affine, map: &[VarMap]) -> (Vec<(usize, f64)>, f64) {
    let mut c = e.constant;
    let mut terms = BTreeMap::new();
    for (i, coef) in e.merged() {
        match map[i] {
            VarMap::Fixed(v) => c += coef * v,
            VarMap::Free(j) => *terms.entry(j).or_insert(0.0) += coef,
        }
    }
    (terms.into_iter().filter(|&(_, v)| v != 0.0).collect(), c)
}

fn lower(program: &ConicProgram, feas_tol: f64) -> Presolved {
    let n_orig = program.n_vars();
    let mut map = Vec::with_capacity(n_orig);
    let mut n = 0;
    for i in 0..n_orig {
        let (lo, hi) = program.bounds(i);
        if lo == hi {
            map.push(VarMap::Fixed(lo));
        } else {
            map.push(VarMap::Free(n));
            n += 1;
        }
    }

    let mut zero_rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    let mut nonneg_rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    let mut soc_blocks: Vec<Vec<(Vec<(usize, f64)>, f64)>> = Vec::new();
    let constant_tol = |c: f64| feas_tol * (1.0 + c.abs());

    // each row is stored as an affine map s(x) = sum a_i x_i + c, lowered
    // later to A = -a, b = c
    for i in 0..n_orig {
        if let VarMap::Free(j) = map[i] {
            let (lo, hi) = program.bounds(i);
            if lo.is_finite() {
                nonneg_rows.push((vec![(j, 1.0)], -lo));
            }
            if hi.is_finite() {
                nonneg_rows.push((vec![(j, -1.0)], hi));
            }
        }
    }
    for row in program.rows() {
        match row {
            Constraint::Eq(e) => {
                let (t, c) = reduce(e, &map);
                if t.is_empty() {
                    if c.abs() > constant_tol(c) {
                        return Presolved::Infeasible;
                    }
                } else {
                    zero_rows.push((t, c));
                }
            }
            Constraint::Le(e) => {
                let (t, c) = reduce(e, &map);
                if t.is_empty() {
                    if c > constant_tol(c) {
                        return Presolved::Infeasible;
                    }
                } else {
                    nonneg_rows.push((t.into_iter().map(|(j, v)| (j, -v)).collect(), -c));
                }
            }
            Constraint::Soc { bound, norm } => {
                let (bt, bc) = reduce(bound, &map);
                let mut entries: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
                let mut constant_norm_sq = 0.0;
                for e in norm {
                    let (t, c) = reduce(e, &map);
                    if t.is_empty() {
                        constant_norm_sq += c * c;
                    } else {
                        entries.push((t, c));
                    }
                }
                if constant_norm_sq > 0.0 {
                    entries.push((Vec::new(), constant_norm_sq.sqrt()));
                }
                let all_constant = bt.is_empty() && entries.iter().all(|e| e.0.is_empty());
                if all_constant {
                    let nrm = entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
                    if nrm - bc > constant_tol(bc) {
                        return Presolved::Infeasible;
                    }
                } else if entries.is_empty() {
                    nonneg_rows.push((bt, bc));
                } else {
                    let mut block = vec![(bt, bc)];
                    block.extend(entries);
                    soc_blocks.push(block);
                }
            }
        }
    }

    let (obj_sign, linear, logs) = match program.objective() {
        Objective::Minimize(e) => (1.0, e.clone(), Vec::new()),
        Objective::Maximize(e) => (-1.0, e.clone(), Vec::new()),
        Objective::MaximizeLogSum { terms, linear } => (-1.0, linear.clone(), terms.clone()),
    };
    let (lin_terms, _) = reduce(&linear, &map);
    let n_log = logs.len();
    let n_total = n + n_log;
    let mut q = vec![0.0; n_total];
    for (j, v) in lin_terms {
        q[j] += obj_sign * v;
    }
    let mut exp_blocks = Vec::new();
    for (idx, (w, arg)) in logs.iter().enumerate() {
        let u = n + idx;
        q[u] = -w / std::f64::consts::LN_2;
        let (t, c) = reduce(arg, &map);
        // (u, 1, 1 + a(x)) in the exponential cone
        exp_blocks.push([(vec![(u, 1.0)], 0.0), (Vec::new(), 1.0), (t.clone(), 1.0 + c)]);
        nonneg_rows.push((t, c));
    }

    let mut a_rows = Vec::new();
    let mut b = Vec::new();
    let mut cones = Vec::new();
    let push = |rows: &mut Vec<Vec<(usize, f64)>>, b: &mut Vec<f64>, (t, c): (Vec<(usize, f64)>, f64)| {
        rows.push(t.into_iter().map(|(j, v)| (j, -v)).collect());
        b.push(c);
    };
    if !zero_rows.is_empty() {
        cones.push(ZeroConeT(zero_rows.len()));
        for r in zero_rows {
            push(&mut a_rows, &mut b, r);
        }
    }
    if !nonneg_rows.is_empty() {
        cones.push(NonnegativeConeT(nonneg_rows.len()));
        for r in nonneg_rows {
            push(&mut a_rows, &mut b, r);
        }
    }
    for block in soc_blocks {
        cones.push(SecondOrderConeT(block.len()));
        for r in block {
            push(&mut a_rows, &mut b, r);
        }
    }
    for block in exp_blocks {
        cones.push(ExponentialConeT());
        for r in block {
            push(&mut a_rows, &mut b, r);
        }
    }

    Presolved::Program(Lowered {
        n: n_total,
        q,
        a_rows,
        b,
        cones,
        map,
        n_log,
    })
}

impl Lowered {
    fn matrix(&self) -> CscMatrix<f64> {
        let (mut ii, mut jj, mut vv) = (Vec::new(), Vec::new(), Vec::new());
        for (r, row) in self.a_rows.iter().enumerate() {
            for &(j, v) in row {
                ii.push(r);
                jj.push(j);
                vv.push(v);
            }
        }
        CscMatrix::new_from_triplets(self.a_rows.len(), self.n, ii, jj, vv)
    }

    fn expand(&self, xr: &[f64]) -> Vec<f64> {
        self.map
            .iter()
            .map(|m| match *m {
                VarMap::Fixed(v) => v,
                VarMap::Free(j) => xr[j],
            })
            .collect()
    }
}

fn project_to_bounds(program: &ConicProgram, x: &mut [f64]) {
    for (i, xi) in x.iter_mut().enumerate() {
        let (lo, hi) = program.bounds(i);
        *xi = xi.clamp(lo, hi);
    }
}

/// Solves `program`. See the module documentation for the status contract.
pub fn solve(program: &ConicProgram, opts: &SolveOptions) -> Result<ConicResult> {
    if !(opts.eps_sub > 0.0 && opts.feas_tol > 0.0) {
        return Err(Error::InvalidArgument("eps_sub and feas_tol must be positive".into()));
    }
    program.validate()?;
    let lowered = match lower(program, opts.feas_tol) {
        Presolved::Infeasible => return Ok(ConicResult::without_point(ConicStatus::Infeasible)),
        Presolved::Program(l) => l,
    };

    if lowered.n == 0 {
        // every variable fixed; only constant rows remained and passed
        let x = lowered.expand(&[]);
        let violation = program.max_violation(&x);
        let status = if violation <= opts.feas_tol { ConicStatus::Optimal } else { ConicStatus::Infeasible };
        return Ok(ConicResult {
            status,
            objective: program.objective_at(&x),
            x,
            rel_gap: 0.0,
            max_violation: violation,
            iterations: 0,
            lowered: None,
        });
    }

    let p = CscMatrix::zeros((lowered.n, lowered.n));
    let a = lowered.matrix();
    let mut settings = DefaultSettings {
        verbose: false,
        max_iter: opts.max_iter,
        tol_gap_abs: opts.eps_sub,
        tol_gap_rel: opts.eps_sub,
        tol_feas: opts.feas_tol * 0.1,
        tol_ktratio: 1e-7,
        max_threads: 1,
        ..DefaultSettings::default()
    };
    if opts.cautious {
        settings.equilibrate_enable = false;
    }
    let mut solver = DefaultSolver::new(&p, &lowered.q, &a, &lowered.b, &lowered.cones, settings)
        .map_err(|e| Error::Solver(format!("{e:?}")))?;
    solver.solve();
    let sol = &solver.solution;
    let info = &solver.info;

    let base = match sol.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => None,
        SolverStatus::PrimalInfeasible => Some(ConicStatus::Infeasible),
        SolverStatus::DualInfeasible => Some(ConicStatus::Unbounded),
        SolverStatus::MaxIterations | SolverStatus::MaxTime => Some(ConicStatus::IterLimit),
        // the point may still pass the checks below
        SolverStatus::InsufficientProgress => None,
        _ => Some(ConicStatus::NumericalFailure),
    };

    let finite = sol.x.iter().all(|v| v.is_finite());
    let mut x = if finite { lowered.expand(&sol.x[..lowered.n - lowered.n_log]) } else { Vec::new() };
    if !x.is_empty() {
        project_to_bounds(program, &mut x);
    }
    let violation = if x.is_empty() { f64::INFINITY } else { program.max_violation(&x) };
    let objective = if x.is_empty() { f64::NAN } else { program.objective_at(&x) };
    let rel_gap = {
        let p = sol.obj_val;
        let d = sol.obj_val_dual;
        let g = (p - d).abs() / p.abs().min(d.abs()).max(1.0);
        if g.is_finite() {
            g
        } else {
            info.gap_rel
        }
    };

    let status = match base {
        Some(s) => s,
        None if violation <= opts.feas_tol && rel_gap <= opts.eps_sub => ConicStatus::Optimal,
        None => ConicStatus::NumericalFailure,
    };
    Ok(ConicResult {
        status,
        x,
        objective,
        rel_gap,
        max_violation: violation,
        iterations: info.iterations,
        lowered: Some(LoweredSolution { x: sol.x.clone(), z: sol.z.clone(), s: sol.s.clone() }),
    })
}

/// [`solve`], repeated with `cautious` set when the first attempt ends in
/// a numerical failure or the iteration limit.
pub fn solve_with_retry(program: &ConicProgram, opts: &SolveOptions) -> Result<ConicResult> {
    let first = solve(program, opts)?;
    if opts.cautious || !matches!(first.status, ConicStatus::NumericalFailure | ConicStatus::IterLimit) {
        return Ok(first);
    }
    solve(program, &SolveOptions { cautious: true, ..*opts })
}

/// Stationarity and complementarity residuals of `result` for `program`,
/// both relative: `||q + A'z||_inf / (1 + max(||q||_inf, ||A'z||_inf))`
/// and `|s'z| / (1 + |q'x|)`.
pub fn kkt_residuals(program: &ConicProgram, result: &ConicResult, feas_tol: f64) -> Option<(f64, f64)> {
    let raw = result.lowered.as_ref()?;
    let lowered = match lower(program, feas_tol) {
        Presolved::Program(l) => l,
        Presolved::Infeasible => return None,
    };
    let mut atz = vec![0.0; lowered.n];
    for (r, row) in lowered.a_rows.iter().enumerate() {
        for &(j, v) in row {
            atz[j] += v * raw.z[r];
        }
    }
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let resid: Vec<f64> = lowered.q.iter().zip(&atz).map(|(q, a)| q + a).collect();
    let stationarity = inf(&resid) / (1.0 + inf(&lowered.q).max(inf(&atz)));
    let sz: f64 = raw.s.iter().zip(&raw.z).map(|(s, z)| s * z).sum();
    let qx: f64 = lowered.q.iter().zip(&raw.x).map(|(q, x)| q * x).sum();
    Some((stationarity, sz.abs() / (1.0 + qx.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SolveOptions {
        SolveOptions::default()
    }

    #[test]
    fn minimize_with_lower_bound() {
        let mut p = ConicProgram::new(1);
        p.set_objective(Objective::Minimize(Affine::var(0)));
        p.add_ge(Affine::var(0), Affine::constant(3.0));
        let r = solve(&p, &opts()).unwrap();
        assert_eq!(r.status, ConicStatus::Optimal);
        assert!((r.x[0] - 3.0).abs() < 1e-7);
    }

    #[test]
    fn log_objective_saturates() {
        let mut p = ConicProgram::new(1);
        p.set_objective(Objective::MaximizeLogSum { terms: vec![(1.0, Affine::var(0))], linear: Affine::default() });
        p.add_le(Affine::var(0).plus(-1.0));
        let r = solve(&p, &opts()).unwrap();
        assert_eq!(r.status, ConicStatus::Optimal);
        assert!((r.x[0] - 1.0).abs() < 1e-6);
        assert!((r.objective - 1.0).abs() < 1e-6);
    }

    #[test]
    fn projection_onto_unit_ball() {
        // min t  s.t. ||x - c|| <= t, ||x|| <= 1, c = (1, 1)
        let mut p = ConicProgram::new(3);
        p.set_objective(Objective::Minimize(Affine::var(2)));
        p.add_soc(Affine::var(2), vec![Affine::var(0).plus(-1.0), Affine::var(1).plus(-1.0)]);
        p.add_soc(Affine::constant(1.0), vec![Affine::var(0), Affine::var(1)]);
        let r = solve(&p, &opts()).unwrap();
        assert_eq!(r.status, ConicStatus::Optimal);
        let h = 0.5f64.sqrt();
        assert!((r.x[0] - h).abs() < 1e-6 && (r.x[1] - h).abs() < 1e-6);
        assert!((r.objective - (2f64.sqrt() - 1.0)).abs() < 1e-7);
    }

    #[test]
    fn infeasible_program_is_reported() {
        let mut p = ConicProgram::new(1);
        p.set_objective(Objective::Minimize(Affine::var(0)));
        p.add_ge(Affine::var(0), Affine::constant(2.0));
        p.add_le(Affine::var(0).plus(-1.0));
        assert_eq!(solve(&p, &opts()).unwrap().status, ConicStatus::Infeasible);
    }

    #[test]
    fn fixed_variables_are_substituted() {
        let mut p = ConicProgram::new(2);
        p.fix(1, 2.0);
        p.set_objective(Objective::Maximize(Affine::var(0)));
        // x0 <= x1 * 1.5
        p.add_le(Affine::var(0).with_term(1, -1.5));
        let r = solve(&p, &opts()).unwrap();
        assert_eq!(r.status, ConicStatus::Optimal);
        assert!((r.x[0] - 3.0).abs() < 1e-6);
        assert_eq!(r.x[1], 2.0);

        // all variables fixed at an infeasible point
        let mut q = ConicProgram::new(1);
        q.fix(0, 1.0);
        q.add_le(Affine::var(0).plus(-0.5));
        assert_eq!(solve(&q, &opts()).unwrap().status, ConicStatus::Infeasible);
    }

    #[test]
    fn unbounded_program_is_reported() {
        let mut p = ConicProgram::new(1);
        p.set_objective(Objective::Maximize(Affine::var(0)));
        p.add_ge(Affine::var(0), Affine::constant(0.0));
        assert_eq!(solve(&p, &opts()).unwrap().status, ConicStatus::Unbounded);
    }

    #[test]
    fn malformed_program_is_rejected() {
        let mut p = ConicProgram::new(1);
        p.add_le(Affine::var(4));
        assert!(matches!(solve(&p, &opts()), Err(Error::MalformedProgram(_))));
    }

    #[test]
    fn rotated_cone_bounds_square() {
        // max x s.t. x^2 <= y * 1, y <= 4
        let mut p = ConicProgram::new(2);
        p.set_objective(Objective::Maximize(Affine::var(0)));
        p.set_bounds(1, 0.0, 4.0);
        p.add_rotated_soc(Affine::var(1), Affine::constant(1.0), vec![Affine::var(0)]);
        let r = solve(&p, &opts()).unwrap();
        assert_eq!(r.status, ConicStatus::Optimal);
        assert!((r.x[0] - 2.0).abs() < 1e-6);
    }
}
