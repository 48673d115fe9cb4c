//! Globally optimal branch-and-bound over `q = [s, r, phi]`.
//!
//! Objective values inside the search are normalized by the bandwidth
//! (bits/s/Hz), so the tolerance `eps` is in bits/s/Hz as well. The
//! certificate reports bits/s.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::conic::{self, Affine, ConicProgram, ConicStatus, Objective, SolveOptions};
use crate::envelopes::{
    multicast_envelope, multicast_soc_anchor, perspective_power, unicast_soc, BeamLayout, McCormick, PhaseInterval,
};
use crate::error::{Error, Result};
use crate::model::{
    rate_upper_bounds, BeamformerSet, ClusterAssignment, Dims, MessageSet, ProblemInstance, Solution, C64,
};

/// Hyperrectangle over `[s (K+1)N, r (K+1), phi (K-1)]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Index arithmetic for the `q` vector.
#[derive(Clone, Copy, Debug)]
pub struct BoxLayout {
    pub dims: Dims,
}

impl BoxLayout {
    pub fn new(dims: Dims) -> Self {
        BoxLayout { dims }
    }

    /// `N_q = (K+1)N + (K+1) + (K-1)`.
    pub fn len(&self) -> usize {
        let d = self.dims;
        d.n_links() + d.n_messages() + d.n_users - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn n_binary(&self) -> usize {
        self.dims.n_links()
    }

    pub fn s(&self, k: usize, n: usize) -> usize {
        self.dims.link_index(k, n)
    }

    pub fn r(&self, k: usize) -> usize {
        self.dims.n_links() + k
    }

    /// Phase coordinate of user `k` in `1..K` (the last user is the anchor
    /// and has none).
    pub fn phi(&self, k: usize) -> usize {
        debug_assert!(k >= 1 && k < self.dims.n_users);
        self.dims.n_links() + self.dims.n_messages() + k - 1
    }
}

impl SearchBox {
    pub fn widths(&self) -> Vec<f64> {
        self.upper.iter().zip(&self.lower).map(|(u, l)| u - l).collect()
    }

    pub fn is_degenerate(&self) -> bool {
        self.upper.iter().zip(&self.lower).all(|(u, l)| u <= l)
    }

    /// Largest edge length.
    pub fn size(&self) -> f64 {
        self.widths().into_iter().fold(0.0, f64::max)
    }
}

/// Root box: `0` below; `1` on the clustering block, the rate caps on the
/// rate block and `2 pi` on the phase block above. Messages outside
/// `messages` are pinned to zero rate and zero clustering.
pub fn initial_box(instance: &ProblemInstance) -> SearchBox {
    initial_box_for(instance, MessageSet::All)
}

pub fn initial_box_for(instance: &ProblemInstance, messages: MessageSet) -> SearchBox {
    let d = instance.dims();
    let lay = BoxLayout::new(d);
    let rmax = rate_upper_bounds(instance);
    let mut upper = vec![0.0; lay.len()];
    for k in 0..d.n_messages() {
        let on = messages.carries(k);
        for n in 0..d.n_bs {
            upper[lay.s(k, n)] = if on { 1.0 } else { 0.0 };
        }
        upper[lay.r(k)] = if on { rmax.get(k) } else { 0.0 };
    }
    if messages.carries(0) {
        for k in 1..d.n_users {
            upper[lay.phi(k)] = 2.0 * PI;
        }
    }
    SearchBox { lower: vec![0.0; lay.len()], upper }
}

/// Splits along the longest edge (smallest index on ties). Clustering
/// coordinates are split into their two binary values, the rest are
/// bisected. With `binary_first`, a clustering edge is preferred whenever
/// its width is within 10% of the longest edge.
pub fn branch(bx: &SearchBox, n_binary: usize, binary_first: bool) -> Result<(SearchBox, SearchBox)> {
    let widths = bx.widths();
    let mut j = 0;
    for (i, &w) in widths.iter().enumerate() {
        if w > widths[j] {
            j = i;
        }
    }
    if !(widths[j] > 0.0) {
        return Err(Error::InvalidArgument("cannot branch a zero-volume box".into()));
    }
    if binary_first && j >= n_binary {
        if let Some(i) = (0..n_binary).find(|&i| widths[i] > 0.0 && widths[i] >= 0.9 * widths[j]) {
            j = i;
        }
    }
    let mut a = bx.clone();
    let mut b = bx.clone();
    if j < n_binary {
        a.upper[j] = bx.upper[j] - 1.0;
        b.lower[j] = bx.lower[j] + 1.0;
    } else {
        let mid = bx.lower[j] + widths[j] / 2.0;
        a.upper[j] = mid;
        b.lower[j] = mid;
    }
    Ok((a, b))
}

/// Relaxed optimizer of the upper-bound program.
#[derive(Clone, Debug, PartialEq)]
pub struct RelaxedSolution {
    pub beamformers: BeamformerSet,
    pub rates: Vec<f64>,
    pub clustering: Vec<f64>,
    pub soft_power: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundedBox {
    pub search_box: SearchBox,
    /// Upper bound in bits/s/Hz; `-inf` when the relaxation is infeasible.
    pub upper_bound: f64,
    pub relaxed: Option<RelaxedSolution>,
    /// The relaxation could not be solved reliably and the bound was
    /// inherited.
    pub inherited: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BbOptions {
    /// Optimality tolerance on `Phi_U - Phi_L`, bits/s/Hz.
    pub eps: f64,
    pub max_iter: usize,
    pub max_time: Duration,
    pub binary_first: bool,
    /// Bound the two children of an iteration concurrently.
    pub parallel: bool,
    pub messages: MessageSet,
    pub subproblem_eps: f64,
    pub subproblem_feas_tol: f64,
}

impl Default for BbOptions {
    fn default() -> Self {
        BbOptions {
            eps: 1e-2,
            max_iter: 100_000,
            max_time: Duration::from_secs(3600),
            binary_first: false,
            parallel: true,
            messages: MessageSet::All,
            subproblem_eps: 1e-8,
            subproblem_feas_tol: 1e-7,
        }
    }
}

struct UpperProgram {
    program: ConicProgram,
    beams: BeamLayout,
    r_base: usize,
    s_base: usize,
    v_base: usize,
}

fn build_upper_program(instance: &ProblemInstance, bx: &SearchBox, h: &[Vec<C64>]) -> UpperProgram {
    let d = instance.dims();
    let lay = BoxLayout::new(d);
    let beams = BeamLayout::new(0, d);
    let m = d.n_messages();
    let links = d.n_links();
    let r_base = beams.len();
    let s_base = r_base + m;
    let v_base = s_base + links;
    let z_base = v_base + links;
    let mut p = ConicProgram::new(z_base + links);
    let b = instance.bandwidth();

    for k in 0..m {
        p.set_bounds(r_base + k, bx.lower[lay.r(k)], bx.upper[lay.r(k)]);
        for n in 0..d.n_bs {
            let li = d.link_index(k, n);
            let (s_lo, s_hi) = (bx.lower[lay.s(k, n)], bx.upper[lay.s(k, n)]);
            let p_n = instance.bs_power()[n];
            p.set_bounds(s_base + li, s_lo, s_hi);
            if s_hi <= 0.0 {
                for c in beams.block_coords(k, n) {
                    p.fix(c, 0.0);
                }
                p.fix(v_base + li, 0.0);
            } else {
                p.set_bounds(v_base + li, 0.0, p_n);
                for c in beams.block_coords(k, n) {
                    let a = p_n.sqrt();
                    p.set_bounds(c, -a, a);
                }
            }
        }
    }

    let mut obj = Affine::default();
    for k in 0..m {
        obj.add_term(r_base + k, instance.weight(k));
    }
    p.set_objective(Objective::Maximize(obj));

    let k_users = d.n_users;
    for k in 1..=k_users {
        unicast_soc(&beams, &h[k - 1], k, bx.lower[lay.r(k)]).apply(&mut p);
    }
    let r0_lo = bx.lower[lay.r(0)];
    multicast_soc_anchor(&beams, &h[k_users - 1], r0_lo).apply(&mut p);
    for k in 1..k_users {
        let interval = PhaseInterval { lo: bx.lower[lay.phi(k)], hi: bx.upper[lay.phi(k)] };
        if let Some(env) = multicast_envelope(&beams, &h[k - 1], r0_lo, interval) {
            env.apply(&mut p);
        }
    }

    for n in 0..d.n_bs {
        let cap = instance.backhaul()[n] / b;
        // the envelope never exceeds s_hi * r_hi, so a budget above that sum
        // cannot bind
        let worst: f64 = (0..m).map(|k| bx.upper[lay.s(k, n)] * bx.upper[lay.r(k)]).sum();
        if worst <= cap {
            for k in 0..m {
                p.fix(z_base + d.link_index(k, n), 0.0);
            }
        } else {
            let mut load = Affine::constant(-cap);
            for k in 0..m {
                let li = d.link_index(k, n);
                let env = McCormick {
                    x_lo: bx.lower[lay.s(k, n)],
                    x_hi: bx.upper[lay.s(k, n)],
                    y_lo: bx.lower[lay.r(k)],
                    y_hi: bx.upper[lay.r(k)],
                };
                for row in env.epigraph_rows(s_base + li, r_base + k, z_base + li) {
                    p.add(row);
                }
                load.add_term(z_base + li, 1.0);
            }
            p.add_le(load);
        }

        let active: Vec<usize> = (0..m).filter(|&k| bx.upper[lay.s(k, n)] > 0.0).collect();
        let s_vars: Vec<usize> = (0..m).map(|k| s_base + d.link_index(k, n)).collect();
        let v_vars: Vec<usize> = (0..m).map(|k| v_base + d.link_index(k, n)).collect();
        let persp = perspective_power(&beams, n, &s_vars, &v_vars, instance.bs_power()[n]);
        // rows are emitted per message then the power sum; drop the cone rows
        // of links that are switched off (their blocks are fixed at zero)
        let mut rows = persp.rows;
        let total = rows.pop().expect("power row");
        for (k, row) in rows.into_iter().enumerate() {
            if active.contains(&k) {
                p.add(row);
            }
        }
        p.add(total);
    }

    UpperProgram { program: p, beams, r_base, s_base, v_base }
}

/// Solves the relaxation over `bx`. On a solver failure the box keeps
/// `parent_bound` and no relaxed point.
pub fn upper_bound(
    instance: &ProblemInstance,
    bx: &SearchBox,
    parent_bound: f64,
    opts: &BbOptions,
) -> Result<BoundedBox> {
    let h = instance.whitened_channels();
    upper_bound_with(instance, bx, parent_bound, opts, &h)
}

fn upper_bound_with(
    instance: &ProblemInstance,
    bx: &SearchBox,
    parent_bound: f64,
    opts: &BbOptions,
    h: &[Vec<C64>],
) -> Result<BoundedBox> {
    let d = instance.dims();
    let up = build_upper_program(instance, bx, h);
    let sopts = SolveOptions { eps_sub: opts.subproblem_eps, feas_tol: opts.subproblem_feas_tol, max_iter: 200, cautious: false };
    let mut res = conic::solve(&up.program, &sopts)?;
    if !matches!(res.status, ConicStatus::Optimal | ConicStatus::Infeasible) {
        res = settle(&up.program, &sopts)?;
    }
    let bounded = |upper_bound, relaxed, inherited| BoundedBox { search_box: bx.clone(), upper_bound, relaxed, inherited };
    Ok(match res.status {
        ConicStatus::Optimal => {
            let x = &res.x;
            let links = d.n_links();
            let relaxed = RelaxedSolution {
                beamformers: BeamformerSet::from_vectors(d, up.beams.extract(x))?,
                rates: x[up.r_base..up.r_base + d.n_messages()].to_vec(),
                clustering: x[up.s_base..up.s_base + links].to_vec(),
                soft_power: x[up.v_base..up.v_base + links].to_vec(),
            };
            bounded(res.objective, Some(relaxed), false)
        }
        ConicStatus::Infeasible => bounded(f64::NEG_INFINITY, None, false),
        _ => bounded(parent_bound, None, true),
    })
}

/// Smallest uniform slack a phase-one solve must certify before a box is
/// declared infeasible.
const PHASE_ONE_MARGIN: f64 = 1e-7;

/// Second attempt after an inconclusive solve. The phase-one program is
/// always strictly feasible, so its optimum `t*` is reliable: a certified
/// `t* > 0` proves infeasibility. Otherwise the program loosened by a small
/// slack is solved; its optimum still bounds the box from above.
fn settle(program: &ConicProgram, sopts: &SolveOptions) -> Result<conic::ConicResult> {
    let (p1, _) = program.phase_one();
    let r1 = conic::solve(&p1, sopts)?;
    if r1.status != ConicStatus::Optimal {
        return Ok(r1);
    }
    let dual_floor = r1.objective - r1.rel_gap * r1.objective.abs().max(1.0);
    if dual_floor > PHASE_ONE_MARGIN {
        return Ok(conic::ConicResult::without_point(ConicStatus::Infeasible));
    }
    conic::solve(&program.loosened(2.0 * r1.objective.max(PHASE_ONE_MARGIN)), sopts)
}

/// Normalized objective `eta r_0 + (1 - eta) sum r_k` of a solution.
fn normalized(instance: &ProblemInstance, sol: &Solution) -> f64 {
    sol.objective / instance.bandwidth()
}

/// Best feasible point obtained by switching off the weakest links of the
/// relaxed beamformers: for every threshold `p_j` (the `j`-th largest block
/// power), blocks strictly below it are zeroed. Links the box pins to zero
/// stay off. Returns the normalized objective and the solution.
pub fn lower_bound(instance: &ProblemInstance, bounded: &BoundedBox) -> Option<(f64, Solution)> {
    let relaxed = bounded.relaxed.as_ref()?;
    let d = instance.dims();
    let lay = BoxLayout::new(d);
    let bf = &relaxed.beamformers;
    let mut powers: Vec<f64> = (0..d.n_messages())
        .flat_map(|k| (0..d.n_bs).map(move |n| (k, n)))
        .map(|(k, n)| bf.block_power(k, n))
        .collect();
    powers.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    powers.dedup();

    let mut best: Option<(f64, Solution)> = None;
    for &p_j in &powers {
        let s = ClusterAssignment::from_fn(d, |k, n| {
            bf.block_power(k, n) >= p_j && bounded.search_box.upper[lay.s(k, n)] > 0.0
        });
        let sol = Solution::repaired(instance, bf.clone(), s, None);
        let val = normalized(instance, &sol);
        if best.as_ref().is_none_or(|(b, _)| val > *b) {
            best = Some((val, sol));
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    IterationLimit,
    TimeLimit,
    /// Only zero-volume boxes remain and the gap is still open.
    Stalled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    /// bits/s/Hz
    pub upper: f64,
    /// bits/s/Hz
    pub lower: f64,
    pub active_boxes: usize,
    pub elapsed_s: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BbCertificate {
    pub best_solution: Solution,
    /// bits/s
    pub global_upper: f64,
    /// bits/s; equal to `best_solution.objective`.
    pub global_lower: f64,
    pub iterations: usize,
    pub boxes_explored: usize,
    pub wall_time: Duration,
    pub termination: Termination,
    pub trace: Vec<TraceRow>,
    /// Upper bounds (bits/s/Hz) of every child discarded by the pruning
    /// test, kept for post-hoc checks.
    pub pruned_bounds: Vec<f64>,
    /// Number of relaxations whose bound had to be inherited.
    pub solver_failures: usize,
    /// Largest observed excess of a child's raw bound over its parent's.
    pub max_child_excess: f64,
}

impl BbCertificate {
    /// Certified gap in bits/s/Hz.
    pub fn normalized_gap(&self, bandwidth: f64) -> f64 {
        (self.global_upper - self.global_lower) / bandwidth
    }
}

struct Entry {
    bound: f64,
    seq: u64,
    node: BoundedBox,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound.total_cmp(&other.bound).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Runs the branch-and-bound search.
pub fn solve_bb(instance: &ProblemInstance, opts: &BbOptions) -> Result<BbCertificate> {
    if !(opts.eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {}", opts.eps)));
    }
    let start = Instant::now();
    let d = instance.dims();
    let n_binary = d.n_links();
    let h = instance.whitened_channels();
    let bw = instance.bandwidth();

    let root = initial_box_for(instance, opts.messages);
    let root_bound = upper_bound_with(instance, &root, f64::INFINITY, opts, &h)?;
    let mut solver_failures = usize::from(root_bound.inherited);

    let mut best = Solution::zero(instance);
    let mut lower = 0.0f64;
    if let Some((v, sol)) = lower_bound(instance, &root_bound) {
        if v > lower {
            lower = v;
            best = sol;
        }
    }

    let mut heap = BinaryHeap::new();
    let mut leaves: Vec<f64> = Vec::new();
    let mut seq = 0u64;
    if root_bound.upper_bound > f64::NEG_INFINITY {
        heap.push(Entry { bound: root_bound.upper_bound, seq, node: root_bound });
        seq += 1;
    }
    let mut pruned = Vec::new();
    let mut boxes_explored = 1;
    let mut iterations = 0;
    let mut max_child_excess = 0.0f64;

    let list_max = |heap: &BinaryHeap<Entry>, leaves: &[f64]| {
        let h = heap.peek().map_or(f64::NEG_INFINITY, |e| e.bound);
        leaves.iter().cloned().fold(h, f64::max)
    };
    let mut upper = list_max(&heap, &leaves).max(lower);
    let mut trace = vec![TraceRow {
        iteration: 0,
        upper,
        lower,
        active_boxes: heap.len(),
        elapsed_s: start.elapsed().as_secs_f64(),
    }];

    let termination = loop {
        if upper - lower <= opts.eps {
            break Termination::Converged;
        }
        if iterations >= opts.max_iter {
            break Termination::IterationLimit;
        }
        if start.elapsed() >= opts.max_time {
            break Termination::TimeLimit;
        }
        let Some(top) = heap.pop() else {
            break Termination::Stalled;
        };
        let parent = top.node;
        if parent.search_box.is_degenerate() {
            leaves.push(parent.upper_bound);
            continue;
        }
        let (a, b) = branch(&parent.search_box, n_binary, opts.binary_first)?;
        let pb = parent.upper_bound;
        let (ca, cb) = if opts.parallel {
            rayon::join(|| upper_bound_with(instance, &a, pb, opts, &h), || upper_bound_with(instance, &b, pb, opts, &h))
        } else {
            (upper_bound_with(instance, &a, pb, opts, &h), upper_bound_with(instance, &b, pb, opts, &h))
        };
        let children = [ca?, cb?];
        boxes_explored += 2;

        let lower_before = lower;
        for mut child in children {
            if child.inherited {
                solver_failures += 1;
            } else if child.upper_bound > pb {
                max_child_excess = max_child_excess.max(child.upper_bound - pb);
                child.upper_bound = pb;
            }
            if let Some((v, sol)) = lower_bound(instance, &child) {
                if v > lower {
                    lower = v;
                    best = sol;
                }
            }
            if child.upper_bound >= lower_before {
                heap.push(Entry { bound: child.upper_bound, seq, node: child });
                seq += 1;
            } else {
                pruned.push(child.upper_bound);
            }
        }
        iterations += 1;
        upper = upper.min(list_max(&heap, &leaves).max(lower));
        trace.push(TraceRow {
            iteration: iterations,
            upper,
            lower,
            active_boxes: heap.len() + leaves.len(),
            elapsed_s: start.elapsed().as_secs_f64(),
        });
    };

    let global_lower = best.objective;
    Ok(BbCertificate {
        best_solution: best,
        global_upper: (upper * bw).max(global_lower),
        global_lower,
        iterations,
        boxes_explored,
        wall_time: start.elapsed(),
        termination,
        trace,
        pruned_bounds: pruned,
        solver_failures,
        max_child_excess,
    })
}

/// `g(delta) = K B delta - 2 eta K B log2(cos(delta / 2))`.
pub fn gap_function(k_users: usize, bandwidth: f64, eta: f64, delta: f64) -> f64 {
    let kb = k_users as f64 * bandwidth;
    kb * delta - 2.0 * eta * kb * (delta / 2.0).cos().log2()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationBound {
    pub delta: f64,
    /// Worst-case iteration count; may be `inf` when it exceeds `f64`.
    pub iterations: f64,
}

/// Worst-case iteration count for tolerance `eps` (bits/s), with
/// `delta = g^{-1}(eps)` found by bisection on `(0, 1)`.
pub fn max_iterations_bound(instance: &ProblemInstance, eps: f64, eta: f64) -> Result<IterationBound> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let d = instance.dims();
    let g = |x: f64| gap_function(d.n_users, instance.bandwidth(), eta, x);
    let delta = if g(1.0) <= eps {
        1.0
    } else {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) < eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if (g(lo) - eps).abs() <= (g(hi) - eps).abs() {
            lo
        } else {
            hi
        }
    };
    Ok(IterationBound { delta, iterations: iteration_bound_at(instance, delta) })
}

/// `2^{(K+1)N} ceil((2 pi / (delta/2))^{K-1} prod_k r_max^k / (delta/2))`.
pub fn iteration_bound_at(instance: &ProblemInstance, delta: f64) -> f64 {
    let d = instance.dims();
    let rmax = rate_upper_bounds(instance);
    let half = delta / 2.0;
    let mut volume = (2.0 * PI / half).powi(d.n_users as i32 - 1);
    for k in 0..d.n_messages() {
        volume *= rmax.get(k) / half;
    }
    2f64.powi(d.n_links() as i32) * volume.ceil()
}
