//! Low-complexity pipeline: smoothed-l0 DC program solved by the
//! convex-concave procedure, followed by a fixed-cluster refinement.
//!
//! Inside the subproblems channels are whitened (unit noise), powers are in
//! watts and the objective and backhaul budgets are divided by the
//! bandwidth, so `t` and `C_n / B` are in bits/s/Hz. Reported objectives are
//! in bits/s.

use std::f64::consts::{LN_2, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conic::{self, Affine, ConicProgram, ConicStatus, Objective, SolveOptions};
use crate::envelopes::BeamLayout;
use crate::error::{Error, Result};
use crate::model::{
    inner, sinr_multicast, sinr_unicast, BeamformerSet, ClusterAssignment, Dims, MessageSet, ProblemInstance,
    RateVector, Solution, C64,
};
use crate::scenario::dbm_to_watts;

/// SINR anchors below this value freeze their message at zero rate.
pub const GAMMA_FLOOR: f64 = 1e-9;

/// `(2 / pi) atan(x / theta)`.
pub fn smooth_l0(x: f64, theta: f64) -> Result<f64> {
    check_smooth_args(x, theta)?;
    Ok(f_theta(x, theta))
}

/// Derivative of [`smooth_l0`], `(2 / pi) theta / (theta^2 + x^2)`.
pub fn smooth_l0_derivative(x: f64, theta: f64) -> Result<f64> {
    check_smooth_args(x, theta)?;
    Ok(df_theta(x, theta))
}

fn check_smooth_args(x: f64, theta: f64) -> Result<()> {
    if !(x >= 0.0) {
        return Err(Error::InvalidArgument(format!("smooth_l0 needs x >= 0, got {x}")));
    }
    if !(theta > 0.0) {
        return Err(Error::InvalidArgument(format!("smooth_l0 needs theta > 0, got {theta}")));
    }
    Ok(())
}

fn f_theta(x: f64, theta: f64) -> f64 {
    2.0 / PI * (x.max(0.0) / theta).atan()
}

fn df_theta(x: f64, theta: f64) -> f64 {
    2.0 / PI * theta / (theta * theta + x * x)
}

/// Iterate of the DC program. `s` and `alpha` are `(K+1) x N`, row-major by
/// message.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CcpPoint {
    pub beamformers: BeamformerSet,
    pub gamma: Vec<f64>,
    /// Rate epigraph, bits/s/Hz.
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    /// Per-link power epigraph, watts.
    pub alpha: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CcpOptions {
    pub theta: f64,
    /// Refinement threshold `eps^P`, watts.
    pub power_threshold_w: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
    /// Seed of the first restart; restart `i` uses `seed + i`.
    pub seed: u64,
    pub messages: MessageSet,
    /// Run restarts concurrently.
    pub parallel: bool,
    pub subproblem_eps: f64,
    pub subproblem_feas_tol: f64,
}

impl Default for CcpOptions {
    fn default() -> Self {
        CcpOptions {
            theta: 1e-6,
            power_threshold_w: dbm_to_watts(-30.0),
            rel_tol: 1e-3,
            max_iter: 40,
            restarts: 3,
            seed: 0,
            messages: MessageSet::All,
            parallel: true,
            subproblem_eps: 1e-8,
            subproblem_feas_tol: 1e-8,
        }
    }
}

impl CcpOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, v: f64| Error::InvalidConfig { field: field.into(), reason: format!("must be positive, got {v}") };
        for (name, v) in [
            ("theta", self.theta),
            ("power_threshold_w", self.power_threshold_w),
            ("rel_tol", self.rel_tol),
            ("subproblem_eps", self.subproblem_eps),
            ("subproblem_feas_tol", self.subproblem_feas_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(name, v));
            }
        }
        if self.max_iter == 0 {
            return Err(bad("max_iter", 0.0));
        }
        if self.restarts == 0 {
            return Err(bad("restarts", 0.0));
        }
        Ok(())
    }

    fn solve_options(&self) -> SolveOptions {
        SolveOptions { eps_sub: self.subproblem_eps, feas_tol: self.subproblem_feas_tol, max_iter: 200, cautious: false }
    }
}

/// Weighted log objective of the DC program, bits/s.
pub fn dc_objective(instance: &ProblemInstance, gamma: &[f64]) -> f64 {
    let w: f64 = gamma.iter().enumerate().map(|(k, g)| instance.weight(k) * g.max(0.0).ln_1p() / LN_2).sum();
    w * instance.bandwidth()
}

/// Multicast SINR (min over users) for message 0, unicast SINR otherwise.
fn achieved_sinr(instance: &ProblemInstance, bf: &BeamformerSet, m: usize) -> f64 {
    let k_users = instance.dims().n_users;
    if m == 0 {
        (1..=k_users).map(|k| sinr_multicast(instance, bf, k)).fold(f64::INFINITY, f64::min)
    } else {
        sinr_unicast(instance, bf, m)
    }
}

/// Worst normalized violation of the smoothed DC program at `point`.
pub fn dc_violation(instance: &ProblemInstance, point: &CcpPoint, theta: f64) -> f64 {
    let d = instance.dims();
    let bf = &point.beamformers;
    let cap = |n: usize| instance.bandwidth().recip() * instance.backhaul()[n];
    let mut worst = 0.0f64;
    let mut bump = |v: f64| worst = worst.max(v);
    for m in 0..d.n_messages() {
        let g = point.gamma[m];
        bump((-g).max(0.0));
        bump((g - achieved_sinr(instance, bf, m)).max(0.0) / g.max(1.0));
        bump((g.max(0.0).ln_1p() / LN_2 - point.t[m]).max(0.0) / point.t[m].abs().max(1.0));
    }
    for n in 0..d.n_bs {
        let p_n = instance.bs_power()[n];
        bump((bf.bs_power(n) - p_n).max(0.0) / p_n);
        let mut load = 0.0;
        for m in 0..d.n_messages() {
            let li = d.link_index(m, n);
            let (s, a) = (point.s[li], point.alpha[li]);
            bump((-s).max(0.0).max(s - 1.0));
            bump((-a).max(0.0) / p_n);
            bump((bf.block_power(m, n) - a).max(0.0) / p_n);
            bump((f_theta(a, theta) - s).max(0.0));
            load += s * point.t[m];
        }
        bump((load - cap(n)).max(0.0) / cap(n).max(1.0));
    }
    worst
}

/// Scales each BS's blocks down if it exceeds its power budget.
fn enforce_power(instance: &ProblemInstance, bf: &mut BeamformerSet) {
    for n in 0..instance.dims().n_bs {
        let p = bf.bs_power(n);
        let cap = instance.bs_power()[n];
        if p > cap {
            let f = (cap / p).sqrt() * (1.0 - 1e-12);
            for m in 0..bf.n_messages() {
                for c in bf.block_mut(m, n) {
                    *c *= f;
                }
            }
        }
    }
}

/// Pushes the auxiliaries of a (nearly) feasible point onto the feasible
/// set: power first, then `gamma <= SINR`, `alpha >= ||w||^2`,
/// `s >= f(alpha)`, `t >= log2(1 + gamma)` and finally the backhaul rows by
/// scaling `t` (and `gamma` with it).
fn restore(instance: &ProblemInstance, mut point: CcpPoint, theta: f64, frozen: &[bool]) -> CcpPoint {
    let d = instance.dims();
    enforce_power(instance, &mut point.beamformers);
    let bf = &point.beamformers;
    for m in 0..d.n_messages() {
        point.gamma[m] = if frozen[m] { 0.0 } else { point.gamma[m].clamp(0.0, achieved_sinr(instance, bf, m)) };
        point.t[m] = point.t[m].max(point.gamma[m].ln_1p() / LN_2).max(0.0);
        for n in 0..d.n_bs {
            let li = d.link_index(m, n);
            point.alpha[li] = point.alpha[li].max(bf.block_power(m, n)).max(0.0);
            point.s[li] = point.s[li].max(f_theta(point.alpha[li], theta)).clamp(0.0, 1.0);
        }
    }
    let mut factor = 1.0f64;
    for n in 0..d.n_bs {
        let cap = instance.backhaul()[n] / instance.bandwidth();
        let load: f64 = (0..d.n_messages()).map(|m| point.s[d.link_index(m, n)] * point.t[m]).sum();
        if load > cap {
            factor = factor.min(cap / load * (1.0 - 1e-12));
        }
    }
    if factor < 1.0 {
        for m in 0..d.n_messages() {
            point.t[m] *= factor.max(0.0);
            point.gamma[m] = point.gamma[m].min((point.t[m].exp2() - 1.0) * (1.0 - 1e-12)).max(0.0);
        }
    }
    point
}

fn frozen_mask(point_gamma: &[f64], carries: impl Fn(usize) -> bool) -> Vec<bool> {
    point_gamma.iter().enumerate().map(|(m, &g)| !carries(m) || g < GAMMA_FLOOR).collect()
}

/// Random beamformers at full per-BS power with every auxiliary derived from
/// them, rates scaled down until the smoothed backhaul rows hold.
pub fn feasible_init(instance: &ProblemInstance, seed: u64, opts: &CcpOptions) -> CcpPoint {
    let d = instance.dims();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut bf = BeamformerSet::zeros(d);
    for m in 0..d.n_messages() {
        for c in bf.vector_mut(m) {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *c = C64::new(re, im);
        }
        if !opts.messages.carries(m) {
            bf.vector_mut(m).fill(C64::new(0.0, 0.0));
        }
    }
    for n in 0..d.n_bs {
        let p = bf.bs_power(n);
        if p > 0.0 {
            let f = (instance.bs_power()[n] / p).sqrt() * (1.0 - 1e-12);
            for m in 0..d.n_messages() {
                for c in bf.block_mut(m, n) {
                    *c *= f;
                }
            }
        }
    }
    point_from_beamformers(instance, bf, opts)
}

/// Auxiliaries derived from `bf` as in [`feasible_init`].
pub fn point_from_beamformers(instance: &ProblemInstance, bf: BeamformerSet, opts: &CcpOptions) -> CcpPoint {
    let d = instance.dims();
    let gamma: Vec<f64> = (0..d.n_messages())
        .map(|m| if opts.messages.carries(m) { achieved_sinr(instance, &bf, m) } else { 0.0 })
        .collect();
    let t = gamma.iter().map(|g| g.ln_1p() / LN_2).collect();
    let mut alpha = vec![0.0; d.n_links()];
    let mut s = vec![0.0; d.n_links()];
    for m in 0..d.n_messages() {
        for n in 0..d.n_bs {
            let li = d.link_index(m, n);
            alpha[li] = bf.block_power(m, n);
            s[li] = f_theta(alpha[li], opts.theta);
        }
    }
    let frozen: Vec<bool> = (0..d.n_messages()).map(|m| !opts.messages.carries(m)).collect();
    restore(instance, CcpPoint { beamformers: bf, gamma, t, s, alpha }, opts.theta, &frozen)
}

/// Column layout of a CCP subproblem: beamformer coordinates first, then
/// one block per auxiliary family.
struct Columns {
    beams: BeamLayout,
    gamma: usize,
    t: usize,
    s: usize,
    alpha: usize,
    total: usize,
}

impl Columns {
    fn new(d: Dims, with_dc: bool) -> Self {
        let beams = BeamLayout::new(0, d);
        let gamma = beams.len();
        let t = gamma + d.n_messages();
        let (s, alpha, total) = if with_dc {
            let s = t + d.n_messages();
            let alpha = s + d.n_links();
            (s, alpha, alpha + d.n_links())
        } else {
            (t, t, t)
        };
        Columns { beams, gamma, t, s, alpha, total }
    }
}

/// Rows shared by both stages: per-BS power, convexified SINR rows and the
/// log objective. `frozen` messages have their SINR variable pinned at zero.
/// The SINR column of message `m` holds `gamma_m / anchor_gamma[m]`.
fn add_common_rows(
    p: &mut ConicProgram,
    instance: &ProblemInstance,
    h: &[Vec<C64>],
    cols: &Columns,
    anchor_bf: &BeamformerSet,
    anchor_gamma: &[f64],
    frozen: &[bool],
) {
    let d = instance.dims();
    let beams = &cols.beams;
    for n in 0..d.n_bs {
        let norm: Vec<Affine> = (0..d.n_messages()).flat_map(|m| beams.block_coords(m, n)).map(Affine::var).collect();
        p.add_soc(Affine::constant(instance.bs_power()[n].sqrt()), norm);
    }
    let mut logs = Vec::new();
    for m in 0..d.n_messages() {
        let g = cols.gamma + m;
        if frozen[m] {
            p.fix(g, 0.0);
            continue;
        }
        p.set_bounds(g, 0.0, f64::INFINITY);
        let g_t = anchor_gamma[m];
        let w = instance.weight(m);
        if w > 0.0 {
            logs.push((w, Affine::term(g, g_t)));
        }
        let users: Vec<usize> = if m == 0 { (1..=d.n_users).collect() } else { vec![m] };
        for k in users {
            let hk = &h[k - 1];
            let anchor = inner(hk, anchor_bf.vector(m));
            // 2 Re{conj(a) h^H w_m} / g_t - |a|^2 gamma / g_t^2
            let lin = beams
                .inner_re(hk, m)
                .scaled(2.0 * anchor.re / g_t)
                .add(&beams.inner_im(hk, m).scaled(2.0 * anchor.im / g_t))
                .with_term(g, -anchor.norm_sqr() / g_t);
            let mut u = Vec::with_capacity(2 * d.n_users + 1);
            let mut g_anchor = 1.0;
            for j in 1..=d.n_users {
                if m != 0 && j == m {
                    continue;
                }
                g_anchor += inner(hk, anchor_bf.vector(j)).norm_sqr();
                u.push(beams.inner_re(hk, j));
                u.push(beams.inner_im(hk, j));
            }
            u.push(Affine::constant(1.0));
            // divide the row by its interference-plus-noise at the anchor so
            // every term is O(1) there
            let sc = g_anchor.sqrt().recip();
            let u = u.into_iter().map(|e| e.scaled(sc)).collect();
            p.add_rotated_soc(lin.scaled(sc * sc), Affine::constant(1.0), u);
        }
    }
    p.set_objective(Objective::MaximizeLogSum { terms: logs, linear: Affine::default() });
}

fn pin_blocks(p: &mut ConicProgram, cols: &Columns, d: Dims, off: impl Fn(usize, usize) -> bool) {
    for m in 0..d.n_messages() {
        for n in 0..d.n_bs {
            if off(m, n) {
                for c in cols.beams.block_coords(m, n) {
                    p.fix(c, 0.0);
                }
            }
        }
    }
}

/// Outcome of one convex-concave step.
#[derive(Clone, Debug, PartialEq)]
pub struct IterateOutcome {
    pub point: CcpPoint,
    /// The subproblem could not be solved and `point` is the input.
    pub stalled: bool,
}

/// One step on the DC program: solves the convexified subproblem anchored at
/// `point` and returns its optimizer (auxiliaries restored onto the feasible
/// set). A solver failure returns the input with `stalled` set.
pub fn ccp_iterate(instance: &ProblemInstance, point: &CcpPoint, opts: &CcpOptions) -> Result<IterateOutcome> {
    let d = instance.dims();
    let h = instance.whitened_channels();
    let frozen = frozen_mask(&point.gamma, |m| opts.messages.carries(m));
    let cols = Columns::new(d, true);
    let mut p = ConicProgram::new(cols.total);
    pin_blocks(&mut p, &cols, d, |m, _| !opts.messages.carries(m));
    add_common_rows(&mut p, instance, &h, &cols, &point.beamformers, &point.gamma, &frozen);

    let b = instance.bandwidth();
    for m in 0..d.n_messages() {
        // log2(1 + g_t) + (gamma - g_t) / ((1 + g_t) ln 2) <= t
        let g_t = point.gamma[m];
        let slope = 1.0 / ((1.0 + g_t) * LN_2);
        let row = Affine::term(cols.gamma + m, slope * g_t)
            .plus(g_t.ln_1p() / LN_2 - slope * g_t)
            .with_term(cols.t + m, -1.0);
        p.add_le(row);
        p.set_bounds(cols.t + m, 0.0, f64::INFINITY);
    }
    for n in 0..d.n_bs {
        let cap = instance.backhaul()[n] / b;
        // sum_m (s + t)^2 <= 4 cap + sum_m [2 d (s - t) - d^2],  d = s_t - t_t
        let mut rhs = Affine::constant(4.0 * cap);
        let mut norm = Vec::with_capacity(d.n_messages());
        for m in 0..d.n_messages() {
            let li = d.link_index(m, n);
            let dd = point.s[li] - point.t[m];
            rhs.add_term(cols.s + li, 2.0 * dd);
            rhs.add_term(cols.t + m, -2.0 * dd);
            rhs.constant -= dd * dd;
            norm.push(Affine::var(cols.s + li).with_term(cols.t + m, 1.0));
        }
        p.add_rotated_soc(rhs, Affine::constant(1.0), norm);

        let p_n = instance.bs_power()[n];
        for m in 0..d.n_messages() {
            let li = d.link_index(m, n);
            let (s, a) = (cols.s + li, cols.alpha + li);
            // no upper bound: the restored point clamps s to 1, which keeps
            // f(alpha) <= s and only lowers the backhaul load
            p.set_bounds(s, 0.0, f64::INFINITY);
            p.set_bounds(a, 0.0, p_n);
            let norm = cols.beams.block_coords(m, n).into_iter().map(Affine::var).collect();
            p.add_rotated_soc(Affine::var(a), Affine::constant(1.0), norm);
            // f(a_t) + f'(a_t)(a - a_t) <= s, divided by max(1, f'(a_t))
            let a_t = point.alpha[li];
            let slope = df_theta(a_t, opts.theta);
            let scale = slope.max(1.0).recip();
            let row = Affine::term(a, slope * scale)
                .plus((f_theta(a_t, opts.theta) - slope * a_t) * scale)
                .with_term(s, -scale);
            p.add_le(row);
        }
    }

    let res = conic::solve_with_retry(&p, &opts.solve_options())?;
    if res.status != ConicStatus::Optimal {
        return Ok(IterateOutcome { point: point.clone(), stalled: true });
    }
    let x = &res.x;
    let next = CcpPoint {
        beamformers: BeamformerSet::from_vectors(d, cols.beams.extract(x))?,
        gamma: (0..d.n_messages()).map(|m| x[cols.gamma + m] * point.gamma[m]).collect(),
        t: x[cols.t..cols.t + d.n_messages()].to_vec(),
        s: x[cols.s..cols.s + d.n_links()].to_vec(),
        alpha: x[cols.alpha..cols.alpha + d.n_links()].to_vec(),
    };
    let next = restore(instance, next, opts.theta, &frozen);
    if dc_objective(instance, &next.gamma) < dc_objective(instance, &point.gamma) {
        // restoration lost more than the step gained
        return Ok(IterateOutcome { point: point.clone(), stalled: true });
    }
    Ok(IterateOutcome { point: next, stalled: false })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Relative objective increase fell below `rel_tol`.
    Converged,
    IterationLimit,
    Stalled,
}

/// Per-run record of the pipeline.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CcpRun {
    pub seed: u64,
    /// DC objective (bits/s) of the initial point and of every iterate.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub stop: StopReason,
    /// Objective (bits/s) of every iterate of the refinement stage.
    pub refine_trace: Vec<f64>,
    pub solution: Solution,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CcpReport {
    pub solution: Solution,
    pub runs: Vec<CcpRun>,
}

fn should_stop(prev: f64, next: f64, rel_tol: f64) -> bool {
    next - prev <= rel_tol * prev.abs()
}

/// Iterates [`ccp_iterate`] from `point` until the relative increase drops
/// below `rel_tol`, `max_iter` steps were taken or a step stalls.
pub fn ccp_loop(
    instance: &ProblemInstance,
    mut point: CcpPoint,
    opts: &CcpOptions,
) -> Result<(CcpPoint, Vec<f64>, StopReason)> {
    let mut trace = vec![dc_objective(instance, &point.gamma)];
    for _ in 0..opts.max_iter {
        let out = ccp_iterate(instance, &point, opts)?;
        if out.stalled {
            return Ok((point, trace, StopReason::Stalled));
        }
        let prev = *trace.last().expect("trace starts non-empty");
        let next = dc_objective(instance, &out.point.gamma);
        point = out.point;
        trace.push(next);
        if should_stop(prev, next, opts.rel_tol) {
            return Ok((point, trace, StopReason::Converged));
        }
    }
    Ok((point, trace, StopReason::IterationLimit))
}

/// Links whose block power in `w_hat` reaches `threshold` watts.
pub fn cluster_from_power(d: Dims, w_hat: &BeamformerSet, threshold: f64) -> ClusterAssignment {
    ClusterAssignment::from_fn(d, |m, n| w_hat.block_power(m, n) >= threshold)
}

/// Fixed-cluster problem solved by the convex-concave procedure from
/// `start`. Returns the best solution seen and the per-iterate objective
/// trace (bits/s, starting point first). The clustering of the result is
/// exactly `cluster`.
pub fn solve_with_cluster(
    instance: &ProblemInstance,
    cluster: &ClusterAssignment,
    start: BeamformerSet,
    opts: &CcpOptions,
) -> Result<(Solution, Vec<f64>)> {
    let d = instance.dims();
    if cluster.n_messages() != d.n_messages() || cluster.n_bs() != d.n_bs {
        return Err(Error::InvalidArgument("cluster assignment does not match the instance".into()));
    }
    let allowed = |m: usize, n: usize| cluster.is_active(m, n) && opts.messages.carries(m);
    let masked = ClusterAssignment::from_fn(d, allowed);
    if masked.is_empty() {
        return Ok((Solution { clustering: cluster.clone(), ..Solution::zero(instance) }, vec![0.0]));
    }
    let mut best = Solution::repaired(instance, start, masked.clone(), None);
    let mut gamma: Vec<f64> = best.rates.0.iter().map(|r| (r.exp2() - 1.0).max(0.0)).collect();
    let mut bf = best.beamformers.clone();
    for m in 0..d.n_messages() {
        gamma[m] = gamma[m].min(achieved_sinr(instance, &bf, m));
    }
    let mut trace = vec![best.objective];
    let h = instance.whitened_channels();
    let cols = Columns::new(d, false);
    let b = instance.bandwidth();

    for _ in 0..opts.max_iter {
        let frozen = frozen_mask(&gamma, |m| (0..d.n_bs).any(|n| allowed(m, n)));
        let mut p = ConicProgram::new(cols.total);
        pin_blocks(&mut p, &cols, d, |m, n| !allowed(m, n));
        add_common_rows(&mut p, instance, &h, &cols, &bf, &gamma, &frozen);
        for n in 0..d.n_bs {
            // tangent of sum log2(1 + gamma_m) over the cluster, an
            // overestimate, kept within C_n / B
            let mut row = Affine::constant(-instance.backhaul()[n] / b);
            for m in (0..d.n_messages()).filter(|&m| allowed(m, n) && !frozen[m]) {
                let g_t = gamma[m];
                let slope = 1.0 / ((1.0 + g_t) * LN_2);
                row.add_term(cols.gamma + m, slope * g_t);
                row.constant += g_t.ln_1p() / LN_2 - slope * g_t;
            }
            if !row.terms.is_empty() {
                p.add_le(row);
            }
        }
        let res = conic::solve_with_retry(&p, &opts.solve_options())?;
        if res.status != ConicStatus::Optimal {
            break;
        }
        let mut next_bf = BeamformerSet::from_vectors(d, cols.beams.extract(&res.x))?;
        enforce_power(instance, &mut next_bf);
        let mut next_gamma: Vec<f64> = (0..d.n_messages()).map(|m| res.x[cols.gamma + m] * gamma[m]).collect();
        for m in 0..d.n_messages() {
            next_gamma[m] = if frozen[m] { 0.0 } else { next_gamma[m].clamp(0.0, achieved_sinr(instance, &next_bf, m)) };
        }
        let target = RateVector(next_gamma.iter().map(|g| g.ln_1p() / LN_2).collect());
        let sol = Solution::repaired(instance, next_bf.clone(), masked.clone(), Some(&target));
        let prev = *trace.last().expect("trace starts non-empty");
        trace.push(sol.objective);
        let improved = sol.objective > best.objective;
        if improved {
            best = sol;
        }
        bf = next_bf;
        gamma = next_gamma;
        if should_stop(prev, *trace.last().expect("just pushed"), opts.rel_tol) {
            break;
        }
    }
    best.clustering = cluster.clone();
    Ok((best, trace))
}

/// Keeps the links of `w_hat` carrying at least `power_threshold_w` and
/// re-optimizes the beamformers on that fixed cluster.
pub fn refine(instance: &ProblemInstance, w_hat: &BeamformerSet, opts: &CcpOptions) -> Result<Solution> {
    Ok(refine_traced(instance, w_hat, opts)?.0)
}

pub fn refine_traced(
    instance: &ProblemInstance,
    w_hat: &BeamformerSet,
    opts: &CcpOptions,
) -> Result<(Solution, Vec<f64>)> {
    let d = instance.dims();
    let cluster = cluster_from_power(d, w_hat, opts.power_threshold_w);
    if cluster.is_empty() {
        return Ok((Solution::zero(instance), vec![0.0]));
    }
    solve_with_cluster(instance, &cluster, w_hat.clone(), opts)
}

/// One restart: random feasible start, convex-concave iterations, then
/// refinement.
pub fn run_ccp(instance: &ProblemInstance, seed: u64, opts: &CcpOptions) -> Result<CcpRun> {
    let start = feasible_init(instance, seed, opts);
    let (point, trace, stop) = ccp_loop(instance, start, opts)?;
    let (solution, refine_trace) = refine_traced(instance, &point.beamformers, opts)?;
    Ok(CcpRun { seed, iterations: trace.len() - 1, trace, stop, refine_trace, solution })
}

/// Best result over `opts.restarts` independent runs.
pub fn solve_ccp_report(instance: &ProblemInstance, opts: &CcpOptions) -> Result<CcpReport> {
    opts.validate()?;
    let seeds: Vec<u64> = (0..opts.restarts as u64).map(|i| opts.seed.wrapping_add(i)).collect();
    let runs: Vec<CcpRun> = if opts.parallel {
        seeds.par_iter().map(|&s| run_ccp(instance, s, opts)).collect::<Result<_>>()?
    } else {
        seeds.iter().map(|&s| run_ccp(instance, s, opts)).collect::<Result<_>>()?
    };
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.solution.objective > runs[best].solution.objective {
            best = i;
        }
    }
    Ok(CcpReport { solution: runs[best].solution.clone(), runs })
}

pub fn solve_ccp(instance: &ProblemInstance, opts: &CcpOptions) -> Result<Solution> {
    Ok(solve_ccp_report(instance, opts)?.solution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::check_feasibility;
    use crate::scenario::{generate, ScenarioConfig};
    use proptest::prelude::*;

    fn instance(n: usize, k: usize, c_mbps: f64, seed: u64) -> ProblemInstance {
        generate(&ScenarioConfig::new(n, k, 2, 20.0, c_mbps, seed)).unwrap()
    }

    fn serial() -> CcpOptions {
        CcpOptions { parallel: false, ..Default::default() }
    }

    #[test]
    fn smooth_l0_examples() {
        let th = 1e-6;
        assert_eq!(smooth_l0(0.0, th).unwrap(), 0.0);
        assert!((smooth_l0(th, th).unwrap() - 0.5).abs() < 1e-15);
        assert!((smooth_l0(1e6 * th, th).unwrap() - 1.0).abs() < 1e-5);
        assert!(smooth_l0(-1e-12, th).is_err());
        assert!(smooth_l0(1.0, 0.0).is_err());
        assert!(smooth_l0_derivative(-1.0, th).is_err());
    }

    #[test]
    fn smooth_l0_derivative_matches_central_difference() {
        let th = 1e-3;
        for &x in &[1e-4, 1e-3, 5e-3, 0.1] {
            let h = x * 1e-5;
            let fd = (f_theta(x + h, th) - f_theta(x - h, th)) / (2.0 * h);
            let d = smooth_l0_derivative(x, th).unwrap();
            assert!((fd - d).abs() <= 1e-6 * d.abs().max(1e-12), "x {x}: {fd} vs {d}");
        }
    }

    proptest! {
        #[test]
        fn smooth_l0_is_a_concave_underestimate(x in 0.0f64..10.0, dx in 1e-6f64..1.0, th in 1e-8f64..1.0) {
            let f = |v: f64| smooth_l0(v, th).unwrap();
            let (a, b, c) = (f(x), f(x + dx), f(x + 2.0 * dx));
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!(x > 0.0 || a == 0.0);
            prop_assert!(b >= a);
            prop_assert!(smooth_l0_derivative(x, th).unwrap() > 0.0);
            prop_assert!(c - 2.0 * b + a <= 1e-12);
        }

        #[test]
        fn product_split_identity(s in -1e3f64..1e3, t in -1e3f64..1e3) {
            // small integers keep the arithmetic exact
            let (s, t) = (s.round(), t.round());
            prop_assert_eq!(4.0 * s * t, (s + t).powi(2) - (s - t).powi(2));
        }
    }

    #[test]
    fn feasible_init_is_feasible_and_seeded() {
        let inst = instance(3, 2, 100.0, 1);
        let opts = serial();
        let a = feasible_init(&inst, 0, &opts);
        let b = feasible_init(&inst, 1, &opts);
        assert!(dc_violation(&inst, &a, opts.theta) <= 1e-8);
        assert!(dc_violation(&inst, &b, opts.theta) <= 1e-8);
        assert_ne!(a.beamformers, b.beamformers);
        assert_eq!(a, feasible_init(&inst, 0, &opts));
    }

    #[test]
    fn zero_beamformers_give_a_feasible_zero_point() {
        let inst = instance(2, 2, 100.0, 0);
        let p = point_from_beamformers(&inst, BeamformerSet::zeros(inst.dims()), &serial());
        assert_eq!(dc_objective(&inst, &p.gamma), 0.0);
        assert_eq!(dc_violation(&inst, &p, 1e-6), 0.0);
    }

    #[test]
    fn rate_row_holds_at_its_anchor() {
        let inst = instance(2, 2, 100.0, 2);
        let p = feasible_init(&inst, 3, &serial());
        for m in 0..p.gamma.len() {
            assert!(p.gamma[m].ln_1p() / LN_2 <= p.t[m] + 1e-12);
        }
    }

    #[test]
    fn iterates_ascend_and_stay_feasible() {
        let inst = instance(3, 2, 250.0, 4);
        let opts = serial();
        let mut p = feasible_init(&inst, 0, &opts);
        for _ in 0..6 {
            let out = ccp_iterate(&inst, &p, &opts).unwrap();
            assert!(!out.stalled);
            assert!(dc_violation(&inst, &out.point, opts.theta) <= 1e-8);
            let (before, after) = (dc_objective(&inst, &p.gamma), dc_objective(&inst, &out.point.gamma));
            assert!(after >= before - opts.subproblem_eps * inst.bandwidth(), "{after} < {before}");
            p = out.point;
        }
    }

    #[test]
    fn converged_point_is_nearly_fixed() {
        let inst = instance(2, 2, 100.0, 5);
        let opts = CcpOptions { rel_tol: 1e-7, max_iter: 200, ..serial() };
        let (p, _, stop) = ccp_loop(&inst, feasible_init(&inst, 0, &opts), &opts).unwrap();
        assert_eq!(stop, StopReason::Converged);
        let out = ccp_iterate(&inst, &p, &opts).unwrap();
        let (a, b) = (dc_objective(&inst, &p.gamma), dc_objective(&inst, &out.point.gamma));
        assert!((b - a).abs() <= 1e-6 * a, "{a} -> {b}");
    }

    #[test]
    fn run_traces_are_monotone() {
        let inst = instance(3, 2, 150.0, 6);
        let rep = solve_ccp_report(&inst, &serial()).unwrap();
        assert_eq!(rep.runs.len(), 3);
        for r in &rep.runs {
            for w in r.trace.windows(2) {
                assert!(w[1] >= w[0] * (1.0 - 1e-6), "{:?}", r.trace);
            }
            assert!(r.iterations <= 40);
        }
        let best = rep.runs.iter().map(|r| r.solution.objective).fold(f64::MIN, f64::max);
        assert_eq!(rep.solution.objective, best);
        assert!(check_feasibility(&inst, &rep.solution).feasible(1e-6));
    }

    #[test]
    fn zero_backhaul_forces_zero_rates() {
        let inst = instance(2, 2, 0.0, 7);
        let sol = solve_ccp(&inst, &serial()).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert!(check_feasibility(&inst, &sol).feasible(1e-6));
    }

    #[test]
    fn eta_one_counts_only_multicast() {
        let inst = instance(2, 2, 100.0, 8).with_eta(1.0).unwrap();
        let sol = solve_ccp(&inst, &serial()).unwrap();
        assert!((sol.objective - inst.bandwidth() * sol.rates.multicast()).abs() <= 1e-9 * sol.objective);
        assert!(sol.rates.multicast() > 0.0);
    }

    #[test]
    fn refine_thresholds_inclusively() {
        let inst = instance(2, 2, 100.0, 9);
        let d = inst.dims();
        let opts = serial();
        let mut bf = BeamformerSet::zeros(d);
        let thr = opts.power_threshold_w;
        bf.block_mut(0, 1)[0] = C64::new(thr.sqrt(), 0.0);
        bf.block_mut(1, 0)[1] = C64::new(0.0, (thr * 0.999).sqrt());
        let s = cluster_from_power(d, &bf, thr);
        assert!(s.is_active(0, 1));
        assert!(!s.is_active(1, 0));
        assert_eq!(s.values().iter().sum::<f64>(), 1.0);

        let small = BeamformerSet::from_vectors(d, vec![vec![C64::new(1e-4, 0.0); d.vector_len()]; d.n_messages()]).unwrap();
        assert_eq!(refine(&inst, &small, &opts).unwrap(), Solution::zero(&inst));
    }

    #[test]
    fn refine_keeps_the_cluster_and_beats_the_truncated_start() {
        let inst = instance(3, 2, 60.0, 10);
        let opts = serial();
        let (p, _, _) = ccp_loop(&inst, feasible_init(&inst, 0, &opts), &opts).unwrap();
        let s = cluster_from_power(inst.dims(), &p.beamformers, opts.power_threshold_w);
        let floor = Solution::repaired(&inst, p.beamformers.clone(), s.clone(), None);
        let sol = refine(&inst, &p.beamformers, &opts).unwrap();
        assert_eq!(sol.clustering, s);
        assert!(sol.objective >= floor.objective);
        let rep = check_feasibility(&inst, &sol);
        assert!(rep.feasible(1e-6), "{rep:?}");
        // exact backhaul with the binary cluster
        for n in 0..inst.dims().n_bs {
            let load: f64 = (0..inst.dims().n_messages()).filter(|&m| s.is_active(m, n)).map(|m| sol.rates.get(m)).sum();
            assert!(load * inst.bandwidth() <= inst.backhaul()[n] * (1.0 + 1e-9));
        }
    }

    #[test]
    fn fixed_cluster_leaves_no_power_off_cluster() {
        let inst = instance(3, 2, 200.0, 11);
        let d = inst.dims();
        let s = ClusterAssignment::from_fn(d, |m, n| m == 0 || n == m - 1);
        let start = feasible_init(&inst, 2, &serial()).beamformers;
        let (sol, trace) = solve_with_cluster(&inst, &s, start, &serial()).unwrap();
        assert_eq!(sol.clustering, s);
        for m in 0..d.n_messages() {
            for n in 0..d.n_bs {
                if !s.is_active(m, n) {
                    assert_eq!(sol.beamformers.block_power(m, n), 0.0);
                }
            }
        }
        assert!(sol.objective >= trace[0]);
        assert!(check_feasibility(&inst, &sol).feasible(1e-6));
    }

    #[test]
    fn options_are_validated() {
        assert!(CcpOptions { theta: 0.0, ..Default::default() }.validate().is_err());
        assert!(CcpOptions { restarts: 0, ..Default::default() }.validate().is_err());
        assert!(CcpOptions::default().validate().is_ok());
    }
}
