//! Comparison schemes: the two single-service problems, orthogonal time
//! sharing between them, and static BS clustering.

use serde::{Deserialize, Serialize};

use crate::bb::{solve_bb, BbOptions};
use crate::ccp::{feasible_init, solve_ccp, solve_with_cluster, CcpOptions};
use crate::error::{Error, Result};
use crate::model::{norm_sqr, ClusterAssignment, MessageSet, ProblemInstance, Solution};

/// Solver used for the single-service problems.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverChoice {
    Bb(BbOptions),
    Ccp(CcpOptions),
}

impl SolverChoice {
    fn solve(&self, instance: &ProblemInstance, messages: MessageSet) -> Result<Solution> {
        match *self {
            SolverChoice::Bb(o) => Ok(solve_bb(instance, &BbOptions { messages, ..o })?.best_solution),
            SolverChoice::Ccp(o) => solve_ccp(instance, &CcpOptions { messages, ..o }),
        }
    }
}

/// Sum-rate unicast problem: `eta = 0` and `w_0 = 0`. The objective of the
/// result is measured with `eta = 0`.
pub fn solve_unicast_only(instance: &ProblemInstance, solver: &SolverChoice) -> Result<Solution> {
    solver.solve(&instance.with_eta(0.0)?, MessageSet::UnicastOnly)
}

/// Pure multicast problem: maximize `r_0` with every unicast beam off.
/// The objective of the result is `B r_0`.
pub fn solve_multicast_only(instance: &ProblemInstance, solver: &SolverChoice) -> Result<Solution> {
    solver.solve(&instance.with_eta(1.0)?, MessageSet::MulticastOnly)
}

/// The two single-service optima, bits/s.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PureRates {
    pub multicast_bps: f64,
    pub unicast_bps: f64,
}

impl PureRates {
    pub fn solve(instance: &ProblemInstance, solver: &SolverChoice) -> Result<Self> {
        let m = solve_multicast_only(instance, solver)?;
        let u = solve_unicast_only(instance, solver)?;
        Ok(PureRates { multicast_bps: m.multicast_rate_bps(instance), unicast_bps: u.unicast_rate_bps(instance) })
    }

    /// `(t_m R_M*, (1 - t_m) R_U*)`.
    pub fn time_share(&self, t_m: f64) -> Result<(f64, f64)> {
        if !(0.0..=1.0).contains(&t_m) {
            return Err(Error::InvalidArgument(format!("t_m must lie in [0, 1], got {t_m}")));
        }
        Ok((t_m * self.multicast_bps, (1.0 - t_m) * self.unicast_bps))
    }
}

/// Rate pair `(R_M, R_U)` in bits/s of orthogonal time sharing with a
/// fraction `t_m` of the time given to multicast.
pub fn solve_tdm(instance: &ProblemInstance, t_m: f64, solver: &SolverChoice) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&t_m) {
        return Err(Error::InvalidArgument(format!("t_m must lie in [0, 1], got {t_m}")));
    }
    PureRates::solve(instance, solver)?.time_share(t_m)
}

/// Ranking used to pick the `M` serving BSs of each user.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StaticRule {
    /// Large-scale gain if the instance carries geometry, else channel gain.
    #[default]
    Auto,
    /// Path loss plus shadowing, no fast fading. Needs geometry.
    LargeScaleGain,
    /// Euclidean distance. Needs geometry.
    Distance,
    /// `||h_{k,n}||^2` of the drawn channel.
    ChannelGain,
}

/// Multicast served by every BS; user `k` by the `M` best BSs under
/// [`StaticRule::Auto`].
pub fn static_cluster(instance: &ProblemInstance, m: usize) -> Result<ClusterAssignment> {
    static_cluster_by(instance, m, StaticRule::Auto)
}

pub fn static_cluster_by(instance: &ProblemInstance, m: usize, rule: StaticRule) -> Result<ClusterAssignment> {
    let d = instance.dims();
    if m == 0 || m > d.n_bs {
        return Err(Error::InvalidArgument(format!("cluster size must lie in 1..={}, got {m}", d.n_bs)));
    }
    let rule = match (rule, instance.geometry()) {
        (StaticRule::Auto, Some(_)) => StaticRule::LargeScaleGain,
        (StaticRule::Auto, None) => StaticRule::ChannelGain,
        (StaticRule::LargeScaleGain | StaticRule::Distance, None) => {
            return Err(Error::InvalidArgument("instance carries no geometry".into()));
        }
        (r, _) => r,
    };
    // larger score = closer
    let score = |k: usize, n: usize| -> f64 {
        let g = instance.geometry();
        match rule {
            StaticRule::LargeScaleGain => g.expect("checked above").large_scale_gain_db[k][n],
            StaticRule::Distance => {
                let g = g.expect("checked above");
                let (u, b) = (g.user_positions_m[k], g.bs_positions_m[n]);
                -(u[0] - b[0]).hypot(u[1] - b[1])
            }
            _ => norm_sqr(instance.channel_block(k + 1, n)),
        }
    };
    let mut s = ClusterAssignment::empty(d);
    for n in 0..d.n_bs {
        s.set(0, n, true);
    }
    for k in 0..d.n_users {
        let mut order: Vec<usize> = (0..d.n_bs).collect();
        // stable: ties go to the lower BS index
        order.sort_by(|&a, &b| score(k, b).total_cmp(&score(k, a)));
        for &n in &order[..m] {
            s.set(k + 1, n, true);
        }
    }
    Ok(s)
}

/// Weighted sum rate on the fixed cluster `s`, by the convex-concave
/// procedure from `opts.restarts` random starts. The clustering of the
/// result equals `s`.
pub fn solve_fixed_cluster(instance: &ProblemInstance, s: &ClusterAssignment, opts: &CcpOptions) -> Result<Solution> {
    opts.validate()?;
    let mut best: Option<Solution> = None;
    for i in 0..opts.restarts as u64 {
        let start = feasible_init(instance, opts.seed.wrapping_add(i), opts).beamformers;
        let (sol, _) = solve_with_cluster(instance, s, start, opts)?;
        if best.as_ref().map_or(true, |b| sol.objective > b.objective) {
            best = Some(sol);
        }
    }
    Ok(best.expect("restarts validated positive"))
}
