//! Problem data and exact evaluation of every quantity of the joint
//! clustering/beamforming problem.
//!
//! Indexing conventions used throughout the crate:
//! * users are numbered `1..=K`;
//! * messages are numbered `0..=K`, message `0` being the multicast layer
//!   and message `k` the unicast stream of user `k`;
//! * base stations are numbered `0..N`.
//!
//! All quantities are linear scale: watts, bits/s, bits/s/Hz.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Network dimensions `(N, K, L)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub n_bs: usize,
    pub n_users: usize,
    pub n_antennas: usize,
}

impl Dims {
    pub fn new(n_bs: usize, n_users: usize, n_antennas: usize) -> Self {
        Dims { n_bs, n_users, n_antennas }
    }

    /// `K + 1`: one multicast message plus one unicast message per user.
    pub fn n_messages(&self) -> usize {
        self.n_users + 1
    }

    /// Length `N * L` of a network-wide channel or beamforming vector.
    pub fn vector_len(&self) -> usize {
        self.n_bs * self.n_antennas
    }

    /// Number of (message, BS) links, `(K + 1) * N`.
    pub fn n_links(&self) -> usize {
        self.n_messages() * self.n_bs
    }

    pub fn link_index(&self, message: usize, bs: usize) -> usize {
        debug_assert!(message <= self.n_users && bs < self.n_bs);
        message * self.n_bs + bs
    }
}

/// Conjugate inner product `h^H w`.
pub fn inner(h: &[C64], w: &[C64]) -> C64 {
    debug_assert_eq!(h.len(), w.len());
    h.iter().zip(w).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

/// Optional geometric side information retained from scenario generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub bs_positions_m: Vec<[f64; 2]>,
    pub user_positions_m: Vec<[f64; 2]>,
    /// Average (fading-free) gain per (user, BS) link in dB, `K x N`.
    pub large_scale_gain_db: Vec<Vec<f64>>,
}

/// Frozen description of one network realization.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    dims: Dims,
    channels: Vec<Vec<C64>>,
    bs_power: Vec<f64>,
    backhaul: Vec<f64>,
    noise: Vec<f64>,
    bandwidth: f64,
    eta: f64,
    geometry: Option<Geometry>,
}

pub struct InstanceBuilder {
    dims: Dims,
    channels: Vec<Vec<C64>>,
    bs_power: Vec<f64>,
    backhaul: Vec<f64>,
    noise: Vec<f64>,
    bandwidth: f64,
    eta: f64,
    geometry: Option<Geometry>,
    require_independent: bool,
}

impl InstanceBuilder {
    pub fn channels(mut self, channels: Vec<Vec<C64>>) -> Self {
        self.channels = channels;
        self
    }

    pub fn bs_power(mut self, watts: Vec<f64>) -> Self {
        self.bs_power = watts;
        self
    }

    pub fn uniform_bs_power(mut self, watts: f64) -> Self {
        self.bs_power = vec![watts; self.dims.n_bs];
        self
    }

    pub fn backhaul(mut self, bps: Vec<f64>) -> Self {
        self.backhaul = bps;
        self
    }

    pub fn uniform_backhaul(mut self, bps: f64) -> Self {
        self.backhaul = vec![bps; self.dims.n_bs];
        self
    }

    pub fn noise(mut self, watts: Vec<f64>) -> Self {
        self.noise = watts;
        self
    }

    pub fn uniform_noise(mut self, watts: f64) -> Self {
        self.noise = vec![watts; self.dims.n_users];
        self
    }

    pub fn bandwidth(mut self, hz: f64) -> Self {
        self.bandwidth = hz;
        self
    }

    pub fn eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn geometry(mut self, geometry: Option<Geometry>) -> Self {
        self.geometry = geometry;
        self
    }

    /// Skip the linear-independence check on the channel vectors. Only
    /// meant for analytic toy cases such as several users sharing a scalar
    /// channel; the solvers assume independence.
    pub fn allow_dependent_channels(mut self) -> Self {
        self.require_independent = false;
        self
    }

    pub fn build(self) -> Result<ProblemInstance> {
        let d = self.dims;
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        if d.n_bs == 0 || d.n_users == 0 || d.n_antennas == 0 {
            return bad(format!("dimensions must be positive, got {:?}", d));
        }
        if self.channels.len() != d.n_users {
            return bad(format!("expected {} channel vectors, got {}", d.n_users, self.channels.len()));
        }
        if let Some(h) = self.channels.iter().find(|h| h.len() != d.vector_len()) {
            return bad(format!("channel vector length {} != N*L = {}", h.len(), d.vector_len()));
        }
        if self.channels.iter().flatten().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return bad("channel entries must be finite".into());
        }
        if self.bs_power.len() != d.n_bs || self.backhaul.len() != d.n_bs {
            return bad("power and backhaul need one entry per BS".into());
        }
        if self.noise.len() != d.n_users {
            return bad("noise needs one entry per user".into());
        }
        if !self.bs_power.iter().all(|&p| p.is_finite() && p > 0.0) {
            return bad("BS powers must be positive".into());
        }
        if !self.backhaul.iter().all(|&c| c.is_finite() && c >= 0.0) {
            return bad("backhaul capacities must be nonnegative".into());
        }
        if !self.noise.iter().all(|&s| s.is_finite() && s > 0.0) {
            return bad("noise powers must be positive".into());
        }
        if !(self.bandwidth.is_finite() && self.bandwidth > 0.0) {
            return bad("bandwidth must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return bad(format!("eta must lie in [0, 1], got {}", self.eta));
        }
        if self.require_independent {
            let rank = channel_rank(&self.channels, d.vector_len());
            if rank < d.n_users {
                return Err(Error::RankDeficient { rank, users: d.n_users });
            }
        }
        Ok(ProblemInstance {
            dims: d,
            channels: self.channels,
            bs_power: self.bs_power,
            backhaul: self.backhaul,
            noise: self.noise,
            bandwidth: self.bandwidth,
            eta: self.eta,
            geometry: self.geometry,
        })
    }
}

/// Numerical rank of the `NL x K` channel matrix.
pub fn channel_rank(channels: &[Vec<C64>], len: usize) -> usize {
    if channels.is_empty() {
        return 0;
    }
    let m = nalgebra::DMatrix::from_fn(len, channels.len(), |i, j| channels[j][i]);
    let scale = m.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0;
    }
    let svd = m.svd(false, false);
    let tol = 1e-10 * svd.singular_values.max();
    svd.singular_values.iter().filter(|&&s| s > tol).count()
}

impl ProblemInstance {
    pub fn builder(n_bs: usize, n_users: usize, n_antennas: usize) -> InstanceBuilder {
        let dims = Dims::new(n_bs, n_users, n_antennas);
        InstanceBuilder {
            dims,
            channels: Vec::new(),
            bs_power: vec![1.0; n_bs],
            backhaul: vec![f64::MAX; n_bs],
            noise: vec![1.0; n_users],
            bandwidth: 1.0,
            eta: 0.5,
            geometry: None,
            require_independent: true,
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Network-wide channel `h_k` of user `k` in `1..=K`.
    pub fn channel(&self, k: usize) -> &[C64] {
        assert!(k >= 1 && k <= self.dims.n_users, "user index {k} out of range");
        &self.channels[k - 1]
    }

    pub fn channels(&self) -> &[Vec<C64>] {
        &self.channels
    }

    /// The length-`L` block `h_{k,n}`.
    pub fn channel_block(&self, k: usize, n: usize) -> &[C64] {
        let l = self.dims.n_antennas;
        &self.channel(k)[n * l..(n + 1) * l]
    }

    pub fn bs_power(&self) -> &[f64] {
        &self.bs_power
    }

    pub fn backhaul(&self) -> &[f64] {
        &self.backhaul
    }

    /// Noise variance `sigma_k^2` of user `k` in `1..=K`.
    pub fn noise(&self, k: usize) -> f64 {
        self.noise[k - 1]
    }

    pub fn noise_all(&self) -> &[f64] {
        &self.noise
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn geometry(&self) -> Option<&Geometry> {
        self.geometry.as_ref()
    }

    pub fn total_power(&self) -> f64 {
        self.bs_power.iter().sum()
    }

    /// Objective weight of message `m` per unit rate in bits/s/Hz.
    pub fn weight(&self, m: usize) -> f64 {
        if m == 0 {
            self.eta
        } else {
            1.0 - self.eta
        }
    }

    /// Copy with a different weighting `eta`.
    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidInstance(format!("eta must lie in [0, 1], got {eta}")));
        }
        Ok(ProblemInstance { eta, ..self.clone() })
    }

    /// Copy with every BS backhaul set to `bps`.
    pub fn with_uniform_backhaul(&self, bps: f64) -> Result<Self> {
        if !(bps.is_finite() && bps >= 0.0) {
            return Err(Error::InvalidInstance(format!("backhaul must be nonnegative, got {bps}")));
        }
        Ok(ProblemInstance { backhaul: vec![bps; self.dims.n_bs], ..self.clone() })
    }

    /// Channels whitened by the noise standard deviation, `h_k / sigma_k`,
    /// indexed `0..K`. The solvers build their programs on these so the
    /// noise term becomes one.
    pub fn whitened_channels(&self) -> Vec<Vec<C64>> {
        self.channels
            .iter()
            .zip(&self.noise)
            .map(|(h, &s2)| {
                let s = s2.sqrt();
                h.iter().map(|c| c / s).collect()
            })
            .collect()
    }
}

/// The `K + 1` network-wide beamformers, `w_0` (multicast) first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamformerSet {
    n_antennas: usize,
    w: Vec<Vec<C64>>,
}

impl BeamformerSet {
    pub fn zeros(dims: Dims) -> Self {
        BeamformerSet {
            n_antennas: dims.n_antennas,
            w: vec![vec![C64::new(0.0, 0.0); dims.vector_len()]; dims.n_messages()],
        }
    }

    pub fn from_vectors(dims: Dims, w: Vec<Vec<C64>>) -> Result<Self> {
        if w.len() != dims.n_messages() || w.iter().any(|v| v.len() != dims.vector_len()) {
            return Err(Error::InvalidArgument(format!(
                "beamformer set must hold {} vectors of length {}",
                dims.n_messages(),
                dims.vector_len()
            )));
        }
        Ok(BeamformerSet { n_antennas: dims.n_antennas, w })
    }

    pub fn n_messages(&self) -> usize {
        self.w.len()
    }

    pub fn n_bs(&self) -> usize {
        self.w.first().map_or(0, |v| v.len() / self.n_antennas)
    }

    pub fn vector(&self, k: usize) -> &[C64] {
        &self.w[k]
    }

    pub fn vector_mut(&mut self, k: usize) -> &mut [C64] {
        &mut self.w[k]
    }

    pub fn vectors(&self) -> &[Vec<C64>] {
        &self.w
    }

    /// The length-`L` sub-vector `w_{k,n}` transmitted by BS `n`.
    pub fn block(&self, k: usize, n: usize) -> &[C64] {
        let l = self.n_antennas;
        &self.w[k][n * l..(n + 1) * l]
    }

    pub fn block_mut(&mut self, k: usize, n: usize) -> &mut [C64] {
        let l = self.n_antennas;
        &mut self.w[k][n * l..(n + 1) * l]
    }

    pub fn block_power(&self, k: usize, n: usize) -> f64 {
        norm_sqr(self.block(k, n))
    }

    /// Total transmit power of BS `n` over all messages.
    pub fn bs_power(&self, n: usize) -> f64 {
        (0..self.n_messages()).map(|k| self.block_power(k, n)).sum()
    }

    pub fn scale(&mut self, factor: f64) {
        for c in self.w.iter_mut().flatten() {
            *c *= factor;
        }
    }

    pub fn zero_block(&mut self, k: usize, n: usize) {
        for c in self.block_mut(k, n) {
            *c = C64::new(0.0, 0.0);
        }
    }
}

/// Binary BS clustering `s_{k,n}`, stored row-major by message.
///
/// Values are kept as reals so that a non-binary entry read back from a
/// result file can be reported by the feasibility checker instead of being
/// silently rounded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    n_messages: usize,
    n_bs: usize,
    values: Vec<f64>,
}

impl ClusterAssignment {
    pub fn empty(dims: Dims) -> Self {
        ClusterAssignment {
            n_messages: dims.n_messages(),
            n_bs: dims.n_bs,
            values: vec![0.0; dims.n_links()],
        }
    }

    pub fn full(dims: Dims) -> Self {
        ClusterAssignment {
            n_messages: dims.n_messages(),
            n_bs: dims.n_bs,
            values: vec![1.0; dims.n_links()],
        }
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut s = Self::empty(dims);
        for k in 0..dims.n_messages() {
            for n in 0..dims.n_bs {
                s.set(k, n, f(k, n));
            }
        }
        s
    }

    /// Raw, possibly non-binary values (as read from a file).
    pub fn from_values(dims: Dims, values: Vec<f64>) -> Result<Self> {
        if values.len() != dims.n_links() {
            return Err(Error::InvalidArgument(format!(
                "clustering needs {} entries, got {}",
                dims.n_links(),
                values.len()
            )));
        }
        Ok(ClusterAssignment { n_messages: dims.n_messages(), n_bs: dims.n_bs, values })
    }

    /// Clustering induced by the support of `bf`: `s_{k,n} = 1` iff the block
    /// carries power.
    pub fn support_of(dims: Dims, bf: &BeamformerSet) -> Self {
        Self::from_fn(dims, |k, n| bf.block_power(k, n) > 0.0)
    }

    pub fn n_messages(&self) -> usize {
        self.n_messages
    }

    pub fn n_bs(&self) -> usize {
        self.n_bs
    }

    pub fn value(&self, k: usize, n: usize) -> f64 {
        self.values[k * self.n_bs + n]
    }

    pub fn is_active(&self, k: usize, n: usize) -> bool {
        self.value(k, n) > 0.5
    }

    pub fn set(&mut self, k: usize, n: usize, on: bool) {
        self.values[k * self.n_bs + n] = if on { 1.0 } else { 0.0 };
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of BSs serving message `k`.
    pub fn cluster_size(&self, k: usize) -> usize {
        (0..self.n_bs).filter(|&n| self.is_active(k, n)).count()
    }

    /// `sum_n s_{0,n}`.
    pub fn multicast_cluster_size(&self) -> f64 {
        self.cluster_size(0) as f64
    }

    /// `(1/K) sum_{k>=1} sum_n s_{k,n}`.
    pub fn mean_unicast_cluster_size(&self) -> f64 {
        let k = self.n_messages - 1;
        if k == 0 {
            return 0.0;
        }
        (1..self.n_messages).map(|m| self.cluster_size(m)).sum::<usize>() as f64 / k as f64
    }

    pub fn is_empty(&self) -> bool {
        self.values.iter().all(|&v| v <= 0.5)
    }
}

/// Which messages a solve may carry. The restricted variants pin every
/// other message's beamformer and rate to zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageSet {
    #[default]
    All,
    MulticastOnly,
    UnicastOnly,
}

impl MessageSet {
    pub fn carries(&self, message: usize) -> bool {
        match self {
            MessageSet::All => true,
            MessageSet::MulticastOnly => message == 0,
            MessageSet::UnicastOnly => message != 0,
        }
    }
}

/// Rates in bits/s/Hz, `r_0` (multicast) first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateVector(pub Vec<f64>);

impl RateVector {
    pub fn zeros(dims: Dims) -> Self {
        RateVector(vec![0.0; dims.n_messages()])
    }

    pub fn multicast(&self) -> f64 {
        self.0[0]
    }

    pub fn unicast_sum(&self) -> f64 {
        self.0[1..].iter().sum()
    }

    pub fn get(&self, k: usize) -> f64 {
        self.0[k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn scaled(&self, factor: f64) -> Self {
        RateVector(self.0.iter().map(|r| r * factor).collect())
    }
}

/// Multicast SINR of user `k` in `1..=K`; the whole unicast layer interferes
/// since the multicast message is decoded first.
pub fn sinr_multicast(instance: &ProblemInstance, bf: &BeamformerSet, k: usize) -> f64 {
    let h = instance.channel(k);
    let signal = inner(h, bf.vector(0)).norm_sqr();
    let interference: f64 = (1..bf.n_messages()).map(|j| inner(h, bf.vector(j)).norm_sqr()).sum();
    signal / (interference + instance.noise(k))
}

/// Unicast SINR of user `k` after the multicast layer has been cancelled.
pub fn sinr_unicast(instance: &ProblemInstance, bf: &BeamformerSet, k: usize) -> f64 {
    let h = instance.channel(k);
    let signal = inner(h, bf.vector(k)).norm_sqr();
    let interference: f64 = (1..bf.n_messages())
        .filter(|&j| j != k)
        .map(|j| inner(h, bf.vector(j)).norm_sqr())
        .sum();
    signal / (interference + instance.noise(k))
}

/// Weighted sum rate in bits/s.
pub fn objective(instance: &ProblemInstance, rates: &RateVector) -> f64 {
    let b = instance.bandwidth();
    let eta = instance.eta();
    eta * b * rates.multicast() + (1.0 - eta) * b * rates.unicast_sum()
}

/// Rates actually supported by `bf`: the multicast rate is limited by the
/// weakest user.
pub fn achieved_rates(instance: &ProblemInstance, bf: &BeamformerSet) -> RateVector {
    let k_users = instance.dims().n_users;
    let mut r = Vec::with_capacity(k_users + 1);
    let r0 = (1..=k_users)
        .map(|k| (1.0 + sinr_multicast(instance, bf, k)).log2())
        .fold(f64::INFINITY, f64::min);
    r.push(r0);
    for k in 1..=k_users {
        r.push((1.0 + sinr_unicast(instance, bf, k)).log2());
    }
    RateVector(r)
}

/// Per-message rate caps used to build the initial branch-and-bound box.
///
/// The backhaul term is `max_n C_n / B` so that it is in bits/s/Hz like the
/// rates it bounds.
pub fn rate_upper_bounds(instance: &ProblemInstance) -> RateVector {
    let d = instance.dims();
    let backhaul_cap = instance.backhaul().iter().fold(0.0f64, |a, &c| a.max(c)) / instance.bandwidth();
    let p_total = instance.total_power();
    let mut r = vec![0.0; d.n_messages()];
    for k in 1..=d.n_users {
        let snr = p_total * norm_sqr(instance.channel(k)) / instance.noise(k);
        r[k] = backhaul_cap.min((1.0 + snr).log2());
    }
    r[0] = r[1..].iter().cloned().fold(f64::INFINITY, f64::min);
    RateVector(r)
}

/// Largest uniform factor in `[0, 1]` that brings `rates` within every
/// BS backhaul budget under `clustering`.
pub fn backhaul_scaling(instance: &ProblemInstance, clustering: &ClusterAssignment, rates: &RateVector) -> f64 {
    let b = instance.bandwidth();
    let mut factor = 1.0f64;
    for (n, &cap) in instance.backhaul().iter().enumerate() {
        let load: f64 = (0..clustering.n_messages())
            .map(|k| clustering.value(k, n) * b * rates.get(k))
            .sum();
        if load > cap {
            factor = factor.min(cap / load);
        }
    }
    factor.max(0.0)
}

/// A point of the original problem with its recomputed objective.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub beamformers: BeamformerSet,
    pub clustering: ClusterAssignment,
    pub rates: RateVector,
    /// Weighted sum rate in bits/s.
    pub objective: f64,
}

impl Solution {
    pub fn new(
        instance: &ProblemInstance,
        beamformers: BeamformerSet,
        clustering: ClusterAssignment,
        rates: RateVector,
    ) -> Self {
        let objective = objective(instance, &rates);
        Solution { beamformers, clustering, rates, objective }
    }

    pub fn zero(instance: &ProblemInstance) -> Self {
        let d = instance.dims();
        Self::new(instance, BeamformerSet::zeros(d), ClusterAssignment::empty(d), RateVector::zeros(d))
    }

    /// Builds an exactly feasible solution around `bf`:
    /// blocks outside `clustering` are zeroed, the beamformers are scaled
    /// down uniformly if any BS exceeds its power budget, rates are the
    /// achieved ones (optionally capped by `target`), and finally all rates
    /// are scaled by the backhaul factor.
    pub fn repaired(
        instance: &ProblemInstance,
        mut bf: BeamformerSet,
        clustering: ClusterAssignment,
        target: Option<&RateVector>,
    ) -> Self {
        let d = instance.dims();
        for k in 0..d.n_messages() {
            for n in 0..d.n_bs {
                if !clustering.is_active(k, n) {
                    bf.zero_block(k, n);
                }
            }
        }
        let mut shrink = 1.0f64;
        for n in 0..d.n_bs {
            let p = bf.bs_power(n);
            let cap = instance.bs_power()[n];
            if p > cap {
                shrink = shrink.min((cap / p).sqrt() * (1.0 - 1e-12));
            }
        }
        if shrink < 1.0 {
            bf.scale(shrink);
        }
        let mut rates = achieved_rates(instance, &bf);
        if let Some(t) = target {
            for (r, &cap) in rates.0.iter_mut().zip(&t.0) {
                *r = r.min(cap.max(0.0));
            }
        }
        let factor = backhaul_scaling(instance, &clustering, &rates);
        let rates = rates.scaled(factor);
        Solution::new(instance, bf, clustering, rates)
    }

    pub fn multicast_rate_bps(&self, instance: &ProblemInstance) -> f64 {
        instance.bandwidth() * self.rates.multicast()
    }

    pub fn unicast_rate_bps(&self, instance: &ProblemInstance) -> f64 {
        instance.bandwidth() * self.rates.unicast_sum()
    }
}

/// Worst normalized violation of each constraint family.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub multicast_sinr: f64,
    pub unicast_sinr: f64,
    pub power: f64,
    pub cluster_link: f64,
    pub backhaul: f64,
    pub binary: f64,
    /// Relative mismatch between the stored objective and the one
    /// recomputed from the rates.
    pub objective_mismatch: f64,
}

impl FeasibilityReport {
    pub fn worst(&self) -> f64 {
        [
            self.multicast_sinr,
            self.unicast_sinr,
            self.power,
            self.cluster_link,
            self.backhaul,
            self.binary,
            self.objective_mismatch,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn feasible(&self, tol: f64) -> bool {
        self.worst() <= tol
    }
}

/// Evaluates every constraint family of the original problem.
///
/// Each violation is normalized by its right-hand side (floored at one for
/// the dimensionless SINR rows and at 1 bit/s for the backhaul rows).
/// Negative rates count as SINR violations.
pub fn check_feasibility(instance: &ProblemInstance, sol: &Solution) -> FeasibilityReport {
    let d = instance.dims();
    let bf = &sol.beamformers;
    let s = &sol.clustering;
    let r = &sol.rates;
    let mut rep = FeasibilityReport::default();

    let sinr_violation = |rate: f64, sinr: f64| {
        if rate < 0.0 {
            return -rate;
        }
        let rhs = rate.exp2() - 1.0;
        (rhs - sinr).max(0.0) / rhs.max(1.0)
    };
    for k in 1..=d.n_users {
        rep.multicast_sinr = rep.multicast_sinr.max(sinr_violation(r.get(0), sinr_multicast(instance, bf, k)));
        rep.unicast_sinr = rep.unicast_sinr.max(sinr_violation(r.get(k), sinr_unicast(instance, bf, k)));
    }
    for n in 0..d.n_bs {
        let cap = instance.bs_power()[n];
        rep.power = rep.power.max((bf.bs_power(n) - cap).max(0.0) / cap);
        let mut load = 0.0;
        for k in 0..d.n_messages() {
            let sv = s.value(k, n);
            rep.cluster_link = rep.cluster_link.max((bf.block_power(k, n) - sv * cap).max(0.0) / cap);
            rep.binary = rep.binary.max(sv.abs().min((sv - 1.0).abs()));
            load += sv * instance.bandwidth() * r.get(k);
        }
        let c = instance.backhaul()[n];
        rep.backhaul = rep.backhaul.max((load - c).max(0.0) / c.max(1.0));
    }
    let recomputed = objective(instance, r);
    rep.objective_mismatch = (sol.objective - recomputed).abs() / recomputed.abs().max(1.0);
    rep
}
