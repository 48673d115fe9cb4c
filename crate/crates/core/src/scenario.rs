//! Seeded generation of hexagonal multi-cell network instances.
//!
//! Randomness comes from ChaCha20 (`rand_chacha`) seeded with the 64-bit
//! seed of the configuration, so an instance is a pure function of its
//! configuration on every platform. Draw order: user positions, then
//! shadowing per (user, BS), then small-scale fading per (user, BS, antenna).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{channel_rank, Geometry, ProblemInstance, C64};

const FADING_RETRIES: usize = 16;

fn default_isd() -> f64 {
    500.0
}
fn default_exclusion() -> f64 {
    50.0
}
fn default_bandwidth() -> f64 {
    1e7
}
fn default_gain() -> f64 {
    9.0
}
fn default_shadowing() -> f64 {
    8.0
}
fn default_noise_psd() -> f64 {
    -174.0
}
fn default_eta() -> f64 {
    0.9
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_bs: usize,
    pub n_users: usize,
    pub n_antennas: usize,
    #[serde(default = "default_isd")]
    pub inter_site_distance_m: f64,
    #[serde(default = "default_exclusion")]
    pub exclusion_radius_m: f64,
    pub bs_power_dbm: f64,
    pub backhaul_mbps: f64,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_hz: f64,
    #[serde(default = "default_gain")]
    pub antenna_gain_dbi: f64,
    #[serde(default = "default_shadowing")]
    pub shadowing_std_db: f64,
    #[serde(default = "default_noise_psd")]
    pub noise_psd_dbm_hz: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    pub seed: u64,
}

impl ScenarioConfig {
    /// Configuration with the default physical parameters.
    pub fn new(n_bs: usize, n_users: usize, n_antennas: usize, bs_power_dbm: f64, backhaul_mbps: f64, seed: u64) -> Self {
        ScenarioConfig {
            n_bs,
            n_users,
            n_antennas,
            inter_site_distance_m: default_isd(),
            exclusion_radius_m: default_exclusion(),
            bs_power_dbm,
            backhaul_mbps,
            bandwidth_hz: default_bandwidth(),
            antenna_gain_dbi: default_gain(),
            shadowing_std_db: default_shadowing(),
            noise_psd_dbm_hz: default_noise_psd(),
            eta: default_eta(),
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ScenarioConfig { seed, ..self.clone() }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let field = msg
                .split('`')
                .nth(1)
                .map(str::to_owned)
                .unwrap_or_else(|| "<document>".to_owned());
            Error::InvalidConfig { field, reason: msg }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: String| Err(Error::InvalidConfig { field: field.into(), reason });
        if !matches!(self.n_bs, 1 | 2 | 3 | 7) {
            return bad("n_bs", format!("hexagonal layouts exist for 1, 2, 3 or 7 BSs, got {}", self.n_bs));
        }
        if self.n_users == 0 {
            return bad("n_users", "must be positive".into());
        }
        if self.n_antennas == 0 {
            return bad("n_antennas", "must be positive".into());
        }
        if self.n_users > self.n_bs * self.n_antennas {
            return bad(
                "n_users",
                format!("{} users cannot have independent channels with N*L = {}", self.n_users, self.n_bs * self.n_antennas),
            );
        }
        let positive = [
            ("inter_site_distance_m", self.inter_site_distance_m),
            ("bandwidth_hz", self.bandwidth_hz),
            ("shadowing_std_db", self.shadowing_std_db),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(name, format!("must be positive, got {v}"));
            }
        }
        if !(self.exclusion_radius_m.is_finite() && self.exclusion_radius_m >= 0.0) {
            return bad("exclusion_radius_m", "must be nonnegative".into());
        }
        if self.exclusion_radius_m >= self.inter_site_distance_m / 2.0 {
            return bad("exclusion_radius_m", "must be smaller than half the inter-site distance".into());
        }
        if !(self.backhaul_mbps.is_finite() && self.backhaul_mbps >= 0.0) {
            return bad("backhaul_mbps", format!("must be nonnegative, got {}", self.backhaul_mbps));
        }
        for (name, v) in [
            ("bs_power_dbm", self.bs_power_dbm),
            ("antenna_gain_dbi", self.antenna_gain_dbi),
            ("noise_psd_dbm_hz", self.noise_psd_dbm_hz),
        ] {
            if !v.is_finite() {
                return bad(name, "must be finite".into());
            }
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return bad("eta", format!("must lie in [0, 1], got {}", self.eta));
        }
        Ok(())
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Path loss in dB at distance `d_km` kilometres.
pub fn path_loss_db(d_km: f64) -> Result<f64> {
    if !(d_km.is_finite() && d_km > 0.0) {
        return Err(Error::InvalidArgument(format!("distance must be positive, got {d_km} km")));
    }
    Ok(148.1 + 37.6 * d_km.log10())
}

/// BS coordinates (metres) of the 1-, 2-, 3- and 7-cell layouts.
pub fn hex_layout(n_bs: usize, isd: f64) -> Result<Vec<[f64; 2]>> {
    let ring = |count: usize| -> Vec<[f64; 2]> {
        (0..count)
            .map(|i| {
                let a = (60.0 * i as f64).to_radians();
                [isd * a.cos(), isd * a.sin()]
            })
            .collect()
    };
    match n_bs {
        1 => Ok(vec![[0.0, 0.0]]),
        2 => Ok(vec![[0.0, 0.0], [isd, 0.0]]),
        3 => {
            let mut v = vec![[0.0, 0.0]];
            v.extend(ring(2));
            Ok(v)
        }
        7 => {
            let mut v = vec![[0.0, 0.0]];
            v.extend(ring(6));
            Ok(v)
        }
        n => Err(Error::InvalidConfig {
            field: "n_bs".into(),
            reason: format!("hexagonal layouts exist for 1, 2, 3 or 7 BSs, got {n}"),
        }),
    }
}

/// Whether `p` lies in the hexagonal cell of apothem `a` centred at `c`
/// (flat sides facing the six neighbours).
fn in_hexagon(p: [f64; 2], c: [f64; 2], a: f64) -> bool {
    let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
    (0..3).all(|i| {
        let t = (60.0 * i as f64).to_radians();
        (dx * t.cos() + dy * t.sin()).abs() <= a
    })
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn draw_user(rng: &mut ChaCha20Rng, bs: &[[f64; 2]], isd: f64, exclusion: f64) -> [f64; 2] {
    let a = isd / 2.0;
    let circ = a * 2.0 / 3f64.sqrt();
    loop {
        let cell = rng.random_range(0..bs.len());
        let c = bs[cell];
        let p = [c[0] + rng.random_range(-a..=a), c[1] + rng.random_range(-circ..=circ)];
        if in_hexagon(p, c, a) && bs.iter().all(|&b| distance(p, b) >= exclusion) {
            return p;
        }
    }
}

/// Draws the network-wide channels for fixed large-scale gains (`K x N`,
/// dB) with i.i.d. unit-variance circularly symmetric Gaussian fading.
pub fn draw_channels<R: Rng>(gains_db: &[Vec<f64>], n_antennas: usize, rng: &mut R) -> Vec<Vec<C64>> {
    let half = std::f64::consts::FRAC_1_SQRT_2;
    gains_db
        .iter()
        .map(|row| {
            row.iter()
                .flat_map(|&g| {
                    let amp = db_to_linear(g).sqrt();
                    (0..n_antennas)
                        .map(|_| {
                            let re: f64 = StandardNormal.sample(rng);
                            let im: f64 = StandardNormal.sample(rng);
                            C64::new(re * half, im * half) * amp
                        })
                        .collect::<Vec<_>>()
                })
                .collect()
        })
        .collect()
}

/// Generates one instance. Identical configurations give bit-identical
/// instances.
pub fn generate(config: &ScenarioConfig) -> Result<ProblemInstance> {
    config.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let bs = hex_layout(config.n_bs, config.inter_site_distance_m)?;
    let users: Vec<[f64; 2]> = (0..config.n_users)
        .map(|_| draw_user(&mut rng, &bs, config.inter_site_distance_m, config.exclusion_radius_m))
        .collect();
    let shadow = Normal::new(0.0, config.shadowing_std_db).map_err(|e| Error::InvalidConfig {
        field: "shadowing_std_db".into(),
        reason: e.to_string(),
    })?;
    let mut gains = Vec::with_capacity(users.len());
    for &u in &users {
        let mut row = Vec::with_capacity(bs.len());
        for &b in &bs {
            let pl = path_loss_db(distance(u, b) / 1000.0)?;
            let s: f64 = shadow.sample(&mut rng);
            row.push(config.antenna_gain_dbi - pl - s);
        }
        gains.push(row);
    }

    let len = config.n_bs * config.n_antennas;
    let mut channels = draw_channels(&gains, config.n_antennas, &mut rng);
    let mut attempts = 1;
    while channel_rank(&channels, len) < config.n_users {
        if attempts == FADING_RETRIES {
            return Err(Error::RankDeficient { rank: channel_rank(&channels, len), users: config.n_users });
        }
        channels = draw_channels(&gains, config.n_antennas, &mut rng);
        attempts += 1;
    }

    let noise = dbm_to_watts(config.noise_psd_dbm_hz + 10.0 * config.bandwidth_hz.log10());
    ProblemInstance::builder(config.n_bs, config.n_users, config.n_antennas)
        .channels(channels)
        .uniform_bs_power(dbm_to_watts(config.bs_power_dbm))
        .uniform_backhaul(config.backhaul_mbps * 1e6)
        .uniform_noise(noise)
        .bandwidth(config.bandwidth_hz)
        .eta(config.eta)
        .geometry(Some(Geometry { bs_positions_m: bs, user_positions_m: users, large_scale_gain_db: gains }))
        .build()
}
