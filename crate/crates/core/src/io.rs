//! JSON persistence for instances and solutions. Field names carry their
//! units; complex numbers are `[re, im]` pairs. Floats round-trip exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BeamformerSet, ClusterAssignment, Dims, Geometry, ProblemInstance, RateVector, Solution, C64};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub schema_version: u32,
    pub n_bs: usize,
    pub n_users: usize,
    pub n_antennas: usize,
    /// `K` vectors of length `N L`, BS blocks in order.
    pub channels: Vec<Vec<[f64; 2]>>,
    pub bs_power_watts: Vec<f64>,
    pub backhaul_bps: Vec<f64>,
    pub noise_watts: Vec<f64>,
    pub bandwidth_hz: f64,
    pub eta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Geometry>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub allow_dependent_channels: bool,
}

impl InstanceFile {
    pub fn from_instance(instance: &ProblemInstance) -> Self {
        let d = instance.dims();
        InstanceFile {
            schema_version: SCHEMA_VERSION,
            n_bs: d.n_bs,
            n_users: d.n_users,
            n_antennas: d.n_antennas,
            channels: instance.channels().iter().map(|h| pairs(h)).collect(),
            bs_power_watts: instance.bs_power().to_vec(),
            backhaul_bps: instance.backhaul().to_vec(),
            noise_watts: instance.noise_all().to_vec(),
            bandwidth_hz: instance.bandwidth(),
            eta: instance.eta(),
            geometry: instance.geometry().cloned(),
            allow_dependent_channels: false,
        }
    }

    pub fn into_instance(self) -> Result<ProblemInstance> {
        check_version(self.schema_version)?;
        let mut b = ProblemInstance::builder(self.n_bs, self.n_users, self.n_antennas)
            .channels(self.channels.iter().map(|h| complex(h)).collect())
            .bs_power(self.bs_power_watts)
            .backhaul(self.backhaul_bps)
            .noise(self.noise_watts)
            .bandwidth(self.bandwidth_hz)
            .eta(self.eta)
            .geometry(self.geometry);
        if self.allow_dependent_channels {
            b = b.allow_dependent_channels();
        }
        b.build()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    pub schema_version: u32,
    /// `K + 1` vectors of length `N L`, multicast first.
    pub beamformers: Vec<Vec<[f64; 2]>>,
    /// `(K + 1) x N` indicators.
    pub clustering: Vec<Vec<f64>>,
    pub rates_bps_per_hz: Vec<f64>,
    pub objective_bps: f64,
}

impl SolutionFile {
    pub fn from_solution(sol: &Solution) -> Self {
        let c = &sol.clustering;
        SolutionFile {
            schema_version: SCHEMA_VERSION,
            beamformers: sol.beamformers.vectors().iter().map(|w| pairs(w)).collect(),
            clustering: c.values().chunks(c.n_bs().max(1)).map(<[f64]>::to_vec).collect(),
            rates_bps_per_hz: sol.rates.0.clone(),
            objective_bps: sol.objective,
        }
    }

    /// The stored solution, checked for shape against `dims`. The stored
    /// objective is kept as is so validation can compare it.
    pub fn into_solution(self, dims: Dims) -> Result<Solution> {
        check_version(self.schema_version)?;
        let beamformers = BeamformerSet::from_vectors(dims, self.beamformers.iter().map(|w| complex(w)).collect())?;
        if self.clustering.len() != dims.n_messages() || self.clustering.iter().any(|r| r.len() != dims.n_bs) {
            return Err(Error::InvalidArgument(format!(
                "clustering must be {} x {}",
                dims.n_messages(),
                dims.n_bs
            )));
        }
        let clustering = ClusterAssignment::from_values(dims, self.clustering.concat())?;
        if self.rates_bps_per_hz.len() != dims.n_messages() {
            return Err(Error::InvalidArgument(format!("expected {} rates", dims.n_messages())));
        }
        Ok(Solution {
            beamformers,
            clustering,
            rates: RateVector(self.rates_bps_per_hz),
            objective: self.objective_bps,
        })
    }
}

fn check_version(found: u32) -> Result<()> {
    if found != SCHEMA_VERSION {
        return Err(Error::SchemaVersion { found, expected: SCHEMA_VERSION });
    }
    Ok(())
}

fn pairs(v: &[C64]) -> Vec<[f64; 2]> {
    v.iter().map(|c| [c.re, c.im]).collect()
}

fn complex(v: &[[f64; 2]]) -> Vec<C64> {
    v.iter().map(|&[re, im]| C64::new(re, im)).collect()
}

pub fn instance_to_json(instance: &ProblemInstance) -> Result<String> {
    Ok(serde_json::to_string_pretty(&InstanceFile::from_instance(instance))?)
}

pub fn instance_from_json(text: &str) -> Result<ProblemInstance> {
    serde_json::from_str::<InstanceFile>(text)?.into_instance()
}

pub fn save_instance(instance: &ProblemInstance, path: &Path) -> Result<()> {
    Ok(std::fs::write(path, instance_to_json(instance)? + "\n")?)
}

pub fn load_instance(path: &Path) -> Result<ProblemInstance> {
    instance_from_json(&std::fs::read_to_string(path)?)
}
