// Copyright 2026 The meander authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Run configuration: TOML with strict key checking, dotted-path overrides,
//! and a content hash embedded in every artifact.

use meander_core::billiard::{build_table, BilliardTable, Disk};
use meander_core::geometry::{DomainSpec, LatticeSpec, Side};
use meander_core::injection::{ATable, InjectionSpec, PeriodicFn};
use meander_core::kernels::BoundaryProfile;
use meander_core::walk::WalkModel;
use serde::Deserialize;
use sha2::{Digest, Sha256};

pub type CliResult<T> = Result<T, String>;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSection,
    #[serde(default)]
    pub lattice: Option<LatticeSection>,
    #[serde(default)]
    pub injection: Option<InjectionSection>,
    #[serde(default)]
    pub walk: Option<WalkSection>,
    #[serde(default)]
    pub billiard: Option<BilliardSection>,
    pub run: RunSection,
    #[serde(default)]
    pub solve: Option<SolveSection>,
    #[serde(default)]
    pub verify: Option<VerifySection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    #[serde(default = "one")]
    pub aspect: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub basis: Option<[[f64; 2]; 2]>,
    #[serde(default)]
    pub jumps: Option<Vec<[i64; 2]>>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionSection {
    #[serde(default = "spec_table")]
    pub a_table: String,
    /// Samples of the periodic time modulation over one period.
    #[serde(default)]
    pub b: Option<Vec<f64>>,
    #[serde(default)]
    pub f_west: Option<Vec<f64>>,
    #[serde(default)]
    pub f_south: Option<Vec<f64>>,
    #[serde(default)]
    pub f_east: Option<Vec<f64>>,
    #[serde(default)]
    pub f_north: Option<Vec<f64>>,
    /// Macroscopic horizon t (injection over (-t L², 0]); omit for the
    /// stationary problem.
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default = "default_delta_prime")]
    pub delta_prime: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkSection {}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BilliardSection {
    /// Disks as (center x, center y, radius).
    pub disks: Vec<[f64; 3]>,
    #[serde(default = "default_sigma_time")]
    pub sigma_time: f64,
    #[serde(default = "default_sigma_samples")]
    pub sigma_samples: u64,
    #[serde(default = "default_mc_particles")]
    pub particles: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_out")]
    pub out_dir: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    #[serde(default = "default_grid")]
    pub grid: usize,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default)]
    pub h2_t: Option<f64>,
    #[serde(default)]
    pub h3_delta: Option<f64>,
    #[serde(default)]
    pub le_trials: Option<u64>,
    #[serde(default)]
    pub probe: Option<[f64; 2]>,
}

fn one() -> f64 {
    1.0
}
fn spec_table() -> String {
    "spec".into()
}
fn default_delta_prime() -> f64 {
    0.02
}
fn default_out() -> String {
    "out".into()
}
fn default_grid() -> usize {
    128
}
fn default_sigma_time() -> f64 {
    400.0
}
fn default_sigma_samples() -> u64 {
    1024
}
fn default_mc_particles() -> u64 {
    1_000_000
}

impl RunConfig {
    /// Parse, apply dotted-path overrides, and re-validate strictly.
    pub fn load(text: &str, overrides: &[(String, String)], seed: Option<u64>) -> CliResult<(Self, String)> {
        let mut value: toml::Value = text
            .parse()
            .map_err(|e| format!("config parse error: {e}"))?;
        for (path, raw) in overrides {
            apply_override(&mut value, path, raw)?;
        }
        if let Some(seed) = seed {
            apply_override(&mut value, "run.seed", &seed.to_string())?;
        }
        let resolved = toml::to_string(&value).map_err(|e| format!("re-serialize: {e}"))?;
        let config: RunConfig = toml::from_str(&resolved).map_err(|e| format!("config error: {e}"))?;
        config.validate()?;
        let mut hasher = Sha256::new();
        hasher.update(resolved.as_bytes());
        let hash = format!("{:x}", hasher.finalize());
        Ok((config, hash))
    }

    fn validate(&self) -> CliResult<()> {
        match (self.walk.is_some(), self.billiard.is_some()) {
            (true, true) => Err("exactly one dynamics section allowed; both [walk] and [billiard] present".into()),
            (false, false) => Err("one dynamics section required: add [walk] or [billiard]".into()),
            _ => Ok(()),
        }
    }

    pub fn domain_spec(&self) -> CliResult<DomainSpec> {
        DomainSpec::new(self.domain.aspect, self.domain.scale).map_err(|e| e.to_string())
    }

    pub fn walk_model(&self) -> CliResult<WalkModel> {
        let section = self.lattice.clone().unwrap_or(LatticeSection {
            preset: Some("ssrw".into()),
            basis: None,
            jumps: None,
            weights: None,
        });
        if let Some(preset) = &section.preset {
            return match preset.as_str() {
                "ssrw" => Ok(WalkModel::ssrw()),
                other => Err(format!("unknown lattice preset: {other}")),
            };
        }
        let (Some(basis), Some(jumps)) = (section.basis, section.jumps.clone()) else {
            return Err("lattice needs a preset or basis+jumps".into());
        };
        let lattice = LatticeSpec::from_integer_jumps(
            basis[0],
            basis[1],
            jumps,
            section.weights.as_deref(),
        )
        .map_err(|e| e.to_string())?;
        WalkModel::new(lattice).map_err(|e| e.to_string())
    }

    pub fn billiard_table(&self) -> CliResult<BilliardTable> {
        let section = self
            .billiard
            .as_ref()
            .ok_or_else(|| "no [billiard] section".to_string())?;
        let disks = section
            .disks
            .iter()
            .map(|d| Disk {
                center: [d[0], d[1]],
                radius: d[2],
            })
            .collect();
        build_table(disks).map_err(|e| e.to_string())
    }

    pub fn injection_spec(&self, model: &WalkModel) -> CliResult<InjectionSpec> {
        let section = self
            .injection
            .as_ref()
            .ok_or_else(|| "no [injection] section".to_string())?;
        let a_table = match section.a_table.as_str() {
            "spec" => ATable::spec_a(model.weights()),
            "count" => ATable::CountEscapes,
            other => return Err(format!("unknown a_table: {other} (walk supports spec|count)")),
        };
        let b = match &section.b {
            None => PeriodicFn::constant(),
            Some(samples) => PeriodicFn::from_samples(samples.clone()).map_err(|e| e.to_string())?,
        };
        let horizon = section.horizon.map(|t| t * self.domain.scale * self.domain.scale);
        let mut spec = InjectionSpec::new(a_table, b, horizon);
        let sides = [
            (Side::West, &section.f_west, 1.0),
            (Side::South, &section.f_south, self.domain.aspect),
            (Side::East, &section.f_east, 1.0),
            (Side::North, &section.f_north, self.domain.aspect),
        ];
        for (side, samples, span) in sides {
            if let Some(samples) = samples {
                if samples.len() >= 2 {
                    spec = spec.with_profile(
                        BoundaryProfile::from_samples(side, samples.clone(), span, section.delta_prime)
                            .map_err(|e| e.to_string())?,
                    );
                }
            }
        }
        Ok(spec)
    }

    /// West profile as a closure (linear interpolation of the samples).
    pub fn west_profile_fn(&self) -> CliResult<impl Fn(f64) -> f64 + Sync + Clone> {
        let samples = self
            .injection
            .as_ref()
            .and_then(|i| i.f_west.clone())
            .ok_or_else(|| "solve needs injection.f_west".to_string())?;
        if samples.len() < 2 {
            return Err("injection.f_west needs at least 2 samples".into());
        }
        Ok(move |u: f64| {
            let n = samples.len() - 1;
            let s = (u.clamp(0.0, 1.0)) * n as f64;
            let i = (s.floor() as usize).min(n - 1);
            let w = s - i as f64;
            samples[i] * (1.0 - w) + samples[i + 1] * w
        })
    }

    pub fn delta_prime(&self) -> f64 {
        self.injection
            .as_ref()
            .map(|i| i.delta_prime)
            .unwrap_or_else(default_delta_prime)
    }
}

fn apply_override(value: &mut toml::Value, path: &str, raw: &str) -> CliResult<()> {
    let parts: Vec<&str> = path.split('.').collect();
    if parts.is_empty() {
        return Err("empty override path".into());
    }
    let mut cur = value;
    for p in &parts[..parts.len() - 1] {
        cur = cur
            .as_table_mut()
            .ok_or_else(|| format!("override path {path}: {p} is not a table"))?
            .entry(p.to_string())
            .or_insert(toml::Value::Table(Default::default()));
    }
    let table = cur
        .as_table_mut()
        .ok_or_else(|| format!("override path {path} does not address a table"))?;
    // Parse the literal by wrapping it in a one-key document; fall back to a
    // plain string.
    let parsed = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|t| t.get("v").cloned())
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    table.insert(parts[parts.len() - 1].to_string(), parsed);
    Ok(())
}
