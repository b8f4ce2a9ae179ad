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

//! Local-equilibrium Poissonity: repeated independent injection runs, count
//! statistics at microscopically separated probe sites, dispersion indices
//! and pairwise covariances, with the detailed (phase-restricted) variant for
//! billiards.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::billiard::{
    edge_spec, flow_absorbing, sample_edge_measure, AbsorbOutcome, BilliardTable, EdgeAxis,
    EdgeDir, SigmaEstimate,
};
use crate::error::{Error, Result};
use crate::geometry::{boundary_sets, DomainSpec};
use crate::injection::{sample_events, InjectionSpec};
use crate::rng::{self, salt};
use crate::verify::duality::BilliardMcSetup;
use crate::walk::{occupancy_transient, AbsorbedChain, WalkModel};

/// Predicate on the projected phase `(q₀, v)` for the detailed variant.
pub type PhasePredicate = fn([f64; 2], [f64; 2]) -> bool;

#[derive(Debug, Clone)]
pub struct LEConfig {
    pub l: f64,
    /// Macroscopic horizon; counts are taken at time 0 after injecting over
    /// `(-t L², 0]`.
    pub t: f64,
    pub probes: Vec<[f64; 2]>,
    pub offsets: Vec<[i64; 2]>,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct LEReport {
    /// Mean count per (probe, offset) slot.
    pub means: Vec<f64>,
    /// Exact expected counts per probe (walks only; empty for billiards).
    pub reference: Vec<f64>,
    /// Variance/mean per slot.
    pub dispersion: Vec<f64>,
    /// Worst pairwise covariance z-score across distinct slots.
    pub max_cov_z: f64,
    /// Worst z-score for mean equality across offsets of one probe.
    pub max_mean_diff_z: f64,
    pub slots: usize,
    pub trials: u64,
}

impl LEReport {
    pub fn dispersion_in(&self, lo: f64, hi: f64) -> bool {
        self.dispersion.iter().all(|d| *d >= lo && *d <= hi)
    }
}

fn slot_statistics(counts: &[Vec<f64>], probes: usize, offsets: usize) -> LEReport {
    let slots = probes * offsets;
    let n = counts.len() as f64;
    let mut means = vec![0.0; slots];
    for row in counts {
        for (s, v) in row.iter().enumerate() {
            means[s] += v / n;
        }
    }
    let mut cov = vec![0.0f64; slots * slots];
    for row in counts {
        for a in 0..slots {
            let da = row[a] - means[a];
            for b in a..slots {
                cov[a * slots + b] += da * (row[b] - means[b]);
            }
        }
    }
    for v in cov.iter_mut() {
        *v /= n - 1.0;
    }
    let dispersion: Vec<f64> = (0..slots)
        .map(|s| {
            let var = cov[s * slots + s];
            if means[s] > 0.0 {
                var / means[s]
            } else {
                f64::NAN
            }
        })
        .collect();
    let mut max_cov_z = 0.0f64;
    for a in 0..slots {
        for b in a + 1..slots {
            let va = cov[a * slots + a];
            let vb = cov[b * slots + b];
            if va <= 0.0 || vb <= 0.0 {
                continue;
            }
            let r = cov[a * slots + b] / (va * vb).sqrt();
            max_cov_z = max_cov_z.max((r * (n - 1.0).sqrt()).abs());
        }
    }
    let mut max_mean_diff_z = 0.0f64;
    for p in 0..probes {
        for a in 0..offsets {
            for b in a + 1..offsets {
                let (sa, sb) = (p * offsets + a, p * offsets + b);
                // Paired difference across trials.
                let mut dvar = 0.0;
                let dmean = means[sa] - means[sb];
                for row in counts {
                    dvar += (row[sa] - row[sb] - dmean).powi(2);
                }
                dvar /= n - 1.0;
                if dvar > 0.0 {
                    max_mean_diff_z = max_mean_diff_z.max((dmean / (dvar / n).sqrt()).abs());
                }
            }
        }
    }
    LEReport {
        means,
        reference: Vec::new(),
        dispersion,
        max_cov_z,
        max_mean_diff_z,
        slots,
        trials: counts.len() as u64,
    }
}

/// Walk local equilibrium: four-sided injection, exact Poisson event
/// sampling, jump-count evolution of every particle to time 0.
pub fn le_poissonity_walk(
    model: &WalkModel,
    injection: &InjectionSpec,
    config: &LEConfig,
) -> Result<LEReport> {
    if config.trials < 100 {
        return Err(Error::InvalidArgument("need at least 100 trials".into()));
    }
    let horizon = config.t * config.l * config.l;
    let sites = boundary_sets(DomainSpec::square(config.l)?, model.lattice())?;
    let lat = model.lattice();
    let mut spec = injection.clone();
    spec.horizon = Some(horizon);

    // Probe slots: ⟨z L⟩ + offset.
    let mut slots: Vec<[i64; 2]> = Vec::new();
    for z in &config.probes {
        let base = lat.round_to_lattice([z[0] * config.l, z[1] * config.l]);
        for off in &config.offsets {
            slots.push([base[0] + off[0], base[1] + off[1]]);
        }
    }
    for s in &slots {
        if sites.index_of(*s).is_none() {
            return Err(Error::OutOfDomain(lat.position(*s)));
        }
    }

    // Jump thresholds on u32 for branch-light sampling.
    let mut thresholds: Vec<(u32, [i64; 2])> = Vec::new();
    let mut acc = 0.0f64;
    for (j, w) in lat.jumps_int().iter().enumerate() {
        acc += model.weights()[j];
        let t = (acc.min(1.0) * u32::MAX as f64) as u32;
        thresholds.push((t, *w));
    }
    thresholds.last_mut().expect("jumps").0 = u32::MAX;

    let domain = DomainSpec::square(config.l)?;
    let counts: Vec<Vec<f64>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| -> Result<Vec<f64>> {
            let trial_seed = rng::mix(config.seed ^ 0x4c45).wrapping_add(trial);
            let events = sample_events(&spec, &sites, trial_seed)?;
            let mut rng = rng::stream(config.seed, salt::VERIFY ^ 0x4c45, trial);
            let mut row = vec![0.0f64; slots.len()];
            for ev in &events {
                let age = -ev.time;
                let n_jumps = if age > 0.0 {
                    Poisson::new(age)
                        .map_err(|_| Error::InvalidArgument("bad event age".into()))?
                        .sample(&mut rng) as u64
                } else {
                    0
                };
                let mut pos = ev.site;
                let mut dead = false;
                for _ in 0..n_jumps {
                    let r = rng.gen::<u32>();
                    let mut step = thresholds[thresholds.len() - 1].1;
                    for (t, w) in &thresholds {
                        if r <= *t {
                            step = *w;
                            break;
                        }
                    }
                    pos[0] += step[0];
                    pos[1] += step[1];
                    if !domain.contains(lat.position(pos)) {
                        dead = true;
                        break;
                    }
                }
                if !dead {
                    for (si, s) in slots.iter().enumerate() {
                        if *s == pos {
                            row[si] += 1.0;
                        }
                    }
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = slot_statistics(&counts, config.probes.len(), config.offsets.len());
    // Exact reference means per probe via the transient propagator.
    let chain = AbsorbedChain::forward(&sites, model);
    let src = spec.source_vector(&sites);
    let field = occupancy_transient(&chain, &src, horizon)?;
    report.reference = config
        .probes
        .iter()
        .map(|z| {
            let base = lat.round_to_lattice([z[0] * config.l, z[1] * config.l]);
            field.value_at(base).unwrap_or(0.0)
        })
        .collect();
    Ok(report)
}

/// Billiard local equilibrium with an optional phase restriction (the
/// detailed variant). Injection is through all four side edge classes with
/// per-edge rate `f/ζ̄`.
pub fn le_poissonity_billiard(
    table: &BilliardTable,
    sigma: &SigmaEstimate,
    config: &LEConfig,
    profiles: [Option<fn(f64) -> f64>; 4],
    predicate: Option<PhasePredicate>,
) -> Result<LEReport> {
    let setup = BilliardMcSetup::new(table, sigma, config.l)?;
    let m = setup.m;
    let horizon = config.t * setup.effective_l() * setup.effective_l();
    let edge_v = edge_spec(table, EdgeAxis::Vertical)?;
    let edge_h = edge_spec(table, EdgeAxis::Horizontal)?;

    // Source list: (cell, entry direction, rate).
    let mut sources: Vec<([i64; 2], EdgeDir, f64)> = Vec::new();
    for i in 0..m {
        let u = i as f64 / m as f64;
        if let Some(f) = profiles[0] {
            sources.push(([0, i], EdgeDir::PlusX, f(u) / edge_v.zeta_kac));
        }
        if let Some(f) = profiles[2] {
            sources.push(([m - 1, i], EdgeDir::MinusX, f(u) / edge_v.zeta_kac));
        }
        if let Some(f) = profiles[1] {
            sources.push(([i, 0], EdgeDir::PlusY, f(u) / edge_h.zeta_kac));
        }
        if let Some(f) = profiles[3] {
            sources.push(([i, m - 1], EdgeDir::MinusY, f(u) / edge_h.zeta_kac));
        }
    }
    let slots: Vec<[i64; 2]> = config
        .probes
        .iter()
        .flat_map(|z| {
            let base = [
                ((z[0] * m as f64).floor() as i64).clamp(0, m - 1),
                ((z[1] * m as f64).floor() as i64).clamp(0, m - 1),
            ];
            config
                .offsets
                .iter()
                .map(move |off| [base[0] + off[0], base[1] + off[1]])
        })
        .collect();

    let counts: Vec<Vec<f64>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| -> Result<Vec<f64>> {
            let mut rng = rng::stream(config.seed, salt::VERIFY ^ 0x444c45, trial);
            let mut row = vec![0.0f64; slots.len()];
            for (cell, dir, rate) in &sources {
                if *rate <= 0.0 {
                    continue;
                }
                let mean = rate * horizon;
                let k = Poisson::new(mean)
                    .map_err(|_| Error::InvalidArgument("bad source rate".into()))?
                    .sample(&mut rng) as u64;
                for _ in 0..k {
                    let age = rng.gen::<f64>() * horizon;
                    let edge = match dir.axis() {
                        EdgeAxis::Vertical => &edge_v,
                        EdgeAxis::Horizontal => &edge_h,
                    };
                    let x = sample_edge_measure(edge, *cell, *dir, &mut rng);
                    let alive =
                        |c: [i64; 2]| (0..m).contains(&c[0]) && (0..m).contains(&c[1]);
                    if let AbsorbOutcome::Survived(end) =
                        flow_absorbing(table, &x, age, alive, |_, _| {})?
                    {
                        if predicate.map_or(true, |p| p(end.q, end.v)) {
                            for (si, s) in slots.iter().enumerate() {
                                if *s == end.cell {
                                    row[si] += 1.0;
                                }
                            }
                        }
                    }
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(slot_statistics(&counts, config.probes.len(), config.offsets.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Side;
    use crate::injection::{ATable, PeriodicFn};
    use crate::kernels::BoundaryProfile;

    fn four_sided(model: &WalkModel) -> InjectionSpec {
        let mut spec = InjectionSpec::new(
            ATable::spec_a(model.weights()),
            PeriodicFn::constant(),
            None,
        );
        for side in Side::ALL {
            spec = spec.with_profile(
                BoundaryProfile::from_fn(side, 256, 1.0, 0.02, |y| {
                    (std::f64::consts::PI * y).sin()
                })
                .unwrap(),
            );
        }
        spec
    }

    #[test]
    fn walk_counts_are_poisson_at_small_scale() {
        let model = WalkModel::ssrw();
        let spec = four_sided(&model);
        let config = LEConfig {
            l: 16.0,
            t: 0.4,
            probes: vec![[0.5, 0.5], [0.3, 0.6]],
            offsets: vec![[0, 0], [1, 0]],
            trials: 600,
            seed: 5,
        };
        let report = le_poissonity_walk(&model, &spec, &config).unwrap();
        assert!(report.dispersion_in(0.8, 1.2), "dispersion {:?}", report.dispersion);
        assert!(report.max_cov_z < 4.0, "cov z {}", report.max_cov_z);
        assert!(report.max_mean_diff_z < 4.0, "mean z {}", report.max_mean_diff_z);
        // Sample means track the exact reference within a loose band.
        for (p, r) in report.reference.iter().enumerate() {
            let got = report.means[p * 2];
            let se = (r / 600.0f64).sqrt() * 3.5;
            assert!((got - r).abs() < se.max(0.05), "probe {p}: {got} vs {r}");
        }
    }

    #[test]
    fn dle_with_full_region_equals_le() {
        let table = crate::billiard::build_table_with(
            vec![
                crate::billiard::Disk {
                    center: [0.0, 0.0],
                    radius: 0.49,
                },
                crate::billiard::Disk {
                    center: [0.5, 0.5],
                    radius: 0.21,
                },
            ],
            crate::billiard::HorizonValidation {
                trajectories: 100,
                flights_per_trajectory: 100,
                seed: 0,
            },
        )
        .unwrap();
        let sigma = crate::billiard::estimate_sigma(
            &table,
            crate::billiard::InitialMeasure::Nu0,
            200.0,
            64,
            1,
        )
        .unwrap();
        let config = LEConfig {
            l: 18.0,
            t: 0.25,
            probes: vec![[0.5, 0.5]],
            offsets: vec![[0, 0]],
            trials: 60,
            seed: 9,
        };
        let flat: fn(f64) -> f64 = |_| 1.0;
        let profiles = [Some(flat), Some(flat), Some(flat), Some(flat)];
        let le = le_poissonity_billiard(&table, &sigma, &config, profiles, None).unwrap();
        let dle =
            le_poissonity_billiard(&table, &sigma, &config, profiles, Some(|_, _| true)).unwrap();
        assert_eq!(le.means, dle.means);
        // Restricting to |v_x| > 1/sqrt(2) halves the mean.
        let half = le_poissonity_billiard(
            &table,
            &sigma,
            &config,
            profiles,
            Some(|_q, v| v[0].abs() > std::f64::consts::FRAC_1_SQRT_2),
        )
        .unwrap();
        let ratio = half.means[0] / le.means[0];
        let se = 3.0 * (le.means[0] / 60.0f64).sqrt() / le.means[0];
        assert!((ratio - 0.5).abs() < se.max(0.12), "DLE ratio {ratio}");
    }
}
