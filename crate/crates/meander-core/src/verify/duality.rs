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

//! Duality cross-checks: the exact two-sided identity for walks, and the
//! Monte Carlo boundary-injection comparison against the harmonic-measure
//! prediction for billiards.

use rayon::prelude::*;

use crate::billiard::{
    edge_spec, flow_absorbing, sample_edge_measure, AbsorbOutcome, BilliardTable, EdgeAxis,
    EdgeDir, EdgeMeasureSpec, SigmaEstimate,
};
use crate::error::{Error, Result};
use crate::geometry::{boundary_sets, DomainSpec};
use crate::injection::InjectionSpec;
use crate::rng::{self, salt};
use crate::walk::{dual_harmonic, occupancy_stationary, occupancy_transient, AbsorbedChain, WalkModel};

#[derive(Debug, Clone)]
pub struct WalkDualityReport {
    pub l: f64,
    pub t: Option<f64>,
    pub max_abs_diff: f64,
    pub sites: usize,
}

/// Exact equality of the occupancy field and the dual harmonic evaluation
/// over every site of `D_L`.
pub fn duality_walk(
    model: &WalkModel,
    injection: &InjectionSpec,
    l: f64,
    t: Option<f64>,
) -> Result<WalkDualityReport> {
    let sites = boundary_sets(DomainSpec::square(l)?, model.lattice())?;
    let chain = AbsorbedChain::forward(&sites, model);
    let src = injection.source_vector(&sites);
    let occ = match t {
        None => occupancy_stationary(&chain, &src)?,
        Some(t) => occupancy_transient(&chain, &src, t)?,
    };
    let g = injection.boundary_values(&sites);
    let dual = dual_harmonic(&sites, model, &g, t)?;
    Ok(WalkDualityReport {
        l,
        t,
        max_abs_diff: occ.max_abs_diff(&dual)?,
        sites: sites.len(),
    })
}

/// Cell geometry for billiard boundary-injection runs: an odd `m × m` cell
/// square so the four-fold table symmetry fixes the center cell exactly.
pub struct BilliardMcSetup {
    pub m: i64,
    pub s_hat: f64,
    pub edge_v: EdgeMeasureSpec,
    pub edge_h: EdgeMeasureSpec,
    /// Lifetime cap; survival past it is counted separately and bounded by
    /// the spectral decay of the absorbed dynamics.
    pub t_max: f64,
}

impl BilliardMcSetup {
    pub fn new(table: &BilliardTable, sigma: &SigmaEstimate, l: f64) -> Result<Self> {
        let s_hat = (0.5 * (sigma.sigma[0][0] + sigma.sigma[1][1])).sqrt();
        if !(s_hat > 0.0) {
            return Err(Error::InvalidArgument("need a positive diffusion estimate".into()));
        }
        let mut m = (s_hat * l).round() as i64;
        if m % 2 == 0 {
            m += 1;
        }
        if m < 3 {
            return Err(Error::InvalidArgument("domain smaller than 3 cells".into()));
        }
        // Slowest absorbed mode decays like exp(-π² σ² t / m²); the cap
        // leaves a completely negligible surviving fraction.
        let diff_rate = s_hat * s_hat;
        let t_max = 60.0 * (m as f64).powi(2) / (std::f64::consts::PI.powi(2) * diff_rate);
        Ok(Self {
            m,
            s_hat,
            edge_v: edge_spec(table, EdgeAxis::Vertical)?,
            edge_h: edge_spec(table, EdgeAxis::Horizontal)?,
            t_max,
        })
    }

    pub fn effective_l(&self) -> f64 {
        self.m as f64 / self.s_hat
    }

    pub fn center_cell(&self) -> [i64; 2] {
        [(self.m - 1) / 2, (self.m - 1) / 2]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct McOccupancy {
    /// `R · mean(occupation time of the target cell)`.
    pub estimate: f64,
    pub std_error: f64,
    pub total_rate: f64,
    pub lifetime_mean: f64,
    /// Particles that hit the lifetime cap (should be none).
    pub capped: u64,
}

/// Stationary Monte Carlo occupancy of `⟨zL⟩` under West-edge injection with
/// per-edge rate `f(row/m)/ζ̄`: inject, flow to absorption, accumulate the
/// time spent in the target cell.
pub fn billiard_boundary_mc(
    table: &BilliardTable,
    setup: &BilliardMcSetup,
    profile: &(impl Fn(f64) -> f64 + Sync),
    z: [f64; 2],
    n: u64,
    seed: u64,
) -> Result<McOccupancy> {
    let m = setup.m;
    let target = [
        ((z[0] * m as f64).floor() as i64).clamp(0, m - 1),
        ((z[1] * m as f64).floor() as i64).clamp(0, m - 1),
    ];
    // Per-row rates f(row/m)/ζ̄ and their cumulative for sampling.
    let rates: Vec<f64> = (0..m)
        .map(|row| profile(row as f64 / m as f64).max(0.0) / setup.edge_v.zeta_kac)
        .collect();
    let total_rate: f64 = rates.iter().sum();
    if total_rate <= 0.0 {
        return Err(Error::InvalidArgument("profile injects nothing".into()));
    }
    let cum: Vec<f64> = rates
        .iter()
        .scan(0.0, |acc, r| {
            *acc += r;
            Some(*acc)
        })
        .collect();

    let chunk = 4096u64;
    let stats: Vec<(f64, f64, f64, u64)> = (0..n.div_ceil(chunk))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&c| {
            let lo = c * chunk;
            let hi = (lo + chunk).min(n);
            let mut s = 0.0f64;
            let mut s2 = 0.0f64;
            let mut life = 0.0f64;
            let mut capped = 0u64;
            for k in lo..hi {
                let mut rng = rng::stream(seed, salt::VERIFY ^ 0x4455414c, k);
                let u: f64 = rand::Rng::gen::<f64>(&mut rng) * total_rate;
                let row = cum.partition_point(|c| *c < u).min(rates.len() - 1) as i64;
                let x = sample_edge_measure(&setup.edge_v, [0, row], EdgeDir::PlusX, &mut rng);
                let mut occ = 0.0f64;
                let mut cur = x.cell;
                let mut t_last = 0.0f64;
                let alive = |cell: [i64; 2]| {
                    (0..m).contains(&cell[0]) && (0..m).contains(&cell[1])
                };
                let out = flow_absorbing(table, &x, setup.t_max, alive, |t, cell| {
                    if cur == target {
                        occ += t - t_last;
                    }
                    t_last = t;
                    cur = cell;
                });
                match out {
                    Ok(AbsorbOutcome::Exited { time, .. }) => {
                        life += time;
                    }
                    Ok(AbsorbOutcome::Survived(_)) => {
                        if cur == target {
                            occ += setup.t_max - t_last;
                        }
                        life += setup.t_max;
                        capped += 1;
                    }
                    Err(_) => {}
                }
                s += occ;
                s2 += occ * occ;
            }
            (s, s2, life, capped)
        })
        .collect();
    let (sum, sumsq, life, capped) = stats.iter().fold((0.0, 0.0, 0.0, 0u64), |a, b| {
        (a.0 + b.0, a.1 + b.1, a.2 + b.2, a.3 + b.3)
    });
    let nf = n as f64;
    let mean = sum / nf;
    let var = (sumsq / nf - mean * mean).max(0.0);
    Ok(McOccupancy {
        estimate: total_rate * mean,
        std_error: total_rate * (var / nf).sqrt(),
        total_rate,
        lifetime_mean: life / nf,
        capped,
    })
}

#[derive(Debug, Clone)]
pub struct BilliardDualityReport {
    pub effective_l: f64,
    pub cells: i64,
    pub estimate: f64,
    pub std_error: f64,
    /// Harmonic-measure prediction for the flat West profile at the center:
    /// exactly 1/4 by the four-fold symmetry of table and domain.
    pub prediction: f64,
    pub z_score: f64,
    pub injections: u64,
}

/// Monte Carlo duality check for the billiard: flux injection on the West
/// edges with `f ≡ 1` against the exact symmetric prediction 1/4 at the
/// center cell.
pub fn duality_billiard(
    table: &BilliardTable,
    sigma: &SigmaEstimate,
    l: f64,
    n: u64,
    seed: u64,
) -> Result<BilliardDualityReport> {
    let setup = BilliardMcSetup::new(table, sigma, l)?;
    let mc = billiard_boundary_mc(table, &setup, &|_| 1.0, [0.5, 0.5], n, seed)?;
    let prediction = 0.25;
    Ok(BilliardDualityReport {
        effective_l: setup.effective_l(),
        cells: setup.m,
        estimate: mc.estimate,
        std_error: mc.std_error,
        prediction,
        z_score: (mc.estimate - prediction) / mc.std_error,
        injections: n,
    })
}
