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

//! Event-driven periodic Lorentz gas: disk scatterers on the unit torus,
//! exact free flight and specular reflection, flow with cell tracking, the
//! collision map, boundary-edge measures and diffusion-matrix estimation.
//!
//! Coordinates: cell `(m, n)` owns `[m, m+1) × [n, n+1)`; a phase point is a
//! cell index, a local offset in the unit square and a unit velocity. The
//! cell-corner lattice points are required to lie inside a scatterer, fixing
//! the cell-identification convention.

mod dynamics;
mod measures;

pub use dynamics::{
    flow_absorbing, flow_visit, AbsorbOutcome,
    billiard_map, flow, flow_trace, free_flight, involution, reflect, FlightHit, SectionPoint,
};
pub use measures::{
    edge_spec, estimate_sigma, mean_return, phase_region_count, sample_edge_measure, sample_nu0,
    EdgeAxis, EdgeDir, EdgeMeasureSpec, InitialMeasure, MeanReturnEstimate, SigmaEstimate,
};

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, salt};

/// Hard cap on acceptable free flights; a table whose validation samples a
/// longer flight is rejected as (practically) infinite-horizon.
pub const HORIZON_HARD_CAP: f64 = 10.0;

/// Tangency threshold: flights grazing a disk closer than this in incidence
/// cosine are treated as non-collisions.
pub const GRAZE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: [f64; 2],
    pub radius: f64,
}

/// A disk image that can intersect rays passing through the base cell.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Candidate {
    pub center: [f64; 2],
    pub radius: f64,
    pub disk: usize,
}

/// How much sampling effort table construction spends certifying the finite
/// horizon.
#[derive(Debug, Clone, Copy)]
pub struct HorizonValidation {
    pub trajectories: usize,
    pub flights_per_trajectory: usize,
    pub seed: u64,
}

impl Default for HorizonValidation {
    fn default() -> Self {
        Self {
            trajectories: 10_000,
            flights_per_trajectory: 1_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BilliardTable {
    disks: Vec<Disk>,
    free_area: f64,
    candidates: Vec<Candidate>,
    /// Largest free flight seen during validation, and the sample size.
    horizon_bound: f64,
    horizon_flights: u64,
}

/// A point of the Lorentz-gas phase space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub cell: [i64; 2],
    /// Offset within the cell, components in `[0, 1]`.
    pub q: [f64; 2],
    /// Unit velocity.
    pub v: [f64; 2],
}

impl PhasePoint {
    pub fn position(&self) -> [f64; 2] {
        [
            self.cell[0] as f64 + self.q[0],
            self.cell[1] as f64 + self.q[1],
        ]
    }
}

/// Validate scatterers and certify the finite horizon by sampling.
pub fn build_table(disks: Vec<Disk>) -> Result<BilliardTable> {
    build_table_with(disks, HorizonValidation::default())
}

pub fn build_table_with(disks: Vec<Disk>, validation: HorizonValidation) -> Result<BilliardTable> {
    if disks.is_empty() {
        return Err(Error::InvalidArgument("table needs at least one disk".into()));
    }
    for (i, d) in disks.iter().enumerate() {
        if !(d.radius > 0.0) || !d.radius.is_finite() {
            return Err(Error::InvalidArgument(format!("disk {i} has invalid radius")));
        }
        if !(0.0..1.0).contains(&d.center[0]) || !(0.0..1.0).contains(&d.center[1]) {
            return Err(Error::InvalidArgument(format!(
                "disk {i} center must lie in [0,1)^2"
            )));
        }
    }
    // Pairwise disjointness over periodic images.
    for i in 0..disks.len() {
        for j in i..disks.len() {
            for ox in -2i64..=2 {
                for oy in -2i64..=2 {
                    if i == j && ox == 0 && oy == 0 {
                        continue;
                    }
                    let dx = disks[i].center[0] - disks[j].center[0] - ox as f64;
                    let dy = disks[i].center[1] - disks[j].center[1] - oy as f64;
                    let dist = (dx * dx + dy * dy).sqrt();
                    let rsum = disks[i].radius + disks[j].radius;
                    if dist < rsum - 1e-12 {
                        return Err(Error::OverlappingDisks(i, j, dist, rsum));
                    }
                }
            }
        }
    }
    // Cell-corner convention: the lattice corner points must be covered.
    let corner_covered = disks.iter().any(|d| {
        (-1i64..=1).any(|ox| {
            (-1i64..=1).any(|oy| {
                let dx = d.center[0] + ox as f64;
                let dy = d.center[1] + oy as f64;
                dx * dx + dy * dy < d.radius * d.radius
            })
        })
    });
    if !corner_covered {
        return Err(Error::InvalidArgument(
            "cell corner (0,0) must lie inside a scatterer (cell identification convention)".into(),
        ));
    }

    let free_area = 1.0
        - disks
            .iter()
            .map(|d| std::f64::consts::PI * d.radius * d.radius)
            .sum::<f64>();
    if free_area <= 0.0 {
        return Err(Error::InvalidArgument("scatterers leave no free area".into()));
    }

    let mut candidates = Vec::new();
    for (i, d) in disks.iter().enumerate() {
        for ox in -1i64..=1 {
            for oy in -1i64..=1 {
                let c = [d.center[0] + ox as f64, d.center[1] + oy as f64];
                // Distance from the image center to the unit box.
                let dx = (c[0].clamp(0.0, 1.0) - c[0]).abs();
                let dy = (c[1].clamp(0.0, 1.0) - c[1]).abs();
                if dx * dx + dy * dy <= d.radius * d.radius + 1e-12 {
                    candidates.push(Candidate {
                        center: c,
                        radius: d.radius,
                        disk: i,
                    });
                }
            }
        }
    }

    let mut table = BilliardTable {
        disks,
        free_area,
        candidates,
        horizon_bound: HORIZON_HARD_CAP,
        horizon_flights: 0,
    };
    let (bound, flights) = validate_horizon(&table, validation)?;
    table.horizon_bound = bound;
    table.horizon_flights = flights;
    Ok(table)
}

fn validate_horizon(table: &BilliardTable, v: HorizonValidation) -> Result<(f64, u64)> {
    let mut max_flight = 0.0f64;
    let mut total = 0u64;
    for k in 0..v.trajectories {
        let mut rng = rng::stream(v.seed, salt::BILLIARD, k as u64);
        let mut x = table.sample_free_point(&mut rng);
        for _ in 0..v.flights_per_trajectory {
            let hit = match dynamics::free_flight(table, &x) {
                Ok(h) => h,
                Err(Error::LostTrajectory(_)) => {
                    return Err(Error::HorizonViolation {
                        flight: HORIZON_HARD_CAP,
                        bound: HORIZON_HARD_CAP,
                        vx: x.v[0],
                        vy: x.v[1],
                    })
                }
                Err(e) => return Err(e),
            };
            if hit.time > HORIZON_HARD_CAP {
                return Err(Error::HorizonViolation {
                    flight: hit.time,
                    bound: HORIZON_HARD_CAP,
                    vx: x.v[0],
                    vy: x.v[1],
                });
            }
            max_flight = max_flight.max(hit.time);
            total += 1;
            x = hit.advance_and_reflect()?;
        }
    }
    Ok((max_flight, total))
}

impl BilliardTable {
    /// The finite-horizon default: a corner disk of radius 0.49 blocking all
    /// oblique corridors plus a center disk of radius 0.21 closing the axis
    /// corridors. Validated empirically at construction.
    pub fn default_table() -> Result<BilliardTable> {
        build_table(vec![
            Disk {
                center: [0.0, 0.0],
                radius: 0.49,
            },
            Disk {
                center: [0.5, 0.5],
                radius: 0.21,
            },
        ])
    }

    pub fn disks(&self) -> &[Disk] {
        &self.disks
    }

    /// Area of the free part of the unit cell.
    pub fn free_area(&self) -> f64 {
        self.free_area
    }

    pub fn horizon_bound(&self) -> f64 {
        self.horizon_bound
    }

    pub fn horizon_flights(&self) -> u64 {
        self.horizon_flights
    }

    /// Total scatterer perimeter per cell.
    pub fn perimeter(&self) -> f64 {
        self.disks
            .iter()
            .map(|d| 2.0 * std::f64::consts::PI * d.radius)
            .sum()
    }

    pub(crate) fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    /// Is the local point inside any scatterer image?
    pub fn inside_scatterer(&self, q: [f64; 2]) -> bool {
        self.candidates.iter().any(|c| {
            let dx = q[0] - c.center[0];
            let dy = q[1] - c.center[1];
            dx * dx + dy * dy < c.radius * c.radius
        })
    }

    /// Uniform point of the free configuration space with uniform direction.
    pub fn sample_free_point(&self, rng: &mut impl Rng) -> PhasePoint {
        loop {
            let q = [rng.gen::<f64>(), rng.gen::<f64>()];
            if self.inside_scatterer(q) {
                continue;
            }
            let a = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
            return PhasePoint {
                cell: [0, 0],
                q,
                v: [a.cos(), a.sin()],
            };
        }
    }
}
