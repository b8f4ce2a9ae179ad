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

//! Free flight, specular reflection, the flow with exact event times and
//! cell-crossing tracking, and the collision (Poincaré) map.

use crate::billiard::{BilliardTable, PhasePoint, GRAZE_EPS};
use crate::error::{Error, Result};

/// A resolved collision: where and when the ray meets a scatterer.
#[derive(Debug, Clone, Copy)]
pub struct FlightHit {
    /// Flight time from the start of the query.
    pub time: f64,
    /// Scatterer index in the table.
    pub disk: usize,
    /// Cell containing the impact point.
    pub cell: [i64; 2],
    /// Impact point, local to `cell`, snapped onto the circle.
    pub point: [f64; 2],
    /// Unit normal at the impact, pointing away from the scatterer.
    pub normal: [f64; 2],
    /// Incoming velocity.
    pub velocity: [f64; 2],
}

impl FlightHit {
    /// The post-collision phase point: impact position with reflected
    /// velocity.
    pub fn advance_and_reflect(&self) -> Result<PhasePoint> {
        let v = reflect(self.velocity, self.normal)?;
        Ok(PhasePoint {
            cell: self.cell,
            q: self.point,
            v,
        })
    }
}

/// Specular reflection `v' = v - 2⟨v,n⟩n`, renormalized to unit speed.
pub fn reflect(v: [f64; 2], n: [f64; 2]) -> Result<[f64; 2]> {
    let dot = v[0] * n[0] + v[1] * n[1];
    if dot >= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "reflect requires an incoming velocity; ⟨v,n⟩ = {dot}"
        )));
    }
    let mut w = [v[0] - 2.0 * dot * n[0], v[1] - 2.0 * dot * n[1]];
    let norm = (w[0] * w[0] + w[1] * w[1]).sqrt();
    w[0] /= norm;
    w[1] /= norm;
    Ok(w)
}

/// Velocity reversal `(q, v) ↦ (q, -v)`.
pub fn involution(x: &PhasePoint) -> PhasePoint {
    PhasePoint {
        cell: x.cell,
        q: x.q,
        v: [-x.v[0], -x.v[1]],
    }
}

enum Advance {
    Hit(FlightHit),
    Exhausted,
}

/// Walk the ray cell by cell until it either meets a scatterer or uses up
/// the time budget. `state` is updated to the final position in the
/// exhausted case (and left untouched on a hit; the hit carries the impact).
/// The visitor receives `(time since query start, new cell)` at every cell
/// crossing.
fn advance_to_event(
    table: &BilliardTable,
    state: &mut PhasePoint,
    budget: f64,
    visit: &mut impl FnMut(f64, [i64; 2]),
) -> Result<Advance> {
    let v = state.v;
    let mut cell = state.cell;
    let mut p = state.q;
    let mut elapsed = 0.0f64;
    let cap = 2.0 * table.horizon_bound().max(1.0) + 1.0;
    loop {
        let tx = if v[0] > 0.0 {
            (1.0 - p[0]) / v[0]
        } else if v[0] < 0.0 {
            -p[0] / v[0]
        } else {
            f64::INFINITY
        };
        let ty = if v[1] > 0.0 {
            (1.0 - p[1]) / v[1]
        } else if v[1] < 0.0 {
            -p[1] / v[1]
        } else {
            f64::INFINITY
        };
        let t_exit = tx.min(ty).max(0.0);

        // Earliest genuine collision within this cell (small slack keeps
        // boundary-straddling impacts from slipping between cells).
        let mut best: Option<(f64, usize)> = None;
        for (idx, c) in table.candidates().iter().enumerate() {
            let dx = c.center[0] - p[0];
            let dy = c.center[1] - p[1];
            let b = dx * v[0] + dy * v[1];
            if b <= 0.0 {
                continue;
            }
            let c2 = dx * dx + dy * dy - c.radius * c.radius;
            if c2 <= 0.0 {
                continue;
            }
            let disc = b * b - c2;
            if disc <= 0.0 {
                continue;
            }
            let t = c2 / (b + disc.sqrt());
            if t > t_exit + 1e-12 {
                continue;
            }
            if let Some((bt, _)) = best {
                if t >= bt {
                    continue;
                }
            }
            let nx = (p[0] + t * v[0] - c.center[0]) / c.radius;
            let ny = (p[1] + t * v[1] - c.center[1]) / c.radius;
            let inc = v[0] * nx + v[1] * ny;
            if inc >= -GRAZE_EPS {
                continue; // tangential: treat as a non-collision
            }
            best = Some((t, idx));
        }
        if let Some((t, cand_idx)) = best {
            if elapsed + t > budget {
                let dt = budget - elapsed;
                p[0] += v[0] * dt;
                p[1] += v[1] * dt;
                state.cell = cell;
                state.q = p;
                return Ok(Advance::Exhausted);
            }
            let cand = table.candidates()[cand_idx];
            let ix = p[0] + t * v[0];
            let iy = p[1] + t * v[1];
            let mut n = [(ix - cand.center[0]) / cand.radius, (iy - cand.center[1]) / cand.radius];
            let nn = (n[0] * n[0] + n[1] * n[1]).sqrt();
            n[0] /= nn;
            n[1] /= nn;
            let point = [
                cand.center[0] + cand.radius * n[0],
                cand.center[1] + cand.radius * n[1],
            ];
            return Ok(Advance::Hit(FlightHit {
                time: elapsed + t,
                disk: cand.disk,
                cell,
                point,
                normal: n,
                velocity: v,
            }));
        }

        if elapsed + t_exit > budget {
            let dt = budget - elapsed;
            p[0] += v[0] * dt;
            p[1] += v[1] * dt;
            state.cell = cell;
            state.q = p;
            return Ok(Advance::Exhausted);
        }
        elapsed += t_exit;
        if elapsed > cap {
            return Err(Error::LostTrajectory(cap));
        }
        if tx <= ty {
            if v[0] > 0.0 {
                cell[0] += 1;
                p = [0.0, (p[1] + t_exit * v[1]).clamp(0.0, 1.0)];
            } else {
                cell[0] -= 1;
                p = [1.0, (p[1] + t_exit * v[1]).clamp(0.0, 1.0)];
            }
        } else if v[1] > 0.0 {
            cell[1] += 1;
            p = [(p[0] + t_exit * v[0]).clamp(0.0, 1.0), 0.0];
        } else {
            cell[1] -= 1;
            p = [(p[0] + t_exit * v[0]).clamp(0.0, 1.0), 1.0];
        }
        visit(elapsed, cell);
    }
}

/// Earliest scatterer impact along the ray from `x`.
pub fn free_flight(table: &BilliardTable, x: &PhasePoint) -> Result<FlightHit> {
    let mut state = *x;
    let mut noop = |_: f64, _: [i64; 2]| {};
    match advance_to_event(table, &mut state, f64::INFINITY, &mut noop)? {
        Advance::Hit(hit) => Ok(hit),
        Advance::Exhausted => unreachable!("infinite budget cannot be exhausted"),
    }
}

/// Flow for time `t`, invoking `visit(absolute time, new cell)` at each cell
/// crossing. Returns the final phase point and the number of collisions.
pub fn flow_visit(
    table: &BilliardTable,
    x: &PhasePoint,
    t: f64,
    mut visit: impl FnMut(f64, [i64; 2]),
) -> Result<(PhasePoint, u64)> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument("flow time must be non-negative".into()));
    }
    let mut state = *x;
    let mut elapsed = 0.0f64;
    let mut collisions = 0u64;
    loop {
        let base = elapsed;
        let mut v = |dt: f64, cell: [i64; 2]| visit(base + dt, cell);
        match advance_to_event(table, &mut state, t - elapsed, &mut v)? {
            Advance::Exhausted => return Ok((state, collisions)),
            Advance::Hit(hit) => {
                elapsed += hit.time;
                state = hit.advance_and_reflect()?;
                collisions += 1;
            }
        }
    }
}

/// Outcome of an absorbing flow: either the particle is still inside at the
/// time horizon, or it first left the allowed cell set at `time`.
#[derive(Debug, Clone, Copy)]
pub enum AbsorbOutcome {
    Survived(PhasePoint),
    Exited {
        time: f64,
        pre_cell: [i64; 2],
        exit_cell: [i64; 2],
    },
}

/// Flow up to time `t`, stopping at the first crossing into a cell where
/// `alive` is false. `visit` sees every crossing up to and including the
/// absorbing one.
pub fn flow_absorbing(
    table: &BilliardTable,
    x: &PhasePoint,
    t: f64,
    alive: impl Fn([i64; 2]) -> bool,
    mut visit: impl FnMut(f64, [i64; 2]),
) -> Result<AbsorbOutcome> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument("flow time must be non-negative".into()));
    }
    let mut state = *x;
    let mut elapsed = 0.0f64;
    let mut exit: Option<(f64, [i64; 2], [i64; 2])> = None;
    let mut prev = x.cell;
    loop {
        let base = elapsed;
        let mut v = |dt: f64, cell: [i64; 2]| {
            if exit.is_none() {
                visit(base + dt, cell);
                if !alive(cell) {
                    exit = Some((base + dt, prev, cell));
                }
                prev = cell;
            }
        };
        let outcome = advance_to_event(table, &mut state, t - elapsed, &mut v)?;
        if let Some((time, pre_cell, exit_cell)) = exit {
            return Ok(AbsorbOutcome::Exited {
                time,
                pre_cell,
                exit_cell,
            });
        }
        match outcome {
            Advance::Exhausted => return Ok(AbsorbOutcome::Survived(state)),
            Advance::Hit(hit) => {
                elapsed += hit.time;
                state = hit.advance_and_reflect()?;
            }
        }
    }
}

/// Flow without trace collection.
pub fn flow(table: &BilliardTable, x: &PhasePoint, t: f64) -> Result<(PhasePoint, u64)> {
    flow_visit(table, x, t, |_, _| {})
}

/// Flow recording the sequence of cell crossings with their times.
pub fn flow_trace(
    table: &BilliardTable,
    x: &PhasePoint,
    t: f64,
) -> Result<(PhasePoint, Vec<(f64, [i64; 2])>)> {
    let mut trace = Vec::new();
    let (end, _) = flow_visit(table, x, t, |time, cell| trace.push((time, cell)))?;
    Ok((end, trace))
}

/// A point of the collision section: scatterer, impact position angle, and
/// the post-collisional angle `φ ∈ [-π/2, π/2]` measured from the outward
/// normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionPoint {
    pub disk: usize,
    pub cell: [i64; 2],
    /// Angular position of the impact point on its scatterer.
    pub theta: f64,
    pub phi: f64,
}

impl SectionPoint {
    /// The post-collisional phase point this section point represents.
    pub fn to_phase(&self, table: &BilliardTable) -> Result<PhasePoint> {
        let d = table
            .disks()
            .get(self.disk)
            .ok_or_else(|| Error::InvalidArgument("unknown scatterer".into()))?;
        if self.phi.abs() > std::f64::consts::FRAC_PI_2 {
            return Err(Error::InvalidArgument("phi outside [-pi/2, pi/2]".into()));
        }
        let n = [self.theta.cos(), self.theta.sin()];
        let tangent = [-n[1], n[0]];
        let mut q = [d.center[0] + d.radius * n[0], d.center[1] + d.radius * n[1]];
        let mut cell = self.cell;
        for k in 0..2 {
            let shift = q[k].floor();
            if q[k] == 1.0 {
                continue; // the closed upper edge stays in this cell
            }
            q[k] -= shift;
            cell[k] += shift as i64;
        }
        let (c, s) = (self.phi.cos(), self.phi.sin());
        Ok(PhasePoint {
            cell,
            q,
            v: [c * n[0] + s * tangent[0], c * n[1] + s * tangent[1]],
        })
    }

}

/// The collision map: advance a section point to the next collision.
pub fn billiard_map(table: &BilliardTable, s: &SectionPoint) -> Result<SectionPoint> {
    let x = s.to_phase(table)?;
    let hit = free_flight(table, &x)?;
    let v_out = reflect(hit.velocity, hit.normal)?;
    // Attribute the impact to the cell whose base copy of the scatterer was
    // hit, so theta is measured on the base disk.
    let d = table.disks()[hit.disk];
    let center_local = [
        hit.point[0] - d.radius * hit.normal[0],
        hit.point[1] - d.radius * hit.normal[1],
    ];
    let off = [
        (center_local[0] - d.center[0]).round() as i64,
        (center_local[1] - d.center[1]).round() as i64,
    ];
    let n = hit.normal;
    let tangent = [-n[1], n[0]];
    Ok(SectionPoint {
        disk: hit.disk,
        cell: [hit.cell[0] + off[0], hit.cell[1] + off[1]],
        theta: n[1].atan2(n[0]),
        phi: (v_out[0] * tangent[0] + v_out[1] * tangent[1]).atan2(v_out[0] * n[0] + v_out[1] * n[1]),
    })
}
