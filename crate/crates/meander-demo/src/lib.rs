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

//! Interactive browser demo: heat/Laplace density fields for a West boundary
//! profile, Lorentz-gas trajectories, and the absorbed/meander kernel curves.
//!
//! All computation lives in plain functions that compile and test on any
//! target; the `wasm_bindgen` exports are thin wrappers over them. Build for
//! the web with `wasm-pack build --target web crates/meander-demo` and serve
//! `crates/meander-demo/www`.

use meander_core::billiard::{build_table_with, Disk, FlightHit, HorizonValidation, PhasePoint};
use meander_core::geometry::Side;
use meander_core::kernels::{phi, psi, u_series, v_series, BoundaryProfile, SeriesTruncation};
use wasm_bindgen::prelude::wasm_bindgen;

/// Boundary profiles the demo exposes.
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Flat,
    Sine,
    Bump,
}

impl ProfileKind {
    fn from_id(id: u32) -> ProfileKind {
        match id {
            1 => ProfileKind::Sine,
            2 => ProfileKind::Bump,
            _ => ProfileKind::Flat,
        }
    }

    fn profile(self) -> BoundaryProfile {
        let f: fn(f64) -> f64 = match self {
            ProfileKind::Flat => |_| 1.0,
            ProfileKind::Sine => |y| (std::f64::consts::PI * y).sin(),
            ProfileKind::Bump => |y| {
                let d = (y - 0.5) / 0.2;
                (-0.5 * d * d).exp()
            },
        };
        BoundaryProfile::from_fn(Side::West, 512, 1.0, 0.02, f).expect("demo profile")
    }
}

/// Sample the limit density on an `n × n` interior grid: the stationary
/// profile for `t <= 0`, the heat profile at time `t` otherwise. Row-major,
/// y varying slowest.
pub fn density_field(profile_id: u32, t: f64, n: usize) -> Vec<f64> {
    let profile = ProfileKind::from_id(profile_id).profile();
    let tr = SeriesTruncation::default();
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let z = [
                (i as f64 + 0.5) / n as f64,
                (j as f64 + 0.5) / n as f64,
            ];
            let v = if t > 0.0 {
                v_series(t, z, &profile, 1.0, tr).unwrap_or(0.0)
            } else {
                u_series(z, &profile, 1.0, tr).unwrap_or(0.0)
            };
            out.push(v);
        }
    }
    out
}

/// Map field values to RGBA pixels with a compact heat colormap; the scale
/// saturates at `max` (pass 0 to autoscale).
pub fn field_to_rgba(field: &[f64], max: f64) -> Vec<u8> {
    let top = if max > 0.0 {
        max
    } else {
        field.iter().cloned().fold(1e-12, f64::max)
    };
    let mut px = Vec::with_capacity(field.len() * 4);
    for v in field {
        let u = (v / top).clamp(0.0, 1.0);
        // Dark blue -> cyan -> yellow -> white.
        let r = (u * 3.0 - 1.0).clamp(0.0, 1.0);
        let g = (u * 2.0).clamp(0.0, 1.0) * 0.9;
        let b = (0.4 + 0.6 * (1.0 - u)).min(1.0) * (1.0 - 0.5 * r);
        px.push((r * 255.0) as u8);
        px.push((g * 255.0) as u8);
        px.push((b * 255.0) as u8);
        px.push(255);
    }
    px
}

/// Trace a Lorentz-gas trajectory on the two-disk table with corner radius
/// `r1` and center radius `r2`: returns the flattened polyline
/// `[x0, y0, x1, y1, ...]` of collision points in unfolded coordinates,
/// starting from `(x, y)` with direction `angle`. An empty vector signals an
/// invalid table.
pub fn billiard_trajectory(r1: f64, r2: f64, x: f64, y: f64, angle: f64, flights: usize) -> Vec<f64> {
    let table = match build_table_with(
        vec![
            Disk {
                center: [0.0, 0.0],
                radius: r1,
            },
            Disk {
                center: [0.5, 0.5],
                radius: r2,
            },
        ],
        HorizonValidation {
            trajectories: 64,
            flights_per_trajectory: 128,
            seed: 0,
        },
    ) {
        Ok(t) => t,
        Err(_) => return Vec::new(),
    };
    let mut state = PhasePoint {
        cell: [0, 0],
        q: [x.clamp(0.0, 1.0), y.clamp(0.0, 1.0)],
        v: [angle.cos(), angle.sin()],
    };
    if table.inside_scatterer(state.q) {
        return Vec::new();
    }
    let mut pts = Vec::with_capacity(2 * flights + 2);
    let p0 = state.position();
    pts.push(p0[0]);
    pts.push(p0[1]);
    for _ in 0..flights {
        let hit: FlightHit = match meander_core::billiard::free_flight(&table, &state) {
            Ok(h) => h,
            Err(_) => break,
        };
        let px = hit.cell[0] as f64 + hit.point[0];
        let py = hit.cell[1] as f64 + hit.point[1];
        pts.push(px);
        pts.push(py);
        state = match hit.advance_and_reflect() {
            Ok(s) => s,
            Err(_) => break,
        };
    }
    pts
}

/// Sample a kernel curve on `n` points: `kind 0` gives `α ↦ ψ(α, β)` with
/// `β = a`, `kind 1` gives `γ ↦ φ(η, γ, ξ)` with `η = a`, `ξ = b`.
pub fn kernel_curve(kind: u32, a: f64, b: f64, n: usize) -> Vec<f64> {
    let tr = SeriesTruncation::default();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let u = (i as f64 + 0.5) / n as f64;
        let v = match kind {
            0 => psi(u * a, a, tr).unwrap_or(0.0),
            _ => phi(a, u * b, b, tr).unwrap_or(0.0),
        };
        out.push(v);
    }
    out
}

// ---- wasm exports ----------------------------------------------------

#[wasm_bindgen]
pub fn wasm_density_field(profile_id: u32, t: f64, n: usize) -> Vec<f64> {
    density_field(profile_id, t, n)
}

#[wasm_bindgen]
pub fn wasm_field_rgba(field: Vec<f64>, max: f64) -> Vec<u8> {
    field_to_rgba(&field, max)
}

#[wasm_bindgen]
pub fn wasm_billiard_trajectory(r1: f64, r2: f64, x: f64, y: f64, angle: f64, flights: usize) -> Vec<f64> {
    billiard_trajectory(r1, r2, x, y, angle, flights)
}

#[wasm_bindgen]
pub fn wasm_kernel_curve(kind: u32, a: f64, b: f64, n: usize) -> Vec<f64> {
    kernel_curve(kind, a, b, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn density_field_matches_direct_series() {
        let f = density_field(1, 0.0, 8);
        assert_eq!(f.len(), 64);
        let profile = ProfileKind::Sine.profile();
        let direct = u_series(
            [(3.0 + 0.5) / 8.0, (4.0 + 0.5) / 8.0],
            &profile,
            1.0,
            SeriesTruncation::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(f[4 * 8 + 3], direct, epsilon = 1e-12);
        assert!(f.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn transient_field_is_below_stationary() {
        let hot = density_field(0, 0.2, 6);
        let stat = density_field(0, 0.0, 6);
        for (a, b) in hot.iter().zip(&stat) {
            assert!(a <= b);
        }
    }

    #[test]
    fn rgba_has_full_alpha_and_right_length() {
        let px = field_to_rgba(&[0.0, 0.5, 1.0], 1.0);
        assert_eq!(px.len(), 12);
        assert!(px.chunks(4).all(|c| c[3] == 255));
        // Higher value must not be darker in the red channel.
        assert!(px[8] >= px[4] && px[4] >= px[0]);
    }

    #[test]
    fn trajectory_points_avoid_scatterers() {
        let pts = billiard_trajectory(0.49, 0.21, 0.28, 0.5, 0.9, 200);
        assert!(pts.len() >= 100, "trajectory too short: {}", pts.len() / 2);
        // Collision points must sit on disk boundaries (distance >= r - eps
        // from every center).
        for p in pts.chunks(2).skip(1) {
            let (fx, fy) = (p[0].rem_euclid(1.0), p[1].rem_euclid(1.0));
            for (c, r) in [([0.0, 0.0], 0.49), ([0.5, 0.5], 0.21)] {
                for ox in -1..=1 {
                    for oy in -1..=1 {
                        let dx = fx - c[0] - ox as f64;
                        let dy = fy - c[1] - oy as f64;
                        let d = (dx * dx + dy * dy).sqrt();
                        assert!(d >= r - 1e-9, "point inside scatterer: d={d}, r={r}");
                    }
                }
            }
        }
    }

    #[test]
    fn invalid_table_yields_empty_trace() {
        // Overlapping disks.
        assert!(billiard_trajectory(0.49, 0.45, 0.75, 0.05, 0.3, 50).is_empty());
        // Start inside a scatterer.
        assert!(billiard_trajectory(0.49, 0.21, 0.05, 0.05, 0.3, 50).is_empty());
    }

    #[test]
    fn kernel_curves_are_nonnegative_and_shaped() {
        let psi_curve = kernel_curve(0, 1.5, 0.0, 64);
        assert!(psi_curve.iter().all(|v| *v >= -1e-12));
        // The meander endpoint density vanishes at both ends of (0, β).
        assert!(psi_curve[0] < psi_curve[20]);
        assert!(psi_curve[63] < psi_curve[32]);
        let phi_curve = kernel_curve(1, 0.5, 1.5, 64);
        assert!(phi_curve.iter().all(|v| *v >= -1e-12));
    }
}
