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

//! Invariant and injection measures: the cosine collision measure, boundary
//! edge measures with their Kac return times, diffusion-matrix estimation,
//! and phase-region counting.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::billiard::dynamics::{flow, flow_visit};
use crate::billiard::{BilliardTable, PhasePoint};
use crate::error::{Error, Result};
use crate::rng::{self, salt};

/// Orientation of the cell-boundary edges: vertical edges are segments of
/// the lines `x ∈ Z`, horizontal edges of `y ∈ Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeAxis {
    Vertical,
    Horizontal,
}

/// Geometry of one edge class: the free sub-intervals of the unit edge, the
/// effective length `|E ∩ D|`, and the analytic mean return time.
#[derive(Debug, Clone)]
pub struct EdgeMeasureSpec {
    pub axis: EdgeAxis,
    /// Free sub-intervals of [0, 1] along the edge.
    pub intervals: Vec<(f64, f64)>,
    pub effective_len: f64,
    /// Kac value `π |D₀| / |E ∩ D|`.
    pub zeta_kac: f64,
}

/// Compute the free part of an edge class and its Kac mean return time.
pub fn edge_spec(table: &BilliardTable, axis: EdgeAxis) -> Result<EdgeMeasureSpec> {
    // Cut out the parts of the line covered by scatterer images.
    let mut cuts: Vec<(f64, f64)> = Vec::new();
    for d in table.disks() {
        for o_perp in -1i64..=1 {
            for o_along in -1i64..=1 {
                let (c_perp, c_along) = match axis {
                    EdgeAxis::Vertical => (d.center[0] + o_perp as f64, d.center[1] + o_along as f64),
                    EdgeAxis::Horizontal => (d.center[1] + o_perp as f64, d.center[0] + o_along as f64),
                };
                if c_perp.abs() >= d.radius {
                    continue;
                }
                let w = (d.radius * d.radius - c_perp * c_perp).sqrt();
                cuts.push((c_along - w, c_along + w));
            }
        }
    }
    cuts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for c in cuts {
        match merged.last_mut() {
            Some(last) if c.0 <= last.1 => last.1 = last.1.max(c.1),
            _ => merged.push(c),
        }
    }
    let mut intervals = Vec::new();
    let mut pos = 0.0f64;
    for (a, b) in &merged {
        if *b <= 0.0 || *a >= 1.0 {
            continue;
        }
        let a = a.max(0.0);
        if a > pos {
            intervals.push((pos, a));
        }
        pos = pos.max(b.min(1.0));
    }
    if pos < 1.0 {
        intervals.push((pos, 1.0));
    }
    let effective_len: f64 = intervals.iter().map(|(a, b)| b - a).sum();
    if effective_len <= 0.0 {
        return Err(Error::InvalidArgument("edge is fully blocked by scatterers".into()));
    }
    Ok(EdgeMeasureSpec {
        axis,
        intervals,
        effective_len,
        zeta_kac: std::f64::consts::PI * table.free_area() / effective_len,
    })
}

/// Direction of motion through an edge into the target cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeDir {
    PlusX,
    MinusX,
    PlusY,
    MinusY,
}

impl EdgeDir {
    pub fn axis(self) -> EdgeAxis {
        match self {
            EdgeDir::PlusX | EdgeDir::MinusX => EdgeAxis::Vertical,
            EdgeDir::PlusY | EdgeDir::MinusY => EdgeAxis::Horizontal,
        }
    }

    pub fn normal(self) -> [f64; 2] {
        match self {
            EdgeDir::PlusX => [1.0, 0.0],
            EdgeDir::MinusX => [-1.0, 0.0],
            EdgeDir::PlusY => [0.0, 1.0],
            EdgeDir::MinusY => [0.0, -1.0],
        }
    }
}

/// Draw a phase point from the normalized edge measure: position uniform on
/// the free part of the edge, velocity cosine-distributed about the inward
/// normal, entering `cell` in direction `dir`.
pub fn sample_edge_measure(
    edge: &EdgeMeasureSpec,
    cell: [i64; 2],
    dir: EdgeDir,
    rng: &mut impl Rng,
) -> PhasePoint {
    debug_assert_eq!(edge.axis, dir.axis());
    let mut u = rng.gen::<f64>() * edge.effective_len;
    let mut along = edge.intervals[0].0;
    for (a, b) in &edge.intervals {
        let len = b - a;
        if u <= len {
            along = a + u;
            break;
        }
        u -= len;
    }
    let phi = (2.0 * rng.gen::<f64>() - 1.0).asin();
    let n = dir.normal();
    let t = [-n[1], n[0]];
    let v = [
        phi.cos() * n[0] + phi.sin() * t[0],
        phi.cos() * n[1] + phi.sin() * t[1],
    ];
    let q = match dir {
        EdgeDir::PlusX => [0.0, along],
        EdgeDir::MinusX => [1.0, along],
        EdgeDir::PlusY => [along, 0.0],
        EdgeDir::MinusY => [along, 1.0],
    };
    PhasePoint { cell, q, v }
}

/// Draw a post-collisional phase point from the invariant collision measure
/// (scatterer picked proportionally to perimeter, cosine law for the angle).
pub fn sample_nu0(table: &BilliardTable, rng: &mut impl Rng) -> PhasePoint {
    let total: f64 = table.disks().iter().map(|d| d.radius).sum();
    let mut pick = rng.gen::<f64>() * total;
    let mut disk = table.disks().len() - 1;
    for (i, d) in table.disks().iter().enumerate() {
        if pick < d.radius {
            disk = i;
            break;
        }
        pick -= d.radius;
    }
    let d = table.disks()[disk];
    let theta = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
    let n = [theta.cos(), theta.sin()];
    let tangent = [-n[1], n[0]];
    let phi = (2.0 * rng.gen::<f64>() - 1.0).asin();
    let mut q = [d.center[0] + d.radius * n[0], d.center[1] + d.radius * n[1]];
    let mut cell = [0i64, 0i64];
    for k in 0..2 {
        let shift = q[k].floor();
        q[k] -= shift;
        cell[k] += shift as i64;
    }
    PhasePoint {
        cell,
        q,
        v: [
            phi.cos() * n[0] + phi.sin() * tangent[0],
            phi.cos() * n[1] + phi.sin() * tangent[1],
        ],
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MeanReturnEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub kac: f64,
    pub samples: u64,
}

/// Monte Carlo mean first-return time to the edge section in the compact
/// billiard, next to the analytic Kac value.
pub fn mean_return(table: &BilliardTable, axis: EdgeAxis, n: u64, seed: u64) -> Result<MeanReturnEstimate> {
    let edge = edge_spec(table, axis)?;
    let dir = match axis {
        EdgeAxis::Vertical => EdgeDir::PlusX,
        EdgeAxis::Horizontal => EdgeDir::PlusY,
    };
    let chunk = 1024u64;
    let chunks: Vec<u64> = (0..n.div_ceil(chunk)).collect();
    let sums: Vec<(f64, f64, u64)> = chunks
        .par_iter()
        .map(|&c| {
            let lo = c * chunk;
            let hi = (lo + chunk).min(n);
            let mut s = 0.0;
            let mut s2 = 0.0;
            let mut cnt = 0u64;
            for k in lo..hi {
                let mut rng = rng::stream(seed, salt::BILLIARD ^ 0x5245_5455_524e, k);
                let x = sample_edge_measure(&edge, [0, 0], dir, &mut rng);
                if let Ok(z) = first_directed_crossing(table, &x, dir) {
                    s += z;
                    s2 += z * z;
                    cnt += 1;
                }
            }
            (s, s2, cnt)
        })
        .collect();
    let (sum, sumsq, cnt) = sums
        .iter()
        .fold((0.0, 0.0, 0u64), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    if cnt == 0 {
        return Err(Error::InsufficientStatistics("no returns sampled".into()));
    }
    let mean = sum / cnt as f64;
    let var = (sumsq / cnt as f64 - mean * mean).max(0.0);
    Ok(MeanReturnEstimate {
        mean,
        std_error: (var / cnt as f64).sqrt(),
        kac: edge.zeta_kac,
        samples: cnt,
    })
}

/// Time of the first crossing of a lattice line in the given direction
/// (a return to the edge section on the torus).
fn first_directed_crossing(table: &BilliardTable, x: &PhasePoint, dir: EdgeDir) -> Result<f64> {
    let axis = match dir {
        EdgeDir::PlusX | EdgeDir::MinusX => 0usize,
        _ => 1,
    };
    let sign = match dir {
        EdgeDir::PlusX | EdgeDir::PlusY => 1i64,
        _ => -1,
    };
    let mut state = *x;
    let mut elapsed = 0.0f64;
    // Returns on the default tables happen within a few hundred time units;
    // the cap only guards against pathological tables.
    let cap = 1e7;
    loop {
        let mut found: Option<f64> = None;
        let mut prev = state.cell;
        let step = 4.0 * table.horizon_bound().max(1.0);
        let (end, _) = flow_visit(table, &state, step, |t, cell| {
            if found.is_none() && cell[axis] == prev[axis] + sign {
                found = Some(elapsed + t);
            }
            prev = cell;
        })?;
        if let Some(t) = found {
            return Ok(t);
        }
        state = end;
        elapsed += step;
        if elapsed > cap {
            return Err(Error::InsufficientStatistics("no section return within cap".into()));
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum InitialMeasure {
    /// Invariant collision measure.
    Nu0,
    /// Normalized edge measure entering the base cell.
    Edge(EdgeDir),
    /// A fixed phase point.
    Point(PhasePoint),
}

impl InitialMeasure {
    fn sample(&self, table: &BilliardTable, rng: &mut ChaCha8Rng) -> Result<PhasePoint> {
        Ok(match self {
            InitialMeasure::Nu0 => sample_nu0(table, rng),
            InitialMeasure::Edge(dir) => {
                let edge = edge_spec(table, dir.axis())?;
                sample_edge_measure(&edge, [0, 0], *dir, rng)
            }
            InitialMeasure::Point(x) => *x,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SigmaEstimate {
    pub sigma: [[f64; 2]; 2],
    pub std_error: [[f64; 2]; 2],
    pub horizon: f64,
    pub samples: u64,
}

/// Estimate the diffusion matrix `Σ = E[Z_T Z_Tᵀ] / T` over `n` trajectories
/// with batch-mean standard errors.
pub fn estimate_sigma(
    table: &BilliardTable,
    init: InitialMeasure,
    t: f64,
    n: u64,
    seed: u64,
) -> Result<SigmaEstimate> {
    if !(t > 0.0) || n < 32 {
        return Err(Error::InvalidArgument("need t > 0 and n >= 32".into()));
    }
    let samples: Vec<[f64; 3]> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng::stream(seed, salt::BILLIARD ^ 0x5349_474d_41, k);
            let x0 = init.sample(table, &mut rng)?;
            let (end, _) = flow(table, &x0, t)?;
            let z = [
                (end.cell[0] - x0.cell[0]) as f64,
                (end.cell[1] - x0.cell[1]) as f64,
            ];
            Ok([z[0] * z[0] / t, z[0] * z[1] / t, z[1] * z[1] / t])
        })
        .collect::<Result<Vec<_>>>()?;
    let batches = 16usize;
    let per = samples.len() / batches;
    let mut batch_means = vec![[0.0f64; 3]; batches];
    for (b, bm) in batch_means.iter_mut().enumerate() {
        for s in &samples[b * per..(b + 1) * per] {
            for k in 0..3 {
                bm[k] += s[k] / per as f64;
            }
        }
    }
    let mut mean = [0.0f64; 3];
    for bm in &batch_means {
        for k in 0..3 {
            mean[k] += bm[k] / batches as f64;
        }
    }
    let mut se = [0.0f64; 3];
    for bm in &batch_means {
        for k in 0..3 {
            se[k] += (bm[k] - mean[k]).powi(2);
        }
    }
    for k in 0..3 {
        se[k] = (se[k] / (batches as f64 - 1.0) / batches as f64).sqrt();
    }
    Ok(SigmaEstimate {
        sigma: [[mean[0], mean[1]], [mean[1], mean[2]]],
        std_error: [[se[0], se[1]], [se[1], se[2]]],
        horizon: t,
        samples: (per * batches) as u64,
    })
}

/// Count how many phase points satisfy a predicate on the projected phase
/// `(q mod cell, v)`.
pub fn phase_region_count(phases: &[PhasePoint], pred: &dyn Fn([f64; 2], [f64; 2]) -> bool) -> usize {
    phases.iter().filter(|x| pred(x.q, x.v)).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn table() -> BilliardTable {
        crate::billiard::build_table_with(
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
                trajectories: 200,
                flights_per_trajectory: 200,
                seed: 0,
            },
        )
        .unwrap()
    }

    #[test]
    fn edge_free_part_of_default_table() {
        let t = table();
        let e = edge_spec(&t, EdgeAxis::Vertical).unwrap();
        assert_eq!(e.intervals.len(), 1);
        assert!((e.intervals[0].0 - 0.49).abs() < 1e-12);
        assert!((e.intervals[0].1 - 0.51).abs() < 1e-12);
        assert!((e.effective_len - 0.02).abs() < 1e-12);
        let kac = std::f64::consts::PI * t.free_area() / 0.02;
        assert!((e.zeta_kac - kac).abs() < 1e-9);
    }

    #[test]
    fn edge_samples_obey_constraints() {
        let t = table();
        let e = edge_spec(&t, EdgeAxis::Vertical).unwrap();
        let mut rng = stream(2, 1, 0);
        for _ in 0..2000 {
            let x = sample_edge_measure(&e, [3, 4], EdgeDir::PlusX, &mut rng);
            assert!(x.v[0] > 0.0, "entering velocity must point into the cell");
            assert!(!t.inside_scatterer(x.q), "edge sample inside a scatterer");
            assert_eq!(x.cell, [3, 4]);
            assert!((0.49..=0.51).contains(&x.q[1]));
        }
    }

    #[test]
    fn edge_angles_follow_cosine_law() {
        let t = table();
        let e = edge_spec(&t, EdgeAxis::Vertical).unwrap();
        let mut rng = stream(3, 1, 0);
        let n = 100_000usize;
        let bins = 10usize;
        let mut counts = vec![0f64; bins];
        for _ in 0..n {
            let x = sample_edge_measure(&e, [0, 0], EdgeDir::PlusX, &mut rng);
            // v_x = cos(phi), and sin(phi) is uniform on [-1, 1] under the
            // cosine law.
            let s = x.v[1];
            let b = (((s + 1.0) / 2.0) * bins as f64) as usize;
            counts[b.min(bins - 1)] += 1.0;
        }
        let expect = n as f64 / bins as f64;
        let mut chi2 = 0.0;
        for c in &counts {
            chi2 += (c - expect).powi(2) / expect;
        }
        // 9 dof: the 99.9% quantile is about 27.9.
        assert!(chi2 < 27.9, "chi2 {chi2}");
    }

    #[test]
    fn mean_return_matches_kac() {
        let t = table();
        let est = mean_return(&t, EdgeAxis::Vertical, 60_000, 7).unwrap();
        let rel = (est.mean - est.kac).abs() / est.kac;
        assert!(
            rel < 0.02 || (est.mean - est.kac).abs() < 4.0 * est.std_error,
            "mean {} vs kac {} (se {})",
            est.mean,
            est.kac,
            est.std_error
        );
        assert!(est.mean > 0.0);
    }

    #[test]
    fn kac_value_scales_inversely_with_edge_length() {
        // Doubling |E ∩ D| halves the Kac value (same free area).
        let t = table();
        let e = edge_spec(&t, EdgeAxis::Vertical).unwrap();
        let kac_half = std::f64::consts::PI * t.free_area() / (2.0 * e.effective_len);
        assert!((kac_half - e.zeta_kac / 2.0).abs() < 1e-12);
    }

    #[test]
    fn sigma_estimate_is_isotropic_on_default_table() {
        let t = table();
        let est = estimate_sigma(&t, InitialMeasure::Nu0, 400.0, 640, 3).unwrap();
        assert!(est.sigma[0][0] > 0.0);
        let od = est.sigma[0][1].abs();
        assert!(
            od < 3.0 * est.std_error[0][1].max(1e-6),
            "off-diagonal {od} vs se {}",
            est.std_error[0][1]
        );
        let aniso = (est.sigma[0][0] - est.sigma[1][1]).abs();
        let se = (est.std_error[0][0].powi(2) + est.std_error[1][1].powi(2)).sqrt();
        assert!(aniso < 3.0 * se, "anisotropy {aniso} vs se {se}");
    }

    #[test]
    fn phase_region_counts_partition() {
        let t = table();
        let mut rng = stream(8, 2, 0);
        let pts: Vec<PhasePoint> = (0..5000).map(|_| t.sample_free_point(&mut rng)).collect();
        let a = phase_region_count(&pts, &|_, v| v[0].abs() > std::f64::consts::FRAC_1_SQRT_2);
        let b = phase_region_count(&pts, &|_, v| v[0].abs() <= std::f64::consts::FRAC_1_SQRT_2);
        assert_eq!(a + b, pts.len());
        let all = phase_region_count(&pts, &|_, _| true);
        assert_eq!(all, pts.len());
        // |v_x| > 1/sqrt(2) has probability 1/2 under the uniform angle.
        let frac = a as f64 / pts.len() as f64;
        assert!((frac - 0.5).abs() < 3.0 * (0.25f64 / 5000.0).sqrt());
    }
}
