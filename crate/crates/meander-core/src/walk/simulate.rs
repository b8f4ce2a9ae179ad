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

//! Path-level simulation of the continuous-time walk and the half-space
//! survival probability (exact via uniformization of the coordinate
//! projection, or Monte Carlo).

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::DomainSites;
use crate::kernels::special::poisson_pmf_ladder;
use crate::walk::WalkModel;

/// Outcome of one simulated path.
#[derive(Debug, Clone)]
pub struct EventRecord {
    /// First exit time from the domain, if the walk exited before `t_end`.
    pub exit_time: Option<f64>,
    /// Site occupied just before the exit jump.
    pub pre_exit: Option<[i64; 2]>,
    /// First site outside the domain.
    pub exit_site: Option<[i64; 2]>,
    /// Site occupied at each requested probe time (only probes before the
    /// exit are recorded).
    pub probes: Vec<Option<[i64; 2]>>,
    pub jumps: u64,
}

/// Simulate the walk from `start` until `t_end` or absorption. Holding times
/// are exponential with unit total rate; jump targets follow the law of the
/// model. Probe times must be sorted.
pub fn simulate_path(
    start: [i64; 2],
    model: &WalkModel,
    sites: &DomainSites,
    t_end: f64,
    probe_times: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<EventRecord> {
    if sites.index_of(start).is_none() {
        return Err(Error::OutOfDomain(model.lattice().position(start)));
    }
    let jumps = model.lattice().jumps_int();
    let weights = model.weights();
    let mut cum = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cum.push(acc);
    }
    let mut t = 0.0f64;
    let mut pos = start;
    let mut probes = vec![None; probe_times.len()];
    let mut probe_idx = 0usize;
    let mut n_jumps = 0u64;
    let mut record = EventRecord {
        exit_time: None,
        pre_exit: None,
        exit_site: None,
        probes: Vec::new(),
        jumps: 0,
    };
    loop {
        let dt = -rng.gen::<f64>().max(f64::MIN_POSITIVE).ln();
        let t_next = t + dt;
        while probe_idx < probe_times.len() && probe_times[probe_idx] <= t_next.min(t_end) {
            probes[probe_idx] = Some(pos);
            probe_idx += 1;
        }
        if t_next > t_end {
            break;
        }
        t = t_next;
        let u = rng.gen::<f64>();
        let j = cum.partition_point(|c| *c < u).min(jumps.len() - 1);
        let next = [pos[0] + jumps[j][0], pos[1] + jumps[j][1]];
        n_jumps += 1;
        if sites.index_of(next).is_none() {
            record.exit_time = Some(t);
            record.pre_exit = Some(pos);
            record.exit_site = Some(next);
            break;
        }
        pos = next;
    }
    record.probes = probes;
    record.jumps = n_jumps;
    Ok(record)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurvivalMode {
    Exact,
    MonteCarlo { samples: u64 },
}

/// `P(τ_0^X > T)` for the walk started at first coordinate 0: the chance the
/// first coordinate never goes negative up to time `T`.
///
/// Exact mode uniformizes the coordinate projection of the walk on
/// `[0, 10 √T]` with a reflecting far wall (the wall bias is a Gaussian tail,
/// far below the 1e-4 truncation budget). Monte Carlo mode simulates.
pub fn survival_profile(model: &WalkModel, t: f64, mode: SurvivalMode, seed: u64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument("T must be positive".into()));
    }
    let proj = CoordinateProjection::horizontal(model)?;
    match mode {
        SurvivalMode::Exact => {
            let far = ((10.0 * t.sqrt()) / proj.step).ceil() as i64;
            let states = (far + 1) as usize;
            if states > 40_000_000 {
                return Err(Error::MemoryEstimate { states });
            }
            // Wall bias bound: reaching 10 sqrt(T) within time T.
            let wall_err = (-50.0f64).exp();
            if wall_err > 1e-4 {
                return Err(Error::SurvivalTruncation {
                    err: wall_err,
                    tol: 1e-4,
                });
            }
            let mut cur = vec![0.0f64; states];
            cur[0] = 1.0;
            let mut next = vec![0.0f64; states];
            let m_cap = (t + 12.0 * t.sqrt() + 60.0) as usize;
            let pmf = poisson_pmf_ladder(t, m_cap);
            let mut survival = 0.0;
            for (m, w) in pmf.iter().enumerate() {
                if *w > 0.0 {
                    survival += w * cur.iter().sum::<f64>();
                }
                if m == m_cap {
                    break;
                }
                next.iter_mut().for_each(|v| *v = 0.0);
                for i in 0..states {
                    let x = cur[i];
                    if x == 0.0 {
                        continue;
                    }
                    for (step, p) in &proj.steps {
                        let tgt = i as i64 + step;
                        if tgt < 0 {
                            continue; // absorbed
                        }
                        let tgt = if tgt >= states as i64 { i } else { tgt as usize };
                        next[tgt] += p * x;
                    }
                }
                std::mem::swap(&mut cur, &mut next);
            }
            Ok(survival.min(1.0))
        }
        SurvivalMode::MonteCarlo { samples } => {
            let mut alive = 0u64;
            for k in 0..samples {
                let mut rng = crate::rng::stream(seed, crate::rng::salt::WALK, k);
                let mut x = 0i64;
                let mut time = 0.0f64;
                let ok = loop {
                    time += -rng.gen::<f64>().max(f64::MIN_POSITIVE).ln();
                    if time > t {
                        break true;
                    }
                    let u = rng.gen::<f64>();
                    let mut pick = u;
                    let mut step = 0i64;
                    for (s, p) in &proj.steps {
                        if pick < *p {
                            step = *s;
                            break;
                        }
                        pick -= p;
                    }
                    x += step;
                    if x < 0 {
                        break false;
                    }
                };
                if ok {
                    alive += 1;
                }
            }
            Ok(alive as f64 / samples as f64)
        }
    }
}

/// The first-coordinate projection of the jump law: integer steps on a 1d
/// grid of spacing `step` (zero steps merged into a lazy self-loop).
pub(crate) struct CoordinateProjection {
    pub step: f64,
    /// (signed integer step, probability); includes the zero step.
    pub steps: Vec<(i64, f64)>,
}

impl CoordinateProjection {
    pub fn horizontal(model: &WalkModel) -> Result<Self> {
        Self::build(model, 0)
    }

    fn build(model: &WalkModel, axis: usize) -> Result<Self> {
        let lat = model.lattice();
        let mut xs: Vec<f64> = Vec::new();
        for j in 0..lat.num_jumps() {
            let v = lat.jump_vector(j)[axis];
            if v.abs() > 1e-12 {
                xs.push(v.abs());
            }
        }
        if xs.is_empty() {
            return Err(Error::InvalidLattice("degenerate coordinate projection".into()));
        }
        let mut g = xs[0];
        for v in &xs[1..] {
            g = float_gcd(g, *v);
        }
        let mut steps: Vec<(i64, f64)> = Vec::new();
        for j in 0..lat.num_jumps() {
            let v = lat.jump_vector(j)[axis];
            let k = (v / g).round() as i64;
            if ((v / g) - k as f64).abs() > 1e-6 {
                return Err(Error::InvalidLattice(
                    "coordinate projection is not commensurable".into(),
                ));
            }
            match steps.iter_mut().find(|(s, _)| *s == k) {
                Some((_, p)) => *p += model.weights()[j],
                None => steps.push((k, model.weights()[j])),
            }
        }
        Ok(Self { step: g, steps })
    }
}

fn float_gcd(a: f64, b: f64) -> f64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b > 1e-9 {
        let r = a - (a / b).floor() * b;
        a = b;
        b = if r < 1e-9 || (b - r).abs() < 1e-9 { 0.0 } else { r };
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{boundary_sets, DomainSpec};
    use crate::rng::{salt, stream};

    fn ssrw_sites(l: f64) -> DomainSites {
        let model = WalkModel::ssrw();
        boundary_sets(DomainSpec::square(l).unwrap(), model.lattice()).unwrap()
    }

    #[test]
    fn zero_time_path_stays_put() {
        let model = WalkModel::ssrw();
        let sites = ssrw_sites(12.0);
        let mut rng = stream(1, salt::WALK, 0);
        let rec = simulate_path([2, 2], &model, &sites, 0.0, &[0.0], &mut rng).unwrap();
        assert_eq!(rec.jumps, 0);
        assert_eq!(rec.probes[0], Some([2, 2]));
        assert!(rec.exit_time.is_none());
    }

    #[test]
    fn forced_exit_time_is_exponential() {
        // A 1x1 domain: the single site escapes on every jump, so the exit
        // time is Exp(1).
        let lat = crate::geometry::LatticeSpec::from_integer_jumps(
            [10.0, 0.0],
            [0.0, 10.0],
            vec![[1, 0], [-1, 0], [0, 1], [0, -1]],
            Some(&[0.25; 4]),
        )
        .unwrap();
        let model = WalkModel::new(lat).unwrap();
        let sites = boundary_sets(DomainSpec::new(1.0, 0.5).unwrap(), model.lattice()).unwrap();
        assert_eq!(sites.len(), 1);
        let n = 10_000;
        let mut total = 0.0;
        for k in 0..n {
            let mut rng = stream(5, salt::WALK, k);
            let rec = simulate_path([0, 0], &model, &sites, 1e9, &[], &mut rng).unwrap();
            total += rec.exit_time.unwrap();
        }
        let mean = total / n as f64;
        // Exp(1): se = 1/sqrt(n).
        assert!((mean - 1.0).abs() < 3.0 / (n as f64).sqrt(), "mean exit {mean}");
    }

    #[test]
    fn mean_square_displacement_matches_clt() {
        let model = WalkModel::ssrw();
        // A box large enough that absorption by time 100 is negligible.
        let sites = ssrw_sites(100.0);
        let start = model.lattice().round_to_lattice([50.0, 50.0]);
        let t = 100.0;
        let n = 4000;
        let mut sum = 0.0;
        for k in 0..n {
            let mut rng = stream(9, salt::WALK, k);
            let rec = simulate_path(start, &model, &sites, t, &[t], &mut rng).unwrap();
            let p = rec.probes[0].unwrap();
            let pos = model.lattice().position(p);
            let origin = model.lattice().position(start);
            sum += (pos[0] - origin[0]).powi(2) + (pos[1] - origin[1]).powi(2);
        }
        let msd = sum / n as f64;
        // E|Z_t|^2 = tr(I) t = 2t; Var of |Z|^2 for Gaussian ≈ 8t² -> se.
        let se = (8.0 * t * t / n as f64).sqrt();
        assert!((msd - 2.0 * t).abs() < 3.0 * se, "msd {msd} vs {}", 2.0 * t);
    }

    #[test]
    fn survival_constant_reaches_reference() {
        let t = 10_000.0;
        let p = survival_profile(&WalkModel::ssrw(), t, SurvivalMode::Exact, 0).unwrap();
        let scaled = t.sqrt() * p;
        assert!(
            (1.09..1.17).contains(&scaled),
            "sqrt(T) P(tau > T) = {scaled}"
        );
    }

    #[test]
    fn survival_monotone_in_time() {
        let model = WalkModel::ssrw();
        let mut prev = 1.0;
        for &t in &[10.0, 100.0, 1000.0] {
            let p = survival_profile(&model, t, SurvivalMode::Exact, 0).unwrap();
            assert!(p < prev);
            prev = p;
        }
    }

    #[test]
    fn survival_short_time_is_near_one() {
        let p = survival_profile(&WalkModel::ssrw(), 1e-3, SurvivalMode::Exact, 0).unwrap();
        assert!(p > 0.999);
    }

    #[test]
    fn survival_mc_agrees_with_exact() {
        let model = WalkModel::ssrw();
        let t = 100.0;
        let exact = survival_profile(&model, t, SurvivalMode::Exact, 0).unwrap();
        let n = 40_000;
        let mc = survival_profile(&model, t, SurvivalMode::MonteCarlo { samples: n }, 11).unwrap();
        let se = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((mc - exact).abs() < 3.5 * se, "mc {mc} vs exact {exact}");
    }
}
