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

//! The boundary injection mechanism: a per-site intensity of the product form
//! `A(J(l)) · B(s) · f(l/L)` and an inhomogeneous Poisson point process
//! sampler over `(-t, 0] × ∂D_L`, via thinning.

use std::collections::HashMap;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::geometry::{BoundarySite, DomainSites, Side};
use crate::kernels::BoundaryProfile;
use crate::rng::{self, salt};

/// The escape-set weight function `A`. It may only depend on a site through
/// its escape set, which every variant guarantees by construction.
#[derive(Debug, Clone)]
pub enum ATable {
    /// `A(J) = Σ_{j∈J} a_j`; per-edge weights double as entry-edge sampling
    /// weights. `a_j = P(w_j)` reproduces the walk-duality choice, and the
    /// billiard uses `a_j = 1/ζ̄_j`.
    PerEdge(Vec<f64>),
    /// Explicit table keyed by the escape-set bitmask.
    Explicit(HashMap<u32, f64>),
    /// `A(J) = |J|`.
    CountEscapes,
}

impl ATable {
    pub fn spec_a(weights: &[f64]) -> Self {
        ATable::PerEdge(weights.to_vec())
    }

    pub fn eval(&self, escape_mask: u32) -> f64 {
        match self {
            ATable::PerEdge(a) => (0..a.len())
                .filter(|j| escape_mask & (1u32 << j) != 0)
                .map(|j| a[j])
                .sum(),
            ATable::Explicit(m) => m.get(&escape_mask).copied().unwrap_or(0.0),
            ATable::CountEscapes => escape_mask.count_ones() as f64,
        }
    }

    /// Relative weights for drawing the entry edge among the escape set.
    pub fn edge_weights(&self, escape_mask: u32) -> Vec<(usize, f64)> {
        let edges: Vec<usize> = (0..32).filter(|j| escape_mask & (1 << j) != 0).collect();
        match self {
            ATable::PerEdge(a) => edges
                .into_iter()
                .filter(|&j| j < a.len() && a[j] > 0.0)
                .map(|j| (j, a[j]))
                .collect(),
            _ => edges.into_iter().map(|j| (j, 1.0)).collect(),
        }
    }
}

/// Periodic time modulation with unit mean, sampled with linear interpolation.
#[derive(Debug, Clone)]
pub struct PeriodicFn {
    samples: Vec<f64>,
}

impl PeriodicFn {
    pub fn constant() -> Self {
        Self { samples: vec![1.0, 1.0] }
    }

    pub fn from_samples(samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidArgument("B needs at least 2 samples".into()));
        }
        if samples.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument("B must be non-negative".into()));
        }
        let f = Self { samples };
        let integral = f.integral_over_period();
        if (integral - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "B must integrate to 1 over its period; got {integral}"
            )));
        }
        Ok(f)
    }

    fn integral_over_period(&self) -> f64 {
        // Trapezoid rule is exact for the piecewise-linear interpolant,
        // closing the period with the first sample.
        let n = self.samples.len();
        let h = 1.0 / n as f64;
        (0..n)
            .map(|i| 0.5 * (self.samples[i] + self.samples[(i + 1) % n]) * h)
            .sum()
    }

    pub fn eval(&self, s: f64) -> f64 {
        let n = self.samples.len();
        let u = (s.rem_euclid(1.0)) * n as f64;
        let i = (u.floor() as usize).min(n - 1);
        let w = u - i as f64;
        self.samples[i] * (1.0 - w) + self.samples[(i + 1) % n] * w
    }

    pub fn sup(&self) -> f64 {
        self.samples.iter().cloned().fold(0.0, f64::max)
    }
}

/// Full injection configuration: `A`, `B`, up to four side profiles, and the
/// time horizon (`None` for the stationary problem).
#[derive(Debug, Clone)]
pub struct InjectionSpec {
    pub a_table: ATable,
    pub b_fn: PeriodicFn,
    profiles: [Option<BoundaryProfile>; 4],
    pub horizon: Option<f64>,
}

impl InjectionSpec {
    pub fn new(a_table: ATable, b_fn: PeriodicFn, horizon: Option<f64>) -> Self {
        Self {
            a_table,
            b_fn,
            profiles: [None, None, None, None],
            horizon,
        }
    }

    pub fn with_profile(mut self, profile: BoundaryProfile) -> Self {
        let slot = profile.side.index();
        self.profiles[slot] = Some(profile);
        self
    }

    pub fn profile(&self, side: Side) -> Option<&BoundaryProfile> {
        self.profiles[side.index()].as_ref()
    }

    /// The spatial factor `A(J(l)) · Σ_sides f(·)`, with per-side profiles
    /// applied additively on corner sites.
    pub fn site_rate(&self, sites: &DomainSites, b: &BoundarySite) -> f64 {
        let a = self.a_table.eval(b.escape);
        if a == 0.0 {
            return 0.0;
        }
        let p = sites.position(b.site);
        let l = sites.domain.scale;
        let mut f = 0.0;
        for side in Side::ALL {
            if b.sides.0 & side.mask() == 0 {
                continue;
            }
            if let Some(profile) = self.profile(side) {
                f += profile.eval(side.along(p) / l);
            }
        }
        a * f
    }

    /// Time-dependent intensity at a boundary site.
    pub fn intensity(&self, sites: &DomainSites, site: [i64; 2], s: f64) -> Result<f64> {
        let idx = sites
            .index_of(site)
            .ok_or(Error::NotOnBoundary(site))?;
        let b = sites
            .boundary()
            .iter()
            .find(|b| b.site == idx)
            .ok_or(Error::NotOnBoundary(site))?;
        Ok(self.site_rate(sites, b) * self.b_fn.eval(s))
    }

    /// The source vector `src(l) = A(J(l)) · f(l/L)` over all sites (zero in
    /// the interior), for the exact propagator routes (B ≡ 1).
    pub fn source_vector(&self, sites: &DomainSites) -> Vec<f64> {
        let mut src = vec![0.0; sites.len()];
        for b in sites.boundary() {
            src[b.site] = self.site_rate(sites, b);
        }
        src
    }

    /// Per-site boundary values `Σ_sides f(l/L)` without the `A` factor:
    /// the function the dual walk evaluates at its pre-exit site.
    pub fn boundary_values(&self, sites: &DomainSites) -> Vec<f64> {
        let mut g = vec![0.0; sites.len()];
        for b in sites.boundary() {
            let p = sites.position(b.site);
            let l = sites.domain.scale;
            for side in Side::ALL {
                if b.sides.0 & side.mask() == 0 {
                    continue;
                }
                if let Some(profile) = self.profile(side) {
                    g[b.site] += profile.eval(side.along(p) / l);
                }
            }
        }
        g
    }
}

/// One injection event: a particle enters at time `time <= 0` at `site`
/// through entry edge `edge`.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectionEvent {
    pub time: f64,
    pub site: [i64; 2],
    pub side: Side,
    pub edge: usize,
}

impl InjectionEvent {
    pub fn csv_header() -> &'static str {
        "T,lx,ly,side,edge"
    }

    pub fn write_csv<W: Write>(events: &[InjectionEvent], sites: &DomainSites, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::csv_header())?;
        for e in events {
            let p = sites.lattice.position(e.site);
            writeln!(
                w,
                "{:.17e},{:.17e},{:.17e},{:?},{}",
                e.time, p[0], p[1], e.side, e.edge
            )?;
        }
        Ok(())
    }
}

/// Sample the inhomogeneous Poisson point process on `(-t, 0] × ∂D_L` by
/// thinning against `sup B`. Deterministic given the seed and independent of
/// any parallel scheduling: each site draws from its own derived stream.
pub fn sample_events(spec: &InjectionSpec, sites: &DomainSites, seed: u64) -> Result<Vec<InjectionEvent>> {
    let horizon = spec
        .horizon
        .ok_or_else(|| Error::InvalidArgument("sampling requires a finite horizon".into()))?;
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    let sup_b = spec.b_fn.sup();
    if !sup_b.is_finite() {
        return Err(Error::InvalidArgument("unbounded time modulation".into()));
    }
    let mut events = Vec::new();
    for (ord, b) in sites.boundary().iter().enumerate() {
        let rate = spec.site_rate(sites, b);
        if rate <= 0.0 {
            continue;
        }
        let site = sites.site(b.site);
        let side = dominant_side(b);
        let edges = spec.a_table.edge_weights(b.escape);
        let edge_total: f64 = edges.iter().map(|(_, w)| w).sum();
        let mut rng = rng::stream(seed, salt::INJECTION, ord as u64);
        let mean = rate * sup_b * horizon;
        let n = Poisson::new(mean)
            .map_err(|_| Error::InvalidArgument("bad Poisson mean".into()))?
            .sample(&mut rng) as u64;
        for _ in 0..n {
            let t = -rng.gen::<f64>() * horizon;
            // Thin against the envelope rate · sup B.
            if rng.gen::<f64>() * sup_b > spec.b_fn.eval(t) {
                continue;
            }
            let mut pick = rng.gen::<f64>() * edge_total;
            let mut edge = edges.last().map(|(j, _)| *j).unwrap_or(0);
            for (j, w) in &edges {
                if pick < *w {
                    edge = *j;
                    break;
                }
                pick -= w;
            }
            events.push(InjectionEvent {
                time: t,
                site,
                side,
                edge,
            });
        }
    }
    events.sort_by(|a, b| {
        a.time
            .partial_cmp(&b.time)
            .unwrap()
            .then(a.site.cmp(&b.site))
            .then(a.edge.cmp(&b.edge))
    });
    Ok(events)
}

fn dominant_side(b: &BoundarySite) -> Side {
    for side in Side::ALL {
        if b.sides.0 & side.mask() != 0 {
            return side;
        }
    }
    Side::West
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{boundary_sets, DomainSpec, LatticeSpec};

    fn grid(l: f64) -> DomainSites {
        boundary_sets(DomainSpec::square(l).unwrap(), &LatticeSpec::square_nn()).unwrap()
    }

    fn flat(side: Side) -> BoundaryProfile {
        BoundaryProfile::from_fn(side, 8, 1.0, 0.01, |_| 1.0).unwrap()
    }

    #[test]
    fn corner_intensity_counts_escapes() {
        let sites = grid(6.0);
        let spec = InjectionSpec::new(ATable::CountEscapes, PeriodicFn::constant(), Some(1.0))
            .with_profile(flat(Side::West))
            .with_profile(flat(Side::South));
        // Corner (0,0) escapes west and south; both side profiles are 1, so
        // the two sides contribute additively: |J| * (1 + 1).
        let v = spec.intensity(&sites, [0, 0], 0.0).unwrap();
        assert_eq!(v, 4.0);
        // A plain west site has |J| = 1 and a single profile.
        let v = spec.intensity(&sites, [0, 3], 0.0).unwrap();
        assert_eq!(v, 1.0);
        assert!(spec.intensity(&sites, [3, 3], 0.0).is_err());
    }

    #[test]
    fn sine_profile_midpoint() {
        let sites = grid(6.0);
        let spec = InjectionSpec::new(ATable::CountEscapes, PeriodicFn::constant(), Some(1.0))
            .with_profile(
                BoundaryProfile::from_fn(Side::West, 64, 1.0, 0.01, |y| (std::f64::consts::PI * y).sin())
                    .unwrap(),
            );
        let v = spec.intensity(&sites, [0, 3], 0.0).unwrap();
        assert!((v - 1.0).abs() < 1e-3, "midpoint intensity {v}");
    }

    #[test]
    fn modulated_intensity_averages_to_flat() {
        let n = 400;
        let b = PeriodicFn::from_samples(
            (0..n)
                .map(|i| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
                .collect(),
        )
        .unwrap();
        let sites = grid(6.0);
        let spec = InjectionSpec::new(ATable::CountEscapes, b, Some(1.0)).with_profile(flat(Side::West));
        let m = 2000;
        let avg: f64 = (0..m)
            .map(|i| spec.intensity(&sites, [0, 3], i as f64 / m as f64).unwrap())
            .sum::<f64>()
            / m as f64;
        assert!((avg - 1.0).abs() < 1e-3, "period average {avg}");
    }

    #[test]
    fn zero_profile_gives_no_events() {
        let sites = grid(8.0);
        let spec = InjectionSpec::new(ATable::CountEscapes, PeriodicFn::constant(), Some(2.0));
        let ev = sample_events(&spec, &sites, 1).unwrap();
        assert!(ev.is_empty());
    }

    #[test]
    fn event_counts_match_poisson_mean() {
        let sites = grid(8.0);
        let t = 2.0;
        let spec = InjectionSpec::new(ATable::CountEscapes, PeriodicFn::constant(), Some(t))
            .with_profile(flat(Side::West));
        let expected: f64 = sites
            .boundary()
            .iter()
            .map(|b| spec.site_rate(&sites, b))
            .sum::<f64>()
            * t;
        let trials = 10_000;
        let mut total = 0usize;
        let mut totsq = 0f64;
        for s in 0..trials {
            let n = sample_events(&spec, &sites, s as u64).unwrap().len();
            total += n;
            totsq += (n * n) as f64;
        }
        let mean = total as f64 / trials as f64;
        let var = totsq / trials as f64 - mean * mean;
        let se = (var / trials as f64).sqrt();
        assert!(
            (mean - expected).abs() < 3.0 * se,
            "mean {mean} vs expected {expected} (se {se})"
        );
    }

    #[test]
    fn disjoint_windows_are_uncorrelated() {
        let sites = grid(8.0);
        let spec = InjectionSpec::new(ATable::CountEscapes, PeriodicFn::constant(), Some(2.0))
            .with_profile(flat(Side::West));
        let trials = 4000;
        let mut xs = Vec::with_capacity(trials);
        let mut ys = Vec::with_capacity(trials);
        for s in 0..trials {
            let ev = sample_events(&spec, &sites, 70_000 + s as u64).unwrap();
            let a = ev.iter().filter(|e| e.time > -1.0).count() as f64;
            let b = ev.iter().filter(|e| e.time <= -1.0).count() as f64;
            xs.push(a);
            ys.push(b);
        }
        let n = trials as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let cov = xs
            .iter()
            .zip(&ys)
            .map(|(a, b)| (a - mx) * (b - my))
            .sum::<f64>()
            / (n - 1.0);
        // Var of the sample covariance of two independent Poissons is about
        // m_x m_y / n.
        let se = (mx * my / n).sqrt();
        assert!(cov.abs() < 3.0 * se, "cov {cov} (se {se})");
    }

    #[test]
    fn superposition_of_profiles() {
        // Sampling with f1 + f2 matches the total mean of independent
        // samples with f1 and f2.
        let sites = grid(8.0);
        let f1 = BoundaryProfile::from_fn(Side::West, 32, 1.0, 0.01, |y| y).unwrap();
        let f2 = BoundaryProfile::from_fn(Side::West, 32, 1.0, 0.01, |y| 1.0 - y).unwrap();
        let sum = BoundaryProfile::from_fn(Side::West, 32, 1.0, 0.01, |_| 1.0).unwrap();
        let t = 4.0;
        let mk = |p: BoundaryProfile| {
            InjectionSpec::new(ATable::CountEscapes, PeriodicFn::constant(), Some(t)).with_profile(p)
        };
        let trials = 6000;
        let count = |spec: &InjectionSpec, off: u64| -> f64 {
            (0..trials)
                .map(|s| sample_events(spec, &sites, off + s as u64).unwrap().len() as f64)
                .sum::<f64>()
                / trials as f64
        };
        let c1 = count(&mk(f1), 1);
        let c2 = count(&mk(f2), 50_000);
        let cs = count(&mk(sum), 100_000);
        let se = (cs / trials as f64).sqrt() * 2.0;
        assert!(
            (c1 + c2 - cs).abs() < 3.0 * se,
            "superposition {c1}+{c2} vs {cs}"
        );
    }

    #[test]
    fn same_type_sites_have_equal_intensity() {
        let sites = grid(12.0);
        let spec = InjectionSpec::new(
            ATable::spec_a(sites.lattice.weights()),
            PeriodicFn::constant(),
            Some(1.0),
        )
        .with_profile(flat(Side::West));
        // All non-corner west sites are of the same type on the square
        // lattice and share one f-value, so their intensities agree.
        let vals: Vec<f64> = (1..=11)
            .map(|b| spec.intensity(&sites, [0, b], 0.5).unwrap())
            .collect();
        for v in &vals {
            assert_eq!(*v, vals[0]);
        }
    }

    #[test]
    fn events_are_deterministic_and_sorted() {
        let sites = grid(8.0);
        let spec = InjectionSpec::new(ATable::CountEscapes, PeriodicFn::constant(), Some(2.0))
            .with_profile(flat(Side::West));
        let a = sample_events(&spec, &sites, 42).unwrap();
        let b = sample_events(&spec, &sites, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].time <= w[1].time));
    }

    #[test]
    fn b_must_integrate_to_one() {
        assert!(PeriodicFn::from_samples(vec![2.0, 2.0]).is_err());
        assert!(PeriodicFn::from_samples(vec![0.5, 1.5]).is_ok());
    }
}
