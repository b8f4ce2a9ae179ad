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

//! Exact propagator computations on the absorbed chain: stationary occupancy
//! by linear solve, transient occupancy by uniformization with Gamma-cdf
//! weights, and the dual harmonic evaluation on the reverted walk.

use crate::error::{Error, Result};
use crate::field::DensityField;
use crate::geometry::DomainSites;
use crate::kernels::special::{gamma_cdf_ladder, poisson_pmf_ladder};
use crate::walk::WalkModel;

/// Embedded one-step matrix of the walk restricted to `D_L`, rows summing to
/// one minus the escaping jump mass. `reverted` flips every jump.
pub struct AbsorbedChain<'a> {
    pub sites: &'a DomainSites,
    reverted: bool,
    indptr: Vec<u32>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    exit_mass: Vec<f64>,
}

impl<'a> AbsorbedChain<'a> {
    pub fn forward(sites: &'a DomainSites, model: &WalkModel) -> Self {
        Self::build(sites, model, false)
    }

    pub fn reverted(sites: &'a DomainSites, model: &WalkModel) -> Self {
        Self::build(sites, model, true)
    }

    fn build(sites: &'a DomainSites, model: &WalkModel, reverted: bool) -> Self {
        let n = sites.len();
        let jumps = model.lattice().jumps_int();
        let weights = model.weights();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(n * jumps.len());
        let mut vals = Vec::with_capacity(n * jumps.len());
        let mut exit_mass = vec![0.0; n];
        indptr.push(0u32);
        for i in 0..n {
            let c = sites.site(i);
            for (j, w) in jumps.iter().enumerate() {
                let s = if reverted { -1 } else { 1 };
                let nb = [c[0] + s * w[0], c[1] + s * w[1]];
                match sites.index_of(nb) {
                    Some(t) => {
                        cols.push(t as u32);
                        vals.push(weights[j]);
                    }
                    None => exit_mass[i] += weights[j],
                }
            }
            indptr.push(cols.len() as u32);
        }
        Self {
            sites,
            reverted,
            indptr,
            cols,
            vals,
            exit_mass,
        }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn is_reverted(&self) -> bool {
        self.reverted
    }

    /// Jump mass escaping the domain from each site.
    pub fn exit_mass(&self) -> &[f64] {
        &self.exit_mass
    }

    /// Row sum of the sub-stochastic one-step matrix.
    pub fn row_sum(&self, i: usize) -> f64 {
        let (lo, hi) = (self.indptr[i] as usize, self.indptr[i + 1] as usize);
        self.vals[lo..hi].iter().sum()
    }

    /// `y = Pᵀ x`: push mass one step forward.
    pub fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.len() {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            let (lo, hi) = (self.indptr[i] as usize, self.indptr[i + 1] as usize);
            for k in lo..hi {
                y[self.cols[k] as usize] += self.vals[k] * xi;
            }
        }
    }

    /// `y = P x`: expectation of x after one step.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.len() {
            let (lo, hi) = (self.indptr[i] as usize, self.indptr[i + 1] as usize);
            let mut acc = 0.0;
            for k in lo..hi {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            y[i] = acc;
        }
    }
}

const SERIES_CAP: usize = 2_000_000;
const DENSE_LIMIT: usize = 1100;

/// Solve `(I - A) x = b` where `A` is the (transposed or plain) sub-stochastic
/// step operator: dense LU for small systems, otherwise the convergent
/// Neumann series with a residual check.
fn solve_absorbing(
    apply: &dyn Fn(&[f64], &mut [f64]),
    b: &[f64],
    n: usize,
    dense: Option<&dyn Fn(usize) -> Vec<f64>>,
) -> Result<Vec<f64>> {
    if b.iter().all(|v| *v == 0.0) {
        return Ok(vec![0.0; n]);
    }
    if let Some(row_of) = dense {
        if n <= DENSE_LIMIT {
            return dense_solve(row_of, b, n);
        }
    }
    let mut acc = b.to_vec();
    let mut cur = b.to_vec();
    let mut next = vec![0.0; n];
    let scale: f64 = b.iter().map(|v| v.abs()).sum();
    for _ in 0..SERIES_CAP {
        apply(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
        let mut mass = 0.0;
        for i in 0..n {
            acc[i] += cur[i];
            mass += cur[i].abs();
        }
        if mass < 1e-16 * scale.max(1e-300) {
            // Residual r = b + A·acc - acc should vanish.
            apply(&acc, &mut next);
            let mut resid = 0.0f64;
            for i in 0..n {
                resid = resid.max((b[i] + next[i] - acc[i]).abs());
            }
            if resid > 1e-12 * scale.max(1.0) {
                return Err(Error::NoConvergence {
                    residual: resid,
                    iterations: SERIES_CAP,
                });
            }
            return Ok(acc);
        }
    }
    Err(Error::NoConvergence {
        residual: f64::NAN,
        iterations: SERIES_CAP,
    })
}

/// Dense LU with partial pivoting on `(I - A)`, rows supplied by `row_of`.
fn dense_solve(row_of: &dyn Fn(usize) -> Vec<f64>, b: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut m = vec![0.0f64; n * n];
    for i in 0..n {
        let row = row_of(i);
        for j in 0..n {
            m[i * n + j] = if i == j { 1.0 - row[j] } else { -row[j] };
        }
    }
    let mut x = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let mut piv = col;
        let mut best = m[perm[col] * n + col].abs();
        for r in col + 1..n {
            let v = m[perm[r] * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best < 1e-14 {
            return Err(Error::NoConvergence {
                residual: best,
                iterations: 0,
            });
        }
        perm.swap(col, piv);
        let prow = perm[col];
        let d = m[prow * n + col];
        for r in col + 1..n {
            let row = perm[r];
            let f = m[row * n + col] / d;
            if f == 0.0 {
                continue;
            }
            m[row * n + col] = 0.0;
            for j in col + 1..n {
                m[row * n + j] -= f * m[prow * n + j];
            }
            x[row] -= f * x[prow];
        }
    }
    let mut out = vec![0.0f64; n];
    for col in (0..n).rev() {
        let row = perm[col];
        let mut v = x[row];
        for j in col + 1..n {
            v -= m[row * n + j] * out[j];
        }
        out[col] = v / m[row * n + col];
    }
    Ok(out)
}

fn field_from(sites: &DomainSites, values: &[f64], time: Option<f64>) -> DensityField {
    let mut f = DensityField::new(sites.domain.scale, time);
    for i in 0..sites.len() {
        f.push(Some(sites.site(i)), sites.position(i), values[i]);
    }
    f
}

/// Expected stationary occupancy `E Λ_∞` for a source vector (B ≡ 1):
/// solves `m = src + Pᵀ m`.
pub fn occupancy_stationary(chain: &AbsorbedChain, src: &[f64]) -> Result<DensityField> {
    let n = chain.len();
    if src.len() != n {
        return Err(Error::InvalidArgument("source length mismatch".into()));
    }
    let apply = |x: &[f64], y: &mut [f64]| chain.apply_transpose(x, y);
    let dense = |i: usize| -> Vec<f64> {
        // Row i of Pᵀ: entries Pᵀ(i, j) = P(j, i).
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let mut out = vec![0.0; n];
        chain.apply(&e, &mut out);
        out
    };
    let m = solve_absorbing(&apply, src, n, Some(&dense))?;
    Ok(field_from(chain.sites, &m, None))
}

/// Expected occupancy at a finite time: uniformization
/// `E Λ_t = Σ_M F_{M+1}(t) (Pᵀ)^M src`, truncated once the Gamma weights and
/// remaining mass are negligible.
pub fn occupancy_transient(chain: &AbsorbedChain, src: &[f64], t: f64) -> Result<DensityField> {
    let n = chain.len();
    if src.len() != n {
        return Err(Error::InvalidArgument("source length mismatch".into()));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument("time must be non-negative".into()));
    }
    let m_cap = (t + 12.0 * t.sqrt() + 60.0) as usize;
    let weights = gamma_cdf_ladder(t, m_cap);
    let mut acc = vec![0.0; n];
    let mut cur = src.to_vec();
    let mut next = vec![0.0; n];
    let scale: f64 = src.iter().map(|v| v.abs()).sum();
    for (m, w) in weights.iter().enumerate() {
        let mut mass = 0.0;
        for i in 0..n {
            acc[i] += w * cur[i];
            mass += cur[i].abs();
        }
        if *w < 1e-12 && m as f64 > t {
            break;
        }
        if mass * w < 1e-18 * scale.max(1e-300) {
            break;
        }
        chain.apply_transpose(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(field_from(chain.sites, &acc, Some(t)))
}

/// Distribution of the absorbed walk at time `t` from an initial probability
/// vector: `Σ_M pois(t, M) (Pᵀ)^M p0`.
pub fn distribution_at(chain: &AbsorbedChain, p0: &[f64], t: f64) -> Result<Vec<f64>> {
    let n = chain.len();
    if p0.len() != n {
        return Err(Error::InvalidArgument("initial vector length mismatch".into()));
    }
    let m_cap = (t + 12.0 * t.sqrt() + 60.0) as usize;
    let pmf = poisson_pmf_ladder(t, m_cap);
    let mut acc = vec![0.0; n];
    let mut cur = p0.to_vec();
    let mut next = vec![0.0; n];
    for (m, w) in pmf.iter().enumerate() {
        if *w > 0.0 {
            for i in 0..n {
                acc[i] += w * cur[i];
            }
        }
        if m == m_cap {
            break;
        }
        chain.apply_transpose(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(acc)
}

/// Dual harmonic evaluation on the reverted walk:
/// `h(m) = E( g(Z'_{τ'-}) 1{τ' < t} | Z'_0 = m )` for per-site boundary data
/// `g`, solved for every start site at once.
///
/// For `t = None` this is the stationary linear solve `h = P' h + s` with
/// `s(l) = g(l) · exit'(l)`; for finite `t` the Gamma-weighted series.
pub fn dual_harmonic(
    sites: &DomainSites,
    model: &WalkModel,
    g: &[f64],
    t: Option<f64>,
) -> Result<DensityField> {
    let n = sites.len();
    if g.len() != n {
        return Err(Error::InvalidArgument("boundary data length mismatch".into()));
    }
    let chain = AbsorbedChain::reverted(sites, model);
    let s: Vec<f64> = (0..n).map(|i| g[i] * chain.exit_mass()[i]).collect();
    match t {
        None => {
            let apply = |x: &[f64], y: &mut [f64]| chain.apply(x, y);
            let dense = |i: usize| -> Vec<f64> {
                let (lo, hi) = (chain.indptr[i] as usize, chain.indptr[i + 1] as usize);
                let mut row = vec![0.0; n];
                for k in lo..hi {
                    row[chain.cols[k] as usize] += chain.vals[k];
                }
                row
            };
            let h = solve_absorbing(&apply, &s, n, Some(&dense))?;
            Ok(field_from(sites, &h, None))
        }
        Some(t) => {
            let m_cap = (t + 12.0 * t.sqrt() + 60.0) as usize;
            let weights = gamma_cdf_ladder(t, m_cap);
            let mut acc = vec![0.0; n];
            let mut cur = s;
            let mut next = vec![0.0; n];
            let scale: f64 = cur.iter().map(|v| v.abs()).sum();
            for (m, w) in weights.iter().enumerate() {
                let mut mass = 0.0;
                for i in 0..n {
                    acc[i] += w * cur[i];
                    mass += cur[i].abs();
                }
                if *w < 1e-12 && m as f64 > t {
                    break;
                }
                if mass * w < 1e-18 * scale.max(1e-300) {
                    break;
                }
                chain.apply(&cur, &mut next);
                std::mem::swap(&mut cur, &mut next);
            }
            Ok(field_from(sites, &acc, Some(t)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{boundary_sets, DomainSpec, LatticeSpec, Side};
    use crate::injection::{ATable, InjectionSpec, PeriodicFn};
    use crate::kernels::BoundaryProfile;

    fn ssrw_domain(l: f64) -> (crate::walk::WalkModel, DomainSites) {
        let model = crate::walk::WalkModel::ssrw();
        let sites = boundary_sets(DomainSpec::square(l).unwrap(), model.lattice()).unwrap();
        (model, sites)
    }

    fn sin_injection(_l: f64) -> InjectionSpec {
        let model = crate::walk::WalkModel::ssrw();
        InjectionSpec::new(
            ATable::spec_a(model.weights()),
            PeriodicFn::constant(),
            None,
        )
        .with_profile(
            BoundaryProfile::from_fn(Side::West, 1024, 1.0, 0.02, |y| {
                (std::f64::consts::PI * y).sin()
            })
            .unwrap(),
        )
    }

    #[test]
    fn zero_source_zero_field() {
        let (model, sites) = ssrw_domain(12.0);
        let chain = AbsorbedChain::forward(&sites, &model);
        let f = occupancy_stationary(&chain, &vec![0.0; sites.len()]).unwrap();
        assert!(f.values().all(|v| v == 0.0));
    }

    #[test]
    fn single_absorbing_site_holds_unit_time() {
        let lat = LatticeSpec::from_integer_jumps(
            [10.0, 0.0],
            [0.0, 10.0],
            vec![[1, 0], [-1, 0], [0, 1], [0, -1]],
            Some(&[0.25; 4]),
        )
        .unwrap();
        let model = crate::walk::WalkModel::new(lat).unwrap();
        let sites = boundary_sets(DomainSpec::new(1.0, 0.5).unwrap(), model.lattice()).unwrap();
        assert_eq!(sites.len(), 1);
        let chain = AbsorbedChain::forward(&sites, &model);
        let f = occupancy_stationary(&chain, &[1.0]).unwrap();
        assert!((f.value_at([0, 0]).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn row_sums_complement_exit_mass() {
        let (model, sites) = ssrw_domain(10.0);
        let chain = AbsorbedChain::forward(&sites, &model);
        for i in 0..chain.len() {
            let total = chain.row_sum(i) + chain.exit_mass()[i];
            assert!((total - 1.0).abs() < 1e-15);
        }
        // Interior rows are exactly stochastic, boundary rows strictly less.
        for b in sites.boundary() {
            assert!(chain.row_sum(b.site) < 1.0);
        }
    }

    #[test]
    fn stationary_occupancy_equals_dual_harmonic_exactly() {
        for &l in &[8.0, 16.0, 24.0] {
            let (model, sites) = ssrw_domain(l);
            let spec = sin_injection(l);
            let src = spec.source_vector(&sites);
            let chain = AbsorbedChain::forward(&sites, &model);
            let occ = occupancy_stationary(&chain, &src).unwrap();
            // Dual boundary data: the same per-site profile values, supported
            // on the injection boundary only.
            let g = spec.boundary_values(&sites);
            let dual = dual_harmonic(&sites, &model, &g, None).unwrap();
            let diff = occ.max_abs_diff(&dual).unwrap();
            assert!(diff <= 1e-10, "L={l}: stationary duality gap {diff:.3e}");
        }
    }

    #[test]
    fn transient_occupancy_equals_dual_harmonic() {
        for &l in &[8.0, 16.0, 24.0] {
            let (model, sites) = ssrw_domain(l);
            let spec = sin_injection(l);
            let src = spec.source_vector(&sites);
            let chain = AbsorbedChain::forward(&sites, &model);
            let t = 0.5 * l * l;
            let occ = occupancy_transient(&chain, &src, t).unwrap();
            let g = spec.boundary_values(&sites);
            let dual = dual_harmonic(&sites, &model, &g, Some(t)).unwrap();
            let diff = occ.max_abs_diff(&dual).unwrap();
            assert!(diff <= 1e-8, "L={l}: transient duality gap {diff:.3e}");
        }
    }

    #[test]
    fn transient_short_time_is_linear_in_source() {
        let (model, sites) = ssrw_domain(10.0);
        let spec = sin_injection(10.0);
        let src = spec.source_vector(&sites);
        let chain = AbsorbedChain::forward(&sites, &model);
        let t = 1e-4;
        let f = occupancy_transient(&chain, &src, t).unwrap();
        for (i, e) in f.entries().iter().enumerate() {
            assert!((e.value - t * src[i]).abs() < 2.0 * t * t * (src[i] + 1.0));
        }
    }

    #[test]
    fn transient_converges_to_stationary() {
        let (model, sites) = ssrw_domain(16.0);
        let spec = sin_injection(16.0);
        let src = spec.source_vector(&sites);
        let chain = AbsorbedChain::forward(&sites, &model);
        let f_t = occupancy_transient(&chain, &src, 10.0 * 16.0 * 16.0).unwrap();
        let f_inf = occupancy_stationary(&chain, &src).unwrap();
        let diff = f_t.max_abs_diff(&f_inf).unwrap();
        assert!(diff < 1e-6, "gap to stationary {diff:.3e}");
    }

    #[test]
    fn transient_monotone_in_time() {
        let (model, sites) = ssrw_domain(12.0);
        let spec = sin_injection(12.0);
        let src = spec.source_vector(&sites);
        let chain = AbsorbedChain::forward(&sites, &model);
        let mut prev = vec![0.0; sites.len()];
        for &t in &[5.0, 20.0, 80.0, 320.0] {
            let f = occupancy_transient(&chain, &src, t).unwrap();
            for (i, e) in f.entries().iter().enumerate() {
                assert!(e.value >= prev[i] - 1e-12);
                prev[i] = e.value;
            }
        }
    }

    #[test]
    fn dual_harmonic_total_absorption() {
        let (model, sites) = ssrw_domain(16.0);
        let g = vec![1.0; sites.len()];
        let h = dual_harmonic(&sites, &model, &g, None).unwrap();
        for e in h.entries() {
            assert!((e.value - 1.0).abs() < 1e-10, "absorption mass {}", e.value);
        }
    }

    #[test]
    fn dual_harmonic_west_measure_approaches_quarter() {
        let l = 64.0;
        let (model, sites) = ssrw_domain(l);
        let g: Vec<f64> = (0..sites.len())
            .map(|i| {
                let b = sites
                    .boundary()
                    .iter()
                    .find(|b| b.site == i);
                match b {
                    Some(b) if b.sides.west() => 1.0,
                    _ => 0.0,
                }
            })
            .collect();
        let h = dual_harmonic(&sites, &model, &g, None).unwrap();
        let center = model.lattice().round_to_lattice([l / 2.0, l / 2.0]);
        let v = h.value_at(center).unwrap();
        assert!((v - 0.25).abs() < 2e-2, "west harmonic measure {v}");
    }

    #[test]
    fn transient_matches_rk4_integrator() {
        // Independent route: E Λ_t solves dm/dt = src + (Pᵀ - I) m, m(0) = 0.
        let (model, sites) = ssrw_domain(8.0);
        let spec = sin_injection(8.0);
        let src = spec.source_vector(&sites);
        let chain = AbsorbedChain::forward(&sites, &model);
        let t_end = 0.5 * 8.0 * 8.0;
        let n = sites.len();
        let h = 1e-2f64;
        let steps = (t_end / h).round() as usize;
        let h = t_end / steps as f64;
        let mut m = vec![0.0f64; n];
        let mut k = [vec![0.0f64; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut tmp = vec![0.0f64; n];
        let mut stage = vec![0.0f64; n];
        let deriv = |m: &[f64], out: &mut Vec<f64>, tmp: &mut Vec<f64>| {
            chain.apply_transpose(m, tmp);
            for i in 0..m.len() {
                out[i] = src[i] + tmp[i] - m[i];
            }
        };
        for _ in 0..steps {
            deriv(&m, &mut k[0], &mut tmp);
            for i in 0..n {
                stage[i] = m[i] + 0.5 * h * k[0][i];
            }
            deriv(&stage.clone(), &mut k[1], &mut tmp);
            for i in 0..n {
                stage[i] = m[i] + 0.5 * h * k[1][i];
            }
            deriv(&stage.clone(), &mut k[2], &mut tmp);
            for i in 0..n {
                stage[i] = m[i] + h * k[2][i];
            }
            deriv(&stage.clone(), &mut k[3], &mut tmp);
            for i in 0..n {
                m[i] += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
            }
        }
        let f = occupancy_transient(&chain, &src, t_end).unwrap();
        for (i, e) in f.entries().iter().enumerate() {
            assert!(
                (e.value - m[i]).abs() < 1e-6,
                "site {i}: uniformization {} vs rk4 {}",
                e.value,
                m[i]
            );
        }
    }

    #[test]
    fn dense_and_series_solvers_agree() {
        let (model, sites) = ssrw_domain(20.0);
        let spec = sin_injection(20.0);
        let src = spec.source_vector(&sites);
        let chain = AbsorbedChain::forward(&sites, &model);
        let n = sites.len();
        // Force the series path by bypassing the dense branch.
        let apply = |x: &[f64], y: &mut [f64]| chain.apply_transpose(x, y);
        let series = solve_absorbing(&apply, &src, n, None).unwrap();
        let dense = occupancy_stationary(&chain, &src).unwrap();
        for (i, e) in dense.entries().iter().enumerate() {
            assert!((e.value - series[i]).abs() < 1e-11);
        }
    }
}
