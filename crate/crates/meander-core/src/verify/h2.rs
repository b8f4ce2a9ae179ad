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

//! The conditional local invariance scaling: the probability of ending at a
//! diffusively scaled target while confined to a quadrant-shaped box, scaled
//! by `T^{3/2}`, against the meander × absorbed-density product.

use rayon::prelude::*;

use crate::billiard::{
    edge_spec, flow_absorbing, AbsorbOutcome, BilliardTable, EdgeAxis, SigmaEstimate,
};
use crate::error::{Error, Result};
use crate::geometry::{boundary_sets, classify_types, Axis, ClassifyOutcome, DomainSpec, SideMask};
use crate::kernels::{phi, psi, SeriesTruncation};
use crate::rng::{self, salt};
use crate::walk::{distribution_at, AbsorbedChain, WalkModel};

/// The scaled geometry of the conditional invariance statement.
#[derive(Debug, Clone, Copy)]
pub struct H2Params {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub eta: f64,
    pub xi: f64,
}

impl H2Params {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.alpha && self.alpha < self.beta) {
            return Err(Error::InvalidArgument("need 0 < alpha < beta".into()));
        }
        if !(0.0 < self.eta && self.eta < self.xi && 0.0 < self.gamma && self.gamma < self.xi) {
            return Err(Error::InvalidArgument("need 0 < eta, gamma < xi".into()));
        }
        Ok(())
    }

    /// `ψ(α, β) φ(η, γ, ξ)`.
    pub fn kernel_product(&self) -> Result<f64> {
        let tr = SeriesTruncation::default();
        Ok(psi(self.alpha, self.beta, tr)? * phi(self.eta, self.gamma, self.xi, tr)?)
    }
}

/// The survival constant times covolume for the simple symmetric walk.
pub fn ssrw_c1() -> f64 {
    4.0 / std::f64::consts::PI.sqrt()
}

#[derive(Debug, Clone)]
pub struct H2Statistic {
    pub t: f64,
    pub params: H2Params,
    pub type_k: usize,
    pub raw_probability: f64,
    /// `T^{3/2} p`.
    pub scaled: f64,
    /// `c_k ψ(α,β) φ(η,γ,ξ)` at the nominal parameters.
    pub reference: f64,
    pub relative_error: f64,
    /// The same kernel product evaluated at the effective finite-`T`
    /// geometry: start, target and box rounded to sites, coordinates
    /// measured from the absorbing lines one spacing outside the box. The
    /// gap between `scaled` and this value isolates genuine dynamics error
    /// from discretization offsets.
    pub effective_reference: f64,
}

/// Exact dynamic-programming evaluation of the conditional invariance
/// probability for a walk: uniformization over the absorbed chain on
/// `[0, β√T] × [0, ξ√T]` from the type-`k` West site at height `η√T`.
pub fn h2_walk(model: &WalkModel, t: f64, params: H2Params, type_k: usize, c_k: f64) -> Result<H2Statistic> {
    params.validate()?;
    if !(t > 0.0) {
        return Err(Error::InvalidArgument("T must be positive".into()));
    }
    let rt = t.sqrt();
    let domain = DomainSpec::new(params.beta / params.xi, params.xi * rt)?;
    let sites = boundary_sets(domain, model.lattice())?;
    if sites.len() > 20_000_000 {
        return Err(Error::MemoryEstimate { states: sites.len() });
    }
    let table = match classify_types(&sites, Axis::Vertical)? {
        ClassifyOutcome::Table(tt) => tt,
        ClassifyOutcome::H1Fails { bound, .. } => return Err(Error::H1Undetermined { bound }),
    };
    if type_k == 0 || type_k > table.period {
        return Err(Error::InvalidArgument(format!(
            "type {} outside 1..={}",
            type_k, table.period
        )));
    }
    // Start: West-boundary site of the requested type closest to height η√T.
    let target_height = params.eta * rt;
    let start = sites
        .side_sites(SideMask::WEST)
        .into_iter()
        .filter(|&i| table.assignment.get(&sites.site(i)) == Some(&type_k))
        .min_by(|&a, &b| {
            let da = (sites.position(a)[1] - target_height).abs();
            let db = (sites.position(b)[1] - target_height).abs();
            da.partial_cmp(&db).unwrap()
        })
        .ok_or_else(|| Error::InvalidArgument("no boundary site of the requested type".into()))?;

    let target = model
        .lattice()
        .round_to_lattice([params.alpha * rt, params.gamma * rt]);
    let target_idx = sites
        .index_of(target)
        .ok_or(Error::OutOfDomain([params.alpha * rt, params.gamma * rt]))?;

    let chain = AbsorbedChain::forward(&sites, model);
    let mut p0 = vec![0.0; sites.len()];
    p0[start] = 1.0;
    let dist = distribution_at(&chain, &p0, t)?;
    let p = dist[target_idx];
    let scaled = t.powf(1.5) * p;
    let reference = c_k * params.kernel_product()?;

    // Effective finite-T geometry: actual start/target positions, absorbing
    // lines one lattice spacing beyond the outermost rows and columns.
    let effective_reference = {
        let tr = SeriesTruncation::default();
        let start_pos = sites.position(start);
        let tp = sites.lattice.position(target);
        let dx = x_spacing(model, 0);
        let dy = x_spacing(model, 1);
        let [bw, bh] = domain.extent();
        let last_col = (bw / dx).floor() * dx;
        let last_row = (bh / dy).floor() * dy;
        let alpha_e = (tp[0] + dx) / rt;
        let beta_e = (last_col + 2.0 * dx) / rt;
        let eta_e = (start_pos[1] + dy) / rt;
        let gamma_e = (tp[1] + dy) / rt;
        let xi_e = (last_row + 2.0 * dy) / rt;
        c_k * psi(alpha_e, beta_e, tr).unwrap_or(f64::NAN)
            * phi(eta_e, gamma_e, xi_e, tr).unwrap_or(f64::NAN)
    };
    Ok(H2Statistic {
        t,
        params,
        type_k,
        raw_probability: p,
        scaled,
        reference,
        relative_error: (scaled - reference).abs() / reference,
        effective_reference,
    })
}

/// Smallest positive coordinate step of the jump set along an axis.
fn x_spacing(model: &WalkModel, axis: usize) -> f64 {
    let lat = model.lattice();
    (0..lat.num_jumps())
        .map(|j| lat.jump_vector(j)[axis].abs())
        .filter(|v| *v > 1e-12)
        .fold(f64::INFINITY, f64::min)
}

/// Monte Carlo conditional invariance estimate for a billiard, with 3×3 cell
/// aggregation around the target and the constant self-calibrated from the
/// survival fraction.
#[derive(Debug, Clone)]
pub struct H2BilliardStatistic {
    pub t: f64,
    pub params: H2Params,
    /// Per-cell probability estimate (block-averaged) scaled by `T^{3/2}`.
    pub scaled: f64,
    pub scaled_se: f64,
    /// Self-calibrated constant `Ĉ = √T · (survival fraction)`.
    pub c_hat: f64,
    /// `ψ φ` product for shape comparisons.
    pub kernel_product: f64,
    pub survivors: u64,
    pub hits: u64,
}

pub fn h2_billiard(
    table: &BilliardTable,
    sigma: &SigmaEstimate,
    t: f64,
    params: H2Params,
    n: u64,
    seed: u64,
) -> Result<H2BilliardStatistic> {
    params.validate()?;
    let s_hat = (0.5 * (sigma.sigma[0][0] + sigma.sigma[1][1])).sqrt();
    if !(s_hat > 0.0) {
        return Err(Error::InvalidArgument("need a positive diffusion estimate".into()));
    }
    let rt = t.sqrt();
    // Box in cell units.
    let bx = (s_hat * params.beta * rt).floor() as i64;
    let by = (s_hat * params.xi * rt).floor() as i64;
    if bx < 4 || by < 4 {
        return Err(Error::InvalidArgument("T too small for the cell box".into()));
    }
    let start_row = (s_hat * params.eta * rt).round() as i64;
    let target = [
        (s_hat * params.alpha * rt).round() as i64,
        (s_hat * params.gamma * rt).round() as i64,
    ];
    let edge = edge_spec(table, EdgeAxis::Vertical)?;
    let chunk = 2048u64;
    let results: Vec<(u64, u64)> = (0..n.div_ceil(chunk))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&c| {
            let lo = c * chunk;
            let hi = (lo + chunk).min(n);
            let mut survivors = 0u64;
            let mut hits = 0u64;
            for k in lo..hi {
                let mut rng = rng::stream(seed, salt::VERIFY ^ 0x4832, k);
                let x = crate::billiard::sample_edge_measure(
                    &edge,
                    [0, start_row],
                    crate::billiard::EdgeDir::PlusX,
                    &mut rng,
                );
                let alive = |cell: [i64; 2]| {
                    (0..=bx).contains(&cell[0]) && (0..=by).contains(&cell[1])
                };
                match flow_absorbing(table, &x, t, alive, |_, _| {}) {
                    Ok(AbsorbOutcome::Survived(end)) => {
                        survivors += 1;
                        if (end.cell[0] - target[0]).abs() <= 1 && (end.cell[1] - target[1]).abs() <= 1
                        {
                            hits += 1;
                        }
                    }
                    Ok(AbsorbOutcome::Exited { .. }) => {}
                    Err(_) => {}
                }
            }
            (survivors, hits)
        })
        .collect();
    let (survivors, hits) = results
        .iter()
        .fold((0u64, 0u64), |a, b| (a.0 + b.0, a.1 + b.1));
    if survivors == 0 {
        return Err(Error::InsufficientStatistics(
            "no particle survived the confinement".into(),
        ));
    }
    let p_cell = hits as f64 / (n as f64 * 9.0);
    let se_cell = (p_cell * (1.0 - p_cell) / (n as f64 * 9.0)).sqrt().max(
        // at least the Poisson error of the raw hit count
        (hits.max(1) as f64).sqrt() / (n as f64 * 9.0),
    );
    let scaled = t.powf(1.5) * p_cell;
    let scaled_se = t.powf(1.5) * se_cell;
    Ok(H2BilliardStatistic {
        t,
        params,
        scaled,
        scaled_se,
        c_hat: rt * (survivors as f64 / n as f64),
        kernel_product: params.kernel_product()?,
        survivors,
        hits,
    })
}
