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

//! The hydrostatic/hydrodynamic limit comparison: exact (or Monte Carlo)
//! expected occupancy against the kernel-series density.

use crate::billiard::{BilliardTable, SigmaEstimate};
use crate::error::{Error, Result};
use crate::geometry::{boundary_sets, DomainSpec, Side};
use crate::injection::InjectionSpec;
use crate::kernels::{series_extrapolated, SeriesTruncation};
use crate::verify::duality::{billiard_boundary_mc, BilliardMcSetup};
use crate::walk::{occupancy_stationary, occupancy_transient, AbsorbedChain, WalkModel};

#[derive(Debug, Clone)]
pub struct Theorem1Report {
    pub l: f64,
    /// Macroscopic time; `None` is the stationary limit.
    pub t: Option<f64>,
    pub z: [f64; 2],
    /// Expected occupancy at `⟨zL⟩`.
    pub occupancy: f64,
    /// Kernel-series prediction `u(z)` or `v(t, z)` with the given `ς`.
    pub prediction: f64,
    pub relative_error: f64,
    /// Monte Carlo standard error; zero for the exact walk route.
    pub std_error: f64,
}

/// Exact occupancy for a walk against the kernel series. The injection must
/// be one-sided (West) with `B ≡ 1`; `sigma` is the profile constant `ς`.
pub fn theorem1_walk(
    model: &WalkModel,
    injection: &InjectionSpec,
    l: f64,
    t: Option<f64>,
    z: [f64; 2],
    sigma: f64,
) -> Result<Theorem1Report> {
    if !(z[0] > 0.0 && z[0] < 1.0 && z[1] > 0.0 && z[1] < 1.0) {
        return Err(Error::OutOfDomain(z));
    }
    let domain = DomainSpec::square(l)?;
    let sites = boundary_sets(domain, model.lattice())?;
    let chain = AbsorbedChain::forward(&sites, model);
    let src = injection.source_vector(&sites);
    let field = match t {
        None => occupancy_stationary(&chain, &src)?,
        Some(t) => occupancy_transient(&chain, &src, t * l * l)?,
    };
    let target = model.lattice().round_to_lattice([z[0] * l, z[1] * l]);
    let occupancy = field
        .value_at(target)
        .ok_or(Error::OutOfDomain([z[0] * l, z[1] * l]))?;

    let profile = injection
        .profile(Side::West)
        .ok_or_else(|| Error::InvalidArgument("theorem1 expects a West profile".into()))?;
    let prediction = series_extrapolated(t, z, profile, sigma, SeriesTruncation::default())?;
    let denom = prediction.abs().max(1e-300);
    Ok(Theorem1Report {
        l,
        t,
        z,
        occupancy,
        prediction,
        relative_error: (occupancy - prediction).abs() / denom,
        std_error: 0.0,
    })
}

/// Monte Carlo occupancy for the billiard with the flux injection (`ς = 1`),
/// against the kernel series.
#[allow(clippy::too_many_arguments)]
pub fn theorem1_billiard(
    table: &BilliardTable,
    sigma_est: &SigmaEstimate,
    profile_west: impl Fn(f64) -> f64 + Sync,
    l: f64,
    z: [f64; 2],
    n: u64,
    seed: u64,
) -> Result<Theorem1Report> {
    let setup = BilliardMcSetup::new(table, sigma_est, l)?;
    let mc = billiard_boundary_mc(table, &setup, &profile_west, z, n, seed)?;
    let profile = crate::kernels::BoundaryProfile::from_fn(Side::West, 512, 1.0, 0.02, &profile_west)?;
    let prediction = series_extrapolated(None, z, &profile, 1.0, SeriesTruncation::default())?;
    let denom = prediction.abs().max(1e-300);
    Ok(Theorem1Report {
        l: setup.effective_l(),
        t: None,
        z,
        occupancy: mc.estimate,
        prediction,
        relative_error: (mc.estimate - prediction).abs() / denom,
        std_error: mc.std_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::injection::{ATable, PeriodicFn};
    use crate::kernels::BoundaryProfile;

    fn sin_injection() -> InjectionSpec {
        let model = WalkModel::ssrw();
        InjectionSpec::new(ATable::spec_a(model.weights()), PeriodicFn::constant(), None)
            .with_profile(
                BoundaryProfile::from_fn(Side::West, 1024, 1.0, 0.02, |y| {
                    (std::f64::consts::PI * y).sin()
                })
                .unwrap(),
            )
    }

    #[test]
    fn zero_profile_gives_zero_on_both_sides() {
        let model = WalkModel::ssrw();
        let spec = InjectionSpec::new(
            ATable::spec_a(model.weights()),
            PeriodicFn::constant(),
            None,
        )
        .with_profile(BoundaryProfile::zero(Side::West));
        let r = theorem1_walk(&model, &spec, 24.0, None, [0.5, 0.5], 1.0).unwrap();
        assert_eq!(r.occupancy, 0.0);
        assert_eq!(r.prediction, 0.0);
    }

    #[test]
    fn stationary_occupancy_converges_to_kernel_series() {
        // The absorbing boundary of the discrete chain sits one lattice
        // spacing outside the last site row, so the finite-L defect is
        // O(1/L) with constant ~2√2; check magnitude and the halving trend.
        let model = WalkModel::ssrw();
        let spec = sin_injection();
        let coarse = theorem1_walk(&model, &spec, 32.0, None, [0.5, 0.5], 1.0).unwrap();
        let fine = theorem1_walk(&model, &spec, 96.0, None, [0.5, 0.5], 1.0).unwrap();
        assert!(coarse.relative_error < 0.25, "rel {}", coarse.relative_error);
        assert!(fine.relative_error < 0.06, "rel {}", fine.relative_error);
        assert!(fine.relative_error < 0.6 * coarse.relative_error);
    }

    #[test]
    fn transient_occupancy_converges_to_kernel_series() {
        let model = WalkModel::ssrw();
        let spec = sin_injection();
        let coarse = theorem1_walk(&model, &spec, 32.0, Some(0.5), [0.5, 0.5], 1.0).unwrap();
        let fine = theorem1_walk(&model, &spec, 96.0, Some(0.5), [0.5, 0.5], 1.0).unwrap();
        assert!(coarse.relative_error < 0.25, "rel {}", coarse.relative_error);
        assert!(fine.relative_error < 0.06, "rel {}", fine.relative_error);
    }
}
