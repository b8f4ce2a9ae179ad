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

//! Test batteries turning the limit statements into computable pass/fail
//! statistics: boundary-type classification, the conditional local invariance
//! scaling, moderate-deviation windows, the hydrostatic/hydrodynamic density
//! comparison, local-equilibrium Poissonity, and the duality cross-checks.

mod duality;
mod h2;
mod h3;
mod le;
mod theorem1;

pub use duality::{
    billiard_boundary_mc, duality_billiard, duality_walk, BilliardDualityReport, BilliardMcSetup,
    McOccupancy, WalkDualityReport,
};
pub use h2::{h2_billiard, h2_walk, ssrw_c1, H2BilliardStatistic, H2Params, H2Statistic};
pub use h3::{h3_integral, H3Report};
pub use le::{le_poissonity_billiard, le_poissonity_walk, LEConfig, LEReport, PhasePredicate};
pub use theorem1::{theorem1_billiard, theorem1_walk, Theorem1Report};

use serde::Serialize;

use crate::error::Result;
use crate::geometry::{boundary_sets, classify_types, Axis, ClassifyOutcome, DomainSpec, LatticeSpec};

/// One line of a verification report.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub statistic: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckReport {
    pub fn new(check: impl Into<String>, statistic: f64, reference: f64, tolerance: f64) -> Self {
        let pass = (statistic - reference).abs() <= tolerance;
        Self {
            check: check.into(),
            statistic,
            reference,
            tolerance,
            pass,
        }
    }

    /// A check that passes when the statistic is at most the tolerance.
    pub fn bounded(check: impl Into<String>, statistic: f64, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            statistic,
            reference: 0.0,
            tolerance,
            pass: statistic.abs() <= tolerance,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialization")
    }
}

/// Outcome of the vertical-rational-dependence check on a lattice.
#[derive(Debug, Clone)]
pub struct H1Report {
    pub k1: Option<usize>,
    pub k2: Option<usize>,
    pub outcome: ClassifyOutcome,
}

/// Classify boundary types on a probe domain; reports the periods for both
/// axes or the failure diagnostic.
pub fn check_h1(lattice: &LatticeSpec) -> Result<H1Report> {
    let span = lattice
        .jumps_int()
        .iter()
        .map(|c| {
            let p = lattice.position(*c);
            p[0].abs().max(p[1].abs())
        })
        .fold(1.0f64, f64::max);
    let domain = DomainSpec::square(16.0 * span)?;
    let sites = boundary_sets(domain, lattice)?;
    let outcome = classify_types(&sites, Axis::Vertical)?;
    let (k1, k2) = match &outcome {
        ClassifyOutcome::Table(t) => (t.k1, t.k2),
        ClassifyOutcome::H1Fails { .. } => (None, None),
    };
    Ok(H1Report { k1, k2, outcome })
}
