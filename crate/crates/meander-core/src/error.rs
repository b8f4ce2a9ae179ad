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

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("domain too small: {0}")]
    DomainTooSmall(String),

    #[error("vertical rational dependence undetermined within search bound |a|,|b| <= {bound}")]
    H1Undetermined { bound: i64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point {0:?} is outside the domain")]
    OutOfDomain([f64; 2]),

    #[error("site {0:?} is not on the requested boundary")]
    NotOnBoundary([i64; 2]),

    #[error("solver did not converge: residual {residual:.3e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },

    #[error("series truncation tail {tail:.3e} exceeds tolerance {tol:.3e}")]
    TailTooLarge { tail: f64, tol: f64 },

    #[error("scatterers {0} and {1} overlap (center distance {dist:.6} < radius sum {rsum:.6})", dist = .2, rsum = .3)]
    OverlappingDisks(usize, usize, f64, f64),

    #[error("finite-horizon validation failed: free flight {flight:.3} exceeds bound {bound:.3} along direction ({vx:.6}, {vy:.6})")]
    HorizonViolation {
        flight: f64,
        bound: f64,
        vx: f64,
        vy: f64,
    },

    #[error("billiard table invalid: no scatterer hit within {0:.3} time units")]
    LostTrajectory(f64),

    #[error("estimated memory for {states} states exceeds cap; use a smaller T or L")]
    MemoryEstimate { states: usize },

    #[error("insufficient statistics: {0}")]
    InsufficientStatistics(String),

    #[error("truncation error {err:.3e} above {tol:.3e} in exact survival mode")]
    SurvivalTruncation { err: f64, tol: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Other(String),
}
