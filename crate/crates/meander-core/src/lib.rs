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

//! Non-interacting particles injected through the boundary of a large
//! rectangle and absorbed on exit, with two bulk dynamics: a continuous-time
//! lattice random walk and a periodic finite-horizon Lorentz gas.
//!
//! The crate has three layers:
//!
//! - dynamics: [`walk`] (exact absorbed propagators, path simulation) and
//!   [`billiard`] (event-driven Lorentz gas with table validation),
//! - analytics: [`kernels`] (absorbed-Brownian and meander densities, the
//!   limiting-density series, finite-difference PDE oracles),
//! - checks: [`verify`] turns the limit statements relating the two layers
//!   into computable pass/fail statistics.
//!
//! [`geometry`] holds the shared lattice/domain discretization and
//! [`injection`] the Poisson boundary source.

pub mod billiard;
pub mod error;
pub mod field;
pub mod geometry;
pub mod injection;
pub mod kernels;
pub mod rng;
pub mod verify;
pub mod walk;

pub use error::{Error, Result};
pub use field::DensityField;
