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

//! Deterministic RNG stream derivation.
//!
//! Every randomized routine takes a `(seed, salt, index)` triple and derives
//! an independent ChaCha8 stream from it, so results do not depend on worker
//! count or scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; good avalanche for combining seed material.
#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent stream for a (salt, index) pair under one master seed.
pub fn stream(seed: u64, salt: u64, index: u64) -> ChaCha8Rng {
    let key = mix(mix(seed ^ salt.rotate_left(17)).wrapping_add(index));
    ChaCha8Rng::seed_from_u64(key)
}

/// Salts for the independent subsystems, so identical indices never collide.
pub mod salt {
    pub const INJECTION: u64 = 0x494e_4a45_4354;
    pub const WALK: u64 = 0x57_414c_4b;
    pub const BILLIARD: u64 = 0x42_494c_4c;
    pub const VERIFY: u64 = 0x5645_5249_4659;
}
