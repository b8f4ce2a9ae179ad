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

//! Lattices, the jump graph, the discretized rectangle `D_L = (L·D) ∩ L`,
//! boundary side sets, escape sets, and the type classification of
//! West-boundary sites.
//!
//! All lattice arithmetic is carried out in exact integer coordinates
//! relative to the basis; real coordinates are derived views. This keeps
//! boundary classification free of rounding drift.

use std::collections::HashMap;

use crate::error::{Error, Result};

const COORD_TOL: f64 = 1e-9;

/// A 2d lattice together with a finite jump set and (for walks) jump weights.
#[derive(Debug, Clone)]
pub struct LatticeSpec {
    /// Basis vectors b1, b2 (columns).
    basis: [[f64; 2]; 2],
    /// Jumps in integer coordinates relative to the basis.
    jumps: Vec<[i64; 2]>,
    /// Jump probabilities; empty for a purely geometric lattice.
    weights: Vec<f64>,
    covolume: f64,
}

impl LatticeSpec {
    /// Build a lattice from basis vectors and jump vectors given in real
    /// coordinates. Weights are required for walk lattices and must form a
    /// zero-mean probability vector.
    pub fn new(b1: [f64; 2], b2: [f64; 2], jumps: &[[f64; 2]], weights: Option<&[f64]>) -> Result<Self> {
        let det = b1[0] * b2[1] - b1[1] * b2[0];
        if det.abs() < 1e-12 {
            return Err(Error::InvalidLattice("basis is singular".into()));
        }
        let mut jumps_int = Vec::with_capacity(jumps.len());
        for (j, w) in jumps.iter().enumerate() {
            // Solve basis * c = w for c and demand near-integers.
            let c0 = (w[0] * b2[1] - w[1] * b2[0]) / det;
            let c1 = (b1[0] * w[1] - b1[1] * w[0]) / det;
            let r0 = c0.round();
            let r1 = c1.round();
            if (c0 - r0).abs() > 1e-6 || (c1 - r1).abs() > 1e-6 {
                return Err(Error::InvalidLattice(format!(
                    "jump {j} = ({}, {}) is not an integer combination of the basis",
                    w[0], w[1]
                )));
            }
            jumps_int.push([r0 as i64, r1 as i64]);
        }
        Self::from_integer_jumps(b1, b2, jumps_int, weights)
    }

    /// Build a lattice with jumps already expressed in integer coordinates.
    pub fn from_integer_jumps(
        b1: [f64; 2],
        b2: [f64; 2],
        jumps: Vec<[i64; 2]>,
        weights: Option<&[f64]>,
    ) -> Result<Self> {
        let det = b1[0] * b2[1] - b1[1] * b2[0];
        if det.abs() < 1e-12 {
            return Err(Error::InvalidLattice("basis is singular".into()));
        }
        if jumps.is_empty() {
            return Err(Error::InvalidLattice("empty jump set".into()));
        }
        if !generates_z2(&jumps) {
            return Err(Error::InvalidLattice(
                "jumps do not generate the lattice (non-unit invariant factors)".into(),
            ));
        }
        let weights = match weights {
            Some(p) => {
                if p.len() != jumps.len() {
                    return Err(Error::InvalidLattice("weights/jumps length mismatch".into()));
                }
                if p.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
                    return Err(Error::InvalidLattice("weights must be non-negative".into()));
                }
                let total: f64 = p.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidLattice(format!("weights sum to {total}, not 1")));
                }
                let mean0: f64 = p.iter().zip(&jumps).map(|(w, c)| w * c[0] as f64).sum();
                let mean1: f64 = p.iter().zip(&jumps).map(|(w, c)| w * c[1] as f64).sum();
                if mean0.abs() > 1e-12 || mean1.abs() > 1e-12 {
                    return Err(Error::InvalidLattice(format!(
                        "jump law has non-zero mean ({mean0:.3e}, {mean1:.3e})"
                    )));
                }
                p.to_vec()
            }
            None => Vec::new(),
        };
        Ok(Self {
            basis: [b1, b2],
            jumps,
            weights,
            covolume: det.abs(),
        })
    }

    /// Square lattice with nearest-neighbor jumps, weight 1/4 each.
    pub fn square_nn() -> Self {
        Self::from_integer_jumps(
            [1.0, 0.0],
            [0.0, 1.0],
            vec![[1, 0], [-1, 0], [0, 1], [0, -1]],
            Some(&[0.25; 4]),
        )
        .expect("static lattice")
    }

    pub fn basis(&self) -> [[f64; 2]; 2] {
        self.basis
    }

    pub fn covolume(&self) -> f64 {
        self.covolume
    }

    pub fn num_jumps(&self) -> usize {
        self.jumps.len()
    }

    pub fn jumps_int(&self) -> &[[i64; 2]] {
        &self.jumps
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Real position of the site with integer coordinates `c`.
    #[inline]
    pub fn position(&self, c: [i64; 2]) -> [f64; 2] {
        [
            self.basis[0][0] * c[0] as f64 + self.basis[1][0] * c[1] as f64,
            self.basis[0][1] * c[0] as f64 + self.basis[1][1] * c[1] as f64,
        ]
    }

    /// Real jump vector of jump `j`.
    pub fn jump_vector(&self, j: usize) -> [f64; 2] {
        self.position(self.jumps[j])
    }

    /// Fractional integer coordinates of an arbitrary point.
    pub fn coords(&self, z: [f64; 2]) -> [f64; 2] {
        let [b1, b2] = self.basis;
        let det = b1[0] * b2[1] - b1[1] * b2[0];
        [
            (z[0] * b2[1] - z[1] * b2[0]) / det,
            (b1[0] * z[1] - b1[1] * z[0]) / det,
        ]
    }

    /// The rounding map `⟨z⟩`: the closest site `l` with `l_1 >= z_1`, ties
    /// broken by lexicographic minimum of `(l_1, l_2)`.
    pub fn round_to_lattice(&self, z: [f64; 2]) -> [i64; 2] {
        let c = self.coords(z);
        let (c0, c1) = (c[0].round() as i64, c[1].round() as i64);
        let mut best: Option<([i64; 2], [f64; 2], f64)> = None;
        // A 9x9 window around the nominal coordinates always contains the
        // optimum for the sane bases used here.
        for a in c0 - 4..=c0 + 4 {
            for b in c1 - 4..=c1 + 4 {
                let site = [a, b];
                let p = self.position(site);
                if p[0] < z[0] - COORD_TOL {
                    continue;
                }
                let d2 = (p[0] - z[0]).powi(2) + (p[1] - z[1]).powi(2);
                let better = match &best {
                    None => true,
                    Some((_, bp, bd2)) => {
                        if d2 + COORD_TOL < *bd2 {
                            true
                        } else if (d2 - *bd2).abs() <= COORD_TOL {
                            // Lexicographic tie-break on real coordinates.
                            p[0] < bp[0] - COORD_TOL
                                || ((p[0] - bp[0]).abs() <= COORD_TOL && p[1] < bp[1] - COORD_TOL)
                        } else {
                            false
                        }
                    }
                };
                if better {
                    best = Some((site, p, d2));
                }
            }
        }
        best.expect("rounding window non-empty").0
    }
}

/// Invariant-factor test: integer jump vectors generate Z^2 exactly when the
/// gcd of all entries and the gcd of all 2x2 minors are both 1.
fn generates_z2(jumps: &[[i64; 2]]) -> bool {
    fn gcd(a: i64, b: i64) -> i64 {
        let (mut a, mut b) = (a.abs(), b.abs());
        while b != 0 {
            let t = a % b;
            a = b;
            b = t;
        }
        a
    }
    let mut g1 = 0;
    for c in jumps {
        g1 = gcd(g1, c[0]);
        g1 = gcd(g1, c[1]);
    }
    if g1 != 1 {
        return false;
    }
    let mut g2 = 0;
    for i in 0..jumps.len() {
        for j in i + 1..jumps.len() {
            let m = jumps[i][0] * jumps[j][1] - jumps[i][1] * jumps[j][0];
            g2 = gcd(g2, m);
        }
    }
    g2 == 1
}

/// The rectangle `D = [0, A] × [0, 1]` scaled by `L`.
#[derive(Debug, Clone, Copy)]
pub struct DomainSpec {
    pub aspect: f64,
    pub scale: f64,
}

impl DomainSpec {
    pub fn new(aspect: f64, scale: f64) -> Result<Self> {
        if !(aspect > 0.0) || !(scale > 0.0) {
            return Err(Error::InvalidArgument("aspect and scale must be positive".into()));
        }
        Ok(Self { aspect, scale })
    }

    pub fn square(scale: f64) -> Result<Self> {
        Self::new(1.0, scale)
    }

    /// Width `A·L` and height `L` of the scaled rectangle.
    pub fn extent(&self) -> [f64; 2] {
        [self.aspect * self.scale, self.scale]
    }

    #[inline]
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let [w, h] = self.extent();
        p[0] >= -COORD_TOL && p[0] <= w + COORD_TOL && p[1] >= -COORD_TOL && p[1] <= h + COORD_TOL
    }
}

/// One side of the rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Side {
    West,
    South,
    East,
    North,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::West, Side::South, Side::East, Side::North];

    pub fn mask(self) -> u8 {
        match self {
            Side::West => SideMask::WEST,
            Side::South => SideMask::SOUTH,
            Side::East => SideMask::EAST,
            Side::North => SideMask::NORTH,
        }
    }

    /// Coordinate of a boundary point running along this side.
    pub fn along(self, p: [f64; 2]) -> f64 {
        match self {
            Side::West | Side::East => p[1],
            Side::South | Side::North => p[0],
        }
    }

    pub fn index(self) -> usize {
        match self {
            Side::West => 0,
            Side::South => 1,
            Side::East => 2,
            Side::North => 3,
        }
    }
}

/// Which side(s) of the rectangle a boundary site belongs to. Corner sites
/// carry two flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SideMask(pub u8);

impl SideMask {
    pub const WEST: u8 = 1;
    pub const SOUTH: u8 = 2;
    pub const EAST: u8 = 4;
    pub const NORTH: u8 = 8;

    pub fn west(self) -> bool {
        self.0 & Self::WEST != 0
    }
    pub fn south(self) -> bool {
        self.0 & Self::SOUTH != 0
    }
    pub fn east(self) -> bool {
        self.0 & Self::EAST != 0
    }
    pub fn north(self) -> bool {
        self.0 & Self::NORTH != 0
    }
    pub fn count(self) -> u32 {
        self.0.count_ones()
    }
}

/// A boundary site with its escape set.
#[derive(Debug, Clone)]
pub struct BoundarySite {
    /// Index into `DomainSites::sites`.
    pub site: usize,
    /// Bitmask over jump indices `j` with `l + w_j ∉ D_L`.
    pub escape: u32,
    pub sides: SideMask,
}

impl BoundarySite {
    pub fn escape_set(&self) -> impl Iterator<Item = usize> + '_ {
        (0..32).filter(move |j| self.escape & (1 << j) != 0)
    }

    pub fn escape_len(&self) -> u32 {
        self.escape.count_ones()
    }
}

/// The discretization `D_L` of a rectangle: site list, index map, boundary
/// sites with escape sets and side classification.
#[derive(Debug, Clone)]
pub struct DomainSites {
    pub lattice: LatticeSpec,
    pub domain: DomainSpec,
    /// All sites in canonical order (by integer coords, b then a).
    sites: Vec<[i64; 2]>,
    index: HashMap<[i64; 2], usize>,
    boundary: Vec<BoundarySite>,
}

/// Enumerate `D_L`, classify its boundary and compute escape sets `J(l)`.
pub fn boundary_sets(domain: DomainSpec, lattice: &LatticeSpec) -> Result<DomainSites> {
    let [w, h] = domain.extent();
    // Bounding box in integer coordinates: map the four rectangle corners.
    let corners = [[0.0, 0.0], [w, 0.0], [0.0, h], [w, h]];
    let mut amin = i64::MAX;
    let mut amax = i64::MIN;
    let mut bmin = i64::MAX;
    let mut bmax = i64::MIN;
    for z in corners {
        let c = lattice.coords(z);
        amin = amin.min(c[0].floor() as i64 - 1);
        amax = amax.max(c[0].ceil() as i64 + 1);
        bmin = bmin.min(c[1].floor() as i64 - 1);
        bmax = bmax.max(c[1].ceil() as i64 + 1);
    }
    let mut sites = Vec::new();
    for b in bmin..=bmax {
        for a in amin..=amax {
            if domain.contains(lattice.position([a, b])) {
                sites.push([a, b]);
            }
        }
    }
    if sites.is_empty() {
        return Err(Error::DomainTooSmall(format!(
            "no lattice sites in [0,{w}] x [0,{h}]"
        )));
    }
    let index: HashMap<[i64; 2], usize> = sites.iter().enumerate().map(|(i, &s)| (s, i)).collect();

    let mut boundary = Vec::new();
    for (i, &site) in sites.iter().enumerate() {
        let mut escape = 0u32;
        let mut sides = SideMask::default();
        for (j, wj) in lattice.jumps_int().iter().enumerate() {
            let nb = [site[0] + wj[0], site[1] + wj[1]];
            if index.contains_key(&nb) {
                continue;
            }
            escape |= 1 << j;
            let p = lattice.position(nb);
            if p[0] < -COORD_TOL {
                sides.0 |= SideMask::WEST;
            }
            if p[0] > w + COORD_TOL {
                sides.0 |= SideMask::EAST;
            }
            if p[1] < -COORD_TOL {
                sides.0 |= SideMask::SOUTH;
            }
            if p[1] > h + COORD_TOL {
                sides.0 |= SideMask::NORTH;
            }
        }
        if escape != 0 {
            boundary.push(BoundarySite { site: i, escape, sides });
        }
    }
    Ok(DomainSites {
        lattice: lattice.clone(),
        domain,
        sites,
        index,
        boundary,
    })
}

impl DomainSites {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[[i64; 2]] {
        &self.sites
    }

    pub fn site(&self, i: usize) -> [i64; 2] {
        self.sites[i]
    }

    pub fn position(&self, i: usize) -> [f64; 2] {
        self.lattice.position(self.sites[i])
    }

    pub fn index_of(&self, c: [i64; 2]) -> Option<usize> {
        self.index.get(&c).copied()
    }

    pub fn contains_site(&self, c: [i64; 2]) -> bool {
        self.index.contains_key(&c)
    }

    pub fn boundary(&self) -> &[BoundarySite] {
        &self.boundary
    }

    /// Escape set of a boundary site, as a bitmask; `0` for interior sites.
    pub fn escape_mask(&self, c: [i64; 2]) -> Option<u32> {
        let i = self.index_of(c)?;
        Some(
            self.boundary
                .iter()
                .find(|b| b.site == i)
                .map(|b| b.escape)
                .unwrap_or(0),
        )
    }

    /// Sites of one side, sorted by the coordinate running along that side.
    pub fn side_sites(&self, side: u8) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .boundary
            .iter()
            .filter(|b| b.sides.0 & side != 0)
            .map(|b| b.site)
            .collect();
        let along = |i: &usize| -> f64 {
            let p = self.position(*i);
            if side == SideMask::WEST || side == SideMask::EAST {
                p[1]
            } else {
                p[0]
            }
        };
        v.sort_by(|a, b| along(a).partial_cmp(&along(b)).unwrap());
        v
    }
}

/// Outcome of the type classification: either a table or the reason the
/// vertical rational dependence hypothesis could not be established.
#[derive(Debug, Clone)]
pub enum ClassifyOutcome {
    Table(TypeTable),
    H1Fails { axis: Axis, bound: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Types along the West boundary (zero first coordinate recurrence).
    Vertical,
    /// The swapped-axis variant along the South boundary.
    Horizontal,
}

/// Period and type assignment of the boundary enumeration.
#[derive(Debug, Clone)]
pub struct TypeTable {
    pub axis: Axis,
    /// The period `K`.
    pub period: usize,
    /// Height of one period, the coordinate of the `K`-th enumerated site.
    pub b_height: f64,
    /// Type (1..=K) of each enumerated boundary site.
    pub assignment: HashMap<[i64; 2], usize>,
    /// Periods for both axes when the lattice is rational; `None` when the
    /// search found no vanishing coordinate.
    pub k1: Option<usize>,
    pub k2: Option<usize>,
}

const H1_SEARCH_BOUND: i64 = 64;

/// Lattice-level search for a non-zero site with vanishing coordinate `axis`.
/// Returns the minimal positive other-coordinate among them.
pub fn minimal_zero_coordinate(lattice: &LatticeSpec, axis: Axis) -> Option<f64> {
    let mut best: Option<f64> = None;
    for a in -H1_SEARCH_BOUND..=H1_SEARCH_BOUND {
        for b in -H1_SEARCH_BOUND..=H1_SEARCH_BOUND {
            if a == 0 && b == 0 {
                continue;
            }
            let p = lattice.position([a, b]);
            let (zeroed, other) = match axis {
                Axis::Vertical => (p[0], p[1]),
                Axis::Horizontal => (p[1], p[0]),
            };
            if zeroed.abs() <= COORD_TOL * (1.0 + a.abs().max(b.abs()) as f64) && other > COORD_TOL {
                best = Some(match best {
                    None => other,
                    Some(cur) => cur.min(other),
                });
            }
        }
    }
    best
}

/// Classify boundary sites into types along the given axis.
///
/// The West (resp. South) boundary sites are enumerated in increasing order
/// of the second (resp. first) coordinate, ties broken by the other
/// coordinate; `K` is the least positive index whose first (resp. second)
/// coordinate returns to that of the initial site, and types are assigned
/// cyclically.
pub fn classify_types(sites: &DomainSites, axis: Axis) -> Result<ClassifyOutcome> {
    if minimal_zero_coordinate(&sites.lattice, axis).is_none() {
        return Ok(ClassifyOutcome::H1Fails {
            axis,
            bound: H1_SEARCH_BOUND,
        });
    }
    let side = match axis {
        Axis::Vertical => SideMask::WEST,
        Axis::Horizontal => SideMask::SOUTH,
    };
    let mut enumerated: Vec<[i64; 2]> = sites
        .side_sites(side)
        .iter()
        .map(|&i| sites.site(i))
        .collect();
    if enumerated.len() < 2 {
        return Err(Error::DomainTooSmall(
            "need at least two boundary sites to classify types".into(),
        ));
    }
    let key = |c: &[i64; 2]| -> (f64, f64) {
        let p = sites.lattice.position(*c);
        match axis {
            Axis::Vertical => (p[1], p[0]),
            Axis::Horizontal => (p[0], p[1]),
        }
    };
    enumerated.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());

    let first = key(&enumerated[0]).1;
    let mut period = None;
    for (j, c) in enumerated.iter().enumerate().skip(1) {
        if (key(c).1 - first).abs() <= COORD_TOL {
            period = Some(j);
            break;
        }
    }
    let Some(k) = period else {
        return Ok(ClassifyOutcome::H1Fails {
            axis,
            bound: H1_SEARCH_BOUND,
        });
    };
    let b_height = key(&enumerated[k]).0 - key(&enumerated[0]).0;
    let mut assignment = HashMap::new();
    for (j, c) in enumerated.iter().enumerate() {
        assignment.insert(*c, (j % k) + 1);
    }
    let k1 = lattice_period(&sites.lattice, Axis::Vertical);
    let k2 = lattice_period(&sites.lattice, Axis::Horizontal);
    Ok(ClassifyOutcome::Table(TypeTable {
        axis,
        period: k,
        b_height,
        assignment,
        k1,
        k2,
    }))
}

/// Lattice-level period: how many boundary sites fit in one vertical (resp.
/// horizontal) period. Derived from a probe domain large enough to contain
/// several periods.
fn lattice_period(lattice: &LatticeSpec, axis: Axis) -> Option<usize> {
    let b = minimal_zero_coordinate(lattice, axis)?;
    let span = lattice.jumps_int().iter().map(|c| {
        let p = lattice.position(*c);
        p[0].abs().max(p[1].abs())
    });
    let reach = span.fold(0.0f64, f64::max);
    let scale = (8.0 * b).max(8.0 * reach).max(4.0);
    let domain = DomainSpec::square(scale).ok()?;
    let sites = boundary_sets(domain, lattice).ok()?;
    let side = match axis {
        Axis::Vertical => SideMask::WEST,
        Axis::Horizontal => SideMask::SOUTH,
    };
    let mut enumerated: Vec<[i64; 2]> = sites.side_sites(side).iter().map(|&i| sites.site(i)).collect();
    let key = |c: &[i64; 2]| -> (f64, f64) {
        let p = lattice.position(*c);
        match axis {
            Axis::Vertical => (p[1], p[0]),
            Axis::Horizontal => (p[0], p[1]),
        }
    };
    enumerated.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
    // Drop sites within one jump-reach of the far corners so the bulk period
    // is not polluted by corner effects.
    let lo = reach + COORD_TOL;
    let hi = scale - reach - COORD_TOL;
    let bulk: Vec<[i64; 2]> = enumerated
        .into_iter()
        .filter(|c| {
            let along = key(c).0;
            along > lo && along < hi
        })
        .collect();
    if bulk.len() < 3 {
        return None;
    }
    let first = key(&bulk[0]).1;
    bulk.iter()
        .enumerate()
        .skip(1)
        .find(|(_, c)| (key(c).1 - first).abs() <= COORD_TOL)
        .map(|(j, _)| j)
}
