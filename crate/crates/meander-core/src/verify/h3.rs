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

//! The moderate-deviation window integral: the time spent at a macroscopic
//! target outside the diffusive window `[δL², L²/δ]`, under horizontal-strip
//! survival. For axis-aligned nearest-neighbor jump laws the coordinates are
//! independent, so the strip-confined factor diagonalizes exactly and the
//! free factor is a Skellam point mass.

use crate::error::{Error, Result};
use crate::kernels::special::bessel_i_scaled;
use crate::walk::WalkModel;

#[derive(Debug, Clone)]
pub struct H3Report {
    pub l: f64,
    pub delta: f64,
    pub z: [f64; 2],
    /// `L ∫_{[0, δL²]} ...dt`.
    pub early: f64,
    /// `L ∫_{[L²/δ, T_cap]} ...dt`.
    pub late: f64,
    /// Sum of both windows.
    pub value: f64,
    /// `L ∫_0^{T_cap}`: the full-time integral the windows are compared to.
    pub full: f64,
    /// Bound on the neglected tail beyond the cap.
    pub tail_bound: f64,
}

/// The 1d strip chain: symmetric nearest-neighbor steps at probability `p`
/// per side, absorbing outside `0..n-1`. Diagonalized in closed form.
struct StripChain {
    n: usize,
    p: f64,
}

impl StripChain {
    /// `P(X_t = a·δx, strip survival | X_0 = start)` via the sine basis.
    fn density(&self, start: usize, a: usize, t: f64) -> f64 {
        let n = self.n as f64;
        let mut sum = 0.0;
        for m in 1..=self.n {
            let theta = m as f64 * std::f64::consts::PI / (n + 1.0);
            let rate = 2.0 * self.p * (1.0 - theta.cos());
            let vm_start = (theta * (start as f64 + 1.0)).sin();
            let vm_a = (theta * (a as f64 + 1.0)).sin();
            sum += 2.0 / (n + 1.0) * vm_start * vm_a * (-rate * t).exp();
        }
        sum
    }

    fn spectral_gap(&self) -> f64 {
        let theta = std::f64::consts::PI / (self.n as f64 + 1.0);
        2.0 * self.p * (1.0 - theta.cos())
    }
}

/// Decompose the jump law into independent axis projections; requires every
/// jump to move exactly one coordinate by a common magnitude.
fn axis_decomposition(model: &WalkModel) -> Result<(f64, f64, f64, f64)> {
    let lat = model.lattice();
    let mut dx: Option<f64> = None;
    let mut dy: Option<f64> = None;
    let mut px = 0.0;
    let mut py = 0.0;
    for j in 0..lat.num_jumps() {
        let w = lat.jump_vector(j);
        let ax = w[0].abs() > 1e-12;
        let ay = w[1].abs() > 1e-12;
        if ax == ay {
            return Err(Error::InvalidArgument(
                "exact mode needs axis-aligned nearest-neighbor jumps".into(),
            ));
        }
        if ax {
            match dx {
                None => dx = Some(w[0].abs()),
                Some(d) if (d - w[0].abs()).abs() < 1e-12 => {}
                _ => {
                    return Err(Error::InvalidArgument(
                        "exact mode needs a single horizontal step size".into(),
                    ))
                }
            }
            px += model.weights()[j] / 2.0;
        } else {
            match dy {
                None => dy = Some(w[1].abs()),
                Some(d) if (d - w[1].abs()).abs() < 1e-12 => {}
                _ => {
                    return Err(Error::InvalidArgument(
                        "exact mode needs a single vertical step size".into(),
                    ))
                }
            }
            py += model.weights()[j] / 2.0;
        }
    }
    match (dx, dy) {
        (Some(dx), Some(dy)) if px > 0.0 && py > 0.0 => Ok((dx, dy, px, py)),
        _ => Err(Error::InvalidArgument("degenerate axis decomposition".into())),
    }
}

/// `L ∫ P(Z_t = ⟨zL⟩, horizontal-strip survival) dt` over the window
/// `[0, δL²] ∪ [L²/δ, T_cap]`, plus the full-time integral for comparison.
pub fn h3_integral(model: &WalkModel, l: f64, delta: f64, z: [f64; 2]) -> Result<H3Report> {
    if !(z[0] > 0.0 && z[0] < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target x must lie in (0,1); got {}",
            z[0]
        )));
    }
    if !(delta > 0.0 && delta < 1.0) || !(l > 0.0) {
        return Err(Error::InvalidArgument("need 0 < delta < 1 and L > 0".into()));
    }
    if l > 80.0 {
        return Err(Error::MemoryEstimate {
            states: (l * l) as usize,
        });
    }
    let (dx, dy, px, py) = axis_decomposition(model)?;
    // Strip columns: x ∈ [0, L].
    let n = (l / dx).floor() as usize + 1;
    let strip = StripChain { n, p: px };
    let target = model.lattice().round_to_lattice([z[0] * l, z[1] * l]);
    let pos = model.lattice().position(target);
    let a = (pos[0] / dx).round() as usize;
    let my = (pos[1] / dy).round().abs() as usize;
    if a >= n {
        return Err(Error::OutOfDomain(pos));
    }
    let start = 0usize; // the origin column

    let gap = strip.spectral_gap();
    let t_lo = delta * l * l;
    let t_hi = l * l / delta;
    let t_cap = t_hi + 45.0 / gap;
    let integrand = |t: f64| -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let g = strip.density(start, a, t);
        let q = bessel_i_scaled(my, 2.0 * py * t);
        l * g * q
    };
    let early = simpson(&integrand, 0.0, t_lo, 3000);
    let late = simpson(&integrand, t_hi, t_cap, 4000);
    let full = early + simpson(&integrand, t_lo, t_hi, 8000) + late;
    // Beyond the cap the strip factor decays like e^{-gap t}.
    let tail_bound = l * (-gap * t_cap).exp() / gap;
    Ok(H3Report {
        l,
        delta,
        z,
        early,
        late,
        value: early + late,
        full,
        tail_bound,
    })
}

fn simpson(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let panels = if panels % 2 == 0 { panels } else { panels + 1 };
    let h = (hi - lo) / panels as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(lo + h * i as f64);
    }
    s * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{boundary_sets, DomainSpec};
    use crate::walk::AbsorbedChain;

    #[test]
    fn strip_density_matches_uniformization() {
        // Independent route: the 2d absorbed chain on a tall box only
        // constrains x when the box height is effectively infinite; compare
        // the product of strip density and Skellam factor against the 2d
        // uniformization on a wide-in-y box.
        let model = WalkModel::ssrw();
        let l = 12.0;
        let (dx, dy, px, py) = axis_decomposition(&model).unwrap();
        assert!((dx - 2f64.sqrt()).abs() < 1e-12);
        assert!((dy - 2f64.sqrt()).abs() < 1e-12);
        assert!((px - 0.25).abs() < 1e-12 && (py - 0.25).abs() < 1e-12);
        let n = (l / dx).floor() as usize + 1;
        let strip = StripChain { n, p: px };
        let t = 30.0;

        // 2d box [0, L] x [0, H] with H large enough that y-absorption by
        // time t is negligible when starting mid-height.
        let h = 160.0;
        let domain = DomainSpec::new(l / h, h).unwrap();
        let sites = boundary_sets(domain, model.lattice()).unwrap();
        let chain = AbsorbedChain::forward(&sites, &model);
        let start_site = model.lattice().round_to_lattice([0.0, h / 2.0]);
        let mut p0 = vec![0.0; sites.len()];
        p0[sites.index_of(start_site).unwrap()] = 1.0;
        let dist = crate::walk::distribution_at(&chain, &p0, t).unwrap();

        for (a, m) in [(2usize, 0i64), (3, 2), (5, -3)] {
            let target = [a as i64, start_site[1] + m];
            let idx = sites.index_of(target).unwrap();
            let product =
                strip.density(0, a, t) * bessel_i_scaled(m.unsigned_abs() as usize, 2.0 * py * t);
            assert!(
                (dist[idx] - product).abs() < 1e-10,
                "factorization at ({a},{m}): 2d {} vs product {}",
                dist[idx],
                product
            );
        }
    }

    #[test]
    fn h3_window_shrinks_with_delta() {
        let model = WalkModel::ssrw();
        let l = 24.0;
        let mut prev = f64::INFINITY;
        for &d in &[0.1, 0.05, 0.025] {
            let r = h3_integral(&model, l, d, [0.5, 0.5]).unwrap();
            assert!(r.value < prev, "window value not decreasing at delta={d}");
            assert!(r.tail_bound < 1e-10);
            prev = r.value;
        }
    }

    #[test]
    fn h3_window_is_small_fraction_of_full() {
        let model = WalkModel::ssrw();
        let r = h3_integral(&model, 24.0, 0.05, [0.5, 0.5]).unwrap();
        assert!(r.value < 0.1 * r.full, "window {} vs full {}", r.value, r.full);
    }

    #[test]
    fn h3_rejects_boundary_target() {
        let model = WalkModel::ssrw();
        assert!(h3_integral(&model, 24.0, 0.05, [0.0, 0.5]).is_err());
        assert!(h3_integral(&model, 24.0, 0.05, [1.0, 0.5]).is_err());
    }
}
