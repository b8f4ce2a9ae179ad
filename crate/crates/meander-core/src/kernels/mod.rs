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

//! Analytic kernels: the two-sided absorbed Brownian transition density, the
//! meander endpoint-with-maximum density, the limiting-density series for the
//! hydrostatic (`u`) and hydrodynamic (`v`) profiles, the Gamma cdf used by
//! uniformization, and independent finite-difference PDE oracles.

pub mod fd;
pub mod special;

use crate::error::{Error, Result};
use crate::geometry::Side;

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Truncation control for the kernel series.
#[derive(Debug, Clone, Copy)]
pub struct SeriesTruncation {
    pub max_index: usize,
    pub tail_tol: f64,
}

impl Default for SeriesTruncation {
    fn default() -> Self {
        Self {
            max_index: 200,
            tail_tol: 1e-12,
        }
    }
}

/// Density of Brownian motion at time 1 in `γ`, started from `η`, conditioned
/// to stay inside `(0, ξ)`; the classical double-reflection series.
///
/// `ξ = +∞` degenerates to the single reflection term.
pub fn phi(eta: f64, gamma: f64, xi: f64, trunc: SeriesTruncation) -> Result<f64> {
    if !(eta > 0.0) || !(gamma > 0.0) || !(eta < xi) || !(gamma < xi) {
        return Err(Error::InvalidArgument(format!(
            "phi requires 0 < eta, gamma < xi; got eta={eta}, gamma={gamma}, xi={xi}"
        )));
    }
    if xi.is_infinite() {
        let d = gamma - eta;
        let s = gamma + eta;
        return Ok(((-0.5 * d * d).exp() - (-0.5 * s * s).exp()) / SQRT_2PI);
    }
    let term = |n: f64| -> f64 {
        let d = gamma - eta - 2.0 * n * xi;
        let s = gamma + eta + 2.0 * n * xi;
        (-0.5 * d * d).exp() - (-0.5 * s * s).exp()
    };
    let mut sum = term(0.0);
    let mut n = 1usize;
    loop {
        let t = term(n as f64) + term(-(n as f64));
        sum += t;
        // Both reflection arguments grow like 2nξ; once they pass ~9 the
        // remaining tail is far below any practical tolerance.
        let reach = 2.0 * n as f64 * xi - gamma - eta;
        if reach > 0.0 {
            let tail = 4.0 * (-0.5 * reach * reach).exp();
            if tail < trunc.tail_tol {
                break;
            }
        }
        n += 1;
        if n > trunc.max_index {
            let reach = (2.0 * n as f64 * xi - gamma - eta).max(0.0);
            return Err(Error::TailTooLarge {
                tail: 4.0 * (-0.5 * reach * reach).exp(),
                tol: trunc.tail_tol,
            });
        }
    }
    Ok(sum / SQRT_2PI)
}

/// Joint density of the Brownian meander endpoint at `α` with running maximum
/// below `β`. Paired summation keeps the `α = β` cancellation exact.
pub fn psi(alpha: f64, beta: f64, trunc: SeriesTruncation) -> Result<f64> {
    if !(alpha >= 0.0) || !(beta > 0.0) || alpha > beta {
        return Err(Error::InvalidArgument(format!(
            "psi requires 0 <= alpha <= beta; got alpha={alpha}, beta={beta}"
        )));
    }
    let f = |u: f64| u * (-0.5 * u * u).exp();
    let mut sum = 0.0;
    for k in 0..=trunc.max_index {
        let up = 2.0 * k as f64 * beta + alpha;
        let um = alpha - 2.0 * (k as f64 + 1.0) * beta;
        let t = f(up) + f(um);
        sum += t;
        if up > 9.0 && um.abs() > 9.0 {
            break;
        }
        if k == trunc.max_index {
            return Err(Error::TailTooLarge {
                tail: f(up).abs() + f(um).abs(),
                tol: trunc.tail_tol,
            });
        }
    }
    Ok(sum)
}

/// One term of the limiting-density series: the `(k, n)` image charge
/// contribution at `(x, y)` from boundary height `σ`. Stationary for
/// `t = None`, heat-kernel weighted otherwise.
pub fn r_term(k: i64, n: i64, sigma: f64, x: f64, y: f64, t: Option<f64>) -> Result<f64> {
    if !(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "r_term requires (x, y) in the open unit square; got ({x}, {y})"
        )));
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "r_term requires sigma in (0, 1); got {sigma}"
        )));
    }
    let a = 2.0 * k as f64 + x;
    let d1 = y - sigma - 2.0 * n as f64;
    let d2 = y + sigma + 2.0 * n as f64;
    let p1 = a * a + d1 * d1;
    let p2 = a * a + d2 * d2;
    if p1 == 0.0 || p2 == 0.0 {
        return Err(Error::InvalidArgument(
            "image charge distance vanished (boundary point)".into(),
        ));
    }
    let (e1, e2) = match t {
        None => (1.0, 1.0),
        Some(t) => {
            if !(t > 0.0) {
                return Err(Error::InvalidArgument(format!("r_term requires t > 0; got {t}")));
            }
            ((-p1 / (2.0 * t)).exp(), (-p2 / (2.0 * t)).exp())
        }
    };
    Ok(2.0 * a / SQRT_2PI * (e1 / p1 - e2 / p2))
}

/// The trapezoidal cutoff Ψ_{δ'}: 0 near both ends of [0, 1], 1 in the bulk,
/// linear in between.
pub fn mollifier(delta_prime: f64, y: f64) -> f64 {
    let d = delta_prime;
    if y < d || y > 1.0 - d {
        0.0
    } else if y < 2.0 * d {
        y / d - 1.0
    } else if y <= 1.0 - 2.0 * d {
        1.0
    } else {
        (1.0 - y) / d - 1.0
    }
}

/// A sampled non-negative boundary profile on one side, with its mollification
/// width. Samples are uniform over `[0, span]` and interpolated linearly.
#[derive(Debug, Clone)]
pub struct BoundaryProfile {
    pub side: Side,
    samples: Vec<f64>,
    span: f64,
    delta_prime: f64,
}

impl BoundaryProfile {
    pub fn from_samples(side: Side, samples: Vec<f64>, span: f64, delta_prime: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidArgument("profile needs at least 2 samples".into()));
        }
        if samples.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument("profile samples must be non-negative".into()));
        }
        if !(span > 0.0) {
            return Err(Error::InvalidArgument("profile span must be positive".into()));
        }
        check_delta_prime(delta_prime)?;
        Ok(Self {
            side,
            samples,
            span,
            delta_prime,
        })
    }

    /// Sample a closure at `n + 1` uniform points.
    pub fn from_fn(side: Side, n: usize, span: f64, delta_prime: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = (0..=n).map(|i| f(span * i as f64 / n as f64)).collect();
        Self::from_samples(side, samples, span, delta_prime)
    }

    pub fn zero(side: Side) -> Self {
        Self {
            side,
            samples: vec![0.0, 0.0],
            span: 1.0,
            delta_prime: 0.01,
        }
    }

    pub fn delta_prime(&self) -> f64 {
        self.delta_prime
    }

    pub fn with_delta_prime(&self, delta_prime: f64) -> Result<Self> {
        check_delta_prime(delta_prime)?;
        let mut p = self.clone();
        p.delta_prime = delta_prime;
        Ok(p)
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    /// Raw profile value at `u ∈ [0, span]` (clamped).
    pub fn eval(&self, u: f64) -> f64 {
        let n = self.samples.len() - 1;
        let s = (u / self.span * n as f64).clamp(0.0, n as f64);
        let i = (s.floor() as usize).min(n - 1);
        let w = s - i as f64;
        self.samples[i] * (1.0 - w) + self.samples[i + 1] * w
    }

    /// Mollified value `f(u) Ψ_{δ'}(u / span)`.
    pub fn eval_mollified(&self, u: f64) -> f64 {
        self.eval(u) * mollifier(self.delta_prime, u / self.span)
    }

    pub fn sup(&self) -> f64 {
        self.samples.iter().cloned().fold(0.0, f64::max)
    }
}

fn check_delta_prime(delta_prime: f64) -> Result<()> {
    if !(delta_prime > 0.0 && delta_prime < 0.25) {
        return Err(Error::InvalidArgument(format!(
            "mollification width must lie in (0, 1/4); got {delta_prime}"
        )));
    }
    Ok(())
}

/// Stationary limit density at `z` for a West profile with prefactor `ς`.
///
/// The doubly infinite image series is evaluated with the inner sum resummed
/// in closed form; the remaining sum over horizontal images converges like
/// `e^{-2πk}`, so a handful of terms reach machine precision. The mollified
/// profile is integrated by composite Simpson split at the mollifier kinks.
pub fn u_series(z: [f64; 2], profile: &BoundaryProfile, sigma_const: f64, trunc: SeriesTruncation) -> Result<f64> {
    let [x, y] = z;
    if !(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0) {
        return Err(Error::OutOfDomain(z));
    }
    check_delta_prime(profile.delta_prime)?;
    let integrand = |sigma: f64| -> f64 {
        let f = profile.eval_mollified(sigma);
        if f == 0.0 {
            return 0.0;
        }
        f * image_sum_stationary(x, y, sigma, trunc)
    };
    let d = profile.delta_prime;
    let value = piecewise_simpson(&integrand, &[d, 2.0 * d, 1.0 - 2.0 * d, 1.0 - d], 768);
    Ok(sigma_const * value)
}

/// `Σ_k (x+2k)/π · [S(y-σ) - S(y+σ)]` with the difference combined into a
/// single cancellation-free expression.
fn image_sum_stationary(x: f64, y: f64, sigma: f64, trunc: SeriesTruncation) -> f64 {
    let pi = std::f64::consts::PI;
    let spy = (pi * y).sin();
    let sps = (pi * sigma).sin();
    let mut sum = 0.0;
    let mut k = 0i64;
    loop {
        let mut shell = 0.0;
        let mut shell_bound = 0.0;
        for a_signed in [2.0 * k as f64 + x, -(2.0 * (k + 1) as f64) + x] {
            let a = a_signed.abs();
            let e = (-pi * a).exp();
            let c1 = (pi * (y - sigma)).cos();
            let c2 = (pi * (y + sigma)).cos();
            let d1 = 1.0 - 2.0 * e * c1 + e * e;
            let d2 = 1.0 - 2.0 * e * c2 + e * e;
            // (a_signed/π)(S(y-σ) - S(y+σ)) collapses to this product form.
            let v = a_signed.signum() * (1.0 - e * e) * 2.0 * e * spy * sps / (d1 * d2);
            shell += v;
            shell_bound += 8.0 * e;
        }
        sum += shell;
        if shell_bound < trunc.tail_tol || k as usize >= trunc.max_index {
            break;
        }
        k += 1;
    }
    sum
}

/// Finite-time density at `z`: the image series with heat-kernel weights;
/// Gaussian decay makes the double sum short.
pub fn v_series(
    t: f64,
    z: [f64; 2],
    profile: &BoundaryProfile,
    sigma_const: f64,
    trunc: SeriesTruncation,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("v_series requires t > 0; got {t}")));
    }
    let [x, y] = z;
    if !(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0) {
        return Err(Error::OutOfDomain(z));
    }
    check_delta_prime(profile.delta_prime)?;
    // exp(-P/(2t))/P is negligible once P/(2t) passes ~40.
    let reach = (2.0 * t * 40.0f64).sqrt() + 4.0;
    let k_hi = ((reach - x) / 2.0).ceil() as i64;
    let n_hi = (reach / 2.0).ceil() as i64 + 1;
    if k_hi as usize > trunc.max_index * 50 {
        return Err(Error::TailTooLarge {
            tail: f64::INFINITY,
            tol: trunc.tail_tol,
        });
    }
    let integrand = |sigma: f64| -> f64 {
        let f = profile.eval_mollified(sigma);
        if f == 0.0 {
            return 0.0;
        }
        let mut sum = 0.0;
        for k in -k_hi..=k_hi {
            let a = 2.0 * k as f64 + x;
            if a.abs() > reach {
                continue;
            }
            for n in -n_hi..=n_hi {
                let d1 = y - sigma - 2.0 * n as f64;
                let d2 = y + sigma + 2.0 * n as f64;
                let p1 = a * a + d1 * d1;
                let p2 = a * a + d2 * d2;
                let e1 = if p1 < 80.0 * t { (-p1 / (2.0 * t)).exp() / p1 } else { 0.0 };
                let e2 = if p2 < 80.0 * t { (-p2 / (2.0 * t)).exp() / p2 } else { 0.0 };
                sum += a * (e1 - e2);
            }
        }
        f * sum / std::f64::consts::PI
    };
    let d = profile.delta_prime;
    let value = piecewise_simpson(&integrand, &[d, 2.0 * d, 1.0 - 2.0 * d, 1.0 - d], 768);
    Ok(sigma_const * value)
}

/// Evaluate `u_series` (or `v_series` for finite `t`) at mollification widths
/// 0.04, 0.02, 0.01 and extrapolate the width to zero by Aitken Δ².
pub fn series_extrapolated(
    t: Option<f64>,
    z: [f64; 2],
    profile: &BoundaryProfile,
    sigma_const: f64,
    trunc: SeriesTruncation,
) -> Result<f64> {
    let widths = [0.04, 0.02, 0.01];
    let mut vals = [0.0f64; 3];
    for (i, w) in widths.iter().enumerate() {
        let p = profile.with_delta_prime(*w)?;
        vals[i] = match t {
            None => u_series(z, &p, sigma_const, trunc)?,
            Some(t) => v_series(t, z, &p, sigma_const, trunc)?,
        };
    }
    let denom = vals[2] - 2.0 * vals[1] + vals[0];
    if denom.abs() < 1e-14 {
        return Ok(vals[2]);
    }
    let d = vals[2] - vals[1];
    Ok(vals[2] - d * d / denom)
}

/// Composite Simpson with interior break points (for integrands with kinks).
fn piecewise_simpson(f: &impl Fn(f64) -> f64, breaks: &[f64], total_panels: usize) -> f64 {
    let mut pts = vec![0.0];
    pts.extend(breaks.iter().copied().filter(|b| *b > 0.0 && *b < 1.0));
    pts.push(1.0);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let mut acc = 0.0;
    for w in pts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let len = hi - lo;
        if len <= 0.0 {
            continue;
        }
        let mut panels = ((total_panels as f64) * len).ceil() as usize;
        panels = panels.max(8);
        if panels % 2 == 1 {
            panels += 1;
        }
        let h = len / panels as f64;
        let mut s = f(lo) + f(hi);
        for i in 1..panels {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(lo + h * i as f64);
        }
        acc += s * h / 3.0;
    }
    acc
}

/// Gamma(N, 1) cumulative distribution function: the probability that the sum
/// of `N` unit exponentials is at most `t`.
pub fn gamma_cdf(n: u64, t: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    if t <= 0.0 {
        return 0.0;
    }
    special::reg_lower_gamma(n as f64, t)
}

/// The profile normalization `ς = √(2π) c̄ K / B`.
pub fn sigma_const(c_bar: f64, k: usize, b: f64) -> Result<f64> {
    if !(c_bar > 0.0) || k == 0 || !(b > 0.0) {
        return Err(Error::InvalidArgument(
            "sigma_const requires positive c̄, K, B".into(),
        ));
    }
    Ok(SQRT_2PI * c_bar * k as f64 / b)
}
