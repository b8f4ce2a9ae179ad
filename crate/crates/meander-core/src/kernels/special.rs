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

//! Special-function helpers: log-gamma, the regularized incomplete gamma,
//! Poisson survival weights for uniformization, and scaled modified Bessel
//! functions.

/// Lanczos approximation of ln Γ(x) for x > 0; absolute error below 1e-13.
pub fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    debug_assert!(x > 0.0);
    let x = x - 1.0;
    let mut a = G[0];
    let t = x + 7.5;
    for (i, &g) in G.iter().enumerate().skip(1) {
        a += g / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized lower incomplete gamma P(a, x) = γ(a,x)/Γ(a).
///
/// Series expansion for x < a + 1, Lentz continued fraction otherwise.
pub fn reg_lower_gamma(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        // Series: P(a,x) = x^a e^-x / Γ(a) * Σ x^n / (a(a+1)...(a+n))
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..500 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        sum * (a * x.ln() - x - ln_gamma(a)).exp()
    } else {
        // Continued fraction for Q(a,x), modified Lentz.
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        let q = (a * x.ln() - x - ln_gamma(a)).exp() * h;
        1.0 - q
    }
}

/// Survival weights `F_{M+1}(t)` of the Gamma(M+1, 1) distribution for
/// M = 0..=m_max, i.e. `P(Poisson(t) >= M+1)`.
///
/// Computed as suffix sums of the Poisson pmf so small tail values keep full
/// relative accuracy.
pub fn gamma_cdf_ladder(t: f64, m_max: usize) -> Vec<f64> {
    assert!(t >= 0.0);
    if t == 0.0 {
        return vec![0.0; m_max + 1];
    }
    // Carry the pmf ladder far enough that the remainder beyond it is
    // negligible for every requested index.
    let hi = (m_max + 1).max((t + 12.0 * t.sqrt() + 50.0) as usize);
    let mut ln_pmf = vec![0.0f64; hi + 1];
    ln_pmf[0] = -t;
    for k in 1..=hi {
        ln_pmf[k] = ln_pmf[k - 1] + (t / k as f64).ln();
    }
    let mut tail = vec![0.0f64; hi + 2];
    for k in (0..=hi).rev() {
        let p = if ln_pmf[k] > -745.0 { ln_pmf[k].exp() } else { 0.0 };
        tail[k] = tail[k + 1] + p;
    }
    // Where the tail is essentially 1, clamp (suffix sums accumulate to
    // 1 + O(n eps)).
    (0..=m_max).map(|m| tail[m + 1].min(1.0)).collect()
}

/// Poisson pmf values for k = 0..=k_max at mean `t`, in linear space with
/// underflow flushed to zero.
pub fn poisson_pmf_ladder(t: f64, k_max: usize) -> Vec<f64> {
    assert!(t >= 0.0);
    if t == 0.0 {
        let mut v = vec![0.0; k_max + 1];
        v[0] = 1.0;
        return v;
    }
    let mut ln_pmf = -t;
    let mut out = Vec::with_capacity(k_max + 1);
    out.push(if ln_pmf > -745.0 { ln_pmf.exp() } else { 0.0 });
    for k in 1..=k_max {
        ln_pmf += (t / k as f64).ln();
        out.push(if ln_pmf > -745.0 { ln_pmf.exp() } else { 0.0 });
    }
    out
}

/// Scaled modified Bessel function `e^{-x} I_m(x)` for m >= 0, x >= 0,
/// via Miller's backward recurrence with the `e^x = I_0 + 2 Σ I_k`
/// normalization.
pub fn bessel_i_scaled(m: usize, x: f64) -> f64 {
    assert!(x >= 0.0);
    if x == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    let start = m.max((92.0 * x).sqrt() as usize) + 30;
    let mut ip1 = 0.0f64; // unnormalized I_{k+1}
    let mut ik = 1e-280f64; // unnormalized I_k
    let mut norm = 0.0f64;
    let mut target = 0.0f64;
    for k in (0..=start).rev() {
        // I_{k-1} = (2k/x) I_k + I_{k+1}, iterating k downward.
        let im1 = (2.0 * (k as f64 + 1.0) / x) * ik + ip1;
        ip1 = ik;
        ik = im1;
        // ik now holds I_k (for the new k).
        if k == m {
            target = ik;
        }
        norm += if k == 0 { ik } else { 2.0 * ik };
        if ik > 1e260 {
            ip1 /= 1e260;
            ik /= 1e260;
            norm /= 1e260;
            target /= 1e260;
        }
    }
    target / norm
}
