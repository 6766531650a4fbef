//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls into the library's numerics: products are formed
//! explicitly in double-double arithmetic and singular values come from a
//! one-sided Jacobi iteration on the explicit product.

#![allow(dead_code)]

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn new(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let x = Dd::new(self.hi.sqrt());
        // one Newton step doubles the precision
        x + (self - x * x) / (x + x)
    }

    pub fn ln(self) -> f64 {
        self.hi.ln() + (self.lo / self.hi).ln_1p()
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        let (hi, lo) = quick_two_sum(p, e + (self.hi * o.lo + self.lo * o.hi));
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::new(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::new(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::new(q3)
    }
}

/// Row-major `d × d` product `A_1 ⋯ A_n` in double-double.
pub fn dd_product(d: usize, word: &[&[f64]]) -> Vec<Dd> {
    let mut p: Vec<Dd> = (0..d * d).map(|k| Dd::new(if k % (d + 1) == 0 { 1.0 } else { 0.0 })).collect();
    for a in word {
        let mut next = vec![Dd::ZERO; d * d];
        for i in 0..d {
            for j in 0..d {
                let mut acc = Dd::ZERO;
                for k in 0..d {
                    acc = acc + p[i * d + k] * Dd::new(a[k * d + j]);
                }
                next[i * d + j] = acc;
            }
        }
        p = next;
    }
    p
}

/// Log singular values, decreasing, by one-sided Jacobi on the columns.
pub fn dd_log_singular_values(d: usize, m: &[Dd]) -> Vec<f64> {
    let mut a = m.to_vec();
    let col_dot = |a: &[Dd], i: usize, j: usize| (0..d).fold(Dd::ZERO, |acc, k| acc + a[k * d + i] * a[k * d + j]);
    for _sweep in 0..80 {
        let mut rotated = false;
        for i in 0..d {
            for j in i + 1..d {
                let alpha = col_dot(&a, i, i);
                let beta = col_dot(&a, j, j);
                let gamma = col_dot(&a, i, j);
                if gamma.abs().hi <= 1e-31 * (alpha * beta).sqrt().hi {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let sign = if zeta.hi >= 0.0 { 1.0 } else { -1.0 };
                let t = Dd::new(sign) / (zeta.abs() + (Dd::new(1.0) + zeta * zeta).sqrt());
                let c = Dd::new(1.0) / (Dd::new(1.0) + t * t).sqrt();
                let s = c * t;
                for k in 0..d {
                    let (x, y) = (a[k * d + i], a[k * d + j]);
                    a[k * d + i] = c * x - s * y;
                    a[k * d + j] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut out: Vec<f64> = (0..d).map(|j| 0.5 * col_dot(&a, j, j).ln()).collect();
    out.sort_by(|x, y| y.total_cmp(x));
    out
}

/// `ln φ^s` straight from the definition.
pub fn log_phi(log_alphas: &[f64], s: f64) -> f64 {
    let d = log_alphas.len();
    if s >= d as f64 {
        return s / d as f64 * log_alphas.iter().sum::<f64>();
    }
    let k = s.floor() as usize;
    let mut v: f64 = log_alphas[..k].iter().sum();
    if s > k as f64 {
        v += (s - k as f64) * log_alphas[k];
    }
    v
}

/// `(1/n) ln Σ_{|w| = n} φ^s(A_w)` by explicit enumeration.
pub fn brute_force_level_sum(d: usize, maps: &[Vec<f64>], s: f64, n: usize) -> f64 {
    let m = maps.len();
    let mut logs = Vec::with_capacity(m.pow(n as u32));
    let mut digits = vec![0usize; n];
    loop {
        let word: Vec<&[f64]> = digits.iter().map(|&k| maps[k].as_slice()).collect();
        logs.push(log_phi(&dd_log_singular_values(d, &dd_product(d, &word)), s));
        let mut pos = 0;
        while pos < n && digits[pos] == m - 1 {
            digits[pos] = 0;
            pos += 1;
        }
        if pos == n {
            break;
        }
        digits[pos] += 1;
    }
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logs.iter().map(|l| (l - top).exp()).sum();
    (top + sum.ln()) / n as f64
}

/// Asymptotic two-sided Kolmogorov–Smirnov critical value at level 1%.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// `sup |F_n − F|` against the uniform law on `[lo, hi]`.
pub fn ks_statistic_uniform(mut xs: Vec<f64>, lo: f64, hi: f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
