//! Summation of non-negative series with convergence and divergence
//! certificates, plus log-domain helpers.
//!
//! Countable alphabets produce series (entropies, exponent sums, level-one
//! pressure sums) that are summed only up to a truncation point. The
//! remainder is controlled by an [`Envelope`] that the family declares for
//! its terms: an upper envelope with a finite integral gives a tail bound, a
//! non-summable lower envelope certifies divergence by comparison.

use serde::{Deserialize, Serialize};

/// Asymptotic model of a series term as a function of the generating index `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Envelope {
    /// `coeff · n^(−power) · (ln n)^(−log_power)`
    Power { coeff: f64, power: f64, log_power: f64 },
    /// `coeff · n^poly · ratio^n`
    Geometric { coeff: f64, ratio: f64, poly: f64 },
}

impl Envelope {
    pub fn power(coeff: f64, power: f64, log_power: f64) -> Self {
        Envelope::Power { coeff, power, log_power }
    }

    pub fn geometric(coeff: f64, ratio: f64, poly: f64) -> Self {
        Envelope::Geometric { coeff, ratio, poly }
    }

    /// Integral / ratio test on the model.
    pub fn is_summable(&self) -> bool {
        match *self {
            Envelope::Power { power, log_power, .. } => power > 1.0 || (power == 1.0 && log_power > 1.0),
            Envelope::Geometric { ratio, poly, .. } => ratio < 1.0 || (ratio == 1.0 && poly < -1.0),
        }
    }

    pub fn eval(&self, n: f64) -> f64 {
        match *self {
            Envelope::Power { coeff, power, log_power } => coeff * n.powf(-power) * n.ln().powf(-log_power),
            Envelope::Geometric { coeff, ratio, poly } => coeff * n.powf(poly) * ratio.powf(n),
        }
    }

    /// Upper bound on `Σ_{n > last} envelope(n)`, or `None` when the model
    /// is not summable or not yet decreasing at `last`.
    pub fn tail_bound(&self, last: f64) -> Option<f64> {
        match *self {
            Envelope::Power { coeff, power, log_power } => {
                if last <= 1.0 {
                    return None;
                }
                let u = last.ln();
                // the model must be decreasing on [last, ∞) for the integral comparison
                if power * u + log_power <= 0.0 {
                    return None;
                }
                let integral = if power > 1.0 {
                    let a = power - 1.0;
                    let m = -log_power;
                    let y = a * u;
                    if m <= 0.0 {
                        u.powf(m) * (-y).exp() / a
                    } else if y > m {
                        // Γ(m+1, y) ≤ y^m e^{−y} / (1 − m/y)
                        y.powf(m) * (-y).exp() / (1.0 - m / y) / a.powf(m + 1.0)
                    } else {
                        return None;
                    }
                } else if power == 1.0 && log_power > 1.0 {
                    u.powf(1.0 - log_power) / (log_power - 1.0)
                } else {
                    return None;
                };
                Some(coeff * integral)
            }
            Envelope::Geometric { coeff, ratio, poly } => {
                if ratio >= 1.0 {
                    return None;
                }
                let first = last.floor() + 1.0;
                let growth = if poly > 0.0 { ((first + 1.0) / first).powf(poly) } else { 1.0 };
                let rho = growth * ratio;
                if rho >= 1.0 {
                    return None;
                }
                Some(coeff * first.powf(poly) * ratio.powf(first) / (1.0 - rho))
            }
        }
    }
}

/// How a declared envelope relates to the actual terms beyond the truncation point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TailEnvelope {
    /// `|term(n)| ≤ envelope(n)`; certifies convergence when summable.
    Dominates(Envelope),
    /// `|term(n)| ≥ envelope(n)`; certifies divergence when not summable.
    Minorizes(Envelope),
}

/// Evidence that a series of non-negative terms diverges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceCertificate {
    pub partial_sum: f64,
    pub terms: usize,
    /// Last summed term; strictly positive for a positive-tail certificate.
    pub last_term: f64,
    pub reason: DivergenceReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DivergenceReason {
    /// Non-summable lower envelope (comparison / integral test).
    Comparison(Envelope),
    /// Partial sums crossed the configured threshold with terms still above the floor.
    Threshold { threshold: f64, term_floor: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SeriesOutcome {
    Converged {
        partial_sum: f64,
        terms: usize,
        /// `None` when no dominating envelope was available.
        tail_bound: Option<f64>,
    },
    Diverged(DivergenceCertificate),
}

impl SeriesOutcome {
    pub fn partial_sum(&self) -> f64 {
        match self {
            SeriesOutcome::Converged { partial_sum, .. } => *partial_sum,
            SeriesOutcome::Diverged(c) => c.partial_sum,
        }
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, SeriesOutcome::Diverged(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceRule {
    pub threshold: f64,
    pub term_floor: f64,
}

/// Sums `|term|` over `(index, term)` pairs and classifies the full series.
///
/// All terms must share a sign; the outcome reports the magnitude. `last_index`
/// handling: the envelope tail is taken beyond the index of the last term seen.
pub fn sum_series<I>(terms: I, envelope: Option<TailEnvelope>, rule: Option<DivergenceRule>) -> SeriesOutcome
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let mut acc = NeumaierSum::default();
    let mut count = 0usize;
    let mut last_index = f64::NAN;
    let mut last_term = 0.0;
    for (index, term) in terms {
        let t = term.abs();
        acc.add(t);
        count += 1;
        last_index = index;
        last_term = t;
        if let Some(rule) = rule {
            if acc.value() > rule.threshold && t > rule.term_floor {
                return SeriesOutcome::Diverged(DivergenceCertificate {
                    partial_sum: acc.value(),
                    terms: count,
                    last_term: t,
                    reason: DivergenceReason::Threshold { threshold: rule.threshold, term_floor: rule.term_floor },
                });
            }
        }
    }
    let partial_sum = acc.value();
    match envelope {
        Some(TailEnvelope::Minorizes(env)) if !env.is_summable() && last_term > 0.0 => {
            SeriesOutcome::Diverged(DivergenceCertificate {
                partial_sum,
                terms: count,
                last_term,
                reason: DivergenceReason::Comparison(env),
            })
        }
        Some(TailEnvelope::Dominates(env)) if count > 0 => SeriesOutcome::Converged {
            partial_sum,
            terms: count,
            tail_bound: env.tail_bound(last_index),
        },
        _ => SeriesOutcome::Converged { partial_sum, terms: count, tail_bound: None },
    }
}

/// Compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<T: IntoIterator<Item = f64>>(iter: T) -> Self {
        let mut s = NeumaierSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// `ln Σ exp(x_i)`; returns `−∞` for an empty input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let s: NeumaierSum = values.iter().map(|v| (v - max).exp()).collect();
    max + s.value().ln()
}

/// Streaming `ln Σ exp(x_i)`.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    scaled: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        LogSumExp { max: f64::NEG_INFINITY, scaled: 0.0 }
    }
}

impl LogSumExp {
    pub fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.scaled += (x - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    pub fn merge(&mut self, other: &LogSumExp) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if other.max <= self.max {
            self.scaled += other.scaled * (other.max - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - other.max).exp() + other.scaled;
            self.max = other.max;
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}
