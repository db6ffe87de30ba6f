//! Poisson–Charlier coefficients `C_n(k, t)` of the power series
//! `(1−λ)^k e^{tλ} = Σ_n C_n(k, t) (−λ)^n / n!`, their derivative in `k`, and
//! the scalar response of the truncated filter.

use serde::{Deserialize, Serialize};

/// Table `C_0..=C_N` for a given order `k` and time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcCoefficients {
    pub order_k: f64,
    pub time_t: f64,
    pub truncation: usize,
    pub values: Vec<f64>,
    /// `∂C_n/∂k`, only filled by [`pc_coefficients_grad_k`].
    pub dvalues_dk: Option<Vec<f64>>,
}

impl PcCoefficients {
    /// `Σ_{n=0}^{N} C_n (−λ)^n / n!`, the filter response without identity mapping.
    pub fn series(&self, lambda: f64) -> f64 {
        let mut term = 1.0;
        let mut acc = 0.0;
        for (n, c) in self.values.iter().enumerate() {
            if n > 0 {
                term *= -lambda / n as f64;
            }
            acc += c * term;
        }
        acc
    }
}

/// Three-term recurrence `C_n = (k − n − t + 1) C_{n−1} − (n−1) t C_{n−2}`.
pub fn pc_coefficients(k: f64, t: f64, truncation: usize) -> PcCoefficients {
    let mut values = Vec::with_capacity(truncation + 1);
    values.push(1.0);
    if truncation >= 1 {
        values.push(k - t);
    }
    for n in 2..=truncation {
        let nf = n as f64;
        let c = (k - nf - t + 1.0) * values[n - 1] - (nf - 1.0) * t * values[n - 2];
        values.push(c);
    }
    PcCoefficients {
        order_k: k,
        time_t: t,
        truncation,
        values,
        dvalues_dk: None,
    }
}

/// Coefficients plus `∂C_n/∂k` from differentiating the recurrence term by term.
pub fn pc_coefficients_grad_k(k: f64, t: f64, truncation: usize) -> PcCoefficients {
    let mut out = pc_coefficients(k, t, truncation);
    let c = &out.values;
    let mut d = Vec::with_capacity(truncation + 1);
    d.push(0.0);
    if truncation >= 1 {
        d.push(1.0);
    }
    for n in 2..=truncation {
        let nf = n as f64;
        let v = c[n - 1] + (k - nf - t + 1.0) * d[n - 1] - (nf - 1.0) * t * d[n - 2];
        d.push(v);
    }
    out.dvalues_dk = Some(d);
    out
}

/// `1 + Σ_{n=0}^{N} C_n (−λ)^n / n!`: truncated response including identity mapping.
pub fn frequency_response(coeffs: &PcCoefficients, lambda: f64) -> f64 {
    1.0 + coeffs.series(lambda)
}
