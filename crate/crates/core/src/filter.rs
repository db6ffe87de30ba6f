//! Sparse application of the truncated Poisson–Charlier filter
//! `Z = B + Σ_{n=0}^{N} C_n(k, t) (−L)^n / n! · B` and the PCNet multi-term variant.
//!
//! Propagation uses `P_0 = B`, `P_n = (−1/n) L P_{n−1}` so the factorial never
//! appears explicitly.

use ndarray::{Array2, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpcError};
use crate::graph::{spmm, SparseSymMatrix};
use crate::pc_poly::{pc_coefficients, pc_coefficients_grad_k};

/// Which filter family to apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FilterVariant {
    /// Single cross-receptive term of continuous order `k`.
    Spcnet { k: f64 },
    /// `β_0 B + Σ_{κ=1}^{K} β_κ Σ_n C_n(κ, t) P_n` with `K = beta.len() − 1`.
    Pcnet { beta: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    #[serde(flatten)]
    pub variant: FilterVariant,
    pub t: f64,
    pub truncation: usize,
    #[serde(default = "default_true")]
    pub include_identity: bool,
}

fn default_true() -> bool {
    true
}

impl FilterSpec {
    pub fn spcnet(k: f64, t: f64, truncation: usize) -> Self {
        Self {
            variant: FilterVariant::Spcnet { k },
            t,
            truncation,
            include_identity: true,
        }
    }

    pub fn pcnet(beta: Vec<f64>, t: f64, truncation: usize) -> Self {
        Self {
            variant: FilterVariant::Pcnet { beta },
            t,
            truncation,
            include_identity: true,
        }
    }

    pub fn without_identity(mut self) -> Self {
        self.include_identity = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.t.is_finite() || self.t < 0.0 {
            return Err(SpcError::InvalidFilter(format!("t must be finite and >= 0, got {}", self.t)));
        }
        match &self.variant {
            FilterVariant::Spcnet { k } if !k.is_finite() => {
                Err(SpcError::InvalidFilter(format!("k must be finite, got {k}")))
            }
            FilterVariant::Pcnet { beta } if beta.len() < 2 => Err(SpcError::InvalidFilter(
                "PCNET needs beta of length K+1 with K >= 1".into(),
            )),
            FilterVariant::Pcnet { beta } if beta.iter().any(|b| !b.is_finite()) => {
                Err(SpcError::InvalidFilter("beta must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    /// Coefficient on `P_n` (the `(−L)^n/n! B` term) for `n = 0..=N`, excluding
    /// the identity and `β_0` terms.
    pub fn propagation_weights(&self) -> Vec<f64> {
        match &self.variant {
            FilterVariant::Spcnet { k } => pc_coefficients(*k, self.t, self.truncation).values,
            FilterVariant::Pcnet { beta } => {
                let mut w = vec![0.0; self.truncation + 1];
                for (kappa, &b) in beta.iter().enumerate().skip(1) {
                    let c = pc_coefficients(kappa as f64, self.t, self.truncation);
                    for (acc, cn) in w.iter_mut().zip(&c.values) {
                        *acc += b * cn;
                    }
                }
                w
            }
        }
    }

    /// Weight on `B` itself outside the propagation sum.
    fn direct_weight(&self) -> Option<f64> {
        match &self.variant {
            FilterVariant::Spcnet { .. } => None,
            FilterVariant::Pcnet { beta } => Some(beta[0]),
        }
    }

    /// Scalar response at eigenvalue `lambda`, identity mapping included when enabled.
    pub fn response(&self, lambda: f64) -> f64 {
        let mut term = 1.0;
        let mut acc = 0.0;
        for (n, w) in self.propagation_weights().iter().enumerate() {
            if n > 0 {
                term *= -lambda / n as f64;
            }
            acc += w * term;
        }
        acc + self.direct_weight().unwrap_or(0.0) + if self.include_identity { 1.0 } else { 0.0 }
    }
}

fn check_inputs(l: &SparseSymMatrix, b: &ArrayView2<'_, f64>, spec: &FilterSpec) -> Result<()> {
    spec.validate()?;
    if b.nrows() != l.dim() {
        return Err(SpcError::DimensionMismatch(format!(
            "operator is {}x{}, block has {} rows",
            l.dim(),
            l.dim(),
            b.nrows()
        )));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(SpcError::NonFinite("filter input"));
    }
    Ok(())
}

/// Calls `visit(n, P_n)` for `n = 0..=N`.
fn propagate(
    l: &SparseSymMatrix,
    b: ArrayView2<'_, f64>,
    truncation: usize,
    mut visit: impl FnMut(usize, &Array2<f64>),
) -> Result<()> {
    let mut p = b.to_owned();
    visit(0, &p);
    for n in 1..=truncation {
        p = spmm(l, p.view())?;
        p.mapv_inplace(|v| v * (-1.0 / n as f64));
        visit(n, &p);
    }
    Ok(())
}

/// Applies the filter described by `spec` to every column of `b`.
pub fn apply_filter(l: &SparseSymMatrix, b: ArrayView2<'_, f64>, spec: &FilterSpec) -> Result<Array2<f64>> {
    check_inputs(l, &b, spec)?;
    let mut out = if spec.include_identity {
        b.to_owned()
    } else {
        Array2::zeros(b.raw_dim())
    };
    if let Some(w0) = spec.direct_weight() {
        out.scaled_add(w0, &b);
    }
    let weights = spec.propagation_weights();
    propagate(l, b, spec.truncation, |n, p| out.scaled_add(weights[n], p))?;
    Ok(out)
}

/// Vector–Jacobian product of [`apply_filter`] with respect to its input block.
///
/// Every term is a polynomial in a symmetric matrix, so the filter is self-adjoint
/// and the product is the filter applied to `grad`.
pub fn apply_filter_transpose_grad(
    l: &SparseSymMatrix,
    grad: ArrayView2<'_, f64>,
    spec: &FilterSpec,
) -> Result<Array2<f64>> {
    apply_filter(l, grad, spec)
}

/// `∂Z/∂k = Σ_n (∂C_n/∂k) P_n` for the single-term filter.
pub fn filter_grad_k(l: &SparseSymMatrix, b: ArrayView2<'_, f64>, spec: &FilterSpec) -> Result<Array2<f64>> {
    check_inputs(l, &b, spec)?;
    let FilterVariant::Spcnet { k } = spec.variant else {
        return Err(SpcError::KGradientUndefined);
    };
    let d = pc_coefficients_grad_k(k, spec.t, spec.truncation)
        .dvalues_dk
        .expect("grad table requested");
    let mut out = Array2::zeros(b.raw_dim());
    propagate(l, b, spec.truncation, |n, p| out.scaled_add(d[n], p))?;
    Ok(out)
}

/// Scalar gradients of `⟨G, apply_filter(B)⟩` with respect to the filter's own
/// parameters: `k` for SPCNET, `β_0..β_K` for PCNET.
pub fn filter_param_grads(
    l: &SparseSymMatrix,
    b: ArrayView2<'_, f64>,
    upstream: ArrayView2<'_, f64>,
    spec: &FilterSpec,
) -> Result<Vec<f64>> {
    check_inputs(l, &b, spec)?;
    if upstream.raw_dim() != b.raw_dim() {
        return Err(SpcError::DimensionMismatch("upstream gradient shape".into()));
    }
    let mut inner = Vec::with_capacity(spec.truncation + 1);
    propagate(l, b, spec.truncation, |_, p| inner.push(frobenius_inner(p.view(), upstream)))?;
    Ok(match &spec.variant {
        FilterVariant::Spcnet { k } => {
            let d = pc_coefficients_grad_k(*k, spec.t, spec.truncation)
                .dvalues_dk
                .expect("grad table requested");
            vec![d.iter().zip(&inner).map(|(a, b)| a * b).sum()]
        }
        FilterVariant::Pcnet { beta } => {
            let mut grads = vec![frobenius_inner(b, upstream)];
            for kappa in 1..beta.len() {
                let c = pc_coefficients(kappa as f64, spec.t, spec.truncation);
                grads.push(c.values.iter().zip(&inner).map(|(a, b)| a * b).sum());
            }
            grads
        }
    })
}

pub(crate) fn frobenius_inner(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    let mut acc = 0.0;
    Zip::from(a).and(b).for_each(|x, y| acc += x * y);
    acc
}

/// Linear-stability constant `Σ_{n=1}^{N} |w_n| / (n−1)!` where `w_n` is the
/// propagation weight (`C_n(k, t)` for SPCNET). Zero when `N = 0`.
pub fn stability_constant(spec: &FilterSpec) -> f64 {
    let mut fact = 1.0;
    let mut total = 0.0;
    for (n, w) in spec.propagation_weights().iter().enumerate().skip(1) {
        if n > 1 {
            fact *= (n - 1) as f64;
        }
        total += w.abs() / fact;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_normalized_laplacian, Graph};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn path2_laplacian() -> SparseSymMatrix {
        build_normalized_laplacian(&Graph::from_edges(2, [(0, 1)]).unwrap())
    }

    fn cycle(m: usize) -> SparseSymMatrix {
        build_normalized_laplacian(&Graph::from_edges(m, (0..m).map(|i| (i, (i + 1) % m))).unwrap())
    }

    #[test]
    fn degenerate_spec_doubles_input() {
        let l = cycle(5);
        let b = Array2::from_shape_fn((5, 2), |(i, j)| (i * 3 + j) as f64 - 4.0);
        let out = apply_filter(&l, b.view(), &FilterSpec::spcnet(0.0, 0.0, 5)).unwrap();
        assert_abs_diff_eq!(out, &b * 2.0, epsilon = 1e-14);
    }

    #[test]
    fn path_low_pass_example() {
        let out = apply_filter(
            &path2_laplacian(),
            array![[1.0], [0.0]].view(),
            &FilterSpec::spcnet(1.0, 0.0, 1),
        )
        .unwrap();
        assert_abs_diff_eq!(out, array![[1.5], [0.5]], epsilon = 1e-15);
    }

    #[test]
    fn errors() {
        let l = path2_laplacian();
        let spec = FilterSpec::spcnet(1.0, 0.5, 3);
        assert!(matches!(
            apply_filter(&l, Array2::zeros((3, 1)).view(), &spec),
            Err(SpcError::DimensionMismatch(_))
        ));
        assert!(matches!(
            apply_filter(&l, array![[f64::NAN], [0.0]].view(), &spec),
            Err(SpcError::NonFinite(_))
        ));
        let pc = FilterSpec::pcnet(vec![0.5, 0.5], 0.5, 3);
        assert!(matches!(
            filter_grad_k(&l, array![[1.0], [0.0]].view(), &pc),
            Err(SpcError::KGradientUndefined)
        ));
        assert!(apply_filter(&l, array![[1.0], [0.0]].view(), &FilterSpec::pcnet(vec![1.0], 0.5, 3)).is_err());
    }

    #[test]
    fn transpose_grad_is_filter_and_zero_maps_to_zero() {
        let l = cycle(6);
        let spec = FilterSpec::spcnet(1.3, 0.7, 8);
        let g = Array2::from_shape_fn((6, 3), |(i, j)| ((i + 2 * j) as f64).sin());
        assert_eq!(
            apply_filter_transpose_grad(&l, g.view(), &spec).unwrap(),
            apply_filter(&l, g.view(), &spec).unwrap()
        );
        let z = Array2::zeros((6, 3));
        assert_eq!(apply_filter_transpose_grad(&l, z.view(), &spec).unwrap(), z);
    }

    #[test]
    fn grad_k_small_cases() {
        let l = cycle(4);
        let b = Array2::from_shape_fn((4, 2), |(i, j)| (i as f64) - (j as f64) * 0.5);
        let n1 = filter_grad_k(&l, b.view(), &FilterSpec::spcnet(0.4, 0.9, 1)).unwrap();
        let minus_lb = -spmm(&l, b.view()).unwrap();
        assert_abs_diff_eq!(n1, minus_lb, epsilon = 1e-15);
        let n0 = filter_grad_k(&l, b.view(), &FilterSpec::spcnet(0.0, 0.0, 0)).unwrap();
        assert_eq!(n0, Array2::<f64>::zeros((4, 2)));
    }

    #[test]
    fn stability_constant_examples() {
        assert_abs_diff_eq!(stability_constant(&FilterSpec::spcnet(0.3, 1.1, 1)), 0.8, epsilon = 1e-15);
        assert_eq!(stability_constant(&FilterSpec::spcnet(0.0, 0.0, 9)), 0.0);
        assert_eq!(stability_constant(&FilterSpec::spcnet(2.0, 0.5, 2)), 1.75);
        assert_eq!(stability_constant(&FilterSpec::spcnet(2.0, 0.5, 0)), 0.0);
    }

    #[test]
    fn pcnet_single_term_is_spcnet_order_one() {
        let l = cycle(7);
        let b = Array2::from_shape_fn((7, 3), |(i, j)| ((i * 7 + j) as f64).cos());
        let a = apply_filter(&l, b.view(), &FilterSpec::spcnet(1.0, 0.8, 10)).unwrap();
        let p = apply_filter(&l, b.view(), &FilterSpec::pcnet(vec![0.0, 1.0], 0.8, 10)).unwrap();
        assert_eq!(a, p);
    }

    #[test]
    fn spec_json_shape() {
        let spec = FilterSpec::pcnet(vec![0.5, 0.5], 1.0, 10);
        let v = serde_json::to_value(&spec).unwrap();
        assert_eq!(v["variant"], "PCNET");
        let back: FilterSpec = serde_json::from_value(v).unwrap();
        assert_eq!(back, spec);
    }
}
