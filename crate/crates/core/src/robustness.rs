//! Random structural perturbation and empirical checks of the filter's linear
//! stability `‖h(L_p) − h(L)‖₂ ≤ C · ‖L_p − L‖₂`.
//!
//! All stability quantities use the filter without identity mapping; the identity
//! term cancels in the difference.

use std::collections::HashSet;

use ndarray::{Array1, Array2, Axis};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::SplitProtocol;
use crate::error::{Result, SpcError};
use crate::experiment::{classify_once, mean_ci95};
use crate::filter::{apply_filter, stability_constant, FilterSpec};
use crate::graph::{build_normalized_laplacian, Graph, SparseSymMatrix};
use crate::linalg::{power_iteration_norm, symmetric_spectral_norm, DENSE_NORM_LIMIT};
use crate::model::ModelConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PerturbMode {
    Add,
    Remove,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbSpec {
    /// Fraction of the current edge count that is changed.
    pub ratio: f64,
    pub mode: PerturbMode,
    pub seed: u64,
}

fn ceil_count(x: f64) -> usize {
    // guard against 0.2 * 100 landing a hair above 20
    (x - 1e-9).ceil().max(0.0) as usize
}

/// Removes and/or inserts uniformly random edges. `MIXED` swaps
/// `⌈ratio·|E|/2⌉` existing edges for as many absent pairs; `ADD` and `REMOVE`
/// change `⌈ratio·|E|⌉` edges on one side only. Features and labels are kept.
pub fn perturb(g: &Graph, spec: &PerturbSpec) -> Result<Graph> {
    if !(0.0..=1.0).contains(&spec.ratio) {
        return Err(SpcError::InvalidPerturbation(format!("ratio {} outside [0, 1]", spec.ratio)));
    }
    if spec.ratio == 0.0 {
        return Ok(g.clone());
    }
    let e = g.num_edges();
    let budget = spec.ratio * e as f64;
    if budget < 1.0 {
        return Err(SpcError::InvalidPerturbation(format!(
            "ratio {} of {e} edges changes less than one edge",
            spec.ratio
        )));
    }
    let (n_remove, n_add) = match spec.mode {
        PerturbMode::Add => (0, ceil_count(budget)),
        PerturbMode::Remove => (ceil_count(budget).min(e), 0),
        PerturbMode::Mixed => {
            let c = ceil_count(budget / 2.0);
            (c.min(e), c)
        }
    };
    let m = g.num_nodes();
    let total_pairs = m * m.saturating_sub(1) / 2;
    if n_add > total_pairs - e {
        return Err(SpcError::InvalidPerturbation(format!(
            "cannot add {n_add} edges: only {} absent pairs",
            total_pairs - e
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let removed: HashSet<usize> = sample(&mut rng, e, n_remove).into_iter().collect();
    let mut kept: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .enumerate()
        .filter(|(i, _)| !removed.contains(i))
        .map(|(_, &p)| p)
        .collect();

    let original: HashSet<(usize, usize)> = g.edges().iter().copied().collect();
    let absent = total_pairs - e;
    if n_add * 2 > absent {
        // dense regime: enumerate the complement instead of rejection sampling
        let pool: Vec<(usize, usize)> = (0..m)
            .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
            .filter(|p| !original.contains(p))
            .collect();
        kept.extend(sample(&mut rng, pool.len(), n_add).into_iter().map(|i| pool[i]));
    } else {
        let mut added = HashSet::with_capacity(n_add);
        while added.len() < n_add {
            let a = rng.random_range(0..m);
            let b = rng.random_range(0..m);
            if a == b {
                continue;
            }
            let pair = (a.min(b), a.max(b));
            if !original.contains(&pair) && added.insert(pair) {
                kept.push(pair);
            }
        }
    }
    g.with_edges(kept)
}

/// `‖h(L)x − h(L_p)x‖₂ / ‖x‖₂` for a single signal.
pub fn relative_output_distance(
    l: &SparseSymMatrix,
    lp: &SparseSymMatrix,
    spec: &FilterSpec,
    x: &Array1<f64>,
) -> Result<f64> {
    let norm = x.dot(x).sqrt();
    if norm == 0.0 {
        return Err(SpcError::ZeroSignal);
    }
    let spec = spec.clone().without_identity();
    let col = x.view().insert_axis(Axis(1));
    let a = apply_filter(l, col, &spec)?;
    let b = apply_filter(lp, col, &spec)?;
    let diff = a - b;
    Ok(diff.iter().map(|v| v * v).sum::<f64>().sqrt() / norm)
}

/// Dense matrix of `h(L)` (no identity mapping), built by filtering the identity.
pub fn dense_filter_matrix(l: &SparseSymMatrix, spec: &FilterSpec) -> Result<Array2<f64>> {
    apply_filter(l, Array2::eye(l.dim()).view(), &spec.clone().without_identity())
}

/// `‖h(L_p) − h(L)‖₂`, dense up to [`DENSE_NORM_LIMIT`] nodes and by power
/// iteration beyond.
pub fn filter_operator_distance(l: &SparseSymMatrix, lp: &SparseSymMatrix, spec: &FilterSpec) -> Result<f64> {
    if l.dim() != lp.dim() {
        return Err(SpcError::DimensionMismatch(format!("{} vs {}", l.dim(), lp.dim())));
    }
    if l.dim() <= DENSE_NORM_LIMIT {
        let diff = dense_filter_matrix(lp, spec)? - dense_filter_matrix(l, spec)?;
        return Ok(symmetric_spectral_norm(&diff));
    }
    let spec = spec.clone().without_identity();
    spec.validate()?;
    Ok(power_iteration_norm(l.dim(), |x| {
        let col = x.view().insert_axis(Axis(1));
        let a = apply_filter(lp, col, &spec).expect("validated");
        let b = apply_filter(l, col, &spec).expect("validated");
        (a - b).remove_axis(Axis(1))
    }))
}

/// `‖L_p − L‖₂`.
pub fn operator_distance(l: &SparseSymMatrix, lp: &SparseSymMatrix) -> Result<f64> {
    let diff = lp.linear_combination(1.0, l, -1.0)?;
    if diff.dim() <= DENSE_NORM_LIMIT {
        Ok(symmetric_spectral_norm(&diff.to_dense()))
    } else {
        Ok(power_iteration_norm(diff.dim(), |x| diff.matvec(x)))
    }
}

/// One evaluation of the linear-stability inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityCheck {
    /// `C · ‖L_p − L‖₂`.
    pub bound: f64,
    /// `‖h(L_p) − h(L)‖₂`.
    pub observed: f64,
    /// `bound − observed`; non-negative when the inequality holds.
    pub margin: f64,
    pub constant: f64,
    pub laplacian_distance: f64,
}

pub fn stability_check(g: &Graph, perturbed: &Graph, spec: &FilterSpec) -> Result<StabilityCheck> {
    let l = build_normalized_laplacian(g);
    let lp = build_normalized_laplacian(perturbed);
    let constant = stability_constant(spec);
    let laplacian_distance = operator_distance(&l, &lp)?;
    let observed = filter_operator_distance(&l, &lp, spec)?;
    let bound = constant * laplacian_distance;
    Ok(StabilityCheck {
        bound,
        observed,
        margin: bound - observed,
        constant,
        laplacian_distance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub ratio: f64,
    pub seed: u64,
    pub test_acc: f64,
    pub homophily: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub ratio: f64,
    pub mean_acc: f64,
    pub ci95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessSweep {
    pub mode: PerturbMode,
    pub entries: Vec<SweepEntry>,
    pub summary: Vec<SweepSummary>,
}

impl RobustnessSweep {
    /// `ratio,mean_acc,ci95` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("ratio,mean_acc,ci95\n");
        for s in &self.summary {
            out.push_str(&format!("{},{},{}\n", s.ratio, s.mean_acc, s.ci95));
        }
        out
    }
}

/// Salt mixed into the run seed to derive the perturbation seed.
pub const PERTURB_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Retrains on the perturbed graph for every `(ratio, seed)` cell and reports
/// test accuracy per cell plus mean and 95% interval per ratio.
pub fn robustness_sweep(
    g: &Graph,
    protocol: &SplitProtocol,
    config: &ModelConfig,
    ratios: &[f64],
    mode: PerturbMode,
    seeds: &[u64],
) -> Result<RobustnessSweep> {
    if ratios.is_empty() || seeds.is_empty() {
        return Err(SpcError::InvalidConfig("robustness sweep needs ratios and seeds".into()));
    }
    let cells: Vec<(f64, u64)> = ratios.iter().flat_map(|&r| seeds.iter().map(move |&s| (r, s))).collect();
    let entries = cells
        .par_iter()
        .map(|&(ratio, seed)| {
            let pg = perturb(g, &PerturbSpec { ratio, mode, seed: seed ^ PERTURB_SALT })?;
            let res = classify_once(&pg, protocol, config, seed)?;
            Ok(SweepEntry {
                ratio,
                seed,
                test_acc: res.test_acc,
                homophily: crate::graph::edge_homophily(&pg).ok(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = ratios
        .iter()
        .map(|&ratio| {
            let accs: Vec<f64> = entries.iter().filter(|e| e.ratio == ratio).map(|e| e.test_acc).collect();
            let (mean_acc, ci95) = mean_ci95(&accs);
            SweepSummary { ratio, mean_acc, ci95 }
        })
        .collect();
    Ok(RobustnessSweep { mode, entries, summary })
}
