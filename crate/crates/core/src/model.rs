//! SPCNet node classifier: a small perceptron `Θ(X)` followed by the
//! Poisson–Charlier filter, trained full-batch with softmax cross-entropy.
//!
//! Three variants share the same code path:
//!
//! * `SPCNET_D`: filter order `k` fixed by configuration.
//! * `SPCNET_L`: `k` is a trainable scalar initialized to 1.
//! * `PCNET`: multi-term filter with trainable (optionally frozen) mixing weights `β`.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::distr::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::SplitSpec;
use crate::error::{Result, SpcError};
use crate::filter::{apply_filter, apply_filter_transpose_grad, filter_param_grads, FilterSpec, FilterVariant};
use crate::graph::{build_normalized_laplacian, Graph, SparseSymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ModelVariant {
    SpcnetD,
    SpcnetL,
    Pcnet,
}

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub variant: ModelVariant,
    /// Hidden width of `Θ`; 0 makes `Θ` a single linear layer.
    pub hidden: usize,
    pub dropout: f64,
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub patience: usize,
    /// Filter order for `SPCNET_D`; ignored by the other variants.
    pub k: f64,
    pub t: f64,
    pub truncation: usize,
    /// `K` for `PCNET`.
    pub pcnet_terms: usize,
    /// Initial `β` for `PCNET`; defaults to `1/(K+1)` everywhere. Its length overrides `pcnet_terms`.
    pub beta_init: Option<Vec<f64>>,
    pub freeze_beta: bool,
    pub include_identity: bool,
    pub row_normalize: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            variant: ModelVariant::SpcnetD,
            hidden: 64,
            dropout: 0.5,
            lr: 0.01,
            weight_decay: 5e-4,
            epochs: 1000,
            patience: 200,
            k: 1.0,
            t: 0.5,
            truncation: 10,
            pcnet_terms: 10,
            beta_init: None,
            freeze_beta: false,
            include_identity: true,
            row_normalize: true,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SpcError::InvalidConfig(msg));
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.lr));
        }
        if !(self.weight_decay >= 0.0) {
            return bad(format!("weight decay must be >= 0, got {}", self.weight_decay));
        }
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return bad(format!("t must be >= 0, got {}", self.t));
        }
        if !self.k.is_finite() {
            return bad(format!("k must be finite, got {}", self.k));
        }
        if self.variant == ModelVariant::Pcnet {
            match &self.beta_init {
                Some(b) if b.len() < 2 => return bad("beta_init needs length K+1 >= 2".into()),
                None if self.pcnet_terms == 0 => return bad("PCNET needs K >= 1".into()),
                _ => {}
            }
        } else if self.beta_init.is_some() || self.freeze_beta {
            return bad("beta_init and freeze_beta only apply to PCNET".into());
        }
        Ok(())
    }

    fn initial_beta(&self) -> Vec<f64> {
        self.beta_init.clone().unwrap_or_else(|| {
            let k = self.pcnet_terms;
            vec![1.0 / (k + 1) as f64; k + 1]
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    fn zeros_like(&self) -> Self {
        Self {
            weight: Array2::zeros(self.weight.raw_dim()),
            bias: Array1::zeros(self.bias.raw_dim()),
        }
    }
}

/// Trainable state: perceptron layers plus the filter's own scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub layers: Vec<Dense>,
    /// Learnable order (`SPCNET_L` only).
    pub k: Option<f64>,
    /// Mixing weights (`PCNET` only).
    pub beta: Option<Vec<f64>>,
}

impl ModelParams {
    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self.layers.iter().map(Dense::zeros_like).collect(),
            k: self.k.map(|_| 0.0),
            beta: self.beta.as_ref().map(|b| vec![0.0; b.len()]),
        }
    }

    /// Every parameter tensor as a flat slice, in a fixed order.
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for layer in &self.layers {
            out.push(layer.weight.as_slice().expect("standard layout"));
            out.push(layer.bias.as_slice().expect("standard layout"));
        }
        if let Some(k) = &self.k {
            out.push(std::slice::from_ref(k));
        }
        if let Some(b) = &self.beta {
            out.push(b);
        }
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for layer in &mut self.layers {
            out.push(layer.weight.as_slice_mut().expect("standard layout"));
            out.push(layer.bias.as_slice_mut().expect("standard layout"));
        }
        if let Some(k) = &mut self.k {
            out.push(std::slice::from_mut(k));
        }
        if let Some(b) = &mut self.beta {
            out.push(b);
        }
        out
    }
}

/// Row-compressed copy of a mostly-zero feature matrix.
#[derive(Debug, Clone)]
struct SparseRows {
    indptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Feature matrices at most this dense take the sparse first-layer path.
const SPARSE_FEATURE_DENSITY: f64 = 0.1;

impl SparseRows {
    fn from_dense(x: &Array2<f64>) -> Option<Self> {
        let nnz = x.iter().filter(|v| **v != 0.0).count();
        if x.is_empty() || nnz as f64 > SPARSE_FEATURE_DENSITY * x.len() as f64 {
            return None;
        }
        let mut indptr = vec![0];
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        for row in x.rows() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            indptr.push(cols.len());
        }
        Some(Self { indptr, cols, vals })
    }
}

#[derive(Debug, Clone)]
enum LayerInput {
    Dense(Array2<f64>),
    /// Post-dropout values aligned with the classifier's [`SparseRows`].
    Sparse(Vec<f64>),
}

/// Intermediates kept by [`Classifier::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input to each dense layer after dropout.
    inputs: Vec<LayerInput>,
    /// Inverted-dropout multipliers matching `inputs` (absent when dropout is off).
    masks: Vec<Option<Array2<f64>>>,
    /// Pre-activation of every hidden layer.
    pre_acts: Vec<Array2<f64>>,
    /// `Θ(X)`, the filter input.
    theta: Array2<f64>,
    spec: FilterSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_acc: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
}

/// A graph paired with its normalized Laplacian and a model configuration.
#[derive(Debug, Clone)]
pub struct Classifier<'g> {
    graph: &'g Graph,
    laplacian: SparseSymMatrix,
    sparse_features: Option<SparseRows>,
    config: ModelConfig,
}

impl<'g> Classifier<'g> {
    pub fn new(graph: &'g Graph, config: ModelConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            laplacian: build_normalized_laplacian(graph),
            sparse_features: SparseRows::from_dense(graph.features()),
            graph,
            config,
        })
    }

    /// Disables the sparse first-layer path (used to cross-check it).
    pub fn force_dense_features(mut self) -> Self {
        self.sparse_features = None;
        self
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn laplacian(&self) -> &SparseSymMatrix {
        &self.laplacian
    }

    /// Glorot-uniform weights, zero biases, `k = 1` for `SPCNET_L`.
    pub fn init_params(&self, rng: &mut impl Rng) -> ModelParams {
        let d = self.graph.feature_dim();
        let c = self.graph.num_classes();
        let widths: Vec<usize> = if self.config.hidden == 0 {
            vec![d, c]
        } else {
            vec![d, self.config.hidden, c]
        };
        let layers = widths
            .windows(2)
            .map(|w| {
                let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
                let dist = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
                Dense {
                    weight: Array2::from_shape_simple_fn((w[0], w[1]), || dist.sample(rng)),
                    bias: Array1::zeros(w[1]),
                }
            })
            .collect();
        ModelParams {
            layers,
            k: (self.config.variant == ModelVariant::SpcnetL).then_some(1.0),
            beta: (self.config.variant == ModelVariant::Pcnet).then(|| self.config.initial_beta()),
        }
    }

    /// The filter the current parameters describe.
    pub fn filter_spec(&self, params: &ModelParams) -> FilterSpec {
        let variant = match self.config.variant {
            ModelVariant::SpcnetD => FilterVariant::Spcnet { k: self.config.k },
            ModelVariant::SpcnetL => FilterVariant::Spcnet {
                k: params.k.expect("SPCNET_L params carry k"),
            },
            ModelVariant::Pcnet => FilterVariant::Pcnet {
                beta: params.beta.clone().expect("PCNET params carry beta"),
            },
        };
        FilterSpec {
            variant,
            t: self.config.t,
            truncation: self.config.truncation,
            include_identity: self.config.include_identity,
        }
    }

    fn check_shapes(&self, params: &ModelParams) -> Result<()> {
        let first = params
            .layers
            .first()
            .ok_or_else(|| SpcError::DimensionMismatch("model has no layers".into()))?;
        let last = params.layers.last().expect("non-empty");
        if first.weight.nrows() != self.graph.feature_dim() || last.weight.ncols() != self.graph.num_classes() {
            return Err(SpcError::DimensionMismatch(format!(
                "parameters map {} -> {}, graph has d={} C={}",
                first.weight.nrows(),
                last.weight.ncols(),
                self.graph.feature_dim(),
                self.graph.num_classes()
            )));
        }
        Ok(())
    }

    /// Pre-softmax logits `apply_filter(L̃, Θ(X))`. Dropout is active only when
    /// `dropout_rng` is given.
    pub fn forward(
        &self,
        params: &ModelParams,
        mut dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(Array2<f64>, ForwardCache)> {
        self.check_shapes(params)?;
        let p = self.config.dropout;
        let keep = 1.0 / (1.0 - p);
        let mut inputs = Vec::with_capacity(params.layers.len());
        let mut masks = Vec::with_capacity(params.layers.len());
        let mut pre_acts = Vec::new();
        let mut h = Array2::zeros((0, 0));
        for (i, layer) in params.layers.iter().enumerate() {
            let mut out = match (i, &self.sparse_features) {
                (0, Some(sp)) => {
                    let mut vals = sp.vals.clone();
                    if let Some(rng) = dropout_rng.as_deref_mut().filter(|_| p > 0.0) {
                        for v in &mut vals {
                            *v *= if rng.random::<f64>() < p { 0.0 } else { keep };
                        }
                    }
                    let mut out = Array2::zeros((self.graph.num_nodes(), layer.weight.ncols()));
                    for (r, mut out_row) in out.rows_mut().into_iter().enumerate() {
                        let span = sp.indptr[r]..sp.indptr[r + 1];
                        for (&col, &v) in sp.cols[span.clone()].iter().zip(&vals[span]) {
                            out_row.scaled_add(v, &layer.weight.row(col));
                        }
                    }
                    inputs.push(LayerInput::Sparse(vals));
                    masks.push(None);
                    out
                }
                _ => {
                    if i == 0 {
                        h = self.graph.features().clone();
                    }
                    let mask = match dropout_rng.as_deref_mut() {
                        Some(rng) if p > 0.0 => {
                            let mask = Array2::from_shape_simple_fn(h.raw_dim(), || {
                                if rng.random::<f64>() < p {
                                    0.0
                                } else {
                                    keep
                                }
                            });
                            h *= &mask;
                            Some(mask)
                        }
                        _ => None,
                    };
                    let out = h.dot(&layer.weight);
                    inputs.push(LayerInput::Dense(std::mem::take(&mut h)));
                    masks.push(mask);
                    out
                }
            };
            out += &layer.bias;
            if i + 1 < params.layers.len() {
                pre_acts.push(out.clone());
                out.mapv_inplace(|v| v.max(0.0));
            }
            h = out;
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(SpcError::NumericalDivergence);
        }
        let spec = self.filter_spec(params);
        let logits = apply_filter(&self.laplacian, h.view(), &spec).map_err(|e| match e {
            SpcError::NonFinite(_) => SpcError::NumericalDivergence,
            other => other,
        })?;
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(SpcError::NumericalDivergence);
        }
        Ok((
            logits,
            ForwardCache {
                inputs,
                masks,
                pre_acts,
                theta: h,
                spec,
            },
        ))
    }

    /// Mean cross-entropy over `train_idx` and its gradient for every parameter.
    /// Weight decay is added to the dense weight matrices only.
    pub fn loss_and_grads(
        &self,
        params: &ModelParams,
        train_idx: &[usize],
        dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(f64, ModelParams)> {
        if train_idx.is_empty() {
            return Err(SpcError::EmptyIndex("train_idx"));
        }
        let (logits, cache) = self.forward(params, dropout_rng)?;
        let (loss, dlogits) = softmax_cross_entropy(logits.view(), self.graph.labels(), train_idx);

        let mut grads = params.zeros_like();
        match (&mut grads.k, &mut grads.beta) {
            (Some(gk), _) => {
                *gk = filter_param_grads(&self.laplacian, cache.theta.view(), dlogits.view(), &cache.spec)?[0];
            }
            (_, Some(gb)) if !self.config.freeze_beta => {
                *gb = filter_param_grads(&self.laplacian, cache.theta.view(), dlogits.view(), &cache.spec)?;
            }
            _ => {}
        }

        let mut upstream = apply_filter_transpose_grad(&self.laplacian, dlogits.view(), &cache.spec)?;
        for i in (0..params.layers.len()).rev() {
            let layer = &params.layers[i];
            let g = &mut grads.layers[i];
            g.weight = match &cache.inputs[i] {
                LayerInput::Dense(x) => x.t().dot(&upstream),
                LayerInput::Sparse(vals) => {
                    let sp = self.sparse_features.as_ref().expect("sparse input implies sparse features");
                    let mut w = Array2::zeros(layer.weight.raw_dim());
                    for (r, up_row) in upstream.rows().into_iter().enumerate() {
                        let span = sp.indptr[r]..sp.indptr[r + 1];
                        for (&col, &v) in sp.cols[span.clone()].iter().zip(&vals[span]) {
                            w.row_mut(col).scaled_add(v, &up_row);
                        }
                    }
                    w
                }
            };
            g.weight.scaled_add(self.config.weight_decay, &layer.weight);
            g.bias = upstream.sum_axis(Axis(0));
            if i == 0 {
                break;
            }
            let mut down = upstream.dot(&layer.weight.t());
            if let Some(mask) = &cache.masks[i] {
                down *= mask;
            }
            ndarray::Zip::from(&mut down)
                .and(&cache.pre_acts[i - 1])
                .for_each(|g, &a| {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                });
            upstream = down;
        }
        Ok((loss, grads))
    }

    /// Accuracy of argmax predictions over `idx` with dropout off.
    pub fn evaluate(&self, params: &ModelParams, idx: &[usize]) -> Result<f64> {
        let (logits, _) = self.forward(params, None)?;
        accuracy(logits.view(), self.graph.labels(), idx)
    }

    /// Full-batch Adam with early stopping on validation accuracy. When the split
    /// has no validation nodes the training nodes are used for model selection.
    pub fn train(&self, split: &SplitSpec, seed: u64) -> Result<TrainOutcome> {
        split.validate(self.graph.num_nodes())?;
        if split.train.is_empty() {
            return Err(SpcError::EmptyIndex("train_idx"));
        }
        let select_idx: &[usize] = if split.val.is_empty() { &split.train } else { &split.val };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = self.init_params(&mut rng);
        let mut adam = Adam::new(&params, self.config.lr);
        let mut best = params.clone();
        let mut best_acc = f64::NEG_INFINITY;
        let mut best_epoch = 0;
        let mut history = Vec::new();
        for epoch in 0..self.config.epochs {
            let start = Instant::now();
            let (loss, grads) = self.loss_and_grads(&params, &split.train, Some(&mut rng))?;
            adam.step(&mut params, &grads, self.config.freeze_beta);
            let acc = self.evaluate(&params, select_idx)?;
            history.push(EpochRecord {
                epoch,
                train_loss: loss,
                val_acc: acc,
                seconds: start.elapsed().as_secs_f64(),
            });
            if acc > best_acc {
                best_acc = acc;
                best_epoch = epoch;
                best = params.clone();
            }
            if epoch - best_epoch >= self.config.patience {
                break;
            }
        }
        Ok(TrainOutcome {
            params: best,
            best_epoch,
            history,
        })
    }
}

/// Mean cross-entropy over `idx` and its gradient with respect to every logit.
pub fn softmax_cross_entropy(logits: ArrayView2<'_, f64>, labels: &[usize], idx: &[usize]) -> (f64, Array2<f64>) {
    let mut grad = Array2::zeros(logits.raw_dim());
    let scale = 1.0 / idx.len() as f64;
    let mut loss = 0.0;
    for &i in idx {
        let row = logits.row(i);
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
        let log_z = max + sum.ln();
        loss -= row[labels[i]] - log_z;
        let mut g = grad.row_mut(i);
        for (c, v) in row.iter().enumerate() {
            g[c] = (v - log_z).exp() * scale;
        }
        g[labels[i]] -= scale;
    }
    (loss * scale, grad)
}

/// Row argmax with ties resolved to the lowest class index.
pub fn predict(logits: ArrayView2<'_, f64>) -> Vec<usize> {
    logits
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

pub fn accuracy(logits: ArrayView2<'_, f64>, labels: &[usize], idx: &[usize]) -> Result<f64> {
    if idx.is_empty() {
        return Err(SpcError::EmptyIndex("evaluation idx"));
    }
    let pred = predict(logits);
    let hits = idx.iter().filter(|&&i| pred[i] == labels[i]).count();
    Ok(hits as f64 / idx.len() as f64)
}

/// Adaptive-moment optimizer over the flat parameter slices.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(params: &ModelParams, lr: f64) -> Self {
        let zeros: Vec<Vec<f64>> = params.slices().iter().map(|s| vec![0.0; s.len()]).collect();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn step(&mut self, params: &mut ModelParams, grads: &ModelParams, freeze_beta: bool) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step);
        let bc2 = 1.0 - self.beta2.powi(self.step);
        let frozen = if freeze_beta && params.beta.is_some() {
            Some(params.slices().len() - 1)
        } else {
            None
        };
        let grad_slices = grads.slices();
        for (slot, (p, g)) in params.slices_mut().into_iter().zip(grad_slices).enumerate() {
            if Some(slot) == frozen {
                continue;
            }
            let (m, v) = (&mut self.m[slot], &mut self.v[slot]);
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

/// On-disk model: hyperparameters plus named numeric arrays
/// (`W1`, `b1`, `W2`, `b2`, `k`, `beta`; absent entries are omitted).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub hyper: ModelConfig,
    #[serde(flatten)]
    pub tensors: BTreeMap<String, serde_json::Value>,
}

pub const CHECKPOINT_FORMAT: &str = "spcnet-checkpoint-v1";

impl Checkpoint {
    pub fn from_params(params: &ModelParams, hyper: &ModelConfig) -> Self {
        let mut tensors = BTreeMap::new();
        for (i, layer) in params.layers.iter().enumerate() {
            let rows: Vec<Vec<f64>> = layer.weight.rows().into_iter().map(|r| r.to_vec()).collect();
            tensors.insert(format!("W{}", i + 1), serde_json::json!(rows));
            tensors.insert(format!("b{}", i + 1), serde_json::json!(layer.bias.to_vec()));
        }
        if let Some(k) = params.k {
            tensors.insert("k".into(), serde_json::json!(k));
        }
        if let Some(b) = &params.beta {
            tensors.insert("beta".into(), serde_json::json!(b));
        }
        Self {
            format: CHECKPOINT_FORMAT.into(),
            hyper: hyper.clone(),
            tensors,
        }
    }

    pub fn to_params(&self) -> Result<ModelParams> {
        let bad = |msg: &str| SpcError::InvalidConfig(format!("checkpoint: {msg}"));
        let mut layers = Vec::new();
        for i in 1.. {
            let Some(w) = self.tensors.get(&format!("W{i}")) else { break };
            let rows: Vec<Vec<f64>> = serde_json::from_value(w.clone())?;
            let bias: Vec<f64> = serde_json::from_value(
                self.tensors.get(&format!("b{i}")).ok_or_else(|| bad("missing bias"))?.clone(),
            )?;
            let ncols = bias.len();
            if rows.iter().any(|r| r.len() != ncols) {
                return Err(bad("ragged weight matrix"));
            }
            let weight = Array2::from_shape_vec((rows.len(), ncols), rows.concat()).map_err(|e| bad(&e.to_string()))?;
            layers.push(Dense {
                weight,
                bias: Array1::from(bias),
            });
        }
        if layers.is_empty() {
            return Err(bad("no layers"));
        }
        let k = self.tensors.get("k").map(|v| serde_json::from_value(v.clone())).transpose()?;
        let beta = self.tensors.get("beta").map(|v| serde_json::from_value(v.clone())).transpose()?;
        Ok(ModelParams { layers, k, beta })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
