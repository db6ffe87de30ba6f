//! Declarative experiments and the reports they produce.
//!
//! An [`ExperimentConfig`] is a single JSON document. Every source of randomness
//! derives from its `seeds`, so two runs of the same config produce the same
//! [`RunReport`] apart from the `timing` block.

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{generate_sbm, load_dataset, make_split, resolve_dataset_dir, SbmConfig, SplitProtocol};
use crate::error::{Result, SpcError};
use crate::filter::{FilterSpec, FilterVariant};
use crate::graph::{edge_homophily, Graph};
use crate::model::{Classifier, ModelConfig, ModelVariant};
use crate::robustness::{perturb, robustness_sweep, stability_check, PerturbMode, PerturbSpec, RobustnessSweep, StabilityCheck, PERTURB_SALT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Classify,
    Sbm,
    Grid,
    PlotFilter,
    Stability,
    Robustness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    #[serde(default = "default_grid_k")]
    pub k: Vec<f64>,
    #[serde(default = "default_grid_t")]
    pub t: Vec<f64>,
}

fn default_grid_k() -> Vec<f64> {
    vec![0.5, 1.0, 1.5, 2.0]
}

fn default_grid_t() -> Vec<f64> {
    vec![0.25, 0.5, 1.0, 2.0]
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            k: default_grid_k(),
            t: default_grid_t(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessConfig {
    pub ratios: Vec<f64>,
    #[serde(default = "default_mode")]
    pub mode: PerturbMode,
}

fn default_mode() -> PerturbMode {
    PerturbMode::Mixed
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbConfig {
    pub ratio: f64,
    #[serde(default = "default_mode")]
    pub mode: PerturbMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotConfig {
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_lambda_max")]
    pub lambda_max: f64,
}

fn default_step() -> f64 {
    0.01
}

fn default_lambda_max() -> f64 {
    2.0
}

impl Default for PlotConfig {
    fn default() -> Self {
        Self {
            step: default_step(),
            lambda_max: default_lambda_max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub task: Task,
    /// Dataset directory (relative paths also resolve under `$SPCNET_DATA_DIR`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    /// Synthetic graph; its `seed` is offset by each run seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sbm: Option<SbmConfig>,
    /// Defaults to 60/20/20 for datasets and 10/90 for SBM graphs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitProtocol>,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robustness: Option<RobustnessConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturb: Option<PerturbConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot: Option<PlotConfig>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl ExperimentConfig {
    pub fn new(task: Task) -> Self {
        Self {
            task,
            dataset: None,
            sbm: None,
            split: None,
            model: ModelConfig::default(),
            grid: None,
            robustness: None,
            perturb: None,
            plot: None,
            seeds: default_seeds(),
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(SpcError::InvalidConfig(msg.to_string()));
        self.model.validate()?;
        if self.seeds.is_empty() {
            return bad("seeds must not be empty");
        }
        if self.dataset.is_some() && self.sbm.is_some() {
            return bad("give either dataset or sbm, not both");
        }
        let needs_graph = !matches!(self.task, Task::PlotFilter);
        match self.task {
            Task::Sbm if self.sbm.is_none() => return bad("task sbm requires an sbm block"),
            Task::Classify if self.dataset.is_none() => return bad("task classify requires a dataset"),
            _ if needs_graph && self.dataset.is_none() && self.sbm.is_none() => {
                return bad("task requires a dataset or an sbm block")
            }
            _ => {}
        }
        if let Some(sbm) = &self.sbm {
            sbm.validate()?;
        }
        if self.task == Task::Grid {
            let grid = self.grid.clone().unwrap_or_default();
            if grid.k.is_empty() || grid.t.is_empty() {
                return bad("grid k and t lists must be non-empty");
            }
            if self.model.variant != ModelVariant::SpcnetD {
                return bad("grid search tunes SPCNET_D only");
            }
        }
        if self.task == Task::Robustness && self.robustness.as_ref().is_none_or(|r| r.ratios.is_empty()) {
            return bad("task robustness requires robustness.ratios");
        }
        if self.task == Task::Stability && self.perturb.is_none() {
            return bad("task stability requires a perturb block");
        }
        Ok(())
    }

    fn split_protocol(&self) -> SplitProtocol {
        self.split.clone().unwrap_or_else(|| {
            if self.sbm.is_some() {
                SplitProtocol::sbm_default()
            } else {
                SplitProtocol::dense_random()
            }
        })
    }

    /// Graph used for run seed `seed`. Datasets are loaded once by the caller;
    /// SBM graphs are regenerated per seed.
    fn graph_for_seed(&self, loaded: Option<&Graph>, seed: u64) -> Result<Graph> {
        if let Some(g) = loaded {
            return Ok(g.clone());
        }
        let mut sbm = self.sbm.clone().expect("validated: sbm present");
        sbm.seed = sbm.seed.wrapping_add(seed);
        generate_sbm(&sbm)
    }

    fn load_graph(&self) -> Result<Option<Graph>> {
        match &self.dataset {
            None => Ok(None),
            Some(path) => {
                let mut g = load_dataset(resolve_dataset_dir(path))?;
                if self.model.row_normalize {
                    g.row_normalize_features();
                }
                Ok(Some(g))
            }
        }
    }

    /// Filter described by the model block before any training.
    pub fn filter_spec(&self) -> FilterSpec {
        let m = &self.model;
        let variant = match m.variant {
            ModelVariant::SpcnetD => FilterVariant::Spcnet { k: m.k },
            ModelVariant::SpcnetL => FilterVariant::Spcnet { k: 1.0 },
            ModelVariant::Pcnet => FilterVariant::Pcnet {
                beta: m.beta_init.clone().unwrap_or_else(|| vec![1.0 / (m.pcnet_terms + 1) as f64; m.pcnet_terms + 1]),
            },
        };
        FilterSpec {
            variant,
            t: m.t,
            truncation: m.truncation,
            include_identity: m.include_identity,
        }
    }
}

/// Outcome of training and testing one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    /// Accuracy on the model-selection nodes (validation, or train when there is none).
    pub val_acc: f64,
    pub test_acc: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub train_losses: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learned_k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learned_beta: Option<Vec<f64>>,
    #[serde(skip)]
    pub mean_epoch_seconds: f64,
}

/// Split, train and test once. The split and the model share `seed`.
pub fn classify_once(g: &Graph, protocol: &SplitProtocol, config: &ModelConfig, seed: u64) -> Result<SeedResult> {
    let split = make_split(g, protocol, seed)?;
    if split.test.is_empty() {
        return Err(SpcError::EmptyIndex("test split"));
    }
    let clf = Classifier::new(g, config.clone())?;
    let out = clf.train(&split, seed)?;
    let select: &[usize] = if split.val.is_empty() { &split.train } else { &split.val };
    let n = out.history.len().max(1) as f64;
    Ok(SeedResult {
        seed,
        val_acc: clf.evaluate(&out.params, select)?,
        test_acc: clf.evaluate(&out.params, &split.test)?,
        best_epoch: out.best_epoch,
        epochs_run: out.history.len(),
        train_losses: out.history.iter().map(|h| h.train_loss).collect(),
        learned_k: out.params.k,
        learned_beta: out.params.beta.clone(),
        mean_epoch_seconds: out.history.iter().map(|h| h.seconds).sum::<f64>() / n,
    })
}

/// Mean and normal-approximation 95% half-width `1.96·s/√n` (sample standard
/// deviation; zero for a single run).
pub fn mean_ci95(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * var.sqrt() / n.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub k: f64,
    pub t: f64,
    pub mean_val_acc: f64,
    pub mean_test_acc: f64,
    pub test_ci95: f64,
    pub per_seed: Vec<SeedResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best_k: f64,
    pub best_t: f64,
    pub cells: Vec<GridCell>,
}

impl GridResult {
    pub fn best(&self) -> &GridCell {
        self.cells
            .iter()
            .find(|c| c.k == self.best_k && c.t == self.best_t)
            .expect("best cell is part of the grid")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,t,mean_val_acc,mean_test_acc,test_ci95\n");
        for c in &self.cells {
            out.push_str(&format!("{},{},{},{},{}\n", c.k, c.t, c.mean_val_acc, c.mean_test_acc, c.test_ci95));
        }
        out
    }
}

/// Picks the cell with the highest mean validation accuracy; ties go to the
/// smaller `t`, then the smaller `k`.
pub fn select_best(cells: &[GridCell]) -> Option<(f64, f64)> {
    let mut best: Option<&GridCell> = None;
    for c in cells {
        best = match best {
            None => Some(c),
            Some(b) => {
                let better = c.mean_val_acc > b.mean_val_acc
                    || (c.mean_val_acc == b.mean_val_acc && (c.t < b.t || (c.t == b.t && c.k < b.k)));
                Some(if better { c } else { b })
            }
        };
    }
    best.map(|c| (c.k, c.t))
}

fn sorted_unique(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Trains SPCNET_D for every `(k, t)` in the grid and every seed.
pub fn grid_search(config: &ExperimentConfig) -> Result<GridResult> {
    config.validate()?;
    let grid = config.grid.clone().unwrap_or_default();
    let loaded = config.load_graph()?;
    let protocol = config.split_protocol();
    let graphs: Vec<(u64, Graph)> = config
        .seeds
        .iter()
        .map(|&s| Ok((s, config.graph_for_seed(loaded.as_ref(), s)?)))
        .collect::<Result<_>>()?;
    let mut jobs = Vec::new();
    for &t in &sorted_unique(&grid.t) {
        for &k in &sorted_unique(&grid.k) {
            jobs.push((k, t));
        }
    }
    let cells = jobs
        .par_iter()
        .map(|&(k, t)| {
            let model = ModelConfig { k, t, ..config.model.clone() };
            let per_seed = graphs
                .iter()
                .map(|(s, g)| classify_once(g, &protocol, &model, *s))
                .collect::<Result<Vec<_>>>()?;
            let vals: Vec<f64> = per_seed.iter().map(|r| r.val_acc).collect();
            let tests: Vec<f64> = per_seed.iter().map(|r| r.test_acc).collect();
            let (mean_val_acc, _) = mean_ci95(&vals);
            let (mean_test_acc, test_ci95) = mean_ci95(&tests);
            Ok(GridCell { k, t, mean_val_acc, mean_test_acc, test_ci95, per_seed })
        })
        .collect::<Result<Vec<_>>>()?;
    let (best_k, best_t) = select_best(&cells).expect("grid is non-empty");
    Ok(GridResult { best_k, best_t, cells })
}

/// `lambda,response` CSV over `[0, lambda_max]`.
pub fn filter_curve_csv(spec: &FilterSpec, plot: &PlotConfig) -> Result<String> {
    spec.validate()?;
    if !(plot.step > 0.0) || !(plot.lambda_max >= 0.0) {
        return Err(SpcError::InvalidConfig("plot step must be > 0 and lambda_max >= 0".into()));
    }
    let steps = (plot.lambda_max / plot.step + 1e-9).floor() as usize;
    let mut out = String::from("lambda,response\n");
    for i in 0..=steps {
        let lambda = i as f64 * plot.step;
        out.push_str(&format!("{lambda},{}\n", spec.response(lambda)));
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub mean_epoch_seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub task: Task,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    /// Test accuracy per seed, in `seeds` order.
    pub accuracies: Vec<f64>,
    pub mean: f64,
    pub ci95: f64,
    pub per_seed: Vec<SeedResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub homophily: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub robustness: Option<RobustnessSweep>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability: Option<Vec<StabilityCheck>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter_curve: Option<String>,
    pub timing: Timing,
}

impl RunReport {
    fn new(config: &ExperimentConfig, per_seed: Vec<SeedResult>) -> Self {
        let accuracies: Vec<f64> = per_seed.iter().map(|r| r.test_acc).collect();
        let (mean, ci95) = mean_ci95(&accuracies);
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            task: config.task,
            config: config.clone(),
            seeds: config.seeds.clone(),
            timing: Timing {
                total_seconds: 0.0,
                mean_epoch_seconds: per_seed.iter().map(|r| r.mean_epoch_seconds).collect(),
            },
            accuracies,
            mean,
            ci95,
            per_seed,
            homophily: None,
            grid: None,
            robustness: None,
            stability: None,
            filter_curve: None,
        }
    }

    /// The report with its timing block cleared, for determinism comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            timing: Timing::default(),
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// One-paragraph summary for standard output.
    pub fn summary(&self) -> String {
        let mut s = format!("task {:?}: ", self.task);
        if !self.accuracies.is_empty() {
            s.push_str(&format!(
                "test accuracy {:.2} ± {:.2} % over {} seed(s)",
                100.0 * self.mean,
                100.0 * self.ci95,
                self.accuracies.len()
            ));
        }
        if let Some(g) = &self.grid {
            s.push_str(&format!("; best (k, t) = ({}, {})", g.best_k, g.best_t));
        }
        if let Some(st) = &self.stability {
            let worst = st.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min);
            s.push_str(&format!("{} stability check(s), smallest margin {worst:.3e}", st.len()));
        }
        if let Some(r) = &self.robustness {
            for row in &r.summary {
                s.push_str(&format!("\n  ratio {:.3}: {:.2} ± {:.2} %", row.ratio, 100.0 * row.mean_acc, 100.0 * row.ci95));
            }
        }
        if self.filter_curve.is_some() {
            s.push_str("filter response curve written");
        }
        s
    }
}

/// Runs `config` on a pool of `workers` threads (`None` = available parallelism).
pub fn run_with_workers(config: &ExperimentConfig, workers: Option<usize>) -> Result<RunReport> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| SpcError::InvalidConfig(format!("worker pool: {e}")))?;
    pool.install(|| run(config))
}

/// Executes the configured task over every seed.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let start = Instant::now();
    let protocol = config.split_protocol();
    let mut report = match config.task {
        Task::Classify | Task::Sbm => {
            let loaded = config.load_graph()?;
            let per_seed = config
                .seeds
                .par_iter()
                .map(|&s| {
                    let g = config.graph_for_seed(loaded.as_ref(), s)?;
                    classify_once(&g, &protocol, &config.model, s)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut r = RunReport::new(config, per_seed);
            if let Some(g) = &loaded {
                r.homophily = edge_homophily(g).ok();
            }
            r
        }
        Task::Grid => {
            let grid = grid_search(config)?;
            let mut r = RunReport::new(config, grid.best().per_seed.clone());
            r.grid = Some(grid);
            r
        }
        Task::PlotFilter => {
            let mut r = RunReport::new(config, Vec::new());
            r.filter_curve = Some(filter_curve_csv(&config.filter_spec(), &config.plot.clone().unwrap_or_default())?);
            r
        }
        Task::Stability => {
            let loaded = config.load_graph()?;
            let pc = config.perturb.clone().expect("validated");
            let spec = config.filter_spec();
            let checks = config
                .seeds
                .par_iter()
                .map(|&s| {
                    let g = config.graph_for_seed(loaded.as_ref(), s)?;
                    let pg = perturb(&g, &PerturbSpec { ratio: pc.ratio, mode: pc.mode, seed: s ^ PERTURB_SALT })?;
                    stability_check(&g, &pg, &spec)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut r = RunReport::new(config, Vec::new());
            r.stability = Some(checks);
            r
        }
        Task::Robustness => {
            let rc = config.robustness.clone().expect("validated");
            let loaded = config.load_graph()?;
            let g = config.graph_for_seed(loaded.as_ref(), 0)?;
            let sweep = robustness_sweep(&g, &protocol, &config.model, &rc.ratios, rc.mode, &config.seeds)?;
            let first = rc.ratios[0];
            let per_seed: Vec<SeedResult> = Vec::new();
            let mut r = RunReport::new(config, per_seed);
            r.accuracies = sweep.entries.iter().filter(|e| e.ratio == first).map(|e| e.test_acc).collect();
            (r.mean, r.ci95) = mean_ci95(&r.accuracies);
            r.homophily = edge_homophily(&g).ok();
            r.robustness = Some(sweep);
            r
        }
    };
    report.timing.total_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(k: f64, t: f64, v: f64) -> GridCell {
        GridCell { k, t, mean_val_acc: v, mean_test_acc: 0.0, test_ci95: 0.0, per_seed: vec![] }
    }

    #[test]
    fn ci_formula() {
        assert_eq!(mean_ci95(&[0.5]), (0.5, 0.0));
        let (m, ci) = mean_ci95(&[0.8, 0.9, 1.0]);
        assert!((m - 0.9).abs() < 1e-15);
        assert!((ci - 1.96 * 0.1 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn tie_break_prefers_small_t_then_small_k() {
        let cells = vec![cell(2.0, 1.0, 0.9), cell(1.0, 1.0, 0.9), cell(0.5, 2.0, 0.9), cell(1.5, 0.5, 0.8)];
        assert_eq!(select_best(&cells), Some((1.0, 1.0)));
        assert_eq!(select_best(&cells[3..]), Some((1.5, 0.5)));
        assert_eq!(select_best(&[]), None);
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::new(Task::Classify).validate().is_err());
        assert!(ExperimentConfig::new(Task::PlotFilter).validate().is_ok());
        let mut c = ExperimentConfig::new(Task::Sbm);
        c.sbm = Some(SbmConfig::new(0.2, 0.05, 0));
        assert!(c.validate().is_ok());
        c.seeds.clear();
        assert!(c.validate().is_err());
        assert!(ExperimentConfig::from_json(r#"{"task": "grid", "sbm": {"p": 0.1, "q": 0.2}, "model": {"variant": "PCNET"}}"#).is_err());
    }

    #[test]
    fn plot_curve_starts_at_one_plus_c0() {
        let csv = filter_curve_csv(&FilterSpec::spcnet(1.0, 1.0, 20), &PlotConfig::default()).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("lambda,response"));
        assert_eq!(lines.next(), Some("0,2"));
        assert_eq!(csv.lines().count(), 202);
    }
}
