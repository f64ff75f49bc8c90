//! Experiment runners behind the `lowdim-mc` CLI.
//!
//! Every experiment is described by a JSON config with a mandatory master
//! seed; per-trial generators derive from (master seed, k, trial index), so
//! outputs are byte-identical across runs and across thread counts. CSV
//! output follows RFC 4180 (header row, CRLF, '.' decimal point); file names
//! are `<kind>_<seed>.csv` / `<kind>_<seed>.json`.

use crate::dimest::{self, DimensionEstimate, PointCloud};
use crate::measurement::{ColumnDistribution, Ensemble};
use crate::recovery::{
    self, concentration_verify, holder_quotient, lowrank_als_decode, nsp_check_sparse,
    sparse_brute_force_decode, ConcentrationReport, DecodeResult, DecodeStatus, RecoveryError,
};
use crate::rifs::Rifs;
use crate::rng::{derive_seed, Rng};
use crate::setmodel::SetDescriptor;
use crate::{Matrix, Vector};
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("experiment assertion failed: {0}")]
    AssertionFailed(String),
    #[error("{0}")]
    Run(String),
}

impl HarnessError {
    /// CLI exit code: 2 for config errors, 3 for assertion failures,
    /// 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::AssertionFailed(_) => 3,
            _ => 1,
        }
    }
}

fn config_err<T>(msg: impl Into<String>) -> Result<T, HarnessError> {
    Err(HarnessError::Config(msg.into()))
}

// ---------------------------------------------------------------------------
// configs

/// Inclusive measurement-count range.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct KRange {
    pub start: usize,
    pub end: usize,
    #[serde(default = "one")]
    pub step: usize,
}

fn one() -> usize {
    1
}

impl KRange {
    pub fn values(&self) -> Vec<usize> {
        (self.start..=self.end).step_by(self.step.max(1)).collect()
    }

    fn validate(&self, field: &str) -> Result<(), HarnessError> {
        if self.step == 0 {
            return config_err(format!("{field}.step: must be at least 1"));
        }
        if self.start == 0 {
            return config_err(format!("{field}.start: k must be at least 1"));
        }
        if self.start > self.end {
            return config_err(format!(
                "{field}: start {} exceeds end {}",
                self.start, self.end
            ));
        }
        Ok(())
    }
}

/// Decoder selection for phase experiments.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecoderChoice {
    SparseBruteForce {
        s: usize,
    },
    LowrankAls {
        r: usize,
        restarts: usize,
        iters: usize,
    },
    ProjectedGradient {
        iters: usize,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhaseConfig {
    pub descriptor: SetDescriptor,
    pub k_range: KRange,
    pub trials: usize,
    pub seed: u64,
    pub decoder: DecoderChoice,
    #[serde(default)]
    pub distribution: ColumnDistribution,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// Residual tolerance as a multiple of ||y||.
    #[serde(default = "default_residual_scale")]
    pub residual_scale: f64,
    /// Success requires ||Xhat - X|| <= success_error_scale * (1 + ||X||).
    #[serde(default = "default_success_error_scale")]
    pub success_error_scale: f64,
}

fn default_amplitude() -> f64 {
    1.0
}

fn default_residual_scale() -> f64 {
    1e-8
}

fn default_success_error_scale() -> f64 {
    1e-6
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NspConfig {
    pub m: usize,
    pub n: usize,
    pub s: usize,
    pub k_range: KRange,
    pub ensembles: usize,
    pub seed: u64,
    #[serde(default)]
    pub distribution: ColumnDistribution,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConcentrationConfig {
    pub m: usize,
    pub n: usize,
    /// Sampling-ball radius.
    pub s: f64,
    /// Measured matrix, row-major rows.
    pub x: Vec<Vec<f64>>,
    pub delta_grid: Vec<f64>,
    pub samples: usize,
    pub k_fold: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoxcountWindow {
    pub delta_min: f64,
    pub delta_max: f64,
    pub grid_size: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RifsConfig {
    pub rifs: crate::rifs::RifsSpec,
    pub points_per_component: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub boxcount: BoxcountWindow,
    /// Max-component estimate must sit within this distance of d.
    #[serde(default = "default_rifs_tolerance")]
    pub estimate_tolerance: f64,
}

fn default_rifs_tolerance() -> f64 {
    0.15
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DimensionConfig {
    /// CSV with one point per row.
    pub cloud_csv: String,
    /// Ignore the first column (component labels in attractor exports).
    #[serde(default)]
    pub drop_first_column: bool,
    pub delta_min: f64,
    pub delta_max: f64,
    pub grid_size: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HolderConfig {
    pub descriptor: SetDescriptor,
    pub betas: Vec<f64>,
    pub ks: Vec<usize>,
    pub pair_count: usize,
    pub seed: u64,
    #[serde(default)]
    pub distribution: ColumnDistribution,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

/// Any experiment config, tagged by kind.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum ExperimentConfig {
    Phase(PhaseConfig),
    Nsp(NspConfig),
    Concentration(ConcentrationConfig),
    Rifs(RifsConfig),
    Dimension(DimensionConfig),
    Holder(HolderConfig),
}

impl ExperimentConfig {
    pub fn parse(json: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(json).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentConfig::Phase(_) => "phase",
            ExperimentConfig::Nsp(_) => "nsp",
            ExperimentConfig::Concentration(_) => "concentration",
            ExperimentConfig::Rifs(_) => "rifs",
            ExperimentConfig::Dimension(_) => "dimension",
            ExperimentConfig::Holder(_) => "holder",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ExperimentConfig::Phase(c) => c.seed,
            ExperimentConfig::Nsp(c) => c.seed,
            ExperimentConfig::Concentration(c) => c.seed,
            ExperimentConfig::Rifs(c) => c.seed,
            ExperimentConfig::Dimension(c) => c.seed,
            ExperimentConfig::Holder(c) => c.seed,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            ExperimentConfig::Phase(c) => c.seed = seed,
            ExperimentConfig::Nsp(c) => c.seed = seed,
            ExperimentConfig::Concentration(c) => c.seed = seed,
            ExperimentConfig::Rifs(c) => c.seed = seed,
            ExperimentConfig::Dimension(c) => c.seed = seed,
            ExperimentConfig::Holder(c) => c.seed = seed,
        }
    }
}

// ---------------------------------------------------------------------------
// deterministic parallel pool

/// Maps `f` over 0..count on up to `threads` workers. `f(i)` must depend
/// only on `i`, so the result is independent of scheduling.
pub fn parallel_map<T, F>(count: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    if threads <= 1 || count <= 1 {
        return (0..count).map(f).collect();
    }
    let workers = threads.min(count);
    let next = AtomicUsize::new(0);
    let (tx, rx) = std::sync::mpsc::channel::<(usize, T)>();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            let f = &f;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                if tx.send((i, f(i))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
    });
    let mut slots: Vec<Option<T>> = (0..count).map(|_| None).collect();
    for (i, v) in rx {
        slots[i] = Some(v);
    }
    slots
        .into_iter()
        .map(|s| s.expect("worker filled slot"))
        .collect()
}

// ---------------------------------------------------------------------------
// CSV

/// Formats a float with '.' decimal separator and shortest round-trip
/// representation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Renders an RFC 4180 CSV (header + rows, CRLF line endings).
pub fn render_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push_str("\r\n");
    for row in rows {
        out.push_str(&row.join(","));
        out.push_str("\r\n");
    }
    out
}

/// Parses a CSV produced by [`render_csv`] back into header and rows.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>), HarnessError> {
    let mut lines = text
        .split('\n')
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.is_empty());
    let header = lines
        .next()
        .ok_or_else(|| HarnessError::Run("empty CSV".into()))?
        .split(',')
        .map(str::to_string)
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for line in lines {
        let row: Vec<String> = line.split(',').map(str::to_string).collect();
        if row.len() != header.len() {
            return Err(HarnessError::Run(format!(
                "CSV row has {} fields, header has {}",
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

// ---------------------------------------------------------------------------
// phase experiment

/// Per-trial record (kept in memory; wall time never reaches the
/// deterministic outputs).
#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub k: usize,
    pub trial: usize,
    pub seed: u64,
    pub status: DecodeStatus,
    pub residual: Option<f64>,
    pub error_norm: Option<f64>,
    pub success: bool,
    pub wall_secs: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseRow {
    pub k: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_residual: f64,
    pub k_probabilistic: Option<u64>,
    pub k_unique: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseCurve {
    pub rows: Vec<PhaseRow>,
}

impl PhaseCurve {
    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.k.to_string(),
                    r.trials.to_string(),
                    r.successes.to_string(),
                    fmt_f64(r.success_rate),
                    fmt_f64(r.mean_residual),
                    r.k_probabilistic.map(|v| v.to_string()).unwrap_or_default(),
                    r.k_unique.map(|v| v.to_string()).unwrap_or_default(),
                ]
            })
            .collect();
        render_csv(
            &[
                "k",
                "trials",
                "successes",
                "success_rate",
                "mean_residual",
                "k_probabilistic",
                "k_unique",
            ],
            &rows,
        )
    }
}

fn run_decoder(
    choice: &DecoderChoice,
    ensemble: &Ensemble,
    descriptor: &SetDescriptor,
    y: &Vector,
    residual_scale: f64,
    seed: u64,
) -> Result<DecodeResult, RecoveryError> {
    let tol_res = residual_scale * y.norm();
    match choice {
        DecoderChoice::SparseBruteForce { s } => {
            sparse_brute_force_decode(ensemble, y, *s, tol_res, recovery::DEFAULT_TOL_DUP)
        }
        DecoderChoice::LowrankAls { r, restarts, iters } => {
            lowrank_als_decode(ensemble, y, *r, *restarts, *iters, tol_res, seed)
        }
        DecoderChoice::ProjectedGradient { iters } => recovery::generic_projected_decode(
            descriptor,
            ensemble,
            y,
            recovery::suggested_step(ensemble),
            *iters,
            tol_res,
        ),
    }
}

/// Phase-transition sweep: per k, plant a member, measure, decode, count
/// exact unique recoveries. Decoder capacity errors count as failed trials
/// without aborting the sweep.
pub fn run_phase(
    config: &PhaseConfig,
    threads: usize,
) -> Result<(PhaseCurve, Vec<TrialRecord>), HarnessError> {
    config.k_range.validate("k_range")?;
    if config.trials == 0 {
        return config_err("trials: must be at least 1");
    }
    let (m, n) = config
        .descriptor
        .shape()
        .map_err(|e| HarnessError::Config(format!("descriptor: {e}")))?;
    let thresholds = config
        .descriptor
        .thresholds()
        .map_err(|e| HarnessError::Config(format!("descriptor: {e}")))?;

    let mut rows = Vec::new();
    let mut all_trials = Vec::new();
    for k in config.k_range.values() {
        let trials = parallel_map(config.trials, threads, |trial| -> Result<_, String> {
            let started = Instant::now();
            let base = derive_seed(config.seed, k as u64, trial as u64);
            let ensemble = Ensemble::sample(m, n, k, config.distribution, derive_seed(base, 1, 0));
            let mut member_rng = Rng::from_seed(derive_seed(base, 2, 0));
            let planted = config
                .descriptor
                .sample_member(&mut member_rng, config.amplitude)
                .map_err(|e| format!("sampling a planted member failed: {e}"))?;
            let y = ensemble
                .apply(&planted)
                .map_err(|e| format!("measuring the planted member failed: {e}"))?;
            let decoded = run_decoder(
                &config.decoder,
                &ensemble,
                &config.descriptor,
                &y,
                config.residual_scale,
                derive_seed(base, 3, 0),
            );
            let (status, residual, error_norm) = match &decoded {
                Ok(result) => {
                    let best = result.best_candidate();
                    (
                        result.status,
                        best.map(|(_, r)| r),
                        best.map(|(x, _)| (x - &planted).norm()),
                    )
                }
                // capacity and descriptor errors count as failed trials
                // without aborting the sweep
                Err(_) => (DecodeStatus::NoneFound, None, None),
            };
            let success = status == DecodeStatus::Unique
                && error_norm
                    .map(|e| e <= config.success_error_scale * (1.0 + planted.norm()))
                    .unwrap_or(false);
            Ok(TrialRecord {
                k,
                trial,
                seed: base,
                status,
                residual,
                error_norm,
                success,
                wall_secs: started.elapsed().as_secs_f64(),
            })
        });
        let trials: Vec<TrialRecord> = trials
            .into_iter()
            .collect::<Result<_, String>>()
            .map_err(HarnessError::Run)?;
        let successes = trials.iter().filter(|t| t.success).count();
        let with_candidates: Vec<f64> = trials.iter().filter_map(|t| t.residual).collect();
        let mean_residual = if with_candidates.is_empty() {
            0.0
        } else {
            with_candidates.iter().sum::<f64>() / with_candidates.len() as f64
        };
        rows.push(PhaseRow {
            k,
            trials: config.trials,
            successes,
            success_rate: successes as f64 / config.trials as f64,
            mean_residual,
            k_probabilistic: thresholds.k_probabilistic,
            k_unique: thresholds.k_unique,
        });
        all_trials.extend(trials);
    }
    Ok((PhaseCurve { rows }, all_trials))
}

// ---------------------------------------------------------------------------
// null-space property sweep

#[derive(Clone, Debug, Serialize)]
pub struct NspRow {
    pub k: usize,
    pub ensembles_tested: usize,
    pub fraction_holding: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NspSweep {
    pub rows: Vec<NspRow>,
}

impl NspSweep {
    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.k.to_string(),
                    r.ensembles_tested.to_string(),
                    fmt_f64(r.fraction_holding),
                ]
            })
            .collect();
        render_csv(&["k", "ensembles_tested", "fraction_holding"], &rows)
    }
}

/// Exact null-space-property sweep: per k, fraction of fresh ensembles for
/// which every size-min(2s, mn) support has full column rank.
pub fn run_nsp(config: &NspConfig, threads: usize) -> Result<NspSweep, HarnessError> {
    config.k_range.validate("k_range")?;
    if config.ensembles == 0 {
        return config_err("ensembles: must be at least 1");
    }
    if config.s == 0 {
        return config_err("s: sparsity must be at least 1");
    }
    if config.m == 0 || config.n == 0 {
        return config_err("m, n: must be at least 1");
    }
    let mut rows = Vec::new();
    for k in config.k_range.values() {
        let outcomes: Vec<Result<bool, String>> =
            parallel_map(config.ensembles, threads, |trial| {
                let seed = derive_seed(config.seed, k as u64, trial as u64);
                let ensemble = Ensemble::sample(config.m, config.n, k, config.distribution, seed);
                nsp_check_sparse(&ensemble, config.s)
                    .map(|o| o.holds)
                    .map_err(|e| e.to_string())
            });
        let mut holding = 0usize;
        for o in &outcomes {
            match o {
                Ok(true) => holding += 1,
                Ok(false) => {}
                // exactness is the point of this sweep: a capacity error
                // invalidates it rather than degrading it
                Err(e) => {
                    return Err(HarnessError::Config(format!(
                        "nsp sweep infeasible at k = {k}: {e}"
                    )))
                }
            }
        }
        rows.push(NspRow {
            k,
            ensembles_tested: config.ensembles,
            fraction_holding: holding as f64 / config.ensembles as f64,
        });
    }
    Ok(NspSweep { rows })
}

// ---------------------------------------------------------------------------
// concentration experiment

pub fn concentration_csv(report: &ConcentrationReport) -> String {
    let rows: Vec<Vec<String>> = (0..report.delta_grid.len())
        .map(|i| {
            vec![
                fmt_f64(report.delta_grid[i]),
                fmt_f64(report.empirical_single[i]),
                fmt_f64(report.ci_upper_single[i]),
                fmt_f64(report.bound_single[i]),
                fmt_f64(report.empirical_k[i]),
                fmt_f64(report.ci_upper_k[i]),
                fmt_f64(report.bound_k[i]),
            ]
        })
        .collect();
    render_csv(
        &[
            "delta",
            "empirical",
            "ci_hi",
            "bound",
            "empirical_k",
            "ci_hi_k",
            "bound_k",
        ],
        &rows,
    )
}

/// Monte Carlo dominance check of the small-ball bounds. Fails with a
/// config error when the delta grid leaves the valid range (the bound is
/// unproven there).
pub fn run_concentration(
    config: &ConcentrationConfig,
) -> Result<ConcentrationReport, HarnessError> {
    if config.samples == 0 {
        return config_err("samples: must be at least 1");
    }
    if config.k_fold == 0 {
        return config_err("k_fold: must be at least 1");
    }
    if config.x.len() != config.m || config.x.iter().any(|row| row.len() != config.n) {
        return config_err(format!(
            "x: must be a {}x{} row-major matrix",
            config.m, config.n
        ));
    }
    let x = Matrix::from_fn(config.m, config.n, |i, j| config.x[i][j]);
    if !crate::all_finite(&x) {
        return config_err("x: entries must be finite");
    }
    let sigma1 = x.singular_values().max();
    let max_delta = sigma1 * config.s * config.s;
    for &delta in &config.delta_grid {
        if !(delta > 0.0 && delta <= max_delta) {
            return config_err(format!(
                "delta_grid: delta = {delta} outside the valid range (0, {max_delta}] (sigma1*s^2)"
            ));
        }
    }
    concentration_verify(
        config.m,
        config.n,
        config.s,
        &x,
        &config.delta_grid,
        config.samples,
        config.k_fold,
        config.seed,
    )
    .map_err(|e| HarnessError::Run(e.to_string()))
}

// ---------------------------------------------------------------------------
// RIFS experiment

#[derive(Clone, Debug, Serialize)]
pub struct RifsReport {
    /// Contraction dimension from the spectral-radius root.
    pub d: f64,
    /// Box-counting bound n * d for the stacked attractor.
    pub nd_bound: f64,
    /// Largest per-component box-counting estimate.
    pub boxcount_estimate: f64,
    pub per_component_estimates: Vec<f64>,
    pub per_component_r_squared: Vec<f64>,
    /// |boxcount_estimate - d| <= estimate_tolerance.
    pub passed: bool,
}

/// Contraction dimension, attractor sampling, and per-component box-count
/// agreement for one system. The attractor cloud CSV has columns
/// (component, x_1, ..., x_m).
pub fn run_rifs(config: &RifsConfig, threads: usize) -> Result<(RifsReport, String), HarnessError> {
    if config.points_per_component == 0 {
        return config_err("points_per_component: must be at least 1");
    }
    if config.burn_in < 50 {
        return config_err("burn_in: must be at least 50");
    }
    let sys = Rifs::from_spec(&config.rifs).map_err(|e| HarnessError::Config(e.to_string()))?;
    let d = sys
        .contraction_dimension()
        .map_err(|e| HarnessError::Run(e.to_string()))?;
    let nd_bound = sys.map_count() as f64 * d;
    let sample = sys.attractor_points(config.points_per_component, config.burn_in, config.seed);

    let estimates = parallel_map(
        sample.components.len(),
        threads,
        |i| -> Result<DimensionEstimate, String> {
            let cloud = PointCloud::from_vectors(&sample.components[i])
                .map_err(|e| format!("component {i}: {e}"))?;
            dimest::estimate_minkowski(
                &cloud,
                config.boxcount.delta_min,
                config.boxcount.delta_max,
                config.boxcount.grid_size,
            )
            .map_err(|e| format!("boxcount window on component {i}: {e}"))
        },
    );
    let estimates: Vec<DimensionEstimate> = estimates
        .into_iter()
        .collect::<Result<_, String>>()
        .map_err(HarnessError::Config)?;
    let per_component_estimates: Vec<f64> = estimates.iter().map(|e| e.slope).collect();
    let per_component_r_squared: Vec<f64> = estimates.iter().map(|e| e.r_squared).collect();
    let boxcount_estimate = per_component_estimates
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let passed = (boxcount_estimate - d).abs() <= config.estimate_tolerance;

    // cloud export: component index, then coordinates
    let mut rows = Vec::new();
    for (comp, cloud) in sample.components.iter().enumerate() {
        for p in cloud {
            let mut row = Vec::with_capacity(1 + sys.ambient_dim);
            row.push(comp.to_string());
            for i in 0..sys.ambient_dim {
                row.push(fmt_f64(p[i]));
            }
            rows.push(row);
        }
    }
    let mut header: Vec<String> = vec!["component".to_string()];
    header.extend((1..=sys.ambient_dim).map(|i| format!("x_{i}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let cloud_csv = render_csv(&header_refs, &rows);

    Ok((
        RifsReport {
            d,
            nd_bound,
            boxcount_estimate,
            per_component_estimates,
            per_component_r_squared,
            passed,
        },
        cloud_csv,
    ))
}

// ---------------------------------------------------------------------------
// dimension estimation on external clouds

/// Reads a point cloud from CSV text (one point per row; a non-numeric
/// header row is skipped; `drop_first` removes a leading label column).
pub fn cloud_from_csv_text(text: &str, drop_first: bool) -> Result<PointCloud, HarnessError> {
    let mut points: Vec<Vec<f64>> = Vec::new();
    for line in text.split('\n').map(|l| l.trim_end_matches('\r')) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let fields = if drop_first {
            &fields[1..]
        } else {
            &fields[..]
        };
        let parsed: Result<Vec<f64>, _> = fields.iter().map(|f| f.trim().parse::<f64>()).collect();
        match parsed {
            Ok(p) => points.push(p),
            Err(_) if points.is_empty() => continue, // header row
            Err(e) => {
                return Err(HarnessError::Config(format!(
                    "cloud csv: unparsable row {line:?}: {e}"
                )))
            }
        }
    }
    let dim = points.first().map(Vec::len).unwrap_or(0);
    PointCloud::new(dim, points).map_err(|e| HarnessError::Config(e.to_string()))
}

pub fn run_dimension(
    config: &DimensionConfig,
    cloud_text: &str,
) -> Result<DimensionEstimate, HarnessError> {
    let cloud = cloud_from_csv_text(cloud_text, config.drop_first_column)?;
    dimest::estimate_minkowski(&cloud, config.delta_min, config.delta_max, config.grid_size)
        .map_err(|e| HarnessError::Config(e.to_string()))
}

// ---------------------------------------------------------------------------
// Hölder quotient sweep

#[derive(Clone, Debug, Serialize)]
pub struct HolderRow {
    pub beta: f64,
    pub k: usize,
    pub pair_count: usize,
    pub sampled_min: f64,
    /// True when dim(U - U) / (1 - beta) < k, the condition under which a
    /// beta-Hölder recovery map exists.
    pub meets_dim_condition: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderSweep {
    pub rows: Vec<HolderRow>,
}

impl HolderSweep {
    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    fmt_f64(r.beta),
                    r.k.to_string(),
                    r.pair_count.to_string(),
                    fmt_f64(r.sampled_min),
                    r.meets_dim_condition.to_string(),
                ]
            })
            .collect();
        render_csv(
            &[
                "beta",
                "k",
                "pair_count",
                "sampled_min",
                "meets_dim_condition",
            ],
            &rows,
        )
    }
}

/// Sampled Hölder-quotient minima over a (beta, k) grid, flagging cells
/// whose dimension condition fails.
pub fn run_holder(config: &HolderConfig, threads: usize) -> Result<HolderSweep, HarnessError> {
    if config.pair_count == 0 {
        return config_err("pair_count: must be at least 1");
    }
    if config.betas.iter().any(|b| !(*b > 0.0 && *b < 1.0)) {
        return config_err("betas: every beta must lie in (0, 1)");
    }
    if config.ks.contains(&0) {
        return config_err("ks: every k must be at least 1");
    }
    let (m, n) = config
        .descriptor
        .shape()
        .map_err(|e| HarnessError::Config(format!("descriptor: {e}")))?;
    let thresholds = config
        .descriptor
        .thresholds()
        .map_err(|e| HarnessError::Config(format!("descriptor: {e}")))?;
    let dim_diff = thresholds.dim_unique;

    let cells: Vec<(f64, usize)> = config
        .betas
        .iter()
        .flat_map(|&b| config.ks.iter().map(move |&k| (b, k)))
        .collect();
    let rows: Vec<Result<HolderRow, String>> = parallel_map(cells.len(), threads, |i| {
        let (beta, k) = cells[i];
        let seed = derive_seed(config.seed, (beta * 1e9) as u64, k as u64);
        let ensemble = Ensemble::sample(m, n, k, config.distribution, derive_seed(seed, 1, 0));
        let est = holder_quotient(
            &ensemble,
            &config.descriptor,
            beta,
            config.pair_count,
            config.amplitude,
            derive_seed(seed, 2, 0),
        )
        .map_err(|e| e.to_string())?;
        let meets = dim_diff
            .map(|d| d / (1.0 - beta) < k as f64)
            .unwrap_or(false);
        Ok(HolderRow {
            beta,
            k,
            pair_count: est.pair_count,
            sampled_min: est.sampled_min,
            meets_dim_condition: meets,
        })
    });
    let rows: Result<Vec<HolderRow>, String> = rows.into_iter().collect();
    rows.map(|rows| HolderSweep { rows })
        .map_err(HarnessError::Run)
}
