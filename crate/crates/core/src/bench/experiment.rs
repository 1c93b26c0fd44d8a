//! Monte-Carlo replication engine.
//!
//! An [`ExperimentDesign`] spans a grid of cells — (algorithm, predictor
//! space, dimension, coverage, replicate) — over a common synthetic-data
//! family.  [`run_experiment`] executes every cell with per-replicate
//! derived seeds, so reruns with the same master seed reproduce every
//! non-timing field; failures are recorded per cell and the run continues.
//! Replicate groups execute in parallel; results are sorted into a canonical
//! order before they are returned.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{
    build_covariance, derive_seed, sample_mixture, Dataset, GaussianComponent, MixtureConfig,
    NoiseBounds, ResponseSpec,
};
use crate::error::{Error, ErrorClass, Result};
use crate::fastprim::{central_box_empirical, fastprim_pca, FastPrimConfig};
use crate::numkernel::{sym_eigen, SymMatrix};
use crate::pca::{fit_rotation, rotate};
use crate::prim::{cover, BoxTrace, PrimConfig};

use super::{box_volume, mode_mass};

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Prim,
    Fastprim,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Prim => "prim",
            Algorithm::Fastprim => "fastprim",
        })
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "kebab-case")]
pub enum Space {
    Input,
    Pc,
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Space::Input => "input",
            Space::Pc => "pc",
        })
    }
}

/// Correlation structure of the predictor covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum CovarianceFamily {
    Identity,
    /// Constant correlation `rho` between every pair.
    Equicorrelation { rho: f64 },
    /// Correlation `rho^|i-j|`.
    Ar1 { rho: f64 },
    /// Full correlation matrix, row by row.
    Explicit { rows: Vec<Vec<f64>> },
}

impl Default for CovarianceFamily {
    fn default() -> Self {
        CovarianceFamily::Equicorrelation { rho: 0.5 }
    }
}

/// Marginal variances of the predictors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VarianceSpec {
    Unit,
    /// Linearly spaced from 1 to `max` across the dimensions.
    Linear { max: f64 },
    Explicit { values: Vec<f64> },
}

impl Default for VarianceSpec {
    fn default() -> Self {
        VarianceSpec::Unit
    }
}

fn default_n() -> usize {
    1000
}
fn default_p_grid() -> Vec<usize> {
    vec![2]
}
fn default_coverage_grid() -> Vec<usize> {
    vec![20]
}
fn default_replicates() -> usize {
    32
}
fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Prim, Algorithm::Fastprim]
}
fn default_spaces() -> Vec<Space> {
    vec![Space::Input, Space::Pc]
}
fn default_alpha() -> f64 {
    0.05
}
fn default_beta() -> f64 {
    0.05
}
fn default_weight() -> f64 {
    1.0
}
fn default_mu() -> f64 {
    1.0
}
fn default_sigma() -> f64 {
    0.2
}

/// Grid and data family of one experiment.
///
/// Every field has a default matching the benchmark baseline — `n` 1000,
/// peel fraction and round support 0.05, coverage 20, response mean 1 and
/// standard deviation 0.2, all-target mixture — so a design file only needs
/// to state what it varies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentDesign {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_p_grid")]
    pub p_grid: Vec<usize>,
    #[serde(default = "default_coverage_grid")]
    pub coverage_grid: Vec<usize>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_spaces")]
    pub spaces: Vec<Space>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub pasting: bool,
    /// Mixture weight of the Gaussian target.
    #[serde(default = "default_weight")]
    pub weight: f64,
    /// Response mean of the target component.
    #[serde(default = "default_mu")]
    pub mu: f64,
    /// Response standard deviation of the target component.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub covariance: CovarianceFamily,
    #[serde(default)]
    pub variances: VarianceSpec,
    /// Uniform noise interval for `weight < 1`; derived from the target
    /// rows when absent.
    #[serde(default)]
    pub noise_bounds: Option<(f64, f64)>,
    #[serde(default)]
    pub master_seed: u64,
}

impl Default for ExperimentDesign {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl ExperimentDesign {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig("sample size must be at least 2".into()));
        }
        for grid in [&self.p_grid, &self.coverage_grid] {
            if grid.is_empty() || grid.iter().any(|&v| v == 0) {
                return Err(Error::InvalidConfig(
                    "dimension and coverage grids must be nonempty with positive entries".into(),
                ));
            }
        }
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be positive".into()));
        }
        if self.algorithms.is_empty() || self.spaces.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one algorithm and one space required".into(),
            ));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie in (0, 1), got {v}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.weight) {
            return Err(Error::InvalidConfig(format!(
                "mixture weight must lie in [0, 1], got {}",
                self.weight
            )));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "response sigma must be nonnegative, got {}",
                self.sigma
            )));
        }
        for &p in &self.p_grid {
            self.correlation_for(p)?;
            self.variances_for(p)?;
        }
        Ok(())
    }

    fn correlation_for(&self, p: usize) -> Result<SymMatrix<f64>> {
        match &self.covariance {
            CovarianceFamily::Identity => {
                SymMatrix::from_diag(&vec![1.0; p])
            }
            CovarianceFamily::Equicorrelation { rho } => {
                let rows: Vec<Vec<f64>> = (0..p)
                    .map(|i| (0..p).map(|j| if i == j { 1.0 } else { *rho }).collect())
                    .collect();
                SymMatrix::from_rows(&rows)
            }
            CovarianceFamily::Ar1 { rho } => {
                let rows: Vec<Vec<f64>> = (0..p)
                    .map(|i| {
                        (0..p)
                            .map(|j| rho.powi((i as i32 - j as i32).abs()))
                            .collect()
                    })
                    .collect();
                SymMatrix::from_rows(&rows)
            }
            CovarianceFamily::Explicit { rows } => {
                if rows.len() != p {
                    return Err(Error::DimensionMismatch {
                        context: "explicit correlation matrix",
                        expected: p,
                        actual: rows.len(),
                    });
                }
                SymMatrix::from_rows(rows)
            }
        }
    }

    fn variances_for(&self, p: usize) -> Result<Vec<f64>> {
        match &self.variances {
            VarianceSpec::Unit => Ok(vec![1.0; p]),
            VarianceSpec::Linear { max } => {
                if !(*max > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "variance ramp maximum must be positive, got {max}"
                    )));
                }
                if p == 1 {
                    return Ok(vec![1.0]);
                }
                Ok((0..p)
                    .map(|j| 1.0 + (max - 1.0) * j as f64 / (p - 1) as f64)
                    .collect())
            }
            VarianceSpec::Explicit { values } => {
                if values.len() != p {
                    return Err(Error::DimensionMismatch {
                        context: "explicit variances",
                        expected: p,
                        actual: values.len(),
                    });
                }
                Ok(values.clone())
            }
        }
    }

    /// Sampler configuration for one dimension of the grid.
    pub fn mixture_for(&self, p: usize) -> Result<MixtureConfig<f64>> {
        let correlation = self.correlation_for(p)?;
        let variances = self.variances_for(p)?;
        let built = build_covariance(&variances, &correlation)?;
        let noise_bounds = match (self.weight < 1.0, self.noise_bounds) {
            (true, Some((a, b))) => NoiseBounds::Fixed { a, b },
            (true, None) => NoiseBounds::FromTargets,
            // Unused when every row is a target; any valid value works.
            (false, _) => NoiseBounds::Fixed { a: -1.0, b: 1.0 },
        };
        Ok(MixtureConfig {
            n: self.n,
            weight: self.weight,
            components: vec![GaussianComponent {
                mean: vec![0.0; p],
                covariance: built.matrix,
                response: ResponseSpec::Continuous {
                    mu: self.mu,
                    sigma: self.sigma,
                },
            }],
            noise_bounds,
        })
    }
}

/// Pointwise-evaluable density of the mixture a design samples from, for
/// mode-mass reporting.
pub struct MixtureDensity {
    components: Vec<GaussianDensity>,
    weight: f64,
    noise: Option<NoiseDensity>,
}

struct GaussianDensity {
    mean: Vec<f64>,
    /// Eigenvectors (columns) of the component covariance.
    gamma: crate::numkernel::Matrix<f64>,
    lambda: Vec<f64>,
    /// `-p/2 ln(2 pi) - 1/2 sum(ln lambda_j)`.
    log_norm: f64,
}

struct NoiseDensity {
    bounds: Vec<(f64, f64)>,
    log_density: f64,
}

impl MixtureDensity {
    /// Builds the density from a sampler configuration and the noise bounds
    /// the draw actually used (empty when the draw had no noise rows).
    pub fn from_config(config: &MixtureConfig<f64>, noise_bounds: &[(f64, f64)]) -> Result<Self> {
        let p = config.validate()?;
        let mut components = Vec::with_capacity(config.components.len());
        for c in &config.components {
            let eigen = sym_eigen(&c.covariance)?;
            if eigen.values.iter().any(|&l| l <= 0.0) {
                return Err(Error::SingularModel(
                    "component covariance has a nonpositive eigenvalue".into(),
                ));
            }
            let log_norm = -0.5 * p as f64 * (2.0 * std::f64::consts::PI).ln()
                - 0.5 * eigen.values.iter().map(|l| l.ln()).sum::<f64>();
            components.push(GaussianDensity {
                mean: c.mean.clone(),
                gamma: eigen.vectors,
                lambda: eigen.values,
                log_norm,
            });
        }
        let noise = if config.weight < 1.0 && !noise_bounds.is_empty() {
            let mut log_density = 0.0;
            for &(a, b) in noise_bounds {
                if !(b > a) {
                    return Err(Error::InvalidConfig(
                        "noise bounds must have positive width".into(),
                    ));
                }
                log_density -= (b - a).ln();
            }
            Some(NoiseDensity {
                bounds: noise_bounds.to_vec(),
                log_density,
            })
        } else {
            None
        };
        Ok(MixtureDensity {
            components,
            weight: config.weight,
            noise,
        })
    }

    /// Density at a predictor point.
    pub fn density(&self, x: &[f64]) -> f64 {
        let share = self.weight / self.components.len() as f64;
        let mut total = 0.0;
        for c in &self.components {
            let mut quad = 0.0;
            for j in 0..c.lambda.len() {
                let mut y = 0.0;
                for (i, xi) in x.iter().enumerate() {
                    y += c.gamma[(i, j)] * (xi - c.mean[i]);
                }
                quad += y * y / c.lambda[j];
            }
            total += share * (c.log_norm - 0.5 * quad).exp();
        }
        if let Some(noise) = &self.noise {
            let inside = noise
                .bounds
                .iter()
                .zip(x)
                .all(|(&(a, b), &v)| v >= a && v <= b);
            if inside {
                total += (1.0 - self.weight) * noise.log_density.exp();
            }
        }
        total
    }
}

/// One cell's measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub algorithm: Algorithm,
    pub space: Space,
    pub p: usize,
    pub p_prime: usize,
    pub n: usize,
    /// Requested coverage (rounds for the peel search, total-content rounds
    /// for the central box).
    pub coverage: usize,
    pub replicate: usize,
    /// Derived seed of this replicate's dataset.
    pub seed: u64,
    pub rounds_completed: usize,
    pub support: f64,
    pub output_mean: Option<f64>,
    /// Natural log of the (cumulative) box volume; absent when every box
    /// had a zero-width side.
    pub log_volume: Option<f64>,
    /// Some unbounded side was clamped to the active data's range.
    pub volume_clamped: bool,
    /// `ln(output mean) - ln(volume)`; absent unless both are defined and
    /// the mean is positive.
    pub log_volume_adjusted: Option<f64>,
    pub mode_mass: Option<f64>,
    pub seconds: f64,
}

impl MetricsRecord {
    fn sort_key(&self) -> (Algorithm, Space, usize, usize, usize) {
        (self.algorithm, self.space, self.p, self.coverage, self.replicate)
    }
}

/// One cell that errored instead of producing a record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellFailure {
    pub algorithm: Option<Algorithm>,
    pub space: Option<Space>,
    pub p: usize,
    pub coverage: Option<usize>,
    pub replicate: usize,
    pub class: ErrorClass,
    pub message: String,
}

/// Everything a run produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub records: Vec<MetricsRecord>,
    pub failures: Vec<CellFailure>,
}

struct GroupContext<'a> {
    design: &'a ExperimentDesign,
    p: usize,
    replicate: usize,
    seed: u64,
    data: &'a Dataset<f64>,
    density: &'a MixtureDensity,
}

impl GroupContext<'_> {
    fn base_record(&self, algorithm: Algorithm, space: Space, coverage: usize) -> MetricsRecord {
        MetricsRecord {
            algorithm,
            space,
            p: self.p,
            p_prime: self.p,
            n: self.data.n(),
            coverage,
            replicate: self.replicate,
            seed: self.seed,
            rounds_completed: 0,
            support: 0.0,
            output_mean: None,
            log_volume: None,
            volume_clamped: false,
            log_volume_adjusted: None,
            mode_mass: None,
            seconds: 0.0,
        }
    }
}

fn fill_volume_fields(record: &mut MetricsRecord, log_volume: Option<f64>, clamped: bool) {
    record.log_volume = log_volume;
    record.volume_clamped = clamped;
    record.log_volume_adjusted = match (record.output_mean, log_volume) {
        (Some(mean), Some(lv)) if mean > 0.0 => Some(mean.ln() - lv),
        _ => None,
    };
}

/// `ln(sum(exp(x)))`, stable against large magnitudes.
fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Cumulative metrics of a covering trace: summed counts and response mass,
/// summed per-round volumes (unbounded sides clamped to the round's active
/// range), and the mode mass of the union of the per-round point sets.
fn covering_metrics(
    data: &Dataset<f64>,
    trace: &BoxTrace<f64>,
    density: impl Fn(&[f64]) -> f64,
    record: &mut MetricsRecord,
) -> Result<()> {
    let n = data.n();
    let mut count = 0usize;
    let mut response_sum = 0.0;
    let mut log_volumes = Vec::with_capacity(trace.boxes.len());
    let mut clamped = false;
    let mut taken = vec![false; n];
    let mut mass = 0.0;
    for traced in &trace.boxes {
        count += traced.stats.count;
        if let Some(mean) = traced.stats.output_mean {
            response_sum += mean * traced.stats.count as f64;
        }
        let volume = box_volume(&traced.bounds, Some(&traced.active_bounds))?;
        clamped |= volume.clamped;
        if !volume.zero_width {
            log_volumes.push(volume.log_volume);
        }
        // Rebuild the round's point set: rows still active (not removed by
        // an earlier round) that the box contains.
        for (i, t) in taken.iter_mut().enumerate() {
            if !*t && traced.bounds.contains(data.row(i)) {
                *t = true;
                mass += density(data.row(i));
            }
        }
    }
    record.rounds_completed = trace.rounds_completed;
    record.support = count as f64 / n as f64;
    record.output_mean = (count > 0).then(|| response_sum / count as f64);
    record.mode_mass = Some(mass / n as f64);
    let log_volume = (!log_volumes.is_empty()).then(|| logsumexp(&log_volumes));
    fill_volume_fields(record, log_volume, clamped);
    Ok(())
}

fn run_cell(
    ctx: &GroupContext<'_>,
    algorithm: Algorithm,
    space: Space,
    coverage: usize,
) -> Result<MetricsRecord> {
    let design = ctx.design;
    let data = ctx.data;
    let mut record = ctx.base_record(algorithm, space, coverage);
    match (algorithm, space) {
        (Algorithm::Fastprim, Space::Input) => {
            let config = FastPrimConfig::new(design.beta, coverage, ctx.p);
            let start = Instant::now();
            let (bounds, stats) = central_box_empirical(data, &config)?;
            record.seconds = start.elapsed().as_secs_f64();
            record.rounds_completed = coverage;
            record.support = stats.support;
            record.output_mean = stats.output_mean;
            let volume = box_volume(&bounds, None)?;
            let log_volume = (!volume.zero_width).then_some(volume.log_volume);
            fill_volume_fields(&mut record, log_volume, volume.clamped);
            record.mode_mass = Some(mode_mass(data, &bounds, |row| ctx.density.density(row))?);
        }
        (Algorithm::Fastprim, Space::Pc) => {
            let config = FastPrimConfig::new(design.beta, coverage, ctx.p);
            let start = Instant::now();
            let result = fastprim_pca(data, &config)?;
            record.seconds = start.elapsed().as_secs_f64();
            record.rounds_completed = coverage;
            record.support = result.stats.support;
            record.output_mean = result.stats.output_mean;
            let volume = box_volume(&result.pc_box, None)?;
            let log_volume = (!volume.zero_width).then_some(volume.log_volume);
            fill_volume_fields(&mut record, log_volume, volume.clamped);
            // The rule describes the same region in input coordinates, so
            // the mode mass can use the input-space density directly.
            let mut mass = 0.0;
            for i in 0..data.n() {
                let row = data.row(i);
                if result.rule.contains(row) {
                    mass += ctx.density.density(row);
                }
            }
            record.mode_mass = Some(mass / data.n() as f64);
        }
        (Algorithm::Prim, Space::Input) => {
            let mut config = PrimConfig::new(design.alpha, design.beta, coverage);
            config.pasting = design.pasting;
            let start = Instant::now();
            let trace = cover(data, &config)?;
            record.seconds = start.elapsed().as_secs_f64();
            covering_metrics(data, &trace, |row| ctx.density.density(row), &mut record)?;
        }
        (Algorithm::Prim, Space::Pc) => {
            let mut config = PrimConfig::new(design.alpha, design.beta, coverage);
            config.pasting = design.pasting;
            let start = Instant::now();
            let model = fit_rotation(data, ctx.p)?;
            let rotated = rotate(&model, data)?;
            let trace = cover(&rotated, &config)?;
            record.seconds = start.elapsed().as_secs_f64();
            // A rotated point's density is the input density at its
            // preimage; the rotation is volume preserving.
            let density = |y: &[f64]| {
                let mut x = model.gamma.mul_vec(y).expect("dimensions fixed by fit");
                for (xi, c) in x.iter_mut().zip(&model.center) {
                    *xi += c;
                }
                ctx.density.density(&x)
            };
            covering_metrics(&rotated, &trace, density, &mut record)?;
        }
    }
    Ok(record)
}

fn run_group(
    design: &ExperimentDesign,
    p: usize,
    replicate: usize,
) -> (Vec<MetricsRecord>, Vec<CellFailure>) {
    let mut records = Vec::new();
    let mut failures = Vec::new();
    let seed = derive_seed(design.master_seed, &[p as u64, replicate as u64]);
    let prepared = design.mixture_for(p).and_then(|mixture| {
        let draw = sample_mixture(&mixture, seed)?;
        let density = MixtureDensity::from_config(&mixture, &draw.noise_bounds)?;
        Ok((draw.dataset, density))
    });
    let (data, density) = match prepared {
        Ok(v) => v,
        Err(e) => {
            failures.push(CellFailure {
                algorithm: None,
                space: None,
                p,
                coverage: None,
                replicate,
                class: e.class(),
                message: e.to_string(),
            });
            return (records, failures);
        }
    };
    let ctx = GroupContext {
        design,
        p,
        replicate,
        seed,
        data: &data,
        density: &density,
    };
    for &algorithm in &design.algorithms {
        for &space in &design.spaces {
            for &coverage in &design.coverage_grid {
                match run_cell(&ctx, algorithm, space, coverage) {
                    Ok(record) => records.push(record),
                    Err(e) => failures.push(CellFailure {
                        algorithm: Some(algorithm),
                        space: Some(space),
                        p,
                        coverage: Some(coverage),
                        replicate,
                        class: e.class(),
                        message: e.to_string(),
                    }),
                }
            }
        }
    }
    (records, failures)
}

/// Executes every cell of the design.  Deterministic given the master seed,
/// apart from the timing fields; cells that fail are reported in
/// [`ExperimentResult::failures`] without aborting the rest.
pub fn run_experiment(design: &ExperimentDesign) -> Result<ExperimentResult> {
    design.validate()?;
    let groups: Vec<(usize, usize)> = design
        .p_grid
        .iter()
        .flat_map(|&p| (0..design.replicates).map(move |r| (p, r)))
        .collect();
    let outputs: Vec<_> = groups
        .par_iter()
        .map(|&(p, replicate)| run_group(design, p, replicate))
        .collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (mut r, mut f) in outputs {
        records.append(&mut r);
        failures.append(&mut f);
    }
    records.sort_by_key(MetricsRecord::sort_key);
    failures.sort_by_key(|f| (f.algorithm, f.space, f.p, f.coverage, f.replicate));
    Ok(ExperimentResult { records, failures })
}

/// Mean and standard error of one metric over the records of a cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Records that carried the metric.
    pub n: usize,
    pub mean: Option<f64>,
    pub se: Option<f64>,
}

fn summarize<I: IntoIterator<Item = f64>>(values: I) -> Summary {
    let values: Vec<f64> = values.into_iter().collect();
    let n = values.len();
    if n == 0 {
        return Summary {
            n,
            mean: None,
            se: None,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let se = (n >= 2).then(|| {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    });
    Summary {
        n,
        mean: Some(mean),
        se,
    }
}

/// Per-cell aggregate over replicates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellAggregate {
    pub algorithm: Algorithm,
    pub space: Space,
    pub p: usize,
    pub coverage: usize,
    pub records: usize,
    pub support: Summary,
    pub output_mean: Summary,
    pub log_volume: Summary,
    pub log_volume_adjusted: Summary,
    pub mode_mass: Summary,
    pub seconds: Summary,
    pub any_volume_clamped: bool,
}

/// Groups records by (algorithm, space, p, coverage) and summarizes each
/// metric; aggregation is independent of record order.
pub fn aggregate(records: &[MetricsRecord]) -> Vec<CellAggregate> {
    let mut cells: BTreeMap<(Algorithm, Space, usize, usize), Vec<&MetricsRecord>> =
        BTreeMap::new();
    for r in records {
        cells
            .entry((r.algorithm, r.space, r.p, r.coverage))
            .or_default()
            .push(r);
    }
    cells
        .into_iter()
        .map(|((algorithm, space, p, coverage), rs)| CellAggregate {
            algorithm,
            space,
            p,
            coverage,
            records: rs.len(),
            support: summarize(rs.iter().map(|r| r.support)),
            output_mean: summarize(rs.iter().filter_map(|r| r.output_mean)),
            log_volume: summarize(rs.iter().filter_map(|r| r.log_volume)),
            log_volume_adjusted: summarize(rs.iter().filter_map(|r| r.log_volume_adjusted)),
            mode_mass: summarize(rs.iter().filter_map(|r| r.mode_mass)),
            seconds: summarize(rs.iter().map(|r| r.seconds)),
            any_volume_clamped: rs.iter().any(|r| r.volume_clamped),
        })
        .collect()
}

/// PC-over-input ratio of mean volume-adjusted output means for one
/// (algorithm, p, coverage) cell pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GainRow {
    pub algorithm: Algorithm,
    pub p: usize,
    pub coverage: usize,
    /// Replicates present in both spaces.
    pub pairs: usize,
    pub ratio: Option<f64>,
    pub log_ratio: Option<f64>,
    /// Delta-method standard error of the ratio over paired replicates.
    pub se: Option<f64>,
    /// True when either space has no usable records.
    pub missing: bool,
}

/// Computes, per (algorithm, p, coverage), the ratio of the two spaces'
/// mean volume-adjusted output means, pairing replicates so the
/// delta-method standard error respects the shared datasets.  Cells without
/// a counterpart come back flagged as missing.
pub fn gain_profile(records: &[MetricsRecord]) -> Vec<GainRow> {
    type Key = (Algorithm, usize, usize);
    let mut by_cell: BTreeMap<Key, BTreeMap<usize, [Option<f64>; 2]>> = BTreeMap::new();
    for r in records {
        let slot = match r.space {
            Space::Pc => 0,
            Space::Input => 1,
        };
        by_cell
            .entry((r.algorithm, r.p, r.coverage))
            .or_default()
            .entry(r.replicate)
            .or_default()[slot] = r.log_volume_adjusted;
    }
    by_cell
        .into_iter()
        .map(|((algorithm, p, coverage), reps)| {
            let pairs: Vec<(f64, f64)> = reps
                .values()
                .filter_map(|pair| match pair {
                    [Some(pc), Some(input)] => Some((*pc, *input)),
                    _ => None,
                })
                .collect();
            if pairs.is_empty() {
                return GainRow {
                    algorithm,
                    p,
                    coverage,
                    pairs: 0,
                    ratio: None,
                    log_ratio: None,
                    se: None,
                    missing: true,
                };
            }
            let n = pairs.len();
            let log_pc: Vec<f64> = pairs.iter().map(|&(a, _)| a).collect();
            let log_in: Vec<f64> = pairs.iter().map(|&(_, b)| b).collect();
            // Ratio of means, computed in log space so huge volume-adjusted
            // means in high dimension cannot overflow.
            let lse_pc = logsumexp(&log_pc);
            let lse_in = logsumexp(&log_in);
            let log_ratio = lse_pc - lse_in;
            // Normalized per-replicate weights have mean 1; the delta
            // method turns their (co)variances into the ratio's SE.
            let a: Vec<f64> = log_pc
                .iter()
                .map(|&v| (v - lse_pc).exp() * n as f64)
                .collect();
            let b: Vec<f64> = log_in
                .iter()
                .map(|&v| (v - lse_in).exp() * n as f64)
                .collect();
            let se = (n >= 2).then(|| {
                let var = |x: &[f64]| {
                    let m = x.iter().sum::<f64>() / n as f64;
                    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64
                };
                let cov = {
                    let ma = a.iter().sum::<f64>() / n as f64;
                    let mb = b.iter().sum::<f64>() / n as f64;
                    a.iter()
                        .zip(&b)
                        .map(|(&x, &y)| (x - ma) * (y - mb))
                        .sum::<f64>()
                        / (n - 1) as f64
                };
                let rel_var = ((var(&a) + var(&b) - 2.0 * cov) / n as f64).max(0.0);
                log_ratio.exp() * rel_var.sqrt()
            });
            GainRow {
                algorithm,
                p,
                coverage,
                pairs: n,
                ratio: Some(log_ratio.exp()),
                log_ratio: Some(log_ratio),
                se,
                missing: false,
            }
        })
        .collect()
}

/// FNV-1a over the canonical JSON of the design: a short stable fingerprint
/// for output file names.
pub fn design_hash(design: &ExperimentDesign) -> u64 {
    let json = serde_json::to_string(design).expect("design serializes");
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in json.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn open_writer(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn finish_writer(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// Tidy per-record CSV: one row per (algorithm, space, p, coverage,
/// replicate) cell.
pub fn write_records_csv(path: &Path, records: &[MetricsRecord]) -> Result<()> {
    let mut w = open_writer(path)?;
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    writeln!(
        w,
        "algorithm,space,p,p_prime,n,coverage,replicate,seed,rounds_completed,\
         support,output_mean,log_volume,volume_clamped,log_volume_adjusted,mode_mass,seconds"
    )
    .map_err(io)?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.algorithm,
            r.space,
            r.p,
            r.p_prime,
            r.n,
            r.coverage,
            r.replicate,
            r.seed,
            r.rounds_completed,
            r.support,
            opt(r.output_mean),
            opt(r.log_volume),
            r.volume_clamped,
            opt(r.log_volume_adjusted),
            opt(r.mode_mass),
            r.seconds,
        )
        .map_err(io)?;
    }
    finish_writer(w, path)
}

/// Gain table CSV companion to [`gain_profile`].
pub fn write_gains_csv(path: &Path, gains: &[GainRow]) -> Result<()> {
    let mut w = open_writer(path)?;
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    writeln!(w, "algorithm,p,coverage,pairs,ratio,log_ratio,se,missing").map_err(io)?;
    for g in gains {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            g.algorithm,
            g.p,
            g.coverage,
            g.pairs,
            opt(g.ratio),
            opt(g.log_ratio),
            opt(g.se),
            g.missing,
        )
        .map_err(io)?;
    }
    finish_writer(w, path)
}

/// JSON summary: the design, its hash, per-cell aggregates and any
/// failures.
pub fn write_summary_json(
    path: &Path,
    design: &ExperimentDesign,
    result: &ExperimentResult,
) -> Result<()> {
    #[derive(Serialize)]
    struct SummaryFile<'a> {
        design: &'a ExperimentDesign,
        design_hash: String,
        cells: Vec<CellAggregate>,
        failures: &'a [CellFailure],
    }
    let summary = SummaryFile {
        design,
        design_hash: format!("{:016x}", design_hash(design)),
        cells: aggregate(&result.records),
        failures: &result.failures,
    };
    let w = open_writer(path)?;
    serde_json::to_writer_pretty(w, &summary).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::new(std::io::ErrorKind::Other, e),
    })
}
