//! Quantile-based central box search.
//!
//! Where the peel/paste search in [`crate::prim`] hunts response mass, the
//! routines here target the predictor mode directly: the box of probability
//! content `beta_total(beta, t)` centered on the data.  The closed form
//! places bounds at marginal quantiles in one pass; the iterative variant
//! reproduces it by symmetric face-by-face trimming plus covering rounds,
//! and exists to validate the shortcut.  The response never steers the box;
//! it only enters the reported statistics.

use serde::{Deserialize, Serialize};

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::numkernel::{empirical_quantile, normal_quantile};
use crate::pca::{box_to_input_rule, fit_rotation, rotate, LinearRule, RotationModel};
use crate::prim::{
    box_stats, bounding_intervals, AxisBox, BoxStats, BoxTrace, Side, StepAction, TraceStep,
    TracedBox,
};
use crate::scalar::Real;

/// How the box is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FastPrimMode {
    /// One-pass marginal-quantile box (the default).
    ClosedForm,
    /// Face-by-face trimming with covering rounds.
    Iterative,
}

/// Where the quantile cuts sit for a per-dimension share `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantileConvention {
    /// Cuts at `(1 - s) / 2` and `(1 + s) / 2`: the interval between them
    /// carries marginal mass `s`, so the box mass multiplies out to the
    /// target (the default).
    Central,
    /// Cuts at `s / 2` and `1 - s / 2` (compatibility only; the enclosed
    /// mass is `1 - s`, not `s`).
    Tail,
}

/// Parameters of the central-box search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FastPrimConfig<T> {
    /// Per-round probability content.
    pub beta: T,
    /// Covering rounds; the box targets total content `beta_total(beta, t)`.
    pub t: usize,
    /// Leading dimensions that get bounds; the rest stay unbounded.
    pub p_prime: usize,
    pub mode: FastPrimMode,
    /// Mass trimmed per sweep by the iterative variant, split evenly over
    /// the `2 * p_prime` faces.
    pub alpha: T,
    pub convention: QuantileConvention,
}

impl<T: Real> FastPrimConfig<T> {
    pub fn new(beta: T, t: usize, p_prime: usize) -> Self {
        FastPrimConfig {
            beta,
            t,
            p_prime,
            mode: FastPrimMode::ClosedForm,
            alpha: T::of(0.05),
            convention: QuantileConvention::Central,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > T::zero() && self.beta < T::one()) {
            return Err(Error::InvalidConfig(format!(
                "round content must lie in (0, 1), got {}",
                self.beta
            )));
        }
        if self.t == 0 {
            return Err(Error::InvalidConfig(
                "coverage must be at least one round".into(),
            ));
        }
        if self.p_prime == 0 {
            return Err(Error::InvalidConfig(
                "at least one dimension must be bounded".into(),
            ));
        }
        if !(self.alpha > T::zero() && self.alpha < T::one()) {
            return Err(Error::InvalidConfig(format!(
                "sweep share must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Total probability content after `t` covering rounds of per-round content
/// `beta`: `1 - (1 - beta)^t`.
pub fn beta_total<T: Real>(beta: T, t: usize) -> Result<T> {
    if !(beta > T::zero() && beta < T::one()) {
        return Err(Error::Domain(format!(
            "round content must lie in (0, 1), got {beta}"
        )));
    }
    if t == 0 {
        return Err(Error::Domain("coverage must be at least 1".into()));
    }
    let t_i32 = i32::try_from(t)
        .map_err(|_| Error::Domain(format!("coverage {t} too large")))?;
    Ok(T::one() - (T::one() - beta).powi(t_i32))
}

/// Marginal quantile positions for a per-dimension share `s`.
fn cut_quantiles<T: Real>(share: T, convention: QuantileConvention) -> (T, T) {
    let half = T::of(0.5);
    match convention {
        QuantileConvention::Central => ((T::one() - share) * half, (T::one() + share) * half),
        QuantileConvention::Tail => (share * half, T::one() - share * half),
    }
}

/// Central box from marginal quantiles of the data itself.
///
/// Each of the first `p_prime` dimensions gets bounds at the cut quantiles
/// for share `beta_total^(1/p_prime)`; remaining dimensions stay unbounded.
/// The box support approximates `beta_total` when the bounded marginals are
/// uncorrelated.  Statistics are computed over the full dataset.
pub fn central_box_empirical<T: Real>(
    data: &Dataset<T>,
    config: &FastPrimConfig<T>,
) -> Result<(AxisBox<T>, BoxStats<T>)> {
    config.validate()?;
    if config.p_prime > data.p() {
        return Err(Error::InvalidConfig(format!(
            "cannot bound {} of {} dimensions",
            config.p_prime,
            data.p()
        )));
    }
    let beta_t = beta_total(config.beta, config.t)?;
    let share = beta_t.powf(T::of(config.p_prime as f64).recip());
    if T::of(data.n() as f64) * share < T::of(2.0) {
        return Err(Error::TooFewPoints {
            context: "central box marginal",
            needed: 2,
            available: data.n(),
        });
    }
    let (q_lo, q_hi) = cut_quantiles(share, config.convention);
    let mut bounds = AxisBox::unbounded(data.p());
    let mut sorted: Vec<T> = Vec::with_capacity(data.n());
    for j in 0..config.p_prime {
        sorted.clear();
        sorted.extend((0..data.n()).map(|i| data.x()[(i, j)]));
        sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite values"));
        bounds.set_bound(j, Side::Low, empirical_quantile(&sorted, q_lo)?);
        bounds.set_bound(j, Side::High, empirical_quantile(&sorted, q_hi)?);
    }
    let active: Vec<usize> = (0..data.n()).collect();
    let stats = box_stats(data, &active, &bounds)?;
    Ok((bounds, stats))
}

/// Central box of a known Gaussian population: per bounded dimension `j`,
/// `mean_j ± sd_j * z` with `z` the standard-normal quantile at
/// `(1 + beta_total^(1/p_prime)) / 2`.
pub fn central_box_population<T: Real>(
    means: &[T],
    sds: &[T],
    p_prime: usize,
    beta_t: T,
) -> Result<AxisBox<T>> {
    if means.len() != sds.len() {
        return Err(Error::DimensionMismatch {
            context: "population box scales",
            expected: means.len(),
            actual: sds.len(),
        });
    }
    if p_prime == 0 || p_prime > means.len() {
        return Err(Error::InvalidConfig(format!(
            "cannot bound {} of {} dimensions",
            p_prime,
            means.len()
        )));
    }
    if !(beta_t > T::zero() && beta_t < T::one()) {
        return Err(Error::Domain(format!(
            "total content must lie in (0, 1), got {beta_t}"
        )));
    }
    if sds.iter().any(|&s| s < T::zero() || !s.is_finite()) {
        return Err(Error::Domain("marginal scales must be finite and >= 0".into()));
    }
    let share = beta_t.powf(T::of(p_prime as f64).recip());
    let z = normal_quantile((T::one() + share) * T::of(0.5))?;
    let mut bounds = AxisBox::unbounded(means.len());
    for j in 0..p_prime {
        bounds.set_bound(j, Side::Low, means[j] - sds[j] * z);
        bounds.set_bound(j, Side::High, means[j] + sds[j] * z);
    }
    Ok(bounds)
}

/// Result of the iterative variant: the per-round trace plus the union the
/// covering rounds accumulated.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CoveredUnion<T> {
    pub trace: BoxTrace<T>,
    /// Fraction of all points lying in some round's box.
    pub union_support: T,
    pub union_count: usize,
    /// Hull of the round boxes.
    pub bounding_box: AxisBox<T>,
    pub bounding_stats: BoxStats<T>,
    /// True when the hull holds points the union misses: covering produced
    /// shells, and the single-box summary overstates the region.
    pub hollow: bool,
}

/// One trimming round: symmetric sweeps until the in-box share of `active`
/// falls to `beta`.
fn trim_round<T: Real>(
    data: &Dataset<T>,
    active: &[usize],
    config: &FastPrimConfig<T>,
) -> Result<(AxisBox<T>, Vec<usize>, Vec<TraceStep<T>>)> {
    let p_prime = config.p_prime;
    let q_std = config.alpha / T::of((2 * p_prime) as f64);
    let inv_active = T::of(active.len() as f64).recip();
    let mut bounds: AxisBox<T> = AxisBox::unbounded(data.p());
    let mut inbox: Vec<usize> = active.to_vec();
    let mut steps = Vec::new();
    let mut sorted: Vec<T> = Vec::new();

    loop {
        let m = inbox.len();
        let support = T::of(m as f64) * inv_active;
        if support <= config.beta || m < 2 {
            break;
        }
        // A standard sweep trims a q_std share from each face, shrinking
        // the support by about (1 - 2 q_std)^p_prime; when that would
        // undershoot beta, a final adjusted share lands on it instead.
        let shrink = (T::one() - T::of(2.0) * q_std).powi(p_prime as i32);
        let final_sweep = support * shrink < config.beta;
        let q = if final_sweep {
            (T::one() - (config.beta / support).powf(T::of(p_prime as f64).recip()))
                * T::of(0.5)
        } else {
            q_std
        };

        // Cut positions come from the sweep-start marginals; per face the
        // trimmed count is q*m rounded up (to guarantee progress) or, on
        // the final sweep, to nearest (to land close to beta).
        let target = (q * T::of(m as f64)).as_f64();
        let k = if final_sweep {
            target.round() as usize
        } else {
            target.ceil() as usize
        }
        .max(if final_sweep { 0 } else { 1 });
        if k == 0 || 2 * k >= m {
            break;
        }
        let mut cuts = Vec::with_capacity(p_prime);
        for j in 0..p_prime {
            sorted.clear();
            sorted.extend(inbox.iter().map(|&i| data.x()[(i, j)]));
            sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite values"));
            cuts.push((sorted[k], sorted[m - 1 - k]));
        }
        let next: Vec<usize> = inbox
            .iter()
            .copied()
            .filter(|&i| {
                cuts.iter().enumerate().all(|(j, &(lo, hi))| {
                    let v = data.x()[(i, j)];
                    v >= lo && v <= hi
                })
            })
            .collect();
        if next.len() == m {
            break; // degenerate marginals: the sweep removed nothing
        }
        for (j, &(lo, hi)) in cuts.iter().enumerate() {
            bounds.set_bound(j, Side::Low, bounds.lower()[j].max(lo));
            bounds.set_bound(j, Side::High, bounds.upper()[j].min(hi));
        }
        let count = next.len();
        let sum: T = next.iter().map(|&i| data.z()[i]).sum();
        let stats = BoxStats {
            support: T::of(count as f64) * inv_active,
            count,
            output_mean: (count > 0).then(|| sum / T::of(count as f64)),
            output_sum_fraction: sum * inv_active,
        };
        for (j, &(lo, hi)) in cuts.iter().enumerate() {
            for (side, value) in [(Side::Low, lo), (Side::High, hi)] {
                steps.push(TraceStep {
                    action: StepAction::Peel,
                    dimension: Some(j),
                    side: Some(side),
                    value: Some(value),
                    stats: stats.clone(),
                });
            }
        }
        inbox = next;
        if final_sweep {
            break;
        }
    }
    Ok((bounds, inbox, steps))
}

/// Runs the trimming variant with covering: `t` rounds, each trimming the
/// points left by its predecessors down to share `beta`, every round's box
/// entering the union.
///
/// The reported single box is the hull of the union, with [`CoveredUnion::hollow`]
/// set when the hull holds points the union misses. Usually each round's box
/// contains its predecessors (trimming approaches the removed region from
/// outside) and the flag stays clear; it fires when rounds land on disjoint
/// regions and data falls in between.
pub fn fastprim_iterative<T: Real>(
    data: &Dataset<T>,
    config: &FastPrimConfig<T>,
) -> Result<CoveredUnion<T>> {
    config.validate()?;
    if config.p_prime > data.p() {
        return Err(Error::InvalidConfig(format!(
            "cannot bound {} of {} dimensions",
            config.p_prime,
            data.p()
        )));
    }
    let beta_t = beta_total(config.beta, config.t)?;
    let share = beta_t.powf(T::of(config.p_prime as f64).recip());
    if T::of(data.n() as f64) * share < T::of(2.0) {
        return Err(Error::TooFewPoints {
            context: "trimming round marginal",
            needed: 2,
            available: data.n(),
        });
    }
    let min_active = (T::of(2.0) / config.beta)
        .ceil()
        .to_usize()
        .unwrap_or(usize::MAX);

    let mut active: Vec<usize> = (0..data.n()).collect();
    let mut trace = BoxTrace {
        steps: Vec::new(),
        boxes: Vec::new(),
        threshold: None,
        rounds_completed: 0,
        stopped_early: false,
    };

    for _ in 0..config.t {
        if active.len() < min_active {
            trace.stopped_early = true;
            break;
        }
        let active_size = active.len();
        let active_bounds = bounding_intervals(data, &active);
        let (bounds, inbox, mut steps) = trim_round(data, &active, config)?;
        let stats = box_stats(data, &active, &bounds)?;
        trace.steps.append(&mut steps);
        trace.boxes.push(TracedBox {
            bounds,
            stats,
            accepted: true,
            active_size,
            active_bounds,
        });
        trace.rounds_completed += 1;

        let remove: std::collections::HashSet<usize> = inbox.iter().copied().collect();
        active.retain(|i| !remove.contains(i));
    }

    let all: Vec<usize> = (0..data.n()).collect();
    let union_count = all
        .iter()
        .filter(|&&i| trace.boxes.iter().any(|b| b.bounds.contains(data.row(i))))
        .count();
    let union_support = T::of(union_count as f64) / T::of(data.n() as f64);
    let mut hull: Option<AxisBox<T>> = None;
    for traced in &trace.boxes {
        hull = Some(match hull {
            None => traced.bounds.clone(),
            Some(h) => h.hull(&traced.bounds)?,
        });
    }
    let bounding_box = hull.unwrap_or_else(|| AxisBox::unbounded(data.p()));
    let bounding_stats = box_stats(data, &all, &bounding_box)?;
    let hollow = bounding_stats.count > union_count;
    Ok(CoveredUnion {
        trace,
        union_support,
        union_count,
        bounding_box,
        bounding_stats,
        hollow,
    })
}

/// Central-box search in the principal-component space.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PcCentralBox<T> {
    pub model: RotationModel<T>,
    /// Box over the leading `p_prime` components.
    pub pc_box: AxisBox<T>,
    /// The same box as constraints on the original predictors; unpeeled
    /// components contribute no constraint.
    pub rule: LinearRule<T>,
    pub stats: BoxStats<T>,
    /// Iterative mode only: the reported box is a hull hiding holes.
    pub hollow: bool,
}

/// Rotates the data onto its leading `p_prime` principal components, finds
/// the central box there, and returns it both as a component-space box and
/// as input-space linear constraints.
pub fn fastprim_pca<T: Real>(
    data: &Dataset<T>,
    config: &FastPrimConfig<T>,
) -> Result<PcCentralBox<T>> {
    config.validate()?;
    if config.p_prime > data.p() {
        return Err(Error::InvalidConfig(format!(
            "cannot keep {} of {} components",
            config.p_prime,
            data.p()
        )));
    }
    let model = fit_rotation(data, config.p_prime)?;
    let rotated = rotate(&model, data)?;
    let (pc_box, stats, hollow) = match config.mode {
        FastPrimMode::ClosedForm => {
            let (bounds, stats) = central_box_empirical(&rotated, config)?;
            (bounds, stats, false)
        }
        FastPrimMode::Iterative => {
            let run = fastprim_iterative(&rotated, config)?;
            (run.bounding_box, run.bounding_stats, run.hollow)
        }
    };
    let rule = box_to_input_rule(&model, &pc_box)?;
    Ok(PcCentralBox {
        model,
        pc_box,
        rule,
        stats,
        hollow,
    })
}
