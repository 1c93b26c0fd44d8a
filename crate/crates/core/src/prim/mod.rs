//! Greedy box search: peel a box down to a target support, optionally paste
//! it back outward, and cover the data by repeating on the leftover points.
//!
//! Peeling (one round) starts from the whole space and repeatedly removes
//! the thin end slab ("candidate") that carries the least response mass,
//! choosing among the `2p` per-face candidates.  Covering runs `t` rounds,
//! deleting each round's points from the active set so later rounds explore
//! the remainder; a round's box enters the result region when its response
//! mean reaches the covering threshold.

mod boxes;

pub use boxes::{box_stats, AxisBox, BoxStats, BoxTrace, Side, StepAction, TraceStep, TracedBox};

use serde::{Deserialize, Serialize};

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::numkernel::order_stat_index;
use crate::scalar::Real;

/// How [`peel_step`] ranks the `2p` candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeelCriterion {
    /// Remove the slab carrying the least response mass (the default).
    MinRemovedMass,
    /// Keep the box whose remaining mean is largest.
    MaxRemainingMean,
}

/// Parameters of the peel/paste/cover search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrimConfig<T> {
    /// Fraction of in-box mass removed per peel.
    pub alpha: T,
    /// Target support of one peeling round.
    pub beta: T,
    /// Number of covering rounds.
    pub coverage: usize,
    /// Whether to run the pasting stage after each peeling round.
    pub pasting: bool,
    /// Covering acceptance threshold; defaults to the global response mean.
    pub threshold: Option<T>,
    pub peel_criterion: PeelCriterion,
}

impl<T: Real> PrimConfig<T> {
    pub fn new(alpha: T, beta: T, coverage: usize) -> Self {
        PrimConfig {
            alpha,
            beta,
            coverage,
            pasting: false,
            threshold: None,
            peel_criterion: PeelCriterion::MinRemovedMass,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > T::zero() && self.alpha < T::one()) {
            return Err(Error::InvalidConfig(format!(
                "peel fraction must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.beta > T::zero() && self.beta < T::one()) {
            return Err(Error::InvalidConfig(format!(
                "target support must lie in (0, 1), got {}",
                self.beta
            )));
        }
        if self.coverage == 0 {
            return Err(Error::InvalidConfig(
                "coverage must be at least one round".into(),
            ));
        }
        Ok(())
    }
}

/// One of the `2p` end slabs considered by a peel step.
#[derive(Debug, Clone)]
pub struct PeelCandidate<T> {
    pub dimension: usize,
    pub side: Side,
    /// Quantile cut; points strictly beyond it are removed and the bound
    /// moves to this surviving value.
    pub cut: T,
    pub removed_count: usize,
    /// Response sum of the removed points over the active count.
    pub removed_mass: T,
    /// Box with the cut applied.
    pub box_after: AxisBox<T>,
    /// Statistics of `box_after` relative to the active set.
    pub stats_after: BoxStats<T>,
}

impl<T> PeelCandidate<T> {
    /// A void candidate removes no points and is never chosen.
    pub fn is_void(&self) -> bool {
        self.removed_count == 0
    }
}

/// Builds the `2p` peel candidates for the current box: per dimension, the
/// points strictly below the `alpha`-quantile of the in-box marginal (low
/// side) and strictly above its `(1 - alpha)`-quantile (high side).
///
/// Candidates appear in a fixed order (dimension ascending, low before
/// high), which downstream tie-breaking relies on.  `inbox` holds the active
/// row indices currently inside the box; `n_active` is the size of the full
/// active set the round started from.
pub fn peel_candidates<T: Real>(
    data: &Dataset<T>,
    n_active: usize,
    inbox: &[usize],
    bounds: &AxisBox<T>,
    alpha: T,
) -> Result<Vec<PeelCandidate<T>>> {
    if inbox.is_empty() {
        return Err(Error::EmptyInput("in-box point set"));
    }
    if n_active < inbox.len() {
        return Err(Error::InvalidConfig(
            "active count smaller than in-box count".into(),
        ));
    }
    let p = data.p();
    let m = inbox.len();
    let inv_active = T::of(n_active as f64).recip();
    let mut candidates = Vec::with_capacity(2 * p);
    let mut values: Vec<T> = Vec::with_capacity(m);

    for j in 0..p {
        values.clear();
        values.extend(inbox.iter().map(|&i| data.x()[(i, j)]));
        let mut sorted = values.clone();
        sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite values"));

        // The high cut sits at the ceil((1 - alpha) m) order statistic; the
        // low cut mirrors it from the other end, so both sides remove at
        // most alpha * m points.
        let hi_idx = order_stat_index(m, T::one() - alpha);
        let cut_high = sorted[hi_idx];

        let lo_idx = m - 1 - hi_idx;
        let cut_low = sorted[lo_idx];

        for (side, cut) in [(Side::Low, cut_low), (Side::High, cut_high)] {
            let mut removed_count = 0usize;
            let mut removed_sum = T::zero();
            for (&i, &v) in inbox.iter().zip(&values) {
                let removed = match side {
                    Side::Low => v < cut,
                    Side::High => v > cut,
                };
                if removed {
                    removed_count += 1;
                    removed_sum += data.z()[i];
                }
            }
            let mut box_after = bounds.clone();
            box_after.set_bound(j, side, cut);
            let kept = m - removed_count;
            let kept_sum = inbox.iter().map(|&i| data.z()[i]).sum::<T>() - removed_sum;
            let stats_after = BoxStats {
                support: T::of(kept as f64) * inv_active,
                count: kept,
                output_mean: (kept > 0).then(|| kept_sum / T::of(kept as f64)),
                output_sum_fraction: kept_sum * inv_active,
            };
            candidates.push(PeelCandidate {
                dimension: j,
                side,
                cut,
                removed_count,
                removed_mass: removed_sum * inv_active,
                box_after,
                stats_after,
            });
        }
    }
    Ok(candidates)
}

/// Outcome of one applied peel.
#[derive(Debug, Clone)]
pub struct PeelStep<T> {
    pub chosen: PeelCandidate<T>,
    /// Active row indices still inside the box after the cut.
    pub inbox: Vec<usize>,
}

/// Selects and applies the best non-void candidate.
///
/// Under [`PeelCriterion::MinRemovedMass`] the candidate with the smallest
/// removed response mass wins; under [`PeelCriterion::MaxRemainingMean`] the
/// one leaving the largest in-box mean.  Exact ties go to the earliest
/// candidate in scan order (lowest dimension, low side first).  Errors with
/// [`Error::CannotPeel`] when every candidate is void.
pub fn peel_step<T: Real>(
    data: &Dataset<T>,
    n_active: usize,
    inbox: &[usize],
    bounds: &AxisBox<T>,
    alpha: T,
    criterion: PeelCriterion,
) -> Result<PeelStep<T>> {
    let candidates = peel_candidates(data, n_active, inbox, bounds, alpha)?;
    let mut best: Option<&PeelCandidate<T>> = None;
    for candidate in &candidates {
        if candidate.is_void() {
            continue;
        }
        let better = match best {
            None => true,
            Some(current) => match criterion {
                PeelCriterion::MinRemovedMass => candidate.removed_mass < current.removed_mass,
                PeelCriterion::MaxRemainingMean => {
                    candidate.stats_after.output_mean > current.stats_after.output_mean
                }
            },
        };
        if better {
            best = Some(candidate);
        }
    }
    let chosen = best.ok_or(Error::CannotPeel)?.clone();
    let j = chosen.dimension;
    let inbox = inbox
        .iter()
        .copied()
        .filter(|&i| {
            let v = data.x()[(i, j)];
            match chosen.side {
                Side::Low => v >= chosen.cut,
                Side::High => v <= chosen.cut,
            }
        })
        .collect();
    Ok(PeelStep { chosen, inbox })
}

/// Result of one peeling round (and optional pasting).
#[derive(Debug, Clone)]
pub struct PeelRound<T> {
    pub bounds: AxisBox<T>,
    pub stats: BoxStats<T>,
    /// Active row indices inside the final box.
    pub inbox: Vec<usize>,
    pub steps: Vec<TraceStep<T>>,
    pub peels: usize,
    pub paste_iterations: usize,
}

/// Peels from the whole space until the support relative to `active` falls
/// below `beta + alpha`, or no candidate can be applied.
///
/// The final support cannot undershoot `beta - 1/|active|` because every
/// peel removes at most an `alpha` fraction of the current box.  Requires at
/// least `ceil(1/beta)` active points.
pub fn peel_to_support<T: Real>(
    data: &Dataset<T>,
    active: &[usize],
    config: &PrimConfig<T>,
) -> Result<PeelRound<T>> {
    config.validate()?;
    let needed = (T::one() / config.beta).ceil().to_usize().unwrap_or(usize::MAX);
    if active.len() < needed {
        return Err(Error::TooFewPoints {
            context: "peeling round",
            needed,
            available: active.len(),
        });
    }
    let n_active = active.len();
    let stop_below = config.beta + config.alpha;
    let mut bounds = AxisBox::unbounded(data.p());
    let mut inbox: Vec<usize> = active.to_vec();
    let mut steps = Vec::new();

    loop {
        let support = T::of(inbox.len() as f64) / T::of(n_active as f64);
        if support < stop_below {
            break;
        }
        match peel_step(data, n_active, &inbox, &bounds, config.alpha, config.peel_criterion) {
            Ok(step) => {
                bounds = step.chosen.box_after.clone();
                inbox = step.inbox;
                steps.push(TraceStep {
                    action: StepAction::Peel,
                    dimension: Some(step.chosen.dimension),
                    side: Some(step.chosen.side),
                    value: Some(step.chosen.cut),
                    stats: step.chosen.stats_after.clone(),
                });
            }
            Err(Error::CannotPeel) => break,
            Err(e) => return Err(e),
        }
    }

    let stats = box_stats(data, active, &bounds)?;
    let peels = steps.len();
    Ok(PeelRound {
        bounds,
        stats,
        inbox,
        steps,
        peels,
        paste_iterations: 0,
    })
}

/// One candidate enlargement considered by pasting.
struct PasteCandidate<T> {
    dimension: usize,
    side: Side,
    new_bound: T,
    added: Vec<usize>,
    new_mean: T,
}

/// Grows the box back outward to a fixed point.
///
/// Each iteration examines the `2p` face slabs holding the
/// `ceil(alpha * count)` nearest active points outside that face (points
/// already satisfying every other side's bounds); the slab maximizing the
/// enlarged mean is applied when it strictly increases the current mean.
/// Returns the number of applied enlargements.
pub fn paste_step<T: Real>(
    data: &Dataset<T>,
    active: &[usize],
    round: &mut PeelRound<T>,
    config: &PrimConfig<T>,
) -> Result<usize> {
    config.validate()?;
    let n_active = active.len();
    if n_active == 0 {
        return Err(Error::EmptyInput("active set"));
    }
    let inv_active = T::of(n_active as f64).recip();
    let p = data.p();
    let mut iterations = 0usize;

    loop {
        let m = round.inbox.len();
        if m == 0 {
            break;
        }
        let in_sum: T = round.inbox.iter().map(|&i| data.z()[i]).sum();
        let current_mean = in_sum / T::of(m as f64);
        let slab = ((config.alpha * T::of(m as f64)).ceil().to_usize()).unwrap_or(1).max(1);

        let mut best: Option<PasteCandidate<T>> = None;
        for j in 0..p {
            for side in [Side::Low, Side::High] {
                // Outside points adjacent to this face: beyond the bound in
                // dimension j, inside the box in every other dimension.
                let mut outside: Vec<(T, usize)> = active
                    .iter()
                    .copied()
                    .filter(|&i| {
                        let row = data.row(i);
                        let beyond = match side {
                            Side::Low => row[j] < round.bounds.lower()[j],
                            Side::High => row[j] > round.bounds.upper()[j],
                        };
                        beyond
                            && (0..p).all(|k| {
                                k == j
                                    || (row[k] >= round.bounds.lower()[k]
                                        && row[k] <= round.bounds.upper()[k])
                            })
                    })
                    .map(|i| (data.x()[(i, j)], i))
                    .collect();
                if outside.is_empty() {
                    continue;
                }
                // Nearest first; index breaks value ties deterministically.
                outside.sort_unstable_by(|a, b| {
                    let ord = a.0.partial_cmp(&b.0).expect("finite values");
                    match side {
                        Side::Low => ord.reverse().then(a.1.cmp(&b.1)),
                        Side::High => ord.then(a.1.cmp(&b.1)),
                    }
                });
                let nominal = slab.min(outside.len());
                let new_bound = outside[nominal - 1].0;
                // The realized box is closed, so value ties at the new bound
                // come along with it.
                let added: Vec<usize> = outside
                    .iter()
                    .filter(|(v, _)| match side {
                        Side::Low => *v >= new_bound,
                        Side::High => *v <= new_bound,
                    })
                    .map(|&(_, i)| i)
                    .collect();
                let added_sum: T = added.iter().map(|&i| data.z()[i]).sum();
                let new_mean =
                    (in_sum + added_sum) / T::of((m + added.len()) as f64);
                let better = match &best {
                    None => true,
                    Some(b) => new_mean > b.new_mean,
                };
                if better {
                    best = Some(PasteCandidate {
                        dimension: j,
                        side,
                        new_bound,
                        added,
                        new_mean,
                    });
                }
            }
        }

        match best {
            Some(candidate) if candidate.new_mean > current_mean => {
                round
                    .bounds
                    .set_bound(candidate.dimension, candidate.side, candidate.new_bound);
                round.inbox.extend(candidate.added.iter().copied());
                round.inbox.sort_unstable();
                iterations += 1;
                let count = round.inbox.len();
                let sum: T = round.inbox.iter().map(|&i| data.z()[i]).sum();
                let stats = BoxStats {
                    support: T::of(count as f64) * inv_active,
                    count,
                    output_mean: Some(sum / T::of(count as f64)),
                    output_sum_fraction: sum * inv_active,
                };
                round.steps.push(TraceStep {
                    action: StepAction::Paste,
                    dimension: Some(candidate.dimension),
                    side: Some(candidate.side),
                    value: Some(candidate.new_bound),
                    stats: stats.clone(),
                });
                round.stats = stats;
            }
            _ => break,
        }
    }
    round.paste_iterations += iterations;
    Ok(iterations)
}

/// Runs the full covering search: up to `coverage` peeling (and optionally
/// pasting) rounds, each on the points left over by its predecessors.
///
/// A round's box is accepted into the result region when its in-box mean is
/// at least the threshold (the global response mean unless overridden); its
/// points leave the active set either way.  Covering stops early, with the
/// event recorded, once fewer than `ceil(10 / beta)` active points remain.
pub fn cover<T: Real>(data: &Dataset<T>, config: &PrimConfig<T>) -> Result<BoxTrace<T>> {
    config.validate()?;
    if data.n() == 0 {
        return Err(Error::EmptyInput("dataset"));
    }
    let threshold = config.threshold.unwrap_or_else(|| data.response_mean());
    let min_active = (T::of(10.0) / config.beta)
        .ceil()
        .to_usize()
        .unwrap_or(usize::MAX);

    let mut active: Vec<usize> = (0..data.n()).collect();
    let mut trace = BoxTrace {
        steps: Vec::new(),
        boxes: Vec::new(),
        threshold: Some(threshold),
        rounds_completed: 0,
        stopped_early: false,
    };

    for _ in 0..config.coverage {
        if active.len() < min_active {
            trace.stopped_early = true;
            break;
        }
        let active_size = active.len();
        let active_bounds = bounding_intervals(data, &active);
        let mut round = peel_to_support(data, &active, config)?;
        if config.pasting {
            paste_step(data, &active, &mut round, config)?;
        }
        let accepted = match round.stats.output_mean {
            Some(mean) => mean >= threshold,
            None => false,
        };
        trace.steps.append(&mut round.steps);
        if accepted {
            trace.steps.push(TraceStep {
                action: StepAction::AcceptBox,
                dimension: None,
                side: None,
                value: None,
                stats: round.stats.clone(),
            });
        }
        trace.boxes.push(TracedBox {
            bounds: round.bounds,
            stats: round.stats,
            accepted,
            active_size,
            active_bounds,
        });
        trace.rounds_completed += 1;

        let remove: std::collections::HashSet<usize> = round.inbox.iter().copied().collect();
        active.retain(|i| !remove.contains(i));
    }
    Ok(trace)
}

/// Per-dimension min/max over the given rows.
pub fn bounding_intervals<T: Real>(data: &Dataset<T>, rows: &[usize]) -> Vec<(T, T)> {
    let mut bounds = vec![(T::infinity(), T::neg_infinity()); data.p()];
    for &i in rows {
        for (j, b) in bounds.iter_mut().enumerate() {
            let v = data.x()[(i, j)];
            b.0 = b.0.min(v);
            b.1 = b.1.max(v);
        }
    }
    bounds
}
