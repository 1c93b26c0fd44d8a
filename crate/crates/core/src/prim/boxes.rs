use serde::{Deserialize, Serialize};

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Which face of a box an operation touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Low,
    High,
}

/// Axis-aligned box with closed sides.
///
/// Sides that have never been cut are unbounded (`-inf` / `+inf`); these
/// serialize as `null`.  Bounds of cut sides equal surviving data values, so
/// membership tests are exactly reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    bound(serialize = "T: Real", deserialize = "T: Real"),
    into = "AxisBoxRepr<T>",
    try_from = "AxisBoxRepr<T>"
)]
pub struct AxisBox<T> {
    lower: Vec<T>,
    upper: Vec<T>,
}

#[derive(Serialize, Deserialize)]
struct AxisBoxRepr<T> {
    lower: Vec<Option<T>>,
    upper: Vec<Option<T>>,
}

impl<T: Real> From<AxisBox<T>> for AxisBoxRepr<T> {
    fn from(b: AxisBox<T>) -> Self {
        AxisBoxRepr {
            lower: b
                .lower
                .iter()
                .map(|&v| if v == T::neg_infinity() { None } else { Some(v) })
                .collect(),
            upper: b
                .upper
                .iter()
                .map(|&v| if v == T::infinity() { None } else { Some(v) })
                .collect(),
        }
    }
}

impl<T: Real> TryFrom<AxisBoxRepr<T>> for AxisBox<T> {
    type Error = Error;

    fn try_from(r: AxisBoxRepr<T>) -> Result<Self> {
        AxisBox::new(
            r.lower
                .into_iter()
                .map(|v| v.unwrap_or_else(T::neg_infinity))
                .collect(),
            r.upper
                .into_iter()
                .map(|v| v.unwrap_or_else(T::infinity))
                .collect(),
        )
    }
}

impl<T: Real> AxisBox<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                context: "box bound lengths",
                expected: lower.len(),
                actual: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(Error::EmptyInput("box dimensions"));
        }
        for (j, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if l.is_nan() || u.is_nan() || l > u {
                return Err(Error::Domain(format!(
                    "box side {j} must satisfy lower <= upper, got [{l}, {u}]"
                )));
            }
        }
        Ok(AxisBox { lower, upper })
    }

    /// The whole space in `p` dimensions.
    pub fn unbounded(p: usize) -> Self {
        AxisBox {
            lower: vec![T::neg_infinity(); p],
            upper: vec![T::infinity(); p],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn bound(&self, j: usize, side: Side) -> T {
        match side {
            Side::Low => self.lower[j],
            Side::High => self.upper[j],
        }
    }

    pub fn set_bound(&mut self, j: usize, side: Side, value: T) {
        match side {
            Side::Low => self.lower[j] = value,
            Side::High => self.upper[j] = value,
        }
    }

    /// Closed-interval membership in every dimension.
    pub fn contains(&self, point: &[T]) -> bool {
        debug_assert_eq!(point.len(), self.dim());
        point
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&x, (&l, &u))| x >= l && x <= u)
    }

    /// True when `other` lies inside `self` in every dimension.
    pub fn contains_box(&self, other: &AxisBox<T>) -> bool {
        self.dim() == other.dim()
            && self
                .lower
                .iter()
                .zip(&other.lower)
                .all(|(&outer, &inner)| outer <= inner)
            && self
                .upper
                .iter()
                .zip(&other.upper)
                .all(|(&outer, &inner)| outer >= inner)
    }

    /// Side length in dimension `j` (infinite for uncut sides).
    pub fn side_length(&self, j: usize) -> T {
        self.upper[j] - self.lower[j]
    }

    pub fn is_side_bounded(&self, j: usize) -> bool {
        self.lower[j].is_finite() && self.upper[j].is_finite()
    }

    pub fn is_bounded(&self) -> bool {
        (0..self.dim()).all(|j| self.is_side_bounded(j))
    }

    /// Smallest box containing both operands (dimension must match).
    pub fn hull(&self, other: &AxisBox<T>) -> Result<AxisBox<T>> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                context: "box hull",
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(AxisBox {
            lower: self
                .lower
                .iter()
                .zip(&other.lower)
                .map(|(&a, &b)| a.min(b))
                .collect(),
            upper: self
                .upper
                .iter()
                .zip(&other.upper)
                .map(|(&a, &b)| a.max(b))
                .collect(),
        })
    }
}

/// Empirical statistics of a box relative to an active point set.
///
/// `support` is the in-box fraction of active points, `output_sum_fraction`
/// the in-box response sum over the active count, and `output_mean` their
/// ratio (absent for an empty box).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats<T> {
    pub support: T,
    pub count: usize,
    pub output_mean: Option<T>,
    pub output_sum_fraction: T,
}

impl<T: Real> BoxStats<T> {
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

/// Statistics of `box` over the active rows (`active` holds row indices
/// into `data`).  Errors when the active set is empty.
pub fn box_stats<T: Real>(
    data: &Dataset<T>,
    active: &[usize],
    bounds: &AxisBox<T>,
) -> Result<BoxStats<T>> {
    if active.is_empty() {
        return Err(Error::EmptyInput("active set"));
    }
    if bounds.dim() != data.p() {
        return Err(Error::DimensionMismatch {
            context: "box dimension",
            expected: data.p(),
            actual: bounds.dim(),
        });
    }
    let mut count = 0usize;
    let mut z_sum = T::zero();
    for &i in active {
        if bounds.contains(data.row(i)) {
            count += 1;
            z_sum += data.z()[i];
        }
    }
    let n_active = T::of(active.len() as f64);
    Ok(BoxStats {
        support: T::of(count as f64) / n_active,
        count,
        output_mean: (count > 0).then(|| z_sum / T::of(count as f64)),
        output_sum_fraction: z_sum / n_active,
    })
}

/// One recorded action of a peeling/pasting/covering run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceStep<T> {
    pub action: StepAction,
    pub dimension: Option<usize>,
    pub side: Option<Side>,
    pub value: Option<T>,
    pub stats: BoxStats<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepAction {
    Peel,
    Paste,
    AcceptBox,
}

/// A finished box of one covering round.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct TracedBox<T> {
    #[serde(rename = "box")]
    pub bounds: AxisBox<T>,
    /// Statistics relative to the round's active set.
    pub stats: BoxStats<T>,
    /// Whether the round's mean cleared the covering threshold.
    pub accepted: bool,
    /// Size of the active set the round started from.
    pub active_size: usize,
    /// Per-dimension min/max of the round's active points, the fallback used
    /// when reporting volumes of boxes with uncut sides.
    pub active_bounds: Vec<(T, T)>,
}

/// Full record of a search: every step plus the per-round boxes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct BoxTrace<T> {
    pub steps: Vec<TraceStep<T>>,
    pub boxes: Vec<TracedBox<T>>,
    /// Covering threshold the acceptance flags were computed against.
    pub threshold: Option<T>,
    pub rounds_completed: usize,
    /// Set when covering ran out of active points before finishing.
    pub stopped_early: bool,
}

#[cfg(test)]
mod tests {
    use crate::numkernel::Matrix;

    use super::*;

    fn toy_dataset() -> Dataset<f64> {
        let x = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![2.0, 2.0],
            vec![3.0, 3.0],
        ])
        .unwrap();
        Dataset::new(x, vec![0.0, 0.0, 1.0, 1.0], None).unwrap()
    }

    #[test]
    fn stats_hand_case() {
        let data = toy_dataset();
        let bounds = AxisBox::new(vec![1.5, 1.5], vec![4.0, 4.0]).unwrap();
        let stats = box_stats(&data, &[0, 1, 2, 3], &bounds).unwrap();
        assert_eq!(stats.count, 2);
        assert_eq!(stats.support, 0.5);
        assert_eq!(stats.output_mean, Some(1.0));
        assert_eq!(stats.output_sum_fraction, 0.5);
    }

    #[test]
    fn stats_relative_to_active_subset() {
        let data = toy_dataset();
        let bounds = AxisBox::new(vec![1.5, 1.5], vec![4.0, 4.0]).unwrap();
        let stats = box_stats(&data, &[0, 2], &bounds).unwrap();
        assert_eq!(stats.support, 0.5);
        assert_eq!(stats.output_sum_fraction, 0.5);
    }

    #[test]
    fn empty_box_flagged() {
        let data = toy_dataset();
        let bounds = AxisBox::new(vec![10.0, 10.0], vec![11.0, 11.0]).unwrap();
        let stats = box_stats(&data, &[0, 1, 2, 3], &bounds).unwrap();
        assert!(stats.is_empty());
        assert_eq!(stats.output_mean, None);
        assert_eq!(stats.support, 0.0);
    }

    #[test]
    fn empty_active_set_rejected() {
        let data = toy_dataset();
        let bounds = AxisBox::<f64>::unbounded(2);
        assert!(box_stats(&data, &[], &bounds).is_err());
    }

    #[test]
    fn whole_space_contains_everything() {
        let b = AxisBox::<f64>::unbounded(3);
        assert!(b.contains(&[1e300, -1e300, 0.0]));
        assert!(!b.is_bounded());
    }

    #[test]
    fn membership_is_closed() {
        let b = AxisBox::new(vec![0.0], vec![1.0]).unwrap();
        assert!(b.contains(&[0.0]));
        assert!(b.contains(&[1.0]));
        assert!(!b.contains(&[1.0 + 1e-15]));
    }

    #[test]
    fn invalid_bounds_rejected() {
        assert!(AxisBox::new(vec![1.0], vec![0.0]).is_err());
        assert!(AxisBox::new(vec![f64::NAN], vec![1.0]).is_err());
        assert!(AxisBox::new(vec![0.0], vec![0.0]).is_ok());
    }

    #[test]
    fn nesting_check() {
        let outer = AxisBox::new(vec![0.0, 0.0], vec![4.0, 4.0]).unwrap();
        let inner = AxisBox::new(vec![1.0, 1.0], vec![3.0, 3.0]).unwrap();
        assert!(outer.contains_box(&inner));
        assert!(!inner.contains_box(&outer));
        assert!(AxisBox::<f64>::unbounded(2).contains_box(&outer));
    }

    #[test]
    fn serde_uses_null_for_uncut_sides() {
        let mut b = AxisBox::<f64>::unbounded(2);
        b.set_bound(0, Side::Low, -1.5);
        b.set_bound(0, Side::High, 2.5);
        let json = serde_json::to_value(&b).unwrap();
        assert_eq!(json["lower"][0], -1.5);
        assert_eq!(json["lower"][1], serde_json::Value::Null);
        assert_eq!(json["upper"][1], serde_json::Value::Null);
        let back: AxisBox<f64> = serde_json::from_value(json).unwrap();
        assert_eq!(back, b);
    }
}
