//! Benchmark harness: box metrics, population oracles and a Monte-Carlo
//! replication engine comparing the peel/paste search with the central-box
//! search across dimensions, coverage levels and predictor spaces.
//!
//! Volumes are handled on the log scale throughout — a box in 100 dimensions
//! over- or underflows `f64` long before its statistics stop being
//! meaningful.

mod experiment;
mod oracle;
mod timing;

pub use experiment::{
    aggregate, design_hash, gain_profile, run_experiment, write_gains_csv, write_records_csv,
    write_summary_json, Algorithm, CellAggregate, CellFailure, CovarianceFamily, ExperimentDesign,
    ExperimentResult, GainRow, MetricsRecord, MixtureDensity, Space, Summary, VarianceSpec,
};
pub use oracle::{chi2_quantile, population_bump_box, unit_ball_log_volume, EllipsoidBump};
pub use timing::{timing_harness, TimingStats};

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::prim::AxisBox;
use crate::scalar::Real;

/// Log-scale volume of a box, with flags for the two ways it can degrade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeEstimate<T> {
    /// Natural log of the volume; `-inf` when some side has zero width.
    pub log_volume: T,
    /// Some unbounded side was replaced by the fallback interval.
    pub clamped: bool,
    /// Some side has zero (or negative, after clamping) width.
    pub zero_width: bool,
}

impl<T: Real> VolumeEstimate<T> {
    /// The volume itself; may overflow to `inf` or underflow to `0` in high
    /// dimension, which is why the log form is primary.
    pub fn volume(&self) -> T {
        self.log_volume.exp()
    }
}

/// Volume of `bounds` as the product of its side lengths, computed in log
/// form.
///
/// Sides left unbounded by a search carry no length; when `fallback`
/// intervals (typically the active data's bounding box) are supplied, such a
/// side is clamped to the fallback and the estimate is flagged.  Without a
/// fallback an unbounded side is an error.
pub fn box_volume<T: Real>(
    bounds: &AxisBox<T>,
    fallback: Option<&[(T, T)]>,
) -> Result<VolumeEstimate<T>> {
    if let Some(fb) = fallback {
        if fb.len() != bounds.dim() {
            return Err(Error::DimensionMismatch {
                context: "volume fallback intervals",
                expected: bounds.dim(),
                actual: fb.len(),
            });
        }
    }
    let mut log_volume = T::zero();
    let mut clamped = false;
    let mut zero_width = false;
    for j in 0..bounds.dim() {
        let mut lo = bounds.lower()[j];
        let mut hi = bounds.upper()[j];
        if lo.is_infinite() || hi.is_infinite() {
            match fallback {
                Some(fb) => {
                    lo = lo.max(fb[j].0);
                    hi = hi.min(fb[j].1);
                    clamped = true;
                }
                None => {
                    return Err(Error::Domain(format!(
                        "side {j} is unbounded and no fallback interval was supplied"
                    )));
                }
            }
        }
        let length = hi - lo;
        if length <= T::zero() {
            zero_width = true;
            log_volume = T::neg_infinity();
        } else if !zero_width {
            log_volume += length.ln();
        }
    }
    Ok(VolumeEstimate {
        log_volume,
        clamped,
        zero_width,
    })
}

/// Empirical mode mass of a region: the average of a known density over the
/// sample, restricted to in-box points — `(1/n) * sum density(x_i)` over
/// rows the box contains.
pub fn mode_mass<T: Real>(
    data: &Dataset<T>,
    bounds: &AxisBox<T>,
    density: impl Fn(&[T]) -> T,
) -> Result<T> {
    if bounds.dim() != data.p() {
        return Err(Error::DimensionMismatch {
            context: "mode mass box",
            expected: data.p(),
            actual: bounds.dim(),
        });
    }
    let mut sum = T::zero();
    for i in 0..data.n() {
        let row = data.row(i);
        if bounds.contains(row) {
            sum += density(row);
        }
    }
    Ok(sum / T::of(data.n() as f64))
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_distr::StandardNormal;

    use crate::datagen::derive_rng;
    use crate::numkernel::Matrix;

    use super::*;

    #[test]
    fn volume_of_simple_boxes() {
        let unit = AxisBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let v = box_volume(&unit, None).unwrap();
        assert_abs_diff_eq!(v.volume(), 1.0, epsilon = 1e-12);
        assert!(!v.clamped && !v.zero_width);

        let z196 = AxisBox::new(vec![-1.96, -1.96], vec![1.96, 1.96]).unwrap();
        let v = box_volume(&z196, None).unwrap();
        assert_abs_diff_eq!(v.volume(), 15.3664, epsilon = 1e-10);
    }

    #[test]
    fn unbounded_side_uses_fallback_and_flags() {
        let bounds = AxisBox::new(vec![-1.0, f64::NEG_INFINITY], vec![1.0, f64::INFINITY]).unwrap();
        assert!(box_volume(&bounds, None).is_err());
        let v = box_volume(&bounds, Some(&[(-5.0, 5.0), (-3.0, 3.0)])).unwrap();
        assert!(v.clamped);
        assert_abs_diff_eq!(v.volume(), 12.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_width_side_is_flagged() {
        let bounds = AxisBox::new(vec![0.0, 2.0], vec![1.0, 2.0]).unwrap();
        let v = box_volume(&bounds, None).unwrap();
        assert!(v.zero_width);
        assert_eq!(v.volume(), 0.0);
    }

    #[test]
    fn constant_density_recovers_support_scaling() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let data =
            Dataset::new(Matrix::from_rows(&rows).unwrap(), vec![0.0; 10], None).unwrap();
        let whole = AxisBox::unbounded(1);
        let m = mode_mass(&data, &whole, |_| 3.0).unwrap();
        assert_abs_diff_eq!(m, 3.0, epsilon = 1e-12);
        // Half the points in the box: half the constant.
        let half = AxisBox::new(vec![5.0], vec![f64::INFINITY]).unwrap();
        let m = mode_mass(&data, &half, |_| 3.0).unwrap();
        assert_abs_diff_eq!(m, 1.5, epsilon = 1e-12);
        // Empty box: zero.
        let empty = AxisBox::new(vec![100.0], vec![200.0]).unwrap();
        assert_eq!(mode_mass(&data, &empty, |_| 3.0).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_mode_mass_matches_quadrature() {
        // E[phi(X) 1{|X| <= 1}] for X standard normal, against an
        // independent Simpson evaluation of the integral of phi^2.
        let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let steps = 20_000;
        let h = 2.0 / steps as f64;
        let mut integral = 0.0;
        for i in 0..steps {
            let a = -1.0 + i as f64 * h;
            let f = |x: f64| phi(x) * phi(x);
            integral += h / 6.0 * (f(a) + 4.0 * f(a + 0.5 * h) + f(a + h));
        }
        assert_abs_diff_eq!(integral, 0.2377219, epsilon = 1e-6);

        let n = 40_000;
        let mut rng = derive_rng(2024, &[1]);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.sample(StandardNormal)]).collect();
        let data = Dataset::new(Matrix::from_rows(&rows).unwrap(), vec![0.0; n], None).unwrap();
        let bounds = AxisBox::new(vec![-1.0], vec![1.0]).unwrap();
        let m = mode_mass(&data, &bounds, |row| phi(row[0])).unwrap();
        // SD of phi(X) 1{|X|<=1} is below 0.17; n = 4e4 gives 3 sigma < 0.0026.
        assert!(
            (m - integral).abs() < 0.0026,
            "mode mass {m} vs integral {integral}"
        );
    }
}
