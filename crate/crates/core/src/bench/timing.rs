//! Wall-clock timing with warm-up exclusion.

use std::time::Instant;

use crate::error::{Error, Result};

/// Mean and standard error of the timed runs that were kept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingStats {
    pub mean_seconds: f64,
    pub se_seconds: f64,
    /// Runs aggregated (the warm-up run is excluded).
    pub repetitions: usize,
}

/// Runs `task` `repetitions` times, discards the first run as warm-up, and
/// summarizes the rest.  Requires at least 3 repetitions so the standard
/// error is defined.  Runs execute serially, one after another.
pub fn timing_harness<F: FnMut()>(mut task: F, repetitions: usize) -> Result<TimingStats> {
    if repetitions < 3 {
        return Err(Error::InvalidConfig(format!(
            "timing needs at least 3 repetitions (one warm-up plus two kept), got {repetitions}"
        )));
    }
    let mut kept = Vec::with_capacity(repetitions - 1);
    for run in 0..repetitions {
        let start = Instant::now();
        task();
        let seconds = start.elapsed().as_secs_f64();
        if run > 0 {
            kept.push(seconds);
        }
    }
    let n = kept.len();
    let mean = kept.iter().sum::<f64>() / n as f64;
    let var = kept.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok(TimingStats {
        mean_seconds: mean,
        se_seconds: (var / n as f64).sqrt(),
        repetitions: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noop_task_times_near_zero() {
        let stats = timing_harness(|| {}, 5).unwrap();
        assert!(stats.mean_seconds >= 0.0);
        assert!(stats.mean_seconds < 0.01);
        assert!(stats.se_seconds >= 0.0);
        assert_eq!(stats.repetitions, 4);
    }

    #[test]
    fn warm_up_run_is_executed_but_not_counted() {
        let mut calls = 0;
        let stats = timing_harness(|| calls += 1, 3).unwrap();
        assert_eq!(calls, 3);
        assert_eq!(stats.repetitions, 2);
    }

    #[test]
    fn too_few_repetitions_rejected() {
        assert!(timing_harness(|| {}, 2).is_err());
    }

    #[test]
    fn sleep_task_measures_roughly_its_duration() {
        let stats =
            timing_harness(|| std::thread::sleep(std::time::Duration::from_millis(5)), 4).unwrap();
        assert!(stats.mean_seconds >= 0.004, "mean {}", stats.mean_seconds);
        assert!(stats.mean_seconds < 0.5);
    }
}
