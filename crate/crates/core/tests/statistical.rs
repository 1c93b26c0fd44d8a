//! Statistical behavior at fixed seeds: convergence of sample moments,
//! centering and consistency of the trimmed box, variance ordering between
//! the two search strategies, and their convergence at deep coverage.

use bumphunt::bench::{gain_profile, run_experiment, Algorithm, ExperimentDesign, Space};
use bumphunt::datagen::{
    build_covariance, conditional_moments, sample_mixture, standardized_means, Dataset,
    GaussianComponent, GaussianJointModel, MixtureConfig, NoiseBounds, ResponseSpec,
};
use bumphunt::fastprim::{beta_total, central_box_empirical, central_box_population, FastPrimConfig};
use bumphunt::numkernel::SymMatrix;
use bumphunt::prim::{cover, PrimConfig};

/// Baseline benchmark data: an all-target standard-normal mixture with
/// response mean 1 and standard deviation 0.2.
fn baseline_data(p: usize, n: usize, seed: u64) -> Dataset<f64> {
    let mut design = ExperimentDesign::default();
    design.n = n;
    design.p_grid = vec![p];
    let config = design.mixture_for(p).unwrap();
    sample_mixture(&config, seed).unwrap().dataset
}

fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

#[test]
fn sample_covariance_converges_to_the_model() {
    let p = 5;
    let n = 100_000;
    let rho: f64 = 0.6;
    let correlation_rows: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| rho.powi((i as i32 - j as i32).abs())).collect())
        .collect();
    let correlation = SymMatrix::from_rows(&correlation_rows).unwrap();
    let built = build_covariance(&vec![1.0; p], &correlation).unwrap();
    assert!(!built.repaired);
    let sigma = built.matrix;

    let config = MixtureConfig {
        n,
        weight: 1.0,
        components: vec![GaussianComponent {
            mean: vec![0.0; p],
            covariance: sigma.clone(),
            response: ResponseSpec::Continuous { mu: 1.0, sigma: 0.2 },
        }],
        noise_bounds: NoiseBounds::Fixed { a: -1.0, b: 1.0 },
    };

    let mut deviations = Vec::new();
    for seed in 0..10u64 {
        let draw = sample_mixture(&config, 1000 + seed).unwrap();
        let x = draw.dataset.x();
        let mut means = vec![0.0; p];
        for i in 0..n {
            for (j, m) in means.iter_mut().enumerate() {
                *m += x[(i, j)];
            }
        }
        for m in &mut means {
            *m /= n as f64;
        }
        let mut max_dev = 0.0f64;
        for a in 0..p {
            for b in a..p {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += (x[(i, a)] - means[a]) * (x[(i, b)] - means[b]);
                }
                let s = acc / (n as f64 - 1.0);
                max_dev = max_dev.max((s - sigma[(a, b)]).abs());
            }
        }
        deviations.push(max_dev);
    }
    let mean_dev = deviations.iter().sum::<f64>() / deviations.len() as f64;
    let bound = 5.0 * ((p as f64).ln() / n as f64).sqrt();
    assert!(
        mean_dev <= bound,
        "covariance deviation {mean_dev:.5} exceeds {bound:.5}"
    );
}

#[test]
fn conditional_response_variance_does_not_depend_on_location() {
    let model =
        GaussianJointModel::standard(1.0, 0.2, vec![0.1, 0.05, 0.02]);
    let reference = conditional_moments(&model, &[0.0, 0.0, 0.0]).unwrap();
    assert!(reference.variance > 0.0);
    let mut probe: f64 = 0.37;
    for _ in 0..25 {
        // A crude deterministic scatter of probe points.
        probe = (probe * 997.0 + 0.123).rem_euclid(7.0) - 3.5;
        let point = [probe, -2.0 * probe + 1.0, probe * probe - 2.0];
        let moments = conditional_moments(&model, &point).unwrap();
        assert_eq!(moments.variance, reference.variance);
        assert!(moments.mean.is_finite());
    }
}

#[test]
fn noise_share_matches_the_mixture_weight() {
    let weight = 0.7;
    let n = 2000;
    let config = MixtureConfig {
        n,
        weight,
        components: vec![GaussianComponent {
            mean: vec![0.0, 0.0],
            covariance: SymMatrix::from_diag(&[1.0, 1.0]).unwrap(),
            response: ResponseSpec::Continuous { mu: 1.0, sigma: 0.2 },
        }],
        noise_bounds: NoiseBounds::Fixed { a: -4.0, b: 4.0 },
    };
    let expected = n as f64 * (1.0 - weight);
    let sigma = (n as f64 * weight * (1.0 - weight)).sqrt();
    for seed in [5u64, 6, 7] {
        let draw = sample_mixture(&config, seed).unwrap();
        let noise = draw
            .dataset
            .labels()
            .unwrap()
            .iter()
            .filter(|&&l| l == 0)
            .count() as f64;
        assert!(
            (noise - expected).abs() <= 3.0 * sigma,
            "seed {seed}: {noise} noise rows vs expected {expected} +- {:.1}",
            3.0 * sigma
        );
    }
}

#[test]
fn batch_means_standardize_to_unit_normal_scale() {
    let data = baseline_data(2, 20_000, 424242);
    let standardized = standardized_means(data.x(), 50).unwrap();
    let batches = standardized.rows();
    assert_eq!(batches, 400);
    let mut values = Vec::with_capacity(batches * 2);
    for i in 0..batches {
        for j in 0..2 {
            values.push(standardized[(i, j)]);
        }
    }
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    let var = sample_variance(&values);
    assert!(mean.abs() <= 3.0 / count.sqrt(), "mean {mean:.4}");
    assert!((var - 1.0).abs() <= 0.15, "variance {var:.4}");
}

#[test]
fn trimmed_box_centers_on_the_sample_mean() {
    let n = 10_000;
    let t = 20;
    let beta_t: f64 = beta_total(0.05, t).unwrap();
    for seed in [11u64, 12, 13] {
        let data = baseline_data(2, n, seed);
        let config = FastPrimConfig::new(0.05, t, 2);
        let (bounds, _) = central_box_empirical(&data, &config).unwrap();
        for j in 0..2 {
            let mut mean = 0.0;
            let mut sq = 0.0;
            for i in 0..n {
                let v = data.x()[(i, j)];
                mean += v;
                sq += v * v;
            }
            mean /= n as f64;
            let sd = (sq / n as f64 - mean * mean).sqrt();
            let midpoint = (bounds.lower()[j] + bounds.upper()[j]) / 2.0;
            let slack = 3.0 * sd / (n as f64 * beta_t).sqrt();
            assert!(
                (midpoint - mean).abs() <= slack,
                "seed {seed} dim {j}: midpoint {midpoint:.4} vs mean {mean:.4} (slack {slack:.4})"
            );
        }
    }
}

#[test]
fn empirical_box_converges_to_the_population_box() {
    let t = 20;
    let beta_t: f64 = beta_total(0.05, t).unwrap();
    let population = central_box_population(&[0.0, 0.0], &[1.0, 1.0], 2, beta_t).unwrap();
    let config = FastPrimConfig::new(0.05, t, 2);

    // Quantile asymptotics: se = sqrt(q(1-q)/n) / phi(z_q) per bound.
    let share = beta_t.powf(0.5);
    let q = (1.0 + share) / 2.0;
    let z: f64 = bumphunt::numkernel::normal_quantile(q).unwrap();
    let density = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let se = |n: usize| (q * (1.0 - q) / n as f64).sqrt() / density;

    let mut errors = Vec::new();
    for n in [1_000usize, 10_000, 100_000] {
        let mut total = 0.0;
        let seeds = [21u64, 22, 23];
        for &seed in &seeds {
            let data = baseline_data(2, n, seed);
            let (bounds, _) = central_box_empirical(&data, &config).unwrap();
            let mut worst = 0.0f64;
            for j in 0..2 {
                worst = worst.max((bounds.lower()[j] - population.lower()[j]).abs());
                worst = worst.max((bounds.upper()[j] - population.upper()[j]).abs());
            }
            total += worst;
        }
        let mean_err = total / seeds.len() as f64;
        assert!(
            mean_err <= 4.0 * se(n),
            "n={n}: error {mean_err:.5} above {:.5}",
            4.0 * se(n)
        );
        errors.push(mean_err);
    }
    assert!(
        errors[2] < errors[0],
        "error did not shrink: {errors:?}"
    );
}

/// The trimmed central boxes are nested across rounds, so their in-box means
/// form a strongly correlated, nearly flat sequence in the round count; the
/// peel search refits a fresh greedy box each round, so its cumulative mean
/// jumps around. Compare the within-run variance of the mean across rounds
/// 1..=10.
#[test]
fn trimming_keeps_the_box_mean_steadier_across_rounds_than_peeling() {
    let mut design = ExperimentDesign::default();
    design.n = 1000;
    design.p_grid = vec![10];
    design.coverage_grid = (1..=10).collect();
    design.replicates = 64;
    design.spaces = vec![Space::Pc];
    design.master_seed = 90210;
    let result = run_experiment(&design).unwrap();
    assert!(result.failures.is_empty());

    let sequence_variance = |algorithm: Algorithm, replicate: usize| -> f64 {
        let mut means: Vec<(usize, f64)> = result
            .records
            .iter()
            .filter(|r| r.algorithm == algorithm && r.replicate == replicate)
            .map(|r| (r.coverage, r.output_mean.unwrap()))
            .collect();
        means.sort_by_key(|&(t, _)| t);
        let values: Vec<f64> = means.into_iter().map(|(_, m)| m).collect();
        assert_eq!(values.len(), design.coverage_grid.len());
        sample_variance(&values)
    };

    let mut steadier = 0usize;
    let mut fast_total = 0.0;
    let mut prim_total = 0.0;
    for replicate in 0..design.replicates {
        let fast = sequence_variance(Algorithm::Fastprim, replicate);
        let prim = sequence_variance(Algorithm::Prim, replicate);
        if fast <= prim {
            steadier += 1;
        }
        fast_total += fast;
        prim_total += prim;
    }
    let reps = design.replicates as f64;
    assert!(
        fast_total / reps <= prim_total / reps,
        "trimming mean sequence variance {:.6e} above peeling {:.6e}",
        fast_total / reps,
        prim_total / reps
    );
    assert!(
        steadier >= 40,
        "trimming steadier in only {steadier}/{} runs",
        design.replicates
    );
}

#[test]
fn gain_ratios_of_the_two_searches_converge_at_deep_coverage() {
    let mut design = ExperimentDesign::default();
    design.n = 1000;
    design.p_grid = vec![10];
    design.coverage_grid = vec![1, 20];
    design.replicates = 32;
    design.master_seed = 777;
    let result = run_experiment(&design).unwrap();
    assert!(result.failures.is_empty());
    let gains = gain_profile(&result.records);

    let ratio = |algorithm: Algorithm, coverage: usize| -> f64 {
        gains
            .iter()
            .find(|g| g.algorithm == algorithm && g.coverage == coverage)
            .and_then(|g| g.ratio)
            .expect("gain row")
    };
    let gap_shallow = (ratio(Algorithm::Fastprim, 1) - ratio(Algorithm::Prim, 1)).abs();
    let gap_deep = (ratio(Algorithm::Fastprim, 20) - ratio(Algorithm::Prim, 20)).abs();
    assert!(
        gap_deep < gap_shallow,
        "gain gap grew with coverage: {gap_deep:.4} vs {gap_shallow:.4}"
    );
}

#[test]
fn covered_support_grows_round_by_round() {
    let data = baseline_data(2, 1000, 33);
    let config = PrimConfig::new(0.05, 0.05, 20);
    let trace = cover(&data, &config).unwrap();
    assert!(trace.rounds_completed >= 2);

    let mut covered = vec![false; data.n()];
    let mut last_total = 0usize;
    for traced in &trace.boxes {
        for i in 0..data.n() {
            if traced.bounds.contains(data.row(i)) {
                covered[i] = true;
            }
        }
        let total = covered.iter().filter(|&&c| c).count();
        assert!(
            total > last_total,
            "a covering round added no newly covered points"
        );
        last_total = total;
    }
}

#[test]
fn trimmed_box_volume_grows_with_rounds() {
    let data = baseline_data(3, 1000, 44);
    let mut last_log_volume = f64::NEG_INFINITY;
    for t in [1usize, 2, 5, 10, 20, 40] {
        let config = FastPrimConfig::new(0.05, t, 3);
        let (bounds, _) = central_box_empirical(&data, &config).unwrap();
        let log_volume: f64 = (0..3)
            .map(|j| (bounds.upper()[j] - bounds.lower()[j]).ln())
            .sum();
        assert!(
            log_volume >= last_log_volume,
            "volume shrank between round counts (t={t})"
        );
        last_log_volume = log_volume;
    }
}
