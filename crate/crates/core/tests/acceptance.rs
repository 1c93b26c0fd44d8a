//! End-to-end acceptance suite. Every test prints a single `PASS`/`FAIL`
//! verdict line with its key measurements (visible under `--nocapture`; cargo
//! also replays the captured line when a test fails) and then asserts it.

use std::collections::HashSet;
use std::time::Instant;

use bumphunt::bench::{
    population_bump_box, run_experiment, timing_harness, Algorithm, ExperimentDesign, Space,
};
use bumphunt::datagen::{derive_rng, derive_seed, sample_mixture, Dataset};
use bumphunt::fastprim::{beta_total, central_box_empirical, fastprim_pca, FastPrimConfig};
use bumphunt::numkernel::{sym_eigen, Matrix, SymMatrix};
use bumphunt::prim::{cover, peel_step, peel_to_support, PeelCriterion, PrimConfig, Side};
use rand::Rng;

fn verdict(ok: bool, label: &str, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("{tag} {label}: {detail}");
    assert!(ok, "{label}: {detail}");
}

/// Baseline benchmark data: an all-target standard-normal mixture with
/// response mean 1 and standard deviation 0.2.
fn baseline_data(p: usize, n: usize, seed: u64) -> Dataset<f64> {
    let mut design = ExperimentDesign::default();
    design.n = n;
    design.p_grid = vec![p];
    let config = design.mixture_for(p).unwrap();
    sample_mixture(&config, seed).unwrap().dataset
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn standard_deviation(values: &[f64]) -> f64 {
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

fn log_mean_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + (values.iter().map(|v| (v - max).exp()).sum::<f64>() / values.len() as f64).ln()
}

#[test]
fn total_content_formula_is_exact() {
    let value: f64 = beta_total(0.05, 20).unwrap();
    let oracle = 1.0 - 0.95f64.powi(20);
    let frozen = 0.641_514_077_591_457_7_f64;
    let rounded = (value * 1e6).round() / 1e6;
    let ok = (value - oracle).abs() <= 1e-9
        && (value - frozen).abs() <= 1e-15
        && rounded == 0.641514;
    verdict(
        ok,
        "[01/12] total_content_formula_is_exact",
        &format!("beta_total(0.05, 20) = {value:.16} vs 1 - 0.95^20 = {oracle:.16}"),
    );
}

#[test]
fn central_box_support_tracks_total_content() {
    let start = Instant::now();
    let datasets: Vec<Dataset<f64>> = (0..32)
        .map(|rep| baseline_data(2, 1000, derive_seed(2001, &[rep])))
        .collect();
    let mut ok = true;
    let mut detail = String::new();
    for t in [1usize, 10, 20] {
        let target = beta_total(0.05, t).unwrap();
        let supports: Vec<f64> = datasets
            .iter()
            .map(|data| {
                fastprim_pca(data, &FastPrimConfig::new(0.05, t, 2))
                    .unwrap()
                    .stats
                    .support
            })
            .collect();
        let averaged = mean(&supports);
        ok &= (averaged - target).abs() <= 0.03;
        detail.push_str(&format!("t={t}: {averaged:.4} vs {target:.4}  "));
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 10.0;
    verdict(
        ok,
        "[02/12] central_box_support_tracks_total_content",
        &format!("{detail}(32 runs, {elapsed:.1} s)"),
    );
}

#[test]
fn peeling_rounds_bounded_and_land_in_support_band() {
    let start = Instant::now();
    let n = 1000usize;
    let (alpha, beta) = (0.05f64, 0.05f64);
    let config = PrimConfig::new(alpha, beta, 20);
    let min_active = (10.0 / beta).ceil() as usize;
    let band = (beta - 1.0 / n as f64, beta + alpha);
    let mut ok = true;
    let mut max_peels = 0usize;
    let mut support_range = (f64::INFINITY, f64::NEG_INFINITY);
    let mut rounds = 0usize;
    for rep in 0..32 {
        let data = baseline_data(2, n, derive_seed(3003, &[rep]));
        let mut active: Vec<usize> = (0..n).collect();
        for _ in 0..config.coverage {
            if active.len() < min_active {
                break;
            }
            let round = peel_to_support(&data, &active, &config).unwrap();
            rounds += 1;
            max_peels = max_peels.max(round.peels);
            let support = round.stats.support;
            support_range.0 = support_range.0.min(support);
            support_range.1 = support_range.1.max(support);
            ok &= round.peels <= 59 && support >= band.0 && support <= band.1;
            let remove: HashSet<usize> = round.inbox.iter().copied().collect();
            active.retain(|i| !remove.contains(i));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 30.0;
    verdict(
        ok,
        "[03/12] peeling_rounds_bounded_and_land_in_support_band",
        &format!(
            "{rounds} rounds, max peels {max_peels} (cap 59), support in [{:.4}, {:.4}] \
             (band [{:.4}, {:.4}], {elapsed:.1} s)",
            support_range.0, support_range.1, band.0, band.1
        ),
    );
}

/// Exhaustive re-derivation of one peel: sort each marginal, place the high
/// cut at the 0-based `ceil((1 - alpha) m) - 1` order statistic and the low
/// cut at its mirror, drop points strictly beyond the cut, and take the
/// candidate with the smallest removed response mass, first in scan order
/// (dimension ascending, low before high) on exact ties.
fn brute_force_peel(data: &Dataset<f64>, alpha: f64) -> Option<(usize, Side, f64, usize)> {
    let n = data.n();
    let inv_active = (n as f64).recip();
    let mut best: Option<(usize, Side, f64, usize, f64)> = None;
    for j in 0..data.p() {
        let mut sorted: Vec<f64> = (0..n).map(|i| data.x()[(i, j)]).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let hi_idx = ((1.0 - alpha) * n as f64).ceil() as usize - 1;
        let lo_idx = n - 1 - hi_idx;
        for (side, cut) in [(Side::Low, sorted[lo_idx]), (Side::High, sorted[hi_idx])] {
            let mut removed = 0usize;
            let mut removed_sum = 0.0;
            for i in 0..n {
                let v = data.x()[(i, j)];
                let out = match side {
                    Side::Low => v < cut,
                    Side::High => v > cut,
                };
                if out {
                    removed += 1;
                    removed_sum += data.z()[i];
                }
            }
            if removed == 0 {
                continue;
            }
            let mass = removed_sum * inv_active;
            if best.as_ref().is_none_or(|b| mass < b.4) {
                best = Some((j, side, cut, removed, mass));
            }
        }
    }
    best.map(|(j, side, cut, removed, _)| (j, side, cut, removed))
}

#[test]
fn peel_choice_matches_brute_force_oracle() {
    let start = Instant::now();
    let alphas = [0.05f64, 0.1, 0.2, 0.35];
    let mut ok = true;
    let mut tie_cases = 0usize;
    let mut void_cases = 0usize;
    for instance in 0..200u64 {
        let mut rng = derive_rng(4242, &[instance]);
        let n = rng.gen_range(2..=30usize);
        let d = rng.gen_range(1..=2usize);
        let gridded = instance % 2 == 1;
        let alpha = alphas[rng.gen_range(0..alphas.len())];
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..d)
                    .map(|_| {
                        if gridded {
                            rng.gen_range(0..5) as f64 * 0.25
                        } else {
                            rng.gen::<f64>()
                        }
                    })
                    .collect()
            })
            .collect();
        let z: Vec<f64> = (0..n)
            .map(|_| {
                if gridded {
                    rng.gen_range(0..3) as f64 * 0.5
                } else {
                    rng.gen::<f64>()
                }
            })
            .collect();
        let data = Dataset::new(Matrix::from_rows(&rows).unwrap(), z, None).unwrap();
        let inbox: Vec<usize> = (0..n).collect();
        let bounds = bumphunt::prim::AxisBox::unbounded(d);
        let expected = brute_force_peel(&data, alpha);
        let step = peel_step(&data, n, &inbox, &bounds, alpha, PeelCriterion::MinRemovedMass);
        match (expected, step) {
            (None, Err(_)) => void_cases += 1,
            (Some((j, side, cut, removed)), Ok(step)) => {
                let chosen = &step.chosen;
                ok &= chosen.dimension == j
                    && chosen.side == side
                    && chosen.cut.to_bits() == cut.to_bits()
                    && chosen.removed_count == removed;
                // Count instances where a second candidate shares the winning
                // removed mass, so tie-breaking is genuinely exercised.
                let winner_mass = chosen.removed_mass;
                let duplicates = bumphunt::prim::peel_candidates(&data, n, &inbox, &bounds, alpha)
                    .unwrap()
                    .iter()
                    .filter(|c| !c.is_void() && c.removed_mass == winner_mass)
                    .count();
                if duplicates > 1 {
                    tie_cases += 1;
                }
            }
            _ => ok = false,
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 5.0 && tie_cases > 0;
    verdict(
        ok,
        "[04/12] peel_choice_matches_brute_force_oracle",
        &format!("200 instances, {tie_cases} with ties, {void_cases} unpeelable, {elapsed:.1} s"),
    );
}

#[test]
fn trimmed_box_mean_stays_at_target_level() {
    let start = Instant::now();
    let mut ok = true;
    let mut worst = [0.0f64; 2];
    for rep in 0..32 {
        let data = baseline_data(2, 1000, derive_seed(5005, &[rep]));
        for (slot, (t, tolerance)) in [(1usize, 0.1f64), (20, 0.05)].into_iter().enumerate() {
            let result = fastprim_pca(&data, &FastPrimConfig::new(0.05, t, 2)).unwrap();
            let deviation = (result.stats.output_mean.unwrap() - 1.0).abs();
            worst[slot] = worst[slot].max(deviation);
            ok &= deviation <= tolerance;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 10.0;
    verdict(
        ok,
        "[05/12] trimmed_box_mean_stays_at_target_level",
        &format!(
            "worst |mean - 1|: t=1 {:.4} (tol 0.1), t=20 {:.4} (tol 0.05), 32 runs, {elapsed:.1} s",
            worst[0], worst[1]
        ),
    );
}

#[test]
fn trimming_beats_peeling_on_adjusted_mean_in_pc_space() {
    let start = Instant::now();
    let mut design = ExperimentDesign::default();
    design.n = 1000;
    design.p_grid = vec![10, 20];
    design.coverage_grid = vec![1, 5, 10];
    design.replicates = 64;
    design.spaces = vec![Space::Pc];
    design.master_seed = 6006;
    let result = run_experiment(&design).unwrap();
    let mut ok = result.failures.is_empty();
    let mut worst = (f64::INFINITY, 0usize, 0usize);
    for &p in &design.p_grid {
        for &t in &design.coverage_grid {
            let adjusted = |algorithm: Algorithm, replicate: usize| -> Option<f64> {
                result
                    .records
                    .iter()
                    .find(|r| {
                        r.algorithm == algorithm
                            && r.p == p
                            && r.coverage == t
                            && r.replicate == replicate
                    })
                    .and_then(|r| r.log_volume_adjusted)
            };
            let mut wins = 0usize;
            for replicate in 0..design.replicates {
                match (
                    adjusted(Algorithm::Fastprim, replicate),
                    adjusted(Algorithm::Prim, replicate),
                ) {
                    (Some(fast), Some(prim)) if fast > prim => wins += 1,
                    (Some(_), Some(_)) => {}
                    _ => ok = false,
                }
            }
            let rate = wins as f64 / design.replicates as f64;
            if rate < worst.0 {
                worst = (rate, p, t);
            }
            ok &= rate >= 0.70;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 300.0;
    verdict(
        ok,
        "[06/12] trimming_beats_peeling_on_adjusted_mean_in_pc_space",
        &format!(
            "worst cell win rate {:.2} at p={} t={} (floor 0.70), 64 runs/cell, {elapsed:.1} s",
            worst.0, worst.1, worst.2
        ),
    );
}

#[test]
fn component_space_gains_grow_with_dimension() {
    let start = Instant::now();
    let mut design = ExperimentDesign::default();
    design.n = 1000;
    design.p_grid = vec![10, 50];
    design.coverage_grid = vec![20];
    design.replicates = 32;
    design.spaces = vec![Space::Input, Space::Pc];
    design.master_seed = 7007;
    let result = run_experiment(&design).unwrap();
    let mut ok = result.failures.is_empty();
    let mut detail = String::new();
    for algorithm in [Algorithm::Fastprim, Algorithm::Prim] {
        let mut mean_ratio_logs = Vec::new();
        for &p in &design.p_grid {
            let mut diffs = Vec::new();
            for replicate in 0..design.replicates {
                let adjusted = |space: Space| -> Option<f64> {
                    result
                        .records
                        .iter()
                        .find(|r| {
                            r.algorithm == algorithm
                                && r.space == space
                                && r.p == p
                                && r.replicate == replicate
                        })
                        .and_then(|r| r.log_volume_adjusted)
                };
                match (adjusted(Space::Pc), adjusted(Space::Input)) {
                    (Some(pc), Some(input)) => diffs.push(pc - input),
                    _ => ok = false,
                }
            }
            let above_one = diffs.iter().filter(|d| **d > 0.0).count();
            ok &= above_one as f64 >= 0.90 * design.replicates as f64;
            mean_ratio_logs.push(log_mean_exp(&diffs));
            detail.push_str(&format!(
                "{algorithm:?} p={p}: {above_one}/{} above 1, ln(mean ratio) {:.2}  ",
                design.replicates,
                mean_ratio_logs.last().unwrap()
            ));
        }
        ok &= mean_ratio_logs[1] > mean_ratio_logs[0];
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 600.0;
    verdict(
        ok,
        "[07/12] component_space_gains_grow_with_dimension",
        &format!("{detail}({elapsed:.1} s)"),
    );
}

#[test]
fn box_centers_are_unbiased() {
    let start = Instant::now();
    let p = 2usize;
    let mut centers: Vec<Vec<f64>> = vec![Vec::new(); p];
    for rep in 0..128 {
        let data = baseline_data(p, 1000, derive_seed(8008, &[rep]));
        let result = fastprim_pca(&data, &FastPrimConfig::new(0.05, 20, p)).unwrap();
        let midpoint: Vec<f64> = result
            .pc_box
            .lower()
            .iter()
            .zip(result.pc_box.upper())
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect();
        let rotated_back = result.model.gamma.mul_vec(&midpoint).unwrap();
        for (j, buckets) in centers.iter_mut().enumerate() {
            buckets.push(result.model.center[j] + rotated_back[j]);
        }
    }
    let mut ok = true;
    let mut detail = String::new();
    for (j, coordinate) in centers.iter().enumerate() {
        let center_mean = mean(coordinate);
        let se = standard_deviation(coordinate) / (coordinate.len() as f64).sqrt();
        ok &= center_mean.abs() <= 3.0 * se;
        detail.push_str(&format!("dim {j}: {center_mean:+.5} (3 SE {:.5})  ", 3.0 * se));
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 60.0;
    verdict(
        ok,
        "[08/12] box_centers_are_unbiased",
        &format!("{detail}(128 runs, {elapsed:.1} s)"),
    );
}

#[test]
fn trimming_is_faster_than_peeling() {
    let data = baseline_data(2, 1000, 909);
    let prim_config = PrimConfig::new(0.05, 0.05, 20);
    let fast_config = FastPrimConfig::new(0.05, 20, 2);
    let prim_time = timing_harness(
        || {
            cover(&data, &prim_config).unwrap();
        },
        9,
    )
    .unwrap();
    let fast_time = timing_harness(
        || {
            central_box_empirical(&data, &fast_config).unwrap();
        },
        9,
    )
    .unwrap();
    let ok = fast_time.mean_seconds < prim_time.mean_seconds
        && prim_time.repetitions >= 8
        && fast_time.repetitions >= 8;
    verdict(
        ok,
        "[09/12] trimming_is_faster_than_peeling",
        &format!(
            "trim {:.3} ms vs peel {:.3} ms over {} timed runs",
            fast_time.mean_seconds * 1e3,
            prim_time.mean_seconds * 1e3,
            fast_time.repetitions
        ),
    );
}

#[test]
fn central_boxes_nest_exactly_in_rounds() {
    let start = Instant::now();
    let t_grid = [1usize, 2, 3, 5, 8, 13, 20];
    let mut ok = true;
    for k in 0..100u64 {
        let mut rng = derive_rng(1010, &[k]);
        let n = rng.gen_range(50..=400usize);
        let p = rng.gen_range(1..=5usize);
        let gridded = k % 2 == 1;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..p)
                    .map(|_| {
                        if gridded {
                            rng.gen_range(-10..=10) as f64 * 0.5
                        } else {
                            rng.gen::<f64>() * 20.0 - 10.0
                        }
                    })
                    .collect()
            })
            .collect();
        let z: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let data = Dataset::new(Matrix::from_rows(&rows).unwrap(), z, None).unwrap();
        let mut previous: Option<bumphunt::prim::AxisBox<f64>> = None;
        for &t in &t_grid {
            let (bounds, _) =
                central_box_empirical(&data, &FastPrimConfig::new(0.05, t, p)).unwrap();
            if let Some(smaller) = &previous {
                ok &= bounds.contains_box(smaller);
            }
            previous = Some(bounds);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 5.0;
    verdict(
        ok,
        "[10/12] central_boxes_nest_exactly_in_rounds",
        &format!("100 datasets x {} round counts, {elapsed:.1} s", t_grid.len()),
    );
}

#[test]
fn bump_box_oracle_matches_chi_square_geometry() {
    let sigma = SymMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let (ellipsoid, bounds) = population_bump_box(&sigma, 0.95).unwrap();
    let expected_half_width = 2.447_746_830_680_816_5_f64;
    let mut ok = true;
    for j in 0..2 {
        ok &= (bounds.upper()[j] - expected_half_width).abs() <= 1e-3;
        ok &= bounds.lower()[j] == -bounds.upper()[j];
    }
    let box_log_volume: f64 = bounds
        .lower()
        .iter()
        .zip(bounds.upper())
        .map(|(lo, hi)| (hi - lo).ln())
        .sum();
    let ratio = (box_log_volume - ellipsoid.log_volume()).exp();
    let expected_ratio = 4.0 / std::f64::consts::PI;
    ok &= (ratio - expected_ratio).abs() <= 1e-6;
    verdict(
        ok,
        "[11/12] bump_box_oracle_matches_chi_square_geometry",
        &format!(
            "half-width {:.4} vs {expected_half_width:.4}, volume ratio {ratio:.8} vs {expected_ratio:.8}",
            bounds.upper()[0]
        ),
    );
}

#[test]
fn eigendecomposition_tolerances_hold_at_scale() {
    let start = Instant::now();
    let large_sizes = [100usize, 110, 120, 130, 140, 150, 160, 175, 190, 200];
    let scales = [1e-3f64, 1.0, 1e3];
    let mut ok = true;
    let mut max_size = 0usize;
    let mut worst_rel = 0.0f64;
    let mut worst_gram = 0.0f64;
    for i in 0..500usize {
        let p = if i < 460 {
            2 + i % 23
        } else if i < 490 {
            40 + (i - 460) % 41
        } else {
            large_sizes[i - 490]
        };
        max_size = max_size.max(p);
        let scale = scales[i % scales.len()];
        let mut rng = derive_rng(1212, &[i as u64]);
        let mut rows = vec![vec![0.0f64; p]; p];
        for a in 0..p {
            for b in a..p {
                let v = (rng.gen::<f64>() * 2.0 - 1.0) * scale;
                rows[a][b] = v;
                rows[b][a] = v;
            }
        }
        let matrix = SymMatrix::from_rows(&rows).unwrap();
        let eigen = sym_eigen(&matrix).unwrap();
        let magnitude = rows
            .iter()
            .flatten()
            .fold(f64::MIN_POSITIVE, |acc, v| acc.max(v.abs()));
        let rebuilt = eigen.reconstruct();
        for a in 0..p {
            for b in 0..p {
                let rel = (rebuilt[(a, b)] - rows[a][b]).abs() / magnitude;
                worst_rel = worst_rel.max(rel);
                ok &= rel <= 1e-8;
            }
        }
        for a in 0..p {
            for b in a..p {
                let gram: f64 = (0..p)
                    .map(|k| eigen.vectors[(k, a)] * eigen.vectors[(k, b)])
                    .sum();
                let target = if a == b { 1.0 } else { 0.0 };
                let err = (gram - target).abs();
                worst_gram = worst_gram.max(err);
                ok &= err <= 1e-10;
            }
        }
        ok &= eigen.values.windows(2).all(|w| w[0] >= w[1]);
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 60.0;
    verdict(
        ok,
        "[12/12] eigendecomposition_tolerances_hold_at_scale",
        &format!(
            "500 matrices up to p={max_size}: worst reconstruction {worst_rel:.2e} (tol 1e-8), \
             worst orthogonality {worst_gram:.2e} (tol 1e-10), {elapsed:.1} s"
        ),
    );
}
