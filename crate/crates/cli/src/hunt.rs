//! `bumphunt hunt`: one box search over a CSV dataset, writing the trace
//! (JSON), the box bounds (CSV), and — in component space — the input-space
//! linear rule (JSON), with a human-readable report on standard output.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use bumphunt::datagen::{load_csv, Dataset};
use bumphunt::fastprim::{
    central_box_empirical, fastprim_iterative, FastPrimConfig, FastPrimMode, QuantileConvention,
};
use bumphunt::pca::{box_to_input_rule, fit_rotation, rotate, LinearRule, RotationModel};
use bumphunt::prim::{cover, AxisBox, BoxTrace, PeelCriterion, PrimConfig, TracedBox};
use bumphunt::{Error, Result};
use clap::{Args, ValueEnum};

use crate::manifest::RunManifest;

#[derive(Args)]
pub struct HuntArgs {
    /// Input dataset CSV (numeric columns, one of them the response).
    #[arg(long)]
    input: PathBuf,
    /// Name of the response column.
    #[arg(long, default_value = "z")]
    response: String,
    /// Search algorithm.
    #[arg(long, value_enum, default_value_t = AlgorithmFlag::Prim)]
    algorithm: AlgorithmFlag,
    /// Whether to search the raw predictors or their principal components.
    #[arg(long, value_enum, default_value_t = SpaceFlag::Input)]
    space: SpaceFlag,
    /// Mass peeled (prim) or trimmed per sweep (fastprim iterative).
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Target support of one round.
    #[arg(long, default_value_t = 0.05)]
    beta: f64,
    /// Covering rounds.
    #[arg(long, default_value_t = 20)]
    coverage: usize,
    /// Run the pasting stage after each peeling round (prim only).
    #[arg(long)]
    paste: bool,
    /// Dimensions (input space) or leading components (pc space) that
    /// receive bounds; defaults to all.
    #[arg(long = "p-prime")]
    p_prime: Option<usize>,
    /// fastprim box construction.
    #[arg(long, value_enum, default_value_t = VariantFlag::ClosedForm)]
    variant: VariantFlag,
    /// Place fastprim quantile cuts at s/2 and 1-s/2 instead of the
    /// central (1-s)/2 and (1+s)/2.
    #[arg(long)]
    tail: bool,
    /// Peeling criterion (prim only).
    #[arg(long, value_enum, default_value_t = CriterionFlag::MinRemovedMass)]
    criterion: CriterionFlag,
    /// Covering acceptance threshold; defaults to the global response mean.
    #[arg(long)]
    threshold: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgorithmFlag {
    Prim,
    Fastprim,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SpaceFlag {
    Input,
    Pc,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantFlag {
    /// One-pass marginal-quantile box.
    ClosedForm,
    /// Face-by-face trimming with covering rounds.
    Iterative,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CriterionFlag {
    MinRemovedMass,
    MaxRemainingMean,
}

impl AlgorithmFlag {
    fn name(self) -> &'static str {
        match self {
            AlgorithmFlag::Prim => "prim",
            AlgorithmFlag::Fastprim => "fastprim",
        }
    }
}

impl SpaceFlag {
    fn name(self) -> &'static str {
        match self {
            SpaceFlag::Input => "input",
            SpaceFlag::Pc => "pc",
        }
    }
}

impl VariantFlag {
    fn name(self) -> &'static str {
        match self {
            VariantFlag::ClosedForm => "closed-form",
            VariantFlag::Iterative => "iterative",
        }
    }
}

impl CriterionFlag {
    fn name(self) -> &'static str {
        match self {
            CriterionFlag::MinRemovedMass => "min-removed-mass",
            CriterionFlag::MaxRemainingMean => "max-remaining-mean",
        }
    }
}

/// Everything a single search produces; `rules` is nonempty only in
/// component space.
struct HuntOutcome {
    trace: BoxTrace<f64>,
    model: Option<RotationModel<f64>>,
    rules: Vec<LinearRule<f64>>,
    /// Iterative covering only: the reported box is a hull that misses
    /// interior points.
    hollow: bool,
    /// Iterative covering only: share of rows inside some round's box.
    union_support: Option<f64>,
}

pub fn run(args: HuntArgs) -> Result<ExitCode> {
    let data = load_csv::<f64>(&args.input, Some(&args.response))?;
    let p = data.p();
    let p_prime = args.p_prime.unwrap_or(p);
    if args.algorithm == AlgorithmFlag::Prim && args.space == SpaceFlag::Input {
        if p_prime != p {
            return Err(Error::InvalidConfig(format!(
                "--p-prime applies to fastprim or to pc space; prim peels all {p} input dimensions"
            )));
        }
    }

    let outcome = match args.space {
        SpaceFlag::Input => hunt_in_place(&data, &args, p_prime, None)?,
        SpaceFlag::Pc => {
            let model = fit_rotation(&data, p_prime)?;
            let rotated = rotate(&model, &data)?;
            hunt_in_place(&rotated, &args, p_prime, Some(model))?
        }
    };

    crate::ensure_out_dir(&args.out)?;
    let trace_path = args.out.join("trace.json");
    write_json(&trace_path, &outcome.trace)?;
    let box_path = args.out.join("box.csv");
    write_box_csv(&box_path, &outcome.trace.boxes)?;

    let mut manifest = RunManifest::new(
        "hunt",
        None,
        serde_json::json!({
            "input": args.input.display().to_string(),
            "response": args.response,
            "algorithm": args.algorithm.name(),
            "space": args.space.name(),
            "alpha": args.alpha,
            "beta": args.beta,
            "coverage": args.coverage,
            "pasting": args.paste,
            "p_prime": p_prime,
            "variant": args.variant.name(),
            "tail": args.tail,
            "criterion": args.criterion.name(),
            "threshold": args.threshold,
        }),
    );
    manifest.add_input(&args.input);
    manifest.add_output(&trace_path);
    manifest.add_output(&box_path);

    if let Some(model) = &outcome.model {
        let rule_path = args.out.join("rule.json");
        write_json(
            &rule_path,
            &serde_json::json!({ "model": model, "rules": outcome.rules }),
        )?;
        manifest.add_output(&rule_path);
    }
    let manifest_path = args.out.join("manifest.json");
    manifest.write(&manifest_path)?;

    report(&args, &outcome, data.n());
    Ok(ExitCode::SUCCESS)
}

/// Runs the selected algorithm on `working` (already rotated when `model`
/// is present) and collects the outputs.
fn hunt_in_place(
    working: &Dataset<f64>,
    args: &HuntArgs,
    p_prime: usize,
    model: Option<RotationModel<f64>>,
) -> Result<HuntOutcome> {
    match args.algorithm {
        AlgorithmFlag::Prim => {
            let mut config = PrimConfig::new(args.alpha, args.beta, args.coverage);
            config.pasting = args.paste;
            config.threshold = args.threshold;
            config.peel_criterion = match args.criterion {
                CriterionFlag::MinRemovedMass => PeelCriterion::MinRemovedMass,
                CriterionFlag::MaxRemainingMean => PeelCriterion::MaxRemainingMean,
            };
            let trace = cover(working, &config)?;
            let rules = match &model {
                Some(m) => accepted_rules(m, &trace)?,
                None => Vec::new(),
            };
            Ok(HuntOutcome {
                trace,
                model,
                rules,
                hollow: false,
                union_support: None,
            })
        }
        AlgorithmFlag::Fastprim => {
            let mut config = FastPrimConfig::new(args.beta, args.coverage, p_prime);
            config.alpha = args.alpha;
            config.convention = if args.tail {
                QuantileConvention::Tail
            } else {
                QuantileConvention::Central
            };
            config.mode = match args.variant {
                VariantFlag::ClosedForm => FastPrimMode::ClosedForm,
                VariantFlag::Iterative => FastPrimMode::Iterative,
            };
            let (trace, main_box, hollow, union_support) = match config.mode {
                FastPrimMode::ClosedForm => {
                    let (bounds, stats) = central_box_empirical(working, &config)?;
                    let trace = single_box_trace(working, bounds.clone(), stats, args.coverage);
                    (trace, bounds, false, None)
                }
                FastPrimMode::Iterative => {
                    let run = fastprim_iterative(working, &config)?;
                    let mut trace = run.trace;
                    // Append the union's hull so the box files carry the
                    // single reported box as well as the per-round boxes.
                    trace.boxes.push(TracedBox {
                        bounds: run.bounding_box.clone(),
                        stats: run.bounding_stats,
                        accepted: true,
                        active_size: working.n(),
                        active_bounds: data_bounds(working),
                    });
                    (trace, run.bounding_box, run.hollow, Some(run.union_support))
                }
            };
            let rules = match &model {
                Some(m) => vec![box_to_input_rule(m, &main_box)?],
                None => Vec::new(),
            };
            Ok(HuntOutcome {
                trace,
                model,
                rules,
                hollow,
                union_support,
            })
        }
    }
}

/// Input-space rules of the accepted boxes of a component-space trace.
fn accepted_rules(
    model: &RotationModel<f64>,
    trace: &BoxTrace<f64>,
) -> Result<Vec<LinearRule<f64>>> {
    trace
        .boxes
        .iter()
        .filter(|b| b.accepted)
        .map(|b| box_to_input_rule(model, &b.bounds))
        .collect()
}

/// Wraps a one-shot box in trace form so every algorithm writes the same
/// files. The closed form stands in for `rounds` covering rounds at once.
fn single_box_trace(
    data: &Dataset<f64>,
    bounds: AxisBox<f64>,
    stats: bumphunt::prim::BoxStats<f64>,
    rounds: usize,
) -> BoxTrace<f64> {
    BoxTrace {
        steps: Vec::new(),
        boxes: vec![TracedBox {
            bounds,
            stats,
            accepted: true,
            active_size: data.n(),
            active_bounds: data_bounds(data),
        }],
        threshold: None,
        rounds_completed: rounds,
        stopped_early: false,
    }
}

/// Componentwise min/max intervals of the data.
fn data_bounds(data: &Dataset<f64>) -> Vec<(f64, f64)> {
    let p = data.p();
    let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); p];
    for i in 0..data.n() {
        for (j, interval) in bounds.iter_mut().enumerate() {
            let v = data.x()[(i, j)];
            interval.0 = interval.0.min(v);
            interval.1 = interval.1.max(v);
        }
    }
    bounds
}

fn write_json<S: serde::Serialize>(path: &std::path::Path, value: &S) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), value).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::new(std::io::ErrorKind::Other, e),
    })
}

/// One row per box side: `box,dimension,lower,upper,accepted`, with
/// unbounded sides written as `-inf` / `inf`.
fn write_box_csv(path: &std::path::Path, boxes: &[TracedBox<f64>]) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut out = std::io::BufWriter::new(file);
    (|| -> std::io::Result<()> {
        writeln!(out, "box,dimension,lower,upper,accepted")?;
        for (k, traced) in boxes.iter().enumerate() {
            for j in 0..traced.bounds.dim() {
                writeln!(
                    out,
                    "{k},{j},{},{},{}",
                    traced.bounds.lower()[j],
                    traced.bounds.upper()[j],
                    traced.accepted
                )?;
            }
        }
        out.flush()
    })()
    .map_err(io_err)
}

fn report(args: &HuntArgs, outcome: &HuntOutcome, n: usize) {
    let space_note = match args.space {
        SpaceFlag::Input => String::new(),
        SpaceFlag::Pc => " (box coordinates are principal components)".to_string(),
    };
    println!(
        "{} in {} space on {} rows{}",
        args.algorithm.name(),
        args.space.name(),
        n,
        space_note
    );
    let trace = &outcome.trace;
    println!(
        "rounds completed: {}{}",
        trace.rounds_completed,
        if trace.stopped_early {
            " (stopped early: too few points left)"
        } else {
            ""
        }
    );
    if let Some(threshold) = trace.threshold {
        println!("acceptance threshold: {threshold:.4}");
    }
    if let Some(union_support) = outcome.union_support {
        println!("union of round boxes covers support {union_support:.4}");
    }
    if outcome.hollow {
        println!(
            "warning: the reported box is the hull of the round boxes and \
             contains points none of them cover"
        );
    }
    for (k, traced) in trace.boxes.iter().enumerate() {
        let mean = traced
            .stats
            .output_mean
            .map(|m| format!("{m:.4}"))
            .unwrap_or_else(|| "-".to_string());
        println!(
            "box {k}{}: support {:.4} ({} points), response mean {mean}",
            if traced.accepted { "" } else { " [rejected]" },
            traced.stats.support,
            traced.stats.count
        );
        print_bounds(&traced.bounds);
    }
    for (r, rule) in outcome.rules.iter().enumerate() {
        println!("rule {r} (input-space constraints):");
        print_rule(rule);
    }
}

fn print_bounds(bounds: &AxisBox<f64>) {
    for j in 0..bounds.dim() {
        let lo = bounds.lower()[j];
        let hi = bounds.upper()[j];
        if lo.is_infinite() && hi.is_infinite() {
            continue;
        }
        println!("    x{j} in [{lo:.4}, {hi:.4}]");
    }
}

fn print_rule(rule: &LinearRule<f64>) {
    for constraint in &rule.constraints {
        let mut combo = String::new();
        for (j, &g) in constraint.coefficients.iter().enumerate() {
            if j > 0 {
                combo.push_str(if g < 0.0 { " - " } else { " + " });
            } else if g < 0.0 {
                combo.push('-');
            }
            combo.push_str(&format!("{:.4}*x{j}", g.abs()));
            if j >= 5 && constraint.coefficients.len() > 7 {
                combo.push_str(&format!(
                    " ... ({} more terms)",
                    constraint.coefficients.len() - j - 1
                ));
                break;
            }
        }
        let lo = constraint
            .lower
            .map(|v| format!("{v:.4} <= "))
            .unwrap_or_default();
        let hi = constraint
            .upper
            .map(|v| format!(" <= {v:.4}"))
            .unwrap_or_default();
        println!("    {lo}{combo}{hi}");
    }
}
