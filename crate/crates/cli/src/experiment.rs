//! `bumphunt experiment`: run a replicated benchmark design and write the
//! per-replicate records (CSV), the gain profile (CSV), and the aggregate
//! summary (JSON), all named after the design hash and master seed.

use std::path::PathBuf;
use std::process::ExitCode;

use bumphunt::bench::{
    design_hash, gain_profile, run_experiment, write_gains_csv, write_records_csv,
    write_summary_json, ExperimentDesign,
};
use bumphunt::{Error, Result};
use clap::Args;

use crate::manifest::RunManifest;

#[derive(Args)]
pub struct ExperimentArgs {
    /// Design file (JSON). Unknown fields are rejected; every field has a
    /// default, so `{}` is a valid design.
    #[arg(long)]
    design: PathBuf,
    /// Master seed override (flag beats BUMPHUNT_SEED beats the file).
    #[arg(long)]
    seed: Option<u64>,
    /// Cap on worker threads for the replicate sweep.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

pub fn run(args: ExperimentArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.design).map_err(|source| Error::Io {
        path: args.design.clone(),
        source,
    })?;
    let mut design: ExperimentDesign = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: format!("design {}: {e}", args.design.display()),
    })?;
    if let Some(seed) = crate::resolve_seed(args.seed)? {
        design.master_seed = seed;
    }
    design.validate()?;
    if let Some(threads) = args.threads {
        if threads == 0 {
            return Err(Error::InvalidConfig("--threads must be positive".into()));
        }
        // Ignores the error if a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    let result = run_experiment(&design)?;
    let gains = gain_profile(&result.records);

    crate::ensure_out_dir(&args.out)?;
    let stem = format!(
        "experiment-{:016x}-seed{}",
        design_hash(&design),
        design.master_seed
    );
    let records_path = args.out.join(format!("{stem}-records.csv"));
    write_records_csv(&records_path, &result.records)?;
    let gains_path = args.out.join(format!("{stem}-gains.csv"));
    write_gains_csv(&gains_path, &gains)?;
    let summary_path = args.out.join(format!("{stem}-summary.json"));
    write_summary_json(&summary_path, &design, &result)?;

    let config_value = serde_json::to_value(&design).map_err(|e| {
        Error::InvalidConfig(format!("cannot serialize design: {e}"))
    })?;
    let mut manifest = RunManifest::new("experiment", Some(design.master_seed), config_value);
    manifest.add_input(&args.design);
    manifest.add_output(&records_path);
    manifest.add_output(&gains_path);
    manifest.add_output(&summary_path);
    let manifest_path = args.out.join(format!("{stem}-manifest.json"));
    manifest.write(&manifest_path)?;

    if let Some(name) = &design.name {
        println!("design {name} ({stem})");
    } else {
        println!("design {stem}");
    }
    println!(
        "{} records, {} cell failures",
        result.records.len(),
        result.failures.len()
    );
    if !gains.is_empty() {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
        println!("volume-adjusted mean gain, pc over input:");
        println!("  algorithm  p    coverage  pairs  ratio      log-ratio  se");
        for row in &gains {
            println!(
                "  {:<9}  {:<3}  {:<8}  {:<5}  {:<9}  {:<9}  {}",
                row.algorithm.to_string(),
                row.p,
                row.coverage,
                row.pairs,
                opt(row.ratio),
                opt(row.log_ratio),
                opt(row.se)
            );
        }
    }
    for failure in &result.failures {
        let algorithm = failure
            .algorithm
            .map(|a| a.to_string())
            .unwrap_or_else(|| "-".to_string());
        let space = failure
            .space
            .map(|s| s.to_string())
            .unwrap_or_else(|| "-".to_string());
        let coverage = failure
            .coverage
            .map(|c| c.to_string())
            .unwrap_or_else(|| "-".to_string());
        eprintln!(
            "cell failed: {algorithm}/{space} p={} coverage={coverage} replicate={}: {}",
            failure.p, failure.replicate, failure.message
        );
    }
    println!("records:  {}", records_path.display());
    println!("gains:    {}", gains_path.display());
    println!("summary:  {}", summary_path.display());
    println!("manifest: {}", manifest_path.display());

    if result.failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        let worst = result
            .failures
            .iter()
            .map(|f| crate::class_code(f.class))
            .max()
            .unwrap_or(3);
        Ok(ExitCode::from(worst))
    }
}
