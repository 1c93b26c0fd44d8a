//! `bumphunt generate`: draw a synthetic labelled dataset to CSV.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bumphunt::bench::{CovarianceFamily, ExperimentDesign};
use bumphunt::datagen::{sample_mixture, save_csv};
use bumphunt::{Error, Result};
use clap::Args;

use crate::manifest::RunManifest;

#[derive(Args)]
pub struct GenerateArgs {
    /// Predictor dimension.
    #[arg(long, default_value_t = 2)]
    p: usize,
    /// Number of rows.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Probability that a row comes from the Gaussian target rather than
    /// from uniform background noise.
    #[arg(long, default_value_t = 1.0)]
    w: f64,
    /// Response mean of the target component.
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// Response standard deviation of the target component.
    #[arg(long = "sigma-response", default_value_t = 0.2)]
    sigma_response: f64,
    /// Master seed; falls back to BUMPHUNT_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Covariance preset (identity | equicorrelation | ar1) or the path of
    /// a JSON file holding a covariance-family spec.
    #[arg(long, default_value = "identity")]
    covariance: String,
    /// Correlation parameter of the equicorrelation and ar1 presets.
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    /// Fixed noise interval as "LO,HI"; by default the noise box spans the
    /// target rows of the same draw.
    #[arg(long, value_parser = parse_interval)]
    noise_bounds: Option<(f64, f64)>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn parse_interval(text: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = text
        .split_once(',')
        .ok_or_else(|| format!("expected \"LO,HI\", got {text:?}"))?;
    let lo: f64 = a.trim().parse().map_err(|_| format!("bad lower bound {a:?}"))?;
    let hi: f64 = b.trim().parse().map_err(|_| format!("bad upper bound {b:?}"))?;
    if !(lo < hi) {
        return Err(format!("need LO < HI, got {lo} and {hi}"));
    }
    Ok((lo, hi))
}

fn covariance_family(spec: &str, rho: f64) -> Result<CovarianceFamily> {
    match spec {
        "identity" => Ok(CovarianceFamily::Identity),
        "equicorrelation" => Ok(CovarianceFamily::Equicorrelation { rho }),
        "ar1" => Ok(CovarianceFamily::Ar1 { rho }),
        path_like => {
            let path = Path::new(path_like);
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })?;
            serde_json::from_str(&text).map_err(|e| Error::Parse {
                line: e.line(),
                column: e.column(),
                message: format!("covariance spec {path_like}: {e}"),
            })
        }
    }
}

pub fn run(args: GenerateArgs) -> Result<ExitCode> {
    let seed = crate::resolve_seed(args.seed)?.unwrap_or(0);
    let covariance = covariance_family(&args.covariance, args.rho)?;

    // The generator shares the experiment harness's data family, so a
    // design holds the fully resolved configuration.
    let mut design = ExperimentDesign::default();
    design.n = args.n;
    design.p_grid = vec![args.p];
    design.weight = args.w;
    design.mu = args.mu;
    design.sigma = args.sigma_response;
    design.covariance = covariance;
    design.noise_bounds = args.noise_bounds;
    design.master_seed = seed;
    design.validate()?;

    let config = design.mixture_for(args.p)?;
    let draw = sample_mixture(&config, seed)?;

    crate::ensure_out_dir(&args.out)?;
    let dataset_path = args.out.join("dataset.csv");
    save_csv(&dataset_path, &draw.dataset)?;

    let config_value = serde_json::to_value(&design).map_err(|e| {
        Error::InvalidConfig(format!("cannot serialize configuration: {e}"))
    })?;
    let mut manifest = RunManifest::new("generate", Some(seed), config_value);
    manifest.add_output(&dataset_path);
    let manifest_path = args.out.join("manifest.json");
    manifest.write(&manifest_path)?;

    let targets = draw
        .dataset
        .labels()
        .map(|ls| ls.iter().filter(|&&l| l != 0).count())
        .unwrap_or(draw.dataset.n());
    println!(
        "wrote {} ({} rows, {} predictors): {} target rows, {} noise rows, response mean {:.4}",
        dataset_path.display(),
        draw.dataset.n(),
        draw.dataset.p(),
        targets,
        draw.dataset.n() - targets,
        draw.dataset.response_mean(),
    );
    println!("manifest: {}", manifest_path.display());
    Ok(ExitCode::SUCCESS)
}
