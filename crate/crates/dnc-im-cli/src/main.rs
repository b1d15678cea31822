//! `dnc-im`: divide-and-conquer possibilistic inference from the command
//! line. Block summarization, combination, contour evaluation, confidence
//! intervals, and the coverage / validity-ECDF / merging experiment harness.
//!
//! Exit codes: 0 on success, 2 on configuration or input errors, 3 on
//! numerical failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dnc_im::contours::{
    default_scalar_grid, large_n_contour_grid, large_n_marginal_contour_grid, oracle_contour_grid,
    profile_contour_from_table, simulate_validation_sample, summary_log_density,
    valid_contour_anchored, valid_contour_importance, Contour, ContourKind, Grid,
};
use dnc_im::error::Error;
use dnc_im::harness::{default_workers, run_experiment, run_merging_check, ExperimentConfig};
use dnc_im::inference::level_set;
use dnc_im::models::ModelSpec;
use dnc_im::rng::{derive, tags};
use dnc_im::summaries::{combine, summarize_block};
use dnc_im::{io, Result};

#[derive(Parser)]
#[command(name = "dnc-im", version, about = "Valid divide-and-conquer possibilistic inference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce data blocks to (size, MLE, observed information) summaries.
    Summarize(SummarizeArgs),
    /// Combine block summary JSONs into an aggregated summary.
    Combine(CombineArgs),
    /// Evaluate a possibility contour from an aggregated summary.
    Contour(ContourArgs),
    /// Extract a confidence region from a stored contour.
    Ci(CiArgs),
    /// Coverage experiment from a TOML config.
    Coverage(ExperimentArgs),
    /// Validity ECDF experiment from a TOML config.
    Ecdf(ExperimentArgs),
    /// Large-sample merging check from a TOML config.
    Merge(ExperimentArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Model family: gaussian, exponential, gandk, stable.
    #[arg(long)]
    model: String,
    /// Known variance for the gaussian family.
    #[arg(long, default_value_t = 1.0)]
    tau2: f64,
    /// Overall-symmetry constant for the g-and-k family.
    #[arg(long, default_value_t = 0.8)]
    c: f64,
    /// Fixed stability index for the alpha-stable family.
    #[arg(long, default_value_t = 1.5)]
    alpha_index: f64,
}

impl ModelArgs {
    fn resolve(&self) -> Result<ModelSpec> {
        let model = match self.model.as_str() {
            "gaussian" | "gaussian_known_var" => ModelSpec::GaussianKnownVar { tau2: self.tau2 },
            "exponential" => ModelSpec::Exponential,
            "gandk" | "g-and-k" => ModelSpec::GandK { c: self.c },
            "stable" | "alpha_stable" => ModelSpec::AlphaStable { alpha: self.alpha_index },
            other => {
                return Err(Error::Config(format!(
                    "unknown model {other:?}; expected gaussian, exponential, gandk, or stable"
                )))
            }
        };
        model.validate()?;
        Ok(model)
    }
}

#[derive(Args)]
struct SummarizeArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// One-column CSV data files (header `y`), one per block.
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Output directory (defaults to each input's directory).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads (env DNC_IM_WORKERS, then all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct CombineArgs {
    /// Block summary JSONs.
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Output file for the aggregated summary JSON.
    #[arg(long, default_value = "aggregated.json")]
    output: PathBuf,
}

#[derive(Args)]
struct ContourArgs {
    /// Aggregated summary JSON from `combine`.
    #[arg(long)]
    aggregated: PathBuf,
    /// Contour kind: large_n, valid_anchored, valid_importance,
    /// profile_marginal, oracle_full_data, exponential_closed_form.
    #[arg(long, default_value = "valid_anchored")]
    kind: String,
    /// Monte Carlo sample size for the validified kinds.
    #[arg(long, default_value_t = 50_000)]
    m: usize,
    /// Master seed for the validification draws.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Coordinate name for marginal contours (all coordinates if omitted).
    #[arg(long)]
    coordinate: Option<String>,
    /// Grid points per axis.
    #[arg(long, default_value_t = 201)]
    grid_points: usize,
    /// Output stem; writes <stem>.csv and <stem>.json (per-coordinate stems
    /// for multi-coordinate output).
    #[arg(long, default_value = "contour")]
    output: PathBuf,
}

#[derive(Args)]
struct CiArgs {
    /// Contour stem (reads <stem>.csv and <stem>.json).
    #[arg(long)]
    contour: PathBuf,
    #[arg(long)]
    alpha: f64,
    /// Output JSON path (a CSV mirror is written alongside).
    #[arg(long, default_value = "region.json")]
    output: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment TOML config.
    #[arg(long)]
    config: PathBuf,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (env DNC_IM_WORKERS, then all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory override.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Summarize(args) => cmd_summarize(args),
        Command::Combine(args) => cmd_combine(args),
        Command::Contour(args) => cmd_contour(args),
        Command::Ci(args) => cmd_ci(args),
        Command::Coverage(args) => cmd_coverage(args),
        Command::Ecdf(args) => cmd_ecdf(args),
        Command::Merge(args) => cmd_merge(args),
    }
}

fn cmd_summarize(args: SummarizeArgs) -> Result<()> {
    let model = args.model.resolve()?;
    if let Some(dir) = &args.output {
        std::fs::create_dir_all(dir)?;
    }
    let workers = args.workers.unwrap_or_else(default_workers);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let results: Vec<Result<PathBuf>> = pool.install(|| {
        use rayon::prelude::*;
        args.input
            .par_iter()
            .map(|path| {
                let data = io::read_dataset_csv(path)?;
                let summary = summarize_block(&model, &data)?;
                let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("block");
                let out_dir = args
                    .output
                    .clone()
                    .unwrap_or_else(|| path.parent().unwrap_or(Path::new(".")).to_path_buf());
                let out = out_dir.join(format!("{stem}.summary.json"));
                io::write_summary_json(&out, &model, &summary)?;
                Ok(out)
            })
            .collect()
    });
    for r in results {
        println!("wrote {}", r?.display());
    }
    Ok(())
}

fn cmd_combine(args: CombineArgs) -> Result<()> {
    let docs: Vec<io::SummaryDoc> =
        args.input.iter().map(|p| io::read_summary_json(p)).collect::<Result<_>>()?;
    let model = docs[0].model.clone();
    if docs.iter().any(|d| d.model != model) {
        return Err(Error::Config("summaries come from different models".into()));
    }
    let blocks = docs.iter().map(|d| d.to_block_summary()).collect::<Result<Vec<_>>>()?;
    let agg = combine(blocks)?;
    if let Some(parent) = args.output.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    io::write_aggregated_json(&args.output, &model, &agg)?;
    println!("wrote {}", args.output.display());
    Ok(())
}

fn parse_kind(s: &str) -> Result<ContourKind> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| Error::Config(format!("unknown contour kind {s:?}")))
}

fn bounded_grid(model: &ModelSpec, q: usize, center: f64, info_qq: f64) -> Vec<f64> {
    let (lo, hi) = model.bounds()[q];
    default_scalar_grid(center, info_qq)
        .into_iter()
        .filter(|&x| x > lo && x < hi)
        .collect()
}

fn coord_index(model: &ModelSpec, name: &str) -> Result<usize> {
    model
        .coord_names()
        .iter()
        .position(|n| *n == name)
        .ok_or_else(|| Error::Config(format!("unknown coordinate {name:?}")))
}

fn cmd_contour(args: ContourArgs) -> Result<()> {
    let doc = io::read_aggregated_json(&args.aggregated)?;
    let model = doc.model.clone();
    let agg = doc.to_aggregated()?;
    let kind = parse_kind(&args.kind)?;
    let p = agg.dim();
    let anchor = agg.theta_check.clone();

    let grid_for = |q: usize| -> Vec<f64> {
        let mut g = bounded_grid(&model, q, agg.theta_check.0[q], agg.total_info[(q, q)]);
        if args.grid_points != 201 && !g.is_empty() {
            let lo = g[0];
            let hi = g[g.len() - 1];
            let n = args.grid_points.max(2);
            g = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        }
        g
    };

    let write = |stem: &Path, contour: &Contour| -> Result<()> {
        if let Some(parent) = stem.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        io::write_contour(stem, &model, contour, Some(args.seed))?;
        println!("wrote {}.csv and {}.json", stem.display(), stem.display());
        Ok(())
    };

    let coords: Vec<usize> = match &args.coordinate {
        Some(name) => vec![coord_index(&model, name)?],
        None => (0..p).collect(),
    };

    match kind {
        ContourKind::ProfileMarginal => {
            // One validification sample serves every coordinate.
            let mut rng = derive(args.seed, &[tags::VALIDIFY]);
            let sample = simulate_validation_sample(
                &model,
                &agg.block_sizes(),
                args.m,
                &anchor,
                false,
                &mut rng,
            )?;
            for q in coords {
                let c = profile_contour_from_table(
                    &agg,
                    q,
                    grid_for(q),
                    args.m,
                    anchor.clone(),
                    sample.profile_table(q),
                )?;
                let stem = stem_for(&args.output, &model, p, q);
                write(&stem, &c)?;
            }
        }
        ContourKind::LargeN if p > 1 => {
            for q in coords {
                let c = large_n_marginal_contour_grid(&agg, q, grid_for(q))?;
                let stem = stem_for(&args.output, &model, p, q);
                write(&stem, &c)?;
            }
        }
        _ if p > 1 => {
            return Err(Error::Config(format!(
                "kind {} needs a scalar parameter; use profile_marginal or large_n for marginals",
                kind.label()
            )));
        }
        ContourKind::LargeN => {
            let c = large_n_contour_grid(&agg, Grid::Scalar(grid_for(0)))?;
            write(&args.output, &c)?;
        }
        ContourKind::ValidAnchored => {
            let mut rng = derive(args.seed, &[tags::VALIDIFY]);
            let c = valid_contour_anchored(
                &model,
                &agg,
                Grid::Scalar(grid_for(0)),
                args.m,
                &anchor,
                &mut rng,
            )?;
            write(&args.output, &c)?;
        }
        ContourKind::ValidImportance => {
            let mut rng = derive(args.seed, &[tags::VALIDIFY]);
            let density_model = model.clone();
            let c = valid_contour_importance(
                &model,
                &agg,
                Grid::Scalar(grid_for(0)),
                args.m,
                &anchor,
                move |theta, blocks| summary_log_density(&density_model, theta, blocks),
                &mut rng,
            )?;
            write(&args.output, &c)?;
        }
        ContourKind::OracleFullData | ContourKind::ExponentialClosedForm => {
            if kind == ContourKind::ExponentialClosedForm
                && !matches!(model, ModelSpec::Exponential)
            {
                return Err(Error::Config(
                    "exponential_closed_form requires the exponential model".into(),
                ));
            }
            let c = oracle_contour_grid(&model, &agg, Grid::Scalar(grid_for(0)), kind)?;
            write(&args.output, &c)?;
        }
    }
    Ok(())
}

fn stem_for(base: &Path, model: &ModelSpec, p: usize, q: usize) -> PathBuf {
    if p == 1 {
        base.to_path_buf()
    } else {
        let name = model.coord_names()[q];
        let stem = base.file_name().and_then(|s| s.to_str()).unwrap_or("contour");
        base.with_file_name(format!("{stem}_{name}"))
    }
}

fn cmd_ci(args: CiArgs) -> Result<()> {
    let contour = io::read_contour(&args.contour)?;
    let sidecar: io::ContourSidecar = serde_json::from_str(&std::fs::read_to_string(
        args.contour.with_extension("json"),
    )?)?;
    let model = sidecar
        .model
        .ok_or_else(|| Error::Config("contour sidecar is missing the model".into()))?;
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Error::Config(format!("alpha must be in (0,1), got {}", args.alpha)));
    }
    let region = level_set(&contour, args.alpha)?;
    if let Some(parent) = args.output.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    io::write_region_json(&args.output, &model, &region)?;
    io::write_region_csv(&args.output.with_extension("csv"), &model, &region)?;
    if region.is_empty {
        println!("region is empty at alpha = {}", args.alpha);
    }
    println!("wrote {}", args.output.display());
    Ok(())
}

struct LoadedExperiment {
    config: ExperimentConfig,
    config_text: String,
    out_dir: PathBuf,
    workers: Option<usize>,
}

fn load_experiment(args: &ExperimentArgs) -> Result<LoadedExperiment> {
    let config_text = std::fs::read_to_string(&args.config)?;
    let mut config = ExperimentConfig::from_toml_str(&config_text)?;
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    let out_dir = args
        .output
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&config.name));
    std::fs::create_dir_all(&out_dir)?;
    Ok(LoadedExperiment {
        config,
        config_text,
        out_dir,
        workers: Some(args.workers.unwrap_or_else(default_workers)),
    })
}

fn write_meta(
    path: &Path,
    exp: &LoadedExperiment,
    extra: serde_json::Value,
) -> Result<()> {
    let prov = io::provenance(&exp.config_text, exp.config.master_seed);
    let meta = serde_json::json!({
        "experiment": exp.config.name,
        "provenance": {
            "config_sha256": prov.config_sha256,
            "master_seed": prov.master_seed,
            "git_describe": prov.git_describe,
        },
        "details": extra,
    });
    std::fs::write(path, serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

fn cmd_coverage(args: ExperimentArgs) -> Result<()> {
    let exp = load_experiment(&args)?;
    let output = run_experiment(&exp.config, exp.workers)?;
    let csv_path = exp.out_dir.join("coverage.csv");
    std::fs::write(&csv_path, output.table.to_csv(&exp.config.model))?;
    write_meta(
        &exp.out_dir.join("coverage_meta.json"),
        &exp,
        serde_json::json!({
            "n_reps": output.table.n_reps,
            "skipped_replicates": output.table.skipped_replicates,
            "used_replicates": output.table.used_replicates(),
        }),
    )?;
    println!("wrote {}", csv_path.display());
    Ok(())
}

fn cmd_ecdf(args: ExperimentArgs) -> Result<()> {
    let exp = load_experiment(&args)?;
    let output = run_experiment(&exp.config, exp.workers)?;
    let mut csv = String::from("contour,coordinate,value\n");
    let names = exp.config.model.coord_names();
    let mut dkw = serde_json::Map::new();
    for row in &output.ecdf {
        let coord = match row.coord {
            dnc_im::harness::CoordKey::Joint => {
                if names.len() == 1 {
                    names[0].to_string()
                } else {
                    "joint".to_string()
                }
            }
            dnc_im::harness::CoordKey::Coord(q) => names[q].to_string(),
        };
        for v in &row.sorted_values {
            csv.push_str(&format!("{},{},{v}\n", row.kind.label(), coord));
        }
        dkw.insert(
            format!("{}:{}", row.kind.label(), coord),
            serde_json::json!(row.dkw_violation),
        );
    }
    let csv_path = exp.out_dir.join("ecdf.csv");
    std::fs::write(&csv_path, csv)?;
    write_meta(
        &exp.out_dir.join("ecdf_meta.json"),
        &exp,
        serde_json::json!({
            "dkw_violation": dkw,
            "skipped_replicates": output.table.skipped_replicates,
        }),
    )?;
    println!("wrote {}", csv_path.display());
    Ok(())
}

fn cmd_merge(args: ExperimentArgs) -> Result<()> {
    let exp = load_experiment(&args)?;
    let rows = run_merging_check(&exp.config)?;
    let mut csv = String::from("n,sup_valid_vs_large_n,sup_large_n_vs_full_data\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{:.6},{:.6}\n",
            r.n, r.sup_valid_vs_large_n, r.sup_large_n_vs_full_data
        ));
    }
    let csv_path = exp.out_dir.join("merge.csv");
    std::fs::write(&csv_path, csv)?;
    write_meta(&exp.out_dir.join("merge_meta.json"), &exp, serde_json::json!({}))?;
    println!("wrote {}", csv_path.display());
    Ok(())
}
