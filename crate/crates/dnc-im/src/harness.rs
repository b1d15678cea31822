//! Configuration-driven experiment harness: coverage tables, validity
//! ECDFs, and large-sample merging checks, all reproducible from a master
//! seed and parallelized over replicates with derived random substreams.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Deserialize;

use crate::contours::{table_exceedance, table_level_radius, ContourKind};
use crate::error::{Error, Result};
use crate::models::{self, ModelSpec, ParameterVector};
use crate::rng::{derive, tags};
use crate::specfun::{chisq_cdf, chisq_quantile};
use crate::stats;
use crate::summaries::{self, combine, partition_with_sizes, summarize_block};

/// Block layout: either a count (near-equal split) or explicit sizes.
#[derive(Clone, Debug)]
pub struct BlockPlan {
    pub count: usize,
    pub sizes: Option<Vec<usize>>,
}

impl BlockPlan {
    pub fn resolve(&self, n: usize) -> Result<Vec<usize>> {
        match &self.sizes {
            Some(sizes) => {
                if sizes.len() != self.count {
                    return Err(Error::Config(format!(
                        "block_sizes has {} entries but block_count is {}",
                        sizes.len(),
                        self.count
                    )));
                }
                if sizes.iter().sum::<usize>() != n {
                    return Err(Error::Config(format!(
                        "block_sizes sum to {} but n = {n}",
                        sizes.iter().sum::<usize>()
                    )));
                }
                Ok(sizes.clone())
            }
            None => {
                if self.count == 0 || self.count > n {
                    return Err(Error::Config(format!(
                        "cannot split n = {n} into {} blocks",
                        self.count
                    )));
                }
                let base = n / self.count;
                let rem = n % self.count;
                Ok((0..self.count)
                    .map(|i| if i >= self.count - rem { base + 1 } else { base })
                    .collect())
            }
        }
    }
}

/// Full description of a simulation experiment.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub name: String,
    pub model: ModelSpec,
    pub truth: ParameterVector,
    pub n: usize,
    pub blocks: BlockPlan,
    pub m: usize,
    pub n_reps: usize,
    pub alphas: Vec<f64>,
    pub contour_kinds: Vec<ContourKind>,
    pub master_seed: u64,
    pub output_dir: Option<PathBuf>,
    /// Sample-size schedule for the merging check.
    pub n_schedule: Vec<usize>,
}

#[derive(Deserialize)]
struct ExperimentSection {
    name: String,
    n: usize,
    n_reps: usize,
    m: usize,
    master_seed: u64,
    alphas: Vec<f64>,
    contour_kinds: Vec<ContourKind>,
    block_count: usize,
    block_sizes: Option<Vec<usize>>,
    output_dir: Option<String>,
    n_schedule: Option<Vec<usize>>,
}

#[derive(Deserialize)]
struct ConfigDoc {
    experiment: ExperimentSection,
    model: ModelSpec,
    truth: BTreeMap<String, f64>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let doc: ConfigDoc =
            toml::from_str(text).map_err(|e| Error::Config(format!("TOML parse error: {e}")))?;
        let mut truth = Vec::with_capacity(doc.model.dim());
        for name in doc.model.coord_names() {
            let v = doc.truth.get(*name).ok_or_else(|| {
                Error::Config(format!("[truth] is missing coordinate {name:?}"))
            })?;
            truth.push(*v);
        }
        let e = doc.experiment;
        let config = ExperimentConfig {
            name: e.name,
            model: doc.model,
            truth: ParameterVector::new(truth),
            n: e.n,
            blocks: BlockPlan { count: e.block_count, sizes: e.block_sizes },
            m: e.m,
            n_reps: e.n_reps,
            alphas: e.alphas,
            contour_kinds: e.contour_kinds,
            master_seed: e.master_seed,
            output_dir: e.output_dir.map(PathBuf::from),
            n_schedule: e.n_schedule.unwrap_or_default(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.model
            .validate_theta(&self.truth)
            .map_err(|e| Error::Config(format!("truth out of bounds: {e}")))?;
        if self.contour_kinds.is_empty() {
            return Err(Error::Config("contour_kinds must be non-empty".into()));
        }
        if self.alphas.is_empty()
            || self.alphas.windows(2).any(|w| w[0] >= w[1])
            || self.alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0))
        {
            return Err(Error::Config(
                "alphas must be strictly ascending and inside (0,1)".into(),
            ));
        }
        if self.m == 0 || self.n_reps == 0 {
            return Err(Error::Config("m and n_reps must be positive".into()));
        }
        self.blocks.resolve(self.n)?;
        row_plan(&self.model, &self.contour_kinds)?;
        Ok(())
    }
}

/// Table rows are keyed by contour kind and coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum CoordKey {
    Joint,
    Coord(usize),
}

#[derive(Clone, Debug)]
pub struct CoverageRow {
    pub kind: ContourKind,
    pub coord: CoordKey,
    /// Empirical coverage (percent), one per nominal level.
    pub coverage_pct: Vec<f64>,
    /// Average interval length x 100, where an interval is defined.
    pub avg_length_x100: Vec<Option<f64>>,
}

#[derive(Clone, Debug)]
pub struct CoverageTable {
    /// Nominal levels 100 (1 - alpha), ascending (alphas descending).
    pub nominal_pct: Vec<f64>,
    pub rows: Vec<CoverageRow>,
    pub n_reps: usize,
    pub skipped_replicates: usize,
}

impl CoverageTable {
    pub fn used_replicates(&self) -> usize {
        self.n_reps - self.skipped_replicates
    }

    /// Fixed-column-order CSV: contour, coordinate, metric, then one column
    /// per nominal level.
    pub fn to_csv(&self, model: &ModelSpec) -> String {
        let mut out = String::from("contour,coordinate,metric");
        for nominal in &self.nominal_pct {
            out.push_str(&format!(",c{}", nominal.round() as u64));
        }
        out.push('\n');
        for row in &self.rows {
            let coord = coord_label(model, row.coord);
            out.push_str(&format!("{},{},coverage_pct", row.kind.label(), coord));
            for v in &row.coverage_pct {
                out.push_str(&format!(",{v:.4}"));
            }
            out.push('\n');
            if row.avg_length_x100.iter().any(|v| v.is_some()) {
                out.push_str(&format!("{},{},avg_length_x100", row.kind.label(), coord));
                for v in &row.avg_length_x100 {
                    match v {
                        Some(v) => out.push_str(&format!(",{v:.4}")),
                        None => out.push(','),
                    }
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn row(&self, kind: ContourKind, coord: CoordKey) -> Option<&CoverageRow> {
        self.rows.iter().find(|r| r.kind == kind && r.coord == coord)
    }
}

fn coord_label(model: &ModelSpec, coord: CoordKey) -> String {
    match coord {
        CoordKey::Joint => {
            if model.dim() == 1 {
                model.coord_names()[0].to_string()
            } else {
                "joint".to_string()
            }
        }
        CoordKey::Coord(q) => model.coord_names()[q].to_string(),
    }
}

/// Sorted contour-at-truth samples for one table row, with the one-sided
/// DKW violation statistic.
#[derive(Clone, Debug)]
pub struct EcdfRow {
    pub kind: ContourKind,
    pub coord: CoordKey,
    pub sorted_values: Vec<f64>,
    pub dkw_violation: f64,
}

pub struct ExperimentOutput {
    pub table: CoverageTable,
    pub ecdf: Vec<EcdfRow>,
}

/// Coverage experiment: per replicate, sample at the truth, partition,
/// summarize (skipping the replicate when a block summary fails), combine,
/// build the requested contours anchored at the combined estimate, extract
/// level sets at each alpha, and record containment of the truth and
/// interval lengths. Deterministic given the master seed.
pub fn run_coverage(config: &ExperimentConfig, workers: Option<usize>) -> Result<CoverageTable> {
    Ok(run_experiment(config, workers)?.table)
}

/// Validity experiment: the sorted per-replicate contour values at the
/// truth, for ECDF plots and the DKW diagnostic.
pub fn run_validity_ecdf(config: &ExperimentConfig, workers: Option<usize>) -> Result<Vec<EcdfRow>> {
    Ok(run_experiment(config, workers)?.ecdf)
}

#[derive(Clone)]
struct RowSpec {
    kind: ContourKind,
    coord: CoordKey,
}

fn row_plan(model: &ModelSpec, kinds: &[ContourKind]) -> Result<Vec<RowSpec>> {
    let p = model.dim();
    let scalar_exact = matches!(
        model,
        ModelSpec::GaussianKnownVar { .. } | ModelSpec::Exponential
    );
    let mut plan = Vec::new();
    for &kind in kinds {
        match kind {
            ContourKind::LargeN => {
                plan.push(RowSpec { kind, coord: CoordKey::Joint });
                if p > 1 {
                    for q in 0..p {
                        plan.push(RowSpec { kind, coord: CoordKey::Coord(q) });
                    }
                }
            }
            ContourKind::ValidAnchored => {
                plan.push(RowSpec { kind, coord: CoordKey::Joint });
            }
            ContourKind::ProfileMarginal => {
                for q in 0..p {
                    plan.push(RowSpec { kind, coord: CoordKey::Coord(q) });
                }
            }
            ContourKind::ValidImportance => {
                if !scalar_exact {
                    return Err(Error::UnsupportedModel(
                        "valid_importance requires a known summary density (gaussian_known_var or exponential)".into(),
                    ));
                }
                plan.push(RowSpec { kind, coord: CoordKey::Joint });
            }
            ContourKind::OracleFullData | ContourKind::ExponentialClosedForm => {
                if !scalar_exact {
                    return Err(Error::UnsupportedModel(
                        "full-data oracle contours require gaussian_known_var or exponential".into(),
                    ));
                }
                if kind == ContourKind::ExponentialClosedForm
                    && !matches!(model, ModelSpec::Exponential)
                {
                    return Err(Error::UnsupportedModel(
                        "exponential_closed_form requires the exponential model".into(),
                    ));
                }
                plan.push(RowSpec { kind, coord: CoordKey::Joint });
            }
        }
    }
    Ok(plan)
}

struct RowOutcome {
    pi_truth: f64,
    covered: Vec<bool>,
    length: Vec<Option<f64>>,
}

enum RepResult {
    Done(Vec<RowOutcome>),
    Skipped,
}

pub fn run_experiment(
    config: &ExperimentConfig,
    workers: Option<usize>,
) -> Result<ExperimentOutput> {
    config.validate()?;
    let sizes = config.blocks.resolve(config.n)?;
    let plan = row_plan(&config.model, &config.contour_kinds)?;
    // Alphas descending so the nominal levels 100(1 - alpha) ascend.
    let alphas: Vec<f64> = config.alphas.iter().rev().cloned().collect();
    let p = config.model.dim();
    let chi2_p: Vec<f64> =
        alphas.iter().map(|&a| chisq_quantile(p as u32, 1.0 - a)).collect::<Result<_>>()?;
    let chi2_1: Vec<f64> = if p > 1 {
        alphas.iter().map(|&a| chisq_quantile(1, 1.0 - a)).collect::<Result<_>>()?
    } else {
        chi2_p.clone()
    };

    let run_rep = |rep: usize| -> Result<RepResult> {
        replicate(config, &sizes, &plan, &alphas, &chi2_p, &chi2_1, rep)
    };

    let results: Vec<Result<RepResult>> = match workers {
        Some(1) => (0..config.n_reps).map(run_rep).collect(),
        _ => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers.unwrap_or_else(default_workers))
                .build()
                .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
            pool.install(|| (0..config.n_reps).into_par_iter().map(run_rep).collect())
        }
    };

    let mut skipped = 0usize;
    let mut used = 0usize;
    let n_alpha = alphas.len();
    let mut cover_counts = vec![vec![0usize; n_alpha]; plan.len()];
    let mut length_sums = vec![vec![0.0f64; n_alpha]; plan.len()];
    let mut length_counts = vec![vec![0usize; n_alpha]; plan.len()];
    let mut pi_samples: Vec<Vec<f64>> = vec![Vec::new(); plan.len()];

    for res in results {
        match res? {
            RepResult::Skipped => skipped += 1,
            RepResult::Done(rows) => {
                used += 1;
                for (i, row) in rows.iter().enumerate() {
                    pi_samples[i].push(row.pi_truth);
                    for a in 0..n_alpha {
                        if row.covered[a] {
                            cover_counts[i][a] += 1;
                        }
                        if let Some(len) = row.length[a] {
                            length_sums[i][a] += len;
                            length_counts[i][a] += 1;
                        }
                    }
                }
            }
        }
    }
    if used == 0 {
        return Err(Error::Config("all replicates were skipped".into()));
    }

    let nominal_pct: Vec<f64> =
        alphas.iter().map(|a| (100.0 * (1.0 - a) * 1e6).round() / 1e6).collect();
    let mut rows = Vec::with_capacity(plan.len());
    let mut ecdf = Vec::with_capacity(plan.len());
    for (i, spec) in plan.iter().enumerate() {
        let coverage_pct: Vec<f64> =
            cover_counts[i].iter().map(|&c| 100.0 * c as f64 / used as f64).collect();
        let avg_length_x100: Vec<Option<f64>> = (0..n_alpha)
            .map(|a| {
                if length_counts[i][a] == used {
                    Some(100.0 * length_sums[i][a] / used as f64)
                } else {
                    None
                }
            })
            .collect();
        rows.push(CoverageRow {
            kind: spec.kind,
            coord: spec.coord,
            coverage_pct,
            avg_length_x100,
        });
        let sorted_values = stats::sorted(&pi_samples[i]);
        let dkw = stats::dkw_violation(&sorted_values);
        ecdf.push(EcdfRow { kind: spec.kind, coord: spec.coord, sorted_values, dkw_violation: dkw });
    }

    Ok(ExperimentOutput {
        table: CoverageTable {
            nominal_pct,
            rows,
            n_reps: config.n_reps,
            skipped_replicates: skipped,
        },
        ecdf,
    })
}

pub fn default_workers() -> usize {
    std::env::var("DNC_IM_WORKERS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        })
}

fn is_summary_failure(err: &Error) -> bool {
    matches!(
        err,
        Error::OptimFailure { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::NonMonotoneQuantile(_)
            | Error::QuadratureFailure(_)
            | Error::SingularInformation { .. }
    )
}

#[allow(clippy::too_many_arguments)]
fn replicate(
    config: &ExperimentConfig,
    sizes: &[usize],
    plan: &[RowSpec],
    alphas: &[f64],
    chi2_p: &[f64],
    chi2_1: &[f64],
    rep: usize,
) -> Result<RepResult> {
    let seed = config.master_seed;
    let model = &config.model;
    let p = model.dim();

    let data = {
        let mut rng = derive(seed, &[tags::REPLICATE, rep as u64, tags::DATA]);
        models::sample(model, &config.truth, config.n, &mut rng)?
    };
    let blocks = {
        let mut rng = derive(seed, &[tags::REPLICATE, rep as u64, tags::PARTITION]);
        partition_with_sizes(&data, sizes, &mut rng)?
    };
    let mut summaries_vec = Vec::with_capacity(blocks.len());
    for block in &blocks {
        match summarize_block(model, block) {
            Ok(s) => summaries_vec.push(s),
            Err(e) if is_summary_failure(&e) => return Ok(RepResult::Skipped),
            Err(e) => return Err(e),
        }
    }
    let agg = match combine(summaries_vec) {
        Ok(a) => a,
        Err(e) if is_summary_failure(&e) => return Ok(RepResult::Skipped),
        Err(e) => return Err(e),
    };
    let anchor = agg.theta_check.clone();

    let needs_mc = plan.iter().any(|r| {
        matches!(
            r.kind,
            ContourKind::ValidAnchored | ContourKind::ProfileMarginal | ContourKind::ValidImportance
        )
    });
    let keep_blocks = plan.iter().any(|r| r.kind == ContourKind::ValidImportance);
    let sample = if needs_mc {
        let mut rng = derive(seed, &[tags::REPLICATE, rep as u64, tags::VALIDIFY]);
        Some(crate::contours::simulate_validation_sample(
            model,
            sizes,
            config.m,
            &anchor,
            keep_blocks,
            &mut rng,
        )?)
    } else {
        None
    };

    let anchored_table = if plan.iter().any(|r| r.kind == ContourKind::ValidAnchored) {
        sample.as_ref().map(|s| s.anchored_table())
    } else {
        None
    };
    let profile_tables: BTreeMap<usize, Vec<f64>> = plan
        .iter()
        .filter(|r| r.kind == ContourKind::ProfileMarginal)
        .filter_map(|r| match r.coord {
            CoordKey::Coord(q) => {
                sample.as_ref().map(|s| (q, s.profile_table(q)))
            }
            CoordKey::Joint => None,
        })
        .collect();

    let quad_truth = summaries::working_quadratic(&agg, &config.truth)?;
    let truth = config.truth.as_slice();
    let theta_check = agg.theta_check.as_slice();

    let mut rows = Vec::with_capacity(plan.len());
    for spec in plan {
        let outcome = match (spec.kind, spec.coord) {
            (ContourKind::LargeN, CoordKey::Joint) => {
                let pi = 1.0 - chisq_cdf(p as u32, quad_truth)?;
                let covered: Vec<bool> = chi2_p.iter().map(|&q| quad_truth <= q).collect();
                let length = if p == 1 {
                    let j = agg.total_info[(0, 0)];
                    chi2_p.iter().map(|&q| Some(2.0 * (q / j).sqrt())).collect()
                } else {
                    vec![None; alphas.len()]
                };
                RowOutcome { pi_truth: pi, covered, length }
            }
            (ContourKind::LargeN, CoordKey::Coord(q)) => {
                let jqq = agg.total_info[(q, q)];
                let dq = (theta_check[q] - truth[q]).powi(2) * jqq;
                let pi = 1.0 - chisq_cdf(1, dq)?;
                let covered: Vec<bool> = chi2_1.iter().map(|&c| dq <= c).collect();
                let length = chi2_1.iter().map(|&c| Some(2.0 * (c / jqq).sqrt())).collect();
                RowOutcome { pi_truth: pi, covered, length }
            }
            (ContourKind::ValidAnchored, _) => {
                let table = anchored_table.as_ref().expect("anchored table");
                let pi = table_exceedance(table, quad_truth);
                let mut covered = Vec::with_capacity(alphas.len());
                let mut length = Vec::with_capacity(alphas.len());
                for &a in alphas {
                    match table_level_radius(table, a) {
                        Some(q_star) => {
                            covered.push(quad_truth <= q_star);
                            length.push(if p == 1 {
                                Some(2.0 * (q_star / agg.total_info[(0, 0)]).sqrt())
                            } else {
                                None
                            });
                        }
                        None => {
                            covered.push(false);
                            length.push(if p == 1 { Some(0.0) } else { None });
                        }
                    }
                }
                RowOutcome { pi_truth: pi, covered, length }
            }
            (ContourKind::ProfileMarginal, CoordKey::Coord(q)) => {
                let table = &profile_tables[&q];
                let jqq = agg.total_info[(q, q)];
                let dq = (theta_check[q] - truth[q]).powi(2) * jqq;
                let pi = table_exceedance(table, dq);
                let mut covered = Vec::with_capacity(alphas.len());
                let mut length = Vec::with_capacity(alphas.len());
                for &a in alphas {
                    match table_level_radius(table, a) {
                        Some(q_star) => {
                            covered.push(dq <= q_star);
                            length.push(Some(2.0 * (q_star / jqq).sqrt()));
                        }
                        None => {
                            covered.push(false);
                            length.push(Some(0.0));
                        }
                    }
                }
                RowOutcome { pi_truth: pi, covered, length }
            }
            (ContourKind::ValidImportance, _) => {
                let s = sample.as_ref().expect("validation sample");
                let blocks = s.blocks.as_ref().expect("blocks retained");
                let mut acc = 0.0;
                for (sim, blk) in s.sims.iter().zip(blocks) {
                    let q_sim =
                        summaries::quad_form(&sim.theta_check, &sim.total_info, &config.truth.0);
                    if q_sim >= quad_truth {
                        let num =
                            crate::contours::summary_log_density(model, &config.truth, blk)?;
                        let den = crate::contours::summary_log_density(model, &anchor, blk)?;
                        acc += (num - den).exp();
                    }
                }
                let pi = (acc / s.sims.len() as f64).min(1.0);
                let covered: Vec<bool> = alphas.iter().map(|&a| pi > a).collect();
                RowOutcome { pi_truth: pi, covered, length: vec![None; alphas.len()] }
            }
            (ContourKind::OracleFullData | ContourKind::ExponentialClosedForm, _) => {
                oracle_row(model, &agg, truth[0], alphas, chi2_1)?
            }
            (ContourKind::ProfileMarginal, CoordKey::Joint) => unreachable!("plan never emits this"),
        };
        rows.push(outcome);
    }
    Ok(RepResult::Done(rows))
}

/// Full-data oracle row for the closed-form families (scalar parameter).
fn oracle_row(
    model: &ModelSpec,
    agg: &summaries::AggregatedSummary,
    truth: f64,
    alphas: &[f64],
    chi2_1: &[f64],
) -> Result<RowOutcome> {
    match model {
        ModelSpec::GaussianKnownVar { .. } => {
            // The Gaussian full-data contour coincides with the large-n one.
            let j = agg.total_info[(0, 0)];
            let quad = (agg.theta_check.0[0] - truth).powi(2) * j;
            let pi = 1.0 - chisq_cdf(1, quad)?;
            let covered: Vec<bool> = chi2_1.iter().map(|&q| quad <= q).collect();
            let length = chi2_1.iter().map(|&q| Some(2.0 * (q / j).sqrt())).collect();
            Ok(RowOutcome { pi_truth: pi, covered, length })
        }
        ModelSpec::Exponential => {
            let blocks: Vec<(usize, f64)> =
                agg.blocks.iter().map(|b| (b.n_b, b.theta_hat.0[0])).collect();
            let pi = crate::contours::exp_full_contour(&blocks, truth)?;
            let n_total: usize = blocks.iter().map(|&(n, _)| n).sum();
            let weighted: f64 = blocks.iter().map(|&(n, h)| n as f64 / h).sum();
            let mode = n_total as f64 / weighted;
            let eval = |theta: f64| crate::contours::exp_full_contour(&blocks, theta);
            let mut covered = Vec::with_capacity(alphas.len());
            let mut length = Vec::with_capacity(alphas.len());
            for &a in alphas {
                covered.push(pi > a);
                let lo = bisect_contour(&eval, mode, a, false)?;
                let hi = bisect_contour(&eval, mode, a, true)?;
                length.push(Some(hi - lo));
            }
            Ok(RowOutcome { pi_truth: pi, covered, length })
        }
        _ => Err(Error::UnsupportedModel("oracle row requires a closed-form family".into())),
    }
}

/// Find the point where a unimodal scalar contour crosses `alpha` on one
/// side of its mode (the mode sits at contour value 1 > alpha).
fn bisect_contour(
    eval: &dyn Fn(f64) -> Result<f64>,
    mode: f64,
    alpha: f64,
    upper: bool,
) -> Result<f64> {
    let mut step = mode.abs().max(1e-6) * 0.5;
    let mut outside = mode;
    for _ in 0..200 {
        outside = if upper { mode + step } else { (mode - step).max(mode * 1e-9) };
        if eval(outside)? <= alpha {
            break;
        }
        step *= 2.0;
    }
    let mut a = mode;
    let mut b = outside;
    for _ in 0..80 {
        let mid = 0.5 * (a + b);
        if eval(mid)? > alpha {
            a = mid;
        } else {
            b = mid;
        }
        if (b - a).abs() <= 1e-10 * (1.0 + 0.5 * (a + b).abs()) {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

/// One merging-check result: sample size, sup discrepancy between the valid
/// and large-n contours, and between the large-n and full-data contours.
#[derive(Clone, Debug)]
pub struct MergeRow {
    pub n: usize,
    pub sup_valid_vs_large_n: f64,
    pub sup_large_n_vs_full_data: f64,
}

/// Merging check along the configured n schedule: at each n, one dataset is
/// drawn at the truth, summarized, and the three contours are compared on a
/// local grid theta_check +/- 4 / sqrt(J).
pub fn run_merging_check(config: &ExperimentConfig) -> Result<Vec<MergeRow>> {
    if !matches!(
        config.model,
        ModelSpec::GaussianKnownVar { .. } | ModelSpec::Exponential
    ) {
        return Err(Error::UnsupportedModel(
            "merging check requires gaussian_known_var or exponential".into(),
        ));
    }
    if config.n_schedule.is_empty() {
        return Err(Error::Config("merging check requires a non-empty n_schedule".into()));
    }
    let base_sizes = config.blocks.resolve(config.n)?;
    let mut rows = Vec::new();
    for (i, &n) in config.n_schedule.iter().enumerate() {
        if n % config.n != 0 {
            return Err(Error::Config(format!(
                "schedule entry {n} must be a multiple of the base n = {}",
                config.n
            )));
        }
        let scale = n / config.n;
        let sizes: Vec<usize> = base_sizes.iter().map(|&s| s * scale).collect();

        let data = {
            let mut rng = derive(config.master_seed, &[tags::MERGE, i as u64, tags::DATA]);
            models::sample(&config.model, &config.truth, n, &mut rng)?
        };
        let blocks = {
            let mut rng = derive(config.master_seed, &[tags::MERGE, i as u64, tags::PARTITION]);
            partition_with_sizes(&data, &sizes, &mut rng)?
        };
        let agg = combine(
            blocks
                .iter()
                .map(|b| summarize_block(&config.model, b))
                .collect::<Result<Vec<_>>>()?,
        )?;
        let anchor = agg.theta_check.clone();
        let sample = {
            let mut rng = derive(config.master_seed, &[tags::MERGE, i as u64, tags::VALIDIFY]);
            crate::contours::simulate_validation_sample(
                &config.model,
                &sizes,
                config.m,
                &anchor,
                false,
                &mut rng,
            )?
        };
        let table = sample.anchored_table();

        let center = agg.theta_check.0[0];
        let j = agg.total_info[(0, 0)];
        let half = 4.0 / j.sqrt();
        let exp_blocks: Vec<(usize, f64)> =
            agg.blocks.iter().map(|b| (b.n_b, b.theta_hat.0[0])).collect();
        let mut d_valid = 0.0f64;
        let mut d_oracle = 0.0f64;
        for k in 0..201 {
            let theta = center - half + k as f64 * half / 100.0;
            if matches!(config.model, ModelSpec::Exponential) && theta <= 0.0 {
                continue;
            }
            let quad = (center - theta).powi(2) * j;
            let valid = table_exceedance(&table, quad);
            let large_n = 1.0 - chisq_cdf(1, quad)?;
            let oracle = match &config.model {
                ModelSpec::Exponential => crate::contours::exp_full_contour(&exp_blocks, theta)?,
                _ => large_n,
            };
            d_valid = d_valid.max((valid - large_n).abs());
            d_oracle = d_oracle.max((large_n - oracle).abs());
        }
        rows.push(MergeRow {
            n,
            sup_valid_vs_large_n: d_valid,
            sup_large_n_vs_full_data: d_oracle,
        });
    }
    Ok(rows)
}
