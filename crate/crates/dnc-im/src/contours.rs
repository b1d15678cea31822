//! Possibility-contour constructions: the chi-square-calibrated large-n
//! contour, the anchored Monte Carlo valid contour and its
//! importance-sampling variant, profile marginal contours, the closed-form
//! Exponential contour through Lambert W and the incomplete gamma function,
//! and a full-data Monte Carlo oracle.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{self, Dataset, ModelSpec, ParameterVector};
use crate::specfun::{chisq_cdf, lambert_w, reg_gamma_upper, BranchId, NEG_INV_E};
use crate::summaries::{self, AggregatedSummary, BlockSummary};

/// Contour construction families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Hash, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum ContourKind {
    LargeN,
    ValidAnchored,
    ValidImportance,
    ProfileMarginal,
    OracleFullData,
    ExponentialClosedForm,
}

impl ContourKind {
    pub fn label(&self) -> &'static str {
        match self {
            ContourKind::LargeN => "large_n",
            ContourKind::ValidAnchored => "valid_anchored",
            ContourKind::ValidImportance => "valid_importance",
            ContourKind::ProfileMarginal => "profile_marginal",
            ContourKind::OracleFullData => "oracle_full_data",
            ContourKind::ExponentialClosedForm => "exponential_closed_form",
        }
    }
}

/// Evaluation grid: scalar for one-dimensional or marginal contours,
/// full parameter points otherwise.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Grid {
    Scalar(Vec<f64>),
    Points(Vec<Vec<f64>>),
}

impl Grid {
    pub fn len(&self) -> usize {
        match self {
            Grid::Scalar(v) => v.len(),
            Grid::Points(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub(crate) enum Evaluator {
    GridOnly,
    /// Monte Carlo step function of the working quadratic form.
    WorkingTable {
        center: DVector<f64>,
        info: DMatrix<f64>,
        coord: Option<usize>,
        table: Vec<f64>,
    },
    /// 1 - F_p of the working quadratic form.
    LargeN {
        center: DVector<f64>,
        info: DMatrix<f64>,
        coord: Option<usize>,
    },
    /// Closed-form Exponential full-data contour.
    ExpFull {
        n_total: usize,
        weighted_rate: f64,
    },
    /// Importance-weighted validification sample.
    Importance {
        sims: Vec<AggregatedSummary>,
        log_dens_anchor: Vec<f64>,
        center: DVector<f64>,
        info: DMatrix<f64>,
        density: Box<dyn Fn(&ParameterVector, &[BlockSummary]) -> Result<f64> + Send + Sync>,
    },
}

/// A grid-evaluated possibility contour with enough metadata to re-evaluate
/// it exactly at new parameter values (for the threshold-table and
/// closed-form kinds).
pub struct Contour {
    pub kind: ContourKind,
    pub grid: Grid,
    pub values: Vec<f64>,
    pub anchor: Option<ParameterVector>,
    pub m: Option<usize>,
    /// Sorted -2 log r thresholds (the working quadratic form of each
    /// validification replicate), for the Monte Carlo kinds.
    pub quadratic_threshold_table: Option<Vec<f64>>,
    /// Marginal coordinate index for profile contours.
    pub coord: Option<usize>,
    pub(crate) evaluator: Evaluator,
}

impl std::fmt::Debug for Contour {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Contour")
            .field("kind", &self.kind)
            .field("grid_len", &self.grid.len())
            .field("m", &self.m)
            .field("coord", &self.coord)
            .finish()
    }
}

/// Fraction of table entries (ascending) at or above q: the Monte Carlo
/// step contour as a function of the working quadratic form.
#[inline]
pub fn table_exceedance(table: &[f64], q: f64) -> f64 {
    let below = table.partition_point(|&t| t < q);
    (table.len() - below) as f64 / table.len() as f64
}

/// Largest quadratic threshold whose exceedance fraction stays above alpha,
/// i.e. the level-set radius of the step contour. None when the region is
/// empty at this alpha.
pub fn table_level_radius(table: &[f64], alpha: f64) -> Option<f64> {
    let m = table.len();
    let k = (alpha * m as f64).floor() as usize + 1;
    if k > m {
        return None;
    }
    Some(table[m - k])
}

impl Contour {
    /// Exact re-evaluation at a full parameter point, for kinds that retain
    /// an evaluator; falls back to linear interpolation on scalar grids.
    pub fn evaluate(&self, theta: &[f64]) -> Result<f64> {
        match &self.evaluator {
            Evaluator::WorkingTable { center, info, coord, table } => {
                let q = eval_quad(center, info, *coord, theta)?;
                Ok(table_exceedance(table, q))
            }
            Evaluator::LargeN { center, info, coord } => {
                let q = eval_quad(center, info, *coord, theta)?;
                let df = if coord.is_some() { 1 } else { center.len() as u32 };
                Ok(1.0 - chisq_cdf(df, q)?)
            }
            Evaluator::ExpFull { n_total, weighted_rate } => {
                if theta.len() != 1 {
                    return Err(Error::DimensionMismatch { expected: 1, got: theta.len() });
                }
                if theta[0] <= 0.0 {
                    return Ok(0.0);
                }
                exp_contour_core(*n_total, theta[0] * weighted_rate)
            }
            Evaluator::Importance { sims, log_dens_anchor, center, info, density, .. } => {
                let tv = ParameterVector::from_slice(theta);
                let q_obs = eval_quad(center, info, None, theta)?;
                let mut acc = 0.0;
                for (sim, ld_anchor) in sims.iter().zip(log_dens_anchor) {
                    let q_sim = summaries::quad_form(&sim.theta_check.0, &sim.total_info, &tv.0);
                    if q_sim >= q_obs {
                        acc += (density(&tv, &sim.blocks)? - ld_anchor).exp();
                    }
                }
                Ok((acc / sims.len() as f64).min(1.0))
            }
            Evaluator::GridOnly => match &self.grid {
                Grid::Scalar(xs) if theta.len() == 1 => Ok(interp_scalar(xs, &self.values, theta[0])),
                _ => Err(Error::Domain(
                    "contour has no evaluator; only scalar-grid interpolation is available".into(),
                )),
            },
        }
    }

    pub fn evaluate_scalar(&self, x: f64) -> Result<f64> {
        self.evaluate(&[x])
    }

    /// Supremum of the contour over its representation. The working and
    /// closed-form kinds attain exactly 1 at their center/mode.
    pub fn max_value(&self) -> f64 {
        match &self.evaluator {
            Evaluator::GridOnly => self.values.iter().cloned().fold(0.0, f64::max),
            _ => 1.0,
        }
    }

    pub(crate) fn working_ref(&self) -> Option<(&DVector<f64>, &DMatrix<f64>, Option<usize>)> {
        match &self.evaluator {
            Evaluator::WorkingTable { center, info, coord, .. } => Some((center, info, *coord)),
            Evaluator::LargeN { center, info, coord } => Some((center, info, *coord)),
            Evaluator::Importance { center, info, .. } => Some((center, info, None)),
            _ => None,
        }
    }

    /// Pieces recorded in the serialization sidecar: the working center and
    /// information (empty when absent) and the closed-form Exponential
    /// statistics when present.
    pub(crate) fn serialization_parts(&self) -> (Vec<f64>, Vec<Vec<f64>>, Option<(usize, f64)>) {
        match &self.evaluator {
            Evaluator::WorkingTable { center, info, .. }
            | Evaluator::LargeN { center, info, .. }
            | Evaluator::Importance { center, info, .. } => (
                center.as_slice().to_vec(),
                (0..info.nrows())
                    .map(|i| (0..info.ncols()).map(|j| info[(i, j)]).collect())
                    .collect(),
                None,
            ),
            Evaluator::ExpFull { n_total, weighted_rate } => {
                (Vec::new(), Vec::new(), Some((*n_total, *weighted_rate)))
            }
            Evaluator::GridOnly => (Vec::new(), Vec::new(), None),
        }
    }
}

/// Rebuild an evaluable contour from its serialized sidecar pieces.
/// Importance contours lose their per-replicate machinery on disk and come
/// back grid-only.
pub fn rebuild_contour(
    sidecar: crate::io::ContourSidecar,
    grid: Grid,
    values: Vec<f64>,
) -> Result<Contour> {
    let center = DVector::from_column_slice(&sidecar.theta_check);
    let p = center.len();
    let info = if sidecar.total_info.len() == p && p > 0 {
        DMatrix::from_fn(p, p, |i, j| sidecar.total_info[i][j])
    } else {
        DMatrix::zeros(0, 0)
    };
    let evaluator = if let Some(table) = sidecar.quadratic_threshold_table.clone() {
        if p > 0 {
            Evaluator::WorkingTable { center, info, coord: sidecar.coord, table }
        } else {
            Evaluator::GridOnly
        }
    } else if let (Some(n_total), Some(weighted_rate)) =
        (sidecar.exp_n_total, sidecar.exp_weighted_rate)
    {
        Evaluator::ExpFull { n_total, weighted_rate }
    } else if matches!(sidecar.kind, ContourKind::LargeN | ContourKind::OracleFullData) && p > 0 {
        Evaluator::LargeN { center, info, coord: sidecar.coord }
    } else {
        Evaluator::GridOnly
    };
    let anchor = match (&sidecar.model, &sidecar.anchor) {
        (Some(model), Some(map)) => {
            let mut vals = Vec::with_capacity(model.dim());
            for name in model.coord_names() {
                vals.push(*map.get(*name).ok_or_else(|| {
                    Error::Config(format!("sidecar anchor missing coordinate {name:?}"))
                })?);
            }
            Some(ParameterVector::new(vals))
        }
        _ => None,
    };
    Ok(Contour {
        kind: sidecar.kind,
        grid,
        values,
        anchor,
        m: sidecar.m,
        quadratic_threshold_table: sidecar.quadratic_threshold_table,
        coord: sidecar.coord,
        evaluator,
    })
}

fn eval_quad(
    center: &DVector<f64>,
    info: &DMatrix<f64>,
    coord: Option<usize>,
    theta: &[f64],
) -> Result<f64> {
    match coord {
        Some(_) => {
            // Marginal evaluators store the scalar center and J_qq.
            if theta.len() != 1 {
                return Err(Error::DimensionMismatch { expected: 1, got: theta.len() });
            }
            let d = center[0] - theta[0];
            Ok(d * d * info[(0, 0)])
        }
        None => {
            if theta.len() != center.len() {
                return Err(Error::DimensionMismatch { expected: center.len(), got: theta.len() });
            }
            let tv = DVector::from_column_slice(theta);
            Ok(summaries::quad_form(center, info, &tv))
        }
    }
}

fn interp_scalar(xs: &[f64], values: &[f64], x: f64) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    if x <= xs[0] {
        return values[0];
    }
    if x >= xs[xs.len() - 1] {
        return values[values.len() - 1];
    }
    let i = xs.partition_point(|&v| v <= x);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let w = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
    values[i - 1] * (1.0 - w) + values[i] * w
}

/// Default 201-point grid spanning center +/- 6 / sqrt(J_qq).
pub fn default_scalar_grid(center: f64, info_qq: f64) -> Vec<f64> {
    let half = 6.0 / info_qq.sqrt();
    (0..201).map(|i| center - half + i as f64 * half / 100.0).collect()
}

/// Large-n contour at one point: 1 - F_p of the working quadratic form.
pub fn large_n_contour(agg: &AggregatedSummary, theta: &ParameterVector) -> Result<f64> {
    let q = summaries::working_quadratic(agg, theta)?;
    Ok(1.0 - chisq_cdf(agg.dim() as u32, q)?)
}

/// Large-n contour over a grid, retaining the quadratic evaluator.
pub fn large_n_contour_grid(agg: &AggregatedSummary, grid: Grid) -> Result<Contour> {
    let values = grid_map(&grid, |theta| {
        large_n_contour(agg, &ParameterVector::from_slice(theta))
    })?;
    Ok(Contour {
        kind: ContourKind::LargeN,
        grid,
        values,
        anchor: None,
        m: None,
        quadratic_threshold_table: None,
        coord: None,
        evaluator: Evaluator::LargeN {
            center: agg.theta_check.0.clone(),
            info: agg.total_info.clone(),
            coord: None,
        },
    })
}

fn grid_map(grid: &Grid, mut f: impl FnMut(&[f64]) -> Result<f64>) -> Result<Vec<f64>> {
    match grid {
        Grid::Scalar(xs) => xs.iter().map(|&x| f(&[x])).collect(),
        Grid::Points(pts) => pts.iter().map(|p| f(p)).collect(),
    }
}

/// Marginal large-n contour for coordinate q: 1 - F_1 of the profiled
/// working quadratic form.
pub fn large_n_marginal_contour_grid(
    agg: &AggregatedSummary,
    q: usize,
    grid_q: Vec<f64>,
) -> Result<Contour> {
    if q >= agg.dim() {
        return Err(Error::DimensionMismatch { expected: agg.dim(), got: q });
    }
    let center = DVector::from_element(1, agg.theta_check.0[q]);
    let info = DMatrix::from_element(1, 1, agg.total_info[(q, q)]);
    let values: Vec<f64> = grid_q
        .iter()
        .map(|&x| {
            let d = center[0] - x;
            Ok(1.0 - chisq_cdf(1, d * d * info[(0, 0)])?)
        })
        .collect::<Result<_>>()?;
    Ok(Contour {
        kind: ContourKind::LargeN,
        grid: Grid::Scalar(grid_q),
        values,
        anchor: None,
        m: None,
        quadratic_threshold_table: None,
        coord: Some(q),
        evaluator: Evaluator::LargeN { center, info, coord: Some(q) },
    })
}

/// One simulated aggregated summary from the validification sample.
#[derive(Clone, Debug)]
pub struct SimulatedSummary {
    pub theta_check: DVector<f64>,
    pub total_info: DMatrix<f64>,
}

/// A Monte Carlo sample of aggregated summaries drawn at a single anchor.
pub struct ValidationSample {
    pub anchor: ParameterVector,
    pub block_sizes: Vec<usize>,
    pub sims: Vec<SimulatedSummary>,
    /// Block summaries per replicate, retained only when requested.
    pub blocks: Option<Vec<Vec<BlockSummary>>>,
    /// Number of failed block summaries that were re-drawn.
    pub redraws: usize,
}

impl ValidationSample {
    /// Sorted working quadratic forms of the replicates at the anchor.
    pub fn anchored_table(&self) -> Vec<f64> {
        let a = &self.anchor.0;
        let mut t: Vec<f64> = self
            .sims
            .iter()
            .map(|s| summaries::quad_form(&s.theta_check, &s.total_info, a))
            .collect();
        t.sort_by(|x, y| x.partial_cmp(y).unwrap());
        t
    }

    /// Sorted profiled quadratic forms (theta_check_q - anchor_q)^2 J_qq.
    pub fn profile_table(&self, q: usize) -> Vec<f64> {
        let aq = self.anchor.0[q];
        let mut t: Vec<f64> = self
            .sims
            .iter()
            .map(|s| {
                let d = s.theta_check[q] - aq;
                d * d * s.total_info[(q, q)]
            })
            .collect();
        t.sort_by(|x, y| x.partial_cmp(y).unwrap());
        t
    }
}

/// Draw M aggregated summaries under the posited model at the anchor.
/// Failed block summaries are re-drawn, with a total re-draw cap of 10 M.
pub fn simulate_validation_sample<R: Rng + ?Sized>(
    model: &ModelSpec,
    block_sizes: &[usize],
    m: usize,
    anchor: &ParameterVector,
    keep_blocks: bool,
    rng: &mut R,
) -> Result<ValidationSample> {
    model.validate_theta(anchor)?;
    if m == 0 {
        return Err(Error::Domain("validification requires M >= 1".into()));
    }
    let p = model.dim();
    let budget = 10 * m;
    let mut redraws = 0usize;
    let mut sims = Vec::with_capacity(m);
    let mut all_blocks = if keep_blocks { Some(Vec::with_capacity(m)) } else { None };

    let mut spend = |redraws: &mut usize| -> Result<()> {
        *redraws += 1;
        if *redraws > budget {
            return Err(Error::SimulationBudgetExceeded { attempts: m + *redraws, target: m });
        }
        Ok(())
    };

    for _ in 0..m {
        // Failed block summaries are re-drawn one block at a time; a
        // replicate whose combined information is singular is re-drawn
        // whole. Both count against the shared budget.
        'replicate: loop {
            let mut blocks: Vec<BlockSummary> = Vec::with_capacity(block_sizes.len());
            for &n_b in block_sizes {
                loop {
                    let data = models::sample(model, anchor, n_b, rng)?;
                    match summaries::summarize_block(model, &data) {
                        Ok(s) => {
                            blocks.push(s);
                            break;
                        }
                        Err(Error::Domain(e)) => return Err(Error::Domain(e)),
                        Err(_) => spend(&mut redraws)?,
                    }
                }
            }
            match summaries::combine_stats(blocks.iter().map(|b| (&b.theta_hat.0, &b.info)), p) {
                Ok((theta_check, total_info)) => {
                    sims.push(SimulatedSummary { theta_check, total_info });
                    if let Some(v) = all_blocks.as_mut() {
                        v.push(blocks);
                    }
                    break 'replicate;
                }
                Err(Error::SingularInformation { .. }) => spend(&mut redraws)?,
                Err(e) => return Err(e),
            }
        }
    }
    Ok(ValidationSample {
        anchor: anchor.clone(),
        block_sizes: block_sizes.to_vec(),
        sims,
        blocks: all_blocks,
        redraws,
    })
}

/// Anchored Monte Carlo valid contour: simulate M summaries at the anchor,
/// rank by the working relative likelihood at the anchor, and validify the
/// observed working likelihood against the resulting threshold table. Ties
/// count toward the contour.
pub fn valid_contour_anchored<R: Rng + ?Sized>(
    model: &ModelSpec,
    agg: &AggregatedSummary,
    grid: Grid,
    m: usize,
    anchor: &ParameterVector,
    rng: &mut R,
) -> Result<Contour> {
    let sample = simulate_validation_sample(model, &agg.block_sizes(), m, anchor, false, rng)?;
    let table = sample.anchored_table();
    contour_from_table(agg, grid, m, anchor.clone(), table, ContourKind::ValidAnchored)
}

fn contour_from_table(
    agg: &AggregatedSummary,
    grid: Grid,
    m: usize,
    anchor: ParameterVector,
    table: Vec<f64>,
    kind: ContourKind,
) -> Result<Contour> {
    let center = agg.theta_check.0.clone();
    let info = agg.total_info.clone();
    let values = grid_map(&grid, |theta| {
        let q = eval_quad(&center, &info, None, theta)?;
        Ok(table_exceedance(&table, q))
    })?;
    Ok(Contour {
        kind,
        grid,
        values,
        anchor: Some(anchor),
        m: Some(m),
        quadratic_threshold_table: Some(table.clone()),
        coord: None,
        evaluator: Evaluator::WorkingTable { center, info, coord: None, table },
    })
}

/// Anchored valid contour with several anchors: each evaluation point uses
/// the threshold table of the nearest anchor in the information metric.
pub fn valid_contour_multi_anchor<R: Rng + ?Sized>(
    model: &ModelSpec,
    agg: &AggregatedSummary,
    grid: Grid,
    m: usize,
    anchors: &[ParameterVector],
    rng: &mut R,
) -> Result<Contour> {
    if anchors.is_empty() {
        return Err(Error::Domain("at least one anchor is required".into()));
    }
    let mut tables = Vec::with_capacity(anchors.len());
    for anchor in anchors {
        let sample = simulate_validation_sample(model, &agg.block_sizes(), m, anchor, false, rng)?;
        tables.push(sample.anchored_table());
    }
    let center = agg.theta_check.0.clone();
    let info = agg.total_info.clone();
    let values = grid_map(&grid, |theta| {
        let tv = DVector::from_column_slice(theta);
        let nearest = anchors
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                summaries::quad_form(&a.0, &info, &tv)
                    .partial_cmp(&summaries::quad_form(&b.0, &info, &tv))
                    .unwrap()
            })
            .map(|(i, _)| i)
            .unwrap();
        let q = summaries::quad_form(&center, &info, &tv);
        Ok(table_exceedance(&tables[nearest], q))
    })?;
    Ok(Contour {
        kind: ContourKind::ValidAnchored,
        grid,
        values,
        anchor: None,
        m: Some(m),
        quadratic_threshold_table: None,
        coord: None,
        evaluator: Evaluator::GridOnly,
    })
}

/// Built-in log density of the aggregated summary under the posited model,
/// available where the block-summary law is known: Gaussian (block means
/// are Gaussian) and Exponential (block MLEs are scaled inverse-gamma).
pub fn summary_log_density(
    model: &ModelSpec,
    theta: &ParameterVector,
    blocks: &[BlockSummary],
) -> Result<f64> {
    match model {
        ModelSpec::GaussianKnownVar { tau2 } => {
            let mu = theta.0[0];
            let mut acc = 0.0;
            for b in blocks {
                let var = tau2 / b.n_b as f64;
                let d = b.theta_hat.0[0] - mu;
                acc += -0.5 * d * d / var - 0.5 * (2.0 * std::f64::consts::PI * var).ln();
            }
            Ok(acc)
        }
        ModelSpec::Exponential => {
            // theta_hat = n_b / sum, sum ~ Gamma(n_b, rate theta):
            // density of y = n_b theta / g with g ~ Gamma(n_b, 1).
            let rate = theta.0[0];
            let mut acc = 0.0;
            for b in blocks {
                let nb = b.n_b as f64;
                let y = b.theta_hat.0[0];
                let g = nb * rate / y;
                acc += (nb - 1.0) * g.ln() - g - crate::specfun::ln_gamma(nb) + g.ln() - y.ln();
            }
            Ok(acc)
        }
        _ => Err(Error::UnsupportedModel(format!(
            "no closed-form summary density for {model:?}"
        ))),
    }
}

/// Importance-sampling valid contour: simulate at the anchor, evaluate the
/// working likelihood of both sides at the target theta, and weight each
/// indicator by the summary-density likelihood ratio f_theta / f_anchor.
pub fn valid_contour_importance<R, F>(
    model: &ModelSpec,
    agg: &AggregatedSummary,
    grid: Grid,
    m: usize,
    anchor: &ParameterVector,
    summary_log_density_fn: F,
    rng: &mut R,
) -> Result<Contour>
where
    R: Rng + ?Sized,
    F: Fn(&ParameterVector, &[BlockSummary]) -> Result<f64> + Send + Sync + 'static,
{
    let sample = simulate_validation_sample(model, &agg.block_sizes(), m, anchor, true, rng)?;
    let blocks = sample.blocks.expect("blocks retained");
    let sims: Vec<AggregatedSummary> = sample
        .sims
        .into_iter()
        .zip(blocks)
        .map(|(s, b)| AggregatedSummary {
            blocks: b,
            theta_check: ParameterVector(s.theta_check),
            total_info: s.total_info,
        })
        .collect();
    let log_dens_anchor: Vec<f64> = sims
        .iter()
        .map(|s| summary_log_density_fn(anchor, &s.blocks))
        .collect::<Result<_>>()?;

    let center = agg.theta_check.0.clone();
    let info = agg.total_info.clone();
    let evaluator = Evaluator::Importance {
        sims,
        log_dens_anchor,
        center,
        info,
        density: Box::new(summary_log_density_fn),
    };
    let mut contour = Contour {
        kind: ContourKind::ValidImportance,
        grid,
        values: Vec::new(),
        anchor: Some(anchor.clone()),
        m: Some(m),
        quadratic_threshold_table: None,
        coord: None,
        evaluator,
    };
    contour.values = grid_map(&contour.grid.clone(), |theta| contour.evaluate(theta))?;
    Ok(contour)
}

/// Marginal valid contour for coordinate q (Monte Carlo, anchored): the
/// profiled working likelihood is validified with the nuisance parameters
/// collapsed to the anchor.
pub fn profile_contour_anchored<R: Rng + ?Sized>(
    model: &ModelSpec,
    agg: &AggregatedSummary,
    q: usize,
    grid_q: Vec<f64>,
    m: usize,
    anchor: &ParameterVector,
    rng: &mut R,
) -> Result<Contour> {
    if q >= agg.dim() {
        return Err(Error::DimensionMismatch { expected: agg.dim(), got: q });
    }
    let sample = simulate_validation_sample(model, &agg.block_sizes(), m, anchor, false, rng)?;
    let table = sample.profile_table(q);
    profile_contour_from_table(agg, q, grid_q, m, anchor.clone(), table)
}

/// Marginal contour for coordinate q from an already-simulated validation
/// sample's profile table (see [`ValidationSample::profile_table`]); lets
/// one Monte Carlo sample serve every coordinate.
pub fn profile_contour_from_table(
    agg: &AggregatedSummary,
    q: usize,
    grid_q: Vec<f64>,
    m: usize,
    anchor: ParameterVector,
    table: Vec<f64>,
) -> Result<Contour> {
    let center = DVector::from_element(1, agg.theta_check.0[q]);
    let info = DMatrix::from_element(1, 1, agg.total_info[(q, q)]);
    let values: Vec<f64> = grid_q
        .iter()
        .map(|&x| {
            let d = center[0] - x;
            table_exceedance(&table, d * d * info[(0, 0)])
        })
        .collect();
    Ok(Contour {
        kind: ContourKind::ProfileMarginal,
        grid: Grid::Scalar(grid_q),
        values,
        anchor: Some(anchor),
        m: Some(m),
        quadratic_threshold_table: Some(table.clone()),
        coord: Some(q),
        evaluator: Evaluator::WorkingTable { center, info, coord: Some(q), table },
    })
}

/// Closed-form Exponential block contour: with x = theta n_b / theta_hat
/// the statistic t = x^n e^{-x} maps to the Lambert W argument
/// u = -(x/n) e^{-x/n}, and the contour is
/// 1 + Q(n, -n W_{-1}(u)) - Q(n, -n W_0(u)).
pub fn exp_block_contour(n_b: usize, theta_hat: f64, theta: f64) -> Result<f64> {
    if !(theta > 0.0) || !(theta_hat > 0.0) {
        return Err(Error::Domain(format!(
            "exponential contour requires positive rates, got theta = {theta}, theta_hat = {theta_hat}"
        )));
    }
    exp_contour_core(n_b, theta * n_b as f64 / theta_hat)
}

/// Full-data Exponential contour from block summaries: the same formula
/// with n = sum n_b and x = theta sum(n_b / theta_hat_b).
pub fn exp_full_contour(blocks: &[(usize, f64)], theta: f64) -> Result<f64> {
    if blocks.is_empty() {
        return Err(Error::Domain("at least one block is required".into()));
    }
    if !(theta > 0.0) || blocks.iter().any(|&(_, h)| !(h > 0.0)) {
        return Err(Error::Domain("exponential contour requires positive rates".into()));
    }
    let n_total: usize = blocks.iter().map(|&(n, _)| n).sum();
    let weighted: f64 = blocks.iter().map(|&(n, h)| n as f64 / h).sum();
    exp_contour_core(n_total, theta * weighted)
}

/// Shared core: contour value as a function of x = theta * (total weighted
/// inverse rate), with n the effective sample size.
fn exp_contour_core(n: usize, x: f64) -> Result<f64> {
    let nf = n as f64;
    let v = x / nf;
    // -n^{-1} t^{1/n} with t = x^n e^{-x}, computed stably as -v e^{-v}.
    let mut u = -v * (-v).exp();
    if u == 0.0 {
        return Ok(0.0);
    }
    if u < NEG_INV_E {
        if u > NEG_INV_E - 1e-12 {
            u = NEG_INV_E;
        } else {
            return Err(Error::Domain(format!(
                "Lambert W argument {u} below -1/e (x = {x}, n = {n})"
            )));
        }
    }
    let w0 = lambert_w(BranchId::Principal, u)?;
    let wm1 = lambert_w(BranchId::NegativeOne, u)?;
    let value = 1.0 + reg_gamma_upper(nf, -nf * wm1)? - reg_gamma_upper(nf, -nf * w0)?;
    Ok(value.clamp(0.0, 1.0))
}

/// Sampling density of the Exponential relative-likelihood statistic
/// T = X^n e^{-X} with X ~ Gamma(n, 1), supported on [0, n^n e^{-n}].
pub fn exp_block_stat_density(n_b: usize, t: f64) -> Result<f64> {
    let nf = n_b as f64;
    let t_max = (nf.ln() * nf - nf).exp();
    if !(t >= 0.0 && t <= t_max) {
        return Err(Error::Domain(format!("t = {t} outside [0, {t_max}]")));
    }
    if t == 0.0 {
        return Ok((-crate::specfun::ln_gamma(nf + 1.0)).exp());
    }
    let mut u = -(t.ln() / nf).exp() / nf;
    if u < NEG_INV_E {
        u = NEG_INV_E;
    }
    let w0 = lambert_w(BranchId::Principal, u)?;
    let wm1 = lambert_w(BranchId::NegativeOne, u)?;
    let scale = (-crate::specfun::ln_gamma(nf + 1.0)).exp();
    Ok(scale * (1.0 / (w0 + 1.0) - 1.0 / (wm1 + 1.0)))
}

/// Grid contour for the closed-form full-data oracles: the exact Gaussian
/// contour (chi-square of the full-data quadratic) or the Exponential
/// closed form. The requested kind distinguishes the two Exponential rows.
pub fn oracle_contour_grid(
    model: &ModelSpec,
    agg: &AggregatedSummary,
    grid: Grid,
    kind: ContourKind,
) -> Result<Contour> {
    match model {
        ModelSpec::GaussianKnownVar { .. } => {
            let mut c = large_n_contour_grid(agg, grid)?;
            c.kind = kind;
            Ok(c)
        }
        ModelSpec::Exponential => {
            let n_total: usize = agg.blocks.iter().map(|b| b.n_b).sum();
            let weighted: f64 = agg.blocks.iter().map(|b| b.n_b as f64 / b.theta_hat.0[0]).sum();
            let values = grid_map(&grid, |theta| {
                if theta[0] <= 0.0 {
                    return Ok(0.0);
                }
                exp_contour_core(n_total, theta[0] * weighted)
            })?;
            Ok(Contour {
                kind,
                grid,
                values,
                anchor: None,
                m: None,
                quadratic_threshold_table: None,
                coord: None,
                evaluator: Evaluator::ExpFull { n_total, weighted_rate: weighted },
            })
        }
        _ => Err(Error::UnsupportedModel(format!(
            "no tractable full-data contour for {model:?}"
        ))),
    }
}

/// Monte Carlo oracle contour at one point: the validification probability
/// of the exact full-data relative likelihood, by fresh size-n simulation.
pub fn oracle_contour_mc<R: Rng + ?Sized>(
    model: &ModelSpec,
    data: &Dataset,
    theta: &ParameterVector,
    m: usize,
    rng: &mut R,
) -> Result<f64> {
    model.validate_theta(theta)?;
    let n = data.n();
    match model {
        ModelSpec::GaussianKnownVar { tau2 } => {
            let t = theta.0[0];
            let j = n as f64 / tau2;
            let q_obs = j * (data.mean() - t).powi(2);
            let mut count = 0usize;
            for _ in 0..m {
                let sim = models::sample(model, theta, n, rng)?;
                if j * (sim.mean() - t).powi(2) >= q_obs {
                    count += 1;
                }
            }
            Ok(count as f64 / m as f64)
        }
        ModelSpec::Exponential => {
            let t = theta.0[0];
            let log_r = |mean: f64| -> f64 {
                let rho = t * mean; // theta / theta_hat
                n as f64 * (rho.ln() + 1.0 - rho)
            };
            let r_obs = log_r(data.mean());
            let mut count = 0usize;
            for _ in 0..m {
                let sim = models::sample(model, theta, n, rng)?;
                if log_r(sim.mean()) <= r_obs {
                    count += 1;
                }
            }
            Ok(count as f64 / m as f64)
        }
        _ => Err(Error::UnsupportedModel(format!(
            "oracle contour requires a tractable full-data MLE, not {model:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::summaries::{combine, gauss_relative_likelihood, partition_with_sizes, summarize_block};
    use rand::SeedableRng;

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    }

    fn scalar_agg(blocks: &[(usize, f64)]) -> AggregatedSummary {
        let bs: Vec<BlockSummary> = blocks
            .iter()
            .map(|&(n, h)| BlockSummary {
                n_b: n,
                theta_hat: ParameterVector::new(vec![h]),
                info: DMatrix::from_element(1, 1, n as f64 / (h * h)),
            })
            .collect();
        combine(bs).unwrap()
    }

    fn exponential_agg(seed: u64) -> AggregatedSummary {
        let model = ModelSpec::Exponential;
        let truth = ParameterVector::new(vec![0.5]);
        let data = models::sample(&model, &truth, 30, &mut rng(seed)).unwrap();
        let blocks = partition_with_sizes(&data, &[5, 10, 15], &mut rng(seed + 1)).unwrap();
        combine(blocks.iter().map(|b| summarize_block(&model, b).unwrap()).collect()).unwrap()
    }

    #[test]
    fn large_n_contour_values() {
        let agg = scalar_agg(&[(5, 0.5)]);
        assert!((large_n_contour(&agg, &agg.theta_check.clone()).unwrap() - 1.0).abs() < 1e-14);

        // p = 1: 1 - F_1(q); cross-check via 2 Phi(sqrt q) - 1.
        let theta = ParameterVector::new(vec![0.6]);
        let q = summaries::working_quadratic(&agg, &theta).unwrap();
        let v = large_n_contour(&agg, &theta).unwrap();
        let expect = 2.0 * (1.0 - crate::specfun::std_normal_cdf(q.sqrt()));
        assert!((v - expect).abs() < 1e-12);
    }

    #[test]
    fn large_n_contour_chisq2_level() {
        // p = 2, quadratic form 5.99146 sits at the 0.05 level.
        let b = BlockSummary {
            n_b: 10,
            theta_hat: ParameterVector::new(vec![0.0, 0.0]),
            info: DMatrix::identity(2, 2),
        };
        let agg = combine(vec![b]).unwrap();
        let r = 5.99146f64.sqrt();
        let v = large_n_contour(&agg, &ParameterVector::new(vec![r, 0.0])).unwrap();
        assert!((v - 0.05).abs() < 1e-5);
    }

    #[test]
    fn anchored_contour_is_one_at_theta_check() {
        let model = ModelSpec::Exponential;
        let agg = exponential_agg(20);
        let anchor = agg.theta_check.clone();
        let grid = Grid::Scalar(default_scalar_grid(anchor.0[0], agg.total_info[(0, 0)]));
        let c = valid_contour_anchored(&model, &agg, grid, 500, &anchor, &mut rng(21)).unwrap();
        let at_center = c.evaluate(&[agg.theta_check.0[0]]).unwrap();
        assert_eq!(at_center, 1.0);
        // The grid is centered at theta_check, so the max grid value is 1.
        assert!(c.values.iter().cloned().fold(0.0, f64::max) >= 1.0 - 1.0 / 500.0);
    }

    #[test]
    fn anchored_contour_monotone_in_quadratic() {
        let model = ModelSpec::Exponential;
        let agg = exponential_agg(22);
        let anchor = agg.theta_check.clone();
        let center = agg.theta_check.0[0];
        let grid = Grid::Scalar(default_scalar_grid(center, agg.total_info[(0, 0)]));
        let c = valid_contour_anchored(&model, &agg, grid, 300, &anchor, &mut rng(23)).unwrap();
        // Walk rightward from the center along the ray.
        let mut prev = f64::INFINITY;
        let mut x = center;
        let step = 0.5 / agg.total_info[(0, 0)].sqrt();
        for _ in 0..20 {
            let v = c.evaluate(&[x]).unwrap();
            assert!(v <= prev + 1e-15);
            prev = v;
            x += step;
        }
    }

    #[test]
    fn anchored_matches_large_n_for_gaussian() {
        // Exact chi-square pivot: the anchored contour agrees with the
        // closed form within 2 / sqrt(M) uniformly on the grid.
        let model = ModelSpec::GaussianKnownVar { tau2: 4.0 };
        let truth = ParameterVector::new(vec![0.0]);
        let data = models::sample(&model, &truth, 30, &mut rng(24)).unwrap();
        let blocks = partition_with_sizes(&data, &[5, 10, 15], &mut rng(25)).unwrap();
        let agg = combine(blocks.iter().map(|b| summarize_block(&model, b).unwrap()).collect())
            .unwrap();
        let m = 20_000;
        let grid_points = default_scalar_grid(agg.theta_check.0[0], agg.total_info[(0, 0)]);
        let c = valid_contour_anchored(
            &model,
            &agg,
            Grid::Scalar(grid_points.clone()),
            m,
            &agg.theta_check.clone(),
            &mut rng(26),
        )
        .unwrap();
        let tol = 2.0 / (m as f64).sqrt();
        for (&x, &v) in grid_points.iter().zip(&c.values) {
            let closed = large_n_contour(&agg, &ParameterVector::new(vec![x])).unwrap();
            assert!((v - closed).abs() < tol, "x = {x}: {v} vs {closed}");
        }
    }

    #[test]
    fn importance_trivial_at_anchor() {
        let model = ModelSpec::GaussianKnownVar { tau2: 4.0 };
        let truth = ParameterVector::new(vec![0.3]);
        let data = models::sample(&model, &truth, 30, &mut rng(27)).unwrap();
        let blocks = partition_with_sizes(&data, &[10, 10, 10], &mut rng(28)).unwrap();
        let agg = combine(blocks.iter().map(|b| summarize_block(&model, b).unwrap()).collect())
            .unwrap();
        let anchor = agg.theta_check.clone();
        let grid = Grid::Scalar(default_scalar_grid(anchor.0[0], agg.total_info[(0, 0)]));
        let model2 = model.clone();
        let c = valid_contour_importance(
            &model,
            &agg,
            grid,
            400,
            &anchor,
            move |theta, blocks| summary_log_density(&model2, theta, blocks),
            &mut rng(29),
        )
        .unwrap();
        // At the anchor all weights are 1 and all indicators fire.
        assert_eq!(c.evaluate(&[anchor.0[0]]).unwrap(), 1.0);
        assert!(c.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn importance_matches_large_n_for_gaussian() {
        let model = ModelSpec::GaussianKnownVar { tau2: 4.0 };
        let truth = ParameterVector::new(vec![0.0]);
        let data = models::sample(&model, &truth, 30, &mut rng(30)).unwrap();
        let blocks = partition_with_sizes(&data, &[5, 10, 15], &mut rng(31)).unwrap();
        let agg = combine(blocks.iter().map(|b| summarize_block(&model, b).unwrap()).collect())
            .unwrap();
        let anchor = agg.theta_check.clone();
        let m = 4000;
        let center = agg.theta_check.0[0];
        let sd = 1.0 / agg.total_info[(0, 0)].sqrt();
        let grid: Vec<f64> = (-4..=4).map(|i| center + i as f64 * 0.6 * sd).collect();
        let model2 = model.clone();
        let c = valid_contour_importance(
            &model,
            &agg,
            Grid::Scalar(grid.clone()),
            m,
            &anchor,
            move |theta, blocks| summary_log_density(&model2, theta, blocks),
            &mut rng(32),
        )
        .unwrap();
        // Weighted-mean standard error at each point, then a 3-sigma band.
        for (&x, &v) in grid.iter().zip(&c.values) {
            let closed = large_n_contour(&agg, &ParameterVector::new(vec![x])).unwrap();
            let se = (closed * (1.0 - closed) / m as f64).sqrt().max(1e-3) * 3.0;
            // Importance weights inflate variance off-anchor; widen by the
            // distance in standard units.
            let widen = 1.0 + ((x - center) / sd).abs();
            assert!(
                (v - closed).abs() < se * widen * 3.0,
                "x = {x}: {v} vs {closed} (band {})",
                se * widen * 3.0
            );
        }
    }

    #[test]
    fn profile_scalar_equals_anchored_on_same_seed() {
        let model = ModelSpec::Exponential;
        let agg = exponential_agg(33);
        let anchor = agg.theta_check.clone();
        let grid = default_scalar_grid(agg.theta_check.0[0], agg.total_info[(0, 0)]);
        let a = valid_contour_anchored(
            &model,
            &agg,
            Grid::Scalar(grid.clone()),
            400,
            &anchor,
            &mut rng(34),
        )
        .unwrap();
        let p = profile_contour_anchored(&model, &agg, 0, grid, 400, &anchor, &mut rng(34)).unwrap();
        assert_eq!(a.values, p.values);
    }

    #[test]
    fn exp_block_contour_mode_and_tails() {
        for n_b in [3usize, 10, 40] {
            assert!((exp_block_contour(n_b, 0.5, 0.5).unwrap() - 1.0).abs() < 1e-12);
            assert!(exp_block_contour(n_b, 0.5, 1e-9).unwrap() < 1e-12);
            assert!(exp_block_contour(n_b, 0.5, 1e4).unwrap() < 1e-12);
        }
        assert!(exp_block_contour(10, 0.5, 0.0).is_err());
        assert!(exp_block_contour(10, -0.5, 0.5).is_err());
    }

    #[test]
    fn exp_block_contour_frozen_reference() {
        // n_b = 10, theta_hat = 0.5, theta = 0.7, from a 40-digit evaluation
        // of the closed form: 0.26362161976976353...
        let v = exp_block_contour(10, 0.5, 0.7).unwrap();
        assert!((v - 0.2636216197697635).abs() < 1e-10, "{v}");
    }

    #[test]
    fn exp_full_contour_reduces_and_peaks() {
        // B = 1 equals the block contour.
        for theta in [0.2, 0.5, 0.9] {
            let full = exp_full_contour(&[(10, 0.5)], theta).unwrap();
            let block = exp_block_contour(10, 0.5, theta).unwrap();
            assert!((full - block).abs() < 1e-14);
        }
        // Mode at theta = n / sum(n_b / theta_hat_b).
        let blocks = [(5usize, 0.45), (10, 0.52), (15, 0.61)];
        let weighted: f64 = blocks.iter().map(|&(n, h)| n as f64 / h).sum();
        let mode = 30.0 / weighted;
        assert!((exp_full_contour(&blocks, mode).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn exp_contour_large_n_no_overflow() {
        // n = 3000 exercises the log-space statistic path.
        let v = exp_full_contour(&[(3000, 0.5)], 0.5).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
        let v = exp_full_contour(&[(3000, 0.5)], 0.52).unwrap();
        assert!(v.is_finite() && (0.0..=1.0).contains(&v));
    }

    #[test]
    fn exp_stat_density_integrates_to_one() {
        // Prop-1 identity: integral of the statistic density over
        // [0, n^n e^-n] is 1. Substituting t = n^n e^-n s and integrating
        // with an endpoint-singularity-aware scheme.
        for n_b in [3usize, 5, 15] {
            let nf = n_b as f64;
            let t_max = (nf.ln() * nf - nf).exp();
            let split = 0.5 * t_max;

            // Lower piece [0, t_max/2]: the density varies with t^{1/n}, so
            // substitute t = split s^n to make the integrand analytic in s.
            let f_lo = |s: f64| -> f64 {
                let t = (split * s.powi(n_b as i32)).clamp(0.0, t_max);
                split * nf * s.powi(n_b as i32 - 1) * exp_block_stat_density(n_b, t).unwrap()
            };

            // Upper piece [t_max/2, t_max] has an inverse-square-root
            // singularity at t_max; substitute t = t_max (1 - y^2). At
            // y = 0 the integrand tends to 4 t_max sqrt(n/2) / n!.
            let limit_at_mode =
                4.0 * t_max * (nf / 2.0).sqrt() * (-crate::specfun::ln_gamma(nf + 1.0)).exp();
            let f_hi = |y: f64| -> f64 {
                if y < 1e-9 {
                    return limit_at_mode;
                }
                let t = (t_max * (1.0 - y * y)).clamp(0.0, t_max);
                2.0 * t_max * y * exp_block_stat_density(n_b, t).unwrap()
            };

            let simpson = |f: &dyn Fn(f64) -> f64, a: f64, b: f64, steps: usize| -> f64 {
                let h = (b - a) / steps as f64;
                let mut acc = f(a) + f(b);
                for i in 1..steps {
                    acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
                }
                acc * h / 3.0
            };
            let integral =
                simpson(&f_lo, 0.0, 1.0, 8000) + simpson(&f_hi, 0.0, 0.5f64.sqrt(), 8000);
            assert!((integral - 1.0).abs() < 1e-6, "n_b = {n_b}: {integral}");
        }
    }

    #[test]
    fn oracle_mc_is_one_at_full_mle() {
        let model = ModelSpec::Exponential;
        let data = models::sample(&model, &ParameterVector::new(vec![0.5]), 20, &mut rng(35)).unwrap();
        let mle = ParameterVector::new(vec![1.0 / data.mean()]);
        let v = oracle_contour_mc(&model, &data, &mle, 200, &mut rng(36)).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn oracle_mc_matches_closed_forms() {
        let m = 40_000;
        let tol = 3.0 / (m as f64).sqrt();

        // Gaussian against the exact chi-square contour.
        let model = ModelSpec::GaussianKnownVar { tau2: 4.0 };
        let data = models::sample(&model, &ParameterVector::new(vec![0.0]), 25, &mut rng(37)).unwrap();
        let theta = ParameterVector::new(vec![0.45]);
        let v = oracle_contour_mc(&model, &data, &theta, m, &mut rng(38)).unwrap();
        let q = 25.0 / 4.0 * (data.mean() - 0.45).powi(2);
        let closed = 1.0 - chisq_cdf(1, q).unwrap();
        assert!((v - closed).abs() < tol, "{v} vs {closed}");

        // Exponential against the Lambert-W closed form.
        let model = ModelSpec::Exponential;
        let data = models::sample(&model, &ParameterVector::new(vec![0.5]), 20, &mut rng(39)).unwrap();
        let theta = ParameterVector::new(vec![0.62]);
        let v = oracle_contour_mc(&model, &data, &theta, m, &mut rng(40)).unwrap();
        let closed = exp_block_contour(20, 1.0 / data.mean(), 0.62).unwrap();
        assert!((v - closed).abs() < tol, "{v} vs {closed}");
    }

    #[test]
    fn validation_sample_budget_error_shape() {
        // A g-and-k anchor with blocks of size 2 fails summarization almost
        // surely, exhausting the re-draw budget.
        let model = ModelSpec::GandK { c: 0.8 };
        let anchor = ParameterVector::new(vec![3.0, 1.0, 2.0, 0.5]);
        let r = simulate_validation_sample(&model, &[2, 2], 3, &anchor, false, &mut rng(41));
        assert!(matches!(r, Err(Error::SimulationBudgetExceeded { .. })));
    }

    #[test]
    fn exact_pivot_two_anchor_agreement() {
        // Exponential working likelihood is an exact pivot: tables built at
        // two different anchors have the same law (two-sample KS).
        let agg = exponential_agg(42);
        let model = ModelSpec::Exponential;
        let m = 4000;
        let s1 = simulate_validation_sample(
            &model,
            &[5, 10, 15],
            m,
            &ParameterVector::new(vec![0.5]),
            false,
            &mut rng(43),
        )
        .unwrap();
        let s2 = simulate_validation_sample(
            &model,
            &[5, 10, 15],
            m,
            &ParameterVector::new(vec![1.7]),
            false,
            &mut rng(44),
        )
        .unwrap();
        let (_, p) = crate::stats::ks_two_sample(&s1.anchored_table(), &s2.anchored_table());
        assert!(p > 0.01, "pivot KS p = {p}");
        let _ = agg;
    }

    #[test]
    fn multi_anchor_contour_reasonable() {
        let model = ModelSpec::Exponential;
        let agg = exponential_agg(45);
        let center = agg.theta_check.0[0];
        let grid = default_scalar_grid(center, agg.total_info[(0, 0)]);
        let anchors = [
            ParameterVector::new(vec![center]),
            ParameterVector::new(vec![center * 1.5]),
        ];
        let c = valid_contour_multi_anchor(
            &model,
            &agg,
            Grid::Scalar(grid),
            600,
            &anchors,
            &mut rng(46),
        )
        .unwrap();
        assert!(c.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(c.values.iter().cloned().fold(0.0, f64::max) >= 1.0 - 1.0 / 600.0);
    }

    #[test]
    fn working_likelihood_consistency() {
        // gauss_relative_likelihood and the quadratic tables describe the
        // same ranking: r <= r' iff q >= q'.
        let agg = exponential_agg(47);
        let t1 = ParameterVector::new(vec![0.4]);
        let t2 = ParameterVector::new(vec![0.45]);
        let r1 = gauss_relative_likelihood(&agg, &t1).unwrap();
        let r2 = gauss_relative_likelihood(&agg, &t2).unwrap();
        let q1 = summaries::working_quadratic(&agg, &t1).unwrap();
        let q2 = summaries::working_quadratic(&agg, &t2).unwrap();
        assert_eq!(r1 < r2, q1 > q2);
    }
}
