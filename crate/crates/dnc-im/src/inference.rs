//! Confidence regions and hypothesis-test decisions read off a possibility
//! contour: the level set {theta : pi(theta) > alpha} and the dual
//! sup-possibility test.

use nalgebra::DMatrix;

use crate::contours::{table_level_radius, Contour, ContourKind, Grid};
use crate::error::{Error, Result};
use crate::models::ParameterVector;
use crate::specfun::chisq_quantile;

/// A per-coordinate confidence region: disjoint closed intervals, sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordinateRegion {
    pub coord: usize,
    pub intervals: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfidenceRegion {
    pub alpha: f64,
    pub coords: Vec<CoordinateRegion>,
    pub is_empty: bool,
}

impl ConfidenceRegion {
    fn empty(alpha: f64) -> Self {
        ConfidenceRegion { alpha, coords: Vec::new(), is_empty: true }
    }

    /// Total length of the intervals for one coordinate.
    pub fn length(&self, coord: usize) -> Option<f64> {
        self.coords
            .iter()
            .find(|c| c.coord == coord)
            .map(|c| c.intervals.iter().map(|(lo, hi)| hi - lo).sum())
    }

    pub fn contains(&self, coord: usize, x: f64) -> bool {
        self.coords
            .iter()
            .find(|c| c.coord == coord)
            .map(|c| c.intervals.iter().any(|&(lo, hi)| lo <= x && x <= hi))
            .unwrap_or(false)
    }
}

/// Hypothesis sets: a finite list of points or an axis-aligned box
/// (evaluated over the contour grid).
#[derive(Clone, Debug)]
pub enum Hypothesis {
    Points(Vec<ParameterVector>),
    Box(Vec<(f64, f64)>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Reject,
    Retain,
}

/// The level set {theta : pi(theta) > alpha} as per-coordinate closed
/// intervals. Threshold-table and chi-square contours are inverted exactly;
/// scalar closed-form contours are bisection-refined; grid-only contours
/// fall back to interpolated crossings.
pub fn level_set(contour: &Contour, alpha: f64) -> Result<ConfidenceRegion> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("level_set requires alpha in (0,1), got {alpha}")));
    }
    if alpha >= contour.max_value() {
        return Ok(ConfidenceRegion::empty(alpha));
    }

    // Exact quadratic-form inversion where the machinery is retained.
    if let Some((center, info, coord)) = contour.working_ref() {
        let radius = match (contour.kind, &contour.quadratic_threshold_table) {
            (ContourKind::LargeN | ContourKind::OracleFullData, _) => {
                let df = if coord.is_some() { 1 } else { center.len() as u32 };
                Some(chisq_quantile(df, 1.0 - alpha)?)
            }
            (_, Some(table)) => match table_level_radius(table, alpha) {
                Some(r) => Some(r),
                None => return Ok(ConfidenceRegion::empty(alpha)),
            },
            _ => None,
        };
        if let Some(q_star) = radius {
            return Ok(quadratic_region(center.len(), center, info, coord, q_star, alpha, contour));
        }
    }

    // Scalar fallbacks: bisection against the evaluator, else interpolation.
    match &contour.grid {
        Grid::Scalar(xs) => scalar_region(contour, xs, alpha),
        Grid::Points(_) => Err(Error::Domain(
            "level_set on a grid-only multidimensional contour is not supported".into(),
        )),
    }
}

fn quadratic_region(
    p: usize,
    center: &nalgebra::DVector<f64>,
    info: &DMatrix<f64>,
    coord: Option<usize>,
    q_star: f64,
    alpha: f64,
    contour: &Contour,
) -> ConfidenceRegion {
    let mut coords = Vec::new();
    if let Some(q) = coord {
        // Marginal contour: single interval around the scalar center.
        let half = (q_star / info[(0, 0)]).sqrt();
        coords.push(CoordinateRegion {
            coord: q,
            intervals: vec![(center[0] - half, center[0] + half)],
        });
    } else if p == 1 {
        let half = (q_star / info[(0, 0)]).sqrt();
        coords.push(CoordinateRegion {
            coord: 0,
            intervals: vec![(center[0] - half, center[0] + half)],
        });
    } else {
        // Ellipsoid {quad <= q*}: per-coordinate extents use the inverse
        // information diagonal.
        let inv = info
            .clone()
            .cholesky()
            .map(|c| c.inverse())
            .unwrap_or_else(|| DMatrix::identity(p, p));
        for j in 0..p {
            let half = (q_star * inv[(j, j)]).sqrt();
            coords.push(CoordinateRegion {
                coord: j,
                intervals: vec![(center[j] - half, center[j] + half)],
            });
        }
    }
    let _ = contour;
    ConfidenceRegion { alpha, coords, is_empty: false }
}

fn scalar_region(contour: &Contour, xs: &[f64], alpha: f64) -> Result<ConfidenceRegion> {
    let vals = &contour.values;
    let coord = contour.coord.unwrap_or(0);
    let span = xs[xs.len() - 1] - xs[0];
    let tol = 1e-8 * span.max(1e-300);
    let refine = |lo: f64, hi: f64, rising: bool| -> Result<f64> {
        // Bisection on pi(x) - alpha between bracketing grid points.
        let mut a = lo;
        let mut b = hi;
        for _ in 0..60 {
            if b - a <= tol {
                break;
            }
            let mid = 0.5 * (a + b);
            let v = contour.evaluate(&[mid])?;
            let inside = v > alpha;
            if inside == rising {
                b = mid;
            } else {
                a = mid;
            }
        }
        Ok(0.5 * (a + b))
    };

    let mut intervals: Vec<(f64, f64)> = Vec::new();
    let mut open_start: Option<f64> = None;
    for i in 0..xs.len() {
        let inside = vals[i] > alpha;
        match (inside, open_start) {
            (true, None) => {
                let start = if i == 0 {
                    xs[0]
                } else {
                    match &contour.evaluator_kind() {
                        EvalClass::Evaluable => refine(xs[i - 1], xs[i], true)?,
                        EvalClass::GridOnly => interp_crossing(xs[i - 1], xs[i], vals[i - 1], vals[i], alpha),
                    }
                };
                open_start = Some(start);
            }
            (false, Some(start)) => {
                let end = match &contour.evaluator_kind() {
                    EvalClass::Evaluable => refine(xs[i - 1], xs[i], false)?,
                    EvalClass::GridOnly => interp_crossing(xs[i - 1], xs[i], vals[i - 1], vals[i], alpha),
                };
                intervals.push((start, end));
                open_start = None;
            }
            _ => {}
        }
    }
    if let Some(start) = open_start {
        intervals.push((start, xs[xs.len() - 1]));
    }
    if intervals.is_empty() {
        return Ok(ConfidenceRegion::empty(alpha));
    }
    Ok(ConfidenceRegion {
        alpha,
        coords: vec![CoordinateRegion { coord, intervals }],
        is_empty: false,
    })
}

fn interp_crossing(x0: f64, x1: f64, v0: f64, v1: f64, alpha: f64) -> f64 {
    if (v1 - v0).abs() < 1e-300 {
        return 0.5 * (x0 + x1);
    }
    x0 + (alpha - v0) / (v1 - v0) * (x1 - x0)
}

enum EvalClass {
    Evaluable,
    GridOnly,
}

impl Contour {
    fn evaluator_kind(&self) -> EvalClass {
        if self.working_ref().is_some()
            || self.kind == ContourKind::ExponentialClosedForm
            || self.kind == ContourKind::OracleFullData
        {
            EvalClass::Evaluable
        } else {
            EvalClass::GridOnly
        }
    }
}

/// Sup-possibility test: computes the supremum of the contour over the
/// hypothesis set and rejects iff it is at or below alpha.
pub fn test_hypothesis(
    contour: &Contour,
    hypothesis: &Hypothesis,
    alpha: f64,
) -> Result<(Decision, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("test requires alpha in (0,1), got {alpha}")));
    }
    let sup = match hypothesis {
        Hypothesis::Points(points) => {
            if points.is_empty() {
                return Err(Error::EmptyHypothesis);
            }
            let mut sup = f64::NEG_INFINITY;
            for p in points {
                sup = sup.max(contour.evaluate(p.as_slice())?);
            }
            sup
        }
        Hypothesis::Box(ranges) => {
            if ranges.is_empty() || ranges.iter().any(|(lo, hi)| lo > hi) {
                return Err(Error::EmptyHypothesis);
            }
            let mut sup = f64::NEG_INFINITY;
            let in_box = |pt: &[f64]| -> bool {
                pt.len() == ranges.len()
                    && pt.iter().zip(ranges).all(|(&x, &(lo, hi))| lo <= x && x <= hi)
            };
            match &contour.grid {
                Grid::Scalar(xs) => {
                    for &x in xs {
                        if in_box(&[x]) {
                            sup = sup.max(contour.evaluate(&[x])?);
                        }
                    }
                }
                Grid::Points(pts) => {
                    for p in pts {
                        if in_box(p) {
                            sup = sup.max(contour.evaluate(p)?);
                        }
                    }
                }
            }
            // The box endpoints and the mode (when inside) sharpen the grid sup.
            if let Some((center, _, coord)) = contour.working_ref() {
                if coord.is_none() && center.len() == ranges.len() {
                    let clamped: Vec<f64> = center
                        .iter()
                        .zip(ranges)
                        .map(|(&c, &(lo, hi))| c.clamp(lo, hi))
                        .collect();
                    sup = sup.max(contour.evaluate(&clamped)?);
                }
            }
            if sup == f64::NEG_INFINITY {
                return Err(Error::EmptyHypothesis);
            }
            sup
        }
    };
    let decision = if sup <= alpha { Decision::Reject } else { Decision::Retain };
    Ok((decision, sup))
}
