//! Euclidean projections onto convex sets.
//!
//! Boxes, the nonnegative orthant and halfspaces have closed-form projections.
//! Intersections are handled by Dykstra's algorithm, which converges to the
//! true orthogonal projection (plain alternating projections only reach *some*
//! point of the intersection). Products of sets project block by block.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, norm_sq};

/// Declarative description of a closed convex set in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProjectionSpec {
    /// `lo <= x <= hi` componentwise.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `x >= 0`.
    NonnegativeOrthant,
    /// `normal . x <= offset`.
    Halfspace { normal: Vec<f64>, offset: f64 },
    Intersection(Vec<ProjectionSpec>),
    /// Cartesian product; each entry covers the next `dim` coordinates.
    Product(Vec<(usize, ProjectionSpec)>),
    FullSpace,
}

/// Which algorithm to use for intersections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionMode {
    /// Dykstra's algorithm: the exact Euclidean projection.
    #[default]
    Dykstra,
    /// Plain alternating projections: a feasible point, not necessarily the nearest.
    Pocs,
}

impl std::str::FromStr for ProjectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dykstra" => Ok(Self::Dykstra),
            "pocs" => Ok(Self::Pocs),
            other => Err(Error::Unknown {
                kind: "projection mode",
                name: other.to_string(),
            }),
        }
    }
}

/// Stopping rule for the iterative intersection projection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionOptions {
    /// Tolerance on the per-cycle movement and on constraint violation,
    /// relative to `max(1, |v|_inf)` of the input point.
    pub tol: f64,
    /// Maximum number of full cycles over the member sets.
    pub max_iter: usize,
    pub mode: ProjectionMode,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
            mode: ProjectionMode::Dykstra,
        }
    }
}

impl ProjectionSpec {
    pub fn unit_box(dim: usize) -> Self {
        Self::Box {
            lo: vec![-1.0; dim],
            hi: vec![1.0; dim],
        }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self::Box {
            lo: vec![lo],
            hi: vec![hi],
        }
    }

    /// Checks the structural invariants against a dimension.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Self::Box { lo, hi } => {
                check_len("box.lo", dim, lo.len())?;
                check_len("box.hi", dim, hi.len())?;
                if let Some(j) = lo.iter().zip(hi).position(|(l, h)| !(l <= h)) {
                    return Err(Error::InvalidSet(format!(
                        "box bound {j}: lo {} > hi {}",
                        lo[j], hi[j]
                    )));
                }
                Ok(())
            }
            Self::Halfspace { normal, offset } => {
                check_len("halfspace.normal", dim, normal.len())?;
                if !(norm_sq(normal) > 0.0) || !offset.is_finite() {
                    return Err(Error::InvalidSet(
                        "halfspace normal must be nonzero with a finite offset".into(),
                    ));
                }
                Ok(())
            }
            Self::Intersection(members) => {
                if members.is_empty() {
                    return Err(Error::InvalidSet("empty intersection list".into()));
                }
                members.iter().try_for_each(|m| m.validate(dim))
            }
            Self::Product(blocks) => {
                let total: usize = blocks.iter().map(|(d, _)| d).sum();
                check_len("product.dims", dim, total)?;
                blocks.iter().try_for_each(|(d, s)| s.validate(*d))
            }
            Self::NonnegativeOrthant | Self::FullSpace => Ok(()),
        }
    }

    /// Largest constraint violation of `x` (0 when feasible).
    pub fn violation(&self, x: &[f64]) -> f64 {
        match self {
            Self::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| (l - v).max(v - h).max(0.0))
                .fold(0.0, f64::max),
            Self::NonnegativeOrthant => x.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max),
            Self::Halfspace { normal, offset } => {
                ((dot(normal, x) - offset) / norm_sq(normal).sqrt()).max(0.0)
            }
            Self::Intersection(members) => members
                .iter()
                .map(|m| m.violation(x))
                .fold(0.0, f64::max),
            Self::Product(blocks) => {
                let mut start = 0;
                let mut worst: f64 = 0.0;
                for (d, s) in blocks {
                    worst = worst.max(s.violation(&x[start..start + d]));
                    start += d;
                }
                worst
            }
            Self::FullSpace => 0.0,
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.violation(x) <= tol
    }

    /// Componentwise bounds enclosing the set, if it is bounded.
    pub fn bounding_box(&self, dim: usize) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Self::Box { lo, hi } => Some((lo.clone(), hi.clone())),
            Self::Intersection(members) => {
                let mut lo = vec![f64::NEG_INFINITY; dim];
                let mut hi = vec![f64::INFINITY; dim];
                for m in members {
                    if let Some((l, h)) = m.bounding_box(dim) {
                        for j in 0..dim {
                            lo[j] = lo[j].max(l[j]);
                            hi[j] = hi[j].min(h[j]);
                        }
                    }
                }
                lo.iter()
                    .chain(&hi)
                    .all(|v| v.is_finite())
                    .then_some((lo, hi))
            }
            Self::Product(blocks) => {
                let mut lo = Vec::with_capacity(dim);
                let mut hi = Vec::with_capacity(dim);
                for (d, s) in blocks {
                    let (l, h) = s.bounding_box(*d)?;
                    lo.extend(l);
                    hi.extend(h);
                }
                Some((lo, hi))
            }
            _ => None,
        }
    }
}

/// Euclidean projection of `v` onto the set described by `spec`.
pub fn project(spec: &ProjectionSpec, v: &[f64], opts: &ProjectionOptions) -> Result<Vec<f64>> {
    match spec {
        ProjectionSpec::Box { lo, hi } => {
            check_len("point", lo.len(), v.len())?;
            Ok(v.iter()
                .zip(lo.iter().zip(hi))
                .map(|(x, (l, h))| x.clamp(*l, *h))
                .collect())
        }
        ProjectionSpec::NonnegativeOrthant => Ok(v.iter().map(|x| x.max(0.0)).collect()),
        ProjectionSpec::Halfspace { normal, offset } => {
            check_len("point", normal.len(), v.len())?;
            Ok(project_halfspace(normal, *offset, v))
        }
        ProjectionSpec::FullSpace => Ok(v.to_vec()),
        ProjectionSpec::Product(blocks) => {
            let total: usize = blocks.iter().map(|(d, _)| d).sum();
            check_len("point", total, v.len())?;
            let mut out = Vec::with_capacity(v.len());
            let mut start = 0;
            for (d, s) in blocks {
                out.extend(project(s, &v[start..start + d], opts)?);
                start += d;
            }
            Ok(out)
        }
        ProjectionSpec::Intersection(members) => match members.len() {
            0 => Err(Error::InvalidSet("empty intersection list".into())),
            1 => project(&members[0], v, opts),
            _ => match opts.mode {
                ProjectionMode::Dykstra => match as_budget(members) {
                    Some((normal, offset)) => {
                        check_len("point", normal.len(), v.len())?;
                        Ok(project_budget_exact(normal, offset, v))
                    }
                    None => dykstra(members, v, opts),
                },
                ProjectionMode::Pocs => alternating(members, v, opts),
            },
        },
    }
}

/// Recognizes `{x >= 0 : a . x <= b}` with `a >= 0` and `b >= 0`.
fn as_budget(members: &[ProjectionSpec]) -> Option<(&[f64], f64)> {
    match members {
        [ProjectionSpec::NonnegativeOrthant, ProjectionSpec::Halfspace { normal, offset }]
        | [ProjectionSpec::Halfspace { normal, offset }, ProjectionSpec::NonnegativeOrthant]
            if *offset >= 0.0 && normal.iter().all(|a| *a >= 0.0) =>
        {
            Some((normal, *offset))
        }
        _ => None,
    }
}

/// Exact projection onto `{x >= 0 : a . x <= b}` for `a >= 0`, `b >= 0`,
/// by sorting the breakpoints of `mu -> a . max(v - mu a, 0)`.
///
/// This is the limit of Dykstra's iteration on the orthant and the
/// halfspace, computed in `O(m log m)`.
pub fn project_budget_exact(normal: &[f64], offset: f64, v: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
    if dot(normal, &clipped) <= offset {
        return clipped;
    }
    let mut active: Vec<(f64, usize)> = (0..v.len())
        .filter(|&j| normal[j] > 0.0 && v[j] > 0.0)
        .map(|j| (v[j] / normal[j], j))
        .collect();
    active.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let (mut sva, mut saa) = (0.0, 0.0);
    let mut mu = 0.0;
    for (k, &(_, j)) in active.iter().enumerate() {
        sva += normal[j] * v[j];
        saa += normal[j] * normal[j];
        mu = (sva - offset) / saa;
        let next = active.get(k + 1).map_or(0.0, |b| b.0);
        if mu >= next {
            break;
        }
    }
    let mut x: Vec<f64> = clipped
        .iter()
        .zip(normal)
        .map(|(x, a)| if *a > 0.0 { (x - mu * a).max(0.0) } else { *x })
        .collect();
    // cancellation in `v - mu a` can overshoot the budget for large `v`
    let spend = dot(normal, &x);
    if spend > offset {
        let shrink = if spend > 0.0 { offset / spend } else { 0.0 };
        x.iter_mut().zip(normal).filter(|(_, a)| **a > 0.0).for_each(|(xj, _)| *xj *= shrink);
    }
    x
}

/// Dykstra's algorithm on an intersection, without the closed-form
/// shortcuts taken by [`project`].
pub fn project_dykstra(members: &[ProjectionSpec], v: &[f64], opts: &ProjectionOptions) -> Result<Vec<f64>> {
    dykstra(members, v, opts)
}

fn project_halfspace(normal: &[f64], offset: f64, v: &[f64]) -> Vec<f64> {
    let excess = dot(normal, v) - offset;
    if excess <= 0.0 {
        return v.to_vec();
    }
    let scale = excess / norm_sq(normal);
    v.iter().zip(normal).map(|(x, a)| x - scale * a).collect()
}

fn scale_of(v: &[f64]) -> f64 {
    v.iter().fold(1.0_f64, |m, x| m.max(x.abs()))
}

fn dykstra(members: &[ProjectionSpec], v: &[f64], opts: &ProjectionOptions) -> Result<Vec<f64>> {
    let tol = opts.tol * scale_of(v);
    let mut x = v.to_vec();
    let mut increments = vec![vec![0.0; v.len()]; members.len()];
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let start = x.clone();
        for (set, inc) in members.iter().zip(increments.iter_mut()) {
            let shifted: Vec<f64> = x.iter().zip(inc.iter()).map(|(a, b)| a + b).collect();
            let y = project(set, &shifted, opts)?;
            for ((p, s), yj) in inc.iter_mut().zip(&shifted).zip(&y) {
                *p = s - yj;
            }
            x = y;
        }
        let moved = crate::linalg::dist(&start, &x);
        let violated = members.iter().map(|m| m.violation(&x)).fold(0.0, f64::max);
        residual = moved.max(violated);
        if residual <= tol {
            return Ok(x);
        }
    }
    Err(Error::ProjectionNotConverged {
        iterations: opts.max_iter,
        residual,
        last_iterate: x,
    })
}

fn alternating(members: &[ProjectionSpec], v: &[f64], opts: &ProjectionOptions) -> Result<Vec<f64>> {
    let tol = opts.tol * scale_of(v);
    let mut x = v.to_vec();
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iter {
        for set in members {
            x = project(set, &x, opts)?;
        }
        residual = members.iter().map(|m| m.violation(&x)).fold(0.0, f64::max);
        if residual <= tol {
            return Ok(x);
        }
    }
    Err(Error::ProjectionNotConverged {
        iterations: opts.max_iter,
        residual,
        last_iterate: x,
    })
}

/// The budget set `{x >= 0 : x . prices <= budget}` of a single buyer.
pub fn budget_set(prices: &[f64], budget: f64) -> ProjectionSpec {
    if norm_sq(prices) > 0.0 {
        ProjectionSpec::Intersection(vec![
            ProjectionSpec::NonnegativeOrthant,
            ProjectionSpec::Halfspace {
                normal: prices.to_vec(),
                offset: budget,
            },
        ])
    } else {
        // every nonnegative bundle is affordable at zero prices
        ProjectionSpec::NonnegativeOrthant
    }
}

/// Projects one buyer's bundle onto their budget set.
///
/// With [`ProjectionMode::Dykstra`] this is the Euclidean projection; with
/// [`ProjectionMode::Pocs`] it alternates orthant and budget-halfspace
/// projections until the point is feasible.
pub fn project_budget_row(
    bundle: &[f64],
    prices: &[f64],
    budget: f64,
    opts: &ProjectionOptions,
) -> Result<Vec<f64>> {
    check_len("prices", bundle.len(), prices.len())?;
    if prices.iter().any(|p| *p < 0.0) {
        return Err(Error::Domain("prices must be nonnegative".into()));
    }
    if !(budget > 0.0) {
        return Err(Error::Domain(format!("budget must be positive, got {budget}")));
    }
    project(&budget_set(prices, budget), bundle, opts)
}
