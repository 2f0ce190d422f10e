//! Asymptotic radii and centers of bounded sequences with respect to convex
//! sets, and a finite diagnostic for Delta-convergence.
//!
//! The asymptotic radius functional `y -> limsup d(y, x_n)` is replaced by
//! its finite-window surrogate `max` over a tail window; for the Fejér
//! monotone sequences this module is used on, the per-anchor distances
//! converge, so the tail max brackets the limit. The surrogate is exact only
//! under that proviso and the reports say so.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iteration::IterationTrace;
use crate::operators::Operator;
use crate::sets::ConvexSet;
use crate::space::{Space, SpacePoint};

/// A finite window of a bounded sequence: the points `x_m ... x_M`,
/// optionally strided.
#[derive(Clone, Debug)]
pub struct SequenceWindow {
    pub points: Vec<SpacePoint>,
    /// `(start, end, stride)` of the originating sequence, for reports.
    pub policy: (usize, usize, usize),
}

impl SequenceWindow {
    pub fn from_points(points: Vec<SpacePoint>) -> Self {
        let n = points.len();
        SequenceWindow {
            points,
            policy: (0, n, 1),
        }
    }

    pub fn from_trace(trace: &IterationTrace, start: usize, end: usize, stride: usize) -> Result<Self> {
        let end = end.min(trace.points.len());
        if start >= end || stride == 0 {
            return Err(Error::InvalidParameter(format!(
                "empty window [{start}, {end}) stride {stride}"
            )));
        }
        Ok(SequenceWindow {
            points: trace.points[start..end].iter().step_by(stride).cloned().collect(),
            policy: (start, end, stride),
        })
    }
}

/// Window policy for the Delta-convergence diagnostic.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WindowPolicy {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<usize>,
    #[serde(default = "one")]
    pub stride: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Serialize)]
pub struct CenterResult {
    pub center: SpacePoint,
    /// Max distance from the center to the window points.
    pub radius: f64,
    /// Size of the optimizer's final step, an estimate of the accuracy.
    pub residual: f64,
}

/// Finite-window asymptotic radius of the window at `y`.
pub fn asymptotic_radius(space: &Space, window: &SequenceWindow, y: &SpacePoint) -> Result<f64> {
    if window.points.is_empty() {
        return Err(Error::EmptyInput("window has no points".into()));
    }
    space.validate_point(y)?;
    let mut r: f64 = 0.0;
    for p in &window.points {
        r = r.max(space.distance_unchecked(y, p));
    }
    Ok(r)
}

/// Minimizes the window's max-distance functional over a convex set by
/// geodesic subgradient descent: step toward the current farthest window
/// point by a diminishing fraction, projecting into the set. Requires a
/// CAT(0) model space, where the minimizer is unique.
pub fn asymptotic_center(
    space: &Space,
    window: &SequenceWindow,
    set: &ConvexSet,
    tol: f64,
) -> Result<CenterResult> {
    if window.points.is_empty() {
        return Err(Error::EmptyInput("window has no points".into()));
    }
    if !space.claims_cn() {
        return Err(Error::Unsupported(
            "asymptotic centers require a CAT(0) model space (unique minimizer)".into(),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    set.validate(space)?;

    let farthest = |y: &SpacePoint| -> (usize, f64) {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, p) in window.points.iter().enumerate() {
            let d = space.distance_unchecked(y, p);
            if d > best.1 {
                best = (i, d);
            }
        }
        best
    };

    let mut y = set.project(space, &window.points[0])?;
    let r0 = farthest(&y).1;
    let budget = ((8.0 * (r0 + 1.0) / tol) as usize).clamp(50_000, 400_000);
    let mut last_step = 0.0;
    for k in 1..=budget {
        let (idx, dist) = farthest(&y);
        if dist <= tol {
            last_step = 0.0;
            break;
        }
        let frac = (1.0 / (k as f64 + 1.0)).min(1.0);
        let stepped = space.combine_unchecked(&y, &window.points[idx], frac);
        let projected = set.project(space, &stepped)?;
        last_step = space.distance_unchecked(&y, &projected);
        y = projected;
    }
    let radius = farthest(&y).1;
    Ok(CenterResult {
        center: y,
        radius,
        residual: last_step,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowCenter {
    pub policy: (usize, usize, usize),
    pub center: SpacePoint,
    pub radius: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaDiagnosticReport {
    pub windows: Vec<WindowCenter>,
    /// Max pairwise distance among the window centers.
    pub spread: f64,
    /// Fixed-point residual `d(c, T c)` of the consensus center.
    pub residual: f64,
    pub bounded: bool,
    pub verdict: String,
    pub note: String,
}

pub const DELTA_CONSISTENT: &str = "consistent-with-delta-convergence";
pub const DELTA_NOT_CONSISTENT: &str = "not-consistent";

/// Computes asymptotic centers over several (strided) tail windows as
/// subsequence surrogates and checks that they agree and that the consensus
/// center is fixed under the operator. A finite diagnostic: it samples
/// windows, it does not quantify over all subsequences.
pub fn delta_convergence_diagnostic(
    space: &Space,
    trace: &IterationTrace,
    op: &Operator,
    set: &ConvexSet,
    policies: &[WindowPolicy],
    tol: f64,
) -> Result<DeltaDiagnosticReport> {
    let n = trace.points.len();
    if n < 4 {
        return Err(Error::InsufficientData("trace too short for windows".into()));
    }
    let default_policies = vec![
        WindowPolicy { start: None, end: None, stride: 1 },
        WindowPolicy { start: None, end: None, stride: 2 },
        WindowPolicy { start: None, end: None, stride: 3 },
    ];
    let policies = if policies.is_empty() {
        &default_policies
    } else {
        policies
    };

    // boundedness surrogate: the orbit must not drift at a sustained rate
    let x0 = &trace.points[0];
    let mut max_from_start: f64 = 0.0;
    for p in &trace.points {
        max_from_start = max_from_start.max(space.distance_unchecked(x0, p));
    }
    let tail_growth = space.distance_unchecked(x0, &trace.points[n - 1])
        - space.distance_unchecked(x0, &trace.points[n / 2]);
    let bounded = tail_growth <= (n as f64 / 2.0) * 1e-6 || max_from_start <= tol;

    let mut windows = Vec::new();
    let mut centers = Vec::new();
    for pol in policies {
        let start = pol.start.unwrap_or(n / 2);
        let end = pol.end.unwrap_or(n);
        let w = SequenceWindow::from_trace(trace, start, end, pol.stride)?;
        let c = asymptotic_center(space, &w, set, tol)?;
        windows.push(WindowCenter {
            policy: w.policy,
            center: c.center.clone(),
            radius: c.radius,
        });
        centers.push(c.center);
    }

    let mut spread: f64 = 0.0;
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            spread = spread.max(space.distance_unchecked(&centers[i], &centers[j]));
        }
    }
    let consensus = &centers[0];
    let residual = match op.apply(space, consensus) {
        Ok(tc) => space.distance_unchecked(consensus, &tc),
        Err(_) => f64::INFINITY,
    };

    let consistent = bounded && spread <= tol && residual <= tol;
    Ok(DeltaDiagnosticReport {
        windows,
        spread,
        residual,
        bounded,
        verdict: if consistent {
            DELTA_CONSISTENT.into()
        } else {
            DELTA_NOT_CONSISTENT.into()
        },
        note: "finite diagnostic over sampled windows; not a certification over all subsequences"
            .into(),
    })
}
