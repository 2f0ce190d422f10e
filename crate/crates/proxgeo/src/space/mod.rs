//! Geodesic model spaces and the metric/convexity kernel every other module
//! builds on.
//!
//! A [`Space`] is a metric space together with a convexity mapping
//! `W(x, y, lambda)` ([`Space::convex_combine`]) satisfying the Takahashi
//! axioms W1-W4. Four concrete models are provided:
//!
//! * Euclidean R^n,
//! * the hyperbolic plane in the hyperboloid (Minkowski) model,
//! * finite metric trees,
//! * the l-infinity plane with coordinatewise linear interpolation, a
//!   W-hyperbolic space that is *not* CAT(0) and serves as a negative
//!   control for curvature-sensitive results.
//!
//! Points are plain immutable values; every operation is a pure function, so
//! concurrent use needs no coordination.

mod hyperboloid;
mod tree;

pub use tree::{TreeDescription, TreeSpace};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for point validation and point equality, in metric units.
pub const DEFAULT_TOL: f64 = 1e-9;

/// A point of one of the model spaces.
///
/// The payload is model specific: coordinate vectors for the Euclidean and
/// l-infinity planes, a Minkowski vector on the upper hyperboloid sheet for
/// the hyperbolic plane, and an (edge, offset) position for metric trees.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(try_from = "PointWire", into = "PointWire")]
pub enum SpacePoint {
    Euclidean(Vec<f64>),
    Linf(Vec<f64>),
    Hyperboloid(Vec<f64>),
    Tree { edge: usize, offset: f64 },
}

impl SpacePoint {
    pub fn euclidean(coords: impl Into<Vec<f64>>) -> Self {
        SpacePoint::Euclidean(coords.into())
    }

    pub fn linf(coords: impl Into<Vec<f64>>) -> Self {
        SpacePoint::Linf(coords.into())
    }

    pub fn hyperboloid(coords: impl Into<Vec<f64>>) -> Self {
        SpacePoint::Hyperboloid(coords.into())
    }

    pub fn tree(edge: usize, offset: f64) -> Self {
        SpacePoint::Tree { edge, offset }
    }

    pub fn coords(&self) -> Option<&[f64]> {
        match self {
            SpacePoint::Euclidean(c) | SpacePoint::Linf(c) | SpacePoint::Hyperboloid(c) => Some(c),
            SpacePoint::Tree { .. } => None,
        }
    }
}

/// Wire format: coordinate points carry their model tag, tree points are
/// `{"edge": id, "offset": t}`.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PointWire {
    Coords { model: String, coords: Vec<f64> },
    Tree { edge: usize, offset: f64 },
}

impl From<SpacePoint> for PointWire {
    fn from(p: SpacePoint) -> Self {
        match p {
            SpacePoint::Euclidean(coords) => PointWire::Coords {
                model: "euclidean".into(),
                coords,
            },
            SpacePoint::Linf(coords) => PointWire::Coords {
                model: "linf".into(),
                coords,
            },
            SpacePoint::Hyperboloid(coords) => PointWire::Coords {
                model: "hyperboloid".into(),
                coords,
            },
            SpacePoint::Tree { edge, offset } => PointWire::Tree { edge, offset },
        }
    }
}

impl TryFrom<PointWire> for SpacePoint {
    type Error = String;

    fn try_from(w: PointWire) -> std::result::Result<Self, String> {
        match w {
            PointWire::Coords { model, coords } => match model.as_str() {
                "euclidean" => Ok(SpacePoint::Euclidean(coords)),
                "linf" => Ok(SpacePoint::Linf(coords)),
                "hyperboloid" => Ok(SpacePoint::Hyperboloid(coords)),
                other => Err(format!("unknown point model `{other}`")),
            },
            PointWire::Tree { edge, offset } => Ok(SpacePoint::Tree { edge, offset }),
        }
    }
}

/// JSON descriptor for a space: `{"model": "euclidean"|"hyperboloid"|"tree"|"linf",
/// "dim": n, "tree": {...}}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SpaceConfig {
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<TreeDescription>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

#[derive(Clone, Debug)]
pub enum SpaceKind {
    Euclidean { dim: usize },
    Linf { dim: usize },
    Hyperboloid,
    Tree(TreeSpace),
}

/// A geodesic model space: metric, convexity mapping and validation tolerance.
#[derive(Clone, Debug)]
pub struct Space {
    kind: SpaceKind,
    tol: f64,
}

impl Space {
    pub fn euclidean(dim: usize) -> Result<Space> {
        if dim < 1 {
            return Err(Error::InvalidConfig("dimension must be at least 1".into()));
        }
        Ok(Space {
            kind: SpaceKind::Euclidean { dim },
            tol: DEFAULT_TOL,
        })
    }

    pub fn linf_plane(dim: usize) -> Result<Space> {
        if dim < 1 {
            return Err(Error::InvalidConfig("dimension must be at least 1".into()));
        }
        Ok(Space {
            kind: SpaceKind::Linf { dim },
            tol: DEFAULT_TOL,
        })
    }

    /// The hyperbolic plane in the hyperboloid model (curvature -1).
    pub fn hyperbolic_plane() -> Space {
        Space {
            kind: SpaceKind::Hyperboloid,
            tol: DEFAULT_TOL,
        }
    }

    pub fn tree(desc: TreeDescription) -> Result<Space> {
        Ok(Space {
            kind: SpaceKind::Tree(TreeSpace::build(desc)?),
            tol: DEFAULT_TOL,
        })
    }

    pub fn with_tol(mut self, tol: f64) -> Space {
        self.tol = tol;
        self
    }

    /// Builds a space from its JSON descriptor.
    pub fn from_config(cfg: &SpaceConfig) -> Result<Space> {
        let mut space = match cfg.model.as_str() {
            "euclidean" => Space::euclidean(cfg.dim.ok_or_else(|| {
                Error::InvalidConfig("euclidean space requires `dim`".into())
            })?)?,
            "linf" => Space::linf_plane(cfg.dim.ok_or_else(|| {
                Error::InvalidConfig("linf space requires `dim`".into())
            })?)?,
            "hyperboloid" => {
                if let Some(d) = cfg.dim {
                    if d != 2 {
                        return Err(Error::InvalidConfig(
                            "only the hyperbolic plane (dim 2) is supported".into(),
                        ));
                    }
                }
                Space::hyperbolic_plane()
            }
            "tree" => Space::tree(cfg.tree.clone().ok_or_else(|| {
                Error::InvalidConfig("tree space requires `tree`".into())
            })?)?,
            other => {
                return Err(Error::InvalidConfig(format!("unknown space model `{other}`")));
            }
        };
        if let Some(t) = cfg.tol {
            if !(t > 0.0) {
                return Err(Error::InvalidConfig("tolerance must be positive".into()));
            }
            space.tol = t;
        }
        Ok(space)
    }

    /// The JSON descriptor of this space.
    pub fn config(&self) -> SpaceConfig {
        let (model, dim, tree) = match &self.kind {
            SpaceKind::Euclidean { dim } => ("euclidean", Some(*dim), None),
            SpaceKind::Linf { dim } => ("linf", Some(*dim), None),
            SpaceKind::Hyperboloid => ("hyperboloid", Some(2), None),
            SpaceKind::Tree(t) => ("tree", None, Some(t.description().clone())),
        };
        SpaceConfig {
            model: model.into(),
            dim,
            tree,
            tol: Some(self.tol),
        }
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn model_name(&self) -> &'static str {
        match &self.kind {
            SpaceKind::Euclidean { .. } => "euclidean",
            SpaceKind::Linf { .. } => "linf",
            SpaceKind::Hyperboloid => "hyperboloid",
            SpaceKind::Tree(_) => "tree",
        }
    }

    /// Whether the space claims the CN inequality of Bruhat-Tits, i.e. is
    /// CAT(0). Downstream certificates that are CAT(0)-specific refuse to
    /// issue on spaces where this is false.
    pub fn claims_cn(&self) -> bool {
        !matches!(self.kind, SpaceKind::Linf { .. })
    }

    /// Whether geodesic segments between distinct points are unique. False
    /// only for the l-infinity plane, whose convexity mapping is a fixed
    /// choice among many geodesics.
    pub fn uniquely_geodesic(&self) -> bool {
        !matches!(self.kind, SpaceKind::Linf { .. })
    }

    pub fn tree_space(&self) -> Option<&TreeSpace> {
        match &self.kind {
            SpaceKind::Tree(t) => Some(t),
            _ => None,
        }
    }

    pub fn validate_point(&self, p: &SpacePoint) -> Result<()> {
        match (&self.kind, p) {
            (SpaceKind::Euclidean { dim }, SpacePoint::Euclidean(c)) => {
                if c.len() != *dim {
                    return Err(Error::PointNotInSpace(format!(
                        "expected {dim} coordinates, got {}",
                        c.len()
                    )));
                }
                if c.iter().any(|v| !v.is_finite()) {
                    return Err(Error::PointNotInSpace("non-finite coordinate".into()));
                }
                Ok(())
            }
            (SpaceKind::Linf { dim }, SpacePoint::Linf(c)) => {
                if c.len() != *dim {
                    return Err(Error::PointNotInSpace(format!(
                        "expected {dim} coordinates, got {}",
                        c.len()
                    )));
                }
                if c.iter().any(|v| !v.is_finite()) {
                    return Err(Error::PointNotInSpace("non-finite coordinate".into()));
                }
                Ok(())
            }
            (SpaceKind::Hyperboloid, SpacePoint::Hyperboloid(c)) => {
                hyperboloid::validate(c, self.tol)
            }
            (SpaceKind::Tree(t), SpacePoint::Tree { edge, offset }) => {
                t.validate(*edge, *offset, self.tol)
            }
            _ => Err(Error::PointNotInSpace(format!(
                "payload {:?} does not match model `{}`",
                p,
                self.model_name()
            ))),
        }
    }

    /// The metric `d(x, y)`.
    pub fn distance(&self, x: &SpacePoint, y: &SpacePoint) -> Result<f64> {
        self.validate_point(x)?;
        self.validate_point(y)?;
        Ok(self.distance_unchecked(x, y))
    }

    /// Distance without re-validating the points; callers in hot loops use
    /// this after validating their inputs once.
    pub(crate) fn distance_unchecked(&self, x: &SpacePoint, y: &SpacePoint) -> f64 {
        match (&self.kind, x, y) {
            (SpaceKind::Euclidean { .. }, SpacePoint::Euclidean(a), SpacePoint::Euclidean(b)) => {
                a.iter()
                    .zip(b)
                    .map(|(p, q)| (p - q) * (p - q))
                    .sum::<f64>()
                    .sqrt()
            }
            (SpaceKind::Linf { .. }, SpacePoint::Linf(a), SpacePoint::Linf(b)) => a
                .iter()
                .zip(b)
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max),
            (SpaceKind::Hyperboloid, SpacePoint::Hyperboloid(a), SpacePoint::Hyperboloid(b)) => {
                hyperboloid::distance(a, b)
            }
            (SpaceKind::Tree(t), SpacePoint::Tree { edge: e1, offset: t1 }, SpacePoint::Tree { edge: e2, offset: t2 }) => {
                t.distance(*e1, *t1, *e2, *t2)
            }
            _ => f64::NAN,
        }
    }

    /// The convexity mapping `W(x, y, lambda)`: the point of the geodesic
    /// segment `[x, y]` at distance `lambda * d(x, y)` from `x`.
    pub fn convex_combine(&self, x: &SpacePoint, y: &SpacePoint, lambda: f64) -> Result<SpacePoint> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!(
                "lambda must lie in [0, 1], got {lambda}"
            )));
        }
        self.validate_point(x)?;
        self.validate_point(y)?;
        Ok(self.combine_unchecked(x, y, lambda))
    }

    pub(crate) fn combine_unchecked(&self, x: &SpacePoint, y: &SpacePoint, lambda: f64) -> SpacePoint {
        if lambda == 0.0 {
            return x.clone();
        }
        if lambda == 1.0 {
            return y.clone();
        }
        match (&self.kind, x, y) {
            (SpaceKind::Euclidean { .. }, SpacePoint::Euclidean(a), SpacePoint::Euclidean(b)) => {
                SpacePoint::Euclidean(lerp(a, b, lambda))
            }
            (SpaceKind::Linf { .. }, SpacePoint::Linf(a), SpacePoint::Linf(b)) => {
                SpacePoint::Linf(lerp(a, b, lambda))
            }
            (SpaceKind::Hyperboloid, SpacePoint::Hyperboloid(a), SpacePoint::Hyperboloid(b)) => {
                SpacePoint::Hyperboloid(hyperboloid::combine(a, b, lambda))
            }
            (SpaceKind::Tree(t), SpacePoint::Tree { edge: e1, offset: t1 }, SpacePoint::Tree { edge: e2, offset: t2 }) => {
                let (edge, offset) = t.combine(*e1, *t1, *e2, *t2, lambda);
                SpacePoint::Tree { edge, offset }
            }
            _ => x.clone(),
        }
    }

    /// Whether `y` lies between `x` and `z`: the three points are pairwise
    /// distinct and `d(x, z) = d(x, y) + d(y, z)` within `tol`.
    pub fn lies_between(
        &self,
        x: &SpacePoint,
        y: &SpacePoint,
        z: &SpacePoint,
        tol: f64,
    ) -> Result<bool> {
        let dxy = self.distance(x, y)?;
        let dyz = self.distance(y, z)?;
        let dxz = self.distance(x, z)?;
        if dxy <= tol || dyz <= tol || dxz <= tol {
            return Err(Error::InvalidParameter(
                "betweenness requires pairwise distinct points".into(),
            ));
        }
        Ok((dxz - dxy - dyz).abs() <= tol)
    }

    /// Points are equal when their distance is at most the space tolerance.
    pub fn points_equal(&self, x: &SpacePoint, y: &SpacePoint) -> Result<bool> {
        Ok(self.distance(x, y)? <= self.tol)
    }

    /// Canonical representative of a point. On trees a point sitting at a
    /// vertex may be written on any incident edge; the canonical form pins it
    /// to the lowest incident edge id. Other models are untouched.
    pub fn canonical(&self, p: &SpacePoint) -> Result<SpacePoint> {
        self.validate_point(p)?;
        match (&self.kind, p) {
            (SpaceKind::Tree(t), SpacePoint::Tree { edge, offset }) => {
                let (e, o) = t.canonical(*edge, *offset, self.tol);
                Ok(SpacePoint::Tree { edge: e, offset: o })
            }
            _ => Ok(p.clone()),
        }
    }

    /// Extends the geodesic that runs from `from` through `through` by
    /// `extra` metric units beyond `through`. Returns `None` when the space
    /// cannot extend that far (walking off a leaf of a tree). At tree
    /// branch vertices the lowest-id outgoing edge is taken.
    pub(crate) fn extend_geodesic(
        &self,
        from: &SpacePoint,
        through: &SpacePoint,
        extra: f64,
    ) -> Option<SpacePoint> {
        let d = self.distance_unchecked(from, through);
        if d <= self.tol || extra < 0.0 {
            return None;
        }
        match (&self.kind, from, through) {
            (SpaceKind::Euclidean { .. }, SpacePoint::Euclidean(a), SpacePoint::Euclidean(b)) => {
                Some(SpacePoint::Euclidean(lerp(a, b, (d + extra) / d)))
            }
            (SpaceKind::Linf { .. }, SpacePoint::Linf(a), SpacePoint::Linf(b)) => {
                Some(SpacePoint::Linf(lerp(a, b, (d + extra) / d)))
            }
            (SpaceKind::Hyperboloid, SpacePoint::Hyperboloid(a), SpacePoint::Hyperboloid(b)) => {
                Some(SpacePoint::Hyperboloid(hyperboloid::extend(a, b, d, extra)))
            }
            (SpaceKind::Tree(t), SpacePoint::Tree { edge: e1, offset: t1 }, SpacePoint::Tree { edge: e2, offset: t2 }) => {
                t.extend(*e1, *t1, *e2, *t2, extra)
                    .map(|(edge, offset)| SpacePoint::Tree { edge, offset })
            }
            _ => None,
        }
    }

    /// Dimension of the coordinate models; `None` for trees.
    pub fn dim(&self) -> Option<usize> {
        match &self.kind {
            SpaceKind::Euclidean { dim } | SpaceKind::Linf { dim } => Some(*dim),
            SpaceKind::Hyperboloid => Some(2),
            SpaceKind::Tree(_) => None,
        }
    }
}

fn lerp(a: &[f64], b: &[f64], lambda: f64) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(p, q)| p + lambda * (q - p))
        .collect()
}

/// Arc-length parameter in `[0, d]` of the point of the hyperboloid segment
/// `[a, b]` (of length `d`) closest to `x`.
pub(crate) fn hyperboloid_closest_parameter(
    a: &SpacePoint,
    b: &SpacePoint,
    d: f64,
    x: &SpacePoint,
) -> f64 {
    match (a, b, x) {
        (SpacePoint::Hyperboloid(p), SpacePoint::Hyperboloid(q), SpacePoint::Hyperboloid(z)) => {
            hyperboloid::closest_parameter(p, q, d, z)
        }
        _ => 0.0,
    }
}

/// Riemannian log map on the hyperboloid; zero vector for coincident points.
pub(crate) fn hyperboloid_log(p: &SpacePoint, q: &SpacePoint) -> Vec<f64> {
    match (p, q) {
        (SpacePoint::Hyperboloid(a), SpacePoint::Hyperboloid(b)) => hyperboloid::log_map(a, b),
        _ => Vec::new(),
    }
}

/// Exponential map on the hyperboloid.
pub(crate) fn hyperboloid_exp(p: &SpacePoint, v: &[f64]) -> SpacePoint {
    match p {
        SpacePoint::Hyperboloid(a) => SpacePoint::Hyperboloid(hyperboloid::exp_map(a, v)),
        _ => p.clone(),
    }
}

/// Minkowski bilinear form, exposed for tangent-space arithmetic.
pub(crate) fn minkowski_form(p: &[f64], q: &[f64]) -> f64 {
    hyperboloid::minkowski(p, q)
}

/// Chained-interpolation parameter: when `y = W(x, z, lambda)` and
/// `z = W(x, w, alpha)`, the point `z` can be rewritten on the segment
/// `[y, w]` as `z = W(y, w, mu)` with `mu = (1-lambda) alpha / (1 - alpha lambda)`.
/// Both parameters must lie strictly inside (0, 1).
pub fn chain_parameter(lambda: f64, alpha: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda must lie in (0, 1), got {lambda}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok((1.0 - lambda) * alpha / (1.0 - alpha * lambda))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tripod() -> Space {
        Space::tree(TreeDescription {
            edges: vec![(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)],
            root: Some(0),
        })
        .unwrap()
    }

    #[test]
    fn euclidean_distance_pythagoras() {
        let s = Space::euclidean(2).unwrap();
        let d = s
            .distance(&SpacePoint::euclidean([0.0, 0.0]), &SpacePoint::euclidean([3.0, 4.0]))
            .unwrap();
        assert!((d - 5.0).abs() < 1e-12);
    }

    #[test]
    fn hyperboloid_distance_matches_minkowski_oracle() {
        let s = Space::hyperbolic_plane();
        let p = SpacePoint::hyperboloid([1.0, 0.0, 0.0]);
        let q = SpacePoint::hyperboloid([1.0f64.cosh(), 1.0f64.sinh(), 0.0]);
        let d = s.distance(&p, &q).unwrap();
        // oracle: acosh of the Minkowski bilinear form
        let (a, b) = (p.coords().unwrap(), q.coords().unwrap());
        let oracle = (a[0] * b[0] - a[1] * b[1] - a[2] * b[2]).acosh();
        assert!((d - 1.0).abs() < 1e-12, "d = {d}");
        assert!((d - oracle).abs() < 1e-12);
    }

    #[test]
    fn hyperboloid_distance_stable_near_zero() {
        let s = Space::hyperbolic_plane();
        let p = SpacePoint::hyperboloid([1.0, 0.0, 0.0]);
        // point at tiny distance t along a geodesic
        let t: f64 = 3e-9;
        let q = SpacePoint::hyperboloid([t.cosh(), t.sinh(), 0.0]);
        let d = s.distance(&p, &q).unwrap();
        assert!((d - t).abs() < 1e-15, "d = {d:e}");
    }

    #[test]
    fn tripod_leaf_to_leaf_goes_through_branch_point() {
        let s = tripod();
        // leaves sit at offset 1 of their legs
        let la = SpacePoint::tree(0, 1.0);
        let lb = SpacePoint::tree(1, 1.0);
        let d = s.distance(&la, &lb).unwrap();
        assert!((d - 2.0).abs() < 1e-12);
    }

    #[test]
    fn combine_endpoints_are_exact() {
        let s = Space::euclidean(2).unwrap();
        let x = SpacePoint::euclidean([0.3, -1.0]);
        let y = SpacePoint::euclidean([2.0, 5.0]);
        assert_eq!(s.convex_combine(&x, &y, 0.0).unwrap(), x);
        assert_eq!(s.convex_combine(&x, &y, 1.0).unwrap(), y);
    }

    #[test]
    fn euclidean_combine_is_linear_interpolation() {
        let s = Space::euclidean(2).unwrap();
        let z = s
            .convex_combine(
                &SpacePoint::euclidean([0.0, 0.0]),
                &SpacePoint::euclidean([2.0, 0.0]),
                0.25,
            )
            .unwrap();
        assert_eq!(z, SpacePoint::euclidean([0.5, 0.0]));
    }

    #[test]
    fn hyperboloid_midpoint_example() {
        let s = Space::hyperbolic_plane();
        let p = SpacePoint::hyperboloid([1.0, 0.0, 0.0]);
        let q = SpacePoint::hyperboloid([1.0f64.cosh(), 1.0f64.sinh(), 0.0]);
        let m = s.convex_combine(&p, &q, 0.5).unwrap();
        let c = m.coords().unwrap();
        assert!((c[0] - 0.5f64.cosh()).abs() < 1e-12);
        assert!((c[1] - 0.5f64.sinh()).abs() < 1e-12);
        assert!(c[2].abs() < 1e-12);
    }

    #[test]
    fn hyperboloid_midpoint_against_distance_equation_oracle() {
        // oracle: search the distance equations d(p, z) = lambda d and
        // d(q, z) = (1 - lambda) d over a grid of hyperboloid points
        let s = Space::hyperbolic_plane();
        let p = SpacePoint::hyperboloid([1.0, 0.0, 0.0]);
        let q = SpacePoint::hyperboloid([1.5f64.cosh(), 1.5f64.sinh() * 0.6, 1.5f64.sinh() * 0.8]);
        let lambda = 0.3;
        let d = s.distance(&p, &q).unwrap();
        let z = s.convex_combine(&p, &q, lambda).unwrap();

        // the combine point solves both distance equations exactly
        let e1 = (s.distance(&p, &z).unwrap() - lambda * d).abs();
        let e2 = (s.distance(&q, &z).unwrap() - (1.0 - lambda) * d).abs();
        assert!(e1 < 1e-10 && e2 < 1e-10, "distance equations violated: {e1:e}, {e2:e}");

        // and every grid point nearly solving them clusters around z: the two
        // distance circles meet tangentially, so a residual delta only pins
        // the solution to O(sqrt(delta))
        let n = 400;
        let mut near_solutions = 0;
        for i in 0..n {
            for j in 0..n {
                let r = 2.0 * (i as f64 + 0.5) / n as f64;
                let th = 2.0 * std::f64::consts::PI * (j as f64) / n as f64;
                let cand = SpacePoint::hyperboloid(vec![
                    r.cosh(),
                    r.sinh() * th.cos(),
                    r.sinh() * th.sin(),
                ]);
                let e1 = (s.distance(&p, &cand).unwrap() - lambda * d).abs();
                let e2 = (s.distance(&q, &cand).unwrap() - (1.0 - lambda) * d).abs();
                if e1 + e2 < 0.006 {
                    near_solutions += 1;
                    assert!(
                        s.distance(&z, &cand).unwrap() < 0.12,
                        "near-solution far from the combine point: not unique?"
                    );
                }
            }
        }
        assert!(near_solutions > 0, "oracle grid missed the solution region");
    }

    #[test]
    fn tree_combine_walks_through_branch() {
        let s = tripod();
        let la = SpacePoint::tree(0, 1.0);
        let lb = SpacePoint::tree(1, 1.0);
        // quarter of the way from leaf a to leaf b: still on leg a
        let z = s.convex_combine(&la, &lb, 0.25).unwrap();
        assert!((s.distance(&la, &z).unwrap() - 0.5).abs() < 1e-12);
        assert!((s.distance(&lb, &z).unwrap() - 1.5).abs() < 1e-12);
        // three quarters: on leg b
        let z = s.convex_combine(&la, &lb, 0.75).unwrap();
        assert!((s.distance(&la, &z).unwrap() - 1.5).abs() < 1e-12);
        match z {
            SpacePoint::Tree { edge, .. } => assert_eq!(edge, 1),
            _ => panic!("expected tree point"),
        }
    }

    #[test]
    fn lies_between_examples() {
        let s = Space::euclidean(2).unwrap();
        let o = SpacePoint::euclidean([0.0, 0.0]);
        let m = SpacePoint::euclidean([1.0, 0.0]);
        let e = SpacePoint::euclidean([2.0, 0.0]);
        assert!(s.lies_between(&o, &m, &e, 1e-9).unwrap());
        let off = SpacePoint::euclidean([1.0, 1.0]);
        assert!(!s.lies_between(&o, &off, &e, 1e-9).unwrap());

        let t = tripod();
        let branch = SpacePoint::tree(0, 0.0);
        let la = SpacePoint::tree(0, 1.0);
        let lb = SpacePoint::tree(1, 1.0);
        assert!(t.lies_between(&la, &branch, &lb, 1e-9).unwrap());
    }

    #[test]
    fn lies_between_rejects_coincident_points() {
        let s = Space::euclidean(2).unwrap();
        let o = SpacePoint::euclidean([0.0, 0.0]);
        let e = SpacePoint::euclidean([2.0, 0.0]);
        assert!(s.lies_between(&o, &o, &e, 1e-9).is_err());
    }

    #[test]
    fn chain_parameter_values() {
        assert!((chain_parameter(0.5, 0.5).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        // degenerate limit: lambda -> 0 gives mu -> alpha
        assert!((chain_parameter(1e-12, 0.7).unwrap() - 0.7).abs() < 1e-9);
        let mu = chain_parameter(0.9, 0.1).unwrap();
        assert!((mu - 0.01 / 0.91).abs() < 1e-12);
        assert!(chain_parameter(0.0, 0.5).is_err());
        assert!(chain_parameter(0.5, 1.0).is_err());
    }

    #[test]
    fn chain_parameter_reconstruction_euclidean() {
        let s = Space::euclidean(2).unwrap();
        let x = SpacePoint::euclidean([0.0, 0.0]);
        let w = SpacePoint::euclidean([4.0, 2.0]);
        for &(lambda, alpha) in &[(0.5, 0.5), (0.9, 0.1), (0.3, 0.8)] {
            let z = s.convex_combine(&x, &w, alpha).unwrap();
            let y = s.convex_combine(&x, &z, lambda).unwrap();
            let mu = chain_parameter(lambda, alpha).unwrap();
            let z2 = s.convex_combine(&y, &w, mu).unwrap();
            assert!(s.distance(&z, &z2).unwrap() < 1e-12);
        }
    }

    #[test]
    fn canonical_tree_vertex_uses_lowest_edge() {
        let s = tripod();
        // branch point written on leg 2
        let p = SpacePoint::tree(2, 0.0);
        let c = s.canonical(&p).unwrap();
        assert_eq!(c, SpacePoint::tree(0, 0.0));
        // leaf of leg 1 stays on leg 1
        let leaf = SpacePoint::tree(1, 1.0);
        assert_eq!(s.canonical(&leaf).unwrap(), SpacePoint::tree(1, 1.0));
    }

    #[test]
    fn point_serialization_round_trip() {
        let p = SpacePoint::hyperboloid([1.0, 0.0, 0.0]);
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"{"model":"hyperboloid","coords":[1.0,0.0,0.0]}"#);
        let back: SpacePoint = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);

        let t = SpacePoint::tree(3, 0.25);
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(json, r#"{"edge":3,"offset":0.25}"#);
        let back: SpacePoint = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn make_space_from_config() {
        let cfg: SpaceConfig =
            serde_json::from_str(r#"{"model":"euclidean","dim":2}"#).unwrap();
        let s = Space::from_config(&cfg).unwrap();
        let d = s
            .distance(&SpacePoint::euclidean([0.0, 0.0]), &SpacePoint::euclidean([1.0, 0.0]))
            .unwrap();
        assert!((d - 1.0).abs() < 1e-15);

        let cfg: SpaceConfig = serde_json::from_str(r#"{"model":"linf","dim":2}"#).unwrap();
        let s = Space::from_config(&cfg).unwrap();
        let d = s
            .distance(&SpacePoint::linf([0.0, 0.0]), &SpacePoint::linf([1.0, 2.0]))
            .unwrap();
        assert!((d - 2.0).abs() < 1e-15);

        let cfg: SpaceConfig = serde_json::from_str(
            r#"{"model":"tree","tree":{"edges":[[0,1,1.0],[0,2,1.0],[0,3,1.0]]}}"#,
        )
        .unwrap();
        let s = Space::from_config(&cfg).unwrap();
        for (a, b) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let d = s
                .distance(&SpacePoint::tree(a, 1.0), &SpacePoint::tree(b, 1.0))
                .unwrap();
            assert!((d - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_tree_configs_are_rejected() {
        // cycle
        assert!(Space::tree(TreeDescription {
            edges: vec![(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)],
            root: None,
        })
        .is_err());
        // disconnected
        assert!(Space::tree(TreeDescription {
            edges: vec![(0, 1, 1.0), (2, 3, 1.0)],
            root: None,
        })
        .is_err());
        // nonpositive length
        assert!(Space::tree(TreeDescription {
            edges: vec![(0, 1, 0.0)],
            root: None,
        })
        .is_err());
        assert!(Space::euclidean(0).is_err());
    }

    #[test]
    fn invalid_hyperboloid_point_rejected() {
        let s = Space::hyperbolic_plane();
        let bad = SpacePoint::hyperboloid([1.0, 0.5, 0.0]);
        assert!(s.validate_point(&bad).is_err());
        let wrong_sheet = SpacePoint::hyperboloid([-1.0, 0.0, 0.0]);
        assert!(s.validate_point(&wrong_sheet).is_err());
    }

    #[test]
    fn mismatched_payload_rejected() {
        let s = Space::euclidean(2).unwrap();
        assert!(s.distance(&SpacePoint::tree(0, 0.0), &SpacePoint::euclidean([0.0, 0.0])).is_err());
    }
}
