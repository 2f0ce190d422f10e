//! Closed convex subsets of the model spaces and the metric projection onto
//! them. Projection is exact for every supported kind; on the l-infinity
//! plane it is refused because nearest points there are not unique.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{Space, SpaceKind, SpacePoint};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ConvexSet {
    Ball {
        center: SpacePoint,
        radius: f64,
    },
    /// The geodesic segment between two points (degenerate segments with
    /// equal endpoints are allowed and act as singletons).
    Segment {
        a: SpacePoint,
        b: SpacePoint,
    },
    /// Euclidean halfspace `{x : <normal, x> <= offset}`.
    Halfspace {
        normal: Vec<f64>,
        offset: f64,
    },
    /// Union of all edges of a tree whose endpoints both belong to the
    /// vertex set; the set must induce a connected subgraph.
    Subtree {
        vertices: Vec<usize>,
    },
    Whole,
}

impl ConvexSet {
    pub fn ball(center: SpacePoint, radius: f64) -> Self {
        ConvexSet::Ball { center, radius }
    }

    pub fn segment(a: SpacePoint, b: SpacePoint) -> Self {
        ConvexSet::Segment { a, b }
    }

    pub fn validate(&self, space: &Space) -> Result<()> {
        match self {
            ConvexSet::Ball { center, radius } => {
                space.validate_point(center)?;
                if !(*radius > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "ball radius must be positive, got {radius}"
                    )));
                }
                Ok(())
            }
            ConvexSet::Segment { a, b } => {
                space.validate_point(a)?;
                space.validate_point(b)
            }
            ConvexSet::Halfspace { normal, offset } => {
                if !matches!(space.kind(), SpaceKind::Euclidean { .. }) {
                    return Err(Error::Unsupported(
                        "halfspaces are Euclidean-only".into(),
                    ));
                }
                if normal.len() != space.dim().unwrap_or(0) {
                    return Err(Error::InvalidConfig("normal dimension mismatch".into()));
                }
                let n2: f64 = normal.iter().map(|v| v * v).sum();
                if !(n2 > 0.0) || !offset.is_finite() {
                    return Err(Error::InvalidConfig("halfspace normal must be nonzero".into()));
                }
                Ok(())
            }
            ConvexSet::Subtree { vertices } => {
                let tree = space.tree_space().ok_or_else(|| {
                    Error::Unsupported("subtree sets are tree-only".into())
                })?;
                if !tree.subtree_connected(vertices) {
                    return Err(Error::InvalidConfig(
                        "subtree vertex set must induce a nonempty connected subgraph".into(),
                    ));
                }
                Ok(())
            }
            ConvexSet::Whole => Ok(()),
        }
    }

    /// Distance from `x` to the set.
    pub fn distance_to(&self, space: &Space, x: &SpacePoint) -> Result<f64> {
        space.validate_point(x)?;
        match self {
            ConvexSet::Whole => Ok(0.0),
            ConvexSet::Ball { center, radius } => {
                Ok((space.distance(center, x)? - radius).max(0.0))
            }
            ConvexSet::Halfspace { normal, offset } => {
                let c = x
                    .coords()
                    .ok_or_else(|| Error::Unsupported("halfspaces are Euclidean-only".into()))?;
                let dot: f64 = normal.iter().zip(c).map(|(n, v)| n * v).sum();
                let n: f64 = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
                Ok(((dot - offset) / n).max(0.0))
            }
            ConvexSet::Segment { a, b } => self.segment_distance(space, a, b, x),
            ConvexSet::Subtree { vertices } => {
                let tree = space.tree_space().ok_or_else(|| {
                    Error::Unsupported("subtree sets are tree-only".into())
                })?;
                let (edge, offset) = match x {
                    SpacePoint::Tree { edge, offset } => (*edge, *offset),
                    _ => return Err(Error::PointNotInSpace("expected a tree point".into())),
                };
                if tree.edge_in_subtree(edge, vertices) {
                    return Ok(0.0);
                }
                Ok(vertices
                    .iter()
                    .map(|&v| tree.point_to_vertex(edge, offset, v))
                    .fold(f64::INFINITY, f64::min))
            }
        }
    }

    fn segment_distance(
        &self,
        space: &Space,
        a: &SpacePoint,
        b: &SpacePoint,
        x: &SpacePoint,
    ) -> Result<f64> {
        if space.uniquely_geodesic() {
            let p = self.project(space, x)?;
            return space.distance(x, &p);
        }
        // l-infinity plane: the chosen geodesic is coordinatewise linear and
        // t -> d(x, (1-t)a + t b) is convex, so golden-section works.
        let f = |t: f64| {
            let z = space.combine_unchecked(a, b, t);
            space.distance_unchecked(x, &z)
        };
        Ok(golden_min(f, 0.0, 1.0, 1e-12).1)
    }

    /// Membership within `tol` of the set distance.
    pub fn contains(&self, space: &Space, x: &SpacePoint, tol: f64) -> Result<bool> {
        Ok(self.distance_to(space, x)? <= tol)
    }

    /// The metric projection: the unique nearest point of the set. Requires a
    /// CAT(0) model space (Euclidean, hyperboloid, tree).
    pub fn project(&self, space: &Space, x: &SpacePoint) -> Result<SpacePoint> {
        if !space.claims_cn() {
            return Err(Error::Unsupported(
                "metric projection is refused on the l-infinity plane (nearest points are not unique)"
                    .into(),
            ));
        }
        space.validate_point(x)?;
        match self {
            ConvexSet::Whole => Ok(x.clone()),
            ConvexSet::Ball { center, radius } => {
                let d = space.distance(center, x)?;
                if d <= *radius {
                    Ok(x.clone())
                } else {
                    Ok(space.combine_unchecked(center, x, radius / d))
                }
            }
            ConvexSet::Halfspace { normal, offset } => {
                let c = x.coords().unwrap();
                let dot: f64 = normal.iter().zip(c).map(|(n, v)| n * v).sum();
                let n2: f64 = normal.iter().map(|v| v * v).sum();
                let excess = (dot - offset).max(0.0) / n2;
                Ok(SpacePoint::Euclidean(
                    c.iter().zip(normal).map(|(v, n)| v - excess * n).collect(),
                ))
            }
            ConvexSet::Segment { a, b } => self.project_segment(space, a, b, x),
            ConvexSet::Subtree { vertices } => {
                let tree = space.tree_space().unwrap();
                let (edge, offset) = match x {
                    SpacePoint::Tree { edge, offset } => (*edge, *offset),
                    _ => return Err(Error::PointNotInSpace("expected a tree point".into())),
                };
                if tree.edge_in_subtree(edge, vertices) {
                    return Ok(x.clone());
                }
                let best = vertices
                    .iter()
                    .map(|&v| (v, tree.point_to_vertex(edge, offset, v)))
                    .min_by(|p, q| p.1.partial_cmp(&q.1).unwrap())
                    .expect("validated subtree is nonempty");
                let (e, o) = tree.vertex_position(best.0);
                Ok(SpacePoint::Tree { edge: e, offset: o })
            }
        }
    }

    fn project_segment(
        &self,
        space: &Space,
        a: &SpacePoint,
        b: &SpacePoint,
        x: &SpacePoint,
    ) -> Result<SpacePoint> {
        let len = space.distance(a, b)?;
        if len <= space.tol() {
            return Ok(a.clone());
        }
        match space.kind() {
            SpaceKind::Euclidean { .. } => {
                let (pa, pb, px) = (a.coords().unwrap(), b.coords().unwrap(), x.coords().unwrap());
                let mut dot = 0.0;
                for i in 0..pa.len() {
                    dot += (px[i] - pa[i]) * (pb[i] - pa[i]);
                }
                let t = (dot / (len * len)).clamp(0.0, 1.0);
                Ok(space.combine_unchecked(a, b, t))
            }
            SpaceKind::Hyperboloid => {
                let s = crate::space::hyperboloid_closest_parameter(a, b, len, x);
                Ok(space.combine_unchecked(a, b, s / len))
            }
            SpaceKind::Tree(tree) => {
                // in a tree the nearest point of a path is the Gromov product
                // point: at distance (d(x,a) + d(a,b) - d(x,b)) / 2 from a
                let dxa = space.distance_unchecked(x, a);
                let dxb = space.distance_unchecked(x, b);
                let t = ((dxa + len - dxb) / 2.0 / len).clamp(0.0, 1.0);
                let _ = tree;
                Ok(space.combine_unchecked(a, b, t))
            }
            SpaceKind::Linf { .. } => unreachable!("projection refused on linf above"),
        }
    }

    /// Draws a point of the set, used by audit samplers. Thin sets (segments,
    /// subtrees) are sampled directly; balls by radial sampling; halfspaces
    /// and the whole space from a box of half-width `scale` around a base
    /// point, with rejection where needed.
    pub fn sample_point<R: Rng>(&self, space: &Space, rng: &mut R, scale: f64) -> Result<SpacePoint> {
        match self {
            ConvexSet::Segment { a, b } => {
                let t: f64 = rng.gen();
                Ok(space.combine_unchecked(a, b, t))
            }
            ConvexSet::Ball { center, radius } => sample_ball(space, center, *radius, rng),
            ConvexSet::Subtree { vertices } => {
                let tree = space.tree_space().ok_or_else(|| {
                    Error::Unsupported("subtree sets are tree-only".into())
                })?;
                let edges: Vec<usize> = (0..tree.edge_count())
                    .filter(|&e| tree.edge_in_subtree(e, vertices))
                    .collect();
                if edges.is_empty() {
                    // single-vertex subtree
                    let (e, o) = tree.vertex_position(vertices[0]);
                    return Ok(SpacePoint::Tree { edge: e, offset: o });
                }
                let weights: Vec<f64> = edges.iter().map(|&e| tree.edge(e).2).collect();
                let total: f64 = weights.iter().sum();
                let mut pick = rng.gen::<f64>() * total;
                let mut chosen = edges[0];
                for (&e, &w) in edges.iter().zip(&weights) {
                    if pick <= w {
                        chosen = e;
                        break;
                    }
                    pick -= w;
                }
                let len = tree.edge(chosen).2;
                Ok(SpacePoint::Tree {
                    edge: chosen,
                    offset: rng.gen::<f64>() * len,
                })
            }
            ConvexSet::Whole | ConvexSet::Halfspace { .. } => {
                for _ in 0..10_000 {
                    let p = crate::verify::sample_default_region(space, rng, scale);
                    if self.contains(space, &p, space.tol())? {
                        return Ok(p);
                    }
                }
                Err(Error::NonConvergence {
                    best: Box::new(crate::verify::sample_default_region(space, rng, scale)),
                    achieved: f64::INFINITY,
                    requested: 0.0,
                })
            }
        }
    }
}

pub(crate) fn sample_ball<R: Rng>(
    space: &Space,
    center: &SpacePoint,
    radius: f64,
    rng: &mut R,
) -> Result<SpacePoint> {
    // draw a reference direction from the ambient sampler and move a random
    // fraction of the radius toward it (or past it, for short references)
    for _ in 0..10_000 {
        let p = crate::verify::sample_default_region(space, rng, radius * 2.0 + 1.0);
        let d = space.distance_unchecked(center, &p);
        if d <= space.tol() {
            continue;
        }
        let target = rng.gen::<f64>() * radius;
        let z = if target <= d {
            space.combine_unchecked(center, &p, target / d)
        } else {
            match space.extend_geodesic(center, &p, target - d) {
                Some(z) => z,
                None => continue,
            }
        };
        if space.distance_unchecked(center, &z) <= radius + space.tol() {
            return Ok(z);
        }
    }
    Ok(center.clone())
}

/// Golden-section minimization of a convex function on `[lo, hi]`; returns
/// `(argmin, min)`.
pub(crate) fn golden_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    (mid, f(mid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::TreeDescription;

    fn tripod() -> Space {
        Space::tree(TreeDescription {
            edges: vec![(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)],
            root: Some(0),
        })
        .unwrap()
    }

    #[test]
    fn ball_membership() {
        let s = Space::euclidean(2).unwrap();
        let ball = ConvexSet::ball(SpacePoint::euclidean([0.0, 0.0]), 1.0);
        assert!(ball.contains(&s, &SpacePoint::euclidean([0.5, 0.0]), 0.0).unwrap());
        assert!(!ball.contains(&s, &SpacePoint::euclidean([2.0, 0.0]), 0.0).unwrap());
    }

    #[test]
    fn subtree_contains_leg_midpoint() {
        let s = tripod();
        let set = ConvexSet::Subtree { vertices: vec![0, 1] };
        set.validate(&s).unwrap();
        assert!(set.contains(&s, &SpacePoint::tree(0, 0.5), 0.0).unwrap());
        assert!(!set.contains(&s, &SpacePoint::tree(1, 0.5), 1e-9).unwrap());
    }

    #[test]
    fn projection_onto_ball_is_radial() {
        let s = Space::euclidean(2).unwrap();
        let ball = ConvexSet::ball(SpacePoint::euclidean([0.0, 0.0]), 1.0);
        let p = ball.project(&s, &SpacePoint::euclidean([3.0, 0.0])).unwrap();
        assert!(s.distance(&p, &SpacePoint::euclidean([1.0, 0.0])).unwrap() < 1e-12);
        // identity on the set
        let inside = SpacePoint::euclidean([0.25, 0.25]);
        assert_eq!(ball.project(&s, &inside).unwrap(), inside);
    }

    #[test]
    fn projection_onto_leg_of_other_leaf_is_branch_point() {
        let s = tripod();
        let leg_b = ConvexSet::segment(SpacePoint::tree(0, 0.0), SpacePoint::tree(1, 1.0));
        let leaf_a = SpacePoint::tree(0, 1.0);
        let p = leg_b.project(&s, &leaf_a).unwrap();
        // brute-force oracle over a discretization of the whole tree
        let mut best = (SpacePoint::tree(0, 0.0), f64::INFINITY);
        for e in 0..3 {
            for i in 0..=1000 {
                let cand = SpacePoint::tree(e, i as f64 / 1000.0);
                if leg_b.contains(&s, &cand, 1e-9).unwrap() {
                    let d = s.distance(&leaf_a, &cand).unwrap();
                    if d < best.1 {
                        best = (cand, d);
                    }
                }
            }
        }
        assert!(s.distance(&p, &best.0).unwrap() < 2e-3);
        assert!(s.distance(&p, &SpacePoint::tree(0, 0.0)).unwrap() < 1e-12);
    }

    #[test]
    fn projection_is_idempotent_and_refused_on_linf() {
        let s = Space::euclidean(2).unwrap();
        let ball = ConvexSet::ball(SpacePoint::euclidean([0.5, -0.2]), 0.7);
        let x = SpacePoint::euclidean([4.0, 3.0]);
        let p1 = ball.project(&s, &x).unwrap();
        let p2 = ball.project(&s, &p1).unwrap();
        assert!(s.distance(&p1, &p2).unwrap() < 1e-9);

        let linf = Space::linf_plane(2).unwrap();
        let lball = ConvexSet::ball(SpacePoint::linf([0.0, 0.0]), 1.0);
        assert!(lball.project(&linf, &SpacePoint::linf([3.0, 0.0])).is_err());
    }

    #[test]
    fn hyperboloid_segment_projection_against_grid_oracle() {
        let s = Space::hyperbolic_plane();
        let a = SpacePoint::hyperboloid([1.0, 0.0, 0.0]);
        let b = SpacePoint::hyperboloid([1.5f64.cosh(), 1.5f64.sinh(), 0.0]);
        let seg = ConvexSet::segment(a.clone(), b.clone());
        let x = SpacePoint::hyperboloid([
            (0.8f64).cosh() * (1.0 + 0.0),
            0.8f64.sinh() * 0.2,
            0.8f64.sinh() * (1.0 - 0.04f64).sqrt(),
        ]);
        let x = SpacePoint::hyperboloid({
            let c = x.coords().unwrap();
            let norm = (c[0] * c[0] - c[1] * c[1] - c[2] * c[2]).sqrt();
            c.iter().map(|v| v / norm).collect::<Vec<_>>()
        });
        let p = seg.project(&s, &x).unwrap();
        let mut best = (a.clone(), f64::INFINITY);
        for i in 0..=4000 {
            let cand = s.convex_combine(&a, &b, i as f64 / 4000.0).unwrap();
            let d = s.distance(&x, &cand).unwrap();
            if d < best.1 {
                best = (cand, d);
            }
        }
        assert!(s.distance(&p, &best.0).unwrap() < 1e-3);
        assert!(s.distance(&x, &p).unwrap() <= best.1 + 1e-9);
    }

    #[test]
    fn halfspace_projection() {
        let s = Space::euclidean(2).unwrap();
        let hs = ConvexSet::Halfspace {
            normal: vec![1.0, 0.0],
            offset: 0.0,
        };
        let p = hs.project(&s, &SpacePoint::euclidean([2.0, 1.0])).unwrap();
        assert_eq!(p, SpacePoint::euclidean([0.0, 1.0]));
        let inside = SpacePoint::euclidean([-1.0, 5.0]);
        assert_eq!(hs.project(&s, &inside).unwrap(), inside);
    }
}
