//! Exact minimization of atom sums over a finite metric tree.
//!
//! Restricted to a single edge, every atom is piecewise linear or piecewise
//! quadratic in the offset and convex, so the edge objective is convex with
//! an analytic one-sided derivative. Each edge is minimized by bisecting the
//! derivative sign inside the feasible sub-interval; the global minimizer is
//! the best edge candidate.

use crate::error::{Error, Result};
use crate::sets::ConvexSet;
use crate::space::{Space, SpacePoint, TreeSpace};

use super::{atoms_value, Atom};

/// Distance profile of a point anchor along one edge: either `|s - o|` (the
/// anchor sits on the edge) or the better of the two endpoint routes.
struct Profile {
    len: f64,
    same_edge_offset: Option<f64>,
    via_start: f64,
    via_end: f64,
}

impl Profile {
    fn point(tree: &TreeSpace, edge: usize, anchor_edge: usize, anchor_off: f64) -> Profile {
        let (u, v, len) = tree.edge(edge);
        if edge == anchor_edge {
            Profile {
                len,
                same_edge_offset: Some(anchor_off),
                via_start: 0.0,
                via_end: 0.0,
            }
        } else {
            Profile {
                len,
                same_edge_offset: None,
                via_start: tree.point_to_vertex(anchor_edge, anchor_off, u),
                via_end: tree.point_to_vertex(anchor_edge, anchor_off, v),
            }
        }
    }

    fn vertices(tree: &TreeSpace, edge: usize, dist_u: f64, dist_v: f64) -> Profile {
        let (_, _, len) = tree.edge(edge);
        Profile {
            len,
            same_edge_offset: None,
            via_start: dist_u,
            via_end: dist_v,
        }
    }

    fn eval(&self, s: f64) -> f64 {
        match self.same_edge_offset {
            Some(o) => (s - o).abs(),
            None => (s + self.via_start).min(self.len - s + self.via_end),
        }
    }

    /// Slope at `s` (+1 moving away, -1 moving closer). An off-edge anchor
    /// hangs off exactly one endpoint (the two routes differ by the edge
    /// length), so the active route is fixed over the whole interior and the
    /// endpoint distances alone decide the sign.
    fn slope(&self, s: f64) -> f64 {
        match self.same_edge_offset {
            Some(o) => {
                if s >= o {
                    1.0
                } else {
                    -1.0
                }
            }
            None => {
                if self.via_start <= self.via_end {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

enum EdgeTerm {
    Sq { weight: f64, profile: Profile },
    Lin { weight: f64, profile: Profile },
    /// `weight * max(0, profile - r)` (distance past a ball boundary)
    Shifted { weight: f64, profile: Profile, r: f64 },
    /// `weight * max(0, (p1 + p2 - gap) / 2)` (distance to a segment)
    Pair { weight: f64, p1: Profile, p2: Profile, gap: f64 },
    Zero,
}

impl EdgeTerm {
    fn eval(&self, s: f64) -> f64 {
        match self {
            EdgeTerm::Sq { weight, profile } => {
                let d = profile.eval(s);
                weight * d * d
            }
            EdgeTerm::Lin { weight, profile } => weight * profile.eval(s),
            EdgeTerm::Shifted { weight, profile, r } => weight * (profile.eval(s) - r).max(0.0),
            EdgeTerm::Pair { weight, p1, p2, gap } => {
                weight * ((p1.eval(s) + p2.eval(s) - gap) / 2.0).max(0.0)
            }
            EdgeTerm::Zero => 0.0,
        }
    }

    fn slope(&self, s: f64) -> f64 {
        match self {
            EdgeTerm::Sq { weight, profile } => {
                2.0 * weight * profile.eval(s) * profile.slope(s)
            }
            EdgeTerm::Lin { weight, profile } => weight * profile.slope(s),
            EdgeTerm::Shifted { weight, profile, r } => {
                if profile.eval(s) > *r {
                    weight * profile.slope(s)
                } else {
                    0.0
                }
            }
            EdgeTerm::Pair { weight, p1, p2, gap } => {
                if p1.eval(s) + p2.eval(s) > *gap {
                    weight * (p1.slope(s) + p2.slope(s)) / 2.0
                } else {
                    0.0
                }
            }
            EdgeTerm::Zero => 0.0,
        }
    }
}

fn anchor_pos(p: &SpacePoint) -> Result<(usize, f64)> {
    match p {
        SpacePoint::Tree { edge, offset } => Ok((*edge, *offset)),
        _ => Err(Error::PointNotInSpace("expected tree point".into())),
    }
}

fn set_dist_term(
    tree: &TreeSpace,
    edge: usize,
    weight: f64,
    set: &ConvexSet,
) -> Result<EdgeTerm> {
    Ok(match set {
        ConvexSet::Whole => EdgeTerm::Zero,
        ConvexSet::Ball { center, radius } => {
            let (ce, co) = anchor_pos(center)?;
            EdgeTerm::Shifted {
                weight,
                profile: Profile::point(tree, edge, ce, co),
                r: *radius,
            }
        }
        ConvexSet::Segment { a, b } => {
            let (ae, ao) = anchor_pos(a)?;
            let (be, bo) = anchor_pos(b)?;
            let gap = tree.distance(ae, ao, be, bo);
            EdgeTerm::Pair {
                weight,
                p1: Profile::point(tree, edge, ae, ao),
                p2: Profile::point(tree, edge, be, bo),
                gap,
            }
        }
        ConvexSet::Subtree { vertices } => {
            if tree.edge_in_subtree(edge, vertices) {
                EdgeTerm::Zero
            } else {
                let (u, v, _) = tree.edge(edge);
                let du = vertices
                    .iter()
                    .map(|&w| tree.vertex_distance(u, w))
                    .fold(f64::INFINITY, f64::min);
                let dv = vertices
                    .iter()
                    .map(|&w| tree.vertex_distance(v, w))
                    .fold(f64::INFINITY, f64::min);
                EdgeTerm::Lin {
                    weight,
                    profile: Profile::vertices(tree, edge, du, dv),
                }
            }
        }
        ConvexSet::Halfspace { .. } => {
            return Err(Error::Unsupported("halfspaces are Euclidean-only".into()))
        }
    })
}

/// Feasible offset interval of a constraint on one edge, found by convex
/// bisection on the set-distance restricted to the edge.
fn constraint_interval(
    space: &Space,
    tree: &TreeSpace,
    edge: usize,
    set: &ConvexSet,
) -> Result<Option<(f64, f64)>> {
    let len = tree.edge(edge).2;
    let g = |s: f64| {
        set.distance_to(space, &SpacePoint::Tree { edge, offset: s })
            .unwrap_or(f64::INFINITY)
    };
    let feas = 1e-12 * (1.0 + len);
    let (smin, gmin) = crate::sets::golden_min(g, 0.0, len, 1e-13 * (1.0 + len));
    if gmin > feas {
        return Ok(None);
    }
    // expand to the boundary of {g <= feas} on both sides
    let mut lo = 0.0;
    if g(0.0) > feas {
        let (mut a, mut b) = (0.0, smin);
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if g(m) > feas {
                a = m;
            } else {
                b = m;
            }
        }
        lo = b;
    }
    let mut hi = len;
    if g(len) > feas {
        let (mut a, mut b) = (smin, len);
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if g(m) > feas {
                b = m;
            } else {
                a = m;
            }
        }
        hi = a;
    }
    Ok(Some((lo, hi)))
}

pub(crate) fn minimize(space: &Space, tree: &TreeSpace, atoms: &[Atom]) -> Result<SpacePoint> {
    let mut best: Option<(f64, SpacePoint)> = None;
    'edges: for edge in 0..tree.edge_count() {
        let len = tree.edge(edge).2;
        let (mut lo, mut hi) = (0.0f64, len);
        let mut terms = Vec::new();
        for a in atoms {
            match a {
                Atom::SqDist { weight, anchor } => {
                    let (ae, ao) = anchor_pos(anchor)?;
                    terms.push(EdgeTerm::Sq {
                        weight: *weight,
                        profile: Profile::point(tree, edge, ae, ao),
                    });
                }
                Atom::Dist { weight, anchor } => {
                    let (ae, ao) = anchor_pos(anchor)?;
                    terms.push(EdgeTerm::Lin {
                        weight: *weight,
                        profile: Profile::point(tree, edge, ae, ao),
                    });
                }
                Atom::SetDist { weight, set } => {
                    terms.push(set_dist_term(tree, edge, *weight, set)?)
                }
                Atom::Constraint { set } => match constraint_interval(space, tree, edge, set)? {
                    None => continue 'edges,
                    Some((a, b)) => {
                        lo = lo.max(a);
                        hi = hi.min(b);
                    }
                },
            }
        }
        if lo > hi {
            continue;
        }
        let slope = |s: f64| terms.iter().map(|t| t.slope(s)).sum::<f64>();
        let value = |s: f64| terms.iter().map(|t| t.eval(s)).sum::<f64>();
        let s_star = if slope(lo) >= 0.0 {
            lo
        } else if slope(hi) <= 0.0 {
            hi
        } else {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if slope(m) >= 0.0 {
                    b = m;
                } else {
                    a = m;
                }
            }
            0.5 * (a + b)
        };
        let v = value(s_star);
        if best.as_ref().map_or(true, |(bv, _)| v < *bv) {
            best = Some((
                v,
                SpacePoint::Tree {
                    edge,
                    offset: s_star,
                },
            ));
        }
    }
    let (_, point) = best.ok_or_else(|| {
        Error::InvalidConfig("no feasible point: constraint sets have empty intersection".into())
    })?;
    let point = space.canonical(&point)?;
    debug_assert!(atoms_value(space, atoms, &point).is_finite());
    Ok(point)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::TreeDescription;

    #[test]
    fn constrained_minimum_lands_on_interval_boundary() {
        let space = Space::tree(TreeDescription {
            edges: vec![(0, 1, 2.0), (1, 2, 2.0)],
            root: Some(0),
        })
        .unwrap();
        let tree = space.tree_space().unwrap().clone();
        // pull toward the far leaf but confine to a ball around vertex 0
        let atoms = vec![
            Atom::SqDist {
                weight: 1.0,
                anchor: SpacePoint::tree(1, 2.0),
            },
            Atom::Constraint {
                set: ConvexSet::ball(SpacePoint::tree(0, 0.0), 0.75),
            },
        ];
        let m = minimize(&space, &tree, &atoms).unwrap();
        let d = space.distance(&m, &SpacePoint::tree(0, 0.75)).unwrap();
        assert!(d < 1e-9, "off by {d}");
    }
}

