//! Shared fixtures for the integration suites: the model spaces at desk
//! scale and the standard operator library the acceptance criteria sweep.

#![allow(dead_code)]

use proxgeo::*;

/// Tripod with three unit legs from a branch point (vertex 0).
pub fn tripod() -> Space {
    Space::tree(TreeDescription {
        edges: vec![(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)],
        root: Some(0),
    })
    .unwrap()
}

/// Tripod with legs of length 3, room for iteration experiments.
pub fn big_tripod() -> Space {
    Space::tree(TreeDescription {
        edges: vec![(0, 1, 3.0), (0, 2, 3.0), (0, 3, 3.0)],
        root: Some(0),
    })
    .unwrap()
}

pub fn cat0_spaces() -> Vec<(&'static str, Space)> {
    vec![
        ("euclidean", Space::euclidean(2).unwrap()),
        ("hyperboloid", Space::hyperbolic_plane()),
        ("tree", big_tripod()),
    ]
}

pub fn all_spaces() -> Vec<(&'static str, Space)> {
    let mut v = cat0_spaces();
    v.push(("linf", Space::linf_plane(2).unwrap()));
    v
}

/// A canonical base point of each space.
pub fn base_point(space: &Space) -> SpacePoint {
    match space.model_name() {
        "euclidean" => SpacePoint::euclidean(vec![0.0; space.dim().unwrap()]),
        "linf" => SpacePoint::linf(vec![0.0; space.dim().unwrap()]),
        "hyperboloid" => SpacePoint::hyperboloid([1.0, 0.0, 0.0]),
        _ => SpacePoint::tree(0, 0.0),
    }
}

/// A point at distance `d` from the base point (along the first axis / first
/// tree leg; `d` must fit on the leg for tree spaces).
pub fn far_point(space: &Space, d: f64) -> SpacePoint {
    match space.model_name() {
        "euclidean" => {
            let mut c = vec![0.0; space.dim().unwrap()];
            c[0] = d;
            SpacePoint::euclidean(c)
        }
        "linf" => {
            let mut c = vec![0.0; space.dim().unwrap()];
            c[0] = d;
            SpacePoint::linf(c)
        }
        "hyperboloid" => SpacePoint::hyperboloid([d.cosh(), d.sinh(), 0.0]),
        _ => SpacePoint::tree(0, d),
    }
}

/// A firmly nonexpansive test case with a known fixed point.
pub struct FneCase {
    pub name: String,
    pub space_name: &'static str,
    pub space: Space,
    pub op: Operator,
    pub x0: SpacePoint,
    pub fixed: SpacePoint,
}

/// The firmly nonexpansive operator library: metric projection, resolvent
/// and averaged (Bruck) transform on each CAT(0) model space.
pub fn fne_library() -> Vec<FneCase> {
    let mut cases = Vec::new();
    for (space_name, space) in cat0_spaces() {
        let base = base_point(&space);
        let x0 = far_point(&space, 2.0);
        let ball = ConvexSet::ball(base.clone(), 1.0);

        cases.push(FneCase {
            name: format!("projection-ball/{space_name}"),
            space_name,
            space: space.clone(),
            op: Operator::projection(ball.clone()).with_fixed_points(vec![base.clone()]),
            x0: x0.clone(),
            fixed: base.clone(),
        });
        cases.push(FneCase {
            name: format!("resolvent-sqdist/{space_name}"),
            space_name,
            space: space.clone(),
            op: Operator::resolvent(Functional::sqdist(base.clone()), 1.0)
                .with_fixed_points(vec![base.clone()]),
            x0: x0.clone(),
            fixed: base.clone(),
        });
        cases.push(FneCase {
            name: format!("bruck-projection/{space_name}"),
            space_name,
            space: space.clone(),
            op: Operator::bruck(Operator::projection(ball), 0.5)
                .with_fixed_points(vec![base.clone()]),
            x0,
            fixed: base,
        });
    }
    cases
}
