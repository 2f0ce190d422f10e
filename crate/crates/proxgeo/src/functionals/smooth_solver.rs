//! Riemannian gradient descent for sums of squared distances on the
//! hyperboloid. The prox term makes the objective 2-strongly convex along
//! geodesics, so the tangent-gradient norm certifies the distance to the
//! minimizer: `d(y, y*) <= |grad| / 2`.

use crate::error::{Error, Result};
use crate::space::{hyperboloid_exp, hyperboloid_log, minkowski_form, Space, SpacePoint};

use super::{Atom, ResolventParams};

pub(crate) fn minimize_hyperboloid(
    space: &Space,
    atoms: &[Atom],
    start: &SpacePoint,
    params: &ResolventParams,
) -> Result<SpacePoint> {
    let anchors: Vec<(f64, &SpacePoint)> = atoms
        .iter()
        .map(|a| match a {
            Atom::SqDist { weight, anchor } => Ok((*weight, anchor)),
            _ => Err(Error::InvalidParameter(
                "smooth solver only handles squared-distance atoms".into(),
            )),
        })
        .collect::<Result<_>>()?;

    let value = |y: &SpacePoint| {
        anchors
            .iter()
            .map(|(w, a)| {
                let d = space.distance_unchecked(a, y);
                w * d * d
            })
            .sum::<f64>()
    };

    let mut y = start.clone();
    let v0 = value(&y);
    // all descent iterates stay within sqrt(v0) of the minimizer, which
    // bounds the geodesic Hessian of each term by 2 w (1 + d_max)
    let travel = v0.max(0.0).sqrt();
    let lipschitz: f64 = anchors
        .iter()
        .map(|(w, a)| 2.0 * w * (1.0 + space.distance_unchecked(a, &y) + 2.0 * travel))
        .sum();
    let step = 1.0 / lipschitz.max(2.0);

    for _ in 0..params.max_iter {
        let mut grad = vec![0.0; 3];
        for (w, a) in &anchors {
            let l = hyperboloid_log(&y, a);
            for (g, li) in grad.iter_mut().zip(&l) {
                *g -= 2.0 * w * li;
            }
        }
        let norm = (-minkowski_form(&grad, &grad)).max(0.0).sqrt();
        if norm <= 2.0 * params.tol {
            return Ok(y);
        }
        let scaled: Vec<f64> = grad.iter().map(|g| -step * g).collect();
        y = hyperboloid_exp(&y, &scaled);
    }
    let mut grad = vec![0.0; 3];
    for (w, a) in &anchors {
        let l = hyperboloid_log(&y, a);
        for (g, li) in grad.iter_mut().zip(&l) {
            *g -= 2.0 * w * li;
        }
    }
    let norm = (-minkowski_form(&grad, &grad)).max(0.0).sqrt();
    Err(Error::NonConvergence {
        best: Box::new(y),
        achieved: norm / 2.0,
        requested: params.tol,
    })
}
