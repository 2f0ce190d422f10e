//! Grid-refinement fallback for atom sums with no exact route: a coarse grid
//! over a bounding region locates the basin, zooming grids shrink it, and a
//! final golden-section pass along geodesics toward the anchor points
//! polishes the candidate. Value-based search cannot certify better than
//! about 1e-7 in position, so the achieved accuracy is reported and a
//! stricter request fails with the best iterate attached.

use crate::error::{Error, Result};
use crate::sets::{golden_min, ConvexSet};
use crate::space::{hyperboloid_exp, Space, SpaceKind, SpacePoint};

use super::{atoms_value, Atom, ResolventParams};

fn anchor_points(atoms: &[Atom]) -> Vec<SpacePoint> {
    let mut out = Vec::new();
    for a in atoms {
        match a {
            Atom::SqDist { anchor, .. } | Atom::Dist { anchor, .. } => out.push(anchor.clone()),
            Atom::SetDist { set, .. } | Atom::Constraint { set } => match set {
                ConvexSet::Ball { center, .. } => out.push(center.clone()),
                ConvexSet::Segment { a, b } => {
                    out.push(a.clone());
                    out.push(b.clone());
                }
                _ => {}
            },
        }
    }
    out
}

pub(crate) fn minimize(
    space: &Space,
    atoms: &[Atom],
    x: &SpacePoint,
    params: &ResolventParams,
) -> Result<SpacePoint> {
    let anchors = anchor_points(atoms);
    let mut halfwidth: f64 = 1.0;
    for a in &anchors {
        halfwidth = halfwidth.max(space.distance_unchecked(x, a));
    }
    halfwidth = 2.0 * halfwidth + 1.0;

    let value = |y: &SpacePoint| atoms_value(space, atoms, y);

    let mut center = x.clone();
    let mut best: Option<(f64, SpacePoint)> = None;
    let grid_n = 17;
    let mut level = 0;
    while level < 60 {
        let mut improved = false;
        for cand in grid_points(space, &center, halfwidth, grid_n) {
            let v = value(&cand);
            if v.is_finite() && best.as_ref().map_or(true, |(bv, _)| v < *bv) {
                best = Some((v, cand));
                improved = true;
            }
        }
        if let Some((_, b)) = &best {
            center = b.clone();
        } else if !improved && level > 6 {
            return Err(Error::InvalidConfig(
                "no feasible point found inside the search region".into(),
            ));
        }
        halfwidth *= 0.4;
        level += 1;
        if halfwidth < params.tol * 0.25 {
            break;
        }
    }
    let (_, mut y) = best.ok_or_else(|| {
        Error::InvalidConfig("no feasible point found inside the search region".into())
    })?;

    // geodesic polish toward each anchor
    for _ in 0..3 {
        for a in anchors.iter().chain(std::iter::once(x)) {
            let d = space.distance_unchecked(&y, a);
            if d <= space.tol() {
                continue;
            }
            let f = |t: f64| {
                let z = space.combine_unchecked(&y, a, t);
                let v = value(&z);
                if v.is_finite() {
                    v
                } else {
                    f64::MAX
                }
            };
            let (t, fv) = golden_min(f, 0.0, 1.0, 1e-12);
            if fv < value(&y) {
                y = space.combine_unchecked(&y, a, t);
            }
        }
    }

    let achieved = halfwidth.max(1e-7 * (1.0 + space.distance_unchecked(x, &y)));
    if achieved > params.tol {
        return Err(Error::NonConvergence {
            best: Box::new(y),
            achieved,
            requested: params.tol,
        });
    }
    Ok(y)
}

fn grid_points(space: &Space, center: &SpacePoint, halfwidth: f64, n: usize) -> Vec<SpacePoint> {
    let mut out = Vec::with_capacity(n * n);
    match (space.kind(), center) {
        (SpaceKind::Euclidean { dim }, SpacePoint::Euclidean(c)) if *dim <= 3 => {
            let steps: Vec<f64> = (0..n)
                .map(|i| -halfwidth + 2.0 * halfwidth * i as f64 / (n - 1) as f64)
                .collect();
            match dim {
                1 => {
                    for dx in &steps {
                        out.push(SpacePoint::Euclidean(vec![c[0] + dx]));
                    }
                }
                2 => {
                    for dx in &steps {
                        for dy in &steps {
                            out.push(SpacePoint::Euclidean(vec![c[0] + dx, c[1] + dy]));
                        }
                    }
                }
                _ => {
                    for dx in &steps {
                        for dy in &steps {
                            for dz in &steps {
                                out.push(SpacePoint::Euclidean(vec![
                                    c[0] + dx,
                                    c[1] + dy,
                                    c[2] + dz,
                                ]));
                            }
                        }
                    }
                }
            }
        }
        (SpaceKind::Hyperboloid, _) => {
            // tangent-plane grid pushed through the exponential map
            let basis = tangent_basis(center);
            let steps: Vec<f64> = (0..n)
                .map(|i| -halfwidth + 2.0 * halfwidth * i as f64 / (n - 1) as f64)
                .collect();
            for ds in &steps {
                for dt in &steps {
                    let v: Vec<f64> = (0..3)
                        .map(|i| ds * basis.0[i] + dt * basis.1[i])
                        .collect();
                    out.push(hyperboloid_exp(center, &v));
                }
            }
        }
        _ => {}
    }
    out
}

/// Orthonormal tangent basis at a hyperboloid point (Minkowski
/// Gram-Schmidt against the base point).
fn tangent_basis(p: &SpacePoint) -> (Vec<f64>, Vec<f64>) {
    let c = match p {
        SpacePoint::Hyperboloid(c) => c,
        _ => return (vec![0.0; 3], vec![0.0; 3]),
    };
    let b = |u: &[f64], v: &[f64]| crate::space::minkowski_form(u, v);
    let mut e1 = vec![0.0, 1.0, 0.0];
    let bp = b(&e1, c);
    for i in 0..3 {
        e1[i] -= bp * c[i];
    }
    let n1 = (-b(&e1, &e1)).max(1e-30).sqrt();
    e1.iter_mut().for_each(|v| *v /= n1);

    let mut e2 = vec![0.0, 0.0, 1.0];
    let bp = b(&e2, c);
    for i in 0..3 {
        e2[i] -= bp * c[i];
    }
    let b12 = b(&e2, &e1);
    for i in 0..3 {
        // subtract the e1 component; B(e1, e1) = -1 flips the sign
        e2[i] += b12 * e1[i];
    }
    let n2 = (-b(&e2, &e2)).max(1e-30).sqrt();
    e2.iter_mut().for_each(|v| *v /= n2);
    (e1, e2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fallback_finds_fermat_point_of_dist_sum() {
        // sum of two plain distances plus the prox term has its minimum
        // strictly between the anchors; compare with a dense grid oracle
        let space = Space::euclidean(2).unwrap();
        let x = SpacePoint::euclidean([0.0, 1.0]);
        let atoms = vec![
            Atom::Dist {
                weight: 1.0,
                anchor: SpacePoint::euclidean([-1.0, 0.0]),
            },
            Atom::Dist {
                weight: 1.0,
                anchor: SpacePoint::euclidean([1.0, 0.0]),
            },
            Atom::SqDist {
                weight: 1.0,
                anchor: x.clone(),
            },
        ];
        let params = ResolventParams::new(1.0).with_tol(1e-5);
        let y = minimize(&space, &atoms, &x, &params).unwrap();
        let mut best = (x.clone(), f64::INFINITY);
        let n = 600;
        for i in 0..=n {
            for j in 0..=n {
                let cand = SpacePoint::euclidean([
                    -2.0 + 4.0 * i as f64 / n as f64,
                    -2.0 + 4.0 * j as f64 / n as f64,
                ]);
                let v = atoms_value(&space, &atoms, &cand);
                if v < best.1 {
                    best = (cand, v);
                }
            }
        }
        assert!(atoms_value(&space, &atoms, &y) <= best.1 + 1e-9);
        assert!(space.distance(&y, &best.0).unwrap() < 0.02);
    }

    #[test]
    fn tangent_basis_is_orthonormal() {
        let p = SpacePoint::hyperboloid(vec![1.3f64.cosh(), 1.3f64.sinh() * 0.6, 1.3f64.sinh() * 0.8]);
        let (e1, e2) = tangent_basis(&p);
        let c = p.coords().unwrap();
        let b = |u: &[f64], v: &[f64]| crate::space::minkowski_form(u, v);
        assert!(b(&e1, c).abs() < 1e-9);
        assert!(b(&e2, c).abs() < 1e-9);
        assert!((b(&e1, &e1) + 1.0).abs() < 1e-9);
        assert!((b(&e2, &e2) + 1.0).abs() < 1e-9);
        assert!(b(&e1, &e2).abs() < 1e-9);
    }
}
