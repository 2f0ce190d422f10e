//! Hyperboloid (Minkowski) model of the hyperbolic plane: the upper sheet
//! `x0^2 - x1^2 - x2^2 = 1`, `x0 > 0`, with the bilinear form
//! `B(p, q) = p0 q0 - p1 q1 - p2 q2` and `d(p, q) = acosh B(p, q)`.

use crate::error::{Error, Result};

pub(crate) fn minkowski(p: &[f64], q: &[f64]) -> f64 {
    let mut b = p[0] * q[0];
    for i in 1..p.len() {
        b -= p[i] * q[i];
    }
    b
}

pub(crate) fn validate(c: &[f64], tol: f64) -> Result<()> {
    if c.len() != 3 {
        return Err(Error::PointNotInSpace(format!(
            "hyperboloid points need 3 Minkowski coordinates, got {}",
            c.len()
        )));
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::PointNotInSpace("non-finite coordinate".into()));
    }
    if c[0] <= 0.0 {
        return Err(Error::PointNotInSpace("point on the lower sheet".into()));
    }
    let b = minkowski(c, c);
    // rounding in the sheet constraint scales with the squared magnitude
    let scale = c.iter().map(|v| v * v).sum::<f64>().max(1.0);
    if (b - 1.0).abs() > tol * scale {
        return Err(Error::PointNotInSpace(format!(
            "Minkowski norm {b} deviates from 1 beyond tolerance"
        )));
    }
    Ok(())
}

/// `B(p, q) - 1` computed through the difference vector, which avoids the
/// cancellation of `acosh` near 1 for close points.
fn minkowski_excess(p: &[f64], q: &[f64]) -> f64 {
    let d0 = p[0] - q[0];
    let mut space = 0.0;
    for i in 1..p.len() {
        let di = p[i] - q[i];
        space += di * di;
    }
    0.5 * (space - d0 * d0)
}

pub(crate) fn distance(p: &[f64], q: &[f64]) -> f64 {
    let u = minkowski_excess(p, q).max(0.0);
    // acosh(1 + u) = ln(1 + u + sqrt(u (2 + u)))
    (u + (u * (2.0 + u)).sqrt()).ln_1p()
}

fn renormalize(mut v: Vec<f64>) -> Vec<f64> {
    let b = minkowski(&v, &v);
    if b > 0.0 {
        let s = 1.0 / b.sqrt();
        for c in &mut v {
            *c *= s;
        }
    }
    if v[0] < 0.0 {
        for c in &mut v {
            *c = -*c;
        }
    }
    v
}

/// Point of the geodesic from `p` to `q` at parameter `lambda` of arc length.
pub(crate) fn combine(p: &[f64], q: &[f64], lambda: f64) -> Vec<f64> {
    let d = distance(p, q);
    if d < 1e-15 {
        return p.to_vec();
    }
    geodesic_point(p, q, d, lambda * d)
}

/// Point at arc length `s` on the unit-speed geodesic from `p` toward `q`,
/// where `d = d(p, q)`. Valid for any `s >= 0`, including beyond `q`.
fn geodesic_point(p: &[f64], q: &[f64], d: f64, s: f64) -> Vec<f64> {
    let cd = d.cosh();
    let sd = d.sinh();
    let (cs, ss) = (s.cosh(), s.sinh());
    let scale = ss / sd;
    let out: Vec<f64> = p
        .iter()
        .zip(q)
        .map(|(pi, qi)| pi * cs + (qi - cd * pi) * scale)
        .collect();
    renormalize(out)
}

pub(crate) fn extend(p: &[f64], q: &[f64], d: f64, extra: f64) -> Vec<f64> {
    geodesic_point(p, q, d, d + extra)
}

/// Riemannian logarithm: tangent vector at `p` pointing to `q` with
/// Minkowski square `-d(p, q)^2`.
pub(crate) fn log_map(p: &[f64], q: &[f64]) -> Vec<f64> {
    let d = distance(p, q);
    if d < 1e-15 {
        return vec![0.0; p.len()];
    }
    let cd = d.cosh();
    let scale = d / d.sinh();
    p.iter()
        .zip(q)
        .map(|(pi, qi)| (qi - cd * pi) * scale)
        .collect()
}

/// Exponential map at `p` of a tangent vector `v` (with `B(p, v) = 0`).
pub(crate) fn exp_map(p: &[f64], v: &[f64]) -> Vec<f64> {
    let norm2 = -minkowski(v, v);
    if norm2 <= 0.0 {
        return p.to_vec();
    }
    let n = norm2.sqrt();
    if n < 1e-18 {
        return p.to_vec();
    }
    let (cn, sn) = (n.cosh(), n.sinh() / n);
    renormalize(p.iter().zip(v).map(|(pi, vi)| pi * cn + vi * sn).collect())
}

/// Arc-length parameter of the point of the geodesic segment from `p`
/// (through `q`, length `d`) closest to `x`, clamped to `[0, d]`.
///
/// Writing the geodesic as `gamma(s) = p cosh s + v sinh s`, the distance to
/// `x` is `acosh(a cosh s + b sinh s)` with `a = B(x, p)`, `b = B(x, v)`;
/// the minimum over `s` sits at `atanh(-b / a)`.
pub(crate) fn closest_parameter(p: &[f64], q: &[f64], d: f64, x: &[f64]) -> f64 {
    if d < 1e-15 {
        return 0.0;
    }
    let cd = d.cosh();
    let sd = d.sinh();
    let a = minkowski(x, p);
    // b = B(x, v) with v = (q - cosh(d) p) / sinh(d)
    let b = (minkowski(x, q) - cd * a) / sd;
    let ratio = -b / a;
    let s = if ratio.abs() < 1.0 {
        ratio.atanh()
    } else if ratio >= 1.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    s.clamp(0.0, d)
}
