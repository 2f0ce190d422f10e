//! Self-maps of (unions of) convex domains: projections, resolvents, the
//! averaged fixed-point transform built from a nonexpansive map, isometries,
//! and the counterexample maps used as negative controls. Includes the
//! randomized firm-nonexpansiveness audit.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{fold_max, map_collect, Parallelism};
use crate::functionals::{Functional, ResolventParams};
use crate::sets::ConvexSet;
use crate::space::{Space, SpaceKind, SpacePoint};

fn default_bruck_tol() -> f64 {
    1e-10
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OperatorKind {
    /// Metric projection onto a convex set.
    Projection { set: ConvexSet },
    /// Resolvent of a convex functional.
    Resolvent {
        f: Box<Functional>,
        #[serde(flatten)]
        params: ResolventParams,
    },
    /// `x -> z` where `z` solves `z = (1-t) x + t T(z)` for a nonexpansive
    /// inner map `T`; firmly nonexpansive with the same fixed points as `T`.
    Bruck {
        inner: Box<Operator>,
        t: f64,
        #[serde(default = "default_bruck_tol")]
        solve_tol: f64,
    },
    /// Euclidean translation; an isometry with no fixed points.
    Translation { vector: Vec<f64> },
    /// `x -> -x` on Euclidean space; nonexpansive but not firmly so.
    Negation,
    /// Exchanges two points; nonexpansive on the two-point domain and fixed
    /// point free.
    Swap { a: SpacePoint, b: SpacePoint },
    Composition { ops: Vec<Operator> },
}

/// Claimed properties and known data of an operator, carried as metadata for
/// reports and test assertions; nothing here is enforced at apply time.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct OperatorProps {
    #[serde(default)]
    pub firmly_nonexpansive: bool,
    #[serde(default)]
    pub nonexpansive: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fixed_points: Vec<SpacePoint>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Operator {
    #[serde(flatten)]
    pub kind: OperatorKind,
    /// Domain pieces (union). Empty means the whole space.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub domain: Vec<ConvexSet>,
    #[serde(default)]
    pub props: OperatorProps,
}

impl Operator {
    pub fn new(kind: OperatorKind) -> Self {
        Operator {
            kind,
            domain: Vec::new(),
            props: OperatorProps::default(),
        }
    }

    pub fn projection(set: ConvexSet) -> Self {
        Operator::new(OperatorKind::Projection { set }).claiming_firm()
    }

    pub fn resolvent(f: Functional, mu: f64) -> Self {
        Operator::new(OperatorKind::Resolvent {
            f: Box::new(f),
            params: ResolventParams::new(mu),
        })
        .claiming_firm()
    }

    pub fn bruck(inner: Operator, t: f64) -> Self {
        Operator::new(OperatorKind::Bruck {
            inner: Box::new(inner),
            t,
            solve_tol: default_bruck_tol(),
        })
        .claiming_firm()
    }

    pub fn translation(vector: Vec<f64>) -> Self {
        let mut op = Operator::new(OperatorKind::Translation { vector });
        // an isometry satisfies the firm-nonexpansiveness inequality with equality
        op.props.nonexpansive = true;
        op.props.firmly_nonexpansive = true;
        op
    }

    pub fn negation() -> Self {
        let mut op = Operator::new(OperatorKind::Negation);
        op.props.nonexpansive = true;
        op
    }

    pub fn swap(a: SpacePoint, b: SpacePoint) -> Self {
        let mut op = Operator::new(OperatorKind::Swap {
            a: a.clone(),
            b: b.clone(),
        });
        op.props.nonexpansive = true;
        op.domain = vec![ConvexSet::segment(a.clone(), a), ConvexSet::segment(b.clone(), b)];
        op
    }

    fn claiming_firm(mut self) -> Self {
        self.props.nonexpansive = true;
        self.props.firmly_nonexpansive = true;
        self
    }

    pub fn with_domain(mut self, pieces: Vec<ConvexSet>) -> Self {
        self.domain = pieces;
        self
    }

    pub fn with_fixed_points(mut self, pts: Vec<SpacePoint>) -> Self {
        self.props.fixed_points = pts;
        self
    }

    pub fn validate(&self, space: &Space) -> Result<()> {
        for piece in &self.domain {
            piece.validate(space)?;
        }
        match &self.kind {
            OperatorKind::Projection { set } => set.validate(space),
            OperatorKind::Resolvent { f, params } => {
                if !(params.mu > 0.0) {
                    return Err(Error::InvalidParameter("resolvent order must be positive".into()));
                }
                f.validate(space)
            }
            OperatorKind::Bruck { inner, t, .. } => {
                if !(*t > 0.0 && *t < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "averaging parameter must lie in (0, 1), got {t}"
                    )));
                }
                inner.validate(space)
            }
            OperatorKind::Translation { vector } => {
                if !matches!(space.kind(), SpaceKind::Euclidean { .. })
                    || vector.len() != space.dim().unwrap_or(0)
                {
                    return Err(Error::Unsupported(
                        "translations are Euclidean-only and must match the dimension".into(),
                    ));
                }
                Ok(())
            }
            OperatorKind::Negation => {
                if matches!(space.kind(), SpaceKind::Euclidean { .. }) {
                    Ok(())
                } else {
                    Err(Error::Unsupported("negation is Euclidean-only".into()))
                }
            }
            OperatorKind::Swap { a, b } => {
                space.validate_point(a)?;
                space.validate_point(b)
            }
            OperatorKind::Composition { ops } => {
                for op in ops {
                    op.validate(space)?;
                }
                Ok(())
            }
        }
    }

    /// Whether `x` belongs to the declared domain (within `tol`).
    pub fn in_domain(&self, space: &Space, x: &SpacePoint, tol: f64) -> Result<bool> {
        if self.domain.is_empty() {
            space.validate_point(x)?;
            return Ok(true);
        }
        for piece in &self.domain {
            if piece.contains(space, x, tol)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    pub fn apply(&self, space: &Space, x: &SpacePoint) -> Result<SpacePoint> {
        if !self.in_domain(space, x, space.tol().max(1e-9))? {
            return Err(Error::DomainViolation { step: 0 });
        }
        self.apply_unchecked(space, x)
    }

    pub(crate) fn apply_unchecked(&self, space: &Space, x: &SpacePoint) -> Result<SpacePoint> {
        match &self.kind {
            OperatorKind::Projection { set } => set.project(space, x),
            OperatorKind::Resolvent { f, params } => f.resolvent(space, params, x),
            OperatorKind::Bruck { inner, t, solve_tol } => {
                bruck_transform(space, inner, *t, x, *solve_tol)
            }
            OperatorKind::Translation { vector } => {
                let c = x.coords().ok_or_else(|| {
                    Error::Unsupported("translations are Euclidean-only".into())
                })?;
                Ok(SpacePoint::Euclidean(
                    c.iter().zip(vector).map(|(v, t)| v + t).collect(),
                ))
            }
            OperatorKind::Negation => {
                let c = x
                    .coords()
                    .ok_or_else(|| Error::Unsupported("negation is Euclidean-only".into()))?;
                Ok(SpacePoint::Euclidean(c.iter().map(|v| -v).collect()))
            }
            OperatorKind::Swap { a, b } => {
                // snap to the nearer of the two points and return the other
                if space.distance_unchecked(x, a) <= space.distance_unchecked(x, b) {
                    Ok(b.clone())
                } else {
                    Ok(a.clone())
                }
            }
            OperatorKind::Composition { ops } => {
                let mut y = x.clone();
                for op in ops {
                    y = op.apply_unchecked(space, &y)?;
                }
                Ok(y)
            }
        }
    }

    /// Short JSON descriptor for reports.
    pub fn descriptor(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}

/// Evaluates the averaged transform at `x`: the unique fixed point of
/// `y -> (1-t) x + t T(y)`, found by Banach iteration. The stop rule
/// `d(y_k, y_{k+1}) <= tol (1-t)/t` guarantees the returned point is within
/// `tol` of the true fixed point.
pub fn bruck_transform(
    space: &Space,
    inner: &Operator,
    t: f64,
    x: &SpacePoint,
    tol: f64,
) -> Result<SpacePoint> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "averaging parameter must lie in (0, 1), got {t}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("solver tolerance must be positive".into()));
    }
    let stop = tol * (1.0 - t) / t;
    let mut y = x.clone();
    let cap = 500_000;
    for _ in 0..cap {
        let ty = inner.apply_unchecked(space, &y)?;
        let next = space.combine_unchecked(x, &ty, t);
        let step = space.distance_unchecked(&next, &y);
        y = next;
        if step <= stop {
            return Ok(y);
        }
    }
    Err(Error::NonConvergence {
        best: Box::new(y),
        achieved: f64::NAN,
        requested: tol,
    })
}

/// Deterministic seeded point pairs inside an operator's domain.
#[derive(Clone, Debug, Serialize)]
pub struct PairSample {
    pub pairs: Vec<(SpacePoint, SpacePoint)>,
    pub seed: Option<u64>,
}

impl PairSample {
    pub fn from_pairs(pairs: Vec<(SpacePoint, SpacePoint)>) -> Self {
        PairSample { pairs, seed: None }
    }
}

pub fn sample_operator_pairs(
    space: &Space,
    op: &Operator,
    count: usize,
    seed: u64,
) -> Result<PairSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(count);
    let sample_one = |rng: &mut ChaCha8Rng| -> Result<SpacePoint> {
        if op.domain.is_empty() {
            Ok(crate::verify::sample_default_region(space, rng, 2.0))
        } else {
            let k = rng.gen_range(0..op.domain.len());
            op.domain[k].sample_point(space, rng, 2.0)
        }
    };
    for _ in 0..count {
        let a = sample_one(&mut rng)?;
        let b = sample_one(&mut rng)?;
        pairs.push((a, b));
    }
    Ok(PairSample {
        pairs,
        seed: Some(seed),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FneLambdaEntry {
    pub lambda: f64,
    /// Worst violation of `d(Tx,Ty) <= d((1-l)x + l Tx, (1-l)y + l Ty)`.
    pub max_violation: f64,
    pub witness_pair: Option<(SpacePoint, SpacePoint)>,
    /// Worst violation of the three-point bound
    /// `d(Tx,Ty) <= (1-l)/(1+l) d(x,y) + l/(1+l) (d(Tx,y) + d(x,Ty))`.
    pub three_point_max_violation: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FneAuditReport {
    pub seed: Option<u64>,
    pub pair_count: usize,
    pub tol: f64,
    pub lambdas: Vec<FneLambdaEntry>,
    pub nonexpansive_max_violation: f64,
    pub nonexpansive_witness: Option<(SpacePoint, SpacePoint)>,
    pub pass: bool,
}

/// Audits the firm-nonexpansiveness inequality on sampled pairs over a
/// lambda grid. Audits falsify: a FAIL exhibits a witness, a PASS only says
/// no violation was sampled.
pub fn firm_nonexpansiveness_audit(
    space: &Space,
    op: &Operator,
    lambda_grid: &[f64],
    pairs: &PairSample,
    tol: f64,
) -> Result<FneAuditReport> {
    firm_nonexpansiveness_audit_with(Parallelism::default(), space, op, lambda_grid, pairs, tol)
}

pub fn firm_nonexpansiveness_audit_with(
    par: Parallelism,
    space: &Space,
    op: &Operator,
    lambda_grid: &[f64],
    pairs: &PairSample,
    tol: f64,
) -> Result<FneAuditReport> {
    if pairs.pairs.is_empty() {
        return Err(Error::EmptyInput("audit needs at least one pair".into()));
    }
    if lambda_grid.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
        return Err(Error::InvalidParameter("lambda grid must lie in (0, 1)".into()));
    }
    // apply the operator once per pair
    let images: Vec<Result<(SpacePoint, SpacePoint)>> = map_collect(par, &pairs.pairs, |_, (x, y)| {
        Ok((op.apply_unchecked(space, x)?, op.apply_unchecked(space, y)?))
    });
    let mut data = Vec::with_capacity(pairs.pairs.len());
    for ((x, y), img) in pairs.pairs.iter().zip(images) {
        let (tx, ty) = img?;
        data.push((x.clone(), y.clone(), tx, ty));
    }

    let d = |a: &SpacePoint, b: &SpacePoint| space.distance_unchecked(a, b);

    let ne = fold_max(par, &data, |_, (x, y, tx, ty)| (d(tx, ty) - d(x, y), ()));
    let (ne_violation, ne_idx) = ne.map(|(v, i, _)| (v, i)).unwrap_or((0.0, 0));

    let mut lambdas = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        let fne = fold_max(par, &data, |_, (x, y, tx, ty)| {
            let u = space.combine_unchecked(x, tx, lambda);
            let v = space.combine_unchecked(y, ty, lambda);
            (d(tx, ty) - d(&u, &v), ())
        });
        let three = fold_max(par, &data, |_, (x, y, tx, ty)| {
            let bound = (1.0 - lambda) / (1.0 + lambda) * d(x, y)
                + lambda / (1.0 + lambda) * (d(tx, y) + d(x, ty));
            (d(tx, ty) - bound, ())
        });
        let (fne_v, fne_i) = fne.map(|(v, i, _)| (v, i)).unwrap_or((0.0, 0));
        let (three_v, _) = three.map(|(v, i, _)| (v, i)).unwrap_or((0.0, 0));
        lambdas.push(FneLambdaEntry {
            lambda,
            max_violation: fne_v,
            witness_pair: Some((data[fne_i].0.clone(), data[fne_i].1.clone())),
            three_point_max_violation: three_v,
            pass: fne_v <= tol && three_v <= tol,
        });
    }

    let pass = ne_violation <= tol && lambdas.iter().all(|e| e.pass);
    Ok(FneAuditReport {
        seed: pairs.seed,
        pair_count: pairs.pairs.len(),
        tol,
        lambdas,
        nonexpansive_max_violation: ne_violation,
        nonexpansive_witness: Some((data[ne_idx].0.clone(), data[ne_idx].1.clone())),
        pass,
    })
}

/// The standard audit grid 0.1, 0.2, ..., 0.9.
pub fn standard_lambda_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eucl() -> Space {
        Space::euclidean(2).unwrap()
    }

    fn origin_ball() -> ConvexSet {
        ConvexSet::ball(SpacePoint::euclidean([0.0, 0.0]), 1.0)
    }

    #[test]
    fn apply_examples() {
        let s = eucl();
        let proj = Operator::projection(origin_ball());
        let y = proj.apply(&s, &SpacePoint::euclidean([3.0, 0.0])).unwrap();
        assert!(s.distance(&y, &SpacePoint::euclidean([1.0, 0.0])).unwrap() < 1e-12);

        let neg = Operator::negation();
        let y = neg.apply(&s, &SpacePoint::euclidean([1.0, 2.0])).unwrap();
        assert_eq!(y, SpacePoint::euclidean([-1.0, -2.0]));

        let a = SpacePoint::euclidean([0.0, 0.0]);
        let b = SpacePoint::euclidean([1.0, 0.0]);
        let swap = Operator::swap(a.clone(), b.clone());
        assert_eq!(swap.apply(&s, &a).unwrap(), b);
        assert_eq!(swap.apply(&s, &b).unwrap(), a);
        // outside the two-point domain
        assert!(swap.apply(&s, &SpacePoint::euclidean([0.4, 0.0])).is_err());
    }

    #[test]
    fn domain_violation_reported() {
        let s = eucl();
        let op = Operator::projection(origin_ball())
            .with_domain(vec![ConvexSet::ball(SpacePoint::euclidean([5.0, 0.0]), 1.0)]);
        assert!(matches!(
            op.apply(&s, &SpacePoint::euclidean([0.0, 0.0])),
            Err(Error::DomainViolation { .. })
        ));
    }

    #[test]
    fn bruck_transform_identity_and_negation() {
        let s = eucl();
        // identity inner map: the transform is the identity for every t
        let ident = Operator::projection(ConvexSet::Whole);
        let x = SpacePoint::euclidean([0.7, -0.4]);
        for t in [0.1, 0.5, 0.9] {
            let u = bruck_transform(&s, &ident, t, &x, 1e-12).unwrap();
            assert!(s.distance(&u, &x).unwrap() < 1e-11);
        }
        // negation: solving y = (1-t) x - t y gives y = (1-t)/(1+t) x
        let neg = Operator::negation();
        let x = SpacePoint::euclidean([1.0, 0.0]);
        let u = bruck_transform(&s, &neg, 0.5, &x, 1e-12).unwrap();
        assert!(s.distance(&u, &SpacePoint::euclidean([1.0 / 3.0, 0.0])).unwrap() < 1e-10);

        // a fixed point of the inner map is fixed for the transform
        let proj = Operator::projection(origin_ball());
        let fixed = SpacePoint::euclidean([0.5, 0.0]);
        let u = bruck_transform(&s, &proj, 0.3, &fixed, 1e-12).unwrap();
        assert!(s.distance(&u, &fixed).unwrap() < 1e-11);
    }

    #[test]
    fn projection_audit_passes() {
        let s = eucl();
        let op = Operator::projection(origin_ball());
        let pairs = sample_operator_pairs(&s, &op, 200, 42).unwrap();
        let rep =
            firm_nonexpansiveness_audit(&s, &op, &standard_lambda_grid(), &pairs, 1e-7).unwrap();
        assert!(rep.pass, "projection must audit as firmly nonexpansive");
    }

    #[test]
    fn negation_audit_fails_with_exact_signature() {
        let s = eucl();
        let op = Operator::negation();
        let pairs = sample_operator_pairs(&s, &op, 100, 7).unwrap();
        let rep =
            firm_nonexpansiveness_audit(&s, &op, &standard_lambda_grid(), &pairs, 1e-9).unwrap();
        assert!(!rep.pass);
        // signature: d(combined) = |2l - 1| d(x, y), so the violation equals
        // (1 - |2l - 1|) d(Tx, Ty) at the witness pair
        for e in &rep.lambdas {
            assert!(!e.pass, "negation must fail at lambda {}", e.lambda);
            let (x, y) = e.witness_pair.clone().unwrap();
            let dxy = s.distance(&x, &y).unwrap();
            let expected = (1.0 - (2.0 * e.lambda - 1.0).abs()) * dxy;
            assert!(
                (e.max_violation - expected).abs() < 1e-9,
                "lambda {}: violation {} vs |2l-1| signature {}",
                e.lambda,
                e.max_violation,
                expected
            );
        }
    }

    #[test]
    fn swap_audit_fails() {
        let s = eucl();
        let a = SpacePoint::euclidean([0.0, 0.0]);
        let b = SpacePoint::euclidean([1.0, 0.0]);
        let op = Operator::swap(a.clone(), b.clone());
        let pairs = PairSample::from_pairs(vec![(a.clone(), b.clone())]);
        let rep =
            firm_nonexpansiveness_audit(&s, &op, &standard_lambda_grid(), &pairs, 1e-9).unwrap();
        assert!(!rep.pass, "the two-point swap is not firmly nonexpansive");
        assert!(
            rep.nonexpansive_max_violation <= 1e-9,
            "but it is nonexpansive"
        );
        for e in &rep.lambdas {
            let expected = (1.0 - (2.0 * e.lambda - 1.0).abs()) * 1.0;
            assert!((e.max_violation - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn operator_serialization_round_trip() {
        let op = Operator::bruck(Operator::projection(origin_ball()), 0.5);
        let json = serde_json::to_string(&op).unwrap();
        let back: Operator = serde_json::from_str(&json).unwrap();
        assert_eq!(back, op);
    }
}
