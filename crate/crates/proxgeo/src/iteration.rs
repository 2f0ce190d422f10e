//! Picard iteration, displacement analytics, asymptotic-regularity rate
//! certificates, Fejér monitoring, the proximal point algorithm, and the
//! fixed-point search on unions of convex sets.

use serde::{Deserialize, Serialize};

use crate::centers::{asymptotic_center, SequenceWindow};
use crate::error::{Error, Result};
use crate::functionals::{Functional, ResolventParams};
use crate::modulus::ModulusDescriptor;
use crate::operators::Operator;
use crate::sets::ConvexSet;
use crate::space::{Space, SpaceConfig, SpacePoint};

/// Record of a Picard (or proximal) run: the iterates plus the per-step
/// quantities the asymptotic analysis reads off.
#[derive(Clone, Debug, Serialize)]
pub struct IterationTrace {
    pub points: Vec<SpacePoint>,
    /// `d(x_n, x_{n+1})`, length `len - 1`.
    pub displacements: Vec<f64>,
    /// `d(x_n, x_0) / n` for `n = 1..len`.
    pub normalized: Vec<f64>,
    pub operator: serde_json::Value,
    pub space: SpaceConfig,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn x0(&self) -> &SpacePoint {
        &self.points[0]
    }

    /// CSV export: `n, x, displacement, dist_to_x0_over_n, fejer_dist_anchor_i...`.
    /// The final row has no displacement and row 0 no normalized distance.
    pub fn write_csv<W: std::io::Write>(
        &self,
        space: &Space,
        anchors: &[SpacePoint],
        out: W,
    ) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["n".to_string(), "x".into(), "displacement".into(), "dist_to_x0_over_n".into()];
        for i in 0..anchors.len() {
            header.push(format!("fejer_dist_anchor_{i}"));
        }
        w.write_record(&header).map_err(csv_err)?;
        for (n, p) in self.points.iter().enumerate() {
            let mut row = vec![
                n.to_string(),
                serde_json::to_string(p).unwrap_or_default(),
                self.displacements.get(n).map(|d| format!("{d:.17e}")).unwrap_or_default(),
                if n == 0 {
                    String::new()
                } else {
                    format!("{:.17e}", self.normalized[n - 1])
                },
            ];
            for a in anchors {
                row.push(format!("{:.17e}", space.distance_unchecked(a, p)));
            }
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::InvalidConfig(format!("csv flush: {e}")))?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidConfig(format!("csv write: {e}"))
}

/// Runs `n` Picard steps from `x0`. An iterate leaving the operator's
/// declared domain aborts with the offending step index.
pub fn picard_trace(space: &Space, op: &Operator, x0: &SpacePoint, n: usize) -> Result<IterationTrace> {
    op.validate(space)?;
    space.validate_point(x0)?;
    let mut points = Vec::with_capacity(n + 1);
    let mut displacements = Vec::with_capacity(n);
    let mut normalized = Vec::with_capacity(n);
    points.push(x0.clone());
    let mut x = x0.clone();
    for step in 0..n {
        let next = op.apply(space, &x).map_err(|e| match e {
            Error::DomainViolation { .. } => Error::DomainViolation { step },
            other => other,
        })?;
        displacements.push(space.distance_unchecked(&x, &next));
        normalized.push(space.distance_unchecked(&next, x0) / (step as f64 + 1.0));
        points.push(next.clone());
        x = next;
    }
    Ok(IterationTrace {
        points,
        displacements,
        normalized,
        operator: op.descriptor(),
        space: space.config(),
    })
}

/// Tail estimates of the displacement limits of a trace.
///
/// `r_k[k-1]` brackets `lim_n d(x_{n+k}, x_n)` from above (the sequence is
/// nonincreasing for nonexpansive maps, so the last value is the tightest);
/// `l_estimate` is the running infimum of `d(x_n, x_0)/n`, the subadditive
/// limit. For firmly nonexpansive maps the two agree with the minimal
/// displacement, and `max_rk_deviation`/`l_deviation` quantify how far the
/// trace is from those equalities.
#[derive(Clone, Debug, Serialize)]
pub struct DisplacementAnalytics {
    pub r_k: Vec<f64>,
    pub l_estimate: f64,
    /// Estimate of the minimal displacement (the `k = 1` tail value).
    pub minimal_displacement: f64,
    /// Whether every checked sequence `n -> d(x_{n+k}, x_n)` was
    /// nonincreasing over the tail (within 1e-9).
    pub tail_monotone: bool,
    pub max_rk_deviation: f64,
    pub l_deviation: f64,
}

pub fn displacement_analytics(
    space: &Space,
    trace: &IterationTrace,
    k_max: usize,
    tail: usize,
) -> Result<DisplacementAnalytics> {
    if k_max == 0 {
        return Err(Error::InvalidParameter("k_max must be at least 1".into()));
    }
    let n_pts = trace.points.len();
    if n_pts < k_max + tail + 1 {
        return Err(Error::InsufficientData(format!(
            "trace of {n_pts} points cannot support k_max {k_max} with tail {tail}"
        )));
    }
    let last = n_pts - 1;
    let d = |a: usize, b: usize| space.distance_unchecked(&trace.points[a], &trace.points[b]);

    let mut r_k = Vec::with_capacity(k_max);
    let mut tail_monotone = true;
    for k in 1..=k_max {
        r_k.push(d(last - k, last));
        let lo = (last - k).saturating_sub(tail);
        let mut prev = f64::INFINITY;
        for n in lo..=(last - k) {
            let v = d(n, n + k);
            if v > prev + 1e-9 {
                tail_monotone = false;
            }
            prev = v;
        }
    }
    let l_estimate = trace
        .normalized
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let r1 = r_k[0];
    let max_rk_deviation = r_k
        .iter()
        .enumerate()
        .map(|(i, rk)| (rk - (i as f64 + 1.0) * r1).abs())
        .fold(0.0, f64::max);
    Ok(DisplacementAnalytics {
        minimal_displacement: r1,
        l_deviation: (l_estimate - r1).abs(),
        r_k,
        l_estimate,
        tail_monotone,
        max_rk_deviation,
    })
}

// ---------------------------------------------------------------------------
// rate certificates

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum RateKind {
    /// `floor((b+1) / (eps l (1-l) eta(b+1, eps/(b+1))))` for `eps < 2b`.
    Phi,
    /// The sharper bound using the factored modulus `eta = eps * eta_tilde`.
    PhiTilde,
    /// The CAT(0) quadratic bound `floor(8 (b+1) / (l (1-l) eps^2))`.
    Psi,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateCertificate {
    pub kind: RateKind,
    pub epsilon: f64,
    pub lambda: f64,
    /// Bound on the distance from the start to approximate fixed points (or
    /// on the domain diameter).
    pub b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus: Option<ModulusDescriptor>,
    /// Number of steps after which every displacement is at most `epsilon`.
    pub bound: u64,
}

/// Computes the step bound of an asymptotic-regularity certificate.
/// `Psi` is CAT(0)-specific and refused on spaces that do not claim the CN
/// inequality; `Phi`/`PhiTilde` need a modulus descriptor (factored for
/// `PhiTilde`).
pub fn rate_bound(
    space: &Space,
    kind: RateKind,
    epsilon: f64,
    lambda: f64,
    b: f64,
    modulus: Option<&ModulusDescriptor>,
) -> Result<RateCertificate> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda must lie in (0, 1), got {lambda}"
        )));
    }
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::InvalidParameter(format!("b must be positive, got {b}")));
    }
    let make = |bound: u64, modulus: Option<&ModulusDescriptor>| RateCertificate {
        kind,
        epsilon,
        lambda,
        b,
        modulus: modulus.cloned(),
        bound,
    };
    if epsilon >= 2.0 * b {
        // displacements never exceed the diameter bound
        return Ok(make(0, modulus));
    }
    let raw = match kind {
        RateKind::Phi => {
            let m = modulus.ok_or_else(|| {
                Error::InvalidParameter("Phi certificates need a modulus descriptor".into())
            })?;
            let eta = m.eta(b + 1.0, epsilon / (b + 1.0))?;
            (b + 1.0) / (epsilon * lambda * (1.0 - lambda) * eta)
        }
        RateKind::PhiTilde => {
            let m = modulus.ok_or_else(|| {
                Error::InvalidParameter("PhiTilde certificates need a modulus descriptor".into())
            })?;
            let eta_tilde = m.eta_tilde(b + 1.0, epsilon / (b + 1.0)).ok_or_else(|| {
                Error::InvalidParameter(
                    "PhiTilde requires a factored modulus eta = eps * eta_tilde".into(),
                )
            })?;
            (b + 1.0) / (epsilon * lambda * (1.0 - lambda) * eta_tilde)
        }
        RateKind::Psi => {
            if !space.claims_cn() {
                return Err(Error::Unsupported(
                    "the quadratic rate is CAT(0)-specific and this space does not claim the CN inequality"
                        .into(),
                ));
            }
            8.0 * (b + 1.0) / (lambda * (1.0 - lambda)) / (epsilon * epsilon)
        }
    };
    if !raw.is_finite() || raw >= 9.0e15 {
        return Err(Error::InvalidParameter(format!(
            "rate bound {raw:.3e} too large to represent exactly"
        )));
    }
    Ok(make(raw.floor() as u64, modulus))
}

/// How the approximate-fixed-point hypothesis of a rate certificate is met.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RateHypothesis {
    /// A witness `y` with `d(y, x0) <= b` and displacement `d(y, Ty)` below
    /// the certificate's internal threshold `1 / (4 (bound + 1))`.
    ApproxFixedPoint {
        witness: SpacePoint,
        displacement: f64,
    },
    /// The whole domain has diameter at most `b`, which supplies approximate
    /// fixed points for free (the iteration itself is asymptotically regular).
    BoundedDomain { diameter: f64 },
}

#[derive(Clone, Debug, Serialize, PartialEq)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum CertVerdict {
    Pass,
    Fail { first_violation: usize },
    /// The trace does not reach the bound; carries the number of points a
    /// conclusive trace needs.
    Inconclusive { needed_points: u64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificationReport {
    pub certificate: RateCertificate,
    pub hypothesis: RateHypothesis,
    pub verdict: CertVerdict,
    /// Index range of displacements checked against epsilon.
    pub checked: Option<(u64, u64)>,
    pub max_checked_displacement: f64,
}

fn check_hypothesis(
    space: &Space,
    x0: &SpacePoint,
    cert: &RateCertificate,
    hyp: &RateHypothesis,
) -> Result<()> {
    match hyp {
        RateHypothesis::ApproxFixedPoint { witness, displacement } => {
            let d = space.distance(witness, x0)?;
            if d > cert.b + 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "witness sits {d:.6} from the start, beyond b = {}",
                    cert.b
                )));
            }
            let delta = 0.25 / (cert.bound as f64 + 1.0);
            if !(*displacement >= 0.0) || *displacement >= delta {
                return Err(Error::InvalidParameter(format!(
                    "witness displacement {displacement:.3e} is not below the certificate threshold {delta:.3e}"
                )));
            }
            Ok(())
        }
        RateHypothesis::BoundedDomain { diameter } => {
            if *diameter > cert.b + 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "domain diameter {diameter} exceeds b = {}",
                    cert.b
                )));
            }
            Ok(())
        }
    }
}

/// Checks a certificate against a finished trace: every displacement with
/// index at least `bound` must be at most `epsilon`.
pub fn certify_asymptotic_regularity(
    space: &Space,
    trace: &IterationTrace,
    cert: &RateCertificate,
    hypothesis: &RateHypothesis,
) -> Result<CertificationReport> {
    check_hypothesis(space, trace.x0(), cert, hypothesis)?;
    let n_disp = trace.displacements.len() as u64;
    if cert.bound >= n_disp {
        return Ok(CertificationReport {
            certificate: cert.clone(),
            hypothesis: hypothesis.clone(),
            verdict: CertVerdict::Inconclusive {
                needed_points: cert.bound + 2,
            },
            checked: None,
            max_checked_displacement: f64::NAN,
        });
    }
    let mut max_disp: f64 = 0.0;
    let mut verdict = CertVerdict::Pass;
    for n in cert.bound..n_disp {
        let disp = trace.displacements[n as usize];
        max_disp = max_disp.max(disp);
        if disp > cert.epsilon {
            verdict = CertVerdict::Fail {
                first_violation: n as usize,
            };
            break;
        }
    }
    Ok(CertificationReport {
        certificate: cert.clone(),
        hypothesis: hypothesis.clone(),
        verdict,
        checked: Some((cert.bound, n_disp - 1)),
        max_checked_displacement: max_disp,
    })
}

/// Streaming certification for bounds too large to keep a full trace in
/// memory: iterates `bound + checks` steps with O(1) state, asserting the
/// no-increase law of displacements along the way and the epsilon bound from
/// `bound` on. When the hypothesis carries a witness, the witness
/// displacement is re-verified by applying the operator.
pub fn certify_by_iteration(
    space: &Space,
    op: &Operator,
    x0: &SpacePoint,
    cert: &RateCertificate,
    hypothesis: &RateHypothesis,
    checks: u64,
) -> Result<CertificationReport> {
    check_hypothesis(space, x0, cert, hypothesis)?;
    if let RateHypothesis::ApproxFixedPoint { witness, displacement } = hypothesis {
        let actual = space.distance_unchecked(witness, &op.apply(space, witness)?);
        if actual > displacement + 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "stated witness displacement {displacement:.3e} understates the actual {actual:.3e}"
            )));
        }
    }
    let checks = checks.max(1);
    let total = cert.bound + checks;
    let mut x = x0.clone();
    let mut prev_disp = f64::INFINITY;
    let mut max_checked: f64 = 0.0;
    for n in 0..total {
        let next = op.apply(space, &x).map_err(|e| match e {
            Error::DomainViolation { .. } => Error::DomainViolation { step: n as usize },
            other => other,
        })?;
        let disp = space.distance_unchecked(&x, &next);
        if disp > prev_disp + 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "displacement increased at step {n}: the operator is not nonexpansive on this orbit"
            )));
        }
        prev_disp = disp;
        if n >= cert.bound {
            max_checked = max_checked.max(disp);
            if disp > cert.epsilon {
                return Ok(CertificationReport {
                    certificate: cert.clone(),
                    hypothesis: hypothesis.clone(),
                    verdict: CertVerdict::Fail {
                        first_violation: n as usize,
                    },
                    checked: Some((cert.bound, n)),
                    max_checked_displacement: max_checked,
                });
            }
        }
        x = next;
    }
    Ok(CertificationReport {
        certificate: cert.clone(),
        hypothesis: hypothesis.clone(),
        verdict: CertVerdict::Pass,
        checked: Some((cert.bound, total - 1)),
        max_checked_displacement: max_checked,
    })
}

/// Batch variant of [`certify_by_iteration`]: one orbit pass serves every
/// certificate, checking each over `[bound, bound + checks)`. Saves the
/// repeated multi-million-step walks when certifying a grid of epsilons and
/// lambdas against the same operator.
pub fn certify_many_by_iteration(
    space: &Space,
    op: &Operator,
    x0: &SpacePoint,
    items: &[(RateCertificate, RateHypothesis)],
    checks: u64,
) -> Result<Vec<CertificationReport>> {
    if items.is_empty() {
        return Err(Error::EmptyInput("no certificates to check".into()));
    }
    let checks = checks.max(1);
    for (cert, hyp) in items {
        check_hypothesis(space, x0, cert, hyp)?;
        if let RateHypothesis::ApproxFixedPoint { witness, displacement } = hyp {
            let actual = space.distance_unchecked(witness, &op.apply(space, witness)?);
            if actual > displacement + 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "stated witness displacement {displacement:.3e} understates the actual {actual:.3e}"
                )));
            }
        }
    }
    let max_bound = items.iter().map(|(c, _)| c.bound).max().unwrap();
    let total = max_bound + checks;
    let mut needed: std::collections::BTreeSet<u64> = std::collections::BTreeSet::new();
    for (cert, _) in items {
        for n in cert.bound..cert.bound + checks {
            needed.insert(n);
        }
    }
    let mut recorded: std::collections::BTreeMap<u64, f64> = std::collections::BTreeMap::new();
    let mut x = x0.clone();
    let mut prev_disp = f64::INFINITY;
    for n in 0..total {
        let next = op.apply(space, &x).map_err(|e| match e {
            Error::DomainViolation { .. } => Error::DomainViolation { step: n as usize },
            other => other,
        })?;
        let disp = space.distance_unchecked(&x, &next);
        if disp > prev_disp + 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "displacement increased at step {n}: the operator is not nonexpansive on this orbit"
            )));
        }
        prev_disp = disp;
        if needed.contains(&n) {
            recorded.insert(n, disp);
        }
        x = next;
    }
    let mut reports = Vec::with_capacity(items.len());
    for (cert, hyp) in items {
        let mut verdict = CertVerdict::Pass;
        let mut max_disp: f64 = 0.0;
        for n in cert.bound..cert.bound + checks {
            let disp = recorded[&n];
            max_disp = max_disp.max(disp);
            if disp > cert.epsilon {
                verdict = CertVerdict::Fail {
                    first_violation: n as usize,
                };
                break;
            }
        }
        reports.push(CertificationReport {
            certificate: cert.clone(),
            hypothesis: hyp.clone(),
            verdict,
            checked: Some((cert.bound, cert.bound + checks - 1)),
            max_checked_displacement: max_disp,
        });
    }
    Ok(reports)
}

// ---------------------------------------------------------------------------
// Fejér audit

#[derive(Clone, Debug, Serialize)]
pub struct FejerAnchorReport {
    pub anchor: SpacePoint,
    /// Last distance to the anchor; for a passing audit the sequence of
    /// distances is nonincreasing, so this brackets its limit from above.
    pub limit_estimate: f64,
    pub max_increase: f64,
    pub first_violation: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FejerReport {
    pub anchors: Vec<FejerAnchorReport>,
    pub pass: bool,
}

/// Monotonicity slack of the Fejér audit, in metric units.
pub const FEJER_SLACK: f64 = 1e-9;

pub fn fejer_audit(space: &Space, trace: &IterationTrace, anchors: &[SpacePoint]) -> Result<FejerReport> {
    if anchors.is_empty() {
        return Err(Error::EmptyInput("Fejér audit needs at least one anchor".into()));
    }
    let mut reports = Vec::with_capacity(anchors.len());
    for a in anchors {
        space.validate_point(a)?;
        let mut max_increase: f64 = 0.0;
        let mut first_violation = None;
        let mut prev = space.distance_unchecked(a, &trace.points[0]);
        for (n, p) in trace.points.iter().enumerate().skip(1) {
            let d = space.distance_unchecked(a, p);
            let inc = d - prev;
            if inc > max_increase {
                max_increase = inc;
            }
            if inc > FEJER_SLACK && first_violation.is_none() {
                first_violation = Some(n - 1);
            }
            prev = d;
        }
        reports.push(FejerAnchorReport {
            anchor: a.clone(),
            limit_estimate: prev,
            max_increase,
            first_violation,
        });
    }
    let pass = reports.iter().all(|r| r.first_violation.is_none());
    Ok(FejerReport {
        anchors: reports,
        pass,
    })
}

// ---------------------------------------------------------------------------
// proximal point algorithm

#[derive(Clone, Debug, Serialize)]
pub struct ProximalRunReport {
    pub trace: IterationTrace,
    /// Partial sum of the step sizes over the run.
    pub step_sum: f64,
    /// Whether the partial sum cleared the configured divergence threshold.
    /// Divergence of the full series is not decidable from a finite run;
    /// this only reports the prefix.
    pub steps_divergent_past_threshold: bool,
    pub divergence_threshold: f64,
}

/// Proximal point algorithm: `x_{n+1}` minimizes `F(y) + d(y, x_n)^2 / (2 l_n)`,
/// i.e. the resolvent of order `2 l_n` at `x_n`.
pub fn proximal_point_run(
    space: &Space,
    f: &Functional,
    step_sizes: &[f64],
    x0: &SpacePoint,
    divergence_threshold: f64,
) -> Result<ProximalRunReport> {
    if step_sizes.is_empty() {
        return Err(Error::EmptyInput("proximal run needs step sizes".into()));
    }
    if step_sizes.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::InvalidParameter("step sizes must be positive".into()));
    }
    f.validate(space)?;
    space.validate_point(x0)?;
    let mut points = vec![x0.clone()];
    let mut displacements = Vec::with_capacity(step_sizes.len());
    let mut normalized = Vec::with_capacity(step_sizes.len());
    let mut x = x0.clone();
    for (n, &ln) in step_sizes.iter().enumerate() {
        let params = ResolventParams::new(2.0 * ln);
        let next = f.resolvent(space, &params, &x).map_err(|e| match e {
            Error::NonConvergence { best, achieved, requested } => Error::NonConvergence {
                best,
                achieved,
                requested,
            },
            other => other,
        })?;
        displacements.push(space.distance_unchecked(&x, &next));
        normalized.push(space.distance_unchecked(&next, x0) / (n as f64 + 1.0));
        points.push(next.clone());
        x = next;
    }
    let step_sum: f64 = step_sizes.iter().sum();
    Ok(ProximalRunReport {
        trace: IterationTrace {
            points,
            displacements,
            normalized,
            operator: serde_json::json!({
                "kind": "proximal-point",
                "f": f,
                "steps": step_sizes.len(),
            }),
            space: space.config(),
        },
        step_sum,
        steps_divergent_past_threshold: step_sum >= divergence_threshold,
        divergence_threshold,
    })
}

// ---------------------------------------------------------------------------
// fixed points on unions of convex sets

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum UnionClassification {
    Fixed,
    Periodic { period: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct UnionSearchResult {
    pub point: SpacePoint,
    pub classification: UnionClassification,
    pub residual: f64,
    /// Piece index the returned point's construction started from.
    pub piece: usize,
}

/// Searches for a fixed (or periodic) point of a nonexpansive self-map of a
/// finite union of convex pieces: compute the orbit from `z`, take the
/// asymptotic center of its tail with respect to each piece, and chase the
/// centers. If some center's image stays in its own piece it is a fixed
/// point; otherwise the centers cycle and the first cycle element is
/// periodic. For firmly nonexpansive maps the periodic branch cannot occur.
pub fn union_fixed_point_search(
    space: &Space,
    op: &Operator,
    pieces: &[ConvexSet],
    z: &SpacePoint,
    window: usize,
    tol: f64,
    orbit_cap: f64,
) -> Result<UnionSearchResult> {
    if pieces.is_empty() {
        return Err(Error::EmptyInput("need at least one piece".into()));
    }
    for p in pieces {
        p.validate(space)?;
    }
    let steps = window.max(16);

    // orbit with boundedness guard
    let mut points = Vec::with_capacity(steps + 1);
    points.push(z.clone());
    let mut x = z.clone();
    for step in 0..steps {
        let next = op.apply(space, &x).map_err(|e| match e {
            Error::DomainViolation { .. } => Error::DomainViolation { step },
            other => other,
        })?;
        let from_start = space.distance_unchecked(&next, z);
        if from_start > orbit_cap {
            return Err(Error::UnboundedOrbit {
                step,
                distance: from_start,
                cap: orbit_cap,
            });
        }
        points.push(next.clone());
        x = next;
    }

    let tail = SequenceWindow::from_points(points[points.len() / 2..].to_vec());
    let center_tol = (tol / 10.0).max(1e-9);
    let mut centers = Vec::with_capacity(pieces.len());
    for piece in pieces {
        centers.push(asymptotic_center(space, &tail, piece, center_tol)?.center);
    }

    let membership_tol = 10.0 * tol;
    let images: Vec<SpacePoint> = centers
        .iter()
        .map(|c| op.apply(space, c))
        .collect::<Result<_>>()?;

    // a center whose image stays in its own piece is fixed
    for (k, (c, tc)) in centers.iter().zip(&images).enumerate() {
        if pieces[k].contains(space, tc, membership_tol)? {
            let residual = space.distance_unchecked(c, tc);
            if residual <= tol {
                return Ok(UnionSearchResult {
                    point: c.clone(),
                    classification: UnionClassification::Fixed,
                    residual,
                    piece: k,
                });
            }
        }
    }

    // otherwise chase the pieces the images land in until a cycle closes
    let next_piece = |k: usize| -> Result<usize> {
        for (j, piece) in pieces.iter().enumerate() {
            if piece.contains(space, &images[k], membership_tol)? {
                return Ok(j);
            }
        }
        Err(Error::NonConvergence {
            best: Box::new(images[k].clone()),
            achieved: f64::INFINITY,
            requested: tol,
        })
    };
    let mut visited = vec![usize::MAX; pieces.len()];
    let mut order: Vec<usize> = Vec::new();
    let mut k = 0usize;
    loop {
        if visited[k] != usize::MAX {
            // cycle detected: the slice from the first visit of k closes it
            let start = visited[k];
            let cycle = &order[start..];
            let m = cycle.len();
            let p0 = centers[cycle[0]].clone();
            // verify the return within the declared periodicity tolerance
            let mut y = p0.clone();
            for _ in 0..m {
                y = op.apply(space, &y)?;
            }
            let ret = space.distance_unchecked(&p0, &y);
            if ret > membership_tol {
                return Err(Error::NonConvergence {
                    best: Box::new(p0),
                    achieved: ret,
                    requested: membership_tol,
                });
            }
            let residual = space.distance_unchecked(&p0, &images[cycle[0]]);
            return Ok(UnionSearchResult {
                point: p0,
                classification: UnionClassification::Periodic { period: m },
                residual,
                piece: cycle[0],
            });
        }
        visited[k] = order.len();
        order.push(k);
        k = next_piece(k)?;
    }
}
