//! Randomized falsification harness for the convexity axioms W1-W4, the CN
//! inequality and uniform-convexity modulus claims. Reports are reproducible:
//! the same seed yields the same samples, witnesses and violations whether
//! the sweep runs sequentially or on the rayon pool.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::exec::{fold_max, Parallelism};
use crate::modulus::ModulusDescriptor;
use crate::space::{Space, SpaceConfig, SpaceKind, SpacePoint};

/// Seeded sampling plan for a verification sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sampler {
    pub seed: u64,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Region>,
}

impl Sampler {
    pub fn new(seed: u64, count: usize) -> Self {
        Sampler {
            seed,
            count,
            region: None,
        }
    }
}

/// Bounding region for sample generation.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Region {
    /// Coordinate box `[-halfwidth, halfwidth]^dim` (Euclidean, l-infinity).
    Box { halfwidth: f64 },
    /// Geodesic disk of the given radius around the hyperboloid base point.
    Disk { radius: f64 },
    /// The whole tree.
    Tree,
}

/// A single random point of the space's default (or given) region.
pub(crate) fn sample_default_region<R: Rng>(space: &Space, rng: &mut R, scale: f64) -> SpacePoint {
    sample_region(space, rng, &default_region(space, scale))
}

pub(crate) fn default_region(space: &Space, scale: f64) -> Region {
    match space.kind() {
        SpaceKind::Euclidean { .. } | SpaceKind::Linf { .. } => Region::Box { halfwidth: scale },
        SpaceKind::Hyperboloid => Region::Disk { radius: scale },
        SpaceKind::Tree(_) => Region::Tree,
    }
}

pub(crate) fn sample_region<R: Rng>(space: &Space, rng: &mut R, region: &Region) -> SpacePoint {
    match (space.kind(), region) {
        (SpaceKind::Euclidean { dim }, Region::Box { halfwidth }) => SpacePoint::Euclidean(
            (0..*dim)
                .map(|_| rng.gen_range(-halfwidth..=*halfwidth))
                .collect(),
        ),
        (SpaceKind::Linf { dim }, Region::Box { halfwidth }) => SpacePoint::Linf(
            (0..*dim)
                .map(|_| rng.gen_range(-halfwidth..=*halfwidth))
                .collect(),
        ),
        (SpaceKind::Hyperboloid, Region::Disk { radius }) => {
            let rho = rng.gen::<f64>() * radius;
            let theta = rng.gen::<f64>() * std::f64::consts::TAU;
            SpacePoint::Hyperboloid(vec![
                rho.cosh(),
                rho.sinh() * theta.cos(),
                rho.sinh() * theta.sin(),
            ])
        }
        (SpaceKind::Tree(tree), Region::Tree) => {
            let total = tree.total_length();
            let mut pick = rng.gen::<f64>() * total;
            let mut edge = 0;
            for e in 0..tree.edge_count() {
                if pick <= tree.edge(e).2 {
                    edge = e;
                    break;
                }
                pick -= tree.edge(e).2;
                edge = e;
            }
            SpacePoint::Tree {
                edge,
                offset: pick.clamp(0.0, tree.edge(edge).2),
            }
        }
        // region kind does not match the space: fall back to the default
        _ => sample_default_region(space, rng, 2.0),
    }
}

/// Deterministic sample stream: `count` points of the sampler's region.
pub fn sample_points(space: &Space, sampler: &Sampler) -> Vec<SpacePoint> {
    let region = sampler
        .region
        .clone()
        .unwrap_or_else(|| default_region(space, 2.0));
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    (0..sampler.count)
        .map(|_| sample_region(space, &mut rng, &region))
        .collect()
}

#[derive(Clone, Debug)]
struct SampleTuple {
    x: SpacePoint,
    y: SpacePoint,
    z: SpacePoint,
    w: SpacePoint,
    l1: f64,
    l2: f64,
}

fn sample_tuples(space: &Space, sampler: &Sampler) -> Vec<SampleTuple> {
    let region = sampler
        .region
        .clone()
        .unwrap_or_else(|| default_region(space, 2.0));
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    (0..sampler.count)
        .map(|_| SampleTuple {
            x: sample_region(space, &mut rng, &region),
            y: sample_region(space, &mut rng, &region),
            z: sample_region(space, &mut rng, &region),
            w: sample_region(space, &mut rng, &region),
            l1: rng.gen(),
            l2: rng.gen(),
        })
        .collect()
}

/// Violation of the CN inequality at a triple: positive means the midpoint
/// of `[x, y]` is too far from `z` for a CAT(0) space, in squared units.
pub fn cn_violation(space: &Space, x: &SpacePoint, y: &SpacePoint, z: &SpacePoint) -> Result<f64> {
    let m = space.convex_combine(x, y, 0.5)?;
    let dzm = space.distance(z, &m)?;
    let dzx = space.distance(z, x)?;
    let dzy = space.distance(z, y)?;
    let dxy = space.distance(x, y)?;
    Ok(dzm * dzm - (0.5 * dzx * dzx + 0.5 * dzy * dzy - 0.25 * dxy * dxy))
}

/// The fixed CN counterexample triple on a 2-D coordinate plane; it violates
/// the inequality by exactly 1.0 under the max norm and satisfies it in the
/// Euclidean plane.
pub fn cn_probe_points(space: &Space) -> Option<(SpacePoint, SpacePoint, SpacePoint)> {
    match space.kind() {
        SpaceKind::Linf { dim: 2 } => Some((
            SpacePoint::linf([1.0, 1.0]),
            SpacePoint::linf([1.0, -1.0]),
            SpacePoint::linf([-1.0, 0.0]),
        )),
        SpaceKind::Euclidean { dim: 2 } => Some((
            SpacePoint::euclidean([1.0, 1.0]),
            SpacePoint::euclidean([1.0, -1.0]),
            SpacePoint::euclidean([-1.0, 0.0]),
        )),
        _ => None,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AxiomCheck {
    pub axiom: String,
    pub samples: usize,
    pub max_violation: f64,
    pub witness: Option<serde_json::Value>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpaceAxiomReport {
    pub space: SpaceConfig,
    pub seed: u64,
    pub sample_count: usize,
    pub tol: f64,
    pub checks: Vec<AxiomCheck>,
    pub pass: bool,
}

/// Sweeps the convexity axioms W1-W4 over seeded samples, plus the CN
/// inequality where the space claims it (or `force_cn` is set) and the
/// betweenness transitivity property on uniquely geodesic spaces.
pub fn verify_space_axioms(
    space: &Space,
    sampler: &Sampler,
    tol: f64,
    force_cn: bool,
) -> Result<SpaceAxiomReport> {
    verify_space_axioms_with(Parallelism::default(), space, sampler, tol, force_cn)
}

pub fn verify_space_axioms_with(
    par: Parallelism,
    space: &Space,
    sampler: &Sampler,
    tol: f64,
    force_cn: bool,
) -> Result<SpaceAxiomReport> {
    if sampler.count == 0 {
        return Err(Error::EmptyInput("sampler count must be at least 1".into()));
    }
    let tuples = sample_tuples(space, sampler);
    let mut checks = Vec::new();

    let witness_json = |t: &SampleTuple| {
        json!({
            "x": t.x, "y": t.y, "z": t.z, "w": t.w,
            "lambda": t.l1, "lambda2": t.l2,
        })
    };

    let d = |a: &SpacePoint, b: &SpacePoint| space.distance_unchecked(a, b);
    let cmb = |a: &SpacePoint, b: &SpacePoint, l: f64| space.combine_unchecked(a, b, l);

    // W1: d(z, W(x,y,l)) <= (1-l) d(z,x) + l d(z,y)
    let w1 = fold_max(par, &tuples, |_, t| {
        let m = cmb(&t.x, &t.y, t.l1);
        (d(&t.z, &m) - ((1.0 - t.l1) * d(&t.z, &t.x) + t.l1 * d(&t.z, &t.y)), ())
    });
    push_check(&mut checks, "W1", &tuples, w1, tol, &witness_json);

    // W2: d(W(x,y,l1), W(x,y,l2)) = |l1 - l2| d(x,y)
    let w2 = fold_max(par, &tuples, |_, t| {
        let p = cmb(&t.x, &t.y, t.l1);
        let q = cmb(&t.x, &t.y, t.l2);
        ((d(&p, &q) - (t.l1 - t.l2).abs() * d(&t.x, &t.y)).abs(), ())
    });
    push_check(&mut checks, "W2", &tuples, w2, tol, &witness_json);

    // W3: W(x,y,l) = W(y,x,1-l)
    let w3 = fold_max(par, &tuples, |_, t| {
        (d(&cmb(&t.x, &t.y, t.l1), &cmb(&t.y, &t.x, 1.0 - t.l1)), ())
    });
    push_check(&mut checks, "W3", &tuples, w3, tol, &witness_json);

    // W4: d(W(x,z,l), W(y,w,l)) <= (1-l) d(x,y) + l d(z,w)
    let w4 = fold_max(par, &tuples, |_, t| {
        let p = cmb(&t.x, &t.z, t.l1);
        let q = cmb(&t.y, &t.w, t.l1);
        (d(&p, &q) - ((1.0 - t.l1) * d(&t.x, &t.y) + t.l1 * d(&t.z, &t.w)), ())
    });
    push_check(&mut checks, "W4", &tuples, w4, tol, &witness_json);

    if space.claims_cn() || force_cn {
        let mut cn_tuples = tuples.clone();
        if let Some((px, py, pz)) = cn_probe_points(space) {
            cn_tuples.push(SampleTuple {
                w: pz.clone(),
                x: px,
                y: py,
                z: pz,
                l1: 0.5,
                l2: 0.5,
            });
        }
        let cn = fold_max(par, &cn_tuples, |_, t| {
            let m = cmb(&t.x, &t.y, 0.5);
            let dzm = d(&t.z, &m);
            let (dzx, dzy, dxy) = (d(&t.z, &t.x), d(&t.z, &t.y), d(&t.x, &t.y));
            (
                dzm * dzm - (0.5 * dzx * dzx + 0.5 * dzy * dzy - 0.25 * dxy * dxy),
                (),
            )
        });
        push_check(&mut checks, "CN", &cn_tuples, cn, tol, &witness_json);
    }

    if space.uniquely_geodesic() {
        // construct chains x -> y -> z -> w with y on [x, z] and w beyond z,
        // then require y and z to lie between x and w
        let bt = fold_max(par, &tuples, |_, t| {
            let dxz = d(&t.x, &t.z);
            if dxz <= 10.0 * space.tol() {
                return (0.0, ());
            }
            let beta = 0.05 + 0.9 * t.l1;
            let y = cmb(&t.x, &t.z, beta);
            let extra = (0.1 + 0.8 * t.l2) * d(&y, &t.z);
            match space.extend_geodesic(&y, &t.z, extra) {
                None => (0.0, ()),
                Some(w) => {
                    let v1 = (d(&t.x, &w) - d(&t.x, &y) - d(&y, &w)).abs();
                    let v2 = (d(&t.x, &w) - d(&t.x, &t.z) - d(&t.z, &w)).abs();
                    (v1.max(v2), ())
                }
            }
        });
        push_check(&mut checks, "betweenness", &tuples, bt, tol, &witness_json);
    }

    let pass = checks.iter().all(|c| c.pass);
    Ok(SpaceAxiomReport {
        space: space.config(),
        seed: sampler.seed,
        sample_count: sampler.count,
        tol,
        checks,
        pass,
    })
}

fn push_check(
    checks: &mut Vec<AxiomCheck>,
    name: &str,
    tuples: &[SampleTuple],
    fold: Option<(f64, usize, ())>,
    tol: f64,
    witness_json: &dyn Fn(&SampleTuple) -> serde_json::Value,
) {
    let (max_violation, idx) = fold.map(|(v, i, _)| (v, i)).unwrap_or((0.0, 0));
    let pass = max_violation <= tol;
    checks.push(AxiomCheck {
        axiom: name.into(),
        samples: tuples.len(),
        max_violation,
        witness: if tuples.is_empty() {
            None
        } else {
            Some(witness_json(&tuples[idx]))
        },
        pass,
    });
}

// ---------------------------------------------------------------------------
// modulus audit

#[derive(Clone, Debug)]
struct PremiseSample {
    a: SpacePoint,
    x: SpacePoint,
    y: SpacePoint,
    r: f64,
    eps: f64,
    lambda: f64,
}

const R_GRID: [f64; 3] = [0.5, 1.0, 5.0];
const EPS_GRID: [f64; 4] = [0.1, 0.5, 1.0, 1.9];

/// Premise-conditioned samples: `d(x,a) <= r`, `d(y,a) <= r`, `d(x,y) >= eps r`.
/// Rejection sampling plus constructed near-antipodal and diagonal probes so
/// the high-eps cells are populated in every model space.
fn sample_premises(space: &Space, sampler: &Sampler) -> Vec<PremiseSample> {
    let region = sampler
        .region
        .clone()
        .unwrap_or_else(|| default_region(space, 2.0));
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    let mut out = Vec::with_capacity(sampler.count);
    let tree_reach = space.tree_space().map(|t| t.total_length());

    'outer: for i in 0..sampler.count {
        let r = {
            let r = R_GRID[i % R_GRID.len()];
            // trees cannot hold premises with r beyond their total length
            match tree_reach {
                Some(reach) => {
                    if r > reach {
                        reach
                    } else {
                        r
                    }
                }
                None => r,
            }
        };
        let eps = EPS_GRID[(i / R_GRID.len()) % EPS_GRID.len()];
        let lambda = rng.gen::<f64>();

        // every fourth sample leads with the degenerate diagonal probe so
        // flat-sphere geometries surface in every cell that admits them
        let prefer_diagonal = i % 4 == 0;
        for attempt in 0..400 {
            let a = sample_region(space, &mut rng, &region);
            let (x, y) = if (attempt == 0 && prefer_diagonal)
                || (attempt >= 150 && attempt % 2 == 0)
            {
                match diagonal_probe(space, &a, r, &mut rng) {
                    Some(pair) => pair,
                    None => continue,
                }
            } else if attempt < 150 {
                // random radii
                let p1 = sample_region(space, &mut rng, &region);
                let p2 = sample_region(space, &mut rng, &region);
                let t1 = rng.gen::<f64>() * r;
                let t2 = rng.gen::<f64>() * r;
                match (move_toward(space, &a, &p1, t1), move_toward(space, &a, &p2, t2)) {
                    (Some(x), Some(y)) => (x, y),
                    _ => continue,
                }
            } else {
                // antipodal probe: exactly r on both sides of a
                let p = sample_region(space, &mut rng, &region);
                let x = match move_toward(space, &a, &p, r) {
                    Some(x) => x,
                    None => continue,
                };
                let y = match space.extend_geodesic(&p, &a, r) {
                    Some(y) => y,
                    None => continue,
                };
                (x, y)
            };
            let dxa = space.distance_unchecked(&x, &a);
            let dya = space.distance_unchecked(&y, &a);
            let dxy = space.distance_unchecked(&x, &y);
            if dxa <= r + 1e-12 && dya <= r + 1e-12 && dxy >= eps * r - 1e-12 {
                out.push(PremiseSample {
                    a,
                    x,
                    y,
                    r,
                    eps,
                    lambda,
                });
                continue 'outer;
            }
        }
        // cell empirically unreachable in this space (e.g. eps ~ 2 on a
        // short tree); skip it rather than fabricate a sample
    }
    out
}

fn move_toward(space: &Space, from: &SpacePoint, toward: &SpacePoint, dist: f64) -> Option<SpacePoint> {
    let d = space.distance_unchecked(from, toward);
    if d <= space.tol() {
        return None;
    }
    if dist <= d {
        Some(space.combine_unchecked(from, toward, dist / d))
    } else {
        space.extend_geodesic(from, toward, dist - d)
    }
}

fn diagonal_probe<R: Rng>(
    space: &Space,
    a: &SpacePoint,
    r: f64,
    rng: &mut R,
) -> Option<(SpacePoint, SpacePoint)> {
    let dirs: [[f64; 2]; 2] = [[1.0, 1.0], [1.0, -1.0]];
    let flip = if rng.gen::<bool>() { 1.0 } else { -1.0 };
    match (space.kind(), a) {
        (SpaceKind::Linf { dim: 2 }, SpacePoint::Linf(c)) => {
            // max-norm unit diagonals
            let x = SpacePoint::linf([c[0] + flip * r * dirs[0][0], c[1] + flip * r * dirs[0][1]]);
            let y = SpacePoint::linf([c[0] + flip * r * dirs[1][0], c[1] + flip * r * dirs[1][1]]);
            Some((x, y))
        }
        (SpaceKind::Euclidean { dim: 2 }, SpacePoint::Euclidean(c)) => {
            let s = r / 2f64.sqrt();
            let x = SpacePoint::euclidean([c[0] + flip * s, c[1] + flip * s]);
            let y = SpacePoint::euclidean([c[0] + flip * s, c[1] - flip * s]);
            Some((x, y))
        }
        _ => None,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModulusCheck {
    pub variant: String,
    pub samples: usize,
    pub max_violation: f64,
    pub witness: Option<serde_json::Value>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModulusAuditReport {
    pub space: SpaceConfig,
    pub modulus: ModulusDescriptor,
    pub seed: u64,
    pub sample_count: usize,
    pub tol: f64,
    pub checks: Vec<ModulusCheck>,
    pub pass: bool,
}

/// Audits a claimed modulus of uniform convexity: the midpoint bound, its
/// interpolated variant, monotone substitution in `eps` and the `s >= r`
/// substitution, plus the monotone-in-r claim of the descriptor itself.
pub fn modulus_audit(
    space: &Space,
    modulus: &ModulusDescriptor,
    sampler: &Sampler,
    tol: f64,
) -> Result<ModulusAuditReport> {
    modulus_audit_with(Parallelism::default(), space, modulus, sampler, tol)
}

pub fn modulus_audit_with(
    par: Parallelism,
    space: &Space,
    modulus: &ModulusDescriptor,
    sampler: &Sampler,
    tol: f64,
) -> Result<ModulusAuditReport> {
    if sampler.count == 0 {
        return Err(Error::EmptyInput("sampler count must be at least 1".into()));
    }
    let samples = sample_premises(space, sampler);
    let mut checks = Vec::new();

    let witness_json = |s: &PremiseSample| {
        json!({
            "a": s.a, "x": s.x, "y": s.y,
            "r": s.r, "eps": s.eps, "lambda": s.lambda,
        })
    };
    let d = |a: &SpacePoint, b: &SpacePoint| space.distance_unchecked(a, b);

    let eta = |r: f64, e: f64| modulus.eta(r, e).unwrap_or(f64::NAN);

    // midpoint bound: d(1/2 x + 1/2 y, a) <= (1 - eta(r, eps)) r
    let mid = fold_max(par, &samples, |_, s| {
        let m = space.combine_unchecked(&s.x, &s.y, 0.5);
        (d(&m, &s.a) - (1.0 - eta(s.r, s.eps)) * s.r, ())
    });
    push_mod_check(&mut checks, "midpoint", &samples, mid, tol, &witness_json);

    // interpolated bound: d((1-l)x + l y, a) <= (1 - 2 l (1-l) eta(r, eps)) r
    let interp = fold_max(par, &samples, |_, s| {
        let m = space.combine_unchecked(&s.x, &s.y, s.lambda);
        (
            d(&m, &s.a) - (1.0 - 2.0 * s.lambda * (1.0 - s.lambda) * eta(s.r, s.eps)) * s.r,
            (),
        )
    });
    push_mod_check(&mut checks, "interpolated", &samples, interp, tol, &witness_json);

    // substitution psi <= eps keeps the bound valid with eta(r, psi)
    let eps_mono = fold_max(par, &samples, |_, s| {
        let m = space.combine_unchecked(&s.x, &s.y, s.lambda);
        let dm = d(&m, &s.a);
        let mut worst = f64::NEG_INFINITY;
        for &psi in EPS_GRID.iter().filter(|&&p| p <= s.eps) {
            let v = dm - (1.0 - 2.0 * s.lambda * (1.0 - s.lambda) * eta(s.r, psi)) * s.r;
            worst = worst.max(v);
        }
        (worst, ())
    });
    push_mod_check(&mut checks, "eps-substitution", &samples, eps_mono, tol, &witness_json);

    // substitution s >= r keeps the bound valid with eta(s, eps)
    let r_subst = fold_max(par, &samples, |_, s| {
        let m = space.combine_unchecked(&s.x, &s.y, s.lambda);
        let dm = d(&m, &s.a);
        let mut worst = f64::NEG_INFINITY;
        for &big in R_GRID.iter().filter(|&&g| g >= s.r).chain([&(s.r)]) {
            let v = dm - (1.0 - 2.0 * s.lambda * (1.0 - s.lambda) * eta(big, s.eps)) * s.r;
            worst = worst.max(v);
        }
        (worst, ())
    });
    push_mod_check(&mut checks, "radius-substitution", &samples, r_subst, tol, &witness_json);

    // descriptor-level monotone-in-r claim
    if modulus.monotone_in_r {
        let mut worst: f64 = 0.0;
        for &e in &EPS_GRID {
            for w in R_GRID.windows(2) {
                worst = worst.max(eta(w[1], e) - eta(w[0], e));
            }
        }
        checks.push(ModulusCheck {
            variant: "monotone-in-r".into(),
            samples: R_GRID.len() * EPS_GRID.len(),
            max_violation: worst,
            witness: None,
            pass: worst <= tol,
        });
    }

    let pass = checks.iter().all(|c| c.pass);
    Ok(ModulusAuditReport {
        space: space.config(),
        modulus: modulus.clone(),
        seed: sampler.seed,
        sample_count: samples.len(),
        tol,
        checks,
        pass,
    })
}

fn push_mod_check(
    checks: &mut Vec<ModulusCheck>,
    name: &str,
    samples: &[PremiseSample],
    fold: Option<(f64, usize, ())>,
    tol: f64,
    witness_json: &dyn Fn(&PremiseSample) -> serde_json::Value,
) {
    let (max_violation, idx) = fold.map(|(v, i, _)| (v, i)).unwrap_or((0.0, 0));
    checks.push(ModulusCheck {
        variant: name.into(),
        samples: samples.len(),
        max_violation,
        witness: if samples.is_empty() {
            None
        } else {
            Some(witness_json(&samples[idx]))
        },
        pass: max_violation <= tol,
    });
}
