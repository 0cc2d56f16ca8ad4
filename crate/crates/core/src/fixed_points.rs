//! Fixed points `y* in D^*F(x, y)(y*)` of coderivative operators.
//!
//! Known characterizations answer first; the oracle always runs as an audit
//! and a disagreement is an error.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coderivatives::{MapDescriptor, MapKind, BOUNDARY_TOL};
use crate::error::{Error, Result};
use crate::oracle::{
    directed_ray_limit, estimate_limsup, membership_test, GraphPoint, LimsupEstimate,
    MembershipOutcome, SamplingSchedule, Verdict, FORM_TOL,
};
use crate::spaces::{dual_to_primal_selection, pairing, DualVector, IndexSet, PrimalVector, SpaceSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointQuery {
    pub map: MapDescriptor,
    pub base: GraphPoint,
    pub candidate: DualVector,
}

impl FixedPointQuery {
    pub fn new(map: MapDescriptor, base: GraphPoint, candidate: DualVector) -> Result<Self> {
        if !map.on_graph(&base.x, &base.y, 1e-12)? {
            return Err(Error::NotOnGraph("base point is not on the graph".into()));
        }
        if candidate.space() != map.space {
            return Err(Error::SpaceMismatch {
                left: map.space.to_string(),
                right: candidate.space().to_string(),
            });
        }
        Ok(FixedPointQuery { map, base, candidate })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Characterization {
    WholeDual,
    OriginOnly,
    /// `z_i >= 0` on `m`, free elsewhere.
    PositiveConeDual { m: IndexSet },
    OracleOnly { reason: String },
}

impl Characterization {
    /// `None` when only the oracle can decide.
    pub fn contains(&self, z: &DualVector) -> Option<bool> {
        match self {
            Characterization::WholeDual => Some(true),
            Characterization::OriginOnly => Some(z.is_zero()),
            Characterization::PositiveConeDual { m } => {
                let v = z.values()?;
                Some(m.iter().all(|i| v[i] >= 0.0))
            }
            Characterization::OracleOnly { .. } => None,
        }
    }
}

fn oracle_only(reason: &str) -> Characterization {
    Characterization::OracleOnly {
        reason: reason.to_string(),
    }
}

/// The fixed-point set at `base`, where a closed form is known.
pub fn characterize(map: &MapDescriptor, base: &GraphPoint) -> Characterization {
    let x = &base.x;
    match &map.kind {
        MapKind::Affine { lambda, .. } => {
            if *lambda == 1.0 {
                Characterization::WholeDual
            } else {
                Characterization::OriginOnly
            }
        }
        MapKind::BallProj { r } => {
            let n = x.norm();
            if (n - r).abs() <= BOUNDARY_TOL * r.max(1.0) {
                oracle_only("base on the sphere")
            } else if n < *r {
                Characterization::WholeDual
            } else {
                Characterization::OriginOnly
            }
        }
        MapKind::ConeProj => {
            if x.values().iter().any(|&v| v < 0.0) {
                return oracle_only("base has negative coordinates");
            }
            let zeros = x
                .values()
                .iter()
                .enumerate()
                .filter(|(_, &v)| v == 0.0)
                .map(|(i, _)| i);
            match IndexSet::new(zeros, x.len()) {
                Ok(m) => Characterization::PositiveConeDual { m },
                Err(_) => oracle_only("index set"),
            }
        }
        MapKind::L1BallProj { r } => {
            let n = x.norm();
            if (n - r).abs() <= BOUNDARY_TOL * r.max(1.0) {
                return oracle_only("base on the sphere");
            }
            if n < *r {
                return Characterization::WholeDual;
            }
            let radial = (r / n) * x;
            match radial.distance(&base.y) {
                Ok(d) if d <= 1e-12 * (1.0 + r) => Characterization::OriginOnly,
                _ => oracle_only("base value is not the radial member"),
            }
        }
        MapKind::PolyProj { .. } => oracle_only("no closed form for polynomial subspaces"),
    }
}

/// Rays that expose a nonzero fixed-point quotient: `+-j*(z)` and, in `l_1`,
/// the coordinate ray `z_n e_n` at the largest `|z_n|`.
pub fn hint_rays(map: &MapDescriptor, candidate: &DualVector) -> Result<Vec<PrimalVector>> {
    let mut rays = Vec::new();
    if candidate.is_zero() {
        return Ok(rays);
    }
    let j = dual_to_primal_selection(candidate)?;
    rays.push(-&j);
    rays.push(j);
    if let (SpaceSpec::L1 { .. }, Some(c)) = (map.space, candidate.values()) {
        let k = (0..c.len()).fold(0, |b, i| if c[i].abs() > c[b].abs() { i } else { b });
        let mut e = vec![0.0; c.len()];
        e[k] = c[k];
        rays.push(PrimalVector::new(map.space, e)?);
    }
    Ok(rays)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointReport {
    pub characterization: Characterization,
    /// Answer dictated by the characterization, if any.
    pub expected: Option<Verdict>,
    pub oracle: MembershipOutcome,
    pub verdict: Verdict,
    /// Set for exterior `l_1` bases, where sampling only the radial member
    /// can refute but not certify membership.
    pub one_sided: bool,
}

/// Registry answer audited by the oracle with `x* = y* = candidate`.
pub fn is_fixed_point(q: &FixedPointQuery, schedule: &SamplingSchedule) -> Result<FixedPointReport> {
    let characterization = characterize(&q.map, &q.base);
    let expected = if q.candidate.is_zero() {
        Some(Verdict::Member)
    } else {
        characterization.contains(&q.candidate).map(|m| if m { Verdict::Member } else { Verdict::NonMember })
    };
    let hints = hint_rays(&q.map, &q.candidate)?;
    let oracle = membership_test(&q.map, &q.base, &q.candidate, &q.candidate, schedule, &hints)?;
    if let Some(g) = oracle.estimate.form_disagreement {
        if g > FORM_TOL {
            return Err(Error::AuditDisagreement(format!(
                "fixed-point quotient forms differ by {g:e}"
            )));
        }
    }
    if let Some(e) = expected {
        if e != oracle.verdict {
            return Err(Error::AuditDisagreement(format!(
                "registry says {e:?}, oracle says {:?} (value {:e})",
                oracle.verdict, oracle.value
            )));
        }
    }
    let one_sided = matches!(q.map.kind, MapKind::L1BallProj { r } if q.base.x.norm() > r);
    Ok(FixedPointReport {
        verdict: expected.unwrap_or(oracle.verdict),
        characterization,
        expected,
        oracle,
        one_sided,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub trials: usize,
    pub checked: usize,
    pub violations: Vec<String>,
}

const PROBE_WEIGHTS: [f64; 3] = [0.25, 0.5, 0.75];
const PROBE_SEQUENCE: usize = 6;

/// Convex combinations of random member pairs, and limits of members
/// converging geometrically, must all be fixed points.
pub fn convexity_closedness_probe(
    map: &MapDescriptor,
    base: &GraphPoint,
    members: &[DualVector],
    trials: usize,
    schedule: &SamplingSchedule,
) -> Result<ProbeReport> {
    if members.is_empty() {
        return Err(Error::InvalidArgument("need at least one member".into()));
    }
    let mut violations = Vec::new();
    let mut checked = 0;
    let mut check = |z: DualVector, label: String, violations: &mut Vec<String>| -> Result<()> {
        checked += 1;
        let q = FixedPointQuery::new(map.clone(), base.clone(), z)?;
        match is_fixed_point(&q, schedule) {
            Ok(rep) if rep.verdict == Verdict::Member => {}
            Ok(rep) => violations.push(format!("{label}: {:?}", rep.verdict)),
            Err(Error::AuditDisagreement(msg)) => violations.push(format!("{label}: {msg}")),
            Err(e) => return Err(e),
        }
        Ok(())
    };
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed ^ 0x5eed);
    for trial in 0..trials {
        let a = &members[rng.random_range(0..members.len())];
        let b = &members[rng.random_range(0..members.len())];
        for t in PROBE_WEIGHTS {
            let z = a.scaled(t).plus_scaled(1.0 - t, b)?;
            check(z, format!("trial {trial} t={t}"), &mut violations)?;
        }
        // z_k -> b; the limit is b itself
        let tail = b.plus_scaled(0.5f64.powi(PROBE_SEQUENCE as i32), &(a - b))?;
        check(tail, format!("trial {trial} sequence"), &mut violations)?;
        check(b.clone(), format!("trial {trial} limit"), &mut violations)?;
    }
    Ok(ProbeReport {
        trials,
        checked,
        violations,
    })
}

/// The fixed-point quotient of the best-approximation map `P_n` at `f`.
pub fn poly_fixed_point_quotient(
    f: &PrimalVector,
    n: usize,
    candidate: &DualVector,
    schedule: &SamplingSchedule,
) -> Result<LimsupEstimate> {
    let map = MapDescriptor::poly(f.space(), n)?;
    let base = GraphPoint::at(&map, f.clone())?;
    let mut sched = schedule.clone();
    for k in 0..=n {
        sched
            .extra_rays
            .push(PrimalVector::from_fn(f.space(), |t| t.powi(k as i32))?);
    }
    estimate_limsup(&map, &base, candidate, candidate, &sched)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRayCheck {
    pub pairing: f64,
    pub analytic_limit: f64,
    pub directed_limit: f64,
    pub rel_error: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingExclusionReport {
    pub n: usize,
    pub f_norm: f64,
    pub p_norm: f64,
    /// `|<gamma, t^k>|`, `k = 0..n`.
    pub annihilation: Vec<f64>,
    /// `max_beta ||P(beta f) - beta P(f)||` over the probed factors.
    pub scaling_defect: f64,
    /// `mu` tested against `D^*P(f, p)(gamma)`.
    pub part_i: ScalingRayCheck,
    /// `gamma` tested as a fixed point, when `<gamma, f> != 0`.
    pub part_ii: Option<ScalingRayCheck>,
}

pub const ANNIHILATION_TOL: f64 = 1e-10;

/// Along `g = (1 + s) f` the best approximation scales to `(1 + s) p`, so the
/// `gamma` term drops out for `gamma` annihilating `P_n` and the quotient is
/// `|<mu, f>| / (||f|| + ||p||)`.
pub fn scaling_ray_exclusion(
    f: &PrimalVector,
    n: usize,
    mu: &DualVector,
    gamma: &DualVector,
    schedule: &SamplingSchedule,
) -> Result<ScalingExclusionReport> {
    let space = f.space();
    let map = MapDescriptor::poly(space, n)?;
    let pair = pairing(mu, f)?;
    if pair == 0.0 {
        return Err(Error::Precondition("<mu, f> must be nonzero".into()));
    }
    let annihilation = (0..=n)
        .map(|k| pairing(gamma, &PrimalVector::from_fn(space, |t| t.powi(k as i32))?).map(f64::abs))
        .collect::<Result<Vec<f64>>>()?;
    if annihilation.iter().any(|&a| a > ANNIHILATION_TOL) {
        return Err(Error::Precondition("gamma does not annihilate P_n".into()));
    }
    let base = GraphPoint::at(&map, f.clone())?;
    let p_norm = base.y.norm();
    let f_norm = f.norm();

    let mut scaling_defect = 0.0f64;
    for beta in [-2.0, -0.5, 0.5, 1.5, 3.0] {
        let scaled = map.evaluate(&(beta * f))?;
        scaling_defect = scaling_defect.max(scaled.distance(&(beta * &base.y))?);
    }

    let check = |xs: &DualVector, ys: &DualVector, pairing_value: f64| -> Result<ScalingRayCheck> {
        let dir = pairing_value.signum() * f;
        let analytic_limit = pairing_value.abs() / (f_norm + p_norm);
        let directed_limit = directed_ray_limit(&map, &base, xs, ys, &dir)?.limit;
        let outcome = membership_test(&map, &base, xs, ys, schedule, &[dir])?;
        Ok(ScalingRayCheck {
            pairing: pairing_value,
            analytic_limit,
            directed_limit,
            rel_error: (directed_limit - analytic_limit).abs() / analytic_limit,
            verdict: outcome.verdict,
        })
    };
    let part_i = check(mu, gamma, pair)?;
    let gamma_f = pairing(gamma, f)?;
    let part_ii = if gamma_f != 0.0 {
        Some(check(gamma, gamma, gamma_f)?)
    } else {
        None
    };
    Ok(ScalingExclusionReport {
        n,
        f_norm,
        p_norm,
        annihilation,
        scaling_defect,
        part_i,
        part_ii,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{duality_map, DEFAULT_GRID};

    fn pv(s: SpaceSpec, v: &[f64]) -> PrimalVector {
        PrimalVector::new(s, v.to_vec()).unwrap()
    }
    fn dv(s: SpaceSpec, v: &[f64]) -> DualVector {
        DualVector::coords(s, v.to_vec()).unwrap()
    }
    fn quick() -> SamplingSchedule {
        SamplingSchedule {
            dirs_per_level: 16,
            ..SamplingSchedule::with_seed(3)
        }
    }

    #[test]
    fn ball_registry() {
        let s = SpaceSpec::lp(2.0, 3).unwrap();
        let map = MapDescriptor::ball(s, 1.0).unwrap();
        let inside = GraphPoint::at(&map, pv(s, &[0.2, 0.1, -0.3])).unwrap();
        let outside = GraphPoint::at(&map, pv(s, &[2.0, 0.5, 0.0])).unwrap();
        assert_eq!(characterize(&map, &inside), Characterization::WholeDual);
        assert_eq!(characterize(&map, &outside), Characterization::OriginOnly);
        let w = dv(s, &[0.7, -0.4, 0.2]);
        let q = FixedPointQuery::new(map.clone(), inside, w.clone()).unwrap();
        assert_eq!(is_fixed_point(&q, &quick()).unwrap().verdict, Verdict::Member);
        let q = FixedPointQuery::new(map.clone(), outside.clone(), w).unwrap();
        assert_eq!(is_fixed_point(&q, &quick()).unwrap().verdict, Verdict::NonMember);
        let q = FixedPointQuery::new(map, outside, DualVector::zero(s)).unwrap();
        let rep = is_fixed_point(&q, &quick()).unwrap();
        assert_eq!(rep.verdict, Verdict::Member);
        assert_eq!(rep.oracle.estimate.max_abs_quotient, 0.0);
    }

    #[test]
    fn cone_registry() {
        let s = SpaceSpec::lp(2.0, 4).unwrap();
        let map = MapDescriptor::cone(s).unwrap();
        let base = GraphPoint::at(&map, pv(s, &[1.0, 2.0, 0.0, 0.0])).unwrap();
        let ch = characterize(&map, &base);
        assert_eq!(
            ch,
            Characterization::PositiveConeDual {
                m: IndexSet::new([2, 3], 4).unwrap()
            }
        );
        for (y, expect) in [([7.0, -3.0, 1.0, 0.0], Verdict::Member), ([7.0, -3.0, -1.0, 0.0], Verdict::NonMember)] {
            let q = FixedPointQuery::new(map.clone(), base.clone(), dv(s, &y)).unwrap();
            assert_eq!(is_fixed_point(&q, &quick()).unwrap().verdict, expect);
        }
    }

    #[test]
    fn lp_cone_duality_image_is_fixed() {
        let s = SpaceSpec::lp(3.0, 4).unwrap();
        let map = MapDescriptor::cone(s).unwrap();
        let f = pv(s, &[1.0, 0.0, 2.0, 0.5]);
        let base = GraphPoint::at(&map, f.clone()).unwrap();
        let q = FixedPointQuery::new(map, base, duality_map(&f).unwrap()).unwrap();
        assert_eq!(is_fixed_point(&q, &quick()).unwrap().verdict, Verdict::Member);
    }

    #[test]
    fn l1_exterior_is_origin_only() {
        let s = SpaceSpec::l1(4).unwrap();
        let map = MapDescriptor::l1_ball(s, 1.0).unwrap();
        let base = GraphPoint::at(&map, pv(s, &[2.0, 0.0, 0.0, 0.0])).unwrap();
        assert_eq!(characterize(&map, &base), Characterization::OriginOnly);
        let q = FixedPointQuery::new(map, base, dv(s, &[0.0, 0.3, -0.1, 0.0])).unwrap();
        let rep = is_fixed_point(&q, &quick()).unwrap();
        assert_eq!(rep.verdict, Verdict::NonMember);
        assert!(rep.one_sided);
    }

    #[test]
    fn probe_on_cone() {
        let s = SpaceSpec::lp(2.0, 4).unwrap();
        let map = MapDescriptor::cone(s).unwrap();
        let base = GraphPoint::at(&map, pv(s, &[1.0, 2.0, 0.0, 0.0])).unwrap();
        let members = vec![dv(s, &[1.0, -1.0, 0.5, 0.0]), dv(s, &[-2.0, 0.0, 0.0, 3.0]), DualVector::zero(s)];
        let rep = convexity_closedness_probe(&map, &base, &members, 3, &quick()).unwrap();
        assert!(rep.violations.is_empty(), "{:?}", rep.violations);
        assert_eq!(rep.checked, 15);
    }

    #[test]
    fn scaling_exclusion_values() {
        let s = SpaceSpec::c01(DEFAULT_GRID).unwrap();
        let f = PrimalVector::from_fn(s, |t| t * t).unwrap();
        let mu = DualVector::dirac(s, 1.0).unwrap();
        let gamma = DualVector::atoms(s, &[(0.0, 1.0), (0.5, -2.0), (1.0, 1.0)]).unwrap();
        let rep = scaling_ray_exclusion(&f, 1, &mu, &gamma, &quick()).unwrap();
        assert!((rep.p_norm - 0.875).abs() < 1e-9);
        assert!((rep.part_i.analytic_limit - 8.0 / 15.0).abs() < 1e-9);
        assert!(rep.part_i.rel_error < 1e-6);
        assert_eq!(rep.part_i.verdict, Verdict::NonMember);
        let ii = rep.part_ii.unwrap();
        assert!((ii.directed_limit - 4.0 / 15.0).abs() < 1e-6);
        assert_eq!(ii.verdict, Verdict::NonMember);
        let zero_pair = PrimalVector::from_fn(s, |t| t - 0.5).unwrap();
        let centered = DualVector::dirac(s, 0.5).unwrap();
        assert!(matches!(
            scaling_ray_exclusion(&zero_pair, 1, &centered, &gamma, &quick()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn poly_quotient_at_zero_candidate() {
        let s = SpaceSpec::c01(65).unwrap();
        let f = PrimalVector::from_fn(s, |t| t * t).unwrap();
        let mut sched = quick();
        sched.levels = 5;
        let est = poly_fixed_point_quotient(&f, 1, &DualVector::zero(s), &sched).unwrap();
        assert_eq!(est.verdict, Verdict::Member);
        assert_eq!(est.max_abs_quotient, 0.0);
    }
}
