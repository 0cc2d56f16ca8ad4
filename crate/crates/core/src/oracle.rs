//! Sampling estimator for the regular coderivative quotient
//!
//! `(<x*, u - x> - <y*, v - y>) / (||u - x|| + ||v - y||)`
//!
//! over graph points `(u, v)` shrinking to a base point `(x, y)`.
//!
//! Directions are drawn per level from a ChaCha stream keyed by
//! `(seed, level)`, so raising the direction count only appends directions
//! and a fixed seed reproduces every quotient bit for bit.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::coderivatives::{MapDescriptor, MapKind};
use crate::error::{Error, Result};
use crate::exec::{map_slice, Execution};
use crate::spaces::{dual_to_primal_selection, pairing, DualVector, PrimalVector, SpaceSpec};

pub const ACCEPT_FACTOR: f64 = 1e-3;
pub const REJECT_FACTOR: f64 = 1e-2;
/// Relative agreement required between the three fixed-point quotient forms.
pub const FORM_TOL: f64 = 1e-12;
/// Halvings used by [`directed_ray_limit`].
pub const RAY_STEPS: usize = 20;
const RAY_MIN_SAMPLES: usize = 6;

/// A point `(x, y)` with `y in F(x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphPoint {
    pub x: PrimalVector,
    pub y: PrimalVector,
}

impl GraphPoint {
    pub fn new(map: &MapDescriptor, x: PrimalVector, y: PrimalVector) -> Result<Self> {
        if !map.on_graph(&x, &y, 1e-12)? {
            return Err(Error::NotOnGraph(format!("{:?} is not in F({:?})", y.values(), x.values())));
        }
        Ok(GraphPoint { x, y })
    }

    /// Base point with `y` the value (or radial selection) at `x`.
    pub fn at(map: &MapDescriptor, x: PrimalVector) -> Result<Self> {
        let y = map.evaluate(&x)?;
        Ok(GraphPoint { x, y })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingSchedule {
    pub r0: f64,
    pub levels: usize,
    pub dirs_per_level: usize,
    #[serde(skip)]
    pub extra_rays: Vec<PrimalVector>,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for SamplingSchedule {
    fn default() -> Self {
        SamplingSchedule {
            r0: 0.5,
            levels: 8,
            dirs_per_level: 64,
            extra_rays: Vec::new(),
            seed: 0,
            execution: Execution::default(),
        }
    }
}

impl SamplingSchedule {
    pub fn with_seed(seed: u64) -> Self {
        SamplingSchedule {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels < 4 {
            return Err(Error::InvalidArgument(format!("need at least 4 levels, got {}", self.levels)));
        }
        if self.dirs_per_level < 16 {
            return Err(Error::InvalidArgument(format!(
                "need at least 16 directions per level, got {}",
                self.dirs_per_level
            )));
        }
        if !(self.r0.is_finite() && self.r0 > 0.0) {
            return Err(Error::InvalidArgument(format!("r0 must be positive, got {}", self.r0)));
        }
        Ok(())
    }

    pub fn radius(&self, level: usize) -> f64 {
        self.r0 * 0.5f64.powi(level as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Member,
    NonMember,
    Indeterminate,
}

impl Verdict {
    pub fn classify(value: f64, tol_accept: f64, tol_reject: f64) -> Verdict {
        if value <= tol_accept {
            Verdict::Member
        } else if value >= tol_reject {
            Verdict::NonMember
        } else {
            Verdict::Indeterminate
        }
    }
}

/// One evaluated quotient. The sample point is `u = x + radius * d_direction`
/// with `v` the map value at `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub level: usize,
    pub radius: f64,
    pub direction: usize,
    pub quotient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimsupEstimate {
    pub per_level_sup: Vec<f64>,
    pub extrapolated: f64,
    pub verdict: Verdict,
    pub tol_accept: f64,
    pub tol_reject: f64,
    /// Largest relative disagreement among the three fixed-point forms;
    /// present only when `x* = y*`.
    pub form_disagreement: Option<f64>,
    /// Largest `|quotient|`, handy for exact-zero checks.
    pub max_abs_quotient: f64,
    pub trace: Vec<TraceRow>,
}

impl LimsupEstimate {
    pub fn trace_csv(&self) -> String {
        trace_csv(&self.trace)
    }
}

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("level,radius,direction,quotient\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.level, r.radius, r.direction, r.quotient);
    }
    out
}

pub fn tolerances(ys: &DualVector) -> (f64, f64) {
    let s = 1.0 + ys.dual_norm();
    (ACCEPT_FACTOR * s, REJECT_FACTOR * s)
}

/// The coderivative quotient at one graph point `(u, v)`.
pub fn quotient(
    base: &GraphPoint,
    u: &PrimalVector,
    v: &PrimalVector,
    xs: &DualVector,
    ys: &DualVector,
) -> Result<f64> {
    let du = u - &base.x;
    let dv = v - &base.y;
    let den = du.norm() + dv.norm();
    if den == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok((pairing(xs, &du)? - pairing(ys, &dv)?) / den)
}

/// The three equal forms of the fixed-point quotient (`x* = y*`):
/// `<y*,u-x> - <y*,v-y>`, `<y*,(u-x)-(v-y)>` and `<y*,(u-v)-(x-y)>`, each
/// over the same denominator. Also returns the conditioning scale their
/// spread is measured against.
pub fn fixed_point_forms(
    base: &GraphPoint,
    u: &PrimalVector,
    v: &PrimalVector,
    ys: &DualVector,
) -> Result<([f64; 3], f64)> {
    let du = u - &base.x;
    let dv = v - &base.y;
    let den = du.norm() + dv.norm();
    if den == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let a = pairing(ys, &du)?;
    let b = pairing(ys, &dv)?;
    let q1 = (a - b) / den;
    let q2 = pairing(ys, &(&du - &dv))? / den;
    let q3 = pairing(ys, &(&(u - v) - &(&base.x - &base.y)))? / den;
    // condition number of the third form, whose operands are O(||x||)
    let size = u.norm() + v.norm() + base.x.norm() + base.y.norm();
    let scale = 1.0 + ys.dual_norm() * size / den;
    Ok(([q1, q2, q3], scale))
}

/// Unit direction drawn from `rng`. `C01` directions alternate between
/// cubic polynomials and piecewise-linear functions on nine knots.
pub fn random_direction(space: SpaceSpec, index: usize, rng: &mut ChaCha8Rng) -> PrimalVector {
    loop {
        let values: Vec<f64> = match space {
            SpaceSpec::Lp { dim, .. } | SpaceSpec::L1 { dim } => {
                (0..dim).map(|_| rng.sample(StandardNormal)).collect()
            }
            SpaceSpec::C01 { .. } => {
                let grid = space.grid().expect("grid");
                if index.is_multiple_of(2) {
                    let c: Vec<f64> = (0..4).map(|_| rng.sample(StandardNormal)).collect();
                    grid.iter()
                        .map(|&t| c.iter().rev().fold(0.0, |acc, a| acc * t + a))
                        .collect()
                } else {
                    let knots: Vec<f64> = (0..9).map(|_| rng.sample(StandardNormal)).collect();
                    grid.iter()
                        .map(|&t| {
                            let s = t * 8.0;
                            let k = (s.floor() as usize).min(7);
                            let w = s - k as f64;
                            (1.0 - w) * knots[k] + w * knots[k + 1]
                        })
                        .collect()
                }
            }
        };
        let v = PrimalVector::new(space, values).expect("finite draws");
        let n = v.norm();
        if n > 0.0 {
            return (1.0 / n) * &v;
        }
    }
}

fn level_rng(seed: u64, level: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(level as u64 + 1);
    rng
}

fn unit(v: &PrimalVector) -> Option<PrimalVector> {
    let n = v.norm();
    (n > 0.0 && n.is_finite()).then(|| (1.0 / n) * v)
}

/// Rays tried at every level besides the random ones: `+-j*(x*)`,
/// `+-j*(y*)`, `+-j*(x* - y*)`, `+-x`, coordinate rays (or `+-1`, `+-t` on a
/// grid), and the caller's extra rays.
pub fn standard_rays(
    base: &GraphPoint,
    xs: &DualVector,
    ys: &DualVector,
    extra: &[PrimalVector],
) -> Result<Vec<PrimalVector>> {
    let space = base.x.space();
    let mut rays = Vec::new();
    let mut push = |v: &PrimalVector| {
        if let Some(u) = unit(v) {
            rays.push(u.clone());
            rays.push(-&u);
        }
    };
    push(&dual_to_primal_selection(xs)?);
    push(&dual_to_primal_selection(ys)?);
    push(&dual_to_primal_selection(&(xs - ys))?);
    push(&base.x);
    match space {
        SpaceSpec::Lp { dim, .. } | SpaceSpec::L1 { dim } => {
            for i in 0..dim {
                push(&PrimalVector::basis(space, i)?);
            }
        }
        SpaceSpec::C01 { .. } => {
            push(&PrimalVector::from_fn(space, |_| 1.0)?);
            push(&PrimalVector::from_fn(space, |t| t)?);
        }
    }
    for e in extra {
        if e.space() != space {
            return Err(Error::SpaceMismatch {
                left: space.to_string(),
                right: e.space().to_string(),
            });
        }
        if let Some(u) = unit(e) {
            rays.push(u);
        }
    }
    Ok(rays)
}

/// Sup of the quotient per shrinking radius, and its verdict.
pub fn estimate_limsup(
    map: &MapDescriptor,
    base: &GraphPoint,
    xs: &DualVector,
    ys: &DualVector,
    schedule: &SamplingSchedule,
) -> Result<LimsupEstimate> {
    schedule.validate()?;
    let space = map.space;
    for s in [base.x.space(), base.y.space(), xs.space(), ys.space()] {
        if s != space {
            return Err(Error::SpaceMismatch {
                left: space.to_string(),
                right: s.to_string(),
            });
        }
    }
    let rays = standard_rays(base, xs, ys, &schedule.extra_rays)?;
    let fixed_point = xs == ys;

    let mut per_level_sup = Vec::with_capacity(schedule.levels);
    let mut trace = Vec::new();
    let mut form_disagreement: Option<f64> = fixed_point.then_some(0.0);
    let mut max_abs_quotient = 0.0f64;
    for level in 0..schedule.levels {
        let radius = schedule.radius(level);
        let mut rng = level_rng(schedule.seed, level);
        let mut dirs: Vec<PrimalVector> = (0..schedule.dirs_per_level)
            .map(|k| random_direction(space, k, &mut rng))
            .collect();
        dirs.extend(rays.iter().cloned());

        let results = map_slice(schedule.execution, &dirs, |d| -> Result<(f64, f64)> {
            let u = base.x.plus_scaled(radius, d)?;
            let v = map.evaluate(&u)?;
            let q = quotient(base, &u, &v, xs, ys)?;
            let gap = if fixed_point {
                let (f, scale) = fixed_point_forms(base, &u, &v, ys)?;
                let spread = f.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
                    - f.iter().fold(f64::INFINITY, |a, &b| a.min(b));
                spread / scale
            } else {
                0.0
            };
            Ok((q, gap))
        });
        let mut sup = f64::NEG_INFINITY;
        for (k, r) in results.into_iter().enumerate() {
            let (q, gap) = r?;
            sup = sup.max(q);
            max_abs_quotient = max_abs_quotient.max(q.abs());
            if let Some(g) = form_disagreement.as_mut() {
                *g = g.max(gap);
            }
            trace.push(TraceRow {
                level,
                radius,
                direction: k,
                quotient: q,
            });
        }
        per_level_sup.push(sup);
    }
    let k = per_level_sup.len();
    let extrapolated = per_level_sup[k - 1].max(per_level_sup[k - 2]);
    let (tol_accept, tol_reject) = tolerances(ys);
    Ok(LimsupEstimate {
        verdict: Verdict::classify(extrapolated, tol_accept, tol_reject),
        per_level_sup,
        extrapolated,
        tol_accept,
        tol_reject,
        form_disagreement,
        max_abs_quotient,
        trace,
    })
}

/// Quotients along a ray `u_t = x + t d` with their extrapolated limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RayLimit {
    /// `(t, quotient)` pairs, `t` decreasing.
    pub samples: Vec<(f64, f64)>,
    /// Richardson value `2 q(t/2) - q(t)` at the two smallest `t`.
    pub limit: f64,
}

/// Whether `u` lies in the same smooth piece of the map as `x`.
fn same_regime(map: &MapDescriptor, x: &PrimalVector, u: &PrimalVector) -> bool {
    match map.kind {
        MapKind::BallProj { r } | MapKind::L1BallProj { r } => {
            (x.norm() - r).signum() == (u.norm() - r).signum()
        }
        MapKind::ConeProj => x
            .values()
            .iter()
            .zip(u.values())
            .all(|(&a, &b)| a == 0.0 || a.signum() == b.signum()),
        MapKind::Affine { .. } | MapKind::PolyProj { .. } => true,
    }
}

fn geometric_ts(x: &PrimalVector, direction: &PrimalVector) -> Result<Vec<f64>> {
    let dn = direction.norm();
    if dn == 0.0 {
        return Err(Error::InvalidArgument("ray direction must be nonzero".into()));
    }
    let t0 = 0.25 * (1.0 + x.norm()) / dn;
    Ok((0..=RAY_STEPS).map(|j| t0 * 0.5f64.powi(j as i32)).collect())
}

fn richardson(samples: &[(f64, f64)]) -> Result<f64> {
    if samples.len() < RAY_MIN_SAMPLES {
        return Err(Error::InvalidArgument(
            "ray leaves the smooth piece of the map at every sampled scale".into(),
        ));
    }
    let n = samples.len();
    Ok(2.0 * samples[n - 1].1 - samples[n - 2].1)
}

/// Limit of the quotient along `u_t = x + t d` as `t` decreases to 0.
/// Leading scales where the ray has left the base point's smooth piece
/// are dropped.
pub fn directed_ray_limit(
    map: &MapDescriptor,
    base: &GraphPoint,
    xs: &DualVector,
    ys: &DualVector,
    direction: &PrimalVector,
) -> Result<RayLimit> {
    let mut samples = Vec::new();
    for t in geometric_ts(&base.x, direction)? {
        let u = base.x.plus_scaled(t, direction)?;
        if !same_regime(map, &base.x, &u) {
            samples.clear();
            continue;
        }
        let v = map.evaluate(&u)?;
        samples.push((t, quotient(base, &u, &v, xs, ys)?));
    }
    let limit = richardson(&samples)?;
    Ok(RayLimit { samples, limit })
}

/// The `l_1` ball quotient along `u_t = x + t d` with the radial selection,
/// after splitting the selection increment as
/// `(r/||u_t||) t d + (r/||u_t|| - r/||x||) x` and bounding its norm by the
/// sum of the two parts. The result bounds the true ray quotient from below.
pub fn l1_split_ray_limit(
    x: &PrimalVector,
    r: f64,
    phi: &DualVector,
    direction: &PrimalVector,
) -> Result<RayLimit> {
    if !matches!(x.space(), SpaceSpec::L1 { .. }) {
        return Err(Error::WrongSpace {
            expected: "L1",
            got: x.space().to_string(),
        });
    }
    let nx = x.norm();
    if nx <= r {
        return Err(Error::Precondition("x must lie outside the ball".into()));
    }
    let phi_x = pairing(phi, x)?;
    let phi_d = pairing(phi, direction)?;
    let dn = direction.norm();
    let mut samples = Vec::new();
    for t in geometric_ts(x, direction)? {
        let u = x.plus_scaled(t, direction)?;
        let nu = u.norm();
        if nu <= r {
            samples.clear();
            continue;
        }
        let num = t * phi_d * (1.0 - r / nu) - phi_x * (r / nu - r / nx);
        let den = t * dn * (1.0 + r / nu) + r * nx * (1.0 / nu - 1.0 / nx).abs();
        samples.push((t, num / den));
    }
    let limit = richardson(&samples)?;
    Ok(RayLimit { samples, limit })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipOutcome {
    pub verdict: Verdict,
    /// `max(extrapolated, ray limits)`.
    pub value: f64,
    pub estimate: LimsupEstimate,
    pub ray_limits: Vec<f64>,
}

/// Sampling estimate strengthened by ray limits along the hint directions.
pub fn membership_test(
    map: &MapDescriptor,
    base: &GraphPoint,
    xs: &DualVector,
    ys: &DualVector,
    schedule: &SamplingSchedule,
    hints: &[PrimalVector],
) -> Result<MembershipOutcome> {
    let mut sched = schedule.clone();
    sched.extra_rays.extend(hints.iter().cloned());
    let estimate = estimate_limsup(map, base, xs, ys, &sched)?;
    let mut ray_limits = Vec::new();
    for h in hints {
        if h.is_zero() {
            continue;
        }
        // a ray that never stays in one piece says nothing
        if let Ok(r) = directed_ray_limit(map, base, xs, ys, h) {
            ray_limits.push(r.limit);
        }
    }
    let value = ray_limits.iter().fold(estimate.extrapolated, |a, &b| a.max(b));
    Ok(MembershipOutcome {
        verdict: Verdict::classify(value, estimate.tol_accept, estimate.tol_reject),
        value,
        estimate,
        ray_limits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{dual_norm, DualVector};

    fn l2(d: usize) -> SpaceSpec {
        SpaceSpec::lp(2.0, d).unwrap()
    }
    fn pv(s: SpaceSpec, v: &[f64]) -> PrimalVector {
        PrimalVector::new(s, v.to_vec()).unwrap()
    }
    fn dv(s: SpaceSpec, v: &[f64]) -> DualVector {
        DualVector::coords(s, v.to_vec()).unwrap()
    }

    #[test]
    fn identity_quotient_vanishes() {
        let s = l2(2);
        let map = MapDescriptor::translation(PrimalVector::zeros(s)).unwrap();
        let base = GraphPoint::at(&map, pv(s, &[0.3, 0.7])).unwrap();
        let w = dv(s, &[1.0, 2.0]);
        let est = estimate_limsup(&map, &base, &w, &w, &SamplingSchedule::default()).unwrap();
        assert_eq!(est.verdict, Verdict::Member);
        assert!(est.extrapolated.abs() <= 1e-6);
        assert!(est.form_disagreement.unwrap() <= FORM_TOL);
    }

    #[test]
    fn translation_ray_limit() {
        let s = l2(2);
        let map = MapDescriptor::translation(pv(s, &[1.0, -1.0])).unwrap();
        let base = GraphPoint::at(&map, pv(s, &[0.0, 0.0])).unwrap();
        let xs = dv(s, &[1.0, 0.0]);
        let ys = dv(s, &[0.0, 1.0]);
        let d = dual_to_primal_selection(&(&xs - &ys)).unwrap();
        let lim = directed_ray_limit(&map, &base, &xs, &ys, &d).unwrap();
        assert!((lim.limit - dual_norm(&(&xs - &ys)) / 2.0).abs() < 1e-9);
        let out = membership_test(&map, &base, &xs, &ys, &SamplingSchedule::default(), &[d]).unwrap();
        assert_eq!(out.verdict, Verdict::NonMember);
    }

    #[test]
    fn scaled_affine_rays() {
        let s = l2(2);
        let w = dv(s, &[1.0, 0.0]);
        let d = dual_to_primal_selection(&w).unwrap();
        for (lambda, dir) in [(2.0, -&d), (0.5, d.clone())] {
            let map = MapDescriptor::affine(pv(s, &[0.5, 0.5]), lambda).unwrap();
            let base = GraphPoint::at(&map, pv(s, &[0.2, 0.1])).unwrap();
            let lim = directed_ray_limit(&map, &base, &w, &w, &dir).unwrap();
            assert!((lim.limit - 1.0 / 3.0).abs() < 1e-9, "{lambda}: {}", lim.limit);
        }
    }

    #[test]
    fn ball_exterior_closed_form_is_member() {
        let s = l2(2);
        let map = MapDescriptor::ball(s, 1.0).unwrap();
        let base = GraphPoint::at(&map, pv(s, &[2.0, 0.0])).unwrap();
        let est = estimate_limsup(
            &map,
            &base,
            &dv(s, &[0.0, 0.5]),
            &dv(s, &[0.0, 1.0]),
            &SamplingSchedule::default(),
        )
        .unwrap();
        assert_eq!(est.verdict, Verdict::Member);
    }

    #[test]
    fn l1_limits() {
        let s = SpaceSpec::l1(4).unwrap();
        let map = MapDescriptor::l1_ball(s, 1.0).unwrap();
        let x = pv(s, &[2.0, 0.0, 0.0, 0.0]);
        let base = GraphPoint::at(&map, x.clone()).unwrap();
        let e = |i: usize, sgn: f64| (sgn * &PrimalVector::basis(s, i).unwrap(), {
            let mut c = vec![0.0; 4];
            c[i] = sgn;
            dv(s, &c)
        });
        for ((d, phi), split, direct) in [
            (e(1, 1.0), 0.25, 0.25),
            (e(0, 1.0), 0.5, 1.0),
            (e(0, -1.0), 0.5, 1.0),
        ] {
            let a = l1_split_ray_limit(&x, 1.0, &phi, &d).unwrap().limit;
            let b = directed_ray_limit(&map, &base, &phi, &phi, &d).unwrap().limit;
            assert!((a - split).abs() < 1e-6, "{a}");
            assert!((b - direct).abs() < 1e-6, "{b}");
        }
    }

    #[test]
    fn determinism_and_nesting() {
        let s = SpaceSpec::lp(3.0, 4).unwrap();
        let map = MapDescriptor::ball(s, 1.0).unwrap();
        let base = GraphPoint::at(&map, pv(s, &[1.0, 1.0, -0.5, 0.2])).unwrap();
        let w = dv(s, &[0.3, -0.2, 0.1, 0.4]);
        let mut sched = SamplingSchedule::with_seed(9);
        sched.levels = 6;
        sched.dirs_per_level = 16;
        let a = estimate_limsup(&map, &base, &w, &w, &sched).unwrap();
        let b = estimate_limsup(&map, &base, &w, &w, &sched).unwrap();
        assert_eq!(a, b);
        sched.execution = Execution::Sequential;
        assert_eq!(a, estimate_limsup(&map, &base, &w, &w, &sched).unwrap());
        sched.dirs_per_level = 32;
        let c = estimate_limsup(&map, &base, &w, &w, &sched).unwrap();
        for (x, y) in a.per_level_sup.iter().zip(&c.per_level_sup) {
            assert!(y >= x);
        }
        assert!(a.trace_csv().starts_with("level,radius,direction,quotient\n"));
    }

    #[test]
    fn schedule_validation() {
        let mut s = SamplingSchedule::default();
        s.levels = 3;
        assert!(s.validate().is_err());
        let mut s = SamplingSchedule::default();
        s.dirs_per_level = 8;
        assert!(s.validate().is_err());
        let mut s = SamplingSchedule::default();
        s.r0 = 0.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn graph_point_rejects_off_graph() {
        let s = l2(2);
        let map = MapDescriptor::ball(s, 1.0).unwrap();
        assert!(GraphPoint::new(&map, pv(s, &[2.0, 0.0]), pv(s, &[2.0, 0.0])).is_err());
        assert!(GraphPoint::new(&map, pv(s, &[2.0, 0.0]), pv(s, &[1.0, 0.0])).is_ok());
    }
}
