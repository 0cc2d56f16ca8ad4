//! Mappings with their graphs, and closed-form regular coderivatives
//! `D^*F(x, y)(w)` as symbolic dual sets.

use serde::Serialize;

use crate::chebyshev;
use crate::error::{Error, Result};
use crate::projections::{project_ball_l1_selection, project_ball_lp, project_positive_cone};
use crate::spaces::{
    duality_map, duality_map_l1_selection, pairing, DualVector, IndexSet, PrimalVector, SpaceSpec,
};

/// Relative slack for "on the boundary" and graph checks.
pub const BOUNDARY_TOL: f64 = 1e-12;
/// Strict positivity threshold for `Z_M`.
pub const POSITIVITY_TOL: f64 = 1e-12;
/// Slack of exact membership tests, relative to the size of the data.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum MapKind {
    /// `x -> x0 + lambda x`
    Affine { x0: PrimalVector, lambda: f64 },
    BallProj { r: f64 },
    ConeProj,
    /// Set-valued; evaluation returns the radial selection.
    L1BallProj { r: f64 },
    PolyProj { n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapDescriptor {
    pub kind: MapKind,
    pub space: SpaceSpec,
}

impl MapDescriptor {
    pub fn new(kind: MapKind, space: SpaceSpec) -> Result<Self> {
        let ok = match &kind {
            MapKind::Affine { x0, lambda } => {
                if !lambda.is_finite() {
                    return Err(Error::InvalidArgument("lambda must be finite".into()));
                }
                x0.space() == space
            }
            MapKind::BallProj { r } | MapKind::L1BallProj { r } => {
                if !(r.is_finite() && *r > 0.0) {
                    return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
                }
                match kind {
                    MapKind::BallProj { .. } => matches!(space, SpaceSpec::Lp { .. }),
                    _ => matches!(space, SpaceSpec::L1 { .. }),
                }
            }
            MapKind::ConeProj => matches!(space, SpaceSpec::Lp { .. }),
            MapKind::PolyProj { n } => match space {
                SpaceSpec::C01 { grid_size } => n + 2 <= grid_size,
                _ => false,
            },
        };
        if !ok {
            return Err(Error::WrongSpace {
                expected: match kind {
                    MapKind::Affine { .. } => "space of x0",
                    MapKind::BallProj { .. } | MapKind::ConeProj => "Lp",
                    MapKind::L1BallProj { .. } => "L1",
                    MapKind::PolyProj { .. } => "C01 with enough nodes",
                },
                got: space.to_string(),
            });
        }
        Ok(MapDescriptor { kind, space })
    }

    pub fn affine(x0: PrimalVector, lambda: f64) -> Result<Self> {
        let space = x0.space();
        Self::new(MapKind::Affine { x0, lambda }, space)
    }

    pub fn translation(x0: PrimalVector) -> Result<Self> {
        Self::affine(x0, 1.0)
    }

    pub fn ball(space: SpaceSpec, r: f64) -> Result<Self> {
        Self::new(MapKind::BallProj { r }, space)
    }

    pub fn cone(space: SpaceSpec) -> Result<Self> {
        Self::new(MapKind::ConeProj, space)
    }

    pub fn l1_ball(space: SpaceSpec, r: f64) -> Result<Self> {
        Self::new(MapKind::L1BallProj { r }, space)
    }

    pub fn poly(space: SpaceSpec, n: usize) -> Result<Self> {
        Self::new(MapKind::PolyProj { n }, space)
    }

    pub fn is_set_valued(&self) -> bool {
        matches!(self.kind, MapKind::L1BallProj { .. })
    }

    /// Value at `u`, or the radial selection for the `l_1` ball.
    pub fn evaluate(&self, u: &PrimalVector) -> Result<PrimalVector> {
        if u.space() != self.space {
            return Err(Error::SpaceMismatch {
                left: self.space.to_string(),
                right: u.space().to_string(),
            });
        }
        match &self.kind {
            MapKind::Affine { x0, lambda } => x0.plus_scaled(*lambda, u),
            MapKind::BallProj { r } => project_ball_lp(u, *r),
            MapKind::ConeProj => project_positive_cone(u),
            MapKind::L1BallProj { r } => Ok(project_ball_l1_selection(u, *r)?.point),
            MapKind::PolyProj { n } => {
                chebyshev::remez(u, *n, chebyshev::DEFAULT_TOL)?.polynomial.sample(self.space)
            }
        }
    }

    /// `y in F(x)`, up to relative slack `tol`.
    pub fn on_graph(&self, x: &PrimalVector, y: &PrimalVector, tol: f64) -> Result<bool> {
        let scale = 1.0 + x.norm() + y.norm();
        if let MapKind::L1BallProj { r } = self.kind {
            let nx = x.norm();
            if nx <= r {
                return Ok(y.distance(x)? <= tol * scale);
            }
            // members are the points of the sphere at distance ||x|| - r
            let on_sphere = (y.norm() - r).abs() <= tol * scale;
            let nearest = (x.distance(y)? - (nx - r)).abs() <= tol * scale;
            return Ok(on_sphere && nearest);
        }
        Ok(self.evaluate(x)?.distance(y)? <= tol * scale)
    }
}

/// Symbolic value of a coderivative or of a fixed-point set.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum CoderivativeSet {
    Empty,
    Singleton { w: DualVector },
    /// `lo <= z <= hi` componentwise.
    OrderInterval { lo: DualVector, hi: DualVector },
    /// `z_i = y_i` on `m`, `0 <= z_i <= y_i` off `m`.
    ConeSlice { m: IndexSet, y: DualVector },
    WholeDual { space: SpaceSpec },
    /// `z_i >= 0` for `i` in `m`, free elsewhere.
    PositiveConeDual { m: IndexSet, space: SpaceSpec },
}

impl CoderivativeSet {
    pub fn contains(&self, z: &DualVector) -> Result<bool> {
        let coords = |w: &DualVector| -> Result<Vec<f64>> {
            w.values().map(<[f64]>::to_vec).ok_or(Error::WrongSpace {
                expected: "coordinate dual",
                got: w.space().to_string(),
            })
        };
        Ok(match self {
            CoderivativeSet::Empty => false,
            CoderivativeSet::Singleton { w } => {
                check_space(w.space(), z.space())?;
                z.approx_eq(w, MEMBERSHIP_TOL * (1.0 + w.dual_norm()))
            }
            CoderivativeSet::WholeDual { space } => {
                check_space(*space, z.space())?;
                true
            }
            CoderivativeSet::OrderInterval { lo, hi } => {
                check_space(lo.space(), z.space())?;
                let (lo, hi, z) = (coords(lo)?, coords(hi)?, coords(z)?);
                let tol = MEMBERSHIP_TOL * (1.0 + hi.iter().fold(0.0f64, |a, v| a.max(v.abs())));
                z.iter()
                    .zip(lo.iter().zip(&hi))
                    .all(|(v, (a, b))| *v >= a - tol && *v <= b + tol)
            }
            CoderivativeSet::ConeSlice { m, y } => {
                check_space(y.space(), z.space())?;
                let (y, z) = (coords(y)?, coords(z)?);
                let tol = MEMBERSHIP_TOL * (1.0 + y.iter().fold(0.0f64, |a, v| a.max(v.abs())));
                (0..y.len()).all(|i| {
                    if m.contains(i) {
                        (z[i] - y[i]).abs() <= tol
                    } else {
                        z[i] >= -tol && z[i] <= y[i] + tol
                    }
                })
            }
            CoderivativeSet::PositiveConeDual { m, space } => {
                check_space(*space, z.space())?;
                let z = coords(z)?;
                m.iter().all(|i| z[i] >= 0.0)
            }
        })
    }
}

fn check_space(a: SpaceSpec, b: SpaceSpec) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::SpaceMismatch {
            left: a.to_string(),
            right: b.to_string(),
        })
    }
}

/// `{lambda w}` for `x -> x0 + lambda x`.
pub fn coderiv_affine(map: &MapDescriptor, x: &PrimalVector, w: &DualVector) -> Result<CoderivativeSet> {
    let MapKind::Affine { lambda, .. } = map.kind else {
        return Err(Error::InvalidArgument("coderiv_affine needs an affine map".into()));
    };
    check_space(map.space, x.space())?;
    check_space(map.space, w.space())?;
    Ok(CoderivativeSet::Singleton { w: w.scaled(lambda) })
}

fn boundary(norm: f64, r: f64) -> bool {
    (norm - r).abs() <= BOUNDARY_TOL * r.max(1.0)
}

/// Ball projection in `l_p`: `{w}` inside, and outside
/// `{(r/||x||)(w - (<w,x>/||x||^2) J(x))}`.
pub fn coderiv_ball_lp(x: &PrimalVector, r: f64, w: &DualVector) -> Result<CoderivativeSet> {
    check_space(x.space(), w.space())?;
    if !matches!(x.space(), SpaceSpec::Lp { .. }) {
        return Err(Error::WrongSpace {
            expected: "Lp",
            got: x.space().to_string(),
        });
    }
    let nx = x.norm();
    if boundary(nx, r) {
        return Err(Error::Uncovered(format!("||x|| = {nx} lies on the sphere of radius {r}")));
    }
    if nx < r {
        return Ok(CoderivativeSet::Singleton { w: w.clone() });
    }
    let j = duality_map(x)?;
    let c = pairing(w, x)? / (nx * nx);
    let inner = w.plus_scaled(-c, &j)?;
    Ok(CoderivativeSet::Singleton { w: inner.scaled(r / nx) })
}

/// `x` positive exactly on `m` and zero off it.
pub fn in_z_m(x: &PrimalVector, m: &IndexSet) -> bool {
    x.len() == m.universe()
        && x.values().iter().enumerate().all(|(i, &v)| {
            if m.contains(i) {
                v > POSITIVITY_TOL
            } else {
                v.abs() <= POSITIVITY_TOL
            }
        })
}

/// Positive cone of `l_2` at `xbar in Z_M`, applied to `y`.
///
/// For `y >= 0` off `M` the value is the slice `{z : z = y on M, 0 <= z <= y
/// off M}`; it reduces to `{y}` when `y` vanishes on all of the complement.
/// When `y` is negative somewhere off `M` no closed form is given here.
pub fn coderiv_cone_l2(xbar: &PrimalVector, m: &IndexSet, y: &DualVector) -> Result<CoderivativeSet> {
    let space = xbar.space();
    check_space(space, y.space())?;
    if space.exponent() != Some(2.0) {
        return Err(Error::WrongSpace {
            expected: "Lp with p = 2",
            got: space.to_string(),
        });
    }
    if !in_z_m(xbar, m) {
        return Err(Error::Precondition("xbar must be positive exactly on M".into()));
    }
    if y.is_zero() {
        return Ok(CoderivativeSet::Singleton { w: y.clone() });
    }
    let yv = y.values().expect("Lp coords");
    let off: Vec<usize> = m.complement().iter().collect();
    if off.iter().any(|&i| yv[i] < 0.0) {
        return Err(Error::OracleOnly("y has a negative coordinate off M".into()));
    }
    if off.iter().all(|&i| yv[i] == 0.0) {
        return Ok(CoderivativeSet::Singleton { w: y.clone() });
    }
    Ok(CoderivativeSet::ConeSlice {
        m: m.clone(),
        y: y.clone(),
    })
}

/// `theta* in D^*P_K(f)(phi)` for the positive cone of `l_p` under counting
/// measure: no index with `phi_i != 0, f_i > 0`, and none with
/// `phi_i < 0, f_i = 0`. Negative `f_i` are unconstrained because the
/// projection is locally zero in that coordinate.
pub fn coderiv_cone_lp_theta_membership(f: &PrimalVector, phi: &DualVector) -> Result<bool> {
    cone_theta(f, phi, |fi| fi == 0.0)
}

/// The same predicate for a nonatomic measure, where the kink condition
/// reads `f <= 0` rather than `f = 0`.
pub fn theta_membership_nonatomic(f: &PrimalVector, phi: &DualVector) -> Result<bool> {
    cone_theta(f, phi, |fi| fi <= 0.0)
}

fn cone_theta(f: &PrimalVector, phi: &DualVector, kink: impl Fn(f64) -> bool) -> Result<bool> {
    check_space(f.space(), phi.space())?;
    if !matches!(f.space(), SpaceSpec::Lp { .. }) {
        return Err(Error::WrongSpace {
            expected: "Lp",
            got: f.space().to_string(),
        });
    }
    let p = phi.values().expect("Lp coords");
    Ok(f
        .values()
        .iter()
        .zip(p)
        .all(|(&fi, &pi)| !(pi != 0.0 && fi > 0.0) && !(pi < 0.0 && kink(fi))))
}

/// `[theta*, psi]` for the positive cone of `l_p` at the origin.
pub fn coderiv_cone_lp_at_origin(psi: &DualVector) -> Result<CoderivativeSet> {
    let v = psi.values().ok_or(Error::WrongSpace {
        expected: "Lp",
        got: psi.space().to_string(),
    })?;
    if !matches!(psi.space(), SpaceSpec::Lp { .. }) {
        return Err(Error::WrongSpace {
            expected: "Lp",
            got: psi.space().to_string(),
        });
    }
    if v.iter().any(|&c| c < 0.0) {
        return Err(Error::Precondition("psi must be componentwise nonnegative".into()));
    }
    Ok(CoderivativeSet::OrderInterval {
        lo: DualVector::zero(psi.space()),
        hi: psi.clone(),
    })
}

/// `l_1` ball projection at `(x, P(x))` with `P(x)` the radial member.
pub fn coderiv_l1ball(x: &PrimalVector, r: f64, phi: &DualVector) -> Result<CoderivativeSet> {
    check_space(x.space(), phi.space())?;
    if !matches!(x.space(), SpaceSpec::L1 { .. }) {
        return Err(Error::WrongSpace {
            expected: "L1",
            got: x.space().to_string(),
        });
    }
    let nx = x.norm();
    if boundary(nx, r) {
        return Err(Error::Uncovered(format!("||x||_1 = {nx} lies on the sphere of radius {r}")));
    }
    if nx < r {
        return Ok(CoderivativeSet::Singleton { w: phi.clone() });
    }
    if !x.values().iter().all(|&v| v > 0.0) {
        return Err(Error::Precondition("exterior x must be strictly positive".into()));
    }
    if phi.is_zero() {
        return Ok(CoderivativeSet::Singleton { w: phi.clone() });
    }
    let j = duality_map_l1_selection(x)?.value;
    if phi.approx_eq(&j, MEMBERSHIP_TOL * (1.0 + j.dual_norm())) {
        return Ok(CoderivativeSet::Empty);
    }
    Err(Error::OracleOnly("exterior l1 with a general phi".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

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
    fn affine_examples() {
        let s = l2(2);
        let w = dv(s, &[1.0, 2.0]);
        let x = pv(s, &[0.3, -1.0]);
        let id = MapDescriptor::translation(pv(s, &[4.0, 1.0])).unwrap();
        assert_eq!(coderiv_affine(&id, &x, &w).unwrap(), CoderivativeSet::Singleton { w: w.clone() });
        let c = MapDescriptor::affine(pv(s, &[4.0, 1.0]), 0.0).unwrap();
        assert!(coderiv_affine(&c, &x, &w).unwrap().contains(&DualVector::zero(s)).unwrap());
        let two = MapDescriptor::affine(PrimalVector::zeros(s), 2.0).unwrap();
        let set = coderiv_affine(&two, &x, &dv(s, &[1.0, 0.0])).unwrap();
        assert!(set.contains(&dv(s, &[2.0, 0.0])).unwrap());
        assert!(!set.contains(&dv(s, &[1.0, 0.0])).unwrap());
    }

    #[test]
    fn ball_examples() {
        let s = l2(2);
        let inside = pv(s, &[0.1, 0.2]);
        let w = dv(s, &[5.0, -1.0]);
        assert!(coderiv_ball_lp(&inside, 1.0, &w).unwrap().contains(&w).unwrap());
        let x = pv(s, &[2.0, 0.0]);
        let perp = coderiv_ball_lp(&x, 1.0, &dv(s, &[0.0, 1.0])).unwrap();
        assert!(perp.contains(&dv(s, &[0.0, 0.5])).unwrap());
        let zero = coderiv_ball_lp(&x, 1.0, &dv(s, &[2.0, 0.0])).unwrap();
        assert!(zero.contains(&DualVector::zero(s)).unwrap());
        assert!(matches!(
            coderiv_ball_lp(&pv(s, &[1.0, 0.0]), 1.0, &w),
            Err(Error::Uncovered(_))
        ));
    }

    #[test]
    fn ball_duality_image_vanishes_for_p3() {
        let s = SpaceSpec::lp(3.0, 4).unwrap();
        let x = pv(s, &[1.5, -2.0, 0.5, 3.0]);
        let j = duality_map(&x).unwrap();
        let CoderivativeSet::Singleton { w } = coderiv_ball_lp(&x, 1.0, &j).unwrap() else {
            panic!("singleton expected");
        };
        assert!(w.dual_norm() <= 1e-12);
    }

    #[test]
    fn cone_l2_examples() {
        let s = l2(4);
        let m = IndexSet::new([0, 1], 4).unwrap();
        let xbar = pv(s, &[1.0, 2.0, 0.0, 0.0]);
        let zero = coderiv_cone_l2(&xbar, &m, &DualVector::zero(s)).unwrap();
        assert!(zero.contains(&DualVector::zero(s)).unwrap());
        let y = dv(s, &[5.0, -1.0, 1.0, 1.0]);
        let set = coderiv_cone_l2(&xbar, &m, &y).unwrap();
        assert!(set.contains(&dv(s, &[5.0, -1.0, 0.5, 1.0])).unwrap());
        assert!(!set.contains(&dv(s, &[4.0, -1.0, 0.5, 1.0])).unwrap());
        let flat = dv(s, &[5.0, -1.0, 0.0, 0.0]);
        assert_eq!(
            coderiv_cone_l2(&xbar, &m, &flat).unwrap(),
            CoderivativeSet::Singleton { w: flat.clone() }
        );
        let neg = dv(s, &[5.0, -1.0, -1.0, 0.0]);
        assert!(matches!(coderiv_cone_l2(&xbar, &m, &neg), Err(Error::OracleOnly(_))));
        assert!(coderiv_cone_l2(&pv(s, &[1.0, 0.0, 0.0, 0.0]), &m, &y).is_err());
    }

    #[test]
    fn cone_lp_theta_predicate() {
        let s = SpaceSpec::lp(3.0, 3).unwrap();
        let neg = pv(s, &[-1.0, -2.0, -0.5]);
        assert!(coderiv_cone_lp_theta_membership(&neg, &dv(s, &[1.0, 0.0, 2.0])).unwrap());
        let pos = pv(s, &[1.0, 2.0, 0.5]);
        let j = duality_map(&pos).unwrap();
        assert!(!coderiv_cone_lp_theta_membership(&pos, &j).unwrap());
        assert!(coderiv_cone_lp_theta_membership(&pos, &DualVector::zero(s)).unwrap());
        // strictly negative f leaves phi free under counting measure
        let phi = dv(s, &[-1.0, 0.0, 0.0]);
        assert!(coderiv_cone_lp_theta_membership(&neg, &phi).unwrap());
        assert!(!theta_membership_nonatomic(&neg, &phi).unwrap());
        let kink = pv(s, &[0.0, 1.0, 1.0]);
        assert!(!coderiv_cone_lp_theta_membership(&kink, &phi).unwrap());
    }

    #[test]
    fn cone_lp_origin_interval() {
        let s = SpaceSpec::lp(3.0, 3).unwrap();
        let set = coderiv_cone_lp_at_origin(&dv(s, &[1.0, 2.0, 0.0])).unwrap();
        assert!(set.contains(&dv(s, &[0.5, 2.0, 0.0])).unwrap());
        assert!(!set.contains(&dv(s, &[1.1, 0.0, 0.0])).unwrap());
        let zero = coderiv_cone_lp_at_origin(&DualVector::zero(s)).unwrap();
        assert!(zero.contains(&DualVector::zero(s)).unwrap());
        assert!(!zero.contains(&dv(s, &[0.1, 0.0, 0.0])).unwrap());
        assert!(coderiv_cone_lp_at_origin(&dv(s, &[-1.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn l1_ball_examples() {
        let s = SpaceSpec::l1(4).unwrap();
        let inside = pv(s, &[0.1, 0.2, 0.0, 0.0]);
        let phi = dv(s, &[1.0, -1.0, 0.0, 0.0]);
        assert!(coderiv_l1ball(&inside, 1.0, &phi).unwrap().contains(&phi).unwrap());
        let x = pv(s, &[1.0, 0.5, 0.25, 0.25]);
        let zero = coderiv_l1ball(&x, 1.0, &DualVector::zero(s)).unwrap();
        assert!(zero.contains(&DualVector::zero(s)).unwrap());
        let j = duality_map_l1_selection(&x).unwrap().value;
        assert_eq!(coderiv_l1ball(&x, 1.0, &j).unwrap(), CoderivativeSet::Empty);
        assert!(matches!(coderiv_l1ball(&x, 1.0, &phi), Err(Error::OracleOnly(_))));
        let edge = pv(s, &[2.0, 0.0, 0.0, 0.0]);
        assert!(matches!(coderiv_l1ball(&edge, 1.0, &phi), Err(Error::Precondition(_))));
    }

    #[test]
    fn graph_membership() {
        let s = SpaceSpec::l1(3).unwrap();
        let map = MapDescriptor::l1_ball(s, 1.0).unwrap();
        let x = pv(s, &[2.0, 0.0, 0.0]);
        assert!(map.on_graph(&x, &pv(s, &[1.0, 0.0, 0.0]), 1e-12).unwrap());
        assert!(!map.on_graph(&x, &pv(s, &[0.0, 1.0, 0.0]), 1e-12).unwrap());
        let y = pv(s, &[1.0, 1.0, 0.0]);
        let x2 = pv(s, &[2.0, 1.0, 0.0]);
        // a non-radial member of the projection set
        assert!(map.on_graph(&x2, &pv(s, &[1.0, 0.0, 0.0]), 1e-12).unwrap());
        assert!(!map.on_graph(&x2, &y, 1e-12).unwrap());
        assert!(MapDescriptor::ball(s, 1.0).is_err());
        assert!(MapDescriptor::poly(l2(3), 1).is_err());
    }
}
