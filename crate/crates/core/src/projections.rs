//! Metric projections onto closed convex sets of the model spaces: the
//! `l_p` ball, the positive cone, the `l_1` ball (set-valued, canonical
//! selection) and the polynomial subspace `P_n` of `C[0,1]`.

use serde::Serialize;

use crate::chebyshev::{self, RemezResult};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::linalg::Matrix;
use crate::spaces::{PrimalVector, SpaceSpec};

/// Real polynomial `a_0 + a_1 t + ... + a_n t^n`, evaluated on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polynomial {
    coefficients: Vec<f64>,
}

impl Polynomial {
    pub fn new(coefficients: Vec<f64>) -> Self {
        let coefficients = if coefficients.is_empty() { vec![0.0] } else { coefficients };
        Polynomial { coefficients }
    }

    pub fn zero(degree: usize) -> Self {
        Polynomial::new(vec![0.0; degree + 1])
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Degree bound `n` (number of coefficients minus one).
    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &a| acc * t + a)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coefficients.len() == 1 {
            return Polynomial::zero(0);
        }
        Polynomial::new(
            self.coefficients
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, a)| k as f64 * a)
                .collect(),
        )
    }

    /// Samples on the grid of a `C01` space.
    pub fn sample(&self, space: SpaceSpec) -> Result<PrimalVector> {
        PrimalVector::from_fn(space, |t| self.eval(t))
    }

    pub fn scaled(&self, beta: f64) -> Polynomial {
        Polynomial::new(self.coefficients.iter().map(|a| beta * a).collect())
    }

    pub fn plus(&self, other: &Polynomial) -> Polynomial {
        let n = self.coefficients.len().max(other.coefficients.len());
        Polynomial::new(
            (0..n)
                .map(|k| {
                    self.coefficients.get(k).copied().unwrap_or(0.0)
                        + other.coefficients.get(k).copied().unwrap_or(0.0)
                })
                .collect(),
        )
    }

    /// Interpolates `values` at distinct `nodes`.
    pub fn interpolate(nodes: &[f64], values: &[f64]) -> Result<Polynomial> {
        let m = Matrix::from_fn(nodes.len(), |i, j| nodes[i].powi(j as i32));
        Ok(Polynomial::new(m.solve(values)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ConvexSet {
    /// Closed ball of radius `r` in `l_p`.
    Ball { r: f64 },
    /// Nonnegative orthant.
    PositiveCone,
    /// Closed ball of radius `r` in `l_1`.
    L1Ball { r: f64 },
    /// Polynomials of degree at most `n` in `C[0,1]`.
    PolySubspace { n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvexSetDescriptor {
    pub set: ConvexSet,
    pub space: SpaceSpec,
}

impl ConvexSetDescriptor {
    pub fn new(set: ConvexSet, space: SpaceSpec) -> Result<Self> {
        let ok = match (set, space) {
            (ConvexSet::Ball { r }, SpaceSpec::Lp { .. }) => r > 0.0,
            (ConvexSet::PositiveCone, SpaceSpec::Lp { .. } | SpaceSpec::L1 { .. }) => true,
            (ConvexSet::L1Ball { r }, SpaceSpec::L1 { .. }) => r > 0.0,
            (ConvexSet::PolySubspace { .. }, SpaceSpec::C01 { .. }) => true,
            _ => false,
        };
        if ok {
            Ok(ConvexSetDescriptor { set, space })
        } else {
            Err(Error::InvalidArgument(format!("{set:?} is not a valid set in {space}")))
        }
    }

    /// Membership up to `tol`. For polynomials this compares the best
    /// approximation error with `tol`.
    pub fn contains(&self, x: &PrimalVector, tol: f64) -> bool {
        match self.set {
            ConvexSet::Ball { r } | ConvexSet::L1Ball { r } => x.norm() <= r + tol,
            ConvexSet::PositiveCone => x.values().iter().all(|&v| v >= -tol),
            ConvexSet::PolySubspace { n } => chebyshev::remez(x, n, chebyshev::DEFAULT_TOL)
                .map(|res| res.error <= tol)
                .unwrap_or(false),
        }
    }

    /// Closed-form projection (canonical selection for the `l_1` ball).
    pub fn project(&self, x: &PrimalVector) -> Result<PrimalVector> {
        match self.set {
            ConvexSet::Ball { r } => project_ball_lp(x, r),
            ConvexSet::PositiveCone => project_positive_cone(x),
            ConvexSet::L1Ball { r } => Ok(project_ball_l1_selection(x, r)?.point),
            ConvexSet::PolySubspace { n } => project_poly(x, n)?.polynomial.sample(x.space()),
        }
    }
}

/// `x` inside the ball, `(r / ||x||) x` outside.
pub fn project_ball_lp(x: &PrimalVector, r: f64) -> Result<PrimalVector> {
    if !matches!(x.space(), SpaceSpec::Lp { .. }) {
        return Err(Error::WrongSpace {
            expected: "Lp",
            got: x.space().to_string(),
        });
    }
    check_radius(r)?;
    let n = x.norm();
    Ok(if n <= r { x.clone() } else { (r / n) * x })
}

/// Componentwise `max(x_i, 0)`.
pub fn project_positive_cone(x: &PrimalVector) -> Result<PrimalVector> {
    if matches!(x.space(), SpaceSpec::C01 { .. }) {
        return Err(Error::WrongSpace {
            expected: "Lp or L1",
            got: x.space().to_string(),
        });
    }
    Ok(x.map(|v| if v > 0.0 { v } else { 0.0 }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct L1Projection {
    pub point: PrimalVector,
    /// `true` when `x` lies outside the ball: the projection set has other
    /// members and `point` is only the radial one.
    pub is_selection: bool,
}

/// Radial member `(r / ||x||_1) x` of the `l_1` ball projection set.
pub fn project_ball_l1_selection(x: &PrimalVector, r: f64) -> Result<L1Projection> {
    if !matches!(x.space(), SpaceSpec::L1 { .. }) {
        return Err(Error::WrongSpace {
            expected: "L1",
            got: x.space().to_string(),
        });
    }
    check_radius(r)?;
    let n = x.norm();
    Ok(if n <= r {
        L1Projection {
            point: x.clone(),
            is_selection: false,
        }
    } else {
        L1Projection {
            point: (r / n) * x,
            is_selection: true,
        }
    })
}

/// Best uniform approximation from `P_n` via Remez exchange.
pub fn project_poly(f: &PrimalVector, n: usize) -> Result<RemezResult> {
    chebyshev::remez(f, n, chebyshev::DEFAULT_TOL)
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("radius {r} must be positive")))
    }
}

pub const BRUTE_FORCE_MAX_DIM: usize = 4;
pub const BRUTE_FORCE_MAX_POLY_DEGREE: usize = 2;

/// Nearest point of `set` to `x` by exhaustive grid search followed by a
/// multi-start pattern search. Independent of the closed forms; used only to
/// check them. Sequence spaces need `dim <= 4`, polynomial subspaces `n <= 2`.
///
/// For the polynomial subspace the search runs over the values of `p` at
/// `n + 1` Chebyshev nodes inside `[-2||f||, 2||f||]`, which contains every
/// best approximation since `||p|| <= ||p - f|| + ||f|| <= 2||f||`.
pub fn brute_force_project(
    x: &PrimalVector,
    set: &ConvexSetDescriptor,
    resolution: usize,
) -> Result<PrimalVector> {
    brute_force_project_with(x, set, resolution, Execution::default())
}

/// [`brute_force_project`] with an explicit execution mode for the grid scan.
pub fn brute_force_project_with(
    x: &PrimalVector,
    set: &ConvexSetDescriptor,
    resolution: usize,
    exec: Execution,
) -> Result<PrimalVector> {
    if x.space() != set.space {
        return Err(Error::SpaceMismatch {
            left: x.space().to_string(),
            right: set.space.to_string(),
        });
    }
    let resolution = resolution.max(3);
    match set.set {
        ConvexSet::PolySubspace { n } => brute_force_poly(x, n, resolution, exec),
        _ => {
            let d = x.len();
            if d > BRUTE_FORCE_MAX_DIM {
                return Err(Error::DimensionTooLarge {
                    dim: d,
                    max: BRUTE_FORCE_MAX_DIM,
                });
            }
            let (lo, hi) = match set.set {
                ConvexSet::Ball { r } | ConvexSet::L1Ball { r } => (vec![-r; d], vec![r; d]),
                ConvexSet::PositiveCone => {
                    let top = x.values().iter().fold(0.0f64, |m, &v| m.max(v)) + 1.0;
                    (vec![0.0; d], vec![top; d])
                }
                ConvexSet::PolySubspace { .. } => unreachable!(),
            };
            let space = x.space();
            let objective = |y: &[f64]| -> Option<f64> {
                let yv = PrimalVector::new(space, y.to_vec()).ok()?;
                if !set.contains(&yv, 0.0) {
                    return None;
                }
                x.distance(&yv).ok()
            };
            let best = grid_pattern_search(&lo, &hi, resolution, exec, &objective);
            PrimalVector::new(space, best)
        }
    }
}

fn brute_force_poly(f: &PrimalVector, n: usize, resolution: usize, exec: Execution) -> Result<PrimalVector> {
    if n > BRUTE_FORCE_MAX_POLY_DEGREE {
        return Err(Error::DimensionTooLarge {
            dim: n + 1,
            max: BRUTE_FORCE_MAX_POLY_DEGREE + 1,
        });
    }
    let space = f.space();
    let bound = 2.0 * f.norm();
    if bound == 0.0 {
        return Ok(PrimalVector::zeros(space));
    }
    let nodes = chebyshev::chebyshev_nodes(n + 1);
    let grid = space.grid().expect("C01");
    let fv = f.values();
    let to_poly = |vals: &[f64]| Polynomial::interpolate(&nodes, vals);
    let objective = |vals: &[f64]| -> Option<f64> {
        let p = to_poly(vals).ok()?;
        Some(
            grid.iter()
                .zip(fv)
                .fold(0.0f64, |m, (&t, &y)| m.max((y - p.eval(t)).abs())),
        )
    };
    let d = n + 1;
    let best = grid_pattern_search(&vec![-bound; d], &vec![bound; d], resolution, exec, &objective);
    to_poly(&best)?.sample(space)
}

/// Lattice directions `{-1, 0, 1}^d \ {0}`.
fn lattice_directions(d: usize) -> Vec<Vec<f64>> {
    let total = 3usize.pow(d as u32);
    (0..total)
        .filter(|&c| c != (total - 1) / 2)
        .map(|mut c| {
            (0..d)
                .map(|_| {
                    let digit = (c % 3) as f64 - 1.0;
                    c /= 3;
                    digit
                })
                .collect()
        })
        .collect()
}

const STARTS: usize = 4;

fn grid_pattern_search<F>(lo: &[f64], hi: &[f64], resolution: usize, exec: Execution, objective: &F) -> Vec<f64>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let d = lo.len();
    let points = resolution.pow(d as u32);
    let at = |mut idx: usize| -> Vec<f64> {
        (0..d)
            .map(|k| {
                let i = idx % resolution;
                idx /= resolution;
                lo[k] + (hi[k] - lo[k]) * i as f64 / (resolution - 1) as f64
            })
            .collect()
    };
    let values = exec::map_range(exec, points, |i| objective(&at(i)));
    let mut ranked: Vec<(f64, usize)> = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (v, i)))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let dirs = lattice_directions(d);
    let step0: Vec<f64> = (0..d).map(|k| (hi[k] - lo[k]) / (resolution - 1) as f64).collect();
    let span = step0.iter().fold(0.0f64, |m, s| m.max(*s));
    let mut best: Option<(f64, Vec<f64>)> = None;
    for &(v0, idx) in ranked.iter().take(STARTS) {
        let mut cur = at(idx);
        let mut cur_v = v0;
        let mut scale = 1.0;
        let mut iters = 0;
        while scale * span > 1e-12 * (1.0 + span) && iters < 20_000 {
            iters += 1;
            let mut improved = false;
            for dir in &dirs {
                let cand: Vec<f64> = (0..d).map(|k| cur[k] + scale * step0[k] * dir[k]).collect();
                if let Some(v) = objective(&cand) {
                    if v < cur_v {
                        cur = cand;
                        cur_v = v;
                        improved = true;
                    }
                }
            }
            if !improved {
                scale *= 0.5;
            }
        }
        if best.as_ref().is_none_or(|(bv, _)| cur_v < *bv) {
            best = Some((cur_v, cur));
        }
    }
    best.map(|(_, p)| p).unwrap_or_else(|| lo.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(p: f64, v: &[f64]) -> PrimalVector {
        PrimalVector::new(SpaceSpec::lp(p, v.len()).unwrap(), v.to_vec()).unwrap()
    }

    fn l1(v: &[f64]) -> PrimalVector {
        PrimalVector::new(SpaceSpec::l1(v.len()).unwrap(), v.to_vec()).unwrap()
    }

    #[test]
    fn ball_projection_examples() {
        let x = lp(2.0, &[0.1, 0.2]);
        assert_eq!(project_ball_lp(&x, 1.0).unwrap(), x);
        let y = project_ball_lp(&lp(2.0, &[3.0, 4.0]), 1.0).unwrap();
        assert!((y.values()[0] - 0.6).abs() < 1e-15 && (y.values()[1] - 0.8).abs() < 1e-15);
        let b = lp(3.0, &[1.0, 0.0]);
        assert_eq!(project_ball_lp(&b, 1.0).unwrap(), b);
    }

    #[test]
    fn cone_projection_examples() {
        let s = SpaceSpec::lp(2.0, 3).unwrap();
        let x = PrimalVector::new(s, vec![1.0, -2.0, 3.0]).unwrap();
        assert_eq!(project_positive_cone(&x).unwrap().values(), &[1.0, 0.0, 3.0]);
        let neg = PrimalVector::new(s, vec![-1.0, 0.0, -3.0]).unwrap();
        assert!(project_positive_cone(&neg).unwrap().is_zero());
        let lam = 2.5;
        assert_eq!(
            project_positive_cone(&(lam * &x)).unwrap(),
            lam * &project_positive_cone(&x).unwrap()
        );
    }

    #[test]
    fn l1_projection_examples() {
        let p = project_ball_l1_selection(&l1(&[2.0, 1.0, 0.0]), 1.0).unwrap();
        assert!(p.is_selection);
        let v = p.point.values();
        assert!((v[0] - 2.0 / 3.0).abs() < 1e-15 && (v[1] - 1.0 / 3.0).abs() < 1e-15 && v[2] == 0.0);
        let inside = l1(&[0.2, -0.3, 0.1]);
        let p = project_ball_l1_selection(&inside, 1.0).unwrap();
        assert!(!p.is_selection);
        assert_eq!(p.point, inside);
    }

    #[test]
    fn wrong_space_is_rejected() {
        assert!(project_ball_lp(&l1(&[1.0]), 1.0).is_err());
        assert!(project_ball_l1_selection(&lp(2.0, &[1.0]), 1.0).is_err());
        assert!(project_ball_lp(&lp(2.0, &[1.0]), 0.0).is_err());
        assert!(ConvexSetDescriptor::new(ConvexSet::Ball { r: 1.0 }, SpaceSpec::l1(2).unwrap()).is_err());
    }

    #[test]
    fn brute_force_ball_and_cone() {
        let s = SpaceSpec::lp(2.0, 2).unwrap();
        let ball = ConvexSetDescriptor::new(ConvexSet::Ball { r: 1.0 }, s).unwrap();
        let y = brute_force_project(&lp(2.0, &[3.0, 4.0]), &ball, 41).unwrap();
        assert!((y.values()[0] - 0.6).abs() < 1e-4 && (y.values()[1] - 0.8).abs() < 1e-4);

        let cone = ConvexSetDescriptor::new(ConvexSet::PositiveCone, s).unwrap();
        let y = brute_force_project(&lp(2.0, &[1.0, -2.0]), &cone, 41).unwrap();
        assert!((y.values()[0] - 1.0).abs() < 1e-4 && y.values()[1].abs() < 1e-4);

        let inside = lp(2.0, &[0.3, -0.2]);
        let y = brute_force_project(&inside, &ball, 41).unwrap();
        assert!(y.distance(&inside).unwrap() < 1e-6);
    }

    #[test]
    fn brute_force_rejects_large_dimension() {
        let s = SpaceSpec::lp(2.0, 5).unwrap();
        let ball = ConvexSetDescriptor::new(ConvexSet::Ball { r: 1.0 }, s).unwrap();
        let x = PrimalVector::zeros(s);
        assert!(matches!(
            brute_force_project(&x, &ball, 11),
            Err(Error::DimensionTooLarge { dim: 5, .. })
        ));
    }

    #[test]
    fn polynomial_basics() {
        let p = Polynomial::new(vec![1.0, -2.0, 3.0]);
        assert_eq!(p.eval(2.0), 9.0);
        assert_eq!(p.derivative().coefficients(), &[-2.0, 6.0]);
        assert_eq!(p.degree(), 2);
        let q = Polynomial::interpolate(&[0.0, 0.5, 1.0], &[1.0, 0.75, 2.0]).unwrap();
        for (a, b) in q.coefficients().iter().zip(p.coefficients()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
