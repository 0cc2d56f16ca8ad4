//! Model spaces: finite truncations of `l_p` and `l_1`, and grid functions on
//! `[0, 1]` whose duals are finite signed atomic measures.
//!
//! Sequence spaces are cut off at a finite dimension and `C[0,1]` is sampled
//! on a uniform grid `t_i = i / (G - 1)`. Atoms of a dual measure are snapped
//! to the nearest grid node when constructed, which makes every pairing an
//! exact finite sum.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DIM: usize = 8;
pub const DEFAULT_GRID: usize = 513;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SpaceSpec {
    /// `l_p` truncated to `dim` coordinates, `1 < p < inf`.
    Lp { p: f64, dim: usize },
    /// `l_1` truncated to `dim` coordinates, dual `l_inf`.
    L1 { dim: usize },
    /// `C[0,1]` sampled on `grid_size` uniform nodes, max norm.
    C01 { grid_size: usize },
}

impl SpaceSpec {
    pub fn lp(p: f64, dim: usize) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidSpace(format!("exponent p = {p} must lie in (1, inf)")));
        }
        if dim == 0 {
            return Err(Error::InvalidSpace("dimension must be positive".into()));
        }
        Ok(SpaceSpec::Lp { p, dim })
    }

    pub fn l1(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpace("dimension must be positive".into()));
        }
        Ok(SpaceSpec::L1 { dim })
    }

    pub fn c01(grid_size: usize) -> Result<Self> {
        if grid_size < 2 {
            return Err(Error::InvalidSpace("grid needs at least two nodes".into()));
        }
        Ok(SpaceSpec::C01 { grid_size })
    }

    /// Number of stored values of a primal vector.
    pub fn len(&self) -> usize {
        match *self {
            SpaceSpec::Lp { dim, .. } | SpaceSpec::L1 { dim } => dim,
            SpaceSpec::C01 { grid_size } => grid_size,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            SpaceSpec::Lp { .. } => "Lp",
            SpaceSpec::L1 { .. } => "L1",
            SpaceSpec::C01 { .. } => "C01",
        }
    }

    /// Exponent `p` for `Lp`, `None` otherwise.
    pub fn exponent(&self) -> Option<f64> {
        match *self {
            SpaceSpec::Lp { p, .. } => Some(p),
            _ => None,
        }
    }

    /// Conjugate exponent `q` with `1/p + 1/q = 1`.
    pub fn dual_exponent(&self) -> Option<f64> {
        self.exponent().map(|p| p / (p - 1.0))
    }

    pub fn is_hilbert(&self) -> bool {
        matches!(*self, SpaceSpec::Lp { p, .. } if p == 2.0)
    }

    /// Grid node `t_i`. Only meaningful for `C01`.
    pub fn node(&self, i: usize) -> f64 {
        match *self {
            SpaceSpec::C01 { grid_size } => {
                if i + 1 == grid_size {
                    1.0
                } else {
                    i as f64 / (grid_size - 1) as f64
                }
            }
            _ => i as f64,
        }
    }

    pub fn grid(&self) -> Option<Vec<f64>> {
        match *self {
            SpaceSpec::C01 { grid_size } => Some((0..grid_size).map(|i| self.node(i)).collect()),
            _ => None,
        }
    }

    /// Nearest grid node to `t`, with the snapping distance.
    pub fn snap(&self, t: f64) -> Option<(usize, f64)> {
        match *self {
            SpaceSpec::C01 { grid_size } => {
                let h = (grid_size - 1) as f64;
                let i = (t * h).round().clamp(0.0, h) as usize;
                Some((i, (self.node(i) - t).abs()))
            }
            _ => None,
        }
    }

    fn ensure_same(&self, other: &SpaceSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::SpaceMismatch {
                left: self.to_string(),
                right: other.to_string(),
            })
        }
    }

    fn primal_norm(&self, values: &[f64]) -> f64 {
        match *self {
            SpaceSpec::Lp { p, .. } => p_norm(values, p),
            SpaceSpec::L1 { .. } => values.iter().map(|v| v.abs()).sum(),
            SpaceSpec::C01 { .. } => max_abs(values),
        }
    }
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SpaceSpec::Lp { p, dim } => write!(f, "l_{p}^{dim}"),
            SpaceSpec::L1 { dim } => write!(f, "l_1^{dim}"),
            SpaceSpec::C01 { grid_size } => write!(f, "C[0,1] on {grid_size} nodes"),
        }
    }
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// `(sum |v_i|^p)^(1/p)`, scaled by the max entry to stay in range.
pub(crate) fn p_norm(values: &[f64], p: f64) -> f64 {
    let m = max_abs(values);
    if m == 0.0 {
        return 0.0;
    }
    if p == 2.0 {
        return m * values.iter().map(|v| (v / m) * (v / m)).sum::<f64>().sqrt();
    }
    m * values.iter().map(|v| (v.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::InvalidVector(format!("entry {i} is not finite"))),
        None => Ok(()),
    }
}

/// Element of a model space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimalVector {
    space: SpaceSpec,
    values: Vec<f64>,
}

impl PrimalVector {
    pub fn new(space: SpaceSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::InvalidVector(format!(
                "expected {} values for {space}, got {}",
                space.len(),
                values.len()
            )));
        }
        check_finite(&values)?;
        Ok(PrimalVector { space, values })
    }

    pub fn zeros(space: SpaceSpec) -> Self {
        PrimalVector {
            space,
            values: vec![0.0; space.len()],
        }
    }

    /// Unit coordinate vector `e_i`.
    pub fn basis(space: SpaceSpec, i: usize) -> Result<Self> {
        if i >= space.len() {
            return Err(Error::InvalidArgument(format!("basis index {i} out of range")));
        }
        let mut v = Self::zeros(space);
        v.values[i] = 1.0;
        Ok(v)
    }

    /// Samples `f` on the grid of a `C01` space.
    pub fn from_fn(space: SpaceSpec, f: impl Fn(f64) -> f64) -> Result<Self> {
        let grid = space.grid().ok_or(Error::WrongSpace {
            expected: "C01",
            got: space.to_string(),
        })?;
        Self::new(space, grid.into_iter().map(f).collect())
    }

    pub fn space(&self) -> SpaceSpec {
        self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `l_p` norm, `l_1` norm or grid maximum, depending on the space.
    pub fn norm(&self) -> f64 {
        self.space.primal_norm(&self.values)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        PrimalVector {
            space: self.space,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self + a * other`.
    pub fn plus_scaled(&self, a: f64, other: &PrimalVector) -> Result<Self> {
        self.space.ensure_same(&other.space)?;
        Ok(PrimalVector {
            space: self.space,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x + a * y)
                .collect(),
        })
    }

    pub fn distance(&self, other: &PrimalVector) -> Result<f64> {
        Ok(self.plus_scaled(-1.0, other)?.norm())
    }
}

impl Add for &PrimalVector {
    type Output = PrimalVector;
    fn add(self, rhs: &PrimalVector) -> PrimalVector {
        self.plus_scaled(1.0, rhs).expect("space mismatch in addition")
    }
}

impl Sub for &PrimalVector {
    type Output = PrimalVector;
    fn sub(self, rhs: &PrimalVector) -> PrimalVector {
        self.plus_scaled(-1.0, rhs).expect("space mismatch in subtraction")
    }
}

impl Mul<&PrimalVector> for f64 {
    type Output = PrimalVector;
    fn mul(self, rhs: &PrimalVector) -> PrimalVector {
        rhs.map(|v| self * v)
    }
}

impl Neg for &PrimalVector {
    type Output = PrimalVector;
    fn neg(self) -> PrimalVector {
        self.map(|v| -v)
    }
}

/// Point mass `weight * delta_location` of an atomic measure on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum DualRepr {
    Coords(Vec<f64>),
    /// `(grid node, weight)`, sorted by node, no duplicates.
    Atoms(Vec<(usize, f64)>),
}

/// Element of the dual of a model space: `l_q` or `l_inf` coordinates, or a
/// finite signed atomic measure on the grid of a `C01` space.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVector {
    space: SpaceSpec,
    repr: DualRepr,
    snap_distance: f64,
}

/// Atomic measures are also called dual vectors.
pub type AtomicMeasure = DualVector;

impl DualVector {
    /// Dual of an `Lp` or `L1` space from coordinates.
    pub fn coords(space: SpaceSpec, values: Vec<f64>) -> Result<Self> {
        if matches!(space, SpaceSpec::C01 { .. }) {
            return Err(Error::WrongSpace {
                expected: "Lp or L1",
                got: space.to_string(),
            });
        }
        if values.len() != space.len() {
            return Err(Error::InvalidVector(format!(
                "expected {} dual coordinates, got {}",
                space.len(),
                values.len()
            )));
        }
        check_finite(&values)?;
        Ok(DualVector {
            space,
            repr: DualRepr::Coords(values),
            snap_distance: 0.0,
        })
    }

    /// Atomic measure on `[0, 1]`; locations are snapped to the grid.
    pub fn atoms(space: SpaceSpec, atoms: &[(f64, f64)]) -> Result<Self> {
        if !matches!(space, SpaceSpec::C01 { .. }) {
            return Err(Error::WrongSpace {
                expected: "C01",
                got: space.to_string(),
            });
        }
        let mut snapped: Vec<(usize, f64)> = Vec::with_capacity(atoms.len());
        let mut snap_distance = 0.0f64;
        for &(t, w) in atoms {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidVector(format!("atom location {t} outside [0, 1]")));
            }
            if !w.is_finite() {
                return Err(Error::InvalidVector(format!("atom weight {w} is not finite")));
            }
            let (node, d) = space.snap(t).expect("C01 space");
            snap_distance = snap_distance.max(d);
            snapped.push((node, w));
        }
        snapped.sort_by_key(|a| a.0);
        if snapped.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidVector(
                "two atoms share a grid node after snapping".into(),
            ));
        }
        Ok(DualVector {
            space,
            repr: DualRepr::Atoms(snapped),
            snap_distance,
        })
    }

    /// Dirac mass at `t`.
    pub fn dirac(space: SpaceSpec, t: f64) -> Result<Self> {
        Self::atoms(space, &[(t, 1.0)])
    }

    pub fn zero(space: SpaceSpec) -> Self {
        let repr = match space {
            SpaceSpec::C01 { .. } => DualRepr::Atoms(Vec::new()),
            _ => DualRepr::Coords(vec![0.0; space.len()]),
        };
        DualVector {
            space,
            repr,
            snap_distance: 0.0,
        }
    }

    pub fn space(&self) -> SpaceSpec {
        self.space
    }

    /// Coordinates for sequence-space duals.
    pub fn values(&self) -> Option<&[f64]> {
        match &self.repr {
            DualRepr::Coords(v) => Some(v),
            DualRepr::Atoms(_) => None,
        }
    }

    /// Atoms for measure duals, located at their snapped grid nodes.
    pub fn atom_list(&self) -> Vec<Atom> {
        match &self.repr {
            DualRepr::Coords(_) => Vec::new(),
            DualRepr::Atoms(a) => a
                .iter()
                .map(|&(i, w)| Atom {
                    location: self.space.node(i),
                    weight: w,
                })
                .collect(),
        }
    }

    /// Largest distance an atom moved when snapped to the grid.
    pub fn snap_distance(&self) -> f64 {
        self.snap_distance
    }

    /// `l_q` norm, `l_inf` norm or total variation `sum |w_i|`.
    pub fn dual_norm(&self) -> f64 {
        match (&self.repr, self.space) {
            (DualRepr::Coords(v), SpaceSpec::Lp { .. }) => {
                p_norm(v, self.space.dual_exponent().expect("Lp"))
            }
            (DualRepr::Coords(v), _) => max_abs(v),
            (DualRepr::Atoms(a), _) => a.iter().map(|(_, w)| w.abs()).sum(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.repr {
            DualRepr::Coords(v) => v.iter().all(|&x| x == 0.0),
            DualRepr::Atoms(a) => a.iter().all(|&(_, w)| w == 0.0),
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        let repr = match &self.repr {
            DualRepr::Coords(v) => DualRepr::Coords(v.iter().map(|x| a * x).collect()),
            DualRepr::Atoms(at) => DualRepr::Atoms(at.iter().map(|&(i, w)| (i, a * w)).collect()),
        };
        DualVector {
            space: self.space,
            repr,
            snap_distance: self.snap_distance,
        }
    }

    /// `self + a * other`; atoms at the same node are merged.
    pub fn plus_scaled(&self, a: f64, other: &DualVector) -> Result<Self> {
        self.space.ensure_same(&other.space)?;
        let repr = match (&self.repr, &other.repr) {
            (DualRepr::Coords(x), DualRepr::Coords(y)) => {
                DualRepr::Coords(x.iter().zip(y).map(|(p, q)| p + a * q).collect())
            }
            (DualRepr::Atoms(x), DualRepr::Atoms(y)) => {
                let mut merged: std::collections::BTreeMap<usize, f64> = x.iter().copied().collect();
                for &(i, w) in y {
                    *merged.entry(i).or_insert(0.0) += a * w;
                }
                DualRepr::Atoms(merged.into_iter().collect())
            }
            _ => unreachable!("same space implies same representation"),
        };
        Ok(DualVector {
            space: self.space,
            repr,
            snap_distance: self.snap_distance.max(other.snap_distance),
        })
    }

    pub fn distance(&self, other: &DualVector) -> Result<f64> {
        Ok(self.plus_scaled(-1.0, other)?.dual_norm())
    }

    /// Coordinate-wise or atom-wise closeness within `tol * (1 + scale)`.
    pub fn approx_eq(&self, other: &DualVector, tol: f64) -> bool {
        match self.distance(other) {
            Ok(d) => d <= tol * (1.0 + self.dual_norm().max(other.dual_norm())),
            Err(_) => false,
        }
    }
}

impl Add for &DualVector {
    type Output = DualVector;
    fn add(self, rhs: &DualVector) -> DualVector {
        self.plus_scaled(1.0, rhs).expect("space mismatch in addition")
    }
}

impl Sub for &DualVector {
    type Output = DualVector;
    fn sub(self, rhs: &DualVector) -> DualVector {
        self.plus_scaled(-1.0, rhs).expect("space mismatch in subtraction")
    }
}

impl Mul<&DualVector> for f64 {
    type Output = DualVector;
    fn mul(self, rhs: &DualVector) -> DualVector {
        rhs.scaled(self)
    }
}

#[derive(Serialize)]
struct DualView<'a> {
    space: SpaceSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    values: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    atoms: Vec<Atom>,
}

impl Serialize for DualVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DualView {
            space: self.space,
            values: self.values(),
            atoms: self.atom_list(),
        }
        .serialize(s)
    }
}

/// `<w, v>`: coordinate dot product, or `sum_i w_i v(t_i)` for atoms.
pub fn pairing(w: &DualVector, v: &PrimalVector) -> Result<f64> {
    w.space.ensure_same(&v.space)?;
    Ok(match &w.repr {
        DualRepr::Coords(c) => c.iter().zip(&v.values).map(|(a, b)| a * b).sum(),
        DualRepr::Atoms(a) => a.iter().map(|&(i, wt)| wt * v.values[i]).sum(),
    })
}

pub fn norm(v: &PrimalVector) -> f64 {
    v.norm()
}

pub fn dual_norm(w: &DualVector) -> f64 {
    w.dual_norm()
}

fn require_lp(space: SpaceSpec) -> Result<f64> {
    space.exponent().ok_or(Error::WrongSpace {
        expected: "Lp",
        got: space.to_string(),
    })
}

/// Normalized duality map of `l_p`:
/// `(Jv)_i = |v_i|^(p-2) v_i / ||v||_p^(p-2)`, with `J(0) = 0`.
pub fn duality_map(v: &PrimalVector) -> Result<DualVector> {
    let p = require_lp(v.space)?;
    let n = v.norm();
    if n == 0.0 {
        return Ok(DualVector::zero(v.space));
    }
    let values = if p == 2.0 {
        v.values.clone()
    } else {
        v.values
            .iter()
            .map(|&x| {
                let r = x.abs() / n;
                x.signum() * n * r.powf(p - 1.0)
            })
            .collect()
    };
    DualVector::coords(v.space, values)
}

/// Selection of the set-valued duality map of `l_1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct L1DualitySelection {
    pub value: DualVector,
    /// Set when the input is the origin, where no selection is defined.
    pub degenerate: bool,
}

/// `j(v)_i = ||v||_1 sign(v_i)` with `sign(0) = 0`.
pub fn duality_map_l1_selection(v: &PrimalVector) -> Result<L1DualitySelection> {
    if !matches!(v.space, SpaceSpec::L1 { .. }) {
        return Err(Error::WrongSpace {
            expected: "L1",
            got: v.space.to_string(),
        });
    }
    if v.is_zero() {
        return Ok(L1DualitySelection {
            value: DualVector::zero(v.space),
            degenerate: true,
        });
    }
    let n = v.norm();
    let values = v
        .values
        .iter()
        .map(|&x| if x == 0.0 { 0.0 } else { n * x.signum() })
        .collect();
    Ok(L1DualitySelection {
        value: DualVector::coords(v.space, values)?,
        degenerate: false,
    })
}

/// Duality map of the dual `l_q`, landing back in `l_p`.
pub fn duality_map_inverse(w: &DualVector) -> Result<PrimalVector> {
    let p = require_lp(w.space)?;
    let q = p / (p - 1.0);
    let c = w.values().expect("Lp dual has coordinates");
    let n = w.dual_norm();
    if n == 0.0 {
        return Ok(PrimalVector::zeros(w.space));
    }
    let values = if q == 2.0 {
        c.to_vec()
    } else {
        c.iter()
            .map(|&x| {
                let r = x.abs() / n;
                x.signum() * n * r.powf(q - 1.0)
            })
            .collect()
    };
    PrimalVector::new(w.space, values)
}

/// A primal `j*(w)` with `<w, j*(w)> = ||w||_*^2` and `||j*(w)|| = ||w||_*`,
/// for every kind of space. In `l_1` the largest `|w_i|` coordinate carries
/// all the mass; for atomic measures the grid function takes the value
/// `||w||_* sign(w_k)` at each atom and is linear in between.
pub fn dual_to_primal_selection(w: &DualVector) -> Result<PrimalVector> {
    match w.space {
        SpaceSpec::Lp { .. } => duality_map_inverse(w),
        SpaceSpec::L1 { .. } => {
            let c = w.values().expect("coords");
            let mut out = PrimalVector::zeros(w.space);
            let n = w.dual_norm();
            if n > 0.0 {
                let k = c
                    .iter()
                    .enumerate()
                    .fold(0, |best, (i, x)| if x.abs() > c[best].abs() { i } else { best });
                out.values[k] = n * c[k].signum();
            }
            Ok(out)
        }
        SpaceSpec::C01 { grid_size } => {
            let atoms = match &w.repr {
                DualRepr::Atoms(a) => a.iter().filter(|(_, wt)| *wt != 0.0).copied().collect::<Vec<_>>(),
                DualRepr::Coords(_) => unreachable!(),
            };
            let tv = w.dual_norm();
            let mut out = PrimalVector::zeros(w.space);
            if atoms.is_empty() {
                return Ok(out);
            }
            let level = |k: usize| tv * atoms[k].1.signum();
            for i in 0..grid_size {
                let pos = atoms.partition_point(|a| a.0 <= i);
                out.values[i] = if pos == 0 {
                    level(0)
                } else if pos == atoms.len() {
                    level(atoms.len() - 1)
                } else {
                    let (a, b) = (atoms[pos - 1].0, atoms[pos].0);
                    let s = (i - a) as f64 / (b - a) as f64;
                    (1.0 - s) * level(pos - 1) + s * level(pos)
                };
            }
            Ok(out)
        }
    }
}

/// Finite index set `M` inside `{0, .., universe - 1}` (zero based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSet {
    members: BTreeSet<usize>,
    universe: usize,
}

impl IndexSet {
    pub fn new(members: impl IntoIterator<Item = usize>, universe: usize) -> Result<Self> {
        let members: BTreeSet<usize> = members.into_iter().collect();
        if let Some(&m) = members.iter().next_back() {
            if m >= universe {
                return Err(Error::InvalidArgument(format!(
                    "index {m} outside universe of size {universe}"
                )));
            }
        }
        Ok(IndexSet { members, universe })
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.contains(&i)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    /// Complement within the truncation.
    pub fn complement(&self) -> IndexSet {
        IndexSet {
            members: (0..self.universe).filter(|i| !self.members.contains(i)).collect(),
            universe: self.universe,
        }
    }
}
