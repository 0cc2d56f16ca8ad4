//! Best uniform polynomial approximation on `[0, 1]` and the determinant
//! machinery behind coefficient bounds for bounded sets of polynomials.
//!
//! [`remez`] solves the discrete minimax problem on the grid of a `C01`
//! space with a multi-point exchange. The grid is finite, so the exchange
//! terminates at the exact discrete best approximation, which equioscillates
//! on `n + 2` grid nodes.
//!
//! `A_n(t)` is the `(n+1) x (n+1)` determinant with entries `t^(i j)`; it is a
//! Vandermonde determinant in the nodes `1, t, .., t^n` and therefore factors
//! as `(t - 1)(t^2 - 1)..(t^n - 1) t^(n(n-1)/2) A_{n-1}(t)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::projections::Polynomial;
use crate::spaces::{PrimalVector, SpaceSpec};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 100;
/// Largest `n` for determinant evaluation and node-system solves.
pub const MAX_DET_DEGREE: usize = 8;

/// `m` Chebyshev points of the second kind mapped to `[0, 1]`, increasing.
pub fn chebyshev_nodes(m: usize) -> Vec<f64> {
    match m {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..m)
            .map(|k| {
                let c = (std::f64::consts::PI * k as f64 / (m - 1) as f64).cos();
                // pin endpoints exactly
                if k == 0 {
                    0.0
                } else if k == m - 1 {
                    1.0
                } else {
                    0.5 * (1.0 - c)
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemezResult {
    pub polynomial: Polynomial,
    /// `max_i |f(t_i) - p(t_i)|` over the grid.
    pub error: f64,
    /// `n + 2` reference nodes, strictly increasing.
    pub reference: Vec<f64>,
    pub reference_indices: Vec<usize>,
    pub residual_signs: Vec<i8>,
    pub iterations: usize,
    /// Levelled error `|E|` after each exchange.
    pub levelled_trace: Vec<f64>,
}

impl RemezResult {
    /// Largest deviation of `|f - p|` at the reference from `error`.
    pub fn equioscillation_defect(&self, f: &PrimalVector) -> f64 {
        let y = f.values();
        self.reference_indices
            .iter()
            .zip(&self.reference)
            .map(|(&i, &t)| ((y[i] - self.polynomial.eval(t)).abs() - self.error).abs())
            .fold(0.0, f64::max)
    }

    pub fn alternates(&self) -> bool {
        self.residual_signs.windows(2).all(|w| w[0] == -w[1] && w[0] != 0)
    }
}

/// Discrete best uniform approximation of the grid function `f` from `P_n`.
pub fn remez(f: &PrimalVector, n: usize, tol: f64) -> Result<RemezResult> {
    let grid = f.space().grid().ok_or(Error::WrongSpace {
        expected: "C01",
        got: f.space().to_string(),
    })?;
    let g = grid.len();
    let m = n + 2;
    if m > g {
        return Err(Error::InvalidArgument(format!(
            "degree {n} needs at least {m} grid nodes, have {g}"
        )));
    }
    let y = f.values();
    let scale = 1.0 + f.norm();

    let mut reference = initial_reference(&grid, m);
    let mut trace = Vec::new();
    for iteration in 1..=MAX_ITERATIONS {
        let (poly, levelled) = level(&grid, y, &reference, n)?;
        trace.push(levelled.abs());
        let residual: Vec<f64> = grid.iter().zip(y).map(|(&t, &v)| v - poly.eval(t)).collect();
        let max_residual = residual.iter().fold(0.0f64, |a, r| a.max(r.abs()));

        // f already in P_n: nothing to level against
        if max_residual <= 64.0 * f64::EPSILON * scale {
            let canonical = initial_reference(&grid, m);
            return Ok(finish(poly, max_residual, &grid, &residual, canonical, iteration, trace, true));
        }
        if max_residual <= levelled.abs() * (1.0 + tol) {
            return Ok(finish(poly, max_residual, &grid, &residual, reference, iteration, trace, false));
        }
        let mut next = exchange(&residual, m);
        if next.len() < m {
            next = single_exchange(&residual, &reference, levelled);
        }
        if next == reference {
            return Ok(finish(poly, max_residual, &grid, &residual, reference, iteration, trace, false));
        }
        reference = next;
    }
    let (poly, levelled) = level(&grid, y, &reference, n)?;
    let max_residual = grid
        .iter()
        .zip(y)
        .fold(0.0f64, |a, (&t, &v)| a.max((v - poly.eval(t)).abs()));
    Err(Error::RemezNonConvergence {
        iterations: MAX_ITERATIONS,
        levelled: levelled.abs(),
        max_residual,
        trace,
    })
}

#[allow(clippy::too_many_arguments)]
fn finish(
    polynomial: Polynomial,
    error: f64,
    grid: &[f64],
    residual: &[f64],
    reference: Vec<usize>,
    iterations: usize,
    levelled_trace: Vec<f64>,
    degenerate: bool,
) -> RemezResult {
    let residual_signs = reference
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            if degenerate {
                if k % 2 == 0 {
                    1
                } else {
                    -1
                }
            } else if residual[i] > 0.0 {
                1
            } else if residual[i] < 0.0 {
                -1
            } else {
                0
            }
        })
        .collect();
    RemezResult {
        polynomial,
        error,
        reference: reference.iter().map(|&i| grid[i]).collect(),
        reference_indices: reference,
        residual_signs,
        iterations,
        levelled_trace,
    }
}

/// Grid nodes nearest to the Chebyshev points, made strictly increasing.
fn initial_reference(grid: &[f64], m: usize) -> Vec<usize> {
    let g = grid.len();
    let mut idx: Vec<usize> = chebyshev_nodes(m)
        .iter()
        .map(|&t| ((t * (g - 1) as f64).round() as usize).min(g - 1))
        .collect();
    for k in 1..m {
        if idx[k] <= idx[k - 1] {
            idx[k] = idx[k - 1] + 1;
        }
    }
    for k in (0..m).rev() {
        let cap = g - (m - k);
        if idx[k] > cap {
            idx[k] = cap;
        }
        if k + 1 < m && idx[k] >= idx[k + 1] {
            idx[k] = idx[k + 1] - 1;
        }
    }
    idx
}

/// Classic one-point exchange: the global argmax replaces the reference
/// node whose levelled sign matches, shifting at the ends if needed.
fn single_exchange(residual: &[f64], reference: &[usize], levelled: f64) -> Vec<usize> {
    let m = reference.len();
    let j = (0..residual.len())
        .max_by(|&a, &b| residual[a].abs().total_cmp(&residual[b].abs()))
        .expect("nonempty grid");
    if reference.contains(&j) {
        return reference.to_vec();
    }
    let base = if levelled < 0.0 { -1.0 } else { 1.0 };
    let sigma = |k: usize| if k.is_multiple_of(2) { base } else { -base };
    let s = residual[j].signum();
    let mut next = reference.to_vec();
    let pos = reference.partition_point(|&i| i < j);
    if pos == 0 {
        if sigma(0) == s {
            next[0] = j;
        } else {
            next.pop();
            next.insert(0, j);
        }
    } else if pos == m {
        if sigma(m - 1) == s {
            next[m - 1] = j;
        } else {
            next.remove(0);
            next.push(j);
        }
    } else if sigma(pos - 1) == s {
        next[pos - 1] = j;
    } else {
        next[pos] = j;
    }
    next
}

/// Solves `p(t_i) + (-1)^i E = y_i` on the reference.
fn level(grid: &[f64], y: &[f64], reference: &[usize], n: usize) -> Result<(Polynomial, f64)> {
    let m = reference.len();
    let a = Matrix::from_fn(m, |i, j| {
        let t = grid[reference[i]];
        if j <= n {
            t.powi(j as i32)
        } else if i % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    });
    let rhs: Vec<f64> = reference.iter().map(|&i| y[i]).collect();
    let sol = a.solve(&rhs)?;
    Ok((Polynomial::new(sol[..=n].to_vec()), sol[n + 1]))
}

/// Multi-point exchange: one extremum per sign run of the residual, trimmed
/// to `m` alternating points that keep the global maximum.
fn exchange(residual: &[f64], m: usize) -> Vec<usize> {
    let mut picks: Vec<usize> = Vec::new();
    for (i, &r) in residual.iter().enumerate() {
        if r == 0.0 {
            continue;
        }
        match picks.last_mut() {
            Some(last) if residual[*last].signum() == r.signum() => {
                if r.abs() > residual[*last].abs() {
                    *last = i;
                }
            }
            _ => picks.push(i),
        }
    }
    let mag = |i: usize| residual[i].abs();
    while picks.len() > m {
        let k = (0..picks.len())
            .min_by(|&a, &b| mag(picks[a]).total_cmp(&mag(picks[b])))
            .expect("nonempty");
        let excess = picks.len() - m;
        if k == 0 || k == picks.len() - 1 {
            picks.remove(k);
        } else if excess == 1 {
            // dropping an end keeps alternation
            if mag(picks[0]) <= mag(picks[picks.len() - 1]) {
                picks.remove(0);
            } else {
                picks.pop();
            }
        } else {
            let nb = if mag(picks[k - 1]) <= mag(picks[k + 1]) { k - 1 } else { k + 1 };
            let lo = k.min(nb);
            picks.drain(lo..lo + 2);
        }
    }
    picks
}

/// `A_n(t)` by pivoted elimination of the matrix `[t^(i j)]`, `i, j = 0..n`.
pub fn an_determinant(t: f64, n: usize) -> Result<f64> {
    check_degree(n)?;
    let m = Matrix::from_fn(n + 1, |i, j| t.powi((i * j) as i32));
    Ok(m.determinant())
}

/// `A_n(t)` through the product recursion, starting from `A_0 = 1`.
pub fn an_recursive(t: f64, n: usize) -> f64 {
    let mut a = 1.0;
    for k in 1..=n {
        let factors: f64 = (1..=k).map(|j| t.powi(j as i32) - 1.0).product();
        a *= factors * t.powi((k * (k - 1) / 2) as i32);
    }
    a
}

/// `A_n(t)` in exact rational arithmetic.
pub fn an_determinant_exact(t: &BigRational, n: usize) -> BigRational {
    let size = n + 1;
    let mut a: Vec<Vec<BigRational>> = (0..size)
        .map(|i| (0..size).map(|j| pow_rational(t, i * j)).collect())
        .collect();
    let mut det = BigRational::one();
    for k in 0..size {
        let Some(piv) = (k..size).find(|&i| !a[i][k].is_zero()) else {
            return BigRational::zero();
        };
        if piv != k {
            a.swap(piv, k);
            det = -det;
        }
        let d = a[k][k].clone();
        det *= d.clone();
        for i in (k + 1)..size {
            let factor = &a[i][k] / &d;
            for j in k..size {
                let sub = &factor * &a[k][j];
                a[i][j] -= sub;
            }
        }
    }
    det
}

fn pow_rational(t: &BigRational, e: usize) -> BigRational {
    let mut out = BigRational::one();
    for _ in 0..e {
        out *= t.clone();
    }
    out
}

/// `1/2` as an exact rational.
pub fn half() -> BigRational {
    BigRational::new(BigInt::from(1), BigInt::from(2))
}

fn check_degree(n: usize) -> Result<()> {
    if (1..=MAX_DET_DEGREE).contains(&n) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "degree {n} outside supported range 1..={MAX_DET_DEGREE}"
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeterminantReport {
    pub n: usize,
    pub grid: Vec<f64>,
    pub direct_values: Vec<f64>,
    pub recursive_values: Vec<f64>,
    pub max_rel_diff: f64,
}

pub fn determinant_report(n: usize, grid: &[f64]) -> Result<DeterminantReport> {
    let direct_values = grid.iter().map(|&t| an_determinant(t, n)).collect::<Result<Vec<_>>>()?;
    let recursive_values: Vec<f64> = grid.iter().map(|&t| an_recursive(t, n)).collect();
    let max_rel_diff = direct_values
        .iter()
        .zip(&recursive_values)
        .map(|(d, r)| (d - r).abs() / r.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    Ok(DeterminantReport {
        n,
        grid: grid.to_vec(),
        direct_values,
        recursive_values,
        max_rel_diff,
    })
}

/// Coefficients of the degree-`n` polynomial with `p(2^-k) = values[k]`,
/// `k = 0..n`. The system matrix is `[2^(-k j)]`, whose determinant is
/// `A_n(1/2) != 0`.
pub fn coeffs_from_values(values: &[f64]) -> Result<Polynomial> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("need at least one value".into()));
    }
    let n = values.len() - 1;
    if n > MAX_DET_DEGREE {
        return Err(Error::InvalidArgument(format!(
            "degree {n} exceeds {MAX_DET_DEGREE}"
        )));
    }
    let m = Matrix::from_fn(n + 1, |k, j| 0.5f64.powi((k * j) as i32));
    Ok(Polynomial::new(m.solve(values)?))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Bound `n! b / |A_n(1/2)|` on every coefficient of a polynomial in `P_n`
/// with `||p|| <= b`.
pub fn coefficient_bound(b: f64, n: usize) -> Result<f64> {
    Ok(factorial(n) * b / an_determinant(0.5, n)?.abs())
}

/// Bound `n! n^2 b / |A_n(1/2)|` on `||p'||` for `||p|| <= b`.
pub fn derivative_coefficient_bound(b: f64, n: usize) -> Result<f64> {
    Ok(factorial(n) * (n * n) as f64 * b / an_determinant(0.5, n)?.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub n: usize,
    pub g_norm: f64,
    /// `||P(f + g/m) - P(f)||` for `m = 1..=perturbations`.
    pub deviations: Vec<f64>,
    /// `max m * d_m` over the leading three quarters.
    pub fitted_constant: f64,
    pub tail_within_fit: bool,
    pub final_value: f64,
    pub final_threshold: f64,
    pub final_ok: bool,
}

/// Tail slack on the fitted `C / m` envelope.
pub const CONTINUITY_TAIL_SLACK: f64 = 0.05;

/// Tracks `P(f + g/m)` as `m` grows. The envelope constant is fitted on the
/// first three quarters of the sequence and the last quarter must stay below
/// `(1 + slack) C / m`; the last deviation is compared with
/// `1e-3 (1 + ||g||)`.
pub fn continuity_experiment(
    f: &PrimalVector,
    n: usize,
    g: &PrimalVector,
    perturbations: usize,
) -> Result<ContinuityReport> {
    if perturbations == 0 {
        return Err(Error::InvalidArgument("need at least one perturbation".into()));
    }
    let space = f.space();
    let base = remez(f, n, DEFAULT_TOL)?.polynomial.sample(space)?;
    let deviations = crate::exec::map_range(crate::exec::Execution::default(), perturbations, |k| {
        let m = (k + 1) as f64;
        let fm = f.plus_scaled(1.0 / m, g)?;
        remez(&fm, n, DEFAULT_TOL)?.polynomial.sample(space)?.distance(&base)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;

    let head = (3 * perturbations / 4).max(1);
    let fitted_constant = deviations[..head]
        .iter()
        .enumerate()
        .map(|(k, d)| (k + 1) as f64 * d)
        .fold(0.0, f64::max);
    let tail_within_fit = deviations[head..].iter().enumerate().all(|(k, d)| {
        let m = (head + k + 1) as f64;
        *d <= (1.0 + CONTINUITY_TAIL_SLACK) * fitted_constant / m + 1e-12
    });
    let g_norm = g.norm();
    let final_value = *deviations.last().expect("nonempty");
    let final_threshold = 1e-3 * (1.0 + g_norm);
    Ok(ContinuityReport {
        n,
        g_norm,
        deviations,
        fitted_constant,
        tail_within_fit,
        final_value,
        final_threshold,
        final_ok: final_value <= final_threshold,
    })
}

/// Signed atomic measure annihilating `P_n`: atoms at `n + 2` Chebyshev
/// points, weights spanning the null space of the moment matrix, scaled to
/// total variation 1.
pub fn annihilating_measure(space: SpaceSpec, n: usize) -> Result<crate::spaces::DualVector> {
    let nodes: Vec<f64> = chebyshev_nodes(n + 2)
        .into_iter()
        .map(|t| space.snap(t).map(|(i, _)| space.node(i)))
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(|| Error::WrongSpace {
            expected: "C01",
            got: space.to_string(),
        })?;
    // The null vector of [t_i^k] (k = 0..n) has the divided-difference
    // weights 1 / prod_{j != i} (t_i - t_j).
    let weights: Vec<f64> = (0..nodes.len())
        .map(|i| {
            1.0 / (0..nodes.len())
                .filter(|&j| j != i)
                .map(|j| nodes[i] - nodes[j])
                .product::<f64>()
        })
        .collect();
    let tv: f64 = weights.iter().map(|w| w.abs()).sum();
    let atoms: Vec<(f64, f64)> = nodes.iter().zip(&weights).map(|(&t, &w)| (t, w / tv)).collect();
    crate::spaces::DualVector::atoms(space, &atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{pairing, DEFAULT_GRID};

    fn c01() -> SpaceSpec {
        SpaceSpec::c01(DEFAULT_GRID).unwrap()
    }

    #[test]
    fn a2_closed_form_and_half() {
        for k in 1..20 {
            let t = k as f64 / 20.0;
            let poly = t.powi(5) - 2.0 * t.powi(4) + 2.0 * t * t - t;
            assert!((an_determinant(t, 2).unwrap() - poly).abs() < 1e-12);
            assert!((an_recursive(t, 2) - poly).abs() < 1e-12);
            assert!(poly < 0.0);
        }
        assert_eq!(an_determinant(0.5, 2).unwrap(), -3.0 / 32.0);
        assert_eq!(an_recursive(0.5, 2), -3.0 / 32.0);
        let exact = an_determinant_exact(&half(), 2);
        assert_eq!(exact, BigRational::new(BigInt::from(-3), BigInt::from(32)));
        assert!(exact.is_negative());
    }

    #[test]
    fn a1_is_t_minus_one() {
        assert_eq!(an_recursive(0.3, 1), 0.3 - 1.0);
        assert!((an_determinant(0.3, 1).unwrap() - (0.3 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn determinant_vanishes_at_endpoints() {
        for n in 1..=5 {
            assert!(an_determinant(1.0, n).unwrap().abs() < 1e-12);
            if n >= 2 {
                assert!(an_determinant(0.0, n).unwrap().abs() < 1e-12);
                assert!(an_recursive(1e-9, n).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn determinant_degree_range() {
        assert!(an_determinant(0.5, 0).is_err());
        assert!(an_determinant(0.5, 9).is_err());
    }

    #[test]
    fn coefficient_bounds_values() {
        assert!((coefficient_bound(1.0, 2).unwrap() - 64.0 / 3.0).abs() < 1e-12);
        assert!((coefficient_bound(1.0, 1).unwrap() - 2.0).abs() < 1e-15);
        assert!((derivative_coefficient_bound(1.0, 2).unwrap() - 256.0 / 3.0).abs() < 1e-11);
        assert!((derivative_coefficient_bound(1.0, 1).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn node_system_reconstructs() {
        let p = coeffs_from_values(&[2.0, 1.5]).unwrap();
        assert!((p.coefficients()[0] - 1.0).abs() < 1e-14 && (p.coefficients()[1] - 1.0).abs() < 1e-14);
        let q = coeffs_from_values(&[1.0, 0.25, 0.0625]).unwrap();
        for (a, e) in q.coefficients().iter().zip([0.0, 0.0, 1.0]) {
            assert!((a - e).abs() < 1e-13);
        }
    }

    #[test]
    fn remez_square_degree_one() {
        let f = PrimalVector::from_fn(c01(), |t| t * t).unwrap();
        let res = remez(&f, 1, DEFAULT_TOL).unwrap();
        assert!((res.error - 0.125).abs() < 1e-12);
        let c = res.polynomial.coefficients();
        assert!((c[0] + 0.125).abs() < 1e-12 && (c[1] - 1.0).abs() < 1e-12);
        assert_eq!(res.reference, vec![0.0, 0.5, 1.0]);
        assert!(res.alternates());
        assert!(res.equioscillation_defect(&f) <= 1e-9 * (1.0 + res.error));
    }

    #[test]
    fn remez_reproduces_polynomials() {
        let p = Polynomial::new(vec![0.3, -1.2, 2.0, 0.7]);
        let f = p.sample(c01()).unwrap();
        let res = remez(&f, 3, DEFAULT_TOL).unwrap();
        assert!(res.error <= 1e-12);
        let back = res.polynomial.sample(c01()).unwrap();
        assert!(back.distance(&f).unwrap() <= 1e-12);
    }

    #[test]
    fn remez_best_constant() {
        let f = PrimalVector::from_fn(c01(), |t| (t - 0.5).abs()).unwrap();
        let res = remez(&f, 0, DEFAULT_TOL).unwrap();
        assert!((res.polynomial.coefficients()[0] - 0.25).abs() < 1e-12);
        assert!((res.error - 0.25).abs() < 1e-12);
    }

    #[test]
    fn remez_levelled_error_is_nondecreasing() {
        let f = PrimalVector::from_fn(c01(), |t| (3.0 * t).sin() + (7.0 * t).cos() * 0.3).unwrap();
        let res = remez(&f, 3, DEFAULT_TOL).unwrap();
        for w in res.levelled_trace.windows(2) {
            assert!(w[1] >= w[0] * (1.0 - 1e-12));
        }
        assert!(res.alternates());
    }

    #[test]
    fn remez_rejects_bad_inputs() {
        let s = SpaceSpec::lp(2.0, 3).unwrap();
        assert!(remez(&PrimalVector::zeros(s), 1, DEFAULT_TOL).is_err());
        let tiny = SpaceSpec::c01(3).unwrap();
        assert!(remez(&PrimalVector::zeros(tiny), 2, DEFAULT_TOL).is_err());
    }

    #[test]
    fn zero_perturbation_keeps_projection() {
        let f = PrimalVector::from_fn(c01(), |t| t * t).unwrap();
        let g = PrimalVector::zeros(c01());
        let rep = continuity_experiment(&f, 1, &g, 8).unwrap();
        assert!(rep.deviations.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn annihilator_kills_low_degree() {
        for n in 0..4 {
            let gamma = annihilating_measure(c01(), n).unwrap();
            assert!((gamma.dual_norm() - 1.0).abs() < 1e-12);
            for k in 0..=n {
                let mono = PrimalVector::from_fn(c01(), |t| t.powi(k as i32)).unwrap();
                assert!(pairing(&gamma, &mono).unwrap().abs() <= 1e-10);
            }
        }
    }
}
