//! The method of alternating projections: cycle operators, exact error
//! norms `||T^n - P_M||`, empirical rates, and the product bound.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fmatrix::Constellation;
use crate::ordering::Permutation;
use crate::subspace::{
    friedrichs_number, intersection, matrix_norm, projector, Frame, Operator, Scalar, DEFAULT_TOL,
};

/// Error values below this are reported as 0 and flagged as underflow.
pub const UNDERFLOW_FLOOR: f64 = 1e-300;
/// Only errors above this enter the rate estimate.
pub const RATE_FLOOR: f64 = 1e-250;

fn check_sigma<T: Scalar>(k: &Constellation<T>, sigma: &Permutation) -> Result<()> {
    if sigma.len() != k.len() {
        return Err(Error::NotPermutation {
            n: k.len(),
            detail: format!("{sigma} has length {}", sigma.len()),
        });
    }
    Ok(())
}

/// `T_sigma = P_sigma(N) ... P_sigma(1)`; `P_sigma(1)` is applied first.
pub fn cycle_operator<T: Scalar>(k: &Constellation<T>, sigma: &Permutation) -> Result<Operator<T>> {
    check_sigma(k, sigma)?;
    let frames = k.frames();
    let mut t = Operator::identity(k.ambient_dim());
    for &i in sigma.as_slice() {
        t = projector(&frames[i]).compose(&t)?;
    }
    Ok(t)
}

/// Projector onto `M = M_1 ∩ ... ∩ M_N`, together with `dim M`.
pub fn intersection_projector<T: Scalar>(k: &Constellation<T>, tol: f64) -> Result<(Operator<T>, usize)> {
    Ok(match intersection(k.frames(), tol)? {
        Some(f) => (projector(&f), f.rank()),
        None => (Operator::zeros(k.ambient_dim()), 0),
    })
}

/// `||T^n - P_M||` for `n = 1..=n_max` under one ordering.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceCurve {
    pub ordering: Permutation,
    pub ns: Vec<usize>,
    pub errors: Vec<f64>,
    /// `C_sigma r_sigma^n`, or `None` when `c(M_sigma(1), M_sigma(N)) = 0`;
    /// the iteration then converges within two steps and the bound does not apply.
    pub bound_values: Option<Vec<f64>>,
    /// Geometric rate fitted over the tail half of the curve; `None` when
    /// fewer than two usable points remain.
    pub rate_estimate: Option<f64>,
    /// `r_sigma` from the pairwise Friedrichs numbers.
    pub cycle_rate: f64,
    /// `C_sigma = c(M_sigma(1), M_sigma(N))^-1`.
    pub bound_constant: Option<f64>,
    pub intersection_dim: usize,
    /// Some error fell below [`UNDERFLOW_FLOOR`] and was reported as 0.
    pub underflow: bool,
}

/// Friedrichs numbers along the cycle: entry `k` is `c(M_sigma(k), M_sigma(k+1))`.
fn cycle_friedrichs<T: Scalar>(frames: &[Frame<T>], sigma: &Permutation, tol: f64) -> Result<Vec<f64>> {
    let o = sigma.as_slice();
    let n = o.len();
    (0..n)
        .map(|k| friedrichs_number(&frames[o[k]], &frames[o[(k + 1) % n]], tol))
        .collect()
}

pub fn error_norms<T: Scalar>(k: &Constellation<T>, sigma: &Permutation, n_max: usize) -> Result<ConvergenceCurve> {
    error_norms_tol(k, sigma, n_max, DEFAULT_TOL)
}

/// Computes `||(T - P_M)^n||`, which equals `||T^n - P_M||` since `T` and
/// `P_M` commute and `T P_M = P_M`. The running power is renormalized after
/// every step and its scale tracked in the log domain.
pub fn error_norms_tol<T: Scalar>(
    k: &Constellation<T>,
    sigma: &Permutation,
    n_max: usize,
    tol: f64,
) -> Result<ConvergenceCurve> {
    if n_max < 1 {
        return Err(Error::InvalidParams("n_max must be at least 1".into()));
    }
    let t = cycle_operator(k, sigma)?;
    let (pm, intersection_dim) = intersection_projector(k, tol)?;
    let d = t.sub(&pm)?.into_entries();

    let mut errors = Vec::with_capacity(n_max);
    let mut underflow = false;
    let mut exact_zero = false;
    let mut log_scale = 0.0f64;
    let mut unit: DMatrix<T> = DMatrix::identity(d.nrows(), d.ncols());
    for _ in 0..n_max {
        if exact_zero {
            errors.push(0.0);
            continue;
        }
        let next = &d * &unit;
        let s = matrix_norm(&next);
        if s == 0.0 {
            exact_zero = true;
            errors.push(0.0);
            continue;
        }
        log_scale += s.ln();
        unit = next.unscale(s);
        let e = log_scale.exp();
        if e < UNDERFLOW_FLOOR {
            underflow = true;
            errors.push(0.0);
        } else {
            errors.push(e);
        }
    }

    let cs = cycle_friedrichs(k.frames(), sigma, tol)?;
    let cycle_rate: f64 = cs.iter().product();
    let closing = cs[cs.len() - 1];
    let bound_constant = (closing > 0.0).then(|| 1.0 / closing);
    let ns: Vec<usize> = (1..=n_max).collect();
    let bound_values = bound_constant.map(|cc| ns.iter().map(|&n| cc * cycle_rate.powi(n as i32)).collect());

    let rate_estimate = if exact_zero {
        Some(0.0)
    } else {
        estimate_rate(&errors)
    };

    Ok(ConvergenceCurve {
        ordering: sigma.clone(),
        ns,
        errors,
        bound_values,
        rate_estimate,
        cycle_rate,
        bound_constant,
        intersection_dim,
        underflow,
    })
}

// errors[i] belongs to n = i + 1.
fn estimate_rate(errors: &[f64]) -> Option<f64> {
    let hi = errors.iter().rposition(|&e| e > RATE_FLOOR)? + 1;
    let lo = (hi / 2).max(1);
    if hi <= lo {
        return None;
    }
    let (e_hi, e_lo) = (errors[hi - 1], errors[lo - 1]);
    if e_lo <= RATE_FLOOR {
        return None;
    }
    Some(((e_hi.ln() - e_lo.ln()) / (hi - lo) as f64).exp())
}

/// Product-bound check at one iteration count.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundVerdict {
    pub n: usize,
    pub error: f64,
    pub bound: f64,
    /// `bound - error`.
    pub gap: f64,
    pub ok: bool,
}

/// Right-hand side of the product bound,
/// `c(σN,σN-1)^n ... c(σ2,σ1)^n c(σ1,σN)^(n-1)`.
pub fn product_bound<T: Scalar>(k: &Constellation<T>, sigma: &Permutation, n: usize, tol: f64) -> Result<f64> {
    check_sigma(k, sigma)?;
    let cs = cycle_friedrichs(k.frames(), sigma, tol)?;
    let (closing, path) = cs.split_last().expect("N >= 2");
    let path_product: f64 = path.iter().product();
    Ok(path_product.powi(n as i32) * closing.powi(n as i32 - 1))
}

/// `M_k ∩ M_l ∩ M^⊥ = {0}` for all `k != l`, i.e. every pairwise
/// intersection has the same dimension as the full intersection.
/// Returns the first offending pair (0-based) if any.
pub fn quasi_disjoint_violation<T: Scalar>(k: &Constellation<T>, tol: f64) -> Result<Option<(usize, usize)>> {
    let m_dim = intersection(k.frames(), tol)?.map_or(0, |f| f.rank());
    let frames = k.frames();
    for a in 0..frames.len() {
        for b in a + 1..frames.len() {
            let dim = intersection(&[frames[a].clone(), frames[b].clone()], tol)?.map_or(0, |f| f.rank());
            if dim > m_dim {
                return Ok(Some((a, b)));
            }
        }
    }
    Ok(None)
}

/// Checks `||T^n - P_M|| <= bound + tol` for `n = 1..=n_max`. Fails if the
/// subspaces are not pairwise quasi-disjoint.
pub fn check_product_bound<T: Scalar>(
    k: &Constellation<T>,
    sigma: &Permutation,
    n_max: usize,
    tol: f64,
) -> Result<Vec<BoundVerdict>> {
    if let Some((a, b)) = quasi_disjoint_violation(k, DEFAULT_TOL)? {
        return Err(Error::NotQuasiDisjoint(a + 1, b + 1));
    }
    let curve = error_norms(k, sigma, n_max)?;
    curve
        .ns
        .iter()
        .zip(&curve.errors)
        .map(|(&n, &error)| {
            let bound = product_bound(k, sigma, n, DEFAULT_TOL)?;
            Ok(BoundVerdict { n, error, bound, gap: bound - error, ok: error <= bound + tol })
        })
        .collect()
}

/// Iterates of `x0` under `T_sigma`, one entry per full cycle.
#[derive(Clone, Debug)]
pub struct Trajectory<T: Scalar = f64> {
    /// `x0, T x0, ..., T^n x0`.
    pub points: Vec<DVector<T>>,
    /// `P_M x0`.
    pub limit: DVector<T>,
    /// `||T^j x0 - P_M x0||` for each point.
    pub distances: Vec<f64>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn final_distance(&self) -> f64 {
        *self.distances.last().expect("trajectory has at least x0")
    }
}

pub fn iterate_point<T: Scalar>(
    k: &Constellation<T>,
    sigma: &Permutation,
    x0: &DVector<T>,
    n: usize,
) -> Result<Trajectory<T>> {
    check_sigma(k, sigma)?;
    if x0.len() != k.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: k.ambient_dim(), found: x0.len() });
    }
    let limit = match intersection(k.frames(), DEFAULT_TOL)? {
        Some(f) => f.project(x0),
        None => DVector::zeros(x0.len()),
    };
    let frames = k.frames();
    let mut points = Vec::with_capacity(n + 1);
    points.push(x0.clone());
    let mut x = x0.clone();
    for _ in 0..n {
        for &i in sigma.as_slice() {
            x = frames[i].project(&x);
        }
        points.push(x.clone());
    }
    let distances = points.iter().map(|p| (p - &limit).norm()).collect();
    Ok(Trajectory { points, limit, distances })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fmatrix::{lines, realize, FriedrichsMatrix};

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn cycle_operator_examples() {
        let ortho = lines(&[v(&[1.0, 0.0]), v(&[0.0, 1.0])]).unwrap();
        let t = cycle_operator(&ortho, &Permutation::identity(2)).unwrap();
        assert_eq!(t, Operator::zeros(2));

        let same = lines(&[v(&[1.0, 0.0]), v(&[1.0, 0.0])]).unwrap();
        let t = cycle_operator(&same, &Permutation::identity(2)).unwrap();
        assert_eq!(t, projector(&same.frames()[0]));

        let c = FriedrichsMatrix::from_fn(3, |k, l| 0.3 + 0.1 * (k + l) as f64).unwrap();
        let k: Constellation = realize(&c).unwrap();
        let t = cycle_operator(&k, &Permutation::identity(3)).unwrap();
        assert!(matrix_norm(t.entries()) <= 1e-12);
    }

    #[test]
    fn two_lines_follow_odd_powers() {
        let k = lines(&[v(&[1.0, 0.0]), v(&[0.5, 3f64.sqrt() / 2.0])]).unwrap();
        let curve = error_norms(&k, &Permutation::identity(2), 5).unwrap();
        for (n, e) in curve.ns.iter().zip(&curve.errors) {
            assert!((e - 0.5f64.powi(2 * *n as i32 - 1)).abs() < 1e-15);
        }
        assert!((curve.cycle_rate - 0.25).abs() < 1e-15);
        assert!((curve.rate_estimate.unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(curve.intersection_dim, 0);
    }

    #[test]
    fn orthogonal_lines_converge_at_once() {
        let k = lines(&[v(&[1.0, 0.0]), v(&[0.0, 1.0])]).unwrap();
        let curve = error_norms(&k, &Permutation::identity(2), 4).unwrap();
        assert_eq!(curve.errors, vec![0.0; 4]);
        assert_eq!(curve.rate_estimate, Some(0.0));
        assert!(curve.bound_values.is_none());
        assert!(error_norms(&k, &Permutation::identity(2), 0).is_err());
    }

    #[test]
    fn example_lines_meet_product_bound_with_equality() {
        let k = crate::examples::four_lines();
        for sigma in [Permutation::identity(4), Permutation::from_one_based(&[1, 4, 2, 3]).unwrap()] {
            let verdicts = check_product_bound(&k, &sigma, 10, 1e-12).unwrap();
            for vd in verdicts {
                assert!(vd.ok);
                assert!(vd.gap.abs() <= 1e-12, "{vd:?}");
            }
        }
    }

    #[test]
    fn product_bound_refuses_overlapping_pairs() {
        // Two planes sharing e3, third plane is e1,e2: M = {0} but M1 ∩ M2 = span{e3}.
        let e = |i| {
            let mut x = DVector::zeros(3);
            x[i] = 1.0;
            x
        };
        use crate::subspace::orthonormalize;
        let frames = vec![
            orthonormalize(&[e(0), e(2)], DEFAULT_TOL).unwrap(),
            orthonormalize(&[e(1), e(2)], DEFAULT_TOL).unwrap(),
            orthonormalize(&[e(0), e(1)], DEFAULT_TOL).unwrap(),
        ];
        let k = Constellation::new(frames).unwrap();
        assert!(matches!(
            check_product_bound(&k, &Permutation::identity(3), 3, 1e-12),
            Err(Error::NotQuasiDisjoint(1, 2))
        ));
    }

    #[test]
    fn trajectories() {
        let k = lines(&[v(&[1.0, 0.0]), v(&[1.0, 0.0])]).unwrap();
        let tr = iterate_point(&k, &Permutation::identity(2), &v(&[1.0, 0.0]), 3).unwrap();
        assert!(tr.points.iter().all(|p| p == &v(&[1.0, 0.0])));
        assert_eq!(tr.final_distance(), 0.0);
        let tr = iterate_point(&k, &Permutation::identity(2), &v(&[0.0, 1.0]), 2).unwrap();
        assert_eq!(tr.points[1], v(&[0.0, 0.0]));
        assert!(iterate_point(&k, &Permutation::identity(2), &v(&[1.0]), 2).is_err());
    }

    #[test]
    fn trajectory_contracts_at_cycle_rate() {
        let k = crate::examples::four_lines();
        let sigma = Permutation::from_one_based(&[1, 4, 2, 3]).unwrap();
        let tr = iterate_point(&k, &sigma, &DVector::from_element(4, 0.5), 6).unwrap();
        let c = crate::fmatrix::from_constellation(&k, DEFAULT_TOL).unwrap();
        let r = crate::ordering::cycle_rate(&c, &sigma).unwrap();
        for w in tr.distances[2..].windows(2) {
            assert!((w[1] / w[0] / r - 1.0).abs() < 1e-6);
        }
    }
}
