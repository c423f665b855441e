//! Concrete instances and seeded random generators.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmatrix::{from_constellation, lines, Constellation, FriedrichsMatrix};
use crate::subspace::DEFAULT_TOL;

/// Four lines in `R^4` for which the greedy ordering `(1,4,3,2)` is beaten
/// by `(1,4,2,3)`. Built from the exact vector expressions.
pub fn four_lines() -> Constellation {
    let s2 = 2f64.sqrt();
    let vectors = [
        DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]),
        DVector::from_vec(vec![0.5, 3f64.sqrt() / 2.0, 0.0, 0.0]),
        DVector::from_vec(vec![0.2, 1.0 / (10.0 * s2), 191f64.sqrt() / (10.0 * s2), 0.0]),
        DVector::from_vec(vec![0.1, 0.125, 1.0 / 15.0, 13967f64.sqrt() / 120.0]),
    ];
    lines(&vectors).expect("unit vectors in a common space")
}

/// Friedrichs matrix of [`four_lines`].
pub fn four_lines_matrix() -> FriedrichsMatrix {
    from_constellation(&four_lines(), DEFAULT_TOL).expect("valid constellation")
}

/// Parameters of the even-size family where greedy is nearly as bad as
/// `r_G = sqrt(r_*)` allows. `N = 2n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub n: usize,
    pub c: f64,
    pub delta: f64,
    pub epsilon: Option<f64>,
}

impl FamilyParams {
    pub fn new(n: usize, c: f64, delta: f64) -> Result<Self> {
        let p = FamilyParams { n, c, delta, epsilon: None };
        p.validate()?;
        Ok(p)
    }

    /// `delta = c^(2/(n-1))`, which makes `c^2 = delta^(n-1)`.
    pub fn balanced(n: usize, c: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams(format!("family needs n >= 2, got {n}")));
        }
        Self::new(n, c, c.powf(2.0 / (n - 1) as f64))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParams(format!("family needs n >= 2, got {}", self.n)));
        }
        // delta may exceed c: the balanced choice delta = c^(2/(n-1)) does for n >= 4.
        if !(0.0 < self.c && self.c < 1.0 && 0.0 < self.delta && self.delta < 1.0) {
            return Err(Error::InvalidParams(format!(
                "need c and delta in (0, 1), got c = {}, delta = {}",
                self.c, self.delta
            )));
        }
        if let Some(e) = self.epsilon {
            if !(0.0 < e && e < 1.0) {
                return Err(Error::InvalidParams(format!("epsilon must lie in (0, 1), got {e}")));
            }
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        2 * self.n
    }
}

/// The `2n x 2n` family matrix: `c` between cycle neighbours (`k = l ± 1`
/// mod N), `c * delta` between even indices two apart (`k = l ± 2` mod N),
/// and 1 everywhere else off the diagonal.
pub fn greedy_trap_family(p: &FamilyParams) -> Result<FriedrichsMatrix> {
    p.validate()?;
    let big_n = p.size();
    FriedrichsMatrix::from_fn(big_n, |k, l| {
        // 1-based labels for the parity test.
        let (a, b) = (k + 1, l + 1);
        let gap = (b - a) % big_n;
        if gap == 1 || gap == big_n - 1 {
            p.c
        } else if (gap == 2 || gap == big_n - 2) && a % 2 == 0 && b % 2 == 0 {
            p.c * p.delta
        } else {
            1.0
        }
    })
}

/// Predicted rates for a family instance. These are checked against the
/// exact search, never assumed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FamilyExpectation {
    pub r_star_expected: f64,
    pub r_greedy_lower: f64,
    pub ratio_lower: f64,
    /// Whether `c^2 <= delta^(n-1)` holds, which is what makes
    /// `r_star_expected` the true optimum.
    pub r_star_guaranteed: bool,
}

pub fn family_expected(p: &FamilyParams) -> Result<FamilyExpectation> {
    p.validate()?;
    let n = p.n as i32;
    let dpow = p.delta.powi(n - 1);
    let c2 = p.c * p.c;
    Ok(FamilyExpectation {
        r_star_expected: p.c.powi(2 * n),
        r_greedy_lower: c2 * (p.c * p.delta).powi(n - 1),
        ratio_lower: p.c * dpow,
        // Relative slack so the boundary case c^2 = delta^(n-1) survives rounding.
        r_star_guaranteed: c2 <= dpow * (1.0 + 1e-12),
    })
}

/// Seeded symmetric matrix with off-diagonal entries uniform in `[lo, hi]`.
/// With `distinct`, collisions are resampled until all `n(n-1)/2` values
/// differ.
pub fn random_matrix(n: usize, seed: u64, lo: f64, hi: f64, distinct: bool) -> Result<FriedrichsMatrix> {
    if n < 2 {
        return Err(Error::InvalidParams(format!("n must be >= 2, got {n}")));
    }
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(Error::InvalidParams(format!("need 0 <= lo < hi <= 1, got [{lo}, {hi}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen: Vec<f64> = Vec::new();
    FriedrichsMatrix::from_fn(n, |_, _| loop {
        let v = rng.random_range(lo..=hi);
        if !distinct || !seen.contains(&v) {
            seen.push(v);
            break v;
        }
    })
}

/// Seeded random unit vector, uniform on the sphere.
pub fn random_unit_vector(rng: &mut impl Rng, dim: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..=1.0));
        let norm = v.norm();
        if norm > 1e-3 && norm <= 1.0 {
            return v / norm;
        }
    }
}

/// `n` seeded random lines in `R^dim`.
pub fn random_lines(n: usize, dim: usize, seed: u64) -> Result<Constellation> {
    if n < 2 || dim < 2 {
        return Err(Error::InvalidParams(format!("need n >= 2 and dim >= 2, got n = {n}, dim = {dim}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vs: Vec<DVector<f64>> = (0..n).map(|_| random_unit_vector(&mut rng, dim)).collect();
    lines(&vs)
}
