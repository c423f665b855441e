//! Cycle rates of subspace orderings.
//!
//! An ordering is a permutation `sigma` of the subspaces; its rate is the
//! product of the Friedrichs numbers along the closed cycle
//! `sigma(1) -> sigma(2) -> ... -> sigma(N) -> sigma(1)`. This module holds
//! the greedy ordering heuristic with full tie branching, an exact
//! Held-Karp minimizer, a brute-force oracle, the additive-to-multiplicative
//! TSP transform, a 2-opt baseline and the greedy-vs-optimal report.
//!
//! Permutations are stored 0-based; [`Permutation::one_based`] gives the
//! 1-based form used in files and on the command line.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmatrix::FriedrichsMatrix;

/// Default limit on the number of partial greedy paths explored.
pub const DEFAULT_BRANCH_BUDGET: usize = 1_000_000;
/// Default size limit for the exact Held-Karp search.
pub const DEFAULT_OPTIMAL_CAP: usize = 20;
/// Size limit for exhaustive enumeration.
pub const BRUTE_FORCE_CAP: usize = 10;
/// Relative slack allowed when checking `r_* <= r_G` and `r_G^2 <= r_*`.
pub const BOUND_SLACK: f64 = 1e-12;

// Log-domain costs within this relative distance of the optimum count as
// ties for canonical (lexicographic) tie-breaking.
const TIE_REL: f64 = 1e-13;

/// A permutation of `{0, .., n-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(zero_based: Vec<usize>) -> Result<Self> {
        let n = zero_based.len();
        let mut seen = vec![false; n];
        for &v in &zero_based {
            if v >= n || seen[v] {
                return Err(Error::NotPermutation {
                    n,
                    detail: format!("{:?}", zero_based.iter().map(|x| x + 1).collect::<Vec<_>>()),
                });
            }
            seen[v] = true;
        }
        if n == 0 {
            return Err(Error::NotPermutation { n, detail: "empty".into() });
        }
        Ok(Permutation(zero_based))
    }

    pub fn from_one_based(values: &[usize]) -> Result<Self> {
        if values.contains(&0) {
            return Err(Error::NotPermutation {
                n: values.len(),
                detail: format!("{values:?} contains 0"),
            });
        }
        Self::new(values.iter().map(|v| v - 1).collect())
    }

    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|v| v + 1).collect()
    }

    /// The same cycle traversed backwards from the same start.
    pub fn reversed(&self) -> Self {
        let mut v = Vec::with_capacity(self.len());
        v.push(self.0[0]);
        v.extend(self.0[1..].iter().rev());
        Permutation(v)
    }

    /// The same cycle started `k` positions later.
    pub fn rotated(&self, k: usize) -> Self {
        let mut v = self.0.clone();
        v.rotate_left(k % self.len());
        Permutation(v)
    }

    /// Representative of the undirected cycle with `sigma(1) = 1` and
    /// `sigma(2) < sigma(N)`.
    pub fn canonical(&self) -> Self {
        let pos = self.0.iter().position(|&v| v == 0).unwrap_or(0);
        let p = self.rotated(pos);
        if p.len() > 2 && p.0[1] > p.0[p.len() - 1] {
            p.reversed()
        } else {
            p
        }
    }

    /// Successor of `v` along the cycle.
    pub fn successor(&self, v: usize) -> usize {
        let i = self.0.iter().position(|&x| x == v).expect("vertex in permutation");
        self.0[(i + 1) % self.len()]
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.one_based().iter().map(ToString::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl Serialize for Permutation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        Permutation::from_one_based(&v).map_err(serde::de::Error::custom)
    }
}

/// A permutation together with its cycle rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleOrdering {
    pub sigma: Permutation,
    pub rate: f64,
}

impl CycleOrdering {
    pub fn new(c: &FriedrichsMatrix, sigma: Permutation) -> Result<Self> {
        let rate = cycle_rate(c, &sigma)?;
        Ok(CycleOrdering { sigma, rate })
    }
}

fn check_len(c: &FriedrichsMatrix, sigma: &Permutation) -> Result<()> {
    if sigma.len() != c.n() {
        return Err(Error::NotPermutation {
            n: c.n(),
            detail: format!("{sigma} has length {}", sigma.len()),
        });
    }
    Ok(())
}

#[inline]
fn ln_entry(c: &FriedrichsMatrix, a: usize, b: usize) -> f64 {
    let v = c.get(a, b);
    if v == 0.0 {
        f64::NEG_INFINITY
    } else {
        v.ln()
    }
}

#[inline]
fn add_log(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        a + b
    }
}

fn tie_slack(opt: f64) -> f64 {
    if opt.is_finite() {
        TIE_REL * opt.abs().max(1.0)
    } else {
        0.0
    }
}

/// Natural log of the cycle rate, `-inf` when some factor is zero. Factors
/// are summed in sorted order, so the value is bit-identical under rotation
/// and reversal of the cycle.
pub(crate) fn log_rate_of(c: &FriedrichsMatrix, order: &[usize]) -> f64 {
    let n = order.len();
    let mut factors: Vec<f64> = (0..n).map(|k| c.get(order[k], order[(k + 1) % n])).collect();
    if factors.contains(&0.0) {
        return f64::NEG_INFINITY;
    }
    factors.sort_by(f64::total_cmp);
    factors.iter().map(|v| v.ln()).sum()
}

fn rate_of(c: &FriedrichsMatrix, order: &[usize]) -> f64 {
    let l = log_rate_of(c, order);
    if l == f64::NEG_INFINITY {
        0.0
    } else {
        l.exp()
    }
}

/// Product of `c[sigma(k)][sigma(k+1)]` over the closed cycle.
pub fn cycle_rate(c: &FriedrichsMatrix, sigma: &Permutation) -> Result<f64> {
    check_len(c, sigma)?;
    Ok(rate_of(c, sigma.as_slice()))
}

/// Log of [`cycle_rate`]; `-inf` for a zero rate.
pub fn cycle_log_rate(c: &FriedrichsMatrix, sigma: &Permutation) -> Result<f64> {
    check_len(c, sigma)?;
    Ok(log_rate_of(c, sigma.as_slice()))
}

#[derive(Clone, Copy, Debug)]
pub struct GreedyOptions {
    pub branch_budget: usize,
}

impl Default for GreedyOptions {
    fn default() -> Self {
        GreedyOptions { branch_budget: DEFAULT_BRANCH_BUDGET }
    }
}

/// Result of the greedy ordering search.
#[derive(Clone, Debug, Serialize)]
pub struct GreedyResult {
    /// `sigma_G`, not canonicalized: it begins at its winning start vertex.
    pub ordering: CycleOrdering,
    /// The best greedy permutation from each start, in start order.
    pub per_start: Vec<CycleOrdering>,
    /// Number of candidate entries examined.
    pub steps: u64,
    /// Number of partial paths created while branching on ties.
    pub partial_paths: usize,
}

/// The greedy ordering algorithm.
///
/// From every start vertex the path is extended by an unused vertex whose
/// entry from the current endpoint is minimal. Exact ties branch into every
/// candidate. Among the completed permutations from one start the one with
/// least rate wins, ties going to the lexicographically first; overall the
/// smallest start attaining the minimal rate wins.
pub fn greedy(c: &FriedrichsMatrix) -> Result<GreedyResult> {
    greedy_with(c, GreedyOptions::default())
}

pub fn greedy_with(c: &FriedrichsMatrix, opts: GreedyOptions) -> Result<GreedyResult> {
    let n = c.n();
    let mut steps = 0u64;
    let mut partial_paths = 0usize;
    let mut per_start = Vec::with_capacity(n);
    let mut best_logs = Vec::with_capacity(n);

    for start in 0..n {
        let mut best: Option<(f64, Vec<usize>)> = None;
        let mut used = vec![false; n];
        used[start] = true;
        let mut path = vec![start];
        partial_paths += 1;
        greedy_branch(
            c,
            &mut path,
            &mut used,
            &mut best,
            &mut steps,
            &mut partial_paths,
            opts.branch_budget,
        )?;
        let (log, order) = best.expect("every start completes at least one path");
        let sigma = Permutation(order);
        per_start.push(CycleOrdering { rate: rate_of(c, sigma.as_slice()), sigma });
        best_logs.push(log);
    }

    let mut winner = 0;
    for k in 1..n {
        if best_logs[k] < best_logs[winner] {
            winner = k;
        }
    }
    Ok(GreedyResult {
        ordering: per_start[winner].clone(),
        per_start,
        steps,
        partial_paths,
    })
}

// Candidates are explored in ascending order, so completed permutations
// arrive in lexicographic order and a strict `<` keeps the first minimizer.
fn greedy_branch(
    c: &FriedrichsMatrix,
    path: &mut Vec<usize>,
    used: &mut [bool],
    best: &mut Option<(f64, Vec<usize>)>,
    steps: &mut u64,
    partial_paths: &mut usize,
    budget: usize,
) -> Result<()> {
    let n = used.len();
    if path.len() == n {
        let log = log_rate_of(c, path);
        if best.as_ref().is_none_or(|(b, _)| log < *b) {
            *best = Some((log, path.clone()));
        }
        return Ok(());
    }
    let last = *path.last().expect("nonempty path");
    let mut min = f64::INFINITY;
    for l in (0..n).filter(|&l| !used[l]) {
        *steps += 1;
        min = min.min(c.get(last, l));
    }
    let candidates: Vec<usize> = (0..n).filter(|&l| !used[l] && c.get(last, l) == min).collect();
    if candidates.len() > 1 {
        *partial_paths += candidates.len() - 1;
        if *partial_paths > budget {
            return Err(Error::BranchBudgetExceeded { budget });
        }
    }
    for l in candidates {
        used[l] = true;
        path.push(l);
        greedy_branch(c, path, used, best, steps, partial_paths, budget)?;
        path.pop();
        used[l] = false;
    }
    Ok(())
}

/// True iff every step of `sigma` (as a path from `sigma(1)`) picks an entry
/// equal to the minimum over the vertices not yet visited.
pub fn is_greedy_path(c: &FriedrichsMatrix, sigma: &Permutation) -> Result<bool> {
    check_len(c, sigma)?;
    let order = sigma.as_slice();
    let n = order.len();
    let mut used = vec![false; n];
    used[order[0]] = true;
    for j in 1..n {
        let last = order[j - 1];
        let min = (0..n)
            .filter(|&l| !used[l])
            .map(|l| c.get(last, l))
            .fold(f64::INFINITY, f64::min);
        if c.get(last, order[j]) != min {
            return Ok(false);
        }
        used[order[j]] = true;
    }
    Ok(true)
}

/// Exact minimum-rate cycle by Held-Karp with the default size cap.
pub fn optimal(c: &FriedrichsMatrix) -> Result<CycleOrdering> {
    optimal_with_cap(c, DEFAULT_OPTIMAL_CAP)
}

/// Exact minimum-rate cycle by Held-Karp over vertex subsets in the log
/// domain. Zero entries carry cost `-inf` and absorb every sum, so a cycle
/// through a zero edge always wins. The result is the lexicographically
/// first canonical cycle (`sigma(1) = 1`, `sigma(2) < sigma(N)`) among the
/// minimizers.
pub fn optimal_with_cap(c: &FriedrichsMatrix, cap: usize) -> Result<CycleOrdering> {
    let n = c.n();
    if n > cap {
        return Err(Error::TooLarge { n, cap });
    }
    if n <= 3 {
        return CycleOrdering::new(c, Permutation::identity(n));
    }
    // Vertex 0 is the fixed start; vertices 1..n map to bits 0..m.
    let m = n - 1;
    let full = (1usize << m) - 1;
    let w: Vec<f64> = (0..n * n)
        .map(|i| {
            let (a, b) = (i / n, i % n);
            if a == b {
                0.0
            } else {
                ln_entry(c, a, b)
            }
        })
        .collect();
    let wt = |a: usize, b: usize| w[a * n + b];

    // cost[s * m + (v - 1)]: cheapest path from v through every vertex of s,
    // finishing with the closing edge back to 0. Only meaningful for v not in s.
    let mut cost = vec![f64::INFINITY; (full + 1) * m];
    for v in 1..n {
        cost[v - 1] = wt(v, 0);
    }
    for s in 1..=full {
        for v in 1..n {
            if s & (1 << (v - 1)) != 0 {
                continue;
            }
            let mut best = f64::INFINITY;
            let mut rest = s;
            while rest != 0 {
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let u = bit + 1;
                let cand = add_log(wt(v, u), cost[(s & !(1 << bit)) * m + bit]);
                if cand < best {
                    best = cand;
                }
            }
            cost[s * m + (v - 1)] = best;
        }
    }

    let completion = |cur: usize, remaining: usize, u: usize| {
        add_log(wt(cur, u), cost[(remaining & !(1 << (u - 1))) * m + (u - 1)])
    };
    let opt = (1..n)
        .map(|u| completion(0, full, u))
        .fold(f64::INFINITY, f64::min);
    let limit = opt + tie_slack(opt);

    let mut order = vec![0usize];
    let mut remaining = full;
    let mut prefix = 0.0f64;
    let mut cur = 0usize;
    while remaining != 0 {
        let u = (1..n)
            .filter(|&u| remaining & (1 << (u - 1)) != 0)
            .find(|&u| add_log(prefix, completion(cur, remaining, u)) <= limit)
            .expect("some vertex continues an optimal cycle");
        prefix = add_log(prefix, wt(cur, u));
        remaining &= !(1 << (u - 1));
        order.push(u);
        cur = u;
    }
    let sigma = Permutation(order).canonical();
    CycleOrdering::new(c, sigma)
}

/// Exhaustive minimizer over all `(N-1)!/2` undirected cycles, with the
/// same canonical tie-break as [`optimal`]. Intended as a test oracle.
pub fn optimal_bruteforce(c: &FriedrichsMatrix) -> Result<CycleOrdering> {
    let n = c.n();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::TooLarge { n, cap: BRUTE_FORCE_CAP });
    }
    let mut all = Vec::new();
    for_each_canonical_cycle(n, |order| all.push((log_rate_of(c, order), order.to_vec())));
    let opt = all.iter().map(|(l, _)| *l).fold(f64::INFINITY, f64::min);
    let limit = opt + tie_slack(opt);
    let (_, order) = all
        .into_iter()
        .find(|(l, _)| *l <= limit)
        .expect("at least one cycle");
    CycleOrdering::new(c, Permutation(order))
}

/// Calls `f` on every canonical cycle (`sigma(1) = 0`, `sigma(2) < sigma(N)`)
/// of `{0, .., n-1}`, in lexicographic order.
pub fn for_each_canonical_cycle(n: usize, mut f: impl FnMut(&[usize])) {
    fn rec(order: &mut Vec<usize>, used: &mut [bool], f: &mut dyn FnMut(&[usize])) {
        let n = used.len();
        if order.len() == n {
            if n <= 2 || order[1] < order[n - 1] {
                f(order);
            }
            return;
        }
        for v in 1..n {
            if !used[v] {
                used[v] = true;
                order.push(v);
                rec(order, used, f);
                order.pop();
                used[v] = false;
            }
        }
    }
    if n == 0 {
        return;
    }
    let mut used = vec![false; n];
    used[0] = true;
    let mut order = vec![0];
    rec(&mut order, &mut used, &mut f);
}

/// False iff some off-diagonal entry is 0 or every off-diagonal entry is 1.
/// Exact comparisons.
pub fn is_generic(c: &FriedrichsMatrix) -> bool {
    let mut all_one = true;
    for (_, _, v) in c.upper_entries() {
        if v == 0.0 {
            return false;
        }
        all_one &= v == 1.0;
    }
    !all_one
}

/// Greedy against optimal for one matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuboptimalityReport {
    pub r_star: f64,
    pub r_greedy: f64,
    pub sigma_star: Permutation,
    pub sigma_greedy: Permutation,
    /// `r_greedy / sqrt(r_star)`; 0 when both rates vanish.
    pub ratio: f64,
    pub generic: bool,
    /// `r_star <= r_greedy`.
    pub lower_ok: bool,
    /// `r_greedy <= sqrt(r_star)`.
    pub upper_ok: bool,
    /// `r_greedy^2 < r_star`.
    pub upper_strict: bool,
}

/// Runs [`greedy`] and [`optimal`] and checks `r_* <= r_G <= sqrt(r_*)`.
/// A failed check is returned as [`Error::BoundViolation`].
pub fn report(c: &FriedrichsMatrix) -> Result<SuboptimalityReport> {
    let g = greedy(c)?;
    let opt = optimal(c)?;
    build_report(c, &g.ordering, &opt)
}

pub(crate) fn build_report(
    c: &FriedrichsMatrix,
    greedy: &CycleOrdering,
    opt: &CycleOrdering,
) -> Result<SuboptimalityReport> {
    let (r_star, r_greedy) = (opt.rate, greedy.rate);
    let ratio = if r_star == 0.0 {
        if r_greedy == 0.0 {
            0.0
        } else {
            return Err(Error::BoundViolation(format!(
                "r_* = 0 but r_G = {r_greedy:e}"
            )));
        }
    } else {
        r_greedy / r_star.sqrt()
    };
    let rep = SuboptimalityReport {
        r_star,
        r_greedy,
        sigma_star: opt.sigma.clone(),
        sigma_greedy: greedy.sigma.clone(),
        ratio,
        generic: is_generic(c),
        lower_ok: r_star <= r_greedy * (1.0 + BOUND_SLACK),
        upper_ok: r_greedy * r_greedy <= r_star * (1.0 + BOUND_SLACK),
        upper_strict: r_greedy * r_greedy < r_star,
    };
    if !rep.lower_ok {
        return Err(Error::BoundViolation(format!(
            "r_* = {r_star:e} exceeds r_G = {r_greedy:e}"
        )));
    }
    if !rep.upper_ok {
        return Err(Error::BoundViolation(format!(
            "r_G^2 = {:e} exceeds r_* = {r_star:e}",
            r_greedy * r_greedy
        )));
    }
    Ok(rep)
}

/// Additive TSP instance on a complete graph.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    weights: DMatrix<f64>,
}

impl WeightedGraph {
    /// Diagonal values are ignored.
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = weights.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if rows < 2 {
            return Err(Error::TooFew { n: rows, min: 2 });
        }
        for k in 0..rows {
            for l in 0..rows {
                if k == l {
                    continue;
                }
                let w = weights[(k, l)];
                if !w.is_finite() {
                    return Err(Error::InvalidParams(format!(
                        "non-finite weight at ({},{})",
                        k + 1,
                        l + 1
                    )));
                }
                if w != weights[(l, k)] {
                    return Err(Error::InvalidParams(format!(
                        "weights not symmetric at ({},{})",
                        k + 1,
                        l + 1
                    )));
                }
            }
        }
        Ok(WeightedGraph { weights })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::NotSquare { rows: n, cols: bad.len() });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(n, n, &flat))
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weight(&self, k: usize, l: usize) -> f64 {
        self.weights[(k, l)]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.weights.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    n: usize,
    weights: Vec<Vec<f64>>,
}

impl Serialize for WeightedGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GraphFile { n: self.n(), weights: self.rows() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for WeightedGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = GraphFile::deserialize(d)?;
        if raw.weights.len() != raw.n {
            return Err(serde::de::Error::custom(format!(
                "declared n = {} but {} rows given",
                raw.n,
                raw.weights.len()
            )));
        }
        WeightedGraph::from_rows(&raw.weights).map_err(serde::de::Error::custom)
    }
}

/// Additive tour length `sum_k w(sigma(k), sigma(k+1))`.
pub fn additive_cost(g: &WeightedGraph, sigma: &Permutation) -> Result<f64> {
    let n = g.n();
    if sigma.len() != n {
        return Err(Error::NotPermutation { n, detail: format!("{sigma}") });
    }
    let o = sigma.as_slice();
    Ok((0..n).map(|k| g.weight(o[k], o[(k + 1) % n])).sum())
}

/// Maps an additive instance to a multiplicative one with entries
/// `exp(w - w_max)` in `(0, 1]`. Every cycle's product equals
/// `exp(sum - N w_max)`, so minimizing cycles are preserved.
pub fn tsp_to_mtsp(g: &WeightedGraph) -> Result<FriedrichsMatrix> {
    let n = g.n();
    let w_max = (0..n)
        .flat_map(|k| (0..n).filter(move |&l| l != k).map(move |l| (k, l)))
        .map(|(k, l)| g.weight(k, l))
        .fold(f64::NEG_INFINITY, f64::max);
    FriedrichsMatrix::from_fn(n, |k, l| (g.weight(k, l) - w_max).exp())
}

// Accept a 2-opt move only if it lowers the log rate by more than this.
const IMPROVE_EPS: f64 = 1e-13;

/// First-improvement 2-opt on log weights, starting from `sigma`. At most
/// `max_passes` full scans are made; the scan stops early once a pass finds
/// no improving move. The returned rate never exceeds the input rate.
pub fn two_opt_refine(
    c: &FriedrichsMatrix,
    sigma: &Permutation,
    max_passes: usize,
) -> Result<CycleOrdering> {
    let input = CycleOrdering::new(c, sigma.clone())?;
    let n = c.n();
    if n < 4 || input.rate == 0.0 {
        return Ok(input);
    }
    let mut order = sigma.as_slice().to_vec();
    for _ in 0..max_passes {
        let mut improved = false;
        for i in 0..n - 2 {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = (order[i], order[i + 1]);
                let (d, e) = (order[j], order[(j + 1) % n]);
                let old = ln_entry(c, a, b) + ln_entry(c, d, e);
                let new = add_log(ln_entry(c, a, d), ln_entry(c, b, e));
                if new < old - IMPROVE_EPS {
                    order[i + 1..=j].reverse();
                    improved = true;
                    if new == f64::NEG_INFINITY {
                        return CycleOrdering::new(c, Permutation(order));
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
    let out = CycleOrdering::new(c, Permutation(order))?;
    Ok(if out.rate <= input.rate { out } else { input })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex34() -> FriedrichsMatrix {
        crate::examples::four_lines_matrix()
    }

    fn uniform(n: usize, c: f64) -> FriedrichsMatrix {
        FriedrichsMatrix::from_fn(n, |_, _| c).unwrap()
    }

    fn perm(v: &[usize]) -> Permutation {
        Permutation::from_one_based(v).unwrap()
    }

    #[test]
    fn permutation_validation() {
        assert!(Permutation::from_one_based(&[1, 2, 2]).is_err());
        assert!(Permutation::from_one_based(&[0, 1]).is_err());
        assert!(Permutation::from_one_based(&[1, 4]).is_err());
        assert!(Permutation::new(vec![]).is_err());
        assert_eq!(perm(&[3, 1, 2]).to_string(), "(3,1,2)");
        assert_eq!(perm(&[3, 4, 1, 2]).canonical(), perm(&[1, 2, 3, 4]));
        assert_eq!(perm(&[1, 4, 3, 2]).canonical(), perm(&[1, 2, 3, 4]));
        assert_eq!(perm(&[1, 4, 3, 2]).successor(1), 0);
    }

    #[test]
    fn cycle_rate_examples() {
        let c = ex34();
        let rg = cycle_rate(&c, &perm(&[1, 4, 3, 2])).unwrap();
        assert!((rg - 7.5772e-4).abs() < 5e-8, "{rg}");
        let rs = cycle_rate(&c, &perm(&[1, 4, 2, 3])).unwrap();
        assert!((rs - 5.1033e-4).abs() < 5e-8, "{rs}");
        let u = uniform(5, 0.3);
        assert!((cycle_rate(&u, &perm(&[2, 5, 1, 3, 4])).unwrap() - 0.3f64.powi(5)).abs() < 1e-16);
        assert!(cycle_rate(&u, &perm(&[1, 2, 3])).is_err());
    }

    #[test]
    fn cycle_rate_zero_short_circuits() {
        let c = FriedrichsMatrix::from_fn(3, |k, l| if (k, l) == (0, 1) { 0.0 } else { 0.5 }).unwrap();
        assert_eq!(cycle_rate(&c, &Permutation::identity(3)).unwrap(), 0.0);
        assert_eq!(cycle_log_rate(&c, &Permutation::identity(3)).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn greedy_four_lines() {
        let g = greedy(&ex34()).unwrap();
        assert_eq!(g.ordering.sigma, perm(&[1, 4, 3, 2]));
        assert_eq!(g.per_start.len(), 4);
        for p in &g.per_start {
            assert!(is_greedy_path(&ex34(), &p.sigma).unwrap());
        }
    }

    #[test]
    fn greedy_two_subspaces() {
        let c = uniform(2, 0.7);
        let g = greedy(&c).unwrap();
        assert_eq!(g.ordering.sigma, perm(&[1, 2]));
        assert_eq!(g.ordering.rate, cycle_rate(&c, &perm(&[1, 2])).unwrap());
        assert!((g.ordering.rate - 0.49).abs() < 1e-15);
    }

    #[test]
    fn greedy_branches_on_ties() {
        // All ties: every permutation is a greedy path.
        let g = greedy(&uniform(5, 0.5)).unwrap();
        assert_eq!(g.ordering.sigma, Permutation::identity(5));
        assert_eq!(g.partial_paths, 5 * 24);
        let err = greedy_with(&uniform(6, 0.5), GreedyOptions { branch_budget: 100 });
        assert!(matches!(err, Err(Error::BranchBudgetExceeded { budget: 100 })));
    }

    #[test]
    fn greedy_tie_picks_least_rate_then_lexicographic() {
        // From vertex 1 the entries to 2 and 3 tie; only one continuation is cheap.
        let c = FriedrichsMatrix::from_rows(&[
            vec![0.0, 0.1, 0.1, 0.9],
            vec![0.1, 0.0, 0.5, 0.2],
            vec![0.1, 0.5, 0.0, 0.8],
            vec![0.9, 0.2, 0.8, 0.0],
        ])
        .unwrap();
        let g = greedy(&c).unwrap();
        // Start 1: (1,2,4,3) rate .1*.2*.8*.1 vs (1,3,2,4) rate .1*.5*.2*.9.
        assert_eq!(g.per_start[0].sigma, perm(&[1, 2, 4, 3]));
    }

    #[test]
    fn optimal_four_lines() {
        let o = optimal(&ex34()).unwrap();
        assert_eq!(o.sigma, perm(&[1, 3, 2, 4]));
        assert_eq!(o.sigma.canonical(), perm(&[1, 4, 2, 3]).canonical());
        assert_eq!(optimal_bruteforce(&ex34()).unwrap(), o);
    }

    #[test]
    fn optimal_uniform_and_caps() {
        let u = uniform(6, 0.4);
        let o = optimal(&u).unwrap();
        assert_eq!(o.sigma, Permutation::identity(6));
        assert!((o.rate - 0.4f64.powi(6)).abs() < 1e-16);
        let b = optimal_bruteforce(&uniform(4, 0.4)).unwrap();
        assert!((b.rate - 0.4f64.powi(4)).abs() < 1e-16);
        assert!(matches!(optimal_bruteforce(&uniform(11, 0.4)), Err(Error::TooLarge { .. })));
        assert!(matches!(optimal_with_cap(&uniform(6, 0.4), 5), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn optimal_with_zero_entry() {
        let c = FriedrichsMatrix::from_fn(5, |k, l| if (k, l) == (2, 4) { 0.0 } else { 0.1 + 0.1 * (k + l) as f64 }).unwrap();
        let o = optimal(&c).unwrap();
        assert_eq!(o.rate, 0.0);
        assert_eq!(o, optimal_bruteforce(&c).unwrap());
        // First canonical cycle through the edge {3,5}.
        assert_eq!(o.sigma, perm(&[1, 2, 3, 5, 4]));
    }

    #[test]
    fn canonical_enumeration_counts() {
        for (n, want) in [(2, 1), (3, 1), (4, 3), (5, 12), (6, 60)] {
            let mut count = 0;
            for_each_canonical_cycle(n, |_| count += 1);
            assert_eq!(count, want);
        }
    }

    #[test]
    fn genericity() {
        assert!(is_generic(&ex34()));
        assert!(!is_generic(&uniform(4, 1.0)));
        let z = FriedrichsMatrix::from_fn(4, |k, l| if k + l == 3 { 0.0 } else { 0.5 }).unwrap();
        assert!(!is_generic(&z));
    }

    #[test]
    fn report_four_lines() {
        let r = report(&ex34()).unwrap();
        assert!((r.ratio - 7.5772e-4 / 5.1033e-4f64.sqrt()).abs() < 1e-4);
        assert!((r.ratio - 0.0335).abs() < 1e-4);
        assert!(r.generic && r.upper_strict && r.lower_ok && r.upper_ok);
    }

    #[test]
    fn report_degenerate_cases() {
        let r = report(&uniform(5, 1.0)).unwrap();
        assert_eq!((r.r_star, r.r_greedy), (1.0, 1.0));
        assert!(!r.generic && !r.upper_strict && r.upper_ok);

        let z = FriedrichsMatrix::from_fn(4, |k, l| if (k, l) == (1, 3) { 0.0 } else { 0.6 }).unwrap();
        let r = report(&z).unwrap();
        assert_eq!((r.r_star, r.r_greedy, r.ratio), (0.0, 0.0, 0.0));
        assert!(!r.generic);
    }

    #[test]
    fn report_rejects_impossible_rates() {
        let c = uniform(3, 0.5);
        let g = CycleOrdering { sigma: Permutation::identity(3), rate: 0.1 };
        let o = CycleOrdering { sigma: Permutation::identity(3), rate: 0.0 };
        assert!(matches!(build_report(&c, &g, &o), Err(Error::BoundViolation(_))));
        let o = CycleOrdering { sigma: Permutation::identity(3), rate: 0.2 };
        assert!(matches!(build_report(&c, &g, &o), Err(Error::BoundViolation(_))));
    }

    #[test]
    fn tsp_transform_examples() {
        let g = WeightedGraph::from_rows(&vec![vec![3.0; 4]; 4]).unwrap();
        let c = tsp_to_mtsp(&g).unwrap();
        assert!(c.upper_entries().all(|(_, _, v)| v == 1.0));

        let g = WeightedGraph::from_rows(&[
            vec![0.0, 1.0, 5.0],
            vec![1.0, 0.0, 2.0],
            vec![5.0, 2.0, 0.0],
        ])
        .unwrap();
        let c = tsp_to_mtsp(&g).unwrap();
        assert_eq!(c.get(0, 2), 1.0);
        assert!((c.get(0, 1) - (-4.0f64).exp()).abs() < 1e-16);

        assert!(WeightedGraph::from_rows(&[vec![0.0, f64::NAN], vec![f64::NAN, 0.0]]).is_err());
        assert!(WeightedGraph::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(WeightedGraph::from_rows(&[vec![0.0]]).is_err());
    }

    #[test]
    fn two_opt_examples() {
        let c = ex34();
        let star = optimal(&c).unwrap();
        assert_eq!(two_opt_refine(&c, &star.sigma, 10).unwrap(), star);

        let r = two_opt_refine(&c, &perm(&[1, 4, 3, 2]), 10).unwrap();
        assert!(r.rate <= 7.5772e-4);
        assert_eq!(r.sigma.canonical(), perm(&[1, 4, 2, 3]).canonical());

        let u = uniform(6, 0.5);
        let sigma = perm(&[3, 1, 6, 2, 5, 4]);
        let r = two_opt_refine(&u, &sigma, 10).unwrap();
        assert_eq!(r.sigma, sigma);
    }

    #[test]
    fn greedy_step_count_is_cubic_on_distinct_entries() {
        let c = crate::examples::random_matrix(12, 3, 0.05, 0.95, true).unwrap();
        let g = greedy(&c).unwrap();
        assert_eq!(g.partial_paths, 12);
        assert!(g.steps <= 4 * 12u64.pow(3));
    }
}
