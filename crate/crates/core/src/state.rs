//! Product state spaces, distributions and transition matrices.
//!
//! Flat indices are mixed-radix with coordinate 1 (index 0 in the API) as the
//! most significant digit, which is also the ordering produced by the
//! Kronecker product. Every module and every file format relies on this.

use std::collections::VecDeque;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Row sums and total masses must be within this of 1.
pub const STOCHASTIC_TOL: f64 = 1e-12;
/// Maximum `||pi P - pi||_1` for a pair to count as stationary.
pub const STATIONARY_TOL: f64 = 1e-10;
/// Deviations below this are treated as float noise and renormalized away.
pub const NORMALIZE_TOL: f64 = 1e-9;
/// Detailed-balance tolerance for operations that require reversibility.
pub const REVERSIBLE_TOL: f64 = 1e-9;

// Negative entries this small are rounding debris and are clamped to zero.
const NEG_FLOOR: f64 = -1e-15;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProductStateSpace {
    factor_sizes: Vec<usize>,
    total: usize,
}

impl ProductStateSpace {
    pub fn new(factor_sizes: Vec<usize>) -> Result<Self> {
        if factor_sizes.is_empty() {
            return Err(Error::arg("a state space needs at least one factor"));
        }
        if let Some(i) = factor_sizes.iter().position(|&n| n == 0) {
            return Err(Error::arg(format!("factor {} has size 0", i + 1)));
        }
        let total = factor_sizes
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .ok_or_else(|| Error::SizeGuard("state space size overflows usize".into()))?;
        Ok(Self { factor_sizes, total })
    }

    /// A single unstructured factor of `n` states.
    pub fn single(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    /// The hypercube `{0,1}^n` as `n` binary factors.
    pub fn binary(n: usize) -> Result<Self> {
        Self::new(vec![2; n])
    }

    pub fn d(&self) -> usize {
        self.factor_sizes.len()
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn factor_sizes(&self) -> &[usize] {
        &self.factor_sizes
    }

    pub fn index(&self, x: &[usize]) -> usize {
        assert_eq!(x.len(), self.d(), "multi-index has wrong length");
        x.iter().zip(&self.factor_sizes).fold(0, |k, (&xi, &n)| {
            debug_assert!(xi < n);
            k * n + xi
        })
    }

    pub fn unindex(&self, k: usize) -> Vec<usize> {
        let mut out = vec![0; self.d()];
        self.unindex_into(k, &mut out);
        out
    }

    pub fn unindex_into(&self, mut k: usize, out: &mut [usize]) {
        debug_assert!(k < self.total);
        for (slot, &n) in out.iter_mut().zip(&self.factor_sizes).rev() {
            *slot = k % n;
            k /= n;
        }
    }

    /// The space over the coordinates in `s`, in increasing coordinate order.
    pub fn subspace(&self, s: &CoordinateSubset) -> ProductStateSpace {
        assert_eq!(s.d(), self.d());
        let sizes = s.iter().map(|i| self.factor_sizes[i]).collect::<Vec<_>>();
        if sizes.is_empty() {
            // the empty product is a one-point space
            return ProductStateSpace { factor_sizes: vec![1], total: 1 };
        }
        ProductStateSpace::new(sizes).expect("subspace of a valid space")
    }

    /// Concatenate spaces; the result has the first space's coordinates first.
    pub fn concat(spaces: &[&ProductStateSpace]) -> Result<Self> {
        let sizes = spaces
            .iter()
            .flat_map(|s| s.factor_sizes.iter().copied())
            .collect();
        Self::new(sizes)
    }

    /// For each flat state, the flat index of its restriction to `s`.
    pub fn projector(&self, s: &CoordinateSubset) -> Vec<usize> {
        let sub = self.subspace(s);
        let mut x = vec![0; self.d()];
        let mut xs = vec![0; s.len()];
        (0..self.total)
            .map(|k| {
                self.unindex_into(k, &mut x);
                if s.is_empty() {
                    return 0;
                }
                for (slot, i) in xs.iter_mut().zip(s.iter()) {
                    *slot = x[i];
                }
                sub.index(&xs)
            })
            .collect()
    }
}

impl Serialize for ProductStateSpace {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.factor_sizes.serialize(s)
    }
}

/// A set of coordinates. Members are 0-based; display and JSON are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoordinateSubset {
    d: usize,
    members: Vec<usize>,
}

impl CoordinateSubset {
    pub fn new(d: usize, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut members: Vec<usize> = members.into_iter().collect();
        if let Some(&bad) = members.iter().find(|&&i| i >= d) {
            return Err(Error::arg(format!(
                "coordinate {} out of range 1..={d}",
                bad + 1
            )));
        }
        members.sort_unstable();
        members.dedup();
        Ok(Self { d, members })
    }

    pub fn full(d: usize) -> Self {
        Self { d, members: (0..d).collect() }
    }

    pub fn empty(d: usize) -> Self {
        Self { d, members: Vec::new() }
    }

    pub fn singleton(d: usize, i: usize) -> Result<Self> {
        Self::new(d, [i])
    }

    /// Parse a 1-based list like `"1,3"`.
    pub fn parse_one_based(d: usize, text: &str) -> Result<Self> {
        let mut members = Vec::new();
        for tok in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let v: usize = tok
                .parse()
                .map_err(|_| Error::arg(format!("bad coordinate '{tok}'")))?;
            if v == 0 {
                return Err(Error::arg("coordinates are 1-based"));
            }
            members.push(v - 1);
        }
        Self::new(d, members)
    }

    pub fn from_mask(d: usize, mask: u64) -> Self {
        Self { d, members: (0..d).filter(|i| mask >> i & 1 == 1).collect() }
    }

    pub fn mask(&self) -> u64 {
        self.members.iter().fold(0, |m, &i| m | 1 << i)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.members.len() == self.d
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    pub fn complement(&self) -> Self {
        Self { d: self.d, members: (0..self.d).filter(|&i| !self.contains(i)).collect() }
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.iter().all(|i| other.contains(i))
    }

    pub fn with(&self, i: usize) -> Self {
        Self::new(self.d, self.iter().chain([i])).expect("member in range")
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.iter().map(|i| i + 1).collect()
    }
}

impl fmt::Display for CoordinateSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.one_based().iter().map(ToString::to_string).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

impl Serialize for CoordinateSubset {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(s)
    }
}

fn clean_entry(v: f64, what: &str) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::domain(format!("{what} contains a non-finite entry")));
    }
    if v < 0.0 {
        if v >= NEG_FLOOR {
            return Ok(0.0);
        }
        return Err(Error::domain(format!("{what} has a negative entry {v}")));
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    space: ProductStateSpace,
    mass: Vec<f64>,
}

impl Distribution {
    pub fn new(space: ProductStateSpace, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != space.total() {
            return Err(Error::shape(format!(
                "distribution has {} entries, state space has {}",
                mass.len(),
                space.total()
            )));
        }
        let mut mass = mass
            .into_iter()
            .map(|v| clean_entry(v, "distribution"))
            .collect::<Result<Vec<_>>>()?;
        let sum: f64 = mass.iter().sum();
        if (sum - 1.0).abs() > NORMALIZE_TOL {
            return Err(Error::domain(format!("distribution sums to {sum}, not 1")));
        }
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            mass.iter_mut().for_each(|v| *v /= sum);
        }
        Ok(Self { space, mass })
    }

    /// Normalize arbitrary non-negative weights.
    pub fn from_weights(space: ProductStateSpace, weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(Error::domain("weights must have a positive finite sum"));
        }
        Self::new(space, weights.into_iter().map(|w| w / sum).collect())
    }

    pub fn uniform(space: ProductStateSpace) -> Self {
        let n = space.total();
        Self { space, mass: vec![1.0 / n as f64; n] }
    }

    pub fn point(space: ProductStateSpace, k: usize) -> Result<Self> {
        if k >= space.total() {
            return Err(Error::arg(format!("state {k} out of range")));
        }
        let mut mass = vec![0.0; space.total()];
        mass[k] = 1.0;
        Ok(Self { space, mass })
    }

    pub fn space(&self) -> &ProductStateSpace {
        &self.space
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn get(&self, k: usize) -> f64 {
        self.mass[k]
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn min_mass(&self) -> f64 {
        self.mass.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_positive(&self) -> bool {
        self.min_mass() > 0.0
    }

    pub(crate) fn require_positive(&self) -> Result<()> {
        match self.mass.iter().position(|&v| v <= 0.0) {
            Some(k) => Err(Error::domain(format!(
                "pi must be positive, but pi({k}) = {}",
                self.mass[k]
            ))),
            None => Ok(()),
        }
    }

    /// Re-tag with another space of the same total size.
    pub fn with_space(self, space: ProductStateSpace) -> Result<Self> {
        if space.total() != self.space.total() {
            return Err(Error::shape("cannot re-tag a distribution with a different size"));
        }
        Ok(Self { space, mass: self.mass })
    }

    /// The law of `x^(S)` under this distribution.
    pub fn marginal(&self, s: &CoordinateSubset) -> Distribution {
        let sub = self.space.subspace(s);
        let proj = self.space.projector(s);
        let mut mass = vec![0.0; sub.total()];
        for (k, &v) in self.mass.iter().enumerate() {
            mass[proj[k]] += v;
        }
        Distribution { space: sub, mass }
    }

    /// Product measure, first argument most significant.
    pub fn product(parts: &[Distribution]) -> Result<Distribution> {
        let first = parts
            .first()
            .ok_or_else(|| Error::arg("product of an empty list of distributions"))?;
        let mut mass = first.mass.clone();
        let mut spaces = vec![&first.space];
        for p in &parts[1..] {
            mass = mass
                .iter()
                .flat_map(|&a| p.mass.iter().map(move |&b| a * b))
                .collect();
            spaces.push(&p.space);
        }
        Ok(Distribution { space: ProductStateSpace::concat(&spaces)?, mass })
    }

    /// Max-norm distance to the product of its one-dimensional marginals.
    pub fn product_defect(&self) -> f64 {
        let d = self.space.d();
        let margs: Vec<Distribution> = (0..d)
            .map(|i| self.marginal(&CoordinateSubset::singleton(d, i).unwrap()))
            .collect();
        let prod = Distribution::product(&margs).expect("non-empty");
        self.mass
            .iter()
            .zip(&prod.mass)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_product(&self, tol: f64) -> bool {
        self.product_defect() <= tol
    }

    pub fn total_variation(&self, other: &Distribution) -> f64 {
        0.5 * self.mass.iter().zip(&other.mass).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }

    pub fn to_row(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.mass)
    }
}

impl Serialize for Distribution {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.mass.serialize(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    space: ProductStateSpace,
    m: DMatrix<f64>,
}

impl StochasticMatrix {
    /// Validate a square non-negative matrix. Rows off by more than
    /// `STOCHASTIC_TOL` but less than `NORMALIZE_TOL` are renormalized;
    /// larger deviations are rejected with the offending row. Rows within
    /// `STOCHASTIC_TOL` are kept bit for bit.
    pub fn new(space: ProductStateSpace, m: DMatrix<f64>) -> Result<Self> {
        let n = space.total();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::shape(format!(
                "matrix is {}x{}, state space has {n} states",
                m.nrows(),
                m.ncols()
            )));
        }
        let mut m = m;
        for v in m.iter_mut() {
            *v = clean_entry(*v, "transition matrix")?;
        }
        for x in 0..n {
            let sum: f64 = m.row(x).sum();
            if (sum - 1.0).abs() > NORMALIZE_TOL {
                return Err(Error::domain(format!("row {x} sums to {sum}, not 1")));
            }
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                m.row_mut(x).unscale_mut(sum);
            }
        }
        Ok(Self { space, m })
    }

    pub fn from_rows(space: ProductStateSpace, rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::shape("transition matrix rows must all have length n"));
        }
        Self::new(space, DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_fn(space: ProductStateSpace, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let n = space.total();
        Self::new(space, DMatrix::from_fn(n, n, f))
    }

    /// Row-normalize a non-negative matrix whose rows are all positive.
    pub(crate) fn normalize_rows(space: ProductStateSpace, mut m: DMatrix<f64>) -> Result<Self> {
        for x in 0..m.nrows() {
            let sum: f64 = m.row(x).sum();
            if !(sum > 0.0 && sum.is_finite()) {
                return Err(Error::domain(format!("row {x} cannot be normalized (sum {sum})")));
            }
            m.row_mut(x).unscale_mut(sum);
        }
        Self::new(space, m)
    }

    pub fn identity(space: ProductStateSpace) -> Self {
        let n = space.total();
        Self { space, m: DMatrix::identity(n, n) }
    }

    /// Every row uniform (the i.i.d. uniform chain).
    pub fn uniform(space: ProductStateSpace) -> Self {
        let n = space.total();
        Self { space, m: DMatrix::from_element(n, n, 1.0 / n as f64) }
    }

    pub fn space(&self) -> &ProductStateSpace {
        &self.space
    }

    pub fn n(&self) -> usize {
        self.space.total()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.m[(x, y)]
    }

    pub fn row(&self, x: usize) -> Vec<f64> {
        self.m.row(x).iter().copied().collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|x| self.row(x)).collect()
    }

    pub fn with_space(self, space: ProductStateSpace) -> Result<Self> {
        if space.total() != self.n() {
            return Err(Error::shape("cannot re-tag a matrix with a different size"));
        }
        Ok(Self { space, m: self.m })
    }

    pub fn compose(&self, other: &StochasticMatrix) -> Result<StochasticMatrix> {
        same_space(&self.space, &other.space)?;
        Self::new(self.space.clone(), &self.m * &other.m)
    }

    pub fn max_abs_diff(&self, other: &StochasticMatrix) -> f64 {
        (&self.m - &other.m).amax()
    }

    /// `P(x,x) >= 1/2` for every state, up to `STOCHASTIC_TOL`.
    pub fn is_lazy(&self) -> bool {
        (0..self.n()).all(|x| self.m[(x, x)] >= 0.5 - STOCHASTIC_TOL)
    }

    /// `||pi P - pi||_1`.
    pub fn stationarity_residual(&self, pi: &Distribution) -> f64 {
        let row = pi.to_row().transpose() * &self.m;
        row.iter().zip(pi.mass()).map(|(a, b)| (a - b).abs()).sum()
    }

    pub fn is_stationary(&self, pi: &Distribution) -> bool {
        self.stationarity_residual(pi) <= STATIONARY_TOL
    }

    /// `max |pi(x)P(x,y) - pi(y)P(y,x)|`.
    pub fn detailed_balance_residual(&self, pi: &Distribution) -> f64 {
        let n = self.n();
        let mut worst: f64 = 0.0;
        for x in 0..n {
            for y in x + 1..n {
                let r = pi.get(x) * self.m[(x, y)] - pi.get(y) * self.m[(y, x)];
                worst = worst.max(r.abs());
            }
        }
        worst
    }

    pub fn is_reversible(&self, pi: &Distribution, tol: f64) -> bool {
        self.detailed_balance_residual(pi) <= tol
    }

    fn successors(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        (0..n)
            .map(|x| (0..n).filter(|&y| self.m[(x, y)] > 0.0).collect())
            .collect()
    }

    /// Strong connectivity of the support graph; the error names a pair
    /// `(from, to)` with `to` unreachable from `from`.
    pub fn check_irreducible(&self) -> Result<()> {
        let fwd = self.successors();
        let mut bwd = vec![Vec::new(); self.n()];
        for (x, ys) in fwd.iter().enumerate() {
            for &y in ys {
                bwd[y].push(x);
            }
        }
        if let Some(to) = bfs(&fwd, 0).iter().position(|l| l.is_none()) {
            return Err(Error::Reducible { from: 0, to });
        }
        if let Some(from) = bfs(&bwd, 0).iter().position(|l| l.is_none()) {
            return Err(Error::Reducible { from, to: 0 });
        }
        Ok(())
    }

    pub fn is_irreducible(&self) -> bool {
        self.check_irreducible().is_ok()
    }

    /// Period of an irreducible chain: gcd over support edges `u -> v` of
    /// `level(u) + 1 - level(v)` for BFS levels from state 0.
    pub fn period(&self) -> Result<usize> {
        self.check_irreducible()?;
        let succ = self.successors();
        let level = bfs(&succ, 0);
        let mut g = 0usize;
        for (u, vs) in succ.iter().enumerate() {
            let lu = level[u].expect("irreducible");
            for &v in vs {
                let lv = level[v].expect("irreducible");
                g = gcd(g, (lu + 1).abs_diff(lv));
            }
        }
        Ok(g.max(1))
    }

    pub fn is_ergodic(&self) -> bool {
        matches!(self.period(), Ok(1))
    }
}

impl Serialize for StochasticMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

fn bfs(adj: &[Vec<usize>], start: usize) -> Vec<Option<usize>> {
    let mut level = vec![None; adj.len()];
    let mut queue = VecDeque::from([start]);
    level[start] = Some(0);
    while let Some(u) = queue.pop_front() {
        let next = level[u].unwrap() + 1;
        for &v in &adj[u] {
            if level[v].is_none() {
                level[v] = Some(next);
                queue.push_back(v);
            }
        }
    }
    level
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn same_space(a: &ProductStateSpace, b: &ProductStateSpace) -> Result<()> {
    if a.total() != b.total() {
        return Err(Error::shape(format!(
            "state spaces differ: {} vs {} states",
            a.total(),
            b.total()
        )));
    }
    Ok(())
}

/// Joint law of `(X_0, X_1)` for `X_0 ~ pi` and one step of `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMeasure {
    space: ProductStateSpace,
    mass: DMatrix<f64>,
}

impl EdgeMeasure {
    pub fn new(space: ProductStateSpace, mass: DMatrix<f64>) -> Result<Self> {
        let n = space.total();
        if mass.nrows() != n || mass.ncols() != n {
            return Err(Error::shape("edge measure must be square over the state space"));
        }
        let sum = mass.sum();
        if (sum - 1.0).abs() > NORMALIZE_TOL || mass.iter().any(|&v| v < 0.0) {
            return Err(Error::domain(format!("edge measure has total mass {sum}")));
        }
        Ok(Self { space, mass: mass / sum })
    }

    pub fn space(&self) -> &ProductStateSpace {
        &self.space
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.mass[(x, y)]
    }

    pub fn first_marginal(&self) -> Vec<f64> {
        (0..self.mass.nrows()).map(|x| self.mass.row(x).sum()).collect()
    }

    pub fn second_marginal(&self) -> Vec<f64> {
        (0..self.mass.ncols()).map(|y| self.mass.column(y).sum()).collect()
    }

    pub fn l1_distance(&self, other: &EdgeMeasure) -> f64 {
        (&self.mass - &other.mass).abs().sum()
    }
}

impl Serialize for EdgeMeasure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..self.mass.nrows())
            .map(|x| self.mass.row(x).iter().copied().collect())
            .collect();
        rows.serialize(s)
    }
}

/// `(M_1 ⊗ ... ⊗ M_k)(x, y) = prod M_i(x^i, y^i)`.
pub fn tensor_product(ms: &[StochasticMatrix]) -> Result<StochasticMatrix> {
    let first = ms
        .first()
        .ok_or_else(|| Error::arg("tensor product of an empty list"))?;
    let mut m = first.m.clone();
    for next in &ms[1..] {
        m = m.kronecker(&next.m);
    }
    let spaces: Vec<&ProductStateSpace> = ms.iter().map(|s| &s.space).collect();
    StochasticMatrix::new(ProductStateSpace::concat(&spaces)?, m)
}

/// Tensor product of matrices living on the blocks of a partition of the
/// coordinates, assembled in the original coordinate order.
pub fn tensor_blocks(
    space: &ProductStateSpace,
    blocks: &[(CoordinateSubset, StochasticMatrix)],
) -> Result<StochasticMatrix> {
    let d = space.d();
    let mut seen = vec![false; d];
    for (s, m) in blocks {
        if s.d() != d {
            return Err(Error::arg("block subset has the wrong dimension"));
        }
        for i in s.iter() {
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::arg(format!("coordinate {} appears in two blocks", i + 1)));
            }
        }
        if m.n() != space.subspace(s).total() {
            return Err(Error::shape(format!("block {s} matrix has the wrong size")));
        }
    }
    if let Some(i) = seen.iter().position(|&b| !b) {
        return Err(Error::arg(format!("coordinate {} is in no block", i + 1)));
    }
    let projs: Vec<Vec<usize>> = blocks.iter().map(|(s, _)| space.projector(s)).collect();
    let n = space.total();
    let m = DMatrix::from_fn(n, n, |x, y| {
        blocks
            .iter()
            .zip(&projs)
            .map(|((_, b), p)| b.m[(p[x], p[y])])
            .product()
    });
    StochasticMatrix::new(space.clone(), m)
}

/// Unique stationary law of an irreducible chain by a dense solve of
/// `(P^T - I) pi = 0` with one equation replaced by normalization.
pub fn stationary_distribution(p: &StochasticMatrix) -> Result<Distribution> {
    p.check_irreducible()?;
    let n = p.n();
    let mut a = p.m.transpose() - DMatrix::identity(n, n);
    a.row_mut(n - 1).fill(1.0);
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let lu = a.clone().lu();
    let mut x = lu
        .solve(&b)
        .ok_or_else(|| Error::domain("stationary system is singular"))?;
    // one step of iterative refinement
    let r = &b - &a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    let mass: Vec<f64> = x.iter().map(|&v| v.max(0.0)).collect();
    Distribution::from_weights(p.space.clone(), mass)
}

fn require_stationary(p: &StochasticMatrix, pi: &Distribution) -> Result<()> {
    same_space(&p.space, &pi.space)?;
    let residual = p.stationarity_residual(pi);
    if residual > STATIONARY_TOL {
        return Err(Error::NotStationary { residual });
    }
    Ok(())
}

/// `P*(x,y) = pi(y) P(y,x) / pi(x)`.
pub fn time_reversal(p: &StochasticMatrix, pi: &Distribution) -> Result<StochasticMatrix> {
    pi.require_positive()?;
    require_stationary(p, pi)?;
    let n = p.n();
    let m = DMatrix::from_fn(n, n, |x, y| pi.get(y) * p.m[(y, x)] / pi.get(x));
    StochasticMatrix::normalize_rows(p.space.clone(), m)
}

/// `(pi ⊠ P)(x,y) = pi(x) P(x,y)`.
pub fn edge_measure(pi: &Distribution, p: &StochasticMatrix) -> Result<EdgeMeasure> {
    same_space(&p.space, &pi.space)?;
    let n = p.n();
    let mass = DMatrix::from_fn(n, n, |x, y| pi.get(x) * p.m[(x, y)]);
    EdgeMeasure::new(p.space.clone(), mass)
}
