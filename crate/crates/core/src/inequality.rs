//! Partition lemma, Shearer and Han inequalities for chains, entropy rates,
//! exhaustive submodularity scans and the Sanov rate exponent.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::divergence::{f_div_chains, kl_rate, DivergenceGenerator};
use crate::error::{Error, Result};
use crate::ext::{self, ExtReal};
use crate::projection::{independence_kl, keep_in, prescribed_projection};
use crate::state::{
    same_space, stationary_distribution, tensor_product, CoordinateSubset, Distribution, EdgeMeasure,
    ProductStateSpace, StochasticMatrix, STATIONARY_TOL,
};

pub const SLACK_TOL: f64 = 1e-10;
/// Largest dimension for the exhaustive subset scan.
pub const SCAN_MAX_D: usize = 5;

/// Subsets covering every coordinate at least `r` times.
///
/// Only this lower bound is validated. The divergence forms of Shearer's
/// inequality also need every coordinate covered at most `r` times (see
/// [`SubsetCoverSpec::is_exact`]); an over-covered coordinate counts its
/// reference term more than `r` times on the right-hand side, and the
/// reported slack can then be negative.
#[derive(Debug, Clone, Serialize)]
pub struct SubsetCoverSpec {
    d: usize,
    subsets: Vec<CoordinateSubset>,
    r: usize,
}

impl SubsetCoverSpec {
    pub fn new(d: usize, subsets: Vec<CoordinateSubset>, r: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::arg("cover multiplicity r must be positive"));
        }
        for s in &subsets {
            if s.d() != d || s.is_empty() {
                return Err(Error::arg(format!("invalid cover subset {s}")));
            }
        }
        for j in 0..d {
            let count = subsets.iter().filter(|s| s.contains(j)).count();
            if count < r {
                return Err(Error::arg(format!(
                    "coordinate {} is covered {count} times, fewer than r = {r}",
                    j + 1
                )));
            }
        }
        Ok(Self { d, subsets, r })
    }

    /// The cover with the largest valid `r`.
    pub fn tight(d: usize, subsets: Vec<CoordinateSubset>) -> Result<Self> {
        let r = (0..d)
            .map(|j| subsets.iter().filter(|s| s.contains(j)).count())
            .min()
            .unwrap_or(0);
        Self::new(d, subsets, r)
    }

    /// Leave-one-out subsets, `r = d - 1`.
    pub fn han(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::arg("the Han configuration needs d >= 2"));
        }
        let subsets = (0..d)
            .map(|i| CoordinateSubset::singleton(d, i).unwrap().complement())
            .collect();
        Self::new(d, subsets, d - 1)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn subsets(&self) -> &[CoordinateSubset] {
        &self.subsets
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Largest number of subsets containing one coordinate.
    pub fn max_multiplicity(&self) -> usize {
        (0..self.d)
            .map(|j| self.subsets.iter().filter(|s| s.contains(j)).count())
            .max()
            .unwrap_or(0)
    }

    /// Every coordinate lies in exactly `r` subsets.
    pub fn is_exact(&self) -> bool {
        self.max_multiplicity() == self.r
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct InequalityReport {
    pub lhs: ExtReal,
    pub rhs: ExtReal,
    #[serde(with = "ext::signed_inf")]
    pub slack: f64,
    pub holds: bool,
}

impl InequalityReport {
    pub fn new(lhs: ExtReal, rhs: ExtReal) -> Self {
        let slack = lhs.slack(rhs);
        Self { lhs, rhs, slack, holds: slack >= -SLACK_TOL }
    }
}

/// `D(P || L) >= D(P^(S) || L^(S))`.
pub fn partition_lemma_check(
    pi: &Distribution,
    p: &StochasticMatrix,
    l: &StochasticMatrix,
    s: &CoordinateSubset,
) -> Result<InequalityReport> {
    same_space(p.space(), l.space())?;
    let lhs = kl_rate(pi, p, l)?;
    let rhs = kl_rate(&pi.marginal(s), &keep_in(p, pi, s)?, &keep_in(l, pi, s)?)?;
    Ok(InequalityReport::new(lhs, rhs))
}

fn require_product(pi: &Distribution) -> Result<()> {
    pi.require_positive()?;
    let defect = pi.product_defect();
    if defect > 1e-12 {
        return Err(Error::domain(format!(
            "pi must be a product distribution (defect {defect:e})"
        )));
    }
    Ok(())
}

fn factors_on(l_factors: &[StochasticMatrix], s: &CoordinateSubset) -> Result<StochasticMatrix> {
    let picked: Vec<StochasticMatrix> = s.iter().map(|j| l_factors[j].clone()).collect();
    tensor_product(&picked)
}

/// `D(P || ⊗L_j) >= (1/r) sum_i D(P^(S_i) || ⊗_{j in S_i} L_j)` for product pi.
pub fn shearer_chain_check(
    pi: &Distribution,
    p: &StochasticMatrix,
    l_factors: &[StochasticMatrix],
    cover: &SubsetCoverSpec,
) -> Result<InequalityReport> {
    require_product(pi)?;
    let d = p.space().d();
    if cover.d() != d || l_factors.len() != d {
        return Err(Error::arg(format!("need {d} factors and a cover over {d} coordinates")));
    }
    let l = tensor_product(l_factors)?.with_space(p.space().clone())?;
    let lhs = kl_rate(pi, p, &l)?;
    let mut sum = ExtReal::ZERO;
    for s in cover.subsets() {
        sum = sum + kl_rate(&pi.marginal(s), &keep_in(p, pi, s)?, &factors_on(l_factors, s)?)?;
    }
    Ok(InequalityReport::new(lhs, sum.scale(1.0 / cover.r() as f64)))
}

/// Shearer with the leave-one-out cover.
pub fn han_check(pi: &Distribution, p: &StochasticMatrix, l_factors: &[StochasticMatrix]) -> Result<InequalityReport> {
    shearer_chain_check(pi, p, l_factors, &SubsetCoverSpec::han(p.space().d())?)
}

/// `I(P) >= (1/r) sum_i I(P^(S_i))` for product pi.
pub fn shearer_independence_check(
    pi: &Distribution,
    p: &StochasticMatrix,
    cover: &SubsetCoverSpec,
) -> Result<InequalityReport> {
    require_product(pi)?;
    if cover.d() != p.space().d() {
        return Err(Error::arg("cover dimension does not match the chain"));
    }
    let lhs = independence_kl(p, pi)?;
    let mut sum = ExtReal::ZERO;
    for s in cover.subsets() {
        sum = sum + independence_kl(&keep_in(p, pi, s)?, &pi.marginal(s))?;
    }
    Ok(InequalityReport::new(lhs, sum.scale(1.0 / cover.r() as f64)))
}

/// Entropy rate `-sum pi(x) P(x,y) ln P(x,y)` under a given stationary law.
pub fn entropy_rate_with(p: &StochasticMatrix, pi: &Distribution) -> Result<f64> {
    same_space(p.space(), pi.space())?;
    let m = p.matrix();
    let mut h = 0.0;
    for x in 0..p.n() {
        let w = pi.get(x);
        if w == 0.0 {
            continue;
        }
        let row: f64 = m.row(x).iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum();
        h -= w * row;
    }
    Ok(h.max(0.0))
}

/// Entropy rate of an irreducible chain under its stationary law.
pub fn entropy_rate(p: &StochasticMatrix) -> Result<f64> {
    entropy_rate_with(p, &stationary_distribution(p)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    /// `H(P^(S))`, submodular.
    EntropyRate,
    /// `D(P || P^(S) ⊗ P^(-S))`, submodular.
    FactorizabilityDistance,
    /// `I(P^(S))`, supermodular and monotone.
    DistanceToIndependence,
}

#[derive(Debug, Clone, Serialize)]
pub struct SubsetValue {
    pub subset: CoordinateSubset,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Triple {
    pub s: CoordinateSubset,
    pub t: CoordinateSubset,
    /// 1-based coordinate.
    pub i: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub functional: Functional,
    pub d: usize,
    pub triples: usize,
    pub values: Vec<SubsetValue>,
    /// Minimum over triples of the (sub- or super-) modularity slack.
    pub min_modularity_slack: f64,
    pub worst_triple: Triple,
    /// Minimum of `g(T) - g(S)` over `S ⊆ T`, for the monotone functional.
    pub min_monotonicity_slack: Option<f64>,
    /// Largest residual of the entropy-rate identity behind the functional.
    pub identity_residual: Option<f64>,
    pub holds: bool,
}

fn subset_chain(p: &StochasticMatrix, pi: &Distribution, s: &CoordinateSubset) -> Result<(StochasticMatrix, Distribution)> {
    Ok((keep_in(p, pi, s)?, pi.marginal(s)))
}

fn finite(v: ExtReal, what: &str) -> Result<f64> {
    v.finite()
        .ok_or_else(|| Error::domain(format!("{what} is infinite")))
}

/// Evaluate `g` on every subset, then check (sub/super)modularity over all
/// `S ⊆ T`, `i ∉ T` (there are `d 3^(d-1)` such triples).
pub fn modularity_scan(p: &StochasticMatrix, pi: &Distribution, functional: Functional) -> Result<ScanReport> {
    same_space(p.space(), pi.space())?;
    pi.require_positive()?;
    let residual = p.stationarity_residual(pi);
    if residual > STATIONARY_TOL {
        return Err(Error::NotStationary { residual });
    }
    let d = p.space().d();
    let triples = d * 3usize.pow(d as u32 - 1);
    if d > SCAN_MAX_D {
        return Err(Error::SizeGuard(format!(
            "exhaustive scan over d = {d} coordinates needs {triples} triples; the limit is d <= {SCAN_MAX_D}"
        )));
    }
    let full = (1u64 << d) - 1;
    let h = |s: &CoordinateSubset| -> Result<f64> {
        if s.is_empty() {
            return Ok(0.0);
        }
        let (ps, pis) = subset_chain(p, pi, s)?;
        entropy_rate_with(&ps, &pis)
    };
    let eval = |mask: u64| -> Result<(f64, f64)> {
        let s = CoordinateSubset::from_mask(d, mask);
        match functional {
            Functional::EntropyRate => Ok((h(&s)?, 0.0)),
            Functional::FactorizabilityDistance => {
                if mask == 0 || mask == full {
                    return Ok((0.0, 0.0));
                }
                let (a, b) = (s.clone(), s.complement());
                let pa = keep_in(p, pi, &a)?;
                let pb = keep_in(p, pi, &b)?;
                let pairs = [(a.clone(), pa), (b.clone(), pb)];
                let prod = crate::state::tensor_blocks(p.space(), &pairs)?;
                let v = finite(kl_rate(pi, p, &prod)?, "factorizability distance")?;
                let ident = h(&a)? + h(&b)? - h(&CoordinateSubset::full(d))?;
                Ok((v, (v - ident).abs()))
            }
            Functional::DistanceToIndependence => {
                if mask == 0 {
                    return Ok((0.0, 0.0));
                }
                let (ps, pis) = subset_chain(p, pi, &s)?;
                let v = finite(independence_kl(&ps, &pis)?, "distance to independence")?;
                let singles: f64 = s
                    .iter()
                    .map(|i| h(&CoordinateSubset::singleton(d, i).unwrap()))
                    .sum::<Result<f64>>()?;
                Ok((v, (v - (singles - h(&s)?)).abs()))
            }
        }
    };
    let evaluated: Vec<(f64, f64)> = (0..=full)
        .into_par_iter()
        .map(eval)
        .collect::<Result<Vec<_>>>()?;
    let g: Vec<f64> = evaluated.iter().map(|e| e.0).collect();
    let identity_residual = match functional {
        Functional::EntropyRate => None,
        _ => Some(evaluated.iter().map(|e| e.1).fold(0.0, f64::max)),
    };
    let sign = match functional {
        Functional::DistanceToIndependence => -1.0,
        _ => 1.0,
    };

    let mut min_slack = f64::INFINITY;
    let mut worst = (0u64, 0u64, 0usize);
    let mut count = 0usize;
    let mut min_mono = f64::INFINITY;
    for t in 0..=full {
        // enumerate S ⊆ T as submasks
        let mut s = t;
        loop {
            if functional == Functional::DistanceToIndependence {
                min_mono = min_mono.min(g[t as usize] - g[s as usize]);
            }
            for i in (0..d).filter(|&i| t >> i & 1 == 0) {
                let bit = 1u64 << i;
                let slack = sign
                    * (g[(s | bit) as usize] - g[s as usize] - g[(t | bit) as usize] + g[t as usize]);
                count += 1;
                if slack < min_slack {
                    min_slack = slack;
                    worst = (s, t, i);
                }
            }
            if s == 0 {
                break;
            }
            s = (s - 1) & t;
        }
    }
    debug_assert_eq!(count, triples);
    let min_monotonicity_slack =
        (functional == Functional::DistanceToIndependence).then_some(min_mono);
    let holds = min_slack >= -SLACK_TOL
        && min_monotonicity_slack.is_none_or(|m| m >= -SLACK_TOL);
    Ok(ScanReport {
        functional,
        d,
        triples: count,
        values: (0..=full)
            .map(|m| SubsetValue { subset: CoordinateSubset::from_mask(d, m), value: g[m as usize] })
            .collect(),
        min_modularity_slack: if count == 0 { 0.0 } else { min_slack },
        worst_triple: Triple {
            s: CoordinateSubset::from_mask(d, worst.0),
            t: CoordinateSubset::from_mask(d, worst.1),
            i: worst.2 + 1,
        },
        min_monotonicity_slack,
        identity_residual,
        holds,
    })
}

/// Monotonicity of the KL quantities along `T ⊆ S`: distance to
/// independence and the distance to the i.i.d. chain `Π` with rows `pi`.
#[derive(Debug, Clone, Serialize)]
pub struct KlContraction {
    pub independence: [ExtReal; 3],
    pub to_iid: [ExtReal; 3],
    pub independence_slacks: [f64; 2],
    pub to_iid_slacks: [f64; 2],
    pub holds: bool,
}

pub fn kl_contraction(
    p: &StochasticMatrix,
    pi: &Distribution,
    s: &CoordinateSubset,
    t: &CoordinateSubset,
) -> Result<KlContraction> {
    if !t.is_subset_of(s) {
        return Err(Error::arg(format!("{t} is not a subset of {s}")));
    }
    let n = p.n();
    let iid = StochasticMatrix::new(
        p.space().clone(),
        DMatrix::from_fn(n, n, |_, y| pi.get(y)),
    )?;
    let mut independence = [ExtReal::ZERO; 3];
    let mut to_iid = [ExtReal::ZERO; 3];
    for (k, sub) in [CoordinateSubset::full(p.space().d()), s.clone(), t.clone()].iter().enumerate() {
        let (ps, pis) = subset_chain(p, pi, sub)?;
        independence[k] = independence_kl(&ps, &pis)?;
        to_iid[k] = kl_rate(&pis, &ps, &keep_in(&iid, pi, sub)?)?;
    }
    let independence_slacks = [independence[0].slack(independence[1]), independence[1].slack(independence[2])];
    let to_iid_slacks = [to_iid[0].slack(to_iid[1]), to_iid[1].slack(to_iid[2])];
    let holds = independence_slacks.iter().chain(&to_iid_slacks).all(|&v| v >= -SLACK_TOL);
    Ok(KlContraction { independence, to_iid, independence_slacks, to_iid_slacks, holds })
}

/// Cyclic pair empirical measure of a trajectory.
pub fn pair_empirical_measure(space: &ProductStateSpace, trajectory: &[usize]) -> Result<EdgeMeasure> {
    let n = trajectory.len();
    if n == 0 {
        return Err(Error::arg("trajectory is empty"));
    }
    let total = space.total();
    if let Some(&bad) = trajectory.iter().find(|&&x| x >= total) {
        return Err(Error::arg(format!("state {bad} out of range")));
    }
    let mut counts = DMatrix::<f64>::zeros(total, total);
    for k in 0..n {
        counts[(trajectory[k], trajectory[(k + 1) % n])] += 1.0;
    }
    EdgeMeasure::new(space.clone(), counts / n as f64)
}

/// Reverse-KL rate `D(P || ⊗_{j<i} L_j ⊗ L*_i ⊗ ⊗_{j>i} L_j)` where `L*_i`
/// is the prescribed projection given the other factors.
pub fn sanov_rate(
    p: &StochasticMatrix,
    pi: &Distribution,
    i: usize,
    others: &[StochasticMatrix],
) -> Result<ExtReal> {
    require_product(pi)?;
    let residual = p.stationarity_residual(pi);
    if residual > STATIONARY_TOL {
        return Err(Error::NotStationary { residual });
    }
    if let Some(k) = p.matrix().iter().position(|&v| v <= 0.0) {
        let n = p.n();
        return Err(Error::domain(format!(
            "the rate needs P > 0 entrywise, but P({}, {}) = 0",
            k % n,
            k / n
        )));
    }
    let d = p.space().d();
    let rest = CoordinateSubset::singleton(d, i)?.complement();
    for (j, l) in rest.iter().zip(others) {
        let pij = pi.marginal(&CoordinateSubset::singleton(d, j)?);
        if l.n() == pij.len() && l.stationarity_residual(&pij) > STATIONARY_TOL {
            return Err(Error::domain(format!(
                "factor for coordinate {} is not stationary for its marginal of pi",
                j + 1
            )));
        }
    }
    let rkl = DivergenceGenerator::reverse_kl();
    let lstar = prescribed_projection(p, pi, i, others, &rkl)?;
    let mut all: Vec<StochasticMatrix> = others.to_vec();
    all.insert(i, lstar);
    let prod = tensor_product(&all)?.with_space(p.space().clone())?;
    f_div_chains(pi, p, &prod, &rkl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sp(d: usize) -> ProductStateSpace {
        ProductStateSpace::binary(d).unwrap()
    }

    #[test]
    fn entropy_rate_oracles() {
        let four = ProductStateSpace::single(4).unwrap();
        let u = StochasticMatrix::uniform(four.clone());
        assert!((entropy_rate(&u).unwrap() - 4f64.ln()).abs() < 1e-14);
        let perm = StochasticMatrix::from_fn(four, |x, y| f64::from(y == (x + 1) % 4)).unwrap();
        assert_eq!(entropy_rate(&perm).unwrap(), 0.0);
        let two = StochasticMatrix::from_rows(
            ProductStateSpace::single(2).unwrap(),
            &[vec![0.9, 0.1], vec![0.1, 0.9]],
        )
        .unwrap();
        assert!((entropy_rate(&two).unwrap() - 0.325083).abs() < 1e-6);
        let id = StochasticMatrix::identity(ProductStateSpace::single(2).unwrap());
        assert!(entropy_rate(&id).is_err());
    }

    #[test]
    fn cover_spec_validation() {
        let c = |t: &str| crate::factorization::parse_blocks(3, t).unwrap();
        assert!(SubsetCoverSpec::new(3, c("1,2|2,3|1,3"), 2).is_ok());
        assert!(SubsetCoverSpec::new(3, c("1,2|2,3"), 2).is_err());
        assert_eq!(SubsetCoverSpec::tight(3, c("1,2|2,3|1,3")).unwrap().r(), 2);
        assert_eq!(SubsetCoverSpec::han(3).unwrap().r(), 2);
    }

    #[test]
    fn over_covered_coordinates_break_the_divergence_form() {
        // {1,2} and {1,2,3} cover everything at least once, but 1 and 2 twice
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let space = sp(3);
        let pi = random::product_distribution(&space, &mut rng);
        let p = random::stochastic(&space, &mut rng);
        let ls = random::product_chain_factors(&space, &mut rng);
        let over = SubsetCoverSpec::new(3, crate::factorization::parse_blocks(3, "1,2|1,2,3").unwrap(), 1).unwrap();
        assert!(!over.is_exact());
        assert_eq!(over.max_multiplicity(), 2);
        assert!(shearer_chain_check(&pi, &p, &ls, &over).unwrap().slack < 0.0);
        assert!(shearer_independence_check(&pi, &p, &over).unwrap().slack < 0.0);
        assert!(SubsetCoverSpec::han(3).unwrap().is_exact());
    }

    #[test]
    fn partition_shearer_han_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let space = sp(3);
        let cover2 = SubsetCoverSpec::new(3, crate::factorization::parse_blocks(3, "1,2|2,3|1,3").unwrap(), 2).unwrap();
        for _ in 0..100 {
            let pi = random::product_distribution(&space, &mut rng);
            let p = random::stochastic(&space, &mut rng);
            let l = random::stochastic(&space, &mut rng);
            let s = CoordinateSubset::singleton(3, 1).unwrap();
            assert!(partition_lemma_check(&pi, &p, &l, &s).unwrap().holds);
            let full = partition_lemma_check(&pi, &p, &l, &CoordinateSubset::full(3)).unwrap();
            assert!(full.slack.abs() < 1e-12);
            let ls = random::product_chain_factors(&space, &mut rng);
            assert!(han_check(&pi, &p, &ls).unwrap().holds);
            assert!(shearer_chain_check(&pi, &p, &ls, &cover2).unwrap().holds);
            assert!(shearer_independence_check(&pi, &p, &cover2).unwrap().holds);
            let singles = SubsetCoverSpec::new(3, (0..3).map(|i| CoordinateSubset::singleton(3, i).unwrap()).collect(), 1).unwrap();
            let r = shearer_independence_check(&pi, &p, &singles).unwrap();
            assert!(r.rhs.finite().unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn product_chain_is_tight() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let space = sp(3);
        let pi = random::product_distribution(&space, &mut rng);
        let ls = random::product_chain_factors(&space, &mut rng);
        let p = tensor_product(&ls).unwrap();
        let r = han_check(&pi, &p, &ls).unwrap();
        assert!(r.lhs.finite().unwrap().abs() < 1e-14 && r.rhs.finite().unwrap().abs() < 1e-14);
        let r = shearer_independence_check(&pi, &p, &SubsetCoverSpec::han(3).unwrap()).unwrap();
        assert!(r.slack.abs() < 1e-14);
    }

    #[test]
    fn non_product_pi_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let space = sp(2);
        let pi = Distribution::new(space.clone(), vec![0.4, 0.1, 0.1, 0.4]).unwrap();
        let p = random::stochastic(&space, &mut rng);
        let ls = random::product_chain_factors(&space, &mut rng);
        assert!(matches!(han_check(&pi, &p, &ls), Err(Error::Domain(_))));
    }

    #[test]
    fn scans_on_reversible_product_stationary_chains() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let space = sp(3);
        for _ in 0..10 {
            let pi = random::product_distribution(&space, &mut rng);
            let p = random::reversible(&pi, 0.0, 1.0, &mut rng).unwrap();
            for f in [Functional::EntropyRate, Functional::FactorizabilityDistance, Functional::DistanceToIndependence] {
                let r = modularity_scan(&p, &pi, f).unwrap();
                assert_eq!(r.triples, 3 * 9);
                assert!(r.holds, "{f:?}: {}", r.min_modularity_slack);
                if let Some(res) = r.identity_residual {
                    assert!(res < 1e-10);
                }
            }
        }
    }

    #[test]
    fn scan_of_product_chain_is_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let space = sp(3);
        let ls = random::product_chain_factors(&space, &mut rng);
        let p = tensor_product(&ls).unwrap();
        let pi = stationary_distribution(&p).unwrap();
        let r = modularity_scan(&p, &pi, Functional::DistanceToIndependence).unwrap();
        assert!(r.values.iter().all(|v| v.value.abs() < 1e-12));
        assert!(r.min_modularity_slack.abs() < 1e-12);
    }

    #[test]
    fn scan_refuses_large_d() {
        let space = sp(6);
        let p = StochasticMatrix::uniform(space.clone());
        let pi = Distribution::uniform(space);
        match modularity_scan(&p, &pi, Functional::EntropyRate) {
            Err(Error::SizeGuard(msg)) => assert!(msg.contains("1458")),
            other => panic!("{other:?}"),
        }
    }

    /// Entropy-rate submodularity can fail once the stationary law is not a
    /// product: chains on {0,1}^4 with sharply peaked rows.
    #[test]
    fn entropy_submodularity_needs_more_than_stationarity() {
        use rand::Rng;
        let space = sp(4);
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        let mut worst = f64::INFINITY;
        for _ in 0..200 {
            // approximately Dirichlet(0.05) rows
            let raw = DMatrix::from_fn(16, 16, |_, _| {
                let (a, b): (f64, f64) = (rng.random(), rng.random());
                -(1.0 - a).ln() * b.powf(20.0) + 1e-300
            });
            let p = StochasticMatrix::normalize_rows(space.clone(), raw).unwrap();
            let pi = stationary_distribution(&p).unwrap();
            if pi.min_mass() < 1e-9 || pi.is_product(1e-6) {
                continue;
            }
            let r = modularity_scan(&p, &pi, Functional::EntropyRate).unwrap();
            worst = worst.min(r.min_modularity_slack);
            if worst < -1e-3 {
                break;
            }
        }
        assert!(worst < -1e-3, "no counterexample found (worst slack {worst})");
    }

    #[test]
    fn pair_empirical_measure_oracles() {
        let space = ProductStateSpace::single(3).unwrap();
        let e = pair_empirical_measure(&space, &[0, 1, 1]).unwrap();
        for (x, y) in [(0, 1), (1, 1), (1, 0)] {
            assert!((e.get(x, y) - 1.0 / 3.0).abs() < 1e-15);
        }
        let c = pair_empirical_measure(&space, &[2, 2, 2, 2]).unwrap();
        assert_eq!(c.get(2, 2), 1.0);
        assert!(pair_empirical_measure(&space, &[]).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let p = random::stochastic(&space, &mut rng);
        let pi = stationary_distribution(&p).unwrap();
        let path = random::sample_path(&p, 0, 10_000, &mut rng);
        let e = pair_empirical_measure(&space, &path).unwrap();
        let target = crate::state::edge_measure(&pi, &p).unwrap();
        assert!(e.l1_distance(&target) < 0.1);
        let (a, b) = (e.first_marginal(), e.second_marginal());
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-15);
        }
    }

    #[test]
    fn sanov_rate_is_zero_inside_and_optimal_outside() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let space = sp(2);
        let one = ProductStateSpace::single(2).unwrap();
        let pi = random::product_distribution(&space, &mut rng);
        let margs: Vec<Distribution> = (0..2).map(|j| pi.marginal(&CoordinateSubset::singleton(2, j).unwrap())).collect();
        let ms: Vec<StochasticMatrix> = margs.iter().map(|m| random::reversible(m, 0.1, 1.0, &mut rng).unwrap()).collect();
        let p = tensor_product(&ms).unwrap();
        let r = sanov_rate(&p, &pi, 0, &[ms[1].clone()]).unwrap();
        assert!(r.finite().unwrap().abs() < 1e-12);

        let q = random::reversible(&pi, 0.1, 1.0, &mut rng).unwrap();
        let l2 = random::reversible(&margs[1], 0.1, 1.0, &mut rng).unwrap();
        let rate = sanov_rate(&q, &pi, 0, std::slice::from_ref(&l2)).unwrap().finite().unwrap();
        assert!(rate >= 0.0);
        let rkl = DivergenceGenerator::reverse_kl();
        for _ in 0..200 {
            let m = random::stationary(&margs[0], &mut rng).unwrap().with_space(one.clone()).unwrap();
            let prod = tensor_product(&[m, l2.clone()]).unwrap();
            let v = f_div_chains(&pi, &q, &prod, &rkl).unwrap().finite().unwrap();
            assert!(rate <= v + 1e-12);
        }
    }
}
