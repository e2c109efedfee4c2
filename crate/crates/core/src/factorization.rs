//! Partition-factorizable and clique-factorizable projections.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::divergence::kl_rate;
use crate::error::{Error, Result};
use crate::ext::{self, ExtReal};
use crate::projection::{block_projection, independence_kl, keep_in, ProjectionResult};
use crate::state::{CoordinateSubset, Distribution, ProductStateSpace, StochasticMatrix};

/// Disjoint non-empty blocks covering every coordinate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    d: usize,
    blocks: Vec<CoordinateSubset>,
}

impl Partition {
    pub fn new(d: usize, blocks: Vec<CoordinateSubset>) -> Result<Self> {
        let mut owner = vec![None; d];
        for (b, s) in blocks.iter().enumerate() {
            if s.d() != d {
                return Err(Error::arg("block is over the wrong number of coordinates"));
            }
            if s.is_empty() {
                return Err(Error::arg(format!("block {} is empty", b + 1)));
            }
            for i in s.iter() {
                if let Some(prev) = owner[i].replace(b) {
                    return Err(Error::arg(format!(
                        "coordinate {} is in blocks {} and {}",
                        i + 1,
                        prev + 1,
                        b + 1
                    )));
                }
            }
        }
        if let Some(i) = owner.iter().position(Option::is_none) {
            return Err(Error::arg(format!("coordinate {} is in no block", i + 1)));
        }
        Ok(Self { d, blocks })
    }

    /// Parse `"1,2|3"` (1-based coordinates, `|` between blocks).
    pub fn parse_one_based(d: usize, text: &str) -> Result<Self> {
        let blocks = parse_blocks(d, text)?;
        Self::new(d, blocks)
    }

    pub fn singletons(d: usize) -> Self {
        let blocks = (0..d).map(|i| CoordinateSubset::singleton(d, i).unwrap()).collect();
        Self { d, blocks }
    }

    pub fn whole(d: usize) -> Self {
        Self { d, blocks: vec![CoordinateSubset::full(d)] }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn blocks(&self) -> &[CoordinateSubset] {
        &self.blocks
    }
}

pub(crate) fn parse_blocks(d: usize, text: &str) -> Result<Vec<CoordinateSubset>> {
    text.split('|')
        .map(|b| CoordinateSubset::parse_one_based(d, b))
        .collect()
}

/// A graph on the coordinates with a covering family of its cliques.
/// Cliques may overlap.
#[derive(Debug, Clone, PartialEq)]
pub struct CliqueCover {
    d: usize,
    adjacency: Vec<Vec<bool>>,
    cliques: Vec<CoordinateSubset>,
}

impl CliqueCover {
    pub fn new(adjacency: Vec<Vec<bool>>, cliques: Vec<CoordinateSubset>) -> Result<Self> {
        let d = adjacency.len();
        if adjacency.iter().any(|r| r.len() != d) {
            return Err(Error::shape("adjacency matrix must be square"));
        }
        for i in 0..d {
            for j in 0..d {
                if adjacency[i][j] != adjacency[j][i] {
                    return Err(Error::arg(format!(
                        "adjacency is not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        let mut covered = vec![false; d];
        for c in &cliques {
            if c.d() != d || c.is_empty() {
                return Err(Error::arg(format!("invalid clique {c}")));
            }
            for i in c.iter() {
                covered[i] = true;
                if let Some(j) = c.iter().find(|&j| j != i && !adjacency[i][j]) {
                    return Err(Error::arg(format!(
                        "{c} is not a clique: {} and {} are not adjacent",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        if let Some(i) = covered.iter().position(|&c| !c) {
            return Err(Error::arg(format!("coordinate {} is in no clique", i + 1)));
        }
        Ok(Self { d, adjacency, cliques })
    }

    /// Build the graph from 0-based undirected edges.
    pub fn from_edges(d: usize, edges: &[(usize, usize)], cliques: Vec<CoordinateSubset>) -> Result<Self> {
        let mut adj = vec![vec![false; d]; d];
        for &(a, b) in edges {
            if a >= d || b >= d {
                return Err(Error::arg(format!("edge ({}, {}) out of range", a + 1, b + 1)));
            }
            adj[a][b] = true;
            adj[b][a] = true;
        }
        Self::new(adj, cliques)
    }

    /// The cliques of a complete graph, so any cover is accepted.
    pub fn on_complete_graph(d: usize, cliques: Vec<CoordinateSubset>) -> Result<Self> {
        let adj = (0..d).map(|i| (0..d).map(|j| i != j).collect()).collect();
        Self::new(adj, cliques)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn cliques(&self) -> &[CoordinateSubset] {
        &self.cliques
    }

    pub fn adjacency(&self) -> &[Vec<bool>] {
        &self.adjacency
    }
}

/// `P^(S_1) ⊗ ... ⊗ P^(S_n)` over the blocks of `part`.
pub fn partition_projection(p: &StochasticMatrix, pi: &Distribution, part: &Partition) -> Result<ProjectionResult> {
    check_d(p.space(), part.d())?;
    block_projection(p, pi, part.blocks())
}

fn check_d(space: &ProductStateSpace, d: usize) -> Result<()> {
    if space.d() != d {
        return Err(Error::arg(format!(
            "structure is over {d} coordinates, chain has {}",
            space.d()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct IndependenceDecomposition {
    pub total: ExtReal,
    pub to_factorizability: ExtReal,
    pub per_block: Vec<ExtReal>,
    /// `total - to_factorizability - sum(per_block)`.
    #[serde(with = "ext::signed_inf")]
    pub residual: f64,
}

/// Split the distance to independence into the distance to the partition
/// family plus the distance to independence inside each block.
pub fn independence_decomposition(
    p: &StochasticMatrix,
    pi: &Distribution,
    part: &Partition,
) -> Result<IndependenceDecomposition> {
    let total = independence_kl(p, pi)?;
    let proj = partition_projection(p, pi, part)?;
    let per_block = part
        .blocks()
        .iter()
        .zip(&proj.factors)
        .map(|(s, ps)| independence_kl(ps, &pi.marginal(s)))
        .collect::<Result<Vec<_>>>()?;
    let rhs = per_block.iter().copied().sum::<ExtReal>() + proj.divergence_to_input;
    Ok(IndependenceDecomposition {
        total,
        to_factorizability: proj.divergence_to_input,
        residual: total.slack(rhs),
        per_block,
    })
}

/// Entrywise `prod_i M_i(x^(C_i), y^(C_i))` before normalization.
pub fn clique_product(
    space: &ProductStateSpace,
    cliques: &[CoordinateSubset],
    mats: &[StochasticMatrix],
) -> Result<DMatrix<f64>> {
    if cliques.len() != mats.len() {
        return Err(Error::arg(format!(
            "{} cliques but {} clique matrices",
            cliques.len(),
            mats.len()
        )));
    }
    for (c, m) in cliques.iter().zip(mats) {
        if m.n() != space.subspace(c).total() {
            return Err(Error::shape(format!("matrix for clique {c} has the wrong size")));
        }
    }
    let projs: Vec<Vec<usize>> = cliques.iter().map(|c| space.projector(c)).collect();
    let n = space.total();
    Ok(DMatrix::from_fn(n, n, |x, y| {
        mats.iter()
            .zip(&projs)
            .map(|(m, pr)| m.get(pr[x], pr[y]))
            .product()
    }))
}

fn row_normalizers(raw: &DMatrix<f64>) -> Vec<f64> {
    (0..raw.nrows()).map(|x| raw.row(x).sum()).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CliqueCandidate {
    pub matrix: StochasticMatrix,
    /// Row normalizer `Z(x)` of the clique product.
    pub normalizers: Vec<f64>,
    pub clique_chains: Vec<StochasticMatrix>,
}

/// Row-normalized product of the keep-`C_i`-in chains.
pub fn clique_candidate(p: &StochasticMatrix, pi: &Distribution, cover: &CliqueCover) -> Result<CliqueCandidate> {
    check_d(p.space(), cover.d())?;
    let clique_chains = cover
        .cliques()
        .iter()
        .map(|c| keep_in(p, pi, c))
        .collect::<Result<Vec<_>>>()?;
    let raw = clique_product(p.space(), cover.cliques(), &clique_chains)?;
    let normalizers = row_normalizers(&raw);
    if let Some(x) = normalizers.iter().position(|&z| z <= 0.0) {
        return Err(Error::domain(format!("clique product has a zero normalizer at state {x}")));
    }
    let matrix = StochasticMatrix::normalize_rows(p.space().clone(), raw)?;
    Ok(CliqueCandidate { matrix, normalizers, clique_chains })
}

#[derive(Debug, Clone, Serialize)]
pub struct CliqueCheck {
    /// `D(P || M)` for the candidate `M` built from the supplied blocks.
    pub lhs: ExtReal,
    /// `D(P || clique candidate) + sum_i D(P^(C_i) || L_i)`.
    pub rhs: ExtReal,
    #[serde(with = "ext::signed_inf")]
    pub slack: f64,
    pub z_candidate: Vec<f64>,
    pub z_projection: Vec<f64>,
    /// Per state: `Z_L(x) >= Z_P(x)`.
    pub z_condition: Vec<bool>,
    /// The inequality is asserted only when every state meets the condition.
    pub asserted: bool,
    pub holds: bool,
}

/// Evaluate both sides of the clique Pythagorean inequality for the chain
/// `M` proportional to `prod L_i`.
pub fn clique_pythagorean_check(
    p: &StochasticMatrix,
    pi: &Distribution,
    cover: &CliqueCover,
    candidate_blocks: &[StochasticMatrix],
) -> Result<CliqueCheck> {
    let cand = clique_candidate(p, pi, cover)?;
    let raw = clique_product(p.space(), cover.cliques(), candidate_blocks)?;
    let z_candidate = row_normalizers(&raw);
    if let Some(x) = z_candidate.iter().position(|&z| z <= 0.0) {
        return Err(Error::domain(format!("candidate has a zero normalizer at state {x}")));
    }
    let m = StochasticMatrix::normalize_rows(p.space().clone(), raw)?;
    let lhs = kl_rate(pi, p, &m)?;
    let mut rhs = kl_rate(pi, p, &cand.matrix)?;
    for ((c, pc), l) in cover.cliques().iter().zip(&cand.clique_chains).zip(candidate_blocks) {
        rhs = rhs + kl_rate(&pi.marginal(c), pc, l)?;
    }
    let z_condition: Vec<bool> = z_candidate
        .iter()
        .zip(&cand.normalizers)
        .map(|(zl, zp)| *zl >= zp - 1e-12)
        .collect();
    let asserted = z_condition.iter().all(|&b| b);
    let slack = lhs.slack(rhs);
    Ok(CliqueCheck {
        lhs,
        rhs,
        slack,
        z_candidate,
        z_projection: cand.normalizers,
        z_condition,
        asserted,
        holds: slack >= -1e-10,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::closest_product_kl;
    use crate::random;
    use crate::state::tensor_blocks;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sp222() -> ProductStateSpace {
        ProductStateSpace::new(vec![2, 2, 2]).unwrap()
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::parse_one_based(3, "1,2|3").is_ok());
        assert!(Partition::parse_one_based(3, "1,2|2,3").is_err());
        assert!(Partition::parse_one_based(3, "1|3").is_err());
        assert!(Partition::parse_one_based(3, "1,2,3|").is_err());
    }

    #[test]
    fn trivial_partitions() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random::stochastic(&sp222(), &mut rng);
        let pi = random::distribution(&sp222(), &mut rng);
        let whole = partition_projection(&p, &pi, &Partition::whole(3)).unwrap();
        assert!(whole.divergence_to_input.finite().unwrap().abs() < 1e-15);
        assert_eq!(whole.factors[0], p);
        let singles = partition_projection(&p, &pi, &Partition::singletons(3)).unwrap();
        let cp = closest_product_kl(&p, &pi).unwrap();
        assert!(singles.product.max_abs_diff(&cp.product) < 1e-12);
        let dec = independence_decomposition(&p, &pi, &Partition::singletons(3)).unwrap();
        assert_eq!(dec.total, dec.to_factorizability);
        assert!(dec.per_block.iter().all(|v| v.finite().unwrap().abs() < 1e-15));
    }

    #[test]
    fn partition_identity_and_decomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let part = Partition::parse_one_based(3, "1,2|3").unwrap();
        for _ in 0..20 {
            let p = random::stochastic(&sp222(), &mut rng);
            let pi = random::distribution(&sp222(), &mut rng);
            let proj = partition_projection(&p, &pi, &part).unwrap();
            let base = proj.divergence_to_input.finite().unwrap();
            for _ in 0..100 {
                let ls: Vec<StochasticMatrix> = part
                    .blocks()
                    .iter()
                    .map(|s| random::stochastic(&sp222().subspace(s), &mut rng))
                    .collect();
                let pairs: Vec<_> = part.blocks().iter().cloned().zip(ls.iter().cloned()).collect();
                let l = tensor_blocks(&sp222(), &pairs).unwrap();
                let lhs = kl_rate(&pi, &p, &l).unwrap().finite().unwrap();
                let parts: f64 = part
                    .blocks()
                    .iter()
                    .zip(&proj.factors)
                    .zip(&ls)
                    .map(|((s, ps), li)| kl_rate(&pi.marginal(s), ps, li).unwrap().finite().unwrap())
                    .sum();
                assert!((lhs - base - parts).abs() < 1e-10);
            }
            let dec = independence_decomposition(&p, &pi, &part).unwrap();
            assert!(dec.residual.abs() < 1e-10);
        }
    }

    #[test]
    fn product_chains_have_zero_distance_to_every_partition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ms = random::product_chain_factors(&sp222(), &mut rng);
        let p = crate::state::tensor_product(&ms).unwrap();
        let pi = random::product_distribution(&sp222(), &mut rng);
        for text in ["1,2|3", "1|2,3", "1,3|2", "1|2|3"] {
            let part = Partition::parse_one_based(3, text).unwrap();
            let dec = independence_decomposition(&p, &pi, &part).unwrap();
            assert!(dec.total.finite().unwrap().abs() < 1e-14);
            assert!(dec.to_factorizability.finite().unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn clique_cover_validation() {
        let c = |t: &str| parse_blocks(3, t).unwrap();
        assert!(CliqueCover::from_edges(3, &[(0, 1), (1, 2)], c("1,2|2,3")).is_ok());
        assert!(CliqueCover::from_edges(3, &[(0, 1)], c("1,2|2,3")).is_err());
        assert!(CliqueCover::from_edges(3, &[(0, 1), (1, 2)], c("1,2")).is_err());
        let lopsided = vec![vec![false, true], vec![false, false]];
        assert!(CliqueCover::new(lopsided, vec![CoordinateSubset::full(2)]).is_err());
    }

    #[test]
    fn clique_candidate_special_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = random::stochastic(&sp222(), &mut rng);
        let pi = random::distribution(&sp222(), &mut rng);
        let whole = CliqueCover::on_complete_graph(3, parse_blocks(3, "1,2,3").unwrap()).unwrap();
        let cand = clique_candidate(&p, &pi, &whole).unwrap();
        assert!(cand.matrix.max_abs_diff(&p) < 1e-15);
        assert!(cand.normalizers.iter().all(|z| (z - 1.0).abs() < 1e-14));
        let disjoint = CliqueCover::from_edges(3, &[(0, 1)], parse_blocks(3, "1,2|3").unwrap()).unwrap();
        let cand = clique_candidate(&p, &pi, &disjoint).unwrap();
        let part = Partition::parse_one_based(3, "1,2|3").unwrap();
        let proj = partition_projection(&p, &pi, &part).unwrap();
        assert!(cand.matrix.max_abs_diff(&proj.product) < 1e-14);
        assert!(cand.normalizers.iter().all(|z| (z - 1.0).abs() < 1e-14));
    }

    #[test]
    fn overlapping_cliques_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cover = CliqueCover::from_edges(3, &[(0, 1), (1, 2)], parse_blocks(3, "1,2|2,3").unwrap()).unwrap();
        let p = random::stochastic(&sp222(), &mut rng);
        let pi = random::distribution(&sp222(), &mut rng);
        let cand = clique_candidate(&p, &pi, &cover).unwrap();
        let raw = clique_product(&sp222(), cover.cliques(), &cand.clique_chains).unwrap();
        for x in 0..8 {
            for y in 0..8 {
                assert!((cand.matrix.get(x, y) * cand.normalizers[x] - raw[(x, y)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn clique_inequality_under_the_z_condition() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let cover = CliqueCover::from_edges(3, &[(0, 1), (1, 2)], parse_blocks(3, "1,2|2,3").unwrap()).unwrap();
        let mut asserted = 0;
        for _ in 0..200 {
            let p = random::stochastic(&sp222(), &mut rng);
            let pi = random::distribution(&sp222(), &mut rng);
            let cand = clique_candidate(&p, &pi, &cover).unwrap();
            let exact = clique_pythagorean_check(&p, &pi, &cover, &cand.clique_chains).unwrap();
            assert!(exact.asserted && exact.slack.abs() < 1e-12);
            let ls: Vec<StochasticMatrix> = cand
                .clique_chains
                .iter()
                .map(|c| {
                    let n = c.n();
                    let raw = DMatrix::from_fn(n, n, |x, y| c.get(x, y) * (1.0 + 0.6 * (rng.random::<f64>() - 0.5)));
                    StochasticMatrix::normalize_rows(c.space().clone(), raw).unwrap()
                })
                .collect();
            let r = clique_pythagorean_check(&p, &pi, &cover, &ls).unwrap();
            if r.asserted {
                asserted += 1;
                assert!(r.holds, "slack {}", r.slack);
            }
        }
        assert!(asserted > 0);
    }

    #[test]
    fn disjoint_cover_check_is_an_equality() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cover = CliqueCover::from_edges(3, &[(0, 1)], parse_blocks(3, "1,2|3").unwrap()).unwrap();
        let p = random::stochastic(&sp222(), &mut rng);
        let pi = random::distribution(&sp222(), &mut rng);
        let ls = vec![
            random::stochastic(&ProductStateSpace::new(vec![2, 2]).unwrap(), &mut rng),
            random::stochastic(&ProductStateSpace::single(2).unwrap(), &mut rng),
        ];
        let r = clique_pythagorean_check(&p, &pi, &cover, &ls).unwrap();
        assert!(r.asserted);
        assert!(r.slack.abs() < 1e-10);
    }
}
