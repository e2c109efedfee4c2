//! Marginal (keep-S-in) chains and information projections onto product
//! chains.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::divergence::{f_div_chains, kl_rate, DivergenceGenerator, GeneratorKind};
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::state::{
    same_space, tensor_blocks, tensor_product, CoordinateSubset, Distribution, ProductStateSpace,
    StochasticMatrix,
};

/// A projection onto a block-factorized family.
#[derive(Debug, Clone, Serialize)]
pub struct ProjectionResult {
    pub blocks: Vec<CoordinateSubset>,
    pub factors: Vec<StochasticMatrix>,
    #[serde(skip)]
    pub product: StochasticMatrix,
    pub divergence_to_input: ExtReal,
    /// The minimizer is unique (pi positive).
    pub unique: bool,
}

/// `P^(S)_pi(xS, yS) = sum over complements of pi(x) P(x,y) / pi^(S)(xS)`.
pub fn keep_in(p: &StochasticMatrix, pi: &Distribution, s: &CoordinateSubset) -> Result<StochasticMatrix> {
    same_space(p.space(), pi.space())?;
    pi.require_positive()?;
    check_subset(p.space(), s)?;
    if s.is_full() {
        return Ok(p.clone());
    }
    let sub = p.space().subspace(s);
    let proj = p.space().projector(s);
    let ns = sub.total();
    let mut q = DMatrix::zeros(ns, ns);
    let mut marg = vec![0.0; ns];
    let m = p.matrix();
    for x in 0..p.n() {
        let (px, w) = (proj[x], pi.get(x));
        marg[px] += w;
        for y in 0..p.n() {
            q[(px, proj[y])] += w * m[(x, y)];
        }
    }
    for (a, &w) in marg.iter().enumerate() {
        q.row_mut(a).unscale_mut(w);
    }
    StochasticMatrix::normalize_rows(sub, q)
}

fn check_subset(space: &ProductStateSpace, s: &CoordinateSubset) -> Result<()> {
    if s.d() != space.d() {
        return Err(Error::arg(format!(
            "subset is over {} coordinates, chain has {}",
            s.d(),
            space.d()
        )));
    }
    if s.is_empty() {
        return Err(Error::arg("coordinate subset must be non-empty"));
    }
    Ok(())
}

/// Leave-S-out chain, i.e. keep the complement of `s`.
pub fn leave_out(p: &StochasticMatrix, pi: &Distribution, s: &CoordinateSubset) -> Result<StochasticMatrix> {
    keep_in(p, pi, &s.complement())
}

/// The `i`-th marginal chain (0-based `i`).
pub fn marginal_chain(p: &StochasticMatrix, pi: &Distribution, i: usize) -> Result<StochasticMatrix> {
    keep_in(p, pi, &CoordinateSubset::singleton(p.space().d(), i)?)
}

/// Product of keep-in chains over the given disjoint covering blocks,
/// together with its KL distance to `p`. Blocks are validated by
/// [`tensor_blocks`].
pub(crate) fn block_projection(
    p: &StochasticMatrix,
    pi: &Distribution,
    blocks: &[CoordinateSubset],
) -> Result<ProjectionResult> {
    let factors = blocks
        .iter()
        .map(|s| keep_in(p, pi, s))
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(CoordinateSubset, StochasticMatrix)> =
        blocks.iter().cloned().zip(factors.iter().cloned()).collect();
    let product = tensor_blocks(p.space(), &pairs)?;
    let divergence_to_input = kl_rate(pi, p, &product)?;
    Ok(ProjectionResult {
        blocks: blocks.to_vec(),
        factors,
        product,
        divergence_to_input,
        unique: true,
    })
}

/// Closest product chain under `D_KL^pi(P || .)`: the tensor product of the
/// marginal chains. `divergence_to_input` is the distance to independence.
pub fn closest_product_kl(p: &StochasticMatrix, pi: &Distribution) -> Result<ProjectionResult> {
    let d = p.space().d();
    let blocks: Vec<CoordinateSubset> =
        (0..d).map(|i| CoordinateSubset::singleton(d, i)).collect::<Result<_>>()?;
    block_projection(p, pi, &blocks)
}

/// KL distance to independence `I^pi(P)`.
pub fn independence_kl(p: &StochasticMatrix, pi: &Distribution) -> Result<ExtReal> {
    Ok(closest_product_kl(p, pi)?.divergence_to_input)
}

/// Best factor for coordinate `i` when every other factor is held fixed.
///
/// `others` lists the factors of the remaining coordinates in increasing
/// coordinate order. KL ignores them; reverse KL gives a weighted geometric
/// mean of `P`; the alpha family gives a weighted power mean.
pub fn prescribed_projection(
    p: &StochasticMatrix,
    pi: &Distribution,
    i: usize,
    others: &[StochasticMatrix],
    f: &DivergenceGenerator,
) -> Result<StochasticMatrix> {
    same_space(p.space(), pi.space())?;
    pi.require_positive()?;
    let space = p.space();
    let d = space.d();
    let si = CoordinateSubset::singleton(d, i)?;
    if let GeneratorKind::Kl = f.kind() {
        return keep_in(p, pi, &si);
    }
    let alpha = match f.kind() {
        GeneratorKind::ReverseKl => None,
        GeneratorKind::Alpha { alpha } => Some(alpha),
        other => {
            return Err(Error::Unsupported(format!(
                "no closed-form prescribed projection for {other:?}"
            )))
        }
    };
    let rest = si.complement();
    if others.len() != rest.len() {
        return Err(Error::arg(format!(
            "expected {} fixed factors, got {}",
            rest.len(),
            others.len()
        )));
    }
    for (j, m) in rest.iter().zip(others) {
        if m.n() != space.factor_sizes()[j] {
            return Err(Error::shape(format!("factor for coordinate {} has the wrong size", j + 1)));
        }
    }
    let ni = space.factor_sizes()[i];
    let pi_i = pi.marginal(&si);
    let ai = space.projector(&si);
    let z = if rest.is_empty() {
        DMatrix::from_element(1, 1, 1.0)
    } else {
        tensor_product(others)?.into_matrix()
    };
    let bi = space.projector(&rest);
    let pm = p.matrix();
    let n = p.n();

    let mut acc = DMatrix::<f64>::zeros(ni, ni);
    match alpha {
        None => {
            for x in 0..n {
                for y in 0..n {
                    let w = pi.get(x) * z[(bi[x], bi[y])];
                    if w == 0.0 {
                        continue;
                    }
                    let v = pm[(x, y)];
                    if v <= 0.0 {
                        return Err(Error::domain(format!(
                            "reverse-KL projection needs P({x},{y}) > 0 on a positively weighted pair"
                        )));
                    }
                    acc[(ai[x], ai[y])] += w * v.ln();
                }
            }
            // the exponent weights of row a sum to pi_i(a)
            let mut l = DMatrix::zeros(ni, ni);
            for a in 0..ni {
                let row: Vec<f64> = (0..ni).map(|b| acc[(a, b)] / pi_i.get(a)).collect();
                let top = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                for (b, v) in row.into_iter().enumerate() {
                    l[(a, b)] = (v - top).exp();
                }
            }
            StochasticMatrix::normalize_rows(pi_i.space().clone(), l)
        }
        Some(alpha) => {
            for x in 0..n {
                for y in 0..n {
                    let v = pm[(x, y)];
                    if v == 0.0 {
                        continue;
                    }
                    let zz = z[(bi[x], bi[y])];
                    if zz == 0.0 {
                        if alpha > 1.0 {
                            return Err(Error::domain(format!(
                                "alpha > 1 projection is infinite for every candidate: \
                                 P({x},{y}) > 0 where the fixed factors vanish"
                            )));
                        }
                        continue;
                    }
                    acc[(ai[x], ai[y])] += pi.get(x) * zz.powf(1.0 - alpha) * v.powf(alpha);
                }
            }
            let mut l = acc.map(|c| c.powf(1.0 / alpha));
            for a in 0..ni {
                if l.row(a).sum() <= 0.0 {
                    // every row is optimal here; pick the uniform one
                    l.row_mut(a).fill(1.0);
                }
            }
            StochasticMatrix::normalize_rows(pi_i.space().clone(), l)
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DescentOptions {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self { max_iters: 500, tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DescentResult {
    pub factors: Vec<StochasticMatrix>,
    #[serde(skip)]
    pub product: StochasticMatrix,
    pub divergence: ExtReal,
    /// Initial divergence, then the value after every coordinate update.
    pub trace: Vec<ExtReal>,
    pub sweeps: usize,
    pub converged: bool,
}

/// Cyclic coordinate descent over product chains, each step replacing one
/// factor by its prescribed projection given the freshest other factors.
pub fn coordinate_descent(
    p: &StochasticMatrix,
    pi: &Distribution,
    f: &DivergenceGenerator,
    init: Option<Vec<StochasticMatrix>>,
    opts: DescentOptions,
) -> Result<DescentResult> {
    let space = p.space();
    let d = space.d();
    let mut factors = match init {
        Some(v) => {
            if v.len() != d {
                return Err(Error::arg(format!("init has {} factors, need {d}", v.len())));
            }
            for (j, m) in v.iter().enumerate() {
                if m.n() != space.factor_sizes()[j] {
                    return Err(Error::shape(format!("init factor {} has the wrong size", j + 1)));
                }
            }
            v
        }
        None => space
            .factor_sizes()
            .iter()
            .map(|&n| StochasticMatrix::uniform(ProductStateSpace::single(n).unwrap()))
            .collect(),
    };
    if opts.max_iters == 0 {
        return Err(Error::arg("max_iters must be at least 1"));
    }
    let eval = |fs: &[StochasticMatrix]| -> Result<(StochasticMatrix, ExtReal)> {
        let prod = tensor_product(fs)?.with_space(space.clone())?;
        let v = f_div_chains(pi, p, &prod, f)?;
        Ok((prod, v))
    };
    let (mut product, mut current) = eval(&factors)?;
    let mut trace = vec![current];
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < opts.max_iters {
        let before = current;
        for i in 0..d {
            let others: Vec<StochasticMatrix> = factors
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, m)| m.clone())
                .collect();
            factors[i] = prescribed_projection(p, pi, i, &others, f)?;
            (product, current) = eval(&factors)?;
            trace.push(current);
        }
        sweeps += 1;
        if matches!(f.kind(), GeneratorKind::Kl) || before.slack(current) < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(DescentResult { factors, product, divergence: current, trace, sweeps, converged })
}
