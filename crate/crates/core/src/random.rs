//! Seeded random instances: stochastic matrices, distributions, reversible
//! and lazy chains with a prescribed stationary law, and sample paths.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::Result;
use crate::state::{Distribution, ProductStateSpace, StochasticMatrix};

// Dirichlet(1) weight; strictly positive.
fn expo<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    -(1.0 - rng.random::<f64>()).ln() + 1e-300
}

pub fn distribution<R: Rng + ?Sized>(space: &ProductStateSpace, rng: &mut R) -> Distribution {
    let w = (0..space.total()).map(|_| expo(rng)).collect();
    Distribution::from_weights(space.clone(), w).expect("positive weights")
}

/// Product of independent random one-dimensional laws.
pub fn product_distribution<R: Rng + ?Sized>(space: &ProductStateSpace, rng: &mut R) -> Distribution {
    let parts: Vec<Distribution> = space
        .factor_sizes()
        .iter()
        .map(|&n| distribution(&ProductStateSpace::single(n).unwrap(), rng))
        .collect();
    Distribution::product(&parts)
        .and_then(|p| p.with_space(space.clone()))
        .expect("same size")
}

/// Rows drawn independently from Dirichlet(1); entrywise positive.
pub fn stochastic<R: Rng + ?Sized>(space: &ProductStateSpace, rng: &mut R) -> StochasticMatrix {
    let n = space.total();
    let m = DMatrix::from_fn(n, n, |_, _| expo(rng));
    StochasticMatrix::normalize_rows(space.clone(), m).expect("positive rows")
}

/// Like [`stochastic`], but each off-diagonal entry is kept with
/// probability `density`. The diagonal is always kept.
pub fn sparse_stochastic<R: Rng + ?Sized>(
    space: &ProductStateSpace,
    density: f64,
    rng: &mut R,
) -> StochasticMatrix {
    let n = space.total();
    let m = DMatrix::from_fn(n, n, |x, y| {
        if x == y || rng.random::<f64>() < density {
            expo(rng)
        } else {
            0.0
        }
    });
    StochasticMatrix::normalize_rows(space.clone(), m).expect("diagonal keeps rows positive")
}

/// Tensor product of random factor chains, one per coordinate.
pub fn product_chain_factors<R: Rng + ?Sized>(
    space: &ProductStateSpace,
    rng: &mut R,
) -> Vec<StochasticMatrix> {
    space
        .factor_sizes()
        .iter()
        .map(|&n| stochastic(&ProductStateSpace::single(n).unwrap(), rng))
        .collect()
}

/// A `pi`-reversible chain from random symmetric conductances. Every row
/// keeps at least `hold` of its mass on the diagonal, so `hold = 0.5`
/// yields a lazy chain. `density` thins the conductances.
pub fn reversible<R: Rng + ?Sized>(
    pi: &Distribution,
    hold: f64,
    density: f64,
    rng: &mut R,
) -> Result<StochasticMatrix> {
    pi.require_positive()?;
    let n = pi.len();
    let mut c = DMatrix::zeros(n, n);
    for x in 0..n {
        for y in x + 1..n {
            if rng.random::<f64>() < density {
                let w = expo(rng);
                c[(x, y)] = w;
                c[(y, x)] = w;
            }
        }
    }
    let worst = (0..n)
        .map(|x| c.row(x).sum() / pi.get(x))
        .fold(0.0, f64::max);
    let scale = if worst > 0.0 { (1.0 - hold) / worst } else { 0.0 };
    let mut m = DMatrix::from_fn(n, n, |x, y| scale * c[(x, y)] / pi.get(x));
    for x in 0..n {
        let off: f64 = m.row(x).sum();
        m[(x, x)] = 1.0 - off;
    }
    StochasticMatrix::new(pi.space().clone(), m)
}

/// A `pi`-stationary chain that is generally not reversible: the product of
/// two independent `pi`-reversible chains.
pub fn stationary<R: Rng + ?Sized>(pi: &Distribution, rng: &mut R) -> Result<StochasticMatrix> {
    let a = reversible(pi, 0.0, 1.0, rng)?;
    let b = reversible(pi, 0.0, 1.0, rng)?;
    a.compose(&b)
}

/// Sample path of `steps` states started at `start`.
pub fn sample_path<R: Rng + ?Sized>(
    p: &StochasticMatrix,
    start: usize,
    steps: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut path = Vec::with_capacity(steps);
    let mut x = start;
    for _ in 0..steps {
        path.push(x);
        x = draw(p.matrix().row(x).iter().copied(), rng);
    }
    path
}

/// Inverse-CDF draw from a finite mass function given as an iterator.
pub(crate) fn draw<R: Rng + ?Sized>(mass: impl Iterator<Item = f64>, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (k, v) in mass.enumerate() {
        if v > 0.0 {
            last = k;
            acc += v;
            if u < acc {
                return k;
            }
        }
    }
    last
}
