// Product state spaces, tensor products, stationary laws and time reversal.

use mcgeo::{
    edge_measure, stationary_distribution, tensor_product, time_reversal, ProductStateSpace, StochasticMatrix,
};

pub fn run_example() -> mcgeo::Result<()> {
    let bit = ProductStateSpace::single(2)?;
    let a = StochasticMatrix::from_rows(bit.clone(), &[vec![0.9, 0.1], vec![0.2, 0.8]])?;
    let b = StochasticMatrix::from_rows(bit, &[vec![0.6, 0.4], vec![0.3, 0.7]])?;
    let p = tensor_product(&[a.clone(), b])?;
    println!("A ⊗ B on {:?}: P((0,0),(1,1)) = {:.4}", p.space().factor_sizes(), p.get(0, 3));

    let pi = stationary_distribution(&p)?;
    println!("stationary law {:?}", pi.mass());
    println!("product law: {}", pi.is_product(1e-12));

    let rev = time_reversal(&a, &stationary_distribution(&a)?)?;
    println!("two-state chains are reversible: max |A* - A| = {:.1e}", rev.max_abs_diff(&a));

    let q = edge_measure(&pi, &p)?;
    let gap = q
        .first_marginal()
        .iter()
        .zip(q.second_marginal())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("edge measure marginals agree up to {gap:.1e}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> mcgeo::Result<()> {
    run_example()
}
