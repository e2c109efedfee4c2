// f-divergences between two chains weighted by a stationary law.

use mcgeo::{f_div_chains, Distribution, DivergenceGenerator, ProductStateSpace, StochasticMatrix};

pub fn run_example() -> mcgeo::Result<()> {
    let sp = ProductStateSpace::single(2)?;
    let m = StochasticMatrix::from_rows(sp.clone(), &[vec![0.5, 0.5], vec![0.5, 0.5]])?;
    let l = StochasticMatrix::from_rows(sp.clone(), &[vec![0.9, 0.1], vec![0.2, 0.8]])?;
    let pi = Distribution::uniform(sp);
    let generators = [
        ("kl", DivergenceGenerator::kl()),
        ("reverse kl", DivergenceGenerator::reverse_kl()),
        ("alpha 0.5", DivergenceGenerator::alpha(0.5)?),
        ("hellinger²", DivergenceGenerator::squared_hellinger()),
    ];
    for (name, f) in &generators {
        println!("{name:>11}: D(M || L) = {}", f_div_chains(&pi, &m, &l, f)?);
    }
    // a zero in L where M has mass makes KL infinite
    let hard = StochasticMatrix::from_rows(m.space().clone(), &[vec![1.0, 0.0], vec![0.0, 1.0]])?;
    println!("KL to the identity: {}", f_div_chains(&pi, &m, &hard, &DivergenceGenerator::kl())?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> mcgeo::Result<()> {
    run_example()
}
