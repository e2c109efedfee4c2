// Closest product chain, the Pythagorean identity, and coordinate descent
// for non-KL divergences.

use mcgeo::projection::{closest_product_kl, coordinate_descent, independence_kl, DescentOptions};
use mcgeo::{kl_rate, random, tensor_product, DivergenceGenerator, ProductStateSpace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> mcgeo::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let space = ProductStateSpace::binary(3)?;
    let pi = random::product_distribution(&space, &mut rng);
    let p = random::stationary(&pi, &mut rng)?;

    let proj = closest_product_kl(&p, &pi)?;
    println!("distance to independence I(P) = {}", proj.divergence_to_input);

    // any other product chain is farther by exactly the factor divergences
    let ls = random::product_chain_factors(&space, &mut rng);
    let l = tensor_product(&ls)?.with_space(space.clone())?;
    let lhs = kl_rate(&pi, &p, &l)?;
    let mut rhs = independence_kl(&p, &pi)?;
    for (i, (pi_i, li)) in proj.factors.iter().zip(&ls).enumerate() {
        let marg = pi.marginal(&mcgeo::CoordinateSubset::singleton(3, i)?);
        rhs = rhs + kl_rate(&marg, pi_i, &li.clone().with_space(marg.space().clone())?)?;
    }
    println!("D(P || ⊗L) = {lhs}, I(P) + Σ D(P_i || L_i) = {rhs}");

    let f = DivergenceGenerator::alpha(0.5)?;
    let run = coordinate_descent(&p, &pi, &f, None, DescentOptions::default())?;
    println!(
        "alpha(0.5) descent: {} sweeps, divergence {} (started at {})",
        run.sweeps,
        run.divergence,
        run.trace[0]
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> mcgeo::Result<()> {
    run_example()
}
