// Han and Shearer inequalities and the exhaustive submodularity scan.

use mcgeo::inequality::{han_check, modularity_scan, shearer_independence_check, Functional, SubsetCoverSpec};
use mcgeo::{random, CoordinateSubset, ProductStateSpace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> mcgeo::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let space = ProductStateSpace::binary(3)?;
    let pi = random::product_distribution(&space, &mut rng);
    let p = random::stationary(&pi, &mut rng)?;
    let ls = random::product_chain_factors(&space, &mut rng);

    let han = han_check(&pi, &p, &ls)?;
    println!("Han: {} >= {} (slack {:.3e})", han.lhs, han.rhs, han.slack);

    let pairs = vec![
        CoordinateSubset::new(3, [0, 1])?,
        CoordinateSubset::new(3, [1, 2])?,
        CoordinateSubset::new(3, [0, 2])?,
    ];
    let shearer = shearer_independence_check(&pi, &p, &SubsetCoverSpec::tight(3, pairs)?)?;
    println!("Shearer on I(P): slack {:.3e}", shearer.slack);

    for g in [Functional::EntropyRate, Functional::FactorizabilityDistance, Functional::DistanceToIndependence] {
        let scan = modularity_scan(&p, &pi, g)?;
        println!("{g:?}: {} triples, min slack {:.3e}, holds {}", scan.triples, scan.min_modularity_slack, scan.holds);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> mcgeo::Result<()> {
    run_example()
}
