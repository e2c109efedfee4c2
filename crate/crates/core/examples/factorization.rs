// Partition-factorizable projections and the clique candidate on a path graph.

use mcgeo::factorization::{clique_candidate, independence_decomposition, CliqueCover, Partition};
use mcgeo::{random, CoordinateSubset, ProductStateSpace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> mcgeo::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let space = ProductStateSpace::binary(3)?;
    let pi = random::distribution(&space, &mut rng);
    let p = random::reversible(&pi, 0.2, 1.0, &mut rng)?;

    let part = Partition::parse_one_based(3, "1,2|3")?;
    let dec = independence_decomposition(&p, &pi, &part)?;
    println!(
        "I(P) = {} = {} (to the partition family) + {:?} (inside blocks), residual {:.1e}",
        dec.total, dec.to_factorizability, dec.per_block, dec.residual
    );

    // path graph 1 - 2 - 3 covered by its two edges
    let cliques = vec![CoordinateSubset::new(3, [0, 1])?, CoordinateSubset::new(3, [1, 2])?];
    let cover = CliqueCover::from_edges(3, &[(0, 1), (1, 2)], cliques)?;
    let cand = clique_candidate(&p, &pi, &cover)?;
    println!("clique candidate normalizers Z(x) = {:?}", cand.normalizers);
    Ok(())
}

#[allow(dead_code)]
fn main() -> mcgeo::Result<()> {
    run_example()
}
