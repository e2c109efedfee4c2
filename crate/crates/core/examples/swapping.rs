// The two-temperature swapping chain on {0,1}^3, its projection sampler,
// and the ledger of speedup relations.

use mcgeo::swapping::{simulate_projection_sampler, speedup_report, GibbsLadder, SwapConfig};

pub fn run_example() -> mcgeo::Result<()> {
    // energy counts the ones, with a deep well at 111
    let mut energy: Vec<f64> = (0..8u32).map(|x| x.count_ones() as f64 * 0.5).collect();
    energy[7] = -1.0;
    let cfg = SwapConfig::hypercube(3, energy, vec![0.0, 1.0])?;

    let report = speedup_report(&cfg)?;
    println!(
        "gamma(P_sw) = {:.5}, gamma(P_proj) = {:.5}, escape = {}",
        report.swapping.gamma, report.projection.gamma, report.escape
    );
    for claim in report.ledger.iter().filter(|c| c.asserted) {
        println!("  [{}] {}: residual {:.3e}", if claim.holds { "ok" } else { "violated" }, claim.name, claim.residual);
    }

    let run = simulate_projection_sampler(&cfg, 42, 50_000, 2)?;
    let target = &GibbsLadder::new(&cfg)?.dists[1];
    println!("sampler TV to pi_beta after 50000 steps: {:.4}", run.empirical.total_variation(target));
    Ok(())
}

#[allow(dead_code)]
fn main() -> mcgeo::Result<()> {
    run_example()
}
