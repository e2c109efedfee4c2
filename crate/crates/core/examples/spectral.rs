// Spectral gap, log-Sobolev bracket, Cheeger constant, hitting times and
// the L² mixing time of a reversible chain.

use mcgeo::spectral::{cheeger_constant, hitting_analysis, l2_mixing_time, log_sobolev_bracket, spectral_gap};
use mcgeo::swapping::hypercube_walk;
use mcgeo::Distribution;

pub fn run_example() -> mcgeo::Result<()> {
    let p = hypercube_walk(3)?;
    let pi = Distribution::uniform(p.space().clone());
    let gamma = spectral_gap(&p, &pi)?;
    let ls = log_sobolev_bracket(&p, &pi)?;
    println!("flip walk on {{0,1}}^3: gamma = {gamma:.6}, Cheeger = {:.6}", cheeger_constant(&p, &pi)?);
    println!("log-Sobolev in [{:.4}, {:.4}], estimate {:.6}", ls.lower, ls.upper, ls.numeric);

    let hit = hitting_analysis(&p, &pi, 1)?;
    println!("commute time t_c = {:.4}, average hitting time t_av = {:.4}", hit.t_c, hit.t_av);

    let t = l2_mixing_time(&p, &pi, (-1.0f64).exp())?;
    println!("T_mix(1/e) = {t:.6}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> mcgeo::Result<()> {
    run_example()
}
