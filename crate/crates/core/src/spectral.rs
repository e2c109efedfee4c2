//! Mixing parameters of reversible chains: spectral gap, log-Sobolev
//! bracket, Cheeger constant, hitting and commute times, heat kernel and
//! the L² mixing time, plus the contraction report along nested subsets.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ext;
use crate::inequality::{kl_contraction, KlContraction, SLACK_TOL};
use crate::projection::keep_in;
use crate::state::{
    same_space, stationary_distribution, tensor_blocks, time_reversal, CoordinateSubset, Distribution,
    StochasticMatrix, REVERSIBLE_TOL, STATIONARY_TOL,
};

/// Largest state space for the exhaustive Cheeger scan.
pub const CHEEGER_MAX_STATES: usize = 22;

/// Eigen-decomposition of `D^{1/2} P D^{-1/2}`, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct ReversibleSpectrum {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors of the symmetrized matrix, one per column.
    pub vectors: DMatrix<f64>,
    pub sqrt_pi: Vec<f64>,
}

impl ReversibleSpectrum {
    /// Right eigenfunction `psi_j = u_j / sqrt(pi)`, unit norm in `L²(pi)`.
    pub fn eigenfunction(&self, j: usize) -> Vec<f64> {
        self.vectors
            .column(j)
            .iter()
            .zip(&self.sqrt_pi)
            .map(|(u, s)| u / s)
            .collect()
    }
}

fn additive_reversibilization_gap(p: &StochasticMatrix, pi: &Distribution) -> Option<f64> {
    let star = time_reversal(p, pi).ok()?;
    let sym = StochasticMatrix::new(p.space().clone(), (p.matrix() + star.matrix()) * 0.5).ok()?;
    symmetric_spectrum(&sym, pi).ok().map(|s| 1.0 - s.values[1])
}

/// Irreducible, positive `pi`, detailed balance within `REVERSIBLE_TOL`.
pub fn require_reversible(p: &StochasticMatrix, pi: &Distribution) -> Result<()> {
    same_space(p.space(), pi.space())?;
    pi.require_positive()?;
    p.check_irreducible()?;
    if p.n() < 2 {
        return Err(Error::domain("spectral quantities need at least two states"));
    }
    let residual = p.detailed_balance_residual(pi);
    if residual > REVERSIBLE_TOL {
        let variational_gap = if p.stationarity_residual(pi) <= STATIONARY_TOL {
            additive_reversibilization_gap(p, pi)
        } else {
            None
        };
        return Err(Error::NotReversible { residual, variational_gap });
    }
    Ok(())
}

fn symmetric_spectrum(p: &StochasticMatrix, pi: &Distribution) -> Result<ReversibleSpectrum> {
    let n = p.n();
    let sqrt_pi: Vec<f64> = pi.mass().iter().map(|v| v.sqrt()).collect();
    let m = p.matrix();
    let s = DMatrix::from_fn(n, n, |x, y| {
        let a = sqrt_pi[x] * m[(x, y)] / sqrt_pi[y];
        let b = sqrt_pi[y] * m[(y, x)] / sqrt_pi[x];
        0.5 * (a + b)
    });
    let eig = SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let vectors = DMatrix::from_fn(n, n, |x, k| eig.eigenvectors[(x, order[k])]);
    Ok(ReversibleSpectrum { values, vectors, sqrt_pi })
}

pub fn spectrum(p: &StochasticMatrix, pi: &Distribution) -> Result<ReversibleSpectrum> {
    require_reversible(p, pi)?;
    symmetric_spectrum(p, pi)
}

/// Right spectral gap `1 - lambda_2`.
pub fn spectral_gap(p: &StochasticMatrix, pi: &Distribution) -> Result<f64> {
    Ok(1.0 - spectrum(p, pi)?.values[1])
}

/// `(1/2) sum pi(x) P(x,y) (f(x) - f(y))²`.
pub fn dirichlet_form(p: &StochasticMatrix, pi: &Distribution, f: &[f64]) -> f64 {
    let m = p.matrix();
    let n = p.n();
    let mut acc = 0.0;
    for x in 0..n {
        for y in 0..n {
            let diff = f[x] - f[y];
            acc += pi.get(x) * m[(x, y)] * diff * diff;
        }
    }
    0.5 * acc
}

pub fn variance(pi: &Distribution, f: &[f64]) -> f64 {
    let mean: f64 = pi.mass().iter().zip(f).map(|(w, v)| w * v).sum();
    pi.mass().iter().zip(f).map(|(w, v)| w * (v - mean) * (v - mean)).sum()
}

// (1 + d) ln(1 + d) - d, by series near 0 where the direct form cancels
fn phi(d: f64) -> f64 {
    if d.abs() < 1e-3 {
        let d2 = d * d;
        d2 * (0.5 - d / 6.0 + d2 / 12.0 - d2 * d / 20.0 + d2 * d2 / 30.0)
    } else {
        (1.0 + d) * d.ln_1p() - d
    }
}

/// `Ent_pi(f²) = E[f² ln(f² / E f²)]`.
pub fn entropy_of_square(pi: &Distribution, f: &[f64]) -> f64 {
    let m: f64 = pi.mass().iter().zip(f).map(|(w, v)| w * v * v).sum();
    if m <= 0.0 {
        return 0.0;
    }
    m * pi
        .mass()
        .iter()
        .zip(f)
        .map(|(w, v)| w * phi(v * v / m - 1.0))
        .sum::<f64>()
}

#[derive(Debug, Clone, Copy)]
pub struct LogSobolevOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for LogSobolevOptions {
    fn default() -> Self {
        Self { restarts: 32, max_iters: 400, seed: 0x51ed_2024 }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LogSobolevBracket {
    pub lower: f64,
    pub upper: f64,
    /// Best Dirichlet-to-entropy quotient found, clipped into the bracket.
    pub numeric: f64,
    /// The unclipped minimum found by the search.
    pub raw_numeric: f64,
}

struct Quotient<'a> {
    a: DMatrix<f64>,
    pi: &'a [f64],
}

impl Quotient<'_> {
    // f is normalized to E f² = 1 on entry
    fn eval(&self, f: &DVector<f64>) -> Option<(f64, DVector<f64>)> {
        let af = &self.a * f;
        let num = f.dot(&af);
        let ent: f64 = self.pi.iter().zip(f.iter()).map(|(w, v)| w * phi(v * v - 1.0)).sum();
        // near-constant f: the quotient is dominated by rounding below this
        if !(ent > 1e-10) {
            return None;
        }
        let r = num / ent;
        let grad_ent = DVector::from_iterator(
            f.len(),
            self.pi.iter().zip(f.iter()).map(|(w, &v)| {
                if v == 0.0 {
                    0.0
                } else {
                    2.0 * w * v * (v * v).ln()
                }
            }),
        );
        let g = (af * 2.0 - grad_ent * r) / ent;
        Some((r, g))
    }

    fn normalize(&self, f: &mut DVector<f64>) -> bool {
        let m: f64 = self.pi.iter().zip(f.iter()).map(|(w, v)| w * v * v).sum();
        if !(m > 0.0 && m.is_finite()) {
            return false;
        }
        *f /= m.sqrt();
        true
    }

    fn descend(&self, mut f: DVector<f64>, max_iters: usize) -> f64 {
        if !self.normalize(&mut f) {
            return f64::INFINITY;
        }
        let Some((mut r, mut g)) = self.eval(&f) else {
            return f64::INFINITY;
        };
        let mut step = 1.0 / g.norm().max(1e-12) * 0.1;
        for _ in 0..max_iters {
            let mut improved = false;
            for _ in 0..40 {
                let mut cand = &f - &g * step;
                if self.normalize(&mut cand) {
                    if let Some((rc, gc)) = self.eval(&cand) {
                        if rc < r {
                            let gain = r - rc;
                            f = cand;
                            r = rc;
                            g = gc;
                            step *= 1.5;
                            improved = gain > 1e-14 * r.abs();
                            break;
                        }
                    }
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        r
    }
}

/// Certified bracket `[lower, upper]` for the log-Sobolev constant with a
/// numerical estimate from multi-start gradient descent on the sphere.
pub fn log_sobolev_bracket(p: &StochasticMatrix, pi: &Distribution) -> Result<LogSobolevBracket> {
    log_sobolev_bracket_with(p, pi, LogSobolevOptions::default())
}

pub fn log_sobolev_bracket_with(
    p: &StochasticMatrix,
    pi: &Distribution,
    opts: LogSobolevOptions,
) -> Result<LogSobolevBracket> {
    let spec = spectrum(p, pi)?;
    let gamma = 1.0 - spec.values[1];
    let upper = gamma / 2.0;
    let pstar = pi.min_mass();
    let lower = if 1.0 - 2.0 * pstar < 1e-12 {
        // uniform two-point space: the constant is exactly gamma / 2
        upper
    } else {
        gamma * (1.0 - 2.0 * pstar) / (1.0 / pstar - 1.0).ln()
    };

    let n = p.n();
    let m = p.matrix();
    let a = DMatrix::from_fn(n, n, |x, y| {
        let d = if x == y { pi.get(x) } else { 0.0 };
        d - 0.5 * (pi.get(x) * m[(x, y)] + pi.get(y) * m[(y, x)])
    });
    let q = Quotient { a, pi: pi.mass() };

    let psi = spec.eigenfunction(1);
    let mut starts: Vec<DVector<f64>> = Vec::new();
    for t in [0.5, -0.5, 0.1, -0.1, 0.02, -0.02] {
        starts.push(DVector::from_iterator(n, psi.iter().map(|v| 1.0 + t * v)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    while starts.len() < opts.restarts {
        let k = starts.len();
        let f = if k.is_multiple_of(2) {
            // random perturbation of the second eigenfunction
            let t: f64 = rng.random_range(0.05..1.0);
            DVector::from_iterator(n, psi.iter().map(|v| 1.0 + t * v + 0.1 * t * (rng.random::<f64>() - 0.5)))
        } else {
            DVector::from_iterator(n, (0..n).map(|_| rng.random::<f64>().powi(3) + 1e-3))
        };
        starts.push(f);
    }
    starts.truncate(opts.restarts.max(1));
    let raw_numeric = starts
        .into_par_iter()
        .map(|f| q.descend(f, opts.max_iters))
        .reduce(|| f64::INFINITY, f64::min);
    let numeric = raw_numeric.clamp(lower, upper);
    Ok(LogSobolevBracket { lower, upper, numeric, raw_numeric })
}

/// `min over 0 < pi(A) <= 1/2 of (pi ⊠ P)(A, A^c) / pi(A)` by exhaustive
/// Gray-code enumeration of subsets.
pub fn cheeger_constant(p: &StochasticMatrix, pi: &Distribution) -> Result<f64> {
    same_space(p.space(), pi.space())?;
    pi.require_positive()?;
    let n = p.n();
    if n > CHEEGER_MAX_STATES {
        return Err(Error::SizeGuard(format!(
            "exhaustive Cheeger scan over {n} states needs 2^{n} = {} subsets; the limit is {CHEEGER_MAX_STATES} states",
            1u128 << n
        )));
    }
    if n < 2 {
        return Err(Error::domain("the Cheeger constant needs at least two states"));
    }
    let m = p.matrix();
    let q: Vec<f64> = (0..n * n).map(|k| pi.get(k / n) * m[(k / n, k % n)]).collect();
    let w = pi.mass();
    let exact = |mask: u64| -> (f64, f64) {
        let mut flow = 0.0;
        let mut mass = 0.0;
        for x in (0..n).filter(|&x| mask >> x & 1 == 1) {
            mass += w[x];
            for y in (0..n).filter(|&y| mask >> y & 1 == 0) {
                flow += q[x * n + y];
            }
        }
        (flow, mass)
    };
    let low = n.min(14);
    let high = n - low;
    let limit = 0.5 + 1e-12;
    let best = (0u64..1 << high)
        .into_par_iter()
        .map(|h| {
            let mut mask = h << low;
            let (mut flow, mut mass) = exact(mask);
            let mut best = (f64::INFINITY, 0u64);
            let consider = |flow: f64, mass: f64, mask: u64, best: &mut (f64, u64)| {
                if mass > 0.0 && mass <= limit {
                    let v = flow / mass;
                    if v < best.0 || (v == best.0 && mask < best.1) {
                        *best = (v, mask);
                    }
                }
            };
            consider(flow, mass, mask, &mut best);
            for k in 1u64..1 << low {
                let v = k.trailing_zeros() as usize;
                let bit = 1u64 << v;
                let adding = mask & bit == 0;
                for y in (0..n).filter(|&y| y != v) {
                    let in_a = mask >> y & 1 == 1;
                    match (adding, in_a) {
                        (true, true) => flow -= q[y * n + v],
                        (true, false) => flow += q[v * n + y],
                        (false, true) => flow += q[y * n + v],
                        (false, false) => flow -= q[v * n + y],
                    }
                }
                mask ^= bit;
                mass += if adding { w[v] } else { -w[v] };
                consider(flow, mass, mask, &mut best);
            }
            best
        })
        .reduce(
            || (f64::INFINITY, 0),
            |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    let (flow, mass) = exact(best.1);
    Ok(flow / mass)
}

#[derive(Debug, Clone, Serialize)]
pub struct HittingReport {
    /// `hit[x][y] = E_x tau_y`.
    pub hit: Vec<Vec<f64>>,
    pub commute: Vec<Vec<f64>>,
    pub t_c: f64,
    pub t_av: f64,
    /// Random admissible test functions checked against the commute times.
    pub variational_checks: usize,
    /// Largest `1/D(f,f) - commute(x,y)`; at most `1e-8` when consistent.
    #[serde(with = "ext::signed_inf")]
    pub variational_max_excess: f64,
}

/// Mean hitting times by one dense solve per target state.
pub fn hitting_times(p: &StochasticMatrix) -> Result<DMatrix<f64>> {
    p.check_irreducible()?;
    let n = p.n();
    let m = p.matrix();
    let cols: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|y| {
            let idx: Vec<usize> = (0..n).filter(|&x| x != y).collect();
            let k = idx.len();
            if k == 0 {
                return Ok(vec![0.0]);
            }
            let a = DMatrix::from_fn(k, k, |i, j| f64::from(i == j) - m[(idx[i], idx[j])]);
            let h = a
                .lu()
                .solve(&DVector::from_element(k, 1.0))
                .ok_or_else(|| Error::domain(format!("hitting-time system for target {y} is singular")))?;
            let mut col = vec![0.0; n];
            for (i, &x) in idx.iter().enumerate() {
                col[x] = h[i];
            }
            Ok(col)
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(n, n, |x, y| cols[y][x]))
}

/// Hitting, commute and average hitting times. For a reversible pair the
/// commute times are also checked from below against `1/D(f,f)` for seeded
/// random test functions with `f(x) = 1`, `f(y) = 0`.
pub fn hitting_analysis(p: &StochasticMatrix, pi: &Distribution, seed: u64) -> Result<HittingReport> {
    same_space(p.space(), pi.space())?;
    let h = hitting_times(p)?;
    let n = p.n();
    let commute = DMatrix::from_fn(n, n, |x, y| h[(x, y)] + h[(y, x)]);
    let t_c = commute.max();
    let mut t_av = 0.0;
    for x in 0..n {
        for y in 0..n {
            t_av += pi.get(x) * pi.get(y) * h[(x, y)];
        }
    }
    let mut checks = 0;
    let mut excess = f64::NEG_INFINITY;
    if n >= 2 && pi.is_positive() && p.detailed_balance_residual(pi) <= REVERSIBLE_TOL {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let x = rng.random_range(0..n);
            let y = (x + rng.random_range(1..n)) % n;
            let mut f: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            f[x] = 1.0;
            f[y] = 0.0;
            let e = dirichlet_form(p, pi, &f);
            excess = excess.max(1.0 / e - commute[(x, y)]);
            checks += 1;
        }
    }
    let rows = |m: &DMatrix<f64>| (0..n).map(|x| m.row(x).iter().copied().collect()).collect();
    Ok(HittingReport {
        hit: rows(&h),
        commute: rows(&commute),
        t_c,
        t_av,
        variational_checks: checks,
        variational_max_excess: excess,
    })
}

fn taylor_exp(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max);
    let mut s = 0;
    while norm / f64::from(1u32 << s.min(30)) > 0.5 && s < 60 {
        s += 1;
    }
    let scaled = a / 2f64.powi(s);
    let mut term = DMatrix::identity(n, n);
    let mut sum = DMatrix::identity(n, n);
    for k in 1..=24 {
        term = &term * &scaled / k as f64;
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// `H_t = exp(t (P - I))`.
pub fn heat_kernel(p: &StochasticMatrix, t: f64) -> Result<StochasticMatrix> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::arg(format!("heat-kernel time must be a finite t >= 0, got {t}")));
    }
    let n = p.n();
    if t == 0.0 {
        return Ok(StochasticMatrix::identity(p.space().clone()));
    }
    let reversible = stationary_distribution(p)
        .ok()
        .filter(|pi| pi.is_positive() && p.detailed_balance_residual(pi) <= REVERSIBLE_TOL);
    let m = match reversible {
        Some(pi) => {
            let spec = symmetric_spectrum(p, &pi)?;
            let scale: Vec<f64> = spec.values.iter().map(|l| (t * (l - 1.0)).exp()).collect();
            let u = &spec.vectors;
            let mut core = u.clone();
            for (j, s) in scale.iter().enumerate() {
                core.column_mut(j).scale_mut(*s);
            }
            let sym = core * u.transpose();
            DMatrix::from_fn(n, n, |x, y| sym[(x, y)] * spec.sqrt_pi[y] / spec.sqrt_pi[x])
        }
        None => {
            let a = (p.matrix() - DMatrix::identity(n, n)) * t;
            taylor_exp(&a)
        }
    };
    let cleaned = m.map(|v| if v < 0.0 && v > -1e-13 { 0.0 } else { v });
    StochasticMatrix::new(p.space().clone(), cleaned)
}

/// Worst-case `L²(pi)` distance of `H_t(x, .)` from `pi`, from the spectrum.
pub fn l2_distance(spec: &ReversibleSpectrum, t: f64) -> f64 {
    let n = spec.values.len();
    (0..n)
        .map(|x| {
            (1..n)
                .map(|j| {
                    let psi = spec.vectors[(x, j)] / spec.sqrt_pi[x];
                    (-2.0 * t * (1.0 - spec.values[j])).exp() * psi * psi
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
        .sqrt()
}

/// The same distance computed from the heat-kernel matrix.
pub fn l2_distance_direct(p: &StochasticMatrix, pi: &Distribution, t: f64) -> Result<f64> {
    let h = heat_kernel(p, t)?;
    let n = p.n();
    Ok((0..n)
        .map(|x| {
            (0..n)
                .map(|y| {
                    let r = h.get(x, y) / pi.get(y) - 1.0;
                    pi.get(y) * r * r
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
        .sqrt())
}

/// `inf { t >= 0 : max_x ||H_t(x,.)/pi - 1||_{L²(pi)} < eps }`.
pub fn l2_mixing_time(p: &StochasticMatrix, pi: &Distribution, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::arg("eps must be positive"));
    }
    let spec = spectrum(p, pi)?;
    if l2_distance(&spec, 0.0) <= eps {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while l2_distance(&spec, hi) >= eps {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::domain("mixing time exceeds 1e12"));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-10 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if l2_distance(&spec, mid) < eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub gamma: f64,
    pub t_rel: f64,
    pub alpha_lower: f64,
    pub alpha_upper: f64,
    pub alpha_numeric: f64,
    pub cheeger: Option<f64>,
    pub eigenvalues: Vec<f64>,
    pub pi_min: f64,
}

pub fn spectral_report(p: &StochasticMatrix, pi: &Distribution, with_cheeger: bool) -> Result<SpectralReport> {
    let spec = spectrum(p, pi)?;
    let gamma = 1.0 - spec.values[1];
    let ls = log_sobolev_bracket(p, pi)?;
    let cheeger = if with_cheeger { Some(cheeger_constant(p, pi)?) } else { None };
    Ok(SpectralReport {
        gamma,
        t_rel: 1.0 / gamma,
        alpha_lower: ls.lower,
        alpha_upper: ls.upper,
        alpha_numeric: ls.numeric,
        cheeger,
        eigenvalues: spec.values,
        pi_min: pi.min_mass(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelSummary {
    pub subset: CoordinateSubset,
    pub states: usize,
    pub gamma: f64,
    pub alpha_lower: f64,
    pub alpha_upper: f64,
    pub alpha_numeric: f64,
    pub cheeger: Option<f64>,
    pub t_c: f64,
    pub t_av: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotoneChain {
    pub name: &'static str,
    pub values: [f64; 3],
    /// Both consecutive slacks, oriented so that non-negative means the
    /// claimed direction holds.
    pub slacks: [f64; 2],
    pub holds: bool,
    /// Advisory chains are reported but not part of the verdict.
    pub advisory: bool,
}

impl MonotoneChain {
    fn new(name: &'static str, values: [f64; 3], increasing: bool, tol: f64, advisory: bool) -> Self {
        let sign = if increasing { 1.0 } else { -1.0 };
        let slacks = [sign * (values[1] - values[0]), sign * (values[2] - values[1])];
        let holds = slacks.iter().all(|&s| s >= -tol);
        Self { name, values, slacks, holds, advisory }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TensorGapCheck {
    pub gamma: f64,
    pub gamma_tensor: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    pub levels: [LevelSummary; 3],
    pub chains: Vec<MonotoneChain>,
    pub kl: KlContraction,
    /// `gamma(P) <= gamma(P^(S) ⊗ P^(-S))`, evaluated for lazy `P` and a
    /// proper non-empty `S`.
    pub tensor_gap: Option<TensorGapCheck>,
    pub holds: bool,
}

fn level(p: &StochasticMatrix, pi: &Distribution, s: &CoordinateSubset) -> Result<LevelSummary> {
    let ps = keep_in(p, pi, s)?;
    let pis = pi.marginal(s);
    let gamma = spectral_gap(&ps, &pis)?;
    let ls = log_sobolev_bracket(&ps, &pis)?;
    let cheeger = if ps.n() <= CHEEGER_MAX_STATES { Some(cheeger_constant(&ps, &pis)?) } else { None };
    let hit = hitting_analysis(&ps, &pis, 0)?;
    Ok(LevelSummary {
        subset: s.clone(),
        states: ps.n(),
        gamma,
        alpha_lower: ls.lower,
        alpha_upper: ls.upper,
        alpha_numeric: ls.numeric,
        cheeger,
        t_c: hit.t_c,
        t_av: hit.t_av,
    })
}

/// Tabulate the mixing parameters of `P`, `P^(S)` and `P^(T)` for
/// `T ⊆ S` and check that each moves in the contracting direction.
pub fn contraction_report(
    p: &StochasticMatrix,
    pi: &Distribution,
    s: &CoordinateSubset,
    t: &CoordinateSubset,
) -> Result<ContractionReport> {
    require_reversible(p, pi)?;
    if !t.is_subset_of(s) || t.is_empty() {
        return Err(Error::arg(format!("need a non-empty T ⊆ S, got T = {t}, S = {s}")));
    }
    let d = p.space().d();
    let levels = [level(p, pi, &CoordinateSubset::full(d))?, level(p, pi, s)?, level(p, pi, t)?];
    let pick = |f: fn(&LevelSummary) -> f64| [f(&levels[0]), f(&levels[1]), f(&levels[2])];
    let mut chains = vec![
        MonotoneChain::new("gamma", pick(|l| l.gamma), true, SLACK_TOL, false),
        MonotoneChain::new("t_c", pick(|l| l.t_c), false, SLACK_TOL, false),
        MonotoneChain::new("t_av", pick(|l| l.t_av), false, SLACK_TOL, false),
        MonotoneChain::new("alpha_numeric", pick(|l| l.alpha_numeric), true, 1e-3, true),
    ];
    if levels.iter().all(|l| l.cheeger.is_some()) {
        chains.push(MonotoneChain::new("cheeger", pick(|l| l.cheeger.unwrap()), true, SLACK_TOL, false));
    }
    let kl = kl_contraction(p, pi, s, t)?;
    let tensor_gap = if p.is_lazy() && !s.is_empty() && !s.is_full() {
        let rest = s.complement();
        let pairs = [(s.clone(), keep_in(p, pi, s)?), (rest.clone(), keep_in(p, pi, &rest)?)];
        let prod = tensor_blocks(p.space(), &pairs)?;
        let margs = [pi.marginal(s), pi.marginal(&rest)];
        let prod_pi = product_on_blocks(pi, &[s.clone(), rest], &margs)?;
        let gamma = levels[0].gamma;
        let gamma_tensor = spectral_gap(&prod, &prod_pi)?;
        Some(TensorGapCheck { gamma, gamma_tensor, holds: gamma <= gamma_tensor + SLACK_TOL })
    } else {
        None
    };
    let holds = chains.iter().filter(|c| !c.advisory).all(|c| c.holds)
        && kl.holds
        && tensor_gap.as_ref().is_none_or(|c| c.holds);
    Ok(ContractionReport { levels, chains, kl, tensor_gap, holds })
}

// pi^(S) ⊗ pi^(-S) laid out in the original coordinate order
fn product_on_blocks(
    pi: &Distribution,
    blocks: &[CoordinateSubset],
    margs: &[Distribution],
) -> Result<Distribution> {
    let space = pi.space();
    let projs: Vec<Vec<usize>> = blocks.iter().map(|b| space.projector(b)).collect();
    let mass = (0..space.total())
        .map(|x| margs.iter().zip(&projs).map(|(m, pr)| m.get(pr[x])).product())
        .collect();
    Distribution::new(space.clone(), mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use crate::state::ProductStateSpace;

    fn two(a: f64, b: f64) -> StochasticMatrix {
        StochasticMatrix::from_rows(
            ProductStateSpace::single(2).unwrap(),
            &[vec![1.0 - a, a], vec![b, 1.0 - b]],
        )
        .unwrap()
    }

    pub(crate) fn flip_walk(n_bits: usize) -> StochasticMatrix {
        let sp = ProductStateSpace::binary(n_bits).unwrap();
        StochasticMatrix::from_fn(sp, |x, y| {
            if (x ^ y).count_ones() == 1 {
                1.0 / n_bits as f64
            } else {
                0.0
            }
        })
        .unwrap()
    }

    #[test]
    fn two_state_gaps() {
        let u = two(0.5, 0.5);
        let pi = Distribution::uniform(u.space().clone());
        assert!((spectral_gap(&u, &pi).unwrap() - 1.0).abs() < 1e-14);
        let p = two(0.3, 0.1);
        let pi = stationary_distribution(&p).unwrap();
        assert!((spectral_gap(&p, &pi).unwrap() - 0.4).abs() < 1e-14);
    }

    #[test]
    fn hypercube_gap_and_cheeger() {
        let p = flip_walk(3);
        let pi = Distribution::uniform(p.space().clone());
        assert!((spectral_gap(&p, &pi).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((cheeger_constant(&p, &pi).unwrap() - 1.0 / 3.0).abs() < 1e-14);
    }

    fn brute_cheeger(p: &StochasticMatrix, pi: &Distribution) -> f64 {
        let n = p.n();
        let mut best = f64::INFINITY;
        for mask in 1u64..(1 << n) {
            let mass: f64 = (0..n).filter(|&x| mask >> x & 1 == 1).map(|x| pi.get(x)).sum();
            if mass > 0.5 + 1e-12 {
                continue;
            }
            let mut flow = 0.0;
            for x in 0..n {
                for y in 0..n {
                    if mask >> x & 1 == 1 && mask >> y & 1 == 0 {
                        flow += pi.get(x) * p.get(x, y);
                    }
                }
            }
            best = best.min(flow / mass);
        }
        best
    }

    #[test]
    fn cheeger_matches_brute_force() {
        let p = two(0.3, 0.3);
        let pi = Distribution::uniform(p.space().clone());
        assert!((cheeger_constant(&p, &pi).unwrap() - 0.3).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for n in [3, 5, 9, 16] {
            let sp = ProductStateSpace::single(n).unwrap();
            let pi = random::distribution(&sp, &mut rng);
            let p = random::reversible(&pi, 0.3, 0.6, &mut rng).unwrap();
            let fast = cheeger_constant(&p, &pi).unwrap();
            assert!((fast - brute_cheeger(&p, &pi)).abs() < 1e-13, "n = {n}");
        }
        let big = ProductStateSpace::single(23).unwrap();
        assert!(matches!(
            cheeger_constant(&StochasticMatrix::uniform(big.clone()), &Distribution::uniform(big)),
            Err(Error::SizeGuard(_))
        ));
    }

    #[test]
    fn two_point_log_sobolev_is_half_the_gap() {
        let p = two(0.5, 0.5);
        let pi = Distribution::uniform(p.space().clone());
        let b = log_sobolev_bracket(&p, &pi).unwrap();
        assert_eq!(b.lower, 0.5);
        assert_eq!(b.upper, 0.5);
        assert!((b.raw_numeric - 0.5).abs() < 1e-4, "{}", b.raw_numeric);
    }

    #[test]
    fn log_sobolev_bracket_contains_numeric() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for n in [3, 6] {
            let sp = ProductStateSpace::single(n).unwrap();
            let pi = random::distribution(&sp, &mut rng);
            let p = random::reversible(&pi, 0.2, 1.0, &mut rng).unwrap();
            let b = log_sobolev_bracket(&p, &pi).unwrap();
            assert!(b.lower <= b.numeric && b.numeric <= b.upper + 1e-9);
            assert!(b.raw_numeric <= b.upper * (1.0 + 1e-6));
        }
        let p = flip_walk(3);
        let pi = Distribution::uniform(p.space().clone());
        let b = log_sobolev_bracket(&p, &pi).unwrap();
        let ratio = b.numeric / spectral_gap(&p, &pi).unwrap();
        assert!((ratio - 0.5).abs() < 5e-3, "ratio {ratio}");
    }

    #[test]
    fn variational_gap_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let sp = ProductStateSpace::new(vec![2, 3]).unwrap();
        let pi = random::distribution(&sp, &mut rng);
        let p = random::reversible(&pi, 0.1, 1.0, &mut rng).unwrap();
        let gamma = spectral_gap(&p, &pi).unwrap();
        let spec = spectrum(&p, &pi).unwrap();
        let psi = spec.eigenfunction(1);
        let q = dirichlet_form(&p, &pi, &psi) / variance(&pi, &psi);
        assert!((q - gamma).abs() < 1e-10);
        for _ in 0..200 {
            let f: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
            assert!(dirichlet_form(&p, &pi, &f) / variance(&pi, &f) >= gamma - 1e-8);
        }
    }

    #[test]
    fn non_reversible_input_is_rejected_with_variational_gap() {
        let sp = ProductStateSpace::single(3).unwrap();
        let p = StochasticMatrix::from_fn(sp.clone(), |x, y| {
            if y == (x + 1) % 3 { 0.6 } else if y == x { 0.4 } else { 0.0 }
        })
        .unwrap();
        let pi = Distribution::uniform(sp);
        match spectral_gap(&p, &pi) {
            Err(Error::NotReversible { variational_gap: Some(g), .. }) => assert!(g > 0.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hitting_oracles() {
        let p = two(0.5, 0.5);
        let pi = Distribution::uniform(p.space().clone());
        let r = hitting_analysis(&p, &pi, 1).unwrap();
        assert!((r.hit[0][1] - 2.0).abs() < 1e-12);
        assert_eq!(r.hit[0][0], 0.0);
        assert!((r.commute[0][1] - 4.0).abs() < 1e-12);
        assert!((r.t_c - 4.0).abs() < 1e-12);
        assert!((r.t_av - 1.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let sp = ProductStateSpace::single(7).unwrap();
        let pi = random::distribution(&sp, &mut rng);
        let p = random::reversible(&pi, 0.2, 0.8, &mut rng).unwrap();
        let r = hitting_analysis(&p, &pi, 2).unwrap();
        assert_eq!(r.variational_checks, 50);
        assert!(r.variational_max_excess <= 1e-8);
        for x in 0..7 {
            for y in 0..7 {
                assert!((r.commute[x][y] - r.commute[y][x]).abs() < 1e-9);
            }
        }
        let id = StochasticMatrix::identity(sp);
        assert!(hitting_times(&id).is_err());
    }

    #[test]
    fn heat_kernel_oracles() {
        let p = two(0.5, 0.5);
        assert_eq!(heat_kernel(&p, 0.0).unwrap(), StochasticMatrix::identity(p.space().clone()));
        for t in [0.1, 1.0, 3.7] {
            let h = heat_kernel(&p, t).unwrap();
            assert!((h.get(0, 0) - (0.5 + 0.5 * (-t).exp())).abs() < 1e-14);
        }
        assert!(heat_kernel(&p, -1.0).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let sp = ProductStateSpace::single(5).unwrap();
        for reversible in [true, false] {
            let p = if reversible {
                let pi = random::distribution(&sp, &mut rng);
                random::reversible(&pi, 0.0, 1.0, &mut rng).unwrap()
            } else {
                random::stochastic(&sp, &mut rng)
            };
            let hs = heat_kernel(&p, 0.7).unwrap();
            let ht = heat_kernel(&p, 1.9).unwrap();
            let hst = heat_kernel(&p, 2.6).unwrap();
            assert!(hs.compose(&ht).unwrap().max_abs_diff(&hst) < 1e-9);
            let direct = taylor_exp(&((p.matrix() - DMatrix::identity(5, 5)) * 2.6));
            assert!((direct - hst.matrix()).amax() < 1e-10);
        }
    }

    #[test]
    fn two_state_mixing_time_is_one() {
        let p = two(0.5, 0.5);
        let pi = Distribution::uniform(p.space().clone());
        let t = l2_mixing_time(&p, &pi, (-1.0f64).exp()).unwrap();
        assert!((t - 1.0).abs() < 1e-6);
        assert_eq!(l2_mixing_time(&p, &pi, 2.0).unwrap(), 0.0);
        let spec = spectrum(&p, &pi).unwrap();
        assert!((l2_distance(&spec, 0.4) - l2_distance_direct(&p, &pi, 0.4).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn mixing_time_respects_the_log_sobolev_sandwich() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let sp = ProductStateSpace::single(6).unwrap();
        for _ in 0..5 {
            let pi = random::distribution(&sp, &mut rng);
            let p = random::reversible(&pi, 0.1, 1.0, &mut rng).unwrap();
            let b = log_sobolev_bracket(&p, &pi).unwrap();
            let t = l2_mixing_time(&p, &pi, (-1.0f64).exp()).unwrap();
            assert!(t >= 1.0 / (2.0 * b.upper) - 1e-6);
            let hi = (4.0 + (1.0 / pi.min_mass()).ln().ln()) / b.lower;
            assert!(t <= hi + 1e-6);
            let spec = spectrum(&p, &pi).unwrap();
            assert!((l2_distance(&spec, t) - l2_distance_direct(&p, &pi, t).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn contraction_on_lazy_reversible_chains() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let sp = ProductStateSpace::binary(3).unwrap();
        let s = CoordinateSubset::new(3, [0, 1]).unwrap();
        let t = CoordinateSubset::singleton(3, 0).unwrap();
        for _ in 0..10 {
            let pi = random::product_distribution(&sp, &mut rng);
            let p = random::reversible(&pi, 0.5, 1.0, &mut rng).unwrap();
            let r = contraction_report(&p, &pi, &s, &t).unwrap();
            assert!(r.holds, "{:#?}", r.chains);
            assert!(r.tensor_gap.unwrap().holds);
        }
        let pi = random::product_distribution(&sp, &mut rng);
        let p = random::reversible(&pi, 0.5, 1.0, &mut rng).unwrap();
        let full = CoordinateSubset::full(3);
        let r = contraction_report(&p, &pi, &full, &full).unwrap();
        for c in &r.chains {
            assert!(c.slacks.iter().all(|s| s.abs() < 1e-12), "{}", c.name);
        }
    }
}
