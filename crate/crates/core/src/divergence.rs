//! f-divergences between probability masses and between transition
//! matrices weighted by a distribution.
//!
//! Boundary conventions: `0 f(0/0) = 0`, `0 f(a/0) = a f'(+inf)` and
//! `0 * inf = 0`. Terms with a zero denominator are dispatched before any
//! division happens.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::state::{same_space, Distribution, StochasticMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    Kl,
    ReverseKl,
    Alpha { alpha: f64 },
    SquaredHellinger,
    Custom,
}

type Generator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A convex `f` with `f(1) = 0`, its limit at `0+` and `f'(+inf)`.
#[derive(Clone)]
pub struct DivergenceGenerator {
    kind: GeneratorKind,
    f: Generator,
    f_at_zero: ExtReal,
    f_prime_at_inf: ExtReal,
}

impl fmt::Debug for DivergenceGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DivergenceGenerator")
            .field("kind", &self.kind)
            .field("f_at_zero", &self.f_at_zero)
            .field("f_prime_at_inf", &self.f_prime_at_inf)
            .finish()
    }
}

// grid for the convexity spot-check
const GRID: [f64; 8] = [0.01, 0.1, 0.5, 1.0, 1.5, 2.0, 5.0, 10.0];

impl DivergenceGenerator {
    pub fn kl() -> Self {
        Self {
            kind: GeneratorKind::Kl,
            f: Arc::new(|t: f64| t * t.ln()),
            f_at_zero: ExtReal::ZERO,
            f_prime_at_inf: ExtReal::Infinite,
        }
    }

    pub fn reverse_kl() -> Self {
        Self {
            kind: GeneratorKind::ReverseKl,
            f: Arc::new(|t: f64| -t.ln()),
            f_at_zero: ExtReal::Infinite,
            f_prime_at_inf: ExtReal::ZERO,
        }
    }

    pub fn alpha(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) || alpha == 1.0 {
            return Err(Error::arg(format!(
                "alpha must lie in (0,1) or (1,inf), got {alpha}"
            )));
        }
        Ok(Self {
            kind: GeneratorKind::Alpha { alpha },
            f: Arc::new(move |t: f64| (t.powf(alpha) - 1.0) / (alpha - 1.0)),
            f_at_zero: ExtReal::Finite(-1.0 / (alpha - 1.0)),
            f_prime_at_inf: if alpha < 1.0 { ExtReal::ZERO } else { ExtReal::Infinite },
        })
    }

    pub fn squared_hellinger() -> Self {
        Self {
            kind: GeneratorKind::SquaredHellinger,
            f: Arc::new(|t: f64| (t.sqrt() - 1.0).powi(2)),
            f_at_zero: ExtReal::Finite(1.0),
            f_prime_at_inf: ExtReal::Finite(1.0),
        }
    }

    /// A user generator. The limits are taken as given, never estimated;
    /// `f(1) = 0` and a convexity spot-check on a fixed grid are enforced.
    pub fn custom(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f_at_zero: ExtReal,
        f_prime_at_inf: ExtReal,
    ) -> Result<Self> {
        let g = Self { kind: GeneratorKind::Custom, f: Arc::new(f), f_at_zero, f_prime_at_inf };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let at_one = (self.f)(1.0);
        if at_one.abs() > 1e-12 {
            return Err(Error::arg(format!("generator has f(1) = {at_one}, not 0")));
        }
        for &a in &GRID {
            for &b in &GRID {
                let mid = (self.f)(0.5 * a + 0.5 * b);
                let chord = 0.5 * (self.f)(a) + 0.5 * (self.f)(b);
                if mid > chord + 1e-12 {
                    return Err(Error::arg(format!("generator is not convex between {a} and {b}")));
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    pub fn f_at_zero(&self) -> ExtReal {
        self.f_at_zero
    }

    pub fn f_prime_at_inf(&self) -> ExtReal {
        self.f_prime_at_inf
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    /// `l f(m / l)` with the boundary conventions.
    pub fn term(&self, m: f64, l: f64) -> ExtReal {
        if l > 0.0 {
            if m > 0.0 {
                ExtReal::Finite(match self.kind {
                    // the closed forms keep identical inputs at exactly 0
                    GeneratorKind::Kl => m * (m / l).ln(),
                    GeneratorKind::ReverseKl => l * (l / m).ln(),
                    _ => l * (self.f)(m / l),
                })
            } else {
                self.f_at_zero.scale(l)
            }
        } else if m > 0.0 {
            self.f_prime_at_inf.scale(m)
        } else {
            ExtReal::ZERO
        }
    }

    fn row_sum(&self, m: impl Iterator<Item = f64>, l: impl Iterator<Item = f64>) -> ExtReal {
        let mut acc = 0.0;
        for (a, b) in m.zip(l) {
            match self.term(a, b) {
                ExtReal::Finite(v) => acc += v,
                ExtReal::Infinite => return ExtReal::Infinite,
            }
        }
        ExtReal::Finite(acc)
    }
}

/// `D_f(mu || nu) = sum_x nu(x) f(mu(x) / nu(x))`.
pub fn f_div_measures(mu: &Distribution, nu: &Distribution, f: &DivergenceGenerator) -> Result<ExtReal> {
    same_space(mu.space(), nu.space())?;
    Ok(f.row_sum(mu.mass().iter().copied(), nu.mass().iter().copied()))
}

/// Row divergences `D_f(M(x,.) || L(x,.))`.
pub fn row_divergences(
    m: &StochasticMatrix,
    l: &StochasticMatrix,
    f: &DivergenceGenerator,
) -> Result<Vec<ExtReal>> {
    same_space(m.space(), l.space())?;
    let (mm, lm) = (m.matrix(), l.matrix());
    Ok((0..m.n())
        .map(|x| f.row_sum(mm.row(x).iter().copied(), lm.row(x).iter().copied()))
        .collect())
}

/// `D_f^pi(M || L) = sum_x pi(x) sum_y L(x,y) f(M(x,y) / L(x,y))`.
pub fn f_div_chains(
    pi: &Distribution,
    m: &StochasticMatrix,
    l: &StochasticMatrix,
    f: &DivergenceGenerator,
) -> Result<ExtReal> {
    same_space(pi.space(), m.space())?;
    let rows = row_divergences(m, l, f)?;
    Ok(rows.into_iter().zip(pi.mass()).map(|(r, &w)| r.scale(w)).sum())
}

/// KL divergence rate from `L` to `M`.
pub fn kl_rate(pi: &Distribution, m: &StochasticMatrix, l: &StochasticMatrix) -> Result<ExtReal> {
    f_div_chains(pi, m, l, &DivergenceGenerator::kl())
}
