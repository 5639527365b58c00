//! The interface the minimax and harness layers need from a monotone family
//! `f(λ; u) = A(u) - λ B(u)`, plus the one-variable surrogate used as a
//! closed-form reference.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rearrange::Polarizer;

/// Metric in which gradients are represented and slopes measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeMetric {
    /// Dual norm of the full discrete `W^{1,2}` norm (Riesz solve).
    SobolevDual,
    /// Plain Euclidean norm of the partial derivatives.
    Euclidean,
}

/// A λ-family of `C^1` functionals on `R^dim`.
pub trait Functional: Sync {
    fn dim(&self) -> usize;

    /// The compact parameter interval `[a, b]`.
    fn lambda_interval(&self) -> (f64, f64);

    fn energy(&self, lambda: f64, u: &[f64]) -> Result<f64>;

    /// Partial derivatives with respect to each coordinate.
    fn gradient(&self, lambda: f64, u: &[f64]) -> Result<Vec<f64>>;

    /// The λ-coefficient `B(u) >= 0`.
    fn coupling(&self, u: &[f64]) -> f64;

    /// Maps a vector of partial derivatives to its representative in `X`.
    fn riesz(&self, dual: &[f64]) -> Vec<f64>;

    /// Norm of `X`.
    fn x_norm(&self, u: &[f64]) -> f64;

    fn metric(&self) -> SlopeMetric;

    /// Nonnegative profile scaled to build path endpoints, centered at
    /// `shift` along the first axis.
    fn template(&self, shift: f64) -> Vec<f64>;

    /// Nonnegative mode used to bend initial paths off the straight segment.
    fn perturbation_mode(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let _ = rng;
        vec![0.0; self.dim()]
    }

    /// Dense row-major Hessian; central differences of the gradient unless
    /// overridden.
    fn hessian(&self, lambda: f64, u: &[f64]) -> Result<Vec<f64>> {
        fd_hessian(self, lambda, u)
    }

    /// `v^H` when the family lives on a grid; the identity otherwise.
    fn polarize_values(&self, v: &[f64], h: &Polarizer) -> Result<Vec<f64>> {
        let _ = h;
        Ok(v.to_vec())
    }

    /// Weak slope `|df(λ; ·)|(u)`, the dual norm of the derivative.
    fn slope(&self, lambda: f64, u: &[f64]) -> Result<f64> {
        let g = self.gradient(lambda, u)?;
        let r = self.riesz(&g);
        Ok(dot(&g, &r).max(0.0).sqrt())
    }

    fn check_lambda(&self, lambda: f64) -> Result<()> {
        let (lo, hi) = self.lambda_interval();
        // tolerate round-off at the interval ends
        let slack = 1e-12 * hi.abs().max(1.0);
        if !(lambda >= lo - slack && lambda <= hi + slack) {
            return Err(Error::LambdaOutOfRange { lambda, lo, hi });
        }
        Ok(())
    }
}

/// Symmetrized central-difference Hessian of the gradient.
pub fn fd_hessian<F: Functional + ?Sized>(fam: &F, lambda: f64, u: &[f64]) -> Result<Vec<f64>> {
    let n = u.len();
    let mut h = vec![0.0; n * n];
    let mut probe = u.to_vec();
    for j in 0..n {
        let step = 1e-5 * u[j].abs().max(1.0);
        probe[j] = u[j] + step;
        let gp = fam.gradient(lambda, &probe)?;
        probe[j] = u[j] - step;
        let gm = fam.gradient(lambda, &probe)?;
        probe[j] = u[j];
        for i in 0..n {
            h[i * n + j] = (gp[i] - gm[i]) / (2.0 * step);
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let m = 0.5 * (h[i * n + j] + h[j * n + i]);
            h[i * n + j] = m;
            h[j * n + i] = m;
        }
    }
    Ok(h)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `f(λ; x) = x²/2 - λ x⁴/4` on the real line.
///
/// Mountain-pass value `1/(4λ)` at the saddle `x = 1/√λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticSurrogate {
    pub lambda_interval: (f64, f64),
}

impl QuarticSurrogate {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda interval must satisfy 0 < a < b, got [{lo}, {hi}]"
            )));
        }
        Ok(QuarticSurrogate {
            lambda_interval: (lo, hi),
        })
    }

    /// Exact mountain-pass level.
    pub fn exact_level(lambda: f64) -> f64 {
        0.25 / lambda
    }
}

impl Default for QuarticSurrogate {
    fn default() -> Self {
        QuarticSurrogate {
            lambda_interval: (0.25, 2.5),
        }
    }
}

impl Functional for QuarticSurrogate {
    fn dim(&self) -> usize {
        1
    }

    fn lambda_interval(&self) -> (f64, f64) {
        self.lambda_interval
    }

    fn energy(&self, lambda: f64, u: &[f64]) -> Result<f64> {
        self.check_lambda(lambda)?;
        let x = single(u)?;
        Ok(0.5 * x * x - lambda * x.powi(4) / 4.0)
    }

    fn gradient(&self, lambda: f64, u: &[f64]) -> Result<Vec<f64>> {
        self.check_lambda(lambda)?;
        let x = single(u)?;
        Ok(vec![x - lambda * x.powi(3)])
    }

    fn coupling(&self, u: &[f64]) -> f64 {
        u[0].powi(4) / 4.0
    }

    fn riesz(&self, dual: &[f64]) -> Vec<f64> {
        dual.to_vec()
    }

    fn x_norm(&self, u: &[f64]) -> f64 {
        u[0].abs()
    }

    fn metric(&self) -> SlopeMetric {
        SlopeMetric::Euclidean
    }

    fn template(&self, _shift: f64) -> Vec<f64> {
        vec![1.0]
    }

    fn hessian(&self, lambda: f64, u: &[f64]) -> Result<Vec<f64>> {
        self.check_lambda(lambda)?;
        let x = single(u)?;
        Ok(vec![1.0 - 3.0 * lambda * x * x])
    }
}

fn single(u: &[f64]) -> Result<f64> {
    match u {
        [x] if x.is_finite() => Ok(*x),
        [_] => Err(Error::NonFinite),
        _ => Err(Error::DimensionMismatch {
            expected: 1,
            actual: u.len(),
        }),
    }
}
