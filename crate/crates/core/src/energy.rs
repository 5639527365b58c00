//! The λ-family
//!
//! ```text
//! f(λ; u) = ∫ j(u, |∇u|) + (1/p) ∫ |u|^p - λ ∫ κ(|x|) |u|^q / q
//! ```
//!
//! discretized with forward differences (zero ghost nodes) and rectangle
//! quadrature, together with validators for the structural hypotheses used
//! by the minimax harness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{Functional, SlopeMetric};
use crate::grid::{self, Cell, Domain, GridFunction};
use crate::linalg;
use crate::rearrange::{compatible_polarizers, polarize, Polarizer};

/// Gradient integrand `j(s, t) = ω(s) t^p / p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GradientWeight {
    /// `ω ≡ 1`.
    PurePower,
    /// `ω(s) = α0 + (α1 - α0) s² / (1 + s²)`, even with `α0 <= ω <= α1`.
    WeightedPower { alpha0: f64, alpha1: f64 },
}

impl GradientWeight {
    fn omega(&self, s: f64) -> f64 {
        match *self {
            GradientWeight::PurePower => 1.0,
            GradientWeight::WeightedPower { alpha0, alpha1 } => {
                let s2 = s * s;
                alpha0 + (alpha1 - alpha0) * s2 / (1.0 + s2)
            }
        }
    }

    fn omega_prime(&self, s: f64) -> f64 {
        match *self {
            GradientWeight::PurePower => 0.0,
            GradientWeight::WeightedPower { alpha0, alpha1 } => {
                let d = 1.0 + s * s;
                (alpha1 - alpha0) * 2.0 * s / (d * d)
            }
        }
    }

    /// Lower ellipticity constant `α0`.
    pub fn lower_bound(&self) -> f64 {
        match *self {
            GradientWeight::PurePower => 1.0,
            GradientWeight::WeightedPower { alpha0, alpha1 } => alpha0.min(alpha1),
        }
    }

    fn validate(&self) -> Result<()> {
        if let GradientWeight::WeightedPower { alpha0, alpha1 } = *self {
            if !(alpha0 > 0.0 && alpha1 > 0.0 && alpha0.is_finite() && alpha1.is_finite()) {
                return Err(Error::InvalidParameter("gradient weights must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Radial weight `κ(r)` of the nonlinearity `G(|x|, s) = κ(|x|) |s|^q / q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialWeight {
    Constant {
        value: f64,
    },
    /// `κ(r) = base + amplitude · exp(-(r / width)²)`; nonincreasing iff `amplitude >= 0`.
    Gaussian {
        base: f64,
        amplitude: f64,
        width: f64,
    },
}

impl RadialWeight {
    pub fn at(&self, r: f64) -> f64 {
        match *self {
            RadialWeight::Constant { value } => value,
            RadialWeight::Gaussian { base, amplitude, width } => base + amplitude * (-(r / width).powi(2)).exp(),
        }
    }

    pub fn is_nonincreasing(&self) -> bool {
        match *self {
            RadialWeight::Constant { .. } => true,
            RadialWeight::Gaussian { amplitude, .. } => amplitude >= 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            RadialWeight::Constant { value } => value > 0.0 && value.is_finite(),
            RadialWeight::Gaussian { base, amplitude, width } => {
                base > 0.0 && base + amplitude > 0.0 && width > 0.0 && amplitude.is_finite()
            }
        };
        if !ok {
            return Err(Error::InvalidParameter("radial weight must stay positive".into()));
        }
        Ok(())
    }
}

/// Parameters of the model family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergySpec {
    pub p: f64,
    pub q: f64,
    pub lambda_interval: (f64, f64),
    pub j_kind: GradientWeight,
    pub g_weight: RadialWeight,
}

impl Default for EnergySpec {
    /// `-u'' + u = λ u³`: `p = 2`, `q = 4`, `κ ≡ 1`, `ω ≡ 1`.
    fn default() -> Self {
        EnergySpec {
            p: 2.0,
            q: 4.0,
            lambda_interval: (0.25, 1.0),
            j_kind: GradientWeight::PurePower,
            g_weight: RadialWeight::Constant { value: 1.0 },
        }
    }
}

impl EnergySpec {
    /// Critical Sobolev exponent `Np/(N-p)`, infinite when `N <= p`.
    pub fn critical_exponent(&self, dimension: usize) -> f64 {
        let n = dimension as f64;
        if n > self.p {
            n * self.p / (n - self.p)
        } else {
            f64::INFINITY
        }
    }

    /// Exponents `(p, p*)` of `V = L^p ∩ L^{p*}`; `p* = q` when the
    /// critical exponent is infinite.
    pub fn v_exponents(&self, dimension: usize) -> (f64, f64) {
        let crit = self.critical_exponent(dimension);
        (self.p, if crit.is_finite() { crit } else { self.q })
    }

    pub fn validate(&self, dimension: usize) -> Result<()> {
        let (a, b) = self.lambda_interval;
        if !(a > 0.0 && b > a && b.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda interval must satisfy 0 < a < b, got [{a}, {b}]"
            )));
        }
        if !(self.p >= 2.0 && self.p.is_finite()) {
            return Err(Error::InvalidParameter(format!("p must be >= 2, got {}", self.p)));
        }
        if !(self.q > self.p && self.q < self.critical_exponent(dimension)) {
            return Err(Error::InvalidParameter(format!(
                "q must satisfy p < q < p*, got q = {}",
                self.q
            )));
        }
        self.j_kind.validate()?;
        self.g_weight.validate()
    }
}

/// `f(λ; u) = A(u) - λ B(u)` on a fixed grid.
#[derive(Debug, Clone)]
pub struct LambdaFamily {
    spec: EnergySpec,
    domain: Domain,
    cells: Vec<Cell>,
    kappa: Vec<f64>,
}

impl LambdaFamily {
    /// Builds the family; rejects a radial weight that increases with `r`.
    pub fn new(spec: EnergySpec, domain: Domain) -> Result<Self> {
        if !spec.g_weight.is_nonincreasing() {
            return Err(Error::InvalidParameter(
                "radial weight must be nonincreasing in |x|".into(),
            ));
        }
        Self::unchecked(spec, domain)
    }

    /// Like [`LambdaFamily::new`] but accepts any positive radial weight, so
    /// that the symmetry validator can be exercised on families violating it.
    pub fn unchecked(spec: EnergySpec, domain: Domain) -> Result<Self> {
        domain.validate()?;
        spec.validate(domain.dimension)?;
        let kappa = (0..domain.len()).map(|i| spec.g_weight.at(domain.radius(i))).collect();
        Ok(LambdaFamily {
            spec,
            cells: grid::cells(&domain),
            domain,
            kappa,
        })
    }

    pub fn spec(&self) -> &EnergySpec {
        &self.spec
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Exponents of the `V` norm.
    pub fn v_exponents(&self) -> (f64, f64) {
        self.spec.v_exponents(self.domain.dimension)
    }

    fn check_values(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.domain.len() {
            return Err(Error::DimensionMismatch {
                expected: self.domain.len(),
                actual: u.len(),
            });
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    /// `(A(u), B(u))`.
    pub fn decompose(&self, u: &[f64]) -> Result<(f64, f64)> {
        self.check_values(u)?;
        let vol = self.domain.cell_volume();
        let p = self.spec.p;
        let grads = grid::cell_gradients(&self.domain, u);
        let kinetic: f64 = self
            .cells
            .iter()
            .zip(&grads)
            .map(|(c, g)| {
                let w = self.edge_weights(c, u);
                let weighted = w[0] * g[0] * g[0] + w[1] * g[1] * g[1];
                radial_factor(g, p) * weighted / p
            })
            .sum();
        let mass = grid::power_sum(u, p) / p;
        let q = self.spec.q;
        let coupling: f64 = u.iter().zip(&self.kappa).map(|(v, k)| k * v.abs().powf(q) / q).sum();
        Ok(((kinetic + mass) * vol, coupling * vol))
    }

    /// `f(λ; u)` for a grid function.
    pub fn evaluate(&self, lambda: f64, u: &GridFunction) -> Result<f64> {
        self.same_grid(u)?;
        self.energy(lambda, u.values())
    }

    /// Exact partial derivatives of `f(λ; ·)` at `u`.
    pub fn gradient_of(&self, lambda: f64, u: &GridFunction) -> Result<GridFunction> {
        self.same_grid(u)?;
        let g = self.gradient(lambda, u.values())?;
        GridFunction::new(self.domain, g)
    }

    /// Weak slope; the dual `W^{1,2}` norm when `p = 2`, otherwise the
    /// Euclidean norm of the partial derivatives.
    pub fn weak_slope(&self, lambda: f64, u: &GridFunction) -> Result<f64> {
        self.same_grid(u)?;
        self.slope(lambda, u.values())
    }

    /// Weight of each forward edge of a cell: the mean of `ω` at its two
    /// endpoints, so that reflections map edge weights onto edge weights.
    fn edge_weights(&self, cell: &Cell, u: &[f64]) -> [f64; 2] {
        let j = self.spec.j_kind;
        let at = |i: Option<usize>| j.omega(i.map_or(0.0, |i| u[i]));
        let base = at(cell.node);
        let mut w = [0.0; 2];
        for (wa, nb) in w.iter_mut().zip(cell.neighbors).take(self.domain.dimension) {
            *wa = 0.5 * (base + at(nb));
        }
        w
    }

    fn same_grid(&self, u: &GridFunction) -> Result<()> {
        if *u.domain() != self.domain {
            return Err(Error::InvalidDomain("function lives on a different grid".into()));
        }
        Ok(())
    }
}

/// `|g|^(p-2)`, exactly 1 for `p = 2`.
fn radial_factor(g: &[f64; 2], p: f64) -> f64 {
    if p == 2.0 {
        1.0
    } else {
        (g[0] * g[0] + g[1] * g[1]).sqrt().powf(p - 2.0)
    }
}

impl Functional for LambdaFamily {
    fn dim(&self) -> usize {
        self.domain.len()
    }

    fn lambda_interval(&self) -> (f64, f64) {
        self.spec.lambda_interval
    }

    fn energy(&self, lambda: f64, u: &[f64]) -> Result<f64> {
        self.check_lambda(lambda)?;
        let (a, b) = self.decompose(u)?;
        Ok(a - lambda * b)
    }

    fn gradient(&self, lambda: f64, u: &[f64]) -> Result<Vec<f64>> {
        self.check_lambda(lambda)?;
        self.check_values(u)?;
        let vol = self.domain.cell_volume();
        let h = self.domain.spacing();
        let (p, q) = (self.spec.p, self.spec.q);
        let weight = self.spec.j_kind;
        let mut out = vec![0.0; u.len()];
        let grads = grid::cell_gradients(&self.domain, u);
        let node_value = |i: Option<usize>| i.map_or(0.0, |i| u[i]);
        for (cell, g) in self.cells.iter().zip(&grads) {
            let w = self.edge_weights(cell, u);
            let sq = g[0] * g[0] + g[1] * g[1];
            let radial = radial_factor(g, p);
            // d/dg_a of |g|^(p-2) |g|_w^2 / p
            let cross = if p == 2.0 || sq == 0.0 {
                0.0
            } else {
                (p - 2.0) / p * (w[0] * g[0] * g[0] + w[1] * g[1] * g[1]) * radial / sq
            };
            let base = node_value(cell.node);
            for ((axis, gd), nb) in g.iter().enumerate().zip(cell.neighbors).take(self.domain.dimension) {
                let flux = vol * (2.0 / p * radial * w[axis] + cross) * gd / h;
                // each endpoint carries half of the edge weight
                let dw = vol * radial * gd * gd / (2.0 * p);
                if let Some(nb) = nb {
                    out[nb] += flux + dw * weight.omega_prime(u[nb]);
                }
                if let Some(i) = cell.node {
                    out[i] += dw * weight.omega_prime(base) - flux;
                }
            }
        }
        for (i, v) in u.iter().enumerate() {
            let a = v.abs();
            let mass = if p == 2.0 { *v } else { a.powf(p - 2.0) * v };
            let nonlinear = self.kappa[i] * a.powf(q - 2.0) * v;
            out[i] += vol * (mass - lambda * nonlinear);
        }
        Ok(out)
    }

    fn coupling(&self, u: &[f64]) -> f64 {
        let vol = self.domain.cell_volume();
        let q = self.spec.q;
        u.iter()
            .zip(&self.kappa)
            .map(|(v, k)| k * v.abs().powf(q) / q)
            .sum::<f64>()
            * vol
    }

    fn riesz(&self, dual: &[f64]) -> Vec<f64> {
        match self.metric() {
            SlopeMetric::SobolevDual => linalg::solve_sobolev(&self.domain, dual),
            SlopeMetric::Euclidean => dual.to_vec(),
        }
    }

    fn x_norm(&self, u: &[f64]) -> f64 {
        grid::x_norm_of(&self.domain, u, self.spec.p)
    }

    fn metric(&self) -> SlopeMetric {
        if self.spec.p == 2.0 {
            SlopeMetric::SobolevDual
        } else {
            SlopeMetric::Euclidean
        }
    }

    fn template(&self, shift: f64) -> Vec<f64> {
        (0..self.domain.len())
            .map(|i| {
                let x = self.domain.position(i);
                let r = ((x[0] - shift).powi(2) + x[1] * x[1]).sqrt();
                1.0 / r.cosh()
            })
            .collect()
    }

    fn perturbation_mode(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let l = self.domain.half_width;
        let center = [rng.random_range(-l / 2.0..l / 2.0), rng.random_range(-l / 2.0..l / 2.0)];
        let second = if self.domain.dimension == 2 { 1.0 } else { 0.0 };
        (0..self.domain.len())
            .map(|i| {
                let x = self.domain.position(i);
                let d2 = (x[0] - center[0]).powi(2) + second * (x[1] - center[1]).powi(2);
                (-d2).exp()
            })
            .collect()
    }

    fn hessian(&self, lambda: f64, u: &[f64]) -> Result<Vec<f64>> {
        if self.spec.p != 2.0 || self.spec.j_kind != GradientWeight::PurePower {
            return crate::functional::fd_hessian(self, lambda, u);
        }
        self.check_lambda(lambda)?;
        self.check_values(u)?;
        // vol (I + L_h) - λ vol (q - 1) κ |u|^(q-2)
        let n = u.len();
        let vol = self.domain.cell_volume();
        let q = self.spec.q;
        let mut h = vec![0.0; n * n];
        let inv_h2 = self.domain.spacing().powi(-2);
        let dim = self.domain.dimension;
        for j in 0..n {
            let k = self.domain.coords(j);
            for axis in 0..dim {
                for step in [-1, 1] {
                    let mut nb = k;
                    nb[axis] += step;
                    if let Some(i) = self.domain.index_of(nb) {
                        h[i * n + j] = -vol * inv_h2;
                    }
                }
            }
            h[j * n + j] = vol * (1.0 + 2.0 * dim as f64 * inv_h2)
                - lambda * vol * (q - 1.0) * self.kappa[j] * u[j].abs().powf(q - 2.0);
        }
        Ok(h)
    }

    fn polarize_values(&self, v: &[f64], h: &Polarizer) -> Result<Vec<f64>> {
        let g = GridFunction::new(self.domain, v.to_vec())?;
        Ok(polarize(&g, h)?.into_values())
    }
}

/// A pair violating `f(λ; u^H) <= f(λ; u)`.
#[derive(Debug, Clone, Serialize)]
pub struct H4Violation {
    pub lambda: f64,
    pub polarizer: Option<Polarizer>,
    pub before: f64,
    pub after: f64,
}

/// Outcome of [`check_h4`].
#[derive(Debug, Clone, Serialize)]
pub struct H4Report {
    pub trials: usize,
    pub tolerance: f64,
    /// Largest observed `f(λ; u^H) - f(λ; u)`.
    pub max_excess: f64,
    /// Largest observed `f(λ; |u|) - f(λ; u)` over sign-changing `u`.
    pub max_abs_excess: f64,
    pub violations: Vec<H4Violation>,
}

impl H4Report {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Draws a random test function: either independent node values or a sum of
/// random bumps, scaled to a random amplitude.
pub fn random_profile(domain: &Domain, rng: &mut ChaCha8Rng, signed: bool) -> Vec<f64> {
    let amplitude = rng.random_range(0.1..2.0);
    let lo = if signed { -1.0 } else { 0.0 };
    if rng.random_bool(0.5) {
        return (0..domain.len())
            .map(|_| amplitude * rng.random_range(lo..1.0))
            .collect();
    }
    let l = domain.half_width;
    let bumps: Vec<([f64; 2], f64, f64)> = (0..3)
        .map(|_| {
            let c = [rng.random_range(-l..l), rng.random_range(-l..l)];
            let w = rng.random_range(0.3..0.3 * l.max(1.0) + 0.4);
            let s = rng.random_range(lo..1.0);
            (c, w, s)
        })
        .collect();
    (0..domain.len())
        .map(|i| {
            let x = domain.position(i);
            let y = if domain.dimension == 1 { 0.0 } else { 1.0 };
            amplitude
                * bumps
                    .iter()
                    .map(|(c, w, s)| {
                        let d2 = (x[0] - c[0]).powi(2) + y * (x[1] - c[1]).powi(2);
                        s * (-d2 / (w * w)).exp()
                    })
                    .sum::<f64>()
        })
        .collect()
}

/// Randomized check of `f(λ; u^H) <= f(λ; u)` for `u >= 0` and of
/// `f(λ; |u|) <= f(λ; u)` for sign-changing `u`.
pub fn check_h4(fam: &LambdaFamily, trials: usize, seed: u64) -> Result<H4Report> {
    const TOLERANCE: f64 = 1e-9;
    let domain = *fam.domain();
    let pool = compatible_polarizers(&domain);
    let (lo, hi) = fam.lambda_interval();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = H4Report {
        trials,
        tolerance: TOLERANCE,
        max_excess: f64::NEG_INFINITY,
        max_abs_excess: f64::NEG_INFINITY,
        violations: Vec::new(),
    };
    for _ in 0..trials {
        let lambda = rng.random_range(lo..=hi);
        let h = pool[rng.random_range(0..pool.len())];
        let u = GridFunction::new(domain, random_profile(&domain, &mut rng, false))?;
        let before = fam.evaluate(lambda, &u)?;
        let after = fam.evaluate(lambda, &polarize(&u, &h)?)?;
        report.max_excess = report.max_excess.max(after - before);
        if after > before + TOLERANCE {
            report.violations.push(H4Violation {
                lambda,
                polarizer: Some(h),
                before,
                after,
            });
        }

        let v = GridFunction::new(domain, random_profile(&domain, &mut rng, true))?;
        let before = fam.evaluate(lambda, &v)?;
        let after = fam.evaluate(lambda, &v.abs())?;
        report.max_abs_excess = report.max_abs_excess.max(after - before);
        if after > before + TOLERANCE {
            report.violations.push(H4Violation {
                lambda,
                polarizer: None,
                before,
                after,
            });
        }
    }
    Ok(report)
}

/// Outcome of [`check_h3`].
#[derive(Debug, Clone, Serialize)]
pub struct H3Report {
    /// The constant `C` bounding energies and difference quotients.
    pub constant: f64,
    /// Witnessed bound `M(C)` from coercivity of `A`.
    pub bound: f64,
    pub max_norm: f64,
    /// Largest deviation of the difference quotient from `B(u_h)`.
    pub quotient_identity_error: f64,
}

impl H3Report {
    pub fn passed(&self) -> bool {
        self.max_norm <= self.bound * (1.0 + 1e-12) && self.quotient_identity_error <= 1e-8
    }
}

/// Boundedness check along `(λ_h, u_h)` with `λ_h` strictly increasing to `lambda`.
///
/// For `f = A - λB` the difference quotient equals `B(u_h)`, and
/// `A(u) >= (α0/p) |u|_X^p` turns the bounds on `f(λ_h; u_h)` and `B(u_h)`
/// into `|u_h|_X <= (p C (1 + λ) / α0)^(1/p)`.
pub fn check_h3<F: Functional + ?Sized>(
    fam: &F,
    coercivity: f64,
    p: f64,
    lambda: f64,
    sequence: &[(f64, Vec<f64>)],
) -> Result<H3Report> {
    fam.check_lambda(lambda)?;
    if sequence.is_empty() {
        return Err(Error::InvalidParameter("empty sequence".into()));
    }
    if sequence.windows(2).any(|w| w[1].0 <= w[0].0) || sequence.iter().any(|(l, _)| *l >= lambda) {
        return Err(Error::GridNotIncreasing);
    }
    let mut constant: f64 = 0.0;
    let mut max_norm: f64 = 0.0;
    let mut identity: f64 = 0.0;
    for (lh, u) in sequence {
        let f_h = fam.energy(*lh, u)?;
        let f_l = fam.energy(lambda, u)?;
        let quotient = (f_h - f_l) / (lambda - lh);
        let b = fam.coupling(u);
        identity = identity.max((quotient - b).abs() / b.abs().max(1.0));
        constant = constant.max(f_h).max(-f_l).max(quotient);
        max_norm = max_norm.max(fam.x_norm(u));
    }
    let bound = (p * constant * (1.0 + lambda) / coercivity).powf(1.0 / p);
    Ok(H3Report {
        constant,
        bound,
        max_norm,
        quotient_identity_error: identity,
    })
}

impl LambdaFamily {
    /// [`check_h3`] with the coercivity constant of this family.
    pub fn check_h3(&self, lambda: f64, sequence: &[(f64, Vec<f64>)]) -> Result<H3Report> {
        let alpha = self.spec.j_kind.lower_bound().min(1.0);
        check_h3(self, alpha, self.spec.p, lambda, sequence)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rearrange::schwarz;

    fn default_family(n: usize, l: f64) -> LambdaFamily {
        LambdaFamily::new(EnergySpec::default(), Domain::line(l, n).unwrap()).unwrap()
    }

    #[test]
    fn hand_example_three_nodes() {
        let spec = EnergySpec {
            lambda_interval: (0.5, 2.0),
            ..EnergySpec::default()
        };
        let fam = LambdaFamily::new(spec, Domain::line(1.0, 3).unwrap()).unwrap();
        let u = GridFunction::new(*fam.domain(), vec![0.0, 1.0, 0.0]).unwrap();
        let (a, b) = fam.decompose(u.values()).unwrap();
        assert!((a - 1.5).abs() < 1e-15);
        assert!((b - 0.25).abs() < 1e-15);
        assert!((fam.evaluate(1.0, &u).unwrap() - 1.25).abs() < 1e-15);
    }

    #[test]
    fn zero_is_critical() {
        let fam = default_family(33, 4.0);
        let z = GridFunction::zeros(*fam.domain());
        assert_eq!(fam.evaluate(0.5, &z).unwrap(), 0.0);
        assert!(fam.gradient_of(0.5, &z).unwrap().values().iter().all(|&g| g == 0.0));
        assert_eq!(fam.weak_slope(0.5, &z).unwrap(), 0.0);
    }

    #[test]
    fn lambda_outside_interval_is_rejected() {
        let fam = default_family(9, 2.0);
        let z = GridFunction::zeros(*fam.domain());
        assert!(matches!(fam.evaluate(1.5, &z), Err(Error::LambdaOutOfRange { .. })));
        assert_eq!(
            fam.evaluate(1.5, &z).unwrap_err().to_string(),
            "lambda out of range: 1.5 not in [0.25, 1]"
        );
    }

    #[test]
    fn energy_is_affine_in_lambda() {
        let fam = default_family(33, 4.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let u = random_profile(fam.domain(), &mut rng, true);
            let b = fam.coupling(&u);
            let f1 = fam.energy(0.3, &u).unwrap();
            let f2 = fam.energy(0.9, &u).unwrap();
            assert!(f2 <= f1);
            assert!(((f1 - f2) - 0.6 * b).abs() <= 1e-12 * b.max(1.0));
        }
    }

    #[test]
    fn gradient_commutes_with_point_reflection() {
        let fam = default_family(41, 5.0);
        let u = GridFunction::from_fn(*fam.domain(), |x| (-(x[0] * x[0])).exp()).unwrap();
        let g = fam.gradient_of(0.8, &u).unwrap();
        let gr = fam.gradient_of(0.8, &u.point_reflected()).unwrap();
        for (a, b) in g.point_reflected().values().iter().zip(gr.values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn weighted_and_2d_gradients_match_finite_differences() {
        let specs = [
            (
                EnergySpec {
                    p: 3.0,
                    q: 5.0,
                    j_kind: GradientWeight::WeightedPower {
                        alpha0: 0.5,
                        alpha1: 2.0,
                    },
                    g_weight: RadialWeight::Gaussian {
                        base: 0.5,
                        amplitude: 1.0,
                        width: 2.0,
                    },
                    ..EnergySpec::default()
                },
                Domain::line(3.0, 21).unwrap(),
            ),
            (
                EnergySpec {
                    q: 3.0,
                    ..EnergySpec::default()
                },
                Domain::square(2.0, 9).unwrap(),
            ),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (spec, domain) in specs {
            let fam = LambdaFamily::new(spec, domain).unwrap();
            let u = random_profile(&domain, &mut rng, true);
            let g = fam.gradient(0.7, &u).unwrap();
            for i in 0..u.len() {
                let step = 1e-5;
                let mut plus = u.clone();
                let mut minus = u.clone();
                plus[i] += step;
                minus[i] -= step;
                let fd = (fam.energy(0.7, &plus).unwrap() - fam.energy(0.7, &minus).unwrap()) / (2.0 * step);
                assert!(
                    (fd - g[i]).abs() <= 1e-6 * g[i].abs().max(1e-3),
                    "{i}: {fd} vs {}",
                    g[i]
                );
            }
        }
    }

    #[test]
    fn analytic_hessian_matches_differences() {
        let fam = default_family(21, 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = random_profile(fam.domain(), &mut rng, true);
        let exact = fam.hessian(0.6, &u).unwrap();
        let fd = crate::functional::fd_hessian(&fam, 0.6, &u).unwrap();
        for (a, b) in exact.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-6 * a.abs().max(1.0));
        }
    }

    #[test]
    fn slope_is_continuous_along_convergent_sequences() {
        let fam = default_family(33, 4.0);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let u = random_profile(fam.domain(), &mut rng, false);
        let dir = random_profile(fam.domain(), &mut rng, true);
        let s0 = fam.slope(0.6, &u).unwrap();
        let tail: Vec<f64> = (20..30)
            .map(|k| {
                let eps = 2f64.powi(-k);
                let uh: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a + eps * b).collect();
                fam.slope(0.6, &uh).unwrap()
            })
            .collect();
        let liminf = tail.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(s0 <= liminf + 1e-6);
        assert!((liminf - s0).abs() <= 1e-6);
    }

    #[test]
    fn h4_holds_on_default_model() {
        let fam = default_family(65, 8.0);
        let report = check_h4(&fam, 500, 3).unwrap();
        assert!(report.passed(), "{:?}", report.violations.first());
    }

    #[test]
    fn h4_holds_with_weighted_gradient() {
        for (alpha0, alpha1) in [(1.0, 0.5), (0.5, 2.0)] {
            let spec = EnergySpec {
                j_kind: GradientWeight::WeightedPower { alpha0, alpha1 },
                ..EnergySpec::default()
            };
            let fam = LambdaFamily::new(spec, Domain::line(6.0, 49).unwrap()).unwrap();
            let report = check_h4(&fam, 1000, 9).unwrap();
            assert!(report.passed(), "{:?}", report.violations.first());
        }
    }

    #[test]
    fn h4_equality_at_symmetric_functions() {
        let fam = default_family(65, 8.0);
        let u = GridFunction::from_fn(*fam.domain(), |x| 1.0 / x[0].cosh()).unwrap();
        let s = schwarz(&u);
        for h in compatible_polarizers(fam.domain()).iter().take(40) {
            let a = fam.evaluate(0.5, &polarize(&s, h).unwrap()).unwrap();
            assert_eq!(a, fam.evaluate(0.5, &s).unwrap());
        }
    }

    #[test]
    fn h4_detects_increasing_weight() {
        let spec = EnergySpec {
            g_weight: RadialWeight::Gaussian {
                base: 2.0,
                amplitude: -1.9,
                width: 2.0,
            },
            ..EnergySpec::default()
        };
        let domain = Domain::line(8.0, 65).unwrap();
        assert!(LambdaFamily::new(spec, domain).is_err());
        let fam = LambdaFamily::unchecked(spec, domain).unwrap();
        let report = check_h4(&fam, 500, 3).unwrap();
        assert!(!report.passed());
    }

    #[test]
    fn h3_hand_example() {
        // n = 3, h = 1: u = [0, t, 0] has A = 1.5 t², B = t⁴/4, |u|_X² = 3 t².
        let spec = EnergySpec {
            lambda_interval: (0.25, 1.0),
            ..EnergySpec::default()
        };
        let fam = LambdaFamily::new(spec, Domain::line(1.0, 3).unwrap()).unwrap();
        let seq = vec![(0.5, vec![0.0, 1.0, 0.0]), (0.75, vec![0.0, 2.0, 0.0])];
        let r = fam.check_h3(1.0, &seq).unwrap();
        // C = max(f(.5;u1)=1.375, f(.75;u2)=3, B(u1)=.25, B(u2)=4, -f(1;u1)=-1.25, -f(1;u2)=-2) = 4
        assert!((r.constant - 4.0).abs() < 1e-12);
        assert!((r.bound - (2.0f64 * 4.0 * 2.0).sqrt()).abs() < 1e-12);
        assert!((r.max_norm - 12f64.sqrt()).abs() < 1e-12);
        assert!(r.passed());
        assert!(r.quotient_identity_error < 1e-14);
        let bad = vec![(0.75, vec![0.0; 3]), (0.5, vec![0.0; 3])];
        assert_eq!(fam.check_h3(1.0, &bad).unwrap_err(), Error::GridNotIncreasing);
    }
}
