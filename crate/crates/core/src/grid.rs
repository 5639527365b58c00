//! Symmetric Cartesian grids on `[-L, L]^N`, sampled functions and the
//! discrete norms of the ambient spaces.
//!
//! Functions are extended by zero outside the cube. Quadrature is the
//! rectangle rule `sum(.) * h^N`, which makes every norm exactly invariant
//! under permutations of node values that keep the grid in place.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rearrange::Polarizer;

/// Centered cube `[-L, L]^N` sampled with `n` (odd) points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub dimension: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
}

impl Domain {
    pub fn new(dimension: usize, half_width: f64, points_per_axis: usize) -> Result<Self> {
        let domain = Domain {
            dimension,
            half_width,
            points_per_axis,
        };
        domain.validate()?;
        Ok(domain)
    }

    /// One-dimensional interval `[-L, L]`.
    pub fn line(half_width: f64, points: usize) -> Result<Self> {
        Self::new(1, half_width, points)
    }

    /// Two-dimensional square `[-L, L]^2`.
    pub fn square(half_width: f64, points_per_axis: usize) -> Result<Self> {
        Self::new(2, half_width, points_per_axis)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension != 1 && self.dimension != 2 {
            return Err(Error::InvalidDomain(format!(
                "dimension must be 1 or 2, got {}",
                self.dimension
            )));
        }
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return Err(Error::InvalidDomain(format!(
                "half width must be positive, got {}",
                self.half_width
            )));
        }
        if self.points_per_axis < 3 || self.points_per_axis.is_multiple_of(2) {
            return Err(Error::InvalidDomain(format!(
                "points per axis must be odd and >= 3, got {}",
                self.points_per_axis
            )));
        }
        Ok(())
    }

    /// Grid spacing `h = 2L / (n - 1)`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points_per_axis - 1) as f64
    }

    /// Volume element `h^N`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dimension as i32)
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest centered integer coordinate, `(n - 1) / 2`.
    pub fn radius_steps(&self) -> i64 {
        (self.points_per_axis as i64 - 1) / 2
    }

    /// Centered integer coordinates of a node; the unused second entry is 0 in 1D.
    pub fn coords(&self, index: usize) -> [i64; 2] {
        let n = self.points_per_axis;
        let r = self.radius_steps();
        match self.dimension {
            1 => [index as i64 - r, 0],
            _ => [(index / n) as i64 - r, (index % n) as i64 - r],
        }
    }

    /// Inverse of [`Domain::coords`]; `None` outside the cube.
    pub fn index_of(&self, coords: [i64; 2]) -> Option<usize> {
        let r = self.radius_steps();
        let n = self.points_per_axis;
        let inside = |c: i64| (-r..=r).contains(&c);
        match self.dimension {
            1 => (inside(coords[0]) && coords[1] == 0).then(|| (coords[0] + r) as usize),
            _ => (inside(coords[0]) && inside(coords[1]))
                .then(|| (coords[0] + r) as usize * n + (coords[1] + r) as usize),
        }
    }

    /// Physical position of a node.
    pub fn position(&self, index: usize) -> [f64; 2] {
        let h = self.spacing();
        let c = self.coords(index);
        [c[0] as f64 * h, c[1] as f64 * h]
    }

    /// Euclidean distance of a node from the origin.
    pub fn radius(&self, index: usize) -> f64 {
        let [x, y] = self.position(index);
        x.hypot(y)
    }
}

/// Real function sampled on the nodes of a [`Domain`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    domain: Domain,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(domain: Domain, values: Vec<f64>) -> Result<Self> {
        domain.validate()?;
        if values.len() != domain.len() {
            return Err(Error::DimensionMismatch {
                expected: domain.len(),
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(GridFunction { domain, values })
    }

    pub fn zeros(domain: Domain) -> Self {
        GridFunction {
            domain,
            values: vec![0.0; domain.len()],
        }
    }

    /// Samples `f` at every node position.
    pub fn from_fn(domain: Domain, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = (0..domain.len()).map(|i| f(domain.position(i))).collect();
        Self::new(domain, values)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn abs(&self) -> GridFunction {
        GridFunction {
            domain: self.domain,
            values: self.values.iter().map(|v| v.abs()).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> GridFunction {
        GridFunction {
            domain: self.domain,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Pointwise difference `self - other`.
    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.check_same_domain(other)?;
        Ok(GridFunction {
            domain: self.domain,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    /// The function composed with the point reflection `x -> -x`.
    pub fn point_reflected(&self) -> GridFunction {
        let mut values = self.values.clone();
        values.reverse();
        GridFunction {
            domain: self.domain,
            values,
        }
    }

    fn check_same_domain(&self, other: &GridFunction) -> Result<()> {
        if self.domain != other.domain {
            return Err(Error::InvalidDomain("functions live on different grids".into()));
        }
        Ok(())
    }

    fn check_finite(&self) -> Result<()> {
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }
}

/// Norm selector for the discrete spaces `L^p`, `W^{1,p}_0` and `V = L^p ∩ L^{p*}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormKind {
    Lp { p: f64 },
    SobolevSeminorm { p: f64 },
    SobolevFull { p: f64 },
    V { p: f64, pstar: f64 },
}

impl NormKind {
    pub fn eval(&self, u: &GridFunction) -> Result<f64> {
        match *self {
            NormKind::Lp { p } => lp_norm(u, p),
            NormKind::SobolevSeminorm { p } => sobolev_seminorm(u, p),
            NormKind::SobolevFull { p } => x_norm(u, p),
            NormKind::V { p, pstar } => v_norm(u, p, pstar),
        }
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidParameter(format!("exponent p must be >= 1, got {p}")));
    }
    Ok(())
}

/// `sum_i |v_i|^p` without the quadrature weight.
pub(crate) fn power_sum(values: &[f64], p: f64) -> f64 {
    if p == 2.0 {
        values.iter().map(|v| v * v).sum()
    } else {
        values.iter().map(|v| v.abs().powf(p)).sum()
    }
}

/// Discrete `L^p` norm `(sum |u_i|^p h^N)^(1/p)`.
pub fn lp_norm(u: &GridFunction, p: f64) -> Result<f64> {
    check_exponent(p)?;
    u.check_finite()?;
    Ok(lp_norm_of(u.values(), u.domain().cell_volume(), p))
}

pub(crate) fn lp_norm_of(values: &[f64], cell_volume: f64, p: f64) -> f64 {
    (power_sum(values, p) * cell_volume).powf(1.0 / p)
}

/// Norm of `V = L^p ∩ L^{p*}`, taken as the larger of the two norms.
pub fn v_norm(u: &GridFunction, p: f64, pstar: f64) -> Result<f64> {
    check_exponent(p)?;
    if !(pstar > p) {
        return Err(Error::InvalidParameter(format!(
            "pstar must exceed p, got p = {p}, pstar = {pstar}"
        )));
    }
    Ok(lp_norm(u, p)?.max(lp_norm(u, pstar)?))
}

pub(crate) fn v_norm_of(values: &[f64], cell_volume: f64, p: f64, pstar: f64) -> f64 {
    lp_norm_of(values, cell_volume, p).max(lp_norm_of(values, cell_volume, pstar))
}

/// `V`-distance between two value vectors on the same grid.
pub(crate) fn v_distance(a: &[f64], b: &[f64], cell_volume: f64, p: f64, pstar: f64) -> f64 {
    let (mut sp, mut sq) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let d = (x - y).abs();
        sp += d.powf(p);
        sq += d.powf(pstar);
    }
    (sp * cell_volume)
        .powf(1.0 / p)
        .max((sq * cell_volume).powf(1.0 / pstar))
}

/// One difference cell of the forward-difference stencil.
///
/// Cells are indexed by their lower corner `c` with every coordinate in
/// `-1..=n-1` (array offsets), so both ghost layers contribute.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Cell {
    /// Node index of the lower corner, `None` for a ghost node.
    pub node: Option<usize>,
    /// Forward neighbour along each axis (`None` = ghost).
    pub neighbors: [Option<usize>; 2],
}

/// All difference cells of a domain in a fixed order.
pub(crate) fn cells(domain: &Domain) -> Vec<Cell> {
    let n = domain.points_per_axis as i64;
    let at = |i: i64| (0..n).contains(&i);
    match domain.dimension {
        1 => (-1..n)
            .map(|i| Cell {
                node: at(i).then_some(i as usize),
                neighbors: [at(i + 1).then_some((i + 1) as usize), None],
            })
            .collect(),
        _ => {
            let idx = |i: i64, j: i64| (at(i) && at(j)).then(|| (i * n + j) as usize);
            let mut out = Vec::with_capacity(((n + 1) * (n + 1)) as usize);
            for i in -1..n {
                for j in -1..n {
                    out.push(Cell {
                        node: idx(i, j),
                        neighbors: [idx(i + 1, j), idx(i, j + 1)],
                    });
                }
            }
            out
        }
    }
}

/// Forward differences of the zero-extended function for every cell.
pub(crate) fn cell_gradients(domain: &Domain, values: &[f64]) -> Vec<[f64; 2]> {
    let h = domain.spacing();
    let get = |i: Option<usize>| i.map_or(0.0, |i| values[i]);
    cells(domain)
        .iter()
        .map(|c| {
            let base = get(c.node);
            let mut g = [0.0; 2];
            for (axis, nb) in c.neighbors.iter().enumerate().take(domain.dimension) {
                g[axis] = (get(*nb) - base) / h;
            }
            g
        })
        .collect()
}

pub(crate) fn seminorm_of(domain: &Domain, values: &[f64], p: f64) -> f64 {
    let sum: f64 = cell_gradients(domain, values)
        .iter()
        .map(|g| {
            let sq = g[0] * g[0] + g[1] * g[1];
            if p == 2.0 {
                sq
            } else {
                sq.sqrt().powf(p)
            }
        })
        .sum();
    (sum * domain.cell_volume()).powf(1.0 / p)
}

/// Discrete `W^{1,p}_0` seminorm from forward differences with zero ghost nodes.
pub fn sobolev_seminorm(u: &GridFunction, p: f64) -> Result<f64> {
    check_exponent(p)?;
    u.check_finite()?;
    Ok(seminorm_of(u.domain(), u.values(), p))
}

/// Full discrete `W^{1,p}_0` norm `(|u|_p^p + |∇u|_p^p)^(1/p)`, the norm of `X`.
pub fn x_norm(u: &GridFunction, p: f64) -> Result<f64> {
    check_exponent(p)?;
    u.check_finite()?;
    Ok(x_norm_of(u.domain(), u.values(), p))
}

pub(crate) fn x_norm_of(domain: &Domain, values: &[f64], p: f64) -> f64 {
    let a = lp_norm_of(values, domain.cell_volume(), p);
    let b = seminorm_of(domain, values, p);
    (a.powf(p) + b.powf(p)).powf(1.0 / p)
}

/// Mirror image of node `index` across the boundary of `polarizer`.
///
/// Returns `Ok(None)` when the mirror image falls outside the cube, where
/// functions vanish.
pub fn reflect(domain: &Domain, index: usize, polarizer: &Polarizer) -> Result<Option<usize>> {
    let map = polarizer.lattice_map(domain)?;
    Ok(domain.index_of(map.reflect(domain.coords(index))))
}

/// Estimate of the embedding constant `K` with `|u|_V <= K |u|_X`.
///
/// Maximizes the ratio over node indicators, a family of Gaussian bumps and
/// random functions, then applies a safety factor of 2.
pub fn embed_constant(domain: &Domain, p: f64, pstar: f64, samples: usize, seed: u64) -> Result<f64> {
    check_exponent(p)?;
    if !(pstar > p) {
        return Err(Error::InvalidParameter("pstar must exceed p".into()));
    }
    domain.validate()?;
    let vol = domain.cell_volume();
    let ratio = |values: &[f64]| -> Option<f64> {
        let x = x_norm_of(domain, values, p);
        (x > 0.0).then(|| v_norm_of(values, vol, p, pstar) / x)
    };

    let mut best: f64 = 0.0;
    let mut probe = vec![0.0; domain.len()];
    for i in 0..domain.len() {
        probe.iter_mut().for_each(|v| *v = 0.0);
        probe[i] = 1.0;
        best = best.max(ratio(&probe).unwrap_or(0.0));
    }
    let widths = [0.5, 1.0, 2.0, 4.0, 8.0];
    for w in widths {
        let width = w * domain.spacing();
        let bump: Vec<f64> = (0..domain.len())
            .map(|i| (-(domain.radius(i) / width).powi(2)).exp())
            .collect();
        best = best.max(ratio(&bump).unwrap_or(0.0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let values: Vec<f64> = (0..domain.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        if let Some(r) = ratio(&values) {
            best = best.max(r);
        }
    }
    Ok(2.0 * best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rearrange::Normal;

    fn line3() -> Domain {
        Domain::line(1.0, 3).unwrap()
    }

    #[test]
    fn domain_rejects_even_or_tiny_grids() {
        assert!(Domain::line(1.0, 4).is_err());
        assert!(Domain::line(1.0, 1).is_err());
        assert!(Domain::line(0.0, 5).is_err());
        assert!(Domain::new(3, 1.0, 5).is_err());
        assert_eq!(Domain::line(8.0, 129).unwrap().spacing(), 0.125);
    }

    #[test]
    fn coords_round_trip() {
        for d in [Domain::line(2.0, 9).unwrap(), Domain::square(2.0, 7).unwrap()] {
            for i in 0..d.len() {
                assert_eq!(d.index_of(d.coords(i)), Some(i));
            }
        }
    }

    #[test]
    fn lp_norm_of_zero_and_hand_example() {
        let d = line3();
        assert_eq!(lp_norm(&GridFunction::zeros(d), 2.0).unwrap(), 0.0);
        let u = GridFunction::new(d, vec![0.0, 2.0, 0.0]).unwrap();
        assert!((lp_norm(&u, 2.0).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let d = line3();
        assert_eq!(
            GridFunction::new(d, vec![0.0, f64::NAN, 0.0]).unwrap_err(),
            Error::NonFinite
        );
        let mut u = GridFunction::zeros(d);
        u.values_mut()[1] = f64::INFINITY;
        assert_eq!(lp_norm(&u, 2.0).unwrap_err(), Error::NonFinite);
        assert_eq!(sobolev_seminorm(&u, 2.0).unwrap_err(), Error::NonFinite);
    }

    #[test]
    fn v_norm_hand_example() {
        let u = GridFunction::new(line3(), vec![0.0, 2.0, 0.0]).unwrap();
        // L^2 = 2, L^4 = (16)^(1/4) = 2.
        let expected = 2.0f64.max(16f64.powf(0.25));
        assert!((v_norm(&u, 2.0, 4.0).unwrap() - expected).abs() < 1e-15);
        assert!(v_norm(&u, 2.0, 2.0).is_err());
    }

    #[test]
    fn seminorm_hand_example() {
        // differences with both ghosts: 0, 1, -1, 0
        let u = GridFunction::new(line3(), vec![0.0, 1.0, 0.0]).unwrap();
        assert!((sobolev_seminorm(&u, 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(sobolev_seminorm(&GridFunction::zeros(line3()), 2.0).unwrap(), 0.0);
    }

    #[test]
    fn seminorm_sees_boundary_jump_of_constants() {
        let d = Domain::line(1.0, 5).unwrap();
        let u = GridFunction::new(d, vec![1.0; 5]).unwrap();
        assert!(sobolev_seminorm(&u, 2.0).unwrap() > 0.0);
    }

    #[test]
    fn seminorm_is_reflection_invariant() {
        let d = Domain::line(3.0, 13).unwrap();
        let u = GridFunction::from_fn(d, |x| (x[0] + 0.7).sin() + 0.3 * x[0]).unwrap();
        for p in [1.0, 2.0, 3.5] {
            let a = sobolev_seminorm(&u, p).unwrap();
            let b = sobolev_seminorm(&u.point_reflected(), p).unwrap();
            assert!((a - b).abs() < 1e-12 * a.max(1.0));
        }
    }

    #[test]
    fn reflect_fixes_boundary_nodes_and_mirrors() {
        let d = Domain::line(1.0, 3).unwrap();
        let h = Polarizer::new(Normal::axis(0), 0.0).unwrap();
        // node 1 sits at the origin, on the boundary
        assert_eq!(reflect(&d, 1, &h).unwrap(), Some(1));
        assert_eq!(reflect(&d, 0, &h).unwrap(), Some(2));

        // boundary through the midpoint 0.5 of a unit-spaced grid
        let d = Domain::line(2.0, 5).unwrap();
        let mid = Polarizer::new(Normal::axis(0), 0.5).unwrap();
        let zero = d.index_of([0, 0]).unwrap();
        let one = d.index_of([1, 0]).unwrap();
        assert_eq!(reflect(&d, zero, &mid).unwrap(), Some(one));
    }

    #[test]
    fn reflection_outside_cube_is_reported() {
        let d = Domain::line(2.0, 5).unwrap();
        let h = Polarizer::new(Normal::axis(0), 1.0).unwrap();
        let left = d.index_of([-2, 0]).unwrap();
        assert_eq!(reflect(&d, left, &h).unwrap(), None);
    }

    #[test]
    fn incompatible_offsets_are_rejected() {
        let d = Domain::line(2.0, 5).unwrap();
        let h = Polarizer::new(Normal::axis(0), 0.3).unwrap();
        assert!(matches!(reflect(&d, 0, &h), Err(Error::IncompatiblePolarizer(_))));
        let diag = Polarizer::new(Normal::diagonal(1, 1), 0.0).unwrap();
        assert!(reflect(&d, 0, &diag).is_err());
    }

    #[test]
    fn reflect_is_involution_exhaustively() {
        for d in [Domain::line(2.0, 9).unwrap(), Domain::square(2.0, 7).unwrap()] {
            for h in crate::rearrange::compatible_polarizers(&d) {
                for i in 0..d.len() {
                    if let Some(j) = reflect(&d, i, &h).unwrap() {
                        assert_eq!(reflect(&d, j, &h).unwrap(), Some(i), "{h:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn embed_constant_dominates_ratio() {
        let d = Domain::line(8.0, 65).unwrap();
        let k = embed_constant(&d, 2.0, 4.0, 200, 7).unwrap();
        assert!(k.is_finite() && k > 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let v: Vec<f64> = (0..d.len()).map(|_| rng.random_range(-3.0..3.0)).collect();
            let u = GridFunction::new(d, v).unwrap();
            let lhs = v_norm(&u, 2.0, 4.0).unwrap();
            assert!(lhs <= k * x_norm(&u, 2.0).unwrap());
            assert!(lhs <= k * (lp_norm(&u, 2.0).unwrap() + sobolev_seminorm(&u, 2.0).unwrap()));
        }
    }
}
