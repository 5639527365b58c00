//! Polarization (two-point rearrangement), discrete Schwarz symmetrization
//! and their iterated approximations.
//!
//! All operators act on `|u|`; sign-changing inputs go through [`theta`]
//! first. Polarizers are restricted to half-spaces whose reflection maps grid
//! nodes onto grid nodes, so a polarization is an exact permutation of node
//! values.
//!
//! # Discrete symmetric rearrangement
//!
//! Nodes are ranked by `(|k|^2, k_x, k_y)` where `k` are the centered integer
//! coordinates. [`schwarz`] writes the values of `|u|` in decreasing order
//! onto the nodes in increasing rank. The result is radially nonincreasing and
//! equimeasurable with `|u|`; nodes on a common shell are filled
//! lexicographically, so the negative half receives the larger value of each
//! mirror pair.
//!
//! For half-spaces whose boundary passes through the origin only one
//! orientation is admitted: the one whose normal has a positive first nonzero
//! component. With that convention every admissible polarizer moves values
//! toward lower rank, hence `schwarz(u)` is fixed by all of them and is the
//! limit of iterated polarizations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{v_distance, Domain, GridFunction, NormKind};
use crate::minimax::Path;

/// Integer lattice direction of a polarizer normal.
///
/// Entries are in `{-1, 0, 1}`; axis directions and the four diagonals are
/// admitted, matching the grid symmetries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[i8; 2]", into = "[i8; 2]")]
pub struct Normal([i8; 2]);

impl Normal {
    pub fn new(components: [i8; 2]) -> Result<Self> {
        let ok = components.iter().all(|c| (-1..=1).contains(c)) && components != [0, 0];
        if !ok {
            return Err(Error::IncompatiblePolarizer(format!(
                "normal {components:?} is not an axis or diagonal direction"
            )));
        }
        Ok(Normal(components))
    }

    /// Positive coordinate direction `e_axis`.
    pub fn axis(axis: usize) -> Self {
        let mut c = [0; 2];
        c[axis.min(1)] = 1;
        Normal(c)
    }

    pub fn diagonal(sx: i8, sy: i8) -> Self {
        Normal([sx.signum(), sy.signum()])
    }

    pub fn negated(self) -> Self {
        Normal([-self.0[0], -self.0[1]])
    }

    pub fn components(&self) -> [i8; 2] {
        self.0
    }

    /// Unit vector `alpha`.
    pub fn unit(&self) -> [f64; 2] {
        let len = (self.squared_len() as f64).sqrt();
        [self.0[0] as f64 / len, self.0[1] as f64 / len]
    }

    fn squared_len(&self) -> i64 {
        self.0.iter().map(|&c| (c as i64) * (c as i64)).sum()
    }

    /// First nonzero component positive.
    pub fn is_lex_positive(&self) -> bool {
        match self.0 {
            [0, y] => y > 0,
            [x, _] => x > 0,
        }
    }

    fn all(dimension: usize) -> Vec<Normal> {
        let mut out = vec![Normal([1, 0]), Normal([-1, 0])];
        if dimension == 2 {
            out.extend([
                Normal([0, 1]),
                Normal([0, -1]),
                Normal([1, 1]),
                Normal([-1, -1]),
                Normal([1, -1]),
                Normal([-1, 1]),
            ]);
        }
        out
    }
}

impl TryFrom<[i8; 2]> for Normal {
    type Error = Error;
    fn try_from(c: [i8; 2]) -> Result<Self> {
        Normal::new(c)
    }
}

impl From<Normal> for [i8; 2] {
    fn from(n: Normal) -> Self {
        n.0
    }
}

/// Closed half-space `H = {x : alpha . x <= beta}` with `beta >= 0`, so `0 ∈ H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolarizerRepr", into = "PolarizerRepr")]
pub struct Polarizer {
    normal: Normal,
    offset: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolarizerRepr {
    normal: Normal,
    offset: f64,
}

impl TryFrom<PolarizerRepr> for Polarizer {
    type Error = Error;
    fn try_from(r: PolarizerRepr) -> Result<Self> {
        Polarizer::new(r.normal, r.offset)
    }
}

impl From<Polarizer> for PolarizerRepr {
    fn from(p: Polarizer) -> Self {
        PolarizerRepr {
            normal: p.normal,
            offset: p.offset,
        }
    }
}

impl Polarizer {
    /// Half-space `{alpha . x <= offset}`.
    ///
    /// A zero offset requires the orientation convention described in the
    /// module docs (normal with positive first nonzero component).
    pub fn new(normal: Normal, offset: f64) -> Result<Self> {
        if !offset.is_finite() || offset < 0.0 {
            return Err(Error::IncompatiblePolarizer(format!(
                "offset must be finite and >= 0 so that 0 lies in H, got {offset}"
            )));
        }
        if offset == 0.0 && !normal.is_lex_positive() {
            return Err(Error::IncompatiblePolarizer(format!(
                "half-space through the origin must use the normal {:?}",
                normal.negated().components()
            )));
        }
        Ok(Polarizer { normal, offset })
    }

    /// `{x <= 0}` on the first axis.
    pub fn origin() -> Self {
        Polarizer {
            normal: Normal::axis(0),
            offset: 0.0,
        }
    }

    pub fn normal(&self) -> Normal {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Whether the node lies in the closed half-space.
    pub fn contains(&self, domain: &Domain, index: usize) -> Result<bool> {
        let map = self.lattice_map(domain)?;
        Ok(map.side(domain.coords(index)) <= 0)
    }

    pub(crate) fn lattice_map(&self, domain: &Domain) -> Result<LatticeMap> {
        let c = self.normal.components();
        if domain.dimension == 1 && c[1] != 0 {
            return Err(Error::IncompatiblePolarizer(
                "two-dimensional normal on a one-dimensional grid".into(),
            ));
        }
        let w = self.normal.squared_len();
        // alpha.x <= beta  <=>  (2/w) c.k <= t  with  t = 2 beta / (h |c|)
        let t = 2.0 * self.offset / (domain.spacing() * (w as f64).sqrt());
        let rounded = t.round();
        if (t - rounded).abs() > 1e-9 * t.abs().max(1.0) {
            return Err(Error::IncompatiblePolarizer(format!(
                "boundary at offset {} does not map grid nodes to grid nodes",
                self.offset
            )));
        }
        Ok(LatticeMap {
            c: [c[0] as i64, c[1] as i64],
            factor: 2 / w,
            t: rounded as i64,
        })
    }

    /// Node pairs `(inside, mirror)` exchanged by this polarizer; nodes whose
    /// mirror leaves the cube are paired with `None`.
    pub(crate) fn pairs(&self, domain: &Domain) -> Result<Vec<(usize, Option<usize>)>> {
        let map = self.lattice_map(domain)?;
        Ok((0..domain.len())
            .filter_map(|i| {
                let k = domain.coords(i);
                (map.side(k) < 0).then(|| (i, domain.index_of(map.reflect(k))))
            })
            .collect())
    }
}

/// Reflection across `∂H` in centered integer coordinates.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LatticeMap {
    c: [i64; 2],
    factor: i64,
    t: i64,
}

impl LatticeMap {
    /// Negative strictly inside `H`, zero on the boundary, positive outside.
    pub fn side(&self, k: [i64; 2]) -> i64 {
        self.factor * (self.c[0] * k[0] + self.c[1] * k[1]) - self.t
    }

    pub fn reflect(&self, k: [i64; 2]) -> [i64; 2] {
        let s = self.side(k);
        [k[0] - s * self.c[0], k[1] - s * self.c[1]]
    }
}

/// All admissible polarizers of a grid whose boundary cuts the cube.
pub fn compatible_polarizers(domain: &Domain) -> Vec<Polarizer> {
    let h = domain.spacing();
    let r = domain.radius_steps();
    let mut out = Vec::new();
    for normal in Normal::all(domain.dimension) {
        let len = (normal.squared_len() as f64).sqrt();
        for t in 0..2 * r {
            if t == 0 && !normal.is_lex_positive() {
                continue;
            }
            let offset = t as f64 * h * len / 2.0;
            out.push(Polarizer { normal, offset });
        }
    }
    out
}

/// Ordered word `H_1 H_2 ... H_m`, applied left to right.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PolarizerSequence {
    pub items: Vec<Polarizer>,
}

impl PolarizerSequence {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        let mut out = theta(u);
        for h in &self.items {
            out = polarize(&out, h)?;
        }
        Ok(out)
    }
}

/// Greedy iterated-polarization settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SymmetrizationConfig {
    /// Random polarizers tried per greedy step.
    pub candidate_count: usize,
    /// Target distance to the symmetric rearrangement.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Scan every admissible polarizer when no random candidate improves.
    pub exhaustive_fallback: bool,
}

impl Default for SymmetrizationConfig {
    fn default() -> Self {
        SymmetrizationConfig {
            candidate_count: 32,
            tolerance: 1e-3,
            max_iterations: 500,
            exhaustive_fallback: true,
        }
    }
}

impl SymmetrizationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.candidate_count == 0 || self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "candidate_count and max_iterations must be >= 1".into(),
            ));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// `Θ(u) = |u|`, the Lipschitz retraction onto nonnegative functions.
pub fn theta(u: &GridFunction) -> GridFunction {
    u.abs()
}

/// Polarization `u^H := |u|^H`: larger value of each mirror pair on the `H`
/// side, smaller on the other.
pub fn polarize(u: &GridFunction, polarizer: &Polarizer) -> Result<GridFunction> {
    let pairs = polarizer.pairs(u.domain())?;
    let mut out = theta(u);
    apply_pairs(&pairs, out.values_mut());
    Ok(out)
}

/// In-place polarization of nonnegative values.
pub(crate) fn apply_pairs(pairs: &[(usize, Option<usize>)], values: &mut [f64]) {
    for &(inside, mirror) in pairs {
        if let Some(m) = mirror {
            if values[m] > values[inside] {
                values.swap(inside, m);
            }
        }
    }
}

/// Node indices sorted by increasing rank `(|k|^2, k_x, k_y)`.
pub fn rank_order(domain: &Domain) -> Vec<usize> {
    let mut order: Vec<usize> = (0..domain.len()).collect();
    order.sort_by_key(|&i| {
        let k = domain.coords(i);
        (k[0] * k[0] + k[1] * k[1], k[0], k[1])
    });
    order
}

/// Discrete Schwarz symmetrization `u* := |u|*`.
pub fn schwarz(u: &GridFunction) -> GridFunction {
    let order = rank_order(u.domain());
    schwarz_with_order(u, &order)
}

fn schwarz_with_order(u: &GridFunction, order: &[usize]) -> GridFunction {
    let mut sorted: Vec<f64> = u.values().iter().map(|v| v.abs()).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut out = GridFunction::zeros(*u.domain());
    let vals = out.values_mut();
    for (&node, v) in order.iter().zip(sorted) {
        vals[node] = v;
    }
    out
}

/// Distance between two value vectors in the given norm.
pub(crate) fn distance(norm: NormKind, domain: &Domain, a: &[f64], b: &[f64]) -> f64 {
    match norm {
        NormKind::V { p, pstar } => v_distance(a, b, domain.cell_volume(), p, pstar),
        other => {
            let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            // values are finite by construction
            other
                .eval(&GridFunction::new(*domain, diff).expect("finite difference"))
                .expect("valid norm")
        }
    }
}

/// Output of [`approximate_symmetrization`].
#[derive(Debug, Clone)]
pub struct Symmetrized {
    /// `u^{H_1...H_m}`.
    pub function: GridFunction,
    pub word: PolarizerSequence,
    /// Distance to `u*` before the first and after every accepted polarizer.
    pub trace: Vec<f64>,
    pub converged: bool,
}

impl Symmetrized {
    pub fn distance(&self) -> f64 {
        *self.trace.last().expect("trace holds the initial distance")
    }
}

struct Greedy<'a> {
    domain: &'a Domain,
    cfg: &'a SymmetrizationConfig,
    pool: Vec<Polarizer>,
    rng: ChaCha8Rng,
}

impl Greedy<'_> {
    /// Best polarizer for `objective`, if it strictly improves on `current`.
    fn step<F>(&mut self, current: f64, objective: F) -> Result<Option<(Polarizer, f64)>>
    where
        F: Fn(&[(usize, Option<usize>)]) -> f64 + Sync,
    {
        let candidates: Vec<Polarizer> = (0..self.cfg.candidate_count)
            .map(|_| self.pool[self.rng.random_range(0..self.pool.len())])
            .collect();
        if let Some(best) = self.best_of(&candidates, current, &objective)? {
            return Ok(Some(best));
        }
        if self.cfg.exhaustive_fallback {
            let pool = self.pool.clone();
            return self.best_of(&pool, current, &objective);
        }
        Ok(None)
    }

    fn best_of<F>(&self, candidates: &[Polarizer], current: f64, objective: &F) -> Result<Option<(Polarizer, f64)>>
    where
        F: Fn(&[(usize, Option<usize>)]) -> f64 + Sync,
    {
        let scores: Vec<f64> = candidates
            .par_iter()
            .map(|h| h.pairs(self.domain).map(|pairs| objective(&pairs)))
            .collect::<Result<_>>()?;
        // ordered reduction, first minimum wins
        let mut best: Option<(Polarizer, f64)> = None;
        for (h, s) in candidates.iter().zip(scores) {
            if s < current && best.is_none_or(|(_, b)| s < b) {
                best = Some((*h, s));
            }
        }
        Ok(best)
    }
}

/// Greedy iterated polarization toward `schwarz(u)`.
///
/// Each step draws `candidate_count` admissible polarizers, keeps the one
/// that most decreases the distance to `u*` and stops when the tolerance is
/// met, no polarizer improves, or `max_iterations` is reached. The distance
/// trace is strictly decreasing.
pub fn approximate_symmetrization(
    u: &GridFunction,
    cfg: &SymmetrizationConfig,
    norm: NormKind,
    seed: u64,
) -> Result<Symmetrized> {
    cfg.validate()?;
    let domain = *u.domain();
    let target = schwarz(u);
    let mut current = theta(u);
    let mut dist = distance(norm, &domain, current.values(), target.values());
    let mut trace = vec![dist];
    let mut word = PolarizerSequence::default();
    let mut greedy = Greedy {
        domain: &domain,
        cfg,
        pool: compatible_polarizers(&domain),
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    while dist > cfg.tolerance && word.len() < cfg.max_iterations {
        let base = current.values().to_vec();
        let tv = target.values();
        let objective = |pairs: &[(usize, Option<usize>)]| {
            let mut trial = base.clone();
            apply_pairs(pairs, &mut trial);
            distance(norm, &domain, &trial, tv)
        };
        let Some((h, d)) = greedy.step(dist, objective)? else {
            break;
        };
        current = polarize(&current, &h)?;
        word.items.push(h);
        dist = d;
        trace.push(d);
    }
    Ok(Symmetrized {
        function: current,
        converged: dist <= cfg.tolerance,
        word,
        trace,
    })
}

/// Output of [`approximate_curve`].
#[derive(Debug, Clone)]
pub struct CurveApproximation {
    pub path: Path,
    /// Shared word, starting with `H_0`.
    pub word: PolarizerSequence,
    /// `max_{τ ∈ M} |γ̃(τ) - γ(τ)*|_V` at exit.
    pub max_distance: f64,
}

/// Polarizes a path of nonnegative functions toward its pointwise Schwarz
/// symmetrization on the node set `marked`.
///
/// Endpoints, and nodes equal to an endpoint, receive `H_0` only; every other
/// node receives the same word
/// `H_0 H_1 ... H_m`, grown greedily until every marked node is within
/// `delta` of its rearrangement. Failure to reach `delta` sets the path's
/// approximation flag.
#[allow(clippy::too_many_arguments)]
pub fn approximate_curve(
    path: &Path,
    domain: &Domain,
    marked: &[usize],
    h0: &Polarizer,
    delta: f64,
    cfg: &SymmetrizationConfig,
    norm: NormKind,
    seed: u64,
) -> Result<CurveApproximation> {
    cfg.validate()?;
    let last = path.len() - 1;
    if marked.iter().any(|&i| i == 0 || i >= last) {
        return Err(Error::InvalidParameter(
            "marked set must avoid the endpoints and stay inside the path".into(),
        ));
    }
    if path.nodes().iter().flatten().any(|&v| v < 0.0) {
        return Err(Error::InvalidParameter("path nodes must be nonnegative".into()));
    }
    let pairs0 = h0.pairs(domain)?;
    let mut nodes: Vec<Vec<f64>> = path.nodes().to_vec();
    for node in nodes.iter_mut() {
        if node.len() != domain.len() {
            return Err(Error::DimensionMismatch {
                expected: domain.len(),
                actual: node.len(),
            });
        }
        apply_pairs(&pairs0, node);
    }
    let order = rank_order(domain);
    let targets: Vec<Vec<f64>> = marked
        .iter()
        .map(|&i| {
            let g = GridFunction::new(*domain, nodes[i].clone())?;
            Ok(schwarz_with_order(&g, &order).into_values())
        })
        .collect::<Result<_>>()?;
    let objective_of = |nodes: &[Vec<f64>], pairs: Option<&[(usize, Option<usize>)]>| -> f64 {
        marked
            .iter()
            .zip(&targets)
            .map(|(&i, t)| match pairs {
                Some(pairs) => {
                    let mut trial = nodes[i].clone();
                    apply_pairs(pairs, &mut trial);
                    distance(norm, domain, &trial, t)
                }
                None => distance(norm, domain, &nodes[i], t),
            })
            .fold(0.0, f64::max)
    };

    // nodes sitting at an endpoint (as after a collapsing reparametrization)
    // keep the H_0 image only
    let collapsed: Vec<bool> = nodes.iter().map(|n| *n == nodes[0] || *n == nodes[last]).collect();
    if let Some(&i) = marked.iter().find(|&&i| collapsed[i]) {
        return Err(Error::InvalidParameter(format!(
            "marked node {i} coincides with an endpoint"
        )));
    }
    let mut word = PolarizerSequence { items: vec![*h0] };
    let mut current = objective_of(&nodes, None);
    let mut greedy = Greedy {
        domain,
        cfg,
        pool: compatible_polarizers(domain),
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let mut steps = 0;
    while current > delta && steps < cfg.max_iterations {
        let snapshot = nodes.clone();
        let found = greedy.step(current, |pairs| objective_of(&snapshot, Some(pairs)))?;
        let Some((h, d)) = found else { break };
        let pairs = h.pairs(domain)?;
        for (node, _) in nodes.iter_mut().zip(&collapsed).filter(|(_, c)| !**c) {
            apply_pairs(&pairs, node);
        }
        word.items.push(h);
        current = d;
        steps += 1;
    }
    let mut out = Path::new(nodes, path.family())?;
    out.set_approximation_failed(current > delta);
    Ok(CurveApproximation {
        path: out,
        word,
        max_distance: current,
    })
}
