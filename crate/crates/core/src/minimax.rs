//! Mountain-pass minimax over discretized paths.
//!
//! A path is an ordered list of nodes from `0` to an endpoint `v` with
//! `f(λ; v) < 0`. [`descend_path`] lowers the path maximum with a
//! string-method style deformation: nodes whose energy lies within a band of
//! the current maximum take backtracking gradient steps in the Riesz metric
//! (displacement capped per sweep), endpoints stay fixed, and the nodes are
//! then redistributed evenly by arc length.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{dot, Functional};
use crate::rearrange::Polarizer;

/// Admissible path classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "endpoint", rename_all = "snake_case")]
pub enum PathFamily {
    /// `γ(0) = 0`, `γ(1) = v` for a prescribed `v`.
    FixedEndpoint(Vec<f64>),
    /// `γ(0) = 0`, `f(λ; γ(1)) < 0` at the λ in use.
    NegativeEndpoint,
}

/// A discretized curve `γ: [0, 1] → X`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    nodes: Vec<Vec<f64>>,
    family: PathFamily,
    approximation_failed: bool,
}

impl Path {
    /// Validates node count, shapes, finiteness and the endpoint constraints
    /// that do not depend on λ.
    pub fn new(nodes: Vec<Vec<f64>>, family: PathFamily) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::InvalidParameter(format!(
                "a path needs at least 3 nodes, got {}",
                nodes.len()
            )));
        }
        let dim = nodes[0].len();
        if let Some(bad) = nodes.iter().find(|n| n.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: bad.len(),
            });
        }
        if nodes.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if nodes[0].iter().any(|&v| v != 0.0) {
            return Err(Error::EndpointViolation("γ(0) must vanish".into()));
        }
        if let PathFamily::FixedEndpoint(v) = &family {
            if nodes.last() != Some(v) {
                return Err(Error::EndpointViolation("γ(1) differs from the fixed endpoint".into()));
            }
        }
        Ok(Path {
            nodes,
            family,
            approximation_failed: false,
        })
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<Vec<f64>> {
        self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn family(&self) -> PathFamily {
        self.family.clone()
    }

    pub fn endpoint(&self) -> &[f64] {
        self.nodes.last().expect("paths have at least 3 nodes")
    }

    /// Set when a symmetric curve approximation missed its tolerance.
    pub fn approximation_failed(&self) -> bool {
        self.approximation_failed
    }

    pub fn set_approximation_failed(&mut self, failed: bool) {
        self.approximation_failed = failed;
    }

    /// Checks `f(λ; γ(1)) < 0`.
    pub fn check_membership<F: Functional + ?Sized>(&self, fam: &F, lambda: f64) -> Result<()> {
        let e = fam.energy(lambda, self.endpoint())?;
        if e >= 0.0 {
            return Err(Error::EndpointViolation(format!(
                "f(λ; γ(1)) = {e} is not negative at λ = {lambda}"
            )));
        }
        Ok(())
    }
}

/// Settings of the path deformation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinimaxConfig {
    pub m_nodes: usize,
    /// Gradient steps per moved node and sweep.
    pub descent_steps: usize,
    pub initial_step: f64,
    /// Backtracking factor in `(0, 1)`.
    pub shrink: f64,
    /// Armijo constant.
    pub sufficient_decrease: f64,
    pub max_backtracks: usize,
    /// A sweep must lower the path maximum by more than this to count.
    pub stall_tolerance: f64,
    pub max_sweeps: usize,
    /// Nodes with energy within `band` of the path maximum are moved.
    pub band: f64,
    /// Cap on the `X`-norm displacement of a node in one sweep.
    pub max_displacement: f64,
    /// Center of the endpoint profile along the first axis.
    pub endpoint_shift: f64,
    /// Amplitude of the interior bend of initial paths.
    pub perturbation: f64,
    /// Polarizer fixing the endpoint, `v = v^{H_0}`.
    pub h0: Polarizer,
}

impl Default for MinimaxConfig {
    fn default() -> Self {
        MinimaxConfig {
            m_nodes: 65,
            descent_steps: 1,
            initial_step: 1.0,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            max_backtracks: 30,
            stall_tolerance: 1e-9,
            max_sweeps: 4000,
            band: 0.5,
            max_displacement: 0.25,
            endpoint_shift: -1.0,
            perturbation: 0.3,
            h0: Polarizer::origin(),
        }
    }
}

impl MinimaxConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.initial_step,
            self.sufficient_decrease,
            self.stall_tolerance,
            self.band,
            self.max_displacement,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(
                "minimax step parameters must be positive".into(),
            ));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::InvalidParameter("shrink factor must lie in (0, 1)".into()));
        }
        if self.m_nodes < 3 || self.descent_steps == 0 || self.max_sweeps == 0 || self.max_backtracks == 0 {
            return Err(Error::InvalidParameter(
                "m_nodes >= 3 and positive step/sweep counts required".into(),
            ));
        }
        if !(self.perturbation >= 0.0 && self.endpoint_shift.is_finite()) {
            return Err(Error::InvalidParameter("perturbation must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Per-sweep deformation statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRecord {
    /// Path maximum after the sweep.
    pub value: f64,
    pub moved: usize,
    /// Largest node displacement in the `X` norm before redistribution.
    pub max_displacement: f64,
    /// Every moved node strictly lowered its energy.
    pub energies_decreased: bool,
}

/// Estimate `ĉ(λ)` of the mountain-pass level.
#[derive(Debug, Clone)]
pub struct MPEstimate {
    pub lambda: f64,
    pub value: f64,
    pub argmax_index: usize,
    pub path: Path,
    /// Stopped because a sweep made less than `stall_tolerance` progress.
    pub converged: bool,
    /// Accepted sweeps.
    pub sweeps: usize,
    /// Path maximum before the first and after every accepted sweep.
    pub trace: Vec<f64>,
    pub sweep_log: Vec<SweepRecord>,
    pub restart_id: usize,
    /// Values reached by every restart, in restart order.
    pub restart_values: Vec<f64>,
}

impl MPEstimate {
    /// `(max - min) / |min|` over the restart values.
    pub fn restart_dispersion(&self) -> f64 {
        let lo = self.restart_values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.restart_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if self.restart_values.len() < 2 {
            0.0
        } else {
            (hi - lo) / lo.abs().max(f64::MIN_POSITIVE)
        }
    }

    /// `lambda,value,argmax_index,sweeps,converged,restart_id` row.
    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{:.16e},{},{},{},{}",
            self.lambda, self.value, self.argmax_index, self.sweeps, self.converged, self.restart_id
        )
    }

    pub const CSV_HEADER: &'static str = "lambda,value,argmax_index,sweeps,converged,restart_id";
}

/// Straight segment `0 → v` with a bent interior, `v = (s · template)^{H_0}`
/// and the scale `s` grown by a factor 1.25 until `f(λ; v) < 0`.
pub fn make_initial_path<F: Functional + ?Sized>(fam: &F, lambda: f64, cfg: &MinimaxConfig, seed: u64) -> Result<Path> {
    cfg.validate()?;
    fam.check_lambda(lambda)?;
    let base = fam.polarize_values(&fam.template(cfg.endpoint_shift), &cfg.h0)?;
    const ATTEMPTS: usize = 120;
    let mut scale = 1.0;
    let mut endpoint = None;
    for _ in 0..ATTEMPTS {
        let v: Vec<f64> = base.iter().map(|b| scale * b).collect();
        if fam.energy(lambda, &v)? < 0.0 {
            endpoint = Some(v);
            break;
        }
        scale *= 1.25;
    }
    let v = endpoint.ok_or(Error::NoNegativeEndpoint { attempts: ATTEMPTS })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mode = fam.perturbation_mode(&mut rng);
    let amplitude = cfg.perturbation * scale * rng.random_range(0.5..1.0);
    let m = cfg.m_nodes;
    let nodes = (0..m)
        .map(|k| {
            let t = k as f64 / (m - 1) as f64;
            let bend = amplitude * (std::f64::consts::PI * t).sin();
            if k == 0 {
                vec![0.0; v.len()]
            } else if k == m - 1 {
                v.clone()
            } else {
                v.iter().zip(&mode).map(|(a, b)| t * a + bend * b).collect()
            }
        })
        .collect();
    Path::new(nodes, PathFamily::FixedEndpoint(v))
}

/// Node energies along a path.
pub fn node_energies<F: Functional + ?Sized>(fam: &F, lambda: f64, path: &Path) -> Result<Vec<f64>> {
    path.nodes().par_iter().map(|n| fam.energy(lambda, n)).collect()
}

/// Maximum node energy and its first attaining index.
pub fn path_max<F: Functional + ?Sized>(fam: &F, lambda: f64, path: &Path) -> Result<(f64, usize)> {
    Ok(argmax(&node_energies(fam, lambda, path)?))
}

fn argmax(values: &[f64]) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, &v) in values.iter().enumerate() {
        if v > best.0 {
            best = (v, i);
        }
    }
    best
}

/// Result of moving one node.
struct NodeStep {
    node: Vec<f64>,
    moved: bool,
    displacement: f64,
    decreased: bool,
}

fn descend_node<F: Functional + ?Sized>(
    fam: &F,
    lambda: f64,
    start: &[f64],
    energy: f64,
    cfg: &MinimaxConfig,
) -> Result<NodeStep> {
    let mut u = start.to_vec();
    let mut f = energy;
    let mut budget = cfg.max_displacement;
    let mut moved = false;
    for _ in 0..cfg.descent_steps {
        let g = fam.gradient(lambda, &u)?;
        let d = fam.riesz(&g);
        let gd = dot(&g, &d);
        let dn = fam.x_norm(&d);
        if !(gd > 0.0 && dn > 0.0) || budget <= 0.0 {
            break;
        }
        let mut step = cfg.initial_step.min(budget / dn);
        let mut accepted = None;
        for _ in 0..cfg.max_backtracks {
            let trial: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a - step * b).collect();
            let ft = fam.energy(lambda, &trial)?;
            if ft <= f - cfg.sufficient_decrease * step * gd && ft < f {
                accepted = Some((trial, ft));
                break;
            }
            step *= cfg.shrink;
        }
        let Some((trial, ft)) = accepted else { break };
        budget -= step * dn;
        u = trial;
        f = ft;
        moved = true;
    }
    let diff: Vec<f64> = u.iter().zip(start).map(|(a, b)| a - b).collect();
    Ok(NodeStep {
        displacement: fam.x_norm(&diff),
        decreased: !moved || f < energy,
        node: u,
        moved,
    })
}

/// Evenly spaced resampling by `X`-norm arc length; endpoints are kept
/// bit-exact and the node count is preserved.
pub fn redistribute<F: Functional + ?Sized>(fam: &F, path: &Path) -> Result<Path> {
    let nodes = path.nodes();
    let m = nodes.len();
    let mut arc = Vec::with_capacity(m);
    arc.push(0.0);
    for w in nodes.windows(2) {
        let diff: Vec<f64> = w[1].iter().zip(&w[0]).map(|(a, b)| a - b).collect();
        arc.push(arc.last().unwrap() + fam.x_norm(&diff));
    }
    let total = arc[m - 1];
    if !(total > 0.0) {
        return Ok(path.clone());
    }
    let mut out = Vec::with_capacity(m);
    out.push(nodes[0].clone());
    let mut seg = 0;
    for k in 1..m - 1 {
        let s = total * k as f64 / (m - 1) as f64;
        while seg + 1 < m - 1 && arc[seg + 1] < s {
            seg += 1;
        }
        let len = arc[seg + 1] - arc[seg];
        let t = if len > 0.0 {
            ((s - arc[seg]) / len).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(
            nodes[seg]
                .iter()
                .zip(&nodes[seg + 1])
                .map(|(a, b)| a + t * (b - a))
                .collect(),
        );
    }
    out.push(nodes[m - 1].clone());
    let mut p = Path::new(out, path.family())?;
    p.set_approximation_failed(path.approximation_failed());
    Ok(p)
}

/// Lowers the path maximum until a sweep gains less than
/// `stall_tolerance`, the maximum drops to `target`, or `max_sweeps` is hit.
///
/// A sweep that does not improve the maximum is discarded, so the trace is
/// strictly decreasing and the returned path is the best one seen.
pub fn descend_path<F: Functional + ?Sized>(
    fam: &F,
    lambda: f64,
    path: &Path,
    cfg: &MinimaxConfig,
    target: Option<f64>,
) -> Result<MPEstimate> {
    cfg.validate()?;
    path.check_membership(fam, lambda)?;
    let endpoint = path.endpoint().to_vec();
    let mut current = path.clone();
    let mut energies = node_energies(fam, lambda, &current)?;
    let (mut best, mut arg) = argmax(&energies);
    let mut trace = vec![best];
    let mut log = Vec::new();
    let mut converged = false;
    let last = current.len() - 1;
    while log.len() < cfg.max_sweeps {
        if target.is_some_and(|t| best <= t) {
            break;
        }
        // Jacobi sweep from the pre-sweep snapshot
        let steps: Vec<Option<NodeStep>> = (0..current.len())
            .into_par_iter()
            .map(|i| {
                if i == 0 || i == last || energies[i] < best - cfg.band {
                    return Ok(None);
                }
                descend_node(fam, lambda, &current.nodes()[i], energies[i], cfg).map(Some)
            })
            .collect::<Result<_>>()?;
        let mut nodes = current.nodes().to_vec();
        let mut record = SweepRecord {
            value: best,
            moved: 0,
            max_displacement: 0.0,
            energies_decreased: true,
        };
        for (i, s) in steps.into_iter().enumerate() {
            if let Some(s) = s.filter(|s| s.moved) {
                record.moved += 1;
                record.max_displacement = record.max_displacement.max(s.displacement);
                record.energies_decreased &= s.decreased;
                nodes[i] = s.node;
            }
        }
        let mut next = redistribute(fam, &Path::new(nodes, current.family())?)?;
        next.set_approximation_failed(current.approximation_failed());
        if next.endpoint() != endpoint.as_slice() || next.nodes()[0].iter().any(|&v| v != 0.0) {
            return Err(Error::EndpointViolation("descent moved an endpoint".into()));
        }
        let next_energies = node_energies(fam, lambda, &next)?;
        let (value, idx) = argmax(&next_energies);
        if record.moved == 0 || !(value < best - cfg.stall_tolerance) {
            converged = true;
            break;
        }
        record.value = value;
        current = next;
        energies = next_energies;
        best = value;
        arg = idx;
        trace.push(value);
        log.push(record);
    }
    Ok(MPEstimate {
        lambda,
        value: best,
        argmax_index: arg,
        path: current,
        converged,
        sweeps: log.len(),
        trace,
        sweep_log: log,
        restart_id: 0,
        restart_values: vec![best],
    })
}

/// Seed of restart `r` derived from a base seed.
pub fn restart_seed(seed: u64, restart: usize) -> u64 {
    seed.wrapping_add((restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Best of `restarts` independent descents from randomized initial paths.
pub fn mountain_pass_value<F: Functional + ?Sized>(
    fam: &F,
    lambda: f64,
    cfg: &MinimaxConfig,
    restarts: usize,
    seed: u64,
) -> Result<MPEstimate> {
    if restarts == 0 {
        return Err(Error::InvalidParameter("at least one restart required".into()));
    }
    let runs: Vec<MPEstimate> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let path = make_initial_path(fam, lambda, cfg, restart_seed(seed, r))?;
            let mut est = descend_path(fam, lambda, &path, cfg, None)?;
            est.restart_id = r;
            Ok(est)
        })
        .collect::<Result<_>>()?;
    let values: Vec<f64> = runs.iter().map(|e| e.value).collect();
    let mut best = runs
        .into_iter()
        .reduce(|a, b| if b.value < a.value { b } else { a })
        .expect("restarts >= 1");
    best.restart_values = values;
    Ok(best)
}

/// Endpoint-collapsing reparametrization `ϑ`.
///
/// The original nodes are kept and each endpoint is repeated `(m - 1) / 2`
/// extra times, so the first and last quarters of the new parameter range sit
/// at `γ(0)` and `γ(1)` while the middle half traverses the original path.
/// The node set, and hence the path maximum, is unchanged.
pub fn reparametrize_collapse(path: &Path) -> Result<Path> {
    let nodes = path.nodes();
    let pad = (nodes.len() - 1) / 2;
    let first = nodes[0].clone();
    let last = nodes[nodes.len() - 1].clone();
    let mut out = Vec::with_capacity(nodes.len() + 2 * pad);
    out.extend(std::iter::repeat_n(first, pad));
    out.extend(nodes.iter().cloned());
    out.extend(std::iter::repeat_n(last, pad));
    let mut p = Path::new(out, path.family())?;
    p.set_approximation_failed(path.approximation_failed());
    Ok(p)
}
