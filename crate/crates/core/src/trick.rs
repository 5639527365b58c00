//! The monotonicity-trick harness.
//!
//! Scans `ĉ(λ)`, selects grid points with bounded left difference quotients,
//! and at such a point `λ₀` builds the sequence of the existence argument:
//! near-optimal paths at `λ_h ↑ λ₀`, symmetrized on the high band, deformed at
//! `λ₀` with tolerance `δ = 1/j`, harvested at the stalled maximum.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::energy::LambdaFamily;
use crate::error::{Error, Result};
use crate::functional::Functional;
use crate::grid::{v_distance, Domain, GridFunction, NormKind};
use crate::linalg;
use crate::minimax::{
    descend_path, mountain_pass_value, node_energies, reparametrize_collapse, restart_seed, MPEstimate, MinimaxConfig,
    Path,
};
use crate::rearrange::{approximate_curve, approximate_symmetrization, schwarz, SymmetrizationConfig};

/// Settings of the λ scan and the sequence construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    /// Strictly increasing λ values inside the family's interval.
    pub lambda_grid: Vec<f64>,
    /// Left neighbours used in the difference quotients.
    pub quotient_window: usize,
    pub q_cap: f64,
    /// Length of the `δ = 1/j` schedule.
    pub j_max: usize,
    /// Independent initial paths per λ.
    pub restarts: usize,
    /// Points `λ₀` at which sequences are extracted.
    pub lambda0: Vec<f64>,
    /// Exponent range of the approximating levels `λ_h = λ₀ - 2^{-h}`.
    pub h_max: usize,
    /// Level `h` for member `j` is the first with `λ₀ - λ_h <= j^{-schedule_power}`;
    /// any power `>= 1` keeps `λ₀ - λ_h <= 1/j`.
    pub schedule_power: f64,
    /// Stall tolerance of the `λ₀` descent at `j = 1`; scaled by `1/j²`.
    pub harvest_stall: f64,
    /// Displacement cap of the `λ₀` descent at `j = 1`; scaled by `1/√j`.
    pub harvest_displacement: f64,
    pub refine: RefineConfig,
    /// Width `σ` of the corollary interval `[1 - σ, 1]`.
    pub corollary_sigma: f64,
    pub corollary_points: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            lambda_grid: (0..8).map(|k| 0.5 + k as f64 / 14.0).collect(),
            quotient_window: 2,
            q_cap: 50.0,
            j_max: 16,
            restarts: 2,
            lambda0: vec![1.0],
            h_max: 8,
            schedule_power: 1.0,
            harvest_stall: 1e-4,
            harvest_displacement: 0.25,
            refine: RefineConfig::default(),
            corollary_sigma: 0.5,
            corollary_points: 6,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_grid.is_empty() {
            return Err(Error::InvalidParameter("lambda grid is empty".into()));
        }
        check_increasing(&self.lambda_grid)?;
        check_increasing(&self.lambda0)?;
        if self.quotient_window < 2 || self.j_max < 1 || self.restarts < 1 || self.h_max < 1 {
            return Err(Error::InvalidParameter(
                "quotient_window >= 2, j_max >= 1, restarts >= 1 and h_max >= 1 required".into(),
            ));
        }
        if !(self.schedule_power >= 1.0 && self.schedule_power.is_finite()) {
            return Err(Error::InvalidParameter("schedule_power must be >= 1".into()));
        }
        let positive = [
            self.q_cap,
            self.harvest_stall,
            self.harvest_displacement,
            self.corollary_sigma,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter("scan tolerances must be positive".into()));
        }
        if self.corollary_points < 2 {
            return Err(Error::InvalidParameter("corollary_points must be >= 2".into()));
        }
        self.refine.validate()
    }
}

/// Newton refinement settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RefineConfig {
    pub slope_tolerance: f64,
    pub max_iterations: usize,
    /// Seeds with a larger slope are rejected as outside the Newton basin.
    pub seed_threshold: f64,
    pub sym_tolerance: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            slope_tolerance: 1e-8,
            max_iterations: 60,
            seed_threshold: 1.0,
            sym_tolerance: 1e-3,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.slope_tolerance, self.seed_threshold, self.sym_tolerance];
        if positive.iter().any(|v| !(*v > 0.0)) || self.max_iterations == 0 {
            return Err(Error::InvalidParameter("refinement tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Everything a harness run needs besides the family.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrickConfig {
    pub scan: ScanConfig,
    pub minimax: MinimaxConfig,
    pub symmetrization: SymmetrizationConfig,
    pub seed: u64,
}

fn check_increasing(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::GridNotIncreasing);
    }
    Ok(())
}

/// One row of the `ĉ(λ)` table.
#[derive(Debug, Clone, Serialize)]
pub struct ScanPoint {
    pub lambda: f64,
    /// `NaN` when the minimax failed at this λ.
    pub value: f64,
    pub converged: bool,
    pub restart_dispersion: f64,
    pub sweeps: usize,
    pub error: Option<String>,
    #[serde(skip)]
    pub estimate: Option<MPEstimate>,
}

/// Output of [`scan_c`].
#[derive(Debug, Clone, Serialize)]
pub struct ScanTable {
    pub points: Vec<ScanPoint>,
    /// `ĉ(λ_{k+1}) <= ĉ(λ_k) + stall_tolerance` along the grid.
    pub monotone: bool,
}

/// `ĉ(λ)` on a strictly increasing grid.
///
/// Each λ takes the best of `restarts` fresh descents and of a descent warm
/// started from the previous λ's path; the warm start is admissible because
/// `f(λ; v)` decreases in λ and certifies `ĉ(λ_{k+1}) <= ĉ(λ_k)`.
pub fn scan_c<F: Functional + ?Sized>(
    fam: &F,
    grid: &[f64],
    restarts: usize,
    cfg: &MinimaxConfig,
    seed: u64,
) -> Result<ScanTable> {
    check_increasing(grid)?;
    if grid.is_empty() {
        return Err(Error::InvalidParameter("lambda grid is empty".into()));
    }
    cfg.validate()?;
    let mut points: Vec<ScanPoint> = Vec::with_capacity(grid.len());
    let mut previous: Option<Path> = None;
    for (k, &lambda) in grid.iter().enumerate() {
        let attempt = (|| -> Result<MPEstimate> {
            let mut best = mountain_pass_value(fam, lambda, cfg, restarts, restart_seed(seed, k))?;
            if let Some(prev) = &previous {
                let warm = descend_path(fam, lambda, prev, cfg, None)?;
                if warm.value < best.value {
                    let values = std::mem::take(&mut best.restart_values);
                    best = warm;
                    best.restart_id = restarts;
                    best.restart_values = values;
                }
            }
            Ok(best)
        })();
        points.push(match attempt {
            Ok(est) => {
                previous = Some(est.path.clone());
                ScanPoint {
                    lambda,
                    value: est.value,
                    converged: est.converged,
                    restart_dispersion: est.restart_dispersion(),
                    sweeps: est.sweeps,
                    error: None,
                    estimate: Some(est),
                }
            }
            Err(e) => ScanPoint {
                lambda,
                value: f64::NAN,
                converged: false,
                restart_dispersion: f64::NAN,
                sweeps: 0,
                error: Some(e.to_string()),
                estimate: None,
            },
        });
    }
    let monotone = points
        .windows(2)
        .filter(|w| w[0].value.is_finite() && w[1].value.is_finite())
        .all(|w| w[1].value <= w[0].value + cfg.stall_tolerance);
    Ok(ScanTable { points, monotone })
}

/// A grid point with bounded left difference quotients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DenjoyPoint {
    pub index: usize,
    pub lambda0: f64,
    /// Largest quotient `(ĉ(λ_h) - ĉ(λ₀)) / (λ₀ - λ_h)` over the window.
    pub q_witness: f64,
}

/// Grid points whose `window` left neighbours all give quotients `<= q_cap`.
pub fn select_denjoy_points(table: &[(f64, f64)], window: usize, q_cap: f64) -> Vec<DenjoyPoint> {
    (window..table.len())
        .filter_map(|k| {
            let (l0, c0) = table[k];
            if !c0.is_finite() {
                return None;
            }
            let mut witness = f64::NEG_INFINITY;
            for &(lh, ch) in &table[k - window..k] {
                if !ch.is_finite() {
                    return None;
                }
                witness = witness.max((ch - c0) / (l0 - lh));
            }
            (witness <= q_cap).then_some(DenjoyPoint {
                index: k,
                lambda0: l0,
                q_witness: witness,
            })
        })
        .collect()
}

/// Hex SHA-256 of the little-endian bytes of a vector.
pub fn hash_values(values: &[f64]) -> String {
    let mut hasher = Sha256::new();
    for v in values {
        hasher.update(v.to_le_bytes());
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Least-squares slope of `ln y` against `ln x`; `None` with fewer than two
/// usable points.
pub fn fit_power_law(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Smallest asymmetry resolved by the decay fit; exact zeros are raised to it.
pub const ASYMMETRY_FLOOR: f64 = 1e-12;

/// Decay exponent of the tail envelope `s_j = max_{k >= j} y_k` of a sequence
/// `(j, y_j)` sorted by `j`, with `y` floored at [`ASYMMETRY_FLOOR`].
///
/// A bound `y_k <= C k^{-α}` for all `k` holds for the envelope as well, so
/// its fitted exponent is the natural statistic for such a bound; it also keeps
/// members whose asymmetry vanishes exactly.
pub fn envelope_decay(points: &[(f64, f64)]) -> Option<f64> {
    let mut env = Vec::with_capacity(points.len());
    let mut run = ASYMMETRY_FLOOR;
    for &(x, y) in points.iter().rev() {
        run = run.max(y);
        env.push((x, run));
    }
    env.reverse();
    fit_power_law(&env)
}

/// One member `u_j` of the extracted sequence.
#[derive(Debug, Clone, Serialize)]
pub struct SbpsRecord {
    pub j: usize,
    pub h: usize,
    pub lambda_h: f64,
    pub delta: f64,
    pub hash: String,
    pub energy: f64,
    pub slope: f64,
    pub x_norm: f64,
    /// `|u_j - u_j*|_V` with the exact rearrangement.
    pub asymmetry: f64,
    /// `|u_j - u_j^W|_V` for a greedy polarization word `W`.
    pub asymmetry_polarized: f64,
    pub stalled: bool,
    pub accepted: bool,
    pub within_band: bool,
    pub bounded: bool,
    pub approximation_failed: bool,
    pub curve_distance: f64,
    pub word_length: usize,
    pub sweeps: usize,
    #[serde(skip)]
    pub u: Vec<f64>,
}

/// A difference quotient witnessed during extraction.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuotientRecord {
    pub lambda_h: f64,
    pub c_h: f64,
    pub quotient: f64,
}

/// Pass/fail verdicts of a report.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Verdicts {
    /// `|f(λ₀; u_j) - ĉ(λ₀)| <= 2/j` for every accepted `j`.
    pub energies_in_band: bool,
    /// `|u_j|_X <= 𝓜 + 2` for every `j`.
    pub bounded: bool,
    /// Slope of the last accepted member `<= 10/√j`.
    pub final_slope_ok: bool,
    /// Fitted decay exponent `<= -0.4`; `None` when not fitted.
    pub asymmetry_decay: Option<bool>,
    pub all_accepted: bool,
}

/// Per-λ₀ harness output.
#[derive(Debug, Clone, Serialize)]
pub struct PSReport {
    pub lambda0: f64,
    pub c_estimate: f64,
    /// `max(f(λ₀; 0), f(λ₀; v))`.
    pub a_level: f64,
    /// `(ĉ(λ₀) - a(λ₀)) / 4`.
    pub omega: f64,
    pub denjoy_ok: bool,
    pub q_witness: f64,
    pub quotients: Vec<QuotientRecord>,
    /// `𝓜(λ₀)` from the coercivity bound.
    pub bound_m: f64,
    pub embed_constant_note: String,
    pub sequence: Vec<SbpsRecord>,
    /// Fitted exponent of the tail envelope of the asymmetries.
    pub decay_exponent: Option<f64>,
    /// Fitted exponent of the nonzero asymmetries themselves.
    pub raw_decay_exponent: Option<f64>,
    pub decay_note: String,
    pub verdicts: Verdicts,
    pub failed_j: Vec<usize>,
}

impl PSReport {
    pub const CSV_HEADER: &'static str = "lambda0,j,energy,slope,xnorm,asymmetry,accepted";

    /// Flat per-`j` rows.
    pub fn csv_rows(&self) -> Vec<String> {
        self.sequence
            .iter()
            .map(|r| {
                format!(
                    "{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                    self.lambda0, r.j, r.energy, r.slope, r.x_norm, r.asymmetry, r.accepted
                )
            })
            .collect()
    }

    /// The harvested member with the largest accepted `j`, else the last one.
    pub fn best_member(&self) -> Option<&SbpsRecord> {
        self.sequence.iter().rev().find(|r| r.accepted).or(self.sequence.last())
    }
}

fn v_norm_kind(fam: &LambdaFamily) -> NormKind {
    let (p, pstar) = fam.v_exponents();
    NormKind::V { p, pstar }
}

/// `‖u − u*‖_V`.
pub fn asymmetry(fam: &LambdaFamily, u: &[f64]) -> Result<f64> {
    let g = GridFunction::new(*fam.domain(), u.to_vec())?;
    let s = schwarz(&g);
    let (p, pstar) = fam.v_exponents();
    Ok(v_distance(u, s.values(), fam.domain().cell_volume(), p, pstar))
}

fn polarized_asymmetry(fam: &LambdaFamily, u: &[f64], tol: f64, cfg: &SymmetrizationConfig, seed: u64) -> Result<f64> {
    let g = GridFunction::new(*fam.domain(), u.to_vec())?;
    let sym_cfg = SymmetrizationConfig { tolerance: tol, ..*cfg };
    let w = approximate_symmetrization(&g, &sym_cfg, v_norm_kind(fam), seed)?;
    let (p, pstar) = fam.v_exponents();
    Ok(v_distance(u, w.function.values(), fam.domain().cell_volume(), p, pstar))
}

/// Smallest usable `h` with `λ₀ - 2^{-h}` inside the family's interval.
fn approximating_levels(fam: &LambdaFamily, lambda0: f64, h_max: usize) -> Vec<(usize, f64)> {
    let (lo, _) = fam.lambda_interval();
    (0..=h_max)
        .map(|h| (h, lambda0 - 2f64.powi(-(h as i32))))
        .filter(|&(_, l)| l >= lo)
        .collect()
}

/// Runs the sequence construction at `lambda0` with levels `λ_h = λ₀ - 2^{-h}`.
pub fn extract_sbps(fam: &LambdaFamily, lambda0: f64, cfg: &TrickConfig) -> Result<PSReport> {
    let levels = approximating_levels(fam, lambda0, cfg.scan.h_max);
    extract_sbps_with_levels(fam, lambda0, &levels, cfg)
}

/// [`extract_sbps`] with explicit `(h, λ_h)` levels, strictly increasing below `λ₀`.
pub fn extract_sbps_with_levels(
    fam: &LambdaFamily,
    lambda0: f64,
    levels: &[(usize, f64)],
    cfg: &TrickConfig,
) -> Result<PSReport> {
    cfg.scan.validate()?;
    cfg.minimax.validate()?;
    cfg.symmetrization.validate()?;
    fam.check_lambda(lambda0)?;
    let lambdas: Vec<f64> = levels.iter().map(|l| l.1).collect();
    check_increasing(&lambdas)?;
    if levels.is_empty() || lambdas.iter().any(|&l| l >= lambda0) {
        return Err(Error::InvalidParameter(
            "approximating levels must lie strictly below lambda0".into(),
        ));
    }
    for &l in &lambdas {
        fam.check_lambda(l)?;
    }
    let mm = &cfg.minimax;
    let seed = cfg.seed;

    // near-optimal paths γ_h, warm started along increasing λ_h
    let mut paths: Vec<MPEstimate> = Vec::with_capacity(levels.len());
    for (k, &(_, lh)) in levels.iter().enumerate() {
        let est = match paths.last() {
            None => mountain_pass_value(fam, lh, mm, cfg.scan.restarts, restart_seed(seed, k))?,
            Some(prev) => descend_path(fam, lh, &prev.path, mm, None)?,
        };
        paths.push(est);
    }
    let fresh = mountain_pass_value(fam, lambda0, mm, cfg.scan.restarts, restart_seed(seed, levels.len()))?;
    let warm = descend_path(fam, lambda0, &paths.last().expect("nonempty").path, mm, None)?;
    let top = if warm.value < fresh.value { warm } else { fresh };
    let c0 = top.value;
    let a_level = 0f64.max(fam.energy(lambda0, top.path.endpoint())?);
    let omega = (c0 - a_level) / 4.0;

    let quotients: Vec<QuotientRecord> = paths
        .iter()
        .map(|e| QuotientRecord {
            lambda_h: e.lambda,
            c_h: e.value,
            quotient: (e.value - c0) / (lambda0 - e.lambda),
        })
        .collect();
    let q_witness = quotients.iter().map(|q| q.quotient).fold(f64::NEG_INFINITY, f64::max);
    let denjoy_ok = q_witness <= cfg.scan.q_cap;

    // 𝓜(λ₀) from the maxima of the near-optimal paths
    let h3_seq: Vec<(f64, Vec<f64>)> = paths
        .iter()
        .map(|e| (e.lambda, e.path.nodes()[e.argmax_index].clone()))
        .collect();
    let bound_m = fam.check_h3(lambda0, &h3_seq)?.bound;

    let mut sequence = Vec::new();
    let mut failed_j = Vec::new();
    for j in 1..=cfg.scan.j_max {
        let inv_j = 1.0 / j as f64;
        let gap = inv_j.powf(cfg.scan.schedule_power);
        let Some(k) = levels.iter().position(|&(_, l)| lambda0 - l <= gap) else {
            failed_j.push(j);
            continue;
        };
        match harvest(fam, lambda0, c0, omega, bound_m, &paths[k], levels[k], j, cfg) {
            Ok(r) => sequence.push(r),
            Err(_) => failed_j.push(j),
        }
    }

    let accepted: Vec<&SbpsRecord> = sequence.iter().filter(|r| r.accepted).collect();
    let points: Vec<(f64, f64)> = accepted.iter().map(|r| (r.j as f64, r.asymmetry)).collect();
    let decay_exponent = envelope_decay(&points);
    let raw_decay_exponent = fit_power_law(&points);
    let decay_note = match decay_exponent {
        Some(e) => format!("asymmetry envelope ~ j^{e:.3}"),
        None => "insufficient data".to_string(),
    };
    let verdicts = Verdicts {
        energies_in_band: accepted.iter().all(|r| r.within_band),
        bounded: sequence.iter().all(|r| r.bounded),
        final_slope_ok: accepted.last().is_some_and(|r| r.slope <= 10.0 / (r.j as f64).sqrt()),
        asymmetry_decay: decay_exponent.map(|e| e <= -0.4),
        all_accepted: failed_j.is_empty() && sequence.iter().all(|r| r.accepted),
    };
    Ok(PSReport {
        lambda0,
        c_estimate: c0,
        a_level,
        omega,
        denjoy_ok,
        q_witness,
        quotients,
        bound_m,
        embed_constant_note: format!("V = L^p ∩ L^p* with (p, p*) = {:?}", fam.v_exponents()),
        sequence,
        decay_exponent,
        raw_decay_exponent,
        decay_note,
        verdicts,
        failed_j,
    })
}

#[allow(clippy::too_many_arguments)]
fn harvest(
    fam: &LambdaFamily,
    lambda0: f64,
    c0: f64,
    omega: f64,
    bound_m: f64,
    gamma_h: &MPEstimate,
    (h, lambda_h): (usize, f64),
    j: usize,
    cfg: &TrickConfig,
) -> Result<SbpsRecord> {
    let inv_j = 1.0 / j as f64;
    let delta = lambda0 - lambda_h;
    let domain: Domain = *fam.domain();
    let seed = restart_seed(cfg.seed ^ 0x5bd1_e995, j);

    // γ_h lives in S after Θ, which can only lower energies
    let nodes: Vec<Vec<f64>> = gamma_h
        .path
        .nodes()
        .iter()
        .map(|n| n.iter().map(|v| v.abs()).collect())
        .collect();
    let path = reparametrize_collapse(&Path::new(nodes, gamma_h.path.family())?)?;
    let energies = node_energies(fam, lambda0, &path)?;
    let last = path.len() - 1;
    let marked: Vec<usize> = (1..last)
        .filter(|&i| path.nodes()[i] != path.nodes()[0] && path.nodes()[i] != path.nodes()[last])
        .filter(|&i| energies[i] >= c0 - 3.0 * omega && energies[i] <= c0 + omega)
        .collect();
    let approx = approximate_curve(
        &path,
        &domain,
        &marked,
        &cfg.minimax.h0,
        delta,
        &cfg.symmetrization,
        v_norm_kind(fam),
        seed,
    )?;

    let mm = MinimaxConfig {
        band: inv_j,
        max_displacement: cfg.scan.harvest_displacement * inv_j.sqrt(),
        stall_tolerance: cfg.scan.harvest_stall * inv_j * inv_j,
        ..cfg.minimax
    };
    let est = descend_path(fam, lambda0, &approx.path, &mm, None)?;
    let u = est.path.nodes()[est.argmax_index].clone();
    let energy = fam.energy(lambda0, &u)?;
    let slope = fam.slope(lambda0, &u)?;
    let x_norm = fam.x_norm(&u);
    let asym = asymmetry(fam, &u)?;
    let tol = 1e-4f64.min(0.1 / (j as f64).sqrt());
    let asym_pol = polarized_asymmetry(fam, &u, tol, &cfg.symmetrization, seed)?;
    let accepted = est.converged && slope <= 10.0 * inv_j.sqrt();
    Ok(SbpsRecord {
        j,
        h,
        lambda_h,
        delta,
        hash: hash_values(&u),
        energy,
        slope,
        x_norm,
        asymmetry: asym,
        asymmetry_polarized: asym_pol,
        stalled: est.converged,
        accepted,
        within_band: (energy - c0).abs() <= 2.0 * inv_j,
        bounded: x_norm <= bound_m + 2.0,
        approximation_failed: approx.path.approximation_failed(),
        curve_distance: approx.max_distance,
        word_length: approx.word.len(),
        sweeps: est.sweeps,
        u,
    })
}

/// A refined critical point.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalPointRecord {
    pub lambda: f64,
    #[serde(skip)]
    pub u: GridFunction,
    pub energy: f64,
    pub slope: f64,
    pub asymmetry: f64,
    /// `|u - u^W|_V` for a greedy polarization word.
    pub asymmetry_polarized: f64,
    pub x_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub failure: Option<String>,
}

/// Average of `u` and its point reflection `x ↦ -x`.
fn even_part(domain: &Domain, u: &[f64]) -> Result<Vec<f64>> {
    let g = GridFunction::new(*domain, u.to_vec())?;
    let r = g.point_reflected();
    Ok(u.iter().zip(r.values()).map(|(a, b)| 0.5 * (a + b)).collect())
}

/// Damped Newton iteration from a harvested near-critical point.
///
/// The iteration runs in the subspace of functions invariant under
/// `x ↦ -x`. The family is invariant under this reflection, so critical
/// points of the restriction are critical points of `f`; the restriction
/// removes the nearly flat translation direction of a truncated domain, along
/// which Newton would otherwise stall next to a half-step shifted profile.
/// Iterates until the slope is below tolerance and the last step is
/// negligible. Divergence yields a failure record rather than an error.
pub fn refine_to_critical(
    fam: &LambdaFamily,
    lambda: f64,
    seed_u: &[f64],
    cfg: &RefineConfig,
    sym: &SymmetrizationConfig,
    seed: u64,
) -> Result<CriticalPointRecord> {
    cfg.validate()?;
    let n = fam.dim();
    let domain = *fam.domain();
    let mut u = even_part(&domain, seed_u)?;
    let mut slope = fam.slope(lambda, &u)?;
    let mut failure = None;
    let mut iterations = 0;
    if slope > cfg.seed_threshold {
        failure = Some(format!("seed slope {slope:.3e} above threshold"));
    } else {
        let mut last_step = f64::INFINITY;
        while iterations < cfg.max_iterations {
            if slope <= cfg.slope_tolerance && last_step <= 1e-10 {
                break;
            }
            let g = fam.gradient(lambda, &u)?;
            let hess = fam.hessian(lambda, &u)?;
            let neg: Vec<f64> = g.iter().map(|v| -v).collect();
            let Some(d) = linalg::dense_solve(hess, n, &neg) else {
                failure = Some("singular Hessian".into());
                break;
            };
            let mut t = 1.0;
            let mut accepted = None;
            while t >= 1.0 / 1024.0 {
                let cand: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + t * b).collect();
                let cand = even_part(&domain, &cand)?;
                let s = fam.slope(lambda, &cand)?;
                if s < slope || s <= cfg.slope_tolerance {
                    accepted = Some((cand, s));
                    break;
                }
                t *= 0.5;
            }
            iterations += 1;
            let Some((cand, s)) = accepted else {
                break;
            };
            let step: Vec<f64> = d.iter().map(|v| t * v).collect();
            last_step = fam.x_norm(&step);
            u = cand;
            slope = s;
        }
        if failure.is_none() && slope > cfg.slope_tolerance {
            failure = Some(format!("Newton stalled at slope {slope:.3e}"));
        }
    }
    let asym = asymmetry(fam, &u)?;
    let asym_pol = polarized_asymmetry(fam, &u, cfg.sym_tolerance.min(1e-4), sym, seed)?;
    Ok(CriticalPointRecord {
        lambda,
        energy: fam.energy(lambda, &u)?,
        slope,
        asymmetry: asym,
        asymmetry_polarized: asym_pol,
        x_norm: fam.x_norm(&u),
        iterations,
        converged: failure.is_none(),
        failure,
        u: GridFunction::new(*fam.domain(), u)?,
    })
}

/// One λ of the corollary sequence.
#[derive(Debug, Clone, Serialize)]
pub struct CorollaryEntry {
    pub report: PSReport,
    pub record: CriticalPointRecord,
    /// `|u - u_j|_V` between the refined point and its harvested seed.
    pub seed_distance: f64,
    /// `asym(u) <= 2 |u - u_j|_V + asym(u_j)`.
    pub chain_ok: bool,
}

/// Output of [`corollary2_sequence`].
#[derive(Debug, Clone, Serialize)]
pub struct CorollaryReport {
    pub lambdas: Vec<f64>,
    pub entries: Vec<CorollaryEntry>,
    /// `sup_j |u_j|_X` over the refined points.
    pub sup_norm: f64,
    pub all_converged: bool,
    pub all_symmetric: bool,
}

/// Evenly spaced increasing grid of `count` points in `[1 - σ, 1]`.
pub fn corollary_grid(sigma: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| 1.0 - sigma + sigma * k as f64 / (count - 1) as f64)
        .collect()
}

/// Sequence extraction plus Newton refinement at every `λ_j`.
pub fn corollary2_sequence(fam: &LambdaFamily, lambdas: &[f64], cfg: &TrickConfig) -> Result<CorollaryReport> {
    check_increasing(lambdas)?;
    if lambdas.is_empty() {
        return Err(Error::InvalidParameter("corollary grid is empty".into()));
    }
    let entries: Vec<CorollaryEntry> = lambdas
        .par_iter()
        .enumerate()
        .map(|(k, &lambda)| corollary_entry(fam, lambda, k, cfg))
        .collect::<Result<_>>()?;
    let sup_norm = entries.iter().map(|e| e.record.x_norm).fold(0.0, f64::max);
    Ok(CorollaryReport {
        lambdas: lambdas.to_vec(),
        all_converged: entries.iter().all(|e| e.record.converged),
        all_symmetric: entries
            .iter()
            .all(|e| e.record.asymmetry <= cfg.scan.refine.sym_tolerance),
        entries,
        sup_norm,
    })
}

fn corollary_entry(fam: &LambdaFamily, lambda: f64, k: usize, cfg: &TrickConfig) -> Result<CorollaryEntry> {
    let sub = TrickConfig {
        seed: restart_seed(cfg.seed, 1000 + k),
        ..cfg.clone()
    };
    let report = extract_sbps(fam, lambda, &sub)?;
    let member = report
        .best_member()
        .ok_or_else(|| Error::InvalidParameter(format!("no sequence member at lambda = {lambda}")))?;
    let record = refine_to_critical(fam, lambda, &member.u, &cfg.scan.refine, &cfg.symmetrization, sub.seed)?;
    let (p, pstar) = fam.v_exponents();
    let vol = fam.domain().cell_volume();
    let seed_distance = v_distance(record.u.values(), &member.u, vol, p, pstar);
    let chain_ok = record.asymmetry <= 2.0 * seed_distance + member.asymmetry + 1e-12;
    Ok(CorollaryEntry {
        report,
        record,
        seed_distance,
        chain_ok,
    })
}
