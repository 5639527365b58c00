//! Hypothesis validators and property suites behind `sympass check`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sympass_core::{
    approximate_symmetrization, check_h4, compatible_polarizers, lp_norm, make_initial_path, mountain_pass_value,
    polarize, random_profile, restart_seed, schwarz, theta, Functional, GridFunction, LambdaFamily, NormKind,
};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        CheckOutcome {
            name: name.to_string(),
            passed,
            detail,
        }
    }

    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        format!("{tag} {}: {}", self.name, self.detail)
    }
}

/// Runs every check with `trials` random samples each.
pub fn run_all(cfg: &RunConfig, trials: usize) -> Result<Vec<CheckOutcome>, CliError> {
    let fam = LambdaFamily::new(cfg.energy, cfg.domain)?;
    let seed = cfg.seed;
    Ok(vec![
        h1(&fam, trials, seed)?,
        h2(&fam, cfg)?,
        h3(&fam, cfg)?,
        h4(&fam, trials, seed)?,
        gradient(&fam, trials.min(100), seed)?,
        contractivity(&fam, trials, seed)?,
        idempotence(&fam, trials, seed)?,
        convergence(&fam, cfg, seed)?,
    ])
}

fn random_u(fam: &LambdaFamily, rng: &mut ChaCha8Rng, signed: bool) -> Result<GridFunction, CliError> {
    Ok(GridFunction::new(
        *fam.domain(),
        random_profile(fam.domain(), rng, signed),
    )?)
}

/// `f = A - λB` with `B >= 0` and `A` coercive.
fn h1(fam: &LambdaFamily, trials: usize, seed: u64) -> Result<CheckOutcome, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alpha = fam.spec().j_kind.lower_bound().min(1.0);
    let p = fam.spec().p;
    let mut worst_b = f64::INFINITY;
    let mut worst_ratio = f64::INFINITY;
    for _ in 0..trials {
        let u = random_u(fam, &mut rng, true)?;
        let (a, b) = fam.decompose(u.values())?;
        worst_b = worst_b.min(b);
        let xn = fam.x_norm(u.values());
        if xn > 0.0 {
            worst_ratio = worst_ratio.min(a / (alpha / p * xn.powf(p)));
        }
    }
    Ok(CheckOutcome::new(
        "H1 structure",
        worst_b >= 0.0 && worst_ratio >= 1.0 - 1e-12,
        format!("min B = {worst_b:.3e}, min A/(α|u|^p/p) = {worst_ratio:.6}"),
    ))
}

/// Mountain-pass geometry at both ends of the interval.
fn h2(fam: &LambdaFamily, cfg: &RunConfig) -> Result<CheckOutcome, CliError> {
    let (lo, hi) = fam.lambda_interval();
    let mut details = Vec::new();
    let mut ok = true;
    for (k, lambda) in [lo, hi].into_iter().enumerate() {
        let zero = fam.energy(lambda, &vec![0.0; fam.dim()])?;
        let path = make_initial_path(fam, lambda, &cfg.minimax, restart_seed(cfg.seed, k))?;
        let end = fam.energy(lambda, path.endpoint())?;
        let est = mountain_pass_value(fam, lambda, &cfg.minimax, 1, restart_seed(cfg.seed, k))?;
        ok &= zero == 0.0 && end < 0.0 && est.value > zero.max(end);
        details.push(format!("λ={lambda}: f(v)={end:.4}, ĉ={:.6}", est.value));
    }
    Ok(CheckOutcome::new("H2 mountain-pass geometry", ok, details.join("; ")))
}

/// Boundedness along near-optimal maxima at `λ_h = b - 2^{-h}`.
fn h3(fam: &LambdaFamily, cfg: &RunConfig) -> Result<CheckOutcome, CliError> {
    let (lo, hi) = fam.lambda_interval();
    let mut seq = Vec::new();
    for h in 1..=4 {
        let lh = hi - 2f64.powi(-h) * (hi - lo);
        let est = mountain_pass_value(fam, lh, &cfg.minimax, 1, restart_seed(cfg.seed, h as usize))?;
        seq.push((lh, est.path.nodes()[est.argmax_index].clone()));
    }
    let report = fam.check_h3(hi, &seq)?;
    Ok(CheckOutcome::new(
        "H3 boundedness",
        report.passed(),
        format!("max |u_h|_X = {:.4} <= M = {:.4}", report.max_norm, report.bound),
    ))
}

fn h4(fam: &LambdaFamily, trials: usize, seed: u64) -> Result<CheckOutcome, CliError> {
    let report = check_h4(fam, trials, seed)?;
    Ok(CheckOutcome::new(
        "H4 polarization decreases energy",
        report.passed(),
        format!(
            "{} trials, max excess {:.3e}, {} violations",
            report.trials,
            report.max_excess,
            report.violations.len()
        ),
    ))
}

fn gradient(fam: &LambdaFamily, probes: usize, seed: u64) -> Result<CheckOutcome, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
    let (lo, hi) = fam.lambda_interval();
    let step = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        let lambda = rng.random_range(lo..=hi);
        let u = random_profile(fam.domain(), &mut rng, true);
        let g = fam.gradient(lambda, &u)?;
        let i = rng.random_range(0..u.len());
        let mut up = u.clone();
        let mut down = u.clone();
        up[i] += step;
        down[i] -= step;
        let fd = (fam.energy(lambda, &up)? - fam.energy(lambda, &down)?) / (2.0 * step);
        let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        worst = worst.max((fd - g[i]).abs() / scale);
    }
    Ok(CheckOutcome::new(
        "gradient vs finite differences",
        worst <= 1e-6,
        format!("{probes} probes, max relative error {worst:.3e}"),
    ))
}

/// `|u^H - v^H|_p <= |u - v|_p` and value multisets.
fn contractivity(fam: &LambdaFamily, trials: usize, seed: u64) -> Result<CheckOutcome, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
    let pool = compatible_polarizers(fam.domain());
    let mut excess = f64::NEG_INFINITY;
    let mut multiset_ok = true;
    for _ in 0..trials {
        let u = random_u(fam, &mut rng, true)?;
        let v = random_u(fam, &mut rng, true)?;
        let h = pool[rng.random_range(0..pool.len())];
        let (uh, vh) = (polarize(&u, &h)?, polarize(&v, &h)?);
        for p in [2.0, 4.0] {
            excess = excess.max(lp_norm(&uh.sub(&vh)?, p)? - lp_norm(&u.sub(&v)?, p)?);
        }
        let mut a = uh.values().to_vec();
        let mut b = theta(&u).into_values();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        multiset_ok &= a == b;
    }
    Ok(CheckOutcome::new(
        "polarization contractivity and value multiset",
        excess <= 1e-12 && multiset_ok,
        format!("{trials} trials, max excess {excess:.3e}, multiset preserved: {multiset_ok}"),
    ))
}

/// `u^{HH} = u^H` and `(u^H)* = u*`.
fn idempotence(fam: &LambdaFamily, trials: usize, seed: u64) -> Result<CheckOutcome, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
    let pool = compatible_polarizers(fam.domain());
    let mut ok = true;
    for _ in 0..trials {
        let u = random_u(fam, &mut rng, true)?;
        let h = pool[rng.random_range(0..pool.len())];
        let uh = polarize(&u, &h)?;
        ok &= polarize(&uh, &h)? == uh && schwarz(&uh) == schwarz(&u);
    }
    Ok(CheckOutcome::new(
        "polarization idempotence and commutation",
        ok,
        format!("{trials} trials"),
    ))
}

fn convergence(fam: &LambdaFamily, cfg: &RunConfig, seed: u64) -> Result<CheckOutcome, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 4);
    let u = random_u(fam, &mut rng, true)?;
    let (p, pstar) = fam.v_exponents();
    let res = approximate_symmetrization(&u, &cfg.symmetrization, NormKind::V { p, pstar }, seed)?;
    let monotone = res.trace.windows(2).all(|w| w[1] <= w[0]);
    Ok(CheckOutcome::new(
        "iterated polarization converges",
        res.converged && monotone,
        format!(
            "distance {:.3e} after {} polarizers, monotone trace: {monotone}",
            res.distance(),
            res.word.len()
        ),
    ))
}
