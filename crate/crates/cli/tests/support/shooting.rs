//! Independent reference for `-u'' + u = λ u³` on `[-L, L]` with zero
//! boundary values: shoot from `x = -L` with `u = 0`, `u' = s`, bisect on the
//! sign of `u'(0)` so the hump peaks at the origin, then mirror.

/// Ground state sampled at `x_i = -L + i h` on a grid of `n` points, and its energy
/// `∫ u'²/2 + u²/2 - λ u⁴/4` computed on the fine shooting mesh.
pub struct GroundState {
    pub values: Vec<f64>,
    pub energy: f64,
}

fn rhs(lambda: f64, y: [f64; 2]) -> [f64; 2] {
    [y[1], y[0] - lambda * y[0].powi(3)]
}

fn rk4(lambda: f64, y: [f64; 2], dx: f64) -> [f64; 2] {
    let add = |a: [f64; 2], b: [f64; 2], s: f64| [a[0] + s * b[0], a[1] + s * b[1]];
    let k1 = rhs(lambda, y);
    let k2 = rhs(lambda, add(y, k1, dx / 2.0));
    let k3 = rhs(lambda, add(y, k2, dx / 2.0));
    let k4 = rhs(lambda, add(y, k3, dx));
    [
        y[0] + dx / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + dx / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Trajectory on `[-L, 0]` with `steps` RK4 steps.
fn shoot(lambda: f64, half_width: f64, slope: f64, steps: usize) -> Vec<[f64; 2]> {
    let dx = half_width / steps as f64;
    let mut y = [0.0, slope];
    let mut out = Vec::with_capacity(steps + 1);
    out.push(y);
    for _ in 0..steps {
        y = rk4(lambda, y, dx);
        out.push(y);
    }
    out
}

pub fn ground_state(lambda: f64, half_width: f64, n: usize) -> GroundState {
    let refine = 512;
    let steps = (n - 1) / 2 * refine;
    let (mut lo, mut hi) = (0.0f64, 4.0 / lambda.sqrt());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let traj = shoot(lambda, half_width, mid, steps);
        // too steep: the peak lies left of the origin
        if traj.iter().any(|y| y[1] < 0.0) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let traj = shoot(lambda, half_width, 0.5 * (lo + hi), steps);
    let dx = half_width / steps as f64;
    let density: Vec<f64> = traj
        .iter()
        .map(|y| 0.5 * y[1] * y[1] + 0.5 * y[0] * y[0] - lambda * y[0].powi(4) / 4.0)
        .collect();
    // Simpson on the half line, doubled by symmetry
    let mut half = density[0] + density[steps];
    for (i, d) in density.iter().enumerate().take(steps).skip(1) {
        half += if i % 2 == 1 { 4.0 * d } else { 2.0 * d };
    }
    half *= dx / 3.0;
    let left: Vec<f64> = (0..=(n - 1) / 2).map(|i| traj[i * refine][0]).collect();
    let mut values = left.clone();
    values.extend(left.iter().rev().skip(1));
    GroundState {
        values,
        energy: 2.0 * half,
    }
}
