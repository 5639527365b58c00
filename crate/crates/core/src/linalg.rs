//! Small solvers: the Riesz system of the discrete `W^{1,2}` inner product and
//! a dense Newton step.

use nalgebra::{DMatrix, DVector};

use crate::grid::Domain;

/// Solves `(I + L_h) x = b / h^N`, where `L_h` is the Dirichlet graph
/// Laplacian of the forward-difference stencil.
pub(crate) fn solve_sobolev(domain: &Domain, rhs: &[f64]) -> Vec<f64> {
    let vol = domain.cell_volume();
    let b: Vec<f64> = rhs.iter().map(|v| v / vol).collect();
    match domain.dimension {
        1 => solve_tridiagonal(domain, &b),
        _ => conjugate_gradient(domain, &b),
    }
}

/// `(I + L_h) x` for the 5-point (2D) or 3-point (1D) stencil.
pub(crate) fn apply_sobolev(domain: &Domain, x: &[f64]) -> Vec<f64> {
    let n = domain.points_per_axis;
    let inv_h2 = domain.spacing().powi(-2);
    let mut out = x.to_vec();
    match domain.dimension {
        1 => {
            for i in 0..n {
                let left = if i > 0 { x[i - 1] } else { 0.0 };
                let right = if i + 1 < n { x[i + 1] } else { 0.0 };
                out[i] += inv_h2 * (2.0 * x[i] - left - right);
            }
        }
        _ => {
            for i in 0..n {
                for j in 0..n {
                    let at = |a: usize, b: usize| x[a * n + b];
                    let mut s = 4.0 * at(i, j);
                    if i > 0 {
                        s -= at(i - 1, j);
                    }
                    if i + 1 < n {
                        s -= at(i + 1, j);
                    }
                    if j > 0 {
                        s -= at(i, j - 1);
                    }
                    if j + 1 < n {
                        s -= at(i, j + 1);
                    }
                    out[i * n + j] += inv_h2 * s;
                }
            }
        }
    }
    out
}

// Thomas algorithm for the constant tridiagonal matrix (1 + 2/h², -1/h²).
fn solve_tridiagonal(domain: &Domain, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let off = -domain.spacing().powi(-2);
    let diag = 1.0 - 2.0 * off;
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = off / diag;
    d[0] = b[0] / diag;
    for i in 1..n {
        let m = diag - off * c[i - 1];
        c[i] = off / m;
        d[i] = (b[i] - off * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

fn conjugate_gradient(domain: &Domain, b: &[f64]) -> Vec<f64> {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut x = vec![0.0; b.len()];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let stop = 1e-28 * rr.max(f64::MIN_POSITIVE);
    for _ in 0..10 * b.len() {
        if rr <= stop {
            break;
        }
        let ap = apply_sobolev(domain, &p);
        let alpha = rr / dot(&p, &ap);
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let next = dot(&r, &r);
        let beta = next / rr;
        rr = next;
        for i in 0..p.len() {
            p[i] = r[i] + beta * p[i];
        }
    }
    x
}

/// Solves the dense system `matrix * x = rhs`; `None` if singular.
pub(crate) fn dense_solve(matrix: Vec<f64>, dim: usize, rhs: &[f64]) -> Option<Vec<f64>> {
    let a = DMatrix::from_row_slice(dim, dim, &matrix);
    let b = DVector::from_column_slice(rhs);
    a.lu().solve(&b).map(|x| x.as_slice().to_vec())
}
