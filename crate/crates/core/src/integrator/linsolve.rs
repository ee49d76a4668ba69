//! Jacobi-preconditioned BiCGSTAB for the implicit drift solve.

use crate::error::{Error, Result};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solve `A x = rhs` with `x` holding the initial guess on entry. Stops when
/// `‖rhs − A x‖ ≤ tol·‖rhs‖`.
pub fn bicgstab(
    apply: &mut dyn FnMut(&[f64], &mut [f64]) -> Result<()>,
    diagonal: &[f64],
    rhs: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<usize> {
    let n = rhs.len();
    let inv_diag: Vec<f64> = diagonal
        .iter()
        .map(|&d| if d.abs() > f64::MIN_POSITIVE { 1.0 / d } else { 1.0 })
        .collect();
    let precondition = |v: &[f64], out: &mut [f64]| {
        for ((o, vi), di) in out.iter_mut().zip(v).zip(&inv_diag) {
            *o = vi * di;
        }
    };
    let target = tol * norm(rhs);
    let mut ax = vec![0.0; n];
    apply(x, &mut ax)?;
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    if norm(&r) <= target {
        return Ok(0);
    }
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    for iteration in 1..=max_iter {
        let rho_next = dot(&r_hat, &r);
        if rho_next == 0.0 || omega == 0.0 {
            break;
        }
        let beta = (rho_next / rho) * (alpha / omega);
        rho = rho_next;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precondition(&p, &mut y);
        apply(&y, &mut v)?;
        alpha = rho / dot(&r_hat, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) <= target {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            return Ok(iteration);
        }
        precondition(&s, &mut z);
        apply(&z, &mut t)?;
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm(&r) <= target {
            return Ok(iteration);
        }
    }
    apply(x, &mut ax)?;
    let residual = rhs.iter().zip(&ax).map(|(b, a)| (b - a).powi(2)).sum::<f64>().sqrt();
    let scale = norm(rhs).max(f64::MIN_POSITIVE);
    if residual <= target {
        return Ok(max_iter);
    }
    Err(Error::SolverDivergence {
        iterations: max_iter,
        residual: residual / scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_nonsymmetric_tridiagonal() {
        let n = 50;
        let apply_matrix = |x: &[f64], out: &mut [f64]| {
            for i in 0..n {
                let left = if i > 0 { x[i - 1] } else { 0.0 };
                let right = if i + 1 < n { x[i + 1] } else { 0.0 };
                out[i] = 4.0 * x[i] - 1.5 * left - 0.5 * right;
            }
        };
        let exact: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut rhs = vec![0.0; n];
        apply_matrix(&exact, &mut rhs);
        let mut x = vec![0.0; n];
        let mut apply = |v: &[f64], o: &mut [f64]| {
            apply_matrix(v, o);
            Ok(())
        };
        bicgstab(&mut apply, &vec![4.0; n], &rhs, &mut x, 1e-13, 500).unwrap();
        for (a, b) in x.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn exact_guess_takes_zero_iterations() {
        let rhs = vec![1.0, 2.0, 3.0];
        let mut x = rhs.clone();
        let mut apply = |v: &[f64], o: &mut [f64]| {
            o.copy_from_slice(v);
            Ok(())
        };
        assert_eq!(bicgstab(&mut apply, &[1.0; 3], &rhs, &mut x, 1e-12, 10).unwrap(), 0);
    }

    #[test]
    fn reports_non_convergence() {
        // Singular system with inconsistent right-hand side.
        let rhs = vec![1.0, 1.0];
        let mut x = vec![0.0; 2];
        let mut apply = |v: &[f64], o: &mut [f64]| {
            o[0] = v[0] + v[1];
            o[1] = -o[0];
            Ok(())
        };
        assert!(matches!(
            bicgstab(&mut apply, &[1.0, 1.0], &rhs, &mut x, 1e-12, 20),
            Err(Error::SolverDivergence { .. })
        ));
    }
}
