//! Fixed-effects logistic regression by iteratively reweighted least squares.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::BiasError;

pub const MAX_IRLS_ITERATIONS: u32 = 100;
/// Coefficients beyond this magnitude signal (quasi-)separation.
pub const SEPARATION_BOUND: f64 = 30.0;
const STEP_TOLERANCE: f64 = 1e-8;

/// Coefficients are ordered intercept first, then the predictors in column
/// order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub z: Vec<f64>,
    pub p_values: Vec<f64>,
    pub converged: bool,
    pub iterations: u32,
    pub n: usize,
    pub log_likelihood: f64,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Lower-triangular `L` with `L Lᵀ = a` (row-major, `k x k`), or `None` if
/// `a` is not numerically positive definite.
fn cholesky(a: &[f64], k: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = a[i * k + j];
            for m in 0..j {
                s -= l[i * k + m] * l[j * k + m];
            }
            if i == j {
                if s.is_nan() || s <= 1e-12 * a[i * k + i].abs().max(1e-300) {
                    return None;
                }
                l[i * k + i] = libm::sqrt(s);
            } else {
                l[i * k + j] = s / l[j * k + j];
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[f64], k: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..k {
        for m in 0..i {
            y[i] -= l[i * k + m] * y[m];
        }
        y[i] /= l[i * k + i];
    }
    for i in (0..k).rev() {
        for m in i + 1..k {
            y[i] -= l[m * k + i] * y[m];
        }
        y[i] /= l[i * k + i];
    }
    y
}

/// Fits `P(y) = σ(β₀ + Σ βⱼ xⱼ)`.
///
/// Each Newton step solves `(XᵀWX) Δ = Xᵀ(y − μ)` by Cholesky factorization;
/// iteration stops once the largest step component is below 1e-8 or after
/// [`MAX_IRLS_ITERATIONS`] steps. Standard errors come from the inverse
/// observed information at the estimate and p-values are two-sided normal.
pub fn fit_logistic(rows: &[Vec<f64>], outcomes: &[bool]) -> Result<LogisticFit, BiasError> {
    if rows.len() != outcomes.len() || rows.is_empty() {
        return Err(BiasError::DegenerateDesign);
    }
    let p = rows[0].len();
    if rows.iter().any(|r| r.len() != p) {
        return Err(BiasError::RaggedDesign);
    }
    let distinct_rows = rows
        .iter()
        .enumerate()
        .filter(|(i, r)| !rows[..*i].contains(r))
        .count();
    if distinct_rows < 2 {
        return Err(BiasError::DegenerateDesign);
    }
    if outcomes.iter().all(|y| *y) || outcomes.iter().all(|y| !*y) {
        return Err(BiasError::Separation);
    }

    let k = p + 1;
    let x = |i: usize, j: usize| if j == 0 { 1.0 } else { rows[i][j - 1] };
    let mut beta = vec![0.0; k];
    let mut iterations = 0;
    let mut converged = false;

    let information = |beta: &[f64]| {
        let mut h = vec![0.0; k * k];
        let mut g = vec![0.0; k];
        for (i, &y) in outcomes.iter().enumerate() {
            let eta: f64 = (0..k).map(|j| x(i, j) * beta[j]).sum();
            let mu = sigmoid(eta);
            let w = mu * (1.0 - mu);
            let resid = f64::from(u8::from(y)) - mu;
            for a in 0..k {
                g[a] += x(i, a) * resid;
                for b in 0..=a {
                    h[a * k + b] += w * x(i, a) * x(i, b);
                }
            }
        }
        for a in 0..k {
            for b in a + 1..k {
                h[a * k + b] = h[b * k + a];
            }
        }
        (h, g)
    };

    while iterations < MAX_IRLS_ITERATIONS {
        let (h, g) = information(&beta);
        let l = cholesky(&h, k).ok_or(BiasError::DegenerateDesign)?;
        let step = cholesky_solve(&l, k, &g);
        iterations += 1;
        let mut max_step: f64 = 0.0;
        for (b, s) in beta.iter_mut().zip(&step) {
            *b += s;
            max_step = max_step.max(s.abs());
        }
        if beta.iter().any(|b| !b.is_finite() || b.abs() > SEPARATION_BOUND) {
            return Err(BiasError::Separation);
        }
        if max_step < STEP_TOLERANCE {
            converged = true;
            break;
        }
    }

    let (h, _) = information(&beta);
    let l = cholesky(&h, k).ok_or(BiasError::DegenerateDesign)?;
    let mut std_errors = Vec::with_capacity(k);
    for j in 0..k {
        let mut e = vec![0.0; k];
        e[j] = 1.0;
        let col = cholesky_solve(&l, k, &e);
        std_errors.push(libm::sqrt(col[j]));
    }
    let z: Vec<f64> = beta.iter().zip(&std_errors).map(|(b, s)| b / s).collect();
    let p_values = z
        .iter()
        .map(|z| libm::erfc(z.abs() / core::f64::consts::SQRT_2))
        .collect();
    let log_likelihood = outcomes
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let eta: f64 = (0..k).map(|j| x(i, j) * beta[j]).sum();
            let m = sigmoid(if y { eta } else { -eta });
            libm::log(m)
        })
        .sum();
    Ok(LogisticFit {
        coefficients: beta,
        std_errors,
        z,
        p_values,
        converged,
        iterations,
        n: outcomes.len(),
        log_likelihood,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_outcomes_are_rejected() {
        let rows = vec![vec![0.0], vec![1.0], vec![2.0]];
        assert_eq!(fit_logistic(&rows, &[true; 3]), Err(BiasError::Separation));
    }

    #[test]
    fn separable_data_is_detected() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let ys: Vec<bool> = (0..20).map(|i| i >= 10).collect();
        assert_eq!(fit_logistic(&rows, &ys), Err(BiasError::Separation));
    }

    #[test]
    fn single_distinct_row_is_degenerate() {
        let rows = vec![vec![1.0, 2.0]; 4];
        assert_eq!(
            fit_logistic(&rows, &[true, false, true, false]),
            Err(BiasError::DegenerateDesign)
        );
    }

    #[test]
    fn collinear_columns_are_degenerate() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let ys: Vec<bool> = (0..10).map(|i| i % 3 == 0).collect();
        assert_eq!(fit_logistic(&rows, &ys), Err(BiasError::DegenerateDesign));
    }

    #[test]
    fn two_by_two_table_has_closed_form() {
        // x=0: 3 of 4 true; x=1: 1 of 4 true.
        let rows: Vec<Vec<f64>> = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]
            .iter()
            .map(|x| vec![*x])
            .collect();
        let ys = [true, true, true, false, true, false, false, false];
        let fit = fit_logistic(&rows, &ys).unwrap();
        assert!(fit.converged);
        let ln3 = 3f64.ln();
        assert!((fit.coefficients[0] - ln3).abs() < 1e-9);
        assert!((fit.coefficients[1] + 2.0 * ln3).abs() < 1e-9);
        // Var(log odds) = 1/a + 1/b per group.
        let se0 = (1.0 / 3.0 + 1.0f64).sqrt();
        let se1 = (2.0 * (1.0 / 3.0 + 1.0f64)).sqrt();
        assert!((fit.std_errors[0] - se0).abs() < 1e-9);
        assert!((fit.std_errors[1] - se1).abs() < 1e-9);
        for j in 0..2 {
            assert!((fit.z[j] - fit.coefficients[j] / fit.std_errors[j]).abs() < 1e-12);
        }
    }
}
