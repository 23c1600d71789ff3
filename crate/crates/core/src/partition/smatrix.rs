use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{CoverageError, Result};

/// Gram matrix `S` of the cyclic difference form written in the first
/// `N − 1` errors: with `e_N = −Σ_{j<N} e_j`,
/// `Σ_{i=1}^{N} (e_i − e_{i−1})² = eᵀ S e`.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceMatrix {
    pub matrix: DMatrix<f64>,
    pub lambda_min: f64,
}

/// Builds `S` as `Σ_i d_i d_iᵀ` where `d_i` holds the coefficients of
/// `e_i − e_{i−1}` after eliminating `e_N`.
pub fn build_s(n: usize) -> Result<BalanceMatrix> {
    if n < 2 {
        return Err(CoverageError::InvalidArgument(format!(
            "S matrix needs at least two agents, got {n}"
        )));
    }
    let dim = n - 1;
    // coefficients of e_k for k = 1..=N in terms of the reduced vector
    let coeff = |k: usize| -> Vec<f64> {
        if k == n {
            vec![-1.0; dim]
        } else {
            let mut v = vec![0.0; dim];
            v[k - 1] = 1.0;
            v
        }
    };
    let mut s = DMatrix::<f64>::zeros(dim, dim);
    for i in 1..=n {
        let prev = if i == 1 { n } else { i - 1 };
        let a = coeff(i);
        let b = coeff(prev);
        let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        for r in 0..dim {
            for c in 0..dim {
                s[(r, c)] += d[r] * d[c];
            }
        }
    }
    let lambda_min = SymmetricEigen::new(s.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(BalanceMatrix { matrix: s, lambda_min })
}
