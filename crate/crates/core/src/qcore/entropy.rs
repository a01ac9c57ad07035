//! Entropic functionals. All values are in nats.

use super::{partial_trace, DensityOperator, ProbabilityVector, EIGEN_FLOOR};
use crate::error::{Error, Result};

fn entropy_of_spectrum(values: impl IntoIterator<Item = f64>) -> f64 {
    values
        .into_iter()
        .filter(|&v| v > EIGEN_FLOOR)
        .map(|v| -v * v.ln())
        .sum()
}

pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    entropy_of_spectrum(rho.eigenvalues())
}

pub fn shannon_entropy(p: &ProbabilityVector) -> f64 {
    entropy_of_spectrum(p.entries().iter().copied())
}

/// `D(rho || sigma) = Tr rho (log rho - log sigma)`.
pub fn relative_entropy(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: sigma.dim(),
            actual: rho.dim(),
        });
    }
    // Weights of rho along the eigenvectors of sigma.
    let (mu, overlaps): (Vec<f64>, Vec<f64>) = if sigma.is_diagonal() {
        (sigma.diagonal(), rho.diagonal())
    } else {
        let eig = sigma.matrix().clone().symmetric_eigen();
        let r = rho.matrix();
        let w = (0..eig.eigenvalues.len())
            .map(|k| {
                let v = eig.eigenvectors.column(k);
                (v.adjoint() * r * v)[(0, 0)].re
            })
            .collect();
        (eig.eigenvalues.iter().copied().collect(), w)
    };
    let mut cross = 0.0;
    for (&m, &w) in mu.iter().zip(&overlaps) {
        if m > EIGEN_FLOOR {
            cross += w * m.ln();
        } else if w > 1e-12 {
            return Err(Error::SupportViolation { overlap: w });
        }
    }
    Ok(-von_neumann_entropy(rho) - cross)
}

/// `I(A:B) = S(A) + S(B) - S(AB)` for the cut `A = cut`, `B` = the remaining factors.
pub fn mutual_information(rho: &DensityOperator, cut: &[usize]) -> Result<f64> {
    let n = rho.factorization().len();
    let mut a = cut.to_vec();
    a.sort_unstable();
    a.dedup();
    if a.len() != cut.len() {
        return Err(Error::InvalidCut("repeated factor".into()));
    }
    if let Some(&bad) = a.iter().find(|&&f| f >= n) {
        return Err(Error::InvalidCut(format!("factor {bad} out of range")));
    }
    if a.is_empty() || a.len() == n {
        return Err(Error::InvalidCut("both sides must be nonempty".into()));
    }
    let b: Vec<usize> = (0..n).filter(|f| !a.contains(f)).collect();
    let s_a = von_neumann_entropy(&partial_trace(rho, &a)?);
    let s_b = von_neumann_entropy(&partial_trace(rho, &b)?);
    Ok(s_a + s_b - von_neumann_entropy(rho))
}
