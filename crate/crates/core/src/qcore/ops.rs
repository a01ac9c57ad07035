use super::{c, check_permutation, Basis, CMatrix, DensityOperator, HilbertFactorization, C64};
use crate::error::{Error, Result};

/// Offsets `sum digit[f] * stride[f]` for all multi-indices over `subset`,
/// enumerated in row-major order of the subset.
fn offsets(fact: &HilbertFactorization, subset: &[usize]) -> Vec<usize> {
    let strides = fact.strides();
    let mut out = vec![0usize];
    for &f in subset {
        let (d, stride) = (fact.dims()[f], strides[f]);
        out = out
            .iter()
            .flat_map(|&base| (0..d).map(move |k| base + k * stride))
            .collect();
    }
    out
}

fn check_factor(fact: &HilbertFactorization, f: usize) -> Result<()> {
    if f >= fact.len() {
        return Err(Error::InvalidFactorIndex {
            index: f,
            factors: fact.len(),
        });
    }
    Ok(())
}

/// Reduced state on the factors in `keep` (sorted, deduplicated).
pub fn partial_trace(rho: &DensityOperator, keep: &[usize]) -> Result<DensityOperator> {
    let fact = rho.factorization();
    if keep.is_empty() {
        return Err(Error::InvalidFactorIndex {
            index: 0,
            factors: 0,
        });
    }
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    for &f in &keep {
        check_factor(fact, f)?;
    }
    if keep.len() == fact.len() {
        return Ok(rho.clone());
    }
    let traced: Vec<usize> = (0..fact.len()).filter(|f| !keep.contains(f)).collect();
    let kept_off = offsets(fact, &keep);
    let traced_off = offsets(fact, &traced);
    let m = rho.matrix();
    let n = kept_off.len();
    let out = CMatrix::from_fn(n, n, |a, b| {
        let (ra, rb) = (kept_off[a], kept_off[b]);
        traced_off
            .iter()
            .map(|&t| m[(ra + t, rb + t)])
            .fold(C64::default(), |acc, z| acc + z)
    });
    DensityOperator::from_parts_unchecked(out, fact.select(&keep)?)
}

/// `1 (x) ... (x) op (x) ... (x) 1` with `op` on `factor`.
fn embed_local(op: &CMatrix, fact: &HilbertFactorization, factor: usize) -> CMatrix {
    fact.dims()
        .iter()
        .enumerate()
        .map(|(f, &d)| {
            if f == factor {
                op.clone()
            } else {
                CMatrix::identity(d, d)
            }
        })
        .reduce(|acc, m| acc.kronecker(&m))
        .expect("factorization is never empty")
}

/// Removes coherences of `factor` in `basis`.
pub fn dephase(rho: &DensityOperator, factor: usize, basis: &Basis) -> Result<DensityOperator> {
    let fact = rho.factorization();
    check_factor(fact, factor)?;
    let d = fact.dims()[factor];
    let rotation = match basis.matrix() {
        Some(b) => {
            if b.nrows() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: b.nrows(),
                });
            }
            Some(embed_local(&b.adjoint(), fact, factor))
        }
        None => None,
    };
    let mut m = match &rotation {
        Some(w) => w * rho.matrix() * w.adjoint(),
        None => rho.matrix().clone(),
    };
    let stride = fact.strides()[factor];
    let n = m.nrows();
    for j in 0..n {
        let dj = (j / stride) % d;
        for i in 0..n {
            if (i / stride) % d != dj {
                m[(i, j)] = C64::default();
            }
        }
    }
    if let Some(w) = &rotation {
        m = w.adjoint() * m * w;
        m = (&m + m.adjoint()) * c(0.5);
    }
    DensityOperator::from_parts_unchecked(m, fact.clone())
}

/// Applies the basis permutation `|i> -> |perm[i]>` as `P rho P^dagger`.
pub fn permute_state(rho: &DensityOperator, perm: &[usize]) -> Result<DensityOperator> {
    check_permutation(perm, rho.dim())?;
    let src = rho.matrix();
    let n = rho.dim();
    let mut out = CMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            out[(perm[i], perm[j])] = src[(i, j)];
        }
    }
    DensityOperator::from_parts_unchecked(out, rho.factorization().clone())
}

/// Extends a permutation acting on `factors` (in that order) to the full space.
pub fn lift_permutation(
    local: &[usize],
    full: &HilbertFactorization,
    factors: &[usize],
) -> Result<Vec<usize>> {
    let local_fact = full.select(factors)?;
    check_permutation(local, local_fact.total())?;
    let mut out = Vec::with_capacity(full.total());
    for idx in 0..full.total() {
        let mut digits = full.digits(idx);
        let sub: Vec<usize> = factors.iter().map(|&f| digits[f]).collect();
        let mapped = local_fact.digits(local[local_fact.index(&sub)]);
        for (&f, &d) in factors.iter().zip(&mapped) {
            digits[f] = d;
        }
        out.push(full.index(&digits));
    }
    Ok(out)
}

/// Number of eigenvalues above `tol`.
pub fn numerical_rank(rho: &DensityOperator, tol: f64) -> usize {
    rho.eigenvalues().into_iter().filter(|&v| v > tol).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::Tensor;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;

    fn bell() -> DensityOperator {
        let s = 0.5f64.sqrt();
        let psi = DVector::from_vec(vec![c(s), c(0.0), c(0.0), c(s)]);
        DensityOperator::pure(&psi, HilbertFactorization::new(vec![2, 2]).unwrap()).unwrap()
    }

    fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn product_state_marginals() {
        let a = crate::qcore::random_density(3, 11).unwrap();
        let b = crate::qcore::random_density(2, 12).unwrap();
        let ab = a.tensor(&b);
        assert!(max_diff(partial_trace(&ab, &[0]).unwrap().matrix(), a.matrix()) < 1e-14);
        assert!(max_diff(partial_trace(&ab, &[1]).unwrap().matrix(), b.matrix()) < 1e-14);
    }

    #[test]
    fn bell_marginals_are_maximally_mixed() {
        for keep in [0, 1] {
            let r = partial_trace(&bell(), &[keep]).unwrap();
            assert!(max_diff(r.matrix(), &CMatrix::from_diagonal_element(2, 2, c(0.5))) < 1e-15);
        }
    }

    #[test]
    fn classically_correlated_marginal() {
        // explicit 4x4 matrix sum_x p_x |xx><xx|
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = c(0.3);
        m[(3, 3)] = c(0.7);
        let rho = DensityOperator::new(m, HilbertFactorization::new(vec![2, 2]).unwrap()).unwrap();
        let s = partial_trace(&rho, &[0]).unwrap();
        assert_eq!(s.diagonal(), vec![0.3, 0.7]);
        assert_eq!(s.matrix()[(0, 1)], C64::default());
    }

    #[test]
    fn partial_trace_rejects_bad_indices() {
        assert!(matches!(
            partial_trace(&bell(), &[2]),
            Err(Error::InvalidFactorIndex { index: 2, .. })
        ));
        assert!(partial_trace(&bell(), &[]).is_err());
    }

    #[test]
    fn partial_trace_of_middle_factor() {
        let a = crate::qcore::random_density(2, 1).unwrap();
        let b = crate::qcore::random_density(3, 2).unwrap();
        let cc = crate::qcore::random_density(2, 3).unwrap();
        let abc = a.tensor(&b).tensor(&cc);
        let ac = partial_trace(&abc, &[2, 0]).unwrap();
        assert!(max_diff(ac.matrix(), a.tensor(&cc).matrix()) < 1e-14);
        assert_abs_diff_eq!(ac.trace(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dephasing_examples() {
        let d = DensityOperator::diagonal_single(&[0.2, 0.8]).unwrap();
        assert_eq!(dephase(&d, 0, &Basis::Computational).unwrap(), d);

        let s = 0.5f64.sqrt();
        let plus = DensityOperator::pure(
            &DVector::from_vec(vec![c(s), c(s)]),
            HilbertFactorization::single(2).unwrap(),
        )
        .unwrap();
        let r = dephase(&plus, 0, &Basis::Computational).unwrap();
        assert!(max_diff(r.matrix(), &CMatrix::from_diagonal_element(2, 2, c(0.5))) < 1e-15);

        let both = dephase(
            &dephase(&bell(), 0, &Basis::Computational).unwrap(),
            1,
            &Basis::Computational,
        )
        .unwrap();
        let mut expected = CMatrix::zeros(4, 4);
        expected[(0, 0)] = c(0.5);
        expected[(3, 3)] = c(0.5);
        assert!(max_diff(both.matrix(), &expected) < 1e-15);
    }

    #[test]
    fn dephasing_in_rotated_basis() {
        let s = 0.5f64.sqrt();
        let hadamard = CMatrix::from_row_slice(2, 2, &[c(s), c(s), c(s), c(-s)]);
        let basis = Basis::columns(hadamard).unwrap();
        let plus = DensityOperator::pure(
            &DVector::from_vec(vec![c(s), c(s)]),
            HilbertFactorization::single(2).unwrap(),
        )
        .unwrap();
        // |+> is a basis vector of the Hadamard basis
        let r = dephase(&plus, 0, &basis).unwrap();
        assert!(max_diff(r.matrix(), plus.matrix()) < 1e-14);
        let zero = DensityOperator::diagonal_single(&[1.0, 0.0]).unwrap();
        let r = dephase(&zero, 0, &basis).unwrap();
        assert!(max_diff(r.matrix(), &CMatrix::from_diagonal_element(2, 2, c(0.5))) < 1e-14);
    }

    #[test]
    fn lifted_permutation_acts_on_selected_factors() {
        let full = HilbertFactorization::new(vec![2, 3, 2]).unwrap();
        // CNOT-like swap on factors (0, 2)
        let local = [0, 1, 3, 2];
        let perm = lift_permutation(&local, &full, &[0, 2]).unwrap();
        for (idx, &target) in perm.iter().enumerate() {
            let d = full.digits(idx);
            let img = full.digits(target);
            assert_eq!(img[0], d[0]);
            assert_eq!(img[1], d[1]);
            assert_eq!(img[2], d[2] ^ d[0]);
        }
    }
}
