//! Dense complex-operator algebra.
//!
//! Every state, unitary and entropic functional in the crate goes through the
//! types here. Operators are stored as dense `DMatrix<Complex<f64>>` together
//! with an explicit tensor factorization; factor 0 is the most significant
//! digit of a basis index (row-major Kronecker order).

mod entropy;
mod ops;
mod random;

pub use entropy::{mutual_information, relative_entropy, shannon_entropy, von_neumann_entropy};
pub use ops::{dephase, lift_permutation, numerical_rank, partial_trace, permute_state};
pub use random::{random_density, random_density_on, random_unitary};

use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Hermiticity tolerance for density operators.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Trace tolerance for density operators.
pub const TRACE_TOL: f64 = 1e-12;
/// Eigenvalues below this contribute `0 log 0 = 0`.
pub const EIGEN_FLOOR: f64 = 1e-14;
/// Smallest admissible eigenvalue; anything between this and zero is clipped.
pub const NEGATIVE_TOL: f64 = 1e-12;
pub const UNITARY_TOL: f64 = 1e-10;

pub(crate) fn c(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

/// Ordered list of tensor-factor dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct HilbertFactorization {
    dims: Vec<usize>,
}

impl HilbertFactorization {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidFactorization("no factors".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidFactorization(format!(
                "factor dimension {d} < 2"
            )));
        }
        Ok(Self { dims })
    }

    pub fn single(dim: usize) -> Result<Self> {
        Self::new(vec![dim])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self { dims }
    }

    /// Factorization restricted to `factors` (in the given order).
    pub fn select(&self, factors: &[usize]) -> Result<Self> {
        let dims = factors
            .iter()
            .map(|&f| {
                self.dims.get(f).copied().ok_or(Error::InvalidFactorIndex {
                    index: f,
                    factors: self.dims.len(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(dims)
    }

    /// Row-major strides: `index = sum digit[f] * stride[f]`.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for f in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[f] = strides[f + 1] * self.dims[f + 1];
        }
        strides
    }

    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for f in (0..self.dims.len()).rev() {
            out[f] = index % self.dims[f];
            index /= self.dims[f];
        }
        out
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&d, &n)| acc * n + d)
    }
}

/// Positive, unit-trace Hermitian operator with a declared factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
    factorization: HilbertFactorization,
}

impl DensityOperator {
    /// Validates Hermiticity, trace and positivity before accepting `matrix`.
    pub fn new(matrix: CMatrix, factorization: HilbertFactorization) -> Result<Self> {
        let rho = Self::from_parts_unchecked(matrix, factorization)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Shape checks only. For results of maps that preserve positivity.
    pub(crate) fn from_parts_unchecked(
        matrix: CMatrix,
        factorization: HilbertFactorization,
    ) -> Result<Self> {
        let dim = factorization.total();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: matrix.nrows(),
            });
        }
        Ok(Self {
            matrix,
            factorization,
        })
    }

    pub fn single(matrix: CMatrix) -> Result<Self> {
        let fact = HilbertFactorization::single(matrix.nrows())?;
        Self::new(matrix, fact)
    }

    pub fn from_diagonal(diag: &[f64], factorization: HilbertFactorization) -> Result<Self> {
        let m = CMatrix::from_diagonal(&DVector::from_iterator(
            diag.len(),
            diag.iter().map(|&v| c(v)),
        ));
        Self::new(m, factorization)
    }

    pub fn diagonal_single(diag: &[f64]) -> Result<Self> {
        Self::from_diagonal(diag, HilbertFactorization::single(diag.len())?)
    }

    /// `|psi><psi|` for a (not necessarily normalized) vector.
    pub fn pure(psi: &DVector<C64>, factorization: HilbertFactorization) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v = psi / c(norm);
        Self::new(&v * v.adjoint(), factorization)
    }

    pub fn basis_state(index: usize, factorization: HilbertFactorization) -> Result<Self> {
        let dim = factorization.total();
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: index,
            });
        }
        let mut diag = vec![0.0; dim];
        diag[index] = 1.0;
        Self::from_diagonal(&diag, factorization)
    }

    pub fn maximally_mixed(factorization: HilbertFactorization) -> Self {
        let dim = factorization.total();
        let m = CMatrix::from_diagonal_element(dim, dim, c(1.0 / dim as f64));
        Self {
            matrix: m,
            factorization,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.matrix;
        let herm = (m - m.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("non-Hermitian by {herm:e}")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let min = m
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min < -NEGATIVE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn factorization(&self) -> &HilbertFactorization {
        &self.factorization
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|j| (0..n).all(|i| i == j || self.matrix[(i, j)] == C64::default()))
    }

    /// Spectrum with values in `(-NEGATIVE_TOL, 0)` clipped to zero.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let raw: Vec<f64> = if self.is_diagonal() {
            self.diagonal()
        } else {
            self.matrix
                .clone()
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .collect()
        };
        raw.into_iter()
            .map(|v| if v < 0.0 && v > -NEGATIVE_TOL { 0.0 } else { v })
            .collect()
    }

    /// Same matrix, new factorization of equal total dimension.
    pub fn refactor(&self, factorization: HilbertFactorization) -> Result<Self> {
        Self::from_parts_unchecked(self.matrix.clone(), factorization)
    }

    /// `U rho U^dagger`, re-symmetrized to absorb rounding.
    pub fn evolve(&self, u: &UnitaryOperator) -> Result<Self> {
        if u.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: u.dim(),
            });
        }
        let m = &u.matrix * &self.matrix * u.matrix.adjoint();
        let m = (&m + m.adjoint()) * c(0.5);
        Self::from_parts_unchecked(m, self.factorization.clone())
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        partial_trace(self, keep)
    }
}

/// Unitary with a declared factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryOperator {
    matrix: CMatrix,
    factorization: HilbertFactorization,
}

impl UnitaryOperator {
    pub fn new(matrix: CMatrix, factorization: HilbertFactorization) -> Result<Self> {
        let dim = factorization.total();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: matrix.nrows(),
            });
        }
        let dev = (matrix.adjoint() * &matrix - CMatrix::identity(dim, dim))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self {
            matrix,
            factorization,
        })
    }

    pub fn identity(factorization: HilbertFactorization) -> Self {
        let dim = factorization.total();
        Self {
            matrix: CMatrix::identity(dim, dim),
            factorization,
        }
    }

    /// Permutation matrix with `U|i> = |perm[i]>`.
    pub fn from_permutation(perm: &[usize], factorization: HilbertFactorization) -> Result<Self> {
        check_permutation(perm, factorization.total())?;
        let dim = perm.len();
        let mut m = CMatrix::zeros(dim, dim);
        for (i, &j) in perm.iter().enumerate() {
            m[(j, i)] = c(1.0);
        }
        Ok(Self {
            matrix: m,
            factorization,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn factorization(&self) -> &HilbertFactorization {
        &self.factorization
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn compose(&self, first: &Self) -> Result<Self> {
        if first.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: first.dim(),
            });
        }
        Ok(Self {
            matrix: &self.matrix * &first.matrix,
            factorization: self.factorization.clone(),
        })
    }
}

pub(crate) fn check_permutation(perm: &[usize], dim: usize) -> Result<()> {
    if perm.len() != dim {
        return Err(Error::InvalidPermutation(format!(
            "length {} for dimension {dim}",
            perm.len()
        )));
    }
    let mut seen = vec![false; dim];
    for &p in perm {
        if p >= dim || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidPermutation(format!(
                "image {p} repeated or out of range"
            )));
        }
    }
    Ok(())
}

/// Kronecker product; the factorization of the result is the concatenation.
pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Self;
}

impl Tensor for DensityOperator {
    fn tensor(&self, other: &Self) -> Self {
        Self {
            matrix: self.matrix.kronecker(&other.matrix),
            factorization: self.factorization.concat(&other.factorization),
        }
    }
}

impl Tensor for UnitaryOperator {
    fn tensor(&self, other: &Self) -> Self {
        Self {
            matrix: self.matrix.kronecker(&other.matrix),
            factorization: self.factorization.concat(&other.factorization),
        }
    }
}

pub fn tensor<T: Tensor>(a: &T, b: &T) -> T {
    a.tensor(b)
}

/// Nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbabilityVector {
    entries: Vec<f64>,
}

impl ProbabilityVector {
    pub const SUM_TOL: f64 = 1e-12;
    pub const CLIP_TOL: f64 = 1e-14;

    pub fn new(entries: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(entries, Self::SUM_TOL, Self::CLIP_TOL)
    }

    /// Accepts entries down to `-clip` (set to zero) and a sum within `sum_tol` of one.
    pub fn with_tolerance(mut entries: Vec<f64>, sum_tol: f64, clip: f64) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidProbability("empty".into()));
        }
        for v in entries.iter_mut() {
            if !v.is_finite() {
                return Err(Error::InvalidProbability(format!("non-finite entry {v}")));
            }
            if *v < 0.0 {
                if *v < -clip {
                    return Err(Error::InvalidProbability(format!("negative entry {v:e}")));
                }
                *v = 0.0;
            }
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > sum_tol {
            return Err(Error::InvalidProbability(format!("sum {sum}")));
        }
        Ok(Self { entries })
    }

    pub fn uniform(len: usize) -> Self {
        Self {
            entries: vec![1.0 / len as f64; len],
        }
    }

    pub fn point(len: usize, at: usize) -> Self {
        let mut entries = vec![0.0; len];
        entries[at] = 1.0;
        Self { entries }
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, x: usize) -> f64 {
        self.entries[x]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Measurement basis of one tensor factor.
#[derive(Debug, Clone, PartialEq)]
pub enum Basis {
    Computational,
    /// Columns are the basis vectors.
    Columns(CMatrix),
}

impl Basis {
    pub fn columns(m: CMatrix) -> Result<Self> {
        let n = m.nrows();
        UnitaryOperator::new(m.clone(), HilbertFactorization::single(n)?)?;
        Ok(Basis::Columns(m))
    }

    pub(crate) fn matrix(&self) -> Option<&CMatrix> {
        match self {
            Basis::Computational => None,
            Basis::Columns(m) => Some(m),
        }
    }
}
