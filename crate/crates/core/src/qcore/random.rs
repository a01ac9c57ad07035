//! Seeded random states and unitaries.

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{c, CMatrix, DensityOperator, HilbertFactorization, UnitaryOperator};
use crate::error::Result;

fn ginibre(dim: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Hilbert-Schmidt distributed full-rank state, deterministic per seed.
pub fn random_density(dim: usize, seed: u64) -> Result<DensityOperator> {
    random_density_on(HilbertFactorization::single(dim)?, seed)
}

pub fn random_density_on(
    factorization: HilbertFactorization,
    seed: u64,
) -> Result<DensityOperator> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = ginibre(factorization.total(), &mut rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    let m = m / c(tr);
    let m = (&m + m.adjoint()) * c(0.5);
    DensityOperator::from_parts_unchecked(m, factorization)
}

/// Haar-random unitary: QR of a Ginibre matrix with the phases of `R`'s diagonal removed.
pub fn random_unitary(factorization: HilbertFactorization, seed: u64) -> Result<UnitaryOperator> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = factorization.total();
    let qr = ginibre(dim, &mut rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..dim {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0) };
        let mut col = q.column_mut(k);
        col *= phase;
    }
    UnitaryOperator::new(q, factorization)
}
