//! System-memory interactions and their figures of merit.
//!
//! Controlled permutations `U = sum_x |x><x| (x) V_x` act on memory energy
//! levels: `V_x` sends slot `l` of sector `y` to slot `l` of sector `x + y`
//! (mod `d_S`). Cycled variants reshuffle the off-diagonal sectors, and the
//! unbiased interaction swaps the system with the memory's sector register.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{
    c, partial_trace, permute_state, random_density, random_unitary, Basis, CMatrix,
    DensityOperator, HilbertFactorization, UnitaryOperator, C64,
};
use crate::thermal::{c_max, pointer_projectors, EnergyGrouping, GibbsState, PointerProjectors};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionKind {
    ControlledPermutation,
    SwapUnbiased,
    /// Arbitrary joint unitary (Haar samples).
    Dense,
}

#[derive(Debug, Clone, PartialEq)]
enum Action {
    /// Joint basis permutation on `S (x) M`, index `x * d_M + m`.
    Permutation(Vec<usize>),
    Dense(UnitaryOperator),
}

/// Interaction between a `d_S`-level system and a `d_M`-level memory.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlledInteraction {
    kind: InteractionKind,
    d_s: usize,
    d_m: usize,
    variant: usize,
    /// `V_x` as level maps, for controlled permutations.
    branches: Option<Vec<Vec<usize>>>,
    action: Action,
}

/// JSON form, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InteractionSpec {
    Noninvasive {},
    Cycled { i: usize },
    Swap {},
    Identity {},
    Haar { seed: u64 },
}

fn controlled(d_s: usize, branches: Vec<Vec<usize>>, variant: usize) -> ControlledInteraction {
    let d_m = branches[0].len();
    let perm = (0..d_s * d_m)
        .map(|idx| {
            let (x, m) = (idx / d_m, idx % d_m);
            x * d_m + branches[x][m]
        })
        .collect();
    ControlledInteraction {
        kind: InteractionKind::ControlledPermutation,
        d_s,
        d_m,
        variant,
        branches: Some(branches),
        action: Action::Permutation(perm),
    }
}

/// Branches for a sector relabelling `k -> t(k)` composed with the shift by `x`.
fn shifted_branches(g: &EnergyGrouping, t: impl Fn(usize) -> usize) -> Vec<Vec<usize>> {
    let d = g.d_s();
    (0..d)
        .map(|x| {
            let mut v = vec![0; g.d_m()];
            for (k, group) in g.groups().iter().enumerate() {
                let target = g.group((x + t(k)) % d);
                for (l, &level) in group.iter().enumerate() {
                    v[level] = target[l];
                }
            }
            v
        })
        .collect()
}

/// Non-invasive controlled permutation reaching `C_U = C_max` on diagonal inputs.
pub fn build_noninvasive_maxcorr(g: &EnergyGrouping) -> ControlledInteraction {
    controlled(g.d_s(), shifted_branches(g, |k| k), 0)
}

/// Variant `i` in `0..d_S-1`: sector 0 still goes to `x`, sector `k != 0`
/// goes to `x + t_i(k)` with `t_i(k) = ((k - 1 - i) mod (d_S - 1)) + 1`.
pub fn build_cycled_variant(g: &EnergyGrouping, i: usize) -> Result<ControlledInteraction> {
    let d = g.d_s();
    if i + 1 >= d {
        return Err(Error::IndexOutOfRange {
            index: i,
            max: d - 2,
        });
    }
    let t = |k: usize| {
        if k == 0 {
            0
        } else {
            (k - 1 + (d - 1) - i % (d - 1)) % (d - 1) + 1
        }
    };
    Ok(controlled(d, shifted_branches(g, t), i))
}

/// Swaps the system with the sector register: `(x, m = (y, l)) -> (y, groups[x][l])`.
pub fn build_unbiased_swap(g: &EnergyGrouping) -> ControlledInteraction {
    let (d_s, d_m) = (g.d_s(), g.d_m());
    let perm = (0..d_s * d_m)
        .map(|idx| {
            let (x, m) = (idx / d_m, idx % d_m);
            let (y, l) = g.position(m);
            y * d_m + g.group(x)[l]
        })
        .collect();
    ControlledInteraction {
        kind: InteractionKind::SwapUnbiased,
        d_s,
        d_m,
        variant: 0,
        branches: None,
        action: Action::Permutation(perm),
    }
}

pub fn build_identity(d_s: usize, d_m: usize) -> ControlledInteraction {
    controlled(d_s, vec![(0..d_m).collect(); d_s], 0)
}

/// Haar-random joint unitary on `S (x) M`.
pub fn build_haar(d_s: usize, d_m: usize, seed: u64) -> Result<ControlledInteraction> {
    let u = random_unitary(HilbertFactorization::new(vec![d_s, d_m])?, seed)?;
    Ok(ControlledInteraction {
        kind: InteractionKind::Dense,
        d_s,
        d_m,
        variant: 0,
        branches: None,
        action: Action::Dense(u),
    })
}

impl ControlledInteraction {
    pub fn from_spec(spec: &InteractionSpec, g: &EnergyGrouping) -> Result<Self> {
        match spec {
            InteractionSpec::Noninvasive {} => Ok(build_noninvasive_maxcorr(g)),
            InteractionSpec::Cycled { i } => build_cycled_variant(g, *i),
            InteractionSpec::Swap {} => Ok(build_unbiased_swap(g)),
            InteractionSpec::Identity {} => Ok(build_identity(g.d_s(), g.d_m())),
            InteractionSpec::Haar { seed } => build_haar(g.d_s(), g.d_m(), *seed),
        }
    }

    pub fn kind(&self) -> InteractionKind {
        self.kind
    }

    pub fn d_s(&self) -> usize {
        self.d_s
    }

    pub fn d_m(&self) -> usize {
        self.d_m
    }

    pub fn variant(&self) -> usize {
        self.variant
    }

    /// `V_x` level maps (`V_x |m> = |branches[x][m]>`) for controlled permutations.
    pub fn branches(&self) -> Option<&[Vec<usize>]> {
        self.branches.as_deref()
    }

    /// Joint basis permutation, unless the interaction is a dense unitary.
    pub fn joint_permutation(&self) -> Option<&[usize]> {
        match &self.action {
            Action::Permutation(p) => Some(p),
            Action::Dense(_) => None,
        }
    }

    /// Unitary on `S (x) M` with factorization `[d_S, d_M]`.
    pub fn as_unitary(&self) -> UnitaryOperator {
        match &self.action {
            Action::Permutation(p) => UnitaryOperator::from_permutation(
                p,
                HilbertFactorization::new(vec![self.d_s, self.d_m]).expect("dims >= 2"),
            )
            .expect("stored permutation is valid"),
            Action::Dense(u) => u.clone(),
        }
    }

    /// Evolves a joint state whose first factor is the system.
    pub fn apply_joint(&self, joint: &DensityOperator) -> Result<DensityOperator> {
        if joint.dim() != self.d_s * self.d_m {
            return Err(Error::DimensionMismatch {
                expected: self.d_s * self.d_m,
                actual: joint.dim(),
            });
        }
        match &self.action {
            Action::Permutation(p) => permute_state(joint, p),
            Action::Dense(u) => joint.evolve(u),
        }
    }
}

/// `U (rho_S (x) sigma_M) U^dagger` on factorization `[d_S, memory factors...]`.
pub fn apply(
    u: &ControlledInteraction,
    rho_s: &DensityOperator,
    sigma_m: &DensityOperator,
) -> Result<DensityOperator> {
    if rho_s.dim() != u.d_s {
        return Err(Error::DimensionMismatch {
            expected: u.d_s,
            actual: rho_s.dim(),
        });
    }
    if sigma_m.dim() != u.d_m {
        return Err(Error::DimensionMismatch {
            expected: u.d_m,
            actual: sigma_m.dim(),
        });
    }
    let fact = HilbertFactorization::single(u.d_s)?.concat(sigma_m.factorization());
    let joint =
        DensityOperator::from_parts_unchecked(rho_s.matrix().kronecker(sigma_m.matrix()), fact)?;
    u.apply_joint(&joint)
}

/// `<b_x| rho |b_x>` for the columns `b_x` of `basis`.
pub fn outcome_probabilities(rho: &DensityOperator, basis: &Basis) -> Result<Vec<f64>> {
    match basis.matrix() {
        None => Ok(rho.diagonal()),
        Some(b) => {
            if b.nrows() != rho.dim() {
                return Err(Error::DimensionMismatch {
                    expected: rho.dim(),
                    actual: b.nrows(),
                });
            }
            let rotated = b.adjoint() * rho.matrix() * b;
            Ok(rotated.diagonal().iter().map(|z| z.re).collect())
        }
    }
}

fn split_dims(rho_joint: &DensityOperator, d_m: usize) -> Result<usize> {
    if d_m == 0 || !rho_joint.dim().is_multiple_of(d_m) {
        return Err(Error::DimensionMismatch {
            expected: d_m,
            actual: rho_joint.dim(),
        });
    }
    Ok(rho_joint.dim() / d_m)
}

/// Memory outcome distribution `Tr(rho (1 (x) Pi_x))` of a joint `S (x) M` state.
pub fn memory_outcomes(rho_joint: &DensityOperator, proj: &PointerProjectors) -> Result<Vec<f64>> {
    let d_m: usize = (0..proj.len()).map(|x| proj.rank(x)).sum();
    let d_s = split_dims(rho_joint, d_m)?;
    let diag = rho_joint.diagonal();
    Ok((0..proj.len())
        .map(|x| {
            (0..d_s)
                .flat_map(|s| proj.support(x).iter().map(move |&m| s * d_m + m))
                .map(|i| diag[i])
                .sum()
        })
        .collect())
}

/// System outcome distribution `Tr(rho (|b_x><b_x| (x) 1))` of a joint state.
pub fn system_outcomes(rho_joint: &DensityOperator, basis_s: &Basis) -> Result<Vec<f64>> {
    outcome_probabilities(&partial_trace(rho_joint, &[0])?, basis_s)
}

/// `C = sum_x Tr(rho (|x><x| (x) Pi_x))`.
pub fn correlation_c(
    rho_joint: &DensityOperator,
    basis_s: &Basis,
    proj: &PointerProjectors,
) -> Result<f64> {
    let d_s = proj.len();
    let d_m = split_dims(rho_joint, d_s)?;
    if d_m * d_s != rho_joint.dim() || (0..d_s).map(|x| proj.rank(x)).sum::<usize>() != d_m {
        return Err(Error::DimensionMismatch {
            expected: d_s * (0..d_s).map(|x| proj.rank(x)).sum::<usize>(),
            actual: rho_joint.dim(),
        });
    }
    let m = rho_joint.matrix();
    let total = match basis_s.matrix() {
        None => (0..d_s)
            .map(|x| {
                proj.support(x)
                    .iter()
                    .map(|&l| m[(x * d_m + l, x * d_m + l)].re)
                    .sum::<f64>()
            })
            .sum(),
        Some(b) => {
            let mut acc = C64::default();
            for x in 0..d_s {
                for &l in proj.support(x) {
                    for i in 0..d_s {
                        for j in 0..d_s {
                            acc += b[(i, x)].conj() * m[(i * d_m + l, j * d_m + l)] * b[(j, x)];
                        }
                    }
                }
            }
            acc.re
        }
    };
    Ok(total.clamp(0.0, 1.0))
}

/// `a_{x,y}`: probability that input `x` registers in memory sector `y`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionMatrix {
    pub a: Vec<Vec<f64>>,
    pub variant: usize,
}

impl TransitionMatrix {
    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.a.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|y| self.a.iter().map(|r| r[y]).sum())
            .collect()
    }

    /// `q_y = sum_x p_x a_{x,y}`.
    pub fn forward(&self, p: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|y| p.iter().zip(&self.a).map(|(px, r)| px * r[y]).sum())
            .collect()
    }
}

/// `a_{x,y} = Tr(Pi_y V_x tau V_x^dagger)` for a thermal memory.
pub fn transition_matrix(
    u: &ControlledInteraction,
    tau: &GibbsState,
    g: &EnergyGrouping,
) -> Result<TransitionMatrix> {
    transition_matrix_for(u, &tau.weights(), g)
}

/// Transition matrix for an arbitrary diagonal memory state.
pub fn transition_matrix_for(
    u: &ControlledInteraction,
    memory_diag: &[f64],
    g: &EnergyGrouping,
) -> Result<TransitionMatrix> {
    let branches = u
        .branches()
        .ok_or_else(|| Error::WrongKind(format!("{:?} has no transition matrix", u.kind())))?;
    if memory_diag.len() != g.d_m() || u.d_m != g.d_m() || u.d_s != g.d_s() {
        return Err(Error::DimensionMismatch {
            expected: u.d_m,
            actual: memory_diag.len(),
        });
    }
    let a = branches
        .iter()
        .map(|v| {
            let mut row = vec![0.0; g.d_s()];
            for (m, &w) in memory_diag.iter().enumerate() {
                row[g.position(v[m]).0] += w;
            }
            row
        })
        .collect();
    Ok(TransitionMatrix {
        a,
        variant: u.variant,
    })
}

/// `max |p_x - q_x|` over the test states, `q` read from the memory sectors.
pub fn check_unbiased(
    u: &ControlledInteraction,
    sigma_m: &DensityOperator,
    test_states: &[DensityOperator],
    proj: &PointerProjectors,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for rho in test_states {
        let q = memory_outcomes(&apply(u, rho, sigma_m)?, proj)?;
        worst = rho
            .diagonal()
            .iter()
            .zip(&q)
            .fold(worst, |w, (p, q)| w.max((p - q).abs()));
    }
    Ok(worst)
}

/// `max |p_x - p~_x|` over the test states, measured in `basis_s`.
pub fn check_noninvasive(
    u: &ControlledInteraction,
    sigma_m: &DensityOperator,
    test_states: &[DensityOperator],
    basis_s: &Basis,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for rho in test_states {
        let before = outcome_probabilities(rho, basis_s)?;
        let after = system_outcomes(&apply(u, rho, sigma_m)?, basis_s)?;
        worst = before
            .iter()
            .zip(&after)
            .fold(worst, |w, (p, q)| w.max((p - q).abs()));
    }
    Ok(worst)
}

/// All basis states, the uniform state, then `random` seeded full-rank states.
pub fn test_battery(d_s: usize, random: usize, seed: u64) -> Result<Vec<DensityOperator>> {
    let fact = HilbertFactorization::single(d_s)?;
    let mut out: Vec<DensityOperator> = (0..d_s)
        .map(|x| DensityOperator::basis_state(x, fact.clone()))
        .collect::<Result<_>>()?;
    out.push(DensityOperator::maximally_mixed(fact));
    for k in 0..random as u64 {
        out.push(random_density(d_s, seed.wrapping_add(k))?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InteractionReport {
    /// Faithfulness on the uniform diagonal input.
    pub c_u: f64,
    pub bias_defect: f64,
    pub invasiveness_defect: f64,
}

pub fn interaction_report(
    u: &ControlledInteraction,
    sigma_m: &DensityOperator,
    g: &EnergyGrouping,
    test_states: &[DensityOperator],
) -> Result<InteractionReport> {
    let proj = pointer_projectors(g);
    let uniform = DensityOperator::maximally_mixed(HilbertFactorization::single(g.d_s())?);
    let c_u = correlation_c(&apply(u, &uniform, sigma_m)?, &Basis::Computational, &proj)?;
    Ok(InteractionReport {
        c_u,
        bias_defect: check_unbiased(u, sigma_m, test_states, &proj)?.min(1.0),
        invasiveness_defect: check_noninvasive(u, sigma_m, test_states, &Basis::Computational)?
            .min(1.0),
    })
}

/// Faithfulness of Haar-random interactions against the `C_max` ceiling.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HaarSearch {
    pub c_max: f64,
    /// `C_U` per sample, in seed order.
    pub values: Vec<f64>,
    pub max_c: f64,
}

impl HaarSearch {
    pub fn exceeds(&self, tol: f64) -> bool {
        self.max_c > self.c_max + tol
    }
}

/// Samples `count` Haar unitaries (seeds `seed..seed+count`) and evaluates
/// `C_U` on the uniform diagonal input with a thermal memory.
pub fn haar_faithfulness_search(
    g: &EnergyGrouping,
    tau: &GibbsState,
    count: usize,
    seed: u64,
) -> Result<HaarSearch> {
    let ceiling = c_max(g, tau)?;
    let sigma = tau.state();
    let proj = pointer_projectors(g);
    let uniform = DensityOperator::maximally_mixed(HilbertFactorization::single(g.d_s())?);
    let values = (0..count as u64)
        .into_par_iter()
        .map(|k| {
            let u = build_haar(g.d_s(), g.d_m(), seed.wrapping_add(k))?;
            correlation_c(&apply(&u, &uniform, &sigma)?, &Basis::Computational, &proj)
        })
        .collect::<Result<Vec<f64>>>()?;
    let max_c = values.iter().copied().fold(0.0, f64::max);
    Ok(HaarSearch {
        c_max: ceiling,
        values,
        max_c,
    })
}

/// Dense `CMatrix` of `V_x` for a controlled permutation.
pub fn branch_matrix(u: &ControlledInteraction, x: usize) -> Result<CMatrix> {
    let b = u
        .branches()
        .ok_or_else(|| Error::WrongKind("not a controlled permutation".into()))?;
    let v = b.get(x).ok_or(Error::IndexOutOfRange {
        index: x,
        max: b.len() - 1,
    })?;
    let mut m = CMatrix::zeros(u.d_m, u.d_m);
    for (i, &j) in v.iter().enumerate() {
        m[(j, i)] = c(1.0);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::Tensor;
    use crate::thermal::{gibbs, group_energies, MemoryHamiltonian};
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;

    const G1: f64 = 0.731_058_578_630_004_9;

    fn qubit_memory(bw: f64) -> (EnergyGrouping, GibbsState) {
        let h = MemoryHamiltonian::qubit_chain(1, 1.0).unwrap();
        (group_energies(&h, 2).unwrap(), gibbs(&h, bw).unwrap())
    }

    fn diag(v: &[f64]) -> DensityOperator {
        DensityOperator::diagonal_single(v).unwrap()
    }

    fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn qubit_noninvasive_is_cnot() {
        let (g, _) = qubit_memory(1.0);
        let u = build_noninvasive_maxcorr(&g);
        assert_eq!(u.branches().unwrap(), &[vec![0, 1], vec![1, 0]]);
        assert_eq!(u.joint_permutation().unwrap(), &[0, 1, 3, 2]);
    }

    #[test]
    fn cnot_on_pure_memory_copies_diagonal() {
        let (g, _) = qubit_memory(1.0);
        let u = build_noninvasive_maxcorr(&g);
        let out = apply(&u, &diag(&[0.3, 0.7]), &diag(&[1.0, 0.0])).unwrap();
        let mut expected = CMatrix::zeros(4, 4);
        expected[(0, 0)] = c(0.3);
        expected[(3, 3)] = c(0.7);
        assert!(max_diff(out.matrix(), &expected) < 1e-15);
        let proj = pointer_projectors(&g);
        assert_abs_diff_eq!(
            correlation_c(&out, &Basis::Computational, &proj).unwrap(),
            1.0
        );
    }

    #[test]
    fn cnot_on_plus_gives_bell_state() {
        let (g, _) = qubit_memory(1.0);
        let s = 0.5f64.sqrt();
        let plus = DensityOperator::pure(
            &DVector::from_vec(vec![c(s), c(s)]),
            HilbertFactorization::single(2).unwrap(),
        )
        .unwrap();
        let out = apply(&build_noninvasive_maxcorr(&g), &plus, &diag(&[1.0, 0.0])).unwrap();
        let bell = DVector::from_vec(vec![c(s), c(0.0), c(0.0), c(s)]);
        assert!(max_diff(out.matrix(), &(&bell * bell.adjoint())) < 1e-15);
    }

    #[test]
    fn identity_leaves_product_unchanged() {
        let rho = random_density(2, 1).unwrap();
        let sigma = random_density(4, 2).unwrap();
        let out = apply(&build_identity(2, 4), &rho, &sigma).unwrap();
        assert!(max_diff(out.matrix(), rho.tensor(&sigma).matrix()) < 1e-15);
    }

    #[test]
    fn apply_checks_dimensions() {
        let (g, tau) = qubit_memory(1.0);
        let u = build_noninvasive_maxcorr(&g);
        assert!(matches!(
            apply(&u, &diag(&[0.2, 0.3, 0.5]), &tau.state()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn correlation_examples() {
        let (g, tau) = qubit_memory(1.0);
        let proj = pointer_projectors(&g);
        let out = apply(&build_identity(2, 2), &diag(&[1.0, 0.0]), &tau.state()).unwrap();
        assert_abs_diff_eq!(
            correlation_c(&out, &Basis::Computational, &proj).unwrap(),
            G1,
            epsilon = 1e-15
        );

        let mixed =
            DensityOperator::maximally_mixed(HilbertFactorization::new(vec![2, 2]).unwrap());
        assert_abs_diff_eq!(
            correlation_c(&mixed, &Basis::Computational, &proj).unwrap(),
            0.5
        );

        let uniform = diag(&[0.5, 0.5]);
        let out = apply(&build_noninvasive_maxcorr(&g), &uniform, &tau.state()).unwrap();
        assert_abs_diff_eq!(
            correlation_c(&out, &Basis::Computational, &proj).unwrap(),
            G1,
            epsilon = 1e-15
        );
    }

    #[test]
    fn correlation_in_explicit_computational_columns_matches() {
        let h = MemoryHamiltonian::qubit_chain(2, 1.0).unwrap();
        let g = group_energies(&h, 2).unwrap();
        let proj = pointer_projectors(&g);
        let rho =
            crate::qcore::random_density_on(HilbertFactorization::new(vec![2, 4]).unwrap(), 9)
                .unwrap();
        let cols = Basis::columns(CMatrix::identity(2, 2)).unwrap();
        assert_abs_diff_eq!(
            correlation_c(&rho, &cols, &proj).unwrap(),
            correlation_c(&rho, &Basis::Computational, &proj).unwrap(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn transition_matrix_examples() {
        let (g, tau) = qubit_memory(1.0);
        let a = transition_matrix(&build_noninvasive_maxcorr(&g), &tau, &g).unwrap();
        assert_abs_diff_eq!(a.a[0][0], G1, epsilon = 1e-15);
        assert_abs_diff_eq!(a.a[0][1], 1.0 - G1, epsilon = 1e-15);
        assert_abs_diff_eq!(a.a[1][0], 1.0 - G1, epsilon = 1e-15);
        assert_abs_diff_eq!(a.a[1][1], G1, epsilon = 1e-15);

        let h = MemoryHamiltonian::explicit(vec![0.0, 0.5, 0.9, 1.4, 2.0, 2.2]).unwrap();
        let g3 = group_energies(&h, 3).unwrap();
        let a = transition_matrix(
            &build_noninvasive_maxcorr(&g3),
            &gibbs(&h, 0.0).unwrap(),
            &g3,
        )
        .unwrap();
        for row in &a.a {
            for v in row {
                assert_abs_diff_eq!(*v, 1.0 / 3.0, epsilon = 1e-15);
            }
        }

        let a = transition_matrix_for(&build_noninvasive_maxcorr(&g), &[1.0, 0.0], &g).unwrap();
        assert_eq!(a.a, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);

        assert!(matches!(
            transition_matrix(&build_unbiased_swap(&g), &tau, &g),
            Err(Error::WrongKind(_))
        ));
    }

    #[test]
    fn transition_matrix_matches_dense_block_traces() {
        let h = MemoryHamiltonian::qubit_chain(3, 1.0).unwrap();
        let g = group_energies(&h, 2).unwrap();
        let tau = gibbs(&h, 0.7).unwrap();
        let u = build_noninvasive_maxcorr(&g);
        let a = transition_matrix(&u, &tau, &g).unwrap();
        let proj = pointer_projectors(&g);
        let t = tau.state();
        for x in 0..2 {
            let v = branch_matrix(&u, x).unwrap();
            let evolved = &v * t.matrix() * v.adjoint();
            for y in 0..2 {
                let dense = (proj.matrix(y) * &evolved).trace().re;
                assert_abs_diff_eq!(a.a[x][y], dense, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn cycled_variants() {
        let h = MemoryHamiltonian::explicit(vec![0.0, 0.3, 0.8, 1.1, 1.9, 2.5]).unwrap();
        let g = group_energies(&h, 3).unwrap();
        let tau = gibbs(&h, 1.0).unwrap();
        let cm = c_max(&g, &tau).unwrap();
        assert_eq!(
            build_cycled_variant(&g, 0).unwrap(),
            build_noninvasive_maxcorr(&g)
        );
        let base = transition_matrix(&build_noninvasive_maxcorr(&g), &tau, &g).unwrap();
        let v1 = transition_matrix(&build_cycled_variant(&g, 1).unwrap(), &tau, &g).unwrap();
        for x in 0..3 {
            assert_abs_diff_eq!(v1.a[x][x], cm, epsilon = 1e-15);
            for delta in 1..3 {
                let y = (x + delta) % 3;
                // s_1(delta) = ((delta - 1 + 1) mod 2) + 1
                let s = (delta % 2) + 1;
                assert_abs_diff_eq!(v1.a[x][y], base.a[x][(x + s) % 3], epsilon = 1e-15);
                assert_abs_diff_eq!(base.a[x][y] + v1.a[x][y], 1.0 - cm, epsilon = 1e-15);
            }
        }
        assert!(matches!(
            build_cycled_variant(&g, 2),
            Err(Error::IndexOutOfRange { index: 2, max: 1 })
        ));
        let (g2, _) = qubit_memory(1.0);
        assert!(build_cycled_variant(&g2, 1).is_err());
    }

    #[test]
    fn swap_is_an_involution() {
        let h = MemoryHamiltonian::explicit(vec![0.0, 0.2, 0.4, 1.0, 1.3, 2.0]).unwrap();
        let g = group_energies(&h, 3).unwrap();
        let u = build_unbiased_swap(&g).as_unitary();
        assert!(max_diff(&(u.matrix() * u.matrix()), &CMatrix::identity(18, 18)) < 1e-15);
    }

    #[test]
    fn swap_qubit_oracle() {
        let (g, tau) = qubit_memory(1.0);
        let u = build_unbiased_swap(&g);
        let out = apply(&u, &diag(&[1.0, 0.0]), &tau.state()).unwrap();
        let mem = partial_trace(&out, &[1]).unwrap();
        let sys = partial_trace(&out, &[0]).unwrap();
        assert_eq!(mem.diagonal(), vec![1.0, 0.0]);
        assert_abs_diff_eq!(sys.diagonal()[0], G1, epsilon = 1e-15);
        let battery = [diag(&[1.0, 0.0])];
        assert_abs_diff_eq!(
            check_noninvasive(&u, &tau.state(), &battery, &Basis::Computational).unwrap(),
            1.0 - G1,
            epsilon = 1e-15
        );
    }

    #[test]
    fn swap_fixed_point_and_pure_register() {
        let (g, tau) = qubit_memory(1.0);
        let u = build_unbiased_swap(&g);
        // input equal to the register marginal is untouched
        let fixed = [diag(&tau.weights())];
        assert!(
            check_noninvasive(&u, &tau.state(), &fixed, &Basis::Computational).unwrap() < 1e-15
        );
        // a pure register resets the system to |0>, so diagonal inputs are disturbed
        let pure = diag(&[1.0, 0.0]);
        let states = [diag(&[0.3, 0.7])];
        assert_abs_diff_eq!(
            check_noninvasive(&u, &pure, &states, &Basis::Computational).unwrap(),
            0.7,
            epsilon = 1e-15
        );
        assert!(check_unbiased(&u, &pure, &states, &pointer_projectors(&g)).unwrap() < 1e-15);
    }

    #[test]
    fn noninvasive_bias_follows_transition_matrix() {
        let (g, tau) = qubit_memory(1.0);
        let u = build_noninvasive_maxcorr(&g);
        let p = [0.2, 0.8];
        let a = transition_matrix(&u, &tau, &g).unwrap();
        let q = a.forward(&p);
        let oracle = (p[0] - q[0]).abs().max((p[1] - q[1]).abs());
        let defect =
            check_unbiased(&u, &tau.state(), &[diag(&p)], &pointer_projectors(&g)).unwrap();
        assert_abs_diff_eq!(defect, oracle, epsilon = 1e-15);
        assert_abs_diff_eq!(defect, 0.6 * (1.0 - G1), epsilon = 1e-15);
    }

    #[test]
    fn pure_memory_is_ideal_for_controlled_copy() {
        let (g, _) = qubit_memory(1.0);
        let battery = test_battery(2, 20, 3).unwrap();
        let pure = diag(&[1.0, 0.0]);
        let r = interaction_report(&build_noninvasive_maxcorr(&g), &pure, &g, &battery).unwrap();
        assert_eq!(r.c_u, 1.0);
        assert!(r.bias_defect < 1e-12 && r.invasiveness_defect < 1e-12);
        let r = interaction_report(&build_unbiased_swap(&g), &pure, &g, &battery).unwrap();
        assert!(r.bias_defect < 1e-12);
    }

    #[test]
    fn battery_layout() {
        let b = test_battery(3, 5, 0).unwrap();
        assert_eq!(b.len(), 3 + 1 + 5);
        assert_eq!(b[1].diagonal(), vec![0.0, 1.0, 0.0]);
        assert!(b[3].is_diagonal());
        assert!(!b[4].is_diagonal());
    }

    #[test]
    fn single_basis_input_can_exceed_ceiling() {
        // C_max bounds the uniform-input faithfulness only; a basis input can be mapped fully
        // into the correlated sectors: |0,0> -> |0,0>, |0,1> -> |1,1>.
        let (g, tau) = qubit_memory(1.0);
        let proj = pointer_projectors(&g);
        let perm = [0usize, 3, 2, 1];
        let u = UnitaryOperator::from_permutation(
            &perm,
            HilbertFactorization::new(vec![2, 2]).unwrap(),
        )
        .unwrap();
        let out = diag(&[1.0, 0.0]).tensor(&tau.state()).evolve(&u).unwrap();
        assert_abs_diff_eq!(
            correlation_c(&out, &Basis::Computational, &proj).unwrap(),
            1.0
        );
    }

    #[test]
    fn haar_search_is_deterministic_and_bounded() {
        let (g, tau) = qubit_memory(1.0);
        let a = haar_faithfulness_search(&g, &tau, 16, 5).unwrap();
        let b = haar_faithfulness_search(&g, &tau, 16, 5).unwrap();
        assert_eq!(a, b);
        assert!(!a.exceeds(1e-9));
        assert_eq!(a.values.len(), 16);
    }

    #[test]
    fn interaction_spec_json() {
        let spec: InteractionSpec = serde_json::from_str(r#"{"kind":"cycled","i":1}"#).unwrap();
        assert_eq!(spec, InteractionSpec::Cycled { i: 1 });
        let spec: InteractionSpec = serde_json::from_str(r#"{"kind":"swap"}"#).unwrap();
        let (g, _) = qubit_memory(1.0);
        assert_eq!(
            ControlledInteraction::from_spec(&spec, &g).unwrap().kind(),
            InteractionKind::SwapUnbiased
        );
        assert!(serde_json::from_str::<InteractionSpec>(r#"{"kind":"swap","i":0}"#).is_err());
        assert!(serde_json::from_str::<InteractionSpec>(r#"{"kind":"teleport"}"#).is_err());
    }

    #[test]
    fn dense_and_permutation_paths_agree() {
        let h = MemoryHamiltonian::qubit_chain(2, 1.0).unwrap();
        let g = group_energies(&h, 2).unwrap();
        let tau = gibbs(&h, 0.4).unwrap();
        let u = build_cycled_variant(&g, 0).unwrap();
        let rho = random_density(2, 17).unwrap();
        let fast = apply(&u, &rho, &tau.state()).unwrap();
        let joint = rho.tensor(
            &tau.state()
                .refactor(HilbertFactorization::single(4).unwrap())
                .unwrap(),
        );
        let slow = joint.evolve(&u.as_unitary()).unwrap();
        assert!(max_diff(fast.matrix(), slow.matrix()) < 1e-15);
    }
}
