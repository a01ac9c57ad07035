//! Broadcasting to memories with several components.
//!
//! A [`MemoryArray`] is an ordered list of components, each with its own
//! Hamiltonian, initial state, sector grouping and interaction. The joint
//! space is laid out as `[system, component 0 factors, component 1 factors, ...]`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::infotherm::{conditional_ensemble, Ensemble};
use crate::interact::{apply, ControlledInteraction, InteractionSpec};
use crate::qcore::{
    dephase, lift_permutation, mutual_information, partial_trace, permute_state, Basis, CMatrix,
    DensityOperator, HilbertFactorization, ProbabilityVector, Tensor,
};
use crate::thermal::{
    c_max_qubits_analytic_grouped, gibbs, group_energies, EnergyGrouping, GibbsState,
    MemoryHamiltonian,
};

/// Largest joint dimension simulated densely.
pub const DENSE_BUDGET: usize = 4096;

#[derive(Debug, Clone)]
pub struct MemoryComponent {
    hamiltonian: MemoryHamiltonian,
    gibbs: Option<GibbsState>,
    state: DensityOperator,
    grouping: EnergyGrouping,
    interaction: ControlledInteraction,
}

impl MemoryComponent {
    /// Component prepared in its Gibbs state at inverse temperature `beta`.
    pub fn thermal(
        h: MemoryHamiltonian,
        beta: f64,
        d_s: usize,
        spec: &InteractionSpec,
    ) -> Result<Self> {
        let tau = gibbs(&h, beta)?;
        let state = tau.state();
        let mut c = Self::with_state(h, state, d_s, spec)?;
        c.gibbs = Some(tau);
        Ok(c)
    }

    /// Component prepared in an arbitrary state, diagonal or not.
    pub fn with_state(
        h: MemoryHamiltonian,
        state: DensityOperator,
        d_s: usize,
        spec: &InteractionSpec,
    ) -> Result<Self> {
        if state.dim() != h.dim() {
            return Err(Error::DimensionMismatch {
                expected: h.dim(),
                actual: state.dim(),
            });
        }
        let grouping = group_energies(&h, d_s)?;
        let interaction = ControlledInteraction::from_spec(spec, &grouping)?;
        let state = state.refactor(h.factorization().clone())?;
        Ok(Self {
            hamiltonian: h,
            gibbs: None,
            state,
            grouping,
            interaction,
        })
    }

    pub fn hamiltonian(&self) -> &MemoryHamiltonian {
        &self.hamiltonian
    }

    pub fn gibbs(&self) -> Option<&GibbsState> {
        self.gibbs.as_ref()
    }

    pub fn state(&self) -> &DensityOperator {
        &self.state
    }

    pub fn grouping(&self) -> &EnergyGrouping {
        &self.grouping
    }

    pub fn interaction(&self) -> &ControlledInteraction {
        &self.interaction
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    /// Sector-0 weight of the initial state; `C_max` for thermal components.
    pub fn c_max(&self) -> f64 {
        let diag = self.state.diagonal();
        self.grouping.group(0).iter().map(|&i| diag[i]).sum()
    }
}

#[derive(Debug, Clone)]
pub struct MemoryArray {
    d_s: usize,
    components: Vec<MemoryComponent>,
}

impl MemoryArray {
    pub fn new(d_s: usize, components: Vec<MemoryComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter(
                "memory needs at least one component".into(),
            ));
        }
        for c in &components {
            if c.grouping.d_s() != d_s || c.dim() < d_s {
                return Err(Error::DimensionMismatch {
                    expected: d_s,
                    actual: c.grouping.d_s(),
                });
            }
        }
        Ok(Self { d_s, components })
    }

    /// `n_components` identical thermal components sharing one interaction spec.
    pub fn thermal_uniform(
        d_s: usize,
        n_components: usize,
        h: &MemoryHamiltonian,
        beta: f64,
        spec: &InteractionSpec,
    ) -> Result<Self> {
        let comps = (0..n_components)
            .map(|_| MemoryComponent::thermal(h.clone(), beta, d_s, spec))
            .collect::<Result<_>>()?;
        Self::new(d_s, comps)
    }

    /// `d_S - 1` thermal components, the `i`-th coupled through cycled variant `i`.
    pub fn reconstruction(d_s: usize, h: &MemoryHamiltonian, beta: f64) -> Result<Self> {
        if d_s < 2 {
            return Err(Error::InvalidParameter(format!("d_S = {d_s} < 2")));
        }
        let comps = (0..d_s - 1)
            .map(|i| MemoryComponent::thermal(h.clone(), beta, d_s, &InteractionSpec::Cycled { i }))
            .collect::<Result<_>>()?;
        Self::new(d_s, comps)
    }

    pub fn d_s(&self) -> usize {
        self.d_s
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[MemoryComponent] {
        &self.components
    }

    pub fn total_dim(&self) -> usize {
        self.components
            .iter()
            .fold(self.d_s, |acc, c| acc.saturating_mul(c.dim()))
    }

    pub fn factorization(&self) -> HilbertFactorization {
        let sys = HilbertFactorization::single(self.d_s).expect("d_S >= 2");
        self.components
            .iter()
            .fold(sys, |f, c| f.concat(c.hamiltonian.factorization()))
    }

    /// Joint-space factor indices of component `i`.
    pub fn component_factors(&self, i: usize) -> Vec<usize> {
        let start = 1 + self.components[..i]
            .iter()
            .map(|c| c.hamiltonian.factorization().len())
            .sum::<usize>();
        (start..start + self.components[i].hamiltonian.factorization().len()).collect()
    }

    pub fn memory_state(&self) -> DensityOperator {
        let mut it = self.components.iter().map(|c| c.state.clone());
        let first = it.next().expect("nonempty");
        it.fold(first, |acc, s| acc.tensor(&s))
    }

    fn check_budget(&self) -> Result<()> {
        let dim = self.total_dim();
        if dim > DENSE_BUDGET {
            return Err(Error::DimensionBudgetExceeded {
                dim,
                budget: DENSE_BUDGET,
            });
        }
        Ok(())
    }

    fn initial_joint(&self, rho_s: &DensityOperator) -> Result<DensityOperator> {
        if rho_s.dim() != self.d_s {
            return Err(Error::DimensionMismatch {
                expected: self.d_s,
                actual: rho_s.dim(),
            });
        }
        let sys = rho_s.refactor(HilbertFactorization::single(self.d_s)?)?;
        Ok(sys.tensor(&self.memory_state()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BroadcastMode {
    SequentialLocal,
    Global,
}

#[derive(Debug, Clone)]
pub struct BroadcastRun {
    pub mode: BroadcastMode,
    pub p_initial: Vec<f64>,
    pub final_state: DensityOperator,
    /// Outcome distribution of each component.
    pub q: Vec<ProbabilityVector>,
    /// System-conditioned ensemble on each component.
    pub ensembles: Vec<Ensemble>,
    /// System diagonal before the run and after each interaction step.
    pub system_diagonals: Vec<Vec<f64>>,
}

impl BroadcastRun {
    pub fn ideal_scb_defect(&self, p_true: &ProbabilityVector) -> f64 {
        ideal_scb_defect(self, p_true)
    }
}

fn system_diagonal(joint: &DensityOperator, d_s: usize) -> Vec<f64> {
    let block = joint.dim() / d_s;
    let diag = joint.diagonal();
    (0..d_s)
        .map(|x| diag[x * block..(x + 1) * block].iter().sum())
        .collect()
}

/// `q^(i)_x` summed straight from the joint diagonal.
fn component_outcomes(
    mem: &MemoryArray,
    joint: &DensityOperator,
    i: usize,
) -> Result<ProbabilityVector> {
    let full = joint.factorization();
    let factors = mem.component_factors(i);
    let local = full.select(&factors)?;
    let g = &mem.components[i].grouping;
    let mut q = vec![0.0; mem.d_s];
    for (idx, p) in joint.diagonal().into_iter().enumerate() {
        let digits = full.digits(idx);
        let sub: Vec<usize> = factors.iter().map(|&f| digits[f]).collect();
        q[g.position(local.index(&sub)).0] += p;
    }
    ProbabilityVector::with_tolerance(q, 1e-10, 1e-12)
}

fn finish_run(
    mem: &MemoryArray,
    mode: BroadcastMode,
    rho_s: &DensityOperator,
    final_state: DensityOperator,
    system_diagonals: Vec<Vec<f64>>,
) -> Result<BroadcastRun> {
    let mut q = Vec::with_capacity(mem.len());
    let mut ensembles = Vec::with_capacity(mem.len());
    for i in 0..mem.len() {
        q.push(component_outcomes(mem, &final_state, i)?);
        let mut keep = vec![0];
        keep.extend(mem.component_factors(i));
        let reduced = partial_trace(&final_state, &keep)?;
        ensembles.push(conditional_ensemble(&reduced, &Basis::Computational)?);
    }
    Ok(BroadcastRun {
        mode,
        p_initial: rho_s.diagonal(),
        final_state,
        q,
        ensembles,
        system_diagonals,
    })
}

/// Couples the system to each component in turn, nothing traced in between.
pub fn run_sequential_local(rho_s: &DensityOperator, mem: &MemoryArray) -> Result<BroadcastRun> {
    mem.check_budget()?;
    let mut joint = mem.initial_joint(rho_s)?;
    let full = joint.factorization().clone();
    let mut diagonals = vec![system_diagonal(&joint, mem.d_s)];
    for (i, comp) in mem.components.iter().enumerate() {
        let local = comp.interaction.joint_permutation().ok_or_else(|| {
            Error::WrongKind("sequential runs need permutation interactions".into())
        })?;
        let mut factors = vec![0];
        factors.extend(mem.component_factors(i));
        let perm = lift_permutation(local, &full, &factors)?;
        joint = permute_state(&joint, &perm)?;
        diagonals.push(system_diagonal(&joint, mem.d_s));
    }
    finish_run(mem, BroadcastMode::SequentialLocal, rho_s, joint, diagonals)
}

/// One interaction built on the composite Hamiltonian of all components.
pub fn run_global(
    rho_s: &DensityOperator,
    mem: &MemoryArray,
    spec: &InteractionSpec,
) -> Result<BroadcastRun> {
    mem.check_budget()?;
    let parts: Vec<MemoryHamiltonian> = mem
        .components
        .iter()
        .map(|c| c.hamiltonian.clone())
        .collect();
    let composite = MemoryHamiltonian::compose(&parts)?;
    let g = group_energies(&composite, mem.d_s)?;
    let u = ControlledInteraction::from_spec(spec, &g)?;
    let start = mem.initial_joint(rho_s)?;
    let sys = partial_trace(&start, &[0])?;
    let joint = apply(&u, &sys, &mem.memory_state())?;
    let diagonals = vec![
        system_diagonal(&start, mem.d_s),
        system_diagonal(&joint, mem.d_s),
    ];
    finish_run(mem, BroadcastMode::Global, rho_s, joint, diagonals)
}

/// `max_{i,x} |p_x - q^(i)_x|`.
pub fn ideal_scb_defect(run: &BroadcastRun, p_true: &ProbabilityVector) -> f64 {
    run.q
        .iter()
        .flat_map(|q| {
            q.entries()
                .iter()
                .zip(p_true.entries())
                .map(|(a, b)| (a - b).abs())
        })
        .fold(0.0, f64::max)
}

/// Defect for each basis-state input of the system.
pub fn basis_state_defects(mem: &MemoryArray) -> Result<Vec<f64>> {
    let fact = HilbertFactorization::single(mem.d_s)?;
    (0..mem.d_s)
        .map(|x| {
            let run = run_sequential_local(&DensityOperator::basis_state(x, fact.clone())?, mem)?;
            Ok(ideal_scb_defect(
                &run,
                &ProbabilityVector::point(mem.d_s, x),
            ))
        })
        .collect()
}

/// Entropy bookkeeping after `k` rounds of doubling the number of memories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoGoWitness {
    /// Smallest violating round; `None` when `H(X) >= S(M_1)`.
    pub k: Option<u32>,
    /// `S(rho_S) + 2^k S(M_1)`.
    pub lhs: f64,
    /// `2^k H(X) + ln d_S`.
    pub rhs: f64,
    pub violated: bool,
}

pub const WITNESS_TOL: f64 = 1e-10;

pub fn nogo_witness(s_rho_s: f64, s_m1: f64, h_x: f64, d_s: usize) -> Result<NoGoWitness> {
    if s_m1.is_nan() || s_m1 <= 0.0 {
        return Err(Error::NonPositiveMemoryEntropy(s_m1));
    }
    if d_s < 2 {
        return Err(Error::InvalidParameter(format!("d_S = {d_s} < 2")));
    }
    let ln_d = (d_s as f64).ln();
    let at = |k: u32| {
        let scale = 2f64.powi(k as i32);
        (s_rho_s + scale * s_m1, scale * h_x + ln_d)
    };
    if h_x < s_m1 {
        for k in 0..=1023u32 {
            let (lhs, rhs) = at(k);
            if lhs > rhs + WITNESS_TOL {
                return Ok(NoGoWitness {
                    k: Some(k),
                    lhs,
                    rhs,
                    violated: true,
                });
            }
        }
    }
    let (lhs, rhs) = at(0);
    Ok(NoGoWitness {
        k: None,
        lhs,
        rhs,
        violated: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionResult {
    pub q_av: ProbabilityVector,
    pub p_recovered: ProbabilityVector,
    /// `max |p_recovered - p_true|` once the truth is supplied.
    pub residual: Option<f64>,
}

impl ReconstructionResult {
    pub fn with_truth(mut self, p_true: &ProbabilityVector) -> Self {
        self.residual = Some(self.p_recovered.max_abs_diff(p_true));
        self
    }
}

/// Averages the `d_S - 1` variant distributions and inverts
/// `q_av = C p + (1 - C)(1 - p)/(d_S - 1)`.
pub fn reconstruct_p(
    q_variants: &[ProbabilityVector],
    c_max: f64,
    d_s: usize,
) -> Result<ReconstructionResult> {
    if d_s < 2 {
        return Err(Error::InvalidParameter(format!("d_S = {d_s} < 2")));
    }
    if q_variants.len() != d_s - 1 {
        return Err(Error::WrongVariantCount {
            expected: d_s - 1,
            actual: q_variants.len(),
        });
    }
    if let Some(q) = q_variants.iter().find(|q| q.len() != d_s) {
        return Err(Error::DimensionMismatch {
            expected: d_s,
            actual: q.len(),
        });
    }
    let uniform = 1.0 / d_s as f64;
    if (c_max - uniform).abs() <= 1e-9 {
        return Err(Error::NotInvertible { c_max });
    }
    if !(c_max > uniform && c_max <= 1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "C_max = {c_max} outside (1/d_S, 1]"
        )));
    }
    let n = q_variants.len() as f64;
    let q_av: Vec<f64> = (0..d_s)
        .map(|y| q_variants.iter().map(|q| q.get(y)).sum::<f64>() / n)
        .collect();
    let floor = (1.0 - c_max) / (d_s as f64 - 1.0);
    let p: Vec<f64> = q_av.iter().map(|q| (q - floor) / (c_max - floor)).collect();
    Ok(ReconstructionResult {
        q_av: ProbabilityVector::with_tolerance(q_av, 1e-9, 1e-9)?,
        p_recovered: ProbabilityVector::with_tolerance(p, 1e-9, 1e-9)?,
        residual: None,
    })
}

/// Dense reconstruction protocol: sequential run over the cycled variants of
/// a [`MemoryArray::reconstruction`] memory, then inversion.
pub fn reconstruct_dense(
    rho_s: &DensityOperator,
    mem: &MemoryArray,
) -> Result<ReconstructionResult> {
    let run = run_sequential_local(rho_s, mem)?;
    let c = mem.components[0].c_max();
    let truth = ProbabilityVector::with_tolerance(rho_s.diagonal(), 1e-10, 1e-12)?;
    Ok(reconstruct_p(&run.q, c, mem.d_s)?.with_truth(&truth))
}

/// State of the form `sum_x p_x |x><x| (x)_j A^(j)_x + off`, with the
/// factor layout of each component's blocks.
#[derive(Debug, Clone)]
pub struct IdealBroadcastState {
    pub state: DensityOperator,
    pub component_factors: Vec<Vec<usize>>,
    /// Support projectors `Pi^(j)_x` of the blocks.
    pub projectors: Vec<Vec<CMatrix>>,
}

fn support_projector(m: &CMatrix) -> CMatrix {
    let eig = m.clone().symmetric_eigen();
    let d = m.nrows();
    let mut p = CMatrix::zeros(d, d);
    for (k, &v) in eig.eigenvalues.iter().enumerate() {
        if v > 1e-12 {
            let col = eig.eigenvectors.column(k);
            p += col * col.adjoint();
        }
    }
    p
}

/// `blocks[j][x]` is the normalized state `A^(j)_{x,x}` of component `j`;
/// distinct `x` must have orthogonal supports.
pub fn ideal_broadcasting_state(
    p: &ProbabilityVector,
    blocks: &[Vec<DensityOperator>],
    off: Option<&CMatrix>,
) -> Result<IdealBroadcastState> {
    let d_s = p.len();
    if blocks.is_empty() {
        return Err(Error::InvalidBlocks("no components".into()));
    }
    let mut projectors = Vec::with_capacity(blocks.len());
    for (j, comp) in blocks.iter().enumerate() {
        if comp.len() != d_s {
            return Err(Error::InvalidBlocks(format!(
                "component {j} has {} blocks for {d_s} outcomes",
                comp.len()
            )));
        }
        let fact = comp[0].factorization();
        if comp.iter().any(|b| b.factorization() != fact) {
            return Err(Error::InvalidBlocks(format!(
                "component {j} mixes factorizations"
            )));
        }
        for x in 0..d_s {
            if (comp[x].trace() - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidBlocks(format!(
                    "block ({j},{x}) not normalized"
                )));
            }
            for y in x + 1..d_s {
                let overlap = (comp[x].matrix() * comp[y].matrix()).trace().re;
                if overlap > 1e-12 {
                    return Err(Error::InvalidBlocks(format!(
                        "blocks ({j},{x}) and ({j},{y}) overlap by {overlap:e}"
                    )));
                }
            }
        }
        projectors.push(comp.iter().map(|b| support_projector(b.matrix())).collect());
    }
    let sys = HilbertFactorization::single(d_s)?;
    let mut fact = sys.clone();
    let mut component_factors = Vec::with_capacity(blocks.len());
    for comp in blocks {
        let n = comp[0].factorization().len();
        component_factors.push((fact.len()..fact.len() + n).collect());
        fact = fact.concat(comp[0].factorization());
    }
    let dim = fact.total();
    let mut m = CMatrix::zeros(dim, dim);
    for x in 0..d_s {
        if p.get(x) == 0.0 {
            continue;
        }
        let mut term = DensityOperator::basis_state(x, sys.clone())?;
        for comp in blocks {
            term = term.tensor(&comp[x]);
        }
        m += term.matrix() * crate::qcore::c(p.get(x));
    }
    if let Some(off) = off {
        if off.nrows() != dim || off.ncols() != dim {
            return Err(Error::InvalidBlocks(format!(
                "off-block is {}x{}",
                off.nrows(),
                off.ncols()
            )));
        }
        m += off;
    }
    let state = DensityOperator::new(m, fact).map_err(|e| Error::InvalidBlocks(e.to_string()))?;
    Ok(IdealBroadcastState {
        state,
        component_factors,
        projectors,
    })
}

impl IdealBroadcastState {
    pub fn n_components(&self) -> usize {
        self.component_factors.len()
    }

    /// Reduced state of component `j`.
    pub fn component_state(&self, j: usize) -> Result<DensityOperator> {
        partial_trace(&self.state, &self.component_factors[j])
    }

    /// `q^(j)_x = Tr(rho Pi^(j)_x)`.
    pub fn outcomes(&self, j: usize) -> Result<Vec<f64>> {
        let rho = self.component_state(j)?;
        Ok(self.projectors[j]
            .iter()
            .map(|pi| (pi * rho.matrix()).trace().re)
            .collect())
    }

    /// `max_{j,x} |p_x - q^(j)_x|` with `p` the system diagonal of the state.
    pub fn broadcast_defect(&self, p: &ProbabilityVector) -> Result<f64> {
        let mut worst = 0.0f64;
        for j in 0..self.n_components() {
            for (q, p) in self.outcomes(j)?.iter().zip(p.entries()) {
                worst = worst.max((q - p).abs());
            }
        }
        Ok(worst)
    }
}

/// `I(S : M_j)`.
pub fn objectivity_mutual_info(state: &IdealBroadcastState, component: usize) -> Result<f64> {
    let factors = state
        .component_factors
        .get(component)
        .ok_or(Error::IndexOutOfRange {
            index: component,
            max: state.n_components().saturating_sub(1),
        })?;
    let mut keep = vec![0];
    keep.extend(factors);
    mutual_information(&partial_trace(&state.state, &keep)?, &[0])
}

/// Splits a joint state (system first) into its block-diagonal part and the
/// coherences between system sectors.
pub fn split_off_block(rho_joint: &DensityOperator) -> Result<(DensityOperator, CMatrix)> {
    let block = dephase(rho_joint, 0, &Basis::Computational)?;
    let off = rho_joint.matrix() - block.matrix();
    Ok((block, off))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CmaxRow {
    pub n: usize,
    pub beta_omega: f64,
    pub c_max: f64,
}

/// `C_max` of `n`-qubit memories for each `(beta_omega, n)`, ordered by the
/// inputs (outer loop over `beta_omegas`).
pub fn sweep_cmax_convergence(
    d_s: usize,
    n_range: &[usize],
    beta_omegas: &[f64],
) -> Result<Vec<CmaxRow>> {
    let keys: Vec<(f64, usize)> = beta_omegas
        .iter()
        .flat_map(|&b| n_range.iter().map(move |&n| (b, n)))
        .collect();
    keys.par_iter()
        .map(|&(beta_omega, n)| {
            Ok(CmaxRow {
                n,
                beta_omega,
                c_max: c_max_qubits_analytic_grouped(n, beta_omega, d_s)?,
            })
        })
        .collect()
}
