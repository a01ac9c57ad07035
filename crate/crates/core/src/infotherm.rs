//! Information and thermodynamic bookkeeping of a single system-memory
//! interaction: Holevo quantity, accessible-information bracket, entropy
//! production, spectrum broadcast structure and the information-relation
//! classes of semiclassical broadcasting variants.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interact::{apply, memory_outcomes, outcome_probabilities, ControlledInteraction};
use crate::qcore::{
    c, dephase, mutual_information, partial_trace, shannon_entropy, von_neumann_entropy, Basis,
    CMatrix, DensityOperator, HilbertFactorization, ProbabilityVector, C64,
};
use crate::thermal::{pointer_projectors, EnergyGrouping, GibbsState};

/// Outcomes below this weight carry no conditional state.
pub const OUTCOME_FLOOR: f64 = 1e-14;
/// Tolerance for the information relations of [`classify_table1`].
pub const CLASSIFY_TOL: f64 = 1e-8;
/// Tolerance of both SBS defects.
pub const SBS_TOL: f64 = 1e-9;

/// Labelled states `rho^(x)` with prior `p_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    labels: Vec<usize>,
    probs: ProbabilityVector,
    states: Vec<DensityOperator>,
}

impl Ensemble {
    pub fn new(probs: ProbabilityVector, states: Vec<DensityOperator>) -> Result<Self> {
        let labels = (0..states.len()).collect();
        Self::with_labels(labels, probs, states)
    }

    fn with_labels(
        labels: Vec<usize>,
        probs: ProbabilityVector,
        states: Vec<DensityOperator>,
    ) -> Result<Self> {
        if probs.len() != states.len() || states.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: probs.len(),
                actual: states.len(),
            });
        }
        let d = states[0].dim();
        if let Some(s) = states.iter().find(|s| s.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: s.dim(),
            });
        }
        Ok(Self {
            labels,
            probs,
            states,
        })
    }

    /// Outcome label of each member; skips outcomes dropped for negligible weight.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn probs(&self) -> &ProbabilityVector {
        &self.probs
    }

    pub fn states(&self) -> &[DensityOperator] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn average(&self) -> DensityOperator {
        let d = self.dim();
        let m = self
            .probs
            .entries()
            .iter()
            .zip(&self.states)
            .fold(CMatrix::zeros(d, d), |acc, (&p, s)| acc + s.matrix() * c(p));
        DensityOperator::from_parts_unchecked(m, self.states[0].factorization().clone())
            .expect("members share a dimension")
    }

    /// `max_{x != y} Tr(rho^(x) rho^(y))`; zero iff the members are orthogonal.
    pub fn orthogonality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                let overlap = (self.states[i].matrix() * self.states[j].matrix())
                    .trace()
                    .re;
                worst = worst.max(overlap);
            }
        }
        worst
    }
}

fn renormalized(
    labels: Vec<usize>,
    weights: Vec<f64>,
    states: Vec<DensityOperator>,
) -> Result<Ensemble> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidState("all outcomes below the floor".into()));
    }
    let probs = ProbabilityVector::new(weights.iter().map(|w| w / total).collect())?;
    Ensemble::with_labels(labels, probs, states)
}

/// Splits a joint `S (x) M` state (system first) along `basis_s`:
/// `p_x = <x|rho_S|x>`, `rho^(x) = <x|rho|x> / p_x`.
pub fn conditional_ensemble(rho_joint: &DensityOperator, basis_s: &Basis) -> Result<Ensemble> {
    let fact = rho_joint.factorization();
    if fact.len() < 2 {
        return Err(Error::InvalidFactorization(
            "joint state needs a memory factor".into(),
        ));
    }
    let d_s = fact.dims()[0];
    let d_m = rho_joint.dim() / d_s;
    let mem_fact = fact.select(&(1..fact.len()).collect::<Vec<_>>())?;
    let m = rho_joint.matrix();
    let rotated;
    let m = match basis_s.matrix() {
        None => m,
        Some(b) => {
            if b.nrows() != d_s {
                return Err(Error::DimensionMismatch {
                    expected: d_s,
                    actual: b.nrows(),
                });
            }
            let w = b.adjoint().kronecker(&CMatrix::identity(d_m, d_m));
            rotated = &w * m * w.adjoint();
            &rotated
        }
    };
    let (mut labels, mut weights, mut states) = (Vec::new(), Vec::new(), Vec::new());
    for x in 0..d_s {
        let block = m.view((x * d_m, x * d_m), (d_m, d_m)).into_owned();
        let p = block.trace().re;
        if p < OUTCOME_FLOOR {
            if p > 0.0 {
                log::warn!("dropping outcome {x} with weight {p:e}");
            }
            continue;
        }
        let block = block / c(p);
        let block = (&block + block.adjoint()) * c(0.5);
        labels.push(x);
        weights.push(p);
        states.push(DensityOperator::from_parts_unchecked(
            block,
            mem_fact.clone(),
        )?);
    }
    renormalized(labels, weights, states)
}

/// `rho^(x) = Tr_S U(|x><x| (x) sigma_M)U^dagger` with prior `p`: what the
/// memory records about input label `x`.
pub fn encoding_ensemble(
    u: &ControlledInteraction,
    p: &ProbabilityVector,
    sigma_m: &DensityOperator,
) -> Result<Ensemble> {
    if p.len() != u.d_s() {
        return Err(Error::DimensionMismatch {
            expected: u.d_s(),
            actual: p.len(),
        });
    }
    let fact = HilbertFactorization::single(u.d_s())?;
    let (mut labels, mut weights, mut states) = (Vec::new(), Vec::new(), Vec::new());
    for (x, &px) in p.entries().iter().enumerate() {
        if px < OUTCOME_FLOOR {
            continue;
        }
        let out = apply(u, &DensityOperator::basis_state(x, fact.clone())?, sigma_m)?;
        let n = out.factorization().len();
        labels.push(x);
        weights.push(px);
        states.push(partial_trace(&out, &(1..n).collect::<Vec<_>>())?);
    }
    renormalized(labels, weights, states)
}

/// `chi = S(sum p_x rho^(x)) - sum p_x S(rho^(x))`.
pub fn holevo_chi(xi: &Ensemble) -> f64 {
    let avg = von_neumann_entropy(&xi.average());
    let cond: f64 = xi
        .probs
        .entries()
        .iter()
        .zip(&xi.states)
        .map(|(p, s)| p * von_neumann_entropy(s))
        .sum();
    avg - cond
}

/// Mutual information of a joint distribution `joint[x][y]`.
pub fn classical_mutual_information(joint: &[Vec<f64>]) -> f64 {
    let h = |v: &[f64]| -> f64 { v.iter().filter(|&&q| q > 0.0).map(|&q| -q * q.ln()).sum() };
    let px: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let ny = joint.first().map_or(0, Vec::len);
    let py: Vec<f64> = (0..ny).map(|y| joint.iter().map(|r| r[y]).sum()).collect();
    let flat: Vec<f64> = joint.iter().flatten().copied().collect();
    (h(&px) + h(&py) - h(&flat)).max(0.0)
}

/// Bounds on the accessible information: `lower` from explicit measurements,
/// `upper = chi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccessibleInfo {
    pub lower: f64,
    pub upper: f64,
}

/// Information gained by measuring the POVM `effects` on the ensemble.
pub fn measurement_information(xi: &Ensemble, effects: &[CMatrix]) -> f64 {
    let joint: Vec<Vec<f64>> = xi
        .probs
        .entries()
        .iter()
        .zip(&xi.states)
        .map(|(&p, s)| {
            effects
                .iter()
                .map(|e| (p * (e * s.matrix()).trace().re).max(0.0))
                .collect()
        })
        .collect();
    classical_mutual_information(&joint)
}

/// Pretty-good measurement `E_x = rho^{-1/2} p_x rho^(x) rho^{-1/2}` on the
/// support of the average state.
pub fn pretty_good_measurement(xi: &Ensemble) -> Vec<CMatrix> {
    let eig = xi.average().matrix().clone().symmetric_eigen();
    let d = xi.dim();
    let inv_sqrt = DMatrix::<C64>::from_diagonal(&nalgebra::DVector::from_iterator(
        d,
        eig.eigenvalues
            .iter()
            .map(|&v| if v > 1e-12 { c(1.0 / v.sqrt()) } else { c(0.0) }),
    ));
    let root = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.adjoint();
    xi.probs
        .entries()
        .iter()
        .zip(&xi.states)
        .map(|(&p, s)| &root * s.matrix() * c(p) * &root)
        .collect()
}

fn bloch(rho: &DensityOperator) -> [f64; 3] {
    let m = rho.matrix();
    [
        2.0 * m[(0, 1)].re,
        -2.0 * m[(0, 1)].im,
        m[(0, 0)].re - m[(1, 1)].re,
    ]
}

fn projective_qubit_information(xi: &Ensemble, blochs: &[[f64; 3]], theta: f64, phi: f64) -> f64 {
    let n = [
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    ];
    let joint: Vec<Vec<f64>> = xi
        .probs
        .entries()
        .iter()
        .zip(blochs)
        .map(|(&p, r)| {
            let dot = n[0] * r[0] + n[1] * r[1] + n[2] * r[2];
            vec![p * (1.0 + dot) / 2.0, p * (1.0 - dot) / 2.0]
        })
        .collect();
    classical_mutual_information(&joint)
}

/// Best two-outcome projective measurement on a qubit memory: 720 directions
/// on a Fibonacci sphere, then pattern search from the best few to step `1e-6`.
fn best_qubit_projective(xi: &Ensemble) -> f64 {
    const GRID: usize = 720;
    let blochs: Vec<[f64; 3]> = xi.states.iter().map(bloch).collect();
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut grid: Vec<(f64, f64, f64)> = (0..GRID)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / GRID as f64;
            let (theta, phi) = (z.acos(), golden * k as f64);
            (
                projective_qubit_information(xi, &blochs, theta, phi),
                theta,
                phi,
            )
        })
        .collect();
    grid.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = grid[0].0;
    for &(start, t0, p0) in grid.iter().take(4) {
        let (mut val, mut t, mut p) = (start, t0, p0);
        let mut step = 0.1;
        while step > 1e-6 {
            let mut moved = false;
            for (dt, dp) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
                let v = projective_qubit_information(xi, &blochs, t + dt, p + dp);
                if v > val {
                    (val, t, p) = (v, t + dt, p + dp);
                    moved = true;
                }
            }
            if !moved {
                step /= 2.0;
            }
        }
        best = best.max(val);
    }
    best
}

pub fn accessible_info_bracket(xi: &Ensemble) -> AccessibleInfo {
    let upper = holevo_chi(xi).max(0.0);
    if xi.len() < 2 {
        return AccessibleInfo { lower: 0.0, upper };
    }
    let mut lower = measurement_information(xi, &pretty_good_measurement(xi));
    if xi.dim() == 2 {
        lower = lower.max(best_qubit_projective(xi));
    }
    AccessibleInfo {
        lower: lower.min(upper),
        upper,
    }
}

/// Entropy production and its decompositions, all in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermoReport {
    pub beta: f64,
    /// `<Sigma> = beta dQ + dS`.
    pub sigma_prod: f64,
    pub beta_delta_q: f64,
    pub delta_s_system: f64,
    pub delta_e_m: f64,
    pub delta_s_m: f64,
    /// `beta dE_M - dS_M`.
    pub beta_delta_f: f64,
    pub mutual_i: f64,
    pub rel_entropy_d: f64,
    pub chi: f64,
    pub h_x: f64,
}

impl ThermoReport {
    /// `|<Sigma> - I - D|`.
    pub fn reeb_wolf_residual(&self) -> f64 {
        (self.sigma_prod - self.mutual_i - self.rel_entropy_d).abs()
    }
}

/// Report for `rho_S (x) tau_M -> U(rho_S (x) tau_M)U^dagger`. `chi` uses the
/// ensemble of the final state dephased on the system in `basis_s`.
pub fn thermo_report(
    rho_s: &DensityOperator,
    tau_m: &GibbsState,
    u: &ControlledInteraction,
    basis_s: &Basis,
) -> Result<ThermoReport> {
    let tau = tau_m.state();
    let out = apply(u, rho_s, &tau)?;
    thermo_report_from_final(rho_s, tau_m, &out, basis_s)
}

/// As [`thermo_report`] for an already evolved joint state (system first).
pub fn thermo_report_from_final(
    rho_s: &DensityOperator,
    tau_m: &GibbsState,
    out: &DensityOperator,
    basis_s: &Basis,
) -> Result<ThermoReport> {
    let n = out.factorization().len();
    let memory: Vec<usize> = (1..n).collect();
    let final_s = partial_trace(out, &[0])?;
    let final_m = partial_trace(out, &memory)?;
    if final_m.dim() != tau_m.dim() {
        return Err(Error::DimensionMismatch {
            expected: tau_m.dim(),
            actual: final_m.dim(),
        });
    }
    let beta = tau_m.beta();
    let h = tau_m.hamiltonian();
    let delta_e_m = h.expectation(&final_m) - h.expectation(&tau_m.state());
    let delta_s_m = von_neumann_entropy(&final_m) - tau_m.entropy();
    let delta_s_system = von_neumann_entropy(&final_s) - von_neumann_entropy(rho_s);
    let beta_delta_q = beta * delta_e_m;
    let dephased = dephase(out, 0, basis_s)?;
    let chi = holevo_chi(&conditional_ensemble(&dephased, &Basis::Computational)?);
    let h_x = shannon_entropy(&ProbabilityVector::with_tolerance(
        outcome_probabilities(rho_s, basis_s)?,
        1e-10,
        1e-12,
    )?);
    Ok(ThermoReport {
        beta,
        sigma_prod: beta_delta_q + delta_s_system,
        beta_delta_q,
        delta_s_system,
        delta_e_m,
        delta_s_m,
        beta_delta_f: beta_delta_q - delta_s_m,
        mutual_i: mutual_information(out, &[0])?,
        rel_entropy_d: tau_m.relative_entropy_from(&final_m)?,
        chi,
        h_x,
    })
}

/// `<Sigma> - chi - beta dF_M`; nonnegative for thermal memories.
pub fn holevo_landauer_gap(report: &ThermoReport) -> f64 {
    report.sigma_prod - report.chi - report.beta_delta_f
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SbsVerdict {
    pub is_sbs: bool,
    /// Max-abs entry of the part of the state off-diagonal in the system basis.
    pub off_diagonal_norm: f64,
    /// `max_{x != y} Tr(rho^(x) rho^(y))` of the conditional memory states.
    pub conditional_orthogonality_defect: f64,
}

pub fn sbs_test(rho_joint: &DensityOperator, basis_s: &Basis) -> Result<SbsVerdict> {
    let off = off_diagonal_part(rho_joint, basis_s)?;
    let off_diagonal_norm = off.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let defect = conditional_ensemble(rho_joint, basis_s)?.orthogonality_defect();
    Ok(SbsVerdict {
        is_sbs: off_diagonal_norm <= SBS_TOL && defect <= SBS_TOL,
        off_diagonal_norm,
        conditional_orthogonality_defect: defect,
    })
}

/// `rho - (dephased on the system)`: the coherences between system sectors.
pub fn off_diagonal_part(rho_joint: &DensityOperator, basis_s: &Basis) -> Result<CMatrix> {
    Ok(rho_joint.matrix() - dephase(rho_joint, 0, basis_s)?.matrix())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Table1Variant {
    Sbs,
    Objectivity,
    Ideal,
    GlobalUnbiased,
    LocalNoninvasive,
    None,
}

/// Quantities entering the information relations. `s_system`, `s_system_diag`
/// refer to the final system state; `s_initial` to the initial one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Table1Evidence {
    pub i_acc: AccessibleInfo,
    pub chi: f64,
    pub h_x: f64,
    pub s_system_diag: f64,
    pub s_system: f64,
    pub s_initial: f64,
    pub n_components: usize,
    /// `max |p_x - q_x|` over memory components.
    pub bias_defect: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Table1Class {
    pub variant: Table1Variant,
    pub evidence: Table1Evidence,
}

/// First matching row, top to bottom: SBS, objectivity, ideal, global unbiased,
/// local non-invasive, none.
pub fn classify_table1(e: &Table1Evidence) -> Table1Class {
    let tol = CLASSIFY_TOL;
    let eq = |a: f64, b: f64| (a - b).abs() <= tol;
    let full_info = e.i_acc.lower >= e.chi - tol && eq(e.chi, e.h_x);
    let variant = if full_info && eq(e.h_x, e.s_system) && eq(e.s_system, e.s_initial) {
        Table1Variant::Sbs
    } else if full_info && eq(e.h_x, e.s_system_diag) {
        Table1Variant::Objectivity
    } else if full_info && e.h_x <= e.s_system_diag + tol && e.bias_defect <= tol {
        Table1Variant::Ideal
    } else if full_info && e.h_x <= e.s_system_diag + tol && e.n_components == 1 {
        Table1Variant::GlobalUnbiased
    } else if e.chi <= e.h_x + tol && eq(e.h_x, e.s_system_diag) {
        Table1Variant::LocalNoninvasive
    } else {
        Table1Variant::None
    };
    Table1Class {
        variant,
        evidence: *e,
    }
}

/// Evidence for one interaction with one memory, in the computational basis.
pub fn table1_evidence(
    u: &ControlledInteraction,
    rho_s: &DensityOperator,
    sigma_m: &DensityOperator,
    g: &EnergyGrouping,
) -> Result<Table1Evidence> {
    let p = ProbabilityVector::with_tolerance(rho_s.diagonal(), 1e-10, 1e-12)?;
    let xi = encoding_ensemble(u, &p, sigma_m)?;
    let out = apply(u, rho_s, sigma_m)?;
    let final_s = partial_trace(&out, &[0])?;
    let q = memory_outcomes(&out, &pointer_projectors(g))?;
    let bias_defect = p
        .entries()
        .iter()
        .zip(&q)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(Table1Evidence {
        i_acc: accessible_info_bracket(&xi),
        chi: holevo_chi(&xi),
        h_x: shannon_entropy(&p),
        s_system_diag: entropy_of_diagonal(&final_s),
        s_system: von_neumann_entropy(&final_s),
        s_initial: von_neumann_entropy(rho_s),
        n_components: 1,
        bias_defect,
    })
}

/// `S` of the completely dephased state.
pub fn entropy_of_diagonal(rho: &DensityOperator) -> f64 {
    rho.diagonal()
        .iter()
        .filter(|&&v| v > crate::qcore::EIGEN_FLOOR)
        .map(|&v| -v * v.ln())
        .sum()
}
