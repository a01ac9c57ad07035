//! Memory Hamiltonians, Gibbs states and the grouping of energy levels into
//! outcome sectors.
//!
//! A memory of dimension `d_M` measured against a system of dimension `d_S`
//! has its levels sorted by `(energy, index)` and cut into `d_S` contiguous
//! groups of `r = d_M / d_S` levels. Group 0 then carries the `r` largest
//! Boltzmann weights, and `C_max` is their sum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{von_neumann_entropy, CMatrix, DensityOperator, HilbertFactorization};

/// Diagonal memory Hamiltonian; level `i` is the computational basis state `|i>`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemoryHamiltonian {
    energies: Vec<f64>,
    /// Unit in which `energies` are quoted (the `omega` of a qubit chain).
    energy_scale: f64,
    factorization: HilbertFactorization,
}

/// JSON form: `{"type":"qubit_chain","n":3,"omega":1.0}` or
/// `{"type":"ladder","levels":3,"omega":1.0}` or `{"type":"explicit","energies":[0.0,1.0,2.0]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum HamiltonianSpec {
    QubitChain { n: usize, omega: f64 },
    Ladder { levels: usize, omega: f64 },
    Explicit { energies: Vec<f64> },
}

impl MemoryHamiltonian {
    pub fn explicit(energies: Vec<f64>) -> Result<Self> {
        let factorization = HilbertFactorization::single(energies.len())?;
        Self::with_factorization(energies, 1.0, factorization)
    }

    pub fn with_factorization(
        energies: Vec<f64>,
        energy_scale: f64,
        factorization: HilbertFactorization,
    ) -> Result<Self> {
        if let Some(e) = energies.iter().find(|e| !e.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite energy {e}")));
        }
        if !(energy_scale.is_finite() && energy_scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "energy scale {energy_scale}"
            )));
        }
        if energies.len() != factorization.total() {
            return Err(Error::DimensionMismatch {
                expected: factorization.total(),
                actual: energies.len(),
            });
        }
        Ok(Self {
            energies,
            energy_scale,
            factorization,
        })
    }

    /// `n` qubits with `H = omega |1><1|` each; level energy is `omega * popcount`.
    pub fn qubit_chain(n: usize, omega: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("qubit chain needs n >= 1".into()));
        }
        if n > 24 {
            return Err(Error::InvalidParameter(format!(
                "{n} qubits is beyond the dense representation"
            )));
        }
        let energies = (0..1usize << n)
            .map(|i| omega * i.count_ones() as f64)
            .collect();
        Self::with_factorization(energies, omega, HilbertFactorization::new(vec![2; n])?)
    }

    /// Equally spaced ladder `0, omega, ..., (levels-1) omega` on a single factor.
    pub fn ladder(levels: usize, omega: f64) -> Result<Self> {
        let energies = (0..levels).map(|m| omega * m as f64).collect();
        Self::with_factorization(energies, omega, HilbertFactorization::single(levels)?)
    }

    pub fn from_spec(spec: &HamiltonianSpec) -> Result<Self> {
        match spec {
            HamiltonianSpec::QubitChain { n, omega } => Self::qubit_chain(*n, *omega),
            HamiltonianSpec::Ladder { levels, omega } => Self::ladder(*levels, *omega),
            HamiltonianSpec::Explicit { energies } => Self::explicit(energies.clone()),
        }
    }

    /// Non-interacting sum over several memories on the tensor-product space.
    pub fn compose(parts: &[MemoryHamiltonian]) -> Result<Self> {
        let (first, rest) = parts
            .split_first()
            .ok_or_else(|| Error::InvalidParameter("no Hamiltonians to compose".into()))?;
        let mut energies = first.energies.clone();
        let mut factorization = first.factorization.clone();
        for h in rest {
            energies = energies
                .iter()
                .flat_map(|&a| h.energies.iter().map(move |&b| a + b))
                .collect();
            factorization = factorization.concat(&h.factorization);
        }
        Self::with_factorization(energies, first.energy_scale, factorization)
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn eigenlabels(&self) -> std::ops::Range<usize> {
        0..self.energies.len()
    }

    pub fn energy_scale(&self) -> f64 {
        self.energy_scale
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn factorization(&self) -> &HilbertFactorization {
        &self.factorization
    }

    /// `Tr(H rho)`.
    pub fn expectation(&self, rho: &DensityOperator) -> f64 {
        rho.diagonal()
            .iter()
            .zip(&self.energies)
            .map(|(p, e)| p * e)
            .sum()
    }
}

/// `exp(-beta H) / Z`, stored through its log-weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsState {
    hamiltonian: MemoryHamiltonian,
    beta: f64,
    log_z: f64,
    log_weights: Vec<f64>,
}

/// Thermal state at inverse temperature `beta` (in inverse energy units).
pub fn gibbs(h: &MemoryHamiltonian, beta: f64) -> Result<GibbsState> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidParameter(format!("beta = {beta}")));
    }
    // shift by the ground energy so large offsets do not cost precision
    let e0 = h.energies.iter().copied().fold(f64::INFINITY, f64::min);
    let exponents: Vec<f64> = h.energies.iter().map(|e| -beta * (e - e0)).collect();
    let log_z_shifted = log_sum_exp(&exponents);
    let log_z = log_z_shifted - beta * e0;
    Ok(GibbsState {
        hamiltonian: h.clone(),
        beta,
        log_z,
        log_weights: exponents.iter().map(|x| x - log_z_shifted).collect(),
    })
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

impl GibbsState {
    pub fn hamiltonian(&self) -> &MemoryHamiltonian {
        &self.hamiltonian
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|l| l.exp()).collect()
    }

    pub fn dim(&self) -> usize {
        self.log_weights.len()
    }

    /// Dense diagonal density operator on the Hamiltonian's factorization.
    pub fn state(&self) -> DensityOperator {
        DensityOperator::from_diagonal(&self.weights(), self.hamiltonian.factorization.clone())
            .expect("Gibbs weights are a valid probability distribution")
    }

    pub fn entropy(&self) -> f64 {
        self.weights()
            .iter()
            .zip(&self.log_weights)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, l)| -w * l)
            .sum()
    }

    /// `D(rho || tau)` from the exact logarithm `log tau = -beta H - log Z`.
    pub fn relative_entropy_from(&self, rho: &DensityOperator) -> Result<f64> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: rho.dim(),
            });
        }
        let cross: f64 = rho
            .diagonal()
            .iter()
            .zip(&self.log_weights)
            .map(|(p, l)| p * l)
            .sum();
        Ok(-von_neumann_entropy(rho) - cross)
    }
}

/// Partition of memory levels into `d_S` outcome sectors of `r` levels each.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyGrouping {
    d_s: usize,
    r: usize,
    /// `groups[y][l]` is the memory level holding sector `y`, slot `l`.
    groups: Vec<Vec<usize>>,
    group_energies: Vec<Vec<f64>>,
    /// Inverse map: level -> (y, l).
    #[serde(skip)]
    position: Vec<(usize, usize)>,
}

pub fn group_energies(h: &MemoryHamiltonian, d_s: usize) -> Result<EnergyGrouping> {
    let d_m = h.dim();
    if d_s < 2 {
        return Err(Error::InvalidParameter(format!("d_S = {d_s} < 2")));
    }
    if !d_m.is_multiple_of(d_s) {
        return Err(Error::DimensionMismatch {
            expected: d_s * (d_m / d_s + 1),
            actual: d_m,
        });
    }
    let r = d_m / d_s;
    let mut order: Vec<usize> = (0..d_m).collect();
    order.sort_by(|&a, &b| h.energies[a].total_cmp(&h.energies[b]).then(a.cmp(&b)));
    let groups: Vec<Vec<usize>> = order.chunks(r).map(<[usize]>::to_vec).collect();
    let group_energies = groups
        .iter()
        .map(|g| g.iter().map(|&i| h.energies[i]).collect())
        .collect();
    let mut position = vec![(0, 0); d_m];
    for (y, g) in groups.iter().enumerate() {
        for (l, &level) in g.iter().enumerate() {
            position[level] = (y, l);
        }
    }
    Ok(EnergyGrouping {
        d_s,
        r,
        groups,
        group_energies,
        position,
    })
}

impl EnergyGrouping {
    pub fn d_s(&self) -> usize {
        self.d_s
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn d_m(&self) -> usize {
        self.d_s * self.r
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group(&self, y: usize) -> &[usize] {
        &self.groups[y]
    }

    pub fn group_energies(&self) -> &[Vec<f64>] {
        &self.group_energies
    }

    /// Sector and slot of a memory level.
    pub fn position(&self, level: usize) -> (usize, usize) {
        self.position[level]
    }

    /// Total weight of each sector in a diagonal memory distribution.
    pub fn sector_weights(&self, diag: &[f64]) -> Vec<f64> {
        self.groups
            .iter()
            .map(|g| g.iter().map(|&i| diag[i]).sum())
            .collect()
    }
}

/// Rank-`r` orthogonal projectors `Pi_x` onto the sectors; diagonal in the energy basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PointerProjectors {
    d_m: usize,
    supports: Vec<Vec<usize>>,
}

pub fn pointer_projectors(g: &EnergyGrouping) -> PointerProjectors {
    PointerProjectors {
        d_m: g.d_m(),
        supports: g.groups.clone(),
    }
}

impl PointerProjectors {
    pub fn len(&self) -> usize {
        self.supports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.supports.is_empty()
    }

    pub fn support(&self, x: usize) -> &[usize] {
        &self.supports[x]
    }

    pub fn rank(&self, x: usize) -> usize {
        self.supports[x].len()
    }

    pub fn matrix(&self, x: usize) -> CMatrix {
        let mut m = CMatrix::zeros(self.d_m, self.d_m);
        for &i in &self.supports[x] {
            m[(i, i)] = crate::qcore::c(1.0);
        }
        m
    }

    /// `Tr(Pi_x rho)` for every `x`.
    pub fn probabilities(&self, rho: &DensityOperator) -> Vec<f64> {
        let diag = rho.diagonal();
        self.supports
            .iter()
            .map(|s| s.iter().map(|&i| diag[i]).sum())
            .collect()
    }
}

/// Diagonal block `A_{x,y}`: a weighted sum of projectors onto energy eigenvectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ABlock {
    pub x: usize,
    pub y: usize,
    /// `(level, weight)` pairs; the block is `sum weight |level><level|`.
    pub entries: Vec<(usize, f64)>,
    pub trace: f64,
}

impl ABlock {
    pub fn matrix(&self, d_m: usize) -> CMatrix {
        let mut m = CMatrix::zeros(d_m, d_m);
        for &(i, w) in &self.entries {
            m[(i, i)] = crate::qcore::c(w);
        }
        m
    }
}

fn check_same_memory(g: &EnergyGrouping, tau: &GibbsState) -> Result<()> {
    if g.d_m() != tau.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.d_m(),
            actual: tau.dim(),
        });
    }
    Ok(())
}

/// `A_{0,y}`: the part of `tau` living on sector `y`, so that `sum_y A_{0,y} = tau`.
pub fn a_blocks(g: &EnergyGrouping, tau: &GibbsState) -> Result<Vec<ABlock>> {
    a_blocks_row(g, tau, 0)
}

/// Row `x` of the block table, `A_{x, x+y} = V_x A_{0,y} V_x^dagger`: the
/// group-`y` Boltzmann weights placed on the eigenvectors of sector `x+y`.
pub fn a_blocks_row(g: &EnergyGrouping, tau: &GibbsState, x: usize) -> Result<Vec<ABlock>> {
    check_same_memory(g, tau)?;
    if x >= g.d_s {
        return Err(Error::IndexOutOfRange {
            index: x,
            max: g.d_s - 1,
        });
    }
    let w = tau.weights();
    Ok((0..g.d_s)
        .map(|y| {
            let target = (x + y) % g.d_s;
            let entries: Vec<(usize, f64)> = g.groups[y]
                .iter()
                .zip(&g.groups[target])
                .map(|(&src, &dst)| (dst, w[src]))
                .collect();
            let trace = entries.iter().map(|e| e.1).sum();
            ABlock {
                x,
                y: target,
                entries,
                trace,
            }
        })
        .collect())
}

/// Maximal faithfulness: total Boltzmann weight of sector 0.
pub fn c_max(g: &EnergyGrouping, tau: &GibbsState) -> Result<f64> {
    check_same_memory(g, tau)?;
    let lw = tau.log_weights();
    Ok(g.groups[0].iter().map(|&i| lw[i].exp()).sum())
}

/// `C_max` of an `n`-qubit memory (`H = omega |1><1|` per qubit) with `d_S = 2`,
/// evaluated over Hamming-weight classes in log space.
pub fn c_max_qubits_analytic(n: usize, beta_omega: f64) -> f64 {
    c_max_qubits_analytic_grouped(n, beta_omega, 2).expect("d_S = 2 divides 2^n for every n >= 1")
}

/// Generalization to any `d_S` dividing `2^n`: sums the `2^n / d_S` largest
/// weights, splitting the last Hamming class when it straddles the boundary.
pub fn c_max_qubits_analytic_grouped(n: usize, beta_omega: f64, d_s: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("n >= 1 required".into()));
    }
    if !beta_omega.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "beta*omega = {beta_omega}"
        )));
    }
    if d_s < 2 || !d_s.is_power_of_two() || d_s.trailing_zeros() as usize > n {
        return Err(Error::DimensionMismatch {
            expected: 1 << n.min(60),
            actual: d_s,
        });
    }
    let ln_binom = log_binomials(n);
    // log Z^n = n log(1 + e^{-beta omega})
    let log_z = n as f64 * log1p_exp(-beta_omega);
    // heaviest classes first
    let classes: Vec<usize> = if beta_omega >= 0.0 {
        (0..=n).collect()
    } else {
        (0..=n).rev().collect()
    };
    let log_r = (n as f64 - d_s.trailing_zeros() as f64) * std::f64::consts::LN_2;
    let r = log_r.exp();
    let mut taken = 0.0f64;
    let mut terms = Vec::new();
    for m in classes {
        let count = ln_binom[m].exp();
        let remaining = r - taken;
        if remaining <= 0.0 {
            break;
        }
        let log_level = -(m as f64) * beta_omega - log_z;
        if count <= remaining * (1.0 + 1e-15) {
            terms.push(ln_binom[m] + log_level);
            taken += count;
        } else {
            terms.push(remaining.ln() + log_level);
            break;
        }
    }
    Ok(log_sum_exp(&terms).exp().min(1.0))
}

/// `ln C(n, m)` for `m = 0..=n`.
fn log_binomials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0f64;
    out.push(acc);
    for m in 0..n {
        acc += ((n - m) as f64).ln() - ((m + 1) as f64).ln();
        out.push(acc);
    }
    out
}

/// `ln(1 + e^x)` without overflow.
fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const G1: f64 = 0.731_058_578_630_004_9; // 1/(1+e^-1)

    #[test]
    fn qubit_chain_levels() {
        let h = MemoryHamiltonian::qubit_chain(1, 1.5).unwrap();
        assert_eq!(h.energies(), &[0.0, 1.5]);
        let h = MemoryHamiltonian::qubit_chain(2, 1.0).unwrap();
        assert_eq!(h.energies(), &[0.0, 1.0, 1.0, 2.0]);
        let h = MemoryHamiltonian::qubit_chain(3, 1.0).unwrap();
        let mut counts = [0usize; 4];
        for e in h.energies() {
            counts[*e as usize] += 1;
        }
        assert_eq!(counts, [1, 3, 3, 1]);
        assert_eq!(h.factorization().dims(), &[2, 2, 2]);
        assert!(MemoryHamiltonian::qubit_chain(0, 1.0).is_err());
    }

    #[test]
    fn explicit_hamiltonian_rejects_non_finite() {
        assert!(MemoryHamiltonian::explicit(vec![0.0, f64::NAN]).is_err());
        assert!(MemoryHamiltonian::explicit(vec![0.0]).is_err());
    }

    #[test]
    fn hamiltonian_spec_json() {
        let spec: HamiltonianSpec =
            serde_json::from_str(r#"{"type":"qubit_chain","n":2,"omega":0.5}"#).unwrap();
        assert_eq!(spec, HamiltonianSpec::QubitChain { n: 2, omega: 0.5 });
        let h = MemoryHamiltonian::from_spec(&spec).unwrap();
        assert_eq!(h.energies(), &[0.0, 0.5, 0.5, 1.0]);
        let spec: HamiltonianSpec =
            serde_json::from_str(r#"{"type":"explicit","energies":[0.0,2.0,1.0]}"#).unwrap();
        assert_eq!(MemoryHamiltonian::from_spec(&spec).unwrap().dim(), 3);
        let spec: HamiltonianSpec =
            serde_json::from_str(r#"{"type":"ladder","levels":3,"omega":2.0}"#).unwrap();
        assert_eq!(
            MemoryHamiltonian::from_spec(&spec).unwrap().energies(),
            &[0.0, 2.0, 4.0]
        );
        assert!(serde_json::from_str::<HamiltonianSpec>(
            r#"{"type":"explicit","energies":[0.0],"extra":1}"#
        )
        .is_err());
    }

    #[test]
    fn gibbs_examples() {
        let h = MemoryHamiltonian::qubit_chain(2, 1.0).unwrap();
        let t = gibbs(&h, 0.0).unwrap();
        for w in t.weights() {
            assert_abs_diff_eq!(w, 0.25, epsilon = 1e-15);
        }

        let q = MemoryHamiltonian::qubit_chain(1, 1.0).unwrap();
        let t = gibbs(&q, 1.0).unwrap();
        assert_abs_diff_eq!(t.weights()[0], G1, epsilon = 1e-15);
        assert_abs_diff_eq!(t.weights()[1], 1.0 - G1, epsilon = 1e-15);

        let t = gibbs(&q, 50.0).unwrap();
        assert_abs_diff_eq!(t.weights()[0], 1.0, epsilon = 1e-12);
        assert!(t.weights()[1] > 0.0, "full rank at finite beta");

        assert!(gibbs(&q, -1.0).is_err());
        assert!(gibbs(&q, f64::INFINITY).is_err());
    }

    #[test]
    fn gibbs_weights_are_boltzmann_ratios() {
        let h = MemoryHamiltonian::explicit(vec![0.0, 0.3, 1.7, 2.2, 5.0]).unwrap();
        let t = gibbs(&h, 1.3).unwrap();
        let w = t.weights();
        for i in 1..w.len() {
            let ratio = w[i] / w[0];
            let expected = (-1.3 * h.energies()[i]).exp();
            assert!(((ratio - expected) / expected).abs() < 1e-12);
        }
        t.state().validate().unwrap();
    }

    #[test]
    fn gibbs_is_stable_for_large_spectra() {
        let h = MemoryHamiltonian::explicit(vec![1000.0, 1001.0]).unwrap();
        let t = gibbs(&h, 3.0).unwrap();
        assert_abs_diff_eq!(
            t.weights()[0],
            1.0 / (1.0 + (-3.0f64).exp()),
            epsilon = 1e-15
        );
    }

    #[test]
    fn grouping_examples() {
        let g = group_energies(&MemoryHamiltonian::qubit_chain(1, 1.0).unwrap(), 2).unwrap();
        assert_eq!(g.groups(), &[vec![0], vec![1]]);
        assert_eq!(g.group_energies(), &[vec![0.0], vec![1.0]]);

        let h3 = MemoryHamiltonian::qubit_chain(3, 1.0).unwrap();
        let g = group_energies(&h3, 2).unwrap();
        // the m = 0 level and the three m = 1 levels
        assert_eq!(g.group(0), &[0, 1, 2, 4]);
        assert_eq!(g.group(1), &[3, 5, 6, 7]);
        assert_eq!(g.position(4), (0, 3));

        let flat = MemoryHamiltonian::explicit(vec![0.0; 4]).unwrap();
        let g = group_energies(&flat, 2).unwrap();
        assert_eq!(g.groups(), &[vec![0, 1], vec![2, 3]]);

        assert!(matches!(
            group_energies(&h3, 3),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn projector_examples() {
        let h = MemoryHamiltonian::explicit(vec![0.0, 2.0, 1.0]).unwrap();
        let p = pointer_projectors(&group_energies(&h, 3).unwrap());
        assert_eq!(p.support(0), &[0]);
        assert_eq!(p.support(1), &[2]);

        let p = pointer_projectors(
            &group_energies(&MemoryHamiltonian::qubit_chain(1, 1.0).unwrap(), 2).unwrap(),
        );
        assert_eq!(p.matrix(0)[(0, 0)].re, 1.0);
        assert_eq!(p.matrix(1)[(1, 1)].re, 1.0);

        let p = pointer_projectors(
            &group_energies(&MemoryHamiltonian::qubit_chain(3, 1.0).unwrap(), 2).unwrap(),
        );
        let (p0, p1) = (p.matrix(0), p.matrix(1));
        assert_eq!(p0.trace().re, 4.0);
        assert_eq!(&p0 * &p0, p0);
        assert_eq!((&p0 * &p1).iter().map(|z| z.norm()).sum::<f64>(), 0.0);
        assert_eq!(&p0 + &p1, CMatrix::identity(8, 8));
    }

    #[test]
    fn a_block_examples() {
        let h = MemoryHamiltonian::qubit_chain(1, 1.0).unwrap();
        let g = group_energies(&h, 2).unwrap();
        let blocks = a_blocks(&g, &gibbs(&h, 1.0).unwrap()).unwrap();
        assert_eq!(blocks[0].entries.len(), 1);
        assert_eq!(blocks[0].entries[0].0, 0);
        assert_abs_diff_eq!(blocks[0].entries[0].1, G1, epsilon = 1e-15);
        assert_eq!(blocks[1].entries[0].0, 1);
        assert_abs_diff_eq!(blocks[1].trace, 1.0 - G1, epsilon = 1e-15);

        let h = MemoryHamiltonian::qubit_chain(2, 1.0).unwrap();
        let g = group_energies(&h, 2).unwrap();
        let blocks = a_blocks(&g, &gibbs(&h, 0.0).unwrap()).unwrap();
        for b in &blocks {
            assert_abs_diff_eq!(b.trace, 0.5, epsilon = 1e-15);
        }
        let total: f64 = blocks.iter().map(|b| b.trace).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn block_rows_satisfy_trace_relations() {
        let h = MemoryHamiltonian::explicit(vec![0.0, 0.4, 0.9, 1.1, 1.5, 2.0]).unwrap();
        let tau = gibbs(&h, 0.8).unwrap();
        let g = group_energies(&h, 3).unwrap();
        let cm = c_max(&g, &tau).unwrap();
        for x in 0..3 {
            let row = a_blocks_row(&g, &tau, x).unwrap();
            let diag: f64 = row.iter().filter(|b| b.y == x).map(|b| b.trace).sum();
            let off: f64 = row.iter().filter(|b| b.y != x).map(|b| b.trace).sum();
            assert_abs_diff_eq!(diag, cm, epsilon = 1e-12);
            assert_abs_diff_eq!(off, 1.0 - cm, epsilon = 1e-12);
            for b in &row {
                assert!(b.entries.iter().all(|&(lvl, _)| g.position(lvl).0 == b.y));
            }
        }
        assert!(a_blocks_row(&g, &tau, 3).is_err());
    }

    #[test]
    fn c_max_examples() {
        let h1 = MemoryHamiltonian::qubit_chain(1, 1.0).unwrap();
        let g1 = group_energies(&h1, 2).unwrap();
        assert_abs_diff_eq!(
            c_max(&g1, &gibbs(&h1, 1.0).unwrap()).unwrap(),
            G1,
            epsilon = 1e-15
        );

        let h = MemoryHamiltonian::explicit(vec![0.0, 0.2, 0.7, 1.0, 3.0, 3.5]).unwrap();
        for d_s in [2, 3, 6] {
            let g = group_energies(&h, d_s).unwrap();
            assert_abs_diff_eq!(
                c_max(&g, &gibbs(&h, 0.0).unwrap()).unwrap(),
                1.0 / d_s as f64,
                epsilon = 1e-15
            );
        }

        let h3 = MemoryHamiltonian::qubit_chain(3, 1.0).unwrap();
        let g3 = group_energies(&h3, 2).unwrap();
        let e = (-1.0f64).exp();
        let closed = (1.0 + 3.0 * e) / (1.0 + e).powi(3);
        let cm = c_max(&g3, &gibbs(&h3, 1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(cm, closed, epsilon = 1e-15);
        assert_abs_diff_eq!(cm, 0.821916, epsilon = 5e-7);
    }

    #[test]
    fn analytic_c_max_examples() {
        assert_abs_diff_eq!(c_max_qubits_analytic(1, 1.0), G1, epsilon = 1e-15);
        for n in [1, 2, 3, 10, 101, 400] {
            assert_abs_diff_eq!(c_max_qubits_analytic(n, 0.0), 0.5, epsilon = 1e-12);
        }
        let e = (-1.0f64).exp();
        assert_abs_diff_eq!(
            c_max_qubits_analytic(3, 1.0),
            (1.0 + 3.0 * e) / (1.0 + e).powi(3),
            epsilon = 1e-14
        );
    }

    #[test]
    fn analytic_matches_dense_path() {
        for n in 1..=9 {
            let h = MemoryHamiltonian::qubit_chain(n, 1.0).unwrap();
            for &bw in &[0.1, 0.25, 0.5, 1.0, 3.0] {
                let tau = gibbs(&h, bw).unwrap();
                for d_s in [2usize, 4, 8] {
                    if d_s.trailing_zeros() as usize > n {
                        continue;
                    }
                    let dense = c_max(&group_energies(&h, d_s).unwrap(), &tau).unwrap();
                    let analytic = c_max_qubits_analytic_grouped(n, bw, d_s).unwrap();
                    assert_abs_diff_eq!(dense, analytic, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn analytic_rejects_non_dividing_system() {
        assert!(c_max_qubits_analytic_grouped(2, 1.0, 3).is_err());
        assert!(c_max_qubits_analytic_grouped(2, 1.0, 8).is_err());
    }

    #[test]
    fn analytic_is_finite_at_large_n() {
        let v = c_max_qubits_analytic(409, 1.0);
        assert!(v.is_finite() && v > 1.0 - 1e-6 && v <= 1.0);
        let v = c_max_qubits_analytic(410, 0.1);
        assert!(v.is_finite() && v > 0.5 && v < 1.0);
    }
}
