use proptest::prelude::*;
use semibroadcast::thermal::{
    a_blocks, c_max, c_max_qubits_analytic, c_max_qubits_analytic_grouped, gibbs, group_energies,
    MemoryHamiltonian,
};

fn dense_cmax(n: usize, beta_omega: f64, d_s: usize) -> f64 {
    let h = MemoryHamiltonian::qubit_chain(n, 1.0).unwrap();
    c_max(
        &group_energies(&h, d_s).unwrap(),
        &gibbs(&h, beta_omega).unwrap(),
    )
    .unwrap()
}

/// Sum of the `d_M / d_S` largest normalized Boltzmann factors.
fn sort_and_sum(energies: &[f64], beta: f64, d_s: usize) -> f64 {
    let mut w: Vec<f64> = energies.iter().map(|e| (-beta * e).exp()).collect();
    let z: f64 = w.iter().sum();
    w.sort_by(|a, b| b.partial_cmp(a).unwrap());
    w[..energies.len() / d_s].iter().sum::<f64>() / z
}

#[test]
fn cmax_grows_with_memory_size() {
    for &bw in &[0.1, 0.25, 0.5, 1.0, 2.0] {
        let mut prev = 0.0;
        for n in (1..=25).step_by(2) {
            let c = c_max_qubits_analytic(n, bw);
            assert!(c >= prev - 1e-12, "bw {bw} n {n}: {c} < {prev}");
            assert!(c <= 1.0);
            prev = c;
        }
    }
    // exact binomial tail: P(weight <= 12) for Binomial(25, e^-1 / (1 + e^-1))
    assert!((c_max_qubits_analytic(25, 1.0) - 0.993_352_464_519_137).abs() < 1e-12);
    assert!(c_max_qubits_analytic(41, 1.0) > 0.999);
}

#[test]
fn analytic_matches_dense() {
    for n in 1..=11 {
        for &bw in &[0.0, 0.1, 0.25, 0.5, 1.0, 3.0] {
            for d_s in [2usize, 4, 8] {
                if d_s.trailing_zeros() as usize > n {
                    continue;
                }
                let a = c_max_qubits_analytic_grouped(n, bw, d_s).unwrap();
                let d = dense_cmax(n, bw, d_s);
                assert!((a - d).abs() <= 1e-12, "n {n} bw {bw} d {d_s}: {a} vs {d}");
            }
        }
    }
}

fn energies_strategy() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (2usize..=4, 1usize..=4)
        .prop_flat_map(|(d_s, r)| (Just(d_s), prop::collection::vec(-3.0f64..3.0, d_s * r)))
}

proptest! {
    #[test]
    fn cmax_is_sum_of_largest_weights((d_s, e) in energies_strategy(), beta in 0.0f64..4.0) {
        let h = MemoryHamiltonian::explicit(e.clone()).unwrap();
        let c = c_max(&group_energies(&h, d_s).unwrap(), &gibbs(&h, beta).unwrap()).unwrap();
        prop_assert!((c - sort_and_sum(&e, beta, d_s)).abs() <= 1e-12);
    }

    #[test]
    fn cmax_bounds_and_temperature_order(
        (d_s, e) in energies_strategy(),
        b1 in 0.0f64..4.0,
        b2 in 0.0f64..4.0,
    ) {
        let h = MemoryHamiltonian::explicit(e).unwrap();
        let g = group_energies(&h, d_s).unwrap();
        let c1 = c_max(&g, &gibbs(&h, b1).unwrap()).unwrap();
        let c2 = c_max(&g, &gibbs(&h, b2).unwrap()).unwrap();
        for c in [c1, c2] {
            prop_assert!(c >= 1.0 / d_s as f64 - 1e-12 && c <= 1.0 + 1e-12);
        }
        let (hot, cold) = if b1 <= b2 { (c1, c2) } else { (c2, c1) };
        prop_assert!(cold >= hot - 1e-12);
    }

    #[test]
    fn blocks_of_row_zero_resum_to_tau((d_s, e) in energies_strategy(), beta in 0.0f64..4.0) {
        let h = MemoryHamiltonian::explicit(e).unwrap();
        let g = group_energies(&h, d_s).unwrap();
        let tau = gibbs(&h, beta).unwrap();
        let mut sum = vec![0.0; h.dim()];
        for b in a_blocks(&g, &tau).unwrap() {
            for (i, w) in b.entries {
                sum[i] += w;
            }
        }
        for (s, w) in sum.iter().zip(tau.weights()) {
            prop_assert!((s - w).abs() <= 1e-12);
        }
    }
}
