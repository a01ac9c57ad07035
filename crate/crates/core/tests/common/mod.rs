#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semibroadcast::interact::{ControlledInteraction, InteractionSpec};
use semibroadcast::qcore::{
    dephase, mutual_information, partial_trace, random_density, random_density_on, random_unitary,
    von_neumann_entropy, Basis, DensityOperator, HilbertFactorization,
};
use semibroadcast::thermal::{gibbs, group_energies, GibbsState, MemoryHamiltonian};

pub struct ThermoInstance {
    pub d_s: usize,
    pub rho_s: DensityOperator,
    pub tau: GibbsState,
    pub u: ControlledInteraction,
}

/// `d_S` in {2, 3}, memory of dimension at most 8, `beta * omega` in [0, 3].
pub fn thermo_instance(seed: u64) -> ThermoInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d_s = rng.random_range(2..=3);
    let h = if d_s == 2 {
        let n = rng.random_range(1..=3);
        if rng.random_bool(0.5) {
            MemoryHamiltonian::qubit_chain(n, 1.0).unwrap()
        } else {
            let e = (0..1 << n).map(|_| rng.random_range(0.0..2.0)).collect();
            let fact = HilbertFactorization::new(vec![2; n]).unwrap();
            MemoryHamiltonian::with_factorization(e, 1.0, fact).unwrap()
        }
    } else {
        let levels = if rng.random_bool(0.5) { 3 } else { 6 };
        MemoryHamiltonian::explicit((0..levels).map(|_| rng.random_range(0.0..2.0)).collect())
            .unwrap()
    };
    let beta = rng.random_range(0.0..=3.0);
    let spec = match rng.random_range(0..5) {
        0 => InteractionSpec::Noninvasive {},
        1 => InteractionSpec::Cycled {
            i: rng.random_range(0..d_s - 1),
        },
        2 => InteractionSpec::Swap {},
        3 => InteractionSpec::Identity {},
        _ => InteractionSpec::Haar { seed: rng.random() },
    };
    let g = group_energies(&h, d_s).unwrap();
    ThermoInstance {
        d_s,
        rho_s: random_density(d_s, rng.random()).unwrap(),
        tau: gibbs(&h, beta).unwrap(),
        u: ControlledInteraction::from_spec(&spec, &g).unwrap(),
    }
}

/// Worst violation (positive means broken) of each entropy inequality for one seed.
pub struct EntropyChecks {
    pub unitary_invariance: f64,
    pub subadditivity: f64,
    pub strong_subadditivity: f64,
    pub data_processing: f64,
}

fn dims(rng: &mut ChaCha8Rng, parts: usize, max_total: usize) -> Vec<usize> {
    loop {
        let d: Vec<usize> = (0..parts).map(|_| rng.random_range(2..=4)).collect();
        if d.iter().product::<usize>() <= max_total {
            return d;
        }
    }
}

pub fn entropy_checks(seed: u64) -> EntropyChecks {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let fact = HilbertFactorization::new(dims(&mut rng, 2, 16)).unwrap();
    let rho = random_density_on(fact.clone(), rng.random()).unwrap();
    let u = random_unitary(fact, rng.random()).unwrap();
    let unitary_invariance =
        (von_neumann_entropy(&rho) - von_neumann_entropy(&rho.evolve(&u).unwrap())).abs();

    let fact = HilbertFactorization::new(dims(&mut rng, 2, 16)).unwrap();
    let rho = random_density_on(fact, rng.random()).unwrap();
    let s = |keep: &[usize]| von_neumann_entropy(&partial_trace(&rho, keep).unwrap());
    let subadditivity = von_neumann_entropy(&rho) - s(&[0]) - s(&[1]);

    let fact = HilbertFactorization::new(dims(&mut rng, 3, 24)).unwrap();
    let rho = random_density_on(fact, rng.random()).unwrap();
    let s = |keep: &[usize]| von_neumann_entropy(&partial_trace(&rho, keep).unwrap());
    let strong_subadditivity = von_neumann_entropy(&rho) + s(&[1]) - s(&[0, 1]) - s(&[1, 2]);

    let fact = HilbertFactorization::new(dims(&mut rng, 2, 16)).unwrap();
    let rho = random_density_on(fact.clone(), rng.random()).unwrap();
    let basis = |k: usize, seed: u64| {
        let d = fact.dims()[k];
        let u = random_unitary(HilbertFactorization::single(d).unwrap(), seed).unwrap();
        Basis::columns(u.matrix().clone()).unwrap()
    };
    let (b0, b1) = (basis(0, rng.random()), basis(1, rng.random()));
    let processed = dephase(&dephase(&rho, 0, &b0).unwrap(), 1, &b1).unwrap();
    let data_processing =
        mutual_information(&processed, &[0]).unwrap() - mutual_information(&rho, &[0]).unwrap();

    EntropyChecks {
        unitary_invariance,
        subadditivity,
        strong_subadditivity,
        data_processing,
    }
}
