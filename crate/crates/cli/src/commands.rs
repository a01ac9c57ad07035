//! The five experiments. Each builds its model from the config (failures are
//! config errors), runs it (failures are domain errors), writes the result
//! files and prints a one-line summary.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use semibroadcast::broadcast::{
    nogo_witness, reconstruct_dense, run_global, run_sequential_local, sweep_cmax_convergence,
    BroadcastMode, BroadcastRun, MemoryArray, MemoryComponent,
};
use semibroadcast::infotherm::{
    classify_table1, holevo_landauer_gap, table1_evidence, thermo_report, Table1Class, ThermoReport,
};
use semibroadcast::interact::{ControlledInteraction, InteractionSpec};
use semibroadcast::qcore::{
    random_density, shannon_entropy, von_neumann_entropy, Basis, DensityOperator,
    HilbertFactorization, ProbabilityVector,
};
use semibroadcast::thermal::{gibbs, group_energies, GibbsState, MemoryHamiltonian};
use semibroadcast::Error;
use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig, MemoryState, StateSpec};
use crate::error::{config_err, CliError, CliResult};
use crate::output::{write_results, Cell, Table, SCHEMA_VERSION};

pub const GAP_TOL: f64 = 1e-9;
pub const REEB_WOLF_TOL: f64 = 1e-10;
pub const RESIDUAL_TOL: f64 = 1e-9;

pub struct Context {
    pub cfg: ExperimentConfig,
    pub seed: u64,
    pub out: PathBuf,
    pub bits: bool,
}

impl Context {
    /// Entropy for display: nats, or bits under `--bits`.
    fn show(&self, nats: f64) -> String {
        if self.bits {
            format!("{:.6} bits", nats / std::f64::consts::LN_2)
        } else {
            format!("{nats:.6} nats")
        }
    }

    fn system_state(&self, default: StateSpec) -> CliResult<DensityOperator> {
        let d_s = self.cfg.system.d_s;
        let fact = HilbertFactorization::single(d_s).map_err(config_err)?;
        match self.cfg.system.state.clone().unwrap_or(default) {
            StateSpec::Pure(i) => DensityOperator::basis_state(i, fact).map_err(config_err),
            StateSpec::Diagonal(d) => {
                let p = ProbabilityVector::new(d).map_err(config_err)?;
                DensityOperator::from_diagonal(p.entries(), fact).map_err(config_err)
            }
            StateSpec::Random(_) => {
                random_density(d_s, self.cfg.system.seed.unwrap_or(self.seed)).map_err(config_err)
            }
        }
    }

    fn hamiltonian(&self) -> CliResult<MemoryHamiltonian> {
        match &self.cfg.memory.hamiltonian {
            Some(spec) => MemoryHamiltonian::from_spec(spec),
            None => MemoryHamiltonian::qubit_chain(self.cfg.memory.n, 1.0),
        }
        .map_err(config_err)
    }

    /// `beta` in units of the Hamiltonian's energy scale.
    fn beta(&self, h: &MemoryHamiltonian) -> f64 {
        self.cfg.memory.beta_omega / h.energy_scale()
    }

    fn component(
        &self,
        h: &MemoryHamiltonian,
        spec: &InteractionSpec,
    ) -> CliResult<MemoryComponent> {
        let d_s = self.cfg.system.d_s;
        match self.cfg.memory.state {
            MemoryState::Thermal => MemoryComponent::thermal(h.clone(), self.beta(h), d_s, spec),
            MemoryState::Ground => {
                let g = group_energies(h, d_s).map_err(config_err)?;
                let ground = DensityOperator::basis_state(g.group(0)[0], h.factorization().clone())
                    .map_err(config_err)?;
                MemoryComponent::with_state(h.clone(), ground, d_s, spec)
            }
        }
        .map_err(config_err)
    }

    fn single_component(&self) -> CliResult<()> {
        match self.cfg.memory.n_components {
            None | Some(1) => Ok(()),
            Some(n) => Err(CliError::Config(format!(
                "this experiment uses one memory component, N = {n}"
            ))),
        }
    }
}

fn kind_label(spec: &InteractionSpec) -> String {
    serde_json::to_value(spec)
        .ok()
        .and_then(|v| v.get("kind").and_then(|k| k.as_str().map(str::to_owned)))
        .unwrap_or_default()
}

#[derive(Serialize)]
struct Header<'a> {
    schema_version: u32,
    command: &'a str,
    seed: u64,
}

fn header(command: &str, seed: u64) -> Header<'_> {
    Header {
        schema_version: SCHEMA_VERSION,
        command,
        seed,
    }
}

// ---------------------------------------------------------------- cmax-sweep

#[derive(Serialize)]
struct SweepRow {
    n: usize,
    beta_omega: f64,
    c_max: f64,
}

#[derive(Serialize)]
struct SweepReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    #[serde(rename = "d_S")]
    d_s: usize,
    beta_omegas: Vec<f64>,
    n_values: Vec<usize>,
    rows: Vec<SweepRow>,
}

pub fn cmax_sweep(ctx: &Context) -> CliResult<()> {
    ctx.cfg.expect_experiment(&[Experiment::CmaxSweep])?;
    let s = &ctx.cfg.sweep;
    let d_s = ctx.cfg.system.d_s;
    let ns: Vec<usize> = (s.n_min..=s.n_max).step_by(s.n_step).collect();
    let rows = sweep_cmax_convergence(d_s, &ns, &s.beta_omegas).map_err(config_err)?;

    let mut table = Table::new(["n", "beta_omega", "c_max"]);
    for r in &rows {
        table.push(vec![r.n.into(), r.beta_omega.into(), r.c_max.into()]);
    }
    let report = SweepReport {
        header: header("cmax-sweep", ctx.seed),
        d_s,
        beta_omegas: s.beta_omegas.clone(),
        n_values: ns.clone(),
        rows: rows
            .iter()
            .map(|r| SweepRow {
                n: r.n,
                beta_omega: r.beta_omega,
                c_max: r.c_max,
            })
            .collect(),
    };
    write_results(&ctx.out, &report, &table)?;

    let floor = 1.0 / d_s as f64;
    for curve in rows.chunks(ns.len()) {
        let bw = curve[0].beta_omega;
        if curve
            .iter()
            .any(|r| r.c_max > 1.0 || r.c_max < floor - 1e-12)
        {
            return Err(CliError::Invariant(format!(
                "C_max outside [1/d_S, 1] at beta*omega = {bw}"
            )));
        }
        if curve.windows(2).any(|w| w[1].c_max < w[0].c_max - 1e-12) {
            return Err(CliError::Invariant(format!(
                "C_max decreases with n at beta*omega = {bw}"
            )));
        }
        let last = curve.last().expect("nonempty");
        println!(
            "beta*omega = {bw}: C_max(n={}) = {:.12}",
            last.n, last.c_max
        );
    }
    println!("cmax-sweep: {} rows", rows.len());
    Ok(())
}

// ------------------------------------------------------------------ hl-bound

struct Instance {
    rho_s: DensityOperator,
    tau: GibbsState,
    spec: InteractionSpec,
    u: ControlledInteraction,
}

/// `d_S` in {2, 3}, memory of at most three qubits, `beta * omega` in [0, 3].
fn random_instance(seed: u64) -> semibroadcast::Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d_s = rng.random_range(2..=3usize);
    let h = if d_s == 2 {
        let n = rng.random_range(1..=3usize);
        if rng.random_bool(0.5) {
            MemoryHamiltonian::qubit_chain(n, 1.0)?
        } else {
            let e = (0..1usize << n)
                .map(|_| rng.random_range(0.0..2.0))
                .collect();
            MemoryHamiltonian::with_factorization(e, 1.0, HilbertFactorization::new(vec![2; n])?)?
        }
    } else {
        let levels = if rng.random_bool(0.5) { 3 } else { 6 };
        MemoryHamiltonian::explicit((0..levels).map(|_| rng.random_range(0.0..2.0)).collect())?
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
    let g = group_energies(&h, d_s)?;
    let u = ControlledInteraction::from_spec(&spec, &g)?;
    Ok(Instance {
        rho_s: random_density(d_s, rng.random())?,
        tau: gibbs(&h, beta)?,
        spec,
        u,
    })
}

#[derive(Serialize)]
struct HlRecord {
    instance: usize,
    #[serde(rename = "d_S")]
    d_s: usize,
    #[serde(rename = "d_M")]
    d_m: usize,
    interaction: InteractionSpec,
    report: ThermoReport,
    gap: f64,
    reeb_wolf_residual: f64,
}

#[derive(Serialize)]
struct HlSummary {
    instances: usize,
    min_gap: f64,
    max_reeb_wolf_residual: f64,
}

#[derive(Serialize)]
struct HlReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    summary: HlSummary,
    records: Vec<HlRecord>,
}

fn hl_record(k: usize, inst: &Instance) -> semibroadcast::Result<HlRecord> {
    let report = thermo_report(&inst.rho_s, &inst.tau, &inst.u, &Basis::Computational)?;
    Ok(HlRecord {
        instance: k,
        d_s: inst.rho_s.dim(),
        d_m: inst.tau.dim(),
        interaction: inst.spec.clone(),
        gap: holevo_landauer_gap(&report),
        reeb_wolf_residual: report.reeb_wolf_residual(),
        report,
    })
}

pub fn hl_bound(ctx: &Context) -> CliResult<()> {
    ctx.cfg
        .expect_experiment(&[Experiment::Sequential, Experiment::Global])?;
    let records: Vec<HlRecord> = if let Some(spec) = &ctx.cfg.interaction {
        if ctx.cfg.instances.is_some() {
            return Err(CliError::Config(
                "give either `interaction` or `instances`, not both".into(),
            ));
        }
        ctx.single_component()?;
        if ctx.cfg.memory.state != MemoryState::Thermal {
            return Err(CliError::Config("hl-bound needs a thermal memory".into()));
        }
        let h = ctx.hamiltonian()?;
        let g = group_energies(&h, ctx.cfg.system.d_s).map_err(config_err)?;
        let inst = Instance {
            rho_s: ctx.system_state(StateSpec::Random(crate::config::RandomWord::Random))?,
            tau: gibbs(&h, ctx.beta(&h)).map_err(config_err)?,
            spec: spec.clone(),
            u: ControlledInteraction::from_spec(spec, &g).map_err(config_err)?,
        };
        vec![hl_record(0, &inst)?]
    } else {
        let count = ctx.cfg.instances.unwrap_or(500);
        (0..count)
            .into_par_iter()
            .map(|k| hl_record(k, &random_instance(ctx.seed.wrapping_add(k as u64))?))
            .collect::<semibroadcast::Result<_>>()?
    };

    let summary = HlSummary {
        instances: records.len(),
        min_gap: records.iter().map(|r| r.gap).fold(f64::INFINITY, f64::min),
        max_reeb_wolf_residual: records
            .iter()
            .map(|r| r.reeb_wolf_residual)
            .fold(0.0, f64::max),
    };
    let mut table = Table::new([
        "instance",
        "d_S",
        "d_M",
        "beta",
        "interaction",
        "sigma",
        "chi",
        "beta_delta_f",
        "gap",
        "mutual_i",
        "rel_entropy_d",
        "reeb_wolf_residual",
        "h_x",
    ]);
    for r in &records {
        table.push(vec![
            r.instance.into(),
            r.d_s.into(),
            r.d_m.into(),
            r.report.beta.into(),
            kind_label(&r.interaction).into(),
            r.report.sigma_prod.into(),
            r.report.chi.into(),
            r.report.beta_delta_f.into(),
            r.gap.into(),
            r.report.mutual_i.into(),
            r.report.rel_entropy_d.into(),
            r.reeb_wolf_residual.into(),
            r.report.h_x.into(),
        ]);
    }
    let (min_gap, max_rw) = (summary.min_gap, summary.max_reeb_wolf_residual);
    let report = HlReport {
        header: header("hl-bound", ctx.seed),
        summary,
        records,
    };
    write_results(&ctx.out, &report, &table)?;
    println!(
        "hl-bound: {} instances, min gap {}, max Reeb-Wolf residual {max_rw:.3e}",
        report.summary.instances,
        ctx.show(min_gap)
    );
    if min_gap < -GAP_TOL {
        return Err(CliError::Invariant(format!(
            "Holevo-Landauer gap {min_gap:e} < -{GAP_TOL:e}"
        )));
    }
    if max_rw > REEB_WOLF_TOL {
        return Err(CliError::Invariant(format!(
            "Reeb-Wolf residual {max_rw:e} > {REEB_WOLF_TOL:e}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------- nogo

#[derive(Serialize)]
struct InputRun {
    input: usize,
    defect: f64,
    /// `q[i][x]`: outcome distribution of component `i`.
    q: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct ConfiguredRun {
    p: Vec<f64>,
    defect: f64,
    q: Vec<Vec<f64>>,
}

#[derive(Serialize)]
#[serde(untagged)]
enum WitnessReport {
    Applicable {
        applicable: bool,
        s_rho_s: f64,
        s_m1: f64,
        h_x: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        k: Option<u32>,
        lhs: f64,
        rhs: f64,
        violated: bool,
    },
    Inapplicable {
        applicable: bool,
        s_m1: f64,
        reason: String,
    },
}

#[derive(Serialize)]
struct NogoReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    mode: BroadcastMode,
    #[serde(rename = "d_S")]
    d_s: usize,
    #[serde(rename = "N")]
    n_components: usize,
    beta_omega: f64,
    memory_state: &'static str,
    interaction: InteractionSpec,
    basis_inputs: Vec<InputRun>,
    max_defect: f64,
    configured_state: ConfiguredRun,
    witness: WitnessReport,
}

fn q_table(run: &BroadcastRun) -> Vec<Vec<f64>> {
    run.q.iter().map(|q| q.entries().to_vec()).collect()
}

pub fn nogo(ctx: &Context) -> CliResult<()> {
    ctx.cfg
        .expect_experiment(&[Experiment::Nogo, Experiment::Sequential, Experiment::Global])?;
    let d_s = ctx.cfg.system.d_s;
    let n_comp = ctx.cfg.memory.n_components.unwrap_or(2);
    let spec = ctx.cfg.interaction();
    let h = ctx.hamiltonian()?;
    let comps = (0..n_comp)
        .map(|_| ctx.component(&h, &spec))
        .collect::<CliResult<Vec<_>>>()?;
    let mem = MemoryArray::new(d_s, comps).map_err(config_err)?;
    let rho_s = ctx.system_state(StateSpec::Pure(0))?;
    let global = ctx.cfg.experiment == Some(Experiment::Global);
    let run = |rho: &DensityOperator| -> CliResult<BroadcastRun> {
        Ok(if global {
            run_global(rho, &mem, &spec)?
        } else {
            run_sequential_local(rho, &mem)?
        })
    };

    let fact = HilbertFactorization::single(d_s).map_err(config_err)?;
    let mut basis_inputs = Vec::with_capacity(d_s);
    for x in 0..d_s {
        let r = run(&DensityOperator::basis_state(x, fact.clone()).map_err(config_err)?)?;
        basis_inputs.push(InputRun {
            input: x,
            defect: r.ideal_scb_defect(&ProbabilityVector::point(d_s, x)),
            q: q_table(&r),
        });
    }
    let max_defect = basis_inputs.iter().map(|r| r.defect).fold(0.0, f64::max);
    let p =
        ProbabilityVector::with_tolerance(rho_s.diagonal(), 1e-10, 1e-12).map_err(config_err)?;
    let r = run(&rho_s)?;
    let configured_state = ConfiguredRun {
        p: p.entries().to_vec(),
        defect: r.ideal_scb_defect(&p),
        q: q_table(&r),
    };

    let s_rho_s = von_neumann_entropy(&rho_s);
    let s_m1 = von_neumann_entropy(mem.components()[0].state());
    let h_x = shannon_entropy(&p);
    let witness = match nogo_witness(s_rho_s, s_m1, h_x, d_s) {
        Ok(w) => WitnessReport::Applicable {
            applicable: true,
            s_rho_s,
            s_m1,
            h_x,
            k: w.k,
            lhs: w.lhs,
            rhs: w.rhs,
            violated: w.violated,
        },
        Err(Error::NonPositiveMemoryEntropy(_)) => WitnessReport::Inapplicable {
            applicable: false,
            s_m1: s_m1.max(0.0),
            reason: "memory component has zero entropy".into(),
        },
        Err(e) => return Err(e.into()),
    };

    let mut table = Table::new(["input", "component", "outcome", "p", "q"]);
    for r in &basis_inputs {
        for (i, q) in r.q.iter().enumerate() {
            for (y, &qy) in q.iter().enumerate() {
                let py = if y == r.input { 1.0 } else { 0.0 };
                table.push(vec![
                    r.input.into(),
                    i.into(),
                    y.into(),
                    py.into(),
                    qy.into(),
                ]);
            }
        }
    }
    let summary = match &witness {
        WitnessReport::Applicable {
            k: Some(k),
            lhs,
            rhs,
            ..
        } => {
            format!(
                "witness k = {k}, lhs {} > rhs {}",
                ctx.show(*lhs),
                ctx.show(*rhs)
            )
        }
        WitnessReport::Applicable { .. } => "witness: no finite k".to_string(),
        WitnessReport::Inapplicable { .. } => "witness inapplicable (S_M1 = 0)".to_string(),
    };
    let report = NogoReport {
        header: header("nogo", ctx.seed),
        mode: if global {
            BroadcastMode::Global
        } else {
            BroadcastMode::SequentialLocal
        },
        d_s,
        n_components: n_comp,
        beta_omega: ctx.cfg.memory.beta_omega,
        memory_state: match ctx.cfg.memory.state {
            MemoryState::Thermal => "thermal",
            MemoryState::Ground => "ground",
        },
        interaction: spec,
        basis_inputs,
        max_defect,
        configured_state,
        witness,
    };
    write_results(&ctx.out, &report, &table)?;
    println!("nogo: max basis-state defect {max_defect:.6e}; {summary}");
    Ok(())
}

// --------------------------------------------------------------- reconstruct

#[derive(Serialize)]
struct ReconstructReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    #[serde(rename = "d_S")]
    d_s: usize,
    beta_omega: f64,
    c_max: f64,
    p_true: Vec<f64>,
    q_variants: Vec<Vec<f64>>,
    q_av: Vec<f64>,
    p_recovered: Vec<f64>,
    residual: f64,
}

pub fn reconstruct(ctx: &Context) -> CliResult<()> {
    ctx.cfg.expect_experiment(&[Experiment::Reconstruct])?;
    let d_s = ctx.cfg.system.d_s;
    if let Some(n) = ctx.cfg.memory.n_components {
        if n != d_s - 1 {
            return Err(CliError::Config(format!(
                "reconstruction needs N = d_S - 1 = {}, got {n}",
                d_s - 1
            )));
        }
    }
    if ctx.cfg.interaction.is_some() {
        return Err(CliError::Config(
            "reconstruction always uses the cycled variants; drop `interaction`".into(),
        ));
    }
    let h = ctx.hamiltonian()?;
    let comps = (0..d_s - 1)
        .map(|i| ctx.component(&h, &InteractionSpec::Cycled { i }))
        .collect::<CliResult<Vec<_>>>()?;
    let mem = MemoryArray::new(d_s, comps).map_err(config_err)?;
    let rho_s = ctx.system_state(StateSpec::Random(crate::config::RandomWord::Random))?;

    let run = run_sequential_local(&rho_s, &mem)?;
    let result = reconstruct_dense(&rho_s, &mem)?;
    let residual = result.residual.expect("truth supplied");
    let report = ReconstructReport {
        header: header("reconstruct", ctx.seed),
        d_s,
        beta_omega: ctx.cfg.memory.beta_omega,
        c_max: mem.components()[0].c_max(),
        p_true: rho_s.diagonal(),
        q_variants: q_table(&run),
        q_av: result.q_av.entries().to_vec(),
        p_recovered: result.p_recovered.entries().to_vec(),
        residual,
    };
    let mut header_row = vec![
        "outcome".to_string(),
        "p_true".into(),
        "q_av".into(),
        "p_recovered".into(),
    ];
    header_row.extend((0..d_s - 1).map(|i| format!("q_variant_{i}")));
    let mut table = Table::new(header_row);
    for y in 0..d_s {
        let mut row: Vec<Cell> = vec![
            y.into(),
            report.p_true[y].into(),
            report.q_av[y].into(),
            report.p_recovered[y].into(),
        ];
        row.extend(report.q_variants.iter().map(|q| Cell::from(q[y])));
        table.push(row);
    }
    write_results(&ctx.out, &report, &table)?;
    println!(
        "reconstruct: d_S = {d_s}, C_max = {:.9}, residual {residual:.3e}",
        report.c_max
    );
    if residual > RESIDUAL_TOL {
        return Err(CliError::Invariant(format!(
            "reconstruction residual {residual:e} > {RESIDUAL_TOL:e}"
        )));
    }
    Ok(())
}

// ------------------------------------------------------------------ classify

#[derive(Serialize)]
struct ClassifyReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    #[serde(rename = "d_S")]
    d_s: usize,
    beta_omega: f64,
    interaction: InteractionSpec,
    p: Vec<f64>,
    class: Table1Class,
}

pub fn classify(ctx: &Context) -> CliResult<()> {
    ctx.cfg
        .expect_experiment(&[Experiment::Sequential, Experiment::Global])?;
    ctx.single_component()?;
    let spec = ctx.cfg.interaction();
    let h = ctx.hamiltonian()?;
    let comp = ctx.component(&h, &spec)?;
    let rho_s = ctx.system_state(StateSpec::Random(crate::config::RandomWord::Random))?;
    let e = table1_evidence(comp.interaction(), &rho_s, comp.state(), comp.grouping())?;
    let class = classify_table1(&e);

    let label = serde_json::to_value(class.variant)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default();
    let mut table = Table::new(["quantity", "value"]);
    table.push(vec!["variant".into(), label.clone().into()]);
    for (name, v) in [
        ("i_acc_lower", e.i_acc.lower),
        ("i_acc_upper", e.i_acc.upper),
        ("chi", e.chi),
        ("h_x", e.h_x),
        ("s_system_diag", e.s_system_diag),
        ("s_system", e.s_system),
        ("s_initial", e.s_initial),
        ("bias_defect", e.bias_defect),
    ] {
        table.push(vec![name.into(), v.into()]);
    }
    let report = ClassifyReport {
        header: header("classify", ctx.seed),
        d_s: ctx.cfg.system.d_s,
        beta_omega: ctx.cfg.memory.beta_omega,
        interaction: spec,
        p: rho_s.diagonal(),
        class,
    };
    write_results(&ctx.out, &report, &table)?;
    println!(
        "classify: {label} (chi {}, H(X) {}, S(diag rho_S') {})",
        ctx.show(e.chi),
        ctx.show(e.h_x),
        ctx.show(e.s_system_diag)
    );
    Ok(())
}
