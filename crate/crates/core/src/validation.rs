//! Built-in invariant suite behind the `validate` command.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::transfer_result;
use crate::error::{Error, Result};
use crate::model::{
    build_full_model, build_qubit_only_model, excitation_operator, LindbladModel, SystemParams,
};
use crate::operators::{basis_density, ComplexMatrix, C64};
use crate::solver::{
    integrate, lindblad_rhs, liouvillian_superoperator, observable_registry, propagate_expm_series,
    IntegratorConfig,
};

pub const TRACE_TOL: f64 = 1e-8;
pub const HERMITICITY_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-8;
pub const CONSERVATION_TOL: f64 = 1e-8;
pub const ORACLE_TOL: f64 = 1e-8;
pub const ORDER_FACTOR_MIN: f64 = 10.0;
pub const TRUNCATION_TOL: f64 = 1e-6;

/// Step used for the RK4-vs-exponential comparison on the driven qubit.
pub const ORACLE_DT: f64 = 1e-5;
/// Horizon of the oracle comparison (µs); checked at ten evenly spaced times.
pub const ORACLE_HORIZON: f64 = 0.1;
/// Step for the closed-system check: RK4 is not unitary, and its purity drift
/// over 0.5 µs at the default 2e-5 µs step is ~6e-8.
pub const CONSERVATION_DT: f64 = 1e-5;
/// Coarse step for the convergence-order check; it is also run at half this.
pub const ORDER_BASE_DT: f64 = 2e-4;

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{tag}  {:width$}  {}", c.name, c.detail)?;
        }
        Ok(())
    }
}

/// Suite knobs. `dt` replaces every step size used by the integration checks.
#[derive(Clone, Debug, Default)]
pub struct ValidationOptions {
    pub dt: Option<f64>,
}

fn check(name: &'static str, outcome: Result<(bool, String)>) -> CheckResult {
    match outcome {
        Ok((passed, detail)) => CheckResult { name, passed, detail },
        Err(e) => CheckResult {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

pub fn run_invariant_suite(opts: &ValidationOptions) -> ValidationReport {
    let paper = SystemParams::paper_fig2();
    let run_dt = opts.dt.unwrap_or(IntegratorConfig::default().dt);
    let checks = vec![
        check("excitation-conservation", excitation_conservation(&paper)),
        check("generator-structure", generator_structure(&paper)),
        check("physicality", physicality(&paper, run_dt)),
        check(
            "closed-system-conservation",
            closed_system(&paper, opts.dt.unwrap_or(CONSERVATION_DT)),
        ),
        check(
            "rk4-vs-expm-oracle",
            oracle_agreement(&paper, opts.dt.unwrap_or(ORACLE_DT)),
        ),
        check(
            "rk4-order",
            convergence_order(&paper, opts.dt.unwrap_or(ORDER_BASE_DT)),
        ),
        check("truncation-convergence", truncation(&paper, run_dt)),
    ];
    ValidationReport { checks }
}

fn excitation_conservation(p: &SystemParams) -> Result<(bool, String)> {
    let mut worst = 0.0_f64;
    for (na, nb) in [(2, 2), (3, 3), (4, 4)] {
        let model = build_full_model(&p.with_truncation(na, nb))?;
        let n = excitation_operator(&model.space)?;
        worst = worst.max(model.hamiltonian.commutator(&n).max_abs());
    }
    Ok((worst <= 1e-10, format!("max|[H, N]| = {worst:.3e} (tol 1e-10)")))
}

fn random_density(d: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(d, d, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let rho = &g * &g.dagger();
    let tr = rho.trace().re;
    rho.scale_real(1.0 / tr).hermitian_part()
}

fn generator_structure(p: &SystemParams) -> Result<(bool, String)> {
    let model = build_full_model(p)?;
    let l = liouvillian_superoperator(&model)?;
    let d = model.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let scale = model.hamiltonian.max_abs().max(1.0);
    let (mut herm, mut trace, mut agree) = (0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..20 {
        let rho = random_density(d, &mut rng);
        let rhs = lindblad_rhs(&model, &rho)?;
        herm = herm.max(rhs.hermiticity_residual() / scale);
        trace = trace.max(rhs.trace().norm() / scale);
        let via_l = ComplexMatrix::unvectorize(&(&l * &rho.vectorize()), d)?;
        agree = agree.max((&via_l - &rhs.untagged()).max_abs() / scale);
    }
    let ok = herm <= 1e-12 && trace <= 1e-12 && agree <= 1e-12;
    Ok((
        ok,
        format!(
            "relative to max|H|: rhs hermiticity {herm:.2e}, rhs trace {trace:.2e}, \
             Liouvillian agreement {agree:.2e} (tol 1e-12)"
        ),
    ))
}

fn paper_run_cfg(dt: f64) -> IntegratorConfig {
    IntegratorConfig {
        dt,
        ..IntegratorConfig::default()
    }
}

fn physicality(p: &SystemParams, dt: f64) -> Result<(bool, String)> {
    let model = build_full_model(p)?;
    let rho0 = basis_density(&model.space, &[0, 1, 0])?;
    let traj = integrate(
        &model,
        &rho0,
        &paper_run_cfg(dt),
        &observable_registry(&model.space)?,
    )?;
    let d = &traj.diagnostics;
    let trace = d.trace_dev.iter().copied().fold(0.0, f64::max);
    let herm = d.hermiticity.iter().copied().fold(0.0, f64::max);
    let min_eig = d.min_eig.iter().copied().fold(f64::INFINITY, f64::min);
    let ok = trace <= TRACE_TOL && herm <= HERMITICITY_TOL && min_eig >= -POSITIVITY_TOL;
    Ok((
        ok,
        format!("max|Tr-1| = {trace:.2e}, max|rho-rho^H| = {herm:.2e}, min eig = {min_eig:.2e}"),
    ))
}

fn closed_system(p: &SystemParams, dt: f64) -> Result<(bool, String)> {
    let model = build_full_model(&p.lossless())?;
    let rho0 = basis_density(&model.space, &[0, 1, 0])?;
    let traj = integrate(
        &model,
        &rho0,
        &paper_run_cfg(dt),
        &observable_registry(&model.space)?,
    )?;
    let spread = |v: &[f64]| {
        let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
        hi - lo
    };
    let n = spread(traj.series("N")?);
    let purity = spread(&traj.diagnostics.purity);
    Ok((
        n <= CONSERVATION_TOL && purity <= CONSERVATION_TOL,
        format!("spread of <N> = {n:.2e}, spread of purity = {purity:.2e}"),
    ))
}

/// Driven qubit from |1⟩⟨1|, compared entrywise with exponential propagation.
pub fn qubit_oracle_setup(p: &SystemParams) -> Result<(LindbladModel, ComplexMatrix)> {
    let model = build_qubit_only_model(p)?;
    let rho0 = basis_density(&model.space, &[1])?;
    Ok((model, rho0))
}

/// Largest entrywise difference between RK4 and `exp(Lt)` at ten checkpoints.
pub fn oracle_max_deviation(
    model: &LindbladModel,
    rho0: &ComplexMatrix,
    dt: f64,
    horizon: f64,
) -> Result<f64> {
    let checkpoints = 10;
    let steps = (horizon / dt).round() as usize;
    if !steps.is_multiple_of(checkpoints) {
        return Err(Error::InvalidParameter {
            name: "dt".into(),
            reason: format!("{steps} steps do not split into {checkpoints} checkpoints"),
        });
    }
    let cfg = IntegratorConfig {
        dt,
        t_end: horizon,
        sample_every: steps / checkpoints,
        store_reduced: Some(vec![0]),
        ..IntegratorConfig::default()
    };
    let traj = integrate(model, rho0, &cfg, &[])?;
    let times: Vec<f64> = traj.times[1..].to_vec();
    let exact = propagate_expm_series(model, rho0, &times)?;
    Ok(traj.states[1..]
        .iter()
        .zip(&exact)
        .map(|(a, b)| (&a.clone().untagged() - &b.clone().untagged()).max_abs())
        .fold(0.0, f64::max))
}

fn oracle_agreement(p: &SystemParams, dt: f64) -> Result<(bool, String)> {
    let (model, rho0) = qubit_oracle_setup(p)?;
    let dev = oracle_max_deviation(&model, &rho0, dt, ORACLE_HORIZON)?;
    Ok((
        dev <= ORACLE_TOL,
        format!("max entrywise deviation {dev:.2e} at dt = {dt:e} (tol {ORACLE_TOL:e})"),
    ))
}

/// Terminal-state errors at `dt` and `dt/2` against the exponential, and their ratio.
pub fn order_ratio(
    model: &LindbladModel,
    rho0: &ComplexMatrix,
    dt: f64,
    horizon: f64,
) -> Result<(f64, f64, f64)> {
    let exact = propagate_expm_series(model, rho0, &[horizon])?
        .remove(0)
        .untagged();
    let terminal_error = |step: f64| -> Result<f64> {
        let cfg = IntegratorConfig {
            dt: step,
            t_end: horizon,
            sample_every: usize::MAX,
            hermitize_every: 0,
            store_reduced: Some(vec![0]),
            ..IntegratorConfig::default()
        };
        let traj = integrate(model, rho0, &cfg, &[])?;
        let last = traj.states.last().cloned().expect("final sample always stored");
        Ok((&last.untagged() - &exact).max_abs())
    };
    let coarse = terminal_error(dt)?;
    let fine = terminal_error(dt / 2.0)?;
    Ok((coarse, fine, coarse / fine))
}

fn convergence_order(p: &SystemParams, dt: f64) -> Result<(bool, String)> {
    let (model, rho0) = qubit_oracle_setup(p)?;
    let (coarse, fine, ratio) = order_ratio(&model, &rho0, dt, ORACLE_HORIZON)?;
    Ok((
        ratio >= ORDER_FACTOR_MIN && ratio.is_finite(),
        format!("error {coarse:.2e} at dt = {dt:e}, {fine:.2e} at dt/2, ratio {ratio:.1} (min {ORDER_FACTOR_MIN})"),
    ))
}

fn truncation(p: &SystemParams, dt: f64) -> Result<(bool, String)> {
    let peak = |na: usize, nb: usize| -> Result<f64> {
        let model = build_full_model(&p.with_truncation(na, nb))?;
        let rho0 = basis_density(&model.space, &[0, 1, 0])?;
        let traj = integrate(
            &model,
            &rho0,
            &paper_run_cfg(dt),
            &observable_registry(&model.space)?,
        )?;
        Ok(transfer_result(&traj)?.peak_nb)
    };
    let small = peak(2, 2)?;
    let large = peak(3, 3)?;
    let diff = (small - large).abs();
    Ok((
        diff <= TRUNCATION_TOL,
        format!("peak n_b (2,2) = {small:.9}, (3,3) = {large:.9}, diff {diff:.2e}"),
    ))
}
