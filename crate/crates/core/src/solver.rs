//! Lindblad master-equation integration.
//!
//! The primary integrator is fixed-step classic RK4 on the density matrix. An
//! independent route builds the Liouvillian superoperator (column-stacking
//! convention, `vec(AXB) = (Bᵀ ⊗ A) vec(X)`) and propagates with its exponential.

use log::warn;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{excitation_operator, LindbladModel};
use crate::operators::{
    eigenvalues_hermitian, embed, matrix_exponential, number, partial_trace, qubit_projector, ComplexMatrix,
    HilbertSpace, C64, PHONON_SLOT, PHOTON_SLOT, QUBIT_LEVELS, QUBIT_SLOT,
};

/// Largest Hilbert-space dimension accepted by the Liouvillian oracle.
pub const MAX_ORACLE_DIM: usize = 16;

/// Trace drift or negative eigenvalue beyond this aborts an integration.
pub const DIVERGENCE_TOL: f64 = 1e-6;

/// `dt · ‖H‖` above this triggers a stability warning.
pub const STABILITY_BOUND: f64 = 0.1;

pub const DEFAULT_DT: f64 = 2e-5;

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    /// Step (µs).
    pub dt: f64,
    /// Horizon (µs).
    pub t_end: f64,
    pub sample_every: usize,
    /// Steps between `ρ ← (ρ + ρ†)/2`; 0 disables the projection.
    pub hermitize_every: usize,
    #[serde(default = "default_true")]
    pub check_trace: bool,
    #[serde(default = "default_true")]
    pub check_positivity: bool,
    /// Subsystem slots whose reduced state is stored at every sample.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub store_reduced: Option<Vec<usize>>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            t_end: 0.5,
            sample_every: 10,
            hermitize_every: 100,
            check_trace: true,
            check_positivity: true,
            store_reduced: None,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, reason: String| Error::InvalidParameter {
            name: name.into(),
            reason,
        };
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(bad("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= self.dt && self.t_end.is_finite()) {
            return Err(bad("t_end", format!("must be >= dt, got {}", self.t_end)));
        }
        if self.sample_every < 1 {
            return Err(bad("sample_every", "must be >= 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        ((self.t_end / self.dt).round() as usize).max(1)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    /// `|Tr ρ − 1|`
    pub trace_dev: Vec<f64>,
    /// `max|ρ − ρ†|`
    pub hermiticity: Vec<f64>,
    pub min_eig: Vec<f64>,
    /// `Tr ρ²`
    pub purity: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub names: Vec<String>,
    pub series: Vec<Vec<f64>>,
    pub diagnostics: Diagnostics,
    /// Reduced states at each sample when requested in the config.
    pub states: Vec<ComplexMatrix>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn series(&self, name: &str) -> Result<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.series[i].as_slice())
            .ok_or_else(|| Error::MissingObservable(name.to_string()))
    }

    /// Keeps every `stride`-th sample.
    pub fn resampled(&self, stride: usize) -> Self {
        let stride = stride.max(1);
        let pick = |v: &[f64]| v.iter().step_by(stride).copied().collect::<Vec<_>>();
        Self {
            times: pick(&self.times),
            names: self.names.clone(),
            series: self.series.iter().map(|s| pick(s)).collect(),
            diagnostics: Diagnostics {
                trace_dev: pick(&self.diagnostics.trace_dev),
                hermiticity: pick(&self.diagnostics.hermiticity),
                min_eig: pick(&self.diagnostics.min_eig),
                purity: pick(&self.diagnostics.purity),
            },
            states: self.states.iter().step_by(stride).cloned().collect(),
        }
    }
}

/// A named Hermitian operator sampled along a trajectory.
#[derive(Clone, Debug)]
pub struct Observable {
    pub name: String,
    pub operator: ComplexMatrix,
}

impl Observable {
    pub fn new(name: impl Into<String>, operator: ComplexMatrix) -> Self {
        Self {
            name: name.into(),
            operator,
        }
    }
}

/// Every observable known for a space.
///
/// Qubit-only `[3]`: P0, P1, P2. Two modes: n_a, n_b, N. Full tripartite
/// space: P0, P1, P2, n_a, n_b, N.
pub fn observable_registry(space: &HilbertSpace) -> Result<Vec<Observable>> {
    let dims = space.dims();
    let populations = |slot: usize| -> Result<Vec<Observable>> {
        (0..QUBIT_LEVELS)
            .map(|k| {
                Ok(Observable::new(
                    format!("P{k}"),
                    embed(&qubit_projector(k)?, slot, space)?,
                ))
            })
            .collect()
    };
    match dims {
        [3] => populations(QUBIT_SLOT),
        [na, nb] => {
            let n_a = embed(&number(*na)?, 0, space)?;
            let n_b = embed(&number(*nb)?, 1, space)?;
            let total = &n_a + &n_b;
            Ok(vec![
                Observable::new("n_a", n_a),
                Observable::new("n_b", n_b),
                Observable::new("N", total),
            ])
        }
        [3, na, nb] => {
            let mut obs = populations(QUBIT_SLOT)?;
            obs.push(Observable::new("n_a", embed(&number(*na)?, PHOTON_SLOT, space)?));
            obs.push(Observable::new("n_b", embed(&number(*nb)?, PHONON_SLOT, space)?));
            obs.push(Observable::new("N", excitation_operator(space)?));
            Ok(obs)
        }
        _ => Err(Error::InvalidDimension(format!(
            "no observable registry for space {space}"
        ))),
    }
}

/// Looks up names in [`observable_registry`].
pub fn observables_by_name(space: &HilbertSpace, names: &[&str]) -> Result<Vec<Observable>> {
    let registry = observable_registry(space)?;
    names
        .iter()
        .map(|name| {
            registry
                .iter()
                .find(|o| o.name == *name)
                .cloned()
                .ok_or_else(|| Error::MissingObservable(name.to_string()))
        })
        .collect()
}

/// Nonzero entries `(row, col, value)` of an operator.
struct Entries(Vec<(usize, usize, C64)>);

impl Entries {
    fn of(m: &DMatrix<C64>) -> Self {
        let mut out = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v.re != 0.0 || v.im != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        Self(out)
    }
}

/// Precomputed pieces of the generator.
///
/// `ρ̇ = −i(H_eff ρ − ρ H_eff†) + Σ r AρA†` with `H_eff = H − (i/2) Σ r A†A`.
/// Matrices are stored densely; products iterate over the operators' nonzero
/// entries, which are O(d) for every operator in these models.
struct Generator {
    dim: usize,
    h_eff: Entries,
    jumps: Vec<(f64, Entries)>,
}

impl Generator {
    fn new(model: &LindbladModel) -> Self {
        let mut h_eff = model.hamiltonian.as_dmatrix().clone();
        let half_i = C64::new(0.0, 0.5);
        let mut jumps = Vec::with_capacity(model.channels.len());
        for ch in &model.channels {
            let a = ch.collapse.as_dmatrix();
            h_eff -= (a.adjoint() * a) * (half_i * ch.rate);
            jumps.push((ch.rate, Entries::of(a)));
        }
        Self {
            dim: model.dim(),
            h_eff: Entries::of(&h_eff),
            jumps,
        }
    }

    fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let d = self.dim;
        let mut out = DMatrix::<C64>::zeros(d, d);
        // −i H_eff ρ + i ρ H_eff†
        let minus_i = C64::new(0.0, -1.0);
        for &(i, j, h) in &self.h_eff.0 {
            let left = minus_i * h;
            let right = (minus_i * h).conj();
            for k in 0..d {
                out[(i, k)] += left * rho[(j, k)];
                // (ρ H†)_{k i} = Σ_j ρ_{k j} conj(H_{i j})
                out[(k, i)] += right * rho[(k, j)];
            }
        }
        for (rate, a) in &self.jumps {
            for &(i, j, x) in &a.0 {
                let xr = x * *rate;
                for &(k, l, y) in &a.0 {
                    out[(i, k)] += xr * rho[(j, l)] * y.conj();
                }
            }
        }
        out
    }
}

fn check_dims(model: &LindbladModel, rho: &ComplexMatrix) -> Result<()> {
    let d = model.dim();
    if rho.rows() != d || rho.cols() != d {
        return Err(Error::InvalidDimension(format!(
            "state is {}x{}, model dimension {d}",
            rho.rows(),
            rho.cols()
        )));
    }
    Ok(())
}

/// `−i[H,ρ] + Σ r (AρA† − ½{A†A, ρ})`
pub fn lindblad_rhs(model: &LindbladModel, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_dims(model, rho)?;
    let out = ComplexMatrix::from_dmatrix(Generator::new(model).apply(rho.as_dmatrix()));
    match rho.space() {
        Some(s) => out.with_space(s.clone()),
        None => Ok(out),
    }
}

fn purity(rho: &DMatrix<C64>) -> f64 {
    // Tr ρ² = Σ |ρ_ij|² for Hermitian ρ
    rho.iter().map(|z| z.norm_sqr()).sum()
}

fn spectral_radius(h: &ComplexMatrix) -> f64 {
    eigenvalues_hermitian(h)
        .map(|v| v.iter().fold(0.0_f64, |m, x| m.max(x.abs())))
        .unwrap_or_else(|_| h.frobenius_norm())
}

/// Fixed-step RK4 integration sampling the given observables.
pub fn integrate(
    model: &LindbladModel,
    rho0: &ComplexMatrix,
    cfg: &IntegratorConfig,
    observables: &[Observable],
) -> Result<Trajectory> {
    cfg.validate()?;
    check_dims(model, rho0)?;
    let d = model.dim();
    let herm = rho0.hermiticity_residual();
    if herm > 1e-10 {
        return Err(Error::HermiticityViolation(format!(
            "initial state max|ρ-ρ†| = {herm:e}"
        )));
    }
    let tr = rho0.trace();
    if (tr - C64::new(1.0, 0.0)).norm() > 1e-10 {
        return Err(Error::InvalidParameter {
            name: "initial_state".into(),
            reason: format!("trace {tr} differs from 1"),
        });
    }
    let min0 = eigenvalues_hermitian(rho0)?[0];
    if min0 < -1e-10 {
        return Err(Error::InvalidParameter {
            name: "initial_state".into(),
            reason: format!("not positive semidefinite (min eigenvalue {min0:e})"),
        });
    }
    for obs in observables {
        if obs.operator.rows() != d || obs.operator.cols() != d {
            return Err(Error::InvalidDimension(format!(
                "observable {} does not match model dimension {d}",
                obs.name
            )));
        }
    }
    if let Some(keep) = &cfg.store_reduced {
        if keep.iter().any(|&s| s >= model.space.num_subsystems()) {
            return Err(Error::InvalidDimension(format!(
                "store_reduced slots {keep:?} out of range for {}",
                model.space
            )));
        }
    }

    let norm_h = spectral_radius(&model.hamiltonian);
    if cfg.dt * norm_h > STABILITY_BOUND {
        warn!(
            "dt * |H| = {:.3} exceeds {STABILITY_BOUND}; RK4 may be inaccurate or unstable",
            cfg.dt * norm_h
        );
    }

    let gen = Generator::new(model);
    let n_steps = cfg.steps();
    let dt = cfg.dt;
    let h = C64::new(dt, 0.0);
    let half = C64::new(0.5 * dt, 0.0);
    let sixth = C64::new(dt / 6.0, 0.0);
    let two = C64::new(2.0, 0.0);

    let mut traj = Trajectory {
        names: observables.iter().map(|o| o.name.clone()).collect(),
        series: vec![Vec::new(); observables.len()],
        ..Default::default()
    };
    let mut rho = rho0.as_dmatrix().clone();

    for step in 0..=n_steps {
        if step > 0 {
            let k1 = gen.apply(&rho);
            let k2 = gen.apply(&(&rho + &k1 * half));
            let k3 = gen.apply(&(&rho + &k2 * half));
            let k4 = gen.apply(&(&rho + &k3 * h));
            rho += (k1 + (k2 + k3) * two + k4) * sixth;
            if cfg.hermitize_every > 0 && step % cfg.hermitize_every == 0 {
                rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
            }
        }
        if step % cfg.sample_every == 0 || step == n_steps {
            let t = step as f64 * dt;
            sample(&mut traj, &rho, t, model, cfg, observables)?;
        }
    }
    Ok(traj)
}

fn sample(
    traj: &mut Trajectory,
    rho: &DMatrix<C64>,
    t: f64,
    model: &LindbladModel,
    cfg: &IntegratorConfig,
    observables: &[Observable],
) -> Result<()> {
    let state = ComplexMatrix::from_dmatrix(rho.clone());
    let trace_dev = (state.trace() - C64::new(1.0, 0.0)).norm();
    let hermiticity = state.hermiticity_residual();
    let finite = rho.iter().all(|z| z.re.is_finite() && z.im.is_finite());
    let min_eig = if finite {
        eigenvalues_hermitian(&state.hermitian_part())
            .map(|v| v[0])
            .unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };

    traj.times.push(t);
    traj.diagnostics.trace_dev.push(trace_dev);
    traj.diagnostics.hermiticity.push(hermiticity);
    traj.diagnostics.min_eig.push(min_eig);
    traj.diagnostics.purity.push(purity(rho));
    for (obs, series) in observables.iter().zip(traj.series.iter_mut()) {
        // Real part of Tr(Oρ); the imaginary part is bounded by the hermiticity residual.
        let mut tr = 0.0;
        let op = obs.operator.as_dmatrix();
        for i in 0..op.nrows() {
            for j in 0..op.ncols() {
                tr += (op[(i, j)] * rho[(j, i)]).re;
            }
        }
        series.push(tr);
    }
    if let Some(keep) = &cfg.store_reduced {
        let tagged = state.clone().with_space(model.space.clone())?;
        traj.states.push(partial_trace(&tagged, keep, &model.space)?);
    }

    let reason = if !finite {
        Some("state contains non-finite entries".to_string())
    } else if cfg.check_trace && trace_dev > DIVERGENCE_TOL {
        Some(format!("trace deviation {trace_dev:e}"))
    } else if cfg.check_positivity && (min_eig.is_nan() || min_eig < -DIVERGENCE_TOL) {
        Some(format!("minimum eigenvalue {min_eig:e}"))
    } else {
        None
    };
    if let Some(reason) = reason {
        return Err(Error::IntegrationDiverged {
            time: t,
            reason,
            partial: Box::new(std::mem::take(traj)),
        });
    }
    Ok(())
}

fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

/// Column-stacking superoperator `L` with `vec(ρ̇) = L · vec(ρ)`.
pub fn liouvillian_superoperator(model: &LindbladModel) -> Result<ComplexMatrix> {
    let d = model.dim();
    if d > MAX_ORACLE_DIM {
        return Err(Error::OracleSize {
            dim: d,
            max: MAX_ORACLE_DIM,
        });
    }
    let id = DMatrix::<C64>::identity(d, d);
    let h = model.hamiltonian.as_dmatrix();
    let mut l = (kron(&id, h) - kron(&h.transpose(), &id)) * C64::new(0.0, -1.0);
    for ch in &model.channels {
        let a = ch.collapse.as_dmatrix();
        let ada = a.adjoint() * a;
        let r = C64::new(ch.rate, 0.0);
        l += (kron(&a.map(|z| z.conj()), a)
            - kron(&id, &ada) * C64::new(0.5, 0.0)
            - kron(&ada.transpose(), &id) * C64::new(0.5, 0.0))
            * r;
    }
    Ok(ComplexMatrix::from_dmatrix(l))
}

/// `ρ(t)` from `vec(ρ(t)) = exp(L t) vec(ρ₀)`.
pub fn propagate_expm(model: &LindbladModel, rho0: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    check_dims(model, rho0)?;
    let l = liouvillian_superoperator(model)?;
    let prop = matrix_exponential(&l.scale_real(t))?;
    let out = ComplexMatrix::unvectorize(&(&prop * &rho0.vectorize()), model.dim())?;
    match rho0.space() {
        Some(s) => out.with_space(s.clone()),
        None => Ok(out),
    }
}

/// Oracle states at each requested time; the superoperator is built once.
pub fn propagate_expm_series(
    model: &LindbladModel,
    rho0: &ComplexMatrix,
    times: &[f64],
) -> Result<Vec<ComplexMatrix>> {
    check_dims(model, rho0)?;
    let l = liouvillian_superoperator(model)?;
    let v0 = rho0.vectorize();
    times
        .iter()
        .map(|&t| {
            let prop = matrix_exponential(&l.scale_real(t))?;
            let out = ComplexMatrix::unvectorize(&(&prop * &v0), model.dim())?;
            match rho0.space() {
                Some(s) => out.with_space(s.clone()),
                None => Ok(out),
            }
        })
        .collect()
}
