//! Implementations of the CLI subcommands, kept free of argument parsing so
//! they can be driven from tests.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{compare_full_vs_effective, transfer_result, Comparison, TransferResult};
use crate::config::{ModelKind, ScenarioConfig};
use crate::error::{Error, Result};
use crate::model::{
    adiabaticity_report, build_effective_model, build_full_model, effective_params, AdiabaticityReport,
    EffectiveParams, SystemParams,
};
use crate::operators::basis_density;
use crate::solver::{integrate, observables_by_name, Trajectory};
use crate::validation::{run_invariant_suite, ValidationOptions, ValidationReport};

pub const RUN_HEADER: &str = "t_us,P0,P1,P2,n_a,n_b,trace_dev,min_eig";
pub const COMPARE_HEADER: &str = "t_us,n_a_full,n_b_full,n_a_eff,n_b_eff";

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

// ---------------------------------------------------------------- effective

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingVerdict {
    Strong,
    Marginal,
    NotStrong,
}

impl fmt::Display for CouplingVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Strong => "strong",
            Self::Marginal => "marginal",
            Self::NotStrong => "not-strong-coupling",
        })
    }
}

const MARGIN_EQUALITY_TOL: f64 = 1e-9;

fn classify(ratio: f64) -> CouplingVerdict {
    if (ratio - 1.0).abs() <= MARGIN_EQUALITY_TOL {
        CouplingVerdict::Marginal
    } else if ratio > 1.0 {
        CouplingVerdict::Strong
    } else {
        CouplingVerdict::NotStrong
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Margin {
    pub rate_name: &'static str,
    pub rate: f64,
    /// λ / rate; infinite for a vanishing rate with λ > 0, zero when λ = 0.
    pub ratio: f64,
    pub verdict: CouplingVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EffectiveReport {
    pub effective: EffectiveParams,
    pub adiabaticity: AdiabaticityReport,
    pub margins: Vec<Margin>,
    pub verdict: CouplingVerdict,
}

impl EffectiveReport {
    pub fn margin(&self, rate_name: &str) -> Option<&Margin> {
        self.margins.iter().find(|m| m.rate_name == rate_name)
    }
}

impl fmt::Display for EffectiveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = &self.effective;
        writeln!(f, "lambda      = {} MHz", e.lambda_eff)?;
        writeln!(f, "lambda1     = {} MHz (electric-mode Stark shift)", e.lambda1)?;
        writeln!(f, "lambda2     = {} MHz (mechanical-mode Stark shift)", e.lambda2)?;
        writeln!(f, "swap time   = {} us", e.swap_time)?;
        let a = &self.adiabaticity;
        let pf = |p: bool| if p { "pass" } else { "FAIL" };
        writeln!(f, "adiabaticity (threshold {}):", a.threshold)?;
        writeln!(
            f,
            "  g1/delta1             = {} {}",
            a.ratio_g1.ratio,
            pf(a.ratio_g1.pass)
        )?;
        writeln!(
            f,
            "  g2/delta2             = {} {}",
            a.ratio_g2.ratio,
            pf(a.ratio_g2.pass)
        )?;
        writeln!(
            f,
            "  Omega^2/(delta1*delta2) = {} {}",
            a.ratio_drive.ratio,
            pf(a.ratio_drive.pass)
        )?;
        writeln!(
            f,
            "  resonance residual    = {} MHz {}",
            a.resonance_residual,
            pf(a.resonance_ok)
        )?;
        writeln!(f, "strong-coupling margins:")?;
        for m in &self.margins {
            writeln!(f, "  lambda/{:<8} = {} ({})", m.rate_name, m.ratio, m.verdict)?;
        }
        write!(f, "verdict: {}", self.verdict)
    }
}

pub fn cmd_effective(cfg: &ScenarioConfig) -> Result<EffectiveReport> {
    let p = &cfg.params;
    let effective = effective_params(p)?;
    let adiabaticity = adiabaticity_report(p, cfg.adiabatic_threshold)?;
    let lambda = effective.lambda_eff;
    let margins: Vec<Margin> = [
        ("kappa_a", p.kappa_a),
        ("kappa_b", p.kappa_b),
        ("Gamma1", p.gamma1),
        ("Gamma2", p.gamma2),
    ]
    .into_iter()
    .map(|(rate_name, rate)| {
        let ratio = if lambda == 0.0 {
            0.0
        } else if rate == 0.0 {
            f64::INFINITY
        } else {
            lambda / rate
        };
        Margin {
            rate_name,
            rate,
            ratio,
            verdict: classify(ratio),
        }
    })
    .collect();
    let verdict = if margins.iter().any(|m| m.verdict == CouplingVerdict::NotStrong) {
        CouplingVerdict::NotStrong
    } else if margins.iter().any(|m| m.verdict == CouplingVerdict::Marginal) {
        CouplingVerdict::Marginal
    } else {
        CouplingVerdict::Strong
    };
    let report = EffectiveReport {
        effective,
        adiabaticity,
        margins,
        verdict,
    };
    if let Some(path) = &cfg.outputs.report {
        fs::write(path, serde_json::to_string_pretty(&report)?)?;
    }
    Ok(report)
}

// ---------------------------------------------------------------------- run

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub trajectory: Trajectory,
    /// `None` when the run diverged before a summary could be formed.
    pub transfer: Option<TransferResult>,
    /// Time and reason of an integration divergence.
    pub diverged: Option<(f64, String)>,
    pub csv: String,
}

impl RunOutcome {
    pub fn summary_line(&self) -> String {
        match (&self.transfer, &self.diverged) {
            (_, Some((t, reason))) => format!("diverged at t = {t} us: {reason}"),
            (Some(r), None) => format!(
                "peak_nb = {:.6} at t = {:.6} us; max P1 = {:.6}; max P2 = {:.6}; terminal |Tr-1| = {:.3e}",
                r.peak_nb, r.t_peak, r.max_p1, r.max_p2, r.terminal_trace_dev
            ),
            (None, None) => "no samples".to_string(),
        }
    }
}

/// Runs the configured model and renders the CSV (header, one row per sample,
/// and a `#` trailer on divergence). The effective model has no qubit, so its
/// rows report P0 = 1, P1 = P2 = 0.
pub fn simulate(cfg: &ScenarioConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let [q, na, nb] = cfg.initial_state;
    let (model, rho0, fixed_obs): (_, _, &[&str]) = match cfg.model {
        ModelKind::Full => {
            let m = build_full_model(&cfg.params)?;
            let rho0 = basis_density(&m.space, &[q, na, nb])?;
            (m, rho0, &["P0", "P1", "P2", "n_a", "n_b"])
        }
        ModelKind::Effective => {
            let m = build_effective_model(&cfg.params, cfg.include_stark)?;
            let rho0 = basis_density(&m.space, &[na, nb])?;
            (m, rho0, &["n_a", "n_b"])
        }
    };
    let mut names: Vec<&str> = fixed_obs.to_vec();
    names.extend(cfg.observables.iter().map(String::as_str));
    let observables = observables_by_name(&model.space, &names)?;

    let (mut trajectory, diverged) = match integrate(&model, &rho0, &cfg.integrator, &observables) {
        Ok(t) => (t, None),
        Err(Error::IntegrationDiverged {
            time,
            reason,
            partial,
        }) => (*partial, Some((time, reason))),
        Err(e) => return Err(e),
    };
    if cfg.model == ModelKind::Effective {
        add_ground_qubit_populations(&mut trajectory);
    }

    let mut csv = String::new();
    csv.push_str(RUN_HEADER);
    for extra in &cfg.observables {
        csv.push(',');
        csv.push_str(extra);
    }
    csv.push('\n');
    let columns: Vec<&[f64]> = ["P0", "P1", "P2", "n_a", "n_b"]
        .iter()
        .copied()
        .chain(cfg.observables.iter().map(String::as_str))
        .map(|n| trajectory.series(n))
        .collect::<Result<_>>()?;
    for (i, t) in trajectory.times.iter().enumerate() {
        let mut row = vec![fmt_f64(*t)];
        row.extend(columns[..5].iter().map(|c| fmt_f64(c[i])));
        row.push(fmt_f64(trajectory.diagnostics.trace_dev[i]));
        row.push(fmt_f64(trajectory.diagnostics.min_eig[i]));
        row.extend(columns[5..].iter().map(|c| fmt_f64(c[i])));
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    if let Some((t, reason)) = &diverged {
        let _ = writeln!(csv, "# integration diverged at t_us={t}: {reason}");
    }
    let transfer = if diverged.is_none() {
        Some(transfer_result(&trajectory)?)
    } else {
        None
    };
    Ok(RunOutcome {
        trajectory,
        transfer,
        diverged,
        csv,
    })
}

fn add_ground_qubit_populations(traj: &mut Trajectory) {
    let n = traj.len();
    for (name, v) in [("P0", 1.0), ("P1", 0.0), ("P2", 0.0)] {
        traj.names.push(name.to_string());
        traj.series.push(vec![v; n]);
    }
}

/// [`simulate`] and write the CSV to `out` (or `outputs.csv`) when given.
pub fn cmd_run(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<RunOutcome> {
    let outcome = simulate(cfg)?;
    if let Some(path) = out.or(cfg.outputs.csv.as_deref()) {
        fs::write(path, &outcome.csv)?;
    }
    Ok(outcome)
}

// ------------------------------------------------------------------ compare

#[derive(Clone, Debug)]
pub struct CompareOutcome {
    pub plain: Comparison,
    /// Second run with Stark shifts in the effective model, when requested.
    pub stark: Option<Comparison>,
    pub csv: String,
}

impl CompareOutcome {
    pub fn summary(&self) -> String {
        let mut s = format!(
            "max |n_a full - eff| = {:.6e}, max |n_b full - eff| = {:.6e}",
            self.plain.max_dev_na, self.plain.max_dev_nb
        );
        if let Some(st) = &self.stark {
            let _ = write!(
                s,
                "\nwith Stark shifts: max |n_a full - eff| = {:.6e}, max |n_b full - eff| = {:.6e}",
                st.max_dev_na, st.max_dev_nb
            );
        }
        s
    }
}

/// Full vs effective comparison. With `include_stark`, both the plain and the
/// Stark-shifted effective runs are reported; the CSV gains the columns
/// `n_a_eff_stark,n_b_eff_stark`.
pub fn cmd_compare(cfg: &ScenarioConfig, include_stark: bool, out: Option<&Path>) -> Result<CompareOutcome> {
    cfg.validate()?;
    let plain = compare_full_vs_effective(&cfg.params, &cfg.integrator, false)?;
    let stark = if include_stark {
        Some(compare_full_vs_effective(&cfg.params, &cfg.integrator, true)?)
    } else {
        None
    };
    let mut csv = String::from(COMPARE_HEADER);
    if stark.is_some() {
        csv.push_str(",n_a_eff_stark,n_b_eff_stark");
    }
    csv.push('\n');
    for i in 0..plain.times.len() {
        let mut row = vec![
            fmt_f64(plain.times[i]),
            fmt_f64(plain.n_a_full[i]),
            fmt_f64(plain.n_b_full[i]),
            fmt_f64(plain.n_a_eff[i]),
            fmt_f64(plain.n_b_eff[i]),
        ];
        if let Some(st) = &stark {
            row.push(fmt_f64(st.n_a_eff[i]));
            row.push(fmt_f64(st.n_b_eff[i]));
        }
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    if let Some(path) = out.or(cfg.outputs.csv.as_deref()) {
        fs::write(path, &csv)?;
    }
    Ok(CompareOutcome { plain, stark, csv })
}

// -------------------------------------------------------------------- sweep

#[derive(Clone, Debug, PartialEq)]
pub struct SweepAxis {
    pub name: String,
    pub values: Vec<f64>,
}

impl SweepAxis {
    /// `name=v1,v2,...` or `name=start:stop:count` (inclusive linear grid).
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, grid) = spec
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("sweep axis `{spec}` is not name=grid")))?;
        let name = name.trim().trim_start_matches("params.").to_string();
        if !SystemParams::FIELD_NAMES.contains(&name.as_str()) {
            return Err(Error::UnknownParameter(name));
        }
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("`{s}` in sweep axis `{spec}` is not a number")))
        };
        let values = if grid.contains(':') {
            let parts: Vec<&str> = grid.split(':').collect();
            if parts.len() != 3 {
                return Err(Error::Config(format!("range `{grid}` must be start:stop:count")));
            }
            let (start, stop) = (num(parts[0])?, num(parts[1])?);
            let count: usize = parts[2]
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad count in `{grid}`")))?;
            if count < 2 {
                return Err(Error::Config(format!("grid for {name} needs at least 2 points")));
            }
            (0..count)
                .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
                .collect()
        } else {
            grid.split(',').map(num).collect::<Result<Vec<_>>>()?
        };
        if values.len() < 2 {
            return Err(Error::Config(format!("grid for {name} needs at least 2 points")));
        }
        Ok(Self { name, values })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub values: Vec<f64>,
    pub lambda: Option<f64>,
    pub ratio_g1: Option<f64>,
    pub ratio_g2: Option<f64>,
    pub ratio_drive: Option<f64>,
    pub resonance_residual: Option<f64>,
    pub peak_nb: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub axes: Vec<String>,
    pub rows: Vec<SweepRow>,
    pub csv: String,
}

fn grid_points(axes: &[SweepAxis]) -> Vec<Vec<f64>> {
    let mut points = vec![Vec::new()];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    points
}

fn sweep_point(cfg: &ScenarioConfig, axes: &[SweepAxis], values: &[f64], full: bool) -> SweepRow {
    let mut row = SweepRow {
        values: values.to_vec(),
        lambda: None,
        ratio_g1: None,
        ratio_g2: None,
        ratio_drive: None,
        resonance_residual: None,
        peak_nb: None,
        error: None,
    };
    let result = (|| -> Result<()> {
        let mut point = cfg.clone();
        for (axis, &v) in axes.iter().zip(values) {
            point.params.set_field(&axis.name, v)?;
        }
        point.validate()?;
        let eff = effective_params(&point.params)?;
        let adiabatic = adiabaticity_report(&point.params, point.adiabatic_threshold)?;
        row.lambda = Some(eff.lambda_eff);
        row.ratio_g1 = Some(adiabatic.ratio_g1.ratio);
        row.ratio_g2 = Some(adiabatic.ratio_g2.ratio);
        row.ratio_drive = Some(adiabatic.ratio_drive.ratio);
        row.resonance_residual = Some(adiabatic.resonance_residual);
        if full {
            let point = ScenarioConfig {
                model: ModelKind::Full,
                ..point
            };
            let outcome = simulate(&point)?;
            match (outcome.transfer, outcome.diverged) {
                (Some(t), None) => row.peak_nb = Some(t.peak_nb),
                (_, Some((time, reason))) => {
                    return Err(Error::Config(format!("diverged at t = {time} us: {reason}")))
                }
                _ => {}
            }
        }
        Ok(())
    })();
    if let Err(e) = result {
        row.error = Some(e.to_string().replace([',', '\n'], ";"));
    }
    row
}

/// Evaluates every grid point (in parallel on `workers` threads, 0 = rayon
/// default). Rows come back in grid order: the first axis varies slowest.
pub fn cmd_sweep(
    cfg: &ScenarioConfig,
    axes: &[SweepAxis],
    full: bool,
    workers: usize,
    out: Option<&Path>,
) -> Result<SweepOutcome> {
    if axes.is_empty() || axes.len() > 2 {
        return Err(Error::Config(format!(
            "sweep needs 1 or 2 axes, got {}",
            axes.len()
        )));
    }
    for axis in axes {
        if !SystemParams::FIELD_NAMES.contains(&axis.name.as_str()) {
            return Err(Error::UnknownParameter(axis.name.clone()));
        }
        if axis.values.len() < 2 {
            return Err(Error::Config(format!(
                "grid for {} needs at least 2 points",
                axis.name
            )));
        }
    }
    let points = grid_points(axes);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        points
            .par_iter()
            .map(|v| sweep_point(cfg, axes, v, full))
            .collect()
    });

    let mut csv = String::new();
    for axis in axes {
        csv.push_str(&axis.name);
        csv.push(',');
    }
    csv.push_str("lambda,ratio_g1,ratio_g2,ratio_drive,resonance_residual,peak_nb,error\n");
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    for row in &rows {
        let mut cells: Vec<String> = row.values.iter().map(|&v| fmt_f64(v)).collect();
        cells.extend([
            opt(row.lambda),
            opt(row.ratio_g1),
            opt(row.ratio_g2),
            opt(row.ratio_drive),
            opt(row.resonance_residual),
            opt(row.peak_nb),
            row.error.clone().unwrap_or_default(),
        ]);
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    if let Some(path) = out.or(cfg.outputs.csv.as_deref()) {
        fs::write(path, &csv)?;
    }
    Ok(SweepOutcome {
        axes: axes.iter().map(|a| a.name.clone()).collect(),
        rows,
        csv,
    })
}

// ----------------------------------------------------------------- validate

pub fn cmd_validate(dt_override: Option<f64>) -> ValidationReport {
    run_invariant_suite(&ValidationOptions { dt: dt_override })
}
