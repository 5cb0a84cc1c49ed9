//! Headline quantities extracted from trajectories.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{build_effective_model, build_full_model, SystemParams};
use crate::operators::basis_density;
use crate::solver::{integrate, observables_by_name, IntegratorConfig, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransferResult {
    /// Maximum ⟨b†b⟩ over the samples.
    pub peak_nb: f64,
    /// Earliest sample time attaining `peak_nb` (µs).
    pub t_peak: f64,
    pub max_p1: f64,
    pub max_p2: f64,
    pub terminal_trace_dev: f64,
}

fn max_of(series: &[f64]) -> f64 {
    series.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn transfer_result(traj: &Trajectory) -> Result<TransferResult> {
    let nb = traj.series("n_b")?;
    let p1 = traj.series("P1")?;
    let p2 = traj.series("P2")?;
    if nb.is_empty() {
        return Err(Error::MissingObservable("n_b (empty trajectory)".into()));
    }
    let mut best = 0;
    for (i, &v) in nb.iter().enumerate() {
        if v > nb[best] {
            best = i;
        }
    }
    Ok(TransferResult {
        peak_nb: nb[best],
        t_peak: traj.times[best],
        max_p1: max_of(p1),
        max_p2: max_of(p2),
        terminal_trace_dev: traj.diagnostics.trace_dev.last().copied().unwrap_or(0.0),
    })
}

/// Half-swap time from the maximum of `n_b`, refined by the parabola through
/// the discrete maximum and its two neighbours.
pub fn swap_time_estimate(traj: &Trajectory) -> Result<f64> {
    let nb = traj.series("n_b")?;
    let n = nb.len();
    let mut best = 0;
    for (i, &v) in nb.iter().enumerate() {
        if v > nb[best] {
            best = i;
        }
    }
    if best == 0 || best + 1 >= n {
        return Err(Error::HorizonTooShort("n_b".into()));
    }
    let (x0, x1, x2) = (traj.times[best - 1], traj.times[best], traj.times[best + 1]);
    let (y0, y1, y2) = (nb[best - 1], nb[best], nb[best + 1]);
    // vertex of the interpolating parabola (non-uniform spacing allowed)
    let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
    let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    if den == 0.0 {
        return Ok(x1);
    }
    Ok((x1 - 0.5 * num / den).clamp(x0, x2))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub times: Vec<f64>,
    pub n_a_full: Vec<f64>,
    pub n_b_full: Vec<f64>,
    pub n_a_eff: Vec<f64>,
    pub n_b_eff: Vec<f64>,
    pub max_dev_na: f64,
    pub max_dev_nb: f64,
    pub include_stark: bool,
}

impl Comparison {
    pub fn max_deviation(&self) -> f64 {
        self.max_dev_na.max(self.max_dev_nb)
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Full model from |0⟩|1_a⟩|0_b⟩ against the effective beam-splitter model from
/// |1_a⟩|0_b⟩ on the same time grid.
pub fn compare_full_vs_effective(
    p: &SystemParams,
    cfg: &IntegratorConfig,
    include_stark: bool,
) -> Result<Comparison> {
    let full = build_full_model(p)?;
    let eff = build_effective_model(p, include_stark)?;

    let rho_full = basis_density(&full.space, &[0, 1, 0])?;
    let rho_eff = basis_density(&eff.space, &[1, 0])?;
    let obs_full = observables_by_name(&full.space, &["n_a", "n_b"])?;
    let obs_eff = observables_by_name(&eff.space, &["n_a", "n_b"])?;

    let cfg = IntegratorConfig {
        store_reduced: None,
        ..cfg.clone()
    };
    let tf = integrate(&full, &rho_full, &cfg, &obs_full)?;
    let te = integrate(&eff, &rho_eff, &cfg, &obs_eff)?;
    debug_assert_eq!(tf.times, te.times);

    let n_a_full = tf.series("n_a")?.to_vec();
    let n_b_full = tf.series("n_b")?.to_vec();
    let n_a_eff = te.series("n_a")?.to_vec();
    let n_b_eff = te.series("n_b")?.to_vec();
    Ok(Comparison {
        max_dev_na: max_abs_diff(&n_a_full, &n_a_eff),
        max_dev_nb: max_abs_diff(&n_b_full, &n_b_eff),
        times: tf.times,
        n_a_full,
        n_b_full,
        n_a_eff,
        n_b_eff,
        include_stark,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Diagnostics;
    use std::f64::consts::TAU;

    fn synthetic(times: Vec<f64>, nb: Vec<f64>) -> Trajectory {
        let n = times.len();
        Trajectory {
            names: vec!["n_b".into(), "P1".into(), "P2".into()],
            series: vec![nb, vec![0.01; n], vec![0.02; n]],
            diagnostics: Diagnostics {
                trace_dev: vec![0.0; n],
                ..Default::default()
            },
            times,
            states: Vec::new(),
        }
    }

    #[test]
    fn swap_estimate_on_analytic_curves() {
        for lambda in [1.0, 0.5] {
            let dt = 1e-3;
            let times: Vec<f64> = (0..=800).map(|i| i as f64 * dt).collect();
            let nb = times.iter().map(|t| (TAU * lambda * t).sin().powi(2)).collect();
            let traj = synthetic(times, nb);
            let t = swap_time_estimate(&traj).unwrap();
            assert!((t - 1.0 / (4.0 * lambda)).abs() < dt, "lambda={lambda}: {t}");
            let r = transfer_result(&traj).unwrap();
            assert!((r.peak_nb - 1.0).abs() < 1e-4);
            assert_eq!((r.max_p1, r.max_p2), (0.01, 0.02));
        }
    }

    #[test]
    fn parabola_recovers_offgrid_vertex() {
        let times: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let nb = times.iter().map(|t| 1.0 - (t - 0.437f64).powi(2)).collect();
        let t = swap_time_estimate(&synthetic(times, nb)).unwrap();
        assert!((t - 0.437).abs() < 1e-12);
    }

    #[test]
    fn boundary_maximum_is_rejected() {
        let times: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let rising = synthetic(times.clone(), vec![0.0, 0.1, 0.2, 0.3, 0.4]);
        assert!(matches!(
            swap_time_estimate(&rising),
            Err(Error::HorizonTooShort(_))
        ));
        let falling = synthetic(times, vec![0.4, 0.3, 0.2, 0.1, 0.0]);
        assert!(matches!(
            swap_time_estimate(&falling),
            Err(Error::HorizonTooShort(_))
        ));
    }

    #[test]
    fn missing_series_is_an_error() {
        let mut traj = synthetic(vec![0.0, 1.0], vec![0.0, 0.0]);
        traj.names[1] = "Q1".into();
        assert!(matches!(transfer_result(&traj), Err(Error::MissingObservable(_))));
    }

    #[test]
    fn earliest_peak_wins() {
        let traj = synthetic(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 0.5, 0.5, 0.1]);
        assert_eq!(transfer_result(&traj).unwrap().t_peak, 1.0);
    }

    #[test]
    fn uncoupled_comparison_is_static() {
        let mut p = SystemParams::paper_fig2().lossless();
        p.g1 = 0.0;
        p.g2 = 0.0;
        let cfg = IntegratorConfig {
            dt: 1e-4,
            t_end: 0.05,
            ..Default::default()
        };
        let c = compare_full_vs_effective(&p, &cfg, false).unwrap();
        assert_eq!(c.max_deviation(), 0.0);
        assert!(c.n_b_full.iter().all(|&v| v == 0.0));
    }
}
