//! Physical parameters and the operators built from them.
//!
//! Parameters are ordinary frequencies in MHz. Operators are returned in
//! angular units (rad/µs), so a frequency `ν` enters as `2πν` and time is in µs.
//!
//! The full Hamiltonian is written in the frame co-rotating with
//! `ω_a a†a + ω_b b†b + ω_b|1⟩⟨1| + ω_a|2⟩⟨2|`. At three-photon resonance
//! (`ω_a = ω_b + ω`) every coupling is static there and the bare qubit levels
//! sit at the detunings `δ₂` (level 1) and `δ₁` (level 2).

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{
    annihilation, embed, number, qubit_projector, qubit_transition, qubit_z, ComplexMatrix, HilbertSpace,
    PHONON_SLOT, PHOTON_SLOT, QUBIT_SLOT,
};

pub const DEFAULT_RESONANCE_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_ADIABATIC_THRESHOLD: f64 = 0.2;

fn default_resonance_tolerance() -> f64 {
    DEFAULT_RESONANCE_TOLERANCE
}

/// Frequencies, couplings and rates of the qubit + two-resonator system (MHz).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// ω₁₀, splitting of levels 0 and 1.
    pub omega10: f64,
    /// ω₂₁, splitting of levels 1 and 2.
    pub omega21: f64,
    pub omega_a: f64,
    pub omega_b: f64,
    pub omega_drive: f64,
    /// Drive amplitude Ω on the 1↔2 transition.
    #[serde(rename = "Omega")]
    pub drive_amplitude: f64,
    pub g1: f64,
    pub g2: f64,
    pub kappa_a: f64,
    pub kappa_b: f64,
    #[serde(rename = "Gamma1")]
    pub gamma1: f64,
    #[serde(rename = "Gamma2")]
    pub gamma2: f64,
    pub n_a: usize,
    pub n_b: usize,
    #[serde(default = "default_resonance_tolerance")]
    pub resonance_tolerance: f64,
}

impl SystemParams {
    /// Field names accepted by [`set_field`](Self::set_field), in config spelling.
    pub const FIELD_NAMES: [&'static str; 15] = [
        "omega10",
        "omega21",
        "omega_a",
        "omega_b",
        "omega_drive",
        "Omega",
        "g1",
        "g2",
        "kappa_a",
        "kappa_b",
        "Gamma1",
        "Gamma2",
        "n_a",
        "n_b",
        "resonance_tolerance",
    ];

    /// Parameters of the main transfer scenario: diamond nanomechanical resonator,
    /// λ = 1 MHz.
    pub fn paper_fig2() -> Self {
        Self {
            omega10: 1720.0,
            omega21: 4280.0,
            omega_a: 5680.0,
            omega_b: 1400.0,
            omega_drive: 4280.0,
            drive_amplitude: 64.0,
            g1: 40.0,
            g2: 40.0,
            kappa_a: 0.005,
            kappa_b: 0.1,
            gamma1: 0.01,
            gamma2: 0.1,
            n_a: 2,
            n_b: 2,
            resonance_tolerance: DEFAULT_RESONANCE_TOLERANCE,
        }
    }

    /// Low-frequency aluminium resonator: the mechanical coupling drops tenfold,
    /// with the detunings held fixed.
    pub fn aluminium_low_freq() -> Self {
        Self {
            g2: 4.0,
            ..Self::paper_fig2()
        }
    }

    pub fn omega20(&self) -> f64 {
        self.omega10 + self.omega21
    }

    pub fn resonance_residual(&self) -> f64 {
        (self.omega_a - self.omega_b - self.omega_drive).abs()
    }

    /// Same system with every dissipation rate set to zero.
    pub fn lossless(&self) -> Self {
        Self {
            kappa_a: 0.0,
            kappa_b: 0.0,
            gamma1: 0.0,
            gamma2: 0.0,
            ..self.clone()
        }
    }

    pub fn with_truncation(&self, n_a: usize, n_b: usize) -> Self {
        Self {
            n_a,
            n_b,
            ..self.clone()
        }
    }

    pub fn get_field(&self, name: &str) -> Result<f64> {
        Ok(match name {
            "omega10" => self.omega10,
            "omega21" => self.omega21,
            "omega_a" => self.omega_a,
            "omega_b" => self.omega_b,
            "omega_drive" => self.omega_drive,
            "Omega" => self.drive_amplitude,
            "g1" => self.g1,
            "g2" => self.g2,
            "kappa_a" => self.kappa_a,
            "kappa_b" => self.kappa_b,
            "Gamma1" => self.gamma1,
            "Gamma2" => self.gamma2,
            "n_a" => self.n_a as f64,
            "n_b" => self.n_b as f64,
            "resonance_tolerance" => self.resonance_tolerance,
            _ => return Err(Error::UnknownParameter(name.to_string())),
        })
    }

    pub fn set_field(&mut self, name: &str, value: f64) -> Result<()> {
        let as_count = |v: f64| -> Result<usize> {
            if v.fract() != 0.0 || v < 0.0 {
                return Err(Error::InvalidParameter {
                    name: name.to_string(),
                    reason: format!("{v} is not a non-negative integer"),
                });
            }
            Ok(v as usize)
        };
        match name {
            "omega10" => self.omega10 = value,
            "omega21" => self.omega21 = value,
            "omega_a" => self.omega_a = value,
            "omega_b" => self.omega_b = value,
            "omega_drive" => self.omega_drive = value,
            "Omega" => self.drive_amplitude = value,
            "g1" => self.g1 = value,
            "g2" => self.g2 = value,
            "kappa_a" => self.kappa_a = value,
            "kappa_b" => self.kappa_b = value,
            "Gamma1" => self.gamma1 = value,
            "Gamma2" => self.gamma2 = value,
            "n_a" => self.n_a = as_count(value)?,
            "n_b" => self.n_b = as_count(value)?,
            "resonance_tolerance" => self.resonance_tolerance = value,
            _ => return Err(Error::UnknownParameter(name.to_string())),
        }
        Ok(())
    }

    /// Checks signs and truncations. Detuning signs are checked separately by
    /// [`derive_detunings`], which only gates the effective model.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("omega10", self.omega10),
            ("omega21", self.omega21),
            ("omega_a", self.omega_a),
            ("omega_b", self.omega_b),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: name.into(),
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        let non_negative = [
            ("omega_drive", self.omega_drive),
            ("Omega", self.drive_amplitude),
            ("g1", self.g1),
            ("g2", self.g2),
            ("resonance_tolerance", self.resonance_tolerance),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: name.into(),
                    reason: format!("must be non-negative and finite, got {v}"),
                });
            }
        }
        for (name, v) in self.rates() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidRate { name, value: v });
            }
        }
        for (name, n) in [("n_a", self.n_a), ("n_b", self.n_b)] {
            if n < 2 {
                return Err(Error::InvalidParameter {
                    name: name.into(),
                    reason: format!("Fock truncation must be >= 2, got {n}"),
                });
            }
        }
        Ok(())
    }

    fn rates(&self) -> [(&'static str, f64); 4] {
        [
            ("kappa_a", self.kappa_a),
            ("kappa_b", self.kappa_b),
            ("Gamma1", self.gamma1),
            ("Gamma2", self.gamma2),
        ]
    }

    pub fn space(&self) -> Result<HilbertSpace> {
        HilbertSpace::tripartite(self.n_a, self.n_b)
    }

    pub fn mode_space(&self) -> Result<HilbertSpace> {
        HilbertSpace::modes(self.n_a, self.n_b)
    }
}

/// One dissipation channel `rate · D[collapse]`, rate in rad/µs.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    pub label: &'static str,
    pub rate: f64,
    pub collapse: ComplexMatrix,
}

/// Hamiltonian plus dissipation channels: `ρ̇ = -i[H, ρ] + Σ rate·D[A]ρ`.
#[derive(Clone, Debug)]
pub struct LindbladModel {
    pub hamiltonian: ComplexMatrix,
    pub channels: Vec<Channel>,
    pub space: HilbertSpace,
}

impl LindbladModel {
    pub fn new(hamiltonian: ComplexMatrix, channels: Vec<Channel>, space: HilbertSpace) -> Result<Self> {
        let d = space.total_dim();
        if hamiltonian.rows() != d || hamiltonian.cols() != d {
            return Err(Error::InvalidDimension(format!(
                "Hamiltonian is {}x{}, space {space} has dimension {d}",
                hamiltonian.rows(),
                hamiltonian.cols()
            )));
        }
        let scale = hamiltonian.max_abs().max(1.0);
        let residual = hamiltonian.hermiticity_residual();
        if residual > 1e-10 * scale {
            return Err(Error::HermiticityViolation(format!(
                "Hamiltonian max|H - H†| = {residual:e}"
            )));
        }
        for ch in &channels {
            if ch.rate.is_nan() || ch.rate < 0.0 {
                return Err(Error::InvalidRate {
                    name: ch.label,
                    value: ch.rate,
                });
            }
            if ch.collapse.rows() != d || ch.collapse.cols() != d {
                return Err(Error::InvalidDimension(format!(
                    "collapse operator {} is {}x{}, expected {d}x{d}",
                    ch.label,
                    ch.collapse.rows(),
                    ch.collapse.cols()
                )));
            }
        }
        let channels = channels.into_iter().filter(|ch| ch.rate > 0.0).collect();
        Ok(Self {
            hamiltonian,
            channels,
            space,
        })
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    pub fn without_dissipation(&self) -> Self {
        Self {
            channels: Vec::new(),
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EffectiveParams {
    /// λ (MHz)
    pub lambda_eff: f64,
    /// Stark shift of the electric mode (MHz).
    pub lambda1: f64,
    /// Stark shift of the mechanical mode (MHz).
    pub lambda2: f64,
    /// Full photon→phonon transfer time 1/(4λ) (µs); infinite when λ = 0.
    pub swap_time: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatioCheck {
    pub ratio: f64,
    pub pass: bool,
}

impl RatioCheck {
    fn new(ratio: f64, threshold: f64) -> Self {
        Self {
            ratio,
            pass: ratio <= threshold,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AdiabaticityReport {
    pub threshold: f64,
    pub ratio_g1: RatioCheck,
    pub ratio_g2: RatioCheck,
    pub ratio_drive: RatioCheck,
    /// |ω_a − ω_b − ω| (MHz)
    pub resonance_residual: f64,
    pub resonance_ok: bool,
}

impl AdiabaticityReport {
    pub fn all_pass(&self) -> bool {
        self.ratio_g1.pass && self.ratio_g2.pass && self.ratio_drive.pass
    }
}

/// `(δ₁, δ₂) = (ω₂₀ − ω_a, ω₁₀ − ω_b)`, both required positive.
pub fn derive_detunings(p: &SystemParams) -> Result<(f64, f64)> {
    let delta1 = p.omega20() - p.omega_a;
    let delta2 = p.omega10 - p.omega_b;
    if !(delta1 > 0.0 && delta2 > 0.0) {
        return Err(Error::DispersiveRegime { delta1, delta2 });
    }
    Ok((delta1, delta2))
}

fn qubit_op(op: Result<ComplexMatrix>, space: &HilbertSpace) -> Result<ComplexMatrix> {
    embed(&op?, QUBIT_SLOT, space)
}

/// `a†a + b†b + |1⟩⟨1| + |2⟩⟨2|`, conserved by the rotating-frame Hamiltonian.
pub fn excitation_operator(space: &HilbertSpace) -> Result<ComplexMatrix> {
    let dims = space.dims();
    let na = embed(&number(dims[PHOTON_SLOT])?, PHOTON_SLOT, space)?;
    let nb = embed(&number(dims[PHONON_SLOT])?, PHONON_SLOT, space)?;
    let p1 = qubit_op(qubit_projector(1), space)?;
    let p2 = qubit_op(qubit_projector(2), space)?;
    Ok(&(&(&na + &nb) + &p1) + &p2)
}

fn hermitian_pair(x: &ComplexMatrix) -> ComplexMatrix {
    x + &x.dagger()
}

/// Time-independent Hamiltonian (rad/µs) of the driven qubit and both resonators.
pub fn build_rotating_frame_hamiltonian(p: &SystemParams, space: &HilbertSpace) -> Result<ComplexMatrix> {
    let residual = p.resonance_residual();
    if residual > p.resonance_tolerance {
        return Err(Error::FrameValidity {
            residual,
            tolerance: p.resonance_tolerance,
        });
    }
    let dims = space.dims();
    if dims.len() != 3 || dims[QUBIT_SLOT] != 3 {
        return Err(Error::InvalidDimension(format!(
            "full model needs a qubit(3) x photon x phonon space, got {space}"
        )));
    }
    // Bare detunings are used as level energies even when non-positive; only
    // the effective model insists on the dispersive sign.
    let delta1 = p.omega20() - p.omega_a;
    let delta2 = p.omega10 - p.omega_b;

    let a = embed(&annihilation(dims[PHOTON_SLOT])?, PHOTON_SLOT, space)?;
    let b = embed(&annihilation(dims[PHONON_SLOT])?, PHONON_SLOT, space)?;
    let s01 = qubit_op(qubit_transition(0, 1), space)?;
    let s02 = qubit_op(qubit_transition(0, 2), space)?;
    let s12 = qubit_op(qubit_transition(1, 2), space)?;
    let p1 = qubit_op(qubit_projector(1), space)?;
    let p2 = qubit_op(qubit_projector(2), space)?;

    let h = p1.scale_real(delta2)
        + p2.scale_real(delta1)
        + hermitian_pair(&s12).scale_real(p.drive_amplitude)
        + hermitian_pair(&(&a.dagger() * &s02)).scale_real(p.g1)
        + hermitian_pair(&(&b.dagger() * &s01)).scale_real(p.g2);
    Ok(h.scale_real(TAU))
}

/// The eight dissipation channels in standard form, rates in rad/µs.
///
/// A term `(κ/2)·L(A)` with `L(A) = 2AρA† − A†Aρ − ρA†A` equals `κ·D[A]`,
/// so each rate is 2π times the configured value with no extra factor.
/// Zero-rate channels are dropped.
pub fn build_collapse_channels(p: &SystemParams, space: &HilbertSpace) -> Result<Vec<Channel>> {
    for (name, v) in p.rates() {
        if v.is_nan() || v < 0.0 {
            return Err(Error::InvalidRate { name, value: v });
        }
    }
    let dims = space.dims();
    let a = embed(&annihilation(dims[PHOTON_SLOT])?, PHOTON_SLOT, space)?;
    let b = embed(&annihilation(dims[PHONON_SLOT])?, PHONON_SLOT, space)?;
    let specs: [(&'static str, f64, ComplexMatrix); 8] = [
        ("kappa_a: a", p.kappa_a, a),
        ("kappa_b: b", p.kappa_b, b),
        ("Gamma1: s01", p.gamma1, qubit_op(qubit_transition(0, 1), space)?),
        ("Gamma1: z01", p.gamma1, qubit_op(qubit_z(0, 1), space)?),
        ("Gamma2: s02", p.gamma2, qubit_op(qubit_transition(0, 2), space)?),
        ("Gamma2: z02", p.gamma2, qubit_op(qubit_z(0, 2), space)?),
        ("Gamma2: s12", p.gamma2, qubit_op(qubit_transition(1, 2), space)?),
        ("Gamma2: z12", p.gamma2, qubit_op(qubit_z(1, 2), space)?),
    ];
    Ok(specs
        .into_iter()
        .filter(|(_, rate, _)| *rate > 0.0)
        .map(|(label, rate, collapse)| Channel {
            label,
            rate: TAU * rate,
            collapse,
        })
        .collect())
}

/// Full tripartite master-equation model.
pub fn build_full_model(p: &SystemParams) -> Result<LindbladModel> {
    p.validate()?;
    let space = p.space()?;
    let h = build_rotating_frame_hamiltonian(p, &space)?;
    let channels = build_collapse_channels(p, &space)?;
    LindbladModel::new(h, channels, space)
}

pub fn effective_params(p: &SystemParams) -> Result<EffectiveParams> {
    let (delta1, delta2) = derive_detunings(p)?;
    let denom = delta1 * delta2;
    let lambda_eff = p.drive_amplitude * p.g1 * p.g2 / denom;
    Ok(EffectiveParams {
        lambda_eff,
        lambda1: delta1 * p.g1 * p.g1 / denom,
        lambda2: delta2 * p.g2 * p.g2 / denom,
        swap_time: 1.0 / (4.0 * lambda_eff),
    })
}

/// Beam-splitter Hamiltonian `2πλ(a†b + ab†)` on photon ⊗ phonon, optionally
/// with the Stark shifts `2π(λ₁a†a + λ₂b†b)`.
pub fn build_effective_hamiltonian(
    p: &SystemParams,
    mode_space: &HilbertSpace,
    include_stark: bool,
) -> Result<ComplexMatrix> {
    let eff = effective_params(p)?;
    let dims = mode_space.dims();
    if dims.len() != 2 {
        return Err(Error::InvalidDimension(format!(
            "effective model needs a photon x phonon space, got {mode_space}"
        )));
    }
    let a = embed(&annihilation(dims[0])?, 0, mode_space)?;
    let b = embed(&annihilation(dims[1])?, 1, mode_space)?;
    let mut h = hermitian_pair(&(&a.dagger() * &b)).scale_real(eff.lambda_eff);
    if include_stark {
        h = h + (&a.dagger() * &a).scale_real(eff.lambda1) + (&b.dagger() * &b).scale_real(eff.lambda2);
    }
    Ok(h.scale_real(TAU))
}

/// Two-mode effective model with the resonator losses `κ_a`, `κ_b`.
pub fn build_effective_model(p: &SystemParams, include_stark: bool) -> Result<LindbladModel> {
    p.validate()?;
    let space = p.mode_space()?;
    let h = build_effective_hamiltonian(p, &space, include_stark)?;
    let a = embed(&annihilation(p.n_a)?, 0, &space)?;
    let b = embed(&annihilation(p.n_b)?, 1, &space)?;
    let channels = vec![
        Channel {
            label: "kappa_a: a",
            rate: TAU * p.kappa_a,
            collapse: a,
        },
        Channel {
            label: "kappa_b: b",
            rate: TAU * p.kappa_b,
            collapse: b,
        },
    ];
    LindbladModel::new(h, channels, space)
}

/// The driven qubit alone with its six decay/dephasing channels.
///
/// Small enough for the Liouvillian oracle and free of mode truncation.
pub fn build_qubit_only_model(p: &SystemParams) -> Result<LindbladModel> {
    let space = HilbertSpace::new(vec![3])?;
    let delta1 = p.omega20() - p.omega_a;
    let delta2 = p.omega10 - p.omega_b;
    let h = qubit_projector(1)?.scale_real(delta2)
        + qubit_projector(2)?.scale_real(delta1)
        + hermitian_pair(&qubit_transition(1, 2)?).scale_real(p.drive_amplitude);
    let h = h.scale_real(TAU).with_space(space.clone())?;
    let specs = [
        ("Gamma1: s01", p.gamma1, qubit_transition(0, 1)?),
        ("Gamma1: z01", p.gamma1, qubit_z(0, 1)?),
        ("Gamma2: s02", p.gamma2, qubit_transition(0, 2)?),
        ("Gamma2: z02", p.gamma2, qubit_z(0, 2)?),
        ("Gamma2: s12", p.gamma2, qubit_transition(1, 2)?),
        ("Gamma2: z12", p.gamma2, qubit_z(1, 2)?),
    ];
    let channels = specs
        .into_iter()
        .map(|(label, rate, op)| {
            Ok(Channel {
                label,
                rate: TAU * rate,
                collapse: op.with_space(space.clone())?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    LindbladModel::new(h, channels, space)
}

pub fn adiabaticity_report(p: &SystemParams, threshold: f64) -> Result<AdiabaticityReport> {
    let (delta1, delta2) = derive_detunings(p)?;
    let residual = p.resonance_residual();
    Ok(AdiabaticityReport {
        threshold,
        ratio_g1: RatioCheck::new(p.g1 / delta1, threshold),
        ratio_g2: RatioCheck::new(p.g2 / delta2, threshold),
        ratio_drive: RatioCheck::new(p.drive_amplitude.powi(2) / (delta1 * delta2), threshold),
        resonance_residual: residual,
        resonance_ok: residual <= p.resonance_tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{basis_density, basis_state, eigenvalues_hermitian, C64};

    fn paper() -> SystemParams {
        SystemParams::paper_fig2()
    }

    #[test]
    fn paper_detunings() {
        assert_eq!(derive_detunings(&paper()).unwrap(), (320.0, 320.0));

        let mut p = paper();
        p.omega_a = p.omega20();
        assert!(matches!(
            derive_detunings(&p),
            Err(Error::DispersiveRegime { .. })
        ));

        let mut p = paper();
        p.omega_a -= 10.0;
        assert_eq!(derive_detunings(&p).unwrap().0, 330.0);
    }

    #[test]
    fn bare_hamiltonian_is_detuning_diagonal() {
        let mut p = paper();
        p.drive_amplitude = 0.0;
        p.g1 = 0.0;
        p.g2 = 0.0;
        let s = p.space().unwrap();
        let h = build_rotating_frame_hamiltonian(&p, &s).unwrap();
        for i in 0..12 {
            let q = s.occupation(i)[0];
            let expected = TAU * [0.0, 320.0, 320.0][q];
            for j in 0..12 {
                let e = if i == j { expected } else { 0.0 };
                assert!((h.get(i, j) - C64::new(e, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn hamiltonian_matrix_elements() {
        let p = paper();
        let s = p.space().unwrap();
        let h = build_rotating_frame_hamiltonian(&p, &s).unwrap();
        let idx = |o: [usize; 3]| s.flat_index(&o).unwrap();
        assert!((h.get(idx([2, 0, 0]), idx([0, 1, 0])) - C64::new(TAU * 40.0, 0.0)).norm() < 1e-12);
        assert!((h.get(idx([1, 0, 0]), idx([0, 0, 1])) - C64::new(TAU * 40.0, 0.0)).norm() < 1e-12);
        assert!((h.get(idx([1, 0, 0]), idx([2, 0, 0])) - C64::new(TAU * 64.0, 0.0)).norm() < 1e-12);
        assert!(h.hermiticity_residual() <= 1e-10);
    }

    #[test]
    fn off_resonant_drive_rejected() {
        let mut p = paper();
        p.omega_drive += 1.0;
        let s = p.space().unwrap();
        assert!(matches!(
            build_rotating_frame_hamiltonian(&p, &s),
            Err(Error::FrameValidity { .. })
        ));
    }

    #[test]
    fn excitation_number_conserved() {
        for (na, nb) in [(2, 2), (3, 3), (4, 4), (2, 3)] {
            let p = paper().with_truncation(na, nb);
            let s = p.space().unwrap();
            let h = build_rotating_frame_hamiltonian(&p, &s).unwrap();
            let n = excitation_operator(&s).unwrap();
            assert!(h.commutator(&n).max_abs() < 1e-10, "({na},{nb})");
        }
    }

    #[test]
    fn paper_channels() {
        let p = paper();
        let s = p.space().unwrap();
        let channels = build_collapse_channels(&p, &s).unwrap();
        let rates: Vec<f64> = channels.iter().map(|c| c.rate / TAU).collect();
        let expected = [0.005, 0.1, 0.01, 0.01, 0.1, 0.1, 0.1, 0.1];
        assert_eq!(rates.len(), 8);
        for (r, e) in rates.iter().zip(expected) {
            assert!((r - e).abs() < 1e-15);
        }

        let ground = basis_density(&s, &[0, 0, 0]).unwrap();
        for ch in &channels {
            let a = &ch.collapse;
            let ada = &a.dagger() * a;
            let d =
                &(&(a * &ground) * &a.dagger()) - &(&(&ada * &ground) + &(&ground * &ada)).scale_real(0.5);
            assert!(d.max_abs() < 1e-15, "{}", ch.label);
        }

        assert!(build_collapse_channels(&p.lossless(), &s).unwrap().is_empty());
        let mut bad = p.clone();
        bad.kappa_b = -1.0;
        assert!(matches!(
            build_collapse_channels(&bad, &s),
            Err(Error::InvalidRate { .. })
        ));
    }

    #[test]
    fn effective_coupling_values() {
        let eff = effective_params(&paper()).unwrap();
        assert_eq!(eff.lambda_eff, 1.0);
        assert_eq!(eff.swap_time, 0.25);
        assert_eq!(eff.lambda1, 5.0);
        assert_eq!(eff.lambda2, 5.0);

        let mut p = paper();
        p.drive_amplitude = 0.0;
        assert_eq!(effective_params(&p).unwrap().lambda_eff, 0.0);

        let al = effective_params(&SystemParams::aluminium_low_freq()).unwrap();
        assert!((al.lambda_eff - 0.1).abs() < 1e-15);
    }

    #[test]
    fn effective_params_homogeneity() {
        let base = effective_params(&paper()).unwrap().lambda_eff;
        for s in [0.5, 1.3, 2.0] {
            let mut p = paper();
            p.drive_amplitude *= s;
            p.g1 *= s;
            p.g2 *= s;
            let scaled = effective_params(&p).unwrap().lambda_eff;
            assert!((scaled - base * s.powi(3)).abs() < 1e-12);

            let mut p = paper();
            p.omega_a = p.omega20() - 320.0 * s;
            p.omega_b = p.omega10 - 320.0 * s;
            let scaled = effective_params(&p).unwrap().lambda_eff;
            assert!((scaled - base / (s * s)).abs() < 1e-12);
        }
    }

    #[test]
    fn effective_hamiltonian_structure() {
        let p = paper();
        let s = p.mode_space().unwrap();
        let h = build_effective_hamiltonian(&p, &s, false).unwrap();
        let idx = |o: [usize; 2]| s.flat_index(&o).unwrap();
        assert!((h.get(idx([0, 1]), idx([1, 0])) - C64::new(TAU, 0.0)).norm() < 1e-15);

        let a = embed(&annihilation(2).unwrap(), 0, &s).unwrap();
        let b = embed(&annihilation(2).unwrap(), 1, &s).unwrap();
        let n = &(&a.dagger() * &a) + &(&b.dagger() * &b);
        assert!(h.commutator(&n).max_abs() < 1e-14);

        // single-excitation block {|1,0⟩, |0,1⟩}
        let block = ComplexMatrix::from_fn(2, 2, |i, j| {
            let k = [idx([1, 0]), idx([0, 1])];
            h.get(k[i], k[j])
        });
        let vals = eigenvalues_hermitian(&block).unwrap();
        assert!((vals[0] + TAU).abs() < 1e-12 && (vals[1] - TAU).abs() < 1e-12);

        let hs = build_effective_hamiltonian(&p, &s, true).unwrap();
        let diff = &hs - &h;
        for (o, shift) in [([1, 0], 5.0), ([0, 1], 5.0), ([1, 1], 10.0), ([0, 0], 0.0)] {
            assert!((diff.get(idx(o), idx(o)) - C64::new(TAU * shift, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn adiabaticity_ratios() {
        let r = adiabaticity_report(&paper(), DEFAULT_ADIABATIC_THRESHOLD).unwrap();
        assert_eq!(r.ratio_g1.ratio, 0.125);
        assert_eq!(r.ratio_g2.ratio, 0.125);
        assert_eq!(r.ratio_drive.ratio, 0.04);
        assert!(r.all_pass() && r.resonance_ok);
        assert_eq!(r.resonance_residual, 0.0);

        let mut p = paper();
        p.drive_amplitude = 320.0;
        let r = adiabaticity_report(&p, DEFAULT_ADIABATIC_THRESHOLD).unwrap();
        assert_eq!(r.ratio_drive.ratio, 1.0);
        assert!(!r.ratio_drive.pass);

        let mut p = paper();
        p.g1 = 0.0;
        let r = adiabaticity_report(&p, DEFAULT_ADIABATIC_THRESHOLD).unwrap();
        assert_eq!(r.ratio_g1.ratio, 0.0);
        assert!(r.ratio_g1.pass);
    }

    #[test]
    fn field_access_round_trips() {
        let mut p = paper();
        for (i, name) in SystemParams::FIELD_NAMES.iter().enumerate() {
            let v = (i + 2) as f64;
            p.set_field(name, v).unwrap();
            assert_eq!(p.get_field(name).unwrap(), v);
        }
        assert!(matches!(
            p.set_field("bogus", 1.0),
            Err(Error::UnknownParameter(_))
        ));
        assert!(p.set_field("n_a", 2.5).is_err());
    }

    #[test]
    fn qubit_only_model_shape() {
        let m = build_qubit_only_model(&paper()).unwrap();
        assert_eq!(m.dim(), 3);
        assert_eq!(m.channels.len(), 6);
        let v = basis_state(&m.space, &[1]).unwrap();
        assert_eq!(v.get(1, 0), C64::new(1.0, 0.0));
    }
}
