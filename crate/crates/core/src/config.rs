//! Scenario configuration files and built-in presets.
//!
//! A config is JSON. When it names a `preset`, the preset is expanded first and
//! the file's own keys are merged over it; `--set path=value` overrides are
//! applied last, then the result is validated.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{SystemParams, DEFAULT_ADIABATIC_THRESHOLD};
use crate::operators::HilbertSpace;
use crate::solver::{observable_registry, IntegratorConfig};

pub const PRESET_NAMES: [&str; 2] = ["paper-fig2", "aluminium-low-freq"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Qubit and both resonators under the full master equation.
    #[default]
    Full,
    /// Two-mode beam-splitter model with the qubit eliminated.
    Effective,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
}

fn default_threshold() -> f64 {
    DEFAULT_ADIABATIC_THRESHOLD
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub model: ModelKind,
    /// Stark shifts in the effective model.
    #[serde(default)]
    pub include_stark: bool,
    pub params: SystemParams,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    /// Product state (qubit level, photons, phonons).
    pub initial_state: [usize; 3],
    /// Extra registered observables written after the fixed CSV columns.
    #[serde(default)]
    pub observables: Vec<String>,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default = "default_threshold")]
    pub adiabatic_threshold: f64,
}

impl ScenarioConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let base = |params: SystemParams, description: &str| Self {
            preset: Some(name.to_string()),
            description: description.to_string(),
            model: ModelKind::Full,
            include_stark: false,
            params,
            integrator: IntegratorConfig::default(),
            initial_state: [0, 1, 0],
            observables: Vec::new(),
            outputs: Outputs::default(),
            adiabatic_threshold: DEFAULT_ADIABATIC_THRESHOLD,
        };
        match name {
            "paper-fig2" => Ok(base(
                SystemParams::paper_fig2(),
                "Photon-to-phonon transfer through the driven flux qubit: diamond \
                 nanomechanical resonator at 1.4 GHz, lambda = 1 MHz, horizon 0.5 us \
                 (about twice the 0.25 us swap time).",
            )),
            "aluminium-low-freq" => Ok(base(
                SystemParams::aluminium_low_freq(),
                "Aluminium mechanical resonator variant: only the tenfold smaller \
                 qubit-mechanics coupling (g2 = 4 MHz) is modelled, giving lambda = 0.1 MHz. \
                 The ~0.1 GHz mechanical frequency and its extra voltage drive are not \
                 modelled; the detunings are held at 320 MHz.",
            )),
            _ => Err(Error::Config(format!(
                "unknown preset `{name}` (known: {})",
                PRESET_NAMES.join(", ")
            ))),
        }
    }

    pub fn from_json_str(text: &str, overrides: &[String]) -> Result<Self> {
        let value: Value = serde_json::from_str(text)?;
        Self::from_value(value, overrides)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text, overrides)
    }

    /// Preset (if any) expanded, file merged, overrides applied, then validated.
    pub fn from_value(value: Value, overrides: &[String]) -> Result<Self> {
        let mut value = match value.get("preset").and_then(Value::as_str) {
            Some(name) => {
                let mut base = serde_json::to_value(Self::preset(name)?)?;
                merge(&mut base, value);
                base
            }
            None => value,
        };
        for ov in overrides {
            apply_override(&mut value, ov)?;
        }
        let cfg: Self = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// A preset with overrides applied.
    pub fn from_preset(name: &str, overrides: &[String]) -> Result<Self> {
        Self::from_value(serde_json::json!({ "preset": name }), overrides)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn model_space(&self) -> Result<HilbertSpace> {
        match self.model {
            ModelKind::Full => self.params.space(),
            ModelKind::Effective => self.params.mode_space(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.integrator.validate()?;
        let [q, na, nb] = self.initial_state;
        let occupancy_err = || Error::InvalidOccupation {
            occupation: self.initial_state.to_vec(),
            dims: vec![3, self.params.n_a, self.params.n_b],
        };
        if q >= 3 || na >= self.params.n_a || nb >= self.params.n_b {
            return Err(occupancy_err());
        }
        if self.model == ModelKind::Effective && q != 0 {
            return Err(Error::Config(
                "the effective model has no qubit; initial_state must start with level 0".into(),
            ));
        }
        let registry = observable_registry(&self.model_space()?)?;
        for name in &self.observables {
            if !registry.iter().any(|o| &o.name == name) {
                let known: Vec<&str> = registry.iter().map(|o| o.name.as_str()).collect();
                return Err(Error::Config(format!(
                    "unknown observable `{name}` for the {:?} model (known: {})",
                    self.model,
                    known.join(", ")
                )));
            }
        }
        if self.adiabatic_threshold.is_nan() || self.adiabatic_threshold <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "adiabatic_threshold".into(),
                reason: format!("must be positive, got {}", self.adiabatic_threshold),
            });
        }
        Ok(())
    }
}

/// Recursive object merge; non-object values in `patch` replace `base`.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Applies `dotted.path=value`; the value is parsed as JSON, else taken as a string.
pub fn apply_override(target: &mut Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` is not of the form field=value")))?;
    let path = path.trim();
    if path.is_empty() {
        return Err(Error::Config(format!(
            "override `{spec}` has an empty field path"
        )));
    }
    let parsed: Value =
        serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut cursor = target;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        let obj = cursor
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("`{}` is not an object", keys[..i].join("."))))?;
        if i + 1 == keys.len() {
            obj.insert(key.to_string(), parsed);
            return Ok(());
        }
        cursor = obj
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split always yields at least one key")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn paper_preset_field_by_field() {
        let cfg = ScenarioConfig::preset("paper-fig2").unwrap();
        let p = &cfg.params;
        let expected = [
            ("omega10", 1720.0),
            ("omega21", 4280.0),
            ("omega_a", 5680.0),
            ("omega_b", 1400.0),
            ("omega_drive", 4280.0),
            ("Omega", 64.0),
            ("g1", 40.0),
            ("g2", 40.0),
            ("kappa_a", 0.005),
            ("kappa_b", 0.1),
            ("Gamma1", 0.01),
            ("Gamma2", 0.1),
            ("n_a", 2.0),
            ("n_b", 2.0),
        ];
        for (name, v) in expected {
            assert_eq!(p.get_field(name).unwrap(), v, "{name}");
        }
        assert_eq!(cfg.initial_state, [0, 1, 0]);
        assert_eq!(cfg.integrator.t_end, 0.5);
        assert_eq!(cfg.integrator.dt, 2e-5);
    }

    #[test]
    fn aluminium_preset_differs_only_in_g2() {
        let a = ScenarioConfig::preset("aluminium-low-freq").unwrap();
        let p = ScenarioConfig::preset("paper-fig2").unwrap();
        assert_eq!(a.params, SystemParams { g2: 4.0, ..p.params });
        assert!(ScenarioConfig::preset("nope").is_err());
    }

    #[test]
    fn file_keys_merge_over_preset() {
        let cfg = ScenarioConfig::from_json_str(
            r#"{"preset": "paper-fig2", "params": {"Omega": 32}, "integrator": {"t_end": 0.3}}"#,
            &["params.g1=20".into(), "model=effective".into()],
        )
        .unwrap();
        assert_eq!(cfg.params.drive_amplitude, 32.0);
        assert_eq!(cfg.params.g1, 20.0);
        assert_eq!(cfg.params.g2, 40.0);
        assert_eq!(cfg.integrator.t_end, 0.3);
        assert_eq!(cfg.integrator.dt, 2e-5);
        assert_eq!(cfg.model, ModelKind::Effective);
    }

    #[test]
    fn validation_errors() {
        let bad = |ov: &str| ScenarioConfig::from_preset("paper-fig2", &[ov.to_string()]);
        assert!(matches!(
            bad("initial_state=[0,2,0]"),
            Err(Error::InvalidOccupation { .. })
        ));
        assert!(matches!(bad("params.kappa_a=-1"), Err(Error::InvalidRate { .. })));
        assert!(matches!(bad("params.bogus=1"), Err(Error::Config(_))));
        assert!(matches!(bad("observables=[\"P7\"]"), Err(Error::Config(_))));
        assert!(matches!(
            bad("integrator.dt=0"),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(bad("params.n_a=1").is_err());
        assert!(bad("no-equals-sign").is_err());
        assert!(ScenarioConfig::from_preset("paper-fig2", &["observables=[\"N\"]".into()]).is_ok());
    }

    fn arb_params() -> impl Strategy<Value = SystemParams> {
        (
            (1.0..1e4f64, 1.0..1e4f64, 1.0..1e4f64, 1.0..1e4f64, 0.0..1e4f64),
            (0.0..500.0f64, 0.0..100.0f64, 0.0..100.0f64),
            (0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64),
            (2usize..6, 2usize..6),
        )
            .prop_map(
                |((w10, w21, wa, wb, wd), (om, g1, g2), (ka, kb, ga1, ga2), (na, nb))| SystemParams {
                    omega10: w10,
                    omega21: w21,
                    omega_a: wa,
                    omega_b: wb,
                    omega_drive: wd,
                    drive_amplitude: om,
                    g1,
                    g2,
                    kappa_a: ka,
                    kappa_b: kb,
                    gamma1: ga1,
                    gamma2: ga2,
                    n_a: na,
                    n_b: nb,
                    resonance_tolerance: 1e-6,
                },
            )
    }

    proptest! {
        #[test]
        fn config_round_trip(params in arb_params(), dt in 1e-6..1e-3f64, stark: bool) {
            let mut cfg = ScenarioConfig::preset("paper-fig2").unwrap();
            cfg.params = params;
            cfg.integrator.dt = dt;
            cfg.include_stark = stark;
            let text = cfg.to_json().unwrap();
            let parsed: ScenarioConfig = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(&parsed, &cfg);
            prop_assert_eq!(parsed.to_json().unwrap(), text);
        }
    }
}
