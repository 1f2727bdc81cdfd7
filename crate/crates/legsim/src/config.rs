//! Flat key-value configuration: defaults, file loading, command-line
//! overrides and the effective-config dump.
//!
//! The format is one `key = value` assignment per line, `#` comments, SI
//! units only. Every key must be one of the known defaults; unknown keys are
//! rejected so typos cannot silently fall back to defaults.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::contact::GroundModel;
use crate::control::ControllerConfig;
use crate::model::{
    calibrate_with_fractions, compute_cable_stiffness, CableParams, LegModel, MotorParams,
};
use crate::sim::{Integrator, Scenario, ScenarioKind, SimConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown configuration key '{key}'")]
    UnknownKey { key: String },
    #[error("line {line} is not a 'key = value' assignment: '{text}'")]
    Malformed { line: usize, text: String },
    #[error("key '{key}': cannot parse '{value}' as {expected}")]
    BadValue {
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("key '{key}': {detail}")]
    Invalid { key: String, detail: String },
    #[error("override '{text}' must have the form key=value")]
    MalformedOverride { text: String },
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

/// String-typed configuration map with a fixed key set.
#[derive(Debug, Clone)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    /// The full default configuration (longevity-style hopping scenario).
    pub fn defaults() -> Self {
        let mut entries = BTreeMap::new();
        let model = LegModel::default_leg();
        let motors = MotorParams::default_motors();
        let cable = CableParams::default_cable();
        let ground = GroundModel::default();
        let ctrl = ControllerConfig::default();

        let mut put = |k: &str, v: String| {
            entries.insert(k.to_string(), v);
        };

        put("model.total_leg_mass", model.leg_mass().to_string());
        put("model.payload_mass", model.payload_mass.to_string());
        put("model.link_length_thigh", model.link_lengths[0].to_string());
        put("model.link_length_shank", model.link_lengths[1].to_string());
        put(
            "model.stretched_hip_inertia",
            model.stretched_hip_inertia().to_string(),
        );
        put(
            "model.shank_mass_fraction",
            crate::model::DEFAULT_SHANK_MASS_FRACTION.to_string(),
        );
        put(
            "model.com_fraction",
            crate::model::DEFAULT_COM_FRACTION.to_string(),
        );
        put("model.rotor_inertia", model.rotor_inertias[0].to_string());
        put("model.gear_ratio_hip", model.gear_ratios[0].to_string());
        put("model.gear_ratio_knee", model.gear_ratios[1].to_string());
        put("model.base_hip_offset", model.base_hip_offset.to_string());
        put("model.foot_radius", model.foot_radius.to_string());
        put("model.gravity", model.gravity.to_string());

        put(
            "motor.torque_constant_hip",
            motors.torque_constants[0].to_string(),
        );
        put(
            "motor.torque_constant_knee",
            motors.torque_constants[1].to_string(),
        );
        put(
            "motor.motor_constant_hip",
            motors.motor_constants[0].to_string(),
        );
        put(
            "motor.motor_constant_knee",
            motors.motor_constants[1].to_string(),
        );
        put("motor.max_torque", motors.max_joint_torque.to_string());
        put("motor.max_speed", motors.max_joint_speed.to_string());
        put(
            "motor.torque_resolution",
            motors.torque_resolution.to_string(),
        );
        put(
            "motor.current_loop_bandwidth_hz",
            motors.current_loop_bandwidth_hz.to_string(),
        );
        put("motor.bus_voltage", motors.bus_voltage.to_string());
        put(
            "motor.electronics_power",
            motors.electronics_power.to_string(),
        );
        put(
            "motor.regen_efficiency",
            motors.regen_efficiency.to_string(),
        );
        put("motor.quantization", "false".to_string());
        put("motor.static_torque_offset", "0".to_string());
        put("motor.torque_scale", "1".to_string());

        put("cable.youngs_modulus", cable.youngs_modulus.to_string());
        put("cable.cross_section", cable.cross_section.to_string());
        put("cable.free_length", cable.free_length.to_string());
        put(
            "cable.pulley_radius_in",
            cable.pulley_radius_in.to_string(),
        );
        put(
            "cable.pulley_radius_out",
            cable.pulley_radius_out.to_string(),
        );
        put("cable.strand_count", cable.strand_count.to_string());
        put("cable.damping", cable.damping.to_string());

        put("ground.stiffness", ground.stiffness.to_string());
        put("ground.damping", ground.damping.to_string());
        put("ground.friction_mu", ground.friction_mu.to_string());
        put(
            "ground.tangential_damping",
            ground.tangential_damping.to_string(),
        );
        put("ground.height", ground.height.to_string());

        put("control.spring_stiffness", ctrl.k_s.to_string());
        put("control.spring_damping", ctrl.d_s.to_string());
        put("control.base_target", ctrl.z_target.to_string());
        put("control.kp_hip", ctrl.kp[0].to_string());
        put("control.kp_knee", ctrl.kp[1].to_string());
        put("control.ki_hip", ctrl.ki[0].to_string());
        put("control.ki_knee", ctrl.ki[1].to_string());
        put("control.kd_hip", ctrl.kd[0].to_string());
        put("control.kd_knee", ctrl.kd[1].to_string());
        put("control.flight_hip", ctrl.flight_pose[0].to_string());
        put("control.flight_knee", ctrl.flight_pose[1].to_string());
        put(
            "control.extension_switch",
            ctrl.extension_switch.to_string(),
        );
        put("control.integral_clamp", ctrl.integral_clamp.to_string());
        put("control.rate_hz", ctrl.rate_hz.to_string());

        put("sim.dt", "0.0001".to_string());
        put("sim.duration", "30".to_string());
        put("sim.integrator", "semi_implicit_euler".to_string());
        put("sim.rail_friction", "2".to_string());
        put("sim.decimation", "10".to_string());
        put("sim.seed", "1".to_string());
        put("sim.perturbation", "0.1".to_string());

        put("scenario.kind", "longevity".to_string());
        put("scenario.stop_apex_count", "0".to_string());
        put("scenario.stop_apex_height", "0".to_string());

        ConfigMap { entries }
    }

    /// Defaults specialized for one of the built-in scenarios.
    pub fn preset(kind: ScenarioKind) -> Self {
        let mut map = Self::defaults();
        let mut set = |k: &str, v: String| {
            map.entries.insert(k.to_string(), v);
        };
        match kind {
            ScenarioKind::Standing => {
                set("scenario.kind", "standing".into());
                set("sim.duration", "8".into());
                set("sim.perturbation", "0".into());
                set("control.spring_stiffness", "2500".into());
                set("control.spring_damping", "180".into());
                set("control.base_target", "0.45".into());
                set("control.flight_hip", "-0.7954".into());
                set("control.flight_knee", "1.5508".into());
                set("motor.quantization", "true".into());
                set("motor.static_torque_offset", "0.1".into());
            }
            ScenarioKind::Longevity => {
                set("scenario.kind", "longevity".into());
                set("sim.duration", "30".into());
                // well-lubricated rig: light rail drag, stiff low-loss pad
                set("sim.rail_friction", "0.5".into());
                set("ground.stiffness", "100000".into());
                set("ground.damping", "40".into());
                set("motor.quantization", "true".into());
                set("motor.static_torque_offset", "0.1".into());
            }
            ScenarioKind::HighJump => {
                set("scenario.kind", "highjump".into());
                set("sim.duration", "20".into());
                set("sim.rail_friction", "0.5".into());
                set("sim.perturbation", "0.3".into());
                set("ground.stiffness", "100000".into());
                set("ground.damping", "40".into());
                // one maximum-effort jump from a deep crouch; the virtual
                // spring saturates the torque clamp through the whole stroke
                set("control.spring_stiffness", "4000".into());
                set("control.spring_damping", "25".into());
                set("control.base_target", "0.95".into());
                set("control.flight_hip", "-1.3734".into());
                set("control.flight_knee", "2.6".into());
                set("control.kp_hip", "60".into());
                set("control.kp_knee", "60".into());
                set("control.kd_hip", "15".into());
                set("control.kd_knee", "15".into());
                // stop once the commanded apex is reached, like the staged
                // jumps of the rig experiment
                set("scenario.stop_apex_height", "1.45".into());
                set("motor.quantization", "true".into());
                set("motor.static_torque_offset", "0.1".into());
            }
        }
        map
    }

    /// Merges `key = value` lines on top of the current map.
    pub fn merge_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Malformed {
                    line: idx + 1,
                    text: raw.to_string(),
                });
            };
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Loads and merges a config file.
    pub fn merge_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.merge_text(&text)
    }

    /// Applies a `key=value` command-line override.
    pub fn apply_override(&mut self, text: &str) -> Result<(), ConfigError> {
        let Some((key, value)) = text.split_once('=') else {
            return Err(ConfigError::MalformedOverride {
                text: text.to_string(),
            });
        };
        self.set(key.trim(), value.trim())
    }

    /// Sets one known key; the stored value string is echoed verbatim by
    /// [`ConfigMap::dump`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if !self.entries.contains_key(key) {
            return Err(ConfigError::UnknownKey {
                key: key.to_string(),
            });
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get_str(&self, key: &str) -> Result<&str, ConfigError> {
        self.entries
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| ConfigError::UnknownKey {
                key: key.to_string(),
            })
    }

    pub fn get_f64(&self, key: &str) -> Result<f64, ConfigError> {
        let raw = self.get_str(key)?;
        raw.parse().map_err(|_| ConfigError::BadValue {
            key: key.to_string(),
            value: raw.to_string(),
            expected: "a number",
        })
    }

    pub fn get_u64(&self, key: &str) -> Result<u64, ConfigError> {
        let raw = self.get_str(key)?;
        raw.parse().map_err(|_| ConfigError::BadValue {
            key: key.to_string(),
            value: raw.to_string(),
            expected: "an unsigned integer",
        })
    }

    pub fn get_bool(&self, key: &str) -> Result<bool, ConfigError> {
        let raw = self.get_str(key)?;
        match raw {
            "true" | "1" | "yes" | "on" => Ok(true),
            "false" | "0" | "no" | "off" => Ok(false),
            _ => Err(ConfigError::BadValue {
                key: key.to_string(),
                value: raw.to_string(),
                expected: "a boolean",
            }),
        }
    }

    /// Deterministic, sorted `key = value` dump of the effective config.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn build_model(&self) -> Result<LegModel, ConfigError> {
        let mut model = calibrate_with_fractions(
            self.get_f64("model.total_leg_mass")?,
            self.get_f64("model.stretched_hip_inertia")?,
            [
                self.get_f64("model.link_length_thigh")?,
                self.get_f64("model.link_length_shank")?,
            ],
            self.get_f64("model.shank_mass_fraction")?,
            self.get_f64("model.com_fraction")?,
        )?;
        model.payload_mass = self.get_f64("model.payload_mass")?;
        let rotor = self.get_f64("model.rotor_inertia")?;
        model.rotor_inertias = [rotor, rotor];
        model.gear_ratios = [
            self.get_f64("model.gear_ratio_hip")?,
            self.get_f64("model.gear_ratio_knee")?,
        ];
        model.base_hip_offset = self.get_f64("model.base_hip_offset")?;
        model.foot_radius = self.get_f64("model.foot_radius")?;
        model.gravity = self.get_f64("model.gravity")?;
        Ok(model)
    }

    pub fn build_motors(&self) -> Result<MotorParams, ConfigError> {
        Ok(MotorParams {
            torque_constants: [
                self.get_f64("motor.torque_constant_hip")?,
                self.get_f64("motor.torque_constant_knee")?,
            ],
            motor_constants: [
                self.get_f64("motor.motor_constant_hip")?,
                self.get_f64("motor.motor_constant_knee")?,
            ],
            max_joint_torque: self.get_f64("motor.max_torque")?,
            max_joint_speed: self.get_f64("motor.max_speed")?,
            torque_resolution: self.get_f64("motor.torque_resolution")?,
            current_loop_bandwidth_hz: self.get_f64("motor.current_loop_bandwidth_hz")?,
            bus_voltage: self.get_f64("motor.bus_voltage")?,
            electronics_power: self.get_f64("motor.electronics_power")?,
            regen_efficiency: self.get_f64("motor.regen_efficiency")?,
            quantization_enabled: self.get_bool("motor.quantization")?,
            static_torque_offset: self.get_f64("motor.static_torque_offset")?,
            torque_scale: self.get_f64("motor.torque_scale")?,
        })
    }

    pub fn build_cable(&self) -> Result<CableParams, ConfigError> {
        let youngs_modulus = self.get_f64("cable.youngs_modulus")?;
        let cross_section = self.get_f64("cable.cross_section")?;
        let free_length = self.get_f64("cable.free_length")?;
        let pulley_radius_out = self.get_f64("cable.pulley_radius_out")?;
        let strand_count = self.get_u64("cable.strand_count")? as u32;
        let stiffness = compute_cable_stiffness(
            youngs_modulus,
            cross_section,
            free_length,
            pulley_radius_out,
            strand_count,
        )?;
        Ok(CableParams {
            youngs_modulus,
            cross_section,
            free_length,
            pulley_radius_in: self.get_f64("cable.pulley_radius_in")?,
            pulley_radius_out,
            strand_count,
            stiffness,
            damping: self.get_f64("cable.damping")?,
        })
    }

    pub fn build_ground(&self) -> Result<GroundModel, ConfigError> {
        Ok(GroundModel {
            stiffness: self.get_f64("ground.stiffness")?,
            damping: self.get_f64("ground.damping")?,
            friction_mu: self.get_f64("ground.friction_mu")?,
            tangential_damping: self.get_f64("ground.tangential_damping")?,
            height: self.get_f64("ground.height")?,
        })
    }

    pub fn build_controller(&self, model: &LegModel) -> Result<ControllerConfig, ConfigError> {
        let ctrl = ControllerConfig {
            k_s: self.get_f64("control.spring_stiffness")?,
            d_s: self.get_f64("control.spring_damping")?,
            z_target: self.get_f64("control.base_target")?,
            kp: [self.get_f64("control.kp_hip")?, self.get_f64("control.kp_knee")?],
            ki: [self.get_f64("control.ki_hip")?, self.get_f64("control.ki_knee")?],
            kd: [self.get_f64("control.kd_hip")?, self.get_f64("control.kd_knee")?],
            flight_pose: [
                self.get_f64("control.flight_hip")?,
                self.get_f64("control.flight_knee")?,
            ],
            extension_switch: self.get_f64("control.extension_switch")?,
            integral_clamp: self.get_f64("control.integral_clamp")?,
            rate_hz: self.get_f64("control.rate_hz")?,
        };
        for (key, value) in [
            ("control.spring_stiffness", ctrl.k_s),
            ("control.spring_damping", ctrl.d_s),
            ("control.rate_hz", ctrl.rate_hz),
        ] {
            if value < 0.0 {
                return Err(ConfigError::Invalid {
                    key: key.to_string(),
                    detail: format!("must be nonnegative, got {value}"),
                });
            }
        }
        let reach = model.link_lengths[0] + model.link_lengths[1];
        if !(ctrl.extension_switch > 0.0 && ctrl.extension_switch < reach) {
            return Err(ConfigError::Invalid {
                key: "control.extension_switch".to_string(),
                detail: format!(
                    "must lie strictly between 0 and the leg reach {reach}, got {}",
                    ctrl.extension_switch
                ),
            });
        }
        Ok(ctrl)
    }

    pub fn build_sim(&self) -> Result<SimConfig, ConfigError> {
        let dt = self.get_f64("sim.dt")?;
        let duration = self.get_f64("sim.duration")?;
        let decimation = self.get_u64("sim.decimation")?;
        if dt <= 0.0 {
            return Err(ConfigError::Invalid {
                key: "sim.dt".to_string(),
                detail: format!("must be positive, got {dt}"),
            });
        }
        if duration < dt {
            return Err(ConfigError::Invalid {
                key: "sim.duration".to_string(),
                detail: format!("must be at least one step ({dt} s), got {duration}"),
            });
        }
        if decimation < 1 {
            return Err(ConfigError::Invalid {
                key: "sim.decimation".to_string(),
                detail: "must be at least 1".to_string(),
            });
        }
        let integrator = match self.get_str("sim.integrator")? {
            "semi_implicit_euler" => Integrator::SemiImplicitEuler,
            "rk4" => Integrator::Rk4,
            other => {
                return Err(ConfigError::BadValue {
                    key: "sim.integrator".to_string(),
                    value: other.to_string(),
                    expected: "semi_implicit_euler or rk4",
                })
            }
        };
        Ok(SimConfig {
            dt,
            duration,
            integrator,
            rail_viscous_friction: self.get_f64("sim.rail_friction")?,
            decimation: decimation as usize,
            seed: self.get_u64("sim.seed")?,
            perturbation: self.get_f64("sim.perturbation")?,
        })
    }

    /// Assembles the full scenario from the map.
    pub fn build_scenario(&self) -> Result<Scenario, ConfigError> {
        let kind = match self.get_str("scenario.kind")? {
            "standing" => ScenarioKind::Standing,
            "longevity" => ScenarioKind::Longevity,
            "highjump" => ScenarioKind::HighJump,
            other => {
                return Err(ConfigError::BadValue {
                    key: "scenario.kind".to_string(),
                    value: other.to_string(),
                    expected: "standing, longevity or highjump",
                })
            }
        };
        let model = self.build_model()?;
        let controller = self.build_controller(&model)?;
        let stop_apex_count = self.get_u64("scenario.stop_apex_count")?;
        let stop_apex_height = self.get_f64("scenario.stop_apex_height")?;
        Ok(Scenario {
            kind,
            motors: self.build_motors()?,
            cable: self.build_cable()?,
            ground: self.build_ground()?,
            controller,
            sim: self.build_sim()?,
            stop_apex_count: (stop_apex_count > 0).then_some(stop_apex_count as usize),
            stop_apex_height: (stop_apex_height > 0.0).then_some(stop_apex_height),
            model,
        })
    }
}
