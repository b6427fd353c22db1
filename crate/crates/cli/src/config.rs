//! JSON experiment configuration.
//!
//! Every key is optional; `{}` is the default experiment. Units are part of
//! the key names. Any key can be overridden from the environment with
//! `MAROBUST__` followed by its path in upper case, segments joined by `__`:
//! `MAROBUST__SYSTEM__P_MAX_DBM=30`. Override values are parsed as JSON and
//! fall back to plain strings.

use std::fmt;
use std::path::{Path, PathBuf};

use marobust::ao::{AoOptions, ObjectiveModel};
use marobust::baselines::Scheme;
use marobust::model::{db_to_linear, dbm_to_watts, RoadLayout, SystemConfig};
use serde::Deserialize;
use serde_json::Value;

pub const ENV_PREFIX: &str = "MAROBUST__";

#[derive(Debug)]
pub struct ConfigError {
    /// Dotted key path, empty for whole-document errors.
    pub path: String,
    pub msg: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.msg)
        } else {
            write!(f, "{}: {}", self.path, self.msg)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(path: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError { path: path.into(), msg: msg.into() }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSection {
    pub m: usize,
    pub k: usize,
    pub n: usize,
    pub slot_s: f64,
    pub bs_xy_m: [f64; 2],
    pub h_m: f64,
    pub wavelength_m: f64,
    pub g0_db: f64,
    pub noise_dbm: f64,
    pub p_max_dbm: f64,
    pub l_lambda: f64,
    pub d_min_lambda: f64,
    pub r_m: f64,
    /// Replaces the computed channel-error radius for every user.
    pub xi_override: Option<f64>,
}

impl Default for SystemSection {
    fn default() -> Self {
        SystemSection {
            m: 4,
            k: 2,
            n: 6,
            slot_s: 0.5,
            bs_xy_m: [250.0, 250.0],
            h_m: 12.0,
            wavelength_m: 0.1,
            g0_db: -40.0,
            noise_dbm: -80.0,
            p_max_dbm: 34.0,
            l_lambda: 6.0,
            d_min_lambda: 0.3,
            r_m: 0.5,
            xi_override: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrajectorySection {
    Road {
        #[serde(default = "d_offset")]
        offset_m: f64,
        #[serde(default = "d_start")]
        start_m: f64,
        #[serde(default = "d_spacing")]
        spacing_m: f64,
        #[serde(default = "d_speed")]
        speed_mps: f64,
        #[serde(default = "d_jitter")]
        jitter_m: f64,
    },
    /// CSV with columns `user,slot,x_m,y_m` holding true positions; estimates
    /// are drawn inside each user's error disc from the seed.
    File { path: PathBuf },
}

fn d_offset() -> f64 {
    RoadLayout::default().offset
}
fn d_start() -> f64 {
    RoadLayout::default().start
}
fn d_spacing() -> f64 {
    RoadLayout::default().spacing
}
fn d_speed() -> f64 {
    RoadLayout::default().speed
}
fn d_jitter() -> f64 {
    RoadLayout::default().jitter
}

impl Default for TrajectorySection {
    fn default() -> Self {
        TrajectorySection::Road {
            offset_m: d_offset(),
            start_m: d_start(),
            spacing_m: d_spacing(),
            speed_mps: d_speed(),
            jitter_m: d_jitter(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKey {
    Geomean,
    LogMinorant,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct AoSection {
    pub epsilon: f64,
    pub max_iters: usize,
    pub objective: ObjectiveKey,
    pub displacement_cap_lambda: f64,
}

impl Default for AoSection {
    fn default() -> Self {
        let d = AoOptions::default();
        AoSection { epsilon: d.epsilon, max_iters: d.max_iters, objective: ObjectiveKey::Geomean, displacement_cap_lambda: d.displacement_cap }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Hash)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    None,
    PMaxDbm,
    M,
    LLambda,
    K,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::None => "none",
            SweepAxis::PMaxDbm => "p_max_dbm",
            SweepAxis::M => "m",
            SweepAxis::LLambda => "l_lambda",
            SweepAxis::K => "k",
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    #[serde(default)]
    pub values: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection { axis: SweepAxis::None, values: Vec::new() }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSpec {
    pub seed: u64,
    pub schemes: Vec<String>,
    pub system: SystemSection,
    pub trajectory: TrajectorySection,
    pub ao: AoSection,
    pub sweep: SweepSection,
    pub output_dir: PathBuf,
    /// Monte-Carlo samples per slot for the verification column; 0 disables it.
    pub verify_samples: usize,
    pub workers: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            seed: 7,
            schemes: Scheme::ALL.iter().map(|s| s.name().to_string()).collect(),
            system: SystemSection::default(),
            trajectory: TrajectorySection::default(),
            ao: AoSection::default(),
            sweep: SweepSection::default(),
            output_dir: PathBuf::from("out"),
            verify_samples: 10_000,
            workers: 1,
        }
    }
}

impl ExperimentSpec {
    pub fn parsed_schemes(&self) -> Result<Vec<Scheme>, ConfigError> {
        if self.schemes.is_empty() {
            return Err(err("schemes", "at least one scheme is required"));
        }
        self.schemes
            .iter()
            .enumerate()
            .map(|(i, s)| s.parse::<Scheme>().map_err(|e| err(&format!("schemes[{i}]"), e.to_string())))
            .collect()
    }

    /// Sweep points; a single `None` for experiments without a sweep.
    pub fn sweep_points(&self) -> Vec<Option<f64>> {
        if self.sweep.axis == SweepAxis::None {
            vec![None]
        } else {
            self.sweep.values.iter().map(|&v| Some(v)).collect()
        }
    }

    /// System section with one sweep value applied.
    pub fn system_at(&self, value: Option<f64>) -> SystemSection {
        let mut s = self.system.clone();
        if let Some(v) = value {
            match self.sweep.axis {
                SweepAxis::None => {}
                SweepAxis::PMaxDbm => s.p_max_dbm = v,
                SweepAxis::M => s.m = v as usize,
                SweepAxis::LLambda => s.l_lambda = v,
                SweepAxis::K => s.k = v as usize,
            }
        }
        s
    }

    pub fn road(&self) -> Option<RoadLayout> {
        match &self.trajectory {
            TrajectorySection::Road { offset_m, start_m, spacing_m, speed_mps, jitter_m } => Some(RoadLayout {
                offset: *offset_m,
                start: *start_m,
                spacing: *spacing_m,
                speed: *speed_mps,
                jitter: *jitter_m,
            }),
            TrajectorySection::File { .. } => None,
        }
    }

    pub fn ao_options(&self) -> AoOptions {
        AoOptions {
            epsilon: self.ao.epsilon,
            max_iters: self.ao.max_iters,
            objective: match self.ao.objective {
                ObjectiveKey::Geomean => ObjectiveModel::GeoMean,
                ObjectiveKey::LogMinorant => ObjectiveModel::LogMinorant,
            },
            displacement_cap: self.ao.displacement_cap_lambda,
            ..AoOptions::default()
        }
    }

    /// Checks every invariant, reporting the offending key path.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.parsed_schemes()?;
        if self.sweep.axis != SweepAxis::None && self.sweep.values.is_empty() {
            return Err(err("sweep.values", "a sweep needs at least one value"));
        }
        for (i, v) in self.sweep.values.iter().enumerate() {
            let integral = matches!(self.sweep.axis, SweepAxis::M | SweepAxis::K);
            if !v.is_finite() || (integral && (v.fract() != 0.0 || *v < 1.0)) {
                return Err(err(&format!("sweep.values[{i}]"), format!("{v} is not valid for axis {}", self.sweep.axis.name())));
            }
        }
        if !(self.ao.epsilon >= 0.0) {
            return Err(err("ao.epsilon", "must be nonnegative"));
        }
        if self.ao.max_iters == 0 {
            return Err(err("ao.max_iters", "must be at least 1"));
        }
        if !(self.ao.displacement_cap_lambda > 0.0) {
            return Err(err("ao.displacement_cap_lambda", "must be positive"));
        }
        if self.workers == 0 {
            return Err(err("workers", "must be at least 1"));
        }
        if let Some(road) = self.road() {
            if !(road.speed.is_finite() && road.offset.is_finite() && road.jitter >= 0.0) {
                return Err(err("trajectory", "road parameters must be finite with nonnegative jitter"));
            }
        }
        for value in self.sweep_points() {
            let prefix = if value.is_some() { "sweep.values -> system" } else { "system" };
            validate_system(&self.system_at(value), prefix)?;
        }
        Ok(())
    }
}

fn validate_system(s: &SystemSection, prefix: &str) -> Result<(), ConfigError> {
    let key = |k: &str| format!("{prefix}.{k}");
    let positive = [
        ("slot_s", s.slot_s),
        ("h_m", s.h_m),
        ("wavelength_m", s.wavelength_m),
        ("d_min_lambda", s.d_min_lambda),
    ];
    for (k, v) in positive {
        if !(v > 0.0 && v.is_finite()) {
            return Err(err(&key(k), format!("must be positive, got {v}")));
        }
    }
    for (k, v) in [("g0_db", s.g0_db), ("noise_dbm", s.noise_dbm), ("p_max_dbm", s.p_max_dbm)] {
        if !v.is_finite() {
            return Err(err(&key(k), "must be finite"));
        }
    }
    if s.m == 0 {
        return Err(err(&key("m"), "must be at least 1"));
    }
    if s.k == 0 {
        return Err(err(&key("k"), "must be at least 1"));
    }
    if s.n == 0 {
        return Err(err(&key("n"), "must be at least 1"));
    }
    if !(s.r_m >= 0.0 && s.r_m.is_finite()) {
        return Err(err(&key("r_m"), "must be nonnegative"));
    }
    if s.xi_override.is_some_and(|v| !(v >= 0.0 && v.is_finite())) {
        return Err(err(&key("xi_override"), "must be nonnegative"));
    }
    if !(s.l_lambda >= (s.m - 1) as f64 * s.d_min_lambda * (1.0 - 1e-12)) {
        return Err(err(&key("l_lambda"), format!("must be at least (m-1)*d_min_lambda = {}", (s.m - 1) as f64 * s.d_min_lambda)));
    }
    Ok(())
}

impl SystemSection {
    pub fn to_config(&self) -> SystemConfig {
        let lambda = self.wavelength_m;
        SystemConfig {
            num_antennas: self.m,
            num_users: self.k,
            num_slots: self.n,
            slot_length: self.slot_s,
            bs_xy: self.bs_xy_m,
            bs_height: self.h_m,
            wavelength: lambda,
            ref_path_gain: db_to_linear(self.g0_db),
            noise_power: vec![dbm_to_watts(self.noise_dbm); self.k],
            max_power: dbm_to_watts(self.p_max_dbm),
            aperture: self.l_lambda * lambda,
            min_spacing: self.d_min_lambda * lambda,
            position_error_radius: vec![self.r_m; self.k],
            xi_override: self.xi_override.map(|v| vec![v; self.k]),
        }
    }
}

/// Applies `MAROBUST__A__B=value` pairs to the JSON tree.
pub fn apply_env_overrides<I>(root: &mut Value, vars: I) -> Result<(), ConfigError>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut vars: Vec<(String, String)> = vars.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
    vars.sort();
    for (key, raw) in vars {
        let path: Vec<String> = key[ENV_PREFIX.len()..].split("__").map(|s| s.to_ascii_lowercase()).collect();
        if path.iter().any(String::is_empty) {
            return Err(err(&key, "malformed override name"));
        }
        let value = serde_json::from_str(&raw).unwrap_or(Value::String(raw));
        let mut node = &mut *root;
        for (i, seg) in path.iter().enumerate() {
            let Value::Object(map) = node else {
                return Err(err(&path[..i].join("."), "override descends into a non-object"));
            };
            if i + 1 == path.len() {
                map.insert(seg.clone(), value.clone());
                break;
            }
            node = map.entry(seg.clone()).or_insert_with(|| Value::Object(Default::default()));
        }
    }
    Ok(())
}

/// Parses a config document with the given environment overrides.
pub fn parse_config<I>(text: &str, env: I) -> Result<ExperimentSpec, ConfigError>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut root: Value = serde_json::from_str(text).map_err(|e| err("", format!("invalid JSON: {e}")))?;
    if !root.is_object() {
        return Err(err("", "top level must be an object"));
    }
    apply_env_overrides(&mut root, env)?;
    let spec: ExperimentSpec = serde_path_to_error::deserialize(root).map_err(|e| {
        let path = e.path().to_string();
        err(if path == "." { "" } else { &path }, e.into_inner().to_string())
    })?;
    spec.validate()?;
    Ok(spec)
}

/// Reads a config file, applying overrides from the process environment.
pub fn load_config(path: &Path) -> Result<ExperimentSpec, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| err("", format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, std::env::vars())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentSpec, ConfigError> {
        parse_config(text, Vec::new())
    }

    #[test]
    fn empty_document_gives_documented_defaults() {
        let spec = parse("{}").unwrap();
        assert_eq!(spec, ExperimentSpec::default());
        let c = spec.system.to_config();
        assert_eq!(c.num_antennas, 4);
        assert_eq!(c.num_users, 2);
        assert!((c.aperture - 0.6).abs() < 1e-15);
    }

    #[test]
    fn power_in_dbm_converts_to_watts() {
        let spec = parse(r#"{"system": {"p_max_dbm": 34}}"#).unwrap();
        assert!((spec.system.to_config().max_power - 2.511886431509580).abs() < 1e-12);
    }

    #[test]
    fn negative_spacing_is_rejected_with_key_path() {
        let e = parse(r#"{"system": {"d_min_lambda": -0.3}}"#).unwrap_err();
        assert_eq!(e.path, "system.d_min_lambda");
    }

    #[test]
    fn unknown_keys_are_rejected_with_key_path() {
        let e = parse(r#"{"system": {"p_max_w": 2}}"#).unwrap_err();
        assert_eq!(e.path, "system.p_max_w");
        assert!(e.msg.contains("p_max_w"), "{e}");
        let e = parse(r#"{"sytem": {}}"#).unwrap_err();
        assert!(e.msg.contains("sytem"), "{e}");
    }

    #[test]
    fn type_errors_carry_the_path() {
        let e = parse(r#"{"ao": {"max_iters": "many"}}"#).unwrap_err();
        assert_eq!(e.path, "ao.max_iters");
    }

    #[test]
    fn empty_scheme_list_is_rejected() {
        let e = parse(r#"{"schemes": []}"#).unwrap_err();
        assert_eq!(e.path, "schemes");
        let e = parse(r#"{"schemes": ["proposed", "best"]}"#).unwrap_err();
        assert_eq!(e.path, "schemes[1]");
    }

    #[test]
    fn sweep_values_are_validated_per_point() {
        assert!(parse(r#"{"sweep": {"axis": "m", "values": [2, 4.5]}}"#).is_err());
        // 30 antennas do not fit into 6 wavelengths at 0.3 spacing
        let e = parse(r#"{"sweep": {"axis": "m", "values": [2, 30]}}"#).unwrap_err();
        assert!(e.path.ends_with("l_lambda"), "{e}");
        assert!(parse(r#"{"sweep": {"axis": "p_max_dbm"}}"#).is_err());
    }

    #[test]
    fn environment_overrides_nested_keys() {
        let env = vec![
            ("MAROBUST__SYSTEM__P_MAX_DBM".to_string(), "30".to_string()),
            ("MAROBUST__OUTPUT_DIR".to_string(), "elsewhere".to_string()),
            ("UNRELATED".to_string(), "1".to_string()),
        ];
        let spec = parse_config(r#"{"system": {"p_max_dbm": 34}}"#, env).unwrap();
        assert_eq!(spec.system.p_max_dbm, 30.0);
        assert_eq!(spec.output_dir, PathBuf::from("elsewhere"));
        let bad = vec![("MAROBUST__SYSTEM__NOPE".to_string(), "1".to_string())];
        assert_eq!(parse_config("{}", bad).unwrap_err().path, "system.nope");
    }

    #[test]
    fn trajectory_variants_parse() {
        let spec = parse(r#"{"trajectory": {"kind": "road", "offset_m": 80}}"#).unwrap();
        assert_eq!(spec.road().unwrap().offset, 80.0);
        let spec = parse(r#"{"trajectory": {"kind": "file", "path": "t.csv"}}"#).unwrap();
        assert!(spec.road().is_none());
    }
}
