//! Plain-text `key = value` scene description.
//!
//! ```text
//! # waveform
//! carrier_hz = 15e9
//! t_sym_s = 1e-7
//! snapshots = 256
//! power_w = 0.1
//! noise_dbm = -114          # or noise_w
//! lightspeed = 3e8
//! phase_mode = raw          # or reduced
//!
//! tx.count = 256
//! tx.spacing_over_lambda = 0.5   # or tx.spacing_m
//! tx.centroid_x = 0
//! rx.count = 256            # rx.* default to the tx values
//!
//! target.1.range = 100      # or target.1.x / target.1.y
//! target.1.angle_deg = 20
//! target.1.vx = 1
//! target.1.vy = 4
//! target.1.rcs_re = 1
//! target.1.rcs_im = 0.1
//! ```
//!
//! Omitted keys take the reference values. Polar target positions are
//! measured from the origin, angles from broadside towards +x.

use nfcrb::scene::{dbm_to_watts, DEFAULT_ELEMENTS, DEFAULT_RCS, DEFAULT_VELOCITY};
use nfcrb::{ArrayGeometry, PhaseMode, Point, Scene, SceneConfig, Target, C64};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    /// 1-based line of the offending entry, when there is one.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError { line: Some(line), message: message.into() }
}

/// One accepted `key = value` line.
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

#[derive(Clone, Debug)]
pub struct ParsedConfig {
    pub scene: Scene,
    /// Accepted entries in document order.
    pub entries: Vec<Entry>,
}

impl ParsedConfig {
    /// `key = value` lines for echoing into output headers.
    pub fn echo(&self) -> Vec<String> {
        self.entries.iter().map(|e| format!("{} = {}", e.key, e.value)).collect()
    }
}

const ARRAY_KEYS: [&str; 4] = ["count", "spacing_over_lambda", "spacing_m", "centroid_x"];
const TARGET_KEYS: [&str; 8] = ["x", "y", "range", "angle_deg", "vx", "vy", "rcs_re", "rcs_im"];

#[derive(Default)]
struct ArraySpec {
    count: Option<(usize, usize)>,
    spacing_over_lambda: Option<(usize, f64)>,
    spacing_m: Option<(usize, f64)>,
    centroid_x: Option<(usize, f64)>,
}

#[derive(Default)]
struct TargetSpec {
    first_line: usize,
    fields: BTreeMap<&'static str, (usize, f64)>,
}

fn number(line: usize, key: &str, value: &str) -> Result<f64, ConfigError> {
    let v: f64 = value
        .parse()
        .map_err(|_| err(line, format!("`{key}` expects a number, got `{value}`")))?;
    if !v.is_finite() {
        return Err(err(line, format!("`{key}` must be finite")));
    }
    Ok(v)
}

fn count(line: usize, key: &str, value: &str) -> Result<usize, ConfigError> {
    value
        .parse()
        .map_err(|_| err(line, format!("`{key}` expects a non-negative integer, got `{value}`")))
}

fn conflict<T>(a: &Option<(usize, T)>, b: &Option<(usize, T)>, what: &str) -> Result<(), ConfigError> {
    if let (Some((la, _)), Some((lb, _))) = (a, b) {
        return Err(err(*la.max(lb), format!("conflicting units: {what}")));
    }
    Ok(())
}

fn build_array(spec: &ArraySpec, fallback: &ArraySpec, side: &str, wavelength: f64) -> Result<ArrayGeometry, ConfigError> {
    let pick_count = spec.count.or(fallback.count).map(|c| c.1).unwrap_or(DEFAULT_ELEMENTS);
    let own_spacing = spec.spacing_over_lambda.is_some() || spec.spacing_m.is_some();
    let src = if own_spacing { spec } else { fallback };
    let spacing = match (src.spacing_over_lambda, src.spacing_m) {
        (Some((_, r)), None) => r * wavelength,
        (None, Some((_, m))) => m,
        _ => wavelength / 2.0,
    };
    let centroid = spec.centroid_x.or(fallback.centroid_x).map(|c| c.1).unwrap_or(0.0);
    let line = spec.count.map(|c| c.0).or(spec.spacing_m.map(|c| c.0)).or(spec.spacing_over_lambda.map(|c| c.0));
    ArrayGeometry::ula(pick_count, spacing, centroid).map_err(|e| ConfigError {
        line,
        message: format!("{side} array: {e}"),
    })
}

fn build_target(index: usize, spec: &TargetSpec) -> Result<Target, ConfigError> {
    let get = |k: &str| spec.fields.get(k).map(|v| v.1);
    let line_of = |k: &str| spec.fields.get(k).map(|v| v.0).unwrap_or(spec.first_line);
    let cartesian = get("x").is_some() || get("y").is_some();
    let polar = get("range").is_some() || get("angle_deg").is_some();
    let position = match (cartesian, polar) {
        (true, true) => {
            let line = line_of("range").max(line_of("angle_deg")).max(line_of("x")).max(line_of("y"));
            return Err(err(line, format!("target {index}: both cartesian and polar position given")));
        }
        (true, false) => match (get("x"), get("y")) {
            (Some(x), Some(y)) => Point::new(x, y),
            _ => return Err(err(spec.first_line, format!("target {index}: needs both x and y"))),
        },
        (false, true) => match (get("range"), get("angle_deg")) {
            (Some(r), Some(a)) => {
                let a = a.to_radians();
                Point::new(r * a.sin(), r * a.cos())
            }
            _ => return Err(err(spec.first_line, format!("target {index}: needs both range and angle_deg"))),
        },
        (false, false) => return Err(err(spec.first_line, format!("target {index}: missing position"))),
    };
    let velocity = (get("vx").unwrap_or(DEFAULT_VELOCITY.0), get("vy").unwrap_or(DEFAULT_VELOCITY.1));
    let rcs = C64::new(get("rcs_re").unwrap_or(DEFAULT_RCS.re), get("rcs_im").unwrap_or(DEFAULT_RCS.im));
    Ok(Target::new(position, velocity, rcs))
}

/// Parses a scene description. An empty document gives the reference scene.
pub fn parse_config(text: &str) -> Result<ParsedConfig, ConfigError> {
    let mut config = SceneConfig::default();
    let mut entries: Vec<Entry> = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let (mut tx, mut rx) = (ArraySpec::default(), ArraySpec::default());
    let mut targets: BTreeMap<usize, TargetSpec> = BTreeMap::new();
    let mut noise: (Option<(usize, f64)>, Option<(usize, f64)>) = (None, None);

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected `key = value`, got `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(err(line, format!("`{key}` has no value")));
        }
        if let Some(prev) = seen.insert(key.to_string(), line) {
            return Err(err(line, format!("`{key}` already set on line {prev}")));
        }
        let parts: Vec<&str> = key.split('.').collect();
        match parts.as_slice() {
            ["carrier_hz"] => config.carrier_hz = number(line, key, value)?,
            ["t_sym_s"] => config.t_sym_s = number(line, key, value)?,
            ["snapshots"] => config.snapshots = count(line, key, value)?,
            ["power_w"] => config.power_w = number(line, key, value)?,
            ["lightspeed"] => config.lightspeed = number(line, key, value)?,
            ["noise_dbm"] => noise.0 = Some((line, number(line, key, value)?)),
            ["noise_w"] => noise.1 = Some((line, number(line, key, value)?)),
            ["phase_mode"] => {
                config.phase_mode = match value {
                    "raw" => PhaseMode::Raw,
                    "reduced" => PhaseMode::Reduced,
                    _ => return Err(err(line, format!("phase_mode must be `raw` or `reduced`, got `{value}`"))),
                }
            }
            [side @ ("tx" | "rx"), field] if ARRAY_KEYS.contains(field) => {
                let spec = if *side == "tx" { &mut tx } else { &mut rx };
                match *field {
                    "count" => spec.count = Some((line, count(line, key, value)?)),
                    "spacing_over_lambda" => spec.spacing_over_lambda = Some((line, number(line, key, value)?)),
                    "spacing_m" => spec.spacing_m = Some((line, number(line, key, value)?)),
                    _ => spec.centroid_x = Some((line, number(line, key, value)?)),
                }
            }
            ["target", idx, field] => {
                let field = TARGET_KEYS
                    .iter()
                    .find(|k| *k == field)
                    .ok_or_else(|| err(line, format!("unknown key `{key}`")))?;
                let idx: usize = idx
                    .parse()
                    .ok()
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| err(line, format!("target index in `{key}` must be a positive integer")))?;
                let spec = targets.entry(idx).or_insert_with(|| TargetSpec { first_line: line, ..Default::default() });
                spec.fields.insert(field, (line, number(line, key, value)?));
            }
            _ => return Err(err(line, format!("unknown key `{key}`"))),
        }
        entries.push(Entry { line, key: key.to_string(), value: value.to_string() });
    }

    conflict(&noise.0, &noise.1, "noise_dbm and noise_w")?;
    if let Some((_, dbm)) = noise.0 {
        config.noise_var_w = dbm_to_watts(dbm);
    }
    if let Some((_, w)) = noise.1 {
        config.noise_var_w = w;
    }
    conflict(&tx.spacing_over_lambda, &tx.spacing_m, "tx.spacing_over_lambda and tx.spacing_m")?;
    conflict(&rx.spacing_over_lambda, &rx.spacing_m, "rx.spacing_over_lambda and rx.spacing_m")?;
    let wavelength = config.wavelength();
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return Err(ConfigError { line: None, message: "carrier_hz and lightspeed must be positive".into() });
    }
    config.tx = build_array(&tx, &ArraySpec::default(), "tx", wavelength)?;
    config.rx = build_array(&rx, &tx, "rx", wavelength)?;

    if !targets.is_empty() {
        let mut list = Vec::with_capacity(targets.len());
        for (expected, (idx, spec)) in (1..).zip(&targets) {
            if *idx != expected {
                return Err(err(spec.first_line, format!("missing target {expected}: indices must run 1, 2, ... without gaps")));
            }
            list.push(build_target(*idx, spec)?);
        }
        config.targets = list;
    }

    let scene = Scene::new(config).map_err(|e| ConfigError { line: None, message: e.to_string() })?;
    Ok(ParsedConfig { scene, entries })
}
