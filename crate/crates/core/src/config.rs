//! Flat `key = value` scenario files.
//!
//! Keys ending in `_um`, `_ms`, `_Er` or `_rad` carry units and are converted
//! to recoil units with the (possibly overridden) physical constants. Bare
//! keys are already dimensionless. `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt;

use crate::bandstructure::LatticeParams;
use crate::error::{Error, Result};
use crate::experiments::{Engine, Loading, ScenarioConfig, DEFAULT_DETECT_OFFSET_W0};
use crate::units::{recoil_scale, PhysicalConstants, RecoilScale};

/// Where a bad entry came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Source {
    Line(usize),
    Override,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Line(n) => write!(f, "line {n}"),
            Source::Override => f.write_str("--set"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("{at}: expected `key = value`, got `{text}`")]
    Malformed { at: Source, text: String },
    #[error("{at}: unknown key `{key}`")]
    UnknownKey { at: Source, key: String },
    #[error("{at}: key `{key}` given twice (first on line {first})")]
    Duplicate { at: Source, key: String, first: usize },
    #[error("{at}: key `{key}` expects {expected}, got `{value}`")]
    BadValue { at: Source, key: String, expected: &'static str, value: String },
    #[error("{at}: key `{key}`: {reason}")]
    OutOfRange { at: Source, key: String, reason: String },
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Real,
    Count,
    Flag,
    Engine,
    Loading,
}

impl Kind {
    fn expected(self) -> &'static str {
        match self {
            Kind::Real => "a finite number",
            Kind::Count => "a non-negative integer",
            Kind::Flag => "true or false",
            Kind::Engine => "dirac or schrodinger",
            Kind::Loading => "sudden or band",
        }
    }
}

const KEYS: &[(&str, Kind)] = &[
    ("wavelength_m", Kind::Real),
    ("wavelength_nm", Kind::Real),
    ("atom_mass_kg", Kind::Real),
    ("planck_h", Kind::Real),
    ("gravity", Kind::Real),
    ("engine", Kind::Engine),
    ("loading", Kind::Loading),
    ("v1_Er", Kind::Real),
    ("v2_Er", Kind::Real),
    ("phi_rad", Kind::Real),
    ("barrier_height_Er", Kind::Real),
    ("w0", Kind::Real),
    ("w0_um", Kind::Real),
    ("q0", Kind::Real),
    ("sigma_z", Kind::Real),
    ("sigma_z_um", Kind::Real),
    ("total_time", Kind::Real),
    ("total_time_ms", Kind::Real),
    ("dt", Kind::Real),
    ("z_min", Kind::Real),
    ("z_min_um", Kind::Real),
    ("z_max", Kind::Real),
    ("z_max_um", Kind::Real),
    ("n_points", Kind::Count),
    ("n_cut", Kind::Count),
    ("fit_halfwidth", Kind::Real),
    ("detect_offset", Kind::Real),
    ("detect_offset_um", Kind::Real),
    ("fall_offset", Kind::Real),
    ("fall_offset_um", Kind::Real),
    ("absorber", Kind::Flag),
    ("phi_points", Kind::Count),
    ("vb_points", Kind::Count),
    ("vb_max_Er", Kind::Real),
];

/// Every accepted key.
pub fn known_keys() -> impl Iterator<Item = &'static str> {
    KEYS.iter().map(|(k, _)| *k)
}

#[derive(Clone, Debug)]
enum Value {
    Real(f64),
    Count(usize),
    Flag(bool),
    Engine(Engine),
    Loading(Loading),
}

#[derive(Clone, Debug)]
struct Entry {
    at: Source,
    value: Value,
}

fn split_entry(text: &str, at: &Source) -> std::result::Result<(String, String), ConfigError> {
    let Some((k, v)) = text.split_once('=') else {
        return Err(ConfigError::Malformed { at: at.clone(), text: text.to_string() });
    };
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() || v.is_empty() {
        return Err(ConfigError::Malformed { at: at.clone(), text: text.to_string() });
    }
    Ok((k.to_string(), v.to_string()))
}

fn parse_value(key: &str, raw: &str, at: &Source) -> std::result::Result<Value, ConfigError> {
    let Some(&(_, kind)) = KEYS.iter().find(|(k, _)| *k == key) else {
        return Err(ConfigError::UnknownKey { at: at.clone(), key: key.to_string() });
    };
    let bad = || ConfigError::BadValue {
        at: at.clone(),
        key: key.to_string(),
        expected: kind.expected(),
        value: raw.to_string(),
    };
    Ok(match kind {
        Kind::Real => Value::Real(raw.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(bad)?),
        Kind::Count => Value::Count(raw.parse().map_err(|_| bad())?),
        Kind::Flag => Value::Flag(raw.parse().map_err(|_| bad())?),
        Kind::Engine => Value::Engine(match raw {
            "dirac" => Engine::Dirac,
            "schrodinger" => Engine::Schrodinger,
            _ => return Err(bad()),
        }),
        Kind::Loading => Value::Loading(match raw {
            "sudden" => Loading::Sudden,
            "band" => Loading::Band,
            _ => return Err(bad()),
        }),
    })
}

/// Parses a scenario file with defaults for every missing key.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    parse_config_with_overrides::<&str>(text, &[])
}

/// Like [`parse_config`], then applies `key=value` overrides, which win over the file.
pub fn parse_config_with_overrides<S: AsRef<str>>(text: &str, overrides: &[S]) -> Result<ScenarioConfig> {
    let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let at = Source::Line(i + 1);
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, raw) = split_entry(content, &at)?;
        let value = parse_value(&key, &raw, &at)?;
        if let Some(Entry { at: Source::Line(first), .. }) = entries.get(&key) {
            return Err(ConfigError::Duplicate { at, key, first: *first }.into());
        }
        entries.insert(key, Entry { at, value });
    }
    for o in overrides {
        let at = Source::Override;
        let (key, raw) = split_entry(o.as_ref().trim(), &at)?;
        let value = parse_value(&key, &raw, &at)?;
        entries.insert(key, Entry { at, value });
    }
    build(&entries)
}

fn range_err(e: &Entry, key: &str, err: Error) -> Error {
    let reason = match err {
        Error::InvalidParameter { reason, .. } => reason,
        other => other.to_string(),
    };
    ConfigError::OutOfRange { at: e.at.clone(), key: key.to_string(), reason }.into()
}

fn real(e: &Entry) -> f64 {
    match e.value {
        Value::Real(x) => x,
        _ => unreachable!("key kinds are checked on parse"),
    }
}

fn count(e: &Entry) -> usize {
    match e.value {
        Value::Count(n) => n,
        _ => unreachable!("key kinds are checked on parse"),
    }
}

fn exclusive<'a>(entries: &'a BTreeMap<String, Entry>, bare: &str, unit: &str) -> Result<Option<(&'a Entry, bool)>> {
    match (entries.get(bare), entries.get(unit)) {
        (Some(_), Some(e)) => Err(ConfigError::OutOfRange {
            at: e.at.clone(),
            key: unit.to_string(),
            reason: format!("conflicts with `{bare}`"),
        }
        .into()),
        (Some(e), None) => Ok(Some((e, false))),
        (None, Some(e)) => Ok(Some((e, true))),
        (None, None) => Ok(None),
    }
}

/// Length in 1/k from either the bare or the `_um` key.
fn length(entries: &BTreeMap<String, Entry>, bare: &str, scale: &RecoilScale) -> Result<Option<f64>> {
    let unit = format!("{bare}_um");
    Ok(exclusive(entries, bare, &unit)?.map(|(e, si)| if si { scale.length_from_si(real(e) * 1e-6) } else { real(e) }))
}

/// Config keys that set the scenario field reported by validation.
fn config_keys(field: &str) -> &'static [&'static str] {
    match field {
        "barrier_height_vb" => &["barrier_height_Er"],
        "total_time" => &["total_time", "total_time_ms"],
        "w0" => &["w0", "w0_um"],
        "sigma_z" => &["sigma_z", "sigma_z_um"],
        "detect_offset" => &["detect_offset", "detect_offset_um"],
        "q0" => &["q0"],
        "dt" => &["dt"],
        "sweep points" => &["phi_points", "vb_points"],
        "n_points" => &["n_points"],
        "grid" => &["z_min", "z_min_um", "z_max", "z_max_um"],
        _ => &[],
    }
}

fn build(entries: &BTreeMap<String, Entry>) -> Result<ScenarioConfig> {
    let mut constants = PhysicalConstants::rb87();
    if let Some((e, nm)) = exclusive(entries, "wavelength_m", "wavelength_nm")? {
        let key = if nm { "wavelength_nm" } else { "wavelength_m" };
        let wl = if nm { real(e) * 1e-9 } else { real(e) };
        constants = constants.with_wavelength(wl).map_err(|x| range_err(e, key, x))?;
    }
    if let Some(e) = entries.get("atom_mass_kg") {
        constants = constants.with_atom_mass(real(e)).map_err(|x| range_err(e, "atom_mass_kg", x))?;
    }
    if let Some(e) = entries.get("planck_h") {
        constants = constants.with_planck_h(real(e)).map_err(|x| range_err(e, "planck_h", x))?;
    }
    if let Some(e) = entries.get("gravity") {
        constants = constants.with_gravity(real(e)).map_err(|x| range_err(e, "gravity", x))?;
    }
    let scale = recoil_scale(&constants);
    let mut cfg = ScenarioConfig::with_constants(constants);

    let v1 = entries.get("v1_Er").map_or(cfg.lattice.v1(), real);
    let v2 = entries.get("v2_Er").map_or(cfg.lattice.v2(), real);
    let phi = entries.get("phi_rad").map_or(cfg.lattice.phi(), real);
    cfg.lattice = LatticeParams::new(v1, v2, phi).map_err(|x| {
        let key = ["v1_Er", "v2_Er", "phi_rad"].into_iter().find(|k| entries.contains_key(*k)).unwrap_or("v1_Er");
        range_err(&entries[key], key, x)
    })?;

    if let Some(w0) = length(entries, "w0", &scale)? {
        cfg.w0 = w0;
        cfg.detect_offset = DEFAULT_DETECT_OFFSET_W0 * w0;
    }
    if let Some(x) = length(entries, "sigma_z", &scale)? {
        cfg.sigma_z = x;
    }
    if let Some(x) = length(entries, "z_min", &scale)? {
        cfg.z_min = x;
    }
    if let Some(x) = length(entries, "z_max", &scale)? {
        cfg.z_max = x;
    }
    if let Some(x) = length(entries, "detect_offset", &scale)? {
        cfg.detect_offset = x;
    }
    if let Some(x) = length(entries, "fall_offset", &scale)? {
        cfg.fall_offset = x;
    }
    if let Some((e, si)) = exclusive(entries, "total_time", "total_time_ms")? {
        cfg.total_time = if si { scale.time_from_si(real(e) * 1e-3) } else { real(e) };
    }

    for (key, e) in entries {
        match (key.as_str(), &e.value) {
            ("engine", Value::Engine(x)) => cfg.engine = *x,
            ("loading", Value::Loading(x)) => cfg.loading = *x,
            ("barrier_height_Er", _) => cfg.barrier_height_vb = real(e),
            ("q0", _) => cfg.q0 = real(e),
            ("dt", _) => cfg.dt = real(e),
            ("n_points", _) => cfg.n_points = Some(count(e)),
            ("n_cut", _) => cfg.n_cut = count(e),
            ("fit_halfwidth", _) => cfg.fit_halfwidth = real(e),
            ("absorber", Value::Flag(x)) => cfg.absorber = *x,
            ("phi_points", _) => cfg.phi_points = count(e),
            ("vb_points", _) => cfg.vb_points = count(e),
            ("vb_max_Er", _) => cfg.vb_max = real(e),
            // constants, lattice and length keys are handled above
            _ => {}
        }
    }
    cfg.validate().map_err(|err| match err {
        Error::InvalidParameter { name, reason } => {
            match config_keys(name).iter().find_map(|k| entries.get(*k).map(|e| (*k, e))) {
                Some((key, e)) => ConfigError::OutOfRange { at: e.at.clone(), key: key.to_string(), reason }.into(),
                None => Error::InvalidParameter { name, reason },
            }
        }
        other => other,
    })?;
    Ok(cfg)
}
