//! Run configuration: a sectioned `[section] key = value` text file parsed,
//! validated across fields, and hashed for reproducibility metadata.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{PhaseGrid, WEIGHT_EXP_LIMIT};
use crate::params::{bd_beta, ModelParams};
use crate::presets::Preset;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: RawModel,
    grid: RawGrid,
    time: RawTime,
    scenario: RawScenario,
    certify: Option<RawCertify>,
    paths: Option<RawPaths>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    gamma: f64,
    delta: f64,
    m: f64,
    alpha: f64,
    beta: Option<f64>,
    /// `bd = "auto"` derives beta from the entropy-compatible relation.
    bd: Option<String>,
    rho_inf: Option<f64>,
    strict_admissibility: Option<bool>,
    density_floor: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    dim: usize,
    nx: usize,
    nxi: usize,
    x_extent: f64,
    xi_extent: f64,
    weight_p: Option<f64>,
    weight_a: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    t_end: f64,
    cfl: Option<f64>,
    output_every: Option<usize>,
}

// no deny_unknown_fields here: the numeric parameters are collected by the
// flatten and validated against the preset's own parameter list
#[derive(Debug, Deserialize)]
struct RawScenario {
    preset: String,
    #[serde(flatten)]
    params: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCertify {
    resolution: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPaths {
    output_dir: Option<String>,
}

/// A fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: ModelParams,
    pub grid: PhaseGrid,
    pub weight_p: f64,
    pub weight_a: f64,
    pub t_end: f64,
    pub cfl: f64,
    pub output_every: usize,
    pub density_floor: f64,
    pub preset_name: String,
    pub preset: Preset,
    pub certify_resolution: usize,
    pub output_dir: PathBuf,
    pub hash: String,
}

/// 1-based line of the first occurrence of a key token, for error messages.
fn line_of_key(text: &str, key: &str) -> usize {
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim_start();
        if trimmed.starts_with(key)
            && trimmed[key.len()..].trim_start().starts_with('=')
        {
            return i + 1;
        }
    }
    1
}

fn config_err(text: &str, key: &str, msg: String) -> Error {
    Error::Config { line: line_of_key(text, key), msg }
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(1);
        Error::Config { line, msg: e.message().to_string() }
    })?;

    let m = &raw.model;
    let beta = match (&m.beta, &m.bd) {
        (Some(_), Some(_)) => {
            return Err(config_err(text, "bd", "give either `beta` or `bd`, not both".into()))
        }
        (Some(b), None) => *b,
        (None, Some(mode)) if mode == "auto" => bd_beta(m.alpha, m.delta),
        (None, Some(mode)) => {
            return Err(config_err(text, "bd", format!("unknown bd mode `{mode}` (use \"auto\")")))
        }
        (None, None) => {
            return Err(config_err(text, "alpha", "missing `beta` (or `bd = \"auto\"`)".into()))
        }
    };
    let strict = m.strict_admissibility.unwrap_or(true);
    let params = ModelParams::new(
        m.gamma,
        m.delta,
        m.m,
        m.alpha,
        beta,
        m.rho_inf.unwrap_or(0.0),
        raw.grid.dim,
        strict,
    )
    .map_err(|e| config_err(text, "delta", e.to_string()))?;
    let density_floor = m.density_floor.unwrap_or(1e-10);
    if !(density_floor > 0.0) {
        return Err(config_err(text, "density_floor", "density_floor must be > 0".into()));
    }

    let g = &raw.grid;
    let grid = PhaseGrid::new(g.dim, g.nx, g.nxi, g.x_extent, g.xi_extent)
        .map_err(|e| config_err(text, "nx", e.to_string()))?;
    let weight_p = g.weight_p.unwrap_or(2.0);
    let weight_a = g.weight_a.unwrap_or(1.0);
    if weight_p < 2.0 {
        return Err(config_err(text, "weight_p", format!("weight_p must be >= 2, got {weight_p}")));
    }
    if !(weight_a > 0.0) {
        return Err(config_err(text, "weight_a", format!("weight_a must be > 0, got {weight_a}")));
    }
    let corner = g.dim as f64 * g.xi_extent * g.xi_extent;
    if weight_a * corner >= WEIGHT_EXP_LIMIT {
        return Err(config_err(
            text,
            "weight_a",
            format!(
                "weight overflow: a * |xi|^2_max = {} >= {WEIGHT_EXP_LIMIT}; reduce the \
                 velocity extent or a",
                weight_a * corner
            ),
        ));
    }

    let t = &raw.time;
    if !(t.t_end >= 0.0) || !t.t_end.is_finite() {
        return Err(config_err(text, "t_end", format!("t_end must be >= 0, got {}", t.t_end)));
    }
    let cfl = t.cfl.unwrap_or(0.4);
    if !(cfl > 0.0 && cfl < 1.0) {
        return Err(config_err(text, "cfl", format!("cfl must lie in (0,1), got {cfl}")));
    }
    let output_every = t.output_every.unwrap_or(10);
    if output_every == 0 {
        return Err(config_err(text, "output_every", "output_every must be >= 1".into()));
    }

    let preset = Preset::from_config(&raw.scenario.preset, &raw.scenario.params, &grid)
        .map_err(|e| config_err(text, "preset", e.to_string()))?;
    preset.validate(&params, &grid).map_err(|e| config_err(text, "preset", e.to_string()))?;

    let certify_resolution = raw.certify.as_ref().and_then(|c| c.resolution).unwrap_or(48);
    if certify_resolution < 8 {
        return Err(config_err(text, "resolution", "certify resolution must be >= 8".into()));
    }
    let output_dir = PathBuf::from(
        raw.paths.as_ref().and_then(|p| p.output_dir.clone()).unwrap_or_else(|| "out".into()),
    );

    // the hash covers every semantic field in a canonical order
    let mut canon = String::new();
    use std::fmt::Write as _;
    write!(
        canon,
        "gamma={:.17e};delta={:.17e};m={:.17e};alpha={:.17e};beta={:.17e};rho_inf={:.17e};\
         strict={};floor={:.17e};dim={};nx={};nxi={};x_extent={:.17e};xi_extent={:.17e};\
         weight_p={:.17e};weight_a={:.17e};t_end={:.17e};cfl={:.17e};output_every={};\
         preset={};certify_resolution={}",
        params.gamma,
        params.delta,
        params.m_drag,
        params.alpha,
        params.beta,
        params.rho_inf,
        strict,
        density_floor,
        g.dim,
        g.nx,
        g.nxi,
        g.x_extent,
        g.xi_extent,
        weight_p,
        weight_a,
        t.t_end,
        cfl,
        output_every,
        raw.scenario.preset,
        certify_resolution
    )
    .unwrap();
    for (k, v) in &raw.scenario.params {
        write!(canon, ";{k}={v:.17e}").unwrap();
    }
    let digest = Sha256::digest(canon.as_bytes());
    let hash: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();

    Ok(RunConfig {
        params,
        grid,
        weight_p,
        weight_a,
        t_end: t.t_end,
        cfl,
        output_every,
        density_floor,
        preset_name: raw.scenario.preset.clone(),
        preset,
        certify_resolution,
        output_dir,
        hash,
    })
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    parse_config_str(&std::fs::read_to_string(path)?)
}

impl RunConfig {
    pub fn scenario(&self) -> crate::coupled::Scenario {
        crate::coupled::Scenario {
            params: self.params.clone(),
            grid: self.grid.clone(),
            preset: self.preset.clone(),
            t_end: self.t_end,
            cfl: self.cfl,
            output_every: self.output_every,
            density_floor: self.density_floor,
            config_hash: self.hash.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[model]
gamma = 1.4
delta = 1.2
m = 2.0
alpha = 0.05
beta = 0.02
rho_inf = 0.15

[grid]
dim = 1
nx = 64
nxi = 64
x_extent = 4.0
xi_extent = 5.0

[time]
t_end = 0.5

[scenario]
preset = "counterflow"
"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config_str(MINIMAL).unwrap();
        assert_eq!(cfg.cfl, 0.4);
        assert_eq!(cfg.weight_p, 2.0);
        assert_eq!(cfg.weight_a, 1.0);
        assert_eq!(cfg.output_every, 10);
        assert_eq!(cfg.density_floor, 1e-10);
        assert_eq!(cfg.certify_resolution, 48);
        assert_eq!(cfg.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn strict_admissibility_rejects_large_delta_with_line() {
        let text = MINIMAL.replace("delta = 1.2", "delta = 5.0");
        match parse_config_str(&text) {
            Err(Error::Config { line, msg }) => {
                assert!(msg.contains("min((gamma+1)/2, 3, (2m+1)/3)"), "{msg}");
                assert!(line > 0);
            }
            other => panic!("expected config error, got {other:?}"),
        }
        // relaxing the toggle admits it (blow-up window studies)
        let relaxed = text.replace("[grid]", "strict_admissibility = false\n\n[grid]");
        let relaxed = relaxed.replace("delta = 5.0", "delta = 1.3");
        assert!(parse_config_str(&relaxed).is_ok());
    }

    #[test]
    fn bd_auto_derives_beta() {
        let text = MINIMAL
            .replace("beta = 0.02", "bd = \"auto\"")
            .replace("alpha = 0.05", "alpha = 1.0")
            .replace("delta = 1.2", "delta = 1.2");
        let cfg = parse_config_str(&text).unwrap();
        // 2 * alpha * (delta - 1)
        assert!((cfg.params.beta - 2.0 * 1.0 * 0.2).abs() < 1e-15);
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = MINIMAL.replace("t_end = 0.5", "t_end = 0.5\nwarp = 9");
        match parse_config_str(&text) {
            Err(Error::Config { line, .. }) => assert!(line > 1),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn missing_required_key_rejected() {
        let text = MINIMAL.replace("gamma = 1.4\n", "");
        assert!(matches!(parse_config_str(&text), Err(Error::Config { .. })));
    }

    #[test]
    fn weight_overflow_guard() {
        let text = MINIMAL.replace("xi_extent = 5.0", "xi_extent = 30.0");
        match parse_config_str(&text) {
            Err(Error::Config { msg, .. }) => assert!(msg.contains("overflow")),
            other => panic!("expected overflow rejection, got {other:?}"),
        }
    }

    #[test]
    fn hash_changes_iff_semantics_change() {
        let a = parse_config_str(MINIMAL).unwrap();
        // formatting-only change: same hash
        let b = parse_config_str(&MINIMAL.replace("t_end = 0.5", "t_end   =   0.5")).unwrap();
        assert_eq!(a.hash, b.hash);
        // semantic change: different hash
        let c = parse_config_str(&MINIMAL.replace("t_end = 0.5", "t_end = 0.6")).unwrap();
        assert_ne!(a.hash, c.hash);
        // scenario parameter change: different hash
        let d =
            parse_config_str(&MINIMAL.replace("preset = \"counterflow\"", "preset = \"counterflow\"\nu0 = 0.2"))
                .unwrap();
        assert_ne!(a.hash, d.hash);
    }

    #[test]
    fn scenario_params_reach_the_preset() {
        let text = MINIMAL.replace("preset = \"counterflow\"", "preset = \"counterflow\"\nu0 = 0.25");
        let cfg = parse_config_str(&text).unwrap();
        match cfg.preset {
            Preset::Counterflow { u0, .. } => assert_eq!(u0, 0.25),
            other => panic!("unexpected preset {other:?}"),
        }
    }
}
