//! Run configuration: JSON file, `--set key=value` overrides, flags.
//!
//! Overrides are applied to the raw JSON before deserialization, so unknown
//! keys are rejected the same way whether they come from the file or a flag.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use norminflate::lacunary::{k_rule, DEFAULT_DELTA};
use norminflate::{LacunaryParams, TGridSpec};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Default for `output_dir` when neither the config nor a flag sets it.
pub const OUTPUT_DIR_ENV: &str = "NORMINFLATE_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "norminflate-out";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Construct,
    Picard,
    Simulate,
    Besov,
    Sweep,
    Witness,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Construct => "construct",
            Command::Picard => "picard",
            Command::Simulate => "simulate",
            Command::Besov => "besov",
            Command::Sweep => "sweep",
            Command::Witness => "witness",
        }
    }
}

/// Construction parameters. `beta` and `k` default to the growth path
/// `β = 1/2 - ν/2`, `K = max(2, round(r^{ν/2}))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsConfig {
    pub r: u32,
    pub beta: Option<f64>,
    pub k: Option<i64>,
    pub nu: f64,
    pub delta: f64,
    pub s: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        ParamsConfig {
            r: 4,
            beta: None,
            k: None,
            nu: 0.2,
            delta: DEFAULT_DELTA,
            s: 1.0,
        }
    }
}

impl ParamsConfig {
    /// Parameters at `r`, before any validation.
    pub fn at(&self, r: u32) -> LacunaryParams {
        LacunaryParams {
            r,
            beta: self.beta.unwrap_or(0.5 - self.nu / 2.0),
            k: self.k.map_or_else(|| k_rule(r, self.nu), i128::from),
            nu: self.nu,
            delta: self.delta,
            s: self.s,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    /// Grid points per axis.
    pub n: usize,
    /// Snapshot times; each must lie in `(0, 1]`.
    pub times: Vec<f64>,
    /// Common factor on both data amplitudes.
    pub amplitude_scale: f64,
    /// When set, a second run with amplitudes times this factor checks how
    /// `||y||_∞` shrinks.
    pub reduction_factor: Option<f64>,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            n: 64,
            times: vec![0.25],
            amplitude_scale: 1.0,
            reduction_factor: None,
        }
    }
}

/// Mirror of [`TGridSpec`] with the same defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TGridSection {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    pub refine_rounds: usize,
    pub prune_rel: f64,
}

impl Default for TGridSection {
    fn default() -> Self {
        let d = TGridSpec::default();
        TGridSection {
            t_min: d.t_min,
            t_max: d.t_max,
            points: d.points,
            refine_rounds: d.refine_rounds,
            prune_rel: d.prune_rel,
        }
    }
}

impl TGridSection {
    pub fn spec(&self) -> TGridSpec {
        TGridSpec {
            t_min: self.t_min,
            t_max: self.t_max,
            points: self.points,
            refine_rounds: self.refine_rounds,
            prune_rel: self.prune_rel,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PicardSection {
    pub t: f64,
}

impl Default for PicardSection {
    fn default() -> Self {
        PicardSection { t: 0.1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    /// Growth of the resonant term along the parameter path.
    Inflation,
    /// Lemma constants across `r` plus the operator probes.
    Stability,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub kind: SweepKind,
    pub rs: Vec<u32>,
    pub amplitude_scale: f64,
    /// Random fields per operator probe (stability sweep).
    pub probe_trials: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            kind: SweepKind::Inflation,
            rs: vec![8, 16, 32, 64],
            amplitude_scale: 1.0,
            probe_trials: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WitnessSection {
    pub epsilon: f64,
    pub s: f64,
}

impl Default for WitnessSection {
    fn default() -> Self {
        WitnessSection { epsilon: 0.9, s: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub params: ParamsConfig,
    pub sim: SimSection,
    pub tgrid: TGridSection,
    pub picard: PicardSection,
    pub sweep: SweepSection,
    pub witness: WitnessSection,
    pub output_dir: Option<PathBuf>,
    /// No wall-clock data in outputs, so repeated runs are byte-identical.
    pub deterministic: bool,
    /// Seed of the random probe fields.
    pub seed: u64,
    pub jobs: Option<usize>,
    pub plot: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            params: ParamsConfig::default(),
            sim: SimSection::default(),
            tgrid: TGridSection::default(),
            picard: PicardSection::default(),
            sweep: SweepSection::default(),
            witness: WitnessSection::default(),
            output_dir: None,
            deterministic: false,
            seed: 7,
            jobs: None,
            plot: false,
        }
    }
}

/// Values given on the command line, applied on top of the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub command: Option<Command>,
    pub sets: Vec<String>,
    pub jobs: Option<usize>,
    pub plot: bool,
    pub deterministic: bool,
}

/// Sets `key` (dotted path) to `raw`, parsed as JSON when possible and taken
/// as a string otherwise.
pub fn apply_set(root: &mut Value, assignment: &str) -> Result<()> {
    let Some((key, raw)) = assignment.split_once('=') else {
        bail!("--set expects KEY=VALUE, got `{assignment}`");
    };
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        bail!("--set: malformed key `{key}`");
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let Value::Object(map) = node else {
            bail!("--set {key}: `{}` is not a section", parts[..i].join("."));
        };
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("loop returns on the last key")
}

/// File contents (or `{}`), then `--set`s, then flags; validated at the end.
pub fn load(path: Option<&Path>, ov: &Overrides) -> Result<RunConfig> {
    let mut root = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
        }
        None => Value::Object(Map::new()),
    };
    if !root.is_object() {
        bail!("config: top level must be a JSON object");
    }
    for s in &ov.sets {
        apply_set(&mut root, s)?;
    }
    let mut cfg: RunConfig = serde_json::from_value(root).context("config")?;
    if ov.command.is_some() {
        cfg.command = ov.command;
    }
    if ov.jobs.is_some() {
        cfg.jobs = ov.jobs;
    }
    cfg.plot |= ov.plot;
    cfg.deterministic |= ov.deterministic;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.command.is_none() {
            bail!("command: give a subcommand or set `command` in the config");
        }
        if self.jobs == Some(0) {
            bail!("jobs: must be at least 1");
        }
        self.tgrid.spec().validate().context("tgrid")?;
        Ok(())
    }

    /// Fills `output_dir` from the environment or the default.
    pub fn resolve_output_dir(&mut self) -> PathBuf {
        let dir = self.output_dir.clone().unwrap_or_else(|| {
            std::env::var_os(OUTPUT_DIR_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR), PathBuf::from)
        });
        self.output_dir = Some(dir.clone());
        dir
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_parses_json_and_strings() {
        let mut v = Value::Object(Map::new());
        apply_set(&mut v, "params.r=8").unwrap();
        apply_set(&mut v, "sweep.kind=stability").unwrap();
        apply_set(&mut v, "sim.times=[0.1,0.2]").unwrap();
        let cfg: RunConfig = serde_json::from_value(v).unwrap();
        assert_eq!(cfg.params.r, 8);
        assert_eq!(cfg.sweep.kind, SweepKind::Stability);
        assert_eq!(cfg.sim.times, vec![0.1, 0.2]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut v = Value::Object(Map::new());
        apply_set(&mut v, "params.gamma=1").unwrap();
        let err = serde_json::from_value::<RunConfig>(v).unwrap_err().to_string();
        assert!(err.contains("gamma"), "{err}");
        let mut v = Value::Object(Map::new());
        apply_set(&mut v, "seed=3").unwrap();
        assert!(apply_set(&mut v, "seed.x=1").is_err());
        assert!(apply_set(&mut v, "novalue").is_err());
    }

    #[test]
    fn defaults_follow_the_growth_path() {
        let p = ParamsConfig::default().at(16);
        assert_eq!(p.beta, 0.4);
        assert_eq!(p.k, k_rule(16, 0.2));
    }

    #[test]
    fn default_config_round_trips() {
        let cfg = RunConfig {
            command: Some(Command::Witness),
            ..RunConfig::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
    }
}
