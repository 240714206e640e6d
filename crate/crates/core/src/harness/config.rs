//! Flat `key = value` run configuration.
//!
//! ```text
//! # comment
//! model.alpha = 2
//! sim.dt = 0.01
//! force.kind = random
//! sweep.alpha_beta = 2:2, 2:0.5, 2:0
//! ```
//!
//! Unknown keys are rejected. [`RunConfig::to_text`] writes every setting, and
//! parsing that text gives back an identical config.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamics::SimulationConfig;
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::grid::SpectralGrid;
use crate::params::ModelParams;
use crate::random::{random_divfree_field, AmplitudeSpectrum};

use super::checkpoint;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "GAAM_OUT";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    Zero,
    Random { seed: u64, amplitude: f64, exponent: f64 },
    Checkpoint { path: PathBuf },
    SingleMode { mode: [i64; 3], amplitude: Vec<f64> },
    /// The stationary solution for the configured forcing (initial data only).
    Stationary,
}

impl FieldSpec {
    fn kind(&self) -> &'static str {
        match self {
            FieldSpec::Zero => "zero",
            FieldSpec::Random { .. } => "random",
            FieldSpec::Checkpoint { .. } => "checkpoint",
            FieldSpec::SingleMode { .. } => "single_mode",
            FieldSpec::Stationary => "stationary",
        }
    }

    /// Build the field on `grid`. `Stationary` is resolved by the caller.
    pub fn build(&self, grid: &Arc<SpectralGrid>) -> Result<VectorField> {
        match self {
            FieldSpec::Zero => Ok(VectorField::zeros(grid)),
            FieldSpec::Random { seed, amplitude, exponent } => Ok(random_divfree_field(
                *seed,
                &AmplitudeSpectrum { amplitude: *amplitude, exponent: *exponent },
                grid,
            )),
            FieldSpec::Checkpoint { path } => {
                if !path.exists() {
                    return Err(Error::Config(format!("missing prerequisite checkpoint {}", path.display())));
                }
                let ck = checkpoint::read(path)?;
                ck.field.grid().check_same(grid)?;
                Ok(ck.field)
            }
            FieldSpec::SingleMode { mode, amplitude } => {
                if amplitude.len() != grid.dim() {
                    return Err(Error::Config(format!(
                        "single_mode needs {} amplitudes, got {}",
                        grid.dim(),
                        amplitude.len()
                    )));
                }
                let amp: Vec<_> = amplitude.iter().map(|&a| rustfft::num_complex::Complex64::new(a, 0.0)).collect();
                VectorField::single_mode(grid, *mode, &amp)?.certify_divergence_free()
            }
            FieldSpec::Stationary => Err(Error::Config("stationary data is only valid as initial data".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub picard: f64,
    pub max_iter: usize,
    pub relaxation: f64,
    /// Generic constant `C` of the smallness conditions.
    pub smallness_c: f64,
    pub singleton: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { picard: 1e-11, max_iter: 500, relaxation: 1.0, smallness_c: 1.0, singleton: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub window: f64,
    pub starts: usize,
    pub family_sizes: Vec<usize>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { window: 1.0, starts: 5, family_sizes: vec![1, 2, 4, 8] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub alpha_beta: Vec<(f64, f64)>,
    pub gamma: Vec<f64>,
    pub nu: Vec<f64>,
    pub delta: Vec<f64>,
    pub force_amplitude: Vec<f64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            alpha_beta: vec![(2.0, 2.0), (2.0, 0.5), (2.0, 0.0)],
            gamma: vec![1.0, 2.0],
            nu: vec![1.0],
            delta: vec![1.0],
            force_amplitude: vec![0.05],
        }
    }
}

/// One sweep cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub nu: f64,
    pub delta: f64,
    pub force_amplitude: f64,
}

impl SweepGrid {
    /// Cells in a fixed order: `(α, β)` outermost, forcing amplitude innermost.
    pub fn cells(&self) -> Vec<SweepCell> {
        let mut out = Vec::new();
        for &(alpha, beta) in &self.alpha_beta {
            for &gamma in &self.gamma {
                for &nu in &self.nu {
                    for &delta in &self.delta {
                        for &force_amplitude in &self.force_amplitude {
                            out.push(SweepCell { alpha, beta, gamma, nu, delta, force_amplitude });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelParams,
    pub sim: SimulationConfig,
    pub force: FieldSpec,
    pub init: FieldSpec,
    /// Checkpoint whose field is used as the reference for `d_s`/`d_w`.
    pub reference: Option<PathBuf>,
    pub tol: Tolerances,
    pub verify: VerifyOptions,
    pub sweep: SweepGrid,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelParams::default(),
            sim: SimulationConfig::default(),
            force: FieldSpec::Random { seed: 1, amplitude: 0.05, exponent: -2.0 },
            init: FieldSpec::Random { seed: 2, amplitude: 1.0, exponent: -2.0 },
            reference: None,
            tol: Tolerances::default(),
            verify: VerifyOptions::default(),
            sweep: SweepGrid::default(),
            out_dir: default_out_dir(),
        }
    }
}

/// `$GAAM_OUT` or `./gaam-out`.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("gaam-out"))
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Config(format!("cannot parse `{v}` for {key}")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse(key, s)).collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("cannot parse `{v}` for {key} as a boolean"))),
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// Pull the keys of one field spec (`force.`/`init.`) out of the map.
fn take_field(map: &mut BTreeMap<String, String>, prefix: &str, default: &FieldSpec) -> Result<FieldSpec> {
    let mut take = |k: &str| map.remove(&format!("{prefix}.{k}"));
    let kind = take("kind");
    let seed = take("seed");
    let amplitude = take("amplitude");
    let exponent = take("exponent");
    let path = take("path");
    let mode = take("mode");
    let key = |k: &str| format!("{prefix}.{k}");
    let kind = match kind {
        Some(k) => k,
        None if seed.is_none() && amplitude.is_none() && exponent.is_none() && path.is_none() && mode.is_none() => {
            return Ok(default.clone())
        }
        None => default.kind().to_string(),
    };
    Ok(match kind.trim() {
        "zero" => FieldSpec::Zero,
        "stationary" => FieldSpec::Stationary,
        "random" => {
            let (ds, da, de) = match default {
                FieldSpec::Random { seed, amplitude, exponent } => (*seed, *amplitude, *exponent),
                _ => (0, 1.0, -2.0),
            };
            FieldSpec::Random {
                seed: seed.map(|v| parse(&key("seed"), &v)).transpose()?.unwrap_or(ds),
                amplitude: amplitude.map(|v| parse(&key("amplitude"), &v)).transpose()?.unwrap_or(da),
                exponent: exponent.map(|v| parse(&key("exponent"), &v)).transpose()?.unwrap_or(de),
            }
        }
        "checkpoint" => FieldSpec::Checkpoint {
            path: PathBuf::from(path.ok_or_else(|| Error::Config(format!("{} is required", key("path"))))?.trim()),
        },
        "single_mode" => {
            let m: Vec<i64> = parse_list(&key("mode"), &mode.ok_or_else(|| Error::Config(format!("{} is required", key("mode"))))?)?;
            if m.is_empty() || m.len() > 3 {
                return Err(Error::Config(format!("{} needs 2 or 3 integers", key("mode"))));
            }
            let mut arr = [0i64; 3];
            arr[..m.len()].copy_from_slice(&m);
            let amp = amplitude.ok_or_else(|| Error::Config(format!("{} is required", key("amplitude"))))?;
            FieldSpec::SingleMode { mode: arr, amplitude: parse_list(&key("amplitude"), &amp)? }
        }
        other => return Err(Error::Config(format!("unknown {} `{other}`", key("kind")))),
    })
}

fn write_field(out: &mut String, prefix: &str, spec: &FieldSpec) {
    let _ = writeln!(out, "{prefix}.kind = {}", spec.kind());
    match spec {
        FieldSpec::Random { seed, amplitude, exponent } => {
            let _ = writeln!(out, "{prefix}.seed = {seed}");
            let _ = writeln!(out, "{prefix}.amplitude = {amplitude}");
            let _ = writeln!(out, "{prefix}.exponent = {exponent}");
        }
        FieldSpec::Checkpoint { path } => {
            let _ = writeln!(out, "{prefix}.path = {}", path.display());
        }
        FieldSpec::SingleMode { mode, amplitude } => {
            let _ = writeln!(out, "{prefix}.mode = {}", join(mode));
            let _ = writeln!(out, "{prefix}.amplitude = {}", join(amplitude));
        }
        FieldSpec::Zero | FieldSpec::Stationary => {}
    }
}

impl RunConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key {}", lineno + 1, k.trim())));
            }
        }
        let d = RunConfig::default();
        let mut cfg = RunConfig {
            force: take_field(&mut map, "force", &d.force)?,
            init: take_field(&mut map, "init", &d.init)?,
            ..d
        };
        for (k, v) in std::mem::take(&mut map) {
            let m = &mut cfg.model;
            let s = &mut cfg.sim;
            match k.as_str() {
                "model.alpha" => m.alpha = parse(&k, &v)?,
                "model.beta" => m.beta = parse(&k, &v)?,
                "model.gamma" => m.gamma = parse(&k, &v)?,
                "model.delta" => m.delta = parse(&k, &v)?,
                "model.nu" => m.nu = parse(&k, &v)?,
                "model.dim" => m.dim = parse(&k, &v)?,
                "model.modes_per_axis" => m.modes_per_axis = parse(&k, &v)?,
                "model.box_length" => m.box_length = parse(&k, &v)?,
                "sim.dt" => s.dt = parse(&k, &v)?,
                "sim.t_end" => s.t_end = parse(&k, &v)?,
                "sim.record_stride" => s.record_stride = parse(&k, &v)?,
                "sim.mollifier_epsilon" => s.mollifier_epsilon = parse(&k, &v)?,
                "sim.nonlinearity" => s.nonlinearity_enabled = parse_bool(&k, &v)?,
                "sim.seed" => s.seed = parse(&k, &v)?,
                "sim.guard_factor" => s.guard_factor = parse(&k, &v)?,
                "sim.reference" => cfg.reference = Some(PathBuf::from(v)),
                "tol.picard" => cfg.tol.picard = parse(&k, &v)?,
                "tol.max_iter" => cfg.tol.max_iter = parse(&k, &v)?,
                "tol.relaxation" => cfg.tol.relaxation = parse(&k, &v)?,
                "tol.C" => cfg.tol.smallness_c = parse(&k, &v)?,
                "tol.singleton" => cfg.tol.singleton = parse(&k, &v)?,
                "verify.window" => cfg.verify.window = parse(&k, &v)?,
                "verify.starts" => cfg.verify.starts = parse(&k, &v)?,
                "verify.family_sizes" => cfg.verify.family_sizes = parse_list(&k, &v)?,
                "sweep.alpha_beta" => {
                    cfg.sweep.alpha_beta = v
                        .split(',')
                        .filter(|p| !p.trim().is_empty())
                        .map(|p| {
                            let (a, b) = p
                                .split_once(':')
                                .ok_or_else(|| Error::Config(format!("{k}: expected alpha:beta pairs, got `{p}`")))?;
                            Ok((parse(&k, a)?, parse(&k, b)?))
                        })
                        .collect::<Result<_>>()?
                }
                "sweep.gamma" => cfg.sweep.gamma = parse_list(&k, &v)?,
                "sweep.nu" => cfg.sweep.nu = parse_list(&k, &v)?,
                "sweep.delta" => cfg.sweep.delta = parse_list(&k, &v)?,
                "sweep.force_amplitude" => cfg.sweep.force_amplitude = parse_list(&k, &v)?,
                "out.dir" => cfg.out_dir = PathBuf::from(v),
                _ => return Err(Error::Config(format!("unknown key {k}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.sim.validate()?;
        if !(self.tol.picard > 0.0) || self.tol.max_iter == 0 {
            return Err(Error::Config("tol.picard must be > 0 and tol.max_iter >= 1".into()));
        }
        if !(self.tol.relaxation > 0.0 && self.tol.relaxation <= 1.0) {
            return Err(Error::Config(format!("tol.relaxation must lie in (0, 1], got {}", self.tol.relaxation)));
        }
        if !(self.tol.smallness_c > 0.0) {
            return Err(Error::Config(format!("tol.C must be > 0, got {}", self.tol.smallness_c)));
        }
        if matches!(self.force, FieldSpec::Stationary) {
            return Err(Error::Config("force.kind = stationary is not meaningful".into()));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut o = String::new();
        let m = &self.model;
        let s = &self.sim;
        let _ = writeln!(o, "model.alpha = {}", m.alpha);
        let _ = writeln!(o, "model.beta = {}", m.beta);
        let _ = writeln!(o, "model.gamma = {}", m.gamma);
        let _ = writeln!(o, "model.delta = {}", m.delta);
        let _ = writeln!(o, "model.nu = {}", m.nu);
        let _ = writeln!(o, "model.dim = {}", m.dim);
        let _ = writeln!(o, "model.modes_per_axis = {}", m.modes_per_axis);
        let _ = writeln!(o, "model.box_length = {}", m.box_length);
        let _ = writeln!(o, "sim.dt = {}", s.dt);
        let _ = writeln!(o, "sim.t_end = {}", s.t_end);
        let _ = writeln!(o, "sim.record_stride = {}", s.record_stride);
        let _ = writeln!(o, "sim.mollifier_epsilon = {}", s.mollifier_epsilon);
        let _ = writeln!(o, "sim.nonlinearity = {}", s.nonlinearity_enabled);
        let _ = writeln!(o, "sim.seed = {}", s.seed);
        let _ = writeln!(o, "sim.guard_factor = {}", s.guard_factor);
        if let Some(r) = &self.reference {
            let _ = writeln!(o, "sim.reference = {}", r.display());
        }
        write_field(&mut o, "force", &self.force);
        write_field(&mut o, "init", &self.init);
        let _ = writeln!(o, "tol.picard = {}", self.tol.picard);
        let _ = writeln!(o, "tol.max_iter = {}", self.tol.max_iter);
        let _ = writeln!(o, "tol.relaxation = {}", self.tol.relaxation);
        let _ = writeln!(o, "tol.C = {}", self.tol.smallness_c);
        let _ = writeln!(o, "tol.singleton = {}", self.tol.singleton);
        let _ = writeln!(o, "verify.window = {}", self.verify.window);
        let _ = writeln!(o, "verify.starts = {}", self.verify.starts);
        let _ = writeln!(o, "verify.family_sizes = {}", join(&self.verify.family_sizes));
        let pairs: Vec<String> = self.sweep.alpha_beta.iter().map(|(a, b)| format!("{a}:{b}")).collect();
        let _ = writeln!(o, "sweep.alpha_beta = {}", pairs.join(","));
        let _ = writeln!(o, "sweep.gamma = {}", join(&self.sweep.gamma));
        let _ = writeln!(o, "sweep.nu = {}", join(&self.sweep.nu));
        let _ = writeln!(o, "sweep.delta = {}", join(&self.sweep.delta));
        let _ = writeln!(o, "sweep.force_amplitude = {}", join(&self.sweep.force_amplitude));
        let _ = writeln!(o, "out.dir = {}", self.out_dir.display());
        o
    }
}
