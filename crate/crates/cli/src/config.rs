//! Experiment configuration: a flat TOML file, validated before any field is allocated.

use serde::{Deserialize, Serialize};
use ymcal_core::heatflow::{FlowConfig, Integrator, Schedule};
use ymcal_core::hyperbolic::{DataSpec, Generator};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSection,
    pub data: DataSection,
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub hyperbolic: HyperbolicSection,
    #[serde(default)]
    pub assembly: AssemblySection,
    #[serde(default)]
    pub checks: Vec<CheckName>,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    /// Worker threads; `YMCAL_THREADS` takes precedence.
    #[serde(default)]
    pub workers: Option<usize>,
}

fn default_output_dir() -> String {
    "ymcal-out".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    #[serde(default = "default_length")]
    pub length: f64,
}

fn default_length() -> f64 {
    8.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub generator: Generator,
    pub amplitude: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "yes")]
    pub constrained: bool,
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default)]
    pub abelian: bool,
}

fn default_seed() -> u64 {
    1
}
fn yes() -> bool {
    true
}
fn default_width() -> f64 {
    1.0 / 24.0
}
fn default_modes() -> usize {
    1
}

impl DataSection {
    pub fn spec(&self) -> DataSpec {
        DataSpec {
            generator: self.generator,
            amplitude: self.amplitude,
            seed: self.seed,
            constrained: self.constrained,
            width: self.width,
            modes: self.modes,
            abelian: self.abelian,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSection {
    pub s_max: f64,
    pub cfl: f64,
    pub per_octave: usize,
    pub octaves: usize,
    pub integrator: Integrator,
}

impl Default for FlowSection {
    fn default() -> Self {
        let d = FlowConfig::default();
        FlowSection {
            s_max: d.s_max,
            cfl: d.cfl,
            per_octave: d.schedule.per_octave,
            octaves: d.schedule.octaves,
            integrator: d.integrator,
        }
    }
}

impl FlowSection {
    pub fn config(&self) -> FlowConfig {
        FlowConfig {
            s_max: self.s_max,
            cfl: self.cfl,
            schedule: Schedule {
                per_octave: self.per_octave,
                octaves: self.octaves,
            },
            integrator: self.integrator,
            dense: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperbolicSection {
    pub t_final: f64,
    pub dt_ratio: f64,
}

impl Default for HyperbolicSection {
    fn default() -> Self {
        HyperbolicSection {
            t_final: 1.0,
            dt_ratio: 0.25,
        }
    }
}

/// Caloric-temporal assembly over the start of the slab.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssemblySection {
    pub t_final: f64,
    pub s_max: f64,
    pub per_octave: usize,
    pub octaves: usize,
    /// Derivative depth of the slice norm.
    pub depth: usize,
}

impl Default for AssemblySection {
    fn default() -> Self {
        AssemblySection {
            t_final: 0.25,
            s_max: 0.25,
            per_octave: 2,
            octaves: 6,
            depth: 3,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub amplitudes: Vec<f64>,
    pub resolutions: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckName {
    EnergyConservation,
    GaussConstraint,
    MagneticMonotonicity,
    DeturckEquivalence,
    SmoothingF,
    SmoothingFs,
    ImprovedFs0,
    EnergyIntegral,
    PointwiseComparison,
    DuhamelL2,
    IdentityResiduals,
    Substitution,
    GaugeOde,
    LinftyA,
    CtrlByEnergy,
}

impl CheckName {
    pub const ALL: [CheckName; 15] = [
        CheckName::EnergyConservation,
        CheckName::GaussConstraint,
        CheckName::MagneticMonotonicity,
        CheckName::DeturckEquivalence,
        CheckName::SmoothingF,
        CheckName::SmoothingFs,
        CheckName::ImprovedFs0,
        CheckName::EnergyIntegral,
        CheckName::PointwiseComparison,
        CheckName::DuhamelL2,
        CheckName::IdentityResiduals,
        CheckName::Substitution,
        CheckName::GaugeOde,
        CheckName::LinftyA,
        CheckName::CtrlByEnergy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::EnergyConservation => "energy-conservation",
            CheckName::GaussConstraint => "gauss-constraint",
            CheckName::MagneticMonotonicity => "magnetic-monotonicity",
            CheckName::DeturckEquivalence => "deturck-equivalence",
            CheckName::SmoothingF => "smoothing-f",
            CheckName::SmoothingFs => "smoothing-fs",
            CheckName::ImprovedFs0 => "improved-fs0",
            CheckName::EnergyIntegral => "energy-integral",
            CheckName::PointwiseComparison => "pointwise-comparison",
            CheckName::DuhamelL2 => "duhamel-l2",
            CheckName::IdentityResiduals => "identity-residuals",
            CheckName::Substitution => "substitution",
            CheckName::GaugeOde => "gauge-ode",
            CheckName::LinftyA => "linfty-a",
            CheckName::CtrlByEnergy => "ctrl-by-energy",
        }
    }

    fn describe(self) -> &'static str {
        match self {
            CheckName::EnergyConservation => "energy drift of the temporal-gauge evolution and its ratio under halving of dt",
            CheckName::GaussConstraint => "Gauss residual growth on grids n and 2n with dt = dt_ratio h",
            CheckName::MagneticMonotonicity => "B(s) non-increasing along the caloric flow of the data",
            CheckName::DeturckEquivalence => "caloric against DeTurck-reconstructed |F|², and the gauge residual under step halving",
            CheckName::SmoothingF => "weighted covariant norms of F over sqrt(E) for amplitudes a, a/2, a/4",
            CheckName::SmoothingFs => "the same for F_s, with the sup-norm route",
            CheckName::ImprovedFs0 => "quadratic amplitude scaling of the F_s0 norm for amplitudes a, a/2, a/4",
            CheckName::EnergyIntegral => "energy integral inequality for F, DF and F_s0 at the critical and supercritical weights",
            CheckName::PointwiseComparison => "Kato, Duhamel majorant and maximum principle on grids n and 2n",
            CheckName::DuhamelL2 => "Duhamel L² bound for a Gaussian source and several time profiles",
            CheckName::IdentityResiduals => "Bianchi, caloric divergence and transport on grids 2n and 4n; assembly identities on n and 2n",
            CheckName::Substitution => "derivative substitution identities on grids 2n and 4n",
            CheckName::GaugeOde => "post-transform A_0 on assemblies at n and 2n, and the transform bounds",
            CheckName::LinftyA => "sup norms of A in the caloric-temporal gauge for amplitudes a, a/2, a/4",
            CheckName::CtrlByEnergy => "growth of the slice norm and its F_s part against sqrt(E)",
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates; every error carries the line of the offending entry.
    pub fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, s.start));
            CliError::Config {
                line,
                message: e.message().to_string(),
            }
        })?;
        cfg.validate()
            .map_err(|(section, key, message)| CliError::Config {
                line: locate(text, section, key),
                message,
            })?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), (&'static str, &'static str, String)> {
        let bad = |section, key, message: String| Err((section, key, message));
        let g = &self.grid;
        if !valid_n(g.n) {
            return bad(
                "grid",
                "n",
                format!("grid.n = {} must be a power of two in [8, 256]", g.n),
            );
        }
        if !(g.length > 0.0 && g.length.is_finite()) {
            return bad(
                "grid",
                "length",
                format!("grid.length = {} must be positive", g.length),
            );
        }
        let d = &self.data;
        if !(d.amplitude >= 0.0 && d.amplitude.is_finite()) {
            return bad(
                "data",
                "amplitude",
                format!(
                    "data.amplitude = {} must be finite and nonnegative",
                    d.amplitude
                ),
            );
        }
        if !(d.width > 0.0 && d.width.is_finite()) {
            return bad(
                "data",
                "width",
                format!("data.width = {} must be positive", d.width),
            );
        }
        if d.modes == 0 || d.modes > 8 {
            return bad(
                "data",
                "modes",
                format!("data.modes = {} must lie in [1, 8]", d.modes),
            );
        }
        if let Err(e) = d.spec().validate() {
            return bad("data", "width", e.to_string());
        }
        let f = &self.flow;
        if !(f.s_max > 0.0 && f.s_max <= 1.0) {
            return bad(
                "flow",
                "s_max",
                format!("flow.s_max = {} must lie in (0, 1]", f.s_max),
            );
        }
        if !(f.cfl > 0.0 && f.cfl <= 0.25) {
            return bad(
                "flow",
                "cfl",
                format!("flow.cfl = {} must lie in (0, 0.25]", f.cfl),
            );
        }
        if f.per_octave == 0 {
            return bad(
                "flow",
                "per_octave",
                "flow.per_octave must be at least 1".into(),
            );
        }
        let h = &self.hyperbolic;
        if !(h.t_final > 0.0 && h.t_final.is_finite()) {
            return bad(
                "hyperbolic",
                "t_final",
                format!("hyperbolic.t_final = {} must be positive", h.t_final),
            );
        }
        if !(h.dt_ratio > 0.0 && h.dt_ratio <= 0.5) {
            return bad(
                "hyperbolic",
                "dt_ratio",
                format!("hyperbolic.dt_ratio = {} must lie in (0, 0.5]", h.dt_ratio),
            );
        }
        let a = &self.assembly;
        if !(a.t_final > 0.0 && a.t_final <= h.t_final) {
            return bad(
                "assembly",
                "t_final",
                format!(
                    "assembly.t_final = {} must lie in (0, hyperbolic.t_final]",
                    a.t_final
                ),
            );
        }
        if !(a.s_max > 0.0 && a.s_max <= 1.0) {
            return bad(
                "assembly",
                "s_max",
                format!("assembly.s_max = {} must lie in (0, 1]", a.s_max),
            );
        }
        if a.per_octave == 0 {
            return bad(
                "assembly",
                "per_octave",
                "assembly.per_octave must be at least 1".into(),
            );
        }
        if !(1..=3).contains(&a.depth) {
            return bad(
                "assembly",
                "depth",
                format!("assembly.depth = {} must lie in [1, 3]", a.depth),
            );
        }
        if let Some(a) = self
            .sweep
            .amplitudes
            .iter()
            .find(|a| !(**a >= 0.0 && a.is_finite()))
        {
            return bad(
                "sweep",
                "amplitudes",
                format!("sweep amplitude {a} must be finite and nonnegative"),
            );
        }
        if let Some(n) = self.sweep.resolutions.iter().find(|n| !valid_n(**n)) {
            return bad(
                "sweep",
                "resolutions",
                format!("sweep resolution {n} must be a power of two in [8, 256]"),
            );
        }
        if self.workers == Some(0) {
            return bad("", "workers", "workers must be at least 1".into());
        }
        if self.output_dir.is_empty() {
            return bad("", "output_dir", "output_dir must not be empty".into());
        }
        Ok(())
    }

    /// Copy for one sweep point.
    pub fn at_point(&self, amplitude: f64, n: usize) -> ExperimentConfig {
        let mut c = self.clone();
        c.data.amplitude = amplitude;
        c.grid.n = n;
        c.sweep = SweepSection::default();
        c
    }
}

fn valid_n(n: usize) -> bool {
    n.is_power_of_two() && (8..=256).contains(&n)
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key` inside `[section]` (top level for an empty section).
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        let Some((k, _)) = line.split_once('=') else {
            continue;
        };
        let k = k.trim();
        let hit = (current == section && k == key)
            || (current.is_empty() && k == format!("{section}.{key}"));
        if hit {
            return Some(i + 1);
        }
    }
    None
}

/// Human-readable description of every configuration entry, as JSON.
pub fn schema() -> serde_json::Value {
    use serde_json::json;
    let checks: Vec<_> = CheckName::ALL
        .iter()
        .map(|c| json!({ "name": c.as_str(), "description": c.describe() }))
        .collect();
    let flow = FlowSection::default();
    let hyp = HyperbolicSection::default();
    let asm = AssemblySection::default();
    json!({
        "grid": {
            "n": { "type": "integer", "required": true, "range": "power of two, 8..=256" },
            "length": { "type": "float", "default": default_length(), "range": "> 0" }
        },
        "data": {
            "generator": { "type": "string", "required": true, "values": ["abelian-wave", "bump", "random-bandlimited", "pure-gauge"] },
            "amplitude": { "type": "float", "required": true, "range": ">= 0" },
            "seed": { "type": "integer", "default": default_seed() },
            "constrained": { "type": "bool", "default": true },
            "width": { "type": "float", "default": default_width(), "range": "bump support 3 width <= 1/6" },
            "modes": { "type": "integer", "default": default_modes(), "range": "1..=8" },
            "abelian": { "type": "bool", "default": false }
        },
        "flow": {
            "s_max": { "type": "float", "default": flow.s_max, "range": "(0, 1]" },
            "cfl": { "type": "float", "default": flow.cfl, "range": "(0, 0.25]" },
            "per_octave": { "type": "integer", "default": flow.per_octave, "range": ">= 1" },
            "octaves": { "type": "integer", "default": flow.octaves },
            "integrator": { "type": "string", "default": "rk4", "values": ["rk4", "euler"] }
        },
        "hyperbolic": {
            "t_final": { "type": "float", "default": hyp.t_final, "range": "> 0" },
            "dt_ratio": { "type": "float", "default": hyp.dt_ratio, "range": "(0, 0.5]" }
        },
        "assembly": {
            "t_final": { "type": "float", "default": asm.t_final, "range": "(0, hyperbolic.t_final]" },
            "s_max": { "type": "float", "default": asm.s_max, "range": "(0, 1]" },
            "per_octave": { "type": "integer", "default": asm.per_octave, "range": ">= 1" },
            "octaves": { "type": "integer", "default": asm.octaves },
            "depth": { "type": "integer", "default": asm.depth, "range": "1..=3" }
        },
        "checks": { "type": "list of strings", "default": [], "values": checks },
        "sweep": {
            "amplitudes": { "type": "list of floats", "default": [], "note": "empty means data.amplitude" },
            "resolutions": { "type": "list of integers", "default": [], "note": "empty means grid.n" }
        },
        "output_dir": { "type": "string", "default": default_output_dir(), "note": "overridden by --out" },
        "workers": { "type": "integer", "default": "all cores", "note": "overridden by YMCAL_THREADS" }
    })
}
