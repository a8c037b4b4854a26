use std::path::{Path, PathBuf};

use clap::ValueEnum;
use kramers_core::{Landscape, LandscapeError, LandscapeSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Declaration order is dependency order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Analyze,
    Spectrum,
    Quasimode,
    Sde,
    GradedSelftest,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Analyze => "analyze",
            Stage::Spectrum => "spectrum",
            Stage::Quasimode => "quasimode",
            Stage::Sde => "sde",
            Stage::GradedSelftest => "graded-selftest",
        }
    }

    pub fn needs_landscape(self) -> bool {
        self != Stage::GradedSelftest
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridParams {
    /// Nodes per axis of the labelling grid.
    pub labelling_n: usize,
    /// Newton seeds per axis for critical point search.
    pub seed_resolution: usize,
    /// Operator grids try n_min, n_min + n_step, ... until the Peclet bound holds.
    pub n_min: usize,
    pub n_step: usize,
    pub n_max: usize,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams { labelling_n: 256, seed_resolution: 32, n_min: 65, n_step: 16, n_max: 513 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumParams {
    /// Eigenvalues requested near 0 (at least n0 + 4 are always taken).
    pub count: usize,
}

impl Default for SpectrumParams {
    fn default() -> Self {
        SpectrumParams { count: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SdeParams {
    pub trials: usize,
    pub max_time: f64,
}

impl Default for SdeParams {
    fn default() -> Self {
        SdeParams { trials: 400, max_time: 1e4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradedParams {
    pub instances: usize,
}

impl Default for GradedParams {
    fn default() -> Self {
        GradedParams { instances: 50 }
    }
}

fn default_h() -> Vec<f64> {
    vec![0.15]
}

fn default_c() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub landscape: Option<LandscapeSpec>,
    #[serde(default = "default_h")]
    pub h: Vec<f64>,
    /// Strengths of the non-reversible part.
    #[serde(default = "default_c")]
    pub c: Vec<f64>,
    #[serde(default)]
    pub grid: GridParams,
    pub stages: Vec<Stage>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub spectrum: SpectrumParams,
    #[serde(default)]
    pub sde: SdeParams,
    #[serde(default)]
    pub graded: GradedParams,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Schema { path: String, line: usize, column: usize, message: String },
}

/// 1-based line and column of the first `"key"` in the source, or 1:1.
fn locate(src: &str, key: &str) -> (usize, usize) {
    let needle = format!("\"{key}\"");
    match src.find(&needle) {
        Some(at) => {
            let before = &src[..at];
            let line = before.matches('\n').count() + 1;
            let column = at - before.rfind('\n').map_or(0, |p| p + 1) + 1;
            (line, column)
        }
        None => (1, 1),
    }
}

pub struct Source {
    pub path: String,
    pub text: String,
}

impl Source {
    pub fn read(path: &Path) -> Result<Source, ConfigError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: shown.clone(), source })?;
        Ok(Source { path: shown, text })
    }

    fn error_at(&self, key: &str, message: impl Into<String>) -> ConfigError {
        let (line, column) = locate(&self.text, key);
        ConfigError::Schema { path: self.path.clone(), line, column, message: message.into() }
    }

    pub fn parse(&self) -> Result<RunConfig, ConfigError> {
        serde_json::from_str(&self.text).map_err(|e| ConfigError::Schema {
            path: self.path.clone(),
            line: e.line(),
            column: e.column(),
            message: e.to_string().split(" at line ").next().unwrap_or_default().to_string(),
        })
    }

    /// Checks that cannot be expressed in the serde schema; run after command-line overrides.
    pub fn validate(&self, cfg: &RunConfig) -> Result<(), ConfigError> {
        if cfg.stages.is_empty() {
            return Err(self.error_at("stages", "at least one stage is required"));
        }
        if cfg.h.is_empty() {
            return Err(self.error_at("h", "`h` must list at least one value"));
        }
        if let Some(h) = cfg.h.iter().find(|h| !(**h > 0.0 && **h <= 1.0)) {
            return Err(self.error_at("h", format!("h = {h} is outside (0, 1]")));
        }
        if cfg.c.is_empty() {
            return Err(self.error_at("c", "`c` must list at least one value"));
        }
        if let Some(c) = cfg.c.iter().find(|c| !c.is_finite()) {
            return Err(self.error_at("c", format!("c = {c} is not finite")));
        }
        let g = &cfg.grid;
        if g.labelling_n < 9 || g.seed_resolution < 2 || g.n_min < 9 || g.n_step == 0 || g.n_max < g.n_min {
            return Err(self.error_at("grid", format!("inconsistent grid parameters {g:?}")));
        }
        if cfg.spectrum.count == 0 || cfg.spectrum.count > 20 {
            return Err(self.error_at("spectrum", "`spectrum.count` must lie in 1..=20"));
        }
        if cfg.sde.trials < 2 || !(cfg.sde.max_time > 0.0) {
            return Err(self.error_at("sde", "`sde` needs at least 2 trials and a positive max_time"));
        }
        if cfg.graded.instances == 0 {
            return Err(self.error_at("graded", "`graded.instances` must be positive"));
        }
        let Some(stage) = cfg.stages.iter().find(|s| s.needs_landscape()) else {
            return Ok(());
        };
        let spec = cfg
            .landscape
            .as_ref()
            .ok_or_else(|| self.error_at("stages", format!("stage `{}` needs a `landscape` block", stage.name())))?;
        for &c in &cfg.c {
            let land = Landscape::from_spec(spec, c).map_err(|e| self.landscape_error(e))?;
            let gridded = cfg.stages.iter().any(|s| matches!(s, Stage::Spectrum | Stage::Quasimode | Stage::Sde));
            if gridded && land.dim != 2 {
                return Err(self.error_at("landscape", format!("grid stages need dimension 2, got {}", land.dim)));
            }
        }
        Ok(())
    }

    fn landscape_error(&self, e: LandscapeError) -> ConfigError {
        match &e {
            LandscapeError::Expr { field, .. } => {
                let key = field.split('[').next().unwrap_or(field);
                self.error_at(key, e.to_string())
            }
            _ => self.error_at("landscape", e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locate_counts_from_one() {
        let src = "{\n  \"h\": [0.1],\n    \"stages\": []\n}";
        assert_eq!(locate(src, "h"), (2, 3));
        assert_eq!(locate(src, "stages"), (3, 5));
        assert_eq!(locate(src, "missing"), (1, 1));
    }

    #[test]
    fn stage_order_is_dependency_order() {
        let mut s = vec![Stage::Sde, Stage::GradedSelftest, Stage::Analyze, Stage::Quasimode];
        s.sort();
        assert_eq!(s, vec![Stage::Analyze, Stage::Quasimode, Stage::Sde, Stage::GradedSelftest]);
    }
}
