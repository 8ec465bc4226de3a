//! Flag merging: command-line arguments override `key=value` config files,
//! which override per-case defaults.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use qnp_core::multigrid::Backend;
use qnp_core::pde_suite::{CdScheme, SolverOverrides};

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub case: Option<String>,
    pub backend: Option<Backend>,
    pub window: Option<usize>,
    pub grid: Option<(usize, usize)>,
    pub cycles: Option<usize>,
    pub tol: Option<f64>,
    pub steps: Option<usize>,
    pub eta: Option<usize>,
    pub phi: Option<usize>,
    pub omega: Option<f64>,
    pub scheme: Option<CdScheme>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub heatmaps: Option<bool>,
}

impl RunConfig {
    /// Fill unset fields from another (lower-precedence) config.
    pub fn or(mut self, fallback: RunConfig) -> RunConfig {
        self.case = self.case.or(fallback.case);
        self.backend = self.backend.or(fallback.backend);
        self.window = self.window.or(fallback.window);
        self.grid = self.grid.or(fallback.grid);
        self.cycles = self.cycles.or(fallback.cycles);
        self.tol = self.tol.or(fallback.tol);
        self.steps = self.steps.or(fallback.steps);
        self.eta = self.eta.or(fallback.eta);
        self.phi = self.phi.or(fallback.phi);
        self.omega = self.omega.or(fallback.omega);
        self.scheme = self.scheme.or(fallback.scheme);
        self.out = self.out.or(fallback.out);
        self.seed = self.seed.or(fallback.seed);
        self.heatmaps = self.heatmaps.or(fallback.heatmaps);
        self
    }

    pub fn overrides(&self) -> SolverOverrides {
        SolverOverrides {
            backend: self.backend,
            window: self.window,
            pre_smooths: self.eta,
            post_smooths: self.phi,
            omega: self.omega,
            tolerance: self.tol,
            max_cycles: self.cycles,
            steps: self.steps,
        }
    }
}

pub fn parse_backend(s: &str) -> Result<Backend, String> {
    match s {
        "quantum" => Ok(Backend::Quantum),
        "classical" => Ok(Backend::Classical),
        "hybrid-spot-check" | "hybrid" => Ok(Backend::HybridSpotCheck),
        other => Err(format!(
            "unknown backend '{other}' (expected quantum | classical | hybrid-spot-check)"
        )),
    }
}

pub fn parse_scheme(s: &str) -> Result<CdScheme, String> {
    match s {
        "central" | "fdm" => Ok(CdScheme::CentralFdm),
        "convfem" | "nine-point" => Ok(CdScheme::ConvFem),
        other => Err(format!(
            "unknown scheme '{other}' (expected central | convfem)"
        )),
    }
}

pub fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("grid '{s}' must look like 16x32"))?;
    let h = h.trim().parse().map_err(|e| format!("bad grid height: {e}"))?;
    let w = w.trim().parse().map_err(|e| format!("bad grid width: {e}"))?;
    Ok((h, w))
}

/// `key=value` lines; `#` starts a comment. Keys mirror the flag names.
pub fn load_config_file(path: &Path) -> Result<RunConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {path:?}: {e}"))?;
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("{path:?}:{}: expected key=value", lineno + 1))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    let mut config = RunConfig::default();
    for (k, v) in map {
        match k.as_str() {
            "case" => config.case = Some(v),
            "backend" => config.backend = Some(parse_backend(&v)?),
            "K" | "window" => {
                config.window = Some(v.parse().map_err(|e| format!("bad K: {e}"))?)
            }
            "grid" => config.grid = Some(parse_grid(&v)?),
            "cycles" => config.cycles = Some(v.parse().map_err(|e| format!("bad cycles: {e}"))?),
            "tol" => config.tol = Some(v.parse().map_err(|e| format!("bad tol: {e}"))?),
            "steps" => config.steps = Some(v.parse().map_err(|e| format!("bad steps: {e}"))?),
            "eta" => config.eta = Some(v.parse().map_err(|e| format!("bad eta: {e}"))?),
            "phi" => config.phi = Some(v.parse().map_err(|e| format!("bad phi: {e}"))?),
            "omega" => config.omega = Some(v.parse().map_err(|e| format!("bad omega: {e}"))?),
            "scheme" => config.scheme = Some(parse_scheme(&v)?),
            "out" => config.out = Some(PathBuf::from(v)),
            "seed" => config.seed = Some(v.parse().map_err(|e| format!("bad seed: {e}"))?),
            "heatmaps" => {
                config.heatmaps = Some(v.parse().map_err(|e| format!("bad heatmaps: {e}"))?)
            }
            other => return Err(format!("unknown config key '{other}'")),
        }
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("16x32").unwrap(), (16, 32));
        assert_eq!(parse_grid("24X48").unwrap(), (24, 48));
        assert!(parse_grid("16").is_err());
    }

    #[test]
    fn config_file_and_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(
            &path,
            "case=poisson\nbackend=quantum # comment\ncycles=6\n\n# full-line comment\ntol=1e-6\n",
        )
        .unwrap();
        let file = load_config_file(&path).unwrap();
        assert_eq!(file.case.as_deref(), Some("poisson"));
        assert_eq!(file.backend, Some(Backend::Quantum));
        assert_eq!(file.cycles, Some(6));

        let cli = RunConfig {
            cycles: Some(12),
            ..RunConfig::default()
        };
        let merged = cli.or(file);
        assert_eq!(merged.cycles, Some(12));
        assert_eq!(merged.case.as_deref(), Some("poisson"));
    }
}
