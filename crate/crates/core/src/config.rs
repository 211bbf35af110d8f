//! Run configuration files: flat `key = value` TOML.
//!
//! ```toml
//! method = "nitsche"     # or "penalty"
//! degree = 1
//! beta = 0.5
//! rounds = 7
//! nx = 12
//! ny = 8
//! alpha = 0.01
//! penalty_eps = 10.0
//! tol_rel = 1e-10
//! max_iter = 100
//! theta_max = 2.0943951023931953
//! eccentricity = 0.9
//! attitude = 0.548388888888889   # or `phase`, the offset in d = 1 + eps cos(theta - phase)
//! aspect = 0.25
//! cavitation_pressure = 0.0
//! output_dir = "out"
//! export_vtk = true
//! export_history = true
//! export_estimator = false
//! export_iterations = false
//! ```
//!
//! Every key is optional; missing keys take the benchmark defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::driver::RunConfig;
use crate::error::{Error, Result};
use crate::mesh::Rect;
use crate::solver::Method;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub method: Option<Method>,
    pub degree: Option<usize>,
    pub beta: Option<f64>,
    pub rounds: Option<usize>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub alpha: Option<f64>,
    pub penalty_eps: Option<f64>,
    pub tol_rel: Option<f64>,
    pub max_iter: Option<usize>,
    pub theta_max: Option<f64>,
    pub eccentricity: Option<f64>,
    pub attitude: Option<f64>,
    pub phase: Option<f64>,
    pub aspect: Option<f64>,
    pub cavitation_pressure: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub export_vtk: Option<bool>,
    pub export_history: Option<bool>,
    pub export_estimator: Option<bool>,
    pub export_iterations: Option<bool>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| e.to_string())?;
        if file.attitude.is_some() && file.phase.is_some() {
            return Err("set either `attitude` or `phase`, not both".into());
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|message| Error::Config {
            path: path.to_path_buf(),
            message,
        })
    }

    /// Applies the present keys on top of `base`. Relative output paths are kept as given.
    pub fn apply(&self, base: &RunConfig) -> Result<RunConfig> {
        let mut c = base.clone();
        macro_rules! set {
            ($($src:ident => $($dst:ident).+;)*) => {$(
                if let Some(v) = self.$src.clone() {
                    c.$($dst).+ = v;
                }
            )*};
        }
        set! {
            method => solver.method;
            degree => degree;
            beta => beta;
            rounds => rounds;
            nx => nx;
            ny => ny;
            alpha => solver.alpha;
            penalty_eps => solver.penalty_eps;
            tol_rel => solver.tol_rel;
            max_iter => solver.max_iter;
            eccentricity => problem.eccentricity;
            phase => problem.phase;
            aspect => problem.aspect;
            cavitation_pressure => problem.cavitation_pressure;
            export_vtk => export.vtk;
            export_history => export.history;
            export_estimator => export.estimator;
            export_iterations => export.iterations;
        }
        if let Some(t) = self.theta_max {
            c.problem.domain = Rect::new(0.0, t, 0.0, 1.0)?;
        }
        if let Some(a) = self.attitude {
            c.problem.phase = a - c.problem.domain.x1;
        }
        if let Some(d) = &self.output_dir {
            c.output_dir = Some(d.clone());
        }
        Ok(c)
    }
}

pub fn load_run_config(path: &Path) -> Result<RunConfig> {
    let cfg = ConfigFile::load(path)?.apply(&RunConfig::default())?;
    cfg.validate().map_err(|e| Error::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{ProblemSpec, BENCHMARK_ATTITUDE};
    use approx::assert_relative_eq;

    #[test]
    fn empty_file_is_benchmark() {
        let c = ConfigFile::parse("").unwrap().apply(&RunConfig::default()).unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn attitude_sets_phase() {
        let c = ConfigFile::parse(&format!("attitude = {BENCHMARK_ATTITUDE}")).unwrap().apply(&RunConfig::default()).unwrap();
        assert_relative_eq!(c.problem.phase, ProblemSpec::benchmark().phase, epsilon = 1e-15);
        assert!(ConfigFile::parse("attitude = 0.5\nphase = 0.1").is_err());
    }

    #[test]
    fn keys_override() {
        let text = "method = \"penalty\"\ndegree = 2\nrounds = 3\nalpha = 0.005\noutput_dir = \"runs/a\"\nexport_vtk = false\n";
        let c = ConfigFile::parse(text).unwrap().apply(&RunConfig::default()).unwrap();
        assert_eq!(c.solver.method, Method::Penalty);
        assert_eq!((c.degree, c.rounds), (2, 3));
        assert_eq!(c.solver.alpha, 0.005);
        assert_eq!(c.output_dir, Some(PathBuf::from("runs/a")));
        assert!(!c.export.vtk);
    }

    #[test]
    fn bad_files() {
        assert!(ConfigFile::parse("betta = 0.5").is_err());
        assert!(ConfigFile::parse("degree = \"two\"").is_err());
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_run_config(&dir.path().join("nope.toml")), Err(Error::Io { .. })));
        let p = dir.path().join("bad.toml");
        std::fs::write(&p, "beta = 2.0").unwrap();
        assert!(matches!(load_run_config(&p), Err(Error::Config { .. })));
    }
}
