//! Run configuration: a JSON document, with command-line flags taking
//! precedence over its fields.

use std::path::{Path, PathBuf};

use quadprop::coefficients::{make_preset, CoefficientSet, TimeFunction};
use quadprop::magnetic3d::{FieldProfile, PhysicalConstants};
use quadprop::nls::NlsFamily;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefficientSpec {
    Preset {
        preset: String,
        #[serde(default)]
        params: Vec<f64>,
    },
    Custom(CoefficientSet),
}

impl Default for CoefficientSpec {
    fn default() -> Self {
        CoefficientSpec::Preset { preset: "sho".into(), params: vec![1.0] }
    }
}

impl CoefficientSpec {
    pub fn build(&self) -> CliResult<CoefficientSet> {
        match self {
            CoefficientSpec::Preset { preset, params } => Ok(make_preset(preset, params)?),
            CoefficientSpec::Custom(cs) => {
                cs.validate()?;
                Ok(cs.clone())
            }
        }
    }
}

/// A uniform axis `[min, max]` with `n ≥ 2` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn points(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.n - 1) as f64)
            .collect()
    }

    fn check(&self, name: &str) -> CliResult<()> {
        if self.n < 2 || !(self.min < self.max) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(CliError::config(format!(
                "{name} axis needs min < max and at least 2 points, got {self:?}"
            )));
        }
        Ok(())
    }

    /// `"N"` keeps the range; `"min:max:N"` replaces it.
    pub fn override_with(&mut self, spec: &str) -> CliResult<()> {
        let bad = || CliError::config(format!("--grid expects N or min:max:N, got `{spec}`"));
        let parts: Vec<&str> = spec.split(':').collect();
        match parts.as_slice() {
            [n] => self.n = n.trim().parse().map_err(|_| bad())?,
            [lo, hi, n] => {
                self.min = lo.trim().parse().map_err(|_| bad())?;
                self.max = hi.trim().parse().map_err(|_| bad())?;
                self.n = n.trim().parse().map_err(|_| bad())?;
            }
            _ => return Err(bad()),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MagneticSpec {
    /// `const:H0` or `linear:H0,H1`.
    #[serde(rename = "H")]
    pub field: String,
    /// `zero` or `const:F0`.
    #[serde(rename = "F")]
    pub force: String,
    pub constants: PhysicalConstants,
    /// Source points `r′`; the field point `r` sweeps the grid cubed.
    pub sources: Vec<[f64; 3]>,
}

impl Default for MagneticSpec {
    fn default() -> Self {
        MagneticSpec {
            field: "const:1".into(),
            force: "zero".into(),
            constants: PhysicalConstants::default(),
            sources: vec![[0.0; 3]],
        }
    }
}

fn parse_numbers(spec: &str, body: &str, count: usize) -> CliResult<Vec<f64>> {
    let values: Result<Vec<f64>, _> = body.split(',').map(|v| v.trim().parse::<f64>()).collect();
    match values {
        Ok(v) if v.len() == count => Ok(v),
        _ => Err(CliError::config(format!("cannot parse `{spec}`: expected {count} number(s)"))),
    }
}

impl MagneticSpec {
    pub fn build(&self) -> CliResult<FieldProfile> {
        let field = match self.field.split_once(':') {
            Some(("const", body)) => TimeFunction::constant(parse_numbers(&self.field, body, 1)?[0]),
            Some(("linear", body)) => {
                let v = parse_numbers(&self.field, body, 2)?;
                TimeFunction::linear(v[0], v[1])
            }
            _ => {
                return Err(CliError::config(format!(
                    "--H expects const:H0 or linear:H0,H1, got `{}`",
                    self.field
                )))
            }
        };
        let force = match self.force.split_once(':') {
            None if self.force == "zero" => TimeFunction::zero(),
            Some(("const", body)) => TimeFunction::constant(parse_numbers(&self.force, body, 1)?[0]),
            _ => return Err(CliError::config(format!("--F expects zero or const:F0, got `{}`", self.force))),
        };
        Ok(FieldProfile::new(field, force, self.constants)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub coefficients: CoefficientSpec,
    /// Spatial axis; also used for `y` in `green1d` and every axis in
    /// `magnetic3d`.
    pub grid: Axis,
    /// Number of time samples for `characteristic` and `nls`.
    pub time_samples: usize,
    /// Evaluation time, or the end of the time range.
    pub t: f64,
    pub tol: f64,
    pub qtol: f64,
    pub seed: u64,
    /// `propagate`: CSV `x,re,im`; a unit Gaussian when absent.
    pub psi0: Option<PathBuf>,
    pub nls: NlsFamily,
    pub magnetic: MagneticSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            coefficients: CoefficientSpec::default(),
            grid: Axis { min: -2.0, max: 2.0, n: 21 },
            time_samples: 51,
            t: 1.0,
            tol: 1e-12,
            qtol: 1e-12,
            seed: 7,
            psi0: None,
            nls: NlsFamily::Simple(quadprop::nls::NLSParams { mu1: 1.0, ..Default::default() }),
            magnetic: MagneticSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| {
            CliError::config(format!("cannot parse config: {e}"))
                .with_context(serde_json::json!({ "path": path.display().to_string() }))
        })
    }

    pub fn check(&self) -> CliResult<()> {
        for (name, v) in [("tol", self.tol), ("qtol", self.qtol)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CliError::config(format!("{name} must be positive, got {v}"))
                    .with_context(serde_json::json!({ "field": name, "value": v })));
            }
        }
        if !(self.t > 0.0) || !self.t.is_finite() {
            return Err(CliError::config(format!("t must be positive, got {}", self.t)));
        }
        if self.time_samples < 2 {
            return Err(CliError::config("time_samples must be at least 2"));
        }
        if self.magnetic.sources.is_empty() {
            return Err(CliError::config("magnetic.sources must not be empty"));
        }
        self.grid.check("grid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_override_forms() {
        let mut a = Axis { min: -2.0, max: 2.0, n: 21 };
        a.override_with("5").unwrap();
        assert_eq!((a.min, a.max, a.n), (-2.0, 2.0, 5));
        a.override_with("-1:3:9").unwrap();
        assert_eq!((a.min, a.max, a.n), (-1.0, 3.0, 9));
        assert!(a.override_with("1:2").is_err());
        assert_eq!(a.points().last().copied(), Some(3.0));
    }

    #[test]
    fn magnetic_spec_parsing() {
        let mut m = MagneticSpec { field: "linear:1.5,0.2".into(), force: "const:0.3".into(), ..Default::default() };
        assert!(m.build().is_ok());
        m.field = "ramp:1".into();
        assert_eq!(m.build().unwrap_err().code, "CONFIG_INVALID");
        m.field = "const:1".into();
        m.force = "const:a".into();
        assert_eq!(m.build().unwrap_err().code, "CONFIG_INVALID");
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
        let partial: RunConfig = serde_json::from_str(r#"{"nls": {"family": "kernel", "epsilon": 0.5, "h": 1, "s": 2, "y": 0}}"#).unwrap();
        assert_eq!(partial.nls.name(), "kernel");
        assert_eq!(partial.grid, cfg.grid);
    }
}
