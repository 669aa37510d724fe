//! Declarative job configuration (TOML) and its validation.

use serde::{Deserialize, Serialize};
use spacelike::bernstein::DecayConfig;
use spacelike::graphgeom::GraphMap;
use spacelike::lagrangian::Potential;
use spacelike::solver::{MaConfig, MaximalConfig};
use spacelike::{parse, Expr, Lattice, Region};

/// Validation failure located at a config field path such as `lattice.h` or `components[1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub m: Option<usize>,
    pub n: Option<usize>,
    /// Graph components `f_1 .. f_n` in `x1 .. xm`.
    pub components: Option<Vec<String>>,
    /// Shift the graph so that it passes through the origin at `x = 0`.
    #[serde(default)]
    pub base_point_offset: bool,
    pub potential: Option<String>,
    /// Dirichlet data for the solvers and the decay scan.
    pub boundary: Option<String>,
    /// Right-hand side of `det D²F = c`.
    pub c: Option<f64>,
    pub lattice: Option<LatticeSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    pub scan: Option<ScanSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
    pub h: f64,
    pub region: Option<Region>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub tol: f64,
    pub max_newton: usize,
    pub delta_safe: f64,
    pub max_stages: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let d = MaximalConfig::default();
        SolverSpec {
            tol: d.tol,
            max_newton: d.max_newton,
            delta_safe: d.delta_safe,
            max_stages: d.max_stages,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub radii: Vec<f64>,
    pub center: Option<Vec<f64>>,
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<String>,
    pub format: Option<Format>,
}

impl JobConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let path = match e.span() {
                Some(span) => format!("config (byte {})", span.start),
                None => "config".into(),
            };
            err(path, msg)
        })
    }

    pub fn dim(&self) -> Result<usize, ConfigError> {
        let m = self.m.ok_or_else(|| err("m", "missing"))?;
        if m == 0 {
            return Err(err("m", "must be at least 1"));
        }
        Ok(m)
    }

    fn solver_dim(&self) -> Result<usize, ConfigError> {
        let m = self.dim()?;
        if m > 3 {
            return Err(err("m", "lattice solvers support m <= 3"));
        }
        Ok(m)
    }

    pub fn graph_map(&self) -> Result<GraphMap<f64>, ConfigError> {
        let m = self.dim()?;
        let comps = self
            .components
            .as_ref()
            .ok_or_else(|| err("components", "missing (graph mode needs one expression per normal direction)"))?;
        if comps.is_empty() {
            return Err(err("components", "needs at least one expression"));
        }
        if let Some(n) = self.n {
            if n != comps.len() {
                return Err(err(
                    "components",
                    format!("has {} expressions but n = {n}", comps.len()),
                ));
            }
        }
        let exprs = comps
            .iter()
            .enumerate()
            .map(|(i, c)| parse(c, m).map_err(|e| err(format!("components[{i}]"), e.to_string())))
            .collect::<Result<Vec<Expr>, _>>()?;
        let map = GraphMap::new(m, exprs).map_err(|e| err("components", e.to_string()))?;
        if self.base_point_offset {
            map.with_base_point_offset()
                .map_err(|e| err("base_point_offset", e.to_string()))
        } else {
            Ok(map)
        }
    }

    pub fn potential(&self) -> Result<Potential<f64>, ConfigError> {
        let m = self.dim()?;
        if self.n.is_some_and(|n| n != 1) {
            return Err(err("n", "potential mode has exactly one expression"));
        }
        let text = self
            .potential
            .as_ref()
            .ok_or_else(|| err("potential", "missing"))?;
        let p = Potential::parse(m, text).map_err(|e| err("potential", e.to_string()))?;
        match self.c {
            Some(c) => Ok(p.with_target(c)),
            None => Ok(p),
        }
    }

    pub fn boundary(&self) -> Result<Expr, ConfigError> {
        let m = self.solver_dim()?;
        let text = self
            .boundary
            .as_ref()
            .ok_or_else(|| err("boundary", "missing"))?;
        parse(text, m).map_err(|e| err("boundary", e.to_string()))
    }

    pub fn lattice(&self) -> Result<Lattice, ConfigError> {
        let m = self.dim()?;
        let spec = self.lattice.as_ref().ok_or_else(|| err("lattice", "missing"))?;
        if !(spec.h > 0.0) || !spec.h.is_finite() {
            return Err(err("lattice.h", "spacing must be positive"));
        }
        if let Some(region) = &spec.region {
            check_region(region, m)?;
        }
        let lat = match (&spec.lo, &spec.hi, &spec.region) {
            (Some(lo), Some(hi), region) => {
                for (name, v) in [("lattice.lo", lo), ("lattice.hi", hi)] {
                    if v.len() != m {
                        return Err(err(name, format!("needs {m} coordinates, has {}", v.len())));
                    }
                }
                let lat = Lattice::new(lo.clone(), hi.clone(), spec.h)
                    .map_err(|e| err("lattice", e.to_string()))?;
                match region {
                    Some(r) => lat
                        .with_region(r.clone())
                        .map_err(|e| err("lattice.region", e.to_string()))?,
                    None => lat,
                }
            }
            (None, None, Some(region)) => Lattice::around(region.clone(), spec.h)
                .map_err(|e| err("lattice.region", e.to_string()))?,
            (None, None, None) => {
                return Err(err("lattice", "needs lo and hi, or a region with a center"))
            }
            (None, _, _) => return Err(err("lattice.lo", "missing")),
            (_, None, _) => return Err(err("lattice.hi", "missing")),
        };
        if lat.active_nodes().is_empty() {
            return Err(err("lattice.region", "no lattice node lies in the region"));
        }
        Ok(lat)
    }

    pub fn maximal_config(&self) -> Result<MaximalConfig, ConfigError> {
        let s = &self.solver;
        if !(s.tol > 0.0) {
            return Err(err("solver.tol", "must be positive"));
        }
        if !(s.delta_safe > 0.0 && s.delta_safe < 1.0) {
            return Err(err("solver.delta_safe", "must lie in (0, 1)"));
        }
        Ok(MaximalConfig {
            tol: s.tol,
            max_newton: s.max_newton,
            delta_safe: s.delta_safe,
            max_stages: s.max_stages,
        })
    }

    pub fn ma_config(&self) -> Result<(MaConfig, f64), ConfigError> {
        if !(self.solver.tol > 0.0) {
            return Err(err("solver.tol", "must be positive"));
        }
        let c = self.c.unwrap_or(1.0);
        if !(c > 0.0) || !c.is_finite() {
            return Err(err("c", "must be positive"));
        }
        Ok((
            MaConfig {
                tol: self.solver.tol,
                max_newton: self.solver.max_newton,
                ..MaConfig::default()
            },
            c,
        ))
    }

    pub fn decay(&self) -> Result<(Vec<f64>, DecayConfig), ConfigError> {
        let m = self.solver_dim()?;
        let scan = self.scan.as_ref().ok_or_else(|| err("scan", "missing"))?;
        if scan.radii.is_empty() {
            return Err(err("scan.radii", "needs at least one radius"));
        }
        if !(scan.radii[0] > 0.0) || scan.radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(err("scan.radii", "must be positive and strictly increasing"));
        }
        if !(scan.h > 0.0) {
            return Err(err("scan.h", "spacing must be positive"));
        }
        let center = scan.center.clone().unwrap_or_else(|| vec![0.0; m]);
        if center.len() != m {
            return Err(err("scan.center", format!("needs {m} coordinates")));
        }
        let mut cfg = DecayConfig::new(center, scan.h);
        cfg.solver = self.maximal_config()?;
        Ok((scan.radii.clone(), cfg))
    }
}

fn check_region(region: &Region, m: usize) -> Result<(), ConfigError> {
    match region {
        Region::Box => Ok(()),
        Region::Annulus { center, inner, outer } => {
            if center.len() != m {
                return Err(err("lattice.region.center", format!("needs {m} coordinates")));
            }
            if !(*inner >= 0.0 && outer > inner) {
                return Err(err("lattice.region", "needs 0 <= inner < outer"));
            }
            Ok(())
        }
        Region::Ball { center, radius } => {
            if center.len() != m {
                return Err(err("lattice.region.center", format!("needs {m} coordinates")));
            }
            if !(*radius > 0.0) {
                return Err(err("lattice.region.radius", "must be positive"));
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_annulus_job() {
        let cfg = JobConfig::from_toml(
            r#"
            m = 2
            boundary = "asinh(sqrt(x1^2 + x2^2))"
            [lattice]
            h = 0.25
            region = { kind = "annulus", center = [0.0, 0.0], inner = 0.5, outer = 2.0 }
            [solver]
            tol = 1e-9
            "#,
        )
        .unwrap();
        let lat = cfg.lattice().unwrap();
        assert_eq!(lat.counts(), &[17, 17]);
        assert_eq!(cfg.maximal_config().unwrap().tol, 1e-9);
        assert!(cfg.boundary().is_ok());
    }

    #[test]
    fn reports_field_paths() {
        let cfg = JobConfig::from_toml("m = 2\ncomponents = [\"x1\", \"y\"]\n").unwrap();
        assert_eq!(cfg.graph_map().unwrap_err().path, "components[1]");
        let cfg = JobConfig::from_toml("m = 2\n[lattice]\nlo = [0.0, 0.0]\nhi = [1.0, 1.0]\nh = -1.0\n").unwrap();
        assert_eq!(cfg.lattice().unwrap_err().path, "lattice.h");
        let cfg = JobConfig::from_toml("m = 2\n[scan]\nradii = [2.0, 1.0]\nh = 0.5\n").unwrap();
        assert_eq!(cfg.decay().unwrap_err().path, "scan.radii");
        let cfg = JobConfig::from_toml("m = 2\nn = 2\ncomponents = [\"x1\"]\n").unwrap();
        assert_eq!(cfg.graph_map().unwrap_err().path, "components");
        assert!(JobConfig::from_toml("m = 2\nbogus = 1\n").is_err());
    }
}
