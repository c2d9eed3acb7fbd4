//! The TOML run configuration. Everything is validated before any compute.
//!
//! ```toml
//! gamma = 4.0            # or: gammas = [0.25, 1.0, 2.25]
//! steps = 2              # k used by minimize, scan, dual-check
//!
//! [model]
//! coeffs = { 2 = 0.7071067811865476 }
//! k = 2                  # optional order parameter for eval, legendre, sde-check
//! q = [0.25, 0.65]
//! m = [0.45]
//!
//! [grid]
//! intervals = 1024
//!
//! [sde]
//! n_paths = 100000
//! ```

use std::path::Path;

use parisi_core::cascade::GridSpec;
use parisi_core::minimize::MinimizeOptions;
use parisi_core::sde::SdeOptions;
use parisi_core::{Error, Mixture, ModelSpec, OrderParameter};
use serde::Deserialize;

pub const DEFAULT_STEPS: usize = 3;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelSpec>,
    pub gamma: Option<f64>,
    pub gammas: Option<Vec<f64>>,
    /// Number of steps `k` of the minimized order parameters.
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub minimize: MinimizeOptions,
    #[serde(default)]
    pub legendre: LegendreSection,
    #[serde(default)]
    pub sde: SdeOptions,
    #[serde(default)]
    pub rem: RemSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LegendreSection {
    pub gamma_max: f64,
    pub duality_tol: f64,
    pub parisi_tol: f64,
}

impl Default for LegendreSection {
    fn default() -> Self {
        let d = parisi_core::LegendreOptions::default();
        Self {
            gamma_max: d.gamma_max,
            duality_tol: d.duality_tol,
            parisi_tol: d.parisi_tol,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RemSection {
    /// System sizes for the finite-N Monte Carlo; empty skips it.
    pub n: Vec<u32>,
    pub samples: usize,
}

impl Default for RemSection {
    fn default() -> Self {
        Self {
            n: Vec::new(),
            samples: 64,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Also write `levels.csv` (eval).
    pub dump_levels: bool,
}

/// A configuration with its model resolved.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub raw: RunConfig,
    pub mix: Option<Mixture>,
    pub op: Option<OrderParameter>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("reading {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Applies `--seed` to every seeded component.
    pub fn override_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    pub fn resolve(mut self) -> Result<Resolved, Error> {
        if let Some(seed) = self.seed {
            self.minimize.seed = seed;
            self.sde.seed = seed;
        }
        if let Some(g) = self.gamma {
            check_gamma(g)?;
        }
        if let Some(gs) = &self.gammas {
            if gs.is_empty() {
                return Err(Error::Config("`gammas` is empty".into()));
            }
            for &g in gs {
                check_gamma(g)?;
            }
        }
        if self.gamma.is_some() && self.gammas.is_some() {
            return Err(Error::Config(
                "give either `gamma` or `gammas`, not both".into(),
            ));
        }
        let (mix, op) = match &self.model {
            Some(spec) => (Some(spec.mixture()?), spec.order_parameter()?),
            None => (None, None),
        };
        if let Some(mix) = &mix {
            // Catches a too-narrow explicit grid before any long computation.
            for g in self.temperatures() {
                self.grid.resolve(mix, g)?;
            }
        }
        Ok(Resolved { raw: self, mix, op })
    }

    /// `gamma` or `gammas`, in the order given.
    pub fn temperatures(&self) -> Vec<f64> {
        match (&self.gamma, &self.gammas) {
            (Some(g), _) => vec![*g],
            (None, Some(gs)) => gs.clone(),
            _ => Vec::new(),
        }
    }
}

fn check_gamma(g: f64) -> Result<(), Error> {
    if g.is_finite() && g >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidTemperature(g))
    }
}

impl Resolved {
    pub fn mixture(&self) -> Result<&Mixture, Error> {
        self.mix
            .as_ref()
            .ok_or_else(|| Error::Config("this command needs a [model] section".into()))
    }

    pub fn order_parameter(&self) -> Result<&OrderParameter, Error> {
        self.op
            .as_ref()
            .ok_or_else(|| Error::Config("this command needs `k`, `q` and `m` in [model]".into()))
    }

    pub fn temperatures(&self) -> Result<Vec<f64>, Error> {
        let t = self.raw.temperatures();
        if t.is_empty() {
            Err(Error::Config(
                "this command needs `gamma` or `gammas`".into(),
            ))
        } else {
            Ok(t)
        }
    }

    pub fn steps(&self) -> usize {
        self.raw.steps.unwrap_or(DEFAULT_STEPS)
    }

    pub fn legendre_options(&self) -> parisi_core::LegendreOptions {
        let l = self.raw.legendre;
        parisi_core::LegendreOptions {
            gamma_max: l.gamma_max,
            duality_tol: l.duality_tol,
            parisi_tol: l.parisi_tol,
            grid: self.raw.grid,
            minimize: MinimizeOptions {
                grid: self.raw.grid,
                ..self.raw.minimize
            },
            ..Default::default()
        }
    }

    pub fn minimize_options(&self) -> MinimizeOptions {
        MinimizeOptions {
            grid: self.raw.grid,
            ..self.raw.minimize
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unknown_keys() {
        assert!(RunConfig::from_toml("gama = 1.0").is_err());
        assert!(RunConfig::from_toml("[grid]\nintervalz = 3").is_err());
        assert!(RunConfig::from_toml("[model]\ncoeffs = { 2 = 1.0 }\nextra = 1").is_err());
    }

    #[test]
    fn resolves_model_and_seed() {
        let mut c = RunConfig::from_toml(
            "gamma = 1.0\nseed = 9\n[model]\ncoeffs = { 2 = 0.7071067811865476 }\nk = 1\nq = [0.5]\nm = []",
        )
        .unwrap();
        c.override_seed(4);
        let r = c.resolve().unwrap();
        assert_eq!(r.raw.minimize.seed, 4);
        assert_eq!(r.order_parameter().unwrap().k(), 1);
        assert_eq!(r.temperatures().unwrap(), vec![1.0]);
    }

    #[test]
    fn both_gamma_forms_conflict() {
        let c = RunConfig::from_toml("gamma = 1.0\ngammas = [1.0]").unwrap();
        assert!(c.resolve().is_err());
        let c = RunConfig::from_toml("gamma = -1.0").unwrap();
        assert!(matches!(c.resolve(), Err(Error::InvalidTemperature(_))));
    }
}
